//! Elementary inequalities used in the analysis of the energy: Lipschitz
//! bounds for the area element and the periodic Sobolev/Poincaré embeddings.
//! Every check returns a slack (`rhs - lhs`); a negative slack is a violation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{self, integrate_squares, l2_norm, random_band_limited, GridFunction};

/// Lipschitz constants of `sqrt(1+ξ²)`, `ξ/sqrt(1+ξ²)`, `1/sqrt(1+ξ²)³`,
/// `ξ/sqrt(1+ξ²)⁵` in that order.
pub const AREA_LIPSCHITZ_CONSTANTS: [f64; 4] = [1.0, 1.0, 3.0, 15.0];

/// Slacks `C_i |ξ - η| - |f_i(ξ) - f_i(η)|` for the four area-element bounds.
pub fn area_element_slacks(xi: f64, eta: f64) -> [f64; 4] {
    let f = |s: f64| {
        let v = (1.0 + s * s).sqrt();
        [v, s / v, 1.0 / (v * v * v), s / v.powi(5)]
    };
    let a = f(xi);
    let b = f(eta);
    let d = (xi - eta).abs();
    std::array::from_fn(|i| AREA_LIPSCHITZ_CONSTANTS[i] * d - (a[i] - b[i]).abs())
}

/// `‖f_x‖ - sup |f - mean f|` for periodic samples `f` (any mean).
pub fn oscillation_embedding_slack(f: &[f64]) -> f64 {
    let m = grid::mean(f);
    let sup = f.iter().fold(0.0_f64, |acc, v| acc.max((v - m).abs()));
    l2_norm(&grid::derivative(f)) - sup
}

/// `‖u_x‖ - sup |u|` for zero-mean `u`.
pub fn x_embedding_slack(u: &GridFunction) -> f64 {
    l2_norm(&u.derivative()) - u.sup_norm()
}

/// Slacks of `sup |u_x| ≤ ‖u_xx‖ + ‖u_x‖ ≤ √2 ‖u‖_{H²}`.
pub fn y_embedding_slacks(u: &GridFunction) -> (f64, f64) {
    let ux = u.derivative();
    let uxx = u.second_derivative();
    let sup = ux.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let middle = l2_norm(&uxx) + l2_norm(&ux);
    (middle - sup, 2f64.sqrt() * u.h2_norm() - middle)
}

/// `∫ f_xx² - ∫ f_x²` for periodic samples `f`.
pub fn periodic_poincare_slack(f: &[f64]) -> f64 {
    integrate_squares(&grid::second_derivative(f)) - integrate_squares(&grid::derivative(f))
}

/// Outcome of one sampled inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub samples: usize,
    pub min_slack: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl InequalityCheck {
    fn from_slacks(name: &str, slacks: impl IntoIterator<Item = f64>, tolerance: f64) -> Self {
        let mut samples = 0;
        let mut min_slack = f64::INFINITY;
        for s in slacks {
            samples += 1;
            min_slack = min_slack.min(s);
        }
        Self {
            name: name.to_string(),
            samples,
            min_slack,
            tolerance,
            passed: min_slack >= -tolerance,
        }
    }
}

/// Sample counts for [`run_inequality_suite`].
#[derive(Debug, Clone, Copy)]
pub struct SuiteSizes {
    pub lipschitz_pairs: usize,
    pub functions: usize,
    pub n: usize,
    pub max_mode: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            lipschitz_pairs: 10_000,
            functions: 200,
            n: 128,
            max_mode: 24,
        }
    }
}

/// Slack tolerance for the function-space inequalities.
pub const EMBEDDING_TOLERANCE: f64 = 1e-8;

/// Run every elementary inequality on random data.
pub fn run_inequality_suite<R: Rng + ?Sized>(
    rng: &mut R,
    sizes: SuiteSizes,
) -> Result<Vec<InequalityCheck>> {
    let pairs: Vec<[f64; 4]> = (0..sizes.lipschitz_pairs)
        .map(|_| {
            let xi = rng.gen_range(-100.0..100.0);
            let eta = rng.gen_range(-100.0..100.0);
            area_element_slacks(xi, eta)
        })
        .collect();
    let names = [
        "area_lipschitz_sqrt",
        "area_lipschitz_slope",
        "area_lipschitz_inverse_cube",
        "area_lipschitz_fifth",
    ];
    let mut checks: Vec<InequalityCheck> = names
        .iter()
        .enumerate()
        .map(|(i, name)| InequalityCheck::from_slacks(name, pairs.iter().map(|s| s[i]), 0.0))
        .collect();

    let mut zero_mean = Vec::with_capacity(sizes.functions);
    let mut periodic = Vec::with_capacity(sizes.functions);
    for _ in 0..sizes.functions {
        let amplitude = 10f64.powf(rng.gen_range(-2.0..1.0));
        let modes = rng.gen_range(1..=sizes.max_mode);
        let u = random_band_limited(rng, sizes.n, modes, amplitude)?;
        let offset = rng.gen_range(-5.0..5.0);
        let shifted: Vec<f64> = u.values().iter().map(|v| v + offset).collect();
        zero_mean.push(u);
        periodic.push(shifted);
    }

    checks.push(InequalityCheck::from_slacks(
        "sobolev_oscillation",
        periodic.iter().map(|f| oscillation_embedding_slack(f)),
        EMBEDDING_TOLERANCE,
    ));
    checks.push(InequalityCheck::from_slacks(
        "sobolev_x",
        zero_mean.iter().map(x_embedding_slack),
        EMBEDDING_TOLERANCE,
    ));
    let y: Vec<(f64, f64)> = zero_mean.iter().map(y_embedding_slacks).collect();
    checks.push(InequalityCheck::from_slacks(
        "sobolev_y_slope",
        y.iter().map(|s| s.0),
        EMBEDDING_TOLERANCE,
    ));
    checks.push(InequalityCheck::from_slacks(
        "sobolev_y_h2",
        y.iter().map(|s| s.1),
        EMBEDDING_TOLERANCE,
    ));
    checks.push(InequalityCheck::from_slacks(
        "periodic_poincare",
        periodic.iter().map(|f| periodic_poincare_slack(f)),
        EMBEDDING_TOLERANCE,
    ));
    checks.push(InequalityCheck::from_slacks(
        "x_norm_below_y_norm",
        zero_mean.iter().map(|u| {
            let v = grid::XVector::new(u.clone(), 0.0);
            grid::y_norm(&v) - grid::x_norm(&v)
        }),
        EMBEDDING_TOLERANCE,
    ));
    Ok(checks)
}
