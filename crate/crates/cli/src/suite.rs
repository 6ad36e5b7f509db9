//! `verify-suite`: the full property battery on built-in scenarios.

use std::f64::consts::PI;
use std::path::Path;

use grainflow_core::analysis::{fit_ls_exponent, ls_samples, verify_ls_inequality, C2_FLOOR};
use grainflow_core::bounds::{run_inequality_suite, SuiteSizes};
use grainflow_core::flow::{gradient_bound_check, sine_profile};
use grainflow_core::grid::random_band_limited;
use grainflow_core::sigma::find_critical_points;
use grainflow_core::{
    energy, evolve, frechet_derivative, gateaux_second_derivative, CriticalSet, EnergyGradient,
    FlowParams, GridFunction, LsSampling, SigmaModel, State, XVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::report::{Check, OutputError, Summary};
use crate::scenario::{
    ENERGY_MONOTONE_TOLERANCE, LS_MIN_SAMPLES, LS_R_SQUARED, MEAN_TOLERANCE, THETA_RANGE,
};

/// Grid size of the derivative and LS checks.
const N: usize = 64;
const FD_STEP: f64 = 1e-6;
const FD_TOLERANCE: f64 = 1e-5;
const FD_CASES: usize = 100;
const IDENTITY_CASES: usize = 50;
const IDENTITY_TOLERANCE: f64 = 1e-12;

fn families() -> [SigmaModel; 3] {
    [
        SigmaModel::default(),
        SigmaModel::QuadraticConvex {
            base: 1.0,
            curvature: 2.0,
        },
        SigmaModel::Constant { value: 1.3 },
    ]
}

fn random_point(rng: &mut ChaCha8Rng) -> (GridFunction, f64, GridFunction, f64) {
    let modes = rng.gen_range(1..=8);
    let (au, ah) = (rng.gen_range(0.01..0.5), rng.gen_range(0.01..0.5));
    let u = random_band_limited(rng, N, modes, au).expect("valid grid");
    let h = random_band_limited(rng, N, modes, ah).expect("valid grid");
    (u, rng.gen_range(-1.0..1.0), h, rng.gen_range(-1.0..1.0))
}

fn first_variation_error(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..FD_CASES {
        let m = families()[i % 3];
        let (u, a, h, b) = random_point(rng);
        let exact = frechet_derivative(&u, a, &m)
            .pair(&XVector::new(h.clone(), b))
            .expect("matching grids");
        let e = |s: f64| energy(&u.add_scaled(s, &h).expect("matching grids"), a + s * b, &m);
        let fd = (e(FD_STEP) - e(-FD_STEP)) / (2.0 * FD_STEP);
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    worst
}

fn second_variation_error(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..FD_CASES {
        let m = families()[i % 3];
        let (u, a, h, b) = random_point(rng);
        let exact = gateaux_second_derivative(&u, a, &h, b, &m).expect("matching grids");
        let g = |s: f64| {
            frechet_derivative(&u.add_scaled(s, &h).expect("matching grids"), a + s * b, &m)
        };
        let diff = g(FD_STEP).sub(&g(-FD_STEP)).expect("matching grids");
        let fd = EnergyGradient {
            u_part: diff.u_part.scaled(0.5 / FD_STEP),
            alpha_part: diff.alpha_part * 0.5 / FD_STEP,
        };
        let err = fd.sub(&exact).expect("matching grids").x_norm() / exact.x_norm();
        worst = worst.max(err);
    }
    worst
}

/// Non-degenerate equilibria of the three families in `[-1, 1]`; a constant
/// `σ` contributes one representative point.
fn equilibria() -> Vec<(SigmaModel, f64)> {
    let mut out = Vec::new();
    for m in families() {
        match find_critical_points(&m, -1.0, 1.0).expect("valid interval") {
            CriticalSet::All => out.push((m, 0.37)),
            CriticalSet::Points(p) => {
                out.extend(p.iter().filter(|c| !c.degenerate).map(|c| (m, c.alpha_bar)))
            }
        }
    }
    out
}

fn identity_error(rng: &mut ChaCha8Rng, m: &SigmaModel, alpha_bar: f64) -> f64 {
    let zero = GridFunction::zeros(N).expect("valid grid");
    let mut worst: f64 = 0.0;
    for _ in 0..IDENTITY_CASES {
        let amp = rng.gen_range(0.01..1.0);
        let h = random_band_limited(rng, N, 8, amp).expect("valid grid");
        let beta = rng.gen_range(-1.0..1.0);
        let d = gateaux_second_derivative(&zero, alpha_bar, &h, beta, m).expect("matching grids");
        let expect = EnergyGradient {
            u_part: h.scaled(m.value(alpha_bar)),
            alpha_part: m.d2(alpha_bar) * beta,
        };
        worst = worst.max(d.sub(&expect).expect("matching grids").x_norm());
    }
    worst
}

fn ls_fit_checks(
    summary: &mut Summary,
    rng: &mut ChaCha8Rng,
    label: &str,
    m: &SigmaModel,
    alpha_bar: f64,
) {
    let eq = State::new(GridFunction::zeros(N).expect("valid grid"), alpha_bar);
    let fit = ls_samples(rng, &eq, m, &LsSampling::default())
        .and_then(|s| fit_ls_exponent(&s).map(|f| (f, verify_ls_inequality(&s, &f))));
    let (fit, verified) = match fit {
        Ok(v) => v,
        Err(e) => {
            log::error!("ls fit {label}: {e}");
            summary.push(Check::holds(
                &format!("ls_{label}_fit"),
                "ls_inequality",
                false,
            ));
            return;
        }
    };
    summary.push(Check::at_least(
        &format!("ls_{label}_samples"),
        "ls_inequality",
        fit.n_points as f64,
        LS_MIN_SAMPLES as f64,
    ));
    summary.push(Check::at_least(
        &format!("ls_{label}_theta_lower"),
        "ls_inequality",
        fit.raw_theta(),
        THETA_RANGE.0,
    ));
    summary.push(Check::at_most(
        &format!("ls_{label}_theta_upper"),
        "ls_inequality",
        fit.raw_theta(),
        THETA_RANGE.1,
    ));
    summary.push(Check::at_least(
        &format!("ls_{label}_r_squared"),
        "ls_inequality",
        fit.r_squared,
        LS_R_SQUARED,
    ));
    summary.push(Check::at_least(
        &format!("ls_{label}_constant"),
        "ls_inequality",
        fit.c_constant,
        C2_FLOOR,
    ));
    summary.push(Check::holds(
        &format!("ls_{label}_inequality"),
        "ls_inequality",
        verified,
    ));
    summary.report(
        &format!("ls_{label}"),
        &json!({ "alpha_bar": alpha_bar, "fit": fit }),
    );
}

fn flow_checks(summary: &mut Summary) {
    let m = SigmaModel::default();
    let n = 64;
    let params = FlowParams::at_cfl(1.0, 1.0, n, 0.05, &m, 0.3);
    let u0 = sine_profile(n, 0.3, 1).expect("valid grid");
    let traj = match evolve(&State::new(u0, 0.3), &m, &params) {
        Ok(t) => t,
        Err(e) => {
            log::error!("suite flow: {e}");
            summary.push(Check::holds("flow_completed", "flow_well_posed", false));
            return;
        }
    };
    summary.push(Check::at_most(
        "flow_energy_monotone",
        "energy_non_increasing",
        traj.max_energy_increase().max(0.0),
        ENERGY_MONOTONE_TOLERANCE,
    ));
    summary.push(Check::at_most(
        "flow_mean_conserved",
        "zero_mean_preserved",
        traj.max_abs_mean(),
        MEAN_TOLERANCE,
    ));
    if let Ok(r) = gradient_bound_check(&traj, &m) {
        summary.push(Check::at_most(
            "flow_area_element_bound",
            "gradient_estimate",
            r.max_sup_v,
            r.area_bound,
        ));
        summary.push(Check::at_most(
            "flow_slope_maximum_principle",
            "gradient_bounds_maximum_principle",
            r.max_sup_ux_sq,
            r.slope_bound,
        ));
    }
}

/// Run the suite with a single RNG stream seeded by `seed`.
pub fn verify_suite(seed: u64) -> Summary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = Summary::new("verify-suite", seed);

    log::info!("verify-suite: inequalities");
    match run_inequality_suite(&mut rng, SuiteSizes::default()) {
        Ok(checks) => {
            for c in &checks {
                summary.push(Check::at_least(
                    &format!("inequality_{}", c.name),
                    &c.name,
                    c.min_slack,
                    0.0 - c.tolerance,
                ));
            }
            summary.report("inequalities", &checks);
        }
        Err(e) => {
            log::error!("inequality suite: {e}");
            summary.push(Check::holds(
                "inequality_suite",
                "auxiliary_inequalities",
                false,
            ));
        }
    }

    log::info!("verify-suite: derivative checks");
    summary.push(Check::at_most(
        "first_variation_fd",
        "energy_first_variation",
        first_variation_error(&mut rng),
        FD_TOLERANCE,
    ));
    summary.push(Check::at_most(
        "second_variation_fd",
        "energy_second_variation",
        second_variation_error(&mut rng),
        FD_TOLERANCE,
    ));

    for (m, ab) in equilibria() {
        let err = identity_error(&mut rng, &m, ab);
        summary.push(Check::at_most(
            &format!("critical_identity_{}_{ab:.6}", m.name()),
            "second_variation_at_critical_point",
            err,
            IDENTITY_TOLERANCE,
        ));
    }

    log::info!("verify-suite: LS fits");
    let fits = [
        ("trig_0", SigmaModel::default(), 0.0),
        ("trig_quarter_pi", SigmaModel::default(), PI / 4.0),
        ("quadratic_0", families()[1], 0.0),
        ("constant", families()[2], 0.37),
    ];
    for (label, m, ab) in fits {
        ls_fit_checks(&mut summary, &mut rng, label, &m, ab);
    }

    log::info!("verify-suite: short flow");
    flow_checks(&mut summary);
    summary
}

/// Run the suite and write `summary.json` into `dir`.
pub fn run_verify_suite(seed: u64, dir: &Path) -> Result<Summary, OutputError> {
    let summary = verify_suite(seed);
    summary.write(dir)?;
    Ok(summary)
}
