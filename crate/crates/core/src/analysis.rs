//! Empirical Łojasiewicz–Simon analysis near an equilibrium `(0, ᾱ)`: sampling
//! and log–log fitting of `‖Ė‖_Y ≥ C₂ |E - E*|^(1-θ)`, and the two estimates
//! built on it (stability of the trajectory and the length bound).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{critical_manifold_check, energy_gap, frechet_derivative};
use crate::error::{Error, Result};
use crate::flow::{Diagnostics, State, Trajectory};
use crate::grid::{self, random_band_limited, GridFunction, XVector};
use crate::sigma::SigmaModel;

/// Gaps below this are dropped from every log-domain computation.
pub const GAP_FLOOR: f64 = 1e-14;

/// Smallest sample set [`fit_ls_exponent`] accepts.
pub const MIN_FIT_SAMPLES: usize = 20;

/// Lower bound asserted on the fitted `C₂`.
pub const C2_FLOOR: f64 = 1e-6;

/// Slack allowed by [`length_estimate_check`].
pub const LENGTH_ESTIMATE_TOLERANCE: f64 = 1e-12;

/// Minimum number of tail records for [`decay_classifier`].
pub const MIN_TAIL_RECORDS: usize = 100;

/// `r²` a decay model needs before it is reported.
pub const DECAY_R_SQUARED: f64 = 0.95;

/// Which components of `(u, α)` a sample perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `(0, ᾱ + β)`.
    Alpha,
    /// `(h, ᾱ)`.
    Profile,
    /// `(h, ᾱ + β)` with both parts random.
    Joint,
}

/// Sampling plan for [`ls_samples`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsSampling {
    /// `Y`-radius of the neighborhood.
    pub radius: f64,
    pub count: usize,
    /// Highest Fourier mode in profile perturbations.
    pub max_mode: usize,
    /// Perturbation sizes are log-uniform in `[radius 10^-decades, radius]`.
    pub decades: f64,
    pub perturbation: Perturbation,
}

impl Default for LsSampling {
    fn default() -> Self {
        Self {
            radius: 0.1,
            count: 400,
            max_mode: 4,
            decades: 5.0,
            perturbation: Perturbation::Joint,
        }
    }
}

impl LsSampling {
    fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidFlowParams {
                field,
                reason: reason.into(),
            })
        };
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad("radius", "must be positive and finite");
        }
        if !(self.decades.is_finite() && self.decades >= 0.0) {
            return bad("decades", "must be non-negative and finite");
        }
        if self.max_mode == 0 {
            return bad("max_mode", "must be at least 1");
        }
        Ok(())
    }
}

/// One sampled point of the LS inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsSample {
    pub grad_y_norm: f64,
    pub energy_gap: f64,
    /// `Y`-distance of the sample from the equilibrium.
    pub distance: f64,
}

fn require_critical(equilibrium: &State, model: &SigmaModel) -> Result<()> {
    if critical_manifold_check(&equilibrium.u, equilibrium.alpha, model) {
        Ok(())
    } else {
        Err(Error::NotCritical(format!(
            "|u|_H2 = {:e}, sigma'(alpha) = {:e}",
            equilibrium.u.h2_norm(),
            model.d1(equilibrium.alpha)
        )))
    }
}

/// Draw `plan.count` perturbations of the equilibrium inside the `Y`-ball of
/// radius `plan.radius` and return `(‖Ė‖_Y, |E - E*|)` for each. Samples
/// whose gap falls below [`GAP_FLOOR`] are discarded.
pub fn ls_samples<R: Rng + ?Sized>(
    rng: &mut R,
    equilibrium: &State,
    model: &SigmaModel,
    plan: &LsSampling,
) -> Result<Vec<LsSample>> {
    require_critical(equilibrium, model)?;
    plan.validate()?;
    let n = equilibrium.n();
    let alpha_bar = equilibrium.alpha;
    let mut out = Vec::with_capacity(plan.count);
    for _ in 0..plan.count {
        let (perturb_u, perturb_alpha) = match plan.perturbation {
            Perturbation::Alpha => (false, true),
            Perturbation::Profile => (true, false),
            Perturbation::Joint => (true, true),
        };
        let h = if perturb_u {
            random_band_limited(rng, n, plan.max_mode, 1.0)?
        } else {
            GridFunction::zeros(n)?
        };
        let beta = if perturb_alpha {
            let b: f64 = rng.gen_range(0.1..1.0);
            if rng.gen_bool(0.5) {
                b
            } else {
                -b
            }
        } else {
            0.0
        };
        let dir_norm = grid::y_norm(&XVector::new(h.clone(), beta));
        let size = plan.radius * 10f64.powf(-rng.gen_range(0.0..=plan.decades));
        let scale = size / dir_norm;
        let u = h.scaled(scale);
        let alpha = alpha_bar + beta * scale;

        let gap = energy_gap(&u, alpha, alpha_bar, model).abs();
        if gap.is_nan() || gap < GAP_FLOOR {
            continue;
        }
        let grad = frechet_derivative(&u, alpha, model).y_norm();
        let distance = grid::y_norm(&XVector::new(u, alpha - alpha_bar));
        out.push(LsSample {
            grad_y_norm: grad,
            energy_gap: gap,
            distance,
        });
    }
    Ok(out)
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares. Needs two or more points with distinct `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "regression needs two or more paired points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "regression abscissae are all equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Fitted LS exponent and constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsFit {
    /// `1 - slope`, clamped to `(0, 1/2]`.
    pub theta: f64,
    /// Regression slope of `log ‖Ė‖_Y` on `log gap`, before clamping.
    pub slope: f64,
    /// `C₂ = min ‖Ė‖_Y / gap^(1-θ)` over the samples.
    pub c_constant: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Largest `Y`-distance among the samples.
    pub neighborhood_radius: f64,
}

impl LsFit {
    /// `θ` before clamping.
    pub fn raw_theta(&self) -> f64 {
        1.0 - self.slope
    }

    /// Exponent `γ = 1 / (2 (1 - θ))` of the length estimate.
    pub fn length_exponent(&self) -> f64 {
        0.5 / (1.0 - self.theta)
    }

    /// `C₅ = 2^γ / C₂^(1-θ)`.
    pub fn length_constant(&self) -> f64 {
        2f64.powf(self.length_exponent()) / self.c_constant.powf(1.0 - self.theta)
    }
}

pub fn fit_ls_exponent(samples: &[LsSample]) -> Result<LsFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "LS fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !samples
        .iter()
        .all(|s| ok(s.grad_y_norm) && ok(s.energy_gap))
    {
        return Err(Error::NonFinite("LS samples"));
    }
    let x: Vec<f64> = samples.iter().map(|s| s.energy_gap.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.grad_y_norm.ln()).collect();
    let line = linear_regression(&x, &y)?;
    let theta = (1.0 - line.slope).clamp(f64::EPSILON, 0.5);
    let c_constant = samples
        .iter()
        .map(|s| s.grad_y_norm / s.energy_gap.powf(1.0 - theta))
        .fold(f64::INFINITY, f64::min);
    Ok(LsFit {
        theta,
        slope: line.slope,
        c_constant,
        r_squared: line.r_squared,
        n_points: samples.len(),
        neighborhood_radius: samples.iter().fold(0.0, |m, s| m.max(s.distance)),
    })
}

/// Whether `‖Ė‖_Y ≥ C₂ gap^(1-θ)` on every sample. A few ulps of slack
/// absorb the rounding in `C₂` itself.
pub fn verify_ls_inequality(samples: &[LsSample], fit: &LsFit) -> bool {
    let slack = 1.0 - 8.0 * f64::EPSILON;
    samples
        .iter()
        .all(|s| s.grad_y_norm >= slack * fit.c_constant * s.energy_gap.powf(1.0 - fit.theta))
}

/// `E - E*` at a recorded time.
pub fn record_gap(d: &Diagnostics, alpha_bar: f64, model: &SigmaModel) -> f64 {
    model.difference(d.alpha, alpha_bar) * (1.0 + d.length_excess)
        + model.value(alpha_bar) * d.length_excess
}

fn y_distance(d: &Diagnostics, alpha_bar: f64) -> f64 {
    d.u_y_norm.hypot(d.alpha - alpha_bar)
}

/// Empirical constant of `|α(t) - α(s)|, ‖u(t) - u(s)‖ ≤ C₃ |E(t) - E*|^θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub theta: f64,
    /// `max(c3_alpha, c3_u)`.
    pub c3: f64,
    /// Worst ratio over all record pairs for the `α` distance.
    pub c3_alpha: f64,
    /// Worst ratio over snapshot pairs for the `L²` distance of `u`.
    pub c3_u: f64,
    /// Records with gap above [`GAP_FLOOR`] that entered the maximum.
    pub records_used: usize,
    /// No usable gap: the trajectory sits on the equilibrium.
    pub degenerate: bool,
}

/// Minimal `C₃` for which the stability estimate holds on every recorded
/// pair `t < s`. The `u`-distance needs full states, so its pairs are taken
/// over the trajectory's snapshots.
pub fn stability_check(
    traj: &Trajectory,
    equilibrium: &State,
    theta: f64,
    model: &SigmaModel,
) -> Result<StabilityReport> {
    require_critical(equilibrium, model)?;
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidFlowParams {
            field: "theta",
            reason: format!("must be positive, got {theta}"),
        });
    }
    let d = &traj.diagnostics;
    if d.len() < 2 {
        return Err(Error::InsufficientData(
            "stability check needs at least two records".into(),
        ));
    }
    let alpha_bar = equilibrium.alpha;
    let degenerate = StabilityReport {
        theta,
        c3: 0.0,
        c3_alpha: 0.0,
        c3_u: 0.0,
        records_used: 0,
        degenerate: true,
    };
    let start = y_distance(&d[0], alpha_bar);
    let end = y_distance(&d[d.len() - 1], alpha_bar);
    if start == 0.0 {
        return Ok(degenerate);
    }
    if end > 0.1 * start {
        return Err(Error::NotConvergent(format!(
            "final Y-distance {end:e} exceeds a tenth of the initial {start:e}"
        )));
    }

    let gaps: Vec<f64> = d.iter().map(|r| record_gap(r, alpha_bar, model)).collect();
    let usable = |g: f64| g >= GAP_FLOOR;

    // sup_{s > t} |α(t) - α(s)| from suffix extrema
    let mut c3_alpha: f64 = 0.0;
    let mut used = 0;
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for i in (0..d.len()).rev() {
        let a = d[i].alpha;
        if hi >= lo && usable(gaps[i]) {
            let spread = (hi - a).max(a - lo);
            c3_alpha = c3_alpha.max(spread / gaps[i].powf(theta));
            used += 1;
        }
        hi = hi.max(a);
        lo = lo.min(a);
    }

    let mut c3_u: f64 = 0.0;
    let snaps = &traj.snapshots;
    for (p, sp) in snaps.iter().enumerate() {
        let g = gaps[sp.record];
        if !usable(g) {
            continue;
        }
        let scale = g.powf(theta);
        for sq in &snaps[p + 1..] {
            let diff: Vec<f64> = sp
                .state
                .u
                .values()
                .iter()
                .zip(sq.state.u.values())
                .map(|(a, b)| a - b)
                .collect();
            c3_u = c3_u.max(grid::l2_norm(&diff) / scale);
        }
    }

    if used == 0 {
        return Ok(degenerate);
    }
    Ok(StabilityReport {
        theta,
        c3: c3_alpha.max(c3_u),
        c3_alpha,
        c3_u,
        records_used: used,
        degenerate: false,
    })
}

/// Both sides of `σ(α) L ≤ σ(ᾱ) + C₅ (σ(α)² ‖w_x‖² + σ'(α)² L²)^γ` with
/// `w = u_x / sqrt(1 + u_x²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub length: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`, evaluated from the energy gap so it keeps its precision.
    pub slack: f64,
    pub holds: bool,
}

fn length_report(
    alpha: f64,
    length_excess: f64,
    curvature_sq: f64,
    alpha_bar: f64,
    model: &SigmaModel,
    gamma_exp: f64,
    c5: f64,
) -> LengthReport {
    let length = 1.0 + length_excess;
    let sigma = model.value(alpha);
    let sigma1 = model.d1(alpha);
    let base = sigma * sigma * curvature_sq + sigma1 * sigma1 * length * length;
    let bound = c5 * base.powf(gamma_exp);
    let gap = model.difference(alpha, alpha_bar) * length + model.value(alpha_bar) * length_excess;
    let slack = bound - gap;
    LengthReport {
        length,
        lhs: sigma * length,
        rhs: model.value(alpha_bar) + bound,
        slack,
        holds: slack >= -LENGTH_ESTIMATE_TOLERANCE,
    }
}

/// Evaluate the length estimate at `(u, α)`.
pub fn length_estimate_check(
    u: &GridFunction,
    alpha: f64,
    equilibrium: &State,
    model: &SigmaModel,
    gamma_exp: f64,
    c5: f64,
) -> LengthReport {
    let ux = u.derivative();
    let w: Vec<f64> = ux.iter().map(|s| s / (1.0 + s * s).sqrt()).collect();
    let curvature_sq = grid::integrate_squares(&grid::derivative(&w));
    length_report(
        alpha,
        crate::energy::length_excess(u),
        curvature_sq,
        equilibrium.alpha,
        model,
        gamma_exp,
        c5,
    )
}

/// Length estimate at every record whose `Y`-distance from the equilibrium
/// is at most `radius`. Returns `(record index, report)` pairs.
pub fn length_estimate_along(
    traj: &Trajectory,
    equilibrium: &State,
    model: &SigmaModel,
    radius: f64,
    gamma_exp: f64,
    c5: f64,
) -> Vec<(usize, LengthReport)> {
    let alpha_bar = equilibrium.alpha;
    traj.diagnostics
        .iter()
        .enumerate()
        .filter(|(_, d)| y_distance(d, alpha_bar) <= radius)
        .map(|(i, d)| {
            let r = length_report(
                d.alpha,
                d.length_excess,
                d.curvature_sq,
                alpha_bar,
                model,
                gamma_exp,
                c5,
            );
            (i, r)
        })
        .collect()
}

/// Decay law of the energy gap along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayClass {
    /// `gap ~ exp(-rate t)`.
    Exponential {
        rate: f64,
        r_squared: f64,
    },
    /// `gap ~ t^(-power)`.
    Algebraic {
        power: f64,
        r_squared: f64,
    },
    Undetermined,
}

/// Compare exponential and algebraic fits of the gap over the second half
/// of the run (records with gap above [`GAP_FLOOR`] only).
pub fn decay_classifier(
    traj: &Trajectory,
    equilibrium: &State,
    model: &SigmaModel,
) -> Result<DecayClass> {
    let (Some(&t0), Some(&t1)) = (traj.times.first(), traj.times.last()) else {
        return Err(Error::InsufficientData("empty trajectory".into()));
    };
    let mid = 0.5 * (t0 + t1);
    let window: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.diagnostics)
        .filter(|(t, _)| **t >= mid && **t > 0.0)
        .map(|(t, d)| (*t, record_gap(d, equilibrium.alpha, model)))
        .collect();
    if window.len() < MIN_TAIL_RECORDS {
        return Err(Error::InsufficientData(format!(
            "decay classification needs {MIN_TAIL_RECORDS} tail records, got {}",
            window.len()
        )));
    }
    let tail: Vec<(f64, f64)> = window
        .into_iter()
        .filter(|(_, g)| *g >= GAP_FLOOR)
        .collect();
    if tail.is_empty() {
        return Ok(DecayClass::Undetermined);
    }
    if tail.len() < MIN_TAIL_RECORDS {
        return Err(Error::InsufficientData(format!(
            "only {} tail records have a gap above {GAP_FLOOR:e}",
            tail.len()
        )));
    }
    let t: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let log_t: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let log_gap: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    let exp = linear_regression(&t, &log_gap)?;
    let alg = linear_regression(&log_t, &log_gap)?;
    if exp.r_squared < DECAY_R_SQUARED && alg.r_squared < DECAY_R_SQUARED {
        return Ok(DecayClass::Undetermined);
    }
    Ok(if exp.r_squared >= alg.r_squared {
        DecayClass::Exponential {
            rate: -exp.slope,
            r_squared: exp.r_squared,
        }
    } else {
        DecayClass::Algebraic {
            power: -alg.slope,
            r_squared: alg.r_squared,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{evolve, FlowParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn flat(n: usize, alpha: f64) -> State {
        State::new(GridFunction::zeros(n).unwrap(), alpha)
    }

    #[test]
    fn regression_recovers_a_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let f = linear_regression(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 3.0).abs() < 1e-13);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(linear_regression(&[1.0, 1.0], &[0.0, 2.0]).is_err());
    }

    #[test]
    fn samples_require_a_critical_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = SigmaModel::default();
        let err = ls_samples(&mut rng, &flat(64, 0.3), &m, &LsSampling::default());
        assert!(matches!(err, Err(Error::NotCritical(_))));
    }

    #[test]
    fn samples_stay_in_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = SigmaModel::default();
        let plan = LsSampling {
            count: 60,
            ..Default::default()
        };
        let s = ls_samples(&mut rng, &flat(64, 0.0), &m, &plan).unwrap();
        assert!(!s.is_empty());
        for p in &s {
            assert!(p.distance <= plan.radius * (1.0 + 1e-12));
            assert!(p.energy_gap >= GAP_FLOOR);
        }
    }

    #[test]
    fn pure_alpha_ratio_is_scale_free() {
        // gap ≈ σ''/2 δ², ‖Ė‖ ≈ |σ''| δ: the ratio to gap^(1/2) is sqrt(2 |σ''|)
        let m = SigmaModel::default();
        let u = GridFunction::zeros(32).unwrap();
        let expect = (2.0 * m.d2(0.0).abs()).sqrt();
        for d in [1e-2, 1e-3, 1e-4, 1e-5] {
            let g = energy_gap(&u, d, 0.0, &m);
            let grad = frechet_derivative(&u, d, &m).y_norm();
            let r = grad / g.sqrt();
            assert!((r / expect - 1.0).abs() < 0.1, "δ = {d}: {r} vs {expect}");
        }
    }

    #[test]
    fn fit_rejects_bad_input() {
        let s = LsSample {
            grad_y_norm: 1.0,
            energy_gap: 1.0,
            distance: 0.1,
        };
        assert!(fit_ls_exponent(&[s; 5]).is_err());
        let mut v = vec![s; 30];
        v[3].grad_y_norm = f64::NAN;
        assert!(matches!(fit_ls_exponent(&v), Err(Error::NonFinite(_))));
    }

    #[test]
    fn exact_power_law_fit() {
        let s: Vec<LsSample> = (0..40)
            .map(|i| {
                let gap = 10f64.powf(-(i as f64) / 4.0);
                LsSample {
                    grad_y_norm: 3.0 * gap.sqrt(),
                    energy_gap: gap,
                    distance: 0.01,
                }
            })
            .collect();
        let f = fit_ls_exponent(&s).unwrap();
        assert!((f.theta - 0.5).abs() < 1e-12);
        assert!((f.c_constant - 3.0).abs() < 1e-12);
        assert!(verify_ls_inequality(&s, &f));
        let inflated = LsFit {
            c_constant: 10.0 * f.c_constant,
            ..f
        };
        assert!(!verify_ls_inequality(&s, &inflated));
        assert!((f.length_exponent() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_is_clamped() {
        // slope 1/4 would give θ = 3/4
        let s: Vec<LsSample> = (0..30)
            .map(|i| {
                let gap = 10f64.powf(-(i as f64) / 3.0);
                LsSample {
                    grad_y_norm: gap.powf(0.25),
                    energy_gap: gap,
                    distance: 0.01,
                }
            })
            .collect();
        let f = fit_ls_exponent(&s).unwrap();
        assert_eq!(f.theta, 0.5);
        assert!((f.raw_theta() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn length_estimate_at_equilibrium() {
        let eq = flat(64, 0.0);
        let m = SigmaModel::default();
        let r = length_estimate_check(&eq.u, 0.0, &eq, &m, 1.0, 1.0);
        assert_eq!(r.lhs, m.value(0.0));
        assert_eq!(r.rhs, m.value(0.0));
        assert!(r.holds);
    }

    #[test]
    fn length_estimate_for_small_sines() {
        let eq = flat(128, 0.0);
        let m = SigmaModel::default();
        for eps in [1e-1, 1e-2, 1e-3] {
            let u = GridFunction::from_fn(128, |x| eps * (2.0 * PI * x).sin()).unwrap();
            let r = length_estimate_check(&u, 0.0, &eq, &m, 1.0, 1.0);
            assert!(r.holds && r.slack > 0.0, "{eps}: {r:?}");
        }
    }

    fn short_run(alpha0: f64, amplitude: f64) -> Trajectory {
        let m = SigmaModel::default();
        let u0 = crate::flow::sine_profile(32, amplitude, 1).unwrap();
        let params = FlowParams {
            record_every: Some(5),
            ..FlowParams::at_cfl(1.0, 1.0, 32, 3.0, &m, alpha0)
        };
        evolve(&State::new(u0, alpha0), &m, &params).unwrap()
    }

    #[test]
    fn stability_on_equilibrium_is_degenerate() {
        let m = SigmaModel::default();
        let traj = short_run(0.0, 0.0);
        let r = stability_check(&traj, &flat(32, 0.0), 0.5, &m).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.c3, 0.0);
        assert_eq!(
            decay_classifier(&traj, &flat(32, 0.0), &m).unwrap(),
            DecayClass::Undetermined
        );
    }

    #[test]
    fn stability_constant_is_finite_and_grows_with_theta() {
        let m = SigmaModel::default();
        let traj = short_run(0.3, 0.05);
        let eq = flat(32, 0.0);
        let r = stability_check(&traj, &eq, 0.5, &m).unwrap();
        assert!(!r.degenerate && r.c3.is_finite() && r.c3 > 0.0);
        let big = stability_check(&traj, &eq, 0.9, &m).unwrap();
        assert!(big.c3 > 100.0 * r.c3);
    }

    #[test]
    fn stability_rejects_wrong_limit() {
        let m = SigmaModel::default();
        let traj = short_run(0.3, 0.05);
        let far = flat(32, PI / 2.0);
        assert!(matches!(
            stability_check(&traj, &far, 0.5, &m),
            Err(Error::NotConvergent(_))
        ));
    }

    #[test]
    fn decay_of_a_short_run_is_exponential() {
        let m = SigmaModel::default();
        let traj = short_run(0.3, 0.05);
        match decay_classifier(&traj, &flat(32, 0.0), &m).unwrap() {
            DecayClass::Exponential { rate, .. } => assert!(rate > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
