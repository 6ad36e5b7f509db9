//! Task orchestration for one scenario.

use std::f64::consts::PI;
use std::path::PathBuf;

use grainflow_core::analysis::{
    decay_classifier, fit_ls_exponent, length_estimate_along, length_estimate_check, ls_samples,
    stability_check, verify_ls_inequality, LengthReport, C2_FLOOR, LENGTH_ESTIMATE_TOLERANCE,
};
use grainflow_core::bounds::{run_inequality_suite, SuiteSizes};
use grainflow_core::flow::{dissipation_residual, gradient_bound_check};
use grainflow_core::sigma::{downhill_critical_point, DEGENERACY_THRESHOLD};
use grainflow_core::{
    evolve, DecayClass, Error as CoreError, EvolveError, FlowParams, GridFunction, LsFit, LsSample,
    SigmaModel, State, Trajectory,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::{ScenarioConfig, Task};
use crate::report::{
    write_json, write_ls_csv, write_snapshots, write_trajectory_csv, Check, ExitStatus,
    OutputError, Summary,
};

/// Per-step energy increase tolerated by the monotonicity check.
pub const ENERGY_MONOTONE_TOLERANCE: f64 = 1e-12;
/// Bound on `|mean u|` along the flow.
pub const MEAN_TOLERANCE: f64 = 1e-12;
/// Required residual reduction when `dt` is halved.
pub const DISSIPATION_RATIO: f64 = 3.5;
pub const LS_MIN_SAMPLES: usize = 200;
pub const THETA_RANGE: (f64, f64) = (0.45, 0.55);
pub const LS_R_SQUARED: f64 = 0.99;
/// Allowed relative change of `C₃` under refinement.
pub const C3_REFINEMENT_CHANGE: f64 = 0.2;
pub const CONVERGENCE_U_L2: f64 = 1e-6;
pub const CONVERGENCE_ALPHA: f64 = 1e-4;
/// Amplitudes of the sine spot checks of the length estimate.
pub const SPOT_EPSILONS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Setup(String),
}

/// Result of [`run_scenario`].
#[derive(Debug)]
pub struct Outcome {
    pub summary: Summary,
    /// Files written, in order.
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn status(&self) -> ExitStatus {
        self.summary.status()
    }
}

/// Equilibrium the analysis tasks refer to: `ls.alpha_bar` if given, else
/// the critical point reached from `alpha0`, else `alpha0` itself for a
/// constant `σ`.
pub fn equilibrium(cfg: &ScenarioConfig) -> Result<State, ScenarioError> {
    let zero = GridFunction::zeros(cfg.flow.n).map_err(|e| ScenarioError::Setup(e.to_string()))?;
    let alpha_bar = match cfg.ls.alpha_bar {
        Some(a) => a,
        None if cfg.sigma.is_constant() => cfg.alpha0,
        None => {
            downhill_critical_point(&cfg.sigma, cfg.alpha0)
                .map_err(|e| ScenarioError::Setup(e.to_string()))?
                .ok_or_else(|| {
                    ScenarioError::Setup(format!(
                        "no critical point of sigma is reachable from alpha0 = {}",
                        cfg.alpha0
                    ))
                })?
                .alpha_bar
        }
    };
    // + 0.0 normalizes a -0.0 root for the reports
    Ok(State::new(zero, alpha_bar + 0.0))
}

fn is_degenerate(model: &SigmaModel, alpha_bar: f64) -> bool {
    !model.is_constant() && model.d2(alpha_bar).abs() < DEGENERACY_THRESHOLD
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    summary: Summary,
    artifacts: Vec<PathBuf>,
    rng: ChaCha8Rng,
    /// Records up to a blow-up of the base run.
    partial: Option<(f64, Trajectory)>,
}

impl Run<'_> {
    fn write(&mut self, path: Result<PathBuf, OutputError>) -> Result<(), OutputError> {
        self.artifacts.push(path?);
        Ok(())
    }

    fn evolve(&mut self, label: &str, params: &FlowParams) -> Option<Trajectory> {
        let cfg = self.cfg;
        log::info!(
            "{}: {label} run, N = {}, dt = {:e}, {} steps",
            cfg.name,
            params.n,
            params.dt,
            params.steps()
        );
        let u0 = if params.n == cfg.u0.n() {
            cfg.u0.clone()
        } else {
            resample(&cfg.u0, params.n)
        };
        match evolve(&State::new(u0, cfg.alpha0), &cfg.sigma, params) {
            Ok(traj) => Some(traj),
            Err(EvolveError::BlowUp(b)) => {
                log::error!("{}: {label} run blew up at t = {}", cfg.name, b.t);
                self.summary.blow_up = Some(b.t);
                if self.partial.is_none() {
                    self.partial = Some((b.t, b.partial));
                }
                None
            }
            Err(EvolveError::Invalid(e)) => {
                self.summary.push(Check::holds(
                    &format!("{label}_run_accepted"),
                    "flow_parameters_valid",
                    false,
                ));
                log::error!("{}: {label} run rejected: {e}", cfg.name);
                None
            }
        }
    }
}

/// Trigonometric interpolation onto an `m`-point grid. The Nyquist mode
/// is dropped.
fn resample(u: &GridFunction, m: usize) -> GridFunction {
    let n = u.n();
    let mut values = vec![0.0; m];
    let coeffs = dft(u.values());
    for (j, v) in values.iter_mut().enumerate() {
        let x = j as f64 / m as f64;
        let mut s = coeffs[0].0 / n as f64;
        for (k, &(re, im)) in coeffs.iter().enumerate().skip(1).take(n / 2 - 1) {
            let th = 2.0 * PI * k as f64 * x;
            s += 2.0 * (re * th.cos() - im * th.sin()) / n as f64;
        }
        *v = s;
    }
    GridFunction::new(values).expect("resampled grid is valid")
}

fn dft(values: &[f64]) -> Vec<(f64, f64)> {
    let n = values.len();
    (0..=n / 2)
        .map(|k| {
            values
                .iter()
                .enumerate()
                .fold((0.0, 0.0), |(re, im), (j, v)| {
                    let th = -2.0 * PI * (k * j) as f64 / n as f64;
                    (re + v * th.cos(), im + v * th.sin())
                })
        })
        .collect()
}

#[derive(Serialize)]
struct LsFitArtifact {
    alpha_bar: f64,
    degenerate: bool,
    raw_theta: f64,
    fit: LsFit,
    length_exponent: f64,
    length_constant: f64,
}

/// Execute every requested task and write the artifacts under
/// `cfg.output_dir`. Assertion failures and blow-ups are reported through
/// the returned summary; only setup and I/O problems are errors.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Outcome, ScenarioError> {
    let mut run = Run {
        cfg,
        summary: Summary::new(&cfg.name, cfg.seed),
        artifacts: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        partial: None,
    };
    let dir = cfg.output_dir.clone();
    let eq = if cfg.needs_ls_fit() {
        Some(equilibrium(cfg)?)
    } else {
        None
    };

    let base = if cfg.needs_trajectory() {
        let traj = run.evolve("base", &cfg.flow);
        if traj.is_none() && run.summary.blow_up.is_some() {
            write_partial(&mut run, &dir)?;
            return finish(run, &dir);
        }
        traj
    } else {
        None
    };

    if let Some(traj) = &base {
        simulate_checks(&mut run, traj);
        run.write(write_trajectory_csv(&dir, traj, cfg.csv_max_rows))?;
        run.write(write_snapshots(&dir, traj))?;
    }

    if cfg.wants(Task::Dissipation) {
        if let Some(traj) = &base {
            dissipation_task(&mut run, traj);
        }
    }

    let fit = match &eq {
        Some(eq) => ls_fit_task(&mut run, eq, &dir)?,
        None => None,
    };

    if cfg.wants(Task::Stability) {
        if let (Some(traj), Some(eq)) = (&base, &eq) {
            stability_task(&mut run, traj, eq, fit.as_ref());
        }
    }

    if cfg.wants(Task::Length) {
        if let (Some(traj), Some(eq), Some(fit)) = (&base, &eq, &fit) {
            length_task(&mut run, traj, eq, fit);
        } else if fit.is_none() {
            run.summary
                .push(Check::holds("length_fit_available", "ls_inequality", false));
        }
    }

    if cfg.wants(Task::InequalitySuite) {
        inequality_task(&mut run, &dir)?;
    }

    finish(run, &dir)
}

fn finish(mut run: Run, dir: &std::path::Path) -> Result<Outcome, ScenarioError> {
    let path = run.summary.write(dir)?;
    run.artifacts.push(path);
    log::info!(
        "{}: exit {} ({} checks)",
        run.cfg.name,
        run.summary.status().code(),
        run.summary.checks.len()
    );
    Ok(Outcome {
        summary: run.summary,
        artifacts: run.artifacts,
    })
}

fn write_partial(run: &mut Run, dir: &std::path::Path) -> Result<(), ScenarioError> {
    if let Some((t, partial)) = run.partial.take() {
        run.summary.report(
            "simulate",
            &json!({ "records": partial.len(), "blow_up_at": t, "partial": true }),
        );
        run.write(write_trajectory_csv(dir, &partial, run.cfg.csv_max_rows))?;
        run.write(write_snapshots(dir, &partial))?;
    }
    Ok(())
}

fn simulate_checks(run: &mut Run, traj: &Trajectory) {
    let model = &run.cfg.sigma;
    let s = &mut run.summary;
    s.push(Check::at_most(
        "energy_monotone",
        "energy_non_increasing",
        traj.max_energy_increase().max(0.0),
        ENERGY_MONOTONE_TOLERANCE,
    ));
    s.push(Check::at_most(
        "mean_conserved",
        "zero_mean_preserved",
        traj.max_abs_mean(),
        MEAN_TOLERANCE,
    ));
    match gradient_bound_check(traj, model) {
        Ok(r) => {
            s.push(Check::at_most(
                "area_element_bound",
                "gradient_estimate",
                r.max_sup_v,
                r.area_bound,
            ));
            s.push(Check::at_most(
                "slope_maximum_principle",
                "gradient_bounds_maximum_principle",
                r.max_sup_ux_sq,
                r.slope_bound,
            ));
            let last = traj.diagnostics.last().copied();
            s.report(
                "simulate",
                &json!({
                    "records": traj.len(),
                    "snapshots": traj.snapshots.len(),
                    "t_end": traj.times.last(),
                    "final": last,
                    "gradient_bounds": {
                        "area_bound": r.area_bound,
                        "max_sup_v": r.max_sup_v,
                        "slope_bound": r.slope_bound,
                        "max_sup_ux_sq": r.max_sup_ux_sq,
                        "violations": r.violations.len(),
                        "sup_v_monotone": r.sup_v_monotone,
                    },
                }),
            );
        }
        Err(e) => {
            log::error!("gradient bound check: {e}");
            s.push(Check::holds(
                "gradient_bounds_evaluated",
                "gradient_estimate",
                false,
            ));
        }
    }
}

fn max_residual(traj: &Trajectory) -> Result<(f64, usize), CoreError> {
    let r = dissipation_residual(traj)?;
    // interior records start at index 1
    Ok(r.iter().enumerate().fold(
        (0.0, 0),
        |(m, at), (i, v)| if *v > m { (*v, i + 1) } else { (m, at) },
    ))
}

fn dissipation_task(run: &mut Run, traj: &Trajectory) {
    let cfg = run.cfg;
    let (res, at) = match max_residual(traj) {
        Ok(v) => v,
        Err(e) => {
            log::error!("dissipation: {e}");
            run.summary.push(Check::holds(
                "dissipation_residual_evaluated",
                "energy_law",
                false,
            ));
            return;
        }
    };
    run.summary.push(Check::at_most(
        "dissipation_residual",
        "energy_law",
        res,
        cfg.dissipation_tolerance,
    ));

    let mut half = cfg.flow.clone();
    half.dt = cfg.flow.dt / 2.0;
    half.record_every = Some(cfg.flow.record_stride());
    half.snapshot_every = Some(half.steps().max(1));
    let Some(fine) = run.evolve("half-step", &half) else {
        return;
    };
    let Ok((res_half, _)) = max_residual(&fine) else {
        return;
    };
    let ratio = res / res_half;
    run.summary.push(Check::at_least(
        "dissipation_halving_ratio",
        "energy_law_convergence",
        ratio,
        DISSIPATION_RATIO,
    ));
    run.summary.report(
        "dissipation",
        &json!({
            "max_residual": res,
            "at_time": traj.times[at],
            "max_residual_half_dt": res_half,
            "ratio": ratio,
            "tolerance": cfg.dissipation_tolerance,
        }),
    );
}

fn ls_fit_task(
    run: &mut Run,
    eq: &State,
    dir: &std::path::Path,
) -> Result<Option<LsFit>, ScenarioError> {
    let cfg = run.cfg;
    let model = &cfg.sigma;
    let samples: Vec<LsSample> = match ls_samples(&mut run.rng, eq, model, &cfg.ls.sampling) {
        Ok(s) => s,
        Err(e) => {
            log::error!("ls_fit: {e}");
            run.summary.push(Check::holds(
                "ls_equilibrium_critical",
                "critical_manifold",
                false,
            ));
            return Ok(None);
        }
    };
    run.write(write_ls_csv(dir, &samples))?;
    let fit = match fit_ls_exponent(&samples) {
        Ok(f) => f,
        Err(e) => {
            log::error!("ls_fit: {e}");
            run.summary.push(Check::at_least(
                "ls_sample_count",
                "ls_inequality",
                samples.len() as f64,
                LS_MIN_SAMPLES as f64,
            ));
            return Ok(None);
        }
    };
    let degenerate = is_degenerate(model, eq.alpha);
    let s = &mut run.summary;
    if degenerate {
        log::info!("ls_fit: degenerate equilibrium, exponent reported only");
    } else {
        s.push(Check::at_least(
            "ls_sample_count",
            "ls_inequality",
            fit.n_points as f64,
            LS_MIN_SAMPLES as f64,
        ));
        s.push(Check::at_least(
            "ls_theta_lower",
            "ls_inequality",
            fit.raw_theta(),
            THETA_RANGE.0,
        ));
        s.push(Check::at_most(
            "ls_theta_upper",
            "ls_inequality",
            fit.raw_theta(),
            THETA_RANGE.1,
        ));
        s.push(Check::at_least(
            "ls_r_squared",
            "ls_inequality",
            fit.r_squared,
            LS_R_SQUARED,
        ));
    }
    s.push(Check::at_least(
        "ls_constant_floor",
        "ls_inequality",
        fit.c_constant,
        C2_FLOOR,
    ));
    s.push(Check::holds(
        "ls_inequality_on_samples",
        "ls_inequality",
        verify_ls_inequality(&samples, &fit),
    ));
    let artifact = LsFitArtifact {
        alpha_bar: eq.alpha,
        degenerate,
        raw_theta: fit.raw_theta(),
        fit,
        length_exponent: fit.length_exponent(),
        length_constant: fit.length_constant(),
    };
    s.report("ls_fit", &artifact);
    run.write(write_json(dir, "ls_fit.json", &artifact))?;
    Ok(Some(fit))
}

fn stability_task(run: &mut Run, traj: &Trajectory, eq: &State, fit: Option<&LsFit>) {
    let cfg = run.cfg;
    let model = &cfg.sigma;
    let theta = fit.map_or(0.5, |f| f.theta);

    let last = traj.diagnostics.last().expect("non-empty trajectory");
    run.summary.push(Check::at_most(
        "converged_u",
        "convergence_to_equilibrium",
        last.u_l2,
        CONVERGENCE_U_L2,
    ));
    run.summary.push(Check::at_most(
        "converged_alpha",
        "convergence_to_equilibrium",
        (last.alpha - eq.alpha).abs(),
        CONVERGENCE_ALPHA,
    ));

    let decay = decay_classifier(traj, eq, model);
    match &decay {
        Ok(class) => run.summary.push(Check::holds(
            "decay_exponential",
            "exponential_convergence",
            matches!(class, DecayClass::Exponential { .. }),
        )),
        Err(e) => {
            log::error!("decay classifier: {e}");
            run.summary.push(Check::holds(
                "decay_exponential",
                "exponential_convergence",
                false,
            ));
        }
    }

    let base = match stability_check(traj, eq, theta, model) {
        Ok(r) => r,
        Err(e) => {
            log::error!("stability: {e}");
            run.summary.push(Check::holds(
                "stability_constant_finite",
                "stability_estimate",
                false,
            ));
            return;
        }
    };
    run.summary.push(Check::holds(
        "stability_constant_finite",
        "stability_estimate",
        base.c3.is_finite(),
    ));

    let mut refined = cfg.flow.clone();
    refined.n = cfg.flow.n * 2;
    refined.dt = cfg.flow.dt / 4.0;
    refined.record_every = Some(cfg.flow.record_stride() * 4);
    refined.snapshot_every = Some(cfg.flow.snapshot_stride() * 4);
    let fine_eq = State::new(
        GridFunction::zeros(refined.n).expect("doubled grid size is valid"),
        eq.alpha,
    );
    let fine_report = run
        .evolve("refined", &refined)
        .map(|fine| stability_check(&fine, &fine_eq, theta, model));
    let change = match &fine_report {
        Some(Ok(fine)) if !base.degenerate && base.c3 > 0.0 => {
            let change = (fine.c3 - base.c3).abs() / base.c3;
            run.summary.push(Check::at_most(
                "stability_refinement_change",
                "stability_estimate",
                change,
                C3_REFINEMENT_CHANGE,
            ));
            Some(change)
        }
        Some(Err(e)) => {
            log::error!("refined stability: {e}");
            run.summary.push(Check::holds(
                "stability_refinement_change",
                "stability_estimate",
                false,
            ));
            None
        }
        _ => None,
    };
    run.summary.report(
        "stability",
        &json!({
            "theta": theta,
            "base": base,
            "refined": fine_report.and_then(Result::ok),
            "relative_change": change,
            "decay": decay.ok(),
            "alpha_bar": eq.alpha,
        }),
    );
}

fn length_task(run: &mut Run, traj: &Trajectory, eq: &State, fit: &LsFit) {
    let model = &run.cfg.sigma;
    let gamma_exp = fit.length_exponent();
    let c5 = fit.length_constant();
    let along = length_estimate_along(traj, eq, model, fit.neighborhood_radius, gamma_exp, c5);
    let min_slack = along
        .iter()
        .map(|(_, r)| r.slack)
        .fold(f64::INFINITY, f64::min);
    run.summary.push(Check::at_least(
        "length_estimate_states",
        "length_estimate",
        along.len() as f64,
        1.0,
    ));
    if !along.is_empty() {
        run.summary.push(Check::at_least(
            "length_estimate_trajectory",
            "length_estimate",
            min_slack,
            -LENGTH_ESTIMATE_TOLERANCE,
        ));
    }
    let spots: Vec<(f64, LengthReport)> = SPOT_EPSILONS
        .iter()
        .map(|&eps| {
            let u = GridFunction::from_fn(eq.n(), |x| eps * (2.0 * PI * x).sin())
                .expect("grid size already validated");
            (
                eps,
                length_estimate_check(&u, eq.alpha + eps, eq, model, gamma_exp, c5),
            )
        })
        .collect();
    for (eps, r) in &spots {
        run.summary.push(Check::at_least(
            &format!("length_estimate_spot_{eps:e}"),
            "length_estimate",
            r.slack,
            -LENGTH_ESTIMATE_TOLERANCE,
        ));
    }
    run.summary.report(
        "length",
        &json!({
            "gamma": gamma_exp,
            "c5": c5,
            "radius": fit.neighborhood_radius,
            "states_checked": along.len(),
            "first_record": along.first().map(|(i, _)| *i),
            "min_slack": if along.is_empty() { None } else { Some(min_slack) },
            "spot_checks": spots
                .iter()
                .map(|(eps, r)| json!({ "epsilon": eps, "report": r }))
                .collect::<Vec<_>>(),
        }),
    );
}

fn inequality_task(run: &mut Run, dir: &std::path::Path) -> Result<(), ScenarioError> {
    let checks = run_inequality_suite(&mut run.rng, SuiteSizes::default())
        .map_err(|e| ScenarioError::Setup(e.to_string()))?;
    for c in &checks {
        run.summary.push(Check::at_least(
            &format!("inequality_{}", c.name),
            &c.name,
            c.min_slack,
            0.0 - c.tolerance,
        ));
    }
    run.write(write_json(dir, "inequalities.json", &checks))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resampling_preserves_band_limited_data() {
        let u = GridFunction::from_fn(16, |x| {
            0.3 * (2.0 * PI * x).sin() + 0.1 * (6.0 * PI * x).cos()
        })
        .unwrap();
        let v = resample(&u, 32);
        let expect = GridFunction::from_fn(32, |x| {
            0.3 * (2.0 * PI * x).sin() + 0.1 * (6.0 * PI * x).cos()
        })
        .unwrap();
        for (a, b) in v.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn degenerate_flag() {
        let m = SigmaModel::default();
        assert!(!is_degenerate(&m, 0.0));
        assert!(!is_degenerate(&SigmaModel::constant(1.0).unwrap(), 0.3));
    }
}
