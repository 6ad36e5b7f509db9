//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::time::Instant;

use grainflow_cli::verify_suite;
use grainflow_core::analysis::{
    decay_classifier, fit_ls_exponent, length_estimate_along, length_estimate_check, ls_samples,
    stability_check, LENGTH_ESTIMATE_TOLERANCE,
};
use grainflow_core::flow::{dissipation_residual, gradient_bound_check, sine_profile};
use grainflow_core::{
    evolve, DecayClass, FlowParams, GridFunction, LsSampling, SigmaModel, State, Trajectory,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 256;
const DT: f64 = 1e-5;
const SEED: u64 = 42;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn standard_params(n: usize, dt: f64) -> FlowParams {
    FlowParams {
        mu: 1.0,
        gamma: 1.0,
        dt,
        t_end: 5.0,
        n,
        cfl_safety: 1.0,
        record_every: None,
        snapshot_every: None,
    }
}

fn standard_run(n: usize, dt: f64, record_every: usize) -> (Trajectory, f64) {
    let mut p = standard_params(n, dt);
    p.record_every = Some(record_every);
    p.snapshot_every = Some(1000 * record_every);
    let u0 = sine_profile(n, 0.1, 1).unwrap();
    let start = Instant::now();
    let traj = evolve(&State::new(u0, 0.3), &SigmaModel::default(), &p).unwrap();
    (traj, start.elapsed().as_secs_f64())
}

fn equilibrium(n: usize) -> State {
    // σ'(0.3) > 0, so α decreases to the minimum of σ at 0
    State::new(GridFunction::zeros(n).unwrap(), 0.0)
}

fn max_residual(traj: &Trajectory) -> f64 {
    dissipation_residual(traj)
        .unwrap()
        .into_iter()
        .fold(0.0, f64::max)
}

fn criterion_1(base: &Trajectory, seconds: f64) -> Outcome {
    let res = max_residual(base);
    let (half, _) = standard_run(N, DT / 2.0, 1);
    let res_half = max_residual(&half);
    let ratio = res / res_half;
    outcome(
        res <= 1e-6 && ratio >= 3.5 && seconds <= 60.0,
        format!("max residual {res:.3e} (limit 1e-6), dt/2 ratio {ratio:.2} (limit 3.5), run {seconds:.1} s"),
    )
}

fn suite_checks(summary: &grainflow_cli::Summary, prefixes: &[&str]) -> (bool, usize) {
    let picked: Vec<_> = summary
        .checks
        .iter()
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .collect();
    (
        !picked.is_empty() && picked.iter().all(|c| c.passed),
        picked.len(),
    )
}

fn criterion_2(summary: &grainflow_cli::Summary) -> Outcome {
    let value = |name: &str| {
        summary
            .checks
            .iter()
            .find(|c| c.name == name)
            .unwrap()
            .value
    };
    let (ok, _) = suite_checks(summary, &["first_variation_fd", "second_variation_fd"]);
    outcome(
        ok,
        format!(
            "worst relative error: first variation {:.2e}, second variation {:.2e} (limit 1e-5, 100 cases each)",
            value("first_variation_fd"),
            value("second_variation_fd")
        ),
    )
}

fn criterion_3(summary: &grainflow_cli::Summary) -> Outcome {
    let (ok, count) = suite_checks(summary, &["critical_identity_"]);
    let worst = summary
        .checks
        .iter()
        .filter(|c| c.name.starts_with("critical_identity_"))
        .fold(0.0f64, |m, c| m.max(c.value));
    outcome(
        ok,
        format!("{count} equilibria x 50 directions, worst X-norm error {worst:.2e} (limit 1e-12)"),
    )
}

fn criterion_4(summary: &grainflow_cli::Summary) -> Outcome {
    let (ok, count) = suite_checks(summary, &["inequality_"]);
    let worst = summary
        .checks
        .iter()
        .filter(|c| c.name.starts_with("inequality_"))
        .fold(f64::INFINITY, |m, c| m.min(c.value));
    outcome(
        ok,
        format!("{count} inequalities, smallest slack {worst:.2e}"),
    )
}

fn bounds_hold(traj: &Trajectory, m: &SigmaModel) -> (bool, String) {
    let r = gradient_bound_check(traj, m).unwrap();
    let de = traj.max_energy_increase();
    let mean = traj.max_abs_mean();
    let ok = r.holds() && de <= 1e-12 && mean <= 1e-12;
    (
        ok,
        format!(
            "sup v {:.4}/{:.4}, sup u_x^2 {:.4}/{:.4}, dE {de:.1e}, mean {mean:.1e}",
            r.max_sup_v, r.area_bound, r.max_sup_ux_sq, r.slope_bound
        ),
    )
}

fn criterion_5(base: &Trajectory) -> Outcome {
    let trig = SigmaModel::default();
    let (ok_std, std_detail) = bounds_hold(base, &trig);
    let steep = evolve(
        &State::new(sine_profile(N, 0.5, 2).unwrap(), 0.6),
        &trig,
        &FlowParams::at_cfl(1.0, 1.0, N, 0.3, &trig, 0.6),
    )
    .unwrap();
    let (ok_steep, _) = bounds_hold(&steep, &trig);
    let quad = SigmaModel::quadratic_convex(1.0, 1.0).unwrap();
    let u0 = GridFunction::from_fn(64, |x| {
        0.2 * (2.0 * PI * x).cos() + 0.05 * (8.0 * PI * x).sin()
    })
    .unwrap();
    let q = evolve(
        &State::new(u0, -0.5),
        &quad,
        &FlowParams::at_cfl(1.0, 1.0, 64, 1.0, &quad, -0.5),
    )
    .unwrap();
    let (ok_quad, _) = bounds_hold(&q, &quad);
    outcome(
        ok_std && ok_steep && ok_quad,
        format!(
            "3 trajectories; standard: {std_detail}; steep ok {ok_steep}, quadratic ok {ok_quad}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let cases = [
        ("trig 0", SigmaModel::default(), 0.0),
        ("trig pi/4", SigmaModel::default(), PI / 4.0),
        (
            "quadratic 0",
            SigmaModel::quadratic_convex(1.0, 2.0).unwrap(),
            0.0,
        ),
        ("constant", SigmaModel::constant(1.3).unwrap(), 0.37),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, m, ab) in cases {
        let start = Instant::now();
        let eq = State::new(GridFunction::zeros(N).unwrap(), ab);
        let samples = ls_samples(&mut rng, &eq, &m, &LsSampling::default()).unwrap();
        let fit = fit_ls_exponent(&samples).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let theta = fit.raw_theta();
        let pass = fit.n_points >= 200
            && (0.45..=0.55).contains(&theta)
            && fit.r_squared >= 0.99
            && fit.c_constant >= 1e-6
            && secs <= 30.0;
        ok &= pass;
        parts.push(format!(
            "{label}: theta {theta:.4} r2 {:.4} C2 {:.3} n {} {secs:.1}s",
            fit.r_squared, fit.c_constant, fit.n_points
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_7(base: &Trajectory) -> Outcome {
    let m = SigmaModel::default();
    let coarse = stability_check(base, &equilibrium(N), 0.5, &m).unwrap();
    let (fine_traj, _) = standard_run(2 * N, DT / 4.0, 4);
    let fine = stability_check(&fine_traj, &equilibrium(2 * N), 0.5, &m).unwrap();
    let change = (fine.c3 - coarse.c3).abs() / coarse.c3;
    outcome(
        coarse.c3.is_finite() && !coarse.degenerate && change <= 0.2,
        format!(
            "C3 {:.4} at (N, dt), {:.4} at (2N, dt/4), change {:.2}% (limit 20%), {} records",
            coarse.c3,
            fine.c3,
            100.0 * change,
            coarse.records_used
        ),
    )
}

fn criterion_8(base: &Trajectory) -> Outcome {
    let m = SigmaModel::default();
    let eq = equilibrium(N);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let samples = ls_samples(&mut rng, &eq, &m, &LsSampling::default()).unwrap();
    let fit = fit_ls_exponent(&samples).unwrap();
    let (g, c5) = (fit.length_exponent(), fit.length_constant());
    let along = length_estimate_along(base, &eq, &m, fit.neighborhood_radius, g, c5);
    let min_along = along
        .iter()
        .map(|(_, r)| r.slack)
        .fold(f64::INFINITY, f64::min);
    let spots: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&eps| {
            let u = GridFunction::from_fn(N, |x| eps * (2.0 * PI * x).sin()).unwrap();
            length_estimate_check(&u, eps, &eq, &m, g, c5).slack
        })
        .collect();
    let ok = !along.is_empty()
        && min_along >= -LENGTH_ESTIMATE_TOLERANCE
        && spots.iter().all(|s| *s >= -LENGTH_ESTIMATE_TOLERANCE);
    outcome(
        ok,
        format!(
            "gamma {g:.4}, C5 {c5:.4}, {} states, min slack {min_along:.2e}, spot slacks [{}]",
            along.len(),
            spots
                .iter()
                .map(|s| format!("{s:.2e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn criterion_9(base: &Trajectory) -> Outcome {
    let m = SigmaModel::default();
    let last = base.diagnostics.last().unwrap();
    let to_quarter_pi = (last.alpha - PI / 4.0).abs();
    let decay = decay_classifier(base, &equilibrium(N), &m).unwrap();
    let exponential = matches!(decay, DecayClass::Exponential { .. });
    outcome(
        last.u_l2 <= 1e-6 && to_quarter_pi <= 1e-4 && exponential,
        format!(
            "|u|_L2 {:.2e} (limit 1e-6), |alpha - pi/4| {to_quarter_pi:.4} (limit 1e-4, final alpha {:.2e}), decay {decay:?}",
            last.u_l2, last.alpha
        ),
    )
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let out = tmp.path().join(dir);
        let status = Command::new(env!("CARGO_BIN_EXE_grainflow"))
            .env("GRAINFLOW_LOG", "error")
            .args(["verify-suite", "--seed", "42", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        (status.code(), fs::read(out.join("summary.json")).unwrap())
    };
    let (code_a, a) = run("a");
    let (code_b, b) = run("b");
    outcome(
        a == b && code_a == code_b,
        format!(
            "{} bytes, identical {}, exit codes {code_a:?}/{code_b:?}",
            a.len(),
            a == b
        ),
    )
}

fn main() {
    let names = [
        "dissipation law",
        "gradient consistency",
        "critical-point identity",
        "auxiliary lemmas",
        "a priori bounds",
        "LS exponent",
        "stability estimate",
        "length estimate",
        "convergence behavior",
        "determinism",
    ];
    let (base, seconds) = standard_run(N, DT, 1);
    let suite = verify_suite(SEED);
    let results = [
        criterion_1(&base, seconds),
        criterion_2(&suite),
        criterion_3(&suite),
        criterion_4(&suite),
        criterion_5(&base),
        criterion_6(),
        criterion_7(&base),
        criterion_8(&base),
        criterion_9(&base),
        criterion_10(),
    ];
    let mut failed = 0;
    for (i, (name, r)) in names.iter().zip(&results).enumerate() {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name}: {}", i + 1, r.detail);
        failed += usize::from(!r.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
