//! Method-of-lines integration of the misorientation-coupled curve shortening
//! flow on the torus:
//!
//! ```text
//! u_t = μ σ(α) sqrt(1 + u_x²) (u_x / sqrt(1 + u_x²))_x
//! α_t = -γ σ'(α) ∫ sqrt(1 + u_x²) dx
//! ```
//!
//! Time stepping is classical RK4. The integrated system is the Galerkin
//! truncation onto zero-mean Fourier modes `1 ≤ |k| ≤ n/4`: every stage
//! increment is projected there. With that cutoff the explicit bound
//! `dt ≤ cfl · h² / (μ σ_max)` keeps the stiffest retained mode inside the
//! RK4 stability region, and the projection doubles as the zero-mean
//! re-projection after each step.

use std::f64::consts::PI;

use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::energy::length_excess_from_slope;
use crate::error::{Error, Result};
use crate::grid::{self, integrate, spectral_plan, validate_grid_size, wavenumber, GridFunction};
use crate::sigma::SigmaModel;

/// Phase-space point `(u, α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub u: GridFunction,
    pub alpha: f64,
}

impl State {
    pub fn new(u: GridFunction, alpha: f64) -> Self {
        Self { u, alpha }
    }

    pub fn n(&self) -> usize {
        self.u.n()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.u.values().iter().all(|v| v.is_finite())
    }
}

fn default_cfl_safety() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Curve mobility `μ`.
    pub mu: f64,
    /// Misorientation mobility `γ`.
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n: usize,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    /// Record diagnostics every this many steps. Defaults to 1 for
    /// `t_end ≤ 10` and 10 otherwise.
    #[serde(default)]
    pub record_every: Option<usize>,
    /// Keep a full state snapshot every this many steps. Defaults to roughly
    /// a thousand snapshots per run.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
}

impl FlowParams {
    /// Parameters with `dt` at the stability bound for the given model.
    pub fn at_cfl(
        mu: f64,
        gamma: f64,
        n: usize,
        t_end: f64,
        model: &SigmaModel,
        alpha0: f64,
    ) -> Self {
        let mut p = Self {
            mu,
            gamma,
            dt: 0.0,
            t_end,
            n,
            cfl_safety: 1.0,
            record_every: None,
            snapshot_every: None,
        };
        p.dt = p.cfl_bound(model, alpha0);
        p
    }

    /// `cfl_safety · (1/n)² / (μ σ_max)`.
    pub fn cfl_bound(&self, model: &SigmaModel, alpha0: f64) -> f64 {
        let h = 1.0 / self.n as f64;
        self.cfl_safety * h * h / (self.mu * model.max_along_flow(alpha0))
    }

    /// Highest Fourier mode kept by the integrator.
    pub fn band_limit(&self) -> usize {
        self.n / 4
    }

    pub fn steps(&self) -> usize {
        if self.dt <= 0.0 || self.t_end <= 0.0 {
            return 0;
        }
        let raw = self.t_end / self.dt;
        let rounded = raw.round();
        if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
            rounded as usize
        } else {
            raw.ceil() as usize
        }
    }

    pub fn record_stride(&self) -> usize {
        self.record_every
            .unwrap_or(if self.t_end <= 10.0 { 1 } else { 10 })
            .max(1)
    }

    pub fn snapshot_stride(&self) -> usize {
        let rec = self.record_stride();
        let raw = self
            .snapshot_every
            .unwrap_or_else(|| (self.steps() / 1000).max(1));
        // snapshots sit on recorded steps
        raw.div_ceil(rec).max(1) * rec
    }

    pub fn validate(&self, model: &SigmaModel, alpha0: f64) -> Result<()> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidFlowParams {
                    field,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("mu", self.mu)?;
        positive("gamma", self.gamma)?;
        positive("t_end", self.t_end)?;
        validate_grid_size(self.n)?;
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidFlowParams {
                field: "cfl_safety",
                reason: format!("must lie in (0, 1], got {}", self.cfl_safety),
            });
        }
        if !(self.dt.is_finite() && self.dt >= 0.0) {
            return Err(Error::InvalidFlowParams {
                field: "dt",
                reason: format!("must be non-negative and finite, got {}", self.dt),
            });
        }
        let bound = self.cfl_bound(model, alpha0);
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt: self.dt, bound });
        }
        Ok(())
    }
}

/// Structural diagnostics at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub alpha: f64,
    pub energy: f64,
    /// Centered difference of recorded energies; filled in after the run.
    pub dissipation_lhs: f64,
    /// `-(1/γ) α_t² - (1/μ) ∫ (u_t / v)² v dx`.
    pub dissipation_rhs: f64,
    pub mean_u: f64,
    pub sup_v: f64,
    pub sup_ux_sq: f64,
    pub length: f64,
    /// `L - 1`, computed without cancellation.
    pub length_excess: f64,
    pub sup_curvature: f64,
    /// `∫ (u_x / sqrt(1 + u_x²))_x² dx`.
    pub curvature_sq: f64,
    pub grad_norm_x: f64,
    pub grad_norm_y: f64,
    pub u_l2: f64,
    /// `sqrt(∫ u_x² + u_xx² dx)`, the `u`-part of the `Y`-norm.
    pub u_y_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Index into the trajectory records.
    pub record: usize,
    pub t: f64,
    pub state: State,
}

/// Recorded output of [`evolve`]. `times` and `diagnostics` have one entry
/// per record; full states are kept only at the snapshot cadence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub diagnostics: Vec<Diagnostics>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_state(&self) -> Option<&State> {
        self.snapshots.first().map(|s| &s.state)
    }

    pub fn final_state(&self) -> Option<&State> {
        self.snapshots.last().map(|s| &s.state)
    }

    /// Largest per-record energy increase.
    pub fn max_energy_increase(&self) -> f64 {
        self.diagnostics
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_mean(&self) -> f64 {
        self.diagnostics
            .iter()
            .fold(0.0, |m, d| m.max(d.mean_u.abs()))
    }

    fn fill_dissipation_lhs(&mut self) {
        let n = self.times.len();
        if n < 2 {
            return;
        }
        let e: Vec<f64> = self.diagnostics.iter().map(|d| d.energy).collect();
        let t = &self.times;
        for i in 0..n {
            let lhs = if i == 0 {
                (e[1] - e[0]) / (t[1] - t[0])
            } else if i == n - 1 {
                (e[n - 1] - e[n - 2]) / (t[n - 1] - t[n - 2])
            } else {
                // three-point centered difference on a possibly uneven grid
                let hm = t[i] - t[i - 1];
                let hp = t[i + 1] - t[i];
                (hm * hm * e[i + 1] - hp * hp * e[i - 1] + (hp * hp - hm * hm) * e[i])
                    / (hm * hp * (hm + hp))
            };
            self.diagnostics[i].dissipation_lhs = lhs;
        }
    }
}

/// Solver blow-up: a non-finite sample appeared. Carries everything recorded
/// up to the last valid state.
#[derive(Debug, Clone)]
pub struct BlowUp {
    pub t: f64,
    pub partial: Trajectory,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum EvolveError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("solver blow-up at t = {}", .0.t)]
    BlowUp(Box<BlowUp>),
}

/// Right-hand side of the flow at `state`, without any mode truncation:
/// `du/dt = μ σ(α) v ∂ₓ(u_x / v)` with `v = sqrt(1 + u_x²)` and
/// `dα/dt = -γ σ'(α) L`.
pub fn rhs(state: &State, model: &SigmaModel, params: &FlowParams) -> (Vec<f64>, f64) {
    let ux = state.u.derivative();
    let v: Vec<f64> = ux.iter().map(|s| (1.0 + s * s).sqrt()).collect();
    let w: Vec<f64> = ux.iter().zip(&v).map(|(s, a)| s / a).collect();
    let wx = grid::derivative(&w);
    let coef = params.mu * model.value(state.alpha);
    let du: Vec<f64> = v.iter().zip(&wx).map(|(a, b)| coef * a * b).collect();
    let da = -params.gamma * model.d1(state.alpha) * integrate(&v);
    (du, da)
}

/// Intermediate fields of one right-hand-side evaluation.
struct Eval {
    ux: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    wx: Vec<f64>,
    /// Untruncated `u_t` on the grid.
    ut: Vec<f64>,
    /// Spectrum of `w` (unnormalized).
    w_hat: Vec<Complex64>,
    /// Truncated `u_t` spectrum.
    ut_hat: Vec<Complex64>,
    alpha_t: f64,
    length: f64,
}

/// RK4 integrator carrying the band-limited spectrum of `u`.
struct Integrator {
    model: SigmaModel,
    mu: f64,
    gamma: f64,
    n: usize,
    band: usize,
    plan: std::rc::Rc<grid::SpectralPlan>,
    ik: Vec<Complex64>,
    scratch_real: Vec<f64>,
    scratch_spec: Vec<Complex64>,
    eval: Eval,
    acc: Vec<Complex64>,
    stage: Vec<Complex64>,
    k_prev: Vec<Complex64>,
}

impl Integrator {
    fn new(model: SigmaModel, params: &FlowParams) -> Self {
        let n = params.n;
        let plan = spectral_plan(n);
        let m = plan.spectrum_len();
        let nyquist = n / 2;
        let ik = (0..m)
            .map(|k| {
                if k == nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, wavenumber(k))
                }
            })
            .collect();
        let zeros = vec![0.0; n];
        let czeros = vec![Complex64::new(0.0, 0.0); m];
        Self {
            model,
            mu: params.mu,
            gamma: params.gamma,
            n,
            band: params.band_limit(),
            plan,
            ik,
            scratch_real: zeros.clone(),
            scratch_spec: czeros.clone(),
            eval: Eval {
                ux: zeros.clone(),
                v: zeros.clone(),
                w: zeros.clone(),
                wx: zeros.clone(),
                ut: zeros,
                w_hat: czeros.clone(),
                ut_hat: czeros.clone(),
                alpha_t: 0.0,
                length: 1.0,
            },
            acc: czeros.clone(),
            stage: czeros.clone(),
            k_prev: czeros,
        }
    }

    /// Band-limited spectrum of `u` (mean and modes above the band removed).
    fn spectrum_of(&mut self, u: &GridFunction) -> Vec<Complex64> {
        self.scratch_real.copy_from_slice(u.values());
        let mut spec = vec![Complex64::new(0.0, 0.0); self.plan.spectrum_len()];
        self.plan.forward(&mut self.scratch_real, &mut spec);
        self.truncate(&mut spec);
        spec
    }

    fn truncate(&self, spec: &mut [Complex64]) {
        spec[0] = Complex64::new(0.0, 0.0);
        for c in spec.iter_mut().skip(self.band + 1) {
            *c = Complex64::new(0.0, 0.0);
        }
    }

    fn grid_of(&mut self, spec: &[Complex64]) -> Vec<f64> {
        self.scratch_spec.copy_from_slice(spec);
        let mut out = vec![0.0; self.n];
        self.plan.inverse(&mut self.scratch_spec, &mut out);
        out
    }

    /// Evaluate the right-hand side at the band-limited state `(u_hat, alpha)`.
    fn evaluate(&mut self, u_hat: &[Complex64], alpha: f64) {
        let e = &mut self.eval;
        for ((s, c), k) in self.scratch_spec.iter_mut().zip(u_hat).zip(&self.ik) {
            *s = c * k;
        }
        self.plan.inverse(&mut self.scratch_spec, &mut e.ux);
        let mut area_sum = 0.0;
        for j in 0..self.n {
            let s = e.ux[j];
            let v = (1.0 + s * s).sqrt();
            e.v[j] = v;
            e.w[j] = s / v;
            area_sum += v;
        }
        e.length = area_sum / self.n as f64;

        self.scratch_real.copy_from_slice(&e.w);
        self.plan.forward(&mut self.scratch_real, &mut e.w_hat);
        for ((s, c), k) in self.scratch_spec.iter_mut().zip(&e.w_hat).zip(&self.ik) {
            *s = c * k;
        }
        self.plan.inverse(&mut self.scratch_spec, &mut e.wx);

        let coef = self.mu * self.model.value(alpha);
        for j in 0..self.n {
            e.ut[j] = coef * e.v[j] * e.wx[j];
        }
        self.scratch_real.copy_from_slice(&e.ut);
        self.plan.forward(&mut self.scratch_real, &mut e.ut_hat);
        let band = self.band;
        e.ut_hat[0] = Complex64::new(0.0, 0.0);
        for c in e.ut_hat.iter_mut().skip(band + 1) {
            *c = Complex64::new(0.0, 0.0);
        }
        e.alpha_t = -self.gamma * self.model.d1(alpha) * e.length;
    }

    /// One RK4 step. `self.eval` must hold the evaluation at `(u_hat, alpha)`
    /// on entry; on exit it holds the evaluation at the new state.
    fn step(&mut self, u_hat: &mut [Complex64], alpha: &mut f64, dt: f64) {
        const WEIGHTS: [f64; 4] = [1.0, 2.0, 2.0, 1.0];
        const OFFSETS: [f64; 4] = [0.0, 0.5, 0.5, 1.0];
        let mut stage = std::mem::take(&mut self.stage);
        let mut acc = std::mem::take(&mut self.acc);
        let mut k_prev = std::mem::take(&mut self.k_prev);
        let mut alpha_acc = 0.0;
        let mut a_prev = 0.0;
        for s in 0..4 {
            if s > 0 {
                let c = OFFSETS[s] * dt;
                for ((st, u), k) in stage.iter_mut().zip(u_hat.iter()).zip(&k_prev) {
                    *st = u + k * c;
                }
                self.evaluate(&stage, *alpha + a_prev * c);
            }
            k_prev.copy_from_slice(&self.eval.ut_hat);
            a_prev = self.eval.alpha_t;
            if s == 0 {
                for (a, k) in acc.iter_mut().zip(&k_prev) {
                    *a = *k;
                }
            } else {
                for (a, k) in acc.iter_mut().zip(&k_prev) {
                    *a += k * WEIGHTS[s];
                }
            }
            alpha_acc += a_prev * WEIGHTS[s];
        }
        let f = dt / 6.0;
        for (u, a) in u_hat.iter_mut().zip(&acc) {
            *u += a * f;
        }
        *alpha += alpha_acc * f;
        self.stage = stage;
        self.acc = acc;
        self.k_prev = k_prev;
        self.evaluate(u_hat, *alpha);
    }

    /// Diagnostics at `(u_hat, alpha)`; `self.eval` must be current.
    fn diagnostics(&mut self, u_hat: &[Complex64], alpha: f64) -> Diagnostics {
        let u = self.grid_of(u_hat);
        let e = &self.eval;
        let n = self.n as f64;
        let sigma = self.model.value(alpha);
        let sigma1 = self.model.d1(alpha);

        let mut dissipation_u = 0.0;
        let mut sup_v: f64 = 0.0;
        let mut sup_ux_sq: f64 = 0.0;
        let mut sup_curv: f64 = 0.0;
        let mut wx_sq = 0.0;
        for j in 0..self.n {
            let ut_over_v = e.ut[j] / e.v[j];
            dissipation_u += ut_over_v * ut_over_v * e.v[j];
            sup_v = sup_v.max(e.v[j]);
            sup_ux_sq = sup_ux_sq.max(e.ux[j] * e.ux[j]);
            sup_curv = sup_curv.max(e.wx[j].abs());
            wx_sq += e.wx[j] * e.wx[j];
        }
        dissipation_u /= n;
        wx_sq /= n;

        // ‖w - mean w‖² by Parseval, matching the X-representative of Ė
        let nyquist = self.n / 2;
        let mut w_osc = 0.0;
        for (k, c) in e.w_hat.iter().enumerate().skip(1) {
            if k == nyquist {
                continue;
            }
            w_osc += 2.0 * c.norm_sqr();
        }
        w_osc /= n * n;

        let mut u_y_sq = 0.0;
        for (k, c) in u_hat.iter().enumerate().skip(1).take(nyquist - 1) {
            let k2 = wavenumber(k).powi(2);
            u_y_sq += 2.0 * c.norm_sqr() * (k2 + k2 * k2);
        }
        u_y_sq /= n * n;

        let alpha_part = sigma1 * e.length;
        let grad_x_sq = sigma * sigma * w_osc + alpha_part * alpha_part;
        let grad_y_sq = grad_x_sq + sigma * sigma * wx_sq;

        Diagnostics {
            alpha,
            energy: sigma * e.length,
            dissipation_lhs: f64::NAN,
            dissipation_rhs: -e.alpha_t * e.alpha_t / self.gamma - dissipation_u / self.mu,
            mean_u: grid::mean(&u),
            sup_v,
            sup_ux_sq,
            length: e.length,
            length_excess: length_excess_from_slope(&e.ux),
            sup_curvature: sup_curv,
            curvature_sq: wx_sq,
            grad_norm_x: grad_x_sq.sqrt(),
            grad_norm_y: grad_y_sq.sqrt(),
            u_l2: grid::l2_norm(&u),
            u_y_norm: u_y_sq.sqrt(),
        }
    }

    fn state(&mut self, u_hat: &[Complex64], alpha: f64) -> State {
        let mut values = self.grid_of(u_hat);
        let m = grid::mean(&values);
        values.iter_mut().for_each(|v| *v -= m);
        State::new(GridFunction::from_zero_mean(values), alpha)
    }
}

fn spectrum_is_finite(spec: &[Complex64]) -> bool {
    spec.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// One RK4 step of the band-limited system. The input is projected onto
/// modes `1..=n/4` first; `dt = 0` returns the state unchanged.
pub fn step(state: &State, model: &SigmaModel, params: &FlowParams) -> Result<State> {
    if params.dt == 0.0 {
        return Ok(state.clone());
    }
    let params = FlowParams {
        n: state.n(),
        ..params.clone()
    };
    params.validate(model, state.alpha)?;
    let mut integ = Integrator::new(*model, &params);
    let mut u_hat = integ.spectrum_of(&state.u);
    let mut alpha = state.alpha;
    integ.evaluate(&u_hat, alpha);
    integ.step(&mut u_hat, &mut alpha, params.dt);
    if !spectrum_is_finite(&u_hat) || !alpha.is_finite() {
        return Err(Error::BlowUp { t: params.dt });
    }
    Ok(integ.state(&u_hat, alpha))
}

/// Band-limited projection the integrator applies to initial data.
pub fn project_state(state: &State) -> State {
    let band = state.n() / 4;
    let values = grid::band_project(state.u.values(), band);
    State::new(GridFunction::from_zero_mean(values), state.alpha)
}

/// Integrate from `state0` to `params.t_end`, recording diagnostics.
pub fn evolve(
    state0: &State,
    model: &SigmaModel,
    params: &FlowParams,
) -> std::result::Result<Trajectory, EvolveError> {
    if state0.n() != params.n {
        return Err(Error::GridMismatch {
            expected: params.n,
            got: state0.n(),
        }
        .into());
    }
    params.validate(model, state0.alpha)?;
    if params.dt == 0.0 {
        return Err(Error::InvalidFlowParams {
            field: "dt",
            reason: "must be positive to evolve".into(),
        }
        .into());
    }

    let mut integ = Integrator::new(*model, params);
    let mut u_hat = integ.spectrum_of(&state0.u);
    let mut alpha = state0.alpha;

    let steps = params.steps();
    let rec = params.record_stride();
    let snap = params.snapshot_stride();
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps / rec + 2),
        diagnostics: Vec::with_capacity(steps / rec + 2),
        snapshots: Vec::new(),
    };

    let record = |integ: &mut Integrator,
                  traj: &mut Trajectory,
                  u_hat: &[Complex64],
                  alpha: f64,
                  t: f64,
                  with_state: bool| {
        traj.times.push(t);
        traj.diagnostics.push(integ.diagnostics(u_hat, alpha));
        if with_state {
            traj.snapshots.push(Snapshot {
                record: traj.times.len() - 1,
                t,
                state: integ.state(u_hat, alpha),
            });
        }
    };

    integ.evaluate(&u_hat, alpha);
    record(&mut integ, &mut traj, &u_hat, alpha, 0.0, true);
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps {
            params.t_end
        } else {
            k as f64 * params.dt
        };
        let h = t_next - t;
        integ.step(&mut u_hat, &mut alpha, h);
        if !spectrum_is_finite(&u_hat) || !alpha.is_finite() {
            traj.fill_dissipation_lhs();
            return Err(EvolveError::BlowUp(Box::new(BlowUp {
                t: t_next,
                partial: traj,
            })));
        }
        t = t_next;
        let last = k == steps;
        if k % rec == 0 || last {
            record(
                &mut integ,
                &mut traj,
                &u_hat,
                alpha,
                t,
                k % snap == 0 || last,
            );
        }
    }
    traj.fill_dissipation_lhs();
    Ok(traj)
}

/// `|dE/dt - RHS|` at every interior record (the one-sided endpoint
/// differences are excluded).
pub fn dissipation_residual(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "dissipation residual needs at least 3 records, got {}",
            traj.len()
        )));
    }
    let d = &traj.diagnostics;
    Ok(d[1..d.len() - 1]
        .iter()
        .map(|r| (r.dissipation_lhs - r.dissipation_rhs).abs())
        .collect())
}

/// Tolerance on the maximum-principle slope bound.
pub const SLOPE_BOUND_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundViolation {
    /// `sup v(t) > (σ(α₀)/C₁) sup v(0)²`.
    AreaElement {
        record: usize,
        value: f64,
        bound: f64,
    },
    /// `sup u_x²(t) > sup u_x²(0) + tol`.
    SlopeSquared {
        record: usize,
        value: f64,
        bound: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundReport {
    pub area_bound: f64,
    pub max_sup_v: f64,
    pub slope_bound: f64,
    pub max_sup_ux_sq: f64,
    pub violations: Vec<BoundViolation>,
    /// Observation only: `sup v` never increased between records.
    pub sup_v_monotone: bool,
}

impl GradientBoundReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the a priori bounds `sup v(t) ≤ (σ(α₀)/C₁) sup v(0)²` and
/// `sup u_x²(t) ≤ sup u_x²(0)` on every record.
pub fn gradient_bound_check(traj: &Trajectory, model: &SigmaModel) -> Result<GradientBoundReport> {
    let first = traj
        .diagnostics
        .first()
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    let area_bound =
        model.value(first.alpha) / model.positivity_floor() * first.sup_v * first.sup_v;
    let slope_bound = first.sup_ux_sq + SLOPE_BOUND_TOLERANCE;
    let mut violations = Vec::new();
    let mut max_sup_v: f64 = 0.0;
    let mut max_sup_ux_sq: f64 = 0.0;
    for (i, d) in traj.diagnostics.iter().enumerate() {
        max_sup_v = max_sup_v.max(d.sup_v);
        max_sup_ux_sq = max_sup_ux_sq.max(d.sup_ux_sq);
        if d.sup_v > area_bound {
            violations.push(BoundViolation::AreaElement {
                record: i,
                value: d.sup_v,
                bound: area_bound,
            });
        }
        if d.sup_ux_sq > slope_bound {
            violations.push(BoundViolation::SlopeSquared {
                record: i,
                value: d.sup_ux_sq,
                bound: slope_bound,
            });
        }
    }
    let sup_v_monotone = traj
        .diagnostics
        .windows(2)
        .all(|w| w[1].sup_v <= w[0].sup_v + 1e-14);
    Ok(GradientBoundReport {
        area_bound,
        max_sup_v,
        slope_bound,
        max_sup_ux_sq,
        violations,
        sup_v_monotone,
    })
}

/// Initial profile `amplitude · sin(2π k x)`.
pub fn sine_profile(n: usize, amplitude: f64, mode: usize) -> Result<GridFunction> {
    GridFunction::from_fn(n, |x| amplitude * (2.0 * PI * mode as f64 * x).sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, dt: f64, t_end: f64) -> FlowParams {
        FlowParams {
            mu: 1.0,
            gamma: 1.0,
            dt,
            t_end,
            n,
            cfl_safety: 1.0,
            record_every: None,
            snapshot_every: None,
        }
    }

    #[test]
    fn equilibrium_rhs_vanishes() {
        let m = SigmaModel::default();
        let s = State::new(GridFunction::zeros(64).unwrap(), PI / 4.0);
        let (du, da) = rhs(&s, &m, &params(64, 1e-4, 1.0));
        assert!(du.iter().all(|v| *v == 0.0));
        assert!(da.abs() < 1e-15);
    }

    #[test]
    fn flat_profile_only_moves_alpha() {
        let m = SigmaModel::default();
        let s = State::new(GridFunction::zeros(64).unwrap(), 0.3);
        let p = FlowParams {
            gamma: 2.5,
            ..params(64, 1e-4, 1.0)
        };
        let (du, da) = rhs(&s, &m, &p);
        assert!(du.iter().all(|v| *v == 0.0));
        assert!((da + 2.5 * m.d1(0.3)).abs() < 1e-15);
    }

    #[test]
    fn zero_dt_step_is_identity() {
        let m = SigmaModel::default();
        let u = GridFunction::from_fn(64, |x| {
            0.05 * (2.0 * PI * x).sin() + 0.01 * (60.0 * PI * x).cos()
        })
        .unwrap();
        let s = State::new(u, 0.3);
        assert_eq!(step(&s, &m, &params(64, 0.0, 1.0)).unwrap(), s);
    }

    #[test]
    fn equilibrium_step_is_identity() {
        let m = SigmaModel::default();
        let s = State::new(GridFunction::zeros(64).unwrap(), PI / 4.0);
        let p = FlowParams::at_cfl(1.0, 1.0, 64, 1.0, &m, s.alpha);
        let next = step(&s, &m, &p).unwrap();
        assert!(next.u.sup_norm() <= 1e-15);
        assert!((next.alpha - s.alpha).abs() <= 1e-15);
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let m = SigmaModel::default();
        let p = params(256, 1e-4, 1.0);
        assert!(matches!(
            p.validate(&m, 0.3),
            Err(Error::CflViolation { .. })
        ));
        let bad_mu = FlowParams {
            mu: 0.0,
            ..params(64, 1e-6, 1.0)
        };
        assert!(matches!(
            bad_mu.validate(&m, 0.3),
            Err(Error::InvalidFlowParams { field: "mu", .. })
        ));
    }

    #[test]
    fn steps_handle_partial_final_step() {
        assert_eq!(params(64, 1e-5, 5.0).steps(), 500_000);
        assert_eq!(params(64, 0.3, 1.0).steps(), 4);
    }

    #[test]
    fn dissipation_residual_needs_three_records() {
        let traj = Trajectory {
            times: vec![0.0],
            diagnostics: vec![],
            snapshots: vec![],
        };
        assert!(matches!(
            dissipation_residual(&traj),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn equilibrium_trajectory_is_constant() {
        let m = SigmaModel::default();
        let s = State::new(GridFunction::zeros(32).unwrap(), 0.0);
        let p = FlowParams {
            t_end: 1.0,
            ..FlowParams::at_cfl(1.0, 1.0, 32, 1.0, &m, s.alpha)
        };
        let traj = evolve(&s, &m, &p).unwrap();
        let e0 = traj.diagnostics[0].energy;
        for d in &traj.diagnostics {
            assert!((d.energy - e0).abs() <= 1e-13);
        }
        for r in dissipation_residual(&traj).unwrap() {
            assert!(r <= 1e-13);
        }
        let report = gradient_bound_check(&traj, &m).unwrap();
        assert!(report.holds());
        assert_eq!(report.max_sup_v, 1.0);
    }
}
