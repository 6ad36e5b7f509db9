//! Analytic grain boundary energy densities `σ(α)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|σ'|` tolerance accepted for a located critical point.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// `|σ''|` below which a critical point is flagged degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Number of samples used to bracket roots of `σ'`.
const BRACKET_SAMPLES: usize = 10_000;

/// Energy density as a function of the misorientation.
///
/// JSON form: `{"kind": "trig_periodic", "base": 1.0, "amplitude": 0.5, "frequency": 2.0}`,
/// `{"kind": "quadratic_convex", "base": 1.0, "curvature": 1.0}` or
/// `{"kind": "constant", "value": 2.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaModel {
    /// `σ ≡ value`.
    Constant { value: f64 },
    /// `σ(α) = base + amplitude · sin²(frequency · α)`, period `π / frequency`.
    TrigPeriodic {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// `σ(α) = base + curvature · α²`.
    QuadraticConvex { base: f64, curvature: f64 },
}

impl Default for SigmaModel {
    fn default() -> Self {
        SigmaModel::TrigPeriodic {
            base: 1.0,
            amplitude: 0.5,
            frequency: 2.0,
        }
    }
}

impl SigmaModel {
    pub fn constant(value: f64) -> Result<Self> {
        let m = SigmaModel::Constant { value };
        m.validate()?;
        Ok(m)
    }

    pub fn trig_periodic(base: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        let m = SigmaModel::TrigPeriodic {
            base,
            amplitude,
            frequency,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn quadratic_convex(base: f64, curvature: f64) -> Result<Self> {
        let m = SigmaModel::QuadraticConvex { base, curvature };
        m.validate()?;
        Ok(m)
    }

    /// Check parameter ranges and the positivity floor `σ ≥ C₁ > 0`.
    pub fn validate(&self) -> Result<()> {
        let params: &[(&str, f64)] = match self {
            SigmaModel::Constant { value } => &[("value", *value)],
            SigmaModel::TrigPeriodic {
                base,
                amplitude,
                frequency,
            } => &[
                ("base", *base),
                ("amplitude", *amplitude),
                ("frequency", *frequency),
            ],
            SigmaModel::QuadraticConvex { base, curvature } => {
                &[("base", *base), ("curvature", *curvature)]
            }
        };
        if let Some((name, _)) = params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSigma(format!("`{name}` is not finite")));
        }
        match *self {
            SigmaModel::TrigPeriodic {
                amplitude,
                frequency,
                ..
            } => {
                if amplitude < 0.0 {
                    return Err(Error::InvalidSigma("`amplitude` must be >= 0".into()));
                }
                if frequency <= 0.0 {
                    return Err(Error::InvalidSigma("`frequency` must be > 0".into()));
                }
            }
            SigmaModel::QuadraticConvex { curvature, .. } if curvature < 0.0 => {
                return Err(Error::InvalidSigma("`curvature` must be >= 0".into()));
            }
            _ => {}
        }
        let floor = self.positivity_floor();
        if floor <= 0.0 {
            return Err(Error::PositivityFloor(floor));
        }
        Ok(())
    }

    /// The constant `C₁` with `σ(α) ≥ C₁` for all `α`.
    pub fn positivity_floor(&self) -> f64 {
        match *self {
            SigmaModel::Constant { value } => value,
            SigmaModel::TrigPeriodic { base, .. } => base,
            SigmaModel::QuadraticConvex { base, .. } => base,
        }
    }

    /// Largest value `σ(α(t))` can take along a flow started at `alpha0`.
    ///
    /// `σ(α(t))` is non-increasing in time, so `σ(alpha0)` would already do;
    /// bounded models use their global maximum instead.
    pub fn max_along_flow(&self, alpha0: f64) -> f64 {
        match *self {
            SigmaModel::Constant { value } => value,
            SigmaModel::TrigPeriodic {
                base, amplitude, ..
            } => base + amplitude,
            SigmaModel::QuadraticConvex { .. } => self.value(alpha0),
        }
    }

    /// `σ^{(order)}(α)` for `order ∈ {0, 1, 2, 3}`; higher orders panic.
    pub fn eval(&self, alpha: f64, order: u8) -> f64 {
        match *self {
            SigmaModel::Constant { value } => match order {
                0 => value,
                1..=3 => 0.0,
                _ => panic!("sigma derivative order {order} not supported"),
            },
            SigmaModel::TrigPeriodic {
                base,
                amplitude,
                frequency,
            } => {
                let f = frequency;
                let arg = 2.0 * f * alpha;
                match order {
                    0 => {
                        let s = (f * alpha).sin();
                        base + amplitude * s * s
                    }
                    1 => amplitude * f * arg.sin(),
                    2 => 2.0 * amplitude * f * f * arg.cos(),
                    3 => -4.0 * amplitude * f * f * f * arg.sin(),
                    _ => panic!("sigma derivative order {order} not supported"),
                }
            }
            SigmaModel::QuadraticConvex { base, curvature } => match order {
                0 => base + curvature * alpha * alpha,
                1 => 2.0 * curvature * alpha,
                2 => 2.0 * curvature,
                3 => 0.0,
                _ => panic!("sigma derivative order {order} not supported"),
            },
        }
    }

    pub fn value(&self, alpha: f64) -> f64 {
        self.eval(alpha, 0)
    }

    pub fn d1(&self, alpha: f64) -> f64 {
        self.eval(alpha, 1)
    }

    pub fn d2(&self, alpha: f64) -> f64 {
        self.eval(alpha, 2)
    }

    pub fn d3(&self, alpha: f64) -> f64 {
        self.eval(alpha, 3)
    }

    /// `σ(a) - σ(b)` without cancellation.
    pub fn difference(&self, a: f64, b: f64) -> f64 {
        match *self {
            SigmaModel::Constant { .. } => 0.0,
            SigmaModel::TrigPeriodic {
                amplitude,
                frequency,
                ..
            } => amplitude * (frequency * (a - b)).sin() * (frequency * (a + b)).sin(),
            SigmaModel::QuadraticConvex { curvature, .. } => curvature * (a - b) * (a + b),
        }
    }

    /// `σ' ≡ 0`: every misorientation is critical.
    pub fn is_constant(&self) -> bool {
        match *self {
            SigmaModel::Constant { .. } => true,
            SigmaModel::TrigPeriodic { amplitude, .. } => amplitude == 0.0,
            SigmaModel::QuadraticConvex { curvature, .. } => curvature == 0.0,
        }
    }

    /// Period in `α`, if the model is periodic and non-constant.
    pub fn period(&self) -> Option<f64> {
        match *self {
            SigmaModel::TrigPeriodic { frequency, .. } if !self.is_constant() => {
                Some(PI / frequency)
            }
            _ => None,
        }
    }

    /// Whether `α σ'(α) ≥ 0` holds for all `α`.
    pub fn satisfies_convexity_condition(&self) -> bool {
        match *self {
            SigmaModel::Constant { .. } | SigmaModel::QuadraticConvex { .. } => true,
            SigmaModel::TrigPeriodic { .. } => self.is_constant(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SigmaModel::Constant { .. } => "constant",
            SigmaModel::TrigPeriodic { .. } => "trig_periodic",
            SigmaModel::QuadraticConvex { .. } => "quadratic_convex",
        }
    }
}

/// A root `ᾱ` of `σ'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub alpha_bar: f64,
    pub sigma_second: f64,
    pub degenerate: bool,
}

impl CriticalPoint {
    fn at(model: &SigmaModel, alpha_bar: f64) -> Self {
        let sigma_second = model.d2(alpha_bar);
        Self {
            alpha_bar,
            sigma_second,
            degenerate: sigma_second.abs() < DEGENERACY_THRESHOLD,
        }
    }

    pub fn is_minimum(&self) -> bool {
        !self.degenerate && self.sigma_second > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CriticalSet {
    /// `σ' ≡ 0`; every `α` is critical.
    All,
    Points(Vec<CriticalPoint>),
}

impl CriticalSet {
    pub fn points(&self) -> &[CriticalPoint] {
        match self {
            CriticalSet::All => &[],
            CriticalSet::Points(p) => p,
        }
    }
}

/// Locate all roots of `σ'` in `[a, b]` by sign-change bracketing followed by
/// bisection.
pub fn find_critical_points(model: &SigmaModel, a: f64, b: f64) -> Result<CriticalSet> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInterval(a, b));
    }
    if model.is_constant() {
        return Ok(CriticalSet::All);
    }
    let step = (b - a) / BRACKET_SAMPLES as f64;
    let node = |i: usize| {
        if i == BRACKET_SAMPLES {
            b
        } else {
            a + step * i as f64
        }
    };

    let mut roots = Vec::new();
    let mut prev_x = a;
    let mut prev_d = model.d1(a);
    if prev_d == 0.0 {
        roots.push(a);
    }
    for i in 1..=BRACKET_SAMPLES {
        let x = node(i);
        let d = model.d1(x);
        if d == 0.0 {
            roots.push(x);
        } else if prev_d != 0.0 && prev_d.signum() != d.signum() {
            roots.push(bisect(model, prev_x, x));
        }
        prev_x = x;
        prev_d = d;
    }
    Ok(CriticalSet::Points(
        roots
            .into_iter()
            .map(|r| CriticalPoint::at(model, r))
            .collect(),
    ))
}

/// Bisect down to adjacent floating-point numbers; `|σ'|` then sits at
/// rounding level, well inside [`CRITICAL_TOLERANCE`].
fn bisect(model: &SigmaModel, mut lo: f64, mut hi: f64) -> f64 {
    let lo_sign = model.d1(lo).signum();
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return if model.d1(lo).abs() < model.d1(hi).abs() {
                lo
            } else {
                hi
            };
        }
        let d = model.d1(mid);
        if d == 0.0 {
            return mid;
        }
        if d.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// The critical point the misorientation ODE `α' = -γ σ'(α) L` reaches from
/// `alpha0`: it moves monotonically against the sign of `σ'` until the first
/// root in that direction.
pub fn downhill_critical_point(model: &SigmaModel, alpha0: f64) -> Result<Option<CriticalPoint>> {
    if model.is_constant() {
        return Ok(None);
    }
    let slope = model.d1(alpha0);
    if slope.abs() <= CRITICAL_TOLERANCE {
        return Ok(Some(CriticalPoint::at(model, alpha0)));
    }
    let reach = model.period().unwrap_or(2.0 * alpha0.abs().max(1.0));
    let (a, b) = if slope > 0.0 {
        (alpha0 - reach, alpha0)
    } else {
        (alpha0, alpha0 + reach)
    };
    let set = find_critical_points(model, a, b)?;
    let pick = if slope > 0.0 {
        set.points()
            .iter()
            .filter(|c| c.alpha_bar < alpha0)
            .max_by(|x, y| x.alpha_bar.total_cmp(&y.alpha_bar))
    } else {
        set.points()
            .iter()
            .filter(|c| c.alpha_bar > alpha0)
            .min_by(|x, y| x.alpha_bar.total_cmp(&y.alpha_bar))
    };
    Ok(pick.copied())
}
