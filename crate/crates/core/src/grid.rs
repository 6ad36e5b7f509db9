//! Zero-mean periodic grid functions on `[0, 1)` and their spectral calculus.
//!
//! Samples live at `x_j = j / n`. Differentiation, integration and the
//! `X = H^1 x R` / `Y = H^2 x R` norms are all computed from the stored
//! samples through a real FFT; nothing caches derivative fields.
//!
//! The Nyquist mode is treated as non-differentiable: first and second
//! derivatives and the antiderivative all zero it. This keeps the discrete
//! derivative skew-adjoint and makes `second_derivative == derivative ∘ derivative`
//! in frequency space.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;
use std::sync::Arc;

use rand::Rng;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible grid.
pub const MIN_GRID_SIZE: usize = 8;

/// Tolerance on the stored mean of a [`GridFunction`].
pub const MEAN_TOLERANCE: f64 = 1e-13;

pub fn validate_grid_size(n: usize) -> Result<()> {
    if n < MIN_GRID_SIZE || !n.is_power_of_two() {
        return Err(Error::InvalidGridSize(n));
    }
    Ok(())
}

/// Grid nodes `j / n`.
pub fn grid_points(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / n as f64).collect()
}

/// Cached real-FFT plans for one grid size.
pub(crate) struct SpectralPlan {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl SpectralPlan {
    fn new(n: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            n,
            r2c: planner.plan_fft_forward(n),
            c2r: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn spectrum_len(&self) -> usize {
        self.n / 2 + 1
    }

    /// Unnormalized forward transform. `input` is used as scratch.
    pub(crate) fn forward(&self, input: &mut [f64], spectrum: &mut [Complex64]) {
        self.r2c
            .process(input, spectrum)
            .expect("forward FFT buffer sizes are fixed by the plan");
    }

    /// Inverse transform including the `1/n` normalization. `spectrum` is
    /// used as scratch.
    pub(crate) fn inverse(&self, spectrum: &mut [Complex64], output: &mut [f64]) {
        let last = spectrum.len() - 1;
        spectrum[0].im = 0.0;
        spectrum[last].im = 0.0;
        self.c2r
            .process(spectrum, output)
            .expect("inverse FFT buffer sizes are fixed by the plan");
        let scale = 1.0 / self.n as f64;
        output.iter_mut().for_each(|v| *v *= scale);
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<SpectralPlan>>> = RefCell::new(HashMap::new());
}

pub(crate) fn spectral_plan(n: usize) -> Rc<SpectralPlan> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(SpectralPlan::new(n)))
            .clone()
    })
}

/// Angular wavenumber `2πk` of mode `k`.
#[inline]
pub(crate) fn wavenumber(k: usize) -> f64 {
    2.0 * PI * k as f64
}

/// Apply a per-mode multiplier in frequency space and transform back.
fn spectral_map<F>(values: &[f64], multiplier: F) -> Vec<f64>
where
    F: Fn(usize, Complex64) -> Complex64,
{
    let plan = spectral_plan(values.len());
    let mut input = values.to_vec();
    let mut spectrum = vec![Complex64::new(0.0, 0.0); plan.spectrum_len()];
    plan.forward(&mut input, &mut spectrum);
    for (k, c) in spectrum.iter_mut().enumerate() {
        *c = multiplier(k, *c);
    }
    let mut out = vec![0.0; values.len()];
    plan.inverse(&mut spectrum, &mut out);
    out
}

/// Spectral first derivative of periodic samples.
pub fn derivative(values: &[f64]) -> Vec<f64> {
    let nyquist = values.len() / 2;
    spectral_map(values, |k, c| {
        if k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            c * Complex64::new(0.0, wavenumber(k))
        }
    })
}

/// Spectral second derivative of periodic samples.
pub fn second_derivative(values: &[f64]) -> Vec<f64> {
    let nyquist = values.len() / 2;
    spectral_map(values, |k, c| {
        if k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            let w = wavenumber(k);
            c * (-w * w)
        }
    })
}

/// Zero-mean periodic antiderivative.
///
/// Returns `∫_0^x f dy - ∫_0^1 ∫_0^x f dy dx` for the zero-mean part of `f`.
/// The mean of `f` itself (which would contribute a non-periodic ramp) is
/// discarded; its derivative is therefore `f - mean(f)` up to the Nyquist mode.
pub fn antiderivative(values: &[f64]) -> Vec<f64> {
    let nyquist = values.len() / 2;
    spectral_map(values, |k, c| {
        if k == 0 || k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            c / Complex64::new(0.0, wavenumber(k))
        }
    })
}

/// Keep modes `1..=max_mode`, drop the mean and everything above.
pub fn band_project(values: &[f64], max_mode: usize) -> Vec<f64> {
    spectral_map(values, |k, c| {
        if k == 0 || k > max_mode {
            Complex64::new(0.0, 0.0)
        } else {
            c
        }
    })
}

/// Rectangle rule `(1/n) Σ f_j`, spectrally accurate for smooth periodic data.
pub fn integrate(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

pub fn mean(f: &[f64]) -> f64 {
    integrate(f)
}

/// Discrete `L^2(0,1)` norm.
pub fn l2_norm(f: &[f64]) -> f64 {
    integrate_squares(f).sqrt()
}

pub(crate) fn integrate_squares(f: &[f64]) -> f64 {
    f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64
}

/// Differentiation scheme. Spectral is the default everywhere; central
/// differences exist for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    #[default]
    Spectral,
    CentralDifference,
}

pub fn derivative_with(scheme: DiffScheme, values: &[f64]) -> Vec<f64> {
    match scheme {
        DiffScheme::Spectral => derivative(values),
        DiffScheme::CentralDifference => {
            let n = values.len();
            let inv_2h = n as f64 / 2.0;
            (0..n)
                .map(|j| (values[(j + 1) % n] - values[(j + n - 1) % n]) * inv_2h)
                .collect()
        }
    }
}

pub fn second_derivative_with(scheme: DiffScheme, values: &[f64]) -> Vec<f64> {
    match scheme {
        DiffScheme::Spectral => second_derivative(values),
        DiffScheme::CentralDifference => {
            let n = values.len();
            let inv_h2 = (n * n) as f64;
            (0..n)
                .map(|j| (values[(j + 1) % n] - 2.0 * values[j] + values[(j + n - 1) % n]) * inv_h2)
                .collect()
        }
    }
}

/// Uniform samples of a zero-mean periodic function on `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFunction")]
pub struct GridFunction {
    n: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGridFunction {
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<RawGridFunction> for GridFunction {
    type Error = Error;

    /// Deserialization is strict: the samples are stored verbatim so that a
    /// round trip is bit-exact, and anything off the zero-mean grid is rejected.
    fn try_from(raw: RawGridFunction) -> Result<Self> {
        validate_grid_size(raw.n)?;
        if raw.values.len() != raw.n {
            return Err(Error::GridMismatch {
                expected: raw.n,
                got: raw.values.len(),
            });
        }
        if raw.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function samples"));
        }
        let m = mean(&raw.values);
        if m.abs() > MEAN_TOLERANCE {
            return Err(Error::NonZeroMean(m));
        }
        Ok(Self {
            n: raw.n,
            values: raw.values,
        })
    }
}

impl GridFunction {
    /// Build from raw samples, subtracting their mean.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        validate_grid_size(n)?;
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function samples"));
        }
        let m = mean(&samples);
        samples.iter_mut().for_each(|v| *v -= m);
        Ok(Self { n, values: samples })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        validate_grid_size(n)?;
        Ok(Self {
            n,
            values: vec![0.0; n],
        })
    }

    /// Sample `f` at the grid nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        validate_grid_size(n)?;
        Self::new(grid_points(n).into_iter().map(f).collect())
    }

    /// Wrap samples already known to be zero-mean (internal fast path).
    pub(crate) fn from_zero_mean(values: Vec<f64>) -> Self {
        debug_assert!(validate_grid_size(values.len()).is_ok());
        Self {
            n: values.len(),
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    pub fn derivative(&self) -> Vec<f64> {
        derivative(&self.values)
    }

    pub fn second_derivative(&self) -> Vec<f64> {
        second_derivative(&self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sqrt(∫ u_x^2 + ∫ u_xx^2)`, the `H^2_{per.ave}` norm.
    pub fn h2_norm(&self) -> f64 {
        (integrate_squares(&self.derivative()) + integrate_squares(&self.second_derivative()))
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &GridFunction) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self::from_zero_mean(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + scale * b)
                .collect(),
        ))
    }

    pub fn scaled(&self, scale: f64) -> Self {
        Self::from_zero_mean(self.values.iter().map(|v| v * scale).collect())
    }

    pub(crate) fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }
}

/// An element `(h, β)` of the phase space `X = H^1_{per.ave} x R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XVector {
    pub h: GridFunction,
    pub beta: f64,
}

impl XVector {
    pub fn new(h: GridFunction, beta: f64) -> Self {
        Self { h, beta }
    }
}

/// `sqrt(∫ h_x^2 dx + β^2)`.
pub fn x_norm(v: &XVector) -> f64 {
    (integrate_squares(&v.h.derivative()) + v.beta * v.beta).sqrt()
}

/// `sqrt(∫ h_x^2 dx + ∫ h_xx^2 dx + β^2)`.
pub fn y_norm(v: &XVector) -> f64 {
    (integrate_squares(&v.h.derivative())
        + integrate_squares(&v.h.second_derivative())
        + v.beta * v.beta)
        .sqrt()
}

/// `((h1, β1), (h2, β2))_X = ∫ h1_x h2_x dx + β1 β2`.
pub fn x_inner(a: &XVector, b: &XVector) -> Result<f64> {
    a.h.check_same_grid(&b.h)?;
    let da = a.h.derivative();
    let db = b.h.derivative();
    let prod: Vec<f64> = da.iter().zip(&db).map(|(p, q)| p * q).collect();
    Ok(integrate(&prod) + a.beta * b.beta)
}

/// Random real trigonometric polynomial with modes `1..=max_mode`, scaled to
/// sup-norm `amplitude`. Coefficients decay like `1/k^2`.
pub fn random_band_limited<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_mode: usize,
    amplitude: f64,
) -> Result<GridFunction> {
    validate_grid_size(n)?;
    let max_mode = max_mode.clamp(1, n / 2 - 1);
    let coeffs: Vec<(f64, f64)> = (1..=max_mode)
        .map(|k| {
            let decay = 1.0 / (k * k) as f64;
            (
                rng.gen_range(-1.0..1.0) * decay,
                rng.gen_range(-1.0..1.0) * decay,
            )
        })
        .collect();
    let samples: Vec<f64> = grid_points(n)
        .into_iter()
        .map(|x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let phase = wavenumber(i + 1) * x;
                    a * phase.cos() + b * phase.sin()
                })
                .sum()
        })
        .collect();
    let f = GridFunction::new(samples)?;
    let sup = f.sup_norm();
    if sup == 0.0 {
        return Ok(f);
    }
    Ok(f.scaled(amplitude / sup))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn rejects_bad_grid_sizes() {
        assert_eq!(
            GridFunction::new(vec![0.0; 4]).unwrap_err(),
            Error::InvalidGridSize(4)
        );
        assert!(GridFunction::new(vec![0.0; 12]).is_err());
        assert!(GridFunction::new(vec![0.0; 8]).is_ok());
    }

    #[test]
    fn zero_samples_stay_zero() {
        let u = GridFunction::new(vec![0.0; 8]).unwrap();
        assert!(u.is_zero());
        assert_eq!(u.n(), 8);
    }

    #[test]
    fn sine_is_already_zero_mean() {
        let raw: Vec<f64> = grid_points(64)
            .iter()
            .map(|x| (2.0 * PI * x).sin())
            .collect();
        let u = GridFunction::new(raw.clone()).unwrap();
        assert!(max_abs_diff(u.values(), &raw) <= 1e-15);
    }

    #[test]
    fn offset_is_subtracted() {
        let u = GridFunction::from_fn(64, |x| 1.0 + (2.0 * PI * x).sin()).unwrap();
        let expect: Vec<f64> = grid_points(64)
            .iter()
            .map(|x| (2.0 * PI * x).sin())
            .collect();
        assert!(max_abs_diff(u.values(), &expect) <= 1e-14);
        assert!(u.mean().abs() <= MEAN_TOLERANCE);
    }

    #[test]
    fn derivative_of_sine() {
        let u = GridFunction::from_fn(64, |x| (2.0 * PI * x).sin()).unwrap();
        let expect: Vec<f64> = grid_points(64)
            .iter()
            .map(|x| 2.0 * PI * (2.0 * PI * x).cos())
            .collect();
        assert!(max_abs_diff(&u.derivative(), &expect) <= 1e-12);
    }

    #[test]
    fn derivative_of_two_mode_signal() {
        let u = GridFunction::from_fn(128, |x| (2.0 * PI * x).sin() + 0.5 * (4.0 * PI * x).sin())
            .unwrap();
        let expect: Vec<f64> = grid_points(128)
            .iter()
            .map(|x| 2.0 * PI * (2.0 * PI * x).cos() + 2.0 * PI * (4.0 * PI * x).cos())
            .collect();
        assert!(max_abs_diff(&u.derivative(), &expect) <= 1e-11);
    }

    #[test]
    fn derivatives_of_zero() {
        let u = GridFunction::zeros(32).unwrap();
        assert!(u.derivative().iter().all(|&v| v == 0.0));
        assert!(u.second_derivative().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_derivative_of_sine() {
        let u = GridFunction::from_fn(64, |x| (2.0 * PI * x).sin()).unwrap();
        let expect: Vec<f64> = grid_points(64)
            .iter()
            .map(|x| -4.0 * PI * PI * (2.0 * PI * x).sin())
            .collect();
        assert!(max_abs_diff(&u.second_derivative(), &expect) <= 1e-10);
    }

    #[test]
    fn second_derivative_is_composed_first_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_band_limited(&mut rng, 128, 20, 1.0).unwrap();
        let twice = derivative(&u.derivative());
        assert!(max_abs_diff(&u.second_derivative(), &twice) <= 1e-10);
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_band_limited(&mut rng, 64, 10, 1.0).unwrap();
        let back = antiderivative(&u.derivative());
        assert!(max_abs_diff(&back, u.values()) <= 1e-13);
    }

    #[test]
    fn antiderivative_of_cosine() {
        let f: Vec<f64> = grid_points(32)
            .iter()
            .map(|x| (2.0 * PI * x).cos())
            .collect();
        let expect: Vec<f64> = grid_points(32)
            .iter()
            .map(|x| (2.0 * PI * x).sin() / (2.0 * PI))
            .collect();
        assert!(max_abs_diff(&antiderivative(&f), &expect) <= 1e-15);
    }

    #[test]
    fn quadrature() {
        assert_eq!(integrate(&[1.0; 16]), 1.0);
        let s: Vec<f64> = grid_points(64)
            .iter()
            .map(|x| (2.0 * PI * x).sin())
            .collect();
        assert!(integrate(&s).abs() <= 1e-15);
        let s2: Vec<f64> = s.iter().map(|v| v * v).collect();
        assert!((integrate(&s2) - 0.5).abs() <= 1e-14);
    }

    #[test]
    fn norms() {
        let zero = XVector::new(GridFunction::zeros(8).unwrap(), 0.0);
        assert_eq!(x_norm(&zero), 0.0);
        assert_eq!(y_norm(&zero), 0.0);
        let beta = XVector::new(GridFunction::zeros(8).unwrap(), 3.0);
        assert_eq!(x_norm(&beta), 3.0);
        let beta = XVector::new(GridFunction::zeros(8).unwrap(), 2.0);
        assert_eq!(y_norm(&beta), 2.0);

        let s = XVector::new(
            GridFunction::from_fn(64, |x| (2.0 * PI * x).sin()).unwrap(),
            0.0,
        );
        assert!((x_norm(&s) - 4.442882938158366).abs() <= 1e-10);
        let expect = (2.0 * PI.powi(2) + 8.0 * PI.powi(4)).sqrt();
        assert!((y_norm(&s) - expect).abs() <= 1e-9);
    }

    #[test]
    fn band_projection_keeps_low_modes() {
        let u = GridFunction::from_fn(64, |x| {
            (2.0 * PI * x).sin() + 0.1 * (2.0 * PI * 20.0 * x).cos()
        })
        .unwrap();
        let p = band_project(u.values(), 16);
        let expect: Vec<f64> = grid_points(64)
            .iter()
            .map(|x| (2.0 * PI * x).sin())
            .collect();
        assert!(max_abs_diff(&p, &expect) <= 1e-14);
    }

    #[test]
    fn central_difference_is_second_order() {
        let err = |n: usize| {
            let u = GridFunction::from_fn(n, |x| (2.0 * PI * x).sin()).unwrap();
            let d = derivative_with(DiffScheme::CentralDifference, u.values());
            max_abs_diff(&d, &u.derivative())
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn strict_deserialization() {
        let bad = r#"{"n": 8, "values": [1,1,1,1,1,1,1,1]}"#;
        assert!(serde_json::from_str::<GridFunction>(bad).is_err());
        let short = r#"{"n": 8, "values": [0,0]}"#;
        assert!(serde_json::from_str::<GridFunction>(short).is_err());
    }
}
