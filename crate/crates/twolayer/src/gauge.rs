//! Gauge transformation Ψ = exp(−(2id/3a)∫r) and the gauged variables
//! w± = Ψ±∂ₓP±r, used as runtime diagnostics on solver states.

use num_complex::Complex64;
use thiserror::Error;

use crate::coeffs::ReducedCoefficients;
use crate::spectral::{Grid, Sign};

/// Absolute tolerance on mean(r), scaled by max(1, ‖r‖∞).
pub const MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaugeError {
    #[error("r must have zero mean for a periodic antiderivative (mean = {0:e})")]
    NonZeroMean(f64),
    #[error("the gauge needs a nonzero third-order coefficient a")]
    ZeroDispersion,
    #[error("field length {got} does not match grid size {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// Ψ±, w± for one interface profile r.
#[derive(Clone, Debug)]
pub struct GaugedState {
    /// Ψ₊ = Ψ.
    pub psi_plus: Vec<Complex64>,
    /// Ψ₋ = conj(Ψ).
    pub psi_minus: Vec<Complex64>,
    /// w₊ = Ψ₊∂ₓP₊r.
    pub w_plus: Vec<Complex64>,
    /// w₋ = Ψ₋∂ₓP₋r = conj(w₊).
    pub w_minus: Vec<Complex64>,
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Build the gauge for a mean-zero real field `r`.
pub fn gauge(grid: &Grid, r: &[f64], coeffs: &ReducedCoefficients) -> Result<GaugedState, GaugeError> {
    if r.len() != grid.n() {
        return Err(GaugeError::LengthMismatch {
            got: r.len(),
            want: grid.n(),
        });
    }
    if coeffs.a == 0.0 {
        return Err(GaugeError::ZeroDispersion);
    }
    let mean = grid.mean(r);
    if mean.abs() > MEAN_TOLERANCE * max_abs(r.iter().copied()).max(1.0) {
        return Err(GaugeError::NonZeroMean(mean));
    }
    let big_r = grid.antiderivative(r);
    let lambda = 2.0 * coeffs.d / (3.0 * coeffs.a);
    let psi_plus: Vec<Complex64> = big_r
        .iter()
        .map(|&v| Complex64::from_polar(1.0, -lambda * v))
        .collect();
    let psi_minus: Vec<Complex64> = psi_plus.iter().map(|z| z.conj()).collect();
    let dr_plus = grid.apply(&grid.project_real(r, Sign::Plus), |k| Complex64::new(0.0, k));
    let dr_minus = grid.apply(&grid.project_real(r, Sign::Minus), |k| Complex64::new(0.0, k));
    let w_plus = psi_plus.iter().zip(&dr_plus).map(|(a, b)| a * b).collect();
    let w_minus = psi_minus.iter().zip(&dr_minus).map(|(a, b)| a * b).collect();
    Ok(GaugedState {
        psi_plus,
        psi_minus,
        w_plus,
        w_minus,
    })
}

/// Ψ₋w₊ + Ψ₊w₋ before discarding the imaginary round-off.
pub fn reconstruct_dr_complex(gs: &GaugedState) -> Vec<Complex64> {
    gs.psi_minus
        .iter()
        .zip(&gs.w_plus)
        .zip(gs.psi_plus.iter().zip(&gs.w_minus))
        .map(|((pm, wp), (pp, wm))| pm * wp + pp * wm)
        .collect()
}

/// ∂ₓr recovered from the gauged variables: Ψ₋w₊ + Ψ₊w₋.
pub fn reconstruct_dr(gs: &GaugedState) -> Vec<f64> {
    reconstruct_dr_complex(gs).into_iter().map(|z| z.re).collect()
}

/// ‖3a∂ₓΨ₊ + 2idΨ₊r‖∞, the defining relation of Ψ.
pub fn gauge_ode_residual(grid: &Grid, gs: &GaugedState, r: &[f64], coeffs: &ReducedCoefficients) -> f64 {
    let dpsi = grid.apply(&gs.psi_plus, |k| Complex64::new(0.0, k));
    let i2d = Complex64::new(0.0, 2.0 * coeffs.d);
    max_abs(
        dpsi.iter()
            .zip(&gs.psi_plus)
            .zip(r)
            .map(|((dp, p), rv)| (3.0 * coeffs.a * dp + i2d * p * rv).norm()),
    )
}

/// Summary numbers for a diagnostics log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeDiagnostics {
    /// max |ΨΨ̄ − 1|.
    pub unimodularity: f64,
    /// Gauge-ODE residual divided by max(‖r‖∞, tiny).
    pub ode_residual_rel: f64,
    /// max |Ψ₋w₊ + Ψ₊w₋ − ∂ₓr| / max(‖∂ₓr‖∞, tiny).
    pub reconstruction_rel: f64,
}

/// Compute all gauge checks for one profile.
pub fn diagnostics(grid: &Grid, r: &[f64], coeffs: &ReducedCoefficients) -> Result<GaugeDiagnostics, GaugeError> {
    let gs = gauge(grid, r, coeffs)?;
    let unimodularity = max_abs(gs.psi_plus.iter().map(|z| z.norm() - 1.0));
    let rmax = max_abs(r.iter().copied()).max(f64::MIN_POSITIVE);
    let ode_residual_rel = gauge_ode_residual(grid, &gs, r, coeffs) / rmax;
    let rec = reconstruct_dr(&gs);
    let dr = grid.deriv(r, 1);
    let drmax = max_abs(dr.iter().copied()).max(f64::MIN_POSITIVE);
    let reconstruction_rel = max_abs(rec.iter().zip(&dr).map(|(a, b)| a - b)) / drmax;
    Ok(GaugeDiagnostics {
        unimodularity,
        ode_residual_rel,
        reconstruction_rel,
    })
}
