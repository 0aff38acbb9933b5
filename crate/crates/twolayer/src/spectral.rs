//! Periodic-grid Fourier machinery: multipliers |D|, ∂ₓ, the Hilbert
//! transform ℋ, projections P±, commutators and the exact linear
//! propagators of the reduced system.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::coeffs::ReducedCoefficients;

/// Errors raised by grid construction and the commutativity check.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field is not confined to the central half of the window (max |h| outside = {0:e})")]
    SupportViolation(f64),
    #[error("field length {got} does not match grid size {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// Sign selector for the projections P±.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Uniform periodic grid on [−L/2, L/2) with its FFT plans.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    /// Grid of `n` points (a power of two, at least 8) on a period `length`.
    pub fn new(n: usize, length: f64) -> Result<Self, SpectralError> {
        if n < 8 || !n.is_power_of_two() {
            return Err(SpectralError::InvalidGrid(format!(
                "n must be a power of two and at least 8, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(SpectralError::InvalidGrid(format!(
                "period must be positive, got {length}"
            )));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let dk = 2.0 * std::f64::consts::PI / length;
        let k = (0..n).map(|i| Self::mode_index(n, i) as f64 * dk).collect();
        Ok(Grid {
            n,
            length,
            k,
            fwd,
            inv,
        })
    }

    /// Signed mode number j ∈ {−n/2, …, n/2−1} of FFT slot `i`.
    fn mode_index(n: usize, i: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Wavenumbers in FFT order; slot n/2 holds the Nyquist mode −πn/L.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// FFT slot of the Nyquist mode.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Centred coordinates x_j = −L/2 + j·dx.
    pub fn x(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| -0.5 * self.length + j as f64 * self.dx())
            .collect()
    }

    /// Largest retained mode number under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Whether FFT slot `i` survives the 2/3 rule.
    pub fn is_retained(&self, i: usize) -> bool {
        Self::mode_index(self.n, i).unsigned_abs() as usize <= self.dealias_cutoff()
            && i != self.nyquist()
    }

    /// Unnormalised forward transform. Coefficients are indexed from the
    /// first sample, so they differ from centred-coordinate coefficients by
    /// a unimodular phase that every multiplier leaves untouched.
    pub fn forward(&self, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.n, "field length must match grid");
        let mut buf = f.to_vec();
        self.fwd.process(&mut buf);
        buf
    }

    /// Normalised inverse transform.
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(spec.len(), self.n, "spectrum length must match grid");
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    /// Spectrum of a real field.
    pub fn spectrum(&self, f: &[f64]) -> Vec<Complex64> {
        let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&c)
    }

    /// Real part of the inverse transform.
    pub fn real_inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        self.inverse(spec).into_iter().map(|z| z.re).collect()
    }

    /// Value of a symbol at FFT slot `i`. At the Nyquist slot the symbol is
    /// symmetrised, ½(σ(k_N) + σ(−k_N)), which zeroes odd multipliers and
    /// keeps even ones, so real fields stay real.
    pub fn symbol_at(&self, i: usize, sym: &impl Fn(f64) -> Complex64) -> Complex64 {
        let k = self.k[i];
        if i == self.nyquist() {
            0.5 * (sym(k) + sym(-k))
        } else {
            sym(k)
        }
    }

    /// Multiply a spectrum in place by a symbol.
    pub fn scale_spectrum(&self, spec: &mut [Complex64], sym: impl Fn(f64) -> Complex64) {
        for (i, z) in spec.iter_mut().enumerate() {
            *z *= self.symbol_at(i, &sym);
        }
    }

    /// Apply the Fourier multiplier `sym` to a complex field.
    pub fn apply(&self, f: &[Complex64], sym: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let mut spec = self.forward(f);
        self.scale_spectrum(&mut spec, sym);
        self.inverse(&spec)
    }

    /// Apply a multiplier to a real field, keeping the complex result.
    pub fn apply_to_real(&self, f: &[f64], sym: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let mut spec = self.spectrum(f);
        self.scale_spectrum(&mut spec, sym);
        self.inverse(&spec)
    }

    /// Apply a real-valued multiplier that maps real fields to real fields
    /// (any even real symbol, or i times an odd real symbol).
    pub fn apply_real(&self, f: &[f64], sym: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let mut spec = self.spectrum(f);
        self.scale_spectrum(&mut spec, sym);
        self.real_inverse(&spec)
    }

    /// m-th derivative ∂ₓᵐ.
    pub fn deriv(&self, f: &[f64], m: u32) -> Vec<f64> {
        self.apply_real(f, |k| deriv_symbol(k, m))
    }

    /// Hilbert transform, symbol −i·sgn(k).
    pub fn hilbert(&self, f: &[f64]) -> Vec<f64> {
        self.apply_real(f, hilbert_symbol)
    }

    /// |D| = |∂ₓ|, symbol |k|.
    pub fn abs_d(&self, f: &[f64]) -> Vec<f64> {
        self.apply_real(f, |k| Complex64::new(k.abs(), 0.0))
    }

    /// Projection P± onto positive or negative frequencies (mean and
    /// Nyquist modes split evenly).
    pub fn project(&self, f: &[Complex64], sign: Sign) -> Vec<Complex64> {
        self.apply(f, |k| projection_symbol(k, sign))
    }

    /// Projection of a real field.
    pub fn project_real(&self, f: &[f64], sign: Sign) -> Vec<Complex64> {
        self.apply_to_real(f, |k| projection_symbol(k, sign))
    }

    /// Spectral antiderivative with zero mean (the mean mode is dropped).
    pub fn antiderivative(&self, f: &[f64]) -> Vec<f64> {
        self.apply_real(f, |k| {
            if k == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0 / k)
            }
        })
    }

    /// Trapezoid (rectangle) quadrature ∫ f dx over one period.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dx()
    }

    /// Real part of ∫ f dx for a complex integrand.
    pub fn integrate_re(&self, f: &[Complex64]) -> f64 {
        f.iter().map(|z| z.re).sum::<f64>() * self.dx()
    }

    /// Mean value over one period.
    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / self.n as f64
    }

    /// L² norm computed in physical space.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        (f.iter().map(|v| v * v).sum::<f64>() * self.dx()).sqrt()
    }

    /// L² norm of a complex field.
    pub fn l2_norm_c(&self, f: &[Complex64]) -> f64 {
        (f.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx()).sqrt()
    }

    /// L² norm computed from the spectrum via Parseval.
    pub fn l2_norm_spectral(&self, spec: &[Complex64]) -> f64 {
        (spec.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx() / self.n as f64).sqrt()
    }

    /// Zero the modes discarded by the 2/3 rule.
    pub fn dealias_spectrum(&self, spec: &mut [Complex64]) {
        for (i, z) in spec.iter_mut().enumerate() {
            if !self.is_retained(i) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Band-limit a real field with the 2/3 rule.
    pub fn dealias(&self, f: &[f64]) -> Vec<f64> {
        let mut spec = self.spectrum(f);
        self.dealias_spectrum(&mut spec);
        self.real_inverse(&spec)
    }

    /// Fraction of ∫f² carried by the outer tenth of the window on each
    /// side; a monitor for wrap-around contamination.
    pub fn boundary_mass_fraction(&self, f: &[f64]) -> f64 {
        let total: f64 = f.iter().map(|v| v * v).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge = self.n / 10;
        let outer: f64 = f[..edge]
            .iter()
            .chain(f[self.n - edge..].iter())
            .map(|v| v * v)
            .sum();
        outer / total
    }

    /// Random real field, band-limited by the 2/3 rule, with zero mean and
    /// max-norm `amplitude`.
    pub fn random_field<R: Rng + ?Sized>(&self, rng: &mut R, amplitude: f64) -> Vec<f64> {
        let cut = self.dealias_cutoff();
        let mut spec = vec![Complex64::new(0.0, 0.0); self.n];
        for j in 1..=cut {
            // gentle spectral decay keeps the field smooth
            let w = 1.0 / (1.0 + (j as f64 / 8.0).powi(2));
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w;
            spec[j] = z;
            spec[self.n - j] = z.conj();
        }
        self.normalised(&spec, amplitude)
    }

    /// Random real, zero-mean field with a Gaussian spectral envelope
    /// e^{−(j/width)²} (so it is resolved far below the 2/3 cutoff), scaled
    /// to max-norm `amplitude`.
    pub fn random_smooth_field<R: Rng + ?Sized>(&self, rng: &mut R, amplitude: f64, width: f64) -> Vec<f64> {
        let cut = self.dealias_cutoff();
        let mut spec = vec![Complex64::new(0.0, 0.0); self.n];
        for j in 1..=cut {
            let w = (-(j as f64 / width).powi(2)).exp();
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w;
            spec[j] = z;
            spec[self.n - j] = z.conj();
        }
        self.normalised(&spec, amplitude)
    }

    fn normalised(&self, spec: &[Complex64], amplitude: f64) -> Vec<f64> {
        let f = self.real_inverse(spec);
        let m = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        f.into_iter().map(|v| v * amplitude / m).collect()
    }
}

/// Symbol of ∂ₓᵐ: (ik)ᵐ.
pub fn deriv_symbol(k: f64, m: u32) -> Complex64 {
    Complex64::new(0.0, k).powu(m)
}

/// sgn with sgn(0) = 0.
pub fn sgn(k: f64) -> f64 {
    if k > 0.0 {
        1.0
    } else if k < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Symbol of ℋ: −i·sgn(k).
pub fn hilbert_symbol(k: f64) -> Complex64 {
    Complex64::new(0.0, -sgn(k))
}

/// Symbol of P±: 1 on the selected half-line, ½ at k = 0.
pub fn projection_symbol(k: f64, sign: Sign) -> Complex64 {
    let s = match sign {
        Sign::Plus => sgn(k),
        Sign::Minus => -sgn(k),
    };
    Complex64::new(0.5 * (1.0 + s), 0.0)
}

/// ∂ₓˡ [P±, h] ∂ₓᵐ f = ∂ₓˡ (P±(h ∂ₓᵐ f) − h P±(∂ₓᵐ f)).
pub fn commutator_apply(
    grid: &Grid,
    h: &[f64],
    f: &[Complex64],
    sign: Sign,
    l: u32,
    m: u32,
) -> Vec<Complex64> {
    let dm = grid.apply(f, |k| deriv_symbol(k, m));
    let hdm: Vec<Complex64> = h.iter().zip(&dm).map(|(a, b)| b * a).collect();
    let p_hdm = grid.project(&hdm, sign);
    let p_dm = grid.project(&dm, sign);
    let diff: Vec<Complex64> = p_hdm
        .iter()
        .zip(&p_dm)
        .zip(h)
        .map(|((a, b), hv)| a - b * hv)
        .collect();
    grid.apply(&diff, |k| deriv_symbol(k, l))
}

/// Linear flows of the reduced system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorKind {
    /// V(t) = e^{−t(a∂ₓ³ − bℋ∂ₓ²)}, symbol e^{it(ak³ + bk|k|)}.
    V,
    /// W₊(t), symbol e^{it(ak³ + bk²)} (V restricted to positive frequencies).
    WPlus,
    /// W₋(t), symbol e^{it(ak³ − bk²)} (V restricted to negative frequencies).
    WMinus,
    /// U(t) = e^{−itα∂ₓ²}, symbol e^{itαk²}.
    U,
}

/// Phase rate of a propagator at wavenumber k, so the symbol is e^{i t φ(k)}.
pub fn propagator_phase(kind: PropagatorKind, c: &ReducedCoefficients, k: f64) -> f64 {
    match kind {
        PropagatorKind::V => c.a * k * k * k + c.b * k * k.abs(),
        PropagatorKind::WPlus => c.a * k * k * k + c.b * k * k,
        PropagatorKind::WMinus => c.a * k * k * k - c.b * k * k,
        PropagatorKind::U => c.alpha * k * k,
    }
}

/// Apply a linear propagator exactly in Fourier space.
pub fn propagator(
    grid: &Grid,
    kind: PropagatorKind,
    coeffs: &ReducedCoefficients,
    t: f64,
    f: &[Complex64],
) -> Vec<Complex64> {
    grid.apply(f, |k| Complex64::from_polar(1.0, t * propagator_phase(kind, coeffs, k)))
}

/// Residual of the commutation rule
/// (a∂ₓ³ − bℋ∂ₓ²)(x h) = (3a∂ₓ² − 2bℋ∂ₓ) h + x (a∂ₓ³ − bℋ∂ₓ²) h
/// in the max norm, with x the centred coordinate.
///
/// `h` must vanish (to 1e−10) outside the central half of the window.
pub fn commutativity_check(
    grid: &Grid,
    a: f64,
    b: f64,
    h: &[f64],
) -> Result<f64, SpectralError> {
    if h.len() != grid.n() {
        return Err(SpectralError::LengthMismatch {
            got: h.len(),
            want: grid.n(),
        });
    }
    let x = grid.x();
    let quarter = 0.25 * grid.length();
    let outside = x
        .iter()
        .zip(h)
        .filter(|(xv, _)| xv.abs() > quarter)
        .fold(0.0f64, |m, (_, hv)| m.max(hv.abs()));
    if outside > 1e-10 {
        return Err(SpectralError::SupportViolation(outside));
    }
    let t_sym = |k: f64| a * deriv_symbol(k, 3) - b * hilbert_symbol(k) * deriv_symbol(k, 2);
    let s_sym = |k: f64| 3.0 * a * deriv_symbol(k, 2) - 2.0 * b * hilbert_symbol(k) * deriv_symbol(k, 1);
    let xh: Vec<f64> = x.iter().zip(h).map(|(xv, hv)| xv * hv).collect();
    let lhs = grid.apply_real(&xh, t_sym);
    let sh = grid.apply_real(h, s_sym);
    let th = grid.apply_real(h, t_sym);
    let res = lhs
        .iter()
        .zip(&sh)
        .zip(th.iter().zip(&x))
        .fold(0.0f64, |m, ((l, s), (t, xv))| m.max((l - s - xv * t).abs()));
    Ok(res)
}

/// A real field sampled on a grid, with a lazily cached spectrum.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    spectrum: std::sync::OnceLock<Vec<Complex64>>,
}

impl RealField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.n() {
            return Err(SpectralError::LengthMismatch {
                got: values.len(),
                want: grid.n(),
            });
        }
        Ok(RealField {
            grid,
            values,
            spectrum: std::sync::OnceLock::new(),
        })
    }

    /// Sample a function at the grid points.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.x().into_iter().map(f).collect();
        RealField {
            grid,
            values,
            spectrum: std::sync::OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Fourier coefficients (computed once).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.spectrum(&self.values))
    }

    fn with_spectrum(&self, sym: impl Fn(f64) -> Complex64) -> RealField {
        let mut spec = self.spectrum().to_vec();
        self.grid.scale_spectrum(&mut spec, sym);
        RealField {
            grid: self.grid.clone(),
            values: self.grid.real_inverse(&spec),
            spectrum: std::sync::OnceLock::new(),
        }
    }

    pub fn hilbert(&self) -> RealField {
        self.with_spectrum(hilbert_symbol)
    }

    pub fn abs_d(&self) -> RealField {
        self.with_spectrum(|k| Complex64::new(k.abs(), 0.0))
    }

    pub fn deriv(&self, m: u32) -> RealField {
        self.with_spectrum(|k| deriv_symbol(k, m))
    }

    pub fn project(&self, sign: Sign) -> ComplexField {
        let mut spec = self.spectrum().to_vec();
        self.grid.scale_spectrum(&mut spec, |k| projection_symbol(k, sign));
        ComplexField {
            grid: self.grid.clone(),
            values: self.grid.inverse(&spec),
        }
    }
}

/// A complex field sampled on a grid.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self, SpectralError> {
        if values.len() != grid.n() {
            return Err(SpectralError::LengthMismatch {
                got: values.len(),
                want: grid.n(),
            });
        }
        Ok(ComplexField { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn project(&self, sign: Sign) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.grid.project(&self.values, sign),
        }
    }
}
