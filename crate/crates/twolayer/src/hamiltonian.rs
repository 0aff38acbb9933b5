//! Quadratic and cubic Hamiltonians in original (η, ξ, η₁, ξ₁) and
//! normal-mode (μ, ζ, μ₁, ζ₁) coordinates, the canonical transform between
//! them, and the first-order Dirichlet–Neumann operators.
//!
//! Conventions: D = −i∂ₓ has the real symbol k, so odd multipliers map real
//! fields to purely imaginary ones. Every multiplier output is therefore kept
//! complex and integrals take the real part; e.g. (Dξ)² = −(∂ₓξ)².

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::coeffs::{symbols_at, CoeffError, PhysicalParams, Symbols};
use crate::spectral::Grid;

/// Errors from Hamiltonian evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("operation expects {expected:?} coordinates, field is tagged {got:?}")]
    CoordinateMismatch {
        expected: Coordinates,
        got: Coordinates,
    },
    #[error("field grid does not match the evaluation context")]
    GridMismatch,
    #[error("component {index} has length {got}, grid has {want} points")]
    LengthMismatch { index: usize, got: usize, want: usize },
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

/// Coordinate system of a [`FourField`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coordinates {
    /// (η, ξ, η₁, ξ₁): interface, interface potential, surface, surface potential.
    Original,
    /// (μ, ζ, μ₁, ζ₁): interface and surface normal modes.
    Normal,
}

/// Four real fields on one grid, tagged with their coordinate system.
#[derive(Clone, Debug)]
pub struct FourField {
    pub coords: Coordinates,
    pub grid: Arc<Grid>,
    pub fields: [Vec<f64>; 4],
}

impl FourField {
    pub fn new(
        coords: Coordinates,
        grid: Arc<Grid>,
        fields: [Vec<f64>; 4],
    ) -> Result<Self, HamiltonianError> {
        for (index, f) in fields.iter().enumerate() {
            if f.len() != grid.n() {
                return Err(HamiltonianError::LengthMismatch {
                    index,
                    got: f.len(),
                    want: grid.n(),
                });
            }
        }
        Ok(FourField {
            coords,
            grid,
            fields,
        })
    }

    pub fn zeros(coords: Coordinates, grid: Arc<Grid>) -> Self {
        let n = grid.n();
        FourField {
            coords,
            grid,
            fields: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    /// Multiply every component by λ.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        for f in out.fields.iter_mut() {
            f.iter_mut().for_each(|v| *v *= lambda);
        }
        out
    }

    /// Random band-limited original-coordinate field: elevations with
    /// max-norm `elevation`, potentials with max-norm `potential`.
    pub fn random<R: Rng + ?Sized>(
        grid: Arc<Grid>,
        rng: &mut R,
        elevation: f64,
        potential: f64,
    ) -> Self {
        let fields = [
            grid.random_field(rng, elevation),
            grid.random_field(rng, potential),
            grid.random_field(rng, elevation),
            grid.random_field(rng, potential),
        ];
        FourField {
            coords: Coordinates::Original,
            grid,
            fields,
        }
    }
}

/// A symbol selected from the per-wavenumber table; receives the row and k.
pub type Sel<'a> = &'a dyn Fn(&Symbols<f64>, f64) -> f64;

/// Symbol table for every wavenumber of a grid, ready to apply multipliers.
#[derive(Clone, Debug)]
pub struct HamiltonianContext {
    grid: Arc<Grid>,
    params: PhysicalParams,
    rows: Vec<Symbols<f64>>,
    nyquist_mirror: Symbols<f64>,
}

impl HamiltonianContext {
    pub fn new(grid: Arc<Grid>, params: PhysicalParams) -> Result<Self, HamiltonianError> {
        params.validate()?;
        let ks = grid.wavenumbers();
        let rows = ks.iter().map(|&k| symbols_at(&params, k)).collect();
        let nyquist_mirror = symbols_at(&params, -ks[grid.nyquist()]);
        Ok(HamiltonianContext {
            grid,
            params,
            rows,
            nyquist_mirror,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    fn check(&self, f: &FourField, expected: Coordinates) -> Result<(), HamiltonianError> {
        if f.coords != expected {
            return Err(HamiltonianError::CoordinateMismatch {
                expected,
                got: f.coords,
            });
        }
        if *f.grid != *self.grid {
            return Err(HamiltonianError::GridMismatch);
        }
        Ok(())
    }

    /// Symbol value at FFT slot i (Nyquist symmetrised).
    fn value(&self, i: usize, sel: Sel) -> f64 {
        let k = self.grid.wavenumbers()[i];
        if i == self.grid.nyquist() {
            0.5 * (sel(&self.rows[i], k) + sel(&self.nyquist_mirror, -k))
        } else {
            sel(&self.rows[i], k)
        }
    }

    /// Inverse transform of Σⱼ mⱼ(k) f̂ⱼ(k).
    pub fn combine(&self, terms: &[(&[Complex64], Sel)]) -> Vec<Complex64> {
        let n = self.grid.n();
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for (i, z) in spec.iter_mut().enumerate() {
            for (f, sel) in terms {
                *z += f[i] * self.value(i, *sel);
            }
        }
        self.grid.inverse(&spec)
    }

    /// Apply a single symbol to a complex field.
    pub fn apply(&self, f: &[Complex64], sel: Sel) -> Vec<Complex64> {
        let spec = self.grid.forward(f);
        self.combine(&[(&spec, sel)])
    }

    /// Spectrum of a real field restricted to the 2/3-rule band.
    fn band_spectrum(&self, f: &[f64]) -> Vec<Complex64> {
        let mut s = self.grid.spectrum(f);
        self.grid.dealias_spectrum(&mut s);
        s
    }

    fn band_field(&self, f: &[f64]) -> Vec<f64> {
        self.grid.real_inverse(&self.band_spectrum(f))
    }

    /// ∫ Re(w·u·v) dx.
    fn cubic(&self, w: &[f64], u: &[Complex64], v: &[Complex64]) -> f64 {
        w.iter()
            .zip(u.iter().zip(v))
            .map(|(wv, (a, b))| wv * (a * b).re)
            .sum::<f64>()
            * self.grid.dx()
    }

    /// ∫ Re(u·v) dx.
    fn quad(&self, u: &[Complex64], v: &[Complex64]) -> f64 {
        self.grid
            .integrate_re(&u.iter().zip(v).map(|(a, b)| a * b).collect::<Vec<_>>())
    }
}

fn real_of(v: Vec<Complex64>) -> Vec<f64> {
    v.into_iter().map(|z| z.re).collect()
}

fn cplx(f: &[f64]) -> Vec<Complex64> {
    f.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Canonical transform (η, ξ, η₁, ξ₁) → (μ, ζ, μ₁, ζ₁).
pub fn normal_transform(
    ctx: &HamiltonianContext,
    f: &FourField,
) -> Result<FourField, HamiltonianError> {
    ctx.check(f, Coordinates::Original)?;
    let si = ctx.params.s_int();
    let ss = ctx.params.s_surf();
    let [eta, xi, eta1, xi1] = &f.fields;
    let (e, x, e1, x1) = (
        ctx.grid.spectrum(eta),
        ctx.grid.spectrum(xi),
        ctx.grid.spectrum(eta1),
        ctx.grid.spectrum(xi1),
    );
    let mu = ctx.combine(&[(&e, &|s, _| s.a_minus * si), (&e1, &|s, _| s.b_minus * ss)]);
    let mu1 = ctx.combine(&[(&e, &|s, _| s.a_plus * si), (&e1, &|s, _| s.b_plus * ss)]);
    let zeta = ctx.combine(&[(&x, &|s, _| s.a_minus / si), (&x1, &|s, _| s.b_minus / ss)]);
    let zeta1 = ctx.combine(&[(&x, &|s, _| s.a_plus / si), (&x1, &|s, _| s.b_plus / ss)]);
    FourField::new(
        Coordinates::Normal,
        f.grid.clone(),
        [real_of(mu), real_of(zeta), real_of(mu1), real_of(zeta1)],
    )
}

/// Inverse canonical transform (μ, ζ, μ₁, ζ₁) → (η, ξ, η₁, ξ₁).
pub fn inverse_normal_transform(
    ctx: &HamiltonianContext,
    f: &FourField,
) -> Result<FourField, HamiltonianError> {
    ctx.check(f, Coordinates::Normal)?;
    let si = ctx.params.s_int();
    let ss = ctx.params.s_surf();
    let [mu, zeta, mu1, zeta1] = &f.fields;
    let (m, z, m1, z1) = (
        ctx.grid.spectrum(mu),
        ctx.grid.spectrum(zeta),
        ctx.grid.spectrum(mu1),
        ctx.grid.spectrum(zeta1),
    );
    let eta = ctx.combine(&[(&m, &|s, _| s.b_plus / si), (&m1, &|s, _| -s.b_minus / si)]);
    let eta1 = ctx.combine(&[(&m, &|s, _| -s.a_plus / ss), (&m1, &|s, _| s.a_minus / ss)]);
    let xi = ctx.combine(&[(&z, &|s, _| s.b_plus * si), (&z1, &|s, _| -s.b_minus * si)]);
    let xi1 = ctx.combine(&[(&z, &|s, _| -s.a_plus * ss), (&z1, &|s, _| s.a_minus * ss)]);
    FourField::new(
        Coordinates::Original,
        f.grid.clone(),
        [real_of(eta), real_of(xi), real_of(eta1), real_of(xi1)],
    )
}

/// Quadratic Hamiltonian H⁽²⁾ in whichever coordinates `f` carries.
pub fn eval_h2(ctx: &HamiltonianContext, f: &FourField) -> Result<f64, HamiltonianError> {
    if *f.grid != *ctx.grid {
        return Err(HamiltonianError::GridMismatch);
    }
    let p = ctx.params;
    let g = &ctx.grid;
    match f.coords {
        Coordinates::Original => {
            let [eta, xi, eta1, xi1] = &f.fields;
            let (x, x1) = (g.spectrum(xi), g.spectrum(xi1));
            // ξ (G₁₁G₀/B₀) ξ + 2ξ(−G₀G₁₂/B₀)ξ₁ + ξ₁ ρ₁⁻¹(G₁₁ − ρG₁₂²/B₀) ξ₁,
            // the last symbol written in the cancellation-free form
            // G₀(ρG₀ + ρ₁G₁₁)/(ρ₁B₀).
            let k11 = ctx.combine(&[(&x, &|s, _| s.g11 * s.g0 / s.b0), (&x1, &|s, _| -s.g0 * s.g12 / s.b0)]);
            let k22 = ctx.combine(&[
                (&x, &|s, _| -s.g0 * s.g12 / s.b0),
                (&x1, &|s, _| s.g0 * (p.rho * s.g0 + p.rho1 * s.g11) / (p.rho1 * s.b0)),
            ]);
            let kin = ctx.quad(&cplx(xi), &k11) + ctx.quad(&cplx(xi1), &k22);
            let pot = p.g * (p.rho - p.rho1) * eta.iter().map(|v| v * v).sum::<f64>() * g.dx()
                + p.g * p.rho1 * eta1.iter().map(|v| v * v).sum::<f64>() * g.dx();
            Ok(0.5 * (kin + pot))
        }
        Coordinates::Normal => {
            let [mu, zeta, mu1, zeta1] = &f.fields;
            let wz = ctx.apply(&cplx(zeta), &|s, _| s.omega_sq);
            let wz1 = ctx.apply(&cplx(zeta1), &|s, _| s.omega1_sq);
            let e = ctx.quad(&cplx(zeta), &wz)
                + ctx.quad(&cplx(zeta1), &wz1)
                + g.integrate(&mu.iter().map(|v| v * v).collect::<Vec<_>>())
                + g.integrate(&mu1.iter().map(|v| v * v).collect::<Vec<_>>());
            Ok(0.5 * e)
        }
    }
}

/// Value of H⁽³⁾ with its per-term breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct H3Breakdown {
    pub total: f64,
    pub terms: Vec<(&'static str, f64)>,
}

/// Cubic Hamiltonian H⁽³⁾ in whichever coordinates `f` carries. The factors
/// are band-limited by the 2/3 rule so the trapezoid quadrature of every
/// triple product is exact.
///
/// Original coordinates: the five terms of
/// ½∫[−(ρ−ρ₁)η(G₀B₀⁻¹(G₁₁ξ − G₁₂ξ₁))² − ρ₁η₁(G₁₂B₀⁻¹G₀ξ − ρ₁⁻¹G₀B₀⁻¹(ρ₁G₁₁+ρG₀)ξ₁)²
///   − ρη(DB₀⁻¹(G₁₁ξ − G₁₂ξ₁))² + ρ₁η(DB₀⁻¹G₀ξ + (ρ/ρ₁)DB₀⁻¹G₁₂ξ₁)² − ρ₁⁻¹η₁(Dξ₁)²].
///
/// Normal coordinates: R₁..R₅, Rⱼ = cⱼ∫ mⱼ (𝒜ⱼζ − ℬⱼζ₁)².
pub fn eval_h3(ctx: &HamiltonianContext, f: &FourField) -> Result<H3Breakdown, HamiltonianError> {
    if *f.grid != *ctx.grid {
        return Err(HamiltonianError::GridMismatch);
    }
    let p = ctx.params;
    let (rho, rho1) = (p.rho, p.rho1);
    let terms: Vec<(&'static str, f64)> = match f.coords {
        Coordinates::Original => {
            let eta = ctx.band_field(&f.fields[0]);
            let x = ctx.band_spectrum(&f.fields[1]);
            let eta1 = ctx.band_field(&f.fields[2]);
            let x1 = ctx.band_spectrum(&f.fields[3]);
            let u1 = ctx.combine(&[(&x, &|s, _| s.g0 * s.g11 / s.b0), (&x1, &|s, _| -s.g0 * s.g12 / s.b0)]);
            let u2 = ctx.combine(&[
                (&x, &|s, _| s.g12 * s.g0 / s.b0),
                (&x1, &|s, _| -s.g0 * (rho1 * s.g11 + rho * s.g0) / (rho1 * s.b0)),
            ]);
            let u3 = ctx.combine(&[(&x, &|s, k| k * s.g11 / s.b0), (&x1, &|s, k| -k * s.g12 / s.b0)]);
            let u4 = ctx.combine(&[(&x, &|s, k| k * s.g0 / s.b0), (&x1, &|s, k| rho / rho1 * k * s.g12 / s.b0)]);
            let u5 = ctx.combine(&[(&x1, &|_, k| k)]);
            vec![
                ("eta*(G0 B0^-1 (G11 xi - G12 xi1))^2", -0.5 * (rho - rho1) * ctx.cubic(&eta, &u1, &u1)),
                ("eta1*(G12 B0^-1 G0 xi - ...)^2", -0.5 * rho1 * ctx.cubic(&eta1, &u2, &u2)),
                ("eta*(D B0^-1 (G11 xi - G12 xi1))^2", -0.5 * rho * ctx.cubic(&eta, &u3, &u3)),
                ("eta*(D B0^-1 G0 xi + ...)^2", 0.5 * rho1 * ctx.cubic(&eta, &u4, &u4)),
                ("eta1*(D xi1)^2", -0.5 / rho1 * ctx.cubic(&eta1, &u5, &u5)),
            ]
        }
        Coordinates::Normal => {
            let m = ctx.band_spectrum(&f.fields[0]);
            let z = ctx.band_spectrum(&f.fields[1]);
            let m1 = ctx.band_spectrum(&f.fields[2]);
            let z1 = ctx.band_spectrum(&f.fields[3]);
            let mb = real_of(ctx.combine(&[(&m, &|s, _| s.b_plus), (&m1, &|s, _| -s.b_minus)]));
            let ma = real_of(ctx.combine(&[(&m, &|s, _| s.a_plus), (&m1, &|s, _| -s.a_minus)]));
            let si = p.s_int();
            let ss = p.s_surf();
            let coef = [
                -(rho - rho1) / (2.0 * si),
                rho1 / (2.0 * ss),
                -rho / (2.0 * si),
                rho1 / (2.0 * si),
                1.0 / (2.0 * rho1 * ss),
            ];
            let names = ["R1", "R2", "R3", "R4", "R5"];
            (0..5)
                .map(|j| {
                    let u = ctx.combine(&[(&z, &move |s, _| s.cal_a[j]), (&z1, &move |s, _| -s.cal_b[j])]);
                    let w = if j == 1 || j == 4 { &ma } else { &mb };
                    (names[j], coef[j] * ctx.cubic(w, &u, &u))
                })
                .collect()
        }
    };
    let total = terms.iter().map(|(_, v)| v).sum();
    Ok(H3Breakdown { total, terms })
}

/// The cubic parts I⁽³⁾, II⁽³⁾, III⁽³⁾ of the kinetic-energy split
/// K = I − II + III, so that H⁽³⁾ = I⁽³⁾ − II⁽³⁾ + III⁽³⁾.
pub fn kinetic_cubic_parts(
    ctx: &HamiltonianContext,
    f: &FourField,
) -> Result<[f64; 3], HamiltonianError> {
    ctx.check(f, Coordinates::Original)?;
    let p = ctx.params;
    let (rho, rho1) = (p.rho, p.rho1);
    let eta = ctx.band_field(&f.fields[0]);
    let x = ctx.band_spectrum(&f.fields[1]);
    let eta1 = ctx.band_field(&f.fields[2]);
    let x1 = ctx.band_spectrum(&f.fields[3]);

    let d_g11_x = ctx.combine(&[(&x, &|s, k| k * s.g11 / s.b0)]);
    let g0_g11_x = ctx.combine(&[(&x, &|s, _| s.g0 * s.g11 / s.b0)]);
    let d_g0_x = ctx.combine(&[(&x, &|s, k| k * s.g0 / s.b0)]);
    let g0_g12_x = ctx.combine(&[(&x, &|s, _| s.g0 * s.g12 / s.b0)]);
    let d_g12_x1 = ctx.combine(&[(&x1, &|s, k| k * s.g12 / s.b0)]);
    let g0_g12_x1 = ctx.combine(&[(&x1, &|s, _| s.g0 * s.g12 / s.b0)]);
    let g0_c_x1 = ctx.combine(&[(&x1, &|s, _| s.g0 * (rho1 * s.g11 + rho * s.g0) / s.b0)]);
    let d_x1 = ctx.combine(&[(&x1, &|_, k| k)]);

    let i3 = 0.5
        * (-rho * ctx.cubic(&eta, &d_g11_x, &d_g11_x)
            - (rho - rho1) * ctx.cubic(&eta, &g0_g11_x, &g0_g11_x)
            + rho1 * ctx.cubic(&eta, &d_g0_x, &d_g0_x)
            - rho1 * ctx.cubic(&eta1, &g0_g12_x, &g0_g12_x));
    let ii3 = -rho * ctx.cubic(&eta, &d_g11_x, &d_g12_x1)
        - (rho - rho1) * ctx.cubic(&eta, &g0_g11_x, &g0_g12_x1)
        - rho * ctx.cubic(&eta, &d_g0_x, &d_g12_x1)
        - ctx.cubic(&eta1, &g0_g12_x, &g0_c_x1);
    let iii3 = 0.5
        * (-(rho - rho1) * ctx.cubic(&eta, &g0_g12_x1, &g0_g12_x1)
            + rho / rho1 * (rho - rho1) * ctx.cubic(&eta, &d_g12_x1, &d_g12_x1)
            - 1.0 / rho1 * ctx.cubic(&eta1, &g0_c_x1, &g0_c_x1)
            - 1.0 / rho1 * ctx.cubic(&eta1, &d_x1, &d_x1));
    Ok([i3, ii3, iii3])
}

/// First-order Dirichlet–Neumann operators for given elevations η, η₁.
/// Every operator is linear in the elevations and acts on complex fields.
#[derive(Clone, Debug)]
pub struct DnoFirstOrder<'a> {
    ctx: &'a HamiltonianContext,
    eta: Vec<f64>,
    eta1: Vec<f64>,
}

impl<'a> DnoFirstOrder<'a> {
    fn mul(w: &[f64], f: &[Complex64]) -> Vec<Complex64> {
        w.iter().zip(f).map(|(a, b)| b * a).collect()
    }

    /// A η B φ for multipliers A, B and elevation `w`.
    fn sandwich(&self, a: Sel, w: &[f64], b: Sel, phi: &[Complex64]) -> Vec<Complex64> {
        let bphi = self.ctx.apply(phi, b);
        self.ctx.apply(&Self::mul(w, &bphi), a)
    }

    fn add(u: Vec<Complex64>, v: Vec<Complex64>, sv: f64) -> Vec<Complex64> {
        u.into_iter().zip(v).map(|(a, b)| a + sv * b).collect()
    }

    /// G⁽¹⁾(η) = DηD − |D|η|D|.
    pub fn g1(&self, phi: &[Complex64]) -> Vec<Complex64> {
        Self::add(
            self.sandwich(&|_, k| k, &self.eta, &|_, k| k, phi),
            self.sandwich(&|s, _| s.g0, &self.eta, &|s, _| s.g0, phi),
            -1.0,
        )
    }

    /// G₁₁⁽¹⁰⁾ = G₁₁ηG₁₁ − DηD.
    pub fn g11_10(&self, phi: &[Complex64]) -> Vec<Complex64> {
        Self::add(
            self.sandwich(&|s, _| s.g11, &self.eta, &|s, _| s.g11, phi),
            self.sandwich(&|_, k| k, &self.eta, &|_, k| k, phi),
            -1.0,
        )
    }

    /// G₁₂⁽¹⁰⁾ = G₁₁ηG₁₂.
    pub fn g12_10(&self, phi: &[Complex64]) -> Vec<Complex64> {
        self.sandwich(&|s, _| s.g11, &self.eta, &|s, _| s.g12, phi)
    }

    /// G₂₁⁽¹⁰⁾ = G₁₂ηG₁₁.
    pub fn g21_10(&self, phi: &[Complex64]) -> Vec<Complex64> {
        self.sandwich(&|s, _| s.g12, &self.eta, &|s, _| s.g11, phi)
    }

    /// G₂₂⁽¹⁰⁾ = G₁₂ηG₁₂.
    pub fn g22_10(&self, phi: &[Complex64]) -> Vec<Complex64> {
        self.sandwich(&|s, _| s.g12, &self.eta, &|s, _| s.g12, phi)
    }

    /// G₁₁⁽⁰¹⁾ = −G₁₂η₁G₁₂.
    pub fn g11_01(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let v = self.sandwich(&|s, _| s.g12, &self.eta1, &|s, _| s.g12, phi);
        v.into_iter().map(|z| -z).collect()
    }

    /// G₁₂⁽⁰¹⁾ = −G₁₂η₁G₁₁.
    pub fn g12_01(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let v = self.sandwich(&|s, _| s.g12, &self.eta1, &|s, _| s.g11, phi);
        v.into_iter().map(|z| -z).collect()
    }

    /// G₂₁⁽⁰¹⁾ = −G₁₁η₁G₁₂.
    pub fn g21_01(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let v = self.sandwich(&|s, _| s.g11, &self.eta1, &|s, _| s.g12, phi);
        v.into_iter().map(|z| -z).collect()
    }

    /// G₂₂⁽⁰¹⁾ = −G₁₁η₁G₁₁ + Dη₁D.
    pub fn g22_01(&self, phi: &[Complex64]) -> Vec<Complex64> {
        Self::add(
            self.sandwich(&|_, k| k, &self.eta1, &|_, k| k, phi),
            self.sandwich(&|s, _| s.g11, &self.eta1, &|s, _| s.g11, phi),
            -1.0,
        )
    }
}

/// First-order DNO operators at elevations (η, η₁).
pub fn dno_first_order<'a>(
    ctx: &'a HamiltonianContext,
    eta: &[f64],
    eta1: &[f64],
) -> DnoFirstOrder<'a> {
    DnoFirstOrder {
        ctx,
        eta: eta.to_vec(),
        eta1: eta1.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn setup(n: usize) -> HamiltonianContext {
        let grid = Arc::new(Grid::new(n, 4000.0).unwrap());
        HamiltonianContext::new(grid, PhysicalParams::ANDAMAN).unwrap()
    }

    fn sample(ctx: &HamiltonianContext, seed: u64) -> FourField {
        let mut rng = StdRng::seed_from_u64(seed);
        FourField::random(ctx.grid().clone(), &mut rng, 0.05 * ctx.params().h1, 100.0)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    fn ip(ctx: &HamiltonianContext, u: &[Complex64], v: &[Complex64]) -> f64 {
        ctx.quad(u, v)
    }

    #[test]
    fn zero_fields() {
        let ctx = setup(64);
        let z = FourField::zeros(Coordinates::Original, ctx.grid().clone());
        assert_eq!(eval_h2(&ctx, &z).unwrap(), 0.0);
        assert_eq!(eval_h3(&ctx, &z).unwrap().total, 0.0);
        let nz = normal_transform(&ctx, &z).unwrap();
        assert!(nz.fields.iter().all(|f| f.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn pure_mu_energy() {
        let ctx = setup(64);
        let mut f = FourField::zeros(Coordinates::Normal, ctx.grid().clone());
        let mut rng = StdRng::seed_from_u64(5);
        f.fields[0] = ctx.grid().random_field(&mut rng, 2.0);
        let want = 0.5 * ctx.grid().l2_norm(&f.fields[0]).powi(2);
        assert!(rel(eval_h2(&ctx, &f).unwrap(), want) < 1e-14);
    }

    #[test]
    fn cubic_vanishes_without_elevation() {
        let ctx = setup(64);
        let mut f = sample(&ctx, 9);
        f.fields[0].iter_mut().for_each(|v| *v = 0.0);
        f.fields[2].iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(eval_h3(&ctx, &f).unwrap().total, 0.0);
    }

    #[test]
    fn coordinate_mismatch_reported() {
        let ctx = setup(64);
        let f = FourField::zeros(Coordinates::Normal, ctx.grid().clone());
        assert!(matches!(normal_transform(&ctx, &f), Err(HamiltonianError::CoordinateMismatch { .. })));
        assert!(matches!(kinetic_cubic_parts(&ctx, &f), Err(HamiltonianError::CoordinateMismatch { .. })));
    }

    #[test]
    fn single_mode_matches_dense_matrix() {
        // Grid chosen so that k = 0.5 is a grid wavenumber.
        let n = 64;
        let l = 2.0 * std::f64::consts::PI * 8.0 / 0.5;
        let grid = Arc::new(Grid::new(n, l).unwrap());
        let p = PhysicalParams::new(9.81, 3.0, 1000.0, 950.0).unwrap();
        let ctx = HamiltonianContext::new(grid.clone(), p).unwrap();
        let x = grid.x();
        let amps = [0.3, -1.2, 0.7, 2.0];
        let fields = amps.map(|a| x.iter().map(|xv| a * (0.5 * xv).cos()).collect::<Vec<_>>());
        let f = FourField::new(Coordinates::Original, grid, fields).unwrap();
        let nf = normal_transform(&ctx, &f).unwrap();
        let s = symbols_at(&p, 0.5);
        let (si, ss) = (p.s_int(), p.s_surf());
        let m = [
            [s.a_minus * si, 0.0, s.b_minus * ss, 0.0],
            [0.0, s.a_minus / si, 0.0, s.b_minus / ss],
            [s.a_plus * si, 0.0, s.b_plus * ss, 0.0],
            [0.0, s.a_plus / si, 0.0, s.b_plus / ss],
        ];
        for r in 0..4 {
            let want: f64 = (0..4).map(|c| m[r][c] * amps[c]).sum();
            for (j, xv) in x.iter().enumerate() {
                assert!((nf.fields[r][j] - want * (0.5 * xv).cos()).abs() < 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn dno_identities_and_symmetry() {
        let ctx = setup(128);
        let mut rng = StdRng::seed_from_u64(21);
        let g = ctx.grid().clone();
        let eta = g.random_field(&mut rng, 10.0);
        let eta1 = g.random_field(&mut rng, 10.0);
        let phi: Vec<Complex64> = cplx(&g.random_field(&mut rng, 1.0));
        let psi: Vec<Complex64> = cplx(&g.random_field(&mut rng, 1.0));
        let op = dno_first_order(&ctx, &eta, &eta1);

        // G₁₁⁽⁰¹⁾φ = −G₁₂(η₁·G₁₂φ), built independently from raw multipliers
        let g12phi = g.apply(&phi, |k| Complex64::new(symbols_at(&PhysicalParams::ANDAMAN, k).g12, 0.0));
        let prod: Vec<Complex64> = eta1.iter().zip(&g12phi).map(|(a, b)| b * a).collect();
        let want: Vec<Complex64> = g
            .apply(&prod, |k| Complex64::new(-symbols_at(&PhysicalParams::ANDAMAN, k).g12, 0.0));
        let scale = want.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(max_diff(&op.g11_01(&phi), &want) < 1e-11 * scale);

        // self-adjointness of G⁽¹⁾ and of the diagonal entries
        for f in [DnoFirstOrder::g1, DnoFirstOrder::g11_10, DnoFirstOrder::g22_01] {
            let a = ip(&ctx, &f(&op, &phi), &psi);
            let b = ip(&ctx, &phi, &f(&op, &psi));
            assert!((a - b).abs() < 1e-11 * a.abs().max(1e-300));
        }
        // G₂₁ is the adjoint of G₁₂
        let a = ip(&ctx, &op.g12_10(&phi), &psi);
        let b = ip(&ctx, &phi, &op.g21_10(&psi));
        assert!((a - b).abs() < 1e-11 * a.abs());

        // linearity in η
        let eta2: Vec<f64> = eta.iter().map(|v| 2.0 * v).collect();
        let op2 = dno_first_order(&ctx, &eta2, &eta1);
        let one = op.g1(&phi);
        let two = op2.g1(&phi);
        let scale = one.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(one.iter().zip(&two).all(|(a, b)| (2.0 * a - b).norm() < 1e-12 * scale));

        // η = 0 gives the zero operator
        let zero = dno_first_order(&ctx, &vec![0.0; 128], &vec![0.0; 128]);
        assert!(zero.g1(&phi).iter().chain(zero.g22_01(&phi).iter()).all(|z| z.norm() == 0.0));
    }

    /// I⁽³⁾, II⁽³⁾, III⁽³⁾ by expanding the operator products
    /// I = ½⟨ξ, G₁₁B⁻¹Gξ⟩, II = ⟨ξ, GB⁻¹G₁₂ξ₁⟩,
    /// III = ½⟨ξ₁, (ρ₁⁻¹G₂₂ − ρρ₁⁻¹G₂₁B⁻¹G₁₂)ξ₁⟩
    /// to first order, with B⁻¹ ≈ B₀⁻¹ − B₀⁻¹B⁽¹⁾B₀⁻¹.
    fn operator_route(ctx: &HamiltonianContext, f: &FourField) -> [f64; 3] {
        let p = *ctx.params();
        let (rho, rho1) = (p.rho, p.rho1);
        let band = |v: &[f64]| ctx.band_field(v);
        let eta = band(&f.fields[0]);
        let eta1 = band(&f.fields[2]);
        let xi = cplx(&band(&f.fields[1]));
        let xi1 = cplx(&band(&f.fields[3]));
        let op = dno_first_order(ctx, &eta, &eta1);
        let m = |v: &[Complex64], sel: Sel| ctx.apply(v, sel);
        let g0: Sel = &|s, _| s.g0;
        let g11: Sel = &|s, _| s.g11;
        let g12: Sel = &|s, _| s.g12;
        let binv: Sel = &|s, _| 1.0 / s.b0;
        let add = |a: &[Complex64], b: &[Complex64], s: f64| -> Vec<Complex64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
        let g11_1 = |v: &[Complex64]| add(&op.g11_10(v), &op.g11_01(v), 1.0);
        let g12_1 = |v: &[Complex64]| add(&op.g12_10(v), &op.g12_01(v), 1.0);
        let g21_1 = |v: &[Complex64]| add(&op.g21_10(v), &op.g21_01(v), 1.0);
        let g22_1 = |v: &[Complex64]| add(&op.g22_10(v), &op.g22_01(v), 1.0);
        let b1 = |v: &[Complex64]| add(&g11_1(v).iter().map(|z| z * rho).collect::<Vec<_>>(), &op.g1(v), rho1);

        // I: G₁₁⁽¹⁾B₀⁻¹G₀ + G₁₁B₀⁻¹G⁽¹⁾ − G₁₁B₀⁻¹B⁽¹⁾B₀⁻¹G₀
        let bg0x = m(&m(&xi, g0), binv);
        let t1 = g11_1(&bg0x);
        let t2 = m(&m(&op.g1(&xi), binv), g11);
        let t3 = m(&m(&b1(&bg0x), binv), g11);
        let i3 = 0.5 * ip(ctx, &xi, &add(&add(&t1, &t2, 1.0), &t3, -1.0));

        // II: G⁽¹⁾B₀⁻¹G₁₂ + G₀B₀⁻¹G₁₂⁽¹⁾ − G₀B₀⁻¹B⁽¹⁾B₀⁻¹G₁₂
        let bg12x1 = m(&m(&xi1, g12), binv);
        let s1 = op.g1(&bg12x1);
        let s2 = m(&m(&g12_1(&xi1), binv), g0);
        let s3 = m(&m(&b1(&bg12x1), binv), g0);
        let ii3 = ip(ctx, &xi, &add(&add(&s1, &s2, 1.0), &s3, -1.0));

        // III: ρ₁⁻¹G₂₂⁽¹⁾ − ρρ₁⁻¹(G₂₁⁽¹⁾B₀⁻¹G₁₂ + G₂₁B₀⁻¹G₁₂⁽¹⁾ − G₂₁B₀⁻¹B⁽¹⁾B₀⁻¹G₁₂)
        let r1 = g22_1(&xi1);
        let r2 = g21_1(&bg12x1);
        let r3 = m(&m(&g12_1(&xi1), binv), g12);
        let r4 = m(&m(&b1(&bg12x1), binv), g12);
        let inner = add(&add(&r2, &r3, 1.0), &r4, -1.0);
        let iii3 = 0.5 * ip(ctx, &xi1, &add(&r1.iter().map(|z| z / rho1).collect::<Vec<_>>(), &inner, -rho / rho1));
        [i3, ii3, iii3]
    }

    #[test]
    fn kinetic_parts_match_operator_expansion() {
        let ctx = setup(128);
        for seed in 0..4 {
            let f = sample(&ctx, seed);
            let got = kinetic_cubic_parts(&ctx, &f).unwrap();
            let want = operator_route(&ctx, &f);
            for j in 0..3 {
                assert!(rel(got[j], want[j]) < 1e-10, "part {j}: {} vs {}", got[j], want[j]);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn prop_roundtrip_and_equivalence(seed in any::<u64>()) {
            let ctx = setup(128);
            let f = sample(&ctx, seed);
            let nf = normal_transform(&ctx, &f).unwrap();
            let back = inverse_normal_transform(&ctx, &nf).unwrap();
            for (a, b) in f.fields.iter().zip(&back.fields) {
                let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                prop_assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-11 * scale));
            }
            let h2o = eval_h2(&ctx, &f).unwrap();
            let h2n = eval_h2(&ctx, &nf).unwrap();
            prop_assert!(rel(h2n, h2o) <= 1e-10);
            let h3o = eval_h3(&ctx, &f).unwrap().total;
            let h3n = eval_h3(&ctx, &nf).unwrap().total;
            prop_assert!(rel(h3n, h3o) <= 1e-10);
            let [i, ii, iii] = kinetic_cubic_parts(&ctx, &f).unwrap();
            prop_assert!(rel(i - ii + iii, h3o) <= 1e-10);
        }

        #[test]
        fn prop_homogeneity(seed in any::<u64>(), lambda in 0.1f64..3.0) {
            let ctx = setup(64);
            let f = sample(&ctx, seed);
            let fl = f.scaled(lambda);
            prop_assert!(rel(eval_h2(&ctx, &fl).unwrap(), lambda.powi(2) * eval_h2(&ctx, &f).unwrap()) <= 1e-12);
            prop_assert!(rel(eval_h3(&ctx, &fl).unwrap().total, lambda.powi(3) * eval_h3(&ctx, &f).unwrap().total) <= 1e-12);
        }
    }
}
