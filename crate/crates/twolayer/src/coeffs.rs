//! Fourier symbols and scalar model coefficients derived from the four
//! physical inputs (g, h₁, ρ, ρ₁).
//!
//! Every symbol is evaluated by a function that is generic over a
//! [`ComplexFloat`] scalar, so the same code serves real evaluation on a
//! wavenumber grid and complex-step differentiation at the carrier
//! wavenumber k₀.

use num_complex::ComplexFloat;
use thiserror::Error;

use crate::exec::Exec;

/// Errors raised while validating inputs or deriving coefficients.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoeffError {
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("symbol evaluation produced a non-finite value at k = {k} ({name})")]
    LimitUndefined { k: f64, name: &'static str },
}

/// The four physical inputs everything derives from (SI units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    /// Upper-layer depth [m].
    pub h1: f64,
    /// Lower-layer density [kg/m³].
    pub rho: f64,
    /// Upper-layer density [kg/m³].
    pub rho1: f64,
}

impl PhysicalParams {
    /// Andaman Sea setting: ρ₁/ρ = 0.997, h₁ = 500 m.
    pub const ANDAMAN: PhysicalParams = PhysicalParams {
        g: 9.81,
        h1: 500.0,
        rho: 1000.0,
        rho1: 997.0,
    };

    /// Oregon shelf setting: ρ₁/ρ = 0.998, h₁ = 500 m.
    pub const OREGON: PhysicalParams = PhysicalParams {
        g: 9.81,
        h1: 500.0,
        rho: 1000.0,
        rho1: 998.0,
    };

    /// Construct and validate.
    pub fn new(g: f64, h1: f64, rho: f64, rho1: f64) -> Result<Self, CoeffError> {
        let p = PhysicalParams { g, h1, rho, rho1 };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with unit lower density, given depth and density contrast γ.
    pub fn from_gamma(g: f64, h1: f64, rho: f64, gamma: f64) -> Result<Self, CoeffError> {
        Self::new(g, h1, rho, rho * (1.0 - gamma))
    }

    /// Check g > 0, h₁ > 0 and the stable configuration ρ > ρ₁ > 0.
    pub fn validate(&self) -> Result<(), CoeffError> {
        let finite = [self.g, self.h1, self.rho, self.rho1]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(CoeffError::InvalidParams("all parameters must be finite".into()));
        }
        if self.g <= 0.0 {
            return Err(CoeffError::InvalidParams("g must be positive".into()));
        }
        if self.h1 <= 0.0 {
            return Err(CoeffError::InvalidParams("h1 must be positive".into()));
        }
        if !(self.rho1 > 0.0 && self.rho > self.rho1) {
            return Err(CoeffError::InvalidParams(format!(
                "stable configuration requires rho > rho1 > 0 (got rho = {}, rho1 = {})",
                self.rho, self.rho1
            )));
        }
        Ok(())
    }

    /// Relative density contrast γ = 1 − ρ₁/ρ.
    pub fn gamma(&self) -> f64 {
        1.0 - self.rho1 / self.rho
    }

    /// √(g(ρ−ρ₁)), the interface scaling factor of the normal-mode transform.
    pub fn s_int(&self) -> f64 {
        (self.g * (self.rho - self.rho1)).sqrt()
    }

    /// √(gρ₁), the surface scaling factor of the normal-mode transform.
    pub fn s_surf(&self) -> f64 {
        (self.g * self.rho1).sqrt()
    }
}

/// All symbols at a single wavenumber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Symbols<T> {
    pub g0: T,
    pub g11: T,
    pub g12: T,
    pub b0: T,
    pub qa: T,
    pub qb: T,
    pub qc: T,
    pub theta: T,
    pub a_plus: T,
    pub a_minus: T,
    pub b_plus: T,
    pub b_minus: T,
    /// 𝒜₁..𝒜₅.
    pub cal_a: [T; 5],
    /// ℬ₁..ℬ₅.
    pub cal_b: [T; 5],
    pub omega_sq: T,
    pub omega1_sq: T,
}

#[inline]
fn c<T: From<f64>>(x: f64) -> T {
    T::from(x)
}

/// Threshold on h₁|k| below which coth/csch are evaluated by series.
const SERIES_CUTOFF: f64 = 0.1;
/// Threshold on h₁|k| above which θ is replaced by its reciprocal.
const LARGE_X: f64 = 20.0;

/// |k|·coth(h₁|k|), with the k → 0 limit 1/h₁.
fn g11_of<T: ComplexFloat<Real = f64> + From<f64>>(h1: f64, absk: T) -> T {
    let x = absk * c(h1);
    if x.re() < SERIES_CUTOFF {
        let x2 = x * x;
        // x·coth x = 1 + x²/3 − x⁴/45 + 2x⁶/945 − x⁸/4725 + 2x¹⁰/93555
        let series = c::<T>(1.0)
            + x2 * (c::<T>(1.0 / 3.0)
                + x2 * (c::<T>(-1.0 / 45.0)
                    + x2 * (c::<T>(2.0 / 945.0)
                        + x2 * (c::<T>(-1.0 / 4725.0) + x2 * c::<T>(2.0 / 93555.0)))));
        series / c(h1)
    } else {
        let e = (x * c(-2.0)).exp();
        absk * (c::<T>(1.0) + e) / (c::<T>(1.0) - e)
    }
}

/// −|k|·csch(h₁|k|), with the k → 0 limit −1/h₁.
fn g12_of<T: ComplexFloat<Real = f64> + From<f64>>(h1: f64, absk: T) -> T {
    let x = absk * c(h1);
    if x.re() < SERIES_CUTOFF {
        let x2 = x * x;
        // x·csch x = 1 − x²/6 + 7x⁴/360 − 31x⁶/15120 + 127x⁸/604800 − 73x¹⁰/3421440
        let series = c::<T>(1.0)
            + x2 * (c::<T>(-1.0 / 6.0)
                + x2 * (c::<T>(7.0 / 360.0)
                    + x2 * (c::<T>(-31.0 / 15120.0)
                        + x2 * (c::<T>(127.0 / 604800.0) + x2 * c::<T>(-73.0 / 3421440.0)))));
        -series / c(h1)
    } else {
        let e1 = (-x).exp();
        -absk * c::<T>(2.0) * e1 / (c::<T>(1.0) - e1 * e1)
    }
}

/// Evaluate every symbol at wavenumber `k`.
///
/// The sign of k is taken from its real part, so complex arguments
/// k₀ + iτ (complex-step differentiation) follow the k > 0 branch.
pub fn symbols_at<T>(p: &PhysicalParams, k: T) -> Symbols<T>
where
    T: ComplexFloat<Real = f64> + From<f64>,
{
    let sgn = if k.re() > 0.0 {
        1.0
    } else if k.re() < 0.0 {
        -1.0
    } else {
        0.0
    };
    let absk = if sgn < 0.0 { -k } else { k };
    let (g, h1, rho, rho1) = (p.g, p.h1, p.rho, p.rho1);
    let drho = rho - rho1;
    let cc = (rho1 * drho).sqrt();

    let g0 = absk;
    let g11 = g11_of(h1, absk);
    let g12 = g12_of(h1, absk);
    let b0 = g11 * c(rho) + g0 * c(rho1);
    let qa = c::<T>(g * drho) * g0 * g11 / b0;
    let qb = c::<T>(-g * cc) * g0 * g12 / b0;
    let qc = c::<T>(g) * g0 * (g11 * c(rho1) + g0 * c(rho)) / b0;
    let omega_sq = c::<T>(g * drho) * g0 * g0 / b0;
    let omega1_sq = c::<T>(g) * g0;

    // θ = (Qc − Qa)/Qb in closed form:
    // θ = [(2ρ₁−ρ)cosh(h₁|k|) + ρ sinh(h₁|k|)] / √(ρ₁(ρ−ρ₁)),
    // finite at k = 0. For large h₁|k| work with φ = 1/θ to avoid overflow.
    let x = absk * c(h1);
    let one = c::<T>(1.0);
    let (theta, a_plus, a_minus) = if x.re() <= LARGE_X {
        let theta = (x.cosh() * c(2.0 * rho1 - rho) + x.sinh() * c(rho)) / c(cc);
        let s = (theta * theta + c(4.0)).sqrt();
        if theta.re() >= 0.0 {
            let ap = (c::<T>(2.0) / (s * (s + theta))).sqrt();
            let am = ((s + theta) / (s * c(2.0))).sqrt();
            (theta, ap, am)
        } else {
            let am = (c::<T>(2.0) / (s * (s - theta))).sqrt();
            let ap = ((s - theta) / (s * c(2.0))).sqrt();
            (theta, ap, am)
        }
    } else {
        let e = (-x).exp();
        let e2 = e * e;
        let phi = c::<T>(2.0 * cc) * e
            / ((one + e2) * c(2.0 * rho1 - rho) + (one - e2) * c(rho));
        let r = (one + phi * phi * c(4.0)).sqrt();
        let ap = phi * (c::<T>(2.0) / (r * (r + one))).sqrt();
        let am = ((r + one) / (r * c(2.0))).sqrt();
        // θ grows like e^{h₁|k|}; saturate where it leaves the f64 range
        let theta = one / phi;
        let theta = if theta.re().is_finite() { theta } else { c(f64::MAX) };
        (theta, ap, am)
    };
    let b_plus = a_minus;
    let b_minus = -a_plus;

    let s_int = p.s_int();
    let s_surf = p.s_surf();
    let sg: T = c(sgn);
    let a1 = (b_plus * qa - a_plus * qb) / c(s_int);
    let b1 = (b_minus * qa - a_minus * qb) / c(s_int);
    let a2 = (a_plus * qc - b_plus * qb) / c(s_surf);
    let b2 = (a_minus * qc - b_minus * qb) / c(s_surf);
    let a3 = sg * a1;
    let b3 = sg * b1;
    let dbg = k * g0 / b0 * c(s_int);
    let hq = sg * qb * c(rho / (rho1 * s_int));
    let a4 = b_plus * dbg + a_plus * hq;
    let b4 = b_minus * dbg + a_minus * hq;
    let a5 = k * a_plus * c(-s_surf);
    let b5 = k * a_minus * c(-s_surf);

    Symbols {
        g0,
        g11,
        g12,
        b0,
        qa,
        qb,
        qc,
        theta,
        a_plus,
        a_minus,
        b_plus,
        b_minus,
        cal_a: [a1, a2, a3, a4, a5],
        cal_b: [b1, b2, b3, b4, b5],
        omega_sq,
        omega1_sq,
    }
}

impl Symbols<f64> {
    fn first_non_finite(&self) -> Option<&'static str> {
        let named = [
            ("G0", self.g0),
            ("G11", self.g11),
            ("G12", self.g12),
            ("B0", self.b0),
            ("Qa", self.qa),
            ("Qb", self.qb),
            ("Qc", self.qc),
            ("theta", self.theta),
            ("a+", self.a_plus),
            ("a-", self.a_minus),
            ("b+", self.b_plus),
            ("b-", self.b_minus),
            ("omega^2", self.omega_sq),
            ("omega1^2", self.omega1_sq),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Some(name);
            }
        }
        if self.cal_a.iter().chain(self.cal_b.iter()).any(|v| !v.is_finite()) {
            return Some("A/B ladder");
        }
        None
    }
}

/// Symbols evaluated on a list of wavenumbers.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    pub ks: Vec<f64>,
    pub rows: Vec<Symbols<f64>>,
}

impl SymbolTable {
    /// Extract one symbol as a column aligned with `ks`.
    pub fn column(&self, f: impl Fn(&Symbols<f64>) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// Evaluate all symbols at each wavenumber (batched under `exec`).
pub fn symbol_table(p: &PhysicalParams, ks: &[f64]) -> Result<SymbolTable, CoeffError> {
    symbol_table_with(p, ks, Exec::default())
}

/// [`symbol_table`] with an explicit execution policy.
pub fn symbol_table_with(
    p: &PhysicalParams,
    ks: &[f64],
    exec: Exec,
) -> Result<SymbolTable, CoeffError> {
    p.validate()?;
    let rows = exec.map(ks, |&k| symbols_at(p, k));
    for (k, row) in ks.iter().zip(&rows) {
        if let Some(name) = row.first_non_finite() {
            return Err(CoeffError::LimitUndefined { k: *k, name });
        }
    }
    Ok(SymbolTable {
        ks: ks.to_vec(),
        rows,
    })
}

/// Interface frequency squared ω²(k) = g(ρ−ρ₁)|k| / (ρ coth(h₁|k|) + ρ₁).
pub fn dispersion_internal(p: &PhysicalParams, k: f64) -> f64 {
    let absk = k.abs();
    p.g * (p.rho - p.rho1) * absk * absk / (p.rho * g11_of(p.h1, absk) + p.rho1 * absk)
}

/// Surface frequency squared ω₁²(k) = g|k|.
pub fn dispersion_surface(p: &PhysicalParams, k: f64) -> f64 {
    p.g * k.abs()
}

/// Interface frequency squared when the lower layer has finite depth `h`.
/// Tends to [`dispersion_internal`] as h → ∞.
pub fn dispersion_internal_finite_depth(p: &PhysicalParams, h: f64, k: f64) -> f64 {
    let absk = k.abs();
    if absk == 0.0 {
        return 0.0;
    }
    let (rho, rho1) = (p.rho, p.rho1);
    let t = (h * absk).tanh();
    let ct = 1.0 / (p.h1 * absk).tanh();
    let den = rho * ct + rho1 * t;
    let disc = rho * rho * (1.0 - t * ct).powi(2) + 4.0 * rho * rho1 * t * (ct - t)
        + 4.0 * rho1 * rho1 * t * t;
    0.5 * p.g * absk * (rho * (1.0 + t * ct) - disc.sqrt()) / den
}

/// Residual of the quartic dispersion relation at (k, ω²), relative to the
/// largest of its three terms.
pub fn quartic_residual(p: &PhysicalParams, k: f64, w2: f64) -> f64 {
    let absk = k.abs();
    let x = p.h1 * absk;
    let coth = 1.0 / x.tanh();
    let den = p.rho * coth + p.rho1;
    let t1 = w2 * w2;
    let t2 = -p.g * p.rho * absk * (1.0 + coth) / den * w2;
    let t3 = p.g * p.g * (p.rho - p.rho1) * absk * absk / den;
    let scale = t1.abs().max(t2.abs()).max(t3.abs());
    if scale == 0.0 {
        return 0.0;
    }
    (t1 + t2 + t3).abs() / scale
}

/// Every scalar coefficient of the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelCoefficients {
    pub params: PhysicalParams,
    /// Long internal-wave phase speed c₀ = √Ω₀ [m/s].
    pub c0: f64,
    /// Resonant carrier wavenumber k₀ [1/m].
    pub k0: f64,
    pub gamma: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// ω₁″(k₀).
    pub omega1_pp: f64,
    /// κ, κ₁, …, κ₈ (index 0 is κ).
    pub kappa: [f64; 9],
    /// κ̃, κ̃₁, …, κ̃₄ (index 0 is κ̃).
    pub kt: [f64; 5],
    pub epsilon: f64,
    pub delta: f64,
    /// Coefficients of the reduced Benjamin-Ono-Schrödinger system.
    pub reduced: ReducedCoefficients,
}

/// Constants (a, b, c, d, α, β) of the reduced system
///
///   r_t + a r_xxx − b ℋ r_xx = c r r_x − d ∂ₓ(r ℋ r_x + ℋ(r r_x)) + β ∂ₓ|q|²,
///   i q_t − α q_xx = −β q r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ReducedCoefficients {
    /// Only the linear part: c = d = β = 0.
    pub fn linear(a: f64, b: f64, alpha: f64) -> Self {
        ReducedCoefficients {
            a,
            b,
            c: 0.0,
            d: 0.0,
            alpha,
            beta: 0.0,
        }
    }
}

/// Step used for the central differences at k₀, relative to k₀.
pub const FD_REL_STEP: f64 = 1e-5;

/// Central difference at `x` with Richardson extrapolation over steps h, h/2.
pub fn richardson_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let d1 = d(h);
    let d2 = d(0.5 * h);
    (4.0 * d2 - d1) / 3.0
}

/// Constants of the small-εD expansions a⁺(εD) = a⁺⁰ + εa⁺¹|D| + …,
/// b⁺(εD), 𝒜₄(εD) = ε(𝒜₄⁰ + ε𝒜₄¹|D|)D + …, 𝒜₅(εD) likewise, and 𝒜₃⁰.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionConstants {
    pub a_plus: [f64; 2],
    pub b_plus: [f64; 2],
    pub cal_a3_0: f64,
    pub cal_a4: [f64; 2],
    pub cal_a5: [f64; 2],
}

/// Long-wave expansion constants.
pub fn expansion_constants(p: &PhysicalParams) -> ExpansionConstants {
    let (g, h1, rho, rho1) = (p.g, p.h1, p.rho, p.rho1);
    let gamma = p.gamma();
    let bp0 = (rho1 / rho).sqrt();
    let ap0 = gamma.sqrt();
    let a40 = (g * gamma / rho1).sqrt();
    let a50 = -(g * rho1 * gamma).sqrt();
    ExpansionConstants {
        a_plus: [ap0, -rho1 / rho * ap0 * h1],
        b_plus: [bp0, gamma * bp0 * h1],
        cal_a3_0: h1 / rho * (g * rho1 * (rho - rho1) / rho).sqrt(),
        cal_a4: [a40, -a40 * rho1 / rho * h1],
        cal_a5: [a50, -a50 * rho1 / rho * h1],
    }
}

/// The k₀-dependent building blocks of the κ ladder: values and derivatives
/// of ℬⱼ²/ω₁ and of the products b⁻ℬ₃, b⁻ℬ₄, a⁻ℬ₅.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarrierTerms {
    pub bsq_over_w1: [f64; 5],
    pub d_bsq_over_w1: [f64; 5],
    pub bm_b3: f64,
    pub bm_b4: f64,
    pub am_b5: f64,
    pub d_bm_b4: f64,
    pub d_am_b5: f64,
}

fn bsq_over_w1(p: &PhysicalParams, j: usize, k: f64) -> f64 {
    let s = symbols_at(p, k);
    s.cal_b[j] * s.cal_b[j] / s.omega1_sq.sqrt()
}

/// Carrier terms with derivatives by central differences plus Richardson
/// extrapolation (step [`FD_REL_STEP`]·k₀).
pub fn carrier_terms(p: &PhysicalParams, k0: f64) -> CarrierTerms {
    let h = FD_REL_STEP * k0;
    let s = symbols_at(p, k0);
    let mut v = [0.0; 5];
    let mut dv = [0.0; 5];
    for j in 0..5 {
        v[j] = bsq_over_w1(p, j, k0);
        dv[j] = richardson_derivative(|k| bsq_over_w1(p, j, k), k0, h);
    }
    let bm_b4 = |k: f64| {
        let s = symbols_at(p, k);
        s.b_minus * s.cal_b[3]
    };
    let am_b5 = |k: f64| {
        let s = symbols_at(p, k);
        s.a_minus * s.cal_b[4]
    };
    CarrierTerms {
        bsq_over_w1: v,
        d_bsq_over_w1: dv,
        bm_b3: s.b_minus * s.cal_b[2],
        bm_b4: s.b_minus * s.cal_b[3],
        am_b5: s.a_minus * s.cal_b[4],
        d_bm_b4: richardson_derivative(bm_b4, k0, h),
        d_am_b5: richardson_derivative(am_b5, k0, h),
    }
}

/// Resonant carrier wavenumber k₀ = ρ/(4h₁(ρ−ρ₁)), where the surface group
/// velocity equals the long internal-wave phase speed.
pub fn resonant_k0(p: &PhysicalParams) -> f64 {
    p.rho / (4.0 * p.h1 * (p.rho - p.rho1))
}

/// Long internal-wave phase speed c₀ = √(gh₁(ρ−ρ₁)/ρ).
pub fn phase_speed_c0(p: &PhysicalParams) -> f64 {
    (p.g * p.h1 * (p.rho - p.rho1) / p.rho).sqrt()
}

/// Surface group velocity ω₁′(k) = ½√(g/k) for k > 0.
pub fn surface_group_velocity(p: &PhysicalParams, k: f64) -> f64 {
    0.5 * (p.g / k).sqrt()
}

/// κ, κ₁..κ₈ from carrier terms and expansion constants.
pub fn kappa_ladder(p: &PhysicalParams, ct: &CarrierTerms) -> [f64; 9] {
    let (g, rho, rho1) = (p.g, p.rho, p.rho1);
    let s_int = p.s_int();
    let s_surf = p.s_surf();
    let e = expansion_constants(p);
    let [bp0, bp1] = e.b_plus;
    let [ap0, ap1] = e.a_plus;
    let [a40, a41] = e.cal_a4;
    let [a50, a51] = e.cal_a5;
    let a30 = e.cal_a3_0;

    let coef = [
        -0.5 * ((rho - rho1) / g).sqrt(),
        0.5 * (rho1 / g).sqrt(),
        rho / (2.0 * s_int),
        -rho1 / (2.0 * s_int),
        -1.0 / (2.0 * rho1 * s_surf),
    ];
    let pre0 = [bp0, ap0, bp0, bp0, ap0];
    let pre1 = [bp1, ap1, bp1, bp1, ap1];

    let kappa = rho1 / (2.0 * s_int) * bp0 * a40 * a40 + 1.0 / (2.0 * rho1 * s_surf) * ap0 * a50 * a50;
    let k1: f64 = (0..5).map(|j| coef[j] * pre0[j] * ct.bsq_over_w1[j]).sum();
    let k2 = -rho1 / s_int * a40 * ct.bm_b4 - 1.0 / (rho1 * s_surf) * a50 * ct.am_b5;
    let k3 = rho1 / s_int * bp0 * a40 * a41 + 1.0 / (rho1 * s_surf) * ap0 * a50 * a51;
    let k4: f64 = (0..5)
        .map(|j| 0.5 * coef[j] * pre0[j] * ct.d_bsq_over_w1[j])
        .sum();
    let k5 = -rho1 / (2.0 * s_int) * a40 * ct.d_bm_b4 - 1.0 / (2.0 * rho1 * s_surf) * a50 * ct.d_am_b5;
    let k6: f64 = (0..5).map(|j| coef[j] * pre1[j] * ct.bsq_over_w1[j]).sum();
    let k7 = rho / s_int * a30 * ct.bm_b3
        - rho1 / s_int * a41 * ct.bm_b4
        - 1.0 / (rho1 * s_surf) * a51 * ct.am_b5;
    let k8 = rho1 / (2.0 * s_int) * bp1 * a40 * a40 + 1.0 / (2.0 * rho1 * s_surf) * ap1 * a50 * a50;
    [kappa, k1, k2, k3, k4, k5, k6, k7, k8]
}

/// κ̃, κ̃₁..κ̃₄ from the κ ladder and c₀.
pub fn kappa_tilde(kappa: &[f64; 9], c0: f64) -> [f64; 5] {
    let s = (2.0 * c0).sqrt();
    let h = (0.5 * c0).sqrt();
    [
        kappa[0] / (2.0 * s),
        kappa[1] * h + kappa[2] / s,
        (kappa[3] + kappa[8]) / (2.0 * s),
        kappa[4] * h + kappa[5] / s,
        kappa[6] * h + kappa[7] / s,
    ]
}

/// Small-γ closed forms of κ̃, κ̃₁..κ̃₄.
pub fn kappa_tilde_asymptotic(p: &PhysicalParams) -> [f64; 5] {
    let (g, h1, rho1) = (p.g, p.h1, p.rho1);
    let gamma = p.gamma();
    let g4 = g.powf(0.25);
    let s = (2.0 * rho1).sqrt();
    [
        g4 * gamma.powf(0.25) / (4.0 * h1.powf(0.25) * s),
        -g4 / (4.0 * h1.powf(1.25) * gamma.powf(0.75) * s),
        -g4 * gamma.powf(0.25) * h1.powf(0.75) * (1.0 - gamma) / (2.0 * s),
        -g4 * gamma.powf(0.25) / (2.0 * h1.powf(0.25) * s),
        (1.0 - gamma) * g4 / (4.0 * h1.powf(0.25) * gamma.powf(0.75) * s),
    ]
}

/// Map the κ̃/Ω ladder to the reduced system, absorbing the powers of ε.
///
/// The envelope is rescaled q ↦ ε^{1/2+δ} q so that β = −κ̃₁ carries no ε.
pub fn reduced_from_ladder(
    c0: f64,
    omega1: f64,
    omega2: f64,
    omega1_pp: f64,
    kt: &[f64; 5],
    epsilon: f64,
) -> ReducedCoefficients {
    ReducedCoefficients {
        a: -epsilon * epsilon * omega2 / (2.0 * c0),
        b: -epsilon * omega1 / (2.0 * c0),
        c: 6.0 * epsilon * kt[0],
        d: -epsilon * epsilon * kt[2],
        alpha: -epsilon * omega1_pp / 2.0,
        beta: -kt[1],
    }
}

fn check_scaling(epsilon: f64, delta: f64) -> Result<(), CoeffError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(CoeffError::DomainError(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoeffError::DomainError(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Derive every coefficient from physical parameters and the scaling knobs.
pub fn derive_coefficients(
    p: &PhysicalParams,
    epsilon: f64,
    delta: f64,
) -> Result<ModelCoefficients, CoeffError> {
    p.validate()?;
    check_scaling(epsilon, delta)?;
    let (g, h1, rho, rho1) = (p.g, p.h1, p.rho, p.rho1);
    let drho = rho - rho1;
    let k0 = resonant_k0(p);
    let c0 = phase_speed_c0(p);
    let omega0 = g * h1 * drho / rho;
    let omega1 = -g * drho * rho1 * h1 * h1 / (rho * rho);
    let omega2 = g * drho * h1.powi(3) / rho * (rho1 * rho1 / (rho * rho) - 1.0 / 3.0);
    let omega1_pp = -0.25 * g.sqrt() * k0.powf(-1.5);
    let ct = carrier_terms(p, k0);
    let kappa = kappa_ladder(p, &ct);
    let kt = kappa_tilde(&kappa, c0);
    let reduced = reduced_from_ladder(c0, omega1, omega2, omega1_pp, &kt, epsilon);
    Ok(ModelCoefficients {
        params: *p,
        c0,
        k0,
        gamma: p.gamma(),
        omega0,
        omega1,
        omega2,
        omega1_pp,
        kappa,
        kt,
        epsilon,
        delta,
        reduced,
    })
}

/// Coefficients with the κ̃ ladder replaced by its small-γ closed forms.
/// Every other field matches [`derive_coefficients`].
pub fn asymptotic_coefficients(
    p: &PhysicalParams,
    epsilon: f64,
    delta: f64,
) -> Result<ModelCoefficients, CoeffError> {
    let mut m = derive_coefficients(p, epsilon, delta)?;
    m.kt = kappa_tilde_asymptotic(p);
    m.reduced = reduced_from_ladder(m.c0, m.omega1, m.omega2, m.omega1_pp, &m.kt, epsilon);
    Ok(m)
}

impl ModelCoefficients {
    /// |ω₁′(k₀) − c₀| / c₀.
    pub fn resonance_residual(&self) -> f64 {
        (surface_group_velocity(&self.params, self.k0) - self.c0).abs() / self.c0
    }

    /// Named scalar values with a short description of their origin, in a
    /// stable order, for reports.
    pub fn named_values(&self) -> Vec<(&'static str, f64, &'static str)> {
        let r = &self.reduced;
        let mut v = vec![
            ("g", self.params.g, "input"),
            ("h1", self.params.h1, "input"),
            ("rho", self.params.rho, "input"),
            ("rho1", self.params.rho1, "input"),
            ("gamma", self.gamma, "1 - rho1/rho"),
            ("c0", self.c0, "sqrt(Omega0), long internal-wave speed"),
            ("k0", self.k0, "rho/(4 h1 (rho-rho1)), resonance"),
            ("Omega0", self.omega0, "omega^2 long-wave expansion, order 2"),
            ("Omega1", self.omega1, "omega^2 long-wave expansion, order 3"),
            ("Omega2", self.omega2, "omega^2 long-wave expansion, order 4"),
            ("omega1_pp", self.omega1_pp, "second derivative of omega1 at k0"),
        ];
        let kn = [
            "kappa", "kappa1", "kappa2", "kappa3", "kappa4", "kappa5", "kappa6", "kappa7", "kappa8",
        ];
        for (name, val) in kn.iter().zip(self.kappa) {
            v.push((name, val, "cubic Hamiltonian ladder"));
        }
        let tn = ["kt", "kt1", "kt2", "kt3", "kt4"];
        for (name, val) in tn.iter().zip(self.kt) {
            v.push((name, val, "coupled-system coefficient"));
        }
        v.extend([
            ("epsilon", self.epsilon, "scaling"),
            ("delta", self.delta, "scaling"),
            ("a", r.a, "reduced: -eps^2 Omega2/(2 c0)"),
            ("b", r.b, "reduced: -eps Omega1/(2 c0)"),
            ("c", r.c, "reduced: 6 eps kt"),
            ("d", r.d, "reduced: -eps^2 kt2"),
            ("alpha", r.alpha, "reduced: -eps omega1_pp/2"),
            ("beta", r.beta, "reduced: -kt1 (q rescaled by eps^(1/2+delta))"),
        ]);
        v
    }
}
