//! Time integration of the coupled Benjamin-Ono–Schrödinger system
//!
//!   r_t = −a r_xxx + b ℋ r_xx + c r r_x − d ∂ₓ(r ℋ r_x + ℋ(r r_x)) + β ∂ₓ|q|²
//!   q_t = −iα q_xx + iβ q r
//!
//! and of its higher-order parent (extra κ̃₃, κ̃₄ couplings), with exact
//! linear flows in Fourier space and either Strang splitting or ETDRK4 for
//! the nonlinear part.
//!
//! The envelope is always stored in the scaling of the reduced system,
//! q ↦ ε^{1/2+δ} q, so the parent system differs from the reduced one only
//! through the two terms proportional to ε κ̃₃ and ε κ̃₄.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::coeffs::{ModelCoefficients, ReducedCoefficients};
use crate::gauge;
use crate::spectral::{deriv_symbol, Grid};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Number of contour points for the ETDRK4 φ-functions.
pub const ETD_CONTOUR_POINTS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
    #[error("field length {got} does not match grid size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("blow-up at t = {t:e}: max |r| = {max_r:e} exceeds the guard; reduce the time step")]
    BlowUp { t: f64, max_r: f64 },
}

/// Time-stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Exact linear half-steps around a classical RK4 nonlinear step.
    Strang,
    /// Exponential time differencing, fourth order (Cox–Matthews with
    /// contour-integral coefficients).
    Etdrk4,
}

impl std::str::FromStr for Scheme {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strang" | "strang-split" => Ok(Scheme::Strang),
            "etdrk4" => Ok(Scheme::Etdrk4),
            other => Err(SolverError::InvalidConfig(format!(
                "unknown scheme '{other}' (expected strang or etdrk4)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Apply the 2/3 rule to every nonlinear product (Galerkin truncation).
    pub dealias: bool,
    /// Largest admissible max |r| before a step is reported as a blow-up.
    pub cfl_guard: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            scheme: Scheme::Strang,
            dealias: true,
            cfl_guard: 1e3,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.cfl_guard > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "blow-up guard must be positive, got {}",
                self.cfl_guard
            )));
        }
        Ok(())
    }
}

/// Which time variable the parent system is integrated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeScale {
    /// τ = εt.
    Tau,
    /// The Benjamin-Ono time τ₁ = ε²t = ετ; every coefficient is divided by ε.
    Tau1,
}

/// Coefficients of the parent system in reduced scaling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FullCoefficients {
    pub reduced: ReducedCoefficients,
    /// ε κ̃₃.
    pub kappa3: f64,
    /// ε κ̃₄.
    pub kappa4: f64,
}

impl FullCoefficients {
    pub fn from_model(m: &ModelCoefficients, scale: TimeScale) -> Self {
        let full = FullCoefficients {
            reduced: m.reduced,
            kappa3: m.epsilon * m.kt[3],
            kappa4: m.epsilon * m.kt[4],
        };
        match scale {
            TimeScale::Tau => full,
            TimeScale::Tau1 => full.time_rescaled(1.0 / m.epsilon),
        }
    }

    /// Multiply every coefficient by `s`, i.e. integrate in time t/s.
    pub fn time_rescaled(&self, s: f64) -> Self {
        let r = &self.reduced;
        FullCoefficients {
            reduced: ReducedCoefficients {
                a: r.a * s,
                b: r.b * s,
                c: r.c * s,
                d: r.d * s,
                alpha: r.alpha * s,
                beta: r.beta * s,
            },
            kappa3: self.kappa3 * s,
            kappa4: self.kappa4 * s,
        }
    }
}

/// Right-hand side selector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    Reduced(ReducedCoefficients),
    Full(FullCoefficients),
}

impl Model {
    pub fn reduced(&self) -> &ReducedCoefficients {
        match self {
            Model::Reduced(c) => c,
            Model::Full(f) => &f.reduced,
        }
    }

    fn extra(&self) -> (f64, f64) {
        match self {
            Model::Reduced(_) => (0.0, 0.0),
            Model::Full(f) => (f.kappa3, f.kappa4),
        }
    }
}

/// Interface profile r, envelope q and time t on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub grid: Arc<Grid>,
    pub r: Vec<f64>,
    pub q: Vec<C>,
    pub t: f64,
}

impl SystemState {
    pub fn new(grid: Arc<Grid>, r: Vec<f64>, q: Vec<C>, t: f64) -> Result<Self, SolverError> {
        for len in [r.len(), q.len()] {
            if len != grid.n() {
                return Err(SolverError::LengthMismatch {
                    got: len,
                    want: grid.n(),
                });
            }
        }
        Ok(SystemState { grid, r, q, t })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n();
        SystemState {
            grid,
            r: vec![0.0; n],
            q: vec![ZERO; n],
            t: 0.0,
        }
    }

    pub fn mean_r(&self) -> f64 {
        self.grid.mean(&self.r)
    }

    pub fn max_r(&self) -> f64 {
        self.r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Energy, envelope mass and mixed momentum of the reduced flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedTriple {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

/// E₁ = ∫(−(b/2) r|D|r − (a/2) r_x² − α|q_x|² − (c/6) r³ − β r|q|² + (d/2) r²|D|r),
/// E₂ = ∫|q|², E₃ = ½∫r² − Im∫q q̄_x.
pub fn conserved(s: &SystemState, c: &ReducedCoefficients) -> ConservedTriple {
    let g = &s.grid;
    let rx = g.deriv(&s.r, 1);
    let dr = g.abs_d(&s.r);
    let qx = g.apply(&s.q, |k| deriv_symbol(k, 1));
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    let mut e3 = 0.0;
    for j in 0..g.n() {
        let (r, q) = (s.r[j], s.q[j]);
        let q2 = q.norm_sqr();
        e1 += -0.5 * c.b * r * dr[j] - 0.5 * c.a * rx[j] * rx[j] - c.alpha * qx[j].norm_sqr()
            - c.c / 6.0 * r * r * r
            - c.beta * r * q2
            + 0.5 * c.d * r * r * dr[j];
        e2 += q2;
        e3 += 0.5 * r * r - (q * qx[j].conj()).im;
    }
    let dx = g.dx();
    ConservedTriple {
        e1: e1 * dx,
        e2: e2 * dx,
        e3: e3 * dx,
    }
}

/// Spectra of (r, q).
#[derive(Clone, Debug, PartialEq)]
struct Spec {
    r: Vec<C>,
    q: Vec<C>,
}

impl Spec {
    /// self + h·other
    fn axpy(&self, h: f64, o: &Spec) -> Spec {
        Spec {
            r: self.r.iter().zip(&o.r).map(|(a, b)| a + h * b).collect(),
            q: self.q.iter().zip(&o.q).map(|(a, b)| a + h * b).collect(),
        }
    }
}

/// Per-mode linear symbols and the operators derived from them.
struct Operators {
    grid: Arc<Grid>,
    /// ik (odd, zero at Nyquist).
    ik: Vec<C>,
    /// |k|.
    absk: Vec<f64>,
    /// Linear phase rates: L = iφ.
    phi_r: Vec<f64>,
    phi_q: Vec<f64>,
    retained: Vec<bool>,
    dealias: bool,
    model: Model,
}

impl Operators {
    fn new(grid: Arc<Grid>, model: Model, dealias: bool) -> Self {
        let n = grid.n();
        let c = *model.reduced();
        let ik = (0..n).map(|i| grid.symbol_at(i, &|k| deriv_symbol(k, 1))).collect();
        let absk = (0..n)
            .map(|i| grid.symbol_at(i, &|k| C::new(k.abs(), 0.0)).re)
            .collect();
        let phi_r = (0..n)
            .map(|i| grid.symbol_at(i, &|k| C::new(c.a * k * k * k + c.b * k * k.abs(), 0.0)).re)
            .collect();
        let phi_q = (0..n)
            .map(|i| grid.symbol_at(i, &|k| C::new(c.alpha * k * k, 0.0)).re)
            .collect();
        let retained = (0..n).map(|i| !dealias || grid.is_retained(i)).collect();
        Operators {
            grid,
            ik,
            absk,
            phi_r,
            phi_q,
            retained,
            dealias,
            model,
        }
    }

    fn truncate(&self, spec: &mut [C]) {
        if self.dealias {
            for (z, keep) in spec.iter_mut().zip(&self.retained) {
                if !keep {
                    *z = ZERO;
                }
            }
        }
    }

    fn to_spec(&self, s: &SystemState) -> Spec {
        let mut r = self.grid.spectrum(&s.r);
        let mut q = self.grid.forward(&s.q);
        self.truncate(&mut r);
        self.truncate(&mut q);
        Spec { r, q }
    }

    fn real_of(&self, spec: &[C]) -> Vec<f64> {
        self.grid.real_inverse(spec)
    }

    fn scaled(&self, spec: &[C], f: impl Fn(usize) -> C) -> Vec<C> {
        spec.iter().enumerate().map(|(i, z)| z * f(i)).collect()
    }

    fn fft_real(&self, f: &[f64]) -> Vec<C> {
        self.grid.spectrum(f)
    }

    /// Linear part L·u.
    fn linear(&self, u: &Spec) -> Spec {
        Spec {
            r: self.scaled(&u.r, |i| C::new(0.0, self.phi_r[i])),
            q: self.scaled(&u.q, |i| C::new(0.0, self.phi_q[i])),
        }
    }

    /// Exact linear flow over time h.
    fn propagate(&self, u: &Spec, h: f64) -> Spec {
        Spec {
            r: self.scaled(&u.r, |i| C::from_polar(1.0, h * self.phi_r[i])),
            q: self.scaled(&u.q, |i| C::from_polar(1.0, h * self.phi_q[i])),
        }
    }

    /// Nonlinear part, evaluated pseudospectrally. Every r-term is a
    /// derivative, so the mean mode of the result is exactly zero.
    fn nonlinear(&self, u: &Spec) -> Spec {
        let g = &self.grid;
        let c = self.model.reduced();
        let (k3, k4) = self.model.extra();
        let n = g.n();
        let r = self.real_of(&u.r);
        let rx = self.real_of(&self.scaled(&u.r, |i| self.ik[i]));
        let dr = self.real_of(&self.scaled(&u.r, |i| C::new(self.absk[i], 0.0)));
        let q = g.inverse(&u.q);
        let qx = g.inverse(&self.scaled(&u.q, |i| self.ik[i]));

        // r-equation fluxes: ∂ₓF + |D|G + ∂ₓ|D|K
        let mut flux = vec![0.0; n];
        let mut gflux = vec![0.0; n];
        let mut kflux = vec![0.0; n];
        for j in 0..n {
            let q2 = q[j].norm_sqr();
            flux[j] = 0.5 * c.c * r[j] * r[j] - c.d * r[j] * dr[j] + c.beta * q2
                - k3 * 2.0 * (q[j].conj() * qx[j]).im;
            gflux[j] = -c.d * r[j] * rx[j];
            kflux[j] = -k4 * q2;
        }
        let fh = self.fft_real(&flux);
        let gh = self.fft_real(&gflux);
        let kh = if k4 != 0.0 { self.fft_real(&kflux) } else { vec![ZERO; n] };
        let mut nr: Vec<C> = (0..n)
            .map(|i| self.ik[i] * (fh[i] + self.absk[i] * kh[i]) + self.absk[i] * gh[i])
            .collect();

        // q-equation: iβrq − κ₃(∂ₓ(rq) + r q_x) − iκ₄ q|D|r
        let ibeta = C::new(0.0, c.beta);
        let ik4 = C::new(0.0, k4);
        let local: Vec<C> = (0..n)
            .map(|j| ibeta * r[j] * q[j] - k3 * r[j] * qx[j] - ik4 * q[j] * dr[j])
            .collect();
        let mut nq = g.forward(&local);
        if k3 != 0.0 {
            let rq: Vec<C> = (0..n).map(|j| r[j] * q[j]).collect();
            let rqh = g.forward(&rq);
            for i in 0..n {
                nq[i] -= k3 * self.ik[i] * rqh[i];
            }
        }
        self.truncate(&mut nr);
        self.truncate(&mut nq);
        Spec { r: nr, q: nq }
    }
}

/// ETDRK4 coefficients for one diagonal linear symbol.
struct EtdCoeffs {
    e: Vec<C>,
    e2: Vec<C>,
    q: Vec<C>,
    f1: Vec<C>,
    f2: Vec<C>,
    f3: Vec<C>,
}

/// (Q, f₁, f₂, f₃) for z = hL, by averaging over a circle of radius 1
/// about z, which avoids cancellation near z = 0.
pub fn etd_phi(z: C) -> [C; 4] {
    let m = ETD_CONTOUR_POINTS;
    let mut acc = [ZERO; 4];
    for j in 0..m {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
        let w = z + C::from_polar(1.0, theta);
        let ew = w.exp();
        let w3 = w * w * w;
        acc[0] += ((w * 0.5).exp() - 1.0) / w;
        acc[1] += (-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / w3;
        acc[2] += (2.0 + w + ew * (w - 2.0)) / w3;
        acc[3] += (-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / w3;
    }
    acc.map(|a| a / m as f64)
}

impl EtdCoeffs {
    fn new(phi: &[f64], h: f64) -> Self {
        let n = phi.len();
        let mut c = EtdCoeffs {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &p in phi {
            let z = C::new(0.0, h * p);
            let [q, f1, f2, f3] = etd_phi(z);
            c.e.push(C::from_polar(1.0, h * p));
            c.e2.push(C::from_polar(1.0, 0.5 * h * p));
            c.q.push(h * q);
            c.f1.push(h * f1);
            c.f2.push(h * f2);
            c.f3.push(h * f3);
        }
        c
    }
}

/// A stepper bound to one grid, model and configuration; precomputes the
/// linear symbols and, for ETDRK4, the exponential coefficients.
pub struct Stepper {
    ops: Operators,
    cfg: StepperConfig,
    etd: Option<(EtdCoeffs, EtdCoeffs)>,
    imag_residue: f64,
}

impl Stepper {
    pub fn new(grid: Arc<Grid>, model: Model, cfg: StepperConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let ops = Operators::new(grid, model, cfg.dealias);
        let etd = match cfg.scheme {
            Scheme::Etdrk4 => Some((EtdCoeffs::new(&ops.phi_r, cfg.dt), EtdCoeffs::new(&ops.phi_q, cfg.dt))),
            Scheme::Strang => None,
        };
        Ok(Stepper {
            ops,
            cfg,
            etd,
            imag_residue: 0.0,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// Largest imaginary part discarded when converting r back to a real
    /// field at the end of the last call to [`Stepper::advance`].
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    fn check_grid(&self, s: &SystemState) -> Result<(), SolverError> {
        if s.r.len() != self.ops.grid.n() || s.q.len() != self.ops.grid.n() {
            return Err(SolverError::LengthMismatch {
                got: s.r.len().min(s.q.len()),
                want: self.ops.grid.n(),
            });
        }
        Ok(())
    }

    fn step_spec(&self, u: &Spec) -> Spec {
        let h = self.cfg.dt;
        let ops = &self.ops;
        match &self.etd {
            None => {
                let u = ops.propagate(u, 0.5 * h);
                let k1 = ops.nonlinear(&u);
                let k2 = ops.nonlinear(&u.axpy(0.5 * h, &k1));
                let k3 = ops.nonlinear(&u.axpy(0.5 * h, &k2));
                let k4 = ops.nonlinear(&u.axpy(h, &k3));
                let n = u.r.len();
                let comb = |u: &[C], a: &[C], b: &[C], c: &[C], d: &[C]| -> Vec<C> {
                    (0..n)
                        .map(|i| u[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                        .collect()
                };
                let v = Spec {
                    r: comb(&u.r, &k1.r, &k2.r, &k3.r, &k4.r),
                    q: comb(&u.q, &k1.q, &k2.q, &k3.q, &k4.q),
                };
                ops.propagate(&v, 0.5 * h)
            }
            Some((cr, cq)) => {
                let stage = |u: &[C], nv: &[C], c: &EtdCoeffs| -> Vec<C> {
                    u.iter()
                        .zip(nv)
                        .enumerate()
                        .map(|(i, (x, y))| c.e2[i] * x + c.q[i] * y)
                        .collect()
                };
                let nu = ops.nonlinear(u);
                let a = Spec {
                    r: stage(&u.r, &nu.r, cr),
                    q: stage(&u.q, &nu.q, cq),
                };
                let na = ops.nonlinear(&a);
                let b = Spec {
                    r: stage(&u.r, &na.r, cr),
                    q: stage(&u.q, &na.q, cq),
                };
                let nb = ops.nonlinear(&b);
                let cstage = |a: &[C], nb: &[C], nu: &[C], c: &EtdCoeffs| -> Vec<C> {
                    (0..a.len())
                        .map(|i| c.e2[i] * a[i] + c.q[i] * (2.0 * nb[i] - nu[i]))
                        .collect()
                };
                let cc = Spec {
                    r: cstage(&a.r, &nb.r, &nu.r, cr),
                    q: cstage(&a.q, &nb.q, &nu.q, cq),
                };
                let nc = ops.nonlinear(&cc);
                let fin = |u: &[C], nu: &[C], na: &[C], nb: &[C], nc: &[C], c: &EtdCoeffs| -> Vec<C> {
                    (0..u.len())
                        .map(|i| {
                            c.e[i] * u[i]
                                + c.f1[i] * nu[i]
                                + 2.0 * c.f2[i] * (na[i] + nb[i])
                                + c.f3[i] * nc[i]
                        })
                        .collect()
                };
                Spec {
                    r: fin(&u.r, &nu.r, &na.r, &nb.r, &nc.r, cr),
                    q: fin(&u.q, &nu.q, &na.q, &nb.q, &nc.q, cq),
                }
            }
        }
    }

    /// Take `steps` steps from `s`. Time is set to `s.t + steps·dt`.
    pub fn advance(&mut self, s: &SystemState, steps: usize) -> Result<SystemState, SolverError> {
        self.check_grid(s)?;
        let mut u = self.ops.to_spec(s);
        for i in 0..steps {
            u = self.step_spec(&u);
            let t = s.t + (i + 1) as f64 * self.cfg.dt;
            let max_r = self
                .ops
                .real_of(&u.r)
                .iter()
                .fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
            if !(max_r <= self.cfg.cfl_guard) || u.q.iter().any(|z| !z.is_finite()) {
                return Err(SolverError::BlowUp { t, max_r });
            }
        }
        let rc = self.ops.grid.inverse(&u.r);
        self.imag_residue = rc.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        Ok(SystemState {
            grid: s.grid.clone(),
            r: rc.into_iter().map(|z| z.re).collect(),
            q: self.ops.grid.inverse(&u.q),
            t: s.t + steps as f64 * self.cfg.dt,
        })
    }

    /// Time derivative (linear + nonlinear parts) at `s`.
    pub fn rhs(&self, s: &SystemState) -> Result<(Vec<f64>, Vec<C>), SolverError> {
        self.check_grid(s)?;
        let u = self.ops.to_spec(s);
        let l = self.ops.linear(&u);
        let nl = self.ops.nonlinear(&u);
        let tot = l.axpy(1.0, &nl);
        Ok((self.ops.real_of(&tot.r), self.ops.grid.inverse(&tot.q)))
    }

    /// Spectrum of dr/dt, for checks on Hermitian symmetry.
    fn rhs_r_spectrum(&self, s: &SystemState) -> Vec<C> {
        let u = self.ops.to_spec(s);
        self.ops.linear(&u).axpy(1.0, &self.ops.nonlinear(&u)).r
    }
}

fn rhs_with(s: &SystemState, model: Model, dealias: bool) -> (Vec<f64>, Vec<C>) {
    let ops = Operators::new(s.grid.clone(), model, dealias);
    let u = ops.to_spec(s);
    let tot = ops.linear(&u).axpy(1.0, &ops.nonlinear(&u));
    (ops.real_of(&tot.r), ops.grid.inverse(&tot.q))
}

/// (dr/dt, dq/dt) of the reduced system.
pub fn rhs_reduced(s: &SystemState, c: &ReducedCoefficients, dealias: bool) -> (Vec<f64>, Vec<C>) {
    rhs_with(s, Model::Reduced(*c), dealias)
}

/// (dr/dτ, dq/dτ) of the parent system, envelope in reduced scaling.
pub fn rhs_full(s: &SystemState, c: &FullCoefficients, dealias: bool) -> (Vec<f64>, Vec<C>) {
    rhs_with(s, Model::Full(*c), dealias)
}

/// Largest deviation from Hermitian symmetry of the dr/dt spectrum
/// relative to its largest mode; zero means dr/dt is exactly real.
pub fn rhs_reality_defect(s: &SystemState, model: Model) -> f64 {
    let st = Stepper::new(s.grid.clone(), model, StepperConfig::default()).expect("default config is valid");
    let spec = st.rhs_r_spectrum(s);
    let n = spec.len();
    let scale = spec.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
    (1..n)
        .map(|i| (spec[i] - spec[n - i].conj()).norm())
        .fold(spec[0].im.abs(), f64::max)
        / scale
}

/// One step of length `cfg.dt`.
pub fn step(s: &SystemState, cfg: &StepperConfig, model: Model) -> Result<SystemState, SolverError> {
    Stepper::new(s.grid.clone(), model, *cfg)?.advance(s, 1)
}

/// One row of the diagnostics log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub mean_r: f64,
    pub max_r: f64,
    /// Relative gauge-ODE residual of r − mean(r); NaN when a = 0.
    pub gauge_residual: f64,
}

impl DiagnosticsRow {
    pub fn of(s: &SystemState, c: &ReducedCoefficients) -> Self {
        let ConservedTriple { e1, e2, e3 } = conserved(s, c);
        let mean_r = s.mean_r();
        let centred: Vec<f64> = s.r.iter().map(|v| v - mean_r).collect();
        let gauge_residual = gauge::diagnostics(&s.grid, &centred, c)
            .map(|d| d.ode_residual_rel)
            .unwrap_or(f64::NAN);
        DiagnosticsRow {
            t: s.t,
            e1,
            e2,
            e3,
            mean_r,
            max_r: s.max_r(),
            gauge_residual,
        }
    }
}

/// Output of [`run`].
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub snapshots: Vec<SystemState>,
    pub log: Vec<DiagnosticsRow>,
}

/// A run that stopped early.
#[derive(Clone, Debug)]
pub struct RunError {
    pub error: SolverError,
    /// Everything recorded before the failure.
    pub partial: Trajectory,
    /// Last state that passed the guard.
    pub last_good: Option<SystemState>,
}

/// Cadence of recorded output, in steps (0 disables).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cadence {
    pub diagnostics_every: usize,
    pub snapshot_every: usize,
}

/// Number of steps of size dt that reach t_end (rounded to nearest).
pub fn step_count(t_end: f64, dt: f64) -> Result<usize, SolverError> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SolverError::InvalidConfig(format!("t_end must be non-negative, got {t_end}")));
    }
    Ok((t_end / dt).round() as usize)
}

/// Integrate from `initial` to `initial.t + t_end`, recording diagnostics
/// and snapshots at the requested cadence (always including the first and
/// last states).
pub fn run(
    initial: &SystemState,
    cfg: &StepperConfig,
    model: Model,
    t_end: f64,
    cadence: Cadence,
) -> Result<Trajectory, RunError> {
    let fail = |error, partial, last_good| RunError {
        error,
        partial,
        last_good,
    };
    let mut stepper = Stepper::new(initial.grid.clone(), model, *cfg)
        .map_err(|e| fail(e, Trajectory::default(), None))?;
    let total = step_count(t_end, cfg.dt).map_err(|e| fail(e, Trajectory::default(), None))?;
    let c = *model.reduced();
    let mut traj = Trajectory::default();
    let record = |traj: &mut Trajectory, s: &SystemState, i: usize| {
        let last = i == total;
        if cadence.diagnostics_every > 0 && (i % cadence.diagnostics_every == 0 || last) {
            traj.log.push(DiagnosticsRow::of(s, &c));
        }
        if cadence.snapshot_every > 0 && (i % cadence.snapshot_every == 0 || last) {
            traj.snapshots.push(s.clone());
        }
    };
    let chunk = [cadence.diagnostics_every, cadence.snapshot_every]
        .into_iter()
        .filter(|&c| c > 0)
        .fold(total.max(1), gcd);
    let mut s = initial.clone();
    record(&mut traj, &s, 0);
    let mut done = 0;
    while done < total {
        let m = chunk.min(total - done);
        let mut next = stepper
            .advance(&s, m)
            .map_err(|e| fail(e, traj.clone(), Some(s.clone())))?;
        done += m;
        next.t = initial.t + done as f64 * cfg.dt;
        s = next;
        record(&mut traj, &s, done);
    }
    Ok(traj)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Initial interface profiles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialR {
    Zero,
    /// amp·exp(−((x−x₀)/width)²).
    Gaussian { amp: f64, width: f64, center: f64 },
    /// 4ν/(1+ν²(x−x₀)²) with its mean removed.
    BoSoliton { nu: f64, center: f64 },
    /// Smooth random mean-zero field with max-norm `amp`.
    Random { amp: f64, width_modes: f64 },
}

/// Initial envelopes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialQ {
    Zero,
    /// amp·exp(−((x−x₀)/width)²)·e^{i·2π·mode·x/L}.
    Gaussian { amp: f64, width: f64, center: f64, mode: i64 },
    /// amp·e^{i·2π·mode·x/L}.
    Monochromatic { amp: f64, mode: i64 },
}

pub fn initial_r<R: Rng + ?Sized>(grid: &Grid, spec: InitialR, rng: &mut R) -> Vec<f64> {
    let x = grid.x();
    match spec {
        InitialR::Zero => vec![0.0; grid.n()],
        InitialR::Gaussian { amp, width, center } => x
            .iter()
            .map(|xv| amp * (-((xv - center) / width).powi(2)).exp())
            .collect(),
        InitialR::BoSoliton { nu, center } => {
            let f: Vec<f64> = x
                .iter()
                .map(|xv| 4.0 * nu / (1.0 + (nu * (xv - center)).powi(2)))
                .collect();
            let m = grid.mean(&f);
            f.into_iter().map(|v| v - m).collect()
        }
        InitialR::Random { amp, width_modes } => grid.random_smooth_field(rng, amp, width_modes),
    }
}

pub fn initial_q(grid: &Grid, spec: InitialQ) -> Vec<C> {
    let x = grid.x();
    let dk = 2.0 * std::f64::consts::PI / grid.length();
    match spec {
        InitialQ::Zero => vec![ZERO; grid.n()],
        InitialQ::Gaussian {
            amp,
            width,
            center,
            mode,
        } => x
            .iter()
            .map(|xv| C::from_polar(amp * (-((xv - center) / width).powi(2)).exp(), mode as f64 * dk * xv))
            .collect(),
        InitialQ::Monochromatic { amp, mode } => x
            .iter()
            .map(|xv| C::from_polar(amp, mode as f64 * dk * xv))
            .collect(),
    }
}
