//! A spin-½ in a rotating field, weakly coupled to a thermal bosonic bath.
//!
//! In the frame co-rotating with the field the Hamiltonian is static, and in
//! the rotated basis `V` it is `h σ_z`. The master equation there is
//!
//! ```text
//! dρ/dt = −i[hσ_z, ρ] + κ(n̄+1)(2σ₋ρσ₊ − ρσ₊σ₋ − σ₊σ₋ρ)
//!                     + κ n̄  (2σ₊ρσ₋ − ρσ₋σ₊ − σ₋σ₊ρ)
//! ```
//!
//! which has a closed-form solution ([`propagate_analytic`]).

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gp::{Trajectory, DEFAULT_SAMPLES};
use crate::qmat::{sigma_x, sigma_z, CMatrix, DensityMatrix, C64, I, ONE, ZERO};

/// Mean thermal occupation `1/(e^{ω₀/T} − 1)` of the bath mode at `ω₀`.
pub fn nbar_from_temperature(omega0: f64, temperature: f64) -> Result<f64> {
    if !(omega0 > 0.0) || !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "need omega0 > 0 and T > 0, got omega0 = {omega0}, T = {temperature}"
        )));
    }
    Ok(1.0 / (omega0 / temperature).exp_m1())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BathParams {
    pub kappa: f64,
    pub omega0: f64,
    pub nbar: f64,
}

impl BathParams {
    pub fn new(kappa: f64, omega0: f64, nbar: f64) -> Result<Self> {
        let b = BathParams { kappa, omega0, nbar };
        b.validate()?;
        Ok(b)
    }

    pub fn from_temperature(kappa: f64, omega0: f64, temperature: f64) -> Result<Self> {
        Self::new(kappa, omega0, nbar_from_temperature(omega0, temperature)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::Precondition(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        if !(self.nbar >= 0.0) || !self.nbar.is_finite() {
            return Err(Error::Precondition(format!(
                "nbar must be >= 0, got {}",
                self.nbar
            )));
        }
        if !(self.omega0 >= 0.0) || !self.omega0.is_finite() {
            return Err(Error::Precondition(format!(
                "omega0 must be >= 0, got {}",
                self.omega0
            )));
        }
        Ok(())
    }

    /// Population relaxation rate `2κ(2n̄+1)`.
    pub fn decay_rate(&self) -> f64 {
        2.0 * self.kappa * (2.0 * self.nbar + 1.0)
    }

    /// Steady-state excited population `n̄/(2n̄+1)`.
    pub fn steady_excited(&self) -> f64 {
        self.nbar / (2.0 * self.nbar + 1.0)
    }
}

type M2 = [C64; 4];

#[inline]
fn mul(a: &M2, b: &M2) -> M2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

#[inline]
fn add(a: &M2, b: &M2, s: C64) -> M2 {
    [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s, a[3] + b[3] * s]
}

const SP: M2 = [ZERO, ONE, ZERO, ZERO];
const SM: M2 = [ZERO, ZERO, ONE, ZERO];

fn dissipator(l: &M2, ld: &M2, rho: &M2) -> M2 {
    let ldl = mul(ld, l);
    let jump = mul(&mul(l, rho), ld);
    let two = C64::new(2.0, 0.0);
    let out = add(&[ZERO; 4], &jump, two);
    let out = add(&out, &mul(rho, &ldl), -ONE);
    add(&out, &mul(&ldl, rho), -ONE)
}

fn generator(rho: &M2, h: f64, bath: &BathParams) -> M2 {
    let hz: M2 = [C64::new(h, 0.0), ZERO, ZERO, C64::new(-h, 0.0)];
    let comm = add(&mul(&hz, rho), &mul(rho, &hz), -ONE);
    let out = add(&[ZERO; 4], &comm, -I);
    let emit = dissipator(&SM, &SP, rho);
    let absorb = dissipator(&SP, &SM, rho);
    let out = add(&out, &emit, C64::new(bath.kappa * (bath.nbar + 1.0), 0.0));
    add(&out, &absorb, C64::new(bath.kappa * bath.nbar, 0.0))
}

fn to_m2(m: &CMatrix) -> Result<M2> {
    if m.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: m.dim(),
        });
    }
    Ok([m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)])
}

fn from_m2(m: &M2) -> CMatrix {
    CMatrix::from_fn(2, |i, j| m[2 * i + j])
}

/// Right-hand side of the rotating-frame master equation.
pub fn lindblad_rhs(rho: &CMatrix, h: f64, bath: &BathParams) -> Result<CMatrix> {
    Ok(from_m2(&generator(&to_m2(rho)?, h, bath)))
}

/// Closed-form solution of the master equation at time `t`.
pub fn propagate_analytic(rho0: &DensityMatrix, t: f64, h: f64, bath: &BathParams) -> Result<DensityMatrix> {
    bath.validate()?;
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!("t must be >= 0, got {t}")));
    }
    let r = to_m2(rho0.mat())?;
    let gamma = bath.decay_rate();
    let relaxed = -(-gamma * t).exp_m1();
    let p11 = r[0].re * (-gamma * t).exp() + bath.steady_excited() * relaxed;
    let coherence = r[1] * (-C64::new(0.5 * gamma, 2.0 * h) * t).exp();
    DensityMatrix::new(from_m2(&[
        C64::new(p11, 0.0),
        coherence,
        coherence.conj(),
        C64::new(1.0 - p11, 0.0),
    ]))
}

/// Smallest step count [`propagate_rk4`] accepts: 100 per unit of
/// `κ(2n̄+1)t + |h|t`.
pub fn rk4_min_steps(t: f64, h: f64, bath: &BathParams) -> usize {
    let scale = (bath.kappa * (2.0 * bath.nbar + 1.0) + h.abs()) * t;
    ((100.0 * scale).ceil() as usize).max(1)
}

const TRACE_DRIFT_TOL: f64 = 1e-8;

/// Classical fourth-order Runge-Kutta integration of [`lindblad_rhs`].
pub fn propagate_rk4(
    rho0: &DensityMatrix,
    t: f64,
    h: f64,
    bath: &BathParams,
    steps: usize,
) -> Result<DensityMatrix> {
    bath.validate()?;
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!("t must be >= 0, got {t}")));
    }
    let min = rk4_min_steps(t, h, bath);
    if steps < min {
        return Err(Error::Precondition(format!(
            "{steps} steps is below the minimum of {min} for this rate and duration"
        )));
    }
    let dt = t / steps as f64;
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    let mut y = to_m2(rho0.mat())?;
    for _ in 0..steps {
        let k1 = generator(&y, h, bath);
        let k2 = generator(&add(&y, &k1, half), h, bath);
        let k3 = generator(&add(&y, &k2, half), h, bath);
        let k4 = generator(&add(&y, &k3, full), h, bath);
        let sum = add(&add(&add(&k1, &k2, two), &k3, two), &k4, ONE);
        y = add(&y, &sum, sixth);
    }
    let drift = (y[0] + y[3] - ONE).norm();
    if drift > TRACE_DRIFT_TOL {
        return Err(Error::StepSize(drift));
    }
    let tr = y[0] + y[3];
    let off = 0.5 * (y[1] + y[2].conj());
    let y = [y[0] / tr, off / tr, off.conj() / tr, y[3] / tr];
    DensityMatrix::new(from_m2(&y))
}

/// Static description of the co-rotating frame.
#[derive(Clone, Debug)]
pub struct RotatingFrame {
    /// Effective half-splitting `h`.
    pub h: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    /// `α₋σ_x + α₊σ_z`; Hermitian and its own inverse.
    pub v: CMatrix,
}

pub fn rotating_frame(field: f64, theta: f64, omega0: f64) -> Result<RotatingFrame> {
    if !(field > 0.0) || !(omega0 >= 0.0) || !theta.is_finite() {
        return Err(Error::Precondition(format!(
            "need B > 0, omega0 >= 0 and finite theta, got B = {field}, omega0 = {omega0}, theta = {theta}"
        )));
    }
    let (s, c) = theta.sin_cos();
    let detuned = c - omega0 / field;
    let h = 0.5 * field * (s * s + detuned * detuned).sqrt();
    if h < 1e-300 {
        return Err(Error::Domain("effective field vanishes (h = 0)".into()));
    }
    let ratio = (field * c - omega0) / (4.0 * h);
    let alpha_plus = (0.5 + ratio).max(0.0).sqrt();
    let alpha_minus = (0.5 - ratio).max(0.0).sqrt();
    let v = &sigma_x().scale(C64::new(alpha_minus, 0.0)) + &sigma_z().scale(C64::new(alpha_plus, 0.0));
    Ok(RotatingFrame {
        h,
        alpha_plus,
        alpha_minus,
        v,
    })
}

fn frame_rotation(omega0: f64, t: f64) -> CMatrix {
    let half = 0.5 * omega0 * t;
    CMatrix::from_row_major(vec![
        C64::from_polar(1.0, -half),
        ZERO,
        ZERO,
        C64::from_polar(1.0, half),
    ])
    .expect("2x2")
}

/// `ρ(t) = R(t) V ρ̃(t) V R†(t)` with `R(t) = e^{−iω₀tσ_z/2}`.
pub fn to_lab_frame(
    rho_tilde: &DensityMatrix,
    t: f64,
    frame: &RotatingFrame,
    omega0: f64,
) -> Result<DensityMatrix> {
    let r = frame_rotation(omega0, t);
    let u = &r * &frame.v;
    DensityMatrix::new(&(&u * rho_tilde.mat()) * &u.adjoint())
}

pub fn to_rotating_frame(
    rho: &DensityMatrix,
    t: f64,
    frame: &RotatingFrame,
    omega0: f64,
) -> Result<DensityMatrix> {
    let r = frame_rotation(omega0, t);
    let u = &r * &frame.v;
    DensityMatrix::new(&(&u.adjoint() * rho.mat()) * &u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    /// `H = ½ω₀σ_z` in the lab frame; `field` is unused.
    Static,
    /// `H(t) = ½B n(t)·σ` with `n` rotating at `ω₀`.
    Rotating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelCParams {
    pub field: f64,
    pub theta: f64,
    pub bath: BathParams,
    pub mode: FieldMode,
    /// Segments over one period; `None` picks [`ModelCParams::default_segments`].
    pub samples: Option<usize>,
}

impl ModelCParams {
    pub fn validate(&self) -> Result<()> {
        self.bath.validate()?;
        if !(self.bath.omega0 > 0.0) {
            return Err(Error::Precondition(format!(
                "omega0 must be positive, got {}",
                self.bath.omega0
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::Precondition("theta must be finite".into()));
        }
        if self.mode == FieldMode::Rotating && !(self.field > self.bath.omega0) {
            return Err(Error::Precondition(format!(
                "rotating mode needs B > omega0, got B = {}, omega0 = {}",
                self.field, self.bath.omega0
            )));
        }
        if let Some(m) = self.samples {
            if m < 2 {
                return Err(Error::Precondition(format!("need at least 2 segments, got {m}")));
            }
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        TAU / self.bath.omega0
    }

    /// Effective half-splitting in the frame where the Hamiltonian is static.
    pub fn effective_h(&self) -> Result<f64> {
        match self.mode {
            FieldMode::Static => Ok(0.5 * self.bath.omega0),
            FieldMode::Rotating => Ok(rotating_frame(self.field, self.theta, self.bath.omega0)?.h),
        }
    }

    /// Enough samples to resolve the `2h` nutation in the lab frame: at least
    /// 64 per nutation period, never fewer than [`DEFAULT_SAMPLES`].
    pub fn default_segments(&self) -> Result<usize> {
        let per_period = (2.0 * self.effective_h()? / self.bath.omega0).ceil() as usize;
        Ok(DEFAULT_SAMPLES.max(256 * per_period))
    }

    pub fn segments(&self) -> Result<usize> {
        match self.samples {
            Some(m) => Ok(m),
            None => self.default_segments(),
        }
    }

    /// Warning text when `B/ω₀ < 10`, where the adiabatic picture is poor.
    pub fn adiabaticity_warning(&self) -> Option<String> {
        (self.mode == FieldMode::Rotating && self.field < 10.0 * self.bath.omega0).then(|| {
            format!(
                "B/omega0 = {:.3} < 10: field rotation is not slow compared with the splitting",
                self.field / self.bath.omega0
            )
        })
    }

    /// `cos(ϑ/2)|e⟩ + sin(ϑ/2)|g⟩`
    pub fn initial_state(&self) -> [C64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [C64::new(c, 0.0), C64::new(s, 0.0)]
    }
}

/// Lab-frame state of Model C at time `t`.
pub fn model_c_state(p: &ModelCParams, t: f64) -> Result<DensityMatrix> {
    ModelCEvolution::new(p)?.state(t)
}

/// Precomputed frame data for repeated evaluation.
pub struct ModelCEvolution {
    params: ModelCParams,
    frame: Option<RotatingFrame>,
    h: f64,
    initial: DensityMatrix,
}

impl ModelCEvolution {
    pub fn new(p: &ModelCParams) -> Result<Self> {
        p.validate()?;
        let rho0 = DensityMatrix::from_pure(&p.initial_state())?;
        match p.mode {
            FieldMode::Static => Ok(ModelCEvolution {
                params: *p,
                frame: None,
                h: 0.5 * p.bath.omega0,
                initial: rho0,
            }),
            FieldMode::Rotating => {
                let frame = rotating_frame(p.field, p.theta, p.bath.omega0)?;
                let initial = to_rotating_frame(&rho0, 0.0, &frame, p.bath.omega0)?;
                Ok(ModelCEvolution {
                    params: *p,
                    h: frame.h,
                    frame: Some(frame),
                    initial,
                })
            }
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// State in the frame where the master equation is written.
    pub fn frame_state(&self, t: f64) -> Result<DensityMatrix> {
        propagate_analytic(&self.initial, t, self.h, &self.params.bath)
    }

    pub fn state(&self, t: f64) -> Result<DensityMatrix> {
        let inner = self.frame_state(t)?;
        match &self.frame {
            None => Ok(inner),
            Some(frame) => to_lab_frame(&inner, t, frame, self.params.bath.omega0),
        }
    }
}

pub fn model_c_trajectory(p: &ModelCParams) -> Result<Trajectory> {
    let evo = ModelCEvolution::new(p)?;
    Trajectory::from_fn(p.tau(), p.segments()?, |t| evo.state(t))
}
