//! Closed-system models of thermally diluted spins.
//!
//! *Model A* is a single spin-½ whose state is a fixed mixture of the two
//! eigenstates of `n(t)·σ` while `n(t)` circles the `z` axis once.
//!
//! *Model B* is a pair of spins, the first driven by the rotating field and
//! coupled to the second by a flip-flop exchange,
//! `H(t) = ½B n(t)·σ₁ + J(σ₊₁σ₋₂ + h.c.)`, with `κ = 2J/B`. The composite is
//! diluted towards its instantaneous Gibbs state and the Berry phase of the
//! reduced state of spin 1 is the weighted sum of the Berry phases of the
//! Schmidt vectors of all four eigenstates.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gp::{berry_phase_single_valued, Angle, Trajectory};
use crate::qmat::{
    eig_hermitian, inner, normalized, sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z, CMatrix,
    DensityMatrix, Spectrum, C64, ZERO,
};

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg()))
    }
}

/// `|±;t⟩ₙ`, the eigenvectors of `n·σ` for polar angle `theta` and azimuth `phi`,
/// in the half-angle gauge (so `|±⟩` changes sign after one revolution).
pub fn precessing_spinor(theta: f64, phi: f64, up: bool) -> [C64; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    if up {
        [C64::from_polar(c, -0.5 * phi), C64::from_polar(s, 0.5 * phi)]
    } else {
        [C64::from_polar(-s, -0.5 * phi), C64::from_polar(c, 0.5 * phi)]
    }
}

// --- Model A -------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelAParams {
    pub theta: f64,
    pub omega0: f64,
    pub epsilon: f64,
    /// Energy gap Δ.
    pub delta: f64,
    pub temperature: f64,
}

impl ModelAParams {
    pub fn validate(&self) -> Result<()> {
        require(self.theta.is_finite(), || {
            format!("theta must be finite, got {}", self.theta)
        })?;
        require(self.omega0 > 0.0, || {
            format!("omega0 must be positive, got {}", self.omega0)
        })?;
        require((0.0..=1.0).contains(&self.epsilon), || {
            format!("epsilon must lie in [0, 1], got {}", self.epsilon)
        })?;
        require(self.delta >= 0.0, || {
            format!("delta must be non-negative, got {}", self.delta)
        })?;
        require(self.temperature > 0.0, || {
            format!("temperature must be positive, got {}", self.temperature)
        })
    }

    pub fn tau(&self) -> f64 {
        TAU / self.omega0
    }

    /// Thermal weight of `|+⟩`: `λ/(1−λ) = e^{−Δ/T}`.
    pub fn lambda(&self) -> f64 {
        1.0 / (1.0 + (self.delta / self.temperature).exp())
    }

    /// Weights of `|+;t⟩` and `|−;t⟩`.
    pub fn populations(&self) -> (f64, f64) {
        let l = self.lambda();
        ((1.0 - self.epsilon) + l * self.epsilon, (1.0 - l) * self.epsilon)
    }

    /// `1 − 2ε/(1 + e^{−Δ/T})`
    pub fn bloch_length(&self) -> f64 {
        1.0 - 2.0 * self.epsilon * (1.0 - self.lambda())
    }
}

pub fn model_a_state(p: &ModelAParams, t: f64) -> Result<DensityMatrix> {
    let phi = p.omega0 * t;
    let (w_up, w_down) = p.populations();
    let up = CMatrix::outer(&precessing_spinor(p.theta, phi, true));
    let down = CMatrix::outer(&precessing_spinor(p.theta, phi, false));
    DensityMatrix::new(&up.scale(C64::new(w_up, 0.0)) + &down.scale(C64::new(w_down, 0.0)))
}

pub fn model_a_trajectory(p: &ModelAParams, segments: usize) -> Result<Trajectory> {
    p.validate()?;
    Trajectory::from_fn(p.tau(), segments, |t| model_a_state(p, t))
}

/// Closed-form cyclic phase of Model A,
/// `π + arg[cos(π cos ϑ) + i r sin(π cos ϑ)]` with `r = 1 − 2ε/(1+e^{−Δ/T})`.
///
/// Equal to `π + arctan(r tan(π cos ϑ))` whenever `|cos ϑ| < ½`; outside that
/// band the quadrant is taken from the sign of `cos(π cos ϑ)`. The pole of
/// the tangent form at `|cos ϑ| = ½` is still reported as an error.
pub fn model_a_gp_closed_form(p: &ModelAParams) -> Result<Angle> {
    p.validate()?;
    let c = p.theta.cos();
    if (c.abs() - 0.5).abs() < 1e-9 {
        return Err(Error::Pole(format!(
            "tan(π cos ϑ) is singular at ϑ = {}; use the trajectory route",
            p.theta
        )));
    }
    let (s, co) = (PI * c).sin_cos();
    Ok(Angle::new(PI + (p.bloch_length() * s).atan2(co)))
}

// --- Model B -------------------------------------------------------------

const MIN_KAPPA: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelBParams {
    /// `κ = 2J/B`
    pub kappa: f64,
    pub theta: f64,
    pub omega0: f64,
    /// Field magnitude `B`; sets the energy scale of the Gibbs weights.
    pub field: f64,
    pub epsilon: f64,
    pub temperature: f64,
    /// Eigenbranch `j ∈ {1, 2, 3, 4}` the composite is prepared in.
    pub branch: usize,
}

impl ModelBParams {
    pub fn validate(&self) -> Result<()> {
        check_model_b_geometry(self.kappa, self.theta)?;
        require(self.omega0 > 0.0, || {
            format!("omega0 must be positive, got {}", self.omega0)
        })?;
        require(self.field > 0.0, || {
            format!("field must be positive, got {}", self.field)
        })?;
        require((0.0..=1.0).contains(&self.epsilon), || {
            format!("epsilon must lie in [0, 1], got {}", self.epsilon)
        })?;
        require(self.temperature > 0.0, || {
            format!("temperature must be positive, got {}", self.temperature)
        })?;
        require((1..=4).contains(&self.branch), || {
            format!("branch must be 1, 2, 3 or 4, got {}", self.branch)
        })
    }

    pub fn tau(&self) -> f64 {
        TAU / self.omega0
    }
}

fn check_model_b_geometry(kappa: f64, theta: f64) -> Result<()> {
    require(kappa > MIN_KAPPA, || {
        format!("kappa must exceed {MIN_KAPPA:e}, got {kappa}")
    })?;
    require(theta.sin().abs() > 1e-12, || {
        format!("sin(theta) must be nonzero, got theta = {theta}")
    })
}

/// `2H/B` at azimuth `phi`, in the lexicographic two-spin basis.
pub fn model_b_hamiltonian(kappa: f64, theta: f64, phi: f64) -> CMatrix {
    let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let field = &(&sigma_x().scale(C64::new(n[0], 0.0)) + &sigma_y().scale(C64::new(n[1], 0.0)))
        + &sigma_z().scale(C64::new(n[2], 0.0));
    let exchange = &sigma_plus().kron(&sigma_minus()) + &sigma_minus().kron(&sigma_plus());
    &field.kron(&CMatrix::identity(2)) + &exchange.scale(C64::new(kappa, 0.0))
}

/// Eigenvalues of `2H/B`, ordered `[E₁, E₂, E₃, E₄]` with `E₂ = −E₁`, `E₄ = −E₃`
/// and `E₁ ≥ E₃ ≥ 0`.
pub fn model_b_energies(kappa: f64, theta: f64) -> [f64; 4] {
    let s2 = theta.sin().powi(2);
    let root = (kappa * kappa + 4.0 * s2).sqrt();
    let base = 1.0 + 0.5 * kappa * kappa;
    let e1 = (base + 0.5 * kappa * root).sqrt();
    // base² − (κ root/2)² = 1 + κ² cos²ϑ > 0, so the smaller root never goes negative
    let e3 = (base - 0.5 * kappa * root).max(0.0).sqrt();
    [e1, -e1, e3, -e3]
}

/// Instantaneous eigenvectors of Model B, indexed by branch `j − 1`.
#[derive(Clone, Debug)]
pub struct BranchEigensystem {
    pub energies: [f64; 4],
    pub states: [Vec<C64>; 4],
}

impl BranchEigensystem {
    /// The same eigenpairs as a [`Spectrum`] (descending, canonical phases).
    pub fn spectrum(&self) -> Spectrum {
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| self.energies[b].total_cmp(&self.energies[a]));
        let vectors = order
            .iter()
            .map(|&j| {
                let mut v = self.states[j].clone();
                crate::qmat::canonical_phase(&mut v);
                v
            })
            .collect();
        Spectrum {
            values: order.iter().map(|&j| self.energies[j]).collect(),
            vectors,
            degenerate: false,
        }
    }
}

/// Eigenstate of `2H(t)/B` for eigenvalue `energy` at azimuth `phi`.
///
/// Lexicographic components, up to normalisation:
/// `|↑↑⟩: sinϑ e^{−iφ}`, `|↑↓⟩: κ(E² − cos²ϑ)/(E² − 1)`, `|↓↑⟩: E − cosϑ`,
/// `|↓↓⟩: κ sinϑ (E − cosϑ)/(E² − 1) e^{iφ}`. `E² ≠ 1` whenever `κ sinϑ ≠ 0`.
fn model_b_state(kappa: f64, theta: f64, energy: f64, phi: f64) -> Vec<C64> {
    let (s, c) = theta.sin_cos();
    let e2 = energy * energy;
    let v = [
        C64::from_polar(s, -phi),
        C64::new(kappa * (e2 - c * c) / (e2 - 1.0), 0.0),
        C64::new(energy - c, 0.0),
        C64::from_polar(kappa * s * (energy - c) / (e2 - 1.0), phi),
    ];
    normalized(&v)
}

pub fn model_b_eigensystem(kappa: f64, theta: f64, t: f64, omega0: f64) -> Result<BranchEigensystem> {
    check_model_b_geometry(kappa, theta)?;
    let energies = model_b_energies(kappa, theta);
    let phi = omega0 * t;
    let states = energies.map(|e| model_b_state(kappa, theta, e, phi));
    Ok(BranchEigensystem { energies, states })
}

/// Schmidt decomposition `Σ_α √p_α |F_α⟩|f_α⟩` of a two-spin pure state.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    /// Descending.
    pub coefficients: [f64; 2],
    /// Spin-1 vectors `|F_α⟩`.
    pub first: [Vec<C64>; 2],
    /// Spin-2 vectors `|f_α⟩`.
    pub second: [Vec<C64>; 2],
}

impl SchmidtForm {
    pub fn reconstruct(&self) -> Vec<C64> {
        let mut psi = vec![ZERO; 4];
        for a in 0..2 {
            let amp = self.coefficients[a].max(0.0).sqrt();
            for i in 0..2 {
                for j in 0..2 {
                    psi[2 * i + j] += self.first[a][i] * self.second[a][j] * amp;
                }
            }
        }
        psi
    }
}

pub fn model_b_schmidt(psi: &[C64]) -> Result<SchmidtForm> {
    if psi.len() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: psi.len(),
        });
    }
    let norm = crate::qmat::vector_norm(psi);
    require((norm - 1.0).abs() < 1e-10, || {
        format!("state norm is {norm}, expected 1")
    })?;

    // ψ = Σ C_ij |i⟩|j⟩, reduced state of spin 1 is C C†.
    let coeff = |i: usize, j: usize| psi[2 * i + j];
    let reduced = CMatrix::from_fn(2, |a, b| (0..2).map(|j| coeff(a, j) * coeff(b, j).conj()).sum());
    let spec = eig_hermitian(&reduced)?;
    let p = [spec.values[0].max(0.0), spec.values[1].max(0.0)];
    let first = [spec.vectors[0].clone(), spec.vectors[1].clone()];

    let partner = |a: usize| -> Vec<C64> {
        let amp = p[a].sqrt();
        (0..2)
            .map(|j| (0..2).map(|i| first[a][i].conj() * coeff(i, j)).sum::<C64>() / amp)
            .collect()
    };
    let f0 = partner(0);
    let f1 = if p[1] > 1e-14 {
        partner(1)
    } else {
        vec![-f0[1].conj(), f0[0].conj()]
    };
    Ok(SchmidtForm {
        coefficients: p,
        first,
        second: [f0, f1],
    })
}

/// Gibbs weights `e^{−E_j B/(2T)} / Z` of the four branches.
pub fn model_b_thermal_weights(p: &ModelBParams) -> [f64; 4] {
    let beta = 0.5 * p.field / p.temperature;
    let energies = model_b_energies(p.kappa, p.theta);
    let lowest = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let boltzmann = energies.map(|e| (-(e - lowest) * beta).exp());
    let z: f64 = boltzmann.iter().sum();
    boltzmann.map(|b| b / z)
}

/// Schmidt vectors of every branch sampled over one loop.
struct SchmidtLoop {
    coefficients: [f64; 2],
    first: [Vec<Vec<C64>>; 2],
    second: [Vec<Vec<C64>>; 2],
}

fn schmidt_loop(kappa: f64, theta: f64, energy: f64, segments: usize) -> Result<SchmidtLoop> {
    require(segments >= 2, || format!("need M >= 2 segments, got {segments}"))?;
    let mut first = [Vec::with_capacity(segments + 1), Vec::with_capacity(segments + 1)];
    let mut second = [Vec::with_capacity(segments + 1), Vec::with_capacity(segments + 1)];
    let mut coefficients = [0.0; 2];
    for k in 0..=segments {
        let phi = TAU * k as f64 / segments as f64;
        let form = model_b_schmidt(&model_b_state(kappa, theta, energy, phi))?;
        if k == 0 {
            let gap = form.coefficients[0] - form.coefficients[1];
            if gap < 1e-9 {
                return Err(Error::SchmidtDegenerate(gap));
            }
            coefficients = form.coefficients;
        }
        let [f0, f1] = form.first;
        let [g0, g1] = form.second;
        first[0].push(f0);
        first[1].push(f1);
        second[0].push(g0);
        second[1].push(g1);
    }
    Ok(SchmidtLoop {
        coefficients,
        first,
        second,
    })
}

/// Berry phase of the reduced state of spin 1 for a thermally diluted Model B.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedBerryPhase {
    /// Weighted sum reduced to `(−π, π]`.
    pub phase: Angle,
    /// The weighted sum before reduction.
    pub lifted: f64,
    /// `p̃_α^i`, indexed `[i − 1][α]`; sums to 1.
    pub weights: [[f64; 2]; 4],
    /// Single-valued-gauge Berry phases of `|F_α^i⟩`, indexed like `weights`.
    pub schmidt_phases: [[f64; 2]; 4],
    /// Bloch-vector length of the reduced state of spin 1.
    pub bloch_length: f64,
}

/// Weighted Berry phase `Σ_{iα} p̃_α^i Φ(F_α^i)` of the reduced state of spin 1.
///
/// Each `Φ(F)` is the real-valued connection integral in the gauge where the
/// `|↑⟩` component is real (see [`berry_phase_single_valued`]); averaging
/// the mod-2π-reduced values instead would make the result depend on where
/// each term happened to be cut.
pub fn model_b_reduced_bp(p: &ModelBParams, segments: usize) -> Result<ReducedBerryPhase> {
    p.validate()?;
    let energies = model_b_energies(p.kappa, p.theta);
    let thermal = model_b_thermal_weights(p);

    let mut weights = [[0.0; 2]; 4];
    let mut schmidt_phases = [[0.0; 2]; 4];
    let mut reduced = CMatrix::zeros(2);
    for i in 0..4 {
        let sl = schmidt_loop(p.kappa, p.theta, energies[i], segments)?;
        let occupation = if i + 1 == p.branch {
            1.0 - p.epsilon + p.epsilon * thermal[i]
        } else {
            p.epsilon * thermal[i]
        };
        for a in 0..2 {
            weights[i][a] = occupation * sl.coefficients[a];
            schmidt_phases[i][a] = berry_phase_single_valued(&sl.first[a], 0)?;
            reduced = &reduced + &CMatrix::outer(&sl.first[a][0]).scale(C64::new(weights[i][a], 0.0));
        }
    }
    let lifted: f64 = weights
        .iter()
        .flatten()
        .zip(schmidt_phases.iter().flatten())
        .map(|(w, phi)| w * phi)
        .sum();
    let bloch = crate::qmat::bloch_from_density(&DensityMatrix::new(reduced)?)?;
    Ok(ReducedBerryPhase {
        phase: Angle::new(lifted),
        lifted,
        weights,
        schmidt_phases,
        bloch_length: bloch.norm(),
    })
}

/// Berry phases of a pure Model B eigenstate and of its two subsystems, all in
/// the single-valued gauge of the first basis component.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CompositeBerryPhases {
    /// `Σ_α p_α Φ(F_α)`
    pub first: f64,
    /// `Σ_α p_α Φ(f_α)`
    pub second: f64,
    /// `Φ(|Ψ_j⟩)`
    pub composite: f64,
}

pub fn model_b_pure_phases(
    kappa: f64,
    theta: f64,
    branch: usize,
    segments: usize,
) -> Result<CompositeBerryPhases> {
    check_model_b_geometry(kappa, theta)?;
    require((1..=4).contains(&branch), || {
        format!("branch must be 1..=4, got {branch}")
    })?;
    let energy = model_b_energies(kappa, theta)[branch - 1];
    let sl = schmidt_loop(kappa, theta, energy, segments)?;
    let mut first = 0.0;
    let mut second = 0.0;
    for a in 0..2 {
        first += sl.coefficients[a] * berry_phase_single_valued(&sl.first[a], 0)?;
        second += sl.coefficients[a] * berry_phase_single_valued(&sl.second[a], 0)?;
    }
    let states: Vec<Vec<C64>> = (0..=segments)
        .map(|k| model_b_state(kappa, theta, energy, TAU * k as f64 / segments as f64))
        .collect();
    let composite = berry_phase_single_valued(&states, 0)?;
    Ok(CompositeBerryPhases {
        first,
        second,
        composite,
    })
}

/// Largest deviation of the Schmidt coefficients of branch `j` from their
/// `t = 0` values over one sampled loop.
pub fn model_b_schmidt_drift(kappa: f64, theta: f64, branch: usize, segments: usize) -> Result<f64> {
    check_model_b_geometry(kappa, theta)?;
    let energy = model_b_energies(kappa, theta)[branch - 1];
    let reference = model_b_schmidt(&model_b_state(kappa, theta, energy, 0.0))?.coefficients;
    let mut worst: f64 = 0.0;
    for k in 1..=segments {
        let phi = TAU * k as f64 / segments as f64;
        let c = model_b_schmidt(&model_b_state(kappa, theta, energy, phi))?.coefficients;
        worst = worst
            .max((c[0] - reference[0]).abs())
            .max((c[1] - reference[1]).abs());
    }
    Ok(worst)
}

/// `|⟨Ψ_i|Ψ_j⟩ − δ_ij|`, largest entry.
pub fn orthonormality_defect(states: &[Vec<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(a, b) - C64::new(target, 0.0)).norm());
        }
    }
    worst
}
