//! Geometric-phase functionals on sampled evolutions.
//!
//! The kinematic mixed-state phase is evaluated from the eigen-decomposition
//! of `ρ(t)` along a uniformly sampled trajectory. The parallel-transport
//! factor `exp(−∫⟨w|ẇ⟩dt)` is replaced by the Pancharatnam product
//! `⟨w(t₀)|w(t_M)⟩ Π_k exp(−i arg⟨w(t_k)|w(t_{k+1})⟩)`, which is invariant
//! under independent rephasing of every sample and converges to the
//! continuum value as `M → ∞`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmat::{eig_hermitian, inner, vector_norm, BlochVector, DensityMatrix, C64};

/// Overlap margin below which successive eigenvectors are not matched.
pub const MATCH_MARGIN: f64 = 0.1;
pub const DEGENERACY_GAP: f64 = 1e-9;
/// Interference sums smaller than this have no meaningful argument.
pub const MIN_SUM_MAGNITUDE: f64 = 1e-12;
pub const DEFAULT_SAMPLES: usize = 2000;

/// Reduces an angle to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// An angle in radians, always reduced to `(−π, π]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Self {
        Angle(wrap_angle(radians))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Distance on the circle, in `[0, π]`.
    pub fn distance(self, other: Angle) -> f64 {
        wrap_angle(self.0 - other.0).abs()
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

// --- trajectories --------------------------------------------------------

/// Density matrices sampled at `t_k = k τ / M`, `k = 0..=M`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    tau: f64,
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn new(tau: f64, samples: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Precondition(format!(
                "loop time must be positive, got {tau}"
            )));
        }
        if samples.len() < 3 {
            return Err(Error::Precondition(format!(
                "trajectory needs M >= 2 segments, got {}",
                samples.len().saturating_sub(1)
            )));
        }
        let m = (samples.len() - 1) as f64;
        let dim = samples[0].1.dim();
        for (k, (t, rho)) in samples.iter().enumerate() {
            let expected = k as f64 * tau / m;
            if (t - expected).abs() > 1e-12 * tau {
                return Err(Error::Precondition(format!(
                    "sample {k} at t = {t} breaks uniform spacing (expected {expected})"
                )));
            }
            if rho.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: rho.dim(),
                });
            }
        }
        let (times, states) = samples.into_iter().unzip();
        Ok(Self { tau, times, states })
    }

    /// Samples `state(t)` on the uniform grid with `segments` intervals.
    pub fn from_fn(
        tau: f64,
        segments: usize,
        mut state: impl FnMut(f64) -> Result<DensityMatrix>,
    ) -> Result<Self> {
        if segments < 2 {
            return Err(Error::Precondition(format!(
                "trajectory needs M >= 2 segments, got {segments}"
            )));
        }
        let samples = (0..=segments)
            .map(|k| {
                let t = k as f64 * tau / segments as f64;
                state(t).map(|rho| (t, rho))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(tau, samples)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of intervals `M`.
    pub fn segments(&self) -> usize {
        self.states.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

// --- spectral paths ------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityIssue {
    pub index: usize,
    pub time: f64,
    pub reason: String,
}

/// Eigenvalue and eigenvector paths of a trajectory, one entry per branch.
///
/// Branches are labelled by eigenvalue order at `t₀` and then followed by
/// maximal overlap, so their eigenvalue order may change along the path.
#[derive(Clone, Debug)]
pub struct SpectralPath {
    pub times: Vec<f64>,
    /// `values[i][k] = p_i(t_k)`
    pub values: Vec<Vec<f64>>,
    /// `vectors[i][k] = |w_i(t_k)⟩`
    pub vectors: Vec<Vec<Vec<C64>>>,
    pub continuity_ok: bool,
    pub issue: Option<ContinuityIssue>,
}

impl SpectralPath {
    pub fn branch_count(&self) -> usize {
        self.values.len()
    }

    pub fn segments(&self) -> usize {
        self.times.len() - 1
    }

    fn continuity_error(&self) -> Error {
        match &self.issue {
            Some(issue) => Error::Continuity {
                index: issue.index,
                time: issue.time,
                reason: issue.reason.clone(),
            },
            None => Error::Continuity {
                index: 0,
                time: 0.0,
                reason: "spectral path marked discontinuous".into(),
            },
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                extend(prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Follows the eigenbranches of `ρ(t_k)` through the trajectory.
pub fn spectral_path(traj: &Trajectory) -> Result<SpectralPath> {
    let n = traj.dim();
    let samples = traj.states().len();
    let perms = permutations(n);

    let mut values = vec![Vec::with_capacity(samples); n];
    let mut vectors = vec![Vec::with_capacity(samples); n];
    let mut issue: Option<ContinuityIssue> = None;
    let flag = |index: usize, reason: String, issue: &mut Option<ContinuityIssue>| {
        if issue.is_none() {
            *issue = Some(ContinuityIssue {
                index,
                time: traj.times()[index],
                reason,
            });
        }
    };

    for (k, rho) in traj.states().iter().enumerate() {
        let spec = eig_hermitian(rho.mat())?;
        if spec.degenerate {
            flag(
                k,
                format!("eigenvalue gap {:.3e} below {DEGENERACY_GAP:e}", spec.min_gap()),
                &mut issue,
            );
        }
        if k == 0 {
            for (i, (p, w)) in spec.values.into_iter().zip(spec.vectors).enumerate() {
                values[i].push(p);
                vectors[i].push(w);
            }
            continue;
        }

        // overlaps[i][j] = |⟨w_i(t_{k-1})|v_j(t_k)⟩|
        let overlaps: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let prev = &vectors[i][k - 1];
                spec.vectors.iter().map(|v| inner(prev, v).norm()).collect()
            })
            .collect();
        let best = perms
            .iter()
            .max_by(|a, b| {
                let sa: f64 = a.iter().enumerate().map(|(i, &j)| overlaps[i][j]).sum();
                let sb: f64 = b.iter().enumerate().map(|(i, &j)| overlaps[i][j]).sum();
                sa.total_cmp(&sb)
            })
            .expect("at least one permutation");
        for (i, &j) in best.iter().enumerate() {
            let runner_up = (0..n)
                .filter(|&l| l != j)
                .map(|l| overlaps[i][l])
                .fold(0.0, f64::max);
            let margin = overlaps[i][j] - runner_up;
            if margin <= MATCH_MARGIN {
                flag(
                    k,
                    format!("ambiguous branch matching for branch {i} (overlap margin {margin:.3})"),
                    &mut issue,
                );
            }
            values[i].push(spec.values[j]);
            vectors[i].push(spec.vectors[j].clone());
        }
    }

    Ok(SpectralPath {
        times: traj.times().to_vec(),
        values,
        vectors,
        continuity_ok: issue.is_none(),
        issue,
    })
}

/// Kinematic geometric phase of a (generally nonunitary) mixed-state evolution.
pub fn gp_kinematic(path: &SpectralPath) -> Result<Angle> {
    Ok(Angle::new(interference_sum(path)?.arg()))
}

/// The complex sum whose argument is the kinematic phase.
pub fn interference_sum(path: &SpectralPath) -> Result<C64> {
    if !path.continuity_ok {
        return Err(path.continuity_error());
    }
    let last = path.segments();
    let mut sum = C64::new(0.0, 0.0);
    for (p, w) in path.values.iter().zip(&path.vectors) {
        let weight = (p[0].max(0.0) * p[last].max(0.0)).sqrt();
        if weight == 0.0 {
            continue;
        }
        let transport: f64 = w.windows(2).map(|pair| inner(&pair[0], &pair[1]).arg()).sum();
        sum += inner(&w[0], &w[last]) * C64::from_polar(weight, -transport);
    }
    if sum.norm() < MIN_SUM_MAGNITUDE {
        return Err(Error::UndefinedPhase(sum.norm()));
    }
    Ok(sum)
}

/// Convenience: trajectory → spectral path → kinematic phase.
pub fn gp_of_trajectory(traj: &Trajectory) -> Result<Angle> {
    gp_kinematic(&spectral_path(traj)?)
}

// --- pure-state Berry phases --------------------------------------------

fn check_loop(states: &[Vec<C64>]) -> Result<()> {
    if states.len() < 2 {
        return Err(Error::Precondition("a loop needs at least two samples".into()));
    }
    for (k, s) in states.iter().enumerate() {
        if (vector_norm(s) - 1.0).abs() > 1e-8 {
            return Err(Error::Precondition(format!("state {k} is not normalized")));
        }
    }
    let closure = inner(&states[states.len() - 1], &states[0]).norm();
    if closure <= 0.999 {
        return Err(Error::Precondition(format!(
            "path is not closed in ray space (|⟨F(τ)|F(0)⟩| = {closure:.6})"
        )));
    }
    Ok(())
}

/// Cyclic Berry phase `arg⟨F₀|F_M⟩ − Σ_k arg⟨F_k|F_{k+1}⟩`, reduced mod 2π.
pub fn berry_phase_cyclic(states: &[Vec<C64>]) -> Result<Angle> {
    check_loop(states)?;
    let transport: f64 = states.windows(2).map(|p| inner(&p[0], &p[1]).arg()).sum();
    Ok(Angle::new(
        inner(&states[0], &states[states.len() - 1]).arg() - transport,
    ))
}

/// Berry phase `i∮⟨F|Ḟ⟩dt` as a real number, evaluated in the single-valued
/// gauge where component `reference` of every sample is real and positive.
///
/// Agrees with [`berry_phase_cyclic`] mod 2π. Unlike the reduced value, it
/// can be averaged with non-integer weights: for a spin-½ path it equals
/// minus half the solid angle measured from the north pole, in `[−2π, 0]`.
pub fn berry_phase_single_valued(states: &[Vec<C64>], reference: usize) -> Result<f64> {
    check_loop(states)?;
    let mut gauged = Vec::with_capacity(states.len());
    for (k, s) in states.iter().enumerate() {
        let pivot = *s.get(reference).ok_or(Error::Dimension {
            expected: reference + 1,
            got: s.len(),
        })?;
        if pivot.norm() < 1e-8 {
            return Err(Error::GaugeSingular(k));
        }
        let phase = pivot.conj() / pivot.norm();
        gauged.push(s.iter().map(|z| z * phase).collect::<Vec<_>>());
    }
    let transport: f64 = gauged.windows(2).map(|p| inner(&p[0], &p[1]).arg()).sum();
    Ok(inner(&gauged[0], &gauged[gauged.len() - 1]).arg() - transport)
}

// --- unitary closed form -------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitaryPhase {
    pub angle: Angle,
    /// `cos(Ω/2) = 0`, where `tan(Ω/2)` has a pole.
    pub at_pole: bool,
}

/// Phase of a unitarily precessing mixed spin whose Bloch vector has length
/// `r` and sweeps solid angle `Ω`: `arg[cos(Ω/2) − i r sin(Ω/2)]`.
///
/// This is `−arctan(r tan(Ω/2))` with the quadrant fixed by the signs of
/// `cos(Ω/2)` and `sin(Ω/2)`; the bare arctangent is only correct mod π.
pub fn gp_unitary_closed_form(r: f64, omega: f64) -> Result<UnitaryPhase> {
    if !(0.0..=1.0 + 1e-10).contains(&r) {
        return Err(Error::Domain(format!("Bloch length must lie in [0, 1], got {r}")));
    }
    let r = r.min(1.0);
    let (s, c) = (0.5 * omega).sin_cos();
    if c.abs() < 1e-12 {
        return Ok(UnitaryPhase {
            angle: Angle::new(-FRAC_PI_2 * s.signum()),
            at_pole: true,
        });
    }
    Ok(UnitaryPhase {
        angle: Angle::new(-(r * s).atan2(c)),
        at_pole: false,
    })
}

/// Signed solid angle enclosed by a Bloch-sphere path closed by the geodesic
/// from its last point back to its first, measured from the north pole
/// (counter-clockwise about `+z` is positive). Only directions matter.
pub fn enclosed_solid_angle(path: &[BlochVector]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::Precondition("a loop needs at least two points".into()));
    }
    let dirs = path
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let r = b.norm();
            if r < 1e-14 {
                Err(Error::Domain(format!("Bloch vector {k} has no direction")))
            } else {
                Ok([b.x / r, b.y / r, b.z / r])
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let triangle = |a: &[f64; 3], b: &[f64; 3]| {
        // apex at the north pole n = (0, 0, 1)
        let triple = a[0] * b[1] - a[1] * b[0];
        let denom = 1.0 + a[2] + b[2] + (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
        2.0 * triple.atan2(denom)
    };
    let open: f64 = dirs.windows(2).map(|w| triangle(&w[0], &w[1])).sum();
    Ok(open + triangle(&dirs[dirs.len() - 1], &dirs[0]))
}
