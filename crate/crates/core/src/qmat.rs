//! Dense complex linear algebra for the 2x2 and 4x4 Hermitian matrices that
//! appear in single- and two-spin problems.
//!
//! Nothing here tries to be general. Matrices are row-major `Vec<Complex64>`
//! with a runtime dimension; the only dimensions used by the rest of the crate
//! are 2 (one spin) and 4 (two spins, lexicographic basis
//! `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`, spin 1 leftmost, `↑ = |e⟩ = σ_z +1`).

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-10;
const EIG_INPUT_TOL: f64 = 1e-10;
const DEGENERACY_GAP: f64 = 1e-9;
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a perfect square.
    pub fn from_row_major(entries: Vec<C64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() || dim == 0 {
            return Err(Error::Precondition(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Ok(Self { dim, data: entries })
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(
            values.len(),
            |i, j| {
                if i == j {
                    C64::new(values[i], 0.0)
                } else {
                    ZERO
                }
            },
        )
    }

    /// `|v⟩⟨v|`
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|a_ij − conj(a_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "dimension mismatch");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        let n = other.dim;
        Self::from_fn(self.dim * n, |i, j| {
            self.get(i / n, j / n) * other.get(i % n, j % n)
        })
    }

    /// `[a, b] = ab − ba`
    pub fn commutator(a: &CMatrix, b: &CMatrix) -> Self {
        &(a * b) - &(b * a)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    })
}

pub fn sigma_z() -> CMatrix {
    CMatrix::diag(&[1.0, -1.0])
}

/// `σ₊ = |e⟩⟨g|`
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_fn(2, |i, j| if (i, j) == (0, 1) { ONE } else { ZERO })
}

/// `σ₋ = |g⟩⟨e|`
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_fn(2, |i, j| if (i, j) == (1, 0) { ONE } else { ZERO })
}

// --- vectors -------------------------------------------------------------

/// `⟨a|b⟩`
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[C64]) -> Vec<C64> {
    let n = vector_norm(v);
    v.iter().map(|z| z / n).collect()
}

/// Rephases `v` so that its largest-magnitude component is real and positive.
/// Ties resolve to the lowest index.
pub fn canonical_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

/// Index of a two-spin product basis state in lexicographic order.
#[inline]
pub fn two_spin_index(spin1_up: bool, spin2_up: bool) -> usize {
    (if spin1_up { 0 } else { 2 }) + if spin2_up { 0 } else { 1 }
}

// --- density matrices ----------------------------------------------------

/// A Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let defect = mat.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::Precondition(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::Precondition(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let spectrum = eig_hermitian(&mat)?;
        let lowest = spectrum.values.last().copied().unwrap_or(0.0);
        if lowest < -POSITIVITY_TOL {
            return Err(Error::Precondition(format!(
                "density matrix has negative eigenvalue {lowest:e}"
            )));
        }
        Ok(Self(mat))
    }

    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        Self::new(CMatrix::outer(&normalized(psi)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)))
    }

    pub fn mat(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eig_hermitian(&self.0)?.values)
    }
}

// --- Bloch vectors -------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let b = Self { x, y, z };
        if b.norm() > 1.0 + 1e-10 {
            return Err(Error::Domain(format!(
                "Bloch vector length {} exceeds 1",
                b.norm()
            )));
        }
        Ok(b)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: rho.dim(),
        });
    }
    let m = rho.mat();
    let off = m.get(0, 1);
    Ok(BlochVector {
        x: 2.0 * off.re,
        y: -2.0 * off.im,
        z: m.get(0, 0).re - m.get(1, 1).re,
    })
}

/// `ρ = ½(I + x σ_x + y σ_y + z σ_z)`
pub fn density_from_bloch(b: &BlochVector) -> Result<DensityMatrix> {
    if b.norm() > 1.0 + 1e-10 {
        return Err(Error::Domain(format!(
            "Bloch vector length {} exceeds 1",
            b.norm()
        )));
    }
    let off = C64::new(0.5 * b.x, -0.5 * b.y);
    Ok(DensityMatrix(CMatrix::from_row_major(vec![
        C64::new(0.5 * (1.0 + b.z), 0.0),
        off,
        off.conj(),
        C64::new(0.5 * (1.0 - b.z), 0.0),
    ])?))
}

// --- partial trace -------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Reduced state of one spin of a two-spin density matrix.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: rho.dim(),
        });
    }
    let m = rho.mat();
    let reduced = CMatrix::from_fn(2, |a, b| {
        (0..2)
            .map(|c| match keep {
                Subsystem::First => m.get(2 * a + c, 2 * b + c),
                Subsystem::Second => m.get(2 * c + a, 2 * c + b),
            })
            .sum()
    });
    Ok(DensityMatrix(reduced))
}

// --- eigensolver ---------------------------------------------------------

/// Eigenpairs of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    /// Set when two eigenvalues are closer than 1e-9; vectors inside such a
    /// block are an arbitrary orthonormal basis.
    pub degenerate: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// `Σ λ_i |v_i⟩⟨v_i|`
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    let z = out.get(i, j) + v[i] * v[j].conj() * *lambda;
                    out.set(i, j, z);
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// 2x2 inputs use the closed-form quadratic, larger ones cyclic complex Jacobi
/// rotations. Each eigenvector is rephased so its largest component is real
/// positive.
pub fn eig_hermitian(h: &CMatrix) -> Result<Spectrum> {
    let scale = h.frobenius_norm().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > EIG_INPUT_TOL * scale {
        return Err(Error::Precondition(format!(
            "matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let (values, mut vectors) = match h.dim() {
        0 => return Err(Error::Precondition("empty matrix".into())),
        1 => (vec![h.get(0, 0).re], vec![vec![ONE]]),
        2 => eig2(h),
        _ => jacobi(h)?,
    };
    for v in vectors.iter_mut() {
        canonical_phase(v);
    }
    let degenerate = values.windows(2).any(|w| w[0] - w[1] < DEGENERACY_GAP);
    Ok(Spectrum {
        values,
        vectors,
        degenerate,
    })
}

fn eig2(h: &CMatrix) -> (Vec<f64>, Vec<Vec<C64>>) {
    let a = h.get(0, 0).re;
    let d = h.get(1, 1).re;
    let b = 0.5 * (h.get(0, 1) + h.get(1, 0).conj());
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let radius = half.hypot(b.norm());
    let (hi, lo) = (mean + radius, mean - radius);
    if b.norm() <= f64::MIN_POSITIVE || radius == 0.0 {
        let (top, bottom) = if a >= d {
            (vec![ONE, ZERO], vec![ZERO, ONE])
        } else {
            (vec![ZERO, ONE], vec![ONE, ZERO])
        };
        return (vec![hi, lo], vec![top, bottom]);
    }
    // Two algebraically equivalent null vectors of (H − hi); keep the better conditioned one.
    let u = [b, C64::new(hi - a, 0.0)];
    let w = [C64::new(hi - d, 0.0), b.conj()];
    let top = if vector_norm(&u) >= vector_norm(&w) {
        normalized(&u)
    } else {
        normalized(&w)
    };
    let bottom = vec![-top[1].conj(), top[0].conj()];
    (vec![hi, lo], vec![top, bottom])
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(h: &CMatrix) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = CMatrix::identity(n);
    let threshold = JACOBI_TOL * h.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence(sweeps));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = a.get(p, q);
                let mag = g.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = g / mag;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * gpp + akq * gqp);
                    a.set(k, q, akp * gpq + akq * gqq);
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * gpp + vkq * gqp);
                    v.set(k, q, vkp * gpq + vkq * gqq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, gpp.conj() * apk + gqp.conj() * aqk);
                    a.set(q, k, gpq.conj() * apk + gqq.conj() * aqk);
                }
                a.set(p, q, ZERO);
                a.set(q, p, ZERO);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).re.total_cmp(&a.get(i, i).re));
    let values = order.iter().map(|&i| a.get(i, i).re).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v.get(k, i)).collect())
        .collect();
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: &[f64]) -> CMatrix {
        let mut k = 0;
        let mut next = || {
            k += 1;
            seed[k % seed.len()] * (k as f64 * 0.7).sin()
        };
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, c(next(), 0.0));
            for j in i + 1..n {
                let z = c(next(), next());
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    fn assert_spectrum_ok(h: &CMatrix, s: &Spectrum) {
        let norm = h.frobenius_norm().max(1.0);
        for (lambda, v) in s.values.iter().zip(&s.vectors) {
            let hv = h.apply(v);
            let resid: Vec<C64> = hv.iter().zip(v).map(|(a, b)| a - b * *lambda).collect();
            assert!(
                vector_norm(&resid) <= 1e-10 * norm,
                "residual {}",
                vector_norm(&resid)
            );
        }
        for i in 0..s.len() {
            for j in 0..s.len() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((inner(&s.vectors[i], &s.vectors[j]) - c(expect, 0.0)).norm() < 1e-10);
            }
        }
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sigma_z_spectrum() {
        let s = eig_hermitian(&sigma_z()).unwrap();
        assert_eq!(s.values, vec![1.0, -1.0]);
        assert_eq!(s.vectors[0], vec![ONE, ZERO]);
        assert_eq!(s.vectors[1], vec![ZERO, ONE]);
        assert!(!s.degenerate);
    }

    #[test]
    fn tilted_pauli_top_vector_is_spin_up_along_axis() {
        let theta = PI / 3.0;
        let h = &sigma_x().scale(c(theta.sin(), 0.0)) + &sigma_z().scale(c(theta.cos(), 0.0));
        let s = eig_hermitian(&h).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-14);
        assert!((s.values[1] + 1.0).abs() < 1e-14);
        let up = [c((theta / 2.0).cos(), 0.0), c((theta / 2.0).sin(), 0.0)];
        assert!((inner(&up, &s.vectors[0]).norm() - 1.0).abs() < 1e-12);
        assert_spectrum_ok(&h, &s);
    }

    #[test]
    fn phase_convention_largest_component_real_positive() {
        let h = CMatrix::from_row_major(vec![c(0.3, 0.0), c(0.0, 0.4), c(0.0, -0.4), c(-0.1, 0.0)]).unwrap();
        for v in eig_hermitian(&h).unwrap().vectors {
            let k = if v[0].norm() >= v[1].norm() { 0 } else { 1 };
            assert!(v[k].im.abs() < 1e-15 && v[k].re > 0.0);
        }
    }

    #[test]
    fn four_by_four_reconstructs() {
        let h = random_hermitian(4, &[0.3, -1.2, 0.8, 2.1, -0.4, 1.7, 0.05]);
        let s = eig_hermitian(&h).unwrap();
        assert_spectrum_ok(&h, &s);
        assert!(s.reconstruct().max_abs_diff(&h) < 1e-9);
    }

    #[test]
    fn degenerate_flag_and_error_paths() {
        let s = eig_hermitian(&CMatrix::identity(4)).unwrap();
        assert!(s.degenerate);
        let s = eig_hermitian(&CMatrix::diag(&[0.5, 0.5])).unwrap();
        assert!(s.degenerate);

        let bad = CMatrix::from_row_major(vec![ONE, ONE, ZERO, ONE]).unwrap();
        assert!(matches!(eig_hermitian(&bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn bloch_examples() {
        let b = bloch_from_density(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert_eq!((b.x, b.y, b.z), (0.0, 0.0, 0.0));
        let e = DensityMatrix::from_pure(&[ONE, ZERO]).unwrap();
        let b = bloch_from_density(&e).unwrap();
        assert_eq!((b.x, b.y, b.z), (0.0, 0.0, 1.0));
        assert!(matches!(
            density_from_bloch(&BlochVector {
                x: 0.8,
                y: 0.8,
                z: 0.0
            }),
            Err(Error::Domain(_))
        ));
        assert!(BlochVector::new(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn bloch_matches_pauli_expectations() {
        let rho = DensityMatrix::from_pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let b = bloch_from_density(&rho).unwrap();
        let expect = |s: CMatrix| (rho.mat() * &s).trace().re;
        assert!((b.x - expect(sigma_x())).abs() < 1e-15);
        assert!((b.y - expect(sigma_y())).abs() < 1e-15);
        assert!((b.z - expect(sigma_z())).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![ZERO; 4];
        psi[two_spin_index(true, true)] = c(s, 0.0);
        psi[two_spin_index(false, false)] = c(s, 0.0);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        for keep in [Subsystem::First, Subsystem::Second] {
            let r = partial_trace(&rho, keep).unwrap();
            assert!(r.mat().max_abs_diff(DensityMatrix::maximally_mixed(2).mat()) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = density_from_bloch(&BlochVector {
            x: 0.3,
            y: -0.2,
            z: 0.5,
        })
        .unwrap();
        let b = density_from_bloch(&BlochVector {
            x: -0.1,
            y: 0.6,
            z: 0.2,
        })
        .unwrap();
        let ab = DensityMatrix::new(a.mat().kron(b.mat())).unwrap();
        let ra = partial_trace(&ab, Subsystem::First).unwrap();
        let rb = partial_trace(&ab, Subsystem::Second).unwrap();
        assert!(ra.mat().max_abs_diff(a.mat()) < 1e-15);
        assert!(rb.mat().max_abs_diff(b.mat()) < 1e-15);
        assert!(matches!(
            partial_trace(&a, Subsystem::First),
            Err(Error::Dimension { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(CMatrix::diag(&[0.7, 0.4])).is_err());
        assert!(DensityMatrix::new(CMatrix::diag(&[1.2, -0.2])).is_err());
        assert!(DensityMatrix::new(CMatrix::diag(&[0.7, 0.3])).is_ok());
    }

    fn hermitian_strategy(n: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec(-2.0f64..2.0, n * n).prop_map(move |xs| {
            let mut m = CMatrix::zeros(n);
            for i in 0..n {
                m.set(i, i, c(xs[i * n + i], 0.0));
                for j in i + 1..n {
                    let z = c(xs[i * n + j], xs[j * n + i]);
                    m.set(i, j, z);
                    m.set(j, i, z.conj());
                }
            }
            m
        })
    }

    fn bloch_strategy() -> impl Strategy<Value = BlochVector> {
        (0.0f64..1.0, 0.0f64..PI, 0.0f64..2.0 * PI).prop_map(|(r, th, ph)| BlochVector {
            x: r * th.sin() * ph.cos(),
            y: r * th.sin() * ph.sin(),
            z: r * th.cos(),
        })
    }

    proptest! {
        #[test]
        fn eig_invariants_hold(h in prop_oneof![hermitian_strategy(2), hermitian_strategy(4)]) {
            let s = eig_hermitian(&h).unwrap();
            assert_spectrum_ok(&h, &s);
            let sum: f64 = s.values.iter().sum();
            prop_assert!((sum - h.trace().re).abs() < 1e-10);
            prop_assert!(s.reconstruct().max_abs_diff(&h) < 1e-9);
        }

        #[test]
        fn bloch_roundtrip(b in bloch_strategy()) {
            let rho = density_from_bloch(&b).unwrap();
            let back = density_from_bloch(&bloch_from_density(&rho).unwrap()).unwrap();
            prop_assert!(back.mat().max_abs_diff(rho.mat()) < 1e-12);
        }

        #[test]
        fn partial_trace_preserves_trace_and_hermiticity(
            re in proptest::collection::vec(-1.0f64..1.0, 4),
            im in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let psi: Vec<C64> = re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect();
            prop_assume!(vector_norm(&psi) > 1e-3);
            let rho = DensityMatrix::from_pure(&psi).unwrap();
            for keep in [Subsystem::First, Subsystem::Second] {
                let r = partial_trace(&rho, keep).unwrap();
                prop_assert!((r.mat().trace() - ONE).norm() < 1e-12);
                prop_assert!(r.mat().hermiticity_defect() < 1e-12);
            }
        }
    }
}
