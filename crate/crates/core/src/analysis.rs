//! Sweeps over temperature or bath occupation, Bloch paths, and the
//! adiabaticity threshold `n̄_ad`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gp::{gp_kinematic, spectral_path, Angle, SpectralPath, Trajectory, DEFAULT_SAMPLES};
use crate::lindblad::{model_c_trajectory, BathParams, ModelCParams};
use crate::models::{model_a_trajectory, model_b_reduced_bp, precessing_spinor, ModelAParams, ModelBParams};
use crate::qmat::{bloch_from_density, inner, BlochVector, C64};

/// Overlap above which a `t = 0` eigenvector is taken to be the initial state.
pub const BRANCH_MATCH: f64 = 0.9;
/// Largest change of Φ under `M → 2M` for a point to count as converged.
pub const CONVERGENCE_TOL: f64 = 1e-5;

/// `W = |⟨w₁(t₀)|w₁(t_M)⟩|` for the branch `w₁` that starts at `initial`.
pub fn adiabatic_overlap(traj: &Trajectory, initial: &[C64]) -> Result<f64> {
    let path = spectral_path(traj)?;
    if let Some(issue) = path.issue.clone() {
        return Err(Error::Continuity {
            index: issue.index,
            time: issue.time,
            reason: issue.reason,
        });
    }
    overlap_on_path(&path, initial)
}

fn overlap_on_path(path: &SpectralPath, initial: &[C64]) -> Result<f64> {
    let (branch, best) = path
        .vectors
        .iter()
        .map(|w| inner(&w[0], initial).norm())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::BranchIdentification(0.0))?;
    if best <= BRANCH_MATCH {
        return Err(Error::BranchIdentification(best));
    }
    let w = &path.vectors[branch];
    Ok(inner(&w[0], &w[path.segments()]).norm())
}

pub fn bloch_path(traj: &Trajectory) -> Result<Vec<BlochVector>> {
    traj.states().iter().map(bloch_from_density).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    ModelA { params: ModelAParams, segments: usize },
    ModelB { params: ModelBParams, segments: usize },
    ModelC { params: ModelCParams },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axis {
    #[serde(rename = "T")]
    Temperature,
    #[serde(rename = "nbar")]
    Nbar,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Temperature => "T",
            Axis::Nbar => "nbar",
        }
    }
}

impl ModelSpec {
    pub fn model_a(params: ModelAParams) -> Self {
        ModelSpec::ModelA {
            params,
            segments: DEFAULT_SAMPLES,
        }
    }

    pub fn model_b(params: ModelBParams) -> Self {
        ModelSpec::ModelB {
            params,
            segments: DEFAULT_SAMPLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::ModelA { params, .. } => params.validate(),
            ModelSpec::ModelB { params, .. } => params.validate(),
            ModelSpec::ModelC { params } => params.validate(),
        }
    }

    /// The same model with the axis variable set to `value`.
    pub fn at(&self, axis: Axis, value: f64) -> Result<ModelSpec> {
        let mut out = *self;
        match (&mut out, axis) {
            (ModelSpec::ModelA { params, .. }, Axis::Temperature) => params.temperature = value,
            (ModelSpec::ModelB { params, .. }, Axis::Temperature) => params.temperature = value,
            (ModelSpec::ModelC { params }, Axis::Temperature) => {
                params.bath = BathParams::from_temperature(params.bath.kappa, params.bath.omega0, value)?
            }
            (ModelSpec::ModelC { params }, Axis::Nbar) => {
                params.bath = BathParams::new(params.bath.kappa, params.bath.omega0, value)?
            }
            (_, Axis::Nbar) => {
                return Err(Error::Precondition(
                    "the nbar axis only applies to model-c; use T for models A and B".into(),
                ))
            }
        }
        out.validate()?;
        Ok(out)
    }

    fn with_segments(&self, m: usize) -> ModelSpec {
        let mut out = *self;
        match &mut out {
            ModelSpec::ModelA { segments, .. } | ModelSpec::ModelB { segments, .. } => *segments = m,
            ModelSpec::ModelC { params } => params.samples = Some(m),
        }
        out
    }

    fn segments(&self) -> Result<usize> {
        match self {
            ModelSpec::ModelA { segments, .. } | ModelSpec::ModelB { segments, .. } => Ok(*segments),
            ModelSpec::ModelC { params } => params.segments(),
        }
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        match self {
            ModelSpec::ModelA { params, segments } => model_a_trajectory(params, *segments),
            ModelSpec::ModelB { .. } => Err(Error::Precondition(
                "model-b has no single-spin trajectory; its phase comes from the Schmidt decomposition"
                    .into(),
            )),
            ModelSpec::ModelC { params } => model_c_trajectory(params),
        }
    }

    /// Pure state `w₁` is identified with when computing `W`.
    fn reference_state(&self) -> Option<[C64; 2]> {
        match self {
            ModelSpec::ModelA { params, .. } => Some(precessing_spinor(params.theta, 0.0, true)),
            ModelSpec::ModelB { .. } => None,
            ModelSpec::ModelC { params } => Some(params.initial_state()),
        }
    }
}

/// Φ, W and final Bloch radius at one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub phi: Option<f64>,
    pub w: Option<f64>,
    pub r_final: f64,
    pub diagnostic: Option<String>,
}

/// Runs the pipeline for one point. Continuity failures are reported in
/// `diagnostic` with Φ and W left empty.
pub fn evaluate(spec: &ModelSpec) -> Result<Evaluation> {
    if let ModelSpec::ModelB { params, segments } = spec {
        let r = model_b_reduced_bp(params, *segments)?;
        return Ok(Evaluation {
            phi: Some(r.phase.value()),
            w: None,
            r_final: r.bloch_length,
            diagnostic: None,
        });
    }
    let traj = spec.trajectory()?;
    let r_final = bloch_from_density(traj.states().last().expect("M >= 2"))?.norm();
    let path = spectral_path(&traj)?;
    if let Some(issue) = &path.issue {
        return Ok(Evaluation {
            phi: None,
            w: None,
            r_final,
            diagnostic: Some(format!(
                "continuity lost at sample {} (t = {}): {}",
                issue.index, issue.time, issue.reason
            )),
        });
    }
    let (phi, diagnostic) = match gp_kinematic(&path) {
        Ok(a) => (Some(a.value()), None),
        Err(e @ Error::UndefinedPhase(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let w = match spec.reference_state() {
        Some(psi) => Some(overlap_on_path(&path, &psi)?),
        None => None,
    };
    Ok(Evaluation {
        phi,
        w,
        r_final,
        diagnostic,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRecord {
    pub value: f64,
    pub phi: Option<f64>,
    #[serde(rename = "W")]
    pub w: Option<f64>,
    pub r_final: Option<f64>,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub records: Vec<PointRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    /// Repeat each point at `2M` and require `|ΔΦ| < 1e-5`.
    pub check_convergence: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            check_convergence: true,
        }
    }
}

fn sweep_point(spec: &ModelSpec, axis: Axis, value: f64, opts: SweepOptions) -> PointRecord {
    let failed = |e: Error| PointRecord {
        value,
        phi: None,
        w: None,
        r_final: None,
        converged: false,
        diagnostic: Some(e.to_string()),
    };
    let point = match spec.at(axis, value) {
        Ok(p) => p,
        Err(e) => return failed(e),
    };
    let eval = match evaluate(&point) {
        Ok(e) => e,
        Err(e) => return failed(e),
    };
    let mut converged = eval.phi.is_some();
    let mut diagnostic = eval.diagnostic;
    if converged && opts.check_convergence {
        let refined = point
            .segments()
            .map(|m| point.with_segments(2 * m))
            .and_then(|p| evaluate(&p));
        match refined {
            Ok(Evaluation { phi: Some(fine), .. }) => {
                let change = Angle::new(fine).distance(Angle::new(eval.phi.expect("checked")));
                if change >= CONVERGENCE_TOL {
                    converged = false;
                    diagnostic = Some(format!("doubling M changes phi by {change:.3e}"));
                }
            }
            Ok(other) => {
                converged = false;
                diagnostic = other.diagnostic.or(Some("phase undefined at 2M".into()));
            }
            Err(e) => {
                converged = false;
                diagnostic = Some(format!("at 2M: {e}"));
            }
        }
    }
    PointRecord {
        value,
        phi: eval.phi,
        w: eval.w,
        r_final: Some(eval.r_final),
        converged,
        diagnostic,
    }
}

fn map_points<T: Send, F>(values: &[f64], f: F) -> Vec<T>
where
    F: Fn(f64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values.par_iter().map(|&v| f(v)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        values.iter().map(|&v| f(v)).collect()
    }
}

/// Evaluates `spec` at every grid point. Failures at a point are recorded in
/// that point's record and never abort the sweep.
pub fn sweep(spec: &ModelSpec, axis: Axis, grid: &[f64], opts: SweepOptions) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Precondition("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    if axis == Axis::Nbar && !matches!(spec, ModelSpec::ModelC { .. }) {
        return Err(Error::Precondition(
            "the nbar axis only applies to model-c; use T for models A and B".into(),
        ));
    }
    let records = map_points(grid, |v| sweep_point(spec, axis, v, opts));
    Ok(SweepResult {
        axis,
        grid: grid.to_vec(),
        records,
    })
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

// --- threshold -----------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ThresholdCriterion {
    /// `W` drops below `threshold`.
    Overlap { threshold: f64 },
    /// Φ crosses zero (a jump across the ±π cut does not count).
    PhaseZero,
}

impl Default for ThresholdCriterion {
    fn default() -> Self {
        ThresholdCriterion::Overlap { threshold: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdOptions {
    /// Coarse scan spacing in `n̄`.
    pub step: f64,
    pub nbar_max: f64,
    /// Target bracket width.
    pub resolution: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            step: 0.5,
            nbar_max: 100.0,
            resolution: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub nbar: f64,
    pub phi: Option<f64>,
    #[serde(rename = "W")]
    pub w: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub criterion: ThresholdCriterion,
    /// Midpoint of `bracket`; `None` when the scan found no crossing.
    pub nbar_ad: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub scan: Vec<ScanPoint>,
}

fn scan_point(p: &ModelCParams, nbar: f64) -> ScanPoint {
    let spec = ModelSpec::ModelC { params: *p };
    match spec.at(Axis::Nbar, nbar).and_then(|s| evaluate(&s)) {
        Ok(e) => ScanPoint {
            nbar,
            phi: e.phi,
            w: e.w,
        },
        Err(_) => ScanPoint {
            nbar,
            phi: None,
            w: None,
        },
    }
}

impl ThresholdCriterion {
    /// Whether the criterion has fired at `b`, given the last evaluable
    /// point `a` before it.
    fn crossed(self, a: &ScanPoint, b: &ScanPoint) -> Option<bool> {
        match self {
            ThresholdCriterion::Overlap { threshold } => b.w.map(|w| w < threshold),
            ThresholdCriterion::PhaseZero => {
                let (x, y) = (a.phi?, b.phi?);
                Some((x < 0.0) != (y < 0.0) && (y - x).abs() < std::f64::consts::PI)
            }
        }
    }

    fn evaluable(self, p: &ScanPoint) -> bool {
        match self {
            ThresholdCriterion::Overlap { .. } => p.w.is_some(),
            ThresholdCriterion::PhaseZero => p.phi.is_some(),
        }
    }
}

/// Scans `n̄` upward from 0 for the first point where `criterion` fires,
/// then bisects the bracket down to `opts.resolution`.
pub fn threshold_nbar_ad(
    params: &ModelCParams,
    criterion: ThresholdCriterion,
    opts: ThresholdOptions,
) -> Result<ThresholdResult> {
    params.validate()?;
    if !(opts.step > 0.0) || !(opts.nbar_max > 0.0) || !(opts.resolution > 0.0) {
        return Err(Error::Precondition(
            "step, nbar_max and resolution must be positive".into(),
        ));
    }
    if let ThresholdCriterion::Overlap { threshold } = criterion {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Precondition(format!(
                "overlap threshold must lie in [0, 1], got {threshold}"
            )));
        }
    }
    let count = (opts.nbar_max / opts.step).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| i as f64 * opts.step).collect();

    // Scan in parallel batches, stopping at the first batch with a crossing.
    const BATCH: usize = 16;
    let mut scan: Vec<ScanPoint> = Vec::new();
    let mut last_good: Option<ScanPoint> = None;
    for chunk in grid.chunks(BATCH) {
        let points = map_points(chunk, |n| scan_point(params, n));
        for pt in points {
            scan.push(pt.clone());
            if !criterion.evaluable(&pt) {
                continue;
            }
            let fired = match &last_good {
                None => criterion.crossed(&pt, &pt) == Some(true),
                Some(prev) => criterion.crossed(prev, &pt) == Some(true),
            };
            if fired {
                let bracket = match last_good {
                    None => (pt.nbar, pt.nbar),
                    Some(prev) => bisect(params, criterion, prev, pt, opts.resolution),
                };
                return Ok(ThresholdResult {
                    criterion,
                    nbar_ad: Some(0.5 * (bracket.0 + bracket.1)),
                    bracket: Some(bracket),
                    scan,
                });
            }
            last_good = Some(pt);
        }
    }
    Ok(ThresholdResult {
        criterion,
        nbar_ad: None,
        bracket: None,
        scan,
    })
}

fn bisect(
    params: &ModelCParams,
    criterion: ThresholdCriterion,
    mut lo: ScanPoint,
    mut hi: ScanPoint,
    resolution: f64,
) -> (f64, f64) {
    while hi.nbar - lo.nbar > resolution {
        let mid = scan_point(params, 0.5 * (lo.nbar + hi.nbar));
        if !criterion.evaluable(&mid) {
            // Cannot refine through an unevaluable point; keep the bracket.
            break;
        }
        if criterion.crossed(&lo, &mid) == Some(true) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo.nbar, hi.nbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Trajectory;
    use crate::lindblad::FieldMode;
    use crate::qmat::{DensityMatrix, ONE, ZERO};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn rotating(kappa: f64, nbar: f64, theta: f64) -> ModelCParams {
        ModelCParams {
            field: 1e3,
            theta,
            bath: BathParams::new(kappa, 2.0, nbar).unwrap(),
            mode: FieldMode::Rotating,
            samples: None,
        }
    }

    #[test]
    fn overlap_of_constant_trajectory_is_one() {
        let rho = DensityMatrix::from_pure(&[ONE, ZERO]).unwrap();
        let traj = Trajectory::new(1.0, (0..=10).map(|k| (k as f64 * 0.1, rho.clone())).collect()).unwrap();
        assert!((adiabatic_overlap(&traj, &[ONE, ZERO]).unwrap() - 1.0).abs() < 1e-15);
        let off = [C64::new(0.6, 0.0), C64::new(0.8, 0.0)];
        assert!(matches!(
            adiabatic_overlap(&traj, &off),
            Err(Error::BranchIdentification(_))
        ));
    }

    #[test]
    fn unitary_rotating_spin_is_adiabatic() {
        let p = ModelCParams {
            samples: Some(20000),
            ..rotating(0.0, 0.0, FRAC_PI_4)
        };
        let traj = model_c_trajectory(&p).unwrap();
        assert!(adiabatic_overlap(&traj, &p.initial_state()).unwrap() > 0.99);
        for b in bloch_path(&traj).unwrap() {
            assert!((b.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn model_a_sweep_at_equator_is_flat() {
        let params = ModelAParams {
            theta: FRAC_PI_2,
            omega0: 1.0,
            epsilon: 1.0 / 3.0,
            delta: 1.0,
            temperature: 1.0,
        };
        let grid = linspace(0.1, 10.0, 12);
        let res = sweep(
            &ModelSpec::model_a(params),
            Axis::Temperature,
            &grid,
            SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(res.records.len(), 12);
        for r in &res.records {
            assert!(r.converged);
            assert!(Angle::new(r.phi.unwrap()).distance(Angle::new(PI)) < 1e-9);
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let spec = ModelSpec::ModelC {
            params: rotating(1e-3, 0.0, FRAC_PI_4),
        };
        assert!(sweep(&spec, Axis::Nbar, &[], SweepOptions::default()).is_err());
        assert!(sweep(&spec, Axis::Nbar, &[1.0, 1.0], SweepOptions::default()).is_err());
        let a = ModelSpec::model_a(ModelAParams {
            theta: 1.0,
            omega0: 1.0,
            epsilon: 0.1,
            delta: 1.0,
            temperature: 1.0,
        });
        assert!(sweep(&a, Axis::Nbar, &[1.0], SweepOptions::default()).is_err());
    }

    #[test]
    fn sweep_records_point_failures() {
        let a = ModelSpec::model_a(ModelAParams {
            theta: 1.0,
            omega0: 1.0,
            epsilon: 0.1,
            delta: 1.0,
            temperature: 1.0,
        });
        let res = sweep(
            &a,
            Axis::Temperature,
            &[-1.0, 1.0],
            SweepOptions {
                check_convergence: false,
            },
        )
        .unwrap();
        assert!(!res.records[0].converged && res.records[0].phi.is_none());
        assert!(res.records[0].diagnostic.is_some());
        assert!(res.records[1].phi.is_some());
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = ModelSpec::ModelC {
            params: ModelCParams {
                samples: Some(2000),
                ..rotating(0.05, 0.0, FRAC_PI_4)
            },
        };
        let grid = [0.0, 1.0, 2.0];
        let opts = SweepOptions {
            check_convergence: false,
        };
        let a = sweep(&spec, Axis::Nbar, &grid, opts).unwrap();
        let b = sweep(&spec, Axis::Nbar, &grid, opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_threshold_without_bath() {
        let p = ModelCParams {
            samples: Some(4000),
            ..rotating(0.0, 0.0, FRAC_PI_4)
        };
        let opts = ThresholdOptions {
            step: 1.0,
            nbar_max: 3.0,
            resolution: 1e-2,
        };
        let r = threshold_nbar_ad(&p, ThresholdCriterion::default(), opts).unwrap();
        assert!(r.nbar_ad.is_none() && r.bracket.is_none());
        assert_eq!(r.scan.len(), 4);
    }

    #[test]
    fn phase_zero_ignores_branch_cut() {
        let a = ScanPoint {
            nbar: 0.0,
            phi: Some(-3.1),
            w: None,
        };
        let b = ScanPoint {
            nbar: 1.0,
            phi: Some(3.1),
            w: None,
        };
        let c = ScanPoint {
            nbar: 2.0,
            phi: Some(0.2),
            w: None,
        };
        let d = ScanPoint {
            nbar: 3.0,
            phi: Some(-0.1),
            w: None,
        };
        assert_eq!(ThresholdCriterion::PhaseZero.crossed(&a, &b), Some(false));
        assert_eq!(ThresholdCriterion::PhaseZero.crossed(&c, &d), Some(true));
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.1, 6.0, 60);
        assert_eq!(g.len(), 60);
        assert_eq!(g[0], 0.1);
        assert!((g[59] - 6.0).abs() < 1e-15);
    }
}
