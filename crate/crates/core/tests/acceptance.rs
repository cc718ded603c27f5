//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use thermogp::analysis::{
    bloch_path, evaluate, linspace, sweep, threshold_nbar_ad, Axis, ModelSpec, SweepOptions,
    ThresholdCriterion, ThresholdOptions,
};
use thermogp::gp::{
    enclosed_solid_angle, gp_kinematic, gp_unitary_closed_form, spectral_path, wrap_angle, Angle,
    SpectralPath,
};
use thermogp::lindblad::{
    model_c_trajectory, propagate_analytic, propagate_rk4, rk4_min_steps, BathParams, FieldMode, ModelCParams,
};
use thermogp::models::{
    model_a_gp_closed_form, model_a_trajectory, model_b_pure_phases, model_b_reduced_bp,
    model_b_schmidt_drift, ModelAParams, ModelBParams,
};
use thermogp::qmat::{density_from_bloch, BlochVector, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rotating(theta: f64, kappa: f64, nbar: f64) -> ModelCParams {
    ModelCParams {
        field: 1e3,
        theta,
        bath: BathParams::new(kappa, 2.0, nbar).unwrap(),
        mode: FieldMode::Rotating,
        samples: None,
    }
}

fn static_field(theta: f64, kappa: f64, nbar: f64) -> ModelCParams {
    ModelCParams {
        field: 2.0,
        theta,
        bath: BathParams::new(kappa, 2.0, nbar).unwrap(),
        mode: FieldMode::Static,
        samples: None,
    }
}

fn model_a(theta: f64, epsilon: f64, delta: f64, temperature: f64) -> ModelAParams {
    ModelAParams {
        theta,
        omega0: 1.0,
        epsilon,
        delta,
        temperature,
    }
}

fn model_b(theta: f64, epsilon: f64, temperature: f64) -> ModelBParams {
    ModelBParams {
        kappa: 2.0,
        theta,
        omega0: 1.0,
        field: 2.0,
        epsilon,
        temperature,
        branch: 1,
    }
}

fn random_model_a(rng: &mut StdRng) -> ModelAParams {
    loop {
        let theta = rng.gen_range(0.05..PI - 0.05);
        if (theta.cos().abs() - 0.5).abs() < 0.02 {
            continue;
        }
        return model_a(
            theta,
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.1..3.0),
            rng.gen_range(0.05..10.0),
        );
    }
}

fn criterion_1() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for _ in 0..20 {
        let p = random_model_a(&mut rng);
        let closed = model_a_gp_closed_form(&p).unwrap();
        match model_a_trajectory(&p, 2000).and_then(|t| gp_kinematic(&spectral_path(&t)?)) {
            Ok(k) => worst = worst.max(k.distance(closed)),
            Err(e) => failures.push(format!("{p:?}: {e}")),
        }
    }
    outcome(
        failures.is_empty() && worst < 1e-5,
        format!(
            "max |Δ| = {worst:.2e} over 20 tuples (tol 1e-5){}",
            failures.join("; ")
        ),
    )
}

fn criterion_2() -> Outcome {
    let spec = ModelSpec::model_a(model_a(FRAC_PI_2, 1.0 / 3.0, 1.0, 1.0));
    let grid = linspace(0.1, 10.0, 100);
    let res = sweep(&spec, Axis::Temperature, &grid, SweepOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for r in &res.records {
        match r.phi {
            Some(phi) => worst = worst.max(Angle::new(phi).distance(Angle::new(PI))),
            None => missing += 1,
        }
    }
    outcome(
        missing == 0 && worst < 1e-9,
        format!("max |Φ − π| = {worst:.2e} over 100 temperatures, {missing} missing (tol 1e-9)"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for theta in [FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4] {
        let traj = model_c_trajectory(&rotating(theta, 0.0, 0.0)).unwrap();
        let path = bloch_path(&traj).unwrap();
        let omega = enclosed_solid_angle(&path).unwrap();
        let r = path[0].norm();
        let expect = gp_unitary_closed_form(r, omega).unwrap().angle;
        let got = gp_kinematic(&spectral_path(&traj).unwrap()).unwrap();
        let d = got.distance(expect);
        worst = worst.max(d);
        parts.push(format!("θ={theta:.4}: {d:.2e}"));
    }
    outcome(worst < 1e-3, format!("{} (tol 1e-3)", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let tau = PI;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let b = loop {
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            if v.iter().map(|x: &f64| x * x).sum::<f64>() <= 1.0 {
                break BlochVector::new(v[0], v[1], v[2]).unwrap();
            }
        };
        let rho = density_from_bloch(&b).unwrap();
        let h = rng.gen_range(0.1..500.0);
        let bath = BathParams::new(rng.gen_range(0.0..0.05), 2.0, rng.gen_range(0.0..80.0)).unwrap();
        for t in [0.1 * tau, tau] {
            let rate = 2.0 * h + bath.decay_rate();
            let steps = rk4_min_steps(t, h, &bath).max((rate * t / 2e-3).ceil() as usize);
            let exact = propagate_analytic(&rho, t, h, &bath).unwrap();
            let numeric = propagate_rk4(&rho, t, h, &bath, steps).unwrap();
            worst = worst.max(exact.mat().max_abs_diff(numeric.mat()));
        }
    }
    outcome(
        worst < 1e-8,
        format!("max elementwise |Δ| = {worst:.2e} over 100 runs (tol 1e-8)"),
    )
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    let rho = density_from_bloch(&BlochVector::new(0.3, -0.2, 0.9).unwrap()).unwrap();
    for (kappa, nbar) in [(0.05, 0.0), (0.05, 2.0), (0.01, 20.0), (0.001, 80.0)] {
        let bath = BathParams::new(kappa, 2.0, nbar).unwrap();
        let target = nbar / (2.0 * nbar + 1.0);
        let t = 40.0 / bath.decay_rate();
        let late = propagate_analytic(&rho, t, 3.0, &bath).unwrap();
        worst = worst.max((late.mat().get(0, 0).re - target).abs());
    }
    // Independent check: integrate the generator itself to late time.
    let bath = BathParams::new(0.05, 2.0, 2.0).unwrap();
    let t = 30.0 / bath.decay_rate();
    let steps = rk4_min_steps(t, 1.0, &bath) * 4;
    let late = propagate_rk4(&rho, t, 1.0, &bath, steps).unwrap();
    let rk_gap = (late.mat().get(0, 0).re - 0.4).abs();
    worst = worst.max(rk_gap);
    outcome(
        worst < 1e-8,
        format!("max |ρ̃₁₁ − n̄/(2n̄+1)| = {worst:.2e} (RK4 {rk_gap:.2e}; tol 1e-8)"),
    )
}

fn bundled_trajectories() -> Vec<(&'static str, thermogp::gp::Trajectory)> {
    vec![
        (
            "model A fig1",
            model_a_trajectory(&model_a(1.0, 1.0 / 3.0, 1.0, 1.0), 2000).unwrap(),
        ),
        (
            "model A θ=2",
            model_a_trajectory(&model_a(2.0, 1.0 / 3.0, 1.0, 2.0), 2000).unwrap(),
        ),
        (
            "static fig4a",
            model_c_trajectory(&static_field(FRAC_PI_2, 0.05, 5.0)).unwrap(),
        ),
        (
            "static fig4b",
            model_c_trajectory(&static_field(3.0 * FRAC_PI_4, 0.1, 5.0)).unwrap(),
        ),
        (
            "rotating fig5",
            model_c_trajectory(&rotating(FRAC_PI_2, 0.01, 10.0)).unwrap(),
        ),
        (
            "rotating fig6",
            model_c_trajectory(&rotating(FRAC_PI_4, 0.001, 10.0)).unwrap(),
        ),
        (
            "rotating fig7a",
            model_c_trajectory(&rotating(FRAC_PI_4, 0.005, 40.0)).unwrap(),
        ),
    ]
}

fn rephase(path: &SpectralPath, rng: &mut StdRng) -> SpectralPath {
    let mut out = path.clone();
    for branch in &mut out.vectors {
        for v in branch.iter_mut() {
            let phase = C64::from_polar(1.0, rng.gen_range(-PI..PI));
            for c in v.iter_mut() {
                *c *= phase;
            }
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for (_, traj) in bundled_trajectories() {
        let path = spectral_path(&traj).unwrap();
        let base = gp_kinematic(&path).unwrap();
        for _ in 0..3 {
            worst = worst.max(gp_kinematic(&rephase(&path, &mut rng)).unwrap().distance(base));
        }
    }
    outcome(
        worst < 1e-9,
        format!("max |ΔΦ| = {worst:.2e} over 7 trajectories × 3 gauges (tol 1e-9)"),
    )
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for j in 1..=4 {
        let r = model_b_pure_phases(2.0, FRAC_PI_4, j, 2000).unwrap();
        let gap = Angle::new(r.first + r.second).distance(Angle::new(r.composite));
        worst = worst.max(gap);
        parts.push(format!("j={j}: {gap:.1e}"));
    }
    outcome(worst < 1e-5, format!("{} (tol 1e-5)", parts.join(", ")))
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    for kappa in [0.5, 2.0] {
        for theta in [FRAC_PI_4, PI / 3.0] {
            for j in 1..=4 {
                worst = worst.max(model_b_schmidt_drift(kappa, theta, j, 2000).unwrap());
            }
        }
    }
    outcome(
        worst < 1e-9,
        format!("max |p_α(t) − p_α(0)| = {worst:.2e} (tol 1e-9)"),
    )
}

fn criterion_9() -> Outcome {
    let eps = [0.0, 0.1, 0.3, 0.5];
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [1.0, 3.0] {
        let phis: Vec<f64> = eps
            .iter()
            .map(|&e| {
                model_b_reduced_bp(&model_b(FRAC_PI_4, e, t), 2000)
                    .unwrap()
                    .phase
                    .value()
            })
            .collect();
        // Φ is an angle: compare successive values by their wrapped difference.
        let steps: Vec<f64> = phis.windows(2).map(|w| wrap_angle(w[1] - w[0])).collect();
        pass &= steps.iter().all(|d| *d <= 0.0);
        parts.push(format!(
            "T={t}: Φ = [{}]",
            phis.iter()
                .map(|p| format!("{p:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    outcome(pass, parts.join("; "))
}

fn first_phase_zero(records: &[(f64, Option<f64>)]) -> Option<usize> {
    let mut last: Option<f64> = None;
    for (i, (_, phi)) in records.iter().enumerate() {
        let Some(phi) = *phi else { continue };
        if let Some(prev) = last {
            if (prev < 0.0) != (phi < 0.0) && (phi - prev).abs() < PI {
                return Some(i);
            }
        }
        last = Some(phi);
    }
    None
}

fn criterion_10() -> Outcome {
    let spec = ModelSpec::ModelC {
        params: rotating(FRAC_PI_4, 5e-3, 0.0),
    };
    let grid: Vec<f64> = (0..=400).map(|i| 0.25 * i as f64).collect();
    let res = sweep(
        &spec,
        Axis::Nbar,
        &grid,
        SweepOptions {
            check_convergence: false,
        },
    )
    .unwrap();
    let w_idx = res.records.iter().position(|r| r.w.is_some_and(|w| w < 0.05));
    let phi_idx = first_phase_zero(&res.records.iter().map(|r| (r.value, r.phi)).collect::<Vec<_>>());
    let coincide = match (w_idx, phi_idx) {
        (Some(a), Some(b)) => a.abs_diff(b) <= 2,
        _ => false,
    };
    let at = |i: Option<usize>| i.map_or("none".to_string(), |i| format!("{:.2}", grid[i]));

    let opts = ThresholdOptions {
        nbar_max: 400.0,
        ..ThresholdOptions::default()
    };
    let mut nads = Vec::new();
    for kappa in [2e-3, 5e-3, 1e-2] {
        let r = threshold_nbar_ad(
            &rotating(FRAC_PI_4, kappa, 0.0),
            ThresholdCriterion::default(),
            opts,
        )
        .unwrap();
        nads.push(r.nbar_ad);
    }
    let decreasing =
        nads.iter().all(Option::is_some) && nads.windows(2).all(|w| w[1].unwrap() < w[0].unwrap());
    let gap = match (w_idx, phi_idx) {
        (Some(a), Some(b)) => format!("{} steps", a.abs_diff(b)),
        _ => "n/a".into(),
    };
    outcome(
        coincide && decreasing,
        format!(
            "W<0.05 first at n̄={}, Φ crosses 0 first at n̄={} ({gap}, tol 2 steps of 0.25); \
             n̄_ad(κ=2e-3, 5e-3, 1e-2) = [{}] strictly decreasing: {decreasing}",
            at(w_idx),
            at(phi_idx),
            nads.iter()
                .map(|n| n.map_or("none".into(), |v| format!("{v:.3}")))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn criterion_11() -> Outcome {
    let radii: Vec<f64> = [0.0, 1.0, 5.0, 10.0, 20.0, 80.0]
        .iter()
        .map(|&n| {
            let traj = model_c_trajectory(&rotating(FRAC_PI_2, 1e-2, n)).unwrap();
            bloch_path(&traj).unwrap().last().unwrap().norm()
        })
        .collect();
    let pass = radii.windows(2).all(|w| w[1] < w[0]);
    outcome(
        pass,
        format!(
            "final radii [{}]",
            radii
                .iter()
                .map(|r| format!("{r:.5}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn doubling_change(spec: &ModelSpec, m: usize) -> f64 {
    let with = |m: usize| -> ModelSpec {
        match *spec {
            ModelSpec::ModelA { params, .. } => ModelSpec::ModelA { params, segments: m },
            ModelSpec::ModelB { params, .. } => ModelSpec::ModelB { params, segments: m },
            ModelSpec::ModelC { params } => ModelSpec::ModelC {
                params: ModelCParams {
                    samples: Some(m),
                    ..params
                },
            },
        }
    };
    let a = evaluate(&with(m)).unwrap().phi.unwrap();
    let b = evaluate(&with(2 * m)).unwrap().phi.unwrap();
    Angle::new(a).distance(Angle::new(b))
}

fn criterion_12() -> Outcome {
    let mut specs: Vec<(ModelSpec, usize)> = Vec::new();
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..20 {
        specs.push((ModelSpec::model_a(random_model_a(&mut rng)), 2000));
    }
    for t in [0.5, 1.0, 3.0] {
        for e in [0.1, 0.3] {
            specs.push((ModelSpec::model_b(model_b(FRAC_PI_4, e, t)), 2000));
        }
    }
    for n in [0.0, 5.0, 10.0, 20.0] {
        for p in [
            static_field(FRAC_PI_2, 0.05, n),
            static_field(3.0 * FRAC_PI_4, 0.1, n),
        ] {
            specs.push((ModelSpec::ModelC { params: p }, p.default_segments().unwrap()));
        }
        let p = rotating(FRAC_PI_4, 1e-3, n);
        specs.push((ModelSpec::ModelC { params: p }, p.default_segments().unwrap()));
    }
    for n in [0.0, 20.0, 40.0, 60.0] {
        let p = rotating(FRAC_PI_4, 5e-3, n);
        specs.push((ModelSpec::ModelC { params: p }, p.default_segments().unwrap()));
    }
    let worst = specs
        .iter()
        .map(|(s, m)| doubling_change(s, *m))
        .fold(0.0, f64::max);

    // RK4 observed order on a smooth case.
    let rho = density_from_bloch(&BlochVector::new(0.4, 0.3, 0.5).unwrap()).unwrap();
    let bath = BathParams::new(0.05, 2.0, 2.0).unwrap();
    let (t, h) = (2.0, 1.0);
    let exact = propagate_analytic(&rho, t, h, &bath).unwrap();
    let errs: Vec<f64> = [400usize, 800, 1600]
        .iter()
        .map(|&n| {
            propagate_rk4(&rho, t, h, &bath, n)
                .unwrap()
                .mat()
                .max_abs_diff(exact.mat())
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        worst < 1e-5 && min_order >= 3.8,
        format!(
            "max |Φ(2M) − Φ(M)| = {worst:.2e} over {} points (tol 1e-5); RK4 orders [{}] (min 3.8)",
            specs.len(),
            orders
                .iter()
                .map(|o| format!("{o:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("closed-form vs kinematic phase, model A", criterion_1),
        ("flat line at θ = π/2", criterion_2),
        ("unitary limit vs solid-angle closed form", criterion_3),
        ("analytic vs RK4 master-equation solution", criterion_4),
        ("Gibbs fixed point", criterion_5),
        ("gauge invariance", criterion_6),
        ("composite Berry phase sum rule", criterion_7),
        ("Schmidt coefficients constant", criterion_8),
        ("reduced Berry phase non-increasing in ε", criterion_9),
        ("overlap / phase threshold coincidence and κ trend", criterion_10),
        ("Bloch radius shrinks with n̄", criterion_11),
        ("convergence in M and RK4 order", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
