//! Browser bindings. Every export returns a flat `Float64Array`; failures
//! surface as JS exceptions carrying the library's error text.

use thermogp::analysis::{bloch_path as path_of, evaluate, linspace, ModelSpec};
use thermogp::lindblad::{model_c_trajectory, BathParams, FieldMode, ModelCParams};
use thermogp::models::{model_a_gp_closed_form, ModelAParams};
use wasm_bindgen::prelude::*;

/// Bath and drive frequency used by the demo.
const OMEGA0: f64 = 2.0;

fn js(e: thermogp::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn model_c(
    theta: f64,
    kappa: f64,
    nbar: f64,
    field: f64,
    rotating: bool,
    samples: usize,
) -> thermogp::Result<ModelCParams> {
    let p = ModelCParams {
        field,
        theta,
        bath: BathParams::new(kappa, OMEGA0, nbar)?,
        mode: if rotating {
            FieldMode::Rotating
        } else {
            FieldMode::Static
        },
        samples: Some(samples),
    };
    p.validate()?;
    Ok(p)
}

/// `[T₀, Φ₀, T₁, Φ₁, …]`; `Φ` is NaN where the closed form has a pole.
pub fn phase_vs_temperature(
    theta: f64,
    epsilon: f64,
    delta: f64,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> thermogp::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * points);
    for temperature in linspace(t_min, t_max, points) {
        let p = ModelAParams {
            theta,
            omega0: OMEGA0,
            epsilon,
            delta,
            temperature,
        };
        p.validate()?;
        let phi = match model_a_gp_closed_form(&p) {
            Ok(a) => a.value(),
            Err(thermogp::Error::Pole(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        out.extend([temperature, phi]);
    }
    Ok(out)
}

/// `[x₀, y₀, z₀, x₁, …]` over one period.
pub fn bloch_trajectory(
    theta: f64,
    kappa: f64,
    nbar: f64,
    field: f64,
    rotating: bool,
    samples: usize,
) -> thermogp::Result<Vec<f64>> {
    let p = model_c(theta, kappa, nbar, field, rotating, samples)?;
    let path = path_of(&model_c_trajectory(&p)?)?;
    Ok(path.iter().flat_map(|b| [b.x, b.y, b.z]).collect())
}

/// `[n̄₀, Φ₀, W₀, n̄₁, …]`; Φ and W are NaN where branch tracking fails.
pub fn phase_vs_nbar(
    theta: f64,
    kappa: f64,
    field: f64,
    rotating: bool,
    nbar_max: f64,
    points: usize,
    samples: usize,
) -> thermogp::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(3 * points);
    for nbar in linspace(0.0, nbar_max, points) {
        let params = model_c(theta, kappa, nbar, field, rotating, samples)?;
        let e = evaluate(&ModelSpec::ModelC { params })?;
        out.extend([nbar, e.phi.unwrap_or(f64::NAN), e.w.unwrap_or(f64::NAN)]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn model_a_curve(
    theta: f64,
    epsilon: f64,
    delta: f64,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    phase_vs_temperature(theta, epsilon, delta, t_min, t_max, points).map_err(js)
}

#[wasm_bindgen]
pub fn bloch_path(
    theta: f64,
    kappa: f64,
    nbar: f64,
    field: f64,
    rotating: bool,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    bloch_trajectory(theta, kappa, nbar, field, rotating, samples).map_err(js)
}

#[wasm_bindgen]
pub fn gp_vs_nbar(
    theta: f64,
    kappa: f64,
    field: f64,
    rotating: bool,
    nbar_max: f64,
    points: usize,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    phase_vs_nbar(theta, kappa, field, rotating, nbar_max, points, samples).map_err(js)
}
