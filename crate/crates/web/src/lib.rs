//! Browser demo: three small operations on a one-dimensional dyadic mesh, returned as JSON.
//!
//! The functions are plain Rust so they build and test natively; the `wasm32` build adds
//! `wasm-bindgen` exports with the same names.

use qbfs::constants::muckenhoupt_space_constant;
use qbfs::dyadic::{cz_stopping_cubes, GridFunction, Mesh};
use qbfs::operators::{maximal_bound, rdf_majorant, OperatorSpec};
use qbfs::search::SearchOptions;
use qbfs::spaces::SpaceSpec;
use qbfs::verify::instances::power_weight;
use serde_json::json;

const MAX_DEPTH: u32 = 10;

fn mesh_for(values: &[f64]) -> Result<Mesh, String> {
    let n = values.len();
    if n == 0 || !n.is_power_of_two() || n.trailing_zeros() > MAX_DEPTH {
        return Err(format!("need 2^L values with L <= {MAX_DEPTH}, got {n}"));
    }
    Mesh::new(1, n.trailing_zeros()).map_err(|e| e.to_string())
}

fn grid(values: &[f64]) -> Result<GridFunction, String> {
    GridFunction::new(mesh_for(values)?, values.to_vec()).map_err(|e| e.to_string())
}

/// Dyadic maximal function of `values` and the Calderón–Zygmund cubes at height `lambda`.
pub fn maximal_and_cz(values: &[f64], lambda: f64) -> Result<String, String> {
    let f = grid(values)?;
    let m = OperatorSpec::DyadicMaximal.apply(&f).map_err(|e| e.to_string())?;
    let cubes = cz_stopping_cubes(&f, lambda).map_err(|e| e.to_string())?;
    let cubes: Vec<_> = cubes.iter().map(|q| json!({ "level": q.level(), "start": q.cells().start, "end": q.cells().end })).collect();
    Ok(json!({ "maximal": m.values(), "cubes": cubes }).to_string())
}

/// `[X]_A` of the weighted Morrey space `M^{p,q}_w`, `w(x) = |x|^alpha`, for depths `1..=max_depth`.
pub fn morrey_constants(p: f64, q: f64, alpha: f64, max_depth: u32) -> Result<String, String> {
    if max_depth == 0 || max_depth > MAX_DEPTH {
        return Err(format!("depth must lie in 1..={MAX_DEPTH}"));
    }
    let mut rows = Vec::new();
    for l in 1..=max_depth {
        let mesh = Mesh::new(1, l).map_err(|e| e.to_string())?;
        let w = power_weight(mesh, alpha).map_err(|e| e.to_string())?;
        let x = SpaceSpec::morrey(p, q, w).map_err(|e| e.to_string())?;
        let r = muckenhoupt_space_constant(&x).map_err(|e| e.to_string())?;
        rows.push(json!({ "depth": l, "value": r.value, "certification": r.certification }));
    }
    Ok(json!({ "rows": rows }).to_string())
}

/// Rubio de Francia majorant of `values` in `L^p`, truncated when the tail drops below `tol`.
pub fn rubio_de_francia(values: &[f64], p: f64, tol: f64) -> Result<String, String> {
    let f = grid(values)?;
    let x = SpaceSpec::lebesgue(f.mesh(), p);
    let bound = maximal_bound(&x, &SearchOptions::default()).map_err(|e| e.to_string())?;
    let r = rdf_majorant(&x, &f, bound, tol, 500).map_err(|e| e.to_string())?;
    Ok(json!({
        "w": r.w.values(),
        "iterations": r.iterations,
        "tail": r.tail,
        "norm_ratio": r.norm_ratio,
        "a1_constant": r.a1_constant,
        "a1_target": r.a1_target,
        "bound": r.bound.value,
    })
    .to_string())
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    #[wasm_bindgen(js_name = maximalAndCz)]
    pub fn maximal_and_cz(values: &[f64], lambda: f64) -> Result<String, JsValue> {
        super::maximal_and_cz(values, lambda).map_err(|e| JsValue::from_str(&e))
    }

    #[wasm_bindgen(js_name = morreyConstants)]
    pub fn morrey_constants(p: f64, q: f64, alpha: f64, max_depth: u32) -> Result<String, JsValue> {
        super::morrey_constants(p, q, alpha, max_depth).map_err(|e| JsValue::from_str(&e))
    }

    #[wasm_bindgen(js_name = rubioDeFrancia)]
    pub fn rubio_de_francia(values: &[f64], p: f64, tol: f64) -> Result<String, JsValue> {
        super::rubio_de_francia(values, p, tol).map_err(|e| JsValue::from_str(&e))
    }
}
