//! Browser bindings for the shotnoise demo page.
//!
//! Every export returns a flat `Float64Array`; the row layout is documented on
//! the plain-Rust function it wraps. Simulations run on the calling thread.

use shotnoise::limit::{limit_covariance_matrix, sample_limit_parts};
use shotnoise::verifier::{poisson_normalized_covariance, simulate_fdd};
use shotnoise::{FddPlan, JumpLaw, KernelSpec, ResponseKernel, RngStream, Scaling};
use wasm_bindgen::prelude::*;

/// Rows of `(t, h(t), m(t), t h²(t) / m(t))` on `points` log-spaced times in
/// `[t_min, t_max]`, for a kernel given as JSON.
pub fn kernel_table(kernel_json: &str, t_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let spec: KernelSpec = serde_json::from_str(kernel_json).map_err(|e| e.to_string())?;
    let kernel = ResponseKernel::new(spec).map_err(|e| e.to_string())?;
    let lo = kernel.t_min();
    if !(t_max > lo) || points < 2 {
        return Err(format!("need t_max > {lo} and at least 2 points"));
    }
    let step = (t_max / lo).ln() / (points - 1) as f64;
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points {
        let t = lo * (step * i as f64).exp();
        let (h, m) = (kernel.h(t), kernel.m(t));
        out.extend_from_slice(&[t, h, m, t * h * h / m]);
    }
    Ok(out)
}

/// For each of `paths` draws on `points` equally spaced `u` in `[0, 1]`:
/// the row `X(u_0..u_n)` followed by the row `B(1 - u_0..u_n)`.
pub fn limit_paths(points: usize, paths: usize, seed: u32) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least 2 grid points".into());
    }
    let u: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let mut out = Vec::with_capacity(2 * points * paths);
    for p in 0..paths {
        let mut rng = RngStream::new(seed as u64, p as u64);
        let (b, d) = sample_limit_parts(&u, &mut rng).map_err(|e| e.to_string())?;
        out.extend(b.iter().zip(&d).map(|(x, y)| x + y));
        out.extend_from_slice(&b);
    }
    Ok(out)
}

/// Exponential(1) jumps, moderate kernel with ρ = 1 and `t_min` = 1,
/// `t = e^log_t`, u-grid (0, 0.5, 1). Returns three row-major 3×3 matrices:
/// the sample covariance of `Z_t`, the exact finite-t covariance and the
/// limit covariance.
pub fn covariance_experiment(log_t: f64, replications: u32, seed: u32) -> Result<Vec<f64>, String> {
    if !(log_t > 0.0 && log_t <= 12.0) {
        return Err("log t must lie in (0, 12]".into());
    }
    if replications < 10 {
        return Err("need at least 10 replications".into());
    }
    let u = vec![0.0, 0.5, 1.0];
    let kernel = ResponseKernel::moderate(1.0, Some(1.0)).map_err(|e| e.to_string())?;
    let law = JumpLaw::exponential(1.0).map_err(|e| e.to_string())?;
    let t = log_t.exp();
    let plan = FddPlan::new(law, kernel.clone(), t, u.clone(), Scaling::Inverse).map_err(|e| e.to_string())?;
    let batch = simulate_fdd(&plan, replications as u64, seed as u64, 1);
    let exact = poisson_normalized_covariance(&kernel, t, plan.grid().times());
    let mut out: Vec<f64> = batch.accumulator.covariance().concat();
    out.extend(exact.concat());
    out.extend(limit_covariance_matrix(&u).concat());
    Ok(out)
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = kernelTable)]
pub fn kernel_table_js(kernel_json: &str, t_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    kernel_table(kernel_json, t_max, points).map_err(js)
}

#[wasm_bindgen(js_name = limitPaths)]
pub fn limit_paths_js(points: usize, paths: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    limit_paths(points, paths, seed).map_err(js)
}

#[wasm_bindgen(js_name = covarianceExperiment)]
pub fn covariance_experiment_js(log_t: f64, replications: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    covariance_experiment(log_t, replications, seed).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_table_rows() {
        let rows = kernel_table(r#"{"family": "moderate", "rho": 1.0, "t_min": 1.0}"#, 9f64.exp(), 10).unwrap();
        assert_eq!(rows.len(), 40);
        let last = &rows[36..];
        assert!((last[0] - 9f64.exp()).abs() < 1e-6);
        assert!((last[2] - 10.0).abs() < 1e-9);
        assert!((last[3] - 0.1).abs() < 1e-9);
        assert!(kernel_table("{}", 10.0, 10).is_err());
        assert!(kernel_table(r#"{"family": "pure_power", "beta": 0.5}"#, 0.5, 10).is_err());
    }

    #[test]
    fn limit_paths_layout() {
        let v = limit_paths(5, 3, 1).unwrap();
        assert_eq!(v.len(), 2 * 5 * 3);
        // B(1 - 1) = 0 at the right end of every path
        for p in 0..3 {
            assert_eq!(v[p * 10 + 9], 0.0);
        }
        assert_eq!(v, limit_paths(5, 3, 1).unwrap());
    }

    #[test]
    fn covariance_experiment_shapes() {
        let v = covariance_experiment(3.0, 200, 2).unwrap();
        assert_eq!(v.len(), 27);
        assert!((v[9] - 1.0).abs() < 1e-9);
        assert_eq!(&v[18..], &[1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(covariance_experiment(20.0, 200, 2).is_err());
    }
}
