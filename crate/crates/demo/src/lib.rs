//! Browser demo bindings. Three operations, each taking and returning JSON
//! strings so the page needs no generated TypeScript or framework glue:
//!
//! * [`tail_panel`] -- moment-estimator path over k plus the extrapolated
//!   quantile curve against the model oracle, for one simulated sample.
//! * [`region_panel`] -- a 2-d elliptical sample with the estimated, true,
//!   and max-residual quantile region boundaries.
//! * [`perturb_panel`] -- effect of multiplicative observation noise on the
//!   index/scale/quantile estimates across a grid of noise levels h.
//!
//! On error the returned JSON is `{"error": "..."}`; the page checks that
//! field. All functions are plain Rust on native targets, which is how the
//! integration tests drive them.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use evtlab_core::evt::{extreme_quantile, moment_estimates, OrderedSample, QuantileQuery};
use evtlab_core::linalg::SpdMatrix;
use evtlab_core::models::{EllipticalModel, TailModel};
use evtlab_core::regions::{estimate_region, max_region, true_region};
use evtlab_core::rng::SimRng;

/// Model declaration shared by all panels.
#[derive(Deserialize, Clone, Copy, Debug)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
enum ModelSpec {
    Pareto { alpha: f64 },
    Frechet { alpha: f64 },
    Exponential { rate: f64 },
    Bounded { endpoint: f64, gamma: f64 },
}

impl ModelSpec {
    fn build(&self) -> Result<TailModel, String> {
        let m = match *self {
            ModelSpec::Pareto { alpha } => TailModel::pareto(alpha),
            ModelSpec::Frechet { alpha } => TailModel::frechet(alpha),
            ModelSpec::Exponential { rate } => TailModel::exponential(rate),
            ModelSpec::Bounded { endpoint, gamma } => TailModel::bounded(endpoint, gamma),
        };
        m.map_err(|e| e.to_string())
    }
}

fn err_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn finish<T: Serialize>(out: &T) -> String {
    serde_json::to_string(out).unwrap_or_else(|e| err_json(&e.to_string()))
}

// ---------------------------------------------------------------------------
// tail panel
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct TailRequest {
    model: ModelSpec,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    /// k used for the quantile extrapolation curve; default floor(n^0.6).
    #[serde(default)]
    k: Option<usize>,
}

fn default_n() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}

#[derive(Serialize)]
struct TailResponse {
    true_gamma: f64,
    n: usize,
    k_used: usize,
    /// index path: one gamma_m estimate per k value
    k_values: Vec<usize>,
    gamma_m: Vec<f64>,
    gamma_plus: Vec<f64>,
    gamma_minus: Vec<f64>,
    /// quantile extrapolation at k_used over a log-spaced p grid
    p_values: Vec<f64>,
    quantile_estimates: Vec<f64>,
    quantile_truth: Vec<f64>,
    sample_max: f64,
}

fn tail_panel_impl(request: &str) -> Result<String, String> {
    let req: TailRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if !(4..=1_000_000).contains(&req.n) {
        return Err(format!("n = {} out of range [4, 1e6]", req.n));
    }
    let model = req.model.build()?;
    let mut rng = SimRng::new(req.seed);
    let sample = OrderedSample::new(model.sample(req.n, &mut rng)).map_err(|e| e.to_string())?;

    let k_max = (req.n / 2).max(3);
    let mut k_values = Vec::new();
    let mut k = 2usize;
    while k < k_max {
        k_values.push(k);
        k = ((k as f64 * 1.25) as usize).max(k + 1);
    }
    let mut gamma_m = Vec::with_capacity(k_values.len());
    let mut gamma_plus = Vec::with_capacity(k_values.len());
    let mut gamma_minus = Vec::with_capacity(k_values.len());
    for &k in &k_values {
        match moment_estimates(&sample, k) {
            Ok(est) => {
                gamma_m.push(est.gamma_m);
                gamma_plus.push(est.gamma_plus);
                gamma_minus.push(est.gamma_minus);
            }
            Err(_) => {
                gamma_m.push(f64::NAN);
                gamma_plus.push(f64::NAN);
                gamma_minus.push(f64::NAN);
            }
        }
    }

    let k_used = req
        .k
        .unwrap_or(((req.n as f64).powf(0.6) as usize).max(2))
        .clamp(2, req.n - 1);
    let mut p_values = Vec::new();
    let mut quantile_estimates = Vec::new();
    let mut quantile_truth = Vec::new();
    let p_hi = k_used as f64 / req.n as f64;
    let p_lo = 0.1 / req.n as f64;
    let steps = 40;
    for i in 0..=steps {
        let frac = i as f64 / steps as f64;
        let p = p_hi * (p_lo / p_hi).powf(frac);
        if let Ok(x) = extreme_quantile(&sample, &QuantileQuery { k: k_used, p }) {
            p_values.push(p);
            quantile_estimates.push(x);
            quantile_truth.push(model.quantile_from_tail(p));
        }
    }

    let response = TailResponse {
        true_gamma: model.gamma(),
        n: req.n,
        k_used,
        k_values,
        gamma_m,
        gamma_plus,
        gamma_minus,
        p_values,
        quantile_estimates,
        quantile_truth,
        sample_max: sample.max(),
    };
    Ok(finish(&response))
}

/// Simulate one sample and trace the index path and quantile extrapolation.
#[wasm_bindgen]
pub fn tail_panel(request: &str) -> String {
    tail_panel_impl(request).unwrap_or_else(|e| err_json(&e))
}

// ---------------------------------------------------------------------------
// region panel
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RegionRequest {
    generator: ModelSpec,
    #[serde(default = "default_region_n")]
    n: usize,
    #[serde(default)]
    mu: Option<[f64; 2]>,
    /// scatter rows [[a,b],[b,c]]; normalized to det 1 internally
    #[serde(default)]
    sigma: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    p: Option<f64>,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_max_points")]
    max_points: usize,
}

fn default_region_n() -> usize {
    2_000
}
fn default_max_points() -> usize {
    2_000
}

#[derive(Serialize)]
struct RegionResponse {
    n: usize,
    k: usize,
    p: f64,
    true_gamma: f64,
    points: Vec<[f64; 2]>,
    estimated_boundary: Vec<[f64; 2]>,
    true_boundary: Vec<[f64; 2]>,
    max_boundary: Vec<[f64; 2]>,
    estimated_radius: f64,
    true_radius: f64,
    max_radius: f64,
    center: [f64; 2],
    /// fraction of the sample falling in the estimated (tail) region
    tail_fraction: f64,
}

/// Boundary of `{x : ||x - center||_shape = radius}` as a closed polyline:
/// center + radius * shape^{1/2} (cos t, sin t).
fn ellipse_boundary(
    center: &[f64],
    shape: &SpdMatrix,
    radius: f64,
    points: usize,
) -> Vec<[f64; 2]> {
    let root = shape.sqrt();
    let root = root.as_matrix();
    (0..=points)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / points as f64;
            let dir = root
                .mul_vec(&[theta.cos(), theta.sin()])
                .expect("2-d direction");
            [center[0] + radius * dir[0], center[1] + radius * dir[1]]
        })
        .collect()
}

fn region_panel_impl(request: &str) -> Result<String, String> {
    let req: RegionRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if !(8..=200_000).contains(&req.n) {
        return Err(format!("n = {} out of range [8, 2e5]", req.n));
    }
    let generator = req.generator.build()?;
    let mu = req.mu.unwrap_or([0.0, 0.0]).to_vec();
    let sigma = match req.sigma {
        Some(rows) => SpdMatrix::new(2, vec![rows[0][0], rows[0][1], rows[1][0], rows[1][1]])
            .map_err(|e| e.to_string())?
            .det_normalized(),
        None => SpdMatrix::identity(2),
    };
    let truth = EllipticalModel::new(mu, sigma, generator).map_err(|e| e.to_string())?;

    let k = req
        .k
        .unwrap_or(((req.n as f64).powf(0.7) as usize).max(2))
        .clamp(2, req.n - 1);
    let p = req.p.unwrap_or(1.0 / req.n as f64);
    if !(p > 0.0 && p <= k as f64 / req.n as f64) {
        return Err(format!("p = {p} outside (0, k/n]"));
    }

    let mut rng = SimRng::new(req.seed);
    let data = truth.sample(req.n, &mut rng);

    let estimated = estimate_region(&data, k, p).map_err(|e| e.to_string())?;
    let oracle = true_region(&truth, p.min(truth.generator.region_p_threshold()))
        .map_err(|e| e.to_string())?;
    let maxed = max_region(&data).map_err(|e| e.to_string())?;

    let inside = data
        .iter()
        .filter(|x| estimated.contains(x).unwrap_or(false))
        .count();

    let points: Vec<[f64; 2]> = data
        .iter()
        .take(req.max_points)
        .map(|x| [x[0], x[1]])
        .collect();

    let response = RegionResponse {
        n: req.n,
        k,
        p,
        true_gamma: truth.generator.gamma(),
        points,
        estimated_boundary: ellipse_boundary(
            &estimated.center,
            &estimated.shape,
            estimated.radius,
            128,
        ),
        true_boundary: ellipse_boundary(&oracle.center, &oracle.shape, oracle.radius, 128),
        max_boundary: ellipse_boundary(&maxed.center, &maxed.shape, maxed.radius, 128),
        estimated_radius: estimated.radius,
        true_radius: oracle.radius,
        max_radius: maxed.radius,
        center: [estimated.center[0], estimated.center[1]],
        tail_fraction: inside as f64 / req.n as f64,
    };
    Ok(finish(&response))
}

/// Simulate a 2-d elliptical sample and compare the estimated extreme
/// quantile region with the oracle region.
#[wasm_bindgen]
pub fn region_panel(request: &str) -> String {
    region_panel_impl(request).unwrap_or_else(|e| err_json(&e))
}

// ---------------------------------------------------------------------------
// perturbation panel
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct PerturbRequest {
    model: ModelSpec,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    p: Option<f64>,
    #[serde(default = "default_seed")]
    seed: u64,
    /// noise levels; default is a log grid from 1e-4 to 0.3
    #[serde(default)]
    h_values: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct PerturbResponse {
    true_gamma: f64,
    n: usize,
    k: usize,
    p: f64,
    clean_gamma_m: f64,
    clean_quantile: f64,
    quantile_truth: f64,
    h_values: Vec<f64>,
    /// raw index/quantile under each noise level
    noisy_gamma_m: Vec<f64>,
    noisy_quantile: Vec<f64>,
    /// discrepancies divided by their theoretical scale z = h U(n/k)/a(n/k)
    index_err_scaled: Vec<f64>,
    quantile_err_scaled: Vec<f64>,
    z_values: Vec<f64>,
}

fn perturb_panel_impl(request: &str) -> Result<String, String> {
    let req: PerturbRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if !(16..=1_000_000).contains(&req.n) {
        return Err(format!("n = {} out of range [16, 1e6]", req.n));
    }
    let model = req.model.build()?;
    let k = req
        .k
        .unwrap_or(((req.n as f64).powf(0.5) as usize).max(2))
        .clamp(2, req.n - 1);
    let p = req.p.unwrap_or(1.0 / req.n as f64);
    if !(p > 0.0 && p <= k as f64 / req.n as f64) {
        return Err(format!("p = {p} outside (0, k/n]"));
    }
    let h_values = req.h_values.unwrap_or_else(|| {
        (0..10)
            .map(|i| 1e-4 * (0.3f64 / 1e-4).powf(i as f64 / 9.0))
            .collect()
    });
    if h_values
        .iter()
        .any(|&h| h.is_nan() || !(0.0..1.0).contains(&h))
    {
        return Err("h values must lie in [0, 1)".to_string());
    }

    let mut rng = SimRng::new(req.seed);
    let raw = model.sample(req.n, &mut rng);
    let clean = OrderedSample::new(raw.clone()).map_err(|e| e.to_string())?;
    let est0 = moment_estimates(&clean, k).map_err(|e| e.to_string())?;
    let query = QuantileQuery { k, p };
    let x0 = extreme_quantile(&clean, &query).map_err(|e| e.to_string())?;

    let t = req.n as f64 / k as f64;
    let a = model.scale(t);
    let u_over_a = model.quantile(t) / a;
    let d_n = k as f64 / (req.n as f64 * p);
    let q = evtlab_core::evt::q_gamma(model.gamma(), d_n).map_err(|e| e.to_string())?;

    let mut noisy_gamma_m = Vec::new();
    let mut noisy_quantile = Vec::new();
    let mut index_err_scaled = Vec::new();
    let mut quantile_err_scaled = Vec::new();
    let mut z_values = Vec::new();
    for (i, &h) in h_values.iter().enumerate() {
        let mut noise_rng = SimRng::new(req.seed ^ (0x9E37 + i as u64));
        let noisy: Vec<f64> = raw
            .iter()
            .map(|&y| y * (1.0 + noise_rng.range(-h, h)))
            .collect();
        let noisy = OrderedSample::new(noisy).map_err(|e| e.to_string())?;
        let z = h * u_over_a;
        z_values.push(z);
        match (
            moment_estimates(&noisy, k),
            extreme_quantile(&noisy, &query),
        ) {
            (Ok(est1), Ok(x1)) => {
                noisy_gamma_m.push(est1.gamma_m);
                noisy_quantile.push(x1);
                let d_idx = (est1.gamma_m - est0.gamma_m).abs();
                let d_q = (x1 - x0).abs();
                index_err_scaled.push(if d_idx == 0.0 { 0.0 } else { d_idx / z });
                quantile_err_scaled.push(if d_q == 0.0 { 0.0 } else { d_q / (a * q * z) });
            }
            _ => {
                noisy_gamma_m.push(f64::NAN);
                noisy_quantile.push(f64::NAN);
                index_err_scaled.push(f64::NAN);
                quantile_err_scaled.push(f64::NAN);
            }
        }
    }

    let response = PerturbResponse {
        true_gamma: model.gamma(),
        n: req.n,
        k,
        p,
        clean_gamma_m: est0.gamma_m,
        clean_quantile: x0,
        quantile_truth: model.quantile_from_tail(p),
        h_values,
        noisy_gamma_m,
        noisy_quantile,
        index_err_scaled,
        quantile_err_scaled,
        z_values,
    };
    Ok(finish(&response))
}

/// Perturb one sample multiplicatively at several noise levels and report
/// raw and theoretically-scaled estimate discrepancies.
#[wasm_bindgen]
pub fn perturb_panel(request: &str) -> String {
    perturb_panel_impl(request).unwrap_or_else(|e| err_json(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_panel_round_trip() {
        let out =
            tail_panel(r#"{"model": {"name": "pareto", "alpha": 2.0}, "n": 5000, "seed": 3}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("error").is_none(), "{out}");
        assert_eq!(v["true_gamma"], 0.5);
        assert!(v["k_values"].as_array().unwrap().len() > 10);
    }

    #[test]
    fn region_panel_errors_are_json() {
        let out = region_panel(r#"{"generator": {"name": "pareto", "alpha": -1.0}}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["error"].as_str().unwrap().contains("alpha"));
    }

    #[test]
    fn non_finite_values_serialize_as_null() {
        // the page treats nulls as curve gaps; pin the serialization
        assert_eq!(
            serde_json::to_string(&vec![f64::NAN, 1.0]).unwrap(),
            "[null,1.0]"
        );
    }
}
