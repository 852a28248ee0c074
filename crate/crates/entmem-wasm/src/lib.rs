//! Browser bindings for the simulator. Three operations back the demo page:
//! the storage and retrieval curves, a sampled interference fringe, and the
//! source-to-memory concurrence chain. Each takes plain numbers from the page
//! and returns a serialized result object.
//!
//! Build for the web with
//! `wasm-pack build crates/entmem-wasm --target web --out-dir www/pkg`
//! and serve `crates/entmem-wasm/www/`.

use entmem::config::{ExperimentConfig, Fidelity};
use entmem::scenario::{run_stage, scan_phases, simulate_storage, Stage};
use entmem::tomography::transfer_ratio;
use entmem::Error;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn err_js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Reduced grid for interactive latency; converged to a few 1e-4 in eta_r
/// relative to the production grid.
fn demo_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.nz = 60;
    cfg.grid.dt_ns = 0.5;
    cfg
}

#[derive(Serialize)]
struct StorageCurves {
    t_ns: Vec<f64>,
    /// Input photon flux at the cell face, 1/s.
    input: Vec<f64>,
    /// Transmitted plus retrieved flux at the exit face, 1/s.
    output: Vec<f64>,
    /// Control field relative to its plateau value, 0..1.
    control: Vec<f64>,
    /// Collective spin excitation stored in the cell.
    spin: Vec<f64>,
    eta_r: f64,
    leakage: f64,
    loss: f64,
}

/// Solves the pulse propagation at the given control power and storage time.
#[wasm_bindgen]
pub fn storage_curves(
    omega0_mhz: f64,
    tau_storage_us: f64,
    optical_depth: f64,
) -> Result<JsValue, JsValue> {
    let mut cfg = demo_config();
    cfg.control.omega0_mhz = omega0_mhz;
    cfg.memory.tau_storage_us = tau_storage_us;
    cfg.medium.optical_depth = optical_depth;
    let run = simulate_storage(&cfg).map_err(err_js)?;

    let sol = &run.solution;
    let stride = (sol.t.len() / 700).max(1);
    let mut t_ns = Vec::new();
    let mut input = Vec::new();
    let mut output = Vec::new();
    let mut control = Vec::new();
    let mut spin = Vec::new();
    let waveform = &sol.control;
    for i in (0..sol.t.len()).step_by(stride) {
        t_ns.push(sol.t[i] * 1e9);
        input.push(sol.input_density[i]);
        output.push(sol.output_density[i]);
        control.push(waveform.value(sol.t[i]) / waveform.omega0);
        spin.push(sol.spin_number[i]);
    }
    serde_wasm_bindgen::to_value(&StorageCurves {
        t_ns,
        input,
        output,
        control,
        spin,
        eta_r: run.efficiencies.retrieved,
        leakage: run.efficiencies.leakage,
        loss: run.efficiencies.loss,
    })
    .map_err(|e| JsValue::from_str(&e.to_string()))
}

#[derive(Serialize)]
struct FringeDemo {
    phases: Vec<f64>,
    /// Observed single-click fraction at detector 1 per phase point.
    observed: Vec<f64>,
    /// Binomial standard error of each observed point.
    sigma: Vec<f64>,
    /// Exact probability at the same settings.
    expected: Vec<f64>,
    visibility: f64,
    visibility_sigma: f64,
    phase_offset: f64,
    concurrence: f64,
    concurrence_sigma: f64,
}

/// Scans the analyzer phase at one stage with a finite herald budget.
#[wasm_bindgen]
pub fn fringe_demo(stage: &str, heralds_per_point: u32, seed: u32) -> Result<JsValue, JsValue> {
    let stage = match stage {
        "in" => Stage::In,
        "out" => Stage::Out,
        other => return Err(JsValue::from_str(&format!("unknown stage {other:?}"))),
    };
    let mut cfg = demo_config();
    cfg.fringe.n_points = 64;
    cfg.fringe.heralds_in = u64::from(heralds_per_point);
    cfg.fringe.heralds_out = u64::from(heralds_per_point);
    cfg.run.master_seed = u64::from(seed);
    cfg.run.fidelity = Fidelity::Sampled;
    let sampled = run_stage(&cfg, stage).map_err(err_js)?;
    cfg.run.fidelity = Fidelity::Analytic;
    let exact = run_stage(&cfg, stage).map_err(err_js)?;

    let phases = scan_phases(cfg.fringe.n_points);
    let observed: Vec<f64> = sampled
        .rows
        .iter()
        .map(|r| r.n_d1 as f64 / r.n_trials as f64)
        .collect();
    let sigma: Vec<f64> = observed
        .iter()
        .map(|&p| (p * (1.0 - p) / f64::from(heralds_per_point)).sqrt())
        .collect();
    let expected: Vec<f64> = exact.exact.iter().map(|(_, c)| c.d1_only).collect();

    serde_wasm_bindgen::to_value(&FringeDemo {
        phases,
        observed,
        sigma,
        expected,
        visibility: sampled.visibility.visibility,
        visibility_sigma: sampled.visibility.sigma,
        phase_offset: sampled.visibility.phase_offset,
        concurrence: sampled.concurrence,
        concurrence_sigma: sampled.concurrence_sigma,
    })
    .map_err(|e| JsValue::from_str(&e.to_string()))
}

#[derive(Serialize)]
struct ChainDemo {
    v_in: f64,
    c_in: f64,
    v_out: f64,
    c_out: f64,
    lambda: f64,
    p01_in: f64,
    p11_in: f64,
    p01_out: f64,
    p11_out: f64,
}

/// Evaluates the corrected-state chain from source to retrieved output.
#[wasm_bindgen]
pub fn chain_demo(p1_at_face: f64, visibility: f64, eta_r: f64) -> Result<JsValue, JsValue> {
    let mut cfg = demo_config();
    cfg.source.p1_at_face = p1_at_face;
    cfg.source.visibility = visibility;
    cfg.memory.eta_r = eta_r;
    cfg.run.fidelity = Fidelity::Analytic;
    let s_in = run_stage(&cfg, Stage::In).map_err(err_js)?;
    let s_out = run_stage(&cfg, Stage::Out).map_err(err_js)?;
    let (lambda, _) = transfer_ratio(
        s_out.concurrence,
        s_out.concurrence_sigma,
        s_in.concurrence,
        s_in.concurrence_sigma,
    )
    .map_err(err_js)?;

    serde_wasm_bindgen::to_value(&ChainDemo {
        v_in: s_in.visibility.visibility,
        c_in: s_in.concurrence,
        v_out: s_out.visibility.visibility,
        c_out: s_out.concurrence,
        lambda,
        p01_in: s_in.rho.p01,
        p11_in: s_in.rho.p11,
        p01_out: s_out.rho.p01,
        p11_out: s_out.rho.p11,
    })
    .map_err(|e| JsValue::from_str(&e.to_string()))
}
