//! Browser demo: bars-and-stripes images, a small training curve, and the
//! forward vs reverse Hamming-distance histograms of the emulated annealer.
//!
//! Each operation has a plain Rust form (tested natively) and a thin
//! `wasm_bindgen` export.

use rbm_anneal::annealer::{forward_sample, make_schedule, reverse_sample, EmulatorConfig, ScheduleParams};
use rbm_anneal::bas::generate_bas;
use rbm_anneal::chimera::{embed_rbm, lower_problem, HardwareGraph};
use rbm_anneal::ising::to_ising;
use rbm_anneal::rng::SeedTree;
use rbm_anneal::trainer::{init_rbm, reverse_starts, train, InitConfig, Method, TrainConfig};
use std::collections::BTreeSet;
use wasm_bindgen::prelude::*;

/// All images of the `m x m` dataset, concatenated row-major.
pub fn bas_pixels(m: usize) -> Result<Vec<u8>, String> {
    let d = generate_bas(m).map_err(|e| e.to_string())?;
    Ok(d.images.concat())
}

/// Log-likelihood after each epoch of classical training of an `m*m + n_h`
/// machine (index 0 is the initial model).
pub fn training_curve(m: usize, n_h: usize, epochs: usize, n_g: usize, seed: u64) -> Result<Vec<f64>, String> {
    if m * m > 16 || n_h > 16 {
        return Err("keep the demo machine at 16+16 or smaller".into());
    }
    let data = generate_bas(m).map_err(|e| e.to_string())?.images;
    let config = TrainConfig {
        epochs,
        eta: 0.15,
        method: Method::Classical { n_g },
        init: InitConfig::default(),
        seed,
        ll_every: 1,
        recon_every: 0,
        recon_n_g: 1,
        recon_trials: 1,
        recon_clamp: BTreeSet::new(),
        checkpoint_every: 0,
    };
    let mut curve = Vec::with_capacity(epochs + 1);
    train(&config, &data, n_h, None, None, |rec, _| {
        if let Some(ll) = rec.log_likelihood {
            curve.push(ll);
        }
    })
    .map_err(|e| e.to_string())?;
    Ok(curve)
}

/// Histograms over Hamming distance `0..=32` between each sample and its
/// start: forward runs (random starts) first, then reverse runs (dataset
/// starts), on one embedded copy of a freshly initialised 16+16 machine
/// scaled by `alpha`.
pub fn hamming_histograms(cycles: usize, alpha: f64, seed: u64) -> Result<Vec<u32>, String> {
    let run = || -> rbm_anneal::Result<Vec<u32>> {
        let tree = SeedTree::new(seed);
        let data = generate_bas(4)?.images;
        let rbm = init_rbm(16, 16, &InitConfig::default(), None, &mut tree.child(0).rng())?;
        let emb = embed_rbm(&HardwareGraph::chimera(4, 4), 16, 16, -1.0)?;
        let physical = lower_problem(&to_ising(&rbm, alpha)?, &emb)?;
        let cfg = EmulatorConfig::default();
        let mut rng = tree.child(1).rng();
        let fwd = forward_sample(&physical, &make_schedule(ScheduleParams::DEFAULT_FORWARD)?, cycles, &cfg, &mut rng)?;
        let starts = reverse_starts(&rbm, &data, cycles, &mut rng)?;
        let rev = reverse_sample(
            &physical,
            &starts,
            &make_schedule(ScheduleParams::DEFAULT_REVERSE)?,
            cycles,
            &cfg,
            &mut rng,
        )?;
        let mut hist = vec![0u32; 66];
        for s in &fwd.samples {
            hist[s.start_distance] += 1;
        }
        for s in &rev.samples {
            hist[33 + s.start_distance] += 1;
        }
        Ok(hist)
    };
    run().map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = basPixels)]
pub fn bas_pixels_js(m: usize) -> Result<Vec<u8>, JsError> {
    bas_pixels(m).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trainingCurve)]
pub fn training_curve_js(m: usize, n_h: usize, epochs: usize, n_g: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    training_curve(m, n_h, epochs, n_g, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = hammingHistograms)]
pub fn hamming_histograms_js(cycles: usize, alpha: f64, seed: u32) -> Result<Vec<u32>, JsError> {
    hamming_histograms(cycles, alpha, seed as u64).map_err(|e| JsError::new(&e))
}

/// Uniform-model log-likelihood, drawn as a reference line.
#[wasm_bindgen(js_name = uniformLogLikelihood)]
pub fn uniform_log_likelihood(m: usize) -> f64 {
    -((m * m) as f64) * std::f64::consts::LN_2
}
