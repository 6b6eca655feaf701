//! Browser bindings for the demo page in `www/`. Results cross the
//! boundary as JSON strings.

use cartanflow::dynamics::{integrate_reduced, sample_generic_start, uniform_grid};
use cartanflow::reduction::reduce;
use cartanflow::sampling::{histogram_rows, radial_histogram, RadialTheory};
use cartanflow::{make_space, Kind, SpaceDescriptor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Kept small so a page interaction stays responsive.
const MAX_SAMPLES: u32 = 200_000;
const MAX_STEPS: u32 = 20_000;

fn space(class: &str, m: u32, n: u32) -> Result<SpaceDescriptor, String> {
    let kind: Kind = class.parse().map_err(|e: cartanflow::Error| e.to_string())?;
    make_space(kind, m as usize, n as usize).map_err(|e| e.to_string())
}

/// Cartan data of one class.
#[wasm_bindgen]
pub fn space_summary(class: &str, m: u32, n: u32) -> Result<String, String> {
    let s = space(class, m, n)?;
    serde_json::to_string(&s.summary()).map_err(|e| e.to_string())
}

/// Histogram of `q_1` for Gaussian samples with the bin-averaged
/// theoretical density (null where it is not available).
#[wasm_bindgen]
pub fn q1_histogram(class: &str, m: u32, n: u32, count: u32, bins: u32, seed: u32) -> Result<String, String> {
    let s = space(class, m, n)?;
    if count > MAX_SAMPLES {
        return Err(format!("at most {MAX_SAMPLES} samples in the browser"));
    }
    let hist = radial_histogram(&s, count as u64, bins as usize, seed as u64, 1).map_err(|e| e.to_string())?;
    let theory = RadialTheory::new(&s).ok();
    let rows = histogram_rows(&hist, theory.as_ref()).map_err(|e| e.to_string())?;
    let rows: Vec<_> = rows.into_iter().filter(|r| r.coord == 0).collect();
    Ok(json!({
        "label": s.label(),
        "count": count,
        "lo": rows.iter().map(|r| r.bin_lo).collect::<Vec<_>>(),
        "hi": rows.iter().map(|r| r.bin_hi).collect::<Vec<_>>(),
        "empirical": rows.iter().map(|r| r.empirical_density).collect::<Vec<_>>(),
        "theoretical": rows.iter().map(|r| r.theoretical_density).collect::<Vec<_>>(),
    })
    .to_string())
}

/// Radial coordinates along the reduced flow from a random start.
#[wasm_bindgen]
pub fn level_flow(class: &str, m: u32, n: u32, seed: u32, t_max: f64, steps: u32) -> Result<String, String> {
    let s = space(class, m, n)?;
    if steps == 0 || steps > MAX_STEPS || !(t_max > 0.0 && t_max.is_finite()) {
        return Err(format!("need 0 < steps <= {MAX_STEPS} and t_max > 0"));
    }
    let grid = uniform_grid(t_max, steps as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let start = sample_generic_start(&s, &mut rng, &grid, 1e-3).map_err(|e| e.to_string())?;
    let (state, _) = reduce(&s, &start.x, &start.y).map_err(|e| e.to_string())?;
    let traj = integrate_reduced(&s, &state, t_max, steps as usize).map_err(|e| e.to_string())?;
    Ok(json!({
        "label": s.label(),
        "times": traj.times,
        "q": traj.q,
        "energy": traj.energy,
        "abort": traj.abort,
    })
    .to_string())
}
