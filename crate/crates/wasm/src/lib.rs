//! Browser bindings for the interactive demo page: monotone halting-mass
//! curves, measurement histograms with reproducible sampling, and
//! information-content bounds, all computed by the exact core and shipped
//! to the page as JSON (exact rationals plus float images for plotting).

use std::sync::{Mutex, OnceLock};

use num_traits::ToPrimitive;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use opait_core::dovetail::DovetailState;
use opait_core::hhat::hhat_upper;
use opait_core::machine::{Enumerator, Vm, Word};
use opait_core::rational::{pow2, rat, ratio_to_string};
use opait_core::semipovm::{
    measurement_distribution, projective_stream, sample_batch, MeasurementOutcome,
};
use opait_core::StateVector;

fn shared_dovetail() -> &'static Mutex<DovetailState> {
    static DT: OnceLock<Mutex<DovetailState>> = OnceLock::new();
    DT.get_or_init(|| Mutex::new(DovetailState::new()))
}

fn shared_enumerator() -> &'static Enumerator {
    static E: OnceLock<Enumerator> = OnceLock::new();
    E.get_or_init(|| Enumerator::new(Box::new(Vm)))
}

/// Preset states the page can select: `0` is the (3/5, 4/5) superposition,
/// `k >= 1` the basis vector `e_k`.
fn preset_state(choice: u32) -> StateVector {
    if choice == 0 {
        StateVector::from_reals(&[rat(3, 5), rat(4, 5)]).expect("exact preset")
    } else {
        StateVector::basis(choice as usize)
    }
}

/// Halting-mass lower bounds of the built-in machine together with the
/// quadratic form of the operator-level bound in the chosen state:
/// `[{n, omega, omega_f64, omega_hat, omega_hat_f64}]`.
#[wasm_bindgen]
pub fn mass_curves(stages: u32, window: u32, state_choice: u32) -> String {
    let stages = stages.clamp(1, 18) as u64;
    let window = window.clamp(1, 24) as u64;
    let x = preset_state(state_choice);
    let enumerator = shared_enumerator();
    let mut dt = shared_dovetail().lock().unwrap();
    let mut rows = Vec::new();
    for n in 1..=stages {
        let omega = enumerator.omega_lower(n);
        let omega_hat = dt.omega_hat_lower(n, window).quad_form(&x);
        rows.push(json!({
            "n": n,
            "omega": ratio_to_string(&omega),
            "omega_f64": omega.to_f64(),
            "omega_hat": ratio_to_string(&omega_hat),
            "omega_hat_f64": omega_hat.to_f64(),
        }));
    }
    Value::Array(rows).to_string()
}

/// Outcome distribution of the projective measurement at a stage, with a
/// reproducible sampled histogram:
/// `{outcomes: [{s_bits, p, p_f64, count}], residual, residual_count}`.
#[wasm_bindgen]
pub fn measurement_histogram(
    stage: u32,
    window: u32,
    state_choice: u32,
    seed: u32,
    draws: u32,
) -> String {
    let stage = stage.clamp(1, 16) as u64;
    let window = window.clamp(1, 16) as u64;
    let draws = draws.clamp(1, 200_000) as u64;
    let x = preset_state(state_choice);
    let stream = projective_stream();
    let dist = measurement_distribution(&stream, stage, &x, window);
    let batch = sample_batch(&dist, seed as u64, draws);
    let mut outcomes = Vec::new();
    for (s, p) in &dist.outcomes {
        let bits = Word::from_index(*s).to_string();
        let count = batch
            .iter()
            .filter(|o| matches!(o, MeasurementOutcome::String(w) if w.index() == *s))
            .count();
        outcomes.push(json!({
            "s_bits": bits,
            "p": ratio_to_string(p),
            "p_f64": p.to_f64(),
            "count": count,
        }));
    }
    let residual_count = batch
        .iter()
        .filter(|o| matches!(o, MeasurementOutcome::Residual))
        .count();
    json!({
        "stage": stage,
        "draws": draws,
        "outcomes": outcomes,
        "residual": ratio_to_string(&dist.residual),
        "residual_f64": dist.residual.to_f64(),
        "residual_count": residual_count,
    })
    .to_string()
}

/// Upper bounds on the information content of a string across stages:
/// `[{n, tail_lo, tail_hi, diag_lo, diag_hi (f64)}]`. Stages below the
/// floor gate are skipped.
#[wasm_bindgen]
pub fn information_bound_curve(s_index: u32, max_stage: u32, eps_bits: u32) -> String {
    let s = s_index.max(1) as u64;
    let max_stage = max_stage.clamp(1, 16) as u64;
    let eps = pow2(-(eps_bits.clamp(4, 16) as i64));
    let mut dt = shared_dovetail().lock().unwrap();
    let mut rows = Vec::new();
    for n in (s + 3)..=max_stage {
        if let Ok(bound) = hhat_upper(&mut dt, s, n, &eps) {
            let tail = bound.enclosure.tail().clone();
            let diag = bound.enclosure.diag_entries();
            let first = diag.first().cloned();
            rows.push(json!({
                "n": n,
                "tail_lo": tail.lo.to_f64(),
                "tail_hi": tail.hi.to_f64(),
                "diag_lo": first.as_ref().and_then(|d| d.lo.to_f64()),
                "diag_hi": first.as_ref().and_then(|d| d.hi.to_f64()),
            }));
        }
    }
    json!({
        "s": s,
        "s_bits": Word::from_index(s).to_string(),
        "floor_bits": (s + 3),
        "rows": rows,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_are_monotone_json() {
        let text = mass_curves(6, 6, 1);
        let rows: Value = serde_json::from_str(&text).unwrap();
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), 6);
        let mut last = -1.0;
        for row in rows {
            let v = row["omega_hat_f64"].as_f64().unwrap();
            assert!(v >= last && v <= 1.0);
            last = v;
        }
    }

    #[test]
    fn histogram_counts_sum_to_draws() {
        let text = measurement_histogram(8, 3, 0, 7, 2000);
        let v: Value = serde_json::from_str(&text).unwrap();
        let outcome_total: u64 = v["outcomes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["count"].as_u64().unwrap())
            .sum();
        assert_eq!(outcome_total + v["residual_count"].as_u64().unwrap(), 2000);
    }

    #[test]
    fn information_curve_shrinks() {
        let text = information_bound_curve(1, 12, 10);
        let v: Value = serde_json::from_str(&text).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert!(rows.len() >= 2);
        let first = rows.first().unwrap()["tail_hi"].as_f64().unwrap();
        let last = rows.last().unwrap()["tail_hi"].as_f64().unwrap();
        assert!(last <= first + 0.01);
    }
}
