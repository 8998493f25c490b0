//! Browser bindings. Every export returns a JSON string; failures come back
//! as `{"error": "..."}` so the page can show them inline.

use metric_sobolev::energy::{energy_ladder, sine_reference_energy};
use metric_sobolev::fields::{build_field, FieldSpec};
use metric_sobolev::generate::{grid2d, interval, random_cloud};
use metric_sobolev::hopf_lax::hopf_lax;
use metric_sobolev::partition::{build_partition, neighbor_graph, partition_diagnostics};
use metric_sobolev::Result;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(result: Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn coords(space: &metric_sobolev::MetricMeasureSpace) -> Vec<[f64; 2]> {
    space
        .points()
        .iter()
        .map(|p| p.coords.unwrap_or([0.0, 0.0]))
        .collect()
}

/// Partition of `n` uniform points in the unit square at scale `delta`.
#[wasm_bindgen]
pub fn partition_cloud(n: usize, seed: u32, delta: f64) -> String {
    respond((|| {
        let space = random_cloud(n, seed as u64)?;
        let p = build_partition(&space, delta, None)?;
        let g = neighbor_graph(&space, &p)?;
        let audit = p.audit(&space);
        let diag = partition_diagnostics(&space, &p, &g, None)?;
        let cell_of: Vec<usize> = (0..space.len()).map(|x| p.cell_of(x)).collect();
        Ok(json!({
            "points": coords(&space),
            "centers": p.centers(),
            "cell_of": cell_of,
            "pairs": g.pairs(),
            "max_degree": g.max_degree(),
            "passed": audit.passed() && diag.passed(),
            "failures": audit.failures().chain(diag.failures()).map(|c| c.name.clone()).collect::<Vec<_>>(),
        }))
    })())
}

/// Hopf-Lax evolution of a random Lipschitz field on an `n × n` grid.
#[wasm_bindgen]
pub fn hopf_lax_grid(n: usize, seed: u32, p: f64, t: f64) -> String {
    respond((|| {
        let space = grid2d(n)?;
        let f = build_field(&space, &FieldSpec::RandomLipschitz, seed as u64)?;
        let r = hopf_lax(&space, &f, p, t)?;
        Ok(json!({
            "n": n,
            "f": f.values(),
            "values": r.values,
            "dplus": r.dplus,
            "dminus": r.dminus,
        }))
    })())
}

/// Energy of `sin(2πx)` on `[0, 1]` across a ladder of scales, with the
/// ratio to the exact energy and the admissible bracket.
#[wasm_bindgen]
pub fn sine_energy_ladder(points: usize, q: f64) -> String {
    respond((|| {
        let space = interval(points)?;
        let u = build_field(&space, &FieldSpec::Sin, 0)?;
        let deltas = [0.2, 0.1, 0.05, 0.02];
        let ladder = energy_ladder(&space, &u, q, &deltas, Some(sine_reference_energy(q)))?;
        Ok(json!({
            "deltas": ladder.deltas,
            "energies": ladder.energies,
            "ratios": ladder.ratios,
            "reference": ladder.reference_energy,
            "bracket": [ladder.bracket.0, ladder.bracket.1],
            "holds": ladder.sandwich_holds(),
        }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn partition_payload() {
        let v = parse(&partition_cloud(80, 1, 0.15));
        assert_eq!(v["points"].as_array().unwrap().len(), 80);
        assert_eq!(v["cell_of"].as_array().unwrap().len(), 80);
        assert_eq!(v["passed"], true);
    }

    #[test]
    fn hopf_lax_payload() {
        let v = parse(&hopf_lax_grid(8, 2, 2.0, 0.3));
        assert_eq!(v["values"].as_array().unwrap().len(), 64);
        let f = v["f"].as_array().unwrap();
        let q = v["values"].as_array().unwrap();
        assert!(f
            .iter()
            .zip(q)
            .all(|(a, b)| b.as_f64().unwrap() <= a.as_f64().unwrap() + 1e-12));
    }

    #[test]
    fn ladder_payload() {
        let v = parse(&sine_energy_ladder(2000, 2.0));
        assert_eq!(v["holds"], true);
        assert_eq!(v["ratios"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn errors_are_reported() {
        assert!(parse(&partition_cloud(10, 0, -1.0))["error"].is_string());
        assert!(parse(&hopf_lax_grid(4, 0, 0.5, 1.0))["error"].is_string());
    }
}
