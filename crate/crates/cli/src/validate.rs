use std::fmt::Write;

use scarlab::symmetry::ReducedBasis;
use scarlab::FockBasis;

use crate::config::{ExperimentConfig, ModelConfig};
use crate::model;

/// Largest full basis enumerated to count a symmetry sector.
const ENUMERATE_CAP: u128 = 2_000_000;

fn bytes(n: f64) -> String {
    const UNITS: [&str; 5] = ["B", "KiB", "MiB", "GiB", "TiB"];
    let mut x = n;
    let mut u = 0;
    while x >= 1024.0 && u + 1 < UNITS.len() {
        x /= 1024.0;
        u += 1;
    }
    if u + 1 == UNITS.len() && x >= 1024.0 {
        return format!("{n:.2e} B");
    }
    format!("{x:.1} {}", UNITS[u])
}

fn runtime_class(dense: Option<f64>, sparse: f64) -> &'static str {
    let dense = dense.unwrap_or(0.0);
    if dense > 40_000.0 || sparse > 1e10 {
        "infeasible"
    } else if dense > 20_000.0 || sparse > 2e8 {
        "hours"
    } else if dense > 4_000.0 || sparse > 2e6 {
        "minutes"
    } else {
        "seconds"
    }
}

/// Dry-run report. Never fails: problems are listed in the text.
pub fn report(text: &str, dense_cap: usize) -> String {
    let mut out = String::new();
    let cfg = match ExperimentConfig::parse(text) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(out, "config: INVALID\n  {e}");
            return out;
        }
    };
    let _ = writeln!(out, "config: ok");
    let _ = writeln!(out, "model: {} (L = {})", cfg.model.family(), cfg.model.l());
    let mut problems = 0;

    let word = match model::initial_word(&cfg.model, &cfg.initial_state) {
        Ok(w) => w,
        Err(e) => {
            let _ = writeln!(out, "initial state: ERROR {e}");
            return out;
        }
    };
    let lat = model::lattice(&cfg.model);
    if word.len() != lat.n_modes() {
        let _ = writeln!(out, "initial state: ERROR word has {} entries, model has {} modes", word.len(), lat.n_modes());
        return out;
    }
    let _ = writeln!(out, "initial state: {}", word.iter().map(|d| char::from(b'0' + d)).collect::<String>());
    let constraint = model::constraint(&cfg.model, &word);
    let full = FockBasis::expected_dim(&lat, &constraint);
    let _ = writeln!(out, "dimension: {full}");

    if let ModelConfig::Dipolar(m) = &cfg.model {
        match model::geometry(m) {
            Ok(g) => {
                let u = g.unit_couplings();
                let _ = writeln!(
                    out,
                    "geometry: α = {:.4}°, β = {:.4}°, |J02/J01| = {:.4}, long-range ratio = {:.4}",
                    g.alpha.to_degrees(),
                    g.beta.to_degrees(),
                    u.ratio(),
                    u.long_range_ratio()
                );
            }
            Err(e) => {
                problems += 1;
                let _ = writeln!(out, "geometry: ERROR {e}");
            }
        }
    }

    let mut target = full;
    if let ModelConfig::Ladder(m) = &cfg.model {
        if let Some(sector) = m.sector {
            if full > ENUMERATE_CAP {
                let _ = writeln!(out, "symmetry sector: not counted (full dimension above {ENUMERATE_CAP}); expect roughly dimension / group order");
            } else {
                let tags = model::ladder_params(m).symmetry_tags();
                match FockBasis::enumerate(lat.clone(), constraint).and_then(|b| ReducedBasis::new(&b, sector, &tags)) {
                    Ok(rb) => {
                        target = rb.dim() as u128;
                        let _ = writeln!(out, "symmetry sector: {sector:?} compatible, dimension {}", rb.dim());
                    }
                    Err(e) => {
                        problems += 1;
                        let _ = writeln!(out, "symmetry sector: ERROR {e}");
                    }
                }
            }
        }
    }

    let n = target as f64;
    let _ = writeln!(out, "memory: state vector {}, sparse Hamiltonian ~{}", bytes(16.0 * full as f64), bytes(16.0 * full as f64 * 2.0 * lat.n_modes() as f64));
    let dense = cfg.spectrum.as_ref().map(|_| n);
    if let Some(d) = dense {
        let _ = writeln!(out, "memory: dense diagonalization {} (dimension {target})", bytes(8.0 * d * d));
        if target > dense_cap as u128 {
            problems += 1;
            let _ = writeln!(out, "WARNING: dimension {target} exceeds the dense cap {dense_cap}; choose a symmetry sector or a smaller L");
        }
    }
    let steps = cfg.evolution.as_ref().map_or(0.0, |e| {
        e.floquet
            .as_ref()
            .map_or(e.t_max.unwrap_or(0.0) / e.dt.max(1e-12), |f| (f.n_periods * 4 * f.samples_per_period.max(1)) as f64)
    });
    let shots = cfg.disorder.as_ref().map_or(1, |d| d.shots).max(1) as f64;
    let points = cfg.sweep.as_ref().map_or(1, |s| s.values.len()).max(1) as f64;
    let _ = writeln!(out, "runtime class: {}", runtime_class(dense, full as f64 * steps.max(1.0) * shots * points / 50.0));
    let _ = writeln!(out, "{}", if problems == 0 { "status: ok" } else { "status: problems found" });
    out
}
