use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_LEVELS: usize = 100;

#[derive(Clone, Debug, Serialize)]
pub struct LevelStats {
    pub r_mean: f64,
    pub window: f64,
    pub n_levels: usize,
    /// Levels dropped as exact degeneracies before windowing.
    pub merged_degeneracies: usize,
    #[serde(skip)]
    pub r_values: Vec<f64>,
    /// Spacings in the window divided by their mean.
    #[serde(skip)]
    pub spacings: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub center: f64,
    pub density: f64,
}

/// Gap-ratio statistics over the central `window` fraction of the sorted spectrum.
pub fn level_spacing_stats(eigenvalues: &[f64], window: f64) -> Result<LevelStats> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Invalid(format!("window fraction {window}")));
    }
    let mut e = eigenvalues.to_vec();
    e.sort_by(f64::total_cmp);
    let span = e.last().copied().unwrap_or(0.0) - e.first().copied().unwrap_or(0.0);
    let tol = 1e-10 * span;
    let before = e.len();
    e.dedup_by(|b, a| (*b - *a).abs() <= tol);
    let merged = before - e.len();

    let n = e.len();
    let keep = (window * n as f64).round() as usize;
    let start = (n - keep.min(n)) / 2;
    let levels = &e[start..start + keep.min(n)];
    if levels.len() < MIN_LEVELS {
        return Err(Error::Invalid(format!("{} levels in window, need {MIN_LEVELS}", levels.len())));
    }
    let s: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let r_values: Vec<f64> = s.windows(2).map(|w| w[0].min(w[1]) / w[0].max(w[1])).collect();
    let r_mean = r_values.iter().sum::<f64>() / r_values.len() as f64;
    let mean_s = s.iter().sum::<f64>() / s.len() as f64;
    Ok(LevelStats {
        r_mean,
        window,
        n_levels: levels.len(),
        merged_degeneracies: merged,
        r_values,
        spacings: s.iter().map(|x| x / mean_s).collect(),
    })
}

/// Normalized histogram on [lo, hi).
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<HistogramBin> {
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v >= lo && v <= hi {
            counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
        }
    }
    let total = values.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| HistogramBin { center: lo + (k as f64 + 0.5) * w, density: c as f64 / (total * w) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn picket_fence() {
        let e: Vec<f64> = (0..500).map(|k| 0.3 * k as f64).collect();
        let s = level_spacing_stats(&e, 0.5).unwrap();
        assert!((s.r_mean - 1.0).abs() < 1e-9);
    }

    // <r> for Poisson levels is 2 ln 2 − 1; checked here against sampled exponential gaps.
    #[test]
    fn poisson_gaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut e = vec![0.0];
        for _ in 0..100_000 {
            let u: f64 = rng.random();
            let x = e.last().unwrap() - (1.0 - u).ln();
            e.push(x);
        }
        let s = level_spacing_stats(&e, 1.0).unwrap();
        assert!((s.r_mean - 0.386).abs() < 0.003, "{}", s.r_mean);
        assert!((s.r_mean - (2.0 * 2f64.ln() - 1.0)).abs() < 0.003);
    }

    #[test]
    fn degeneracies_merged() {
        let mut e: Vec<f64> = (0..300).map(|k| k as f64).collect();
        e.extend([10.0, 20.0, 30.0]);
        let s = level_spacing_stats(&e, 1.0).unwrap();
        assert_eq!(s.merged_degeneracies, 3);
        assert!((s.r_mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_levels() {
        let e: Vec<f64> = (0..150).map(|k| k as f64).collect();
        assert!(level_spacing_stats(&e, 0.5).is_err());
    }

    #[test]
    fn histogram_integrates_to_one() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64 / 1000.0).collect();
        let h = histogram(&v, 20, 0.0, 1.0);
        let total: f64 = h.iter().map(|b| b.density * 0.05).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
