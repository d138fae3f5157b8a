use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::tridiag_eig;
use crate::operator::SparseOperator;
use crate::spectral::diag::EigenDecomposition;
use crate::C64;

pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-14;

/// Energies E_k with weights ρ_k = |⟨ψ|E_k⟩|².
#[derive(Clone, Debug, Serialize)]
pub struct SpectralDecomposition {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    pub dropped_mass: f64,
    pub source: String,
}

impl SpectralDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn from_raw(energies: &[f64], raw: Vec<f64>, floor: f64, source: &str) -> Self {
        let total: f64 = raw.iter().sum();
        let mut e = vec![];
        let mut w = vec![];
        let mut dropped = 0.0;
        for (&x, r) in energies.iter().zip(raw) {
            let r = r / total;
            if r < floor {
                dropped += r;
            } else {
                e.push(x);
                w.push(r);
            }
        }
        let kept: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= kept);
        SpectralDecomposition { energies: e, weights: w, dropped_mass: dropped, source: source.into() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("energy,weight\n");
        for (e, w) in self.energies.iter().zip(&self.weights) {
            s.push_str(&format!("{e:.16e},{w:.16e}\n"));
        }
        s
    }
}

pub fn overlap_spectrum(psi: &[C64], decomp: &EigenDecomposition, floor: f64, source: &str) -> Result<SpectralDecomposition> {
    if psi.len() != decomp.dim() {
        return Err(Error::Mismatch(format!("state dim {} vs decomposition dim {}", psi.len(), decomp.dim())));
    }
    let raw = decomp.coefficients(psi).iter().map(|c| c.norm_sqr()).collect();
    Ok(SpectralDecomposition::from_raw(&decomp.values, raw, floor, source))
}

/// Gauss quadrature of the spectral measure of ψ from `steps` Lanczos iterations with full
/// reorthogonalization. Moments up to order 2·steps − 1 match the exact overlap spectrum.
pub fn lanczos_measure(h: &SparseOperator, psi: &[C64], steps: usize, floor: f64, source: &str) -> Result<SpectralDecomposition> {
    let n = h.dim;
    if psi.len() != n {
        return Err(Error::Mismatch(format!("state dim {} vs operator dim {n}", psi.len())));
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<C64>> = vec![psi.iter().map(|z| z / norm).collect()];
    let mut alpha = vec![];
    let mut beta = vec![];
    let mut w = vec![C64::new(0.0, 0.0); n];
    for j in 0..steps.min(n) {
        h.matvec(&basis[j], &mut w);
        let a: f64 = basis[j].iter().zip(&w).map(|(v, x)| (v.conj() * x).re).sum();
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole Krylov basis
        for _ in 0..2 {
            for v in &basis {
                let c: C64 = v.iter().zip(&w).map(|(p, q)| p.conj() * q).sum();
                w.iter_mut().zip(v).for_each(|(x, p)| *x -= c * p);
            }
        }
        let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if j + 1 == steps.min(n) || b < 1e-12 * (a.abs() + 1.0) {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
    let (nodes, vecs) = tridiag_eig(&alpha, &beta)?;
    let m = nodes.len();
    let raw = (0..m).map(|k| vecs[k * m].powi(2)).collect();
    Ok(SpectralDecomposition::from_raw(&nodes, raw, floor, source))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorMode {
    Nominal,
    /// Comb shifted by the weighted circular mean of the fractional energies.
    Fitted,
}

#[derive(Clone, Debug, Serialize)]
pub struct FractionalEnergyStats {
    pub delta_e: f64,
    pub anchor: f64,
    pub anchor_mode: AnchorMode,
    /// Signed distance to the nearest comb point.
    pub signed: Vec<f64>,
    pub weights: Vec<f64>,
    pub sigma: f64,
    pub mean: f64,
}

impl FractionalEnergyStats {
    pub fn fractional(&self) -> Vec<f64> {
        self.signed.iter().map(|d| d.abs()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("signed_distance,fractional_energy,weight\n");
        for (d, w) in self.signed.iter().zip(&self.weights) {
            s.push_str(&format!("{d:.16e},{:.16e},{w:.16e}\n", d.abs()));
        }
        s
    }
}

fn signed_distance(e: f64, anchor: f64, delta_e: f64) -> f64 {
    let x = e - anchor;
    x - delta_e * (x / delta_e).round()
}

pub fn fractional_energy_width(decomp: &SpectralDecomposition, delta_e: f64, anchor: f64, mode: AnchorMode) -> Result<FractionalEnergyStats> {
    if !(delta_e > 0.0) {
        return Err(Error::Invalid(format!("comb spacing {delta_e}")));
    }
    let mut anchor = anchor;
    if mode == AnchorMode::Fitted {
        let k = 2.0 * std::f64::consts::PI / delta_e;
        let z: C64 = decomp
            .energies
            .iter()
            .zip(&decomp.weights)
            .map(|(e, w)| C64::from_polar(*w, k * (e - anchor)))
            .sum();
        anchor += z.arg() / k;
    }
    let signed: Vec<f64> = decomp.energies.iter().map(|&e| signed_distance(e, anchor, delta_e)).collect();
    let total: f64 = decomp.weights.iter().sum();
    let mean = signed.iter().zip(&decomp.weights).map(|(d, w)| d * w).sum::<f64>() / total;
    let var = signed.iter().zip(&decomp.weights).map(|(d, w)| w * (d - mean).powi(2)).sum::<f64>() / total;
    Ok(FractionalEnergyStats {
        delta_e,
        anchor,
        anchor_mode: mode,
        signed,
        weights: decomp.weights.clone(),
        sigma: var.sqrt(),
        mean,
    })
}

/// Comb spacing measured from the two heaviest peaks. A peak is the weighted centroid of all
/// levels within a quarter of `guess` of its heaviest level; the centroid gap is divided by the
/// nearest integer multiple of `guess`.
pub fn measure_comb_spacing(decomp: &SpectralDecomposition, guess: f64) -> Result<f64> {
    let half = guess.abs() / 4.0;
    let mut used = vec![false; decomp.energies.len()];
    let mut peaks = vec![];
    for _ in 0..2 {
        let top = (0..used.len()).filter(|&k| !used[k]).max_by(|&a, &b| decomp.weights[a].total_cmp(&decomp.weights[b]));
        let Some(top) = top else {
            return Err(Error::Numerical("fewer than two spectral peaks".into()));
        };
        let e0 = decomp.energies[top];
        let (mut sw, mut se) = (0.0, 0.0);
        for k in 0..used.len() {
            if !used[k] && (decomp.energies[k] - e0).abs() < half {
                used[k] = true;
                sw += decomp.weights[k];
                se += decomp.weights[k] * decomp.energies[k];
            }
        }
        peaks.push(se / sw);
    }
    let gap = (peaks[0] - peaks[1]).abs();
    let mult = (gap / guess.abs()).round().max(1.0);
    Ok(gap / mult)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{FockBasis, LatticeSpec, ParticleKind, SectorConstraint};
    use crate::models::ladder::{build_pi_flux_ladder, scar_word, LadderParams};
    use crate::spectral::diag::full_diagonalize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scar_setup(l: usize, t_nn: f64) -> (FockBasis, SparseOperator, Vec<C64>) {
        let b = FockBasis::enumerate(LatticeSpec::ladder(l, ParticleKind::HardcoreBoson), SectorConstraint::particles(l)).unwrap();
        let mut p = LadderParams::new(l, 1.0, 1.0);
        p.t_nn = t_nn;
        let h = build_pi_flux_ladder(&b, &p).unwrap();
        let mut psi = vec![C64::new(0.0, 0.0); b.dim()];
        psi[b.configuration_index(&scar_word(l)).unwrap()] = C64::new(1.0, 0.0);
        (b, h, psi)
    }

    #[test]
    fn eigenvector_has_single_weight() {
        let (_, h, _) = scar_setup(3, 0.1);
        let d = full_diagonalize(&h, true, 100).unwrap();
        let s = overlap_spectrum(&d.vector(4), &d, DEFAULT_WEIGHT_FLOOR, "v4").unwrap();
        assert_eq!(s.weights.len(), 1);
        assert!((s.weights[0] - 1.0).abs() < 1e-12);
        let f = fractional_energy_width(&s, 2.0, 0.3, AnchorMode::Nominal).unwrap();
        assert!(f.sigma < 1e-12);
    }

    #[test]
    fn exact_scar_comb() {
        let (_, h, psi) = scar_setup(4, 0.1);
        let d = full_diagonalize(&h, true, 100).unwrap();
        let s = overlap_spectrum(&psi, &d, 1e-12, "scar").unwrap();
        assert!(s.dropped_mass < 1e-10);
        // weights on the comb sum to the binomial profile
        let mut comb = [0.0; 5];
        for (e, w) in s.energies.iter().zip(&s.weights) {
            let n = ((4.0 - e) / 2.0).round();
            assert!((e - (4.0 - 2.0 * n)).abs() < 1e-9, "off-comb level {e} with weight {w}");
            comb[n as usize] += w;
        }
        for (n, c) in comb.iter().enumerate() {
            let want = [1.0, 4.0, 6.0, 4.0, 1.0][n] / 16.0;
            assert!((c - want).abs() < 1e-10);
        }
        let f = fractional_energy_width(&s, 2.0, 4.0, AnchorMode::Nominal).unwrap();
        assert!(f.sigma < 1e-10);
        assert!((measure_comb_spacing(&s, 2.0).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn random_state_weights_normalized() {
        let (_, h, _) = scar_setup(3, 0.2);
        let d = full_diagonalize(&h, true, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi: Vec<C64> = (0..h.dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let s = overlap_spectrum(&psi, &d, DEFAULT_WEIGHT_FLOOR, "random").unwrap();
        assert!((s.total_weight() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_matches_dense_width() {
        let (_, h, _) = scar_setup(5, 0.3);
        let d = full_diagonalize(&h, true, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi: Vec<C64> = (0..h.dim).map(|_| C64::new(rng.random::<f64>() - 0.5, 0.0)).collect();
        let exact = overlap_spectrum(&psi, &d, 0.0, "dense").unwrap();
        let approx = lanczos_measure(&h, &psi, 120, 0.0, "lanczos").unwrap();
        // low moments agree
        for p in 1..6 {
            let m1: f64 = exact.energies.iter().zip(&exact.weights).map(|(e, w)| w * e.powi(p)).sum();
            let m2: f64 = approx.energies.iter().zip(&approx.weights).map(|(e, w)| w * e.powi(p)).sum();
            assert!((m1 - m2).abs() < 1e-8 * (1.0 + m1.abs()), "moment {p}: {m1} vs {m2}");
        }
        let s1 = fractional_energy_width(&exact, 2.0, 5.0, AnchorMode::Nominal).unwrap().sigma;
        let s2 = fractional_energy_width(&approx, 2.0, 5.0, AnchorMode::Nominal).unwrap().sigma;
        assert!((s1 - s2).abs() < 1e-3 * s1, "{s1} vs {s2}");
    }

    #[test]
    fn fitted_anchor_removes_uniform_shift() {
        let s = SpectralDecomposition {
            energies: vec![0.3, 2.3, 4.3],
            weights: vec![0.25, 0.5, 0.25],
            dropped_mass: 0.0,
            source: "shifted".into(),
        };
        let nominal = fractional_energy_width(&s, 2.0, 0.0, AnchorMode::Nominal).unwrap();
        assert!(nominal.sigma < 1e-12 && (nominal.mean - 0.3).abs() < 1e-12);
        let fitted = fractional_energy_width(&s, 2.0, 0.0, AnchorMode::Fitted).unwrap();
        assert!(fitted.mean.abs() < 1e-12 && (fitted.anchor - 0.3).abs() < 1e-12);
        assert!(fitted.fractional().iter().all(|&f| f <= 1.0));
    }
}
