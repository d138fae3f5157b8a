use serde::{Deserialize, Serialize};

use crate::basis::{ladder_site, Boundary, FockBasis, Geometry, ParticleKind};
use crate::error::{Error, Result};
use crate::models::ladder::rung_pairs;
use crate::operator::{SparseOperator, Statistics, Terms};
use crate::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// Rung bond of rung m carries exp(i·flux·m).
    #[default]
    Rung,
    /// Legs carry exp(∓i·flux/2), rungs are real.
    Leg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HhbhParams {
    pub l: usize,
    pub j: f64,
    pub j_prime: f64,
    pub flux: f64,
    pub u: f64,
    pub n_max: u8,
    /// Per-site energies in snake order; empty means zero.
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub gauge: Gauge,
}

impl HhbhParams {
    pub fn new(l: usize, u: f64, n_max: u8) -> Self {
        HhbhParams {
            l,
            j: 1.0,
            j_prime: 1.0,
            flux: std::f64::consts::PI,
            u,
            n_max,
            mu: vec![],
            boundary: Boundary::Open,
            gauge: Gauge::Rung,
        }
    }
}

fn phase(theta: f64) -> C64 {
    let snap = |x: f64| if x.abs() < 1e-14 { 0.0 } else { x };
    C64::new(snap(theta.cos()), snap(theta.sin()))
}

pub fn build_terms(p: &HhbhParams) -> Result<Terms> {
    if p.n_max == 0 {
        return Err(Error::Invalid("n_max must be at least 1".into()));
    }
    if !p.mu.is_empty() && p.mu.len() != 2 * p.l {
        return Err(Error::Mismatch(format!("{} chemical potentials for {} sites", p.mu.len(), 2 * p.l)));
    }
    if p.l < 2 && p.flux != 0.0 {
        log::warn!("flux requested on a ladder without plaquettes; ignored");
    }
    let stats = if p.n_max == 1 { Statistics::HardcoreBoson } else { Statistics::SoftcoreBoson(p.n_max) };
    let mut t = Terms::new(stats, 2 * p.l);
    for m in 0..p.l {
        let (top, bot) = (ladder_site(m, 0), ladder_site(m, 1));
        let amp = match p.gauge {
            Gauge::Rung => phase(p.flux * m as f64) * (-p.j_prime),
            Gauge::Leg => C64::new(-p.j_prime, 0.0),
        };
        t.hop(top, bot, amp);
    }
    for (m, n) in rung_pairs(p.l, 1, p.boundary) {
        // orient along +x so the leg-gauge phases wind consistently
        let (a, b) = if n == (m + 1) % p.l { (m, n) } else { (n, m) };
        let (ta, tb) = (ladder_site(a, 0), ladder_site(b, 0));
        let (ba, bb) = (ladder_site(a, 1), ladder_site(b, 1));
        match p.gauge {
            Gauge::Rung => {
                t.hop_real(tb, ta, -p.j);
                t.hop_real(bb, ba, -p.j);
            }
            Gauge::Leg => {
                t.hop(tb, ta, phase(-p.flux / 2.0) * (-p.j));
                t.hop(bb, ba, phase(p.flux / 2.0) * (-p.j));
            }
        }
    }
    if p.n_max > 1 {
        t.hubbard = p.u;
    }
    for (s, &mu) in p.mu.iter().enumerate() {
        t.onsite[s] = mu;
    }
    Ok(t)
}

pub fn build_hhbh(basis: &FockBasis, p: &HhbhParams) -> Result<SparseOperator> {
    let lat = &basis.lattice;
    let ok = matches!(lat.geometry, Geometry::Ladder(l) if l == p.l)
        && lat.n_max() == p.n_max
        && matches!(lat.particle, ParticleKind::SoftcoreBoson(_) | ParticleKind::HardcoreBoson)
        && lat.boundary == p.boundary;
    if !ok {
        return Err(Error::Mismatch(format!("HHBH L={} n_max={} vs basis {:?}", p.l, p.n_max, lat)));
    }
    SparseOperator::from_terms(basis, &build_terms(p)?)
}

/// Amplitude of c†_i c_j summed over the term list.
fn amplitude(t: &Terms, i: usize, j: usize) -> C64 {
    let mut a = C64::new(0.0, 0.0);
    for h in &t.hops {
        if h.i == i && h.j == j {
            a += h.amp;
        } else if h.i == j && h.j == i {
            a += h.amp.conj();
        }
    }
    a
}

/// Gauge-invariant flux of each open plaquette, from the product of hopping amplitudes
/// around b_m → b_{m+1} → t_{m+1} → t_m → b_m.
pub fn plaquette_fluxes(t: &Terms, l: usize) -> Vec<f64> {
    (0..l.saturating_sub(1))
        .map(|m| {
            let (tm, bm) = (ladder_site(m, 0), ladder_site(m, 1));
            let (tn, bn) = (ladder_site(m + 1, 0), ladder_site(m + 1, 1));
            let w = amplitude(t, bn, bm) * amplitude(t, tn, bn) * amplitude(t, tm, tn) * amplitude(t, bm, tm);
            w.arg()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{LatticeSpec, SectorConstraint};
    use crate::linalg::{eigh_complex, eigh_real};
    use crate::models::ladder::{build_pi_flux_ladder, LadderParams};
    use std::f64::consts::PI;

    fn spectrum(h: &SparseOperator) -> Vec<f64> {
        match h.to_dense_real() {
            Some(mut a) => eigh_real(h.dim, &mut a, false).unwrap(),
            None => {
                let mut a: Vec<C64> = h.to_dense().iter().map(|z| z.conj()).collect();
                eigh_complex(h.dim, &mut a, false).unwrap()
            }
        }
    }

    #[test]
    fn hardcore_pi_flux_matches_ladder() {
        let l = 4;
        let lat = LatticeSpec::ladder(l, ParticleKind::HardcoreBoson);
        let b = FockBasis::enumerate(lat, SectorConstraint::particles(l)).unwrap();
        let mut p = HhbhParams::new(l, 123.0, 1);
        p.j = 0.8;
        p.j_prime = 1.3;
        let h = build_hhbh(&b, &p).unwrap();
        let g = build_pi_flux_ladder(&b, &LadderParams::new(l, 1.3, 0.8)).unwrap();
        for (x, y) in spectrum(&h).iter().zip(&spectrum(&g)) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn gauge_invariance() {
        let l = 4;
        let lat = LatticeSpec::ladder(l, ParticleKind::SoftcoreBoson(2));
        let b = FockBasis::enumerate(lat, SectorConstraint::particles(3)).unwrap();
        for flux in [PI, 0.7, PI + 0.2] {
            let mut p = HhbhParams::new(l, 5.0, 2);
            p.flux = flux;
            let t1 = build_terms(&p).unwrap();
            p.gauge = Gauge::Leg;
            let t2 = build_terms(&p).unwrap();
            for (f1, f2) in plaquette_fluxes(&t1, l).iter().zip(plaquette_fluxes(&t2, l)) {
                let d = (f1 - f2).rem_euclid(2.0 * PI);
                assert!(d.min(2.0 * PI - d) < 1e-12);
                let e = (f1 - flux).rem_euclid(2.0 * PI);
                assert!(e.min(2.0 * PI - e) < 1e-12);
            }
            let s1 = spectrum(&SparseOperator::from_terms(&b, &t1).unwrap());
            let s2 = spectrum(&SparseOperator::from_terms(&b, &t2).unwrap());
            for (x, y) in s1.iter().zip(&s2) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_particle_ignores_u() {
        let lat = LatticeSpec::ladder(3, ParticleKind::SoftcoreBoson(2));
        let b = FockBasis::enumerate(lat, SectorConstraint::particles(1)).unwrap();
        let h0 = build_hhbh(&b, &HhbhParams::new(3, 0.0, 2)).unwrap().to_dense();
        let h1 = build_hhbh(&b, &HhbhParams::new(3, 77.0, 2)).unwrap().to_dense();
        assert_eq!(h0, h1);
    }

    #[test]
    fn pi_flux_is_real() {
        let lat = LatticeSpec::ladder(5, ParticleKind::SoftcoreBoson(2));
        let b = FockBasis::enumerate(lat, SectorConstraint::particles(5)).unwrap();
        let h = build_hhbh(&b, &HhbhParams::new(5, 30.0, 2)).unwrap();
        assert!(h.is_real());
        assert!(h.hermiticity_error() < 1e-12);
    }
}
