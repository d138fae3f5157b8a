use serde::{Deserialize, Serialize};

use crate::basis::{ladder_site, Boundary, FockBasis, ParticleKind};
use crate::error::{Error, Result};
use crate::operator::{SparseOperator, Statistics, Terms};
use crate::symmetry::Symmetry;

/// π-flux hardcore-boson ladder. Rungs carry −t_perp; every leg coupling has
/// opposite signs on the two legs (+ top, − bottom), at ranges 1, 2, 3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    pub l: usize,
    pub t_perp: f64,
    pub t_par: f64,
    #[serde(default)]
    pub t_nn: f64,
    #[serde(default)]
    pub t_nnn: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl LadderParams {
    pub fn new(l: usize, t_perp: f64, t_par: f64) -> Self {
        LadderParams { l, t_perp, t_par, t_nn: 0.0, t_nnn: 0.0, boundary: Boundary::Open }
    }

    /// Gauge-fixed copy with t_perp, t_par ≥ 0. Flipping the bottom leg changes the sign of
    /// t_perp alone; a (−1)^m phase per rung flips the odd-range couplings t_par and t_nnn.
    pub fn normalized(&self) -> Self {
        let mut p = *self;
        p.t_perp = p.t_perp.abs();
        if p.t_par < 0.0 {
            p.t_par = -p.t_par;
            p.t_nnn = -p.t_nnn;
        }
        p
    }

    pub fn symmetry_tags(&self) -> Vec<Symmetry> {
        let mut tags = vec![Symmetry::Reflection, Symmetry::Flip];
        if self.boundary == Boundary::Periodic {
            tags.push(Symmetry::Translation);
        }
        if self.t_nn == 0.0 && (self.boundary == Boundary::Open || self.l % 2 == 0) {
            tags.push(Symmetry::LegSwap);
        }
        tags
    }
}

/// Unordered rung pairs at distance d, with wrap-around bonds for periodic boundaries.
pub fn rung_pairs(l: usize, d: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut pairs = vec![];
    for m in 0..l {
        let n = match boundary {
            Boundary::Open if m + d < l => m + d,
            Boundary::Periodic => (m + d) % l,
            _ => continue,
        };
        let p = (m.min(n), m.max(n));
        if m != n && !pairs.contains(&p) {
            pairs.push(p);
        }
    }
    pairs
}

pub fn build_terms(p: &LadderParams) -> Result<Terms> {
    let p = p.normalized();
    if p.l == 0 {
        return Err(Error::Invalid("ladder needs at least one rung".into()));
    }
    let mut t = Terms::new(Statistics::HardcoreBoson, 2 * p.l);
    for m in 0..p.l {
        t.hop_real(ladder_site(m, 0), ladder_site(m, 1), -p.t_perp);
    }
    for (d, amp) in [(1, p.t_par), (2, p.t_nn), (3, p.t_nnn)] {
        if amp == 0.0 {
            continue;
        }
        for (m, n) in rung_pairs(p.l, d, p.boundary) {
            t.hop_real(ladder_site(m, 0), ladder_site(n, 0), amp);
            t.hop_real(ladder_site(m, 1), ladder_site(n, 1), -amp);
        }
    }
    Ok(t)
}

/// Spinless fermions on the same snake-ordered ladder without flux. Matches the π-flux boson
/// ladder on the one-particle-per-rung subspace: the parity string of a leg hop spanning three
/// snake indices passes one particle of each of the two rungs, and those hops change sign.
pub fn spinless_fermion_terms(p: &LadderParams) -> Result<Terms> {
    if p.t_nn != 0.0 || p.t_nnn != 0.0 {
        return Err(Error::Invalid("the fermion mapping covers nearest-neighbour legs only".into()));
    }
    if p.boundary == Boundary::Periodic && p.l > 2 {
        return Err(Error::Invalid("the fermion mapping needs open boundaries".into()));
    }
    let mut t = build_terms(p)?;
    t.statistics = Statistics::Fermion;
    for h in &mut t.hops {
        if h.i.abs_diff(h.j) == 3 {
            h.amp = -h.amp;
        }
    }
    Ok(t)
}

pub fn build_pi_flux_ladder(basis: &FockBasis, p: &LadderParams) -> Result<SparseOperator> {
    check_basis(basis, p)?;
    SparseOperator::from_terms(basis, &build_terms(p)?)
}

fn check_basis(basis: &FockBasis, p: &LadderParams) -> Result<()> {
    let lat = &basis.lattice;
    let ok = matches!(lat.geometry, crate::basis::Geometry::Ladder(l) if l == p.l)
        && matches!(lat.particle, ParticleKind::HardcoreBoson | ParticleKind::SpinHalf)
        && lat.boundary == p.boundary;
    if !ok {
        return Err(Error::Mismatch(format!("ladder params L={} vs basis {:?}", p.l, lat)));
    }
    Ok(())
}

/// Bottom leg filled: one particle per rung.
pub fn scar_word(l: usize) -> Vec<u8> {
    let mut w = vec![0u8; 2 * l];
    for m in 0..l {
        w[ladder_site(m, 1)] = 1;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{LatticeSpec, SectorConstraint};
    use crate::C64;

    fn basis(l: usize, n: usize) -> FockBasis {
        FockBasis::enumerate(LatticeSpec::ladder(l, ParticleKind::HardcoreBoson), SectorConstraint::particles(n)).unwrap()
    }

    /// Matrix element by explicit operator algebra on occupation lists (rung, leg).
    fn oracle(l: usize, n: usize, tp: f64, tl: f64) -> Vec<f64> {
        let b = basis(l, n);
        let occ = |code: u64| -> Vec<(usize, usize)> {
            let mut v = vec![];
            for m in 0..l {
                for leg in 0..2 {
                    if code >> ladder_site(m, leg) & 1 == 1 {
                        v.push((m, leg));
                    }
                }
            }
            v
        };
        let d = b.dim();
        let mut h = vec![0.0; d * d];
        for a in 0..d {
            for c in 0..d {
                let oa = occ(b.state(a));
                let oc = occ(b.state(c));
                let moved: Vec<_> = oc.iter().filter(|x| !oa.contains(x)).collect();
                let gained: Vec<_> = oa.iter().filter(|x| !oc.contains(x)).collect();
                if moved.len() != 1 {
                    continue;
                }
                let (&(m1, l1), &(m2, l2)) = (moved[0], gained[0]);
                let amp = if m1 == m2 {
                    -tp
                } else if (m1 as i64 - m2 as i64).abs() == 1 && l1 == l2 {
                    if l1 == 0 { tl } else { -tl }
                } else {
                    0.0
                };
                h[a * d + c] = amp;
            }
        }
        h
    }

    #[test]
    fn two_rung_matches_oracle() {
        let b = basis(2, 2);
        let h = build_pi_flux_ladder(&b, &LadderParams::new(2, 1.0, 1.0)).unwrap();
        let want = oracle(2, 2, 1.0, 1.0);
        let got = h.to_dense();
        assert_eq!(b.dim(), 6);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - C64::new(*w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn three_rung_oracle_random_couplings() {
        let b = basis(3, 3);
        let h = build_pi_flux_ladder(&b, &LadderParams::new(3, 0.7, 1.3)).unwrap();
        let want = oracle(3, 3, 0.7, 1.3);
        for (g, w) in h.to_dense().iter().zip(&want) {
            assert!((g.re - w).abs() < 1e-15);
        }
    }

    #[test]
    fn decoupled_rungs() {
        let b = basis(3, 3);
        let h = build_pi_flux_ladder(&b, &LadderParams::new(3, 1.0, 0.0)).unwrap();
        for r in 0..b.dim() {
            for (c, _) in h.row(r) {
                let x = b.state(r) ^ b.state(c);
                // only moves within one rung
                assert!(x == 0 || (x.count_ones() == 2 && (x.trailing_zeros() / 2) == (63 - x.leading_zeros()) / 2));
            }
        }
    }

    #[test]
    fn gauge_normalization_preserves_spectrum_trace() {
        let b = basis(3, 3);
        let p = LadderParams { l: 3, t_perp: -1.0, t_par: -0.5, t_nn: 0.2, t_nnn: 0.1, boundary: Boundary::Open };
        let h = build_pi_flux_ladder(&b, &p).unwrap();
        assert!(h.hermiticity_error() < 1e-14);
        let q = p.normalized();
        assert_eq!((q.t_perp, q.t_par, q.t_nnn), (1.0, 0.5, -0.1));
    }

    #[test]
    fn periodic_pairs() {
        assert_eq!(rung_pairs(4, 1, Boundary::Periodic).len(), 4);
        assert_eq!(rung_pairs(4, 2, Boundary::Periodic).len(), 2);
        assert_eq!(rung_pairs(2, 1, Boundary::Periodic).len(), 1);
        assert_eq!(rung_pairs(4, 3, Boundary::Open), vec![(0, 3)]);
    }

    #[test]
    fn fermion_ladder_reproduces_scar_dynamics() {
        use crate::dynamics::{evolve, observables::rung_imbalance, Method, QuantumState};
        for l in 2..=5 {
            let p = LadderParams::new(l, 1.0, 0.7);
            let hb = build_pi_flux_ladder(&basis(l, l), &p).unwrap();
            let fb = FockBasis::enumerate(LatticeSpec::ladder(l, ParticleKind::SpinlessFermion), SectorConstraint::particles(l)).unwrap();
            let hf = SparseOperator::from_terms(&fb, &spinless_fermion_terms(&p).unwrap()).unwrap();
            let times: Vec<f64> = (1..=40).map(|k| k as f64 * std::f64::consts::PI / 4.0).collect();
            let b = basis(l, l);
            let sb = evolve(&hb, &QuantumState::from_word(&b, &scar_word(l)).unwrap().amps, &times, Method::Eigendecomposition).unwrap();
            let sf = evolve(&hf, &QuantumState::from_word(&fb, &scar_word(l)).unwrap().amps, &times, Method::Eigendecomposition).unwrap();
            let (ib, iff) = (rung_imbalance(&b).unwrap(), rung_imbalance(&fb).unwrap());
            for (x, y) in sb.states.iter().zip(&sf.states) {
                assert!((ib.eval(x) - iff.eval(y)).abs() < 1e-9);
            }
        }
        // without the sign change the fermion ladder leaves the scar subspace
        let l = 3;
        let p = LadderParams::new(l, 1.0, 0.7);
        let fb = FockBasis::enumerate(LatticeSpec::ladder(l, ParticleKind::SpinlessFermion), SectorConstraint::particles(l)).unwrap();
        let mut t = build_terms(&p).unwrap();
        t.statistics = Statistics::Fermion;
        let h = SparseOperator::from_terms(&fb, &t).unwrap();
        let psi = QuantumState::from_word(&fb, &scar_word(l)).unwrap();
        let s = evolve(&h, &psi.amps, &[std::f64::consts::PI], Method::Eigendecomposition).unwrap();
        let single = crate::dynamics::observables::rung_single_occupancy(&fb).unwrap();
        assert!(single.eval(&s.states[0]) < 0.99);
        // both legs of every fermion bond carry the same sign
        let t = spinless_fermion_terms(&LadderParams::new(4, 1.0, 1.0)).unwrap();
        for m in 0..3 {
            let amp = |a: usize, b: usize| t.hops.iter().find(|h| (h.i, h.j) == (a, b) || (h.j, h.i) == (a, b)).unwrap().amp;
            let top = amp(ladder_site(m, 0), ladder_site(m + 1, 0));
            let bot = amp(ladder_site(m, 1), ladder_site(m + 1, 1));
            assert_eq!(top, bot);
        }
    }
}
