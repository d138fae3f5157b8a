use serde::Serialize;

use crate::basis::{ladder_site, FockBasis, Geometry};
use crate::error::{Error, Result};
use crate::operator::SparseOperator;
use crate::C64;

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// (top, bottom) site of every rung. Ladders use the snake order; even chains pair (2m, 2m+1).
pub fn rung_sites(basis: &FockBasis) -> Result<Vec<(usize, usize)>> {
    match basis.lattice.geometry {
        Geometry::Ladder(l) => Ok((0..l).map(|m| (ladder_site(m, 0), ladder_site(m, 1))).collect()),
        Geometry::Chain(n) if n % 2 == 0 => Ok((0..n / 2).map(|m| (2 * m, 2 * m + 1)).collect()),
        g => Err(Error::Mismatch(format!("no rung structure on {g:?}"))),
    }
}

/// Rung-local state index: 0 empty, 1 top only, 2 bottom only, 3 both.
fn rung_state(basis: &FockBasis, code: u64, (top, bot): (usize, usize)) -> usize {
    basis.occ(code, top) as usize + 2 * basis.occ(code, bot) as usize
}

fn set_rung(code: u64, (top, bot): (usize, usize), s: usize) -> u64 {
    let mask = (1u64 << top) | (1u64 << bot);
    let bits = ((s as u64 & 1) << top) | (((s as u64 >> 1) & 1) << bot);
    (code & !mask) | bits
}

// rung vectors over (empty, top, bottom, both)
const D_PLUS: [f64; 4] = [0.0, S, S, 0.0];
const D_MINUS: [f64; 4] = [0.0, S, -S, 0.0];
const D_EMPTY: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
const D_FULL: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

fn outer(ket: &[f64; 4], bra: &[f64; 4]) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] = ket[a] * bra[b];
        }
    }
    m
}

/// Σ_j Σ_{a,b} O[a][b] on every rung, as an operator on a hardcore basis.
fn rung_sum(basis: &FockBasis, rungs: &[(usize, usize)], op: &[[f64; 4]; 4]) -> SparseOperator {
    let mut trip = vec![];
    for (c, &code) in basis.states().iter().enumerate() {
        for &r in rungs {
            let b = rung_state(basis, code, r);
            for (a, row) in op.iter().enumerate() {
                if row[b] != 0.0 {
                    if let Some(k) = basis.index(set_rung(code, r, a)) {
                        trip.push((k, c, C64::new(row[b], 0.0)));
                    }
                }
            }
        }
    }
    SparseOperator::from_triplets(basis.dim(), trip)
}

#[derive(Clone, Debug)]
pub struct ScarTower {
    pub l: usize,
    pub rung_amplitude: f64,
    pub states: Vec<Vec<C64>>,
    pub energies: Vec<f64>,
    pub j_plus: SparseOperator,
    pub j_minus: SparseOperator,
    pub j_z: SparseOperator,
}

/// Tower ψ_n ∝ (J⁺)ⁿ |d⁻⟩^⊗L with nominal energies (L − 2n)·t_perp, on the one-particle-per-rung sector.
pub fn build_scar_tower(basis: &FockBasis, rung_amplitude: f64) -> Result<ScarTower> {
    if basis.lattice.n_max() != 1 {
        return Err(Error::Mismatch("scar tower needs a two-level basis".into()));
    }
    let rungs = rung_sites(basis)?;
    let l = rungs.len();
    if basis.constraint.total_particles != Some(l) || basis.constraint.total_sz2.is_some_and(|s| s != 0) {
        return Err(Error::Mismatch(format!("scar tower lives in the N = {l} sector")));
    }
    let j_plus = rung_sum(basis, &rungs, &outer(&D_PLUS, &D_MINUS));
    let j_minus = rung_sum(basis, &rungs, &outer(&D_MINUS, &D_PLUS));
    let pp = outer(&D_PLUS, &D_PLUS);
    let mm = outer(&D_MINUS, &D_MINUS);
    let mut z = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            z[a][b] = pp[a][b] - mm[a][b];
        }
    }
    let j_z = rung_sum(basis, &rungs, &z);

    let mut psi0 = vec![C64::new(0.0, 0.0); basis.dim()];
    for (k, &code) in basis.states().iter().enumerate() {
        let mut amp = 1.0;
        for &r in &rungs {
            amp *= D_MINUS[rung_state(basis, code, r)];
        }
        psi0[k] = C64::new(amp, 0.0);
    }
    let mut states = vec![psi0];
    for _ in 0..l {
        let mut next = j_plus.apply(states.last().unwrap());
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Numerical("J⁺ annihilated a tower state early".into()));
        }
        next.iter_mut().for_each(|z| *z /= norm);
        states.push(next);
    }
    let energies = (0..=l).map(|n| (l as f64 - 2.0 * n as f64) * rung_amplitude).collect();
    Ok(ScarTower { l, rung_amplitude, states, energies, j_plus, j_minus, j_z })
}

impl ScarTower {
    /// Σ_n |⟨ψ_n|ψ⟩|²
    pub fn subspace_weight(&self, psi: &[C64]) -> f64 {
        self.states.iter().map(|s| inner(s, psi).norm_sqr()).sum()
    }

    pub fn overlaps(&self, psi: &[C64]) -> Vec<C64> {
        self.states.iter().map(|s| inner(s, psi)).collect()
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// The part of the ladder Hamiltonian that annihilates the tower without commuting with J^±.
pub fn build_h_a(basis: &FockBasis, t_par: f64) -> Result<SparseOperator> {
    let rungs = rung_sites(basis)?;
    if basis.lattice.n_max() != 1 {
        return Err(Error::Mismatch("H_A needs a two-level basis".into()));
    }
    // (ket_j, ket_j+1, bra_j, bra_j+1, sign)
    let terms: [([f64; 4], [f64; 4], [f64; 4], [f64; 4], f64); 4] = [
        (D_EMPTY, D_MINUS, D_PLUS, D_EMPTY, 1.0),
        (D_MINUS, D_EMPTY, D_EMPTY, D_PLUS, 1.0),
        (D_MINUS, D_FULL, D_FULL, D_PLUS, -1.0),
        (D_FULL, D_MINUS, D_PLUS, D_FULL, -1.0),
    ];
    let mut trip = vec![];
    for (c, &code) in basis.states().iter().enumerate() {
        for w in rungs.windows(2) {
            let (r1, r2) = (w[0], w[1]);
            let (b1, b2) = (rung_state(basis, code, r1), rung_state(basis, code, r2));
            for (k1, k2, q1, q2, sign) in terms.iter() {
                // term and its Hermitian conjugate
                for (ket1, ket2, bra1, bra2) in [(k1, k2, q1, q2), (q1, q2, k1, k2)] {
                    let amp = sign * t_par * bra1[b1] * bra2[b2];
                    if amp == 0.0 {
                        continue;
                    }
                    for a1 in 0..4 {
                        for a2 in 0..4 {
                            let v = amp * ket1[a1] * ket2[a2];
                            if v == 0.0 {
                                continue;
                            }
                            let new = set_rung(set_rung(code, r1, a1), r2, a2);
                            if let Some(k) = basis.index(new) {
                                trip.push((k, c, C64::new(v, 0.0)));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), trip))
}

#[derive(Clone, Debug, Serialize)]
pub struct SgaReport {
    pub max_residual: f64,
    pub rayleigh: Vec<f64>,
    /// Mean of E_n − E_{n+1} over consecutive Rayleigh quotients.
    pub spacing: f64,
    pub spacing_spread: f64,
    pub h_a_norm: Option<f64>,
}

pub fn verify_sga(h: &SparseOperator, tower: &ScarTower, h_a: Option<&SparseOperator>) -> Result<SgaReport> {
    if h.dim != tower.states[0].len() {
        return Err(Error::Mismatch(format!("operator dim {} vs tower dim {}", h.dim, tower.states[0].len())));
    }
    let mut max_residual: f64 = 0.0;
    let mut rayleigh = vec![];
    for psi in &tower.states {
        let hp = h.apply(psi);
        let e = inner(psi, &hp).re;
        let r = hp.iter().zip(psi).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
        max_residual = max_residual.max(r);
        rayleigh.push(e);
    }
    let gaps: Vec<f64> = rayleigh.windows(2).map(|w| w[0] - w[1]).collect();
    let spacing = if gaps.is_empty() { 0.0 } else { gaps.iter().sum::<f64>() / gaps.len() as f64 };
    let spacing_spread = gaps.iter().map(|g| (g - spacing).abs()).fold(0.0, f64::max);
    let h_a_norm = h_a.map(|a| {
        tower
            .states
            .iter()
            .map(|psi| a.apply(psi).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    });
    Ok(SgaReport { max_residual, rayleigh, spacing, spacing_spread, h_a_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{LatticeSpec, ParticleKind, SectorConstraint};
    use crate::models::ladder::{build_pi_flux_ladder, scar_word, LadderParams};

    fn basis(l: usize) -> FockBasis {
        FockBasis::enumerate(LatticeSpec::ladder(l, ParticleKind::HardcoreBoson), SectorConstraint::particles(l)).unwrap()
    }

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn orthonormal_and_binomial() {
        let b = basis(5);
        let t = build_scar_tower(&b, 1.0).unwrap();
        assert_eq!(t.states.len(), 6);
        for (m, x) in t.states.iter().enumerate() {
            for (n, y) in t.states.iter().enumerate() {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((inner(x, y).norm() - want).abs() < 1e-12);
            }
        }
        let mut psi = vec![C64::new(0.0, 0.0); b.dim()];
        psi[b.configuration_index(&scar_word(5)).unwrap()] = C64::new(1.0, 0.0);
        for (n, c) in t.overlaps(&psi).iter().enumerate() {
            assert!((c.norm_sqr() - binomial(5, n) / 32.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_rung_tower() {
        let b = basis(1);
        let t = build_scar_tower(&b, 1.0).unwrap();
        let top = b.configuration_index(&[1, 0]).unwrap();
        let bot = b.configuration_index(&[0, 1]).unwrap();
        assert!((t.states[0][top].re - S).abs() < 1e-15 && (t.states[0][bot].re + S).abs() < 1e-15);
        assert!((t.states[1][top].re.abs() - S).abs() < 1e-15);
        assert!((t.states[1][top] - t.states[1][bot]).norm() < 1e-15);
    }

    #[test]
    fn sga_on_ladder() {
        let b = basis(4);
        let mut p = LadderParams::new(4, 0.8, 1.0);
        p.t_nn = 0.3;
        p.t_nnn = 0.2;
        let h = build_pi_flux_ladder(&b, &p).unwrap();
        let t = build_scar_tower(&b, 0.8).unwrap();
        let r = verify_sga(&h, &t, Some(&build_h_a(&b, 1.0).unwrap())).unwrap();
        assert!(r.max_residual < 1e-12);
        assert!((r.spacing - 1.6).abs() < 1e-12 && r.spacing_spread < 1e-12);
        assert!(r.h_a_norm.unwrap() < 1e-12);
        for (e, n) in r.rayleigh.iter().zip(&t.energies) {
            assert!((e - n).abs() < 1e-12);
        }
    }

    #[test]
    fn h_a_is_hermitian_and_nontrivial() {
        let b = basis(3);
        let a = build_h_a(&b, 1.0).unwrap();
        assert!(a.hermiticity_error() < 1e-15);
        assert!(a.nnz() > 0);
    }

    #[test]
    fn raising_and_lowering() {
        let b = basis(3);
        let t = build_scar_tower(&b, 1.0).unwrap();
        // J⁻ is the adjoint of J⁺
        let d1 = t.j_plus.to_dense();
        let d2 = t.j_minus.to_dense();
        let n = b.dim();
        for r in 0..n {
            for c in 0..n {
                assert!((d1[r * n + c] - d2[c * n + r].conj()).norm() < 1e-15);
            }
        }
        let z = t.j_z.apply(&t.states[0]);
        for (a, b) in z.iter().zip(&t.states[0]) {
            assert!((a + b * 3.0).norm() < 1e-12);
        }
    }

    #[test]
    fn wrong_sector() {
        assert!(build_scar_tower(&FockBasis::enumerate(LatticeSpec::ladder(3, ParticleKind::HardcoreBoson), SectorConstraint::particles(2)).unwrap(), 1.0).is_err());
    }
}
