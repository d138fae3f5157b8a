use crate::error::{Error, Result};
use crate::linalg::{eigh_complex, eigh_real};
use crate::operator::SparseOperator;
use crate::C64;

pub const DEFAULT_DENSE_CAP: usize = 16_000;

#[derive(Clone, Debug)]
enum Vectors {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

/// Full spectrum of a Hermitian operator, eigenvalues ascending. Vector k is stored contiguously.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    vectors: Option<Vectors>,
    pub residuals: Vec<f64>,
}

pub fn full_diagonalize(h: &SparseOperator, vectors: bool, cap: usize) -> Result<EigenDecomposition> {
    let n = h.dim;
    if n > cap {
        return Err(Error::OverCap { dim: n, cap });
    }
    let (values, vecs) = if let Some(mut a) = h.to_dense_real() {
        let w = eigh_real(n, &mut a, vectors)?;
        (w, vectors.then_some(Vectors::Real(a)))
    } else {
        // column-major storage of H is the conjugate of its row-major copy
        let mut a: Vec<C64> = h.to_dense().into_iter().map(|z| z.conj()).collect();
        let w = eigh_complex(n, &mut a, vectors)?;
        (w, vectors.then_some(Vectors::Complex(a)))
    };
    let mut d = EigenDecomposition { values, vectors: vecs, residuals: vec![] };
    if vectors {
        d.residuals = (0..n).map(|k| d.residual(h, k)).collect();
    }
    Ok(d)
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn has_vectors(&self) -> bool {
        self.vectors.is_some()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        let n = self.dim();
        match self.vectors.as_ref().expect("decomposition without eigenvectors") {
            Vectors::Real(v) => v[k * n..(k + 1) * n].iter().map(|&x| C64::new(x, 0.0)).collect(),
            Vectors::Complex(v) => v[k * n..(k + 1) * n].to_vec(),
        }
    }

    /// ⟨v_k|ψ⟩ for every k.
    pub fn coefficients(&self, psi: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(psi.len(), n);
        match self.vectors.as_ref().expect("decomposition without eigenvectors") {
            Vectors::Real(v) => v
                .chunks_exact(n)
                .map(|col| col.iter().zip(psi).map(|(a, b)| b * *a).sum())
                .collect(),
            Vectors::Complex(v) => v
                .chunks_exact(n)
                .map(|col| col.iter().zip(psi).map(|(a, b)| a.conj() * b).sum())
                .collect(),
        }
    }

    /// Σ_k c_k v_k
    pub fn synthesize(&self, coeffs: &[C64], out: &mut [C64]) {
        let n = self.dim();
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        match self.vectors.as_ref().expect("decomposition without eigenvectors") {
            Vectors::Real(v) => {
                for (col, c) in v.chunks_exact(n).zip(coeffs) {
                    for (o, a) in out.iter_mut().zip(col) {
                        *o += c * *a;
                    }
                }
            }
            Vectors::Complex(v) => {
                for (col, c) in v.chunks_exact(n).zip(coeffs) {
                    for (o, a) in out.iter_mut().zip(col) {
                        *o += c * a;
                    }
                }
            }
        }
    }

    fn residual(&self, h: &SparseOperator, k: usize) -> f64 {
        let v = self.vector(k);
        let hv = h.apply(&v);
        hv.iter().zip(&v).map(|(a, b)| (a - b * self.values[k]).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{FockBasis, LatticeSpec, ParticleKind, SectorConstraint};
    use crate::models::ladder::{build_pi_flux_ladder, LadderParams};

    #[test]
    fn single_rung() {
        let b = FockBasis::enumerate(LatticeSpec::ladder(1, ParticleKind::HardcoreBoson), SectorConstraint::particles(1)).unwrap();
        let h = build_pi_flux_ladder(&b, &LadderParams::new(1, 0.7, 1.0)).unwrap();
        let d = full_diagonalize(&h, true, 10).unwrap();
        assert!((d.values[0] + 0.7).abs() < 1e-14 && (d.values[1] - 0.7).abs() < 1e-14);
        assert!(d.max_residual() < 1e-12);
    }

    #[test]
    fn trace_and_residuals() {
        let b = FockBasis::enumerate(LatticeSpec::ladder(4, ParticleKind::HardcoreBoson), SectorConstraint::particles(4)).unwrap();
        let mut p = LadderParams::new(4, 1.0, 0.8);
        p.t_nn = 0.3;
        let h = build_pi_flux_ladder(&b, &p).unwrap();
        let d = full_diagonalize(&h, true, 100).unwrap();
        let s: f64 = d.values.iter().sum();
        assert!((s - h.trace()).abs() < 1e-8 * (1.0 + h.trace().abs()));
        assert!(d.max_residual() < 1e-9);
    }

    #[test]
    fn complex_vectors_round_trip() {
        let trip = vec![
            (0, 1, C64::new(0.0, 1.0)),
            (1, 0, C64::new(0.0, -1.0)),
            (1, 2, C64::new(0.5, 0.5)),
            (2, 1, C64::new(0.5, -0.5)),
            (2, 2, C64::new(0.3, 0.0)),
        ];
        let h = SparseOperator::from_triplets(3, trip);
        let d = full_diagonalize(&h, true, 10).unwrap();
        assert!(d.max_residual() < 1e-12);
        let psi = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
        let mut back = vec![C64::new(0.0, 0.0); 3];
        d.synthesize(&d.coefficients(&psi), &mut back);
        for (a, b) in back.iter().zip(&psi) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn over_cap() {
        let h = SparseOperator::zero(20);
        assert!(matches!(full_diagonalize(&h, false, 10), Err(Error::OverCap { .. })));
    }
}
