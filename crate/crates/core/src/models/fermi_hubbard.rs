use serde::{Deserialize, Serialize};

use crate::basis::{Boundary, FockBasis, Geometry, LatticeSpec, ParticleKind};
use crate::error::{Error, Result};
use crate::operator::{SparseOperator, Statistics, Terms};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermiHubbardParams {
    pub geometry: Geometry,
    pub t: f64,
    pub u: f64,
    pub w: f64,
    pub h_x: f64,
    pub h_z: f64,
    #[serde(default)]
    pub boundary: Boundary,
    /// Optional pair weights V_ij replacing the nearest-neighbour W bonds.
    #[serde(default)]
    pub w_weights: Option<Vec<(usize, usize, f64)>>,
}

impl FermiHubbardParams {
    pub fn chain(l: usize, boundary: Boundary) -> Self {
        FermiHubbardParams { geometry: Geometry::Chain(l), t: 1.0, u: 100.0, w: 1.0, h_x: 2.0, h_z: -2.0, boundary, w_weights: None }
    }

    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec { geometry: self.geometry, boundary: self.boundary, particle: ParticleKind::SpinfulFermion }
    }
}

/// Nearest-neighbour site pairs of a chain or rectangle (site = x + Lx·y).
pub fn bonds(geometry: Geometry, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out = vec![];
    let mut push = |a: usize, b: usize| {
        let p = (a.min(b), a.max(b));
        if a != b && !out.contains(&p) {
            out.push(p);
        }
    };
    let (lx, ly) = match geometry {
        Geometry::Chain(l) => (l, 1),
        Geometry::Rectangle(x, y) => (x, y),
        Geometry::Ladder(l) => (l, 2),
    };
    for y in 0..ly {
        for x in 0..lx {
            let s = x + lx * y;
            if x + 1 < lx {
                push(s, s + 1);
            } else if boundary == Boundary::Periodic {
                push(s, lx * y);
            }
            if ly > 1 {
                if y + 1 < ly {
                    push(s, s + lx);
                } else if boundary == Boundary::Periodic {
                    push(s, x);
                }
            }
        }
    }
    out
}

pub fn build_terms(p: &FermiHubbardParams) -> Terms {
    let lat = p.lattice();
    let n = lat.n_sites();
    let mut t = Terms::new(Statistics::Fermion, 2 * n);
    let nn = bonds(p.geometry, p.boundary);
    for &(i, j) in &nn {
        for s in 0..2 {
            t.hop_real(2 * i + s, 2 * j + s, p.t);
        }
    }
    for i in 0..n {
        if p.u != 0.0 {
            t.density.push((2 * i, 2 * i + 1, p.u));
        }
        t.onsite[2 * i] += p.h_z / 2.0;
        t.onsite[2 * i + 1] -= p.h_z / 2.0;
        t.hop_real(2 * i, 2 * i + 1, p.h_x / 2.0);
    }
    let weights: Vec<(usize, usize, f64)> = match &p.w_weights {
        Some(w) => w.clone(),
        None => nn.iter().map(|&(i, j)| (i, j, p.w)).collect(),
    };
    // n_i S^z_j + n_j S^z_i with n = n↑ + n↓ and S^z = (n↑ − n↓)/2
    for (i, j, w) in weights {
        if w == 0.0 {
            continue;
        }
        for (a, b) in [(i, j), (j, i)] {
            for s in 0..2 {
                t.density.push((2 * a + s, 2 * b, w / 2.0));
                t.density.push((2 * a + s, 2 * b + 1, -w / 2.0));
            }
        }
    }
    t
}

pub fn build_fermi_hubbard(basis: &FockBasis, p: &FermiHubbardParams) -> Result<SparseOperator> {
    if basis.lattice != p.lattice() {
        return Err(Error::Mismatch(format!("Fermi-Hubbard params vs basis {:?}", basis.lattice)));
    }
    if basis.constraint.total_sz2.is_some() && p.h_x != 0.0 {
        return Err(Error::Mismatch("h_x mixes S^z sectors; drop the S^z constraint".into()));
    }
    SparseOperator::from_terms(basis, &build_terms(p))
}

/// Global spin component ('x', 'y' or 'z') as an operator on the basis.
pub fn total_spin(basis: &FockBasis, component: char) -> Result<SparseOperator> {
    let n = basis.lattice.n_sites();
    let mut t = Terms::new(Statistics::Fermion, 2 * n);
    for i in 0..n {
        match component {
            'x' => t.hop_real(2 * i, 2 * i + 1, 0.5),
            'y' => t.hop(2 * i, 2 * i + 1, C64::new(0.0, -0.5)),
            'z' => {
                t.onsite[2 * i] = 0.5;
                t.onsite[2 * i + 1] = -0.5;
            }
            _ => return Err(Error::Invalid(format!("spin component {component}"))),
        }
    }
    SparseOperator::from_terms(basis, &t)
}

/// S^z of one site as a diagonal over the basis.
pub fn site_sz(basis: &FockBasis, site: usize) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|&c| 0.5 * (basis.occ(c, 2 * site) as f64 - basis.occ(c, 2 * site + 1) as f64))
        .collect()
}

/// One spin-up fermion on every site.
pub fn all_up_word(n_sites: usize) -> Vec<u8> {
    (0..2 * n_sites).map(|m| (m % 2 == 0) as u8).collect()
}
