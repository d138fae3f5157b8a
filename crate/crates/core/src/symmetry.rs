//! Symmetry-resolved bases built from orbit representatives.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::{ladder_coords, ladder_site, Boundary, FockBasis, Geometry, ParticleKind};
use crate::error::{Error, Result};
use crate::operator::{SparseOperator, Terms};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    /// Translation by one rung (periodic boundary only).
    Translation,
    /// Spatial reversal of the rung (or site) index.
    Reflection,
    /// Leg swap dressed with a π phase on odd rungs.
    LegSwap,
    /// Particle-hole / spin flip.
    Flip,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Symmetry::Translation => "K_x",
            Symmetry::Reflection => "P_y",
            Symmetry::LegSwap => "P_x'",
            Symmetry::Flip => "F",
        };
        f.write_str(s)
    }
}

/// Requested quantum numbers. `kx` is an integer index k with T eigenvalue exp(2πik/L).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetrySector {
    pub kx: Option<i64>,
    pub py: Option<i8>,
    pub px_prime: Option<i8>,
    pub flip: Option<i8>,
}

impl SymmetrySector {
    fn requested(&self) -> Vec<(Symmetry, C64)> {
        let mut v = vec![];
        let sign = |s: i8| C64::new(s as f64, 0.0);
        if let Some(f) = self.flip {
            v.push((Symmetry::Flip, sign(f)));
        }
        if let Some(p) = self.px_prime {
            v.push((Symmetry::LegSwap, sign(p)));
        }
        if let Some(p) = self.py {
            v.push((Symmetry::Reflection, sign(p)));
        }
        if let Some(k) = self.kx {
            // eigenvalue filled in once L is known
            v.push((Symmetry::Translation, C64::new(k as f64, f64::NAN)));
        }
        v
    }
}

#[derive(Clone, Debug)]
struct Generator {
    kind: Symmetry,
    /// image site of each site
    perm: Vec<usize>,
    /// sign picked up per occupied site (before the move)
    site_sign: Vec<f64>,
    flip: bool,
    order: usize,
    eigenvalue: C64,
}

impl Generator {
    fn apply(&self, code: u64, n_sites: usize) -> (u64, f64) {
        let mut phase = 1.0;
        let mut src = code;
        if self.flip {
            src = !code & ((1u64 << n_sites) - 1);
        }
        let mut out = 0u64;
        let mut s = src;
        while s != 0 {
            let i = s.trailing_zeros() as usize;
            s &= s - 1;
            out |= 1 << self.perm[i];
            phase *= self.site_sign[i];
        }
        (out, phase)
    }
}

#[derive(Clone, Debug)]
struct Element {
    /// powers of each generator, applied in generator order
    powers: Vec<usize>,
    character: C64,
}

#[derive(Clone, Debug)]
pub struct ReducedBasis {
    pub sector: SymmetrySector,
    pub parent_dim: usize,
    n_sites: usize,
    gens: Vec<Generator>,
    elems: Vec<Element>,
    reps: Vec<u64>,
    norms: Vec<f64>,
    real: bool,
}

fn build_generator(basis: &FockBasis, kind: Symmetry, eig: C64) -> Result<Generator> {
    let lat = &basis.lattice;
    let n = lat.n_sites();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut site_sign = vec![1.0; n];
    let mut flip = false;
    let order;
    let mut eigenvalue = eig;
    match (kind, lat.geometry) {
        (Symmetry::Flip, _) => {
            flip = true;
            order = 2;
        }
        (Symmetry::Reflection, Geometry::Ladder(l)) => {
            for s in 0..n {
                let (m, leg) = ladder_coords(s);
                perm[s] = ladder_site(l - 1 - m, leg);
            }
            order = 2;
        }
        (Symmetry::Reflection, Geometry::Chain(l)) => {
            for s in 0..n {
                perm[s] = l - 1 - s;
            }
            order = 2;
        }
        (Symmetry::LegSwap, Geometry::Ladder(_)) => {
            for s in 0..n {
                let (m, leg) = ladder_coords(s);
                perm[s] = ladder_site(m, 1 - leg);
                site_sign[s] = if m % 2 == 0 { 1.0 } else { -1.0 };
            }
            order = 2;
        }
        (Symmetry::Translation, Geometry::Ladder(l)) | (Symmetry::Translation, Geometry::Chain(l)) => {
            if lat.boundary != Boundary::Periodic {
                return Err(Error::IncompatibleSymmetry(format!("{kind} needs a periodic boundary")));
            }
            for s in 0..n {
                perm[s] = match lat.geometry {
                    Geometry::Ladder(_) => {
                        let (m, leg) = ladder_coords(s);
                        ladder_site((m + 1) % l, leg)
                    }
                    _ => (s + 1) % l,
                };
            }
            order = l;
            let k = eig.re.round() as i64;
            eigenvalue = C64::from_polar(1.0, 2.0 * PI * k.rem_euclid(l as i64) as f64 / l as f64);
        }
        _ => return Err(Error::IncompatibleSymmetry(format!("{kind} on this geometry"))),
    }
    Ok(Generator { kind, perm, site_sign, flip, order, eigenvalue })
}

impl ReducedBasis {
    /// Builds the sector basis. `tags` lists the symmetries the Hamiltonian commutes with.
    pub fn new(basis: &FockBasis, sector: SymmetrySector, tags: &[Symmetry]) -> Result<Self> {
        let lat = &basis.lattice;
        let requested = sector.requested();
        if !requested.is_empty() && !matches!(lat.particle, ParticleKind::HardcoreBoson | ParticleKind::SpinHalf) {
            return Err(Error::IncompatibleSymmetry("symmetry reduction needs two-level bosonic modes".into()));
        }
        let mut gens = vec![];
        for (kind, eig) in requested {
            if !tags.contains(&kind) {
                return Err(Error::IncompatibleSymmetry(kind.to_string()));
            }
            gens.push(build_generator(basis, kind, eig)?);
        }
        let n_sites = lat.n_sites();
        if gens.iter().any(|g| g.flip) && basis.constraint.total_particles.map_or(false, |n| 2 * n != n_sites) {
            return Err(Error::IncompatibleSymmetry("F away from half filling".into()));
        }
        // pairwise compatibility on a sample of states
        for a in 0..gens.len() {
            for b in a + 1..gens.len() {
                let (ga, gb) = (&gens[a], &gens[b]);
                let dihedral = matches!(
                    (ga.kind, gb.kind),
                    (Symmetry::Reflection, Symmetry::Translation) | (Symmetry::Translation, Symmetry::Reflection)
                );
                if dihedral {
                    let t = if ga.kind == Symmetry::Translation { ga } else { gb };
                    if t.eigenvalue.im.abs() > 1e-12 {
                        return Err(Error::IncompatibleSymmetry(format!("P_y with K_x eigenvalue {}", t.eigenvalue)));
                    }
                    continue;
                }
                let step = (basis.dim() / 500).max(1);
                for i in (0..basis.dim()).step_by(step) {
                    let s = basis.state(i);
                    let (x1, p1) = ga.apply(s, n_sites);
                    let (y1, q1) = gb.apply(x1, n_sites);
                    let (x2, p2) = gb.apply(s, n_sites);
                    let (y2, q2) = ga.apply(x2, n_sites);
                    if y1 != y2 || (p1 * q1 - p2 * q2).abs() > 1e-12 {
                        return Err(Error::IncompatibleSymmetry(format!("{} and {} do not commute here", ga.kind, gb.kind)));
                    }
                }
            }
        }
        let mut elems = vec![Element { powers: vec![], character: C64::new(1.0, 0.0) }];
        for g in &gens {
            let mut next = vec![];
            for e in &elems {
                let mut chi = e.character;
                for p in 0..g.order {
                    let mut powers = e.powers.clone();
                    powers.push(p);
                    next.push(Element { powers, character: chi });
                    chi *= g.eigenvalue;
                }
            }
            elems = next;
        }
        let real = elems.iter().all(|e| e.character.im.abs() < 1e-14);
        let mut rb = ReducedBasis {
            sector,
            parent_dim: basis.dim(),
            n_sites,
            gens,
            elems,
            reps: vec![],
            norms: vec![],
            real,
        };
        let mut images = vec![];
        for &s in basis.states() {
            rb.orbit(s, &mut images);
            if images.iter().any(|&(c, _)| c < s) {
                continue;
            }
            if images.iter().any(|&(c, _)| basis.index(c).is_none()) {
                return Err(Error::IncompatibleSymmetry("symmetry maps out of the basis sector".into()));
            }
            let w = rb.projection(&images, s);
            if w.re > 1e-10 {
                rb.reps.push(s);
                rb.norms.push(w.re.sqrt());
            }
        }
        Ok(rb)
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn representatives(&self) -> &[u64] {
        &self.reps
    }

    /// g(code) with phase for every group element, in element order.
    fn orbit(&self, code: u64, out: &mut Vec<(u64, C64)>) {
        out.clear();
        for e in &self.elems {
            let mut c = code;
            let mut ph = 1.0;
            for (g, &p) in self.gens.iter().zip(&e.powers) {
                for _ in 0..p {
                    let (c2, q) = g.apply(c, self.n_sites);
                    c = c2;
                    ph *= q;
                }
            }
            out.push((c, C64::new(ph, 0.0)));
        }
    }

    /// ⟨target|P|c⟩ given the orbit of c
    fn projection(&self, images: &[(u64, C64)], target: u64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (e, &(c, ph)) in self.elems.iter().zip(images) {
            if c == target {
                acc += e.character.conj() * ph;
            }
        }
        acc / self.elems.len() as f64
    }

    pub fn project(&self, basis: &FockBasis, terms: &Terms) -> Result<SparseOperator> {
        let mut trip = vec![];
        let mut buf = vec![];
        let mut images = vec![];
        for (col, &r) in self.reps.iter().enumerate() {
            buf.clear();
            terms.act(basis, r, &mut buf);
            for &(c, h) in &buf {
                self.orbit(c, &mut images);
                let rep = images.iter().map(|x| x.0).min().unwrap();
                let Ok(row) = self.reps.binary_search(&rep) else { continue };
                let w = self.projection(&images, rep);
                if w.norm() < 1e-14 {
                    continue;
                }
                trip.push((row, col, h * w / (self.norms[row] * self.norms[col])));
            }
        }
        if self.real && terms.is_real() {
            trip.iter_mut().for_each(|t| t.2.im = 0.0);
        }
        Ok(SparseOperator::from_triplets(self.dim(), trip))
    }

    pub fn is_real(&self) -> bool {
        self.real
    }
}
