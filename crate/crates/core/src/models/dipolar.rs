//! Zig-zag dipolar spin chain: geometry, couplings and the spin-exchange Hamiltonian.
//!
//! Site k sits on rung m = k/2. With leg vector D and rung vector R (|R| = r01 = 1),
//! rung m has base m·D; even rungs put site 2m at the base and 2m+1 at base+R,
//! odd rungs the other way round, so that 0 3 4 7 ... and 1 2 5 6 ... form the two legs.
//! Couplings 02 and 13 are the frustrated leg bonds, 03 and 12 sit at the magic angle.

use serde::{Deserialize, Serialize};

use crate::basis::{FockBasis, ParticleKind};
use crate::error::{Error, Result};
use crate::operator::{SparseOperator, Statistics, Terms};

pub type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// dipole_scale · (1 − 3cos²θ) / r³, θ between the axis and r_i − r_j.
pub fn dipolar_coupling(ri: Vec3, rj: Vec3, axis: Vec3, dipole_scale: f64) -> Result<f64> {
    let d = sub(ri, rj);
    let r = norm(d);
    if r == 0.0 {
        return Err(Error::Invalid("coincident dipoles".into()));
    }
    let c = dot(d, axis) / (r * norm(axis));
    Ok(dipole_scale * (1.0 - 3.0 * c * c) / (r * r * r))
}

const MAGIC_COS: f64 = 0.577_350_269_189_625_8; // 1/√3

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZigzagGeometry {
    pub n_sites: usize,
    pub positions: Vec<Vec3>,
    pub quantization_axis: Vec3,
    pub tilt: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r01: f64,
    pub dipole_scale: f64,
    /// Sign of the in-plane azimuth of the axis.
    pub branch: i8,
}

/// Couplings of the first two rungs, in units of |J01|.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitCouplings {
    pub j01: f64,
    pub j02: f64,
    pub j13: f64,
    pub j03: f64,
    pub j04: f64,
    pub j05: f64,
    pub j14: f64,
}

impl UnitCouplings {
    pub fn ratio(&self) -> f64 {
        (self.j02 / self.j01).abs()
    }

    pub fn long_range_ratio(&self) -> f64 {
        (self.j05.abs() + self.j14.abs()) / self.j02.abs()
    }

    pub fn magic_residual(&self) -> f64 {
        (self.j03 / self.j01).abs()
    }

    pub fn frustration_residual(&self) -> f64 {
        ((self.j02 + self.j13) / self.j01).abs()
    }
}

fn leg_vectors(alpha: f64, beta: f64) -> Option<(Vec3, Vec3)> {
    if !(alpha > 0.0 && alpha < std::f64::consts::PI && beta > 0.0 && beta < std::f64::consts::PI) {
        return None;
    }
    let (ca, cb) = (1.0 / alpha.tan(), 1.0 / beta.tan());
    let h = 1.0 / (1.0 + (ca - cb).powi(2) / 4.0).sqrt();
    let d = h / 2.0 * (ca + cb);
    let rx = h / 2.0 * (ca - cb);
    Some(([d, 0.0, 0.0], [rx, -h, 0.0]))
}

fn axis_for(tilt: f64, branch: i8) -> Option<Vec3> {
    let c = MAGIC_COS / tilt.cos();
    if !(c <= 1.0) {
        return None;
    }
    let psi = branch as f64 * c.acos();
    Some([tilt.cos() * psi.cos(), tilt.cos() * psi.sin(), tilt.sin()])
}

impl ZigzagGeometry {
    /// Constructive recipe: D along x, axis at the magic angle to D and tilted out of plane.
    pub fn from_angles(alpha: f64, beta: f64, tilt: f64, branch: i8, n_sites: usize) -> Result<Self> {
        let (d, r) = leg_vectors(alpha, beta).ok_or_else(|| Error::Infeasible("angles outside (0, π)".into()))?;
        let axis = axis_for(tilt, branch)
            .ok_or_else(|| Error::Infeasible(format!("tilt {:.3}° leaves no magic-angle azimuth", tilt.to_degrees())))?;
        let positions = (0..n_sites)
            .map(|k| {
                let m = k / 2;
                let base = [m as f64 * d[0], 0.0, 0.0];
                let shifted = (k % 2 == 1) != (m % 2 == 1);
                if shifted {
                    [base[0] + r[0], r[1], 0.0]
                } else {
                    base
                }
            })
            .collect();
        let mut g = ZigzagGeometry {
            n_sites,
            positions,
            quantization_axis: axis,
            tilt,
            alpha,
            beta,
            r01: 1.0,
            dipole_scale: 1.0,
            branch,
        };
        // energies in units of |J01|
        let j01 = dipolar_coupling([0.0; 3], r, axis, 1.0)?;
        g.dipole_scale = 1.0 / j01.abs();
        Ok(g)
    }

    pub fn unit_couplings(&self) -> UnitCouplings {
        let (d, r) = leg_vectors(self.alpha, self.beta).expect("valid geometry");
        let a = self.quantization_axis;
        let s = self.dipole_scale;
        let j = |v: Vec3| dipolar_coupling([0.0; 3], v, a, s).unwrap_or(f64::NAN);
        let add = |x: Vec3, y: Vec3, k: f64| [x[0] + k * y[0], x[1] + k * y[1], x[2] + k * y[2]];
        UnitCouplings {
            j01: j(r),
            j02: j(add(d, r, 1.0)),
            j13: j(add(d, r, -1.0)),
            j03: j(d),
            j04: j(add(d, d, 1.0)),
            j05: j(add(add(d, d, 1.0), r, 1.0)),
            j14: j(add(add(d, d, 1.0), r, -1.0)),
        }
    }

    pub fn rung_of(&self, site: usize) -> usize {
        site / 2
    }
}

/// Roots β of J02 + J13 = 0 at fixed α, tilt and branch.
fn beta_roots(alpha: f64, tilt: f64, branch: i8) -> Vec<f64> {
    let f = |b: f64| -> Option<f64> {
        let g = ZigzagGeometry::from_angles(alpha, b, tilt, branch, 4).ok()?;
        let u = g.unit_couplings();
        Some((u.j02 + u.j13) / u.j01.abs())
    };
    let n = 1800;
    let lo = 0.1f64.to_radians();
    let step = (179.8f64.to_radians()) / n as f64;
    let mut roots = vec![];
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=n {
        let b = lo + step * k as f64;
        let v = f(b);
        if let (Some((b0, v0)), Some(v1)) = (prev, v) {
            if v0.signum() != v1.signum() && v0.abs() < 50.0 && v1.abs() < 50.0 {
                if let Some(r) = bisect(|x| f(x).unwrap_or(f64::NAN), b0, b, v0) {
                    roots.push(r);
                }
            }
        }
        prev = v.map(|v| (b, v));
    }
    roots
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> Option<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.is_nan() {
            return None;
        }
        if fm == 0.0 || (b - a).abs() < 1e-15 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Frustrated geometry at fixed α: the root β (over both azimuth branches) with the
/// weakest long-range couplings.
pub fn frustrated_geometry(alpha: f64, tilt: f64, n_sites: usize) -> Option<ZigzagGeometry> {
    let mut best: Option<(f64, ZigzagGeometry)> = None;
    for branch in [1i8, -1] {
        for beta in beta_roots(alpha, tilt, branch) {
            let Ok(g) = ZigzagGeometry::from_angles(alpha, beta, tilt, branch, n_sites) else { continue };
            let lr = g.unit_couplings().long_range_ratio();
            if best.as_ref().map_or(true, |(x, _)| lr < *x) {
                best = Some((lr, g));
            }
        }
    }
    best.map(|(_, g)| g)
}

#[derive(Clone, Debug)]
pub struct GeometrySolution {
    pub geometry: ZigzagGeometry,
    pub achieved_ratio: f64,
    /// True when the target lies beyond the branch maximum and the closest point was returned.
    pub at_fold: bool,
}

/// Finds α (and β) at fixed tilt so that |J02/J01| equals `ratio`, with J03 = 0 and
/// J02 + J13 = 0. A target within `ratio_tol` beyond the attainable range returns the
/// closest attainable geometry.
pub fn solve_zigzag_geometry(ratio: f64, tilt: f64, ratio_tol: f64, n_sites: usize) -> Result<GeometrySolution> {
    let ratio_at = |a: f64| frustrated_geometry(a, tilt, 4).map(|g| g.unit_couplings().ratio());
    let step = 0.25f64.to_radians();
    let grid: Vec<f64> = (4..=356).map(|k| k as f64 * step).collect();
    let vals: Vec<Option<f64>> = grid.iter().map(|&a| ratio_at(a)).collect();
    let mut candidates: Vec<(f64, ZigzagGeometry)> = vec![];
    for k in 0..grid.len() - 1 {
        let (Some(v0), Some(v1)) = (vals[k], vals[k + 1]) else { continue };
        if (v0 - ratio).signum() == (v1 - ratio).signum() {
            continue;
        }
        let f = |a: f64| ratio_at(a).map_or(f64::NAN, |v| v - ratio);
        let Some(a) = bisect(f, grid[k], grid[k + 1], v0 - ratio) else { continue };
        let Some(g) = frustrated_geometry(a, tilt, n_sites) else { continue };
        // reject spurious brackets across a switch between root branches
        if (g.unit_couplings().ratio() - ratio).abs() < 1e-9 {
            candidates.push((g.unit_couplings().long_range_ratio(), g));
        }
    }
    if let Some((_, g)) = candidates.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)) {
        let achieved = g.unit_couplings().ratio();
        return Ok(GeometrySolution { geometry: g, achieved_ratio: achieved, at_fold: false });
    }
    // closest approach: refine the best grid point by golden-section search
    let (k, _) = vals
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (k, (v - ratio).abs())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Infeasible(format!("no frustrated geometry at tilt {:.2}°", tilt.to_degrees())))?;
    let miss = |a: f64| ratio_at(a).map_or(f64::INFINITY, |v| (v - ratio).abs());
    let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = hi - gr * (hi - lo);
        let x2 = lo + gr * (hi - lo);
        if miss(x1) < miss(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let a = 0.5 * (lo + hi);
    let g = frustrated_geometry(a, tilt, n_sites).ok_or_else(|| Error::Infeasible("fold refinement failed".into()))?;
    let achieved = g.unit_couplings().ratio();
    if (achieved - ratio).abs() > ratio_tol {
        return Err(Error::Infeasible(format!(
            "ratio {ratio} unreachable at tilt {:.2}° (closest {achieved:.5})",
            tilt.to_degrees()
        )));
    }
    Ok(GeometrySolution { geometry: g, achieved_ratio: achieved, at_fold: true })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    #[default]
    None,
    /// Keep pairs whose rung indices differ by at most k.
    Rungs(usize),
    Distance(f64),
}

#[derive(Clone, Debug)]
pub struct CouplingGraph {
    pub n: usize,
    pub j: Vec<f64>,
    pub geometry: ZigzagGeometry,
    pub cutoff: Cutoff,
}

impl CouplingGraph {
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.j[i * self.n + k]
    }

    /// (i, j, J_ij) for i < j and J_ij ≠ 0.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut e = vec![];
        for i in 0..self.n {
            for k in i + 1..self.n {
                if self.get(i, k) != 0.0 {
                    e.push((i, k, self.get(i, k)));
                }
            }
        }
        e
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,J_ij\n");
        for i in 0..self.n {
            for k in i + 1..self.n {
                s.push_str(&format!("{},{},{:.16e}\n", i, k, self.get(i, k)));
            }
        }
        s
    }
}

pub fn build_coupling_graph(geometry: &ZigzagGeometry, cutoff: Cutoff) -> Result<CouplingGraph> {
    let n = geometry.n_sites;
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let keep = match cutoff {
                Cutoff::None => true,
                Cutoff::Rungs(k) => geometry.rung_of(a).abs_diff(geometry.rung_of(b)) <= k,
                Cutoff::Distance(r) => norm(sub(geometry.positions[a], geometry.positions[b])) <= r,
            };
            if keep {
                let v = dipolar_coupling(geometry.positions[a], geometry.positions[b], geometry.quantization_axis, geometry.dipole_scale)?;
                j[a * n + b] = v;
                j[b * n + a] = v;
            }
        }
    }
    Ok(CouplingGraph { n, j, geometry: geometry.clone(), cutoff })
}

/// Σ_{i<j} (J_ij/2)(S⁺_i S⁻_j + h.c.), with spin up as an occupied mode.
pub fn spin_exchange_terms(graph: &CouplingGraph) -> Terms {
    let mut t = Terms::new(Statistics::HardcoreBoson, graph.n);
    for (i, k, v) in graph.edges() {
        t.hop_real(i, k, v / 2.0);
    }
    t
}

pub fn build_spin_exchange(basis: &FockBasis, graph: &CouplingGraph) -> Result<SparseOperator> {
    let lat = &basis.lattice;
    if lat.n_modes() != graph.n || !matches!(lat.particle, ParticleKind::SpinHalf | ParticleKind::HardcoreBoson) {
        return Err(Error::Mismatch(format!("graph with {} sites vs basis {:?}", graph.n, lat)));
    }
    SparseOperator::from_terms(basis, &spin_exchange_terms(graph))
}

/// ↓↑↓↑...: odd sites up.
pub fn scar_word(n: usize) -> Vec<u8> {
    (0..n).map(|k| (k % 2) as u8).collect()
}

/// Thermal reference states: 0110 0110 ... and 1100 1100 ...
pub fn thermal_word(which: u8, n: usize) -> Vec<u8> {
    let pattern: [u8; 4] = if which == 1 { [0, 1, 1, 0] } else { [1, 1, 0, 0] };
    (0..n).map(|k| pattern[k % 4]).collect()
}
