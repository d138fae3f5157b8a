use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::dynamics::state::{norm, StateTrajectory};
use crate::error::{Error, Result};
use crate::linalg::tridiag_eig;
use crate::operator::SparseOperator;
use crate::spectral::diag::{full_diagonalize, EigenDecomposition};
use crate::C64;

pub const EIGEN_MAX_DIM: usize = 4000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Eigendecomposition,
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    pub order: usize,
    pub max_order: usize,
    /// Bound on the a-posteriori error estimate of a single step.
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { order: 30, max_order: 120, tol: 1e-11 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub steps: usize,
    pub matvecs: usize,
    pub max_norm_drift: f64,
}

impl RunStats {
    pub fn merge(&mut self, o: RunStats) {
        self.steps += o.steps;
        self.matvecs += o.matvecs;
        self.max_norm_drift = self.max_norm_drift.max(o.max_norm_drift);
    }
}

enum Kind {
    Eigen(EigenDecomposition),
    Krylov(KrylovOptions),
}

/// exp(−iHt) acting on states, by full eigendecomposition or adaptive Lanczos steps.
pub struct Propagator<'a> {
    h: &'a SparseOperator,
    kind: Kind,
}

impl<'a> Propagator<'a> {
    pub fn new(h: &'a SparseOperator, method: Method, krylov: KrylovOptions) -> Result<Self> {
        let eigen = match method {
            Method::Auto => h.dim <= EIGEN_MAX_DIM,
            Method::Eigendecomposition => true,
            Method::Krylov => false,
        };
        let kind = if eigen {
            Kind::Eigen(full_diagonalize(h, true, usize::MAX)?)
        } else {
            Kind::Krylov(krylov)
        };
        Ok(Propagator { h, kind })
    }

    pub fn method(&self) -> Method {
        match self.kind {
            Kind::Eigen(_) => Method::Eigendecomposition,
            Kind::Krylov(_) => Method::Krylov,
        }
    }

    pub fn dim(&self) -> usize {
        self.h.dim
    }

    /// Evolves `psi` through the increasing offsets `times` (≥ 0), calling `sample(k, ψ(times[k]))`.
    /// On return `psi` holds the state at the last offset.
    pub fn run(&self, psi: &mut Vec<C64>, times: &[f64], mut sample: impl FnMut(usize, &[C64])) -> Result<RunStats> {
        if psi.len() != self.h.dim {
            return Err(Error::Mismatch(format!("state dim {} vs operator dim {}", psi.len(), self.h.dim)));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::Invalid("sample times must be non-negative and strictly increasing".into()));
        }
        let n0 = norm(psi);
        let mut stats = match &self.kind {
            Kind::Eigen(d) => run_eigen(d, psi, times, &mut sample),
            Kind::Krylov(o) => run_krylov(self.h, o, psi, times, &mut sample)?,
        };
        stats.max_norm_drift = stats.max_norm_drift.max((norm(psi) - n0).abs());
        if stats.max_norm_drift > 1e-8 {
            warn!("norm drift {:.3e} during evolution", stats.max_norm_drift);
        }
        Ok(stats)
    }

    pub fn step(&self, psi: &mut Vec<C64>, dt: f64) -> Result<RunStats> {
        if dt == 0.0 {
            return Ok(RunStats::default());
        }
        self.run(psi, &[dt], |_, _| {})
    }
}

fn run_eigen(d: &EigenDecomposition, psi: &mut Vec<C64>, times: &[f64], sample: &mut impl FnMut(usize, &[C64])) -> RunStats {
    let c = d.coefficients(psi);
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    let mut ct = c.clone();
    let mut drift: f64 = 0.0;
    let n0 = norm(psi);
    for (k, &t) in times.iter().enumerate() {
        for ((x, c0), e) in ct.iter_mut().zip(&c).zip(&d.values) {
            *x = c0 * C64::from_polar(1.0, -e * t);
        }
        d.synthesize(&ct, &mut out);
        drift = drift.max((norm(&out) - n0).abs());
        sample(k, &out);
    }
    if !times.is_empty() {
        psi.copy_from_slice(&out);
    }
    RunStats { steps: times.len(), matvecs: 0, max_norm_drift: drift }
}

struct KrylovSpace {
    vectors: Vec<Vec<C64>>,
    nodes: Vec<f64>,
    /// Column-major eigenvectors of the tridiagonal matrix.
    evecs: Vec<f64>,
    /// β_m, zero after an invariant subspace was found.
    beta_last: f64,
}

impl KrylovSpace {
    fn build(h: &SparseOperator, psi: &[C64], m: usize) -> Result<(Self, usize)> {
        let n0 = norm(psi);
        let mut vectors = vec![psi.iter().map(|z| z / n0).collect::<Vec<_>>()];
        let (mut alpha, mut beta) = (vec![], vec![]);
        let mut w = vec![C64::new(0.0, 0.0); psi.len()];
        let mut beta_last = 0.0;
        let mut matvecs = 0;
        for j in 0..m {
            h.matvec(&vectors[j], &mut w);
            matvecs += 1;
            let a: f64 = vectors[j].iter().zip(&w).map(|(v, x)| (v.conj() * x).re).sum();
            alpha.push(a);
            for v in &vectors {
                let c: C64 = v.iter().zip(&w).map(|(p, q)| p.conj() * q).sum();
                w.iter_mut().zip(v).for_each(|(x, p)| *x -= c * p);
            }
            let b = norm(&w);
            let scale = alpha.iter().map(|x| x.abs()).chain(beta.iter().cloned()).fold(1.0, f64::max);
            if b < 1e-13 * scale {
                beta_last = 0.0;
                break;
            }
            if j + 1 == m {
                beta_last = b;
                break;
            }
            beta.push(b);
            vectors.push(w.iter().map(|z| z / b).collect());
        }
        let (nodes, evecs) = tridiag_eig(&alpha, &beta)?;
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite Lanczos coefficients".into()));
        }
        Ok((KrylovSpace { vectors, nodes, evecs, beta_last }, matvecs))
    }

    /// exp(−iTτ) e1 in the Lanczos basis.
    fn coeffs(&self, tau: f64) -> Vec<C64> {
        let m = self.nodes.len();
        let mut y = vec![C64::new(0.0, 0.0); m];
        for k in 0..m {
            let col = &self.evecs[k * m..(k + 1) * m];
            let f = C64::from_polar(col[0], -self.nodes[k] * tau);
            for (yi, s) in y.iter_mut().zip(col) {
                *yi += f * s;
            }
        }
        y
    }

    fn error(&self, tau: f64) -> f64 {
        if self.beta_last == 0.0 {
            return 0.0;
        }
        self.beta_last * self.coeffs(tau).last().unwrap().norm()
    }

    /// Largest τ ≤ limit with error(τ) ≤ tol.
    fn admissible_step(&self, limit: f64, tol: f64) -> f64 {
        if self.error(limit) <= tol {
            return limit;
        }
        let (mut lo, mut hi) = (0.0, limit);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.error(mid) <= tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn synthesize(&self, y: &[C64], scale: f64, out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (v, c) in self.vectors.iter().zip(y) {
            let c = c * scale;
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
    }
}

fn run_krylov(h: &SparseOperator, opts: &KrylovOptions, psi: &mut Vec<C64>, times: &[f64], sample: &mut impl FnMut(usize, &[C64])) -> Result<RunStats> {
    let mut stats = RunStats::default();
    let mut t = 0.0;
    let mut next = 0;
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    let n0 = norm(psi);
    while next < times.len() && times[next] == 0.0 {
        sample(next, psi);
        next += 1;
    }
    let mut order = opts.order.max(2);
    while next < times.len() {
        let remaining = times[times.len() - 1] - t;
        let scale = norm(psi);
        let (space, mv) = KrylovSpace::build(h, psi, order.min(h.dim))?;
        stats.matvecs += mv;
        let tau = space.admissible_step(remaining, opts.tol);
        if tau < 1e-9 * remaining.max(1.0) {
            if order >= opts.max_order {
                return Err(Error::Numerical(format!("Krylov step collapsed at order {order} (t = {t})")));
            }
            order = (order * 2).min(opts.max_order);
            debug!("raising Krylov order to {order}");
            continue;
        }
        let end = if tau == remaining { times[times.len() - 1] } else { t + tau };
        while next < times.len() && times[next] <= end {
            let y = space.coeffs(times[next] - t);
            space.synthesize(&y, scale, &mut out);
            stats.max_norm_drift = stats.max_norm_drift.max((norm(&out) - n0).abs());
            sample(next, &out);
            next += 1;
        }
        let y = space.coeffs(end - t);
        space.synthesize(&y, scale, &mut out);
        psi.copy_from_slice(&out);
        t = end;
        stats.steps += 1;
    }
    Ok(stats)
}

/// Stores ψ(t) at every requested time; use `Propagator::run` to stream observables instead.
pub fn evolve(h: &SparseOperator, psi0: &[C64], times: &[f64], method: Method) -> Result<StateTrajectory> {
    let p = Propagator::new(h, method, KrylovOptions::default())?;
    let mut psi = psi0.to_vec();
    let mut states = Vec::with_capacity(times.len());
    p.run(&mut psi, times, |_, s| states.push(s.to_vec()))?;
    Ok(StateTrajectory { times: times.to_vec(), states })
}

/// `n` samples per `period` from 0 to `t_max` inclusive.
pub fn time_grid(t_max: f64, period: f64, per_period: usize) -> Vec<f64> {
    let dt = period / per_period as f64;
    let n = (t_max / dt + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::state::distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> SparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = vec![];
        for r in 0..n {
            trip.push((r, r, C64::new(rng.random::<f64>() - 0.5, 0.0)));
            for c in r + 1..n {
                let z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.2;
                trip.push((r, c, z));
                trip.push((c, r, z.conj()));
            }
        }
        SparseOperator::from_triplets(n, trip)
    }

    fn random_state(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<C64> = (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let s = norm(&v);
        v.into_iter().map(|z| z / s).collect()
    }

    #[test]
    fn diagonal_phases() {
        let e = [0.3, -1.2, 2.5];
        let h = SparseOperator::diagonal(&e);
        let psi0 = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
        for method in [Method::Eigendecomposition, Method::Krylov] {
            let tr = evolve(&h, &psi0, &[0.0, 1.7, 4.0], method).unwrap();
            for (t, s) in tr.times.iter().zip(&tr.states) {
                for k in 0..3 {
                    assert!((s[k] - psi0[k] * C64::from_polar(1.0, -e[k] * t)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn krylov_matches_eigendecomposition() {
        let h = random_hermitian(200, 1);
        let psi0 = random_state(200, 2);
        let times = [0.5, 3.0, 10.0];
        let a = evolve(&h, &psi0, &times, Method::Eigendecomposition).unwrap();
        let b = evolve(&h, &psi0, &times, Method::Krylov).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(distance(x, y) < 1e-9, "{}", distance(x, y));
        }
    }

    #[test]
    fn dense_sampling_within_steps() {
        let h = random_hermitian(120, 3);
        let psi0 = random_state(120, 4);
        let times = time_grid(6.0, 1.0, 50);
        let a = evolve(&h, &psi0, &times, Method::Eigendecomposition).unwrap();
        let b = evolve(&h, &psi0, &times, Method::Krylov).unwrap();
        let worst = a.states.iter().zip(&b.states).map(|(x, y)| distance(x, y)).fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
        for s in &b.states {
            assert!((norm(s) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn invariant_subspace_breakdown() {
        // ψ0 lives in a two-dimensional invariant subspace
        let h = SparseOperator::from_triplets(4, vec![(0, 1, C64::new(1.0, 0.0)), (1, 0, C64::new(1.0, 0.0)), (2, 2, C64::new(5.0, 0.0))]);
        let psi0 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let tr = evolve(&h, &psi0, &[100.0], Method::Krylov).unwrap();
        assert!((tr.states[0][0] - C64::new(100f64.cos(), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn rejects_unsorted_times() {
        let h = SparseOperator::diagonal(&[1.0]);
        let p = Propagator::new(&h, Method::Krylov, KrylovOptions::default()).unwrap();
        assert!(p.run(&mut vec![C64::new(1.0, 0.0)], &[1.0, 0.5], |_, _| {}).is_err());
    }

    #[test]
    fn grid_spacing() {
        let g = time_grid(std::f64::consts::PI, std::f64::consts::PI, 200);
        assert_eq!(g.len(), 201);
        assert!((g[200] - std::f64::consts::PI).abs() < 1e-12);
    }
}
