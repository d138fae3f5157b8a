use serde::{Deserialize, Serialize};

use crate::basis::FockBasis;
use crate::dynamics::evolve::{KrylovOptions, Method, Propagator, RunStats};
use crate::dynamics::observables::Observable;
use crate::dynamics::state::TimeSeries;
use crate::error::{Error, Result};
use crate::operator::{SparseOperator, Terms};
use crate::spectral::tower::rung_sites;
use crate::C64;

/// Free evolution for `fraction`·T, then an instantaneous π-pulse on `pulse` (rung indices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetSegment {
    pub fraction: f64,
    #[serde(default)]
    pub pulse: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetSchedule {
    pub period: f64,
    pub segments: Vec<FloquetSegment>,
    /// 0 for instantaneous pulses; otherwise each pulse is a window centred on its nominal time.
    #[serde(default)]
    pub pulse_duration: f64,
}

impl FloquetSchedule {
    /// U(T/4) V1V2 U(T/4) V1V3 U(T/4) V2V3 U(T/4), repeated every four rungs; the fourth rung
    /// of each cell is never pulsed.
    pub fn four_rung(period: f64, n_rungs: usize) -> Self {
        let cell = |set: &[usize]| -> Vec<usize> { (0..n_rungs).filter(|m| set.contains(&(m % 4))).collect() };
        FloquetSchedule {
            period,
            segments: vec![
                FloquetSegment { fraction: 0.25, pulse: cell(&[1, 2]) },
                FloquetSegment { fraction: 0.25, pulse: cell(&[0, 2]) },
                FloquetSegment { fraction: 0.25, pulse: cell(&[0, 1]) },
                FloquetSegment { fraction: 0.25, pulse: vec![] },
            ],
            pulse_duration: 0.0,
        }
    }

    pub fn trivial(period: f64) -> Self {
        FloquetSchedule { period, segments: vec![FloquetSegment { fraction: 1.0, pulse: vec![] }], pulse_duration: 0.0 }
    }

    pub fn validate(&self, n_rungs: usize) -> Result<()> {
        let total: f64 = self.segments.iter().map(|s| s.fraction).sum();
        if (total - 1.0).abs() > 1e-12 || self.segments.iter().any(|s| !(s.fraction >= 0.0)) {
            return Err(Error::Invalid(format!("segment fractions sum to {total}, expected 1")));
        }
        if !(self.period > 0.0) {
            return Err(Error::Invalid(format!("period {}", self.period)));
        }
        if let Some(&m) = self.segments.iter().flat_map(|s| &s.pulse).find(|&&m| m >= n_rungs) {
            return Err(Error::Invalid(format!("pulse on rung {m} of {n_rungs}")));
        }
        let window = self.segments.iter().map(|s| s.fraction * self.period).fold(f64::INFINITY, f64::min);
        if self.pulse_duration < 0.0 || self.pulse_duration > window {
            return Err(Error::Invalid(format!("pulse duration {} exceeds the shortest segment", self.pulse_duration)));
        }
        Ok(())
    }

    /// True when every rung is pulsed an even number of times per period.
    pub fn closes(&self, n_rungs: usize) -> bool {
        let mut count = vec![0usize; n_rungs];
        for m in self.segments.iter().flat_map(|s| &s.pulse) {
            count[*m] += 1;
        }
        count.iter().all(|c| c % 2 == 0)
    }

    /// Builds a schedule visiting the given toggling frames in order; the first frame must be the
    /// identity and the sequence returns to it at the end of the period.
    pub fn from_frames(period: f64, frames: &[(f64, Vec<bool>)]) -> Self {
        let mut segments = vec![];
        for (k, (w, f)) in frames.iter().enumerate() {
            let next: Vec<bool> = frames.get(k + 1).map(|x| x.1.clone()).unwrap_or_else(|| vec![false; f.len()]);
            let pulse = (0..f.len()).filter(|&m| f[m] != next[m]).collect();
            segments.push(FloquetSegment { fraction: *w, pulse });
        }
        FloquetSchedule { period, segments, pulse_duration: 0.0 }
    }

    /// The sequence followed by its time reverse within one period, which removes the
    /// second-order Magnus term.
    pub fn palindrome(&self, n_rungs: usize) -> Self {
        let mut frames: Vec<(f64, Vec<bool>)> = self.frames(n_rungs).into_iter().map(|(w, f)| (w / 2.0, f)).collect();
        let back: Vec<_> = frames.iter().rev().cloned().collect();
        frames.extend(back);
        let mut s = FloquetSchedule::from_frames(self.period, &frames);
        s.pulse_duration = self.pulse_duration;
        s
    }

    /// Toggling frames: (weight, flipped rungs) for each segment.
    pub fn frames(&self, n_rungs: usize) -> Vec<(f64, Vec<bool>)> {
        let mut flipped = vec![false; n_rungs];
        let mut out = vec![];
        for s in &self.segments {
            out.push((s.fraction, flipped.clone()));
            for &m in &s.pulse {
                flipped[m] = !flipped[m];
            }
        }
        out
    }
}

fn rung_of_site(basis: &FockBasis) -> Result<Vec<usize>> {
    let rungs = rung_sites(basis)?;
    let mut map = vec![0; basis.lattice.n_sites()];
    for (m, &(t, b)) in rungs.iter().enumerate() {
        map[t] = m;
        map[b] = m;
    }
    Ok(map)
}

/// Particle count on the given rungs for every configuration.
fn rung_counts(basis: &FockBasis, rungs: &[usize]) -> Result<Vec<f64>> {
    let sites = rung_sites(basis)?;
    Ok(basis
        .states()
        .iter()
        .map(|&c| rungs.iter().map(|&m| (basis.occ(c, sites[m].0) + basis.occ(c, sites[m].1)) as f64).sum())
        .collect())
}

/// Diagonal of V = exp(iπ Σ_{m ∈ rungs} N_m).
pub fn pulse_signs(basis: &FockBasis, rungs: &[usize]) -> Result<Vec<f64>> {
    Ok(rung_counts(basis, rungs)?.into_iter().map(|n| if n as u64 % 2 == 0 { 1.0 } else { -1.0 }).collect())
}

/// First-order toggling-frame average of a hardcore term list; each hop is scaled by the mean of
/// ±1 over frames, flipped when exactly one of its rungs is inverted.
pub fn average_terms(terms: &Terms, basis: &FockBasis, schedule: &FloquetSchedule) -> Result<Terms> {
    let rung = rung_of_site(basis)?;
    if terms.n_modes != rung.len() {
        return Err(Error::Mismatch("average_terms expects one mode per site".into()));
    }
    let frames = schedule.frames(rung_sites(basis)?.len());
    let mut out = terms.clone();
    out.hops.clear();
    for h in &terms.hops {
        let s: f64 = frames.iter().map(|(w, f)| if f[rung[h.i]] != f[rung[h.j]] { -w } else { *w }).sum();
        if s != 0.0 {
            out.hops.push(crate::operator::Hop { i: h.i, j: h.j, amp: h.amp * s });
        }
    }
    Ok(out)
}

/// Σ_k w_k P_k H P_k for the diagonal frame operators P_k.
pub fn average_operator(h: &SparseOperator, basis: &FockBasis, schedule: &FloquetSchedule) -> Result<SparseOperator> {
    let n_rungs = rung_sites(basis)?.len();
    let frames = schedule.frames(n_rungs);
    let signs: Vec<(f64, Vec<f64>)> = frames
        .iter()
        .map(|(w, f)| {
            let rungs: Vec<usize> = (0..n_rungs).filter(|&m| f[m]).collect();
            pulse_signs(basis, &rungs).map(|s| (*w, s))
        })
        .collect::<Result<_>>()?;
    let mut trip = Vec::with_capacity(h.nnz());
    for r in 0..h.dim {
        for (c, v) in h.row(r) {
            let f: f64 = signs.iter().map(|(w, s)| w * s[r] * s[c]).sum();
            if f != 0.0 {
                trip.push((r, c, v * f));
            }
        }
    }
    Ok(SparseOperator::from_triplets(h.dim, trip))
}

enum Piece {
    Evolve { duration: f64, prop: usize },
    Kick(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloquetSampling {
    Stroboscopic,
    /// n equally spaced samples per period.
    PerPeriod(usize),
}

/// Driven evolution over `n_periods`, recording each observable at the sampling times.
pub fn floquet_evolve(
    h: &SparseOperator,
    basis: &FockBasis,
    schedule: &FloquetSchedule,
    psi0: &[C64],
    n_periods: usize,
    sampling: FloquetSampling,
    method: Method,
    observables: &[(String, Observable)],
) -> Result<(Vec<TimeSeries>, RunStats)> {
    let n_rungs = rung_sites(basis)?.len();
    schedule.validate(n_rungs)?;
    let tp = schedule.pulse_duration;
    // pulse generators G with exp(−i tp G) = V
    let mut ops: Vec<SparseOperator> = vec![];
    if tp > 0.0 {
        for s in &schedule.segments {
            if !s.pulse.is_empty() {
                let g: Vec<f64> = rung_counts(basis, &s.pulse)?.into_iter().map(|n| -std::f64::consts::PI / tp * n).collect();
                ops.push(h.combine(1.0, &SparseOperator::diagonal(&g), 1.0));
            }
        }
    }
    let mut props = vec![Propagator::new(h, method, KrylovOptions::default())?];
    for op in &ops {
        props.push(Propagator::new(op, method, KrylovOptions::default())?);
    }

    let mut pieces = vec![];
    let mut k = 1;
    let last = schedule.segments.len() - 1;
    for (i, s) in schedule.segments.iter().enumerate() {
        let before = if i > 0 && !schedule.segments[i - 1].pulse.is_empty() { tp / 2.0 } else { 0.0 };
        let after = if i < last && !s.pulse.is_empty() { tp / 2.0 } else { 0.0 };
        pieces.push(Piece::Evolve { duration: s.fraction * schedule.period - before - after, prop: 0 });
        if !s.pulse.is_empty() {
            if tp > 0.0 {
                pieces.push(Piece::Evolve { duration: tp, prop: k });
                k += 1;
            } else {
                pieces.push(Piece::Kick(pulse_signs(basis, &s.pulse)?));
            }
        }
    }

    let per = match sampling {
        FloquetSampling::Stroboscopic => 1,
        FloquetSampling::PerPeriod(n) => n.max(1),
    };
    let t_period = schedule.period;
    let mut times = vec![];
    let mut values: Vec<Vec<f64>> = vec![vec![]; observables.len()];
    let mut record = |t: f64, psi: &[C64], times: &mut Vec<f64>| {
        times.push(t);
        for (v, (_, o)) in values.iter_mut().zip(observables) {
            v.push(o.eval(psi));
        }
    };
    let mut psi = psi0.to_vec();
    let mut stats = RunStats::default();
    record(0.0, &psi, &mut times);
    for p in 0..n_periods {
        let t0 = p as f64 * t_period;
        let targets: Vec<f64> = (1..per).map(|j| j as f64 * t_period / per as f64).collect();
        let mut next = 0;
        let mut clock = 0.0;
        for piece in &pieces {
            match piece {
                Piece::Kick(s) => psi.iter_mut().zip(s).for_each(|(z, x)| *z *= x),
                Piece::Evolve { duration, prop } => {
                    let end = clock + duration;
                    let mut grid = vec![];
                    while next < targets.len() && targets[next] <= end + 1e-12 * t_period {
                        grid.push((targets[next] - clock).max(0.0));
                        next += 1;
                    }
                    let n_samples = grid.len();
                    if grid.last().is_none_or(|&x| x < *duration) {
                        grid.push(*duration);
                    }
                    let mut local = vec![];
                    let st = props[*prop].run(&mut psi, &grid, |j, s| {
                        if j < n_samples {
                            local.push(s.to_vec());
                        }
                    })?;
                    stats.merge(st);
                    for (j, s) in local.iter().enumerate() {
                        record(t0 + clock + grid[j], s, &mut times);
                    }
                    clock = end;
                }
            }
        }
        record(t0 + t_period, &psi, &mut times);
    }
    let series = observables
        .iter()
        .zip(values)
        .map(|((name, _), v)| TimeSeries::new(name, times.clone(), v))
        .collect();
    Ok((series, stats))
}
