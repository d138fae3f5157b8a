pub mod evolve;
pub mod floquet;
pub mod observables;
pub mod state;

pub use evolve::{evolve, time_grid, KrylovOptions, Method, Propagator, RunStats};
pub use floquet::{average_operator, average_terms, floquet_evolve, pulse_signs, FloquetSampling, FloquetSchedule, FloquetSegment};
pub use observables::{Observable, ObservableSpec};
pub use state::{series_csv, QuantumState, StateTrajectory, TimeSeries};

use crate::error::Result;
use crate::C64;

/// Streams each observable along ψ(t) without storing states.
pub fn evolve_observables(prop: &Propagator, psi0: &[C64], times: &[f64], observables: &[(String, Observable)]) -> Result<(Vec<TimeSeries>, RunStats)> {
    let mut psi = psi0.to_vec();
    let mut values = vec![Vec::with_capacity(times.len()); observables.len()];
    let stats = prop.run(&mut psi, times, |_, s| {
        for (v, (_, o)) in values.iter_mut().zip(observables) {
            v.push(o.eval(s));
        }
    })?;
    let series = observables
        .iter()
        .zip(values)
        .map(|((name, _), v)| TimeSeries::new(name, times.to_vec(), v))
        .collect();
    Ok((series, stats))
}
