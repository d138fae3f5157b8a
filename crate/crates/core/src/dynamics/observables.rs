use serde::{Deserialize, Serialize};

use crate::basis::{FockBasis, Geometry, ParticleKind};
use crate::dynamics::state::inner;
use crate::error::{Error, Result};
use crate::operator::SparseOperator;
use crate::spectral::tower::{rung_sites, ScarTower};
use crate::C64;

/// Config-facing observable names. `Custom` operators are attached programmatically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSpec {
    Fidelity,
    RungImbalance,
    GeneralizedImbalance,
    SiteSz(usize),
    ScarSubspaceWeight,
    /// Probability of exactly one particle on every rung.
    RungSingleOccupancy,
}

impl ObservableSpec {
    pub fn name(&self) -> String {
        match self {
            ObservableSpec::Fidelity => "fidelity".into(),
            ObservableSpec::RungImbalance => "rung_imbalance".into(),
            ObservableSpec::GeneralizedImbalance => "generalized_imbalance".into(),
            ObservableSpec::SiteSz(s) => format!("site_sz_{s}"),
            ObservableSpec::ScarSubspaceWeight => "scar_subspace_weight".into(),
            ObservableSpec::RungSingleOccupancy => "rung_single_occupancy".into(),
        }
    }

    /// `tower` is needed only for the scar-subspace weight.
    pub fn resolve(&self, basis: &FockBasis, psi0: &[C64], tower: Option<&ScarTower>) -> Result<Observable> {
        match self {
            ObservableSpec::Fidelity => Ok(fidelity(psi0)),
            ObservableSpec::RungImbalance => rung_imbalance(basis),
            ObservableSpec::GeneralizedImbalance => Ok(generalized_imbalance(basis, psi0)),
            ObservableSpec::SiteSz(s) => site_sz(basis, *s),
            ObservableSpec::ScarSubspaceWeight => tower
                .map(scar_subspace_weight)
                .ok_or_else(|| Error::Mismatch("scar subspace weight needs a scar tower".into())),
            ObservableSpec::RungSingleOccupancy => rung_single_occupancy(basis),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Observable {
    Fidelity(Vec<C64>),
    Diagonal(Vec<f64>),
    Projector(Vec<Vec<C64>>),
    Operator(SparseOperator),
}

impl Observable {
    pub fn eval(&self, psi: &[C64]) -> f64 {
        match self {
            Observable::Fidelity(r) => inner(r, psi).norm_sqr(),
            Observable::Diagonal(d) => d.iter().zip(psi).map(|(x, z)| x * z.norm_sqr()).sum(),
            Observable::Projector(states) => states.iter().map(|s| inner(s, psi).norm_sqr()).sum(),
            Observable::Operator(op) => op.expectation(psi),
        }
    }
}

pub fn fidelity(reference: &[C64]) -> Observable {
    Observable::Fidelity(reference.to_vec())
}

/// (1/L) Σ_j (n_top,j − n_bottom,j)
pub fn rung_imbalance(basis: &FockBasis) -> Result<Observable> {
    let Geometry::Ladder(l) = basis.lattice.geometry else {
        return Err(Error::Mismatch("rung imbalance needs a ladder".into()));
    };
    let rungs = rung_sites(basis)?;
    Ok(Observable::Diagonal(
        basis
            .states()
            .iter()
            .map(|&c| rungs.iter().map(|&(t, b)| basis.occ(c, t) as f64 - basis.occ(c, b) as f64).sum::<f64>() / l as f64)
            .collect(),
    ))
}

/// (1/N) Σ_i ⟨σ^z_i(t)⟩⟨σ^z_i(0)⟩ with σ^z = 2n − 1 on every mode.
pub fn generalized_imbalance(basis: &FockBasis, psi0: &[C64]) -> Observable {
    let modes = basis.lattice.n_modes();
    let sz = |c: u64, m: usize| 2.0 * basis.occ(c, m) as f64 - 1.0;
    let mut z0 = vec![0.0; modes];
    for (&c, a) in basis.states().iter().zip(psi0) {
        let p = a.norm_sqr();
        if p != 0.0 {
            for (m, z) in z0.iter_mut().enumerate() {
                *z += p * sz(c, m);
            }
        }
    }
    Observable::Diagonal(
        basis
            .states()
            .iter()
            .map(|&c| (0..modes).map(|m| z0[m] * sz(c, m)).sum::<f64>() / modes as f64)
            .collect(),
    )
}

pub fn site_sz(basis: &FockBasis, site: usize) -> Result<Observable> {
    if site >= basis.lattice.n_sites() {
        return Err(Error::Invalid(format!("site {site} out of range")));
    }
    let f: Box<dyn Fn(u64) -> f64> = match basis.lattice.particle {
        ParticleKind::SpinHalf | ParticleKind::HardcoreBoson | ParticleKind::SpinlessFermion => Box::new(move |c| basis.occ(c, site) as f64 - 0.5),
        ParticleKind::SpinfulFermion => {
            Box::new(move |c| 0.5 * (basis.occ(c, 2 * site) as f64 - basis.occ(c, 2 * site + 1) as f64))
        }
        ParticleKind::SoftcoreBoson(_) => return Err(Error::Mismatch("S^z is undefined for softcore bosons".into())),
    };
    Ok(Observable::Diagonal(basis.states().iter().map(|&c| f(c)).collect()))
}

pub fn scar_subspace_weight(tower: &ScarTower) -> Observable {
    Observable::Projector(tower.states.clone())
}

pub fn rung_single_occupancy(basis: &FockBasis) -> Result<Observable> {
    let rungs = rung_sites(basis)?;
    Ok(Observable::Diagonal(
        basis
            .states()
            .iter()
            .map(|&c| rungs.iter().all(|&(t, b)| basis.occ(c, t) + basis.occ(c, b) == 1) as u8 as f64)
            .collect(),
    ))
}

pub fn custom(op: SparseOperator) -> Result<Observable> {
    let err = op.hermiticity_error();
    if err > 1e-12 {
        return Err(Error::Invalid(format!("custom observable is not Hermitian (error {err:.2e})")));
    }
    Ok(Observable::Operator(op))
}
