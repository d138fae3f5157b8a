use serde_json::json;

use scarlab::basis::{LatticeSpec, ParticleKind, SectorConstraint};
use scarlab::models::dipolar::{self, ZigzagGeometry};
use scarlab::models::disorder::DisorderModel;
use scarlab::models::{fermi_hubbard, hhbh, ladder};
use scarlab::operator::Terms;
use scarlab::spectral::tower::{build_scar_tower, rung_sites, ScarTower};
use scarlab::{Error, FockBasis, Result, SparseOperator};

use crate::config::{DipolarModel, InitialState, ModelConfig};

/// A model instance ready for dynamics or spectra.
pub struct Built {
    pub basis: FockBasis,
    pub terms: Terms,
    pub h: SparseOperator,
    pub word: Vec<u8>,
    /// Spacing of the scar comb, when the family has one.
    pub delta_e: Option<f64>,
    /// Tower top energy E_0 = (L/2)·ΔE in the exact-scar limit.
    pub anchor: Option<f64>,
    /// Perturbation strength away from the exact-scar limit.
    pub delta_v: Option<f64>,
    pub details: serde_json::Value,
}

impl Built {
    pub fn tower(&self) -> Result<ScarTower> {
        let (top, bot) = rung_sites(&self.basis)?[0];
        let amp = self
            .terms
            .hops
            .iter()
            .filter(|h| (h.i, h.j) == (top, bot) || (h.i, h.j) == (bot, top))
            .map(|h| h.amp.re)
            .sum::<f64>();
        build_scar_tower(&self.basis, amp)
    }
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

pub fn parse_word(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| Error::Invalid(format!("bad occupation digit `{c}`"))))
        .collect()
}

/// Occupation word over the modes of the model.
pub fn initial_word(model: &ModelConfig, init: &InitialState) -> Result<Vec<u8>> {
    if let Some(w) = &init.word {
        return parse_word(w);
    }
    let l = model.l();
    match (init.name.as_str(), model) {
        ("scar", ModelConfig::Ladder(_) | ModelConfig::Hhbh(_)) => Ok(ladder::scar_word(l)),
        ("scar", ModelConfig::Dipolar(_)) => Ok(dipolar::scar_word(2 * l)),
        ("scar" | "all-up", ModelConfig::FermiHubbard(_)) => Ok(fermi_hubbard::all_up_word(l)),
        ("thermal-1", ModelConfig::Ladder(_) | ModelConfig::Hhbh(_) | ModelConfig::Dipolar(_)) => Ok(dipolar::thermal_word(1, 2 * l)),
        ("thermal-2", ModelConfig::Ladder(_) | ModelConfig::Hhbh(_) | ModelConfig::Dipolar(_)) => Ok(dipolar::thermal_word(2, 2 * l)),
        (name, m) => Err(Error::Invalid(format!("initial state `{name}` is not defined for the {} model", m.family()))),
    }
}

pub fn geometry(m: &DipolarModel) -> Result<ZigzagGeometry> {
    let n = 2 * m.l;
    let tilt = deg(m.tilt);
    match (m.ratio, m.alpha, m.beta) {
        (Some(r), None, None) => Ok(dipolar::solve_zigzag_geometry(r, tilt, m.ratio_tol, n)?.geometry),
        (None, Some(a), None) => dipolar::frustrated_geometry(deg(a), tilt, n)
            .ok_or_else(|| Error::Infeasible(format!("no frustrated geometry at α = {a}°, tilt {}°", m.tilt))),
        (None, Some(a), Some(b)) => {
            let branches: Vec<i8> = m.branch.map_or(vec![1, -1], |b| vec![b]);
            branches
                .into_iter()
                .filter_map(|br| ZigzagGeometry::from_angles(deg(a), deg(b), tilt, br, n).ok())
                .min_by(|x, y| {
                    let r = |g: &ZigzagGeometry| g.unit_couplings().frustration_residual().abs();
                    r(x).total_cmp(&r(y))
                })
                .ok_or_else(|| Error::Infeasible(format!("no geometry for α = {a}°, β = {b}°, tilt {}°", m.tilt)))
        }
        _ => Err(Error::Invalid("dipolar model needs `ratio`, `alpha`, or `alpha` and `beta`".into())),
    }
}

/// Lattice and symmetry-free sector of the model for a given initial word.
pub fn lattice(model: &ModelConfig) -> LatticeSpec {
    match model {
        ModelConfig::Ladder(m) => LatticeSpec::ladder(m.l, ParticleKind::HardcoreBoson).with_boundary(m.boundary),
        ModelConfig::Hhbh(m) => {
            let p = if m.n_max == 1 { ParticleKind::HardcoreBoson } else { ParticleKind::SoftcoreBoson(m.n_max) };
            LatticeSpec::ladder(m.l, p).with_boundary(m.boundary)
        }
        ModelConfig::Dipolar(m) => LatticeSpec::chain(2 * m.l, ParticleKind::SpinHalf),
        ModelConfig::FermiHubbard(m) => fermi_hubbard::FermiHubbardParams::chain(m.l, m.boundary).lattice(),
    }
}

pub fn constraint(model: &ModelConfig, word: &[u8]) -> SectorConstraint {
    let n = word.iter().map(|&x| x as usize).sum();
    match model {
        ModelConfig::Ladder(m) if m.sz2.is_some() => SectorConstraint { total_particles: None, total_sz2: m.sz2 },
        _ => SectorConstraint::particles(n),
    }
}

pub fn ladder_params(m: &crate::config::LadderModel) -> ladder::LadderParams {
    let mut p = ladder::LadderParams::new(m.l, m.t_perp, m.t_par);
    p.t_nn = m.t_nn;
    p.t_nnn = m.t_nnn;
    p.boundary = m.boundary;
    p
}

fn hhbh_params(m: &crate::config::HhbhModel) -> hhbh::HhbhParams {
    let mut p = hhbh::HhbhParams::new(m.l, m.u, m.n_max);
    p.j = m.j;
    p.j_prime = m.j_prime;
    p.flux = m.flux;
    p.boundary = m.boundary;
    p.gauge = m.gauge;
    p
}

pub struct Parts {
    pub terms: Terms,
    pub delta_e: Option<f64>,
    pub delta_v: Option<f64>,
    pub details: serde_json::Value,
}

/// Model terms, optionally for one disorder shot.
pub fn terms(model: &ModelConfig, disorder: Option<(&DisorderModel, u64)>) -> Result<Parts> {
    match model {
        ModelConfig::Ladder(m) => {
            if disorder.is_some() {
                return Err(Error::Invalid("disorder is not defined for the ladder model".into()));
            }
            let p = ladder_params(m);
            Ok(Parts { terms: ladder::build_terms(&p)?, delta_e: Some(2.0 * m.t_perp.abs()), delta_v: None, details: json!(p) })
        }
        ModelConfig::Hhbh(m) => {
            let mut p = hhbh_params(m);
            if let Some((d, shot)) = disorder {
                p = d.apply_hhbh(&p, shot)?;
            }
            let dv = (m.u != 0.0).then(|| m.j * m.j / m.u.abs());
            Ok(Parts { terms: hhbh::build_terms(&p)?, delta_e: Some(2.0 * m.j_prime.abs()), delta_v: dv, details: json!(p) })
        }
        ModelConfig::Dipolar(m) => {
            let clean = geometry(m)?;
            let g = match disorder {
                Some((d, shot)) => d.apply_geometry(&clean, shot)?,
                None => clean.clone(),
            };
            let graph = dipolar::build_coupling_graph(&g, m.cutoff)?;
            let u = clean.unit_couplings();
            let details = json!({
                "alpha_deg": clean.alpha.to_degrees(),
                "beta_deg": clean.beta.to_degrees(),
                "tilt_deg": clean.tilt.to_degrees(),
                "branch": clean.branch,
                "couplings": u,
                "ratio": u.ratio(),
                "long_range_ratio": u.long_range_ratio(),
            });
            Ok(Parts { terms: dipolar::spin_exchange_terms(&graph), delta_e: Some(1.0), delta_v: Some(u.long_range_ratio()), details })
        }
        ModelConfig::FermiHubbard(m) => {
            if disorder.is_some() {
                return Err(Error::Invalid("disorder is not defined for the Fermi-Hubbard model".into()));
            }
            let mut p = fermi_hubbard::FermiHubbardParams::chain(m.l, m.boundary);
            p.t = m.t;
            p.u = m.u;
            p.w = m.w;
            p.h_x = m.h_x;
            p.h_z = m.h_z;
            Ok(Parts { terms: fermi_hubbard::build_terms(&p), delta_e: None, delta_v: None, details: json!(p) })
        }
    }
}

pub fn build(model: &ModelConfig, init: &InitialState, disorder: Option<(&DisorderModel, u64)>) -> Result<Built> {
    let word = initial_word(model, init)?;
    let lat = lattice(model);
    if word.len() != lat.n_modes() {
        return Err(Error::Invalid(format!("initial word has {} entries; the model has {} modes", word.len(), lat.n_modes())));
    }
    let basis = FockBasis::enumerate(lat, constraint(model, &word))?;
    let parts = terms(model, disorder)?;
    let h = SparseOperator::from_terms(&basis, &parts.terms)?;
    let anchor = parts.delta_e.map(|d| d * model.l() as f64 / 2.0);
    Ok(Built { basis, terms: parts.terms, h, word, delta_e: parts.delta_e, anchor, delta_v: parts.delta_v, details: parts.details })
}
