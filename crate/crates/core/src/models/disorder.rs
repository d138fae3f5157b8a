use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::dipolar::ZigzagGeometry;
use crate::models::hhbh::HhbhParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DisorderKind {
    ChemicalPotentialGaussian { sigma_mu: f64 },
    /// Widths and r01 share one length unit.
    PositionalGaussian { sigma_r: f64, sigma_z: f64, r01: f64 },
    FluxOffset { delta_phi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderModel {
    #[serde(flatten)]
    pub kind: DisorderKind,
    pub seed: u64,
}

/// Independent stream for shot `index` under a base seed.
pub fn shot_rng(base: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::Invalid(format!("negative disorder width {sigma}")));
    }
    Normal::new(0.0, sigma).map_err(|e| Error::Invalid(e.to_string()))
}

impl DisorderModel {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DisorderKind::ChemicalPotentialGaussian { sigma_mu } => normal(sigma_mu).map(|_| ()),
            DisorderKind::PositionalGaussian { sigma_r, sigma_z, r01 } => {
                normal(sigma_r)?;
                normal(sigma_z)?;
                if !(r01 > 0.0) {
                    return Err(Error::Invalid("r01 must be positive".into()));
                }
                Ok(())
            }
            DisorderKind::FluxOffset { .. } => Ok(()),
        }
    }

    pub fn chemical_potentials(&self, n_sites: usize, shot: u64) -> Result<Vec<f64>> {
        let DisorderKind::ChemicalPotentialGaussian { sigma_mu } = self.kind else {
            return Ok(vec![0.0; n_sites]);
        };
        let d = normal(sigma_mu)?;
        if sigma_mu == 0.0 {
            return Ok(vec![0.0; n_sites]);
        }
        let mut rng = shot_rng(self.seed, shot);
        Ok((0..n_sites).map(|_| d.sample(&mut rng)).collect())
    }

    pub fn apply_hhbh(&self, clean: &HhbhParams, shot: u64) -> Result<HhbhParams> {
        self.validate()?;
        let mut p = clean.clone();
        match self.kind {
            DisorderKind::ChemicalPotentialGaussian { sigma_mu } if sigma_mu > 0.0 => {
                let shifts = self.chemical_potentials(2 * p.l, shot)?;
                if p.mu.is_empty() {
                    p.mu = vec![0.0; 2 * p.l];
                }
                p.mu.iter_mut().zip(shifts).for_each(|(m, s)| *m += s);
            }
            DisorderKind::FluxOffset { delta_phi } if delta_phi != 0.0 => p.flux += delta_phi,
            _ => {}
        }
        Ok(p)
    }

    /// Displaces every site by Gaussians (σ_r twice in plane, σ_z out of plane); the axis
    /// and dipole scale stay those of the clean geometry.
    pub fn apply_geometry(&self, clean: &ZigzagGeometry, shot: u64) -> Result<ZigzagGeometry> {
        self.validate()?;
        let mut g = clean.clone();
        if let DisorderKind::PositionalGaussian { sigma_r, sigma_z, r01 } = self.kind {
            if sigma_r == 0.0 && sigma_z == 0.0 {
                return Ok(g);
            }
            let dr = normal(sigma_r / r01 * clean.r01)?;
            let dz = normal(sigma_z / r01 * clean.r01)?;
            let mut rng = shot_rng(self.seed, shot);
            for p in g.positions.iter_mut() {
                p[0] += dr.sample(&mut rng);
                p[1] += dr.sample(&mut rng);
                p[2] += dz.sample(&mut rng);
            }
        }
        Ok(g)
    }
}
