pub mod diag;
pub mod levels;
pub mod overlap;
pub mod tower;

pub use diag::{full_diagonalize, EigenDecomposition, DEFAULT_DENSE_CAP};
pub use levels::{histogram, level_spacing_stats, LevelStats};
pub use overlap::{fractional_energy_width, lanczos_measure, measure_comb_spacing, overlap_spectrum, AnchorMode, FractionalEnergyStats, SpectralDecomposition};
pub use tower::{build_h_a, build_scar_tower, rung_sites, verify_sga, ScarTower, SgaReport};
