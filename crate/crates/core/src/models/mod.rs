pub mod dipolar;
pub mod disorder;
pub mod fermi_hubbard;
pub mod hhbh;
pub mod ladder;

pub use dipolar::{build_coupling_graph, build_spin_exchange, dipolar_coupling, solve_zigzag_geometry, CouplingGraph, Cutoff, ZigzagGeometry};
pub use disorder::{DisorderKind, DisorderModel};
pub use fermi_hubbard::{build_fermi_hubbard, FermiHubbardParams};
pub use hhbh::{build_hhbh, HhbhParams};
pub use ladder::{build_pi_flux_ladder, LadderParams};
