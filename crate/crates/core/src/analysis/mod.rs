pub mod fit;
pub mod regression;
pub mod shots;

pub use fit::{fit_lifetime, CutoffRule, FitReport, LifetimeFit, WindowSensitivity};
pub use regression::{linear_fit, perturbation_exponent, regress_tau_sigma, LinearFit, PowerLaw, ScanPoint, ScanResult};
pub use shots::{shot_average, ShotAverage};
