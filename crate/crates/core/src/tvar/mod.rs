//! Parameter curves, class membership checks and path simulation.

pub mod curve;
pub mod innovations;
pub mod simulate;
pub mod stability;

pub use curve::{ClosedForm, LocalPowerLaw, ParamCurve, Poly, RootPath, SigmaCurve, ThetaCurve};
pub use innovations::{sample_innovations, InnovationFamily, InnovationSpec};
pub use simulate::{simulate, InitialCondition, TVARPath};
pub use stability::{
    check_stability_class, companion, stability_ball_radii, lipschitz_seminorm, spectral_radius, StabilityReport,
    DEFAULT_GRID,
};
