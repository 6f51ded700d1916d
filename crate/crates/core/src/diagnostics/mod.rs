//! Monitors, blow-up variables, Gaussian spectral quantities and residuals.

pub mod blowup;
pub mod fit;
pub mod hermite;
pub mod interp;
pub mod monitors;
pub mod residual;

pub use blowup::{blowup_frame, cutoff_beta, cutoff_x, nonlocal_i, BlowupFrame, SigmaGrid};
pub use fit::{fit_decay, DecayFit};
pub use hermite::{
    apply_a, gaussian_inner, gaussian_norm, hermite_basis, hermite_basis_exact, hermite_norm_sq,
    hermite_project, HermiteSpectrum,
};
pub use interp::Pchip;
pub use monitors::{
    default_delta, monitor_snapshot, neck_region, sign_changes, ComponentKind, EstimateSnapshot,
    RegionComponent, ScaleInvariant,
};
pub use residual::{evolution_residual, evolution_rhs, fixed_step_window, Quantity, ResidualNorms};
