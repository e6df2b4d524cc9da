//! Error metrics, convergence studies and the sharpness sweep.

pub mod convergence;
pub mod metrics;
pub mod output;
pub mod sweep;

pub use convergence::{
    convergence_study, convergence_study_cross_mesh, default_reference, fit_slope, halving_taus, scheme_label,
    ConvergenceTable, ErrorReport,
};
pub use metrics::{energy_norm, final_time_error, prolong, ComponentErrors};
pub use sweep::{sharpness_cell, sharpness_sweep, sweep_grid, CellClass, SweepCell, SweepConfig};
