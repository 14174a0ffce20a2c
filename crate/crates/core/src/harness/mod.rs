//! Experiment drivers and self-checks: refinement studies, error metrics,
//! operator and geometry suites, and the traveling-wave run.

mod checks;
mod study;
mod surfaces;
mod wave;

pub use checks::{coupling_check, fluid_check, kernel_check, plate_check, CheckLine, CheckReport, KernelFault, PlateFault};
pub use study::{
    convergence_rates, rate, relative_difference, restrict_to_common_grid, run_convergence_study, run_label,
    run_study_member, spacetime_norm, ErrorSeries, Norm, PairNorms, RateEstimate, StudyRecord, StudyReport, StudySpec,
};
pub use surfaces::{geometry_check, geometry_errors, standard_surfaces, AnalyticSurface, ExactGeometry, MIN_GEOMETRY_ORDER};
pub use wave::{centreline, run_wave, run_wave_with, Profile, WaveReport, WaveSpec};
