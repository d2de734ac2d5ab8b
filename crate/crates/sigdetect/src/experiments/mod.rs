//! Monte-Carlo power experiments: run configuration, per-anomaly and
//! sphere-averaged power estimators, reduced Gaussian models for heavy
//! sweeps, the packaged studies, and run output files.

pub mod config;
pub mod output;
pub mod power;
pub mod reduced;
pub mod studies;

pub use config::{parse_family, ExperimentConfig, TestKind};
pub use output::{
    git_describe, monotone_violation, run_experiment, write_power_curve_csv, write_run,
    write_sinogram_csv, ExperimentRun, RunMeta,
};
pub use power::{
    beta_star_case1, beta_star_case2, find_delta_at_power, sample_uniform_sphere_alternative,
    BisectionOptions, DeltaAtPower, PowerCurve, PowerEstimate,
};
pub use reduced::{
    integration_image_correlation, radon_translation_chi2_model, RadonTranslationModel,
    ReducedChi2Model, ReducedSupModel,
};
pub use studies::{
    build_study_system, deconv_coherence_experiment, fit_sqrt_log_trend,
    integration_boundary_trend, radon_scenario_figure1, BoundaryTrendPoint, CoherencePoint,
    Figure1Report, StudySystem, TrendFit,
};
