//! Monte Carlo engine: configuration, trials, sweeps and statistics.

pub mod config;
pub mod stats;
pub mod sweep;
pub mod task;
pub mod trials;

pub use config::{AccuracyMse, BetaMode, DecoderKind, ExperimentConfig, CONFIG_KEYS};
pub use stats::Summary;
pub use sweep::{sweep, SweepAxis, SweepResult, SweepRow};
pub use task::{synth_margin_task, LabeledFeature, MarginTask};
pub use trials::{empirical_accuracy, run_trials, ClosedForms, Experiment, TrialRecord, TrialStats};
