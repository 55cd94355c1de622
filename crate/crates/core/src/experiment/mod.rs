//! Scenario matrix runner, configuration, persistence and figure data.

mod config;
mod figures;
mod pattern_io;
mod runner;
mod scenario;

pub use config::{MatrixAxes, MatrixConfig, ScenarioEntry};
pub use figures::{emit_figure_data, write_figure_csv, FigureId, FigureRow};
pub use pattern_io::{export_pattern, ingest_pattern, parse_pattern, write_pattern};
pub use runner::{
    evaluate_scenario, load_results, read_rows_csv, run_matrix, run_scenario, run_scenarios,
    write_atomic, write_rows_csv, Manifest, ManifestEntry, ResultRow, ResultSet, ScenarioOutcome,
    MANIFEST_FILE,
};
pub use scenario::{
    RotationMode, Scenario, STEER_PHI_DEG, STUDY_DEPOINTING_DEG, STUDY_FAILURE_SETS,
    STUDY_RESOLUTIONS_DEG, STUDY_SIGMA_DB, STUDY_STEERING_DEG, TRP_BASE_DBM,
};
