//! Metrics and experiment protocols: accuracy, AUC, confusion matrices,
//! class-probability histograms, the simulated pair comparison and
//! repeated leave-k-out cross-validation.

mod cv;
mod density;
mod experiment;
mod metrics;

pub use cv::{choose_rate, cv_draws, leave_k_out, CvDraw, CvPlan, CvReport, DEFAULT_RATES};
pub use density::{class_probability_densities, densities_csv, ClassDensity, DENSITY_BINS};
pub use experiment::{
    pair_name, pair_seed, random_split, render_table, report_csv, report_rows, reproduce_table1,
    run_pair_experiment, PairConfig, PairOutcome, ReportRow, TrainedBcnn,
};
pub use metrics::{accuracy, auc, decide, majority_baseline, Metrics};
