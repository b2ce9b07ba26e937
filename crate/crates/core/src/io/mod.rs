//! Synthetic data, feature files and report persistence.

mod features;
mod report;
mod synthetic;

pub use features::{load_features_csv, parse_features_csv, save_features_csv, LoadedFeatures};
pub use report::{histogram_csv, load_report, save_histogram_csv, save_report, to_json_string};
pub use synthetic::{generate_holdout, generate_synthetic, SyntheticSpec};
