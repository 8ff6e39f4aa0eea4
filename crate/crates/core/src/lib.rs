//! Wrist accelerometer and barometer activity recognition: ingest,
//! windowing, feature extraction, random forests and leave-one-subject-out
//! evaluation for floor-change activities.

pub mod balance;
pub mod config;
pub mod domain;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod forest;
pub mod ingest;
pub mod scalar;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod windowing;

pub use domain::{compute_magnitude, parse_label, ActivityLabel, Recording, SensorSample};
pub use error::{Error, Result};
pub use features::{FeatureSet, FEATURE_NAMES, PRESSURE_FEATURES};
pub use forest::ForestHyperparams;
pub use scalar::Scalar;
pub use windowing::{Window, WindowParams};

pub type FeatureVector = features::FeatureVector<f64>;
pub type Dataset = balance::Dataset<f64>;
pub type TrainedForest = forest::TrainedForest<f64>;
pub type FeatureVectorF32 = features::FeatureVector<f32>;
pub type DatasetF32 = balance::Dataset<f32>;
pub type TrainedForestF32 = forest::TrainedForest<f32>;
