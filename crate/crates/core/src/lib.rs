//! Entanglement classification of multi-qubit states from local measurement
//! statistics.
//!
//! The crate covers dense complex linear algebra ([`linalg`]), random and
//! parametrized quantum states ([`state`]), ground-truth labels
//! ([`oracle`]), measurement features ([`features`]), a small feedforward
//! classifier ([`nn`]) and the experiment pipeline ([`harness`]).

pub mod error;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod state;

pub use error::{Error, Result};
pub use features::{
    build_plan, extract_features, AxisSource, FeatureScheme, MeasurementAxis, MeasurementPlan,
};
pub use linalg::ComplexMatrix;
pub use metrics::{GroupRate, Heatmap, MetricsReport};
pub use nn::{LabeledDataset, MlpModel, OutputKind, TrainConfig};
pub use oracle::{Bipartition, Channel, ClassLabel, Group, PptVerdict};
pub use rng::Rng;
pub use state::{DensityMatrix, PureState, Split};
