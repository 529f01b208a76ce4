//! Feedforward classifier with at most one hidden ReLU layer, trained by
//! mini-batch SGD on the base-2 cross-entropy.

mod dataset;
mod eval;
mod model;
mod train;

pub use dataset::LabeledDataset;
pub use eval::{evaluate, predict_all};
pub use model::{cross_entropy, relu, sigmoid, softmax_in_place, MlpModel, OutputKind, PROB_FLOOR};
pub use train::{gradients, mean_loss_bits, mean_loss_nats, train, Gradients, TrainConfig};
