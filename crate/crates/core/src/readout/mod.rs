//! Reservoir readout: input encoding, neuron features, the linear readout
//! and the nonlinearity and memory metrics.

pub mod encoding;
pub mod features;
pub mod linear;
pub mod memory;
pub mod nonlinearity;

pub use encoding::{encode_input, EncodingSpec};
pub use features::{collect_features, collect_features_with_diagnostics, FeatureMatrix, BIAS_COLUMN};
pub use linear::{predict, pseudo_inverse, train_readout, WeightMatrix, DEFAULT_REL_TOL};
pub use memory::{drive_sequence, input_sequence, memory_capacity, squared_correlation, MemoryCapacity, TRAIN_FRACTION};
pub use nonlinearity::{affine_fit_residual, nonlinearity_score};
