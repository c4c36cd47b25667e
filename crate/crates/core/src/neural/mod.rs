//! Convolutional network trained directly on EMG windows.

mod adam;
mod blob;
pub mod layers;
mod model;
mod train;

pub use adam::Adam;
pub use blob::{save_initial_weights, BLOB_MAGIC, BLOB_VERSION};
pub use model::{
    tensor_sizes, Activations, BatchStats, BestModelSelection, DcnnConfig, DcnnModel, Dims, DropoutMode, Params, Workspace,
    N_TENSORS, TENSOR_NAMES,
};
pub use train::{tensor_labels, train_dcnn, DcnnData, EarlyStopping, EpochRecord, TrainHistory};

pub(crate) use crate::classical::argmax;
