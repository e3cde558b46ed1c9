//! Small dense-tensor network engine: valid-padding 2-D convolution,
//! max-pooling, ReLU, dense layers, softmax cross-entropy, dropout and Adam,
//! with hand-written reverse-mode gradients.

mod activation;
mod adam;
mod conv;
mod dense;
mod dropout;
mod gemm;
pub mod gradcheck;
mod network;
mod pool;
mod tensor;

pub use activation::{cross_entropy, relu, softmax, softmax_cross_entropy, PROB_FLOOR};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::Conv2d;
pub use dense::Dense;
pub use dropout::{dropout_apply, DropoutMode, DropoutSpec};
pub use network::{train_epoch, Gradients, Layer, LayerCache, Network};
pub use pool::MaxPool2d;
pub use tensor::Tensor;
