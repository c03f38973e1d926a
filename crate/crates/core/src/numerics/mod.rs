//! Dense f64 tensors, affine layers, normalisations, activations and Adam.
//!
//! Differentiation is explicit: every kernel that participates in training has
//! a matching `*_backward` function and the model composes them by hand.

mod adam;
mod gradcheck;
mod linear;
mod ops;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{finite_diff_check, GradCheck};
pub use linear::LinearLayer;
pub use ops::{
    dot, gelu, gelu_grad, gelu_scalar, layer_norm, layer_norm_backward_rows, layer_norm_rows,
    sigmoid, sigmoid_scalar, softmax, softmax_backward_in_place, softmax_in_place, LayerNormCache,
    LN_EPS,
};
pub use tensor::Tensor;
