//! Differentiable 1D kernels with explicit forward and backward passes.
//!
//! Every operation is a pure function of its inputs plus an explicit state
//! object. Backward passes take the cached forward quantities and the
//! gradient of a scalar loss with respect to the forward output.

mod activation;
mod batchnorm;
mod conv;
mod gemm;
pub mod gradcheck;
mod grads;
mod tensor;

pub use activation::{
    gamma_scale_backward, gamma_scale_forward, relu_backward, relu_forward, sigmoid_backward,
    sigmoid_forward, GAMMA_DOMAIN_TOLERANCE, GAMMA_MIN_BASE,
};
pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, batchnorm_forward_eval, BatchNormCache, BatchNormGrads,
    BatchNormState, BnMode, BN_EPSILON, BN_MOMENTUM,
};
pub use conv::{
    conv1d_backward, conv1d_forward, conv_output_len, tconv1d_backward, tconv1d_forward,
    tconv_output_len, ConvGrads, ConvParams,
};
pub use gradcheck::{
    central_difference, gradient_check, relative_error, GradCheckConfig, GradCheckReport,
    GroupError, LayerKind,
};
pub use grads::GradStore;
pub use tensor::Batch3;
