//! Dense numerical substrate: matrices, activations, initializers, Adam,
//! variational dropout and the finite-difference gradient checker.

mod activation;
mod adam;
mod dropout;
mod gradcheck;
mod init;
mod matrix;
mod params;

pub use activation::{
    leaky_relu, leaky_relu_grad, sigmoid, sigmoid_grad_from_output, Activation, DEFAULT_LEAKY_SLOPE,
};
pub use adam::{adam_step, AdamConfig};
pub use dropout::{make_variational_mask, DropoutMask};
pub use gradcheck::{
    gradient_check, relative_error, GradCheckReport, ParameterCheck, MAX_COORDS_PER_PARAMETER,
};
pub use init::{
    seeded_rng, uniform_init, uniform_with_rng, xavier_bound, xavier_init, xavier_with_rng,
    EMBEDDING_INIT_RANGE,
};
pub use matrix::Matrix;
pub use params::{Gradients, Named, ParameterSet};
