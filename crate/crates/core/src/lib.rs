//! Feedforward networks with quadratic neurons.
//!
//! A quadratic neuron computes `g(xᵀQx + wᵀx + b)` with a symmetric `Q`, so
//! its decision boundary is a hyper-quadric instead of a hyperplane. This
//! crate implements, from scratch:
//!
//! - [`tensor`]: dense row-major vectors/matrices and a seeded RNG;
//! - [`quadlogit`]: a single quadratic sigmoid neuron trained with SGD
//!   (learns XOR);
//! - [`layers`]: affine, quadratic, and reduced-parameter quadratic (RPQ)
//!   layers with vectorized forward/backward kernels;
//! - [`network`]: heterogeneous layer stacks, cross-entropy training, and
//!   per-sample SGD;
//! - [`gradcheck`]: an independent central-difference oracle for every
//!   analytic gradient;
//! - [`datasets`]: XOR, Gaussian-cluster generation, MNIST IDX and CSV
//!   loading, splitting;
//! - [`io`]: a flat text model format with bitwise save/load round-trips.
//!
//! All numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the `*64` aliases below fix the default `f64` precision used by the CLI
//! and the test suites.

pub mod activation;
pub mod datasets;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod layers;
pub mod network;
pub mod quadlogit;
pub mod scalar;
pub mod tensor;

pub use activation::ActivationKind;
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{Matrix, Rng, Vector};

pub type Vector64 = tensor::Vector<f64>;
pub type Matrix64 = tensor::Matrix<f64>;
pub type QuadLogit64 = quadlogit::QuadLogitModel<f64>;
pub type Layer64 = layers::Layer<f64>;
pub type Network64 = network::Network<f64>;
pub type TrainConfig64 = network::TrainConfig<f64>;
pub type Dataset64 = datasets::Dataset<f64>;

pub type Vector32 = tensor::Vector<f32>;
pub type Matrix32 = tensor::Matrix<f32>;
pub type Network32 = network::Network<f32>;
