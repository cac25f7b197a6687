//! Quantization entropy of white Lévy noise.
//!
//! The toolkit measures the entropy rate `H_{m,n}` of doubly quantized
//! (time step `1/n`, amplitude step `1/m`) white noise by Monte Carlo, and
//! predicts it by closed-form asymptotics for the stable, impulsive Poisson,
//! Gaussian, and stable-plus-Poisson families. A lossless range coder turns
//! the entropy numbers into achieved bit rates.
//!
//! Modules follow the pipeline:
//!
//! * [`models`] — noise parametrizations, the Lévy–Khintchine triplet, and
//!   the finite-measure / impulsive Poisson reduction;
//! * [`sampling`] — exact-in-distribution increment samplers with
//!   reproducible, splittable RNG streams;
//! * [`quant`] — amplitude quantization, histograms, and step densities;
//! * [`entropy`] — plug-in and differential entropy, density inversion,
//!   total-variation distances, and the continuity bound;
//! * [`asymptotics`] — `kappa(n)`, `zeta(n)`, predicted `H_{m,n}`,
//!   admissible `(n, m)` schedules, and model comparisons;
//! * [`codec`] — adaptive range coder over quantizer indices;
//! * [`stats`] — the two-sample Kolmogorov–Smirnov test used by the
//!   distributional identity checks.

pub mod asymptotics;
pub mod codec;
pub mod entropy;
pub mod error;
pub mod models;
pub mod quant;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
