//! A finite-horizon laboratory for multilinear averages along cubes.
//!
//! The crate realizes, at explicit horizons, the quantities that organize
//! the pointwise theory of cube averages: the 3-, 7-, and general
//! `2^k - 1`-function averages with paired naive and FFT-convolution
//! evaluators, windowed variants, uniform Wiener-Wintner sup statistics,
//! order-2 and order-3 self-correlation seminorms, the explicit van der
//! Corput inequality, and Kronecker / Conze-Lesigne projections for a small
//! catalog of dynamical systems with known factor structure (irrational
//! rotation, doubling map, skew product, product rotation, plus external
//! sample files).
//!
//! Everything is deterministic: orbits are computed per-index with
//! compensated arithmetic, naive sums are order-canonical, and parallel
//! loops reduce in fixed order, so identical inputs reproduce identical
//! bits regardless of thread count.

pub mod cube_averages;
pub mod cube_general;
pub mod dynamics;
pub mod error;
pub mod factors;
mod fft;
pub mod numeric;
pub mod spectral;

pub use error::{Error, Result};
