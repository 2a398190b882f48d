//! Principal kurtosis analysis (PKA) for blind source separation.
//!
//! The crate builds the fourth-order statistical tensor of whitened complex
//! data, extracts its eigenvectors one at a time under a non-zero volume
//! constraint with Riemannian gradient steps, and ships the usual baselines
//! (orthogonal fixed-point deflation, complex FastICA, PSA, JADE) together
//! with the separation metrics used to compare them (ISI, ACC, SDR, eigen
//! cosine similarity, radar SIR improvement).
//!
//! Everything here is pure computation over `alloc`; file formats, the CLI
//! and the experiment harness live in the `pka-tools` crate.
//!
//! ```
//! use pka_core::signal::{gen_sine, gen_square, mix, random_mixing_matrix, SourceSet};
//! use pka_core::whitening::whiten;
//! use pka_core::tensor::fourth_moment_tensor;
//! use pka_core::separators::{pka, Direction, PkaConfig};
//!
//! let sources = SourceSet::new(
//!     vec![
//!         gen_sine(9.0, 1000.0, 0.5, 0.0).unwrap(),
//!         gen_square(8.0, 1000.0, 0.5).unwrap(),
//!     ],
//!     vec!["sine".into(), "square".into()],
//! )
//! .unwrap();
//! let a = random_mixing_matrix(2, false, 3).unwrap();
//! let x = mix(&sources, &a).unwrap();
//! let white = whiten(&x, None).unwrap();
//! let tensor = fourth_moment_tensor(&white.z).unwrap();
//! let cfg = PkaConfig { direction: Direction::Descent, ..PkaConfig::default() };
//! let w = pka(&tensor, 2, &cfg).unwrap();
//! assert_eq!(w.len(), 2);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod radar;
pub mod rng;
pub mod separators;
pub mod signal;
pub mod tensor;
pub mod whitening;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
