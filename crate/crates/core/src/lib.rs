//! Spectral-norm rank-k Hankel approximation of black-box sequence models over
//! a one-letter alphabet, and extraction of the corresponding weighted finite
//! automaton.
//!
//! The pipeline reads a function `f: ℕ → ℝ` from a [`SequenceOracle`], builds
//! the truncated Hankel matrix of `f`, computes the AAK-optimal rank-k
//! approximant of that truncation through its Schmidt pair, recovers the
//! rational symbol of the approximant and finally extracts a `k`-state
//! [`Wfa`] with the spectral method. [`bounds`] turns a completed run into
//! computable error certificates.
//!
//! ```
//! use aakwfa::{aak, fixtures, wfa, NoiseSpec};
//!
//! let oracle = fixtures::even_geometric(1.0 / 3.0);
//! let result = aak::aak_approximate(&oracle, 1, 40, &NoiseSpec::disabled()).unwrap();
//! assert!((result.sigma_k_n - 0.1).abs() < 1e-9);
//! let window = wfa::recover_window(&result.symbol, 1).unwrap();
//! let automaton = wfa::spectral_extract(&window).unwrap();
//! assert_eq!(automaton.states(), 1);
//! ```

pub mod aak;
pub mod bounds;
mod error;
pub mod fixtures;
pub mod hankel;
mod linalg;
pub mod oracle;
pub mod rational;
pub mod wfa;

pub use aak::{AakOptions, AakResult, SchmidtPair, Warning};
pub use bounds::ErrorReport;
pub use error::{Error, Result};
pub use hankel::{CoefficientStream, HankelBlock, NoiseLayout, NoiseSpec, ToeplitzBlock};
pub use oracle::{BeyondTable, ElmanOracle, FnOracle, Horizon, SequenceOracle, TableOracle};
pub use rational::{PartialFractionTerm, Polynomial, RationalSymbol, Root};
pub use wfa::{CoefficientWindow, Wfa};

pub use num_complex::Complex64;
