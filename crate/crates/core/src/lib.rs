//! Monte Carlo laboratory for sojourn times, fragility indices, expected
//! shortfall and excursion times of generator-based max-stable and
//! generalized Pareto processes above high threshold functions.

// `!(x > 0.0)` guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod estimate;
pub mod excursion;
pub mod functionals;
pub mod generators;
pub mod grid;
pub mod io;
pub mod kv;
pub mod margins;
pub mod oracle;
pub mod processes;
pub mod shortfall;
pub mod sojourn;
pub mod stream;
pub mod validation;

pub use error::{Error, Result};
pub use estimate::MCEstimate;
pub use generators::{GeneratorSpec, KernelShape};
pub use grid::{Grid, GridFunction};
pub use margins::MarginSpec;
pub use processes::{MixingDf, PathEnsemble, ProcessKind};
pub use stream::RandomStream;
