//! Monte Carlo toolkit for dual fragmentation and coagulation operators on
//! the finite and infinite simplex, the Markov chains they generate, and the
//! genealogies of discrete and continuous-state Yule processes.
//!
//! | Module | Contents |
//! |---|---|
//! | [`partition`] | mass partitions, ranking, size-biased picks, validation |
//! | [`distributions`] | gamma, Dirichlet, Poisson-Dirichlet and subordinator-jump samplers |
//! | [`operators`] | `Frag_k`, `Coag_k`, `Frag_∞`, `Coag_a` and the bridge construction |
//! | [`chains`] | fragmentation/coagulation chains, Poisson subordination, coalescents |
//! | [`yule`] | Yule processes, their terminal populations and genealogies |
//! | [`stats`] | two-sample KS, chi-square and moment checks |
//! | [`verify`] | named verification scenarios with pass/fail reports |
//!
//! All randomness flows through [`rng::RngStream`], so every sampler is a
//! pure function of its parameters and stream.

// Parameter checks are written `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chains;
pub mod distributions;
pub mod error;
pub mod io;
pub mod operators;
pub mod partition;
pub mod rng;
pub mod special;
pub mod stats;
pub mod verify;
pub mod yule;

pub use error::{Error, Result};
pub use partition::{rank, MassPartition, RankedPartition, TruncatedRankedPartition, Validate};
pub use rng::RngStream;
