//! Deterministic evolutionary-dynamics engine.
//!
//! Two population models live here:
//!
//! * [`finite`] — a finite selection-mutation system: a fitness vector
//!   paired with a column-stochastic mutation matrix, with the Price
//!   decomposition, Fisher's theorem special case, and the dominant
//!   (Perron) eigenpair of the evolution matrix.
//! * [`tree`] — a lazily generated infinite directed tree of programs,
//!   where each node carries a fitness and a child distribution. The
//!   engine propagates normalized population shares along the frontier
//!   with a log-domain total-mass accumulator, so exponentially growing
//!   or decaying populations stay representable.
//!
//! [`zoo`] holds a library of named tree models with closed-form
//! reference quantities, [`analysis`] the classification / preservation /
//! utility layer on top of trajectories, [`gaussian`] the Gaussian
//! mutation-selection closed forms, and [`verify`] the self-check suite
//! run by `evotree verify` and the acceptance tests.

pub mod analysis;
pub mod export;
pub mod finite;
pub mod gaussian;
pub mod particle;
pub mod tree;
pub mod verify;
pub mod zoo;
