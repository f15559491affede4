#![forbid(unsafe_code)]

//! Bilinearly coupled two-state Markov chains on weighted undirected
//! networks.
//!
//! Each node of a weighted graph carries a continuous-time two-state chain;
//! chains at adjacent nodes interact through a bilinear term between
//! opposite states. The resulting flow on the unit cube has a unique
//! globally attracting interior steady state whenever all rates are strictly
//! positive, and the relative entropy to that state acts as the natural
//! descent diagnostic.
//!
//! The crate provides:
//!
//! - [`graph`]: weighted graphs, the combinatorial Laplacian, connectivity,
//!   and the spectral gap.
//! - [`dynamics`]: the vector field in both algebraic forms, its Jacobian,
//!   boundary behavior, and a fixed-step RK4 integrator with steady-state
//!   detection.
//! - [`entropy`]: relative entropy, its flow derivative, and the Laplacian
//!   pairings appearing in the descent decomposition.
//! - [`steady`]: Newton, fixed-point, and relaxation solvers plus the
//!   closed forms and bounds satisfied by the equilibrium.
//! - [`hypercube`]: the product embedding into corner-state distributions
//!   and its entropy-preservation identities.
//! - [`verify`]: seeded property suites over random instances.
//! - [`presets`], [`files`]: canonical instances and the on-disk formats
//!   used by the `mcnet` binary.

pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod files;
pub mod graph;
pub mod hypercube;
mod linalg;
pub mod presets;
pub mod steady;
pub mod verify;

pub use dynamics::{ChainParams, StateVector, Trajectory};
pub use error::{Error, Result};
pub use graph::{LaplacianView, WeightedGraph};
pub use steady::{Method, SolveMethod, SteadyState};
