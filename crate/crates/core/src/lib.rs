//! Model-variant selection and placement (MVSP) for DNN inference serving on
//! edge-computing networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`] holds the problem data (topology, variant catalog, demand)
//!   and the seeded generator used by the experiments.
//! * [`formulation`] evaluates every objective term and constraint of the
//!   placement problem on a candidate [`Solution`]. All solvers defer to it.
//! * [`linearize`] produces the exact mixed-integer linear reformulation and
//!   reads/writes it in MPS form.
//! * [`solver`] contains the branch-and-bound search and the greedy/local
//!   search heuristic; [`oracle`] is the exhaustive ground truth for small
//!   instances.
//! * [`experiments`] drives the co-location, load and weight sweeps.

pub mod error;
pub mod experiments;
pub mod formulation;
pub mod instance;
pub mod linearize;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
pub use formulation::{FeasibilityReport, Solution};
pub use instance::{Instance, Topology, VariantCatalog, DemandMatrix};
pub use solver::{SolveBudget, SolveResult, SolveStatus};
