//! Bipartite quantum dynamics: exact whole-system propagation, the
//! time-dependent Hartree factorization, branch phases, and the
//! conservation-law bookkeeping used to compare them.

pub mod branches;
pub mod error;
pub mod exactprop;
pub mod hamiltonian;
pub mod hilbert;
pub mod meanfield;
pub mod observables;
pub mod operator;
pub mod trajectory;

#[doc(hidden)]
pub mod oracles;

pub use error::{Error, Result};
pub use hilbert::{BipartiteSpace, Capacity, StateVector};
pub use operator::{Apply, LinearOperator, OperatorSum};
pub use trajectory::TrajectoryRecord;
