//! Rate trade-offs for strong coordination of two processors assisted by a
//! coordinator that broadcasts a common message and shares independent
//! randomness with each processor.
//!
//! - [`pmf`]: validated finite distributions, auxiliary channels, composition.
//! - [`info`]: entropies and (conditional) mutual informations in bits.
//! - [`wyner`]: Wyner's common information, the no-shared-randomness rate.
//! - [`ulsr`]: the optimal rate with unlimited shared randomness.
//! - [`dsbs`]: closed forms for the doubly symmetric binary source.
//! - [`region`]: achievable-region membership and the X = Y region.
//! - [`simulator`]: Monte Carlo run of the bin-indexed coding scheme.

pub mod dsbs;
pub mod error;
pub mod fmt;
pub mod info;
pub mod optim;
pub mod pmf;
pub mod region;
pub mod simulator;
pub mod ulsr;
pub mod wyner;

pub use error::{Error, Result};
pub use info::Bits;
pub use optim::SolverOptions;
pub use pmf::{compose, dsbs_joint, load_joint_pmf, tv_distance, AuxChannel, Axis, FullJoint, JointPmf, Pmf};
