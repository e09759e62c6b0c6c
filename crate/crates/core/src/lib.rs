pub mod device;
pub mod error;
pub mod lattice;
pub mod model;
pub mod network;
pub mod observe;
pub mod solver;
pub mod sparse;
pub mod specfun;

pub use device::{DeviceParams, QutritData, Spectrum, TightBinding};
pub use error::{CoreError, Result};
pub use lattice::{Boundary, LatticeGeometry, Path, PathKind};
pub use model::{GaugeBasis, LargeNOps, SpinOps, WordBasis};
pub use network::{CouplingSet, DecoherenceBudget, DriveBounds, DriveParams, NetworkParams};
pub use observe::{StateVector, StringConvention};
pub use solver::{EigResult, SweepRecord};
pub use sparse::{BasisTag, LinearOp, SparseOperator};
