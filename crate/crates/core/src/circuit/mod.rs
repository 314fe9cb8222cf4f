//! Exact simulation of noisy brickwork circuits.

pub mod exact;
pub mod haar;
pub(crate) mod kernels;
pub mod layout;
pub mod state;

pub use exact::{first_moment_propagate, two_copy_moment_propagate, TwoCopyMoments};
pub use haar::haar_unitary;
pub use layout::{
    Architecture, Circuit, CircuitRecord, CircuitShape, Gate, NoisePlacement, PlacementMode, PreparedNoise,
};
pub use state::{
    format_bitstring, parse_bitstring, simulate, simulate_gates, xeb, DensityMatrix, OutputDistribution, Xeb,
};
