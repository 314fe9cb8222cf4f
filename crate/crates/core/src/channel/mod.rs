//! Single-qubit noise channels and the scalar quantities derived from them.

pub mod iterated;
pub mod kraus;
pub mod ptm;
pub mod spec;
pub mod werner;

pub use iterated::{effective_rotation_noise, iterated_zero_overlap, rotation, IteratedFit};
pub use kraus::KrausChannel;
pub use ptm::PauliTransferMap;
pub use spec::{r_value, ChannelKind, ChannelSpec, GeneralMap, MadeChannel, Order, StandardNoise};
pub use werner::{pair_coefficients, pair_coefficients_from_ptm, PairCoefficients};

use crate::error::Result;

/// Strength of the depolarizing channel obtained by Haar-twirling `ch`.
pub fn twirl_strength(ch: &KrausChannel) -> Result<f64> {
    Ok(ch.ptm()?.twirl_strength())
}
