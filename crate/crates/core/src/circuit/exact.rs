//! Exact gate-averaged moments: every Haar gate is replaced by its one- or
//! two-copy average, so the results carry no sampling error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ONE, ZERO};

use super::kernels;
use super::layout::{CircuitShape, NoisePlacement, PreparedNoise};

/// Largest n for the doubled-space propagation (operator of size 4^n x 4^n).
pub const MAX_TWO_COPY_QUBITS: usize = 6;

/// Largest n for the single-copy propagation.
pub const MAX_ONE_COPY_QUBITS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoCopyMoments {
    pub n: usize,
    /// E[p_x^2] indexed by x.
    pub second_moments: Vec<f64>,
    /// E[Σ_x p_x^2].
    pub collision: f64,
}

impl TwoCopyMoments {
    /// Z = 2^n E[Σ p_x^2] - 1.
    pub fn scaled_collision(&self) -> f64 {
        (1u64 << self.n) as f64 * self.collision - 1.0
    }
}

/// E[ρ ⊗ ρ] over the gate ensemble, flattened row-major on 2n qubits
/// (copy A qubits 0..n, copy B qubits n..2n).
pub fn two_copy_state(shape: &CircuitShape, noise: &PreparedNoise) -> Result<Vec<C64>> {
    two_copy_state_pair(shape, noise, noise)
}

/// E[ρ_A ⊗ ρ_B] where both copies share the sampled gates but copy A sees
/// `noise_a` and copy B sees `noise_b`. Both placements must agree on mode.
pub fn two_copy_state_pair(shape: &CircuitShape, noise_a: &PreparedNoise, noise_b: &PreparedNoise) -> Result<Vec<C64>> {
    let n = shape.n;
    if noise_a.placement.mode != noise_b.placement.mode {
        return Err(Error::Config("copies use different placement modes".into()));
    }
    if n > MAX_TWO_COPY_QUBITS {
        return Err(Error::TooManyQubits {
            what: "two-copy propagation",
            n,
            max: MAX_TWO_COPY_QUBITS,
        });
    }
    let m = 2 * n;
    let dim = 1usize << m;
    let mut x = vec![ZERO; dim * dim];
    x[0] = ONE;
    for (l, layer) in shape.layers.iter().enumerate() {
        for support in layer {
            kernels::two_copy_twirl(&mut x, n, support);
        }
        if let (Some(sa), Some(sb)) = (
            noise_a.superop_after(l, shape.depth),
            noise_b.superop_after(l, shape.depth),
        ) {
            for q in 0..n {
                kernels::apply_superop(&mut x, m, q, sa);
                kernels::apply_superop(&mut x, m, q + n, sb);
            }
        }
    }
    for (q, u) in noise_a.rotations.iter().enumerate() {
        kernels::conjugate(&mut x, m, &[q], u);
    }
    for (q, u) in noise_b.rotations.iter().enumerate() {
        kernels::conjugate(&mut x, m, &[q + n], u);
    }
    Ok(x)
}

/// Exact ensemble average of the shifted XEB, 2^n Σ_x E[p_ideal(x) p_noisy(x)] - 1.
pub fn exact_xeb(shape: &CircuitShape, ideal: &PreparedNoise, noisy: &PreparedNoise) -> Result<f64> {
    let n = shape.n;
    let x = two_copy_state_pair(shape, ideal, noisy)?;
    let dim = 1usize << (2 * n);
    let sum: f64 = (0..1usize << n)
        .map(|s| {
            let idx = (s << n) | s;
            x[idx * dim + idx].re
        })
        .sum();
    Ok((1u64 << n) as f64 * sum - 1.0)
}

pub fn two_copy_moment_propagate(shape: &CircuitShape, placement: &NoisePlacement) -> Result<TwoCopyMoments> {
    let noise = PreparedNoise::new(placement, shape.n)?;
    two_copy_moments_with(shape, &noise)
}

pub fn two_copy_moments_with(shape: &CircuitShape, noise: &PreparedNoise) -> Result<TwoCopyMoments> {
    let n = shape.n;
    let x = two_copy_state(shape, noise)?;
    let dim = 1usize << (2 * n);
    let second_moments: Vec<f64> = (0..1usize << n)
        .map(|s| {
            let idx = (s << n) | s;
            x[idx * dim + idx].re
        })
        .collect();
    Ok(TwoCopyMoments {
        n,
        collision: second_moments.iter().sum(),
        second_moments,
    })
}

/// Exact E[p_x] for every x.
pub fn first_moment_propagate(shape: &CircuitShape, placement: &NoisePlacement) -> Result<Vec<f64>> {
    let noise = PreparedNoise::new(placement, shape.n)?;
    first_moments_with(shape, &noise)
}

pub fn first_moments_with(shape: &CircuitShape, noise: &PreparedNoise) -> Result<Vec<f64>> {
    let n = shape.n;
    if n > MAX_ONE_COPY_QUBITS {
        return Err(Error::TooManyQubits {
            what: "single-copy propagation",
            n,
            max: MAX_ONE_COPY_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut x = vec![ZERO; dim * dim];
    x[0] = ONE;
    for (l, layer) in shape.layers.iter().enumerate() {
        for support in layer {
            kernels::one_copy_twirl(&mut x, n, support);
        }
        if let Some(superop) = noise.superop_after(l, shape.depth) {
            for q in 0..n {
                kernels::apply_superop(&mut x, n, q, superop);
            }
        }
    }
    for (q, u) in noise.rotations.iter().enumerate() {
        kernels::conjugate(&mut x, n, &[q], u);
    }
    Ok((0..dim).map(|i| x[i * dim + i].re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelKind, ChannelSpec};
    use crate::circuit::layout::{Architecture, PlacementMode};

    fn noiseless() -> NoisePlacement {
        NoisePlacement::new(
            PlacementMode::AfterEveryGateWithFinalLayer,
            ChannelSpec::standard(ChannelKind::AmpDamp, 0.0, 0.0),
        )
    }

    #[test]
    fn single_qubit_haar_second_moment() {
        let shape = CircuitShape::new(1, 1, Architecture::SingleQubit).unwrap();
        let m = two_copy_moment_propagate(&shape, &noiseless()).unwrap();
        assert!((m.second_moments[0] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn noiseless_collision_is_design_value() {
        // Haar state in dimension D: E[p_x^2] = 2 / (D (D + 1)).
        let shape = CircuitShape::brickwork(2, 1).unwrap();
        let m = two_copy_moment_propagate(&shape, &noiseless()).unwrap();
        for v in &m.second_moments {
            assert!((v - 2.0 / 20.0).abs() < 1e-14);
        }
    }

    #[test]
    fn first_moments_sum_to_one() {
        let shape = CircuitShape::brickwork(4, 3).unwrap();
        let placement = NoisePlacement::new(
            PlacementMode::AfterEveryGateWithFinalLayer,
            ChannelSpec::standard(ChannelKind::AmpThenDep, 0.2, 0.1),
        );
        let m = first_moment_propagate(&shape, &placement).unwrap();
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn limit_enforced() {
        let shape = CircuitShape::brickwork(8, 1).unwrap();
        assert!(matches!(
            two_copy_moment_propagate(&shape, &noiseless()),
            Err(Error::TooManyQubits { .. })
        ));
    }
}
