//! Repeated application of one channel to |0><0| and the rotated final layer.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Result};
use crate::linalg::{c, CMatrix};

use super::kraus::KrausChannel;
use super::ptm::PauliTransferMap;
use super::spec::{Order, StandardNoise};

/// Maximum deviation tolerated between the sequence and kappa + tau lambda^d.
pub const FIT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IteratedFit {
    pub kappa: f64,
    pub tau: f64,
    pub lambda: f64,
    pub max_residual: f64,
    pub valid: bool,
}

impl IteratedFit {
    pub fn value(&self, d: usize) -> f64 {
        self.kappa + self.tau * self.lambda.powi(d as i32)
    }
}

/// <0|N^d(|0><0|)|0> for d = 0..=d_max via the Bloch-vector recursion.
pub fn zero_overlap_sequence(ptm: &PauliTransferMap, d_max: usize) -> Vec<f64> {
    let mut bloch = [0.0, 0.0, 1.0];
    let mut out = Vec::with_capacity(d_max + 1);
    out.push((1.0 + bloch[2]) / 2.0);
    for _ in 0..d_max {
        let mut next = [0.0; 3];
        for (j, v) in next.iter_mut().enumerate() {
            *v = ptm.t(0, j + 1) + (1..4).map(|i| ptm.t(i, j + 1) * bloch[i - 1]).sum::<f64>();
        }
        bloch = next;
        out.push((1.0 + bloch[2]) / 2.0);
    }
    out
}

/// Closed-form (kappa, tau, lambda) for the standard noise family.
pub fn standard_fit(noise: &StandardNoise) -> (f64, f64, f64) {
    let (p, q) = (noise.p, noise.q);
    let lambda = (1.0 - p) * (1.0 - q);
    let denom = 1.0 - lambda;
    if denom == 0.0 {
        return (1.0, 0.0, 1.0);
    }
    let kappa = match noise.order {
        Order::AmpThenDep => (q + 0.5 * p * (1.0 - q)) / denom,
        Order::DepThenAmp => (0.5 * p + (1.0 - p) * q) / denom,
    };
    (kappa, 1.0 - kappa, lambda)
}

/// Scalar fit from the z-row of the transfer matrix: fixed point
/// z* = t03 / (1 - t33), decay t33.
pub fn scalar_fit(ptm: &PauliTransferMap) -> (f64, f64, f64) {
    let lambda = ptm.t(3, 3);
    if (1.0 - lambda).abs() < 1e-15 {
        return (1.0, 0.0, 1.0);
    }
    let kappa = (1.0 + ptm.t(0, 3) / (1.0 - lambda)) / 2.0;
    (kappa, 1.0 - kappa, lambda)
}

/// The sequence and its fit; `standard` selects the closed form, otherwise
/// the scalar fit is used and `valid` reports whether it reproduces the
/// sequence.
pub fn iterated_zero_overlap(
    ptm: &PauliTransferMap,
    standard: Option<&StandardNoise>,
    d_max: usize,
) -> (Vec<f64>, IteratedFit) {
    let seq = zero_overlap_sequence(ptm, d_max);
    let (kappa, tau, lambda) = match standard {
        Some(noise) => standard_fit(noise),
        None => scalar_fit(ptm),
    };
    let max_residual = seq
        .iter()
        .enumerate()
        .map(|(d, v)| (v - (kappa + tau * lambda.powi(d as i32))).abs())
        .fold(0.0, f64::max);
    let fit = IteratedFit {
        kappa,
        tau,
        lambda,
        max_residual,
        valid: max_residual <= FIT_TOL,
    };
    (seq, fit)
}

/// U(θ, φ) = [[cos θ e^{iφ}, sin θ], [-sin θ, cos θ e^{-iφ}]].
pub fn rotation(theta: f64, phi: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    CMatrix::from_row_slice(
        2,
        2,
        &[
            c(co * phi.cos(), co * phi.sin()),
            c(s, 0.0),
            c(-s, 0.0),
            c(co * phi.cos(), -co * phi.sin()),
        ],
    )
}

/// Amplitude damping followed by the rotation U(θ, φ).
pub fn effective_rotation_noise(q: f64, theta: f64, phi: f64) -> Result<KrausChannel> {
    check_unit("q", q)?;
    let amp = KrausChannel::amplitude_damping(q)?;
    KrausChannel::unitary(rotation(theta, phi))?.compose(&amp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff, pauli};

    #[test]
    fn worked_point() {
        let noise = StandardNoise::new(Order::AmpThenDep, 0.1, 0.2).unwrap();
        let (seq, fit) = iterated_zero_overlap(&noise.ptm(), Some(&noise), 30);
        assert!((fit.kappa - 6.0 / 7.0).abs() < 1e-14);
        assert!((fit.tau - 1.0 / 7.0).abs() < 1e-14);
        assert!((fit.lambda - 0.72).abs() < 1e-14);
        assert!(fit.valid);
        assert_eq!(seq.len(), 31);
    }

    #[test]
    fn noiseless_sequence_is_constant() {
        let (seq, fit) = iterated_zero_overlap(&PauliTransferMap::identity(), None, 10);
        assert!(seq.iter().all(|v| *v == 1.0));
        assert_eq!((fit.kappa, fit.tau, fit.lambda), (1.0, 0.0, 1.0));
    }

    #[test]
    fn scalar_fit_agrees_with_closed_form() {
        for order in [Order::AmpThenDep, Order::DepThenAmp] {
            let noise = StandardNoise::new(order, 0.37, 0.21).unwrap();
            let a = standard_fit(&noise);
            let b = scalar_fit(&noise.ptm());
            assert!((a.0 - b.0).abs() < 1e-13 && (a.2 - b.2).abs() < 1e-13);
        }
    }

    #[test]
    fn rotated_identity_image() {
        let (q, theta, phi) = (0.3, 0.4, 1.1);
        let ch = effective_rotation_noise(q, theta, phi).unwrap();
        let out = ch.apply(&identity(2)).unwrap();
        let s2 = (2.0 * theta).sin();
        let expected = identity(2) - pauli(1) * c(q * phi.cos() * s2, 0.0)
            + pauli(2) * c(q * phi.sin() * s2, 0.0)
            + pauli(3) * c(q * (2.0 * theta).cos(), 0.0);
        assert!(max_abs_diff(&out, &expected) < 1e-14);
    }
}
