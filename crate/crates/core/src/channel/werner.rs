//! Coefficients of the Haar-twirled two-copy noise map.
//!
//! With M the U⊗U twirl on two qubits and N the single-qubit noise,
//! M∘(N⊗N)∘M maps I ↦ (1-a) I + 2a S and S ↦ b I + (1-2b) S.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::haar::haar_unitary;
use crate::error::{Error, Result};
use crate::linalg::{identity, kron, swap, trace, CMatrix, C64};
use crate::stats::{Accumulator, Estimate};

use super::kraus::KrausChannel;
use super::ptm::PauliTransferMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCoefficients {
    pub a: f64,
    pub b: f64,
}

impl PairCoefficients {
    pub fn c(&self) -> f64 {
        self.a + 2.0 * self.b
    }

    /// Action on the (I, S) coefficient pair.
    pub fn werner_matrix(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.a, self.b], [2.0 * self.a, 1.0 - 2.0 * self.b]]
    }
}

/// Coefficients (alpha, beta) with E_U[(U⊗U) X (U⊗U)^dagger] = alpha I + beta S,
/// for X on two copies of a `dim`-dimensional system.
pub fn two_copy_twirl(x: &CMatrix, dim: usize) -> (C64, C64) {
    let d = dim as f64;
    let tr = trace(x);
    let tr_s = (x * swap(dim)).trace();
    let norm = d * d - 1.0;
    ((tr - tr_s / d) / norm, (tr_s - tr / d) / norm)
}

/// Exact a and b for a single-qubit channel.
pub fn pair_coefficients(ch: &KrausChannel) -> Result<PairCoefficients> {
    if ch.arity() != 1 {
        return Err(Error::Dimension {
            expected: 2,
            got: ch.dim(),
        });
    }
    let doubled = ch.doubled();
    let (_, beta) = two_copy_twirl(&doubled.apply(&identity(4))?, 2);
    let (alpha, _) = two_copy_twirl(&doubled.apply(&swap(2))?, 2);
    Ok(PairCoefficients {
        a: beta.re / 2.0,
        b: alpha.re,
    })
}

/// The same coefficients written through transfer-matrix entries; valid for
/// any trace-preserving map, CP or not.
pub fn pair_coefficients_from_ptm(ptm: &PauliTransferMap) -> PairCoefficients {
    let shift: f64 = (1..4).map(|j| ptm.t(0, j).powi(2)).sum();
    let inner: f64 = (1..4)
        .flat_map(|i| (1..4).map(move |j| (i, j)))
        .map(|(i, j)| ptm.t(i, j).powi(2))
        .sum();
    PairCoefficients {
        a: shift / 3.0,
        b: 0.5 - (shift + inner) / 6.0,
    }
}

/// Monte Carlo estimates of (a, b) by sampling the twirl unitary.
pub fn pair_coefficients_mc<R: Rng + ?Sized>(
    ch: &KrausChannel,
    samples: usize,
    rng: &mut R,
) -> Result<(Estimate, Estimate)> {
    let doubled = ch.doubled();
    let image_i = doubled.apply(&identity(4))?;
    let image_s = doubled.apply(&swap(2))?;
    let mut acc_a = Accumulator::new();
    let mut acc_b = Accumulator::new();
    for _ in 0..samples {
        let u = haar_unitary(2, rng)?;
        let uu = kron(&u, &u);
        let uu_dag = uu.adjoint();
        let yi = &uu * &image_i * &uu_dag;
        let ys = &uu * &image_s * &uu_dag;
        acc_a.push(yi[(0b01, 0b10)].re / 2.0);
        acc_b.push(ys[(0b01, 0b01)].re);
    }
    Ok((acc_a.estimate(), acc_b.estimate()))
}

/// Monte Carlo estimate of the twirl strength, 2(1 - <0|U^dagger N(U|0><0|U^dagger) U|0>).
pub fn twirl_strength_mc<R: Rng + ?Sized>(ch: &KrausChannel, samples: usize, rng: &mut R) -> Result<Estimate> {
    let mut acc = Accumulator::new();
    for _ in 0..samples {
        let u = haar_unitary(2, rng)?;
        let psi = u.column(0).into_owned();
        let rho = &psi * psi.adjoint();
        let out = ch.apply(&rho)?;
        let fidelity = (psi.adjoint() * out * &psi)[(0, 0)].re;
        acc.push(2.0 * (1.0 - fidelity));
    }
    Ok(acc.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::spec::{Order, StandardNoise};

    /// Twirl of a two-qubit operator written out entrywise.
    fn werner_from_entries(x: &CMatrix) -> (f64, f64) {
        let e = |i: usize, j: usize, k: usize, l: usize| x[(i * 2 + j, k * 2 + l)].re;
        let diag = e(0, 0, 0, 0) + e(1, 1, 1, 1);
        let mixed = e(0, 1, 0, 1) + e(1, 0, 1, 0);
        let crossed = e(0, 1, 1, 0) + e(1, 0, 0, 1);
        (
            diag / 6.0 + mixed / 3.0 - crossed / 6.0,
            diag / 6.0 - mixed / 6.0 + crossed / 3.0,
        )
    }

    #[test]
    fn trace_form_matches_entry_form() {
        let noise = StandardNoise::new(Order::AmpThenDep, 0.2, 0.45).unwrap();
        let doubled = noise.channel().doubled();
        for x in [identity(4), swap(2)] {
            let image = doubled.apply(&x).unwrap();
            let (alpha, beta) = two_copy_twirl(&image, 2);
            let (ea, eb) = werner_from_entries(&image);
            assert!((alpha.re - ea).abs() < 1e-14);
            assert!((beta.re - eb).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_forms_both_orders() {
        for order in [Order::AmpThenDep, Order::DepThenAmp] {
            let noise = StandardNoise::new(order, 0.3, 0.55).unwrap();
            let pc = pair_coefficients(&noise.channel()).unwrap();
            assert!((pc.a - noise.pair_a()).abs() < 1e-13, "{order:?}");
            assert!((pc.b - noise.pair_b()).abs() < 1e-13, "{order:?}");
            let via_ptm = pair_coefficients_from_ptm(&noise.ptm());
            assert!((via_ptm.a - pc.a).abs() < 1e-13);
            assert!((via_ptm.b - pc.b).abs() < 1e-13);
        }
    }

    #[test]
    fn noiseless_is_fixed_point() {
        let pc = pair_coefficients(&KrausChannel::identity(1)).unwrap();
        assert!(pc.a.abs() < 1e-15 && pc.b.abs() < 1e-15);
    }
}
