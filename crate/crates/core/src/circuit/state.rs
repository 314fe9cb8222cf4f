use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_hermitian_eigenvalue, CMatrix, C64, ONE, ZERO};

use super::kernels;
use super::layout::{Circuit, Gate, PreparedNoise};

/// Largest register handled by the density-matrix simulator.
pub const MAX_SIM_QUBITS: usize = 12;

/// Conditioning events below this probability are rejected.
pub const CONDITIONING_FLOOR: f64 = 1e-14;

/// Density matrix on `n` qubits, row-major; qubit 0 is the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero_state(n: usize) -> Result<Self> {
        if n > MAX_SIM_QUBITS {
            return Err(Error::TooManyQubits {
                what: "density-matrix simulation",
                n,
                max: MAX_SIM_QUBITS,
            });
        }
        let dim = 1usize << n;
        let mut data = vec![ZERO; dim * dim];
        data[0] = ONE;
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.dim(), self.dim(), &self.data)
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        kernels::conjugate(&mut self.data, self.n, &gate.qubits, &gate.unitary);
    }

    pub fn apply_unitary(&mut self, qubits: &[usize], u: &CMatrix) {
        kernels::conjugate(&mut self.data, self.n, qubits, u);
    }

    pub fn apply_single_qubit_superop(&mut self, qubit: usize, superop: &CMatrix) {
        kernels::apply_superop(&mut self.data, self.n, qubit, superop);
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    pub fn purity(&self) -> f64 {
        let dim = self.dim();
        let mut sum = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                sum += (self.entry(i, j) * self.entry(j, i)).re;
            }
        }
        sum
    }

    /// Hermitian within 1e-10, unit trace within 1e-10, eigenvalues >= -1e-9.
    pub fn check_invariants(&self) -> bool {
        let dim = self.dim();
        let hermitian =
            (0..dim).all(|i| (0..dim).all(|j| (self.entry(i, j) - self.entry(j, i).conj()).norm() <= 1e-10));
        let unit_trace = (self.trace() - ONE).norm() <= 1e-10;
        hermitian && unit_trace && min_hermitian_eigenvalue(&self.to_matrix()) >= -1e-9
    }

    pub fn output_distribution(&self) -> OutputDistribution {
        let dim = self.dim();
        OutputDistribution {
            n: self.n,
            probs: (0..dim).map(|i| self.entry(i, i).re.max(0.0)).collect(),
        }
    }
}

/// Gates layer by layer with the placement's noise, starting from |0^n>.
pub fn simulate_gates(n: usize, layers: &[Vec<Gate>], noise: &PreparedNoise) -> Result<DensityMatrix> {
    let mut rho = DensityMatrix::zero_state(n)?;
    let depth = layers.len();
    for (l, layer) in layers.iter().enumerate() {
        for gate in layer {
            rho.apply_gate(gate);
        }
        if let Some(superop) = noise.superop_after(l, depth) {
            for q in 0..n {
                rho.apply_single_qubit_superop(q, superop);
            }
        }
    }
    for (q, u) in noise.rotations.iter().enumerate() {
        rho.apply_unitary(&[q], u);
    }
    Ok(rho)
}

pub fn simulate(circuit: &Circuit) -> Result<DensityMatrix> {
    let noise = PreparedNoise::new(&circuit.placement, circuit.n)?;
    simulate_gates(circuit.n, &circuit.layers, &noise)
}

/// Computational-basis output probabilities, index x with x_1 as the most
/// significant bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub n: usize,
    pub probs: Vec<f64>,
}

impl OutputDistribution {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << n {
            return Err(Error::Dimension {
                expected: 1 << n,
                got: probs.len(),
            });
        }
        Ok(Self { n, probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            probs: vec![1.0 / (1u64 << n) as f64; 1 << n],
        }
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        match qubits.iter().find(|&&q| q >= self.n) {
            Some(&q) => Err(Error::Dimension {
                expected: self.n,
                got: q + 1,
            }),
            None => Ok(()),
        }
    }

    /// Pr[X_q = values_q for every listed qubit].
    pub fn marginal(&self, qubits: &[usize], values: &[u8]) -> Result<f64> {
        self.check_qubits(qubits)?;
        if qubits.len() != values.len() {
            return Err(Error::Dimension {
                expected: qubits.len(),
                got: values.len(),
            });
        }
        let mut mask = 0usize;
        let mut want = 0usize;
        for (&q, &v) in qubits.iter().zip(values) {
            let b = kernels::bit(self.n, q);
            mask |= b;
            if v != 0 {
                want |= b;
            }
        }
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(x, _)| x & mask == want)
            .map(|(_, p)| p)
            .sum())
    }

    /// Pr[X_i = x_i | X_j = x_j for j in `given`], all values read from `x`.
    pub fn conditional(&self, i: usize, x: usize, given: &[usize]) -> Result<f64> {
        self.check_qubits(&[i])?;
        self.check_qubits(given)?;
        let value = |q: usize| ((x & kernels::bit(self.n, q)) != 0) as u8;
        let given_values: Vec<u8> = given.iter().map(|&q| value(q)).collect();
        let denom = self.marginal(given, &given_values)?;
        if denom < CONDITIONING_FLOOR {
            return Err(Error::DegenerateConditioning { probability: denom });
        }
        let mut joint_q = given.to_vec();
        joint_q.push(i);
        let mut joint_v = given_values;
        joint_v.push(value(i));
        Ok(self.marginal(&joint_q, &joint_v)? / denom)
    }

    pub fn collision(&self) -> f64 {
        self.probs.iter().map(|p| p * p).sum()
    }

    /// 2^n Σ (p_x - 2^-n)^2.
    pub fn uniform_distance(&self) -> f64 {
        let scale = (1u64 << self.n) as f64;
        scale * self.probs.iter().map(|p| (p - 1.0 / scale).powi(2)).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Xeb {
    /// 2^n Σ p_ideal p_noisy.
    pub raw: f64,
    /// raw - 1.
    pub shifted: f64,
}

pub fn xeb(ideal: &OutputDistribution, noisy: &OutputDistribution) -> Result<Xeb> {
    if ideal.n != noisy.n {
        return Err(Error::Dimension {
            expected: ideal.n,
            got: noisy.n,
        });
    }
    let scale = (1u64 << ideal.n) as f64;
    let raw = scale * ideal.probs.iter().zip(&noisy.probs).map(|(a, b)| a * b).sum::<f64>();
    Ok(Xeb {
        raw,
        shifted: raw - 1.0,
    })
}

/// Parse a bitstring like "0110"; the first character is qubit 0.
pub fn parse_bitstring(s: &str) -> Result<usize> {
    if s.is_empty() || s.len() > 63 {
        return Err(Error::Config(format!("bad bitstring `{s}`")));
    }
    s.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::Config(format!("bad bitstring `{s}`"))),
    })
}

pub fn format_bitstring(x: usize, n: usize) -> String {
    (0..n)
        .map(|q| if (x >> (n - 1 - q)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Bit of qubit `q` in `x`.
pub fn bit_of(x: usize, n: usize, q: usize) -> u8 {
    ((x >> (n - 1 - q)) & 1) as u8
}

pub fn hamming_weight(x: usize) -> usize {
    x.count_ones() as usize
}
