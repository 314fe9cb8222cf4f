//! In-place kernels on flat row-major `dim x dim` operators over `m` qubits.
//! Qubit 0 is the most significant bit of an index.

use crate::linalg::{CMatrix, C64, ZERO};

pub(crate) fn bit(m: usize, qubit: usize) -> usize {
    1 << (m - 1 - qubit)
}

/// Offset of every local configuration; the first listed qubit is the
/// most significant bit of the local index.
pub(crate) fn offsets(m: usize, qubits: &[usize]) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|s| {
            qubits
                .iter()
                .enumerate()
                .filter(|(t, _)| (s >> (k - 1 - t)) & 1 == 1)
                .map(|(_, &q)| bit(m, q))
                .sum()
        })
        .collect()
}

pub(crate) fn bases(dim: usize, offs: &[usize]) -> Vec<usize> {
    let mask = *offs.last().expect("non-empty");
    (0..dim).filter(|i| i & mask == 0).collect()
}

/// rho <- U rho U^dagger with U acting on `qubits`.
pub(crate) fn conjugate(rho: &mut [C64], m: usize, qubits: &[usize], u: &CMatrix) {
    let dim = 1usize << m;
    let offs = offsets(m, qubits);
    let bs = bases(dim, &offs);
    let k = offs.len();
    let mut buf = vec![ZERO; k];
    let mut out = vec![ZERO; k];
    for col in 0..dim {
        for &b in &bs {
            for (s, o) in offs.iter().enumerate() {
                buf[s] = rho[(b + o) * dim + col];
            }
            for (s, v) in out.iter_mut().enumerate() {
                *v = (0..k).map(|t| u[(s, t)] * buf[t]).sum();
            }
            for (s, o) in offs.iter().enumerate() {
                rho[(b + o) * dim + col] = out[s];
            }
        }
    }
    for row in 0..dim {
        let base_row = row * dim;
        for &b in &bs {
            for (s, o) in offs.iter().enumerate() {
                buf[s] = rho[base_row + b + o];
            }
            for (s, v) in out.iter_mut().enumerate() {
                *v = (0..k).map(|t| buf[t] * u[(s, t)].conj()).sum();
            }
            for (s, o) in offs.iter().enumerate() {
                rho[base_row + b + o] = out[s];
            }
        }
    }
}

/// Apply a single-qubit superoperator (4x4 on row-major vec) to `qubit`.
pub(crate) fn apply_superop(rho: &mut [C64], m: usize, qubit: usize, superop: &CMatrix) {
    let dim = 1usize << m;
    let hi = bit(m, qubit);
    let offs = [0, hi];
    let bs: Vec<usize> = (0..dim).filter(|i| i & hi == 0).collect();
    let mut buf = [ZERO; 4];
    for &rb in &bs {
        for &cb in &bs {
            for a in 0..2 {
                for b in 0..2 {
                    buf[a * 2 + b] = rho[(rb + offs[a]) * dim + cb + offs[b]];
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    let row = a * 2 + b;
                    rho[(rb + offs[a]) * dim + cb + offs[b]] = (0..4).map(|t| superop[(row, t)] * buf[t]).sum();
                }
            }
        }
    }
}

/// Haar average of U(.)U^dagger on `qubits`: X -> Tr_sup(X) ⊗ I / D.
pub(crate) fn one_copy_twirl(x: &mut [C64], m: usize, qubits: &[usize]) {
    let dim = 1usize << m;
    let offs = offsets(m, qubits);
    let bs = bases(dim, &offs);
    let d = offs.len() as f64;
    for &rb in &bs {
        for &cb in &bs {
            let tr: C64 = offs.iter().map(|o| x[(rb + o) * dim + cb + o]).sum();
            for (s, os) in offs.iter().enumerate() {
                for (t, ot) in offs.iter().enumerate() {
                    x[(rb + os) * dim + cb + ot] = if s == t { tr / d } else { ZERO };
                }
            }
        }
    }
}

/// Haar average of (U⊗U)(.)(U⊗U)^dagger where U acts on `qubits` of copy A
/// and the matching qubits of copy B (`qubits[i] + n`). The block on the
/// support becomes alpha I + beta S with the Weingarten coefficients.
pub(crate) fn two_copy_twirl(x: &mut [C64], n: usize, qubits: &[usize]) {
    let m = 2 * n;
    let dim = 1usize << m;
    let mut support: Vec<usize> = qubits.to_vec();
    support.extend(qubits.iter().map(|q| q + n));
    let offs = offsets(m, &support);
    let bs = bases(dim, &offs);
    let d_copy = 1usize << qubits.len();
    let d = d_copy as f64;
    let swap: Vec<usize> = (0..offs.len()).map(|s| (s % d_copy) * d_copy + s / d_copy).collect();
    let norm = d * d - 1.0;
    for &rb in &bs {
        for &cb in &bs {
            let mut tr = ZERO;
            let mut tr_s = ZERO;
            for (s, os) in offs.iter().enumerate() {
                tr += x[(rb + os) * dim + cb + os];
                tr_s += x[(rb + os) * dim + cb + offs[swap[s]]];
            }
            let alpha = (tr - tr_s / d) / norm;
            let beta = (tr_s - tr / d) / norm;
            for (s, os) in offs.iter().enumerate() {
                for (t, ot) in offs.iter().enumerate() {
                    let mut v = ZERO;
                    if s == t {
                        v += alpha;
                    }
                    if t == swap[s] {
                        v += beta;
                    }
                    x[(rb + os) * dim + cb + ot] = v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, kron, max_abs_diff, pauli};

    fn to_flat(m: &CMatrix) -> Vec<C64> {
        m.transpose().iter().copied().collect()
    }

    fn from_flat(v: &[C64], dim: usize) -> CMatrix {
        CMatrix::from_row_slice(dim, dim, v)
    }

    #[test]
    fn conjugate_matches_dense_product() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])
            * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rho = kron(&kron(&pauli(1), &identity(2)), &(identity(2) + pauli(3)));
        let mut flat = to_flat(&rho);
        conjugate(&mut flat, 3, &[1], &h);
        let u = kron(&kron(&identity(2), &h), &identity(2));
        let expected = &u * &rho * u.adjoint();
        assert!(max_abs_diff(&from_flat(&flat, 8), &expected) < 1e-14);
    }

    #[test]
    fn superop_matches_kraus() {
        let ch = crate::channel::KrausChannel::amplitude_damping(0.3).unwrap();
        let rho = kron(&(identity(2) + pauli(1)), &(identity(2) - pauli(3))) * c(0.25, 0.0);
        let mut flat = to_flat(&rho);
        apply_superop(&mut flat, 2, 1, &ch.superoperator());
        let expected = crate::channel::KrausChannel::identity(1)
            .tensor(&ch)
            .apply(&rho)
            .unwrap();
        assert!(max_abs_diff(&from_flat(&flat, 4), &expected) < 1e-14);
    }
}
