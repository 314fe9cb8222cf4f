use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, min_hermitian_eigenvalue, pauli, CMatrix, ONE};

use super::kraus::{KrausChannel, CPTP_TOL};

/// Single-qubit Pauli transfer matrix, `matrix[i][j] = Tr(σ_i N(σ_j)) / 2`.
///
/// Row 0 is always `(1, 0, 0, 0)`. The transposed view `t(i, j)` gives the
/// coefficient of σ_j in N(σ_i), which is how the moment formulas index it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 4]; 4]", into = "[[f64; 4]; 4]")]
pub struct PauliTransferMap {
    matrix: [[f64; 4]; 4],
}

impl TryFrom<[[f64; 4]; 4]> for PauliTransferMap {
    type Error = Error;

    fn try_from(matrix: [[f64; 4]; 4]) -> Result<Self> {
        Self::new(matrix)
    }
}

impl From<PauliTransferMap> for [[f64; 4]; 4] {
    fn from(ptm: PauliTransferMap) -> Self {
        ptm.matrix
    }
}

impl PauliTransferMap {
    /// Requires a finite matrix whose first row is exactly `(1, 0, 0, 0)`.
    /// Complete positivity is not checked here; see [`Self::min_choi_eigenvalue`].
    pub fn new(matrix: [[f64; 4]; 4]) -> Result<Self> {
        if let Some(bad) = matrix.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::Parameter {
                name: "t",
                value: *bad,
                range: "finite reals",
            });
        }
        if matrix[0] != [1.0, 0.0, 0.0, 0.0] {
            return Err(Error::Config(format!(
                "transfer matrix row 0 must be (1, 0, 0, 0), got {:?}",
                matrix[0]
            )));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: [[f64; 4]; 4]) -> Self {
        Self { matrix }
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.matrix
    }

    /// Coefficient of σ_output in N(σ_input).
    pub fn t(&self, input: usize, output: usize) -> f64 {
        self.matrix[output][input]
    }

    /// `self ∘ inner` (matrix product `self · inner`).
    pub fn compose(&self, inner: &Self) -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.matrix[i][k] * inner.matrix[k][j]).sum();
            }
        }
        Self { matrix: m }
    }

    /// Apply to a 2x2 operator through its Pauli expansion.
    pub fn apply(&self, op: &CMatrix) -> Result<CMatrix> {
        if op.nrows() != 2 || op.ncols() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: op.nrows(),
            });
        }
        let coeffs: Vec<_> = (0..4).map(|k| (pauli(k) * op).trace() / 2.0).collect();
        let mut out = CMatrix::zeros(2, 2);
        for (l, row) in self.matrix.iter().enumerate() {
            let coeff: num_complex::Complex64 = row.iter().zip(&coeffs).map(|(r, x)| x * r).sum();
            out += pauli(l) * coeff;
        }
        Ok(out)
    }

    /// sum_ij |i><j| ⊗ N(|i><j|).
    pub fn choi(&self) -> CMatrix {
        let mut j = CMatrix::zeros(4, 4);
        for row in 0..2 {
            for col in 0..2 {
                let mut e = CMatrix::zeros(2, 2);
                e[(row, col)] = ONE;
                let image = self.apply(&e).expect("qubit operator");
                for a in 0..2 {
                    for b in 0..2 {
                        j[(row * 2 + a, col * 2 + b)] = image[(a, b)];
                    }
                }
            }
        }
        j
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.choi())
    }

    pub fn is_cptp(&self) -> bool {
        self.min_choi_eigenvalue() >= -CPTP_TOL
    }

    /// Kraus form from the Choi eigendecomposition. Fails when the map is not
    /// completely positive.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let choi = self.choi();
        let h = (&choi + choi.adjoint()) * c(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -CPTP_TOL {
            return Err(Error::CptpViolation { min_eigenvalue });
        }
        let mut ops = Vec::new();
        for (m, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= 1e-14 {
                continue;
            }
            let v = eig.eigenvectors.column(m);
            let mut k = CMatrix::zeros(2, 2);
            for i in 0..2 {
                for a in 0..2 {
                    k[(a, i)] = v[i * 2 + a] * lambda.sqrt();
                }
            }
            ops.push(k);
        }
        KrausChannel::new(ops)
    }

    /// Depolarizing map with the same unital trace, 1 - λ = (R11 + R22 + R33) / 3.
    pub fn twirl_strength(&self) -> f64 {
        1.0 - (self.matrix[1][1] + self.matrix[2][2] + self.matrix[3][3]) / 3.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .zip(other.matrix.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn amplitude_damping_entries() {
        let q = 0.3;
        let ptm = KrausChannel::amplitude_damping(q).unwrap().ptm().unwrap();
        assert!((ptm.t(0, 3) - q).abs() < 1e-15);
        assert!((ptm.t(1, 1) - (1.0 - q).sqrt()).abs() < 1e-15);
        assert!((ptm.t(2, 2) - (1.0 - q).sqrt()).abs() < 1e-15);
        assert!((ptm.t(3, 3) - (1.0 - q)).abs() < 1e-15);
        assert_eq!(ptm.t(3, 0), 0.0);
    }

    #[test]
    fn round_trip_through_kraus() {
        let ch = KrausChannel::amplitude_damping(0.4)
            .unwrap()
            .compose(&KrausChannel::depolarizing(0.2).unwrap())
            .unwrap();
        let ptm = ch.ptm().unwrap();
        let back = ptm.to_kraus().unwrap().ptm().unwrap();
        assert!(ptm.max_abs_diff(&back) < 1e-12);
        let rho = crate::linalg::projector(2, 1);
        assert!(max_abs_diff(&ptm.apply(&rho).unwrap(), &ch.apply(&rho).unwrap()) < 1e-14);
    }

    #[test]
    fn rejects_bad_first_row() {
        let mut m = *PauliTransferMap::identity().matrix();
        m[0][3] = 0.1;
        assert!(PauliTransferMap::new(m).is_err());
    }

    #[test]
    fn non_cp_map_detected() {
        // Transpose map: unital, trace preserving, not completely positive.
        let mut m = *PauliTransferMap::identity().matrix();
        m[2][2] = -1.0;
        let ptm = PauliTransferMap::new(m).unwrap();
        assert!(!ptm.is_cptp());
        assert!(matches!(ptm.to_kraus(), Err(Error::CptpViolation { .. })));
    }
}
