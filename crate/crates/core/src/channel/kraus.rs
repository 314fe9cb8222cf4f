use crate::error::{Error, Result};
use crate::linalg::{c, dagger, identity, kron, max_abs_diff, min_hermitian_eigenvalue, pauli, CMatrix, ONE, ZERO};

use super::ptm::PauliTransferMap;

/// Tolerance for Kraus completeness and Choi positivity checks.
pub const CPTP_TOL: f64 = 1e-9;

/// A CPTP map on `arity` qubits given by Kraus operators.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    arity: usize,
}

impl KrausChannel {
    /// Validates shape, completeness and Choi positivity.
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let channel = Self::new_unchecked(ops)?;
        let deviation = channel.completeness_deviation();
        if deviation > CPTP_TOL {
            return Err(Error::Incomplete { deviation });
        }
        let min_eigenvalue = channel.min_choi_eigenvalue();
        if min_eigenvalue < -CPTP_TOL {
            return Err(Error::CptpViolation { min_eigenvalue });
        }
        Ok(channel)
    }

    fn new_unchecked(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops.first().ok_or(Error::Dimension { expected: 1, got: 0 })?;
        let dim = first.nrows();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        for op in &ops {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: op.nrows().max(op.ncols()),
                });
            }
        }
        Ok(Self {
            ops,
            arity: dim.trailing_zeros() as usize,
        })
    }

    pub fn identity(arity: usize) -> Self {
        Self {
            ops: vec![identity(1 << arity)],
            arity,
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// K0 = diag(1, sqrt(1-q)), K1 = sqrt(q)|0><1|.
    pub fn amplitude_damping(q: f64) -> Result<Self> {
        crate::error::check_unit("q", q)?;
        let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c((1.0 - q).sqrt(), 0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(q.sqrt(), 0.0), ZERO, ZERO]);
        Ok(Self {
            ops: vec![k0, k1],
            arity: 1,
        })
    }

    /// X -> (1-p) X + (p/2) Tr(X) I.
    pub fn depolarizing(p: f64) -> Result<Self> {
        crate::error::check_unit("p", p)?;
        let mut ops = vec![pauli(0) * c((1.0 - 0.75 * p).sqrt(), 0.0)];
        for label in 1..4 {
            ops.push(pauli(label) * c((p / 4.0).sqrt(), 0.0));
        }
        Ok(Self { ops, arity: 1 })
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    fn check_dim(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: m.nrows(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.check_dim(rho)?;
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for k in &self.ops {
            out += k * rho * dagger(k);
        }
        Ok(out)
    }

    /// Heisenberg-picture action sum_k K_k^dagger A K_k.
    pub fn apply_adjoint(&self, a: &CMatrix) -> Result<CMatrix> {
        self.check_dim(a)?;
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for k in &self.ops {
            out += dagger(k) * a * k;
        }
        Ok(out)
    }

    /// `self ∘ inner`: `inner` acts first.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.arity != inner.arity {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: inner.dim(),
            });
        }
        let mut ops = Vec::with_capacity(self.ops.len() * inner.ops.len());
        for a in &self.ops {
            for b in &inner.ops {
                let prod = a * b;
                if prod.iter().any(|z| z.norm() > 0.0) {
                    ops.push(prod);
                }
            }
        }
        if ops.is_empty() {
            ops.push(CMatrix::zeros(self.dim(), self.dim()));
        }
        Ok(Self { ops, arity: self.arity })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for a in &self.ops {
            for b in &other.ops {
                ops.push(kron(a, b));
            }
        }
        Self {
            ops,
            arity: self.arity + other.arity,
        }
    }

    /// N ⊗ N.
    pub fn doubled(&self) -> Self {
        self.tensor(self)
    }

    /// || sum_k K^dagger K - I ||_max.
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.dim(), self.dim());
        for k in &self.ops {
            sum += dagger(k) * k;
        }
        max_abs_diff(&sum, &identity(self.dim()))
    }

    /// sum_ij |i><j| ⊗ N(|i><j|).
    pub fn choi(&self) -> CMatrix {
        let d = self.dim();
        let mut j = CMatrix::zeros(d * d, d * d);
        for row in 0..d {
            for col in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(row, col)] = ONE;
                let image = self.apply(&e).expect("dimension checked");
                for a in 0..d {
                    for b in 0..d {
                        j[(row * d + a, col * d + b)] = image[(a, b)];
                    }
                }
            }
        }
        j
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.choi())
    }

    /// Matrix of the map on row-major vectorised operators.
    pub fn superoperator(&self) -> CMatrix {
        let d = self.dim();
        let mut s = CMatrix::zeros(d * d, d * d);
        for k in &self.ops {
            s += kron(k, &k.map(|z| z.conj()));
        }
        s
    }

    /// Pauli transfer matrix; only defined for single-qubit channels.
    pub fn ptm(&self) -> Result<PauliTransferMap> {
        if self.arity != 1 {
            return Err(Error::Dimension {
                expected: 2,
                got: self.dim(),
            });
        }
        let mut m = [[0.0; 4]; 4];
        for (j, col) in (0..4).map(|j| (j, self.apply(&pauli(j)).expect("qubit"))) {
            for (i, row) in m.iter_mut().enumerate() {
                row[j] = (pauli(i) * &col).trace().re / 2.0;
            }
        }
        // Trace preservation is exact in exact arithmetic; remove round-off.
        m[0] = [1.0, 0.0, 0.0, 0.0];
        Ok(PauliTransferMap::from_matrix_unchecked(m))
    }
}
