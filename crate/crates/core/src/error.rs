use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} outside {range}")]
    Parameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error(
        "map is not completely positive and trace preserving (most negative Choi eigenvalue {min_eigenvalue:.3e})"
    )]
    CptpViolation { min_eigenvalue: f64 },
    #[error("Kraus operators are not trace preserving (deviation {deviation:.3e})")]
    Incomplete { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported unitary dimension {0} (expected 2 or 4)")]
    UnsupportedDimension(usize),
    #[error("qubit count must be even, got {0}")]
    OddQubitCount(usize),
    #[error("{what} limit exceeded: n = {n}, maximum {max}")]
    TooManyQubits { what: &'static str, n: usize, max: usize },
    #[error("conditioning event has probability {probability:.3e} (below 1e-14)")]
    DegenerateConditioning { probability: f64 },
    #[error("inconsistent moments: second moment {second} < mean^2 {mean_sq}")]
    InconsistentMoments { second: f64, mean_sq: f64 },
    #[error("noiseless parameters are outside the regime of this bound")]
    NoiselessRegime,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value,
            range: "[0, 1]",
        })
    }
}
