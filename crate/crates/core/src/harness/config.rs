use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelSpec;
use crate::circuit::layout::{CircuitShape, NoisePlacement, PlacementMode};
use crate::circuit::state::{hamming_weight, parse_bitstring, MAX_SIM_QUBITS};
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;

/// Estimator identifiers accepted in `targets`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// E[p_x] for each selected bitstring.
    Px,
    /// E of every one- and two-qubit marginal probability.
    Marginal,
    /// E[Pr(X_i = x_i | X_j = x_j, j < i)] and the same conditioned on all j != i.
    Conditional,
    /// Z = 2^n Σ p_x^2 - 1.
    Collision,
    /// E[p_x^2] for each selected bitstring.
    Px2,
    /// Pr[p_x < α / 2^n].
    Tail,
    /// Pr[p_x < α / 2^n + E p_x], paired with the Chebyshev lower bound.
    TailShifted,
    /// Mean and variance of -ln p_x, E[<Z_i>^2] and the permutation-averaged A_σ.
    Logprob,
    /// Shifted XEB against the noiseless circuit, and the same with every
    /// noise site replaced by its depolarizing twirl.
    Xeb,
    /// Per-circuit 2^n Σ (p_x - 2^-n)^2 against 2^n Σ p_x^2 - 1.
    UniformIdentity,
}

impl Target {
    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Px => "px",
            Target::Marginal => "marginal",
            Target::Conditional => "conditional",
            Target::Collision => "collision",
            Target::Px2 => "px2",
            Target::Tail => "tail",
            Target::TailShifted => "tail_shifted",
            Target::Logprob => "logprob",
            Target::Xeb => "xeb",
            Target::UniformIdentity => "uniform_identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown target `{s}`")))
    }
}

/// Which bitstrings the per-string estimators report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BitstringSelector {
    List(Vec<String>),
    Named(NamedSelector),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedSelector {
    All,
    HammingGeHalf,
}

impl Default for BitstringSelector {
    fn default() -> Self {
        BitstringSelector::Named(NamedSelector::All)
    }
}

impl BitstringSelector {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::Named(NamedSelector::All)),
            "hamming_ge_half" => Ok(Self::Named(NamedSelector::HammingGeHalf)),
            list => Ok(Self::List(list.split(',').map(|b| b.trim().to_string()).collect())),
        }
    }

    pub fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            Self::Named(NamedSelector::All) => Ok((0..1usize << n).collect()),
            Self::Named(NamedSelector::HammingGeHalf) => {
                Ok((0..1usize << n).filter(|&x| 2 * hamming_weight(x) >= n).collect())
            }
            Self::List(items) => items
                .iter()
                .map(|b| {
                    if b.len() != n {
                        return Err(Error::Config(format!("bitstring `{b}` does not have {n} bits")));
                    }
                    parse_bitstring(b)
                })
                .collect(),
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

fn default_workers() -> usize {
    1
}

/// One Monte Carlo run. Noise parameters are fixed; only gates are resampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub depth: usize,
    pub channel: ChannelSpec,
    #[serde(default)]
    pub placement: PlacementMode,
    #[serde(default)]
    pub final_rotations: Option<Vec<(f64, f64)>>,
    pub samples: usize,
    pub seed: u64,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub bitstrings: BitstringSelector,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Config(format!(
                "samples = {} is below the minimum of {MIN_SAMPLES}",
                self.samples
            )));
        }
        if self.n > MAX_SIM_QUBITS {
            return Err(Error::TooManyQubits {
                what: "density-matrix simulation",
                n: self.n,
                max: MAX_SIM_QUBITS,
            });
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter {
                name: "alpha",
                value: self.alpha,
                range: "(0, 1]",
            });
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("no targets".into()));
        }
        self.shape()?;
        self.placement().validate(self.n)?;
        self.bitstrings.resolve(self.n)?;
        Ok(())
    }

    pub fn shape(&self) -> Result<CircuitShape> {
        CircuitShape::for_qubits(self.n, self.depth)
    }

    pub fn placement(&self) -> NoisePlacement {
        NoisePlacement {
            mode: self.placement,
            channel: self.channel.clone(),
            final_rotations: self.final_rotations.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Hash of the configuration with `workers` removed.
    pub fn run_id(&self) -> String {
        let mut value = serde_json::to_value(self).expect("serializable");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("workers");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
