use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSpec, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

use super::haar::haar_unitary;

/// Gate pattern of a layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Alternating nearest-neighbour pairs, open boundary, even n only.
    /// Even layers (0-based) pair (0,1),(2,3),...; odd layers pair
    /// (1,2),(3,4),... and put single-qubit gates on the two edge qubits.
    #[default]
    Brickwork,
    /// The same alternation for any n: an unpaired edge qubit gets a
    /// single-qubit gate. Identical to `Brickwork` for even n.
    Staggered,
    /// One single-qubit gate per qubit per layer.
    SingleQubit,
}

/// Gate supports of one layer.
pub fn layer_supports(n: usize, layer: usize, arch: Architecture) -> Vec<Vec<usize>> {
    match arch {
        Architecture::SingleQubit => (0..n).map(|q| vec![q]).collect(),
        Architecture::Brickwork | Architecture::Staggered => {
            let start = layer % 2;
            let mut out = Vec::with_capacity(n / 2 + 2);
            if start == 1 {
                out.push(vec![0]);
            }
            let mut q = start;
            while q + 1 < n {
                out.push(vec![q, q + 1]);
                q += 2;
            }
            if q < n && !(start == 1 && q == 0) {
                out.push(vec![q]);
            }
            out
        }
    }
}

/// Gate positions without sampled unitaries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitShape {
    pub n: usize,
    pub depth: usize,
    pub architecture: Architecture,
    pub layers: Vec<Vec<Vec<usize>>>,
}

impl CircuitShape {
    pub fn new(n: usize, depth: usize, architecture: Architecture) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        if architecture == Architecture::Brickwork && n % 2 == 1 {
            return Err(Error::OddQubitCount(n));
        }
        let layers = (0..depth).map(|l| layer_supports(n, l, architecture)).collect();
        Ok(Self {
            n,
            depth,
            architecture,
            layers,
        })
    }

    pub fn brickwork(n: usize, depth: usize) -> Result<Self> {
        Self::new(n, depth, Architecture::Brickwork)
    }

    /// Brickwork for even n, staggered otherwise.
    pub fn for_qubits(n: usize, depth: usize) -> Result<Self> {
        let arch = if n.is_multiple_of(2) {
            Architecture::Brickwork
        } else {
            Architecture::Staggered
        };
        Self::new(n, depth, arch)
    }

    /// Draw an independent Haar unitary for every gate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<Gate>> {
        self.layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|qubits| Gate {
                        qubits: qubits.clone(),
                        unitary: haar_unitary(1 << qubits.len(), rng).expect("dims 2 and 4"),
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub qubits: Vec<usize>,
    pub unitary: CMatrix,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    /// Noise on every qubit after every layer, including the last.
    #[default]
    AfterEveryGateWithFinalLayer,
    /// Noise after every layer except the last.
    NoFinalNoiseLayer,
    /// Noise after every layer, then a noiseless rotation U(θ_i, φ_i) on each qubit.
    FixedFinalRotations,
}

impl PlacementMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlacementMode::AfterEveryGateWithFinalLayer => "after_every_gate_with_final_layer",
            PlacementMode::NoFinalNoiseLayer => "no_final_noise_layer",
            PlacementMode::FixedFinalRotations => "fixed_final_rotations",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePlacement {
    pub mode: PlacementMode,
    pub channel: ChannelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_rotations: Option<Vec<(f64, f64)>>,
}

impl NoisePlacement {
    pub fn new(mode: PlacementMode, channel: ChannelSpec) -> Self {
        Self {
            mode,
            channel,
            final_rotations: None,
        }
    }

    pub fn with_rotations(channel: ChannelSpec, rotations: Vec<(f64, f64)>) -> Self {
        Self {
            mode: PlacementMode::FixedFinalRotations,
            channel,
            final_rotations: Some(rotations),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.channel.validate()?;
        match (self.mode, &self.final_rotations) {
            (PlacementMode::FixedFinalRotations, Some(r)) if r.len() == n => Ok(()),
            (PlacementMode::FixedFinalRotations, Some(r)) => Err(Error::Config(format!(
                "fixed_final_rotations needs {n} rotation pairs, got {}",
                r.len()
            ))),
            (PlacementMode::FixedFinalRotations, None) => {
                Err(Error::Config("fixed_final_rotations needs `final_rotations`".into()))
            }
            _ => Ok(()),
        }
    }

    /// Whether noise follows layer `layer` (0-based) of a depth-`depth` circuit.
    pub fn noise_after(&self, layer: usize, depth: usize) -> bool {
        layer + 1 < depth || self.mode != PlacementMode::NoFinalNoiseLayer
    }
}

/// Noise placement with the channel already built.
#[derive(Clone, Debug)]
pub struct PreparedNoise {
    pub placement: NoisePlacement,
    pub channel: KrausChannel,
    pub superop: CMatrix,
    pub rotations: Vec<CMatrix>,
    /// Replacement for the channel on the final noise layer, if any.
    pub final_channel: Option<(KrausChannel, CMatrix)>,
}

impl PreparedNoise {
    pub fn new(placement: &NoisePlacement, n: usize) -> Result<Self> {
        placement.validate(n)?;
        let channel = placement.channel.channel()?;
        Self::from_channel(placement, channel, n)
    }

    /// Use `channel` in place of the one named by the placement.
    pub fn from_channel(placement: &NoisePlacement, channel: KrausChannel, n: usize) -> Result<Self> {
        placement.validate(n)?;
        if channel.arity() != 1 {
            return Err(Error::Dimension {
                expected: 2,
                got: channel.dim(),
            });
        }
        let rotations = match (placement.mode, &placement.final_rotations) {
            (PlacementMode::FixedFinalRotations, Some(r)) => r
                .iter()
                .map(|&(theta, phi)| crate::channel::rotation(theta, phi))
                .collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            placement: placement.clone(),
            superop: channel.superoperator(),
            channel,
            rotations,
            final_channel: None,
        })
    }

    /// Use `channel` on the noise layer after the last gates only.
    pub fn with_final_channel(mut self, channel: KrausChannel) -> Self {
        let superop = channel.superoperator();
        self.final_channel = Some((channel, superop));
        self
    }

    /// Superoperator applied after gate layer `layer`, if noise follows it.
    pub fn superop_after(&self, layer: usize, depth: usize) -> Option<&CMatrix> {
        if !self.placement.noise_after(layer, depth) {
            return None;
        }
        match &self.final_channel {
            Some((_, s)) if layer + 1 == depth => Some(s),
            _ => Some(&self.superop),
        }
    }

    /// Channel on the final noise layer.
    pub fn last_channel(&self) -> &KrausChannel {
        self.final_channel.as_ref().map(|(c, _)| c).unwrap_or(&self.channel)
    }
}

/// A sampled circuit.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub n: usize,
    pub depth: usize,
    pub layers: Vec<Vec<Gate>>,
    pub placement: NoisePlacement,
}

impl Circuit {
    pub fn sample<R: Rng + ?Sized>(shape: &CircuitShape, placement: NoisePlacement, rng: &mut R) -> Result<Self> {
        placement.validate(shape.n)?;
        Ok(Self {
            n: shape.n,
            depth: shape.depth,
            layers: shape.sample(rng),
            placement,
        })
    }

    pub fn to_record(&self) -> CircuitRecord {
        CircuitRecord {
            n: self.n,
            depth: self.depth,
            placement: self.placement.clone(),
            gates: self
                .layers
                .iter()
                .enumerate()
                .flat_map(|(layer, gates)| {
                    gates.iter().map(move |g| GateRecord {
                        layer,
                        qubits: g.qubits.clone(),
                        unitary: Some(
                            (0..g.unitary.nrows())
                                .flat_map(|i| (0..g.unitary.ncols()).map(move |j| (i, j)))
                                .map(|(i, j)| [g.unitary[(i, j)].re, g.unitary[(i, j)].im])
                                .collect(),
                        ),
                    })
                })
                .collect(),
        }
    }

    pub fn from_record(record: &CircuitRecord) -> Result<Self> {
        record.placement.validate(record.n)?;
        let mut layers: Vec<Vec<Gate>> = vec![Vec::new(); record.depth];
        for g in &record.gates {
            let dim = 1usize << g.qubits.len();
            let entries = g
                .unitary
                .as_ref()
                .ok_or_else(|| Error::Config("gate record without unitary".into()))?;
            if entries.len() != dim * dim {
                return Err(Error::Dimension {
                    expected: dim * dim,
                    got: entries.len(),
                });
            }
            if g.layer >= record.depth || g.qubits.iter().any(|&q| q >= record.n) {
                return Err(Error::Config(format!("gate outside circuit: {:?}", g.qubits)));
            }
            let values: Vec<_> = entries.iter().map(|[re, im]| c(*re, *im)).collect();
            layers[g.layer].push(Gate {
                qubits: g.qubits.clone(),
                unitary: CMatrix::from_row_slice(dim, dim, &values),
            });
        }
        Ok(Self {
            n: record.n,
            depth: record.depth,
            layers,
            placement: record.placement.clone(),
        })
    }
}

/// JSON form of a circuit; unitary entries are row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub n: usize,
    pub depth: usize,
    pub placement: NoisePlacement,
    pub gates: Vec<GateRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub layer: usize,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<[f64; 2]>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_qubits_one_layer() {
        let shape = CircuitShape::brickwork(2, 1).unwrap();
        assert_eq!(shape.layers, vec![vec![vec![0, 1]]]);
    }

    #[test]
    fn four_qubits_two_layers() {
        let shape = CircuitShape::brickwork(4, 2).unwrap();
        assert_eq!(shape.layers[0], vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(shape.layers[1], vec![vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn every_layer_covers_each_qubit_once() {
        for n in [2, 4, 6, 8] {
            let shape = CircuitShape::brickwork(n, 5).unwrap();
            for layer in &shape.layers {
                let mut seen: Vec<usize> = layer.iter().flatten().copied().collect();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                for g in layer.iter().filter(|g| g.len() == 2) {
                    assert_eq!(g[1], g[0] + 1);
                }
            }
        }
    }

    #[test]
    fn odd_qubit_count_rejected() {
        assert!(matches!(CircuitShape::brickwork(3, 2), Err(Error::OddQubitCount(3))));
        assert!(matches!(CircuitShape::brickwork(1, 2), Err(Error::OddQubitCount(1))));
        assert!(CircuitShape::new(3, 2, Architecture::SingleQubit).is_ok());
    }

    #[test]
    fn staggered_layouts() {
        let s3 = CircuitShape::new(3, 2, Architecture::Staggered).unwrap();
        assert_eq!(s3.layers[0], vec![vec![0, 1], vec![2]]);
        assert_eq!(s3.layers[1], vec![vec![0], vec![1, 2]]);
        let s1 = CircuitShape::new(1, 2, Architecture::Staggered).unwrap();
        assert_eq!(s1.layers, vec![vec![vec![0]], vec![vec![0]]]);
        for n in [2, 4, 6] {
            assert_eq!(
                CircuitShape::new(n, 4, Architecture::Staggered).unwrap().layers,
                CircuitShape::brickwork(n, 4).unwrap().layers
            );
        }
    }

    #[test]
    fn rotation_count_checked() {
        let spec = ChannelSpec::standard(ChannelKind::AmpDamp, 0.2, 0.0);
        let p = NoisePlacement::with_rotations(spec, vec![(0.0, 0.0)]);
        assert!(p.validate(2).is_err());
        assert!(p.validate(1).is_ok());
    }

    #[test]
    fn record_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = CircuitShape::brickwork(4, 3).unwrap();
        let placement = NoisePlacement::new(
            PlacementMode::AfterEveryGateWithFinalLayer,
            ChannelSpec::standard(ChannelKind::AmpThenDep, 0.2, 0.1),
        );
        let circuit = Circuit::sample(&shape, placement, &mut rng).unwrap();
        let text = serde_json::to_string(&circuit.to_record()).unwrap();
        let back = Circuit::from_record(&serde_json::from_str(&text).unwrap()).unwrap();
        for (la, lb) in circuit.layers.iter().zip(&back.layers) {
            for (a, b) in la.iter().zip(lb) {
                assert_eq!(a, b);
            }
        }
    }
}
