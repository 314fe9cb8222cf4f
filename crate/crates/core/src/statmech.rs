//! Second moments as weights over {I, S} labels.
//!
//! After a Haar-averaged gate the two-copy state on the gate's support is
//! α I + β S. Labels are propagated layer by layer; the noise between layers
//! enters only through Tr[(N⊗N)(γ)] and Tr[(N⊗N)(γ) S] for γ ∈ {I, S}.

use serde::{Deserialize, Serialize};

use crate::channel::{pair_coefficients, ChannelSpec, KrausChannel};
use crate::circuit::exact::two_copy_moments_with;
use crate::circuit::layout::{CircuitShape, NoisePlacement, PlacementMode, PreparedNoise};
use crate::circuit::state::bit_of;
use crate::error::{Error, Result};
use crate::linalg::{identity, swap, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    I,
    S,
}

/// Two-qubit Haar gate acting on a product of single-qubit labels.
pub fn pair_collapse(left: Label, right: Label) -> Vec<((Label, Label), f64)> {
    match (left, right) {
        (Label::I, Label::I) => vec![((Label::I, Label::I), 1.0)],
        (Label::S, Label::S) => vec![((Label::S, Label::S), 1.0)],
        _ => vec![((Label::I, Label::I), 0.4), ((Label::S, Label::S), 0.4)],
    }
}

/// Per-qubit state (2I + S)/10 + x_m (I - 2S) after m noisy single-qubit layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitLayerState {
    /// None when a + 2b = 0.
    pub x_closed: Option<f64>,
    pub x_iterated: f64,
}

impl SingleQubitLayerState {
    pub fn value(&self) -> f64 {
        self.x_closed.unwrap_or(self.x_iterated)
    }
}

pub fn single_qubit_layer_state(a: f64, b: f64, m: usize) -> SingleQubitLayerState {
    let lambda = 1.0 - a - 2.0 * b;
    let shift = (-2.0 * a + b) / 10.0;
    let mut x = -1.0 / 30.0;
    for _ in 0..m {
        x = lambda * x + shift;
    }
    let c = a + 2.0 * b;
    let x_closed = (c != 0.0).then(|| {
        let fixed = shift / c;
        fixed + lambda.powi(m as i32) * (-1.0 / 30.0 - fixed)
    });
    SingleQubitLayerState {
        x_closed,
        x_iterated: x,
    }
}

/// M̃^m(I) = x I + y S and M̃^m(S) = z I + w S.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceCoeffs {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl SequenceCoeffs {
    pub fn u(&self) -> f64 {
        self.x + self.y
    }

    pub fn v(&self) -> f64 {
        self.z + self.w
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [self.x - other.x, self.y - other.y, self.z - other.z, self.w - other.w]
            .iter()
            .map(|d| d.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    /// None when a = 0.
    pub closed: Option<SequenceCoeffs>,
    pub iterated: SequenceCoeffs,
}

impl SequenceResult {
    pub fn value(&self) -> SequenceCoeffs {
        self.closed.unwrap_or(self.iterated)
    }

    pub fn used_fallback(&self) -> bool {
        self.closed.is_none()
    }
}

pub fn sequence_coeffs(a: f64, b: f64, m: usize) -> SequenceResult {
    let step = |(x, y): (f64, f64)| ((1.0 - a) * x + b * y, 2.0 * a * x + (1.0 - 2.0 * b) * y);
    let (mut xy, mut zw) = ((1.0, 0.0), (0.0, 1.0));
    for _ in 0..m {
        xy = step(xy);
        zw = step(zw);
    }
    let iterated = SequenceCoeffs {
        x: xy.0,
        y: xy.1,
        z: zw.0,
        w: zw.1,
    };
    let closed = (a != 0.0).then(|| {
        let lm = (1.0 - a - 2.0 * b).powi(m as i32);
        let ratio = b / a;
        SequenceCoeffs {
            x: 1.0 - (1.0 - lm) / (1.0 + 2.0 * ratio),
            y: (1.0 - lm) / (0.5 + ratio),
            z: 0.5 - (0.5 + ratio * lm) / (1.0 + 2.0 * ratio),
            w: (0.5 + ratio * lm) / (0.5 + ratio),
        }
    });
    SequenceResult { closed, iterated }
}

fn check_contraction(a: f64, b: f64) -> Result<()> {
    let lambda = 1.0 - a - 2.0 * b;
    if !(-1e-12..=1.0 + 1e-12).contains(&lambda) {
        return Err(Error::Parameter {
            name: "1 - a - 2b",
            value: lambda,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// (3/10 - x_{d-1})^n: E[p_x^2] for depth-d circuits of single-qubit Haar
/// gates with noise between layers and none after the last.
pub fn modified_ensemble_second_moment(n: usize, d: usize, a: f64, b: f64) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::Config("n and d must be at least 1".into()));
    }
    check_contraction(a, b)?;
    let x = single_qubit_layer_state(a, b, d - 1).value();
    Ok((0.3 - x).powi(n as i32))
}

/// Π_j e_j with e_j = (1+r)^2 for x_j = 0 and (1-r)^2 for x_j = 1.
pub fn last_layer_correction(x: usize, n: usize, r: f64) -> f64 {
    let ones = (0..n).filter(|&q| bit_of(x, n, q) == 1).count() as i32;
    (1.0 + r).powi(2 * (n as i32 - ones)) * (1.0 - r).powi(2 * ones)
}

/// `f[b][γ] = <bb| (N⊗N)(γ) |bb>` for labels γ = I, S.
pub fn readout_table(channel: &KrausChannel) -> Result<[[f64; 2]; 2]> {
    let doubled = channel.doubled();
    let imgs = [doubled.apply(&identity(4))?, doubled.apply(&swap(2))?];
    let mut f = [[0.0; 2]; 2];
    for (bit, row) in f.iter_mut().enumerate() {
        let idx = bit * 2 + bit;
        for (g, img) in imgs.iter().enumerate() {
            row[g] = img[(idx, idx)].re;
        }
    }
    Ok(f)
}

/// Largest readout factor per output bit: the general e_j.
pub fn readout_bound(channel: &KrausChannel) -> Result<[f64; 2]> {
    let f = readout_table(channel)?;
    Ok([f[0][0].max(f[0][1]), f[1][0].max(f[1][1])])
}

/// (Tr[(N⊗N)(γ)], Tr[(N⊗N)(γ) S]) for γ = I, S.
fn trace_table(channel: &KrausChannel) -> Result<[(f64, f64); 2]> {
    let doubled = channel.doubled();
    let s = swap(2);
    let mut out = [(0.0, 0.0); 2];
    for (g, op) in [identity(4), s.clone()].iter().enumerate() {
        let img = doubled.apply(op)?;
        out[g] = (img.trace().re, (&img * &s).trace().re);
    }
    Ok(out)
}

fn weingarten(t: f64, v: f64, d: f64) -> (f64, f64) {
    let norm = d * d - 1.0;
    ((t - v / d) / norm, (v - t / d) / norm)
}

/// Exact E[p_x^2] for every x by dynamic programming over {I,S}^n labels.
/// Independent of the doubled-space propagation; practical up to n ≈ 14.
pub fn label_dp_second_moments(shape: &CircuitShape, noise: &PreparedNoise) -> Result<Vec<f64>> {
    let n = shape.n;
    if n > 16 {
        return Err(Error::TooManyQubits {
            what: "label dynamic programming",
            n,
            max: 16,
        });
    }
    let traces = trace_table(&noise.channel)?;
    let size = 1usize << n;
    let label_bit = |q: usize| 1usize << q;

    // Layer 0 acts on |0><0|^{⊗2} on every qubit: Tr = Tr[. S] = 1.
    let mut weights = vec![0.0; size];
    weights[0] = 1.0;
    for (l, layer) in shape.layers.iter().enumerate() {
        for support in layer {
            let d = (1usize << support.len()) as f64;
            let mask: usize = support.iter().map(|&q| label_bit(q)).sum();
            let mut next = vec![0.0; size];
            for (labels, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let (mut t, mut v) = (1.0, 1.0);
                if l > 0 {
                    for &q in support {
                        let (tq, vq) = traces[(labels >> q) & 1];
                        t *= tq;
                        v *= vq;
                    }
                }
                let (alpha, beta) = weingarten(t, v, d);
                next[labels & !mask] += w * alpha;
                next[labels | mask] += w * beta;
            }
            weights = next;
        }
    }

    // Per-qubit readout of the final (noise, rotation) stage.
    let final_noise = noise.placement.noise_after(shape.depth - 1, shape.depth);
    let mut tables = Vec::with_capacity(n);
    for q in 0..n {
        let mut stage = if final_noise {
            noise.last_channel().clone()
        } else {
            KrausChannel::identity(1)
        };
        if let Some(u) = noise.rotations.get(q) {
            stage = KrausChannel::unitary(u.clone())?.compose(&stage)?;
        }
        tables.push(readout_table(&stage)?);
    }

    Ok((0..size)
        .map(|x| {
            weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(labels, w)| {
                    w * (0..n)
                        .map(|q| tables[q][bit_of(x, n, q) as usize][(labels >> q) & 1])
                        .product::<f64>()
                })
                .sum()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRecord {
    pub n: usize,
    pub depth: usize,
    pub x: usize,
    /// Brickwork, no final noise layer, exact.
    pub brickwork: f64,
    /// Single-qubit-gate ensemble, closed form.
    pub modified: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Compare the exact brickwork second moment without final noise to the
/// single-qubit-gate closed form, for every output string.
pub fn monotonicity_check(n: usize, depth: usize, channel: &ChannelSpec) -> Result<Vec<MonotonicityRecord>> {
    if n > 5 {
        return Err(Error::TooManyQubits {
            what: "monotonicity check",
            n,
            max: 5,
        });
    }
    let shape = CircuitShape::brickwork(n, depth)?;
    let placement = NoisePlacement::new(PlacementMode::NoFinalNoiseLayer, channel.clone());
    let noise = PreparedNoise::new(&placement, n)?;
    let exact = two_copy_moments_with(&shape, &noise)?.second_moments;
    let pc = pair_coefficients(&noise.channel)?;
    let modified = modified_ensemble_second_moment(n, depth, pc.a, pc.b)?;
    Ok(exact
        .into_iter()
        .enumerate()
        .map(|(x, brickwork)| MonotonicityRecord {
            n,
            depth,
            x,
            brickwork,
            modified,
            slack: modified - brickwork,
            holds: brickwork <= modified + 1e-10,
        })
        .collect())
}

/// Apply M̃ = twirl ∘ (N⊗N) ∘ twirl to a 4x4 operator by explicit matrices.
pub fn twirled_pair_map(channel: &KrausChannel, x: &CMatrix) -> Result<CMatrix> {
    let twirl = |op: &CMatrix| {
        let (alpha, beta) = crate::channel::werner::two_copy_twirl(op, 2);
        identity(4) * alpha + swap(2) * beta
    };
    let mid = channel.doubled().apply(&twirl(x))?;
    Ok(twirl(&mid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelKind, Order, StandardNoise};
    use crate::linalg::c;

    #[test]
    fn collapse_rules() {
        assert_eq!(pair_collapse(Label::I, Label::I), vec![((Label::I, Label::I), 1.0)]);
        let out = pair_collapse(Label::I, Label::S);
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        assert!((total - 0.8).abs() < 1e-15);
    }

    #[test]
    fn recursion_base_cases() {
        assert_eq!(single_qubit_layer_state(0.1, 0.2, 0).value(), -1.0 / 30.0);
        let s0 = sequence_coeffs(0.1, 0.2, 0).value();
        assert_eq!((s0.x, s0.y, s0.z, s0.w), (1.0, 0.0, 0.0, 1.0));
        let s1 = sequence_coeffs(0.1, 0.2, 1).value();
        assert!((s1.x - 0.9).abs() < 1e-15 && (s1.y - 0.2).abs() < 1e-15);
    }

    #[test]
    fn fallback_when_noiseless() {
        let p = single_qubit_layer_state(0.0, 0.0, 7);
        assert!(p.x_closed.is_none());
        assert_eq!(p.x_iterated, -1.0 / 30.0);
        assert!(sequence_coeffs(0.0, 0.1, 3).used_fallback());
        let v = modified_ensemble_second_moment(3, 1, 0.0, 0.0).unwrap();
        assert!((v - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn sequence_matches_explicit_operator_iteration() {
        let noise = StandardNoise::new(Order::DepThenAmp, 0.2, 0.5).unwrap();
        let ch = noise.channel();
        let pc = pair_coefficients(&ch).unwrap();
        let (mut xi, mut xs) = (identity(4), swap(2));
        for m in 1..=6 {
            xi = twirled_pair_map(&ch, &xi).unwrap();
            xs = twirled_pair_map(&ch, &xs).unwrap();
            let s = sequence_coeffs(pc.a, pc.b, m).value();
            let ei = identity(4) * c(s.x, 0.0) + swap(2) * c(s.y, 0.0);
            let es = identity(4) * c(s.z, 0.0) + swap(2) * c(s.w, 0.0);
            assert!(crate::linalg::max_abs_diff(&xi, &ei) < 1e-12);
            assert!(crate::linalg::max_abs_diff(&xs, &es) < 1e-12);
        }
    }

    #[test]
    fn correction_examples() {
        assert!((last_layer_correction(0b01, 2, 0.2) - 0.9216).abs() < 1e-15);
        assert_eq!(last_layer_correction(0b111, 3, 0.0), 1.0);
        let noise = StandardNoise::new(Order::AmpThenDep, 0.1, 0.3).unwrap();
        let e = readout_bound(&noise.channel()).unwrap();
        assert!((e[0] - 1.3f64.powi(2)).abs() < 1e-14);
        assert!((e[1] - 0.7f64.powi(2)).abs() < 1e-14);
    }

    #[test]
    fn dp_matches_doubled_space() {
        for (kind, mode) in [
            (ChannelKind::AmpThenDep, PlacementMode::AfterEveryGateWithFinalLayer),
            (ChannelKind::DepThenAmp, PlacementMode::NoFinalNoiseLayer),
        ] {
            let shape = CircuitShape::brickwork(4, 3).unwrap();
            let placement = NoisePlacement::new(mode, ChannelSpec::standard(kind, 0.3, 0.15));
            let noise = PreparedNoise::new(&placement, 4).unwrap();
            let dp = label_dp_second_moments(&shape, &noise).unwrap();
            let exact = two_copy_moments_with(&shape, &noise).unwrap();
            for (a, b) in dp.iter().zip(&exact.second_moments) {
                assert!((a - b).abs() < 1e-13, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn monotonicity_small() {
        let spec = ChannelSpec::standard(ChannelKind::AmpDamp, 0.3, 0.0);
        for rec in monotonicity_check(2, 3, &spec).unwrap() {
            assert!(rec.holds && rec.slack >= 0.0);
        }
    }
}
