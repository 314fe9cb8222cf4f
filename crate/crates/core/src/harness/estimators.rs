//! Monte Carlo estimators over sampled circuits, with closed-form or exact
//! references and bounds attached.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::channel::{iterated_zero_overlap, twirl_strength, KrausChannel, PauliTransferMap};
use crate::circuit::exact::{exact_xeb, first_moments_with, two_copy_moments_with, MAX_TWO_COPY_QUBITS};
use crate::circuit::layout::{CircuitShape, PlacementMode, PreparedNoise};
use crate::circuit::state::{bit_of, format_bitstring, hamming_weight, simulate_gates, xeb, OutputDistribution};
use crate::error::Result;
use crate::moments;
use crate::statmech::label_dp_second_moments;
use crate::stats::{pairwise_accumulate, wilson_std_error};

use super::config::{ExperimentConfig, Target};
use super::exec::{map_indexed, sample_rng, Execution};

/// Default agreement margin in standard errors.
pub const DEFAULT_MARGIN: f64 = 3.0;
/// Separation required of a negative control, in standard errors.
pub const CONTROL_MARGIN: f64 = 5.0;
/// Runs excluding more than this fraction of samples are marked unreliable.
pub const EXCLUSION_LIMIT: f64 = 0.1;
/// Exact permutation averaging of A_σ is used up to this n.
pub const EXACT_PERMUTATION_LIMIT: usize = 8;
const PERMUTATION_SAMPLES: usize = 64;
const ABS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: String,
    pub bitstring: String,
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub reference: Option<f64>,
    pub bound: Option<f64>,
    pub verdict: Verdict,
    /// Slack of the deciding relation in standard errors.
    pub margin: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Relation {
    Agree(f64),
    AtLeast(f64),
    AtMost(f64),
    DiffersFromZero,
    ExactAtMost(f64),
}

fn in_se(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

impl Relation {
    fn eval(&self, value: f64, se: f64, margin: f64) -> (bool, Option<f64>) {
        match *self {
            Relation::Agree(r) => {
                let d = (value - r).abs();
                (d <= margin * se + ABS_TOL, Some(in_se(d, se)))
            }
            Relation::AtLeast(b) => (value + margin * se >= b - ABS_TOL, Some(in_se(value - b, se))),
            Relation::AtMost(b) => (value - margin * se <= b + ABS_TOL, Some(in_se(b - value, se))),
            Relation::DiffersFromZero => (value.abs() > CONTROL_MARGIN * se, Some(in_se(value.abs(), se))),
            Relation::ExactAtMost(b) => (value <= b, None),
        }
    }
}

/// |value - reference| <= margin·SE, with the slack in SE units.
pub fn agreement(value: f64, std_error: f64, reference: f64, margin: f64) -> (Verdict, Option<f64>) {
    let (ok, m) = Relation::Agree(reference).eval(value, std_error, margin);
    (if ok { Verdict::Pass } else { Verdict::Fail }, m)
}

#[derive(Clone, Debug)]
enum Measure {
    Px(usize),
    Marginal(Vec<usize>, Vec<u8>),
    Conditional { i: usize, x: usize, given: Vec<usize> },
    Collision,
    Px2(usize),
    Tail(usize),
    TailShifted(usize, f64),
    NegLog(usize),
    ZSq(usize),
    ASigma(usize),
    Xeb,
    XebTwirled,
    XebDiff,
    CollisionTwirlDiff,
    UniformIdentity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Aggregate {
    Mean,
    Fraction,
    Variance,
    Max,
}

#[derive(Clone, Debug)]
struct Slot {
    measure: Measure,
    aggregate: Aggregate,
    estimator: String,
    bitstring: String,
    reference: Option<f64>,
    bound: Option<f64>,
    relations: Vec<Relation>,
}

impl Slot {
    fn new(measure: Measure, estimator: impl Into<String>, bitstring: impl Into<String>) -> Self {
        Self {
            measure,
            aggregate: Aggregate::Mean,
            estimator: estimator.into(),
            bitstring: bitstring.into(),
            reference: None,
            bound: None,
            relations: Vec::new(),
        }
    }

    fn agree(mut self, reference: Option<f64>) -> Self {
        if let Some(r) = reference {
            self.reference = Some(r);
            self.relations.push(Relation::Agree(r));
        }
        self
    }

    fn at_least(mut self, bound: Option<f64>) -> Self {
        if let Some(b) = bound {
            self.bound = Some(b);
            self.relations.push(Relation::AtLeast(b));
        }
        self
    }

    fn at_most(mut self, bound: Option<f64>) -> Self {
        if let Some(b) = bound {
            self.bound = Some(b);
            self.relations.push(Relation::AtMost(b));
        }
        self
    }

    fn aggregate(mut self, aggregate: Aggregate) -> Self {
        self.aggregate = aggregate;
        self
    }
}

/// A configured experiment with its exact references computed.
pub struct Experiment {
    config: ExperimentConfig,
    shape: CircuitShape,
    noise: PreparedNoise,
    ideal: Option<PreparedNoise>,
    twirled: Option<PreparedNoise>,
    slots: Vec<Slot>,
}

/// Per-qubit coefficient of σ_z in the last stage applied to I: the
/// readout bias E[p_x] = Π_j (1 + (-1)^{x_j} t_j) / 2.
fn readout_bias(noise: &PreparedNoise, n: usize) -> Result<Vec<f64>> {
    if noise.placement.mode == PlacementMode::NoFinalNoiseLayer {
        return Ok(vec![0.0; n]);
    }
    let base = noise.last_channel().ptm()?;
    (0..n)
        .map(|q| match noise.rotations.get(q) {
            Some(u) => Ok(KrausChannel::unitary(u.clone())?.ptm()?.compose(&base).t(0, 3)),
            None => Ok(base.t(0, 3)),
        })
        .collect()
}

fn sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

fn product_moment(bias: &[f64], qubits: &[usize], values: &[u8]) -> f64 {
    qubits
        .iter()
        .zip(values)
        .map(|(&q, &v)| 0.5 * (1.0 + sign(v) * bias[q]))
        .product()
}

fn pattern(n: usize, qubits: &[usize], values: &[u8]) -> String {
    let mut s = vec!['*'; n];
    for (&q, &v) in qubits.iter().zip(values) {
        s[q] = if v == 0 { '0' } else { '1' };
    }
    s.into_iter().collect()
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let shape = config.shape()?;
        let placement = config.placement();
        let noise = PreparedNoise::new(&placement, n)?;
        let standard = config.channel.as_standard()?;
        let final_noise = placement.mode != PlacementMode::NoFinalNoiseLayer;
        let bias = readout_bias(&noise, n)?;
        let bitstrings = config.bitstrings.resolve(n)?;
        let ptm = noise.channel.ptm()?;

        let needs_second = config
            .targets
            .iter()
            .any(|t| matches!(t, Target::Collision | Target::Px2 | Target::TailShifted));
        let second = if !needs_second {
            None
        } else if n <= MAX_TWO_COPY_QUBITS {
            Some(two_copy_moments_with(&shape, &noise)?.second_moments)
        } else {
            Some(label_dp_second_moments(&shape, &noise)?)
        };
        let first = first_moments_with(&shape, &noise)?;

        let bound_params = match standard {
            Some(s) if placement.mode == PlacementMode::AfterEveryGateWithFinalLayer && (s.p, s.q) != (0.0, 0.0) => {
                Some(moments::second_moment_params(s.order, s.p, s.q)?)
            }
            _ => None,
        };
        let high_depth_bound = |x: usize| {
            bound_params
                .filter(|_| 2 * hamming_weight(x) >= n)
                .map(|p| moments::second_moment_bound(n, config.depth, &p))
        };

        let (ideal, twirled) = if config.targets.contains(&Target::Xeb) {
            let lambda = twirl_strength(&noise.channel)?;
            (
                Some(PreparedNoise::from_channel(&placement, KrausChannel::identity(1), n)?),
                // No gate follows the final noise layer, so it cannot be twirled.
                Some(
                    PreparedNoise::from_channel(&placement, KrausChannel::depolarizing(lambda)?, n)?
                        .with_final_channel(noise.channel.clone()),
                ),
            )
        } else {
            (None, None)
        };

        let mut slots = Vec::new();
        for target in &config.targets {
            match target {
                Target::Px => {
                    for &x in &bitstrings {
                        let all: Vec<usize> = (0..n).collect();
                        let values: Vec<u8> = all.iter().map(|&q| bit_of(x, n, q)).collect();
                        let reference = match standard {
                            Some(s) if placement.mode == PlacementMode::AfterEveryGateWithFinalLayer => {
                                moments::first_moment_r(n, hamming_weight(x), s.r())?.value
                            }
                            _ => product_moment(&bias, &all, &values),
                        };
                        slots.push(Slot::new(Measure::Px(x), "px", format_bitstring(x, n)).agree(Some(reference)));
                    }
                }
                Target::Marginal => {
                    let mut subsets: Vec<Vec<usize>> = (0..n).map(|q| vec![q]).collect();
                    for a in 0..n {
                        for b in a + 1..n {
                            subsets.push(vec![a, b]);
                        }
                    }
                    for qubits in subsets {
                        for bits in 0..1usize << qubits.len() {
                            let values: Vec<u8> = (0..qubits.len()).map(|k| bit_of(bits, qubits.len(), k)).collect();
                            let reference = product_moment(&bias, &qubits, &values);
                            slots.push(
                                Slot::new(
                                    Measure::Marginal(qubits.clone(), values.clone()),
                                    "marginal",
                                    pattern(n, &qubits, &values),
                                )
                                .agree(Some(reference)),
                            );
                        }
                    }
                }
                Target::Conditional => {
                    for &x in &bitstrings {
                        for (i, &b) in bias.iter().enumerate() {
                            let reference = 0.5 * (1.0 + sign(bit_of(x, n, i)) * b);
                            let chain: Vec<usize> = (0..i).collect();
                            let rest: Vec<usize> = (0..n).filter(|&q| q != i).collect();
                            for (label, given) in [("chain", chain), ("rest", rest)] {
                                slots.push(
                                    Slot::new(
                                        Measure::Conditional { i, x, given },
                                        format!("conditional_{label}_q{}", i + 1),
                                        format_bitstring(x, n),
                                    )
                                    .agree(Some(reference)),
                                );
                            }
                        }
                    }
                }
                Target::Collision => {
                    let reference = second
                        .as_ref()
                        .map(|s| (1u64 << n) as f64 * s.iter().sum::<f64>() - 1.0);
                    let bound = match (placement.mode, standard) {
                        (PlacementMode::NoFinalNoiseLayer, _) => None,
                        (PlacementMode::AfterEveryGateWithFinalLayer, Some(s)) => {
                            Some(moments::collision_lower_bound(n, s.r()))
                        }
                        (PlacementMode::FixedFinalRotations, Some(s)) if s.p == 0.0 => {
                            let thetas: Vec<f64> = config
                                .final_rotations
                                .as_ref()
                                .map(|r| r.iter().map(|&(t, _)| t).collect())
                                .unwrap_or_default();
                            Some(moments::collision_lower_bound_rotations(n, s.q, &thetas))
                        }
                        // Cauchy-Schwarz on the exact first moments.
                        _ => Some(bias.iter().map(|t| 1.0 + t * t).product::<f64>() - 1.0),
                    };
                    slots.push(
                        Slot::new(Measure::Collision, "collision_z", "-")
                            .agree(reference)
                            .at_least(bound),
                    );
                }
                Target::Px2 => {
                    for &x in &bitstrings {
                        slots.push(
                            Slot::new(Measure::Px2(x), "px2", format_bitstring(x, n))
                                .agree(second.as_ref().map(|s| s[x]))
                                .at_most(high_depth_bound(x)),
                        );
                    }
                }
                Target::Tail => {
                    for &x in &bitstrings {
                        slots.push(
                            Slot::new(Measure::Tail(x), "tail", format_bitstring(x, n)).aggregate(Aggregate::Fraction),
                        );
                    }
                }
                Target::TailShifted => {
                    for &x in &bitstrings {
                        let threshold = config.alpha / (1u64 << n) as f64 + first[x];
                        let second_x = second.as_ref().map(|s| s[x]).or_else(|| high_depth_bound(x));
                        let bound = second_x.map(|m2| moments::chebyshev_tail_lower(n, m2, config.alpha));
                        slots.push(
                            Slot::new(
                                Measure::TailShifted(x, threshold),
                                "tail_shifted",
                                format_bitstring(x, n),
                            )
                            .aggregate(Aggregate::Fraction)
                            .at_least(bound),
                        );
                    }
                }
                Target::Logprob => {
                    let lightcone = match standard {
                        Some(s) if final_noise && placement.mode == PlacementMode::AfterEveryGateWithFinalLayer => {
                            let (_, fit) = iterated_zero_overlap(&ptm, Some(&s), config.depth);
                            Some((s.r(), fit))
                        }
                        _ => None,
                    };
                    for &x in &bitstrings {
                        let bits = format_bitstring(x, n);
                        let a_ref: f64 = -(0..n).map(|i| sign(bit_of(x, n, i)) * bias[i]).sum::<f64>();
                        let neglog_lower = match lightcone {
                            Some((r, fit)) => Some(
                                moments::lightcone_terms(
                                    n,
                                    hamming_weight(x),
                                    r,
                                    config.depth,
                                    fit.kappa,
                                    fit.tau,
                                    fit.lambda,
                                )?
                                .neglog_lower,
                            ),
                            None => None,
                        };
                        slots.push(Slot::new(Measure::NegLog(x), "neglog_mean", bits.clone()).at_least(neglog_lower));
                        slots.push(
                            Slot::new(Measure::NegLog(x), "neglog_var", bits.clone())
                                .aggregate(Aggregate::Variance)
                                .at_most(Some(2.0 * n as f64)),
                        );
                        let name = if n <= EXACT_PERMUTATION_LIMIT {
                            "a_sigma"
                        } else {
                            "a_sigma_sampled"
                        };
                        slots.push(Slot::new(Measure::ASigma(x), name, bits).agree(Some(a_ref)));
                    }
                    for i in 0..n {
                        let bound = lightcone.map(|(_, fit)| {
                            4.0 * (fit.kappa - 0.5 + fit.tau * fit.lambda.powi(config.depth as i32)).powi(2)
                                / 30f64.powi(config.depth as i32)
                        });
                        slots.push(Slot::new(Measure::ZSq(i), format!("zsq_q{}", i + 1), "-").at_least(bound));
                    }
                }
                Target::Xeb => {
                    let (ideal_n, tw) = (ideal.as_ref().expect("built"), twirled.as_ref().expect("built"));
                    let exact = n <= MAX_TWO_COPY_QUBITS;
                    let xeb_true = if exact {
                        Some(exact_xeb(&shape, ideal_n, &noise)?)
                    } else {
                        None
                    };
                    let xeb_tw = if exact {
                        Some(exact_xeb(&shape, ideal_n, tw)?)
                    } else {
                        None
                    };
                    let z_diff = if exact {
                        let a = two_copy_moments_with(&shape, &noise)?.scaled_collision();
                        let b = two_copy_moments_with(&shape, tw)?.scaled_collision();
                        Some(a - b)
                    } else {
                        None
                    };
                    slots.push(Slot::new(Measure::Xeb, "xeb", "-").agree(xeb_true));
                    slots.push(Slot::new(Measure::XebTwirled, "xeb_twirled", "-").agree(xeb_tw));
                    slots.push(Slot::new(Measure::XebDiff, "xeb_twirl_diff", "-").agree(Some(0.0)));
                    let mut control = Slot::new(Measure::CollisionTwirlDiff, "collision_twirl_diff", "-").agree(z_diff);
                    if is_non_unital(&ptm) {
                        control.relations.push(Relation::DiffersFromZero);
                    }
                    slots.push(control);
                }
                Target::UniformIdentity => {
                    let mut slot =
                        Slot::new(Measure::UniformIdentity, "uniform_identity", "-").aggregate(Aggregate::Max);
                    slot.bound = Some(ABS_TOL);
                    slot.relations.push(Relation::ExactAtMost(ABS_TOL));
                    slots.push(slot);
                }
            }
        }

        Ok(Self {
            config: config.clone(),
            shape,
            noise,
            ideal,
            twirled,
            slots,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    fn evaluate_sample(&self, index: usize) -> Vec<f64> {
        let n = self.config.n;
        let mut rng = sample_rng(self.config.seed, index as u64);
        let gates = self.shape.sample(&mut rng);
        let dist = simulate_gates(n, &gates, &self.noise)
            .expect("validated size")
            .output_distribution();
        let scale = (1u64 << n) as f64;
        let extra = self.ideal.as_ref().map(|ideal| {
            let ideal_dist = simulate_gates(n, &gates, ideal)
                .expect("validated size")
                .output_distribution();
            let tw_dist = simulate_gates(n, &gates, self.twirled.as_ref().expect("built"))
                .expect("validated size")
                .output_distribution();
            (ideal_dist, tw_dist)
        });
        let perms: Option<Vec<Vec<usize>>> = (n > EXACT_PERMUTATION_LIMIT).then(|| {
            (0..PERMUTATION_SAMPLES)
                .map(|_| {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect()
        });

        self.slots
            .iter()
            .map(|slot| match &slot.measure {
                Measure::Px(x) => dist.prob(*x),
                Measure::Marginal(q, v) => dist.marginal(q, v).expect("in range"),
                Measure::Conditional { i, x, given } => dist.conditional(*i, *x, given).unwrap_or(f64::NAN),
                Measure::Collision => scale * dist.collision() - 1.0,
                Measure::Px2(x) => dist.prob(*x).powi(2),
                Measure::Tail(x) => (dist.prob(*x) < self.config.alpha / scale) as u8 as f64,
                Measure::TailShifted(x, t) => (dist.prob(*x) < *t) as u8 as f64,
                Measure::NegLog(x) => {
                    let p = dist.prob(*x);
                    if p > 0.0 {
                        -p.ln()
                    } else {
                        f64::NAN
                    }
                }
                Measure::ZSq(i) => {
                    let z = 2.0 * dist.marginal(&[*i], &[0]).expect("in range") - 1.0;
                    z * z
                }
                Measure::ASigma(x) => a_sigma(&dist, *x, perms.as_deref()),
                Measure::Xeb => {
                    let (ideal, _) = extra.as_ref().expect("built");
                    xeb(ideal, &dist).expect("same n").shifted
                }
                Measure::XebTwirled => {
                    let (ideal, tw) = extra.as_ref().expect("built");
                    xeb(ideal, tw).expect("same n").shifted
                }
                Measure::XebDiff => {
                    let (ideal, tw) = extra.as_ref().expect("built");
                    xeb(ideal, &dist).expect("same n").raw - xeb(ideal, tw).expect("same n").raw
                }
                Measure::CollisionTwirlDiff => {
                    let (_, tw) = extra.as_ref().expect("built");
                    scale * (dist.collision() - tw.collision())
                }
                Measure::UniformIdentity => (dist.uniform_distance() - (scale * dist.collision() - 1.0)).abs(),
            })
            .collect()
    }

    /// Evaluate all samples and aggregate in sample-index order.
    pub fn run(&self, exec: Execution, margin: f64) -> Result<Vec<EstimateRecord>> {
        let per_sample = map_indexed(self.config.samples, exec, |i| self.evaluate_sample(i))?;
        let total = self.config.samples as f64;
        Ok(self
            .slots
            .iter()
            .enumerate()
            .map(|(k, slot)| {
                let values: Vec<f64> = per_sample.iter().map(|v| v[k]).filter(|v| !v.is_nan()).collect();
                let used = values.len() as u64;
                let (value, std_error) = aggregate(&values, slot.aggregate);
                let excluded = 1.0 - used as f64 / total;
                let mut verdict = Verdict::NotApplicable;
                let mut slack = None;
                for (idx, rel) in slot.relations.iter().enumerate() {
                    let (ok, m) = rel.eval(value, std_error, margin);
                    if idx == 0 {
                        slack = m;
                    }
                    verdict = match (verdict, ok) {
                        (Verdict::Fail, _) | (_, false) => Verdict::Fail,
                        _ => Verdict::Pass,
                    };
                }
                if excluded > EXCLUSION_LIMIT {
                    verdict = Verdict::Fail;
                }
                EstimateRecord {
                    estimator: slot.estimator.clone(),
                    bitstring: slot.bitstring.clone(),
                    value,
                    std_error,
                    samples: used,
                    reference: slot.reference,
                    bound: slot.bound,
                    verdict,
                    margin: slack,
                }
            })
            .collect())
    }
}

fn is_non_unital(ptm: &PauliTransferMap) -> bool {
    (1..4).any(|j| ptm.t(0, j).abs() > 1e-12)
}

fn aggregate(values: &[f64], how: Aggregate) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    match how {
        Aggregate::Mean => {
            let acc = pairwise_accumulate(values);
            (acc.mean(), acc.std_error())
        }
        Aggregate::Fraction => {
            let hits = values.iter().filter(|&&v| v > 0.5).count() as u64;
            let (_, half) = wilson_std_error(hits, values.len() as u64);
            (hits as f64 / values.len() as f64, half)
        }
        Aggregate::Variance => {
            let acc = pairwise_accumulate(values);
            let var = acc.variance();
            let mean = acc.mean();
            let m4 = pairwise_accumulate(&values.iter().map(|v| (v - mean).powi(4)).collect::<Vec<_>>()).mean();
            let se = ((m4 - var * var).max(0.0) / values.len() as f64).sqrt();
            (var, se)
        }
        Aggregate::Max => (values.iter().copied().fold(0.0, f64::max), 0.0),
    }
}

/// -(1/n!) Σ_σ Σ_i <Z_σ(i)>_{σ(1..i-1)} with <Z_i>_J = 2 Pr(X_i = x_i | X_J = x_J) - 1.
/// Exact via subsets (a prefix set J before i has probability |J|!(n-1-|J|)!/n!),
/// or averaged over the supplied permutations.
fn a_sigma(dist: &OutputDistribution, x: usize, perms: Option<&[Vec<usize>]>) -> f64 {
    let n = dist.n;
    let z = |i: usize, given: &[usize]| dist.conditional(i, x, given).map(|p| 2.0 * p - 1.0);
    let mut total = 0.0;
    match perms {
        None => {
            let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
            let n_fact = fact(n);
            for i in 0..n {
                let others: Vec<usize> = (0..n).filter(|&q| q != i).collect();
                for mask in 0..1usize << others.len() {
                    let given: Vec<usize> = others
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| (mask >> k) & 1 == 1)
                        .map(|(_, &q)| q)
                        .collect();
                    let k = given.len();
                    let weight = fact(k) * fact(n - 1 - k) / n_fact;
                    match z(i, &given) {
                        Ok(v) => total -= weight * v,
                        Err(_) => return f64::NAN,
                    }
                }
            }
        }
        Some(perms) => {
            for perm in perms {
                for (pos, &i) in perm.iter().enumerate() {
                    match z(i, &perm[..pos]) {
                        Ok(v) => total -= v / perms.len() as f64,
                        Err(_) => return f64::NAN,
                    }
                }
            }
        }
    }
    total
}
