//! Named verification suites. Each row is one check with a pass/fail verdict.
//!
//! `margin` is in standard errors for Monte Carlo rows and is the absolute
//! slack for exact rows.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::werner::{pair_coefficients_mc, twirl_strength_mc};
use crate::channel::{
    iterated_zero_overlap, pair_coefficients, pair_coefficients_from_ptm, ChannelKind, ChannelSpec, KrausChannel,
    Order, PauliTransferMap, StandardNoise,
};
use crate::circuit::exact::{exact_xeb, two_copy_moments_with};
use crate::circuit::haar::haar_unitary;
use crate::circuit::layout::{Architecture, CircuitShape, NoisePlacement, PlacementMode, PreparedNoise};
use crate::circuit::state::{bit_of, hamming_weight};
use crate::error::{Error, Result};
use crate::linalg::{identity, max_abs_diff, pauli, swap, trace, CMatrix};
use crate::moments;
use crate::statmech::{
    label_dp_second_moments, last_layer_correction, modified_ensemble_second_moment, monotonicity_check, readout_bound,
    sequence_coeffs, single_qubit_layer_state, twirled_pair_map,
};
use crate::stats::Accumulator;

use super::config::{BitstringSelector, ExperimentConfig, Target};
use super::estimators::{agreement, EstimateRecord, Experiment, Verdict, DEFAULT_MARGIN};
use super::exec::{map_indexed, Execution};
use super::output::{fmt_float, fmt_opt};

const EXACT_TOL: f64 = 1e-10;
const RECURSION_TOL: f64 = 1e-12;
const DEFAULT_MC_SAMPLES: usize = 20_000;
const WERNER_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    ChannelAlgebra,
    FirstMoments,
    CollisionBounds,
    SecondMomentChain,
    StatmechRecursions,
    Lightcone,
    LastLayer,
    TwirlXeb,
    UniformIdentity,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::ChannelAlgebra,
        Suite::FirstMoments,
        Suite::CollisionBounds,
        Suite::SecondMomentChain,
        Suite::StatmechRecursions,
        Suite::Lightcone,
        Suite::LastLayer,
        Suite::TwirlXeb,
        Suite::UniformIdentity,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::ChannelAlgebra => "channel_algebra",
            Suite::FirstMoments => "first_moments",
            Suite::CollisionBounds => "collision_bounds",
            Suite::SecondMomentChain => "second_moment_chain",
            Suite::StatmechRecursions => "statmech_recursions",
            Suite::Lightcone => "lightcone",
            Suite::LastLayer => "last_layer",
            Suite::TwirlXeb => "twirl_xeb",
            Suite::UniformIdentity => "uniform_identity",
        }
    }

    /// A suite name, or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .find(|suite| suite.as_str() == s)
            .map(|suite| vec![*suite])
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Overrides the suite's qubit count where it has a single one.
    pub n: Option<usize>,
    /// Overrides the Monte Carlo sample count.
    pub samples: Option<usize>,
    pub seed: u64,
    pub workers: usize,
    pub margin: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n: None,
            samples: None,
            seed: 1,
            workers: 1,
            margin: DEFAULT_MARGIN,
        }
    }
}

impl VerifyOptions {
    fn exec(&self) -> Execution {
        Execution::with_workers(self.workers)
    }

    fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub params: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub bound: Option<f64>,
    pub std_error: Option<f64>,
    pub margin: Option<f64>,
    pub verdict: Verdict,
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

struct Rows {
    suite: Suite,
    rows: Vec<CheckRow>,
}

impl Rows {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            rows: Vec::new(),
        }
    }

    fn push(
        &mut self,
        check: &str,
        params: String,
        value: f64,
        reference: Option<f64>,
        bound: Option<f64>,
    ) -> &mut CheckRow {
        self.rows.push(CheckRow {
            suite: self.suite.as_str().into(),
            check: check.into(),
            params,
            value,
            reference,
            bound,
            std_error: None,
            margin: None,
            verdict: Verdict::Fail,
        });
        self.rows.last_mut().expect("just pushed")
    }

    /// |value - reference| <= tol.
    fn equal(&mut self, check: &str, params: String, value: f64, reference: f64, tol: f64) {
        let diff = (value - reference).abs();
        let row = self.push(check, params, value, Some(reference), None);
        row.margin = Some(tol - diff);
        row.verdict = pass_if(diff <= tol);
    }

    /// A deviation that should vanish: value <= tol.
    fn small(&mut self, check: &str, params: String, deviation: f64, tol: f64) {
        let row = self.push(check, params, deviation, Some(0.0), Some(tol));
        row.margin = Some(tol - deviation);
        row.verdict = pass_if(deviation <= tol);
    }

    /// value <= bound + tol.
    fn at_most(&mut self, check: &str, params: String, value: f64, bound: f64, tol: f64) {
        let row = self.push(check, params, value, None, Some(bound));
        row.margin = Some(bound - value);
        row.verdict = pass_if(value <= bound + tol);
    }

    /// value >= bound - tol.
    fn at_least(&mut self, check: &str, params: String, value: f64, bound: f64, tol: f64) {
        let row = self.push(check, params, value, None, Some(bound));
        row.margin = Some(value - bound);
        row.verdict = pass_if(value >= bound - tol);
    }

    fn flag(&mut self, check: &str, params: String, ok: bool) {
        let row = self.push(check, params, ok as u8 as f64, Some(1.0), None);
        row.verdict = pass_if(ok);
    }

    fn estimate(&mut self, check: &str, params: String, value: f64, std_error: f64, reference: f64, margin: f64) {
        let (verdict, m) = agreement(value, std_error, reference, margin);
        let row = self.push(check, params, value, Some(reference), None);
        row.std_error = Some(std_error);
        row.margin = m;
        row.verdict = verdict;
    }

    fn records(&mut self, params: &str, records: &[EstimateRecord]) {
        for r in records {
            let params = if r.bitstring == "-" {
                params.to_string()
            } else {
                format!("{params},x={}", r.bitstring)
            };
            self.rows.push(CheckRow {
                suite: self.suite.as_str().into(),
                check: r.estimator.clone(),
                params,
                value: r.value,
                reference: r.reference,
                bound: r.bound,
                std_error: Some(r.std_error),
                margin: r.margin,
                verdict: r.verdict,
            });
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rows = Rows::new(suite);
    match suite {
        Suite::ChannelAlgebra => channel_algebra(&mut rows, opts)?,
        Suite::FirstMoments => first_moments(&mut rows, opts)?,
        Suite::CollisionBounds => collision_bounds(&mut rows, opts)?,
        Suite::SecondMomentChain => second_moment_chain(&mut rows, opts)?,
        Suite::StatmechRecursions => statmech_recursions(&mut rows, opts)?,
        Suite::Lightcone => lightcone(&mut rows, opts)?,
        Suite::LastLayer => last_layer(&mut rows, opts)?,
        Suite::TwirlXeb => twirl_xeb(&mut rows, opts)?,
        Suite::UniformIdentity => uniform_identity(&mut rows, opts)?,
    }
    Ok(rows.rows)
}

pub fn all_pass(rows: &[CheckRow]) -> bool {
    rows.iter().all(|r| r.verdict == Verdict::Pass)
}

pub const CHECK_HEADER: [&str; 9] = [
    "suite",
    "check",
    "params",
    "value",
    "reference",
    "bound",
    "std_error",
    "margin",
    "verdict",
];

pub fn write_checks<W: Write>(out: W, rows: &[CheckRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CHECK_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.suite.as_str(),
            &r.check,
            &r.params,
            &fmt_float(r.value),
            &fmt_opt(r.reference),
            &fmt_opt(r.bound),
            &fmt_opt(r.std_error),
            &fmt_opt(r.margin),
            r.verdict.as_str(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

fn order_name(order: Order) -> &'static str {
    match order {
        Order::AmpThenDep => "amp_then_dep",
        Order::DepThenAmp => "dep_then_amp",
    }
}

fn order_kind(order: Order) -> ChannelKind {
    match order {
        Order::AmpThenDep => ChannelKind::AmpThenDep,
        Order::DepThenAmp => ChannelKind::DepThenAmp,
    }
}

const ORDERS: [Order; 2] = [Order::AmpThenDep, Order::DepThenAmp];

fn unit_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 / (points - 1) as f64).collect()
}

fn channel_algebra(rows: &mut Rows, _opts: &VerifyOptions) -> Result<()> {
    let grid = unit_grid(10);
    let paulis: Vec<CMatrix> = (0..4).map(pauli).collect();
    for order in ORDERS {
        let params = format!("order={},grid=10x10", order_name(order));
        let mut duality: f64 = 0.0;
        let mut unital_adjoint: f64 = 0.0;
        let mut completeness: f64 = 0.0;
        let mut min_choi = f64::INFINITY;
        let mut roundtrip: f64 = 0.0;
        let mut composition: f64 = 0.0;
        let mut expansion: f64 = 0.0;
        let mut pair: f64 = 0.0;
        let mut pair_c: f64 = 0.0;
        let mut contraction = true;
        let mut kraus_roundtrip: f64 = 0.0;
        for &p in &grid {
            for &q in &grid {
                let noise = StandardNoise::new(order, p, q)?;
                let ch = noise.channel();
                let ptm = ch.ptm()?;
                for a in &paulis {
                    let adj = ch.apply_adjoint(a)?;
                    for b in &paulis {
                        let lhs = trace(&(a * ch.apply(b)?));
                        let rhs = trace(&(&adj * b));
                        duality = duality.max((lhs - rhs).norm());
                    }
                }
                for b in &paulis {
                    roundtrip = roundtrip.max(max_abs_diff(&ptm.apply(b)?, &ch.apply(b)?));
                }
                unital_adjoint = unital_adjoint.max(max_abs_diff(&ch.apply_adjoint(&identity(2))?, &identity(2)));
                completeness = completeness.max(ch.completeness_deviation());
                min_choi = min_choi.min(ch.min_choi_eigenvalue());

                let amp = KrausChannel::amplitude_damping(q)?;
                let dep = KrausChannel::depolarizing(p)?;
                let (outer, inner) = match order {
                    Order::AmpThenDep => (&amp, &dep),
                    Order::DepThenAmp => (&dep, &amp),
                };
                let product = outer.ptm()?.compose(&inner.ptm()?);
                composition = composition
                    .max(product.max_abs_diff(&outer.compose(inner)?.ptm()?))
                    .max(product.max_abs_diff(&noise.ptm()));

                let expected = identity(2) * crate::linalg::c(noise.r(), 0.0)
                    + pauli(3) * crate::linalg::c((1.0 - q) * (1.0 - p), 0.0);
                expansion = expansion.max(max_abs_diff(&ch.apply_adjoint(&pauli(3))?, &expected));

                let weingarten = pair_coefficients(&ch)?;
                let from_ptm = pair_coefficients_from_ptm(&ptm);
                pair = pair
                    .max((weingarten.a - from_ptm.a).abs())
                    .max((weingarten.b - from_ptm.b).abs())
                    .max((weingarten.a - noise.pair_a()).abs())
                    .max((weingarten.b - noise.pair_b()).abs());
                let c_closed = 1.0 - (1.0 - p).powi(2) * (1.0 - q) * (1.0 - q / 3.0);
                pair_c = pair_c
                    .max((weingarten.c() - c_closed).abs())
                    .max((noise.pair_c() - c_closed).abs());
                let lambda = 1.0 - weingarten.c();
                contraction &= (-EXACT_TOL..=1.0 + EXACT_TOL).contains(&lambda);

                kraus_roundtrip = kraus_roundtrip.max(ptm.to_kraus()?.ptm()?.max_abs_diff(&ptm));
            }
        }
        rows.small("adjoint_duality", params.clone(), duality, EXACT_TOL);
        rows.small("adjoint_unital", params.clone(), unital_adjoint, EXACT_TOL);
        rows.small("completeness", params.clone(), completeness, EXACT_TOL);
        rows.at_least("choi_min_eigenvalue", params.clone(), min_choi, 0.0, EXACT_TOL);
        rows.small("ptm_apply_matches_kraus", params.clone(), roundtrip, EXACT_TOL);
        rows.small("ptm_composition", params.clone(), composition, EXACT_TOL);
        rows.small("adjoint_z_expansion", params.clone(), expansion, EXACT_TOL);
        rows.small("pair_coefficients", params.clone(), pair, EXACT_TOL);
        rows.small("pair_c_closed_form", params.clone(), pair_c, EXACT_TOL);
        rows.flag("pair_contraction_in_unit_interval", params.clone(), contraction);
        rows.small("ptm_kraus_roundtrip", params, kraus_roundtrip, EXACT_TOL);
    }

    rows.flag(
        "rejects_out_of_range",
        "amp_damp,q=1.5".into(),
        ChannelSpec::standard(ChannelKind::AmpDamp, 1.5, 0.0).channel().is_err(),
    );
    let mut not_cp = PauliTransferMap::identity().matrix().to_owned();
    not_cp[1][1] = 1.0;
    not_cp[2][2] = 1.0;
    not_cp[3][3] = -1.0;
    let rejected = matches!(
        ChannelSpec::general(not_cp).channel(),
        Err(Error::CptpViolation { min_eigenvalue }) if min_eigenvalue < 0.0
    );
    rows.flag("rejects_non_cp_map", "t=diag(1,1,1,-1)".into(), rejected);
    Ok(())
}

fn run_records(config: &ExperimentConfig, opts: &VerifyOptions) -> Result<Vec<EstimateRecord>> {
    Experiment::new(config)?.run(opts.exec(), opts.margin)
}

fn standard_config(
    n: usize,
    depth: usize,
    order: Order,
    q: f64,
    p: f64,
    samples: usize,
    seed: u64,
    targets: Vec<Target>,
) -> ExperimentConfig {
    ExperimentConfig {
        n,
        depth,
        channel: ChannelSpec::standard(order_kind(order), q, p),
        placement: PlacementMode::AfterEveryGateWithFinalLayer,
        final_rotations: None,
        samples,
        seed,
        targets,
        bitstrings: BitstringSelector::default(),
        alpha: 1.0,
        workers: 1,
    }
}

/// Experiment settings for the first-moment checks.
pub fn first_moment_config(order: Order, opts: &VerifyOptions, seed: u64) -> ExperimentConfig {
    let n = opts.n.unwrap_or(4);
    standard_config(
        n,
        4,
        order,
        0.2,
        0.1,
        opts.samples_or(DEFAULT_MC_SAMPLES),
        seed,
        vec![Target::Px, Target::Marginal],
    )
}

/// Conditioning checks use the two constant strings and two alternating ones.
pub fn conditional_config(order: Order, opts: &VerifyOptions, seed: u64) -> ExperimentConfig {
    let n = opts.n.unwrap_or(4);
    let mut cfg = first_moment_config(order, opts, seed);
    cfg.targets = vec![Target::Conditional];
    let alternating: String = (0..n).map(|k| if (k + 1) % 4 < 2 { '0' } else { '1' }).collect();
    let flipped: String = alternating.chars().map(|c| if c == '0' { '1' } else { '0' }).collect();
    cfg.bitstrings = BitstringSelector::List(vec!["0".repeat(n), "1".repeat(n), alternating, flipped]);
    cfg
}

fn first_moments(rows: &mut Rows, opts: &VerifyOptions) -> Result<()> {
    for (k, order) in ORDERS.into_iter().enumerate() {
        let cfg = first_moment_config(order, opts, opts.seed + k as u64);
        let params = format!("order={},n={},d={},q=0.2,p=0.1", order_name(order), cfg.n, cfg.depth);
        rows.records(&params, &run_records(&cfg, opts)?);
        let cfg = conditional_config(order, opts, opts.seed + 10 + k as u64);
        rows.records(&params, &run_records(&cfg, opts)?);
        // The closed form written in (n, w, order, p, q) against the per-qubit product.
        let noise = StandardNoise::new(order, 0.1, 0.2)?;
        let mut worst: f64 = 0.0;
        for x in 0..1usize << cfg.n {
            let closed = moments::first_moment(cfg.n, hamming_weight(x), order, 0.1, 0.2)?;
            let product: f64 = (0..cfg.n)
                .map(|q| moments::conditional_first_moment(noise.ptm().t(0, 3), bit_of(x, cfg.n, q)))
                .product();
            worst = worst.max((closed - product).abs());
        }
        rows.small("closed_form_matches_product", params, worst, RECURSION_TOL);
    }
    Ok(())
}

/// (p, q) points shared by the exact bound checks.
pub const COLLISION_POINTS: [(f64, f64); 6] = [(0.0, 0.2), (0.1, 0.2), (0.3, 0.1), (0.05, 0.5), (0.2, 0.0), (0.5, 0.9)];

/// A random channel from a Haar-random two-qubit unitary on system ⊗ environment.
pub fn random_stinespring_channel<R: rand::Rng + ?Sized>(rng: &mut R) -> Result<KrausChannel> {
    let u = haar_unitary(4, rng)?;
    let ops = (0..2).map(|env| u.view((env * 2, 0), (2, 2)).into_owned()).collect();
    KrausChannel::new(ops)
}

fn collision_bounds(rows: &mut Rows, opts: &VerifyOptions) -> Result<()> {
    let ns: Vec<usize> = match opts.n {
        Some(n) => vec![n],
        None => (2..=5).collect(),
    };
    let mut grid = Vec::new();
    for &n in &ns {
        for d in 1..=6 {
            for &(p, q) in &COLLISION_POINTS {
                for order in ORDERS {
                    grid.push((n, d, p, q, order));
                }
            }
        }
    }
    let results = map_indexed(grid.len(), opts.exec(), |i| -> Result<(f64, f64, f64)> {
        let (n, d, p, q, order) = grid[i];
        let shape = CircuitShape::for_qubits(n, d)?;
        let placement = NoisePlacement::new(
            PlacementMode::AfterEveryGateWithFinalLayer,
            ChannelSpec::standard(order_kind(order), q, p),
        );
        let noise = PreparedNoise::new(&placement, n)?;
        let exact = two_copy_moments_with(&shape, &noise)?;
        let dp: f64 = label_dp_second_moments(&shape, &noise)?.iter().sum();
        let r = StandardNoise::new(order, p, q)?.r();
        Ok((
            exact.scaled_collision(),
            moments::collision_lower_bound(n, r),
            (dp - exact.collision).abs(),
        ))
    })?;
    let mut dp_worst: f64 = 0.0;
    for (&(n, d, p, q, order), res) in grid.iter().zip(results) {
        let (z, bound, dp_diff) = res?;
        let params = format!("order={},n={n},d={d},p={p},q={q}", order_name(order));
        rows.at_least("collision_vs_bound", params, z, bound, RECURSION_TOL);
        dp_worst = dp_worst.max(dp_diff);
    }
    rows.small(
        "label_dp_matches_two_copy",
        format!("points={}", grid.len()),
        dp_worst,
        EXACT_TOL,
    );

    let n = opts.n.unwrap_or(4);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for k in 0..20 {
        let ch = random_stinespring_channel(&mut rng)?;
        let ptm = ch.ptm()?;
        let spec = ChannelSpec::general(*ptm.matrix());
        let d = 1 + k % 4;
        let shape = CircuitShape::for_qubits(n, d)?;
        let placement = NoisePlacement::new(PlacementMode::AfterEveryGateWithFinalLayer, spec);
        let noise = PreparedNoise::new(&placement, n)?;
        let z = two_copy_moments_with(&shape, &noise)?.scaled_collision();
        let t03 = ptm.t(0, 3);
        rows.at_least(
            "collision_vs_bound_general",
            format!("channel={k},n={n},d={d},t03={t03:.6}"),
            z,
            moments::collision_lower_bound_general(n, t03),
            RECURSION_TOL,
        );
    }
    Ok(())
}

/// (p, q) grid for the second-moment checks.
pub const SECOND_MOMENT_PS: [f64; 3] = [0.05, 0.1, 0.2];
pub const SECOND_MOMENT_QS: [f64; 3] = [0.1, 0.3, 0.5];

#[derive(Clone, Copy, Debug)]
struct ChainPoint {
    exact_max: f64,
    high_depth_bound: f64,
    brickwork_no_final: f64,
    modified: f64,
    chain_ratio: f64,
    correction_ratio: f64,
    single_qubit_exact: f64,
    dp_diff: f64,
}

fn chain_point(n: usize, d: usize, order: Order, p: f64, q: f64) -> Result<ChainPoint> {
    let spec = ChannelSpec::standard(order_kind(order), q, p);
    let noise_std = StandardNoise::new(order, p, q)?;
    let shape = CircuitShape::brickwork(n, d)?;
    let with_final = PreparedNoise::new(
        &NoisePlacement::new(PlacementMode::AfterEveryGateWithFinalLayer, spec.clone()),
        n,
    )?;
    let exact = two_copy_moments_with(&shape, &with_final)?.second_moments;
    let dp = label_dp_second_moments(&shape, &with_final)?;
    let dp_diff = exact.iter().zip(&dp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let params = moments::second_moment_params(order, p, q)?;
    let high_depth_bound = moments::second_moment_bound(n, d, &params);
    let exact_max = (0..1usize << n)
        .filter(|&x| 2 * hamming_weight(x) >= n)
        .map(|x| exact[x])
        .fold(0.0, f64::max);

    let mut brickwork_no_final: f64 = 0.0;
    let mut modified = 0.0;
    for rec in monotonicity_check(n, d, &spec)? {
        brickwork_no_final = brickwork_no_final.max(rec.brickwork);
        modified = rec.modified;
    }

    let e = readout_bound(&noise_std.channel())?;
    let chain_ratio = (0..1usize << n)
        .map(|x| {
            let factor: f64 = (0..n).map(|j| e[bit_of(x, n, j) as usize]).product();
            exact[x] / (modified * factor)
        })
        .fold(0.0, f64::max);

    let r = noise_std.r();
    let correction_ratio = (0..1usize << n)
        .map(|x| exact[x] / (modified * last_layer_correction(x, n, r)))
        .fold(0.0, f64::max);

    let single = CircuitShape::new(n, d, Architecture::SingleQubit)?;
    let no_final = PreparedNoise::new(&NoisePlacement::new(PlacementMode::NoFinalNoiseLayer, spec), n)?;
    let single_qubit_exact = two_copy_moments_with(&single, &no_final)?.second_moments[0];

    Ok(ChainPoint {
        exact_max,
        high_depth_bound,
        brickwork_no_final,
        modified,
        chain_ratio,
        correction_ratio,
        single_qubit_exact,
        dp_diff,
    })
}

fn second_moment_chain(rows: &mut Rows, opts: &VerifyOptions) -> Result<()> {
    let ns: Vec<usize> = match opts.n {
        Some(n) => vec![n],
        None => vec![2, 4],
    };
    let mut grid = Vec::new();
    for &n in &ns {
        for d in 2..=8 {
            for &p in &SECOND_MOMENT_PS {
                for &q in &SECOND_MOMENT_QS {
                    for order in ORDERS {
                        grid.push((n, d, order, p, q));
                    }
                }
            }
        }
    }
    let results = map_indexed(grid.len(), opts.exec(), |i| {
        let (n, d, order, p, q) = grid[i];
        chain_point(n, d, order, p, q)
    })?;
    let mut dp_worst: f64 = 0.0;
    for (&(n, d, order, p, q), res) in grid.iter().zip(results) {
        let pt = res?;
        let params = format!("order={},n={n},d={d},p={p},q={q}", order_name(order));
        rows.at_most(
            "second_moment_vs_bound",
            params.clone(),
            pt.exact_max,
            pt.high_depth_bound,
            0.0,
        );
        rows.at_most("monotonicity", params.clone(), pt.brickwork_no_final, pt.modified, 0.0);
        rows.at_most("chain_ratio", params.clone(), pt.chain_ratio, 1.0, 0.0);
        rows.at_most(
            "chain_ratio_last_layer_correction",
            params.clone(),
            pt.correction_ratio,
            1.0,
            0.0,
        );
        rows.equal(
            "modified_ensemble_closed_form",
            params,
            pt.single_qubit_exact,
            pt.modified,
            RECURSION_TOL,
        );
        dp_worst = dp_worst.max(pt.dp_diff);
    }
    rows.small(
        "label_dp_matches_two_copy",
        format!("points={}", grid.len()),
        dp_worst,
        EXACT_TOL,
    );
    Ok(())
}

fn statmech_recursions(rows: &mut Rows, opts: &VerifyOptions) -> Result<()> {
    let mut points = Vec::new();
    for order in ORDERS {
        for &(p, q) in &COLLISION_POINTS {
            points.push(StandardNoise::new(order, p, q)?);
        }
    }
    for noise in &points {
        let params = format!("order={},p={},q={}", order_name(noise.order), noise.p, noise.q);
        let (a, b) = (noise.pair_a(), noise.pair_b());
        let mut prop: f64 = 0.0;
        let mut seq: f64 = 0.0;
        let mut conservation_i: f64 = 0.0;
        let mut conservation_s: f64 = 0.0;
        let mut positivity = f64::INFINITY;
        let mut modified: f64 = 0.0;
        for m in 0..=50 {
            let x = single_qubit_layer_state(a, b, m);
            if let Some(closed) = x.x_closed {
                prop = prop.max((closed - x.x_iterated).abs());
            }
            let s = sequence_coeffs(a, b, m);
            if let Some(closed) = s.closed {
                seq = seq.max(closed.max_abs_diff(&s.iterated));
            }
            let v = s.value();
            conservation_i = conservation_i.max((v.x + v.y / 2.0 - 1.0).abs());
            conservation_s = conservation_s.max((v.z + v.w / 2.0 - 0.5).abs());
            positivity = positivity.min(2.0 * v.v() - v.u()).min(2.0 * v.u() - v.v() - 1.0);
            if m >= 1 && (noise.p, noise.q) != (0.0, 0.0) {
                // μ + ν λ^{d-1} is the per-qubit modified-ensemble value 3/10 - x_{d-1}.
                let params = moments::second_moment_params(noise.order, noise.p, noise.q)?;
                let lambda = 1.0 - params.c;
                let per_qubit = params.mu + params.nu * lambda.powi(m as i32 - 1);
                modified = modified.max((per_qubit - modified_ensemble_second_moment(1, m, a, b)?).abs());
            }
        }
        rows.small("prop_closed_vs_iterated", params.clone(), prop, RECURSION_TOL);
        rows.small("sequence_closed_vs_iterated", params.clone(), seq, RECURSION_TOL);
        rows.small("conservation_identity", params.clone(), conservation_i, RECURSION_TOL);
        rows.small("conservation_swap", params.clone(), conservation_s, RECURSION_TOL);
        rows.at_least("sequence_positivity", params.clone(), positivity, 0.0, RECURSION_TOL);
        rows.small(
            "mu_nu_matches_modified_ensemble",
            params.clone(),
            modified,
            RECURSION_TOL,
        );

        // Explicit 4x4 operator iteration of the twirled pair map.
        let ch = noise.channel();
        let (mut img_i, mut img_s) = (identity(4), swap(2));
        let mut explicit: f64 = 0.0;
        for m in 1..=6 {
            img_i = twirled_pair_map(&ch, &img_i)?;
            img_s = twirled_pair_map(&ch, &img_s)?;
            let v = sequence_coeffs(a, b, m).value();
            let want_i = identity(4) * crate::linalg::c(v.x, 0.0) + swap(2) * crate::linalg::c(v.y, 0.0);
            let want_s = identity(4) * crate::linalg::c(v.z, 0.0) + swap(2) * crate::linalg::c(v.w, 0.0);
            explicit = explicit
                .max(max_abs_diff(&img_i, &want_i))
                .max(max_abs_diff(&img_s, &want_s));
        }
        rows.small(
            "sequence_matches_operator_iteration",
            params.clone(),
            explicit,
            RECURSION_TOL,
        );

        let (_, fit) = iterated_zero_overlap(&noise.ptm(), Some(noise), 50);
        rows.small("iterated_fit_residual", params, fit.max_residual, EXACT_TOL);
    }

    let samples = opts.samples_or(WERNER_SAMPLES);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for noise in points.iter().filter(|n| n.p > 0.0 || n.q > 0.0).take(4) {
        let params = format!(
            "order={},p={},q={},samples={samples}",
            order_name(noise.order),
            noise.p,
            noise.q
        );
        let ch = noise.channel();
        let (est_a, est_b) = pair_coefficients_mc(&ch, samples, &mut rng)?;
        rows.estimate(
            "werner_a_mc",
            params.clone(),
            est_a.mean,
            est_a.std_error,
            noise.pair_a(),
            opts.margin,
        );
        rows.estimate(
            "werner_b_mc",
            params.clone(),
            est_b.mean,
            est_b.std_error,
            noise.pair_b(),
            opts.margin,
        );
        let tw = twirl_strength_mc(&ch, samples, &mut rng)?;
        rows.estimate(
            "twirl_strength_mc",
            params,
            tw.mean,
            tw.std_error,
            noise.ptm().twirl_strength(),
            opts.margin,
        );
    }

    // Haar fourth moments: E|U_00|^4 = 2 / (D (D + 1)).
    for dim in [2usize, 4] {
        let mut acc = Accumulator::new();
        for _ in 0..samples {
            let u = haar_unitary(dim, &mut rng)?;
            acc.push(u[(0, 0)].norm_sqr().powi(2));
        }
        let est = acc.estimate();
        rows.estimate(
            "haar_fourth_moment_mc",
            format!("dim={dim},samples={samples}"),
            est.mean,
            est.std_error,
            2.0 / (dim * (dim + 1)) as f64,
            opts.margin,
        );
    }
    Ok(())
}

/// Lightcone checks: amp_then_dep q = 0.2, p = 0.1, one string per Hamming weight.
pub fn lightcone_config(depth: usize, opts: &VerifyOptions, seed: u64) -> ExperimentConfig {
    let n = opts.n.unwrap_or(4);
    let mut cfg = standard_config(
        n,
        depth,
        Order::AmpThenDep,
        0.2,
        0.1,
        opts.samples_or(DEFAULT_MC_SAMPLES),
        seed,
        vec![Target::Logprob],
    );
    cfg.bitstrings = BitstringSelector::List((0..=n).map(|w| "1".repeat(w) + &"0".repeat(n - w)).collect());
    cfg
}

fn lightcone(rows: &mut Rows, opts: &VerifyOptions) -> Result<()> {
    for d in 1..=4 {
        let cfg = lightcone_config(d, opts, opts.seed + d as u64);
        let params = format!("n={},d={d},q=0.2,p=0.1", cfg.n);
        rows.records(&params, &run_records(&cfg, opts)?);
    }
    Ok(())
}

pub const LAST_LAYER_ANGLES: [f64; 4] = [0.0, PI / 8.0, PI / 6.0, PI / 4.0];
const LAST_LAYER_Q: f64 = 0.3;

/// n = 1 with amplitude damping after every gate and a fixed final rotation.
pub fn last_layer_config(theta: f64, opts: &VerifyOptions, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n: 1,
        depth: 3,
        channel: ChannelSpec::standard(ChannelKind::AmpDamp, LAST_LAYER_Q, 0.0),
        placement: PlacementMode::FixedFinalRotations,
        final_rotations: Some(vec![(theta, 0.0)]),
        samples: opts.samples_or(DEFAULT_MC_SAMPLES),
        seed,
        targets: vec![Target::Px],
        bitstrings: BitstringSelector::default(),
        alpha: 1.0,
        workers: 1,
    }
}

fn last_layer(rows: &mut Rows, opts: &VerifyOptions) -> Result<()> {
    for (k, &theta) in LAST_LAYER_ANGLES.iter().enumerate() {
        let cfg = last_layer_config(theta, opts, opts.seed + k as u64);
        for rec in run_records(&cfg, opts)? {
            let bit = if rec.bitstring == "0" { 0 } else { 1 };
            let closed = moments::last_layer_first_moment(LAST_LAYER_Q, theta, bit)?;
            let params = format!("n=1,d={},q={LAST_LAYER_Q},theta={theta:.6},b={bit}", cfg.depth);
            rows.estimate(
                "last_layer_first_moment",
                params.clone(),
                rec.value,
                rec.std_error,
                closed,
                opts.margin,
            );
            rows.equal(
                "rotated_bias_matches_closed_form",
                params,
                rec.reference.unwrap_or(f64::NAN),
                closed,
                RECURSION_TOL,
            );
        }
    }

    let n = 3;
    let angles = [(0.0, 0.0), (PI / 8.0, 0.3), (PI / 6.0, 1.1)];
    for q in [0.2, 0.5] {
        for d in 1..=4 {
            let shape = CircuitShape::for_qubits(n, d)?;
            let placement =
                NoisePlacement::with_rotations(ChannelSpec::standard(ChannelKind::AmpDamp, q, 0.0), angles.to_vec());
            let noise = PreparedNoise::new(&placement, n)?;
            let z = two_copy_moments_with(&shape, &noise)?.scaled_collision();
            let thetas: Vec<f64> = angles.iter().map(|a| a.0).collect();
            rows.at_least(
                "rotation_collision_bound",
                format!("n={n},d={d},q={q}"),
                z,
                moments::collision_lower_bound_rotations(n, q, &thetas),
                RECURSION_TOL,
            );
        }
    }
    Ok(())
}

/// XEB against the depolarizing surrogate: n = 3, d = 4, amp_then_dep q = 0.2, p = 0.1.
pub fn twirl_config(placement: PlacementMode, opts: &VerifyOptions, seed: u64) -> ExperimentConfig {
    let mut cfg = standard_config(
        opts.n.unwrap_or(3),
        4,
        Order::AmpThenDep,
        0.2,
        0.1,
        opts.samples_or(DEFAULT_MC_SAMPLES),
        seed,
        vec![Target::Xeb],
    );
    cfg.placement = placement;
    cfg
}

fn twirl_xeb(rows: &mut Rows, opts: &VerifyOptions) -> Result<()> {
    let modes = [
        PlacementMode::AfterEveryGateWithFinalLayer,
        PlacementMode::NoFinalNoiseLayer,
    ];
    for (k, mode) in modes.into_iter().enumerate() {
        let cfg = twirl_config(mode, opts, opts.seed + k as u64);
        let params = format!("n={},d={},q=0.2,p=0.1,placement={}", cfg.n, cfg.depth, mode.as_str());
        rows.records(&params, &run_records(&cfg, opts)?);

        let shape = cfg.shape()?;
        let placement = cfg.placement();
        let noise = PreparedNoise::new(&placement, cfg.n)?;
        let ideal = PreparedNoise::from_channel(&placement, KrausChannel::identity(1), cfg.n)?;
        let lambda = crate::channel::twirl_strength(&noise.channel)?;
        let surrogate = PreparedNoise::from_channel(&placement, KrausChannel::depolarizing(lambda)?, cfg.n)?
            .with_final_channel(noise.channel.clone());
        rows.equal(
            "xeb_exact_twirl_equality",
            params,
            exact_xeb(&shape, &ideal, &noise)?,
            exact_xeb(&shape, &ideal, &surrogate)?,
            EXACT_TOL,
        );
    }
    Ok(())
}

pub fn uniform_identity_config(opts: &VerifyOptions) -> ExperimentConfig {
    let mut cfg = standard_config(
        opts.n.unwrap_or(3),
        4,
        Order::AmpThenDep,
        0.2,
        0.1,
        opts.samples_or(500),
        opts.seed,
        vec![Target::UniformIdentity],
    );
    cfg.bitstrings = BitstringSelector::default();
    cfg
}

fn uniform_identity(rows: &mut Rows, opts: &VerifyOptions) -> Result<()> {
    let cfg = uniform_identity_config(opts);
    let params = format!("n={},d={},samples={}", cfg.n, cfg.depth, cfg.samples);
    rows.records(&params, &run_records(&cfg, opts)?);
    Ok(())
}
