use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use rcs_core::channel::{
    iterated_zero_overlap, pair_coefficients_from_ptm, r_value, ChannelSpec, MadeChannel, Order, PauliTransferMap,
    StandardNoise,
};
use rcs_core::circuit::layout::{Circuit, CircuitRecord, CircuitShape, NoisePlacement, PlacementMode, PreparedNoise};
use rcs_core::circuit::state::{self, format_bitstring};
use rcs_core::harness::output::{records_to_string, CSV_HEADER};
use rcs_core::harness::suites::{run_suite, write_checks, Suite, VerifyOptions};
use rcs_core::harness::{all_pass, Execution, Experiment, ExperimentConfig, Sidecar, Verdict, DEFAULT_MARGIN};
use rcs_core::linalg::pauli;
use rcs_core::moments;
use rcs_core::statmech;

use crate::overlay::{default_workers, get, merge_flat, read_object, require, set};
use crate::{Io, Outcome};

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn parse_matrix(s: &str) -> Result<[[f64; 4]; 4], String> {
    serde_json::from_str(s).map_err(|e| format!("expected a 4x4 JSON array: {e}"))
}

fn parse_rotation(s: &str) -> Result<(f64, f64), String> {
    let (theta, phi) = s.split_once(':').unwrap_or((s, "0"));
    let theta = theta.trim().parse().map_err(|_| format!("bad angle `{theta}`"))?;
    let phi = phi.trim().parse().map_err(|_| format!("bad angle `{phi}`"))?;
    Ok((theta, phi))
}

/// Channel flags shared by several subcommands.
#[derive(Args, Clone, Debug, Default, Serialize)]
pub struct ChannelFlags {
    /// amp_damp, depolarizing, amp_then_dep, dep_then_amp or general_ptm.
    #[arg(long)]
    pub kind: Option<String>,
    /// Amplitude damping strength.
    #[arg(long)]
    pub q: Option<f64>,
    /// Depolarizing strength.
    #[arg(long)]
    pub p: Option<f64>,
    /// Transfer matrix for general_ptm, as JSON `[[..4..], ..]`.
    #[arg(long, value_parser = parse_matrix)]
    pub t: Option<[[f64; 4]; 4]>,
}

impl ChannelFlags {
    /// Overlay onto a channel object `{"kind", "q", "p", "t"}`.
    fn overlay(&self, channel: &mut Map<String, Value>) {
        set(channel, "kind", &self.kind);
        set(channel, "q", &self.q);
        set(channel, "p", &self.p);
        set(channel, "t", &self.t);
    }
}

fn channel_from(map: Map<String, Value>) -> Result<ChannelSpec> {
    let spec: ChannelSpec = serde_json::from_value(Value::Object(map)).context("invalid channel")?;
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------- channel

#[derive(Args, Debug)]
pub struct ChannelArgs {
    #[command(flatten)]
    channel: ChannelFlags,
    /// Sections to print: ptm, adjoint-z, kappa-tau-lambda, werner, kraus, choi (default: all).
    #[arg(long, value_delimiter = ',')]
    show: Option<Vec<String>>,
    #[command(flatten)]
    io: Io,
}

const CHANNEL_SECTIONS: [&str; 6] = ["ptm", "adjoint-z", "kappa-tau-lambda", "werner", "kraus", "choi"];

pub fn channel(args: ChannelArgs) -> Result<Outcome> {
    let mut config = read_object(args.io.config.as_deref())?;
    let show: Vec<String> = match args.show.clone().or(get(&config, "show")?) {
        Some(s) => s,
        None => CHANNEL_SECTIONS.iter().map(|s| s.to_string()).collect(),
    };
    for s in &show {
        if !CHANNEL_SECTIONS.contains(&s.as_str()) {
            bail!("unknown section `{s}`; expected one of {}", CHANNEL_SECTIONS.join(", "));
        }
    }
    config.remove("show");
    args.channel.overlay(&mut config);
    let spec = channel_from(config)?;
    let standard = spec.as_standard()?;

    let (ptm, kraus, min_choi, is_cptp) = match spec.make()? {
        MadeChannel::Kraus(k) => (k.ptm()?, Some(k.clone()), k.min_choi_eigenvalue(), true),
        MadeChannel::Map(m) => (m.ptm, None, m.min_choi_eigenvalue, m.is_cptp),
    };

    let mut report = Map::new();
    report.insert("channel".into(), serde_json::to_value(&spec)?);
    report.insert("is_cptp".into(), json!(is_cptp));
    report.insert("min_choi_eigenvalue".into(), json!(min_choi));
    report.insert("t03".into(), json!(ptm.t(0, 3)));
    if let Some(noise) = standard {
        report.insert("r".into(), json!(noise.r()));
    }
    for section in &show {
        match section.as_str() {
            "ptm" => {
                report.insert("ptm".into(), serde_json::to_value(ptm.matrix())?);
            }
            "adjoint-z" => {
                // Pauli coefficients of N^dagger(Z): Tr[σ_k N^dagger(Z)]/2 = t_{k3}.
                let coeffs: Vec<f64> = match &kraus {
                    Some(k) => {
                        let adj = k.apply_adjoint(&pauli(3))?;
                        (0..4).map(|i| (pauli(i) * &adj).trace().re / 2.0).collect()
                    }
                    None => (0..4).map(|i| ptm.t(i, 3)).collect(),
                };
                report.insert(
                    "adjoint_z".into(),
                    json!({"i": coeffs[0], "x": coeffs[1], "y": coeffs[2], "z": coeffs[3]}),
                );
            }
            "kappa-tau-lambda" => {
                let (_, fit) = iterated_zero_overlap(&ptm, standard.as_ref(), 50);
                report.insert("iterated".into(), serde_json::to_value(fit)?);
            }
            "werner" => {
                let pc = pair_coefficients_from_ptm(&ptm);
                report.insert("werner".into(), json!({"a": pc.a, "b": pc.b, "c": pc.c()}));
            }
            "kraus" => {
                let ops = match &kraus {
                    Some(k) => k.clone(),
                    None if is_cptp => ptm.to_kraus()?,
                    None => {
                        report.insert("kraus".into(), Value::Null);
                        continue;
                    }
                };
                let list: Vec<Vec<[f64; 2]>> = ops
                    .ops()
                    .iter()
                    .map(|k| {
                        (0..2)
                            .flat_map(|i| (0..2).map(move |j| (i, j)))
                            .map(|(i, j)| [k[(i, j)].re, k[(i, j)].im])
                            .collect()
                    })
                    .collect();
                report.insert("kraus".into(), serde_json::to_value(list)?);
            }
            "choi" => {
                let choi = ptm.choi();
                let rows: Vec<Vec<[f64; 2]>> = (0..4)
                    .map(|i| (0..4).map(|j| [choi[(i, j)].re, choi[(i, j)].im]).collect())
                    .collect();
                report.insert("choi".into(), serde_json::to_value(rows)?);
            }
            _ => unreachable!("validated above"),
        }
    }
    if !is_cptp {
        eprintln!("warning: map is not completely positive (min Choi eigenvalue {min_choi:.3e})");
    }
    emit_json(args.io.out.as_deref(), &Value::Object(report))?;
    Ok(Outcome::Ok)
}

// ------------------------------------------------------- experiment flags

#[derive(Args, Clone, Debug, Default)]
pub struct ExperimentFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[command(flatten)]
    channel: ChannelFlags,
    /// after_every_gate_with_final_layer, no_final_noise_layer or fixed_final_rotations.
    #[arg(long)]
    placement: Option<String>,
    /// Final rotations as `theta:phi` per qubit, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_rotation)]
    rotations: Option<Vec<(f64, f64)>>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ExperimentFlags {
    fn overlay(&self, map: &mut Map<String, Value>) {
        set(map, "n", &self.n);
        set(map, "depth", &self.depth);
        set(map, "placement", &self.placement);
        set(map, "final_rotations", &self.rotations);
        set(map, "seed", &self.seed);
        let mut channel = match map.remove("channel") {
            Some(Value::Object(c)) => c,
            _ => Map::new(),
        };
        self.channel.overlay(&mut channel);
        if !channel.is_empty() {
            map.insert("channel".into(), Value::Object(channel));
        }
    }
}

// --------------------------------------------------------------- simulate

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    experiment: ExperimentFlags,
    /// Replay a circuit recorded with `--show circuit` instead of sampling.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Sections to print: probabilities, circuit (default: probabilities).
    #[arg(long, value_delimiter = ',')]
    show: Option<Vec<String>>,
    #[command(flatten)]
    io: Io,
}

pub fn simulate(args: SimulateArgs) -> Result<Outcome> {
    let mut config = read_object(args.io.config.as_deref())?;
    let show: Vec<String> = args
        .show
        .clone()
        .or(get(&config, "show")?)
        .unwrap_or_else(|| vec!["probabilities".into()]);
    for s in &show {
        if s != "probabilities" && s != "circuit" {
            bail!("unknown section `{s}`; expected probabilities or circuit");
        }
    }

    let circuit = if let Some(path) = &args.circuit {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let record: CircuitRecord = serde_json::from_str(&text).context("invalid circuit record")?;
        Circuit::from_record(&record)?
    } else {
        args.experiment.overlay(&mut config);
        let n: usize = require(&config, "n")?;
        let depth: usize = require(&config, "depth")?;
        let seed: u64 = require(&config, "seed")?;
        let channel = match config.get("channel") {
            Some(Value::Object(c)) => channel_from(c.clone())?,
            _ => bail!("missing channel (flag --kind or config key `channel`)"),
        };
        let mode: PlacementMode = get(&config, "placement")?.unwrap_or_default();
        let placement = NoisePlacement {
            mode,
            channel,
            final_rotations: get(&config, "final_rotations")?,
        };
        let shape = CircuitShape::for_qubits(n, depth)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Circuit::sample(&shape, placement, &mut rng)?
    };

    let rho = state::simulate(&circuit)?;
    if !rho.check_invariants() {
        eprintln!("warning: simulated state failed the trace/Hermiticity check");
    }
    let dist = rho.output_distribution();
    let mut report = Map::new();
    report.insert("n".into(), json!(circuit.n));
    report.insert("depth".into(), json!(circuit.depth));
    report.insert("trace".into(), json!(rho.trace().re));
    report.insert("purity".into(), json!(rho.purity()));
    report.insert(
        "collision_z".into(),
        json!((1u64 << circuit.n) as f64 * dist.collision() - 1.0),
    );
    if show.iter().any(|s| s == "probabilities") {
        let probs: Map<String, Value> = (0..1usize << circuit.n)
            .map(|x| (format_bitstring(x, circuit.n), json!(dist.prob(x))))
            .collect();
        report.insert("probabilities".into(), Value::Object(probs));
    }
    if show.iter().any(|s| s == "circuit") {
        report.insert("circuit".into(), serde_json::to_value(circuit.to_record())?);
    }
    emit_json(args.io.out.as_deref(), &Value::Object(report))?;
    Ok(Outcome::Ok)
}

// --------------------------------------------------------------------- mc

#[derive(Args, Debug)]
pub struct McArgs {
    #[command(flatten)]
    experiment: ExperimentFlags,
    #[arg(long)]
    samples: Option<usize>,
    /// px, marginal, conditional, collision, px2, tail, tail_shifted, logprob, xeb, uniform_identity.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<String>>,
    /// all, hamming_ge_half, or a comma-separated list of bitstrings.
    #[arg(long)]
    bitstrings: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Worker threads; defaults to RCS_WORKERS, then 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Agreement margin in standard errors.
    #[arg(long)]
    margin: Option<f64>,
    /// Where to write the JSON sidecar (default: next to --out).
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[command(flatten)]
    io: Io,
}

/// Build the experiment config from the config file and flags.
pub fn experiment_config(args: &McArgs) -> Result<ExperimentConfig> {
    let mut map = read_object(args.io.config.as_deref())?;
    args.experiment.overlay(&mut map);
    set(&mut map, "samples", &args.samples);
    set(&mut map, "targets", &args.targets);
    if let Some(b) = &args.bitstrings {
        map.insert(
            "bitstrings".into(),
            serde_json::to_value(rcs_core::harness::BitstringSelector::parse(b)?)?,
        );
    }
    set(&mut map, "alpha", &args.alpha);
    set(&mut map, "workers", &args.workers);
    if !map.contains_key("workers") {
        map.insert("workers".into(), json!(default_workers()?));
    }
    let config: ExperimentConfig = serde_json::from_value(Value::Object(map)).context("invalid experiment config")?;
    config.validate()?;
    Ok(config)
}

pub fn mc(args: McArgs) -> Result<Outcome> {
    let config = experiment_config(&args)?;
    let margin = args.margin.unwrap_or(DEFAULT_MARGIN);
    let experiment = Experiment::new(&config)?;
    let records = experiment.run(Execution::with_workers(config.workers), margin)?;
    emit(args.io.out.as_deref(), records_to_string(&config, &records)?.as_bytes())?;

    let sidecar = Sidecar::new(&config, margin, &records);
    let sidecar_path = args
        .sidecar
        .clone()
        .or_else(|| args.io.out.as_ref().map(|p| p.with_extension("json")));
    if let Some(path) = sidecar_path {
        std::fs::write(&path, sidecar.to_json()? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    let fails = sidecar.failures;
    eprintln!(
        "run {}: {} rows, {} failed, {} samples, seed {}",
        sidecar.run_id,
        records.len(),
        fails,
        config.samples,
        config.seed
    );
    Ok(if fails == 0 {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    })
}

// ------------------------------------------------------------- closedform

#[derive(Args, Debug, Default, Serialize)]
pub struct ClosedformArgs {
    /// first_moment, collision_bound, collision_bound_general, collision_bound_rotations,
    /// second_moment_bound, r, regime, regime_general, lightcone, chebyshev_tail,
    /// paley_zygmund, last_layer_first_moment.
    #[arg(long)]
    formula: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Hamming weight of x.
    #[arg(long)]
    w: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    /// amp_then_dep or dep_then_amp; with --p/--q gives r.
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    t03: Option<f64>,
    /// Transfer matrix for regime_general, as JSON.
    #[arg(long, value_parser = parse_matrix)]
    t: Option<[[f64; 4]; 4]>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    thetas: Option<Vec<f64>>,
    #[arg(long)]
    bit: Option<u8>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long)]
    second: Option<f64>,
    /// Print the full JSON record instead of the value.
    #[arg(long)]
    json: Option<bool>,
    #[command(flatten)]
    #[serde(skip)]
    io: Io,
}

fn order_of(map: &Map<String, Value>) -> Result<Order> {
    let name: String = get(map, "order")?.unwrap_or_else(|| "amp_then_dep".into());
    serde_json::from_value(Value::String(name.clone())).with_context(|| format!("unknown order `{name}`"))
}

/// r from --r, or from --order/--p/--q.
fn r_of(map: &Map<String, Value>) -> Result<f64> {
    if let Some(r) = get::<f64>(map, "r")? {
        return Ok(r);
    }
    let p: f64 = get(map, "p")?.unwrap_or(0.0);
    let q: f64 = get(map, "q")?.unwrap_or(0.0);
    Ok(r_value(order_of(map)?, p, q)?)
}

pub fn closedform(args: ClosedformArgs) -> Result<Outcome> {
    let map = merge_flat(read_object(args.io.config.as_deref())?, &args);
    let formula: String = require(&map, "formula")?;
    let value: Value = match formula.as_str() {
        "first_moment" => serde_json::to_value(moments::first_moment_r(
            require(&map, "n")?,
            require(&map, "w")?,
            r_of(&map)?,
        )?)?,
        "collision_bound" => {
            serde_json::to_value(moments::collision_lower_bound_record(require(&map, "n")?, r_of(&map)?))?
        }
        "collision_bound_general" => {
            json!({"formula": formula, "value": moments::collision_lower_bound_general(require(&map, "n")?, require(&map, "t03")?)})
        }
        "collision_bound_rotations" => {
            let thetas: Vec<f64> = require(&map, "thetas")?;
            json!({"formula": formula, "value": moments::collision_lower_bound_rotations(require(&map, "n")?, require(&map, "q")?, &thetas)})
        }
        "second_moment_bound" => {
            let params = moments::second_moment_params(order_of(&map)?, require(&map, "p")?, require(&map, "q")?)?;
            serde_json::to_value(moments::second_moment_bound_record(
                require(&map, "n")?,
                require(&map, "d")?,
                &params,
            ))?
        }
        "r" => json!({"formula": formula, "value": r_of(&map)?}),
        "regime" => {
            let holds = moments::regime_check(order_of(&map)?, require(&map, "p")?, require(&map, "q")?)?;
            json!({"formula": formula, "value": holds})
        }
        "regime_general" => {
            let ptm = PauliTransferMap::new(require(&map, "t")?)?;
            let params = moments::general_noise_params(&ptm);
            json!({"formula": formula, "value": moments::regime_check_general(&params), "params": params})
        }
        "lightcone" => {
            let order = order_of(&map)?;
            let noise = StandardNoise::new(order, get(&map, "p")?.unwrap_or(0.0), get(&map, "q")?.unwrap_or(0.0))?;
            let d: usize = require(&map, "d")?;
            let (_, fit) = iterated_zero_overlap(&noise.ptm(), Some(&noise), d);
            let terms = moments::lightcone_terms(
                require(&map, "n")?,
                require(&map, "w")?,
                noise.r(),
                d,
                fit.kappa,
                fit.tau,
                fit.lambda,
            )?;
            json!({"formula": formula, "value": terms.neglog_lower, "terms": terms, "fit": fit})
        }
        "chebyshev_tail" => json!({
            "formula": formula,
            "value": moments::chebyshev_tail_lower(require(&map, "n")?, require(&map, "second")?, get(&map, "alpha")?.unwrap_or(1.0)),
        }),
        "paley_zygmund" => json!({
            "formula": formula,
            "value": moments::paley_zygmund_bound(require(&map, "mean")?, require(&map, "second")?, require(&map, "alpha")?)?,
        }),
        "last_layer_first_moment" => json!({
            "formula": formula,
            "value": moments::last_layer_first_moment(require(&map, "q")?, require(&map, "theta")?, get(&map, "bit")?.unwrap_or(0))?,
        }),
        other => bail!("unknown formula `{other}`"),
    };
    if get::<bool>(&map, "json")?.unwrap_or(false) {
        emit_json(args.io.out.as_deref(), &value)?;
    } else {
        let v = &value["value"];
        let text = match v.as_f64() {
            Some(f) => format!("{f}\n"),
            None => format!("{v}\n"),
        };
        emit(args.io.out.as_deref(), text.as_bytes())?;
    }
    Ok(Outcome::Ok)
}

// --------------------------------------------------------------- statmech

#[derive(Args, Debug)]
pub struct StatmechArgs {
    /// layer_state, sequence, modified, readout, dp, monotonicity.
    #[arg(long)]
    op: Option<String>,
    /// Pair coefficients; derived from the channel when omitted.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Number of noisy layers for layer_state/sequence.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    placement: Option<String>,
    #[command(flatten)]
    channel: ChannelFlags,
    #[command(flatten)]
    io: Io,
}

pub fn statmech(args: StatmechArgs) -> Result<Outcome> {
    let mut map = read_object(args.io.config.as_deref())?;
    set(&mut map, "op", &args.op);
    set(&mut map, "a", &args.a);
    set(&mut map, "b", &args.b);
    set(&mut map, "m", &args.m);
    set(&mut map, "n", &args.n);
    set(&mut map, "depth", &args.depth);
    set(&mut map, "placement", &args.placement);
    let mut channel_map = match map.get("channel") {
        Some(Value::Object(c)) => c.clone(),
        _ => Map::new(),
    };
    args.channel.overlay(&mut channel_map);
    let channel = if channel_map.is_empty() {
        None
    } else {
        Some(channel_from(channel_map)?)
    };
    let pair = || -> Result<(f64, f64)> {
        match (get::<f64>(&map, "a")?, get::<f64>(&map, "b")?, &channel) {
            (Some(a), Some(b), _) => Ok((a, b)),
            (_, _, Some(spec)) => {
                let pc = pair_coefficients_from_ptm(&spec.ptm()?);
                Ok((pc.a, pc.b))
            }
            _ => bail!("give --a and --b, or a channel"),
        }
    };
    let need_channel = || channel.clone().context("this op needs a channel (--kind ...)");
    let op: String = require(&map, "op")?;
    let value = match op.as_str() {
        "layer_state" => {
            let (a, b) = pair()?;
            json!({"a": a, "b": b, "m": require::<usize>(&map, "m")?, "x": statmech::single_qubit_layer_state(a, b, require(&map, "m")?)})
        }
        "sequence" => {
            let (a, b) = pair()?;
            let m: usize = require(&map, "m")?;
            let s = statmech::sequence_coeffs(a, b, m);
            json!({"a": a, "b": b, "m": m, "coefficients": s.value(), "used_iteration": s.used_fallback(), "iterated": s.iterated})
        }
        "modified" => {
            let (a, b) = pair()?;
            let (n, d): (usize, usize) = (require(&map, "n")?, require(&map, "depth")?);
            json!({"a": a, "b": b, "n": n, "depth": d, "value": statmech::modified_ensemble_second_moment(n, d, a, b)?})
        }
        "readout" => {
            let ch = need_channel()?.channel()?;
            json!({"table": statmech::readout_table(&ch)?, "bound": statmech::readout_bound(&ch)?})
        }
        "dp" => {
            let spec = need_channel()?;
            let (n, d): (usize, usize) = (require(&map, "n")?, require(&map, "depth")?);
            let mode: PlacementMode = get(&map, "placement")?.unwrap_or_default();
            let shape = CircuitShape::for_qubits(n, d)?;
            let noise = PreparedNoise::new(&NoisePlacement::new(mode, spec), n)?;
            let second = statmech::label_dp_second_moments(&shape, &noise)?;
            let probs: Map<String, Value> = second
                .iter()
                .enumerate()
                .map(|(x, v)| (format_bitstring(x, n), json!(v)))
                .collect();
            let total: f64 = second.iter().sum();
            json!({"n": n, "depth": d, "second_moments": probs, "collision_z": (1u64 << n) as f64 * total - 1.0})
        }
        "monotonicity" => {
            let spec = need_channel()?;
            let records = statmech::monotonicity_check(require(&map, "n")?, require(&map, "depth")?, &spec)?;
            let holds = records.iter().all(|r| r.holds);
            json!({"holds": holds, "records": records})
        }
        other => bail!("unknown op `{other}`"),
    };
    emit_json(args.io.out.as_deref(), &value)?;
    Ok(Outcome::Ok)
}

// ----------------------------------------------------------------- verify

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// Suite name or `all`.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    io: Io,
}

pub fn verify(args: VerifyArgs) -> Result<Outcome> {
    let map = merge_flat(read_object(args.io.config.as_deref())?, &args);
    let suites = Suite::parse_list(&get::<String>(&map, "suite")?.unwrap_or_else(|| "all".into()))?;
    let workers = match get::<usize>(&map, "workers")? {
        Some(w) => w,
        None => default_workers()?,
    };
    let opts = VerifyOptions {
        n: get(&map, "n")?,
        samples: get(&map, "samples")?,
        seed: get(&map, "seed")?.unwrap_or(1),
        workers,
        margin: get(&map, "margin")?.unwrap_or(DEFAULT_MARGIN),
    };
    if opts.workers == 0 {
        bail!("workers must be at least 1");
    }
    let mut rows = Vec::new();
    for suite in suites {
        let start = std::time::Instant::now();
        let suite_rows = run_suite(suite, &opts)?;
        let failed = suite_rows.iter().filter(|r| r.verdict != Verdict::Pass).count();
        eprintln!(
            "{:<20} {:>5} checks  {:>4} failed  {:.1}s",
            suite.as_str(),
            suite_rows.len(),
            failed,
            start.elapsed().as_secs_f64()
        );
        rows.extend(suite_rows);
    }
    let mut buf = Vec::new();
    write_checks(&mut buf, &rows)?;
    emit(args.io.out.as_deref(), &buf)?;
    Ok(if all_pass(&rows) {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    })
}

// ----------------------------------------------------------------- report

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    /// CSV files written by `mc`.
    #[arg(long = "in", num_args = 1..)]
    inputs: Option<Vec<PathBuf>>,
    #[command(flatten)]
    #[serde(skip)]
    io: Io,
}

#[derive(Default)]
struct Tally {
    rows: usize,
    pass: usize,
    fail: usize,
    other: usize,
}

pub fn report(args: ReportArgs) -> Result<Outcome> {
    let mut map = read_object(args.io.config.as_deref())?;
    set(&mut map, "in", &args.inputs);
    let inputs: Vec<PathBuf> = require(&map, "in")?;
    if inputs.is_empty() {
        bail!("no input files");
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    let verdict_col = CSV_HEADER.iter().position(|c| *c == "verdict").expect("verdict column");
    let estimator_col = CSV_HEADER
        .iter()
        .position(|c| *c == "estimator")
        .expect("estimator column");
    let mut tallies: Vec<(String, Tally)> = Vec::new();
    for path in &inputs {
        let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header = reader.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            bail!("{}: header does not match the mc output schema", path.display());
        }
        for record in reader.records() {
            let record = record.with_context(|| format!("reading {}", path.display()))?;
            writer.write_record(&record)?;
            let name = record[estimator_col].to_string();
            let idx = match tallies.iter().position(|(n, _)| *n == name) {
                Some(i) => i,
                None => {
                    tallies.push((name, Tally::default()));
                    tallies.len() - 1
                }
            };
            let t = &mut tallies[idx].1;
            t.rows += 1;
            match &record[verdict_col] {
                "pass" => t.pass += 1,
                "fail" => t.fail += 1,
                _ => t.other += 1,
            }
        }
    }
    let bytes = writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    emit(args.io.out.as_deref(), &bytes)?;
    let mut failed = 0;
    for (name, t) in &tallies {
        eprintln!(
            "{name:<24} {:>6} rows  {:>6} pass  {:>4} fail  {:>4} n/a",
            t.rows, t.pass, t.fail, t.other
        );
        failed += t.fail;
    }
    Ok(if failed == 0 {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    })
}
