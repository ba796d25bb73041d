use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qcdiff_core::circuit::{read_circuits_jsonl, write_circuits_jsonl, Circuit, GateKind};
use qcdiff_core::data::{
    balanced_test_split, corruption_infidelities, evaluate, generate_records, make_target, random_circuit,
    resample_parameters, training_examples, Config, Dataset, EvalReport, EvalTarget, GenSpec, Histogram, TargetKind,
};
use qcdiff_core::denoiser::{read_checkpoint, train, write_checkpoint, LossWeights, ToyDenoiser};
use qcdiff_core::diffusion::{decode_sample, sample, Condition, Denoiser, Geometry, SampleMode};
use qcdiff_core::gpe::{parameter_histogram, report_structures, run_gpe};
use qcdiff_core::schedule::learn_discrete_schedule;
use qcdiff_core::sim::{infidelity, circuit_unitary, Corruption, HamiltonianModel, HamiltonianSpec, Unitary};

#[derive(Parser)]
#[command(name = "qcdiff", version, about = "Diffusion-based quantum circuit synthesis toolkit")]
struct Cli {
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration; toy defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deduplicated random circuit dataset.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        resample_k: Option<usize>,
    },
    /// Hold out a test set balanced over gate counts.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        quota: Option<usize>,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Resample angles of the train part after splitting.
        #[arg(long, default_value_t = 0)]
        resample_k: usize,
    },
    /// Fit the token schedule to a Hamming-distance target.
    LearnSchedule {
        #[arg(long)]
        out: PathBuf,
        /// linear, sin or sin2.
        #[arg(long)]
        target: Option<String>,
    },
    /// Train the toy denoiser on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Sample circuits for one target unitary.
    Sample {
        #[arg(long)]
        model: PathBuf,
        /// Unitary file (as written by `qft` or `hamiltonian`).
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        /// Allowed gate kinds; the config's kinds by default.
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<String>>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Best-of-k infidelity over the records of a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Gate-pair encoding over a circuit corpus.
    Gpe {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 8)]
        min_freq: usize,
        #[arg(long, default_value_t = 250)]
        max_iter: usize,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Infidelity histogram of single corruptions of random circuits.
    Corrupt {
        /// drop, append, replace or param_noise.
        #[arg(long)]
        mode: String,
        #[arg(long, default_value_t = 0.1)]
        amplitude: f64,
        /// Circuits to corrupt; random ones when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        qubits: usize,
        #[arg(long, default_value_t = 2)]
        min_gates: usize,
        #[arg(long, default_value_t = 16)]
        max_gates: usize,
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<String>>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolution unitary of a spin-chain Hamiltonian.
    Hamiltonian {
        /// ising or xxz.
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: f64,
        /// Transverse field (Ising only; xxz uses 0.2).
        #[arg(long, default_value_t = 1.0)]
        field: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// QFT unitary, checked against the DFT matrix.
    Qft {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the reference circuit as JSON lines.
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e
                .downcast_ref::<qcdiff_core::Error>()
                .is_some_and(|e| e.is_numerical());
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn emit(value: serde_json::Value, human: &str) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(&value)?);
    eprintln!("{human}");
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Dataset::from_bytes(&bytes)?)
}

fn read_model(path: &Path) -> anyhow::Result<ToyDenoiser> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(read_checkpoint(&bytes)?)
}

fn read_unitary(path: &Path) -> anyhow::Result<Unitary> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Unitary::from_bytes(&bytes)?)
}

fn parse_kinds(names: &[String]) -> anyhow::Result<Vec<GateKind>> {
    names
        .iter()
        .map(|n| GateKind::from_name(n).with_context(|| format!("unknown gate kind {n}")))
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::GenData { out, count, resample_k } => {
            let mut spec = cfg.gen_spec()?;
            spec.count = count.unwrap_or(spec.count);
            spec.resample_k = resample_k.unwrap_or(spec.resample_k);
            let gate_set = cfg.gate_set()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let records = generate_records(&spec, &gate_set, &mut rng)?;
            let ds = Dataset {
                seed: cfg.seed,
                config: cfg.to_toml(),
                gate_set,
                positions: spec.positions,
                records,
            };
            ds.validate()?;
            std::fs::write(out, ds.to_bytes())?;
            let ansatze: std::collections::HashSet<_> = ds.records.iter().map(|r| r.ansatz_key()).collect();
            emit(
                json!({"records": ds.records.len(), "ansatze": ansatze.len(), "seed": cfg.seed, "out": out}),
                &format!("wrote {} records ({} ansätze) to {}", ds.records.len(), ansatze.len(), out.display()),
            )
        }
        Command::Split {
            data,
            quota,
            train: train_out,
            test: test_out,
            resample_k,
        } => {
            let ds = read_dataset(data)?;
            let quota = quota.unwrap_or(cfg.circuits.test_quota);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let (train_part, test_part) = balanced_test_split(&ds.records, quota, &mut rng)?;
            let train_part = resample_parameters(&train_part, *resample_k, ds.positions, &ds.gate_set, &mut rng)?;
            std::fs::write(train_out, ds.with_records(train_part.clone()).to_bytes())?;
            std::fs::write(test_out, ds.with_records(test_part.clone()).to_bytes())?;
            emit(
                json!({"train": train_part.len(), "test": test_part.len(), "quota": quota}),
                &format!("split into {} train / {} test records", train_part.len(), test_part.len()),
            )
        }
        Command::LearnSchedule { out, target } => {
            let mut cfg = cfg.clone();
            if let Some(t) = target {
                cfg.schedule.target = t.clone();
            }
            let space = cfg.embedding_space()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let learned =
                learn_discrete_schedule(space.token_basis(), cfg.hamming_target()?, &cfg.learn_config(), &mut rng)?;
            learned.schedule.write_csv(create(out)?)?;
            emit(
                json!({
                    "steps": learned.schedule.steps(),
                    "residual": learned.residual,
                    "mse": learned.mse,
                    "grid": learned.grid,
                    "p_flip": learned.p_flip,
                }),
                &format!("learned schedule, max grid residual {:.4}", learned.residual),
            )
        }
        Command::Train {
            data,
            out,
            trace,
            steps,
        } => {
            let ds = read_dataset(data)?;
            let space = cfg.embedding_space()?;
            if ds.gate_set != *space.gate_set() {
                bail!("dataset gate set differs from the config's");
            }
            let schedules = cfg.schedules(&space)?;
            let examples = training_examples(&space, &ds.records)?;
            let n = ds.records.first().map(|r| r.num_qubits).context("dataset is empty")?;
            if ds.records.iter().any(|r| r.num_qubits != n) {
                bail!("the toy denoiser needs a single qubit count");
            }
            let geo = Geometry {
                num_qubits: n,
                positions: ds.positions,
                d_h: space.d_h(),
                d_w: space.d_w(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut model = ToyDenoiser::new(geo, cfg.model, &mut rng);
            let weights = LossWeights {
                schedules,
                target: cfg.hamming_target()?,
                d_w: space.d_w(),
            };
            let mut tc = cfg.train_config();
            tc.steps = steps.unwrap_or(tc.steps);
            let report = match train(&mut model, &examples, &weights, &tc) {
                Ok(r) => r,
                Err(qcdiff_core::Error::Diverged { step, last_good }) => {
                    std::fs::write(out, write_checkpoint(&last_good))?;
                    return Err(qcdiff_core::Error::Diverged { step, last_good }.into());
                }
                Err(e) => return Err(e.into()),
            };
            std::fs::write(out, write_checkpoint(&model))?;
            if let Some(p) = trace {
                report.write_trace_csv(create(p)?)?;
            }
            let last = report.trace.last().map_or(f64::NAN, |r| r.loss);
            emit(
                json!({"steps": report.trace.len(), "params": model.num_params(), "final_loss": last}),
                &format!("trained {} steps, final loss {last:.4}", report.trace.len()),
            )
        }
        Command::Sample {
            model,
            target,
            samples,
            kinds,
            mode,
            out,
        } => {
            let model = read_model(model)?;
            let target = read_unitary(target)?;
            let space = cfg.embedding_space()?;
            let schedules = cfg.schedules(&space)?;
            let mut sc = cfg.sample_config()?;
            if let Some(m) = mode {
                sc.mode = SampleMode::from_name(m).with_context(|| format!("unknown mode {m}"))?;
            }
            if sc.mode == SampleMode::SingleWGivenH {
                bail!("single_w_given_h needs token latents and is library-only");
            }
            if target.num_qubits() != model.geometry().num_qubits {
                bail!("target width differs from the model's");
            }
            let kinds = match kinds {
                Some(k) => parse_kinds(k)?,
                None => cfg.kinds()?,
            };
            let k = samples.unwrap_or(cfg.sampler.samples_per_target);
            let conds = vec![Condition::new(&target, &kinds); k];
            let outs = sample(&model, &schedules, &sc, &conds, None, cfg.seed)?;
            let mut circuits = Vec::new();
            let mut scores = Vec::new();
            for o in &outs {
                if let Ok(c) = decode_sample(&space, &o.latent) {
                    scores.push(infidelity(&circuit_unitary(&c), &target)?);
                    circuits.push(c);
                }
            }
            write_circuits_jsonl(create(out)?, &circuits)?;
            let best = scores.iter().copied().fold(1.0, f64::min);
            emit(
                json!({"samples": k, "valid": circuits.len(), "infidelities": scores, "best": best}),
                &format!("{} of {k} samples decoded, best infidelity {best:.4}", circuits.len()),
            )
        }
        Command::Eval {
            model,
            data,
            limit,
            samples,
            out,
            csv,
        } => {
            let model = read_model(model)?;
            let ds = read_dataset(data)?;
            let space = cfg.embedding_space()?;
            let schedules = cfg.schedules(&space)?;
            let sc = cfg.sample_config()?;
            let targets: Vec<EvalTarget> = ds
                .records
                .iter()
                .take(limit.unwrap_or(usize::MAX))
                .map(|r| EvalTarget {
                    unitary: r.unitary.clone(),
                    kinds: r.kinds(),
                })
                .collect();
            let k = samples.unwrap_or(cfg.sampler.samples_per_target);
            let evals = evaluate(&model, &space, &schedules, &targets, k, &sc, cfg.seed)?;
            let echo = json!({"config": cfg, "samples_per_target": k, "data": data});
            let report = EvalReport::from_targets(evals, echo);
            serde_json::to_writer_pretty(create(out)?, &report)?;
            if let Some(p) = csv {
                report.write_csv(create(p)?)?;
            }
            let mins: Vec<f64> = report.targets.iter().map(|t| t.min).collect();
            emit(
                json!({"targets": mins.len(), "min_infidelity": mins, "solved_below_0.1": report.solved_fraction(0.1)}),
                &report.summary(),
            )
        }
        Command::Gpe {
            corpus,
            min_freq,
            max_iter,
            top,
            out_dir,
        } => {
            let f = File::open(corpus).with_context(|| format!("reading {}", corpus.display()))?;
            let circuits = read_circuits_jsonl(BufReader::new(f))?;
            if circuits.is_empty() {
                bail!("corpus is empty");
            }
            let res = run_gpe(&circuits, *min_freq, *max_iter)?;
            let structures = report_structures(&res.vocab, *top, None);
            let histogram = report_structures(&res.vocab, usize::MAX, Some(0));
            let params: serde_json::Map<String, serde_json::Value> = GateKind::ALL
                .iter()
                .filter(|k| k.is_parameterized())
                .map(|k| (k.name().to_string(), json!(parameter_histogram(&circuits, *k, 32))))
                .collect();
            std::fs::create_dir_all(out_dir)?;
            let doc = json!({
                "histogram": histogram.depths[0].entries,
                "structures": structures,
                "parameter_histograms": params,
                "token_counts": res.token_counts,
            });
            serde_json::to_writer_pretty(create(&out_dir.join("report.json"))?, &doc)?;
            let mut text = create(&out_dir.join("report.txt"))?;
            write!(text, "{}", histogram.to_text())?;
            write!(text, "{}", structures.to_text())?;
            text.flush()?;
            emit(
                json!({"merges": res.vocab.merges.len(), "max_depth": res.vocab.max_depth(), "out_dir": out_dir}),
                &format!("{} merges, deepest structure at depth {}", res.vocab.merges.len(), res.vocab.max_depth()),
            )
        }
        Command::Corrupt {
            mode,
            amplitude,
            corpus,
            count,
            qubits,
            min_gates,
            max_gates,
            kinds,
            bins,
            out,
        } => {
            let mode = match mode.as_str() {
                "drop" => Corruption::Drop,
                "append" => Corruption::Append,
                "replace" => Corruption::Replace,
                "param_noise" => Corruption::ParamNoise(*amplitude),
                m => bail!("unknown corruption mode {m}"),
            };
            let kinds = match kinds {
                Some(k) => parse_kinds(k)?,
                None => GateKind::ALL.to_vec(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let circuits: Vec<Circuit> = match corpus {
                Some(p) => read_circuits_jsonl(BufReader::new(File::open(p)?))?,
                None => {
                    let spec = GenSpec {
                        qubits: [*qubits, *qubits],
                        gates: [*min_gates, *max_gates],
                        kinds: kinds.clone(),
                        positions: *max_gates,
                        count: *count,
                        resample_k: 0,
                    };
                    (0..*count)
                        .map(|_| random_circuit(&spec, &mut rng).map(|(c, _)| c))
                        .collect::<Result<_, _>>()?
                }
            };
            let values = corruption_infidelities(&circuits, mode, &kinds, &mut rng)?;
            let hist = Histogram::new(&values, *bins, 0.0, 1.0);
            hist.write_csv(create(out)?)?;
            let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
            emit(
                json!({"circuits": values.len(), "mean": mean, "histogram": hist}),
                &format!("{} corrupted circuits, mean infidelity {mean:.4}", values.len()),
            )
        }
        Command::Hamiltonian {
            model,
            n,
            j,
            field,
            delta,
            tau,
            out,
        } => {
            let spec = match model.as_str() {
                "ising" => HamiltonianSpec::ising(*n, *j, *field, *tau),
                "xxz" => HamiltonianSpec::xxz(*n, *j, *delta, *tau),
                m => bail!("unknown model {m}"),
            };
            let u = make_target(&TargetKind::Hamiltonian(spec))?;
            std::fs::write(out, u.to_bytes())?;
            let name = match spec.model {
                HamiltonianModel::Ising => "ising",
                HamiltonianModel::Xxz => "xxz",
            };
            emit(
                json!({"model": name, "n": n, "tau": tau, "dim": u.dim(), "out": out}),
                &format!("wrote {name} evolution unitary ({}x{}) to {}", u.dim(), u.dim(), out.display()),
            )
        }
        Command::Qft { n, out, circuit } => {
            let u = make_target(&TargetKind::Qft { n: *n })?;
            std::fs::write(out, u.to_bytes())?;
            if let Some(p) = circuit {
                write_circuits_jsonl(create(p)?, &[qcdiff_core::data::qft_circuit(*n)?])?;
            }
            emit(
                json!({"n": n, "dim": u.dim(), "out": out}),
                &format!("wrote {n}-qubit QFT unitary to {}", out.display()),
            )
        }
    }
}
