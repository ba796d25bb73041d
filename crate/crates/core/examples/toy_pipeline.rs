//! Generate, split, train and evaluate on the toy configuration.
//!
//! `cargo run --release -p qcdiff-core --example toy_pipeline [config.toml]`

use std::time::Instant;

use qcdiff_core::data::{
    balanced_test_split, evaluate, generate_records, resample_parameters, training_examples, Config, EvalTarget,
};
use qcdiff_core::denoiser::{read_checkpoint, train, write_checkpoint, LossWeights, ToyDenoiser};
use qcdiff_core::diffusion::Geometry;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => Config::load(p.as_ref())?,
        None => Config::default(),
    };
    let clock = Instant::now();
    let space = cfg.embedding_space()?;
    let schedules = cfg.schedules(&space)?;
    println!("schedules ready in {:.1?}", clock.elapsed());

    let gs = cfg.gate_set()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut spec = cfg.gen_spec()?;
    spec.resample_k = 0;
    let base = generate_records(&spec, &gs, &mut rng)?;
    let (train_base, test) = balanced_test_split(&base, 7, &mut rng)?;
    let train_set = resample_parameters(&train_base, cfg.circuits.resample_k, spec.positions, &gs, &mut rng)?;
    println!("{} ansätze, {} train records, {} test", base.len(), train_set.len(), test.len());

    let examples = training_examples(&space, &train_set)?;
    let geo = Geometry {
        num_qubits: cfg.circuits.qubits[0],
        positions: spec.positions,
        d_h: space.d_h(),
        d_w: space.d_w(),
    };
    let mut model = ToyDenoiser::new(geo, cfg.model, &mut rng);
    let weights = LossWeights {
        schedules: schedules.clone(),
        target: cfg.hamming_target()?,
        d_w: space.d_w(),
    };
    let ckpt = std::env::var("TOY_CKPT").ok();
    match ckpt.as_deref().and_then(|p| std::fs::read(p).ok()) {
        Some(bytes) => model = read_checkpoint(&bytes)?,
        None => {
            let clock = Instant::now();
            let report = train(&mut model, &examples, &weights, &cfg.train_config())?;
            let tail: Vec<f64> = report.trace.iter().rev().take(100).map(|r| r.loss).collect();
            println!(
                "trained {} params, {} steps in {:.1?}, final loss {:.4}",
                model.num_params(),
                report.trace.len(),
                clock.elapsed(),
                tail.iter().sum::<f64>() / tail.len() as f64
            );
            if let Some(p) = &ckpt {
                std::fs::write(p, write_checkpoint(&model))?;
            }
        }
    }

    let targets: Vec<EvalTarget> = test
        .iter()
        .take(20)
        .map(|r| EvalTarget {
            unitary: r.unitary.clone(),
            kinds: r.kinds(),
        })
        .collect();
    let clock = Instant::now();
    let evals = evaluate(
        &model,
        &space,
        &schedules,
        &targets,
        cfg.sampler.samples_per_target,
        &cfg.sample_config()?,
        cfg.seed,
    )?;
    for (i, e) in evals.iter().enumerate() {
        println!("target {i:2}: min {:.4} invalid {}", e.min, e.invalid);
    }
    let solved = evals.iter().filter(|e| e.min < 0.1).count();
    println!("solved {solved}/{} in {:.1?}", evals.len(), clock.elapsed());
    Ok(())
}
