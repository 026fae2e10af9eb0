//! `ffcl bench`: repeats training over distinct seeds and reports
//! mean/min/max per-layer and model accuracy.

use crate::config::RunConfig;
use crate::data::load_data;
use crate::error::{CliError, Result};
use ffcl_core::{evaluate, train, Scalar};
use std::path::PathBuf;

struct SeedResult {
    seed: u64,
    model: f64,
    per_layer: Vec<f64>,
}

fn run_seed<S: Scalar>(cfg: &RunConfig, seed: u64) -> Result<SeedResult> {
    let mut cfg = cfg.clone();
    cfg.train.seed = seed;
    let net_cfg = cfg.to_network_config()?;
    let data = load_data::<S>(&cfg)?;
    let net = train(&net_cfg, &data.train)?;
    let ev = evaluate(&net, &data.eval)?;
    Ok(SeedResult {
        seed,
        model: ev.model_accuracy,
        per_layer: ev.per_layer_accuracy,
    })
}

pub fn run<S: Scalar>(cfg: &RunConfig, repetitions: Option<usize>, parallel: bool) -> Result<PathBuf> {
    let reps = repetitions.unwrap_or(cfg.bench.repetitions);
    if reps == 0 {
        return Err(CliError::Config("repetitions must be >= 1".into()));
    }
    let seeds: Vec<u64> = match &cfg.bench.seeds {
        Some(s) if !s.is_empty() => s.iter().copied().take(reps).collect(),
        _ => (0..reps as u64).map(|i| cfg.train.seed + i).collect(),
    };
    if seeds.len() < reps {
        return Err(CliError::Config(format!(
            "bench.seeds lists {} seeds but repetitions is {reps}",
            seeds.len()
        )));
    }

    let parallel = parallel || cfg.bench.parallel;
    let results: Vec<SeedResult> = if parallel && seeds.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&s| scope.spawn(move || run_seed::<S>(cfg, s)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("bench thread panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        seeds
            .iter()
            .map(|&s| run_seed::<S>(cfg, s))
            .collect::<Result<Vec<_>>>()?
    };

    let layers = results[0].per_layer.len();
    let out_dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(format!(
        "bench-{}-{}.csv",
        cfg.data.dataset, cfg.model.variant
    ));

    let mut text = String::from("seed,model");
    for l in 0..layers {
        text.push_str(&format!(",layer{l}"));
    }
    text.push('\n');
    for r in &results {
        text.push_str(&format!("{},{}", r.seed, r.model));
        for a in &r.per_layer {
            text.push_str(&format!(",{a}"));
        }
        text.push('\n');
    }
    let mean = |pick: &dyn Fn(&SeedResult) -> f64| {
        results.iter().map(pick).sum::<f64>() / results.len() as f64
    };
    let min = |pick: &dyn Fn(&SeedResult) -> f64| {
        results.iter().map(pick).fold(f64::INFINITY, f64::min)
    };
    let max = |pick: &dyn Fn(&SeedResult) -> f64| {
        results
            .iter()
            .map(pick)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    text.push_str(&format!("mean,{}", mean(&|r| r.model)));
    for l in 0..layers {
        text.push_str(&format!(",{}", mean(&|r| r.per_layer[l])));
    }
    text.push('\n');
    std::fs::write(&path, &text)
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))?;

    println!(
        "bench {} x{} seeds: model accuracy mean {:.4} min {:.4} max {:.4}",
        cfg.run_id(),
        results.len(),
        mean(&|r| r.model),
        min(&|r| r.model),
        max(&|r| r.model),
    );
    for l in 0..layers {
        println!(
            "  layer {l}: mean {:.4} min {:.4} max {:.4}",
            mean(&|r| r.per_layer[l]),
            min(&|r| r.per_layer[l]),
            max(&|r| r.per_layer[l]),
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(path)
}
