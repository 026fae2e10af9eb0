//! `ffcl flops`: analytic per-layer and total inference cost for all three
//! variants at the configured architecture, optionally cross-checked against
//! the instrumented runtime counter.

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::metrics::{MetricsRecord, MetricsWriter};
use ffcl_core::{
    instrumented_count, model_cost_with, CostOptions, CostReport, NetworkConfig, Rng, Scalar,
    TrainedNetwork, Variant,
};
use std::path::PathBuf;

fn thousands(v: u64) -> String {
    let s = v.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn report_for(cfg: &RunConfig, variant: Variant, opts: CostOptions) -> Result<CostReport> {
    let mut net_cfg = NetworkConfig::new(
        variant,
        cfg.model.layer_dims.clone(),
        cfg.model.classes,
    );
    net_cfg.unroll = if variant == Variant::Ffcl {
        cfg.model.unroll.max(2)
    } else {
        1
    };
    net_cfg.theta = cfg.model.theta;
    model_cost_with(&net_cfg, opts).map_err(CliError::from)
}

pub fn run<S: Scalar>(cfg: &RunConfig, check_instrumented: bool, table_compat: bool) -> Result<()> {
    let opts = CostOptions {
        table_compat,
        ..CostOptions::default()
    };
    let variants = [Variant::Ffl, Variant::Ffdl, Variant::Ffcl];
    let reports: Vec<CostReport> = variants
        .iter()
        .map(|&v| report_for(cfg, v, opts))
        .collect::<Result<_>>()?;

    println!(
        "inference FLOPs, layer_dims {:?}, classes {}, unroll {}",
        cfg.model.layer_dims,
        cfg.model.classes,
        reports[2].unroll
    );
    println!("{:<8}{:>16}{:>16}{:>16}", "layer", "ffl", "ffdl", "ffcl");
    for l in 0..reports[0].per_layer.len() {
        println!(
            "{:<8}{:>16}{:>16}{:>16}",
            l,
            thousands(reports[0].per_layer[l].flops),
            thousands(reports[1].per_layer[l].flops),
            thousands(reports[2].per_layer[l].flops),
        );
    }
    println!(
        "{:<8}{:>16}{:>16}{:>16}",
        "model",
        thousands(reports[0].total),
        thousands(reports[1].total),
        thousands(reports[2].total),
    );
    if table_compat {
        println!(
            "note: first-layer figures use the published reference count \
             ({} per instance), which no per-layer formula reproduces",
            thousands(ffcl_core::COMPAT_FIRST_LAYER_FLOPS)
        );
    }

    let out_dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join("flops.csv");
    let mut writer = MetricsWriter::create(&path, false)?;
    for report in &reports {
        for lc in &report.per_layer {
            writer.append(&MetricsRecord {
                run_id: "flops".into(),
                seed: 0,
                variant: report.variant.to_string(),
                layer: lc.layer.to_string(),
                epoch: None,
                loss: None,
                accuracy: None,
                wall_ms: None,
                flops: Some(lc.flops),
            })?;
        }
        writer.append(&MetricsRecord {
            run_id: "flops".into(),
            seed: 0,
            variant: report.variant.to_string(),
            layer: "model".into(),
            epoch: None,
            loss: None,
            accuracy: None,
            wall_ms: None,
            flops: Some(report.total),
        })?;
    }
    writer.finish()?;
    eprintln!("wrote {}", path.display());

    if check_instrumented {
        let mut mismatches = 0;
        for &variant in &variants {
            let mut net_cfg = NetworkConfig::new(
                variant,
                cfg.model.layer_dims.clone(),
                cfg.model.classes,
            );
            net_cfg.unroll = if variant == Variant::Ffcl {
                cfg.model.unroll.max(2)
            } else {
                1
            };
            let mut rng = Rng::seed_from_u64(cfg.train.seed);
            let net: TrainedNetwork<S> =
                TrainedNetwork::init(net_cfg.clone(), &mut rng).map_err(CliError::from)?;
            let image = vec![S::from_f64_lossy(0.5); net_cfg.input_dim()];
            let observed = instrumented_count(&net, &image).map_err(CliError::from)?;
            let analytic = model_cost_with(&net_cfg, CostOptions::default())
                .map_err(CliError::from)?;
            for (o, a) in observed.per_layer.iter().zip(&analytic.per_layer) {
                let ok = o.flops == a.flops;
                println!(
                    "instrumented {} layer {}: {} (observed {}, analytic {})",
                    variant,
                    o.layer,
                    if ok { "MATCH" } else { "MISMATCH" },
                    thousands(o.flops),
                    thousands(a.flops),
                );
                if !ok {
                    mismatches += 1;
                }
            }
        }
        if mismatches > 0 {
            return Err(CliError::Other(format!(
                "{mismatches} instrumented/analytic mismatches"
            )));
        }
    }
    Ok(())
}
