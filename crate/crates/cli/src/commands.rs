//! The three subcommand implementations. Each writes its artifacts into the
//! output directory, emits a manifest, and prints a short summary to stdout.

use std::path::Path;
use std::time::Instant;

use rcv_core::io::{fmt_f64, read_series_file, write_series_file};
use rcv_core::{curves, engine, ou};

use crate::config::ConfigFile;
use crate::manifest::RunManifest;
use crate::{classify_csv, classify_curve, classify_engine, classify_ou, CliError};

fn ensure_out_dir(out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))
}

fn resolved(config: &ConfigFile, seed: u64) -> ConfigFile {
    ConfigFile {
        seed: Some(seed),
        ..config.clone()
    }
}

/// `rcv generate`: sample an OU pair and write `train.csv`, `oos.csv`,
/// `manifest.json`.
pub fn cmd_generate(config: &ConfigFile, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let ou_cfg = config.to_ou_config(seed);
    let (train, oos) = ou::sample_ou(&ou_cfg).map_err(classify_ou)?;

    ensure_out_dir(out_dir)?;
    let train_path = out_dir.join("train.csv");
    let oos_path = out_dir.join("oos.csv");
    write_series_file(&train_path, &train)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", train_path.display())))?;
    write_series_file(&oos_path, &oos)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", oos_path.display())))?;

    let mut manifest = RunManifest::new("generate", seed, resolved(config, seed));
    manifest.record_output("train.csv");
    manifest.record_output("oos.csv");
    manifest.record_output("manifest.json");
    manifest.duration_seconds = started.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;

    println!(
        "wrote {} ({} rows), {} ({} rows)",
        train_path.display(),
        train.len(),
        oos_path.display(),
        oos.len()
    );
    Ok(())
}

/// `rcv rcv`: run the meta-algorithm on a series pair and write
/// `report.json`, optional `residuals.csv`, `manifest.json`. Prints the
/// error triple as one line.
pub fn cmd_rcv(
    train_path: &Path,
    oos_path: &Path,
    config: &ConfigFile,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let train = read_series_file(train_path).map_err(classify_csv)?;
    let oos = read_series_file(oos_path).map_err(classify_csv)?;

    let rcv_cfg = config.to_rcv_config(seed);
    let report = engine::run_rcv(&train, &oos, &rcv_cfg).map_err(classify_engine)?;

    ensure_out_dir(out_dir)?;
    let mut manifest = RunManifest::new("rcv", seed, resolved(config, seed));
    manifest.record_input(train_path)?;
    manifest.record_input(oos_path)?;

    let report_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
    std::fs::write(&report_path, json + "\n")
        .map_err(|e| CliError::Io(format!("writing {}: {e}", report_path.display())))?;
    manifest.record_output("report.json");

    if config.rcv.emit_residuals {
        let residuals_path = out_dir.join("residuals.csv");
        let mut buf = Vec::new();
        engine::write_residuals_csv(&mut buf, &report, &train)
            .map_err(|e| CliError::Io(format!("formatting residuals: {e}")))?;
        std::fs::write(&residuals_path, buf)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", residuals_path.display())))?;
        manifest.record_output("residuals.csv");
    }

    manifest.record_output("manifest.json");
    manifest.duration_seconds = started.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;

    println!(
        "g_r={} g_p={} g_rcv={}",
        fmt_f64(report.aggregate.g_r),
        fmt_f64(report.aggregate.g_p),
        fmt_f64(report.aggregate.g_rcv)
    );
    Ok(())
}

/// `rcv sweep`: learning curve over fold counts; writes `curve.csv` and
/// `manifest.json`, echoing one line per curve point with the selected
/// metrics.
pub fn cmd_sweep(
    train_path: &Path,
    oos_path: &Path,
    config: &ConfigFile,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let train = read_series_file(train_path).map_err(classify_csv)?;
    let oos = read_series_file(oos_path).map_err(classify_csv)?;

    let sweep_cfg = config.to_sweep_config(seed);
    let curve = curves::sweep(&train, &oos, &sweep_cfg).map_err(classify_curve)?;

    ensure_out_dir(out_dir)?;
    let mut manifest = RunManifest::new("sweep", seed, resolved(config, seed));
    manifest.record_input(train_path)?;
    manifest.record_input(oos_path)?;

    let curve_path = out_dir.join("curve.csv");
    curves::emit_curve(&curve, &curve_path).map_err(classify_curve)?;
    manifest.record_output("curve.csv");
    manifest.record_output("manifest.json");
    manifest.duration_seconds = started.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;

    let selection = sweep_cfg.metrics;
    for point in &curve.points {
        let mut line = format!("k={}", point.k);
        if selection.g_r {
            line.push_str(&format!(" g_r={}", fmt_f64(point.g_r_mean)));
        }
        if selection.g_p {
            line.push_str(&format!(" g_p={}", fmt_f64(point.g_p_mean)));
        }
        if selection.g_rcv {
            line.push_str(&format!(" g_rcv={}", fmt_f64(point.g_rcv_mean)));
        }
        println!("{line}");
    }
    println!(
        "wrote {} ({} points)",
        curve_path.display(),
        curve.points.len()
    );
    Ok(())
}
