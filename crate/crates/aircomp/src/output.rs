//! Sweep result files.
//!
//! Results are a CSV table with the fixed header
//! `scheme,snr_db,nmse,stderr,mean_active,mean_p,trials,seed`, where `scheme`
//! holds the experiment name. A JSON metadata document records the complete
//! configuration of every experiment plus per-point diagnostics. Both are
//! pure functions of the configuration, so identical runs produce identical
//! bytes.

use std::io::Write;

use aircomp_core::sim::SweepResult;
use serde_json::{json, Value};

use crate::config::config_body;

pub const CSV_HEADER: [&str; 8] = [
    "scheme",
    "snr_db",
    "nmse",
    "stderr",
    "mean_active",
    "mean_p",
    "trials",
    "seed",
];

pub struct NamedResult<'a> {
    pub name: &'a str,
    pub result: &'a SweepResult,
}

pub fn write_csv<W: Write>(out: W, results: &[NamedResult<'_>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        for p in &r.result.points {
            w.write_record([
                r.name.to_owned(),
                p.snr_db.to_string(),
                p.nmse.to_string(),
                p.stderr.to_string(),
                p.mean_active.to_string(),
                p.mean_scaling.to_string(),
                p.trials.to_string(),
                r.result.config.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn metadata(results: &[NamedResult<'_>]) -> Value {
    let experiments: Vec<Value> = results
        .iter()
        .map(|r| {
            let c = &r.result.config;
            let points: Vec<Value> = r
                .result
                .points
                .iter()
                .map(|p| {
                    json!({
                        "snr_db": p.snr_db,
                        "noise_power": p.noise_power,
                        "nmse": p.nmse,
                        "stderr": p.stderr,
                        "quantization_nmse": p.quantization_nmse,
                        "transmission_nmse": p.transmission_nmse,
                        "mean_active_per_subcarrier": p.mean_active_per_subcarrier,
                        "mean_p_per_subcarrier": p.mean_scaling_per_subcarrier,
                        "bit_frequency": p.bit_frequency,
                        "max_plane_error_cross_correlation": p.max_cross_correlation(),
                    })
                })
                .collect();
            json!({
                "name": r.name,
                "scheme": c.scheme.name(),
                "varpi": c.power.varpi(),
                "seed": c.seed,
                "trials": c.trials,
                "config": config_body(c),
                "points": points,
            })
        })
        .collect();
    json!({
        "generator": concat!("aircomp ", env!("CARGO_PKG_VERSION")),
        "nmse": "sum over trials of (s_hat - s)^2 divided by sum over trials of s^2",
        "stderr": "delta-method standard error of the ratio estimator",
        "snr": "P_max / (sigma^2 L), given in dB",
        "csv_columns": CSV_HEADER,
        "experiments": experiments,
    })
}

pub fn write_metadata<W: Write>(mut out: W, results: &[NamedResult<'_>]) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, &metadata(results))?;
    out.write_all(b"\n")
}
