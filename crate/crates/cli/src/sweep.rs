//! `sweep`: figures of merit against loss for every preset.
//!
//! One CSV per sub-figure; points that fail are left empty in the curve and
//! listed with their cause in `failures.csv`.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use qnic_core::presets::{self, Protocol};

use crate::analyze::{evaluate, OperatingPoint};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{self, CurveRow, FailureRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Figure {
    pub name: &'static str,
    pub protocol: Protocol,
}

pub const FIGURES: [Figure; 4] = [
    Figure { name: "fig6_top_qds_b", protocol: Protocol::QdsB },
    Figure { name: "fig6_bottom_qss_b", protocol: Protocol::QssB },
    Figure { name: "fig7_top_qds_f", protocol: Protocol::QdsF },
    Figure { name: "fig7_bottom_qkd_f", protocol: Protocol::QkdF },
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub files: Vec<std::path::PathBuf>,
    pub points: usize,
    pub failures: Vec<FailureRow>,
}

struct Job {
    figure: Figure,
    preset: &'static presets::RunPreset,
    loss_db: f64,
}

fn selected_figures(cfg: &RunConfig) -> Result<Vec<Figure>> {
    let mut out = Vec::new();
    for name in &cfg.sweep_figures {
        let f = FIGURES
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| CliError::config(0, "sweep_figures", &format!("unknown figure '{name}'")))?;
        if cfg.protocol.map_or(true, |p| p == f.protocol) {
            out.push(*f);
        }
    }
    if out.is_empty() {
        return Err(CliError::config(0, "sweep_figures", "no figure selected"));
    }
    Ok(out)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    let grid = cfg.sweep_grid()?;
    let figures = selected_figures(cfg)?;
    if cfg.sweep_presets.is_empty() {
        return Err(CliError::config(0, "sweep_presets", "no preset selected"));
    }
    let runs = cfg
        .sweep_presets
        .iter()
        .map(|p| presets::run(p).map_err(CliError::from))
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for f in &figures {
        for r in &runs {
            jobs.extend(grid.iter().map(|l| Job { figure: *f, preset: r, loss_db: *l }));
        }
    }
    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let results: Vec<Result<CurveRow>> = jobs
        .par_iter()
        .map(|j| {
            let r = OperatingPoint::resolve(cfg, j.figure.protocol, j.preset, Some(j.loss_db))
                .and_then(|op| evaluate(cfg, op))
                .map(|p| p.curve_row());
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            eprintln!(
                "[{k}/{total}] {} {} {} dB{}",
                j.figure.name,
                j.preset.name,
                j.loss_db,
                if r.is_ok() { "" } else { " (failed)" }
            );
            r
        })
        .collect();

    std::fs::create_dir_all(&cfg.out)?;
    let hash = cfg.hash();
    let mut failures = Vec::new();
    let mut files = Vec::new();
    for f in &figures {
        let rows: Vec<CurveRow> = jobs
            .iter()
            .zip(&results)
            .filter(|(j, _)| j.figure == *f)
            .map(|(j, r)| match r {
                Ok(row) => *row,
                Err(e) => {
                    failures.push(FailureRow {
                        figure: f.name.to_string(),
                        preset: j.preset.name.to_string(),
                        loss_db: j.loss_db,
                        insecure: e.is_insecure(),
                        error: e.to_string(),
                    });
                    CurveRow::failed(j.loss_db, cfg.amplitude.unwrap_or(j.preset.amplitude), cfg.xi.unwrap_or(j.preset.xi_measured))
                }
            })
            .collect();
        let path = cfg.out.join(format!("{}.csv", f.name));
        output::write_curve(&path, &rows, &format!("sweep figure={} protocol={}", f.name, f.protocol.name()), &hash, cfg.seed)?;
        files.push(path);
    }
    let path = cfg.out.join("failures.csv");
    output::write_failures(&path, &failures, &hash, cfg.seed)?;
    files.push(path);
    Ok(SweepSummary {
        files,
        points: total,
        failures,
    })
}
