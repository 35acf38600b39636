//! Parameter sweeps over the reverse-step fraction k and the mixing scalar
//! alpha.

use crate::error::Result;
use crate::harness::experiment::{Experiment, InstanceEval};
use crate::harness::plot::{render_line_chart, ChartSeries};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: f64,
    pub reverse_steps: usize,
    pub alpha: f64,
    pub mean_input_cd: f64,
    pub mean_recon_cd: Option<f64>,
    pub mean_recon_to_input_cd: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn row(&self, k: f64, alpha: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| (r.k - k).abs() < 1e-12 && (r.alpha - alpha).abs() < 1e-12)
    }
}

/// Evaluate the full (k, alpha) grid on the test set with the fine-tuned
/// model; k = 1 maps to a full reverse pass (N_r = N). Emits `sweep.csv`
/// plus CD-vs-k and CD-vs-alpha plots into the run directory.
pub fn ablation_sweep(
    experiment: &Experiment,
    ks: &[f64],
    alphas: &[f64],
) -> Result<SweepReport> {
    let n = experiment.cfg.retarget.forward_steps;
    let mut rows = Vec::with_capacity(ks.len() * alphas.len());
    for &k in ks {
        let reverse_steps = ((k * n as f64).round() as usize).clamp(1, n);
        for &alpha in alphas {
            let evals: Vec<InstanceEval> = experiment
                .dataset
                .test
                .iter()
                .map(|b| experiment.eval_instance_with(b, reverse_steps, alpha))
                .collect::<Result<_>>()?;
            rows.push(summarize(k, reverse_steps, alpha, &evals));
        }
    }
    let report = SweepReport { rows };
    write_sweep_csv(&report, &experiment.cfg.out_dir.join("sweep.csv"))?;
    write_sweep_plots(&report, &experiment.cfg.out_dir)?;
    Ok(report)
}

fn summarize(k: f64, reverse_steps: usize, alpha: f64, evals: &[InstanceEval]) -> SweepRow {
    let mean = |values: Vec<f64>| -> Option<f64> {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    SweepRow {
        k,
        reverse_steps,
        alpha,
        mean_input_cd: evals.iter().map(|e| e.input.cd).sum::<f64>() / evals.len() as f64,
        mean_recon_cd: mean(evals.iter().filter_map(|e| e.recon.map(|r| r.cd)).collect()),
        mean_recon_to_input_cd: mean(evals.iter().filter_map(|e| e.recon_to_input_cd).collect()),
        mean_precision: mean(
            evals
                .iter()
                .filter_map(|e| e.recon.map(|r| r.precision))
                .collect(),
        ),
        mean_recall: mean(
            evals
                .iter()
                .filter_map(|e| e.recon.map(|r| r.recall))
                .collect(),
        ),
        failures: evals.iter().filter(|e| e.recon.is_none()).count(),
    }
}

fn write_sweep_csv(report: &SweepReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_sweep_plots(report: &SweepReport, dir: &Path) -> Result<()> {
    let alphas: Vec<f64> = dedup_sorted(report.rows.iter().map(|r| r.alpha));
    let ks: Vec<f64> = dedup_sorted(report.rows.iter().map(|r| r.k));

    let cd_vs_k: Vec<ChartSeries> = alphas
        .iter()
        .map(|&alpha| ChartSeries {
            label: format!("alpha={alpha}"),
            points: report
                .rows
                .iter()
                .filter(|r| r.alpha == alpha)
                .filter_map(|r| r.mean_recon_cd.map(|cd| (r.k, cd)))
                .collect(),
        })
        .collect();
    render_line_chart(
        &dir.join("cd_vs_k.png"),
        "recon cd vs k",
        "k",
        "cd",
        &cd_vs_k,
    )?;

    let cd_vs_alpha: Vec<ChartSeries> = ks
        .iter()
        .map(|&k| ChartSeries {
            label: format!("k={k}"),
            points: report
                .rows
                .iter()
                .filter(|r| r.k == k)
                .filter_map(|r| r.mean_recon_cd.map(|cd| (r.alpha, cd)))
                .collect(),
        })
        .collect();
    render_line_chart(
        &dir.join("cd_vs_alpha.png"),
        "recon cd vs alpha",
        "alpha",
        "cd",
        &cd_vs_alpha,
    )?;
    Ok(())
}

fn dedup_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}
