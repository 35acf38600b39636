//! Results manifest: per-instance rows plus mean / std / difference
//! aggregates, mirroring a baseline-vs-reconstruction results table.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const KIND_INSTANCE: &str = "instance";
pub const KIND_MEAN: &str = "mean";
pub const KIND_STD: &str = "std";
pub const KIND_DIFFERENCE: &str = "difference";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub kind: String,
    pub id: String,
    pub category: String,
    pub seed: u64,
    pub config_hash: String,
    pub n_pieces: Option<usize>,
    pub n_present: Option<usize>,
    pub recon_failed: Option<bool>,
    pub input_cd: Option<f64>,
    pub input_precision: Option<f64>,
    pub input_recall: Option<f64>,
    pub recon_cd: Option<f64>,
    pub recon_precision: Option<f64>,
    pub recon_recall: Option<f64>,
    pub delta_cd: Option<f64>,
    pub delta_precision: Option<f64>,
    pub delta_recall: Option<f64>,
    pub eta: f64,
}

impl ManifestRow {
    fn aggregate_template(kind: &str, template: &ManifestRow, global_seed: u64) -> ManifestRow {
        ManifestRow {
            kind: kind.to_string(),
            id: kind.to_string(),
            category: "all".to_string(),
            seed: global_seed,
            config_hash: template.config_hash.clone(),
            n_pieces: None,
            n_present: None,
            recon_failed: None,
            input_cd: None,
            input_precision: None,
            input_recall: None,
            recon_cd: None,
            recon_precision: None,
            recon_recall: None,
            delta_cd: None,
            delta_precision: None,
            delta_recall: None,
            eta: template.eta,
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Append mean, std, and difference rows computed over the instance rows.
/// Input metrics aggregate over every instance; reconstruction metrics over
/// the successful ones. The difference row is mean(recon) - mean(input) per
/// metric.
pub fn with_aggregates(instance_rows: Vec<ManifestRow>, global_seed: u64) -> Vec<ManifestRow> {
    let mut rows = instance_rows;
    let Some(first) = rows.first().cloned() else {
        return rows;
    };
    let field = |rows: &[ManifestRow], f: fn(&ManifestRow) -> Option<f64>| -> Vec<f64> {
        rows.iter().filter_map(f).collect()
    };
    let mut mean_row = ManifestRow::aggregate_template(KIND_MEAN, &first, global_seed);
    let mut std_row = ManifestRow::aggregate_template(KIND_STD, &first, global_seed);
    let mut diff_row = ManifestRow::aggregate_template(KIND_DIFFERENCE, &first, global_seed);

    let columns: [(
        fn(&ManifestRow) -> Option<f64>,
        fn(&mut ManifestRow) -> &mut Option<f64>,
    ); 6] = [
        (|r| r.input_cd, |r| &mut r.input_cd),
        (|r| r.input_precision, |r| &mut r.input_precision),
        (|r| r.input_recall, |r| &mut r.input_recall),
        (|r| r.recon_cd, |r| &mut r.recon_cd),
        (|r| r.recon_precision, |r| &mut r.recon_precision),
        (|r| r.recon_recall, |r| &mut r.recon_recall),
    ];
    for (get, set) in columns {
        let values = field(&rows, get);
        if !values.is_empty() {
            let (m, s) = mean_std(&values);
            *set(&mut mean_row) = Some(m);
            *set(&mut std_row) = Some(s);
        }
    }
    let deltas: [(
        fn(&ManifestRow) -> Option<f64>,
        fn(&ManifestRow) -> Option<f64>,
        fn(&mut ManifestRow) -> &mut Option<f64>,
    ); 3] = [
        (|r| r.recon_cd, |r| r.input_cd, |r| &mut r.delta_cd),
        (
            |r| r.recon_precision,
            |r| r.input_precision,
            |r| &mut r.delta_precision,
        ),
        (
            |r| r.recon_recall,
            |r| r.input_recall,
            |r| &mut r.delta_recall,
        ),
    ];
    for (get_recon, get_input, set) in deltas {
        let recon = field(&rows, get_recon);
        let input = field(&rows, get_input);
        if !recon.is_empty() && !input.is_empty() {
            let (rm, _) = mean_std(&recon);
            let (im, _) = mean_std(&input);
            *set(&mut diff_row) = Some(rm - im);
        }
    }
    rows.push(mean_row);
    rows.push(std_row);
    rows.push(diff_row);
    rows
}

pub fn write_manifest(rows: &[ManifestRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(Error::Csv)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn instance_row(i: usize, input_cd: f64, recon_cd: f64) -> ManifestRow {
        ManifestRow {
            kind: KIND_INSTANCE.into(),
            id: format!("test-{i:04}"),
            category: "box".into(),
            seed: i as u64,
            config_hash: "cafe".into(),
            n_pieces: Some(5),
            n_present: Some(4),
            recon_failed: Some(false),
            input_cd: Some(input_cd),
            input_precision: Some(0.2),
            input_recall: Some(0.3),
            recon_cd: Some(recon_cd),
            recon_precision: Some(0.5),
            recon_recall: Some(0.6),
            delta_cd: Some(recon_cd - input_cd),
            delta_precision: Some(0.3),
            delta_recall: Some(0.3),
            eta: 0.02,
        }
    }

    #[test]
    fn aggregates_are_reproducible_from_instance_rows() {
        let rows = vec![
            instance_row(0, 0.02, 0.01),
            instance_row(1, 0.04, 0.02),
            instance_row(2, 0.03, 0.015),
        ];
        let all = with_aggregates(rows, 7);
        assert_eq!(all.len(), 6);
        let mean = all.iter().find(|r| r.kind == KIND_MEAN).unwrap();
        let diff = all.iter().find(|r| r.kind == KIND_DIFFERENCE).unwrap();
        let exp_input = (0.02 + 0.04 + 0.03) / 3.0;
        let exp_recon = (0.01 + 0.02 + 0.015) / 3.0;
        assert!((mean.input_cd.unwrap() - exp_input).abs() < 1e-15);
        assert!((mean.recon_cd.unwrap() - exp_recon).abs() < 1e-15);
        assert!((diff.delta_cd.unwrap() - (exp_recon - exp_input)).abs() < 1e-15);
        assert_eq!(mean.seed, 7);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let rows = with_aggregates(vec![instance_row(0, 0.02, 0.01)], 3);
        write_manifest(&rows, &path).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn failed_instances_keep_empty_recon_cells() {
        let mut failed = instance_row(0, 0.05, 0.0);
        failed.recon_failed = Some(true);
        failed.recon_cd = None;
        failed.recon_precision = None;
        failed.recon_recall = None;
        failed.delta_cd = None;
        failed.delta_precision = None;
        failed.delta_recall = None;
        let all = with_aggregates(vec![failed, instance_row(1, 0.04, 0.02)], 0);
        let mean = all.iter().find(|r| r.kind == KIND_MEAN).unwrap();
        // input over both, recon over the single success
        assert!((mean.input_cd.unwrap() - 0.045).abs() < 1e-15);
        assert!((mean.recon_cd.unwrap() - 0.02).abs() < 1e-15);
    }
}
