use std::fs;
use std::path::{Path, PathBuf};

use super::config::Metric;
use super::ensemble::{glow_tail_average, mean_sem, CurveRecord, CurveResult};
use crate::environments::Cell;
use crate::error::{Error, Result};

/// Window of the tail average reported for episodic runs.
pub const TAIL_WINDOW: usize = 500;

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Header `x, m1_mean, m1_sem, …` followed by one row per record.
pub fn emit_csv(records: &[CurveRecord], x_name: &str, metrics: &[Metric], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec![x_name.to_string()];
    for m in metrics {
        header.push(format!("{}_mean", m.column()));
        header.push(format!("{}_sem", m.column()));
    }
    w.write_record(&header).map_err(csv_err(path))?;
    for r in records {
        let mut row = vec![r.x.to_string()];
        for s in &r.stats {
            row.push(format_float(s.mean));
            row.push(format_float(s.sem));
        }
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(serde::Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    label: &'a str,
    seed: u64,
    columns: Vec<String>,
    ledger: super::ensemble::CycleLedger,
    config: &'a super::config::CurveConfig,
}

/// Writes `<label>.csv` and `<label>.manifest.json` into `dir`.
pub fn write_curve(result: &CurveResult, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = &result.config;
    let csv_path = dir.join(format!("{}.csv", cfg.label));
    emit_csv(&result.records, cfg.x_name(), &cfg.metrics, &csv_path)?;
    let mut columns = vec![cfg.x_name().to_string()];
    for m in &cfg.metrics {
        columns.push(format!("{}_mean", m.column()));
        columns.push(format!("{}_sem", m.column()));
    }
    let manifest = Manifest {
        experiment: &cfg.experiment,
        label: &cfg.label,
        seed: cfg.seed,
        columns,
        ledger: result.ledger,
        config: cfg,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    let manifest_path = dir.join(format!("{}.manifest.json", cfg.label));
    fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(csv_path)
}

/// One summary row per curve and metric: final window and, for episodic
/// runs, the per-agent mean over the last [`TAIL_WINDOW`] episodes.
pub fn write_summary(results: &[CurveResult], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "label",
        "metric",
        "final_mean",
        "final_sem",
        "tail_mean",
        "tail_sem",
        "external_cycles",
        "internal_cycles",
    ])
    .map_err(csv_err(path))?;
    for r in results {
        let tail = tail_stats(r);
        for (i, m) in r.config.metrics.iter().enumerate() {
            let last = r.records.last().map(|x| x.stats[i]);
            let (tm, ts) = match (m, tail) {
                (Metric::EpisodeLength, Some((a, b))) => (format_float(a), format_float(b)),
                _ => (String::new(), String::new()),
            };
            w.write_record([
                r.config.label.clone(),
                m.column().to_string(),
                last.map_or(String::new(), |s| format_float(s.mean)),
                last.map_or(String::new(), |s| format_float(s.sem)),
                tm,
                ts,
                r.ledger.external.to_string(),
                r.ledger.internal.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per free cell: `cell, right, down, left, up`.
pub fn write_policy_table(table: &[(Cell, [f64; 4])], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["cell", "right", "down", "left", "up"]).map_err(csv_err(path))?;
    for (cell, p) in table {
        let mut row = vec![cell.to_string()];
        row.extend(p.iter().map(|x| format_float(*x)));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Ensemble mean and sem of the per-agent tail average, when defined.
pub fn tail_stats(result: &CurveResult) -> Option<(f64, f64)> {
    let window = TAIL_WINDOW.min(result.config.budget as usize);
    let tails: Option<Vec<f64>> = result
        .agents
        .iter()
        .map(|a| glow_tail_average(&a.episode_lengths, window).ok())
        .collect();
    let tails = tails.filter(|t| !t.is_empty())?;
    let s = mean_sem(&tails);
    Some((s.mean, s.sem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::ensemble::MeanSem;

    #[test]
    fn empty_stream_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        emit_csv(&[], "cycle", &[Metric::Reward, Metric::Fidelity, Metric::Distance], &path).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "cycle,reward_mean,reward_sem,F_mean,F_sem,D_mean,D_sem\n"
        );
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 123456.789] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn rows_follow_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let recs = vec![CurveRecord { x: 10, stats: vec![MeanSem { mean: 0.5, sem: 0.25 }] }];
        emit_csv(&recs, "episode", &[Metric::EpisodeLength], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "episode,length_mean,length_sem\n10,0.5,0.25\n");
    }

    #[test]
    fn policy_table_rows_are_labelled_by_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_policy_table(&[(Cell::new(2, 0), [0.5, 0.0, 0.25, 0.25])], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "cell,right,down,left,up\n\"(2,0)\",0.5,0,0.25,0.25\n");
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("c.csv");
        match emit_csv(&[], "cycle", &[Metric::Reward], &path) {
            Err(Error::Io { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected an I/O error, got {other:?}"),
        }
    }
}
