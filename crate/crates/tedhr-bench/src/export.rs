//! File outputs: per-run CSV time series, per-batch JSON summaries and the
//! human-readable results table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use tedhr_core::scenario::ScenarioId;

use crate::runner::{RunRecord, SummaryStats};
use crate::HarnessError;

fn scenario_label(s: ScenarioId) -> &'static str {
    match s {
        ScenarioId::A => "a",
        ScenarioId::B => "b",
        ScenarioId::C => "c",
    }
}

/// 9 significant digits, deterministic.
fn num(v: f64) -> String {
    format!("{v:.8e}")
}

pub const CSV_HEADER: &str = "t,px,py,pz,prx,pry,prz,phi_deg,theta_deg,psi_deg,\
phir_deg,thetar_deg,psir_deg,u1,u2,u3,u4,u5,u6,\
rate1_hz,rate2_hz,rate3_hz,rate4_hz,rate5_hz,rate6_hz,\
wx,wy,wz,e_p,e_a_deg,u_n,u_e";

pub fn run_csv_name(rec: &RunRecord) -> String {
    format!(
        "run_{}_{}_{:05}.csv",
        scenario_label(rec.scenario),
        rec.controller.label(),
        rec.seed
    )
}

/// Writes one run as CSV; byte-identical for identical inputs.
pub fn write_run_csv(dir: &Path, rec: &RunRecord) -> Result<PathBuf, HarnessError> {
    let mut out = String::with_capacity(rec.rows.len() * 360 + 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &rec.rows {
        let mut cols: Vec<String> = Vec::with_capacity(32);
        cols.push(num(row.t));
        for v in &row.state.p {
            cols.push(num(*v));
        }
        for v in &row.reference.p_r {
            cols.push(num(*v));
        }
        for v in [row.euler.phi, row.euler.theta, row.euler.psi] {
            cols.push(num(v.to_degrees()));
        }
        for v in [row.reference.delta_r.phi, row.reference.delta_r.theta, row.reference.delta_r.psi] {
            cols.push(num(v.to_degrees()));
        }
        for v in &row.u_sat {
            cols.push(num(*v));
        }
        for v in &row.commanded_hz {
            cols.push(num(*v));
        }
        for v in &row.wind {
            cols.push(num(*v));
        }
        cols.push(num(row.metrics.e_p));
        cols.push(num(row.metrics.e_a_deg));
        cols.push(num(row.metrics.u_n_hz));
        cols.push(num(row.metrics.u_e_hz));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    let path = dir.join(run_csv_name(rec));
    fs::write(&path, out).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn summary_json_name(s: &SummaryStats) -> String {
    format!("summary_{}_{}.json", scenario_label(s.scenario), s.controller.label())
}

/// Persists a batch summary for later table regeneration.
pub fn write_summary_json(dir: &Path, summary: &SummaryStats) -> Result<PathBuf, HarnessError> {
    let path = dir.join(summary_json_name(summary));
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    fs::write(&path, json).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub fn read_summaries(dir: &Path) -> Result<Vec<SummaryStats>, HarnessError> {
    let mut found = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let mut names: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("summary_") && n.ends_with(".json"))
        })
        .collect();
    names.sort();
    for path in names {
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let s: SummaryStats = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        found.push(s);
    }
    Ok(found)
}

/// Renders the results table (one column per controller/scenario batch).
pub fn render_table(summaries: &[SummaryStats]) -> String {
    let mut out = String::new();
    if summaries.is_empty() {
        out.push_str("no batch summaries found\n");
        return out;
    }
    let window = summaries[0].window_start;
    let _ = writeln!(out, "controllers performance indexes (means over the evaluation window, t >= {window:.1} s)");
    let _ = write!(out, "{:<12}", "");
    for s in summaries {
        let _ = write!(out, "{:>14}", format!("{}-{}", s.controller.label().to_uppercase(), scenario_label(s.scenario).to_uppercase()));
    }
    out.push('\n');

    let rows: [(&str, fn(&SummaryStats) -> String); 6] = [
        ("e_p [m]", |s| format!("{:.3}", s.mean_e_p)),
        ("e_a [deg]", |s| format!("{:.3}", s.mean_e_a_deg)),
        ("u_n [Hz]", |s| format!("{:.1}", s.mean_u_n_hz)),
        ("u_e [Hz]", |s| format!("{:.3}", s.mean_u_e_hz)),
        ("runs", |s| format!("{}", s.runs)),
        ("diverged", |s| format!("{}", s.diverged)),
    ];
    for (label, f) in rows {
        let _ = write!(out, "{label:<12}");
        for s in summaries {
            let _ = write!(out, "{:>14}", f(s));
        }
        out.push('\n');
    }
    out
}

/// Writes CSVs, the batch summary JSON and the summary table.
pub fn export(
    out_dir: &Path,
    records: &[RunRecord],
    summary: &SummaryStats,
) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io(format!("{}: {e}", out_dir.display())))?;
    for rec in records {
        write_run_csv(out_dir, rec)?;
    }
    write_summary_json(out_dir, summary)?;
    let all = read_summaries(out_dir)?;
    let table = render_table(&all);
    let path = out_dir.join("table.txt");
    fs::write(&path, table).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::runner::{monte_carlo, summarize, Controller};

    #[test]
    fn csv_deterministic_and_sized() {
        let mut cfg = SimConfig::default();
        cfg.scenario.duration = 8.0;
        let (summary, records) = monte_carlo(&cfg, Controller::FcIdeal, 1, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export(dir.path(), &records, &summary).unwrap();

        let csv_path = dir.path().join(run_csv_name(&records[0]));
        let first = fs::read(&csv_path).unwrap();
        let rows = first.iter().filter(|&&b| b == b'\n').count();
        assert_eq!(rows, (8.0 / cfg.sim.dt_ctrl).round() as usize + 2); // header + ticks

        // re-export byte-identical
        export(dir.path(), &records, &summary).unwrap();
        let second = fs::read(&csv_path).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn empty_batch_summary() {
        let cfg = SimConfig::default();
        let summary = summarize(&cfg, Controller::Fc, 0, &[]);
        assert_eq!(summary.runs, 0);
        assert_eq!(summary.sums.ticks, 0);
        assert_eq!(summary.mean_e_p, 0.0);
        let dir = tempfile::tempdir().unwrap();
        export(dir.path(), &[], &summary).unwrap();
        assert!(dir.path().join("summary_a_fc.json").exists());
        assert!(dir.path().join("table.txt").exists());
        // no CSVs written
        let csvs = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .path()
                    .extension()
                    .is_some_and(|x| x == "csv")
            })
            .count();
        assert_eq!(csvs, 0);
    }

    #[test]
    fn table_collects_batches() {
        let mut cfg = SimConfig::default();
        cfg.scenario.duration = 8.0;
        let dir = tempfile::tempdir().unwrap();
        for ctl in [Controller::FcIdeal, Controller::Hc] {
            let (summary, records) = monte_carlo(&cfg, ctl, 1, 1).unwrap();
            export(dir.path(), &records, &summary).unwrap();
        }
        let table = fs::read_to_string(dir.path().join("table.txt")).unwrap();
        assert!(table.contains("FC-IDEAL-A"));
        assert!(table.contains("HC-A"));
        assert!(table.contains("e_p [m]"));
    }
}
