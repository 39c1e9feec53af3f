use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ablation::{AblationEntry, AblationReport, ConfigResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidConfig(format!(
                "unknown report format '{s}' (expected markdown, csv or json)"
            ))),
        }
    }
}

pub fn emit_report(report: &AblationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => markdown(report),
        ReportFormat::Csv => csv(report),
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes"),
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:+.2}%"))
}

fn markdown(report: &AblationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "| n. | skip | γ | σ_n | mean (×10⁻²) | std (×10⁻³) | rel. mean | rel. std |"
    );
    let _ = writeln!(out, "|---:|:---:|---:|---:|---:|---:|---:|---:|");
    for r in &report.rows {
        let skip = if r.entry.skip_connections {
            "yes"
        } else {
            "no"
        };
        let (mean, std) = match (r.mean, r.std) {
            (Some(m), Some(s)) => (format!("{:.3}", m * 1e2), format!("{:.3}", s * 1e3)),
            _ => ("failed".into(), "failed".into()),
        };
        let _ = writeln!(
            out,
            "| {} | {skip} | {} | {} | {mean} | {std} | {} | {} |",
            r.index,
            r.entry.gamma,
            r.entry.noise_sigma,
            pct(r.rel_mean_pct),
            pct(r.rel_std_pct),
        );
    }
    let failures: Vec<&ConfigResult> = report.rows.iter().filter(|r| r.failed()).collect();
    if !failures.is_empty() {
        let _ = writeln!(out);
        for r in failures {
            let _ = writeln!(
                out,
                "- n. {} failed: {}",
                r.index,
                r.failure.as_deref().unwrap_or("")
            );
        }
    }
    out
}

const CSV_HEADER: &str =
    "index,skip_connections,gamma,noise_sigma,mean,std,rel_mean_pct,rel_std_pct,runs,failure";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Every float is written in shortest round-trip form. Per-run values are
/// joined with `;`; commas and line breaks in failure messages are replaced.
fn csv(report: &AblationReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let runs: Vec<String> = r.runs.iter().map(f64::to_string).collect();
        let failure = r
            .failure
            .as_deref()
            .unwrap_or("")
            .replace(',', ";")
            .replace(['\n', '\r'], " ");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.entry.skip_connections,
            r.entry.gamma,
            r.entry.noise_sigma,
            opt(r.mean),
            opt(r.std),
            opt(r.rel_mean_pct),
            opt(r.rel_std_pct),
            runs.join(";"),
            failure
        );
    }
    out
}

/// Parses the rows written by the CSV report.
pub fn parse_report_csv(text: &str, path: &Path) -> Result<Vec<ConfigResult>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::format(path, "missing or unexpected CSV header"));
    }
    let bad =
        |line: usize, what: &str| Error::format(path, format!("line {}: bad {what}", line + 2));
    lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.splitn(10, ',').collect();
            if f.len() != 10 {
                return Err(bad(i, "field count"));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(i, what));
            let opt = |s: &str, what: &str| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s, what).map(Some)
                }
            };
            let runs = if f[8].is_empty() {
                Vec::new()
            } else {
                f[8].split(';')
                    .map(|v| num(v, "runs"))
                    .collect::<Result<_>>()?
            };
            Ok(ConfigResult {
                index: f[0].parse().map_err(|_| bad(i, "index"))?,
                entry: AblationEntry {
                    skip_connections: f[1].parse().map_err(|_| bad(i, "skip_connections"))?,
                    gamma: num(f[2], "gamma")?,
                    noise_sigma: num(f[3], "noise_sigma")?,
                },
                mean: opt(f[4], "mean")?,
                std: opt(f[5], "std")?,
                rel_mean_pct: opt(f[6], "rel_mean_pct")?,
                rel_std_pct: opt(f[7], "rel_std_pct")?,
                runs,
                failure: (!f[9].is_empty()).then(|| f[9].to_string()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> AblationReport {
        let mut failed = ConfigResult::from_stats(2, AblationEntry::new(true, 0.5, 0.02), 0.0, 0.0);
        failed.mean = None;
        failed.std = None;
        failed.failure = Some("numerical failure at epoch 3, batch 1: loss NaN".into());
        let mut base = ConfigResult::from_stats(0, AblationEntry::new(true, 2.0, 0.02), 0.0, 0.0);
        base.runs = vec![0.0281, 0.029, 0.0287, 0.02851, 0.02863];
        base.mean = Some(base.runs.iter().sum::<f64>() / 5.0);
        base.std = Some(super::super::sample_std(&base.runs));
        AblationReport {
            baseline: 0,
            repeats: 5,
            base_seed: 0,
            rows: vec![
                base,
                ConfigResult::from_stats(1, AblationEntry::new(false, 2.0, 0.02), 3.059e-2, 1.7e-3),
                failed,
            ],
        }
        .with_relative()
    }

    #[test]
    fn markdown_has_one_row_per_config() {
        let md = emit_report(&report(), ReportFormat::Markdown);
        let rows = md
            .lines()
            .filter(|l| l.starts_with("| ") && !l.starts_with("| n."))
            .count();
        assert_eq!(rows, 3);
        assert!(md.contains("failed"));
    }

    #[test]
    fn csv_round_trips() {
        let r = report();
        let text = emit_report(&r, ReportFormat::Csv);
        let rows = parse_report_csv(&text, Path::new("r.csv")).unwrap();
        assert_eq!(rows.len(), 3);
        for (a, b) in rows.iter().zip(&r.rows) {
            assert_eq!(a.mean, b.mean);
            assert_eq!(a.std, b.std);
            assert_eq!(a.rel_mean_pct, b.rel_mean_pct);
            assert_eq!(a.runs, b.runs);
            assert_eq!(a.entry, b.entry);
            assert_eq!(a.failed(), b.failed());
        }
    }

    #[test]
    fn json_has_the_documented_fields() {
        let r = report();
        let text = emit_report(&r, ReportFormat::Json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["baseline", "repeats", "base_seed", "rows"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let row = &v["rows"][1];
        for key in [
            "index",
            "skip_connections",
            "gamma",
            "noise_sigma",
            "runs",
            "mean",
            "std",
            "rel_mean_pct",
            "rel_std_pct",
            "failure",
        ] {
            assert!(row.get(key).is_some(), "row missing {key}");
        }
        assert!(v["rows"][2]["mean"].is_null());
        let back: AblationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn format_names() {
        assert_eq!(
            "md".parse::<ReportFormat>().unwrap(),
            ReportFormat::Markdown
        );
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
