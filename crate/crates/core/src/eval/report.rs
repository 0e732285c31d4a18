//! Markdown and CSV renderings of an [`EvalReport`].

use std::fmt::Write;
use std::str::FromStr;

use super::{AEEStats, EvalReport};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "slice,n,mean,median,std,p90,fail_count";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Parse(format!("unknown report format `{other}`"))),
        }
    }
}

fn slices(r: &EvalReport) -> [(&'static str, &AEEStats); 3] {
    [("raw", &r.raw), ("blurry", &r.blurry), ("all", &r.all)]
}

/// Deterministic text for a report; values use two decimals.
pub fn render_report(r: &EvalReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for (name, s) in slices(r) {
                let _ = writeln!(
                    out,
                    "{name},{},{:.2},{:.2},{:.2},{:.2},{}",
                    s.n, s.mean, s.median, s.std, s.p90, s.fail_count
                );
            }
        }
        ReportFormat::Markdown => {
            let s = slices(r);
            out.push_str("| Dataset | Raw Images | Blurry Images | All images |\n|---|---|---|---|\n");
            let _ = writeln!(out, "| Number of images | {} | {} | {} |", s[0].1.n, s[1].1.n, s[2].1.n);
            let rows: [(&str, fn(&AEEStats) -> f64); 4] = [
                ("Mean AEE", |s| s.mean),
                ("Median AEE", |s| s.median),
                ("Standard deviation of AEE", |s| s.std),
                ("90th percentile of AEE", |s| s.p90),
            ];
            for (label, get) in rows {
                if s[2].1.n == 0 {
                    continue;
                }
                let _ = writeln!(
                    out,
                    "| {label} | {:.2} | {:.2} | {:.2} |",
                    get(s[0].1),
                    get(s[1].1),
                    get(s[2].1)
                );
            }
            let _ = writeln!(
                out,
                "\nestimator: {}; failures: {} raw, {} blurry",
                r.estimator, s[0].1.fail_count, s[1].1.fail_count
            );
            if let Some(ratio) = r.runtime_ratio {
                let _ = writeln!(out, "runtime ratio (model/baseline): {ratio:.2}");
            }
        }
    }
    out
}

/// Parses [`render_report`]'s CSV back into `(slice, stats)` rows.
pub fn parse_csv_report(text: &str) -> Result<Vec<(String, AEEStats)>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse("unexpected report header".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let f = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad number `{}`", &rec[i])))
        };
        let u = |i: usize| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad count `{}`", &rec[i])))
        };
        rows.push((
            rec[0].to_string(),
            AEEStats {
                n: u(1)?,
                mean: f(2)?,
                median: f(3)?,
                std: f(4)?,
                p90: f(5)?,
                fail_count: u(6)?,
            },
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> EvalReport {
        let mut r = EvalReport::empty("model");
        r.raw = AEEStats { n: 3963, mean: 1.52, median: 0.02, std: 3.1, p90: 2.87, fail_count: 0 };
        r.blurry = AEEStats { n: 3963, mean: 2.02, median: 0.09, std: 4.0, p90: 3.5, fail_count: 2 };
        r.all = AEEStats { n: 7926, mean: 1.77, median: 0.05, std: 3.6, p90: 3.1, fail_count: 2 };
        r
    }

    #[test]
    fn markdown_mean_row() {
        let md = render_report(&report(), ReportFormat::Markdown);
        assert!(md.contains("| Mean AEE | 1.52 | 2.02 | 1.77 |"), "{md}");
        assert!(md.contains("| Number of images | 3963 | 3963 | 7926 |"));
    }

    #[test]
    fn csv_round_trip() {
        let r = report();
        let rows = parse_csv_report(&render_report(&r, ReportFormat::Csv)).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], ("raw".to_string(), r.raw));
        assert_eq!(rows[1].1, r.blurry);
        assert_eq!(rows[2].1, r.all);
    }

    #[test]
    fn empty_report() {
        let md = render_report(&EvalReport::empty("baseline"), ReportFormat::Markdown);
        assert!(md.contains("| Number of images | 0 | 0 | 0 |"));
        assert!(!md.contains("Mean AEE"));
        let csv = render_report(&EvalReport::empty("baseline"), ReportFormat::Csv);
        assert_eq!(csv.lines().nth(3), Some("all,0,0.00,0.00,0.00,0.00,0"));
    }
}
