//! CSV output of experiment reports.

use std::io::Write;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::experiment::{ExperimentReport, ReportRow, RunStatus};

pub const HEADER: [&str; 9] = [
    "algorithm",
    "seed",
    "checkpoint",
    "mean_err_truth",
    "mean_err_mle",
    "band_fraction",
    "update_messages",
    "control_messages",
    "classification_error",
];

/// Formats a float rounded to 9 significant digits, in the shortest form
/// that reads back to the rounded value.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn record(row: &ReportRow) -> [String; 9] {
    [
        row.algorithm.to_string(),
        row.seed.to_string(),
        row.checkpoint.to_string(),
        format_sig9(row.mean_err_truth),
        format_sig9(row.mean_err_mle),
        format_sig9(row.band_fraction),
        format_sig9(row.update_messages),
        format_sig9(row.control_messages),
        row.classification_error.map(format_sig9).unwrap_or_default(),
    ]
}

/// Writes the header, one record per row, and for a failed run a trailing
/// `# status: failed: …` comment line.
pub fn write_report<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(HEADER)?;
    for row in &report.rows {
        writer.write_record(record(row))?;
    }
    writer.flush().map_err(|e| HarnessError::io("<report>", e))?;
    let mut out = writer.into_inner().map_err(|e| HarnessError::io("<report>", e.into_error()))?;
    if let RunStatus::Failed { message, .. } = &report.status {
        writeln!(out, "# status: failed: {}", message.replace('\n', " ")).map_err(|e| HarnessError::io("<report>", e))?;
    }
    Ok(())
}

pub fn emit_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut buffered = std::io::BufWriter::new(file);
    write_report(report, &mut buffered)?;
    buffered.flush().map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::RunLabel;
    use bnmon_core::Algorithm;

    fn row(seed: RunLabel) -> ReportRow {
        ReportRow {
            algorithm: Algorithm::NonUniform,
            seed,
            checkpoint: 10_000,
            mean_err_truth: 0.123456789123,
            mean_err_mle: 1.0 / 3.0,
            band_fraction: 1.0,
            update_messages: 3_700_000.0,
            control_messages: 0.0,
            classification_error: None,
        }
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.123456789123), "0.123456789");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(3_700_000.0), "3700000");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(123_456_789_012.0), "123456789000");
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_report(&ExperimentReport::empty("x"), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), HEADER.join(",") + "\n");
    }

    #[test]
    fn rows_and_failure_marker() {
        let mut report = ExperimentReport::empty("x");
        report.rows.push(row(RunLabel::Seed(7)));
        report.rows.push(row(RunLabel::Median));
        report.status = RunStatus::Failed {
            exit_code: 2,
            message: "too many counters".into(),
        };
        let mut buf = Vec::new();
        write_report(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "nonuniform,7,10000,0.123456789,0.333333333,1,3700000,0,");
        assert!(lines[2].starts_with("nonuniform,median,"));
        assert_eq!(lines[3], "# status: failed: too many counters");
    }
}
