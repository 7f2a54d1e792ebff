//! Serialization of matrices, reports, and tidy records to CSV.
//!
//! All numbers are printed with 12 significant digits — enough to make
//! independent runs comparable value-for-value, without drowning output
//! in floating-point noise.

use std::io::Write;

use crate::analysis::ImportanceReport;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::simulation::{EffectRecord, SummaryRecord};

/// Significant digits used by every exporter.
pub const EXPORT_DIGITS: usize = 12;

/// Format with a fixed number of significant digits, choosing fixed or
/// scientific notation like `%g` and trimming trailing zeros.
pub fn format_significant(value: f64, digits: usize) -> String {
    assert!(digits >= 1, "need at least one significant digit");
    if value == 0.0 {
        return "0".to_owned();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let exponent = value.abs().log10().floor() as i32;
    if exponent < -4 || exponent >= digits as i32 {
        let formatted = format!("{:.*e}", digits - 1, value);
        // "1.50000000000e3" -> "1.5e3"
        match formatted.split_once('e') {
            Some((mantissa, exp)) => {
                let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
                format!("{mantissa}e{exp}")
            }
            None => formatted,
        }
    } else {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        let formatted = format!("{value:.decimals$}");
        if formatted.contains('.') {
            formatted
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_owned()
        } else {
            formatted
        }
    }
}

fn sig(value: f64) -> String {
    format_significant(value, EXPORT_DIGITS)
}

/// Write a distance matrix as a square CSV: a header row of observation
/// indices, then one row of distances per observation.
pub fn write_square_csv<W: Write>(d: &Matrix, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let header: Vec<String> = (0..d.cols()).map(|l| l.to_string()).collect();
    out.write_record(&header)?;
    for i in 0..d.rows() {
        let row: Vec<String> = d.row(i).iter().map(|&v| sig(v)).collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Write the upper triangle of a distance matrix in row-major order:
/// a `n,<rows>` header line, a `value` column header, then one distance
/// per line for the pairs (0,1), (0,2), …, (n−2,n−1).
pub fn write_condensed_csv<W: Write>(d: &Matrix, mut writer: W) -> Result<()> {
    writeln!(writer, "n,{}", d.rows())?;
    writeln!(writer, "value")?;
    for i in 0..d.rows() {
        for l in (i + 1)..d.cols() {
            writeln!(writer, "{}", sig(d[(i, l)]))?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Write a coordinate matrix as CSV with dim1..dimk headers.
pub fn write_coordinates_csv<W: Write>(coordinates: &Matrix, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let header: Vec<String> = (1..=coordinates.cols())
        .map(|c| format!("dim{c}"))
        .collect();
    out.write_record(&header)?;
    for i in 0..coordinates.rows() {
        let row: Vec<String> = coordinates.row(i).iter().map(|&v| sig(v)).collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Write an importance report as tidy CSV: variable, absolute, relative,
/// metric.
pub fn write_importance_csv<W: Write>(report: &ImportanceReport, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["variable", "absolute", "relative", "metric"])?;
    for entry in &report.entries {
        out.write_record([
            entry.variable.as_str(),
            &sig(entry.absolute),
            &sig(entry.relative),
            report.metric,
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Write tidy simulation records as CSV.
pub fn write_records_csv<W: Write>(records: &[EffectRecord], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["replication", "variant", "key", "metric", "value"])?;
    for r in records {
        out.write_record([
            r.replication.to_string().as_str(),
            &r.variant,
            &r.key,
            &r.metric,
            &sig(r.value),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Write per-cell summaries as CSV.
pub fn write_summaries_csv<W: Write>(summaries: &[SummaryRecord], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "variant", "key", "metric", "reps", "mean", "sd", "q1", "median", "q3",
    ])?;
    for s in summaries {
        out.write_record([
            s.variant.as_str(),
            &s.key,
            &s.metric,
            &s.reps.to_string(),
            &sig(s.mean),
            &sig(s.sd),
            &sig(s.q1),
            &sig(s.median),
            &sig(s.q3),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(1.0, 12), "1");
        assert_eq!(format_significant(2.5, 12), "2.5");
        assert_eq!(format_significant(-0.0001, 12), "-0.0001");
        assert_eq!(format_significant(1e-7, 12), "1e-7");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(123456789012345.0, 12), "1.23456789012e14");
        assert_eq!(format_significant(1000.0, 12), "1000");
        assert_eq!(format_significant(2.0_f64.sqrt(), 12), "1.41421356237");
        assert_eq!(format_significant(1.5, 3), "1.5");
        assert_eq!(format_significant(-2.0, 12), "-2");
    }

    #[test]
    fn square_csv_round_trips_through_a_reader() {
        let d = Matrix::from_rows(&[
            vec![0.0, 1.25, 2.0],
            vec![1.25, 0.0, 0.5],
            vec![2.0, 0.5, 0.0],
        ]);
        let mut buffer = Vec::new();
        write_square_csv(&d, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "0,1,2");
        assert_eq!(lines.next().unwrap(), "0,1.25,2");
        assert_eq!(lines.next().unwrap(), "1.25,0,0.5");
        assert_eq!(lines.next().unwrap(), "2,0.5,0");
    }

    #[test]
    fn condensed_csv_lists_the_upper_triangle_row_major() {
        let d = Matrix::from_rows(&[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ]);
        let mut buffer = Vec::new();
        write_condensed_csv(&d, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(text, "n,3\nvalue\n1\n2\n3\n");
    }

    #[test]
    fn records_csv_has_tidy_columns() {
        let records = vec![EffectRecord {
            replication: 0,
            variant: "gower".into(),
            key: "x1".into(),
            metric: "loo_abs".into(),
            value: 0.5,
        }];
        let mut buffer = Vec::new();
        write_records_csv(&records, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(
            text,
            "replication,variant,key,metric,value\n0,gower,x1,loo_abs,0.5\n"
        );
    }
}
