//! Point-pattern files and CSV reports.
//!
//! A pattern file starts with `# dim=<d> side=<L>` followed by one point per
//! line, coordinates separated by commas.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::spatial::{Point, PointPattern, Window, MAX_DIM};

/// Shortest-round-trip formatting is not fixed-width; 17 significant
/// digits in scientific notation round-trip exactly and are stable.
pub fn fmt_coord(v: f64) -> String {
    format!("{v:.16e}")
}

/// Report values: finite numbers round-trip, non-finite spelled out.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_pattern(pattern: &PointPattern, mut out: impl Write) -> Result<()> {
    let dim = pattern.dim();
    writeln!(out, "# dim={} side={}", dim, fmt_coord(pattern.window().side()))?;
    for p in pattern.points() {
        let line: Vec<String> = p.coords(dim).iter().map(|&c| fmt_coord(c)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<Window> {
    let bad = |msg: &str| Error::Parse { line: 1, msg: msg.to_string() };
    let body = line.trim().strip_prefix('#').ok_or_else(|| bad("expected header `# dim=<d> side=<L>`"))?;
    let mut dim = None;
    let mut side = None;
    for tok in body.split_whitespace() {
        match tok.split_once('=') {
            Some(("dim", v)) => dim = Some(v.parse::<usize>().map_err(|_| bad("bad dim"))?),
            Some(("side", v)) => side = Some(v.parse::<f64>().map_err(|_| bad("bad side"))?),
            _ => return Err(bad(&format!("unexpected header token {tok:?}"))),
        }
    }
    let (dim, side) = dim.zip(side).ok_or_else(|| bad("header needs both dim and side"))?;
    Window::new(dim, side).map_err(|e| bad(&e.to_string()))
}

/// Reads a pattern file; the index is built for queries up to `reach`.
pub fn read_pattern(input: impl BufRead, reach: f64) -> Result<PointPattern> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })??;
    let window = parse_header(&header)?;
    let dim = window.dim();
    let mut points = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut c = [0.0; MAX_DIM];
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != dim {
            return Err(Error::Parse { line: lineno, msg: format!("expected {dim} coordinates, got {}", fields.len()) });
        }
        for (slot, f) in c.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad number {f:?}") })?;
        }
        points.push(Point(c));
    }
    PointPattern::new(window, points, reach)
}

pub const ESTIMATE_COLUMNS: [&str; 7] = ["r", "R_hat", "J_hat", "beta_hat", "phi_hat", "gamma_hat", "flags"];

pub fn write_estimate(report: &EstimateReport, out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(ESTIMATE_COLUMNS)?;
    for row in &report.rows {
        w.write_record([
            fmt_value(row.r),
            fmt_value(row.r_hat),
            fmt_value(row.j_hat),
            fmt_value(report.beta_hat),
            fmt_value(row.phi_hat),
            fmt_value(row.gamma_hat),
            row.flags.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::sample_poisson;
    use proptest::prelude::*;

    #[test]
    fn header_and_errors() {
        let text = "# dim=2 side=10\n1.5,2.5\n\n3,4\n";
        let p = read_pattern(text.as_bytes(), 1.0).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.points()[1], Point::new(&[3.0, 4.0]));
        assert!(read_pattern("dim=2 side=10\n".as_bytes(), 1.0).is_err());
        assert!(read_pattern("# dim=2\n".as_bytes(), 1.0).is_err());
        assert!(matches!(
            read_pattern("# dim=2 side=10\n1,2,3\n".as_bytes(), 1.0),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_pattern("# dim=2 side=10\n11,2\n".as_bytes(), 1.0).is_err());
    }

    #[test]
    fn written_coordinates_carry_enough_digits() {
        let w = Window::new(2, 10.0).unwrap();
        let p = PointPattern::new(w, vec![Point::new(&[0.5, 1.0 / 3.0])], 1.0).unwrap();
        let mut buf = Vec::new();
        write_pattern(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        for field in line.split(',') {
            let mantissa = field.split('e').next().unwrap().replace(['.', '-'], "");
            assert!(mantissa.len() >= 12, "{field}");
        }
    }

    proptest! {
        #[test]
        fn pattern_file_round_trips(seed in any::<u64>(), dim in 1usize..=3, side in 1.0f64..50.0) {
            let w = Window::new(dim, side).unwrap();
            let p = sample_poisson(&w, 20.0 / w.volume(), seed).unwrap();
            let mut buf = Vec::new();
            write_pattern(&p, &mut buf).unwrap();
            let back = read_pattern(buf.as_slice(), 1.0).unwrap();
            prop_assert_eq!(back.window(), p.window());
            prop_assert_eq!(back.points(), p.points());
        }
    }
}
