//! Measure CSV: `x1,...,xn,weight`, one atom per row, preceded by a `#`
//! provenance comment.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::provenance::{comment_field, Provenance};

/// Header data accompanying a measure file.
#[derive(Debug, Clone, Default)]
pub struct MeasureCsvHeader {
    pub provenance: Provenance,
}

pub fn write_measure_csv(
    mu: &DiscreteMeasure,
    header: &MeasureCsvHeader,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(
        out,
        "{}",
        header
            .provenance
            .comment_line(&[("resolution", format!("{}", mu.resolution()))])
    )?;
    let names: Vec<String> = (1..=mu.dim()).map(|k| format!("x{k}")).collect();
    writeln!(out, "{},weight", names.join(","))?;
    let mut line = String::new();
    for (p, w) in mu.atoms() {
        line.clear();
        for c in p {
            line.push_str(&format!("{c},"));
        }
        line.push_str(&format!("{w}"));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parses a measure CSV. A `resolution=` field in a comment line is carried
/// over to the measure.
pub fn read_measure_csv(path: &Path) -> Result<DiscreteMeasure> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_measure_csv(&text)
}

pub(crate) fn parse_measure_csv(text: &str) -> Result<DiscreteMeasure> {
    let mut resolution = None;
    for line in text.lines().filter(|l| l.starts_with('#')) {
        if let Some(v) = comment_field(line, "resolution") {
            resolution = v.parse::<f64>().ok().filter(|r| r.is_finite() && *r > 0.0);
        }
    }
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    let cols = headers.len();
    if cols < 2 || &headers[cols - 1] != "weight" {
        return Err(Error::validation(
            "measure csv: header must be x1,...,xn,weight",
        ));
    }
    for (k, h) in headers.iter().take(cols - 1).enumerate() {
        if h != format!("x{}", k + 1) {
            return Err(Error::validation(format!(
                "measure csv: column {} is '{h}', expected 'x{}'",
                k + 1,
                k + 1
            )));
        }
    }
    let dim = cols - 1;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::validation(format!(
                "measure csv: row {} has {} fields, expected {cols}",
                row + 1,
                rec.len()
            )));
        }
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::validation(format!(
                    "measure csv: row {} column {} is not a number: '{field}'",
                    row + 1,
                    k + 1
                ))
            })?;
            if k < dim {
                coords.push(v);
            } else {
                weights.push(v);
            }
        }
    }
    let mu = DiscreteMeasure::from_flat(dim, coords, weights)?;
    Ok(match resolution {
        Some(r) => mu.with_resolution(r),
        None => mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mu = DiscreteMeasure::from_atoms(
            2,
            vec![
                ([0.1, 1.0 / 3.0].into(), 0.3),
                ([-2.5, 1e-17].into(), 0.7),
            ],
        )
        .unwrap()
        .with_resolution(0.125);
        let mut buf = Vec::new();
        write_measure_csv(&mu, &MeasureCsvHeader::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap() == "x1,x2,weight");
        let back = parse_measure_csv(&text).unwrap();
        assert_eq!(back.coords(), mu.coords());
        assert_eq!(back.weights(), mu.weights());
        assert_eq!(back.resolution(), 0.125);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_measure_csv("x1,mass\n0,1\n").is_err());
        assert!(parse_measure_csv("x2,weight\n0,1\n").is_err());
        assert!(parse_measure_csv("x1,weight\n0,abc\n").is_err());
        assert!(parse_measure_csv("x1,weight\n0,0.5\n").is_err());
        let ok = parse_measure_csv("# note\nx1,weight\n0,0.5\n1,0.5\n").unwrap();
        assert_eq!(ok.len(), 2);
    }
}
