//! CSV and JSON serialisation of estimates, series and spectra. Every file
//! starts with a `#` provenance comment line.

use std::io::Write;

use serde::Serialize;

use super::cover::CoverProxy;
use super::scale::ScaleSeries;
use super::slope::DimensionEstimate;
use super::spectrum::SpectrumCurve;
use crate::provenance::Provenance;
use crate::serde_ext::csv_f64;

pub const ESTIMATE_HEADER: &str = "q,kind,lower,ols,upper,stderr,r_max,r_min,proxy";

pub fn write_estimates_csv(
    out: &mut impl Write,
    prov: &Provenance,
    estimates: &[DimensionEstimate],
) -> std::io::Result<()> {
    writeln!(out, "{}", prov.comment_line(&[]))?;
    writeln!(out, "{ESTIMATE_HEADER}")?;
    for e in estimates {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            csv_f64(e.q),
            e.kind.as_str(),
            csv_f64(e.lower),
            csv_f64(e.ols),
            csv_f64(e.upper),
            csv_f64(e.stderr),
            csv_f64(e.r_max),
            csv_f64(e.r_min),
            e.proxy
        )?;
    }
    Ok(())
}

/// Cover proxies in the estimate layout: `lower = ols = upper = value`,
/// radii from the widest surviving depth.
pub fn write_proxies_csv(
    out: &mut impl Write,
    prov: &Provenance,
    proxies: &[CoverProxy],
) -> std::io::Result<()> {
    writeln!(out, "{}", prov.comment_line(&[]))?;
    writeln!(out, "{ESTIMATE_HEADER}")?;
    for p in proxies {
        let v = csv_f64(p.value);
        writeln!(out, "{},{},{v},{v},{v},nan,nan,nan,{}", csv_f64(p.q), p.kind.as_str(), p.proxy)?;
    }
    Ok(())
}

pub fn write_series_csv(
    out: &mut impl Write,
    prov: &Provenance,
    series: &[ScaleSeries],
) -> std::io::Result<()> {
    writeln!(out, "{}", prov.comment_line(&[]))?;
    writeln!(out, "q,r,value")?;
    for s in series {
        for p in &s.samples {
            writeln!(out, "{},{},{}", csv_f64(s.q), csv_f64(p.r), csv_f64(p.value))?;
        }
    }
    Ok(())
}

pub fn write_spectrum_csv(
    out: &mut impl Write,
    prov: &Provenance,
    curve: &SpectrumCurve,
) -> std::io::Result<()> {
    writeln!(
        out,
        "{}",
        prov.comment_line(&[
            ("alpha_min", csv_f64(curve.domain.0)),
            ("alpha_max", csv_f64(curve.domain.1)),
        ])
    )?;
    writeln!(out, "alpha,f")?;
    for p in &curve.points {
        writeln!(out, "{},{}", csv_f64(p.alpha), csv_f64(p.f))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

/// `{"meta": provenance, ...body}` as pretty JSON with a trailing newline.
pub fn to_json_with_meta<T: Serialize>(prov: &Provenance, body: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { meta: prov, body })?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::slope::EstimateKind;

    #[test]
    fn estimate_rows() {
        let e = DimensionEstimate {
            q: 2.0,
            kind: EstimateKind::BoxPacking,
            lower: f64::NEG_INFINITY,
            ols: f64::NEG_INFINITY,
            upper: f64::NEG_INFINITY,
            stderr: 0.0,
            r_max: 0.5,
            r_min: 0.0625,
            samples: 4,
            proxy: false,
            sentinel: true,
        };
        let mut buf = Vec::new();
        write_estimates_csv(&mut buf, &Provenance::default(), &[e]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tool=mfdim"));
        assert_eq!(lines[1], ESTIMATE_HEADER);
        assert_eq!(lines[2], "2,box-packing,-inf,-inf,-inf,0,0.5,0.0625,false");
    }
}
