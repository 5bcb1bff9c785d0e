//! Standalone SVG plots of the CSV files the other subcommands write.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use mfdim::estimators::ESTIMATE_HEADER;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];
/// Atoms drawn in a measure scatter plot; larger files are thinned evenly.
const MAX_DOTS: usize = 20_000;

/// CSV kinds recognised by their header row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Estimates,
    Series,
    Spectrum,
    Measure(usize),
}

struct Table {
    kind: CsvKind,
    comment: Option<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse(text: &str) -> Result<Table, String> {
    let comment = text.lines().find(|l| l.starts_with('#')).map(str::to_string);
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or("csv has no header row")?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let kind = match header.trim() {
        h if h == ESTIMATE_HEADER => CsvKind::Estimates,
        "q,r,value" => CsvKind::Series,
        "alpha,f" => CsvKind::Spectrum,
        _ => {
            let n = columns.len().saturating_sub(1);
            let coords_ok = n >= 1 && (0..n).all(|k| columns[k] == format!("x{}", k + 1));
            if coords_ok && columns[n] == "weight" {
                CsvKind::Measure(n)
            } else {
                return Err(format!("unrecognised csv header '{header}'"));
            }
        }
    };
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect();
    if let Some((k, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != columns.len()) {
        return Err(format!("row {} has {} fields, expected {}", k + 1, r.len(), columns.len()));
    }
    Ok(Table {
        kind,
        comment,
        columns,
        rows,
    })
}

impl Table {
    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).expect("column checked by kind")
    }

    fn num(&self, row: &[String], name: &str) -> Result<f64, String> {
        let s = &row[self.col(name)];
        s.parse().map_err(|_| format!("column {name}: '{s}' is not a number"))
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    line: bool,
    /// Palette slot; related series share a colour.
    group: usize,
}

struct Figure {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    radius: f64,
}

/// Renders a CSV produced by `estimate`, `spectrum`, `gen` or `project`.
pub fn render(csv: &str) -> Result<(CsvKind, String), String> {
    let t = parse(csv)?;
    let fig = match t.kind {
        CsvKind::Estimates => tau_figure(&t)?,
        CsvKind::Series => moment_figure(&t)?,
        CsvKind::Spectrum => spectrum_figure(&t)?,
        CsvKind::Measure(n) => measure_figure(&t, n)?,
    };
    Ok((t.kind, svg(&fig, t.comment.as_deref())))
}

fn tau_figure(t: &Table) -> Result<Figure, String> {
    let mut by_kind: BTreeMap<String, Vec<[f64; 4]>> = BTreeMap::new();
    for r in &t.rows {
        let vals = [t.num(r, "q")?, t.num(r, "lower")?, t.num(r, "ols")?, t.num(r, "upper")?];
        by_kind.entry(r[t.col("kind")].clone()).or_default().push(vals);
    }
    let mut series = Vec::new();
    for (group, (kind, mut rows)) in by_kind.into_iter().enumerate() {
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let pick = |k: usize| rows.iter().filter(|v| v[k].is_finite()).map(|v| (v[0], v[k])).collect();
        series.push(Series { label: format!("{kind} ols"), points: pick(2), line: true, group });
        series.push(Series { label: format!("{kind} lower"), points: pick(1), line: false, group });
        series.push(Series { label: format!("{kind} upper"), points: pick(3), line: false, group });
    }
    Ok(Figure {
        title: "dimension function".into(),
        x_label: "q".into(),
        y_label: "tau(q)".into(),
        series,
        radius: 2.5,
    })
}

fn moment_figure(t: &Table) -> Result<Figure, String> {
    let mut by_q: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for r in &t.rows {
        let (q, radius, v) = (t.num(r, "q")?, t.num(r, "r")?, t.num(r, "value")?);
        if !(radius > 0.0 && v > 0.0) {
            continue;
        }
        let p = (-radius.ln(), v.ln());
        match by_q.iter_mut().find(|(qq, _)| *qq == q) {
            Some((_, pts)) => pts.push(p),
            None => by_q.push((q, vec![p])),
        }
    }
    Ok(Figure {
        title: "moment scaling".into(),
        x_label: "log(1/r)".into(),
        y_label: "log moment".into(),
        series: by_q
            .into_iter()
            .enumerate()
            .map(|(group, (q, mut points))| {
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series { label: format!("q={q}"), points, line: true, group }
            })
            .collect(),
        radius: 2.5,
    })
}

fn spectrum_figure(t: &Table) -> Result<Figure, String> {
    let mut points = Vec::new();
    for r in &t.rows {
        let (a, f) = (t.num(r, "alpha")?, t.num(r, "f")?);
        if f.is_finite() {
            points.push((a, f));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Figure {
        title: "multifractal spectrum".into(),
        x_label: "alpha".into(),
        y_label: "f(alpha)".into(),
        series: vec![Series { label: "f".into(), points, line: true, group: 0 }],
        radius: 2.5,
    })
}

fn measure_figure(t: &Table, n: usize) -> Result<Figure, String> {
    let stride = t.rows.len().div_ceil(MAX_DOTS).max(1);
    let mut points = Vec::new();
    for r in t.rows.iter().step_by(stride) {
        let w = t.num(r, "weight")?;
        let x = t.num(r, "x1")?;
        let y = if n >= 2 { t.num(r, "x2")? } else { w };
        points.push((x, y));
    }
    let (x_label, y_label) = if n >= 2 { ("x1", "x2") } else { ("x1", "weight") };
    Ok(Figure {
        title: if n > 2 { "measure (first two coordinates)".into() } else { "measure".into() },
        x_label: x_label.into(),
        y_label: y_label.into(),
        series: vec![Series { label: "atoms".into(), points, line: false, group: 0 }],
        radius: if t.rows.len() > 2000 { 0.6 } else { 1.5 },
    })
}

fn extent(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.5;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg(fig: &Figure, comment: Option<&str>) -> String {
    let all = || fig.series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = extent(all().map(|p| p.0));
    let (y0, y1) = extent(all().map(|p| p.1));
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    if let Some(c) = comment {
        let _ = writeln!(out, "<!-- {} -->", escape(c.trim_start_matches('#').trim()).replace("--", "-"));
    }
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&fig.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 5.0,
            HEIGHT - MARGIN + 18.0,
            tick_label(t)
        );
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN - 5.0,
            MARGIN - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&fig.y_label)
    );

    for s in &fig.series {
        let colour = PALETTE[s.group % PALETTE.len()];
        let label = escape(&s.label);
        if s.line && s.points.len() >= 2 {
            let pts: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
            let _ = writeln!(
                out,
                r#"<polyline class="curve" data-label="{label}" fill="none" stroke="{colour}" stroke-width="1.8" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let _ = write!(out, r#"<g class="markers" data-label="{label}" fill="{colour}">"#);
        for p in &s.points {
            let _ = write!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="{}"/>"#, sx(p.0), sy(p.1), fig.radius);
        }
        let _ = writeln!(out, "</g>");
    }
    if fig.series.len() > 1 && fig.series.len() <= 12 {
        for (k, s) in fig.series.iter().enumerate() {
            let colour = PALETTE[s.group % PALETTE.len()];
            let y = MARGIN + 14.0 + 15.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" fill="{colour}">{}</text>"#,
                WIDTH - MARGIN - 8.0,
                escape(&s.label)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_plot() {
        let csv = format!(
            "# tool=mfdim\n{ESTIMATE_HEADER}\n0,box-packing,1,1,1,0,0.1,0.01,false\n1,box-packing,0,0,0,0,0.1,0.01,false\n2,box-packing,-1,-1,-1,0,0.1,0.01,false\n"
        );
        let (kind, svg) = render(&csv).unwrap();
        assert_eq!(kind, CsvKind::Estimates);
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
        assert!(svg.contains("<!-- tool=mfdim -->"));
    }

    #[test]
    fn measure_and_errors() {
        assert_eq!(render("x1,x2,weight\n0,0,0.5\n1,1,0.5\n").unwrap().0, CsvKind::Measure(2));
        assert!(render("a,b\n1,2\n").is_err());
        assert!(render("alpha,f\n1\n").is_err());
        assert!(render("alpha,f\n1,x\n").is_err());
    }

    #[test]
    fn nice_ticks() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(tick_label(0.6000000000000001), "0.6");
    }
}
