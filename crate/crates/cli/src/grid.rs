//! Parsers for the q/α-grid and scale-ladder command-line syntaxes.

use mfdim::estimators::ScaleSpec;

/// Endpoint slack of `start:step:end` grids.
const GRID_SLACK: f64 = 1e-12;
const MAX_GRID: usize = 100_000;

/// `start:step:end` (both ends inclusive within 1e-12), a comma list, or a
/// single value.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty grid".into());
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text.split(',').map(number).collect(),
        3 => {
            let (a, h, b) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
            if h == 0.0 {
                return Err(format!("grid '{text}': step must be nonzero"));
            }
            if (b - a) * h < 0.0 && (b - a).abs() > GRID_SLACK {
                return Err(format!("grid '{text}': step points away from the end"));
            }
            let slack = GRID_SLACK * b.abs().max(1.0);
            let nearest = ((b - a) / h).round();
            let hits_end = (a + nearest * h - b).abs() <= slack;
            let span = if hits_end { nearest } else { ((b - a) / h).floor() };
            if span + 1.0 > MAX_GRID as f64 {
                return Err(format!("grid '{text}' has more than {MAX_GRID} points"));
            }
            let mut out: Vec<f64> = (0..=span.max(0.0) as usize)
                .map(|k| a + k as f64 * h)
                .collect();
            if hits_end {
                *out.last_mut().expect("nonempty") = b;
            }
            for v in &mut out {
                if v.abs() < GRID_SLACK * h.abs() {
                    *v = 0.0;
                }
            }
            Ok(out)
        }
        _ => Err(format!("grid '{text}': expected start:step:end or a comma list")),
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{}' is not a number", s.trim()))?;
    if !v.is_finite() {
        return Err(format!("'{}' is not finite", s.trim()));
    }
    Ok(v)
}

/// `default`, `ladder:BASE:FROM:TO[:STEPS][:abs]`, `radii:R1,R2,...`, or a
/// JSON scale spec.
pub fn parse_scales(text: &str) -> Result<ScaleSpec, String> {
    let text = text.trim();
    if text.starts_with('{') {
        return serde_json::from_str(text).map_err(|e| e.to_string());
    }
    if text == "default" {
        return Ok(ScaleSpec::Default);
    }
    if let Some(list) = text.strip_prefix("radii:") {
        let radii = list.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        return Ok(ScaleSpec::Radii { radii });
    }
    if let Some(rest) = text.strip_prefix("ladder:") {
        let mut parts: Vec<&str> = rest.split(':').collect();
        let relative = if parts.last() == Some(&"abs") {
            parts.pop();
            false
        } else {
            true
        };
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("ladder '{text}': expected ladder:BASE:FROM:TO[:STEPS][:abs]"));
        }
        let steps = match parts.get(3) {
            Some(s) => s.trim().parse().map_err(|_| format!("ladder steps '{s}' is not a positive integer"))?,
            None => 1,
        };
        return Ok(ScaleSpec::Ladder {
            base: number(parts[0])?,
            from: number(parts[1])?,
            to: number(parts[2])?,
            steps,
            relative,
        });
    }
    Err(format!("unrecognised scale spec '{text}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_grids() {
        assert_eq!(parse_grid("-2:0.5:3").unwrap().len(), 11);
        let g = parse_grid("0:0.1:1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], 1.0);
        assert_eq!(parse_grid("3:-1:1").unwrap(), vec![3.0, 2.0, 1.0]);
        assert_eq!(parse_grid("0,0.5,2").unwrap(), vec![0.0, 0.5, 2.0]);
        assert_eq!(parse_grid("1.5").unwrap(), vec![1.5]);
        assert_eq!(parse_grid("-0.3:0.1:0.3").unwrap()[3], 0.0);
        assert!(parse_grid("0:0:1").is_err());
        assert!(parse_grid("0:-1:1").is_err());
        assert!(parse_grid("a").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn scale_specs() {
        assert_eq!(parse_scales("default").unwrap(), ScaleSpec::Default);
        assert_eq!(
            parse_scales("ladder:2:3:10:1:abs").unwrap(),
            ScaleSpec::Ladder { base: 2.0, from: 3.0, to: 10.0, steps: 1, relative: false }
        );
        assert_eq!(parse_scales("ladder:3:2:8").unwrap(), ScaleSpec::ladder(3.0, 2.0, 8.0, 1));
        assert_eq!(
            parse_scales("radii:0.1,0.05").unwrap(),
            ScaleSpec::Radii { radii: vec![0.1, 0.05] }
        );
        assert_eq!(
            parse_scales(r#"{"type":"ladder","from":5,"to":7,"steps":2}"#).unwrap(),
            ScaleSpec::ladder(2.0, 5.0, 7.0, 2)
        );
        assert!(parse_scales("nope").is_err());
    }
}
