//! Physical quantities with mandatory unit suffixes.
//!
//! Times are normalised to ns and rates to 1/ns. The magnitude may be a
//! plain number or a fraction such as `1/60`.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Rate,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Time => "time (ns, us, ms, s)",
            Dimension::Rate => "rate (1/ns, 1/us, 1/ms, 1/s)",
        })
    }
}

fn time_scale(unit: &str) -> Option<f64> {
    Some(match unit {
        "ps" => 1e-3,
        "ns" => 1.0,
        "us" | "µs" | "μs" => 1e3,
        "ms" => 1e6,
        "s" => 1e9,
        _ => return None,
    })
}

fn magnitude(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
            (b != 0.0).then_some(a / b)
        }
        None => s.trim().parse().ok(),
    }
}

fn unit_scale(unit: &str, dim: Dimension) -> Option<f64> {
    match dim {
        Dimension::Time => time_scale(unit),
        Dimension::Rate => unit.strip_prefix("1/").or_else(|| unit.strip_prefix('/')).and_then(time_scale).map(|s| 1.0 / s),
    }
}

/// Parses `"<magnitude> <unit>"` into ns (time) or 1/ns (rate). Without a
/// space the first split that yields a number and a known unit is taken.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let t = text.trim();
    let parsed = match t.rfind(char::is_whitespace) {
        Some(i) => {
            let (num, unit) = (&t[..i], t[i..].trim());
            let scale = unit_scale(unit, dim).ok_or_else(|| format!("'{unit}' is not a {dim}"))?;
            (magnitude(num).ok_or_else(|| format!("cannot read a number from '{num}' in '{text}'"))?, scale)
        }
        None => t
            .char_indices()
            .skip(1)
            .find_map(|(i, _)| Some((magnitude(&t[..i])?, unit_scale(&t[i..], dim)?)))
            .ok_or_else(|| format!("'{text}' is not a number followed by a {dim}"))?,
    };
    let v = parsed.0 * parsed.1;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("'{text}' must be finite and nonnegative"));
    }
    Ok(v)
}

/// Renders ns as `"<x> ns"` for manifests.
pub fn format_time(ns: f64) -> String {
    format!("{ns} ns")
}

/// Renders 1/ns as `"<x> 1/us"` for manifests.
pub fn format_rate(per_ns: f64) -> String {
    format!("{} 1/us", per_ns * 1e3)
}
