//! Built-in boundary-curve presets and named experiment setups.

use crate::curve::BoundaryCurve;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Circle of radius `r` in the plane `z = z0`, as a periodic spline with
/// `n` control points.
pub fn circle3d(r: f64, z0: f64, n: usize) -> BoundaryCurve {
    let mut pts = Vec::with_capacity(3 * n);
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        pts.extend_from_slice(&[r * t.cos(), r * t.sin(), z0]);
    }
    BoundaryCurve::new(3, pts).expect("circle preset is regular")
}

/// Circle of radius `r` in the plane `z = z0`, center shifted to `(dx, 0)`.
pub fn offset_circle3d(r: f64, z0: f64, dx: f64, n: usize) -> BoundaryCurve {
    let mut pts = Vec::with_capacity(3 * n);
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        pts.extend_from_slice(&[dx + r * t.cos(), r * t.sin(), z0]);
    }
    BoundaryCurve::new(3, pts).expect("offset circle preset is regular")
}

/// Axis-aligned ellipse with semiaxes `(a, b)` in the plane `z = z0`.
pub fn ellipse3d(a: f64, b: f64, z0: f64, n: usize) -> BoundaryCurve {
    let mut pts = Vec::with_capacity(3 * n);
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        pts.extend_from_slice(&[a * t.cos(), b * t.sin(), z0]);
    }
    BoundaryCurve::new(3, pts).expect("ellipse preset is regular")
}

const CONTROL_POINTS: usize = 64;

/// Names listed by `curves list`.
pub fn curve_preset_names() -> Vec<String> {
    vec![
        "circles r=1 sep=0.8".into(),
        "circles r=1 sep=2.4".into(),
        "offset-circles r=1 sep=1.2 shift=0.3".into(),
        "ellipses a=1.4 b=0.8 sep=1".into(),
    ]
}

fn parse_kv(tok: &str, key: &str) -> Option<f64> {
    tok.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.parse().ok())
}

/// Build the curve pair `(plus, minus)` named by a preset string such as
/// `"circles r=1 sep=0.8"`.
pub fn curve_preset(name: &str) -> Result<(BoundaryCurve, BoundaryCurve)> {
    let mut toks = name.split_whitespace();
    let kind = toks.next().unwrap_or("");
    let rest: Vec<&str> = toks.collect();
    let get = |key: &str| -> Option<f64> { rest.iter().find_map(|t| parse_kv(t, key)) };
    match kind {
        "circles" => {
            let r = get("r").unwrap_or(1.0);
            let sep = get("sep").unwrap_or(1.0);
            Ok((
                circle3d(r, sep / 2.0, CONTROL_POINTS),
                circle3d(r, -sep / 2.0, CONTROL_POINTS),
            ))
        }
        "offset-circles" => {
            let r = get("r").unwrap_or(1.0);
            let sep = get("sep").unwrap_or(1.0);
            let shift = get("shift").unwrap_or(0.3);
            Ok((
                offset_circle3d(r, sep / 2.0, shift, CONTROL_POINTS),
                circle3d(r, -sep / 2.0, CONTROL_POINTS),
            ))
        }
        "ellipses" => {
            let a = get("a").unwrap_or(1.4);
            let b = get("b").unwrap_or(0.8);
            let sep = get("sep").unwrap_or(1.0);
            Ok((
                ellipse3d(a, b, sep / 2.0, CONTROL_POINTS),
                ellipse3d(a, b, -sep / 2.0, CONTROL_POINTS),
            ))
        }
        other => Err(Error::Usage(format!("unknown curve preset '{other}'"))),
    }
}
