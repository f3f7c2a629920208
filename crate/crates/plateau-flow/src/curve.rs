//! Closed boundary curves as periodic cubic splines.
//!
//! A curve is stored as `N` control points in `R^n` interpolated by a C^2
//! periodic cubic spline over uniform knots `t_k = 2 pi k / N`. The file
//! format is one control point per line after a header `n=<dim> period=2pi`.

use crate::{Error, Result};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub dim: usize,
    /// Control points, row-major `N x dim`.
    points: Vec<f64>,
    /// Spline second derivatives at the knots, row-major `N x dim`.
    m: Vec<f64>,
    n: usize,
}

/// Solve the cyclic tridiagonal system with constant bands `(1, 4, 1)`
/// (Sherman-Morrison around a plain Thomas sweep).
fn solve_cyclic_141(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    assert!(n >= 3);
    let gamma = -4.0;
    let mut diag = vec![4.0; n];
    diag[0] = 4.0 - gamma;
    diag[n - 1] = 4.0 - 1.0 / gamma;

    let thomas = |diag: &[f64], rhs: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut beta = diag[0];
        x[0] = rhs[0] / beta;
        for i in 1..n {
            c[i] = 1.0 / beta;
            beta = diag[i] - c[i];
            x[i] = (rhs[i] - x[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= c[i + 1] * next;
        }
        x
    };

    let y = thomas(&diag, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = 1.0;
    let z = thomas(&diag, &u);
    let factor = (y[0] + y[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect()
}

impl BoundaryCurve {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParam("curve dimension must be positive".into()));
        }
        if points.is_empty() || points.len() % dim != 0 {
            return Err(Error::InvalidParam("control point array size not a multiple of dim".into()));
        }
        let n = points.len() / dim;
        if n < 4 {
            return Err(Error::InvalidParam(format!("need at least 4 control points, got {n}")));
        }
        let h = 2.0 * PI / n as f64;
        let mut m = vec![0.0; n * dim];
        let mut rhs = vec![0.0; n];
        for d in 0..dim {
            for k in 0..n {
                let prev = points[((k + n - 1) % n) * dim + d];
                let here = points[k * dim + d];
                let next = points[((k + 1) % n) * dim + d];
                rhs[k] = 6.0 * (prev - 2.0 * here + next) / (h * h);
            }
            let sol = solve_cyclic_141(&rhs);
            for k in 0..n {
                m[k * dim + d] = sol[k];
            }
        }
        let curve = Self { dim, points, m, n };
        // Regularity: the parametrization must have nonvanishing speed.
        let mut min_speed = f64::INFINITY;
        for i in 0..4 * n {
            let t = 2.0 * PI * i as f64 / (4 * n) as f64;
            let mut der = vec![0.0; dim];
            curve.deriv(t, &mut der);
            min_speed = min_speed.min(der.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        if min_speed < 1e-10 {
            return Err(Error::InvalidParam(format!(
                "curve is not regular: min |alpha'| = {min_speed}"
            )));
        }
        Ok(curve)
    }

    pub fn control_count(&self) -> usize {
        self.n
    }

    fn locate(&self, theta: f64) -> (usize, usize, f64, f64) {
        let h = 2.0 * PI / self.n as f64;
        let t = theta.rem_euclid(2.0 * PI);
        let mut k = (t / h) as usize;
        if k >= self.n {
            k = self.n - 1;
        }
        (k, (k + 1) % self.n, t - k as f64 * h, h)
    }

    /// Evaluate `alpha(theta)` into `out`.
    pub fn eval(&self, theta: f64, out: &mut [f64]) {
        let (k, k1, tau, h) = self.locate(theta);
        let a = h - tau;
        for d in 0..self.dim {
            let (p0, p1) = (self.points[k * self.dim + d], self.points[k1 * self.dim + d]);
            let (m0, m1) = (self.m[k * self.dim + d], self.m[k1 * self.dim + d]);
            out[d] = m0 * a * a * a / (6.0 * h)
                + m1 * tau * tau * tau / (6.0 * h)
                + (p0 / h - m0 * h / 6.0) * a
                + (p1 / h - m1 * h / 6.0) * tau;
        }
    }

    /// Evaluate `alpha'(theta)` into `out`.
    pub fn deriv(&self, theta: f64, out: &mut [f64]) {
        let (k, k1, tau, h) = self.locate(theta);
        let a = h - tau;
        for d in 0..self.dim {
            let (p0, p1) = (self.points[k * self.dim + d], self.points[k1 * self.dim + d]);
            let (m0, m1) = (self.m[k * self.dim + d], self.m[k1 * self.dim + d]);
            out[d] = -m0 * a * a / (2.0 * h) + m1 * tau * tau / (2.0 * h) - (p0 / h - m0 * h / 6.0)
                + (p1 / h - m1 * h / 6.0);
        }
    }

    pub fn eval_vec(&self, theta: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(theta, &mut out);
        out
    }

    pub fn deriv_vec(&self, theta: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.deriv(theta, &mut out);
        out
    }

    /// Write in the plain-text exchange format.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut s = format!("n={} period=2pi\n", self.dim);
        for k in 0..self.n {
            let row: Vec<String> = (0..self.dim)
                .map(|d| format!("{:.17e}", self.points[k * self.dim + d]))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        std::fs::write(path, s)?;
        Ok(())
    }

    /// Parse the plain-text exchange format.
    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Config { line: 1, msg: "empty curve file".into() })?;
        let mut dim = None;
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("n=") {
                dim = Some(v.parse::<usize>().map_err(|_| Error::Config {
                    line: 1,
                    msg: format!("bad dimension token '{tok}'"),
                })?);
            } else if tok != "period=2pi" {
                return Err(Error::Config { line: 1, msg: format!("unexpected header token '{tok}'") });
            }
        }
        let dim = dim.ok_or(Error::Config { line: 1, msg: "missing n=<dim> in header".into() })?;
        let mut points = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Config {
                        line: idx + 1,
                        msg: format!("bad float '{t}'"),
                    })
                })
                .collect::<Result<_>>()?;
            if vals.len() != dim {
                return Err(Error::Config {
                    line: idx + 1,
                    msg: format!("expected {dim} floats, got {}", vals.len()),
                });
            }
            points.extend_from_slice(&vals);
        }
        Self::new(dim, points)
    }
}

/// Minimal distance between two disjoint closed curves, by dense sampling
/// with local refinement around the best pair.
pub fn delta_gamma(c1: &BoundaryCurve, c2: &BoundaryCurve) -> Result<f64> {
    if c1.dim != c2.dim {
        return Err(Error::InvalidParam("curves live in different ambient dimensions".into()));
    }
    let coarse = 512usize;
    let mut p1 = vec![0.0; c1.dim];
    let mut p2 = vec![0.0; c2.dim];
    let s1: Vec<Vec<f64>> = (0..coarse)
        .map(|i| c1.eval_vec(2.0 * PI * i as f64 / coarse as f64))
        .collect();
    let s2: Vec<Vec<f64>> = (0..coarse)
        .map(|i| c2.eval_vec(2.0 * PI * i as f64 / coarse as f64))
        .collect();
    let mut best = (f64::INFINITY, 0.0f64, 0.0f64);
    for (i, a) in s1.iter().enumerate() {
        for (j, b) in s2.iter().enumerate() {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            if d2 < best.0 {
                best = (d2, 2.0 * PI * i as f64 / coarse as f64, 2.0 * PI * j as f64 / coarse as f64);
            }
        }
    }
    let mut window = 2.0 * PI / coarse as f64;
    let (mut t1, mut t2) = (best.1, best.2);
    let mut best_d2 = best.0;
    for _ in 0..6 {
        let m = 16;
        for i in 0..=m {
            let a = t1 - window + 2.0 * window * i as f64 / m as f64;
            c1.eval(a, &mut p1);
            for j in 0..=m {
                let b = t2 - window + 2.0 * window * j as f64 / m as f64;
                c2.eval(b, &mut p2);
                let d2: f64 = p1.iter().zip(&p2).map(|(x, y)| (x - y) * (x - y)).sum();
                if d2 < best_d2 {
                    best_d2 = d2;
                    t1 = a;
                    t2 = b;
                }
            }
        }
        window /= 8.0;
    }
    let dist = best_d2.sqrt();
    if dist < 1e-9 {
        return Err(Error::InvalidParam("boundary curves are not disjoint".into()));
    }
    Ok(dist)
}
