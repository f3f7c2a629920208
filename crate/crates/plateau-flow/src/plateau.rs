//! One map-update step of the time discretization: minimize
//! `F(w) = E(w, g) + ||w - v||^2_{L^2(g)} / (2h)` over discrete admissible
//! maps, alternating an interior linear solve with a projected-gradient step
//! on the boundary parameter lifts.

use crate::curve::BoundaryCurve;
use crate::mesh::{assemble_operators, Csr, FreeSystem, Grid, MetricData, SurfaceMap};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Plain pool-adjacent-violators: Euclidean projection of `y` onto
/// nondecreasing sequences (uniform weights, pooled blocks take the mean,
/// left-to-right sweep).
pub fn pava(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut sum = Vec::with_capacity(n);
    let mut count: Vec<usize> = Vec::with_capacity(n);
    for &v in y {
        sum.push(v);
        count.push(1);
        while sum.len() > 1 {
            let k = sum.len();
            if sum[k - 2] / count[k - 2] as f64 > sum[k - 1] / count[k - 1] as f64 {
                let (s, c) = (sum.pop().unwrap(), count.pop().unwrap());
                sum[k - 2] += s;
                count[k - 2] += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for (s, c) in sum.iter().zip(&count) {
        let mean = s / *c as f64;
        out.extend(std::iter::repeat(mean).take(*c));
    }
    out
}

/// Euclidean projection of `y` onto nondecreasing sequences matching the
/// anchor values. Anchors are `(index, value)` pairs with ascending indices
/// and nondecreasing values; an index equal to `y.len()` acts as a pure
/// right bound (used for the periodic wrap). Segments between anchors are
/// projected by PAVA followed by clamping to the anchor interval.
pub fn isotonic_project(y: &[f64], anchors: &[(usize, f64)]) -> Result<Vec<f64>> {
    for win in anchors.windows(2) {
        if win[1].0 <= win[0].0 {
            return Err(Error::InvalidParam("anchor indices must be strictly increasing".into()));
        }
        if win[1].1 < win[0].1 {
            return Err(Error::InvalidParam("anchor values must be nondecreasing".into()));
        }
    }
    if let Some(&(last, _)) = anchors.last() {
        if last > y.len() {
            return Err(Error::InvalidParam("anchor index out of range".into()));
        }
    }
    let mut out = y.to_vec();
    let mut segment = |from: usize, to: usize, lo: Option<f64>, hi: Option<f64>| {
        if from >= to {
            return;
        }
        let proj = pava(&y[from..to]);
        for (k, v) in proj.into_iter().enumerate() {
            let mut v = v;
            if let Some(lo) = lo {
                v = v.max(lo);
            }
            if let Some(hi) = hi {
                v = v.min(hi);
            }
            out[from + k] = v;
        }
    };
    if anchors.is_empty() {
        segment(0, y.len(), None, None);
        return Ok(out);
    }
    segment(0, anchors[0].0, None, Some(anchors[0].1));
    for w in anchors.windows(2) {
        segment(w[0].0 + 1, w[1].0, Some(w[0].1), Some(w[1].1));
    }
    let &(last, last_v) = anchors.last().unwrap();
    if last < y.len() {
        segment(last + 1, y.len(), Some(last_v), None);
    }
    for &(idx, v) in anchors {
        if idx < y.len() {
            out[idx] = v;
        }
    }
    Ok(out)
}

/// Options for [`minimize_step`].
#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    pub tol_lin: f64,
    pub tol_kkt: f64,
    pub max_inner: usize,
    /// Optional max-norm safeguard (project interior values into the ball of
    /// radius `max_node |v|`).
    pub clamp: bool,
    /// Skip the boundary phase entirely (Dirichlet-type sub-problem).
    pub freeze_boundary: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { tol_lin: 1e-10, tol_kkt: 1e-6, max_inner: 200, clamp: false, freeze_boundary: false }
    }
}

/// Diagnostics of one minimization step.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub f_initial: f64,
    pub f_final: f64,
    pub energy_final: f64,
    pub inner_iters: usize,
    pub lin_rel_residual: f64,
    pub kkt_residual: f64,
    pub pcg_iters: usize,
}

struct Functional<'a> {
    md: &'a MetricData,
    mass: &'a [f64],
    v: &'a SurfaceMap,
    inv_h: f64,
}

impl Functional<'_> {
    fn eval(&self, w: &SurfaceMap) -> f64 {
        let e = self.md.energy(w);
        if self.inv_h == 0.0 {
            e
        } else {
            e + 0.5 * self.inv_h * self.md.l2_diff_sq(self.mass, w, self.v)
        }
    }
}

/// Gradient of `F` with respect to the boundary parameter lifts: the residual
/// of the discrete system at each boundary node paired with the curve tangent.
pub fn boundary_gradient(
    w: &SurfaceMap,
    v: &SurfaceMap,
    s: &Csr,
    mass: &[f64],
    inv_h: f64,
    grid: &Grid,
    plus: &BoundaryCurve,
    minus: &BoundaryCurve,
) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_nodes();
    let dim = w.dim;
    let mut resid = vec![0.0; n * dim];
    let mut y = vec![0.0; n];
    let mut comp = vec![0.0; n];
    for d in 0..dim {
        for node in 0..n {
            comp[node] = w.values[node * dim + d];
        }
        s.matvec(&comp, &mut y);
        for node in 0..n {
            resid[node * dim + d] =
                y[node] + inv_h * mass[node] * (w.values[node * dim + d] - v.values[node * dim + d]);
        }
    }
    let mut tangent = vec![0.0; dim];
    let mut grad_plus = vec![0.0; grid.n_theta];
    let mut grad_minus = vec![0.0; grid.n_theta];
    for j in 0..grid.n_theta {
        plus.deriv(w.phi_plus[j], &mut tangent);
        let node = grid.node(grid.n_x, j);
        grad_plus[j] = (0..dim).map(|d| resid[node * dim + d] * tangent[d]).sum();
        minus.deriv(w.phi_minus[j], &mut tangent);
        let node = grid.node(0, j);
        grad_minus[j] = (0..dim).map(|d| resid[node * dim + d] * tangent[d]).sum();
    }
    (grad_plus, grad_minus)
}

fn boundary_anchors(grid: &Grid) -> Vec<(usize, f64)> {
    let js = grid.anchor_js();
    let mut a: Vec<(usize, f64)> = js.iter().map(|&j| (j, grid.theta_of(j))).collect();
    // Periodic wrap: the lift must stay below theta_0 + 2 pi.
    a.push((grid.n_theta, grid.theta_of(0) + 2.0 * PI));
    a
}

/// One step of the scheme: minimize `E(w,g) + ||w-v||^2/(2h)` over admissible
/// maps. Pass `h = f64::INFINITY` for the pure energy minimization.
pub fn minimize_step(
    v: &SurfaceMap,
    md: &MetricData,
    plus: &BoundaryCurve,
    minus: &BoundaryCurve,
    h: f64,
    opts: &StepOptions,
) -> Result<(SurfaceMap, StepReport)> {
    let grid = &md.grid;
    let (s, mass) = assemble_operators(&md.g, grid)?;
    let inv_h = if h.is_infinite() { 0.0 } else { 1.0 / h };
    if inv_h < 0.0 || !inv_h.is_finite() {
        return Err(Error::InvalidParam(format!("time step h = {h} must be positive")));
    }
    let n = grid.n_nodes();
    let dim = v.dim;
    let shift: Vec<f64> = mass.iter().map(|m| m * inv_h).collect();
    let free: Vec<usize> = (1..grid.n_x)
        .flat_map(|i| (0..grid.n_theta).map(move |j| i * grid.n_theta + j))
        .collect();
    let mut free_index = vec![usize::MAX; n];
    for (fi, &node) in free.iter().enumerate() {
        free_index[node] = fi;
    }
    let system = FreeSystem { s: &s, shift: &shift, free: &free, free_index: &free_index };

    let functional = Functional { md, mass: &mass, v, inv_h };
    let mut w = v.clone();
    let f_initial = functional.eval(&w);
    let mut f_cur = f_initial;
    let clamp_radius = if opts.clamp {
        (0..n)
            .map(|node| {
                (0..dim).map(|d| v.values[node * dim + d].powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0f64, f64::max)
    } else {
        f64::INFINITY
    };

    let anchors = boundary_anchors(grid);
    let anchor_js = grid.anchor_js();
    let mut rhs = vec![0.0; n];
    let mut comp = vec![0.0; n];
    let mut lin_rel = 0.0f64;
    let mut pcg_total = 0usize;
    let mut inner = 0usize;
    let mut tau = f64::NAN; // boundary step size, estimated on first use
    let mut kkt = 0.0f64;

    loop {
        // Interior solve per component (global minimum over interior values
        // for the current boundary data).
        for d in 0..dim {
            for node in 0..n {
                rhs[node] = shift[node] * v.values[node * dim + d];
                comp[node] = w.values[node * dim + d];
            }
            let (iters, rel) = system.solve(&rhs, &mut comp, opts.tol_lin, 4000);
            pcg_total += iters;
            lin_rel = lin_rel.max(rel);
            for node in 0..n {
                w.values[node * dim + d] = comp[node];
            }
        }
        if opts.clamp && clamp_radius.is_finite() {
            for &node in &free {
                let norm: f64 = (0..dim)
                    .map(|d| w.values[node * dim + d].powi(2))
                    .sum::<f64>()
                    .sqrt();
                if norm > clamp_radius {
                    let scale = clamp_radius / norm;
                    for d in 0..dim {
                        w.values[node * dim + d] *= scale;
                    }
                }
            }
        }
        let f_after_interior = functional.eval(&w);

        // Boundary phase: projected gradient with backtracking.
        let mut f_new = f_after_interior;
        if !opts.freeze_boundary {
            let (gp, gm) = boundary_gradient(&w, v, &s, &mass, inv_h, grid, plus, minus);
            if tau.is_nan() {
                // Scale from the diagonal of the boundary Hessian estimate.
                let diag = s.diag();
                let mut scale = 0.0f64;
                let mut tan = vec![0.0; dim];
                for j in 0..grid.n_theta {
                    for (i_row, curve, phi) in
                        [(grid.n_x, plus, &w.phi_plus), (0, minus, &w.phi_minus)]
                    {
                        curve.deriv(phi[j], &mut tan);
                        let t2: f64 = tan.iter().map(|t| t * t).sum();
                        let node = grid.node(i_row, j);
                        scale = scale.max((diag[node] + shift[node]) * t2);
                    }
                }
                tau = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            }
            let mut accepted = false;
            for _ in 0..40 {
                let cand_p: Vec<f64> =
                    w.phi_plus.iter().zip(&gp).map(|(p, g)| p - tau * g).collect();
                let cand_m: Vec<f64> =
                    w.phi_minus.iter().zip(&gm).map(|(p, g)| p - tau * g).collect();
                let proj_p = isotonic_project(&cand_p, &anchors)?;
                let proj_m = isotonic_project(&cand_m, &anchors)?;
                let step_sq: f64 = proj_p
                    .iter()
                    .zip(&w.phi_plus)
                    .chain(proj_m.iter().zip(&w.phi_minus))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if step_sq == 0.0 {
                    accepted = true; // already stationary on the boundary
                    break;
                }
                let mut trial = w.clone();
                trial.phi_plus = proj_p;
                trial.phi_minus = proj_m;
                trial.refresh_traces(grid, plus, minus);
                let f_trial = functional.eval(&trial);
                if f_trial <= f_after_interior - 1e-4 * step_sq / tau {
                    w = trial;
                    f_new = f_trial;
                    tau *= 2.0;
                    accepted = true;
                    break;
                }
                tau *= 0.5;
            }
            if !accepted {
                f_new = f_after_interior;
            }
            // Projected-gradient stationarity residual at a unit reference step.
            let t_ref = tau.max(1e-12);
            let (gp, gm) = boundary_gradient(&w, v, &s, &mass, inv_h, grid, plus, minus);
            let cand_p: Vec<f64> = w.phi_plus.iter().zip(&gp).map(|(p, g)| p - t_ref * g).collect();
            let cand_m: Vec<f64> = w.phi_minus.iter().zip(&gm).map(|(p, g)| p - t_ref * g).collect();
            let proj_p = isotonic_project(&cand_p, &anchors)?;
            let proj_m = isotonic_project(&cand_m, &anchors)?;
            kkt = proj_p
                .iter()
                .zip(&w.phi_plus)
                .chain(proj_m.iter().zip(&w.phi_minus))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
                / t_ref;
        }

        inner += 1;
        let decrease = f_cur - f_new;
        f_cur = f_new;
        if decrease.abs() < 1e-11 * f_initial.max(1e-30) || inner >= opts.max_inner {
            break;
        }
    }

    // Anchors stay bitwise exact.
    for &j in &anchor_js {
        debug_assert_eq!(w.phi_plus[j], grid.theta_of(j));
        w.phi_plus[j] = grid.theta_of(j);
        w.phi_minus[j] = grid.theta_of(j);
    }

    if f_cur > f_initial + 1e-12 * f_initial.max(1.0) {
        return Err(Error::Numerical(format!(
            "descent failure: F went from {f_initial} to {f_cur}"
        )));
    }
    let energy_final = md.energy(&w);
    Ok((
        w,
        StepReport {
            f_initial,
            f_final: f_cur,
            energy_final,
            inner_iters: inner,
            lin_rel_residual: lin_rel,
            kkt_residual: kkt,
            pcg_iters: pcg_total,
        },
    ))
}
