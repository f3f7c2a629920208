//! Discrete cylinder `C0 = [-1,1] x S^1`: tensor grid, P1 triangles, maps
//! with Plateau boundary data, metric-weighted energy and operators.
//!
//! Each grid quad is split into two triangles along the fixed diagonal
//! `(i,j) -> (i+1,j+1)`. Gradients of P1 functions are constant per triangle,
//! metrics and other symmetric 2-tensors are sampled per triangle at the
//! centroid, and all quadrature is the midpoint rule per triangle. The
//! Dirichlet energy in this discretization is exactly invariant under
//! per-triangle conformal rescaling of the metric.

use crate::curve::BoundaryCurve;
use crate::moebius::SymTensor;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Uniform tensor grid on `[-1,1] x S^1` with periodic theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n_x: usize,
    pub n_theta: usize,
    pub dx: f64,
    pub dtheta: f64,
}

impl Grid {
    pub fn new(n_x: usize, n_theta: usize) -> Result<Self> {
        if n_x < 8 {
            return Err(Error::InvalidParam(format!("n_x = {n_x} must be >= 8")));
        }
        if n_theta < 12 || n_theta % 3 != 0 {
            return Err(Error::InvalidParam(format!(
                "n_theta = {n_theta} must be >= 12 and divisible by 3"
            )));
        }
        Ok(Self { n_x, n_theta, dx: 2.0 / n_x as f64, dtheta: 2.0 * PI / n_theta as f64 })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        (self.n_x + 1) * self.n_theta
    }

    #[inline]
    pub fn n_tri(&self) -> usize {
        2 * self.n_x * self.n_theta
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + (j % self.n_theta)
    }

    #[inline]
    pub fn x_of(&self, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / self.n_x as f64
    }

    #[inline]
    pub fn theta_of(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }

    /// Triangle `t` decomposed as `(i, j, upper)`.
    #[inline]
    pub fn tri_cell(&self, t: usize) -> (usize, usize, bool) {
        let q = t / 2;
        (q / self.n_theta, q % self.n_theta, t % 2 == 1)
    }

    /// Node ids of triangle `t` (counterclockwise).
    #[inline]
    pub fn tri_nodes(&self, t: usize) -> [usize; 3] {
        let (i, j, upper) = self.tri_cell(t);
        if !upper {
            [self.node(i, j), self.node(i + 1, j), self.node(i + 1, j + 1)]
        } else {
            [self.node(i, j), self.node(i + 1, j + 1), self.node(i, j + 1)]
        }
    }

    /// Centroid of triangle `t` in `(x, theta)`.
    #[inline]
    pub fn tri_centroid(&self, t: usize) -> (f64, f64) {
        let (i, j, upper) = self.tri_cell(t);
        let (x0, t0) = (self.x_of(i), self.theta_of(j));
        if !upper {
            (x0 + 2.0 * self.dx / 3.0, t0 + self.dtheta / 3.0)
        } else {
            (x0 + self.dx / 3.0, t0 + 2.0 * self.dtheta / 3.0)
        }
    }

    /// Coordinate area of one triangle.
    #[inline]
    pub fn tri_area(&self) -> f64 {
        0.5 * self.dx * self.dtheta
    }

    /// P1 gradient `(u_x, u_theta)` of nodal values `(u0, u1, u2)` on
    /// triangle `t` (only the upper/lower shape matters on a uniform grid).
    #[inline]
    pub fn tri_grad(&self, t: usize, u0: f64, u1: f64, u2: f64) -> (f64, f64) {
        if t % 2 == 0 {
            ((u1 - u0) / self.dx, (u2 - u1) / self.dtheta)
        } else {
            ((u1 - u2) / self.dx, (u2 - u0) / self.dtheta)
        }
    }

    /// Barycentric gradients for the two triangle shapes.
    #[inline]
    pub fn shape_grads(&self, upper: bool) -> [[f64; 2]; 3] {
        let (ax, at) = (1.0 / self.dx, 1.0 / self.dtheta);
        if !upper {
            [[-ax, 0.0], [ax, -at], [0.0, at]]
        } else {
            [[0.0, -at], [ax, 0.0], [-ax, at]]
        }
    }

    /// Anchor node offsets `j_k` with `theta_{j_k} = 2 pi k / 3`.
    pub fn anchor_js(&self) -> [usize; 3] {
        [0, self.n_theta / 3, 2 * self.n_theta / 3]
    }
}

/// Per-triangle symmetric 2-tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub xx: Vec<f64>,
    pub xt: Vec<f64>,
    pub tt: Vec<f64>,
}

impl TensorField {
    pub fn zeros(n_tri: usize) -> Self {
        Self { xx: vec![0.0; n_tri], xt: vec![0.0; n_tri], tt: vec![0.0; n_tri] }
    }

    pub fn len(&self) -> usize {
        self.xx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xx.is_empty()
    }

    #[inline]
    pub fn at(&self, t: usize) -> SymTensor {
        SymTensor { xx: self.xx[t], xt: self.xt[t], tt: self.tt[t] }
    }

    #[inline]
    pub fn set(&mut self, t: usize, v: SymTensor) {
        self.xx[t] = v.xx;
        self.xt[t] = v.xt;
        self.tt[t] = v.tt;
    }
}

/// Map of the cylinder into `R^n` with Plateau boundary data.
///
/// Boundary traces are `alpha_pm(phi_pm)` where `phi_pm` are monotone lifts
/// over the boundary nodes, pinned to `theta_k = 2 pi k / 3` at the three
/// anchor nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMap {
    pub dim: usize,
    /// Nodal values, `n_nodes x dim` row-major.
    pub values: Vec<f64>,
    /// Boundary parameter lift at `x = +1`, one entry per theta node.
    pub phi_plus: Vec<f64>,
    /// Boundary parameter lift at `x = -1`.
    pub phi_minus: Vec<f64>,
}

impl SurfaceMap {
    /// Default initial map: linear blend of the two boundary curves with
    /// identity boundary parametrization.
    pub fn initial(grid: &Grid, plus: &BoundaryCurve, minus: &BoundaryCurve) -> Result<Self> {
        if plus.dim != minus.dim {
            return Err(Error::InvalidParam("boundary curves have mismatched dimension".into()));
        }
        let dim = plus.dim;
        let mut values = vec![0.0; grid.n_nodes() * dim];
        let mut a = vec![0.0; dim];
        let mut b = vec![0.0; dim];
        for j in 0..grid.n_theta {
            let th = grid.theta_of(j);
            plus.eval(th, &mut a);
            minus.eval(th, &mut b);
            for i in 0..=grid.n_x {
                let x = grid.x_of(i);
                let (wp, wm) = ((1.0 + x) / 2.0, (1.0 - x) / 2.0);
                let node = grid.node(i, j);
                for d in 0..dim {
                    values[node * dim + d] = wp * a[d] + wm * b[d];
                }
            }
        }
        let phi: Vec<f64> = (0..grid.n_theta).map(|j| grid.theta_of(j)).collect();
        Ok(Self { dim, values, phi_plus: phi.clone(), phi_minus: phi })
    }

    #[inline]
    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    /// Re-evaluate boundary nodal values from the parameter lifts.
    pub fn refresh_traces(&mut self, grid: &Grid, plus: &BoundaryCurve, minus: &BoundaryCurve) {
        let mut p = vec![0.0; self.dim];
        for j in 0..grid.n_theta {
            plus.eval(self.phi_plus[j], &mut p);
            let node = grid.node(grid.n_x, j);
            self.values[node * self.dim..(node + 1) * self.dim].copy_from_slice(&p);
            minus.eval(self.phi_minus[j], &mut p);
            let node = grid.node(0, j);
            self.values[node * self.dim..(node + 1) * self.dim].copy_from_slice(&p);
        }
    }

    /// Check the SurfaceMap invariants (anchors exact, lifts monotone with
    /// total increase 2 pi, traces on the curves).
    pub fn check_admissible(
        &self,
        grid: &Grid,
        plus: &BoundaryCurve,
        minus: &BoundaryCurve,
        tol: f64,
    ) -> Result<()> {
        for (name, phi, curve, i_row) in [
            ("phi_plus", &self.phi_plus, plus, grid.n_x),
            ("phi_minus", &self.phi_minus, minus, 0usize),
        ] {
            if phi.len() != grid.n_theta {
                return Err(Error::InvalidParam(format!("{name} has wrong length")));
            }
            for k in 0..3 {
                let j = grid.anchor_js()[k];
                let want = grid.theta_of(j);
                if phi[j] != want {
                    return Err(Error::InvalidParam(format!(
                        "{name} anchor {k}: {} != {want}",
                        phi[j]
                    )));
                }
            }
            for j in 0..grid.n_theta {
                let next = if j + 1 < grid.n_theta { phi[j + 1] } else { phi[0] + 2.0 * PI };
                if next < phi[j] - 1e-12 {
                    return Err(Error::InvalidParam(format!("{name} not monotone at {j}")));
                }
            }
            let mut val = vec![0.0; self.dim];
            for j in 0..grid.n_theta {
                curve.eval(phi[j], &mut val);
                let node = grid.node(i_row, j);
                let stored = self.value(node);
                let err: f64 = val
                    .iter()
                    .zip(stored)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if err > tol {
                    return Err(Error::InvalidParam(format!(
                        "{name} trace off-curve at node {j}: {err}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Dirichlet energy `E(u, g) = 1/2 sum_T |T| sqrt(det g) g^{ij} du_i . du_j`.
pub fn energy(u: &SurfaceMap, g: &TensorField, grid: &Grid) -> Result<f64> {
    let mut total = 0.0;
    let area = grid.tri_area();
    for t in 0..grid.n_tri() {
        let gt = g.at(t);
        let det = gt.det();
        if !(det > 0.0) {
            return Err(Error::Numerical(format!("metric not positive on triangle {t}")));
        }
        let sqrt_det = det.sqrt();
        let [n0, n1, n2] = grid.tri_nodes(t);
        let mut e = 0.0;
        for d in 0..u.dim {
            let (ux, ut) = grid.tri_grad(
                t,
                u.values[n0 * u.dim + d],
                u.values[n1 * u.dim + d],
                u.values[n2 * u.dim + d],
            );
            // g^{-1} = adj(g)/det
            e += gt.tt * ux * ux - 2.0 * gt.xt * ux * ut + gt.xx * ut * ut;
        }
        total += 0.5 * area * e / sqrt_det;
    }
    Ok(total)
}

/// Parametrization-induced area `sum_T |T| |u_x ^ u_theta|`.
pub fn area(u: &SurfaceMap, grid: &Grid) -> f64 {
    let mut total = 0.0;
    let tri_area = grid.tri_area();
    for t in 0..grid.n_tri() {
        let [n0, n1, n2] = grid.tri_nodes(t);
        let (mut exx, mut ext, mut ett) = (0.0, 0.0, 0.0);
        for d in 0..u.dim {
            let (ux, ut) = grid.tri_grad(
                t,
                u.values[n0 * u.dim + d],
                u.values[n1 * u.dim + d],
                u.values[n2 * u.dim + d],
            );
            exx += ux * ux;
            ext += ux * ut;
            ett += ut * ut;
        }
        total += tri_area * (exx * ett - ext * ext).max(0.0).sqrt();
    }
    total
}

/// Sparse symmetric matrix in CSR form.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            y[i] = acc;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[k] == i {
                    d[i] = self.val[k];
                }
            }
        }
        d
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col[lo..hi].binary_search(&j) {
            Ok(k) => self.val[lo + k] += v,
            Err(_) => panic!("entry ({i},{j}) outside the assembled sparsity pattern"),
        }
    }
}

/// Stiffness matrix (energy Hessian per component) and lumped mass vector for
/// a per-triangle metric `g`.
pub fn assemble_operators(g: &TensorField, grid: &Grid) -> Result<(Csr, Vec<f64>)> {
    let n = grid.n_nodes();
    // Sparsity: node (i,j) couples to itself and 6 neighbours along grid
    // edges and the fixed diagonal.
    let mut cols: Vec<Vec<usize>> = vec![Vec::with_capacity(7); n];
    for i in 0..=grid.n_x {
        for j in 0..grid.n_theta {
            let me = grid.node(i, j);
            let mut nb = vec![me];
            let jm = (j + grid.n_theta - 1) % grid.n_theta;
            nb.push(grid.node(i, j + 1));
            nb.push(grid.node(i, jm));
            if i > 0 {
                nb.push(grid.node(i - 1, j));
                nb.push(grid.node(i - 1, jm));
            }
            if i < grid.n_x {
                nb.push(grid.node(i + 1, j));
                nb.push(grid.node(i + 1, j + 1));
            }
            nb.sort_unstable();
            nb.dedup();
            cols[me] = nb;
        }
    }
    let mut row_ptr = vec![0usize; n + 1];
    for i in 0..n {
        row_ptr[i + 1] = row_ptr[i] + cols[i].len();
    }
    let col: Vec<usize> = cols.into_iter().flatten().collect();
    let val = vec![0.0; col.len()];
    let mut s = Csr { n, row_ptr, col, val };
    let mut mass = vec![0.0; n];

    let tri_area = grid.tri_area();
    for t in 0..grid.n_tri() {
        let gt = g.at(t);
        let det = gt.det();
        if !(det > 0.0) {
            return Err(Error::Numerical(format!("metric not positive on triangle {t}")));
        }
        let sqrt_det = det.sqrt();
        let w = tri_area * sqrt_det;
        let inv = [gt.tt / det, -gt.xt / det, gt.xx / det]; // [xx, xt, tt] of g^{-1}
        let nodes = grid.tri_nodes(t);
        let grads = grid.shape_grads(t % 2 == 1);
        for a in 0..3 {
            mass[nodes[a]] += w / 3.0;
            for b in 0..3 {
                let ga = grads[a];
                let gb = grads[b];
                let v = w
                    * (inv[0] * ga[0] * gb[0]
                        + inv[1] * (ga[0] * gb[1] + ga[1] * gb[0])
                        + inv[2] * ga[1] * gb[1]);
                s.add(nodes[a], nodes[b], v);
            }
        }
    }
    Ok((s, mass))
}

/// Preconditioned conjugate gradients with Jacobi preconditioner for the
/// operator `x -> S x + shift .* x` restricted to `free` indices.
///
/// `x` holds the full nodal vector for one component; entries outside `free`
/// are treated as fixed boundary data contributing to the residual.
pub struct FreeSystem<'a> {
    pub s: &'a Csr,
    /// Diagonal shift (M/h scaled mass), full length.
    pub shift: &'a [f64],
    /// Free node ids, ascending.
    pub free: &'a [usize],
    /// Dense map node -> free index or usize::MAX.
    pub free_index: &'a [usize],
}

impl<'a> FreeSystem<'a> {
    /// Apply the restricted operator to a free-indexed vector.
    fn apply(&self, xf: &[f64], yf: &mut [f64]) {
        for (fi, &node) in self.free.iter().enumerate() {
            let mut acc = self.shift[node] * xf[fi];
            for k in self.s.row_ptr[node]..self.s.row_ptr[node + 1] {
                let j = self.s.col[k];
                let fj = self.free_index[j];
                if fj != usize::MAX {
                    acc += self.s.val[k] * xf[fj];
                }
            }
            yf[fi] = acc;
        }
    }

    /// Residual RHS for fixed boundary values: `b_f = rhs_f - S_fb x_b`.
    fn reduced_rhs(&self, rhs_full: &[f64], x_full: &[f64], bf: &mut [f64]) {
        for (fi, &node) in self.free.iter().enumerate() {
            let mut acc = rhs_full[node];
            for k in self.s.row_ptr[node]..self.s.row_ptr[node + 1] {
                let j = self.s.col[k];
                if self.free_index[j] == usize::MAX {
                    acc -= self.s.val[k] * x_full[j];
                }
            }
            bf[fi] = acc;
        }
    }

    /// Solve in place on the free entries of `x_full`. Returns (iters, rel resid).
    pub fn solve(&self, rhs_full: &[f64], x_full: &mut [f64], tol: f64, max_iter: usize) -> (usize, f64) {
        let nf = self.free.len();
        let mut b = vec![0.0; nf];
        self.reduced_rhs(rhs_full, x_full, &mut b);
        let mut x: Vec<f64> = self.free.iter().map(|&n| x_full[n]).collect();
        // Jacobi diagonal of S_ff + shift.
        let mut dinv = vec![0.0; nf];
        for (fi, &node) in self.free.iter().enumerate() {
            let mut d = self.shift[node];
            for k in self.s.row_ptr[node]..self.s.row_ptr[node + 1] {
                if self.s.col[k] == node {
                    d += self.s.val[k];
                }
            }
            dinv[fi] = 1.0 / d;
        }
        let mut r = vec![0.0; nf];
        self.apply(&x, &mut r);
        for i in 0..nf {
            r[i] = b[i] - r[i];
        }
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; nf];
        let mut iters = 0;
        let mut rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        while rel > tol && iters < max_iter {
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..nf {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..nf {
                z[i] = r[i] * dinv[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..nf {
                p[i] = z[i] + beta * p[i];
            }
            iters += 1;
            rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        }
        for (fi, &node) in self.free.iter().enumerate() {
            x_full[node] = x[fi];
        }
        (iters, rel)
    }
}

/// Composite chart data and metric caches sampled per triangle.
///
/// `F = f_ell . h_{b,phi}` maps `(x, theta) -> (s(x), theta')`; its Jacobian
/// pieces together with the pullback metric `g = h^* G_ell` drive the energy,
/// the Hopf differential, and the L2 pairings.
#[derive(Debug, Clone)]
pub struct MetricData {
    pub grid: Grid,
    /// Pullback metric per triangle.
    pub g: TensorField,
    /// Inverse metric per triangle.
    pub inv: TensorField,
    /// `sqrt(det g)` per triangle.
    pub sqrt_det: Vec<f64>,
    /// Quadrature weight `|T| sqrt(det g)` per triangle.
    pub weight: Vec<f64>,
    /// Collar chart derivative `ds/dx` at the centroid column.
    pub s_prime: Vec<f64>,
    /// `d theta'/d x` of the diffeomorphism at the centroid.
    pub th_x: Vec<f64>,
    /// `d theta'/d theta` at the centroid.
    pub th_t: Vec<f64>,
    /// Conformal factor `rho(s(x))` at the centroid column.
    pub rho: Vec<f64>,
}

/// Inner product of two symmetric 2-tensors w.r.t. metric `g`:
/// `tr(g^{-1} A g^{-1} B)`.
#[inline]
pub fn tensor_pair(inv: SymTensor, a: SymTensor, b: SymTensor) -> f64 {
    // P = inv*A, Q = inv*B as full 2x2 matrices; return tr(P Q).
    let p = [
        inv.xx * a.xx + inv.xt * a.xt,
        inv.xx * a.xt + inv.xt * a.tt,
        inv.xt * a.xx + inv.tt * a.xt,
        inv.xt * a.xt + inv.tt * a.tt,
    ];
    let q = [
        inv.xx * b.xx + inv.xt * b.xt,
        inv.xx * b.xt + inv.xt * b.tt,
        inv.xt * b.xx + inv.tt * b.xt,
        inv.xt * b.xt + inv.tt * b.tt,
    ];
    p[0] * q[0] + p[1] * q[2] + p[2] * q[1] + p[3] * q[3]
}

impl MetricData {
    /// `L^2(g)` inner product of two tensor fields.
    pub fn tensor_l2(&self, a: &TensorField, b: &TensorField) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.grid.n_tri() {
            acc += self.weight[t] * tensor_pair(self.inv.at(t), a.at(t), b.at(t));
        }
        acc
    }

    /// Pointwise `g`-norm of a tensor field, integrated: `int |A|_g dv_g`.
    pub fn tensor_l1(&self, a: &TensorField) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.grid.n_tri() {
            let at = a.at(t);
            acc += self.weight[t] * tensor_pair(self.inv.at(t), at, at).max(0.0).sqrt();
        }
        acc
    }

    /// Energy with the cached metric.
    pub fn energy(&self, u: &SurfaceMap) -> f64 {
        let grid = &self.grid;
        let mut total = 0.0;
        for t in 0..grid.n_tri() {
            let [n0, n1, n2] = grid.tri_nodes(t);
            let inv = self.inv.at(t);
            let mut e = 0.0;
            for d in 0..u.dim {
                let (ux, ut) = grid.tri_grad(
                    t,
                    u.values[n0 * u.dim + d],
                    u.values[n1 * u.dim + d],
                    u.values[n2 * u.dim + d],
                );
                e += inv.xx * ux * ux + 2.0 * inv.xt * ux * ut + inv.tt * ut * ut;
            }
            total += 0.5 * self.weight[t] * e;
        }
        total
    }

    /// `L^2(g)` norm squared of the nodal difference `a - b` via lumped mass.
    pub fn l2_diff_sq(&self, mass: &[f64], a: &SurfaceMap, b: &SurfaceMap) -> f64 {
        let mut acc = 0.0;
        for node in 0..mass.len() {
            let mut d2 = 0.0;
            for d in 0..a.dim {
                let diff = a.values[node * a.dim + d] - b.values[node * a.dim + d];
                d2 += diff * diff;
            }
            acc += mass[node] * d2;
        }
        acc
    }
}

/// Hopf differential of `(u, g)` in the composite collar coordinates:
/// per-triangle `(phi1, phi2)` with `Phi = (phi1 + i phi2) dz^2`, plus the
/// real part as a coordinate tensor on `(x, theta)`.
pub struct HopfData {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub re_phi: TensorField,
}

/// Compute the Hopf data. The coordinate tensor uses
/// `Re Phi = 2 u^* g_eucl - |du|^2_g g` directly in `(x, theta)`; the
/// components `(phi1, phi2)` come from the collar-frame derivatives obtained
/// through the inverse Jacobian of `F`.
pub fn hopf_components(u: &SurfaceMap, md: &MetricData) -> Result<HopfData> {
    let grid = &md.grid;
    let n_tri = grid.n_tri();
    let mut out = HopfData {
        phi1: vec![0.0; n_tri],
        phi2: vec![0.0; n_tri],
        re_phi: TensorField::zeros(n_tri),
    };
    for t in 0..n_tri {
        let [n0, n1, n2] = grid.tri_nodes(t);
        let sp = md.s_prime[t];
        let (thx, tht) = (md.th_x[t], md.th_t[t]);
        if sp * tht == 0.0 {
            return Err(Error::Numerical(format!("singular chart Jacobian on triangle {t}")));
        }
        let (mut uu_xx, mut uu_xt, mut uu_tt) = (0.0, 0.0, 0.0);
        let (mut p1, mut p2) = (0.0, 0.0);
        for d in 0..u.dim {
            let (ux, ut) = grid.tri_grad(
                t,
                u.values[n0 * u.dim + d],
                u.values[n1 * u.dim + d],
                u.values[n2 * u.dim + d],
            );
            uu_xx += ux * ux;
            uu_xt += ux * ut;
            uu_tt += ut * ut;
            // Collar-frame derivatives via the inverse Jacobian of F.
            let us = (ux - thx / tht * ut) / sp;
            let utp = ut / tht;
            p1 += us * us - utp * utp;
            p2 += -2.0 * us * utp;
        }
        out.phi1[t] = p1;
        out.phi2[t] = p2;
        let g = md.g.at(t);
        let inv = md.inv.at(t);
        let du2 = inv.xx * uu_xx + 2.0 * inv.xt * uu_xt + inv.tt * uu_tt;
        out.re_phi.set(
            t,
            SymTensor {
                xx: 2.0 * uu_xx - du2 * g.xx,
                xt: 2.0 * uu_xt - du2 * g.xt,
                tt: 2.0 * uu_tt - du2 * g.tt,
            },
        );
    }
    Ok(out)
}

/// Transport the collar-frame components `(phi1, phi2)` of `Re Phi` to the
/// `(x, theta)` coordinate tensor through the chart Jacobian. Used to
/// cross-validate [`hopf_components`].
pub fn re_phi_from_components(md: &MetricData, phi1: &[f64], phi2: &[f64]) -> TensorField {
    let n_tri = md.grid.n_tri();
    let mut out = TensorField::zeros(n_tri);
    for t in 0..n_tri {
        let sp = md.s_prime[t];
        let (thx, tht) = (md.th_x[t], md.th_t[t]);
        let (p1, p2) = (phi1[t], phi2[t]);
        out.set(
            t,
            SymTensor {
                xx: sp * sp * p1 - 2.0 * sp * thx * p2 - thx * thx * p1,
                xt: (-sp * p2 - thx * p1) * tht,
                tt: -tht * tht * p1,
            },
        );
    }
    out
}
