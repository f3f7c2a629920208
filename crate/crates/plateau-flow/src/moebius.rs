//! The six-parameter family of boundary diffeomorphisms `h_{b,phi}`.
//!
//! On each boundary circle the map acts by the lift of a Möbius transform
//! `M_{b,phi}(z) = e^{i phi} (z + b) / (1 + conj(b) z)`, interpolated into the
//! interior by cutoff functions so that `h` is the identity on `|x| <= 1/2`.
//! For `x >= 0`,
//!
//! `h(x, theta) = (x, theta + lambda1(x) (f_b+(theta) - theta) + lambda2(x) phi+)`
//!
//! and mirrored in `x` for the other boundary. The lift is
//! `f_b(theta) = theta + 2 arg(1 + b e^{-i theta})`, a strictly increasing
//! degree-one circle map with `f_0 = id`.

use crate::collar::{CollarChart, DiagTensor};
use crate::{Error, Result};
use num_complex::Complex64;

/// Diffeomorphism parameters: `b` per boundary with `|b| < 1`, and unbounded
/// winding angles `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffeoParams {
    pub b_plus: Complex64,
    pub b_minus: Complex64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

impl DiffeoParams {
    pub fn identity() -> Self {
        Self {
            b_plus: Complex64::new(0.0, 0.0),
            b_minus: Complex64::new(0.0, 0.0),
            phi_plus: 0.0,
            phi_minus: 0.0,
        }
    }

    pub fn new(b_plus: Complex64, b_minus: Complex64, phi_plus: f64, phi_minus: f64) -> Result<Self> {
        for (name, b) in [("b_plus", b_plus), ("b_minus", b_minus)] {
            if !(b.norm() < 1.0) {
                return Err(Error::InvalidParam(format!("|{name}| = {} must be < 1", b.norm())));
            }
        }
        if !phi_plus.is_finite() || !phi_minus.is_finite() {
            return Err(Error::InvalidParam("phi parameters must be finite".into()));
        }
        Ok(Self { b_plus, b_minus, phi_plus, phi_minus })
    }

    /// Parameter vector in the flow's ODE order:
    /// `(ell slot excluded) [Re b+, Im b+, Re b-, Im b-, phi+, phi-]`.
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.b_plus.re,
            self.b_plus.im,
            self.b_minus.re,
            self.b_minus.im,
            self.phi_plus,
            self.phi_minus,
        ]
    }

    pub fn from_array(p: [f64; 6]) -> Result<Self> {
        Self::new(
            Complex64::new(p[0], p[1]),
            Complex64::new(p[2], p[3]),
            p[4],
            p[5],
        )
    }
}

/// Smooth cutoff pair. `lambda1` rises from 0 to 1 on `[lo1, hi1]`,
/// `lambda2` on `[lo2, hi2]`; both stay 0 below and 1 above, built from the
/// `exp(-1/t)` bump so all derivatives vanish at the junctions.
#[derive(Debug, Clone, Copy)]
pub struct CutoffPair {
    pub lo1: f64,
    pub hi1: f64,
    pub lo2: f64,
    pub hi2: f64,
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn bump_d(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp() / (t * t)
    }
}

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
fn smoothstep(t: f64) -> f64 {
    let u = bump(t);
    let v = bump(1.0 - t);
    u / (u + v)
}

fn smoothstep_d(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let u = bump(t);
    let v = bump(1.0 - t);
    let du = bump_d(t);
    let dv = -bump_d(1.0 - t);
    (du * v - u * dv) / (u + v).powi(2)
}

impl CutoffPair {
    /// The windows fixed by the construction: `lambda1` supported above 3/4
    /// with plateau from 7/8, `lambda2` supported above 1/2 with plateau
    /// from 5/8.
    pub fn standard() -> Self {
        Self { lo1: 0.75, hi1: 0.875, lo2: 0.5, hi2: 0.625 }
    }

    /// Custom windows; used by the verify suite's negative control.
    pub fn with_windows(lo1: f64, hi1: f64, lo2: f64, hi2: f64) -> Self {
        Self { lo1, hi1, lo2, hi2 }
    }

    pub fn lambda1(&self, x: f64) -> f64 {
        smoothstep((x - self.lo1) / (self.hi1 - self.lo1))
    }

    pub fn lambda2(&self, x: f64) -> f64 {
        smoothstep((x - self.lo2) / (self.hi2 - self.lo2))
    }

    pub fn dlambda1(&self, x: f64) -> f64 {
        smoothstep_d((x - self.lo1) / (self.hi1 - self.lo1)) / (self.hi1 - self.lo1)
    }

    pub fn dlambda2(&self, x: f64) -> f64 {
        smoothstep_d((x - self.lo2) / (self.hi2 - self.lo2)) / (self.hi2 - self.lo2)
    }
}

/// Lift of the boundary Möbius circle map: `f_{b,phi}(theta)`, continuous in
/// `theta` with `f(theta + 2 pi) = f(theta) + 2 pi` and `f_{0,0} = id`.
pub fn mobius_angle(b: Complex64, phi: f64, theta: f64) -> Result<f64> {
    if !(b.norm() < 1.0) {
        return Err(Error::InvalidParam(format!("|b| = {} must be < 1", b.norm())));
    }
    Ok(mobius_lift(b, theta) + phi)
}

/// `f_b(theta) = theta + 2 arg(1 + b e^{-i theta})`; `1 + b e^{-i theta}`
/// has positive real part for `|b| < 1`, so no unwrapping is needed.
fn mobius_lift(b: Complex64, theta: f64) -> f64 {
    let w = b * Complex64::from_polar(1.0, -theta);
    theta + 2.0 * (w.im).atan2(1.0 + w.re)
}

/// `d f_b / d theta = (1 - |b|^2) / |1 + b e^{-i theta}|^2 > 0`.
pub fn mobius_angle_dtheta(b: Complex64, theta: f64) -> f64 {
    let w = b * Complex64::from_polar(1.0, -theta);
    (1.0 - b.norm_sqr()) / ((1.0 + w.re).powi(2) + w.im * w.im)
}

/// `h_{b,phi}` applied to `(x, theta)`; the `x` coordinate is unchanged.
pub fn h_map(p: &DiffeoParams, cut: &CutoffPair, x: f64, theta: f64) -> (f64, f64) {
    (x, h_theta(p, cut, x, theta))
}

fn side(p: &DiffeoParams, x: f64) -> (Complex64, f64) {
    if x >= 0.0 {
        (p.b_plus, p.phi_plus)
    } else {
        (p.b_minus, p.phi_minus)
    }
}

/// The angular part of `h_{b,phi}`.
pub fn h_theta(p: &DiffeoParams, cut: &CutoffPair, x: f64, theta: f64) -> f64 {
    let (b, phi) = side(p, x);
    let ax = x.abs();
    let l1 = cut.lambda1(ax);
    let l2 = cut.lambda2(ax);
    if l1 == 0.0 && l2 == 0.0 {
        return theta;
    }
    theta + l1 * (mobius_lift(b, theta) - theta) + l2 * phi
}

/// Partial derivatives `(d theta'/d x, d theta'/d theta)` of the angular part.
pub fn h_theta_jac(p: &DiffeoParams, cut: &CutoffPair, x: f64, theta: f64) -> (f64, f64) {
    let (b, phi) = side(p, x);
    let ax = x.abs();
    let sgn = if x >= 0.0 { 1.0 } else { -1.0 };
    let l1 = cut.lambda1(ax);
    let dl1 = sgn * cut.dlambda1(ax);
    let dl2 = sgn * cut.dlambda2(ax);
    let dth_dx = if dl1 == 0.0 && dl2 == 0.0 {
        0.0
    } else {
        dl1 * (mobius_lift(b, theta) - theta) + dl2 * phi
    };
    let dth_dth = if l1 == 0.0 { 1.0 } else { 1.0 + l1 * (mobius_angle_dtheta(b, theta) - 1.0) };
    (dth_dx, dth_dth)
}

/// Invert `theta -> h_theta(x, theta)` at fixed `x` (bisection then Newton).
pub fn h_inverse(p: &DiffeoParams, cut: &CutoffPair, x: f64, theta_prime: f64) -> Result<f64> {
    let (_, phi) = side(p, x);
    // theta' - theta is bounded by pi + |phi|.
    let pad = std::f64::consts::PI + phi.abs() + 1.0;
    let (mut lo, mut hi) = (theta_prime - pad, theta_prime + pad);
    let f = |t: f64| h_theta(p, cut, x, t) - theta_prime;
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::Numerical("h_inverse bracket failed".into()));
    }
    // Warm start at theta' itself; exact wherever h is the identity.
    let mut t = theta_prime;
    for _ in 0..200 {
        let val = f(t);
        if val.abs() < 1e-13 {
            return Ok(t);
        }
        if val > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        // Newton step, falling back to bisection when it leaves the bracket.
        let (_, dth) = h_theta_jac(p, cut, x, t);
        let newton = t - val / dth;
        t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::Numerical("h_inverse did not converge".into()))
}

/// Pullback `h^* G` at a point: `G` diagonal and theta-independent, `h`
/// fixing `x`, so `g = J^T G J` with triangular `J`.
pub fn pullback_at(
    p: &DiffeoParams,
    cut: &CutoffPair,
    g_collar: DiagTensor,
    x: f64,
    theta: f64,
) -> SymTensor {
    let (dth_dx, dth_dth) = h_theta_jac(p, cut, x, theta);
    SymTensor {
        xx: g_collar.xx + g_collar.tt * dth_dx * dth_dx,
        xt: g_collar.tt * dth_dx * dth_dth,
        tt: g_collar.tt * dth_dth * dth_dth,
    }
}

/// Symmetric 2x2 tensor sample at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor {
    pub xx: f64,
    pub xt: f64,
    pub tt: f64,
}

impl SymTensor {
    pub fn det(&self) -> f64 {
        self.xx * self.tt - self.xt * self.xt
    }

    pub fn scale(&self, c: f64) -> SymTensor {
        SymTensor { xx: c * self.xx, xt: c * self.xt, tt: c * self.tt }
    }

    pub fn sub(&self, o: &SymTensor) -> SymTensor {
        SymTensor { xx: self.xx - o.xx, xt: self.xt - o.xt, tt: self.tt - o.tt }
    }
}

/// Tangent index order for the 7-parameter metric family.
pub const PARAM_NAMES: [&str; 7] = ["ell", "re_b_plus", "im_b_plus", "re_b_minus", "im_b_minus", "phi_plus", "phi_minus"];

/// Derivative of the pullback metric with respect to one diffeomorphism
/// parameter (index 0..6 into [`DiffeoParams::as_array`]), by central
/// differences with relative step `1e-5`.
pub fn tangent_at(
    p: &DiffeoParams,
    cut: &CutoffPair,
    g_collar: DiagTensor,
    x: f64,
    theta: f64,
    param: usize,
) -> SymTensor {
    let base = p.as_array();
    let step = 1e-5 * base[param].abs().max(1.0);
    let mut plus = base;
    plus[param] += step;
    let mut minus = base;
    minus[param] -= step;
    // The FD stencil stays inside |b| < 1 for |b| <= 0.9999.
    let pp = DiffeoParams::from_array(plus).expect("FD step left the parameter domain");
    let pm = DiffeoParams::from_array(minus).expect("FD step left the parameter domain");
    let a = pullback_at(&pp, cut, g_collar, x, theta);
    let b = pullback_at(&pm, cut, g_collar, x, theta);
    a.sub(&b).scale(1.0 / (2.0 * step))
}

/// Derivative of the pullback metric in the polar basis `(|b+|, Arg b+)`,
/// used only by the orthogonality report. Requires `b != 0`.
pub fn tangent_polar_at(
    p: &DiffeoParams,
    cut: &CutoffPair,
    g_collar: DiagTensor,
    x: f64,
    theta: f64,
    plus_side: bool,
    radial: bool,
) -> Result<SymTensor> {
    let b = if plus_side { p.b_plus } else { p.b_minus };
    if b.norm() == 0.0 {
        return Err(Error::Usage("polar tangent basis degenerates at b = 0".into()));
    }
    let (r, psi) = b.to_polar();
    let step = 1e-5;
    let eval = |r: f64, psi: f64| -> SymTensor {
        let nb = Complex64::from_polar(r, psi);
        let q = if plus_side {
            DiffeoParams { b_plus: nb, ..*p }
        } else {
            DiffeoParams { b_minus: nb, ..*p }
        };
        pullback_at(&q, cut, g_collar, x, theta)
    };
    let (a, c) = if radial {
        (eval(r + step, psi), eval(r - step, psi))
    } else {
        (eval(r, psi + step), eval(r, psi - step))
    };
    Ok(a.sub(&c).scale(1.0 / (2.0 * step)))
}

/// L2(g) Gram matrix of the six boundary-parameter variations in the polar
/// basis `[|b+|, Arg b+, phi+, |b-|, Arg b-, phi-]`, by per-triangle
/// quadrature on the given grid.
///
/// Requires `b_pm != 0` (the polar basis degenerates at the origin). The
/// theta quadrature is a shifted rectangle rule, so the parity-based
/// orthogonality relations hold to spectral accuracy.
pub fn gram_orthogonality_report(
    p: &DiffeoParams,
    chart: &CollarChart,
    cut: &CutoffPair,
    grid: &crate::mesh::Grid,
) -> Result<[[f64; 6]; 6]> {
    if p.b_plus.norm() == 0.0 || p.b_minus.norm() == 0.0 {
        return Err(Error::Usage(
            "orthogonality report needs b != 0 on both sides (polar basis)".into(),
        ));
    }
    let n_tri = grid.n_tri();
    let mut tensors: Vec<[SymTensor; 6]> = vec![[SymTensor::default(); 6]; n_tri];
    let mut weight = vec![0.0; n_tri];
    let mut inv = vec![SymTensor::default(); n_tri];
    let area = grid.tri_area();
    for t in 0..n_tri {
        let (xc, tc) = grid.tri_centroid(t);
        let g_col = chart.metric_g(xc);
        let g = pullback_at(p, cut, g_col, xc, tc);
        let det = g.det();
        weight[t] = area * det.sqrt();
        inv[t] = SymTensor { xx: g.tt / det, xt: -g.xt / det, tt: g.xx / det };
        if xc.abs() <= 0.5 {
            continue;
        }
        let plus_side = xc > 0.0;
        let base = if plus_side { 0 } else { 3 };
        tensors[t][base] = tangent_polar_at(p, cut, g_col, xc, tc, plus_side, true)?;
        tensors[t][base + 1] = tangent_polar_at(p, cut, g_col, xc, tc, plus_side, false)?;
        tensors[t][base + 2] = tangent_at(p, cut, g_col, xc, tc, if plus_side { 4 } else { 5 });
    }
    let mut gram = [[0.0; 6]; 6];
    for t in 0..n_tri {
        for i in 0..6 {
            for j in i..6 {
                let v = weight[t] * crate::mesh::tensor_pair(inv[t], tensors[t][i], tensors[t][j]);
                gram[i][j] += v;
            }
        }
    }
    for i in 0..6 {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }
    Ok(gram)
}
