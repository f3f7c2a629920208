//! Runtime invariant suites behind `plateau-flow verify`.
//!
//! Each suite re-derives a family of identities numerically (quadrature vs
//! closed forms, finite differences vs analytic derivatives, oracle
//! comparisons) and reports pass/fail. The acceptance tests reuse these
//! suites for the property-based criteria.

use crate::collar::{self, collar_chart, CollarParams};
use crate::curve::BoundaryCurve;
use crate::hopf::{ode_step, project_hopf, MetricState};
use crate::mesh::{area, assemble_operators, energy, hopf_components, Grid, SurfaceMap, TensorField};
use crate::moebius::{
    gram_orthogonality_report, h_theta, h_theta_jac, mobius_angle, tangent_at, CutoffPair,
    DiffeoParams, SymTensor,
};
use crate::plateau::{boundary_gradient, minimize_step, pava, StepOptions};
use crate::presets;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Deterministic RNG for tests and suites.
pub fn test_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Suite {
    name: &'static str,
    ok: bool,
    detail: String,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite { name, ok: true, detail: String::new() }
    }

    fn check(&mut self, label: &str, pass: bool, info: impl std::fmt::Display) {
        if !pass {
            self.ok = false;
            let _ = writeln!(self.detail, "    FAIL {label}: {info}");
        }
    }

    fn finish(self) -> SuiteResult {
        SuiteResult { name: self.name, passed: self.ok, detail: self.detail }
    }
}

/// Closed-form collar norms vs quadrature and asymptotics.
pub fn suite_collar_norms(level: Level) -> SuiteResult {
    let mut s = Suite::new("collar-norms");
    let ells: &[f64] = if level == Level::Full { &[0.1, 1.0, 5.0] } else { &[1.0] };
    for &ell in ells {
        let p = CollarParams::new(1.0, ell).unwrap();
        let (sup, l2) = collar::dz2_norms(p);
        s.check(
            "sup norm closed form",
            sup == 8.0 * PI * PI / (ell * ell),
            format!("ell={ell}"),
        );
        // Composite Simpson for 4 * 2pi * int rho^{-2} ds.
        let y = collar::half_length_y(p);
        let n = 20000;
        let h = 2.0 * y / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let sc = -y + i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w / collar::rho(p, sc).unwrap().powi(2);
        }
        let quad = 8.0 * PI * acc * h / 3.0;
        let rel = (l2 - quad).abs() / quad;
        s.check("L2 norm vs Simpson quadrature", rel < 1e-6, format!("ell={ell} rel={rel:.3e}"));
    }
    // Asymptotics of the closed form: l^3 ||dz^2||^2 -> 32 pi^5 (small l) and
    // l^4 ||dz^2||^2 -> 128 pi^4 / eta (large l).
    let (_, l2s) = collar::dz2_norms(CollarParams::new(1.0, 1e-3).unwrap());
    let small = (l2s * 1e-9 / (32.0 * PI.powi(5)) - 1.0).abs();
    s.check("small-ell asymptotic", small < 0.01, format!("rel={small:.3e}"));
    let (_, l2l) = collar::dz2_norms(CollarParams::new(1.0, 1e3).unwrap());
    let large = (l2l * 1e12 / (128.0 * PI.powi(4)) - 1.0).abs();
    s.check("large-ell asymptotic", large < 0.01, format!("rel={large:.3e}"));
    s.finish()
}

/// Hyperbolicity and horizontality of the collar family.
pub fn suite_collar_geometry(level: Level) -> SuiteResult {
    let mut s = Suite::new("collar-geometry");
    let n = if level == Level::Full { 256 } else { 128 };
    for &ell in &[0.4, 1.0, 2.0] {
        let chart = collar_chart(CollarParams::new(1.0, ell).unwrap()).unwrap();
        let dev = collar::gauss_curvature_deviation(&chart, n);
        s.check("Gauss curvature -1", dev < 1e-3, format!("ell={ell} dev={dev:.3e}"));
        let dev_coarse = collar::gauss_curvature_deviation(&chart, n / 2);
        let order = (dev_coarse / dev).log2();
        s.check("curvature order >= 1.9", order >= 1.9, format!("ell={ell} order={order:.2}"));
    }
    let mut rng = test_rng(101);
    for _ in 0..50 {
        let ell = 0.05 + 4.0 * rng.gen::<f64>();
        let x = -1.0 + 2.0 * rng.gen::<f64>();
        let chart = collar_chart(CollarParams::new(1.0, ell).unwrap()).unwrap();
        let d = chart.dmetric_dell(x);
        let sp = chart.ds_dx(x);
        let resid = (d.xx / (sp * sp) + d.tt).abs() / d.tt.abs().max(1e-30);
        s.check("horizontality", resid < 1e-6, format!("ell={ell:.3} x={x:.3} resid={resid:.3e}"));
    }
    // Chart consistency: s at the normalization root is the identity.
    let chart = collar_chart(CollarParams::new(1.0, 1.0).unwrap()).unwrap();
    let at_l0 = chart.with_ell(chart.ell0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=40 {
        let x = -1.0 + i as f64 / 20.0;
        worst = worst.max((at_l0.s_of_x(x) - x).abs());
    }
    s.check("chart identity at ell0", worst < 1e-12, format!("max dev {worst:.3e}"));
    s.finish()
}

/// Diffeomorphism family: identity region, monotonicity, lift group law,
/// inversion, and the orthogonality relations of the parameter variations.
pub fn suite_moebius(level: Level, cutoffs: CutoffPair) -> SuiteResult {
    let mut s = Suite::new("moebius");
    let p = DiffeoParams::new(Complex64::new(0.4, 0.2), Complex64::new(-0.3, 0.1), 1.3, -0.6)
        .unwrap();
    // Identity on the middle band, exactly.
    let mut id_ok = true;
    for i in 0..64 {
        let x = -0.5 + (i as f64) / 63.0; // [-1/2, 1/2]
        let th = 2.0 * PI * (i as f64) / 64.0;
        if h_theta(&p, &cutoffs, x, th) != th {
            id_ok = false;
        }
    }
    s.check("identity on |x| <= 1/2", id_ok, "h(theta) != theta");
    // Tangent tensors vanish exactly there too.
    let g = crate::collar::DiagTensor { xx: 1.0, tt: 1.0 };
    let mut t_ok = true;
    for param in 0..6 {
        for &x in &[-0.5, -0.2, 0.0, 0.3, 0.5] {
            if tangent_at(&p, &cutoffs, g, x, 1.0, param) != SymTensor::default() {
                t_ok = false;
            }
        }
    }
    s.check("tangents vanish on |x| <= 1/2", t_ok, "nonzero tangent");
    // Monotonicity at 10^4 samples with |b| up to 0.95.
    let strong =
        DiffeoParams::new(Complex64::new(0.95, 0.0), Complex64::new(0.0, -0.95), 2.0, -3.0)
            .unwrap();
    let mut min_slope = f64::INFINITY;
    for i in 0..100 {
        let x = -1.0 + 2.0 * (i as f64 + 0.5) / 100.0;
        for j in 0..100 {
            let th = 2.0 * PI * j as f64 / 100.0;
            min_slope = min_slope.min(h_theta_jac(&strong, &cutoffs, x, th).1);
        }
    }
    s.check("monotone in theta", min_slope > 0.0, format!("min slope {min_slope:.3e}"));
    // Degree-one lift and full-rotation identity.
    let mut lift_ok = true;
    for &th in &[0.1, 2.0, 5.5] {
        let f1 = mobius_angle(p.b_plus, 0.9, th).unwrap();
        let f2 = mobius_angle(p.b_plus, 0.9 + 2.0 * PI, th).unwrap();
        if (f2 - f1 - 2.0 * PI).abs() > 1e-12 {
            lift_ok = false;
        }
        let g1 = mobius_angle(p.b_plus, 0.9, th + 2.0 * PI).unwrap();
        if (g1 - f1 - 2.0 * PI).abs() > 1e-12 {
            lift_ok = false;
        }
    }
    s.check("lift group law", lift_ok, "f_{b,phi+2pi} != f + 2pi");
    // Inversion round trip.
    let mut rng = test_rng(7);
    let mut inv_worst = 0.0f64;
    for _ in 0..200 {
        let x = -1.0 + 2.0 * rng.gen::<f64>();
        let th = 2.0 * PI * rng.gen::<f64>();
        let tp = h_theta(&p, &cutoffs, x, th);
        match crate::moebius::h_inverse(&p, &cutoffs, x, tp) {
            Ok(back) => inv_worst = inv_worst.max((back - th).abs()),
            Err(_) => inv_worst = f64::INFINITY,
        }
    }
    s.check("h_inverse round trip", inv_worst < 1e-10, format!("worst {inv_worst:.3e}"));

    // Orthogonality of the parameter variations (polar basis).
    let grid_size = if level == Level::Full { (96, 192) } else { (48, 192) };
    let grid = Grid::new(grid_size.0, grid_size.1).unwrap();
    let chart = collar_chart(CollarParams::new(1.0, 1.0).unwrap()).unwrap();
    for &psi in &[0.0, 1.1] {
        for &a in &[0.3, 0.6, 0.9] {
            let p = DiffeoParams::new(
                Complex64::from_polar(a, psi),
                Complex64::from_polar(0.25, 0.4),
                0.7,
                -0.2,
            )
            .unwrap();
            let gram = match gram_orthogonality_report(&p, &chart, &cutoffs, &grid) {
                Ok(g) => g,
                Err(e) => {
                    s.check("orthogonality report", false, e);
                    continue;
                }
            };
            for (i, j, label) in [
                (0usize, 1usize, "<|b+|, Arg b+>"),
                (0, 2, "<|b+|, phi+>"),
                (1, 2, "<Arg b+, phi+>"),
            ] {
                let rel = gram[i][j].abs() / (gram[i][i] * gram[j][j]).sqrt();
                s.check(
                    label,
                    rel < 1e-6,
                    format!("a={a} psi={psi} rel={rel:.3e}"),
                );
            }
            // +/- cross terms vanish exactly (disjoint supports).
            let mut cross_ok = true;
            for i in 0..3 {
                for j in 3..6 {
                    if gram[i][j] != 0.0 {
                        cross_ok = false;
                    }
                }
            }
            s.check("plus/minus cross terms", cross_ok, format!("a={a} psi={psi}"));
        }
    }
    // Norm growth of the |b| variation toward the boundary of the disc.
    let norm_at = |a: f64| {
        let p = DiffeoParams::new(
            Complex64::new(a, 0.0),
            Complex64::from_polar(0.25, 0.4),
            0.0,
            0.0,
        )
        .unwrap();
        gram_orthogonality_report(&p, &chart, &cutoffs, &grid).map(|g| g[0][0].sqrt())
    };
    match (norm_at(0.5), norm_at(0.7), norm_at(0.9)) {
        (Ok(n5), Ok(n7), Ok(n9)) => {
            s.check(
                "|b| variation norm grows",
                n5 < n7 && n7 < n9,
                format!("{n5:.3e} {n7:.3e} {n9:.3e}"),
            );
        }
        _ => s.check("|b| variation norm grows", false, "report failed"),
    }
    s.finish()
}

/// Discrete energy, operators, and Hopf-route cross-validation.
pub fn suite_mesh(_level: Level) -> SuiteResult {
    let mut s = Suite::new("mesh");
    let grid = Grid::new(16, 24).unwrap();
    // Conformal invariance at machine precision.
    let mut values = vec![0.0; grid.n_nodes() * 2];
    for i in 0..=grid.n_x {
        for j in 0..grid.n_theta {
            let (x, th) = (grid.x_of(i), grid.theta_of(j));
            let node = grid.node(i, j);
            values[node * 2] = x + 0.3 * th.sin();
            values[node * 2 + 1] = x * x * th.cos();
        }
    }
    let phi: Vec<f64> = (0..grid.n_theta).map(|j| grid.theta_of(j)).collect();
    let u = SurfaceMap { dim: 2, values, phi_plus: phi.clone(), phi_minus: phi };
    let mut g = TensorField::zeros(grid.n_tri());
    let mut g2 = TensorField::zeros(grid.n_tri());
    let mut rng = test_rng(19);
    for t in 0..grid.n_tri() {
        let base = SymTensor { xx: 1.0 + 0.2 * (t as f64 * 0.01).sin(), xt: 0.15, tt: 0.8 };
        g.set(t, base);
        g2.set(t, base.scale(0.1 + 5.0 * rng.gen::<f64>()));
    }
    let (e1, e2) = (energy(&u, &g, &grid).unwrap(), energy(&u, &g2, &grid).unwrap());
    let rel = (e1 - e2).abs() / e1;
    s.check("conformal invariance", rel < 1e-13, format!("rel={rel:.3e}"));

    let (sm, m) = assemble_operators(&g, &grid).unwrap();
    let ones = vec![1.0; sm.n];
    let mut y = vec![0.0; sm.n];
    sm.matvec(&ones, &mut y);
    let worst = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    s.check("stiffness kernel", worst < 1e-12, format!("|S 1| = {worst:.3e}"));
    let total: f64 = m.iter().sum();
    let expect: f64 =
        (0..grid.n_tri()).map(|t| grid.tri_area() * g.at(t).det().sqrt()).sum();
    s.check(
        "lumped mass total",
        (total - expect).abs() < 1e-12 * expect,
        format!("{total} vs {expect}"),
    );
    // E >= Area.
    s.check(
        "energy dominates area",
        energy(&u, &g, &grid).unwrap() >= area(&u, &grid) - 1e-10,
        "AM-GM violated",
    );
    // Hopf dual route: coordinate tensor vs transported components.
    let chart = collar_chart(CollarParams::new(1.0, 0.9).unwrap()).unwrap();
    let diffeo =
        DiffeoParams::new(Complex64::new(0.3, -0.1), Complex64::new(0.2, 0.2), 0.8, -0.5).unwrap();
    let st = MetricState::build(chart, diffeo, CutoffPair::standard(), &grid).unwrap();
    let mut values = vec![0.0; grid.n_nodes() * 3];
    for i in 0..=grid.n_x {
        for j in 0..grid.n_theta {
            let (x, th) = (grid.x_of(i), grid.theta_of(j));
            let node = grid.node(i, j);
            values[node * 3] = (x + 0.2 * th.sin()).cos();
            values[node * 3 + 1] = x * th.cos();
            values[node * 3 + 2] = 0.5 * x * x;
        }
    }
    let phi: Vec<f64> = (0..grid.n_theta).map(|j| grid.theta_of(j)).collect();
    let u3 = SurfaceMap { dim: 3, values, phi_plus: phi.clone(), phi_minus: phi };
    let hopf = hopf_components(&u3, &st.md).unwrap();
    let transported = crate::mesh::re_phi_from_components(&st.md, &hopf.phi1, &hopf.phi2);
    let mut worst = 0.0f64;
    for t in 0..grid.n_tri() {
        let a = hopf.re_phi.at(t);
        let b = transported.at(t);
        let scale = (a.xx.abs() + a.xt.abs() + a.tt.abs()).max(1e-12);
        worst = worst
            .max((a.xx - b.xx).abs() / scale)
            .max((a.xt - b.xt).abs() / scale)
            .max((a.tt - b.tt).abs() / scale);
    }
    s.check("Hopf dual-route agreement", worst < 1e-10, format!("worst rel {worst:.3e}"));
    s.finish()
}

/// Random admissible surface map over the given curves: smooth interior
/// noise plus random monotone boundary lifts pinned at the anchors.
pub fn random_admissible_map(
    grid: &Grid,
    plus: &BoundaryCurve,
    minus: &BoundaryCurve,
    rng: &mut impl Rng,
) -> SurfaceMap {
    let mut u = SurfaceMap::initial(grid, plus, minus).expect("initial map");
    let dim = u.dim;
    // Random monotone lifts: jittered increments renormalized per segment.
    for side in 0..2 {
        let phi = if side == 0 { &mut u.phi_plus } else { &mut u.phi_minus };
        let n = phi.len();
        let anchors = [0, n / 3, 2 * n / 3, n];
        for w in anchors.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            let mut incs: Vec<f64> = (0..len).map(|_| 0.05 + rng.gen::<f64>()).collect();
            let total: f64 = incs.iter().sum();
            let lo = 2.0 * PI * a as f64 / n as f64;
            let hi = 2.0 * PI * b as f64 / n as f64;
            let span = hi - lo;
            let mut acc = lo;
            for (k, inc) in incs.iter_mut().enumerate() {
                if a + k > a {
                    phi[a + k] = acc;
                }
                acc += *inc / total * span;
            }
        }
        // Re-pin anchors bitwise.
        for k in 0..3 {
            let j = k * n / 3;
            phi[j] = 2.0 * PI * j as f64 / n as f64;
        }
    }
    u.refresh_traces(grid, plus, minus);
    // Smooth interior perturbation vanishing on the boundary.
    let (a1, a2, p1, p2): (f64, f64, f64, f64) =
        (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>(), rng.gen::<f64>());
    for i in 1..grid.n_x {
        let x = grid.x_of(i);
        let bump = 1.0 - x * x;
        for j in 0..grid.n_theta {
            let th = grid.theta_of(j);
            let node = grid.node(i, j);
            for d in 0..dim {
                u.values[node * dim + d] += bump
                    * (a1 * (th + p1 * 2.0 * PI + d as f64).sin()
                        + a2 * (2.0 * th + p2 * 2.0 * PI - d as f64).cos())
                    * 0.3;
            }
        }
    }
    u
}

/// Minimizer step: energy inequality, PAVA oracle, boundary-gradient FD.
pub fn suite_plateau(level: Level) -> SuiteResult {
    let mut s = Suite::new("plateau");
    let n_steps = if level == Level::Full { 100 } else { 20 };
    let grid = Grid::new(12, 18).unwrap();
    let plus = presets::circle3d(1.0, 0.5, 32);
    let minus = presets::circle3d(1.0, -0.5, 32);
    let mut rng = test_rng(55);
    let mut worst_violation = 0.0f64;
    for k in 0..n_steps {
        let ell = 0.4 + 2.0 * rng.gen::<f64>();
        let b_scale = 0.5 * rng.gen::<f64>();
        let diffeo = DiffeoParams::new(
            Complex64::from_polar(b_scale, 2.0 * PI * rng.gen::<f64>()),
            Complex64::from_polar(0.5 * rng.gen::<f64>(), 2.0 * PI * rng.gen::<f64>()),
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
        )
        .unwrap();
        let chart = collar_chart(CollarParams::new(1.0, ell).unwrap()).unwrap();
        let st = MetricState::build(chart, diffeo, CutoffPair::standard(), &grid).unwrap();
        let v = random_admissible_map(&grid, &plus, &minus, &mut rng);
        let h = 10f64.powf(-3.0 * rng.gen::<f64>());
        let opts = StepOptions::default();
        match minimize_step(&v, &st.md, &plus, &minus, h, &opts) {
            Ok((w, report)) => {
                let ev = st.md.energy(&v);
                // E(w) + ||w-v||^2/(2h) <= E(v).
                let violation = report.f_final - ev;
                worst_violation = worst_violation.max(violation / ev.max(1e-30));
                if w.check_admissible(&grid, &plus, &minus, 1e-9).is_err() {
                    s.check("admissibility preserved", false, format!("step {k}"));
                }
            }
            Err(e) => s.check("minimize step", false, format!("step {k}: {e}")),
        }
    }
    s.check(
        "discrete energy inequality",
        worst_violation <= 1e-11,
        format!("worst rel violation {worst_violation:.3e}"),
    );

    // PAVA vs exhaustive block-structure oracle on random instances.
    let mut rng = test_rng(77);
    let mut pava_worst = 0.0f64;
    for _ in 0..500 {
        let n = 2 + (rng.gen::<u64>() % 7) as usize;
        let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let ours = pava(&y);
        let mut prefix = vec![0.0; n + 1];
        for k in 0..n {
            prefix[k + 1] = prefix[k] + y[k];
        }
        let mut best = f64::INFINITY;
        let mut best_sol = vec![0.0; n];
        for mask in 0..(1usize << (n - 1)) {
            let mut cost = 0.0;
            let mut sol = vec![0.0; n];
            let mut start = 0usize;
            let mut prev = f64::NEG_INFINITY;
            let mut ok = true;
            for k in 0..n {
                if k == n - 1 || (mask >> k) & 1 == 1 {
                    let mean = (prefix[k + 1] - prefix[start]) / (k + 1 - start) as f64;
                    if mean < prev - 1e-14 {
                        ok = false;
                        break;
                    }
                    for i in start..=k {
                        cost += (y[i] - mean) * (y[i] - mean);
                        sol[i] = mean;
                    }
                    prev = mean;
                    start = k + 1;
                }
            }
            if ok && cost < best {
                best = cost;
                best_sol = sol;
            }
        }
        for (a, b) in ours.iter().zip(&best_sol) {
            pava_worst = pava_worst.max((a - b).abs());
        }
    }
    s.check("PAVA vs brute-force QP", pava_worst < 1e-10, format!("worst {pava_worst:.3e}"));

    // Boundary gradient vs finite differences of F.
    let chart = collar_chart(CollarParams::new(1.0, 1.0).unwrap()).unwrap();
    let st = MetricState::build(chart, DiffeoParams::identity(), CutoffPair::standard(), &grid)
        .unwrap();
    let mut rng = test_rng(99);
    let v = random_admissible_map(&grid, &plus, &minus, &mut rng);
    let mut w = random_admissible_map(&grid, &plus, &minus, &mut rng);
    let h = 0.05;
    let (sm, mass) = assemble_operators(&st.md.g, &grid).unwrap();
    let (gp, gm) = boundary_gradient(&w, &v, &sm, &mass, 1.0 / h, &grid, &plus, &minus);
    // Random direction vanishing at the anchors.
    let n = grid.n_theta;
    let dir_p: Vec<f64> = (0..n)
        .map(|j| if j % (n / 3) == 0 { 0.0 } else { rng.gen::<f64>() - 0.5 })
        .collect();
    let dir_m: Vec<f64> = (0..n)
        .map(|j| if j % (n / 3) == 0 { 0.0 } else { rng.gen::<f64>() - 0.5 })
        .collect();
    let f_of = |eps: f64, w: &SurfaceMap| {
        let mut trial = w.clone();
        for j in 0..n {
            trial.phi_plus[j] += eps * dir_p[j];
            trial.phi_minus[j] += eps * dir_m[j];
        }
        trial.refresh_traces(&grid, &plus, &minus);
        st.md.energy(&trial) + 0.5 / h * st.md.l2_diff_sq(&mass, &trial, &v)
    };
    let eps = 1e-6;
    let fd = (f_of(eps, &w) - f_of(-eps, &w)) / (2.0 * eps);
    let analytic: f64 = gp.iter().zip(&dir_p).map(|(g, d)| g * d).sum::<f64>()
        + gm.iter().zip(&dir_m).map(|(g, d)| g * d).sum::<f64>();
    let rel = (fd - analytic).abs() / analytic.abs().max(1e-12);
    s.check("boundary gradient FD", rel < 1e-5, format!("rel={rel:.3e}"));
    let _ = &mut w;
    s.finish()
}

/// Hopf projection: idempotence, dl/dt consistency, energy response.
pub fn suite_projection(level: Level) -> SuiteResult {
    let mut s = Suite::new("projection");
    let grid = if level == Level::Full {
        Grid::new(64, 48).unwrap()
    } else {
        Grid::new(32, 24).unwrap()
    };
    let chart = collar_chart(CollarParams::new(1.0, 1.2).unwrap()).unwrap();
    let diffeo =
        DiffeoParams::new(Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.15), 0.6, -0.4)
            .unwrap();
    let st = MetricState::build(chart, diffeo, CutoffPair::standard(), &grid).unwrap();
    // Idempotence.
    let coeff = [0.2, -0.1, 0.05, 0.12, -0.07, 0.15, -0.2];
    let mut field = TensorField::zeros(grid.n_tri());
    for t in 0..grid.n_tri() {
        let mut acc = SymTensor::default();
        for (i, &ci) in coeff.iter().enumerate() {
            let ti = st.tangents[i].at(t);
            acc.xx += 4.0 * ci * ti.xx;
            acc.xt += 4.0 * ci * ti.xt;
            acc.tt += 4.0 * ci * ti.tt;
        }
        field.set(t, acc);
    }
    let (c, _) = project_hopf(&field, &st).unwrap();
    let mut worst = 0.0f64;
    for i in 0..7 {
        worst = worst.max((c[i] - coeff[i]).abs() / coeff[i].abs());
    }
    s.check("projection idempotence", worst <= 1e-10, format!("worst rel {worst:.3e}"));

    // Parametric vs holomorphic dl/dt on the criterion grid.
    let grid_c = Grid::new(64, 48).unwrap();
    let st_c = MetricState::build(
        collar_chart(CollarParams::new(1.0, 1.2).unwrap()).unwrap(),
        DiffeoParams::identity(),
        CutoffPair::standard(),
        &grid_c,
    )
    .unwrap();
    let mut values = vec![0.0; grid_c.n_nodes() * 3];
    for i in 0..=grid_c.n_x {
        for j in 0..grid_c.n_theta {
            let (x, th) = (grid_c.x_of(i), grid_c.theta_of(j));
            let node = grid_c.node(i, j);
            let r = 1.0 + 0.3 * x;
            values[node * 3] = r * th.cos();
            values[node * 3 + 1] = r * th.sin();
            values[node * 3 + 2] = 0.8 * x + 0.1 * (2.0 * th).sin();
        }
    }
    let phi: Vec<f64> = (0..grid_c.n_theta).map(|j| grid_c.theta_of(j)).collect();
    let u = SurfaceMap { dim: 3, values, phi_plus: phi.clone(), phi_minus: phi };
    let hopf = hopf_components(&u, &st_c.md).unwrap();
    let (c, _) = project_hopf(&hopf.re_phi, &st_c).unwrap();
    let closed = crate::hopf::dl_dt_closed_form(&hopf, &st_c);
    let rel = (c[0] - closed).abs() / closed.abs().max(1e-30);
    s.check("dl/dt parametric vs holomorphic", rel < 0.01, format!("rel={rel:.3e}"));

    // Energy response: dE = -dt ||dg/dt||^2 + O(dt^2), order >= 1.9 by halving.
    let e0 = st_c.md.energy(&u);
    let defect = |dt: f64| {
        let (end, report) = ode_step(&st_c, &u, dt, 8, 1e-9, 0.9999).unwrap();
        (end.md.energy(&u) - e0) + report.speed_sq_integral
    };
    let d1 = defect(0.2).abs();
    let d2 = defect(0.1).abs();
    let order = (d1 / d2).log2();
    s.check("energy response order", order >= 1.9, format!("order {order:.2}"));
    s.finish()
}

/// Run all suites at the given level. `corrupt_cutoffs` is a negative-control
/// hook: it feeds the moebius suite cutoffs with displaced windows, which
/// must make that suite fail.
pub fn run_all(level: Level, corrupt_cutoffs: bool) -> Vec<SuiteResult> {
    let cutoffs = if corrupt_cutoffs {
        CutoffPair::with_windows(0.3, 0.45, 0.1, 0.2)
    } else {
        CutoffPair::standard()
    };
    vec![
        suite_collar_norms(level),
        suite_collar_geometry(level),
        suite_moebius(level, cutoffs),
        suite_mesh(level),
        suite_plateau(level),
        suite_projection(level),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        for r in run_all(Level::Quick, false) {
            assert!(r.passed, "{} failed:\n{}", r.name, r.detail);
        }
    }

    #[test]
    fn corrupted_cutoffs_fail_moebius_suite() {
        let results = run_all(Level::Quick, true);
        let moebius = results.iter().find(|r| r.name == "moebius").unwrap();
        assert!(!moebius.passed, "negative control did not trip");
        for r in results.iter().filter(|r| r.name != "moebius") {
            assert!(r.passed, "{} failed:\n{}", r.name, r.detail);
        }
    }
}
