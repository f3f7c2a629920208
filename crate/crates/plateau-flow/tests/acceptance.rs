//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Criteria 6-9 share two desk-scale flow runs (catenoid and Goldschmidt
//! regimes of coaxial unit circles) through lazily initialized fixtures.

use plateau_flow::collar::{collar_chart, half_length_y, CollarParams};
use plateau_flow::config::FlowConfig;
use plateau_flow::flow::{self, Classification, FlowTrajectory};
use plateau_flow::moebius::CutoffPair;
use plateau_flow::presets;
use plateau_flow::verify::{self, Level};
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

fn report(criterion: &str, pass: bool, detail: String) {
    println!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion}: {detail}");
}

fn assert_suite(criterion: &str, results: Vec<verify::SuiteResult>, budget_s: f64, t0: Instant) {
    let elapsed = t0.elapsed().as_secs_f64();
    let mut pass = elapsed < budget_s;
    let mut detail = String::new();
    for r in &results {
        if !r.passed {
            pass = false;
            detail.push_str(&format!("[{} failed: {}] ", r.name, r.detail.trim()));
        }
    }
    detail.push_str(&format!("runtime {elapsed:.1}s (budget {budget_s}s)"));
    report(criterion, pass, detail);
}

#[test]
fn criterion_1_closed_form_suite() {
    let t0 = Instant::now();
    let results = vec![verify::suite_collar_norms(Level::Full)];
    assert_suite("1 (closed forms)", results, 5.0, t0);
}

#[test]
fn criterion_2_geometry_suite() {
    let t0 = Instant::now();
    let results = vec![verify::suite_collar_geometry(Level::Full)];
    assert_suite("2 (geometry)", results, 30.0, t0);
}

#[test]
fn criterion_3_orthogonality_suite() {
    use num_complex::Complex64;
    use plateau_flow::mesh::Grid;
    use plateau_flow::moebius::{gram_orthogonality_report, DiffeoParams};
    let t0 = Instant::now();
    let grid = Grid::new(96, 192).unwrap();
    let chart = collar_chart(CollarParams::new(1.0, 1.0).unwrap()).unwrap();
    let cut = CutoffPair::standard();
    let mut pass = true;
    let mut detail = String::new();
    let mut worst_rel = 0.0f64;
    for &psi in &[0.0, 1.1] {
        for &a in &[0.3, 0.6, 0.9] {
            let p = DiffeoParams::new(
                Complex64::from_polar(a, psi),
                Complex64::from_polar(0.25, 0.4),
                0.7,
                -0.2,
            )
            .unwrap();
            let gram = gram_orthogonality_report(&p, &chart, &cut, &grid).unwrap();
            for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let rel = gram[i][j].abs() / (gram[i][i] * gram[j][j]).sqrt();
                worst_rel = worst_rel.max(rel);
                if rel >= 1e-6 {
                    pass = false;
                    detail.push_str(&format!("[cross ({i},{j}) a={a} psi={psi}: {rel:.2e}] "));
                }
            }
        }
    }
    let norm_at = |a: f64| {
        let p = DiffeoParams::new(
            Complex64::new(a, 0.0),
            Complex64::from_polar(0.25, 0.4),
            0.0,
            0.0,
        )
        .unwrap();
        gram_orthogonality_report(&p, &chart, &cut, &grid).unwrap()[0][0].sqrt()
    };
    let (n5, n7, n9) = (norm_at(0.5), norm_at(0.7), norm_at(0.9));
    if !(n5 < n7 && n7 < n9) {
        pass = false;
        detail.push_str(&format!("[norms not increasing: {n5:.3e} {n7:.3e} {n9:.3e}] "));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 30.0 {
        pass = false;
    }
    detail.push_str(&format!(
        "worst cross {worst_rel:.2e}, |b|-norms {n5:.2e}<{n7:.2e}<{n9:.2e}, runtime {elapsed:.1}s"
    ));
    report("3 (orthogonality)", pass, detail);
}

#[test]
fn criterion_4_minimizer_suite() {
    let t0 = Instant::now();
    let results = vec![verify::suite_plateau(Level::Full)];
    assert_suite("4 (minimizer)", results, 60.0, t0);
}

#[test]
fn criterion_5_projection_suite() {
    let t0 = Instant::now();
    let results = vec![verify::suite_projection(Level::Full)];
    assert_suite("5 (projection)", results, 60.0, t0);
}

struct Fixture {
    traj: FlowTrajectory,
    seconds: f64,
}

fn catenoid() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| {
        let (plus, minus) = presets::curve_preset("circles r=1 sep=0.8").unwrap();
        let mut cfg = FlowConfig::default();
        cfg.t_max = 30.0;
        let t0 = Instant::now();
        let traj = flow::run(&cfg, &plus, &minus, None).expect("catenoid run");
        Fixture { traj, seconds: t0.elapsed().as_secs_f64() }
    })
}

fn goldschmidt() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| {
        let (plus, minus) = presets::curve_preset("circles r=1 sep=2.4").unwrap();
        let mut cfg = FlowConfig::default();
        cfg.t_max = 200.0;
        cfg.ell_floor = 1e-3;
        let t0 = Instant::now();
        let traj = flow::run(&cfg, &plus, &minus, None).expect("goldschmidt run");
        Fixture { traj, seconds: t0.elapsed().as_secs_f64() }
    })
}

/// Analytic catenoid area for unit circles at half-separation `z0`, outer
/// branch: solve `c cosh(z0/c) = 1`, then `A = 2 pi c (z0 + c/2 sinh(2 z0/c))`.
fn catenoid_area_oracle(z0: f64) -> f64 {
    // The outer root lies right of the minimum of c cosh(z0/c).
    let splitter = z0 / 1.1997; // coth x = x at x ~ 1.19968
    let f = |c: f64| c * (z0 / c).cosh() - 1.0;
    let (mut lo, mut hi) = (splitter, 4.0);
    assert!(f(lo) < 0.0 && f(hi) > 0.0, "oracle bracket");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    2.0 * PI * c * (z0 + 0.5 * c * (2.0 * z0 / c).sinh())
}

/// Critical half-separation for existence of a catenoid between unit
/// circles: solve `coth x = x`, then `h* = x / cosh(x)`.
fn critical_half_separation() -> f64 {
    let f = |x: f64| 1.0 / x.tanh() - x;
    let (mut lo, mut hi) = (1.0, 1.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    x / x.cosh()
}

#[test]
fn criterion_6_catenoid_reproduction() {
    let fx = catenoid();
    let last = fx.traj.records.last().unwrap();
    let oracle = catenoid_area_oracle(0.4);
    let area_rel = (last.area - oracle).abs() / oracle;
    let conf = last.hopf_l1_recovered / last.energy;
    let pass = fx.traj.classification == Classification::ConvergedCylinder
        && area_rel < 0.01
        && conf < 1e-2
        && fx.seconds < 600.0;
    report(
        "6 (catenoid)",
        pass,
        format!(
            "{} in {:.0}s; area {:.6} vs oracle {:.6} (rel {:.2e}); conformality {:.2e} \
             (recovered-gradient estimator; plain per-triangle {:.2e})",
            fx.traj.classification,
            fx.seconds,
            last.area,
            oracle,
            area_rel,
            conf,
            last.hopf_l1 / last.energy,
        ),
    );
}

#[test]
fn criterion_7_goldschmidt_reproduction() {
    let fx = goldschmidt();
    let mut pass = fx.traj.classification == Classification::DegenerateTwoDiscs;
    let mut detail = format!("{} in {:.0}s", fx.traj.classification, fx.seconds);
    // The scenario sits beyond the critical half-separation.
    let hstar = critical_half_separation();
    detail.push_str(&format!("; half-sep 1.2 > h* = {hstar:.4}"));
    pass &= 1.2 > hstar && (hstar - 0.6627).abs() < 5e-4;
    if fx.traj.classification == Classification::DegenerateTwoDiscs {
        let discs = flow::extract_discs(&fx.traj, CutoffPair::standard()).unwrap();
        for (side, d) in discs.iter().enumerate() {
            let area_rel = (d.area - PI).abs() / PI;
            detail.push_str(&format!(
                "; disc{side}: area {:.4} (rel {:.2e}), conf {:.2e} (plain {:.2e}), span dev {:.2e}",
                d.area,
                area_rel,
                d.conformality,
                d.conformality_plain,
                (d.boundary_span - 2.0 * PI).abs()
            ));
            pass &= area_rel < 0.05;
            // 10x the converged-cylinder threshold of 1e-2.
            pass &= d.conformality < 0.1;
            pass &= (d.boundary_span - 2.0 * PI).abs() < 1e-12;
        }
    }
    // ell monotone decreasing over the final quartile of steps.
    let n = fx.traj.records.len();
    let tail = &fx.traj.records[3 * n / 4..];
    let monotone = tail.windows(2).all(|w| w[1].ell <= w[0].ell + 1e-15);
    detail.push_str(&format!("; ell tail monotone: {monotone}"));
    pass &= monotone;
    pass &= fx.seconds < 600.0;
    report("7 (goldschmidt)", pass, detail);
}

#[test]
fn criterion_8_scheme_convergence() {
    // Final energies at a fixed mid-transient time T = 0.4 (all three step
    // sizes divide it exactly) on the catenoid scenario.
    let (plus, minus) = presets::curve_preset("circles r=1 sep=0.8").unwrap();
    let mut energies = Vec::new();
    for &h in &[4e-2, 2e-2, 1e-2] {
        let mut cfg = FlowConfig::default();
        cfg.h = h;
        cfg.t_max = 0.4;
        cfg.eps_stat = 1e-14;
        cfg.eps_map = 1e-14;
        let traj = flow::run(&cfg, &plus, &minus, None).expect("refinement run");
        energies.push(traj.records.last().unwrap().energy);
    }
    let d1 = (energies[0] - energies[1]).abs();
    let d2 = (energies[1] - energies[2]).abs();
    let ratio = d1 / d2;
    // The splitting scheme is first order: the ratio approaches 2 from
    // below, which this criterion's literal threshold does not admit; see
    // the decisions ledger for the blocking analysis.
    let pass = ratio >= 2.0;
    report(
        "8 (scheme convergence)",
        pass,
        format!("E = {energies:?}; d1 = {d1:.3e}, d2 = {d2:.3e}, shrink factor {ratio:.3} (need >= 2)"),
    );
}

#[test]
fn criterion_9_global_invariants() {
    let mut pass = true;
    let mut detail = String::new();
    for (name, fx) in [("catenoid", catenoid()), ("goldschmidt", goldschmidt())] {
        let records = &fx.traj.records;
        let e0 = records[0].energy;
        // Energy nonincreasing within 1e-9 E0 per step.
        let mut worst_up = 0.0f64;
        for w in records.windows(2) {
            worst_up = worst_up.max(w[1].energy - w[0].energy);
        }
        if worst_up > 1e-9 * e0 {
            pass = false;
            detail.push_str(&format!("[{name}: energy increase {worst_up:.2e}] "));
        }
        // Cumulative energy inequality.
        let mut dissipated = 0.0;
        for r in &records[1..] {
            let h = records[1].time - records[0].time;
            dissipated += 0.5 * h * r.map_speed * r.map_speed + h * r.metric_speed * r.metric_speed;
        }
        let slack = records.last().unwrap().energy - (e0 - dissipated);
        if slack > 1e-6 * e0 {
            pass = false;
            detail.push_str(&format!("[{name}: energy inequality slack {slack:.2e}] "));
        }
        // Energy lower bound E(t) >= (pi/2) dG^2 / Y(ell(t)) and the induced
        // ceiling on ell (checked against E0 >= E(t)).
        let dg = fx.traj.delta_gamma;
        for r in records {
            let y = half_length_y(CollarParams::new(fx.traj.eta, r.ell).unwrap());
            let bound = 0.5 * PI * dg * dg / y;
            if r.energy < bound - 1e-3 * e0 || e0 < bound - 1e-3 * e0 {
                pass = false;
                detail.push_str(&format!("[{name}: energy bound violated at t={}] ", r.time));
                break;
            }
        }
        // Winding report consistency: n = floor(phi / 2 pi) and the
        // fractional part lies in [0, 2 pi). For phi a tiny negative
        // roundoff value the fraction 2 pi - eps rounds to exactly 2 pi in
        // f64, which the check must admit.
        for r in records {
            for (phi, n) in [(r.phi_plus, r.wind_plus), (r.phi_minus, r.wind_minus)] {
                let frac = phi - 2.0 * PI * n as f64;
                let in_range = (0.0..2.0 * PI).contains(&frac)
                    || (frac == 2.0 * PI && phi < 2.0 * PI * (n + 1) as f64);
                if n != (phi / (2.0 * PI)).floor() as i64 || !in_range {
                    pass = false;
                    detail.push_str(&format!("[{name}: winding fraction {frac} (n={n})] "));
                    break;
                }
            }
        }
        // Three-point anchors bitwise exact on the final map.
        let grid = fx.traj.grid;
        for k in 0..3 {
            let j = grid.anchor_js()[k];
            let want = grid.theta_of(j);
            if fx.traj.final_map.phi_plus[j] != want || fx.traj.final_map.phi_minus[j] != want {
                pass = false;
                detail.push_str(&format!("[{name}: anchor {k} not exact] "));
            }
        }
        detail.push_str(&format!(
            "[{name}: {} steps, worst energy increase {worst_up:.1e}, dissipation accounted {dissipated:.4}] ",
            records.len() - 1
        ));
    }
    // Bitwise reproducibility of trajectory.csv across two identical runs.
    let (plus, minus) = presets::curve_preset("circles r=1 sep=0.8").unwrap();
    let mut cfg = FlowConfig::default();
    cfg.h = 4e-2;
    cfg.t_max = 0.4;
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for k in 0..2 {
        let traj = flow::run(&cfg, &plus, &minus, None).unwrap();
        let p = dir.path().join(format!("traj{k}.csv"));
        flow::write_trajectory_csv(&traj, &p).unwrap();
        paths.push(p);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    if a != b {
        pass = false;
        detail.push_str("[trajectory.csv not bitwise reproducible] ");
    } else {
        detail.push_str("[trajectory.csv bitwise reproducible]");
    }
    report("9 (global invariants)", pass, detail);
}
