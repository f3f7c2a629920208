//! Outer time-discretization loop, diagnostics, stopping rules, and the
//! asymptotic classification.
//!
//! Each macro step advances the metric by the projected-Hopf ODE with the map
//! frozen, then replaces the map by a minimizer of the proximal energy with
//! the metric frozen. Runs end at a stationary state (minimal cylinder), a
//! collar collapse (two discs), a degenerating boundary Möbius parameter, or
//! the time horizon.

use crate::collar::{collar_chart, half_length_y, CollarParams};
use crate::config::FlowConfig;
use crate::curve::{delta_gamma, BoundaryCurve};
use crate::hopf::{
    dl_dt_closed_form, ode_step, project_hopf, weighted_energy_i, MetricEvent, MetricState,
};
use crate::mesh::{area, assemble_operators, hopf_components, Grid, SurfaceMap};
use crate::moebius::{CutoffPair, DiffeoParams};
use crate::plateau::{minimize_step, StepOptions};
use crate::{Error, Result};
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

/// Final outcome of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    ConvergedCylinder,
    DegenerateTwoDiscs,
    ThreePointDegenerate,
    MaxTime,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::ConvergedCylinder => "ConvergedCylinder",
            Classification::DegenerateTwoDiscs => "DegenerateTwoDiscs",
            Classification::ThreePointDegenerate => "ThreePointDegenerate",
            Classification::MaxTime => "MaxTime",
        };
        write!(f, "{s}")
    }
}

/// One row of the trajectory.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub area: f64,
    pub ell: f64,
    pub b_plus: (f64, f64),
    pub b_minus: (f64, f64),
    pub phi_plus: f64,
    pub phi_minus: f64,
    /// Winding numbers `floor(phi / 2 pi)`.
    pub wind_plus: i64,
    pub wind_minus: i64,
    /// `||D_t^h u||_{L^2}` against the step's new metric.
    pub map_speed: f64,
    /// RMS metric speed over the step: `sqrt(int ||dg/dt||^2 dt / h)`.
    pub metric_speed: f64,
    /// `||P^V Re Phi||_{L^2}` at the end of the step.
    pub proj_norm: f64,
    /// `||Re Phi||_{L^1}` at the end of the step (per-triangle gradients).
    pub hopf_l1: f64,
    /// `||Re Phi||_{L^1}` from nodally recovered gradients (second-order
    /// estimator of the surface's conformality defect).
    pub hopf_l1_recovered: f64,
    /// Weighted energy `I(t)`.
    pub weighted_i: f64,
    /// Stationarity probe residual.
    pub stationarity: f64,
    /// `dl/dt` from the holomorphic projection (diagnostic).
    pub dl_dt: f64,
    /// Threshold event fired during the metric phase, if any.
    pub event: &'static str,
}

/// A completed run: records, classification, and the final pair.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub records: Vec<StepRecord>,
    pub classification: Classification,
    pub grid: Grid,
    pub final_params: [f64; 7],
    pub final_map: SurfaceMap,
    pub delta_gamma: f64,
    pub eta: f64,
}

fn wind(phi: f64) -> i64 {
    (phi / (2.0 * PI)).floor() as i64
}

/// Classify a trajectory: collar collapse and boundary degeneration take
/// precedence over stationarity; anything else ran out of time.
pub fn classify(records: &[StepRecord], config: &FlowConfig) -> Classification {
    let Some(last) = records.last() else {
        return Classification::MaxTime;
    };
    let b_max = |r: &StepRecord| {
        let bp = (r.b_plus.0 * r.b_plus.0 + r.b_plus.1 * r.b_plus.1).sqrt();
        let bm = (r.b_minus.0 * r.b_minus.0 + r.b_minus.1 * r.b_minus.1).sqrt();
        bp.max(bm)
    };
    if last.ell <= config.ell_floor || last.event == "ell_floor" {
        return Classification::DegenerateTwoDiscs;
    }
    if b_max(last) >= config.b_ceiling || last.event == "b_ceiling" {
        return Classification::ThreePointDegenerate;
    }
    if last.proj_norm < config.eps_stat && last.map_speed < config.eps_map && last.step > 0 {
        return Classification::ConvergedCylinder;
    }
    Classification::MaxTime
}

/// Fixed probe vector fields for the stationarity residual: low-order Fourier
/// modes in theta with polynomial cutoffs in x, all vanishing at the six
/// anchor points and tangential on the boundary.
type Probe = (fn(f64, f64) -> [f64; 2], fn(f64, f64) -> [[f64; 2]; 2]);

fn probe_fields() -> [Probe; 12] {
    // Each entry: X(x,th) = [X^x, X^th] and the Jacobian d X^i / d (x, th).
    [
        (|x, _| [0.0, 1.0 - x * x], |x, _| [[0.0, 0.0], [-2.0 * x, 0.0]]),
        (
            |x, th| [0.0, (1.0 - x * x) * th.sin()],
            |x, th| [[0.0, 0.0], [-2.0 * x * th.sin(), (1.0 - x * x) * th.cos()]],
        ),
        (
            |x, th| [0.0, (1.0 - x * x) * th.cos()],
            |x, th| [[0.0, 0.0], [-2.0 * x * th.cos(), -(1.0 - x * x) * th.sin()]],
        ),
        (|_, th| [0.0, (3.0 * th).sin()], |_, th| [[0.0, 0.0], [0.0, 3.0 * (3.0 * th).cos()]]),
        (
            |_, th| [0.0, 1.0 - (3.0 * th).cos()],
            |_, th| [[0.0, 0.0], [0.0, 3.0 * (3.0 * th).sin()]],
        ),
        (
            |x, th| [0.0, x * (3.0 * th).sin()],
            |x, th| [[0.0, 0.0], [(3.0 * th).sin(), 3.0 * x * (3.0 * th).cos()]],
        ),
        (
            |x, th| [0.0, x * (1.0 - (3.0 * th).cos())],
            |x, th| [[0.0, 0.0], [1.0 - (3.0 * th).cos(), 3.0 * x * (3.0 * th).sin()]],
        ),
        (|x, _| [1.0 - x * x, 0.0], |x, _| [[-2.0 * x, 0.0], [0.0, 0.0]]),
        (
            |x, th| [(1.0 - x * x) * th.sin(), 0.0],
            |x, th| [[-2.0 * x * th.sin(), (1.0 - x * x) * th.cos()], [0.0, 0.0]],
        ),
        (
            |x, th| [(1.0 - x * x) * th.cos(), 0.0],
            |x, th| [[-2.0 * x * th.cos(), -(1.0 - x * x) * th.sin()], [0.0, 0.0]],
        ),
        (
            |x, _| [x * (1.0 - x * x), 0.0],
            |x, _| [[1.0 - 3.0 * x * x, 0.0], [0.0, 0.0]],
        ),
        (
            |x, th| [(1.0 - x * x) * (2.0 * th).sin(), 0.0],
            |x, th| [[-2.0 * x * (2.0 * th).sin(), 2.0 * (1.0 - x * x) * (2.0 * th).cos()], [0.0, 0.0]],
        ),
    ]
}

/// Stationarity residual: evaluates
/// `1/4 int Re Phi . L_X g dv + int du(X) . Lap_g u dv`
/// over the probe fields, normalized by the energy. A diagnostic, not an
/// enforced condition.
pub fn stationarity_residual(u: &SurfaceMap, state: &MetricState) -> Result<f64> {
    let md = &state.md;
    let grid = &md.grid;
    let energy = md.energy(u);
    if energy <= 0.0 {
        return Ok(0.0);
    }
    let hopf = hopf_components(u, md)?;
    let (s, mass) = assemble_operators(&md.g, grid)?;
    let n = grid.n_nodes();
    let dim = u.dim;
    // Discrete Laplacian: Lap u = -M^{-1} S u per component.
    let mut lap = vec![0.0; n * dim];
    let mut comp = vec![0.0; n];
    let mut y = vec![0.0; n];
    for d in 0..dim {
        for node in 0..n {
            comp[node] = u.values[node * dim + d];
        }
        s.matvec(&comp, &mut y);
        for node in 0..n {
            lap[node * dim + d] = -y[node] / mass[node];
        }
    }
    // Boundary rows of the weak Laplacian carry the Neumann flux
    // concentration, which is not part of the interior identity; drop them.
    for j in 0..grid.n_theta {
        for node in [grid.node(0, j), grid.node(grid.n_x, j)] {
            for d in 0..dim {
                lap[node * dim + d] = 0.0;
            }
        }
    }
    // Coordinate derivatives of the metric, by central differences of the
    // analytic pullback, shared by all probe fields.
    let fd = 1e-6;
    let n_tri = grid.n_tri();
    let mut dg_x = Vec::with_capacity(n_tri);
    let mut dg_t = Vec::with_capacity(n_tri);
    for t in 0..n_tri {
        let (xc, tc) = grid.tri_centroid(t);
        let gxp = state.metric_at((xc + fd).min(1.0), tc);
        let gxm = state.metric_at((xc - fd).max(-1.0), tc);
        let gtp = state.metric_at(xc, tc + fd);
        let gtm = state.metric_at(xc, tc - fd);
        let span_x = (xc + fd).min(1.0) - (xc - fd).max(-1.0);
        dg_x.push(gxp.sub(&gxm).scale(1.0 / span_x));
        dg_t.push(gtp.sub(&gtm).scale(1.0 / (2.0 * fd)));
    }
    let mut worst = 0.0f64;
    for (xf, dxf) in probe_fields() {
        let mut term1 = 0.0;
        let mut term2 = 0.0;
        for t in 0..n_tri {
            let (xc, tc) = grid.tri_centroid(t);
            let xv = xf(xc, tc);
            let dx = dxf(xc, tc);
            let g = md.g.at(t);
            let (dgx, dgt) = (dg_x[t], dg_t[t]);
            let lie = crate::moebius::SymTensor {
                xx: xv[0] * dgx.xx
                    + xv[1] * dgt.xx
                    + 2.0 * (g.xx * dx[0][0] + g.xt * dx[1][0]),
                xt: xv[0] * dgx.xt
                    + xv[1] * dgt.xt
                    + (g.xx * dx[0][1] + g.xt * dx[1][1])
                    + (g.xt * dx[0][0] + g.tt * dx[1][0]),
                tt: xv[0] * dgx.tt
                    + xv[1] * dgt.tt
                    + 2.0 * (g.xt * dx[0][1] + g.tt * dx[1][1]),
            };
            term1 += 0.25
                * md.weight[t]
                * crate::mesh::tensor_pair(md.inv.at(t), hopf.re_phi.at(t), lie);
            // du(X) . Lap u, with Lap u averaged over the triangle nodes.
            let nodes = grid.tri_nodes(t);
            for d in 0..dim {
                let (ux, ut) = grid.tri_grad(
                    t,
                    u.values[nodes[0] * dim + d],
                    u.values[nodes[1] * dim + d],
                    u.values[nodes[2] * dim + d],
                );
                let du_x = xv[0] * ux + xv[1] * ut;
                let lap_avg = (lap[nodes[0] * dim + d]
                    + lap[nodes[1] * dim + d]
                    + lap[nodes[2] * dim + d])
                    / 3.0;
                term2 += md.weight[t] * du_x * lap_avg;
            }
        }
        worst = worst.max((term1 + term2).abs());
    }
    Ok(worst / energy)
}

/// Per-disc report for the degenerate outcome.
#[derive(Debug, Clone, Copy)]
pub struct DiscReport {
    pub area: f64,
    pub energy: f64,
    /// Per-triangle `||Re Phi||_{L^1}` restricted to `|x| >= 0.1` on this side.
    pub hopf_l1_outer: f64,
    /// Recovered-gradient `||Re Phi||_{L^1}` on the same region.
    pub hopf_l1_outer_recovered: f64,
    /// Recovered conformality defect normalized by the side's energy.
    pub conformality: f64,
    /// Per-triangle counterpart of `conformality`.
    pub conformality_plain: f64,
    /// Total increase of the boundary parameter lift (must be 2 pi).
    pub boundary_span: f64,
}

/// Split the final map at `x = 0` and report per-disc area, conformality away
/// from the collapsing collar, and the boundary span. Only meaningful for
/// the two-disc classification.
pub fn extract_discs(traj: &FlowTrajectory, cutoffs: CutoffPair) -> Result<[DiscReport; 2]> {
    if traj.classification != Classification::DegenerateTwoDiscs {
        return Err(Error::Usage(format!(
            "extract_discs called on a {} trajectory",
            traj.classification
        )));
    }
    let state = state_from_params(&traj.final_params, traj.eta, cutoffs, &traj.grid)?;
    let u = &traj.final_map;
    let md = &state.md;
    let grid = &traj.grid;
    let hopf = hopf_components(u, md)?;
    let tri_area = grid.tri_area();
    let mut reports = [DiscReport {
        area: 0.0,
        energy: 0.0,
        hopf_l1_outer: 0.0,
        hopf_l1_outer_recovered: 0.0,
        conformality: 0.0,
        conformality_plain: 0.0,
        boundary_span: 0.0,
    }; 2];
    for t in 0..grid.n_tri() {
        let (xc, _) = grid.tri_centroid(t);
        let side = usize::from(xc > 0.0);
        let nodes = grid.tri_nodes(t);
        let (mut exx, mut ext, mut ett) = (0.0, 0.0, 0.0);
        let inv = md.inv.at(t);
        let mut e = 0.0;
        for d in 0..u.dim {
            let (ux, ut) = grid.tri_grad(
                t,
                u.values[nodes[0] * u.dim + d],
                u.values[nodes[1] * u.dim + d],
                u.values[nodes[2] * u.dim + d],
            );
            exx += ux * ux;
            ext += ux * ut;
            ett += ut * ut;
            e += inv.xx * ux * ux + 2.0 * inv.xt * ux * ut + inv.tt * ut * ut;
        }
        reports[side].area += tri_area * (exx * ett - ext * ext).max(0.0).sqrt();
        reports[side].energy += 0.5 * md.weight[t] * e;
        if xc.abs() >= 0.1 {
            let rp = hopf.re_phi.at(t);
            let norm = crate::mesh::tensor_pair(inv, rp, rp).max(0.0).sqrt();
            reports[side].hopf_l1_outer += md.weight[t] * norm;
        }
    }
    reports[1].hopf_l1_outer_recovered =
        crate::hopf::hopf_l1_recovered_region(u, &state, |x| x >= 0.1);
    reports[0].hopf_l1_outer_recovered =
        crate::hopf::hopf_l1_recovered_region(u, &state, |x| x <= -0.1);
    for (side, phi) in [(1usize, &u.phi_plus), (0usize, &u.phi_minus)] {
        let mut span = 0.0;
        for j in 0..phi.len() {
            let next = if j + 1 < phi.len() { phi[j + 1] } else { phi[0] + 2.0 * PI };
            span += next - phi[j];
        }
        reports[side].boundary_span = span;
    }
    for r in &mut reports {
        if r.energy > 0.0 {
            r.conformality = r.hopf_l1_outer_recovered / r.energy;
            r.conformality_plain = r.hopf_l1_outer / r.energy;
        }
    }
    Ok(reports)
}

fn state_from_params(
    p: &[f64; 7],
    eta: f64,
    cutoffs: CutoffPair,
    grid: &Grid,
) -> Result<MetricState> {
    let chart = collar_chart(CollarParams::new(eta, p[0])?)?;
    let diffeo = DiffeoParams::from_array([p[1], p[2], p[3], p[4], p[5], p[6]])?;
    MetricState::build(chart, diffeo, cutoffs, grid)
}

/// Run the flow.
pub fn run(
    config: &FlowConfig,
    plus: &BoundaryCurve,
    minus: &BoundaryCurve,
    u0: Option<SurfaceMap>,
) -> Result<FlowTrajectory> {
    run_with_observer(config, plus, minus, u0, &mut |_, _| Ok(()))
}

/// [`run`] with a per-step callback `(step index, current map)`, used for
/// strided mesh export.
pub fn run_with_observer(
    config: &FlowConfig,
    plus: &BoundaryCurve,
    minus: &BoundaryCurve,
    u0: Option<SurfaceMap>,
    observer: &mut dyn FnMut(usize, &SurfaceMap) -> Result<()>,
) -> Result<FlowTrajectory> {
    config.validate()?;
    let grid = Grid::new(config.n_x, config.n_theta)?;
    let dg = delta_gamma(plus, minus)?;
    let cutoffs = CutoffPair::standard();
    let chart = collar_chart(CollarParams::new(config.eta, 1.0)?)?;
    let ell_init = config.ell_init.unwrap_or(chart.ell0);
    let chart = chart.with_ell(ell_init)?;
    let mut state = MetricState::build(chart, DiffeoParams::identity(), cutoffs, &grid)?;
    let mut u = match u0 {
        Some(u) => u,
        None => SurfaceMap::initial(&grid, plus, minus)?,
    };
    u.check_admissible(&grid, plus, minus, 1e-9)?;
    if u.dim != plus.dim {
        return Err(Error::InvalidParam("initial map dimension mismatch".into()));
    }

    let step_opts = StepOptions {
        tol_lin: config.tol_lin,
        tol_kkt: config.tol_kkt,
        max_inner: 200,
        clamp: config.clamp,
        freeze_boundary: false,
    };

    let mut records: Vec<StepRecord> = Vec::new();
    let e0 = state.md.energy(&u);
    let record0 = make_record(0, 0.0, &u, &state, 0.0, 0.0, "", e0)?;
    records.push(record0);
    observer(0, &u)?;

    let n_steps = (config.t_max / config.h + 0.5).floor() as usize;
    let tol_e = 1e-9 * e0.max(1e-30);
    for j in 1..=n_steps {
        let t = j as f64 * config.h;
        let step_ctx = |e: Error, records: &[StepRecord]| -> Error {
            let last = records.last();
            let dump = last
                .map(|r| {
                    format!(
                        "t={} E={} ell={} b+=({},{}) b-=({},{}) phi=({},{})",
                        r.time,
                        r.energy,
                        r.ell,
                        r.b_plus.0,
                        r.b_plus.1,
                        r.b_minus.0,
                        r.b_minus.1,
                        r.phi_plus,
                        r.phi_minus
                    )
                })
                .unwrap_or_default();
            Error::Solver(format!("step {j}: {e}; last state: {dump}"))
        };

        let (new_state, ode_report) = match ode_step(
            &state,
            &u,
            config.h,
            config.n_sub,
            config.ell_floor,
            config.b_ceiling,
        ) {
            Ok(v) => v,
            Err(e) => return Err(step_ctx(e, &records)),
        };
        let (w, step_report) =
            match minimize_step(&u, &new_state.md, plus, minus, config.h, &step_opts) {
                Ok(v) => v,
                Err(e) => return Err(step_ctx(e, &records)),
            };

        let event = match ode_report.event {
            Some(MetricEvent::EllFloor) => "ell_floor",
            Some(MetricEvent::BCeiling) => "b_ceiling",
            None => "",
        };
        let map_speed =
            (2.0 * config.h * (step_report.f_final - step_report.energy_final)).max(0.0).sqrt()
                / config.h;
        let metric_speed = (ode_report.speed_sq_integral / config.h).max(0.0).sqrt();
        let rec = make_record(
            j,
            t,
            &w,
            &new_state,
            map_speed,
            metric_speed,
            event,
            step_report.energy_final,
        )?;

        // Energy must not increase beyond the per-step tolerance.
        let prev_e = records.last().unwrap().energy;
        if rec.energy > prev_e + tol_e {
            return Err(step_ctx(
                Error::Numerical(format!(
                    "energy increased: {} -> {} (tol {tol_e})",
                    prev_e, rec.energy
                )),
                &records,
            ));
        }
        // A-priori bound: E0 >= (pi/2) delta^2 / Y(ell) within slack.
        let y = half_length_y(CollarParams { eta: config.eta, ell: rec.ell });
        if e0 < 0.5 * PI * dg * dg / y - 1e-3 * e0.max(1.0) {
            return Err(step_ctx(
                Error::Numerical(format!(
                    "ell = {} violates the a-priori bound (Y = {y}, E0 = {e0})",
                    rec.ell
                )),
                &records,
            ));
        }

        records.push(rec);
        u = w;
        state = new_state;
        observer(j, &u)?;

        let last = records.last().unwrap();
        if last.event == "ell_floor" || last.event == "b_ceiling" {
            break;
        }
        if last.proj_norm < config.eps_stat && last.map_speed < config.eps_map {
            break;
        }
    }

    let classification = classify(&records, config);
    Ok(FlowTrajectory {
        records,
        classification,
        grid,
        final_params: state.params7(),
        final_map: u,
        delta_gamma: dg,
        eta: config.eta,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_record(
    step: usize,
    time: f64,
    u: &SurfaceMap,
    state: &MetricState,
    map_speed: f64,
    metric_speed: f64,
    event: &'static str,
    energy: f64,
) -> Result<StepRecord> {
    let hopf = hopf_components(u, &state.md)?;
    let (_, speed) = project_hopf(&hopf.re_phi, state)?;
    let p = state.params7();
    Ok(StepRecord {
        step,
        time,
        energy,
        area: area(u, &state.md.grid),
        ell: p[0],
        b_plus: (p[1], p[2]),
        b_minus: (p[3], p[4]),
        phi_plus: p[5],
        phi_minus: p[6],
        wind_plus: wind(p[5]),
        wind_minus: wind(p[6]),
        map_speed,
        metric_speed,
        proj_norm: 4.0 * speed,
        hopf_l1: state.md.tensor_l1(&hopf.re_phi),
        hopf_l1_recovered: crate::hopf::hopf_l1_recovered(u, state),
        weighted_i: weighted_energy_i(u, state),
        stationarity: stationarity_residual(u, state)?,
        dl_dt: dl_dt_closed_form(&hopf, state),
        event,
    })
}

pub const CSV_HEADER: &str = "# plateau-flow v1";

/// Write the trajectory as CSV (one record per step).
pub fn write_trajectory_csv(traj: &FlowTrajectory, path: &Path) -> Result<()> {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    s.push_str(
        "step,time,energy,area,ell,re_b_plus,im_b_plus,re_b_minus,im_b_minus,phi_plus,phi_minus,\
         wind_plus,wind_minus,map_speed,metric_speed,proj_hopf_norm,hopf_l1,hopf_l1_recovered,\
         weighted_energy,stationarity,dl_dt,event\n",
    );
    for r in &traj.records {
        s.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            r.step,
            r.time,
            r.energy,
            r.area,
            r.ell,
            r.b_plus.0,
            r.b_plus.1,
            r.b_minus.0,
            r.b_minus.1,
            r.phi_plus,
            r.phi_minus,
            r.wind_plus,
            r.wind_minus,
            r.map_speed,
            r.metric_speed,
            r.proj_norm,
            r.hopf_l1,
            r.hopf_l1_recovered,
            r.weighted_i,
            r.stationarity,
            r.dl_dt,
            r.event,
        ));
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Write the final state as a self-describing text dump.
pub fn write_final_state(traj: &FlowTrajectory, path: &Path) -> Result<()> {
    let p = traj.final_params;
    let last = traj.records.last();
    let mut s = String::new();
    s.push_str("plateau-flow final state v1\n");
    s.push_str(&format!("classification={}\n", traj.classification));
    s.push_str(&format!("steps={}\n", traj.records.len().saturating_sub(1)));
    if let Some(r) = last {
        s.push_str(&format!("time={:.17e}\n", r.time));
        s.push_str(&format!("energy={:.17e}\n", r.energy));
        s.push_str(&format!("area={:.17e}\n", r.area));
    }
    s.push_str(&format!("eta={:.17e}\n", traj.eta));
    s.push_str(&format!("ell={:.17e}\n", p[0]));
    s.push_str(&format!("b_plus={:.17e} {:.17e}\n", p[1], p[2]));
    s.push_str(&format!("b_minus={:.17e} {:.17e}\n", p[3], p[4]));
    s.push_str(&format!("phi_plus={:.17e}\n", p[5]));
    s.push_str(&format!("phi_minus={:.17e}\n", p[6]));
    s.push_str(&format!("delta_gamma={:.17e}\n", traj.delta_gamma));
    s.push_str(&format!("grid={}x{}\n", traj.grid.n_x, traj.grid.n_theta));
    std::fs::write(path, s)?;
    Ok(())
}

/// Export a map as a Wavefront OBJ mesh (vertices and triangular faces only).
pub fn write_obj(u: &SurfaceMap, grid: &Grid, path: &Path) -> Result<()> {
    let mut s = String::new();
    for node in 0..grid.n_nodes() {
        let v = u.value(node);
        let (x, y, z) = match u.dim {
            0 => (0.0, 0.0, 0.0),
            1 => (v[0], 0.0, 0.0),
            2 => (v[0], v[1], 0.0),
            _ => (v[0], v[1], v[2]),
        };
        s.push_str(&format!("v {x} {y} {z}\n"));
    }
    for t in 0..grid.n_tri() {
        let [a, b, c] = grid.tri_nodes(t);
        s.push_str(&format!("f {} {} {}\n", a + 1, b + 1, c + 1));
    }
    std::fs::write(path, s)?;
    Ok(())
}
