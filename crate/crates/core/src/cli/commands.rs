use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ApproxSpec, ExperimentConfig};
use super::experiment::{build_graph, hausdorff_for, Experiment, Model};
use super::output::{gain_lines, hausdorff_lines, join, run_lines, write_atomic};
use super::{EXIT_NONCONVERGED, EXIT_NUMERIC, EXIT_OK};
use crate::dynamics::{DynamicsParams, Mode};
use crate::error::{Error, Result};
use crate::game::{random_point_in, AggregativeGame, CournotModel, DemandResponseModel, ResponseOptions};
use crate::geometry::{curvature_nu, delta_bound, inscribe_regular, Polyhedron};
use crate::linalg::{self, fmt17};
use crate::metrics::{epsilon_csv, epsilon_measure_with, perturbation_magnitude, EpsilonRow};
use crate::network::{gain_gate, Digraph};
use crate::par;
use crate::polyproj::{kkt_residual, project_polyhedron, DEFAULT_TOL};

fn header(command: &str, cfg: &ExperimentConfig, exp: &Experiment) -> String {
    let mut out = format!("command = {command}\n");
    out.push_str(&cfg.raw.to_text());
    let _ = writeln!(out, "resolved.beta1 = {}", exp.params.beta1);
    let _ = writeln!(out, "resolved.beta2 = {}", exp.params.beta2);
    let _ = writeln!(out, "resolved.seed = {}", cfg.seed);
    out
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<i32> {
    let exp = Experiment::build(cfg)?;
    let game = exp.model.game();
    let (traj, rep) = exp.run()?;
    let mut report = header("run", cfg, &exp);
    report.push_str(&run_lines("result.", &rep));
    report.push_str(&gain_lines("gain.", &rep.gain));
    if let Some(polys) = &exp.polys {
        report.push_str(&hausdorff_lines("hausdorff.", &hausdorff_for(game, polys)));
    }
    write_atomic(&cfg.out_dir, "trajectory.csv", &traj.to_csv())?;
    write_atomic(&cfg.out_dir, "report.txt", &report)?;
    if exp.polys.is_none() {
        let n = game.action_dim();
        let mut ne = String::from("player,component,x\n");
        for (i, xi) in rep.x_final.chunks_exact(n).enumerate() {
            for (k, v) in xi.iter().enumerate() {
                let _ = writeln!(ne, "{},{},{}", i + 1, k + 1, fmt17(*v));
            }
        }
        write_atomic(&cfg.out_dir, "reference_ne.csv", &ne)?;
    }
    if let Some(w) = &rep.gain_warning {
        eprintln!("warning: {w}");
    }
    println!(
        "{} run: converged={} steps={} residuals=({:.3e}, {:.3e}) wall={:.3}s -> {}",
        rep.mode,
        rep.converged,
        rep.steps,
        rep.terminal_residuals.0,
        rep.terminal_residuals.1,
        rep.wall_time,
        cfg.out_dir.display()
    );
    Ok(if rep.converged { EXIT_OK } else { EXIT_NONCONVERGED })
}

/// Tolerance of the exact-projection run that serves as the reference NE.
pub const REFERENCE_TOL: f64 = 1e-6;

pub fn cmd_sweep_polygons(cfg: &ExperimentConfig) -> Result<i32> {
    if cfg.m_list.is_empty() {
        return Err(Error::invalid("sweep.m_list is empty"));
    }
    let exp = Experiment::build(cfg)?;
    let game = exp.model.game();
    if game.action_dim() != 2 {
        return Err(Error::invalid("polygon sweeps need a 2D model"));
    }
    let ref_params = DynamicsParams { t_tol: REFERENCE_TOL, record_every: 0, ..exp.params.clone() };
    let (_, reference) = exp.run_with(None, &ref_params)?;
    if !reference.converged {
        eprintln!("warning: reference run did not converge within {} steps", cfg.max_steps);
    }
    let run_params = DynamicsParams { record_every: 0, ..exp.params.clone() };
    let results = par::try_map_indexed(cfg.m_list.len(), |k| {
        let m = cfg.m_list[k];
        let polys: Vec<Polyhedron> =
            (0..game.players()).map(|i| inscribe_regular(game.body(i), m)).collect::<Result<_>>()?;
        let (_, rep) = exp.run_with(Some(&polys), &run_params)?;
        let eps = epsilon_measure_with(game, &rep.x_final, Some(&polys), Some(&reference.x_final), &ResponseOptions::default())?;
        let row = EpsilonRow::from_report("regular", m, &eps, rep.steps, rep.wall_time);
        Ok((row, rep.converged, hausdorff_for(game, &polys)))
    })?;
    let rows: Vec<EpsilonRow> = results.iter().map(|r| r.0.clone()).collect();
    write_atomic(&cfg.out_dir, "epsilon.csv", &epsilon_csv(&rows))?;

    let strictly = rows.windows(2).all(|w| w[1].epsilon_hat < w[0].epsilon_hat);
    let mut summary = header("sweep-polygons", cfg, &exp);
    summary.push_str(&run_lines("reference.", &reference));
    summary.push_str(&gain_lines("gain.", &reference.gain));
    for ((row, converged, h), m) in results.iter().zip(&cfg.m_list) {
        let _ = writeln!(summary, "m{m}.converged = {converged}");
        let _ = writeln!(summary, "m{m}.epsilon_hat = {}", fmt17(row.epsilon_hat));
        summary.push_str(&hausdorff_lines(&format!("m{m}.hausdorff."), h));
    }
    let _ = writeln!(summary, "epsilon_strictly_decreasing = {strictly}");
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        let _ = writeln!(summary, "epsilon_ratio_first_last = {}", fmt17(first.epsilon_hat / last.epsilon_hat));
    }
    write_atomic(&cfg.out_dir, "sweep_summary.txt", &summary)?;
    for r in &rows {
        println!("m={:<3} eps_hat={:.4e} ne_distance={:.4e} steps={}", r.s, r.epsilon_hat, r.ne_distance.unwrap_or(f64::NAN), r.steps);
    }
    println!("epsilon strictly decreasing: {strictly}");
    Ok(if results.iter().all(|r| r.1) && reference.converged { EXIT_OK } else { EXIT_NONCONVERGED })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Timing summary of one mode over repeated runs.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub mode: String,
    pub repeats: usize,
    pub converged: bool,
    pub steps: usize,
    pub total_time_s: f64,
    pub mean_proj_time_s: f64,
    pub median_proj_time_s: f64,
    pub qp_iterations_total: u64,
}

pub const COMPARE_CSV_HEADER: &str =
    "mode,repeats,converged,steps,total_time_s,mean_proj_time_s,median_proj_time_s,qp_iterations_total";

/// Runs each mode `repeats` times back to back and reports medians.
pub fn time_modes(exp: &Experiment, modes: &[ApproxSpec], repeats: usize) -> Result<Vec<TimingRow>> {
    let params = DynamicsParams { record_every: 0, ..exp.params.clone() };
    let mut rows = Vec::with_capacity(modes.len());
    for spec in modes {
        let (_, polys) = exp.with_approx(spec)?;
        let (mut totals, mut means, mut medians) = (Vec::new(), Vec::new(), Vec::new());
        let mut last = None;
        for _ in 0..repeats {
            let (_, rep) = exp.run_with(polys.as_deref(), &params)?;
            totals.push(rep.wall_time);
            let mut proj = rep.projection_times.clone();
            means.push(proj.iter().sum::<f64>() / proj.len().max(1) as f64);
            medians.push(median(&mut proj));
            last = Some(rep);
        }
        let rep = last.ok_or_else(|| Error::invalid("repeats must be at least 1"))?;
        rows.push(TimingRow {
            mode: spec.label(),
            repeats,
            converged: rep.converged,
            steps: rep.steps,
            total_time_s: median(&mut totals),
            mean_proj_time_s: median(&mut means),
            median_proj_time_s: median(&mut medians),
            qp_iterations_total: rep.qp_iterations_total,
        });
    }
    Ok(rows)
}

pub fn timing_csv(rows: &[TimingRow]) -> String {
    let mut out = format!("{COMPARE_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.mode,
            r.repeats,
            r.converged,
            r.steps,
            fmt17(r.total_time_s),
            fmt17(r.mean_proj_time_s),
            fmt17(r.median_proj_time_s),
            r.qp_iterations_total
        );
    }
    out
}

pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<i32> {
    if cfg.modes.is_empty() {
        return Err(Error::invalid("compare.modes is empty"));
    }
    let exp = Experiment::build(cfg)?;
    let rows = time_modes(&exp, &cfg.modes, cfg.repeats)?;
    write_atomic(&cfg.out_dir, "compare.csv", &timing_csv(&rows))?;
    let game = exp.model.game();
    let mut summary = header("compare", cfg, &exp);
    summary.push_str(&gain_lines("gain.", &gain_gate(&exp.graph, game.constants(), exp.params.beta1, exp.params.beta2)?));
    for spec in &cfg.modes {
        if let (_, Some(polys)) = exp.with_approx(spec)? {
            summary.push_str(&hausdorff_lines(&format!("{}.hausdorff.", spec.label()), &hausdorff_for(game, &polys)));
        }
    }
    write_atomic(&cfg.out_dir, "compare_summary.txt", &summary)?;
    for r in &rows {
        println!(
            "{:<12} steps={:<7} total={:.4}s median_proj/step={:.3e}s qp_iters={}",
            r.mode, r.steps, r.total_time_s, r.median_proj_time_s, r.qp_iterations_total
        );
    }
    Ok(if rows.iter().all(|r| r.converged) { EXIT_OK } else { EXIT_NONCONVERGED })
}

pub fn cmd_check_graph(cfg: &ExperimentConfig) -> Result<i32> {
    let model = cfg.model.map(|_| Model::build(cfg)).transpose()?;
    let nodes = match (&model, cfg.raw.parsed::<usize>("graph.nodes")?) {
        (_, Some(n)) => n,
        (Some(m), None) => m.game().players(),
        (None, None) => return Err(Error::invalid("give graph.nodes or a model")),
    };
    let g = build_graph(&cfg.graph, nodes)?;
    println!("nodes = {}", g.nodes());
    println!("edges = {}", g.edge_count());
    println!("weight_balanced = {}", g.is_weight_balanced());
    println!("strongly_connected = {}", g.is_strongly_connected());
    match g.lambda_min_positive() {
        Ok(l) => println!("lambda = {}", fmt17(l)),
        Err(_) => println!("lambda = none"),
    }
    if let Some(m) = &model {
        let (b1, b2) = m.default_gains();
        if let Ok(cert) = gain_gate(&g, m.game().constants(), cfg.beta1.unwrap_or(b1), cfg.beta2.unwrap_or(b2)) {
            print!("{}", gain_lines("gain.", &cert));
        }
    }
    Ok(EXIT_OK)
}

struct Check {
    name: &'static str,
    ok: bool,
    detail: String,
}

/// Quick invariant suite over the builtin models.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<i32> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let worst = (3..=12)
        .map(|n| {
            let l = Digraph::ring(n)?.lambda_min_positive()?;
            Ok((l - (1.0 - (std::f64::consts::TAU / n as f64).cos())).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check { name: "ring spectrum", ok: worst <= 1e-10, detail: format!("max error {worst:.2e}") });

    let cournot = CournotModel::standard();
    let dr = DemandResponseModel::standard();
    let c_ok = gain_gate(&Digraph::ring(4)?, cournot.constants(), 0.1, 1.0)?.ok();
    let d_ok = gain_gate(&Digraph::ring(10)?, dr.constants(), 0.5, 2.0)?.ok();
    checks.push(Check { name: "gain gate", ok: c_ok && d_ok, detail: format!("cournot={c_ok} demand_response={d_ok}") });

    let oct = inscribe_regular(&cournot.body, 8)?;
    let mut worst_kkt: f64 = 0.0;
    let mut worst_ell: f64 = 0.0;
    for _ in 0..500 {
        let z = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
        let sol = project_polyhedron(&oct, &z, DEFAULT_TOL)?;
        worst_kkt = worst_kkt.max(kkt_residual(&oct, &z, &sol.point, &sol.multipliers));
        let p = cournot.body.project_exact(&z)?;
        worst_ell = worst_ell.max(cournot.body.projection_kkt_residual(&z, &p));
    }
    checks.push(Check { name: "polyhedral projection KKT", ok: worst_kkt <= DEFAULT_TOL, detail: format!("max {worst_kkt:.2e}") });
    checks.push(Check { name: "ellipsoid projection KKT", ok: worst_ell <= 1e-8, detail: format!("max {worst_ell:.2e}") });

    let polys = vec![oct.clone(); 4];
    let h = crate::geometry::hausdorff_estimate(&cournot.body, &oct)?.value;
    let bound = delta_bound(&[h; 4], &[curvature_nu(&cournot.body); 4], 1.0)?;
    let mut violations = 0;
    for _ in 0..500 {
        let x: Vec<f64> = (0..4).flat_map(|_| random_point_in(&cournot.body, &mut rng)).collect();
        let z: Vec<f64> = (0..4).flat_map(|_| random_point_in(&cournot.body, &mut rng)).collect();
        if perturbation_magnitude(&cournot, &polys, &x, &z, 0.1)? > bound {
            violations += 1;
        }
    }
    checks.push(Check { name: "perturbation bound", ok: violations == 0, detail: format!("{violations} violations") });

    let params = DynamicsParams { record_every: 1, ..DynamicsParams::default() };
    let (traj, rep) = crate::dynamics::run(&cournot, Mode::Approx(&polys), &Digraph::ring(4)?, &params)?;
    let infeasible = traj.xs.iter().flat_map(|x| x.chunks_exact(2)).filter(|xi| oct.max_violation(xi) > 1e-8).count();
    let consensus = {
        let q = crate::game::aggregate(&cournot, &rep.x_final)?;
        rep.zeta_final.chunks_exact(2).map(|z| linalg::dist(z, &q)).fold(0.0, f64::max)
    };
    checks.push(Check {
        name: "run invariants",
        ok: rep.converged && infeasible == 0 && rep.max_phi_sum <= 1e-6 && consensus <= 4.0 * params.t_tol,
        detail: format!(
            "converged={} infeasible={infeasible} max|sum phi|={:.2e} consensus={consensus:.2e} x*={}",
            rep.converged,
            rep.max_phi_sum,
            join(&rep.x_final)
        ),
    });

    let mut all = true;
    for c in &checks {
        all &= c.ok;
        println!("{} {}: {}", if c.ok { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if all { EXIT_OK } else { EXIT_NUMERIC })
}
