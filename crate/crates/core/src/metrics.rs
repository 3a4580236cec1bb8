//! Approximation quality: best-response gaps, distance to a reference
//! equilibrium, the projection perturbation and convergence-rate fits.

use std::fmt::Write as _;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::game::{aggregate, best_response, best_response_over, cost, u_map, AggregativeGame, ResponseOptions};
use crate::geometry::{curvature_nu, delta_bound, hausdorff_estimate, Polyhedron};
use crate::linalg::{self, fmt17};
use crate::par;
use crate::polyproj::{project_polyhedron, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    /// `max_i` of the gaps over `Omega_i`.
    pub epsilon_hat: f64,
    /// `J_i(x*) - min_{y in Omega_i} J_i(y, x*_{-i})`.
    pub per_player_gaps: Vec<f64>,
    /// Same gap with the minimum taken over the polyhedron `D_i`.
    pub per_player_gaps_d: Option<Vec<f64>>,
    pub ne_distance: Option<f64>,
    pub delta_h: Option<f64>,
    pub h_vector: Option<Vec<f64>>,
}

/// Best-response gaps of `x_star` over the original feasible sets.
pub fn epsilon_measure<G: AggregativeGame + ?Sized>(game: &G, x_star: &[f64], opts: &ResponseOptions) -> Result<EpsilonReport> {
    epsilon_measure_with(game, x_star, None, None, opts)
}

/// [`epsilon_measure`] plus, when given, gaps over the polyhedra, their
/// Hausdorff distances and `delta(H)`, and the distance to `reference`.
pub fn epsilon_measure_with<G: AggregativeGame + ?Sized>(
    game: &G,
    x_star: &[f64],
    polys: Option<&[Polyhedron]>,
    reference: Option<&[f64]>,
    opts: &ResponseOptions,
) -> Result<EpsilonReport> {
    let (n, big_n) = (game.action_dim(), game.players());
    Error::check_dim(big_n * n, x_star.len())?;
    if let Some(p) = polys {
        Error::check_dim(big_n, p.len())?;
    }
    let gap_over = |i: usize, br: Vec<f64>| -> Result<f64> {
        Ok(cost(game, i, &x_star[i * n..(i + 1) * n], x_star)? - cost(game, i, &br, x_star)?)
    };
    let per_player_gaps = par::try_map_indexed(big_n, |i| gap_over(i, best_response(game, i, x_star, opts)?))?;
    let epsilon_hat = per_player_gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let per_player_gaps_d = match polys {
        Some(p) => Some(par::try_map_indexed(big_n, |i| gap_over(i, best_response_over(game, i, x_star, &p[i], opts)?))?),
        None => None,
    };
    let h_vector = match polys {
        Some(p) => (0..big_n)
            .map(|i| hausdorff_estimate(game.body(i), &p[i]).map(|e| e.value))
            .collect::<Result<Vec<_>>>()
            .ok(),
        None => None,
    };
    let delta_h = match &h_vector {
        Some(h) => {
            let nu: Vec<f64> = (0..big_n).map(|i| curvature_nu(game.body(i))).collect();
            delta_bound(h, &nu, game.constants().c3).ok()
        }
        None => None,
    };
    let ne_distance = match reference {
        Some(r) => {
            Error::check_dim(x_star.len(), r.len())?;
            Some(linalg::dist(x_star, r))
        }
        None => None,
    };
    Ok(EpsilonReport { epsilon_hat, per_player_gaps, per_player_gaps_d, ne_distance, delta_h, h_vector })
}

/// `||e(z)||` for `e = [d; rho^T d]`, where `d_i = Proj_{D_i}(v_i) - Proj_{Omega_i}(v_i)`,
/// `v_i = x_i - beta1 U_i(x_i, zeta_i)` and block `i` of `rho^T d` is
/// `Jq_i d_i - (1/N) sum_j Jq_j d_j`.
pub fn perturbation_magnitude<G: AggregativeGame + ?Sized>(
    game: &G,
    polys: &[Polyhedron],
    x: &[f64],
    zeta: &[f64],
    beta1: f64,
) -> Result<f64> {
    let (n, m, big_n) = (game.action_dim(), game.aggregate_dim(), game.players());
    Error::check_dim(big_n, polys.len())?;
    Error::check_dim(big_n * n, x.len())?;
    Error::check_dim(big_n * m, zeta.len())?;
    let mut total = 0.0;
    let mut weighted = Vec::with_capacity(big_n);
    let mut mean = vec![0.0; m];
    for i in 0..big_n {
        let xi = &x[i * n..(i + 1) * n];
        let u = u_map(game, i, xi, &zeta[i * m..(i + 1) * m]);
        let v: Vec<f64> = xi.iter().zip(&u).map(|(a, b)| a - beta1 * b).collect();
        let pd = project_polyhedron(&polys[i], &v, DEFAULT_TOL)?.point;
        let po = game.body(i).project_exact(&v)?;
        let d = linalg::sub(&pd, &po);
        total += linalg::dot(&d, &d);
        let jac = game.local_map_jacobian(i, xi);
        let w: Vec<f64> = (0..m).map(|r| (0..n).map(|k| jac[r * n + k] * d[k]).sum()).collect();
        for (a, b) in mean.iter_mut().zip(&w) {
            *a += b / big_n as f64;
        }
        weighted.push(w);
    }
    for w in &weighted {
        let s = linalg::sub(w, &mean);
        total += linalg::dot(&s, &s);
    }
    Ok(total.sqrt())
}

/// `||zeta(t) - 1 (x) Q(x(t))||` at each recorded sample.
pub fn sigma_trajectory<G: AggregativeGame + ?Sized>(traj: &Trajectory, game: &G) -> Result<Vec<f64>> {
    let m = game.aggregate_dim();
    traj.xs
        .iter()
        .zip(&traj.zetas)
        .map(|(x, zeta)| {
            let q = aggregate(game, x)?;
            Error::check_dim(game.players() * m, zeta.len())?;
            Ok(zeta.chunks_exact(m).map(|z| linalg::dist(z, &q).powi(2)).sum::<f64>().sqrt())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares line through `log ||x(t) - x_ref||` against `t`.
///
/// Samples from the first one at or below `floor` onwards are dropped as the
/// flat tail; of the rest, the middle 60% is fitted.
pub fn rate_fit(traj: &Trajectory, x_ref: &[f64], floor: f64) -> Result<RateFit> {
    let mut pts = Vec::new();
    for (t, x) in traj.times.iter().zip(&traj.xs) {
        Error::check_dim(x_ref.len(), x.len())?;
        let d = linalg::dist(x, x_ref);
        if !(d > floor) {
            break;
        }
        pts.push((*t, d.ln()));
    }
    let lo = pts.len() / 5;
    let hi = pts.len() - pts.len() / 5;
    let pts = &pts[lo..hi];
    if pts.len() < 10 {
        return Err(Error::InsufficientData(format!("{} usable samples, need at least 10", pts.len())));
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in pts {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RateFit { slope, intercept: my - slope * mt, r_squared, samples: pts.len() })
}

/// One row of a polygon sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub polygon: String,
    pub s: usize,
    pub h_max: Option<f64>,
    pub delta_h: Option<f64>,
    pub epsilon_hat: f64,
    pub ne_distance: Option<f64>,
    pub steps: usize,
    pub wall_time_s: f64,
}

impl EpsilonRow {
    pub fn from_report(polygon: impl Into<String>, s: usize, rep: &EpsilonReport, steps: usize, wall_time_s: f64) -> Self {
        Self {
            polygon: polygon.into(),
            s,
            h_max: rep.h_vector.as_ref().map(|h| h.iter().copied().fold(0.0, f64::max)),
            delta_h: rep.delta_h,
            epsilon_hat: rep.epsilon_hat,
            ne_distance: rep.ne_distance,
            steps,
            wall_time_s,
        }
    }
}

pub const EPSILON_CSV_HEADER: &str = "polygon,s,h_max,delta_H,epsilon_hat,ne_distance,steps,wall_time_s";

pub fn epsilon_csv(rows: &[EpsilonRow]) -> String {
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    let mut out = format!("{EPSILON_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.polygon,
            r.s,
            opt(r.h_max),
            opt(r.delta_h),
            fmt17(r.epsilon_hat),
            opt(r.ne_distance),
            r.steps,
            fmt17(r.wall_time_s)
        );
    }
    out
}
