//! Projected-gradient dynamics with dynamic average consensus on the
//! aggregate, integrated by explicit Euler (or RK4 for diagnostics).

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{random_point_in, u_map, AggregativeGame};
use crate::geometry::Polyhedron;
use crate::linalg::{self, fmt17};
use crate::network::{gain_gate, Digraph, GainCertificate};
use crate::par;
use crate::polyproj::{project_polyhedron_warm, DEFAULT_TOL};

/// Which feasible sets the projection step uses.
#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    /// `D^i`: one inscribed polyhedron per player.
    Approx(&'a [Polyhedron]),
    /// `Omega_i` itself.
    Exact,
}

impl Mode<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Approx(_) => "approx",
            Mode::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    /// Classical RK4. Stages evaluate projections at non-feasible points, so
    /// feasibility is not preserved; diagnostic use only.
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Projection of each body's center onto the player's feasible set.
    Center,
    /// Uniform in `Omega_i`, then projected onto the feasible set.
    Random(u64),
    Given(Vec<f64>),
}

/// Below this many players the pool's dispatch cost exceeds the per-step work.
pub const PARALLEL_MIN_PLAYERS: usize = 32;

#[derive(Debug, Clone)]
pub struct DynamicsParams {
    pub beta1: f64,
    pub beta2: f64,
    pub h: f64,
    pub t_tol: f64,
    pub max_steps: usize,
    /// Record every `record_every`-th step in the trajectory (0 disables recording).
    pub record_every: usize,
    pub integrator: Integrator,
    pub warm_start: bool,
    pub qp_tol: f64,
    pub init: Init,
    /// Per-player work on the worker pool once there are at least
    /// [`PARALLEL_MIN_PLAYERS`] players; ignored without the `parallel` feature.
    pub parallel: bool,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            beta1: 0.1,
            beta2: 1.0,
            h: 0.01,
            t_tol: 1e-3,
            max_steps: 1_000_000,
            record_every: 1,
            integrator: Integrator::Euler,
            warm_start: true,
            qp_tol: DEFAULT_TOL,
            init: Init::Center,
            parallel: par::is_parallel(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub y: Vec<f64>,
}

impl SolverState {
    /// `phi(0) = 0`, `zeta(0) = q(x(0))`, `y(0) = x(0)`.
    pub fn from_actions<G: AggregativeGame + ?Sized>(game: &G, x: Vec<f64>) -> Result<Self> {
        let (n, m, big_n) = (game.action_dim(), game.aggregate_dim(), game.players());
        Error::check_dim(big_n * n, x.len())?;
        let zeta: Vec<f64> = x.chunks_exact(n).enumerate().flat_map(|(i, xi)| game.local_map(i, xi)).collect();
        Ok(Self { t: 0.0, phi: vec![0.0; big_n * m], zeta, y: x.clone(), x })
    }

    pub fn initial<G: AggregativeGame + ?Sized>(game: &G, mode: Mode<'_>, init: &Init) -> Result<Self> {
        check_mode(game, mode)?;
        let n = game.action_dim();
        let raw: Vec<f64> = match init {
            Init::Center => (0..game.players()).flat_map(|i| game.body(i).center().to_vec()).collect(),
            Init::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..game.players()).flat_map(|i| random_point_in(game.body(i), &mut rng)).collect()
            }
            Init::Given(x) => {
                Error::check_dim(game.players() * n, x.len())?;
                x.clone()
            }
        };
        let mut x = Vec::with_capacity(raw.len());
        for (i, zi) in raw.chunks_exact(n).enumerate() {
            x.extend(project(game, mode, i, zi, DEFAULT_TOL, None)?.0);
        }
        Self::from_actions(game, x)
    }

    /// `sum_i phi_i`, zero for balanced graphs.
    pub fn phi_sum(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for chunk in self.phi.chunks_exact(m) {
            for (a, b) in s.iter_mut().zip(chunk) {
                *a += b;
            }
        }
        s
    }
}

fn check_mode<G: AggregativeGame + ?Sized>(game: &G, mode: Mode<'_>) -> Result<()> {
    if let Mode::Approx(polys) = mode {
        Error::check_dim(game.players(), polys.len())?;
        for p in polys {
            Error::check_dim(game.action_dim(), p.dim())?;
        }
    }
    Ok(())
}

/// Projection for player `i`: returns the point, the multipliers (approx mode)
/// and the QP sweep count.
fn project<G: AggregativeGame + ?Sized>(
    game: &G,
    mode: Mode<'_>,
    i: usize,
    z: &[f64],
    qp_tol: f64,
    warm: Option<&[f64]>,
) -> Result<(Vec<f64>, Option<Vec<f64>>, usize)> {
    match mode {
        Mode::Exact => Ok((game.body(i).project_exact(z)?, None, 0)),
        Mode::Approx(polys) => {
            let sol = project_polyhedron_warm(&polys[i], z, qp_tol, warm)?;
            Ok((sol.point, Some(sol.multipliers), sol.iterations))
        }
    }
}

/// Time derivative pieces evaluated at `(x, phi)`.
struct Field {
    dx: Vec<f64>,
    dphi: Vec<f64>,
    y: Vec<f64>,
    multipliers: Vec<Option<Vec<f64>>>,
    qp_iterations: usize,
    projection_time: f64,
}

struct Stepper<'a, G: ?Sized> {
    game: &'a G,
    mode: Mode<'a>,
    graph: &'a Digraph,
    params: &'a DynamicsParams,
    warm: Vec<Option<Vec<f64>>>,
}

impl<G: AggregativeGame + ?Sized> Stepper<'_, G> {
    fn zeta_of(&self, x: &[f64], phi: &[f64]) -> Vec<f64> {
        let (n, m) = (self.game.action_dim(), self.game.aggregate_dim());
        let mut zeta = phi.to_vec();
        for (i, xi) in x.chunks_exact(n).enumerate() {
            for (z, q) in zeta[i * m..(i + 1) * m].iter_mut().zip(self.game.local_map(i, xi)) {
                *z += q;
            }
        }
        zeta
    }

    fn field(&self, x: &[f64], zeta: &[f64]) -> Result<Field> {
        let game = self.game;
        let (n, m, big_n) = (game.action_dim(), game.aggregate_dim(), game.players());
        let beta1 = self.params.beta1;
        let one = |i: usize| -> Result<(Vec<f64>, Option<Vec<f64>>, usize)> {
            let xi = &x[i * n..(i + 1) * n];
            let u = u_map(game, i, xi, &zeta[i * m..(i + 1) * m]);
            let z: Vec<f64> = xi.iter().zip(&u).map(|(a, b)| a - beta1 * b).collect();
            let warm = if self.params.warm_start { self.warm[i].as_deref() } else { None };
            project(game, self.mode, i, &z, self.params.qp_tol, warm)
        };
        let tick = Instant::now();
        let per_player = if self.params.parallel && big_n >= PARALLEL_MIN_PLAYERS {
            par::try_map_indexed(big_n, one)?
        } else {
            par::map_indexed_seq(big_n, one).into_iter().collect::<Result<Vec<_>>>()?
        };
        let projection_time = tick.elapsed().as_secs_f64();

        let mut y = Vec::with_capacity(big_n * n);
        let mut multipliers = Vec::with_capacity(big_n);
        let mut qp_iterations = 0;
        for (yi, mu, it) in per_player {
            y.extend(yi);
            multipliers.push(mu);
            qp_iterations += it;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite projection output: {y:?}")));
        }
        let dx = linalg::sub(&y, x);

        let beta2 = self.params.beta2;
        let mut dphi = vec![0.0; big_n * m];
        for i in 0..big_n {
            let zi = &zeta[i * m..(i + 1) * m];
            for (j, a) in self.graph.in_neighbors(i) {
                let zj = &zeta[j * m..(j + 1) * m];
                for k in 0..m {
                    dphi[i * m + k] += beta2 * a * (zj[k] - zi[k]);
                }
            }
        }
        Ok(Field { dx, dphi, y, multipliers, qp_iterations, projection_time })
    }

    fn step(&mut self, s: &SolverState) -> Result<(SolverState, usize, f64)> {
        let h = self.params.h;
        let (x, phi, y, iters, proj) = match self.params.integrator {
            Integrator::Euler => {
                let f = self.field(&s.x, &s.zeta)?;
                self.remember(&f);
                let mut x = s.x.clone();
                linalg::axpy(h, &f.dx, &mut x);
                let mut phi = s.phi.clone();
                linalg::axpy(h, &f.dphi, &mut phi);
                (x, phi, f.y, f.qp_iterations, f.projection_time)
            }
            Integrator::Rk4 => {
                let k1 = self.field(&s.x, &s.zeta)?;
                self.remember(&k1);
                let stage = |c: f64, f: &Field| {
                    let mut x = s.x.clone();
                    linalg::axpy(c * h, &f.dx, &mut x);
                    let mut phi = s.phi.clone();
                    linalg::axpy(c * h, &f.dphi, &mut phi);
                    (x, phi)
                };
                let (x2, p2) = stage(0.5, &k1);
                let k2 = self.field(&x2, &self.zeta_of(&x2, &p2))?;
                let (x3, p3) = stage(0.5, &k2);
                let k3 = self.field(&x3, &self.zeta_of(&x3, &p3))?;
                let (x4, p4) = stage(1.0, &k3);
                let k4 = self.field(&x4, &self.zeta_of(&x4, &p4))?;
                let comb = |base: &[f64], pick: fn(&Field) -> &Vec<f64>| -> Vec<f64> {
                    let (a, b, c, d) = (pick(&k1), pick(&k2), pick(&k3), pick(&k4));
                    (0..base.len()).map(|k| base[k] + h / 6.0 * (a[k] + 2.0 * b[k] + 2.0 * c[k] + d[k])).collect()
                };
                let x = comb(&s.x, |f| &f.dx);
                let phi = comb(&s.phi, |f| &f.dphi);
                let iters = k1.qp_iterations + k2.qp_iterations + k3.qp_iterations + k4.qp_iterations;
                let proj = k1.projection_time + k2.projection_time + k3.projection_time + k4.projection_time;
                (x, phi, k1.y, iters, proj)
            }
        };
        if x.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("state became non-finite at t = {}", s.t + h)));
        }
        let zeta = self.zeta_of(&x, &phi);
        Ok((SolverState { t: s.t + h, x, phi, zeta, y }, iters, proj))
    }

    fn remember(&mut self, f: &Field) {
        if self.params.warm_start {
            for (slot, mu) in self.warm.iter_mut().zip(&f.multipliers) {
                slot.clone_from(mu);
            }
        }
    }
}

fn single_step<G: AggregativeGame + ?Sized>(
    game: &G,
    mode: Mode<'_>,
    graph: &Digraph,
    beta1: f64,
    beta2: f64,
    state: &SolverState,
    h: f64,
) -> Result<SolverState> {
    check_mode(game, mode)?;
    check_step_inputs(game, graph, state, h)?;
    let params = DynamicsParams { beta1, beta2, h, warm_start: false, ..DynamicsParams::default() };
    let mut stepper = Stepper { game, mode, graph, params: &params, warm: vec![None; game.players()] };
    Ok(stepper.step(state)?.0)
}

fn check_step_inputs<G: AggregativeGame + ?Sized>(game: &G, graph: &Digraph, s: &SolverState, h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("step size h = {h} must be positive")));
    }
    Error::check_dim(game.players(), graph.nodes())?;
    let (n, m, big_n) = (game.action_dim(), game.aggregate_dim(), game.players());
    Error::check_dim(big_n * n, s.x.len())?;
    Error::check_dim(big_n * m, s.phi.len())?;
    Error::check_dim(big_n * m, s.zeta.len())
}

/// One Euler step of the polyhedral-projection dynamics.
pub fn step_approx<G: AggregativeGame + ?Sized>(
    game: &G,
    polys: &[Polyhedron],
    graph: &Digraph,
    beta1: f64,
    beta2: f64,
    state: &SolverState,
    h: f64,
) -> Result<SolverState> {
    single_step(game, Mode::Approx(polys), graph, beta1, beta2, state, h)
}

/// One Euler step of the dynamics projecting onto `Omega_i` directly.
pub fn step_exact<G: AggregativeGame + ?Sized>(
    game: &G,
    graph: &Digraph,
    beta1: f64,
    beta2: f64,
    state: &SolverState,
    h: f64,
) -> Result<SolverState> {
    single_step(game, Mode::Exact, graph, beta1, beta2, state, h)
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub players: usize,
    pub action_dim: usize,
    pub aggregate_dim: usize,
    pub times: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub zetas: Vec<Vec<f64>>,
}

impl Trajectory {
    fn push(&mut self, s: &SolverState) {
        self.times.push(s.t);
        self.xs.push(s.x.clone());
        self.zetas.push(s.zeta.clone());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t,player,component,x,zeta`, one row per sample, player and component.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,player,component,x,zeta\n");
        let (n, m) = (self.action_dim, self.aggregate_dim);
        let cell = |v: Option<&f64>| v.map(|v| fmt17(*v)).unwrap_or_default();
        for ((t, x), z) in self.times.iter().zip(&self.xs).zip(&self.zetas) {
            for i in 0..self.players {
                for k in 0..n.max(m) {
                    let xv = if k < n { x.get(i * n + k) } else { None };
                    let zv = if k < m { z.get(i * m + k) } else { None };
                    let _ = writeln!(out, "{},{},{},{},{}", fmt17(*t), i + 1, k + 1, cell(xv), cell(zv));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub mode: &'static str,
    pub converged: bool,
    pub steps: usize,
    pub t_final: f64,
    pub wall_time: f64,
    pub x_final: Vec<f64>,
    pub zeta_final: Vec<f64>,
    pub phi_final: Vec<f64>,
    pub qp_iterations_total: u64,
    /// `(||x_{k+1} - x_k|| / h, ||zeta_{k+1} - zeta_k|| / h)` at the last step.
    pub terminal_residuals: (f64, f64),
    /// Largest `||sum_i phi_i||` seen during the run.
    pub max_phi_sum: f64,
    /// Wall time of each step.
    pub step_times: Vec<f64>,
    /// Wall time of the projection phase within each step.
    pub projection_times: Vec<f64>,
    pub gain: GainCertificate,
    pub gain_warning: Option<String>,
}

/// Integrates until both residuals are at most `t_tol` or `max_steps` is hit.
pub fn run<G: AggregativeGame + ?Sized>(
    game: &G,
    mode: Mode<'_>,
    graph: &Digraph,
    params: &DynamicsParams,
) -> Result<(Trajectory, RunReport)> {
    let start = SolverState::initial(game, mode, &params.init)?;
    run_from(game, mode, graph, params, start)
}

pub fn run_from<G: AggregativeGame + ?Sized>(
    game: &G,
    mode: Mode<'_>,
    graph: &Digraph,
    params: &DynamicsParams,
    start: SolverState,
) -> Result<(Trajectory, RunReport)> {
    check_mode(game, mode)?;
    check_step_inputs(game, graph, &start, params.h)?;
    if !(params.t_tol > 0.0) {
        return Err(Error::invalid("t_tol must be positive"));
    }
    let gain = gain_gate(graph, game.constants(), params.beta1, params.beta2)?;
    let gain_warning = (!gain.ok()).then(|| {
        format!(
            "gains outside the certified region: beta1 = {} (need < {}), beta2 = {} (need > {})",
            gain.beta1, gain.beta1_upper, gain.beta2, gain.beta2_lower
        )
    });

    let clock = Instant::now();
    let m = game.aggregate_dim();
    let mut traj = Trajectory {
        players: game.players(),
        action_dim: game.action_dim(),
        aggregate_dim: m,
        ..Trajectory::default()
    };
    let mut stepper = Stepper { game, mode, graph, params, warm: vec![None; game.players()] };
    let mut state = start;
    if params.record_every > 0 {
        traj.push(&state);
    }
    let mut steps = 0;
    let mut qp_total: u64 = 0;
    let mut residuals = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut max_phi_sum: f64 = 0.0;
    let mut step_times = Vec::new();
    let mut projection_times = Vec::new();
    while steps < params.max_steps {
        let tick = Instant::now();
        let (next, iters, proj) = stepper.step(&state)?;
        step_times.push(tick.elapsed().as_secs_f64());
        projection_times.push(proj);
        steps += 1;
        qp_total += iters as u64;
        residuals = (
            linalg::dist(&next.x, &state.x) / params.h,
            linalg::dist(&next.zeta, &state.zeta) / params.h,
        );
        max_phi_sum = max_phi_sum.max(linalg::norm(&next.phi_sum(m)));
        state = next;
        converged = residuals.0 <= params.t_tol && residuals.1 <= params.t_tol;
        if params.record_every > 0 && (steps % params.record_every == 0 || converged) {
            traj.push(&state);
        }
        if converged {
            break;
        }
    }
    if params.record_every > 0 && traj.times.last() != Some(&state.t) {
        traj.push(&state);
    }
    let report = RunReport {
        mode: mode.name(),
        converged,
        steps,
        t_final: state.t,
        wall_time: clock.elapsed().as_secs_f64(),
        x_final: state.x,
        zeta_final: state.zeta,
        phi_final: state.phi,
        qp_iterations_total: qp_total,
        terminal_residuals: residuals,
        max_phi_sum,
        step_times,
        projection_times,
        gain,
        gain_warning,
    };
    Ok((traj, report))
}
