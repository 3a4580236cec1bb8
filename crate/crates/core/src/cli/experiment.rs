use std::fs;

use super::config::{ApproxSpec, ExperimentConfig, GraphSpec, InitSpec, ModelName};
use crate::dynamics::{run, DynamicsParams, Init, Integrator, Mode, RunReport, Trajectory};
use crate::error::{Error, Result};
use crate::game::{AggregativeGame, CournotModel, DemandResponseModel};
use crate::geometry::{
    default_seed, hausdorff_estimate, inscribe_cube, inscribe_greedy, inscribe_regular, ConvexBody, HausdorffEstimate,
    Polyhedron,
};
use crate::network::Digraph;

pub enum Model {
    Cournot(CournotModel),
    DemandResponse(DemandResponseModel),
}

impl Model {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let raw = &cfg.raw;
        let name = cfg.require_model()?;
        let (default_axes, default_players): (Vec<f64>, usize) = match name {
            ModelName::Cournot => (vec![4.0, 3.0], 4),
            ModelName::DemandResponse => (vec![7.0, 6.0, 5.0], 10),
        };
        let players = raw.parsed::<usize>("model.players")?.unwrap_or(default_players);
        let semiaxes = raw.list::<f64>("model.semiaxes")?;
        let dim = raw
            .parsed::<usize>("model.dim")?
            .or(semiaxes.as_ref().map(Vec::len))
            .unwrap_or(default_axes.len());
        let center = raw.list::<f64>("model.center")?.unwrap_or_else(|| vec![0.0; dim]);
        // Outside the default dimension the default body is a ball with the
        // first default semiaxis as radius.
        let body = match (raw.parsed::<f64>("model.radius")?, semiaxes) {
            (Some(r), _) => ConvexBody::ball(center, r)?,
            (None, Some(v)) => ConvexBody::ellipsoid(center, v)?,
            (None, None) if dim == default_axes.len() => ConvexBody::ellipsoid(center, default_axes)?,
            (None, None) => ConvexBody::ball(center, default_axes[0])?,
        };
        Error::check_dim(dim, body.dim())?;
        Ok(match name {
            ModelName::Cournot => {
                let base = CournotModel::standard();
                let m = CournotModel {
                    players,
                    dim,
                    price_slope: raw.parsed("model.price_slope")?.unwrap_or(base.price_slope),
                    base_price: raw.parsed("model.base_price")?.unwrap_or(players as f64),
                    demand_offset: raw.parsed("model.demand_offset")?.unwrap_or(base.demand_offset),
                    body,
                };
                m.validate()?;
                Model::Cournot(m)
            }
            ModelName::DemandResponse => {
                let base = DemandResponseModel::standard();
                let m = DemandResponseModel {
                    players,
                    dim,
                    iota: raw.parsed("model.iota")?.unwrap_or(base.iota),
                    omega: raw.parsed("model.omega")?.unwrap_or(base.omega),
                    p0: raw.parsed("model.p0")?.unwrap_or(base.p0),
                    nominal_offset: raw.parsed("model.nominal_offset")?.unwrap_or(base.nominal_offset),
                    body,
                };
                m.validate()?;
                Model::DemandResponse(m)
            }
        })
    }

    pub fn game(&self) -> &dyn AggregativeGame {
        match self {
            Model::Cournot(m) => m,
            Model::DemandResponse(m) => m,
        }
    }

    /// `(beta1, beta2)` used when the configuration leaves them unset.
    pub fn default_gains(&self) -> (f64, f64) {
        match self {
            Model::Cournot(_) => (0.1, 1.0),
            Model::DemandResponse(_) => (0.5, 2.0),
        }
    }
}

pub fn build_graph(spec: &GraphSpec, nodes: usize) -> Result<Digraph> {
    match spec {
        GraphSpec::Ring => Digraph::ring(nodes),
        GraphSpec::Complete => Digraph::complete(nodes),
        GraphSpec::ErdosRenyi { p, seed } => Digraph::erdos_renyi(nodes, *p, *seed),
        GraphSpec::Matrix(rows) => {
            Error::check_dim(nodes, rows.len())?;
            let mut w = Vec::with_capacity(nodes * nodes);
            for row in rows {
                Error::check_dim(nodes, row.len())?;
                w.extend_from_slice(row);
            }
            Digraph::from_weights(nodes, w)
        }
    }
}

/// One inscribed polyhedron per player, `None` in exact mode.
pub fn build_polys(game: &dyn AggregativeGame, spec: &ApproxSpec) -> Result<Option<Vec<Polyhedron>>> {
    let one = |body: &ConvexBody| -> Result<Polyhedron> {
        match spec {
            ApproxSpec::Exact => unreachable!("handled by the caller"),
            ApproxSpec::Regular(m) => inscribe_regular(body, *m),
            ApproxSpec::Greedy(s) => inscribe_greedy(body, *s, &default_seed(body)?),
            ApproxSpec::Cube => inscribe_cube(body),
            ApproxSpec::File(path) => {
                let poly = Polyhedron::from_text(&fs::read_to_string(path)?)?;
                Error::check_dim(body.dim(), poly.dim())?;
                poly.check_inscribed(body, false, 1e-9)?;
                Ok(poly)
            }
        }
    };
    if *spec == ApproxSpec::Exact {
        return Ok(None);
    }
    let mut polys: Vec<Polyhedron> = Vec::with_capacity(game.players());
    for i in 0..game.players() {
        let body = game.body(i);
        // builtin models share one body; reuse the construction when possible
        match (i, polys.last()) {
            (1.., Some(prev)) if game.body(i - 1) == body => polys.push(prev.clone()),
            _ => polys.push(one(body)?),
        }
    }
    Ok(Some(polys))
}

/// Per-player Hausdorff estimates; `None` entries when the polyhedron has no
/// stored vertices.
pub fn hausdorff_for(game: &dyn AggregativeGame, polys: &[Polyhedron]) -> Vec<Option<HausdorffEstimate>> {
    polys.iter().enumerate().map(|(i, p)| hausdorff_estimate(game.body(i), p).ok()).collect()
}

pub struct Experiment {
    pub model: Model,
    pub graph: Digraph,
    pub approx: ApproxSpec,
    pub polys: Option<Vec<Polyhedron>>,
    pub params: DynamicsParams,
}

impl Experiment {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let model = Model::build(cfg)?;
        let graph = build_graph(&cfg.graph, model.game().players())?;
        let (b1, b2) = model.default_gains();
        let params = DynamicsParams {
            beta1: cfg.beta1.unwrap_or(b1),
            beta2: cfg.beta2.unwrap_or(b2),
            h: cfg.step,
            t_tol: cfg.tol,
            max_steps: cfg.max_steps,
            record_every: cfg.record_every,
            integrator: if cfg.rk4 { Integrator::Rk4 } else { Integrator::Euler },
            warm_start: cfg.warm_start,
            init: match cfg.init {
                InitSpec::Center => Init::Center,
                InitSpec::Random => Init::Random(cfg.seed),
            },
            ..DynamicsParams::default()
        };
        let polys = build_polys(model.game(), &cfg.approx)?;
        Ok(Self { model, graph, approx: cfg.approx.clone(), polys, params })
    }

    /// Same experiment with a different approximation.
    pub fn with_approx(&self, spec: &ApproxSpec) -> Result<(ApproxSpec, Option<Vec<Polyhedron>>)> {
        Ok((spec.clone(), build_polys(self.model.game(), spec)?))
    }

    pub fn mode(&self) -> Mode<'_> {
        match &self.polys {
            Some(p) => Mode::Approx(p),
            None => Mode::Exact,
        }
    }

    pub fn run(&self) -> Result<(Trajectory, RunReport)> {
        run(self.model.game(), self.mode(), &self.graph, &self.params)
    }

    pub fn run_with(&self, polys: Option<&[Polyhedron]>, params: &DynamicsParams) -> Result<(Trajectory, RunReport)> {
        let mode = match polys {
            Some(p) => Mode::Approx(p),
            None => Mode::Exact,
        };
        run(self.model.game(), mode, &self.graph, params)
    }
}
