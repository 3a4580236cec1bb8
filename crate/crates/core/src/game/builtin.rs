use super::{AggregativeGame, GameConstants};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;

/// Networked Nash-Cournot game: `f_i = x_i^T (d_i(x_i) - p(Q))` with
/// `d_i(x_i) = 0.5 (x_i + (13 - i) 1)` (players numbered from 1) and
/// `p(Q) = base_price 1 - price_slope Q`.
#[derive(Debug, Clone)]
pub struct CournotModel {
    pub players: usize,
    pub dim: usize,
    pub price_slope: f64,
    pub base_price: f64,
    /// The `13` in `d_i`.
    pub demand_offset: f64,
    pub body: ConvexBody,
}

impl CournotModel {
    /// Four players on `E_{4,3}(0,0)` with slope 0.01 and base price `N`.
    pub fn standard() -> Self {
        Self {
            players: 4,
            dim: 2,
            price_slope: 0.01,
            base_price: 4.0,
            demand_offset: 13.0,
            body: ConvexBody::ellipsoid(vec![0.0, 0.0], vec![4.0, 3.0]).expect("valid ellipse"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.players < 1 {
            return Err(Error::invalid("Cournot model needs at least one player"));
        }
        Error::check_dim(self.dim, self.body.dim())
    }

    fn own_term(&self, i: usize) -> f64 {
        0.5 * (self.demand_offset - (i + 1) as f64) - self.base_price
    }
}

impl AggregativeGame for CournotModel {
    fn name(&self) -> &str {
        "cournot"
    }

    fn players(&self) -> usize {
        self.players
    }

    fn action_dim(&self) -> usize {
        self.dim
    }

    fn aggregate_dim(&self) -> usize {
        self.dim
    }

    fn body(&self, _i: usize) -> &ConvexBody {
        &self.body
    }

    fn payoff(&self, i: usize, x: &[f64], q: &[f64]) -> f64 {
        let c = self.own_term(i);
        x.iter().zip(q).map(|(xk, qk)| xk * (0.5 * xk + c + self.price_slope * qk)).sum()
    }

    fn local_map_jacobian(&self, _i: usize, _x: &[f64]) -> Vec<f64> {
        identity(self.dim)
    }

    fn grad_action(&self, i: usize, x: &[f64], q: &[f64]) -> Vec<f64> {
        let c = self.own_term(i);
        x.iter().zip(q).map(|(xk, qk)| xk + c + self.price_slope * qk).collect()
    }

    fn grad_aggregate(&self, _i: usize, x: &[f64], _q: &[f64]) -> Vec<f64> {
        x.iter().map(|xk| self.price_slope * xk).collect()
    }

    /// `kappa = 1` bounds the pseudo-gradient's smallest eigenvalue
    /// `1 + slope/N` from below; `c1 = 1 + slope/N`, `c2 = slope`, `c3 = 1`.
    fn constants(&self) -> GameConstants {
        GameConstants {
            kappa: 1.0,
            c1: 1.0 + self.price_slope / self.players as f64,
            c2: self.price_slope,
            c3: 1.0,
        }
    }
}

/// Demand-response cost `f_i = iota (x_i - pi_i)^T (x_i - pi_i) + x_i^T P(Q)`
/// with `P(Q) = omega N Q + p0` and nominal demand `pi_i = 0.5 (10 - i) 1`.
#[derive(Debug, Clone)]
pub struct DemandResponseModel {
    pub players: usize,
    pub dim: usize,
    pub iota: f64,
    pub omega: f64,
    pub p0: f64,
    /// The `10` in `pi_i`.
    pub nominal_offset: f64,
    pub body: ConvexBody,
}

impl DemandResponseModel {
    /// Ten users in `E_{7,6,5}(0,0,0)` with `iota = 0.05`, `omega = 0.001`, `p0 = 1`.
    pub fn standard() -> Self {
        Self {
            players: 10,
            dim: 3,
            iota: 0.05,
            omega: 0.001,
            p0: 1.0,
            nominal_offset: 10.0,
            body: ConvexBody::ellipsoid(vec![0.0; 3], vec![7.0, 6.0, 5.0]).expect("valid ellipsoid"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.players < 1 {
            return Err(Error::invalid("demand response model needs at least one player"));
        }
        if !(self.iota > 0.0) || self.omega < 0.0 {
            return Err(Error::invalid("need iota > 0 and omega >= 0"));
        }
        Error::check_dim(self.dim, self.body.dim())
    }

    fn nominal(&self, i: usize) -> f64 {
        0.5 * (self.nominal_offset - (i + 1) as f64)
    }
}

impl AggregativeGame for DemandResponseModel {
    fn name(&self) -> &str {
        "demand_response"
    }

    fn players(&self) -> usize {
        self.players
    }

    fn action_dim(&self) -> usize {
        self.dim
    }

    fn aggregate_dim(&self) -> usize {
        self.dim
    }

    fn body(&self, _i: usize) -> &ConvexBody {
        &self.body
    }

    fn payoff(&self, i: usize, x: &[f64], q: &[f64]) -> f64 {
        let pi = self.nominal(i);
        let scale = self.omega * self.players as f64;
        x.iter()
            .zip(q)
            .map(|(xk, qk)| self.iota * (xk - pi) * (xk - pi) + xk * (scale * qk + self.p0))
            .sum()
    }

    fn local_map_jacobian(&self, _i: usize, _x: &[f64]) -> Vec<f64> {
        identity(self.dim)
    }

    fn grad_action(&self, i: usize, x: &[f64], q: &[f64]) -> Vec<f64> {
        let pi = self.nominal(i);
        let scale = self.omega * self.players as f64;
        x.iter()
            .zip(q)
            .map(|(xk, qk)| 2.0 * self.iota * (xk - pi) + scale * qk + self.p0)
            .collect()
    }

    fn grad_aggregate(&self, _i: usize, x: &[f64], _q: &[f64]) -> Vec<f64> {
        let scale = self.omega * self.players as f64;
        x.iter().map(|xk| scale * xk).collect()
    }

    fn constants(&self) -> GameConstants {
        let own = 2.0 * self.iota + self.omega;
        GameConstants { kappa: own, c1: own, c2: self.omega * self.players as f64, c3: 1.0 }
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        m[k * n + k] = 1.0;
    }
    m
}
