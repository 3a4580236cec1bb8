//! Aggregative games: payoffs `f_i(x_i, Q)` coupled through the aggregate
//! `Q(x) = (1/N) sum_i q_i(x_i)`.

mod builtin;
mod response;

pub use builtin::{CournotModel, DemandResponseModel};
pub use response::{
    best_response, best_response_over, estimate_c1, estimate_c2, estimate_c3, estimate_kappa,
    random_point_in, ResponseOptions,
};

use crate::error::{Error, Result};
use crate::geometry::ConvexBody;

/// Central-difference step used by the generic gradient fallbacks.
pub const FD_STEP: f64 = 1e-6;

/// Regularity constants: strong monotonicity `kappa` of the pseudo-gradient,
/// Lipschitz constants `c1` (U in x), `c2` (U in zeta) and `c3` (q_i).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConstants {
    pub kappa: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// An aggregative game with `N` players, actions in `R^n` and aggregate in
/// `R^M`. Stacked profiles are flat vectors of length `N * n`.
///
/// Gradients default to central finite differences of the payoff; builtin
/// models override them analytically.
pub trait AggregativeGame: Send + Sync {
    fn name(&self) -> &str;

    fn players(&self) -> usize;

    fn action_dim(&self) -> usize;

    fn aggregate_dim(&self) -> usize;

    /// Feasible set `Omega_i`.
    fn body(&self, i: usize) -> &ConvexBody;

    /// `f_i(x_i, Q)`.
    fn payoff(&self, i: usize, x_i: &[f64], agg: &[f64]) -> f64;

    /// Local aggregation map `q_i(x_i)`; identity by default.
    fn local_map(&self, _i: usize, x_i: &[f64]) -> Vec<f64> {
        x_i.to_vec()
    }

    /// Jacobian of `q_i` at `x_i`, row-major `M x n`.
    fn local_map_jacobian(&self, i: usize, x_i: &[f64]) -> Vec<f64> {
        let (n, m) = (self.action_dim(), self.aggregate_dim());
        let mut jac = vec![0.0; m * n];
        let mut probe = x_i.to_vec();
        for k in 0..n {
            let orig = probe[k];
            probe[k] = orig + FD_STEP;
            let up = self.local_map(i, &probe);
            probe[k] = orig - FD_STEP;
            let down = self.local_map(i, &probe);
            probe[k] = orig;
            for r in 0..m {
                jac[r * n + k] = (up[r] - down[r]) / (2.0 * FD_STEP);
            }
        }
        jac
    }

    /// `grad_{x_i} f_i(., Q)`.
    fn grad_action(&self, i: usize, x_i: &[f64], agg: &[f64]) -> Vec<f64> {
        central_diff(|y| self.payoff(i, y, agg), x_i)
    }

    /// `grad_Q f_i(x_i, .)`.
    fn grad_aggregate(&self, i: usize, x_i: &[f64], agg: &[f64]) -> Vec<f64> {
        central_diff(|q| self.payoff(i, x_i, q), agg)
    }

    fn constants(&self) -> GameConstants;
}

pub fn central_diff(f: impl Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    let mut probe = at.to_vec();
    (0..at.len())
        .map(|k| {
            let orig = probe[k];
            probe[k] = orig + FD_STEP;
            let up = f(&probe);
            probe[k] = orig - FD_STEP;
            let down = f(&probe);
            probe[k] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn check_profile<G: AggregativeGame + ?Sized>(game: &G, x: &[f64]) -> Result<()> {
    Error::check_dim(game.players() * game.action_dim(), x.len())
}

/// `Q(x) = (1/N) sum_i q_i(x_i)`.
pub fn aggregate<G: AggregativeGame + ?Sized>(game: &G, x: &[f64]) -> Result<Vec<f64>> {
    check_profile(game, x)?;
    let (n, m, big_n) = (game.action_dim(), game.aggregate_dim(), game.players());
    let mut q = vec![0.0; m];
    for (i, xi) in x.chunks_exact(n).enumerate() {
        for (acc, v) in q.iter_mut().zip(game.local_map(i, xi)) {
            *acc += v;
        }
    }
    Ok(q.into_iter().map(|v| v / big_n as f64).collect())
}

/// `U_i(x_i, zeta_i) = grad_x f_i + (1/N) (grad q_i)^T grad_Q f_i`, with the
/// aggregate argument replaced by the estimate `zeta_i`.
pub fn u_map<G: AggregativeGame + ?Sized>(game: &G, i: usize, x_i: &[f64], zeta_i: &[f64]) -> Vec<f64> {
    let (n, m) = (game.action_dim(), game.aggregate_dim());
    let mut u = game.grad_action(i, x_i, zeta_i);
    let gq = game.grad_aggregate(i, x_i, zeta_i);
    let jac = game.local_map_jacobian(i, x_i);
    let inv_n = 1.0 / game.players() as f64;
    for k in 0..n {
        let mut s = 0.0;
        for r in 0..m {
            s += jac[r * n + k] * gq[r];
        }
        u[k] += inv_n * s;
    }
    u
}

/// Pseudo-gradient `F(x) = col(grad_{x_i} J_i(x))`.
pub fn pseudo_gradient<G: AggregativeGame + ?Sized>(game: &G, x: &[f64]) -> Result<Vec<f64>> {
    let q = aggregate(game, x)?;
    let n = game.action_dim();
    Ok(x.chunks_exact(n).enumerate().flat_map(|(i, xi)| u_map(game, i, xi, &q)).collect())
}

/// `J_i(y, x_{-i})`: player `i`'s cost when it plays `y` against `x`.
pub fn cost<G: AggregativeGame + ?Sized>(game: &G, i: usize, y: &[f64], x: &[f64]) -> Result<f64> {
    let q = aggregate_with(game, i, y, x)?;
    Ok(game.payoff(i, y, &q))
}

/// Aggregate of `x` with player `i`'s action replaced by `y`.
pub fn aggregate_with<G: AggregativeGame + ?Sized>(game: &G, i: usize, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_profile(game, x)?;
    let n = game.action_dim();
    Error::check_dim(n, y.len())?;
    let mut q = aggregate(game, x)?;
    let inv_n = 1.0 / game.players() as f64;
    let old = game.local_map(i, &x[i * n..(i + 1) * n]);
    let new = game.local_map(i, y);
    for ((qk, o), v) in q.iter_mut().zip(old).zip(new) {
        *qk += inv_n * (v - o);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Payoff independent of the aggregate.
    struct Decoupled {
        body: ConvexBody,
    }

    impl AggregativeGame for Decoupled {
        fn name(&self) -> &str {
            "decoupled"
        }
        fn players(&self) -> usize {
            3
        }
        fn action_dim(&self) -> usize {
            2
        }
        fn aggregate_dim(&self) -> usize {
            2
        }
        fn body(&self, _i: usize) -> &ConvexBody {
            &self.body
        }
        fn payoff(&self, i: usize, x: &[f64], _q: &[f64]) -> f64 {
            (x[0] - i as f64).powi(2) + 3.0 * x[1].powi(4)
        }
        fn constants(&self) -> GameConstants {
            GameConstants { kappa: 1.0, c1: 1.0, c2: 0.0, c3: 1.0 }
        }
    }

    #[test]
    fn decoupled_u_map_is_own_gradient() {
        let g = Decoupled { body: ConvexBody::ball(vec![0.0, 0.0], 2.0).unwrap() };
        let x = [0.3, -0.7];
        let u = u_map(&g, 1, &x, &[5.0, 5.0]);
        let want = [2.0 * (0.3 - 1.0), 12.0 * (-0.7f64).powi(3)];
        assert!(linalg::dist(&u, &want) < 1e-6);
    }

    #[test]
    fn cournot_aggregate_examples() {
        let g = CournotModel::standard();
        assert_eq!(aggregate(&g, &[0.0; 8]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(aggregate(&g, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert!(aggregate(&g, &[0.0; 7]).is_err());
    }

    #[test]
    fn demand_response_aggregate_is_mean() {
        let g = DemandResponseModel::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..30).map(|_| rand::Rng::gen_range(&mut rng, -3.0..3.0)).collect();
        let q = aggregate(&g, &x).unwrap();
        for c in 0..3 {
            let direct: f64 = (0..10).map(|i| x[i * 3 + c]).sum::<f64>() / 10.0;
            assert!((q[c] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn stacked_u_equals_pseudo_gradient() {
        let g = CournotModel::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x: Vec<f64> = (0..4).flat_map(|i| random_point_in(g.body(i), &mut rng)).collect();
            let q = aggregate(&g, &x).unwrap();
            let stacked: Vec<f64> = (0..4).flat_map(|i| u_map(&g, i, &x[2 * i..2 * i + 2], &q)).collect();
            let f = pseudo_gradient(&g, &x).unwrap();
            assert!(linalg::dist(&stacked, &f) <= 1e-12);
        }
    }

    #[test]
    fn cournot_u_map_matches_finite_difference_of_cost() {
        // Perturb x_1 while the aggregate argument is pinned to zeta: the
        // first term differentiates f_1 in x_1, the second through Q's
        // 1/N dependence on x_1.
        let g = CournotModel::standard();
        let zeta = [2.0, 2.0];
        let x1 = [1.0, 1.0];
        let fd = central_diff(
            |y| {
                let q: Vec<f64> = zeta.iter().zip(y).zip(&x1).map(|((z, yk), xk)| z + (yk - xk) / 4.0).collect();
                g.payoff(0, y, &q)
            },
            &x1,
        );
        let u = u_map(&g, 0, &x1, &zeta);
        assert!(linalg::dist(&u, &fd) < 1e-6, "{u:?} vs {fd:?}");
    }

    #[test]
    fn pseudo_gradient_matches_finite_differences_at_zero() {
        let g = CournotModel::standard();
        let x = vec![0.0; 8];
        let f = pseudo_gradient(&g, &x).unwrap();
        for i in 0..4 {
            let fd = central_diff(|y| cost(&g, i, y, &x).unwrap(), &x[2 * i..2 * i + 2]);
            for k in 0..2 {
                let a = f[2 * i + k];
                assert!((a - fd[k]).abs() <= 1e-5 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn doubling_price_slope_doubles_coupling() {
        let base = CournotModel { price_slope: 0.0, ..CournotModel::standard() };
        let one = CournotModel::standard();
        let two = CournotModel { price_slope: 0.02, ..CournotModel::standard() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..4).flat_map(|i| random_point_in(one.body(i), &mut rng)).collect();
        let f0 = pseudo_gradient(&base, &x).unwrap();
        let c1 = linalg::sub(&pseudo_gradient(&one, &x).unwrap(), &f0);
        let c2 = linalg::sub(&pseudo_gradient(&two, &x).unwrap(), &f0);
        assert!(linalg::dist(&c2, &linalg::scale(&c1, 2.0)) < 1e-14);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let games: Vec<Box<dyn AggregativeGame>> = vec![Box::new(CournotModel::standard()), Box::new(DemandResponseModel::standard())];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in &games {
            let n = g.action_dim();
            for _ in 0..100 {
                let i = rand::Rng::gen_range(&mut rng, 0..g.players());
                let xi = random_point_in(g.body(i), &mut rng);
                let q = random_point_in(g.body(i), &mut rng);
                let ga = g.grad_action(i, &xi, &q);
                let fa = central_diff(|y| g.payoff(i, y, &q), &xi);
                let gq = g.grad_aggregate(i, &xi, &q);
                let fq = central_diff(|z| g.payoff(i, &xi, z), &q);
                for k in 0..n {
                    assert!((ga[k] - fa[k]).abs() <= 1e-5 * ga[k].abs().max(1.0), "{}", g.name());
                    assert!((gq[k] - fq[k]).abs() <= 1e-5 * gq[k].abs().max(1.0), "{}", g.name());
                }
            }
        }
    }
}
