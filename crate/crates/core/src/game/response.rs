use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{aggregate_with, pseudo_gradient, u_map, AggregativeGame};
use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, ConvexSet};
use crate::linalg;

/// Uniform sample from the interior of an ellipsoid.
pub fn random_point_in(body: &ConvexBody, rng: &mut impl Rng) -> Vec<f64> {
    let n = body.dim();
    let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let len = linalg::norm(&dir).max(f64::MIN_POSITIVE);
    let radius = rng.gen::<f64>().powf(1.0 / n as f64);
    (0..n).map(|k| body.center()[k] + body.semiaxes()[k] * radius * dir[k] / len).collect()
}

#[derive(Debug, Clone)]
pub struct ResponseOptions {
    /// Stop when the gradient-mapping residual `L ||y - Proj(y - g/L)||` is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Random pairs used to estimate the gradient's Lipschitz constant.
    pub lipschitz_samples: usize,
    pub seed: u64,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 1_000_000, lipschitz_samples: 100, seed: 0 }
    }
}

/// `argmin_{y in Omega_i} J_i(y, x_{-i})`.
pub fn best_response<G: AggregativeGame + ?Sized>(
    game: &G,
    i: usize,
    x: &[f64],
    opts: &ResponseOptions,
) -> Result<Vec<f64>> {
    best_response_over(game, i, x, game.body(i), opts)
}

/// Best response of player `i` over an arbitrary closed convex `set`, by
/// projected gradient descent with step `1 / (1.2 L)`.
pub fn best_response_over<G: AggregativeGame + ?Sized, S: ConvexSet + ?Sized>(
    game: &G,
    i: usize,
    x: &[f64],
    set: &S,
    opts: &ResponseOptions,
) -> Result<Vec<f64>> {
    let n = game.action_dim();
    if i >= game.players() {
        return Err(Error::invalid(format!("player index {i} out of range")));
    }
    Error::check_dim(game.players() * n, x.len())?;
    Error::check_dim(n, set.dim())?;
    let grad = |y: &[f64]| -> Result<Vec<f64>> {
        let q = aggregate_with(game, i, y, x)?;
        Ok(u_map(game, i, y, &q))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let body = game.body(i);
    let mut lip: f64 = 0.0;
    for _ in 0..opts.lipschitz_samples {
        let a = random_point_in(body, &mut rng);
        let b = random_point_in(body, &mut rng);
        let d = linalg::dist(&a, &b);
        if d > 1e-9 {
            lip = lip.max(linalg::dist(&grad(&a)?, &grad(&b)?) / d);
        }
    }
    let lip = (1.2 * lip).max(1e-12);

    let mut y = set.project(&x[i * n..(i + 1) * n])?;
    for _ in 0..opts.max_iter {
        let g = grad(&y)?;
        let step: Vec<f64> = y.iter().zip(&g).map(|(yk, gk)| yk - gk / lip).collect();
        let next = set.project(&step)?;
        let residual = lip * linalg::dist(&y, &next);
        y = next;
        if residual <= opts.tol {
            return Ok(y);
        }
    }
    Err(Error::Numeric(format!("best response for player {i} did not converge in {} iterations", opts.max_iter)))
}

fn random_profile<G: AggregativeGame + ?Sized>(game: &G, rng: &mut impl Rng) -> Vec<f64> {
    (0..game.players()).flat_map(|i| random_point_in(game.body(i), rng)).collect()
}

/// Sampled lower estimate of the pseudo-gradient's strong monotonicity:
/// `min <F(x) - F(y), x - y> / ||x - y||^2` over random feasible pairs.
pub fn estimate_kappa<G: AggregativeGame + ?Sized>(game: &G, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let a = random_profile(game, &mut rng);
        let b = random_profile(game, &mut rng);
        let d = linalg::sub(&a, &b);
        let dd = linalg::dot(&d, &d);
        if dd > 1e-18 {
            let df = linalg::sub(&pseudo_gradient(game, &a)?, &pseudo_gradient(game, &b)?);
            best = best.min(linalg::dot(&df, &d) / dd);
        }
    }
    Ok(best)
}

/// Sampled estimate of the Lipschitz constant of `U_i` in its action argument.
pub fn estimate_c1<G: AggregativeGame + ?Sized>(game: &G, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let i = rng.gen_range(0..game.players());
        let a = random_point_in(game.body(i), &mut rng);
        let b = random_point_in(game.body(i), &mut rng);
        let zeta = random_point_in(game.body(i), &mut rng);
        let d = linalg::dist(&a, &b);
        if d > 1e-9 {
            best = best.max(linalg::dist(&u_map(game, i, &a, &zeta), &u_map(game, i, &b, &zeta)) / d);
        }
    }
    Ok(best)
}

/// Sampled estimate of the Lipschitz constant of `U_i` in the aggregate estimate.
pub fn estimate_c2<G: AggregativeGame + ?Sized>(game: &G, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let m = game.aggregate_dim();
    for _ in 0..samples {
        let i = rng.gen_range(0..game.players());
        let xi = random_point_in(game.body(i), &mut rng);
        let za: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let zb: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let d = linalg::dist(&za, &zb);
        if d > 1e-9 {
            best = best.max(linalg::dist(&u_map(game, i, &xi, &za), &u_map(game, i, &xi, &zb)) / d);
        }
    }
    Ok(best)
}

/// Sampled Lipschitz estimate of the local maps `q_i` (the constant `c3`).
pub fn estimate_c3<G: AggregativeGame + ?Sized>(game: &G, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let i = rng.gen_range(0..game.players());
        let a = random_point_in(game.body(i), &mut rng);
        let b = random_point_in(game.body(i), &mut rng);
        let d = linalg::dist(&a, &b);
        if d > 1e-9 {
            best = best.max(linalg::dist(&game.local_map(i, &a), &game.local_map(i, &b)) / d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{cost, CournotModel, DemandResponseModel, GameConstants};
    use crate::geometry::inscribe_regular;

    #[test]
    fn sampled_constants_agree_with_declared() {
        let g = CournotModel::standard();
        let c = g.constants();
        assert_eq!(c, GameConstants { kappa: 1.0, c1: 1.0025, c2: 0.01, c3: 1.0 });
        assert!(estimate_kappa(&g, 1000, 1).unwrap() >= 0.99 * c.kappa);
        assert!(estimate_c2(&g, 1000, 2).unwrap() <= 0.011);
        let c1 = estimate_c1(&g, 1000, 3).unwrap();
        assert!((c1 - c.c1).abs() <= 0.1 * c.c1, "c1 estimate {c1}");
        assert!((estimate_c3(&g, 100, 4) - 1.0).abs() < 1e-12);

        let d = DemandResponseModel::standard();
        let c = d.constants();
        assert!((c.kappa - 0.101).abs() < 1e-15 && (c.c2 - 0.01).abs() < 1e-15);
        assert!(estimate_kappa(&d, 1000, 5).unwrap() >= 0.99 * c.kappa);
        assert!(estimate_c2(&d, 1000, 6).unwrap() <= 1.1 * c.c2);
        let c1 = estimate_c1(&d, 1000, 7).unwrap();
        assert!((c1 - c.c1).abs() <= 0.1 * c.c1, "c1 estimate {c1}");
    }

    #[test]
    fn interior_best_response_zeroes_the_gradient() {
        let g = CournotModel::standard();
        let x = vec![0.0; 8];
        let y = best_response(&g, 3, &x, &ResponseOptions::default()).unwrap();
        assert!(g.body(3).membership(&y) < 1.0);
        let q = aggregate_with(&g, 3, &y, &x).unwrap();
        assert!(linalg::norm(&u_map(&g, 3, &y, &q)) < 1e-8);
        // y (1 + 2 * 0.01 / 4) = -(0.5 * 9 - 4)
        let want = -0.5 / 1.005;
        assert!((y[0] - want).abs() < 1e-9 && (y[1] - want).abs() < 1e-9);
    }

    #[test]
    fn boundary_best_response_satisfies_normal_cone() {
        let mut g = CournotModel::standard();
        g.demand_offset = -20.0;
        let x = vec![0.0; 8];
        let y = best_response(&g, 0, &x, &ResponseOptions::default()).unwrap();
        assert!((g.body(0).membership(&y) - 1.0).abs() < 1e-9);
        let q = aggregate_with(&g, 0, &y, &x).unwrap();
        let grad = u_map(&g, 0, &y, &q);
        let normal = g.body(0).outward_normal(&y);
        let cosang = -linalg::dot(&grad, &normal) / (linalg::norm(&grad) * linalg::norm(&normal));
        assert!((cosang - 1.0).abs() < 1e-8);
        // no feasible point improves the cost
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let jy = cost(&g, 0, &y, &x).unwrap();
        for _ in 0..1000 {
            let z = random_point_in(g.body(0), &mut rng);
            assert!(cost(&g, 0, &z, &x).unwrap() >= jy - 1e-9);
        }
    }

    #[test]
    fn best_response_over_polygon_stays_inside() {
        let mut g = CournotModel::standard();
        g.demand_offset = -20.0;
        let poly = inscribe_regular(&g.body, 6).unwrap();
        let y = best_response_over(&g, 0, &[0.0; 8], &poly, &ResponseOptions::default()).unwrap();
        assert!(poly.max_violation(&y) <= 1e-9);
        assert!(best_response(&g, 7, &[0.0; 8], &ResponseOptions::default()).is_err());
    }
}
