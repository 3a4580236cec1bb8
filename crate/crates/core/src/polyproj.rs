//! Euclidean projection onto a polyhedron `{y : B y <= b}`.
//!
//! The projection QP `min |z - y|^2 s.t. B y <= b` is solved on its dual by
//! cyclic coordinate ascent (Hildreth's method). With unit-norm rows each
//! dual coordinate update is a closed-form halfspace correction. Every few
//! sweeps the support of the multipliers is handed to a small primal-dual
//! active-set pass that solves the equality-constrained projection exactly;
//! a candidate is accepted only when it certifies the KKT conditions.

use crate::error::{Error, Result};
use crate::geometry::Polyhedron;
use crate::linalg;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Sweeps after which a bounded, nonempty polyhedron is declared infeasible.
pub const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub point: Vec<f64>,
    /// One nonnegative multiplier per halfspace.
    pub multipliers: Vec<f64>,
    /// Dual sweeps plus active-set solves.
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Projects `z` onto `poly` with a cold start.
pub fn project_polyhedron(poly: &Polyhedron, z: &[f64], tol: f64) -> Result<QpSolution> {
    project_polyhedron_warm(poly, z, tol, None)
}

/// Projects `z` onto `poly`, optionally starting the dual iteration from
/// `warm` multipliers (e.g. the previous step's solution).
pub fn project_polyhedron_warm(poly: &Polyhedron, z: &[f64], tol: f64, warm: Option<&[f64]>) -> Result<QpSolution> {
    Error::check_dim(poly.dim(), z.len())?;
    if !(tol > 0.0) {
        return Err(Error::invalid("projection tolerance must be positive"));
    }
    if let Some(w) = warm {
        Error::check_dim(poly.facets(), w.len())?;
    }
    project_polyhedron_unchecked(poly, z, tol, warm)
}

/// KKT residual of `(point, multipliers)` as a projection of `z`: the largest
/// of primal violation, complementary slackness and stationarity.
pub fn kkt_residual(poly: &Polyhedron, z: &[f64], point: &[f64], multipliers: &[f64]) -> f64 {
    let mut primal = 0.0f64;
    let mut comp = 0.0f64;
    let mut dual = 0.0f64;
    let mut station: Vec<f64> = linalg::sub(point, z);
    for (j, row) in poly.rows().enumerate() {
        let slack = poly.offset(j) - linalg::dot(row, point);
        primal = primal.max(-slack);
        comp = comp.max((multipliers[j] * slack).abs());
        dual = dual.max(-multipliers[j]);
        linalg::axpy(multipliers[j], row, &mut station);
    }
    primal.max(comp).max(dual).max(linalg::norm(&station))
}

pub(crate) fn project_polyhedron_unchecked(
    poly: &Polyhedron,
    z: &[f64],
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<QpSolution> {
    let p = poly.facets();
    let warm_active = warm.is_some_and(|w| w.iter().any(|&m| m > 0.0));
    let mut iterations = 0;
    if warm_active {
        iterations += 1;
        if let Some(sol) = active_set_pass(poly, z, warm.unwrap_or_default(), tol) {
            return Ok(QpSolution { iterations: iterations + sol.iterations, ..sol });
        }
    } else if poly.max_violation(z) <= 0.0 {
        return Ok(QpSolution { point: z.to_vec(), multipliers: vec![0.0; p], iterations: 0, kkt_residual: 0.0 });
    }
    let mut mu: Vec<f64> = match warm {
        Some(w) => w.iter().map(|m| m.max(0.0)).collect(),
        None => vec![0.0; p],
    };

    let mut y = primal_from_dual(poly, z, &mu);
    let mut y_prev = y.clone();
    for sweep in 1..=MAX_SWEEPS {
        y_prev.copy_from_slice(&y);
        let mut changed = false;
        for (j, row) in poly.rows().enumerate() {
            let r = linalg::dot(row, &y) - poly.offset(j);
            let next = (mu[j] + r).max(0.0);
            let delta = next - mu[j];
            if delta != 0.0 {
                mu[j] = next;
                linalg::axpy(-delta, row, &mut y);
                changed = true;
            }
        }
        iterations += 1;

        let moved = linalg::dist(&y, &y_prev);
        if moved < tol || !changed {
            // rebuild from the multipliers to shed accumulated drift
            let point = primal_from_dual(poly, z, &mu);
            let kkt = kkt_residual(poly, z, &point, &mu);
            if kkt <= tol {
                return Ok(QpSolution { point, multipliers: mu, iterations, kkt_residual: kkt });
            }
        }
        // active-set refinement on sweeps 1, 2, 4, 8, ... and whenever the
        // dual iteration stalls
        if sweep.is_power_of_two() || !changed {
            iterations += 1;
            if let Some(sol) = active_set_pass(poly, z, &mu, tol) {
                return Ok(QpSolution { iterations: iterations + sol.iterations, ..sol });
            }
        }
        if !y.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(Error::Infeasible(format!(
        "dual ascent did not converge within {MAX_SWEEPS} sweeps; the polyhedron is likely empty"
    )))
}

fn primal_from_dual(poly: &Polyhedron, z: &[f64], mu: &[f64]) -> Vec<f64> {
    let mut y = z.to_vec();
    for (j, row) in poly.rows().enumerate() {
        if mu[j] != 0.0 {
            linalg::axpy(-mu[j], row, &mut y);
        }
    }
    y
}

/// Primal-dual active-set iteration seeded with the support of `mu`.
/// Returns a solution only if it certifies KKT within `tol`.
fn active_set_pass(poly: &Polyhedron, z: &[f64], mu: &[f64], tol: f64) -> Option<QpSolution> {
    let n = poly.dim();
    let p = poly.facets();
    let mut active: Vec<usize> = (0..p).filter(|&j| mu[j] > 0.0).collect();
    if active.len() > n {
        // degenerate vertex: keep the n strongest constraints
        active.sort_by(|&a, &b| mu[b].total_cmp(&mu[a]));
        active.truncate(n);
    }
    let mut around = Vec::new();
    for solves in 1..=2 * p + 2 {
        if active.len() > n {
            return None;
        }
        let k = active.len();
        let lambda = if k == 0 {
            Vec::new()
        } else {
            let mut gram = vec![0.0; k * k];
            for (a, &ja) in active.iter().enumerate() {
                for (b, &jb) in active.iter().enumerate() {
                    gram[a * k + b] = linalg::dot(poly.row(ja), poly.row(jb));
                }
            }
            let rhs: Vec<f64> = active.iter().map(|&j| linalg::dot(poly.row(j), z) - poly.offset(j)).collect();
            linalg::solve_dense(gram, rhs, k, 1e-12)?
        };

        if let Some((pos, _)) = lambda
            .iter()
            .enumerate()
            .filter(|(_, l)| **l < 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            active.remove(pos);
            continue;
        }

        let mut point = z.to_vec();
        for (&j, &l) in active.iter().zip(&lambda) {
            linalg::axpy(-l, poly.row(j), &mut point);
        }
        // With a complete vertex list, a point on the affine hull of the
        // active face lies in the polyhedron iff it satisfies the facets
        // touching that face's vertices (the polyhedron agrees with its
        // tangent cone near each boundary point of the face).
        let mut worst = (usize::MAX, f64::NEG_INFINITY);
        let mut scan = |j: usize| {
            let r = linalg::dot(poly.row(j), &point) - poly.offset(j);
            if r > worst.1 {
                worst = (j, r);
            }
        };
        if poly.facets_around_face(&active, &mut around) {
            around.iter().for_each(|&j| scan(j));
        } else {
            (0..p).for_each(scan);
        }
        let comp = active
            .iter()
            .zip(&lambda)
            .map(|(&j, l)| (l * (linalg::dot(poly.row(j), &point) - poly.offset(j))).abs())
            .fold(0.0, f64::max);
        let (worst, viol) = worst;
        if viol > tol {
            if active.contains(&worst) {
                return None;
            }
            active.push(worst);
            continue;
        }
        let kkt = viol.max(0.0).max(comp);
        if kkt > tol {
            return None;
        }
        let mut multipliers = vec![0.0; p];
        for (&j, &l) in active.iter().zip(&lambda) {
            multipliers[j] = l;
        }
        return Some(QpSolution { point, multipliers, iterations: solves, kkt_residual: kkt });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> Polyhedron {
        Polyhedron::new(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![1.0; 4],
            vec![],
        )
        .unwrap()
    }

    fn random_polygon(rng: &mut ChaCha8Rng, m: usize) -> Polyhedron {
        let mut angles: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let (a, b) = (rng.gen_range(1.0..5.0), rng.gen_range(1.0..5.0));
        let verts: Vec<Vec<f64>> = angles.iter().map(|t| vec![a * t.cos(), b * t.sin()]).collect();
        let mut rows = Vec::new();
        let mut offs = Vec::new();
        for k in 0..m {
            let (p, q) = (&verts[k], &verts[(k + 1) % m]);
            rows.push(vec![q[1] - p[1], p[0] - q[0]]);
            offs.push((q[1] - p[1]) * p[0] + (p[0] - q[0]) * p[1]);
        }
        Polyhedron::from_unnormalized(rows, offs, verts).unwrap()
    }

    #[test]
    fn box_clamp() {
        let sol = project_polyhedron(&unit_box(), &[2.0, 0.0], DEFAULT_TOL).unwrap();
        assert!(linalg::dist(&sol.point, &[1.0, 0.0]) < 1e-12);
        assert!((sol.multipliers[0] - 1.0).abs() < 1e-12);
        assert!(sol.multipliers[1..].iter().all(|&m| m == 0.0));
    }

    #[test]
    fn single_halfspace_closed_form() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // close the halfspace with a far-away box so the set is bounded
        let poly = Polyhedron::new(
            vec![vec![h, h], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![2f64.sqrt(), 100.0, 100.0],
            vec![],
        )
        .unwrap();
        let sol = project_polyhedron(&poly, &[2.0, 2.0], DEFAULT_TOL).unwrap();
        assert!(linalg::dist(&sol.point, &[1.0, 1.0]) < 1e-12);
    }

    #[test]
    fn interior_point_is_fixed_with_zero_multipliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let poly = random_polygon(&mut rng, 8);
        let z = [0.01, -0.02];
        assert!(poly.max_violation(&z) <= -1e-6);
        let sol = project_polyhedron(&poly, &z, DEFAULT_TOL).unwrap();
        assert_eq!(sol.point, z.to_vec());
        assert!(sol.multipliers.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn empty_polyhedron_is_reported_infeasible() {
        // x <= -1 and -x <= -1: bounded recession cone but empty
        let shifted = Polyhedron::new(vec![vec![1.0], vec![-1.0]], vec![-1.0, -1.0], vec![]).unwrap();
        let err = project_polyhedron(&shifted, &[0.0], DEFAULT_TOL);
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let poly = random_polygon(&mut rng, 12);
        let mut prev: Option<Vec<f64>> = None;
        for _ in 0..200 {
            let z = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
            let cold = project_polyhedron(&poly, &z, DEFAULT_TOL).unwrap();
            let warm = project_polyhedron_warm(&poly, &z, DEFAULT_TOL, prev.as_deref()).unwrap();
            assert!(linalg::dist(&cold.point, &warm.point) <= 1e-8);
            prev = Some(warm.multipliers);
        }
    }

    #[test]
    fn face_local_certification_matches_full_scan() {
        use crate::geometry::{default_seed, inscribe_greedy, ConvexBody};
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let body = ConvexBody::ellipsoid(vec![0.5, -1.0, 0.0], vec![7.0, 6.0, 5.0]).unwrap();
        let mut polys = vec![inscribe_greedy(&body, 24, &default_seed(&body).unwrap()).unwrap()];
        for _ in 0..3 {
            polys.push(random_polygon(&mut rng, 15).with_complete_vertices().unwrap());
        }
        for fast in &polys {
            assert!(fast.has_complete_vertices());
            let rows: Vec<Vec<f64>> = fast.rows().map(<[f64]>::to_vec).collect();
            let plain = Polyhedron::new(rows, fast.offsets().to_vec(), fast.vertices().to_vec()).unwrap();
            let n = fast.dim();
            let mut z: Vec<f64> = (0..n).map(|_| rng.gen_range(-9.0..9.0)).collect();
            let mut prev: Option<Vec<f64>> = None;
            for step in 0..2000 {
                if step % 50 == 0 {
                    z = (0..n).map(|_| rng.gen_range(-9.0..9.0)).collect();
                } else {
                    z.iter_mut().for_each(|v| *v += rng.gen_range(-0.3..0.3));
                }
                let sol = project_polyhedron_warm(fast, &z, DEFAULT_TOL, prev.as_deref()).unwrap();
                let reference = project_polyhedron(&plain, &z, DEFAULT_TOL).unwrap();
                assert!(linalg::dist(&sol.point, &reference.point) <= 1e-8);
                assert!(kkt_residual(&plain, &z, &sol.point, &sol.multipliers) <= 1e-9);
                prev = Some(sol.multipliers);
            }
        }
    }

    #[test]
    fn kkt_invariants_hold_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let m = rng.gen_range(3..20);
            let poly = random_polygon(&mut rng, m);
            let z = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let sol = project_polyhedron(&poly, &z, DEFAULT_TOL).unwrap();
            assert!(sol.kkt_residual <= DEFAULT_TOL);
            assert!(sol.multipliers.iter().all(|&m| m >= 0.0));
            assert!(poly.max_violation(&sol.point) <= DEFAULT_TOL);
            let again = project_polyhedron(&poly, &sol.point, DEFAULT_TOL).unwrap();
            assert!(linalg::dist(&again.point, &sol.point) <= DEFAULT_TOL);
        }
    }

    #[test]
    fn rejects_bad_tolerance_and_dimension() {
        assert!(project_polyhedron(&unit_box(), &[0.0, 0.0], 0.0).is_err());
        assert!(project_polyhedron(&unit_box(), &[0.0], 1e-10).is_err());
    }
}
