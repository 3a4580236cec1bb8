use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyKind {
    Ellipsoid,
    Ball,
}

/// An axis-aligned ellipsoid `{x : sum ((x_i - c_i) / v_i)^2 <= 1}`. A ball
/// is the special case with all semiaxes equal to the radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    kind: BodyKind,
    center: Vec<f64>,
    semiaxes: Vec<f64>,
}

/// Upper bound on bisection steps for the secular equation.
const SECULAR_BISECTIONS: usize = 200;

impl ConvexBody {
    pub fn ellipsoid(center: Vec<f64>, semiaxes: Vec<f64>) -> Result<Self> {
        Error::check_dim(center.len(), semiaxes.len())?;
        if center.is_empty() {
            return Err(Error::invalid("body dimension must be at least 1"));
        }
        if semiaxes.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("semiaxes must be finite and strictly positive"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("center must be finite"));
        }
        Ok(Self { kind: BodyKind::Ellipsoid, center, semiaxes })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = center.len();
        let mut body = Self::ellipsoid(center, vec![radius; n])?;
        body.kind = BodyKind::Ball;
        Ok(body)
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn semiaxes(&self) -> &[f64] {
        &self.semiaxes
    }

    /// `sum ((x_i - c_i) / v_i)^2`; the body is its sublevel set at 1.
    pub fn membership(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .zip(&self.semiaxes)
            .map(|((xi, ci), vi)| {
                let t = (xi - ci) / vi;
                t * t
            })
            .sum()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.membership(x) <= 1.0 + tol
    }

    /// Support function `max { <u, x> : x in body }`, valid for any `u`.
    pub fn support_value(&self, u: &[f64]) -> f64 {
        let stretched: f64 = u.iter().zip(&self.semiaxes).map(|(ui, vi)| (ui * vi).powi(2)).sum();
        linalg::dot(u, &self.center) + stretched.sqrt()
    }

    /// The maximizer of `<u, x>` over the body: `c + (v^2 * u) / |v * u|`.
    pub fn support_point(&self, u: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.dim(), u.len())?;
        let u = linalg::normalize(u).ok_or_else(|| Error::invalid("support direction has zero norm"))?;
        let stretched = u
            .iter()
            .zip(&self.semiaxes)
            .map(|(ui, vi)| (ui * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(self
            .center
            .iter()
            .zip(&self.semiaxes)
            .zip(&u)
            .map(|((c, v), ui)| c + v * v * ui / stretched)
            .collect())
    }

    /// Point of the 2D boundary at parameter angle `theta`.
    pub fn boundary_point_2d(&self, theta: f64) -> Vec<f64> {
        debug_assert_eq!(self.dim(), 2);
        vec![
            self.center[0] + self.semiaxes[0] * theta.cos(),
            self.center[1] + self.semiaxes[1] * theta.sin(),
        ]
    }

    /// Outward (unnormalized) normal of the boundary at `x`.
    pub fn outward_normal(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .zip(&self.semiaxes)
            .map(|((xi, ci), vi)| 2.0 * (xi - ci) / (vi * vi))
            .collect()
    }

    /// Euclidean projection onto the body.
    pub fn project_exact(&self, z: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.dim(), z.len())?;
        Ok(self.project_with_multiplier(z).0)
    }

    /// Projection together with the secular-equation root `lambda >= 0`.
    /// The projection is `c_i + v_i^2 w_i / (v_i^2 + lambda)` with `w = z - c`,
    /// where `lambda` solves `sum (v_i w_i / (v_i^2 + lambda))^2 = 1`.
    pub fn project_with_multiplier(&self, z: &[f64]) -> (Vec<f64>, f64) {
        if self.membership(z) <= 1.0 {
            return (z.to_vec(), 0.0);
        }
        if self.kind == BodyKind::Ball {
            let r = self.semiaxes[0];
            let w = linalg::sub(z, &self.center);
            let len = linalg::norm(&w);
            let x = self.center.iter().zip(&w).map(|(c, wi)| c + r * wi / len).collect();
            return (x, r * (len - r));
        }
        let w = linalg::sub(z, &self.center);
        let residual = |lambda: f64| -> f64 {
            w.iter()
                .zip(&self.semiaxes)
                .map(|(wi, vi)| {
                    let t = vi * wi / (vi * vi + lambda);
                    t * t
                })
                .sum::<f64>()
                - 1.0
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        while residual(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..SECULAR_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if residual(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let x = self
            .center
            .iter()
            .zip(&self.semiaxes)
            .zip(&w)
            .map(|((c, v), wi)| c + v * v * wi / (v * v + lambda))
            .collect();
        (x, lambda)
    }

    /// Residual of the projection optimality conditions at `x` for input `z`:
    /// `z - x = mu * grad g(x)` with `mu >= 0`, plus boundary feasibility.
    pub fn projection_kkt_residual(&self, z: &[f64], x: &[f64]) -> f64 {
        let feas = (self.membership(x) - 1.0).max(0.0);
        if self.membership(z) <= 1.0 {
            return feas + linalg::dist(z, x);
        }
        let normal = self.outward_normal(x);
        let diff = linalg::sub(z, x);
        let nn = linalg::dot(&normal, &normal);
        let mu = (linalg::dot(&diff, &normal) / nn).max(0.0);
        let stationarity: Vec<f64> = diff.iter().zip(&normal).map(|(d, g)| d - mu * g).collect();
        feas + (self.membership(x) - 1.0).abs() + linalg::norm(&stationarity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e43() -> ConvexBody {
        ConvexBody::ellipsoid(vec![0.0, 0.0], vec![4.0, 3.0]).unwrap()
    }

    #[test]
    fn rejects_nonpositive_semiaxes() {
        assert!(ConvexBody::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(ConvexBody::ball(vec![0.0], -1.0).is_err());
        assert!(ConvexBody::ellipsoid(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn support_point_axis_cases() {
        let b = e43();
        assert_eq!(b.support_point(&[1.0, 0.0]).unwrap(), vec![4.0, 0.0]);
        assert_eq!(b.support_point(&[0.0, -1.0]).unwrap(), vec![0.0, -3.0]);
        assert!(b.support_point(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn support_point_diagonal_matches_dense_sampling() {
        let b = e43();
        let u = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        let p = b.support_point(&u).unwrap();
        // oracle: dense boundary sampling
        let samples = 1_000_000;
        let (mut best, mut best_pt) = (f64::NEG_INFINITY, [0.0; 2]);
        for k in 0..samples {
            let t = std::f64::consts::TAU * k as f64 / samples as f64;
            let q = [4.0 * t.cos(), 3.0 * t.sin()];
            let v = u[0] * q[0] + u[1] * q[1];
            if v > best {
                best = v;
                best_pt = q;
            }
        }
        assert!((linalg::dot(&u, &p) - best).abs() < 1e-10);
        assert!(linalg::dist(&p, &best_pt) < 1e-4);
        assert!((b.support_value(&u) - best).abs() < 1e-10);
        assert!((b.membership(&p) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn support_point_always_on_boundary() {
        let b = ConvexBody::ellipsoid(vec![1.0, -2.0, 0.5], vec![7.0, 6.0, 5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = b.support_point(&u).unwrap();
            assert!((b.membership(&p) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn project_axis_and_interior() {
        let b = e43();
        let p = b.project_exact(&[8.0, 0.0]).unwrap();
        assert!(linalg::dist(&p, &[4.0, 0.0]) < 1e-12);
        assert_eq!(b.project_exact(&[0.1, 0.1]).unwrap(), vec![0.1, 0.1]);
    }

    #[test]
    fn project_matches_boundary_sampling_oracle() {
        let b = e43();
        let z = [5.0, 5.0];
        let p = b.project_exact(&z).unwrap();
        let samples = 1_000_000;
        let mut best = (f64::INFINITY, [0.0; 2]);
        for k in 0..samples {
            let t = std::f64::consts::TAU * k as f64 / samples as f64;
            let q = [4.0 * t.cos(), 3.0 * t.sin()];
            let d = linalg::dist(&q, &z);
            if d < best.0 {
                best = (d, q);
            }
        }
        assert!(linalg::dist(&p, &best.1) <= 1e-5);
        assert!(b.projection_kkt_residual(&z, &p) <= 1e-8);
    }

    #[test]
    fn ball_projection_is_radial() {
        let b = ConvexBody::ball(vec![1.0, 1.0, 1.0, 1.0], 2.0).unwrap();
        let p = b.project_exact(&[5.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(linalg::dist(&p, &[3.0, 1.0, 1.0, 1.0]) < 1e-15);
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive() {
        let b = ConvexBody::ellipsoid(vec![0.5, -0.5], vec![4.0, 1.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let z1: Vec<f64> = (0..2).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let z2: Vec<f64> = (0..2).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let p1 = b.project_exact(&z1).unwrap();
            let p2 = b.project_exact(&z2).unwrap();
            assert!(linalg::dist(&p1, &p2) <= linalg::dist(&z1, &z2) + 1e-12);
            let pp = b.project_exact(&p1).unwrap();
            assert!(linalg::dist(&pp, &p1) <= 1e-10);
            assert!(b.projection_kkt_residual(&z1, &p1) <= 1e-8);
        }
    }
}
