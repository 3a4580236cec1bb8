use super::{BodyKind, ConvexBody};
use crate::error::{Error, Result};

/// Curvature constant used in the perturbation bound: `1/r` for balls and
/// `max_j v_j / min_i v_i^2` for ellipsoids, the largest principal curvature
/// of the boundary.
pub fn curvature_nu(body: &ConvexBody) -> f64 {
    let v = body.semiaxes();
    match body.kind() {
        BodyKind::Ball => 1.0 / v[0],
        BodyKind::Ellipsoid => {
            let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
            vmax / (vmin * vmin)
        }
    }
}

/// Per-player bound `(2 / nu) arccos(1 - nu h) + h` on the distance between
/// projections onto a body and onto an inscribed polyhedron at Hausdorff
/// distance `h`.
pub fn projection_gap_bound(h: f64, nu: f64) -> Result<f64> {
    if !(h >= 0.0) || !(nu > 0.0) {
        return Err(Error::Domain(format!("need h >= 0 and nu > 0, got h={h}, nu={nu}")));
    }
    let arg = 1.0 - nu * h;
    if arg < -1.0 {
        return Err(Error::Domain(format!(
            "nu*h = {} exceeds 2; the approximation is too coarse for the arc construction",
            nu * h
        )));
    }
    Ok(2.0 / nu * arg.acos() + h)
}

/// `delta(H) = (1 + c3) sqrt(sum_i ((2/nu_i) arccos(1 - nu_i h_i) + h_i)^2)`.
pub fn delta_bound(h: &[f64], nu: &[f64], c3: f64) -> Result<f64> {
    Error::check_dim(h.len(), nu.len())?;
    if !(c3 > 0.0) {
        return Err(Error::Domain(format!("c3 must be positive, got {c3}")));
    }
    let mut sum = 0.0;
    for (&hi, &ni) in h.iter().zip(nu) {
        let t = projection_gap_bound(hi, ni)?;
        sum += t * t;
    }
    Ok((1.0 + c3) * sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn curvature_examples() {
        assert_eq!(curvature_nu(&ConvexBody::ball(vec![0.0; 3], 1.0).unwrap()), 1.0);
        assert_eq!(curvature_nu(&ConvexBody::ball(vec![0.0; 2], 4.0).unwrap()), 0.25);
        let e = ConvexBody::ellipsoid(vec![0.0, 0.0], vec![4.0, 3.0]).unwrap();
        assert!((curvature_nu(&e) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn ellipse_curvature_matches_finite_differences() {
        // kappa(t) = |x' y'' - y' x''| / (x'^2 + y'^2)^{3/2} for (4 cos t, 3 sin t)
        let (a, b) = (4.0f64, 3.0f64);
        let h = 1e-4;
        let pt = |t: f64| (a * t.cos(), b * t.sin());
        let mut kmax = 0.0f64;
        for i in 0..20000 {
            let t = std::f64::consts::TAU * i as f64 / 20000.0;
            let (xm, ym) = pt(t - h);
            let (x0, y0) = pt(t);
            let (xp, yp) = pt(t + h);
            let (dx, dy) = ((xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h));
            let (ddx, ddy) = ((xp - 2.0 * x0 + xm) / (h * h), (yp - 2.0 * y0 + ym) / (h * h));
            kmax = kmax.max((dx * ddy - dy * ddx).abs() / (dx * dx + dy * dy).powf(1.5));
        }
        let e = ConvexBody::ellipsoid(vec![0.0, 0.0], vec![a, b]).unwrap();
        assert!((curvature_nu(&e) - kmax).abs() < 1e-6, "{kmax}");
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_bound(&[0.0, 0.0], &[1.0, 0.5], 1.0).unwrap(), 0.0);
        let one = delta_bound(&[0.5], &[1.0], 1.0).unwrap();
        let want = 2.0 * (2.0 * std::f64::consts::PI / 3.0 + 0.5);
        assert!((one - want).abs() < 1e-12);
        assert!((one - 5.18879).abs() < 1e-5);
        let two = delta_bound(&[0.5, 0.0], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(delta_bound(&[2.5], &[1.0], 1.0), Err(Error::Domain(_))));
        assert!(delta_bound(&[0.1], &[1.0], 0.0).is_err());
        assert!(delta_bound(&[0.1], &[1.0, 1.0], 1.0).is_err());
        assert!(delta_bound(&[2.0], &[1.0], 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn monotone_in_each_h(
            h in proptest::collection::vec(0.0f64..1.0, 1..6),
            bump in 0.0f64..0.5,
            idx in 0usize..6,
        ) {
            let nu = vec![1.0; h.len()];
            let base = delta_bound(&h, &nu, 1.0).unwrap();
            let mut h2 = h.clone();
            let k = idx % h.len();
            h2[k] += bump;
            prop_assert!(delta_bound(&h2, &nu, 1.0).unwrap() >= base);
        }
    }
}
