use std::f64::consts::TAU;

use super::{ConvexBody, Hull3, Polyhedron};
use crate::error::{Error, Result};
use crate::linalg;

/// Regular inscribed `m`-gon of a 2D body with vertices at parameter angles
/// `2 pi k / m`, the first on the positive first semiaxis.
pub fn inscribe_regular(body: &ConvexBody, m: usize) -> Result<Polyhedron> {
    if body.dim() != 2 {
        return Err(Error::invalid("regular inscription needs a 2D body"));
    }
    if m < 3 {
        return Err(Error::invalid(format!("need at least 3 vertices, got {m}")));
    }
    let verts: Vec<Vec<f64>> = (0..m).map(|k| body.boundary_point_2d(TAU * k as f64 / m as f64)).collect();
    polygon_from_ccw(verts)
}

/// Halfspace form of a convex polygon given by counter-clockwise vertices.
fn polygon_from_ccw(verts: Vec<Vec<f64>>) -> Result<Polyhedron> {
    let m = verts.len();
    let mut rows = Vec::with_capacity(m);
    let mut offs = Vec::with_capacity(m);
    for k in 0..m {
        let (p, q) = (&verts[k], &verts[(k + 1) % m]);
        let n = linalg::normalize(&[q[1] - p[1], p[0] - q[0]])
            .ok_or_else(|| Error::invalid("polygon has coincident consecutive vertices"))?;
        offs.push(linalg::dot(&n, p).max(linalg::dot(&n, q)));
        rows.push(n);
    }
    Polyhedron::new(rows, offs, verts)?.with_complete_vertices()
}

/// Seed simplex on the body boundary: parameter angles `0, 2pi/3, 4pi/3` in
/// 2D; support points along the regular-tetrahedron directions in 3D.
pub fn default_seed(body: &ConvexBody) -> Result<Vec<Vec<f64>>> {
    match body.dim() {
        2 => Ok((0..3).map(|k| body.boundary_point_2d(TAU * k as f64 / 3.0)).collect()),
        3 => [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
            .iter()
            .map(|u| body.support_point(u))
            .collect(),
        d => Err(Error::invalid(format!("automatic construction supports dimensions 2 and 3, got {d}"))),
    }
}

/// Result of a greedy construction together with the largest facet support
/// gap `g_body(u) - g_poly(u)` before each vertex insertion and at the end.
#[derive(Debug, Clone)]
pub struct GreedyTrace {
    pub polyhedron: Polyhedron,
    pub max_gaps: Vec<f64>,
    /// Gap of the facet that was refined at each insertion.
    pub split_gaps: Vec<f64>,
    /// Largest gap among the facets created by each insertion.
    pub child_gaps: Vec<f64>,
}

pub fn inscribe_greedy(body: &ConvexBody, s: usize, seed: &[Vec<f64>]) -> Result<Polyhedron> {
    inscribe_greedy_traced(body, s, seed).map(|t| t.polyhedron)
}

/// Greedy inscription: repeatedly finds the facet normal `u` with the
/// largest support gap and adds the body's support point in direction `u`.
pub fn inscribe_greedy_traced(body: &ConvexBody, s: usize, seed: &[Vec<f64>]) -> Result<GreedyTrace> {
    let n = body.dim();
    if !(n == 2 || n == 3) {
        return Err(Error::invalid(format!("greedy inscription supports dimensions 2 and 3, got {n}")));
    }
    if seed.len() != n + 1 {
        return Err(Error::invalid(format!("seed must have {} points, got {}", n + 1, seed.len())));
    }
    if s < n + 1 {
        return Err(Error::invalid(format!("target vertex count {s} is below the seed size {}", n + 1)));
    }
    for (k, p) in seed.iter().enumerate() {
        Error::check_dim(n, p.len())?;
        if (body.membership(p) - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!("seed point {k} is not on the body boundary")));
        }
    }
    if n == 2 {
        greedy_2d(body, s, seed)
    } else {
        greedy_3d(body, s, seed)
    }
}

fn greedy_2d(body: &ConvexBody, s: usize, seed: &[Vec<f64>]) -> Result<GreedyTrace> {
    let (a, b, c) = (&seed[0], &seed[1], &seed[2]);
    let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let scale = seed.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    if area2.abs() <= 1e-12 * scale * scale {
        return Err(Error::invalid("seed simplex is degenerate (affinely dependent)"));
    }
    let mut verts: Vec<Vec<f64>> = if area2 > 0.0 {
        seed.to_vec()
    } else {
        vec![a.clone(), c.clone(), b.clone()]
    };
    let edge_gap = |p: &[f64], q: &[f64]| -> (Vec<f64>, f64) {
        let u = linalg::normalize(&[q[1] - p[1], p[0] - q[0]]).unwrap_or_else(|| vec![0.0, 0.0]);
        let gap = body.support_value(&u) - linalg::dot(&u, p);
        (u, gap)
    };
    let mut trace = GreedyTrace {
        polyhedron: polygon_from_ccw(verts.clone())?,
        max_gaps: Vec::new(),
        split_gaps: Vec::new(),
        child_gaps: Vec::new(),
    };
    loop {
        let m = verts.len();
        let (k, (u, gap)) = (0..m)
            .map(|k| (k, edge_gap(&verts[k], &verts[(k + 1) % m])))
            .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
            .expect("polygon has edges");
        trace.max_gaps.push(gap);
        if m >= s {
            break;
        }
        if gap <= 1e-14 {
            return Err(Error::invalid("body has no remaining support gap to refine"));
        }
        let w = body.support_point(&u)?;
        let next = (k + 1) % m;
        let child = edge_gap(&verts[k], &w).1.max(edge_gap(&w, &verts[next]).1);
        verts.insert(k + 1, w);
        trace.split_gaps.push(gap);
        trace.child_gaps.push(child);
    }
    trace.polyhedron = polygon_from_ccw(verts)?;
    Ok(trace)
}

fn greedy_3d(body: &ConvexBody, s: usize, seed: &[Vec<f64>]) -> Result<GreedyTrace> {
    let to3 = |p: &Vec<f64>| [p[0], p[1], p[2]];
    let mut hull = Hull3::tetrahedron([to3(&seed[0]), to3(&seed[1]), to3(&seed[2]), to3(&seed[3])])?;
    let mut trace = GreedyTrace {
        polyhedron: hull_polyhedron(&hull)?,
        max_gaps: Vec::new(),
        split_gaps: Vec::new(),
        child_gaps: Vec::new(),
    };
    let face_gap = |hull: &Hull3, k: usize| -> ([f64; 3], f64) {
        let (u, off) = hull.plane(k);
        (u, body.support_value(&u) - off)
    };
    loop {
        let (u, gap) = (0..hull.faces().len())
            .map(|k| face_gap(&hull, k))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("hull has faces");
        trace.max_gaps.push(gap);
        if hull.points().len() >= s {
            break;
        }
        let w = body.support_point(&u)?;
        let before: HashSetFaces = hull.faces().iter().copied().collect();
        if gap <= 1e-14 || !hull.add_point([w[0], w[1], w[2]]) {
            return Err(Error::invalid("body has no remaining support gap to refine"));
        }
        let child = (0..hull.faces().len())
            .filter(|&k| !before.contains(&hull.faces()[k]))
            .map(|k| face_gap(&hull, k).1)
            .fold(f64::NEG_INFINITY, f64::max);
        trace.split_gaps.push(gap);
        trace.child_gaps.push(child);
    }
    trace.polyhedron = hull_polyhedron(&hull)?;
    Ok(trace)
}

type HashSetFaces = std::collections::HashSet<[usize; 3]>;

fn hull_polyhedron(hull: &Hull3) -> Result<Polyhedron> {
    let (rows, offs) = hull.halfspaces();
    let verts = hull.points().iter().map(|p| p.to_vec()).collect();
    Polyhedron::new(rows, offs, verts)?.with_complete_vertices()
}

/// Inscribed box of an axis-aligned ellipsoid (a cube for balls): vertices
/// `c + v * s / sqrt(n)` for sign vectors `s`, facets `+-e_j`. Works in any
/// dimension with `2n` halfspaces. The `2^n` vertices are stored only while
/// `n <= MAX_STORED_CUBE_DIM`.
pub fn inscribe_cube(body: &ConvexBody) -> Result<Polyhedron> {
    let n = body.dim();
    let h: Vec<f64> = body.semiaxes().iter().map(|v| v / (n as f64).sqrt()).collect();
    let mut rows = Vec::with_capacity(2 * n);
    let mut offs = Vec::with_capacity(2 * n);
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut r = vec![0.0; n];
            r[j] = sign;
            rows.push(r);
            offs.push(sign * body.center()[j] + h[j]);
        }
    }
    let verts = if n <= MAX_STORED_CUBE_DIM {
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|j| body.center()[j] + if mask >> j & 1 == 1 { h[j] } else { -h[j] })
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    Polyhedron::new(rows, offs, verts)
}

pub const MAX_STORED_CUBE_DIM: usize = 12;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hausdorff_estimate;

    fn circle() -> ConvexBody {
        ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn unit_circle_square() {
        let sq = inscribe_regular(&circle(), 4).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (v, w) in sq.vertices().iter().zip(&want) {
            assert!(linalg::dist(v, w) < 1e-15);
        }
        assert!(sq.offsets().iter().all(|b| (b - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15));
    }

    #[test]
    fn octagon_vertices_on_ellipse() {
        let body = ConvexBody::ellipsoid(vec![0.0, 0.0], vec![4.0, 3.0]).unwrap();
        let oct = inscribe_regular(&body, 8).unwrap();
        assert_eq!(oct.facets(), 8);
        oct.check_inscribed(&body, true, 1e-12).unwrap();
    }

    #[test]
    fn too_few_vertices_rejected() {
        assert!(inscribe_regular(&circle(), 2).is_err());
        let ball3 = ConvexBody::ball(vec![0.0; 3], 1.0).unwrap();
        assert!(inscribe_regular(&ball3, 5).is_err());
    }

    #[test]
    fn hexagon_hausdorff_is_sagitta() {
        let hex = inscribe_regular(&circle(), 6).unwrap();
        let h = hausdorff_estimate(&circle(), &hex).unwrap();
        assert!((h.value - (1.0 - (std::f64::consts::PI / 6.0).cos())).abs() < 1e-9);
    }

    #[test]
    fn greedy_circle_splits_largest_edge() {
        let seed = default_seed(&circle()).unwrap();
        let tri_gap = 0.5;
        let tr = inscribe_greedy_traced(&circle(), 4, &seed).unwrap();
        assert!((tr.max_gaps[0] - tri_gap).abs() < 1e-12);
        assert!(tr.child_gaps[0] < tr.split_gaps[0]);
        assert!(tr.max_gaps[1] <= tr.max_gaps[0]);
        // the added vertex is antipodal to the vertex opposite the split edge
        let added = tr.polyhedron.vertices().iter().find(|v| seed.iter().all(|s| linalg::dist(s, v) > 1e-9)).unwrap();
        assert!((linalg::norm(added) - 1.0).abs() < 1e-12);
        let split_normal_dot = seed.iter().map(|s| linalg::dot(s, added)).fold(f64::INFINITY, f64::min);
        assert!((split_normal_dot + 1.0).abs() < 1e-12, "added vertex antipodal to a seed vertex");
    }

    #[test]
    fn greedy_beats_regular_on_ellipse() {
        let body = ConvexBody::ellipsoid(vec![0.0, 0.0], vec![4.0, 3.0]).unwrap();
        let greedy = inscribe_greedy(&body, 12, &default_seed(&body).unwrap()).unwrap();
        let regular = inscribe_regular(&body, 12).unwrap();
        let hg = hausdorff_estimate(&body, &greedy).unwrap().value;
        let hr = hausdorff_estimate(&body, &regular).unwrap().value;
        assert!(hg <= hr, "greedy {hg} regular {hr}");
    }

    #[test]
    fn greedy_sphere_from_tetrahedron() {
        let ball = ConvexBody::ball(vec![0.0; 3], 1.0).unwrap();
        let tr = inscribe_greedy_traced(&ball, 8, &default_seed(&ball).unwrap()).unwrap();
        let poly = &tr.polyhedron;
        assert_eq!(poly.vertices().len(), 8);
        poly.check_inscribed(&ball, true, 1e-12).unwrap();
        assert!(poly.is_bounded());
        for w in tr.max_gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        for (child, split) in tr.child_gaps.iter().zip(&tr.split_gaps) {
            assert!(child < split);
        }
    }

    #[test]
    fn degenerate_seed_rejected() {
        let c = circle();
        let seed = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]];
        assert!(inscribe_greedy(&c, 5, &seed).is_err());
        let off = vec![vec![0.5, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        assert!(inscribe_greedy(&c, 5, &off).is_err());
    }

    #[test]
    fn cube_in_ball_is_inscribed() {
        for n in [2, 4, 10] {
            let ball = ConvexBody::ball(vec![0.5; n], 5.0).unwrap();
            let cube = inscribe_cube(&ball).unwrap();
            assert_eq!(cube.facets(), 2 * n);
            cube.check_inscribed(&ball, true, 1e-12).unwrap();
        }
        let big = ConvexBody::ball(vec![0.0; 20], 5.0).unwrap();
        assert!(inscribe_cube(&big).unwrap().vertices().is_empty());
    }
}
