use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg;

/// Incremental 3D convex hull with outward-oriented triangular faces.
#[derive(Debug, Clone)]
pub struct Hull3 {
    points: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    interior: [f64; 3],
    eps: f64,
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

impl Hull3 {
    /// Starts from a nondegenerate tetrahedron.
    pub fn tetrahedron(pts: [[f64; 3]; 4]) -> Result<Self> {
        let scale = pts
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let e1 = sub3(&pts[1], &pts[0]);
        let e2 = sub3(&pts[2], &pts[0]);
        let e3 = sub3(&pts[3], &pts[0]);
        let vol = linalg::dot(&linalg::cross3(&e1, &e2), &e3) / 6.0;
        if vol.abs() <= 1e-12 * scale.powi(3) {
            return Err(Error::invalid("seed simplex is degenerate (affinely dependent)"));
        }
        let interior = [
            pts.iter().map(|p| p[0]).sum::<f64>() / 4.0,
            pts.iter().map(|p| p[1]).sum::<f64>() / 4.0,
            pts.iter().map(|p| p[2]).sum::<f64>() / 4.0,
        ];
        let mut hull = Self { points: pts.to_vec(), faces: Vec::new(), interior, eps: 1e-12 * scale };
        for f in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
            let oriented = hull.orient(f);
            hull.faces.push(oriented);
        }
        Ok(hull)
    }

    fn raw_normal(&self, f: [usize; 3]) -> [f64; 3] {
        let [a, b, c] = f.map(|i| self.points[i]);
        linalg::cross3(&sub3(&b, &a), &sub3(&c, &a))
    }

    fn orient(&self, f: [usize; 3]) -> [usize; 3] {
        let n = self.raw_normal(f);
        let a = self.points[f[0]];
        if linalg::dot(&n, &sub3(&self.interior, &a)) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Unit outward normal and offset of face `k`.
    pub fn plane(&self, k: usize) -> ([f64; 3], f64) {
        let f = self.faces[k];
        let n = self.raw_normal(f);
        let len = linalg::norm(&n);
        let u = [n[0] / len, n[1] / len, n[2] / len];
        let off = f.iter().map(|&i| linalg::dot(&u, &self.points[i])).fold(f64::NEG_INFINITY, f64::max);
        (u, off)
    }

    /// Adds `p`; returns `false` (and leaves the hull unchanged) if `p` is
    /// not strictly outside.
    pub fn add_point(&mut self, p: [f64; 3]) -> bool {
        let visible: Vec<bool> = (0..self.faces.len())
            .map(|k| {
                let (u, off) = self.plane(k);
                linalg::dot(&u, &p) - off > self.eps
            })
            .collect();
        if !visible.iter().any(|&v| v) {
            return false;
        }
        let mut visible_edges = HashSet::new();
        for (k, f) in self.faces.iter().enumerate() {
            if visible[k] {
                for e in 0..3 {
                    visible_edges.insert((f[e], f[(e + 1) % 3]));
                }
            }
        }
        let idx = self.points.len();
        self.points.push(p);
        let mut next = Vec::with_capacity(self.faces.len() + 4);
        let mut horizon = Vec::new();
        for (k, f) in self.faces.iter().enumerate() {
            if visible[k] {
                for e in 0..3 {
                    let (a, b) = (f[e], f[(e + 1) % 3]);
                    if !visible_edges.contains(&(b, a)) {
                        horizon.push((a, b));
                    }
                }
            } else {
                next.push(*f);
            }
        }
        next.extend(horizon.into_iter().map(|(a, b)| [a, b, idx]));
        self.faces = next;
        true
    }

    /// Facet halfspaces with coplanar duplicates merged.
    pub fn halfspaces(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut offs: Vec<f64> = Vec::new();
        for k in 0..self.faces.len() {
            let (u, off) = self.plane(k);
            let dup = rows
                .iter()
                .zip(&offs)
                .any(|(r, o)| linalg::dist(r, &u) <= 1e-9 && (o - off).abs() <= 1e-9);
            if !dup {
                rows.push(u.to_vec());
                offs.push(off);
            }
        }
        (rows, offs)
    }
}
