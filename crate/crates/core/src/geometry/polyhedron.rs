use std::fmt::Write as _;

use super::ConvexBody;
use crate::error::{Error, Result};
use crate::linalg::{self, fmt17};

const ROW_NORM_TOL: f64 = 1e-12;
const VERTEX_TOL: f64 = 1e-10;
/// Relative slack for deciding that a vertex lies on a facet.
const INCIDENCE_TOL: f64 = 1e-8;

/// A bounded polyhedron `{y : B y <= b}` with unit-norm rows in `B`, plus the
/// vertex list it was generated from (possibly empty for user-supplied
/// halfspace systems).
#[derive(Debug, Clone)]
pub struct Polyhedron {
    dim: usize,
    /// Row-major `p x dim`.
    normals: Vec<f64>,
    offsets: Vec<f64>,
    vertices: Vec<Vec<f64>>,
    incidence: Option<Incidence>,
}

/// Vertex-facet incidence, present only when the vertex list is known to
/// contain every vertex.
#[derive(Debug, Clone)]
struct Incidence {
    facet_vertices: Vec<Vec<usize>>,
    vertex_facets: Vec<Vec<usize>>,
}

impl PartialEq for Polyhedron {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.normals == other.normals
            && self.offsets == other.offsets
            && self.vertices == other.vertices
    }
}

impl Polyhedron {
    /// Builds and validates a polyhedron. Rows must already have unit norm.
    pub fn new(rows: Vec<Vec<f64>>, offsets: Vec<f64>, vertices: Vec<Vec<f64>>) -> Result<Self> {
        Error::check_dim(rows.len(), offsets.len())?;
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("polyhedron needs at least one halfspace"))?;
        if dim == 0 {
            return Err(Error::invalid("polyhedron dimension must be at least 1"));
        }
        let mut normals = Vec::with_capacity(rows.len() * dim);
        for (j, row) in rows.iter().enumerate() {
            Error::check_dim(dim, row.len())?;
            let n = linalg::norm(row);
            if (n - 1.0).abs() > ROW_NORM_TOL {
                return Err(Error::invalid(format!("row {j} has norm {n}, expected 1")));
            }
            normals.extend_from_slice(row);
        }
        if offsets.iter().chain(&normals).any(|v| !v.is_finite()) {
            return Err(Error::invalid("halfspace data must be finite"));
        }
        let poly = Self { dim, normals, offsets, vertices, incidence: None };
        for (k, v) in poly.vertices.iter().enumerate() {
            Error::check_dim(dim, v.len())?;
            let viol = poly.max_violation(v);
            if viol > VERTEX_TOL {
                return Err(Error::invalid(format!("vertex {k} violates a halfspace by {viol:e}")));
            }
        }
        if !poly.is_bounded() {
            return Err(Error::invalid("polyhedron is unbounded"));
        }
        Ok(poly)
    }

    /// Like [`Polyhedron::new`] but rescales each row (and its offset) to unit norm.
    pub fn from_unnormalized(rows: Vec<Vec<f64>>, offsets: Vec<f64>, vertices: Vec<Vec<f64>>) -> Result<Self> {
        Error::check_dim(rows.len(), offsets.len())?;
        let mut unit_rows = Vec::with_capacity(rows.len());
        let mut unit_offsets = Vec::with_capacity(rows.len());
        for (row, b) in rows.into_iter().zip(offsets) {
            let n = linalg::norm(&row);
            if !(n > 0.0) {
                return Err(Error::invalid("halfspace normal has zero norm"));
            }
            unit_rows.push(linalg::scale(&row, 1.0 / n));
            unit_offsets.push(b / n);
        }
        Self::new(unit_rows, unit_offsets, vertices)
    }

    /// Declares the stored vertex list complete and records which vertices
    /// lie on which facet. Projections can then certify an active-set
    /// candidate by checking only the facets around the active face.
    pub fn with_complete_vertices(mut self) -> Result<Self> {
        if self.vertices.is_empty() {
            return Err(Error::invalid("no vertices stored"));
        }
        let scale = 1.0 + self.offsets.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut facet_vertices = vec![Vec::new(); self.facets()];
        let mut vertex_facets = vec![Vec::new(); self.vertices.len()];
        for (k, v) in self.vertices.iter().enumerate() {
            for j in 0..self.facets() {
                if (linalg::dot(self.row(j), v) - self.offsets[j]).abs() <= INCIDENCE_TOL * scale {
                    facet_vertices[j].push(k);
                    vertex_facets[k].push(j);
                }
            }
        }
        if let Some(j) = facet_vertices.iter().position(|f| f.len() < self.dim) {
            return Err(Error::invalid(format!("facet {j} touches fewer than {} stored vertices", self.dim)));
        }
        self.incidence = Some(Incidence { facet_vertices, vertex_facets });
        Ok(self)
    }

    pub fn has_complete_vertices(&self) -> bool {
        self.incidence.is_some()
    }

    /// Facets containing at least one vertex of the face cut out by the
    /// `active` facets, written to `out` sorted and deduplicated. Returns
    /// `false` when incidence is unknown, `active` is empty, or the face has
    /// no vertex (so it is empty).
    pub(crate) fn facets_around_face(&self, active: &[usize], out: &mut Vec<usize>) -> bool {
        out.clear();
        let Some(inc) = &self.incidence else { return false };
        let Some((&first, rest)) = active.split_first() else { return false };
        for &v in &inc.facet_vertices[first] {
            let vf = &inc.vertex_facets[v];
            if rest.iter().all(|j| vf.contains(j)) {
                out.extend_from_slice(vf);
            }
        }
        out.sort_unstable();
        out.dedup();
        !out.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of halfspaces `p`.
    pub fn facets(&self) -> usize {
        self.offsets.len()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.normals[j * self.dim..(j + 1) * self.dim]
    }

    pub fn offset(&self, j: usize) -> f64 {
        self.offsets[j]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.normals.chunks_exact(self.dim)
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// `max_j (B_j y - b_j)`, positive when `y` is outside.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        self.rows()
            .zip(&self.offsets)
            .map(|(r, b)| linalg::dot(r, y) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.max_violation(y) <= tol
    }

    /// Support value from the vertex list; `None` when no vertices are stored.
    pub fn support_value(&self, u: &[f64]) -> Option<f64> {
        self.vertices
            .iter()
            .map(|v| linalg::dot(u, v))
            .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
    }

    /// Boundedness holds iff the recession cone `{d : B d <= 0}` is `{0}`,
    /// which is the case iff every `+-e_j` projects onto that cone at the origin.
    pub fn is_bounded(&self) -> bool {
        let cone = Polyhedron {
            dim: self.dim,
            normals: self.normals.clone(),
            offsets: vec![0.0; self.offsets.len()],
            vertices: Vec::new(),
            incidence: None,
        };
        for j in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; self.dim];
                e[j] = sign;
                match crate::polyproj::project_polyhedron_unchecked(&cone, &e, 1e-10, None) {
                    Ok(sol) if linalg::norm(&sol.point) <= 1e-8 => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Checks that every stored vertex lies in `body` (and, when
    /// `on_boundary`, on its boundary).
    pub fn check_inscribed(&self, body: &ConvexBody, on_boundary: bool, tol: f64) -> Result<()> {
        Error::check_dim(body.dim(), self.dim)?;
        for (k, v) in self.vertices.iter().enumerate() {
            let m = body.membership(v);
            if m > 1.0 + tol {
                return Err(Error::invalid(format!("vertex {k} lies outside the body (membership {m})")));
            }
            if on_boundary && (m - 1.0).abs() > tol {
                return Err(Error::invalid(format!("vertex {k} is not on the body boundary (membership {m})")));
            }
        }
        Ok(())
    }

    /// Plain-text matrix block: `p n`, then `p` rows of `B_j b_j`, then `s`,
    /// then `s` vertex rows. Values carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.facets(), self.dim);
        for (row, b) in self.rows().zip(&self.offsets) {
            let cells: Vec<String> = row.iter().chain(std::iter::once(b)).map(|v| fmt17(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        let _ = writeln!(out, "{}", self.vertices.len());
        for v in &self.vertices {
            let cells: Vec<String> = v.iter().map(|x| fmt17(*x)).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_row = |line: usize, l: &str, want: usize| -> Result<Vec<f64>> {
            let vals: std::result::Result<Vec<f64>, _> = l.split_whitespace().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            if vals.len() != want {
                return Err(Error::Parse { line, msg: format!("expected {want} values, found {}", vals.len()) });
            }
            Ok(vals)
        };
        let parse_counts = |line: usize, l: &str, want: usize| -> Result<Vec<usize>> {
            let vals: std::result::Result<Vec<usize>, _> = l.split_whitespace().map(str::parse::<usize>).collect();
            let vals = vals.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            if vals.len() != want {
                return Err(Error::Parse { line, msg: format!("expected {want} counts") });
            }
            Ok(vals)
        };
        let eof = || Error::Parse { line: text.lines().count() + 1, msg: "unexpected end of input".into() };

        let (ln, header) = lines.next().ok_or_else(eof)?;
        let pn = parse_counts(ln, header, 2)?;
        let (p, n) = (pn[0], pn[1]);
        let mut rows = Vec::with_capacity(p);
        let mut offsets = Vec::with_capacity(p);
        for _ in 0..p {
            let (ln, l) = lines.next().ok_or_else(eof)?;
            let mut vals = parse_row(ln, l, n + 1)?;
            offsets.push(vals.pop().unwrap_or_default());
            rows.push(vals);
        }
        let (ln, l) = lines.next().ok_or_else(eof)?;
        let s = parse_counts(ln, l, 1)?[0];
        let mut vertices = Vec::with_capacity(s);
        for _ in 0..s {
            let (ln, l) = lines.next().ok_or_else(eof)?;
            vertices.push(parse_row(ln, l, n)?);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse { line: ln, msg: "trailing content after vertex block".into() });
        }
        Self::new(rows, offsets, vertices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box(n: usize) -> Polyhedron {
        let mut rows = Vec::new();
        for j in 0..n {
            for s in [1.0, -1.0] {
                let mut r = vec![0.0; n];
                r[j] = s;
                rows.push(r);
            }
        }
        Polyhedron::new(rows, vec![1.0; 2 * n], Vec::new()).unwrap()
    }

    #[test]
    fn box_is_bounded_halfplane_is_not() {
        assert!(unit_box(3).is_bounded());
        let err = Polyhedron::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0], vec![]);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_non_unit_rows_and_outside_vertices() {
        assert!(Polyhedron::new(vec![vec![2.0, 0.0]], vec![1.0], vec![]).is_err());
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        assert!(Polyhedron::new(rows, vec![1.0; 4], vec![vec![1.5, 0.0]]).is_err());
    }

    #[test]
    fn from_unnormalized_rescales() {
        let rows = vec![vec![2.0, 0.0], vec![-3.0, 0.0], vec![0.0, 4.0], vec![0.0, -1.0]];
        let p = Polyhedron::from_unnormalized(rows, vec![2.0, 3.0, 4.0, 1.0], vec![]).unwrap();
        assert_eq!(p.offsets(), &[1.0, 1.0, 1.0, 1.0]);
        assert!(p.rows().all(|r| (linalg::norm(r) - 1.0).abs() < 1e-15));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "2 2\n1 0 1\n-1 0 abc\n0\n";
        match Polyhedron::from_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Polyhedron::from_text("1 2\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_faithful(
            theta0 in 0.0f64..std::f64::consts::TAU,
            m in 3usize..12,
            a in 0.5f64..10.0,
            b in 0.5f64..10.0,
        ) {
            let body = ConvexBody::ellipsoid(vec![0.3, -1.7], vec![a, b]).unwrap();
            let verts: Vec<Vec<f64>> = (0..m)
                .map(|k| body.boundary_point_2d(theta0 + std::f64::consts::TAU * k as f64 / m as f64))
                .collect();
            let mut rows = Vec::new();
            let mut offs = Vec::new();
            for k in 0..m {
                let (p, q) = (&verts[k], &verts[(k + 1) % m]);
                let nrm = [q[1] - p[1], p[0] - q[0]];
                let len = (nrm[0] * nrm[0] + nrm[1] * nrm[1]).sqrt();
                let nrm = vec![nrm[0] / len, nrm[1] / len];
                offs.push(linalg::dot(&nrm, p).max(linalg::dot(&nrm, q)));
                rows.push(nrm);
            }
            let poly = Polyhedron::new(rows, offs, verts).unwrap();
            let back = Polyhedron::from_text(&poly.to_text()).unwrap();
            prop_assert_eq!(back.facets(), poly.facets());
            for (x, y) in back.normals.iter().chain(&back.offsets).zip(poly.normals.iter().chain(&poly.offsets)) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            for (u, v) in back.vertices.iter().flatten().zip(poly.vertices.iter().flatten()) {
                prop_assert_eq!(u.to_bits(), v.to_bits());
            }
        }
    }
}
