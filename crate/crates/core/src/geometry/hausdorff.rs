use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ConvexBody, Polyhedron};
use crate::error::{Error, Result};
use crate::linalg;

/// Estimated Hausdorff distance between a body and an inscribed polyhedron,
/// computed as `max_u [g_body(u) - g_poly(u)]` over sampled unit directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HausdorffEstimate {
    pub value: f64,
    /// Number of sampled directions on the grid.
    pub resolution: usize,
    pub refined: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct HausdorffOptions {
    pub directions_2d: usize,
    pub directions_3d: usize,
    pub directions_nd: usize,
    pub refine: bool,
    pub seed: u64,
}

impl Default for HausdorffOptions {
    fn default() -> Self {
        Self { directions_2d: 4096, directions_3d: 20480, directions_nd: 20480, refine: true, seed: 0 }
    }
}

pub fn hausdorff_estimate(body: &ConvexBody, poly: &Polyhedron) -> Result<HausdorffEstimate> {
    hausdorff_estimate_with(body, poly, &HausdorffOptions::default())
}

pub fn hausdorff_estimate_with(body: &ConvexBody, poly: &Polyhedron, opts: &HausdorffOptions) -> Result<HausdorffEstimate> {
    Error::check_dim(body.dim(), poly.dim())?;
    if poly.vertices().is_empty() {
        return Err(Error::invalid("Hausdorff estimate needs the polyhedron's vertex list"));
    }
    poly.check_inscribed(body, false, 1e-9)
        .map_err(|e| Error::invalid(format!("not an inscribed polyhedron: {e}")))?;
    let gap = |u: &[f64]| body.support_value(u) - poly.support_value(u).unwrap_or(f64::NEG_INFINITY);
    let normals: Vec<Vec<f64>> = poly.rows().map(<[f64]>::to_vec).collect();

    let (value, resolution, refined) = match body.dim() {
        1 => (gap(&[1.0]).max(gap(&[-1.0])), 2, false),
        2 => {
            let k = opts.directions_2d.max(8);
            let mut best = (f64::NEG_INFINITY, 0.0);
            let angles = (0..k)
                .map(|i| TAU * i as f64 / k as f64)
                .chain(normals.iter().map(|u| u[1].atan2(u[0])));
            for t in angles {
                let g = gap(&[t.cos(), t.sin()]);
                if g > best.0 {
                    best = (g, t);
                }
            }
            if opts.refine {
                let half = TAU / k as f64;
                let f = |t: f64| gap(&[t.cos(), t.sin()]);
                let (t, g) = golden_max(f, best.1 - half, best.1 + half, 100);
                if g > best.0 {
                    best = (g, t);
                }
            }
            (best.0, k, opts.refine)
        }
        3 => {
            let k = opts.directions_3d.max(16);
            let mut best = (f64::NEG_INFINITY, [0.0, 0.0, 1.0]);
            for u in fibonacci_sphere(k).into_iter().chain(normals.iter().map(|u| [u[0], u[1], u[2]])) {
                let g = gap(&u);
                if g > best.0 {
                    best = (g, u);
                }
            }
            if opts.refine {
                best = refine_sphere(&gap, best, (4.0 * PI / k as f64).sqrt());
            }
            (best.0, k, opts.refine)
        }
        n => {
            let k = opts.directions_nd.max(2 * n);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut best = f64::NEG_INFINITY;
            for j in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[j] = s;
                    best = best.max(gap(&e));
                }
            }
            for u in &normals {
                best = best.max(gap(u));
            }
            for _ in 0..k {
                let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                if let Some(u) = linalg::normalize(&v) {
                    best = best.max(gap(&u));
                }
            }
            (best, k, false)
        }
    };
    Ok(HausdorffEstimate { value: value.max(0.0), resolution, refined })
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn fibonacci_sphere(k: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Alternating golden-section searches along two tangent great circles
/// through the current best direction, with a shrinking window.
fn refine_sphere(gap: &impl Fn(&[f64]) -> f64, mut best: (f64, [f64; 3]), mut radius: f64) -> (f64, [f64; 3]) {
    for _ in 0..6 {
        let u = best.1;
        let helper = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let t1 = linalg::normalize(&linalg::cross3(&u, &helper)).expect("nonzero tangent");
        let t2 = linalg::cross3(&u, &t1);
        for t in [t1.as_slice(), t2.as_slice()] {
            let at = |a: f64| -> [f64; 3] {
                let (s, c) = a.sin_cos();
                [c * u[0] + s * t[0], c * u[1] + s * t[1], c * u[2] + s * t[2]]
            };
            let (a, g) = golden_max(|a| gap(&at(a)), -radius, radius, 60);
            if g > best.0 {
                best = (g, at(a));
            }
        }
        radius *= 0.5;
    }
    best
}
