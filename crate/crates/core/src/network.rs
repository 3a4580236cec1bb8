//! Communication digraphs, Laplacian spectra and the step-size gate.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::GameConstants;

/// Eigenvalues at or below this are treated as the structural zero.
pub const ZERO_EIGEN_THRESHOLD: f64 = 1e-9;
const JACOBI_TOL: f64 = 1e-12;
const MAX_JACOBI_SWEEPS: usize = 100;
const ER_MAX_RESAMPLES: usize = 100_000;

/// Weighted digraph on `N` nodes. `a_ij > 0` iff node `i` receives from `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    n: usize,
    weights: Vec<f64>,
}

impl Digraph {
    /// Row-major `N x N` adjacency matrix with zero diagonal and nonnegative entries.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("a graph needs at least 2 nodes"));
        }
        Error::check_dim(n * n, weights.len())?;
        for i in 0..n {
            for j in 0..n {
                let w = weights[i * n + j];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!("weight a[{i}][{j}] = {w} must be finite and nonnegative")));
                }
                if i == j && w != 0.0 {
                    return Err(Error::invalid(format!("diagonal weight a[{i}][{i}] must be zero")));
                }
            }
        }
        Ok(Self { n, weights })
    }

    /// Directed cycle `1 -> 2 -> ... -> N -> 1` with unit weights.
    pub fn ring(n: usize) -> Result<Self> {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + (i + n - 1) % n] = 1.0;
        }
        Self::from_weights(n, w)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut w = vec![1.0; n * n];
        for i in 0..n {
            w[i * n + i] = 0.0;
        }
        Self::from_weights(n, w)
    }

    /// Undirected Erdos-Renyi graph, resampled until connected.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid(format!("edge probability {p} must lie in (0, 1]")));
        }
        if n < 2 {
            return Err(Error::invalid("a graph needs at least 2 nodes"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..ER_MAX_RESAMPLES {
            let mut w = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < p {
                        w[i * n + j] = 1.0;
                        w[j * n + i] = 1.0;
                    }
                }
            }
            let g = Self::from_weights(n, w)?;
            if g.is_strongly_connected() {
                return Ok(g);
            }
        }
        Err(Error::Disconnected)
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// In-neighbours `j` of `i` with their weights.
    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights[i * self.n..(i + 1) * self.n].iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(j, w)| (j, *w))
    }

    pub fn in_degree(&self, i: usize) -> f64 {
        self.weights[i * self.n..(i + 1) * self.n].iter().sum()
    }

    pub fn out_degree(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.weight(i, j)).sum()
    }

    /// `L = D - A` with `D` the in-degree diagonal, row-major.
    pub fn laplacian(&self) -> Vec<f64> {
        let n = self.n;
        let mut l: Vec<f64> = self.weights.iter().map(|w| -w).collect();
        for i in 0..n {
            // Sum the off-diagonal entries directly so L 1 = 0 holds exactly.
            let row = &l[i * n..(i + 1) * n];
            let s: f64 = row.iter().sum();
            l[i * n + i] = -s;
        }
        l
    }

    pub fn is_weight_balanced(&self) -> bool {
        (0..self.n).all(|i| (self.in_degree(i) - self.out_degree(i)).abs() <= 1e-12)
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, reversed: bool) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..self.n {
                // Edge u -> v exists when a_vu > 0.
                let w = if reversed { self.weight(u, v) } else { self.weight(v, u) };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Eigenvalues of `(L + L^T) / 2` in ascending order.
    pub fn symmetric_laplacian_spectrum(&self) -> Vec<f64> {
        let n = self.n;
        let l = self.laplacian();
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = 0.5 * (l[i * n + j] + l[j * n + i]);
            }
        }
        let mut ev = jacobi_eigenvalues(s, n);
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Smallest eigenvalue of `(L + L^T) / 2` above the zero threshold.
    /// More than one eigenvalue at zero means more than one component.
    pub fn lambda_min_positive(&self) -> Result<f64> {
        let spectrum = self.symmetric_laplacian_spectrum();
        if spectrum.iter().filter(|v| **v <= ZERO_EIGEN_THRESHOLD).count() > 1 {
            return Err(Error::Disconnected);
        }
        spectrum.into_iter().find(|v| *v > ZERO_EIGEN_THRESHOLD).ok_or(Error::Disconnected)
    }
}

/// Cyclic Jacobi rotations on a symmetric row-major matrix.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..MAX_JACOBI_SWEEPS {
        if off(&a) <= JACOBI_TOL {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Evaluation of the step-size conditions on `(beta1, beta2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainCertificate {
    pub beta1: f64,
    pub beta2: f64,
    pub kappa: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c: f64,
    pub lambda: f64,
    pub beta1_upper: f64,
    pub beta2_lower: f64,
    pub beta1_ok: bool,
    pub beta2_ok: bool,
}

impl GainCertificate {
    pub fn ok(&self) -> bool {
        self.beta1_ok && self.beta2_ok
    }

    pub fn to_text(&self) -> String {
        format!(
            "beta1 = {}\nbeta2 = {}\nkappa = {}\nc1 = {}\nc2 = {}\nc3 = {}\nc = {}\nlambda = {}\nbeta1_upper = {}\nbeta2_lower = {}\nbeta1_ok = {}\nbeta2_ok = {}\n",
            self.beta1, self.beta2, self.kappa, self.c1, self.c2, self.c3, self.c, self.lambda,
            self.beta1_upper, self.beta2_lower, self.beta1_ok, self.beta2_ok
        )
    }
}

/// `0 < beta1 < 2 kappa / c^2` and
/// `beta2 > 2 c2 c3 (2 + beta1 kappa + 2 beta1 c) / (lambda (2 kappa - beta1 c^2))`.
pub fn gain_gate(graph: &Digraph, k: GameConstants, beta1: f64, beta2: f64) -> Result<GainCertificate> {
    for (name, v) in [("kappa", k.kappa), ("c1", k.c1), ("c2", k.c2), ("c3", k.c3)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} = {v} must be positive")));
        }
    }
    let lambda = graph.lambda_min_positive()?;
    Ok(gain_gate_with_lambda(lambda, k, beta1, beta2))
}

pub fn gain_gate_with_lambda(lambda: f64, k: GameConstants, beta1: f64, beta2: f64) -> GainCertificate {
    let c = k.c1 + k.c2 * k.c3;
    let beta1_upper = 2.0 * k.kappa / (c * c);
    let denom = lambda * (2.0 * k.kappa - beta1 * c * c);
    let beta2_lower = if denom > 0.0 {
        2.0 * k.c2 * k.c3 * (2.0 + beta1 * k.kappa + 2.0 * beta1 * c) / denom
    } else {
        f64::INFINITY
    };
    GainCertificate {
        beta1,
        beta2,
        kappa: k.kappa,
        c1: k.c1,
        c2: k.c2,
        c3: k.c3,
        c,
        lambda,
        beta1_upper,
        beta2_lower,
        beta1_ok: beta1 > 0.0 && beta1 < beta1_upper,
        beta2_ok: denom > 0.0 && beta2 > beta2_lower,
    }
}
