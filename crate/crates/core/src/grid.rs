//! Weighted graph Laplacians with Dirichlet nodes, solved by Jacobi
//! preconditioned conjugate gradients.

use rayon::prelude::*;

use crate::error::{Error, Result};

const PAR_THRESHOLD: usize = 1 << 14;

/// Resistor network: nodes joined by edges with nonnegative conductances.
#[derive(Debug, Clone)]
pub(crate) struct Network {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

/// Solution of a Dirichlet problem on a [`Network`].
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub values: Vec<f64>,
    pub iterations: usize,
}

struct Csr {
    start: Vec<usize>,
    col: Vec<usize>,
    w: Vec<f64>,
    diag: Vec<f64>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Network { n, edges: Vec::new() }
    }

    pub fn add_edge(&mut self, i: usize, j: usize, w: f64) {
        if w > 0.0 && i != j {
            self.edges.push((i, j, w));
        }
    }

    /// Dirichlet energy `Σ w (u_i - u_j)²`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.edges.iter().map(|&(i, j, w)| w * (u[i] - u[j]).powi(2)).sum()
    }

    /// Harmonic extension of the values in `fixed`, starting from `guess`.
    /// Nodes cut off from every fixed node keep their starting value.
    pub fn solve(&self, fixed: &[Option<f64>], guess: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<Solution> {
        assert_eq!(fixed.len(), self.n);
        // Index of each free node in the reduced system.
        let mut index = vec![usize::MAX; self.n];
        let mut free = Vec::new();
        for (k, f) in fixed.iter().enumerate() {
            if f.is_none() {
                index[k] = free.len();
                free.push(k);
            }
        }
        let m = free.len();
        let mut rhs = vec![0.0; m];
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut diag = vec![0.0; m];
        for &(i, j, w) in &self.edges {
            match (fixed[i], fixed[j]) {
                (None, None) => {
                    let (a, b) = (index[i], index[j]);
                    adj[a].push((b, w));
                    adj[b].push((a, w));
                    diag[a] += w;
                    diag[b] += w;
                }
                (None, Some(v)) => {
                    diag[index[i]] += w;
                    rhs[index[i]] += w * v;
                }
                (Some(v), None) => {
                    diag[index[j]] += w;
                    rhs[index[j]] += w * v;
                }
                (Some(_), Some(_)) => {}
            }
        }
        let mut start = Vec::with_capacity(m + 1);
        let mut col = Vec::new();
        let mut ws = Vec::new();
        start.push(0);
        for row in adj {
            for (c, w) in row {
                col.push(c);
                ws.push(w);
            }
            start.push(col.len());
        }
        let csr = Csr { start, col, w: ws, diag };
        let x0: Vec<f64> = match guess {
            Some(g) => free.iter().map(|&k| g[k]).collect(),
            None => vec![0.0; m],
        };
        let (x, iterations) = pcg(&csr, &rhs, x0, tol, max_iter)?;
        let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        for (k, &node) in free.iter().enumerate() {
            values[node] = x[k];
        }
        Ok(Solution { values, iterations })
    }
}

impl Csr {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let row = |r: usize| {
            let mut s = self.diag[r] * x[r];
            for k in self.start[r]..self.start[r + 1] {
                s -= self.w[k] * x[self.col[k]];
            }
            s
        };
        if out.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        } else {
            out.iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() >= PAR_THRESHOLD {
        // Fixed chunking keeps the summation order independent of the pool.
        a.par_chunks(4096)
            .zip(b.par_chunks(4096))
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .collect::<Vec<_>>()
            .iter()
            .sum()
    } else {
        a.iter().zip(b).map(|(p, q)| p * q).sum()
    }
}

fn pcg(a: &Csr, b: &[f64], mut x: Vec<f64>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let m = b.len();
    let inv: Vec<f64> = a.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
    let mut ap = vec![0.0; m];
    a.apply(&x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, ax)| b - ax).collect();
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    if dot(&r, &r).sqrt() / bnorm < tol {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, i)| r * i).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Singular("graph Laplacian"));
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
        let res = dot(&r, &r).sqrt() / bnorm;
        if res < tol {
            return Ok((x, it));
        }
        z.iter_mut().zip(r.iter().zip(&inv)).for_each(|(z, (r, i))| *z = r * i);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    let res = dot(&r, &r).sqrt() / bnorm;
    Err(Error::NoConvergence { what: "conjugate gradients", iterations: max_iter, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_interpolates_linearly() {
        let mut net = Network::new(5);
        for i in 0..4 {
            net.add_edge(i, i + 1, 1.0);
        }
        let mut fixed = vec![None; 5];
        fixed[0] = Some(0.0);
        fixed[4] = Some(1.0);
        let s = net.solve(&fixed, None, 1e-14, 100).unwrap();
        for (i, v) in s.values.iter().enumerate() {
            assert!((v - i as f64 / 4.0).abs() < 1e-12);
        }
        // Series resistance of four unit conductors.
        assert!((net.energy(&s.values) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn disconnected_nodes_are_zero() {
        let mut net = Network::new(4);
        net.add_edge(0, 1, 1.0);
        net.add_edge(2, 3, 1.0);
        let fixed = vec![Some(1.0), None, None, None];
        let s = net.solve(&fixed, None, 1e-12, 10).unwrap();
        assert_eq!(s.values, vec![1.0, 1.0, 0.0, 0.0]);
    }
}
