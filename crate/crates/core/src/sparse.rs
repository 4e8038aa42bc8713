//! Compressed sparse row storage with a fixed element-driven pattern, and a
//! Jacobi-preconditioned conjugate gradient.
//!
//! Reductions are split into fixed-size blocks that are summed in order, so
//! results do not depend on how rayon schedules the blocks.

use rayon::prelude::*;

use crate::error::{Error, Result};

const BLOCK: usize = 4096;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

/// Sparsity pattern for square element matrices of size `K`, plus the
/// position of every element-matrix entry in the value array.
#[derive(Debug, Clone)]
pub struct AssemblyPattern<const K: usize> {
    matrix: CsrMatrix,
    slots: Vec<[[usize; K]; K]>,
}

impl<const K: usize> AssemblyPattern<K> {
    pub fn new(n: usize, element_dofs: &[[usize; K]]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in element_dofs {
            for &r in dofs {
                rows[r].extend_from_slice(dofs);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let find = |r: usize, c: usize| {
            let span = &cols[row_ptr[r]..row_ptr[r + 1]];
            row_ptr[r] + span.binary_search(&c).expect("entry in pattern")
        };
        let slots = element_dofs
            .iter()
            .map(|dofs| {
                let mut s = [[0usize; K]; K];
                for a in 0..K {
                    for b in 0..K {
                        s[a][b] = find(dofs[a], dofs[b]);
                    }
                }
                s
            })
            .collect();
        let nnz = cols.len();
        Self {
            matrix: CsrMatrix {
                n,
                row_ptr,
                cols,
                values: vec![0.0; nnz],
            },
            slots,
        }
    }

    /// Sums element matrices into a fresh matrix, in element order.
    pub fn assemble(&self, element_matrix: impl Fn(usize) -> [[f64; K]; K]) -> CsrMatrix {
        let mut m = self.matrix.clone();
        for (e, slot) in self.slots.iter().enumerate() {
            let ke = element_matrix(e);
            for a in 0..K {
                for b in 0..K {
                    m.values[slot[a][b]] += ke[a][b];
                }
            }
        }
        m
    }
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match span.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// Largest `|K_rc - K_cr|` over the stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
            let start = b * BLOCK;
            for (k, out) in chunk.iter_mut().enumerate() {
                let r = start + k;
                let mut s = 0.0;
                for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                    s += self.values[idx] * x[self.cols[idx]];
                }
                *out = s;
            }
        });
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        dot(x, &y)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖` at exit.
    pub relative_residual: f64,
}

/// Preconditioned CG for a symmetric positive semi-definite `a`.
///
/// `project` maps a vector onto the complement of the kernel; it is applied to
/// the right-hand side, the initial guess, every residual and every
/// preconditioned residual. `x` holds the initial guess on entry.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    project: &dyn Fn(&mut [f64]),
) -> Result<CgOutcome> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut rhs = b.to_vec();
    project(&mut rhs);
    let bnorm = norm(&rhs);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    project(x);

    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    r.iter_mut().zip(&rhs).for_each(|(ri, bi)| *ri = bi - *ri);
    project(&mut r);

    let mut rel = norm(&r) / bnorm;
    if rel <= tol {
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: rel,
        });
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        project(&mut r);

        rel = norm(&r) / bnorm;
        if rel <= tol {
            project(x);
            return Ok(CgOutcome {
                iterations: it,
                relative_residual: rel,
            });
        }

        z.iter_mut()
            .zip(r.iter().zip(&inv_diag))
            .for_each(|(zi, (ri, d))| *zi = ri * d);
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }

    Err(Error::SolverFailure {
        iterations: max_iter,
        residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d_periodic(n: usize) -> CsrMatrix {
        let elems: Vec<[usize; 2]> = (0..n).map(|i| [i, (i + 1) % n]).collect();
        let pattern = AssemblyPattern::new(n, &elems);
        pattern.assemble(|_| [[1.0, -1.0], [-1.0, 1.0]])
    }

    fn remove_mean(v: &mut [f64]) {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= m);
    }

    #[test]
    fn pattern_merges_duplicates() {
        let a = laplacian_1d_periodic(5);
        assert_eq!(a.nnz(), 15);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(0, 4), -1.0);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.max_asymmetry(), 0.0);
    }

    #[test]
    fn singular_periodic_system() {
        let n = 40;
        let a = laplacian_1d_periodic(n);
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        remove_mean(&mut b);
        let mut x = vec![0.0; n];
        let out = pcg(&a, &b, &mut x, 1e-12, 1000, &remove_mean).unwrap();
        assert!(out.relative_residual <= 1e-12);
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian_1d_periodic(8);
        let mut x = vec![1.0; 8];
        let out = pcg(&a, &[0.0; 8], &mut x, 1e-10, 10, &remove_mean).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let n = 200;
        let a = laplacian_1d_periodic(n);
        let mut b: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64).collect();
        remove_mean(&mut b);
        let mut x = vec![0.0; n];
        let err = pcg(&a, &b, &mut x, 1e-14, 3, &remove_mean).unwrap_err();
        assert!(matches!(err, Error::SolverFailure { iterations: 3, .. }));
    }
}
