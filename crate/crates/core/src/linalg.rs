//! Dense symmetric positive-definite solvers for Green kernel systems.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A symmetric operator with access to its entries.
pub trait SymOperator: Sync {
    fn dim(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> f64;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = 0.0;
            for (j, xj) in x.iter().enumerate().take(n) {
                s += self.entry(i, j) * xj;
            }
            *yi = s;
        });
    }
}

/// Leading `n x n` block of a row-major matrix with leading dimension `lda`.
pub struct DenseView<'a> {
    pub data: &'a [f64],
    pub lda: usize,
    pub n: usize,
}

impl SymOperator for DenseView<'_> {
    fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.lda + j]
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        y[..n].par_iter_mut().enumerate().for_each(|(i, yi)| {
            let row = &self.data[i * self.lda..i * self.lda + n];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        });
    }
}

/// Kernel matrix evaluated on the fly, for systems too large to store.
pub struct KernelOperator<F: Fn(usize, usize) -> f64 + Sync> {
    pub n: usize,
    pub kernel: F,
}

impl<F: Fn(usize, usize) -> f64 + Sync> SymOperator for KernelOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        (self.kernel)(i, j)
    }
}

/// In-place lower Cholesky factor of an `n x n` row-major matrix.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite (pivot {j} of {n} is {diag:e})"
            )));
        }
        let ljj = diag.sqrt();
        a[j * n + j] = ljj;
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &head[j * n..j * n + j];
        tail.par_chunks_mut(n).for_each(|row_i| {
            let mut s = row_i[j];
            for k in 0..j {
                s -= row_i[k] * row_j[k];
            }
            row_i[j] = s / ljj;
        });
    }
    Ok(())
}

/// Solve `L L^T x = b` in place.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `|b - A x|_2 / |b|_2`.
    pub rel_residual: f64,
    /// False when an iterative solve hit its iteration cap.
    pub converged: bool,
    pub direct: bool,
}

/// Direct solve by Cholesky factorisation of a copy of the operator.
pub fn solve_direct<A: SymOperator>(a: &A, b: &[f64]) -> Result<SolveOutcome> {
    let n = a.dim();
    let mut l = vec![0.0; n * n];
    l.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate().take(i + 1) {
            *v = a.entry(i, j);
        }
    });
    cholesky_in_place(&mut l, n)?;
    let mut x = b.to_vec();
    cholesky_solve(&l, n, &mut x);
    let rel_residual = residual(a, &x, b);
    Ok(SolveOutcome {
        x,
        iterations: 0,
        rel_residual,
        converged: true,
        direct: true,
    })
}

pub fn residual<A: SymOperator>(a: &A, x: &[f64], b: &[f64]) -> f64 {
    let n = a.dim();
    let mut ax = vec![0.0; n];
    a.apply(x, &mut ax);
    let rn: f64 = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bn == 0.0 {
        rn
    } else {
        rn / bn
    }
}

/// Block-Jacobi preconditioner: Cholesky factors of consecutive diagonal
/// blocks. Range sets listed in visiting order put spatial neighbours in the
/// same block, which captures most of the strong couplings.
pub struct BlockJacobi {
    blocks: Vec<(usize, usize, Vec<f64>)>,
}

impl BlockJacobi {
    pub fn new<A: SymOperator>(a: &A, block: usize) -> Result<Self> {
        let n = a.dim();
        let starts: Vec<usize> = (0..n).step_by(block.max(1)).collect();
        let blocks = starts
            .par_iter()
            .map(|&s| {
                let e = (s + block).min(n);
                let m = e - s;
                let mut f = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..=i {
                        f[i * m + j] = a.entry(s + i, s + j);
                    }
                }
                cholesky_in_place(&mut f, m)?;
                Ok((s, e, f))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockJacobi { blocks })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        // Blocks are disjoint; split z accordingly.
        let mut rest: &mut [f64] = z;
        let mut parts = Vec::with_capacity(self.blocks.len());
        let mut offset = 0;
        for (s, e, f) in &self.blocks {
            let (_, tail) = rest.split_at_mut(s - offset);
            let (mine, tail) = tail.split_at_mut(e - s);
            parts.push((mine, f, e - s));
            rest = tail;
            offset = *e;
        }
        parts
            .into_par_iter()
            .for_each(|(mine, f, m)| cholesky_solve(f, m, mine));
    }
}

/// Preconditioned conjugate gradients from `x = 0`.
pub fn solve_pcg<A: SymOperator>(
    a: &A,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    block: usize,
) -> Result<SolveOutcome> {
    let n = a.dim();
    let pre = BlockJacobi::new(a, block)?;
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok(SolveOutcome {
            x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
            direct: false,
        });
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        a.apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Numeric(format!(
                "conjugate gradients lost positive definiteness (p'Ap = {pap:e})"
            )));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        iterations += 1;
        let rn: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= tol * bn {
            converged = true;
            break;
        }
        pre.apply(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // Report the true residual, not the recursively updated one.
    let rel_residual = residual(a, &x, b);
    Ok(SolveOutcome {
        x,
        iterations,
        rel_residual,
        converged: converged && rel_residual <= 10.0 * tol,
        direct: false,
    })
}

/// Smallest eigenvalue of a small symmetric matrix by Jacobi rotations.
pub fn min_eigenvalue(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[i * n + j] * m[i * n + j];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel_matrix(n: usize) -> Vec<f64> {
        // exp(-|i - j| / 3) is positive definite.
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (-(i as f64 - j as f64).abs() / 3.0).exp();
            }
        }
        a
    }

    #[test]
    fn direct_and_cg_agree() {
        let n = 150;
        let a = kernel_matrix(n);
        let view = DenseView { data: &a, lda: n, n };
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        let d = solve_direct(&view, &b).unwrap();
        let c = solve_pcg(&view, &b, 1e-12, 1000, 16).unwrap();
        assert!(c.converged && d.rel_residual < 1e-13);
        for i in 0..n {
            assert!((d.x[i] - c.x[i]).abs() < 1e-9);
        }
        let op = KernelOperator {
            n,
            kernel: |i: usize, j: usize| (-(i as f64 - j as f64).abs() / 3.0).exp(),
        };
        let k = solve_pcg(&op, &b, 1e-12, 1000, 16).unwrap();
        assert_eq!(k.x, c.x);
    }

    #[test]
    fn leading_block_view() {
        let n = 20;
        let a = kernel_matrix(n);
        let small = kernel_matrix(8);
        let view = DenseView { data: &a, lda: n, n: 8 };
        let b = vec![1.0; 8];
        let x1 = solve_direct(&view, &b).unwrap().x;
        let x2 = solve_direct(&DenseView { data: &small, lda: 8, n: 8 }, &b).unwrap().x;
        assert_eq!(x1, x2);
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        let view = DenseView { data: &a, lda: 2, n: 2 };
        assert!(matches!(solve_direct(&view, &[1.0, 1.0]), Err(Error::Numeric(_))));
    }

    #[test]
    fn jacobi_eigenvalue() {
        let a = vec![2.0, 1.0, 1.0, 2.0];
        assert!((min_eigenvalue(&a, 2) - 1.0).abs() < 1e-12);
    }
}
