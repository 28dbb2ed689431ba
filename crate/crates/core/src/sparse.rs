//! Complex compressed-sparse-row matrices, zero fill-in incomplete LU and
//! restarted GMRES with right preconditioning.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spin::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and every diagonal position is stored, even when zero.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return Err(Error::InvalidArgument(format!(
                "triplet ({i}, {j}) outside {n}x{n} matrix"
            )));
        }
        triplets.extend((0..n).map(|i| (i, i, C64::new(0.0, 0.0))));
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(
            self.n,
            (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()),
        )
    }

    /// `|A| |x|` elementwise, the scale of rounding errors in `A x`.
    pub fn abs_mul_vec(&self, x: &DVector<C64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n,
            (0..self.n).map(|i| self.row(i).map(|(j, v)| v.norm() * x[j].norm()).sum()),
        )
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    fn diagonal_positions(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                let range = self.row_ptr[i]..self.row_ptr[i + 1];
                range.start
                    + self.col_idx[range]
                        .binary_search(&i)
                        .expect("diagonal is always stored")
            })
            .collect()
    }
}

/// Approximate inverse applied inside the Krylov iteration.
pub trait Preconditioner {
    fn apply(&self, r: &DVector<C64>) -> DVector<C64>;
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &DVector<C64>) -> DVector<C64> {
        r.clone()
    }
}

/// Incomplete LU factorisation restricted to the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    factors: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut f = a.clone();
        let diag = f.diagonal_positions();
        let n = f.n;
        let mut position = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (f.row_ptr[i], f.row_ptr[i + 1]);
            for p in start..end {
                position[f.col_idx[p]] = p;
            }
            for p in start..diag[i] {
                let k = f.col_idx[p];
                let pivot = f.values[diag[k]];
                if pivot.norm() == 0.0 {
                    return Err(Error::Singular(format!(
                        "zero pivot in incomplete factorisation at row {k}"
                    )));
                }
                let lik = f.values[p] / pivot;
                f.values[p] = lik;
                for q in diag[k] + 1..f.row_ptr[k + 1] {
                    let target = position[f.col_idx[q]];
                    if target != usize::MAX {
                        let update = lik * f.values[q];
                        f.values[target] -= update;
                    }
                }
            }
            for p in start..end {
                position[f.col_idx[p]] = usize::MAX;
            }
            if f.values[diag[i]].norm() == 0.0 {
                return Err(Error::Singular(format!(
                    "zero pivot in incomplete factorisation at row {i}"
                )));
            }
        }
        Ok(Self { factors: f, diag })
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &DVector<C64>) -> DVector<C64> {
        let f = &self.factors;
        let mut y = r.clone();
        for i in 0..f.n {
            let mut s = y[i];
            for p in f.row_ptr[i]..self.diag[i] {
                s -= f.values[p] * y[f.col_idx[p]];
            }
            y[i] = s;
        }
        for i in (0..f.n).rev() {
            let mut s = y[i];
            for p in self.diag[i] + 1..f.row_ptr[i + 1] {
                s -= f.values[p] * y[f.col_idx[p]];
            }
            y[i] = s / f.values[self.diag[i]];
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Krylov subspace size between restarts.
    pub restart: usize,
    /// Budget of matrix-vector products.
    pub max_iterations: usize,
    /// Target relative residual `|b - Ax| / |b|`.
    pub tolerance: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 60,
            max_iterations: 2000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: DVector<C64>,
    pub iterations: usize,
    /// Relative residual recomputed from the returned solution.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Givens rotation `(c, s)` that zeroes `b` in `[a, b]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b.norm() == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let t = a.norm().hypot(b.norm());
    (a.norm() / t, (a / a.norm()) * b.conj() / t)
}

/// Restarted GMRES with right preconditioning.
pub fn gmres(
    a: &CsrMatrix,
    b: &DVector<C64>,
    x0: Option<DVector<C64>>,
    preconditioner: &dyn Preconditioner,
    options: &GmresOptions,
) -> GmresOutcome {
    let n = a.dim();
    let zero = C64::new(0.0, 0.0);
    let b_norm = b.norm();
    let mut x = x0.unwrap_or_else(|| DVector::zeros(n));
    if b_norm == 0.0 {
        return GmresOutcome {
            x: DVector::zeros(n),
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = options.restart.max(1);
    let mut iterations = 0;
    let mut r = b - a.mul_vec(&x);
    let mut beta = r.norm();
    while beta / b_norm > options.tolerance && iterations < options.max_iterations {
        let mut v: Vec<DVector<C64>> = vec![&r / C64::new(beta, 0.0)];
        let mut z: Vec<DVector<C64>> = Vec::with_capacity(m);
        let mut h = DMatrix::<C64>::zeros(m + 1, m);
        let mut cs = vec![0.0; m];
        let mut sn = vec![zero; m];
        let mut g = DVector::<C64>::zeros(m + 1);
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iterations < options.max_iterations {
            let zk = preconditioner.apply(&v[k]);
            let mut w = a.mul_vec(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = vi.dotc(&w);
                h[(i, k)] = hik;
                w.axpy(-hik, vi, C64::new(1.0, 0.0));
            }
            let w_norm = w.norm();
            h[(k + 1, k)] = C64::new(w_norm, 0.0);
            for i in 0..k {
                let (hi, hi1) = (h[(i, k)], h[(i + 1, k)]);
                h[(i, k)] = hi * cs[i] + sn[i] * hi1;
                h[(i + 1, k)] = -sn[i].conj() * hi + hi1 * cs[i];
            }
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            cs[k] = c;
            sn[k] = s;
            h[(k, k)] = h[(k, k)] * c + s * h[(k + 1, k)];
            h[(k + 1, k)] = zero;
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            iterations += 1;
            k += 1;
            let estimate = g[k].norm() / b_norm;
            if estimate <= options.tolerance || w_norm == 0.0 {
                break;
            }
            v.push(w / C64::new(w_norm, 0.0));
        }
        // back substitution on the k x k triangle
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[(i, j)] * y[j];
            }
            y[i] = s / h[(i, i)];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.axpy(*yi, zi, C64::new(1.0, 0.0));
        }
        let previous = beta;
        r = b - a.mul_vec(&x);
        beta = r.norm();
        if k < m && beta > 0.5 * previous {
            // the Arnoldi estimate converged but the true residual did not
            // follow: it has reached the rounding floor of `A x`
            break;
        }
    }
    GmresOutcome {
        relative_residual: beta / b_norm,
        converged: beta / b_norm <= options.tolerance,
        x,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, seed: u64) -> (CsrMatrix, DMatrix<C64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((
                i,
                i,
                C64::new(4.0 + rng.random::<f64>(), rng.random::<f64>()),
            ));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                triplets.push((
                    i,
                    j,
                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                ));
            }
        }
        let a = CsrMatrix::from_triplets(n, triplets).unwrap();
        let dense = a.to_dense();
        (a, dense)
    }

    #[test]
    fn triplets_are_summed_and_sorted() {
        let one = C64::new(1.0, 0.0);
        let a = CsrMatrix::from_triplets(3, vec![(0, 2, one), (0, 2, one), (2, 0, one)]).unwrap();
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.to_dense()[(0, 2)], C64::new(2.0, 0.0));
        assert!(CsrMatrix::from_triplets(2, vec![(2, 0, one)]).is_err());
    }

    #[test]
    fn ilu0_is_exact_for_tridiagonal() {
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(3.0, 0.5)));
            if i > 0 {
                t.push((i, i - 1, C64::new(-1.0, 0.2)));
                t.push((i - 1, i, C64::new(-0.7, 0.0)));
            }
        }
        let a = CsrMatrix::from_triplets(n, t).unwrap();
        let ilu = Ilu0::new(&a).unwrap();
        let b = DVector::from_fn(n, |i, _| C64::new(i as f64, 1.0));
        let x = ilu.apply(&b);
        assert!((a.mul_vec(&x) - &b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn gmres_matches_dense_solve() {
        let (a, dense) = random_system(200, 7);
        let b = DVector::from_fn(200, |i, _| C64::new((i as f64).sin(), 1.0));
        let exact = dense.lu().solve(&b).unwrap();
        for pre in [
            &IdentityPreconditioner as &dyn Preconditioner,
            &Ilu0::new(&a).unwrap(),
        ] {
            let out = gmres(
                &a,
                &b,
                None,
                pre,
                &GmresOptions {
                    restart: 20,
                    max_iterations: 500,
                    tolerance: 1e-12,
                },
            );
            assert!(out.converged);
            assert!((&out.x - &exact).norm() < 1e-9 * exact.norm());
        }
    }

    #[test]
    fn gmres_zero_rhs() {
        let (a, _) = random_system(10, 1);
        let out = gmres(
            &a,
            &DVector::zeros(10),
            None,
            &IdentityPreconditioner,
            &GmresOptions::default(),
        );
        assert!(out.converged && out.x.norm() == 0.0);
    }

    #[test]
    fn ilu0_zero_pivot_is_reported() {
        let one = C64::new(1.0, 0.0);
        let a = CsrMatrix::from_triplets(2, vec![(0, 1, one), (1, 0, one)]).unwrap();
        assert!(matches!(Ilu0::new(&a), Err(Error::Singular(_))));
    }
}
