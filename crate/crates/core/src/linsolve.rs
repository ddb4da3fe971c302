//! Sparse matrices in compressed row storage and the linear solve contract.
//!
//! Direct solves go through `faer`'s sparse LU with partial pivoting; very
//! large systems fall back to restarted GMRES with an ILU(0) preconditioner.

use std::fmt::Write as _;

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet as FaerTriplet};
use faer::Col;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("triplet ({row}, {col}) outside a {n}×{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("solver stopped at relative residual {achieved:e} (target {target:e})")]
    DidNotConverge { achieved: f64, target: f64 },
    #[error("dimension mismatch: matrix {matrix}, vector {vector}")]
    DimensionMismatch { matrix: usize, vector: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet<T> {
    pub row: usize,
    pub col: usize,
    pub value: T,
}

impl<T> Triplet<T> {
    pub fn new(row: usize, col: usize, value: T) -> Self {
        Self { row, col, value }
    }
}

/// Square CSR matrix with sorted, duplicate-free columns per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    pub n: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<T>,
}

/// Sums duplicates and drops entries below 1e-300 in magnitude. Duplicates
/// are summed in a canonical order, so the result does not depend on the
/// order of the input.
pub fn to_compressed<T: Real>(mut triplets: Vec<Triplet<T>>, n: usize) -> Result<SparseMatrix<T>, SolveError> {
    if let Some(t) = triplets.iter().find(|t| t.row >= n || t.col >= n) {
        return Err(SolveError::IndexOutOfRange { row: t.row, col: t.col, n });
    }
    triplets.sort_unstable_by(|a, b| {
        (a.row, a.col).cmp(&(b.row, b.col)).then_with(|| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
    });
    let prune = T::lit(1e-300).max(T::min_positive_value());
    let mut row_offsets = vec![0usize; n + 1];
    let mut col_indices = Vec::with_capacity(triplets.len() / 2);
    let mut values = Vec::with_capacity(triplets.len() / 2);
    let mut i = 0;
    while i < triplets.len() {
        let (r, c) = (triplets[i].row, triplets[i].col);
        let mut sum = T::zero();
        while i < triplets.len() && triplets[i].row == r && triplets[i].col == c {
            sum += triplets[i].value;
            i += 1;
        }
        if sum.abs() >= prune {
            col_indices.push(c);
            values.push(sum);
            row_offsets[r + 1] += 1;
        }
    }
    for r in 0..n {
        row_offsets[r + 1] += row_offsets[r];
    }
    Ok(SparseMatrix { n, row_offsets, col_indices, values })
}

impl<T: Real> SparseMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[r.clone()].binary_search(&j) {
            Ok(pos) => self.values[r.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n).map(|i| self.row(i).fold(T::zero(), |s, (j, v)| s + v * x[j])).collect()
    }

    /// ‖Ax − b‖₂ / ‖b‖₂ (absolute when b = 0).
    pub fn relative_residual(&self, x: &[T], b: &[T]) -> T {
        let ax = self.matvec(x);
        let r = ax.iter().zip(b).fold(T::zero(), |s, (a, c)| s + (*a - *c) * (*a - *c)).sqrt();
        let nb = norm2(b);
        if nb > T::zero() {
            r / nb
        } else {
            r
        }
    }

    /// Coordinate dump, one `i j value` line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let _ = writeln!(s, "{i} {j} {v:e}");
            }
        }
        s
    }
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, x| s + *x * *x).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    SparseLu,
    Gmres,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Target ‖Ax − b‖ / ‖b‖.
    pub tol: T,
    /// GMRES iteration budget (or refinement steps for the direct path).
    pub max_work: usize,
    /// Largest dimension handled by the direct solver.
    pub direct_limit: usize,
    pub restart: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-12), max_work: 5000, direct_limit: 300_000, restart: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub x: Vec<T>,
    pub relative_residual: T,
    pub kind: SolverKind,
    pub iterations: usize,
}

/// A factored matrix that can be reused for several right-hand sides.
pub struct Factorization<T: Real> {
    matrix: SparseMatrix<T>,
    lu: faer::sparse::linalg::solvers::Lu<usize, T>,
}

impl<T: Real> Factorization<T> {
    pub fn new(a: &SparseMatrix<T>) -> Result<Self, SolveError> {
        let entries: Vec<FaerTriplet<usize, usize, T>> = (0..a.n)
            .flat_map(|i| a.row(i).map(move |(j, v)| FaerTriplet::new(i, j, v)))
            .collect();
        let csc = SparseColMat::<usize, T>::try_new_from_triplets(a.n, a.n, &entries)
            .map_err(|_| SolveError::SingularMatrix)?;
        let lu = csc.sp_lu().map_err(|_| SolveError::SingularMatrix)?;
        Ok(Self { matrix: a.clone(), lu })
    }

    fn apply(&self, b: &[T]) -> Vec<T> {
        let rhs = Col::<T>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }

    /// LU solve followed by up to `refinement_steps` rounds of iterative refinement.
    pub fn solve(&self, b: &[T], tol: T, refinement_steps: usize) -> Result<Solution<T>, SolveError> {
        if b.len() != self.matrix.n {
            return Err(SolveError::DimensionMismatch { matrix: self.matrix.n, vector: b.len() });
        }
        let mut x = self.apply(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::SingularMatrix);
        }
        let mut res = self.matrix.relative_residual(&x, b);
        let mut steps = 0;
        while res > tol && steps < refinement_steps {
            let ax = self.matrix.matvec(&x);
            let r: Vec<T> = b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect();
            let dx = self.apply(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += *di;
            }
            res = self.matrix.relative_residual(&x, b);
            steps += 1;
        }
        if !(res <= tol) {
            return Err(SolveError::DidNotConverge { achieved: res.to_f64_lossy(), target: tol.to_f64_lossy() });
        }
        Ok(Solution { x, relative_residual: res, kind: SolverKind::SparseLu, iterations: steps })
    }
}

/// Solves `A x = b` to the requested relative residual.
pub fn solve<T: Real>(a: &SparseMatrix<T>, b: &[T], opts: &SolveOptions<T>) -> Result<Solution<T>, SolveError> {
    if b.len() != a.n {
        return Err(SolveError::DimensionMismatch { matrix: a.n, vector: b.len() });
    }
    if a.n <= opts.direct_limit {
        Factorization::new(a)?.solve(b, opts.tol, opts.max_work.min(5))
    } else {
        gmres_ilu0(a, b, opts)
    }
}

/// ILU(0) factors stored on the sparsity pattern of A.
struct Ilu0<T> {
    values: Vec<T>,
    diag: Vec<usize>,
}

impl<T: Real> Ilu0<T> {
    fn new(a: &SparseMatrix<T>) -> Result<Self, SolveError> {
        let n = a.n;
        let mut values = a.values.clone();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in a.row_offsets[i]..a.row_offsets[i + 1] {
                if a.col_indices[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(SolveError::SingularMatrix);
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let row = a.row_offsets[i]..a.row_offsets[i + 1];
            for p in row.clone() {
                pos[a.col_indices[p]] = p;
            }
            for p in row.clone() {
                let k = a.col_indices[p];
                if k >= i {
                    break;
                }
                let pivot = values[diag[k]];
                if pivot == T::zero() {
                    return Err(SolveError::SingularMatrix);
                }
                let f = values[p] / pivot;
                values[p] = f;
                for q in diag[k] + 1..a.row_offsets[k + 1] {
                    let j = a.col_indices[q];
                    if pos[j] != usize::MAX {
                        let u = values[q];
                        values[pos[j]] -= f * u;
                    }
                }
            }
            for p in row {
                pos[a.col_indices[p]] = usize::MAX;
            }
            if values[diag[i]] == T::zero() {
                return Err(SolveError::SingularMatrix);
            }
        }
        Ok(Self { values, diag })
    }

    fn apply(&self, a: &SparseMatrix<T>, r: &[T]) -> Vec<T> {
        let n = a.n;
        let mut y = r.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for p in a.row_offsets[i]..self.diag[i] {
                s -= self.values[p] * y[a.col_indices[p]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in self.diag[i] + 1..a.row_offsets[i + 1] {
                s -= self.values[p] * y[a.col_indices[p]];
            }
            y[i] = s / self.values[self.diag[i]];
        }
        y
    }
}

/// Right-preconditioned restarted GMRES.
pub fn gmres_ilu0<T: Real>(a: &SparseMatrix<T>, b: &[T], opts: &SolveOptions<T>) -> Result<Solution<T>, SolveError> {
    let n = a.n;
    let ilu = Ilu0::new(a)?;
    let bnorm = norm2(b);
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return Ok(Solution { x, relative_residual: T::zero(), kind: SolverKind::Gmres, iterations: 0 });
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    while total < opts.max_work {
        let ax = a.matvec(&x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect();
        let beta = norm2(&r);
        if beta / bnorm <= opts.tol {
            break;
        }
        let mut basis: Vec<Vec<T>> = vec![r.iter().map(|v| *v / beta).collect()];
        let mut hess = vec![vec![T::zero(); m]; m + 1];
        let (mut cs, mut sn) = (vec![T::zero(); m], vec![T::zero(); m]);
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut steps = 0;
        for j in 0..m {
            let z = ilu.apply(a, &basis[j]);
            let mut w = a.matvec(&z);
            for (i, v) in basis.iter().enumerate() {
                let hij = w.iter().zip(v).fold(T::zero(), |s, (a, b)| s + *a * *b);
                hess[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * *vk;
                }
            }
            let hn = norm2(&w);
            hess[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let d = hess[j][j].hypot(hess[j + 1][j]);
            cs[j] = hess[j][j] / d;
            sn[j] = hess[j + 1][j] / d;
            hess[j][j] = d;
            hess[j + 1][j] = T::zero();
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            steps = j + 1;
            total += 1;
            if g[j + 1].abs() / bnorm <= opts.tol * T::lit(0.5) || hn == T::zero() || total >= opts.max_work {
                break;
            }
            basis.push(w.iter().map(|v| *v / hn).collect());
        }
        let mut y = vec![T::zero(); steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in i + 1..steps {
                s -= hess[i][k] * y[k];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![T::zero(); n];
        for (yi, v) in y.iter().zip(&basis) {
            for (u, vk) in update.iter_mut().zip(v) {
                *u += *yi * *vk;
            }
        }
        let dz = ilu.apply(a, &update);
        for (xi, d) in x.iter_mut().zip(&dz) {
            *xi += *d;
        }
    }
    let res = a.relative_residual(&x, b);
    if !(res <= opts.tol) {
        return Err(SolveError::DidNotConverge { achieved: res.to_f64_lossy(), target: opts.tol.to_f64_lossy() });
    }
    Ok(Solution { x, relative_residual: res, kind: SolverKind::Gmres, iterations: total })
}
