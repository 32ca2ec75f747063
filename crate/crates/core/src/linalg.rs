//! Small dense linear algebra kernel: vectors as `&[f64]` slices, a row-major
//! [`Matrix`], LU and minimum-norm solves, power iteration for spectral norms,
//! and a Jacobi eigensolver for symmetric matrices.
//!
//! Everything here targets desk-scale dimensions (d ≲ a few hundred), where
//! direct dense methods are exact and cheap.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

/// `a - s * b`, the workhorse of every dual-space update.
pub fn sub_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

// ---------------------------------------------------------------------------
// dense matrices
// ---------------------------------------------------------------------------

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A x` for `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = dot(row, x);
        }
        out
    }

    /// `Aᵀ x` for `x` of length `rows`, without forming the transpose.
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..self.cols {
                out[j] += row[j] * x[i];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Assemble the block matrix `[P A; Aᵀ -Q]`.
    pub fn saddle_block(p: &Matrix, q: &Matrix, a: &Matrix) -> Matrix {
        let m = p.rows();
        let n = q.rows();
        assert_eq!(a.rows(), m);
        assert_eq!(a.cols(), n);
        let mut out = Matrix::zeros(m + n, m + n);
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] = p[(i, j)];
            }
            for j in 0..n {
                out[(i, m + j)] = a[(i, j)];
            }
        }
        for i in 0..n {
            for j in 0..m {
                out[(m + i, j)] = a[(j, i)];
            }
            for j in 0..n {
                out[(m + i, m + j)] = -q[(i, j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// solves
// ---------------------------------------------------------------------------

/// Solve a square system `A x = b` by LU factorization with partial pivoting.
///
/// Fails on (numerically) singular `A`.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::InvalidArgument(
            "lu_solve needs a square matrix".into(),
        ));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut lu = a.clone();
    let mut x: Vec<f64> = b.to_vec();
    for col in 0..n {
        // partial pivoting
        let mut pivot_row = col;
        let mut pivot_val = lu[(col, col)].abs();
        for r in (col + 1)..n {
            let v = lu[(r, col)].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val < 1e-14 {
            return Err(Error::InvalidArgument(format!(
                "singular matrix: pivot {pivot_val:.2e} at column {col}"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            x.swap(col, pivot_row);
        }
        for r in (col + 1)..n {
            let factor = lu[(r, col)] / lu[(col, col)];
            lu[(r, col)] = 0.0;
            for j in (col + 1)..n {
                lu[(r, j)] -= factor * lu[(col, j)];
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= lu[(col, col)];
        for r in 0..col {
            x[r] -= lu[(r, col)] * x[col];
        }
    }
    Ok(x)
}

/// Minimum-norm solution of a (possibly rectangular or rank-deficient)
/// consistent system `M x = b`.
///
/// The solution is sought in the row space: `x = Mᵀ z` with `(M Mᵀ) z = b`,
/// solved by pivoted elimination that skips negligible pivots. Returns `None`
/// when the system is inconsistent, detected a posteriori by the residual
/// `|M x - b| > tol · max(1, |b|)`.
pub fn least_norm_solve(m: &Matrix, b: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
    let p = m.rows();
    if b.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: b.len(),
        });
    }
    // gram = M Mᵀ (p x p, symmetric PSD)
    let mt = m.transpose();
    let gram = m.matmul(&mt);
    let z = rank_tolerant_solve(&gram, b);
    let x = m.t_matvec(&z);
    let resid = dist(&m.matvec(&x), b);
    if resid <= tol * norm(b).max(1.0) {
        Ok(Some(x))
    } else {
        Ok(None)
    }
}

/// Gaussian elimination with partial pivoting that tolerates rank deficiency:
/// near-zero pivot columns are skipped and the matching unknowns set to zero.
/// For consistent systems this returns a solution; the caller must verify the
/// residual.
fn rank_tolerant_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let cols = a.cols();
    let mut work = a.clone();
    let mut rhs = b.to_vec();
    // scale-aware pivot cutoff
    let scale = work
        .data()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let cutoff = scale * 1e-12 * (n.max(cols) as f64);

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut row = 0usize;
    for col in 0..cols {
        if row >= n {
            break;
        }
        let mut pr = row;
        let mut pv = work[(pr, col)].abs();
        for r in (row + 1)..n {
            let v = work[(r, col)].abs();
            if v > pv {
                pv = v;
                pr = r;
            }
        }
        if pv <= cutoff {
            continue; // free column
        }
        if pr != row {
            for j in 0..cols {
                let tmp = work[(row, j)];
                work[(row, j)] = work[(pr, j)];
                work[(pr, j)] = tmp;
            }
            rhs.swap(row, pr);
        }
        for r in (row + 1)..n {
            let factor = work[(r, col)] / work[(row, col)];
            if factor == 0.0 {
                continue;
            }
            work[(r, col)] = 0.0;
            for j in (col + 1)..cols {
                work[(r, j)] -= factor * work[(row, j)];
            }
            rhs[r] -= factor * rhs[row];
        }
        pivot_of_col[col] = Some(row);
        row += 1;
    }
    // back substitution, free variables pinned to zero
    let mut x = vec![0.0; cols];
    for col in (0..cols).rev() {
        if let Some(r) = pivot_of_col[col] {
            let mut s = rhs[r];
            for j in (col + 1)..cols {
                s -= work[(r, j)] * x[j];
            }
            x[col] = s / work[(r, col)];
        }
    }
    x
}

// ---------------------------------------------------------------------------
// spectral quantities
// ---------------------------------------------------------------------------

/// Seed for the power-iteration start vector; fixed so spectral norms are
/// reproducible bit-for-bit.
const SPECTRAL_SEED: u64 = 0x5eed_cafe_f00d_0001;

/// Spectral norm `|A|₂` by power iteration on `AᵀA`.
///
/// Rayleigh-quotient iteration with relative-change tolerance `1e-10`, at most
/// 10000 sweeps, and a fixed seeded start vector, so the result is
/// deterministic.
pub fn spectral_norm(a: &Matrix) -> f64 {
    power_iteration(a, 1e-10, 10_000)
}

fn power_iteration(a: &Matrix, tol: f64, max_iters: usize) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return 0.0;
    }
    let mut rng = SplitMix64::new(SPECTRAL_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let nv = norm(&v);
    if nv == 0.0 {
        v[0] = 1.0;
    } else {
        v = scale(&v, 1.0 / nv);
    }
    let mut lambda_prev = 0.0f64;
    for _ in 0..max_iters {
        let av = a.matvec(&v);
        let w = a.t_matvec(&av); // AᵀA v
        let lambda = dot(&v, &w); // Rayleigh quotient for AᵀA
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = scale(&w, 1.0 / nw);
        if (lambda - lambda_prev).abs() <= tol * lambda.abs().max(1e-300) {
            return lambda.max(0.0).sqrt();
        }
        lambda_prev = lambda;
    }
    lambda_prev.max(0.0).sqrt()
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Used for PSD verification; converges to machine precision at desk scale.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::InvalidArgument(
            "eigenvalues need a square matrix".into(),
        ));
    }
    if !a.is_symmetric(1e-10 * (1.0 + norm_inf(a.data()))) {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let mut m = a.clone();
    // symmetrize exactly to remove representational noise
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut off = off_diag_norm(&m);
    let scale = norm_inf(m.data()).max(1e-300);
    let mut sweeps = 0;
    while off > 1e-14 * scale * (n as f64) && sweeps < 100 {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
        off = off_diag_norm(&m);
        sweeps += 1;
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}

fn off_diag_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let x = lu_solve(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(lu_solve(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn least_norm_picks_smallest_solution() {
        // x1 + x2 = 2 has min-norm solution (1, 1)
        let m = Matrix::from_rows(&[&[1.0, 1.0]]);
        let x = least_norm_solve(&m, &[2.0], 1e-10).unwrap().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_norm_detects_inconsistency() {
        // 0 · x = 1 is inconsistent
        let m = Matrix::from_rows(&[&[0.0, 0.0]]);
        assert!(least_norm_solve(&m, &[1.0], 1e-10).unwrap().is_none());
    }

    #[test]
    fn least_norm_handles_rank_deficiency() {
        // duplicated consistent rows
        let m = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let x = least_norm_solve(&m, &[2.0, 2.0], 1e-10).unwrap().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = Matrix::from_rows(&[&[3.0, 0.0], &[0.0, -7.0]]);
        assert!((spectral_norm(&a) - 7.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_of_zero() {
        assert_eq!(spectral_norm(&Matrix::zeros(4, 3)), 0.0);
    }

    #[test]
    fn jacobi_eigenvalues_match_known() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let eigs = symmetric_eigenvalues(&a).unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }
}
