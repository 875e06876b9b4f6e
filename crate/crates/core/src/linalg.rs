//! Dense LU factorization with partial pivoting, including in-place growth
//! by a bordered block update so that refits after adding points only pay
//! for the new rows and columns.
//!
//! Matrices are row-major `Vec<f64>`. The level-3 work goes through
//! `matrixmultiply`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const BLOCK: usize = 96;

/// `P·A = L·U` with `L` unit lower triangular. `L` (below the diagonal) and
/// `U` share one row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    /// Row `i` of `P·A` is row `perm[i]` of `A`.
    perm: Vec<usize>,
}

/// `C −= A·B` on row-major blocks given by raw pointers and row strides.
///
/// # Safety
/// Each pointer must be valid for its `rows × cols` block at the given
/// stride, and `c` must not overlap `a` or `b`.
#[allow(clippy::too_many_arguments)]
unsafe fn gemm_sub(
    m: usize,
    k: usize,
    n: usize,
    a: *const f64,
    lda: usize,
    b: *const f64,
    ldb: usize,
    c: *mut f64,
    ldc: usize,
) {
    if m == 0 || k == 0 || n == 0 {
        return;
    }
    matrixmultiply::dgemm(m, k, n, -1.0, a, lda as isize, 1, b, ldb as isize, 1, 1.0, c, ldc as isize, 1);
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

impl LuFactors {
    /// Factors the `n × n` row-major matrix `a`.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Shape { expected: n * n, actual: a.len() });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix assembly"));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = max_abs(&a) * f64::EPSILON;

        for j0 in (0..n).step_by(BLOCK) {
            let j1 = (j0 + BLOCK).min(n);
            // Panel: unblocked elimination of columns j0..j1 over rows j0..n.
            for j in j0..j1 {
                let mut p = j;
                let mut best = a[j * n + j].abs();
                for i in j + 1..n {
                    let v = a[i * n + j].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                if !(best > tiny) {
                    return Err(Error::Singular { row: j, size: n, pivot: best });
                }
                if p != j {
                    swap_rows(&mut a, n, p, j);
                    perm.swap(p, j);
                }
                let piv = a[j * n + j];
                let (top, rest) = a.split_at_mut((j + 1) * n);
                let pivot_row = &top[j * n + j + 1..j * n + j1];
                for row in rest.chunks_exact_mut(n) {
                    let l = row[j] / piv;
                    row[j] = l;
                    if l != 0.0 {
                        for (x, u) in row[j + 1..j1].iter_mut().zip(pivot_row) {
                            *x -= l * u;
                        }
                    }
                }
            }
            if j1 == n {
                break;
            }
            // U12 = L11⁻¹ A12.
            for r in j0 + 1..j1 {
                let (head, tail) = a.split_at_mut(r * n);
                let row = &mut tail[..n];
                for t in j0..r {
                    let l = row[t];
                    if l != 0.0 {
                        let src = &head[t * n + j1..t * n + n];
                        for (x, u) in row[j1..].iter_mut().zip(src) {
                            *x -= l * u;
                        }
                    }
                }
            }
            // A22 −= L21 · U12.
            let rows = n - j1;
            let width = j1 - j0;
            let ptr = a.as_mut_ptr();
            // SAFETY: L21 = rows j1.., cols j0..j1; U12 = rows j0..j1, cols
            // j1..; A22 = rows j1.., cols j1... The three blocks are disjoint
            // and inside the n×n buffer.
            unsafe {
                gemm_sub(rows, width, rows, ptr.add(j1 * n + j0), n, ptr.add(j0 * n + j1), n, ptr.add(j1 * n + j1), n);
            }
        }
        Ok(LuFactors { n, lu: a, perm })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Shape { expected: n, actual: b.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LU solve"));
        }
        Ok(x)
    }

    /// Grows the factorization of `A` to that of `[[A, B], [R, C]]`.
    ///
    /// `cols` is `B` (`n × k`), `rows` is `R` (`k × n`) and `corner` is `C`
    /// (`k × k`), all row-major. Pivoting is confined to the new block, so
    /// a failure here does not mean the grown matrix is singular; callers
    /// can refactor from scratch instead. On error `self` is unchanged.
    pub fn extend(&mut self, cols: &[f64], rows: &[f64], corner: &[f64], k: usize) -> Result<()> {
        let n = self.n;
        for (len, expected) in [(cols.len(), n * k), (rows.len(), k * n), (corner.len(), k * k)] {
            if len != expected {
                return Err(Error::Shape { expected, actual: len });
            }
        }
        if k == 0 {
            return Ok(());
        }
        if n == 0 {
            *self = LuFactors::factor(corner.to_vec(), k)?;
            return Ok(());
        }

        // X = L⁻¹ P B, blocked forward substitution.
        let mut x: Vec<f64> = Vec::with_capacity(n * k);
        for &p in &self.perm {
            x.extend_from_slice(&cols[p * k..(p + 1) * k]);
        }
        for i0 in (0..n).step_by(BLOCK) {
            let i1 = (i0 + BLOCK).min(n);
            let xp = x.as_mut_ptr();
            // SAFETY: reads L rows i0..i1, cols 0..i0 and X rows 0..i0; writes
            // X rows i0..i1. X row ranges are disjoint.
            unsafe {
                gemm_sub(i1 - i0, i0, k, self.lu.as_ptr().add(i0 * n), n, xp, k, xp.add(i0 * k), k);
            }
            for r in i0 + 1..i1 {
                let (head, tail) = x.split_at_mut(r * k);
                let row = &mut tail[..k];
                for t in i0..r {
                    let l = self.lu[r * n + t];
                    if l != 0.0 {
                        for (v, s) in row.iter_mut().zip(&head[t * k..(t + 1) * k]) {
                            *v -= l * s;
                        }
                    }
                }
            }
        }

        // Y = R U⁻¹, blocked over column panels of U.
        let mut y = rows.to_vec();
        for j0 in (0..n).step_by(BLOCK) {
            let j1 = (j0 + BLOCK).min(n);
            let yp = y.as_mut_ptr();
            // SAFETY: reads Y cols 0..j0 and U rows 0..j0 / cols j0..j1;
            // writes Y cols j0..j1. Column ranges of Y are disjoint.
            unsafe {
                gemm_sub(k, j0, j1 - j0, yp, n, self.lu.as_ptr().add(j0), n, yp.add(j0), n);
            }
            for row in y.chunks_exact_mut(n) {
                for c in j0..j1 {
                    let (solved, rest) = row.split_at_mut(c);
                    let s = solved[j0..].iter().zip(j0..).fold(rest[0], |s, (v, t)| s - v * self.lu[t * n + c]);
                    rest[0] = s / self.lu[c * n + c];
                }
            }
        }

        // Schur complement S = C − Y X.
        let mut schur = corner.to_vec();
        // SAFETY: Y, X and S are separate allocations of the stated shapes.
        unsafe {
            gemm_sub(k, n, k, y.as_ptr(), n, x.as_ptr(), k, schur.as_mut_ptr(), k);
        }
        let tail = LuFactors::factor(schur, k)?;

        let size = n + k;
        let mut lu = Vec::with_capacity(size * size);
        for i in 0..n {
            lu.extend_from_slice(&self.lu[i * n..(i + 1) * n]);
            lu.extend_from_slice(&x[i * k..(i + 1) * k]);
        }
        for i in 0..k {
            let src = tail.perm[i];
            lu.extend_from_slice(&y[src * n..(src + 1) * n]);
            lu.extend_from_slice(&tail.lu[i * k..(i + 1) * k]);
        }
        let mut perm = core::mem::take(&mut self.perm);
        perm.extend(tail.perm.iter().map(|p| p + n));
        *self = LuFactors { n: size, lu, perm };
        Ok(())
    }
}

fn swap_rows(a: &mut [f64], n: usize, r1: usize, r2: usize) {
    let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    let (head, tail) = a.split_at_mut(hi * n);
    head[lo * n..(lo + 1) * n].swap_with_slice(&mut tail[..n]);
}
