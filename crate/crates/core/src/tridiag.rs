//! Complex tridiagonal systems, optionally bordered by a diagonal block that
//! couples only to the last unknown.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// LU factorization with partial pivoting of a complex tridiagonal matrix,
/// stored as in LAPACK's `gttrf` (second superdiagonal from row swaps).
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// `lower[i]` is A[i+1][i], `diag[i]` is A[i][i], `upper[i]` is A[i][i+1].
    pub fn factor(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::Shape {
                what: "tridiagonal bands",
                expected: n.saturating_sub(1),
                got: lower.len().max(upper.len()),
            });
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut dl = lower.to_vec();
        let mut d = diag.to_vec();
        let mut du = upper.to_vec();
        let mut du2 = vec![zero; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    return Err(Error::SolveBreakdown { step: 0, row: i });
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1].norm() == 0.0 || !d[n - 1].re.is_finite() {
            return Err(Error::SolveBreakdown {
                step: 0,
                row: n - 1,
            });
        }
        Ok(TridiagLu {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            let t = b[i];
            b[i + 1] -= self.dl[i] * t;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// `[T  P; Q  D]` with T tridiagonal (n×n), D diagonal (m×m), P nonzero only
/// in row n−1 and Q nonzero only in column n−1. The diagonal block is
/// eliminated onto the last unknown of T.
#[derive(Debug, Clone)]
pub struct BorderedSolver {
    lu: TridiagLu,
    p: Vec<Complex64>,
    q: Vec<Complex64>,
    d: Vec<Complex64>,
}

impl BorderedSolver {
    pub fn factor(
        lower: &[Complex64],
        diag: &[Complex64],
        upper: &[Complex64],
        p: Vec<Complex64>,
        q: Vec<Complex64>,
        d: Vec<Complex64>,
    ) -> Result<Self> {
        if p.len() != d.len() || q.len() != d.len() {
            return Err(Error::Shape {
                what: "bordered block",
                expected: d.len(),
                got: p.len().min(q.len()),
            });
        }
        let mut schur = diag.to_vec();
        let last = schur.len() - 1;
        for j in 0..d.len() {
            if d[j].norm() == 0.0 {
                return Err(Error::SolveBreakdown {
                    step: 0,
                    row: last + 1 + j,
                });
            }
            schur[last] -= p[j] * q[j] / d[j];
        }
        let lu = TridiagLu::factor(lower, &schur, upper)?;
        Ok(BorderedSolver { lu, p, q, d })
    }

    /// Solves in place: `x` has length n, `y` has length m.
    pub fn solve_in_place(&self, x: &mut [Complex64], y: &mut [Complex64]) {
        let last = x.len() - 1;
        for ((p, yj), d) in self.p.iter().zip(y.iter()).zip(&self.d) {
            x[last] -= p * yj / d;
        }
        self.lu.solve_in_place(x);
        let xn = x[last];
        for ((yj, q), d) in y.iter_mut().zip(&self.q).zip(&self.d) {
            *yj = (*yj - q * xn) / d;
        }
    }
}
