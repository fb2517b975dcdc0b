//! Conservative finite differences for ψ ↦ (x^α ψ_x)_x on (0, 1).
//!
//! Fluxes live on cell midpoints, `F_{i+1/2} = τ(x_{i+1/2}) (ψ_{i+1} − ψ_i)/Δx_i`,
//! and node i carries the mass `m_i` of its dual cell (half cells at the ends).
//! Then `A = M⁻¹(−K)` with K symmetric, so `ψ^H M A ψ = −Σ τ |Δψ|²/Δx` exactly.
//! The node x = 1 is always a dual half cell whose outer flux is left as a
//! slot for the boundary coupling.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{tau, BcBranch};
use crate::spectral::bessel::bessel_zero;

#[derive(Debug, Clone, Serialize)]
pub struct DegenerateGrid {
    pub x_nodes: Vec<f64>,
    /// τ at the midpoint of each cell.
    pub tau_mid: Vec<f64>,
    /// Nominal spacing 1/n_x; equal to every cell width on a uniform grid.
    pub h: f64,
    /// Cell widths.
    pub dx: Vec<f64>,
    pub alpha_deg: f64,
}

impl DegenerateGrid {
    pub fn n_cells(&self) -> usize {
        self.dx.len()
    }

    pub fn is_uniform(&self) -> bool {
        self.dx.iter().all(|&d| d == self.h)
    }
}

fn grid_from_nodes(x_nodes: Vec<f64>, alpha_deg: f64) -> DegenerateGrid {
    let n = x_nodes.len() - 1;
    let dx: Vec<f64> = x_nodes.windows(2).map(|w| w[1] - w[0]).collect();
    let tau_mid = x_nodes
        .windows(2)
        .map(|w| tau(0.5 * (w[0] + w[1]), alpha_deg))
        .collect();
    DegenerateGrid {
        x_nodes,
        tau_mid,
        h: 1.0 / n as f64,
        dx,
        alpha_deg,
    }
}

fn check_grid_args(n_x: usize, alpha_deg: f64) -> Result<()> {
    if n_x < 8 {
        return Err(Error::param("n_x", format!("must be >= 8, got {n_x}")));
    }
    if !(0.0..2.0).contains(&alpha_deg) {
        return Err(Error::param(
            "alpha_deg",
            format!("must lie in [0, 2), got {alpha_deg}"),
        ));
    }
    Ok(())
}

/// n_x + 1 uniform nodes on [0, 1].
pub fn build_grid(n_x: usize, alpha_deg: f64) -> Result<DegenerateGrid> {
    check_grid_args(n_x, alpha_deg)?;
    let h = 1.0 / n_x as f64;
    let mut x: Vec<f64> = (0..=n_x).map(|i| i as f64 * h).collect();
    x[n_x] = 1.0;
    let mut g = grid_from_nodes(x, alpha_deg);
    // keep every width bit-identical to h so the uniform path is exact
    g.dx.iter_mut().for_each(|d| *d = h);
    Ok(g)
}

/// Nodes x_i = (i/n_x)^q, refined towards the degenerate end for q > 1.
pub fn build_graded_grid(n_x: usize, alpha_deg: f64, q: f64) -> Result<DegenerateGrid> {
    check_grid_args(n_x, alpha_deg)?;
    if !(q >= 1.0) {
        return Err(Error::param(
            "q",
            format!("grading exponent must be >= 1, got {q}"),
        ));
    }
    if q == 1.0 {
        return build_grid(n_x, alpha_deg);
    }
    let x: Vec<f64> = (0..=n_x).map(|i| (i as f64 / n_x as f64).powf(q)).collect();
    Ok(grid_from_nodes(x, alpha_deg))
}

/// Treatment of x = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RightBoundary {
    /// Node x = 1 is an unknown; its outer flux is supplied by the damping.
    FluxSlot,
    /// ψ(1) = 0, used for reference spectra.
    Dirichlet,
}

/// `A = M⁻¹(−K)` on the unknown nodes `first ..= last`.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorMatrix {
    /// Grid index of the first unknown.
    pub first: usize,
    /// Lumped node masses m_i.
    pub mass: Vec<f64>,
    /// Diagonal of K.
    pub k_diag: Vec<f64>,
    /// Off-diagonal of K, `k_off[i] = K[i][i+1] = K[i+1][i]`.
    pub k_off: Vec<f64>,
    pub bc_branch: BcBranch,
    pub right: RightBoundary,
}

impl OperatorMatrix {
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Row of the x = 1 unknown, if it is one.
    pub fn boundary_row(&self) -> Option<usize> {
        match self.right {
            RightBoundary::FluxSlot => Some(self.len() - 1),
            RightBoundary::Dirichlet => None,
        }
    }

    /// Bands of A itself: `(lower, diag, upper)`.
    pub fn bands(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.len();
        let diag = (0..n).map(|i| -self.k_diag[i] / self.mass[i]).collect();
        let lower = (0..n - 1)
            .map(|i| -self.k_off[i] / self.mass[i + 1])
            .collect();
        let upper = (0..n - 1).map(|i| -self.k_off[i] / self.mass[i]).collect();
        (lower, diag, upper)
    }

    /// Aψ with the boundary flux `flux` added in the x = 1 slot.
    pub fn apply(&self, psi: &[Complex64], flux: Complex64) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = psi[i] * self.k_diag[i];
            if i > 0 {
                s += psi[i - 1] * self.k_off[i - 1];
            }
            if i + 1 < n {
                s += psi[i + 1] * self.k_off[i];
            }
            out[i] = -s / self.mass[i];
        }
        if let Some(r) = self.boundary_row() {
            out[r] += flux / self.mass[r];
        }
        out
    }

    /// ψ^H M A ψ with zero boundary flux; real and equal to −ψ^H K ψ.
    pub fn quadratic_form(&self, psi: &[Complex64]) -> Complex64 {
        let a = self.apply(psi, Complex64::new(0.0, 0.0));
        psi.iter()
            .zip(&a)
            .zip(&self.mass)
            .map(|((p, v), &m)| p.conj() * v * m)
            .sum()
    }

    /// Eigenvalues of −A (real, nonnegative) in increasing order, through the
    /// symmetric form M^{-1/2} K M^{-1/2}.
    pub fn neg_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let s: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mat = Mat::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                self.k_diag[i] * s[i] * s[i]
            } else if i == j + 1 {
                self.k_off[j] * s[i] * s[j]
            } else if j == i + 1 {
                self.k_off[i] * s[i] * s[j]
            } else {
                0.0
            }
        });
        mat.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))
    }

    /// `row col value` triplets of A (0-based over the unknowns).
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<()> {
        let (lower, diag, upper) = self.bands();
        writeln!(out, "row,col,value")?;
        for i in 0..self.len() {
            if i > 0 {
                writeln!(out, "{},{},{:.16e}", i, i - 1, lower[i - 1])?;
            }
            writeln!(out, "{},{},{:.16e}", i, i, diag[i])?;
            if i + 1 < self.len() {
                writeln!(out, "{},{},{:.16e}", i, i + 1, upper[i])?;
            }
        }
        Ok(())
    }
}

/// Operator with the flux slot at x = 1.
pub fn assemble_operator(grid: &DegenerateGrid, bc_branch: BcBranch) -> OperatorMatrix {
    assemble_operator_with(grid, bc_branch, RightBoundary::FluxSlot)
}

pub fn assemble_operator_with(
    grid: &DegenerateGrid,
    bc_branch: BcBranch,
    right: RightBoundary,
) -> OperatorMatrix {
    let n = grid.n_cells();
    let first = match bc_branch {
        BcBranch::DirichletLeft => 1,
        BcBranch::NeumannFluxLeft => 0,
    };
    let last = match right {
        RightBoundary::FluxSlot => n,
        RightBoundary::Dirichlet => n - 1,
    };
    // conductance of each cell
    let c: Vec<f64> = grid
        .tau_mid
        .iter()
        .zip(&grid.dx)
        .map(|(t, d)| t / d)
        .collect();
    let mut mass = Vec::with_capacity(last + 1 - first);
    let mut k_diag = Vec::with_capacity(last + 1 - first);
    let mut k_off = Vec::with_capacity(last - first);
    for i in first..=last {
        let left_w = if i > 0 { grid.dx[i - 1] } else { 0.0 };
        let right_w = if i < n { grid.dx[i] } else { 0.0 };
        mass.push(0.5 * (left_w + right_w));
        let left_c = if i > 0 { c[i - 1] } else { 0.0 };
        let right_c = if i < n { c[i] } else { 0.0 };
        k_diag.push(left_c + right_c);
        if i < last {
            k_off.push(-c[i]);
        }
    }
    OperatorMatrix {
        first,
        mass,
        k_diag,
        k_off,
        bc_branch,
        right,
    }
}

/// μ_n = ((2−α)/2)² j²_{ν,n}, ν = (1−α)/(2−α): the Dirichlet–Dirichlet
/// spectrum of −(x^α ψ_x)_x for 0 ≤ α < 1.
pub fn reference_eigenvalues(alpha_deg: f64, n: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha_deg) {
        return Err(Error::Unsupported {
            what: "reference spectrum",
            reason: format!(
                "closed form only for the weak branch 0 <= alpha_deg < 1, got {alpha_deg}"
            ),
        });
    }
    let nu = (1.0 - alpha_deg) / (2.0 - alpha_deg);
    let scale = (2.0 - alpha_deg) / 2.0;
    (1..=n)
        .map(|k| bessel_zero(nu, k).map(|j| (scale * j).powi(2)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_examples() {
        let g = build_grid(8, 0.0).unwrap();
        assert!(g.tau_mid.iter().all(|&t| t == 1.0));
        assert_eq!(g.h, 0.125);
        assert_eq!(g.x_nodes[0], 0.0);
        assert_eq!(g.x_nodes[8], 1.0);
        let g = build_grid(8, 1.0).unwrap();
        assert_eq!(g.tau_mid[0], 1.0 / 16.0);
        assert!(build_grid(4, 0.5).is_err());
        let g = build_graded_grid(16, 0.9, 2.0).unwrap();
        assert!(g.dx[0] < g.dx[15]);
        assert_relative_eq!(g.dx.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn laplacian_limit() {
        let g = build_grid(256, 0.0).unwrap();
        let op = assemble_operator_with(&g, BcBranch::DirichletLeft, RightBoundary::Dirichlet);
        let ev = op.neg_eigenvalues().unwrap();
        assert!((ev[0] - PI * PI).abs() / (PI * PI) < 0.01);
        // second order: error ratio ≈ 4 under doubling
        let err = |n| {
            let g = build_grid(n, 0.0).unwrap();
            let op = assemble_operator_with(&g, BcBranch::DirichletLeft, RightBoundary::Dirichlet);
            (op.neg_eigenvalues().unwrap()[0] - PI * PI).abs()
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn reference_spectrum() {
        let mu = reference_eigenvalues(0.0, 4).unwrap();
        for (n, m) in mu.iter().enumerate() {
            assert_relative_eq!(*m, ((n + 1) as f64 * PI).powi(2), max_relative = 1e-12);
        }
        let mu = reference_eigenvalues(0.5, 6).unwrap();
        assert!(mu.windows(2).all(|w| w[1] > w[0]));
        assert!(reference_eigenvalues(1.2, 3).is_err());
    }

    #[test]
    fn degenerate_first_eigenvalue_converges() {
        let mu = reference_eigenvalues(0.5, 1).unwrap()[0];
        let g = build_grid(512, 0.5).unwrap();
        let op = assemble_operator_with(&g, BcBranch::DirichletLeft, RightBoundary::Dirichlet);
        let ev = op.neg_eigenvalues().unwrap()[0];
        assert!((ev - mu).abs() / mu < 0.02, "{ev} vs {mu}");
    }

    #[test]
    fn strong_branch_keeps_constants_in_kernel() {
        let g = build_grid(32, 1.5).unwrap();
        let op = assemble_operator(&g, BcBranch::NeumannFluxLeft);
        assert_eq!(op.len(), 33);
        let ones = vec![Complex64::new(1.0, 0.0); 33];
        let a = op.apply(&ones, Complex64::new(0.0, 0.0));
        assert!(a.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn coo_export_lists_bands() {
        let g = build_grid(8, 0.5).unwrap();
        let op = assemble_operator(&g, BcBranch::DirichletLeft);
        let mut buf = Vec::new();
        op.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * op.len() - 2);
    }

    proptest! {
        #[test]
        fn summation_by_parts(
            re in proptest::collection::vec(-1.0f64..1.0, 31),
            im in proptest::collection::vec(-1.0f64..1.0, 31),
            alpha in 0.0f64..1.99,
            neumann in proptest::bool::ANY,
        ) {
            let g = build_grid(32, alpha).unwrap();
            let branch = if neumann { BcBranch::NeumannFluxLeft } else { BcBranch::DirichletLeft };
            let op = assemble_operator_with(&g, branch, RightBoundary::Dirichlet);
            let psi: Vec<Complex64> = (0..op.len()).map(|i| Complex64::new(re[i % 31], im[i % 31])).collect();
            let q = op.quadratic_form(&psi);
            // full nodal vector with homogeneous boundary values
            let mut full = vec![Complex64::new(0.0, 0.0); 33];
            full[op.first..op.first + op.len()].copy_from_slice(&psi);
            let direct: f64 = (0..32)
                .map(|i| g.tau_mid[i] * ((full[i + 1] - full[i]) / g.h).norm_sqr() * g.h)
                .sum();
            prop_assert!(q.re <= 0.0);
            prop_assert!((q.re + direct).abs() <= 1e-12 * direct.max(1.0));
            prop_assert!(q.im.abs() <= 1e-12 * direct.max(1.0));
        }
    }
}
