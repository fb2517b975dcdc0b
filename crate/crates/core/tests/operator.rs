use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

use fracdamp::operator::{
    assemble_operator, assemble_operator_with, build_graded_grid, build_grid,
    reference_eigenvalues, RightBoundary,
};
use fracdamp::BcBranch;

fn lowest_dirichlet(n_x: usize, alpha: f64, q: f64, count: usize) -> Vec<f64> {
    let g = build_graded_grid(n_x, alpha, q).unwrap();
    let op = assemble_operator_with(&g, BcBranch::DirichletLeft, RightBoundary::Dirichlet);
    op.neg_eigenvalues().unwrap()[..count].to_vec()
}

#[test]
fn laplacian_limit_matches_sine_modes() {
    let ev = lowest_dirichlet(256, 0.0, 1.0, 4);
    for (k, e) in ev.iter().enumerate() {
        let exact = ((k + 1) as f64 * PI).powi(2);
        assert!((e - exact).abs() < 1e-3 * exact, "{k}: {e} vs {exact}");
    }
    let reference = reference_eigenvalues(0.0, 4).unwrap();
    for (k, r) in reference.iter().enumerate() {
        assert!((r - ((k + 1) as f64 * PI).powi(2)).abs() < 1e-9 * r);
    }
}

#[test]
fn degenerate_spectrum_against_bessel_zeros() {
    // tabulated zeros of J_{1/3}
    let zeros: [f64; 3] = [2.90258624841695, 6.03274705726584, 9.17050666946389];
    let reference = reference_eigenvalues(0.5, 3).unwrap();
    for (r, j) in reference.iter().zip(zeros) {
        let expected = (0.75 * j).powi(2);
        assert!((r - expected).abs() < 1e-12 * expected, "{r} vs {expected}");
    }
    let coarse = lowest_dirichlet(128, 0.5, 2.0, 3);
    let fine = lowest_dirichlet(256, 0.5, 2.0, 3);
    for k in 0..3 {
        let ec = (coarse[k] - reference[k]).abs() / reference[k];
        let ef = (fine[k] - reference[k]).abs() / reference[k];
        assert!(ef < 2e-3, "{k}: {ef:e}");
        assert!(ef < 0.7 * ec, "{k}: {ec:e} -> {ef:e}");
    }
}

#[test]
fn strong_branch_keeps_constants() {
    let g = build_grid(64, 1.5).unwrap();
    let op = assemble_operator(&g, BcBranch::NeumannFluxLeft);
    assert_eq!(op.first, 0);
    let ones = vec![Complex64::new(1.0, 0.0); op.len()];
    let a = op.apply(&ones, Complex64::new(0.0, 0.0));
    assert!(a.iter().all(|v| v.norm() < 1e-10));
    let ev = op.neg_eigenvalues().unwrap();
    assert!(ev[0].abs() < 1e-9 && ev[1] > 1.0);
}

#[test]
fn coo_export() {
    let g = build_grid(8, 0.5).unwrap();
    let op = assemble_operator(&g, BcBranch::DirichletLeft);
    let mut buf = Vec::new();
    op.write_coo(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,col,value"));
    assert_eq!(lines.count(), 3 * op.len() - 2);
}

proptest! {
    #[test]
    fn dissipative_quadratic_form(
        alpha in 0.0f64..1.9,
        re in proptest::collection::vec(-1.0f64..1.0, 33),
        im in proptest::collection::vec(-1.0f64..1.0, 33),
    ) {
        let g = build_grid(32, alpha).unwrap();
        let branch = if alpha < 1.0 { BcBranch::DirichletLeft } else { BcBranch::NeumannFluxLeft };
        let op = assemble_operator(&g, branch);
        let psi: Vec<Complex64> = (0..op.len()).map(|i| Complex64::new(re[i], im[i])).collect();
        let q = op.quadratic_form(&psi);
        // −Σ τ_mid |Δψ|²/Δx over the cells
        let mut full = vec![Complex64::new(0.0, 0.0); g.x_nodes.len()];
        full[op.first..].copy_from_slice(&psi);
        let expected: f64 = -(0..g.n_cells())
            .map(|c| g.tau_mid[c] * (full[c + 1] - full[c]).norm_sqr() / g.dx[c])
            .sum::<f64>();
        prop_assert!(q.im.abs() <= 1e-10 * (1.0 + expected.abs()));
        prop_assert!((q.re - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
        prop_assert!(q.re <= 1e-12);
    }
}
