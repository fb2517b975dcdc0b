use num_complex::Complex64;

use fracdamp::kernel::{
    build_quadrature, kernel_closed_form, rpq_constants, simulate_memory_output,
    DiffusiveQuadrature, CERTIFICATION_LAMBDAS,
};
use fracdamp::model::derive_zeta;
use fracdamp::oracle::fractional_integral_oracle;

#[test]
fn default_quadrature_certifies() {
    for af in [0.05, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.8] {
        let q = build_quadrature(af, 1.0, 200, 1e-4, 1e4).unwrap();
        let r = q.certify().unwrap();
        assert!(r.passed, "alpha_frac = {af}: {:e}", r.max_relative_error);
        assert_eq!(r.entries.len(), CERTIFICATION_LAMBDAS.len());
    }
}

#[test]
fn orders_near_one_need_a_longer_tail() {
    assert!(build_quadrature(0.95, 1.0, 200, 1e-4, 1e4).is_err());
    let q = build_quadrature(0.95, 1.0, 260, 1e-4, 1e7).unwrap();
    assert!(q.certify().unwrap().passed);
}

#[test]
fn coarse_quadrature_is_rejected() {
    let q = build_quadrature(0.75, 1.0, 20, 1e-2, 1e2);
    assert!(q.is_err() || !q.unwrap().certify().map(|r| r.passed).unwrap_or(false));
}

#[test]
fn transfer_function_off_the_real_axis() {
    let q = build_quadrature(0.3, 0.5, 200, 1e-4, 1e4).unwrap();
    for lam in [Complex64::new(0.0, 3.0), Complex64::new(2.0, -40.0)] {
        let exact = kernel_closed_form(lam, 0.3, 0.5).unwrap();
        assert!((q.transfer(lam) - exact).norm() <= 1e-6 * exact.norm());
    }
}

#[test]
fn memory_output_reproduces_fractional_integral() {
    // exponentially modulated input exercises the ℘ weighting
    let dt = 2e-3;
    let input: Vec<Complex64> = (0..=1500)
        .map(|i| {
            let t = i as f64 * dt;
            Complex64::new(t.cos(), (2.0 * t).sin()) * (-0.3 * t).exp()
        })
        .collect();
    for af in [0.2, 0.5, 0.8] {
        let q = DiffusiveQuadrature::geometric(af, 2.0, 200, 1e-4, 1e4).unwrap();
        let out = simulate_memory_output(&q, &input, dt, derive_zeta(1.0, af).unwrap()).unwrap();
        let oracle = fractional_integral_oracle(&input, af, 2.0, dt).unwrap();
        let err = out
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "alpha_frac = {af}: {err:e}");
    }
}

/// ∫_ℝ f(ξ) dξ via ξ = tan u and a fine midpoint rule.
fn real_line_integral(f: impl Fn(f64) -> f64) -> f64 {
    let n = 200_000;
    let h = std::f64::consts::PI / n as f64;
    (0..n)
        .map(|i| {
            let u = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h;
            let c = u.cos();
            f(u.tan()) / (c * c) * h
        })
        .sum()
}

#[test]
fn p_and_q_match_direct_integration() {
    for (lam, wp) in [(0.0, 1.0), (3.0, 1.0), (-7.5, 0.2)] {
        let c = rpq_constants(lam, 0.5, wp).unwrap();
        let b = f64::abs(lam) + wp;
        let p = real_line_integral(|x| (b + x * x).powi(-2)).sqrt();
        let q = real_line_integral(|x| x * x * (b + x * x).powi(-4)).sqrt();
        assert!((c.p - p).abs() < 1e-8 * p, "{lam}: {} vs {p}", c.p);
        assert!((c.q - q).abs() < 1e-8 * q, "{lam}: {} vs {q}", c.q);
    }
}
