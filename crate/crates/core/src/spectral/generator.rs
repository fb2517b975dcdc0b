//! The discrete generator of the augmented system, its eigenvalues and its
//! resolvent norm in the energy inner product.
//!
//! In coordinates scaled by D^{1/2}, D = diag(m_i, ζ w_j), the generator is
//!
//! ```text
//! [ −i K̃      −c e_N^T ]      K̃ = M^{-1/2} K M^{-1/2},
//! [  c e_N^T   −diag(a) ]      c_j = √(ζ w_j / m_N) η_j,  a_j = ξ_j² + ℘,
//! ```
//!
//! so the energy norm becomes the Euclidean norm and G + G^H ≤ 0 is visible
//! by inspection. For α̃ = 1 the memory block is absent and the last
//! diagonal entry gains −ρ/m_N.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use super::characteristic::compute_spectrum;

use crate::error::{Error, Result};
use crate::kernel::DiffusiveQuadrature;
use crate::model::ModelConfig;
use crate::numerics::linear_fit;
use crate::operator::{assemble_operator, DegenerateGrid, OperatorMatrix};
use crate::tridiag::BorderedSolver;

pub const MAX_DENSE_NX: usize = 512;
pub const MAX_DENSE_NXI: usize = 256;

/// Structured generator in energy-scaled coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct Generator {
    /// Diagonal and off-diagonal of K̃ (real symmetric, positive semidefinite).
    pub k_diag: Vec<f64>,
    pub k_off: Vec<f64>,
    /// Coupling between ψ_N and θ_j.
    pub c: Vec<f64>,
    /// Decay rates ξ_j² + ℘.
    pub a: Vec<f64>,
    /// Extra real part −ρ/m_N on the last ψ entry (direct damping only).
    pub direct: f64,
    /// sqrt of the energy weights, ψ part then θ part.
    pub scale: Vec<f64>,
    /// Grid index of the first ψ unknown.
    pub first: usize,
}

impl Generator {
    pub fn n_psi(&self) -> usize {
        self.k_diag.len()
    }

    pub fn n_theta(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.n_psi() + self.n_theta()
    }

    /// G x.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_psi();
        let last = n - 1;
        let i = Complex64::new(0.0, 1.0);
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim()];
        for r in 0..n {
            let mut s = x[r] * self.k_diag[r];
            if r > 0 {
                s += x[r - 1] * self.k_off[r - 1];
            }
            if r < last {
                s += x[r + 1] * self.k_off[r];
            }
            y[r] = -i * s;
        }
        y[last] += x[last] * self.direct;
        for j in 0..self.n_theta() {
            y[last] -= x[n + j] * self.c[j];
            y[n + j] = x[last] * self.c[j] - x[n + j] * self.a[j];
        }
        y
    }

    /// Dense copy of G.
    pub fn to_dense(&self) -> Mat<Complex64> {
        let n = self.n_psi();
        let d = self.dim();
        let last = n - 1;
        let i = Complex64::new(0.0, 1.0);
        let mut m = Mat::<Complex64>::zeros(d, d);
        for r in 0..n {
            m[(r, r)] = -i * self.k_diag[r];
            if r < last {
                m[(r, r + 1)] = -i * self.k_off[r];
                m[(r + 1, r)] = -i * self.k_off[r];
            }
        }
        m[(last, last)] += Complex64::new(self.direct, 0.0);
        for j in 0..self.n_theta() {
            m[(last, n + j)] = Complex64::new(-self.c[j], 0.0);
            m[(n + j, last)] = Complex64::new(self.c[j], 0.0);
            m[(n + j, n + j)] = Complex64::new(-self.a[j], 0.0);
        }
        m
    }

    /// All eigenvalues of G by dense decomposition.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        self.to_dense()
            .eigenvalues()
            .map_err(|e| Error::Eigen(format!("{e:?}")))
    }

    /// Eigenvalues of the ψ-block alone.
    pub fn psi_block_eigenvalues(&self) -> Result<Vec<Complex64>> {
        let n = self.n_psi();
        let full = self.to_dense();
        full.as_ref()
            .submatrix(0, 0, n, n)
            .to_owned()
            .eigenvalues()
            .map_err(|e| Error::Eigen(format!("{e:?}")))
    }

    /// Factors `s·I − G` (or its adjoint) as a bordered tridiagonal system.
    fn shifted(&self, s: Complex64, adjoint: bool) -> Result<BorderedSolver> {
        let n = self.n_psi();
        let last = n - 1;
        let i = Complex64::new(0.0, 1.0);
        // s − G on the ψ block is s + iK̃ − direct·e_N e_N^T
        let (s_eff, k_sign) = if adjoint { (s.conj(), -i) } else { (s, i) };
        let mut diag: Vec<Complex64> = self.k_diag.iter().map(|&k| s_eff + k_sign * k).collect();
        diag[last] -= self.direct;
        let off: Vec<Complex64> = self.k_off.iter().map(|&k| k_sign * k).collect();
        let sign = if adjoint { -1.0 } else { 1.0 };
        let p: Vec<Complex64> = self
            .c
            .iter()
            .map(|&c| Complex64::new(sign * c, 0.0))
            .collect();
        let q: Vec<Complex64> = self
            .c
            .iter()
            .map(|&c| Complex64::new(-sign * c, 0.0))
            .collect();
        let d: Vec<Complex64> = self.a.iter().map(|&a| s_eff + a).collect();
        BorderedSolver::factor(&off, &diag, &off, p, q, d)
    }

    /// ‖(s I − G)^{-1}‖₂ by power iteration on (sI−G)^{-H}(sI−G)^{-1}.
    pub fn resolvent_norm_at(&self, s: Complex64) -> Result<f64> {
        let fwd = self.shifted(s, false)?;
        let adj = self.shifted(s, true)?;
        let n = self.n_psi();
        let d = self.dim();
        let mut v: Vec<Complex64> = (0..d)
            .map(|k| Complex64::from_polar(1.0, 0.7 * k as f64))
            .collect();
        normalize(&mut v);
        let mut est = 0.0;
        for _ in 0..500 {
            let mut y = v.clone();
            {
                let (a, b) = y.split_at_mut(n);
                fwd.solve_in_place(a, b);
            }
            let ny = norm(&y);
            let mut x = y;
            {
                let (a, b) = x.split_at_mut(n);
                adj.solve_in_place(a, b);
            }
            let new = ny;
            let nx = norm(&x);
            if !(nx > 0.0) || !nx.is_finite() {
                return Err(Error::SolveBreakdown { step: 0, row: 0 });
            }
            for (vi, xi) in v.iter_mut().zip(&x) {
                *vi = xi / nx;
            }
            if (new - est).abs() <= 1e-12 * new {
                est = new;
                break;
            }
            est = new;
        }
        if est > 1e12 {
            log::warn!("resolvent norm {est:.3e} at s = {s}: shift is nearly an eigenvalue");
        }
        Ok(est)
    }

    /// ‖(iβ − G)^{-1}‖ in the energy norm.
    pub fn resolvent_norm(&self, beta: f64) -> Result<f64> {
        self.resolvent_norm_at(Complex64::new(0.0, beta))
    }

    /// Eigenvalue of G closest to `sigma` and its eigenvector, by shifted
    /// inverse iteration.
    pub fn eigenpair_near(&self, sigma: Complex64) -> Result<(Complex64, Vec<Complex64>)> {
        let n = self.n_psi();
        let mut shift = sigma;
        let mut v: Vec<Complex64> = (0..self.dim())
            .map(|k| Complex64::from_polar(1.0, 0.3 * k as f64))
            .collect();
        normalize(&mut v);
        let mut lambda = sigma;
        for round in 0..3 {
            // (G − shift)^{-1} = −(shift − G)^{-1}
            let solver = self.shifted(shift, false)?;
            for _ in 0..100 {
                let mut y = v.clone();
                {
                    let (a, b) = y.split_at_mut(n);
                    solver.solve_in_place(a, b);
                }
                let yv: Complex64 = v.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
                let new = shift - 1.0 / yv;
                let ny = norm(&y);
                for (vi, yi) in v.iter_mut().zip(&y) {
                    *vi = yi / ny;
                }
                let done = (new - lambda).norm() <= 1e-14 * new.norm().max(1.0);
                lambda = new;
                if done {
                    break;
                }
            }
            if round < 2 {
                // move the shift close, but not onto, the eigenvalue
                shift = lambda + (lambda - shift) * 1e-3;
            }
        }
        Ok((lambda, v))
    }

    /// Energy-scaled vector back to nodal ψ (full grid, length n_x+1) and θ.
    pub fn unscale(&self, v: &[Complex64], n_nodes: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n_psi();
        let mut psi = vec![Complex64::new(0.0, 0.0); n_nodes];
        for r in 0..n {
            psi[self.first + r] = v[r] / self.scale[r];
        }
        let theta = (0..self.n_theta())
            .map(|j| {
                let s = self.scale[n + j];
                if s > 0.0 {
                    v[n + j] / s
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        (psi, theta)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let n = norm(v);
    v.iter_mut().for_each(|z| *z /= n);
}

/// Builds the structured generator; `quad` is ignored for α̃ = 1.
pub fn build_generator(
    model: &ModelConfig,
    grid: &DegenerateGrid,
    quad: Option<&DiffusiveQuadrature>,
) -> Result<Generator> {
    let op = assemble_operator(grid, model.bc_branch);
    generator_from_operator(model, &op, quad)
}

fn generator_from_operator(
    model: &ModelConfig,
    op: &OperatorMatrix,
    quad: Option<&DiffusiveQuadrature>,
) -> Result<Generator> {
    let n = op.len();
    let last = n - 1;
    let sm: Vec<f64> = op.mass.iter().map(|m| m.sqrt()).collect();
    let k_diag = (0..n).map(|r| op.k_diag[r] / op.mass[r]).collect();
    let k_off = (0..n - 1)
        .map(|r| op.k_off[r] / (sm[r] * sm[r + 1]))
        .collect();
    let m_n = op.mass[last];
    let mut scale = sm.clone();
    let (c, a, direct) = if model.is_direct_damping() {
        (Vec::new(), Vec::new(), -model.rho / m_n)
    } else {
        let q = quad.ok_or_else(|| Error::param("quadrature", "required when alpha_frac < 1"))?;
        let c = (0..q.len())
            .map(|j| (model.zeta * q.weights[j] / m_n).sqrt() * q.eta[j])
            .collect();
        let a = (0..q.len()).map(|j| q.rate(j)).collect();
        scale.extend(q.weights.iter().map(|w| (model.zeta * w).sqrt()));
        (c, a, 0.0)
    };
    Ok(Generator {
        k_diag,
        k_off,
        c,
        a,
        direct,
        scale,
        first: op.first,
    })
}

/// Dense generator in the original (unscaled) variables, as the block
/// matrix [[iA + boundary column], [η e_N^T, −diag(a)]].
pub fn assemble_discrete_generator(
    model: &ModelConfig,
    grid: &DegenerateGrid,
    quad: Option<&DiffusiveQuadrature>,
) -> Result<Mat<Complex64>> {
    let n_x = grid.n_cells();
    if n_x > MAX_DENSE_NX || quad.is_some_and(|q| q.len() > MAX_DENSE_NXI) {
        return Err(Error::Unsupported {
            what: "dense generator",
            reason: format!("limited to n_x <= {MAX_DENSE_NX} and n_xi <= {MAX_DENSE_NXI}"),
        });
    }
    let op = assemble_operator(grid, model.bc_branch);
    let (lo, di, up) = op.bands();
    let n = op.len();
    let last = n - 1;
    let m_n = op.mass[last];
    let i = Complex64::new(0.0, 1.0);
    let n_theta = if model.is_direct_damping() {
        0
    } else {
        quad.map_or(0, |q| q.len())
    };
    let mut m = Mat::<Complex64>::zeros(n + n_theta, n + n_theta);
    for r in 0..n {
        m[(r, r)] = i * di[r];
        if r < last {
            m[(r, r + 1)] = i * up[r];
            m[(r + 1, r)] = i * lo[r];
        }
    }
    if model.is_direct_damping() {
        m[(last, last)] -= Complex64::new(model.rho / m_n, 0.0);
    } else {
        let q = quad.ok_or_else(|| Error::param("quadrature", "required when alpha_frac < 1"))?;
        for j in 0..q.len() {
            m[(last, n + j)] = Complex64::new(-model.zeta * q.weights[j] * q.eta[j] / m_n, 0.0);
            m[(n + j, last)] = Complex64::new(q.eta[j], 0.0);
            m[(n + j, n + j)] = Complex64::new(-q.rate(j), 0.0);
        }
    }
    Ok(m)
}

/// A local maximum of β ↦ ‖(iβ − G)^{-1}‖.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolventPeak {
    pub beta: f64,
    pub norm: f64,
    /// Discrete eigenvalue the peak sits next to.
    pub eigenvalue: Complex64,
}

/// Maximizes the resolvent norm near the discrete eigenvalue closest to
/// `seed` by golden-section search over β ∈ Im λ ± 3|Re λ|.
pub fn resolvent_peak(generator: &Generator, seed: Complex64) -> Result<ResolventPeak> {
    let (lambda, _) = generator.eigenpair_near(seed)?;
    let width = 3.0 * lambda.re.abs().max(1e-12 * lambda.im.abs());
    let f = |b: f64| generator.resolvent_norm(b);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (lambda.im - width, lambda.im + width);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..80 {
        if hi - lo <= 1e-10 * lambda.im.abs().max(1.0) {
            break;
        }
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (beta, norm) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    Ok(ResolventPeak {
        beta,
        norm,
        eigenvalue: lambda,
    })
}

/// Resolvent peaks next to the eigenvalues with index `k_min..=k_max`,
/// seeded from the characteristic-equation roots.
pub fn resolvent_peaks(
    model: &ModelConfig,
    generator: &Generator,
    k_min: i64,
    k_max: i64,
) -> Result<Vec<ResolventPeak>> {
    let roots = compute_spectrum(k_min, k_max, model)?;
    roots
        .par_iter()
        .map(|r| resolvent_peak(generator, r.lambda))
        .collect()
}

/// Slope and intercept of ln(peak norm) against ln|β|.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolventFit {
    pub slope: f64,
    pub intercept: f64,
    pub samples: usize,
}

pub fn fit_resolvent_exponent(peaks: &[ResolventPeak]) -> Result<ResolventFit> {
    if peaks.len() < 3 {
        return Err(Error::FitWindow {
            reason: format!("need at least 3 peaks, got {}", peaks.len()),
        });
    }
    let x: Vec<f64> = peaks.iter().map(|p| p.beta.abs().ln()).collect();
    let y: Vec<f64> = peaks.iter().map(|p| p.norm.ln()).collect();
    let (intercept, slope) = linear_fit(&x, &y);
    Ok(ResolventFit {
        slope,
        intercept,
        samples: peaks.len(),
    })
}

/// Writes `lambda,norm` rows.
pub fn write_resolvent_csv<W: Write>(mut out: W, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "lambda,norm")?;
    for (b, n) in rows {
        writeln!(out, "{:.16e},{:.16e}", b, n)?;
    }
    Ok(())
}
