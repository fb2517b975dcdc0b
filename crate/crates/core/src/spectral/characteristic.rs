//! The characteristic equation of the damped generator on the weak branch,
//! its asymptotic roots and their refinement.
//!
//! With λ = iγ² and z = 2iγ/(2−α), nontrivial solutions of the eigenvalue
//! problem exist exactly when
//!
//! ```text
//! f(γ) = (1−α) J_ν(z) − iγ J_{ν+1}(z) − iρ (λ+℘)^{α̃−1} J_ν(z) = 0,   ν = (1−α)/(2−α).
//! ```
//!
//! f(−γ) = e^{iπν} f(γ), so roots come in pairs ±γ sharing one λ; the seeds
//! below pick the representative with Im γ < 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use super::bessel::bessel_j;
use crate::error::{Error, Result};
use crate::model::{BcBranch, ModelConfig};

/// Which of the two asymptotic regimes applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AsymptoticCase {
    /// α̃ > ½: damping enters at order k^{-(2−2α̃)} directly.
    Above,
    /// α̃ < ½: an extra 1/k term precedes the damping term.
    Below,
    /// α̃ = ½, where neither expansion is stated.
    Boundary,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticConstants {
    pub nu_alpha: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Only used below ½.
    pub c4: Option<f64>,
    pub case: AsymptoticCase,
}

impl AsymptoticConstants {
    pub fn new(model: &ModelConfig) -> Result<Self> {
        if model.alpha_deg >= 1.0 {
            return Err(strong_branch_error());
        }
        let a = model.alpha_deg;
        let nu = (1.0 - a) / (2.0 - a);
        let c0 = -(2.0 - a) / 2.0;
        let c1 = c0 * (nu / 2.0 + 1.25);
        let s = (0.5 + nu) * (1.5 + nu);
        let c2 = (2.0 - a) / 4.0 * (s - 4.0 * (1.0 - a) / (2.0 - a));
        let c_damp = -model.rho * (2.0 / (2.0 - a)).powf(2.0 - 2.0 * model.alpha_frac);
        let case = if model.alpha_frac > 0.5 {
            AsymptoticCase::Above
        } else if model.alpha_frac < 0.5 {
            AsymptoticCase::Below
        } else {
            AsymptoticCase::Boundary
        };
        let (c3, c4) = match case {
            AsymptoticCase::Above => (c_damp, None),
            AsymptoticCase::Below | AsymptoticCase::Boundary => {
                let c3 =
                    -(2.0 - a) / 4.0 * (-s / 4.0 * (2.0 - a) + (1.0 - a)) * 2.0 * c1 / (c0 * c0);
                (c3, Some(c_damp))
            }
        };
        Ok(AsymptoticConstants {
            nu_alpha: nu,
            c0,
            c1,
            c2,
            c3,
            c4,
            case,
        })
    }

    /// The constant multiplying the damping term: C3 above ½, C4 below.
    pub fn c_damp(&self) -> f64 {
        match self.case {
            AsymptoticCase::Above => self.c3,
            _ => self.c4.unwrap_or(f64::NAN),
        }
    }

    /// Limit of k^{2−2α̃}·|Re λ_k| predicted by the expansion.
    pub fn re_constant(&self, alpha_frac: f64) -> f64 {
        let e = 2.0 - 2.0 * alpha_frac;
        2.0 * (PI * (1.0 - alpha_frac) / 2.0).cos() * self.c0 * self.c_damp() / PI.powf(e)
    }
}

fn strong_branch_error() -> Error {
    Error::Unsupported {
        what: "characteristic equation",
        reason: "only derived for the weak branch 0 <= alpha_deg < 1".into(),
    }
}

fn check_weak(model: &ModelConfig) -> Result<()> {
    if model.bc_branch != BcBranch::DirichletLeft {
        return Err(strong_branch_error());
    }
    Ok(())
}

/// f(γ) for the model's α, α̃, ℘, ρ.
pub fn char_function(gamma: Complex64, model: &ModelConfig) -> Result<Complex64> {
    check_weak(model)?;
    let a = model.alpha_deg;
    let nu = model.nu_alpha();
    let i = Complex64::new(0.0, 1.0);
    let z = i * gamma * (2.0 / (2.0 - a));
    let lambda = i * gamma * gamma;
    let shifted = lambda + model.wp;
    let damp = if model.rho == 0.0 {
        Complex64::new(0.0, 0.0)
    } else if model.is_direct_damping() {
        Complex64::new(model.rho, 0.0)
    } else {
        if shifted.im == 0.0 && shifted.re <= 0.0 {
            return Err(Error::BranchCut {
                what: "(lambda + wp)^(alpha_frac - 1)",
                arg: lambda,
            });
        }
        shifted.powf(model.alpha_frac - 1.0) * model.rho
    };
    let j0 = bessel_j(nu, z)?;
    let j1 = bessel_j(nu + 1.0, z)?;
    Ok(j0 * (1.0 - a) - i * gamma * j1 - i * damp * j0)
}

/// γ_k^0 = −(2−α)/2 · i (k + ν/2 + 5/4) π.
pub fn asymptotic_root(k: i64, alpha_deg: f64) -> Complex64 {
    let nu = (1.0 - alpha_deg) / (2.0 - alpha_deg);
    let c0 = -(2.0 - alpha_deg) / 2.0;
    Complex64::new(0.0, c0 * (k as f64 + nu / 2.0 + 1.25) * PI)
}

/// Finite part of the large-k expansion of λ_k.
pub fn asymptotic_eigenvalue(
    k: i64,
    model: &ModelConfig,
    consts: &AsymptoticConstants,
) -> Result<Complex64> {
    if k < 1 {
        return Err(Error::param("k", format!("must be >= 1, got {k}")));
    }
    if consts.case == AsymptoticCase::Boundary {
        return Err(Error::Unsupported {
            what: "eigenvalue expansion",
            reason: "alpha_frac = 1/2 separates the two asymptotic cases".into(),
        });
    }
    let kf = k as f64;
    let AsymptoticConstants { c0, c1, c2, c3, .. } = *consts;
    let mut bracket = c0 * c0 * (kf * PI).powi(2)
        + c1 * c1 * PI * PI
        + 2.0 * c0 * c1 * kf * PI * PI
        + 2.0 * c0 * c2;
    if consts.case == AsymptoticCase::Below {
        bracket += (2.0 * c0 * c3 + 2.0 * c1 * c2) / kf;
    }
    let e = 2.0 - 2.0 * model.alpha_frac;
    let phase = Complex64::from_polar(1.0, PI * (1.0 - model.alpha_frac) / 2.0);
    let damping = phase * (2.0 * c0 * consts.c_damp() / (kf * PI).powf(e));
    Ok(Complex64::new(0.0, -bracket) - damping)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenvalueEstimate {
    pub k: i64,
    pub gamma: Complex64,
    pub lambda: Complex64,
    pub residual: f64,
    pub iterations: usize,
    /// The root left the ball of radius 2/√k around its seed.
    pub flagged: bool,
}

pub const NEWTON_TOLERANCE: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

fn newton(seed: Complex64, model: &ModelConfig) -> Result<(Complex64, f64, usize)> {
    let mut g = seed;
    let mut fg = char_function(g, model)?;
    let mut best = (g, fg.norm());
    for it in 0..NEWTON_MAX_ITER {
        if fg.norm() <= NEWTON_TOLERANCE {
            return Ok((g, fg.norm(), it));
        }
        let h = 1e-6 * g.norm().max(1.0);
        let d = (char_function(g + h, model)? - char_function(g - h, model)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.re.is_finite() {
            break;
        }
        let step = fg / d;
        let next = g - step;
        let f_next = char_function(next, model)?;
        g = next;
        fg = f_next;
        if fg.norm() < best.1 {
            best = (g, fg.norm());
        }
        // stagnation: tiny step without reaching tolerance
        if step.norm() < 1e-15 * g.norm().max(1.0) && fg.norm() > NEWTON_TOLERANCE {
            break;
        }
    }
    if fg.norm() <= NEWTON_TOLERANCE {
        return Ok((g, fg.norm(), NEWTON_MAX_ITER));
    }
    Err(Error::RootLoss {
        seed,
        last: best.0,
        residual: best.1,
    })
}

fn muller(seed: Complex64, model: &ModelConfig) -> Result<(Complex64, f64, usize)> {
    let h = 1e-3 * seed.norm().max(1.0);
    let mut x0 = seed - h;
    let mut x1 = seed + h;
    let mut x2 = seed;
    let mut f0 = char_function(x0, model)?;
    let mut f1 = char_function(x1, model)?;
    let mut f2 = char_function(x2, model)?;
    for it in 0..4 * NEWTON_MAX_ITER {
        if f2.norm() <= NEWTON_TOLERANCE {
            return Ok((x2, f2.norm(), it));
        }
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        let d0 = (f1 - f0) / h0;
        let d1 = (f2 - f1) / h1;
        let a = (d1 - d0) / (h1 + h0);
        let b = a * h1 + d1;
        let disc = (b * b - a * f2 * 4.0).sqrt();
        let den = if (b + disc).norm() > (b - disc).norm() {
            b + disc
        } else {
            b - disc
        };
        if den.norm() == 0.0 {
            break;
        }
        let x3 = x2 - f2 * 2.0 / den;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        x2 = x3;
        f2 = char_function(x2, model)?;
    }
    if f2.norm() <= NEWTON_TOLERANCE {
        return Ok((x2, f2.norm(), 4 * NEWTON_MAX_ITER));
    }
    Err(Error::RootLoss {
        seed,
        last: x2,
        residual: f2.norm(),
    })
}

/// Newton from `seed` (Muller if Newton stalls) to |f| ≤ 1e-10.
pub fn refine_root(seed: Complex64, k: i64, model: &ModelConfig) -> Result<EigenvalueEstimate> {
    let (g, residual, iterations) = match newton(seed, model) {
        Ok(r) => r,
        Err(_) => muller(seed, model)?,
    };
    let r_k = 1.0 / (k.unsigned_abs().max(1) as f64).sqrt();
    let flagged = (g - seed).norm() > 2.0 * r_k;
    if flagged {
        log::warn!(
            "root for k = {k} moved {:.3e} from its seed (2 r_k = {:.3e})",
            (g - seed).norm(),
            2.0 * r_k
        );
    }
    Ok(EigenvalueEstimate {
        k,
        gamma: g,
        lambda: Complex64::new(0.0, 1.0) * g * g,
        residual,
        iterations,
        flagged,
    })
}

/// Refined roots for k_min..=k_max, sorted by |Im λ|.
pub fn compute_spectrum(
    k_min: i64,
    k_max: i64,
    model: &ModelConfig,
) -> Result<Vec<EigenvalueEstimate>> {
    if k_min < 1 {
        return Err(Error::param("k_min", format!("must be >= 1, got {k_min}")));
    }
    check_weak(model)?;
    let mut out = (k_min..=k_max)
        .into_par_iter()
        .map(|k| refine_root(asymptotic_root(k, model.alpha_deg), k, model))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.lambda.im.abs().total_cmp(&b.lambda.im.abs()));
    Ok(out)
}

#[derive(Serialize)]
struct SpectrumRow {
    k: i64,
    re_gamma: f64,
    im_gamma: f64,
    re_lambda: f64,
    im_lambda: f64,
    residual: f64,
}

/// `[{k, re_gamma, im_gamma, re_lambda, im_lambda, residual}]`.
pub fn spectrum_to_json(spectrum: &[EigenvalueEstimate]) -> Result<String> {
    let rows: Vec<SpectrumRow> = spectrum
        .iter()
        .map(|e| SpectrumRow {
            k: e.k,
            re_gamma: e.gamma.re,
            im_gamma: e.gamma.im,
            re_lambda: e.lambda.re,
            im_lambda: e.lambda.im,
            residual: e.residual,
        })
        .collect();
    serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))
}
