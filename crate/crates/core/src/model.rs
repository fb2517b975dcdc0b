//! Physical parameters, derived constants and the weak/strong degeneracy
//! branch for τ(x) = x^α.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Boundary condition at the degenerate endpoint x = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BcBranch {
    /// Weak degeneracy (m_τ < 1): ψ(0) = 0.
    DirichletLeft,
    /// Strong degeneracy (1 ≤ m_τ < 2): (τψ_x)(0) = 0.
    NeumannFluxLeft,
}

impl BcBranch {
    pub fn from_m_tau(m_tau: f64) -> Self {
        if m_tau < 1.0 {
            BcBranch::DirichletLeft
        } else {
            BcBranch::NeumannFluxLeft
        }
    }
}

/// ζ = ρ sin(α̃π)/π, the gain in front of the diffusive boundary term.
pub fn derive_zeta(rho: f64, alpha_frac: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::param("rho", format!("must be > 0, got {rho}")));
    }
    check_alpha_frac(alpha_frac)?;
    if alpha_frac == 1.0 {
        // sin(π) is not exactly zero in floating point
        return Ok(0.0);
    }
    Ok(rho * (alpha_frac * PI).sin() / PI)
}

/// m_τ = sup x|τ'|/τ, which is exactly α for the monomial τ = x^α.
pub fn compute_m_tau(alpha_deg: f64) -> Result<(f64, BcBranch)> {
    if !alpha_deg.is_finite() || alpha_deg < 0.0 {
        return Err(Error::param(
            "alpha_deg",
            format!("must be >= 0, got {alpha_deg}"),
        ));
    }
    if alpha_deg >= 2.0 {
        return Err(Error::UnsupportedDegeneracy { m_tau: alpha_deg });
    }
    Ok((alpha_deg, BcBranch::from_m_tau(alpha_deg)))
}

fn check_alpha_frac(alpha_frac: f64) -> Result<()> {
    if !(alpha_frac > 0.0 && alpha_frac <= 1.0) {
        return Err(Error::param(
            "alpha_frac",
            format!("order must lie in (0, 1], got {alpha_frac}"),
        ));
    }
    Ok(())
}

/// Validated model parameters with their derived constants.
///
/// `rho = 0` is accepted here (the undamped reference problem) even though
/// the damped model requires ρ > 0; in that case ζ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alpha_deg: f64,
    pub alpha_frac: f64,
    pub wp: f64,
    pub rho: f64,
    pub zeta: f64,
    pub m_tau: f64,
    pub bc_branch: BcBranch,
}

impl ModelConfig {
    pub fn new(alpha_deg: f64, alpha_frac: f64, wp: f64, rho: f64) -> Result<Self> {
        let (m_tau, bc_branch) = compute_m_tau(alpha_deg)?;
        check_alpha_frac(alpha_frac)?;
        if !(wp >= 0.0) || !wp.is_finite() {
            return Err(Error::param("wp", format!("must be >= 0, got {wp}")));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::param("rho", format!("must be > 0, got {rho}")));
        }
        let zeta = if rho == 0.0 {
            0.0
        } else {
            derive_zeta(rho, alpha_frac)?
        };
        Ok(ModelConfig {
            alpha_deg,
            alpha_frac,
            wp,
            rho,
            zeta,
            m_tau,
            bc_branch,
        })
    }

    /// Strictly damped model: additionally requires ρ > 0.
    pub fn damped(alpha_deg: f64, alpha_frac: f64, wp: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::param("rho", format!("must be > 0, got {rho}")));
        }
        Self::new(alpha_deg, alpha_frac, wp, rho)
    }

    /// Same physics with a different damping gain.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.alpha_deg, self.alpha_frac, self.wp, rho)
    }

    /// α̃ = 1 uses the direct boundary term iρψ(1) instead of the memory.
    pub fn is_direct_damping(&self) -> bool {
        self.alpha_frac == 1.0
    }

    /// ν_α = (1 − α)/(2 − α).
    pub fn nu_alpha(&self) -> f64 {
        (1.0 - self.alpha_deg) / (2.0 - self.alpha_deg)
    }

    pub fn tau(&self, x: f64) -> f64 {
        tau(x, self.alpha_deg)
    }
}

/// τ(x) = x^α, with τ(0) = 1 when α = 0.
pub fn tau(x: f64, alpha_deg: f64) -> f64 {
    if alpha_deg == 0.0 {
        1.0
    } else {
        x.powf(alpha_deg)
    }
}

/// Discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_x: usize,
    pub n_xi: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub dt: f64,
    pub t_final: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_x: 256,
            n_xi: 200,
            xi_min: 1e-4,
            xi_max: 1e4,
            dt: 1e-3,
            t_final: 200.0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_x < 8 {
            return Err(Error::param(
                "n_x",
                format!("must be >= 8, got {}", self.n_x),
            ));
        }
        if self.n_xi < 16 {
            return Err(Error::param(
                "n_xi",
                format!("must be >= 16, got {}", self.n_xi),
            ));
        }
        if !(self.xi_min > 0.0) || !self.xi_min.is_finite() {
            return Err(Error::param(
                "xi_min",
                format!("must be > 0, got {}", self.xi_min),
            ));
        }
        if !(self.xi_max > self.xi_min) || !self.xi_max.is_finite() {
            return Err(Error::param(
                "xi_max",
                format!("must exceed xi_min = {}, got {}", self.xi_min, self.xi_max),
            ));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::param(
                "t_final",
                format!("must be > 0, got {}", self.t_final),
            ));
        }
        Ok(())
    }
}

/// Raw model parameters as they appear in a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha_deg: f64,
    pub alpha_frac: f64,
    pub wp: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
}

/// Checks every invariant of the damped model and the grid, and fills in
/// the derived constants.
pub fn validate_config(params: &ModelParams, grid: &GridConfig) -> Result<ValidatedConfig> {
    let model = ModelConfig::damped(params.alpha_deg, params.alpha_frac, params.wp, params.rho)?;
    grid.validate()?;
    Ok(ValidatedConfig { model, grid: *grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zeta_examples() {
        assert_relative_eq!(derive_zeta(1.0, 0.5).unwrap(), 1.0 / PI, epsilon = 1e-15);
        assert_eq!(derive_zeta(1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(derive_zeta(2.0, 0.25).unwrap(), 0.4501582, epsilon = 1e-7);
        assert!(derive_zeta(-1.0, 0.5).is_err());
        assert!(derive_zeta(1.0, 0.0).is_err());
        assert!(derive_zeta(1.0, 1.5).is_err());
    }

    #[test]
    fn m_tau_examples() {
        assert_eq!(compute_m_tau(0.5).unwrap(), (0.5, BcBranch::DirichletLeft));
        assert_eq!(
            compute_m_tau(1.0).unwrap(),
            (1.0, BcBranch::NeumannFluxLeft)
        );
        assert!(matches!(
            compute_m_tau(2.0),
            Err(Error::UnsupportedDegeneracy { .. })
        ));
        assert!(compute_m_tau(-0.1).is_err());
    }

    #[test]
    fn validate_examples() {
        let grid = GridConfig::default();
        let ok = validate_config(
            &ModelParams {
                alpha_deg: 0.5,
                alpha_frac: 0.5,
                wp: 1.0,
                rho: 1.0,
            },
            &grid,
        )
        .unwrap();
        assert_relative_eq!(ok.model.zeta, 1.0 / PI, epsilon = 1e-15);
        assert_eq!(ok.model.bc_branch, BcBranch::DirichletLeft);

        let err = validate_config(
            &ModelParams {
                alpha_deg: 0.5,
                alpha_frac: 0.0,
                wp: 1.0,
                rho: 1.0,
            },
            &grid,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                field: "alpha_frac",
                ..
            }
        ));

        let err = validate_config(
            &ModelParams {
                alpha_deg: 0.5,
                alpha_frac: 0.5,
                wp: 1.0,
                rho: -1.0,
            },
            &grid,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parameter { field: "rho", .. }));

        let bad_grid = GridConfig {
            xi_min: 10.0,
            xi_max: 1.0,
            ..grid
        };
        let err = validate_config(
            &ModelParams {
                alpha_deg: 0.5,
                alpha_frac: 0.5,
                wp: 1.0,
                rho: 1.0,
            },
            &bad_grid,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                field: "xi_max",
                ..
            }
        ));
    }

    proptest! {
        #[test]
        fn branch_splits_exactly_at_one(alpha in 0.0f64..2.0) {
            let (m, branch) = compute_m_tau(alpha).unwrap();
            prop_assert_eq!(m, alpha);
            prop_assert_eq!(branch == BcBranch::DirichletLeft, alpha < 1.0);
        }

        #[test]
        fn zeta_is_linear_in_rho(rho in 1e-3f64..1e3, a in 0.01f64..=1.0) {
            let z1 = derive_zeta(rho, a).unwrap();
            let z2 = derive_zeta(2.0 * rho, a).unwrap();
            prop_assert!((z2 - 2.0 * z1).abs() <= 4.0 * f64::EPSILON * z2.abs().max(1e-300));
        }
    }
}
