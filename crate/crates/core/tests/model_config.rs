use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

use fracdamp::model::{compute_m_tau, derive_zeta, validate_config, ModelParams};
use fracdamp::{BcBranch, GridConfig, ModelConfig, RunConfig};

fn params(alpha_deg: f64, alpha_frac: f64, wp: f64, rho: f64) -> ModelParams {
    ModelParams {
        alpha_deg,
        alpha_frac,
        wp,
        rho,
    }
}

#[test]
fn reference_configuration_is_valid() {
    let v = validate_config(&params(0.5, 0.5, 1.0, 1.0), &GridConfig::default()).unwrap();
    assert_relative_eq!(v.model.zeta, 1.0 / PI, epsilon = 1e-15);
    assert_eq!(v.model.bc_branch, BcBranch::DirichletLeft);
}

#[test]
fn invalid_parameters_are_rejected() {
    let g = GridConfig::default();
    assert!(validate_config(&params(0.5, 0.0, 1.0, 1.0), &g).is_err());
    assert!(validate_config(&params(0.5, 1.2, 1.0, 1.0), &g).is_err());
    assert!(validate_config(&params(0.5, 0.5, 1.0, -1.0), &g).is_err());
    assert!(validate_config(&params(0.5, 0.5, 1.0, 0.0), &g).is_err());
    assert!(validate_config(&params(2.0, 0.5, 1.0, 1.0), &g).is_err());
    assert!(validate_config(&params(0.5, 0.5, -1.0, 1.0), &g).is_err());
    let bad_grid = GridConfig {
        xi_max: 1e-5,
        ..GridConfig::default()
    };
    assert!(validate_config(&params(0.5, 0.5, 1.0, 1.0), &bad_grid).is_err());
}

#[test]
fn branch_split_at_one() {
    assert_eq!(compute_m_tau(0.999).unwrap().1, BcBranch::DirichletLeft);
    assert_eq!(compute_m_tau(1.0).unwrap().1, BcBranch::NeumannFluxLeft);
    assert_eq!(compute_m_tau(1.5).unwrap().1, BcBranch::NeumannFluxLeft);
    assert!(compute_m_tau(2.0).is_err());
}

#[test]
fn direct_damping_at_order_one() {
    let m = ModelConfig::damped(0.5, 1.0, 1.0, 1.0).unwrap();
    assert!(m.is_direct_damping());
    assert_eq!(m.zeta, 0.0);
}

#[test]
fn run_config_file_and_overrides() {
    let dir = std::env::temp_dir().join(format!("fracdamp-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let toml_path = dir.join("run.toml");
    std::fs::write(&toml_path, "alpha_frac = 0.75\nrho = 2.0\n").unwrap();
    let mut cfg = RunConfig::from_path(&toml_path).unwrap();
    cfg.apply_override("model.wp=0.5").unwrap();
    let v = cfg.validate().unwrap();
    assert_eq!(v.model.alpha_frac, 0.75);
    assert_eq!(v.model.wp, 0.5);
    assert_relative_eq!(v.model.zeta, 2.0 * (0.75 * PI).sin() / PI, epsilon = 1e-15);

    let json_path = dir.join("run.json");
    std::fs::write(&json_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(RunConfig::from_path(&json_path).unwrap(), cfg);
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #[test]
    fn zeta_is_linear_in_rho(rho in 1e-3f64..1e3, af in 0.01f64..0.99) {
        let a = derive_zeta(rho, af).unwrap();
        let b = derive_zeta(2.0 * rho, af).unwrap();
        prop_assert!((b - 2.0 * a).abs() <= 4.0 * f64::EPSILON * b);
    }

    #[test]
    fn branch_is_a_function_of_m_tau(alpha in 0.0f64..1.999) {
        let (m, b) = compute_m_tau(alpha).unwrap();
        prop_assert_eq!(b, if m < 1.0 { BcBranch::DirichletLeft } else { BcBranch::NeumannFluxLeft });
    }
}
