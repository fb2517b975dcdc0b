use serde::Serialize;
use std::path::Path;

use fracdamp::spectral::AsymptoticConstants;
use fracdamp::{BcBranch, ModelConfig, RunConfig};

#[derive(Serialize)]
pub struct Derived {
    pub zeta: f64,
    pub m_tau: f64,
    pub bc_branch: BcBranch,
    /// Absent on the strong branch.
    pub asymptotic: Option<AsymptoticConstants>,
}

impl Derived {
    pub fn of(model: &ModelConfig) -> Self {
        Derived {
            zeta: model.zeta,
            m_tau: model.m_tau,
            bc_branch: model.bc_branch,
            asymptotic: AsymptoticConstants::new(model).ok(),
        }
    }
}

#[derive(Serialize)]
struct Versions {
    cli: &'static str,
    core: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    versions: Versions,
    config: &'a RunConfig,
    derived: Derived,
    artifacts: &'a [String],
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    extra: serde_json::Value,
}

pub fn write(
    out: &Path,
    command: &str,
    cfg: &RunConfig,
    model: &ModelConfig,
    artifacts: &[String],
    extra: serde_json::Value,
) -> anyhow::Result<()> {
    let m = Manifest {
        command,
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: fracdamp::VERSION,
        },
        config: cfg,
        derived: Derived::of(model),
        artifacts,
        extra,
    };
    std::fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&m)? + "\n",
    )?;
    Ok(())
}
