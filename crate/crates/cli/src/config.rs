//! TOML run configuration and initial conditions.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use vsrd::certifier::CertifyOptions;
use vsrd::discretization::CoupledOperator;
use vsrd::geometry::GeometrySpec;
use vsrd::model::ModelSpec;
use vsrd::network::NetworkFile;
use vsrd::timestepper::TimeSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub geometry: GeometrySpec,
    pub time: Option<TimeSpec>,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub equilibrium: EquilibriumConfig,
    #[serde(default)]
    pub certify: CertifyOptions,
    /// Check the run against the certified rate; a violation exits with 4.
    #[serde(default)]
    pub check_certificate: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Uniform {
        #[serde(default = "one")]
        mass: f64,
    },
    /// Independent uniform draws in `[0.1, 1)`, rescaled to `mass`.
    RandomPositive {
        #[serde(default = "one")]
        mass: f64,
    },
    /// JSON array with one entry per unknown; relative to the config file.
    File { path: PathBuf },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Uniform { mass: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumMethod {
    #[default]
    Kernel,
    Picard,
    /// Both routes, reporting their distance.
    Both,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    #[serde(default)]
    pub method: EquilibriumMethod,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.model.validate().map_err(|e| CliError::Config(format!("[model]: {e}")))?;
        cfg.geometry.validate().map_err(|e| CliError::Config(format!("[geometry]: {e}")))?;
        if let Some(t) = &cfg.time {
            t.validate().map_err(|e| CliError::Config(format!("[time]: {e}")))?;
        }
        cfg.certify.grid.validate().map_err(|e| CliError::Config(format!("[certify.grid]: {e}")))?;
        match &mut cfg.initial {
            InitialCondition::Uniform { mass } | InitialCondition::RandomPositive { mass } => {
                if !(mass.is_finite() && *mass > 0.0) {
                    return Err(CliError::Config(format!("[initial]: mass = {mass} must be positive")));
                }
            }
            InitialCondition::File { path: p } => {
                if p.is_relative() {
                    *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn time(&self) -> Result<TimeSpec, CliError> {
        self.time.ok_or_else(|| CliError::Config("missing [time] table".into()))
    }
}

impl InitialCondition {
    pub fn build(&self, op: &CoupledOperator, seed: u64) -> Result<Vec<f64>, CliError> {
        let rescale = |mut u: Vec<f64>, mass: f64| {
            let m = op.total_mass(&u);
            u.iter_mut().for_each(|v| *v *= mass / m);
            u
        };
        match self {
            InitialCondition::Uniform { mass } => Ok(op.uniform_state(*mass)),
            InitialCondition::RandomPositive { mass } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = (0..op.dim()).map(|_| rng.random_range(0.1..1.0)).collect();
                Ok(rescale(u, *mass))
            }
            InitialCondition::File { path } => {
                let u: Vec<f64> = serde_json::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                op.layout.check(&u).map_err(|e| CliError::Config(format!("[initial] {}: {e}", path.display())))?;
                if u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(CliError::Config(format!("[initial] {}: entries must be finite and nonnegative", path.display())));
                }
                if !(op.total_mass(&u) > 0.0) {
                    return Err(CliError::Config(format!("[initial] {}: zero mass", path.display())));
                }
                Ok(u)
            }
        }
    }
}

/// A network given as JSON (by extension) or TOML.
pub fn load_network(path: &Path) -> Result<NetworkFile, CliError> {
    let text = read(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
            [model]
            kind = "lgl"
            alpha = 1.0
            beta = 1.0
            gamma = 1.0
            lambda = 1.0
            sigma = 1.0
            xi = 1.0
            d_l = 1.0
            d_p = 1.0
            d_ls = 1.0
            d_ps = 1.0

            [geometry]
            kind = "disk"
            radius = 1.0
            n_r = 8
            "#,
        )
        .unwrap();
        assert_eq!(cfg.geometry.n_theta, 16);
        assert!(matches!(cfg.initial, InitialCondition::Uniform { mass } if mass == 1.0));
        assert_eq!(cfg.certify.grid.points, 40);
        assert!(cfg.time.is_none());
    }

    #[test]
    fn unknown_field_names_the_key() {
        let err = toml::from_str::<RunConfig>("bogus = 1\n[model]\nkind = \"jak\"\n").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }
}
