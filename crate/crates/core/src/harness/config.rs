//! Run configuration: a TOML file plus environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::extraction::SanitizeConfig;
use crate::gateway::{EndpointConfig, GatewayConfig, ModelRole};
use crate::orchestrator::RunConfig;
use crate::verifier::LeanConfig;

pub const ENV_PREFIX: &str = "PROVER_AGENT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    /// Problems worked on concurrently.
    pub problem_parallelism: usize,
    pub sanitize: SanitizeConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            problem_parallelism: 4,
            sanitize: SanitizeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub gateway: GatewayConfig,
    pub lean: LeanConfig,
    pub run: RunConfig,
    pub harness: HarnessConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("environment variable {var}: {reason}")]
    Env { var: String, reason: String },
}

fn env_role(role: ModelRole) -> &'static str {
    match role {
        ModelRole::InformalReasoner => "INFORMAL_REASONER",
        ModelRole::FormalProver => "FORMAL_PROVER",
        ModelRole::Autoformalizer => "AUTOFORMALIZER",
    }
}

fn parse_num<T: std::str::FromStr>(var: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Env {
        var: var.to_string(),
        reason: format!("`{value}` is not a number"),
    })
}

impl Config {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            source: Box::new(e),
        })
    }

    /// Reads `path` (defaults when `None`) and applies the process
    /// environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text, p)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    /// Applies `PROVER_AGENT_*` overrides looked up through `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        for role in ModelRole::ALL {
            let key = |field: &str| format!("{ENV_PREFIX}_{}_{field}", env_role(role));
            let base_url = lookup(&key("BASE_URL"));
            let model = lookup(&key("MODEL"));
            let api_key = lookup(&key("API_KEY"));
            if base_url.is_none() && model.is_none() && api_key.is_none() {
                continue;
            }
            let endpoint = self.gateway.endpoint_mut(role).get_or_insert_with(EndpointConfig::default);
            if let Some(v) = base_url {
                endpoint.base_url = v;
            }
            if let Some(v) = model {
                endpoint.model = v;
            }
            if let Some(v) = api_key {
                endpoint.api_key = Some(v);
            }
        }
        let var = |name: &str| (format!("{ENV_PREFIX}_{name}"), lookup(&format!("{ENV_PREFIX}_{name}")));
        if let (_, Some(v)) = var("LEAN_WORKSPACE") {
            self.lean.workspace = PathBuf::from(v);
        }
        if let (k, Some(v)) = var("CHECK_TIMEOUT_SECS") {
            self.run.check_timeout_secs = parse_num(&k, &v)?;
        }
        if let (k, Some(v)) = var("N_INIT") {
            self.run.budget.n_init = parse_num(&k, &v)?;
        }
        if let (k, Some(v)) = var("N_REFINE") {
            self.run.budget.n_refine = parse_num(&k, &v)?;
        }
        if let (k, Some(v)) = var("PARALLELISM") {
            self.harness.problem_parallelism = parse_num(&k, &v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn defaults_without_file() {
        let cfg = Config::default();
        assert_eq!(cfg.run.budget.n_init, 100);
        assert_eq!(cfg.run.check_timeout_secs, 300);
        assert_eq!(cfg.gateway.retries, 3);
        assert_eq!(cfg.harness.problem_parallelism, 4);
    }

    #[test]
    fn toml_then_env() {
        let text = r#"
[gateway.formal_prover]
base_url = "http://prover:8000/v1"
model = "prover-7b"

[run.budget]
n_init = 8

[lean]
workspace = "/srv/lean"
"#;
        let mut cfg = Config::from_toml(text, Path::new("c.toml")).unwrap();
        assert_eq!(cfg.run.budget.n_init, 8);
        assert_eq!(cfg.run.budget.n_refine, 300);
        let env: HashMap<&str, &str> = [
            ("PROVER_AGENT_FORMAL_PROVER_API_KEY", "k"),
            ("PROVER_AGENT_INFORMAL_REASONER_BASE_URL", "http://informal/v1"),
            ("PROVER_AGENT_N_REFINE", "12"),
            ("PROVER_AGENT_LEAN_WORKSPACE", "/other"),
        ]
        .into();
        cfg.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        let prover = cfg.gateway.formal_prover.as_ref().unwrap();
        assert_eq!(prover.model, "prover-7b");
        assert_eq!(prover.api_key.as_deref(), Some("k"));
        assert_eq!(cfg.gateway.informal_reasoner.as_ref().unwrap().base_url, "http://informal/v1");
        assert!(cfg.gateway.autoformalizer.is_none());
        assert_eq!(cfg.run.budget.n_refine, 12);
        assert_eq!(cfg.lean.workspace, PathBuf::from("/other"));
    }

    #[test]
    fn bad_numbers_are_reported() {
        let mut cfg = Config::default();
        let err = cfg.apply_env(|k| (k == "PROVER_AGENT_N_INIT").then(|| "many".to_string())).unwrap_err();
        assert!(matches!(err, ConfigError::Env { ref var, .. } if var == "PROVER_AGENT_N_INIT"));
    }
}
