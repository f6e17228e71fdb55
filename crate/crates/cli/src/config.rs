//! Run configuration: flags > environment > config file > defaults.
//!
//! Environment variables for the global options are read by clap itself
//! (`BODYMAP_ATLAS`, `BODYMAP_KB`, `BODYMAP_PROMPTS`, `BODYMAP_PARALLEL`,
//! `BODYMAP_SEED`); backend variables are applied on top of the config file.

use std::path::{Path, PathBuf};

use bodymap_core::defaults;
use bodymap_core::llm::BackendConfig;
use bodymap_core::Parallelism;
use serde::Deserialize;

use crate::error::CliError;

/// Contents of a `--config` file (TOML, or JSON when the extension is `.json`).
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub atlas: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub seed: Option<u64>,
    pub parallel: Option<usize>,
    pub backend: Option<BackendConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut file: ConfigFile = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message())))?
        };
        // Relative paths in a config file are relative to the file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut file.atlas, &mut file.kb, &mut file.prompts].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }
}

/// Global options as parsed from the command line (flags or their env vars).
#[derive(Debug, Default, Clone)]
pub struct GlobalFlags {
    pub config: Option<PathBuf>,
    pub atlas: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub parallel: Option<usize>,
    pub dry_run: bool,
}

/// Backend overrides given as subcommand flags.
#[derive(Debug, Default, Clone)]
pub struct BackendFlags {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub atlas: PathBuf,
    pub kb: PathBuf,
    pub prompts: PathBuf,
    pub parallel: usize,
    pub seed: Option<u64>,
    pub backend: BackendConfig,
    pub dry_run: bool,
}

impl RunConfig {
    pub fn resolve(
        flags: &GlobalFlags,
        seed: Option<u64>,
        backend: &BackendFlags,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let mut backend_config = file.backend.unwrap_or_default();
        backend_config.apply_env(&env);
        let b = backend;
        if let Some(v) = &b.base_url {
            backend_config.base_url = v.clone();
        }
        if let Some(v) = &b.model {
            backend_config.model = v.clone();
        }
        if let Some(v) = b.temperature {
            backend_config.temperature = v;
        }
        if let Some(v) = b.top_p {
            backend_config.top_p = v;
        }
        if let Some(v) = b.timeout_secs {
            backend_config.timeout_secs = v;
        }
        if let Some(v) = b.max_retries {
            backend_config.max_retries = v;
        }
        if let Some(v) = b.max_in_flight {
            backend_config.max_in_flight = v;
        }
        Ok(RunConfig {
            atlas: flags.atlas.clone().or(file.atlas).unwrap_or_else(defaults::atlas_path),
            kb: flags.kb.clone().or(file.kb).unwrap_or_else(defaults::kb_path),
            prompts: flags.prompts.clone().or(file.prompts).unwrap_or_else(defaults::prompts_dir),
            parallel: flags.parallel.or(file.parallel).unwrap_or(0),
            seed: seed.or(file.seed),
            backend: backend_config,
            dry_run: flags.dry_run,
        })
    }

    /// `0` selects the global pool, `1` runs sequentially.
    pub fn parallelism(&self) -> Parallelism {
        match self.parallel {
            0 => Parallelism::Auto,
            n => Parallelism::from_degree(n),
        }
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::usage("a seed is required: pass --seed, set BODYMAP_SEED or add seed to the config file"))
    }

    pub fn require_path(path: &Path, what: &str) -> Result<(), CliError> {
        if path.exists() {
            Ok(())
        } else {
            Err(CliError::config(format!("{what} not found: {}", path.display())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "seed = 4\nparallel = 3\natlas = \"a.json\"\n[backend]\nmodel = \"from-file\"\ntemperature = 0.2\n").unwrap();
        let flags = GlobalFlags { config: Some(cfg), ..Default::default() };
        let env = |k: &str| (k == "BODYMAP_MODEL").then(|| "from-env".to_string());

        let rc = RunConfig::resolve(&flags, None, &BackendFlags::default(), env).unwrap();
        assert_eq!(rc.seed, Some(4));
        assert_eq!(rc.parallel, 3);
        assert_eq!(rc.atlas, dir.path().join("a.json"));
        assert_eq!(rc.backend.model, "from-env");
        assert_eq!(rc.backend.temperature, 0.2);
        assert_eq!(rc.backend.top_p, 0.95);

        let b = BackendFlags { model: Some("from-flag".into()), ..Default::default() };
        let rc = RunConfig::resolve(&flags, Some(9), &b, env).unwrap();
        assert_eq!(rc.seed, Some(9));
        assert_eq!(rc.backend.model, "from-flag");
    }

    #[test]
    fn json_config_and_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        std::fs::write(&cfg, r#"{"seed": 2, "backend": {"max_retries": 1}}"#).unwrap();
        let rc = RunConfig::resolve(&GlobalFlags { config: Some(cfg.clone()), ..Default::default() }, None, &BackendFlags::default(), |_| None)
            .unwrap();
        assert_eq!(rc.seed, Some(2));
        assert_eq!(rc.backend.max_retries, 1);
        std::fs::write(&cfg, r#"{"sed": 2}"#).unwrap();
        let err = RunConfig::resolve(&GlobalFlags { config: Some(cfg), ..Default::default() }, None, &BackendFlags::default(), |_| None)
            .unwrap_err();
        assert_eq!(err.category, "config");
    }
}
