//! Config-driven runner for the fracwave experiments.

pub mod config;
pub mod fieldio;
pub mod manifest;
pub mod run;

use config::{parse_config, ConfigErrors, Experiment};
use manifest::{sha256_hex, RunManifest};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("config is for experiment {in_config}, command line asks for {requested}")]
    ExperimentMismatch { requested: Experiment, in_config: Experiment },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Run(#[from] run::RunError),
}

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Parses, runs and writes the manifest.
pub fn execute(experiment: Experiment, config_path: &Path, overrides: &Overrides) -> Result<RunManifest, CliError> {
    let started_at = chrono::Utc::now();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    let bytes = fs::read(config_path).map_err(io(config_path))?;
    let base_dir = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut config = parse_config(&bytes, &base_dir)?;
    if config.experiment != experiment {
        return Err(CliError::ExperimentMismatch { requested: experiment, in_config: config.experiment });
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    let out_dir = match &overrides.output_dir {
        Some(d) => d.clone(),
        None => base_dir.join(&config.output_dir),
    };
    fs::create_dir_all(&out_dir).map_err(io(&out_dir))?;

    let outcome = run::run(&config, &base_dir, &out_dir)?;
    let mut outputs = outcome.files;
    outputs.push(PathBuf::from(manifest::MANIFEST_NAME));
    let pass = outcome.verdicts.iter().all(|v| v.pass);
    let manifest = RunManifest {
        experiment,
        config_path: config_path.to_path_buf(),
        config_sha256: sha256_hex(&bytes),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        started_at,
        finished_at: chrono::Utc::now(),
        outputs,
        verdicts: outcome.verdicts,
        pass,
    };
    manifest.write(&out_dir).map_err(io(&out_dir))?;
    Ok(manifest)
}
