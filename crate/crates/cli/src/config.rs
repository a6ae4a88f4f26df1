use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use fsfc_core::pipeline::PipelineConfig;
use fsfc_core::Error;

/// Options shared by the commands that run the pipeline.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stratified fraction of rows kept (overrides `preprocessing.subsample`).
    #[arg(long, value_name = "FLOAT")]
    pub subsample: Option<f64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
}

/// Reads a config document; unknown keys are errors naming the key. Data
/// paths are resolved relative to the config file.
pub fn load_config(path: &Path) -> anyhow::Result<PipelineConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: PipelineConfig =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_owned() };
    if !cfg.dataset.train.as_os_str().is_empty() {
        cfg.dataset.train = resolve(&cfg.dataset.train);
    }
    cfg.dataset.test = cfg.dataset.test.as_deref().map(resolve);
    cfg.output.dir = cfg.output.dir.as_deref().map(resolve);
    Ok(cfg)
}

impl RunArgs {
    /// Config file with flag overrides applied.
    pub fn effective(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = load_config(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(f) = self.subsample {
            cfg.preprocessing.subsample = Some(f);
        }
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn out_dir(&self, cfg: &PipelineConfig) -> PathBuf {
        cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Refuses to overwrite any of `files` in `dir` unless `force` is set.
pub fn guard(dir: &Path, files: &[&str], force: bool) -> anyhow::Result<()> {
    if force {
        return Ok(());
    }
    if let Some(found) = files.iter().map(|f| dir.join(f)).find(|p| p.exists()) {
        return Err(Error::Config(format!(
            "{} already exists; pass --force to overwrite",
            found.display()
        ))
        .into());
    }
    Ok(())
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })?;
    Ok(())
}

pub fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(())
}
