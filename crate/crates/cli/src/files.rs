//! On-disk formats: JSON-lines scenario files, the JSON training config,
//! checkpoint files with their manifest, and the CSV tables.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use colorbatch_core::plant::PlantConfig;
use colorbatch_core::reward::RewardConfig;
use colorbatch_core::sac::{EpochRecord, SacConfig, TrainOutcome};
use colorbatch_core::scenario::{Scenario, ScenarioSource};

/// One scenario per line: `{"id": 1, "seed": 42, "colors": [2, 3, ...]}`.
pub fn write_scenarios(path: &Path, scenarios: &[Scenario]) -> Result<()> {
    let mut out = String::new();
    for s in scenarios {
        out.push_str(&serde_json::to_string(s)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut scenarios = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Scenario = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        scenarios.push(s);
    }
    if scenarios.is_empty() {
        bail!("no scenarios in {}", path.display());
    }
    Ok(scenarios)
}

/// Where training episodes come from, as configured on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceConfig {
    Distribution { probs: Vec<f64>, len: usize },
    File { path: PathBuf },
}

impl SourceConfig {
    pub fn load(&self) -> Result<ScenarioSource> {
        Ok(match self {
            SourceConfig::Distribution { probs, len } => ScenarioSource::Distribution {
                probs: probs.clone(),
                len: *len,
            },
            SourceConfig::File { path } => ScenarioSource::Fixed(read_scenarios(path)?),
        })
    }
}

fn default_source() -> SourceConfig {
    SourceConfig::Distribution {
        probs: colorbatch_core::scenario::DEFAULT_DISTRIBUTION.to_vec(),
        len: 100,
    }
}

/// The `train` subcommand's config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub sac: SacConfig,
    #[serde(default = "default_source")]
    pub scenario_source: SourceConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            plant: PlantConfig::default(),
            reward: RewardConfig::default(),
            sac: SacConfig::default(),
            scenario_source: default_source(),
        }
    }
}

pub fn read_train_config(path: &Path) -> Result<TrainConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Manifest entry for one checkpoint file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub path: String,
    pub epoch: usize,
    pub eval_mean_changes: f64,
}

/// Sidecar describing a training run's artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub architecture: Vec<usize>,
    pub plant: PlantConfig,
    pub reward: RewardConfig,
    pub sac: SacConfig,
    pub checkpoints: Vec<CheckpointEntry>,
    pub final_checkpoint: String,
}

pub const LOG_HEADER: &str = "epoch,env_steps,mean_episode_reward,mean_color_changes,alpha,\
                              actor_loss,critic1_loss,critic2_loss,alpha_loss";

pub fn log_row(r: &EpochRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.epoch,
        r.env_steps,
        r.mean_episode_reward,
        r.mean_color_changes,
        r.alpha,
        r.actor_loss,
        r.critic1_loss,
        r.critic2_loss,
        r.alpha_loss
    )
}

pub fn write_training_log(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let mut text = String::from(LOG_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&log_row(r));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Persist a run: checkpoints, final network, CSV log and manifest.
/// Returns the manifest.
pub fn write_run(
    dir: &Path,
    config: &TrainConfig,
    outcome: &TrainOutcome,
) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for ckpt in &outcome.checkpoints {
        let name = format!("ckpt_epoch_{:05}.ckpt", ckpt.epoch);
        fs::write(dir.join(&name), &ckpt.actor_bytes)?;
        entries.push(CheckpointEntry {
            path: name,
            epoch: ckpt.epoch,
            eval_mean_changes: ckpt.eval_mean_changes,
        });
    }
    fs::write(dir.join("final.ckpt"), &outcome.final_actor_bytes)?;
    write_training_log(&dir.join("log.csv"), &outcome.records)?;

    let mut dims = vec![config.plant.observation_len()];
    dims.extend_from_slice(&config.sac.hidden_sizes);
    dims.push(config.plant.action_count());
    let manifest = RunManifest {
        architecture: dims,
        plant: config.plant,
        reward: config.reward,
        sac: config.sac.clone(),
        checkpoints: entries,
        final_checkpoint: "final.ckpt".into(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(manifest)
}

/// Inputs to the `eval` subcommand when driving an ensemble from a file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub checkpoints: Vec<PathBuf>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// `val > threshold` when true (the default); `>=` otherwise.
    #[serde(default = "default_strict")]
    pub strict_threshold: bool,
}

fn default_strict() -> bool {
    true
}

pub fn read_ensemble_manifest(path: &Path) -> Result<EnsembleManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Results table: one row per scenario per contender.
pub const RESULTS_HEADER: &str = "scenario_id,contender,color_changes";

pub fn write_results_csv(path: &Path, rows: &[(u32, &str, usize)]) -> Result<()> {
    let mut text = String::from(RESULTS_HEADER);
    text.push('\n');
    for (id, contender, count) in rows {
        text.push_str(&format!("{id},{contender},{count}\n"));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parsed results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario_id: u32,
    pub contender: String,
    pub color_changes: usize,
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != RESULTS_HEADER {
                bail!("{}: unexpected header {line:?}", path.display());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let (id, contender, count) = (
            parts.next().unwrap_or_default(),
            parts.next().unwrap_or_default(),
            parts.next().unwrap_or_default(),
        );
        rows.push(ResultRow {
            scenario_id: id
                .trim()
                .parse()
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?,
            contender: contender.trim().to_string(),
            color_changes: count
                .trim()
                .parse()
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?,
        });
    }
    if rows.is_empty() {
        bail!("no result rows in {}", path.display());
    }
    Ok(rows)
}

/// Line-buffered CSV appender used while training runs.
pub struct CsvLogWriter {
    file: fs::File,
}

impl CsvLogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(file, "{LOG_HEADER}")?;
        Ok(CsvLogWriter { file })
    }

    pub fn append(&mut self, record: &EpochRecord) -> Result<()> {
        writeln!(self.file, "{}", log_row(record))?;
        Ok(())
    }
}
