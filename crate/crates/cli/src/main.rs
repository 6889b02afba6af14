//! Command-line front end: scenario generation, heuristic baseline runs,
//! training, model/ensemble evaluation, the exhaustive oracle, statistics
//! and report emission, plus the HTTP simulator service.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use colorbatch_core::ensemble::{evaluate_ensemble, Ensemble};
use colorbatch_core::heuristics::{self, default_fill_target};
use colorbatch_core::neural::DenseNet;
use colorbatch_core::plant::{color_change_count, Color, PlantConfig};
use colorbatch_core::sac::{self, EpochRecord, EvalRecord, TrainObserver};
use colorbatch_core::scenario::{generate_scenarios, Scenario, DEFAULT_DISTRIBUTION};
use colorbatch_core::search::oracle_min_changes;
use colorbatch_core::stats::{one_sample_t, summarize, StatsError};

use colorbatch::{files, report, server};

#[derive(Parser)]
#[command(name = "colorbatch", version, about = "Color-batching re-sequencing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct PlantArgs {
    /// Number of buffer lanes.
    #[arg(long, default_value_t = 5)]
    buffers: usize,
    /// Slots per lane.
    #[arg(long, default_value_t = 5)]
    depth: usize,
    /// Number of paint colors.
    #[arg(long, default_value_t = 6)]
    colors: u8,
}

impl PlantArgs {
    fn config(&self) -> PlantConfig {
        PlantConfig::new(self.buffers, self.depth, self.colors)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded scenarios from a color distribution (JSON lines).
    Generate {
        /// Comma-separated color probabilities (defaults to the production mix).
        #[arg(long, value_delimiter = ',')]
        dist: Option<Vec<f64>>,
        /// Number of scenarios.
        #[arg(short, long, default_value_t = 30)]
        n: usize,
        /// Cars per scenario.
        #[arg(long, default_value_t = 100)]
        len: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the heuristic baseline over a scenario file.
    Baseline {
        #[arg(long)]
        scenarios: PathBuf,
        #[command(flatten)]
        plant: PlantArgs,
        /// Buffer inventory built before emissions start (defaults to the
        /// calibrated value for the plant size).
        #[arg(long)]
        fill_target: Option<usize>,
        /// Results CSV (defaults to stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Train a masked discrete soft actor-critic policy.
    Train {
        /// JSON config file; omit for the default full-scale setup.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for checkpoints, log.csv and manifest.json.
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's epoch count.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate checkpoints (as an ensemble) over a scenario file.
    Eval {
        /// Checkpoint file(s); repeat for an ensemble.
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// Or an ensemble manifest JSON listing checkpoints and weights.
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long)]
        scenarios: PathBuf,
        #[command(flatten)]
        plant: PlantArgs,
        /// Contender name used in the results CSV.
        #[arg(long, default_value = "ensemble")]
        name: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive minimum color changes for a tiny instance.
    Oracle {
        /// Comma-separated colors, e.g. 1,2,1,2.
        #[arg(long, value_delimiter = ',')]
        scenario: Vec<u8>,
        #[command(flatten)]
        plant: PlantArgs,
    },
    /// Mean/variance/std and a one-sample t-test over a results CSV.
    Stats {
        #[arg(long)]
        csv: PathBuf,
        /// Restrict to one contender (defaults to all rows pooled).
        #[arg(long)]
        contender: Option<String>,
        /// Null-hypothesis mean for the t-test.
        #[arg(long)]
        mu0: Option<f64>,
    },
    /// Merge result CSVs into a report: results.csv, summary.csv, reward.svg.
    Report {
        /// Result CSVs; the first file's first contender is the reference.
        #[arg(long = "results", required = true)]
        results: Vec<PathBuf>,
        /// Training log whose reward column becomes the SVG chart.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Serve the simulator over HTTP.
    Serve {
        #[arg(long, default_value_t = 8088)]
        port: u16,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

fn parse_colors(ids: &[u8]) -> Vec<Color> {
    ids.iter().map(|&c| Color(c)).collect()
}

fn cmd_generate(
    dist: Option<Vec<f64>>,
    n: usize,
    len: usize,
    seed: u64,
    out: PathBuf,
) -> Result<()> {
    let dist = dist.unwrap_or_else(|| DEFAULT_DISTRIBUTION.to_vec());
    let scenarios = generate_scenarios(&dist, n, len, seed)?;
    files::write_scenarios(&out, &scenarios)?;
    println!("wrote {} scenarios of {} cars to {}", n, len, out.display());
    Ok(())
}

fn baseline_counts(
    scenarios: &[Scenario],
    config: PlantConfig,
    fill_target: usize,
) -> Result<Vec<(u32, usize)>> {
    scenarios
        .iter()
        .map(|s| {
            let (emitted, _) = heuristics::run_baseline(config, &s.colors, fill_target)?;
            Ok((s.id, color_change_count(&emitted)))
        })
        .collect()
}

fn cmd_baseline(
    scenarios_path: PathBuf,
    plant: PlantArgs,
    fill_target: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let config = plant.config();
    let scenarios = files::read_scenarios(&scenarios_path)?;
    let fill = fill_target.unwrap_or_else(|| default_fill_target(&config));
    let counts = baseline_counts(&scenarios, config, fill)?;
    let rows: Vec<(u32, &str, usize)> = counts
        .iter()
        .map(|&(id, c)| (id, "heuristic", c))
        .collect();
    let mean = counts.iter().map(|&(_, c)| c as f64).sum::<f64>() / counts.len() as f64;
    match out {
        Some(path) => {
            files::write_results_csv(&path, &rows)?;
            println!(
                "heuristic baseline over {} scenarios: mean {:.2} color changes → {}",
                counts.len(),
                mean,
                path.display()
            );
        }
        None => {
            println!("{}", files::RESULTS_HEADER);
            for (id, name, c) in rows {
                println!("{id},{name},{c}");
            }
            eprintln!("mean {mean:.2}");
        }
    }
    Ok(())
}

/// Streams progress lines and the CSV log while training runs.
struct CliObserver {
    log: files::CsvLogWriter,
    print_every: usize,
}

impl TrainObserver for CliObserver {
    fn on_epoch(&mut self, record: &EpochRecord) {
        if let Err(e) = self.log.append(record) {
            eprintln!("log write failed: {e}");
        }
        if record.epoch.is_multiple_of(self.print_every) {
            println!(
                "epoch {:5}  reward {:8.2}  changes {:6.2}  alpha {:.4}",
                record.epoch,
                record.mean_episode_reward,
                record.mean_color_changes,
                record.alpha
            );
        }
    }

    fn on_eval(&mut self, record: &EvalRecord) {
        println!(
            "eval @ epoch {:5}: mean color changes {:.2}",
            record.epoch, record.mean_color_changes
        );
    }
}

fn cmd_train(
    config: Option<PathBuf>,
    out_dir: PathBuf,
    seed: Option<u64>,
    epochs: Option<usize>,
) -> Result<()> {
    let mut cfg = match config {
        Some(path) => files::read_train_config(&path)?,
        None => files::TrainConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.sac.seed = seed;
    }
    if let Some(epochs) = epochs {
        cfg.sac.epochs = epochs;
    }
    std::fs::create_dir_all(&out_dir)?;
    let source = cfg.scenario_source.load()?;
    let mut observer = CliObserver {
        log: files::CsvLogWriter::create(&out_dir.join("log.csv"))?,
        print_every: (cfg.sac.epochs / 20).max(1),
    };
    let outcome = sac::train(&cfg.sac, cfg.plant, cfg.reward, &source, &mut observer)?;
    let manifest = files::write_run(&out_dir, &cfg, &outcome)?;
    println!(
        "run complete: {} epochs, {} checkpoints kept, best eval {:.2} → {}",
        cfg.sac.epochs,
        manifest.checkpoints.len(),
        manifest
            .checkpoints
            .first()
            .map(|c| c.eval_mean_changes)
            .unwrap_or(f64::NAN),
        out_dir.display()
    );
    Ok(())
}

fn load_ensemble(
    checkpoints: Vec<PathBuf>,
    manifest: Option<PathBuf>,
) -> Result<Ensemble> {
    let (paths, weights, strict) = match manifest {
        Some(path) => {
            let m = files::read_ensemble_manifest(&path)?;
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            let paths: Vec<PathBuf> = m
                .checkpoints
                .iter()
                .map(|p| if p.is_absolute() { p.clone() } else { base.join(p) })
                .collect();
            (paths, m.weights, m.strict_threshold)
        }
        None => (checkpoints, None, true),
    };
    if paths.is_empty() {
        bail!("no checkpoints given; use --checkpoint or --ensemble");
    }
    let mut models = Vec::with_capacity(paths.len());
    for p in &paths {
        let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        models.push(DenseNet::from_bytes(&bytes).with_context(|| p.display().to_string())?);
    }
    let weights = weights.unwrap_or_else(|| vec![1.0; models.len()]);
    Ok(Ensemble::with_weights(models, weights, strict)?)
}

fn cmd_eval(
    checkpoints: Vec<PathBuf>,
    manifest: Option<PathBuf>,
    scenarios_path: PathBuf,
    plant: PlantArgs,
    name: String,
    out: Option<PathBuf>,
) -> Result<()> {
    let config = plant.config();
    let ensemble = load_ensemble(checkpoints, manifest)?;
    let scenarios = files::read_scenarios(&scenarios_path)?;
    let colors: Vec<Vec<Color>> = scenarios.iter().map(|s| s.colors.clone()).collect();
    let counts = evaluate_ensemble(&ensemble, config, &colors)?;
    let rows: Vec<(u32, &str, usize)> = scenarios
        .iter()
        .zip(counts.iter())
        .map(|(s, &c)| (s.id, name.as_str(), c))
        .collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    match out {
        Some(path) => {
            files::write_results_csv(&path, &rows)?;
            println!(
                "{} ({} models) over {} scenarios: mean {:.2} color changes → {}",
                name,
                ensemble.len(),
                counts.len(),
                mean,
                path.display()
            );
        }
        None => {
            println!("{}", files::RESULTS_HEADER);
            for (id, n, c) in rows {
                println!("{id},{n},{c}");
            }
            eprintln!("mean {mean:.2}");
        }
    }
    Ok(())
}

fn cmd_oracle(scenario: Vec<u8>, plant: PlantArgs) -> Result<()> {
    let config = plant.config();
    let colors = parse_colors(&scenario);
    let optimal = oracle_min_changes(config, &colors)?;
    let raw = color_change_count(&colors);
    println!(
        "minimum color changes: {optimal} (raw sequence: {raw}, {} lanes × {} slots)",
        config.num_buffers, config.buffer_depth
    );
    Ok(())
}

fn cmd_stats(csv: PathBuf, contender: Option<String>, mu0: Option<f64>) -> Result<()> {
    let rows = files::read_results_csv(&csv)?;
    let counts: Vec<f64> = rows
        .iter()
        .filter(|r| contender.as_deref().is_none_or(|c| r.contender == c))
        .map(|r| r.color_changes as f64)
        .collect();
    if counts.is_empty() {
        bail!("no matching rows");
    }
    let s = summarize(&counts)?;
    println!("n        {}", s.n);
    println!("mean     {:.4}", s.mean);
    println!("variance {:.4}", s.variance);
    println!("std_dev  {:.4}", s.std_dev);
    if let Some(mu0) = mu0 {
        match one_sample_t(&counts, mu0) {
            Ok(t) => {
                println!("t({})    {:.4}", t.dof, t.t);
                println!("p        {:.4}", t.p);
            }
            Err(StatsError::DegenerateSamples) => {
                println!("t        undefined (all samples equal)");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn cmd_report(results: Vec<PathBuf>, log: Option<PathBuf>, out_dir: PathBuf) -> Result<()> {
    std::fs::create_dir_all(&out_dir)?;
    let mut rows = Vec::new();
    for path in &results {
        rows.extend(files::read_results_csv(path)?);
    }
    let report = report::build_report(rows, None)?;
    let row_refs: Vec<(u32, &str, usize)> = report
        .rows
        .iter()
        .map(|r| (r.scenario_id, r.contender.as_str(), r.color_changes))
        .collect();
    files::write_results_csv(&out_dir.join("results.csv"), &row_refs)?;
    report::write_summary_csv(&out_dir.join("summary.csv"), &report)?;
    for s in &report.summaries {
        let pct = s
            .percent_increase
            .map_or(String::from("—"), |p| format!("{p:+.2}%"));
        println!(
            "{:<12} n={} mean={:.2} std={:.3} improvement={}",
            s.contender, s.n, s.mean, s.std_dev, pct
        );
    }
    let series = match log {
        Some(path) => report::read_reward_series(&path)?,
        None => Vec::new(),
    };
    report::write_reward_chart(&out_dir.join("reward.svg"), &series)?;
    println!("report written to {}", out_dir.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            dist,
            n,
            len,
            seed,
            out,
        } => cmd_generate(dist, n, len, seed, out),
        Command::Baseline {
            scenarios,
            plant,
            fill_target,
            out,
        } => cmd_baseline(scenarios, plant, fill_target, out),
        Command::Train {
            config,
            out_dir,
            seed,
            epochs,
        } => cmd_train(config, out_dir, seed, epochs),
        Command::Eval {
            checkpoints,
            ensemble,
            scenarios,
            plant,
            name,
            out,
        } => cmd_eval(checkpoints, ensemble, scenarios, plant, name, out),
        Command::Oracle { scenario, plant } => cmd_oracle(scenario, plant),
        Command::Stats {
            csv,
            contender,
            mu0,
        } => cmd_stats(csv, contender, mu0),
        Command::Report {
            results,
            log,
            out_dir,
        } => cmd_report(results, log, out_dir),
        Command::Serve { port, workers } => server::serve_blocking(port, workers),
    }
}
