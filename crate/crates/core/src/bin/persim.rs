use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use persim::arena::{self, ArenaConfig, NoiseModel};
use persim::dialogue::Condition;
use persim::experiment::{self, ExperimentConfig, MetricSeries};
use persim::{seeded_rng, Error, Result};

#[derive(Parser)]
#[command(name = "persim", version, about = "Language games about moving balls, seen from two robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of games for one condition and write results to a directory.
    Run(RunArgs),
    /// Redraw plot.svg from an output directory's metrics.csv.
    Plot {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
    },
    /// Print one agent's final lexicon and ontology as JSON.
    Snapshot {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[arg(long)]
        agent: usize,
        /// Which run's population to look at.
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
    /// Write sampled scenes as JSON lines, one scene per line.
    Scenes {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Events per scene, topic included.
        #[arg(long, default_value_t = 2)]
        events: usize,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON file mirroring the experiment configuration; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    condition: Option<Condition>,
    #[arg(long)]
    games: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pop: Option<usize>,
    /// Standard deviation of ball-point noise in meters; pose noise scales
    /// along with it.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(c) = self.condition {
            config.condition = c;
        }
        if let Some(n) = self.games {
            config.games = n;
        }
        if let Some(n) = self.runs {
            config.runs = n;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(p) = self.pop {
            config.population = p;
        }
        if let Some(sigma) = self.noise_sigma {
            config.game.noise = NoiseModel::scaled(sigma / NoiseModel::default().sigma_point);
        }
        if let Some(dir) = &self.out {
            config.out_dir = Some(dir.clone());
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let config = args.resolve()?;
    let dir = config
        .out_dir
        .clone()
        .ok_or_else(|| Error::Config("an output directory is required (--out or out_dir)".into()))?;
    let results = experiment::run_experiment(&config)?;
    let runs: Vec<_> = results.iter().map(|r| r.records.clone()).collect();
    let series = experiment::summarize(&runs, config.success_window)?;
    let title = format!("condition {}", config.condition);
    experiment::emit(&series, &runs, &dir, &title)?;
    experiment::write_agents(&dir.join(experiment::AGENTS_FILE), &results)?;
    experiment::write_config(&dir.join(experiment::CONFIG_FILE), &config)?;

    let t = series.terminal();
    println!(
        "condition {}: {} runs x {} games, terminal success {:.3}, lexicon {:.1}, ontology {:.1}, effort {:.3}",
        config.condition, config.runs, config.games, t.success, t.lexicon_size, t.ontology_size, t.effort
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn load_config(dir: &Path) -> Result<ExperimentConfig> {
    let path = dir.join(experiment::CONFIG_FILE);
    if path.exists() {
        ExperimentConfig::from_json_file(&path)
    } else {
        Ok(ExperimentConfig::default())
    }
}

fn plot(dir: &Path) -> Result<()> {
    let config = load_config(dir)?;
    let rows = experiment::read_metrics_csv(&dir.join(experiment::METRICS_FILE))?;
    let series = MetricSeries::from_rows(&rows, config.success_window)?;
    let out = dir.join(experiment::PLOT_FILE);
    experiment::write_plot(&out, &series, &format!("condition {}", config.condition))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn snapshot(dir: &Path, agent: usize, run: usize) -> Result<()> {
    let path = dir.join(experiment::AGENTS_FILE);
    let populations = experiment::read_agents(&path)?;
    let population = populations
        .get(run)
        .ok_or_else(|| Error::Config(format!("run {run} not found ({} runs in {})", populations.len(), path.display())))?;
    let agent = population
        .get(agent)
        .ok_or_else(|| Error::Config(format!("agent {agent} not found (population {})", population.len())))?;
    let text = serde_json::to_string_pretty(&agent.snapshot()).map_err(|e| Error::Json { path, source: e })?;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}") {
        // The reader went away (e.g. piped into `head`); nothing left to do.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|e| Error::Io { path: "<stdout>".into(), source: e }),
    }
}

fn scenes(count: usize, seed: u64, events: usize, out: &Path) -> Result<()> {
    let config = ArenaConfig::default();
    let mut rng = seeded_rng(seed);
    let scenes = (0..count as u64)
        .map(|i| arena::setup_scene(&mut rng, &config, events, i * events as u64))
        .collect::<Result<Vec<_>>>()?;
    arena::write_scenes_jsonl(out, &scenes)?;
    println!("wrote {} scenes to {}", scenes.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Plot { input } => plot(input),
        Command::Snapshot { input, agent, run } => snapshot(input, *agent, *run),
        Command::Scenes { count, seed, events, out } => scenes(*count, *seed, *events, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("persim: {e}");
            ExitCode::FAILURE
        }
    }
}
