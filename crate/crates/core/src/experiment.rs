//! Batch runs of one condition: fresh populations, many games, metric series
//! and files on disk.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dialogue::{play_game, Agent, Condition, GameConfig, GameRecord};
use crate::plot::{self, Panel};
use crate::{seeded_rng, Error, Result, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub condition: Condition,
    pub population: usize,
    pub games: usize,
    pub runs: usize,
    /// Run `i` is seeded with `seed + i`.
    pub seed: u64,
    pub success_window: usize,
    #[serde(flatten)]
    pub game: GameConfig,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            condition: Condition::A,
            population: 5,
            games: 5000,
            runs: 10,
            seed: 42,
            success_window: 100,
            game: GameConfig::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config(format!("population must be >= 2, got {}", self.population)));
        }
        if self.games == 0 || self.runs == 0 || self.success_window == 0 {
            return Err(Error::Config("games, runs and success window must all be >= 1".into()));
        }
        self.game.validate()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_owned(), source: e })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: u32,
    pub records: Vec<GameRecord>,
    /// Population state after the last game.
    pub agents: Vec<Agent>,
}

fn pair_mut(agents: &mut [Agent], i: usize, j: usize) -> (&mut Agent, &mut Agent) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = agents.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = agents.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}

/// A population playing one run game by game.
#[derive(Debug, Clone)]
pub struct Population {
    config: ExperimentConfig,
    run: u32,
    rng: SimRng,
    agents: Vec<Agent>,
    games_played: usize,
}

impl Population {
    /// A fresh population for run `run` of `config`.
    pub fn new(config: &ExperimentConfig, run: u32) -> Result<Self> {
        config.validate()?;
        Ok(Population {
            config: config.clone(),
            run,
            rng: seeded_rng(config.seed.wrapping_add(run as u64)),
            agents: (0..config.population).map(|id| Agent::new(id, config.game.context_size)).collect(),
            games_played: 0,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn games_played(&self) -> usize {
        self.games_played
    }

    /// Pick a random speaker and a different random hearer and play one game.
    pub fn play_next(&mut self) -> Result<GameRecord> {
        let population = self.agents.len();
        let s = self.rng.random_range(0..population);
        let mut h = self.rng.random_range(0..population - 1);
        if h >= s {
            h += 1;
        }
        let game = self.games_played as u64;
        let (speaker, hearer) = pair_mut(&mut self.agents, s, h);
        let mut record = play_game(speaker, hearer, self.config.condition, &mut self.rng, &self.config.game, game)?;
        record.run = self.run;
        let n = population as f64;
        record.lexicon_size = self.agents.iter().map(|a| a.lexicon.len() as f64).sum::<f64>() / n;
        record.ontology_size = self.agents.iter().map(|a| a.ontology.len() as f64).sum::<f64>() / n;
        self.games_played += 1;
        Ok(record)
    }

    pub fn into_agents(self) -> Vec<Agent> {
        self.agents
    }
}

/// Play one run with a fresh population.
pub fn run_once(config: &ExperimentConfig, run: u32) -> Result<RunResult> {
    let mut population = Population::new(config, run)?;
    let records = (0..config.games).map(|_| population.play_next()).collect::<Result<Vec<_>>>()?;
    Ok(RunResult { run, records, agents: population.into_agents() })
}

/// All runs of `config`, in run order. Runs execute in parallel; each owns
/// its RNG stream so the output does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    config.validate()?;
    (0..config.runs as u32).into_par_iter().map(|run| run_once(config, run)).collect()
}

/// Per-game series for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub success: Vec<f64>,
    pub lexicon_size: Vec<f64>,
    pub ontology_size: Vec<f64>,
    pub effort: Vec<f64>,
}

/// Cross-run mean and sample variance at each game index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub window: usize,
    pub runs: Vec<RunSeries>,
    pub success: Stats,
    pub lexicon_size: Stats,
    pub ontology_size: Stats,
    pub effort: Stats,
}

/// Averages over a stretch of games of the cross-run means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub success: f64,
    pub lexicon_size: f64,
    pub ontology_size: f64,
    pub effort: f64,
}

/// Trailing moving average; the first `window - 1` points average what is
/// available so far.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Sample-and-hold every `window` games, starting at game 0.
fn sampled(values: &[f64], window: usize) -> Vec<f64> {
    (0..values.len()).map(|g| values[g - g % window]).collect()
}

fn cross_run(series: &[&Vec<f64>]) -> Stats {
    let len = series[0].len();
    let n = series.len() as f64;
    let mut mean = Vec::with_capacity(len);
    let mut variance = Vec::with_capacity(len);
    for g in 0..len {
        let m = series.iter().map(|s| s[g]).sum::<f64>() / n;
        let v = if series.len() > 1 {
            series.iter().map(|s| (s[g] - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        variance.push(v);
    }
    Stats { mean, variance }
}

fn stats_of(runs: &[RunSeries], pick: impl Fn(&RunSeries) -> &Vec<f64>) -> Stats {
    cross_run(&runs.iter().map(pick).collect::<Vec<_>>())
}

pub fn summarize(runs: &[Vec<GameRecord>], window: usize) -> Result<MetricSeries> {
    if runs.is_empty() || runs.iter().any(Vec::is_empty) {
        return Err(Error::EmptyRecords);
    }
    if window == 0 {
        return Err(Error::Config("success window must be >= 1".into()));
    }
    let len = runs[0].len();
    if runs.iter().any(|r| r.len() != len) {
        return Err(Error::Config("all runs must have the same number of games".into()));
    }
    let per_run: Vec<RunSeries> = runs
        .iter()
        .map(|records| {
            let flags: Vec<f64> = records.iter().map(|r| f64::from(u8::from(r.success))).collect();
            let effort: Vec<f64> = records.iter().map(|r| f64::from(r.hearer_effort)).collect();
            let lex: Vec<f64> = records.iter().map(|r| r.lexicon_size).collect();
            let ont: Vec<f64> = records.iter().map(|r| r.ontology_size).collect();
            RunSeries {
                success: moving_average(&flags, window),
                lexicon_size: sampled(&lex, window),
                ontology_size: sampled(&ont, window),
                effort: moving_average(&effort, window),
            }
        })
        .collect();
    Ok(MetricSeries {
        window,
        success: stats_of(&per_run, |r| &r.success),
        lexicon_size: stats_of(&per_run, |r| &r.lexicon_size),
        ontology_size: stats_of(&per_run, |r| &r.ontology_size),
        effort: stats_of(&per_run, |r| &r.effort),
        runs: per_run,
    })
}

impl MetricSeries {
    pub fn games(&self) -> usize {
        self.success.mean.len()
    }

    /// Mean of the cross-run means over games `from..to`.
    pub fn window_mean(&self, from: usize, to: usize) -> Terminal {
        let to = to.min(self.games());
        let from = from.min(to.saturating_sub(1));
        let avg = |s: &Stats| s.mean[from..to].iter().sum::<f64>() / (to - from) as f64;
        Terminal {
            success: avg(&self.success),
            lexicon_size: avg(&self.lexicon_size),
            ontology_size: avg(&self.ontology_size),
            effort: avg(&self.effort),
        }
    }

    /// The last fifth of the games.
    pub fn terminal(&self) -> Terminal {
        let n = self.games();
        self.window_mean(n - n / 5, n)
    }
}

/// Mean hearer effort over every game of every run.
pub fn mean_effort(runs: &[Vec<GameRecord>]) -> f64 {
    let (sum, n) = runs
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), r| (s + f64::from(r.hearer_effort), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub game: u64,
    pub run: u32,
    pub success_window: f64,
    pub lexicon_size: f64,
    pub ontology_size: f64,
    pub effort: f64,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub game: u64,
    pub success_mean: f64,
    pub success_var: f64,
    pub lexicon_mean: f64,
    pub lexicon_var: f64,
    pub ontology_mean: f64,
    pub ontology_var: f64,
    pub effort_mean: f64,
    pub effort_var: f64,
}

impl MetricSeries {
    pub fn metric_rows(&self) -> Vec<MetricRow> {
        self.runs
            .iter()
            .enumerate()
            .flat_map(|(run, s)| {
                (0..s.success.len()).map(move |g| MetricRow {
                    game: g as u64,
                    run: run as u32,
                    success_window: s.success[g],
                    lexicon_size: s.lexicon_size[g],
                    ontology_size: s.ontology_size[g],
                    effort: s.effort[g],
                })
            })
            .collect()
    }

    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        (0..self.games())
            .map(|g| SummaryRow {
                game: g as u64,
                success_mean: self.success.mean[g],
                success_var: self.success.variance[g],
                lexicon_mean: self.lexicon_size.mean[g],
                lexicon_var: self.lexicon_size.variance[g],
                ontology_mean: self.ontology_size.mean[g],
                ontology_var: self.ontology_size.variance[g],
                effort_mean: self.effort.mean[g],
                effort_var: self.effort.variance[g],
            })
            .collect()
    }

    /// Rebuild the series from `metrics.csv` rows.
    pub fn from_rows(rows: &[MetricRow], window: usize) -> Result<Self> {
        let runs = rows.iter().map(|r| r.run as usize + 1).max().ok_or(Error::EmptyRecords)?;
        let mut per_run = vec![
            RunSeries { success: vec![], lexicon_size: vec![], ontology_size: vec![], effort: vec![] };
            runs
        ];
        for r in rows {
            let s = &mut per_run[r.run as usize];
            if s.success.len() as u64 != r.game {
                return Err(Error::Config(format!("metrics rows out of order at run {} game {}", r.run, r.game)));
            }
            s.success.push(r.success_window);
            s.lexicon_size.push(r.lexicon_size);
            s.ontology_size.push(r.ontology_size);
            s.effort.push(r.effort);
        }
        let len = per_run[0].success.len();
        if per_run.iter().any(|s| s.success.len() != len) {
            return Err(Error::Config("runs in metrics.csv differ in length".into()));
        }
        Ok(MetricSeries {
            window,
            success: stats_of(&per_run, |r| &r.success),
            lexicon_size: stats_of(&per_run, |r| &r.lexicon_size),
            ontology_size: stats_of(&per_run, |r| &r.ontology_size),
            effort: stats_of(&per_run, |r| &r.effort),
            runs: per_run,
        })
    }

    pub fn panels(&self) -> Vec<Panel> {
        let panel = |title: &str, s: &Stats, unit: bool| Panel {
            title: title.to_owned(),
            mean: s.mean.clone(),
            variance: s.variance.clone(),
            unit_range: unit,
        };
        vec![
            panel("communicative success", &self.success, true),
            panel("lexicon size", &self.lexicon_size, false),
            panel("ontology size", &self.ontology_size, false),
            panel("hearer effort", &self.effort, true),
        ]
    }
}

pub const GAMES_FILE: &str = "games.jsonl";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "plot.svg";
pub const AGENTS_FILE: &str = "agents.json";
pub const CONFIG_FILE: &str = "config.json";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_records_jsonl(path: &Path, runs: &[Vec<GameRecord>]) -> Result<()> {
    let mut out = create(path)?;
    for r in runs.iter().flatten() {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Json { path: path.to_owned(), source: e })?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records_jsonl(path: &Path) -> Result<Vec<GameRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Json { path: path.to_owned(), source: e })?);
    }
    Ok(out)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |e| Error::Csv { path: path.to_owned(), source: e };
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |e| Error::Csv { path: path.to_owned(), source: e };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(csv_err)
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    read_csv(path)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_csv(path)
}

pub fn write_plot(path: &Path, series: &MetricSeries, title: &str) -> Result<()> {
    let svg = plot::render_svg(title, &series.panels());
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub games: PathBuf,
    pub metrics: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Write `games.jsonl`, `metrics.csv`, `summary.csv` and `plot.svg` into `dir`.
pub fn emit(series: &MetricSeries, runs: &[Vec<GameRecord>], dir: &Path, title: &str) -> Result<Emitted> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = Emitted {
        games: dir.join(GAMES_FILE),
        metrics: dir.join(METRICS_FILE),
        summary: dir.join(SUMMARY_FILE),
        plot: dir.join(PLOT_FILE),
    };
    write_records_jsonl(&paths.games, runs)?;
    write_metrics_csv(&paths.metrics, &series.metric_rows())?;
    write_summary_csv(&paths.summary, &series.summary_rows())?;
    write_plot(&paths.plot, series, title)?;
    Ok(paths)
}

pub fn write_config(path: &Path, config: &ExperimentConfig) -> Result<()> {
    let text = serde_json::to_string_pretty(config).map_err(|e| Error::Json { path: path.to_owned(), source: e })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Final populations of every run, for later snapshots.
pub fn write_agents(path: &Path, results: &[RunResult]) -> Result<()> {
    let populations: Vec<&Vec<Agent>> = results.iter().map(|r| &r.agents).collect();
    let mut out = create(path)?;
    serde_json::to_writer(&mut out, &populations).map_err(|e| Error::Json { path: path.to_owned(), source: e })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_agents(path: &Path) -> Result<Vec<Vec<Agent>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Json { path: path.to_owned(), source: e })
}
