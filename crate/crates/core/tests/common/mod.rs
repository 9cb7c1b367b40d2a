#![allow(dead_code)]

use std::path::PathBuf;

use persim::dialogue::Condition;
use persim::experiment::{self, ExperimentConfig};

/// The regression-locked micro run: two agents, twenty games, condition C.
pub fn micro_config() -> ExperimentConfig {
    ExperimentConfig {
        condition: Condition::C,
        population: 2,
        games: 20,
        runs: 1,
        seed: 7,
        ..ExperimentConfig::default()
    }
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/condition_c_micro.jsonl")
}

/// Run `config` and return the bytes of its `games.jsonl`.
pub fn records_jsonl(config: &ExperimentConfig) -> Vec<u8> {
    let results = experiment::run_experiment(config).expect("run succeeds");
    let runs: Vec<_> = results.into_iter().map(|r| r.records).collect();
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join(experiment::GAMES_FILE);
    experiment::write_records_jsonl(&path, &runs).expect("write records");
    std::fs::read(&path).expect("read records")
}

/// Compare the micro run with the frozen file. Set `PERSIM_BLESS=1` to
/// rewrite the file after a deliberate behaviour change.
pub fn check_golden() -> Result<(), String> {
    let actual = records_jsonl(&micro_config());
    let path = golden_path();
    if std::env::var_os("PERSIM_BLESS").is_some() {
        std::fs::write(&path, &actual).map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    let expected = std::fs::read(&path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    if actual == expected {
        return Ok(());
    }
    let actual = String::from_utf8_lossy(&actual);
    let expected = String::from_utf8_lossy(&expected);
    let line = actual
        .lines()
        .zip(expected.lines())
        .position(|(a, e)| a != e)
        .map_or_else(|| "line count differs".to_string(), |i| format!("first difference at game {i}"));
    Err(line)
}
