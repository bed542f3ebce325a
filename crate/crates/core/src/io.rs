//! File formats: games and predictions as JSON, metrics as CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::market::PriceVector;
use crate::simulation::{GameRecord, SimulationConfig};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "TACPRICE_CONFIG";

/// `game_id -> predictor -> prediction`.
pub type Predictions = BTreeMap<String, BTreeMap<String, PriceVector>>;

pub fn games_to_json(games: &[GameRecord]) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(games)?;
    s.push('\n');
    Ok(s)
}

pub fn games_from_json(text: &str) -> Result<Vec<GameRecord>, Error> {
    let games: Vec<GameRecord> = serde_json::from_str(text)?;
    let mut seen = BTreeSet::new();
    for g in &games {
        g.validate()?;
        if !seen.insert(g.game_id.as_str()) {
            return Err(Error::InvalidConfig(format!("duplicate game id {}", g.game_id)));
        }
    }
    Ok(games)
}

pub fn read_games(path: &Path) -> Result<Vec<GameRecord>, Error> {
    games_from_json(&fs::read_to_string(path)?)
}

pub fn write_games(path: &Path, games: &[GameRecord]) -> Result<(), Error> {
    fs::write(path, games_to_json(games)?)?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Predictions, Error> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_predictions(path: &Path, predictions: &Predictions) -> Result<(), Error> {
    let mut s = serde_json::to_string_pretty(predictions)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Reads a configuration file; unspecified fields keep their defaults.
pub fn read_config(path: &Path) -> Result<SimulationConfig, Error> {
    let cfg: SimulationConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub game_id: String,
    pub predictor: String,
    pub d: f64,
    pub evpp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub predictor: String,
    pub games: usize,
    pub mean_d: f64,
    pub mean_evpp: f64,
}

pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: std::io::Read>(reader: R) -> Result<Vec<ResultRow>, Error> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for r in rdr.deserialize() {
        rows.push(r?);
    }
    Ok(rows)
}
