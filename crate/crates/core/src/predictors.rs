//! Prediction strategies that do not model the market: fixed vectors,
//! statistics of past games, and unit-price schedules built on a baseline.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::market::{Hotel, PriceVector, NIGHTS};

/// A game identified by id, with the hotel prices it actually closed at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedGame {
    pub id: String,
    pub prices: PriceVector,
}

/// Games in play order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GameSet {
    pub games: Vec<ObservedGame>,
}

impl GameSet {
    pub fn new(games: Vec<ObservedGame>) -> Self {
        GameSet { games }
    }

    pub fn from_prices(prices: impl IntoIterator<Item = PriceVector>) -> Self {
        let games = prices
            .into_iter()
            .enumerate()
            .map(|(i, prices)| ObservedGame {
                id: format!("game-{:03}", i + 1),
                prices,
            })
            .collect();
        GameSet { games }
    }

    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn prices(&self) -> impl Iterator<Item = &PriceVector> + '_ {
        self.games.iter().map(|g| &g.prices)
    }

    fn non_empty(&self) -> Result<(), Error> {
        if self.games.is_empty() {
            Err(Error::EmptyGameSet)
        } else {
            Ok(())
        }
    }
}

/// Predicts the same vector for every game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantPredictor(pub PriceVector);

impl ConstantPredictor {
    pub fn predict(&self) -> PriceVector {
        self.0
    }
}

pub fn predict_constant(v: PriceVector) -> ConstantPredictor {
    ConstantPredictor(v)
}

pub(crate) fn mean_of<'a>(prices: impl Iterator<Item = &'a PriceVector>) -> PriceVector {
    let mut sum = [0.0; 8];
    let mut n = 0usize;
    for p in prices {
        for (s, v) in sum.iter_mut().zip(p.as_array()) {
            *s += v;
        }
        n += 1;
    }
    PriceVector::clamped(sum.map(|s| s / n as f64))
}

/// Component-wise mean of the actual prices.
pub fn historical_mean(gs: &GameSet) -> Result<PriceVector, Error> {
    gs.non_empty()?;
    Ok(mean_of(gs.prices()))
}

/// Component-wise median; even counts take the midpoint of the two middle
/// order statistics.
pub fn historical_median(gs: &GameSet) -> Result<PriceVector, Error> {
    gs.non_empty()?;
    let mut out = [0.0; 8];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut column: Vec<f64> = gs.prices().map(|p| p.as_array()[i]).collect();
        column.sort_by(f64::total_cmp);
        let n = column.len();
        *slot = if n % 2 == 1 {
            column[n / 2]
        } else {
            0.5 * (column[n / 2 - 1] + column[n / 2])
        };
    }
    PriceVector::new(out)
}

/// Mean of the up-to-`window` games strictly before the 1-based
/// `game_index`.
pub fn moving_average(gs: &GameSet, window: usize, game_index: usize) -> Result<PriceVector, Error> {
    if window == 0 {
        return Err(Error::InvalidConfig("moving-average window must be >= 1".into()));
    }
    if game_index <= 1 {
        return Err(Error::InsufficientHistory { index: game_index });
    }
    let end = (game_index - 1).min(gs.len());
    if end == 0 {
        return Err(Error::InsufficientHistory { index: game_index });
    }
    let start = end.saturating_sub(window);
    Ok(mean_of(gs.games[start..end].iter().map(|g| &g.prices)))
}

/// Growth factors for unit prices beyond the first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricelineRule {
    /// Factor for nights 1 and 4.
    pub multiplier_outer: f64,
    /// Factor for nights 2 and 3.
    pub multiplier_inner: f64,
}

impl Default for PricelineRule {
    fn default() -> Self {
        PricelineRule {
            multiplier_outer: 1.15,
            multiplier_inner: 1.25,
        }
    }
}

impl PricelineRule {
    pub fn multiplier(&self, night: u8) -> f64 {
        if night == 1 || night == NIGHTS as u8 {
            self.multiplier_outer
        } else {
            self.multiplier_inner
        }
    }
}

/// Unit price schedules, one per `(hotel, night)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Priceline {
    units: Vec<Vec<f64>>,
}

impl Priceline {
    /// Prices of units `1..=max_units` of `(hotel, night)`.
    pub fn units(&self, hotel: Hotel, night: u8) -> &[f64] {
        let offset = match hotel {
            Hotel::Shanties => 0,
            Hotel::Towers => NIGHTS,
        };
        &self.units[offset + night as usize - 1]
    }
}

/// Expands a baseline into `baseline * x^(n-1)` for unit `n`.
pub fn priceline(baseline: &PriceVector, rule: &PricelineRule, max_units: usize) -> Result<Priceline, Error> {
    if max_units == 0 {
        return Err(Error::InvalidConfig("priceline needs max_units >= 1".into()));
    }
    if rule.multiplier_outer < 1.0 || rule.multiplier_inner < 1.0 {
        return Err(Error::InvalidConfig("priceline multipliers must be >= 1".into()));
    }
    let mut units = Vec::with_capacity(8);
    for hotel in Hotel::ALL {
        for night in 1..=NIGHTS as u8 {
            let x = rule.multiplier(night);
            let mut price = baseline.get(hotel, night);
            let mut line = Vec::with_capacity(max_units);
            for _ in 0..max_units {
                line.push(price);
                price *= x;
            }
            units.push(line);
        }
    }
    Ok(Priceline { units })
}

/// A named published price vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub prices: PriceVector,
}

const TABLE3_CSV: &str = include_str!("../data/table3.csv");

#[derive(Deserialize)]
struct FixtureRow {
    name: String,
    #[serde(rename = "S1")]
    s1: f64,
    #[serde(rename = "S2")]
    s2: f64,
    #[serde(rename = "S3")]
    s3: f64,
    #[serde(rename = "S4")]
    s4: f64,
    #[serde(rename = "T1")]
    t1: f64,
    #[serde(rename = "T2")]
    t2: f64,
    #[serde(rename = "T3")]
    t3: f64,
    #[serde(rename = "T4")]
    t4: f64,
}

/// Reads fixtures in the `name,S1,...,T4` CSV layout.
pub fn read_fixtures<R: std::io::Read>(reader: R) -> Result<Vec<Fixture>, Error> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: FixtureRow = row?;
        out.push(Fixture {
            name: r.name,
            prices: PriceVector::new([r.s1, r.s2, r.s3, r.s4, r.t1, r.t2, r.t3, r.t4])?,
        });
    }
    Ok(out)
}

/// The fifteen published vectors: ten tournament predictions and five
/// benchmarks.
pub fn published_fixtures() -> Vec<Fixture> {
    read_fixtures(TABLE3_CSV.as_bytes()).expect("bundled fixture file is valid")
}

/// The raw bundled fixture file.
pub fn published_fixtures_csv() -> &'static str {
    TABLE3_CSV
}

/// Looks up a published vector by name, ignoring case.
pub fn fixture(name: &str) -> Result<PriceVector, Error> {
    published_fixtures()
        .into_iter()
        .find(|f| f.name.eq_ignore_ascii_case(name))
        .map(|f| f.prices)
        .ok_or_else(|| Error::UnknownFixture(name.to_string()))
}

/// The ten vectors agents actually used in the tournament.
pub fn tournament_fixtures() -> Vec<Fixture> {
    published_fixtures().into_iter().take(10).collect()
}
