//! Named prediction methods applied to whole game files.

use std::fmt;
use std::str::FromStr;

use crate::calibration::{default_starts, geometric_median, hill_climb_evpp};
use crate::equilibrium::{predict_competitive, PredictorVariant};
use crate::error::Error;
use crate::market::PriceVector;
use crate::predictors::{fixture, historical_mean, historical_median, moving_average, published_fixtures};
use crate::simulation::{observed, GameRecord, SimulationConfig};

/// Tolerance and iteration cap for the geometric median.
pub const GEOMEDIAN_TOLERANCE: f64 = 1e-6;
pub const GEOMEDIAN_MAX_ITERS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    /// A published vector, by fixture name.
    Constant { name: String, prices: PriceVector },
    Mean,
    Median,
    /// Mean of the preceding `k` games in play order.
    Moving(usize),
    Competitive(PredictorVariant),
    GeometricMedian,
    BestEvpp,
}

pub const METHOD_NAMES: &str =
    "const:<fixture>, mean, median, moving:<k>, walverine, walv-no-cdata, walv-constf, walverine-const, geomedian, best-evpp";

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Constant { name, .. } => write!(f, "const:{name}"),
            Method::Mean => f.write_str("mean"),
            Method::Median => f.write_str("median"),
            Method::Moving(k) => write!(f, "moving:{k}"),
            Method::Competitive(v) => f.write_str(v.name()),
            Method::GeometricMedian => f.write_str("geomedian"),
            Method::BestEvpp => f.write_str("best-evpp"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let unknown = || Error::UnknownPredictor {
            name: s.to_string(),
            valid: METHOD_NAMES.to_string(),
        };
        let lower = s.trim().to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("const:") {
            let prices = fixture(rest).map_err(|_| Error::UnknownPredictor {
                name: s.to_string(),
                valid: format!(
                    "const:<fixture> with fixture one of {}",
                    published_fixtures().iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(", ")
                ),
            })?;
            let name = published_fixtures()
                .into_iter()
                .find(|f| f.name.eq_ignore_ascii_case(rest))
                .map(|f| f.name)
                .unwrap_or_else(|| rest.to_string());
            return Ok(Method::Constant { name, prices });
        }
        if let Some(k) = lower.strip_prefix("moving:") {
            return match k.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(Method::Moving(k)),
                _ => Err(unknown()),
            };
        }
        match lower.as_str() {
            "mean" => Ok(Method::Mean),
            "median" => Ok(Method::Median),
            "geomedian" => Ok(Method::GeometricMedian),
            "best-evpp" => Ok(Method::BestEvpp),
            other => other
                .parse::<PredictorVariant>()
                .map(Method::Competitive)
                .map_err(|_| unknown()),
        }
    }
}

/// One prediction per game of `games`, `None` where the method has nothing
/// to say (a moving average without history).
///
/// Statistics and calibrated constants are computed from `history`; the
/// moving average runs over `games` itself in file order.
pub fn predict_games(
    method: &Method,
    cfg: &SimulationConfig,
    games: &[GameRecord],
    history: &[GameRecord],
) -> Result<Vec<(String, Option<PriceVector>)>, Error> {
    let constant = |v: PriceVector| Ok(games.iter().map(|g| (g.game_id.clone(), Some(v))).collect());
    match method {
        Method::Constant { prices, .. } => constant(*prices),
        Method::Mean => constant(historical_mean(&observed(history))?),
        Method::Median => constant(historical_median(&observed(history))?),
        Method::GeometricMedian => {
            constant(geometric_median(&observed(history), GEOMEDIAN_TOLERANCE, GEOMEDIAN_MAX_ITERS)?.point)
        }
        Method::BestEvpp => {
            let set = observed(history);
            let scored: Vec<_> = history.iter().map(|g| (g.actual_prices, cfg.context(g))).collect();
            let starts = default_starts(&set)?;
            constant(hill_climb_evpp(&scored, &starts, &cfg.hill_climb)?.point)
        }
        Method::Moving(k) => {
            let set = observed(games);
            games
                .iter()
                .enumerate()
                .map(|(i, g)| match moving_average(&set, *k, i + 1) {
                    Ok(p) => Ok((g.game_id.clone(), Some(p))),
                    Err(Error::InsufficientHistory { .. }) => Ok((g.game_id.clone(), None)),
                    Err(e) => Err(e),
                })
                .collect()
        }
        Method::Competitive(variant) => games
            .iter()
            .map(|g| {
                g.validate()?;
                let r = predict_competitive(
                    g.own_clients(),
                    &cfg.market(g.flights),
                    *variant,
                    &cfg.dist,
                    &cfg.tatonnement,
                )?;
                Ok((g.game_id.clone(), Some(r.prices)))
            })
            .collect(),
    }
}
