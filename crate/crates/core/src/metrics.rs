//! Prediction accuracy: Euclidean distance and the expected value of perfect
//! prediction (EVPP).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::demand::{partition_by_hp, ClientDistribution};
use crate::error::Error;
use crate::market::{ClientPrefs, FlightPrices, Market, PriceVector, DAY_PAIRS};
use crate::predictors::GameSet;

/// Everything besides the two price vectors that EVPP depends on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalContext {
    pub market: Market,
    #[serde(default)]
    pub dist: ClientDistribution,
}

impl EvalContext {
    pub fn new(market: Market, dist: ClientDistribution) -> Self {
        EvalContext { market, dist }
    }

    /// The same context with every flight priced at the mean initial price.
    pub fn with_constant_flights(mut self) -> Self {
        self.market.flights = FlightPrices::uniform(FlightPrices::MEAN_INITIAL).expect("positive constant");
        self
    }
}

pub fn euclidean_distance(p_hat: &PriceVector, p: &PriceVector) -> f64 {
    p_hat
        .as_array()
        .iter()
        .zip(p.as_array())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Surplus a client forgoes by choosing its trip under `p_hat` when `p` is
/// what it actually pays.
pub fn vpp_client(c: &ClientPrefs, p_hat: &PriceVector, p: &PriceVector, ctx: &EvalContext) -> f64 {
    let m = &ctx.market;
    let ideal = m.surplus(c, &m.optimal_trip(c, p), p);
    let chosen = m.surplus(c, &m.optimal_trip(c, p_hat), p);
    ideal - chosen
}

/// Expected surplus, at prices `p`, of trips chosen as if prices were
/// `p_hat`.
///
/// Within each premium segment of the `p_hat` partition the chosen trip is
/// fixed and its surplus at `p` is affine in the premium, so the segment
/// integral is its mass times the surplus at the segment midpoint.
pub fn expected_chosen_surplus(p_hat: &PriceVector, p: &PriceVector, ctx: &EvalContext) -> f64 {
    let m = &ctx.market;
    let mut total = 0.0;
    for (k, &(pa, pd)) in DAY_PAIRS.iter().enumerate() {
        let w = ctx.dist.weights()[k];
        if w == 0.0 {
            continue;
        }
        for seg in partition_by_hp(pa, pd, m, p_hat, &ctx.dist).segments {
            let trip = seg.choice();
            let at_mid = m.base_surplus(pa, pd, &trip, p) + trip.towers_indicator() * seg.midpoint();
            total += w * seg.mass * at_mid;
        }
    }
    total
}

/// Expected surplus of perfectly informed trip choice.
pub fn expected_ideal_surplus(p: &PriceVector, ctx: &EvalContext) -> f64 {
    expected_chosen_surplus(p, p, ctx)
}

pub fn evpp(p_hat: &PriceVector, p: &PriceVector, ctx: &EvalContext) -> f64 {
    // Pointwise optimality makes this non-negative; rounding can leave a
    // few ulps below zero.
    (expected_ideal_surplus(p, ctx) - expected_chosen_surplus(p_hat, p, ctx)).max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub game_id: String,
    pub d: f64,
    pub evpp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub rows: Vec<MetricRow>,
    pub mean_d: f64,
    pub mean_evpp: f64,
}

/// Scores per-game predictions against the actual prices of `gs`, each game
/// under its own context.
pub fn evaluate_predictor(
    predictions: &BTreeMap<String, PriceVector>,
    gs: &GameSet,
    contexts: &[EvalContext],
) -> Result<Evaluation, Error> {
    if gs.is_empty() {
        return Err(Error::EmptyGameSet);
    }
    if contexts.len() != gs.len() {
        return Err(Error::LengthMismatch {
            left: gs.len(),
            right: contexts.len(),
        });
    }
    let mut rows = Vec::with_capacity(gs.len());
    for (game, ctx) in gs.games.iter().zip(contexts) {
        let p_hat = predictions
            .get(&game.id)
            .ok_or_else(|| Error::MissingPrediction(game.id.clone()))?;
        rows.push(MetricRow {
            game_id: game.id.clone(),
            d: euclidean_distance(p_hat, &game.prices),
            evpp: evpp(p_hat, &game.prices, ctx),
        });
    }
    let n = rows.len() as f64;
    let mean_d = rows.iter().map(|r| r.d).sum::<f64>() / n;
    let mean_evpp = rows.iter().map(|r| r.evpp).sum::<f64>() / n;
    Ok(Evaluation {
        rows,
        mean_d,
        mean_evpp,
    })
}

/// Mean EVPP of one constant prediction over games with their contexts.
pub fn mean_evpp(p_hat: &PriceVector, games: &[(PriceVector, EvalContext)]) -> f64 {
    games.iter().map(|(p, ctx)| evpp(p_hat, p, ctx)).sum::<f64>() / games.len() as f64
}
