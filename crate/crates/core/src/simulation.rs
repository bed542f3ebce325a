//! Synthetic games: flights and clients drawn from the game's distributions,
//! with ground-truth hotel prices that clear the realized demand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::PredictorResults;
use crate::calibration::HillClimbConfig;
use crate::demand::{realized_demand, ClientDistribution};
use crate::equilibrium::{
    clearing_gap, excess_norm, tatonnement, TatonnementConfig, AGENTS, CLIENTS_PER_AGENT,
};
use crate::error::Error;
use crate::market::{ClientPrefs, EntertainmentModel, FlightPrices, Market, PriceVector};
use crate::metrics::{evaluate_predictor, expected_chosen_surplus, EvalContext};
use crate::pipeline::{predict_games, Method};
use crate::predictors::{GameSet, ObservedGame};

/// One synthetic game. Game `i` of a seed draws from stream `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub flights: FlightPrices,
    /// One list of clients per agent; agent 0 is the predicting agent.
    pub agents: Vec<Vec<ClientPrefs>>,
    pub actual_prices: PriceVector,
    /// Seed of the game's random stream.
    pub rng_seed: u64,
    /// Stream index within that seed.
    pub stream: u64,
}

impl GameRecord {
    pub fn validate(&self) -> Result<(), Error> {
        if self.agents.len() != AGENTS || self.agents.iter().any(|a| a.len() != CLIENTS_PER_AGENT) {
            return Err(Error::InvalidConfig(format!(
                "game {} must have {AGENTS} agents with {CLIENTS_PER_AGENT} clients each",
                self.game_id
            )));
        }
        Ok(())
    }

    pub fn own_clients(&self) -> &[ClientPrefs] {
        &self.agents[0]
    }

    pub fn all_clients(&self) -> Vec<ClientPrefs> {
        self.agents.iter().flatten().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_games: usize,
    pub seed: u64,
    pub dist: ClientDistribution,
    pub flight_low: f64,
    pub flight_high: f64,
    /// Scale of multiplicative log-normal noise on ground-truth prices.
    pub noise_sigma: f64,
    pub entertainment: EntertainmentModel,
    pub include_null_trip: bool,
    /// Solver for the competitive predictors.
    pub tatonnement: TatonnementConfig,
    /// Solver for ground-truth clearing of realized demand.
    pub clearing: TatonnementConfig,
    /// Most rooms a hotel-night may be over-demanded at ground-truth prices.
    pub overdemand_band: f64,
    /// Price increment of the ascending repair after the solver.
    pub repair_step: f64,
    pub hill_climb: HillClimbConfig,
}

/// Ground-truth solver: the predictor's schedule run longer.
pub fn default_clearing_config() -> TatonnementConfig {
    TatonnementConfig {
        max_iters: 3000,
        ..TatonnementConfig::default()
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_games: 60,
            seed: 0,
            dist: ClientDistribution::default(),
            flight_low: 250.0,
            flight_high: 400.0,
            noise_sigma: 0.0,
            entertainment: EntertainmentModel::default(),
            include_null_trip: true,
            tatonnement: TatonnementConfig::default(),
            clearing: default_clearing_config(),
            overdemand_band: 2.0,
            repair_step: 1.0,
            hill_climb: HillClimbConfig::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.flight_low >= 0.0 && self.flight_low <= self.flight_high && self.flight_high.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "flight bounds must satisfy 0 <= low <= high, got [{}, {}]",
                self.flight_low, self.flight_high
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise_sigma must be >= 0".into()));
        }
        if !(self.overdemand_band >= 0.0 && self.repair_step > 0.0) {
            return Err(Error::InvalidConfig(
                "overdemand_band must be >= 0 and repair_step > 0".into(),
            ));
        }
        self.tatonnement.validate()?;
        self.clearing.validate()
    }

    pub fn market(&self, flights: FlightPrices) -> Market {
        Market::new(flights)
            .with_entertainment(self.entertainment)
            .with_null_trip(self.include_null_trip)
    }

    pub fn context(&self, game: &GameRecord) -> EvalContext {
        EvalContext::new(self.market(game.flights), self.dist)
    }
}

pub fn game_id(index: usize) -> String {
    format!("game-{:03}", index + 1)
}

/// Generates game `index` (0-based) from its own stream of the seed.
pub fn generate_game(cfg: &SimulationConfig, index: usize) -> Result<GameRecord, Error> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);

    let mut draw_flight = || {
        if cfg.flight_high > cfg.flight_low {
            rng.random_range(cfg.flight_low..cfg.flight_high)
        } else {
            cfg.flight_low
        }
    };
    let inflight = [(); 4].map(|_| draw_flight());
    let outflight = [(); 4].map(|_| draw_flight());
    let flights = FlightPrices::new(inflight, outflight)?;

    let agents: Vec<Vec<ClientPrefs>> = (0..AGENTS)
        .map(|_| (0..CLIENTS_PER_AGENT).map(|_| cfg.dist.sample(&mut rng)).collect())
        .collect();
    let clients: Vec<ClientPrefs> = agents.iter().flatten().copied().collect();
    let market = cfg.market(flights);
    let cleared = tatonnement(|p| realized_demand(&clients, &market, p), &cfg.clearing);
    let repaired = raise_overdemanded(&clients, &market, cleared.prices, cfg);

    let mut actual = *repaired.as_array();
    if cfg.noise_sigma > 0.0 {
        for v in &mut actual {
            let z: f64 = rng.sample(StandardNormal);
            *v *= (cfg.noise_sigma * z).exp();
        }
    }
    Ok(GameRecord {
        game_id: game_id(index),
        flights,
        agents,
        actual_prices: PriceVector::clamped(actual),
        rng_seed: cfg.seed,
        stream: index as u64,
    })
}

/// Ascending phase: raises every hotel-night demanded beyond the band by one
/// step until none is. Prices only rise, so enough rounds price every client
/// out and the loop ends.
fn raise_overdemanded(
    clients: &[ClientPrefs],
    market: &Market,
    start: PriceVector,
    cfg: &SimulationConfig,
) -> PriceVector {
    let limit = cfg.clearing.supply + cfg.overdemand_band;
    let mut prices = *start.as_array();
    loop {
        let demand = realized_demand(clients, market, &PriceVector::clamped(prices));
        let mut raised = false;
        for (p, x) in prices.iter_mut().zip(demand.as_array()) {
            if *x > limit {
                *p += cfg.repair_step;
                raised = true;
            }
        }
        if !raised {
            return PriceVector::clamped(prices);
        }
    }
}

pub fn generate_games(cfg: &SimulationConfig) -> Result<Vec<GameRecord>, Error> {
    (0..cfg.n_games).map(|i| generate_game(cfg, i)).collect()
}

/// Clearing quality of a game's actual prices against its realized demand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClearingCheck {
    pub excess_norm: f64,
    pub clearing_gap: f64,
}

pub fn check_clearing(cfg: &SimulationConfig, game: &GameRecord) -> ClearingCheck {
    let market = cfg.market(game.flights);
    let demand = realized_demand(&game.all_clients(), &market, &game.actual_prices);
    ClearingCheck {
        excess_norm: excess_norm(&demand, cfg.clearing.supply),
        clearing_gap: clearing_gap(&game.actual_prices, &demand, cfg.clearing.supply),
    }
}

pub fn observed(games: &[GameRecord]) -> GameSet {
    GameSet::new(
        games
            .iter()
            .map(|g| ObservedGame {
                id: g.game_id.clone(),
                prices: g.actual_prices,
            })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// Surplus of the predicting agent's own clients at the actual prices.
    Realized,
    /// Eight times the expected surplus of a client drawn from the
    /// distribution.
    Expected,
}

/// Trip surplus the predicting agent earns when it plans with `prediction`.
pub fn score_predictor(game: &GameRecord, prediction: &PriceVector, mode: ScoreMode, ctx: &EvalContext) -> f64 {
    match mode {
        ScoreMode::Realized => game
            .own_clients()
            .iter()
            .map(|c| {
                let trip = ctx.market.optimal_trip(c, prediction);
                ctx.market.surplus(c, &trip, &game.actual_prices)
            })
            .sum(),
        ScoreMode::Expected => {
            CLIENTS_PER_AGENT as f64 * expected_chosen_surplus(prediction, &game.actual_prices, ctx)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub predictor: String,
    pub mean_d: f64,
    pub mean_evpp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub per_game: Vec<PredictorResults>,
}

impl AblationTable {
    pub fn row(&self, predictor: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.predictor == predictor)
    }

    pub fn results(&self, predictor: &str) -> Option<&PredictorResults> {
        self.per_game.iter().find(|r| r.name == predictor)
    }
}

/// Predictors compared in the ablation experiment, in table order.
pub fn ablation_methods() -> Vec<Method> {
    use crate::equilibrium::PredictorVariant;
    let mut methods: Vec<Method> = PredictorVariant::ALL.into_iter().map(Method::Competitive).collect();
    methods.extend([Method::Mean, Method::GeometricMedian, Method::BestEvpp]);
    methods
}

/// Evaluates `methods` on every game; calibrated constants are fit to the
/// same games in hindsight.
pub fn evaluate_methods(
    cfg: &SimulationConfig,
    games: &[GameRecord],
    methods: &[Method],
) -> Result<AblationTable, Error> {
    if games.is_empty() {
        return Err(Error::EmptyGameSet);
    }
    let gs = observed(games);
    let contexts: Vec<EvalContext> = games.iter().map(|g| cfg.context(g)).collect();
    let mut rows = Vec::new();
    let mut per_game = Vec::new();
    for method in methods {
        let predictions = predict_games(method, cfg, games, games)?;
        let predictions = predictions
            .into_iter()
            .filter_map(|(id, p)| p.map(|p| (id, p)))
            .collect();
        let eval = evaluate_predictor(&predictions, &gs, &contexts)?;
        rows.push(AblationRow {
            predictor: method.to_string(),
            mean_d: eval.mean_d,
            mean_evpp: eval.mean_evpp,
        });
        per_game.push(PredictorResults {
            name: method.to_string(),
            rows: eval.rows,
        });
    }
    Ok(AblationTable { rows, per_game })
}

/// Generates `cfg.n_games` games and scores the ablation predictors on them.
pub fn run_ablation_experiment(cfg: &SimulationConfig) -> Result<AblationTable, Error> {
    let games = generate_games(cfg)?;
    evaluate_methods(cfg, &games, &ablation_methods())
}
