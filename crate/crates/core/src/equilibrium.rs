//! Competitive-equilibrium price prediction.
//!
//! Prices move in the direction of excess demand,
//! `p(t+1) = max(0, p(t) + a(t) * (x(p(t)) - supply))`, with a step size that
//! shrinks as `a(t) = alpha0 / (1 + decay * t)`. Demand in this market is
//! piecewise constant in places, so exact clearing is not guaranteed; the
//! solver returns the iterate with the smallest clearing gap it saw.
//!
//! Two residuals are reported. `excess_norm` is the plain max-norm of
//! `x(p) - supply`. `clearing_gap` is the same except that a market priced at
//! zero may hold unsold rooms: those are exactly the fixed points of the
//! clamped update, so the gap is what the iteration actually drives to zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::demand::{aggregate_demand, ClientDistribution, DemandVector};
use crate::error::Error;
use crate::market::{ClientPrefs, FlightPrices, Market, PriceVector};

/// Agents per game.
pub const AGENTS: usize = 8;
/// Clients per agent.
pub const CLIENTS_PER_AGENT: usize = 8;
/// Rooms per hotel per night.
pub const ROOMS_PER_NIGHT: f64 = 16.0;

/// The constant competitive prediction published for the reference agent
/// (no client data, flights at their mean).
pub const PUBLISHED_CONSTANT_PREDICTION: [f64; 8] =
    [28.0, 76.0, 76.0, 28.0, 73.0, 113.0, 113.0, 73.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TatonnementConfig {
    pub initial_guess: PriceVector,
    pub max_iters: usize,
    pub alpha0: f64,
    pub decay: f64,
    pub supply: f64,
    pub tolerance: f64,
}

impl Default for TatonnementConfig {
    fn default() -> Self {
        TatonnementConfig {
            initial_guess: PriceVector::new(PUBLISHED_CONSTANT_PREDICTION).expect("valid"),
            max_iters: 300,
            alpha0: 1.0,
            decay: 0.05,
            supply: ROOMS_PER_NIGHT,
            tolerance: 0.01,
        }
    }
}

impl TatonnementConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let ok = self.max_iters >= 1
            && self.alpha0 > 0.0
            && self.decay >= 0.0
            && self.supply > 0.0
            && self.tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "tatonnement needs max_iters >= 1, alpha0 > 0, decay >= 0, supply > 0, tolerance >= 0; got {self:?}"
            )))
        }
    }

    pub fn step_size(&self, t: usize) -> f64 {
        self.alpha0 / (1.0 + self.decay * t as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub prices: PriceVector,
    /// Max-norm of `x(prices) - supply`.
    pub excess_norm: f64,
    /// Max-norm of excess demand, ignoring excess supply in zero-priced markets.
    pub clearing_gap: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Max-norm of excess demand.
pub fn excess_norm(demand: &DemandVector, supply: f64) -> f64 {
    demand
        .excess(supply)
        .iter()
        .fold(0.0, |m, e| f64::max(m, e.abs()))
}

/// Max-norm of excess demand where excess supply at a zero price counts as
/// cleared.
pub fn clearing_gap(prices: &PriceVector, demand: &DemandVector, supply: f64) -> f64 {
    prices
        .as_array()
        .iter()
        .zip(demand.excess(supply))
        .fold(0.0, |m, (p, e)| {
            let residual = if *p > 0.0 { e.abs() } else { e.max(0.0) };
            f64::max(m, residual)
        })
}

/// Runs price adjustment against `demand_fn` from `cfg.initial_guess`.
///
/// Stops as soon as the clearing gap reaches `cfg.tolerance` or after
/// `cfg.max_iters` price updates, and returns the iterate with the smallest
/// gap (the earliest one on ties).
pub fn tatonnement<F>(mut demand_fn: F, cfg: &TatonnementConfig) -> EquilibriumResult
where
    F: FnMut(&PriceVector) -> DemandVector,
{
    let mut prices = cfg.initial_guess;
    let mut best = EquilibriumResult {
        prices,
        excess_norm: f64::INFINITY,
        clearing_gap: f64::INFINITY,
        iterations_used: 0,
        converged: false,
    };
    for t in 0..=cfg.max_iters {
        let demand = demand_fn(&prices);
        let gap = clearing_gap(&prices, &demand, cfg.supply);
        if gap < best.clearing_gap {
            best.prices = prices;
            best.clearing_gap = gap;
            best.excess_norm = excess_norm(&demand, cfg.supply);
        }
        best.iterations_used = t;
        if gap <= cfg.tolerance || t == cfg.max_iters {
            break;
        }
        let step = cfg.step_size(t);
        let mut next = *prices.as_array();
        for (p, e) in next.iter_mut().zip(demand.excess(cfg.supply)) {
            *p += step * e;
        }
        prices = PriceVector::clamped(next);
    }
    best.converged = best.clearing_gap <= cfg.tolerance;
    best
}

/// Which information the competitive predictor uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredictorVariant {
    /// Use the agent's own eight clients instead of treating them as unknown.
    pub use_own_clients: bool,
    /// Use the game's flight prices instead of their mean.
    pub use_actual_flights: bool,
}

impl PredictorVariant {
    pub const WALVERINE: PredictorVariant = PredictorVariant {
        use_own_clients: true,
        use_actual_flights: true,
    };
    pub const NO_CLIENT_DATA: PredictorVariant = PredictorVariant {
        use_own_clients: false,
        use_actual_flights: true,
    };
    pub const CONSTANT_FLIGHTS: PredictorVariant = PredictorVariant {
        use_own_clients: true,
        use_actual_flights: false,
    };
    pub const CONSTANT: PredictorVariant = PredictorVariant {
        use_own_clients: false,
        use_actual_flights: false,
    };

    pub const ALL: [PredictorVariant; 4] = [
        Self::WALVERINE,
        Self::NO_CLIENT_DATA,
        Self::CONSTANT_FLIGHTS,
        Self::CONSTANT,
    ];

    pub fn name(&self) -> &'static str {
        match (self.use_own_clients, self.use_actual_flights) {
            (true, true) => "walverine",
            (false, true) => "walv-no-cdata",
            (true, false) => "walv-constf",
            (false, false) => "walverine-const",
        }
    }
}

impl fmt::Display for PredictorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        PredictorVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownPredictor {
                name: s.to_string(),
                valid: PredictorVariant::ALL.map(|v| v.name()).join(", "),
            })
    }
}

/// Predicts hotel prices as the competitive equilibrium of the game's
/// economy: the agent's own clients (when used) plus the expected demand of
/// every other client.
pub fn predict_competitive(
    own_clients: &[ClientPrefs],
    market: &Market,
    variant: PredictorVariant,
    dist: &ClientDistribution,
    cfg: &TatonnementConfig,
) -> Result<EquilibriumResult, Error> {
    cfg.validate()?;
    let total = AGENTS * CLIENTS_PER_AGENT;
    let own: &[ClientPrefs] = if variant.use_own_clients {
        if own_clients.len() != CLIENTS_PER_AGENT {
            return Err(Error::OwnClientCount {
                expected: CLIENTS_PER_AGENT,
                got: own_clients.len(),
            });
        }
        own_clients
    } else {
        &[]
    };
    let mut market = *market;
    if !variant.use_actual_flights {
        market.flights = FlightPrices::uniform(FlightPrices::MEAN_INITIAL)?;
    }
    let others = total - own.len();
    Ok(tatonnement(
        |p| aggregate_demand(own, &market, p, dist, others),
        cfg,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Hotel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_point_is_returned_immediately() {
        let cfg = TatonnementConfig::default();
        let r = tatonnement(|_| DemandVector([16.0; 8]), &cfg);
        assert_eq!(r.prices, cfg.initial_guess);
        assert_eq!(r.excess_norm, 0.0);
        assert!(r.iterations_used <= 1);
        assert!(r.converged);
    }

    #[test]
    fn no_demand_floors_at_zero() {
        let cfg = TatonnementConfig {
            initial_guess: PriceVector::ZERO,
            ..Default::default()
        };
        let r = tatonnement(|_| DemandVector::default(), &cfg);
        assert_eq!(r.prices, PriceVector::ZERO);
        assert_eq!(r.excess_norm, 16.0);
        // Nothing is demanded and nothing is charged: a free-goods equilibrium.
        assert_eq!(r.clearing_gap, 0.0);
        assert!(r.converged);
        assert_eq!(r.iterations_used, 0);
    }

    #[test]
    fn linear_market_converges() {
        // x_i(p) = 40 - p_i clears at p_i = 24.
        let cfg = TatonnementConfig {
            initial_guess: PriceVector::ZERO,
            alpha0: 0.5,
            tolerance: 1e-6,
            ..Default::default()
        };
        let r = tatonnement(|p| DemandVector(p.as_array().map(|v| 40.0 - v)), &cfg);
        assert!(r.converged);
        for v in r.prices.as_array() {
            assert!((v - 24.0).abs() < 1e-5);
        }
    }

    #[test]
    fn best_iterate_is_kept() {
        // Demand oscillates, so the last iterate is worse than an earlier one.
        let cfg = TatonnementConfig {
            initial_guess: PriceVector::ZERO,
            max_iters: 5,
            decay: 0.0,
            alpha0: 10.0,
            tolerance: 0.0,
            ..Default::default()
        };
        let r = tatonnement(
            |p| DemandVector(p.as_array().map(|v| if v < 5.0 { 17.0 } else { 0.0 })),
            &cfg,
        );
        assert_eq!(r.excess_norm, 1.0);
        assert_eq!(r.prices, PriceVector::ZERO);
    }

    #[test]
    fn reported_excess_matches_reevaluation() {
        let dist = ClientDistribution::default();
        let m = Market::new(FlightPrices::new([300.0, 350.0, 280.0, 390.0], [310.0, 260.0, 330.0, 400.0]).unwrap());
        let cfg = TatonnementConfig::default();
        let r = tatonnement(|p| aggregate_demand(&[], &m, p, &dist, 64), &cfg);
        let again = aggregate_demand(&[], &m, &r.prices, &dist, 64);
        assert_eq!(excess_norm(&again, cfg.supply), r.excess_norm);
        assert_eq!(clearing_gap(&r.prices, &again, cfg.supply), r.clearing_gap);
        assert!(r.clearing_gap <= r.excess_norm);
    }

    #[test]
    fn constant_variant_is_symmetric_and_input_free() {
        let dist = ClientDistribution::default();
        let cfg = TatonnementConfig::default();
        let a = Market::new(FlightPrices::new([260.0, 390.0, 300.0, 250.0], [399.0, 280.0, 330.0, 270.0]).unwrap());
        let b = Market::new(FlightPrices::uniform(325.0).unwrap());
        let pa = predict_competitive(&[], &a, PredictorVariant::CONSTANT, &dist, &cfg).unwrap();
        let pb = predict_competitive(&[], &b, PredictorVariant::CONSTANT, &dist, &cfg).unwrap();
        assert_eq!(pa.prices, pb.prices);
        let p = pa.prices;
        for h in Hotel::ALL {
            assert!((p.get(h, 1) - p.get(h, 4)).abs() < 1e-6);
            assert!((p.get(h, 2) - p.get(h, 3)).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_flight_variant_ignores_flights() {
        let dist = ClientDistribution::default();
        let cfg = TatonnementConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let own: Vec<_> = (0..8).map(|_| dist.sample(&mut rng)).collect();
        let a = Market::new(FlightPrices::new([260.0, 390.0, 300.0, 250.0], [399.0, 280.0, 330.0, 270.0]).unwrap());
        let b = Market::new(FlightPrices::new([350.0, 250.0, 375.0, 320.0], [251.0, 300.0, 310.0, 400.0]).unwrap());
        let pa = predict_competitive(&own, &a, PredictorVariant::CONSTANT_FLIGHTS, &dist, &cfg).unwrap();
        let pb = predict_competitive(&own, &b, PredictorVariant::CONSTANT_FLIGHTS, &dist, &cfg).unwrap();
        assert_eq!(pa.prices, pb.prices);
    }

    #[test]
    fn own_client_count_is_checked() {
        let dist = ClientDistribution::default();
        let m = Market::new(FlightPrices::uniform(325.0).unwrap());
        let own = vec![ClientPrefs::new(1, 2, 60.0).unwrap(); 7];
        let err = predict_competitive(&own, &m, PredictorVariant::WALVERINE, &dist, &Default::default());
        assert!(matches!(err, Err(Error::OwnClientCount { expected: 8, got: 7 })));
        assert!(predict_competitive(&own, &m, PredictorVariant::NO_CLIENT_DATA, &dist, &Default::default()).is_ok());
    }

    #[test]
    fn symmetric_economy_gives_symmetric_prediction() {
        // Own clients chosen as a mirror-closed set.
        let dist = ClientDistribution::default();
        let own: Vec<_> = [(1, 2, 60.0), (4, 5, 60.0), (1, 3, 90.0), (3, 5, 90.0), (2, 4, 120.0), (2, 4, 70.0), (1, 5, 100.0), (2, 3, 55.0)]
            .iter()
            .map(|&(a, d, h)| ClientPrefs::new(a, d, h).unwrap())
            .collect();
        // (2,3) mirrors to (3,4); swap one client to keep the set closed.
        let mut own = own;
        own[7] = ClientPrefs::new(3, 4, 55.0).unwrap();
        own[5] = ClientPrefs::new(2, 3, 55.0).unwrap();
        let m = Market::new(FlightPrices::new([300.0, 340.0, 360.0, 280.0], [280.0, 360.0, 340.0, 300.0]).unwrap());
        assert_eq!(m.flights.reflected(), m.flights);
        let r = predict_competitive(&own, &m, PredictorVariant::WALVERINE, &dist, &Default::default()).unwrap();
        let p = r.prices;
        let pr = p.reflected();
        for i in 0..8 {
            assert!((p.as_array()[i] - pr.as_array()[i]).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn cheaper_mid_flights_raise_mid_prices() {
        let dist = ClientDistribution::default();
        let cfg = TatonnementConfig::default();
        let base = Market::new(FlightPrices::uniform(325.0).unwrap());
        let mut cheap = base;
        cheap.flights.set_inflight(2, 275.0);
        cheap.flights.set_outflight(4, 275.0);
        let a = predict_competitive(&[], &base, PredictorVariant::NO_CLIENT_DATA, &dist, &cfg).unwrap();
        let b = predict_competitive(&[], &cheap, PredictorVariant::NO_CLIENT_DATA, &dist, &cfg).unwrap();
        for h in Hotel::ALL {
            for d in [2, 3] {
                assert!(b.prices.get(h, d) >= a.prices.get(h, d), "{h:?}{d}: {} < {}", b.prices.get(h, d), a.prices.get(h, d));
            }
        }
    }

    #[test]
    fn gap_ignores_free_surplus_only() {
        let p = PriceVector::new([0.0, 10.0, 10.0, 0.0, 5.0, 5.0, 5.0, 5.0]).unwrap();
        let x = DemandVector([3.0, 16.5, 15.0, 17.0, 16.0, 16.0, 16.0, 16.0]);
        assert_eq!(excess_norm(&x, 16.0), 13.0);
        assert_eq!(clearing_gap(&p, &x, 16.0), 1.0);
    }

    #[test]
    fn random_instances_stay_non_negative() {
        let dist = ClientDistribution::default();
        let cfg = TatonnementConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let f = FlightPrices::new(
                [(); 4].map(|_| rng.random_range(250.0..400.0)),
                [(); 4].map(|_| rng.random_range(250.0..400.0)),
            )
            .unwrap();
            let own: Vec<_> = (0..8).map(|_| dist.sample(&mut rng)).collect();
            let m = Market::new(f);
            let r = predict_competitive(&own, &m, PredictorVariant::WALVERINE, &dist, &cfg).unwrap();
            assert!(r.prices.as_array().iter().all(|v| *v >= 0.0));
            assert!(r.clearing_gap <= r.excess_norm);
            let x = aggregate_demand(&own, &m, &r.prices, &dist, 56);
            assert_eq!(excess_norm(&x, 16.0), r.excess_norm);
        }
    }
}
