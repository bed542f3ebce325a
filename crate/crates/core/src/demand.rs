//! Hotel demand: per client, in expectation over the client distribution, and
//! in aggregate.
//!
//! For a fixed pair of preferred days the hotel premium enters every Towers
//! trip additively and no Shanties trip at all. So the best Shanties trip and
//! the best Towers trip do not depend on the premium, and the premium axis
//! splits into at most three segments (Shanties, Towers, or stay home) at the
//! crossing points of a constant, a unit-slope line, and zero. Integrating
//! over those segments gives the expectation exactly.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::market::{ClientPrefs, Hotel, Market, PriceVector, Trip, ALL_TRIPS, DAY_PAIRS, NIGHTS};

/// Surplus differences below this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Distribution of client preferences: a categorical law over the ten day
/// pairs and an independent continuous uniform premium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct ClientDistribution {
    day_pair_weights: [f64; 10],
    hp_low: f64,
    hp_high: f64,
}

#[derive(Deserialize)]
struct RawDistribution {
    day_pair_weights: [f64; 10],
    hp_low: f64,
    hp_high: f64,
}

impl TryFrom<RawDistribution> for ClientDistribution {
    type Error = Error;
    fn try_from(raw: RawDistribution) -> Result<Self, Error> {
        ClientDistribution::new(raw.day_pair_weights, raw.hp_low, raw.hp_high)
    }
}

impl Default for ClientDistribution {
    fn default() -> Self {
        ClientDistribution {
            day_pair_weights: [0.1; 10],
            hp_low: 50.0,
            hp_high: 150.0,
        }
    }
}

impl ClientDistribution {
    pub fn new(day_pair_weights: [f64; 10], hp_low: f64, hp_high: f64) -> Result<Self, Error> {
        if day_pair_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidConfig("day-pair weights must be non-negative".into()));
        }
        let total: f64 = day_pair_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "day-pair weights sum to {total}, expected 1"
            )));
        }
        if !(hp_low >= 0.0 && hp_low <= hp_high && hp_high.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "premium bounds [{hp_low}, {hp_high}] must satisfy 0 <= low <= high"
            )));
        }
        Ok(ClientDistribution {
            day_pair_weights,
            hp_low,
            hp_high,
        })
    }

    pub fn weights(&self) -> &[f64; 10] {
        &self.day_pair_weights
    }

    pub fn hp_low(&self) -> f64 {
        self.hp_low
    }

    pub fn hp_high(&self) -> f64 {
        self.hp_high
    }

    pub fn mean_hp(&self) -> f64 {
        0.5 * (self.hp_low + self.hp_high)
    }

    /// Probability that the premium falls in `[lo, hi]`.
    pub fn hp_mass(&self, lo: f64, hi: f64) -> f64 {
        let width = self.hp_high - self.hp_low;
        if width > 0.0 {
            (hi - lo) / width
        } else {
            1.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ClientPrefs {
        let pairs = WeightedIndex::new(self.day_pair_weights).expect("weights validated");
        let (pa, pd) = DAY_PAIRS[pairs.sample(rng)];
        let hp = if self.hp_high > self.hp_low {
            rng.random_range(self.hp_low..self.hp_high)
        } else {
            self.hp_low
        };
        ClientPrefs::new(pa, pd, hp).expect("sampled client is valid")
    }

    pub fn reflected(&self) -> ClientDistribution {
        let mut weights = [0.0; 10];
        for (k, &(a, d)) in DAY_PAIRS.iter().enumerate() {
            let mirror = DAY_PAIRS
                .iter()
                .position(|&p| p == (6 - d, 6 - a))
                .expect("reflected pair is feasible");
            weights[mirror] = self.day_pair_weights[k];
        }
        ClientDistribution {
            day_pair_weights: weights,
            ..*self
        }
    }
}

/// Room-nights demanded per `(hotel, night)`, laid out like [`PriceVector`].
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct DemandVector(pub [f64; 8]);

impl DemandVector {
    pub fn get(&self, hotel: Hotel, night: u8) -> f64 {
        self.0[index(hotel, night)]
    }

    pub fn as_array(&self) -> &[f64; 8] {
        &self.0
    }

    fn add_trip(&mut self, trip: &Trip, amount: f64) {
        for (h, d) in trip.nights() {
            self.0[index(h, d)] += amount;
        }
    }

    fn add_scaled(&mut self, other: &DemandVector, factor: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
    }

    /// Component-wise `self - supply`.
    pub fn excess(&self, supply: f64) -> [f64; 8] {
        self.0.map(|x| x - supply)
    }

    pub fn reflected(&self) -> DemandVector {
        let x = self.0;
        DemandVector([x[3], x[2], x[1], x[0], x[7], x[6], x[5], x[4]])
    }
}

fn index(hotel: Hotel, night: u8) -> usize {
    let offset = match hotel {
        Hotel::Shanties => 0,
        Hotel::Towers => NIGHTS,
    };
    offset + night as usize - 1
}

/// Indicator demand of one client's optimal trip.
pub fn client_demand(c: &ClientPrefs, market: &Market, prices: &PriceVector) -> DemandVector {
    let mut x = DemandVector::default();
    x.add_trip(&market.optimal_trip(c, prices), 1.0);
    x
}

/// One interval of the premium axis over which trip choice is constant.
#[derive(Clone, Debug, PartialEq)]
pub struct HpSegment {
    pub lo: f64,
    pub hi: f64,
    /// Probability of the premium landing in this segment.
    pub mass: f64,
    /// Trips attaining the maximum surplus on the segment, in enumeration
    /// order. Almost always one; several only under exact ties.
    pub trips: Vec<Trip>,
}

impl HpSegment {
    /// The trip [`Market::optimal_trip`] would pick inside the segment.
    pub fn choice(&self) -> Trip {
        self.trips[0]
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Trip choice of a `(pa, pd)` client as a function of the premium.
#[derive(Clone, Debug, PartialEq)]
pub struct HpPartition {
    pub arrival: u8,
    pub departure: u8,
    /// Best hp-independent Shanties surplus.
    pub best_shanties: f64,
    /// Best Towers surplus with the premium left out.
    pub best_towers_base: f64,
    pub segments: Vec<HpSegment>,
}

impl HpPartition {
    /// Interior points where the chosen trip changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.lo).collect()
    }
}

struct BestTrips {
    value: f64,
    trips: Vec<Trip>,
}

fn best_of(market: &Market, pa: u8, pd: u8, prices: &PriceVector, trips: &[Trip]) -> BestTrips {
    let values: Vec<f64> = trips
        .iter()
        .map(|t| market.base_surplus(pa, pd, t, prices))
        .collect();
    let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let trips = trips
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v >= value - TIE_TOLERANCE)
        .map(|(t, _)| *t)
        .collect();
    BestTrips { value, trips }
}

/// Splits `[hp_low, hp_high]` into segments of constant trip choice for
/// clients preferring `(pa, pd)`.
pub fn partition_by_hp(
    pa: u8,
    pd: u8,
    market: &Market,
    prices: &PriceVector,
    dist: &ClientDistribution,
) -> HpPartition {
    debug_assert!(pa < pd);
    let shanties = best_of(market, pa, pd, prices, &ALL_TRIPS[..10]);
    let towers = best_of(market, pa, pd, prices, &ALL_TRIPS[10..20]);
    let with_null = market.include_null_trip;

    // Winners at premium `hp`, Shanties before Towers before null.
    let winners = |hp: f64| -> Vec<Trip> {
        let s = shanties.value;
        let t = towers.value + hp;
        let n = if with_null { 0.0 } else { f64::NEG_INFINITY };
        let top = s.max(t).max(n);
        let mut out = Vec::new();
        if s >= top - TIE_TOLERANCE {
            out.extend(&shanties.trips);
        }
        if t >= top - TIE_TOLERANCE {
            out.extend(&towers.trips);
        }
        if with_null && n >= top - TIE_TOLERANCE {
            out.push(Trip::Null);
        }
        out
    };

    let (lo, hi) = (dist.hp_low(), dist.hp_high());
    if hi <= lo {
        return HpPartition {
            arrival: pa,
            departure: pd,
            best_shanties: shanties.value,
            best_towers_base: towers.value,
            segments: vec![HpSegment {
                lo,
                hi,
                mass: 1.0,
                trips: winners(lo),
            }],
        };
    }

    let mut cuts = vec![lo, hi];
    let mut crossings = vec![shanties.value - towers.value];
    if with_null {
        crossings.push(-towers.value);
    }
    cuts.extend(crossings.into_iter().filter(|x| *x > lo && *x < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut segments: Vec<HpSegment> = Vec::with_capacity(3);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let trips = winners(0.5 * (a + b));
        match segments.last_mut() {
            Some(last) if last.trips == trips => last.hi = b,
            _ => segments.push(HpSegment {
                lo: a,
                hi: b,
                mass: 0.0,
                trips,
            }),
        }
    }
    for s in &mut segments {
        s.mass = dist.hp_mass(s.lo, s.hi);
    }
    HpPartition {
        arrival: pa,
        departure: pd,
        best_shanties: shanties.value,
        best_towers_base: towers.value,
        segments,
    }
}

/// Expected demand of one client drawn from `dist`, computed exactly.
///
/// Exactly tied trips share their segment's mass equally, which keeps the
/// result day-symmetric whenever the inputs are.
pub fn expected_client_demand(
    market: &Market,
    prices: &PriceVector,
    dist: &ClientDistribution,
) -> DemandVector {
    let mut x = DemandVector::default();
    for (k, &(pa, pd)) in DAY_PAIRS.iter().enumerate() {
        let w = dist.weights()[k];
        if w == 0.0 {
            continue;
        }
        for seg in partition_by_hp(pa, pd, market, prices, dist).segments {
            let share = w * seg.mass / seg.trips.len() as f64;
            for t in &seg.trips {
                x.add_trip(t, share);
            }
        }
    }
    x
}

/// Demand of the known clients plus `other_client_count` clients in
/// expectation.
pub fn aggregate_demand(
    own_clients: &[ClientPrefs],
    market: &Market,
    prices: &PriceVector,
    dist: &ClientDistribution,
    other_client_count: usize,
) -> DemandVector {
    let mut x = DemandVector::default();
    for c in own_clients {
        x.add_scaled(&client_demand(c, market, prices), 1.0);
    }
    if other_client_count > 0 {
        x.add_scaled(
            &expected_client_demand(market, prices, dist),
            other_client_count as f64,
        );
    }
    x
}

/// Demand of a fixed, fully known client population.
pub fn realized_demand(clients: &[ClientPrefs], market: &Market, prices: &PriceVector) -> DemandVector {
    aggregate_demand(clients, market, prices, &ClientDistribution::default(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::FlightPrices;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn free_market() -> Market {
        Market::new(FlightPrices::uniform(0.0).unwrap())
    }

    fn random_instance(seed: u64) -> (Market, PriceVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inflight = [(); 4].map(|_| rng.random_range(250.0..400.0));
        let outflight = [(); 4].map(|_| rng.random_range(250.0..400.0));
        let prices = [(); 8].map(|_| rng.random_range(0.0..200.0));
        (
            Market::new(FlightPrices::new(inflight, outflight).unwrap()),
            PriceVector::new(prices).unwrap(),
        )
    }

    #[test]
    fn client_demand_examples() {
        let c = ClientPrefs::new(1, 3, 100.0).unwrap();
        let x = client_demand(&c, &free_market(), &PriceVector::ZERO);
        assert_eq!(x.0, [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);

        let m = Market::new(FlightPrices::uniform(325.0).unwrap());
        let x = client_demand(&c, &m, &PriceVector::uniform(1e6).unwrap());
        assert_eq!(x.0, [0.0; 8]);
    }

    #[test]
    fn client_demand_matches_brute_force_indicator() {
        let (m, p) = random_instance(11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let c = ClientDistribution::default().sample(&mut rng);
            let best = ALL_TRIPS
                .iter()
                .copied()
                .reduce(|a, b| if m.surplus(&c, &b, &p) > m.surplus(&c, &a, &p) { b } else { a })
                .unwrap();
            let mut expect = [0.0; 8];
            if let Trip::Travel { arrival, departure, hotel } = best {
                for d in arrival..departure {
                    expect[index(hotel, d)] = 1.0;
                }
            }
            assert_eq!(client_demand(&c, &m, &p).0, expect);
        }
    }

    #[test]
    fn partition_single_crossing() {
        // Build a market where, for (2, 3), the best S surplus is 200 and the
        // best T base surplus is 100: S2 costs 800, T2 costs 900, flights free.
        let mut p = PriceVector::uniform(5000.0).unwrap();
        p.set(Hotel::Shanties, 2, 800.0).unwrap();
        p.set(Hotel::Towers, 2, 900.0).unwrap();
        let part = partition_by_hp(2, 3, &free_market(), &p, &ClientDistribution::default());
        assert_eq!(part.best_shanties, 200.0);
        assert_eq!(part.best_towers_base, 100.0);
        assert_eq!(part.breakpoints(), vec![100.0]);
        assert_eq!(part.segments[0].choice().hotel(), Some(Hotel::Shanties));
        assert_eq!(part.segments[1].choice().hotel(), Some(Hotel::Towers));
        assert_abs_diff_eq!(part.segments[0].mass, 0.5);
    }

    #[test]
    fn partition_all_negative_is_null() {
        let m = Market::new(FlightPrices::uniform(325.0).unwrap());
        let p = PriceVector::uniform(1e6).unwrap();
        let part = partition_by_hp(2, 4, &m, &p, &ClientDistribution::default());
        assert_eq!(part.segments.len(), 1);
        assert_eq!(part.segments[0].choice(), Trip::Null);
        assert_eq!(part.segments[0].mass, 1.0);
    }

    #[test]
    fn partition_agrees_with_pointwise_choice() {
        let dist = ClientDistribution::default();
        for seed in 0..50 {
            let (m, p) = random_instance(seed);
            for &(pa, pd) in &DAY_PAIRS {
                let part = partition_by_hp(pa, pd, &m, &p, &dist);
                assert!(part.segments.len() <= 3);
                let total: f64 = part.segments.iter().map(|s| s.mass).sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
                assert_eq!(part.segments[0].lo, dist.hp_low());
                assert_eq!(part.segments.last().unwrap().hi, dist.hp_high());
                for pair in part.segments.windows(2) {
                    assert!(pair[0].hi == pair[1].lo && pair[0].lo < pair[0].hi);
                }
                for seg in &part.segments {
                    let c = ClientPrefs::new(pa, pd, seg.midpoint()).unwrap();
                    assert_eq!(seg.choice(), m.optimal_trip(&c, &p));
                }
            }
        }
    }

    #[test]
    fn free_goods_demand_is_exact_span_towers() {
        let x = expected_client_demand(&free_market(), &PriceVector::ZERO, &ClientDistribution::default());
        for (got, want) in x.0.iter().zip([0.0, 0.0, 0.0, 0.0, 0.4, 0.6, 0.6, 0.4]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn aggregate_examples() {
        let dist = ClientDistribution::default();
        let x = aggregate_demand(&[], &free_market(), &PriceVector::ZERO, &dist, 64);
        assert_abs_diff_eq!(x.get(Hotel::Towers, 2), 38.4, epsilon = 1e-9);
        let x = aggregate_demand(&[], &free_market(), &PriceVector::ZERO, &dist, 0);
        assert_eq!(x.0, [0.0; 8]);

        let (m, p) = random_instance(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let own: Vec<_> = (0..8).map(|_| dist.sample(&mut rng)).collect();
        let x = aggregate_demand(&own, &m, &p, &dist, 56);
        let expected = expected_client_demand(&m, &p, &dist);
        for i in 0..8 {
            let own_sum: f64 = own.iter().map(|c| client_demand(c, &m, &p).0[i]).sum();
            assert_abs_diff_eq!(x.0[i], own_sum + 56.0 * expected.0[i], epsilon = 1e-9);
            assert!(x.0[i] >= 0.0 && x.0[i] <= 64.0 + 1e-9);
        }
    }

    #[test]
    fn expected_demand_matches_segment_integration() {
        let dist = ClientDistribution::default();
        for seed in 100..120 {
            let (m, p) = random_instance(seed);
            let mut x = [0.0; 8];
            for (k, &(pa, pd)) in DAY_PAIRS.iter().enumerate() {
                for seg in partition_by_hp(pa, pd, &m, &p, &dist).segments {
                    for (h, d) in seg.choice().nights() {
                        x[index(h, d)] += dist.weights()[k] * seg.mass;
                    }
                }
            }
            let got = expected_client_demand(&m, &p, &dist);
            for i in 0..8 {
                assert_abs_diff_eq!(got.0[i], x[i], epsilon = 1e-9);
                assert!(got.0[i] >= 0.0 && got.0[i] <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn expected_demand_matches_monte_carlo() {
        let dist = ClientDistribution::default();
        let (m, p) = random_instance(7);
        let exact = expected_client_demand(&m, &p, &dist);
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = [0.0; 8];
        for _ in 0..n {
            let c = dist.sample(&mut rng);
            for (h, d) in m.optimal_trip(&c, &p).nights() {
                counts[index(h, d)] += 1.0;
            }
        }
        for i in 0..8 {
            let q = counts[i] / n as f64;
            let se = (q * (1.0 - q) / n as f64).sqrt().max(1e-6);
            assert!(
                (q - exact.0[i]).abs() <= 3.0 * se,
                "entry {i}: sampled {q} exact {}",
                exact.0[i]
            );
        }
    }

    #[test]
    fn symmetric_inputs_give_symmetric_demand() {
        let m = Market::new(FlightPrices::uniform(325.0).unwrap());
        let p = PriceVector::new([28.0, 76.0, 76.0, 28.0, 73.0, 113.0, 113.0, 73.0]).unwrap();
        let x = expected_client_demand(&m, &p, &ClientDistribution::default());
        let r = x.reflected();
        for i in 0..8 {
            assert_abs_diff_eq!(x.0[i], r.0[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn reflection_maps_demand() {
        let dist = ClientDistribution::new(
            [0.05, 0.15, 0.1, 0.1, 0.05, 0.2, 0.05, 0.1, 0.1, 0.1],
            40.0,
            170.0,
        )
        .unwrap();
        for seed in 0..10 {
            let (m, p) = random_instance(200 + seed);
            let x = expected_client_demand(&m, &p, &dist);
            let xr = expected_client_demand(&m.reflected(), &p.reflected(), &dist.reflected());
            for i in 0..8 {
                assert_abs_diff_eq!(x.reflected().0[i], xr.0[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn own_price_monotonicity() {
        let dist = ClientDistribution::default();
        for seed in 0..20 {
            let (m, p) = random_instance(300 + seed);
            let base = expected_client_demand(&m, &p, &dist);
            for i in 0..8 {
                let mut raised = *p.as_array();
                raised[i] += 25.0;
                let x = expected_client_demand(&m, &PriceVector::new(raised).unwrap(), &dist);
                assert!(x.0[i] <= base.0[i] + 1e-12);
            }
        }
    }

    #[test]
    fn flight_shift_invariance_without_null_trip() {
        let dist = ClientDistribution::default();
        for seed in 0..10 {
            let (m, p) = random_instance(400 + seed);
            let m = m.with_null_trip(false);
            let mut shifted = m;
            for d in 1..=4 {
                shifted.flights.set_inflight(d, m.flights.inflight(d) + 40.0);
            }
            for d in 2..=5 {
                shifted.flights.set_outflight(d, m.flights.outflight(d) + 40.0);
            }
            let a = expected_client_demand(&m, &p, &dist);
            let b = expected_client_demand(&shifted, &p, &dist);
            for i in 0..8 {
                assert_abs_diff_eq!(a.0[i], b.0[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_premium_is_point_mass() {
        let dist = ClientDistribution::new([0.1; 10], 80.0, 80.0).unwrap();
        let (m, p) = random_instance(9);
        let part = partition_by_hp(1, 4, &m, &p, &dist);
        assert_eq!(part.segments.len(), 1);
        assert_eq!(part.segments[0].mass, 1.0);
        let c = ClientPrefs::new(1, 4, 80.0).unwrap();
        assert_eq!(part.segments[0].choice(), m.optimal_trip(&c, &p));
    }

    #[test]
    fn distribution_validation() {
        assert!(ClientDistribution::new([0.2; 10], 50.0, 150.0).is_err());
        assert!(ClientDistribution::new([0.1; 10], 150.0, 50.0).is_err());
        let json = r#"{"day_pair_weights":[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1],"hp_low":50,"hp_high":150}"#;
        let d: ClientDistribution = serde_json::from_str(json).unwrap();
        assert_eq!(d, ClientDistribution::default());
    }
}
