//! Travel-market domain types and trip economics.
//!
//! A client is described by a preferred arrival day, a preferred departure
//! day and a hotel premium. A trip pairs an inflight day with a later
//! outflight day and one of the two hotels, or is the null trip (the client
//! stays home). Surplus is value minus the posted cost of the flights and
//! hotel nights the trip needs.
//!
//! Days run `1..=5`; hotel nights run `1..=4`, night `d` being the night that
//! starts on day `d`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of hotel nights in a game.
pub const NIGHTS: usize = 4;

/// The ten feasible `(arrival, departure)` day pairs in lexicographic order.
pub const DAY_PAIRS: [(u8, u8); 10] = [
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (2, 3),
    (2, 4),
    (2, 5),
    (3, 4),
    (3, 5),
    (4, 5),
];

/// Position of `(arrival, departure)` in [`DAY_PAIRS`].
pub fn pair_index(arrival: u8, departure: u8) -> Option<usize> {
    DAY_PAIRS
        .iter()
        .position(|&(a, d)| a == arrival && d == departure)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hotel {
    /// Shoreline Shanties, the cheap hotel.
    #[serde(rename = "S")]
    Shanties,
    /// Tampa Towers; clients pay their premium to stay here.
    #[serde(rename = "T")]
    Towers,
}

impl Hotel {
    pub const ALL: [Hotel; 2] = [Hotel::Shanties, Hotel::Towers];

    fn offset(self) -> usize {
        match self {
            Hotel::Shanties => 0,
            Hotel::Towers => NIGHTS,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Hotel::Shanties => 'S',
            Hotel::Towers => 'T',
        }
    }
}

/// A client's travel preferences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClient")]
pub struct ClientPrefs {
    pa: u8,
    pd: u8,
    hp: f64,
}

#[derive(Deserialize)]
struct RawClient {
    pa: u8,
    pd: u8,
    hp: f64,
}

impl TryFrom<RawClient> for ClientPrefs {
    type Error = Error;
    fn try_from(raw: RawClient) -> Result<Self, Error> {
        ClientPrefs::new(raw.pa, raw.pd, raw.hp)
    }
}

impl ClientPrefs {
    pub fn new(pa: u8, pd: u8, hp: f64) -> Result<Self, Error> {
        if !(1..=4).contains(&pa) || !(2..=5).contains(&pd) || pa >= pd {
            return Err(Error::InvalidClient(format!(
                "preferred days ({pa}, {pd}) must satisfy 1 <= pa < pd <= 5"
            )));
        }
        if !(hp >= 0.0 && hp.is_finite()) {
            return Err(Error::InvalidClient(format!(
                "hotel premium {hp} must be finite and non-negative"
            )));
        }
        Ok(ClientPrefs { pa, pd, hp })
    }

    /// Preferred arrival day.
    pub fn arrival(&self) -> u8 {
        self.pa
    }

    /// Preferred departure day.
    pub fn departure(&self) -> u8 {
        self.pd
    }

    /// Premium for staying at the Towers.
    pub fn premium(&self) -> f64 {
        self.hp
    }

    /// The same client with the day axis reversed (`day -> 6 - day`).
    pub fn reflected(&self) -> ClientPrefs {
        ClientPrefs {
            pa: 6 - self.pd,
            pd: 6 - self.pa,
            hp: self.hp,
        }
    }
}

/// A candidate itinerary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Trip {
    Travel { arrival: u8, departure: u8, hotel: Hotel },
    Null,
}

impl Trip {
    pub fn new(arrival: u8, departure: u8, hotel: Hotel) -> Result<Trip, Error> {
        if !(1 <= arrival && arrival < departure && departure <= 5) {
            return Err(Error::InvalidTrip(format!(
                "days ({arrival}, {departure}) must satisfy 1 <= in < out <= 5"
            )));
        }
        Ok(Trip::Travel {
            arrival,
            departure,
            hotel,
        })
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Trip::Null)
    }

    pub fn hotel(&self) -> Option<Hotel> {
        match *self {
            Trip::Travel { hotel, .. } => Some(hotel),
            Trip::Null => None,
        }
    }

    /// 1 if the trip stays at the Towers, 0 otherwise.
    pub fn towers_indicator(&self) -> f64 {
        if self.hotel() == Some(Hotel::Towers) {
            1.0
        } else {
            0.0
        }
    }

    /// Hotel nights occupied, as `(hotel, night)` pairs.
    pub fn nights(&self) -> impl Iterator<Item = (Hotel, u8)> {
        let (hotel, range) = match *self {
            Trip::Travel {
                arrival,
                departure,
                hotel,
            } => (hotel, arrival..departure),
            Trip::Null => (Hotel::Shanties, 0..0),
        };
        range.map(move |night| (hotel, night))
    }

    pub fn reflected(&self) -> Trip {
        match *self {
            Trip::Travel {
                arrival,
                departure,
                hotel,
            } => Trip::Travel {
                arrival: 6 - departure,
                departure: 6 - arrival,
                hotel,
            },
            Trip::Null => Trip::Null,
        }
    }
}

impl fmt::Display for Trip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trip::Travel {
                arrival,
                departure,
                hotel,
            } => write!(f, "{}{}-{}", hotel.letter(), arrival, departure),
            Trip::Null => f.write_str("null"),
        }
    }
}

const fn build_trips() -> [Trip; 21] {
    let mut trips = [Trip::Null; 21];
    let mut h = 0;
    while h < 2 {
        let hotel = if h == 0 { Hotel::Shanties } else { Hotel::Towers };
        let mut k = 0;
        while k < DAY_PAIRS.len() {
            let (arrival, departure) = DAY_PAIRS[k];
            trips[h * 10 + k] = Trip::Travel {
                arrival,
                departure,
                hotel,
            };
            k += 1;
        }
        h += 1;
    }
    trips
}

/// Every trip a client can take, in tie-breaking order: Shanties trips, then
/// Towers trips, each lexicographic by `(in, out)`, then the null trip.
pub const ALL_TRIPS: [Trip; 21] = build_trips();

pub fn enumerate_trips() -> Vec<Trip> {
    ALL_TRIPS.to_vec()
}

/// Hotel prices, one per `(hotel, night)`. Serialized as
/// `[S1, S2, S3, S4, T1, T2, T3, T4]`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "[f64; 8]", into = "[f64; 8]")]
pub struct PriceVector([f64; 8]);

impl TryFrom<[f64; 8]> for PriceVector {
    type Error = Error;
    fn try_from(values: [f64; 8]) -> Result<Self, Error> {
        PriceVector::new(values)
    }
}

impl From<PriceVector> for [f64; 8] {
    fn from(p: PriceVector) -> [f64; 8] {
        p.0
    }
}

impl PriceVector {
    pub const ZERO: PriceVector = PriceVector([0.0; 8]);

    pub fn new(values: [f64; 8]) -> Result<Self, Error> {
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidPrice(format!(
                "hotel price {bad} must be finite and non-negative"
            )));
        }
        Ok(PriceVector(values))
    }

    /// Builds a vector by clamping every entry at zero.
    pub fn clamped(values: [f64; 8]) -> Self {
        PriceVector(values.map(|v| if v > 0.0 { v } else { 0.0 }))
    }

    pub fn uniform(value: f64) -> Result<Self, Error> {
        PriceVector::new([value; 8])
    }

    pub fn get(&self, hotel: Hotel, night: u8) -> f64 {
        self.0[hotel.offset() + night as usize - 1]
    }

    pub fn set(&mut self, hotel: Hotel, night: u8, value: f64) -> Result<(), Error> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::InvalidPrice(format!(
                "hotel price {value} must be finite and non-negative"
            )));
        }
        self.0[hotel.offset() + night as usize - 1] = value;
        Ok(())
    }

    pub fn as_array(&self) -> &[f64; 8] {
        &self.0
    }

    pub fn reflected(&self) -> PriceVector {
        let p = self.0;
        PriceVector([p[3], p[2], p[1], p[0], p[7], p[6], p[5], p[4]])
    }

    pub fn scaled(&self, factor: f64) -> Result<PriceVector, Error> {
        PriceVector::new(self.0.map(|v| v * factor))
    }
}

/// Column labels in canonical order.
pub const PRICE_LABELS: [&str; 8] = ["S1", "S2", "S3", "S4", "T1", "T2", "T3", "T4"];

/// Flight prices: inflights on days 1–4 and outflights on days 2–5.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFlights")]
pub struct FlightPrices {
    #[serde(rename = "in")]
    inflight: [f64; 4],
    #[serde(rename = "out")]
    outflight: [f64; 4],
}

#[derive(Deserialize)]
struct RawFlights {
    #[serde(rename = "in")]
    inflight: [f64; 4],
    #[serde(rename = "out")]
    outflight: [f64; 4],
}

impl TryFrom<RawFlights> for FlightPrices {
    type Error = Error;
    fn try_from(raw: RawFlights) -> Result<Self, Error> {
        FlightPrices::new(raw.inflight, raw.outflight)
    }
}

impl FlightPrices {
    /// Mean of the initial flight price distribution.
    pub const MEAN_INITIAL: f64 = 325.0;

    /// `inflight[i]` is the day `i + 1` inflight; `outflight[j]` the day `j + 2` outflight.
    pub fn new(inflight: [f64; 4], outflight: [f64; 4]) -> Result<Self, Error> {
        if let Some(bad) = inflight
            .iter()
            .chain(&outflight)
            .find(|v| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidPrice(format!(
                "flight price {bad} must be finite and non-negative"
            )));
        }
        Ok(FlightPrices {
            inflight,
            outflight,
        })
    }

    pub fn uniform(value: f64) -> Result<Self, Error> {
        FlightPrices::new([value; 4], [value; 4])
    }

    pub fn inflight(&self, day: u8) -> f64 {
        self.inflight[day as usize - 1]
    }

    pub fn outflight(&self, day: u8) -> f64 {
        self.outflight[day as usize - 2]
    }

    pub fn inflights(&self) -> &[f64; 4] {
        &self.inflight
    }

    pub fn outflights(&self) -> &[f64; 4] {
        &self.outflight
    }

    pub fn set_inflight(&mut self, day: u8, value: f64) {
        self.inflight[day as usize - 1] = value.max(0.0);
    }

    pub fn set_outflight(&mut self, day: u8, value: f64) {
        self.outflight[day as usize - 2] = value.max(0.0);
    }

    /// Swaps inflight day `i` with outflight day `6 - i`.
    pub fn reflected(&self) -> FlightPrices {
        let mut inflight = self.outflight;
        inflight.reverse();
        let mut outflight = self.inflight;
        outflight.reverse();
        FlightPrices {
            inflight,
            outflight,
        }
    }
}

/// Expected entertainment surplus for each feasible `(in, out)` pair,
/// indexed like [`DAY_PAIRS`].
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "[f64; 10]", into = "[f64; 10]")]
pub struct EntertainmentModel([f64; 10]);

impl TryFrom<[f64; 10]> for EntertainmentModel {
    type Error = Error;
    fn try_from(phi: [f64; 10]) -> Result<Self, Error> {
        EntertainmentModel::new(phi)
    }
}

impl From<EntertainmentModel> for [f64; 10] {
    fn from(e: EntertainmentModel) -> [f64; 10] {
        e.0
    }
}

impl EntertainmentModel {
    pub fn new(phi: [f64; 10]) -> Result<Self, Error> {
        if let Some(bad) = phi.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "entertainment surplus {bad} must be finite and non-negative"
            )));
        }
        Ok(EntertainmentModel(phi))
    }

    pub fn phi(&self, arrival: u8, departure: u8) -> f64 {
        pair_index(arrival, departure).map_or(0.0, |k| self.0[k])
    }

    pub fn reflected(&self) -> EntertainmentModel {
        let mut phi = [0.0; 10];
        for (k, &(a, d)) in DAY_PAIRS.iter().enumerate() {
            phi[pair_index(6 - d, 6 - a).expect("reflected pair is feasible")] = self.0[k];
        }
        EntertainmentModel(phi)
    }
}

/// Value of `trip` to client `c`; zero for the null trip.
pub fn trip_value(c: &ClientPrefs, trip: &Trip, ent: &EntertainmentModel) -> f64 {
    match *trip {
        Trip::Null => 0.0,
        Trip::Travel {
            arrival,
            departure,
            ..
        } => {
            let deviation = c.pa.abs_diff(arrival) as f64 + c.pd.abs_diff(departure) as f64;
            1000.0 - 100.0 * deviation
                + c.hp * trip.towers_indicator()
                + ent.phi(arrival, departure)
        }
    }
}

/// Posted price of the flights and hotel nights `trip` needs.
pub fn trip_cost(trip: &Trip, prices: &PriceVector, flights: &FlightPrices) -> f64 {
    match *trip {
        Trip::Null => 0.0,
        Trip::Travel {
            arrival,
            departure,
            ..
        } => {
            let hotels: f64 = trip.nights().map(|(h, d)| prices.get(h, d)).sum();
            flights.inflight(arrival) + flights.outflight(departure) + hotels
        }
    }
}

/// Exogenous side of trip choice: flights, entertainment, and whether a client
/// may be left at home.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Market {
    pub flights: FlightPrices,
    #[serde(default)]
    pub entertainment: EntertainmentModel,
    #[serde(default = "default_true")]
    pub include_null_trip: bool,
}

impl Default for Market {
    /// Every flight at the mean initial price.
    fn default() -> Self {
        Market::new(FlightPrices::uniform(FlightPrices::MEAN_INITIAL).expect("positive constant"))
    }
}

fn default_true() -> bool {
    true
}

impl Market {
    pub fn new(flights: FlightPrices) -> Self {
        Market {
            flights,
            entertainment: EntertainmentModel::default(),
            include_null_trip: true,
        }
    }

    pub fn with_entertainment(mut self, ent: EntertainmentModel) -> Self {
        self.entertainment = ent;
        self
    }

    pub fn with_null_trip(mut self, include: bool) -> Self {
        self.include_null_trip = include;
        self
    }

    /// The choice set: all 20 travel trips, plus the null trip when enabled.
    pub fn choices(&self) -> &'static [Trip] {
        if self.include_null_trip {
            &ALL_TRIPS
        } else {
            &ALL_TRIPS[..20]
        }
    }

    pub fn surplus(&self, c: &ClientPrefs, trip: &Trip, prices: &PriceVector) -> f64 {
        surplus(c, trip, prices, &self.flights, &self.entertainment)
    }

    /// Surplus of a travel trip for preferred days `(pa, pd)`, leaving out the
    /// hotel premium.
    pub(crate) fn base_surplus(&self, pa: u8, pd: u8, trip: &Trip, prices: &PriceVector) -> f64 {
        let c = ClientPrefs { pa, pd, hp: 0.0 };
        self.surplus(&c, trip, prices)
    }

    /// The surplus-maximizing trip; the earliest trip in enumeration order
    /// wins ties.
    pub fn optimal_trip(&self, c: &ClientPrefs, prices: &PriceVector) -> Trip {
        let mut best = self.choices()[0];
        let mut best_surplus = f64::NEG_INFINITY;
        for trip in self.choices() {
            let s = self.surplus(c, trip, prices);
            if s > best_surplus {
                best = *trip;
                best_surplus = s;
            }
        }
        best
    }

    pub fn reflected(&self) -> Market {
        Market {
            flights: self.flights.reflected(),
            entertainment: self.entertainment.reflected(),
            include_null_trip: self.include_null_trip,
        }
    }
}

/// Value minus cost.
pub fn surplus(
    c: &ClientPrefs,
    trip: &Trip,
    prices: &PriceVector,
    flights: &FlightPrices,
    ent: &EntertainmentModel,
) -> f64 {
    trip_value(c, trip, ent) - trip_cost(trip, prices, flights)
}

/// [`Market::optimal_trip`] with the null trip included.
pub fn optimal_trip(
    c: &ClientPrefs,
    prices: &PriceVector,
    flights: &FlightPrices,
    ent: &EntertainmentModel,
) -> Trip {
    Market::new(*flights)
        .with_entertainment(*ent)
        .optimal_trip(c, prices)
}
