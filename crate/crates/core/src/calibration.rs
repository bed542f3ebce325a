//! Best constant predictions in hindsight under each accuracy measure.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::market::PriceVector;
use crate::metrics::{euclidean_distance, mean_evpp, EvalContext};
use crate::predictors::{historical_mean, GameSet};

const COINCIDENCE: f64 = 1e-9;

/// The minimizer of aggregate squared distance: the component-wise mean.
pub fn best_squared(gs: &GameSet) -> Result<PriceVector, Error> {
    historical_mean(gs)
}

pub fn aggregate_distance(point: &PriceVector, gs: &GameSet) -> f64 {
    gs.prices().map(|p| euclidean_distance(point, p)).sum()
}

pub fn aggregate_squared_distance(point: &PriceVector, gs: &GameSet) -> f64 {
    gs.prices().map(|p| euclidean_distance(point, p).powi(2)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricMedian {
    pub point: PriceVector,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(v: &[f64; 8]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes aggregate Euclidean distance by Weiszfeld iteration from the
/// mean, with the Vardi-Zhang modification when an iterate lands on a data
/// point.
pub fn geometric_median(gs: &GameSet, tol: f64, max_iters: usize) -> Result<GeometricMedian, Error> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("geometric median tolerance must be positive".into()));
    }
    let points: Vec<[f64; 8]> = gs.prices().map(|p| *p.as_array()).collect();
    let mut y = *historical_mean(gs)?.as_array();
    let objective = |y: &[f64; 8]| -> f64 {
        points
            .iter()
            .map(|x| norm(&std::array::from_fn(|i| x[i] - y[i])))
            .sum()
    };
    let mut best = (y, objective(&y));

    for iter in 1..=max_iters {
        let mut num = [0.0; 8];
        let mut den = 0.0;
        let mut pull = [0.0; 8];
        let mut coincident = 0usize;
        for x in &points {
            let diff: [f64; 8] = std::array::from_fn(|i| x[i] - y[i]);
            let r = norm(&diff);
            if r < COINCIDENCE {
                coincident += 1;
                continue;
            }
            for i in 0..8 {
                num[i] += x[i] / r;
                pull[i] += diff[i] / r;
            }
            den += 1.0 / r;
        }
        let done = |best: ([f64; 8], f64), iterations| GeometricMedian {
            point: PriceVector::clamped(best.0),
            objective: best.1,
            iterations,
            converged: true,
        };
        if den == 0.0 {
            // Every point coincides with the iterate.
            return Ok(done((y, objective(&y)), iter - 1));
        }
        let pull_norm = norm(&pull);
        if coincident > 0 && pull_norm <= coincident as f64 {
            // The subgradient contains zero: the data point is optimal.
            return Ok(done((y, objective(&y)), iter - 1));
        }
        let weiszfeld: [f64; 8] = std::array::from_fn(|i| num[i] / den);
        let next: [f64; 8] = if coincident == 0 {
            weiszfeld
        } else {
            let eta = coincident as f64 / pull_norm;
            std::array::from_fn(|i| (1.0 - eta) * weiszfeld[i] + eta * y[i])
        };
        let step = norm(&std::array::from_fn(|i| next[i] - y[i]));
        y = next;
        let f = objective(&y);
        if f < best.1 {
            best = (y, f);
        }
        if step < tol {
            return Ok(done(best, iter));
        }
    }
    Ok(GeometricMedian {
        point: PriceVector::clamped(best.0),
        objective: best.1,
        iterations: max_iters,
        converged: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillClimbConfig {
    pub step: f64,
    pub tol: f64,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        HillClimbConfig { step: 8.0, tol: 0.25 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillClimbResult {
    pub point: PriceVector,
    pub mean_evpp: f64,
    /// Which start led to the returned point.
    pub start_index: usize,
    pub evaluations: usize,
}

/// The default starting set: historical mean, historical median, and zero.
pub fn default_starts(gs: &GameSet) -> Result<Vec<PriceVector>, Error> {
    Ok(vec![
        historical_mean(gs)?,
        crate::predictors::historical_median(gs)?,
        PriceVector::ZERO,
    ])
}

/// Coordinate-wise descent on mean EVPP from each start.
///
/// Each pass tries `+step` then `-step` on every coordinate and keeps strict
/// improvements. A pass without improvement halves the step, never below
/// `tol`; a failed pass at `tol` ends the climb.
pub fn hill_climb_evpp(
    games: &[(PriceVector, EvalContext)],
    starts: &[PriceVector],
    cfg: &HillClimbConfig,
) -> Result<HillClimbResult, Error> {
    if games.is_empty() {
        return Err(Error::EmptyGameSet);
    }
    if starts.is_empty() {
        return Err(Error::InvalidConfig("hill climbing needs at least one start".into()));
    }
    if !(cfg.tol > 0.0) || cfg.step < cfg.tol {
        return Err(Error::InvalidConfig("hill climbing needs step >= tol > 0".into()));
    }
    let mut evaluations = 0usize;
    let mut objective = |p: &PriceVector| {
        evaluations += 1;
        mean_evpp(p, games)
    };
    let mut best: Option<HillClimbResult> = None;
    for (start_index, start) in starts.iter().enumerate() {
        let mut point = *start.as_array();
        let mut value = objective(start);
        let mut step = cfg.step;
        loop {
            let mut improved = false;
            for i in 0..8 {
                for delta in [step, -step] {
                    let mut cand = point;
                    cand[i] = (cand[i] + delta).max(0.0);
                    if cand[i] == point[i] {
                        continue;
                    }
                    let v = objective(&PriceVector::clamped(cand));
                    if v < value {
                        point = cand;
                        value = v;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                if step <= cfg.tol {
                    break;
                }
                step = (step / 2.0).max(cfg.tol);
            }
        }
        if best.is_none_or(|b| value < b.mean_evpp) {
            best = Some(HillClimbResult {
                point: PriceVector::clamped(point),
                mean_evpp: value,
                start_index,
                evaluations: 0,
            });
        }
    }
    let mut out = best.expect("at least one start");
    out.evaluations = evaluations;
    Ok(out)
}
