//! Evaluation of prediction files and the comparison report built on it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::analysis::{ols, pairwise_comparison_report, pearson, Measure, OlsFit, PairwiseReport, PredictorResults};
use crate::error::Error;
use crate::io::{Predictions, ResultRow, SummaryRow};
use crate::metrics::{euclidean_distance, evpp, expected_ideal_surplus, MetricRow};
use crate::simulation::{score_predictor, GameRecord, ScoreMode, SimulationConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRun {
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<SummaryRow>,
    /// `(predictor, game_id)` pairs with no prediction.
    pub skipped: Vec<(String, String)>,
}

/// Scores every predictor in `predictions` on each game it covers.
pub fn evaluate_predictions(
    cfg: &SimulationConfig,
    games: &[GameRecord],
    predictions: &Predictions,
) -> Result<EvaluationRun, Error> {
    let known: BTreeSet<&str> = games.iter().map(|g| g.game_id.as_str()).collect();
    let unknown: Vec<&str> = predictions
        .keys()
        .map(String::as_str)
        .filter(|id| !known.contains(id))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownGames(unknown.join(", ")));
    }
    let names: BTreeSet<&str> = predictions.values().flat_map(|m| m.keys().map(String::as_str)).collect();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut skipped = Vec::new();
    for name in names {
        let mut count = 0usize;
        let (mut sum_d, mut sum_e) = (0.0, 0.0);
        for g in games {
            match predictions.get(&g.game_id).and_then(|m| m.get(name)) {
                Some(p_hat) => {
                    let d = euclidean_distance(p_hat, &g.actual_prices);
                    let e = evpp(p_hat, &g.actual_prices, &cfg.context(g));
                    rows.push(ResultRow {
                        game_id: g.game_id.clone(),
                        predictor: name.to_string(),
                        d,
                        evpp: e,
                    });
                    count += 1;
                    sum_d += d;
                    sum_e += e;
                }
                None => skipped.push((name.to_string(), g.game_id.clone())),
            }
        }
        if count > 0 {
            summaries.push(SummaryRow {
                predictor: name.to_string(),
                games: count,
                mean_d: sum_d / count as f64,
                mean_evpp: sum_e / count as f64,
            });
        }
    }
    Ok(EvaluationRun {
        rows,
        summaries,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreRegression {
    pub mode: ScoreMode,
    pub observations: usize,
    /// Intercept, EVPP slope, ideal-surplus slope.
    pub fit: OlsFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// Summaries ordered by mean EVPP, best first.
    pub table: Vec<SummaryRow>,
    /// Games every predictor covers; the pairwise tests use only these.
    pub common_games: usize,
    pub pairwise: PairwiseReport,
    pub d_evpp_correlation: Option<f64>,
    pub regressions: Vec<ScoreRegression>,
    pub notes: Vec<String>,
}

/// Builds the comparison report from an evaluation run.
pub fn build_report(
    cfg: &SimulationConfig,
    games: &[GameRecord],
    predictions: &Predictions,
    run: &EvaluationRun,
) -> Result<Report, Error> {
    let mut notes = Vec::new();
    let mut table = run.summaries.clone();
    table.sort_by(|a, b| a.mean_evpp.total_cmp(&b.mean_evpp).then_with(|| a.predictor.cmp(&b.predictor)));

    let names: Vec<&str> = table.iter().map(|s| s.predictor.as_str()).collect();
    let common: Vec<&GameRecord> = games
        .iter()
        .filter(|g| {
            predictions
                .get(&g.game_id)
                .is_some_and(|m| names.iter().all(|n| m.contains_key(*n)))
        })
        .collect();
    let by_key: BTreeMap<(&str, &str), &ResultRow> = run
        .rows
        .iter()
        .map(|r| ((r.predictor.as_str(), r.game_id.as_str()), r))
        .collect();
    let results: Vec<PredictorResults> = names
        .iter()
        .map(|name| PredictorResults {
            name: name.to_string(),
            rows: common
                .iter()
                .map(|g| {
                    let r = by_key[&(*name, g.game_id.as_str())];
                    MetricRow {
                        game_id: r.game_id.clone(),
                        d: r.d,
                        evpp: r.evpp,
                    }
                })
                .collect(),
        })
        .collect();
    let pairwise = if common.len() >= 2 {
        pairwise_comparison_report(&results)?
    } else {
        notes.push(format!("pairwise tests skipped: {} common games", common.len()));
        PairwiseReport {
            predictors: names.iter().map(|s| s.to_string()).collect(),
            comparisons: Vec::new(),
        }
    };

    let ds: Vec<f64> = table.iter().map(|s| s.mean_d).collect();
    let es: Vec<f64> = table.iter().map(|s| s.mean_evpp).collect();
    let d_evpp_correlation = match pearson(&ds, &es) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("d-EVPP correlation unavailable: {e}"));
            None
        }
    };

    let by_id: BTreeMap<&str, &GameRecord> = games.iter().map(|g| (g.game_id.as_str(), g)).collect();
    let mut regressions = Vec::new();
    for mode in [ScoreMode::Expected, ScoreMode::Realized] {
        let mut y = Vec::new();
        let mut evpps = Vec::new();
        let mut ideals = Vec::new();
        for r in &run.rows {
            let g = by_id[r.game_id.as_str()];
            let ctx = cfg.context(g);
            let p_hat = &predictions[&r.game_id][&r.predictor];
            y.push(score_predictor(g, p_hat, mode, &ctx));
            evpps.push(r.evpp);
            ideals.push(expected_ideal_surplus(&g.actual_prices, &ctx));
        }
        match ols(&y, &[evpps, ideals]) {
            Ok(fit) => regressions.push(ScoreRegression {
                mode,
                observations: y.len(),
                fit,
            }),
            Err(e) => notes.push(format!("{mode:?} score regression unavailable: {e}")),
        }
    }

    Ok(Report {
        table,
        common_games: common.len(),
        pairwise,
        d_evpp_correlation,
        regressions,
        notes,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Pairwise matrices: for each measure, a block of mean differences (row
/// minus column) and a block of two-sided p-values.
pub fn pairwise_csv(report: &Report) -> Result<String, Error> {
    let names = &report.pairwise.predictors;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["measure".to_string(), "stat".to_string(), "predictor".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for measure in Measure::ALL {
        for stat in ["mean_diff", "p_value"] {
            for a in names {
                let mut record = vec![measure.name().to_string(), stat.to_string(), a.clone()];
                for b in names {
                    let cell = match report.pairwise.lookup(a, b, measure) {
                        Some((diff, _)) if stat == "mean_diff" => fmt_opt(Some(diff)),
                        Some((_, p)) => fmt_opt(p),
                        None => String::new(),
                    };
                    record.push(cell);
                }
                w.write_record(&record)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let width = report.table.iter().map(|s| s.predictor.len()).max().unwrap_or(9).max(9);
    let _ = writeln!(out, "Predictors by mean EVPP");
    let _ = writeln!(out, "{:<width$}  {:>5}  {:>10}  {:>10}", "predictor", "games", "mean d", "mean EVPP");
    for s in &report.table {
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>10.3}  {:>10.4}",
            s.predictor, s.games, s.mean_d, s.mean_evpp
        );
    }
    let _ = writeln!(out);
    match report.d_evpp_correlation {
        Some(r) => {
            let _ = writeln!(out, "Pearson correlation of mean d and mean EVPP: {r:.4}");
        }
        None => {
            let _ = writeln!(out, "Pearson correlation of mean d and mean EVPP: n/a");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Paired t-tests over {} common games (first minus second)", report.common_games);
    for c in &report.pairwise.comparisons {
        let (t, p) = c
            .test
            .map(|t| (format!("{:.3}", t.t), format!("{:.3e}", t.p_two_sided)))
            .unwrap_or_else(|| ("-".into(), "-".into()));
        let _ = writeln!(
            out,
            "  {:<5} {} vs {}: diff {:.4}, t {}, p {}",
            c.measure.name(),
            c.first,
            c.second,
            c.mean_diff,
            t,
            p
        );
    }
    let _ = writeln!(out);
    for r in &report.regressions {
        let c = &r.fit.coefficients;
        let se = r
            .fit
            .standard_errors
            .as_ref()
            .map(|s| format!(" (se {:.4}, {:.4}, {:.4})", s[0], s[1], s[2]))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{:?} score ~ EVPP + ideal surplus, n = {}: intercept {:.4}, EVPP {:.4}, ideal {:.4}{}, R^2 {:.4}",
            r.mode, r.observations, c[0], c[1], c[2], se, r.fit.r_squared
        );
    }
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}
