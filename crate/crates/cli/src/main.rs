use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tacprice::io::{
    read_config, read_games, read_predictions, write_csv, write_games, write_predictions, Predictions, CONFIG_ENV,
};
use tacprice::pipeline::{predict_games, Method};
use tacprice::report::{build_report, evaluate_predictions, pairwise_csv, render_text};
use tacprice::simulation::{check_clearing, generate_games, SimulationConfig};

/// Hotel price prediction for the travel market game: simulate games,
/// predict prices, and score the predictions.
#[derive(Parser)]
#[command(name = "tacprice", version)]
struct Cli {
    #[command(flatten)]
    config: ConfigArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON configuration file (market, client distribution, solver settings).
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<SimulationConfig> {
        match &self.config {
            Some(path) => read_config(path).with_context(|| format!("reading config {}", path.display())),
            None => Ok(SimulationConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic games with ground-truth prices.
    Simulate {
        /// Number of games.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        games: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict hotel prices for every game in a games file.
    Predict {
        #[arg(long)]
        games: PathBuf,
        /// Prediction method; repeat for several. One of: const:<fixture>,
        /// mean, median, moving:<k>, walverine, walv-no-cdata, walv-constf,
        /// walverine-const, geomedian, best-evpp.
        #[arg(long = "method", required = true, value_parser = parse_method)]
        methods: Vec<Method>,
        #[arg(long)]
        out: PathBuf,
        /// Games whose prices feed the statistics and calibrated constants;
        /// defaults to the games being predicted.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Add to an existing predictions file instead of replacing it.
        #[arg(long)]
        merge: bool,
    },
    /// Score predictions by distance and EVPP.
    Evaluate {
        #[arg(long)]
        games: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Per-game results CSV.
        #[arg(long)]
        out: PathBuf,
        /// Per-predictor means CSV; defaults to `<out>_summary.csv`.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Also write pairwise t-test matrices and a text report.
        #[arg(long)]
        report: bool,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: tacprice::Error| e.to_string())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    out.with_file_name(format!("{stem}{suffix}"))
}

fn simulate(cfg: SimulationConfig, games: u64, seed: u64, out: &Path) -> Result<()> {
    let cfg = SimulationConfig {
        n_games: games as usize,
        seed,
        ..cfg
    };
    let records = generate_games(&cfg)?;
    write_games(out, &records).with_context(|| format!("writing {}", out.display()))?;
    let loose = records
        .iter()
        .filter(|g| check_clearing(&cfg, g).clearing_gap > cfg.overdemand_band)
        .count();
    eprintln!("simulated {} games with seed {} -> {}", records.len(), seed, out.display());
    if loose > 0 {
        eprintln!(
            "note: {loose} games leave some priced hotel-night more than {} rooms short of full",
            cfg.overdemand_band
        );
    }
    Ok(())
}

fn predict(
    cfg: SimulationConfig,
    games_path: &Path,
    methods: &[Method],
    out: &Path,
    history: Option<&Path>,
    merge: bool,
) -> Result<()> {
    let games = read_games(games_path).with_context(|| format!("reading {}", games_path.display()))?;
    let history = match history {
        Some(p) => read_games(p).with_context(|| format!("reading {}", p.display()))?,
        None => games.clone(),
    };
    let mut predictions = if merge && out.exists() {
        read_predictions(out).with_context(|| format!("reading {}", out.display()))?
    } else {
        Predictions::new()
    };
    for method in methods {
        let name = method.to_string();
        for (id, p) in predict_games(method, &cfg, &games, &history)? {
            match p {
                Some(p) => {
                    predictions.entry(id).or_default().insert(name.clone(), p);
                }
                None => eprintln!("warning: {name} has no prediction for {id} (insufficient history)"),
            }
        }
        eprintln!("predicted {name} for {} games", games.len());
    }
    write_predictions(out, &predictions).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn evaluate(
    cfg: SimulationConfig,
    games_path: &Path,
    predictions_path: &Path,
    out: &Path,
    summary: Option<&Path>,
    report: bool,
) -> Result<()> {
    let games = read_games(games_path).with_context(|| format!("reading {}", games_path.display()))?;
    let predictions =
        read_predictions(predictions_path).with_context(|| format!("reading {}", predictions_path.display()))?;
    if predictions.is_empty() {
        bail!("{} holds no predictions", predictions_path.display());
    }
    let run = evaluate_predictions(&cfg, &games, &predictions)?;
    for (predictor, id) in &run.skipped {
        eprintln!("warning: {predictor} has no prediction for {id}; skipped");
    }
    write_csv(fs::File::create(out).with_context(|| format!("creating {}", out.display()))?, &run.rows)?;
    let summary = summary.map(Path::to_path_buf).unwrap_or_else(|| sibling(out, "_summary.csv"));
    write_csv(
        fs::File::create(&summary).with_context(|| format!("creating {}", summary.display()))?,
        &run.summaries,
    )?;
    eprintln!(
        "evaluated {} predictors: {} rows -> {}, means -> {}",
        run.summaries.len(),
        run.rows.len(),
        out.display(),
        summary.display()
    );
    if report {
        let r = build_report(&cfg, &games, &predictions, &run)?;
        let pairwise = sibling(out, "_pairwise.csv");
        let text = sibling(out, "_report.txt");
        fs::write(&pairwise, pairwise_csv(&r)?).with_context(|| format!("writing {}", pairwise.display()))?;
        fs::write(&text, render_text(&r)).with_context(|| format!("writing {}", text.display()))?;
        eprintln!("report -> {}, {}", text.display(), pairwise.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = cli.config.load()?;
    match cli.command {
        Command::Simulate { games, seed, out } => simulate(cfg, games, seed, &out),
        Command::Predict {
            games,
            methods,
            out,
            history,
            merge,
        } => predict(cfg, &games, &methods, &out, history.as_deref(), merge),
        Command::Evaluate {
            games,
            predictions,
            out,
            summary,
            report,
        } => evaluate(cfg, &games, &predictions, &out, summary.as_deref(), report),
    }
}
