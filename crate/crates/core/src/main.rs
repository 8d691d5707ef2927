use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use cdfmatch::cdf::{make_grid, EmpiricalCdf, DEFAULT_GRID_SIZE};
use cdfmatch::distance::{distance, DistanceKind};
use cdfmatch::distributions::RngStream;
use cdfmatch::experiments::{
    run_denoise, run_ionosphere, run_polydemo, run_shm, DenoiseConfig, ExperimentReport, IonosphereConfig, PolyConfig,
    SearchSettings, ShmConfig,
};
use cdfmatch::hpo::Strategy;
use cdfmatch::loss::LossWeights;

/// Train SVR/SVC models against a target output distribution and compare them
/// with error-only tuning.
#[derive(Parser, Debug)]
#[command(name = "cdfmatch", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Objective evaluations per tuned regime.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Weight of the point-wise error.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Weight of the CDF distance.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// l1, w1, bhattacharyya or kl.
    #[arg(long, global = true)]
    distance: Option<DistanceKind>,
    /// smbo or random.
    #[arg(long, global = true)]
    strategy: Option<Strategy>,
    /// Output directory (default: runs/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config for the subcommand; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthetic structural-health-monitoring regression.
    Shm {
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        noise_sd: Option<f64>,
    },
    /// Patch-based denoising of a grayscale PGM (or the built-in test image).
    Denoise {
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        noise_sd: Option<f64>,
        #[arg(long)]
        patch: Option<usize>,
        #[arg(long)]
        train_pixels: Option<usize>,
    },
    /// Ionosphere classification over several stratified splits.
    Ionosphere {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Comma-separated split seeds; `--seed s` alone means s..s+5.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// One-dimensional polynomial order selection.
    Polydemo {
        #[arg(long)]
        order_truth: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
        #[arg(long)]
        n_train: Option<usize>,
    },
    /// Distances between two CDF files with `y,p` columns.
    Distance {
        target: PathBuf,
        predicted: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
        grid_size: usize,
    },
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

impl Global {
    fn weights(&self, base: LossWeights) -> Result<LossWeights> {
        let w = LossWeights { alpha: self.alpha.unwrap_or(base.alpha), beta: self.beta.unwrap_or(base.beta), ..base };
        w.validate()?;
        Ok(w)
    }

    fn search(&self, base: SearchSettings) -> SearchSettings {
        SearchSettings {
            budget: self.budget.unwrap_or(base.budget),
            strategy: self.strategy.unwrap_or(base.strategy),
            distance: self.distance.unwrap_or(base.distance),
        }
    }

    fn rng(&self) -> RngStream {
        RngStream::new(self.seed.unwrap_or(1))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| Path::new("runs").join(name))
    }
}

fn finish<R: ExperimentReport>(report: &R, out: &Path) -> ExitCode {
    for (name, ok) in report.verdicts() {
        println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    println!("results written to {}", out.join("results.json").display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let cfg_path = g.config.as_deref();
    Ok(match cli.command {
        Command::Shm { n_samples, noise_sd } => {
            let mut cfg: ShmConfig = load_config(cfg_path)?;
            cfg.weights = g.weights(cfg.weights)?;
            cfg.search = g.search(cfg.search);
            cfg.n_samples = n_samples.unwrap_or(cfg.n_samples);
            cfg.noise_sd = noise_sd.unwrap_or(cfg.noise_sd);
            let out = g.out("shm");
            let report = run_shm(&cfg, &g.rng(), &out)?;
            for (regime, r) in &report.regimes {
                println!(
                    "{:<22} train_rmse={:.4} test_rmse={:.4} cdf_distance={:.4}",
                    regime.name(),
                    r.train_rmse,
                    r.test_rmse,
                    r.cdf_distance_on_fresh_samples
                );
            }
            finish(&report, &out)
        }
        Command::Denoise { image, noise_sd, patch, train_pixels } => {
            let mut cfg: DenoiseConfig = load_config(cfg_path)?;
            cfg.weights = g.weights(cfg.weights)?;
            cfg.search = g.search(cfg.search);
            cfg.image = image.or(cfg.image);
            cfg.noise_sd = noise_sd.unwrap_or(cfg.noise_sd);
            cfg.patch = patch.unwrap_or(cfg.patch);
            cfg.train_pixels = train_pixels.unwrap_or(cfg.train_pixels);
            let out = g.out("denoise");
            let report = run_denoise(&cfg, &g.rng(), &out)?;
            println!("{:<22} psnr={:.2} ssim={:.4}", "noisy", report.noisy_psnr, report.noisy_ssim);
            for (regime, r) in &report.regimes {
                println!("{:<22} psnr={:.2} ssim={:.4}", regime.name(), r.psnr, r.ssim);
            }
            finish(&report, &out)
        }
        Command::Ionosphere { data, train_fraction, seeds } => {
            let mut cfg: IonosphereConfig = load_config(cfg_path)?;
            cfg.weights = g.weights(cfg.weights)?;
            cfg.search = g.search(cfg.search);
            cfg.path = data.unwrap_or(cfg.path);
            cfg.train_fraction = train_fraction.unwrap_or(cfg.train_fraction);
            if let Some(s) = seeds {
                cfg.seeds = s;
            } else if let Some(s) = g.seed {
                cfg.seeds = (s..s + cfg.seeds.len().max(1) as u64).collect();
            }
            let out = g.out("ionosphere");
            let report = run_ionosphere(&cfg, &out)?;
            for (regime, m) in &report.median {
                println!(
                    "{:<22} accuracy={:.3} precision={:.3} recall={:.3} f1={:.3}",
                    regime.name(),
                    m.accuracy,
                    m.precision,
                    m.recall,
                    m.f1
                );
            }
            finish(&report, &out)
        }
        Command::Polydemo { order_truth, orders, n_train } => {
            let mut cfg: PolyConfig = load_config(cfg_path)?;
            cfg.order_truth = order_truth.unwrap_or(cfg.order_truth);
            cfg.orders = orders.unwrap_or(cfg.orders);
            cfg.n_train = n_train.unwrap_or(cfg.n_train);
            cfg.distance = g.distance.unwrap_or(cfg.distance);
            let out = g.out("polydemo");
            let report = run_polydemo(&cfg, &g.rng(), &out)?;
            for c in &report.candidates {
                println!(
                    "order {} train_rmse={:.4} cdf_distance={:.4} combined={:.4}",
                    c.order, c.train_rmse, c.cdf_distance, c.combined
                );
            }
            println!("selected order {} (rmse alone: {})", report.selected_order, report.rmse_selected_order);
            finish(&report, &out)
        }
        Command::Distance { target, predicted, grid_size } => {
            let f = EmpiricalCdf::load_csv(&target)?;
            let h = EmpiricalCdf::load_csv(&predicted)?;
            let grid = make_grid(&f, &h, grid_size)?;
            let kinds = match g.distance {
                Some(k) => vec![k],
                None => DistanceKind::ALL.to_vec(),
            };
            for k in kinds {
                println!("{k} {}", distance(k, &f, &h, &grid));
            }
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.global.workers {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
