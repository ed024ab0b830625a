// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use vexad_core::dataset::{self, Dataset};
use vexad_core::display::ObjectiveWeights;
use vexad_core::eval::{run_ablation, run_comparison, run_single, Experiment};
use vexad_core::samplers::SamplerKind;
use vexad_core::session::{Corpus, SessionConfig};
use vexad_core::Error;

use crate::api::{router, AppState};
use crate::store::Store;

/// Exit status 2 for bad input, 1 for everything else.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::InsufficientPool { .. } | Error::Empty(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Debug, Parser)]
#[command(
    name = "vexad",
    version,
    about = "Active-learning change detection with learned displays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    GenData(GenDataArgs),
    /// Run one strategy with the simulated oracle.
    Run(RunArgs),
    /// Seven-cell ablation of the objective terms.
    Ablate(ExperimentArgs),
    /// Compare strategies, plus the fully supervised reference.
    Compare(CompareArgs),
    /// Serve the labeling API (and UI assets).
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub dim: usize,
    #[arg(long = "pos-frac")]
    pub pos_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_strategy(s: &str) -> Result<SamplerKind, String> {
    s.parse::<SamplerKind>().map_err(|e| e.to_string())
}

/// Seed list given as `3`, `1,4,9` or an inclusive range `1-10`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = || format!("invalid seed list '{s}' (use e.g. 7, 1,2,3 or 1-10)");
    if let Some((a, b)) = s.split_once('-') {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok(Seeds((a..=b).collect()));
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()
        .map(Seeds)
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Dataset directory or manifest; the built-in benchmark when omitted.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long = "display-size", default_value_t = 16)]
    pub display_size: usize,
    #[arg(long, default_value_t = 10)]
    pub budget: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub rep: u8,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub maxiter: usize,
    #[arg(long, default_value = "1-10", value_parser = parse_seeds)]
    pub seeds: Seeds,
    #[arg(long = "split-seed", default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "vexad", value_parser = parse_strategy)]
    pub strategy: SamplerKind,
    #[command(flatten)]
    pub common: ExperimentArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_value = "vexad,random,maxmin,uncertainty", value_parser = parse_strategy)]
    pub strategies: Vec<SamplerKind>,
    #[command(flatten)]
    pub common: ExperimentArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Dataset directory or manifest; the built-in benchmark when omitted.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long = "split-seed", default_value_t = 0)]
    pub split_seed: u64,
    /// Directory of static UI files served at `/`.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// Session storage; defaults to $VEXAD_DATA_DIR, then `./vexad-data`.
    #[arg(long = "data-dir")]
    pub data_dir: Option<PathBuf>,
}

fn load_dataset(path: Option<&Path>) -> Result<Dataset, Failure> {
    match path {
        Some(p) => dataset::load(p)
            .map_err(|e| Failure::Runtime(format!("cannot load dataset {}: {e}", p.display()))),
        None => Ok(dataset::default_benchmark()?),
    }
}

impl ExperimentArgs {
    fn corpus(&self) -> Result<Corpus, Failure> {
        let ds = load_dataset(self.dataset.as_deref())?;
        Ok(Corpus::new(ds, self.split_seed)?)
    }

    fn config(&self, strategy: SamplerKind, corpus: &Corpus) -> Result<SessionConfig, Failure> {
        let cfg = SessionConfig {
            strategy,
            display_size: self.display_size,
            budget: self.budget,
            weights: ObjectiveWeights {
                rep_on: self.rep == 1,
                alpha: self.alpha,
                beta: self.beta,
                gamma: self.gamma,
            },
            epsilon: self.epsilon,
            maxiter: self.maxiter,
            dataset: Some(corpus.dataset.name.clone()),
            split_seed: self.split_seed,
            ..SessionConfig::default()
        };
        cfg.validate(corpus.split.train_ids.len())
            .map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

fn finish(exp: &Experiment, out: &Path) -> CmdResult {
    exp.write_csv(out)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", out.display())))?;
    for row in exp.summary()? {
        println!(
            "{:<16} auc={:.2} (sd {:.2}) final_eer={:.2}",
            row.label, row.auc_mean, row.auc_std, row.final_eer_mean
        );
    }
    Ok(())
}

pub fn gen_data(a: &GenDataArgs) -> CmdResult {
    let ds = dataset::generate_synthetic(a.n, a.dim, a.pos_frac, a.seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    dataset::save(&ds, &a.out)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", a.out.display())))?;
    println!("n={} pos={} dim={}", ds.len(), ds.positives(), ds.dim);
    Ok(())
}

pub fn run(a: &RunArgs) -> CmdResult {
    let corpus = a.common.corpus()?;
    let cfg = a.common.config(a.strategy, &corpus)?;
    let exp = run_single(&corpus, &cfg, &a.common.seeds.0)?;
    finish(&exp, &a.common.out)
}

pub fn ablate(a: &ExperimentArgs) -> CmdResult {
    let corpus = a.corpus()?;
    let cfg = a.config(SamplerKind::Vexad, &corpus)?;
    let exp = run_ablation(&corpus, &cfg, &a.seeds.0)?;
    finish(&exp, &a.out)
}

pub fn compare(a: &CompareArgs) -> CmdResult {
    let corpus = a.common.corpus()?;
    let cfg = a.common.config(SamplerKind::Vexad, &corpus)?;
    let exp = run_comparison(&corpus, &cfg, &a.strategies, &a.common.seeds.0)?;
    finish(&exp, &a.common.out)
}

pub fn serve(a: &ServeArgs) -> CmdResult {
    let corpus = Corpus::new(load_dataset(a.dataset.as_deref())?, a.split_seed)?;
    let dir = a
        .data_dir
        .clone()
        .or_else(|| std::env::var_os("VEXAD_DATA_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("vexad-data"));
    let store = Store::open(&dir)
        .map_err(|e| Failure::Runtime(format!("cannot use data dir {}: {e}", dir.display())))?;
    let app = router(Arc::new(AppState::new(corpus, store)), a.assets.clone());

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    runtime.block_on(async {
        let addr = format!("{}:{}", a.host, a.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure::Runtime(format!("cannot listen on {addr}: {e}")))?;
        let local: SocketAddr = listener
            .local_addr()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("listening on http://{local}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::Runtime(e.to_string()))
    })
}

pub fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Run(a) => run(a),
        Command::Ablate(a) => ablate(a),
        Command::Compare(a) => compare(a),
        Command::Serve(a) => serve(a),
    }
}
