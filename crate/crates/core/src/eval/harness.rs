// SPDX-License-Identifier: MIT OR Apache-2.0

//! Batch experiments: the seven-cell objective ablation and the strategy
//! comparison, both seed-averaged, with CSV reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::thread;

use super::metrics::{auc, EvalRecord, RunTable};
use crate::display::ObjectiveWeights;
use crate::error::{Error, Result};
use crate::samplers::SamplerKind;
use crate::session::{run_simulated, Corpus, SessionConfig};

/// One seeded run of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub label: String,
    pub seed: u64,
    pub records: Vec<EvalRecord>,
    /// Sample ids shown at each iteration; empty when parsed back from CSV.
    pub displays: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub runs: Vec<RunResult>,
    /// Seed-averaged curves, one per cell, in cell order.
    pub tables: Vec<RunTable>,
    pub supervised_eer: Option<f64>,
}

/// One ablation cell: which objective terms are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationCell {
    pub rep: bool,
    pub div: bool,
    pub amb: bool,
}

impl AblationCell {
    /// The seven non-empty combinations, singles first, then pairs, then all.
    pub const GRID: [AblationCell; 7] = [
        AblationCell::new(false, false, true),
        AblationCell::new(false, true, false),
        AblationCell::new(true, false, false),
        AblationCell::new(true, false, true),
        AblationCell::new(false, true, true),
        AblationCell::new(true, true, false),
        AblationCell::new(true, true, true),
    ];

    pub const fn new(rep: bool, div: bool, amb: bool) -> Self {
        Self { rep, div, amb }
    }

    pub fn label(&self) -> String {
        let parts: Vec<&str> = [(self.rep, "rep"), (self.div, "div"), (self.amb, "amb")]
            .into_iter()
            .filter_map(|(on, name)| on.then_some(name))
            .collect();
        parts.join("+")
    }

    /// Cell weights: switched-off terms get zero, the rest keep `base`.
    pub fn weights(&self, base: &ObjectiveWeights) -> ObjectiveWeights {
        ObjectiveWeights {
            rep_on: self.rep,
            alpha: if self.div { base.alpha } else { 0.0 },
            beta: if self.amb { base.beta } else { 0.0 },
            gamma: base.gamma,
        }
    }
}

/// Metrics and displays of one finished run.
type Trajectory = (Vec<EvalRecord>, Vec<Vec<usize>>);

/// Runs every `(label, config)` job for every seed, in parallel, and
/// assembles results keyed by (job index, seed).
fn run_jobs(
    corpus: &Corpus,
    jobs: &[(String, SessionConfig)],
    seeds: &[u64],
) -> Result<Vec<RunResult>> {
    if seeds.is_empty() {
        return Err(Error::Empty("at least one seed is required".into()));
    }
    let tasks: Vec<(usize, u64)> = (0..jobs.len())
        .flat_map(|j| seeds.iter().map(move |&s| (j, s)))
        .collect();
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(tasks.len().max(1));

    let mut done: BTreeMap<(usize, usize), Trajectory> = BTreeMap::new();
    thread::scope(|scope| -> Result<()> {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let tasks = &tasks;
                scope.spawn(move || -> Result<Vec<((usize, usize), Trajectory)>> {
                    let mut out = Vec::new();
                    for (pos, &(job, seed)) in tasks.iter().enumerate().skip(w).step_by(workers) {
                        let cfg = SessionConfig {
                            seed,
                            ..jobs[job].1.clone()
                        };
                        let session = run_simulated(cfg, corpus)?;
                        out.push((
                            (job, pos),
                            (session.metrics().to_vec(), session.displays().to_vec()),
                        ));
                    }
                    Ok(out)
                })
            })
            .collect();
        for h in handles {
            for (key, records) in h.join().expect("worker panicked")? {
                done.insert(key, records);
            }
        }
        Ok(())
    })?;

    Ok(done
        .into_iter()
        .map(|((job, pos), (records, displays))| RunResult {
            label: jobs[job].0.clone(),
            seed: tasks[pos].1,
            records,
            displays,
        })
        .collect())
}

/// Seed-averaged table per label, in first-appearance order.
fn average(runs: &[RunResult]) -> Result<Vec<RunTable>> {
    let mut order: Vec<&str> = Vec::new();
    for r in runs {
        if !order.contains(&r.label.as_str()) {
            order.push(&r.label);
        }
    }
    order
        .into_iter()
        .map(|label| {
            let group: Vec<&RunResult> = runs.iter().filter(|r| r.label == label).collect();
            let len = group[0].records.len();
            let records = (0..len)
                .map(|i| EvalRecord {
                    iter: group[0].records[i].iter,
                    eer: group.iter().map(|r| r.records[i].eer).sum::<f64>() / group.len() as f64,
                    samp_pct: group[0].records[i].samp_pct,
                })
                .collect();
            RunTable::new(label, records)
        })
        .collect()
}

/// The seven-cell objective ablation with the learned display.
pub fn run_ablation(corpus: &Corpus, base: &SessionConfig, seeds: &[u64]) -> Result<Experiment> {
    let jobs: Vec<(String, SessionConfig)> = AblationCell::GRID
        .iter()
        .map(|cell| {
            (
                cell.label(),
                SessionConfig {
                    strategy: SamplerKind::Vexad,
                    weights: cell.weights(&base.weights),
                    ..base.clone()
                },
            )
        })
        .collect();
    let runs = run_jobs(corpus, &jobs, seeds)?;
    let tables = average(&runs)?;
    Ok(Experiment {
        runs,
        tables,
        supervised_eer: None,
    })
}

/// Strategy comparison plus the fully supervised reference EER.
pub fn run_comparison(
    corpus: &Corpus,
    base: &SessionConfig,
    strategies: &[SamplerKind],
    seeds: &[u64],
) -> Result<Experiment> {
    if strategies.is_empty() {
        return Err(Error::Empty("at least one strategy is required".into()));
    }
    let jobs: Vec<(String, SessionConfig)> = strategies
        .iter()
        .map(|&strategy| {
            (
                strategy.name().to_string(),
                SessionConfig {
                    strategy,
                    ..base.clone()
                },
            )
        })
        .collect();
    let runs = run_jobs(corpus, &jobs, seeds)?;
    let tables = average(&runs)?;
    let supervised = corpus.supervised_scorer(&base.train)?;
    Ok(Experiment {
        runs,
        tables,
        supervised_eer: Some(corpus.eval_eer(&supervised)?),
    })
}

/// Single strategy, possibly over several seeds.
pub fn run_single(corpus: &Corpus, cfg: &SessionConfig, seeds: &[u64]) -> Result<Experiment> {
    let jobs = vec![(cfg.strategy.name().to_string(), cfg.clone())];
    let runs = run_jobs(corpus, &jobs, seeds)?;
    let tables = average(&runs)?;
    Ok(Experiment {
        runs,
        tables,
        supervised_eer: None,
    })
}

/// Per-label summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub final_eer_mean: f64,
}

pub const SUPERVISED_LABEL: &str = "supervised_eer";

impl Experiment {
    pub fn summary(&self) -> Result<Vec<SummaryRow>> {
        let mut rows = Vec::new();
        for table in &self.tables {
            let aucs = self
                .runs
                .iter()
                .filter(|r| r.label == table.label)
                .map(|r| auc(&r.records))
                .collect::<Result<Vec<f64>>>()?;
            let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
            let std = if aucs.len() > 1 {
                (aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (aucs.len() - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow {
                label: table.label.clone(),
                auc_mean: mean,
                auc_std: std,
                final_eer_mean: table.final_eer().unwrap_or(f64::NAN),
            });
        }
        if let Some(eer) = self.supervised_eer {
            rows.push(SummaryRow {
                label: SUPERVISED_LABEL.into(),
                auc_mean: eer,
                auc_std: 0.0,
                final_eer_mean: eer,
            });
        }
        Ok(rows)
    }

    /// `label,seed,iter,eer,samp_pct`, one line per run and iteration.
    pub fn results_csv(&self) -> String {
        let mut out = String::from("label,seed,iter,eer,samp_pct\n");
        for r in &self.runs {
            for rec in &r.records {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.label, r.seed, rec.iter, rec.eer, rec.samp_pct
                );
            }
        }
        out
    }

    /// `label,auc_mean,auc_std,final_eer_mean`.
    pub fn summary_csv(&self) -> Result<String> {
        let mut out = String::from("label,auc_mean,auc_std,final_eer_mean\n");
        for row in self.summary()? {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                row.label, row.auc_mean, row.auc_std, row.final_eer_mean
            );
        }
        Ok(out)
    }

    /// `label,seed,iter,ids` with the displayed ids space-separated.
    pub fn displays_csv(&self) -> String {
        let mut out = String::from("label,seed,iter,ids\n");
        for r in &self.runs {
            for (i, d) in r.displays.iter().enumerate() {
                let ids: Vec<String> = d.iter().map(|id| id.to_string()).collect();
                let _ = writeln!(out, "{},{},{},{}", r.label, r.seed, i + 1, ids.join(" "));
            }
        }
        out
    }

    /// Writes `results.csv`, `summary.csv` and `displays.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("results.csv"), self.results_csv())?;
        fs::write(dir.join("displays.csv"), self.displays_csv())?;
        fs::write(dir.join("summary.csv"), self.summary_csv()?)?;
        Ok(())
    }
}

fn field<T: std::str::FromStr>(raw: Option<&str>, what: &str, line: usize) -> Result<T> {
    raw.and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Format(format!("line {line}: bad or missing {what}")))
}

pub fn parse_results_csv(text: &str) -> Result<Vec<RunResult>> {
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, h)| h.trim()) != Some("label,seed,iter,eer,samp_pct") {
        return Err(Error::Format("results.csv: unexpected header".into()));
    }
    let mut runs: Vec<RunResult> = Vec::new();
    for (idx, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let mut f = line.split(',');
        let label = f.next().unwrap_or_default().to_string();
        let seed: u64 = field(f.next(), "seed", idx + 1)?;
        let rec = EvalRecord {
            iter: field(f.next(), "iter", idx + 1)?,
            eer: field(f.next(), "eer", idx + 1)?,
            samp_pct: field(f.next(), "samp_pct", idx + 1)?,
        };
        match runs.last_mut() {
            Some(r) if r.label == label && r.seed == seed => r.records.push(rec),
            _ => runs.push(RunResult {
                label,
                seed,
                records: vec![rec],
                displays: Vec::new(),
            }),
        }
    }
    Ok(runs)
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, h)| h.trim()) != Some("label,auc_mean,auc_std,final_eer_mean") {
        return Err(Error::Format("summary.csv: unexpected header".into()));
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, line)| {
            let mut f = line.split(',');
            Ok(SummaryRow {
                label: f.next().unwrap_or_default().to_string(),
                auc_mean: field(f.next(), "auc_mean", idx + 1)?,
                auc_std: field(f.next(), "auc_std", idx + 1)?,
                final_eer_mean: field(f.next(), "final_eer_mean", idx + 1)?,
            })
        })
        .collect()
}
