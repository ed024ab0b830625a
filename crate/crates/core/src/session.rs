// SPDX-License-Identifier: MIT OR Apache-2.0

//! Interactive labeling loop.
//!
//! A session shows a display of K training-pool samples, waits for the
//! oracle's answers, retrains the scorer on everything labeled so far,
//! records held-out metrics, and picks the next display with the configured
//! strategy. The state machine is the same for the simulated oracle and a
//! human answering over HTTP; state serializes to JSON and resumes
//! bit-identically.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_half, Dataset, Label, Split};
use crate::display::{self, ObjectiveWeights, SolveReport, DEFAULT_EPSILON, DEFAULT_MAXITER};
use crate::error::{Error, Result};
use crate::eval::{eer, sampling_rate, EvalRecord};
use crate::linalg::Mat;
use crate::rng::{self, RngState};
use crate::samplers::{self, SamplerKind};
use crate::scorer::{self, Scorer, TrainConfig};

pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub strategy: SamplerKind,
    pub display_size: usize,
    pub budget: usize,
    pub weights: ObjectiveWeights,
    pub train: TrainConfig,
    pub epsilon: f64,
    pub maxiter: usize,
    pub seed: u64,
    /// Free-form dataset reference (usually a path or dataset name).
    pub dataset: Option<String>,
    pub split_seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            strategy: SamplerKind::Vexad,
            display_size: 16,
            budget: 10,
            weights: ObjectiveWeights::default(),
            train: TrainConfig::default(),
            epsilon: DEFAULT_EPSILON,
            maxiter: DEFAULT_MAXITER,
            seed: 0,
            dataset: None,
            split_seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self, pool_size: usize) -> Result<()> {
        if self.display_size == 0 {
            return Err(Error::InvalidParameter(
                "display size K must be at least 1".into(),
            ));
        }
        if self.budget == 0 {
            return Err(Error::InvalidParameter(
                "budget T must be at least 1".into(),
            ));
        }
        let needed = self.display_size.saturating_mul(self.budget);
        if needed > pool_size {
            return Err(Error::InvalidParameter(format!(
                "K*T = {needed} exceeds the training pool of {pool_size} samples"
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.maxiter == 0 {
            return Err(Error::InvalidParameter("maxiter must be at least 1".into()));
        }
        self.weights.validate()?;
        self.train.validate()
    }
}

/// A dataset with its train/eval split and cached feature matrices.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub dataset: Dataset,
    pub split: Split,
    pub split_seed: u64,
    /// All features, row = sample id.
    pub features: Mat,
    /// Training-pool features, rows aligned with `split.train_ids`.
    pub train_features: Mat,
    pub eval_features: Mat,
    pub eval_labels: Vec<Label>,
}

impl Corpus {
    pub fn new(dataset: Dataset, split_seed: u64) -> Result<Self> {
        dataset.validate()?;
        let split = split_half(&dataset, split_seed)?;
        let all: Vec<usize> = (0..dataset.len()).collect();
        let features = dataset.feature_matrix(&all);
        let train_features = dataset.feature_matrix(&split.train_ids);
        let eval_features = dataset.feature_matrix(&split.eval_ids);
        let eval_labels = split.eval_ids.iter().map(|&id| dataset.label(id)).collect();
        Ok(Self {
            dataset,
            split,
            split_seed,
            features,
            train_features,
            eval_features,
            eval_labels,
        })
    }

    pub fn n(&self) -> usize {
        self.dataset.len()
    }

    /// Held-out EER of a scorer, ranking by the raw decision value.
    pub fn eval_eer(&self, scorer: &Scorer) -> Result<f64> {
        let margins = (0..self.eval_features.rows())
            .map(|r| scorer.margin(self.eval_features.row(r)))
            .collect::<Result<Vec<f64>>>()?;
        eer(&margins, &self.eval_labels)
    }

    /// Scorer trained on the entire labeled training half.
    pub fn supervised_scorer(&self, cfg: &TrainConfig) -> Result<Scorer> {
        let labels: Vec<Label> = self
            .split
            .train_ids
            .iter()
            .map(|&id| self.dataset.label(id))
            .collect();
        scorer::train(&self.train_features, &labels, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// A display is out and answers are pending.
    AwaitingLabels,
    /// Answers applied and scorer retrained; the next display is not chosen yet.
    Ready,
    Finished,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::AwaitingLabels => "awaiting_labels",
            Phase::Ready => "ready",
            Phase::Finished => "finished",
        }
    }
}

/// One oracle answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub id: usize,
    pub label: i64,
}

/// Something that can label a display. Returning `None` defers the answer.
pub trait Oracle {
    fn answer(&mut self, display: &[usize]) -> Option<Vec<Answer>>;
}

/// Answers immediately with ground-truth labels.
pub struct GroundTruthOracle<'a> {
    dataset: &'a Dataset,
}

impl<'a> GroundTruthOracle<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        Self { dataset }
    }
}

impl Oracle for GroundTruthOracle<'_> {
    fn answer(&mut self, display: &[usize]) -> Option<Vec<Answer>> {
        Some(
            display
                .iter()
                .map(|&id| Answer {
                    id,
                    label: self.dataset.label(id).as_i64(),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    t: usize,
    phase: Phase,
    displays: Vec<Vec<usize>>,
    labels: Vec<Vec<Label>>,
    scorer: Option<Scorer>,
    metrics: Vec<EvalRecord>,
    solve_reports: Vec<SolveReport>,
    rng: ChaCha8Rng,
}

impl Session {
    /// Opens a session with a uniformly random first display.
    pub fn start(config: SessionConfig, corpus: &Corpus) -> Result<Self> {
        if config.split_seed != corpus.split_seed {
            return Err(Error::InvalidParameter(format!(
                "config split_seed {} does not match corpus split_seed {}",
                config.split_seed, corpus.split_seed
            )));
        }
        config.validate(corpus.split.train_ids.len())?;
        let mut rng = rng::seeded(config.seed);
        let first = samplers::sample_random(
            &corpus.split.train_ids,
            &BTreeSet::new(),
            config.display_size,
            rng.next_u64(),
        )?;
        Ok(Self {
            config,
            t: 0,
            phase: Phase::AwaitingLabels,
            displays: vec![first],
            labels: Vec::new(),
            scorer: None,
            metrics: Vec::new(),
            solve_reports: Vec::new(),
            rng,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn displays(&self) -> &[Vec<usize>] {
        &self.displays
    }

    pub fn labels(&self) -> &[Vec<Label>] {
        &self.labels
    }

    pub fn scorer(&self) -> Option<&Scorer> {
        self.scorer.as_ref()
    }

    pub fn metrics(&self) -> &[EvalRecord] {
        &self.metrics
    }

    pub fn solve_reports(&self) -> &[SolveReport] {
        &self.solve_reports
    }

    /// The display waiting for answers, if any.
    pub fn current_display(&self) -> Option<&[usize]> {
        match self.phase {
            Phase::AwaitingLabels => self.displays.last().map(Vec::as_slice),
            _ => None,
        }
    }

    pub fn labeled_ids(&self) -> BTreeSet<usize> {
        self.displays[..self.labels.len()]
            .iter()
            .flatten()
            .copied()
            .collect()
    }

    fn expect_phase(&self, expected: Phase) -> Result<()> {
        if self.phase != expected {
            return Err(Error::WrongPhase {
                expected: expected.name().into(),
                found: self.phase.name().into(),
            });
        }
        Ok(())
    }

    /// Applies the oracle's answers for the current display, retrains on all
    /// labels so far, records metrics, and prepares the next display. On any
    /// error the session is left untouched.
    pub fn submit_labels(&mut self, corpus: &Corpus, answers: &[Answer]) -> Result<()> {
        self.expect_phase(Phase::AwaitingLabels)?;
        let mut next = self.clone();
        next.apply_labels(corpus, answers)?;
        if next.phase == Phase::Ready {
            next.advance(corpus)?;
        }
        *self = next;
        Ok(())
    }

    fn apply_labels(&mut self, corpus: &Corpus, answers: &[Answer]) -> Result<()> {
        let display = self.displays.last().expect("a display is pending");
        let mut by_id: BTreeMap<usize, Label> = BTreeMap::new();
        for a in answers {
            if !display.contains(&a.id) {
                return Err(Error::Validation(format!(
                    "id {} is not part of the current display",
                    a.id
                )));
            }
            let label = Label::try_from(a.label)
                .map_err(|_| Error::Validation(format!("id {}: label must be -1 or +1", a.id)))?;
            if by_id.insert(a.id, label).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate answer for id {}",
                    a.id
                )));
            }
        }
        let aligned = display
            .iter()
            .map(|id| {
                by_id
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Validation(format!("missing answer for id {id}")))
            })
            .collect::<Result<Vec<Label>>>()?;
        self.labels.push(aligned);

        let ids: Vec<usize> = self.displays.iter().flatten().copied().collect();
        let labels: Vec<Label> = self.labels.iter().flatten().copied().collect();
        let scorer = scorer::train(
            &corpus.dataset.feature_matrix(&ids),
            &labels,
            &self.config.train,
        )?;
        let iter = self.labels.len();
        self.metrics.push(EvalRecord {
            iter,
            eer: corpus.eval_eer(&scorer)?,
            samp_pct: sampling_rate(iter, self.config.display_size, corpus.n()),
        });
        self.scorer = Some(scorer);
        if iter >= self.config.budget {
            self.t = self.config.budget;
            self.phase = Phase::Finished;
        } else {
            self.phase = Phase::Ready;
        }
        Ok(())
    }

    /// Chooses the next display from the unlabeled part of the training pool.
    pub fn advance(&mut self, corpus: &Corpus) -> Result<()> {
        self.expect_phase(Phase::Ready)?;
        let scorer = self
            .scorer
            .as_ref()
            .expect("scorer exists once labels are applied");
        let labeled = self.labeled_ids();
        let k = self.config.display_size;
        let pool = &corpus.split.train_ids;
        let step_seed = self.rng.next_u64();
        let next = match self.config.strategy {
            SamplerKind::Vexad => {
                let sol = display::solve(
                    &corpus.train_features,
                    scorer,
                    &self.config.weights,
                    k,
                    self.config.epsilon,
                    self.config.maxiter,
                    step_seed,
                )?;
                let ids = display::select_display(
                    &sol.exemplars,
                    pool,
                    &corpus.train_features,
                    &labeled,
                )?;
                self.solve_reports.push(sol.report);
                ids
            }
            SamplerKind::Random => samplers::sample_random(pool, &labeled, k, step_seed)?,
            SamplerKind::Maxmin => samplers::sample_maxmin(&corpus.features, pool, &labeled, k)?,
            SamplerKind::Uncertainty => {
                samplers::sample_uncertainty(scorer, &corpus.features, pool, &labeled, k)?
            }
        };
        self.displays.push(next);
        self.t = self.labels.len();
        self.phase = Phase::AwaitingLabels;
        Ok(())
    }

    /// Feeds displays to the oracle until the session finishes or the
    /// oracle defers.
    pub fn drive(&mut self, corpus: &Corpus, oracle: &mut dyn Oracle) -> Result<()> {
        while let Some(display) = self.current_display() {
            let Some(answers) = oracle.answer(display) else {
                break;
            };
            self.submit_labels(corpus, &answers)?;
        }
        Ok(())
    }

    pub fn to_state(&self) -> SessionFile {
        SessionFile {
            version: STATE_VERSION,
            config: self.config.clone(),
            t: self.t,
            phase: self.phase,
            displays: self.displays.clone(),
            labels: self
                .labels
                .iter()
                .map(|ls| ls.iter().map(|l| l.as_i64()).collect())
                .collect(),
            scorer: self.scorer.clone(),
            metrics: self.metrics.clone(),
            solve_reports: self.solve_reports.clone(),
            rng_state: RngState::capture(self.config.seed, &self.rng),
        }
    }

    pub fn from_state(state: SessionFile) -> Result<Self> {
        if state.version != STATE_VERSION {
            return Err(Error::VersionMismatch {
                expected: STATE_VERSION,
                found: state.version,
            });
        }
        let labels = state
            .labels
            .iter()
            .map(|ls| ls.iter().map(|&l| Label::try_from(l)).collect())
            .collect::<Result<Vec<Vec<Label>>>>()?;
        let session = Self {
            rng: state.rng_state.restore()?,
            config: state.config,
            t: state.t,
            phase: state.phase,
            displays: state.displays,
            labels,
            scorer: state.scorer,
            metrics: state.metrics,
            solve_reports: state.solve_reports,
        };
        session.check_invariants()?;
        Ok(session)
    }

    fn check_invariants(&self) -> Result<()> {
        let k = self.config.display_size;
        let bad = |msg: &str| Err(Error::Validation(format!("session state: {msg}")));
        if self.displays.iter().any(|d| d.len() != k) {
            return bad("display size differs from config");
        }
        let all: BTreeSet<usize> = self.displays.iter().flatten().copied().collect();
        if all.len() != self.displays.len() * k {
            return bad("displays overlap");
        }
        if self.labels.len() > self.displays.len() || self.metrics.len() != self.labels.len() {
            return bad("labels, displays and metrics are out of step");
        }
        if self.t > self.config.budget {
            return bad("t exceeds budget");
        }
        let expected_displays = match self.phase {
            Phase::AwaitingLabels => self.labels.len() + 1,
            Phase::Ready | Phase::Finished => self.labels.len(),
        };
        if self.displays.len() != expected_displays {
            return bad("phase does not match the number of displays");
        }
        if self.phase != Phase::AwaitingLabels && self.scorer.is_none() {
            return bad("missing scorer");
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_state())?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, json)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let state: SessionFile = serde_json::from_str(&text)?;
        Self::from_state(state)
    }
}

/// Serialized session (`session.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFile {
    pub version: u32,
    pub config: SessionConfig,
    pub t: usize,
    pub phase: Phase,
    pub displays: Vec<Vec<usize>>,
    pub labels: Vec<Vec<i64>>,
    pub scorer: Option<Scorer>,
    pub metrics: Vec<EvalRecord>,
    #[serde(default)]
    pub solve_reports: Vec<SolveReport>,
    pub rng_state: RngState,
}

/// Runs a whole session against the ground-truth oracle.
pub fn run_simulated(config: SessionConfig, corpus: &Corpus) -> Result<Session> {
    let mut session = Session::start(config, corpus)?;
    let mut oracle = GroundTruthOracle::new(&corpus.dataset);
    session.drive(corpus, &mut oracle)?;
    Ok(session)
}
