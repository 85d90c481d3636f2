//! The dynamic online ensemble.
//!
//! An [`Ensemble`] holds one or more OS-ELM members, each carrying a voting
//! weight, a `life` counter of online evaluations, and a windowed mean
//! squared error. Per stream sample the pipeline runs: weighted-voting
//! prediction, per-member error accounting, exponential weight adaptation
//! around the median MSE, RLS retraining of every member, an absolute
//! percentage error spawn trigger, distance-based training-set selection for
//! the new member, worst-MSE pruning, weight normalization, and finally the
//! memory updates.
//!
//! Two memory modes are supported: `StmOnly` spawns from the sliding window
//! alone (the original DOER behaviour), `StmPlusLtm` selects training points
//! from both the window and the reservoir.

use std::collections::VecDeque;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elm::{select_hidden_nodes, Activation, ElmState, HiddenLayer, NodeSelection};
use crate::error::{Error, Result};
use crate::memory::{
    select_training_set, DistanceWeights, Reservoir, SlidingWindow, DEFAULT_OUTPUT_WEIGHT_FACTOR,
};
use crate::scaling::Standardizer;
use crate::types::Sample;

/// Where a freshly spawned model takes its training data from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryMode {
    /// Most recent window points only (original DOER).
    StmOnly,
    /// Distance-based selection over window plus reservoir.
    StmPlusLtm,
}

impl std::fmt::Display for MemoryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MemoryMode::StmOnly => "stm-only",
            MemoryMode::StmPlusLtm => "stm+ltm",
        })
    }
}

/// Ensemble configuration. `deltas` holds one fractional spawn threshold per
/// output (a single entry is broadcast to all outputs), so `0.04` means a new
/// model is spawned when the ensemble misses by more than 4 %.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub ws: usize,
    pub deltas: Vec<f64>,
    pub max_models: usize,
    pub candidate_nodes: Vec<usize>,
    pub cv_folds: usize,
    pub activation: Activation,
    pub ridge: f64,
    pub memory_mode: MemoryMode,
    pub output_weight_factor: f64,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            ws: 1000,
            deltas: vec![0.04],
            max_models: 10,
            candidate_nodes: vec![10, 20, 40, 80],
            cv_folds: 5,
            activation: Activation::Sigmoid,
            ridge: 1e-6,
            memory_mode: MemoryMode::StmPlusLtm,
            output_weight_factor: DEFAULT_OUTPUT_WEIGHT_FACTOR,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidate_nodes.is_empty() {
            return Err(Error::Config("candidate_nodes must not be empty".into()));
        }
        let max_l = *self.candidate_nodes.iter().max().unwrap();
        if self.ws < max_l {
            return Err(Error::Config(format!(
                "ws = {} is smaller than the largest hidden-node candidate {max_l}; \
                 spawned models could not be batch-trained",
                self.ws
            )));
        }
        if self.max_models < 1 {
            return Err(Error::Config("max_models must be at least 1".into()));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("spawn thresholds must all be positive".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be at least 2".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Config("ridge must be non-negative".into()));
        }
        if !(self.output_weight_factor > 0.0) {
            return Err(Error::Config("output_weight_factor must be positive".into()));
        }
        Ok(())
    }

    fn resolve_deltas(&self, r: usize) -> Result<Vec<f64>> {
        if self.deltas.len() == 1 {
            Ok(vec![self.deltas[0]; r])
        } else if self.deltas.len() == r {
            Ok(self.deltas.clone())
        } else {
            Err(Error::Config(format!(
                "{} spawn thresholds for {r} outputs",
                self.deltas.len()
            )))
        }
    }
}

/// Sub-seeds derived from the run seed. The harness derives single-model
/// baselines from the same sequence so that an ensemble of one and a lone
/// OS-ELM start from an identical hidden layer.
pub(crate) struct DerivedSeeds {
    pub cv: u64,
    pub first_member: u64,
    pub reservoir: u64,
    pub member_stream: ChaCha8Rng,
}

pub(crate) fn derive_seeds(seed: u64) -> DerivedSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cv = rng.random();
    let first_member = rng.random();
    let reservoir = rng.random();
    DerivedSeeds {
        cv,
        first_member,
        reservoir,
        member_stream: rng,
    }
}

/// One ensemble member and its bookkeeping.
#[derive(Debug, Clone)]
pub struct EnsembleMember {
    model: ElmState,
    weight: f64,
    life: usize,
    mse: f64,
    err_window: VecDeque<f64>,
    created_at: u64,
}

impl EnsembleMember {
    fn new(model: ElmState, created_at: u64) -> Self {
        EnsembleMember {
            model,
            weight: 1.0,
            life: 0,
            mse: 0.0,
            err_window: VecDeque::new(),
            created_at,
        }
    }

    /// Folds one squared error into the window; `mse` is recomputed as the
    /// exact mean of the retained errors (at most `ws` of them).
    pub fn record_error(&mut self, e: f64, ws: usize) {
        self.err_window.push_back(e);
        if self.err_window.len() > ws {
            self.err_window.pop_front();
        }
        self.life += 1;
        self.mse = self.err_window.iter().sum::<f64>() / self.err_window.len() as f64;
    }

    pub fn model(&self) -> &ElmState {
        &self.model
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn life(&self) -> usize {
        self.life
    }

    pub fn mse(&self) -> f64 {
        self.mse
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }
}

/// Squared prediction error of one member on a standardized sample:
/// `sum_j (y_j - o_j)^2`.
pub fn member_error(output: &DVector<f64>, target: &DVector<f64>) -> f64 {
    (target - output).norm_squared()
}

/// Absolute percentage error per output, in percent.
pub fn ape_percent(prediction: &DVector<f64>, actual: &DVector<f64>) -> Vec<f64> {
    prediction
        .iter()
        .zip(actual.iter())
        .map(|(p, a)| ((p - a) / a).abs() * 100.0)
        .collect()
}

/// True when any output misses by more than its fractional threshold.
pub fn spawn_triggered(ape_pct: &[f64], deltas: &[f64]) -> bool {
    ape_pct
        .iter()
        .zip(deltas.iter())
        .any(|(ape, delta)| ape / 100.0 > *delta)
}

/// Per-member snapshot embedded in a [`StepTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct MemberStats {
    pub weight: f64,
    pub mse: f64,
    pub life: usize,
}

/// Everything observable about one processed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub index: usize,
    /// De-standardized ensemble prediction (computed before any update).
    pub prediction: DVector<f64>,
    pub actual: DVector<f64>,
    /// Absolute percentage error per output, in percent.
    pub ape_pct: Vec<f64>,
    pub spawned: bool,
    /// The spawn trigger fired but the training set was too small.
    pub spawn_skipped: bool,
    /// Creation id of the pruned member, if any.
    pub pruned: Option<u64>,
    /// Prediction fell back to the unweighted mean because all weights were 0.
    pub zero_weight_fallback: bool,
    pub retrain_failures: usize,
    /// Snapshots taken after the full pipeline, one per current member.
    pub members: Vec<MemberStats>,
}

impl StepTrace {
    pub fn ensemble_size(&self) -> usize {
        self.members.len()
    }

    /// CSV header matching [`StepTrace::csv_row`].
    pub fn csv_header(outputs: usize) -> String {
        let mut cols = vec!["t".to_string()];
        for i in 1..=outputs {
            cols.push(format!("pred_{i}"));
        }
        for i in 1..=outputs {
            cols.push(format!("actual_{i}"));
        }
        for i in 1..=outputs {
            cols.push(format!("ape_{i}"));
        }
        cols.push("ensemble_size".into());
        cols.push("spawned".into());
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.index.to_string()];
        cols.extend(self.prediction.iter().map(|v| v.to_string()));
        cols.extend(self.actual.iter().map(|v| v.to_string()));
        cols.extend(self.ape_pct.iter().map(|v| v.to_string()));
        cols.push(self.ensemble_size().to_string());
        cols.push((self.spawned as u8).to_string());
        cols.join(",")
    }
}

/// The online ensemble. Strictly sequential per-sample processing; one
/// instance is a single logical actor.
#[derive(Debug, Clone)]
pub struct Ensemble {
    cfg: EnsembleConfig,
    deltas: Vec<f64>,
    scaler: Standardizer,
    members: Vec<EnsembleMember>,
    stm: SlidingWindow,
    ltm: Reservoir,
    dist_weights: DistanceWeights,
    hidden_nodes: usize,
    input_dim: usize,
    output_dim: usize,
    next_member_id: u64,
    member_seed_rng: ChaCha8Rng,
    spawn_count: usize,
}

impl Ensemble {
    /// Phase-one initialization: fits the standardizer, picks the hidden-node
    /// count by cross validation, batch-trains the first member (weight 1,
    /// life 0, mse 0), fills the window with the last `ws` initial points and
    /// seeds the reservoir with the first `ws`.
    pub fn init(init_data: &[Sample], cfg: EnsembleConfig) -> Result<Self> {
        cfg.validate()?;
        if init_data.len() < cfg.ws {
            return Err(Error::Config(format!(
                "initialization needs at least ws = {} samples, got {}",
                cfg.ws,
                init_data.len()
            )));
        }
        let input_dim = init_data[0].input_dim();
        let output_dim = init_data[0].output_dim();
        for s in init_data {
            if s.input_dim() != input_dim || s.output_dim() != output_dim {
                return Err(Error::Config("inconsistent dimensions in init data".into()));
            }
            if !s.is_finite() {
                return Err(Error::Config(format!(
                    "non-finite values in init sample {}",
                    s.index
                )));
            }
        }
        let deltas = cfg.resolve_deltas(output_dim)?;
        let scaler = Standardizer::fit(init_data)?;
        let std_data: Vec<Sample> = init_data.iter().map(|s| scaler.transform(s)).collect();

        let seeds = derive_seeds(cfg.seed);
        let selection = NodeSelection {
            candidates: cfg.candidate_nodes.clone(),
            folds: cfg.cv_folds,
            activation: cfg.activation,
            ridge: cfg.ridge,
        };
        let hidden_nodes = select_hidden_nodes(&std_data, &selection, seeds.cv)?;
        let layer =
            HiddenLayer::random(hidden_nodes, input_dim, cfg.activation, seeds.first_member)?;
        let first = ElmState::batch_train(layer, &std_data, cfg.ridge)?;

        let mut stm = SlidingWindow::new(cfg.ws);
        for s in std_data.iter().skip(init_data.len() - cfg.ws) {
            stm.push(s.clone());
        }
        let mut ltm = Reservoir::new(cfg.ws, seeds.reservoir);
        if cfg.memory_mode == MemoryMode::StmPlusLtm {
            for s in std_data.iter().take(cfg.ws) {
                ltm.offer(s.clone(), false);
            }
        }
        let dist_weights =
            DistanceWeights::for_dims(input_dim, output_dim, cfg.output_weight_factor)?;

        Ok(Ensemble {
            cfg,
            deltas,
            scaler,
            members: vec![EnsembleMember::new(first, 0)],
            stm,
            ltm,
            dist_weights,
            hidden_nodes,
            input_dim,
            output_dim,
            next_member_id: 1,
            member_seed_rng: seeds.member_stream,
            spawn_count: 0,
        })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn hidden_nodes(&self) -> usize {
        self.hidden_nodes
    }

    pub fn scaler(&self) -> &Standardizer {
        &self.scaler
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.cfg
    }

    pub fn spawn_count(&self) -> usize {
        self.spawn_count
    }

    pub fn short_term_memory(&self) -> &SlidingWindow {
        &self.stm
    }

    pub fn long_term_memory(&self) -> &Reservoir {
        &self.ltm
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Weighted-voting prediction for a raw (unstandardized) input.
    pub fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::InvalidArgument(format!(
                "input has dimension {}, ensemble expects {}",
                x.len(),
                self.input_dim
            )));
        }
        let xs = self.scaler.transform_x(x);
        let outputs: Vec<DVector<f64>> = self
            .members
            .iter()
            .map(|m| m.model.predict(&xs))
            .collect::<Result<_>>()?;
        let (pred_std, _) = Self::weighted_vote(&outputs, &self.weights());
        Ok(self.scaler.inverse_y(&pred_std))
    }

    fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.weight).collect()
    }

    /// Weighted vote; falls back to the unweighted mean when the weight mass
    /// underflows to zero.
    fn weighted_vote(outputs: &[DVector<f64>], weights: &[f64]) -> (DVector<f64>, bool) {
        let wsum: f64 = weights.iter().sum();
        let r = outputs[0].len();
        let mut acc = DVector::zeros(r);
        if wsum > 0.0 {
            for (o, &w) in outputs.iter().zip(weights.iter()) {
                acc.axpy(w, o, 1.0);
            }
            (acc / wsum, false)
        } else {
            for o in outputs {
                acc += o;
            }
            (acc / outputs.len() as f64, true)
        }
    }

    /// Weight update around the median MSE: `w_i = exp(-(mse_i - med) / med)`.
    /// A zero median carries no ranking information, so all weights become 1.
    pub fn update_weights(&mut self) {
        let mut mses: Vec<f64> = self.members.iter().map(|m| m.mse).collect();
        mses.sort_by(f64::total_cmp);
        let med = median_of_sorted(&mses);
        for m in &mut self.members {
            m.weight = if med == 0.0 {
                1.0
            } else {
                (-(m.mse - med) / med).exp()
            };
        }
    }

    /// Scales weights to sum to 1; an all-zero sum becomes uniform.
    pub fn normalize_weights(&mut self) {
        let wsum: f64 = self.members.iter().map(|m| m.weight).sum();
        if wsum > 0.0 {
            for m in &mut self.members {
                m.weight /= wsum;
            }
        } else {
            let uniform = 1.0 / self.members.len() as f64;
            for m in &mut self.members {
                m.weight = uniform;
            }
        }
    }

    /// Removes worst-MSE members until the ensemble fits `max_models`.
    /// Ties break toward the oldest member. Returns the last removed id.
    pub fn prune(&mut self) -> Option<u64> {
        let mut removed = None;
        while self.members.len() > self.cfg.max_models {
            let mut victim = 0usize;
            for i in 1..self.members.len() {
                let (m, v) = (&self.members[i], &self.members[victim]);
                if m.mse > v.mse || (m.mse == v.mse && m.created_at < v.created_at) {
                    victim = i;
                }
            }
            removed = Some(self.members[victim].created_at);
            self.members.remove(victim);
        }
        removed
    }

    /// Training set a spawn would use for `current` (already standardized).
    pub fn spawn_training_set(&self, current: &Sample) -> Result<Vec<Sample>> {
        match self.cfg.memory_mode {
            MemoryMode::StmPlusLtm => select_training_set(
                &self.stm,
                &self.ltm,
                current,
                &self.dist_weights,
                self.cfg.ws,
            ),
            MemoryMode::StmOnly => {
                // most recent ws points of the stream including the current one
                let mut set: Vec<Sample> = self.stm.iter().cloned().collect();
                set.push(current.clone());
                let skip = set.len().saturating_sub(self.cfg.ws);
                Ok(set.split_off(skip))
            }
        }
    }

    /// Batch-trains and appends a new member (weight 1, life 0, mse 0).
    /// Returns false (leaving the ensemble unchanged) when the training set
    /// is smaller than the hidden-node count.
    fn spawn(&mut self, current: &Sample) -> Result<bool> {
        let training = self.spawn_training_set(current)?;
        if training.len() < self.hidden_nodes {
            return Ok(false);
        }
        let layer = HiddenLayer::random(
            self.hidden_nodes,
            self.input_dim,
            self.cfg.activation,
            self.member_seed_rng.random(),
        )?;
        let model = ElmState::batch_train(layer, &training, self.cfg.ridge)?;
        let id = self.next_member_id;
        self.next_member_id += 1;
        self.members.push(EnsembleMember::new(model, id));
        self.spawn_count += 1;
        Ok(true)
    }

    /// Runs the full per-sample pipeline and reports what happened.
    ///
    /// Invalid samples (non-finite values, zero target, wrong dimensions) are
    /// rejected with a data error before any state changes.
    pub fn process_sample(&mut self, sample: &Sample) -> Result<StepTrace> {
        if sample.input_dim() != self.input_dim || sample.output_dim() != self.output_dim {
            return Err(Error::Data(format!(
                "sample {} has dimensions ({}, {}), expected ({}, {})",
                sample.index,
                sample.input_dim(),
                sample.output_dim(),
                self.input_dim,
                self.output_dim
            )));
        }
        if !sample.is_finite() {
            return Err(Error::Data(format!(
                "non-finite values in sample {}",
                sample.index
            )));
        }
        if sample.y.iter().any(|&v| v == 0.0) {
            return Err(Error::Data(format!(
                "zero target in sample {}; percentage error is undefined",
                sample.index
            )));
        }
        let s = self.scaler.transform(sample);

        // (1) predict with the weights carried over from the previous step
        let outputs: Vec<DVector<f64>> = self
            .members
            .iter()
            .map(|m| m.model.predict(&s.x))
            .collect::<Result<_>>()?;
        let (pred_std, zero_weight_fallback) = Self::weighted_vote(&outputs, &self.weights());
        let prediction = self.scaler.inverse_y(&pred_std);

        // (2) evaluate every member on the new point
        let ws = self.cfg.ws;
        for (m, o) in self.members.iter_mut().zip(outputs.iter()) {
            m.record_error(member_error(o, &s.y), ws);
        }

        // (3) weight adaptation
        self.update_weights();

        // (4) retrain all members on the new point
        let mut retrain_failures = 0usize;
        for m in &mut self.members {
            if m.model.sequential_update(&s.x, &s.y).is_err() {
                retrain_failures += 1;
            }
        }

        // (5) spawn trigger on the step-(1) prediction
        let ape_pct = ape_percent(&prediction, &sample.y);
        let trigger = spawn_triggered(&ape_pct, &self.deltas);

        // (6) spawn
        let (spawned, spawn_skipped) = if trigger {
            let ok = self.spawn(&s)?;
            (ok, !ok)
        } else {
            (false, false)
        };

        // (7) prune
        let pruned = self.prune();

        // (8) normalize
        self.normalize_weights();

        // (9) memory updates; the triggering point is pinned in the reservoir
        self.stm.push(s.clone());
        if self.cfg.memory_mode == MemoryMode::StmPlusLtm {
            self.ltm.offer(s, spawned);
        }

        Ok(StepTrace {
            index: sample.index,
            prediction,
            actual: sample.y.clone(),
            ape_pct,
            spawned,
            spawn_skipped,
            pruned,
            zero_weight_fallback,
            retrain_failures,
            members: self
                .members
                .iter()
                .map(|m| MemberStats {
                    weight: m.weight,
                    mse: m.mse,
                    life: m.life,
                })
                .collect(),
        })
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
