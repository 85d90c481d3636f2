//! Stream memories and training-set selection.
//!
//! Two bounded memories track a data stream: a FIFO [`SlidingWindow`] over the
//! most recent points and a uniformly sampled [`Reservoir`] over the whole
//! history. When the ensemble spawns a model, [`select_training_set`] pulls
//! the candidates nearest to the triggering point (in a weighted squared
//! distance over the extended vector `z = (x, y)`) from both memories.

use std::collections::{HashSet, VecDeque};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::Sample;

/// Factor by which output coordinates outweigh input coordinates in the
/// selection distance.
pub const DEFAULT_OUTPUT_WEIGHT_FACTOR: f64 = 5.0;

/// Short-term memory: the most recent `capacity` samples in arrival order.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    capacity: usize,
    entries: VecDeque<Sample>,
}

impl SlidingWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be at least 1");
        SlidingWindow {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    /// Appends a sample, evicting the oldest entry at capacity.
    pub fn push(&mut self, s: Sample) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(s);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Entries oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.entries.iter()
    }
}

/// Long-term memory filled by uniform reservoir sampling.
///
/// The first `capacity` offers are always kept. Offer `t` is then kept with
/// probability `capacity / t`, displacing a uniformly random entry; offers
/// flagged as pinned are kept with probability 1. Pinning affects insertion
/// only — a pinned entry can still be displaced later.
#[derive(Debug, Clone)]
pub struct Reservoir {
    capacity: usize,
    entries: Vec<Sample>,
    pinned: Vec<bool>,
    offered: usize,
    rng: ChaCha8Rng,
}

impl Reservoir {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity >= 1, "reservoir capacity must be at least 1");
        Reservoir {
            capacity,
            entries: Vec::with_capacity(capacity),
            pinned: Vec::with_capacity(capacity),
            offered: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn offer(&mut self, s: Sample, pin: bool) {
        self.offered += 1;
        if self.entries.len() < self.capacity {
            self.entries.push(s);
            self.pinned.push(pin);
            return;
        }
        if pin {
            let victim = self.rng.random_range(0..self.entries.len());
            self.entries[victim] = s;
            self.pinned[victim] = true;
            return;
        }
        // Algorithm R: a single draw decides both acceptance (probability
        // capacity / offered) and the uniformly chosen victim slot.
        let j = self.rng.random_range(0..self.offered);
        if j < self.capacity {
            self.entries[j] = s;
            self.pinned[j] = false;
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total number of points offered so far.
    pub fn offered(&self) -> usize {
        self.offered
    }

    pub fn entries(&self) -> &[Sample] {
        &self.entries
    }

    pub fn contains_index(&self, stream_index: usize) -> bool {
        self.entries.iter().any(|s| s.index == stream_index)
    }
}

/// Per-coordinate weights over the extended vector `z = (x, y)`.
#[derive(Debug, Clone)]
pub struct DistanceWeights {
    weights: DVector<f64>,
}

impl DistanceWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "distance weights must all be positive and finite".into(),
            ));
        }
        Ok(DistanceWeights {
            weights: DVector::from_vec(weights),
        })
    }

    /// Unit weight on the `d` inputs and `output_factor` on the `r` outputs.
    pub fn for_dims(d: usize, r: usize, output_factor: f64) -> Result<Self> {
        if d == 0 || r == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        let mut w = vec![1.0; d + r];
        for v in w.iter_mut().skip(d) {
            *v = output_factor;
        }
        DistanceWeights::new(w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.len() == 0
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.weights
    }
}

/// Weighted squared distance between two extended points:
/// `sum_k W_k (a_k - b_k)^2`.
pub fn weighted_distance(a: &DVector<f64>, b: &DVector<f64>, w: &DistanceWeights) -> Result<f64> {
    if a.len() != b.len() || a.len() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "distance dimensions disagree: {} vs {} with {} weights",
            a.len(),
            b.len(),
            w.len()
        )));
    }
    let mut acc = 0.0;
    for k in 0..a.len() {
        let diff = a[k] - b[k];
        acc += w.weights[k] * diff * diff;
    }
    Ok(acc)
}

/// Picks training points from an explicit candidate list by distance to the
/// reference point `z_t`.
///
/// All candidates with distance below `tau = mean - std` of the distances are
/// taken, then the set is padded in ascending-distance order until it holds
/// `min(ws, candidates)` points. When the distances are degenerate (zero std
/// or `tau <= 0`) the threshold phase is skipped and selection is pure
/// ascending-distance padding. Because at most half of any sample can sit
/// below mean - std (Cantelli), the threshold set never exceeds `ws` for a
/// candidate pool of `2 ws + 1`, so both phases together reduce to taking the
/// `min(ws, candidates)` nearest points. Ties break toward the newer sample.
pub fn select_by_distance(
    candidates: &[Sample],
    z_t: &DVector<f64>,
    w: &DistanceWeights,
    ws: usize,
) -> Result<Vec<Sample>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to select from".into()));
    }
    let mut scored: Vec<(f64, &Sample)> = Vec::with_capacity(candidates.len());
    for c in candidates {
        scored.push((weighted_distance(&c.extended(), z_t, w)?, c));
    }
    scored.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| b.1.index.cmp(&a.1.index))
    });
    let take = ws.min(scored.len());
    Ok(scored[..take].iter().map(|(_, s)| (*s).clone()).collect())
}

/// Builds the training set for a freshly spawned model from both memories.
///
/// The candidate pool is the union of the short-term window, the reservoir,
/// and the current sample, deduplicated by stream index. The current sample
/// has distance 0 and is always part of the result.
pub fn select_training_set(
    stm: &SlidingWindow,
    ltm: &Reservoir,
    current: &Sample,
    w: &DistanceWeights,
    ws: usize,
) -> Result<Vec<Sample>> {
    if stm.is_empty() && ltm.is_empty() {
        return Err(Error::InvalidArgument(
            "both memories are empty; nothing to select".into(),
        ));
    }
    let mut seen: HashSet<usize> = HashSet::new();
    let mut candidates: Vec<Sample> = Vec::with_capacity(stm.len() + ltm.len() + 1);
    seen.insert(current.index);
    candidates.push(current.clone());
    for s in stm.iter().chain(ltm.entries().iter()) {
        if seen.insert(s.index) {
            candidates.push(s.clone());
        }
    }
    select_by_distance(&candidates, &current.extended(), w, ws)
}
