//! Extreme learning machine primitives.
//!
//! An ELM is a single-hidden-layer network whose input-to-hidden parameters
//! are drawn at random once and never trained; only the hidden-to-output
//! weights are fitted, by linear least squares. [`ElmState::batch_train`]
//! solves the batch problem and keeps the inverse correlation matrix so that
//! [`ElmState::sequential_update`] can then fold in one sample at a time with
//! a rank-one recursive least-squares step.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::Sample;

/// Hidden-neuron nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Sine,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Sine => z.sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Sine => "sine",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "sine" => Ok(Activation::Sine),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation '{other}' (expected sigmoid, tanh, or sine)"
            ))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Random input-to-hidden parameters, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    weights: DMatrix<f64>, // L x d
    biases: DVector<f64>,  // L
    activation: Activation,
}

impl HiddenLayer {
    /// Draws weights and biases i.i.d. from Uniform(-1, 1). Two calls with
    /// equal arguments produce bitwise-identical layers.
    pub fn random(neurons: usize, input_dim: usize, activation: Activation, seed: u64) -> Result<Self> {
        if neurons == 0 {
            return Err(Error::InvalidArgument("hidden layer needs at least one neuron".into()));
        }
        if input_dim == 0 {
            return Err(Error::InvalidArgument("input dimension must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = DMatrix::zeros(neurons, input_dim);
        for i in 0..neurons {
            for j in 0..input_dim {
                weights[(i, j)] = rng.random_range(-1.0..1.0);
            }
        }
        let biases = DVector::from_fn(neurons, |_, _| rng.random_range(-1.0..1.0));
        Ok(HiddenLayer {
            weights,
            biases,
            activation,
        })
    }

    /// Builds a layer from explicit parameters (rows of `weights` are the
    /// per-neuron input weights).
    pub fn from_parts(weights: DMatrix<f64>, biases: DVector<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::InvalidArgument("hidden layer must be non-empty".into()));
        }
        if weights.nrows() != biases.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weight rows but {} biases",
                weights.nrows(),
                biases.len()
            )));
        }
        Ok(HiddenLayer {
            weights,
            biases,
            activation,
        })
    }

    pub fn neurons(&self) -> usize {
        self.weights.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Feature map `H(x)`: element i is `G(w_i . x + b_i)`.
    pub fn map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "input has dimension {}, layer expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut h = &self.weights * x + &self.biases;
        for v in h.iter_mut() {
            *v = self.activation.apply(*v);
        }
        Ok(h)
    }
}

/// One OS-ELM learner: a fixed hidden layer, the trained output weights, and
/// the inverse correlation matrix driving recursive updates.
#[derive(Debug, Clone)]
pub struct ElmState {
    hidden: HiddenLayer,
    beta: DMatrix<f64>,     // L x r
    inv_corr: DMatrix<f64>, // L x L, symmetric
    samples_seen: usize,
}

impl ElmState {
    /// Batch least squares on an initial block of at least L samples: solves
    /// `(H^T H + ridge I) beta = H^T Y` and keeps `R = (H^T H + ridge I)^-1`.
    pub fn batch_train(hidden: HiddenLayer, samples: &[Sample], ridge: f64) -> Result<Self> {
        let l = hidden.neurons();
        if samples.len() < l {
            return Err(Error::Training(format!(
                "batch training needs at least L = {l} samples, got {}",
                samples.len()
            )));
        }
        if !(ridge >= 0.0) {
            return Err(Error::InvalidArgument("ridge must be non-negative".into()));
        }
        let r = samples[0].output_dim();
        let m = samples.len();
        let mut h = DMatrix::zeros(m, l);
        let mut y = DMatrix::zeros(m, r);
        for (row, s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::Data(format!("non-finite values in sample {}", s.index)));
            }
            if s.output_dim() != r {
                return Err(Error::InvalidArgument("inconsistent output dimensions".into()));
            }
            let hx = hidden.map(&s.x)?;
            h.row_mut(row).tr_copy_from(&hx);
            y.row_mut(row).tr_copy_from(&s.y);
        }
        let mut a = h.tr_mul(&h);
        for i in 0..l {
            a[(i, i)] += ridge;
        }
        let inv_corr = Cholesky::new(a)
            .ok_or_else(|| {
                Error::Numerical("H^T H is singular; retry with a positive ridge".into())
            })?
            .inverse();
        let beta = &inv_corr * h.tr_mul(&y);
        Ok(ElmState {
            hidden,
            beta,
            inv_corr,
            samples_seen: m,
        })
    }

    /// One recursive least-squares step with a single `(x, y)` pair:
    /// the inverse correlation matrix takes a rank-one downdate and the
    /// output weights move along the innovation. The state is untouched if
    /// the sample is rejected.
    pub fn sequential_update(&mut self, x: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.output_dim() {
            return Err(Error::InvalidArgument(format!(
                "target has dimension {}, model expects {}",
                y.len(),
                self.output_dim()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) || !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("non-finite values in sequential update".into()));
        }
        let h = self.hidden.map(x)?;
        let innovation = y - self.beta.tr_mul(&h);
        let v = &self.inv_corr * &h;
        let denom = 1.0 + h.dot(&v);
        if !denom.is_finite() || denom <= 0.0 {
            return Err(Error::Numerical(format!(
                "ill-conditioned RLS step (denominator {denom})"
            )));
        }
        self.inv_corr.ger(-1.0 / denom, &v, &v, 1.0);
        // re-symmetrize to keep rank-one round-off from accumulating
        let l = self.inv_corr.nrows();
        for i in 0..l {
            for j in (i + 1)..l {
                let m = 0.5 * (self.inv_corr[(i, j)] + self.inv_corr[(j, i)]);
                self.inv_corr[(i, j)] = m;
                self.inv_corr[(j, i)] = m;
            }
        }
        let gain = &self.inv_corr * &h;
        self.beta.ger(1.0, &gain, &innovation, 1.0);
        self.samples_seen += 1;
        Ok(())
    }

    /// `f(x) = H(x) beta`.
    pub fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let h = self.hidden.map(x)?;
        Ok(self.beta.tr_mul(&h))
    }

    pub fn hidden(&self) -> &HiddenLayer {
        &self.hidden
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn inv_corr(&self) -> &DMatrix<f64> {
        &self.inv_corr
    }

    pub fn output_dim(&self) -> usize {
        self.beta.ncols()
    }

    pub fn samples_seen(&self) -> usize {
        self.samples_seen
    }
}

/// Settings for choosing the hidden-node count by k-fold cross validation.
#[derive(Debug, Clone)]
pub struct NodeSelection {
    pub candidates: Vec<usize>,
    pub folds: usize,
    pub activation: Activation,
    pub ridge: f64,
}

/// Returns the candidate node count with the lowest mean k-fold validation
/// MSE on `init_data`; ties go to the smaller count.
pub fn select_hidden_nodes(init_data: &[Sample], sel: &NodeSelection, seed: u64) -> Result<usize> {
    if sel.candidates.is_empty() {
        return Err(Error::InvalidArgument("empty hidden-node candidate list".into()));
    }
    if sel.folds < 2 {
        return Err(Error::InvalidArgument("cross validation needs at least 2 folds".into()));
    }
    let n = init_data.len();
    if n < sel.folds {
        return Err(Error::InvalidArgument(format!(
            "{n} samples cannot be split into {} folds",
            sel.folds
        )));
    }
    let max_fold = n.div_ceil(sel.folds);
    for &l in &sel.candidates {
        if n - max_fold < l {
            return Err(Error::InvalidArgument(format!(
                "candidate L = {l} leaves a training fold smaller than L"
            )));
        }
    }

    let mut best: Option<(f64, usize)> = None;
    for &l in &sel.candidates {
        let mse = cross_validate(init_data, l, sel, seed)?;
        let better = match best {
            None => true,
            Some((best_mse, best_l)) => mse < best_mse || (mse == best_mse && l < best_l),
        };
        if better {
            best = Some((mse, l));
        }
    }
    Ok(best.expect("candidates are non-empty").1)
}

fn cross_validate(data: &[Sample], l: usize, sel: &NodeSelection, seed: u64) -> Result<f64> {
    let d = data[0].input_dim();
    let layer = HiddenLayer::random(l, d, sel.activation, seed)?;
    let n = data.len();
    let mut fold_mse = Vec::with_capacity(sel.folds);
    for fold in 0..sel.folds {
        let lo = fold * n / sel.folds;
        let hi = (fold + 1) * n / sel.folds;
        if lo == hi {
            continue;
        }
        let train: Vec<Sample> = data[..lo].iter().chain(data[hi..].iter()).cloned().collect();
        let state = ElmState::batch_train(layer.clone(), &train, sel.ridge)?;
        let mut sse = 0.0;
        let mut count = 0usize;
        for s in &data[lo..hi] {
            let pred = state.predict(&s.x)?;
            sse += (&s.y - pred).norm_squared();
            count += s.output_dim();
        }
        fold_mse.push(sse / count as f64);
    }
    Ok(fold_mse.iter().sum::<f64>() / fold_mse.len() as f64)
}
