//! Feedforward network trained by backpropagation that reads the nine sonar
//! readings and regresses the minimum distance and the index of the sensor
//! that measured it.

pub mod io;
pub mod sensors;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sensors::{Dataset, Sample, SensorArray, SENSOR_COUNT};

pub const DEFAULT_HIDDEN: usize = 12;
pub const MIN_DATASET: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BpnnError {
    #[error("sensor S{sensor} reported negative distance {value}")]
    NegativeReading { sensor: usize, value: f64 },
    #[error("dataset has {got} samples, at least {needed} required")]
    DatasetTooSmall { needed: usize, got: usize },
    #[error("layer sizes {0:?} do not chain")]
    ShapeMismatch(Vec<usize>),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Layered network with sigmoid hidden units and an identity output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    /// `weights[l]` maps layer `l` to layer `l + 1` (rows = outputs).
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect(),
            biases: net.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
        }
    }

    fn add_scaled(&mut self, other: &Gradients, s: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b * s;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b * s;
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.weights.iter_mut().for_each(|w| *w *= s);
        self.biases.iter_mut().for_each(|b| *b *= s);
        self
    }

    /// All entries, weights layer by layer (column-major) then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

impl Mlp {
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self, BpnnError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(BpnnError::ShapeMismatch(layer_sizes.to_vec()));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes.windows(2).map(|w| DMatrix::zeros(w[1], w[0])).collect(),
            biases: layer_sizes[1..].iter().map(|n| DVector::zeros(*n)).collect(),
        })
    }

    /// Uniform Glorot initialization from `seed`.
    pub fn random(layer_sizes: &[usize], seed: u64) -> Result<Self, BpnnError> {
        let mut net = Self::zeros(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut net.weights {
            let limit = (6.0 / (w.nrows() + w.ncols()) as f64).sqrt();
            w.iter_mut().for_each(|x| *x = rng.random_range(-limit..limit));
        }
        Ok(net)
    }

    /// Nine inputs, one hidden layer, two outputs.
    pub fn sonar(hidden: usize, seed: u64) -> Self {
        Self::random(&[SENSOR_COUNT, hidden, 2], seed).expect("non-empty layers")
    }

    pub fn check_shapes(&self) -> Result<(), BpnnError> {
        let ok = self.layer_sizes.len() >= 2
            && self.weights.len() + 1 == self.layer_sizes.len()
            && self.biases.len() == self.weights.len()
            && self.weights.iter().enumerate().all(|(l, w)| {
                w.ncols() == self.layer_sizes[l]
                    && w.nrows() == self.layer_sizes[l + 1]
                    && self.biases[l].len() == w.nrows()
            })
            && self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()));
        if ok {
            Ok(())
        } else {
            Err(BpnnError::ShapeMismatch(self.layer_sizes.clone()))
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Activations of every layer, input first.
    fn activations(&self, input: &[f64]) -> Vec<DVector<f64>> {
        let mut acts = vec![DVector::from_column_slice(input)];
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = w * acts.last().expect("input present") + b;
            acts.push(if l == last { z } else { z.map(sigmoid) });
        }
        acts
    }

    pub fn forward(&self, input: &[f64]) -> DVector<f64> {
        self.activations(input).pop().expect("output layer")
    }

    /// Predicted (minimum distance, sensor index) for a normalized array.
    pub fn predict(&self, input: &SensorArray) -> (f64, f64) {
        let y = self.forward(&input.readings);
        (y[0], y[1])
    }

    /// Mean over outputs of the squared error.
    pub fn loss(&self, input: &[f64], target: &[f64]) -> f64 {
        let y = self.forward(input);
        y.iter().zip(target).map(|(a, t)| (a - t).powi(2)).sum::<f64>() / y.len() as f64
    }

    /// Exact gradient of [`Mlp::loss`] for one sample.
    pub fn backprop(&self, input: &[f64], target: &[f64]) -> Gradients {
        let acts = self.activations(input);
        let n_out = *self.layer_sizes.last().expect("output layer") as f64;
        let out = acts.last().expect("output");
        let delta = DVector::from_iterator(out.len(), out.iter().zip(target).map(|(y, t)| 2.0 * (y - t) / n_out));
        self.backprop_from(&acts, delta)
    }

    /// Gradient of `delta · output` given the layer activations.
    fn backprop_from(&self, acts: &[DVector<f64>], mut delta: DVector<f64>) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        for l in (0..self.weights.len()).rev() {
            grads.weights[l] = &delta * acts[l].transpose();
            grads.biases[l] = delta.clone();
            if l > 0 {
                let back = self.weights[l].transpose() * &delta;
                // sigmoid derivative from the stored activation
                delta = back.zip_map(&acts[l], |g, a| g * a * (1.0 - a));
            }
        }
        grads
    }

    /// Parameters in the order of [`Gradients::flatten`].
    pub fn parameters(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        DVector::from_vec(out)
    }

    pub fn set_parameters(&mut self, p: &DVector<f64>) {
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for x in w.iter_mut().chain(b.iter_mut()) {
                *x = p[k];
                k += 1;
            }
        }
    }

    /// Output residuals and their Jacobian over a sample set, one row per
    /// sample output.
    fn residual_jacobian(&self, samples: &[Sample]) -> (DVector<f64>, DMatrix<f64>) {
        let n_out = *self.layer_sizes.last().expect("output layer");
        let rows = samples.len() * n_out;
        let mut r = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, self.parameter_count());
        for (i, s) in samples.iter().enumerate() {
            let acts = self.activations(&s.readings);
            let y = acts.last().expect("output");
            let t = s.target();
            for k in 0..n_out {
                let row = i * n_out + k;
                r[row] = y[k] - t[k];
                let mut unit = DVector::zeros(n_out);
                unit[k] = 1.0;
                let g = self.backprop_from(&acts, unit).flatten();
                jac.row_mut(row).copy_from_slice(&g);
            }
        }
        (r, jac)
    }

    fn apply(&mut self, g: &Gradients, step: f64) {
        for (w, d) in self.weights.iter_mut().zip(&g.weights) {
            *w -= d * step;
        }
        for (b, d) in self.biases.iter_mut().zip(&g.biases) {
            *b -= d * step;
        }
    }

    pub fn dataset_mse(&self, samples: &[Sample]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        samples.iter().map(|s| self.loss(&s.readings, &s.target())).sum::<f64>() / samples.len() as f64
    }

    /// Summed squared error over samples and outputs.
    fn sse(&self, samples: &[Sample]) -> f64 {
        samples
            .iter()
            .map(|s| {
                let y = self.forward(&s.readings);
                y.iter().zip(s.target()).map(|(a, t)| (a - t).powi(2)).sum::<f64>()
            })
            .sum()
    }

    fn batch_gradient(&self, samples: &[&Sample]) -> Gradients {
        let mut g = Gradients::zeros_like(self);
        let s = 1.0 / samples.len() as f64;
        for x in samples {
            g.add_scaled(&self.backprop(&x.readings, &x.target()), s);
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    GradientDescent,
    /// Damped Gauss-Newton over the whole training split.
    LevenbergMarquardt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    /// Heavy-ball momentum; 0 gives plain gradient descent.
    pub momentum: f64,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub split: (f64, f64, f64),
    /// Samples per update; 0 means the whole training split.
    pub batch_size: usize,
    /// Train on inputs and targets mapped onto [-1, 1] by training-split
    /// ranges; the maps are folded back into the returned weights.
    pub rescale: bool,
    /// Initial Levenberg-Marquardt damping.
    pub damping: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::LevenbergMarquardt,
            learning_rate: 0.05,
            momentum: 0.9,
            max_epochs: 1000,
            patience: 6,
            split: (0.7, 0.15, 0.15),
            batch_size: 0,
            rescale: true,
            damping: 1e-3,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), BpnnError> {
        let (a, b, c) = self.split;
        if !(self.learning_rate > 0.0) {
            return Err(BpnnError::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(self.damping > 0.0) {
            return Err(BpnnError::InvalidConfig("damping must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(BpnnError::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if !(a > 0.0 && b > 0.0 && c > 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(BpnnError::InvalidConfig(format!("split {:?} must be positive and sum to 1", self.split)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_train_mse: f64,
    pub final_val_mse: f64,
    /// Target minus output for (minimum distance, sensor index), one per test sample.
    pub test_errors: Vec<[f64; 2]>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Training MSE before each epoch's updates, in the units the optimizer sees.
    pub train_history: Vec<f64>,
    /// Validation MSE after each epoch, in the units the optimizer sees.
    pub val_history: Vec<f64>,
}

/// Per-sample (target − output) over a set of samples.
pub fn errors(net: &Mlp, samples: &[Sample]) -> Vec<[f64; 2]> {
    samples
        .iter()
        .map(|s| {
            let y = net.forward(&s.readings);
            [s.d_min - y[0], s.index - y[1]]
        })
        .collect()
}

/// Smallest interval holding every error of one output.
pub fn error_band(errs: &[[f64; 2]], output: usize) -> (f64, f64) {
    errs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e[output]), hi.max(e[output])))
}

/// Splits shuffled samples into (train, validation, test).
pub fn split_dataset(samples: &[Sample], split: (f64, f64, f64), seed: u64) -> (Vec<Sample>, Vec<Sample>, Vec<Sample>) {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = samples.len();
    let n_val = ((n as f64 * split.1).round() as usize).max(1);
    let n_test = ((n as f64 * split.2).round() as usize).max(1);
    let n_train = n.saturating_sub(n_val + n_test);
    let pick = |r: &[usize]| r.iter().map(|i| samples[*i]).collect::<Vec<_>>();
    (pick(&idx[..n_train]), pick(&idx[n_train..n_train + n_val]), pick(&idx[n_train + n_val..]))
}

/// Gradient descent with early stopping on validation MSE; returns the
/// weights of the best validation epoch.
pub fn train(net: &Mlp, data: &Dataset, cfg: &TrainConfig) -> Result<(Mlp, TrainReport), BpnnError> {
    cfg.validate()?;
    net.check_shapes()?;
    if data.samples.len() < MIN_DATASET {
        return Err(BpnnError::DatasetTooSmall { needed: MIN_DATASET, got: data.samples.len() });
    }
    let (train_set, val_set, test_set) = split_dataset(&data.samples, cfg.split, cfg.seed);
    let (net, mut report) = fit(net, &train_set, &val_set, cfg);
    report.test_errors = errors(&net, &test_set);
    Ok((net, report))
}

const MAX_DAMPING: f64 = 1e10;

/// One accepted Levenberg-Marquardt update; false once no damping level
/// lowers the training error.
fn lm_step(net: &mut Mlp, train_set: &[Sample], damping: &mut f64) -> bool {
    let (r, jac) = net.residual_jacobian(train_set);
    let sse = r.norm_squared();
    let jtj = jac.transpose() * &jac;
    let jtr = jac.transpose() * &r;
    let p = net.parameters();
    while *damping <= MAX_DAMPING {
        let mut a = jtj.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += *damping;
        }
        if let Some(ch) = a.cholesky() {
            let step = ch.solve(&jtr);
            let mut trial = net.clone();
            trial.set_parameters(&(&p - step));
            let trial_sse = trial.sse(train_set);
            if trial_sse < sse {
                *net = trial;
                *damping = (*damping * 0.1).max(1e-12);
                return true;
            }
        }
        *damping *= 10.0;
    }
    false
}

/// Per-coordinate affine map `x -> (x - lo) * gain - 1` onto [-1, 1].
#[derive(Debug, Clone, PartialEq)]
struct RangeMap {
    lo: Vec<f64>,
    gain: Vec<f64>,
}

impl RangeMap {
    fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for r in rows {
            for k in 0..dim {
                lo[k] = lo[k].min(r[k]);
                hi[k] = hi[k].max(r[k]);
            }
        }
        // constant coordinates pass through shifted to -1
        let gain = lo.iter().zip(&hi).map(|(l, h)| if h - l > 1e-12 { 2.0 / (h - l) } else { 1.0 }).collect();
        Self { lo, gain }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.lo).zip(&self.gain).map(|((x, l), g)| (x - l) * g - 1.0).collect()
    }
}

fn map_samples(samples: &[Sample], input: &RangeMap, output: &RangeMap) -> Vec<Sample> {
    samples
        .iter()
        .map(|s| {
            let r = input.apply(&s.readings);
            let t = output.apply(&s.target());
            Sample { readings: std::array::from_fn(|i| r[i]), d_min: t[0], index: t[1] }
        })
        .collect()
}

/// Rewrites a net trained on mapped data so it accepts and returns raw units.
fn fold_maps(net: &mut Mlp, input: &RangeMap, output: &RangeMap) {
    let gain_in = DVector::from_column_slice(&input.gain);
    let shift_in = DVector::from_iterator(input.lo.len(), input.lo.iter().zip(&input.gain).map(|(l, g)| l * g + 1.0));
    let b0 = &net.biases[0] - &net.weights[0] * shift_in;
    net.biases[0] = b0;
    for (mut col, g) in net.weights[0].column_iter_mut().zip(gain_in.iter()) {
        col *= *g;
    }
    let last = net.weights.len() - 1;
    for k in 0..output.lo.len() {
        let g = output.gain[k];
        let mut row = net.weights[last].row_mut(k);
        row /= g;
        net.biases[last][k] = (net.biases[last][k] + 1.0) / g + output.lo[k];
    }
}

/// Training loop on explicit splits; `test_errors` is left empty.
pub fn fit(net: &Mlp, train_set: &[Sample], val_set: &[Sample], cfg: &TrainConfig) -> (Mlp, TrainReport) {
    let maps = (cfg.rescale && !train_set.is_empty()).then(|| {
        let inputs: Vec<Vec<f64>> = train_set.iter().map(|s| s.readings.to_vec()).collect();
        let targets: Vec<Vec<f64>> = train_set.iter().map(|s| s.target().to_vec()).collect();
        (RangeMap::fit(&inputs), RangeMap::fit(&targets))
    });
    let (train_m, val_m) = match &maps {
        Some((i, o)) => (map_samples(train_set, i, o), map_samples(val_set, i, o)),
        None => (train_set.to_vec(), val_set.to_vec()),
    };
    let (train_set_raw, val_set_raw) = (train_set, val_set);
    let (train_set, val_set) = (&train_m[..], &val_m[..]);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut current = net.clone();
    let mut best = net.clone();
    let mut best_val = current.dataset_mse(val_set);
    let mut best_epoch = 0;
    let mut velocity = Gradients::zeros_like(net);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let batch = if cfg.batch_size == 0 { train_set.len().max(1) } else { cfg.batch_size };
    let mut train_history = Vec::new();
    let mut val_history = Vec::new();
    let mut epochs_run = 0;
    let mut damping = cfg.damping;
    for epoch in 1..=cfg.max_epochs {
        train_history.push(current.dataset_mse(train_set));
        match cfg.optimizer {
            Optimizer::GradientDescent => {
                if batch < train_set.len() {
                    order.shuffle(&mut rng);
                }
                for chunk in order.chunks(batch) {
                    let refs: Vec<&Sample> = chunk.iter().map(|i| &train_set[*i]).collect();
                    let g = current.batch_gradient(&refs);
                    velocity = velocity.scaled(cfg.momentum);
                    velocity.add_scaled(&g, 1.0);
                    current.apply(&velocity, cfg.learning_rate);
                }
            }
            Optimizer::LevenbergMarquardt => {
                if !lm_step(&mut current, train_set, &mut damping) {
                    train_history.pop();
                    break;
                }
            }
        }
        epochs_run = epoch;
        let val = current.dataset_mse(val_set);
        val_history.push(val);
        if val < best_val {
            best_val = val;
            best = current.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    if let Some((i, o)) = &maps {
        fold_maps(&mut best, i, o);
    }
    let report = TrainReport {
        final_train_mse: best.dataset_mse(train_set_raw),
        final_val_mse: best.dataset_mse(val_set_raw),
        test_errors: Vec::new(),
        epochs_run,
        best_epoch,
        train_history,
        val_history,
    };
    (best, report)
}
