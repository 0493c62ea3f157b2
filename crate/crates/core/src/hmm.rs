//! Discrete-observation hidden Markov models.
//!
//! A model is `(A, B, pi)`: an `N x N` row-stochastic transition matrix, an
//! `N x M` row-stochastic emission matrix and an initial distribution.
//! Likelihoods are computed with the scaled forward recursion and reported in
//! natural-log units.
//!
//! Training is multi-sequence Baum-Welch. The M-step maximizes the expected
//! complete-data log-likelihood subject to every structurally allowed entry
//! staying at or above a floor `eps`, i.e. `p_k = max(eps, c_k / lambda)` with
//! `lambda` chosen so the row sums to one. Because this is the exact
//! constrained maximizer, each iteration is a generalized EM step and the
//! training log-likelihood is non-decreasing.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantize::{Symbol, SymbolSequence};

/// Furthest forward jump allowed by the left-right topology.
pub const LEFT_RIGHT_SPAN: usize = 2;
pub const DEFAULT_FLOOR_EPS: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_N_STATES: usize = 5;

const STOCHASTIC_TOLERANCE: f64 = 1e-9;
const INIT_PERTURBATION: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum HmmError {
    #[error("symbol at position {0} is outside the model alphabet")]
    SymbolOutOfRange(usize),
    #[error("empty observation sequence")]
    EmptyObservation,
    #[error("no training sequences")]
    EmptyTraining,
    #[error("training sequence {0} has fewer than 2 symbols")]
    SequenceTooShort(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Ergodic,
    /// Bakis chain: state `i` may stay or move forward by at most
    /// [`LEFT_RIGHT_SPAN`] states; the chain starts in state 0.
    #[default]
    LeftRight,
}

impl Topology {
    pub fn allows(self, from: usize, to: usize) -> bool {
        match self {
            Topology::Ergodic => true,
            Topology::LeftRight => to >= from && to <= from + LEFT_RIGHT_SPAN,
        }
    }

    pub fn allows_start(self, state: usize) -> bool {
        match self {
            Topology::Ergodic => true,
            Topology::LeftRight => state == 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Ergodic => "ergodic",
            Topology::LeftRight => "left_right",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ergodic" => Ok(Topology::Ergodic),
            "left_right" => Ok(Topology::LeftRight),
            other => Err(format!("unknown topology `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLikelihood {
    pub total: f64,
    pub per_symbol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    n_states: usize,
    n_symbols: usize,
    topology: Topology,
    transition: Vec<f64>,
    emission: Vec<f64>,
    initial: Vec<f64>,
    floor_eps: f64,
}

fn row_sum_ok(row: &[f64]) -> bool {
    (row.iter().sum::<f64>() - 1.0).abs() <= STOCHASTIC_TOLERANCE
}

impl HmmModel {
    /// Builds a model from row-major matrices, checking shapes, stochasticity
    /// and the topology mask.
    pub fn new(
        n_states: usize,
        n_symbols: usize,
        topology: Topology,
        initial: Vec<f64>,
        transition: Vec<f64>,
        emission: Vec<f64>,
    ) -> Result<Self, HmmError> {
        let invalid = |msg: String| Err(HmmError::InvalidModel(msg));
        if n_states == 0 || n_symbols == 0 {
            return invalid("need at least one state and one symbol".into());
        }
        if initial.len() != n_states
            || transition.len() != n_states * n_states
            || emission.len() != n_states * n_symbols
        {
            return invalid("matrix shapes do not match n_states / n_symbols".into());
        }
        let all = initial.iter().chain(&transition).chain(&emission);
        if all.clone().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return invalid("probabilities must be finite and non-negative".into());
        }
        if !row_sum_ok(&initial) {
            return invalid("initial distribution does not sum to 1".into());
        }
        for i in 0..n_states {
            if !row_sum_ok(&transition[i * n_states..(i + 1) * n_states]) {
                return invalid(format!("transition row {i} does not sum to 1"));
            }
            if !row_sum_ok(&emission[i * n_symbols..(i + 1) * n_symbols]) {
                return invalid(format!("emission row {i} does not sum to 1"));
            }
            for j in 0..n_states {
                if !topology.allows(i, j) && transition[i * n_states + j] != 0.0 {
                    return invalid(format!("transition {i}->{j} forbidden by {topology}"));
                }
            }
            if !topology.allows_start(i) && initial[i] != 0.0 {
                return invalid(format!("state {i} cannot start a {topology} chain"));
            }
        }
        Ok(Self {
            n_states,
            n_symbols,
            topology,
            transition,
            emission,
            initial,
            floor_eps: 0.0,
        })
    }

    pub fn with_floor_eps(mut self, eps: f64) -> Self {
        self.floor_eps = eps;
        self
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn floor_eps(&self) -> f64 {
        self.floor_eps
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Row-major transition matrix.
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    /// Row-major emission matrix.
    pub fn emission(&self) -> &[f64] {
        &self.emission
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.n_states + j]
    }

    /// Emission probability of zero-based symbol column `k` in state `i`.
    #[inline]
    pub fn b(&self, i: usize, k: usize) -> f64 {
        self.emission[i * self.n_symbols + k]
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        self.transition.chunks(self.n_states).map(<[f64]>::to_vec).collect()
    }

    pub fn emission_rows(&self) -> Vec<Vec<f64>> {
        self.emission.chunks(self.n_symbols).map(<[f64]>::to_vec).collect()
    }

    fn columns(&self, obs: &[Symbol]) -> Result<Vec<usize>, HmmError> {
        if obs.is_empty() {
            return Err(HmmError::EmptyObservation);
        }
        obs.iter()
            .enumerate()
            .map(|(t, s)| {
                let k = s.index();
                if k < self.n_symbols {
                    Ok(k)
                } else {
                    Err(HmmError::SymbolOutOfRange(t))
                }
            })
            .collect()
    }

    /// Log-likelihood of an observation sequence.
    pub fn log_likelihood(&self, obs: &[Symbol]) -> Result<LogLikelihood, HmmError> {
        let cols = self.columns(obs)?;
        let total = self.scaled_forward(&cols).log_likelihood();
        Ok(LogLikelihood {
            total,
            per_symbol: total / obs.len() as f64,
        })
    }

    /// Forward pass with per-step normalization. `alpha[t]` sums to one and
    /// `scale[t]` holds the normalizer; the log-likelihood is `sum ln scale`.
    fn scaled_forward(&self, cols: &[usize]) -> Scaled {
        let n = self.n_states;
        let t_len = cols.len();
        let mut alpha = vec![0.0; t_len * n];
        let mut scale = vec![0.0; t_len];
        for i in 0..n {
            alpha[i] = self.initial[i] * self.b(i, cols[0]);
        }
        scale[0] = normalize_in_place(&mut alpha[..n]);
        for t in 1..t_len {
            let (done, rest) = alpha.split_at_mut(t * n);
            let prev = &done[(t - 1) * n..];
            let cur = &mut rest[..n];
            for j in 0..n {
                let mut acc = 0.0;
                for (i, &p) in prev.iter().enumerate() {
                    acc += p * self.transition[i * n + j];
                }
                cur[j] = acc * self.b(j, cols[t]);
            }
            scale[t] = normalize_in_place(cur);
        }
        Scaled { alpha, scale }
    }

    /// Backward pass sharing the forward normalizers.
    fn scaled_backward(&self, cols: &[usize], scale: &[f64]) -> Vec<f64> {
        let n = self.n_states;
        let t_len = cols.len();
        let mut beta = vec![0.0; t_len * n];
        for b in &mut beta[(t_len - 1) * n..] {
            *b = 1.0;
        }
        for t in (0..t_len - 1).rev() {
            let (head, tail) = beta.split_at_mut((t + 1) * n);
            let next = &tail[..n];
            let cur = &mut head[t * n..];
            let c = scale[t + 1];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += self.transition[i * n + j] * self.b(j, cols[t + 1]) * next[j];
                }
                cur[i] = if c > 0.0 { acc / c } else { 0.0 };
            }
        }
        beta
    }
}

struct Scaled {
    alpha: Vec<f64>,
    scale: Vec<f64>,
}

impl Scaled {
    fn log_likelihood(&self) -> f64 {
        self.scale.iter().map(|c| c.ln()).sum()
    }
}

fn normalize_in_place(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    s
}

/// Log-likelihood of `obs` under `model`.
pub fn forward(model: &HmmModel, obs: &SymbolSequence) -> Result<LogLikelihood, HmmError> {
    model.log_likelihood(obs.symbols())
}

fn perturbed_row(rng: &mut ChaCha8Rng, allowed: impl Iterator<Item = bool>) -> Vec<f64> {
    let mut row: Vec<f64> = allowed
        .map(|ok| {
            if ok {
                1.0 + INIT_PERTURBATION * rng.random_range(-1.0..=1.0)
            } else {
                0.0
            }
        })
        .collect();
    normalize_in_place(&mut row);
    row
}

/// Near-uniform starting point for training. Each allowed entry is
/// `(1 + u) / k` with `|u| <= 0.1`, renormalized.
pub fn init_model(n_states: usize, n_symbols: usize, topology: Topology, seed: u64) -> HmmModel {
    assert!(n_states >= 1 && n_symbols >= 1, "model needs states and symbols");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = match topology {
        Topology::LeftRight => {
            let mut pi = vec![0.0; n_states];
            pi[0] = 1.0;
            pi
        }
        Topology::Ergodic => perturbed_row(&mut rng, (0..n_states).map(|_| true)),
    };
    let mut transition = Vec::with_capacity(n_states * n_states);
    for i in 0..n_states {
        transition.extend(perturbed_row(&mut rng, (0..n_states).map(|j| topology.allows(i, j))));
    }
    let mut emission = Vec::with_capacity(n_states * n_symbols);
    for _ in 0..n_states {
        emission.extend(perturbed_row(&mut rng, (0..n_symbols).map(|_| true)));
    }
    HmmModel {
        n_states,
        n_symbols,
        topology,
        transition,
        emission,
        initial,
        floor_eps: 0.0,
    }
}

/// Maximizes `sum_k counts[k] ln p[k]` over the simplex restricted to
/// `allowed` entries with `p[k] >= eps`. Returns `None` when there is no
/// evidence (all counts zero), in which case the caller keeps its old row.
pub fn floored_mle(counts: &[f64], allowed: &[bool], eps: f64) -> Option<Vec<f64>> {
    let k = allowed.iter().filter(|&&a| a).count();
    let total: f64 = counts
        .iter()
        .zip(allowed)
        .filter(|(_, &a)| a)
        .map(|(c, _)| *c)
        .sum();
    if k == 0 || !(total > 0.0) {
        return None;
    }
    if eps * k as f64 >= 1.0 {
        return Some(
            allowed
                .iter()
                .map(|&a| if a { 1.0 / k as f64 } else { 0.0 })
                .collect(),
        );
    }
    let mut fixed = vec![false; counts.len()];
    loop {
        let n_fixed = fixed.iter().filter(|&&f| f).count();
        let free_total: f64 = counts
            .iter()
            .enumerate()
            .filter(|&(i, _)| allowed[i] && !fixed[i])
            .map(|(_, c)| *c)
            .sum();
        let mass = 1.0 - n_fixed as f64 * eps;
        let mut changed = false;
        for i in 0..counts.len() {
            if allowed[i] && !fixed[i] && counts[i] / free_total * mass < eps {
                fixed[i] = true;
                changed = true;
            }
        }
        if !changed {
            return Some(
                (0..counts.len())
                    .map(|i| {
                        if !allowed[i] {
                            0.0
                        } else if fixed[i] {
                            eps
                        } else {
                            counts[i] / free_total * mass
                        }
                    })
                    .collect(),
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaumWelchConfig {
    pub n_states: usize,
    pub n_symbols: usize,
    pub topology: Topology,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop when the relative log-likelihood improvement falls below this.
    pub tolerance: f64,
    pub floor_eps: f64,
}

impl Default for BaumWelchConfig {
    fn default() -> Self {
        Self {
            n_states: DEFAULT_N_STATES,
            n_symbols: crate::quantize::N_SYMBOLS,
            topology: Topology::LeftRight,
            seed: 0,
            max_iter: DEFAULT_MAX_ITER,
            tolerance: DEFAULT_TOLERANCE,
            floor_eps: DEFAULT_FLOOR_EPS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub model: HmmModel,
    /// Total training log-likelihood of each successive model, starting with
    /// the initial one. The last entry belongs to the returned model.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Expected sufficient statistics of one E-step.
struct Expectations {
    initial: Vec<f64>,
    transition: Vec<f64>,
    emission: Vec<f64>,
    log_likelihood: f64,
}

fn expectations(model: &HmmModel, sequences: &[Vec<usize>]) -> Expectations {
    let (n, m) = (model.n_states, model.n_symbols);
    let mut acc = Expectations {
        initial: vec![0.0; n],
        transition: vec![0.0; n * n],
        emission: vec![0.0; n * m],
        log_likelihood: 0.0,
    };
    let mut gamma = vec![0.0; n];
    let mut xi = vec![0.0; n * n];
    for cols in sequences {
        let fwd = model.scaled_forward(cols);
        acc.log_likelihood += fwd.log_likelihood();
        let beta = model.scaled_backward(cols, &fwd.scale);
        for t in 0..cols.len() {
            let a_t = &fwd.alpha[t * n..(t + 1) * n];
            let b_t = &beta[t * n..(t + 1) * n];
            for i in 0..n {
                gamma[i] = a_t[i] * b_t[i];
            }
            if normalize_in_place(&mut gamma) > 0.0 {
                if t == 0 {
                    for i in 0..n {
                        acc.initial[i] += gamma[i];
                    }
                }
                for i in 0..n {
                    acc.emission[i * m + cols[t]] += gamma[i];
                }
            }
            if t + 1 < cols.len() {
                let b_next = &beta[(t + 1) * n..(t + 2) * n];
                let k = cols[t + 1];
                for i in 0..n {
                    for j in 0..n {
                        xi[i * n + j] = a_t[i] * model.a(i, j) * model.b(j, k) * b_next[j];
                    }
                }
                if normalize_in_place(&mut xi) > 0.0 {
                    for (a, x) in acc.transition.iter_mut().zip(&xi) {
                        *a += x;
                    }
                }
            }
        }
    }
    acc
}

fn maximize(model: &HmmModel, e: &Expectations, eps: f64) -> HmmModel {
    let (n, m) = (model.n_states, model.n_symbols);
    let mut next = model.clone();
    next.floor_eps = eps;

    let start_allowed: Vec<bool> = (0..n).map(|i| model.topology.allows_start(i)).collect();
    if let Some(pi) = floored_mle(&e.initial, &start_allowed, eps) {
        next.initial = pi;
    }
    for i in 0..n {
        let allowed: Vec<bool> = (0..n).map(|j| model.topology.allows(i, j)).collect();
        if let Some(row) = floored_mle(&e.transition[i * n..(i + 1) * n], &allowed, eps) {
            next.transition[i * n..(i + 1) * n].copy_from_slice(&row);
        }
        if let Some(row) = floored_mle(&e.emission[i * m..(i + 1) * m], &vec![true; m], eps) {
            next.emission[i * m..(i + 1) * m].copy_from_slice(&row);
        }
    }
    next
}

fn training_columns(training: &[SymbolSequence], n_symbols: usize) -> Result<Vec<Vec<usize>>, HmmError> {
    if training.is_empty() {
        return Err(HmmError::EmptyTraining);
    }
    training
        .iter()
        .enumerate()
        .map(|(idx, seq)| {
            if seq.len() < 2 {
                return Err(HmmError::SequenceTooShort(idx));
            }
            seq.symbols()
                .iter()
                .enumerate()
                .map(|(t, s)| {
                    if s.index() < n_symbols {
                        Ok(s.index())
                    } else {
                        Err(HmmError::SymbolOutOfRange(t))
                    }
                })
                .collect()
        })
        .collect()
}

/// Trains from [`init_model`] with the given configuration.
pub fn fit(training: &[SymbolSequence], config: &BaumWelchConfig) -> Result<Fit, HmmError> {
    let start = init_model(config.n_states, config.n_symbols, config.topology, config.seed);
    fit_from(start, training, config, |_, _, _| {})
}

/// Runs Baum-Welch from `start`. `observer` sees every model whose
/// likelihood is evaluated, along with its iteration index and likelihood.
pub fn fit_from(
    start: HmmModel,
    training: &[SymbolSequence],
    config: &BaumWelchConfig,
    mut observer: impl FnMut(usize, &HmmModel, f64),
) -> Result<Fit, HmmError> {
    let sequences = training_columns(training, start.n_symbols)?;
    let mut model = start;
    let mut log_likelihoods = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let e = expectations(&model, &sequences);
        observer(iterations, &model, e.log_likelihood);
        if let Some(&prev) = log_likelihoods.last() {
            let gain = (e.log_likelihood - prev) / f64::abs(prev).max(f64::MIN_POSITIVE);
            if gain.abs() < config.tolerance {
                converged = true;
            }
        }
        log_likelihoods.push(e.log_likelihood);
        if converged || iterations >= config.max_iter {
            break;
        }
        model = maximize(&model, &e, config.floor_eps);
        iterations += 1;
    }
    Ok(Fit {
        model,
        log_likelihoods,
        iterations,
        converged,
    })
}

/// Multi-sequence Baum-Welch with the default iteration budget, tolerance
/// and emission floor.
pub fn baum_welch(
    training: &[SymbolSequence],
    n_states: usize,
    topology: Topology,
    seed: u64,
) -> Result<HmmModel, HmmError> {
    let config = BaumWelchConfig {
        n_states,
        topology,
        seed,
        ..BaumWelchConfig::default()
    };
    Ok(fit(training, &config)?.model)
}
