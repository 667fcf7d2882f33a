//! Transition counting, Laplace-smoothed MLE, the first- vs second-order
//! AIC test, and the end-to-end fit pipeline.
//!
//! Counting follows the censoring rule: every observed transient transition
//! counts once, completed traces add one absorber count at their final
//! state, censored traces add none. The smoothed estimate is
//! `Q̂_ij = (c_ij + α) / (c_i + α(m + 2))`, with the same denominator
//! normalizing the success and failure exits, so rows conserve mass exactly.
//!
//! The order test compares the maximized log-likelihood of a first-order
//! kernel against a second-order one (contexts `(prev, cur)`, with each
//! trace's first transition conditioned on `cur` alone), both with
//! unsmoothed MLE and `0·log 0 = 0`. Parameter counts use observed contexts
//! only, `(m + 1)` free parameters each, and
//! `Δ_AIC = -2(ℓ₂ - ℓ₁) + 2(k₂ - k₁)`; the first-order model is preferred
//! iff `Δ_AIC > 0`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{AgentMarkovChain, ChainError};
use crate::cluster::{self, Clustering, ClusterError};
use crate::featurize::{self, FeatureSpace, FeaturizeError};
use crate::numerics::Matrix;
use crate::trace::{Outcome, TraceCorpus};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("labels misaligned with corpus: {0}")]
    Alignment(String),
    #[error("corpus has no transitions with a two-step history")]
    NoTransitions,
    #[error("corpus has no completed (non-censored) traces")]
    NoCompletedTraces,
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Raw transition and exit counts over `m` labeled states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub m: usize,
    /// row-major `m x m` transient transition counts
    pub transient: Vec<u64>,
    pub success: Vec<u64>,
    pub failure: Vec<u64>,
    /// histogram of first-step states
    pub initial: Vec<u64>,
}

impl CountTable {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            transient: vec![0; m * m],
            success: vec![0; m],
            failure: vec![0; m],
            initial: vec![0; m],
        }
    }

    pub fn transient_count(&self, i: usize, j: usize) -> u64 {
        self.transient[i * self.m + j]
    }

    /// `c_i = Σ_j c_ij + c_{i,⊕} + c_{i,⊖}`.
    pub fn row_total(&self, i: usize) -> u64 {
        self.transient[i * self.m..(i + 1) * self.m]
            .iter()
            .sum::<u64>()
            + self.success[i]
            + self.failure[i]
    }
}

/// Count transitions under cluster labels aligned to the corpus.
pub fn count_transitions(
    corpus: &TraceCorpus,
    labels: &[Vec<usize>],
    m: usize,
) -> Result<CountTable, EstimateError> {
    if labels.len() != corpus.len() {
        return Err(EstimateError::Alignment(format!(
            "{} label rows for {} traces",
            labels.len(),
            corpus.len()
        )));
    }
    let mut counts = CountTable::zeros(m);
    for (trace, states) in corpus.traces.iter().zip(labels) {
        if states.len() != trace.len() {
            return Err(EstimateError::Alignment(format!(
                "trace {} has {} steps but {} labels",
                trace.trace_id,
                trace.len(),
                states.len()
            )));
        }
        if let Some(&bad) = states.iter().find(|&&s| s >= m) {
            return Err(EstimateError::Alignment(format!(
                "label {bad} out of range for m = {m}"
            )));
        }
        counts.initial[states[0]] += 1;
        for w in states.windows(2) {
            counts.transient[w[0] * m + w[1]] += 1;
        }
        let last = *states.last().expect("steps are non-empty");
        match trace.outcome {
            Outcome::Success => counts.success[last] += 1,
            Outcome::Failure => counts.failure[last] += 1,
            Outcome::Censored => {}
        }
    }
    Ok(counts)
}

/// How the fitted initial distribution is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialMode {
    /// Normalized first-step histogram.
    #[default]
    Empirical,
    /// Degenerate at the most frequent first-step state.
    Degenerate,
}

/// Laplace-smoothed MLE: `(c + α) / (c_i + α(m + 2))` for every outgoing
/// probability; initial distribution from the first-step histogram.
pub fn smoothed_mle(
    counts: &CountTable,
    alpha: f64,
    labels: Vec<String>,
    initial_mode: InitialMode,
) -> Result<AgentMarkovChain, EstimateError> {
    assert!(alpha > 0.0, "smoothing constant must be positive");
    let m = counts.m;
    let mut q = vec![0.0; m * m];
    let mut r_plus = vec![0.0; m];
    let mut r_minus = vec![0.0; m];
    for i in 0..m {
        let denom = counts.row_total(i) as f64 + alpha * (m as f64 + 2.0);
        for j in 0..m {
            q[i * m + j] = (counts.transient[i * m + j] as f64 + alpha) / denom;
        }
        r_plus[i] = (counts.success[i] as f64 + alpha) / denom;
        r_minus[i] = (counts.failure[i] as f64 + alpha) / denom;
    }
    let total_initial: u64 = counts.initial.iter().sum();
    let initial = match initial_mode {
        InitialMode::Empirical => {
            if total_initial == 0 {
                vec![1.0 / m as f64; m]
            } else {
                counts
                    .initial
                    .iter()
                    .map(|&c| c as f64 / total_initial as f64)
                    .collect()
            }
        }
        InitialMode::Degenerate => {
            let s0 = counts
                .initial
                .iter()
                .enumerate()
                .max_by_key(|&(_, &c)| c)
                .map(|(i, _)| i)
                .unwrap_or(0);
            let mut v = vec![0.0; m];
            v[s0] = 1.0;
            v
        }
    };
    let q = Matrix::new(m, m, q).map_err(ChainError::from)?;
    Ok(AgentMarkovChain::new(labels, q, r_plus, r_minus, initial)?)
}

/// First- vs second-order Markov AIC comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderTest {
    pub delta_aic: f64,
    pub ell1: f64,
    pub ell2: f64,
    pub k1: usize,
    pub k2: usize,
}

impl OrderTest {
    pub fn first_order_ok(&self) -> bool {
        self.delta_aic > 0.0
    }
}

/// Encoded outcome alphabet: `0..m` transient states, `m` success,
/// `m + 1` failure; censored traces emit no terminal token.
fn outcome_token(m: usize, outcome: Outcome) -> Option<usize> {
    match outcome {
        Outcome::Success => Some(m),
        Outcome::Failure => Some(m + 1),
        Outcome::Censored => None,
    }
}

pub fn aic_order_test(
    corpus: &TraceCorpus,
    labels: &[Vec<usize>],
    m: usize,
) -> Result<OrderTest, EstimateError> {
    if labels.len() != corpus.len() {
        return Err(EstimateError::Alignment(format!(
            "{} label rows for {} traces",
            labels.len(),
            corpus.len()
        )));
    }
    let width = m + 2;
    // first-order contexts: current state; second-order: (prev, cur) with
    // prev = None for each trace's first transition
    let mut ctx1: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    let mut ctx2: BTreeMap<(Option<usize>, usize), Vec<u64>> = BTreeMap::new();
    let mut any_two_step = false;
    for (trace, states) in corpus.traces.iter().zip(labels) {
        if states.len() != trace.len() {
            return Err(EstimateError::Alignment(format!(
                "trace {} has {} steps but {} labels",
                trace.trace_id,
                trace.len(),
                states.len()
            )));
        }
        let mut record = |prev: Option<usize>, cur: usize, next: usize| {
            ctx1.entry(cur).or_insert_with(|| vec![0; width])[next] += 1;
            ctx2.entry((prev, cur)).or_insert_with(|| vec![0; width])[next] += 1;
            if prev.is_some() {
                any_two_step = true;
            }
        };
        for t in 0..states.len().saturating_sub(1) {
            let prev = if t == 0 { None } else { Some(states[t - 1]) };
            record(prev, states[t], states[t + 1]);
        }
        if let Some(tok) = outcome_token(m, trace.outcome) {
            let last_idx = states.len() - 1;
            let prev = if last_idx == 0 { None } else { Some(states[last_idx - 1]) };
            record(prev, states[last_idx], tok);
        }
    }
    if ctx1.is_empty() || !any_two_step {
        return Err(EstimateError::NoTransitions);
    }
    let log_lik = |table: &Vec<u64>| -> f64 {
        let total: u64 = table.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let total = total as f64;
        table
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let c = c as f64;
                c * (c / total).ln()
            })
            .sum()
    };
    let ell1: f64 = ctx1.values().map(log_lik).sum();
    let ell2: f64 = ctx2.values().map(log_lik).sum();
    let k1 = ctx1.len() * (m + 1);
    let k2 = ctx2.len() * (m + 1);
    let delta_aic = -2.0 * (ell2 - ell1) + 2.0 * (k2 as f64 - k1 as f64);
    Ok(OrderTest { delta_aic, ell1, ell2, k1, k2 })
}

/// Fit configuration: cluster range and smoothing constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub alpha: f64,
    pub initial_mode: InitialMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { k_min: 2, k_max: 12, alpha: 1.0, initial_mode: InitialMode::Empirical }
    }
}

/// A fitted chain with everything needed to audit and reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedChain {
    pub chain: AgentMarkovChain,
    pub counts: CountTable,
    pub clustering: Clustering,
    pub space: FeatureSpace,
    pub alpha: f64,
    pub order_verdict: OrderTest,
    pub censored_fraction: f64,
    pub config: FitConfig,
}

impl FittedChain {
    pub fn m(&self) -> usize {
        self.chain.m()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("fitted chain serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// End-to-end pipeline: featurize, cluster with silhouette-selected state
/// count, count, smooth, and order-test. Deterministic in the corpus and
/// config.
pub fn fit(corpus: &TraceCorpus, config: &FitConfig) -> Result<FittedChain, EstimateError> {
    if !corpus.traces.iter().any(|t| t.outcome != Outcome::Censored) {
        if corpus.is_empty() {
            return Err(EstimateError::Featurize(FeaturizeError::EmptyCorpus));
        }
        return Err(EstimateError::NoCompletedTraces);
    }
    let space = featurize::build_feature_space(corpus)?;
    let features = featurize::featurize_corpus(corpus, &space);
    let n_points = features.n_steps();
    let k_max = config.k_max.min(n_points);
    let k_min = config.k_min.min(k_max);
    let clustering = if n_points == 1 || k_min < 2 {
        // tiny corpus: a single cluster, no silhouette to speak of
        cluster::ward_cluster(&features, 1)?
    } else {
        cluster::select_m(&features, k_min, k_max)?
    };
    let m = clustering.k;
    let counts = count_transitions(corpus, &clustering.assignments, m)?;
    let labels = cluster_labels(corpus, &clustering, m);
    let chain = smoothed_mle(&counts, config.alpha, labels, config.initial_mode)?;
    // degenerate corpora (no two-step history) leave the order untestable;
    // record a zero rather than failing the whole fit
    let order_verdict = match aic_order_test(corpus, &clustering.assignments, m) {
        Ok(v) => v,
        Err(EstimateError::NoTransitions) => {
            OrderTest { delta_aic: 0.0, ell1: 0.0, ell2: 0.0, k1: 0, k2: 0 }
        }
        Err(e) => return Err(e),
    };
    Ok(FittedChain {
        chain,
        counts,
        clustering: clustering.clone(),
        space,
        alpha: config.alpha,
        order_verdict,
        censored_fraction: corpus.censored_fraction(),
        config: *config,
    })
}

/// Human-readable state names from each cluster's dominant tool token,
/// deduplicated with an index suffix.
fn cluster_labels(corpus: &TraceCorpus, clustering: &Clustering, m: usize) -> Vec<String> {
    let mut votes: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); m];
    for (trace, states) in corpus.traces.iter().zip(&clustering.assignments) {
        for (step, &s) in trace.steps.iter().zip(states) {
            *votes[s].entry(step.tool_type.as_str()).or_insert(0) += 1;
        }
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    votes
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let base = v
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(name, _)| (*name).to_string())
                .unwrap_or_else(|| format!("state_{i}"));
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}_{n}")
            }
        })
        .collect()
}
