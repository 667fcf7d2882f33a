//! Credible intervals for every fitted probability and their propagation
//! to derived reliability quantities.
//!
//! Two methods: the closed-form row-wise Dirichlet posterior (Laplace
//! smoothing is the posterior mean under a symmetric Dirichlet(α) prior,
//! so each entry's marginal is `Beta(c + α, c_i + α(m+2) - c - α)` and
//! equal-tailed intervals are Beta quantiles), and a trace-level
//! non-parametric bootstrap that resamples traces with replacement and
//! refits. Downstream quantities inherit intervals by sampling chains from
//! the posterior (or reusing bootstrap replicates) and evaluating the query
//! on each draw.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{self, AgentMarkovChain, ChainError};
use crate::cluster;
use crate::estimate::{
    count_transitions, smoothed_mle, CountTable, EstimateError, FittedChain,
};
use crate::featurize;
use crate::numerics::{beta_quantile, NumericsError};
use crate::trace::TraceCorpus;

#[derive(Debug, Error)]
pub enum UncertaintyError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("too many invalid draws: {dropped} of {total} failed chain validation")]
    TooManyInvalidDraws { dropped: usize, total: usize },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Column of a row's outgoing distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryCol {
    Transient(usize),
    Success,
    Failure,
}

impl std::fmt::Display for EntryCol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntryCol::Transient(j) => write!(f, "q{j}"),
            EntryCol::Success => write!(f, "success"),
            EntryCol::Failure => write!(f, "failure"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleEntry {
    pub row: usize,
    pub col: EntryCol,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CredibleEntry {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum IntervalMethod {
    Posterior,
    Bootstrap { b: usize, fast: bool, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CredibleTable {
    pub entries: Vec<CredibleEntry>,
    pub method: IntervalMethod,
    pub level: f64,
}

impl CredibleTable {
    pub fn get(&self, row: usize, col: EntryCol) -> Option<&CredibleEntry> {
        self.entries.iter().find(|e| e.row == row && e.col == col)
    }

    pub fn median_width(&self) -> f64 {
        let mut widths: Vec<f64> = self.entries.iter().map(CredibleEntry::width).collect();
        widths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if widths.is_empty() {
            return 0.0;
        }
        let mid = widths.len() / 2;
        if widths.len() % 2 == 1 {
            widths[mid]
        } else {
            0.5 * (widths[mid - 1] + widths[mid])
        }
    }

    /// Median width over the transient-transition entries only.
    pub fn median_width_transient(&self) -> f64 {
        let mut widths: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| matches!(e.col, EntryCol::Transient(_)))
            .map(CredibleEntry::width)
            .collect();
        widths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if widths.is_empty() {
            return 0.0;
        }
        let mid = widths.len() / 2;
        if widths.len() % 2 == 1 {
            widths[mid]
        } else {
            0.5 * (widths[mid - 1] + widths[mid])
        }
    }
}

fn check_level(level: f64) -> Result<(), UncertaintyError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(UncertaintyError::DomainError(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// Equal-tailed Beta-quantile intervals for every entry of the smoothed
/// row distributions.
pub fn posterior_intervals(
    counts: &CountTable,
    alpha: f64,
    level: f64,
) -> Result<CredibleTable, UncertaintyError> {
    check_level(level)?;
    if !(alpha > 0.0) {
        return Err(UncertaintyError::DomainError(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let m = counts.m;
    let lo_p = (1.0 - level) / 2.0;
    let hi_p = 1.0 - lo_p;
    let mut entries = Vec::with_capacity(m * (m + 2));
    for i in 0..m {
        let concentration_total = counts.row_total(i) as f64 + alpha * (m as f64 + 2.0);
        let mut push = |col: EntryCol, c: u64| -> Result<(), UncertaintyError> {
            let a = c as f64 + alpha;
            let b = concentration_total - a;
            entries.push(CredibleEntry {
                row: i,
                col,
                point: a / concentration_total,
                lower: beta_quantile(a, b, lo_p)?,
                upper: beta_quantile(a, b, hi_p)?,
            });
            Ok(())
        };
        for j in 0..m {
            push(EntryCol::Transient(j), counts.transient_count(i, j))?;
        }
        push(EntryCol::Success, counts.success[i])?;
        push(EntryCol::Failure, counts.failure[i])?;
    }
    Ok(CredibleTable { entries, method: IntervalMethod::Posterior, level })
}

/// Refit chains on `b` trace resamples. Fast mode relabels steps by
/// nearest fitted centroid; slow mode re-runs clustering per replicate and
/// aligns replicate clusters to the fitted centroids by greedy matching
/// (extra clusters merge into their nearest fitted centroid).
pub fn bootstrap_replicates(
    corpus: &TraceCorpus,
    fitted: &FittedChain,
    b: usize,
    fast: bool,
    seed: u64,
) -> Result<Vec<AgentMarkovChain>, UncertaintyError> {
    if b < 2 {
        return Err(UncertaintyError::DomainError(format!(
            "bootstrap needs B >= 2, got {b}"
        )));
    }
    if corpus.is_empty() {
        return Err(UncertaintyError::DomainError("corpus is empty".into()));
    }
    let m = fitted.m();
    let features = featurize::featurize_corpus(corpus, &fitted.space);
    // fast path: one nearest-centroid labeling shared by all replicates
    let fast_labels: Vec<Vec<usize>> = if fast {
        features
            .traces
            .iter()
            .map(|steps| {
                steps
                    .iter()
                    .map(|v| nearest_centroid(v, &fitted.clustering.centroids))
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut chains = Vec::with_capacity(b);
    for rep in 0..b {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64 + 1);
        let indices: Vec<usize> = (0..corpus.len())
            .map(|_| rng.random_range(0..corpus.len()))
            .collect();
        let counts = if fast {
            let mut counts = CountTable::zeros(m);
            for &idx in &indices {
                let trace = &corpus.traces[idx];
                let states = &fast_labels[idx];
                counts.initial[states[0]] += 1;
                for w in states.windows(2) {
                    counts.transient[w[0] * m + w[1]] += 1;
                }
                let last = *states.last().expect("non-empty");
                match trace.outcome {
                    crate::trace::Outcome::Success => counts.success[last] += 1,
                    crate::trace::Outcome::Failure => counts.failure[last] += 1,
                    crate::trace::Outcome::Censored => {}
                }
            }
            counts
        } else {
            let resampled = TraceCorpus::new(
                indices.iter().map(|&i| corpus.traces[i].clone()).collect(),
                format!("bootstrap replicate {rep}"),
            );
            let rep_features = featurize::featurize_corpus(&resampled, &fitted.space);
            let k_max = fitted.config.k_max.min(rep_features.n_steps());
            let k_min = fitted.config.k_min.min(k_max).max(1);
            let clustering = if k_min < 2 {
                cluster::ward_cluster(&rep_features, 1)?
            } else {
                cluster::select_m(&rep_features, k_min, k_max)?
            };
            let mapping =
                align_clusters(&clustering.centroids, &fitted.clustering.centroids);
            let labels: Vec<Vec<usize>> = clustering
                .assignments
                .iter()
                .map(|states| states.iter().map(|&s| mapping[s]).collect())
                .collect();
            count_transitions(&resampled, &labels, m)?
        };
        let chain = smoothed_mle(
            &counts,
            fitted.alpha,
            fitted.chain.labels().to_vec(),
            fitted.config.initial_mode,
        )?;
        chains.push(chain);
    }
    Ok(chains)
}

fn nearest_centroid(v: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d: f64 = v.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Greedy distance matching of replicate centroids onto fitted centroids;
/// unmatched replicate clusters map to their nearest fitted centroid.
fn align_clusters(replicate: &[Vec<f64>], fitted: &[Vec<f64>]) -> Vec<usize> {
    let mut mapping = vec![usize::MAX; replicate.len()];
    let mut fitted_taken = vec![false; fitted.len()];
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (r, rc) in replicate.iter().enumerate() {
        for (f, fc) in fitted.iter().enumerate() {
            let d: f64 = rc.iter().zip(fc).map(|(a, b)| (a - b) * (a - b)).sum();
            pairs.push((d, r, f));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for &(_, r, f) in &pairs {
        if mapping[r] == usize::MAX && !fitted_taken[f] {
            mapping[r] = f;
            fitted_taken[f] = true;
        }
    }
    for (r, slot) in mapping.iter_mut().enumerate() {
        if *slot == usize::MAX {
            *slot = nearest_centroid(&replicate[r], fitted);
        }
    }
    mapping
}

/// Per-entry equal-tailed bootstrap intervals around the fitted point
/// estimates.
pub fn bootstrap_intervals(
    corpus: &TraceCorpus,
    fitted: &FittedChain,
    b: usize,
    fast: bool,
    seed: u64,
    level: f64,
) -> Result<CredibleTable, UncertaintyError> {
    check_level(level)?;
    let chains = bootstrap_replicates(corpus, fitted, b, fast, seed)?;
    let m = fitted.m();
    let lo_p = (1.0 - level) / 2.0;
    let hi_p = 1.0 - lo_p;
    let mut entries = Vec::with_capacity(m * (m + 2));
    let mut values = Vec::with_capacity(b);
    let mut collect = |extract: &dyn Fn(&AgentMarkovChain) -> f64,
                       row: usize,
                       col: EntryCol,
                       point: f64,
                       entries: &mut Vec<CredibleEntry>| {
        values.clear();
        values.extend(chains.iter().map(|c| extract(c)));
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        entries.push(CredibleEntry {
            row,
            col,
            point,
            lower: empirical_quantile(&values, lo_p),
            upper: empirical_quantile(&values, hi_p),
        });
    };
    for i in 0..m {
        for j in 0..m {
            collect(
                &|c: &AgentMarkovChain| c.q().get(i, j),
                i,
                EntryCol::Transient(j),
                fitted.chain.q().get(i, j),
                &mut entries,
            );
        }
        collect(
            &|c: &AgentMarkovChain| c.r_plus()[i],
            i,
            EntryCol::Success,
            fitted.chain.r_plus()[i],
            &mut entries,
        );
        collect(
            &|c: &AgentMarkovChain| c.r_minus()[i],
            i,
            EntryCol::Failure,
            fitted.chain.r_minus()[i],
            &mut entries,
        );
    }
    Ok(CredibleTable {
        entries,
        method: IntervalMethod::Bootstrap { b, fast, seed },
        level,
    })
}

/// Linear-interpolation empirical quantile of a sorted slice.
fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Derived quantity whose uncertainty is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliabilityQuery {
    ReliabilityAt(usize),
    ReliabilityInfinity,
    Mtta,
    PassK(u32),
    PassAtK(u32),
}

pub fn evaluate_query(chain: &AgentMarkovChain, query: ReliabilityQuery) -> Result<f64, ChainError> {
    match query {
        ReliabilityQuery::ReliabilityAt(d) => chain.reliability_at(d),
        ReliabilityQuery::ReliabilityInfinity => chain.reliability_infinity(),
        ReliabilityQuery::Mtta => chain.mtta(),
        ReliabilityQuery::PassK(k) => {
            Ok(chain::pass_metrics(chain.reliability_infinity()?, k)?.pass_k)
        }
        ReliabilityQuery::PassAtK(k) => {
            Ok(chain::pass_metrics(chain.reliability_infinity()?, k)?.pass_at_k)
        }
    }
}

/// Monte Carlo propagation: draw chains from the row-wise Dirichlet
/// posterior (posterior method) or reuse bootstrap replicates, evaluate the
/// query on each, and report equal-tailed quantiles. Draws that fail chain
/// validation are dropped; more than 10% dropped is an error.
///
/// `corpus` is required for the bootstrap method only.
pub fn propagate_interval(
    fitted: &FittedChain,
    corpus: Option<&TraceCorpus>,
    method: IntervalMethod,
    query: ReliabilityQuery,
    samples: usize,
    seed: u64,
    level: f64,
) -> Result<(f64, f64), UncertaintyError> {
    check_level(level)?;
    let chains: Vec<AgentMarkovChain> = match method {
        IntervalMethod::Posterior => {
            if samples < 100 {
                return Err(UncertaintyError::DomainError(format!(
                    "posterior propagation needs samples >= 100, got {samples}"
                )));
            }
            posterior_chain_draws(fitted, samples, seed)
        }
        IntervalMethod::Bootstrap { b, fast, seed } => {
            let corpus = corpus.ok_or_else(|| {
                UncertaintyError::DomainError(
                    "bootstrap propagation needs the source corpus".into(),
                )
            })?;
            bootstrap_replicates(corpus, fitted, b, fast, seed)?
        }
    };
    let total = chains.len();
    let mut values: Vec<f64> = Vec::with_capacity(total);
    for chain in &chains {
        if let Ok(v) = evaluate_query(chain, query) {
            values.push(v);
        }
    }
    let dropped = total - values.len();
    if dropped * 10 > total {
        return Err(UncertaintyError::TooManyInvalidDraws { dropped, total });
    }
    if values.is_empty() {
        return Err(UncertaintyError::TooManyInvalidDraws { dropped, total });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo_p = (1.0 - level) / 2.0;
    Ok((
        empirical_quantile(&values, lo_p),
        empirical_quantile(&values, 1.0 - lo_p),
    ))
}

/// Sample chains from the row-wise Dirichlet posteriors
/// `Dir(c_{i,·} + α)`; draws that fail validation are skipped by the
/// caller.
fn posterior_chain_draws(fitted: &FittedChain, samples: usize, seed: u64) -> Vec<AgentMarkovChain> {
    let counts = &fitted.counts;
    let m = counts.m;
    let alpha = fitted.alpha;
    let mut out = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64 + 1);
        let mut q = vec![0.0; m * m];
        let mut r_plus = vec![0.0; m];
        let mut r_minus = vec![0.0; m];
        for i in 0..m {
            let mut draws = Vec::with_capacity(m + 2);
            for j in 0..m {
                draws.push(gamma_draw(
                    counts.transient_count(i, j) as f64 + alpha,
                    &mut rng,
                ));
            }
            draws.push(gamma_draw(counts.success[i] as f64 + alpha, &mut rng));
            draws.push(gamma_draw(counts.failure[i] as f64 + alpha, &mut rng));
            let total: f64 = draws.iter().sum();
            for j in 0..m {
                q[i * m + j] = draws[j] / total;
            }
            r_plus[i] = draws[m] / total;
            r_minus[i] = draws[m + 1] / total;
        }
        let q = match crate::numerics::Matrix::new(m, m, q) {
            Ok(q) => q,
            Err(_) => continue,
        };
        if let Ok(chain) = AgentMarkovChain::new(
            fitted.chain.labels().to_vec(),
            q,
            r_plus,
            r_minus,
            fitted.chain.initial().to_vec(),
        ) {
            out.push(chain);
        }
    }
    out
}

fn gamma_draw<R: Rng>(shape: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0).expect("positive shape");
    g.sample(rng).max(1e-300)
}
