//! Composite goodness-of-fit certificate: a KS test on the success
//! first-passage distribution and the first- vs second-order AIC verdict.
//!
//! The chain is accepted iff BOTH `p_KS > α_KS` and `Δ_AIC > 0`. The KS
//! layer compares empirical success first-passage times against the model's
//! conditional success-time distribution, either analytically (exact CDF,
//! one-sample limit of the two-sample statistic) or against a seeded
//! simulated sample. Censored traces are excluded: their success time is
//! unobserved.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::ChainError;
use crate::estimate::FittedChain;
use crate::numerics::{kolmogorov_tail, ks_two_sample, NumericsError};
use crate::trace::{Outcome, TraceCorpus};

/// Default KS acceptance threshold.
pub const DEFAULT_ALPHA_KS: f64 = 0.05;

/// Default trajectory count for the sampled model CDF.
pub const DEFAULT_SAMPLED_N: usize = 8000;

#[derive(Debug, Error)]
pub enum GofError {
    #[error("corpus has no success traces")]
    NoSuccesses,
    #[error("model sample produced no successes; cannot form the model CDF")]
    ModelSampleEmpty,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// How the model-side success-time CDF is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ModelCdfMode {
    /// Exact conditional CDF from the fitted chain.
    Analytic,
    /// Success first-passage times from `n` seeded trajectories.
    Sampled { n: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofCertificate {
    pub d_ks: f64,
    pub p_ks: f64,
    pub delta_aic: f64,
    pub accepted: bool,
    pub n_success_traces: usize,
    pub model_cdf_mode: ModelCdfMode,
    pub alpha_ks: f64,
}

/// Success first-passage times (the step count of each success trace).
pub fn empirical_success_fpts(corpus: &TraceCorpus) -> Result<Vec<f64>, GofError> {
    let fpts: Vec<f64> = corpus
        .traces
        .iter()
        .filter(|t| t.outcome == Outcome::Success)
        .map(|t| t.len() as f64)
        .collect();
    if fpts.is_empty() {
        return Err(GofError::NoSuccesses);
    }
    Ok(fpts)
}

/// Run the composite certificate for a fitted chain against a corpus.
///
/// The KS sample comes from `corpus`; `Δ_AIC` comes from the fitted
/// verdict (the order test belongs to the fit, not the evaluation corpus).
pub fn certify(
    corpus: &TraceCorpus,
    fitted: &FittedChain,
    mode: ModelCdfMode,
    alpha_ks: f64,
) -> Result<GofCertificate, GofError> {
    let fpts = empirical_success_fpts(corpus)?;
    let (d_ks, p_ks) = match mode {
        ModelCdfMode::Analytic => {
            let d_max = fpts.iter().cloned().fold(0.0f64, f64::max) as usize;
            let cdf = fitted.chain.success_fpt_cdf(d_max)?;
            let n = fpts.len() as f64;
            let mut d_stat = 0.0f64;
            for (idx, model) in cdf.iter().enumerate() {
                let d = (idx + 1) as f64;
                let emp = fpts.iter().filter(|&&x| x <= d).count() as f64 / n;
                d_stat = d_stat.max((emp - model).abs());
            }
            // one-sample limit of the two-sample statistic: n_b -> infinity
            (d_stat, kolmogorov_tail(d_stat * n.sqrt()))
        }
        ModelCdfMode::Sampled { n, seed } => {
            let batch = fitted.chain.sample_fpt(n, seed);
            let model_fpts = batch.success_fpts();
            if model_fpts.is_empty() {
                return Err(GofError::ModelSampleEmpty);
            }
            ks_two_sample(&fpts, &model_fpts)?
        }
    };
    let delta_aic = fitted.order_verdict.delta_aic;
    Ok(GofCertificate {
        d_ks,
        p_ks,
        delta_aic,
        accepted: p_ks > alpha_ks && delta_aic > 0.0,
        n_success_traces: fpts.len(),
        model_cdf_mode: mode,
        alpha_ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::AgentMarkovChain;
    use crate::cluster::Clustering;
    use crate::estimate::{CountTable, FitConfig, FittedChain, OrderTest};
    use crate::featurize::FeatureSpace;
    use crate::numerics::Matrix;
    use crate::trace::{Step, Trace};

    fn trace(id: &str, len: usize, outcome: Outcome) -> Trace {
        Trace {
            trace_id: id.into(),
            task_id: None,
            steps: (0..len).map(|_| Step::new("s")).collect(),
            outcome,
        }
    }

    fn example_chain() -> AgentMarkovChain {
        AgentMarkovChain::new(
            vec!["s0".into(), "s1".into(), "s2".into()],
            Matrix::from_rows(&[
                vec![0.5, 0.3, 0.0],
                vec![0.0, 0.4, 0.3],
                vec![0.0, 0.0, 0.6],
            ])
            .unwrap(),
            vec![0.1, 0.2, 0.3],
            vec![0.1, 0.1, 0.1],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    fn wrap_fitted(chain: AgentMarkovChain, delta_aic: f64) -> FittedChain {
        let m = chain.m();
        FittedChain {
            chain,
            counts: CountTable::zeros(m),
            clustering: Clustering {
                k: m,
                assignments: vec![],
                centroids: vec![],
                silhouette: None,
                silhouette_capped: false,
            },
            space: FeatureSpace { tool_vocab: vec!["s".into()], error_vocab: vec![] },
            alpha: 1.0,
            order_verdict: OrderTest { delta_aic, ell1: 0.0, ell2: 0.0, k1: 0, k2: 0 },
            censored_fraction: 0.0,
            config: FitConfig::default(),
        }
    }

    #[test]
    fn empirical_fpts_collects_success_lengths() {
        let corpus = TraceCorpus::new(
            vec![
                trace("a", 2, Outcome::Success),
                trace("b", 2, Outcome::Success),
                trace("c", 5, Outcome::Success),
                trace("d", 9, Outcome::Failure),
                trace("e", 4, Outcome::Censored),
            ],
            "u",
        );
        assert_eq!(empirical_success_fpts(&corpus).unwrap(), vec![2.0, 2.0, 5.0]);
    }

    #[test]
    fn no_successes_is_an_error() {
        let corpus = TraceCorpus::new(vec![trace("a", 2, Outcome::Failure)], "u");
        assert!(matches!(
            empirical_success_fpts(&corpus),
            Err(GofError::NoSuccesses)
        ));
    }

    #[test]
    fn sampled_ecdf_stays_within_dkw_band_of_analytic_cdf() {
        let chain = example_chain();
        let n = 10_000;
        let batch = chain.sample_fpt(n, 31337);
        let fpts = batch.success_fpts();
        let d_max = fpts.iter().cloned().fold(0.0f64, f64::max) as usize;
        let cdf = chain.success_fpt_cdf(d_max).unwrap();
        let ns = fpts.len() as f64;
        // DKW: P(sup > eps) <= 2 exp(-2 n eps^2); eps for the 1e-6 level
        let eps = ((2.0f64 / 1e-6).ln() / (2.0 * ns)).sqrt();
        for (idx, model) in cdf.iter().enumerate() {
            let d = (idx + 1) as f64;
            let emp = fpts.iter().filter(|&&x| x <= d).count() as f64 / ns;
            assert!(
                (emp - model).abs() <= eps,
                "ECDF off by {} at d = {d}",
                (emp - model).abs()
            );
        }
    }

    #[test]
    fn self_sampled_corpus_is_accepted_in_analytic_mode() {
        let chain = example_chain();
        let batch = chain.sample_fpt(500, 2024);
        let traces: Vec<Trace> = batch
            .samples
            .iter()
            .enumerate()
            .map(|(i, &(o, steps))| {
                trace(
                    &format!("t{i}"),
                    steps as usize,
                    match o {
                        crate::chain::TerminalOutcome::Success => Outcome::Success,
                        crate::chain::TerminalOutcome::Failure => Outcome::Failure,
                    },
                )
            })
            .collect();
        let corpus = TraceCorpus::new(traces, "u");
        let fitted = wrap_fitted(chain, 10.0);
        let cert = certify(&corpus, &fitted, ModelCdfMode::Analytic, DEFAULT_ALPHA_KS).unwrap();
        assert!(cert.p_ks > 0.05, "p = {}", cert.p_ks);
        assert!(cert.accepted);
    }

    #[test]
    fn negative_delta_aic_rejects_even_with_good_ks() {
        let chain = example_chain();
        let batch = chain.sample_fpt(300, 77);
        let traces: Vec<Trace> = batch
            .samples
            .iter()
            .enumerate()
            .filter(|(_, (o, _))| *o == crate::chain::TerminalOutcome::Success)
            .map(|(i, &(_, steps))| trace(&format!("t{i}"), steps as usize, Outcome::Success))
            .collect();
        let corpus = TraceCorpus::new(traces, "u");
        let fitted = wrap_fitted(chain, -250.0);
        let cert = certify(&corpus, &fitted, ModelCdfMode::Analytic, DEFAULT_ALPHA_KS).unwrap();
        assert!(cert.p_ks > 0.05);
        assert!(!cert.accepted);
    }

    #[test]
    fn sampled_mode_is_deterministic_given_seed() {
        let chain = example_chain();
        let corpus = TraceCorpus::new(
            vec![
                trace("a", 1, Outcome::Success),
                trace("b", 3, Outcome::Success),
                trace("c", 4, Outcome::Failure),
            ],
            "u",
        );
        let fitted = wrap_fitted(chain, 1.0);
        let mode = ModelCdfMode::Sampled { n: 2000, seed: 5 };
        let c1 = certify(&corpus, &fitted, mode, DEFAULT_ALPHA_KS).unwrap();
        let c2 = certify(&corpus, &fitted, mode, DEFAULT_ALPHA_KS).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn identical_empirical_and_model_sample_gives_zero_d() {
        let chain = example_chain();
        let mode = ModelCdfMode::Sampled { n: 400, seed: 11 };
        let batch = chain.sample_fpt(400, 11);
        let traces: Vec<Trace> = batch
            .samples
            .iter()
            .enumerate()
            .filter(|(_, (o, _))| *o == crate::chain::TerminalOutcome::Success)
            .map(|(i, &(_, steps))| trace(&format!("t{i}"), steps as usize, Outcome::Success))
            .collect();
        let corpus = TraceCorpus::new(traces, "u");
        let accepted = certify(&corpus, &wrap_fitted(example_chain(), 3.0), mode, 0.05).unwrap();
        assert_eq!(accepted.d_ks, 0.0);
        assert!(accepted.accepted);
        let rejected = certify(&corpus, &wrap_fitted(example_chain(), -3.0), mode, 0.05).unwrap();
        assert!(!rejected.accepted);
    }
}
