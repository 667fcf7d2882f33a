//! Rule-based step featurization: one-hot tool type, a retry bit, and a
//! one-hot error code. Vocabularies are fixed at fit time; unseen values at
//! apply time map to an all-zeros block so held-out evaluation stays total.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{Step, TraceCorpus};

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Fixed featurization vocabulary. Dimension is
/// `|tool_vocab| + 1 + |error_vocab|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub tool_vocab: Vec<String>,
    pub error_vocab: Vec<String>,
}

impl FeatureSpace {
    pub fn dimension(&self) -> usize {
        self.tool_vocab.len() + 1 + self.error_vocab.len()
    }
}

/// Per-trace, per-step feature vectors aligned to the source corpus.
#[derive(Debug, Clone)]
pub struct FeaturizedCorpus {
    pub space: FeatureSpace,
    pub traces: Vec<Vec<Vec<f64>>>,
}

impl FeaturizedCorpus {
    pub fn n_steps(&self) -> usize {
        self.traces.iter().map(Vec::len).sum()
    }

    pub fn step_vectors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.traces.iter().flatten()
    }
}

/// Vocabularies are the sorted distinct values seen in the fit corpus.
pub fn build_feature_space(corpus: &TraceCorpus) -> Result<FeatureSpace, FeaturizeError> {
    if corpus.is_empty() {
        return Err(FeaturizeError::EmptyCorpus);
    }
    let mut tools: Vec<String> = corpus
        .traces
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| s.tool_type.clone()))
        .collect();
    tools.sort_unstable();
    tools.dedup();
    let mut errors: Vec<String> = corpus
        .traces
        .iter()
        .flat_map(|t| t.steps.iter().filter_map(|s| s.error_code.clone()))
        .collect();
    errors.sort_unstable();
    errors.dedup();
    Ok(FeatureSpace { tool_vocab: tools, error_vocab: errors })
}

/// One-hot(tool) ⊕ [retry] ⊕ one-hot(error code); zeros for absent or
/// unseen categories.
pub fn featurize_step(space: &FeatureSpace, step: &Step) -> Vec<f64> {
    let mut v = vec![0.0; space.dimension()];
    if let Ok(i) = space.tool_vocab.binary_search(&step.tool_type) {
        v[i] = 1.0;
    }
    if step.retry {
        v[space.tool_vocab.len()] = 1.0;
    }
    if let Some(code) = &step.error_code {
        if let Ok(i) = space.error_vocab.binary_search(code) {
            v[space.tool_vocab.len() + 1 + i] = 1.0;
        }
    }
    v
}

pub fn featurize_corpus(corpus: &TraceCorpus, space: &FeatureSpace) -> FeaturizedCorpus {
    let traces = corpus
        .traces
        .iter()
        .map(|t| t.steps.iter().map(|s| featurize_step(space, s)).collect())
        .collect();
    FeaturizedCorpus { space: space.clone(), traces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Outcome, Trace};

    fn corpus(step_specs: &[Vec<(&str, bool, Option<&str>)>]) -> TraceCorpus {
        let traces = step_specs
            .iter()
            .enumerate()
            .map(|(i, steps)| Trace {
                trace_id: format!("t{i}"),
                task_id: None,
                steps: steps
                    .iter()
                    .map(|(tool, retry, err)| Step {
                        tool_type: (*tool).into(),
                        retry: *retry,
                        error_code: err.map(Into::into),
                        extra: None,
                    })
                    .collect(),
                outcome: Outcome::Success,
            })
            .collect();
        TraceCorpus::new(traces, "unit")
    }

    #[test]
    fn dimension_counts_vocab_plus_retry_bit() {
        let c = corpus(&[vec![("plan", false, None), ("tool_call", false, None)]]);
        let space = build_feature_space(&c).unwrap();
        assert_eq!(space.dimension(), 3);
    }

    #[test]
    fn one_hot_layout() {
        let c = corpus(&[vec![
            ("plan", false, None),
            ("tool_call", true, Some("E1")),
        ]]);
        let space = build_feature_space(&c).unwrap();
        let fc = featurize_corpus(&c, &space);
        assert_eq!(fc.traces[0][0], vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(fc.traces[0][1], vec![0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn unseen_categories_map_to_zero_blocks() {
        let c = corpus(&[vec![("plan", false, None)]]);
        let space = build_feature_space(&c).unwrap();
        let novel = Step {
            tool_type: "browse".into(),
            retry: true,
            error_code: Some("E_NEW".into()),
            extra: None,
        };
        let v = featurize_step(&space, &novel);
        assert_eq!(v, vec![0.0, 1.0]);
    }

    #[test]
    fn vocabulary_is_fit_half_only() {
        let fit = corpus(&[vec![("plan", false, None)]]);
        let space = build_feature_space(&fit).unwrap();
        let test = corpus(&[vec![("plan", false, Some("E9")), ("browse", false, None)]]);
        let fc = featurize_corpus(&test, &space);
        // error vocab stays empty; novel tool maps to zeros
        assert_eq!(space.error_vocab.len(), 0);
        assert_eq!(fc.traces[0][0], vec![1.0, 0.0]);
        assert_eq!(fc.traces[0][1], vec![0.0, 0.0]);
    }

    #[test]
    fn featurize_is_pure_and_binary() {
        let c = corpus(&[vec![("a", true, Some("E")), ("b", false, None)]]);
        let space = build_feature_space(&c).unwrap();
        let fc1 = featurize_corpus(&c, &space);
        let fc2 = featurize_corpus(&c, &space);
        assert_eq!(fc1.traces, fc2.traces);
        for v in fc1.step_vectors() {
            assert!(v.iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }

    #[test]
    fn empty_corpus_errors() {
        let c = TraceCorpus::default();
        assert!(matches!(
            build_feature_space(&c),
            Err(FeaturizeError::EmptyCorpus)
        ));
    }
}
