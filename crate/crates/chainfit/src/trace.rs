//! Trace corpus representation, JSONL ingestion, and splitting.
//!
//! One trace per line:
//!
//! ```text
//! {"trace_id": "t1", "task_id": "42", "steps": [{"tool_type": "plan",
//!  "retry": false, "error_code": "E1", "extra": {...}}], "outcome": "success"}
//! ```
//!
//! `task_id`, `error_code`, and `extra` are optional. Unknown step-level
//! fields are folded into `extra` on load. A trace ends in `success`,
//! `failure`, or `censored`; censored traces contribute only the transitions
//! observed before censoring and never count as a terminal outcome anywhere
//! downstream.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate trace id {id:?} at line {line}")]
    DuplicateTraceId { id: String, line: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Terminal outcome of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
    Censored,
}

/// One observed agent step: a categorical tool token, a retry flag, an
/// optional error code, and optional extra features.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub tool_type: String,
    pub retry: bool,
    pub error_code: Option<String>,
    pub extra: Option<BTreeMap<String, Value>>,
}

impl Step {
    pub fn new(tool_type: impl Into<String>) -> Self {
        Self { tool_type: tool_type.into(), retry: false, error_code: None, extra: None }
    }
}

impl Serialize for Step {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let extra = self.extra.as_ref().filter(|e| !e.is_empty());
        let len = 2 + usize::from(self.error_code.is_some()) + usize::from(extra.is_some());
        let mut map = serializer.serialize_map(Some(len))?;
        map.serialize_entry("tool_type", &self.tool_type)?;
        map.serialize_entry("retry", &self.retry)?;
        if let Some(code) = &self.error_code {
            map.serialize_entry("error_code", code)?;
        }
        if let Some(extra) = extra {
            map.serialize_entry("extra", extra)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Step {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let mut map = serde_json::Map::deserialize(deserializer)?;
        let tool_type = match map.remove("tool_type") {
            Some(Value::String(s)) if !s.is_empty() => s,
            Some(Value::String(_)) => return Err(D::Error::custom("tool_type must be non-empty")),
            Some(_) => return Err(D::Error::custom("tool_type must be a string")),
            None => return Err(D::Error::custom("step is missing tool_type")),
        };
        let retry = match map.remove("retry") {
            Some(Value::Bool(b)) => b,
            Some(_) => return Err(D::Error::custom("retry must be a boolean")),
            None => return Err(D::Error::custom("step is missing retry")),
        };
        let error_code = match map.remove("error_code") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(D::Error::custom("error_code must be a string")),
        };
        let mut extra: BTreeMap<String, Value> = match map.remove("extra") {
            None | Some(Value::Null) => BTreeMap::new(),
            Some(Value::Object(o)) => o.into_iter().collect(),
            Some(_) => return Err(D::Error::custom("extra must be an object")),
        };
        // unknown step-level fields are preserved rather than dropped
        for (k, v) in map {
            extra.insert(k, v);
        }
        Ok(Step {
            tool_type,
            retry,
            error_code,
            extra: if extra.is_empty() { None } else { Some(extra) },
        })
    }
}

/// An ordered run of steps plus its terminal outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub trace_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_id: Option<String>,
    pub steps: Vec<Step>,
    pub outcome: Outcome,
}

impl Trace {
    /// Number of observed steps; for a completed trace this is also its
    /// absorption step.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A set of traces with free-text provenance metadata. Provenance is not
/// part of the serialized corpus and is ignored by equality.
#[derive(Debug, Clone, Default)]
pub struct TraceCorpus {
    pub traces: Vec<Trace>,
    pub provenance: String,
}

impl PartialEq for TraceCorpus {
    fn eq(&self, other: &Self) -> bool {
        self.traces == other.traces
    }
}

impl TraceCorpus {
    pub fn new(traces: Vec<Trace>, provenance: impl Into<String>) -> Self {
        Self { traces, provenance: provenance.into() }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.traces.is_empty() {
            return 0.0;
        }
        let c = self
            .traces
            .iter()
            .filter(|t| t.outcome == Outcome::Censored)
            .count();
        c as f64 / self.traces.len() as f64
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for trace in &self.traces {
            out.push_str(&serde_json::to_string(trace).expect("trace serialization cannot fail"));
            out.push('\n');
        }
        out
    }
}

/// Parse a newline-delimited JSON corpus. Blank lines are skipped; parse
/// failures carry their 1-based line number.
pub fn corpus_from_str(content: &str, provenance: &str) -> Result<TraceCorpus, TraceError> {
    let mut traces = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let trace: Trace = serde_json::from_str(raw)
            .map_err(|e| TraceError::Parse { line, reason: e.to_string() })?;
        if trace.steps.is_empty() {
            return Err(TraceError::Parse { line, reason: "steps must be non-empty".into() });
        }
        if !seen.insert(trace.trace_id.clone()) {
            return Err(TraceError::DuplicateTraceId { id: trace.trace_id, line });
        }
        traces.push(trace);
    }
    Ok(TraceCorpus::new(traces, provenance))
}

/// Load a JSONL corpus from disk.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<TraceCorpus, TraceError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path)?;
    corpus_from_str(&content, &path.display().to_string())
}

/// Write a corpus as JSONL.
pub fn save_corpus(corpus: &TraceCorpus, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let mut file = fs::File::create(path)?;
    file.write_all(corpus.to_jsonl().as_bytes())?;
    Ok(())
}

/// Seeded uniform split: permute, then send the first
/// `⌊n · fit_fraction⌋` traces to the fit half. Disjoint and exhaustive.
pub fn split_corpus(
    corpus: &TraceCorpus,
    fit_fraction: f64,
    seed: u64,
) -> (TraceCorpus, TraceCorpus) {
    assert!(
        fit_fraction > 0.0 && fit_fraction < 1.0,
        "fit_fraction must lie strictly between 0 and 1"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    indices.shuffle(&mut rng);
    let n_fit = (corpus.len() as f64 * fit_fraction).floor() as usize;
    let fit = indices[..n_fit]
        .iter()
        .map(|&i| corpus.traces[i].clone())
        .collect();
    let test = indices[n_fit..]
        .iter()
        .map(|&i| corpus.traces[i].clone())
        .collect();
    (
        TraceCorpus::new(fit, format!("{} [fit half, seed {seed}]", corpus.provenance)),
        TraceCorpus::new(test, format!("{} [test half, seed {seed}]", corpus.provenance)),
    )
}

/// Empirical reliability decay curve: entry `d - 1` is the fraction of all
/// traces that succeeded within `d` steps (`1 ≤ d ≤ d_max`). Censored and
/// failed traces count in the denominator but never as successes.
pub fn empirical_rdc(corpus: &TraceCorpus, d_max: usize) -> Result<Vec<f64>, TraceError> {
    assert!(d_max >= 1, "d_max must be at least 1");
    if corpus.is_empty() {
        return Err(TraceError::EmptyCorpus);
    }
    let n = corpus.len() as f64;
    let mut hist = vec![0usize; d_max + 1];
    for trace in &corpus.traces {
        if trace.outcome == Outcome::Success && trace.len() <= d_max {
            hist[trace.len()] += 1;
        }
    }
    let mut out = Vec::with_capacity(d_max);
    let mut acc = 0usize;
    for d in 1..=d_max {
        acc += hist[d];
        out.push(acc as f64 / n);
    }
    Ok(out)
}
