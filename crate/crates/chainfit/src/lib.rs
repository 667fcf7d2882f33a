//! Fit absorbing discrete-time Markov chains to agent execution traces,
//! audit the fit, and answer reliability queries.
//!
//! An agent run is modeled as a trajectory in an absorbing chain: transient
//! states capture intermediate behavior (planning, tool calls, retries) and
//! two absorbers capture terminal success and failure. The crate covers the
//! whole workflow:
//!
//! * [`trace`] — trace corpus representation, JSONL ingestion, splitting.
//! * [`featurize`] — rule-based step featurization (one-hot tool / retry /
//!   error-code bits).
//! * [`cluster`] — agglomerative Ward clustering with silhouette-selected
//!   state count.
//! * [`estimate`] — transition counting, Laplace-smoothed MLE, and the
//!   first- vs second-order AIC test.
//! * [`gof`] — the composite KS-and-AIC goodness-of-fit certificate.
//! * [`chain`] — the fitted-chain analytics: finite-horizon and asymptotic
//!   reliability, mean time to absorption, perturbation sensitivity,
//!   pass@k / pass^k, curve-shape diagnostics, rare-failure limits, and
//!   spectral horizon bounds.
//! * [`uncertainty`] — Dirichlet-posterior and trace-bootstrap credible
//!   intervals, propagated to derived quantities.
//! * [`simulate`] — seeded generators for ground-truth chains and synthetic
//!   corpora, plus the bundled framework archetypes.
//! * [`study`] — the reproducible simulation studies behind the `study`
//!   CLI subcommand.
//!
//! Everything is deterministic given explicit seeds; no global RNG state.

pub mod chain;
pub mod cluster;
pub mod estimate;
pub mod featurize;
pub mod gof;
pub mod numerics;
pub mod report;
pub mod simulate;
pub mod study;
pub mod trace;
pub mod uncertainty;

pub use chain::AgentMarkovChain;
pub use estimate::FittedChain;
pub use gof::GofCertificate;
pub use trace::{Trace, TraceCorpus};
