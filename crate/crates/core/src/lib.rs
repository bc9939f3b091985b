//! Core library for grounding word-embedding semantics in robot sensorimotor
//! behavior.
//!
//! The pipeline: command words are mapped to vectors (loaded from a word2vec
//! binary or synthesized against a prescribed cosine-similarity matrix), fed
//! serially into the hidden layer of a small recurrent controller, and the
//! primed controller then drives one of several reduced-order robot models in
//! closed loop. Controllers are evolved with age-fitness Pareto optimization
//! against per-command objectives, and run champions are scored for zero-shot
//! generalization to a held-out synonym. A permuted-vector control treatment
//! and a rank-based statistical toolkit round out the experiment.

pub mod afpo;
pub mod controller;
pub mod embeddings;
pub mod protocol;
pub mod report;
pub mod seed;
pub mod sim;
pub mod stats;

pub use controller::{Genome, HiddenState, MorphologyId, MorphologyInterface};
pub use embeddings::{CommandVector, EmbeddingTable, GramSpec, Provenance};
pub use protocol::{CommandTask, Regime, TaskKind, Treatment, TrialResult, TrialSpec};
pub use sim::{BodyPose, SimParams, Trajectory};
