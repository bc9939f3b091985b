//! The experiment definition: command sets and objectives, held-out synonym
//! selection, experimental vs permuted-control treatments, the
//! prime-then-evaluate fitness vector, and test-error measurement.

mod grams;

pub use grams::{balanced_gram, original_gram};

use std::collections::BTreeSet;
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::afpo::{self, AfpoConfig, GenerationRecord, GenomeOps, Individual};
use crate::controller::{self, Genome, MorphologyId};
use crate::embeddings::{
    self, parse_word2vec_bin, synthesize_from_gram, CommandVector, EmbeddingTable, GramSpec,
};
use crate::seed::{self, tag};
use crate::sim::{self, DisplacementMetrics, SimParams};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("config key {key}: {detail}")]
    BadConfig { key: &'static str, detail: String },
    #[error(transparent)]
    Embedding(#[from] embeddings::EmbedError),
    #[error("failed to read embedding file {path}: {detail}")]
    EmbeddingFile { path: String, detail: String },
    #[error("word {0:?} is not part of this trial's command universe")]
    UnknownCommand(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Forward,
    Backward,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Treatment {
    Experimental,
    Control,
}

impl Treatment {
    pub fn as_str(self) -> &'static str {
        match self {
            Treatment::Experimental => "experimental",
            Treatment::Control => "control",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "experimental" => Some(Treatment::Experimental),
            "control" => Some(Treatment::Control),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Original,
    PerTaskBalanced,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Original => "original",
            Regime::PerTaskBalanced => "per_task_balanced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "original" => Some(Regime::Original),
            "per_task_balanced" => Some(Regime::PerTaskBalanced),
            _ => None,
        }
    }
}

/// The command words of a regime, in canonical order. Permutation seeds key
/// off a word's position here, so experimental and control trials with the
/// same seed share everything but the vector values.
pub fn command_universe(regime: Regime) -> &'static [&'static str] {
    match regime {
        Regime::Original => &["forward", "backward", "halt", "stop", "suspend", "cease"],
        Regime::PerTaskBalanced => &[
            "forward",
            "foward",
            "backward",
            "backwards",
            "stop",
            "suspend",
            "cease",
        ],
    }
}

/// Stop synonyms eligible for hold-out.
pub fn heldout_pool(regime: Regime) -> &'static [&'static str] {
    match regime {
        Regime::Original => &["stop", "cease", "suspend", "halt"],
        Regime::PerTaskBalanced => &["stop", "suspend", "cease"],
    }
}

pub fn task_of(word: &str) -> TaskKind {
    match word {
        "forward" | "foward" => TaskKind::Forward,
        "backward" | "backwards" => TaskKind::Backward,
        _ => TaskKind::Stop,
    }
}

/// A command word bound to its objective and vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandTask {
    pub word: String,
    pub task_kind: TaskKind,
    pub vector: CommandVector,
}

/// Where command vectors come from: Gram-constrained synthesis (default) or
/// a loaded word2vec table.
#[derive(Debug, Clone)]
pub enum EmbeddingSource {
    Synthetic { dim: usize, seed: u64 },
    Table(EmbeddingTable),
}

pub const DEFAULT_EMBEDDING_DIM: usize = 300;
pub const DEFAULT_EMBEDDING_SEED: u64 = 7077;

/// Worst-case command score assigned when an evaluation aborts on a
/// non-finite state: finite (far below any attainable score) so summary
/// records stay JSON-representable.
pub const WORST_SCORE: f64 = -1e12;

/// Displacement reported for an aborted evaluation. The state diverged, so
/// movement is effectively unbounded; a huge finite sentinel keeps the
/// record serializable while landing in the correct tail of every
/// displacement comparison.
pub const ABORTED_DISPLACEMENT_BL: f64 = 1e12;

/// Flat trial configuration, the persisted key-value document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub morphology: MorphologyId,
    pub treatment: Treatment,
    pub regime: Regime,
    pub seed: u64,
    pub population: usize,
    pub generations: usize,
    #[serde(default = "defaults::embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default = "defaults::embedding_seed")]
    pub embedding_seed: u64,
    /// Optional path to a word2vec binary; vectors are then looked up
    /// instead of synthesized.
    #[serde(default)]
    pub embedding_bin: Option<String>,
    #[serde(default = "defaults::steps")]
    pub steps: usize,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
}

mod defaults {
    pub fn embedding_dim() -> usize {
        super::DEFAULT_EMBEDDING_DIM
    }
    pub fn embedding_seed() -> u64 {
        super::DEFAULT_EMBEDDING_SEED
    }
    pub fn steps() -> usize {
        500
    }
    pub fn dt() -> f64 {
        0.05
    }
}

impl TrialConfig {
    /// Desk-scale defaults: population 30, 300 generations (a documented
    /// scale-down of the full 50 x 6000 protocol).
    pub fn desk_scale(morphology: MorphologyId, treatment: Treatment, seed: u64) -> Self {
        Self {
            morphology,
            treatment,
            regime: Regime::Original,
            seed,
            population: 30,
            generations: 300,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            embedding_seed: DEFAULT_EMBEDDING_SEED,
            embedding_bin: None,
            steps: 500,
            dt: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |key: &'static str, detail: String| Err(ProtocolError::BadConfig { key, detail });
        if self.population == 0 {
            return bad("population", "must be >= 1".into());
        }
        if self.generations == 0 {
            return bad("generations", "must be >= 1".into());
        }
        if self.steps == 0 {
            return bad("steps", "must be >= 1".into());
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return bad("dt", format!("must be finite and > 0, got {}", self.dt));
        }
        let n_words = command_universe(self.regime).len();
        if self.embedding_bin.is_none() && self.embedding_dim < n_words {
            return bad(
                "embedding_dim",
                format!(
                    "must be >= {n_words} for synthesis, got {}",
                    self.embedding_dim
                ),
            );
        }
        Ok(())
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            steps: self.steps,
            dt: self.dt,
            ..SimParams::default()
        }
    }

    pub fn embedding_source(&self) -> Result<EmbeddingSource, ProtocolError> {
        match &self.embedding_bin {
            None => Ok(EmbeddingSource::Synthetic {
                dim: self.embedding_dim,
                seed: self.embedding_seed,
            }),
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|e| ProtocolError::EmbeddingFile {
                    path: path.clone(),
                    detail: e.to_string(),
                })?;
                Ok(EmbeddingSource::Table(parse_word2vec_bin(
                    bytes.as_slice(),
                )?))
            }
        }
    }
}

/// A fully-seeded description of one evolutionary run.
#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub config: TrialConfig,
    pub training_set: Vec<CommandTask>,
    pub heldout: CommandTask,
    pub afpo: AfpoConfig,
    pub sim: SimParams,
    /// Max entry-wise PSD repair applied during synthesis (zero if the
    /// target Gram was already PSD, absent for loaded tables).
    pub repair_delta: Option<f64>,
}

pub fn gram_for(regime: Regime) -> GramSpec {
    match regime {
        Regime::Original => original_gram(),
        Regime::PerTaskBalanced => balanced_gram(),
    }
}

fn base_vectors(
    regime: Regime,
    source: &EmbeddingSource,
) -> Result<(Vec<CommandVector>, Option<f64>), ProtocolError> {
    match source {
        EmbeddingSource::Synthetic { dim, seed } => {
            let (vectors, repair) = synthesize_from_gram(&gram_for(regime), *dim, *seed)?;
            Ok((vectors, Some(repair.max_abs_delta)))
        }
        EmbeddingSource::Table(table) => {
            let vectors: Result<Vec<CommandVector>, _> = command_universe(regime)
                .iter()
                .map(|w| table.lookup(w))
                .collect();
            Ok((vectors?, None))
        }
    }
}

/// Builds the fully-seeded trial: the trial seed determines the held-out
/// synonym, the control-treatment permutations (one independent permutation
/// per command, fixed for the whole run), and the optimizer seed.
pub fn make_trial(config: &TrialConfig) -> Result<TrialSpec, ProtocolError> {
    config.validate()?;
    let regime = config.regime;
    let source = config.embedding_source()?;
    let (mut vectors, repair_delta) = base_vectors(regime, &source)?;

    if config.treatment == Treatment::Control {
        for (index, v) in vectors.iter_mut().enumerate() {
            let perm_seed = seed::derive(config.seed, &[tag::PERMUTE, index as u64]);
            *v = embeddings::permute(v, perm_seed);
        }
    }

    let universe = command_universe(regime);
    let pool = heldout_pool(regime);
    let mut heldout_rng = seed::rng(config.seed, &[tag::HELDOUT]);
    let heldout_word = pool[heldout_rng.random_range(0..pool.len())];

    let task_for = |word: &str| -> CommandTask {
        let idx = universe
            .iter()
            .position(|w| *w == word)
            .expect("in universe");
        CommandTask {
            word: word.to_string(),
            task_kind: task_of(word),
            vector: vectors[idx].clone(),
        }
    };
    let training_set: Vec<CommandTask> = universe
        .iter()
        .filter(|w| **w != heldout_word)
        .map(|w| task_for(w))
        .collect();
    let heldout = task_for(heldout_word);

    Ok(TrialSpec {
        config: config.clone(),
        training_set,
        heldout,
        afpo: AfpoConfig {
            population_size: config.population,
            generations: config.generations,
            seed: seed::derive(config.seed, &[tag::AFPO]),
        },
        sim: config.sim_params(),
        repair_delta,
    })
}

/// Per-command objective on the displacement metrics (meters). Forward and
/// backward reward signed x travel; stop penalizes end-point distance in the
/// original regime and total movement (path length) in the balanced one.
pub fn objective(task_kind: TaskKind, regime: Regime, metrics: &DisplacementMetrics) -> f64 {
    match task_kind {
        TaskKind::Forward => metrics.dx,
        TaskKind::Backward => -metrics.dx,
        TaskKind::Stop => match regime {
            Regime::Original => -metrics.dist_from_origin,
            Regime::PerTaskBalanced => -metrics.path_length,
        },
    }
}

/// Records every word primed during optimization; the zero-leak audit
/// checks the held-out command never appears.
#[derive(Debug, Default)]
pub struct PrimeAudit(Mutex<BTreeSet<String>>);

impl PrimeAudit {
    pub fn record(&self, word: &str) {
        self.0.lock().expect("audit lock").insert(word.to_string());
    }

    pub fn words(&self) -> Vec<String> {
        self.0.lock().expect("audit lock").iter().cloned().collect()
    }
}

fn evaluate_command(
    genome: &Genome,
    cmd: &CommandTask,
    regime: Regime,
    sim: &SimParams,
) -> (f64, DisplacementMetrics) {
    let iface = genome.interface();
    let h0 = controller::prime(genome, &cmd.vector);
    match sim::evaluate_metrics(iface, genome, &h0, sim, sim::body_length(iface.id)) {
        Ok(metrics) => (objective(cmd.task_kind, regime, &metrics), metrics),
        // integration blow-up: worst-case score, unbounded-movement sentinel
        Err(_) => {
            let aborted = DisplacementMetrics {
                dx: ABORTED_DISPLACEMENT_BL,
                dist_from_origin: ABORTED_DISPLACEMENT_BL,
                path_length: ABORTED_DISPLACEMENT_BL,
                dx_bl: ABORTED_DISPLACEMENT_BL,
                dist_from_origin_bl: ABORTED_DISPLACEMENT_BL,
                path_length_bl: ABORTED_DISPLACEMENT_BL,
            };
            (WORST_SCORE, aborted)
        }
    }
}

/// Primes with each training command in order, evaluates the closed loop,
/// and scores with the command's objective. Simulator aborts become
/// worst-case scores for that command.
pub fn fitness_vector(genome: &Genome, spec: &TrialSpec) -> Vec<f64> {
    fitness_vector_audited(genome, spec, None)
}

pub fn fitness_vector_audited(
    genome: &Genome,
    spec: &TrialSpec,
    audit: Option<&PrimeAudit>,
) -> Vec<f64> {
    spec.training_set
        .iter()
        .map(|cmd| {
            if let Some(a) = audit {
                a.record(&cmd.word);
            }
            evaluate_command(genome, cmd, spec.config.regime, &spec.sim).0
        })
        .collect()
}

/// Final planar displacement (in body lengths) of a champion primed with the
/// held-out synonym; always non-negative.
pub fn test_champion(genome: &Genome, spec: &TrialSpec) -> f64 {
    let (_, metrics) = evaluate_command(genome, &spec.heldout, spec.config.regime, &spec.sim);
    metrics.dist_from_origin_bl
}

/// One command's outcome for the run champion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandOutcome {
    pub word: String,
    pub task_kind: TaskKind,
    /// Net displacement in body lengths.
    pub displacement_bl: f64,
    /// The command's objective score (meters-based).
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub champion: Individual<Genome>,
    pub per_command: Vec<CommandOutcome>,
    pub test_error_bl: f64,
    pub ledger: Vec<GenerationRecord>,
    /// Sorted set of words primed during optimization.
    pub primed_words: Vec<String>,
}

/// Runs one full trial: AFPO over controller genomes with the trial's
/// evaluator, then champion scoring on every training command and the
/// held-out test.
pub fn run_trial(spec: &TrialSpec) -> TrialResult {
    let iface = spec.config.morphology.interface();
    let audit = PrimeAudit::default();
    let ops = GenomeOps {
        init: |s| controller::new_genome(iface, s),
        mutate: |g: &Genome, s| controller::mutate(g, s),
        evaluate: |g: &Genome| Ok(fitness_vector_audited(g, spec, Some(&audit))),
    };
    let outcome = afpo::run(&spec.afpo, &ops);

    let per_command: Vec<CommandOutcome> = spec
        .training_set
        .iter()
        .map(|cmd| {
            let (score, metrics) =
                evaluate_command(&outcome.champion.genome, cmd, spec.config.regime, &spec.sim);
            CommandOutcome {
                word: cmd.word.clone(),
                task_kind: cmd.task_kind,
                displacement_bl: metrics.dist_from_origin_bl,
                score,
            }
        })
        .collect();
    let test_error_bl = test_champion(&outcome.champion.genome, spec);

    TrialResult {
        champion: outcome.champion,
        per_command,
        test_error_bl,
        ledger: outcome.ledger,
        primed_words: audit.words(),
    }
}

/// The persisted summary record: everything analysis and replay need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub config: TrialConfig,
    pub heldout_word: String,
    pub training_words: Vec<String>,
    pub champion_id: u64,
    pub champion_age: u64,
    pub champion_fitness: f64,
    pub fitness_per_command: Vec<f64>,
    pub per_command: Vec<CommandOutcome>,
    /// Champion means over the move / training-stop commands, body lengths.
    pub move_displacement_bl: f64,
    pub stop_displacement_bl: f64,
    pub test_error_bl: f64,
    pub repair_delta: Option<f64>,
    pub primed_words: Vec<String>,
}

fn mean_over(outcomes: &[CommandOutcome], keep: impl Fn(TaskKind) -> bool) -> f64 {
    let vals: Vec<f64> = outcomes
        .iter()
        .filter(|o| keep(o.task_kind))
        .map(|o| o.displacement_bl)
        .collect();
    if vals.is_empty() {
        f64::NAN
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

pub fn summarize(spec: &TrialSpec, result: &TrialResult) -> TrialSummary {
    TrialSummary {
        config: spec.config.clone(),
        heldout_word: spec.heldout.word.clone(),
        training_words: spec.training_set.iter().map(|c| c.word.clone()).collect(),
        champion_id: result.champion.id,
        champion_age: result.champion.age,
        champion_fitness: result.champion.fitness,
        fitness_per_command: result.champion.fitness_per_command.clone(),
        per_command: result.per_command.clone(),
        move_displacement_bl: mean_over(&result.per_command, |t| {
            matches!(t, TaskKind::Forward | TaskKind::Backward)
        }),
        stop_displacement_bl: mean_over(&result.per_command, |t| matches!(t, TaskKind::Stop)),
        test_error_bl: result.test_error_bl,
        repair_delta: spec.repair_delta,
        primed_words: result.primed_words.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{cosine, Provenance};
    use crate::sim::{displacement_metrics, Trajectory};

    fn quick_config(treatment: Treatment, regime: Regime, seed: u64) -> TrialConfig {
        TrialConfig {
            morphology: MorphologyId::Sphere1dS,
            treatment,
            regime,
            seed,
            population: 5,
            generations: 3,
            embedding_dim: 16,
            embedding_seed: DEFAULT_EMBEDDING_SEED,
            embedding_bin: None,
            steps: 50,
            dt: 0.05,
        }
    }

    fn metrics_to(final_pos: [f64; 2], path: f64) -> DisplacementMetrics {
        let dist = (final_pos[0].powi(2) + final_pos[1].powi(2)).sqrt();
        DisplacementMetrics {
            dx: final_pos[0],
            dist_from_origin: dist,
            path_length: path,
            dx_bl: final_pos[0] / 0.5,
            dist_from_origin_bl: dist / 0.5,
            path_length_bl: path / 0.5,
        }
    }

    #[test]
    fn objective_hand_values() {
        let m = metrics_to([2.0, 0.0], 2.0);
        assert_eq!(objective(TaskKind::Forward, Regime::Original, &m), 2.0);
        let m = metrics_to([3.0, 4.0], 9.0);
        assert_eq!(objective(TaskKind::Stop, Regime::Original, &m), -5.0);
        let m = metrics_to([-1.5, 0.0], 1.5);
        assert_eq!(objective(TaskKind::Backward, Regime::Original, &m), 1.5);
        let m = metrics_to([0.0, 0.0], 7.0);
        assert_eq!(objective(TaskKind::Stop, Regime::PerTaskBalanced, &m), -7.0);
    }

    #[test]
    fn make_trial_is_seed_deterministic() {
        let config = quick_config(Treatment::Control, Regime::Original, 44);
        let a = make_trial(&config).unwrap();
        let b = make_trial(&config).unwrap();
        assert_eq!(a.training_set, b.training_set);
        assert_eq!(a.heldout, b.heldout);
        assert_eq!(a.afpo, b.afpo);
    }

    #[test]
    fn original_regime_trains_on_both_move_words() {
        for seed in 0..30 {
            let spec = make_trial(&quick_config(
                Treatment::Experimental,
                Regime::Original,
                seed,
            ))
            .unwrap();
            assert_eq!(spec.training_set.len(), 5);
            let words: Vec<&str> = spec.training_set.iter().map(|c| c.word.as_str()).collect();
            assert!(words.contains(&"forward"));
            assert!(words.contains(&"backward"));
            assert!(heldout_pool(Regime::Original).contains(&spec.heldout.word.as_str()));
        }
    }

    #[test]
    fn balanced_regime_trains_on_six_commands_without_halt() {
        let mut seen = BTreeSet::new();
        for seed in 0..30 {
            let spec = make_trial(&quick_config(
                Treatment::Experimental,
                Regime::PerTaskBalanced,
                seed,
            ))
            .unwrap();
            assert_eq!(spec.training_set.len(), 6);
            let words: Vec<&str> = spec.training_set.iter().map(|c| c.word.as_str()).collect();
            for w in ["forward", "foward", "backward", "backwards"] {
                assert!(words.contains(&w));
            }
            assert!(!words.contains(&"halt"));
            assert_ne!(spec.heldout.word, "halt");
            seen.insert(spec.heldout.word.clone());
        }
        assert_eq!(seen.len(), 3); // all three stop synonyms get held out
    }

    #[test]
    fn control_treatment_permutes_every_vector() {
        let spec = make_trial(&quick_config(Treatment::Control, Regime::Original, 7)).unwrap();
        let base = make_trial(&quick_config(Treatment::Experimental, Regime::Original, 7)).unwrap();
        for (c, e) in spec
            .training_set
            .iter()
            .chain([&spec.heldout])
            .zip(base.training_set.iter().chain([&base.heldout]))
        {
            assert_eq!(c.word, e.word);
            assert_eq!(c.vector.provenance, Provenance::Permuted);
            let mut a = c.vector.values.clone();
            let mut b = e.vector.values.clone();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b, "multiset changed for {}", c.word);
        }
    }

    #[test]
    fn same_seed_treatments_share_everything_but_vector_values() {
        for seed in [3, 19, 71] {
            let e = make_trial(&quick_config(
                Treatment::Experimental,
                Regime::Original,
                seed,
            ))
            .unwrap();
            let c = make_trial(&quick_config(Treatment::Control, Regime::Original, seed)).unwrap();
            assert_eq!(e.heldout.word, c.heldout.word);
            assert_eq!(e.afpo.seed, c.afpo.seed);
            let ew: Vec<&str> = e.training_set.iter().map(|t| t.word.as_str()).collect();
            let cw: Vec<&str> = c.training_set.iter().map(|t| t.word.as_str()).collect();
            assert_eq!(ew, cw);
        }
    }

    #[test]
    fn balanced_within_task_cosines_track_the_target() {
        let spec = make_trial(&quick_config(
            Treatment::Experimental,
            Regime::PerTaskBalanced,
            5,
        ))
        .unwrap();
        let tol = spec.repair_delta.unwrap() + 1e-6;
        assert!(spec.repair_delta.unwrap() < 1e-9, "balanced gram is PSD");
        let find = |w: &str| {
            spec.training_set
                .iter()
                .chain([&spec.heldout])
                .find(|c| c.word == w)
                .map(|c| c.vector.values.clone())
        };
        for (a, b) in [("forward", "foward"), ("backward", "backwards")] {
            let (va, vb) = (find(a).unwrap(), find(b).unwrap());
            let c = cosine(&va, &vb).unwrap();
            assert!((c - 0.55).abs() <= tol, "cos({a},{b}) = {c}");
        }
    }

    #[test]
    fn zero_genome_scores_zero_on_every_command() {
        for regime in [Regime::Original, Regime::PerTaskBalanced] {
            let spec = make_trial(&quick_config(Treatment::Experimental, regime, 1)).unwrap();
            let g = Genome::zeros(spec.config.morphology.interface());
            let scores = fitness_vector(&g, &spec);
            assert_eq!(scores.len(), spec.training_set.len());
            for s in scores {
                assert!(s.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fitness_vector_is_covariant_with_training_order() {
        let spec = make_trial(&quick_config(Treatment::Experimental, Regime::Original, 8)).unwrap();
        let g = controller::new_genome(spec.config.morphology.interface(), 21);
        let base = fitness_vector(&g, &spec);
        let mut reordered = spec.clone();
        reordered.training_set.reverse();
        let rev = fitness_vector(&g, &reordered);
        let mut base_rev = base.clone();
        base_rev.reverse();
        assert_eq!(rev, base_rev);
    }

    #[test]
    fn test_error_is_nonnegative_and_reproducible() {
        let spec =
            make_trial(&quick_config(Treatment::Experimental, Regime::Original, 13)).unwrap();
        let g = controller::new_genome(spec.config.morphology.interface(), 2);
        let a = test_champion(&g, &spec);
        let b = test_champion(&g, &spec);
        assert!(a >= 0.0);
        assert_eq!(a, b);
        let zero = Genome::zeros(spec.config.morphology.interface());
        assert!(test_champion(&zero, &spec) < 1e-9);
    }

    #[test]
    fn run_trial_audits_only_training_words() {
        let spec =
            make_trial(&quick_config(Treatment::Experimental, Regime::Original, 23)).unwrap();
        let result = run_trial(&spec);
        let mut training: Vec<String> = spec.training_set.iter().map(|c| c.word.clone()).collect();
        training.sort();
        assert_eq!(result.primed_words, training);
        assert!(!result.primed_words.contains(&spec.heldout.word));
        assert_eq!(result.ledger.len(), spec.afpo.generations);
        assert_eq!(result.per_command.len(), spec.training_set.len());
    }

    #[test]
    fn summaries_are_byte_identical_across_reruns() {
        let config = quick_config(Treatment::Control, Regime::Original, 99);
        let spec = make_trial(&config).unwrap();
        let a = serde_json::to_string_pretty(&summarize(&spec, &run_trial(&spec))).unwrap();
        let b = serde_json::to_string_pretty(&summarize(&spec, &run_trial(&spec))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation_names_the_offending_key() {
        let mut config = quick_config(Treatment::Experimental, Regime::Original, 0);
        config.generations = 0;
        match config.validate() {
            Err(ProtocolError::BadConfig { key, .. }) => assert_eq!(key, "generations"),
            other => panic!("expected config error, got {other:?}"),
        }
        let mut config = quick_config(Treatment::Experimental, Regime::Original, 0);
        config.embedding_dim = 3;
        assert!(matches!(
            config.validate(),
            Err(ProtocolError::BadConfig {
                key: "embedding_dim",
                ..
            })
        ));
    }

    #[test]
    fn stationary_trajectory_yields_zero_test_error() {
        // a trajectory that never leaves the origin scores zero displacement
        let t = Trajectory {
            poses: vec![crate::sim::BodyPose::origin_at_height(0.25); 3],
            joints: vec![vec![0.0]; 3],
            sensor_log: vec![vec![]; 2],
            motor_log: vec![vec![0.0]; 2],
            dt: 0.05,
        };
        let m = displacement_metrics(&t, 0.5);
        assert_eq!(objective(TaskKind::Stop, Regime::Original, &m), 0.0);
    }
}
