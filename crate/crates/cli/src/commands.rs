//! The five subcommands.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Subcommand};
use rayon::prelude::*;

use grounding_core::afpo::GenerationRecord;
use grounding_core::controller::{
    parse_genome, prime_step, write_genome, HiddenState, MorphologyId,
};
use grounding_core::embeddings::{
    cosine, parse_word2vec_bin, synthesize_from_gram, write_word2vec_bin, EmbeddingTable, GramSpec,
};
use grounding_core::protocol::{
    self, balanced_gram, make_trial, original_gram, run_trial, summarize, Regime, Treatment,
    TrialConfig, TrialSpec, TrialSummary,
};
use grounding_core::report::{self, ChampionRow};
use grounding_core::sim::{body_length, displacement_metrics, evaluate, trajectory_csv};

use crate::batch::{load_manifest, trial_dir, IndexEntry, TrialStatus};
use crate::failure::Failure;
use crate::iofs::{self, TrialPaths};

// ---------------------------------------------------------------------------
// run

#[derive(Args)]
pub struct RunArgs {
    /// Trial configuration file (flat TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's treatment (experimental | control).
    #[arg(long)]
    pub treatment: Option<String>,
    /// Override the config's morphology.
    #[arg(long)]
    pub morphology: Option<String>,
    /// Override the config's regime (original | per_task_balanced).
    #[arg(long)]
    pub regime: Option<String>,
    /// Output directory (default: trial-<morphology>-<regime>-<treatment>-<seed>).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_override<T>(
    what: &str,
    value: &Option<String>,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Option<T>, Failure> {
    match value {
        None => Ok(None),
        Some(s) => parse(s)
            .map(Some)
            .ok_or_else(|| Failure::invalid(format!("unknown {what} {s:?}"))),
    }
}

fn load_config(args: &RunArgs) -> Result<TrialConfig, Failure> {
    let text = iofs::read_to_string(&args.config)?;
    let mut config: TrialConfig = toml::from_str(&text)
        .map_err(|e| Failure::invalid(format!("config {}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(t) = parse_override("treatment", &args.treatment, Treatment::parse)? {
        config.treatment = t;
    }
    if let Some(m) = parse_override("morphology", &args.morphology, MorphologyId::parse)? {
        config.morphology = m;
    }
    if let Some(r) = parse_override("regime", &args.regime, Regime::parse)? {
        config.regime = r;
    }
    config
        .validate()
        .map_err(|e| Failure::invalid(e.to_string()))?;
    Ok(config)
}

fn ledger_csv(ledger: &[GenerationRecord]) -> String {
    let mut out = String::from(GenerationRecord::CSV_HEADER);
    out.push('\n');
    for record in ledger {
        out.push_str(&record.to_csv_line());
        out.push('\n');
    }
    out
}

/// Executes one trial and persists champion, ledger, and summary.
fn execute_trial(config: &TrialConfig, paths: &TrialPaths) -> Result<TrialSummary, Failure> {
    let spec = make_trial(config).map_err(|e| Failure::invalid(e.to_string()))?;
    let result = run_trial(&spec);
    let summary = summarize(&spec, &result);

    iofs::write_atomic(
        &paths.champion(),
        write_genome(&result.champion.genome).as_bytes(),
    )?;
    iofs::write_atomic(&paths.ledger(), ledger_csv(&result.ledger).as_bytes())?;
    let mut json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Failure::partial(format!("serializing summary: {e}")))?;
    json.push('\n');
    iofs::write_atomic(&paths.summary(), json.as_bytes())?;
    Ok(summary)
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let config = load_config(&args)?;
    let dir = args.out.clone().unwrap_or_else(|| {
        PathBuf::from(iofs::trial_dir_name(
            config.morphology.as_str(),
            config.regime.as_str(),
            config.treatment.as_str(),
            config.seed,
        ))
    });
    let paths = TrialPaths::new(dir);
    let summary = execute_trial(&config, &paths)?;
    println!(
        "trial {}/{}/{}/{}: champion fitness {:.6}, test error {:.6} BL -> {}",
        config.morphology.as_str(),
        config.regime.as_str(),
        config.treatment.as_str(),
        config.seed,
        summary.champion_fitness,
        summary.test_error_bl,
        paths.dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// batch

#[derive(Args)]
pub struct BatchArgs {
    /// Batch manifest (TOML with [defaults] and [[trials]]).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Max trials in flight.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Output root (default: the manifest's out_dir, else "results").
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn already_done(paths: &TrialPaths, config: &TrialConfig) -> bool {
    let Ok(text) = std::fs::read_to_string(paths.summary()) else {
        return false;
    };
    match serde_json::from_str::<TrialSummary>(&text) {
        Ok(summary) => summary.config == *config,
        Err(_) => false,
    }
}

pub fn batch(args: BatchArgs) -> Result<(), Failure> {
    if args.parallel == 0 {
        return Err(Failure::invalid("--parallel must be >= 1"));
    }
    let (manifest, configs) = load_manifest(&args.manifest)?;
    let out_root = args
        .out
        .clone()
        .or_else(|| manifest.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));

    let entries: Mutex<Vec<IndexEntry>> = Mutex::new(Vec::with_capacity(configs.len()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.parallel)
        .build()
        .map_err(|e| Failure::partial(format!("thread pool: {e}")))?;

    pool.install(|| {
        configs.par_iter().for_each(|config| {
            let dir = trial_dir(&out_root, config);
            let paths = TrialPaths::new(dir.clone());
            let (status, message) = if already_done(&paths, config) {
                (TrialStatus::SkippedAlreadyDone, None)
            } else {
                match execute_trial(config, &paths) {
                    Ok(_) => (TrialStatus::Done, None),
                    Err(e) => (TrialStatus::Failed, Some(e.message().to_string())),
                }
            };
            entries.lock().expect("index lock").push(IndexEntry {
                dir: dir.display().to_string(),
                morphology: config.morphology,
                regime: config.regime,
                treatment: config.treatment,
                seed: config.seed,
                status,
                message,
            });
        });
    });

    let mut entries = entries.into_inner().expect("index lock");
    entries.sort_by(|a, b| a.dir.cmp(&b.dir));
    let mut index_json =
        serde_json::to_string_pretty(&entries).map_err(|e| Failure::partial(e.to_string()))?;
    index_json.push('\n');
    iofs::write_atomic(&out_root.join("batch_index.json"), index_json.as_bytes())?;

    let done = entries
        .iter()
        .filter(|e| matches!(e.status, TrialStatus::Done))
        .count();
    let skipped = entries
        .iter()
        .filter(|e| matches!(e.status, TrialStatus::SkippedAlreadyDone))
        .count();
    let failed: Vec<&IndexEntry> = entries
        .iter()
        .filter(|e| matches!(e.status, TrialStatus::Failed))
        .collect();
    println!(
        "batch: {done} run, {skipped} already done, {} failed -> {}",
        failed.len(),
        out_root.display()
    );
    if !failed.is_empty() {
        for entry in &failed {
            eprintln!(
                "failed: {} ({})",
                entry.dir,
                entry.message.as_deref().unwrap_or("unknown error")
            );
        }
        return Err(Failure::partial(format!(
            "{} trial(s) failed",
            failed.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Directory holding trial output directories.
    pub results: PathBuf,
    /// Family-wise error rate.
    #[arg(long, default_value_t = report::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Declared comparison budget; the analysis errors if the registered
    /// count differs (the standard grid registers 56).
    #[arg(long)]
    pub budget: Option<usize>,
    /// Output directory (default: <results>/analysis).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn collect_summaries(root: &Path) -> Vec<TrialSummary> {
    let mut summaries = Vec::new();
    let Ok(entries) = std::fs::read_dir(root) else {
        return summaries;
    };
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let summary_path = dir.join("summary.json");
        if let Ok(text) = std::fs::read_to_string(&summary_path) {
            if let Ok(summary) = serde_json::from_str::<TrialSummary>(&text) {
                summaries.push(summary);
            }
        }
    }
    summaries
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let summaries = collect_summaries(&args.results);
    if summaries.is_empty() {
        return Err(Failure::partial(format!(
            "no completed trials found under {}",
            args.results.display()
        )));
    }
    let rows: Vec<ChampionRow> = summaries.iter().map(ChampionRow::from_summary).collect();
    let report = report::analyze(&rows, args.alpha, args.budget)
        .map_err(|e| Failure::partial(e.to_string()))?;

    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| args.results.join("analysis"));
    iofs::write_atomic(
        &out_dir.join("comparisons.csv"),
        report::comparisons_csv(&report).as_bytes(),
    )?;
    iofs::write_atomic(
        &out_dir.join("groups.csv"),
        report::groups_csv(&report).as_bytes(),
    )?;
    iofs::write_atomic(
        &out_dir.join("long.csv"),
        report::long_csv(&report).as_bytes(),
    )?;

    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "analyzed {} trials: {} groups, {} comparisons -> {}",
        summaries.len(),
        report.groups.len(),
        report.comparisons.len(),
        out_dir.display()
    );
    for c in report.comparisons.iter().filter(|c| c.reject) {
        println!(
            "  {} p_adj={:.4e} {}",
            c.comparison_id, c.p_adjusted, c.significance_tier
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// replay

#[derive(Args)]
pub struct ReplayArgs {
    /// A trial output directory (with summary.json and champion.txt).
    #[arg(long)]
    pub trial: PathBuf,
    /// Command word to prime with (training or held-out).
    #[arg(long)]
    pub word: String,
    /// Output directory (default: the trial directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn hidden_csv(spec: &TrialSpec, genome: &grounding_core::Genome, word: &str) -> Option<String> {
    let cmd = spec
        .training_set
        .iter()
        .chain([&spec.heldout])
        .find(|c| c.word == word)?;
    let mut out = String::from("element,input,h0,h1,h2,h3,h4\n");
    let mut h = HiddenState::zero();
    for (i, &x) in cmd.vector.values.iter().enumerate() {
        h = prime_step(genome, &h, x);
        out.push_str(&format!(
            "{i},{x:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
            h.h[0], h.h[1], h.h[2], h.h[3], h.h[4]
        ));
    }
    Some(out)
}

pub fn replay(args: ReplayArgs) -> Result<(), Failure> {
    let paths = TrialPaths::new(args.trial.clone());
    let summary_text = iofs::read_to_string(&paths.summary())?;
    let summary: TrialSummary = serde_json::from_str(&summary_text)
        .map_err(|e| Failure::invalid(format!("summary.json: {e}")))?;
    let spec = make_trial(&summary.config).map_err(|e| Failure::invalid(e.to_string()))?;
    if spec.heldout.word != summary.heldout_word {
        return Err(Failure::partial(format!(
            "stored summary is inconsistent: held-out word {} vs rebuilt {}",
            summary.heldout_word, spec.heldout.word
        )));
    }
    let genome = parse_genome(&iofs::read_to_string(&paths.champion())?)
        .map_err(|e| Failure::invalid(format!("champion.txt: {e}")))?;

    let Some(hidden) = hidden_csv(&spec, &genome, &args.word) else {
        return Err(Failure::invalid(format!(
            "word {:?} is not part of this trial's command universe",
            args.word
        )));
    };
    let cmd = spec
        .training_set
        .iter()
        .chain([&spec.heldout])
        .find(|c| c.word == args.word)
        .expect("checked above");

    let h0 = grounding_core::controller::prime(&genome, &cmd.vector);
    let iface = spec.config.morphology.interface();
    let trajectory = evaluate(iface, &genome, &h0, &spec.sim)
        .map_err(|e| Failure::partial(format!("replay evaluation aborted: {e}")))?;
    let metrics = displacement_metrics(&trajectory, body_length(iface.id));
    let score = protocol::objective(cmd.task_kind, spec.config.regime, &metrics);

    let out_dir = args.out.clone().unwrap_or_else(|| args.trial.clone());
    let stem = format!("replay-{}", args.word);
    iofs::write_atomic(
        &out_dir.join(format!("{stem}-trajectory.csv")),
        trajectory_csv(&trajectory).as_bytes(),
    )?;
    iofs::write_atomic(
        &out_dir.join(format!("{stem}-hidden.csv")),
        hidden.as_bytes(),
    )?;
    println!(
        "replay {:?}: displacement {:.9} BL, dx {:.9} BL, objective {:.9}",
        args.word, metrics.dist_from_origin_bl, metrics.dx_bl, score
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// embed

#[derive(Subcommand)]
pub enum EmbedCmd {
    /// Synthesize unit vectors matching a Gram matrix and write them as a
    /// word2vec binary.
    Synth(SynthArgs),
    /// Cosine similarity between two words of a word2vec binary.
    Cos(CosArgs),
}

#[derive(Args)]
pub struct SynthArgs {
    /// Gram CSV (labels line + matrix rows), or "original" / "balanced" for
    /// the builtin command sets.
    #[arg(long)]
    pub gram: String,
    #[arg(long, default_value_t = protocol::DEFAULT_EMBEDDING_DIM)]
    pub dim: usize,
    #[arg(long, default_value_t = protocol::DEFAULT_EMBEDDING_SEED)]
    pub seed: u64,
    /// Output path for the word2vec binary.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CosArgs {
    /// word2vec binary file.
    pub file: PathBuf,
    pub word_a: String,
    pub word_b: String,
}

fn load_gram(spec: &str) -> Result<GramSpec, Failure> {
    match spec {
        "original" => Ok(original_gram()),
        "balanced" => Ok(balanced_gram()),
        path => {
            let text = iofs::read_to_string(Path::new(path))?;
            GramSpec::from_csv(&text).map_err(|e| Failure::invalid(e.to_string()))
        }
    }
}

pub fn embed(cmd: EmbedCmd) -> Result<(), Failure> {
    match cmd {
        EmbedCmd::Synth(args) => {
            let gram = load_gram(&args.gram)?;
            let (vectors, repair) = synthesize_from_gram(&gram, args.dim, args.seed)
                .map_err(|e| Failure::invalid(e.to_string()))?;
            let mut table = EmbeddingTable::new(args.dim);
            for v in &vectors {
                let raw: Vec<f32> = v.values.iter().map(|&x| x as f32).collect();
                table
                    .insert(v.label.clone(), &raw)
                    .map_err(|e| Failure::invalid(e.to_string()))?;
            }
            let mut bytes = Vec::new();
            write_word2vec_bin(&table, &mut bytes)
                .map_err(|e| Failure::partial(format!("serializing table: {e}")))?;
            iofs::write_atomic(&args.out, &bytes)?;
            if repair.max_abs_delta > 1e-12 {
                eprintln!(
                    "note: gram required PSD repair (min eigenvalue {:.3e}, max entry delta {:.3e})",
                    repair.min_eigenvalue_before, repair.max_abs_delta
                );
            }
            println!(
                "wrote {} vectors of dimension {} -> {}",
                table.len(),
                args.dim,
                args.out.display()
            );
            Ok(())
        }
        EmbedCmd::Cos(args) => {
            let bytes = std::fs::read(&args.file)
                .map_err(|e| Failure::invalid(format!("reading {}: {e}", args.file.display())))?;
            let table = parse_word2vec_bin(bytes.as_slice())
                .map_err(|e| Failure::invalid(e.to_string()))?;
            let a = table
                .lookup(&args.word_a)
                .map_err(|e| Failure::invalid(e.to_string()))?;
            let b = table
                .lookup(&args.word_b)
                .map_err(|e| Failure::invalid(e.to_string()))?;
            let c = cosine(&a.values, &b.values).map_err(|e| Failure::invalid(e.to_string()))?;
            println!("{c:.6}");
            Ok(())
        }
    }
}
