//! Grouped analysis of run champions: medians with bootstrapped confidence
//! intervals per (morphology, regime, treatment) and the pairwise
//! Mann-Whitney grid with Holm correction across the whole comparison
//! family.
//!
//! Each panel (morphology x regime) with both treatments registers eight
//! comparisons: move-vs-stop within each treatment, stop-vs-test within
//! each treatment, the three cross-treatment displacement comparisons, and
//! the cross-treatment training-performance comparison. The standard
//! experiment grid — six morphologies in the original regime plus the
//! balanced quadruped — therefore registers exactly 56.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::MorphologyId;
use crate::protocol::{Regime, Treatment, TrialSummary};
use crate::seed;
use crate::stats::{
    bootstrap_median_ci, holm_bonferroni, mann_whitney_u, median, significance_tier, MwuMethod,
    StatsError, EXACT_LIMIT,
};

pub const BOOTSTRAP_ITERATIONS: usize = 10_000;
pub const BOOTSTRAP_SEED: u64 = 0x616E616C;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Comparisons registered by the standard experiment grid.
pub const STANDARD_GRID_COMPARISONS: usize = 56;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("comparison budget mismatch: declared {declared}, registered {registered}")]
    BudgetMismatch { declared: usize, registered: usize },
    #[error("no champion rows to analyze")]
    NoData,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One run champion's measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionRow {
    pub morphology: MorphologyId,
    pub regime: Regime,
    pub treatment: Treatment,
    pub seed: u64,
    pub move_bl: f64,
    pub stop_bl: f64,
    pub test_bl: f64,
    pub training_fitness: f64,
}

impl ChampionRow {
    pub fn from_summary(s: &TrialSummary) -> Self {
        Self {
            morphology: s.config.morphology,
            regime: s.config.regime,
            treatment: s.config.treatment,
            seed: s.config.seed,
            move_bl: s.move_displacement_bl,
            stop_bl: s.stop_displacement_bl,
            test_bl: s.test_error_bl,
            training_fitness: s.champion_fitness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Move,
    Stop,
    Test,
    TrainFitness,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Move,
        Measure::Stop,
        Measure::Test,
        Measure::TrainFitness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Move => "move",
            Measure::Stop => "stop",
            Measure::Test => "test",
            Measure::TrainFitness => "train_fitness",
        }
    }

    fn of(self, row: &ChampionRow) -> f64 {
        match self {
            Measure::Move => row.move_bl,
            Measure::Stop => row.stop_bl,
            Measure::Test => row.test_bl,
            Measure::TrainFitness => row.training_fitness,
        }
    }
}

fn treatment_token(t: Treatment) -> &'static str {
    match t {
        Treatment::Experimental => "e",
        Treatment::Control => "c",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group_id: String,
    pub morphology: MorphologyId,
    pub regime: Regime,
    pub treatment: Treatment,
    pub measure: Measure,
    pub n: usize,
    pub median: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub comparison_id: String,
    pub group_a: String,
    pub group_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub u: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub reject: bool,
    pub significance_tier: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub morphology: MorphologyId,
    pub regime: Regime,
    pub treatment: Treatment,
    pub measure: Measure,
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub groups: Vec<GroupRow>,
    pub comparisons: Vec<ComparisonRow>,
    pub long: Vec<LongRow>,
    pub warnings: Vec<String>,
    pub alpha: f64,
}

struct Panel {
    morphology: MorphologyId,
    regime: Regime,
}

fn panels(rows: &[ChampionRow]) -> Vec<Panel> {
    let mut keys: Vec<(usize, Regime)> = Vec::new();
    for row in rows {
        let rank = MorphologyId::ALL
            .iter()
            .position(|m| *m == row.morphology)
            .expect("known morphology");
        if !keys.contains(&(rank, row.regime)) {
            keys.push((rank, row.regime));
        }
    }
    keys.sort_by_key(|&(m, r)| (m, r != Regime::Original));
    keys.into_iter()
        .map(|(m, regime)| Panel {
            morphology: MorphologyId::ALL[m],
            regime,
        })
        .collect()
}

fn sample(rows: &[ChampionRow], panel: &Panel, t: Treatment, m: Measure) -> Vec<f64> {
    rows.iter()
        .filter(|r| {
            r.morphology == panel.morphology && r.regime == panel.regime && r.treatment == t
        })
        .map(|r| m.of(r))
        .collect()
}

fn group_id(panel: &Panel, t: Treatment, m: Measure) -> String {
    format!(
        "{}/{}/{}/{}",
        panel.morphology.as_str(),
        panel.regime.as_str(),
        treatment_token(t),
        m.as_str()
    )
}

struct PlannedComparison {
    comparison_id: String,
    group_a: String,
    group_b: String,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Builds the full analysis. `declared_budget`, when given, must match the
/// number of comparisons actually performed.
pub fn analyze(
    rows: &[ChampionRow],
    alpha: f64,
    declared_budget: Option<usize>,
) -> Result<AnalysisReport, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::NoData);
    }
    let panels = panels(rows);
    let mut warnings = Vec::new();

    // group medians + CIs
    let mut groups = Vec::new();
    let mut long = Vec::new();
    for panel in &panels {
        for &t in &[Treatment::Experimental, Treatment::Control] {
            let present = rows.iter().any(|r| {
                r.morphology == panel.morphology && r.regime == panel.regime && r.treatment == t
            });
            if !present {
                return Err(ReportError::EmptyGroup(format!(
                    "{}/{}/{}",
                    panel.morphology.as_str(),
                    panel.regime.as_str(),
                    t.as_str()
                )));
            }
            for m in Measure::ALL {
                let values = sample(rows, panel, t, m);
                let id = group_id(panel, t, m);
                let ci_seed = seed::derive_bytes(BOOTSTRAP_SEED, id.as_bytes());
                let (ci_lo, ci_hi) = bootstrap_median_ci(&values, BOOTSTRAP_ITERATIONS, ci_seed)?;
                groups.push(GroupRow {
                    group_id: id,
                    morphology: panel.morphology,
                    regime: panel.regime,
                    treatment: t,
                    measure: m,
                    n: values.len(),
                    median: median(&values),
                    ci_lo,
                    ci_hi,
                });
            }
            let seeds: Vec<u64> = rows
                .iter()
                .filter(|r| {
                    r.morphology == panel.morphology && r.regime == panel.regime && r.treatment == t
                })
                .map(|r| r.seed)
                .collect();
            for m in Measure::ALL {
                let values = sample(rows, panel, t, m);
                for (&s, &v) in seeds.iter().zip(values.iter()) {
                    long.push(LongRow {
                        morphology: panel.morphology,
                        regime: panel.regime,
                        treatment: t,
                        measure: m,
                        seed: s,
                        value: v,
                    });
                }
            }
        }
    }

    // the comparison family
    let mut planned: Vec<PlannedComparison> = Vec::new();
    let plan = |panel: &Panel,
                (ma, ta): (Measure, Treatment),
                (mb, tb): (Measure, Treatment),
                planned: &mut Vec<PlannedComparison>,
                warnings: &mut Vec<String>| {
        let a = sample(rows, panel, ta, ma);
        let b = sample(rows, panel, tb, mb);
        let comparison_id = format!(
            "{}/{}/{}_{}_vs_{}_{}",
            panel.morphology.as_str(),
            panel.regime.as_str(),
            ma.as_str(),
            treatment_token(ta),
            mb.as_str(),
            treatment_token(tb)
        );
        if a.len() < 2 || b.len() < 2 {
            warnings.push(format!(
                "{comparison_id}: skipped, single-trial group (n_a={}, n_b={})",
                a.len(),
                b.len()
            ));
            return;
        }
        planned.push(PlannedComparison {
            comparison_id,
            group_a: group_id(panel, ta, ma),
            group_b: group_id(panel, tb, mb),
            a,
            b,
        });
    };

    use Measure::{Move, Stop, Test, TrainFitness};
    use Treatment::{Control as C, Experimental as E};
    for panel in &panels {
        plan(panel, (Move, E), (Stop, E), &mut planned, &mut warnings);
        plan(panel, (Move, C), (Stop, C), &mut planned, &mut warnings);
        plan(panel, (Stop, E), (Test, E), &mut planned, &mut warnings);
        plan(panel, (Stop, C), (Test, C), &mut planned, &mut warnings);
        plan(panel, (Move, E), (Move, C), &mut planned, &mut warnings);
        plan(panel, (Stop, E), (Stop, C), &mut planned, &mut warnings);
        plan(panel, (Test, E), (Test, C), &mut planned, &mut warnings);
        plan(
            panel,
            (TrainFitness, E),
            (TrainFitness, C),
            &mut planned,
            &mut warnings,
        );
    }

    if let Some(declared) = declared_budget {
        if planned.len() != declared {
            return Err(ReportError::BudgetMismatch {
                declared,
                registered: planned.len(),
            });
        }
    }

    let mut results = Vec::with_capacity(planned.len());
    for p in &planned {
        let method = if p.a.len() + p.b.len() <= EXACT_LIMIT {
            MwuMethod::Exact
        } else {
            MwuMethod::NormalApprox
        };
        results.push(mann_whitney_u(&p.a, &p.b, method)?);
    }
    let raw_p: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    let correction = if raw_p.is_empty() {
        None
    } else {
        Some(holm_bonferroni(&raw_p, alpha)?)
    };

    let comparisons = planned
        .iter()
        .zip(results.iter())
        .enumerate()
        .map(|(i, (p, r))| {
            let (p_adjusted, reject) = match &correction {
                Some(c) => (c.adjusted_p[i], c.reject[i]),
                None => (r.p_value, false),
            };
            ComparisonRow {
                comparison_id: p.comparison_id.clone(),
                group_a: p.group_a.clone(),
                group_b: p.group_b.clone(),
                n_a: r.n1,
                n_b: r.n2,
                u: r.u_statistic,
                p_raw: r.p_value,
                p_adjusted,
                reject,
                significance_tier: significance_tier(p_adjusted).to_string(),
            }
        })
        .collect();

    Ok(AnalysisReport {
        groups,
        comparisons,
        long,
        warnings,
        alpha,
    })
}

pub fn comparisons_csv(report: &AnalysisReport) -> String {
    let mut out = String::from(
        "comparison_id,group_a,group_b,n_a,n_b,U,p_raw,p_adjusted,reject,significance_tier\n",
    );
    for c in &report.comparisons {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            c.comparison_id,
            c.group_a,
            c.group_b,
            c.n_a,
            c.n_b,
            c.u,
            c.p_raw,
            c.p_adjusted,
            c.reject,
            c.significance_tier
        ));
    }
    out
}

pub fn groups_csv(report: &AnalysisReport) -> String {
    let mut out =
        String::from("group_id,morphology,regime,treatment,measure,n,median,ci_lo,ci_hi\n");
    for g in &report.groups {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            g.group_id,
            g.morphology.as_str(),
            g.regime.as_str(),
            g.treatment.as_str(),
            g.measure.as_str(),
            g.n,
            g.median,
            g.ci_lo,
            g.ci_hi
        ));
    }
    out
}

/// Plot-ready long format: one row per champion per measure.
pub fn long_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("morphology,regime,treatment,measure,seed,value\n");
    for r in &report.long {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.morphology.as_str(),
            r.regime.as_str(),
            r.treatment.as_str(),
            r.measure.as_str(),
            r.seed,
            r.value
        ));
    }
    out
}
