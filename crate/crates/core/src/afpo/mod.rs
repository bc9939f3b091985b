//! Age-Fitness Pareto Optimization.
//!
//! Selection keeps the Pareto front of (maximize aggregate fitness, minimize
//! age). Each generation every member spawns one single-mutation child that
//! inherits its parent's age, one random age-0 newborn is injected, and the
//! doubled pool is truncated back to size N. The module is generic over the
//! genome representation; the experiment instantiates it with controller
//! genomes, tests with whatever is convenient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::{self, tag};

/// Unit of selection: a genome plus its age and evaluated fitness.
/// `fitness` is the mean of `fitness_per_command`; a failed evaluation
/// leaves the vector empty and the aggregate at -inf (worst case).
#[derive(Debug, Clone, PartialEq)]
pub struct Individual<G> {
    pub genome: G,
    pub age: u64,
    pub fitness_per_command: Vec<f64>,
    pub fitness: f64,
    pub id: u64,
}

/// Strict Pareto dominance on (fitness up, age down).
pub fn pareto_dominates<G>(a: &Individual<G>, b: &Individual<G>) -> bool {
    (a.fitness >= b.fitness && a.age <= b.age) && (a.fitness > b.fitness || a.age < b.age)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AfpoConfig {
    pub population_size: usize,
    pub generations: usize,
    pub seed: u64,
}

/// Per-generation ledger record, written after truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub front_size: usize,
    pub age_min: u64,
    pub age_median: u64,
    pub age_max: u64,
    /// Members that survived truncation while dominated (possible when the
    /// pool reaches size N with dominated members still present).
    pub dominated_survivors: usize,
}

impl GenerationRecord {
    pub const CSV_HEADER: &'static str =
        "generation,best_fitness,mean_fitness,front_size,age_min,age_median,age_max,dominated_survivors";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.generation,
            self.best_fitness,
            self.mean_fitness,
            self.front_size,
            self.age_min,
            self.age_median,
            self.age_max,
            self.dominated_survivors
        )
    }

    pub fn from_csv_line(line: &str) -> Option<Self> {
        let mut cells = line.split(',');
        let record = GenerationRecord {
            generation: cells.next()?.parse().ok()?,
            best_fitness: cells.next()?.parse().ok()?,
            mean_fitness: cells.next()?.parse().ok()?,
            front_size: cells.next()?.parse().ok()?,
            age_min: cells.next()?.parse().ok()?,
            age_median: cells.next()?.parse().ok()?,
            age_max: cells.next()?.parse().ok()?,
            dominated_survivors: cells.next()?.parse().ok()?,
        };
        cells.next().is_none().then_some(record)
    }
}

/// Parses a ledger document (header + one line per generation).
pub fn parse_ledger_csv(text: &str) -> Option<Vec<GenerationRecord>> {
    let mut lines = text.lines();
    if lines.next()? != GenerationRecord::CSV_HEADER {
        return None;
    }
    lines.map(GenerationRecord::from_csv_line).collect()
}

#[derive(Debug, Clone)]
pub struct Population<G> {
    pub members: Vec<Individual<G>>,
    pub generation: usize,
    next_id: u64,
}

#[derive(Debug, Clone)]
pub struct RunResult<G> {
    /// Highest aggregate fitness ever observed across the whole run.
    pub champion: Individual<G>,
    pub ledger: Vec<GenerationRecord>,
    pub final_population: Population<G>,
}

/// The three genome operations AFPO needs. `evaluate` failures map to
/// worst-case fitness.
pub struct GenomeOps<G, FI, FM, FE>
where
    FI: Fn(u64) -> G + Sync,
    FM: Fn(&G, u64) -> G + Sync,
    FE: Fn(&G) -> Result<Vec<f64>, String> + Sync,
{
    pub init: FI,
    pub mutate: FM,
    pub evaluate: FE,
}

fn aggregate(per_command: &[f64]) -> f64 {
    if per_command.is_empty() {
        return f64::NEG_INFINITY;
    }
    per_command.iter().sum::<f64>() / per_command.len() as f64
}

fn evaluated<G, FE>(genome: G, age: u64, id: u64, evaluate: &FE) -> Individual<G>
where
    FE: Fn(&G) -> Result<Vec<f64>, String> + Sync,
{
    let fitness_per_command = evaluate(&genome).unwrap_or_default();
    let fitness = aggregate(&fitness_per_command);
    Individual {
        genome,
        age,
        fitness_per_command,
        fitness,
        id,
    }
}

fn dominated_indices<G>(pool: &[Individual<G>]) -> Vec<usize> {
    (0..pool.len())
        .filter(|&i| {
            pool.iter()
                .enumerate()
                .any(|(j, other)| j != i && pareto_dominates(other, &pool[i]))
        })
        .collect()
}

/// Index of the designated maximum-fitness individual (ties broken toward
/// younger age, then lower id); never removed during truncation.
fn champion_index<G>(pool: &[Individual<G>]) -> usize {
    let mut best = 0;
    for i in 1..pool.len() {
        let (a, b) = (&pool[i], &pool[best]);
        if a.fitness > b.fitness
            || (a.fitness == b.fitness && (a.age < b.age || (a.age == b.age && a.id < b.id)))
        {
            best = i;
        }
    }
    best
}

/// Ages every survivor, spawns one mutated child per member plus one age-0
/// newborn, and evaluates the additions in parallel (order-preserving, so
/// the result is schedule-independent). Pool size is 2N + 1.
pub fn offspring_pool<G, FI, FM, FE>(
    pop: &mut Population<G>,
    run_seed: u64,
    ops: &GenomeOps<G, FI, FM, FE>,
) -> Vec<Individual<G>>
where
    G: Clone + Send + Sync,
    FI: Fn(u64) -> G + Sync,
    FM: Fn(&G, u64) -> G + Sync,
    FE: Fn(&G) -> Result<Vec<f64>, String> + Sync,
{
    let generation = pop.generation as u64;
    for member in &mut pop.members {
        member.age += 1;
    }
    let mut fresh: Vec<(G, u64, u64)> = Vec::with_capacity(pop.members.len() + 1);
    for parent in &pop.members {
        let child_seed = seed::derive(run_seed, &[tag::MUTATE, generation, parent.id]);
        let genome = (ops.mutate)(&parent.genome, child_seed);
        fresh.push((genome, parent.age, pop.next_id));
        pop.next_id += 1;
    }
    let newborn_seed = seed::derive(run_seed, &[tag::NEWBORN, generation]);
    fresh.push(((ops.init)(newborn_seed), 0, pop.next_id));
    pop.next_id += 1;

    let mut pool = pop.members.clone();
    pool.par_extend(
        fresh
            .into_par_iter()
            .map(|(genome, age, id)| evaluated(genome, age, id, &ops.evaluate)),
    );
    pool
}

/// Truncates the pool back to `n`: first repeatedly remove a seeded-uniform
/// choice among dominated members (until none remain or size reaches n);
/// if the non-dominated set still exceeds n, drop lowest fitness first
/// (ties: older first, then seeded random), never touching the current
/// maximum-fitness individual.
pub fn truncate_pool<G>(
    mut pool: Vec<Individual<G>>,
    n: usize,
    trunc_seed: u64,
) -> Vec<Individual<G>> {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(trunc_seed);
    use rand_chacha::rand_core::SeedableRng;

    while pool.len() > n {
        let dominated = dominated_indices(&pool);
        if dominated.is_empty() {
            break;
        }
        let pick = dominated[rng.random_range(0..dominated.len())];
        pool.swap_remove(pick);
    }
    while pool.len() > n {
        let keep = champion_index(&pool);
        let mut worst: Option<usize> = None;
        for i in 0..pool.len() {
            if i == keep {
                continue;
            }
            worst = match worst {
                None => Some(i),
                Some(w) => {
                    let (a, b) = (&pool[i], &pool[w]);
                    if a.fitness < b.fitness
                        || (a.fitness == b.fitness && a.age > b.age)
                        || (a.fitness == b.fitness && a.age == b.age && rng.random_bool(0.5))
                    {
                        Some(i)
                    } else {
                        Some(w)
                    }
                }
            };
        }
        pool.swap_remove(worst.expect("pool larger than one"));
    }
    pool
}

fn record_generation<G>(pop: &Population<G>) -> GenerationRecord {
    let members = &pop.members;
    let best_fitness = members
        .iter()
        .map(|m| m.fitness)
        .fold(f64::NEG_INFINITY, f64::max);
    let mean_fitness = members.iter().map(|m| m.fitness).sum::<f64>() / members.len() as f64;
    let dominated = dominated_indices(members);
    let mut ages: Vec<u64> = members.iter().map(|m| m.age).collect();
    ages.sort_unstable();
    GenerationRecord {
        generation: pop.generation,
        best_fitness,
        mean_fitness,
        front_size: members.len() - dominated.len(),
        age_min: ages[0],
        age_median: ages[ages.len() / 2],
        age_max: ages[ages.len() - 1],
        dominated_survivors: dominated.len(),
    }
}

/// One full generation: doubling, injection, truncation.
pub fn generation_step<G, FI, FM, FE>(
    pop: &mut Population<G>,
    run_seed: u64,
    ops: &GenomeOps<G, FI, FM, FE>,
) -> GenerationRecord
where
    G: Clone + Send + Sync,
    FI: Fn(u64) -> G + Sync,
    FM: Fn(&G, u64) -> G + Sync,
    FE: Fn(&G) -> Result<Vec<f64>, String> + Sync,
{
    let n = pop.members.len();
    let pool = offspring_pool(pop, run_seed, ops);
    let trunc_seed = seed::derive(run_seed, &[tag::TRUNCATE, pop.generation as u64]);
    pop.members = truncate_pool(pool, n, trunc_seed);
    pop.generation += 1;
    record_generation(pop)
}

/// Runs the configured number of generations and returns the best-ever
/// individual plus the per-generation ledger.
pub fn run<G, FI, FM, FE>(config: &AfpoConfig, ops: &GenomeOps<G, FI, FM, FE>) -> RunResult<G>
where
    G: Clone + Send + Sync,
    FI: Fn(u64) -> G + Sync,
    FM: Fn(&G, u64) -> G + Sync,
    FE: Fn(&G) -> Result<Vec<f64>, String> + Sync,
{
    let n = config.population_size;
    let seeds: Vec<u64> = (0..n as u64)
        .map(|i| seed::derive(config.seed, &[tag::INIT, i]))
        .collect();
    let members: Vec<Individual<G>> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| evaluated((ops.init)(s), 0, i as u64, &ops.evaluate))
        .collect();
    let mut pop = Population {
        members,
        generation: 0,
        next_id: n as u64,
    };

    let mut champion = pop.members[champion_index(&pop.members)].clone();
    let mut ledger = Vec::with_capacity(config.generations);
    for _ in 0..config.generations {
        let record = generation_step(&mut pop, config.seed, ops);
        let best = &pop.members[champion_index(&pop.members)];
        if best.fitness > champion.fitness {
            champion = best.clone();
        }
        ledger.push(record);
    }
    RunResult {
        champion,
        ledger,
        final_population: pop,
    }
}
