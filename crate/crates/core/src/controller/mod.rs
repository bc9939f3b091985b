//! The three-layer recurrent controller.
//!
//! A command vector is fed serially through the auditory neuron to set the
//! five hidden neurons' state; the auditory synapses are then detached and
//! the controller runs closed-loop: sensors -> hidden (recurrent) -> motors.
//! All units are synchronous bias-free tanh neurons.

mod serial;

pub use serial::{parse_genome, write_genome, GenomeParseError};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embeddings::CommandVector;

/// Hidden layer width, fixed across all morphologies.
pub const HIDDEN: usize = 5;

/// Mutation std floor so a zero-valued synapse is not frozen forever.
pub const MUTATION_STD_FLOOR: f64 = 1e-9;

/// The six robot bodies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphologyId {
    Quadruped,
    Minimal,
    Sphere1dS,
    Sphere1dNs,
    Sphere2dS,
    Sphere2dNs,
}

impl MorphologyId {
    pub const ALL: [MorphologyId; 6] = [
        MorphologyId::Quadruped,
        MorphologyId::Minimal,
        MorphologyId::Sphere1dS,
        MorphologyId::Sphere1dNs,
        MorphologyId::Sphere2dS,
        MorphologyId::Sphere2dNs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MorphologyId::Quadruped => "quadruped",
            MorphologyId::Minimal => "minimal",
            MorphologyId::Sphere1dS => "sphere1d_s",
            MorphologyId::Sphere1dNs => "sphere1d_ns",
            MorphologyId::Sphere2dS => "sphere2d_s",
            MorphologyId::Sphere2dNs => "sphere2d_ns",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|m| m.as_str() == s)
    }

    /// Sensor and motor counts for each body.
    ///
    /// quadruped: 4 touch sensors, 8 hinge motors (hip + knee per leg);
    /// minimal: 2 touch + 1 proprioceptive sensor, 1 hinge motor; spheres:
    /// one pendulum motor per plane, one proprioceptive sensor per plane on
    /// the sensed variants.
    pub fn interface(self) -> MorphologyInterface {
        let (n_sensors, n_motors) = match self {
            MorphologyId::Quadruped => (4, 8),
            MorphologyId::Minimal => (3, 1),
            MorphologyId::Sphere1dS => (1, 1),
            MorphologyId::Sphere1dNs => (0, 1),
            MorphologyId::Sphere2dS => (2, 2),
            MorphologyId::Sphere2dNs => (0, 2),
        };
        MorphologyInterface {
            id: self,
            n_sensors,
            n_motors,
        }
    }
}

impl std::fmt::Display for MorphologyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sensor/motor counts a controller must match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MorphologyInterface {
    pub id: MorphologyId,
    pub n_sensors: usize,
    pub n_motors: usize,
}

/// All synapse weights of one controller. Matrices are stored row-major with
/// the source neuron as the row: `w_hh[i][j]` connects hidden i to hidden j,
/// `w_sh[k][j]` sensor k to hidden j, `w_hm[j][m]` hidden j to motor m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub morphology: MorphologyId,
    pub w_ah: Vec<f64>,
    pub w_hh: Vec<f64>,
    pub w_sh: Vec<f64>,
    pub w_hm: Vec<f64>,
}

impl Genome {
    /// An all-zero genome (useful as a scaffold; a zero controller never
    /// moves).
    pub fn zeros(iface: MorphologyInterface) -> Self {
        Self {
            morphology: iface.id,
            w_ah: vec![0.0; HIDDEN],
            w_hh: vec![0.0; HIDDEN * HIDDEN],
            w_sh: vec![0.0; iface.n_sensors * HIDDEN],
            w_hm: vec![0.0; HIDDEN * iface.n_motors],
        }
    }

    pub fn interface(&self) -> MorphologyInterface {
        self.morphology.interface()
    }

    pub fn n_sensors(&self) -> usize {
        self.w_sh.len() / HIDDEN
    }

    pub fn n_motors(&self) -> usize {
        self.w_hm.len() / HIDDEN
    }

    /// Total number of synapses.
    pub fn weight_count(&self) -> usize {
        self.w_ah.len() + self.w_hh.len() + self.w_sh.len() + self.w_hm.len()
    }

    /// Flat view over all weights in block order (w_ah, w_hh, w_sh, w_hm).
    pub fn weight(&self, mut idx: usize) -> f64 {
        for block in [&self.w_ah, &self.w_hh, &self.w_sh, &self.w_hm] {
            if idx < block.len() {
                return block[idx];
            }
            idx -= block.len();
        }
        panic!("weight index out of range");
    }

    pub fn set_weight(&mut self, mut idx: usize, value: f64) {
        for block in [
            &mut self.w_ah,
            &mut self.w_hh,
            &mut self.w_sh,
            &mut self.w_hm,
        ] {
            if idx < block.len() {
                block[idx] = value;
                return;
            }
            idx -= block.len();
        }
        panic!("weight index out of range");
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.w_ah
            .iter()
            .chain(&self.w_hh)
            .chain(&self.w_sh)
            .chain(&self.w_hm)
            .copied()
    }
}

/// The hidden layer state; every entry stays inside (-1, 1) because updates
/// pass through tanh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenState {
    pub h: [f64; HIDDEN],
}

impl HiddenState {
    pub fn zero() -> Self {
        Self { h: [0.0; HIDDEN] }
    }
}

/// Fresh genome with every weight drawn independently uniform on [-1, 1].
pub fn new_genome(iface: MorphologyInterface, seed: u64) -> Genome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw =
        |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    Genome {
        morphology: iface.id,
        w_ah: draw(HIDDEN),
        w_hh: draw(HIDDEN * HIDDEN),
        w_sh: draw(iface.n_sensors * HIDDEN),
        w_hm: draw(HIDDEN * iface.n_motors),
    }
}

/// Feeds the command vector serially through the auditory neuron, starting
/// from an all-zero hidden state: for each element x,
/// `h <- tanh(W_hh^T h + w_ah * x)` applied synchronously.
pub fn prime(genome: &Genome, cmd: &CommandVector) -> HiddenState {
    let mut state = HiddenState::zero();
    for &x in &cmd.values {
        state = prime_step(genome, &state, x);
    }
    state
}

/// One serial priming update. Split out so replay can dump the hidden
/// trajectory element by element.
pub fn prime_step(genome: &Genome, state: &HiddenState, x: f64) -> HiddenState {
    let mut next = [0.0f64; HIDDEN];
    for (j, n) in next.iter_mut().enumerate() {
        let mut pre = genome.w_ah[j] * x;
        for (i, &hi) in state.h.iter().enumerate() {
            pre += genome.w_hh[i * HIDDEN + j] * hi;
        }
        *n = pre.tanh();
    }
    HiddenState { h: next }
}

/// One closed-loop update with the auditory synapses detached:
/// `h' = tanh(W_hh^T h + W_sh^T s)`, `motors = tanh(W_hm^T h')`.
pub fn step(genome: &Genome, state: &HiddenState, sensors: &[f64]) -> (HiddenState, Vec<f64>) {
    let mut motors = vec![0.0f64; genome.n_motors()];
    let next = step_into(genome, state, sensors, &mut motors);
    (next, motors)
}

/// Allocation-free variant for the evaluation hot loop; writes motor outputs
/// into `motors` (length `n_motors`).
pub fn step_into(
    genome: &Genome,
    state: &HiddenState,
    sensors: &[f64],
    motors: &mut [f64],
) -> HiddenState {
    debug_assert_eq!(sensors.len(), genome.n_sensors());
    debug_assert_eq!(motors.len(), genome.n_motors());
    let mut next = [0.0f64; HIDDEN];
    for (j, n) in next.iter_mut().enumerate() {
        let mut pre = 0.0;
        for (i, &hi) in state.h.iter().enumerate() {
            pre += genome.w_hh[i * HIDDEN + j] * hi;
        }
        for (k, &sk) in sensors.iter().enumerate() {
            pre += genome.w_sh[k * HIDDEN + j] * sk;
        }
        *n = pre.tanh();
    }
    let n_motors = motors.len();
    for (m, out) in motors.iter_mut().enumerate() {
        let mut pre = 0.0;
        for (j, &hj) in next.iter().enumerate() {
            pre += genome.w_hm[j * n_motors + m] * hj;
        }
        *out = pre.tanh();
    }
    HiddenState { h: next }
}

/// Returns a copy of `genome` with exactly one synapse, chosen uniformly,
/// redrawn from Normal(old, |old|). The std is floored at
/// [`MUTATION_STD_FLOOR`] so zero-valued synapses stay mutable.
pub fn mutate(genome: &Genome, seed: u64) -> Genome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = rng.random_range(0..genome.weight_count());
    let old = genome.weight(idx);
    let std = old.abs().max(MUTATION_STD_FLOOR);
    let new = Normal::new(old, std).expect("finite std").sample(&mut rng);
    let mut child = genome.clone();
    child.set_weight(idx, new);
    child
}
