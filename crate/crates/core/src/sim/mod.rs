//! Deterministic reduced-order physics for the four morphology families and
//! the 500-step closed-loop evaluation driving them from a primed controller.

mod anchored;
mod sphere;
mod trajectory;

pub use anchored::{planar_registration, AnchoredBody, AnchoredParams};
pub use sphere::{energy_drift, sphere_energy, sphere_step, SphereParams, SphereState};
pub use trajectory::{
    displacement_metrics, parse_trajectory_csv, trajectory_csv, BodyPose, DisplacementMetrics,
    Trajectory, TrajectoryCsvRow,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{self, Genome, HiddenState, MorphologyId, MorphologyInterface};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite state at step {step}: integration blew up ({detail})")]
    NonFinite { step: usize, detail: String },
    #[error("genome is for {genome} but the evaluation requested {requested}")]
    MorphologyMismatch {
        genome: MorphologyId,
        requested: MorphologyId,
    },
}

/// All physical constants. Defaults follow the documented reduced-order
/// models; everything is configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub sphere: SphereParams,
    pub anchored: AnchoredParams,
    /// Steps per evaluation.
    pub steps: usize,
    /// Step size in seconds.
    pub dt: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            sphere: SphereParams::default(),
            anchored: AnchoredParams::default(),
            steps: 500,
            dt: 0.05,
        }
    }
}

/// Reference length for displacement-in-body-lengths reporting: quadruped
/// and sphere 0.5 m, minimal robot 0.4 m (two 0.2 m segments).
pub fn body_length(morphology: MorphologyId) -> f64 {
    match morphology {
        MorphologyId::Quadruped => 0.5,
        MorphologyId::Minimal => 0.4,
        _ => 0.5,
    }
}

enum MorphState {
    Sphere1 {
        plane: SphereState,
        sensed: bool,
    },
    Sphere2 {
        xz: SphereState,
        yz: SphereState,
        sensed: bool,
    },
    Anchored(AnchoredBody),
}

impl MorphState {
    fn new(morphology: MorphologyId, params: &SimParams) -> Self {
        match morphology {
            MorphologyId::Sphere1dS => MorphState::Sphere1 {
                plane: SphereState::at_rest(),
                sensed: true,
            },
            MorphologyId::Sphere1dNs => MorphState::Sphere1 {
                plane: SphereState::at_rest(),
                sensed: false,
            },
            MorphologyId::Sphere2dS => MorphState::Sphere2 {
                xz: SphereState::at_rest(),
                yz: SphereState::at_rest(),
                sensed: true,
            },
            MorphologyId::Sphere2dNs => MorphState::Sphere2 {
                xz: SphereState::at_rest(),
                yz: SphereState::at_rest(),
                sensed: false,
            },
            MorphologyId::Quadruped | MorphologyId::Minimal => {
                MorphState::Anchored(AnchoredBody::new(morphology, params.anchored))
            }
        }
    }

    fn pose(&self, params: &SimParams) -> BodyPose {
        match self {
            MorphState::Sphere1 { plane, .. } => BodyPose {
                p: [plane.x, 0.0, params.sphere.radius],
                yaw: 0.0,
            },
            MorphState::Sphere2 { xz, yz, .. } => BodyPose {
                p: [xz.x, yz.x, params.sphere.radius],
                yaw: 0.0,
            },
            MorphState::Anchored(body) => body.pose,
        }
    }

    fn n_joints(&self) -> usize {
        match self {
            MorphState::Sphere1 { .. } => 1,
            MorphState::Sphere2 { .. } => 2,
            MorphState::Anchored(body) => body.n_joints(),
        }
    }

    fn joints_into(&self, out: &mut Vec<f64>) {
        out.clear();
        match self {
            MorphState::Sphere1 { plane, .. } => out.push(plane.phi),
            MorphState::Sphere2 { xz, yz, .. } => {
                out.push(xz.phi);
                out.push(yz.phi);
            }
            MorphState::Anchored(body) => out.extend_from_slice(&body.q),
        }
    }

    /// Sensor readings for the current state. Touch sensors are 0/1;
    /// proprioceptive angles are normalized by their limit (pendulum angles
    /// by pi) and clamped to [-1, 1].
    fn sensors_into(&self, params: &SimParams, out: &mut Vec<f64>) {
        out.clear();
        let norm_angle = |phi: f64| (phi / std::f64::consts::PI).clamp(-1.0, 1.0);
        match self {
            MorphState::Sphere1 { plane, sensed } => {
                if *sensed {
                    out.push(norm_angle(plane.phi));
                }
            }
            MorphState::Sphere2 { xz, yz, sensed } => {
                if *sensed {
                    out.push(norm_angle(xz.phi));
                    out.push(norm_angle(yz.phi));
                }
            }
            MorphState::Anchored(body) => {
                body.touch_sensors_into(out);
                if body.n_joints() == 1 {
                    // minimal robot proprioception
                    out.push((body.q[0] / params.anchored.joint_limit).clamp(-1.0, 1.0));
                }
            }
        }
    }

    fn advance(&mut self, motors: &[f64], params: &SimParams) {
        let dt = params.dt;
        match self {
            MorphState::Sphere1 { plane, .. } => {
                let tau = motors[0] * params.sphere.tau_max;
                *plane = sphere_step(plane, tau, dt, &params.sphere);
            }
            MorphState::Sphere2 { xz, yz, .. } => {
                *xz = sphere_step(xz, motors[0] * params.sphere.tau_max, dt, &params.sphere);
                *yz = sphere_step(yz, motors[1] * params.sphere.tau_max, dt, &params.sphere);
            }
            MorphState::Anchored(body) => body.step(motors, dt),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            MorphState::Sphere1 { plane, .. } => [plane.x, plane.xdot, plane.phi, plane.phidot]
                .iter()
                .all(|v| v.is_finite()),
            MorphState::Sphere2 { xz, yz, .. } => [
                xz.x, xz.xdot, xz.phi, xz.phidot, yz.x, yz.xdot, yz.phi, yz.phidot,
            ]
            .iter()
            .all(|v| v.is_finite()),
            MorphState::Anchored(body) => {
                body.pose.p.iter().all(|v| v.is_finite())
                    && body.pose.yaw.is_finite()
                    && body.q.iter().all(|v| v.is_finite())
            }
        }
    }
}

trait EvalSink {
    fn record_initial(&mut self, pose: BodyPose, joints: &[f64]);
    fn record_step(&mut self, pose: BodyPose, joints: &[f64], sensors: &[f64], motors: &[f64]);
}

/// The closed loop: read sensors, step the primed controller, apply motors
/// to the morphology dynamics, advance dt. Fully deterministic.
fn run_closed_loop<S: EvalSink>(
    iface: MorphologyInterface,
    genome: &Genome,
    h0: &HiddenState,
    params: &SimParams,
    sink: &mut S,
) -> Result<(), SimError> {
    if genome.morphology != iface.id {
        return Err(SimError::MorphologyMismatch {
            genome: genome.morphology,
            requested: iface.id,
        });
    }
    let mut state = MorphState::new(iface.id, params);
    let mut h = *h0;
    let mut sensors = Vec::with_capacity(iface.n_sensors);
    let mut motors = vec![0.0f64; iface.n_motors];
    let mut joints = Vec::with_capacity(state.n_joints());

    state.joints_into(&mut joints);
    sink.record_initial(state.pose(params), &joints);

    for step in 0..params.steps {
        state.sensors_into(params, &mut sensors);
        h = controller::step_into(genome, &h, &sensors, &mut motors);
        state.advance(&motors, params);
        if !state.is_finite() {
            return Err(SimError::NonFinite {
                step,
                detail: "body state".into(),
            });
        }
        state.joints_into(&mut joints);
        sink.record_step(state.pose(params), &joints, &sensors, &motors);
    }
    Ok(())
}

struct RecordingSink {
    poses: Vec<BodyPose>,
    joints: Vec<Vec<f64>>,
    sensor_log: Vec<Vec<f64>>,
    motor_log: Vec<Vec<f64>>,
}

impl EvalSink for RecordingSink {
    fn record_initial(&mut self, pose: BodyPose, joints: &[f64]) {
        self.poses.push(pose);
        self.joints.push(joints.to_vec());
    }

    fn record_step(&mut self, pose: BodyPose, joints: &[f64], sensors: &[f64], motors: &[f64]) {
        self.poses.push(pose);
        self.joints.push(joints.to_vec());
        self.sensor_log.push(sensors.to_vec());
        self.motor_log.push(motors.to_vec());
    }
}

/// Accumulates displacement metrics without materializing the trajectory;
/// the arithmetic matches `displacement_metrics` operation for operation.
struct MetricsSink {
    first: BodyPose,
    prev: BodyPose,
    last: BodyPose,
    path_length: f64,
}

impl EvalSink for MetricsSink {
    fn record_initial(&mut self, pose: BodyPose, _joints: &[f64]) {
        self.first = pose;
        self.prev = pose;
        self.last = pose;
    }

    fn record_step(&mut self, pose: BodyPose, _joints: &[f64], _sensors: &[f64], _motors: &[f64]) {
        let ex = pose.p[0] - self.prev.p[0];
        let ey = pose.p[1] - self.prev.p[1];
        self.path_length += (ex * ex + ey * ey).sqrt();
        self.prev = pose;
        self.last = pose;
    }
}

/// Full evaluation producing the complete trajectory record.
pub fn evaluate(
    iface: MorphologyInterface,
    genome: &Genome,
    h0: &HiddenState,
    params: &SimParams,
) -> Result<Trajectory, SimError> {
    let mut sink = RecordingSink {
        poses: Vec::with_capacity(params.steps + 1),
        joints: Vec::with_capacity(params.steps + 1),
        sensor_log: Vec::with_capacity(params.steps),
        motor_log: Vec::with_capacity(params.steps),
    };
    run_closed_loop(iface, genome, h0, params, &mut sink)?;
    Ok(Trajectory {
        poses: sink.poses,
        joints: sink.joints,
        sensor_log: sink.sensor_log,
        motor_log: sink.motor_log,
        dt: params.dt,
    })
}

/// Lean evaluation for fitness scoring: same dynamics, no logging. Returns
/// exactly the metrics `displacement_metrics` would compute on the full
/// trajectory.
pub fn evaluate_metrics(
    iface: MorphologyInterface,
    genome: &Genome,
    h0: &HiddenState,
    params: &SimParams,
    body_len: f64,
) -> Result<DisplacementMetrics, SimError> {
    let zero = BodyPose::origin_at_height(0.0);
    let mut sink = MetricsSink {
        first: zero,
        prev: zero,
        last: zero,
        path_length: 0.0,
    };
    run_closed_loop(iface, genome, h0, params, &mut sink)?;
    let dx = sink.last.p[0] - sink.first.p[0];
    let dy = sink.last.p[1] - sink.first.p[1];
    let dist_from_origin = (dx * dx + dy * dy).sqrt();
    Ok(DisplacementMetrics {
        dx,
        dist_from_origin,
        path_length: sink.path_length,
        dx_bl: dx / body_len,
        dist_from_origin_bl: dist_from_origin / body_len,
        path_length_bl: sink.path_length / body_len,
    })
}
