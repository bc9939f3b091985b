//! Kinematic anchored-contact model for the legged and minimal bodies.
//!
//! Joints are position-servoed toward the motor targets, rate-limited by
//! omega_max. Candidate contact points are computed by forward kinematics
//! before and after the joint update; points that were in ground contact
//! before the update act as anchors, and the planar rigid transform that
//! minimizes their squared slip (2-D orthogonal Procrustes) is applied to
//! the body. The body then settles vertically so the lowest candidate sits
//! exactly on the ground, and touch sensors read the post-settle contacts.

use serde::{Deserialize, Serialize};

use super::trajectory::BodyPose;
use crate::controller::MorphologyId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchoredParams {
    /// Hinge limit (rad); motors target q = motor * joint_limit.
    pub joint_limit: f64,
    /// Joint slew rate bound (rad/s).
    pub omega_max: f64,
    /// Ground contact threshold (m).
    pub contact_eps: f64,
}

impl Default for AnchoredParams {
    fn default() -> Self {
        Self {
            joint_limit: std::f64::consts::FRAC_PI_4,
            omega_max: std::f64::consts::FRAC_PI_2,
            contact_eps: 1e-3,
        }
    }
}

/// Quadruped geometry: hips at the body corners, both leg links 0.2 m,
/// hips swinging in sagittal (x-z) planes with knees flexing in the same
/// plane. Contact candidates: 4 foot tips then 4 body corners.
const HIP_XY: [[f64; 2]; 4] = [[0.25, 0.15], [0.25, -0.15], [-0.25, 0.15], [-0.25, -0.15]];
const UPPER_LEG: f64 = 0.2;
const LOWER_LEG: f64 = 0.2;

/// Minimal robot: two collinear 0.2 m segments joined by one yaw-plane
/// hinge. Contact candidates: both endpoints of each segment.
const SEGMENT_LEN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BodyModel {
    Quadruped,
    Minimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredBody {
    model: BodyModel,
    params: AnchoredParams,
    pub pose: BodyPose,
    pub q: Vec<f64>,
    contacts: Vec<bool>,
}

/// Candidate contact points in the body frame for a joint configuration.
fn candidate_points(model: BodyModel, q: &[f64]) -> Vec<[f64; 3]> {
    match model {
        BodyModel::Quadruped => {
            let mut pts = Vec::with_capacity(8);
            for (leg, hip) in HIP_XY.iter().enumerate() {
                let hip_angle = q[2 * leg];
                let knee_angle = q[2 * leg + 1];
                let x = hip[0]
                    + UPPER_LEG * hip_angle.sin()
                    + LOWER_LEG * (hip_angle + knee_angle).sin();
                let z = -UPPER_LEG * hip_angle.cos() - LOWER_LEG * (hip_angle + knee_angle).cos();
                pts.push([x, hip[1], z]);
            }
            for hip in &HIP_XY {
                pts.push([hip[0], hip[1], 0.0]);
            }
            pts
        }
        BodyModel::Minimal => {
            // Front segment fixed along +x in the body frame; the rear
            // segment flexes by q about the shared hinge at the origin.
            let angle = std::f64::consts::PI + q[0];
            vec![
                [0.0, 0.0, 0.0],
                [SEGMENT_LEN, 0.0, 0.0],
                [0.0, 0.0, 0.0],
                [SEGMENT_LEN * angle.cos(), SEGMENT_LEN * angle.sin(), 0.0],
            ]
        }
    }
}

fn to_world(pose: &BodyPose, p: &[f64; 3]) -> [f64; 3] {
    let (sin, cos) = pose.yaw.sin_cos();
    [
        pose.p[0] + cos * p[0] - sin * p[1],
        pose.p[1] + sin * p[0] + cos * p[1],
        pose.p[2] + p[2],
    ]
}

/// Least-squares planar rigid registration moving `current` onto `target`:
/// returns (rotation angle, translation). With a single pair the rotation is
/// zero; with none the transform is the identity.
pub fn planar_registration(current: &[[f64; 2]], target: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let n = current.len();
    debug_assert_eq!(n, target.len());
    if n == 0 {
        return (0.0, [0.0, 0.0]);
    }
    if n == 1 {
        return (
            0.0,
            [target[0][0] - current[0][0], target[0][1] - current[0][1]],
        );
    }
    let nf = n as f64;
    let mut ca = [0.0f64; 2];
    let mut cb = [0.0f64; 2];
    for i in 0..n {
        ca[0] += current[i][0];
        ca[1] += current[i][1];
        cb[0] += target[i][0];
        cb[1] += target[i][1];
    }
    ca[0] /= nf;
    ca[1] /= nf;
    cb[0] /= nf;
    cb[1] /= nf;
    let mut dot = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        let ax = current[i][0] - ca[0];
        let ay = current[i][1] - ca[1];
        let bx = target[i][0] - cb[0];
        let by = target[i][1] - cb[1];
        dot += ax * bx + ay * by;
        cross += ax * by - ay * bx;
    }
    let theta = if dot == 0.0 && cross == 0.0 {
        0.0
    } else {
        cross.atan2(dot)
    };
    let (sin, cos) = theta.sin_cos();
    let t = [
        cb[0] - (cos * ca[0] - sin * ca[1]),
        cb[1] - (sin * ca[0] + cos * ca[1]),
    ];
    (theta, t)
}

impl AnchoredBody {
    pub fn new(morphology: MorphologyId, params: AnchoredParams) -> Self {
        let (model, n_joints) = match morphology {
            MorphologyId::Quadruped => (BodyModel::Quadruped, 8),
            MorphologyId::Minimal => (BodyModel::Minimal, 1),
            other => panic!("{other} is not an anchored body"),
        };
        let mut body = Self {
            model,
            params,
            pose: BodyPose::origin_at_height(0.0),
            q: vec![0.0; n_joints],
            contacts: Vec::new(),
        };
        body.settle();
        body.contacts = body.current_contacts();
        body
    }

    pub fn n_joints(&self) -> usize {
        self.q.len()
    }

    fn world_candidates(&self) -> Vec<[f64; 3]> {
        candidate_points(self.model, &self.q)
            .iter()
            .map(|p| to_world(&self.pose, p))
            .collect()
    }

    /// Drops the body so the lowest candidate touches z = 0 exactly.
    fn settle(&mut self) {
        let min_z = self
            .world_candidates()
            .iter()
            .map(|p| p[2])
            .fold(f64::INFINITY, f64::min);
        self.pose.p[2] -= min_z;
    }

    fn current_contacts(&self) -> Vec<bool> {
        self.world_candidates()
            .iter()
            .map(|p| p[2] <= self.params.contact_eps)
            .collect()
    }

    /// Per-candidate contact flags from the last settle.
    pub fn contacts(&self) -> &[bool] {
        &self.contacts
    }

    /// World-frame heights of every contact candidate (for ground
    /// non-penetration checks).
    pub fn candidate_heights(&self) -> Vec<f64> {
        self.world_candidates().iter().map(|p| p[2]).collect()
    }

    /// Touch sensor readings (0 or 1). Quadruped: one per foot tip.
    /// Minimal: one per segment, set if either of its endpoints touches.
    pub fn touch_sensors(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.touch_sensors_into(&mut out);
        out
    }

    pub fn touch_sensors_into(&self, out: &mut Vec<f64>) {
        match self.model {
            BodyModel::Quadruped => {
                for i in 0..4 {
                    out.push(if self.contacts[i] { 1.0 } else { 0.0 });
                }
            }
            BodyModel::Minimal => {
                out.push(if self.contacts[0] || self.contacts[1] {
                    1.0
                } else {
                    0.0
                });
                out.push(if self.contacts[2] || self.contacts[3] {
                    1.0
                } else {
                    0.0
                });
            }
        }
    }

    /// Advances one step: servo joints toward `motor_targets * joint_limit`
    /// (rate-limited), anchor-register the body, settle, refresh contacts.
    pub fn step(&mut self, motor_targets: &[f64], dt: f64) {
        debug_assert_eq!(motor_targets.len(), self.q.len());
        let before = self.world_candidates();
        let anchors: Vec<usize> = (0..before.len())
            .filter(|&i| before[i][2] <= self.params.contact_eps)
            .collect();

        let max_delta = self.params.omega_max * dt;
        for (qi, &m) in self.q.iter_mut().zip(motor_targets) {
            let target = (m * self.params.joint_limit)
                .clamp(-self.params.joint_limit, self.params.joint_limit);
            let delta = (target - *qi).clamp(-max_delta, max_delta);
            *qi = (*qi + delta).clamp(-self.params.joint_limit, self.params.joint_limit);
        }

        let after = self.world_candidates();
        let current: Vec<[f64; 2]> = anchors
            .iter()
            .map(|&i| [after[i][0], after[i][1]])
            .collect();
        let target: Vec<[f64; 2]> = anchors
            .iter()
            .map(|&i| [before[i][0], before[i][1]])
            .collect();
        let (theta, t) = planar_registration(&current, &target);
        if theta != 0.0 || t != [0.0, 0.0] {
            let (sin, cos) = theta.sin_cos();
            let [px, py] = [self.pose.p[0], self.pose.p[1]];
            self.pose.p[0] = cos * px - sin * py + t[0];
            self.pose.p[1] = sin * px + cos * py + t[1];
            self.pose.yaw += theta;
        }
        self.settle();
        self.contacts = self.current_contacts();
    }
}
