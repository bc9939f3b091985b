//! Trajectory records and displacement metrics.

use serde::{Deserialize, Serialize};

/// Body origin position and heading. Bodies in the reduced-order models
/// translate in the plane, yaw about z, and settle vertically; they do not
/// pitch or roll.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    pub p: [f64; 3],
    pub yaw: f64,
}

impl BodyPose {
    pub fn origin_at_height(z: f64) -> Self {
        Self {
            p: [0.0, 0.0, z],
            yaw: 0.0,
        }
    }
}

/// Full record of one closed-loop evaluation: `steps + 1` poses and joint
/// snapshots (initial state included), one sensor/motor row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<BodyPose>,
    pub joints: Vec<Vec<f64>>,
    pub sensor_log: Vec<Vec<f64>>,
    pub motor_log: Vec<Vec<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.sensor_log.len()
    }

    pub fn final_pose(&self) -> &BodyPose {
        self.poses.last().expect("trajectory has at least one pose")
    }
}

/// Net and cumulative displacement of a trajectory, in meters and in body
/// lengths. `dx` is signed; the others are planar norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementMetrics {
    pub dx: f64,
    pub dist_from_origin: f64,
    pub path_length: f64,
    pub dx_bl: f64,
    pub dist_from_origin_bl: f64,
    pub path_length_bl: f64,
}

pub fn displacement_metrics(t: &Trajectory, body_length: f64) -> DisplacementMetrics {
    let first = &t.poses[0];
    let last = t.final_pose();
    let dx = last.p[0] - first.p[0];
    let dy = last.p[1] - first.p[1];
    let dist_from_origin = (dx * dx + dy * dy).sqrt();
    let mut path_length = 0.0;
    for w in t.poses.windows(2) {
        let ex = w[1].p[0] - w[0].p[0];
        let ey = w[1].p[1] - w[0].p[1];
        path_length += (ex * ex + ey * ey).sqrt();
    }
    DisplacementMetrics {
        dx,
        dist_from_origin,
        path_length,
        dx_bl: dx / body_length,
        dist_from_origin_bl: dist_from_origin / body_length,
        path_length_bl: path_length / body_length,
    }
}

/// CSV dump: `step,t,x,y,z,yaw,<q...>,<sensors...>,<motors...>`, one row per
/// step, values with 9 significant digits.
pub fn trajectory_csv(t: &Trajectory) -> String {
    let n_q = t.joints.first().map_or(0, Vec::len);
    let n_s = t.sensor_log.first().map_or(0, Vec::len);
    let n_m = t.motor_log.first().map_or(0, Vec::len);
    let mut header = String::from("step,t,x,y,z,yaw");
    for i in 0..n_q {
        header.push_str(&format!(",q{i}"));
    }
    for i in 0..n_s {
        header.push_str(&format!(",s{i}"));
    }
    for i in 0..n_m {
        header.push_str(&format!(",m{i}"));
    }
    let mut out = header;
    out.push('\n');
    let fmt = |x: f64| format!("{x:.8e}");
    for step in 1..=t.steps() {
        let pose = &t.poses[step];
        let mut row = format!(
            "{step},{},{},{},{},{}",
            fmt(step as f64 * t.dt),
            fmt(pose.p[0]),
            fmt(pose.p[1]),
            fmt(pose.p[2]),
            fmt(pose.yaw)
        );
        for q in &t.joints[step] {
            row.push(',');
            row.push_str(&fmt(*q));
        }
        for s in &t.sensor_log[step - 1] {
            row.push(',');
            row.push_str(&fmt(*s));
        }
        for m in &t.motor_log[step - 1] {
            row.push(',');
            row.push_str(&fmt(*m));
        }
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// One parsed row of the trajectory dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCsvRow {
    pub step: usize,
    pub t: f64,
    pub pose: BodyPose,
    pub q: Vec<f64>,
    pub sensors: Vec<f64>,
    pub motors: Vec<f64>,
}

/// Parses a dump produced by [`trajectory_csv`]. Column counts come from the
/// header's `q*`/`s*`/`m*` groups.
pub fn parse_trajectory_csv(text: &str) -> Option<Vec<TrajectoryCsvRow>> {
    let mut lines = text.lines();
    let header = lines.next()?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 6 || columns[..6] != ["step", "t", "x", "y", "z", "yaw"] {
        return None;
    }
    let count = |prefix: char| {
        columns[6..]
            .iter()
            .filter(|c| c.starts_with(prefix) && c[1..].chars().all(|ch| ch.is_ascii_digit()))
            .count()
    };
    let (n_q, n_s, n_m) = (count('q'), count('s'), count('m'));
    if 6 + n_q + n_s + n_m != columns.len() {
        return None;
    }
    let mut rows = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return None;
        }
        let f = |i: usize| cells[i].parse::<f64>().ok();
        let span =
            |start: usize, n: usize| -> Option<Vec<f64>> { (start..start + n).map(f).collect() };
        rows.push(TrajectoryCsvRow {
            step: cells[0].parse().ok()?,
            t: f(1)?,
            pose: BodyPose {
                p: [f(2)?, f(3)?, f(4)?],
                yaw: f(5)?,
            },
            q: span(6, n_q)?,
            sensors: span(6 + n_q, n_s)?,
            motors: span(6 + n_q + n_s, n_m)?,
        });
    }
    Some(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj_through(points: &[[f64; 2]]) -> Trajectory {
        Trajectory {
            poses: points
                .iter()
                .map(|&[x, y]| BodyPose {
                    p: [x, y, 0.0],
                    yaw: 0.0,
                })
                .collect(),
            joints: vec![vec![]; points.len()],
            sensor_log: vec![vec![]; points.len() - 1],
            motor_log: vec![vec![]; points.len() - 1],
            dt: 0.05,
        }
    }

    #[test]
    fn stationary_trajectory_has_zero_metrics() {
        let t = traj_through(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        let m = displacement_metrics(&t, 0.5);
        assert_eq!(m.dx, 0.0);
        assert_eq!(m.dist_from_origin, 0.0);
        assert_eq!(m.path_length, 0.0);
    }

    #[test]
    fn straight_march_has_equal_metrics() {
        let t = traj_through(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let m = displacement_metrics(&t, 0.5);
        assert_eq!(m.dx, 2.0);
        assert_eq!(m.dist_from_origin, 2.0);
        assert_eq!(m.path_length, 2.0);
        assert_eq!(m.dx_bl, 4.0);
    }

    #[test]
    fn out_and_back_distinguishes_path_from_displacement() {
        let t = traj_through(&[[0.0, 0.0], [1.5, 0.0], [0.0, 0.0]]);
        let m = displacement_metrics(&t, 0.5);
        assert_eq!(m.dx, 0.0);
        assert_eq!(m.dist_from_origin, 0.0);
        assert_eq!(m.path_length, 3.0);
    }

    #[test]
    fn csv_has_one_row_per_step_and_nine_significant_digits() {
        let t = traj_through(&[[0.0, 0.0], [0.125, 0.0], [0.25, 1.0 / 3.0]]);
        let csv = trajectory_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "step,t,x,y,z,yaw");
        assert!(lines[2].contains("3.33333333e-1"));
    }

    #[test]
    fn csv_parses_through_its_own_reader() {
        let mut t = traj_through(&[[0.0, 0.0], [0.125, -0.5], [0.25, 1.0 / 3.0]]);
        t.joints = vec![vec![0.1, 0.2]; 3];
        t.sensor_log = vec![vec![1.0]; 2];
        t.motor_log = vec![vec![0.5, -0.5]; 2];
        let rows = parse_trajectory_csv(&trajectory_csv(&t)).expect("parses");
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].step, 1);
        assert_eq!(rows[1].q.len(), 2);
        assert_eq!(rows[1].sensors, vec![1.0]);
        assert_eq!(rows[1].motors.len(), 2);
        assert!((rows[1].pose.p[1] - 1.0 / 3.0).abs() < 1e-8);
    }
}
