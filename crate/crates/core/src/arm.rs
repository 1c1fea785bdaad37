//! Planar two-link arm driven by a bellow actuator straddling the elbow.
//!
//! The upper arm is fixed; the forearm rotates about the elbow. Flexion is
//! measured from full extension (0° = straight arm). Deflating the actuator
//! flexes the elbow and inflating it extends the elbow, so the flexion angle
//! tracks `1 − fill fraction`.

use std::ops::{Add, Mul, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::actuator::{ActuatorSpec, ElongationData, ElongationSource};
use crate::error::{Error, Result};
use crate::pneumatics::{decay, time_constant, PneumaticConfig};

/// Rate (Hz) at which acceleration is synthesised, matching the IMU.
pub const IMU_RATE_HZ: f64 = 60.0;
/// Strap anchors may sit no further than this from the elbow (cm).
pub const MAX_ATTACH_D_CM: f64 = 5.0;
/// Tolerance on rigid link lengths (cm).
pub const LINK_TOLERANCE_CM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Point2, w: f64) -> Point2 {
        self + (o - self) * w
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// How the joint stop limits the actuator-imposed flexion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointStop {
    /// `min(θ, ROM)`.
    Hard,
    /// `ROM·(1 − e^{−θ/ROM})`: tangent to the arc model at small angles,
    /// approaching the stop asymptotically.
    #[default]
    Soft,
}

impl JointStop {
    pub fn apply(self, theta_deg: f64, rom_deg: f64) -> f64 {
        match self {
            JointStop::Hard => theta_deg.min(rom_deg),
            JointStop::Soft => rom_deg * (1.0 - (-theta_deg / rom_deg).exp()),
        }
    }
}

fn default_marker() -> f64 {
    0.10
}

fn default_strap() -> f64 {
    16.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub upper_arm_cm: f64,
    pub forearm_cm: f64,
    pub forearm_mass_kg: f64,
    pub passive_rom_deg: f64,
    pub attach_d_cm: f64,
    pub shoulder_origin: Point2,
    /// Unit vector from shoulder to elbow.
    pub upper_arm_direction: Point2,
    #[serde(default)]
    pub joint_stop: JointStop,
    /// Recorded only; not used by any computation.
    #[serde(default = "default_marker")]
    pub marker_diameter_cm: f64,
    /// Recorded only; not used by any computation.
    #[serde(default = "default_strap")]
    pub strap_length_cm: f64,
}

impl Default for ArmModel {
    fn default() -> Self {
        ArmModel {
            upper_arm_cm: 15.0,
            forearm_cm: 11.0,
            forearm_mass_kg: 0.38,
            passive_rom_deg: 105.0,
            attach_d_cm: 5.0,
            shoulder_origin: Point2::new(0.0, 0.0),
            upper_arm_direction: Point2::new(1.0, 0.0),
            joint_stop: JointStop::Soft,
            marker_diameter_cm: default_marker(),
            strap_length_cm: default_strap(),
        }
    }
}

impl ArmModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.upper_arm_cm > 0.0 && self.forearm_cm > 0.0) {
            return Err(Error::Validation("link lengths must be positive".into()));
        }
        if !(self.forearm_mass_kg > 0.0) {
            return Err(Error::Validation("forearm mass must be positive".into()));
        }
        if !(self.attach_d_cm > 0.0
            && self.attach_d_cm <= MAX_ATTACH_D_CM
            && self.attach_d_cm <= self.upper_arm_cm.min(self.forearm_cm))
        {
            return Err(Error::Validation(format!(
                "attachment distance must lie in (0, {MAX_ATTACH_D_CM}] cm and within both links, got {}",
                self.attach_d_cm
            )));
        }
        if !(self.passive_rom_deg > 0.0 && self.passive_rom_deg <= 180.0) {
            return Err(Error::Validation("passive range of motion must lie in (0, 180]".into()));
        }
        if (self.upper_arm_direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation("upper arm direction must be a unit vector".into()));
        }
        Ok(())
    }

    /// Largest flexion the actuator can impose for a given free elongation.
    pub fn active_flexion_deg(&self, elongation_cm: f64) -> f64 {
        let arc = angle_from_elongation(elongation_cm, self.attach_d_cm);
        self.joint_stop.apply(arc, self.passive_rom_deg)
    }
}

/// Joint angle (degrees) swept when an actuator of elongation `e_cm`
/// wraps an arc of radius `d_cm`.
pub fn angle_from_elongation(e_cm: f64, d_cm: f64) -> f64 {
    (e_cm / d_cm).to_degrees()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmPose {
    pub shoulder: Point2,
    pub elbow: Point2,
    pub end_effector: Point2,
}

pub fn forward_kinematics(arm: &ArmModel, theta_deg: f64) -> Result<ArmPose> {
    if !(theta_deg >= 0.0 && theta_deg <= arm.passive_rom_deg) {
        return Err(Error::domain(format!(
            "flexion {theta_deg}° outside passive range [0, {}]",
            arm.passive_rom_deg
        )));
    }
    let shoulder = arm.shoulder_origin;
    let elbow = shoulder + arm.upper_arm_direction * arm.upper_arm_cm;
    let forearm_dir = arm.upper_arm_direction.rotate(theta_deg.to_radians());
    Ok(ArmPose {
        shoulder,
        elbow,
        end_effector: elbow + forearm_dir * arm.forearm_cm,
    })
}

/// Sampled marker positions and end-effector acceleration for one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t_s: Vec<f64>,
    pub shoulder: Vec<Point2>,
    pub elbow: Vec<Point2>,
    pub end_effector: Vec<Point2>,
    /// End-effector acceleration magnitude (m/s²) at each sample.
    pub accel_ms2: Vec<f64>,
    /// First sample of the flexion (venting) phase, when known.
    pub flexion_start: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_s.is_empty()
    }

    pub fn dt_s(&self) -> f64 {
        if self.t_s.len() < 2 {
            return 1.0 / IMU_RATE_HZ;
        }
        (self.t_s[self.t_s.len() - 1] - self.t_s[0]) / (self.t_s.len() - 1) as f64
    }

    pub fn sample_rate_hz(&self) -> f64 {
        1.0 / self.dt_s()
    }

    /// Sample range analysed by the kinematic metrics.
    pub fn flexion_range(&self) -> std::ops::Range<usize> {
        self.flexion_start.unwrap_or(0).min(self.len())..self.len()
    }

    /// Largest deviation of either link from its nominal length.
    pub fn max_link_error(&self, arm: &ArmModel) -> f64 {
        (0..self.len())
            .map(|i| {
                let upper = (self.shoulder[i].distance(self.elbow[i]) - arm.upper_arm_cm).abs();
                let fore = (self.elbow[i].distance(self.end_effector[i]) - arm.forearm_cm).abs();
                upper.max(fore)
            })
            .fold(0.0, f64::max)
    }
}

/// Linear interpolation of a sampled path, clamped to its ends.
fn interpolate(t_s: &[f64], points: &[Point2], t: f64) -> Point2 {
    let last = t_s.len() - 1;
    if t <= t_s[0] {
        return points[0];
    }
    if t >= t_s[last] {
        return points[last];
    }
    let hi = t_s.partition_point(|&x| x <= t).min(last);
    let lo = hi - 1;
    let span = t_s[hi] - t_s[lo];
    let w = if span > 0.0 { (t - t_s[lo]) / span } else { 0.0 };
    points[lo].lerp(points[hi], w)
}

/// Acceleration magnitude (m/s²) of a sampled path in cm: second central
/// differences with a 1/60 s step on the linearly interpolated path,
/// evaluated at every sample time.
pub fn acceleration_magnitudes(t_s: &[f64], points: &[Point2]) -> Vec<f64> {
    if t_s.is_empty() {
        return Vec::new();
    }
    let h = 1.0 / IMU_RATE_HZ;
    t_s.iter()
        .map(|&t| {
            let prev = interpolate(t_s, points, t - h);
            let here = interpolate(t_s, points, t);
            let next = interpolate(t_s, points, t + h);
            let second = (next - here * 2.0 + prev) * (1.0 / (h * h));
            second.norm() / 100.0
        })
        .collect()
}

/// Parameters shared by every simulated trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub phase_s: f64,
    pub dt_s: f64,
}

impl Default for TrialTiming {
    fn default() -> Self {
        TrialTiming {
            phase_s: 5.0,
            dt_s: 1.0 / IMU_RATE_HZ,
        }
    }
}

/// One inflate/vent cycle: the arm starts flexed at the actuator's active
/// angle, extends while the actuator fills for `phase_s`, then flexes while it
/// vents for another `phase_s`.
pub fn simulate_trial(
    spec: &ActuatorSpec,
    data: &ElongationData,
    pneumatics: &PneumaticConfig,
    arm: &ArmModel,
    timing: TrialTiming,
    source: ElongationSource,
) -> Result<Trajectory> {
    let elongation = data.elongation(spec, source)?;
    let tau = time_constant(spec, &data.displacement, pneumatics)?;
    simulate_motion(elongation, tau, arm, timing)
}

/// Inflate/vent cycle for an actuator with the given free elongation (cm)
/// and pneumatic time constant (s).
pub fn simulate_motion(elongation_cm: f64, tau_s: f64, arm: &ArmModel, timing: TrialTiming) -> Result<Trajectory> {
    arm.validate()?;
    if !(timing.phase_s > 0.0 && timing.dt_s > 0.0) {
        return Err(Error::domain("phase duration and time step must be positive"));
    }
    if !(elongation_cm >= 0.0 && tau_s >= 0.0 && tau_s.is_finite()) {
        return Err(Error::domain("elongation and time constant must be non-negative"));
    }
    let active = arm.active_flexion_deg(elongation_cm);
    let tau = tau_s;

    let phase = timing.phase_s;
    let fill_at_switch = 1.0 - decay(phase, tau);
    let fill = |t: f64| {
        if t <= phase {
            1.0 - decay(t, tau)
        } else {
            fill_at_switch * decay(t - phase, tau)
        }
    };

    let steps = (2.0 * phase / timing.dt_s + 1e-9).floor() as usize;
    let mut traj = Trajectory {
        t_s: Vec::with_capacity(steps + 1),
        shoulder: Vec::with_capacity(steps + 1),
        elbow: Vec::with_capacity(steps + 1),
        end_effector: Vec::with_capacity(steps + 1),
        accel_ms2: Vec::new(),
        flexion_start: None,
    };
    for i in 0..=steps {
        let t = i as f64 * timing.dt_s;
        let theta = (active * (1.0 - fill(t))).clamp(0.0, arm.passive_rom_deg);
        let pose = forward_kinematics(arm, theta)?;
        if traj.flexion_start.is_none() && t >= phase - 1e-9 {
            traj.flexion_start = Some(i);
        }
        traj.t_s.push(t);
        traj.shoulder.push(pose.shoulder);
        traj.elbow.push(pose.elbow);
        traj.end_effector.push(pose.end_effector);
    }
    traj.accel_ms2 = acceleration_magnitudes(&traj.t_s, &traj.end_effector);
    Ok(traj)
}

/// Zero-mean Gaussian perturbation of every marker coordinate and every
/// acceleration sample, deterministic in `seed`.
pub fn add_noise(traj: &Trajectory, seed: u64, sigma_pos_cm: f64, sigma_acc: f64) -> Result<Trajectory> {
    if !(sigma_pos_cm >= 0.0 && sigma_acc >= 0.0) {
        return Err(Error::domain("noise levels must be non-negative"));
    }
    let mut out = traj.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if sigma_pos_cm > 0.0 {
        let normal = Normal::new(0.0, sigma_pos_cm).expect("sigma is finite and positive");
        for series in [&mut out.shoulder, &mut out.elbow, &mut out.end_effector] {
            for p in series.iter_mut() {
                p.x += normal.sample(&mut rng);
                p.y += normal.sample(&mut rng);
            }
        }
    }
    if sigma_acc > 0.0 {
        let normal = Normal::new(0.0, sigma_acc).expect("sigma is finite and positive");
        for a in out.accel_ms2.iter_mut() {
            *a += normal.sample(&mut rng);
        }
    }
    Ok(out)
}
