//! Rigid-segment leg kinematics and kinetics shared by the inverse-dynamics
//! routines: cyclic trace differentiation, torque relations, anthropometry,
//! gait phases and the vertical ground-reaction-force model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("unknown ground-reaction profile '{0}' (expected 'static' or 'double-hump')")]
    UnknownProfile(String),
    #[error("invalid trace: {0}")]
    BadTrace(String),
    #[error("invalid body parameters: {0}")]
    BadBody(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Hip,
    Knee,
    Ankle,
}

/// One gait cycle of joint angles, uniformly sampled and treated as periodic.
///
/// Angle conventions are the clinical ones: hip and knee flexion positive,
/// ankle dorsiflexion positive. Radians internally; data files use degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAngleTrace {
    pub joint: Joint,
    samples: Vec<f64>,
    cycle_duration_ms: f64,
}

impl JointAngleTrace {
    pub fn new(joint: Joint, samples: Vec<f64>, cycle_duration_ms: f64) -> Result<Self, KinematicsError> {
        if samples.len() < 3 {
            return Err(KinematicsError::BadTrace(format!(
                "need at least 3 samples, got {}",
                samples.len()
            )));
        }
        if !(cycle_duration_ms > 0.0) {
            return Err(KinematicsError::BadTrace("cycle duration must be positive".into()));
        }
        Ok(Self {
            joint,
            samples,
            cycle_duration_ms,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cycle_duration_ms(&self) -> f64 {
        self.cycle_duration_ms
    }

    /// Sample spacing in seconds.
    pub fn dt_s(&self) -> f64 {
        self.cycle_duration_ms / 1000.0 / self.samples.len() as f64
    }

    /// Periodic access: index wraps modulo the cycle.
    pub fn at(&self, k: isize) -> f64 {
        let n = self.samples.len() as isize;
        self.samples[k.rem_euclid(n) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitTag {
    RadPerS,
    RadPerS2,
    Newton,
    NewtonMeter,
    Dimensionless,
}

/// A derived per-sample series on the same grid as its source trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarTrace {
    pub values: Vec<f64>,
    pub unit: UnitTag,
}

impl ScalarTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, k: isize) -> f64 {
        let n = self.values.len() as isize;
        self.values[k.rem_euclid(n) as usize]
    }
}

fn central_difference(values: &[f64], dt_s: f64) -> Vec<f64> {
    let n = values.len() as isize;
    (0..n)
        .map(|k| {
            let next = values[(k + 1).rem_euclid(n) as usize];
            let prev = values[(k - 1).rem_euclid(n) as usize];
            (next - prev) / (2.0 * dt_s)
        })
        .collect()
}

/// Angular velocity by central differences with periodic wrap, rad/s.
pub fn angular_velocity(trace: &JointAngleTrace) -> ScalarTrace {
    ScalarTrace {
        values: central_difference(&trace.samples, trace.dt_s()),
        unit: UnitTag::RadPerS,
    }
}

/// Angular acceleration: the same operator applied to a velocity trace, rad/s².
pub fn angular_acceleration(omega: &ScalarTrace, dt_s: f64) -> ScalarTrace {
    ScalarTrace {
        values: central_difference(&omega.values, dt_s),
        unit: UnitTag::RadPerS2,
    }
}

/// Convenience: angle trace straight to angular acceleration.
pub fn trace_acceleration(trace: &JointAngleTrace) -> ScalarTrace {
    angular_acceleration(&angular_velocity(trace), trace.dt_s())
}

/// Torque from a force at a lever distance: `tau = f * d`.
/// Sign is the caller's convention.
pub fn torque_from_force(f_newton: f64, d_m: f64) -> f64 {
    f_newton * d_m
}

/// Torque from rotational inertia: `tau = i * alpha`.
pub fn torque_from_inertia(i_kg_m2: f64, alpha_rad_s2: f64) -> f64 {
    i_kg_m2 * alpha_rad_s2
}

/// Per-muscle moment-arm distances about their joints, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeverArms {
    pub triceps_surae: f64,
    pub dorsiflexor: f64,
    pub quadriceps: f64,
    pub hamstring: f64,
    pub gluteus_maximus: f64,
    pub iliopsoas: f64,
}

impl Default for LeverArms {
    fn default() -> Self {
        Self {
            triceps_surae: 0.05,
            dorsiflexor: 0.04,
            quadriceps: 0.045,
            hamstring: 0.04,
            gluteus_maximus: 0.07,
            iliopsoas: 0.05,
        }
    }
}

/// Anthropometry and contact-model parameters.
///
/// Segment masses default to standard body-mass ratios (foot 1.45%,
/// shank 4.65%, thigh 10%), segment CoM ratios are measured from the
/// proximal end (heel for the foot), and joint inertias are the inertia of
/// the distal chain about that joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BodyParams {
    pub total_mass_kg: f64,
    pub foot_mass_kg: f64,
    pub shank_mass_kg: f64,
    pub thigh_mass_kg: f64,
    pub foot_length_m: f64,
    pub shank_length_m: f64,
    pub thigh_length_m: f64,
    pub foot_com_ratio: f64,
    pub shank_com_ratio: f64,
    pub thigh_com_ratio: f64,
    pub ankle_inertia_kg_m2: f64,
    pub knee_inertia_kg_m2: f64,
    pub hip_inertia_kg_m2: f64,
    pub lever: LeverArms,
    /// Toe tip anterior of the ankle, m.
    pub toe_offset_m: f64,
    /// Heel posterior of the ankle, m.
    pub heel_offset_m: f64,
    /// Trunk+head+arms CoM posterior of the hip in anatomical stance, m.
    pub trunk_com_offset_m: f64,
    /// Height of the trunk CoM above the hip, used by the trunk-lean term, m.
    pub trunk_com_height_m: f64,
    /// Optional anterior trunk lean, radians.
    pub trunk_lean_rad: f64,
    /// Stance occupies cycle fractions [0, stance_fraction).
    pub stance_fraction: f64,
    /// Profile-driven toe contact begins at this cycle fraction.
    pub toe_contact_fraction: f64,
    /// Profile-driven heel contact ends at this cycle fraction.
    pub heel_off_fraction: f64,
}

impl Default for BodyParams {
    fn default() -> Self {
        let total = 70.0;
        Self {
            total_mass_kg: total,
            foot_mass_kg: 0.0145 * total,
            shank_mass_kg: 0.0465 * total,
            thigh_mass_kg: 0.100 * total,
            foot_length_m: 0.20,
            shank_length_m: 0.42,
            thigh_length_m: 0.41,
            foot_com_ratio: 0.50,
            shank_com_ratio: 0.433,
            thigh_com_ratio: 0.433,
            ankle_inertia_kg_m2: 0.010,
            knee_inertia_kg_m2: 0.35,
            hip_inertia_kg_m2: 1.20,
            lever: LeverArms::default(),
            toe_offset_m: 0.15,
            heel_offset_m: 0.05,
            trunk_com_offset_m: 0.03,
            trunk_com_height_m: 0.25,
            trunk_lean_rad: 0.0,
            stance_fraction: 0.60,
            toe_contact_fraction: 0.05,
            heel_off_fraction: 0.45,
        }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let seg = self.foot_mass_kg + self.shank_mass_kg + self.thigh_mass_kg;
        if self.total_mass_kg < 0.0 || self.foot_mass_kg < 0.0 || self.shank_mass_kg < 0.0 || self.thigh_mass_kg < 0.0 {
            return Err(KinematicsError::BadBody("masses must be nonnegative".into()));
        }
        if self.total_mass_kg > 0.0 && seg >= self.total_mass_kg {
            return Err(KinematicsError::BadBody(
                "segment masses must sum below the total mass".into(),
            ));
        }
        for (name, v) in [
            ("foot_length_m", self.foot_length_m),
            ("shank_length_m", self.shank_length_m),
            ("thigh_length_m", self.thigh_length_m),
            ("toe_offset_m", self.toe_offset_m),
            ("heel_offset_m", self.heel_offset_m),
        ] {
            if !(v > 0.0) {
                return Err(KinematicsError::BadBody(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("foot_com_ratio", self.foot_com_ratio),
            ("shank_com_ratio", self.shank_com_ratio),
            ("thigh_com_ratio", self.thigh_com_ratio),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(KinematicsError::BadBody(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.stance_fraction > 0.0 && self.stance_fraction < 1.0) {
            return Err(KinematicsError::BadBody("stance_fraction must lie in (0, 1)".into()));
        }
        let l = self.lever;
        for (name, v) in [
            ("triceps_surae", l.triceps_surae),
            ("dorsiflexor", l.dorsiflexor),
            ("quadriceps", l.quadriceps),
            ("hamstring", l.hamstring),
            ("gluteus_maximus", l.gluteus_maximus),
            ("iliopsoas", l.iliopsoas),
        ] {
            if !(v > 0.0) {
                return Err(KinematicsError::BadBody(format!("lever arm {name} must be positive")));
            }
        }
        Ok(())
    }

    /// Weight of one foot, newtons.
    pub fn foot_weight(&self) -> f64 {
        self.foot_mass_kg * GRAVITY
    }

    /// Body weight, newtons.
    pub fn body_weight(&self) -> f64 {
        self.total_mass_kg * GRAVITY
    }

    /// Mass of one whole leg.
    pub fn leg_mass_kg(&self) -> f64 {
        self.foot_mass_kg + self.shank_mass_kg + self.thigh_mass_kg
    }

    /// Scale every mass and every mass-proportional inertia by `factor`.
    pub fn with_masses_scaled(&self, factor: f64) -> Self {
        Self {
            total_mass_kg: self.total_mass_kg * factor,
            foot_mass_kg: self.foot_mass_kg * factor,
            shank_mass_kg: self.shank_mass_kg * factor,
            thigh_mass_kg: self.thigh_mass_kg * factor,
            ankle_inertia_kg_m2: self.ankle_inertia_kg_m2 * factor,
            knee_inertia_kg_m2: self.knee_inertia_kg_m2 * factor,
            hip_inertia_kg_m2: self.hip_inertia_kg_m2 * factor,
            ..self.clone()
        }
    }

    /// Horizontal offset of the foot CoM anterior of the ankle when the foot
    /// is flat, m. The foot spans [-heel_offset, +toe_offset] about the ankle.
    pub fn foot_com_offset(&self) -> f64 {
        self.foot_com_ratio * (self.heel_offset_m + self.toe_offset_m) - self.heel_offset_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaitPhase {
    Stance,
    Swing,
}

/// Phase at a cycle fraction in [0, 1). The cycle origin is heel strike.
pub fn gait_phase_at(fraction: f64, stance_fraction: f64) -> GaitPhase {
    if fraction < stance_fraction {
        GaitPhase::Stance
    } else {
        GaitPhase::Swing
    }
}

/// Phase of sample `k` out of `n`.
pub fn gait_phase(k: usize, n: usize, stance_fraction: f64) -> GaitPhase {
    gait_phase_at(k as f64 / n as f64, stance_fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrfProfile {
    Static,
    DoubleHump,
}

impl GrfProfile {
    pub fn parse(s: &str) -> Result<Self, KinematicsError> {
        match s {
            "static" => Ok(Self::Static),
            "double-hump" => Ok(Self::DoubleHump),
            other => Err(KinematicsError::UnknownProfile(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Static => "static",
            Self::DoubleHump => "double-hump",
        }
    }
}

/// Vertical ground reaction force over one cycle plus contact flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfTrace {
    pub force_n: Vec<f64>,
    pub heel_on: Vec<bool>,
    pub toes_on: Vec<bool>,
}

impl GrfTrace {
    pub fn len(&self) -> usize {
        self.force_n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.force_n.is_empty()
    }
}

/// Smoothstep-interpolated keypoints in stance progress `p` in [0, 1]:
/// up to the first hump, down to the valley, up to the second hump, out to
/// toe-off. The second hump sits slightly above the first so push-off carries
/// the larger load.
const DOUBLE_HUMP_KEYS: [(f64, f64); 5] = [
    (0.0, 0.0),
    (1.0 / 6.0, 1.08),
    (0.5, 0.80),
    (5.0 / 6.0, 1.12),
    (1.0, 0.0),
];

fn double_hump_factor(p: f64) -> f64 {
    for w in DOUBLE_HUMP_KEYS.windows(2) {
        let ((p0, v0), (p1, v1)) = (w[0], w[1]);
        if p <= p1 {
            let u = ((p - p0) / (p1 - p0)).clamp(0.0, 1.0);
            let s = u * u * (3.0 - 2.0 * u);
            return v0 + (v1 - v0) * s;
        }
    }
    0.0
}

/// Vertical GRF over the cycle: zero during swing, the chosen profile during
/// stance. Contact flags follow the body's default phase windows; callers
/// with access to the angle traces may refine them from foot pitch.
pub fn ground_reaction(body: &BodyParams, profile: GrfProfile, n: usize) -> Result<GrfTrace, KinematicsError> {
    if n < 3 {
        return Err(KinematicsError::BadTrace(format!("need at least 3 samples, got {n}")));
    }
    let bw = body.body_weight();
    let mut force = Vec::with_capacity(n);
    let mut heel = Vec::with_capacity(n);
    let mut toes = Vec::with_capacity(n);
    for k in 0..n {
        let frac = k as f64 / n as f64;
        let in_stance = frac < body.stance_fraction;
        let f = if !in_stance {
            0.0
        } else {
            match profile {
                GrfProfile::Static => bw,
                GrfProfile::DoubleHump => bw * double_hump_factor(frac / body.stance_fraction),
            }
        };
        force.push(f);
        heel.push(in_stance && frac < body.heel_off_fraction);
        toes.push(in_stance && frac >= body.toe_contact_fraction);
    }
    Ok(GrfTrace {
        force_n: force,
        heel_on: heel,
        toes_on: toes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn trace(samples: Vec<f64>) -> JointAngleTrace {
        JointAngleTrace::new(Joint::Ankle, samples, 1000.0).unwrap()
    }

    #[test]
    fn constant_trace_differentiates_to_zero() {
        let t = trace(vec![0.4; 24]);
        let w = angular_velocity(&t);
        assert!(w.values.iter().all(|&v| v == 0.0));
        let a = angular_acceleration(&w, t.dt_s());
        assert!(a.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_ramp_gives_constant_interior_velocity() {
        let c = 0.02;
        let n = 20;
        let t = trace((0..n).map(|k| c * k as f64).collect());
        let w = angular_velocity(&t);
        let expect = c / t.dt_s();
        for k in 1..n - 1 {
            assert!((w.values[k] - expect).abs() < 1e-9, "interior sample {k}");
        }
    }

    #[test]
    fn sinusoid_matches_analytic_derivatives() {
        let n = 100usize;
        let t = trace((0..n).map(|k| (2.0 * PI * k as f64 / n as f64).sin()).collect());
        let period_s = 1.0;
        let w = angular_velocity(&t);
        let a = trace_acceleration(&t);
        let omega0 = 2.0 * PI / period_s;
        for k in 0..n {
            let phase = 2.0 * PI * k as f64 / n as f64;
            let w_true = omega0 * phase.cos();
            let a_true = -omega0 * omega0 * phase.sin();
            assert!((w.values[k] - w_true).abs() < 2e-2 * omega0, "velocity at {k}");
            assert!((a.values[k] - a_true).abs() < 4e-2 * omega0 * omega0, "acceleration at {k}");
        }
    }

    #[test]
    fn differentiation_is_linear_and_exact_on_quadratics() {
        let n = 16;
        let a: Vec<f64> = (0..n).map(|k| 0.3 * (k as f64) * (k as f64)).collect();
        let b: Vec<f64> = (0..n).map(|k| 1.7 * k as f64 - 4.0).collect();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
        let ta = trace(a);
        let tb = trace(b);
        let tc = trace(combo);
        let (wa, wb, wc) = (angular_velocity(&ta), angular_velocity(&tb), angular_velocity(&tc));
        let dt = ta.dt_s();
        for k in 1..n - 1 {
            let lin = 2.0 * wa.values[k] - 0.5 * wb.values[k];
            assert!((wc.values[k] - lin).abs() < 1e-9);
            // Central difference of k^2 at interior k is exactly 2k.
            assert!((wa.values[k] - 0.3 * 2.0 * k as f64 / dt).abs() < 1e-8);
        }
    }

    #[test]
    fn torque_relations() {
        assert_eq!(torque_from_force(10.0, 0.05), 0.5);
        assert_eq!(torque_from_force(0.0, 0.3), 0.0);
        assert_eq!(torque_from_inertia(0.1, 0.0), 0.0);
        assert!((torque_from_inertia(0.1, 2.0) - 0.2).abs() < 1e-15);
        // Gravity moment of a 2 kg point at 0.3 m, checked by hand statics.
        let tau = torque_from_force(-2.0 * GRAVITY, 0.3);
        assert!((tau + 5.886).abs() < 1e-12);
        // Round trip through the inverse pair.
        let alpha = tau / 0.35;
        assert!((torque_from_inertia(0.35, alpha) - tau).abs() < 1e-12);
    }

    #[test]
    fn gait_phase_boundaries() {
        assert_eq!(gait_phase(0, 20, 0.60), GaitPhase::Stance);
        assert_eq!(gait_phase_at(0.59, 0.60), GaitPhase::Stance);
        assert_eq!(gait_phase_at(0.60, 0.60), GaitPhase::Swing);
        let n = 40;
        let stance = (0..n).filter(|&k| gait_phase(k, n, 0.6) == GaitPhase::Stance).count();
        let swing = (0..n).filter(|&k| gait_phase(k, n, 0.6) == GaitPhase::Swing).count();
        assert_eq!(stance + swing, n);
    }

    #[test]
    fn static_profile_is_body_weight_through_stance() {
        let body = BodyParams::default();
        let grf = ground_reaction(&body, GrfProfile::Static, 20).unwrap();
        for k in 0..20 {
            let frac = k as f64 / 20.0;
            if frac < 0.60 {
                assert!((grf.force_n[k] - body.body_weight()).abs() < 1e-9);
            } else {
                assert_eq!(grf.force_n[k], 0.0);
                assert!(!grf.heel_on[k] && !grf.toes_on[k]);
            }
        }
    }

    #[test]
    fn double_hump_shape() {
        let body = BodyParams::default();
        let n = 600usize;
        let grf = ground_reaction(&body, GrfProfile::DoubleHump, n).unwrap();
        let bw = body.body_weight();
        let at = |frac: f64| grf.force_n[(frac * n as f64) as usize];
        // Two maxima close to 1.1 BW near 10% and 50% of the cycle.
        assert!((at(0.10) - 1.08 * bw).abs() < 0.01 * bw);
        assert!((at(0.50) - 1.12 * bw).abs() < 0.01 * bw);
        // Local minimum near 30%.
        assert!((at(0.30) - 0.80 * bw).abs() < 0.01 * bw);
        assert!(at(0.30) < at(0.10) && at(0.30) < at(0.50));
        // Swing is strictly zero and forces are nonnegative throughout.
        assert!(grf.force_n.iter().all(|&f| f >= 0.0));
        assert!((0..n).filter(|&k| k as f64 / n as f64 >= 0.6).all(|k| grf.force_n[k] == 0.0));
        // Argmax sits on the second hump.
        let argmax = (0..n).max_by(|&i, &j| grf.force_n[i].total_cmp(&grf.force_n[j])).unwrap();
        let peak_frac = argmax as f64 / n as f64;
        assert!((peak_frac - 0.50).abs() < 0.02, "peak at {peak_frac}");
    }

    #[test]
    fn double_hump_supports_body_weight_on_average() {
        let body = BodyParams::default();
        let n = 2000usize;
        let grf = ground_reaction(&body, GrfProfile::DoubleHump, n).unwrap();
        let stance: Vec<f64> = grf
            .force_n
            .iter()
            .copied()
            .take((body.stance_fraction * n as f64) as usize)
            .collect();
        let mean = stance.iter().sum::<f64>() / stance.len() as f64;
        let per_leg = mean * body.stance_fraction / body.body_weight();
        assert!(
            (0.45..=0.55).contains(&per_leg),
            "per-leg load share {per_leg} outside [0.45, 0.55]"
        );
    }

    #[test]
    fn contact_flags_follow_default_windows() {
        let body = BodyParams::default();
        let grf = ground_reaction(&body, GrfProfile::DoubleHump, 100).unwrap();
        assert!(grf.heel_on[0] && !grf.toes_on[0]);
        assert!(grf.heel_on[20] && grf.toes_on[20]);
        assert!(!grf.heel_on[50] && grf.toes_on[50]);
        assert!(!grf.heel_on[70] && !grf.toes_on[70]);
        // Whenever force is positive at least one contact flag is set.
        for k in 0..100 {
            if grf.force_n[k] > 0.0 {
                assert!(grf.heel_on[k] || grf.toes_on[k]);
            }
        }
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(GrfProfile::parse("static").unwrap(), GrfProfile::Static);
        assert_eq!(GrfProfile::parse("double-hump").unwrap(), GrfProfile::DoubleHump);
        assert!(matches!(
            GrfProfile::parse("triple"),
            Err(KinematicsError::UnknownProfile(_))
        ));
    }

    #[test]
    fn trace_and_body_validation() {
        assert!(JointAngleTrace::new(Joint::Hip, vec![0.0, 1.0], 1000.0).is_err());
        assert!(JointAngleTrace::new(Joint::Hip, vec![0.0; 5], 0.0).is_err());
        assert!(BodyParams::default().validate().is_ok());
        let mut bad = BodyParams::default();
        bad.foot_mass_kg = 80.0;
        assert!(bad.validate().is_err());
        let zeroed = BodyParams::default().with_masses_scaled(0.0);
        assert!(zeroed.validate().is_ok());
    }

    #[test]
    fn periodic_indexing_wraps() {
        let t = trace(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.at(-1), 4.0);
        assert_eq!(t.at(4), 1.0);
        assert_eq!(t.at(7), 4.0);
    }
}
