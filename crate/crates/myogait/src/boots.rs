//! Inverse dynamics over one gait cycle: joint-angle traces in, per-muscle
//! tension-force traces out, one routine per muscle (the `boots` subcommand
//! of the CLI).
//!
//! All moments are computed in the sagittal plane as z-components with x
//! anterior and y up, counterclockwise positive. In that frame, +z means
//! dorsiflexion at the ankle, extension at the knee and flexion at the hip.
//! Reported torque traces use the clinical convention instead: plantarflexion
//! positive at the ankle, extension positive at knee and hip.
//!
//! Muscles only pull, so each signed torque demand is split: the agonist of
//! the demand's sign takes the force, the clamped opposite-sign demand is
//! recorded in `residual`. Both members of an antagonist pair can still be
//! active at one sample because the knee and hip routines combine two
//! separate balances (a joint-local one and an upper-body support one).

use crate::kinematics::{
    gait_phase_at, ground_reaction, trace_acceleration, BodyParams, GaitPhase, GrfProfile,
    GrfTrace, Joint, JointAngleTrace, KinematicsError, ScalarTrace, UnitTag, GRAVITY,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BootsError {
    #[error("trace grids do not match ({0})")]
    GridMismatch(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// The six lower-body muscles the inverse routines cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Muscle {
    TricepsSurae,
    Dorsiflexor,
    Quadriceps,
    Hamstring,
    GluteusMaximus,
    Iliopsoas,
}

impl Muscle {
    pub const ALL: [Muscle; 6] = [
        Muscle::TricepsSurae,
        Muscle::Dorsiflexor,
        Muscle::Quadriceps,
        Muscle::Hamstring,
        Muscle::GluteusMaximus,
        Muscle::Iliopsoas,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Muscle::TricepsSurae => "triceps_surae",
            Muscle::Dorsiflexor => "dorsiflexor",
            Muscle::Quadriceps => "quadriceps",
            Muscle::Hamstring => "hamstring",
            Muscle::GluteusMaximus => "gluteus_maximus",
            Muscle::Iliopsoas => "iliopsoas",
        }
    }

    pub fn parse(s: &str) -> Option<Muscle> {
        Muscle::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn joint(&self) -> Joint {
        match self {
            Muscle::TricepsSurae | Muscle::Dorsiflexor => Joint::Ankle,
            Muscle::Quadriceps | Muscle::Hamstring => Joint::Knee,
            Muscle::GluteusMaximus | Muscle::Iliopsoas => Joint::Hip,
        }
    }
}

impl std::fmt::Display for Muscle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tension force per sample (newtons, always >= 0) plus the clamped negative
/// demand per sample, expressed as a force at the same lever arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuscleForceTrace {
    pub muscle: Muscle,
    pub values: Vec<f64>,
    pub residual: Vec<f64>,
}

impl MuscleForceTrace {
    pub fn zeros(muscle: Muscle, n: usize) -> Self {
        Self {
            muscle,
            values: vec![0.0; n],
            residual: vec![0.0; n],
        }
    }

    /// Split a signed torque demand into pulled force and clamped residual.
    fn set_from_demand(&mut self, k: usize, demand_torque: f64, lever: f64) {
        self.values[k] = (demand_torque / lever).max(0.0);
        self.residual[k] = (-demand_torque / lever).max(0.0);
    }

    /// Elementwise sum of two phase traces (forces and residuals).
    fn sum(muscle: Muscle, a: &Self, b: &Self) -> Self {
        Self {
            muscle,
            values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
            residual: a.residual.iter().zip(&b.residual).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Everything one inverse run produces: the six force traces, the shared GRF
/// and the per-algorithm torque intermediates, all on one grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootsReport {
    pub cycle_duration_ms: f64,
    pub triceps_surae: MuscleForceTrace,
    pub dorsiflexor: MuscleForceTrace,
    pub quadriceps: MuscleForceTrace,
    pub hamstring: MuscleForceTrace,
    pub gluteus_maximus: MuscleForceTrace,
    pub iliopsoas: MuscleForceTrace,
    pub intermediates: Intermediates,
    pub grf: GrfTrace,
}

impl BootsReport {
    pub fn muscle(&self, m: Muscle) -> &MuscleForceTrace {
        match m {
            Muscle::TricepsSurae => &self.triceps_surae,
            Muscle::Dorsiflexor => &self.dorsiflexor,
            Muscle::Quadriceps => &self.quadriceps,
            Muscle::Hamstring => &self.hamstring,
            Muscle::GluteusMaximus => &self.gluteus_maximus,
            Muscle::Iliopsoas => &self.iliopsoas,
        }
    }

    pub fn n(&self) -> usize {
        self.grf.len()
    }
}

/// Per-algorithm torque traces, in the report sign convention
/// (ankle plantarflexion positive, knee and hip extension positive).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Intermediates {
    pub ankle_total_torque: ScalarTrace,
    pub ankle_moment_ground: ScalarTrace,
    pub ankle_moment_feet: ScalarTrace,
    pub dorsiflexor_phase1: MuscleForceTrace,
    pub dorsiflexor_phase2: MuscleForceTrace,
    pub knee_total_torque: ScalarTrace,
    pub knee_moment_ground: ScalarTrace,
    pub knee_moment_shank: ScalarTrace,
    pub quadriceps_part1: MuscleForceTrace,
    pub quadriceps_part2: MuscleForceTrace,
    pub hamstring_part1: MuscleForceTrace,
    pub hamstring_part2: MuscleForceTrace,
    pub hip_total_torque: ScalarTrace,
    pub hip_moment_ground: ScalarTrace,
    pub hip_moment_leg: ScalarTrace,
    pub upper_body_moment: ScalarTrace,
    pub load_fraction: ScalarTrace,
    pub foot_pitch_rad: Vec<f64>,
}

/// Foot pitch above horizontal (toes-up positive) under a vertical trunk:
/// `phi = theta_hip - theta_knee + theta_ankle`.
pub fn foot_pitch(theta_hip: f64, theta_knee: f64, theta_ankle: f64) -> f64 {
    theta_hip - theta_knee + theta_ankle
}

/// Foot pitch magnitude below which a foot edge counts as grounded (~0.57 deg).
pub const TOE_CONTACT_PITCH_RAD: f64 = 0.01;

/// Replace the profile-driven contact flags with flags derived from foot
/// pitch: toes grounded once the foot has pitched down to the contact
/// threshold, heel grounded while it has not pitched below the negative
/// threshold. Swing samples stay contact-free.
pub fn refine_contact_flags(
    grf: &mut GrfTrace,
    hip: &JointAngleTrace,
    knee: &JointAngleTrace,
    ankle: &JointAngleTrace,
    body: &BodyParams,
) {
    let n = grf.len();
    for k in 0..n {
        let frac = k as f64 / n as f64;
        let stance = gait_phase_at(frac, body.stance_fraction) == GaitPhase::Stance;
        let phi = foot_pitch(hip.samples()[k], knee.samples()[k], ankle.samples()[k]);
        grf.toes_on[k] = stance && phi <= TOE_CONTACT_PITCH_RAD;
        grf.heel_on[k] = stance && phi >= -TOE_CONTACT_PITCH_RAD;
    }
}

fn check_grid(traces: &[(&str, usize, f64)]) -> Result<(), BootsError> {
    let (_, n0, cy0) = traces[0];
    for &(name, n, cy) in traces {
        if n != n0 || (cy - cy0).abs() > 1e-9 {
            return Err(BootsError::GridMismatch(format!(
                "{name}: {n} samples / {cy} ms vs {n0} samples / {cy0} ms"
            )));
        }
    }
    Ok(())
}

fn check_grf(grf: &GrfTrace, n: usize) -> Result<(), BootsError> {
    if grf.len() != n {
        return Err(BootsError::GridMismatch(format!(
            "GRF has {} samples, traces have {n}",
            grf.len()
        )));
    }
    Ok(())
}

/// Center of pressure anterior of the ankle, m. Parked at the heel through
/// the first quarter of stance, then progressing linearly to the toe tip at
/// toe-off. Swing samples have no contact; callers gate on GRF.
fn cop_offset(body: &BodyParams, frac: f64) -> f64 {
    let p = (frac / body.stance_fraction).clamp(0.0, 1.0);
    let s = ((p - 0.25) / 0.75).max(0.0);
    -body.heel_offset_m + s * (body.heel_offset_m + body.toe_offset_m)
}

/// Stance-leg joint positions anterior of the ankle, m, under a vertical
/// trunk. Segment directions are measured from the downward vertical,
/// distal-end-anterior positive.
fn leg_positions(body: &BodyParams, theta_hip: f64, theta_knee: f64) -> (f64, f64) {
    let psi_thigh = theta_hip;
    let psi_shank = theta_hip - theta_knee;
    let knee_x = -body.shank_length_m * psi_shank.sin();
    let hip_x = knee_x - body.thigh_length_m * psi_thigh.sin();
    (knee_x, hip_x)
}

/// Tension force of the triceps surae (ankle plantarflexor).
///
/// Per sample: the net ankle torque from the observed motion, minus the
/// ground-reaction moment taken at the toe and the foot-weight moment,
/// leaves the muscle torque; dividing by the lever arm gives force.
pub fn boots_a(
    ankle: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<MuscleForceTrace, BootsError> {
    let n = ankle.len();
    check_grf(grf, n)?;
    let alpha = trace_acceleration(ankle); // +z = dorsiflexion
    let mut out = MuscleForceTrace::zeros(Muscle::TricepsSurae, n);
    for k in 0..n {
        let total_torque_z = body.ankle_inertia_kg_m2 * alpha.values[k];
        let m_ground_z = grf.force_n[k] * body.toe_offset_m;
        let m_feet_z = -body.foot_weight() * body.foot_com_offset();
        let muscle_z = total_torque_z - (m_ground_z + m_feet_z);
        // The plantarflexor pulls in -z; positive demand is -muscle_z.
        out.set_from_demand(k, -muscle_z, body.lever.triceps_surae);
    }
    Ok(out)
}

/// Dorsiflexor, phase 1: support of the foot's own weight, active only where
/// the ground carries less than the foot weighs.
pub fn boots_b_phase1(
    ankle: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<MuscleForceTrace, BootsError> {
    let n = ankle.len();
    check_grf(grf, n)?;
    let alpha = trace_acceleration(ankle);
    let mut out = MuscleForceTrace::zeros(Muscle::Dorsiflexor, n);
    for k in 0..n {
        if grf.force_n[k] < body.foot_weight() {
            let total_torque_z = body.ankle_inertia_kg_m2 * alpha.values[k];
            let m_feet_z = -body.foot_weight() * body.foot_com_offset();
            // The dorsiflexor pulls in +z.
            let demand = total_torque_z - m_feet_z;
            out.set_from_demand(k, demand, body.lever.dorsiflexor);
        }
    }
    Ok(out)
}

/// Dorsiflexor, phase 2: heel-rocker control while the toes are off the
/// ground. The vertical heel force is the whole GRF in that state; the
/// foot-weight moment enters opposing the heel moment, so that the phase sum
/// counts the foot's own support once (phase 1 carries it).
pub fn boots_b_phase2(
    ankle: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<MuscleForceTrace, BootsError> {
    let n = ankle.len();
    check_grf(grf, n)?;
    let alpha = trace_acceleration(ankle);
    let mut out = MuscleForceTrace::zeros(Muscle::Dorsiflexor, n);
    for k in 0..n {
        if !grf.toes_on[k] {
            let total_torque_z = body.ankle_inertia_kg_m2 * alpha.values[k];
            let f_gr = grf.force_n[k];
            let demand = f_gr * body.heel_offset_m
                - body.foot_weight() * body.foot_com_offset()
                + total_torque_z;
            out.set_from_demand(k, demand, body.lever.dorsiflexor);
        }
    }
    Ok(out)
}

/// Dorsiflexor: the two phases summed elementwise.
pub fn boots_b(
    ankle: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<MuscleForceTrace, BootsError> {
    let p1 = boots_b_phase1(ankle, body, grf)?;
    let p2 = boots_b_phase2(ankle, body, grf)?;
    Ok(MuscleForceTrace::sum(Muscle::Dorsiflexor, &p1, &p2))
}

/// Knee-local torque balance shared by the quadriceps and hamstring: net
/// knee torque minus ground and shank-weight moments, extension positive.
fn knee_demand_z(
    knee: &JointAngleTrace,
    hip: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
    k: usize,
    alpha_knee_z: f64,
) -> (f64, f64, f64, f64) {
    let n = knee.len();
    let frac = k as f64 / n as f64;
    let (knee_x, _) = leg_positions(body, hip.samples()[k], knee.samples()[k]);
    let total_torque_z = body.knee_inertia_kg_m2 * alpha_knee_z;
    let m_gr_z = (cop_offset(body, frac) - knee_x) * grf.force_n[k];
    // Shank CoM lies between knee and ankle.
    let shank_com_x = knee_x * (1.0 - body.shank_com_ratio);
    let m_w_z = (shank_com_x - knee_x) * (-body.shank_mass_kg * GRAVITY);
    let demand = total_torque_z - (m_gr_z + m_w_z);
    (demand, total_torque_z, m_gr_z, m_w_z)
}

/// Upper-body support balance shared by the quadriceps and hamstring hip
/// roles: gravity moment of trunk plus contralateral (swing) leg about the
/// hip, weighted by the fraction of body weight this leg currently carries.
/// Returns (moment_z, load_fraction); +z means the upper body falls backward
/// and a hip flexor must negate it.
fn upper_body_moment_z(
    knee: &JointAngleTrace,
    hip: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
    k: usize,
) -> (f64, f64) {
    let n = knee.len();
    let j = (k + n / 2) % n; // contralateral leg leads by half a cycle
    let leg_mass = body.leg_mass_kg();
    let trunk_mass = (body.total_mass_kg - 2.0 * leg_mass).max(0.0);
    let x_trunk = -body.trunk_com_offset_m + body.trunk_com_height_m * body.trunk_lean_rad.sin();

    // Swing-leg CoM from the contralateral hip and knee angles: thigh CoM
    // plus shank+foot lumped along the shank, all relative to the hip.
    let th_c = hip.samples()[j];
    let kn_c = knee.samples()[j];
    let knee_x_c = body.thigh_length_m * th_c.sin();
    let x_thigh = body.thigh_com_ratio * body.thigh_length_m * th_c.sin();
    let shank_foot_mass = body.shank_mass_kg + body.foot_mass_kg;
    let r_sf = if shank_foot_mass > 0.0 {
        (body.shank_mass_kg * body.shank_com_ratio * body.shank_length_m
            + body.foot_mass_kg * body.shank_length_m)
            / shank_foot_mass
    } else {
        0.0
    };
    let x_sf = knee_x_c + r_sf * (th_c - kn_c).sin();
    let x_leg = if leg_mass > 0.0 {
        (body.thigh_mass_kg * x_thigh + shank_foot_mass * x_sf) / leg_mass
    } else {
        0.0
    };

    let upper_mass = trunk_mass + leg_mass;
    let x_up = if upper_mass > 0.0 {
        (trunk_mass * x_trunk + leg_mass * x_leg) / upper_mass
    } else {
        0.0
    };
    let moment_z = -upper_mass * GRAVITY * x_up;
    let bw = body.body_weight();
    let load_fraction = if bw > 0.0 {
        (grf.force_n[k] / bw).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (moment_z, load_fraction)
}

struct KneeHipParts {
    quad_part1: MuscleForceTrace,
    quad_part2: MuscleForceTrace,
    ham_part1: MuscleForceTrace,
    ham_part2: MuscleForceTrace,
    knee_total_torque: Vec<f64>,
    knee_m_gr: Vec<f64>,
    knee_m_w: Vec<f64>,
    upper_moment: Vec<f64>,
    load_fraction: Vec<f64>,
}

fn knee_hip_parts(
    knee: &JointAngleTrace,
    hip: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<KneeHipParts, BootsError> {
    let n = knee.len();
    check_grid(&[
        ("knee", knee.len(), knee.cycle_duration_ms()),
        ("hip", hip.len(), hip.cycle_duration_ms()),
    ])?;
    check_grf(grf, n)?;
    let alpha_flex = trace_acceleration(knee);
    let mut parts = KneeHipParts {
        quad_part1: MuscleForceTrace::zeros(Muscle::Quadriceps, n),
        quad_part2: MuscleForceTrace::zeros(Muscle::Quadriceps, n),
        ham_part1: MuscleForceTrace::zeros(Muscle::Hamstring, n),
        ham_part2: MuscleForceTrace::zeros(Muscle::Hamstring, n),
        knee_total_torque: vec![0.0; n],
        knee_m_gr: vec![0.0; n],
        knee_m_w: vec![0.0; n],
        upper_moment: vec![0.0; n],
        load_fraction: vec![0.0; n],
    };
    for k in 0..n {
        // Knee flexion is measured positive; extension is +z.
        let alpha_z = -alpha_flex.values[k];
        let (demand, tt, m_gr, m_w) = knee_demand_z(knee, hip, body, grf, k, alpha_z);
        parts.quad_part1.set_from_demand(k, demand, body.lever.quadriceps);
        parts.ham_part1.set_from_demand(k, -demand, body.lever.hamstring);
        parts.knee_total_torque[k] = tt;
        parts.knee_m_gr[k] = m_gr;
        parts.knee_m_w[k] = m_w;

        let (m_up, lf) = upper_body_moment_z(knee, hip, body, grf, k);
        // +z: upper body falls backward, the hip-flexor share of the
        // quadriceps negates it; -z goes to the hamstring as hip extensor.
        parts.quad_part2.set_from_demand(k, lf * m_up, body.lever.quadriceps);
        parts.ham_part2.set_from_demand(k, -lf * m_up, body.lever.hamstring);
        parts.upper_moment[k] = m_up;
        parts.load_fraction[k] = lf;
    }
    Ok(parts)
}

/// Quadriceps: knee-extension balance plus the upper-body support share.
pub fn boots_c(
    knee: &JointAngleTrace,
    hip: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<MuscleForceTrace, BootsError> {
    let parts = knee_hip_parts(knee, hip, body, grf)?;
    Ok(MuscleForceTrace::sum(
        Muscle::Quadriceps,
        &parts.quad_part1,
        &parts.quad_part2,
    ))
}

/// Hamstring: the same two balances with the posterior lever arm and the
/// opposite moment sign at each.
pub fn boots_d(
    knee: &JointAngleTrace,
    hip: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<MuscleForceTrace, BootsError> {
    let parts = knee_hip_parts(knee, hip, body, grf)?;
    Ok(MuscleForceTrace::sum(
        Muscle::Hamstring,
        &parts.ham_part1,
        &parts.ham_part2,
    ))
}

struct HipSolution {
    gluteus: MuscleForceTrace,
    iliopsoas: MuscleForceTrace,
    hip_total_torque: Vec<f64>,
    hip_m_gr: Vec<f64>,
    hip_m_w: Vec<f64>,
}

fn hip_solution(
    hip: &JointAngleTrace,
    knee: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
    parts: &KneeHipParts,
) -> HipSolution {
    let n = hip.len();
    let alpha_flex = trace_acceleration(hip); // hip flexion is +z
    let mut glut = MuscleForceTrace::zeros(Muscle::GluteusMaximus, n);
    let mut ilio = MuscleForceTrace::zeros(Muscle::Iliopsoas, n);
    let mut tts = vec![0.0; n];
    let mut grs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for k in 0..n {
        let frac = k as f64 / n as f64;
        let (knee_x, hip_x) = leg_positions(body, hip.samples()[k], knee.samples()[k]);
        let total_torque_z = body.hip_inertia_kg_m2 * alpha_flex.values[k];
        let m_gr_z = (cop_offset(body, frac) - hip_x) * grf.force_n[k];
        // Leg weight about the hip; the foot is lumped at the ankle.
        let x_thigh = hip_x + body.thigh_com_ratio * (knee_x - hip_x);
        let x_shank = knee_x * (1.0 - body.shank_com_ratio);
        let m_w_z = (x_thigh - hip_x) * (-body.thigh_mass_kg * GRAVITY)
            + (x_shank - hip_x) * (-body.shank_mass_kg * GRAVITY)
            + (0.0 - hip_x) * (-body.foot_mass_kg * GRAVITY);
        let muscle_z = total_torque_z - (m_gr_z + m_w_z);
        // The biarticular pair already applies its hip-support share:
        // quadriceps flexes (+z), hamstring extends (-z).
        let provided_z = parts.quad_part2.values[k] * body.lever.quadriceps
            - parts.ham_part2.values[k] * body.lever.hamstring;
        let remaining_z = muscle_z - provided_z;
        // Gluteus maximus extends (-z), iliopsoas flexes (+z).
        glut.set_from_demand(k, -remaining_z, body.lever.gluteus_maximus);
        ilio.set_from_demand(k, remaining_z, body.lever.iliopsoas);
        tts[k] = total_torque_z;
        grs[k] = m_gr_z;
        ws[k] = m_w_z;
    }
    HipSolution {
        gluteus: glut,
        iliopsoas: ilio,
        hip_total_torque: tts,
        hip_m_gr: grs,
        hip_m_w: ws,
    }
}

/// Gluteus maximus: the hip-extension share of the hip torque balance after
/// the quadriceps and hamstring hip contributions are accounted for.
pub fn boots_e(
    hip: &JointAngleTrace,
    knee: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<MuscleForceTrace, BootsError> {
    let parts = knee_hip_parts(knee, hip, body, grf)?;
    Ok(hip_solution(hip, knee, body, grf, &parts).gluteus)
}

/// Iliopsoas: the hip-flexion share of the same balance.
pub fn boots_f(
    hip: &JointAngleTrace,
    knee: &JointAngleTrace,
    body: &BodyParams,
    grf: &GrfTrace,
) -> Result<MuscleForceTrace, BootsError> {
    let parts = knee_hip_parts(knee, hip, body, grf)?;
    Ok(hip_solution(hip, knee, body, grf, &parts).iliopsoas)
}

fn negate(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| -v).collect()
}

/// Run the whole inverse pipeline: compute the GRF once, refine the contact
/// flags from foot pitch, run every per-muscle routine and assemble the
/// report with all intermediates.
pub fn boots_all(
    hip: &JointAngleTrace,
    knee: &JointAngleTrace,
    ankle: &JointAngleTrace,
    body: &BodyParams,
    profile: GrfProfile,
) -> Result<BootsReport, BootsError> {
    check_grid(&[
        ("hip", hip.len(), hip.cycle_duration_ms()),
        ("knee", knee.len(), knee.cycle_duration_ms()),
        ("ankle", ankle.len(), ankle.cycle_duration_ms()),
    ])?;
    let n = hip.len();
    let mut grf = ground_reaction(body, profile, n)?;
    refine_contact_flags(&mut grf, hip, knee, ankle, body);

    let ts = boots_a(ankle, body, &grf)?;
    let df1 = boots_b_phase1(ankle, body, &grf)?;
    let df2 = boots_b_phase2(ankle, body, &grf)?;
    let df = MuscleForceTrace::sum(Muscle::Dorsiflexor, &df1, &df2);
    let parts = knee_hip_parts(knee, hip, body, &grf)?;
    let quad = MuscleForceTrace::sum(Muscle::Quadriceps, &parts.quad_part1, &parts.quad_part2);
    let ham = MuscleForceTrace::sum(Muscle::Hamstring, &parts.ham_part1, &parts.ham_part2);
    let hips = hip_solution(hip, knee, body, &grf, &parts);

    let ankle_alpha = trace_acceleration(ankle);
    let foot_pitch_rad: Vec<f64> = (0..n)
        .map(|k| foot_pitch(hip.samples()[k], knee.samples()[k], ankle.samples()[k]))
        .collect();
    // Ankle intermediates are reported plantarflexion-positive (-z).
    let ankle_tt: Vec<f64> = ankle_alpha
        .values
        .iter()
        .map(|a| -body.ankle_inertia_kg_m2 * a)
        .collect();
    let ankle_m_gr: Vec<f64> = grf.force_n.iter().map(|f| -f * body.toe_offset_m).collect();
    let ankle_m_ft = vec![body.foot_weight() * body.foot_com_offset(); n];

    let nm = |values: Vec<f64>| ScalarTrace {
        values,
        unit: UnitTag::NewtonMeter,
    };

    Ok(BootsReport {
        cycle_duration_ms: hip.cycle_duration_ms(),
        triceps_surae: ts,
        dorsiflexor: df,
        quadriceps: quad,
        hamstring: ham,
        gluteus_maximus: hips.gluteus,
        iliopsoas: hips.iliopsoas,
        intermediates: Intermediates {
            ankle_total_torque: nm(ankle_tt),
            ankle_moment_ground: nm(ankle_m_gr),
            ankle_moment_feet: nm(ankle_m_ft),
            dorsiflexor_phase1: df1,
            dorsiflexor_phase2: df2,
            knee_total_torque: nm(parts.knee_total_torque.clone()),
            knee_moment_ground: nm(parts.knee_m_gr.clone()),
            knee_moment_shank: nm(parts.knee_m_w.clone()),
            quadriceps_part1: parts.quad_part1,
            quadriceps_part2: parts.quad_part2,
            hamstring_part1: parts.ham_part1,
            hamstring_part2: parts.ham_part2,
            hip_total_torque: nm(negate(&hips.hip_total_torque)),
            hip_moment_ground: nm(negate(&hips.hip_m_gr)),
            hip_moment_leg: nm(negate(&hips.hip_m_w)),
            upper_body_moment: nm(negate(&parts.upper_moment)),
            load_fraction: ScalarTrace {
                values: parts.load_fraction,
                unit: UnitTag::Dimensionless,
            },
            foot_pitch_rad,
        },
        grf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::GrfProfile;

    const N: usize = 20;
    const CYCLE_MS: f64 = 1000.0;

    fn constant_trace(joint: Joint, value: f64) -> JointAngleTrace {
        JointAngleTrace::new(joint, vec![value; N], CYCLE_MS).unwrap()
    }

    fn standing() -> (JointAngleTrace, JointAngleTrace, JointAngleTrace) {
        (
            constant_trace(Joint::Hip, 0.0),
            constant_trace(Joint::Knee, 0.0),
            constant_trace(Joint::Ankle, 0.0),
        )
    }

    #[test]
    fn quiet_standing_triceps_surae_matches_hand_statics() {
        let body = BodyParams::default();
        let (_, _, ankle) = standing();
        let grf = ground_reaction(&body, GrfProfile::Static, N).unwrap();
        let ts = boots_a(&ankle, &body, &grf).unwrap();
        // Hand statics: (BW * toe - W_foot * com_offset) / lever.
        let expect = (686.7 * 0.15 - 1.015 * GRAVITY * 0.05) / 0.05;
        for k in 0..N {
            let frac = k as f64 / N as f64;
            if frac < 0.60 {
                assert!((ts.values[k] - expect).abs() / expect < 1e-12, "sample {k}");
                assert_eq!(ts.residual[k], 0.0);
            } else {
                // Swing: the foot-weight moment is plantarflexing, so the
                // demand opposes the plantarflexor and lands in residual.
                assert_eq!(ts.values[k], 0.0);
                let res = 1.015 * GRAVITY * 0.05 / 0.05;
                assert!((ts.residual[k] - res).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_mass_gives_zero_forces() {
        let body = BodyParams::default().with_masses_scaled(0.0);
        let (hip, knee, ankle) = standing();
        let report = boots_all(&hip, &knee, &ankle, &body, GrfProfile::Static).unwrap();
        for m in Muscle::ALL {
            assert!(report.muscle(m).values.iter().all(|&v| v == 0.0), "{m}");
            assert!(report.muscle(m).residual.iter().all(|&v| v == 0.0), "{m}");
        }
    }

    #[test]
    fn dorsiflexor_phase1_guard_and_swing_statics() {
        let body = BodyParams::default();
        let (_, _, ankle) = standing();
        let grf = ground_reaction(&body, GrfProfile::Static, N).unwrap();
        let p1 = boots_b_phase1(&ankle, &body, &grf).unwrap();
        let expect = body.foot_weight() * body.foot_com_offset() / body.lever.dorsiflexor;
        for k in 0..N {
            let frac = k as f64 / N as f64;
            if frac < 0.60 {
                assert_eq!(p1.values[k], 0.0, "stance sample {k} must be gated off");
            } else {
                assert!((p1.values[k] - expect).abs() < 1e-9);
            }
        }
        // GRF exactly equal to the foot weight keeps the gate closed.
        let mut edge = grf.clone();
        for f in &mut edge.force_n {
            *f = body.foot_weight();
        }
        let gated = boots_b_phase1(&ankle, &body, &edge).unwrap();
        assert!(gated.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dorsiflexor_phase2_heel_strike_statics() {
        let body = BodyParams::default();
        let (_, _, ankle) = standing();
        // Craft flags: toes off everywhere, heel carrying 400 N in stance.
        let mut grf = ground_reaction(&body, GrfProfile::Static, N).unwrap();
        for k in 0..N {
            grf.toes_on[k] = false;
            if grf.force_n[k] > 0.0 {
                grf.force_n[k] = 400.0;
            }
        }
        let p2 = boots_b_phase2(&ankle, &body, &grf).unwrap();
        let expect = (400.0 * body.heel_offset_m - body.foot_weight() * body.foot_com_offset())
            / body.lever.dorsiflexor;
        for k in 0..N {
            if grf.force_n[k] > 0.0 {
                assert!((p2.values[k] - expect).abs() < 1e-9, "sample {k}");
            } else {
                // Airborne: the heel term vanishes and the opposing foot
                // weight clamps the phase to zero; phase 1 carries support.
                assert_eq!(p2.values[k], 0.0);
            }
        }
        // Toes on the ground everywhere gates the phase off entirely.
        let mut gated = grf.clone();
        for t in &mut gated.toes_on {
            *t = true;
        }
        let off = boots_b_phase2(&ankle, &body, &gated).unwrap();
        assert!(off.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dorsiflexor_sum_is_elementwise() {
        let body = BodyParams::default();
        let (hip, knee, ankle) = standing();
        let mut grf = ground_reaction(&body, GrfProfile::Static, N).unwrap();
        refine_contact_flags(&mut grf, &hip, &knee, &ankle, &body);
        let p1 = boots_b_phase1(&ankle, &body, &grf).unwrap();
        let p2 = boots_b_phase2(&ankle, &body, &grf).unwrap();
        let b = boots_b(&ankle, &body, &grf).unwrap();
        for k in 0..N {
            assert_eq!(b.values[k], p1.values[k] + p2.values[k]);
        }
    }

    #[test]
    fn knee_pair_partitions_signed_demand() {
        let body = BodyParams::default();
        let (hip, knee, _) = standing();
        let grf = ground_reaction(&body, GrfProfile::Static, N).unwrap();
        let parts = knee_hip_parts(&knee, &hip, &body, &grf).unwrap();
        for k in 0..N {
            let q = &parts.quad_part1;
            let h = &parts.ham_part1;
            // Exactly one side of the balance takes force; the other's
            // residual carries the same torque.
            assert!(q.values[k] == 0.0 || h.values[k] == 0.0, "sample {k}");
            let q_torque = q.values[k] * body.lever.quadriceps;
            let h_res_torque = h.residual[k] * body.lever.hamstring;
            assert!((q_torque - h_res_torque).abs() < 1e-9);
        }
    }

    #[test]
    fn hip_pair_partitions_remaining_demand() {
        let body = BodyParams::default();
        let (hip, knee, _) = standing();
        let grf = ground_reaction(&body, GrfProfile::Static, N).unwrap();
        let g = boots_e(&hip, &knee, &body, &grf).unwrap();
        let i = boots_f(&hip, &knee, &body, &grf).unwrap();
        for k in 0..N {
            assert!(g.values[k] == 0.0 || i.values[k] == 0.0, "sample {k}");
            let g_torque = g.values[k] * body.lever.gluteus_maximus;
            let i_res = i.residual[k] * body.lever.iliopsoas;
            assert!((g_torque - i_res).abs() < 1e-9);
        }
    }

    #[test]
    fn cop_sweep_loads_both_knee_muscles_across_stance() {
        let body = BodyParams::default();
        let hip = constant_trace(Joint::Hip, 0.1);
        let knee = constant_trace(Joint::Knee, 0.2);
        let grf = ground_reaction(&body, GrfProfile::Static, N).unwrap();
        let parts = knee_hip_parts(&knee, &hip, &body, &grf).unwrap();
        let saw_quad = parts.quad_part1.values.iter().any(|&v| v > 0.0);
        let saw_ham = parts.ham_part1.values.iter().any(|&v| v > 0.0);
        assert!(saw_quad && saw_ham);
    }

    #[test]
    fn mass_linearity_on_constant_pose() {
        let body = BodyParams::default();
        let doubled = body.with_masses_scaled(2.0);
        let hip = constant_trace(Joint::Hip, 0.15);
        let knee = constant_trace(Joint::Knee, 0.25);
        let ankle = constant_trace(Joint::Ankle, 0.05);
        let r1 = boots_all(&hip, &knee, &ankle, &body, GrfProfile::DoubleHump).unwrap();
        let r2 = boots_all(&hip, &knee, &ankle, &doubled, GrfProfile::DoubleHump).unwrap();
        for m in Muscle::ALL {
            let a = r1.muscle(m);
            let b = r2.muscle(m);
            for k in 0..N {
                let scale = if a.values[k] > 1e-12 {
                    b.values[k] / a.values[k]
                } else {
                    2.0
                };
                assert!((scale - 2.0).abs() < 1e-9, "{m} sample {k}: {scale}");
            }
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let body = BodyParams::default();
        let ankle = constant_trace(Joint::Ankle, 0.0);
        let short = GrfTrace {
            force_n: vec![0.0; N - 1],
            heel_on: vec![false; N - 1],
            toes_on: vec![false; N - 1],
        };
        assert!(matches!(
            boots_a(&ankle, &body, &short),
            Err(BootsError::GridMismatch(_))
        ));
        let hip = constant_trace(Joint::Hip, 0.0);
        let knee = JointAngleTrace::new(Joint::Knee, vec![0.0; N], 900.0).unwrap();
        let grf = ground_reaction(&body, GrfProfile::Static, N).unwrap();
        assert!(matches!(
            boots_c(&knee, &hip, &body, &grf),
            Err(BootsError::GridMismatch(_))
        ));
    }

    #[test]
    fn foot_pitch_relation() {
        // Heel strike: flexed hip, near-straight knee, neutral ankle pitches
        // the foot up; mid-stance dorsiflexion over a flat foot cancels.
        assert!(foot_pitch(0.5, 0.1, 0.0) > 0.3);
        assert!((foot_pitch(-0.1, 0.1, 0.2)).abs() < 1e-12);
    }

    #[test]
    fn outputs_are_nonnegative_and_grid_preserving() {
        let body = BodyParams::default();
        let hip = constant_trace(Joint::Hip, 0.2);
        let knee = constant_trace(Joint::Knee, 0.1);
        let ankle = constant_trace(Joint::Ankle, -0.1);
        let report = boots_all(&hip, &knee, &ankle, &body, GrfProfile::DoubleHump).unwrap();
        for m in Muscle::ALL {
            let t = report.muscle(m);
            assert_eq!(t.len(), N);
            assert!(t.values.iter().all(|&v| v >= 0.0 && v.is_finite()));
            assert!(t.residual.iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }
}
