//! Motor-unit level muscle model: single-twitch dynamics, wave summation,
//! tetanic saturation, length-tension modulation and passive elasticity.
//!
//! A muscle is a population of motor-unit groups, each with its own twitch
//! parameters and stimulus train. All forces are in relative (dimensionless)
//! units; callers apply a per-muscle newton scale when physical units are
//! needed. All times are milliseconds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MuscleError {
    #[error("stimulus train violates minimum inter-stimulus interval ({gap_ms} ms < {min_isi_ms} ms)")]
    IsiViolation { gap_ms: f64, min_isi_ms: f64 },
    #[error("evaluation time moved backwards ({t_ms} ms < {now_ms} ms)")]
    NonMonotonicTime { t_ms: f64, now_ms: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Single-twitch parameters: gain `f0` and time-to-peak `t_peak` (ms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwitchParams {
    pub f0: f64,
    pub t_peak: f64,
}

impl TwitchParams {
    pub fn new(f0: f64, t_peak: f64) -> Result<Self, MuscleError> {
        if !(f0 > 0.0) || !(t_peak > 0.0) {
            return Err(MuscleError::InvalidParameter(format!(
                "twitch params must be positive (f0={f0}, t_peak={t_peak})"
            )));
        }
        Ok(Self { f0, t_peak })
    }

    /// Time at which the short-decay twitch actually peaks.
    ///
    /// The maximum of `(t/T)·t^(-t/T)` sits at the root of `t(1 + ln t) = T`,
    /// which is earlier than `T` itself. Solved by Newton iteration.
    pub fn peak_time(&self) -> f64 {
        let target = self.t_peak;
        // h(t) = t + t ln t - T, h'(t) = 2 + ln t; single root for t > 1/e.
        let mut t = (target / (1.0 + target.max(1.001).ln())).max(1.0);
        for _ in 0..64 {
            let h = t + t * t.ln() - target;
            let dh = 2.0 + t.ln();
            let step = h / dh;
            t -= step;
            if t <= 0.5 {
                t = 0.5;
            }
            if step.abs() < 1e-12 {
                break;
            }
        }
        t
    }

    /// Peak force of the short-decay twitch.
    pub fn peak_force(&self) -> f64 {
        twitch_force(self, self.peak_time())
    }
}

/// Classic long-tail twitch: `F0 · (t/T) · e^(-t/T)`. Peaks at `t = T`.
pub fn twitch_force_winter(p: &TwitchParams, t_ms: f64) -> f64 {
    if t_ms <= 0.0 {
        return 0.0;
    }
    let x = t_ms / p.t_peak;
    p.f0 * x * (-x).exp()
}

/// Short-decay twitch: `F0 · (t/T) · t^(-t/T)`, computed as
/// `F0 · (t/T) · e^(-(t/T)·ln t)`.
///
/// The base-`t` power makes the transient die out within the physiological
/// contraction range instead of the several-hundred-millisecond tail of
/// [`twitch_force_winter`]. Zero for `t <= 0`; the `t/T` factor drives the
/// value to zero as `t -> 0+` even though `t^(-t/T) -> 1`.
pub fn twitch_force(p: &TwitchParams, t_ms: f64) -> f64 {
    if t_ms <= 0.0 {
        return 0.0;
    }
    let x = t_ms / p.t_peak;
    p.f0 * x * (-x * t_ms.ln()).exp()
}

/// One motor-unit class: twitch shape, tetanic ceiling and refractory limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorUnitClass {
    pub label: String,
    pub twitch: TwitchParams,
    /// Tetanic ceiling, relative force units.
    pub max_force: f64,
    /// Minimum inter-stimulus interval, ms.
    pub min_isi: f64,
}

impl MotorUnitClass {
    pub fn new(
        label: impl Into<String>,
        twitch: TwitchParams,
        max_force: f64,
        min_isi: f64,
    ) -> Result<Self, MuscleError> {
        if !(max_force > 0.0) || !(min_isi > 0.0) {
            return Err(MuscleError::InvalidParameter(format!(
                "max_force and min_isi must be positive ({max_force}, {min_isi})"
            )));
        }
        Ok(Self {
            label: label.into(),
            twitch,
            max_force,
            min_isi,
        })
    }

    /// Class with the tetanic ceiling defaulted to `cap_peaks` single-twitch peaks.
    pub fn with_default_cap(
        label: impl Into<String>,
        twitch: TwitchParams,
        cap_peaks: f64,
        min_isi: f64,
    ) -> Result<Self, MuscleError> {
        let cap = cap_peaks * twitch.peak_force();
        Self::new(label, twitch, cap, min_isi)
    }
}

/// Strictly increasing stimulus onset times, ms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StimulusTrain {
    times: Vec<f64>,
}

impl StimulusTrain {
    pub fn empty() -> Self {
        Self { times: Vec::new() }
    }

    pub fn new(times: Vec<f64>) -> Result<Self, MuscleError> {
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(MuscleError::InvalidParameter(format!(
                    "stimulus times must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Append a stimulus; must come after the last one.
    pub fn push(&mut self, t_ms: f64) -> Result<(), MuscleError> {
        if let Some(&last) = self.times.last() {
            if t_ms <= last {
                return Err(MuscleError::InvalidParameter(format!(
                    "stimulus at {t_ms} ms not after previous at {last} ms"
                )));
            }
        }
        self.times.push(t_ms);
        Ok(())
    }

    /// Smallest gap between consecutive stimuli, if any.
    pub fn min_gap(&self) -> Option<f64> {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc, g| Some(acc.map_or(g, |m: f64| m.min(g))))
    }

    fn check_isi(&self, min_isi: f64) -> Result<(), MuscleError> {
        if let Some(gap) = self.min_gap() {
            if gap < min_isi {
                return Err(MuscleError::IsiViolation {
                    gap_ms: gap,
                    min_isi_ms: min_isi,
                });
            }
        }
        Ok(())
    }
}

/// Wave summation: superposition of one twitch per past stimulus, before the
/// tetanic cap is applied.
pub fn mu_force_pre_cap(train: &StimulusTrain, p: &TwitchParams, t_ms: f64) -> f64 {
    train
        .times
        .iter()
        .take_while(|&&tj| tj <= t_ms)
        .map(|&tj| twitch_force(p, t_ms - tj))
        .sum()
}

/// Tetanus: wave summation clipped at the class ceiling. Errors if the train
/// violates the class refractory limit (an invalid plan, not a physical state).
pub fn mu_force(train: &StimulusTrain, class: &MotorUnitClass, t_ms: f64) -> Result<f64, MuscleError> {
    train.check_isi(class.min_isi)?;
    Ok(mu_force_pre_cap(train, &class.twitch, t_ms).min(class.max_force))
}

/// Piecewise-linear length-tension curve over length ratio `l` (1.0 = relaxed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthForceCurve {
    knots: Vec<(f64, f64)>,
}

impl LengthForceCurve {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, MuscleError> {
        if knots.len() < 2 {
            return Err(MuscleError::InvalidParameter(
                "length-force curve needs at least two knots".into(),
            ));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(MuscleError::InvalidParameter(
                    "length-force knots must have strictly increasing length".into(),
                ));
            }
        }
        let mut ones = 0usize;
        for &(_, r) in &knots {
            if !(0.0..=1.0).contains(&r) {
                return Err(MuscleError::InvalidParameter(
                    "length-force factors must lie in [0, 1]".into(),
                ));
            }
            if r == 1.0 {
                ones += 1;
            }
        }
        if ones != 1 {
            return Err(MuscleError::InvalidParameter(
                "exactly one knot must attain factor 1.0".into(),
            ));
        }
        Ok(Self { knots })
    }

    /// Symmetric tent peaking at the relaxed length: (0.5, 0), (1.0, 1), (1.5, 0).
    pub fn default_tent() -> Self {
        Self::new(vec![(0.5, 0.0), (1.0, 1.0), (1.5, 0.0)]).unwrap()
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }
}

/// Length-tension factor at length ratio `l`; zero outside the knot range.
pub fn length_force_factor(curve: &LengthForceCurve, l: f64) -> f64 {
    let k = &curve.knots;
    if l < k[0].0 || l > k[k.len() - 1].0 {
        return 0.0;
    }
    for w in k.windows(2) {
        let ((l0, r0), (l1, r1)) = (w[0], w[1]);
        if l == l0 {
            return r0;
        }
        if l <= l1 {
            if l == l1 {
                return r1;
            }
            return r0 + (r1 - r0) * (l - l0) / (l1 - l0);
        }
    }
    k[k.len() - 1].1
}

/// A population of identical motor units sharing one class and one train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitGroup {
    pub class: MotorUnitClass,
    pub count: u32,
    pub train: StimulusTrain,
}

/// The muscle agent: passive elasticity plus the motor-unit populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuscleAgent {
    pub name: String,
    /// Passive gain F_P0, relative units.
    pub f_p0: f64,
    pub curve: LengthForceCurve,
    pub units: Vec<UnitGroup>,
    /// Current length ratio l (1.0 = relaxed length).
    pub length_ratio: f64,
}

impl MuscleAgent {
    pub fn new(
        name: impl Into<String>,
        f_p0: f64,
        curve: LengthForceCurve,
        units: Vec<UnitGroup>,
    ) -> Result<Self, MuscleError> {
        if !(f_p0 >= 0.0) {
            return Err(MuscleError::InvalidParameter("f_p0 must be >= 0".into()));
        }
        Ok(Self {
            name: name.into(),
            f_p0,
            curve,
            units,
            length_ratio: 1.0,
        })
    }

    pub fn set_length_ratio(&mut self, l: f64) -> Result<(), MuscleError> {
        if !(l > 0.0) {
            return Err(MuscleError::InvalidParameter("length ratio must be > 0".into()));
        }
        self.length_ratio = l;
        Ok(())
    }

    /// Sum of tetanic ceilings over all units: the absolute force ceiling.
    pub fn tetanic_capacity(&self) -> f64 {
        self.units
            .iter()
            .map(|g| f64::from(g.count) * g.class.max_force)
            .sum()
    }
}

/// Active force: length-tension factor times the capped motor-unit sum.
pub fn active_force(m: &MuscleAgent, t_ms: f64) -> Result<f64, MuscleError> {
    let factor = length_force_factor(&m.curve, m.length_ratio);
    let mut sum = 0.0;
    for g in &m.units {
        sum += f64::from(g.count) * mu_force(&g.train, &g.class, t_ms)?;
    }
    Ok(factor * sum)
}

/// Passive elastic force: `max(F_P0 · e^(l-1), 0)`, independent of stimulation.
pub fn passive_force(m: &MuscleAgent) -> f64 {
    (m.f_p0 * (m.length_ratio - 1.0).exp()).max(0.0)
}

/// Total muscle force: active plus passive.
pub fn total_force(m: &MuscleAgent, t_ms: f64) -> Result<f64, MuscleError> {
    Ok(active_force(m, t_ms)? + passive_force(m))
}

/// Incremental evaluator with stimulus pruning.
///
/// Holds per-group queues of live stimuli and drops any stimulus whose
/// maximal remaining contribution has fallen below `epsilon`, so the cost of
/// one evaluation is bounded by the count of live stimuli rather than the
/// length of the stimulation history. Time must advance monotonically.
#[derive(Debug, Clone)]
pub struct MuscleEvaluator {
    f_p0: f64,
    curve: LengthForceCurve,
    length_ratio: f64,
    groups: Vec<EvalGroup>,
    now: f64,
}

#[derive(Debug, Clone)]
struct EvalGroup {
    class: MotorUnitClass,
    count: f64,
    peak_time: f64,
    eps: f64,
    /// Live stimuli, oldest first. `head` indexes the first live entry so
    /// pruning is O(1) amortized without shifting.
    times: Vec<f64>,
    head: usize,
}

impl MuscleEvaluator {
    pub fn new(agent: &MuscleAgent, epsilon: f64) -> Self {
        let groups = agent
            .units
            .iter()
            .map(|g| EvalGroup {
                class: g.class.clone(),
                count: f64::from(g.count),
                peak_time: g.class.twitch.peak_time(),
                eps: epsilon,
                times: g.train.times().to_vec(),
                head: 0,
            })
            .collect();
        Self {
            f_p0: agent.f_p0,
            curve: agent.curve.clone(),
            length_ratio: agent.length_ratio,
            groups,
            now: f64::NEG_INFINITY,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn set_length_ratio(&mut self, l: f64) {
        self.length_ratio = l;
    }

    /// Count of live (un-pruned) stimuli across all groups.
    pub fn live_stimuli(&self) -> usize {
        self.groups.iter().map(|g| g.times.len() - g.head).sum()
    }

    /// Append a stimulus to group `idx` (caller keeps trains valid).
    pub fn push_stimulus(&mut self, idx: usize, t_ms: f64) {
        let g = &mut self.groups[idx];
        debug_assert!(g.times.last().is_none_or(|&last| t_ms > last));
        g.times.push(t_ms);
    }

    /// Advance the clock and prune dead stimuli.
    pub fn advance_to(&mut self, t_ms: f64) -> Result<(), MuscleError> {
        if t_ms < self.now {
            return Err(MuscleError::NonMonotonicTime {
                t_ms,
                now_ms: self.now,
            });
        }
        self.now = t_ms;
        for g in &mut self.groups {
            while g.head < g.times.len() {
                let age = t_ms - g.times[g.head];
                // Before the twitch peak the stimulus still has its full peak
                // ahead of it; afterwards its remaining maximum is the current
                // (monotonically decaying) value.
                if age > g.peak_time && twitch_force(&g.class.twitch, age) < g.eps {
                    g.head += 1;
                } else {
                    break;
                }
            }
            if g.head > 2048 && g.head * 2 > g.times.len() {
                g.times.drain(..g.head);
                g.head = 0;
            }
        }
        Ok(())
    }

    /// Total force at the current clock.
    pub fn force(&self) -> f64 {
        let factor = length_force_factor(&self.curve, self.length_ratio);
        let mut active = 0.0;
        for g in &self.groups {
            let mut pre_cap = 0.0;
            for &tj in &g.times[g.head..] {
                if tj > self.now {
                    break;
                }
                pre_cap += twitch_force(&g.class.twitch, self.now - tj);
            }
            active += g.count * pre_cap.min(g.class.max_force);
        }
        factor * active + (self.f_p0 * (self.length_ratio - 1.0).exp()).max(0.0)
    }
}
