//! Fixed-step simulation of the vehicle models.
//!
//! Models are integrated with classical RK4 at a fine internal step (1 ms by
//! default) and sampled at the 100 Hz measurement rate. Inputs are held
//! constant between trace samples. While reversing, the steering can be
//! corrected by the articulation feedback of [`crate::controller`].

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::controller::{stabilized_steering, ControllerConfig};
use crate::dynamics::{
    inverse_steering_map, steering_map, stm_derivatives, trailer_cog_lateral_velocity, DynState,
    DynamicsError, StmInput,
};
use crate::kinematics::{
    kin_derivatives, kin_steady_state_articulation, trailer_pose_from_tractor, wrap_angle,
    KinInput, KinState, KinematicsError, Pose,
};
use crate::params::{ModelKind, VehicleParams};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("non-finite derivative at state {state:?}")]
    NonFinite { state: Vec<f64> },
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("output rate {rate} Hz is not an integer divisor of the {step} s internal step rate")]
    OutputGrid { rate: f64, step: f64 },
    #[error("invalid input trace: {0}")]
    BadTrace(String),
    #[error("invalid maneuver: {0}")]
    BadManeuver(String),
    #[error("trace reverses but no articulation reference was supplied for the closed loop")]
    MissingReference,
    #[error("reference has {reference} samples, trace has {trace}")]
    ReferenceLength { reference: usize, trace: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize, F>(mut f: F, x: &[f64; N], dt: f64) -> Result<[f64; N], HarnessError>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], HarnessError>,
{
    if !(dt > 0.0) {
        return Err(HarnessError::BadStep(dt));
    }
    let offset = |x: &[f64; N], k: &[f64; N], h: f64| {
        let mut out = *x;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = checked(f(x)?, x)?;
    let k2 = checked(f(&offset(x, &k1, 0.5 * dt))?, x)?;
    let k3 = checked(f(&offset(x, &k2, 0.5 * dt))?, x)?;
    let k4 = checked(f(&offset(x, &k3, dt))?, x)?;
    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn checked<const N: usize>(k: [f64; N], x: &[f64; N]) -> Result<[f64; N], HarnessError> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(k)
    } else {
        Err(HarnessError::NonFinite { state: x.to_vec() })
    }
}

/// Steering-wheel angle and signed tractor speed over time.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTrace {
    pub times: Vec<f64>,
    /// Steering-wheel angle, rad.
    pub delta_sw: Vec<f64>,
    /// Tractor longitudinal speed, m/s; negative when reversing.
    pub u1: Vec<f64>,
}

impl InputTrace {
    pub fn new(times: Vec<f64>, delta_sw: Vec<f64>, u1: Vec<f64>) -> Result<Self, HarnessError> {
        if times.is_empty() {
            return Err(HarnessError::BadTrace("empty trace".into()));
        }
        if delta_sw.len() != times.len() || u1.len() != times.len() {
            return Err(HarnessError::BadTrace(format!(
                "channel lengths differ: t {}, delta_sw {}, u1 {}",
                times.len(),
                delta_sw.len(),
                u1.len()
            )));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(HarnessError::BadTrace(format!(
                "time not strictly increasing at sample {}",
                i + 1
            )));
        }
        if !times
            .iter()
            .chain(&delta_sw)
            .chain(&u1)
            .all(|v| v.is_finite())
        {
            return Err(HarnessError::BadTrace("non-finite sample".into()));
        }
        Ok(Self {
            times,
            delta_sw,
            u1,
        })
    }

    pub fn is_reversing(&self) -> bool {
        self.u1.iter().any(|u| *u < 0.0)
    }

    pub fn duration(&self) -> f64 {
        self.times.last().unwrap() - self.times[0]
    }

    pub fn negated_steering(&self) -> Self {
        Self {
            delta_sw: self.delta_sw.iter().map(|d| -d).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManeuverKind {
    ConstantSteer,
    RampSteer,
    Slalom,
    FigureEight,
    /// Inputs come from a recorded log instead of a generator.
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnDirection {
    Left,
    Right,
}

/// Parameters of a generated maneuver. Amplitudes are at the steering wheel.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverSpec {
    pub kind: ManeuverKind,
    pub amplitude_deg: f64,
    /// Magnitude of the driving speed; ramp-steer tests drive backwards.
    pub speed_kmh: f64,
    pub direction: TurnDirection,
    pub duration: f64,
    /// Steering-wheel rate of a ramp-steer test, deg/s.
    pub ramp_rate_deg_s: f64,
    /// Period of the sinusoidal steering of slalom and figure-eight tests.
    pub period: f64,
    /// Steering asymmetry compensated by the figure-eight driver so both
    /// lobes see the same road-wheel angle.
    pub asymmetry: f64,
    /// Accept amplitudes outside the tested presets.
    pub free_amplitude: bool,
    pub sample_rate: f64,
}

/// Steering-wheel amplitudes of the constant-steer tests, deg.
pub const CONSTANT_STEER_AMPLITUDES: [f64; 3] = [200.0, 360.0, 500.0];
/// Steering-wheel amplitudes of the reverse ramp-steer tests, deg.
pub const RAMP_STEER_AMPLITUDES: [f64; 2] = [30.0, 90.0];

const SPEED_RAMP: f64 = 1.0;
const STEER_RAMP: f64 = 2.0;

impl ManeuverSpec {
    pub fn constant_steer(amplitude_deg: f64, speed_kmh: f64, direction: TurnDirection) -> Self {
        Self {
            kind: ManeuverKind::ConstantSteer,
            amplitude_deg,
            speed_kmh,
            direction,
            duration: 60.0,
            ramp_rate_deg_s: 0.0,
            period: 0.0,
            asymmetry: 0.0,
            free_amplitude: false,
            sample_rate: 100.0,
        }
    }

    pub fn ramp_steer(amplitude_deg: f64, speed_kmh: f64, direction: TurnDirection) -> Self {
        Self {
            kind: ManeuverKind::RampSteer,
            duration: 40.0,
            ramp_rate_deg_s: 5.0,
            ..Self::constant_steer(amplitude_deg, speed_kmh, direction)
        }
    }

    pub fn slalom(amplitude_deg: f64, speed_kmh: f64, period: f64) -> Self {
        Self {
            kind: ManeuverKind::Slalom,
            duration: SPEED_RAMP + 3.0 * period,
            period,
            free_amplitude: true,
            ..Self::constant_steer(amplitude_deg, speed_kmh, TurnDirection::Left)
        }
    }

    /// Figure of eight whose period is tuned so the kinematic tractor path
    /// closes on itself.
    pub fn figure_eight(
        amplitude_deg: f64,
        speed_kmh: f64,
        p: &VehicleParams,
    ) -> Result<Self, HarnessError> {
        let period = figure_eight_period(amplitude_deg, speed_kmh, p)?;
        Ok(Self {
            kind: ManeuverKind::FigureEight,
            duration: SPEED_RAMP + period,
            period,
            asymmetry: p.q,
            free_amplitude: true,
            ..Self::constant_steer(amplitude_deg, speed_kmh, TurnDirection::Left)
        })
    }

    pub fn is_reverse(&self) -> bool {
        self.kind == ManeuverKind::RampSteer
    }

    /// Short label such as `constant-200deg-5kmh-left`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            ManeuverKind::ConstantSteer => "constant",
            ManeuverKind::RampSteer => "ramp",
            ManeuverKind::Slalom => "slalom",
            ManeuverKind::FigureEight => "figure8",
            ManeuverKind::Replay => "replay",
        };
        let dir = match self.direction {
            TurnDirection::Left => "left",
            TurnDirection::Right => "right",
        };
        format!("{kind}-{}deg-{}kmh-{dir}", self.amplitude_deg, self.speed_kmh)
    }
}

/// Tunes the sinusoid period so that the kinematic tractor returns to where
/// the steering started.
///
/// With road-wheel angle `δ0·sin(2πτ/P)` at speed `v`, the heading is
/// `c·Φ(2πτ/P)` with `c = vP/(2πL1)` and `Φ(x) = ∫₀ˣ tan(δ0 sin ξ) dξ`. The
/// symmetry of `Φ` reduces closure to the single condition
/// `∫₀^π cos(c·(Φ(x) − Φ(π/2))) dx = 0`, solved for its smallest root.
pub fn figure_eight_period(
    amplitude_deg: f64,
    speed_kmh: f64,
    p: &VehicleParams,
) -> Result<f64, HarnessError> {
    let delta0 = amplitude_deg.to_radians() / p.i_s;
    if !(delta0 > 0.0 && delta0 < PI / 2.0 && speed_kmh > 0.0) {
        return Err(HarnessError::BadManeuver(format!(
            "figure eight needs a positive amplitude below 90° at the road wheel and a positive speed, got {amplitude_deg}° at {speed_kmh} km/h"
        )));
    }
    const N: usize = 4000;
    let h = PI / N as f64;
    let mut phi = vec![0.0; N + 1];
    for i in 1..=N {
        let (a, b) = ((i - 1) as f64 * h, i as f64 * h);
        let m = 0.5 * (a + b);
        let g = |x: f64| (delta0 * x.sin()).tan();
        phi[i] = phi[i - 1] + h / 6.0 * (g(a) + 4.0 * g(m) + g(b));
    }
    let mid = phi[N / 2];
    let closure = |c: f64| {
        let vals: Vec<f64> = phi.iter().map(|ph| (c * (ph - mid)).cos()).collect();
        let mut sum = vals[0] + vals[N];
        for (i, v) in vals.iter().enumerate().take(N).skip(1) {
            sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        sum * h / 3.0
    };
    // The first root lies near 2.405/δ0 (Bessel J0) for small amplitudes
    // and moves down as tan grows; scan for the first sign change.
    let mut lo = 0.5 / delta0.tan();
    let mut f_lo = closure(lo);
    let step = 0.05 / delta0.tan();
    let mut hi = lo + step;
    while closure(hi).signum() == f_lo.signum() {
        lo = hi;
        f_lo = closure(lo);
        hi += step;
        if hi > 20.0 / delta0.tan() {
            return Err(HarnessError::BadManeuver("figure-eight closure not found".into()));
        }
    }
    for _ in 0..100 {
        let m = 0.5 * (lo + hi);
        if closure(m).signum() == f_lo.signum() {
            lo = m;
        } else {
            hi = m;
        }
    }
    let c = 0.5 * (lo + hi);
    let speed = speed_kmh / 3.6;
    Ok(2.0 * PI * p.l1 * c / speed)
}

/// Samples the steering and speed of a maneuver on a uniform grid.
pub fn generate_maneuver(spec: &ManeuverSpec) -> Result<InputTrace, HarnessError> {
    let bad = |msg: String| Err(HarnessError::BadManeuver(msg));
    if !(spec.speed_kmh > 0.0) {
        return bad(format!("speed must be positive, got {} km/h", spec.speed_kmh));
    }
    if !(spec.duration > 0.0 && spec.sample_rate > 0.0) {
        return bad("duration and sample rate must be positive".into());
    }
    if !(spec.amplitude_deg.is_finite() && spec.amplitude_deg >= 0.0) {
        return bad(format!("amplitude must be non-negative, got {}", spec.amplitude_deg));
    }
    match spec.kind {
        ManeuverKind::ConstantSteer => {
            if !spec.free_amplitude && !CONSTANT_STEER_AMPLITUDES.contains(&spec.amplitude_deg) {
                return bad(format!(
                    "constant steer amplitude {}° is not one of {CONSTANT_STEER_AMPLITUDES:?}",
                    spec.amplitude_deg
                ));
            }
        }
        ManeuverKind::RampSteer => {
            if !spec.free_amplitude && !RAMP_STEER_AMPLITUDES.contains(&spec.amplitude_deg) {
                return bad(format!(
                    "ramp steer amplitude {}° is not one of {RAMP_STEER_AMPLITUDES:?}",
                    spec.amplitude_deg
                ));
            }
            if !(spec.ramp_rate_deg_s > 0.0) {
                return bad("ramp steer needs a positive ramp rate".into());
            }
        }
        ManeuverKind::Slalom | ManeuverKind::FigureEight => {
            if !(spec.period > 0.0) {
                return bad("sinusoidal maneuvers need a positive period".into());
            }
        }
        ManeuverKind::Replay => return bad("replay maneuvers are read from a log".into()),
    }

    let n = (spec.duration * spec.sample_rate).round() as usize;
    let amplitude = spec.amplitude_deg.to_radians();
    let sign = match spec.direction {
        TurnDirection::Left => 1.0,
        TurnDirection::Right => -1.0,
    };
    let speed = spec.speed_kmh / 3.6 * if spec.is_reverse() { -1.0 } else { 1.0 };
    let omega = if spec.period > 0.0 { 2.0 * PI / spec.period } else { 0.0 };

    let mut times = Vec::with_capacity(n + 1);
    let mut delta_sw = Vec::with_capacity(n + 1);
    let mut u1 = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / spec.sample_rate;
        let steer = match spec.kind {
            ManeuverKind::ConstantSteer => amplitude * (t / STEER_RAMP).min(1.0),
            ManeuverKind::RampSteer => (spec.ramp_rate_deg_s.to_radians() * t).min(amplitude),
            ManeuverKind::Slalom => sinusoid(amplitude, omega, t, 0.0),
            ManeuverKind::FigureEight => sinusoid(amplitude, omega, t, spec.asymmetry),
            ManeuverKind::Replay => unreachable!(),
        };
        times.push(t);
        delta_sw.push(sign * steer);
        u1.push(speed * (t / SPEED_RAMP).min(1.0));
    }
    InputTrace::new(times, delta_sw, u1)
}

fn sinusoid(amplitude: f64, omega: f64, t: f64, asymmetry: f64) -> f64 {
    if t < SPEED_RAMP {
        return 0.0;
    }
    let s = amplitude * (omega * (t - SPEED_RAMP)).sin();
    s / (1.0 + asymmetry * s.signum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardConfig {
    pub warn: f64,
    pub abort: f64,
}

impl Default for GuardConfig {
    fn default() -> Self {
        Self {
            warn: 60f64.to_radians(),
            abort: 90f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardStatus {
    Ok,
    Warn,
    Abort,
}

pub fn jackknife_guard(gamma: f64, cfg: &GuardConfig) -> GuardStatus {
    let g = gamma.abs();
    if g >= cfg.abort {
        GuardStatus::Abort
    } else if g >= cfg.warn {
        GuardStatus::Warn
    } else {
        GuardStatus::Ok
    }
}

/// Articulation the closed loop tracks while reversing.
#[derive(Debug, Clone, PartialEq)]
pub enum ArticulationReference {
    /// Measured articulation, one sample per trace sample.
    Recorded(Vec<f64>),
    /// Kinematic steady-state articulation of the current steering, which
    /// stands in for a driver holding the trailer on the intended curve.
    SteadyState,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialCondition {
    pub pose: Pose,
    pub gamma: f64,
    pub v1: f64,
    pub r1: f64,
    pub gdot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Internal integration step, s.
    pub dt: f64,
    /// Output sampling rate, Hz.
    pub output_rate: f64,
    pub closed_loop: bool,
    pub controller: ControllerConfig,
    pub guard: GuardConfig,
    pub initial: InitialCondition,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            output_rate: 100.0,
            closed_loop: true,
            controller: ControllerConfig::default(),
            guard: GuardConfig::default(),
            initial: InitialCondition::default(),
        }
    }
}

/// One output sample. Tractor rates refer to its COG, trailer rates to the
/// trailer COG; positions to the drive axle and the middle trailer axle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub t: f64,
    pub x1: f64,
    pub y1: f64,
    pub psi1: f64,
    pub u1: f64,
    pub v1: f64,
    pub r1: f64,
    pub x2: f64,
    pub y2: f64,
    pub psi2: f64,
    pub u2: f64,
    pub v2: f64,
    pub r2: f64,
    pub gamma: f64,
    pub s: f64,
    /// Applied road-wheel angle.
    pub delta_cmd: f64,
    /// Applied angle on the steering-wheel scale.
    pub delta_sw_cmd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunOutcome {
    Completed,
    Aborted { time: f64, gamma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: ModelKind,
    pub samples: Vec<Sample>,
    /// First time the articulation crossed the warning threshold.
    pub warn_time: Option<f64>,
    pub outcome: RunOutcome,
}

pub const TRAJECTORY_COLUMNS: [&str; 12] = [
    "t", "X1", "Y1", "psi1", "v1", "r1", "X2", "Y2", "psi2", "gamma", "s", "delta_cmd",
];

impl Trajectory {
    pub fn max_abs_gamma(&self) -> f64 {
        self.samples.iter().map(|s| s.gamma.abs()).fold(0.0, f64::max)
    }

    pub fn is_aborted(&self) -> bool {
        matches!(self.outcome, RunOutcome::Aborted { .. })
    }

    /// Comma-delimited export with a header row.
    pub fn to_delimited(&self) -> String {
        let mut out = TRAJECTORY_COLUMNS.join(",");
        out.push('\n');
        for s in &self.samples {
            let row = [
                s.t, s.x1, s.y1, s.psi1, s.v1, s.r1, s.x2, s.y2, s.psi2, s.gamma, s.s, s.delta_cmd,
            ];
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Internal state shared by both models; the kinematic model ignores the
/// last three entries.
type State = [f64; 7];

struct Rates {
    v1: f64,
    r1: f64,
    u2: f64,
    v2: f64,
    r2: f64,
}

fn derivatives(
    model: ModelKind,
    x: &State,
    delta: f64,
    u1: f64,
    p: &VehicleParams,
) -> Result<State, HarnessError> {
    match model {
        ModelKind::Kin => {
            let s = KinState::from_array([x[0], x[1], x[2], x[3]]);
            let d = kin_derivatives(&s, &KinInput { delta, u1 }, p).to_array();
            Ok([d[0], d[1], d[2], d[3], 0.0, 0.0, 0.0])
        }
        ModelKind::Stm => {
            let s = DynState::from_array(*x);
            Ok(stm_derivatives(&s, &StmInput { delta, u1 }, p)?.to_array())
        }
    }
}

fn rates(model: ModelKind, x: &State, delta: f64, u1: f64, p: &VehicleParams) -> Rates {
    match model {
        ModelKind::Kin => {
            let s = KinState::from_array([x[0], x[1], x[2], x[3]]);
            let d = kin_derivatives(&s, &KinInput { delta, u1 }, p);
            let r1 = d.psi1;
            let r2 = r1 - d.gamma;
            Rates {
                v1: p.b1 * r1,
                r1,
                // trailer axle velocity is along the trailer heading
                u2: u1 * s.gamma.cos() - p.l1c * r1 * s.gamma.sin(),
                v2: (p.l2 - p.a2) * r2,
                r2,
            }
        }
        ModelKind::Stm => {
            let s = DynState::from_array(*x);
            let w = s.v1 - p.coupling_offset() * s.r1;
            Rates {
                v1: s.v1,
                r1: s.r1,
                u2: u1 * s.gamma.cos() - w * s.gamma.sin(),
                v2: trailer_cog_lateral_velocity(&s, u1, p),
                r2: s.r2(),
            }
        }
    }
}

/// Integrates a model over an input trace.
///
/// When `cfg.closed_loop` is set and the trace reverses, `reference` must
/// supply the articulation the steering feedback tracks.
pub fn simulate(
    model: ModelKind,
    trace: &InputTrace,
    p: &VehicleParams,
    cfg: &RunConfig,
    reference: Option<&ArticulationReference>,
) -> Result<Trajectory, HarnessError> {
    if !(cfg.dt > 0.0) {
        return Err(HarnessError::BadStep(cfg.dt));
    }
    let ratio = 1.0 / (cfg.output_rate * cfg.dt);
    let every = ratio.round();
    if !(every >= 1.0 && (ratio - every).abs() < 1e-9) {
        return Err(HarnessError::OutputGrid {
            rate: cfg.output_rate,
            step: cfg.dt,
        });
    }
    let every = every as usize;
    let closed_loop = cfg.closed_loop && trace.is_reversing();
    let reference = if closed_loop {
        let r = reference.ok_or(HarnessError::MissingReference)?;
        if let ArticulationReference::Recorded(g) = r {
            if g.len() != trace.times.len() {
                return Err(HarnessError::ReferenceLength {
                    reference: g.len(),
                    trace: trace.times.len(),
                });
            }
        }
        Some(r)
    } else {
        None
    };

    let t0 = trace.times[0];
    let steps = (trace.duration() / cfg.dt).round() as usize;
    let init = &cfg.initial;
    let mut x: State = [
        init.pose.x,
        init.pose.y,
        init.pose.psi,
        wrap_angle(init.gamma),
        init.v1,
        init.r1,
        init.gdot,
    ];
    let mut traveled = 0.0;
    let mut idx = 0;
    let mut samples = Vec::with_capacity(steps / every + 1);
    let mut warn_time = None;
    let mut outcome = RunOutcome::Completed;

    for n in 0..=steps {
        let t = t0 + n as f64 * cfg.dt;
        while idx + 1 < trace.times.len() && trace.times[idx + 1] <= t + 1e-9 {
            idx += 1;
        }
        let u1 = trace.u1[idx];
        let delta_meas = steering_map(trace.delta_sw[idx], p);
        let delta = match reference {
            Some(r) => {
                let gamma_ref = match r {
                    ArticulationReference::Recorded(g) => g[idx],
                    ArticulationReference::SteadyState => {
                        kin_steady_state_articulation(delta_meas, p)?
                    }
                };
                stabilized_steering(delta_meas, x[3], gamma_ref, u1, &cfg.controller)
            }
            None => delta_meas,
        };

        match jackknife_guard(x[3], &cfg.guard) {
            GuardStatus::Abort => {
                outcome = RunOutcome::Aborted { time: t, gamma: x[3] };
                break;
            }
            GuardStatus::Warn if warn_time.is_none() => warn_time = Some(t),
            _ => {}
        }

        if n % every == 0 {
            let r = rates(model, &x, delta, u1, p);
            let trailer = trailer_pose_from_tractor(&Pose::new(x[0], x[1], x[2]), x[3], p);
            samples.push(Sample {
                t,
                x1: x[0],
                y1: x[1],
                psi1: x[2],
                u1,
                v1: r.v1,
                r1: r.r1,
                x2: trailer.x,
                y2: trailer.y,
                psi2: trailer.psi,
                u2: r.u2,
                v2: r.v2,
                r2: r.r2,
                gamma: x[3],
                s: traveled,
                delta_cmd: delta,
                delta_sw_cmd: inverse_steering_map(delta, p),
            });
        }
        if n == steps {
            break;
        }

        x = rk4_step(|s| derivatives(model, s, delta, u1, p), &x, cfg.dt)?;
        x[3] = wrap_angle(x[3]);
        traveled += u1.abs() * cfg.dt;
    }

    Ok(Trajectory {
        model,
        samples,
        warn_time,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::LoadCondition;

    fn kin() -> VehicleParams {
        VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Kin)
    }

    #[test]
    fn rk4_constant_derivative_is_exact() {
        let x = rk4_step(|_| Ok([2.0, -1.0]), &[1.0, 1.0], 0.25).unwrap();
        assert_eq!(x, [1.5, 0.75]);
    }

    #[test]
    fn rk4_exponential_decay() {
        let x = rk4_step(|x| Ok([-x[0]]), &[1.0], 0.01).unwrap();
        assert!((x[0] - (-0.01f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rk4_rejects_non_finite_and_bad_step() {
        assert!(matches!(
            rk4_step(|_| Ok([f64::NAN]), &[1.0], 0.1),
            Err(HarnessError::NonFinite { .. })
        ));
        assert!(matches!(
            rk4_step(|x| Ok(*x), &[1.0], 0.0),
            Err(HarnessError::BadStep(_))
        ));
    }

    #[test]
    fn maneuver_examples() {
        let spec = ManeuverSpec::constant_steer(200.0, 5.0, TurnDirection::Left);
        let tr = generate_maneuver(&spec).unwrap();
        assert_eq!(tr.times.len(), 6001);
        assert!((tr.delta_sw[200] - 3.4907).abs() < 1e-4);
        assert!(tr.delta_sw[200..].iter().all(|d| *d == tr.delta_sw[200]));
        assert!((tr.u1[150] - 1.38889).abs() < 1e-5);

        let spec = ManeuverSpec::ramp_steer(30.0, 3.0, TurnDirection::Left);
        let tr = generate_maneuver(&spec).unwrap();
        let peak = tr.delta_sw.iter().cloned().fold(0.0, f64::max);
        assert!((peak - std::f64::consts::FRAC_PI_6).abs() < 1e-4);
        assert!((tr.u1.last().unwrap() + 0.8333).abs() < 1e-4);
        assert!(tr.is_reversing());

        let left = generate_maneuver(&ManeuverSpec::ramp_steer(90.0, 6.0, TurnDirection::Left)).unwrap();
        let right = generate_maneuver(&ManeuverSpec::ramp_steer(90.0, 6.0, TurnDirection::Right)).unwrap();
        assert_eq!(left.negated_steering(), right);
    }

    #[test]
    fn maneuver_validation() {
        let spec = ManeuverSpec::constant_steer(250.0, 5.0, TurnDirection::Left);
        assert!(matches!(generate_maneuver(&spec), Err(HarnessError::BadManeuver(_))));
        let spec = ManeuverSpec::ramp_steer(200.0, 3.0, TurnDirection::Left);
        assert!(generate_maneuver(&spec).is_err());
        let spec = ManeuverSpec::constant_steer(200.0, 0.0, TurnDirection::Left);
        assert!(generate_maneuver(&spec).is_err());
        let spec = ManeuverSpec {
            kind: ManeuverKind::Replay,
            ..ManeuverSpec::constant_steer(200.0, 5.0, TurnDirection::Left)
        };
        assert!(generate_maneuver(&spec).is_err());
    }

    #[test]
    fn guard_thresholds() {
        let g = GuardConfig::default();
        assert_eq!(jackknife_guard(0.3, &g), GuardStatus::Ok);
        assert_eq!(jackknife_guard(1.1, &g), GuardStatus::Warn);
        assert_eq!(jackknife_guard(-1.6, &g), GuardStatus::Abort);
    }

    #[test]
    fn straight_run() {
        let n = 1001;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
        let trace = InputTrace::new(times, vec![0.0; n], vec![1.389; n]).unwrap();
        let traj = simulate(ModelKind::Kin, &trace, &kin(), &RunConfig::default(), None).unwrap();
        let last = traj.samples.last().unwrap();
        assert_eq!(traj.samples.len(), 1001);
        assert!((last.t - 10.0).abs() < 1e-12);
        assert!((last.x1 - 13.89).abs() < 1e-9);
        assert!(traj.samples.iter().all(|s| s.gamma == 0.0 && s.y1 == 0.0));
    }

    #[test]
    fn reversing_without_reference_is_refused() {
        let trace = generate_maneuver(&ManeuverSpec::ramp_steer(30.0, 3.0, TurnDirection::Left)).unwrap();
        assert!(matches!(
            simulate(ModelKind::Kin, &trace, &kin(), &RunConfig::default(), None),
            Err(HarnessError::MissingReference)
        ));
    }

    #[test]
    fn output_grid_must_divide_step() {
        let trace = InputTrace::new(vec![0.0, 1.0], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let cfg = RunConfig {
            dt: 3e-3,
            ..RunConfig::default()
        };
        assert!(matches!(
            simulate(ModelKind::Kin, &trace, &kin(), &cfg, None),
            Err(HarnessError::OutputGrid { .. })
        ));
    }

    #[test]
    fn trace_validation() {
        assert!(InputTrace::new(vec![], vec![], vec![]).is_err());
        assert!(InputTrace::new(vec![0.0, 0.0], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(InputTrace::new(vec![0.0, 1.0], vec![0.0; 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn figure_eight_closes_for_kinematic_tractor() {
        let p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Kin);
        let spec = ManeuverSpec::figure_eight(500.0, 5.0, &p).unwrap();
        let trace = generate_maneuver(&spec).unwrap();
        let traj = simulate(ModelKind::Kin, &trace, &p, &RunConfig::default(), None).unwrap();
        let start = traj.samples[100];
        let end = traj.samples.last().unwrap();
        let gap = (end.x1 - start.x1).hypot(end.y1 - start.y1);
        assert!(gap < 0.05, "gap {gap}");
        assert!((end.psi1 - start.psi1).abs() < 1e-3);
    }

    /// With the trailer axle group collapsed onto one axle, stiffening the
    /// tyres drives the single-track path onto the kinematic one at rate 1/f.
    #[test]
    fn stiff_single_axle_trailer_approaches_kinematics() {
        let mut spec = ManeuverSpec::constant_steer(200.0, 5.0, TurnDirection::Left);
        spec.duration = 20.0;
        let trace = generate_maneuver(&spec).unwrap();
        let gap = |f: f64, dt: f64| {
            let mut p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Stm);
            p.f = f;
            p.axle_spacing = 0.0;
            p.l2k = [p.l2; 3];
            let kin = simulate(ModelKind::Kin, &trace, &p, &RunConfig::default(), None).unwrap();
            let cfg = RunConfig { dt, ..RunConfig::default() };
            let stm = simulate(ModelKind::Stm, &trace, &p, &cfg, None).unwrap();
            let (a, b) = (kin.samples.last().unwrap(), stm.samples.last().unwrap());
            ((a.x1 - b.x1).hypot(a.y1 - b.y1), (a.gamma - b.gamma).abs())
        };
        let (pos60, gam60) = gap(60.0, 1e-4);
        let (pos600, gam600) = gap(600.0, 2e-5);
        assert!(pos600 < pos60 / 5.0, "{pos60} {pos600}");
        assert!(gam600 < gam60 / 5.0, "{gam60} {gam600}");
    }

    #[test]
    fn export_has_fixed_columns() {
        let trace = InputTrace::new(vec![0.0, 0.02], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let traj = simulate(ModelKind::Kin, &trace, &kin(), &RunConfig::default(), None).unwrap();
        let text = traj.to_delimited();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,X1,Y1,psi1,v1,r1,X2,Y2,psi2,gamma,s,delta_cmd"
        );
        assert_eq!(lines.count(), 3);
    }
}
