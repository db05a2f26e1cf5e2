//! Model-versus-measurement validation of one maneuver.
//!
//! The measured steering and speed drive the model; forward runs are open
//! loop and reverse runs track the measured articulation. The model output
//! is then scored on the measurement grid with the distance-based criteria
//! of [`crate::metrics`].

use thiserror::Error;

use crate::harness::{
    simulate, ArticulationReference, HarnessError, InitialCondition, InputTrace, RunConfig,
    RunOutcome, Trajectory,
};
use crate::ingest::{compute_articulation, resample, Channel, IngestError, MeasurementLog, ResampleMethod};
use crate::kinematics::Pose;
use crate::metrics::{
    distance_mean_abs, distance_rms, normalized_total_error, orthogonal_path_error,
    steering_effort, traveled_distance, Direction, ErrorReport, MetricsError, PathPolyline,
};
use crate::params::{ModelKind, VehicleParams};

/// Grid rate of the comparison, Hz.
pub const MEASUREMENT_RATE: f64 = 100.0;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("channels start at different times ({0} s and {1} s)")]
    Misaligned(f64, f64),
    #[error("model run produced {model} samples for {reference} reference samples")]
    SampleCount { model: usize, reference: usize },
    #[error("jackknife guard aborted the run at t = {time} s (γ = {gamma} rad)")]
    Aborted { time: f64, gamma: f64 },
}

/// Reference signals on a common uniform grid, SI units, reference points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceData {
    pub times: Vec<f64>,
    pub delta_sw: Vec<f64>,
    pub u1: Vec<f64>,
    pub gamma: Vec<f64>,
    pub x1: Vec<f64>,
    pub y1: Vec<f64>,
    pub psi1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y2: Vec<f64>,
    pub v1: Vec<f64>,
    pub r1: Vec<f64>,
    pub v2: Vec<f64>,
    pub r2: Vec<f64>,
}

impl ReferenceData {
    pub fn from_log(log: &MeasurementLog, p: &VehicleParams) -> Result<Self, ValidationError> {
        let log = log.to_reference(p)?;
        let grid = |name: &str, method| -> Result<Channel, ValidationError> {
            Ok(resample(log.require(name)?, MEASUREMENT_RATE, method)?)
        };
        let mut chans = vec![grid("delta_sw", ResampleMethod::Hold)?];
        for name in ["u1", "X1", "Y1", "psi1", "X2", "Y2", "v1", "r1", "v2", "r2"] {
            chans.push(grid(name, ResampleMethod::Linear)?);
        }
        let gamma = match log.channel("gamma") {
            Some(g) => resample(g, MEASUREMENT_RATE, ResampleMethod::Linear)?,
            None => {
                let psi1 = &chans[4];
                let psi2 = grid("psi2", ResampleMethod::Linear)?;
                compute_articulation(psi1, &psi2)?
            }
        };
        chans.push(gamma);

        let t0 = chans[0].times[0];
        if let Some(c) = chans.iter().find(|c| (c.times[0] - t0).abs() > 1e-9) {
            return Err(ValidationError::Misaligned(t0, c.times[0]));
        }
        let n = chans.iter().map(|c| c.times.len()).min().unwrap();
        let mut it = chans.into_iter().map(|c| c.values[..n].to_vec());
        let mut next = || it.next().unwrap();
        let times = (0..n).map(|k| t0 + k as f64 / MEASUREMENT_RATE).collect();
        Ok(Self {
            times,
            delta_sw: next(),
            u1: next(),
            x1: next(),
            y1: next(),
            psi1: next(),
            x2: next(),
            y2: next(),
            v1: next(),
            r1: next(),
            v2: next(),
            r2: next(),
            gamma: next(),
        })
    }

    pub fn direction(&self) -> Direction {
        if self.u1.iter().any(|u| *u < 0.0) {
            Direction::Reverse
        } else {
            Direction::Forward
        }
    }

    pub fn trace(&self) -> Result<InputTrace, HarnessError> {
        InputTrace::new(self.times.clone(), self.delta_sw.clone(), self.u1.clone())
    }

    /// Model state matching the first reference sample.
    pub fn initial_condition(&self) -> InitialCondition {
        InitialCondition {
            pose: Pose::new(self.x1[0], self.y1[0], self.psi1[0]),
            gamma: self.gamma[0],
            v1: self.v1[0],
            r1: self.r1[0],
            gdot: self.r1[0] - self.r2[0],
        }
    }
}

/// Steering and speed of a log on the measurement grid, with the measured
/// articulation when the log carries it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayInputs {
    pub trace: InputTrace,
    pub gamma: Option<Vec<f64>>,
}

pub fn replay_inputs(log: &MeasurementLog) -> Result<ReplayInputs, ValidationError> {
    let delta = resample(log.require("delta_sw")?, MEASUREMENT_RATE, ResampleMethod::Hold)?;
    let u1 = resample(log.require("u1")?, MEASUREMENT_RATE, ResampleMethod::Linear)?;
    let gamma = match (log.channel("gamma"), log.channel("psi1"), log.channel("psi2")) {
        (Some(g), _, _) => Some(resample(g, MEASUREMENT_RATE, ResampleMethod::Linear)?),
        (None, Some(a), Some(b)) => Some(compute_articulation(
            &resample(a, MEASUREMENT_RATE, ResampleMethod::Linear)?,
            &resample(b, MEASUREMENT_RATE, ResampleMethod::Linear)?,
        )?),
        _ => None,
    };
    let t0 = delta.times[0];
    for c in std::iter::once(&u1).chain(gamma.as_ref()) {
        if (c.times[0] - t0).abs() > 1e-9 {
            return Err(ValidationError::Misaligned(t0, c.times[0]));
        }
    }
    let n = [Some(&delta), Some(&u1), gamma.as_ref()]
        .into_iter()
        .flatten()
        .map(|c| c.times.len())
        .min()
        .unwrap();
    let trace = InputTrace::new(delta.times[..n].to_vec(), delta.values[..n].to_vec(), u1.values[..n].to_vec())?;
    Ok(ReplayInputs {
        trace,
        gamma: gamma.map(|g| g.values[..n].to_vec()),
    })
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub report: ErrorReport,
    pub trajectory: Trajectory,
}

/// Runs `model` against the reference and scores it.
pub fn validate(
    model: ModelKind,
    reference: &ReferenceData,
    p: &VehicleParams,
    cfg: &RunConfig,
    maneuver: &str,
) -> Result<Validation, ValidationError> {
    let direction = reference.direction();
    let trace = reference.trace()?;
    let run_cfg = RunConfig {
        initial: reference.initial_condition(),
        closed_loop: direction == Direction::Reverse,
        ..cfg.clone()
    };
    let gamma_ref = ArticulationReference::Recorded(reference.gamma.clone());
    let trajectory = simulate(model, &trace, p, &run_cfg, Some(&gamma_ref))?;
    if let RunOutcome::Aborted { time, gamma } = trajectory.outcome {
        return Err(ValidationError::Aborted { time, gamma });
    }
    let report = score(model.label(), maneuver, reference, &trajectory)?;
    Ok(Validation { report, trajectory })
}

/// Error report of a trajectory sampled on the reference grid.
pub fn score(
    model: &str,
    maneuver: &str,
    reference: &ReferenceData,
    traj: &Trajectory,
) -> Result<ErrorReport, ValidationError> {
    let n = reference.times.len();
    if traj.samples.len() != n {
        return Err(ValidationError::SampleCount {
            model: traj.samples.len(),
            reference: n,
        });
    }
    let s = traveled_distance(&reference.times, &reference.u1);
    let path1 = PathPolyline::from_samples(&reference.x1, &reference.y1)?;
    let path2 = PathPolyline::from_samples(&reference.x2, &reference.y2)?;
    let lateral1: Vec<f64> = traj.samples.iter().map(|q| orthogonal_path_error([q.x1, q.y1], &path1)).collect();
    let lateral2: Vec<f64> = traj.samples.iter().map(|q| orthogonal_path_error([q.x2, q.y2], &path2)).collect();
    let diff = |model: &dyn Fn(&crate::harness::Sample) -> f64, meas: &[f64]| -> Vec<f64> {
        traj.samples.iter().zip(meas).map(|(q, m)| model(q) - m).collect()
    };
    let eps_y = [distance_rms(&lateral1, &s)?, distance_rms(&lateral2, &s)?];
    let eps_r = [
        distance_rms(&diff(&|q| q.r1, &reference.r1), &s)?,
        distance_rms(&diff(&|q| q.r2, &reference.r2), &s)?,
    ];
    let eps_v = [
        distance_rms(&diff(&|q| q.v1, &reference.v1), &s)?,
        distance_rms(&diff(&|q| q.v2, &reference.v2), &s)?,
    ];
    // Distance-weighted means over tractor and trailer samples pooled together.
    let mean_r = 0.5 * (distance_mean_abs(&reference.r1, &s)? + distance_mean_abs(&reference.r2, &s)?);
    let mean_v = 0.5 * (distance_mean_abs(&reference.v1, &s)? + distance_mean_abs(&reference.v2, &s)?);
    let eps_n = normalized_total_error(eps_r[0] + eps_r[1], eps_v[0] + eps_v[1], mean_r, mean_v)?;
    let direction = reference.direction();
    let j_steer = match direction {
        Direction::Forward => None,
        Direction::Reverse => {
            let cmd: Vec<f64> = traj.samples.iter().map(|q| q.delta_sw_cmd).collect();
            Some(steering_effort(&cmd, &reference.delta_sw, &s)?)
        }
    };
    Ok(ErrorReport::new(model, maneuver, direction, eps_y, eps_r, eps_v, eps_n, j_steer))
}
