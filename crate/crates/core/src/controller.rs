//! Articulation feedback that stabilizes the trailer while reversing.
//!
//! A reversing semitrailer is open-loop unstable, so a model fed with the
//! recorded steering alone drifts away from the measured articulation and
//! jackknifes. The model's steering is therefore corrected by the
//! articulation error, `δ_cmd = δ_meas + K·(γ_model − γ_meas)`, and only when
//! driving backwards.

use thiserror::Error;

use crate::params::VehicleParams;

/// Gain used for every model so that comparisons stay fair.
pub const DEFAULT_GAIN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub gain: f64,
    pub reverse_only: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            gain: DEFAULT_GAIN,
            reverse_only: true,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("no stabilizing gain exists: L2 = {l2} m does not exceed L1c = {l1c} m")]
    UndefinedBound { l2: f64, l1c: f64 },
    #[error("closed-loop eigenvalue is undefined at standstill")]
    ZeroSpeed,
}

/// Smallest gain that stabilizes the articulation in reverse,
/// `L1 / (L2 − L1c)`.
pub fn min_stabilizing_gain(p: &VehicleParams) -> Result<f64, ControllerError> {
    let lever = p.l2 - p.l1c;
    if !(lever > 0.0) {
        return Err(ControllerError::UndefinedBound {
            l2: p.l2,
            l1c: p.l1c,
        });
    }
    Ok(p.l1 / lever)
}

pub fn stabilized_steering(
    delta_meas: f64,
    gamma_model: f64,
    gamma_meas: f64,
    u1: f64,
    cfg: &ControllerConfig,
) -> f64 {
    if cfg.reverse_only && u1 >= 0.0 {
        delta_meas
    } else {
        delta_meas + cfg.gain * (gamma_model - gamma_meas)
    }
}

/// Eigenvalue of the kinematic articulation error dynamics linearized about
/// straight running, with the feedback active.
pub fn closed_loop_articulation_eigenvalue(
    gain: f64,
    u1: f64,
    p: &VehicleParams,
) -> Result<f64, ControllerError> {
    if u1 == 0.0 {
        return Err(ControllerError::ZeroSpeed);
    }
    Ok(u1 / (p.l1 * p.l2) * (-p.l1 + gain * (p.l2 - p.l1c)))
}
