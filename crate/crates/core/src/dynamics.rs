//! Nonlinear single-track model of the tractor-semitrailer.
//!
//! Generalized speeds are the tractor COG lateral velocity `v1`, the tractor
//! yaw rate `r1` and the articulation rate `γ̇`. The tractor longitudinal
//! speed `u1` is a prescribed input. The equations of motion read
//! `M(γ)·[v̇1, ṙ1, γ̈]ᵀ = Qv − H`.
//!
//! Each axle carries a linear tyre, `Fy = f·Fz·α`. Tyre forces fade out
//! linearly below [`FADE_SPEED`] so the slip angle singularity at standstill
//! never reaches the dynamics.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::kinematics::Pose;
use crate::params::VehicleParams;

/// Longitudinal axle speed below which tyre forces are scaled down, m/s.
pub const FADE_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DynState {
    /// Drive-axle position and tractor heading.
    pub x1: f64,
    pub y1: f64,
    pub psi1: f64,
    pub gamma: f64,
    /// Tractor lateral velocity at the COG.
    pub v1: f64,
    /// Tractor yaw rate.
    pub r1: f64,
    /// Articulation rate.
    pub gdot: f64,
}

impl DynState {
    pub fn to_array(self) -> [f64; 7] {
        [
            self.x1, self.y1, self.psi1, self.gamma, self.v1, self.r1, self.gdot,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            x1: a[0],
            y1: a[1],
            psi1: a[2],
            gamma: a[3],
            v1: a[4],
            r1: a[5],
            gdot: a[6],
        }
    }

    pub fn tractor_pose(&self) -> Pose {
        Pose::new(self.x1, self.y1, self.psi1)
    }

    /// Trailer yaw rate.
    pub fn r2(&self) -> f64 {
        self.r1 - self.gdot
    }
}

/// Road-wheel steer angle and signed tractor speed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StmInput {
    pub delta: f64,
    pub u1: f64,
}

/// Slip angles of the front, drive and three trailer axles, with the
/// longitudinal speed each axle sees in its own unit frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxleSlip {
    pub alpha: [f64; 5],
    pub vx: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxleForces {
    pub fy: [f64; 5],
}

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("mass matrix is singular at γ = {gamma} rad")]
    SingularMassMatrix { gamma: f64 },
}

/// Steering-wheel angle to road-wheel angle, with a left/right asymmetry:
/// left turns are amplified by `1 + q`, right turns by `1 − q`.
pub fn steering_map(delta_sw: f64, p: &VehicleParams) -> f64 {
    delta_sw / p.i_s * (1.0 + p.q * sign_or_zero(delta_sw))
}

/// Inverse of [`steering_map`].
pub fn inverse_steering_map(delta: f64, p: &VehicleParams) -> f64 {
    delta * p.i_s / (1.0 + p.q * sign_or_zero(delta))
}

fn sign_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Fifth-wheel velocity expressed in the trailer frame.
fn coupling_velocity_in_trailer(s: &DynState, u1: f64, p: &VehicleParams) -> (f64, f64) {
    let w = s.v1 - p.coupling_offset() * s.r1;
    let (sg, cg) = s.gamma.sin_cos();
    (u1 * cg - w * sg, u1 * sg + w * cg)
}

/// Lateral velocity of the trailer COG in the trailer frame.
pub fn trailer_cog_lateral_velocity(s: &DynState, u1: f64, p: &VehicleParams) -> f64 {
    let (_, v2c) = coupling_velocity_in_trailer(s, u1, p);
    v2c - p.a2 * s.r2()
}

fn slip(steer: f64, vx: f64, vy: f64) -> f64 {
    if vx == 0.0 {
        return steer;
    }
    // Signed so the tyre force opposes lateral sliding in either direction.
    vx.signum() * (steer - (vy / vx).atan())
}

pub fn slip_angles(s: &DynState, u1: f64, delta: f64, p: &VehicleParams) -> AxleSlip {
    let (u2, v2c) = coupling_velocity_in_trailer(s, u1, p);
    let r2 = s.r2();
    let front_vy = s.v1 + p.a1 * s.r1;
    let drive_vy = s.v1 - p.b1 * s.r1;
    let trailer_vy = p.l2k.map(|l| v2c - l * r2);
    AxleSlip {
        alpha: [
            slip(delta, u1, front_vy),
            slip(0.0, u1, drive_vy),
            slip(0.0, u2, trailer_vy[0]),
            slip(0.0, u2, trailer_vy[1]),
            slip(0.0, u2, trailer_vy[2]),
        ],
        vx: [u1, u1, u2, u2, u2],
    }
}

/// Linear tyre law, scaled down near standstill.
pub fn tire_forces(slip: &AxleSlip, p: &VehicleParams) -> AxleForces {
    let mut fy = [0.0; 5];
    for i in 0..5 {
        let fade = (slip.vx[i].abs() / FADE_SPEED).min(1.0);
        fy[i] = fade * p.f * p.fz[i] * slip.alpha[i];
    }
    AxleForces { fy }
}

/// Mass matrix in the generalized speeds `[v1, r1, γ̇]`.
pub fn mass_matrix(gamma: f64, p: &VehicleParams) -> Matrix3<f64> {
    let (m1, m2, a2, lc) = (p.m1, p.m2, p.a2, p.coupling_offset());
    let c = gamma.cos();
    let m01 = -m2 * (lc + a2 * c);
    let m02 = m2 * a2 * c;
    let m12 = -p.j2 - m2 * (a2 * a2 + a2 * lc * c);
    Matrix3::new(
        m1 + m2,
        m01,
        m02,
        m01,
        p.j1 + p.j2 + m2 * (a2 * a2 + 2.0 * a2 * lc * c + lc * lc),
        m12,
        m02,
        m12,
        p.j2 + m2 * a2 * a2,
    )
}

/// Velocity-dependent (Coriolis and centripetal) terms.
pub fn bias_vector(s: &DynState, u1: f64, p: &VehicleParams) -> Vector3<f64> {
    let (m1, m2, a2, lc) = (p.m1, p.m2, p.a2, p.coupling_offset());
    let (sg, cg) = s.gamma.sin_cos();
    let (v1, r1, gd) = (s.v1, s.r1, s.gdot);
    Vector3::new(
        m1 * r1 * u1
            + m2 * (r1 * u1 - a2 * sg * gd * gd - a2 * sg * r1 * r1 + 2.0 * a2 * sg * gd * r1),
        -m2 * (2.0 * a2 * lc * sg * gd * r1 - a2 * lc * sg * gd * gd
            + lc * u1 * r1
            + a2 * cg * r1 * u1
            - a2 * sg * r1 * v1),
        m2 * a2 * (cg * r1 * u1 - sg * r1 * v1 + lc * sg * r1 * r1),
    )
}

/// Tyre forces projected on the generalized speeds.
pub fn generalized_forces(
    forces: &AxleForces,
    delta: f64,
    gamma: f64,
    p: &VehicleParams,
) -> Vector3<f64> {
    let [fy1, fy2, fy3, fy4, fy5] = forces.fy;
    let [l21, l22, l23] = p.l2k;
    let cd = delta.cos();
    let cg = gamma.cos();
    let trailer_sum = fy3 + fy4 + fy5;
    let trailer_moment = l21 * fy3 + l22 * fy4 + l23 * fy5;
    Vector3::new(
        fy1 * cd + fy2 + trailer_sum * cg,
        p.a1 * fy1 * cd - p.b1 * fy2 - p.coupling_offset() * trailer_sum * cg - trailer_moment,
        trailer_moment,
    )
}

/// Generalized accelerations `[v̇1, ṙ1, γ̈]`.
pub fn generalized_accelerations(
    s: &DynState,
    input: &StmInput,
    p: &VehicleParams,
) -> Result<Vector3<f64>, DynamicsError> {
    let slip = slip_angles(s, input.u1, input.delta, p);
    let forces = tire_forces(&slip, p);
    let rhs = generalized_forces(&forces, input.delta, s.gamma, p) - bias_vector(s, input.u1, p);
    mass_matrix(s.gamma, p)
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(DynamicsError::SingularMassMatrix { gamma: s.gamma })
}

/// Time derivative of the single-track state.
pub fn stm_derivatives(
    s: &DynState,
    input: &StmInput,
    p: &VehicleParams,
) -> Result<DynState, DynamicsError> {
    let acc = generalized_accelerations(s, input, p)?;
    let (sp, cp) = s.psi1.sin_cos();
    let u1 = input.u1;
    let vy_drive = s.v1 - p.b1 * s.r1;
    Ok(DynState {
        x1: u1 * cp - vy_drive * sp,
        y1: u1 * sp + vy_drive * cp,
        psi1: s.r1,
        gamma: s.gdot,
        v1: acc[0],
        r1: acc[1],
        gdot: acc[2],
    })
}
