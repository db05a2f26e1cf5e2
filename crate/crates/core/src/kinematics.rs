//! Single-axle kinematic model of the tractor-semitrailer (no tyre slip).
//!
//! The tractor reference point is the drive axle. The articulation angle is
//! `γ = ψ1 − ψ2`, positive when the tractor has yawed left of the trailer.
//! The fifth wheel sits `L1c` ahead of the drive axle.

use std::f64::consts::PI;

use thiserror::Error;

use crate::params::VehicleParams;

/// Wraps an angle into (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Planar pose of a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self { x, y, psi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KinState {
    pub x1: f64,
    pub y1: f64,
    pub psi1: f64,
    pub gamma: f64,
}

impl KinState {
    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.y1, self.psi1, self.gamma]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            x1: a[0],
            y1: a[1],
            psi1: a[2],
            gamma: a[3],
        }
    }

    pub fn tractor_pose(&self) -> Pose {
        Pose::new(self.x1, self.y1, self.psi1)
    }
}

/// Road-wheel steer angle and signed tractor speed (negative = reverse).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KinInput {
    pub delta: f64,
    pub u1: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("steer angle {delta} rad has no steady-state articulation in (−π/2, π/2)")]
    NoSteadyState { delta: f64 },
}

/// Time derivative of the kinematic state.
pub fn kin_derivatives(s: &KinState, input: &KinInput, p: &VehicleParams) -> KinState {
    let KinInput { delta, u1 } = *input;
    let yaw_rate = u1 * delta.tan() / p.l1;
    KinState {
        x1: u1 * s.psi1.cos(),
        y1: u1 * s.psi1.sin(),
        psi1: yaw_rate,
        gamma: -u1 * s.gamma.sin() / p.l2 + (1.0 - p.l1c * s.gamma.cos() / p.l2) * yaw_rate,
    }
}

/// γ̇ per unit tractor speed; zero at the steady-state articulation.
fn articulation_residual(gamma: f64, delta: f64, p: &VehicleParams) -> f64 {
    gamma.sin() / p.l2 - (1.0 - p.l1c * gamma.cos() / p.l2) * delta.tan() / p.l1
}

/// Articulation angle at which a constant steer angle holds the trailer in a
/// steady turn. Independent of speed.
pub fn kin_steady_state_articulation(delta: f64, p: &VehicleParams) -> Result<f64, KinematicsError> {
    const EDGE: f64 = 1e-9;
    let mut lo = -PI / 2.0 + EDGE;
    let mut hi = PI / 2.0 - EDGE;
    let mut r_lo = articulation_residual(lo, delta, p);
    let r_hi = articulation_residual(hi, delta, p);
    if !delta.is_finite() || r_lo.signum() == r_hi.signum() {
        return Err(KinematicsError::NoSteadyState { delta });
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let r_mid = articulation_residual(mid, delta, p);
        if r_mid == 0.0 {
            return Ok(mid);
        }
        if r_mid.signum() == r_lo.signum() {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fifth-wheel position from the tractor drive-axle pose.
pub fn fifth_wheel_from_tractor(tractor: &Pose, p: &VehicleParams) -> (f64, f64) {
    (
        tractor.x + p.l1c * tractor.psi.cos(),
        tractor.y + p.l1c * tractor.psi.sin(),
    )
}

/// Fifth-wheel position from the trailer pose at its middle axle.
pub fn fifth_wheel_from_trailer(trailer: &Pose, p: &VehicleParams) -> (f64, f64) {
    (
        trailer.x + p.l2 * trailer.psi.cos(),
        trailer.y + p.l2 * trailer.psi.sin(),
    )
}

/// Pose of the trailer's middle axle, reconstructed through the coupling.
pub fn trailer_pose_from_tractor(tractor: &Pose, gamma: f64, p: &VehicleParams) -> Pose {
    let psi2 = tractor.psi - gamma;
    let (cx, cy) = fifth_wheel_from_tractor(tractor, p);
    Pose::new(cx - p.l2 * psi2.cos(), cy - p.l2 * psi2.sin(), psi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{LoadCondition, ModelKind};
    use proptest::prelude::*;

    fn unloaded() -> VehicleParams {
        VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Kin)
    }

    #[test]
    fn straight_line_derivative() {
        let d = kin_derivatives(
            &KinState::default(),
            &KinInput {
                delta: 0.0,
                u1: 1.389,
            },
            &unloaded(),
        );
        assert_eq!(d.to_array(), [1.389, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn turning_rates_match_hand_arithmetic() {
        let u1 = 5.0 / 3.6;
        let d = kin_derivatives(
            &KinState::default(),
            &KinInput { delta: 0.1, u1 },
            &unloaded(),
        );
        // u1·tan(0.1)/3.8 and (1 − 0.67/7.5)·ψ̇1
        assert!((d.psi1 - 0.036672).abs() < 5e-7, "{}", d.psi1);
        assert!((d.gamma - 0.033396).abs() < 5e-7, "{}", d.gamma);
    }

    #[test]
    fn mirrored_input_negates_rates() {
        let p = unloaded();
        let s = KinState {
            gamma: 0.2,
            ..Default::default()
        };
        let m = KinState {
            gamma: -0.2,
            ..Default::default()
        };
        let a = kin_derivatives(&s, &KinInput { delta: 0.15, u1: 2.0 }, &p);
        let b = kin_derivatives(&m, &KinInput { delta: -0.15, u1: 2.0 }, &p);
        assert_eq!(a.x1, b.x1);
        assert_eq!(a.psi1, -b.psi1);
        assert_eq!(a.gamma, -b.gamma);
    }

    #[test]
    fn steady_state_articulation_values() {
        let p = unloaded();
        assert_eq!(kin_steady_state_articulation(0.0, &p).unwrap().abs(), 0.0);
        let g = kin_steady_state_articulation(0.1, &p).unwrap();
        assert!((g - 0.18163).abs() < 1e-5, "{g}");
        let gp = kin_steady_state_articulation(0.2, &p).unwrap();
        let gm = kin_steady_state_articulation(-0.2, &p).unwrap();
        assert!((gp + gm).abs() < 1e-11);
        let resid = kin_derivatives(
            &KinState {
                gamma: g,
                ..Default::default()
            },
            &KinInput { delta: 0.1, u1: 1.0 },
            &p,
        )
        .gamma;
        assert!(resid.abs() < 1e-10);
    }

    #[test]
    fn steady_state_fails_for_extreme_steer() {
        let p = unloaded();
        assert!(matches!(
            kin_steady_state_articulation(1.5, &p),
            Err(KinematicsError::NoSteadyState { .. })
        ));
    }

    #[test]
    fn trailer_pose_examples() {
        let p = unloaded();
        let t = trailer_pose_from_tractor(&Pose::default(), 0.0, &p);
        assert!((t.x - (0.67 - 7.5)).abs() < 1e-12);
        assert_eq!((t.y, t.psi), (0.0, 0.0));

        let t = trailer_pose_from_tractor(&Pose::default(), PI / 2.0, &p);
        assert!((t.psi + PI / 2.0).abs() < 1e-15);
        assert!((t.x - 0.67).abs() < 1e-12);
        assert!((t.y - 7.5).abs() < 1e-12);
    }

    #[test]
    fn wrap_examples() {
        assert!((wrap_angle(6.2) - (6.2 - 2.0 * PI)).abs() < 1e-15);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(0.3), 0.3);
    }

    proptest! {
        #[test]
        fn coupling_point_is_shared(x in -50.0..50.0f64, y in -50.0..50.0f64,
                                    psi in -PI..PI, gamma in -PI..PI) {
            let p = unloaded();
            let tractor = Pose::new(x, y, psi);
            let trailer = trailer_pose_from_tractor(&tractor, gamma, &p);
            let a = fifth_wheel_from_tractor(&tractor, &p);
            let b = fifth_wheel_from_trailer(&trailer, &p);
            prop_assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }

        /// The kinematic trailer axle must not slide sideways: differentiate
        /// the reconstructed trailer pose along the model's own rates.
        #[test]
        fn reconstructed_trailer_axle_rolls_without_slip(psi in -PI..PI, gamma in -1.2..1.2f64,
                                                         delta in -0.5..0.5f64, u1 in -3.0..3.0f64) {
            let p = unloaded();
            let s = KinState { x1: 1.0, y1: -2.0, psi1: psi, gamma };
            let d = kin_derivatives(&s, &KinInput { delta, u1 }, &p);
            let h = 1e-6;
            let fwd = trailer_pose_from_tractor(&Pose::new(s.x1 + h * d.x1, s.y1 + h * d.y1, s.psi1 + h * d.psi1), s.gamma + h * d.gamma, &p);
            let bwd = trailer_pose_from_tractor(&Pose::new(s.x1 - h * d.x1, s.y1 - h * d.y1, s.psi1 - h * d.psi1), s.gamma - h * d.gamma, &p);
            let (vx, vy) = ((fwd.x - bwd.x) / (2.0 * h), (fwd.y - bwd.y) / (2.0 * h));
            let psi2 = s.psi1 - s.gamma;
            let lateral = -vx * psi2.sin() + vy * psi2.cos();
            prop_assert!(lateral.abs() < 1e-6, "lateral {}", lateral);
        }
    }
}
