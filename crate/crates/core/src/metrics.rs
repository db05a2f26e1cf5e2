//! Distance-based error criteria for comparing a model run with a
//! measurement.
//!
//! Errors are averaged over the traveled distance `s` rather than time, so a
//! slow run and a fast run over the same path score the same, and long runs
//! are not penalized for their length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("a path needs at least two distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("path arc length is not strictly increasing at point {0}")]
    NonIncreasingArcLength(usize),
    #[error("traveled distance {0} m is not positive")]
    DegenerateDistance(f64),
    #[error("signal has {signal} samples but the distance grid has {grid}")]
    LengthMismatch { signal: usize, grid: usize },
    #[error("{0} is zero; cannot normalize")]
    ZeroNormalizer(&'static str),
    #[error("cannot mix forward and reverse reports in one table")]
    MixedDirections,
    #[error("no reports to aggregate")]
    Empty,
}

/// Ordered planar path with cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline {
    points: Vec<[f64; 2]>,
    arc: Vec<f64>,
}

impl PathPolyline {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, MetricsError> {
        if points.len() < 2 {
            return Err(MetricsError::TooFewPoints(points.len()));
        }
        let mut arc = Vec::with_capacity(points.len());
        arc.push(0.0);
        for i in 1..points.len() {
            let step = dist(points[i - 1], points[i]);
            if !(step > 0.0) {
                return Err(MetricsError::NonIncreasingArcLength(i));
            }
            arc.push(arc[i - 1] + step);
        }
        Ok(Self { points, arc })
    }

    /// Builds a polyline after dropping consecutive repeated points, as
    /// recorded at standstill.
    pub fn from_samples(xs: &[f64], ys: &[f64]) -> Result<Self, MetricsError> {
        let mut points: Vec<[f64; 2]> = Vec::with_capacity(xs.len());
        for (&x, &y) in xs.iter().zip(ys) {
            if points.last().map_or(true, |&last| dist(last, [x, y]) > 0.0) {
                points.push([x, y]);
            }
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn arc_length(&self) -> &[f64] {
        &self.arc
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Shortest distance from a point to a polyline; projections are clamped to
/// each segment's end points.
pub fn orthogonal_path_error(point: [f64; 2], path: &PathPolyline) -> f64 {
    path.points
        .windows(2)
        .map(|seg| point_segment_distance(point, seg[0], seg[1]))
        .fold(f64::INFINITY, f64::min)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Cumulative traveled distance from a speed signal, trapezoidal in time.
pub fn traveled_distance(times: &[f64], speed: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += 0.5 * (speed[i].abs() + speed[i - 1].abs()) * (times[i] - times[i - 1]);
        }
        s.push(acc);
    }
    s
}

fn check_grid(signal: &[f64], s: &[f64]) -> Result<f64, MetricsError> {
    if signal.len() != s.len() {
        return Err(MetricsError::LengthMismatch {
            signal: signal.len(),
            grid: s.len(),
        });
    }
    let span = match (s.first(), s.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    if !(span > 0.0) {
        return Err(MetricsError::DegenerateDistance(span));
    }
    Ok(span)
}

/// Distance-averaged RMS, `sqrt((1/s_max)·∫ε² ds)`.
///
/// The error is taken as linear between samples and its square is
/// integrated exactly on each interval, so piecewise-linear profiles are
/// reproduced to rounding error.
pub fn distance_rms(error: &[f64], s: &[f64]) -> Result<f64, MetricsError> {
    let span = check_grid(error, s)?;
    let mut integral = 0.0;
    for i in 1..s.len() {
        let (a, b) = (error[i - 1], error[i]);
        integral += (s[i] - s[i - 1]) * (a * a + a * b + b * b) / 3.0;
    }
    Ok((integral / span).sqrt())
}

/// Distance-averaged mean of `|x|`, trapezoidal.
pub fn distance_mean_abs(signal: &[f64], s: &[f64]) -> Result<f64, MetricsError> {
    let span = check_grid(signal, s)?;
    let mut integral = 0.0;
    for i in 1..s.len() {
        integral += 0.5 * (s[i] - s[i - 1]) * (signal[i - 1].abs() + signal[i].abs());
    }
    Ok(integral / span)
}

/// Per-unit distance-averaged errors summed over tractor and trailer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AbsoluteErrors {
    pub eps_p: f64,
    pub eps_a: f64,
    pub eps_v: f64,
}

pub fn absolute_errors(eps_y: [f64; 2], eps_r: [f64; 2], eps_v: [f64; 2]) -> AbsoluteErrors {
    AbsoluteErrors {
        eps_p: eps_y[0] + eps_y[1],
        eps_a: eps_r[0] + eps_r[1],
        eps_v: eps_v[0] + eps_v[1],
    }
}

/// Total normalized error in percent: yaw-rate and lateral-velocity errors
/// each divided by the mean magnitude of the measured signal.
pub fn normalized_total_error(
    eps_a: f64,
    eps_v: f64,
    mean_abs_yaw_rate: f64,
    mean_abs_lateral_velocity: f64,
) -> Result<f64, MetricsError> {
    if !(mean_abs_yaw_rate > 0.0) {
        return Err(MetricsError::ZeroNormalizer("mean measured yaw rate"));
    }
    if !(mean_abs_lateral_velocity > 0.0) {
        return Err(MetricsError::ZeroNormalizer("mean measured lateral velocity"));
    }
    Ok(100.0 * (eps_a / mean_abs_yaw_rate + eps_v / mean_abs_lateral_velocity))
}

/// Normalized steering effort in percent. Both signals must be on the same
/// (steering-wheel) scale.
pub fn steering_effort(
    delta_cmd: &[f64],
    delta_meas: &[f64],
    s: &[f64],
) -> Result<f64, MetricsError> {
    if delta_cmd.len() != delta_meas.len() {
        return Err(MetricsError::LengthMismatch {
            signal: delta_cmd.len(),
            grid: delta_meas.len(),
        });
    }
    let diff: Vec<f64> = delta_cmd.iter().zip(delta_meas).map(|(c, m)| c - m).collect();
    let rms = distance_rms(&diff, s)?;
    let mean = distance_mean_abs(delta_meas, s)?;
    if !(mean > 0.0) {
        return Err(MetricsError::ZeroNormalizer("mean measured steering angle"));
    }
    Ok(100.0 * rms / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// Scores of one model against one maneuver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub model: String,
    pub maneuver: String,
    pub direction: Direction,
    /// Lateral position, m.
    pub eps_y1: f64,
    pub eps_y2: f64,
    /// Yaw rate, rad/s.
    pub eps_r1: f64,
    pub eps_r2: f64,
    /// Lateral velocity, m/s.
    pub eps_v1: f64,
    pub eps_v2: f64,
    pub eps_p: f64,
    pub eps_a: f64,
    pub eps_v: f64,
    /// Total normalized error, %.
    pub eps_n: f64,
    /// Normalized steering effort, %; reverse runs only.
    pub j_steer: Option<f64>,
}

impl ErrorReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: impl Into<String>,
        maneuver: impl Into<String>,
        direction: Direction,
        eps_y: [f64; 2],
        eps_r: [f64; 2],
        eps_v: [f64; 2],
        eps_n: f64,
        j_steer: Option<f64>,
    ) -> Self {
        let sums = absolute_errors(eps_y, eps_r, eps_v);
        Self {
            model: model.into(),
            maneuver: maneuver.into(),
            direction,
            eps_y1: eps_y[0],
            eps_y2: eps_y[1],
            eps_r1: eps_r[0],
            eps_r2: eps_r[1],
            eps_v1: eps_v[0],
            eps_v2: eps_v[1],
            eps_p: sums.eps_p,
            eps_a: sums.eps_a,
            eps_v: sums.eps_v,
            eps_n,
            j_steer,
        }
    }

    /// True when the per-unit errors add up to the totals exactly.
    pub fn is_consistent(&self) -> bool {
        self.eps_p == self.eps_y1 + self.eps_y2
            && self.eps_a == self.eps_r1 + self.eps_r2
            && self.eps_v == self.eps_v1 + self.eps_v2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line() -> PathPolyline {
        PathPolyline::new(vec![[0.0, 0.0], [10.0, 0.0]]).unwrap()
    }

    /// Minimum over the polyline resampled every `step` metres.
    fn brute_force_distance(point: [f64; 2], path: &PathPolyline, step: f64) -> f64 {
        let mut best = f64::INFINITY;
        for seg in path.points().windows(2) {
            let n = (dist(seg[0], seg[1]) / step).ceil().max(1.0) as usize;
            for k in 0..=n {
                let t = k as f64 / n as f64;
                let q = [
                    seg[0][0] + t * (seg[1][0] - seg[0][0]),
                    seg[0][1] + t * (seg[1][1] - seg[0][1]),
                ];
                best = best.min(dist(point, q));
            }
        }
        best
    }

    #[test]
    fn orthogonal_distance_examples() {
        assert_eq!(orthogonal_path_error([5.0, 2.0], &line()), 2.0);
        assert_eq!(orthogonal_path_error([3.0, 0.0], &line()), 0.0);
        assert_eq!(orthogonal_path_error([12.0, 0.0], &line()), 2.0);
        assert!((brute_force_distance([12.0, 0.0], &line(), 1e-3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn polyline_rejects_degenerate_input() {
        assert_eq!(
            PathPolyline::new(vec![[0.0, 0.0]]),
            Err(MetricsError::TooFewPoints(1))
        );
        assert_eq!(
            PathPolyline::new(vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]),
            Err(MetricsError::NonIncreasingArcLength(1))
        );
        let p = PathPolyline::from_samples(&[0.0, 0.0, 1.0, 1.0, 2.0], &[0.0; 5]).unwrap();
        assert_eq!(p.points().len(), 3);
        assert_eq!(p.length(), 2.0);
    }

    #[test]
    fn distance_rms_examples() {
        let s: Vec<f64> = (0..=50).map(|i| i as f64 * 0.37).collect();
        let s_max = s[50];
        assert!((distance_rms(&vec![0.5; 51], &s).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(distance_rms(&vec![0.0; 51], &s).unwrap(), 0.0);
        let c = 1.7;
        let ramp: Vec<f64> = s.iter().map(|si| c * si / s_max).collect();
        assert!((distance_rms(&ramp, &s).unwrap() - c / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            distance_rms(&[1.0, 1.0], &[2.0, 2.0]),
            Err(MetricsError::DegenerateDistance(0.0))
        );
    }

    #[test]
    fn traveled_distance_ignores_direction() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(traveled_distance(&t, &[1.0, 1.0, -1.0, -1.0]), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn normalized_error_examples() {
        assert_eq!(normalized_total_error(0.02, 0.3, 0.02, 0.3).unwrap(), 200.0);
        assert_eq!(normalized_total_error(0.0, 0.0, 0.02, 0.3).unwrap(), 0.0);
        let a = normalized_total_error(0.004, 0.03, 0.05, 0.2).unwrap();
        let b = normalized_total_error(0.004 * 7.0, 0.03 * 7.0, 0.05 * 7.0, 0.2 * 7.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(normalized_total_error(0.1, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn steering_effort_examples() {
        let s: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let meas = vec![0.5; 100];
        assert_eq!(steering_effort(&meas, &meas, &s).unwrap(), 0.0);
        let cmd: Vec<f64> = meas.iter().map(|m| m + 0.05).collect();
        let j = steering_effort(&cmd, &meas, &s).unwrap();
        assert!((j - 10.0).abs() < 1e-9);
        let cmd2: Vec<f64> = meas.iter().map(|m| m + 0.1).collect();
        assert!((steering_effort(&cmd2, &meas, &s).unwrap() - 2.0 * j).abs() < 1e-9);
        assert!(steering_effort(&cmd, &vec![0.0; 100], &s).is_err());
    }

    #[test]
    fn report_sums() {
        let r = ErrorReport::new(
            "STM",
            "m",
            Direction::Forward,
            [1.0, 1.0],
            [0.0, 0.0],
            [0.1, 0.2],
            3.0,
            None,
        );
        assert_eq!(r.eps_p, 2.0);
        assert_eq!(r.eps_a, 0.0);
        assert!(r.is_consistent());
    }

    proptest! {
        #[test]
        fn rms_is_positively_homogeneous(values in proptest::collection::vec(-3.0..3.0f64, 2..40),
                                         lambda in 0.01..50.0f64) {
            let s: Vec<f64> = (0..values.len()).map(|i| i as f64 * 0.5).collect();
            let scaled: Vec<f64> = values.iter().map(|v| v * lambda).collect();
            let a = distance_rms(&values, &s).unwrap();
            let b = distance_rms(&scaled, &s).unwrap();
            prop_assert!((b - lambda * a).abs() <= 1e-12 * (1.0 + b));
        }

        #[test]
        fn orthogonal_distance_matches_brute_force(
            pts in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..6),
            px in -8.0..8.0f64, py in -8.0..8.0f64)
        {
            let path = PathPolyline::from_samples(
                &pts.iter().map(|p| p.0).collect::<Vec<_>>(),
                &pts.iter().map(|p| p.1).collect::<Vec<_>>());
            prop_assume!(path.is_ok());
            let path = path.unwrap();
            let exact = orthogonal_path_error([px, py], &path);
            let brute = brute_force_distance([px, py], &path, 1e-3);
            prop_assert!(exact <= brute + 1e-12);
            // 1 mm sampling overestimates by up to h²/(8d); keep that below
            // the tolerance.
            prop_assume!(brute > 0.25);
            prop_assert!(brute - exact < 1e-6, "{} vs {}", exact, brute);
        }
    }
}
