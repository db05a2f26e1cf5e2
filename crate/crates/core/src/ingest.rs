//! Measurement logs: parsing, resampling, sensor-offset correction and the
//! articulation channel.
//!
//! A log is comma-delimited text. The header names each column as
//! `name[unit]@rate`, the first column is `t[s]`, and channels sampled
//! below the row rate leave their cells empty. A `#sensor` suffix marks a
//! channel recorded at the inertial sensor rather than the model reference
//! point, e.g. `v1[m/s]@100#sensor`.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::harness::Trajectory;
use crate::kinematics::wrap_angle;
use crate::params::VehicleParams;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read log: {0}")]
    Io(#[from] std::io::Error),
    #[error("log is empty")]
    Empty,
    #[error("first column must be t[s], found `{0}`")]
    TimeColumn(String),
    #[error("column `{0}` has no [unit] tag")]
    MissingUnit(String),
    #[error("column `{column}`: unknown unit `{unit}`")]
    UnknownUnit { column: String, unit: String },
    #[error("column `{column}`: unit `{unit}` does not fit the channel")]
    UnitMismatch { column: String, unit: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column `{0}`: bad rate")]
    BadRate(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: cannot parse `{text}`")]
    BadNumber { row: usize, text: String },
    #[error("row {row}: time {time} does not increase")]
    NonMonotoneTime { row: usize, time: f64 },
    #[error("channel `{0}` is already in SI units")]
    AlreadySi(String),
    #[error("channel `{0}` is empty")]
    EmptyChannel(String),
    #[error("target rate {target} Hz is below the native rate {native} Hz")]
    Downsample { target: f64, native: f64 },
    #[error("channels `{0}` and `{1}` are not on a common time grid")]
    GridMismatch(String, String),
    #[error("missing channel `{0}`")]
    MissingChannel(String),
}

/// Physical units accepted in log headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Second,
    Metre,
    Radian,
    Degree,
    MetrePerSecond,
    KmPerHour,
    RadPerSecond,
    DegPerSecond,
    Dimensionless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Time,
    Length,
    Angle,
    Speed,
    AngularRate,
    Free,
}

impl Unit {
    pub fn parse(tag: &str) -> Option<Self> {
        Some(match tag {
            "s" => Self::Second,
            "m" => Self::Metre,
            "rad" => Self::Radian,
            "deg" => Self::Degree,
            "m/s" => Self::MetrePerSecond,
            "km/h" => Self::KmPerHour,
            "rad/s" => Self::RadPerSecond,
            "deg/s" => Self::DegPerSecond,
            "1" | "-" => Self::Dimensionless,
            _ => return None,
        })
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Second => "s",
            Self::Metre => "m",
            Self::Radian => "rad",
            Self::Degree => "deg",
            Self::MetrePerSecond => "m/s",
            Self::KmPerHour => "km/h",
            Self::RadPerSecond => "rad/s",
            Self::DegPerSecond => "deg/s",
            Self::Dimensionless => "1",
        }
    }

    pub fn is_si(self) -> bool {
        !matches!(self, Self::Degree | Self::KmPerHour | Self::DegPerSecond)
    }

    fn dimension(self) -> Dimension {
        match self {
            Self::Second => Dimension::Time,
            Self::Metre => Dimension::Length,
            Self::Radian | Self::Degree => Dimension::Angle,
            Self::MetrePerSecond | Self::KmPerHour => Dimension::Speed,
            Self::RadPerSecond | Self::DegPerSecond => Dimension::AngularRate,
            Self::Dimensionless => Dimension::Free,
        }
    }

    /// SI unit and the factor that converts into it.
    fn si(self) -> (Self, f64) {
        match self {
            Self::Degree => (Self::Radian, std::f64::consts::PI / 180.0),
            Self::DegPerSecond => (Self::RadPerSecond, std::f64::consts::PI / 180.0),
            Self::KmPerHour => (Self::MetrePerSecond, 1.0 / 3.6),
            other => (other, 1.0),
        }
    }
}

/// Channels a log may carry, with the dimension each must have.
const KNOWN_CHANNELS: [(&str, Dimension); 14] = [
    ("delta_sw", Dimension::Angle),
    ("u1", Dimension::Speed),
    ("v1", Dimension::Speed),
    ("r1", Dimension::AngularRate),
    ("X1", Dimension::Length),
    ("Y1", Dimension::Length),
    ("psi1", Dimension::Angle),
    ("u2", Dimension::Speed),
    ("v2", Dimension::Speed),
    ("r2", Dimension::AngularRate),
    ("X2", Dimension::Length),
    ("Y2", Dimension::Length),
    ("psi2", Dimension::Angle),
    ("gamma", Dimension::Angle),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mount {
    /// Already at the model reference point.
    Reference,
    /// Recorded at the tractor or trailer inertial sensor.
    Sensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub unit: Unit,
    /// Nominal sampling rate, Hz.
    pub rate: f64,
    pub mount: Mount,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Channel {
    pub fn new(name: impl Into<String>, unit: Unit, rate: f64, times: Vec<f64>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit,
            rate,
            mount: Mount::Reference,
            times,
            values,
        }
    }

    /// Converts the samples to SI. A channel already in SI is rejected so a
    /// conversion cannot be applied twice.
    pub fn to_si(&self) -> Result<Channel, IngestError> {
        if self.unit.is_si() {
            return Err(IngestError::AlreadySi(self.name.clone()));
        }
        let (unit, factor) = self.unit.si();
        Ok(Channel {
            unit,
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        })
    }

    fn header(&self) -> String {
        let mount = match self.mount {
            Mount::Reference => "",
            Mount::Sensor => "#sensor",
        };
        format!("{}[{}]@{}{mount}", self.name, self.unit.tag(), self.rate)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementLog {
    pub channels: Vec<Channel>,
}

fn parse_header(cell: &str) -> Result<(String, Unit, f64, Mount), IngestError> {
    let (body, mount) = match cell.strip_suffix("#sensor") {
        Some(b) => (b, Mount::Sensor),
        None => (cell, Mount::Reference),
    };
    let open = body.find('[').ok_or_else(|| IngestError::MissingUnit(cell.into()))?;
    let close = body.find(']').ok_or_else(|| IngestError::MissingUnit(cell.into()))?;
    if close < open {
        return Err(IngestError::MissingUnit(cell.into()));
    }
    let name = body[..open].trim().to_string();
    let tag = &body[open + 1..close];
    let unit = Unit::parse(tag).ok_or_else(|| IngestError::UnknownUnit {
        column: name.clone(),
        unit: tag.into(),
    })?;
    let rest = body[close + 1..].trim();
    let rate = match rest.strip_prefix('@') {
        Some(r) => r
            .parse::<f64>()
            .ok()
            .filter(|r| *r > 0.0 && r.is_finite())
            .ok_or_else(|| IngestError::BadRate(name.clone()))?,
        None if rest.is_empty() => 0.0,
        None => return Err(IngestError::BadRate(name)),
    };
    Ok((name, unit, rate, mount))
}

fn expected_dimension(name: &str) -> Option<Dimension> {
    if name.starts_with("aux_") {
        return Some(Dimension::Free);
    }
    KNOWN_CHANNELS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| *d)
}

/// Parses log text. Non-SI channels are converted on the way in.
pub fn parse_log_str(text: &str) -> Result<MeasurementLog, IngestError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(IngestError::Empty)?;
    let cells: Vec<&str> = header.split(',').map(str::trim).collect();
    let (tname, tunit, _, _) = parse_header(cells[0]).map_err(|_| IngestError::TimeColumn(cells[0].into()))?;
    if tname != "t" || tunit != Unit::Second {
        return Err(IngestError::TimeColumn(cells[0].into()));
    }

    let mut channels = Vec::with_capacity(cells.len() - 1);
    for cell in &cells[1..] {
        let (name, unit, rate, mount) = parse_header(cell)?;
        let dim = expected_dimension(&name).ok_or_else(|| IngestError::UnknownColumn(name.clone()))?;
        if dim != Dimension::Free && unit.dimension() != dim {
            return Err(IngestError::UnitMismatch {
                column: name,
                unit: unit.tag().into(),
            });
        }
        if channels.iter().any(|c: &Channel| c.name == name) {
            return Err(IngestError::DuplicateColumn(name));
        }
        let mut ch = Channel::new(name, unit, rate, Vec::new(), Vec::new());
        ch.mount = mount;
        channels.push(ch);
    }

    let mut last_time: Option<f64> = None;
    for (idx, line) in lines {
        let row = idx + 1;
        let row_cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if row_cells.len() != cells.len() {
            return Err(IngestError::RowWidth {
                row,
                expected: cells.len(),
                found: row_cells.len(),
            });
        }
        let number = |text: &str| {
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IngestError::BadNumber {
                    row,
                    text: text.into(),
                })
        };
        let t = number(row_cells[0])?;
        if last_time.is_some_and(|prev| !(t > prev)) {
            return Err(IngestError::NonMonotoneTime { row, time: t });
        }
        last_time = Some(t);
        for (ch, text) in channels.iter_mut().zip(&row_cells[1..]) {
            if !text.is_empty() {
                ch.times.push(t);
                ch.values.push(number(text)?);
            }
        }
    }

    for ch in &mut channels {
        if !ch.unit.is_si() {
            *ch = ch.to_si()?;
        }
    }
    Ok(MeasurementLog { channels })
}

pub fn parse_log(path: &Path) -> Result<MeasurementLog, IngestError> {
    parse_log_str(&std::fs::read_to_string(path)?)
}

/// Writes a log; every value is printed in its shortest exact form so that
/// parsing the output reproduces the log bit for bit.
pub fn write_log(log: &MeasurementLog) -> String {
    let mut times: Vec<f64> = log.channels.iter().flat_map(|c| c.times.iter().copied()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut out = String::from("t[s]");
    for ch in &log.channels {
        out.push(',');
        out.push_str(&ch.header());
    }
    out.push('\n');
    let mut cursor = vec![0usize; log.channels.len()];
    for t in times {
        let _ = write!(out, "{t}");
        for (ch, i) in log.channels.iter().zip(cursor.iter_mut()) {
            out.push(',');
            if *i < ch.times.len() && ch.times[*i] == t {
                let _ = write!(out, "{}", ch.values[*i]);
                *i += 1;
            }
        }
        out.push('\n');
    }
    out
}

impl MeasurementLog {
    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Channel, IngestError> {
        self.channel(name)
            .ok_or_else(|| IngestError::MissingChannel(name.into()))
    }

    /// Reference-point log of a simulated run at its output rate.
    pub fn from_trajectory(traj: &Trajectory, rate: f64) -> Self {
        let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        let col = |name: &str, unit: Unit, f: &dyn Fn(&crate::harness::Sample) -> f64| {
            Channel::new(name, unit, rate, times.clone(), traj.samples.iter().map(f).collect())
        };
        use Unit::*;
        Self {
            channels: vec![
                col("delta_sw", Radian, &|s| s.delta_sw_cmd),
                col("u1", MetrePerSecond, &|s| s.u1),
                col("v1", MetrePerSecond, &|s| s.v1),
                col("r1", RadPerSecond, &|s| s.r1),
                col("X1", Metre, &|s| s.x1),
                col("Y1", Metre, &|s| s.y1),
                col("psi1", Radian, &|s| s.psi1),
                col("u2", MetrePerSecond, &|s| s.u2),
                col("v2", MetrePerSecond, &|s| s.v2),
                col("r2", RadPerSecond, &|s| s.r2),
                col("X2", Metre, &|s| s.x2),
                col("Y2", Metre, &|s| s.y2),
                col("psi2", Radian, &|s| s.psi2),
                col("gamma", Radian, &|s| s.gamma),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMethod {
    Hold,
    Linear,
}

/// Resamples onto the uniform grid `t0 + k/rate` spanning the channel.
pub fn resample(ch: &Channel, rate: f64, method: ResampleMethod) -> Result<Channel, IngestError> {
    if ch.times.is_empty() {
        return Err(IngestError::EmptyChannel(ch.name.clone()));
    }
    if rate < ch.rate || !(rate > 0.0) {
        return Err(IngestError::Downsample {
            target: rate,
            native: ch.rate,
        });
    }
    let t0 = ch.times[0];
    let span = ch.times.last().unwrap() - t0;
    let n = (span * rate + 1e-6).floor() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut j = 0;
    for k in 0..=n {
        let t = t0 + k as f64 / rate;
        while j + 1 < ch.times.len() && ch.times[j + 1] <= t + 1e-9 {
            j += 1;
        }
        let v = match method {
            ResampleMethod::Hold => ch.values[j],
            ResampleMethod::Linear if j + 1 < ch.times.len() => {
                let (ta, tb) = (ch.times[j], ch.times[j + 1]);
                let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
                ch.values[j] + w * (ch.values[j + 1] - ch.values[j])
            }
            ResampleMethod::Linear => ch.values[j],
        };
        times.push(t);
        values.push(v);
    }
    Ok(Channel {
        rate,
        times,
        values,
        ..ch.clone()
    })
}

/// Keeps every `factor`-th sample.
pub fn decimate(ch: &Channel, factor: usize) -> Channel {
    let pick = |v: &[f64]| v.iter().step_by(factor.max(1)).copied().collect();
    Channel {
        rate: ch.rate / factor.max(1) as f64,
        times: pick(&ch.times),
        values: pick(&ch.values),
        ..ch.clone()
    }
}

/// Sensor position relative to the tractor drive axle (straight-ahead
/// combination), m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorOffset {
    pub x: f64,
    pub y: f64,
    /// Height; unused by the planar models.
    pub z: f64,
}

pub const TRACTOR_SENSOR: SensorOffset = SensorOffset {
    x: 3.825,
    y: -0.005,
    z: 1.206,
};

pub const TRAILER_SENSOR: SensorOffset = SensorOffset {
    x: -10.492,
    y: -0.004,
    z: 0.1,
};

impl SensorOffset {
    /// The same sensor seen from a point `origin_x` ahead along the body axis.
    pub fn shifted(self, origin_x: f64) -> Self {
        Self {
            x: self.x - origin_x,
            ..self
        }
    }
}

/// Lateral velocity at the reference point from a sensor reading.
pub fn sensor_to_reference(v_sensor: f64, r: f64, offset: &SensorOffset) -> f64 {
    v_sensor - offset.x * r
}

/// Longitudinal velocity at the reference point from a sensor reading.
pub fn sensor_to_reference_longitudinal(u_sensor: f64, r: f64, offset: &SensorOffset) -> f64 {
    u_sensor + offset.y * r
}

/// Reference-point position from the sensor position and body heading.
pub fn sensor_position_to_reference(x: f64, y: f64, psi: f64, offset: &SensorOffset) -> (f64, f64) {
    let (s, c) = psi.sin_cos();
    (x - (offset.x * c - offset.y * s), y - (offset.x * s + offset.y * c))
}

pub fn compute_articulation(psi1: &Channel, psi2: &Channel) -> Result<Channel, IngestError> {
    if psi1.times != psi2.times {
        return Err(IngestError::GridMismatch(psi1.name.clone(), psi2.name.clone()));
    }
    let values = psi1
        .values
        .iter()
        .zip(&psi2.values)
        .map(|(a, b)| wrap_angle(a - b))
        .collect();
    Ok(Channel::new("gamma", Unit::Radian, psi1.rate, psi1.times.clone(), values))
}

/// Sensor offsets of tractor and trailer in the frames of the model's
/// reference points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOffsets {
    /// Tractor sensor relative to the tractor COG.
    pub tractor_cog: SensorOffset,
    /// Tractor sensor relative to the drive axle.
    pub tractor_axle: SensorOffset,
    /// Trailer sensor relative to the trailer COG.
    pub trailer_cog: SensorOffset,
    /// Trailer sensor relative to the middle trailer axle.
    pub trailer_axle: SensorOffset,
}

impl ReferenceOffsets {
    /// Places the standard sensors on a vehicle. The trailer offset is given
    /// in tractor coordinates with the combination straight, and is carried
    /// over to the trailer body through the fifth wheel.
    pub fn for_vehicle(p: &VehicleParams) -> Self {
        let kingpin = TRAILER_SENSOR.shifted(p.l1c);
        Self {
            tractor_cog: TRACTOR_SENSOR.shifted(p.b1),
            tractor_axle: TRACTOR_SENSOR,
            trailer_cog: kingpin.shifted(-p.a2),
            trailer_axle: kingpin.shifted(-p.l2),
        }
    }
}

impl MeasurementLog {
    /// Moves every sensor-mounted channel to the model reference point.
    /// Velocities go to the body COG, positions to the drive axle and the
    /// middle trailer axle. Needs the matching yaw rate (and heading for
    /// positions) on the same time grid.
    pub fn to_reference(&self, p: &VehicleParams) -> Result<MeasurementLog, IngestError> {
        let off = ReferenceOffsets::for_vehicle(p);
        let mut out = self.clone();
        for (i, ch) in self.channels.iter().enumerate() {
            if ch.mount == Mount::Reference {
                continue;
            }
            let body = match ch.name.as_str() {
                "u1" | "v1" | "X1" | "Y1" => 1,
                "u2" | "v2" | "X2" | "Y2" => 2,
                _ => {
                    out.channels[i].mount = Mount::Reference;
                    continue;
                }
            };
            let (cog, axle) = if body == 1 {
                (off.tractor_cog, off.tractor_axle)
            } else {
                (off.trailer_cog, off.trailer_axle)
            };
            let grid = |name: &str| -> Result<&Channel, IngestError> {
                let other = self.require(name)?;
                if other.times != ch.times {
                    return Err(IngestError::GridMismatch(ch.name.clone(), other.name.clone()));
                }
                Ok(other)
            };
            let values: Vec<f64> = match &ch.name[..1] {
                "u" | "v" => {
                    let r = grid(&format!("r{body}"))?;
                    ch.values
                        .iter()
                        .zip(&r.values)
                        .map(|(v, r)| {
                            if ch.name.starts_with('u') {
                                sensor_to_reference_longitudinal(*v, *r, &cog)
                            } else {
                                sensor_to_reference(*v, *r, &cog)
                            }
                        })
                        .collect()
                }
                _ => {
                    let partner = if ch.name.starts_with('X') { "Y" } else { "X" };
                    let other = grid(&format!("{partner}{body}"))?;
                    let psi = grid(&format!("psi{body}"))?;
                    ch.values
                        .iter()
                        .zip(&other.values)
                        .zip(&psi.values)
                        .map(|((v, o), psi)| {
                            let (x, y) = if partner == "Y" { (*v, *o) } else { (*o, *v) };
                            let (xr, yr) = sensor_position_to_reference(x, y, *psi, &axle);
                            if partner == "Y" {
                                xr
                            } else {
                                yr
                            }
                        })
                        .collect()
                }
            };
            out.channels[i].values = values;
            out.channels[i].mount = Mount::Reference;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "t[s],delta_sw[deg]@100,u1[km/h]@100,aux_brake[1]@10\n\
                          0,0,5,1\n\
                          0.01,10,5,\n\
                          0.02,20,5,\n";

    #[test]
    fn parses_units_and_mixed_rates() {
        let log = parse_log_str(SAMPLE).unwrap();
        let d = log.channel("delta_sw").unwrap();
        assert_eq!(d.unit, Unit::Radian);
        assert!((d.values[2] - 20f64.to_radians()).abs() < 1e-15);
        let u = log.channel("u1").unwrap();
        assert_eq!(u.unit, Unit::MetrePerSecond);
        assert!((u.values[0] - 1.388888888888889).abs() < 1e-12);
        let aux = log.channel("aux_brake").unwrap();
        assert_eq!((aux.rate, aux.times.len()), (10.0, 1));
        assert_eq!(d.rate, 100.0);
    }

    #[test]
    fn duplicate_timestamp_names_row() {
        let text = "t[s],gamma[rad]@100\n0,0\n0.01,0\n0.01,0\n";
        let err = parse_log_str(text).unwrap_err();
        assert!(matches!(err, IngestError::NonMonotoneTime { row: 4, .. }));
        assert!(err.to_string().contains("row 4"));
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            parse_log_str("t[s],speed[m/s]@100\n0,1\n"),
            Err(IngestError::UnknownColumn(_))
        ));
        assert!(matches!(
            parse_log_str("t[s],u1@100\n0,1\n"),
            Err(IngestError::MissingUnit(_))
        ));
        assert!(matches!(
            parse_log_str("t[s],u1[rad]@100\n0,1\n"),
            Err(IngestError::UnitMismatch { .. })
        ));
        assert!(matches!(
            parse_log_str("time[s],u1[m/s]@100\n0,1\n"),
            Err(IngestError::TimeColumn(_))
        ));
        assert!(matches!(
            parse_log_str("t[s],u1[m/s]@100\n0,1,2\n"),
            Err(IngestError::RowWidth { row: 2, .. })
        ));
    }

    #[test]
    fn converting_twice_is_rejected() {
        let log = parse_log_str(SAMPLE).unwrap();
        assert!(matches!(
            log.channel("delta_sw").unwrap().to_si(),
            Err(IngestError::AlreadySi(_))
        ));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut log = parse_log_str(SAMPLE).unwrap();
        log.channels[0].values[1] = 0.1 + 0.2;
        log.channels[1].mount = Mount::Sensor;
        let again = parse_log_str(&write_log(&log)).unwrap();
        assert_eq!(again, log);
    }

    #[test]
    fn resample_examples() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let ramp = Channel::new("aux_x", Unit::Dimensionless, 10.0, times.clone(), times.clone());
        let lin = resample(&ramp, 100.0, ResampleMethod::Linear).unwrap();
        assert_eq!(lin.times.len(), 101);
        for (k, v) in lin.values.iter().enumerate() {
            assert!((v - k as f64 / 100.0).abs() < 1e-12);
        }
        let c = Channel::new("aux_c", Unit::Dimensionless, 10.0, times, vec![2.5; 11]);
        assert!(resample(&c, 50.0, ResampleMethod::Linear).unwrap().values.iter().all(|v| *v == 2.5));
        assert!(matches!(
            resample(&c, 5.0, ResampleMethod::Hold),
            Err(IngestError::Downsample { .. })
        ));
        let empty = Channel::new("aux_e", Unit::Dimensionless, 10.0, vec![], vec![]);
        assert!(matches!(
            resample(&empty, 10.0, ResampleMethod::Hold),
            Err(IngestError::EmptyChannel(_))
        ));
    }

    #[test]
    fn sensor_examples() {
        assert_eq!(sensor_to_reference(0.7, 0.0, &TRACTOR_SENSOR), 0.7);
        assert!((sensor_to_reference(0.0, 0.1, &TRACTOR_SENSOR) + 0.3825).abs() < 1e-12);
        assert!((sensor_to_reference(0.0, 0.1, &TRAILER_SENSOR) - 1.0492).abs() < 1e-12);
    }

    #[test]
    fn articulation_examples() {
        let ch = |name: &str, v: f64| Channel::new(name, Unit::Radian, 100.0, vec![0.0], vec![v]);
        let g = compute_articulation(&ch("psi1", 0.3), &ch("psi2", 0.1)).unwrap();
        assert!((g.values[0] - 0.2).abs() < 1e-15);
        let g = compute_articulation(&ch("psi1", 3.1), &ch("psi2", -3.1)).unwrap();
        assert!((g.values[0] - (6.2 - 2.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert!((g.values[0] + 0.0832).abs() < 1e-4);
        assert_eq!(compute_articulation(&ch("psi1", 1.0), &ch("psi2", 1.0)).unwrap().values[0], 0.0);
        let other = Channel::new("psi2", Unit::Radian, 100.0, vec![0.5], vec![0.0]);
        assert!(compute_articulation(&ch("psi1", 0.0), &other).is_err());
    }

    #[test]
    fn trailer_offsets_follow_geometry() {
        let p = VehicleParams::builtin(crate::params::LoadCondition::Unloaded, crate::params::ModelKind::Stm);
        let off = ReferenceOffsets::for_vehicle(&p);
        assert!((off.tractor_cog.x - (3.825 - p.b1)).abs() < 1e-12);
        // middle trailer axle sits L2 − L1c behind the drive axle
        assert!((off.trailer_axle.x - (-10.492 + (p.l2 - p.l1c))).abs() < 1e-12);
        assert!((off.trailer_cog.x - (-10.492 - p.l1c + p.a2)).abs() < 1e-12);
    }

    proptest! {
        /// Rigid planar body: sample the velocity field at the sensor and at
        /// the reference point in a rotating frame and compare.
        #[test]
        fn sensor_correction_is_exact_for_rigid_motion(
            u in -5.0..5.0f64, v in -1.0..1.0f64, r in -0.5..0.5f64,
            x in -12.0..5.0f64, y in -1.0..1.0f64, psi in -3.0..3.0f64,
        ) {
            let off = SensorOffset { x, y, z: 0.0 };
            // world velocity of the reference point and of the sensor
            let (s, c) = psi.sin_cos();
            let world = |bx: f64, by: f64| {
                let (vx, vy) = (u - r * by, v + r * bx);
                (vx * c - vy * s, vx * s + vy * c)
            };
            let (wx, wy) = world(x, y);
            let us = wx * c + wy * s;
            let vs = -wx * s + wy * c;
            prop_assert!((sensor_to_reference(vs, r, &off) - v).abs() < 1e-12);
            prop_assert!((sensor_to_reference_longitudinal(us, r, &off) - u).abs() < 1e-12);
            let (px, py) = (3.0, -2.0);
            let sx = px + x * c - y * s;
            let sy = py + x * s + y * c;
            let (rx, ry) = sensor_position_to_reference(sx, sy, psi, &off);
            prop_assert!((rx - px).abs() < 1e-12 && (ry - py).abs() < 1e-12);
        }

        #[test]
        fn correction_is_linear(v1 in -2.0..2.0f64, r1 in -1.0..1.0f64, v2 in -2.0..2.0f64, r2 in -1.0..1.0f64, k in -3.0..3.0f64) {
            let o = TRACTOR_SENSOR;
            let lhs = sensor_to_reference(v1 + k * v2, r1 + k * r2, &o);
            let rhs = sensor_to_reference(v1, r1, &o) + k * sensor_to_reference(v2, r2, &o);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn hold_then_decimate_is_identity(values in proptest::collection::vec(-10.0..10.0f64, 2..40), factor in 1usize..12) {
            let times: Vec<f64> = (0..values.len()).map(|k| k as f64 / 10.0).collect();
            let ch = Channel::new("aux_s", Unit::Dimensionless, 10.0, times, values);
            let up = resample(&ch, 10.0 * factor as f64, ResampleMethod::Hold).unwrap();
            prop_assert!(up.values.iter().all(|v| ch.values.contains(v)));
            let down = decimate(&up, factor);
            prop_assert_eq!(&down.values, &ch.values);
            for (a, b) in down.times.iter().zip(&ch.times) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
