//! Maneuver presets written as `kind[:amplitude_deg[:speed_kmh[:left|right]]]`.

use anyhow::{bail, Context, Result};
use semitrailer_core::harness::{ManeuverSpec, TurnDirection};
use semitrailer_core::params::VehicleParams;

/// Slalom period used when a preset does not specify one, s.
const SLALOM_PERIOD: f64 = 10.0;

const KINDS: [&str; 4] = ["constant", "ramp", "slalom", "figure8"];

/// True when `text` names a preset rather than a log file.
pub fn is_preset(text: &str) -> bool {
    KINDS.contains(&text.split(':').next().unwrap_or(""))
}

pub fn parse_preset(text: &str, p: &VehicleParams) -> Result<ManeuverSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() > 4 {
        bail!("maneuver `{text}` has too many fields; expected kind[:amplitude_deg[:speed_kmh[:left|right]]]");
    }
    let number = |i: usize, what: &str| -> Result<Option<f64>> {
        parts
            .get(i)
            .map(|s| s.parse::<f64>().with_context(|| format!("maneuver `{text}`: bad {what} `{s}`")))
            .transpose()
    };
    let amplitude = number(1, "amplitude")?;
    let speed = number(2, "speed")?;
    let direction = match parts.get(3).copied() {
        None | Some("left") => TurnDirection::Left,
        Some("right") => TurnDirection::Right,
        Some(other) => bail!("maneuver `{text}`: direction must be left or right, got `{other}`"),
    };
    let mut spec = match parts[0] {
        "constant" => ManeuverSpec::constant_steer(amplitude.unwrap_or(200.0), speed.unwrap_or(5.0), direction),
        "ramp" => ManeuverSpec::ramp_steer(amplitude.unwrap_or(30.0), speed.unwrap_or(3.0), direction),
        "slalom" => ManeuverSpec::slalom(amplitude.unwrap_or(90.0), speed.unwrap_or(5.0), SLALOM_PERIOD),
        "figure8" => ManeuverSpec::figure_eight(amplitude.unwrap_or(500.0), speed.unwrap_or(5.0), p)?,
        other => bail!("unknown maneuver kind `{other}`; expected one of {}", KINDS.join(", ")),
    };
    spec.direction = direction;
    Ok(spec)
}
