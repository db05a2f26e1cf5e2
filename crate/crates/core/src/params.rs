//! Vehicle parameters for the tractor-semitrailer combination.
//!
//! Values come from the measured combination: a two-axle tractor and a
//! tridem semitrailer, tested empty and with 10 t of pallets. Tractor values
//! are shared between the two load conditions.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gravitational acceleration used for the axle-load balance, m/s².
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LoadCondition {
    Unloaded,
    Loaded,
}

impl LoadCondition {
    pub const ALL: [LoadCondition; 2] = [LoadCondition::Unloaded, LoadCondition::Loaded];
}

impl fmt::Display for LoadCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadCondition::Unloaded => f.write_str("unloaded"),
            LoadCondition::Loaded => f.write_str("loaded"),
        }
    }
}

/// Which vehicle model a parameter set is tuned for. Only the steering ratio
/// differs between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Kin,
    Stm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Kin, ModelKind::Stm];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Kin => "KIN",
            ModelKind::Stm => "STM",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Geometric, inertial, tyre and steering constants for one load condition.
///
/// Lengths are in metres, masses in kg, inertias in kg·m², loads in N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Tractor mass.
    pub m1: f64,
    /// Trailer mass.
    pub m2: f64,
    /// Tractor yaw inertia about its COG.
    pub j1: f64,
    /// Trailer yaw inertia about its COG.
    pub j2: f64,
    /// Tractor COG to front axle.
    pub a1: f64,
    /// Tractor COG to drive axle.
    pub b1: f64,
    /// Tractor wheelbase.
    pub l1: f64,
    /// Drive axle to fifth wheel, positive when the fifth wheel is ahead of
    /// the drive axle.
    pub l1c: f64,
    /// Trailer COG to fifth wheel.
    pub a2: f64,
    /// Trailer COG to 2nd trailer axle. Not used by the planar models.
    pub b2: f64,
    /// Trailer wheelbase, fifth wheel to the middle trailer axle.
    pub l2: f64,
    /// Trailer axle spacing.
    pub axle_spacing: f64,
    /// Axle loads: front, drive, trailer axles 1 to 3.
    pub fz: [f64; 5],
    /// Normalized cornering stiffness, 1/rad.
    pub f: f64,
    /// Steering-wheel to road-wheel ratio.
    pub i_s: f64,
    /// Steering asymmetry factor.
    pub q: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Fifth wheel to trailer axles 1, 2 and 3.
    pub l2k: [f64; 3],
}

/// One violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("failed to read parameter file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown parameter key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate parameter key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: cannot parse value for {key:?}: {text:?}")]
    BadNumber {
        line: usize,
        key: String,
        text: String,
    },
    #[error("missing parameter key {0:?}")]
    MissingKey(&'static str),
    #[error("invalid parameters: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

const TRACTOR_MASS: f64 = 8060.0;
const TRACTOR_INERTIA: f64 = 11210.0;

impl VehicleParams {
    /// Built-in parameter set for a load condition, with the steering ratio
    /// of the given model.
    pub fn builtin(condition: LoadCondition, model: ModelKind) -> Self {
        let (m2, j2, a2, b2, fz_trailer_and_drive) = match condition {
            LoadCondition::Unloaded => (
                7100.0,
                34613.0,
                5.96,
                5.19,
                [34727.0, 17658.0, 18639.0, 18835.0],
            ),
            LoadCondition::Loaded => (
                17360.0,
                84630.0,
                1.54,
                2.31,
                [67100.0, 38651.0, 39632.0, 39436.0],
            ),
        };
        let i_s = match model {
            ModelKind::Kin => 20.5,
            ModelKind::Stm => 21.5,
        };
        let [fz2, fz3, fz4, fz5] = fz_trailer_and_drive;
        let mut p = VehicleParams {
            m1: TRACTOR_MASS,
            m2,
            j1: TRACTOR_INERTIA,
            j2,
            a1: 1.09,
            b1: 2.71,
            l1: 3.8,
            l1c: 0.67,
            a2,
            b2,
            l2: 7.5,
            axle_spacing: 1.3,
            fz: [0.0, fz2, fz3, fz4, fz5],
            f: 6.0,
            i_s,
            q: 0.1,
            g: GRAVITY,
            l2k: [0.0; 3],
        };
        p.fill_derived();
        p
    }

    /// Front axle load from the weight balance.
    pub fn front_axle_load(&self) -> f64 {
        (self.m1 + self.m2) * self.g - self.fz[1..].iter().sum::<f64>()
    }

    /// Fifth wheel to trailer axles for a symmetric tridem around the
    /// middle axle.
    pub fn trailer_axle_distances(&self) -> [f64; 3] {
        [
            self.l2 - self.axle_spacing,
            self.l2,
            self.l2 + self.axle_spacing,
        ]
    }

    fn fill_derived(&mut self) {
        self.fz[0] = self.front_axle_load();
        self.l2k = self.trailer_axle_distances();
    }

    /// Tractor COG to fifth wheel, the coupling lever arm of the
    /// single-track equations.
    pub fn coupling_offset(&self) -> f64 {
        self.b1 - self.l1c
    }

    pub fn total_mass(&self) -> f64 {
        self.m1 + self.m2
    }

    /// Checks every parameter invariant and returns one entry per violation.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let positive = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("J1", self.j1),
            ("J2", self.j2),
            ("a1", self.a1),
            ("b1", self.b1),
            ("L1", self.l1),
            ("L1c", self.l1c),
            ("a2", self.a2),
            ("b2", self.b2),
            ("L2", self.l2),
            ("j", self.axle_spacing),
            ("Fz1", self.fz[0]),
            ("Fz2", self.fz[1]),
            ("Fz3", self.fz[2]),
            ("Fz4", self.fz[3]),
            ("Fz5", self.fz[4]),
            ("i_s", self.i_s),
            ("g", self.g),
            ("L21", self.l2k[0]),
            ("L22", self.l2k[1]),
            ("L23", self.l2k[2]),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                out.push(Violation {
                    rule: "strictly positive",
                    detail: format!("{name} = {value}"),
                });
            }
        }
        if !(self.f.is_finite() && self.f > 0.0) {
            out.push(Violation {
                rule: "f > 0",
                detail: format!("f = {}", self.f),
            });
        }
        if !(self.q.is_finite() && (0.0..1.0).contains(&self.q)) {
            out.push(Violation {
                rule: "q ∈ [0,1)",
                detail: format!("q = {}", self.q),
            });
        }
        if !((self.a1 + self.b1 - self.l1).abs() <= 1e-9) {
            out.push(Violation {
                rule: "a1 + b1 = L1",
                detail: format!("a1 + b1 = {} but L1 = {}", self.a1 + self.b1, self.l1),
            });
        }
        if !(self.l2 - self.l1c > 0.0) {
            out.push(Violation {
                rule: "L2 − L1c > 0",
                detail: format!("L2 = {}, L1c = {}", self.l2, self.l1c),
            });
        }
        let expected = self.trailer_axle_distances();
        for (k, (have, want)) in self.l2k.iter().zip(expected).enumerate() {
            if !((have - want).abs() <= 1e-9) {
                out.push(Violation {
                    rule: "L21 = L2 − j, L22 = L2, L23 = L2 + j",
                    detail: format!("L2{} = {have}, expected {want}", k + 1),
                });
            }
        }
        let weight = self.total_mass() * self.g;
        let ratio = self.fz.iter().sum::<f64>() / weight;
        if !((0.995..=1.005).contains(&ratio)) {
            out.push(Violation {
                rule: "ΣFz = (m1 + m2)·g within 0.5%",
                detail: format!("ΣFz / weight = {ratio}"),
            });
        }
        out
    }

    /// Renders the parameter file form. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_param_file(&self) -> String {
        let mut s = String::new();
        for (key, value) in self.entries() {
            s.push_str(&format!("{key} = {value}\n"));
        }
        s
    }

    fn entries(&self) -> [(&'static str, f64); 24] {
        [
            ("m1", self.m1),
            ("m2", self.m2),
            ("J1", self.j1),
            ("J2", self.j2),
            ("a1", self.a1),
            ("b1", self.b1),
            ("L1", self.l1),
            ("L1c", self.l1c),
            ("a2", self.a2),
            ("b2", self.b2),
            ("L2", self.l2),
            ("j", self.axle_spacing),
            ("Fz1", self.fz[0]),
            ("Fz2", self.fz[1]),
            ("Fz3", self.fz[2]),
            ("Fz4", self.fz[3]),
            ("Fz5", self.fz[4]),
            ("f", self.f),
            ("i_s", self.i_s),
            ("q", self.q),
            ("g", self.g),
            ("L21", self.l2k[0]),
            ("L22", self.l2k[1]),
            ("L23", self.l2k[2]),
        ]
    }

    /// Parses the `key = value` parameter format. Derived keys (`Fz1`,
    /// `L21`, `L22`, `L23`) and `g` may be omitted; they are then computed.
    /// The result must pass [`VehicleParams::validate`].
    pub fn parse_param_file(text: &str) -> Result<Self, ParamsError> {
        const REQUIRED: [&str; 19] = [
            "m1", "m2", "J1", "J2", "a1", "b1", "L1", "L1c", "a2", "b2", "L2", "j", "Fz2", "Fz3",
            "Fz4", "Fz5", "f", "i_s", "q",
        ];
        const OPTIONAL: [&str; 5] = ["Fz1", "g", "L21", "L22", "L23"];

        let mut values: Vec<(&'static str, f64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ParamsError::Syntax {
                line,
                text: raw.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let known = REQUIRED
                .iter()
                .chain(OPTIONAL.iter())
                .find(|k| **k == key)
                .ok_or_else(|| ParamsError::UnknownKey {
                    line,
                    key: key.to_string(),
                })?;
            if values.iter().any(|(k, _)| k == known) {
                return Err(ParamsError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            let number: f64 = value.parse().map_err(|_| ParamsError::BadNumber {
                line,
                key: key.to_string(),
                text: value.to_string(),
            })?;
            values.push((known, number));
        }

        let get = |key: &'static str| values.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let req = |key: &'static str| get(key).ok_or(ParamsError::MissingKey(key));

        let mut p = VehicleParams {
            m1: req("m1")?,
            m2: req("m2")?,
            j1: req("J1")?,
            j2: req("J2")?,
            a1: req("a1")?,
            b1: req("b1")?,
            l1: req("L1")?,
            l1c: req("L1c")?,
            a2: req("a2")?,
            b2: req("b2")?,
            l2: req("L2")?,
            axle_spacing: req("j")?,
            fz: [0.0, req("Fz2")?, req("Fz3")?, req("Fz4")?, req("Fz5")?],
            f: req("f")?,
            i_s: req("i_s")?,
            q: req("q")?,
            g: get("g").unwrap_or(GRAVITY),
            l2k: [0.0; 3],
        };
        p.fz[0] = get("Fz1").unwrap_or_else(|| p.front_axle_load());
        let derived = p.trailer_axle_distances();
        p.l2k = [
            get("L21").unwrap_or(derived[0]),
            get("L22").unwrap_or(derived[1]),
            get("L23").unwrap_or(derived[2]),
        ];

        let violations = p.validate();
        if violations.is_empty() {
            Ok(p)
        } else {
            Err(ParamsError::Invalid(violations))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParamsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ParamsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_param_file(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Stm);
        assert_eq!(p.m2, 7100.0);
        assert_eq!(p.a2, 5.96);
        assert_eq!(p.i_s, 21.5);

        let p = VehicleParams::builtin(LoadCondition::Loaded, ModelKind::Kin);
        assert_eq!(p.fz[1], 67100.0);
        assert_eq!(p.i_s, 20.5);
    }

    #[test]
    fn front_axle_load_closes_weight_balance() {
        let p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Kin);
        // 15160 kg · 9.81 − (34727 + 17658 + 18639 + 18835)
        assert!((p.fz[0] - 58860.6).abs() < 1e-6);
        let p = VehicleParams::builtin(LoadCondition::Loaded, ModelKind::Kin);
        assert!((p.fz[0] - (25420.0 * 9.81 - 184819.0)).abs() < 1e-6);
    }

    #[test]
    fn tractor_values_shared_across_conditions() {
        let u = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Stm);
        let l = VehicleParams::builtin(LoadCondition::Loaded, ModelKind::Stm);
        assert_eq!(
            (u.m1, u.j1, u.a1, u.b1, u.l1, u.l1c, u.l2, u.axle_spacing),
            (l.m1, l.j1, l.a1, l.b1, l.l1, l.l1c, l.l2, l.axle_spacing)
        );
    }

    #[test]
    fn builtin_sets_self_validate() {
        for c in LoadCondition::ALL {
            for m in ModelKind::ALL {
                let p = VehicleParams::builtin(c, m);
                assert!(p.validate().is_empty(), "{c} {m}: {:?}", p.validate());
                let ratio = p.fz.iter().sum::<f64>() / (p.total_mass() * p.g);
                assert!((0.995..=1.005).contains(&ratio));
                assert_eq!(p.l2k, [6.2, 7.5, 8.8]);
            }
        }
    }

    #[test]
    fn coupling_boundary_is_flagged() {
        let mut p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Stm);
        p.l2 = p.l1c;
        p.l2k = p.trailer_axle_distances();
        let v = p.validate();
        assert!(v.iter().any(|v| v.rule == "L2 − L1c > 0"), "{v:?}");
    }

    #[test]
    fn broken_wheelbase_identity_is_flagged() {
        let mut p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Stm);
        p.a1 = 1.2;
        let v = p.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "a1 + b1 = L1");
    }

    #[test]
    fn load_rejects_missing_key_and_bad_q() {
        let p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Stm);
        let text: String = p
            .to_param_file()
            .lines()
            .filter(|l| !l.starts_with("m2 "))
            .map(|l| format!("{l}\n"))
            .collect();
        match VehicleParams::parse_param_file(&text) {
            Err(ParamsError::MissingKey(k)) => assert_eq!(k, "m2"),
            other => panic!("unexpected {other:?}"),
        }

        let text = p.to_param_file().replace("q = 0.1", "q = 1.5");
        match VehicleParams::parse_param_file(&text) {
            Err(ParamsError::Invalid(v)) => assert!(v.iter().any(|v| v.rule == "q ∈ [0,1)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_reports_line_of_bad_number() {
        let text = "# header\nm1 = eight\n";
        match VehicleParams::parse_param_file(text) {
            Err(ParamsError::BadNumber { line, key, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(key, "m1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derived_keys_are_optional() {
        let p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Kin);
        let text: String = p
            .to_param_file()
            .lines()
            .filter(|l| {
                let key = l.split('=').next().unwrap().trim();
                !matches!(key, "Fz1" | "L21" | "L22" | "L23" | "g")
            })
            .map(|l| format!("{l} # comment\n"))
            .collect();
        assert!(!text.contains("Fz1"));
        assert!(!text.contains("L21"));
        assert_eq!(VehicleParams::parse_param_file(&text).unwrap(), p);
    }
}
