//! End-to-end: simulate, write a log, parse it back and score models against it.

use semitrailer_core::harness::{generate_maneuver, ArticulationReference, simulate, ManeuverSpec, RunConfig, TurnDirection};
use semitrailer_core::ingest::{parse_log_str, write_log, MeasurementLog};
use semitrailer_core::metrics::Direction;
use semitrailer_core::params::{LoadCondition, ModelKind, VehicleParams};
use semitrailer_core::report::{aggregate, ReportTable, TableFormat};
use semitrailer_core::validation::{validate, ReferenceData, MEASUREMENT_RATE};

fn recorded(model: ModelKind, spec: &ManeuverSpec) -> (ReferenceData, VehicleParams) {
    let p = VehicleParams::builtin(LoadCondition::Unloaded, model);
    let trace = generate_maneuver(spec).unwrap();
    let traj = simulate(model, &trace, &p, &RunConfig::default(), None).unwrap();
    let text = write_log(&MeasurementLog::from_trajectory(&traj, MEASUREMENT_RATE));
    let log = parse_log_str(&text).unwrap();
    (ReferenceData::from_log(&log, &p).unwrap(), p)
}

#[test]
fn forward_log_round_trip_scores_models() {
    let spec = ManeuverSpec::constant_steer(360.0, 5.0, TurnDirection::Right);
    let (reference, p_stm) = recorded(ModelKind::Stm, &spec);
    let cfg = RunConfig::default();
    let own = validate(ModelKind::Stm, &reference, &p_stm, &cfg, "c360").unwrap();
    assert!(own.report.eps_n < 1e-6, "self error {}", own.report.eps_n);

    let p_kin = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Kin);
    let other = validate(ModelKind::Kin, &reference, &p_kin, &cfg, "c360").unwrap();
    assert!(other.report.eps_n > own.report.eps_n);
    assert_eq!(other.report.direction, Direction::Forward);

    let rows = aggregate(&[other.report, own.report]).unwrap();
    let table = ReportTable::from_reports(&rows).unwrap().render(TableFormat::Text);
    assert!(table.starts_with("Forward Driving Results\n"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn reverse_log_round_trip_tracks_reference() {
    let spec = ManeuverSpec::ramp_steer(30.0, 3.0, TurnDirection::Left);
    let p = VehicleParams::builtin(LoadCondition::Unloaded, ModelKind::Kin);
    let trace = generate_maneuver(&spec).unwrap();
    let traj = simulate(ModelKind::Kin, &trace, &p, &RunConfig::default(), Some(&ArticulationReference::SteadyState)).unwrap();
    let log = parse_log_str(&write_log(&MeasurementLog::from_trajectory(&traj, MEASUREMENT_RATE))).unwrap();
    let reference = ReferenceData::from_log(&log, &p).unwrap();
    let v = validate(ModelKind::Kin, &reference, &p, &RunConfig::default(), "ramp30").unwrap();
    assert_eq!(v.report.direction, Direction::Reverse);
    assert!(v.report.eps_n < 1e-6, "{}", v.report.eps_n);
    assert!(v.report.j_steer.unwrap() < 1e-6);
    assert!(!v.trajectory.is_aborted());
}
