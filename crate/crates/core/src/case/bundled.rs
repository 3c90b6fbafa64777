//! Cases shipped with the crate.

use super::NetworkCase;

pub const TWO_AREA_MTDC_JSON: &str = include_str!("../../cases/two_area_mtdc.json");
pub const SMIB_JSON: &str = include_str!("../../cases/smib.json");
/// Loss of one tie circuit between buses 8 and 9 at t = 1 s.
pub const TWO_AREA_TRIP_JSON: &str = include_str!("../../cases/two_area_trip.json");
/// Bolted fault at bus 9 cleared by opening one 8-9 circuit.
pub const TWO_AREA_FAULT_JSON: &str = include_str!("../../cases/two_area_fault.json");

/// Two-area, four-machine grid (11 AC buses) with a meshed three-terminal
/// VSC-HVDC system: VSC1 at bus 6 and VSC2 at bus 7 in area 1, VSC3 at
/// bus 9 in area 2 (DC slack).
pub fn two_area_mtdc() -> NetworkCase {
    NetworkCase::from_json(TWO_AREA_MTDC_JSON).expect("bundled case parses")
}

/// Single machine against an infinite bus, with a radial unloaded stub
/// hanging off the infinite bus.
pub fn smib() -> NetworkCase {
    NetworkCase::from_json(SMIB_JSON).expect("bundled case parses")
}

/// Looks up a bundled case by name.
pub fn by_name(name: &str) -> Option<NetworkCase> {
    match name {
        "two_area_mtdc" | "two_area_mtdc.json" => Some(two_area_mtdc()),
        "smib" | "smib.json" => Some(smib()),
        _ => None,
    }
}

pub fn all() -> Vec<NetworkCase> {
    vec![smib(), two_area_mtdc()]
}

/// Bundled event or fault file by name.
pub fn scenario(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".json") {
        "two_area_trip" => Some(TWO_AREA_TRIP_JSON),
        "two_area_fault" => Some(TWO_AREA_FAULT_JSON),
        _ => None,
    }
}
