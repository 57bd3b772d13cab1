//! Cases bundled with the crate.

use super::NetworkCase;

pub const SINGLE_BUS_JSON: &str = include_str!("../../cases/single_bus.json");
pub const TWO_BUS_JSON: &str = include_str!("../../cases/two_bus.json");
pub const THREE_BUS_JSON: &str = include_str!("../../cases/three_bus.json");
pub const TEN_BUS_JSON: &str = include_str!("../../cases/ten_bus.json");

/// One bus, one generator (c = 5, 0..100 MW), 30 MW nominal load.
pub fn single_bus() -> NetworkCase {
    NetworkCase::from_json(SINGLE_BUS_JSON).expect("bundled case is valid")
}

/// Cheap generator 1 (c = 10, ≤ 40 MW) at the load bus, expensive generator 2
/// (c = 30) across one uncongested line. Nominal load 50 MW.
pub fn two_bus() -> NetworkCase {
    NetworkCase::from_json(TWO_BUS_JSON).expect("bundled case is valid")
}

/// Triangle with a 40 MW limit on the direct line to the load.
pub fn three_bus() -> NetworkCase {
    NetworkCase::from_json(THREE_BUS_JSON).expect("bundled case is valid")
}

/// Meshed 10-bus, 5-generator, 13-branch synthetic network.
pub fn ten_bus() -> NetworkCase {
    NetworkCase::from_json(TEN_BUS_JSON).expect("bundled case is valid")
}

/// Look up a bundled case by name (`single_bus`, `two_bus`, `three_bus`, `ten_bus`).
pub fn by_name(name: &str) -> Option<NetworkCase> {
    match name {
        "single_bus" => Some(single_bus()),
        "two_bus" => Some(two_bus()),
        "three_bus" => Some(three_bus()),
        "ten_bus" => Some(ten_bus()),
        _ => None,
    }
}
