//! Small built-in test systems, including the 5-bus 3-zone network used
//! throughout the unit and golden tests.

use crate::network::{Bus, BusType, Line, LineKind, Location, Network};

pub fn bus(id: &str, zone: &str, bus_type: BusType) -> Bus {
    Bus {
        id: id.to_string(),
        zone: zone.to_string(),
        bus_type,
        location: None,
    }
}

pub fn located_bus(id: &str, zone: &str, bus_type: BusType, lat: f64, lon: f64) -> Bus {
    Bus {
        id: id.to_string(),
        zone: zone.to_string(),
        bus_type,
        location: Some(Location { lat, lon }),
    }
}

pub fn line(id: &str, from: &str, to: &str, reactance: f64, rating: Option<f64>) -> Line {
    Line {
        id: id.to_string(),
        from_bus: from.to_string(),
        to_bus: to.to_string(),
        reactance: Some(reactance),
        rating,
        voltage_kv: 230.0,
        kind: LineKind::Line,
        is_dc: false,
    }
}

/// The 5-bus 3-zone test system.
///
/// Buses A, B, C in zone 1; D in zone 2; E in zone 3. All buses are
/// unconstrained (free to act as generation or load).
pub fn five_bus() -> Network {
    let mut net = Network::new(100.0);
    for (id, zone) in [("A", "1"), ("B", "1"), ("C", "1"), ("D", "2"), ("E", "3")] {
        net.add_bus(bus(id, zone, BusType::Unconstrained));
    }
    for (id, from, to, x, r) in [
        ("A|B", "A", "B", 0.0281, 400.0),
        ("B|C", "B", "C", 0.0108, 400.0),
        ("C|D", "C", "D", 0.0297, 400.0),
        ("D|E", "D", "E", 0.0297, 240.0),
        ("A|E", "A", "E", 0.0064, 400.0),
        ("A|D", "A", "D", 0.0304, 400.0),
    ] {
        net.add_line(line(id, from, to, x, Some(r)));
    }
    net
}
