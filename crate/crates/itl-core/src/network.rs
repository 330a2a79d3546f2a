//! Core domain types: buses, lines, zones, interfaces, and topology queries.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{ItlError, Result};

/// Injection capability of a bus.
///
/// `Unconstrained` is used when the source data gives no type, or marks a bus
/// as both generator and load; such buses may inject or withdraw freely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusType {
    Generator,
    Load,
    Transmission,
    Unconstrained,
}

/// Geographic location in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub zone: String,
    pub bus_type: BusType,
    pub location: Option<Location>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineKind {
    Line,
    Transformer,
}

/// A transmission line or transformer ("line" throughout).
///
/// Reactance and rating are optional on input; data preparation fills them in.
/// Flow on a line is positive from `from_bus` to `to_bus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub reactance: Option<f64>,
    pub rating: Option<f64>,
    pub voltage_kv: f64,
    pub kind: LineKind,
    pub is_dc: bool,
}

/// A nodal network: buses and lines keyed by id.
///
/// Iteration over buses and lines is always in id order, which keeps every
/// downstream computation deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub buses: BTreeMap<String, Bus>,
    pub lines: BTreeMap<String, Line>,
    pub base_mva: f64,
}

/// One zonal interface: an ordered zone pair plus its oriented crossing lines.
///
/// `zone_a < zone_b` byte-wise; orientation is +1 when the line's `from_bus`
/// lies in `zone_a` and -1 when it lies in `zone_b`. Lines themselves are
/// never re-polarized; the coefficient carries the convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub zone_a: String,
    pub zone_b: String,
    pub crossing_lines: Vec<(String, i8)>,
}

impl Interface {
    pub fn id(&self) -> String {
        format!("{}||{}", self.zone_a, self.zone_b)
    }

    /// Unsigned sum of crossing-line ratings, the "sum of ratings" reported
    /// alongside each ITL. Lines with missing ratings contribute zero.
    pub fn rating_sum(&self, network: &Network) -> f64 {
        self.crossing_lines
            .iter()
            .filter_map(|(id, _)| network.lines.get(id))
            .filter_map(|l| l.rating)
            .sum()
    }
}

/// A single invariant violation found by [`validate_network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    DanglingEndpoint { line: String, bus: String },
    SelfLoop { line: String },
    NonpositiveReactance { line: String },
    MissingReactance { line: String },
    NonpositiveRating { line: String },
    MissingRating { line: String },
    DcLineRetained { line: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DanglingEndpoint { line, bus } => {
                write!(f, "line {line} references unknown bus {bus}")
            }
            Violation::SelfLoop { line } => write!(f, "line {line} connects a bus to itself"),
            Violation::NonpositiveReactance { line } => {
                write!(f, "line {line} has nonpositive reactance")
            }
            Violation::MissingReactance { line } => write!(f, "line {line} has no reactance"),
            Violation::NonpositiveRating { line } => {
                write!(f, "line {line} has nonpositive rating")
            }
            Violation::MissingRating { line } => write!(f, "line {line} has no rating"),
            Violation::DcLineRetained { line } => write!(f, "DC line {line} was not dropped"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_error(&self) -> ItlError {
        let text = self
            .violations
            .iter()
            .map(|v| format!("  - {v}"))
            .collect::<Vec<_>>()
            .join("\n");
        ItlError::Validation(text)
    }
}

impl Network {
    pub fn new(base_mva: f64) -> Self {
        Network {
            buses: BTreeMap::new(),
            lines: BTreeMap::new(),
            base_mva,
        }
    }

    pub fn add_bus(&mut self, bus: Bus) {
        self.buses.insert(bus.id.clone(), bus);
    }

    pub fn add_line(&mut self, line: Line) {
        self.lines.insert(line.id.clone(), line);
    }

    /// Lines incident to each bus, in line-id order.
    pub fn adjacency(&self) -> BTreeMap<&str, Vec<&Line>> {
        let mut adj: BTreeMap<&str, Vec<&Line>> =
            self.buses.keys().map(|b| (b.as_str(), Vec::new())).collect();
        for line in self.lines.values() {
            if let Some(v) = adj.get_mut(line.from_bus.as_str()) {
                v.push(line);
            }
            if let Some(v) = adj.get_mut(line.to_bus.as_str()) {
                v.push(line);
            }
        }
        adj
    }

    /// The sub-network induced by a set of bus ids: those buses plus every
    /// line with both endpoints in the set.
    pub fn induced(&self, bus_ids: &BTreeSet<String>) -> Network {
        let mut net = Network::new(self.base_mva);
        for (id, bus) in &self.buses {
            if bus_ids.contains(id) {
                net.add_bus(bus.clone());
            }
        }
        for line in self.lines.values() {
            if bus_ids.contains(&line.from_bus) && bus_ids.contains(&line.to_bus) {
                net.add_line(line.clone());
            }
        }
        net
    }

    /// Copy of the network with one line removed (buses untouched).
    pub fn without_line(&self, line_id: &str) -> Network {
        let mut net = self.clone();
        net.lines.remove(line_id);
        net
    }

    pub fn zones(&self) -> BTreeSet<String> {
        self.buses.values().map(|b| b.zone.clone()).collect()
    }
}

/// Checks every structural invariant and reports all violations.
///
/// Validation never fails; an empty report means the network is ready for
/// PTDF computation (all endpoints resolve, reactances and ratings present
/// and positive, no DC lines).
pub fn validate_network(network: &Network) -> ValidationReport {
    let mut violations = Vec::new();
    for line in network.lines.values() {
        for bus in [&line.from_bus, &line.to_bus] {
            if !network.buses.contains_key(bus) {
                violations.push(Violation::DanglingEndpoint {
                    line: line.id.clone(),
                    bus: bus.clone(),
                });
            }
        }
        if line.from_bus == line.to_bus {
            violations.push(Violation::SelfLoop { line: line.id.clone() });
        }
        match line.reactance {
            None => violations.push(Violation::MissingReactance { line: line.id.clone() }),
            Some(x) if x <= 0.0 => {
                violations.push(Violation::NonpositiveReactance { line: line.id.clone() })
            }
            _ => {}
        }
        match line.rating {
            None => violations.push(Violation::MissingRating { line: line.id.clone() }),
            Some(r) if r <= 0.0 => {
                violations.push(Violation::NonpositiveRating { line: line.id.clone() })
            }
            _ => {}
        }
        if line.is_dc {
            violations.push(Violation::DcLineRetained { line: line.id.clone() });
        }
    }
    ValidationReport { violations }
}

/// Builds one [`Interface`] per unordered zone pair connected by at least one
/// retained AC line.
///
/// Crossing lines are listed in line-id order and the result is independent
/// of input ordering.
pub fn build_interfaces(network: &Network) -> Vec<Interface> {
    let mut map: BTreeMap<(String, String), Vec<(String, i8)>> = BTreeMap::new();
    for line in network.lines.values() {
        if line.is_dc {
            continue;
        }
        let (Some(from), Some(to)) = (
            network.buses.get(&line.from_bus),
            network.buses.get(&line.to_bus),
        ) else {
            continue;
        };
        if from.zone == to.zone {
            continue;
        }
        let (zone_a, zone_b, orientation) = if from.zone < to.zone {
            (from.zone.clone(), to.zone.clone(), 1i8)
        } else {
            (to.zone.clone(), from.zone.clone(), -1i8)
        };
        map.entry((zone_a, zone_b))
            .or_default()
            .push((line.id.clone(), orientation));
    }
    map.into_iter()
        .map(|((zone_a, zone_b), mut crossing_lines)| {
            crossing_lines.sort();
            Interface {
                zone_a,
                zone_b,
                crossing_lines,
            }
        })
        .collect()
}

/// Partitions all buses into maximal connected sets via retained AC lines.
pub fn connected_components(network: &Network) -> Vec<BTreeSet<String>> {
    components_with(network, |l| !l.is_dc)
}

/// Connected components using only lines accepted by `keep`.
pub fn components_with(network: &Network, keep: impl Fn(&Line) -> bool) -> Vec<BTreeSet<String>> {
    let mut adj: BTreeMap<&str, Vec<&str>> =
        network.buses.keys().map(|b| (b.as_str(), Vec::new())).collect();
    for line in network.lines.values() {
        if !keep(line) {
            continue;
        }
        if adj.contains_key(line.from_bus.as_str()) && adj.contains_key(line.to_bus.as_str()) {
            adj.get_mut(line.from_bus.as_str())
                .unwrap()
                .push(line.to_bus.as_str());
            adj.get_mut(line.to_bus.as_str())
                .unwrap()
                .push(line.from_bus.as_str());
        }
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut components = Vec::new();
    for start in network.buses.keys() {
        if seen.contains(start.as_str()) {
            continue;
        }
        let mut component = BTreeSet::new();
        let mut queue = VecDeque::from([start.as_str()]);
        seen.insert(start.as_str());
        while let Some(bus) = queue.pop_front() {
            component.insert(bus.to_string());
            for &next in &adj[bus] {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        components.push(component);
    }
    components
}

/// Finds the component containing `bus`, or an error naming the bus.
pub fn component_of<'a>(
    components: &'a [BTreeSet<String>],
    bus: &str,
) -> Result<&'a BTreeSet<String>> {
    components
        .iter()
        .find(|c| c.contains(bus))
        .ok_or_else(|| ItlError::UnknownElement(bus.to_string()))
}
