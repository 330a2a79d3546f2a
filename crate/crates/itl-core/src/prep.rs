//! Data cleaning and imputation: location inference, geographic filtering,
//! radial reduction, DC-element removal, rating and reactance imputation,
//! and interface-neighborhood filtering.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{ItlError, Result};
use crate::geo::{haversine_km, Polygon};
use crate::network::{
    components_with, connected_components, BusType, Interface, LineKind, Location, Network,
};

/// Per-voltage-class loadability parameters plus stability assumptions.
///
/// The defaults below are representative engineering values for typical
/// subtransmission and transmission voltage classes; they are not taken from
/// any specific dataset and should be overridden when better values are
/// available for the system under study.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadabilityParams {
    /// voltage_kv -> (thermal limit MW, series reactance ohm/km, SIL MW)
    pub classes: BTreeMap<u32, VoltageClass>,
    /// Maximum power angle between sending and receiving end, degrees.
    pub max_angle_deg: f64,
    /// Maximum sending-to-receiving voltage drop, fraction.
    pub max_voltage_drop_frac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageClass {
    pub thermal_limit_mw: f64,
    pub reactance_ohm_per_km: f64,
    pub sil_mw: f64,
}

impl Default for LoadabilityParams {
    fn default() -> Self {
        let mut classes = BTreeMap::new();
        for (kv, thermal, x, sil) in [
            (69u32, 65.0, 0.50, 12.0),
            (115, 120.0, 0.48, 33.0),
            (138, 160.0, 0.47, 50.0),
            (161, 220.0, 0.46, 70.0),
            (230, 440.0, 0.43, 140.0),
            (345, 1000.0, 0.37, 400.0),
            (500, 2200.0, 0.33, 900.0),
            (765, 4400.0, 0.28, 2250.0),
        ] {
            classes.insert(
                kv,
                VoltageClass {
                    thermal_limit_mw: thermal,
                    reactance_ohm_per_km: x,
                    sil_mw: sil,
                },
            );
        }
        LoadabilityParams {
            classes,
            max_angle_deg: 45.0,
            max_voltage_drop_frac: 0.05,
        }
    }
}

/// Length floor so the angular limit stays finite for zero-length elements.
const MIN_LENGTH_KM: f64 = 1.0;

/// Configuration for the preparation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepConfig {
    pub boundary_polygon: Option<Polygon>,
    pub boundary_buffer_km: f64,
    pub neighborhood_radius_km: f64,
    /// Bus count above which per-interface neighborhood filtering activates.
    pub large_component_threshold: usize,
    pub loadability: LoadabilityParams,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            boundary_polygon: None,
            boundary_buffer_km: 100.0,
            neighborhood_radius_km: 800.0,
            large_component_threshold: 10_000,
            loadability: LoadabilityParams::default(),
        }
    }
}

/// Geodesic length of a line in km. Transformers have zero length; lines
/// require both endpoint locations.
pub fn line_length_km(network: &Network, line_id: &str) -> Option<f64> {
    let line = network.lines.get(line_id)?;
    if line.kind == LineKind::Transformer {
        return Some(0.0);
    }
    let from = network.buses.get(&line.from_bus)?.location?;
    let to = network.buses.get(&line.to_bus)?.location?;
    Some(haversine_km(from, to))
}

/// Assigns every unlocated bus the location of the nearest located bus by
/// hop count over the network; on ties, the arithmetic-mean centroid of all
/// equally-near located buses.
pub fn infer_missing_locations(network: &Network) -> Result<Network> {
    let mut net = network.clone();
    let mut adj: BTreeMap<&str, Vec<&str>> =
        network.buses.keys().map(|b| (b.as_str(), Vec::new())).collect();
    for line in network.lines.values() {
        adj.get_mut(line.from_bus.as_str()).unwrap().push(line.to_bus.as_str());
        adj.get_mut(line.to_bus.as_str()).unwrap().push(line.from_bus.as_str());
    }
    let located: BTreeMap<&str, Location> = network
        .buses
        .values()
        .filter_map(|b| b.location.map(|loc| (b.id.as_str(), loc)))
        .collect();

    let mut assigned: Vec<(String, Location)> = Vec::new();
    for bus in network.buses.values() {
        if bus.location.is_some() {
            continue;
        }
        // BFS level by level; stop at the first level that contains an
        // originally located bus.
        let mut seen: BTreeSet<&str> = BTreeSet::from([bus.id.as_str()]);
        let mut frontier = vec![bus.id.as_str()];
        let mut found: Vec<Location> = Vec::new();
        while !frontier.is_empty() && found.is_empty() {
            let mut next = Vec::new();
            for &b in &frontier {
                for &n in &adj[b] {
                    if seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            for &n in &next {
                if let Some(loc) = located.get(n) {
                    found.push(*loc);
                }
            }
            frontier = next;
        }
        if found.is_empty() {
            let component: Vec<&str> = seen.into_iter().collect();
            return Err(ItlError::UnresolvableLocation {
                component: component.join(", "),
            });
        }
        let n = found.len() as f64;
        let centroid = Location {
            lat: found.iter().map(|l| l.lat).sum::<f64>() / n,
            lon: found.iter().map(|l| l.lon).sum::<f64>() / n,
        };
        assigned.push((bus.id.clone(), centroid));
    }
    for (id, loc) in assigned {
        net.buses.get_mut(&id).unwrap().location = Some(loc);
    }
    Ok(net)
}

/// Drops buses farther than the buffer distance outside the boundary
/// polygon, along with their incident lines. No-op without a polygon.
pub fn filter_by_geography(network: &Network, config: &PrepConfig) -> Network {
    let Some(polygon) = &config.boundary_polygon else {
        return network.clone();
    };
    let keep: BTreeSet<String> = network
        .buses
        .values()
        .filter(|b| match b.location {
            Some(loc) => polygon.distance_km(loc) <= config.boundary_buffer_km,
            None => true,
        })
        .map(|b| b.id.clone())
        .collect();
    network.induced(&keep)
}

fn capabilities(t: BusType) -> (bool, bool) {
    match t {
        BusType::Generator => (true, false),
        BusType::Load => (false, true),
        BusType::Transmission => (false, false),
        BusType::Unconstrained => (true, true),
    }
}

fn merge_type(neighbor: BusType, removed: BusType) -> BusType {
    let (gn, ln) = capabilities(neighbor);
    let (gr, lr) = capabilities(removed);
    match (gn || gr, ln || lr) {
        (true, true) => BusType::Unconstrained,
        (true, false) => BusType::Generator,
        (false, true) => BusType::Load,
        (false, false) => neighbor,
    }
}

/// Iteratively removes degree-1 buses and their single incident line, except
/// where that line crosses a zone boundary. Removed generator or load buses
/// pass their injection capability to the surviving neighbor; a neighbor that
/// ends up qualifying as both becomes `Unconstrained`.
pub fn reduce_radial_buses(network: &Network) -> Network {
    let mut net = network.clone();
    let mut incident: BTreeMap<String, BTreeSet<String>> =
        net.buses.keys().map(|b| (b.clone(), BTreeSet::new())).collect();
    for line in net.lines.values() {
        // Lines with dangling endpoints are left for validation to report.
        if !incident.contains_key(&line.from_bus) || !incident.contains_key(&line.to_bus) {
            continue;
        }
        incident.get_mut(&line.from_bus).unwrap().insert(line.id.clone());
        incident.get_mut(&line.to_bus).unwrap().insert(line.id.clone());
    }

    let mut worklist: VecDeque<String> = incident
        .iter()
        .filter(|(_, l)| l.len() == 1)
        .map(|(b, _)| b.clone())
        .collect();
    while let Some(bus_id) = worklist.pop_front() {
        let Some(lines) = incident.get(&bus_id) else { continue };
        if lines.len() != 1 {
            continue;
        }
        let line_id = lines.iter().next().unwrap().clone();
        let line = net.lines[&line_id].clone();
        let neighbor_id = if line.from_bus == bus_id {
            line.to_bus.clone()
        } else {
            line.from_bus.clone()
        };
        // Never remove an interface-crossing line.
        if net.buses[&bus_id].zone != net.buses[&neighbor_id].zone {
            continue;
        }
        let removed_type = net.buses[&bus_id].bus_type;
        net.buses.remove(&bus_id);
        net.lines.remove(&line_id);
        incident.remove(&bus_id);
        let neighbor_lines = incident.get_mut(&neighbor_id).unwrap();
        neighbor_lines.remove(&line_id);
        let neighbor = net.buses.get_mut(&neighbor_id).unwrap();
        neighbor.bus_type = merge_type(neighbor.bus_type, removed_type);
        if incident[&neighbor_id].len() == 1 {
            worklist.push_back(neighbor_id);
        }
    }
    net
}

/// Removes all DC lines; buses left isolated by the removal are removed too.
pub fn drop_dc_elements(network: &Network) -> Network {
    let mut degree: BTreeMap<&str, (usize, usize)> = network
        .buses
        .keys()
        .map(|b| (b.as_str(), (0usize, 0usize)))
        .collect();
    for line in network.lines.values() {
        for bus in [&line.from_bus, &line.to_bus] {
            if let Some((total, ac)) = degree.get_mut(bus.as_str()) {
                *total += 1;
                if !line.is_dc {
                    *ac += 1;
                }
            }
        }
    }
    let mut net = Network::new(network.base_mva);
    for bus in network.buses.values() {
        let (total, ac) = degree[bus.id.as_str()];
        if total > 0 && ac == 0 {
            continue; // connected only through DC elements
        }
        net.add_bus(bus.clone());
    }
    for line in network.lines.values() {
        if !line.is_dc {
            net.add_line(line.clone());
        }
    }
    net
}

/// Practical MW limit of a line: the thermal limit of its voltage class,
/// capped for long lines by the lossless-line angular stability limit
/// V^2 / X_total * sin(delta_max).
pub fn loadability_limit(
    length_km: f64,
    voltage_kv: f64,
    params: &LoadabilityParams,
) -> Result<f64> {
    let class = nearest_class(voltage_kv, params)?;
    let x_total = class.reactance_ohm_per_km * length_km.max(MIN_LENGTH_KM);
    let angular = voltage_kv * voltage_kv / x_total * params.max_angle_deg.to_radians().sin();
    Ok(class.thermal_limit_mw.min(angular))
}

fn nearest_class(voltage_kv: f64, params: &LoadabilityParams) -> Result<&VoltageClass> {
    params
        .classes
        .iter()
        .min_by(|(kva, _), (kvb, _)| {
            let da = (**kva as f64 - voltage_kv).abs();
            let db = (**kvb as f64 - voltage_kv).abs();
            da.partial_cmp(&db).unwrap().then(kva.cmp(kvb))
        })
        .map(|(_, c)| c)
        .ok_or_else(|| ItlError::Config("loadability parameter table is empty".to_string()))
}

/// Fills missing line ratings with the loadability limit at the line's
/// geodesic length. Existing ratings are used as-is.
pub fn impute_ratings(network: &Network, params: &LoadabilityParams) -> Result<Network> {
    let mut net = network.clone();
    let missing: Vec<String> = network
        .lines
        .values()
        .filter(|l| l.rating.is_none())
        .map(|l| l.id.clone())
        .collect();
    for id in missing {
        let length = line_length_km(network, &id).ok_or_else(|| ItlError::Imputation {
            element: id.clone(),
            field: "rating (endpoint location missing)".to_string(),
        })?;
        let voltage = network.lines[&id].voltage_kv;
        let rating = loadability_limit(length, voltage, params)?;
        net.lines.get_mut(&id).unwrap().rating = Some(rating);
    }
    Ok(net)
}

/// Fills missing reactances. Lines copy the reactance of the same-voltage
/// line with the nearest geodesic length; transformers take the median
/// reactance of same-voltage transformers. When no same-voltage donor
/// exists, the nearest voltage class is used and a warning recorded.
pub fn impute_reactances(network: &Network) -> Result<(Network, Vec<String>)> {
    let mut net = network.clone();
    let mut warnings = Vec::new();

    let donors: Vec<(&str, LineKind, f64, f64, Option<f64>)> = network
        .lines
        .values()
        .filter(|l| l.reactance.is_some())
        .map(|l| {
            (
                l.id.as_str(),
                l.kind,
                l.voltage_kv,
                l.reactance.unwrap(),
                line_length_km(network, &l.id),
            )
        })
        .collect();

    let missing: Vec<String> = network
        .lines
        .values()
        .filter(|l| l.reactance.is_none())
        .map(|l| l.id.clone())
        .collect();
    for id in missing {
        let line = &network.lines[&id];
        let same_kind: Vec<_> = donors.iter().filter(|d| d.1 == line.kind).collect();
        if same_kind.is_empty() {
            return Err(ItlError::Imputation {
                element: id.clone(),
                field: "reactance".to_string(),
            });
        }
        let same_voltage: Vec<_> = same_kind
            .iter()
            .copied()
            .filter(|d| d.2 == line.voltage_kv)
            .collect();
        let pool = if same_voltage.is_empty() {
            let nearest_kv = same_kind
                .iter()
                .map(|d| d.2)
                .min_by(|a, b| {
                    let da = (a - line.voltage_kv).abs();
                    let db = (b - line.voltage_kv).abs();
                    da.partial_cmp(&db).unwrap().then(a.partial_cmp(b).unwrap())
                })
                .unwrap();
            warnings.push(format!(
                "no {:?} donor at {} kV for {}; using {} kV donors",
                line.kind, line.voltage_kv, id, nearest_kv
            ));
            same_kind
                .iter()
                .copied()
                .filter(|d| d.2 == nearest_kv)
                .collect()
        } else {
            same_voltage
        };

        let x = match line.kind {
            LineKind::Line => {
                let length = line_length_km(network, &id).ok_or_else(|| ItlError::Imputation {
                    element: id.clone(),
                    field: "reactance (endpoint location missing)".to_string(),
                })?;
                pool.iter()
                    .min_by(|a, b| {
                        let da = (a.4.unwrap_or(f64::INFINITY) - length).abs();
                        let db = (b.4.unwrap_or(f64::INFINITY) - length).abs();
                        da.partial_cmp(&db).unwrap().then(a.0.cmp(b.0))
                    })
                    .map(|d| d.3)
                    .unwrap()
            }
            LineKind::Transformer => {
                let mut xs: Vec<f64> = pool.iter().map(|d| d.3).collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = xs.len();
                if n % 2 == 1 {
                    xs[n / 2]
                } else {
                    (xs[n / 2 - 1] + xs[n / 2]) / 2.0
                }
            }
        };
        net.lines.get_mut(&id).unwrap().reactance = Some(x);
    }
    Ok((net, warnings))
}

/// Restricts a large component to the neighborhood of one interface: buses
/// within the configured radius of the nearest crossing-line endpoint, then
/// only the resulting component(s) still containing crossing lines.
pub fn neighborhood_filter(
    network: &Network,
    interface: &Interface,
    config: &PrepConfig,
) -> Network {
    if network.buses.len() <= config.large_component_threshold {
        return network.clone();
    }
    let mut anchors: Vec<Location> = Vec::new();
    for (line_id, _) in &interface.crossing_lines {
        if let Some(line) = network.lines.get(line_id) {
            for bus in [&line.from_bus, &line.to_bus] {
                if let Some(loc) = network.buses.get(bus).and_then(|b| b.location) {
                    anchors.push(loc);
                }
            }
        }
    }
    if anchors.is_empty() {
        return network.clone();
    }
    let keep: BTreeSet<String> = network
        .buses
        .values()
        .filter(|b| match b.location {
            Some(loc) => anchors
                .iter()
                .any(|a| haversine_km(loc, *a) <= config.neighborhood_radius_km),
            None => false,
        })
        .map(|b| b.id.clone())
        .collect();
    let filtered = network.induced(&keep);

    // Keep only components that still contain a crossing line.
    let crossing: BTreeSet<&str> = interface
        .crossing_lines
        .iter()
        .map(|(id, _)| id.as_str())
        .collect();
    let mut retained: BTreeSet<String> = BTreeSet::new();
    for component in components_with(&filtered, |_| true) {
        let has_crossing = filtered.lines.values().any(|l| {
            crossing.contains(l.id.as_str()) && component.contains(&l.from_bus)
        });
        if has_crossing {
            retained.extend(component);
        }
    }
    filtered.induced(&retained)
}

/// Runs the full preparation pipeline in order: location inference,
/// geographic filtering, radial reduction, DC-element removal, rating
/// imputation, reactance imputation. Steps that need bus locations are
/// skipped when the dataset carries no location data at all and nothing
/// downstream requires them.
pub fn prepare(network: &Network, config: &PrepConfig) -> Result<(Network, Vec<String>)> {
    let mut warnings = Vec::new();
    let any_located = network.buses.values().any(|b| b.location.is_some());
    let any_missing_loc = network.buses.values().any(|b| b.location.is_none());
    let needs_locations = network
        .lines
        .values()
        .any(|l| l.rating.is_none() || (l.reactance.is_none() && l.kind == LineKind::Line));

    let mut net = network.clone();
    if any_missing_loc && (any_located || needs_locations) {
        net = infer_missing_locations(&net)?;
    } else if !any_located && !needs_locations {
        warnings.push("no bus locations in input; geographic steps skipped".to_string());
    }
    net = filter_by_geography(&net, config);
    net = reduce_radial_buses(&net);
    net = drop_dc_elements(&net);
    if net.lines.values().any(|l| l.rating.is_none()) {
        net = impute_ratings(&net, &config.loadability)?;
    }
    if net.lines.values().any(|l| l.reactance.is_none()) {
        let (imputed, mut w) = impute_reactances(&net)?;
        net = imputed;
        warnings.append(&mut w);
    }
    Ok((net, warnings))
}

/// Interconnection membership is derived from AC connectivity, not labels.
pub fn interconnections(network: &Network) -> Vec<Network> {
    connected_components(network)
        .into_iter()
        .map(|c| network.induced(&c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{validate_network, Bus, Line};
    use crate::testnet::{bus, five_bus, line, located_bus};

    fn locate(net: &mut Network, id: &str, lat: f64, lon: f64) {
        net.buses.get_mut(id).unwrap().location = Some(Location { lat, lon });
    }

    #[test]
    fn tie_between_equally_near_buses_takes_centroid() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("A", "z", BusType::Unconstrained));
        net.add_bus(located_bus("B", "z", BusType::Unconstrained, 40.0, -100.0));
        net.add_bus(located_bus("C", "z", BusType::Unconstrained, 42.0, -100.0));
        net.add_line(line("A|B", "A", "B", 0.01, Some(100.0)));
        net.add_line(line("A|C", "A", "C", 0.01, Some(100.0)));
        let out = infer_missing_locations(&net).unwrap();
        let loc = out.buses["A"].location.unwrap();
        assert_eq!((loc.lat, loc.lon), (41.0, -100.0));
    }

    #[test]
    fn located_buses_are_untouched() {
        let mut net = five_bus();
        locate(&mut net, "A", 40.0, -100.0);
        locate(&mut net, "B", 41.0, -101.0);
        locate(&mut net, "C", 42.0, -102.0);
        locate(&mut net, "D", 43.0, -103.0);
        locate(&mut net, "E", 44.0, -104.0);
        let out = infer_missing_locations(&net).unwrap();
        assert_eq!(out, net);
    }

    #[test]
    fn chain_takes_nearest_located_bus() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("X", "z", BusType::Unconstrained));
        net.add_bus(bus("Y", "z", BusType::Unconstrained));
        net.add_bus(located_bus("Z", "z", BusType::Unconstrained, 45.0, -95.0));
        net.add_line(line("X|Y", "X", "Y", 0.01, Some(100.0)));
        net.add_line(line("Y|Z", "Y", "Z", 0.01, Some(100.0)));
        let out = infer_missing_locations(&net).unwrap();
        for id in ["X", "Y"] {
            let loc = out.buses[id].location.unwrap();
            assert_eq!((loc.lat, loc.lon), (45.0, -95.0));
        }
    }

    #[test]
    fn unlocatable_component_is_an_error() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("A", "z", BusType::Unconstrained));
        net.add_bus(bus("B", "z", BusType::Unconstrained));
        net.add_line(line("A|B", "A", "B", 0.01, Some(100.0)));
        assert!(matches!(
            infer_missing_locations(&net),
            Err(ItlError::UnresolvableLocation { .. })
        ));
    }

    fn band_polygon() -> Polygon {
        Polygon {
            vertices: vec![
                Location { lat: 40.0, lon: -110.0 },
                Location { lat: 40.0, lon: -90.0 },
                Location { lat: 45.0, lon: -90.0 },
                Location { lat: 45.0, lon: -110.0 },
            ],
        }
    }

    #[test]
    fn distant_bus_is_dropped_with_its_lines() {
        let mut net = Network::new(100.0);
        net.add_bus(located_bus("A", "z", BusType::Unconstrained, 42.0, -100.0));
        // ~1.5 degrees (~167 km) south of the polygon's bottom edge.
        net.add_bus(located_bus("B", "z", BusType::Unconstrained, 38.5, -100.0));
        net.add_line(line("A|B", "A", "B", 0.01, Some(100.0)));
        let config = PrepConfig {
            boundary_polygon: Some(band_polygon()),
            ..PrepConfig::default()
        };
        let out = filter_by_geography(&net, &config);
        assert!(out.buses.contains_key("A"));
        assert!(!out.buses.contains_key("B"));
        assert!(out.lines.is_empty());
    }

    #[test]
    fn interior_and_boundary_buses_are_retained() {
        let mut net = Network::new(100.0);
        net.add_bus(located_bus("A", "z", BusType::Unconstrained, 42.0, -100.0));
        net.add_bus(located_bus("B", "z", BusType::Unconstrained, 40.0, -100.0));
        net.add_line(line("A|B", "A", "B", 0.01, Some(100.0)));
        let config = PrepConfig {
            boundary_polygon: Some(band_polygon()),
            ..PrepConfig::default()
        };
        assert_eq!(filter_by_geography(&net, &config), net);
    }

    #[test]
    fn radial_generator_promotes_neighbor() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("G", "z", BusType::Generator));
        net.add_bus(bus("T", "z", BusType::Transmission));
        net.add_bus(bus("U", "z", BusType::Transmission));
        net.add_bus(bus("V", "z", BusType::Transmission));
        net.add_line(line("G|T", "G", "T", 0.01, Some(100.0)));
        net.add_line(line("T|U", "T", "U", 0.01, Some(100.0)));
        net.add_line(line("T|V", "T", "V", 0.01, Some(100.0)));
        net.add_line(line("U|V", "U", "V", 0.01, Some(100.0)));
        let out = reduce_radial_buses(&net);
        assert!(!out.buses.contains_key("G"));
        assert_eq!(out.buses["T"].bus_type, BusType::Generator);
    }

    #[test]
    fn meshed_triangle_is_unchanged() {
        let mut net = Network::new(100.0);
        for id in ["A", "B", "C"] {
            net.add_bus(bus(id, "z", BusType::Unconstrained));
        }
        net.add_line(line("A|B", "A", "B", 0.01, Some(100.0)));
        net.add_line(line("B|C", "B", "C", 0.01, Some(100.0)));
        net.add_line(line("C|A", "C", "A", 0.01, Some(100.0)));
        assert_eq!(reduce_radial_buses(&net), net);
    }

    #[test]
    fn reduction_cascades_and_propagates_load_type() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("L", "z", BusType::Load));
        net.add_bus(bus("T", "z", BusType::Transmission));
        net.add_bus(bus("T2", "z", BusType::Transmission));
        net.add_line(line("L|T", "L", "T", 0.01, Some(100.0)));
        net.add_line(line("T|T2", "T", "T2", 0.01, Some(100.0)));
        let out = reduce_radial_buses(&net);
        // Both ends are radial, so the chain collapses onto the middle bus,
        // which inherits the removed load capability.
        assert_eq!(out.buses.len(), 1);
        assert_eq!(out.buses["T"].bus_type, BusType::Load);
    }

    #[test]
    fn crossing_line_blocks_radial_removal() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("A", "z1", BusType::Generator));
        net.add_bus(bus("B", "z2", BusType::Transmission));
        net.add_bus(bus("C", "z2", BusType::Transmission));
        net.add_line(line("A|B", "A", "B", 0.01, Some(100.0)));
        net.add_line(line("B|C", "B", "C", 0.01, Some(100.0)));
        let out = reduce_radial_buses(&net);
        // A|B crosses zones, so A stays; C is radial within z2 and goes.
        assert!(out.buses.contains_key("A"));
        assert!(!out.buses.contains_key("C"));
    }

    #[test]
    fn dc_tie_removal_splits_islands() {
        let mut net = Network::new(100.0);
        for (id, z) in [("A", "z1"), ("B", "z1"), ("C", "z2"), ("D", "z2")] {
            net.add_bus(bus(id, z, BusType::Unconstrained));
        }
        net.add_line(line("A|B", "A", "B", 0.01, Some(100.0)));
        net.add_line(line("C|D", "C", "D", 0.01, Some(100.0)));
        let mut tie = line("B|C", "B", "C", 0.01, Some(100.0));
        tie.is_dc = true;
        net.add_line(tie);
        let out = drop_dc_elements(&net);
        assert_eq!(out.lines.len(), 2);
        assert_eq!(connected_components(&out).len(), 2);
    }

    #[test]
    fn bus_connected_only_by_dc_is_removed() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("A", "z", BusType::Unconstrained));
        net.add_bus(bus("B", "z", BusType::Unconstrained));
        net.add_bus(bus("C", "z", BusType::Unconstrained));
        net.add_line(line("A|B", "A", "B", 0.01, Some(100.0)));
        let mut tie = line("B|C", "B", "C", 0.01, Some(100.0));
        tie.is_dc = true;
        net.add_line(tie);
        let out = drop_dc_elements(&net);
        assert!(!out.buses.contains_key("C"));
        assert_eq!(out.lines.len(), 1);
    }

    #[test]
    fn no_dc_lines_is_a_noop() {
        let net = five_bus();
        assert_eq!(drop_dc_elements(&net), net);
    }

    #[test]
    fn short_lines_hit_the_thermal_limit() {
        let params = LoadabilityParams::default();
        let limit = loadability_limit(0.0, 230.0, &params).unwrap();
        assert_eq!(limit, params.classes[&230].thermal_limit_mw);
    }

    #[test]
    fn doubling_length_halves_the_angular_limit() {
        let params = LoadabilityParams::default();
        let l1 = loadability_limit(500.0, 230.0, &params).unwrap();
        let l2 = loadability_limit(1000.0, 230.0, &params).unwrap();
        assert!(l1 < params.classes[&230].thermal_limit_mw);
        assert!((l2 - l1 / 2.0).abs() < 1e-9);
    }

    #[test]
    fn loadability_is_nonincreasing_in_length() {
        let params = LoadabilityParams::default();
        for &kv in params.classes.keys() {
            let mut prev = f64::INFINITY;
            for step in 0..1000 {
                let length = step as f64 * 2.0;
                let limit = loadability_limit(length, kv as f64, &params).unwrap();
                assert!(limit <= prev + 1e-12, "kv={kv} length={length}");
                prev = limit;
            }
        }
    }

    fn located_pair(rating: Option<f64>) -> Network {
        let mut net = Network::new(100.0);
        net.add_bus(located_bus("A", "z", BusType::Unconstrained, 40.0, -100.0));
        net.add_bus(located_bus("B", "z", BusType::Unconstrained, 44.5, -100.0));
        let mut l = line("A|B", "A", "B", 0.01, rating);
        l.voltage_kv = 230.0;
        net.add_line(l);
        net
    }

    #[test]
    fn present_ratings_are_untouched() {
        let net = located_pair(Some(400.0));
        let out = impute_ratings(&net, &LoadabilityParams::default()).unwrap();
        assert_eq!(out.lines["A|B"].rating, Some(400.0));
    }

    #[test]
    fn long_line_gets_angular_limited_rating() {
        // ~500 km at 230 kV sits well inside the angular-limited regime.
        let net = located_pair(None);
        let params = LoadabilityParams::default();
        let out = impute_ratings(&net, &params).unwrap();
        let r = out.lines["A|B"].rating.unwrap();
        assert!(r > 0.0 && r < params.classes[&230].thermal_limit_mw);
    }

    #[test]
    fn zero_length_transformer_gets_thermal_limit() {
        let mut net = Network::new(100.0);
        net.add_bus(located_bus("A", "z", BusType::Unconstrained, 40.0, -100.0));
        net.add_bus(located_bus("B", "z", BusType::Unconstrained, 40.0, -100.0));
        let mut xfmr = line("X1", "A", "B", 0.05, None);
        xfmr.kind = LineKind::Transformer;
        xfmr.voltage_kv = 345.0;
        net.add_line(xfmr);
        let params = LoadabilityParams::default();
        let out = impute_ratings(&net, &params).unwrap();
        assert_eq!(
            out.lines["X1"].rating,
            Some(params.classes[&345].thermal_limit_mw)
        );
    }

    fn line_at(
        id: &str,
        from: &str,
        to: &str,
        x: Option<f64>,
        kind: LineKind,
        kv: f64,
    ) -> Line {
        Line {
            id: id.to_string(),
            from_bus: from.to_string(),
            to_bus: to.to_string(),
            reactance: x,
            rating: Some(100.0),
            voltage_kv: kv,
            kind,
            is_dc: false,
        }
    }

    fn grid_bus(id: &str, lat: f64, lon: f64) -> Bus {
        located_bus(id, "z", BusType::Unconstrained, lat, lon)
    }

    #[test]
    fn reactance_copied_from_nearest_length_donor() {
        let mut net = Network::new(100.0);
        // Target line ~50 km; donors ~45 km (x=0.02) and ~80 km (x=0.05).
        net.add_bus(grid_bus("A", 40.0, -100.0));
        net.add_bus(grid_bus("B", 40.4497, -100.0));
        net.add_bus(grid_bus("C", 41.0, -100.0));
        net.add_bus(grid_bus("D", 41.4047, -100.0));
        net.add_bus(grid_bus("E", 42.0, -100.0));
        net.add_bus(grid_bus("F", 42.7194, -100.0));
        net.add_line(line_at("target", "A", "B", None, LineKind::Line, 230.0));
        net.add_line(line_at("donor45", "C", "D", Some(0.02), LineKind::Line, 230.0));
        net.add_line(line_at("donor80", "E", "F", Some(0.05), LineKind::Line, 230.0));
        let (out, warnings) = impute_reactances(&net).unwrap();
        assert_eq!(out.lines["target"].reactance, Some(0.02));
        assert!(warnings.is_empty());
    }

    #[test]
    fn transformer_takes_same_voltage_median() {
        let mut net = Network::new(100.0);
        for (i, id) in ["A", "B", "C", "D", "E", "F", "G", "H"].iter().enumerate() {
            net.add_bus(grid_bus(id, 40.0 + i as f64 * 0.1, -100.0));
        }
        net.add_line(line_at("t0", "A", "B", None, LineKind::Transformer, 230.0));
        net.add_line(line_at("t1", "C", "D", Some(0.01), LineKind::Transformer, 230.0));
        net.add_line(line_at("t2", "E", "F", Some(0.03), LineKind::Transformer, 230.0));
        net.add_line(line_at("t3", "G", "H", Some(0.08), LineKind::Transformer, 230.0));
        let (out, _) = impute_reactances(&net).unwrap();
        assert_eq!(out.lines["t0"].reactance, Some(0.03));
    }

    #[test]
    fn even_donor_count_takes_middle_mean() {
        let mut net = Network::new(100.0);
        for (i, id) in ["A", "B", "C", "D", "E", "F"].iter().enumerate() {
            net.add_bus(grid_bus(id, 40.0 + i as f64 * 0.1, -100.0));
        }
        net.add_line(line_at("t0", "A", "B", None, LineKind::Transformer, 230.0));
        net.add_line(line_at("t1", "C", "D", Some(0.02), LineKind::Transformer, 230.0));
        net.add_line(line_at("t2", "E", "F", Some(0.04), LineKind::Transformer, 230.0));
        let (out, _) = impute_reactances(&net).unwrap();
        assert_eq!(out.lines["t0"].reactance, Some(0.03));
    }

    #[test]
    fn missing_voltage_falls_back_with_warning() {
        let mut net = Network::new(100.0);
        for (i, id) in ["A", "B", "C", "D"].iter().enumerate() {
            net.add_bus(grid_bus(id, 40.0 + i as f64 * 0.1, -100.0));
        }
        net.add_line(line_at("target", "A", "B", None, LineKind::Line, 345.0));
        net.add_line(line_at("donor", "C", "D", Some(0.02), LineKind::Line, 230.0));
        let (out, warnings) = impute_reactances(&net).unwrap();
        assert_eq!(out.lines["target"].reactance, Some(0.02));
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn no_donor_at_all_is_an_error() {
        let mut net = Network::new(100.0);
        net.add_bus(grid_bus("A", 40.0, -100.0));
        net.add_bus(grid_bus("B", 40.1, -100.0));
        net.add_line(line_at("target", "A", "B", None, LineKind::Line, 230.0));
        assert!(matches!(
            impute_reactances(&net),
            Err(ItlError::Imputation { .. })
        ));
    }

    /// Barbell: interface cluster on the left, remote cluster far east,
    /// joined by a long line whose midpoint buses exceed the radius.
    #[test]
    fn neighborhood_filter_drops_remote_component() {
        let mut net = Network::new(100.0);
        net.add_bus(located_bus("a1", "z1", BusType::Unconstrained, 40.0, -105.0));
        net.add_bus(located_bus("a2", "z2", BusType::Unconstrained, 40.0, -104.5));
        net.add_bus(located_bus("a3", "z1", BusType::Unconstrained, 40.5, -105.0));
        // ~2000 km east of the interface.
        net.add_bus(located_bus("b1", "z2", BusType::Unconstrained, 40.0, -80.0));
        net.add_bus(located_bus("b2", "z2", BusType::Unconstrained, 40.5, -80.0));
        net.add_line(line("a1|a2", "a1", "a2", 0.01, Some(100.0)));
        net.add_line(line("a1|a3", "a1", "a3", 0.01, Some(100.0)));
        net.add_line(line("a2|b1", "a2", "b1", 0.01, Some(100.0)));
        net.add_line(line("b1|b2", "b1", "b2", 0.01, Some(100.0)));
        let interface = Interface {
            zone_a: "z1".to_string(),
            zone_b: "z2".to_string(),
            crossing_lines: vec![("a1|a2".to_string(), 1)],
        };
        let config = PrepConfig {
            large_component_threshold: 2,
            neighborhood_radius_km: 800.0,
            ..PrepConfig::default()
        };
        let out = neighborhood_filter(&net, &interface, &config);
        assert!(out.buses.contains_key("a1") && out.buses.contains_key("a2"));
        assert!(!out.buses.contains_key("b1") && !out.buses.contains_key("b2"));
    }

    #[test]
    fn small_component_is_left_alone() {
        let net = five_bus();
        let interface = Interface {
            zone_a: "1".to_string(),
            zone_b: "2".to_string(),
            crossing_lines: vec![("A|D".to_string(), 1), ("C|D".to_string(), 1)],
        };
        let out = neighborhood_filter(&net, &interface, &PrepConfig::default());
        assert_eq!(out, net);
    }

    #[test]
    fn pipeline_output_validates_clean() {
        let mut net = five_bus();
        // Missing rating forces the geographic machinery into play.
        net.lines.get_mut("A|B").unwrap().rating = None;
        locate(&mut net, "A", 40.0, -100.0);
        locate(&mut net, "B", 40.3, -100.2);
        locate(&mut net, "C", 40.6, -100.4);
        locate(&mut net, "D", 40.9, -100.6);
        let (out, _) = prepare(&net, &PrepConfig::default()).unwrap();
        assert!(validate_network(&out).is_clean());
        assert!(out.lines["A|B"].rating.is_some());
    }
}
