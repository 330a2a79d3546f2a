//! CSV input/output and the flat key=value run configuration.
//!
//! Schemas (exact headers, UTF-8, comma-separated):
//!   buses.csv: id,zone,type,lat,lon          type in {gen,load,trans,""}
//!   lines.csv: id,from,to,reactance_pu,rating_mw,voltage_kv,kind,is_dc
//!              blanks allowed for reactance_pu and rating_mw
//!   regions.csv: zone,region
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle preserves every field bit-exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::contingency::RegionMapping;
use crate::error::{ItlError, Result};
use crate::geo::Polygon;
use crate::network::{Bus, BusType, Line, LineKind, Location, Network};
use crate::prep::{PrepConfig, VoltageClass};
use crate::ptdf::PtdfMatrix;
use crate::solver::DirectionChoice;

pub const BUS_HEADERS: [&str; 5] = ["id", "zone", "type", "lat", "lon"];
pub const LINE_HEADERS: [&str; 8] = [
    "id",
    "from",
    "to",
    "reactance_pu",
    "rating_mw",
    "voltage_kv",
    "kind",
    "is_dc",
];

fn parse_err(file: &Path, row: usize, column: &str, message: impl Into<String>) -> ItlError {
    ItlError::Parse {
        file: file.display().to_string(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn check_headers(file: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got: Vec<&str> = got.iter().collect();
    if got != want {
        return Err(parse_err(
            file,
            1,
            "header",
            format!("expected columns {want:?}, found {got:?}"),
        ));
    }
    Ok(())
}

fn field<'r>(
    file: &Path,
    row: usize,
    record: &'r csv::StringRecord,
    index: usize,
    column: &str,
) -> Result<&'r str> {
    record
        .get(index)
        .ok_or_else(|| parse_err(file, row, column, "missing field"))
}

fn parse_f64(file: &Path, row: usize, column: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(file, row, column, format!("invalid number {s:?}")))
}

fn parse_opt_f64(file: &Path, row: usize, column: &str, s: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(file, row, column, s).map(Some)
    }
}

pub fn load_buses(path: &Path) -> Result<BTreeMap<String, Bus>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| parse_err(path, 1, "", e.to_string()))?;
    check_headers(path, reader.headers().map_err(|e| parse_err(path, 1, "", e.to_string()))?, &BUS_HEADERS)?;
    let mut buses = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // header is row 1
        let record = record.map_err(|e| parse_err(path, row, "", e.to_string()))?;
        let id = field(path, row, &record, 0, "id")?.to_string();
        if id.is_empty() {
            return Err(parse_err(path, row, "id", "empty bus id"));
        }
        let zone = field(path, row, &record, 1, "zone")?.to_string();
        let bus_type = match field(path, row, &record, 2, "type")?.trim() {
            "gen" => BusType::Generator,
            "load" => BusType::Load,
            "trans" => BusType::Transmission,
            "" => BusType::Unconstrained,
            other => {
                return Err(parse_err(
                    path,
                    row,
                    "type",
                    format!("unknown bus type {other:?} (expected gen, load, trans, or blank)"),
                ))
            }
        };
        let lat = parse_opt_f64(path, row, "lat", field(path, row, &record, 3, "lat")?)?;
        let lon = parse_opt_f64(path, row, "lon", field(path, row, &record, 4, "lon")?)?;
        let location = match (lat, lon) {
            (Some(lat), Some(lon)) => Some(Location { lat, lon }),
            (None, None) => None,
            _ => {
                return Err(parse_err(
                    path,
                    row,
                    "lat",
                    "lat and lon must both be set or both blank",
                ))
            }
        };
        if buses
            .insert(
                id.clone(),
                Bus {
                    id: id.clone(),
                    zone,
                    bus_type,
                    location,
                },
            )
            .is_some()
        {
            return Err(parse_err(path, row, "id", format!("duplicate bus id {id:?}")));
        }
    }
    Ok(buses)
}

pub fn load_lines(path: &Path) -> Result<BTreeMap<String, Line>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| parse_err(path, 1, "", e.to_string()))?;
    check_headers(path, reader.headers().map_err(|e| parse_err(path, 1, "", e.to_string()))?, &LINE_HEADERS)?;
    let mut lines = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(path, row, "", e.to_string()))?;
        let id = field(path, row, &record, 0, "id")?.to_string();
        if id.is_empty() {
            return Err(parse_err(path, row, "id", "empty line id"));
        }
        let from_bus = field(path, row, &record, 1, "from")?.to_string();
        let to_bus = field(path, row, &record, 2, "to")?.to_string();
        let reactance = parse_opt_f64(
            path,
            row,
            "reactance_pu",
            field(path, row, &record, 3, "reactance_pu")?,
        )?;
        let rating = parse_opt_f64(
            path,
            row,
            "rating_mw",
            field(path, row, &record, 4, "rating_mw")?,
        )?;
        let voltage_kv = parse_f64(
            path,
            row,
            "voltage_kv",
            field(path, row, &record, 5, "voltage_kv")?,
        )?;
        let kind = match field(path, row, &record, 6, "kind")?.trim() {
            "line" => LineKind::Line,
            "transformer" => LineKind::Transformer,
            other => {
                return Err(parse_err(
                    path,
                    row,
                    "kind",
                    format!("unknown kind {other:?} (expected line or transformer)"),
                ))
            }
        };
        let is_dc = match field(path, row, &record, 7, "is_dc")?.trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(parse_err(
                    path,
                    row,
                    "is_dc",
                    format!("invalid boolean {other:?} (expected true or false)"),
                ))
            }
        };
        if lines
            .insert(
                id.clone(),
                Line {
                    id: id.clone(),
                    from_bus,
                    to_bus,
                    reactance,
                    rating,
                    voltage_kv,
                    kind,
                    is_dc,
                },
            )
            .is_some()
        {
            return Err(parse_err(path, row, "id", format!("duplicate line id {id:?}")));
        }
    }
    Ok(lines)
}

/// Loads a network from the two CSV files. Base MVA is fixed at 100 (the
/// usual per-unit base; the flow LP never uses it directly).
pub fn load_network(buses_path: &Path, lines_path: &Path) -> Result<Network> {
    Ok(Network {
        buses: load_buses(buses_path)?,
        lines: load_lines(lines_path)?,
        base_mva: 100.0,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn save_buses(network: &Network, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(BUS_HEADERS)?;
    for bus in network.buses.values() {
        let type_token = match bus.bus_type {
            BusType::Generator => "gen",
            BusType::Load => "load",
            BusType::Transmission => "trans",
            BusType::Unconstrained => "",
        };
        let (lat, lon) = match bus.location {
            Some(loc) => (loc.lat.to_string(), loc.lon.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([&bus.id, &bus.zone, type_token, &lat, &lon])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_lines(network: &Network, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LINE_HEADERS)?;
    for line in network.lines.values() {
        let kind = match line.kind {
            LineKind::Line => "line",
            LineKind::Transformer => "transformer",
        };
        let reactance = fmt_opt(line.reactance);
        let rating = fmt_opt(line.rating);
        let voltage = line.voltage_kv.to_string();
        w.write_record([
            line.id.as_str(),
            line.from_bus.as_str(),
            line.to_bus.as_str(),
            reactance.as_str(),
            rating.as_str(),
            voltage.as_str(),
            kind,
            if line.is_dc { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_network(network: &Network, buses_path: &Path, lines_path: &Path) -> Result<()> {
    save_buses(network, buses_path)?;
    save_lines(network, lines_path)
}

/// Loads a zone,region CSV into a [`RegionMapping`].
pub fn load_regions(path: &Path) -> Result<RegionMapping> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| parse_err(path, 1, "", e.to_string()))?;
    check_headers(path, reader.headers().map_err(|e| parse_err(path, 1, "", e.to_string()))?, &["zone", "region"])?;
    let mut regions = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(path, row, "", e.to_string()))?;
        let zone = field(path, row, &record, 0, "zone")?.to_string();
        let region = field(path, row, &record, 1, "region")?.to_string();
        if regions.insert(zone.clone(), region).is_some() {
            return Err(parse_err(
                path,
                row,
                "zone",
                format!("zone {zone:?} mapped twice"),
            ));
        }
    }
    Ok(RegionMapping { regions })
}

/// Writes a PTDF matrix as CSV: one row per line, one column per bus.
pub fn write_ptdf_csv(ptdf: &PtdfMatrix, w: &mut impl Write) -> std::io::Result<()> {
    write!(w, "line")?;
    for bus in &ptdf.bus_order {
        write!(w, ",{bus}")?;
    }
    writeln!(w)?;
    for (i, line) in ptdf.line_order.iter().enumerate() {
        write!(w, "{line}")?;
        for j in 0..ptdf.bus_order.len() {
            write!(w, ",{:.6}", ptdf.values[(i, j)])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Run configuration parsed from a flat `key = value` text file. Unknown keys
/// are rejected; paths are resolved relative to the config file's directory.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub buses_path: PathBuf,
    pub lines_path: PathBuf,
    pub regions_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub run_n1: bool,
    pub directions: DirectionChoice,
    pub prep: PrepConfig,
    /// Comparison tolerance for sanity checks on results, in MW.
    pub tolerance_mw: f64,
}

fn parse_polygon(value: &str) -> Result<Polygon> {
    let mut vertices = Vec::new();
    for point in value.split(';') {
        let point = point.trim();
        if point.is_empty() {
            continue;
        }
        let parts: Vec<&str> = point.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(ItlError::Config(format!(
                "polygon point {point:?} is not \"lon,lat\""
            )));
        }
        let lon: f64 = parts[0]
            .parse()
            .map_err(|_| ItlError::Config(format!("invalid polygon longitude {:?}", parts[0])))?;
        let lat: f64 = parts[1]
            .parse()
            .map_err(|_| ItlError::Config(format!("invalid polygon latitude {:?}", parts[1])))?;
        vertices.push(Location { lat, lon });
    }
    if vertices.len() < 3 {
        return Err(ItlError::Config(
            "polygon needs at least 3 vertices".to_string(),
        ));
    }
    Ok(Polygon { vertices })
}

fn parse_config_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| ItlError::Config(format!("{key}: invalid number {value:?}")))
}

fn parse_config_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ItlError::Config(format!(
            "{key}: expected true or false, found {value:?}"
        ))),
    }
}

/// Parses and validates a run config.
///
/// Recognized keys: buses, lines, regions, output_dir, run_n1, directions
/// (both|forward|reverse), polygon ("lon,lat; lon,lat; ..."),
/// boundary_buffer_km, neighborhood_radius_km, large_component_threshold,
/// max_angle_deg, max_voltage_drop_frac, tolerance_mw, and
/// voltage_class_<kv> = thermal_mw,ohm_per_km,sil_mw overrides.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| ItlError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut buses_path = None;
    let mut lines_path = None;
    let mut regions_path = None;
    let mut output_dir = base.join("out");
    let mut run_n1 = false;
    let mut directions = DirectionChoice::Both;
    let mut prep = PrepConfig::default();
    let mut tolerance_mw = 1e-6;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ItlError::Config(format!(
                "{}:{}: expected key = value, found {line:?}",
                path.display(),
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "buses" => buses_path = Some(base.join(value)),
            "lines" => lines_path = Some(base.join(value)),
            "regions" => regions_path = Some(base.join(value)),
            "output_dir" => output_dir = base.join(value),
            "run_n1" => run_n1 = parse_config_bool(key, value)?,
            "directions" => {
                directions = match value {
                    "both" => DirectionChoice::Both,
                    "forward" => DirectionChoice::ForwardOnly,
                    "reverse" => DirectionChoice::ReverseOnly,
                    _ => {
                        return Err(ItlError::Config(format!(
                            "directions: expected both, forward, or reverse, found {value:?}"
                        )))
                    }
                }
            }
            "polygon" => prep.boundary_polygon = Some(parse_polygon(value)?),
            "boundary_buffer_km" => prep.boundary_buffer_km = parse_config_f64(key, value)?,
            "neighborhood_radius_km" => {
                prep.neighborhood_radius_km = parse_config_f64(key, value)?
            }
            "large_component_threshold" => {
                prep.large_component_threshold = value.parse().map_err(|_| {
                    ItlError::Config(format!("{key}: invalid integer {value:?}"))
                })?
            }
            "max_angle_deg" => prep.loadability.max_angle_deg = parse_config_f64(key, value)?,
            "max_voltage_drop_frac" => {
                prep.loadability.max_voltage_drop_frac = parse_config_f64(key, value)?
            }
            "tolerance_mw" => tolerance_mw = parse_config_f64(key, value)?,
            _ => {
                if let Some(kv) = key.strip_prefix("voltage_class_") {
                    let kv: u32 = kv.parse().map_err(|_| {
                        ItlError::Config(format!("{key}: invalid voltage level"))
                    })?;
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(ItlError::Config(format!(
                            "{key}: expected thermal_mw,ohm_per_km,sil_mw"
                        )));
                    }
                    prep.loadability.classes.insert(
                        kv,
                        VoltageClass {
                            thermal_limit_mw: parse_config_f64(key, parts[0])?,
                            reactance_ohm_per_km: parse_config_f64(key, parts[1])?,
                            sil_mw: parse_config_f64(key, parts[2])?,
                        },
                    );
                } else {
                    return Err(ItlError::Config(format!("unknown config key {key:?}")));
                }
            }
        }
    }

    let buses_path =
        buses_path.ok_or_else(|| ItlError::Config("missing required key: buses".to_string()))?;
    let lines_path =
        lines_path.ok_or_else(|| ItlError::Config("missing required key: lines".to_string()))?;
    for (name, p) in [("buses", &buses_path), ("lines", &lines_path)] {
        if !p.exists() {
            return Err(ItlError::Config(format!(
                "{name} file does not exist: {}",
                p.display()
            )));
        }
    }
    if let Some(p) = &regions_path {
        if !p.exists() {
            return Err(ItlError::Config(format!(
                "regions file does not exist: {}",
                p.display()
            )));
        }
    }
    if tolerance_mw <= 0.0 {
        return Err(ItlError::Config("tolerance_mw must be > 0".to_string()));
    }
    Ok(RunConfig {
        buses_path,
        lines_path,
        regions_path,
        output_dir,
        run_n1,
        directions,
        prep,
        tolerance_mw,
    })
}
