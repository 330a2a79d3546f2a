//! Seeded synthetic network generators for property sweeps and scale tests.
//! Identical seeds always yield identical networks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::network::{Bus, BusType, Line, LineKind, Location, Network};

/// Shape of a small random network for property sweeps.
#[derive(Debug, Clone)]
pub struct SmallNetConfig {
    pub max_buses: usize,
    pub max_lines: usize,
    pub zones: usize,
    /// When true, every bus is Unconstrained (the direction-symmetric case).
    pub unconstrained_only: bool,
}

impl Default for SmallNetConfig {
    fn default() -> Self {
        SmallNetConfig {
            max_buses: 12,
            max_lines: 20,
            zones: 3,
            unconstrained_only: false,
        }
    }
}

fn random_bus_type(rng: &mut ChaCha8Rng) -> BusType {
    match rng.gen_range(0..4) {
        0 => BusType::Generator,
        1 => BusType::Load,
        2 => BusType::Transmission,
        _ => BusType::Unconstrained,
    }
}

/// A connected random network with complete reactances and ratings (no prep
/// needed), at least two zones, and at least one interface.
pub fn random_small_network(seed: u64, config: &SmallNetConfig) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_buses = rng.gen_range(4..=config.max_buses.max(4));
    let mut net = Network::new(100.0);
    for i in 0..n_buses {
        // Force the first two buses into distinct zones so an interface exists.
        let zone = if i < 2 {
            i % config.zones.max(2)
        } else {
            rng.gen_range(0..config.zones.max(2))
        };
        let bus_type = if config.unconstrained_only {
            BusType::Unconstrained
        } else {
            random_bus_type(&mut rng)
        };
        net.add_bus(Bus {
            id: format!("b{i}"),
            zone: format!("z{zone}"),
            bus_type,
            location: None,
        });
    }
    let add_line = |net: &mut Network, idx: usize, from: usize, to: usize, rng: &mut ChaCha8Rng| {
        net.add_line(Line {
            id: format!("l{idx}"),
            from_bus: format!("b{from}"),
            to_bus: format!("b{to}"),
            reactance: Some(rng.gen_range(0.01..0.1)),
            rating: Some(rng.gen_range(100.0..500.0)),
            voltage_kv: 230.0,
            kind: LineKind::Line,
            is_dc: false,
        });
    };
    // Spanning tree keeps the network connected.
    for i in 1..n_buses {
        let parent = rng.gen_range(0..i);
        add_line(&mut net, i - 1, parent, i, &mut rng);
    }
    let extra = rng.gen_range(0..=config.max_lines.saturating_sub(n_buses - 1));
    for k in 0..extra {
        let from = rng.gen_range(0..n_buses);
        let to = rng.gen_range(0..n_buses);
        if from != to {
            add_line(&mut net, n_buses - 1 + k, from, to, &mut rng);
        }
    }
    net
}

fn rating_for_voltage(kv: f64, rng: &mut ChaCha8Rng) -> f64 {
    let base = match kv as u32 {
        138 => 150.0,
        230 => 400.0,
        345 => 900.0,
        _ => 2000.0,
    };
    base * rng.gen_range(0.8..1.2)
}

/// A meshed multi-zone synthetic network at configurable scale, with the
/// imperfections the preparation pipeline exists to handle: missing
/// locations, ratings, and reactances, radial spurs, and DC ties.
#[allow(clippy::needless_range_loop)] // zone index doubles as the zone id
pub fn large_synthetic_network(seed: u64, buses: usize, zones: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(100.0);
    let per_zone = (buses / zones).max(2);
    let grid_cols = 5usize;
    let voltages = [138.0, 230.0, 345.0, 500.0];

    // Zone centers on a lon/lat grid; buses jittered around their center.
    let mut zone_buses: Vec<Vec<String>> = vec![Vec::new(); zones];
    let mut line_idx = 0usize;
    for z in 0..zones {
        let center = Location {
            lat: 30.0 + 4.0 * (z / grid_cols) as f64,
            lon: -110.0 + 6.0 * (z % grid_cols) as f64,
        };
        for i in 0..per_zone {
            let id = format!("z{z:02}b{i:03}");
            let location = if rng.gen_bool(0.05) {
                None // left for location inference
            } else {
                Some(Location {
                    lat: center.lat + rng.gen_range(-1.5..1.5),
                    lon: center.lon + rng.gen_range(-1.5..1.5),
                })
            };
            net.add_bus(Bus {
                id: id.clone(),
                zone: format!("z{z:02}"),
                bus_type: random_bus_type(&mut rng),
                location,
            });
            zone_buses[z].push(id);
        }
        // Intra-zone spanning tree plus extra mesh lines.
        for i in 1..per_zone {
            let parent = rng.gen_range(0..i);
            push_line(
                &mut net,
                &mut line_idx,
                &zone_buses[z][parent],
                &zone_buses[z][i],
                &voltages,
                &mut rng,
            );
        }
        for _ in 0..per_zone / 2 {
            let a = rng.gen_range(0..per_zone);
            let b = rng.gen_range(0..per_zone);
            if a != b {
                push_line(
                    &mut net,
                    &mut line_idx,
                    &zone_buses[z][a],
                    &zone_buses[z][b],
                    &voltages,
                    &mut rng,
                );
            }
        }
    }

    // Inter-zone ties along the grid (right and down neighbors).
    for z in 0..zones {
        for neighbor in [z + 1, z + grid_cols] {
            if neighbor >= zones || (neighbor == z + 1 && neighbor % grid_cols == 0) {
                continue;
            }
            for _ in 0..rng.gen_range(2..=3) {
                let a = rng.gen_range(0..zone_buses[z].len());
                let b = rng.gen_range(0..zone_buses[neighbor].len());
                push_line(
                    &mut net,
                    &mut line_idx,
                    &zone_buses[z][a],
                    &zone_buses[neighbor][b],
                    &voltages,
                    &mut rng,
                );
            }
        }
    }

    // Radial spurs: degree-1 buses the reduction step should fold away.
    for s in 0..buses / 50 {
        let z = rng.gen_range(0..zones);
        let anchor = &zone_buses[z][rng.gen_range(0..zone_buses[z].len())];
        let id = format!("spur{s:03}");
        let anchor_loc = net.buses[anchor].location;
        net.add_bus(Bus {
            id: id.clone(),
            zone: format!("z{z:02}"),
            bus_type: if s % 2 == 0 {
                BusType::Generator
            } else {
                BusType::Load
            },
            location: anchor_loc.map(|l| Location {
                lat: l.lat + 0.1,
                lon: l.lon + 0.1,
            }),
        });
        push_line(&mut net, &mut line_idx, anchor, &id, &voltages, &mut rng);
    }

    // A few DC ties between far-apart zones; prep drops them.
    for _ in 0..3 {
        let za = rng.gen_range(0..zones);
        let zb = rng.gen_range(0..zones);
        if za == zb {
            continue;
        }
        let a = &zone_buses[za][rng.gen_range(0..zone_buses[za].len())];
        let b = &zone_buses[zb][rng.gen_range(0..zone_buses[zb].len())];
        net.add_line(Line {
            id: format!("dc{line_idx}"),
            from_bus: a.clone(),
            to_bus: b.clone(),
            reactance: None,
            rating: Some(1000.0),
            voltage_kv: 500.0,
            kind: LineKind::Line,
            is_dc: true,
        });
        line_idx += 1;
    }
    net
}

fn push_line(
    net: &mut Network,
    idx: &mut usize,
    from: &str,
    to: &str,
    voltages: &[f64],
    rng: &mut ChaCha8Rng,
) {
    let voltage_kv = voltages[rng.gen_range(0..voltages.len())];
    let kind = if rng.gen_bool(0.05) {
        LineKind::Transformer
    } else {
        LineKind::Line
    };
    net.add_line(Line {
        id: format!("l{:05}", *idx),
        from_bus: from.to_string(),
        to_bus: to.to_string(),
        reactance: if rng.gen_bool(0.02) {
            None
        } else {
            Some(rng.gen_range(0.005..0.05))
        },
        rating: if rng.gen_bool(0.04) {
            None
        } else {
            Some(rating_for_voltage(voltage_kv, rng))
        },
        voltage_kv,
        kind,
        is_dc: false,
    });
    *idx += 1;
}
