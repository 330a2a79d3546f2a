//! n-1 contingency ITLs (drop the highest-flow crossing line, re-solve) and
//! aggregation of zonal ITLs into planning regions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ItlError, Result};
use crate::network::{Interface, Network};
use crate::prep::PrepConfig;
use crate::solver::{
    compute_all_itls, compute_itl, Direction, InterfaceSolve, ItlResult, SolveOptions,
};

/// n-0 and n-1 results for one interface-direction. The removed line is the
/// crossing line carrying the highest absolute flow in the n-0 optimum
/// (ties: smallest line id); with a single crossing line the n-1 ITL is zero
/// by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContingencyResult {
    pub zone_a: String,
    pub zone_b: String,
    pub direction: Direction,
    pub n0: ItlResult,
    pub removed_line: String,
    pub n1: ItlResult,
}

impl ContingencyResult {
    pub fn interface_id(&self) -> String {
        format!("{}||{}", self.zone_a, self.zone_b)
    }
}

/// Picks the crossing line with the highest |flow| in the n-0 solution.
fn highest_flow_line(interface: &Interface, n0: &ItlResult) -> String {
    interface
        .crossing_lines
        .iter()
        .map(|(id, _)| (id, n0.flows.get(id).map_or(0.0, |f| f.abs())))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(a.0)))
        .map(|(id, _)| id.clone())
        .expect("interface has at least one crossing line")
}

/// Computes the n-1 result for one interface-direction, reusing a previously
/// computed n-0 result.
pub fn compute_n1(
    network: &Network,
    interface: &Interface,
    direction: Direction,
    n0: &ItlResult,
    prep: Option<&PrepConfig>,
) -> Result<ContingencyResult> {
    let removed_line = highest_flow_line(interface, n0);
    let remaining: Vec<(String, i8)> = interface
        .crossing_lines
        .iter()
        .filter(|(id, _)| *id != removed_line)
        .cloned()
        .collect();
    let n1 = if remaining.is_empty() {
        ItlResult::zero(
            interface,
            direction,
            &format!("no crossing line remains after removing {removed_line}"),
        )
    } else {
        let reduced_net = network.without_line(&removed_line);
        let reduced_interface = Interface {
            zone_a: interface.zone_a.clone(),
            zone_b: interface.zone_b.clone(),
            crossing_lines: remaining,
        };
        let mut n1 = compute_itl(&reduced_net, &reduced_interface, direction, prep)?;
        // Flow redistribution on the reduced network can raise the raw
        // optimum above the intact-network limit (a Braess-type effect).
        // A post-contingency rating never exceeds the intact rating, so cap
        // it and record that we did.
        if n1.itl_mw > n0.itl_mw {
            n1.notes.push(format!(
                "reduced-network optimum {:.3} MW capped at the intact-network limit",
                n1.itl_mw
            ));
            n1.itl_mw = n0.itl_mw;
        }
        n1
    };
    Ok(ContingencyResult {
        zone_a: interface.zone_a.clone(),
        zone_b: interface.zone_b.clone(),
        direction,
        n0: n0.clone(),
        removed_line,
        n1,
    })
}

/// Runs the n-1 analysis for a batch of completed n-0 solves. Failed n-0
/// entries are passed through as errors.
pub fn compute_n1_batch(
    network: &Network,
    solves: &[InterfaceSolve],
    prep: Option<&PrepConfig>,
) -> Vec<Result<ContingencyResult>> {
    solves
        .par_iter()
        .map(|solve| match &solve.result {
            Ok(n0) => compute_n1(network, &solve.interface, solve.direction, n0, prep),
            Err(e) => Err(ItlError::Solver(format!(
                "n-0 solve failed for {} {}: {e}",
                solve.interface.id(),
                solve.direction.as_str()
            ))),
        })
        .collect()
}

/// Zone-to-region assignment; total over the zones in scope.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMapping {
    pub regions: BTreeMap<String, String>,
}

impl RegionMapping {
    pub fn identity(zones: impl IntoIterator<Item = String>) -> Self {
        RegionMapping {
            regions: zones.into_iter().map(|z| (z.clone(), z)).collect(),
        }
    }

    pub fn region_of(&self, zone: &str) -> Result<&str> {
        self.regions
            .get(zone)
            .map(|r| r.as_str())
            .ok_or_else(|| ItlError::Config(format!("zone {zone} has no region mapping")))
    }
}

/// Relabels each bus's zone to its region and solves the region interfaces
/// directly; the crossing set of a region interface is the union of all
/// lines between zones mapped to the two regions.
pub fn aggregate_direct(
    network: &Network,
    mapping: &RegionMapping,
    options: &SolveOptions,
) -> Result<Vec<InterfaceSolve>> {
    let mut relabeled = network.clone();
    for bus in relabeled.buses.values_mut() {
        bus.zone = mapping.region_of(&bus.zone)?.to_string();
    }
    Ok(compute_all_itls(&relabeled, options))
}

/// One region-pair-direction sum of constituent zonal ITLs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummedItl {
    pub region_a: String,
    pub region_b: String,
    pub direction: Direction,
    pub total_mw: f64,
    pub constituents: Vec<String>,
    /// True when some constituent interface had no usable result.
    pub partial: bool,
}

/// A zonal ITL value as consumed by [`aggregate_summed`]; errors map to
/// `None` values and mark the sum partial.
#[derive(Debug, Clone)]
pub struct ZonalItl {
    pub zone_a: String,
    pub zone_b: String,
    pub direction: Direction,
    pub itl_mw: Option<f64>,
}

impl From<&ItlResult> for ZonalItl {
    fn from(r: &ItlResult) -> Self {
        ZonalItl {
            zone_a: r.zone_a.clone(),
            zone_b: r.zone_b.clone(),
            direction: r.direction,
            itl_mw: Some(r.itl_mw),
        }
    }
}

/// Sums zonal ITLs over region pairs, orienting each constituent toward the
/// region-level direction. Constituents internal to a region are dropped.
pub fn aggregate_summed(zonal: &[ZonalItl], mapping: &RegionMapping) -> Result<Vec<SummedItl>> {
    let mut sums: BTreeMap<(String, String, &'static str), SummedItl> = BTreeMap::new();
    for entry in zonal {
        let ra = mapping.region_of(&entry.zone_a)?.to_string();
        let rb = mapping.region_of(&entry.zone_b)?.to_string();
        if ra == rb {
            continue;
        }
        // Region pair is ordered like zone pairs; a zonal Forward flow points
        // from its zone_a's region toward its zone_b's region.
        let (region_a, region_b, flipped) = if ra < rb {
            (ra, rb, false)
        } else {
            (rb, ra, true)
        };
        let direction = match (entry.direction, flipped) {
            (Direction::Forward, false) | (Direction::Reverse, true) => Direction::Forward,
            _ => Direction::Reverse,
        };
        let key = (region_a.clone(), region_b.clone(), direction.as_str());
        let slot = sums.entry(key).or_insert_with(|| SummedItl {
            region_a,
            region_b,
            direction,
            total_mw: 0.0,
            constituents: Vec::new(),
            partial: false,
        });
        slot.constituents
            .push(format!("{}||{}", entry.zone_a, entry.zone_b));
        match entry.itl_mw {
            Some(v) => slot.total_mw += v,
            None => slot.partial = true,
        }
    }
    Ok(sums.into_values().collect())
}

/// Side-by-side comparison of directly calculated and summed region ITLs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub region_a: String,
    pub region_b: String,
    pub direction: Direction,
    pub direct_n0: Option<f64>,
    pub direct_n1: Option<f64>,
    pub summed_n0: Option<f64>,
    pub summed_n1: Option<f64>,
    pub rating_sum_mw: Option<f64>,
    /// Decomposition bound: summed n-0 >= direct n-0 (up to tolerance).
    pub summed_n0_exceeds_direct: Option<bool>,
    /// The summed-n-1-below-direct-n-1 trend; reported, not guaranteed.
    pub summed_n1_below_direct: Option<bool>,
}

pub struct DirectEntry {
    pub region_a: String,
    pub region_b: String,
    pub direction: Direction,
    pub n0: Option<f64>,
    pub n1: Option<f64>,
    pub rating_sum_mw: Option<f64>,
}

pub struct SummedEntry {
    pub region_a: String,
    pub region_b: String,
    pub direction: Direction,
    pub n0: Option<f64>,
    pub n1: Option<f64>,
}

/// Joins direct and summed results per region pair and direction and flags
/// the two aggregation trends.
pub fn compare_direct_vs_summed(
    direct: &[DirectEntry],
    summed: &[SummedEntry],
) -> Vec<ComparisonRow> {
    let mut rows: BTreeMap<(String, String, &'static str), ComparisonRow> = BTreeMap::new();
    for d in direct {
        rows.insert(
            (d.region_a.clone(), d.region_b.clone(), d.direction.as_str()),
            ComparisonRow {
                region_a: d.region_a.clone(),
                region_b: d.region_b.clone(),
                direction: d.direction,
                direct_n0: d.n0,
                direct_n1: d.n1,
                summed_n0: None,
                summed_n1: None,
                rating_sum_mw: d.rating_sum_mw,
                summed_n0_exceeds_direct: None,
                summed_n1_below_direct: None,
            },
        );
    }
    for s in summed {
        let key = (s.region_a.clone(), s.region_b.clone(), s.direction.as_str());
        let row = rows.entry(key).or_insert_with(|| ComparisonRow {
            region_a: s.region_a.clone(),
            region_b: s.region_b.clone(),
            direction: s.direction,
            direct_n0: None,
            direct_n1: None,
            summed_n0: None,
            summed_n1: None,
            rating_sum_mw: None,
            summed_n0_exceeds_direct: None,
            summed_n1_below_direct: None,
        });
        row.summed_n0 = s.n0;
        row.summed_n1 = s.n1;
    }
    for row in rows.values_mut() {
        if let (Some(direct), Some(summed)) = (row.direct_n0, row.summed_n0) {
            row.summed_n0_exceeds_direct = Some(summed >= direct - 1e-6);
        }
        if let (Some(direct), Some(summed)) = (row.direct_n1, row.summed_n1) {
            row.summed_n1_below_direct = Some(summed <= direct + 1e-6);
        }
    }
    rows.into_values().collect()
}
