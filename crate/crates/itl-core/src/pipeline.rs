//! End-to-end run driver: load → prep → validate → solve → aggregate →
//! report. All solve work happens up front (possibly in parallel); file
//! writes are serialized at the end in a fixed order so that identical inputs
//! produce byte-identical outputs. The only exception is run_manifest.json,
//! whose timing fields necessarily vary between runs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::contingency::{
    aggregate_direct, aggregate_summed, compare_direct_vs_summed, compute_n1_batch,
    ComparisonRow, ContingencyResult, DirectEntry, RegionMapping, SummedEntry, ZonalItl,
};
use crate::error::Result;
use crate::io::{load_config, load_network, load_regions, RunConfig};
use crate::network::{build_interfaces, validate_network, Network};
use crate::prep::prepare;
use crate::solver::{compute_all_itls, Direction, InterfaceSolve, ItlResult, SolveOptions};
use crate::stats::{compute_summary, ItlRecord, Level, StatRow};

/// Overall run verdict, mapped to the process exit code by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Everything solved.
    Success,
    /// Some interface solves failed; see the manifest.
    Partial,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::Partial => 2,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub output_dir: PathBuf,
    pub interfaces: usize,
    pub solves: usize,
    pub failed_solves: usize,
    pub warnings: Vec<String>,
}

fn fmt_mw(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_ratio(v: f64) -> String {
    format!("{v:.6}")
}

/// File-name-safe form of an interface id ("1||2" -> "1__2").
fn slug(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

struct OutputRow {
    interface: String,
    direction: Direction,
    level: Level,
    result: Option<ItlResult>,
    removed_line: String,
    error: Option<String>,
}

fn n0_rows(solves: &[InterfaceSolve]) -> Vec<OutputRow> {
    solves
        .iter()
        .map(|s| OutputRow {
            interface: s.interface.id(),
            direction: s.direction,
            level: Level::N0,
            result: s.result.as_ref().ok().cloned(),
            removed_line: String::new(),
            error: s.result.as_ref().err().map(|e| e.to_string()),
        })
        .collect()
}

fn n1_rows(results: &[Result<ContingencyResult>], solves: &[InterfaceSolve]) -> Vec<OutputRow> {
    results
        .iter()
        .zip(solves.iter())
        .map(|(r, s)| match r {
            Ok(c) => OutputRow {
                interface: c.interface_id(),
                direction: c.direction,
                level: Level::N1,
                result: Some(c.n1.clone()),
                removed_line: c.removed_line.clone(),
                error: None,
            },
            Err(e) => OutputRow {
                interface: s.interface.id(),
                direction: s.direction,
                level: Level::N1,
                result: None,
                removed_line: String::new(),
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn write_itl_csv(path: &Path, rows: &[OutputRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "interface",
        "direction",
        "level",
        "itl_mw",
        "rating_sum_mw",
        "removed_line",
        "binding_lines",
        "status",
    ])?;
    for row in rows {
        match &row.result {
            Some(r) => {
                let binding: Vec<&str> = r.binding_lines.iter().map(String::as_str).collect();
                w.write_record([
                    row.interface.as_str(),
                    row.direction.as_str(),
                    row.level.as_str(),
                    &fmt_mw(r.itl_mw),
                    &fmt_mw(r.rating_sum_mw),
                    &row.removed_line,
                    &binding.join(";"),
                    "ok",
                ])?;
            }
            None => {
                w.write_record([
                    row.interface.as_str(),
                    row.direction.as_str(),
                    row.level.as_str(),
                    "",
                    "",
                    &row.removed_line,
                    "",
                    "failed",
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_solve_details(dir: &Path, network: &Network, rows: &[OutputRow]) -> Result<()> {
    let flows_dir = dir.join("flows");
    let inj_dir = dir.join("injections");
    fs::create_dir_all(&flows_dir)?;
    fs::create_dir_all(&inj_dir)?;
    for row in rows {
        let Some(r) = &row.result else { continue };
        let stem = format!(
            "{}_{}_{}",
            slug(&row.interface),
            row.direction.as_str(),
            row.level.as_str()
        );
        let mut fw = csv::Writer::from_path(flows_dir.join(format!("{stem}.csv")))?;
        fw.write_record(["line", "flow_mw", "rating_mw", "rating_dual"])?;
        for (line_id, flow) in &r.flows {
            let rating = network
                .lines
                .get(line_id)
                .and_then(|l| l.rating)
                .unwrap_or(f64::NAN);
            let dual = r.rating_duals.get(line_id).copied().unwrap_or(0.0);
            fw.write_record([
                line_id.as_str(),
                &fmt_mw(*flow),
                &fmt_mw(rating),
                &fmt_ratio(dual),
            ])?;
        }
        fw.flush()?;
        let mut iw = csv::Writer::from_path(inj_dir.join(format!("{stem}.csv")))?;
        iw.write_record(["bus", "injection_mw"])?;
        for (bus_id, g) in &r.injections {
            iw.write_record([bus_id.as_str(), &fmt_mw(*g)])?;
        }
        iw.flush()?;
    }
    Ok(())
}

fn write_stats_csv(path: &Path, rows: &[StatRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "value"])?;
    for row in rows {
        w.write_record([row.metric.as_str(), &fmt_ratio(row.value)])?;
    }
    w.flush()?;
    Ok(())
}

fn write_comparison_csv(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "region_a",
        "region_b",
        "direction",
        "direct_n0_mw",
        "direct_n1_mw",
        "summed_n0_mw",
        "summed_n1_mw",
        "rating_sum_mw",
        "summed_n0_ge_direct",
        "summed_n1_le_direct",
    ])?;
    let opt_mw = |v: Option<f64>| v.map(fmt_mw).unwrap_or_default();
    let opt_bool = |v: Option<bool>| match v {
        Some(true) => "true".to_string(),
        Some(false) => "false".to_string(),
        None => String::new(),
    };
    for row in rows {
        w.write_record([
            row.region_a.as_str(),
            row.region_b.as_str(),
            row.direction.as_str(),
            &opt_mw(row.direct_n0),
            &opt_mw(row.direct_n1),
            &opt_mw(row.summed_n0),
            &opt_mw(row.summed_n1),
            &opt_mw(row.rating_sum_mw),
            &opt_bool(row.summed_n0_exceeds_direct),
            &opt_bool(row.summed_n1_below_direct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rounds to the precision itl.csv prints, so stats computed here are exactly
/// recomputable from that file.
fn round_mw(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn records_from_rows(rows: &[OutputRow]) -> Vec<ItlRecord> {
    rows.iter()
        .filter_map(|row| {
            row.result.as_ref().map(|r| ItlRecord {
                interface: row.interface.clone(),
                direction: row.direction,
                level: row.level,
                itl_mw: round_mw(r.itl_mw),
                rating_sum_mw: round_mw(r.rating_sum_mw),
            })
        })
        .collect()
}

/// Builds the direct-vs-summed comparison for one region mapping from
/// already-computed zonal and regional results.
fn region_comparison(
    network: &Network,
    mapping: &RegionMapping,
    zonal_n0: &[InterfaceSolve],
    zonal_n1: &[Result<ContingencyResult>],
    options: &SolveOptions,
    run_n1: bool,
) -> Result<(Vec<ComparisonRow>, usize)> {
    let direct_solves = aggregate_direct(network, mapping, options)?;
    let mut relabeled = network.clone();
    for bus in relabeled.buses.values_mut() {
        bus.zone = mapping.region_of(&bus.zone)?.to_string();
    }
    let direct_n1 = if run_n1 {
        compute_n1_batch(&relabeled, &direct_solves, options.prep.as_ref())
    } else {
        Vec::new()
    };
    let mut failed = direct_solves.iter().filter(|s| s.result.is_err()).count();
    failed += direct_n1.iter().filter(|r| r.is_err()).count();

    let mut direct: BTreeMap<(String, String, Direction), DirectEntry> = BTreeMap::new();
    for (i, s) in direct_solves.iter().enumerate() {
        let entry = DirectEntry {
            region_a: s.interface.zone_a.clone(),
            region_b: s.interface.zone_b.clone(),
            direction: s.direction,
            n0: s.result.as_ref().ok().map(|r| r.itl_mw),
            n1: direct_n1
                .get(i)
                .and_then(|r| r.as_ref().ok())
                .map(|c| c.n1.itl_mw),
            rating_sum_mw: Some(s.interface.rating_sum(&relabeled)),
        };
        direct.insert(
            (entry.region_a.clone(), entry.region_b.clone(), s.direction),
            entry,
        );
    }

    let zonal_n0_inputs: Vec<ZonalItl> = zonal_n0
        .iter()
        .map(|s| ZonalItl {
            zone_a: s.interface.zone_a.clone(),
            zone_b: s.interface.zone_b.clone(),
            direction: s.direction,
            itl_mw: s.result.as_ref().ok().map(|r| r.itl_mw),
        })
        .collect();
    let summed_n0 = aggregate_summed(&zonal_n0_inputs, mapping)?;
    let summed_n1 = if run_n1 {
        let inputs: Vec<ZonalItl> = zonal_n1
            .iter()
            .zip(zonal_n0.iter())
            .map(|(r, s)| ZonalItl {
                zone_a: s.interface.zone_a.clone(),
                zone_b: s.interface.zone_b.clone(),
                direction: s.direction,
                itl_mw: r.as_ref().ok().map(|c| c.n1.itl_mw),
            })
            .collect();
        aggregate_summed(&inputs, mapping)?
    } else {
        Vec::new()
    };
    let mut summed: BTreeMap<(String, String, Direction), SummedEntry> = BTreeMap::new();
    for s in &summed_n0 {
        summed.insert(
            (s.region_a.clone(), s.region_b.clone(), s.direction),
            SummedEntry {
                region_a: s.region_a.clone(),
                region_b: s.region_b.clone(),
                direction: s.direction,
                n0: (!s.partial).then_some(s.total_mw),
                n1: None,
            },
        );
    }
    for s in &summed_n1 {
        if let Some(entry) =
            summed.get_mut(&(s.region_a.clone(), s.region_b.clone(), s.direction))
        {
            entry.n1 = (!s.partial).then_some(s.total_mw);
        }
    }

    let direct_vec: Vec<DirectEntry> = direct.into_values().collect();
    let summed_vec: Vec<SummedEntry> = summed.into_values().collect();
    Ok((compare_direct_vs_summed(&direct_vec, &summed_vec), failed))
}

/// Runs the whole pipeline for a parsed config. Fatal failures (unreadable
/// input, dirty post-prep network, unwritable output) surface as `Err`;
/// per-interface solve failures degrade the status to [`RunStatus::Partial`].
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutcome> {
    let started = Instant::now();
    let raw = load_network(&config.buses_path, &config.lines_path)?;
    let (network, mut warnings) = prepare(&raw, &config.prep)?;
    let report = validate_network(&network);
    if !report.is_clean() {
        return Err(report.to_error());
    }
    let prep_elapsed = started.elapsed();

    let options = SolveOptions {
        directions: config.directions,
        prep: Some(config.prep.clone()),
    };
    let interfaces = build_interfaces(&network).len();
    let solves = compute_all_itls(&network, &options);
    let n1_results = if config.run_n1 {
        compute_n1_batch(&network, &solves, options.prep.as_ref())
    } else {
        Vec::new()
    };
    let mut failed = solves.iter().filter(|s| s.result.is_err()).count();
    failed += n1_results.iter().filter(|r| r.is_err()).count();

    let comparison = match &config.regions_path {
        Some(path) => {
            let mapping = load_regions(path)?;
            let (rows, region_failed) = region_comparison(
                &network,
                &mapping,
                &solves,
                &n1_results,
                &options,
                config.run_n1,
            )?;
            failed += region_failed;
            Some(rows)
        }
        None => None,
    };
    let solve_elapsed = started.elapsed() - prep_elapsed;

    let mut rows = n0_rows(&solves);
    rows.extend(n1_rows(&n1_results, &solves));
    rows.sort_by(|a, b| {
        (&a.interface, a.direction, a.level).cmp(&(&b.interface, b.direction, b.level))
    });
    let stats = compute_summary(&records_from_rows(&rows));

    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    write_itl_csv(&dir.join("itl.csv"), &rows)?;
    write_solve_details(dir, &network, &rows)?;
    write_stats_csv(&dir.join("stats.csv"), &stats.rows())?;
    if let Some(rows) = &comparison {
        write_comparison_csv(&dir.join("region_comparison.csv"), rows)?;
    }

    let failures: Vec<serde_json::Value> = rows
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| {
                json!({
                    "interface": r.interface,
                    "direction": r.direction.as_str(),
                    "level": r.level.as_str(),
                    "error": e,
                })
            })
        })
        .collect();
    for row in &rows {
        for note in row.result.iter().flat_map(|r| r.notes.iter()) {
            warnings.push(format!(
                "{} {} {}: {note}",
                row.interface,
                row.direction.as_str(),
                row.level.as_str()
            ));
        }
    }
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "buses": config.buses_path.display().to_string(),
            "lines": config.lines_path.display().to_string(),
            "regions": config.regions_path.as_ref().map(|p| p.display().to_string()),
            "run_n1": config.run_n1,
            "directions": config.directions.directions().iter().map(|d| d.as_str()).collect::<Vec<_>>(),
            "tolerance_mw": config.tolerance_mw,
        },
        "network": {
            "buses": network.buses.len(),
            "lines": network.lines.len(),
            "interfaces": interfaces,
        },
        "timings_ms": {
            "prep": prep_elapsed.as_millis() as u64,
            "solve": solve_elapsed.as_millis() as u64,
            "total": started.elapsed().as_millis() as u64,
        },
        "failures": failures,
        "warnings": warnings,
    });
    let mut mf = fs::File::create(dir.join("run_manifest.json"))?;
    writeln!(mf, "{}", serde_json::to_string_pretty(&manifest)?)?;

    Ok(RunOutcome {
        status: if failed == 0 {
            RunStatus::Success
        } else {
            RunStatus::Partial
        },
        output_dir: dir.clone(),
        interfaces,
        solves: rows.len(),
        failed_solves: failed,
        warnings,
    })
}

/// `itl validate`: prep + validation only. Returns prep warnings; a dirty
/// post-prep network is an error.
pub fn run_validate(config: &RunConfig) -> Result<Vec<String>> {
    let raw = load_network(&config.buses_path, &config.lines_path)?;
    let (network, warnings) = prepare(&raw, &config.prep)?;
    let report = validate_network(&network);
    if !report.is_clean() {
        return Err(report.to_error());
    }
    Ok(warnings)
}

/// `itl ptdf`: prep, then dump the PTDF for the given slack bus as CSV.
pub fn run_ptdf(config: &RunConfig, slack_bus: &str, w: &mut impl Write) -> Result<()> {
    let raw = load_network(&config.buses_path, &config.lines_path)?;
    let (network, _) = prepare(&raw, &config.prep)?;
    let ptdf = crate::ptdf::compute_ptdf(&network, slack_bus)?;
    crate::io::write_ptdf_csv(&ptdf, w)?;
    Ok(())
}

/// Convenience wrapper: parse the config file and run.
pub fn run_from_config_path(path: &Path) -> Result<RunOutcome> {
    run_pipeline(&load_config(path)?)
}
