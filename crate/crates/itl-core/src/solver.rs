//! Builds and solves the per-interface transfer-limit LP: maximize (or, in
//! reverse, minimize) the summed flow on interface-crossing lines subject to
//! line ratings, PTDF flow coupling, bus-type injection signs, and overall
//! power balance.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ItlError, Result};
use crate::lp::{self, LpProblem, LpStatus, Sense};
use crate::network::{build_interfaces, connected_components, BusType, Interface, Network};
use crate::prep::{neighborhood_filter, PrepConfig};
use crate::ptdf::{compute_ptdf, PtdfMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// Flow from `zone_a` to `zone_b`.
    Forward,
    /// Flow from `zone_b` to `zone_a`.
    Reverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

/// Binding tolerance for line l: 1e-4 * max(1, r(l)).
fn binding_tol(rating: f64) -> f64 {
    1e-4 * rating.max(1.0)
}

/// Result of one interface-direction solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItlResult {
    pub zone_a: String,
    pub zone_b: String,
    pub direction: Direction,
    pub itl_mw: f64,
    pub flows: BTreeMap<String, f64>,
    pub injections: BTreeMap<String, f64>,
    pub binding_lines: BTreeSet<String>,
    /// Marginal ITL increase per MW of rating increase, per line.
    pub rating_duals: BTreeMap<String, f64>,
    pub rating_sum_mw: f64,
    pub notes: Vec<String>,
}

impl ItlResult {
    pub fn interface_id(&self) -> String {
        format!("{}||{}", self.zone_a, self.zone_b)
    }

    /// A zero-flow record, used when an interface has no crossing line left.
    pub fn zero(interface: &Interface, direction: Direction, note: &str) -> ItlResult {
        ItlResult {
            zone_a: interface.zone_a.clone(),
            zone_b: interface.zone_b.clone(),
            direction,
            itl_mw: 0.0,
            flows: BTreeMap::new(),
            injections: BTreeMap::new(),
            binding_lines: BTreeSet::new(),
            rating_duals: BTreeMap::new(),
            rating_sum_mw: 0.0,
            notes: vec![note.to_string()],
        }
    }
}

fn flow_var(line_id: &str) -> String {
    format!("F:{line_id}")
}

fn injection_var(bus_id: &str) -> String {
    format!("G:{bus_id}")
}

/// Builds the LP for one interface and direction over the component covered
/// by `ptdf`.
///
/// Variables: F(l) bounded by the line rating, G(b) bounded by bus type.
/// Equality rows: F(l) - sum_b p(l,b) G(b) = 0 per line, plus one overall
/// balance row sum_b G(b) = 0. The balance row is explicit so results do not
/// depend on the slack-bus choice.
pub fn build_itl_lp(
    ptdf: &PtdfMatrix,
    interface: &Interface,
    direction: Direction,
    network: &Network,
) -> Result<LpProblem> {
    for (line_id, _) in &interface.crossing_lines {
        if ptdf.line_row(line_id).is_none() {
            return Err(ItlError::InterfaceMismatch {
                interface: interface.id(),
            });
        }
    }
    let sense = match direction {
        Direction::Forward => Sense::Maximize,
        Direction::Reverse => Sense::Minimize,
    };
    let mut lp = LpProblem::new(sense);

    let mut f_ids = Vec::with_capacity(ptdf.line_order.len());
    for line_id in &ptdf.line_order {
        let line = &network.lines[line_id];
        let rating = line.rating.ok_or_else(|| {
            ItlError::Validation(format!("line {line_id} has no rating"))
        })?;
        f_ids.push(lp.add_var(&flow_var(line_id), -rating, rating)?);
    }
    let mut g_ids = Vec::with_capacity(ptdf.bus_order.len());
    for bus_id in &ptdf.bus_order {
        let (lower, upper) = match network.buses[bus_id].bus_type {
            BusType::Generator => (0.0, f64::INFINITY),
            BusType::Load => (f64::NEG_INFINITY, 0.0),
            BusType::Transmission => (0.0, 0.0),
            BusType::Unconstrained => (f64::NEG_INFINITY, f64::INFINITY),
        };
        g_ids.push(lp.add_var(&injection_var(bus_id), lower, upper)?);
    }

    for (l, &f_id) in f_ids.iter().enumerate() {
        let mut coeffs = vec![(f_id, 1.0)];
        for (b, &g_id) in g_ids.iter().enumerate() {
            let p = ptdf.values[(l, b)];
            if p.abs() > 1e-12 {
                coeffs.push((g_id, -p));
            }
        }
        lp.add_eq(coeffs, 0.0);
    }
    lp.add_eq(g_ids.iter().map(|&g| (g, 1.0)).collect(), 0.0);

    let objective = interface
        .crossing_lines
        .iter()
        .map(|(line_id, orientation)| {
            let row = ptdf.line_row(line_id).unwrap();
            (f_ids[row], *orientation as f64)
        })
        .collect();
    lp.set_objective(objective);
    Ok(lp)
}

/// Solves the ITL LP on a single connected component and extracts flows,
/// injections, binding lines, and rating sensitivities.
pub fn compute_itl_component(
    network: &Network,
    ptdf: &PtdfMatrix,
    interface: &Interface,
    direction: Direction,
) -> Result<ItlResult> {
    let lp = build_itl_lp(ptdf, interface, direction, network)?;
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        // F = 0, G = 0 is always feasible and the objective is bounded by
        // the ratings of the crossing lines.
        LpStatus::Infeasible | LpStatus::Unbounded => {
            return Err(ItlError::Solver(format!(
                "ITL LP for {} {} returned {:?}; the problem is feasible and bounded by construction",
                interface.id(),
                direction.as_str(),
                sol.status
            )))
        }
    }
    let itl_mw = match direction {
        Direction::Forward => sol.objective_value,
        Direction::Reverse => -sol.objective_value,
    }
    .max(0.0);

    let mut flows = BTreeMap::new();
    let mut binding_lines = BTreeSet::new();
    let mut rating_duals = BTreeMap::new();
    for line_id in &ptdf.line_order {
        let var = lp.var_id(&flow_var(line_id)).unwrap();
        let flow = sol.value(var);
        let rating = network.lines[line_id].rating.unwrap();
        flows.insert(line_id.clone(), flow);
        if flow.abs() >= rating - binding_tol(rating) {
            binding_lines.insert(line_id.clone());
        }
        let dual = sol.reduced_costs[var].abs();
        rating_duals.insert(line_id.clone(), dual);
    }
    let mut injections = BTreeMap::new();
    for bus_id in &ptdf.bus_order {
        let var = lp.var_id(&injection_var(bus_id)).unwrap();
        injections.insert(bus_id.clone(), sol.value(var));
    }
    Ok(ItlResult {
        zone_a: interface.zone_a.clone(),
        zone_b: interface.zone_b.clone(),
        direction,
        itl_mw,
        flows,
        injections,
        binding_lines,
        rating_duals,
        rating_sum_mw: interface.rating_sum(network),
        notes: Vec::new(),
    })
}

/// The connected sub-networks relevant to an interface, each paired with the
/// crossing lines it contains. Applies the neighborhood filter to large
/// components when a [`PrepConfig`] is given.
fn component_problems(
    network: &Network,
    interface: &Interface,
    prep: Option<&PrepConfig>,
) -> Vec<(Network, Interface)> {
    let mut out = Vec::new();
    for component in connected_components(network) {
        let subnet = network.induced(&component);
        let crossing: Vec<(String, i8)> = interface
            .crossing_lines
            .iter()
            .filter(|(id, _)| subnet.lines.contains_key(id))
            .cloned()
            .collect();
        if crossing.is_empty() {
            continue;
        }
        let filtered = match prep {
            Some(config) => neighborhood_filter(&subnet, interface, config),
            None => subnet,
        };
        for sub_component in connected_components(&filtered) {
            let piece = filtered.induced(&sub_component);
            let piece_crossing: Vec<(String, i8)> = crossing
                .iter()
                .filter(|(id, _)| piece.lines.contains_key(id))
                .cloned()
                .collect();
            if piece_crossing.is_empty() {
                continue;
            }
            out.push((
                piece,
                Interface {
                    zone_a: interface.zone_a.clone(),
                    zone_b: interface.zone_b.clone(),
                    crossing_lines: piece_crossing,
                },
            ));
        }
    }
    out
}

/// Computes the ITL of one interface and direction on an arbitrary network,
/// splitting into connected components and summing the independent optima.
pub fn compute_itl(
    network: &Network,
    interface: &Interface,
    direction: Direction,
    prep: Option<&PrepConfig>,
) -> Result<ItlResult> {
    let problems = component_problems(network, interface, prep);
    if problems.is_empty() {
        return Err(ItlError::InterfaceMismatch {
            interface: interface.id(),
        });
    }
    let mut merged: Option<ItlResult> = None;
    let multi = problems.len() > 1;
    for (subnet, sub_interface) in &problems {
        let slack = subnet.buses.keys().next().unwrap().clone();
        let ptdf = compute_ptdf(subnet, &slack)?;
        let part = compute_itl_component(subnet, &ptdf, sub_interface, direction)?;
        merged = Some(match merged {
            None => part,
            Some(mut acc) => {
                acc.itl_mw += part.itl_mw;
                acc.flows.extend(part.flows);
                acc.injections.extend(part.injections);
                acc.binding_lines.extend(part.binding_lines);
                acc.rating_duals.extend(part.rating_duals);
                acc
            }
        });
    }
    let mut result = merged.unwrap();
    result.rating_sum_mw = interface.rating_sum(network);
    if multi {
        result
            .notes
            .push(format!("summed over {} electrical components", problems.len()));
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionChoice {
    Both,
    ForwardOnly,
    ReverseOnly,
}

impl DirectionChoice {
    pub fn directions(self) -> Vec<Direction> {
        match self {
            DirectionChoice::Both => vec![Direction::Forward, Direction::Reverse],
            DirectionChoice::ForwardOnly => vec![Direction::Forward],
            DirectionChoice::ReverseOnly => vec![Direction::Reverse],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub directions: DirectionChoice,
    /// When set, large components are neighborhood-filtered per interface.
    pub prep: Option<PrepConfig>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            directions: DirectionChoice::Both,
            prep: None,
        }
    }
}

/// One entry of a batch solve; per-interface failures are recorded here
/// rather than aborting the batch.
#[derive(Debug)]
pub struct InterfaceSolve {
    pub interface: Interface,
    pub direction: Direction,
    pub result: Result<ItlResult>,
}

/// Solves every interface of the network in the requested directions.
/// Solves run in parallel; the output order is deterministic (interface id,
/// then direction).
pub fn compute_all_itls(network: &Network, options: &SolveOptions) -> Vec<InterfaceSolve> {
    let interfaces = build_interfaces(network);
    let tasks: Vec<(Interface, Direction)> = interfaces
        .into_iter()
        .flat_map(|i| {
            options
                .directions
                .directions()
                .into_iter()
                .map(move |d| (i.clone(), d))
        })
        .collect();
    tasks
        .into_par_iter()
        .map(|(interface, direction)| {
            let result = compute_itl(network, &interface, direction, options.prep.as_ref());
            InterfaceSolve {
                interface,
                direction,
                result,
            }
        })
        .collect()
}

/// Lines ranked by the marginal ITL gain from raising their rating,
/// descending; zero-sensitivity lines are omitted and ties break by line id.
pub fn upgrade_supply_curve(result: &ItlResult) -> Vec<(String, f64)> {
    let mut curve: Vec<(String, f64)> = result
        .rating_duals
        .iter()
        .filter(|(_, &d)| d > 1e-9)
        .map(|(id, &d)| (id.clone(), d))
        .collect();
    curve.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    curve
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testnet::{bus, five_bus, line};

    fn interface_1_2() -> Interface {
        Interface {
            zone_a: "1".to_string(),
            zone_b: "2".to_string(),
            crossing_lines: vec![("A|D".to_string(), 1), ("C|D".to_string(), 1)],
        }
    }

    #[test]
    fn lp_shape_for_five_bus() {
        let net = five_bus();
        let ptdf = compute_ptdf(&net, "A").unwrap();
        let lp = build_itl_lp(&ptdf, &interface_1_2(), Direction::Forward, &net).unwrap();
        assert_eq!(lp.num_vars(), 11); // 6 F + 5 G
        assert_eq!(lp.num_constraints(), 7); // 6 PTDF rows + balance
        let objective: Vec<_> = lp.objective().to_vec();
        assert_eq!(objective.len(), 2);
        let names: Vec<&str> = objective
            .iter()
            .map(|(id, _)| lp.variables()[*id].name.as_str())
            .collect();
        assert_eq!(names, vec!["F:A|D", "F:C|D"]);
        assert!(objective.iter().all(|(_, c)| *c == 1.0));
    }

    #[test]
    fn unconstrained_buses_have_free_injections() {
        let net = five_bus();
        let ptdf = compute_ptdf(&net, "A").unwrap();
        let lp = build_itl_lp(&ptdf, &interface_1_2(), Direction::Forward, &net).unwrap();
        for v in lp.variables().iter().filter(|v| v.name.starts_with("G:")) {
            assert!(v.lower.is_infinite() && v.upper.is_infinite());
        }
    }

    #[test]
    fn transmission_only_network_has_zero_itl() {
        let mut net = five_bus();
        for bus in net.buses.values_mut() {
            bus.bus_type = BusType::Transmission;
        }
        let result =
            compute_itl(&net, &interface_1_2(), Direction::Forward, None).unwrap();
        assert!(result.itl_mw.abs() < 1e-9);
    }

    #[test]
    fn five_bus_forward_itl_is_719() {
        let net = five_bus();
        let result = compute_itl(&net, &interface_1_2(), Direction::Forward, None).unwrap();
        assert!((result.itl_mw - 719.0).abs() < 0.5, "itl = {}", result.itl_mw);
        for (line, expected) in [("C|D", 400.0), ("A|D", 319.0), ("A|E", 400.0), ("D|E", -240.0)] {
            let got = result.flows[line];
            assert!((got - expected).abs() < 0.5, "F({line}) = {got}");
        }
        assert!(result.binding_lines.contains("C|D"));
        assert!(result.binding_lines.contains("A|E"));
        assert!(result.binding_lines.contains("D|E"));
        assert!(!result.binding_lines.contains("A|D"));
        assert!((result.rating_sum_mw - 800.0).abs() < 1e-9);
    }

    #[test]
    fn five_bus_reverse_equals_forward_without_bus_types() {
        let net = five_bus();
        let fwd = compute_itl(&net, &interface_1_2(), Direction::Forward, None).unwrap();
        let rev = compute_itl(&net, &interface_1_2(), Direction::Reverse, None).unwrap();
        assert!((fwd.itl_mw - rev.itl_mw).abs() < 1e-6 * fwd.itl_mw.max(1.0));
    }

    #[test]
    fn single_line_interfaces() {
        let net = five_bus();
        let i23 = Interface {
            zone_a: "2".to_string(),
            zone_b: "3".to_string(),
            crossing_lines: vec![("D|E".to_string(), 1)],
        };
        let i13 = Interface {
            zone_a: "1".to_string(),
            zone_b: "3".to_string(),
            crossing_lines: vec![("A|E".to_string(), 1)],
        };
        let itl23 = compute_itl(&net, &i23, Direction::Forward, None).unwrap();
        let itl13 = compute_itl(&net, &i13, Direction::Forward, None).unwrap();
        assert!((itl23.itl_mw - 240.0).abs() < 0.5, "2||3 = {}", itl23.itl_mw);
        assert!((itl13.itl_mw - 400.0).abs() < 0.5, "1||3 = {}", itl13.itl_mw);
    }

    #[test]
    fn upgrade_curve_for_five_bus() {
        let net = five_bus();
        let result = compute_itl(&net, &interface_1_2(), Direction::Forward, None).unwrap();
        let curve = upgrade_supply_curve(&result);
        let lines: BTreeSet<&str> = curve.iter().map(|(id, _)| id.as_str()).collect();
        assert!(lines.contains("C|D"));
        assert!(lines.contains("A|E"));
        assert!(lines.contains("D|E"));
        assert!(!lines.contains("A|D"));
        for window in curve.windows(2) {
            assert!(window[0].1 >= window[1].1);
        }
    }

    #[test]
    fn fully_binding_single_line_has_unit_dual() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("A", "z1", BusType::Unconstrained));
        net.add_bus(bus("B", "z2", BusType::Unconstrained));
        net.add_line(line("A|B", "A", "B", 0.02, Some(100.0)));
        let interface = Interface {
            zone_a: "z1".to_string(),
            zone_b: "z2".to_string(),
            crossing_lines: vec![("A|B".to_string(), 1)],
        };
        let result = compute_itl(&net, &interface, Direction::Forward, None).unwrap();
        assert!((result.itl_mw - 100.0).abs() < 1e-6);
        let curve = upgrade_supply_curve(&result);
        assert_eq!(curve.len(), 1);
        assert!((curve[0].1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_itl_gives_empty_curve() {
        let mut net = five_bus();
        for bus in net.buses.values_mut() {
            bus.bus_type = BusType::Transmission;
        }
        let result = compute_itl(&net, &interface_1_2(), Direction::Forward, None).unwrap();
        assert!(upgrade_supply_curve(&result).is_empty());
    }

    #[test]
    fn slack_choice_does_not_change_itl() {
        let net = five_bus();
        let interface = interface_1_2();
        let mut values = Vec::new();
        for slack in ["A", "B", "C", "D", "E"] {
            let ptdf = compute_ptdf(&net, slack).unwrap();
            let r = compute_itl_component(&net, &ptdf, &interface, Direction::Forward).unwrap();
            values.push(r.itl_mw);
        }
        for v in &values {
            assert!((v - values[0]).abs() < 1e-6 * values[0].max(1.0));
        }
    }

    #[test]
    fn batch_solve_covers_all_interfaces_and_directions() {
        let net = five_bus();
        let solves = compute_all_itls(&net, &SolveOptions::default());
        assert_eq!(solves.len(), 6);
        assert!(solves.iter().all(|s| s.result.is_ok()));
    }

    #[test]
    fn injections_balance_and_respect_ratings() {
        let net = five_bus();
        let result = compute_itl(&net, &interface_1_2(), Direction::Forward, None).unwrap();
        let total: f64 = result.injections.values().sum();
        assert!(total.abs() < 1e-6);
        for (line_id, flow) in &result.flows {
            let rating = net.lines[line_id].rating.unwrap();
            assert!(flow.abs() <= rating + 1e-6, "{line_id}");
        }
    }
}
