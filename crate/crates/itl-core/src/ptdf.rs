//! PTDF computation: signed incidence, reduced susceptance factorization,
//! and recomputation after a line outage.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{ItlError, Result};
use crate::network::{connected_components, Network};

/// Signed incidence of a connected network: +1 at each line's starting bus,
/// -1 at its ending bus, with deterministic line and bus orderings.
#[derive(Debug, Clone)]
pub struct Incidence {
    /// Per line: (starting bus index, ending bus index) into `bus_order`.
    pub rows: Vec<(usize, usize)>,
    pub line_order: Vec<String>,
    pub bus_order: Vec<String>,
}

/// Dense L x B sensitivity matrix from bus injections to line flows.
///
/// The slack-bus column is identically zero; injections are implicitly
/// balanced at the slack.
#[derive(Debug, Clone)]
pub struct PtdfMatrix {
    pub values: DMatrix<f64>,
    pub slack_bus: String,
    pub line_order: Vec<String>,
    pub bus_order: Vec<String>,
    line_index: BTreeMap<String, usize>,
    bus_index: BTreeMap<String, usize>,
}

impl PtdfMatrix {
    pub fn entry(&self, line_id: &str, bus_id: &str) -> Option<f64> {
        let l = *self.line_index.get(line_id)?;
        let b = *self.bus_index.get(bus_id)?;
        Some(self.values[(l, b)])
    }

    pub fn line_row(&self, line_id: &str) -> Option<usize> {
        self.line_index.get(line_id).copied()
    }

    pub fn bus_col(&self, bus_id: &str) -> Option<usize> {
        self.bus_index.get(bus_id).copied()
    }
}

fn connectivity_error(network: &Network) -> ItlError {
    let components = connected_components(network);
    let summary = components
        .iter()
        .map(|c| format!("{{{}}}", c.iter().cloned().collect::<Vec<_>>().join(", ")))
        .collect::<Vec<_>>()
        .join("; ");
    ItlError::Connectivity(format!("{} components: {}", components.len(), summary))
}

/// Builds the signed incidence description of a connected network.
pub fn build_incidence(network: &Network) -> Result<Incidence> {
    if connected_components(network).len() > 1 {
        return Err(connectivity_error(network));
    }
    let bus_order: Vec<String> = network.buses.keys().cloned().collect();
    let bus_index: BTreeMap<&str, usize> = bus_order
        .iter()
        .enumerate()
        .map(|(i, b)| (b.as_str(), i))
        .collect();
    let line_order: Vec<String> = network.lines.keys().cloned().collect();
    let rows = line_order
        .iter()
        .map(|id| {
            let line = &network.lines[id];
            (
                bus_index[line.from_bus.as_str()],
                bus_index[line.to_bus.as_str()],
            )
        })
        .collect();
    Ok(Incidence {
        rows,
        line_order,
        bus_order,
    })
}

/// Computes the PTDF matrix of a connected network for a given slack bus.
///
/// PTDF = D * A * Btilde^-1 (zero-padded at the slack column), where D is the
/// diagonal of inverse reactances, A the incidence, and Btilde the nodal
/// susceptance matrix with the slack row and column removed. Btilde is
/// factorized (Cholesky) and solved against the incidence right-hand sides
/// rather than inverted explicitly.
pub fn compute_ptdf(network: &Network, slack_bus: &str) -> Result<PtdfMatrix> {
    if !network.buses.contains_key(slack_bus) {
        return Err(ItlError::UnknownElement(slack_bus.to_string()));
    }
    for line in network.lines.values() {
        match line.reactance {
            Some(x) if x > 0.0 => {}
            _ => {
                return Err(ItlError::Validation(format!(
                    "line {} has missing or nonpositive reactance",
                    line.id
                )))
            }
        }
    }
    let incidence = build_incidence(network)?;
    let n_bus = incidence.bus_order.len();
    let n_line = incidence.line_order.len();
    let slack_col = incidence
        .bus_order
        .iter()
        .position(|b| b == slack_bus)
        .unwrap();

    // Column map skipping the slack bus.
    let reduced_col: Vec<Option<usize>> = (0..n_bus)
        .map(|i| {
            if i == slack_col {
                None
            } else if i < slack_col {
                Some(i)
            } else {
                Some(i - 1)
            }
        })
        .collect();
    let n_red = n_bus - 1;

    let mut values = DMatrix::zeros(n_line, n_bus);
    if n_red > 0 && n_line > 0 {
        // Weighted reduced incidence: rows scaled by 1/x.
        let mut weighted = DMatrix::zeros(n_line, n_red);
        let mut btilde = DMatrix::zeros(n_red, n_red);
        for (l, &(from, to)) in incidence.rows.iter().enumerate() {
            let x = network.lines[&incidence.line_order[l]].reactance.unwrap();
            let w = 1.0 / x;
            if let Some(f) = reduced_col[from] {
                weighted[(l, f)] = w;
                btilde[(f, f)] += w;
            }
            if let Some(t) = reduced_col[to] {
                weighted[(l, t)] = -w;
                btilde[(t, t)] += w;
            }
            if let (Some(f), Some(t)) = (reduced_col[from], reduced_col[to]) {
                btilde[(f, t)] -= w;
                btilde[(t, f)] -= w;
            }
        }
        let chol = nalgebra::Cholesky::new(btilde).ok_or_else(|| connectivity_error(network))?;
        // PTDF_red^T = Btilde^-1 * weighted^T.
        let solved = chol.solve(&weighted.transpose());
        let ptdf_red = solved.transpose();
        for l in 0..n_line {
            for b in 0..n_bus {
                if let Some(r) = reduced_col[b] {
                    values[(l, b)] = ptdf_red[(l, r)];
                }
            }
        }
    }

    let line_index = incidence
        .line_order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    let bus_index = incidence
        .bus_order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    Ok(PtdfMatrix {
        values,
        slack_bus: slack_bus.to_string(),
        line_order: incidence.line_order,
        bus_order: incidence.bus_order,
        line_index,
        bus_index,
    })
}

/// PTDF of the network with one line removed. If the removal splits the
/// component, one PTDF per resulting component is returned; the original
/// slack is kept where possible and each other component uses its
/// alphanumerically first bus.
pub fn remove_line_recompute(
    network: &Network,
    line_id: &str,
    slack_bus: &str,
) -> Result<Vec<PtdfMatrix>> {
    if !network.lines.contains_key(line_id) {
        return Err(ItlError::UnknownElement(line_id.to_string()));
    }
    let reduced = network.without_line(line_id);
    let mut out = Vec::new();
    for component in connected_components(&reduced) {
        let subnet = reduced.induced(&component);
        let slack = if component.contains(slack_bus) {
            slack_bus.to_string()
        } else {
            component.iter().next().unwrap().clone()
        };
        out.push(compute_ptdf(&subnet, &slack)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::BusType;
    use crate::testnet::{bus, five_bus, line};

    #[test]
    fn incidence_of_five_bus() {
        let inc = build_incidence(&five_bus()).unwrap();
        assert_eq!(inc.line_order.len(), 6);
        assert_eq!(inc.bus_order.len(), 5);
        // One +1 and one -1 per row, e.g. A|B -> (+1 at A, -1 at B).
        let ab = inc.line_order.iter().position(|l| l == "A|B").unwrap();
        let a = inc.bus_order.iter().position(|b| b == "A").unwrap();
        let b = inc.bus_order.iter().position(|b| b == "B").unwrap();
        assert_eq!(inc.rows[ab], (a, b));
    }

    #[test]
    fn isolated_bus_is_a_connectivity_error() {
        let mut net = five_bus();
        net.add_bus(bus("Z", "9", BusType::Unconstrained));
        assert!(matches!(
            build_incidence(&net),
            Err(ItlError::Connectivity(_))
        ));
    }

    /// Reference values for the 5-bus system with slack A.
    const FIVE_BUS_PTDF: [(&str, [f64; 5]); 6] = [
        ("A|B", [0.0, -0.6698, -0.5429, -0.1939, -0.0344]),
        ("B|C", [0.0, 0.3302, -0.5429, -0.1939, -0.0344]),
        ("C|D", [0.0, 0.3302, 0.4571, -0.1939, -0.0344]),
        ("D|E", [0.0, 0.1509, 0.2090, 0.3685, -0.1120]),
        ("A|E", [0.0, -0.1509, -0.2090, -0.3685, -0.8880]),
        ("A|D", [0.0, -0.1792, -0.2481, -0.4376, -0.0776]),
    ];

    #[test]
    fn five_bus_ptdf_matches_reference() {
        let ptdf = compute_ptdf(&five_bus(), "A").unwrap();
        for (line_id, expected) in FIVE_BUS_PTDF {
            for (bus_id, want) in ["A", "B", "C", "D", "E"].iter().zip(expected) {
                let got = ptdf.entry(line_id, bus_id).unwrap();
                assert!(
                    (got - want).abs() < 1e-3,
                    "p({line_id},{bus_id}) = {got}, expected {want}"
                );
            }
        }
    }

    #[test]
    fn slack_column_is_zero() {
        for slack in ["A", "B", "C", "D", "E"] {
            let ptdf = compute_ptdf(&five_bus(), slack).unwrap();
            for line_id in &ptdf.line_order {
                assert_eq!(ptdf.entry(line_id, slack).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn equal_reactance_triangle_by_superposition() {
        let mut net = Network::new(100.0);
        for id in ["A", "B", "C"] {
            net.add_bus(bus(id, "z", BusType::Unconstrained));
        }
        net.add_line(line("A|B", "A", "B", 0.05, Some(100.0)));
        net.add_line(line("B|C", "B", "C", 0.05, Some(100.0)));
        net.add_line(line("C|A", "C", "A", 0.05, Some(100.0)));
        let ptdf = compute_ptdf(&net, "A").unwrap();
        assert!((ptdf.entry("A|B", "B").unwrap() + 2.0 / 3.0).abs() < 1e-12);
        assert!((ptdf.entry("B|C", "B").unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((ptdf.entry("C|A", "B").unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn slack_invariance_of_differences() {
        let net = five_bus();
        let p1 = compute_ptdf(&net, "A").unwrap();
        let p2 = compute_ptdf(&net, "D").unwrap();
        for line_id in &p1.line_order {
            for b in ["A", "B", "C", "D", "E"] {
                for b2 in ["A", "B", "C", "D", "E"] {
                    let d1 = p1.entry(line_id, b).unwrap() - p1.entry(line_id, b2).unwrap();
                    let d2 = p2.entry(line_id, b).unwrap() - p2.entry(line_id, b2).unwrap();
                    assert!((d1 - d2).abs() < 1e-9, "{line_id} {b} {b2}");
                }
            }
        }
    }

    #[test]
    fn balanced_injection_satisfies_nodal_balance() {
        let net = five_bus();
        let ptdf = compute_ptdf(&net, "A").unwrap();
        // Balanced injection: +100 at B, +50 at C, -150 at E.
        let mut injection = vec![0.0; ptdf.bus_order.len()];
        injection[ptdf.bus_col("B").unwrap()] = 100.0;
        injection[ptdf.bus_col("C").unwrap()] = 50.0;
        injection[ptdf.bus_col("E").unwrap()] = -150.0;
        let flows: Vec<f64> = (0..ptdf.line_order.len())
            .map(|l| {
                (0..ptdf.bus_order.len())
                    .map(|b| ptdf.values[(l, b)] * injection[b])
                    .sum()
            })
            .collect();
        for (bi, bus_id) in ptdf.bus_order.iter().enumerate() {
            let mut net_out = 0.0;
            for (li, line_id) in ptdf.line_order.iter().enumerate() {
                let line = &net.lines[line_id];
                if &line.from_bus == bus_id {
                    net_out += flows[li];
                }
                if &line.to_bus == bus_id {
                    net_out -= flows[li];
                }
            }
            assert!(
                (net_out - injection[bi]).abs() < 1e-6,
                "bus {bus_id}: {net_out} vs {}",
                injection[bi]
            );
        }
    }

    #[test]
    fn radial_line_ptdf_is_unity() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("A", "z", BusType::Unconstrained));
        net.add_bus(bus("B", "z", BusType::Unconstrained));
        net.add_bus(bus("C", "z", BusType::Unconstrained));
        net.add_line(line("A|B", "A", "B", 0.02, Some(100.0)));
        net.add_line(line("B|C", "B", "C", 0.03, Some(100.0)));
        let ptdf = compute_ptdf(&net, "A").unwrap();
        assert!((ptdf.entry("B|C", "C").unwrap() + 1.0).abs() < 1e-12);
        assert!((ptdf.entry("A|B", "C").unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn removal_keeps_connected_network_whole() {
        let ptdfs = remove_line_recompute(&five_bus(), "D|E", "A").unwrap();
        assert_eq!(ptdfs.len(), 1);
        assert_eq!(ptdfs[0].line_order.len(), 5);
        assert!(!ptdfs[0].line_order.contains(&"D|E".to_string()));
    }

    #[test]
    fn removal_splitting_two_bus_network_yields_singletons() {
        let mut net = Network::new(100.0);
        net.add_bus(bus("A", "z", BusType::Unconstrained));
        net.add_bus(bus("B", "z", BusType::Unconstrained));
        net.add_line(line("A|B", "A", "B", 0.02, Some(100.0)));
        let ptdfs = remove_line_recompute(&net, "A|B", "A").unwrap();
        assert_eq!(ptdfs.len(), 2);
        assert!(ptdfs.iter().all(|p| p.line_order.is_empty()));
    }
}
