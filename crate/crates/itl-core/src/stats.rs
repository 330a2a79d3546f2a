//! Summary statistics over a batch of ITL results: direction asymmetry
//! ratios, ITL-to-rating-sum ratios per direction and contingency level, and
//! n-1 vs n-0 differences. Everything here is computed from the same rows
//! that land in itl.csv, so stats can be recomputed from that file alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::solver::Direction;

/// Guard against division by a zero lower-direction ITL.
pub const RATIO_EPSILON: f64 = 1e-9;

/// Contingency level of a result row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    N0,
    N1,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::N0 => "n0",
            Level::N1 => "n1",
        }
    }
}

/// One itl.csv-shaped observation.
#[derive(Debug, Clone)]
pub struct ItlRecord {
    pub interface: String,
    pub direction: Direction,
    pub level: Level,
    pub itl_mw: f64,
    pub rating_sum_mw: f64,
}

/// A named scalar statistic; the stats.csv contract is a flat list of these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatRow {
    pub metric: String,
    pub value: f64,
}

/// Aggregate statistics in the reporting style of the source distributions:
/// medians and threshold fractions rather than full histograms. Serialized
/// only through [`SummaryStats::rows`] (tuple map keys do not fit JSON).
#[derive(Debug, Clone, Default)]
pub struct SummaryStats {
    /// max(fwd, rev) / max(min(fwd, rev), eps) per interface, at n-0.
    pub direction_ratios: Vec<f64>,
    pub median_direction_ratio: Option<f64>,
    /// Fraction of interfaces whose direction ratio is <= 1.05.
    pub fraction_direction_ratio_le_1_05: Option<f64>,
    /// Fraction of interfaces whose direction ratio exceeds 2.
    pub fraction_direction_ratio_gt_2: Option<f64>,
    /// ITL / rating sum, keyed by (level, direction).
    pub rating_ratio_median: BTreeMap<(Level, Direction), f64>,
    /// Fraction of rows whose ITL equals the full rating sum (within 1e-6
    /// relative), per level and direction.
    pub fraction_at_rating_sum: BTreeMap<(Level, Direction), f64>,
    /// Fraction of rows with ITL below half the rating sum.
    pub fraction_below_half_rating: BTreeMap<(Level, Direction), f64>,
    /// Fraction of interface-directions whose n-1 ITL is exactly zero.
    pub fraction_zero_n1: Option<f64>,
    /// n1 - n0 per interface-direction (MW, nonpositive up to tolerance).
    pub n1_minus_n0: Vec<f64>,
    pub median_n1_minus_n0: Option<f64>,
    /// n1 / max(n0, eps) per interface-direction.
    pub median_n1_over_n0: Option<f64>,
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn fraction(values: &[f64], pred: impl Fn(f64) -> bool) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64)
    }
}

/// Computes [`SummaryStats`] from itl.csv-shaped rows. Rows missing a
/// counterpart (e.g. a forward ITL without a reverse one) simply drop out of
/// the paired statistics.
pub fn compute_summary(records: &[ItlRecord]) -> SummaryStats {
    let mut stats = SummaryStats::default();

    // Index by (interface, direction, level).
    let mut by_key: BTreeMap<(&str, Direction, Level), &ItlRecord> = BTreeMap::new();
    let mut interfaces: Vec<&str> = Vec::new();
    for r in records {
        by_key.insert((r.interface.as_str(), r.direction, r.level), r);
        if !interfaces.contains(&r.interface.as_str()) {
            interfaces.push(r.interface.as_str());
        }
    }

    for iface in &interfaces {
        let fwd = by_key.get(&(iface, Direction::Forward, Level::N0));
        let rev = by_key.get(&(iface, Direction::Reverse, Level::N0));
        if let (Some(f), Some(r)) = (fwd, rev) {
            let hi = f.itl_mw.max(r.itl_mw);
            let lo = f.itl_mw.min(r.itl_mw);
            stats.direction_ratios.push(hi / lo.max(RATIO_EPSILON));
        }
    }
    stats.median_direction_ratio = median(&stats.direction_ratios);
    stats.fraction_direction_ratio_le_1_05 = fraction(&stats.direction_ratios, |v| v <= 1.05);
    stats.fraction_direction_ratio_gt_2 = fraction(&stats.direction_ratios, |v| v > 2.0);

    // Rating-sum ratios per level and direction.
    let mut ratio_groups: BTreeMap<(Level, Direction), Vec<f64>> = BTreeMap::new();
    for r in records {
        if r.rating_sum_mw > 0.0 {
            ratio_groups
                .entry((r.level, r.direction))
                .or_default()
                .push(r.itl_mw / r.rating_sum_mw);
        }
    }
    for (key, ratios) in &ratio_groups {
        if let Some(m) = median(ratios) {
            stats.rating_ratio_median.insert(*key, m);
        }
        if let Some(f) = fraction(ratios, |v| (v - 1.0).abs() <= 1e-6) {
            stats.fraction_at_rating_sum.insert(*key, f);
        }
        if let Some(f) = fraction(ratios, |v| v < 0.5) {
            stats.fraction_below_half_rating.insert(*key, f);
        }
    }

    // n-1 vs n-0, paired per interface-direction.
    let mut n1_values: Vec<f64> = Vec::new();
    let mut n1_over_n0: Vec<f64> = Vec::new();
    for ((iface, dir, level), r) in &by_key {
        if *level != Level::N1 {
            continue;
        }
        n1_values.push(r.itl_mw);
        if let Some(n0) = by_key.get(&(iface, *dir, Level::N0)) {
            stats.n1_minus_n0.push(r.itl_mw - n0.itl_mw);
            n1_over_n0.push(r.itl_mw / n0.itl_mw.max(RATIO_EPSILON));
        }
    }
    stats.fraction_zero_n1 = fraction(&n1_values, |v| v == 0.0);
    stats.median_n1_minus_n0 = median(&stats.n1_minus_n0);
    stats.median_n1_over_n0 = median(&n1_over_n0);

    stats
}

impl SummaryStats {
    /// Flattens the summary into metric/value rows for stats.csv, in a fixed
    /// deterministic order.
    pub fn rows(&self) -> Vec<StatRow> {
        let mut rows = Vec::new();
        let mut push = |metric: String, value: Option<f64>| {
            if let Some(v) = value {
                rows.push(StatRow { metric, value: v });
            }
        };
        push(
            "median_direction_ratio".into(),
            self.median_direction_ratio,
        );
        push(
            "fraction_direction_ratio_le_1.05".into(),
            self.fraction_direction_ratio_le_1_05,
        );
        push(
            "fraction_direction_ratio_gt_2".into(),
            self.fraction_direction_ratio_gt_2,
        );
        for (map, name) in [
            (&self.rating_ratio_median, "median_itl_over_rating_sum"),
            (&self.fraction_at_rating_sum, "fraction_at_rating_sum"),
            (
                &self.fraction_below_half_rating,
                "fraction_below_half_rating_sum",
            ),
        ] {
            for ((level, dir), v) in map.iter() {
                push(
                    format!("{name}_{}_{}", level.as_str(), dir.as_str()),
                    Some(*v),
                );
            }
        }
        push("fraction_zero_n1".into(), self.fraction_zero_n1);
        push("median_n1_minus_n0_mw".into(), self.median_n1_minus_n0);
        push("median_n1_over_n0".into(), self.median_n1_over_n0);
        rows
    }
}
