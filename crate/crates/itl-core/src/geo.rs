//! Great-circle geometry: haversine distances, point-to-segment distance,
//! and distance from a point to a geographic polygon.

use crate::network::Location;

/// Mean Earth radius in km (IUGG).
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance between two points in km (haversine formula).
pub fn haversine_km(p: Location, q: Location) -> f64 {
    let (lat1, lon1) = (p.lat.to_radians(), p.lon.to_radians());
    let (lat2, lon2) = (q.lat.to_radians(), q.lon.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let a = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

fn initial_bearing(p: Location, q: Location) -> f64 {
    let (lat1, lon1) = (p.lat.to_radians(), p.lon.to_radians());
    let (lat2, lon2) = (q.lat.to_radians(), q.lon.to_radians());
    let dlon = lon2 - lon1;
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    y.atan2(x)
}

/// Distance in km from point `p` to the great-circle segment `a`-`b`.
///
/// Uses the cross-track distance when the along-track projection falls inside
/// the segment, otherwise the nearer endpoint distance.
pub fn point_to_segment_km(p: Location, a: Location, b: Location) -> f64 {
    let d_ap = haversine_km(a, p);
    let d_bp = haversine_km(b, p);
    let d_ab = haversine_km(a, b);
    if d_ab < 1e-9 {
        return d_ap;
    }
    let bearing_ap = initial_bearing(a, p);
    let bearing_ab = initial_bearing(a, b);
    let delta = bearing_ap - bearing_ab;
    // Projection behind A.
    if delta.cos() < 0.0 {
        return d_ap;
    }
    let dxt = ((d_ap / EARTH_RADIUS_KM).sin() * delta.sin()).asin() * EARTH_RADIUS_KM;
    let cos_ratio = (d_ap / EARTH_RADIUS_KM).cos() / (dxt / EARTH_RADIUS_KM).cos();
    let dat = cos_ratio.clamp(-1.0, 1.0).acos() * EARTH_RADIUS_KM;
    // Projection beyond B.
    if dat > d_ab {
        return d_bp;
    }
    dxt.abs().min(d_ap).min(d_bp)
}

/// A closed polygon given as a ring of vertices (first vertex need not be
/// repeated at the end). Edges are treated as great-circle segments for
/// distance purposes and as planar segments for containment, which is
/// adequate at regional scale away from the antimeridian.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Location>,
}

impl Polygon {
    pub fn contains(&self, p: Location) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.lat > p.lat) != (b.lat > p.lat) {
                let lon_cross = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
                if p.lon < lon_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the polygon: 0 inside or on the boundary,
    /// otherwise the distance to the nearest edge.
    pub fn distance_km(&self, p: Location) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let n = self.vertices.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            best = best.min(point_to_segment_km(p, a, b));
        }
        best
    }
}
