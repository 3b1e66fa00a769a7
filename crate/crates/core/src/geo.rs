//! Great-circle distances on a spherical Earth and polyline projection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;
use crate::units::{EARTH_RADIUS_KM, KM_PER_NM};

/// Geographic position in decimal degrees (WGS-84 assumed).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatLon<S> {
    pub lat: S,
    pub lon: S,
}

impl<S: Scalar> LatLon<S> {
    pub fn new(lat: S, lon: S) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && self.lat.abs() <= S::lit(90.0)
            && self.lon.abs() <= S::lit(180.0)
    }

    /// Point a fraction `t` of the way to `other`, interpolated linearly in degrees.
    pub fn lerp(&self, other: &Self, t: S) -> Self {
        Self::new(
            self.lat + (other.lat - self.lat) * t,
            self.lon + (other.lon - self.lon) * t,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeoError {
    #[error("route has no waypoints")]
    EmptyRoute,
}

/// Great-circle distance between two points, km.
pub fn haversine_km<S: Scalar>(a: LatLon<S>, b: LatLon<S>) -> S {
    let two = S::lit(2.0);
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlam = (b.lon - a.lon).to_radians();
    let h = (dphi / two).sin().powi(2) + phi1.cos() * phi2.cos() * (dlam / two).sin().powi(2);
    // rounding can push h marginally past 1 for antipodal points
    let h = h.min(S::one()).max(S::zero());
    two * S::lit(EARTH_RADIUS_KM) * h.sqrt().asin()
}

pub fn haversine_nm<S: Scalar>(a: LatLon<S>, b: LatLon<S>) -> S {
    haversine_km(a, b) / S::lit(KM_PER_NM)
}

/// Initial great-circle bearing from `a` to `b`, degrees in [0, 360).
pub fn initial_bearing_deg<S: Scalar>(a: LatLon<S>, b: LatLon<S>) -> S {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dlam = (b.lon - a.lon).to_radians();
    let y = dlam.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlam.cos();
    let deg = y.atan2(x).to_degrees();
    let full = S::lit(360.0);
    let b = (deg + full) % full;
    if b >= full {
        S::zero()
    } else {
        b
    }
}

/// Total polyline length, nautical miles.
pub fn route_length_nm<S: Scalar>(route: &[LatLon<S>]) -> S {
    route
        .windows(2)
        .map(|w| haversine_nm(w[0], w[1]))
        .fold(S::zero(), |acc, d| acc + d)
}

/// Projection of a position onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteProjection<S> {
    /// Index of the segment `route[segment]..route[segment + 1]`.
    pub segment: usize,
    /// Fraction along that segment, in [0, 1].
    pub fraction: S,
    pub point: LatLon<S>,
}

/// Nearest point on the nearest segment, ties broken by the earlier segment.
///
/// Segment-local geometry uses an equirectangular projection around the
/// query point; distances are then measured with haversine.
pub fn project_onto_route<S: Scalar>(
    route: &[LatLon<S>],
    pos: LatLon<S>,
) -> Result<RouteProjection<S>, GeoError> {
    match route.len() {
        0 => Err(GeoError::EmptyRoute),
        1 => Ok(RouteProjection {
            segment: 0,
            fraction: S::zero(),
            point: route[0],
        }),
        _ => {
            let kx = pos.lat.to_radians().cos();
            let mut best: Option<(S, RouteProjection<S>)> = None;
            for (i, w) in route.windows(2).enumerate() {
                let (a, b) = (w[0], w[1]);
                let ax = (a.lon - pos.lon) * kx;
                let ay = a.lat - pos.lat;
                let dx = (b.lon - a.lon) * kx;
                let dy = b.lat - a.lat;
                let len2 = dx * dx + dy * dy;
                let t = if len2 > S::zero() {
                    (-(ax * dx + ay * dy) / len2).max(S::zero()).min(S::one())
                } else {
                    S::zero()
                };
                let point = a.lerp(&b, t);
                let d = haversine_km(point, pos);
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((
                        d,
                        RouteProjection {
                            segment: i,
                            fraction: t,
                            point,
                        },
                    ));
                }
            }
            Ok(best.map(|(_, p)| p).expect("at least one segment"))
        }
    }
}

/// Along-route distance from the projection of `pos` to the final waypoint, nm.
pub fn route_remaining_nm<S: Scalar>(route: &[LatLon<S>], pos: LatLon<S>) -> Result<S, GeoError> {
    let proj = project_onto_route(route, pos)?;
    if route.len() == 1 {
        return Ok(S::zero());
    }
    let rest = route_length_nm(&route[proj.segment + 1..]);
    Ok(haversine_nm(proj.point, route[proj.segment + 1]) + rest)
}

/// Position reached after travelling `distance_nm` along the route from its start.
/// Clamps to the final waypoint.
pub fn point_along_route<S: Scalar>(route: &[LatLon<S>], distance_nm: S) -> Option<(LatLon<S>, usize)> {
    let first = *route.first()?;
    if route.len() == 1 || distance_nm <= S::zero() {
        return Some((first, 0));
    }
    let mut left = distance_nm;
    for (i, w) in route.windows(2).enumerate() {
        let leg = haversine_nm(w[0], w[1]);
        if left <= leg && leg > S::zero() {
            return Some((w[0].lerp(&w[1], left / leg), i));
        }
        left = left - leg;
    }
    Some((*route.last()?, route.len() - 2))
}
