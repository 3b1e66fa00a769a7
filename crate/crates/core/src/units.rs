//! Unit conversion constants.

/// Metres per second in one knot.
pub const KNOT_MPS: f64 = 0.514444;
/// Metres in one nautical mile.
pub const NAUTICAL_MILE_M: f64 = 1852.0;
/// Mean Earth radius used by all great-circle computations, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

pub const KM_PER_NM: f64 = NAUTICAL_MILE_M / 1000.0;

#[inline]
pub fn km_to_nm(km: f64) -> f64 {
    km / KM_PER_NM
}

#[inline]
pub fn nm_to_km(nm: f64) -> f64 {
    nm * KM_PER_NM
}

#[inline]
pub fn knots_to_mps(kn: f64) -> f64 {
    kn * KNOT_MPS
}

#[inline]
pub fn mps_to_knots(mps: f64) -> f64 {
    mps / KNOT_MPS
}
