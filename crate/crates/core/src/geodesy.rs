//! Coordinates and great-circle distance.
//!
//! Distances use the haversine formula on a sphere of mean Earth radius
//! (IUGG mean radius R1 = 6371.0088 km). Against the WGS84 ellipsoid the
//! spherical model is off by at most ~0.5%, well inside the 161 km tolerance
//! geocoding evaluation works with.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Largest geocoding error used by the metrics: half of Earth's circumference, rounded.
pub const MAX_ERROR_KM: f64 = 20039.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("distance {0} km outside [0, {MAX_ERROR_KM}]")]
    Distance(f64),
}

/// A WGS84 latitude/longitude pair in decimal degrees.
///
/// Construction validates the ranges; out-of-range longitudes are rejected
/// rather than wrapped so that bad input data surfaces early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoordinate", into = "RawCoordinate")]
pub struct Coordinate {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCoordinate {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawCoordinate> for Coordinate {
    type Error = GeoError;

    fn try_from(raw: RawCoordinate) -> Result<Self, Self::Error> {
        Coordinate::new(raw.lat, raw.lon)
    }
}

impl From<Coordinate> for RawCoordinate {
    fn from(c: Coordinate) -> Self {
        RawCoordinate { lat: c.lat, lon: c.lon }
    }
}

impl Coordinate {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(Coordinate { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Great-circle distance to `other`.
    pub fn distance_to(&self, other: &Coordinate) -> DistanceKm {
        great_circle_distance(*self, *other)
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4})", self.lat, self.lon)
    }
}

/// A non-negative great-circle distance in kilometres, bounded by [`MAX_ERROR_KM`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistanceKm(f64);

impl DistanceKm {
    pub fn new(km: f64) -> Result<Self, GeoError> {
        if km.is_finite() && (0.0..=MAX_ERROR_KM).contains(&km) {
            Ok(DistanceKm(km))
        } else {
            Err(GeoError::Distance(km))
        }
    }

    pub fn km(self) -> f64 {
        self.0
    }
}

impl fmt::Display for DistanceKm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1} km", self.0)
    }
}

/// Haversine distance between two coordinates.
///
/// Exactly symmetric: only absolute coordinate differences enter the formula.
pub fn great_circle_distance(a: Coordinate, b: Coordinate) -> DistanceKm {
    let phi_a = a.lat.to_radians();
    let phi_b = b.lat.to_radians();
    let d_phi = (a.lat - b.lat).abs().to_radians();
    let d_lambda = (a.lon - b.lon).abs().to_radians();

    let s_phi = (d_phi / 2.0).sin();
    let s_lambda = (d_lambda / 2.0).sin();
    let h = (s_phi * s_phi + phi_a.cos() * phi_b.cos() * s_lambda * s_lambda).clamp(0.0, 1.0);
    let central_angle = 2.0 * h.sqrt().atan2((1.0 - h).sqrt());

    // pi * R < MAX_ERROR_KM, so the clamp only guards rounding.
    DistanceKm((EARTH_RADIUS_KM * central_angle).clamp(0.0, MAX_ERROR_KM))
}
