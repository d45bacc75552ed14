//! Points on the unit sphere in (colatitude, longitude) form and the great-circle metric.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("colatitude {0} outside [0, pi]")]
    Colatitude(f64),
    #[error("longitude {0} outside [0, 2pi)")]
    Longitude(f64),
    #[error("grid axis `{0}` is empty")]
    EmptyAxis(&'static str),
    #[error("grid axis `{0}` is not strictly increasing at index {1}")]
    NotIncreasing(&'static str, usize),
}

/// A location on the unit sphere. `colat` is the polar angle from the north
/// pole, never geographic latitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    colat: f64,
    lon: f64,
}

impl SpherePoint {
    pub fn new(colat: f64, lon: f64) -> Result<Self, GeomError> {
        check_colat(colat)?;
        check_lon(lon)?;
        Ok(Self { colat, lon })
    }

    /// Accepts any finite longitude and reduces it into `[0, 2pi)`.
    pub fn normalized(colat: f64, lon: f64) -> Result<Self, GeomError> {
        if !lon.is_finite() {
            return Err(GeomError::Longitude(lon));
        }
        let mut reduced = lon.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2pi for tiny negative inputs
        if reduced >= TAU {
            reduced = 0.0;
        }
        Self::new(colat, reduced)
    }

    /// From geographic latitude/longitude in degrees.
    pub fn from_degrees(lat_deg: f64, lon_deg: f64) -> Result<Self, GeomError> {
        Self::normalized(colat_from_lat_deg(lat_deg), lon_deg.to_radians())
    }

    pub fn colat(&self) -> f64 {
        self.colat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Geographic latitude in degrees to colatitude in radians.
pub fn colat_from_lat_deg(lat_deg: f64) -> f64 {
    (90.0 - lat_deg).to_radians()
}

fn check_colat(colat: f64) -> Result<(), GeomError> {
    if (0.0..=PI).contains(&colat) {
        Ok(())
    } else {
        Err(GeomError::Colatitude(colat))
    }
}

fn check_lon(lon: f64) -> Result<(), GeomError> {
    if (0.0..TAU).contains(&lon) {
        Ok(())
    } else {
        Err(GeomError::Longitude(lon))
    }
}

/// Length of the shortest arc joining two points, from colatitudes and the
/// longitude lag `dlon = lon1 - lon2`.
pub fn great_circle_from_lag(colat1: f64, colat2: f64, dlon: f64) -> f64 {
    let s_lat = ((colat1 - colat2) / 2.0).sin();
    let s_lon = (dlon / 2.0).sin();
    let h = s_lat * s_lat + colat1.sin() * colat2.sin() * s_lon * s_lon;
    2.0 * h.clamp(0.0, 1.0).sqrt().asin()
}

pub fn great_circle_distance(p1: &SpherePoint, p2: &SpherePoint) -> f64 {
    great_circle_from_lag(p1.colat, p2.colat, p1.lon - p2.lon)
}

/// A tensor grid of colatitudes by longitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct LatLonGrid {
    colats: Vec<f64>,
    lons: Vec<f64>,
}

impl LatLonGrid {
    pub fn new(colats: Vec<f64>, lons: Vec<f64>) -> Result<Self, GeomError> {
        validate_axis("colats", &colats, check_colat)?;
        validate_axis("lons", &lons, check_lon)?;
        Ok(Self { colats, lons })
    }

    /// Colatitudes at the midpoints of `n_colat` equal cells of `(0, pi)` and
    /// longitudes `2pi k / n_lon`.
    pub fn uniform(n_colat: usize, n_lon: usize) -> Result<Self, GeomError> {
        if n_colat == 0 {
            return Err(GeomError::EmptyAxis("colats"));
        }
        if n_lon == 0 {
            return Err(GeomError::EmptyAxis("lons"));
        }
        let dc = PI / n_colat as f64;
        let colats = (0..n_colat).map(|i| (i as f64 + 0.5) * dc).collect();
        let dl = TAU / n_lon as f64;
        let lons = (0..n_lon).map(|j| j as f64 * dl).collect();
        Self::new(colats, lons)
    }

    /// Equispaced longitudes on a caller-chosen set of parallels.
    pub fn parallels(colats: Vec<f64>, n_lon: usize) -> Result<Self, GeomError> {
        if n_lon == 0 {
            return Err(GeomError::EmptyAxis("lons"));
        }
        let dl = TAU / n_lon as f64;
        Self::new(colats, (0..n_lon).map(|j| j as f64 * dl).collect())
    }

    pub fn colats(&self) -> &[f64] {
        &self.colats
    }

    pub fn lons(&self) -> &[f64] {
        &self.lons
    }

    pub fn n_colat(&self) -> usize {
        self.colats.len()
    }

    pub fn n_lon(&self) -> usize {
        self.lons.len()
    }

    pub fn len(&self) -> usize {
        self.colats.len() * self.lons.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize, j: usize) -> SpherePoint {
        SpherePoint {
            colat: self.colats[i],
            lon: self.lons[j],
        }
    }

    /// Row-major index of the grid node matching `p` within 1e-12, if any.
    pub fn locate(&self, p: &SpherePoint) -> Option<(usize, usize)> {
        let i = self.colat_index(p.colat)?;
        let j = self.lons.iter().position(|&l| (l - p.lon).abs() <= 1e-12)?;
        Some((i, j))
    }

    pub fn colat_index(&self, colat: f64) -> Option<usize> {
        self.colats.iter().position(|&c| (c - colat).abs() <= 1e-12)
    }
}

fn validate_axis(name: &'static str, values: &[f64], check: fn(f64) -> Result<(), GeomError>) -> Result<(), GeomError> {
    if values.is_empty() {
        return Err(GeomError::EmptyAxis(name));
    }
    for (k, &v) in values.iter().enumerate() {
        check(v)?;
        if k > 0 && values[k - 1] >= v {
            return Err(GeomError::NotIncreasing(name, k));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: f64, l: f64) -> SpherePoint {
        SpherePoint::new(c, l).unwrap()
    }

    #[test]
    fn distance_examples() {
        let p = pt(PI / 3.0, 1.0);
        assert_eq!(great_circle_distance(&p, &p), 0.0);
        let d = great_circle_distance(&pt(0.0, 0.0), &pt(PI, 0.0));
        assert!((d - PI).abs() < 1e-15);
        let d = great_circle_distance(&pt(PI / 2.0, 0.0), &pt(PI / 2.0, PI / 2.0));
        assert!((d - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn near_antipodal_is_finite() {
        let a = pt(PI / 2.0, 0.0);
        let b = pt(PI / 2.0, PI - 1e-17);
        let d = great_circle_distance(&a, &b);
        assert!(d.is_finite() && d <= PI);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SpherePoint::new(-1e-9, 0.0).is_err());
        assert!(SpherePoint::new(PI + 1e-9, 0.0).is_err());
        assert!(SpherePoint::new(1.0, TAU).is_err());
        assert!(SpherePoint::new(1.0, -0.1).is_err());
        assert!(SpherePoint::new(f64::NAN, 0.0).is_err());
        let p = SpherePoint::normalized(1.0, -PI / 2.0).unwrap();
        assert!((p.lon() - 1.5 * PI).abs() < 1e-15);
        let p = SpherePoint::normalized(1.0, -1e-300).unwrap();
        assert!(p.lon() < TAU);
    }

    #[test]
    fn degrees_convert_to_colatitude() {
        let p = SpherePoint::from_degrees(0.0, 180.0).unwrap();
        assert!((p.colat() - PI / 2.0).abs() < 1e-15);
        assert!((p.lon() - PI).abs() < 1e-15);
        let p = SpherePoint::from_degrees(90.0, -90.0).unwrap();
        assert_eq!(p.colat(), 0.0);
        assert!((p.lon() - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn uniform_grid_examples() {
        let g = LatLonGrid::uniform(1, 1).unwrap();
        assert_eq!(g.colats(), &[PI / 2.0]);
        assert_eq!(g.lons(), &[0.0]);

        let g = LatLonGrid::uniform(2, 4).unwrap();
        assert_eq!(g.colats(), &[PI / 4.0, 3.0 * PI / 4.0]);
        assert_eq!(g.lons(), &[0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);

        let g = LatLonGrid::uniform(500, 500).unwrap();
        assert_eq!(g.len(), 250_000);
        assert!(g.colats().windows(2).all(|w| w[0] < w[1]));
        assert!(g.colats().iter().all(|&c| c > 0.0 && c < PI));
        assert!(g.lons().iter().all(|&l| (0.0..TAU).contains(&l)));

        assert_eq!(LatLonGrid::uniform(0, 3), Err(GeomError::EmptyAxis("colats")));
        assert_eq!(LatLonGrid::uniform(3, 0), Err(GeomError::EmptyAxis("lons")));
    }

    #[test]
    fn explicit_grid_validation() {
        assert!(matches!(
            LatLonGrid::new(vec![1.0, 1.0], vec![0.0]),
            Err(GeomError::NotIncreasing("colats", 1))
        ));
        assert!(LatLonGrid::new(vec![1.0], vec![]).is_err());
        let g = LatLonGrid::new(vec![0.5, 1.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(g.locate(&pt(1.0, 2.0)), Some((1, 1)));
        assert_eq!(g.locate(&pt(1.0, 2.5)), None);
    }

    fn any_point() -> impl Strategy<Value = SpherePoint> {
        (0.0..=PI, 0.0..TAU).prop_map(|(c, l)| pt(c, l))
    }

    proptest! {
        #[test]
        fn metric_axioms(p in any_point(), q in any_point(), r in any_point()) {
            let dpq = great_circle_distance(&p, &q);
            prop_assert!(great_circle_distance(&p, &p).abs() <= 1e-12);
            prop_assert!((dpq - great_circle_distance(&q, &p)).abs() <= 1e-12);
            prop_assert!(dpq <= great_circle_distance(&p, &r) + great_circle_distance(&r, &q) + 1e-12);
            prop_assert!((0.0..=PI).contains(&dpq));
        }

        #[test]
        fn depends_on_longitude_lag_only(c1 in 0.0..=PI, c2 in 0.0..=PI, l1 in -10.0..10.0f64,
                                         l2 in -10.0..10.0f64, s in -10.0..10.0f64) {
            let a = great_circle_from_lag(c1, c2, l1 - l2);
            let b = great_circle_from_lag(c1, c2, (l1 + s) - (l2 + s));
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
