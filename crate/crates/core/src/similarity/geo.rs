use crate::dataset::Venue;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Haversine central angle between two points given in degrees, in radians.
pub fn angular_distance(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    let (phi_a, phi_b) = (lat_a.to_radians(), lat_b.to_radians());
    let d_phi = phi_b - phi_a;
    let d_eta = (lon_b - lon_a).to_radians();
    let h = (d_phi / 2.0).sin().powi(2) + phi_a.cos() * phi_b.cos() * (d_eta / 2.0).sin().powi(2);
    // rounding can push h marginally past 1 for antipodal points
    2.0 * h.clamp(0.0, 1.0).sqrt().asin()
}

/// `1 / (1 + angle * R)`: 1 for co-located venues, approaching 0 with distance.
pub fn geo_similarity(a: &Venue, b: &Venue) -> f64 {
    let angle = angular_distance(a.latitude, a.longitude, b.latitude, b.longitude);
    1.0 / (1.0 + angle * EARTH_RADIUS_KM)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CategoryBag;

    fn at(lat: f64, lon: f64) -> Venue {
        Venue {
            id: "x".into(),
            latitude: lat,
            longitude: lon,
            categories: CategoryBag::new(),
            reviews: vec![],
        }
    }

    #[test]
    fn identical_points() {
        assert_eq!(geo_similarity(&at(46.0, 8.9), &at(46.0, 8.9)), 1.0);
    }

    #[test]
    fn one_degree_on_equator() {
        let s = geo_similarity(&at(0.0, 0.0), &at(0.0, 1.0));
        assert!((s - 0.008914).abs() < 1e-6, "{s}");
    }

    #[test]
    fn antipodes() {
        let angle = angular_distance(0.0, 0.0, 0.0, 180.0);
        assert!((angle - std::f64::consts::PI).abs() < 1e-12);
        let s = geo_similarity(&at(0.0, 0.0), &at(0.0, 180.0));
        let exact = 1.0 / (1.0 + std::f64::consts::PI * EARTH_RADIUS_KM);
        assert!((s - exact).abs() < 1e-15, "{s}");
        assert!((s - 4.996e-5).abs() < 1e-8, "{s}");
    }

    #[test]
    fn poles() {
        let angle = angular_distance(90.0, 0.0, -90.0, 45.0);
        assert!((angle - std::f64::consts::PI).abs() < 1e-9);
    }
}
