//! Spherical geometry on the unit sphere and the Earth's surface.

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Unit vector for a (longitude, latitude) pair in degrees.
pub fn to_spherical(lon: f64, lat: f64) -> [f64; 3] {
    let (lon, lat) = (lon.to_radians(), lat.to_radians());
    [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
}

/// Great-circle distance in km, from the chord between unit vectors.
pub fn great_circle_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let p = to_spherical(a.0, a.1);
    let q = to_spherical(b.0, b.1);
    let chord = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
    2.0 * (chord / 2.0).min(1.0).asin() * EARTH_RADIUS_KM
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn reference_points() {
        assert!(close(to_spherical(0.0, 0.0), [1.0, 0.0, 0.0]));
        assert!(close(to_spherical(90.0, 0.0), [0.0, 1.0, 0.0]));
        assert!(close(to_spherical(45.0, 45.0), [0.5, 0.5, 2f64.sqrt() / 2.0]));
    }

    #[test]
    fn one_degree_at_equator() {
        let d = great_circle_km((0.0, 0.0), (1.0, 0.0));
        let expected = EARTH_RADIUS_KM * 1f64.to_radians();
        assert!((d - expected).abs() < 1e-9);
        assert!((d - 111.19).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn unit_norm(lon in -180.0f64..180.0, lat in -90.0f64..=90.0) {
            let p = to_spherical(lon, lat);
            let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
