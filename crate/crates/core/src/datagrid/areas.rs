//! Ocean areas used to group training batches.

use serde::{Deserialize, Serialize};

/// Closed box `[lon0, lat0, lon1, lat1]` in degrees, with `lon0 <= lon1`.
pub type Rect = [f64; 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub id: usize,
    pub name: String,
    pub rects: Vec<Rect>,
}

impl Area {
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        self.rects
            .iter()
            .any(|r| lon >= r[0] && lon <= r[2] && lat >= r[1] && lat <= r[3])
    }
}

/// Ordered area list; lookups return the first area containing the point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AreaTable {
    pub areas: Vec<Area>,
}

const DEFAULT_AREAS: [(&str, &[Rect]); 27] = [
    ("Mediterranean Sea", &[[-6.0, 30.0, 27.0, 46.0], [27.0, 30.0, 36.0, 38.0]]),
    ("Black Sea", &[[27.0, 40.0, 42.0, 47.5]]),
    ("Baltic Sea", &[[9.0, 53.0, 30.0, 66.0]]),
    ("Red Sea", &[[32.0, 12.0, 44.0, 30.0]]),
    ("Persian Gulf", &[[47.0, 23.0, 57.0, 31.0]]),
    ("Hudson Bay", &[[-95.0, 51.0, -76.0, 66.0]]),
    ("Gulf of Mexico", &[[-98.0, 18.0, -81.0, 31.0]]),
    ("Caribbean Sea", &[[-88.0, 8.0, -60.0, 22.0]]),
    ("Sea of Okhotsk", &[[135.0, 43.0, 163.0, 62.0]]),
    ("Sea of Japan", &[[127.0, 33.0, 142.0, 52.0]]),
    ("South China Sea", &[[99.0, -3.0, 122.0, 25.0]]),
    ("Bering Sea", &[[160.0, 52.0, 180.0, 66.0], [-180.0, 52.0, -157.0, 66.0]]),
    ("Arabian Sea", &[[45.0, 0.0, 78.0, 25.0]]),
    ("Bay of Bengal", &[[78.0, 0.0, 100.0, 23.0]]),
    ("Arctic Ocean", &[[-180.0, 66.0, 180.0, 90.0]]),
    ("Subpolar North Atlantic", &[[-80.0, 45.0, 20.0, 66.0]]),
    ("Subtropical North Atlantic", &[[-100.0, 15.0, 0.0, 45.0]]),
    ("Tropical Atlantic", &[[-70.0, -15.0, 20.0, 15.0]]),
    ("South Atlantic", &[[-70.0, -50.0, 20.0, -15.0]]),
    ("Subpolar North Pacific", &[[120.0, 45.0, 180.0, 66.0], [-180.0, 45.0, -100.0, 66.0]]),
    ("Subtropical North Pacific", &[[100.0, 15.0, 180.0, 45.0], [-180.0, 15.0, -100.0, 45.0]]),
    ("Tropical Pacific", &[[100.0, -15.0, 180.0, 15.0], [-180.0, -15.0, -70.0, 15.0]]),
    ("South Pacific", &[[140.0, -50.0, 180.0, -15.0], [-180.0, -50.0, -70.0, -15.0]]),
    ("Tropical Indian Ocean", &[[20.0, -15.0, 120.0, 0.0]]),
    ("South Indian Ocean", &[[20.0, -50.0, 140.0, -15.0]]),
    ("Southern Ocean", &[[-180.0, -90.0, 180.0, -50.0]]),
    ("World Ocean", &[[-180.0, -90.0, 180.0, 90.0]]),
];

impl Default for AreaTable {
    /// 27 boxes approximating the WOD18 basins, marginal seas first, then a global catch-all.
    fn default() -> Self {
        Self {
            areas: DEFAULT_AREAS
                .iter()
                .enumerate()
                .map(|(id, (name, rects))| Area {
                    id,
                    name: name.to_string(),
                    rects: rects.to_vec(),
                })
                .collect(),
        }
    }
}

impl AreaTable {
    /// One area covering the whole globe.
    pub fn global() -> Self {
        Self {
            areas: vec![Area {
                id: 0,
                name: "World Ocean".into(),
                rects: vec![[-180.0, -90.0, 180.0, 90.0]],
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    /// Id of the first area containing the point, or the last area's id when none does.
    pub fn assign_area(&self, lon: f64, lat: f64) -> usize {
        self.areas
            .iter()
            .find(|a| a.contains(lon, lat))
            .or(self.areas.last())
            .map_or(0, |a| a.id)
    }

    /// Position of `id` in the table, used to index per-area arrays.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.areas.iter().position(|a| a.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_match_wins() {
        let t = AreaTable::default();
        assert_eq!(t.len(), 27);
        assert_eq!(t.assign_area(30.0, 43.0), 1);
        assert_eq!(t.assign_area(-30.0, -30.0), 18);
        assert_eq!(t.assign_area(179.5, 55.0), 11);
        assert_eq!(t.assign_area(-179.5, 55.0), 11);
    }

    #[test]
    fn default_table_is_total() {
        let t = AreaTable::default();
        for i in 0..=360 {
            for j in 0..=180 {
                let id = t.assign_area(-180.0 + i as f64, -90.0 + j as f64);
                assert!(id < t.len());
            }
        }
    }
}
