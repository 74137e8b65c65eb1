mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_grid, brute_metrics, check_snapshots, close, random_world};
use oxyrecon::datagrid::{grid_records, Bathymetry, Dims, GridConfig, Record, SourceDb, Variable};
use oxyrecon::evalzone::metrics;
use oxyrecon::oceangraph::{proximity_neighbors, GraphConfig, GraphGrids, NodeKey};
use oxyrecon::training::{rebalance_areas, reconstruction_loss};

fn small_dims() -> impl Strategy<Value = Dims> {
    (2usize..=6, 2usize..=6, 1usize..=3, 1usize..=5).prop_map(|(l, g, d, t)| Dims::new(l, g, d, t))
}

fn graph_config() -> impl Strategy<Value = GraphConfig> {
    (1usize..=2, 1usize..=2, 0.0f64..=1.0, 1.0f64..3.5, 1usize..=8, 1usize..=3).prop_map(
        |(delta, depth_radius, threshold, factor, max_hubs, half_window)| GraphConfig {
            delta,
            depth_radius,
            completeness_threshold: (threshold * 4.0).round() / 4.0,
            hub_radius_factor: factor,
            max_hubs,
            half_window,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_match_direct_sums(
        pairs in prop::collection::vec((0.0f64..400.0, 0.0f64..400.0, any::<bool>()), 2..300)
    ) {
        let obs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mut mask: Vec<bool> = pairs.iter().map(|p| p.2).collect();
        mask[0] = true;
        mask[1] = true;
        prop_assume!(obs[0] != obs[1]);
        let got = metrics(&obs, &pred, &mask).unwrap();
        let (mape, rmse, mae, r2) = brute_metrics(&obs, &pred, &mask);
        prop_assert!(close(got.mape, mape, 1e-12));
        prop_assert!(close(got.rmse, rmse, 1e-12));
        prop_assert!(close(got.mae, mae, 1e-12));
        prop_assert!(close(got.r2, r2, 1e-12));
        prop_assert!(got.rmse >= got.mae - 1e-12);
    }

    #[test]
    fn snapshot_edges_match_exhaustive_scan(seed in any::<u64>(), dims in small_dims(), config in graph_config()) {
        let (grid, bathy) = random_world(seed, dims, 0.5);
        if let Err(msg) = check_snapshots(&grid, &bathy, &config) {
            prop_assert!(false, "{}", msg);
        }
    }

    #[test]
    fn proximity_is_symmetric(seed in any::<u64>(), dims in small_dims(), delta in 1usize..=3, depth_radius in 1usize..=2) {
        let (grid, bathy) = random_world(seed, dims, 0.3);
        let grids = GraphGrids::new(&grid, &bathy);
        let config = GraphConfig { delta, depth_radius, ..GraphConfig::default() };
        let nodes: Vec<NodeKey> = (0..dims.lon)
            .flat_map(|i| (0..dims.lat).flat_map(move |j| (0..dims.depth).map(move |d| NodeKey::new(i, j, d, 0))))
            .filter(|k| grids.is_ocean(k.i, k.j, k.d))
            .collect();
        for &n in &nodes {
            for m in proximity_neighbors(n, &grids, &config) {
                prop_assert!(proximity_neighbors(m, &grids, &config).contains(&n));
            }
        }
    }

    #[test]
    fn gridding_matches_record_by_record_means(seed in any::<u64>(), count in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let levels = vec![0.0, 50.0, 150.0];
        let config = GridConfig { lon_cells: 6, lat_cells: 5, depth_levels: levels.clone(), year_start: 2000, year_end: 2002 };
        let mut bathy = Bathymetry::flat(6, 5, -4000.0);
        bathy.set(2, 2, 10.0);
        bathy.set(3, 1, -60.0);
        let records: Vec<Record> = (0..count)
            .map(|_| Record {
                source_db: SourceDb::Wod,
                lon: rng.random_range(-185.0..185.0),
                lat: rng.random_range(-95.0..95.0),
                depth: [0.0, 25.0, 100.0, 200.0, 201.0][rng.random_range(0..5)] + rng.random_range(-30.0..30.0),
                year: rng.random_range(1999..2004),
                variable: if rng.random_bool(0.8) { Variable::Oxygen } else { Variable::Nitrate },
                value: rng.random_range(0.0..400.0),
                raw_flag: "0".into(),
            })
            .collect();
        let (grid, _) = grid_records(&records, Variable::Oxygen, &config, &bathy).unwrap();
        let expected = brute_grid(&records, Variable::Oxygen, 6, 5, &levels, (2000, 2002), &bathy);
        let dims = grid.dims;
        for k in 0..dims.len() {
            let (i, j, d, t) = dims.unravel(k);
            match expected.get(&(i, j, d, t)) {
                Some(&v) => {
                    prop_assert!(grid.mask[k]);
                    prop_assert!(close(grid.values[k], v, 1e-12));
                }
                None => prop_assert!(!grid.mask[k]),
            }
        }

        let mut shuffled = records.clone();
        shuffled.reverse();
        shuffled.rotate_left(count / 3);
        let (again, _) = grid_records(&shuffled, Variable::Oxygen, &config, &bathy).unwrap();
        prop_assert_eq!(grid.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        again.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn schedule_counts_sum_and_ignore_shifts(
        losses in prop::collection::vec(-3.0f64..3.0, 1..12),
        extra in 0usize..200,
        shift in -50.0f64..50.0,
    ) {
        let budget = losses.len() + extra;
        let a = rebalance_areas(&losses, budget).unwrap();
        prop_assert_eq!(a.counts.iter().sum::<usize>(), budget);
        prop_assert!(a.counts.iter().all(|&c| c >= 1));
        prop_assert!((a.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = losses.iter().map(|l| l + shift).collect();
        let b = rebalance_areas(&shifted, budget).unwrap();
        for (x, y) in a.fractions.iter().zip(&b.fractions) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_loss_ignores_unobserved_targets(
        rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, any::<bool>(), -1e3f64..1e3), 1..40)
    ) {
        prop_assume!(rows.iter().any(|r| r.2));
        let pred = tensorad::Tensor::new(&[rows.len(), 1], rows.iter().map(|r| r.0).collect()).unwrap();
        let mask: Vec<bool> = rows.iter().map(|r| r.2).collect();
        let obs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let noisy: Vec<f64> = rows.iter().map(|r| if r.2 { r.1 } else { r.3 }).collect();
        let a = reconstruction_loss(&pred, &obs, &mask).unwrap().item();
        let b = reconstruction_loss(&pred, &noisy, &mask).unwrap().item();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}
