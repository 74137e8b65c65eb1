use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorad::Tensor;

use oxyrecon::evalzone::{baseline_idw, kmeans, omz_stats, IdwConfig};
use oxyrecon::oceangraph::{GraphConfig, NodeKey};
use oxyrecon::oxynet::model::message_pass;
use oxyrecon::oxynet::{forward, init_params, ModelConfig};
use oxyrecon::synthlab::{generate, FieldStyle, SynthConfig, DO_PER_NITRATE};
use oxyrecon::training::{loss_and_grads, make_batch, prepare, Dataset, Prepared};

fn small_world(seed: u64) -> (Dataset, Prepared) {
    let synth = SynthConfig { dims: [8, 8, 3, 5], missing_rate: 0.6, seed, ..SynthConfig::default() };
    let dataset = Dataset::from_fixture(&generate(&synth).unwrap());
    let prepared = prepare(&dataset, &dataset.observed_cells(), &GraphConfig::default(), None).unwrap();
    (dataset, prepared)
}

fn ocean_cells(prepared: &Prepared) -> Vec<usize> {
    prepared.snapshots.iter().flat_map(|s| s.nodes.iter().map(|k| k.flat(s.dims))).collect()
}

#[test]
fn predictions_ignore_values_behind_the_mask() {
    let (dataset, mut prepared) = small_world(3);
    let model = ModelConfig::default();
    let params = init_params(&model);
    let cells: Vec<usize> = ocean_cells(&prepared).into_iter().step_by(7).take(20).collect();
    let before = make_batch(&prepared, &dataset.observed, &cells, &[], 0, &model).unwrap();
    let a = forward(&params, &model, &before.features, None).unwrap().prediction.to_vec();

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..prepared.input.values.len() {
        if !prepared.input.mask[k] {
            prepared.input.values[k] = rng.random_range(-1e4..1e4);
        }
    }
    for g in prepared.factors.iter_mut().flatten() {
        for k in 0..g.values.len() {
            if !g.mask[k] {
                g.values[k] = rng.random_range(-1e4..1e4);
            }
        }
    }
    let after = make_batch(&prepared, &dataset.observed, &cells, &[], 0, &model).unwrap();
    let b = forward(&params, &model, &after.features, None).unwrap().prediction.to_vec();
    assert_eq!(a, b);
}

#[test]
fn parameter_gradients_stay_finite() {
    let (dataset, prepared) = small_world(4);
    let cells = ocean_cells(&prepared);
    let observed = dataset.observed_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..100 {
        let model = ModelConfig { seed: trial, ..ModelConfig::default() };
        let params = init_params(&model);
        let mut batch: Vec<usize> = (0..rng.random_range(1..10)).map(|_| observed[rng.random_range(0..observed.len())]).collect();
        batch.sort_unstable();
        batch.dedup();
        let mut probes: Vec<usize> = (0..4).map(|_| cells[rng.random_range(0..cells.len())]).filter(|c| !batch.contains(c)).collect();
        probes.sort_unstable();
        probes.dedup();
        let b = make_batch(&prepared, &dataset.observed, &batch, &probes, 0, &model).unwrap();
        let (stats, grads) = loss_and_grads(&params, &model, &b, 0.1, 32).unwrap();
        assert!(stats.loss.is_finite());
        assert!(grads.iter().flatten().all(|g| g.is_finite()), "trial {trial}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn message_pass_commutes_with_node_relabelling(seed in any::<u64>(), n in 2usize..12, e in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 3;
        let h: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gamma: Vec<f64> = (0..e).map(|_| rng.random_range(0.0..1.0)).collect();
        let src: Vec<usize> = (0..e).map(|_| rng.random_range(0..n)).collect();
        let dst: Vec<usize> = (0..e).map(|_| rng.random_range(0..n)).collect();
        let mut degree = vec![0.0; n];
        dst.iter().for_each(|&v| degree[v] += 1.0);
        let inv: Vec<f64> = degree.iter().map(|&x: &f64| if x > 0.0 { 1.0 / x } else { 0.0 }).collect();

        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        // Node k moves to position perm[k].
        let mut h_p = vec![0.0; n * d];
        let mut inv_p = vec![0.0; n];
        for k in 0..n {
            h_p[perm[k] * d..perm[k] * d + d].copy_from_slice(&h[k * d..k * d + d]);
            inv_p[perm[k]] = inv[k];
        }
        let run = |h: Vec<f64>, src: Vec<usize>, dst: Vec<usize>, inv: Vec<f64>| {
            message_pass(
                &Tensor::new(&[n, d], h).unwrap(),
                &Tensor::new(&[e, 1], gamma.clone()).unwrap(),
                &Arc::new(src),
                &Arc::new(dst),
                &Tensor::new(&[n, 1], inv).unwrap(),
                &Tensor::new(&[d, d], w.clone()).unwrap(),
            )
            .unwrap()
            .to_vec()
        };
        let base = run(h, src.clone(), dst.clone(), inv);
        let moved = run(h_p, src.iter().map(|&s| perm[s]).collect(), dst.iter().map(|&t| perm[t]).collect(), inv_p);
        for k in 0..n {
            for c in 0..d {
                prop_assert!((base[k * d + c] - moved[perm[k] * d + c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn omz_share_is_bounded_and_monotone(seed in 0u64..1000, lo in 0.0f64..300.0, step in 0.0f64..200.0) {
        let synth = SynthConfig { dims: [6, 6, 3, 2], field_style: FieldStyle::OmzPockets, seed, ..SynthConfig::default() };
        let f = generate(&synth).unwrap();
        let a = omz_stats(&f.do_truth, Some(&f.bathymetry), lo).unwrap();
        let b = omz_stats(&f.do_truth, Some(&f.bathymetry), lo + step).unwrap();
        for (x, y) in a.years.iter().zip(&b.years) {
            prop_assert!((0.0..=1.0).contains(&x.rho));
            prop_assert!(x.rho <= y.rho);
        }
    }

    #[test]
    fn idw_copies_observed_cells(seed in 0u64..1000) {
        let synth = SynthConfig { dims: [8, 6, 2, 2], missing_rate: 0.8, land_fraction: 0.2, seed, ..SynthConfig::default() };
        let f = generate(&synth).unwrap();
        let field = baseline_idw(&f.do_observed, Some(&f.bathymetry), &IdwConfig::default()).unwrap();
        for k in f.do_observed.observed_indices() {
            prop_assert_eq!(field.values[k], f.do_observed.values[k]);
        }
    }

    #[test]
    fn zoning_partition_ignores_input_order(seed in any::<u64>(), n in 3usize..40, k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keys: Vec<NodeKey> = (0..n).map(|q| NodeKey::new(q % 7, q / 7, 0, 0)).collect();
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        for q in (1..n).rev() {
            order.swap(q, rng.random_range(0..=q));
        }
        let a = kmeans(&keys, &points, k, 5).unwrap();
        let b = kmeans(
            &order.iter().map(|&q| keys[q]).collect::<Vec<_>>(),
            &order.iter().map(|&q| points[q].clone()).collect::<Vec<_>>(),
            k,
            5,
        )
        .unwrap();
        let zone_of = |z: &oxyrecon::evalzone::ZoneAssignment| -> BTreeMap<NodeKey, usize> {
            z.keys.iter().copied().zip(z.zone.iter().copied()).collect()
        };
        let (za, zb) = (zone_of(&a), zone_of(&b));
        let mut relabel = BTreeMap::new();
        for (key, &x) in &za {
            let y = zb[key];
            prop_assert_eq!(*relabel.entry(x).or_insert(y), y);
        }
    }
}

#[test]
fn synthetic_sparsity_and_redfield_slope() {
    let f = generate(&SynthConfig { noise_sd: 0.0, ..SynthConfig::default() }).unwrap();
    let achieved = 1.0 - f.do_observed.observed_count() as f64 / f.do_observed.dims.len() as f64;
    assert!((achieved - 0.9).abs() <= 0.005, "missing fraction {achieved}");

    let oxygen = &f.do_truth;
    let nitrate = f.factor_truth(oxyrecon::datagrid::Variable::Nitrate).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let (a, b) = (rng.random_range(0..oxygen.dims.len()), rng.random_range(0..oxygen.dims.len()));
        let dn = nitrate.values[a] - nitrate.values[b];
        if dn.abs() < 1e-3 {
            continue;
        }
        let slope = (oxygen.values[a] - oxygen.values[b]) / dn;
        assert!((slope + DO_PER_NITRATE).abs() < 1e-9, "slope {slope}");
    }
    assert_eq!(DO_PER_NITRATE, 138.0 / 16.0);
}
