use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmu_core::grid::{Grid, GridFunction};
use rmu_core::maximal::{hl_maximal, iterated_maximal, m_delta, sharp_delta, sharp_maximal};

fn grid() -> Grid {
    Grid::new(2, 1.0, 9, 0.5, 0.75).unwrap()
}

/// `values` laid out on the core window (cycled), zero elsewhere.
fn test_function(g: Grid, values: &[f64]) -> GridFunction {
    let mut it = values.iter().cycle();
    let v = (0..g.len())
        .map(|i| if g.in_core(i) { *it.next().unwrap() } else { 0.0 })
        .collect();
    GridFunction::new(g, v).unwrap()
}

fn rel_close(a: &GridFunction, b: &GridFunction, tol: f64) -> bool {
    a.values()
        .iter()
        .zip(b.values())
        .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_homogeneous(v in prop::collection::vec(-5.0f64..5.0, 25), c in -20.0f64..20.0) {
        prop_assume!(c.abs() > 1e-3);
        let g = grid();
        let f = test_function(g, &v);
        let cf = f.scale(c);
        let a = c.abs();
        prop_assert!(rel_close(&hl_maximal(&cf), &hl_maximal(&f).scale(a), 1e-10));
        prop_assert!(rel_close(&m_delta(&cf, 0.5).unwrap(), &m_delta(&f, 0.5).unwrap().scale(a), 1e-10));
        prop_assert!(rel_close(&iterated_maximal(&cf, 2).unwrap(), &iterated_maximal(&f, 2).unwrap().scale(a), 1e-10));
        prop_assert!(rel_close(&sharp_maximal(&cf), &sharp_maximal(&f).scale(a), 1e-10));
        prop_assert!(rel_close(&sharp_delta(&cf, 0.5).unwrap(), &sharp_delta(&f, 0.5).unwrap().scale(a), 1e-10));
    }

    #[test]
    fn maximal_operators_are_monotone(v in prop::collection::vec(-5.0f64..5.0, 25), u in prop::collection::vec(-1.0f64..=1.0, 25)) {
        let g = grid();
        let big = test_function(g, &v);
        let shrunk: Vec<f64> = v.iter().zip(&u).map(|(x, s)| x * s).collect();
        let small = test_function(g, &shrunk);
        let le = |a: &GridFunction, b: &GridFunction| a.values().iter().zip(b.values()).all(|(x, y)| *x <= y * (1.0 + 1e-12));
        prop_assert!(le(&hl_maximal(&small), &hl_maximal(&big)));
        prop_assert!(le(&m_delta(&small, 0.25).unwrap(), &m_delta(&big, 0.25).unwrap()));
        prop_assert!(le(&iterated_maximal(&small, 2).unwrap(), &iterated_maximal(&big, 2).unwrap()));
    }
}

#[test]
fn weak_type_one_one() {
    let g = Grid::new(2, 1.0, 17, 0.5, 0.75).unwrap();
    let n = g.dimension() as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let vals: Vec<f64> = (0..81).map(|_| rng.gen_range(-1.0..1.0) * rng.gen_range(0.0..1.0f64).powi(3)).collect();
        let f = test_function(g, &vals);
        let l1: f64 = f.values().iter().map(|v| v.abs()).sum::<f64>() * g.cell_volume();
        let m = hl_maximal(&f);
        let top = m.max_abs();
        for i in 0..40 {
            let t = top * 10f64.powf(-3.0 + 3.0 * i as f64 / 39.0);
            let count = m.values().iter().filter(|v| **v > t).count() as f64;
            assert!(t * count * g.cell_volume() <= 3f64.powi(n) * l1, "t = {t}");
        }
    }
}

#[test]
fn refinement_changes_gaussian_maximal_little() {
    let bump = |x: &[f64]| {
        if x.iter().all(|v| v.abs() <= 0.5) {
            (-x.iter().map(|v| v * v).sum::<f64>() / 0.1).exp()
        } else {
            0.0
        }
    };
    let coarse = Grid::new(2, 1.0, 33, 0.5, 0.75).unwrap();
    let fine = Grid::new(2, 1.0, 65, 0.5, 0.75).unwrap();
    let mc = hl_maximal(&GridFunction::from_fn(coarse, bump).unwrap());
    let mf = hl_maximal(&GridFunction::from_fn(fine, bump).unwrap());
    for i in coarse.eval_points() {
        let idx: Vec<usize> = coarse.multi_index(i).iter().map(|k| 2 * k).collect();
        let j = fine.flat_index(&idx);
        let (a, b) = (mc.value(i), mf.value(j));
        assert!((a - b).abs() < 0.1 * a.max(b), "{a} vs {b}");
    }
}
