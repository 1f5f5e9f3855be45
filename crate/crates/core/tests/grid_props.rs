use proptest::prelude::*;
use rmu_core::grid::{average, weighted_lp_norm, weighted_measure, Ball, Grid, GridFunction};
use rmu_core::weight::{power_weight, Weight};

fn grid() -> Grid {
    Grid::new(2, 1.0, 9, 0.5, 0.75).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 81)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn average_is_additive(a in values(), b in values(), center in 0usize..81, radius in 1usize..12) {
        let g = grid();
        let f = GridFunction::new(g, a).unwrap();
        let h = GridFunction::new(g, b).unwrap();
        let ball = Ball::new(&g, center, radius).unwrap();
        let lhs = average(&f.add(&h).unwrap(), &ball).unwrap();
        let rhs = average(&f, &ball).unwrap() + average(&h, &ball).unwrap();
        let scale = average(&f.abs(), &ball).unwrap() + average(&h.abs(), &ball).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn norm_is_monotone(a in values(), u in prop::collection::vec(-1.0f64..=1.0, 81), p in 0.25f64..4.0) {
        let g = grid();
        let big = GridFunction::new(g, a.clone()).unwrap();
        let small = GridFunction::new(g, a.iter().zip(&u).map(|(x, s)| x * s).collect()).unwrap();
        let w = power_weight(&g, -1.0);
        prop_assert!(weighted_lp_norm(&small, p, &w).unwrap() <= weighted_lp_norm(&big, p, &w).unwrap());
    }

    #[test]
    fn triangle_inequality(a in values(), b in values(), p in 1.0f64..4.0) {
        let g = grid();
        let f = GridFunction::new(g, a).unwrap();
        let h = GridFunction::new(g, b).unwrap();
        let w = power_weight(&g, 1.0);
        let lhs = weighted_lp_norm(&f.add(&h).unwrap(), p, &w).unwrap();
        let rhs = weighted_lp_norm(&f, p, &w).unwrap() + weighted_lp_norm(&h, p, &w).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10));
    }

    #[test]
    fn measure_is_additive(split in prop::collection::vec(any::<bool>(), 81), w in prop::collection::vec(1u32..64, 81)) {
        // Dyadic weights make every partial sum exact, so additivity must
        // hold bit for bit.
        let g = grid();
        let weight = Weight::new(
            GridFunction::new(g, w.iter().map(|&k| k as f64 / 8.0).collect()).unwrap(),
            "dyadic",
        )
        .unwrap();
        let all: Vec<usize> = (0..81).collect();
        let a: Vec<usize> = all.iter().copied().filter(|&i| split[i]).collect();
        let b: Vec<usize> = all.iter().copied().filter(|&i| !split[i]).collect();
        prop_assert_eq!(weighted_measure(&weight, &all), weighted_measure(&weight, &a) + weighted_measure(&weight, &b));
    }
}
