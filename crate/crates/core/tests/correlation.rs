mod common;

use common::{oracle_pearson, oracle_ranks, oracle_spearman, random_vector};
use conceptmine::evalbench::{fractional_ranks, pearson, spearman};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn matches_formula_oracles_on_random_vectors() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(2..=50);
        let ties = checked % 2 == 0;
        let x = random_vector(&mut rng, n, ties);
        let y = random_vector(&mut rng, n, ties);
        let flat = |v: &[f64]| v.iter().all(|a| *a == v[0]);
        if flat(&x) || flat(&y) {
            continue;
        }
        assert!((pearson(&x, &y).unwrap() - oracle_pearson(&x, &y)).abs() <= 1e-12);
        assert!((spearman(&x, &y).unwrap() - oracle_spearman(&x, &y)).abs() <= 1e-12);
        assert_eq!(fractional_ranks(&x), oracle_ranks(&x));
        checked += 1;
    }
}

#[test]
fn perfect_and_anti_perfect_are_exact() {
    let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.7 - 3.0).collect();
    let up: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -3.0 * v + 5.0).collect();
    assert_eq!(pearson(&x, &up).unwrap(), 1.0);
    assert_eq!(pearson(&x, &down).unwrap(), -1.0);
    let cubed: Vec<f64> = x.iter().map(|v| v * v * v).collect();
    assert_eq!(spearman(&x, &cubed).unwrap(), 1.0);
    assert_eq!(spearman(&x, &down).unwrap(), -1.0);
}

#[test]
fn degenerate_inputs_are_errors() {
    assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).is_err());
    assert!(pearson(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    assert!(spearman(&[1.0], &[1.0]).is_err());
}

fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-1000.0f64..1000.0, n),
            prop::collection::vec(-1000.0f64..1000.0, n),
        )
    })
}

proptest! {
    #[test]
    fn symmetric_and_bounded((x, y) in vec_pair()) {
        if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&y, &x)) {
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
        }
        if let (Ok(a), Ok(b)) = (spearman(&x, &y), spearman(&y, &x)) {
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn pearson_affine_invariant((x, y) in vec_pair(), k in 0.1f64..10.0, c in -50.0f64..50.0) {
        let y2: Vec<f64> = y.iter().map(|v| k * v + c).collect();
        if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&x, &y2)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn spearman_monotone_invariant((x, y) in vec_pair()) {
        let y2: Vec<f64> = y.iter().map(|v| (v / 100.0).exp()).collect();
        if let (Ok(a), Ok(b)) = (spearman(&x, &y), spearman(&x, &y2)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
