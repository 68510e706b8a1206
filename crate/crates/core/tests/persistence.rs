mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simptopo::fea::DensityField;
use simptopo::persistence::{
    betti_at_threshold, bottleneck_distance, bottleneck_with_penalty, compute_diagram,
    compute_diagram_raw, PersistenceDiagram, PersistencePair,
};

use common::{betti_oracle, bfs_holes, exhaustive_bottleneck, random_binary, random_diagram};

fn field(nelx: usize, nely: usize, v: Vec<f64>) -> DensityField {
    DensityField::new(nelx, nely, v).unwrap()
}

#[test]
fn euler_and_search_oracles_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let v = random_binary(&mut rng, 64, 0.55);
        let (_, b1) = betti_oracle(&v, 8, 8, 0.5);
        assert_eq!(b1, bfs_holes(&v, 8, 8, 0.5));
    }
}

#[test]
fn betti_numbers_match_oracle_on_random_binary_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (n, side) in [(200, 8), (30, 16)] {
        for _ in 0..n {
            let p = rng.gen_range(0.3..0.8);
            let v = random_binary(&mut rng, side * side, p);
            let d = compute_diagram(&field(side, side, v.clone())).unwrap();
            let b = betti_at_threshold(&d, 0.5).unwrap();
            assert_eq!((b.b0, b.b1), betti_oracle(&v, side, side, 0.5), "{v:?}");
        }
    }
}

#[test]
fn betti_numbers_match_oracle_on_grey_fields_at_every_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (nelx, nely) = (rng.gen_range(1..10), rng.gen_range(1..10));
        let v: Vec<f64> = (0..nelx * nely)
            .map(|_| rng.gen_range(0..10) as f64 / 10.0)
            .collect();
        let d = compute_diagram(&field(nelx, nely, v.clone())).unwrap();
        for k in 1..10 {
            let t = k as f64 / 10.0;
            let b = betti_at_threshold(&d, t).unwrap();
            assert_eq!((b.b0, b.b1), betti_oracle(&v, nelx, nely, t));
        }
    }
}

#[test]
fn annulus_and_full_fields() {
    let ones = compute_diagram(&field(4, 3, vec![1.0; 12])).unwrap();
    assert_eq!(ones.dim0, vec![PersistencePair::essential(1.0)]);
    assert!(ones.dim1.is_empty());
    assert_eq!(betti_at_threshold(&ones, 0.5).unwrap().b0, 1);

    let mut v = vec![0.0; 49];
    for y in 1..6 {
        for x in 1..6 {
            if y == 1 || y == 5 || x == 1 || x == 5 {
                v[y * 7 + x] = 1.0;
            }
        }
    }
    let d = compute_diagram(&field(7, 7, v)).unwrap();
    assert_eq!(d.dim0, vec![PersistencePair::essential(1.0)]);
    assert_eq!(d.dim1, vec![PersistencePair::finite(1.0, 0.0)]);
    let b = betti_at_threshold(&d, 0.5).unwrap();
    assert_eq!((b.b0, b.b1), (1, 1));
}

#[test]
fn near_one_threshold_counts_only_solid_material() {
    let v = vec![1.0, 0.9, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.95];
    let d = compute_diagram(&field(3, 3, v.clone())).unwrap();
    let b = betti_at_threshold(&d, 1.0 - 1e-9).unwrap();
    assert_eq!(b.b0, common::bfs_components(&v, 3, 3, 1.0));
}

#[test]
fn bottleneck_matches_exhaustive_matching() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let (a, b) = (random_diagram(&mut rng, 5), random_diagram(&mut rng, 5));
        let ours = bottleneck_distance(&a, &b, 0).unwrap();
        let want = exhaustive_bottleneck(&a.dim0, &b.dim0);
        assert!(
            (ours - want).abs() <= 1e-12,
            "{ours} vs {want}\n{a:?}\n{b:?}"
        );
    }
}

#[test]
fn bottleneck_simple_cases() {
    let one = PersistenceDiagram {
        dim0: vec![PersistencePair::finite(2.0, 0.0)],
        dim1: vec![],
    };
    let empty = PersistenceDiagram::default();
    assert_eq!(bottleneck_distance(&one, &empty, 0).unwrap(), 1.0);
    assert_eq!(bottleneck_distance(&one, &one, 0).unwrap(), 0.0);
    assert_eq!(bottleneck_distance(&empty, &empty, 1).unwrap(), 0.0);
    assert!(bottleneck_distance(&one, &one, 2).is_err());

    let e1 = PersistenceDiagram {
        dim0: vec![PersistencePair::essential(0.9)],
        dim1: vec![],
    };
    let e2 = PersistenceDiagram {
        dim0: vec![PersistencePair::essential(0.6)],
        dim1: vec![],
    };
    assert!((bottleneck_distance(&e1, &e2, 0).unwrap() - 0.3).abs() < 1e-15);
    assert_eq!(bottleneck_distance(&e1, &empty, 0).unwrap(), f64::INFINITY);
    assert_eq!(bottleneck_with_penalty(&e1, &empty, 0, 1.0).unwrap(), 1.0);
}

#[test]
fn bottleneck_metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (a, b, c) = (
            random_diagram(&mut rng, 5),
            random_diagram(&mut rng, 5),
            random_diagram(&mut rng, 5),
        );
        let d =
            |x: &PersistenceDiagram, y: &PersistenceDiagram| bottleneck_distance(x, y, 0).unwrap();
        assert_eq!(d(&a, &a), 0.0);
        assert_eq!(d(&a, &b), d(&b, &a));
        assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        let mut shuffled = a.clone();
        shuffled.dim0.reverse();
        assert_eq!(d(&a, &shuffled), 0.0);
    }
}

#[test]
fn bottleneck_is_stable_under_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let f: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
        let eps = rng.gen_range(0.0..0.2);
        let g: Vec<f64> = f
            .iter()
            .map(|v| (v + rng.gen_range(-eps..=eps)).clamp(0.0, 1.0))
            .collect();
        let gap = f
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let (df, dg) = (
            compute_diagram_raw(&f, 8, 8).unwrap(),
            compute_diagram_raw(&g, 8, 8).unwrap(),
        );
        for dim in 0..2 {
            let b = bottleneck_distance(&df, &dg, dim).unwrap();
            assert!(b <= gap + 1e-12, "dim {dim}: {b} > {gap}");
        }
    }
}

#[test]
fn diagram_csv_and_errors() {
    let d = compute_diagram_raw(&[0.2, 0.8], 2, 1).unwrap();
    assert_eq!(d.to_csv(), "dim,birth,death,essential\n0,0.8,-inf,true\n");
    assert!(compute_diagram_raw(&[], 0, 0).is_err());
    assert!(compute_diagram_raw(&[f64::NAN], 1, 1).is_err());
    assert!(betti_at_threshold(&d, 1.5).is_err());
}

fn mirror(v: &[f64], nelx: usize, nely: usize, mx: bool, my: bool) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for y in 0..nely {
        for x in 0..nelx {
            let (sx, sy) = (
                if mx { nelx - 1 - x } else { x },
                if my { nely - 1 - y } else { y },
            );
            out[y * nelx + x] = v[sy * nelx + sx];
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mirrored_fields_have_identical_diagrams(
        (nelx, nely, v) in (1usize..9, 1usize..9).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), prop::collection::vec(0u8..6, w * h))
        }),
        mx in any::<bool>(),
        my in any::<bool>(),
    ) {
        let v: Vec<f64> = v.into_iter().map(|q| q as f64 / 5.0).collect();
        let d = compute_diagram_raw(&v, nelx, nely).unwrap();
        let m = compute_diagram_raw(&mirror(&v, nelx, nely, mx, my), nelx, nely).unwrap();
        prop_assert_eq!(d, m);
    }

    #[test]
    fn finite_pairs_are_ordered(v in prop::collection::vec(0.0f64..1.0, 30)) {
        let d = compute_diagram_raw(&v, 6, 5).unwrap();
        for p in d.dim0.iter().chain(&d.dim1) {
            prop_assert!(p.essential || (p.birth > p.death));
        }
        prop_assert_eq!(d.dim0.iter().filter(|p| p.essential).count(), 1);
        prop_assert!(d.dim1.iter().all(|p| !p.essential));
    }
}
