use std::sync::Arc;

use historypca::datagen::RngState;
use historypca::ingest::{write_libsvm, LibsvmSource, Row, RowSource, TextInput};
use historypca::linalg::{thin_qr, SparseRow};
use historypca::metrics::principal_angle_distance;
use historypca::solvers::init_random_subspace;
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..=12).prop_flat_map(|d| (Just(d), 1..d, any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_symmetric_and_bounded((d, k, seed) in dims()) {
        let mut g = RngState::seed_from(seed);
        let u = init_random_subspace(d, k, &mut g).unwrap();
        let v = init_random_subspace(d, k, &mut g).unwrap();
        let a = principal_angle_distance(&u, &v).unwrap();
        let b = principal_angle_distance(&v, &u).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(principal_angle_distance(&u, &u).unwrap() <= 1e-9);
    }

    #[test]
    fn distance_ignores_basis_choice_and_global_rotation((d, k, seed) in dims()) {
        let mut g = RngState::seed_from(seed);
        let u = init_random_subspace(d, k, &mut g).unwrap();
        let v = init_random_subspace(d, k, &mut g).unwrap();
        let base = principal_angle_distance(&u, &v).unwrap();

        let r = thin_qr(&g.normal_matrix(k, k), &mut g).unwrap().q;
        let vr = v.matmul(&r).unwrap();
        prop_assert!((principal_angle_distance(&u, &vr).unwrap() - base).abs() <= 1e-9);

        let rot = thin_qr(&g.normal_matrix(d, d), &mut g).unwrap().q;
        let gu = rot.matmul(&u).unwrap();
        let gv = rot.matmul(&v).unwrap();
        prop_assert!((principal_angle_distance(&gu, &gv).unwrap() - base).abs() <= 1e-9);
    }

    #[test]
    fn libsvm_round_trip(
        rows in prop::collection::vec(
            prop::collection::btree_map(0usize..30, -1e6f64..1e6, 0..10),
            0..20,
        )
    ) {
        let rows: Vec<Row> = rows
            .into_iter()
            .map(|m| Row::Sparse(SparseRow::new(m.into_iter().collect(), 30).unwrap()))
            .collect();
        let mut text = Vec::new();
        write_libsvm(&rows, 30, &mut text).unwrap();
        let mut src = LibsvmSource::open(TextInput::Bytes(Arc::from(text)), Some(30)).unwrap();
        let mut back = Vec::new();
        while let Some(r) = src.next_row().unwrap() {
            back.push(r);
        }
        prop_assert_eq!(back, rows);
    }
}
