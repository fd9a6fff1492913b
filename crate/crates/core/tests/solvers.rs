use historypca::datagen::{make_spiked_model, sample_block, true_subspace, RngState};
use historypca::ingest::{BlockStream, DataBlock, Dataset};
use historypca::linalg::{DenseMatrix, DiagonalWeights};
use historypca::metrics::{explained_variance, principal_angle_distance};
use historypca::solvers::{
    block_power_update, build_streaming_solver, exact_eig_oracle, history_first_block,
    history_update, init_random_subspace, oja_pp_active_columns, oja_update, power_method_batch,
    power_method_batch_traced, vr_pca, Algorithm, Dbpca, HistoryPca, SolverConfig,
    StreamingSolver, SubspaceEstimate,
};

fn block(rows: &[&[f64]]) -> DataBlock {
    DataBlock::dense(DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap())
        .unwrap()
}

fn col(v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_columns(&[v.to_vec()]).unwrap()
}

/// `n × d` samples from a spiked model; a clear eigengap keeps iteration
/// counts in the oracle checks meaningful.
fn spiked_matrix(n: usize, d: usize, k: usize, seed: u64) -> DenseMatrix {
    let model = make_spiked_model(d, k, 0.5, seed).unwrap();
    sample_block(&model, n, &mut model.sample_rng()).unwrap().to_dense()
}

fn rng() -> RngState {
    RngState::seed_from(99)
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

/// `I + (1/B) XᵀX` or `(1/B) XᵀX` as an explicit matrix.
fn block_operator(x: &DenseMatrix, plus_identity: bool) -> DenseMatrix {
    let mut g = x.t_matmul(x).unwrap();
    g.scale_in_place(1.0 / x.nrows() as f64);
    if plus_identity {
        g.add_scaled(1.0, &DenseMatrix::identity(x.ncols())).unwrap();
    }
    g
}

#[test]
fn first_block_zero_data_is_identity_map() {
    let q0 = init_random_subspace(6, 2, &mut rng()).unwrap();
    let step = history_first_block(&q0, &block(&[&[0.0; 6]]), 1, 1e-8, &mut rng()).unwrap();
    assert!(step.estimate.q.max_abs_diff(&q0) < 1e-12);
    assert_close(step.estimate.lambda.as_slice(), &[1.0, 1.0], 1e-12);
    assert_eq!(step.estimate.tau, 1);
}

#[test]
fn first_block_hand_example() {
    // S = e1 + (1,1)ᵀ(1,1)e1 = (2,1)ᵀ
    let step =
        history_first_block(&col(&[1.0, 0.0]), &block(&[&[1.0, 1.0]]), 1, 1e-8, &mut rng()).unwrap();
    let s5 = 5f64.sqrt();
    assert_close(step.estimate.q.as_slice(), &[2.0 / s5, 1.0 / s5], 1e-15);
    assert_close(step.estimate.lambda.as_slice(), &[s5], 1e-15);
}

#[test]
fn first_block_converges_to_oracle() {
    let mut g = RngState::seed_from(4);
    let x = spiked_matrix(40, 8, 1, 4);
    let q0 = init_random_subspace(8, 1, &mut g).unwrap();
    let step = history_first_block(&q0, &DataBlock::dense(x.clone()).unwrap(), 50, 0.0, &mut rng()).unwrap();
    let oracle = exact_eig_oracle(&block_operator(&x, true)).unwrap();
    let d = principal_angle_distance(&step.estimate.q, &oracle.top_k(1)).unwrap();
    assert!(d <= 1e-6, "angle {d}");
}

#[test]
fn early_exit_stops_inner_loop() {
    let mut g = RngState::seed_from(5);
    let x = g.normal_matrix(20, 6);
    let q0 = init_random_subspace(6, 2, &mut g).unwrap();
    let step = history_first_block(&q0, &DataBlock::dense(x).unwrap(), 10_000, 1e-6, &mut rng()).unwrap();
    assert!(step.inner_iters < 10_000);
}

#[test]
fn history_update_hand_example() {
    let state = SubspaceEstimate {
        q: col(&[1.0, 0.0]),
        lambda: DiagonalWeights::ones(1),
        tau: 1,
    };
    let step = history_update(&state, &block(&[&[1.0, 1.0]]), 1, 1e-8, &mut rng()).unwrap();
    // S = ½e1 + ½(1,1)ᵀ = (1, 0.5)ᵀ
    let s5 = 5f64.sqrt();
    assert_close(step.estimate.q.as_slice(), &[2.0 / s5, 1.0 / s5], 1e-15);
    assert_close(step.estimate.lambda.as_slice(), &[(1.25f64).sqrt()], 1e-15);
    assert_eq!(step.estimate.tau, 2);
}

#[test]
fn history_update_zero_block_keeps_direction() {
    let mut g = RngState::seed_from(6);
    let q = init_random_subspace(5, 1, &mut g).unwrap();
    for tau in [1, 2, 10, 1000] {
        let state = SubspaceEstimate {
            q: q.clone(),
            lambda: DiagonalWeights::ones(1),
            tau,
        };
        let step = history_update(&state, &block(&[&[0.0; 5], &[0.0; 5]]), 1, 1e-8, &mut rng()).unwrap();
        assert!(step.estimate.q.max_abs_diff(&q) < 1e-14);
        assert_eq!(step.reseeded, 0);
    }
}

#[test]
fn history_update_dimension_mismatch() {
    let state = SubspaceEstimate {
        q: col(&[1.0, 0.0, 0.0]),
        lambda: DiagonalWeights::ones(1),
        tau: 1,
    };
    assert!(history_update(&state, &block(&[&[1.0, 1.0]]), 1, 1e-8, &mut rng()).is_err());
}

#[test]
fn history_rank3_recovers_spiked_subspace() {
    let model = make_spiked_model(10, 3, 0.1, 21).unwrap();
    let mut cfg = SolverConfig::new(Algorithm::History, 10, 3, 10);
    cfg.seed = 21;
    let mut solver = HistoryPca::new(&cfg).unwrap();
    let mut stream = BlockStream::synthetic(model.clone(), 10).unwrap();
    for _ in 0..500 {
        solver.step(&mut stream).unwrap();
        assert!(solver.estimate().q.orthonormality_error() <= 1e-8);
    }
    let oracle = exact_eig_oracle(&model.covariance()).unwrap();
    let d = principal_angle_distance(&solver.estimate().q, &oracle.top_k(3)).unwrap();
    assert!(d < 0.05, "distance {d}");
    assert!(solver.estimate().lambda.is_non_increasing());
    assert_eq!(solver.samples_seen(), 5000);
}

#[test]
fn history_whole_dataset_matches_oracle() {
    for (seed, (n, d, k)) in [(1u64, (30, 8, 2)), (2, (50, 20, 3)), (3, (15, 12, 1))] {
        let mut g = RngState::seed_from(seed);
        let x = spiked_matrix(n, d, k, seed);
        let q0 = init_random_subspace(d, k, &mut g).unwrap();
        let step = history_first_block(&q0, &DataBlock::dense(x.clone()).unwrap(), 200, 0.0, &mut rng()).unwrap();
        let oracle = exact_eig_oracle(&block_operator(&x, true)).unwrap();
        let dist = principal_angle_distance(&step.estimate.q, &oracle.top_k(k)).unwrap();
        assert!(dist <= 1e-6, "seed {seed}: {dist}");
    }
}

#[test]
fn rank1_iterate_invariant_under_operator_scaling() {
    // Scaling both the history weight and the block covariance by γ scales
    // the operator; normalization must hide it.
    let mut g = RngState::seed_from(8);
    let q = init_random_subspace(7, 1, &mut g).unwrap();
    let x = DataBlock::dense(g.normal_matrix(4, 7)).unwrap();
    let base = SubspaceEstimate {
        q: q.clone(),
        lambda: DiagonalWeights::ones(1),
        tau: 3,
    };
    let a = history_update(&base, &x, 3, 0.0, &mut rng()).unwrap();
    for gamma in [0.01, 2.0, 1e3] {
        let scaled = SubspaceEstimate {
            q: q.clone(),
            lambda: DiagonalWeights::new(vec![gamma]).unwrap(),
            tau: 3,
        };
        let b = history_update(&scaled, &x.scaled(gamma.sqrt()), 3, 0.0, &mut rng()).unwrap();
        assert!(a.estimate.q.max_abs_diff(&b.estimate.q) < 1e-12);
    }
}

#[test]
fn block_power_scale_invariance() {
    let mut g = RngState::seed_from(9);
    let q = init_random_subspace(6, 2, &mut g).unwrap();
    let x = DataBlock::dense(g.normal_matrix(5, 6)).unwrap();
    let state = SubspaceEstimate::initial(q);
    let a = block_power_update(&state, &x, &mut rng()).unwrap();
    let b = block_power_update(&state, &x.scaled(7.5), &mut rng()).unwrap();
    assert!(a.estimate.q.max_abs_diff(&b.estimate.q) < 1e-12);
}

#[test]
fn oja_hand_example() {
    let state = SubspaceEstimate::initial(col(&[1.0, 0.0]));
    let step = oja_update(&state, &block(&[&[1.0, 1.0]]), 1.0, 1, &mut rng()).unwrap();
    let s5 = 5f64.sqrt();
    assert_close(step.estimate.q.as_slice(), &[2.0 / s5, 1.0 / s5], 1e-15);
}

#[test]
fn oja_zero_step_keeps_iterate() {
    let q = init_random_subspace(6, 2, &mut rng()).unwrap();
    let state = SubspaceEstimate::initial(q.clone());
    let x = DataBlock::dense(RngState::seed_from(3).normal_matrix(4, 6)).unwrap();
    let step = oja_update(&state, &x, 1e-300, 1, &mut rng()).unwrap();
    assert!(step.estimate.q.max_abs_diff(&q) < 1e-14);
}

#[test]
fn oja_overflow_marks_divergence() {
    let mut cfg = SolverConfig::new(Algorithm::Oja, 3, 1, 1);
    cfg.c = 1e300;
    let mut s = build_streaming_solver(&cfg).unwrap();
    s.absorb(&block(&[&[1e200, 1e200, 1e200]])).unwrap();
    assert!(s.diverged());
    s.absorb(&block(&[&[1.0, 0.0, 0.0]])).unwrap();
    assert_eq!(s.samples_seen(), 2);
}

#[test]
fn block_power_hand_example() {
    let state = SubspaceEstimate::initial(col(&[0.5f64.sqrt(), 0.5f64.sqrt()]));
    let step = block_power_update(&state, &block(&[&[1.0, 0.0], &[1.0, 0.0]]), &mut rng()).unwrap();
    assert_close(step.estimate.q.as_slice(), &[1.0, 0.0], 1e-15);
}

#[test]
fn block_power_fixed_point() {
    let mut g = RngState::seed_from(10);
    let x = g.normal_matrix(9, 5);
    let oracle = exact_eig_oracle(&block_operator(&x, false)).unwrap();
    let state = SubspaceEstimate::initial(oracle.top_k(1));
    let step = block_power_update(&state, &DataBlock::dense(x).unwrap(), &mut rng()).unwrap();
    assert!(principal_angle_distance(&step.estimate.q, &oracle.top_k(1)).unwrap() < 1e-12);
}

#[test]
fn block_power_zero_block_reseeds() {
    let cfg = SolverConfig::new(Algorithm::BlockPower, 4, 2, 2);
    let mut s = build_streaming_solver(&cfg).unwrap();
    s.absorb(&block(&[&[0.0; 4], &[0.0; 4]])).unwrap();
    assert_eq!(s.reseed_events(), 2);
    assert!(s.estimate().q.orthonormality_error() <= 1e-10);
}

#[test]
fn dbpca_doubling_schedule() {
    let model = make_spiked_model(8, 1, 0.5, 3).unwrap();
    let cfg = SolverConfig::new(Algorithm::Dbpca, 8, 1, 4);
    let mut s = Dbpca::new(&cfg).unwrap();
    let mut stream = BlockStream::synthetic(model, 4).unwrap();
    for _ in 0..64 {
        s.step(&mut stream).unwrap();
    }
    // 4 + 8 + 16 + 32 + 64 + 128 = 252 samples across 63 blocks
    assert_eq!(s.schedule(), &[4, 8, 16, 32, 64, 128]);
    assert_eq!(s.buffered(), 4);
    assert_eq!(s.samples_seen(), 256);
}

#[test]
fn oja_pp_schedule() {
    assert!((1..=100).all(|t| oja_pp_active_columns(1, t, 100) == 1));
    // k = 4, n = 100: period 13, all columns by the second half
    assert_eq!(oja_pp_active_columns(4, 1, 100), 1);
    assert_eq!(oja_pp_active_columns(4, 14, 100), 2);
    assert_eq!(oja_pp_active_columns(4, 27, 100), 3);
    assert_eq!(oja_pp_active_columns(4, 40, 100), 4);
    assert_eq!(oja_pp_active_columns(4, 51, 100), 4);
}

fn run_stream(cfg: &SolverConfig, model_seed: u64, blocks: usize) -> SubspaceEstimate {
    let model = make_spiked_model(cfg.d, cfg.k, 0.5, model_seed).unwrap();
    let mut s = build_streaming_solver(cfg).unwrap();
    let mut stream = BlockStream::synthetic(model, cfg.block_size).unwrap();
    for _ in 0..blocks {
        s.step(&mut stream).unwrap();
    }
    s.estimate().clone()
}

#[test]
fn oja_pp_with_rank_one_is_oja() {
    let mut a = SolverConfig::new(Algorithm::Oja, 12, 1, 5);
    a.c = 3.0;
    a.seed = 4;
    let mut b = a.clone();
    b.algorithm = Algorithm::OjaPp;
    b.total_blocks = Some(50);
    assert_eq!(run_stream(&a, 1, 50), run_stream(&b, 1, 50));
}

#[test]
fn oja_pp_tracks_oja_on_spiked_data() {
    let blocks = 400;
    let model = make_spiked_model(30, 3, 0.5, 2).unwrap();
    let truth = true_subspace(&model);
    let mut gaps = Vec::new();
    for c in [10.0, 30.0] {
        let mut a = SolverConfig::new(Algorithm::Oja, 30, 3, 10);
        a.c = c;
        a.seed = 7;
        let mut b = a.clone();
        b.algorithm = Algorithm::OjaPp;
        b.total_blocks = Some(blocks);
        let da = principal_angle_distance(&run_stream(&a, 2, blocks).q, &truth).unwrap();
        let db = principal_angle_distance(&run_stream(&b, 2, blocks).q, &truth).unwrap();
        gaps.push((da - db).abs());
    }
    assert!(gaps.iter().all(|&g| g < 0.05), "{gaps:?}");
}

#[test]
fn every_streaming_solver_stays_orthonormal_and_counts_samples() {
    let model = make_spiked_model(15, 3, 0.5, 5).unwrap();
    for alg in [Algorithm::History, Algorithm::Oja, Algorithm::OjaPp, Algorithm::BlockPower, Algorithm::Dbpca] {
        for m in [1, 3] {
            let mut cfg = SolverConfig::new(alg, 15, 3, 7);
            cfg.m = m;
            cfg.c = 5.0;
            cfg.total_blocks = Some(40);
            let mut s = build_streaming_solver(&cfg).unwrap();
            let mut stream = BlockStream::synthetic(model.clone(), 7).unwrap();
            for n in 1..=40u64 {
                s.step(&mut stream).unwrap();
                assert!(s.estimate().q.orthonormality_error() <= 1e-8, "{alg}");
                assert_eq!(s.samples_seen(), 7 * n);
                assert_eq!(stream.samples_emitted(), 7 * n);
            }
        }
    }
}

#[test]
fn row_streaming_path_matches_block_path() {
    let model = make_spiked_model(9, 2, 0.3, 8).unwrap();
    let mut cfg = SolverConfig::new(Algorithm::History, 9, 2, 6);
    cfg.m = 1;
    let mut by_rows = HistoryPca::new(&cfg).unwrap();
    let mut by_blocks = HistoryPca::new(&cfg).unwrap();
    let mut s1 = BlockStream::synthetic(model.clone(), 6).unwrap();
    let mut s2 = BlockStream::synthetic(model, 6).unwrap();
    for _ in 0..30 {
        by_rows.step(&mut s1).unwrap();
        let b = s2.next_block().unwrap().unwrap();
        by_blocks.absorb(&b).unwrap();
    }
    let a = by_rows.estimate();
    let b = by_blocks.estimate();
    assert!(a.q.max_abs_diff(&b.q) < 1e-10);
    assert_eq!(a.tau, b.tau);
}

#[test]
fn ragged_tail_keeps_block_weighting() {
    let x = RngState::seed_from(12).normal_matrix(25, 4);
    let data = Dataset::from_matrix(&x);
    for m in [1, 3] {
        let mut cfg = SolverConfig::new(Algorithm::History, 4, 1, 10);
        cfg.m = m;
        let mut s = HistoryPca::new(&cfg).unwrap();
        let mut stream = data.stream(10).unwrap();
        let sizes: Vec<usize> = std::iter::from_fn(|| match s.step(&mut stream).unwrap() {
            0 => None,
            n => Some(n),
        })
        .collect();
        assert_eq!(sizes, vec![10, 10, 5]);
        assert_eq!(s.estimate().tau, 3);
    }
}

#[test]
fn power_method_matches_oracle() {
    let x = spiked_matrix(20, 5, 2, 13);
    let data = Dataset::from_matrix(&x);
    let est = power_method_batch(&data, 2, 200, &mut rng()).unwrap();
    let oracle = exact_eig_oracle(&x.t_matmul(&x).unwrap()).unwrap();
    let d = principal_angle_distance(&est.q, &oracle.top_k(2)).unwrap();
    assert!(d <= 1e-8, "{d}");
}

#[test]
fn power_method_explained_variance_non_decreasing() {
    let x = RngState::seed_from(14).normal_matrix(40, 6);
    let data = Dataset::from_matrix(&x);
    let mut values = Vec::new();
    power_method_batch_traced(&data, 1, 30, &mut rng(), &mut |_, est| {
        values.push(explained_variance(&est.q, &data).unwrap());
    })
    .unwrap();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{values:?}");
}

#[test]
fn vr_pca_small_step_keeps_iterate() {
    let x = RngState::seed_from(15).normal_matrix(30, 5);
    let data = Dataset::from_matrix(&x);
    let w0 = init_random_subspace(5, 1, &mut RngState::seed_from(1)).unwrap();
    let est = vr_pca(&data, 2, Some(1e-300), &mut RngState::seed_from(1)).unwrap();
    // same RNG stream: the random start is w0
    assert!(est.q.max_abs_diff(&w0) < 1e-14);
}

#[test]
fn vr_pca_single_sample_is_full_gradient_step() {
    let x = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.5]]).unwrap();
    let data = Dataset::from_matrix(&x);
    let eta = 0.3;
    let est = vr_pca(&data, 1, Some(eta), &mut RngState::seed_from(2)).unwrap();
    let w0 = init_random_subspace(3, 1, &mut RngState::seed_from(2)).unwrap().column(0);
    let xv = [1.0, 2.0, 0.5];
    let a: f64 = xv.iter().zip(&w0).map(|(p, q)| p * q).sum();
    let w: Vec<f64> = w0.iter().zip(&xv).map(|(wi, xi)| wi + eta * a * xi).collect();
    let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let expect: Vec<f64> = w.iter().map(|v| v / n).collect();
    assert_close(&est.q.column(0), &expect, 1e-14);
}

#[test]
fn vr_pca_converges() {
    let model = make_spiked_model(10, 1, 0.3, 16).unwrap();
    let data = Dataset::sample_spiked(&model, 2000);
    let x = data.to_dense();
    let oracle = exact_eig_oracle(&x.t_matmul(&x).unwrap()).unwrap();
    let est = vr_pca(&data, 10, None, &mut rng()).unwrap();
    let d = principal_angle_distance(&est.q, &oracle.top_k(1)).unwrap();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn sample_block_is_consumed_once() {
    let model = make_spiked_model(5, 1, 0.1, 3).unwrap();
    let mut r = model.sample_rng();
    let a = sample_block(&model, 3, &mut r).unwrap();
    let mut stream = BlockStream::synthetic(model, 3).unwrap();
    assert_eq!(stream.next_block().unwrap().unwrap(), a);
}
