use lsgate::srb::{
    calibrate_gap, catalog, clifford_group, fit_srb, gap_benchmark, generate_sequence, ls_gate, phase_distance,
    run_srb, sequence_seed, survival, FitOptions, LsChannel, NativeOp, SrbDataset, SrbNoise, SrbRecord,
    SrbSettings, GROUP_ORDER,
};
use lsgate::linalg::C64;
use nalgebra::{DMatrix, Matrix3};
use proptest::prelude::*;

fn exact_data(p: f64, lengths: &[usize]) -> SrbDataset {
    // Depolarizing every Clifford (the inverting one included) with average error e gives
    // 1/3 + (2/3)(1 - 3e/2)^(L+1).
    let lambda = 1.0 - p;
    let records = lengths
        .iter()
        .flat_map(|&l| {
            (0..3).map(move |j| SrbRecord {
                length: l,
                seed: j,
                shots: 0,
                survival: 1.0 / 3.0 + 2.0 / 3.0 * (1.0 - lambda).powi(l as i32 + 1),
            })
        })
        .collect();
    SrbDataset::from_records(records, "synthetic").unwrap()
}

#[test]
fn group_has_216_elements_and_closes() {
    let g = clifford_group();
    assert_eq!(g.len(), 216);
    assert_eq!(GROUP_ORDER, 3 * 3 * 3 * (3 * 3 - 1));
    assert_eq!(g.find(&Matrix3::identity()), Some(0));
    for a in 0..g.len() {
        for b in 0..g.len() {
            let m = g.get(a).matrix * g.get(b).matrix;
            assert_eq!(g.find(&m), Some(g.multiply(a, b)));
        }
        assert!(phase_distance(&(g.get(a).matrix * g.get(g.inverse(a)).matrix), &Matrix3::identity()) < 1e-12);
    }
}

#[test]
fn catalog_recomposes_every_element() {
    let g = clifford_group();
    let cat = catalog();
    assert_eq!(cat.entries.len(), 216);
    assert!(cat.entries[0].ops.is_empty());
    assert_eq!(cat.entries[0].n_ls, 0);
    for (i, e) in cat.entries.iter().enumerate() {
        assert!(phase_distance(&e.unitary(), &g.get(i).matrix) < 1e-9, "element {i}");
        assert_eq!(e.n_ls, e.ops.iter().filter(|o| matches!(o, NativeOp::Ls)).count());
    }
    assert!(cat.max_error(g) < 1e-9);
    assert!(cat.mean_ls() > 0.0 && cat.max_ls() >= 1);
}

#[test]
fn sequences_return_to_identity() {
    let g = clifford_group();
    for k in 0..100 {
        let l = 1 + (k * 7) % 40;
        let seq = generate_sequence(l, sequence_seed(11, k, l));
        assert_eq!(seq.elements.len(), l + 1);
        let u = seq.elements.iter().fold(Matrix3::<C64>::identity(), |acc, &e| g.get(e).matrix * acc);
        assert!(phase_distance(&u, &Matrix3::identity()) < 1e-9);
        assert!((survival(&seq, &SrbNoise::Ideal) - 1.0).abs() < 1e-12);
    }
    let one = generate_sequence(1, 5);
    assert_eq!(one.elements[1], g.inverse(one.elements[0]));
}

#[test]
fn native_ideal_gates_survive() {
    let noise = SrbNoise::Native { ls: LsChannel::Ideal, single_qubit_error: 0.0 };
    for s in 0..10 {
        assert!((survival(&generate_sequence(12, s), &noise) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn exact_fit_recovers_the_decay() {
    for p in [0.90, 0.99, 0.999] {
        let f = fit_srb(&exact_data(p, &[1, 3, 7, 15]), &FitOptions::default()).unwrap();
        assert!((f.p - p).abs() < 1e-10, "{p}: {}", f.p);
        assert!((f.clifford_fidelity - (p + (1.0 - p) / 3.0)).abs() < 1e-10);
    }
}

#[test]
fn simulated_clifford_noise_fits_exactly() {
    let e = 0.01;
    let settings = SrbSettings { lengths: vec![1, 3, 7, 15], sequences: 5, shots: 0, seed: 3 };
    let data = run_srb(&SrbNoise::Clifford { error: e }, &settings).unwrap();
    let f = fit_srb(&data, &FitOptions::default()).unwrap();
    assert!((f.p - (1.0 - 1.5 * e)).abs() < 1e-12, "{}", f.p);
    assert!((1.0 - f.clifford_fidelity - e).abs() < 1e-12);
}

#[test]
fn shot_noise_error_bars_cover_the_truth() {
    let e = 0.01;
    let truth = 1.0 - e;
    let mut hits = 0;
    for trial in 0..100 {
        let settings = SrbSettings { lengths: vec![1, 3, 7, 15], sequences: 33, shots: 500, seed: 1000 + trial };
        let data = run_srb(&SrbNoise::Clifford { error: e }, &settings).unwrap();
        let f = fit_srb(&data, &FitOptions::default()).unwrap();
        if (f.clifford_fidelity - truth).abs() <= 2.0 * f.sigma_clifford_fidelity {
            hits += 1;
        }
    }
    assert!(hits >= 90, "{hits} of 100");
}

#[test]
fn identical_seeds_give_identical_datasets() {
    let settings = SrbSettings { lengths: vec![1, 4], sequences: 6, shots: 200, seed: 42 };
    let noise = SrbNoise::Native { ls: LsChannel::Depolarizing { error: 3e-3 }, single_qubit_error: 1e-4 };
    let a = run_srb(&noise, &settings).unwrap();
    let b = run_srb(&noise, &settings).unwrap();
    assert_eq!(a, b);
    assert_eq!(generate_sequence(9, 77), generate_sequence(9, 77));
}

#[test]
fn pinned_asymptote_is_conservative_with_leakage() {
    let leak: f64 = 0.02;
    let k = ls_gate() * C64::from((1.0 - leak).sqrt());
    let ls = LsChannel::from_kraus(&[DMatrix::from_fn(3, 3, |i, j| k[(i, j)])]).unwrap();
    let noise = SrbNoise::Native { ls, single_qubit_error: 0.0 };
    let settings = SrbSettings { lengths: vec![1, 3, 7, 15, 30], sequences: 40, shots: 0, seed: 9 };
    let data = run_srb(&noise, &settings).unwrap();
    let fixed = fit_srb(&data, &FitOptions::default()).unwrap();
    let free = fit_srb(&data, &FitOptions { free_asymptote: true, ..FitOptions::default() }).unwrap();
    assert!(free.asymptote < 1.0 / 3.0);
    assert!(fixed.ls_fidelity <= free.ls_fidelity, "{} vs {}", fixed.ls_fidelity, free.ls_fidelity);
}

#[test]
fn kraus_shapes_are_checked() {
    assert!(LsChannel::from_kraus(&[DMatrix::<C64>::identity(2, 2)]).is_err());
    let g = ls_gate();
    let ls = LsChannel::from_kraus(&[DMatrix::from_fn(3, 3, |i, j| g[(i, j)])]).unwrap();
    let noise = SrbNoise::Native { ls, single_qubit_error: 0.0 };
    assert!((survival(&generate_sequence(6, 1), &noise) - 1.0).abs() < 1e-9);
    assert!(LsChannel::from_kraus(&[DMatrix::<C64>::identity(4, 4)]).is_ok());
}

#[test]
fn gap_benchmark_without_error_is_flat() {
    let pts = gap_benchmark(0.0, &[1, 10, 65], 8, 2).unwrap();
    for p in &pts {
        assert!((p.survival - 1.0).abs() < 1e-15);
    }
    assert!(pts[2].rotations > pts[0].rotations);
}

#[test]
fn gap_survival_falls_with_length_and_calibrates_back() {
    let lengths = [1, 5, 10, 30, 65];
    let pts = gap_benchmark(1e-3, &lengths, 16, 4).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].survival <= w[0].survival);
    }
    // Sequence seeds depend on the position in the length list.
    let at10 = gap_benchmark(1e-3, &[10], 16, 4).unwrap()[0].survival;
    let eps = calibrate_gap(at10, 10, 16, 4).unwrap();
    assert!((eps - 1e-3).abs() < 1e-12);
}

#[test]
fn fit_needs_two_lengths() {
    assert!(fit_srb(&exact_data(0.99, &[3]), &FitOptions::default()).is_err());
    assert!(fit_srb(&exact_data(0.99, &[3, 5]), &FitOptions { free_asymptote: true, ..FitOptions::default() }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clifford_survival_closed_form(l in 1usize..60, seed in any::<u64>(), e in 0.0..0.05f64) {
        let s = survival(&generate_sequence(l, seed), &SrbNoise::Clifford { error: e });
        let expect = 1.0 / 3.0 + 2.0 / 3.0 * (1.0 - 1.5 * e).powi(l as i32 + 1);
        prop_assert!((s - expect).abs() < 1e-12);
    }
}
