use std::f64::consts::PI;

use lsgate::crystal::ModeId;
use lsgate::hamiltonian::{
    build_full, lightshift_prefactor, register_dimension, Level, OperatorModel, Tier, Truncation,
};
use lsgate::linalg::{CMat, C64};
use lsgate::setup::{GateSetup, SetupParams};
use lsgate::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(tier: Tier) -> OperatorModel {
    let s = GateSetup::paper_defaults().unwrap();
    let t = match tier {
        Tier::Sdf => Truncation::gate_only(4),
        _ => Truncation::with_spectator(3, ModeId::AXIAL_COM, 1),
    };
    s.with_truncation(t).build(tier).unwrap()
}

fn hermiticity_defect(m: &CMat) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn scale(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn every_tier_is_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for tier in [Tier::Full, Tier::LightShift, Tier::Sdf] {
        let model = small(tier);
        for _ in 0..100 {
            let t = rng.random_range(0.0..100e-6);
            let f = rng.random_range(0.0..1.0);
            let h = model.matrix(t, f);
            // Relative to the largest element; the full tier carries MHz-scale entries.
            assert!(hermiticity_defect(&h) <= 1e-13 * scale(&h).max(1.0), "{tier:?} at t = {t}");
        }
    }
}

#[test]
fn register_dimensions() {
    assert_eq!(register_dimension(4, &Truncation::all_spectators(10, 1)), 5632);
    assert_eq!(register_dimension(5, &Truncation::all_spectators(10, 1)), 8800);
    let s = GateSetup::paper_defaults().unwrap();
    assert_eq!(s.build(Tier::Full).unwrap().dim(), 5632);
    assert_eq!(s.build(Tier::Sdf).unwrap().dim(), 44);
}

#[test]
fn dimension_guard() {
    let s = GateSetup::paper_defaults().unwrap();
    match build_full(&s.spectrum, &s.beams, &s.scheme, &Truncation::all_spectators(10, 1), 5000) {
        Err(Error::DimensionTooLarge { dim, limit }) => assert_eq!((dim, limit), (5632, 5000)),
        other => panic!("expected a dimension error, got {:?}", other.map(|m| m.dim())),
    }
}

#[test]
fn undriven_full_model_vanishes_in_the_interaction_picture() {
    let mut p = SetupParams::paper_defaults();
    p.g = 0.0;
    p.truncation = Truncation::with_spectator(3, ModeId::AXIAL_COM, 1);
    let m = GateSetup::new(&p).unwrap().build(Tier::Full).unwrap();
    for t in [0.0, 1.3e-6, 44e-6] {
        assert_eq!(scale(&m.matrix(t, 1.0)), 0.0);
    }
}

#[test]
fn lightshift_prefactor_limits() {
    let g = 2.0 * PI * 0.76e6;
    let d = 2.0 * PI * 7.8e6;
    let p0 = lightshift_prefactor(g, d, 1e-3).unwrap();
    assert!((p0 / (4.0 * g * g / d) - 1.0).abs() < 1e-12);
    let mu = 2.0 * PI * 2.03e6;
    let rel = lightshift_prefactor(g, d, mu).unwrap() / (4.0 * g * g / d) - 1.0;
    assert!((rel - 0.0172).abs() < 1e-4, "{rel}");
    assert!(lightshift_prefactor(g, d, 2.0 * d).is_err());
}

#[test]
fn lightshift_first_order_sideband() {
    // <1| sin(theta + eta X) |0> = eta exp(-eta^2/2) cos(theta) for one bright ion.
    let s = GateSetup::paper_defaults().unwrap();
    let s = s.with_truncation(Truncation::gate_only(10));
    let m = s.build(Tier::LightShift).unwrap();
    let pre = lightshift_prefactor(s.beams.g(), s.scheme.delta, s.beams.mu).unwrap();
    let eta = s.gate_eta().unwrap();
    let dk = s.beams.delta_k()[0];
    let x0 = s.spectrum.equilibrium_positions[0];
    let b = &m.basis;
    let (u, d) = (b.level_index(Level::Up).unwrap(), b.level_index(Level::Down).unwrap());
    for t in [0.0, 0.37e-6, 3.1e-6, 20e-6] {
        let h = m.matrix(t, 1.0);
        let el = h[(b.index(u, d, 1), b.index(u, d, 0))].norm();
        let theta = dk * x0 + s.beams.mu * t + s.beams.beat_phase();
        let expect = (pre * eta * (-eta * eta / 2.0).exp() * theta.cos()).abs();
        assert!((el - expect).abs() < 1e-10 * pre * eta, "t = {t}: {el} vs {expect}");
    }
}

#[test]
fn frozen_ions_see_no_average_light_shift() {
    let s = GateSetup::paper_defaults().unwrap().with_truncation(Truncation::gate_only(0));
    let m = s.build(Tier::LightShift).unwrap();
    let period = 2.0 * PI / s.beams.mu;
    let n = 4000;
    let mut avg = CMat::zeros(m.dim(), m.dim());
    for k in 0..n {
        avg += m.matrix((k as f64 + 0.5) * period / n as f64, 1.0) / C64::new(n as f64, 0.0);
    }
    let pre = lightshift_prefactor(s.beams.g(), s.scheme.delta, s.beams.mu).unwrap();
    assert!(scale(&avg) < 1e-9 * pre);
    assert!(scale(&m.matrix(0.3 * period, 1.0)) > 0.1 * pre);
}

#[test]
fn sdf_structure() {
    let m = small(Tier::Sdf);
    let b = &m.basis;
    let p = b.phonon_dim();
    let (d, u) = (b.level_index(Level::Down).unwrap(), b.level_index(Level::Up).unwrap());
    for t in [0.0, 7e-6, 31e-6] {
        let h = m.matrix(t, 1.0);
        // Block diagonal in the spin basis.
        for r in 0..m.dim() {
            for c in 0..m.dim() {
                if r / p != c / p {
                    assert_eq!(h[(r, c)], C64::new(0.0, 0.0));
                }
            }
        }
        let block = |l1, l2| h.view((b.index(l1, l2, 0), b.index(l1, l2, 0)), (p, p)).into_owned();
        assert_eq!(scale(&block(d, d)), 0.0);
        // In phase on the two ions at the commensurate spacing: no drive of |up up>.
        assert!(scale(&block(u, u)) < 1e-12 * scale(&block(u, d)));
        let diff = block(u, d) + block(d, u);
        assert!(scale(&diff) < 1e-12 * scale(&block(u, d)));
    }
}

proptest! {
    #[test]
    fn sdf_force_is_linear_in_omega(t in 0.0..90e-6f64, f in 0.1..1.0f64) {
        let m = small(Tier::Sdf);
        // Omega scales as field squared.
        let h1 = m.matrix(t, f);
        let h2 = m.matrix(t, f * 2f64.sqrt());
        let d = &h2 - &h1 * C64::new(2.0, 0.0);
        prop_assert!(scale(&d) < 1e-12 * scale(&h1).max(1e-300));
    }

    #[test]
    fn qubit_shift_is_diagonal_z(shift in -1e4..1e4f64) {
        let m = small(Tier::Sdf);
        let h0 = m.matrix(3e-6, 0.7);
        let h1 = m.with_qubit_shift(shift).matrix(3e-6, 0.7);
        let d = &h1 - &h0;
        let b = &m.basis;
        let p = b.phonon_dim();
        for i in 0..m.dim() {
            let pair = i / p;
            let (l1, l2) = (pair / b.level_count(), pair % b.level_count());
            let z = 0.5 * shift * (b.levels[l1].z() + b.levels[l2].z());
            prop_assert!((d[(i, i)] - C64::new(z, 0.0)).norm() < 1e-9);
        }
    }
}
