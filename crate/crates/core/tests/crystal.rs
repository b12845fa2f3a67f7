use std::f64::consts::PI;

use lsgate::crystal::{
    equilibrium_spacing, lamb_dicke, normal_modes, Axis, BeamGeometry, ModeId, ModeKind, TrapConfig,
};
use lsgate::units::AMU;
use proptest::prelude::*;

fn trap(axial: f64, ry: f64, rz: f64) -> TrapConfig {
    TrapConfig {
        axial_freq: 2.0 * PI * axial,
        radial_freq_y: 2.0 * PI * ry,
        radial_freq_z: 2.0 * PI * rz,
        ..TrapConfig::paper_defaults()
    }
}

#[test]
fn axial_stretch_is_root_three_times_com() {
    let s = normal_modes(&TrapConfig::paper_defaults()).unwrap();
    let r = s.frequency(ModeId::GATE).unwrap() / s.frequency(ModeId::AXIAL_COM).unwrap();
    assert!((r / 3f64.sqrt() - 1.0).abs() < 1e-12);
    // 1.16 MHz * sqrt(3)
    assert!((s.frequency(ModeId::GATE).unwrap() / (2.0 * PI) - 2.009_179e6).abs() < 1.0);
}

#[test]
fn com_frequency_equals_axial() {
    for f in [0.3e6, 1.16e6, 2.0e6] {
        let s = normal_modes(&trap(f, 4e6, 5e6)).unwrap();
        assert_eq!(s.frequency(ModeId::AXIAL_COM).unwrap(), 2.0 * PI * f);
    }
}

#[test]
fn spacing_matches_coulomb_balance() {
    // Force balance e^2 / (4 pi eps0 d^2) = m w^2 d / 2, solved independently.
    let m = 171.0 * AMU;
    let w = 2.0 * PI * 1.16e6;
    let e = 1.602_176_634e-19_f64;
    let eps0 = 8.854_187_812_8e-12;
    let f = |d: f64| e * e / (4.0 * PI * eps0 * d * d) - m * w * w * d / 2.0;
    let (mut lo, mut hi) = (1e-7, 1e-4);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    assert!((equilibrium_spacing(m, w) / d - 1.0).abs() < 1e-12);
    let s = normal_modes(&TrapConfig::paper_defaults()).unwrap();
    assert_eq!(s.equilibrium_positions[0], -s.equilibrium_positions[1]);
    assert!((s.spacing() / d - 1.0).abs() < 1e-12);
}

#[test]
fn gate_eta_matches_direct_formula() {
    let s = normal_modes(&TrapConfig::paper_defaults()).unwrap();
    let (ka, kb) = BeamGeometry::Perpendicular { transverse_angle: PI / 4.0 }.wave_vectors(435.5e-9);
    let dk = [ka[0] - kb[0], ka[1] - kb[1], ka[2] - kb[2]];
    let ld = lamb_dicke(&s, dk).unwrap();
    let hbar = 1.054_571_817e-34;
    let m = 171.0 * 1.660_539_066_60e-27;
    let w_str = 2.0 * PI * 1.16e6 * 3f64.sqrt();
    let norm = 2f64.sqrt() * 2.0 * PI / 435.5e-9;
    let expect = norm * (hbar / (4.0 * m * w_str)).sqrt();
    assert!((ld.gate() / expect - 1.0).abs() < 1e-12);
    assert!((ld.gate() - 0.055).abs() < 0.001);
    // |B_j| = 1/sqrt2 on the stretch mode, so the per-ion entries carry the same magnitude.
    let pair = ld.pair(ModeId::GATE).unwrap();
    assert!((pair[1].abs() - expect).abs() < 1e-12 * expect);
    assert!((pair[0] + pair[1]).abs() < 1e-15);
}

#[test]
fn counter_propagating_beams_do_not_touch_radial_modes() {
    let s = normal_modes(&TrapConfig::paper_defaults()).unwrap();
    let (ka, kb) = BeamGeometry::CounterPropagating.wave_vectors(435.5e-9);
    let ld = lamb_dicke(&s, [ka[0] - kb[0], 0.0, 0.0]).unwrap();
    for m in ModeId::RADIAL {
        assert_eq!(ld.pair(m).unwrap(), [0.0, 0.0]);
    }
}

#[test]
fn zero_wave_vector_is_rejected() {
    let s = normal_modes(&TrapConfig::paper_defaults()).unwrap();
    assert!(lamb_dicke(&s, [0.0; 3]).is_err());
}

#[test]
fn unsupported_ion_count_is_rejected() {
    let mut t = TrapConfig::paper_defaults();
    t.ion_count = 3;
    assert!(normal_modes(&t).is_err());
}

proptest! {
    #[test]
    fn participation_is_orthonormal(ax in 0.2e6..2e6f64, ry in 1.05..3.0f64, rz in 1.05..3.0f64) {
        let s = normal_modes(&trap(ax, ax * ry, ax * rz)).unwrap();
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let c = s.mode(ModeId::new(axis, ModeKind::Com)).unwrap().participation;
            let t = s.mode(ModeId::new(axis, ModeKind::Stretch)).unwrap().participation;
            prop_assert!((c[0] * c[0] + c[1] * c[1] - 1.0).abs() < 1e-12);
            prop_assert!((t[0] * t[0] + t[1] * t[1] - 1.0).abs() < 1e-12);
            prop_assert!((c[0] * t[0] + c[1] * t[1]).abs() < 1e-12);
            prop_assert!((c[0] - c[1]).abs() < 1e-12);
            prop_assert!((t[0] + t[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_stretch_frequency(ax in 0.2e6..2e6f64, ry in 1.05..3.0f64) {
        let s = normal_modes(&trap(ax, ax * ry, ax * 3.5)).unwrap();
        let wy = 2.0 * PI * ax * ry;
        let wx = 2.0 * PI * ax;
        let f = s.frequency(ModeId::new(Axis::Y, ModeKind::Stretch)).unwrap();
        prop_assert!((f / (wy * wy - wx * wx).sqrt() - 1.0).abs() < 1e-12);
        prop_assert!((s.frequency(ModeId::new(Axis::Y, ModeKind::Com)).unwrap() / wy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_is_linear_in_wave_vector(kx in 1e6..5e7f64, ky in -3e7..3e7f64, kz in -3e7..3e7f64) {
        let s = normal_modes(&TrapConfig::paper_defaults()).unwrap();
        let a = lamb_dicke(&s, [kx, ky, kz]).unwrap();
        let b = lamb_dicke(&s, [2.0 * kx, 2.0 * ky, 2.0 * kz]).unwrap();
        for ((_, ea), (_, eb)) in a.entries.iter().zip(&b.entries) {
            for j in 0..2 {
                prop_assert!((eb[j] - 2.0 * ea[j]).abs() <= 1e-14 * ea[j].abs().max(1e-300));
            }
        }
        prop_assert!((b.gate() / a.gate() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eta_scales_as_inverse_root_frequency(ax in 0.3e6..1.5e6f64) {
        let dk = [2e7, 0.0, 0.0];
        let a = lamb_dicke(&normal_modes(&trap(ax, 4e6, 5e6)).unwrap(), dk).unwrap();
        let b = lamb_dicke(&normal_modes(&trap(ax / 2.0, 4e6, 5e6)).unwrap(), dk).unwrap();
        let ea = a.eta(0, ModeId::AXIAL_COM).unwrap();
        let eb = b.eta(0, ModeId::AXIAL_COM).unwrap();
        prop_assert!((eb / ea / 2f64.sqrt() - 1.0).abs() < 1e-12);
    }
}
