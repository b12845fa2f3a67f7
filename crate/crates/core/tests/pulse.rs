use std::f64::consts::PI;

use lsgate::linalg::C64;
use lsgate::pulse::{
    envelope_value, make_schedule, make_schedule_with, AmplitudeMode, GateSchedule, MicrowaveModel,
    PulseEnvelope, Segment,
};
use lsgate::Error;
use proptest::prelude::*;

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Quadrature split at the ramp joints.
fn pieces<F: Fn(f64) -> f64>(f: &F, env: &PulseEnvelope) -> f64 {
    let (r, d) = (env.ramp_duration, env.duration());
    simpson(f, 0.0, r, 2000) + simpson(f, r, d - r, 2000) + simpson(f, d - r, d, 2000)
}

#[test]
fn default_gate_timing() {
    let s = make_schedule(2, 45e-6, 5e-6, true, PulseEnvelope::sin2(45e-6, 2e-6)).unwrap();
    assert!((s.total_time() - 100e-6).abs() < 1e-18);
    assert!((s.delta * s.t_loop - 2.0 * PI).abs() < 1e-15);
    assert!((s.delta / (2.0 * PI) - 22.22e3).abs() < 10.0);
    assert_eq!(s.microwave_count(), 2);
}

#[test]
fn single_unechoed_square_loop() {
    let s = make_schedule(1, 45e-6, 0.0, false, PulseEnvelope::square(45e-6)).unwrap();
    assert_eq!(s.segments, vec![Segment::Laser { loop_index: 0, start: 0.0, duration: 45e-6 }]);
    assert!((s.delta * 45e-6 - 2.0 * PI).abs() < 1e-15);
}

#[test]
fn invalid_schedules() {
    let env = PulseEnvelope::sin2(45e-6, 2e-6);
    assert!(matches!(make_schedule(0, 45e-6, 5e-6, true, env), Err(Error::Schedule(_))));
    assert!(matches!(make_schedule(2, 4e-6, 5e-6, true, PulseEnvelope::sin2(4e-6, 2e-6)), Err(Error::Schedule(_))));
    assert!(matches!(make_schedule(2, 45e-6, 1e-6, true, env), Err(Error::Schedule(_))));
    let mw = MicrowaveModel { duration: 4e-6, depolarizing_error: 0.0 };
    assert!(matches!(make_schedule_with(2, 45e-6, 5e-6, true, env, mw), Err(Error::Schedule(_))));
}

#[test]
fn microwaves_sit_in_the_gap() {
    let env = PulseEnvelope::sin2(45e-6, 2e-6);
    let mw = MicrowaveModel { duration: 2e-6, depolarizing_error: 9e-5 };
    let s = make_schedule_with(2, 45e-6, 5e-6, true, env, mw).unwrap();
    for w in s.segments.windows(2) {
        assert!(w[0].end() <= w[1].start() + 1e-18);
    }
    assert!(s.segments.last().unwrap().end() <= s.total_time() + 1e-18);
}

#[test]
fn ramp_correction_matches_quadrature() {
    for (mode, power) in [(AmplitudeMode::Field, 4), (AmplitudeMode::Intensity, 2)] {
        let env = PulseEnvelope { amplitude: mode, ..PulseEnvelope::sin2(45e-6, 2e-6) };
        // The force scales with the square of the field factor.
        let area = pieces(&|t| env.field(t).powi(2), &env);
        assert!((area - env.force_area()).abs() < 1e-12 * area, "{mode:?}");
        assert!((env.ramp_correction() - (area - 45e-6)).abs() < 1e-15);
        let sin_area = pieces(&|t| env.value(t).powi(power / 2), &env);
        assert!((sin_area - area).abs() < 1e-12 * area);
    }
    let s = make_schedule(2, 45e-6, 5e-6, true, PulseEnvelope::sin2(45e-6, 2e-6)).unwrap();
    assert_eq!(s.ramp_correction(), s.envelope.ramp_correction());
    assert_eq!(PulseEnvelope::square(45e-6).ramp_correction(), 0.0);
}

#[test]
fn field_follows_schedule() {
    let s = make_schedule(2, 45e-6, 5e-6, true, PulseEnvelope::sin2(45e-6, 2e-6)).unwrap();
    assert_eq!(s.field_at(0.0), 0.0);
    assert_eq!(s.field_at(20e-6), 1.0);
    assert_eq!(s.field_at(48e-6), 0.0);
    assert!((s.field_at(51e-6) - 0.5).abs() < 1e-12);
    assert_eq!(s.field_at(101e-6), 0.0);
}

#[test]
fn schedule_serde_round_trip() {
    let s = make_schedule(2, 45e-6, 5e-6, true, PulseEnvelope::sin2(45e-6, 2e-6)).unwrap();
    let text = serde_json::to_string(&s).unwrap();
    let back: GateSchedule = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
}

#[test]
fn reversed_schedule_inverts_the_ideal_gate() {
    for phase in [PI / 4.0, 0.3, 1.7] {
        let s = make_schedule(2, 45e-6, 5e-6, true, PulseEnvelope::sin2(45e-6, 2e-6)).unwrap();
        let u = s.reversed().ideal_unitary(phase) * s.ideal_unitary(phase);
        let g = u[(0, 0)];
        assert!((g.norm() - 1.0).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == j { g } else { C64::new(0.0, 0.0) };
                assert!((u[(i, j)] - w).norm() < 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn envelope_is_bounded(t in -1e-6..50e-6f64, ramp in 0.1e-6..5e-6f64) {
        let e = PulseEnvelope::sin2(45e-6, ramp);
        let v = envelope_value(&e, t);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((0.0..=1.0).contains(&e.field(t)));
    }

    #[test]
    fn envelope_is_smooth_at_ramp_edges(ramp in 0.2e-6..5e-6f64) {
        let e = PulseEnvelope::sin2(45e-6, ramp);
        let h = 1e-6 * ramp;
        for edge in [0.0, ramp, e.duration() - ramp, e.duration()] {
            let l = e.value(edge - h);
            let r = e.value(edge + h);
            prop_assert!((l - r).abs() < 1e-5);
            // One-sided slopes agree: the first derivative vanishes at every joint.
            let dl = (e.value(edge) - l) / h;
            let dr = (r - e.value(edge)) / h;
            prop_assert!((dl - dr).abs() * ramp < 1e-4);
        }
    }

    #[test]
    fn total_time_is_loops_times_slot(k in 1usize..6, t_loop in 10e-6..100e-6f64, t_pi in 2e-6..10e-6f64) {
        let s = make_schedule(k, t_loop, t_pi, true, PulseEnvelope::sin2(t_loop, 2e-6)).unwrap();
        prop_assert!((s.total_time() - k as f64 * (t_loop + t_pi)).abs() < 1e-18);
        prop_assert!((s.delta * t_loop - 2.0 * PI).abs() < 1e-14);
    }
}
