use std::f64::consts::PI;

use lsgate::error_budget::{
    assemble_budget, com_heating_error, d_scatter_coefficient, d_scatter_error, echo_filter, gate_mode_heating_error,
    minimize_unimodal, optimize_detuning, p_scatter_error, perturbative_population, phase_noise_error,
    power_scaling, ramsey_error, ramsey_error_tones, ramsey_from_phase_noise, square_pulse_population,
    BudgetInputs, PScatterModel, PowerModel, PowerReference, Provenance, Tone,
};
use lsgate::linalg::C64;
use lsgate::pulse::PulseEnvelope;
use lsgate::Error;
use proptest::prelude::*;

const GAMMA_D: f64 = 1.0 / 52.7e-3;

fn big_delta() -> f64 {
    2.0 * PI * 7.8e6
}

#[test]
fn d_scatter_at_the_operating_point() {
    let e = d_scatter_error(GAMMA_D, big_delta(), 2, 0.055);
    // The 2π factors cancel: (1/52.7 ms)/(7.8 MHz) × √2/0.055.
    let direct = (1.0 / 52.7e-3) / 7.8e6 * 2f64.sqrt() / 0.055;
    assert!((e / direct - 1.0).abs() < 1e-14, "{e}");
    assert!((e - 6.2553e-5).abs() < 1e-9);
    assert!((e / 6e-5 - 1.0).abs() < 0.1);
    assert!((d_scatter_coefficient(GAMMA_D, 2, 0.055) / big_delta() / e - 1.0).abs() < 1e-15);
}

#[test]
fn d_scatter_scaling() {
    let e = d_scatter_error(GAMMA_D, big_delta(), 2, 0.055);
    assert!((d_scatter_error(GAMMA_D, 2.0 * big_delta(), 2, 0.055) - e / 2.0).abs() < 1e-18);
    let k1 = d_scatter_error(GAMMA_D, big_delta(), 1, 0.055);
    assert!((d_scatter_error(GAMMA_D, big_delta(), 4, 0.055) - 2.0 * k1).abs() < 1e-18);
}

#[test]
fn p_scatter_grows_with_detuning() {
    let m = PScatterModel { coefficient: 1e-13 };
    let d = big_delta();
    assert!(p_scatter_error(&m, 2.0 * d, 0.1) > p_scatter_error(&m, d, 0.1));
    assert_eq!(p_scatter_error(&m, d, 0.0), 0.0);
}

#[test]
fn calibrated_minimum_reproduces_the_floor() {
    let c_d = d_scatter_coefficient(GAMMA_D, 2, 0.055);
    let m = PScatterModel::calibrated_to_minimum(c_d, 7e-6);
    let opt = optimize_detuning(c_d, &m, big_delta(), 0.1).unwrap();
    assert!((opt.epsilon - 7e-6).abs() < 1e-12);
    assert!((opt.delta / (c_d / m.coefficient).sqrt() - 1.0).abs() < 1e-6);
    // 100 mW reaches the gate time at 7.8 MHz; the floor needs about 2 W.
    assert!(opt.power > 1.0 && opt.power < 3.0, "{}", opt.power);
}

#[test]
fn vanishing_p_scatter_pushes_the_optimum_out() {
    let opt = optimize_detuning(1.0, &PScatterModel { coefficient: 0.0 }, 1.0, 1.0).unwrap();
    assert!(opt.delta.is_infinite());
    assert_eq!(opt.epsilon, 0.0);
}

#[test]
fn non_unimodal_objective_is_rejected() {
    let r = minimize_unimodal(|x: f64| (x.ln() * 3.0).sin(), 1.0, 1e4);
    assert!(r.is_err());
}

#[test]
fn power_scaling_laws() {
    let reference = PowerReference { power: 0.1, epsilon: 6e-5, gate_time: 100e-6 };
    assert!((power_scaling(3e-5, 100e-6, &reference) - 0.2).abs() < 1e-15);
    assert!((power_scaling(6e-5, 100e-6, &reference) - 0.1).abs() < 1e-15);
    // The two quoted operating points: 6e-5 at 100 mW, and the D-state part of the floor at ~2 W.
    let p = power_scaling(3.5e-6, 100e-6, &reference);
    assert!(p > 1.0 && p < 2.5, "{p}");
}

#[test]
fn phase_noise_at_the_operating_point() {
    let g = 2.0 * PI * 0.76e6;
    let e = phase_noise_error(0.21, g, big_delta());
    assert!((e / 3e-4 - 1.0).abs() < 0.05, "{e}");
    assert_eq!(phase_noise_error(0.0, g, big_delta()), 0.0);
    assert!((phase_noise_error(0.21, g / 2f64.sqrt(), big_delta()) - e / 4.0).abs() < 1e-18);
    assert!((ramsey_from_phase_noise(e, g, big_delta()) - 0.21).abs() < 1e-14);
}

#[test]
fn ramsey_filter_integrates_a_single_tone() {
    // A narrow Lorentzian approaches the discrete-tone result.
    let t = 100e-6;
    let (w0, amp) = (2.0 * PI * 7e3, 0.3);
    let tone = ramsey_error_tones(&[(w0, amp)], t);
    let gamma = 2.0 * PI * 5.0;
    let power = PI * amp * amp;
    let s = |w: f64| power * (gamma / PI) / ((w - w0).powi(2) + gamma * gamma);
    let cont = ramsey_error(s, t, 2.0 * PI * 1e6);
    assert!((cont / tone - 1.0).abs() < 0.01, "{cont} vs {tone}");
    assert_eq!(echo_filter(0.0, t), 0.0);
}

#[test]
fn heating_terms() {
    assert!((com_heating_error(3e3, 100e-6, 3e-4) - 9e-5).abs() < 1e-18);
    assert_eq!(com_heating_error(0.0, 100e-6, 3e-4), 0.0);
    let a = gate_mode_heating_error(15.0, 100e-6, 2);
    assert!(a < 4e-4);
    assert_eq!(gate_mode_heating_error(0.0, 100e-6, 2), 0.0);
    assert!((gate_mode_heating_error(15.0, 100e-6, 4) - a / 2.0).abs() < 1e-18);
}

#[test]
fn square_pulse_population_matches_closed_form() {
    let g = 2.0 * PI * 0.2e6;
    let d = big_delta();
    let tone = [Tone { amplitude: C64::new(g, 0.0), frequency: d }];
    let times: Vec<f64> = (1..40).map(|k| k as f64 * 0.173e-6).collect();
    let p = perturbative_population(&tone, |_| 1.0, &times);
    for (t, v) in times.iter().zip(&p) {
        let c = square_pulse_population(g, d, *t);
        assert!((v - c).abs() < 1e-9 * 4.0 * (g / d).powi(2), "t = {t}");
    }
    let zero = perturbative_population(&[Tone { amplitude: C64::new(0.0, 0.0), frequency: d }], |_| 1.0, &times);
    assert!(zero.iter().all(|&v| v == 0.0));
}

#[test]
fn shaped_pulse_suppresses_off_resonant_population() {
    let g = 2.0 * PI * 0.2e6;
    let d = big_delta();
    let tone = [Tone { amplitude: C64::new(g, 0.0), frequency: d }];
    let sq = PulseEnvelope::square(45e-6);
    let sh = PulseEnvelope::sin2(45e-6, 2e-6);
    // The square-pulse population oscillates; average it over the last cycle the light is on.
    let cycle = 2.0 * PI / d;
    let times: Vec<f64> = (0..64).map(|k| sq.duration() - cycle + k as f64 * cycle / 64.0).collect();
    let p = perturbative_population(&tone, |t| sq.field(t), &times);
    let a = p.iter().sum::<f64>() / p.len() as f64;
    assert!((a / (2.0 * (g / d).powi(2)) - 1.0).abs() < 0.05);
    let b = perturbative_population(&tone, |t| sh.field(t), &[sh.duration()])[0];
    assert!(a > 1e2 * b, "{a} vs {b}");
}

#[test]
fn preset_budget() {
    let b = assemble_budget(&BudgetInputs::presets()).unwrap();
    let top = b.top.total;
    assert!(top > 0.8e-4 / 3.0 && top < 0.8e-4 * 3.0, "{top}");
    assert!(b.min > 0.27e-4 / 3.0 && b.min < 0.27e-4 * 3.0, "{}", b.min);
    assert!(b.bottom.total <= 12e-4, "{}", b.bottom.total);
    for s in [&b.top, &b.bottom] {
        let sum: f64 = s.entries.iter().map(|e| e.value).sum();
        assert!((s.total - sum).abs() <= 1e-15 * sum);
    }
    assert_eq!(b.bottom.get("leakage"), Some(1.7e-4 + 0.7e-4));
    assert_eq!(b.top.entries[1].provenance, Provenance::ExternalInput);
    assert!(b.table().contains("microwaves"));
}

#[test]
fn missing_inputs_are_listed() {
    let mut i = BudgetInputs::presets();
    i.eta = None;
    i.kappa_com = None;
    match assemble_budget(&i) {
        Err(Error::BudgetIncomplete(s)) => {
            assert!(s.contains("eta") && s.contains("kappa_com"), "{s}");
        }
        other => panic!("expected an incomplete budget, got {other:?}"),
    }
}

proptest! {
    #[test]
    fn d_scatter_is_linear_in_gamma_and_inverse_in_eta(gamma in 1.0..100.0f64, eta in 0.01..0.2f64) {
        let d = big_delta();
        let e = d_scatter_error(gamma, d, 2, eta);
        prop_assert!((d_scatter_error(2.0 * gamma, d, 2, eta) / e - 2.0).abs() < 1e-13);
        prop_assert!((d_scatter_error(gamma, d, 2, 2.0 * eta) / e - 0.5).abs() < 1e-13);
    }

    #[test]
    fn required_power_ignores_linewidth_at_fixed_ratio(k in 0.1..10.0f64, t in 20e-6..500e-6f64) {
        let m = PowerModel { power: 0.1, gamma: 18.98, delta: big_delta(), gate_time: 100e-6 };
        let p0 = m.required_power(m.gamma, m.delta, t);
        let p1 = m.required_power(k * m.gamma, k * m.delta, t);
        prop_assert!((p1 / p0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_noise_is_quartic(g in 1e5..1e7f64, s in 0.1..3.0f64) {
        let d = big_delta();
        let a = phase_noise_error(0.2, g, d);
        let b = phase_noise_error(0.2, s * g, s * d);
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert!((phase_noise_error(0.2, s * g, d) / a - s.powi(4)).abs() < 1e-10 * s.powi(4));
    }

    #[test]
    fn optimum_is_analytic(c_d in 1e1..1e4f64, c_p in 1e-16..1e-11f64) {
        let opt = optimize_detuning(c_d, &PScatterModel { coefficient: c_p }, 1e7, 0.1).unwrap();
        prop_assert!((opt.delta / (c_d / c_p).sqrt() - 1.0).abs() < 1e-5);
        prop_assert!((opt.epsilon / (2.0 * (c_d * c_p).sqrt()) - 1.0).abs() < 1e-9);
    }
}
