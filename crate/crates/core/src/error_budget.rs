//! Analytic gate-error estimates and the assembled error budget.
//!
//! Rates and detunings are angular (rad/s). Scattering off the D manifold is counted as a full
//! error per event (rate times time); there is no Rayleigh recovery.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, C64};

/// Decay rates of the excited manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicRates {
    /// D3/2 decay rate.
    pub gamma_d: f64,
    /// P decay rate.
    pub gamma_p: f64,
    /// Detuning of the gate laser from the P states.
    pub p_detuning: f64,
    /// Fraction of P scattering events that are Raman.
    pub raman_fraction: f64,
}

impl AtomicRates {
    /// 171Yb+: 52.7 ms D3/2 lifetime, 2π×19.6 MHz P1/2 linewidth, 435.5 nm light about
    /// 2π×123 THz from the 369.5 nm line.
    pub fn yb171() -> Self {
        AtomicRates {
            gamma_d: 1.0 / 52.7e-3,
            gamma_p: 2.0 * PI * 19.6e6,
            p_detuning: 2.0 * PI * 123e12,
            raman_fraction: 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rates.gamma_d", self.gamma_d),
            ("rates.gamma_p", self.gamma_p),
            ("rates.p_detuning", self.p_detuning),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.raman_fraction) {
            return Err(Error::config("rates.raman_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Error from scattering off the D states, 2π(Γ/Δ)√K/η.
pub fn d_scatter_error(gamma_d: f64, delta: f64, loops: usize, eta: f64) -> f64 {
    2.0 * PI * (gamma_d / delta) * (loops as f64).sqrt() / eta
}

/// Coefficient c_D in ε_D = c_D/Δ.
pub fn d_scatter_coefficient(gamma_d: f64, loops: usize, eta: f64) -> f64 {
    2.0 * PI * gamma_d * (loops as f64).sqrt() / eta
}

/// Raman scattering off the P states at fixed gate time.
///
/// Holding the gate speed requires g² ∝ Δ, so the laser intensity, and with it the P-state
/// scattering rate Γ_P g_P²/Δ_P², grows linearly in Δ: ε_P = c_P·Δ·(power/reference power at Δ).
/// The coefficient is a calibration input, not an atomic-structure prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PScatterModel {
    /// ε_P per unit detuning (s/rad) at the gate time the model was calibrated for.
    pub coefficient: f64,
}

impl PScatterModel {
    /// Coefficient that makes the optimum of c_D/Δ + c_P Δ equal `eps_min`.
    pub fn calibrated_to_minimum(c_d: f64, eps_min: f64) -> Self {
        PScatterModel { coefficient: eps_min * eps_min / (4.0 * c_d) }
    }

    /// Coefficient from atomic data: with Ω = g²/Δ fixed, the P-state coupling obeys
    /// g_P² = ratio·g² = ratio·Ω·Δ, giving ε_P = f_R Γ_P ratio Ω Δ t/Δ_P².
    pub fn from_atomic(rates: &AtomicRates, coupling_ratio: f64, omega: f64, t_gate: f64) -> Self {
        let c = rates.raman_fraction * rates.gamma_p * coupling_ratio * omega * t_gate
            / (rates.p_detuning * rates.p_detuning);
        PScatterModel { coefficient: c }
    }

    pub fn error(&self, delta: f64) -> f64 {
        self.coefficient * delta
    }
}

/// ε_γ^P at detuning `delta`; zero when the laser is off.
pub fn p_scatter_error(model: &PScatterModel, delta: f64, power: f64) -> f64 {
    if power <= 0.0 {
        return 0.0;
    }
    model.error(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetuningOptimum {
    pub delta: f64,
    pub epsilon: f64,
    /// Laser power needed at the optimum to keep the gate time, from P ∝ Δ.
    pub power: f64,
}

/// Minimize `total(Δ)` over [lo, hi] by a log-spaced scan followed by golden-section search.
/// The scan must show a single interior minimum.
pub fn minimize_unimodal<F: Fn(f64) -> f64>(total: F, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Optimization("search interval must be positive and ordered".into()));
    }
    let n = 200;
    let xs: Vec<f64> = (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| total(x)).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Optimization("objective is not finite on the interval".into()));
    }
    let k = (0..=n).min_by(|&a, &b| ys[a].total_cmp(&ys[b])).unwrap_or(0);
    if k == 0 || k == n {
        return Err(Error::Optimization(format!(
            "minimum lies on the boundary of [{lo:e}, {hi:e}]"
        )));
    }
    let tol = 1e-12;
    let down = ys[..=k].windows(2).all(|w| w[1] <= w[0] * (1.0 + tol));
    let up = ys[k..].windows(2).all(|w| w[1] >= w[0] * (1.0 - tol));
    if !(down && up) {
        return Err(Error::Optimization("objective is not unimodal".into()));
    }
    let (mut a, mut b) = (xs[k - 1].ln(), xs[k + 1].ln());
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let f = |u: f64| total(u.exp());
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    let x = (0.5 * (a + b)).exp();
    Ok((x, total(x)))
}

/// Optimal detuning for c_D/Δ + c_P Δ, and the power needed there given that `ref_power`
/// reaches the gate time at `ref_delta`.
pub fn optimize_detuning(
    c_d: f64,
    p_model: &PScatterModel,
    ref_delta: f64,
    ref_power: f64,
) -> Result<DetuningOptimum> {
    if p_model.coefficient <= 0.0 {
        return Ok(DetuningOptimum { delta: f64::INFINITY, epsilon: 0.0, power: f64::INFINITY });
    }
    let guess = (c_d / p_model.coefficient).sqrt();
    let (delta, epsilon) = minimize_unimodal(|d| c_d / d + p_model.error(d), guess * 1e-3, guess * 1e3)?;
    Ok(DetuningOptimum { delta, epsilon, power: ref_power * delta / ref_delta })
}

/// Reference operating point for the power law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerReference {
    pub power: f64,
    pub epsilon: f64,
    pub gate_time: f64,
}

/// Power needed for error `epsilon` at gate time `t_gate`: P = P₀(ε₀t₀)/(εt).
pub fn power_scaling(epsilon: f64, t_gate: f64, reference: &PowerReference) -> f64 {
    reference.power * (reference.epsilon * reference.gate_time) / (epsilon * t_gate)
}

/// Power from the physical constraints g² ∝ PΓ and g²/Δ ∝ 1/t, scaled from a reference point.
/// The scattering error ε ∝ Γ/Δ is set by Γ/Δ alone, so for fixed error the result does not
/// depend on the linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerModel {
    pub power: f64,
    pub gamma: f64,
    pub delta: f64,
    pub gate_time: f64,
}

impl PowerModel {
    pub fn required_power(&self, gamma: f64, delta: f64, t_gate: f64) -> f64 {
        self.power * (delta / self.delta) * (self.gamma / gamma) * (self.gate_time / t_gate)
    }
}

fn simpson<T, F>(f: &F, a: f64, b: f64, fa: T, fm: T, fb: T, whole: T, eps: f64, depth: usize) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + Norm,
    F: Fn(f64) -> T,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let h = (b - a) / 12.0;
    let left = (fa + flm * 4.0 + fm) * h;
    let right = (fm + frm * 4.0 + fb) * h;
    let diff = left + right - whole;
    // The floor relative to the local value stops refinement at rounding level.
    if depth == 0 || diff.norm1() <= 15.0 * eps.max(1e-14 * (left + right).norm1()) {
        return left + right + diff * (1.0 / 15.0);
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

pub trait Norm {
    fn norm1(&self) -> f64;
}

impl Norm for f64 {
    fn norm1(&self) -> f64 {
        self.abs()
    }
}

impl Norm for C64 {
    fn norm1(&self) -> f64 {
        self.norm()
    }
}

/// Adaptive Simpson quadrature of `f` over [a, b] to absolute tolerance `eps`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, eps: f64) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + Norm,
    F: Fn(f64) -> T,
{
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    simpson(&f, a, b, fa, fm, fb, whole, eps, 48)
}

/// One spectral component of an off-resonant coupling: amplitude (rad/s) and the frequency at
/// which it rotates in the frame of the target state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub amplitude: C64,
    pub frequency: f64,
}

/// Second-order population P(t) = |∫₀ᵗ env(t') Σ_k g_k e^{iω_k t'} dt'|² at each of the sorted
/// `times`. The integral is accumulated interval by interval.
pub fn perturbative_population<E: Fn(f64) -> f64>(tones: &[Tone], envelope: E, times: &[f64]) -> Vec<f64> {
    let scale: f64 = tones.iter().map(|t| t.amplitude.norm()).sum::<f64>().max(1e-300);
    let fastest = tones.iter().map(|t| t.frequency.abs()).fold(0.0, f64::max).max(1e-300);
    let integrand = |t: f64| -> C64 {
        let e = envelope(t);
        if e == 0.0 {
            return C64::new(0.0, 0.0);
        }
        tones.iter().map(|k| k.amplitude * cis(k.frequency * t)).sum::<C64>() * e
    };
    let piece = 2.0 * PI / fastest;
    let mut acc = C64::new(0.0, 0.0);
    let mut t0 = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let mut a = t0;
        while a < t {
            let b = (a + piece).min(t);
            acc += integrate(integrand, a, b, 1e-13 * scale * (b - a));
            a = b;
        }
        t0 = t.max(t0);
        out.push(acc.norm_sqr());
    }
    out
}

/// Closed form 4(g/Δ)² sin²(Δt/2) for a square pulse of constant coupling.
pub fn square_pulse_population(g: f64, detuning: f64, t: f64) -> f64 {
    4.0 * (g / detuning).powi(2) * (0.5 * detuning * t).sin().powi(2)
}

/// Spin-echo filter function for a Ramsey sequence of total length `t`, for a one-sided phase
/// spectral density normalized so that ⟨φ²⟩ = (1/2π)∫₀^∞ S_φ dω.
pub fn echo_filter(omega: f64, t: f64) -> f64 {
    2.0 * (omega * t / 4.0).sin().powi(4) / PI
}

/// ε_ramsey = ∫₀^ω_max S_φ(ω) F(ω) dω by adaptive quadrature.
pub fn ramsey_error<S: Fn(f64) -> f64>(spectral_density: S, t: f64, omega_max: f64) -> f64 {
    let period = 4.0 * PI / t;
    let mut sum = 0.0;
    let mut a = 0.0;
    while a < omega_max {
        let b = (a + period).min(omega_max);
        let f = |w: f64| spectral_density(w) * echo_filter(w, t);
        let coarse: f64 = (0..=16).map(|k| f(a + (b - a) * k as f64 / 16.0).abs()).sum::<f64>() * (b - a) / 17.0;
        sum += integrate(f, a, b, 1e-12 * coarse + 1e-300);
        a = b;
    }
    sum
}

/// ε_ramsey for phase modulation φ(t) = Σ A_k sin(ω_k t + θ_k) with random θ_k.
pub fn ramsey_error_tones(tones: &[(f64, f64)], t: f64) -> f64 {
    tones.iter().map(|&(w, a)| PI * a * a * echo_filter(w, t)).sum()
}

/// Gate error from laser phase noise, ε_ramsey·(4g²/Δ²)².
pub fn phase_noise_error(eps_ramsey: f64, g: f64, delta: f64) -> f64 {
    eps_ramsey * (4.0 * g * g / (delta * delta)).powi(2)
}

/// ε_ramsey implied by a phase-noise gate error.
pub fn ramsey_from_phase_noise(eps_phi: f64, g: f64, delta: f64) -> f64 {
    eps_phi / (4.0 * g * g / (delta * delta)).powi(2)
}

/// Error from c.o.m. heating during the transient c.o.m. excitation, κ t P.
pub fn com_heating_error(kappa_com: f64, t_gate: f64, p_com: f64) -> f64 {
    kappa_com * t_gate * p_com
}

/// Gate-mode heating error, κ t/(2K). A first-order stand-in with upper-bound semantics.
pub fn gate_mode_heating_error(kappa_gate: f64, t_gate: f64, loops: usize) -> f64 {
    kappa_gate * t_gate / (2.0 * loops as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Simulated,
    ExternalInput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetEntry {
    pub mechanism: String,
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSection {
    pub entries: Vec<BudgetEntry>,
    pub total: f64,
}

impl BudgetSection {
    fn new(entries: Vec<BudgetEntry>) -> Self {
        let total = entries.iter().map(|e| e.value).sum();
        BudgetSection { entries, total }
    }

    pub fn get(&self, mechanism: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.mechanism == mechanism).map(|e| e.value)
    }
}

/// Inputs to [`assemble_budget`]. Every field must be present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetInputs {
    pub gamma_d: Option<f64>,
    pub delta: Option<f64>,
    pub loops: Option<usize>,
    pub eta: Option<f64>,
    pub g: Option<f64>,
    pub t_gate: Option<f64>,
    /// Laser power at the operating point, W.
    pub power: Option<f64>,
    /// Minimum total scattering error used to calibrate the P-state model.
    pub eps_scatter_min: Option<f64>,
    /// Off-resonant plus Lamb-Dicke error from simulation.
    pub off_resonant: Option<f64>,
    pub off_resonant_provenance: Option<Provenance>,
    /// Measured leakage rates per gate for beams A and B.
    pub leakage_a: Option<f64>,
    pub leakage_b: Option<f64>,
    pub eps_ramsey: Option<f64>,
    pub kappa_gate: Option<f64>,
    pub kappa_com: Option<f64>,
    pub p_com: Option<f64>,
    pub p_com_provenance: Option<Provenance>,
    pub microwave_error: Option<f64>,
    pub microwave_pulses: Option<usize>,
}

impl BudgetInputs {
    /// Values quoted for the gate demonstration, with the off-resonant term at its tabulated value.
    pub fn presets() -> Self {
        BudgetInputs {
            gamma_d: Some(1.0 / 52.7e-3),
            delta: Some(2.0 * PI * 1.4e6 * 5.57),
            loops: Some(2),
            eta: Some(0.055),
            g: Some(2.0 * PI * 0.76e6),
            t_gate: Some(100e-6),
            power: Some(0.1),
            eps_scatter_min: Some(7e-6),
            off_resonant: Some(0.2e-4),
            off_resonant_provenance: Some(Provenance::ExternalInput),
            leakage_a: Some(1.7e-4),
            leakage_b: Some(0.7e-4),
            eps_ramsey: Some(0.21),
            kappa_gate: Some(15.0),
            kappa_com: Some(3e3),
            p_com: Some(3e-4),
            p_com_provenance: Some(Provenance::ExternalInput),
            microwave_error: Some(9e-5),
            microwave_pulses: Some(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBudget {
    /// Non-technical contributions at the operating power.
    pub top: BudgetSection,
    /// Non-technical floor at the optimal detuning.
    pub min: f64,
    pub optimum: DetuningOptimum,
    /// Technical contributions.
    pub bottom: BudgetSection,
}

macro_rules! need {
    ($inputs:expr, $missing:expr, $($field:ident),+) => {
        ($(match $inputs.$field {
            Some(v) => v,
            None => {
                $missing.push(stringify!($field));
                Default::default()
            }
        }),+)
    };
}

/// Assemble the two-section budget. Missing inputs are reported together.
pub fn assemble_budget(inputs: &BudgetInputs) -> Result<ErrorBudget> {
    let mut missing = Vec::new();
    let (gamma_d, delta, loops, eta, g, t_gate, power, eps_min, off_res) =
        need!(inputs, missing, gamma_d, delta, loops, eta, g, t_gate, power, eps_scatter_min, off_resonant);
    let (leak_a, leak_b, eps_ramsey, kappa_gate, kappa_com, p_com, mw_err, mw_n) = need!(
        inputs, missing, leakage_a, leakage_b, eps_ramsey, kappa_gate, kappa_com, p_com, microwave_error,
        microwave_pulses
    );
    if !missing.is_empty() {
        return Err(Error::BudgetIncomplete(missing.join(", ")));
    }
    let c_d = d_scatter_coefficient(gamma_d, loops, eta);
    let p_model = PScatterModel::calibrated_to_minimum(c_d, eps_min);
    let scatter = c_d / delta + p_scatter_error(&p_model, delta, power);
    let optimum = optimize_detuning(c_d, &p_model, delta, power)?;
    let top = BudgetSection::new(vec![
        BudgetEntry { mechanism: "spontaneous emission".into(), value: scatter, provenance: Provenance::Analytic },
        BudgetEntry {
            mechanism: "off-resonant + lamb-dicke".into(),
            value: off_res,
            provenance: inputs.off_resonant_provenance.unwrap_or(Provenance::Simulated),
        },
    ]);
    let bottom = BudgetSection::new(vec![
        BudgetEntry { mechanism: "leakage".into(), value: leak_a + leak_b, provenance: Provenance::ExternalInput },
        BudgetEntry {
            mechanism: "laser phase noise".into(),
            value: phase_noise_error(eps_ramsey, g, delta),
            provenance: Provenance::Analytic,
        },
        BudgetEntry {
            mechanism: "gate mode heating".into(),
            value: gate_mode_heating_error(kappa_gate, t_gate, loops),
            provenance: Provenance::Analytic,
        },
        BudgetEntry {
            mechanism: "c.o.m. heating".into(),
            value: com_heating_error(kappa_com, t_gate, p_com),
            provenance: if inputs.p_com_provenance == Some(Provenance::Simulated) {
                Provenance::Simulated
            } else {
                Provenance::Analytic
            },
        },
        BudgetEntry {
            mechanism: "microwaves".into(),
            value: mw_err * mw_n as f64,
            provenance: Provenance::ExternalInput,
        },
    ]);
    Ok(ErrorBudget { min: optimum.epsilon + off_res, top, optimum, bottom })
}

impl ErrorBudget {
    /// Aligned text rendering in units of 1e-4.
    pub fn table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<28} {:>12}\n", "mechanism", "error (1e-4)"));
        for e in &self.top.entries {
            s.push_str(&format!("{:<28} {:>12.3}\n", e.mechanism, e.value * 1e4));
        }
        s.push_str(&format!("{:<28} {:>12.3}\n", "total", self.top.total * 1e4));
        s.push_str(&format!("{:<28} {:>12.3}\n", "min", self.min * 1e4));
        s.push_str(&format!("{}\n", "-".repeat(41)));
        for e in &self.bottom.entries {
            s.push_str(&format!("{:<28} {:>12.3}\n", e.mechanism, e.value * 1e4));
        }
        s.push_str(&format!("{:<28} {:>12.3}\n", "total", self.bottom.total * 1e4));
        s
    }
}
