//! Pulse envelopes and the K-loop spin-echo gate schedule.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, qubit_rotation, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeShape {
    Square,
    Sin2Ramp,
}

/// Whether the envelope multiplies the laser field (and so g) or the intensity (g squared).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    #[default]
    Field,
    Intensity,
}

/// Envelope of one laser pulse. `loop_duration` is measured from the middle of the rise to
/// the middle of the fall, so the pulse lasts `loop_duration + ramp_duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub shape: EnvelopeShape,
    pub ramp_duration: f64,
    pub loop_duration: f64,
    #[serde(default)]
    pub amplitude: AmplitudeMode,
}

impl PulseEnvelope {
    pub fn square(loop_duration: f64) -> Self {
        PulseEnvelope {
            shape: EnvelopeShape::Square,
            ramp_duration: 0.0,
            loop_duration,
            amplitude: AmplitudeMode::Field,
        }
    }

    pub fn sin2(loop_duration: f64, ramp_duration: f64) -> Self {
        PulseEnvelope {
            shape: EnvelopeShape::Sin2Ramp,
            ramp_duration,
            loop_duration,
            amplitude: AmplitudeMode::Field,
        }
    }

    fn ramp(&self) -> f64 {
        match self.shape {
            EnvelopeShape::Square => 0.0,
            EnvelopeShape::Sin2Ramp => self.ramp_duration,
        }
    }

    /// Total time the laser is on.
    pub fn duration(&self) -> f64 {
        self.loop_duration + self.ramp()
    }

    /// Envelope in [0, 1] at time `t` from the start of the pulse.
    pub fn value(&self, t: f64) -> f64 {
        let total = self.duration();
        if !(0.0..=total).contains(&t) {
            return 0.0;
        }
        let r = self.ramp();
        if r == 0.0 {
            return 1.0;
        }
        if t < r {
            (0.5 * PI * t / r).sin().powi(2)
        } else if t > total - r {
            (0.5 * PI * (total - t) / r).sin().powi(2)
        } else {
            1.0
        }
    }

    /// Factor multiplying the single-photon coupling g.
    pub fn field(&self, t: f64) -> f64 {
        let v = self.value(t);
        match self.amplitude {
            AmplitudeMode::Field => v,
            AmplitudeMode::Intensity => v.sqrt(),
        }
    }

    /// Integral of the squared field over the pulse, the quantity the light-shift force scales with.
    pub fn force_area(&self) -> f64 {
        let r = self.ramp();
        let flat = self.loop_duration - r;
        match self.amplitude {
            AmplitudeMode::Field => flat + 2.0 * 3.0 * r / 8.0,
            AmplitudeMode::Intensity => flat + 2.0 * r / 2.0,
        }
    }

    /// Difference between [`force_area`](Self::force_area) and that of a square pulse of length `loop_duration`.
    pub fn ramp_correction(&self) -> f64 {
        self.force_area() - self.loop_duration
    }
}

/// Envelope value at time `t` from the pulse start.
pub fn envelope_value(env: &PulseEnvelope, t: f64) -> f64 {
    env.value(t)
}

/// Global rotation `exp(-i theta/2 sum_j (cos(phi) X_j + sin(phi) Y_j))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalRotation {
    pub phi: f64,
    pub theta: f64,
}

impl GlobalRotation {
    pub fn x(theta: f64) -> Self {
        GlobalRotation { phi: 0.0, theta }
    }

    pub fn minus_x(theta: f64) -> Self {
        GlobalRotation { phi: PI, theta }
    }

    /// Two-qubit matrix in the basis {dd, du, ud, uu}.
    pub fn matrix(&self) -> Matrix4<C64> {
        let r = qubit_rotation(self.phi, self.theta);
        r.kronecker(&r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrowaveModel {
    /// Pulse length in s; zero for instantaneous pulses.
    pub duration: f64,
    /// Per-pulse depolarizing error applied to each ion.
    pub depolarizing_error: f64,
}

impl Default for MicrowaveModel {
    fn default() -> Self {
        MicrowaveModel { duration: 0.0, depolarizing_error: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Laser { loop_index: usize, start: f64, duration: f64 },
    Microwave { start: f64, duration: f64, rotation: GlobalRotation },
}

impl Segment {
    pub fn start(&self) -> f64 {
        match *self {
            Segment::Laser { start, .. } | Segment::Microwave { start, .. } => start,
        }
    }

    pub fn end(&self) -> f64 {
        match *self {
            Segment::Laser { start, duration, .. } | Segment::Microwave { start, duration, .. } => {
                start + duration
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSchedule {
    pub loops: usize,
    pub t_loop: f64,
    pub t_pi: f64,
    /// Loop detuning 2π/t_loop in rad/s.
    pub delta: f64,
    pub echo: bool,
    pub envelope: PulseEnvelope,
    pub microwave: MicrowaveModel,
    pub segments: Vec<Segment>,
    /// +1 for a forward schedule, -1 after [`GateSchedule::reversed`].
    pub phase_sign: f64,
}

/// Lay out K loops, each followed by a spin-echo π pulse when `echo` is set.
pub fn make_schedule(
    loops: usize,
    t_loop: f64,
    t_pi: f64,
    echo: bool,
    envelope: PulseEnvelope,
) -> Result<GateSchedule> {
    make_schedule_with(loops, t_loop, t_pi, echo, envelope, MicrowaveModel::default())
}

pub fn make_schedule_with(
    loops: usize,
    t_loop: f64,
    t_pi: f64,
    echo: bool,
    envelope: PulseEnvelope,
    microwave: MicrowaveModel,
) -> Result<GateSchedule> {
    if loops == 0 {
        return Err(Error::Schedule("at least one loop is required".into()));
    }
    if !(t_loop.is_finite() && t_loop > 0.0) {
        return Err(Error::Schedule("loop time must be positive".into()));
    }
    if !(t_pi.is_finite() && t_pi >= 0.0) {
        return Err(Error::Schedule("microwave slot must be non-negative".into()));
    }
    let mut envelope = envelope;
    envelope.loop_duration = t_loop;
    let ramp = envelope.duration() - t_loop;
    if envelope.shape == EnvelopeShape::Sin2Ramp {
        if !(ramp > 0.0) {
            return Err(Error::Schedule("sin² ramp needs a positive ramp duration".into()));
        }
        if t_loop <= 2.0 * ramp {
            return Err(Error::Schedule(format!(
                "loop time {t_loop:e} s leaves no flat top for ramps of {ramp:e} s"
            )));
        }
    }
    if t_pi < ramp {
        return Err(Error::Schedule(format!(
            "microwave slot {t_pi:e} s is shorter than the ramp {ramp:e} s"
        )));
    }
    let gap = t_pi - ramp;
    if microwave.duration > gap + 1e-15 {
        return Err(Error::Schedule(format!(
            "microwave pulse of {:e} s does not fit in the {gap:e} s gap",
            microwave.duration
        )));
    }
    if !(0.0..=1.0).contains(&microwave.depolarizing_error) {
        return Err(Error::Schedule("microwave depolarizing error must lie in [0, 1]".into()));
    }
    let slot = t_loop + t_pi;
    let mut segments = Vec::new();
    for k in 0..loops {
        let start = k as f64 * slot;
        segments.push(Segment::Laser { loop_index: k, start, duration: t_loop + ramp });
        if echo {
            let rotation = if k % 2 == 0 { GlobalRotation::x(PI) } else { GlobalRotation::minus_x(PI) };
            let centre = start + t_loop + ramp + gap / 2.0;
            segments.push(Segment::Microwave {
                start: centre - microwave.duration / 2.0,
                duration: microwave.duration,
                rotation,
            });
        }
    }
    Ok(GateSchedule {
        loops,
        t_loop,
        t_pi,
        delta: 2.0 * PI / t_loop,
        echo,
        envelope,
        microwave,
        segments,
        phase_sign: 1.0,
    })
}

impl GateSchedule {
    /// Total gate time K(t_loop + t_pi).
    pub fn total_time(&self) -> f64 {
        self.loops as f64 * (self.t_loop + self.t_pi)
    }

    pub fn microwave_count(&self) -> usize {
        self.segments.iter().filter(|s| matches!(s, Segment::Microwave { .. })).count()
    }

    /// Field factor on g at absolute time `t`.
    pub fn field_at(&self, t: f64) -> f64 {
        for s in &self.segments {
            if let Segment::Laser { start, duration, .. } = *s {
                if t >= start && t <= start + duration {
                    return self.envelope.field(t - start);
                }
            }
        }
        0.0
    }

    pub fn ramp_correction(&self) -> f64 {
        self.envelope.ramp_correction()
    }

    /// Net product of the microwave rotations.
    pub fn net_rotation(&self) -> Matrix4<C64> {
        let mut u = Matrix4::<C64>::identity();
        for s in &self.segments {
            if let Segment::Microwave { rotation, .. } = s {
                u = rotation.matrix() * u;
            }
        }
        u
    }

    /// Ideal spin unitary when every loop imprints diag(1, e^{iΦ}, e^{iΦ}, 1).
    pub fn ideal_unitary(&self, phase_per_loop: f64) -> Matrix4<C64> {
        let p = cis(self.phase_sign * phase_per_loop);
        let one = C64::new(1.0, 0.0);
        let loop_u = Matrix4::from_diagonal(&nalgebra::Vector4::new(one, p, p, one));
        let mut u = Matrix4::<C64>::identity();
        for s in &self.segments {
            match s {
                Segment::Laser { .. } => u = loop_u * u,
                Segment::Microwave { rotation, .. } => u = rotation.matrix() * u,
            }
        }
        u
    }

    /// Time-reversed schedule: segments in reverse order, rotations and loop phases negated.
    pub fn reversed(&self) -> GateSchedule {
        let total = self.total_time();
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| match *s {
                Segment::Laser { loop_index, start, duration } => Segment::Laser {
                    loop_index: self.loops - 1 - loop_index,
                    start: total - start - duration,
                    duration,
                },
                Segment::Microwave { start, duration, rotation } => Segment::Microwave {
                    start: total - start - duration,
                    duration,
                    rotation: GlobalRotation { phi: rotation.phi, theta: -rotation.theta },
                },
            })
            .collect();
        GateSchedule { segments, phase_sign: -self.phase_sign, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_values() {
        let e = PulseEnvelope::sin2(45e-6, 2e-6);
        assert_eq!(e.value(0.0), 0.0);
        assert!((e.value(1e-6) - 0.5).abs() < 1e-15);
        assert_eq!(e.value(20e-6), 1.0);
        assert!((e.value(45e-6 + 1e-6) - 0.5).abs() < 1e-12);
        let s = PulseEnvelope::square(45e-6);
        assert_eq!(s.value(1e-9), 1.0);
    }

    #[test]
    fn default_schedule_timing() {
        let s = make_schedule(2, 45e-6, 5e-6, true, PulseEnvelope::sin2(45e-6, 2e-6)).unwrap();
        assert!((s.total_time() - 100e-6).abs() < 1e-18);
        assert!((s.delta / (2.0 * PI) - 22_222.222).abs() < 1e-2);
        assert_eq!(s.segments.len(), 4);
        match (s.segments[1], s.segments[3]) {
            (Segment::Microwave { rotation: a, .. }, Segment::Microwave { rotation: b, .. }) => {
                assert_eq!(a.phi, 0.0);
                assert_eq!(b.phi, PI);
            }
            _ => panic!("expected microwave segments"),
        }
    }

    #[test]
    fn rejects_missing_flat_top() {
        let r = make_schedule(2, 3e-6, 5e-6, true, PulseEnvelope::sin2(3e-6, 2e-6));
        assert!(matches!(r, Err(Error::Schedule(_))));
    }

    #[test]
    fn ideal_echo_gate() {
        let s = make_schedule(2, 45e-6, 5e-6, true, PulseEnvelope::square(45e-6)).unwrap();
        let u = s.ideal_unitary(PI / 4.0);
        let phase = u[(0, 0)];
        let want = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 1.0), C64::new(1.0, 0.0)];
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == j { want[i] * phase } else { C64::new(0.0, 0.0) };
                assert!((u[(i, j)] - w).norm() < 1e-12);
            }
        }
    }
}
