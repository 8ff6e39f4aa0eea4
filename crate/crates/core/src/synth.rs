//! Synthetic wrist recordings of floor-changing sessions.
//!
//! A session alternates Null dwell periods with floor transitions. The next
//! floor is drawn uniformly (excluding the current one) and stairs or lift
//! is a fair coin. Pressure follows a linear barometric model of the
//! wearer's height; acceleration is gravity rotated into a per-segment
//! wrist orientation plus a motion model per activity:
//!
//! * stairs: gait oscillation with plateaus on the landings between flights
//!   and short arm-swing spikes on the barometer; descending steps are
//!   faster and harder than ascending ones
//! * lift: near-still wrist, a trapezoidal velocity profile giving a smooth
//!   pressure ramp
//! * Null: standing, fidgeting and level walking

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{ActivityLabel, Recording, SensorSample};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

const G: f64 = 9.81;

/// Closed interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    fn valid(&self) -> bool {
        self.lo > 0.0 && self.hi >= self.lo && self.hi.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub floor_min: i32,
    pub floor_max: i32,
    pub floor_height_m: f64,
    /// Pressure units per metre of height (positive; pressure falls going up).
    pub pressure_gradient: f64,
    pub rate_hz: f64,
    pub session_minutes: f64,
    pub stairs_up_gait_hz: Range,
    pub stairs_down_gait_hz: Range,
    pub walk_gait_hz: Range,
    /// Seconds per flight of stairs.
    pub flight_s: Range,
    pub flights_per_floor: u32,
    pub landing_s: Range,
    pub lift_speed_m_s: Range,
    /// Accelerometer noise standard deviation (g).
    pub acc_noise: f64,
    /// Barometer noise standard deviation (pressure units).
    pub pressure_noise: f64,
    /// Arm-swing spikes per second of walking.
    pub spike_rate_hz: f64,
    /// Spike amplitude standard deviation (pressure units).
    pub spike_amplitude: f64,
    /// Stationary standard deviation of slow indoor pressure drift.
    pub pressure_drift: f64,
    /// Seconds the lift stands with doors closing or opening, at each end.
    pub lift_door_s: Range,
    /// Annotated label boundaries are shifted by up to this many seconds
    /// from the true change of activity.
    pub label_jitter_s: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            floor_min: 2,
            floor_max: 8,
            floor_height_m: 3.5,
            pressure_gradient: 0.12,
            rate_hz: 50.0,
            session_minutes: 26.0,
            stairs_up_gait_hz: Range::new(1.3, 1.8),
            stairs_down_gait_hz: Range::new(1.7, 2.3),
            walk_gait_hz: Range::new(1.6, 2.1),
            flight_s: Range::new(4.0, 7.0),
            flights_per_floor: 2,
            landing_s: Range::new(1.5, 3.0),
            lift_speed_m_s: Range::new(0.25, 0.45),
            acc_noise: 0.02,
            pressure_noise: 0.02,
            spike_rate_hz: 0.5,
            spike_amplitude: 0.06,
            pressure_drift: 0.03,
            lift_door_s: Range::new(2.0, 5.0),
            label_jitter_s: 1.5,
            seed: 42,
        }
    }
}

impl SynthConfig {
    /// Noise-free variant, used to check the signal construction.
    pub fn noiseless(mut self) -> Self {
        self.acc_noise = 0.0;
        self.pressure_noise = 0.0;
        self.spike_rate_hz = 0.0;
        self.spike_amplitude = 0.0;
        self.pressure_drift = 0.0;
        self.label_jitter_s = 0.0;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.floor_max <= self.floor_min {
            return bad("floor range needs at least two floors");
        }
        let positive = [self.floor_height_m, self.pressure_gradient, self.rate_hz, self.session_minutes];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("physical parameters must be positive");
        }
        let ranges = [
            self.stairs_up_gait_hz,
            self.stairs_down_gait_hz,
            self.walk_gait_hz,
            self.flight_s,
            self.landing_s,
            self.lift_speed_m_s,
            self.lift_door_s,
        ];
        if ranges.iter().any(|r| !r.valid()) || self.flights_per_floor == 0 {
            return bad("ranges must be positive with lo <= hi");
        }
        let noise = [
            self.acc_noise,
            self.pressure_noise,
            self.spike_rate_hz,
            self.spike_amplitude,
            self.pressure_drift,
            self.label_jitter_s,
        ];
        if noise.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("noise parameters must be non-negative");
        }
        if self.rate_hz > 1000.0 {
            return bad("rate above 1 kHz");
        }
        Ok(())
    }
}

/// A labelled stretch of the timeline, `[start_ms, end_ms)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthSegment {
    pub label: ActivityLabel,
    pub start_ms: i64,
    pub end_ms: i64,
}

#[derive(Debug, Clone)]
pub struct SynthSession {
    pub recording: Recording,
    /// Maximal same-label runs; they tile the recording exactly.
    pub segments: Vec<TruthSegment>,
    pub seed: u64,
}

impl SynthSession {
    /// Total labelled milliseconds per class.
    pub fn class_durations_ms(&self) -> [i64; ActivityLabel::COUNT] {
        let mut out = [0; ActivityLabel::COUNT];
        for s in &self.segments {
            out[s.label.ordinal()] += s.end_ms - s.start_ms;
        }
        out
    }
}

/// Per-participant traits drawn once per session.
#[derive(Debug, Clone, Copy)]
struct Subject {
    gait_scale: f64,
    amp_scale: f64,
    speed_scale: f64,
    roll_bias: f64,
    pitch_bias: f64,
    base_pressure: f64,
    fidgety: f64,
}

#[derive(Debug, Clone, Copy)]
enum Motion {
    Still { sway: f64, sway_hz: f64 },
    Fidget { amp: f64, hz: f64 },
    Gait { hz: f64, vertical: f64, swing: f64, spikes: bool },
    Lift { up: bool, cruise_s: f64, accel_s: f64, v_max: f64, fidget: f64 },
}

#[derive(Debug, Clone, Copy)]
enum Profile {
    Flat,
    Linear,
    /// Trapezoidal velocity with the given ramp time.
    Trapezoid { accel_s: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    label: ActivityLabel,
    duration_ms: i64,
    h_start: f64,
    h_end: f64,
    profile: Profile,
    motion: Motion,
    roll: f64,
    pitch: f64,
    phase: f64,
}

impl Piece {
    fn height(&self, tau_s: f64) -> f64 {
        let total = self.duration_ms as f64 / 1000.0;
        let u = (tau_s / total).clamp(0.0, 1.0);
        let frac = match self.profile {
            Profile::Flat => 0.0,
            Profile::Linear => u,
            Profile::Trapezoid { accel_s } => trapezoid_fraction(tau_s, total, accel_s),
        };
        self.h_start + (self.h_end - self.h_start) * frac
    }
}

/// Share of distance covered at time `t` of a move lasting `total` with
/// symmetric constant-acceleration ramps of `ramp` seconds.
fn trapezoid_fraction(t: f64, total: f64, ramp: f64) -> f64 {
    let ramp = ramp.min(total / 2.0);
    let t = t.clamp(0.0, total);
    // unit cruise speed; distance = total - ramp
    let dist = total - ramp;
    let covered = if t < ramp {
        0.5 * t * t / ramp
    } else if t <= total - ramp {
        0.5 * ramp + (t - ramp)
    } else {
        let r = total - t;
        dist - 0.5 * r * r / ramp
    };
    covered / dist
}

struct Builder<'a> {
    cfg: &'a SynthConfig,
    subject: Subject,
    rng: ChaCha8Rng,
    pieces: Vec<Piece>,
    floor: i32,
    elapsed_ms: i64,
    period_ms: f64,
}

impl Builder<'_> {
    fn height(&self) -> f64 {
        self.floor as f64 * self.cfg.floor_height_m
    }

    fn quantize(&self, seconds: f64) -> i64 {
        let samples = (seconds * 1000.0 / self.period_ms).round().max(1.0);
        (samples * self.period_ms).round() as i64
    }

    fn orientation(&mut self) -> (f64, f64) {
        let jitter = Normal::new(0.0, 0.25).expect("valid sigma");
        (
            self.subject.roll_bias + jitter.sample(&mut self.rng),
            self.subject.pitch_bias + jitter.sample(&mut self.rng),
        )
    }

    fn push(&mut self, label: ActivityLabel, seconds: f64, h_end: f64, profile: Profile, motion: Motion) {
        let (roll, pitch) = self.orientation();
        let duration_ms = self.quantize(seconds);
        let h_start = self.pieces.last().map_or_else(|| self.height(), |p| p.h_end);
        let phase = self.rng.random_range(0.0..2.0 * PI);
        self.pieces.push(Piece { label, duration_ms, h_start, h_end, profile, motion, roll, pitch, phase });
        self.elapsed_ms += duration_ms;
    }

    fn walk(&mut self, label: ActivityLabel, seconds: f64, h_end: f64, profile: Profile) {
        let hz = self.cfg.walk_gait_hz.sample(&mut self.rng) * self.subject.gait_scale;
        let vertical = self.rng.random_range(0.22..0.34) * self.subject.amp_scale;
        let swing = self.arm_swing();
        self.push(label, seconds, h_end, profile, Motion::Gait { hz, vertical, swing, spikes: true });
    }

    fn arm_swing(&mut self) -> f64 {
        // carrying a bag or looking at a phone damps the swing
        if self.rng.random_bool(0.3) {
            self.rng.random_range(0.02..0.08)
        } else {
            self.rng.random_range(0.15..0.35)
        }
    }

    fn stand(&mut self, seconds: f64) {
        let h = self.height();
        let motion = if self.rng.random_bool(self.subject.fidgety) {
            Motion::Fidget { amp: self.rng.random_range(0.04..0.15), hz: self.rng.random_range(0.4..1.5) }
        } else {
            Motion::Still { sway: self.rng.random_range(0.005..0.03), sway_hz: self.rng.random_range(0.1..0.5) }
        };
        self.push(ActivityLabel::Null, seconds, h, Profile::Flat, motion);
    }

    /// A Null dwell of roughly `seconds`, built from standing, fidgeting
    /// and level walking.
    fn dwell(&mut self, seconds: f64) {
        let mut left = seconds;
        while left > 0.5 {
            let chunk = self.rng.random_range(4.0..14.0f64).min(left);
            if self.rng.random_bool(0.45) {
                let h = self.height();
                self.walk(ActivityLabel::Null, chunk, h, Profile::Flat);
            } else {
                self.stand(chunk);
            }
            left -= chunk;
        }
    }

    fn stairs(&mut self, target: i32) {
        let up = target > self.floor;
        let label = if up { ActivityLabel::StairsUp } else { ActivityLabel::StairsDown };
        let gait = if up { self.cfg.stairs_up_gait_hz } else { self.cfg.stairs_down_gait_hz };
        let hz = gait.sample(&mut self.rng) * self.subject.gait_scale;
        let vertical = if up { self.rng.random_range(0.25..0.40) } else { self.rng.random_range(0.38..0.55) };
        let vertical = vertical * self.subject.amp_scale;
        let swing = self.arm_swing();
        let floors = (target - self.floor).abs();
        let flights = floors as u32 * self.cfg.flights_per_floor;
        let rise = self.cfg.floor_height_m / self.cfg.flights_per_floor as f64 * if up { 1.0 } else { -1.0 };
        let speed = if up { 1.0 } else { 0.85 };
        let mut h = self.height();
        for f in 0..flights {
            h += rise;
            let secs = self.cfg.flight_s.sample(&mut self.rng) * speed / self.subject.speed_scale;
            self.push(label, secs, h, Profile::Linear, Motion::Gait { hz, vertical, swing, spikes: true });
            if f + 1 < flights {
                let landing = self.cfg.landing_s.sample(&mut self.rng);
                self.walk(label, landing, h, Profile::Flat);
            }
        }
        self.floor = target;
    }

    fn lift(&mut self, target: i32) {
        let up = target > self.floor;
        let label = if up { ActivityLabel::LiftUp } else { ActivityLabel::LiftDown };
        let distance = ((target - self.floor).abs() as f64) * self.cfg.floor_height_m;
        let v_max = self.cfg.lift_speed_m_s.sample(&mut self.rng) * self.subject.speed_scale;
        let accel_s = self.rng.random_range(1.0..2.0);
        let cruise_s = distance / v_max;
        let total = cruise_s + accel_s;
        let fidget = if self.rng.random_bool(self.subject.fidgety) { self.rng.random_range(0.03..0.1) } else { 0.0 };
        let h = self.height();
        let closing = self.cfg.lift_door_s.sample(&mut self.rng);
        self.push(label, closing, h, Profile::Flat, Motion::Lift { up, cruise_s: 0.0, accel_s: 0.0, v_max: 0.0, fidget });
        self.floor = target;
        let h = self.height();
        self.push(label, total, h, Profile::Trapezoid { accel_s }, Motion::Lift { up, cruise_s, accel_s, v_max, fidget });
        let opening = self.cfg.lift_door_s.sample(&mut self.rng);
        self.push(label, opening, h, Profile::Flat, Motion::Lift { up, cruise_s: 0.0, accel_s: 0.0, v_max: 0.0, fidget });
    }

    fn transition(&mut self, target: i32, by_lift: bool) {
        if by_lift {
            let walk_in = self.rng.random_range(3.0..10.0);
            let h = self.height();
            self.walk(ActivityLabel::Null, walk_in, h, Profile::Flat);
            let wait = self.rng.random_range(4.0..20.0);
            self.stand(wait);
            self.lift(target);
            let walk_out = self.rng.random_range(3.0..8.0);
            let h = self.height();
            self.walk(ActivityLabel::Null, walk_out, h, Profile::Flat);
        } else {
            let walk_in = self.rng.random_range(3.0..10.0);
            let h = self.height();
            self.walk(ActivityLabel::Null, walk_in, h, Profile::Flat);
            self.stairs(target);
            let walk_out = self.rng.random_range(2.0..6.0);
            let h = self.height();
            self.walk(ActivityLabel::Null, walk_out, h, Profile::Flat);
        }
    }
}

fn transition_label(from: i32, to: i32, by_lift: bool) -> ActivityLabel {
    match (to > from, by_lift) {
        (true, true) => ActivityLabel::LiftUp,
        (false, true) => ActivityLabel::LiftDown,
        (true, false) => ActivityLabel::StairsUp,
        (false, false) => ActivityLabel::StairsDown,
    }
}

/// One participant's session. Runs until the configured length is reached
/// and every transition class has occurred at least once.
pub fn generate_session(participant_id: &str, config: &SynthConfig) -> Result<SynthSession> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let subject = Subject {
        gait_scale: 1.0 + rng.random_range(-0.08..0.08),
        amp_scale: 1.0 + rng.random_range(-0.15..0.15),
        speed_scale: 1.0 + rng.random_range(-0.15..0.15),
        roll_bias: rng.random_range(-0.6..0.6),
        pitch_bias: rng.random_range(-0.6..0.6),
        base_pressure: rng.random_range(960.0..1010.0),
        fidgety: rng.random_range(0.1..0.5),
    };
    let floor = rng.random_range(config.floor_min..=config.floor_max);
    let mut b = Builder {
        cfg: config,
        subject,
        rng,
        pieces: Vec::new(),
        floor,
        elapsed_ms: 0,
        period_ms: 1000.0 / config.rate_hz,
    };
    let target_ms = (config.session_minutes * 60_000.0) as i64;
    let mut seen = [false; ActivityLabel::COUNT];
    seen[ActivityLabel::Null.ordinal()] = true;

    let initial = b.rng.random_range(10.0..30.0);
    b.dwell(initial);
    while b.elapsed_ms < target_ms || (seen.contains(&false) && b.elapsed_ms < 3 * target_ms) {
        let (target, by_lift) = if b.elapsed_ms < target_ms {
            let mut next = b.rng.random_range(config.floor_min..config.floor_max);
            if next >= b.floor {
                next += 1;
            }
            (next, b.rng.random_bool(0.5))
        } else {
            // top up whichever class is still missing
            let missing = ActivityLabel::ALL.into_iter().find(|l| !seen[l.ordinal()]).expect("a class is missing");
            let by_lift = matches!(missing, ActivityLabel::LiftUp | ActivityLabel::LiftDown);
            let range = if missing.ascends() {
                (b.floor + 1)..=config.floor_max
            } else {
                config.floor_min..=(b.floor - 1)
            };
            if range.is_empty() {
                // wrong end of the building: go the other way first
                let other = if missing.ascends() { config.floor_min } else { config.floor_max };
                (other, by_lift)
            } else {
                (b.rng.random_range(range), by_lift)
            }
        };
        seen[transition_label(b.floor, target, by_lift).ordinal()] = true;
        b.transition(target, by_lift);
        let rest = b.rng.random_range(8.0..36.0);
        b.dwell(rest);
    }
    render(participant_id, config, b)
}

fn rotate(v: [f64; 3], roll: f64, pitch: f64) -> [f64; 3] {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    // Rx(roll) then Ry(pitch)
    let y = cr * v[1] - sr * v[2];
    let z = sr * v[1] + cr * v[2];
    let x = cp * v[0] + sp * z;
    let z = -sp * v[0] + cp * z;
    [x, y, z]
}

/// Linear-motion acceleration (forward, lateral, vertical) in g.
fn motion_accel(m: &Motion, tau: f64, phase: f64) -> [f64; 3] {
    match *m {
        Motion::Still { sway, sway_hz } => {
            let w = 2.0 * PI * sway_hz * tau + phase;
            [sway * w.sin(), 0.6 * sway * (1.3 * w).cos(), 0.3 * sway * (0.7 * w).sin()]
        }
        Motion::Fidget { amp, hz } => {
            let w = 2.0 * PI * hz * tau + phase;
            [amp * w.sin(), amp * 0.8 * (1.7 * w + 1.0).sin(), amp * 0.6 * (0.6 * w).cos()]
        }
        Motion::Gait { hz, vertical, swing, .. } => {
            let w = 2.0 * PI * hz * tau + phase;
            [
                swing * (0.5 * w).sin() + 0.05 * (2.0 * w).sin(),
                0.08 * vertical * (0.5 * w + 0.7).sin(),
                vertical * (w.sin() + 0.35 * (2.0 * w + 0.4).sin()),
            ]
        }
        Motion::Lift { up, cruise_s, accel_s, v_max, fidget } => {
            let a = if accel_s > 0.0 { v_max / accel_s / G } else { 0.0 };
            let total = cruise_s + accel_s;
            let sign = if up { 1.0 } else { -1.0 };
            let vertical = if tau < accel_s {
                sign * a
            } else if tau > total - accel_s {
                -sign * a
            } else {
                0.0
            };
            let w = 2.0 * PI * 0.8 * tau + phase;
            [fidget * w.sin(), fidget * 0.7 * (1.6 * w).cos(), vertical + 0.2 * fidget * (0.5 * w).sin()]
        }
    }
}

fn render(participant_id: &str, cfg: &SynthConfig, mut b: Builder<'_>) -> Result<SynthSession> {
    let period = b.period_ms;
    let total_ms = b.elapsed_ms;
    let n = (total_ms as f64 / period).round() as usize;
    let acc_noise = Normal::new(0.0, cfg.acc_noise.max(0.0)).expect("valid sigma");
    let p_noise = Normal::new(0.0, cfg.pressure_noise.max(0.0)).expect("valid sigma");
    let spike_amp = Normal::new(0.0, cfg.spike_amplitude.max(0.0)).expect("valid sigma");

    // arm-swing spikes: (centre ms, half width ms, amplitude)
    let mut spikes: Vec<(f64, f64, f64)> = Vec::new();
    let mut start = 0i64;
    for p in &b.pieces {
        if let Motion::Gait { spikes: true, .. } = p.motion {
            let expected = cfg.spike_rate_hz * p.duration_ms as f64 / 1000.0;
            let mut t = start as f64;
            if expected > 0.0 {
                loop {
                    let gap: f64 = -b.rng.random_range(f64::EPSILON..1.0f64).ln() / cfg.spike_rate_hz * 1000.0;
                    t += gap;
                    if t >= (start + p.duration_ms) as f64 {
                        break;
                    }
                    spikes.push((t, b.rng.random_range(100.0..200.0), spike_amp.sample(&mut b.rng)));
                }
            }
        }
        start += p.duration_ms;
    }

    // true activity runs, then annotated runs with jittered boundaries
    let mut segments: Vec<TruthSegment> = Vec::new();
    let mut at = 0;
    for p in &b.pieces {
        let end = at + p.duration_ms;
        match segments.last_mut() {
            Some(s) if s.label == p.label => s.end_ms = end,
            _ => segments.push(TruthSegment { label: p.label, start_ms: at, end_ms: end }),
        }
        at = end;
    }
    if cfg.label_jitter_s > 0.0 {
        for i in 1..segments.len() {
            let room = (segments[i - 1].end_ms - segments[i - 1].start_ms)
                .min(segments[i].end_ms - segments[i].start_ms) as f64
                * 0.4;
            let limit = (cfg.label_jitter_s * 1000.0).min(room);
            let shift = b.rng.random_range(-limit..=limit);
            let shift = ((shift / period).round() * period) as i64;
            segments[i - 1].end_ms += shift;
            segments[i].start_ms += shift;
        }
    }
    let drift_tau_s = 20.0;
    let drift_step = Normal::new(0.0, cfg.pressure_drift * (2.0 * period / 1000.0 / drift_tau_s).sqrt())
        .expect("valid sigma");
    let mut drift = Normal::new(0.0, cfg.pressure_drift).expect("valid sigma").sample(&mut b.rng);

    let mut samples = Vec::with_capacity(n);
    let mut annotated = 0;
    let mut piece = 0;
    let mut piece_start = 0i64;
    let mut spike_from = 0;
    for k in 0..n {
        let t = (k as f64 * period).round() as i64;
        while piece + 1 < b.pieces.len() && t >= piece_start + b.pieces[piece].duration_ms {
            piece_start += b.pieces[piece].duration_ms;
            piece += 1;
        }
        let p = &b.pieces[piece];
        let tau = (t - piece_start) as f64 / 1000.0;
        let lin = motion_accel(&p.motion, tau, p.phase);
        let world = [lin[0], lin[1], 1.0 + lin[2]];
        let dev = rotate(world, p.roll, p.pitch);
        let acc = [
            dev[0] + acc_noise.sample(&mut b.rng),
            dev[1] + acc_noise.sample(&mut b.rng),
            dev[2] + acc_noise.sample(&mut b.rng),
        ];
        while spike_from < spikes.len() && spikes[spike_from].0 + spikes[spike_from].1 < t as f64 {
            spike_from += 1;
        }
        let mut spike = 0.0;
        for &(c, hw, a) in spikes[spike_from..].iter().take_while(|s| s.0 - s.1 <= t as f64) {
            spike += a * (1.0 - (t as f64 - c).abs() / hw).max(0.0);
        }
        drift += -drift * period / 1000.0 / drift_tau_s + drift_step.sample(&mut b.rng);
        let pressure = b.subject.base_pressure - cfg.pressure_gradient * p.height(tau)
            + p_noise.sample(&mut b.rng)
            + spike
            + drift;
        while t >= segments[annotated].end_ms && annotated + 1 < segments.len() {
            annotated += 1;
        }
        samples.push(SensorSample::new(t, acc, pressure, Some(segments[annotated].label))?);
    }

    Ok(SynthSession {
        recording: Recording::new(participant_id, samples, cfg.rate_hz)?,
        segments,
        seed: cfg.seed,
    })
}

/// Participant id used for cohort member `index` (zero-based).
pub fn participant_id(index: usize) -> String {
    format!("P{:02}", index + 1)
}

/// Seed of cohort member `index`.
pub fn participant_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

/// `n` sessions with per-participant seeds derived from `seed`.
pub fn generate_cohort(n: usize, config: &SynthConfig, seed: u64) -> Result<Vec<SynthSession>> {
    if n == 0 {
        return Err(Error::InvalidConfig("cohort needs at least one participant".into()));
    }
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let cfg = SynthConfig { seed: participant_seed(seed, i), ..config.clone() };
            generate_session(&participant_id(i), &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_features, FEATURE_NAMES};
    use crate::windowing::{segment, WindowParams};

    fn idx(name: &str) -> usize {
        FEATURE_NAMES.iter().position(|n| *n == name).unwrap()
    }

    #[test]
    fn trapezoid_profile() {
        assert_eq!(trapezoid_fraction(0.0, 10.0, 2.0), 0.0);
        assert!((trapezoid_fraction(10.0, 10.0, 2.0) - 1.0).abs() < 1e-12);
        assert!((trapezoid_fraction(5.0, 10.0, 2.0) - 0.5).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 1..=100 {
            let f = trapezoid_fraction(i as f64 * 0.1, 10.0, 2.0);
            assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn rotation_preserves_norm() {
        let v = rotate([0.1, -0.4, 1.2], 0.7, -1.1);
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((n - (0.01f64 + 0.16 + 1.44).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn segments_tile_the_timeline() {
        let s = generate_session("P01", &SynthConfig { session_minutes: 6.0, ..SynthConfig::default() }).unwrap();
        let r = &s.recording;
        assert_eq!(s.segments[0].start_ms, 0);
        for w in s.segments.windows(2) {
            assert_eq!(w[0].end_ms, w[1].start_ms);
            assert_ne!(w[0].label, w[1].label);
        }
        assert_eq!(s.segments.last().unwrap().end_ms, r.samples.last().unwrap().timestamp_ms + 20);
        for smp in &r.samples {
            let seg = s.segments.iter().find(|g| g.start_ms <= smp.timestamp_ms && smp.timestamp_ms < g.end_ms).unwrap();
            assert_eq!(smp.label, Some(seg.label));
        }
        let seen: Vec<_> = ActivityLabel::ALL.iter().map(|l| s.segments.iter().any(|g| g.label == *l)).collect();
        assert!(seen.iter().all(|&x| x), "every class appears: {seen:?}");
    }

    #[test]
    fn transitions_move_pressure_the_right_way() {
        let cfg = SynthConfig { session_minutes: 10.0, ..SynthConfig::default() }.noiseless();
        let s = generate_session("P01", &cfg).unwrap();
        let r = &s.recording;
        let at = |t: i64| r.samples[(t / 20) as usize].pressure;
        for g in s.segments.iter().filter(|g| g.label != ActivityLabel::Null) {
            let delta = at(g.end_ms - 20) - at(g.start_ms);
            if g.label.ascends() {
                assert!(delta < 0.0, "{g:?}");
            } else {
                assert!(delta > 0.0, "{g:?}");
            }
            // whole floors: multiples of gradient x floor height
            let floors = delta / (0.12 * 3.5);
            assert!((floors - floors.round()).abs() < 0.02, "{g:?}: {floors}");
        }
    }

    #[test]
    fn lift_window_signatures() {
        let cfg = SynthConfig { session_minutes: 12.0, ..SynthConfig::default() }.noiseless();
        let s = generate_session("P02", &cfg).unwrap();
        let windows = segment(&s.recording, &WindowParams::new(8.0)).unwrap();
        let mut lift_var = Vec::new();
        let mut stairs_var = Vec::new();
        for w in windows.iter().filter(|w| w.samples.iter().all(|x| x.label == w.label)) {
            let f = extract_features::<f64>(w).unwrap();
            match w.label {
                Some(ActivityLabel::LiftUp) => {
                    assert!(f.values[idx("slope_pressure")] < 0.0);
                    lift_var.push(f.values[idx("var_magnitude")]);
                }
                Some(ActivityLabel::LiftDown) => {
                    assert!(f.values[idx("slope_pressure")] > 0.0);
                    lift_var.push(f.values[idx("var_magnitude")]);
                }
                Some(ActivityLabel::StairsUp | ActivityLabel::StairsDown) => {
                    stairs_var.push(f.values[idx("var_magnitude")])
                }
                _ => {}
            }
        }
        assert!(!lift_var.is_empty() && !stairs_var.is_empty());
        let lift_max = lift_var.iter().cloned().fold(0.0, f64::max);
        let stairs_min = stairs_var.iter().cloned().fold(f64::MAX, f64::min);
        assert!(lift_max < stairs_min, "{lift_max} vs {stairs_min}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let cfg = SynthConfig { session_minutes: 3.0, ..SynthConfig::default() };
        let a = generate_session("P01", &cfg).unwrap();
        let b = generate_session("P01", &cfg).unwrap();
        assert_eq!(a.recording, b.recording);
        let c = generate_session("P01", &SynthConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a.recording, c.recording);
    }

    #[test]
    fn cohort_of_one_matches_session() {
        let cfg = SynthConfig { session_minutes: 3.0, ..SynthConfig::default() };
        let cohort = generate_cohort(1, &cfg, 9).unwrap();
        let single = generate_session("P01", &SynthConfig { seed: participant_seed(9, 0), ..cfg.clone() }).unwrap();
        assert_eq!(cohort.len(), 1);
        assert_eq!(cohort[0].recording, single.recording);
        assert!(matches!(generate_cohort(0, &cfg, 9), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            SynthConfig { floor_min: 5, floor_max: 5, ..SynthConfig::default() },
            SynthConfig { floor_height_m: 0.0, ..SynthConfig::default() },
            SynthConfig { lift_speed_m_s: Range::new(0.5, 0.2), ..SynthConfig::default() },
            SynthConfig { acc_noise: -1.0, ..SynthConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(generate_session("x", &cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
