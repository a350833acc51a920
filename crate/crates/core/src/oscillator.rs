//! The biquad with all inputs grounded, run as a quadrature oscillator.
//!
//! The characteristic equation is the filter denominator,
//! `s² C1 C2 R_X1 + s (1 - g_m2 R_X1) C2 + g_m1 = 0`, so the circuit rings at
//! `ω0 = sqrt(g_m1 / (C1 C2 R_X1))` once `g_m2 R_X1 ≥ 1`.
//!
//! For time-domain runs the loop is realized as two integrators,
//!
//! ```text
//! x1' = (g_m2/C1) V_L tanh(x1/V_L) - x1/(C1 R_X1) - (g_m1/C1) x2
//! x2' = x1 / (C2 R_X1)
//! ```
//!
//! whose linearization at the origin has exactly that characteristic
//! polynomial. The `tanh` limiter on the regenerative term bounds the
//! amplitude; `V_L = ∞` gives the purely linear system.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::biquad::{denominator, pole_frequency, AngularFrequency, BiquadCircuit};
use crate::error::{Error, Result};

pub const DEFAULT_V_LIMIT: f64 = 50e-3;
pub const DEFAULT_X1_INIT: f64 = 1e-3;
/// Default step is `T / DEFAULT_STEPS_PER_PERIOD`.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 500.0;
/// Largest allowed step is `T / MIN_STEPS_PER_PERIOD`.
pub const MIN_STEPS_PER_PERIOD: f64 = 200.0;
pub const DEFAULT_CYCLES: f64 = 100.0;
/// Settled runs drift less than this over the final 20 % of the run.
pub const SETTLE_TOLERANCE: f64 = 0.01;

/// `(d2, d1, d0)` of the characteristic equation; the filter denominator.
pub fn characteristic_coefficients(c: &BiquadCircuit) -> Result<[f64; 3]> {
    denominator(c)
}

pub fn oscillation_frequency(c: &BiquadCircuit) -> Result<AngularFrequency> {
    pole_frequency(c)
}

/// Distance from the oscillation condition `g_m2 = 1 / R_X1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationMargin {
    pub gm2_rx1: f64,
    /// `g_m2 R_X1 - 1`.
    pub margin: f64,
    pub will_start: bool,
}

pub fn oscillation_condition(c: &BiquadCircuit) -> OscillationMargin {
    let gm2_rx1 = c.gm2_rx1();
    let margin = gm2_rx1 - 1.0;
    OscillationMargin {
        gm2_rx1,
        margin,
        will_start: margin >= 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorConfig {
    pub circuit: BiquadCircuit,
    /// Soft-limiter scale `V_L` (V). `f64::INFINITY` disables the limiter.
    pub v_limit: f64,
    /// Initial `x1` (V); `x2` starts at zero.
    pub x1_init: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Simulated time (s).
    pub duration: f64,
}

impl OscillatorConfig {
    /// Defaults: `V_L = 50 mV`, `x1(0) = 1 mV`, `dt = T/500`, 100 periods.
    pub fn new(circuit: BiquadCircuit) -> Result<Self> {
        let period = 1.0 / oscillation_frequency(&circuit)?.hz();
        Ok(Self {
            circuit,
            v_limit: DEFAULT_V_LIMIT,
            x1_init: DEFAULT_X1_INIT,
            dt: period / DEFAULT_STEPS_PER_PERIOD,
            duration: DEFAULT_CYCLES * period,
        })
    }

    /// Sets the duration to `cycles` oscillation periods.
    pub fn with_cycles(mut self, cycles: f64) -> Result<Self> {
        self.duration = cycles * self.period()?;
        Ok(self)
    }

    /// Period of the ideal oscillation, `2π / ω0`.
    pub fn period(&self) -> Result<f64> {
        Ok(1.0 / oscillation_frequency(&self.circuit)?.hz())
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        if !(self.v_limit > 0.0) {
            return Err(Error::Config(format!("v_limit must be > 0, got {}", self.v_limit)));
        }
        if !self.x1_init.is_finite() {
            return Err(Error::Config("x1_init must be finite".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        let max_dt = self.period()? / MIN_STEPS_PER_PERIOD;
        if self.dt > max_dt * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {:e} s exceeds T/{MIN_STEPS_PER_PERIOD} = {max_dt:e} s",
                self.dt
            )));
        }
        if !(self.duration.is_finite() && self.duration >= 100.0 * self.dt) {
            return Err(Error::Config(format!(
                "duration must be at least 100*dt = {:e} s, got {:e}",
                100.0 * self.dt,
                self.duration
            )));
        }
        Ok(())
    }
}

/// Waveforms of a run and the quantities measured on them.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorRun {
    pub dt: f64,
    pub t: Vec<f64>,
    pub v_o1: Vec<f64>,
    pub v_o2: Vec<f64>,
    pub v_o3: Vec<f64>,
    /// Zero-crossing frequency of `v_o1`; `None` if too few crossings.
    pub est_freq_hz: Option<f64>,
    /// Phase of `v_o2` relative to `v_o1` at `est_freq_hz`, in (-180, 180].
    pub est_phase_o2_vs_o1_deg: Option<f64>,
    /// Peak `|v_o1|` over the last 10 % of the run.
    pub steady_amplitude: f64,
    /// Relative change of the peak amplitude between the two halves of the
    /// last 20 % of the run.
    pub amplitude_drift: f64,
    pub settled: bool,
}

/// Linear coefficients of the state equations.
#[derive(Debug, Clone, Copy)]
struct Dynamics {
    /// `g_m2 / C1`, multiplies the limiter's deviation from linear.
    regen: f64,
    /// `(1 - g_m2 R_X1) / (C1 R_X1)`, net linear damping of `x1`.
    damping: f64,
    /// `g_m1 / C1`.
    coupling: f64,
    /// `1 / (C2 R_X1)`.
    integrate: f64,
    v_limit: f64,
}

impl Dynamics {
    fn new(cfg: &OscillatorConfig) -> Result<Self> {
        let c = &cfg.circuit;
        let r_x1 = c.r_x1()?;
        Ok(Self {
            regen: c.g_m2()? / c.c1,
            // written around g_m2*R_X1 so the margin-zero case has exactly zero damping
            damping: (1.0 - c.gm2_rx1()) / (c.c1 * r_x1),
            coupling: c.g_m1()? / c.c1,
            integrate: 1.0 / (c.c2 * r_x1),
            v_limit: cfg.v_limit,
        })
    }

    fn limiter_excess(&self, x: f64) -> f64 {
        if self.v_limit.is_infinite() {
            0.0
        } else {
            self.v_limit * (x / self.v_limit).tanh() - x
        }
    }

    fn derivative(&self, y: [f64; 2]) -> [f64; 2] {
        [
            self.regen * self.limiter_excess(y[0]) - self.damping * y[0] - self.coupling * y[1],
            self.integrate * y[0],
        ]
    }

    fn jacobian_at_origin(&self) -> [[f64; 2]; 2] {
        [[-self.damping, -self.coupling], [self.integrate, 0.0]]
    }
}

fn rk4_step(f: impl Fn([f64; 2]) -> [f64; 2], y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], k: [f64; 2], s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
    let k1 = f(y);
    let k2 = f(add(y, k1, h / 2.0));
    let k3 = f(add(y, k2, h / 2.0));
    let k4 = f(add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Jacobian of the state equations at the origin.
pub fn linearization(cfg: &OscillatorConfig) -> Result<[[f64; 2]; 2]> {
    cfg.circuit.validate()?;
    Ok(Dynamics::new(cfg)?.jacobian_at_origin())
}

/// Integrates the oscillator with fixed-step classical RK4 and measures the
/// resulting waveforms.
pub fn simulate(cfg: &OscillatorConfig) -> Result<OscillatorRun> {
    cfg.validate()?;
    let dynamics = Dynamics::new(cfg)?;
    let steps = (cfg.duration / cfg.dt).round() as usize;

    let mut t = Vec::with_capacity(steps + 1);
    let mut v_o1 = Vec::with_capacity(steps + 1);
    let mut v_o2 = Vec::with_capacity(steps + 1);
    let mut y = [cfg.x1_init, 0.0];
    for k in 0..=steps {
        let time = k as f64 * cfg.dt;
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Divergence { time });
        }
        t.push(time);
        v_o1.push(y[0]);
        v_o2.push(y[1]);
        if k < steps {
            y = rk4_step(|s| dynamics.derivative(s), y, cfg.dt);
        }
    }
    let v_o3 = v_o2.iter().map(|v| -v).collect();

    let n = v_o1.len();
    let peak = |range: std::ops::Range<usize>| {
        v_o1[range].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let early = peak(n * 8 / 10..n * 9 / 10);
    let late = peak(n * 9 / 10..n);
    let amplitude_drift = if early.max(late) > 0.0 {
        (late - early).abs() / early.max(late)
    } else {
        0.0
    };
    let settled = late > 0.0 && amplitude_drift < SETTLE_TOLERANCE;

    let est_freq_hz = estimate_frequency(&v_o1, cfg.dt).ok();
    let est_phase_o2_vs_o1_deg = est_freq_hz.and_then(|f| {
        let half = n / 2;
        estimate_phase(&v_o1[half..], &v_o2[half..], cfg.dt, f).ok()
    });

    Ok(OscillatorRun {
        dt: cfg.dt,
        t,
        v_o1,
        v_o2,
        v_o3,
        est_freq_hz,
        est_phase_o2_vs_o1_deg,
        steady_amplitude: late,
        amplitude_drift,
        settled,
    })
}

/// Frequency from the mean spacing of linearly interpolated upward zero
/// crossings, ignoring the first half of `series` as startup transient.
///
/// Needs at least ten zero crossings (either direction) in the retained half.
pub fn estimate_frequency(series: &[f64], dt: f64) -> Result<f64> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Estimation(format!("dt must be > 0, got {dt}")));
    }
    let tail = &series[series.len() / 2..];
    let mut crossings = 0usize;
    let mut upward = Vec::new();
    for (i, w) in tail.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
            crossings += 1;
        }
        if a < 0.0 && b >= 0.0 {
            upward.push((i as f64 + a / (a - b)) * dt);
        }
    }
    if crossings < 10 || upward.len() < 2 {
        return Err(Error::Estimation(format!(
            "need at least 10 zero crossings after the transient, found {crossings}"
        )));
    }
    let span = upward[upward.len() - 1] - upward[0];
    Ok((upward.len() - 1) as f64 / span)
}

/// Phase of `series_b` relative to `series_a` at `freq_hz`, from single-bin
/// Fourier projections over the largest whole number of periods at the end
/// of the series. Result lies in (-180, 180].
pub fn estimate_phase(series_a: &[f64], series_b: &[f64], dt: f64, freq_hz: f64) -> Result<f64> {
    if series_a.len() != series_b.len() {
        return Err(Error::Estimation("series lengths differ".into()));
    }
    if !(freq_hz.is_finite() && freq_hz > 0.0 && dt.is_finite() && dt > 0.0) {
        return Err(Error::Estimation("frequency and dt must be > 0".into()));
    }
    let period = 1.0 / freq_hz;
    let periods = (series_a.len() as f64 * dt / period).floor();
    if periods < 1.0 {
        return Err(Error::Estimation("window shorter than one period".into()));
    }
    let len = ((periods * period / dt).round() as usize).min(series_a.len());
    let start = series_a.len() - len;
    let omega_dt = TAU * freq_hz * dt;
    let project = |s: &[f64]| {
        s[start..]
            .iter()
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, &x)| {
                acc + Complex64::from_polar(x, -omega_dt * k as f64)
            })
    };
    let a = project(series_a);
    let b = project(series_b);
    let deg = (b * a.conj()).arg().to_degrees();
    Ok(if deg <= -180.0 { deg + 360.0 } else { deg })
}

/// Wraps an angle in degrees into (-180, 180].
pub fn wrap_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}
