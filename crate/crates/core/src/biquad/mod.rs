//! The two-CCCCTA, two-capacitor voltage-mode biquad.
//!
//! With input voltages `V1`, `V2`, `V3` the output is
//!
//! ```text
//!        V1 s² C1 C2 R_X1 + s (V3 g_m1 R_X1 + V2) C2 + V2 g_m1
//! Vo = ---------------------------------------------------------
//!             s² C1 C2 R_X1 + s (1 - g_m2 R_X1) C2 + g_m1
//! ```
//!
//! Choosing the input weights (and, for some modes, the ratio
//! `g_m1 R_X1 = I_S1 / (4 I_B1)`) yields the five standard responses.

mod response;
mod sensitivity;

pub use response::{evaluate_response, log_grid, sweep, unwrap_phase, ResponsePoint, MAGNITUDE_FLOOR_DB};
pub use sensitivity::{
    analytic_sensitivities, analytic_sensitivity, numeric_sensitivity, Parameter, Sensitivity,
    Target,
};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::element::CccctaParams;
use crate::error::{positive, Error, Result};

/// Relative tolerance for declaring a mode's `g_m1 R_X1` constraint met.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-6;

/// Complete circuit description: two CCCCTAs and two grounded capacitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCircuit {
    pub ccccta1: CccctaParams,
    pub ccccta2: CccctaParams,
    /// Capacitance `C1` (F).
    pub c1: f64,
    /// Capacitance `C2` (F).
    pub c2: f64,
}

impl BiquadCircuit {
    pub fn new(ccccta1: CccctaParams, ccccta2: CccctaParams, c1: f64, c2: f64) -> Result<Self> {
        let c = Self { ccccta1, ccccta2, c1, c2 };
        c.validate()?;
        Ok(c)
    }

    /// Builds a circuit from the four bias currents, sharing one thermal voltage.
    pub fn from_currents(
        i_b1: f64,
        i_s1: f64,
        i_b2: f64,
        i_s2: f64,
        c1: f64,
        c2: f64,
        v_t: f64,
    ) -> Result<Self> {
        Self::new(
            CccctaParams::new(i_b1, i_s1, v_t)?,
            CccctaParams::new(i_b2, i_s2, v_t)?,
            c1,
            c2,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.ccccta1.validate()?;
        self.ccccta2.validate()?;
        positive("c1", self.c1)?;
        positive("c2", self.c2)?;
        Ok(())
    }

    pub fn r_x1(&self) -> Result<f64> {
        self.ccccta1.parasitic_resistance()
    }

    pub fn g_m1(&self) -> Result<f64> {
        self.ccccta1.transconductance()
    }

    pub fn g_m2(&self) -> Result<f64> {
        self.ccccta2.transconductance()
    }

    /// `g_m1 R_X1`, evaluated as `I_S1 / (4 I_B1)`.
    pub fn gm1_rx1(&self) -> f64 {
        self.ccccta1.i_s / (4.0 * self.ccccta1.i_b)
    }

    /// `g_m2 R_X1`, evaluated as `I_S2 / (4 I_B1)` (times `V_T1/V_T2` when
    /// the two devices are given different thermal voltages).
    pub fn gm2_rx1(&self) -> f64 {
        let ratio = self.ccccta2.i_s / (4.0 * self.ccccta1.i_b);
        if self.ccccta1.v_t == self.ccccta2.v_t {
            ratio
        } else {
            ratio * (self.ccccta1.v_t / self.ccccta2.v_t)
        }
    }

    /// Positive damping, `g_m2 R_X1 < 1`.
    pub fn is_stable(&self) -> bool {
        self.gm2_rx1() < 1.0
    }

    /// Same circuit with both `C1` and `C2` multiplied by `k`.
    pub fn scale_capacitors(mut self, k: f64) -> Self {
        self.c1 *= k;
        self.c2 *= k;
        self
    }
}

/// The input-voltage selector `(V1, V2, V3)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DriveWeights {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl DriveWeights {
    pub const fn new(v1: f64, v2: f64, v3: f64) -> Self {
        Self { v1, v2, v3 }
    }
}

/// `(n2 s² + n1 s + n0) / (d2 s² + d1 s + d0)`, stored exactly as built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalBiquad {
    /// Numerator coefficients of `s²`, `s`, `1`.
    pub num: [f64; 3],
    /// Denominator coefficients of `s²`, `s`, `1`.
    pub den: [f64; 3],
}

impl RationalBiquad {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let poly = |c: &[f64; 3]| (s * c[0] + c[1]) * s + c[2];
        poly(&self.num) / poly(&self.den)
    }
}

/// Denominator `(C1 C2 R_X1, (1 - g_m2 R_X1) C2, g_m1)`, shared with the
/// oscillator's characteristic equation.
pub fn denominator(c: &BiquadCircuit) -> Result<[f64; 3]> {
    c.validate()?;
    let r_x1 = c.r_x1()?;
    let g_m1 = c.g_m1()?;
    Ok([c.c1 * c.c2 * r_x1, (1.0 - c.gm2_rx1()) * c.c2, g_m1])
}

pub fn transfer_function(c: &BiquadCircuit, w: &DriveWeights) -> Result<RationalBiquad> {
    let den = denominator(c)?;
    let g_m1 = den[2];
    let num = [
        w.v1 * den[0],
        w.v3 * c.gm1_rx1() * c.c2 + w.v2 * c.c2,
        w.v2 * g_m1,
    ];
    Ok(RationalBiquad { num, den })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterMode {
    LowPass,
    BandPass,
    HighPass,
    BandReject,
    AllPass,
}

impl FilterMode {
    pub const ALL: [FilterMode; 5] = [
        FilterMode::LowPass,
        FilterMode::BandPass,
        FilterMode::HighPass,
        FilterMode::BandReject,
        FilterMode::AllPass,
    ];

    pub fn weights(self) -> DriveWeights {
        match self {
            FilterMode::HighPass => DriveWeights::new(1.0, 0.0, 0.0),
            FilterMode::BandPass => DriveWeights::new(0.0, 0.0, 1.0),
            FilterMode::LowPass => DriveWeights::new(0.0, 1.0, -1.0),
            FilterMode::BandReject | FilterMode::AllPass => DriveWeights::new(1.0, 1.0, -1.0),
        }
    }

    /// Value of `g_m1 R_X1` the mode needs, if any.
    pub fn required_gm1_rx1(self) -> Option<f64> {
        match self {
            FilterMode::LowPass | FilterMode::BandReject => Some(1.0),
            FilterMode::AllPass => Some(2.0),
            FilterMode::HighPass | FilterMode::BandPass => None,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            FilterMode::LowPass => "lp",
            FilterMode::BandPass => "bp",
            FilterMode::HighPass => "hp",
            FilterMode::BandReject => "br",
            FilterMode::AllPass => "ap",
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FilterMode::LowPass => "low-pass",
            FilterMode::BandPass => "band-pass",
            FilterMode::HighPass => "high-pass",
            FilterMode::BandReject => "band-reject",
            FilterMode::AllPass => "all-pass",
        };
        f.write_str(name)
    }
}

impl FromStr for FilterMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" | "lowpass" | "low-pass" => Ok(FilterMode::LowPass),
            "bp" | "bandpass" | "band-pass" => Ok(FilterMode::BandPass),
            "hp" | "highpass" | "high-pass" => Ok(FilterMode::HighPass),
            "br" | "bandreject" | "band-reject" | "notch" => Ok(FilterMode::BandReject),
            "ap" | "allpass" | "all-pass" => Ok(FilterMode::AllPass),
            _ => Err(format!("unknown filter mode `{s}` (expected lp, bp, hp, br or ap)")),
        }
    }
}

/// Required versus actual `g_m1 R_X1` for a mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeConstraint {
    pub mode: FilterMode,
    pub required: Option<f64>,
    pub actual: f64,
    pub satisfied: bool,
}

impl fmt::Display for ModeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.required {
            None => write!(
                f,
                "{}: no g_m1*R_X1 constraint (actual {})",
                self.mode, self.actual
            ),
            Some(req) => write!(
                f,
                "{}: g_m1*R_X1 required {}, actual {} -> {}",
                self.mode,
                req,
                self.actual,
                if self.satisfied { "satisfied" } else { "VIOLATED" }
            ),
        }
    }
}

/// Weights for `mode` plus a report on its `g_m1 R_X1` constraint. An unmet
/// constraint is reported, not rejected.
pub fn build_mode(c: &BiquadCircuit, mode: FilterMode) -> (DriveWeights, ModeConstraint) {
    let actual = c.gm1_rx1();
    let required = mode.required_gm1_rx1();
    let satisfied = match required {
        None => true,
        Some(req) => ((actual - req) / req).abs() <= CONSTRAINT_TOLERANCE,
    };
    (
        mode.weights(),
        ModeConstraint { mode, required, actual, satisfied },
    )
}

/// Angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AngularFrequency(pub f64);

impl AngularFrequency {
    pub fn rad_per_s(self) -> f64 {
        self.0
    }

    pub fn hz(self) -> f64 {
        self.0 / std::f64::consts::TAU
    }
}

/// `ω0 = sqrt(g_m1 / (C1 C2 R_X1))`.
pub fn pole_frequency(c: &BiquadCircuit) -> Result<AngularFrequency> {
    c.validate()?;
    let g_m1 = c.g_m1()?;
    let r_x1 = c.r_x1()?;
    Ok(AngularFrequency((g_m1 / (c.c1 * c.c2 * r_x1)).sqrt()))
}

/// `ω0 = sqrt(I_S1 I_B1) / (V_T sqrt(C1 C2))`, the same quantity written in
/// bias currents.
pub fn pole_frequency_from_currents(c: &BiquadCircuit) -> Result<AngularFrequency> {
    c.validate()?;
    let p = &c.ccccta1;
    Ok(AngularFrequency(
        (p.i_s * p.i_b).sqrt() / (p.v_t * (c.c1 * c.c2).sqrt()),
    ))
}

/// Exact quality factor `sqrt(C1 R_X1 g_m1 / C2) / (1 - g_m2 R_X1)`.
///
/// Negative when `g_m2 R_X1 > 1` (the circuit is unstable).
pub fn quality_factor(c: &BiquadCircuit) -> Result<f64> {
    c.validate()?;
    let damping = 1.0 - c.gm2_rx1();
    if damping == 0.0 {
        return Err(Error::InfiniteQ);
    }
    let g_m1 = c.g_m1()?;
    let r_x1 = c.r_x1()?;
    Ok((c.c1 * r_x1 * g_m1 / c.c2).sqrt() / damping)
}

/// Quality factor for `I_S2 << I_B1`: `½ sqrt(I_S1 C1 / (I_B1 C2))`.
pub fn quality_factor_approx(c: &BiquadCircuit) -> Result<f64> {
    c.validate()?;
    let p = &c.ccccta1;
    Ok(0.5 * (p.i_s * c.c1 / (p.i_b * c.c2)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub exact: f64,
    pub approx: f64,
    /// `(exact - approx) / exact`.
    pub relative_gap: f64,
}

pub fn quality_report(c: &BiquadCircuit) -> Result<QualityReport> {
    let exact = quality_factor(c)?;
    let approx = quality_factor_approx(c)?;
    Ok(QualityReport {
        exact,
        approx,
        relative_gap: (exact - approx) / exact,
    })
}

/// `BW = ω0 / Q` in rad/s, using the exact Q.
pub fn bandwidth(c: &BiquadCircuit) -> Result<f64> {
    Ok(pole_frequency(c)?.0 / quality_factor(c)?)
}
