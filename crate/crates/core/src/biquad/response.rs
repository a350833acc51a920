use std::f64::consts::TAU;

use num_complex::Complex64;

use super::RationalBiquad;
use crate::error::{Error, Result};

/// Magnitude reported at (or below) a transmission zero, in dB.
pub const MAGNITUDE_FLOOR_DB: f64 = -300.0;

/// One point of a frequency response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePoint {
    pub freq_hz: f64,
    pub magnitude_db: f64,
    /// Principal argument in degrees, or the unwrapped value after
    /// [`unwrap_phase`].
    pub phase_deg: f64,
    /// Set when the magnitude was clamped to [`MAGNITUDE_FLOOR_DB`].
    pub at_floor: bool,
}

/// Evaluates `h` at `s = j 2π f`.
pub fn evaluate_response(h: &RationalBiquad, freq_hz: f64) -> Result<ResponsePoint> {
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::Range(format!("frequency must be > 0, got {freq_hz}")));
    }
    let value = h.eval(Complex64::new(0.0, TAU * freq_hz));
    let mut magnitude_db = 20.0 * value.norm().log10();
    let at_floor = magnitude_db <= MAGNITUDE_FLOOR_DB;
    if at_floor {
        magnitude_db = MAGNITUDE_FLOOR_DB;
    }
    Ok(ResponsePoint {
        freq_hz,
        magnitude_db,
        phase_deg: value.arg().to_degrees(),
        at_floor,
    })
}

/// Logarithmically spaced grid from `f_start` to `f_stop` inclusive, with at
/// least `points_per_decade` points per decade.
pub fn log_grid(f_start: f64, f_stop: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(f_start.is_finite() && f_start > 0.0 && f_stop.is_finite() && f_start < f_stop) {
        return Err(Error::Range(format!(
            "need 0 < f_start < f_stop, got {f_start} .. {f_stop}"
        )));
    }
    if points_per_decade == 0 {
        return Err(Error::Range("points_per_decade must be >= 1".into()));
    }
    let decades = (f_stop / f_start).log10();
    // absorb rounding in log10 so that whole decades give decades*ppd intervals
    let intervals = ((decades * points_per_decade as f64) - 1e-9).ceil().max(1.0) as usize;
    let ratio = f_stop / f_start;
    let mut grid: Vec<f64> = (0..=intervals)
        .map(|i| f_start * ratio.powf(i as f64 / intervals as f64))
        .collect();
    grid[0] = f_start;
    grid[intervals] = f_stop;
    Ok(grid)
}

/// Frequency response over a logarithmic grid, ordered by frequency.
pub fn sweep(
    h: &RationalBiquad,
    f_start_hz: f64,
    f_stop_hz: f64,
    points_per_decade: usize,
) -> Result<Vec<ResponsePoint>> {
    log_grid(f_start_hz, f_stop_hz, points_per_decade)?
        .into_iter()
        .map(|f| evaluate_response(h, f))
        .collect()
}

/// Removes ±360° jumps so consecutive phases differ by at most 180°.
pub fn unwrap_phase(points: &mut [ResponsePoint]) {
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for p in points.iter_mut() {
        let raw = p.phase_deg;
        if let Some(last) = prev {
            let mut unwrapped = raw + offset;
            while unwrapped - last > 180.0 {
                offset -= 360.0;
                unwrapped -= 360.0;
            }
            while unwrapped - last < -180.0 {
                offset += 360.0;
                unwrapped += 360.0;
            }
        }
        p.phase_deg = raw + offset;
        prev = Some(p.phase_deg);
    }
}
