//! Self-checks run by `ccccta verify`: the published design points plus the
//! property suites, each at a fixed tolerance.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::biquad::{
    analytic_sensitivities, evaluate_response, numeric_sensitivity, pole_frequency,
    pole_frequency_from_currents, quality_factor_approx, sweep, transfer_function, BiquadCircuit,
    FilterMode,
};
use crate::designer::{
    circuit_from_point, design_filter, design_oscillator, FilterSpec, OscillatorSpec,
    BP_SWEEP, BP_SWEEP_I_B2, BP_SWEEP_I_S2, FILTER_POINT, FILTER_THEORY_HZ, OSCILLATOR_POINT,
    OSCILLATOR_THEORY_HZ,
};
use crate::error::Result;
use crate::oscillator::{
    characteristic_coefficients, estimate_phase, oscillation_condition, oscillation_frequency,
    simulate, wrap_degrees, OscillatorConfig,
};

const SEED: u64 = 0x00cc_ccc7_a5ee_d001;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// A random valid, stable circuit with `g_m2 R_X1 < 0.05`.
pub fn random_circuit(rng: &mut ChaCha8Rng, v_t: f64) -> BiquadCircuit {
    let i_b1 = log_uniform(rng, 1e-6, 1e-3);
    let i_s1 = log_uniform(rng, 1e-6, 1e-3);
    let i_b2 = log_uniform(rng, 1e-6, 1e-3);
    let i_s2 = rng.gen_range(0.0..0.05) * 4.0 * i_b1;
    let c1 = log_uniform(rng, 1e-11, 1e-7);
    let c2 = log_uniform(rng, 1e-11, 1e-7);
    BiquadCircuit::from_currents(i_b1, i_s1, i_b2, i_s2, c1, c2, v_t)
        .expect("random circuit within domain")
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> (Result<T>, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome { name, passed: false, detail: format!("error: {e}") },
    }
}

pub fn filter_design_point(v_t: f64) -> CheckOutcome {
    let (res, elapsed) = timed(|| {
        let c = circuit_from_point(FILTER_POINT, v_t)?;
        Ok((pole_frequency(&c)?.hz(), quality_factor_approx(&c)?))
    });
    outcome(
        "filter design point",
        res.map(|(f0, q)| {
            let err = rel(f0, FILTER_THEORY_HZ);
            let ok = err <= 5e-3 && (q - 1.0).abs() <= 1e-9 && elapsed < Duration::from_secs(1);
            (ok, format!("f0 = {f0:.2} Hz ({:.3}% from 196.71 kHz), Q = {q}", err * 100.0))
        }),
    )
}

pub fn bp_tuning_sweep(v_t: f64) -> CheckOutcome {
    let (res, elapsed) = timed(|| {
        let mut worst_closed = 0.0f64;
        let mut worst_sim = 0.0f64;
        let mut worst_q = 0.0f64;
        for (i, simulated) in BP_SWEEP {
            let c = BiquadCircuit::from_currents(i, i, BP_SWEEP_I_B2, BP_SWEEP_I_S2, 5e-9, 5e-9, v_t)?;
            let f0 = pole_frequency(&c)?.hz();
            worst_closed = worst_closed.max(rel(f0, i / (TAU * v_t * 5e-9)));
            worst_sim = worst_sim.max(rel(f0, simulated));
            worst_q = worst_q.max((quality_factor_approx(&c)? - 0.5).abs());
        }
        Ok((worst_closed, worst_sim, worst_q))
    });
    outcome(
        "band-pass tuning sweep",
        res.map(|(closed, sim, q)| {
            let ok = closed <= 1e-9 && sim <= 0.10 && q <= 1e-12 && elapsed < Duration::from_secs(1);
            (ok, format!(
                "closed-form err {closed:.1e}, worst vs simulated {:.2}%, Q err {q:.1e}",
                sim * 100.0
            ))
        }),
    )
}

pub fn orthogonal_tuning(v_t: f64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let res = (|| {
        let (mut worst_f, mut worst_q) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let c = random_circuit(&mut rng, v_t);
            let k = log_uniform(&mut rng, 0.1, 10.0);
            let mut scaled = c;
            scaled.ccccta1.i_b *= k;
            scaled.ccccta1.i_s *= k;
            worst_f = worst_f.max(rel(pole_frequency(&scaled)?.0, k * pole_frequency(&c)?.0));
            worst_q = worst_q.max(rel(quality_factor_approx(&scaled)?, quality_factor_approx(&c)?));
        }
        Ok((worst_f <= 1e-9 && worst_q <= 1e-12, format!("f0 err {worst_f:.1e}, Q err {worst_q:.1e}")))
    })();
    outcome("orthogonal tuning", res)
}

pub fn mode_shapes(v_t: f64) -> CheckOutcome {
    let res = (|| {
        let c = circuit_from_point(FILTER_POINT, v_t)?;
        let f0 = pole_frequency(&c)?.hz();
        let lp = transfer_function(&c, &FilterMode::LowPass.weights())?;
        let lp_dc = evaluate_response(&lp, f0 * 1e-9)?.magnitude_db;
        let hp = transfer_function(&c, &FilterMode::HighPass.weights())?;
        let hp_hf = evaluate_response(&hp, f0 * 1e3)?.magnitude_db;
        let br = transfer_function(&c, &FilterMode::BandReject.weights())?;
        let br_f0 = evaluate_response(&br, f0)?.magnitude_db;

        let ap_c = BiquadCircuit::from_currents(80e-6, 640e-6, 80e-6, 0.005 * 320e-6, 5e-9, 5e-9, v_t)?;
        let ap_f0 = pole_frequency(&ap_c)?.hz();
        let ap = transfer_function(&ap_c, &FilterMode::AllPass.weights())?;
        let ripple = sweep(&ap, ap_f0 / 100.0, ap_f0 * 100.0, 100)?
            .iter()
            .chain(std::iter::once(&evaluate_response(&ap, ap_f0)?))
            .fold(0.0f64, |m, p| m.max(p.magnitude_db.abs()));
        let ap_phase = wrap_degrees(evaluate_response(&ap, ap_f0)?.phase_deg + 180.0);

        let ok = lp_dc.abs() <= 1e-6
            && hp_hf.abs() <= 0.01
            && br_f0 <= -80.0
            && ripple <= 0.05
            && ap_phase.abs() <= 0.1;
        Ok((ok, format!(
            "LP DC {lp_dc:.1e} dB, HP {hp_hf:.1e} dB, BR(f0) {br_f0:.0} dB, AP ripple {ripple:.4} dB, \
             AP phase err {ap_phase:.1e} deg"
        )))
    })();
    outcome("mode shapes", res)
}

pub fn sensitivities(v_t: f64) -> CheckOutcome {
    let (res, elapsed) = timed(|| {
        let c = circuit_from_point(FILTER_POINT, v_t)?;
        let mut worst = 0.0f64;
        for s in analytic_sensitivities() {
            let n = numeric_sensitivity(&c, s.parameter, s.target, 1e-4)?;
            worst = worst.max((n - s.value).abs());
        }
        Ok(worst)
    });
    outcome(
        "sensitivities",
        res.map(|w| (w <= 1e-3 && elapsed < Duration::from_secs(1), format!("max |numeric - analytic| = {w:.1e}"))),
    )
}

fn margin_circuit(v_t: f64, margin: f64) -> Result<BiquadCircuit> {
    let mut c = circuit_from_point(OSCILLATOR_POINT, v_t)?;
    c.ccccta2.i_s = 4.0 * c.ccccta1.i_b * (1.0 + margin);
    Ok(c)
}

/// Closed-form FO plus a settled limiter-stabilized run; also returns the
/// run's two phase measurements for [`quadrature`].
pub fn oscillator_frequency(v_t: f64) -> (CheckOutcome, Option<(f64, f64)>) {
    let (res, elapsed) = timed(|| {
        let fo_published = oscillation_frequency(&circuit_from_point(OSCILLATOR_POINT, v_t)?)?.hz();
        let c = margin_circuit(v_t, 0.1)?;
        let fo = oscillation_frequency(&c)?.hz();
        let run = simulate(&OscillatorConfig::new(c)?)?;
        let est = run.est_freq_hz.unwrap_or(f64::NAN);
        let half = run.v_o1.len() / 2;
        let p12 = run.est_phase_o2_vs_o1_deg.unwrap_or(f64::NAN);
        let p23 = estimate_phase(&run.v_o2[half..], &run.v_o3[half..], run.dt, est)?;
        Ok((fo_published, fo, est, run.settled, run.amplitude_drift, p12, p23))
    });
    match res {
        Ok((fo_published, fo, est, settled, drift, p12, p23)) => {
            let ok = rel(fo_published, OSCILLATOR_THEORY_HZ) <= 0.01
                && settled
                && rel(est, fo) <= 0.02
                && elapsed < Duration::from_secs(30);
            (
                CheckOutcome {
                    name: "oscillator frequency",
                    passed: ok,
                    detail: format!(
                        "FO {fo_published:.0} Hz vs 130 kHz, simulated {est:.0} Hz vs {fo:.0} Hz ({:.3}%), \
                         drift {:.3}%, settled {settled}",
                        rel(est, fo) * 100.0,
                        drift * 100.0
                    ),
                },
                Some((p12, p23)),
            )
        }
        Err(e) => (outcome("oscillator frequency", Err(e)), None),
    }
}

pub fn quadrature(phases: Option<(f64, f64)>) -> CheckOutcome {
    match phases {
        Some((p12, p23)) => CheckOutcome {
            name: "quadrature outputs",
            passed: (p12 + 90.0).abs() <= 2.0 && p23 == 180.0,
            detail: format!("v_o2 vs v_o1 {p12:.3} deg, v_o3 vs v_o2 {p23} deg"),
        },
        None => CheckOutcome {
            name: "quadrature outputs",
            passed: false,
            detail: "no settled run".into(),
        },
    }
}

pub fn fo_co_independence(v_t: f64) -> CheckOutcome {
    let res = (|| {
        let base = circuit_from_point(OSCILLATOR_POINT, v_t)?;
        let fo = oscillation_frequency(&base)?;
        let margin = oscillation_condition(&base).margin;
        let mut ok = true;
        for k in 0..=20 {
            let x = 50e-6 * (1.0 + k as f64);
            let mut a = base;
            a.ccccta2.i_s = x;
            ok &= oscillation_frequency(&a)? == fo;
            let mut b = base;
            b.ccccta1.i_s = x;
            ok &= oscillation_condition(&b).margin == margin;
        }
        Ok((ok, "FO fixed over I_S2 sweep, CO margin fixed over I_S1 sweep".to_string()))
    })();
    outcome("FO/CO independence", res)
}

pub fn oracle_consistency(v_t: f64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let res = (|| {
        let mut identical = true;
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let c = random_circuit(&mut rng, v_t);
            let den = transfer_function(&c, &FilterMode::BandPass.weights())?.den;
            identical &= den == characteristic_coefficients(&c)?;
            worst = worst.max(rel(pole_frequency(&c)?.0, pole_frequency_from_currents(&c)?.0));
        }
        Ok((identical && worst <= 1e-12, format!("denominators identical: {identical}, w0 forms differ by {worst:.1e}")))
    })();
    outcome("oracle consistency", res)
}

pub fn designer_round_trip(v_t: f64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let res = (|| {
        let (mut worst_f, mut worst_q) = (0.0f64, 0.0f64);
        for _ in 0..1000 {
            let f0 = log_uniform(&mut rng, 1e2, 1e8);
            let q = log_uniform(&mut rng, 0.1, 10.0);
            let spec = FilterSpec {
                c1: log_uniform(&mut rng, 1e-11, 1e-7),
                c2: log_uniform(&mut rng, 1e-11, 1e-7),
                gm2_rx1_budget: rng.gen_range(1e-4..0.099),
                v_t,
                ..FilterSpec::new(f0, q, 1e-9)
            };
            let c = design_filter(&spec)?.circuit()?;
            worst_f = worst_f.max(rel(pole_frequency(&c)?.hz(), f0));
            worst_q = worst_q.max(rel(quality_factor_approx(&c)?, q));

            let f = log_uniform(&mut rng, 1e2, 1e8);
            let osc = OscillatorSpec {
                c1: log_uniform(&mut rng, 1e-11, 1e-7),
                c2: log_uniform(&mut rng, 1e-11, 1e-7),
                current_ratio: log_uniform(&mut rng, 0.1, 20.0),
                startup_margin: rng.gen_range(0.0..0.5),
                v_t,
                ..OscillatorSpec::new(f, 1e-9)
            };
            let c = design_oscillator(&osc)?.circuit()?;
            worst_f = worst_f.max(rel(oscillation_frequency(&c)?.hz(), f));
        }
        Ok((worst_f <= 1e-9 && worst_q <= 1e-9, format!("f err {worst_f:.1e}, Q err {worst_q:.1e}")))
    })();
    outcome("designer round-trip", res)
}

/// Every check, in a fixed order.
pub fn run_all(v_t: f64) -> Vec<CheckOutcome> {
    let (osc, phases) = oscillator_frequency(v_t);
    vec![
        filter_design_point(v_t),
        bp_tuning_sweep(v_t),
        orthogonal_tuning(v_t),
        mode_shapes(v_t),
        sensitivities(v_t),
        osc,
        quadrature(phases),
        fo_co_independence(v_t),
        oracle_consistency(v_t),
        designer_round_trip(v_t),
    ]
}
