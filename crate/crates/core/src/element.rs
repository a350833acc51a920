//! Behavioral small-signal model of a single CCCCTA.
//!
//! The bipolar realization sets the X-terminal parasitic resistance from the
//! bias current `I_B` and the output transconductance from `I_S`:
//!
//! ```text
//! R_X = V_T / (2 I_B)        g_m = I_S / (2 V_T)
//! ```
//!
//! The port relations are ideal and linear: `V_X = V_Y + I_X R_X`,
//! `I_Z = I_X`, `I_±O = ±g_m V_Z`.

use crate::error::{non_negative, positive, Result};

/// Thermal voltage near 300 K, in volts.
pub const DEFAULT_THERMAL_VOLTAGE: f64 = 25.85e-3;

/// Bias point of one CCCCTA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CccctaParams {
    /// Bias current `I_B` (A), sets `R_X`.
    pub i_b: f64,
    /// Bias current `I_S` (A), sets `g_m`.
    pub i_s: f64,
    /// Thermal voltage `V_T` (V).
    pub v_t: f64,
}

impl CccctaParams {
    pub fn new(i_b: f64, i_s: f64, v_t: f64) -> Result<Self> {
        let p = Self { i_b, i_s, v_t };
        p.validate()?;
        Ok(p)
    }

    /// Bias point at the default thermal voltage.
    pub fn with_default_vt(i_b: f64, i_s: f64) -> Result<Self> {
        Self::new(i_b, i_s, DEFAULT_THERMAL_VOLTAGE)
    }

    pub fn validate(&self) -> Result<()> {
        positive("i_b", self.i_b)?;
        non_negative("i_s", self.i_s)?;
        positive("v_t", self.v_t)?;
        Ok(())
    }

    pub fn parasitic_resistance(&self) -> Result<f64> {
        parasitic_resistance(self)
    }

    pub fn transconductance(&self) -> Result<f64> {
        transconductance(self)
    }
}

/// Terminal drive applied to a CCCCTA.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PortState {
    /// Voltage at Y (V).
    pub v_y: f64,
    /// Current into X (A).
    pub i_x: f64,
    /// Voltage at the auxiliary Z terminal (V).
    pub v_z: f64,
}

/// Terminal responses of a CCCCTA for a given [`PortState`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PortResponse {
    pub v_x: f64,
    pub i_z: f64,
    pub i_o_plus: f64,
    pub i_o_minus: f64,
}

/// `R_X = V_T / (2 I_B)` in ohms.
pub fn parasitic_resistance(p: &CccctaParams) -> Result<f64> {
    let i_b = positive("i_b", p.i_b)?;
    let v_t = positive("v_t", p.v_t)?;
    Ok(v_t / (2.0 * i_b))
}

/// `g_m = I_S / (2 V_T)` in siemens.
pub fn transconductance(p: &CccctaParams) -> Result<f64> {
    let i_s = non_negative("i_s", p.i_s)?;
    let v_t = positive("v_t", p.v_t)?;
    Ok(i_s / (2.0 * v_t))
}

/// Evaluates the ideal port relations.
pub fn evaluate_ports(p: &CccctaParams, s: &PortState) -> Result<PortResponse> {
    p.validate()?;
    let r_x = parasitic_resistance(p)?;
    let g_m = transconductance(p)?;
    Ok(PortResponse {
        v_x: s.v_y + s.i_x * r_x,
        i_z: s.i_x,
        i_o_plus: g_m * s.v_z,
        i_o_minus: -g_m * s.v_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const VT: f64 = DEFAULT_THERMAL_VOLTAGE;

    fn params(i_b: f64, i_s: f64) -> CccctaParams {
        CccctaParams::new(i_b, i_s, VT).unwrap()
    }

    #[test]
    fn parasitic_resistance_values() {
        assert_relative_eq!(
            params(80e-6, 0.0).parasitic_resistance().unwrap(),
            161.5625,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            params(56.5e-6, 0.0).parasitic_resistance().unwrap(),
            228.76,
            max_relative = 1e-4
        );
        let r1 = params(37e-6, 0.0).parasitic_resistance().unwrap();
        let r2 = params(74e-6, 0.0).parasitic_resistance().unwrap();
        assert_eq!(r2, r1 / 2.0);
    }

    #[test]
    fn transconductance_values() {
        assert_relative_eq!(
            params(1e-6, 320e-6).transconductance().unwrap(),
            6.1896e-3,
            max_relative = 1e-4
        );
        assert_eq!(params(1e-6, 0.0).transconductance().unwrap(), 0.0);
        assert_relative_eq!(
            params(1e-6, 200e-6).transconductance().unwrap(),
            3.8685e-3,
            max_relative = 1e-4
        );
    }

    #[test]
    fn domain_errors_name_the_field() {
        let bad_ib = CccctaParams { i_b: 0.0, i_s: 1e-6, v_t: VT };
        match parasitic_resistance(&bad_ib) {
            Err(Error::Domain { field, .. }) => assert_eq!(field, "i_b"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_vt = CccctaParams { i_b: 1e-6, i_s: 1e-6, v_t: -1.0 };
        match transconductance(&bad_vt) {
            Err(Error::Domain { field, .. }) => assert_eq!(field, "v_t"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(CccctaParams::new(1e-6, -1e-9, VT).is_err());
        assert!(CccctaParams::new(f64::NAN, 1e-6, VT).is_err());
    }

    #[test]
    fn port_relations() {
        let zero = evaluate_ports(&params(80e-6, 320e-6), &PortState::default()).unwrap();
        assert_eq!(zero, PortResponse::default());

        let out = evaluate_ports(
            &params(80e-6, 0.0),
            &PortState { v_y: 10e-3, i_x: 100e-6, v_z: 0.0 },
        )
        .unwrap();
        assert_relative_eq!(out.v_x, 26.15625e-3, max_relative = 1e-12);
        assert_eq!(out.i_z, 100e-6);

        let out = evaluate_ports(
            &params(80e-6, 320e-6),
            &PortState { v_y: 0.0, i_x: 0.0, v_z: 1e-3 },
        )
        .unwrap();
        assert_relative_eq!(out.i_o_plus, 6.1896e-6, max_relative = 1e-4);
        assert_eq!(out.i_o_minus, -out.i_o_plus);
    }

    #[test]
    fn monotone_in_bias() {
        let currents: Vec<f64> = (1..200).map(|k| k as f64 * 5e-6).collect();
        for w in currents.windows(2) {
            assert!(params(w[1], 0.0).parasitic_resistance().unwrap()
                < params(w[0], 0.0).parasitic_resistance().unwrap());
            assert!(params(1e-6, w[1]).transconductance().unwrap()
                > params(1e-6, w[0]).transconductance().unwrap());
        }
    }

    proptest! {
        #[test]
        fn gm_rx_product_is_vt_free(
            i_s in 1e-7f64..1e-3,
            i_b in 1e-7f64..1e-3,
            v_t in 0.01f64..0.05,
        ) {
            let g = CccctaParams::new(1e-6, i_s, v_t).unwrap().transconductance().unwrap();
            let r = CccctaParams::new(i_b, 0.0, v_t).unwrap().parasitic_resistance().unwrap();
            let expected = i_s / (4.0 * i_b);
            prop_assert!(((g * r - expected) / expected).abs() < 1e-15);
        }

        #[test]
        fn ports_are_linear(
            a in prop::array::uniform3(-1e-2f64..1e-2),
            b in prop::array::uniform3(-1e-2f64..1e-2),
        ) {
            let p = params(80e-6, 320e-6);
            let sa = PortState { v_y: a[0], i_x: a[1] * 1e-2, v_z: a[2] };
            let sb = PortState { v_y: b[0], i_x: b[1] * 1e-2, v_z: b[2] };
            let sum = PortState {
                v_y: sa.v_y + sb.v_y,
                i_x: sa.i_x + sb.i_x,
                v_z: sa.v_z + sb.v_z,
            };
            let ra = evaluate_ports(&p, &sa).unwrap();
            let rb = evaluate_ports(&p, &sb).unwrap();
            let rs = evaluate_ports(&p, &sum).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
            prop_assert!(close(rs.v_x, ra.v_x + rb.v_x));
            prop_assert!(close(rs.i_z, ra.i_z + rb.i_z));
            prop_assert!(close(rs.i_o_plus, ra.i_o_plus + rb.i_o_plus));
            prop_assert!(close(rs.i_o_minus, ra.i_o_minus + rb.i_o_minus));
        }
    }
}
