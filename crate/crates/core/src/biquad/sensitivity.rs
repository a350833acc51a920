//! Normalized sensitivities `S_x^y = ∂ln y / ∂ln x` of the pole frequency and
//! the (approximate) quality factor.

use std::fmt;
use std::str::FromStr;

use super::{pole_frequency, quality_factor_approx, BiquadCircuit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    IB1,
    IS1,
    IB2,
    IS2,
    C1,
    C2,
}

impl Parameter {
    pub const ALL: [Parameter; 6] = [
        Parameter::IB1,
        Parameter::IS1,
        Parameter::IB2,
        Parameter::IS2,
        Parameter::C1,
        Parameter::C2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::IB1 => "I_B1",
            Parameter::IS1 => "I_S1",
            Parameter::IB2 => "I_B2",
            Parameter::IS2 => "I_S2",
            Parameter::C1 => "C1",
            Parameter::C2 => "C2",
        }
    }

    fn slot(self, c: &mut BiquadCircuit) -> &mut f64 {
        match self {
            Parameter::IB1 => &mut c.ccccta1.i_b,
            Parameter::IS1 => &mut c.ccccta1.i_s,
            Parameter::IB2 => &mut c.ccccta2.i_b,
            Parameter::IS2 => &mut c.ccccta2.i_s,
            Parameter::C1 => &mut c.c1,
            Parameter::C2 => &mut c.c2,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "");
        Parameter::ALL
            .into_iter()
            .find(|p| p.name().to_ascii_lowercase().replace('_', "") == key)
            .ok_or_else(|| format!("unknown parameter `{s}`"))
    }
}

/// Quantity whose sensitivity is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    PoleFrequency,
    /// The `I_S2 << I_B1` form of Q; the zero entries for `I_S2` hold only here.
    QualityFactorApprox,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::PoleFrequency, Target::QualityFactorApprox];

    pub fn name(self) -> &'static str {
        match self {
            Target::PoleFrequency => "w0",
            Target::QualityFactorApprox => "Q",
        }
    }

    fn evaluate(self, c: &BiquadCircuit) -> Result<f64> {
        match self {
            Target::PoleFrequency => pole_frequency(c).map(|w| w.0),
            Target::QualityFactorApprox => quality_factor_approx(c),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub parameter: Parameter,
    pub target: Target,
    pub value: f64,
}

pub fn analytic_sensitivity(parameter: Parameter, target: Target) -> f64 {
    use Parameter::*;
    match (target, parameter) {
        (Target::PoleFrequency, C1 | C2) => -0.5,
        (Target::PoleFrequency, IS1 | IB1) => 0.5,
        (Target::PoleFrequency, IS2 | IB2) => 0.0,
        (Target::QualityFactorApprox, IB1 | C2) => -0.5,
        (Target::QualityFactorApprox, IS1 | C1) => 0.5,
        (Target::QualityFactorApprox, IS2 | IB2) => 0.0,
    }
}

/// Every (parameter, target) pair with its closed-form sensitivity.
pub fn analytic_sensitivities() -> Vec<Sensitivity> {
    Target::ALL
        .into_iter()
        .flat_map(|target| {
            Parameter::ALL.into_iter().map(move |parameter| Sensitivity {
                parameter,
                target,
                value: analytic_sensitivity(parameter, target),
            })
        })
        .collect()
}

/// Central difference of `ln(target)` in `ln(parameter)`, stepping the
/// parameter by factors `exp(±rel_step)`.
pub fn numeric_sensitivity(
    c: &BiquadCircuit,
    parameter: Parameter,
    target: Target,
    rel_step: f64,
) -> Result<f64> {
    if !(1e-8..=1e-2).contains(&rel_step) {
        return Err(Error::Range(format!(
            "rel_step must lie in [1e-8, 1e-2], got {rel_step}"
        )));
    }
    c.validate()?;
    let perturbed = |factor: f64| -> Result<f64> {
        let mut p = *c;
        *parameter.slot(&mut p) *= factor;
        p.validate()?;
        target.evaluate(&p)
    };
    let up = perturbed(rel_step.exp())?;
    let down = perturbed((-rel_step).exp())?;
    Ok((up.ln() - down.ln()) / (2.0 * rel_step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::DEFAULT_THERMAL_VOLTAGE as VT;

    fn q1_circuit() -> BiquadCircuit {
        BiquadCircuit::from_currents(80e-6, 320e-6, 80e-6, 2e-6, 5e-9, 5e-9, VT).unwrap()
    }

    #[test]
    fn analytic_table() {
        let table = analytic_sensitivities();
        assert_eq!(table.len(), 12);
        let lookup = |p, t| {
            table
                .iter()
                .find(|s| s.parameter == p && s.target == t)
                .unwrap()
                .value
        };
        assert_eq!(lookup(Parameter::C1, Target::PoleFrequency), -0.5);
        assert_eq!(lookup(Parameter::IS2, Target::PoleFrequency), 0.0);
        assert_eq!(lookup(Parameter::IS1, Target::QualityFactorApprox), 0.5);
        assert!(table.iter().all(|s| s.value.abs() <= 0.5));
    }

    #[test]
    fn numeric_matches_examples() {
        let c = q1_circuit();
        let s = numeric_sensitivity(&c, Parameter::IS1, Target::PoleFrequency, 1e-4).unwrap();
        assert!((s - 0.5).abs() < 1e-3);
        let s = numeric_sensitivity(&c, Parameter::IB2, Target::PoleFrequency, 1e-4).unwrap();
        assert!(s.abs() < 1e-6);
        let s = numeric_sensitivity(&c, Parameter::C2, Target::QualityFactorApprox, 1e-4).unwrap();
        assert!((s + 0.5).abs() < 1e-3);
    }

    #[test]
    fn numeric_matches_analytic_everywhere() {
        let c = q1_circuit();
        for s in analytic_sensitivities() {
            for step in [1e-6, 1e-4, 1e-2] {
                let n = numeric_sensitivity(&c, s.parameter, s.target, step).unwrap();
                assert!((n - s.value).abs() < 1e-3, "{} {}: {n}", s.parameter, s.target);
            }
        }
    }

    #[test]
    fn step_and_circuit_validation() {
        let c = q1_circuit();
        assert!(numeric_sensitivity(&c, Parameter::C1, Target::PoleFrequency, 1e-9).is_err());
        assert!(numeric_sensitivity(&c, Parameter::C1, Target::PoleFrequency, 0.1).is_err());
        let mut bad = c;
        bad.c1 = -1e-9;
        assert!(matches!(
            numeric_sensitivity(&bad, Parameter::C2, Target::PoleFrequency, 1e-4),
            Err(Error::Domain { field: "c1", .. })
        ));
    }

    #[test]
    fn parameter_names_parse() {
        for p in Parameter::ALL {
            assert_eq!(p.name().parse::<Parameter>().unwrap(), p);
        }
        assert_eq!("is1".parse::<Parameter>().unwrap(), Parameter::IS1);
    }
}
