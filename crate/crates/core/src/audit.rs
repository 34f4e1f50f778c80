//! Consistency audit: recompute every headline number of the source
//! analysis from the raw preset inputs and verdict each against the
//! quoted value.
//!
//! Comparison bases: plain relative difference for parameters and
//! frequencies; for probabilities quoted close to 1 (p_cav, η_det) the
//! deficit 1 − p is compared instead, since the quoted digits only carry
//! information there. Tolerances: 2% for parameter-chain values, 10% for
//! fidelities, optima and probability deficits.

use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;
use crate::error::Result;
use crate::optimize::{maximize_fidelity, Optimum};
use crate::params::load_preset;
use crate::protocol::{DephasingPolicy, ProtocolErrors};
use crate::readout::{cavity_emission_probability, detection_efficiency, false_positive_probability};
use crate::reflection::resonant_partial_fractions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Match,
    Flagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonBasis {
    /// |computed − quoted| / |quoted|.
    Value,
    /// Same, applied to the deficits 1 − x.
    Deficit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub quantity: String,
    pub paper_value: f64,
    pub computed_value: f64,
    pub relative_difference: f64,
    pub basis: ComparisonBasis,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub note: Option<String>,
}

impl AuditEntry {
    fn new(
        quantity: &str,
        paper_value: f64,
        computed_value: f64,
        basis: ComparisonBasis,
        tolerance: f64,
        note: Option<String>,
    ) -> Self {
        let (a, b) = match basis {
            ComparisonBasis::Value => (paper_value, computed_value),
            ComparisonBasis::Deficit => (1.0 - paper_value, 1.0 - computed_value),
        };
        let relative_difference = ((b - a) / a).abs();
        let verdict = if relative_difference <= tolerance {
            Verdict::Match
        } else {
            Verdict::Flagged
        };
        Self {
            quantity: quantity.to_string(),
            paper_value,
            computed_value,
            relative_difference,
            basis,
            tolerance,
            verdict,
            note,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn flagged(&self) -> Vec<&AuditEntry> {
        self.entries
            .iter()
            .filter(|e| e.verdict == Verdict::Flagged)
            .collect()
    }
}

const PARAM_TOL: f64 = 0.02;
const FIDELITY_TOL: f64 = 0.10;

fn optimum_for(preset: &str, eta_det: f64) -> Result<Optimum> {
    let data = load_preset(preset)?;
    let params = data.system_params()?;
    let policy = DephasingPolicy::new(data.spin.spin_dephasing_rate);
    maximize_fidelity(&params, &policy, &ProtocolErrors::default(), eta_det, None)
}

/// Recompute every quoted headline value and verdict it.
pub fn run_audit() -> Result<AuditReport> {
    let demo = load_preset("nd_yvo4_demonstrated")?;
    let theory = load_preset("nd_yvo4_theoretical_q")?;
    let demo_derived = demo.derived()?;
    let theory_derived = theory.derived()?;
    let demo_params = demo.system_params()?;

    let p_det = 0.9;
    let p_cav_demo =
        cavity_emission_probability(demo.ion.branching_ratio, demo_derived.purcell_factor)?;
    let p_cav_theory =
        cavity_emission_probability(theory.ion.branching_ratio, theory_derived.purcell_factor)?;
    let eta_demo = detection_efficiency(p_cav_demo, p_det, 2)?;
    let eta_theory = detection_efficiency(p_cav_theory, p_det, 2)?;

    // the quoted false-positive rate comes with no drive strength; the
    // Rabi frequency reproducing it under the quoted n_cyc = 116 is
    // back-solved and recorded
    let n_cyc_quoted = 116.0f64;
    let p_off_quoted = 1.0e-4f64;
    let rabi_backsolved =
        demo.ion.detuning_offstate * (p_off_quoted / n_cyc_quoted).sqrt();
    let p_off_computed = false_positive_probability(
        rabi_backsolved,
        demo.ion.detuning_offstate,
        n_cyc_quoted,
        demo.ion.coupling_ratio_sq,
    )?;

    let narrow = resonant_partial_fractions(
        demo_params.coupling_rate,
        demo_params.cavity_linewidth,
        demo_params.optical_dephasing_rate,
    )?
    .narrow;

    let opt_demo = optimum_for("nd_yvo4_demonstrated", eta_demo)?;
    let opt_subkelvin = optimum_for("nd_yvo4_subkelvin", eta_demo)?;
    let opt_theory = optimum_for("nd_yvo4_theoretical_q", eta_theory)?;

    let entries = vec![
        AuditEntry::new(
            "single_photon_field_v_per_m",
            446_229.0,
            demo_derived.single_photon_field,
            ComparisonBasis::Value,
            PARAM_TOL,
            None,
        ),
        AuditEntry::new(
            "cavity_linewidth_rad_s (demonstrated)",
            TWO_PI * 8.5e9,
            demo_derived.cavity_linewidth,
            ComparisonBasis::Value,
            PARAM_TOL,
            None,
        ),
        AuditEntry::new(
            "coupling_rate_rad_s",
            TWO_PI * 30.6e6,
            demo_derived.coupling_rate,
            ComparisonBasis::Value,
            PARAM_TOL,
            None,
        ),
        AuditEntry::new(
            "cooperativity (demonstrated)",
            246.0,
            demo_derived.cooperativity,
            ComparisonBasis::Value,
            PARAM_TOL,
            Some("quoted value is not reproducible from g^2/(kappa*gamma) with the quoted inputs".into()),
        ),
        AuditEntry::new(
            "cooperativity (theoretical Q)",
            7392.0,
            theory_derived.cooperativity,
            ComparisonBasis::Value,
            PARAM_TOL,
            Some("quoted value is not reproducible from g^2/(kappa*gamma) with the quoted inputs".into()),
        ),
        AuditEntry::new(
            "purcell_factor (demonstrated)",
            1520.0,
            demo_derived.purcell_factor,
            ComparisonBasis::Value,
            PARAM_TOL,
            None,
        ),
        AuditEntry::new(
            "purcell_factor (theoretical Q)",
            22_797.0,
            theory_derived.purcell_factor,
            ComparisonBasis::Value,
            PARAM_TOL,
            None,
        ),
        AuditEntry::new(
            "narrow_feature_hwhm_rad_s",
            TWO_PI * 1.3e6,
            narrow.hwhm,
            ComparisonBasis::Value,
            PARAM_TOL,
            Some("g^2/kappa + gamma/2 with the quoted inputs gives ~2pi*113 kHz".into()),
        ),
        AuditEntry::new(
            "cavity_emission_probability",
            0.9985,
            p_cav_demo,
            ComparisonBasis::Deficit,
            FIDELITY_TOL,
            Some("F_P*beta/(1-beta+F_P*beta) with beta = 0.104, F_P = 1520 gives 0.9944".into()),
        ),
        AuditEntry::new(
            "detection_efficiency (demonstrated)",
            0.988,
            eta_demo,
            ComparisonBasis::Deficit,
            FIDELITY_TOL,
            None,
        ),
        AuditEntry::new(
            "detection_efficiency (theoretical Q)",
            0.991,
            eta_theory,
            ComparisonBasis::Deficit,
            FIDELITY_TOL,
            Some("series value from the theoretical-Q p_cav is ~0.999; the quoted downstream fidelity 99.5% agrees with the series value, not with 0.991".into()),
        ),
        AuditEntry::new(
            "false_positive_probability",
            p_off_quoted,
            p_off_computed,
            ComparisonBasis::Value,
            PARAM_TOL,
            Some(format!(
                "no drive strength is quoted; Rabi frequency back-solved to {rabi_backsolved:.4e} rad/s under n_cyc = 116"
            )),
        ),
        AuditEntry::new(
            "optimal_pulse_duration_s (demonstrated)",
            13e-6,
            opt_demo.t_p_star,
            ComparisonBasis::Value,
            FIDELITY_TOL,
            None,
        ),
        AuditEntry::new(
            "optimal_pulse_duration_s (theoretical Q)",
            11e-6,
            opt_theory.t_p_star,
            ComparisonBasis::Value,
            FIDELITY_TOL,
            None,
        ),
        AuditEntry::new(
            "max_fidelity (demonstrated)",
            0.934,
            opt_demo.fidelity_star,
            ComparisonBasis::Value,
            FIDELITY_TOL,
            None,
        ),
        AuditEntry::new(
            "max_fidelity (subkelvin)",
            0.953,
            opt_subkelvin.fidelity_star,
            ComparisonBasis::Value,
            FIDELITY_TOL,
            None,
        ),
        AuditEntry::new(
            "max_fidelity (theoretical Q)",
            0.995,
            opt_theory.fidelity_star,
            ComparisonBasis::Value,
            FIDELITY_TOL,
            None,
        ),
    ];
    Ok(AuditReport { entries })
}
