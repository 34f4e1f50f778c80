//! Spin-state readout statistics: Purcell-enhanced emission into the
//! cavity channel, multi-photon detection efficiency with a threshold
//! detector, false positives from off-resonant driving, and the expected
//! number of cycling transitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything the readout model needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSpec {
    /// β, free-space branching ratio into the readout transition.
    pub branching_ratio: f64,
    /// F_P, Purcell factor of the cavity.
    pub purcell_factor: f64,
    /// p_det, end-to-end single-photon detector efficiency.
    pub detector_efficiency: f64,
    /// n_M, minimum detected photons declared a click.
    pub min_photons: u32,
    /// Ω, Rabi frequency of the cycling drive, rad/s.
    pub rabi_frequency: f64,
    /// Fixed n_cyc instead of the geometric mean 1/(1 − p_cav).
    pub n_cyc_override: Option<f64>,
}

impl ReadoutSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.branching_ratio > 0.0 && self.branching_ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "branching_ratio must be in (0, 1), got {}",
                self.branching_ratio
            )));
        }
        if !(self.purcell_factor > 0.0) {
            return Err(Error::InvalidInput(format!(
                "purcell_factor must be positive, got {}",
                self.purcell_factor
            )));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency < 1.0) {
            return Err(Error::InvalidInput(format!(
                "detector_efficiency must be in (0, 1), got {}",
                self.detector_efficiency
            )));
        }
        if self.min_photons < 1 {
            return Err(Error::InvalidInput("min_photons must be >= 1".into()));
        }
        if self.rabi_frequency < 0.0 {
            return Err(Error::InvalidInput(format!(
                "rabi_frequency must be non-negative, got {}",
                self.rabi_frequency
            )));
        }
        if let Some(n) = self.n_cyc_override {
            if !(n > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "n_cyc_override must be positive, got {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Probability that a Purcell-enhanced emission goes into the cavity
/// channel: p_cav = F_P·β / (1 − β + F_P·β).
pub fn cavity_emission_probability(branching_ratio: f64, purcell_factor: f64) -> Result<f64> {
    if !(branching_ratio > 0.0 && branching_ratio < 1.0) {
        return Err(Error::InvalidInput(format!(
            "branching_ratio must be in (0, 1), got {branching_ratio}"
        )));
    }
    if !(purcell_factor > 0.0) {
        return Err(Error::InvalidInput(format!(
            "purcell_factor must be positive, got {purcell_factor}"
        )));
    }
    let enhanced = purcell_factor * branching_ratio;
    Ok(enhanced / (1.0 - branching_ratio + enhanced))
}

/// ln of the binomial coefficient C(n, k), built incrementally; exact
/// enough for k ≤ a few tens.
fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 0.0f64;
    for i in 0..k {
        acc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}

/// η_det: probability that the geometric emission run yields at least
/// `n_M` detected photons,
///
/// ```text
/// η_det = Σ_{n≥1} p_cav^n (1 − p_cav) Σ_{k=n_M}^{n} C(n,k) p_det^k (1 − p_det)^{n−k}
/// ```
///
/// truncated once the geometric tail drops below 10⁻¹². Binomial terms
/// are evaluated in log space so large n cannot overflow.
pub fn detection_efficiency(p_cav: f64, p_det: f64, n_m: u32) -> Result<f64> {
    if !(p_cav > 0.0 && p_cav < 1.0) {
        return Err(Error::InvalidInput(format!(
            "p_cav must be in (0, 1), got {p_cav}"
        )));
    }
    if !(p_det > 0.0 && p_det <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "p_det must be in (0, 1], got {p_det}"
        )));
    }
    if n_m < 1 {
        return Err(Error::InvalidInput("n_M must be >= 1".into()));
    }
    // geometric tail beyond n_max: p_cav^(n_max+1) < 1e-12
    let n_max = ((-12.0 * std::f64::consts::LN_10) / p_cav.ln()).ceil() as u64 + 1;
    let ln_p = p_det.ln();
    let ln_q = (1.0 - p_det).ln(); // -inf for p_det = 1, handled below
    let mut eta = 0.0f64;
    for n in u64::from(n_m)..=n_max {
        // P(>= n_M detections out of n attempts), via the short lower
        // tail: 1 - sum_{k < n_M} C(n,k) p^k q^(n-k)
        let tail = if p_det == 1.0 {
            1.0
        } else {
            let mut miss = 0.0f64;
            for k in 0..u64::from(n_m) {
                let ln_term = ln_binomial(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q;
                miss += ln_term.exp();
            }
            (1.0 - miss).clamp(0.0, 1.0)
        };
        eta += p_cav.powi(n as i32) * (1.0 - p_cav) * tail;
    }
    Ok(eta.min(1.0))
}

/// p_off = (Ω²/Δ²)·n_cyc·(g̃²/g²): probability of a false click from the
/// nominally dark spin state.
pub fn false_positive_probability(
    rabi_frequency: f64,
    detuning: f64,
    n_cyc: f64,
    coupling_ratio_sq: f64,
) -> Result<f64> {
    if detuning == 0.0 {
        return Err(Error::InvalidInput(
            "off-state detuning must be non-zero for the false-positive estimate".into(),
        ));
    }
    if !(n_cyc > 0.0) {
        return Err(Error::InvalidInput(format!(
            "n_cyc must be positive, got {n_cyc}"
        )));
    }
    if !(coupling_ratio_sq > 0.0 && coupling_ratio_sq <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "coupling_ratio_sq must be in (0, 1], got {coupling_ratio_sq}"
        )));
    }
    let ratio = rabi_frequency / detuning;
    Ok(ratio * ratio * n_cyc * coupling_ratio_sq)
}

/// Average number of cycling transitions: the override when given, else
/// the mean 1/(1 − p_cav) of the geometric emission count.
pub fn expected_cycles(p_cav: f64, override_value: Option<f64>) -> Result<f64> {
    if let Some(n) = override_value {
        if !(n > 0.0) {
            return Err(Error::InvalidInput(format!(
                "n_cyc override must be positive, got {n}"
            )));
        }
        return Ok(n);
    }
    if !(p_cav > 0.0 && p_cav < 1.0) {
        return Err(Error::InvalidInput(format!(
            "p_cav must be in (0, 1), got {p_cav}"
        )));
    }
    Ok(1.0 / (1.0 - p_cav))
}

/// Full readout report for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub p_cav: f64,
    /// η_det for n_M = 1..=6, at the spec's detector efficiency.
    pub eta_det_by_threshold: Vec<(u32, f64)>,
    /// η_det at the spec's own n_M.
    pub eta_det: f64,
    pub n_cyc: f64,
    pub p_off: f64,
}

/// Evaluate the whole readout chain for a spec and off-state detuning.
pub fn readout_report(spec: &ReadoutSpec, detuning: f64, coupling_ratio_sq: f64) -> Result<ReadoutReport> {
    spec.validate()?;
    let p_cav = cavity_emission_probability(spec.branching_ratio, spec.purcell_factor)?;
    let eta_det_by_threshold = (1..=6)
        .map(|n_m| Ok((n_m, detection_efficiency(p_cav, spec.detector_efficiency, n_m)?)))
        .collect::<Result<Vec<_>>>()?;
    let eta_det = detection_efficiency(p_cav, spec.detector_efficiency, spec.min_photons)?;
    let n_cyc = expected_cycles(p_cav, spec.n_cyc_override)?;
    let p_off = false_positive_probability(spec.rabi_frequency, detuning, n_cyc, coupling_ratio_sq)?;
    Ok(ReadoutReport {
        p_cav,
        eta_det_by_threshold,
        eta_det,
        n_cyc,
        p_off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn emission_probability_quoted_value() {
        let p = cavity_emission_probability(0.15, 1000.0).unwrap();
        assert!((p - 0.994).abs() < 0.001, "p_cav = {p}");
    }

    #[test]
    fn emission_probability_limits() {
        // F_P = 1: no enhancement, p_cav = beta
        for beta in [0.05, 0.104, 0.5, 0.9] {
            assert_relative_eq!(
                cavity_emission_probability(beta, 1.0).unwrap(),
                beta,
                max_relative = 1e-12
            );
        }
        assert!(cavity_emission_probability(0.0, 10.0).is_err());
        assert!(cavity_emission_probability(1.0, 10.0).is_err());
        assert!(cavity_emission_probability(0.5, 0.0).is_err());
    }

    #[test]
    fn emission_probability_formula_preset_values() {
        let p = cavity_emission_probability(0.104, 1520.0).unwrap();
        assert_relative_eq!(p, 0.9944, max_relative = 1e-3);
    }

    #[test]
    fn detection_efficiency_quoted_values() {
        let eta2 = detection_efficiency(0.994, 0.9, 2).unwrap();
        assert!((eta2 - 0.987).abs() < 0.001, "eta(n_M=2) = {eta2}");
        let eta4 = detection_efficiency(0.994, 0.9, 4).unwrap();
        assert!((eta4 - 0.974).abs() < 0.001, "eta(n_M=4) = {eta4}");
    }

    #[test]
    fn detection_efficiency_geometric_identity() {
        // p_det = 1, n_M = 1: eta = sum p^n (1-p) over n >= 1 = p
        for p_cav in [0.3, 0.7, 0.994] {
            assert_relative_eq!(
                detection_efficiency(p_cav, 1.0, 1).unwrap(),
                p_cav,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn detection_efficiency_monotonicity() {
        let grid = [0.3, 0.6, 0.9, 0.99];
        for &p_det in &grid {
            for w in grid.windows(2) {
                let lo = detection_efficiency(w[0], p_det, 2).unwrap();
                let hi = detection_efficiency(w[1], p_det, 2).unwrap();
                assert!(hi >= lo);
            }
        }
        for &p_cav in &grid {
            for w in grid.windows(2) {
                let lo = detection_efficiency(p_cav, w[0], 2).unwrap();
                let hi = detection_efficiency(p_cav, w[1], 2).unwrap();
                assert!(hi >= lo);
            }
            for n_m in 1..6 {
                let more = detection_efficiency(p_cav, 0.9, n_m).unwrap();
                let fewer = detection_efficiency(p_cav, 0.9, n_m + 1).unwrap();
                assert!(fewer <= more);
            }
        }
    }

    #[test]
    fn detection_efficiency_bounded_by_emission() {
        for p_cav in [0.5, 0.9, 0.994, 0.9996] {
            for n_m in 1..=4 {
                let eta = detection_efficiency(p_cav, 0.9, n_m).unwrap();
                assert!(eta <= p_cav + 1e-12);
                assert!(eta <= 1.0);
            }
        }
    }

    #[test]
    fn false_positive_values() {
        assert_eq!(
            false_positive_probability(0.0, 1.0, 116.0, 1.0).unwrap(),
            0.0
        );
        let p = false_positive_probability(1e-3, 1.0, 116.0, 1.0).unwrap();
        assert_relative_eq!(p, 1.16e-4, max_relative = 1e-9);
        // gamma-scale drive far detuned: utterly negligible
        let gamma = crate::constants::TWO_PI * 5.9e3;
        let delta = crate::constants::TWO_PI * 30.0e9;
        let p = false_positive_probability(gamma, delta, 116.0, 1.0).unwrap();
        assert_relative_eq!(p, 4.5e-12, max_relative = 2e-2);
        assert!(false_positive_probability(1.0, 0.0, 116.0, 1.0).is_err());
    }

    #[test]
    fn expected_cycles_values() {
        assert_relative_eq!(expected_cycles(0.994, None).unwrap(), 166.7, max_relative = 1e-3);
        assert_relative_eq!(expected_cycles(0.5, None).unwrap(), 2.0);
        assert_relative_eq!(expected_cycles(0.5, Some(116.0)).unwrap(), 116.0);
        assert!(expected_cycles(0.5, Some(0.0)).is_err());
        assert!(expected_cycles(1.0, None).is_err());
    }

    #[test]
    fn report_is_consistent() {
        let spec = ReadoutSpec {
            branching_ratio: 0.104,
            purcell_factor: 1520.0,
            detector_efficiency: 0.9,
            min_photons: 2,
            rabi_frequency: 1e-3,
            n_cyc_override: None,
        };
        let report = readout_report(&spec, 1.0, 1.0).unwrap();
        assert_relative_eq!(report.p_cav, 0.9944, max_relative = 1e-3);
        assert_eq!(report.eta_det_by_threshold.len(), 6);
        assert_relative_eq!(report.eta_det, report.eta_det_by_threshold[1].1);
        assert_relative_eq!(report.n_cyc, 1.0 / (1.0 - report.p_cav));
        for w in report.eta_det_by_threshold.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }
}
