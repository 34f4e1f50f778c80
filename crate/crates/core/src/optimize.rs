//! Fidelity-optimal pulse duration: the bandwidth loss falls as 1/T_p
//! while the dephasing loss grows as T_p, so the closed-form fidelity has
//! a single interior maximum. Both the analytic stationary point and a
//! derivative-free golden-section search are provided, plus the scan used
//! to plot fidelity against pulse duration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::protocol::{fidelity_closed_form, DephasingPolicy, ProtocolErrors};

/// How an optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeMethod {
    ClosedForm,
    GoldenSection,
}

/// A located fidelity maximum over pulse duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    /// T_p*, s.
    pub t_p_star: f64,
    pub fidelity_star: f64,
    pub method: OptimizeMethod,
    /// Bracket the search ran over (for the closed form, the default
    /// search bracket it implies).
    pub bracket: (f64, f64),
}

/// Coefficient A with bandwidth loss = A/T_p.
fn bandwidth_coefficient(params: &SystemParams) -> f64 {
    params.cavity_linewidth * std::f64::consts::LN_2.sqrt()
        / (2.0 * std::f64::consts::PI * params.coupling_rate * params.coupling_rate)
}

/// Analytic stationary point of the closed-form fidelity: the bandwidth
/// term A/T_p and the dephasing term (α·γ_gs/4)·T_p balance at
/// T_p* = sqrt(4A/(α·γ_gs)).
pub fn optimal_pulse_duration_closed_form(
    params: &SystemParams,
    policy: &DephasingPolicy,
    errors: &ProtocolErrors,
    eta_det: f64,
) -> Result<Optimum> {
    policy.validate()?;
    if policy.spin_dephasing_rate == 0.0 {
        return Err(Error::UnboundedOptimum(
            "with zero spin dephasing the fidelity increases monotonically with pulse \
             duration and has no interior maximum"
                .into(),
        ));
    }
    let a = bandwidth_coefficient(params);
    let t_star = (4.0 * a
        / (policy.superposition_time_multiplier * policy.spin_dephasing_rate))
        .sqrt();
    let fidelity = fidelity_closed_form(params, policy, errors, eta_det, t_star)?;
    Ok(Optimum {
        t_p_star: t_star,
        fidelity_star: fidelity,
        method: OptimizeMethod::ClosedForm,
        bracket: default_bracket(t_star),
    })
}

/// Default search bracket around a closed-form optimum.
pub fn default_bracket(t_star: f64) -> (f64, f64) {
    (0.1 * t_star, 10.0 * t_star)
}

const GOLDEN_RATIO_CONJUGATE: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of the closed-form fidelity over pulse
/// duration, to relative tolerance 10⁻⁴ in T_p. The bracket is sampled
/// first; a non-unimodal profile is rejected with a diagnostic.
pub fn maximize_fidelity(
    params: &SystemParams,
    policy: &DephasingPolicy,
    errors: &ProtocolErrors,
    eta_det: f64,
    bracket: Option<(f64, f64)>,
) -> Result<Optimum> {
    let closed = optimal_pulse_duration_closed_form(params, policy, errors, eta_det)?;
    let (lo, hi) = bracket.unwrap_or_else(|| default_bracket(closed.t_p_star));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!(
            "invalid bracket [{lo}, {hi}]"
        )));
    }
    if lo > closed.t_p_star / 4.0 || hi < closed.t_p_star * 4.0 {
        return Err(Error::InvalidInput(format!(
            "bracket [{lo}, {hi}] must span the closed-form optimum {} by at least 4x \
             on each side",
            closed.t_p_star
        )));
    }
    let f = |t: f64| fidelity_closed_form(params, policy, errors, eta_det, t);

    // unimodality check on a log-spaced sample: values must rise then fall
    let n_sample = 33;
    let ratio = (hi / lo).powf(1.0 / (n_sample - 1) as f64);
    let mut values = Vec::with_capacity(n_sample);
    for i in 0..n_sample {
        values.push(f(lo * ratio.powi(i as i32))?);
    }
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let rising_ok = values[..=peak].windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let falling_ok = values[peak..].windows(2).all(|w| w[1] <= w[0] + 1e-12);
    if !rising_ok || !falling_ok {
        return Err(Error::NonUnimodal(
            "sampled fidelity profile over the bracket is not unimodal".into(),
        ));
    }

    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN_RATIO_CONJUGATE * (b - a);
    let mut d = a + GOLDEN_RATIO_CONJUGATE * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > 1e-4 * 0.5 * (a + b) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN_RATIO_CONJUGATE * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN_RATIO_CONJUGATE * (b - a);
            fd = f(d)?;
        }
    }
    let t_star = 0.5 * (a + b);
    Ok(Optimum {
        t_p_star: t_star,
        fidelity_star: f(t_star)?,
        method: OptimizeMethod::GoldenSection,
        bracket: (lo, hi),
    })
}

/// One point of a fidelity scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// Pulse duration, s.
    pub t_p: f64,
    pub fidelity: f64,
}

/// Pointwise closed-form fidelity over a positive increasing grid.
pub fn fidelity_scan(
    params: &SystemParams,
    policy: &DephasingPolicy,
    errors: &ProtocolErrors,
    eta_det: f64,
    t_p_grid: &[f64],
) -> Result<Vec<ScanPoint>> {
    if t_p_grid.is_empty() {
        return Err(Error::InvalidInput("empty pulse-duration grid".into()));
    }
    for w in t_p_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidInput(format!(
                "pulse-duration grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    if !(t_p_grid[0] > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pulse durations must be positive, got {}",
            t_p_grid[0]
        )));
    }
    t_p_grid
        .iter()
        .map(|&t_p| {
            Ok(ScanPoint {
                t_p,
                fidelity: fidelity_closed_form(params, policy, errors, eta_det, t_p)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::load_preset;
    use approx::assert_relative_eq;

    fn setup(preset: &str) -> (SystemParams, DephasingPolicy) {
        let d = load_preset(preset).unwrap();
        (
            d.system_params().unwrap(),
            DephasingPolicy::new(d.spin.spin_dephasing_rate),
        )
    }

    #[test]
    fn closed_form_optimum_demonstrated() {
        let (p, policy) = setup("nd_yvo4_demonstrated");
        let opt =
            optimal_pulse_duration_closed_form(&p, &policy, &ProtocolErrors::default(), 0.9875)
                .unwrap();
        assert_relative_eq!(opt.t_p_star, 13.4e-6, max_relative = 2e-2);
        assert!((opt.fidelity_star - 0.933).abs() < 0.005);
    }

    #[test]
    fn closed_form_optimum_theoretical_q() {
        let (p, policy) = setup("nd_yvo4_theoretical_q");
        let opt =
            optimal_pulse_duration_closed_form(&p, &policy, &ProtocolErrors::default(), 0.999)
                .unwrap();
        assert_relative_eq!(opt.t_p_star, 11e-6, max_relative = 5e-2);
    }

    #[test]
    fn optimum_square_root_scaling() {
        let (p, policy) = setup("nd_yvo4_demonstrated");
        let errors = ProtocolErrors::default();
        let base = optimal_pulse_duration_closed_form(&p, &policy, &errors, 0.99).unwrap();
        let quadrupled = DephasingPolicy {
            spin_dephasing_rate: 4.0 * policy.spin_dephasing_rate,
            ..policy
        };
        let scaled = optimal_pulse_duration_closed_form(&p, &quadrupled, &errors, 0.99).unwrap();
        assert_relative_eq!(scaled.t_p_star, base.t_p_star / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_dephasing_is_unbounded() {
        let (p, _) = setup("nd_yvo4_demonstrated");
        let policy = DephasingPolicy::new(0.0);
        assert!(matches!(
            optimal_pulse_duration_closed_form(&p, &policy, &ProtocolErrors::default(), 0.99),
            Err(Error::UnboundedOptimum(_))
        ));
    }

    #[test]
    fn losses_balance_at_optimum() {
        for preset in [
            "nd_yvo4_demonstrated",
            "nd_yvo4_subkelvin",
            "nd_yvo4_theoretical_q",
        ] {
            let (p, policy) = setup(preset);
            let opt =
                optimal_pulse_duration_closed_form(&p, &policy, &ProtocolErrors::default(), 0.99)
                    .unwrap();
            let bandwidth = bandwidth_coefficient(&p) / opt.t_p_star;
            let dephasing = 0.25
                * policy.spin_dephasing_rate
                * policy.superposition_time(opt.t_p_star);
            assert!(
                (bandwidth - dephasing).abs() < 1e-9,
                "{preset}: bandwidth = {bandwidth}, dephasing = {dephasing}"
            );
        }
    }

    #[test]
    fn golden_section_agrees_with_closed_form() {
        for preset in [
            "nd_yvo4_demonstrated",
            "nd_yvo4_subkelvin",
            "nd_yvo4_theoretical_q",
        ] {
            let (p, policy) = setup(preset);
            let errors = ProtocolErrors::default();
            let closed =
                optimal_pulse_duration_closed_form(&p, &policy, &errors, 0.99).unwrap();
            let searched = maximize_fidelity(&p, &policy, &errors, 0.99, None).unwrap();
            assert!(
                ((searched.t_p_star - closed.t_p_star) / closed.t_p_star).abs() < 1e-3,
                "{preset}: golden {} vs closed {}",
                searched.t_p_star,
                closed.t_p_star
            );
            assert!(searched.fidelity_star >= closed.fidelity_star - 1e-9);
        }
    }

    #[test]
    fn quoted_maximum_fidelities() {
        let cases = [
            ("nd_yvo4_demonstrated", 0.9875, 0.934, 0.005),
            ("nd_yvo4_subkelvin", 0.9875, 0.953, 0.005),
            ("nd_yvo4_theoretical_q", 0.9992, 0.995, 0.003),
        ];
        for (preset, eta, expected, tol) in cases {
            let (p, policy) = setup(preset);
            let opt =
                maximize_fidelity(&p, &policy, &ProtocolErrors::default(), eta, None).unwrap();
            assert!(
                (opt.fidelity_star - expected).abs() < tol,
                "{preset}: F* = {}",
                opt.fidelity_star
            );
        }
    }

    #[test]
    fn narrow_bracket_rejected() {
        let (p, policy) = setup("nd_yvo4_demonstrated");
        let closed =
            optimal_pulse_duration_closed_form(&p, &policy, &ProtocolErrors::default(), 0.99)
                .unwrap();
        let t = closed.t_p_star;
        assert!(maximize_fidelity(
            &p,
            &policy,
            &ProtocolErrors::default(),
            0.99,
            Some((0.5 * t, 2.0 * t))
        )
        .is_err());
    }

    #[test]
    fn scan_shape_and_consistency() {
        let (p, policy) = setup("nd_yvo4_demonstrated");
        let errors = ProtocolErrors::default();
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 1e-6).collect();
        let scan = fidelity_scan(&p, &policy, &errors, 0.9875, &grid).unwrap();
        let peak = scan
            .iter()
            .max_by(|a, b| a.fidelity.partial_cmp(&b.fidelity).unwrap())
            .unwrap();
        assert_relative_eq!(peak.t_p, 13e-6, max_relative = 0.1);
        let opt = maximize_fidelity(&p, &policy, &errors, 0.9875, None).unwrap();
        assert!(peak.fidelity <= opt.fidelity_star + 1e-6);
        // rises then falls
        assert!(scan[0].fidelity < peak.fidelity);
        assert!(scan.last().unwrap().fidelity < peak.fidelity);
    }

    #[test]
    fn scan_monotone_without_dephasing() {
        let (p, _) = setup("nd_yvo4_demonstrated");
        let policy = DephasingPolicy::new(0.0);
        let grid: Vec<f64> = (1..=50).map(|i| i as f64 * 1e-6).collect();
        let scan = fidelity_scan(&p, &policy, &ProtocolErrors::default(), 0.99, &grid).unwrap();
        for w in scan.windows(2) {
            assert!(w[1].fidelity > w[0].fidelity);
        }
    }

    #[test]
    fn scan_rejects_bad_grids() {
        let (p, policy) = setup("nd_yvo4_demonstrated");
        let errors = ProtocolErrors::default();
        assert!(fidelity_scan(&p, &policy, &errors, 0.99, &[]).is_err());
        assert!(fidelity_scan(&p, &policy, &errors, 0.99, &[2e-6, 1e-6]).is_err());
        assert!(fidelity_scan(&p, &policy, &errors, 0.99, &[-1e-6, 1e-6]).is_err());
    }
}
