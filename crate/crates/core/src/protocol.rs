//! The non-destructive detection protocol as a pipeline of channels on
//! the ion's 2×2 density matrix (basis {|0⟩_a, |1⟩_a}), conditioned on a
//! photon being present in the time bin:
//!
//! 1. imperfect π/2 preparation rotation,
//! 2. spin dephasing while the superposition is held,
//! 3. state-conditional reflection of the photon,
//! 4. imperfect π/2 readout rotation,
//!
//! followed by exact and closed-form fidelity evaluation. The state is
//! kept unnormalized: the trace deficit accumulated in step 3 is photon
//! loss, and it counts against the fidelity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::reflection::{on_resonance_detuned, pulse_averaged_resonant};

const FRAC_PI_4: f64 = std::f64::consts::FRAC_PI_4;

/// Angle errors of the two π/2 rotations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProtocolErrors {
    /// φ_P, rad: the preparation rotation is through π/2 + φ_P.
    pub prep_angle_error: f64,
    /// φ_R, rad: the readout rotation is through π/2 + φ_R.
    pub readout_angle_error: f64,
}

impl ProtocolErrors {
    pub fn validate(&self) -> Result<()> {
        for (name, phi) in [
            ("prep_angle_error", self.prep_angle_error),
            ("readout_angle_error", self.readout_angle_error),
        ] {
            if !(phi.abs() < FRAC_PI_4) {
                return Err(Error::InvalidInput(format!(
                    "{name} must satisfy |phi| < pi/4 (small-angle regime), got {phi}"
                )));
            }
        }
        Ok(())
    }
}

/// How long the superposition is exposed to ground-state dephasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingPolicy {
    /// γ_gs, rad/s.
    pub spin_dephasing_rate: f64,
    /// α, with T_sp = α·T_p. Must be ≥ 1: the superposition is held at
    /// least as long as the time-bin photon.
    pub superposition_time_multiplier: f64,
}

impl DephasingPolicy {
    pub const DEFAULT_MULTIPLIER: f64 = 2.0;

    pub fn new(spin_dephasing_rate: f64) -> Self {
        Self {
            spin_dephasing_rate,
            superposition_time_multiplier: Self::DEFAULT_MULTIPLIER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spin_dephasing_rate < 0.0 {
            return Err(Error::InvalidInput(format!(
                "spin_dephasing_rate must be non-negative, got {}",
                self.spin_dephasing_rate
            )));
        }
        if !(self.superposition_time_multiplier >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "superposition_time_multiplier must be >= 1, got {}",
                self.superposition_time_multiplier
            )));
        }
        Ok(())
    }

    /// T_sp = α·T_p.
    pub fn superposition_time(&self, t_p: f64) -> f64 {
        self.superposition_time_multiplier * t_p
    }
}

/// Reflection amplitudes seen by the photon for the two spin states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchAmplitudes {
    /// r₀: ion resonant, photon reflects off the coupled cavity.
    pub resonant_amplitude: Complex64,
    /// r₁: ion far-detuned, photon enters the cavity and picks up π.
    pub detuned_amplitude: Complex64,
}

impl BranchAmplitudes {
    pub fn validate(&self) -> Result<()> {
        if self.resonant_amplitude.norm() > 1.0 + 1e-12 {
            return Err(Error::NumericalIntegrity(format!(
                "|r0| = {} exceeds 1",
                self.resonant_amplitude.norm()
            )));
        }
        // the closed form -1 - 2i*g^2/(kappa*Delta) overshoots unit
        // modulus by (2g^2/(kappa*Delta))^2/2, a second-order artifact;
        // the tolerance admits it for all supported parameter ranges
        if self.detuned_amplitude.norm() > 1.0 + 1e-6 {
            return Err(Error::NumericalIntegrity(format!(
                "|r1| = {} exceeds 1",
                self.detuned_amplitude.norm()
            )));
        }
        Ok(())
    }
}

/// Ion density matrix conditioned on the photon-present branch.
/// Trace ≤ 1; the deficit is the probability the photon was lost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointConditionalState {
    pub rho: [[Complex64; 2]; 2],
}

impl JointConditionalState {
    pub fn pure(amp0: Complex64, amp1: Complex64) -> Self {
        Self {
            rho: [
                [amp0 * amp0.conj(), amp0 * amp1.conj()],
                [amp1 * amp0.conj(), amp1 * amp1.conj()],
            ],
        }
    }

    pub fn trace(&self) -> f64 {
        (self.rho[0][0] + self.rho[1][1]).re
    }

    /// Largest deviation from ρ = ρ†.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d0 = self.rho[0][0].im.abs().max(self.rho[1][1].im.abs());
        let d1 = (self.rho[0][1] - self.rho[1][0].conj()).norm();
        d0.max(d1)
    }

    /// Smallest eigenvalue of the (Hermitian part of the) matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.rho[0][0].re;
        let d = self.rho[1][1].re;
        let b = 0.5 * (self.rho[0][1] + self.rho[1][0].conj());
        let half_tr = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        half_tr - rad
    }

    pub fn validate(&self) -> Result<()> {
        if self.hermiticity_deviation() > 1e-12 {
            return Err(Error::NumericalIntegrity(format!(
                "state is not Hermitian (deviation {})",
                self.hermiticity_deviation()
            )));
        }
        if self.min_eigenvalue() < -1e-10 {
            return Err(Error::NumericalIntegrity(format!(
                "state is not positive semidefinite (min eigenvalue {})",
                self.min_eigenvalue()
            )));
        }
        let tr = self.trace();
        if !(tr > 0.0 && tr <= 1.0 + 1e-9) {
            return Err(Error::NumericalIntegrity(format!(
                "trace {tr} outside (0, 1]"
            )));
        }
        Ok(())
    }

    fn conjugate_by(&self, m: [[Complex64; 2]; 2]) -> Self {
        let mut mr = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    mr[i][j] += m[i][k] * self.rho[k][j];
                }
            }
        }
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += mr[i][k] * m[j][k].conj();
                }
            }
        }
        Self { rho: out }
    }
}

/// The readout rotation at angle θ = π/2 + φ. Determinant +1; two
/// applications at θ = π/2 take |0⟩⟨0| to |1⟩⟨1|.
fn rotation_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let c = Complex64::new((0.5 * theta).cos(), 0.0);
    let s = Complex64::new((0.5 * theta).sin(), 0.0);
    [[c, -s], [s, c]]
}

/// Rotate the ion out of |1⟩_a into the (near-)equal superposition:
/// |1⟩ ↦ cos(θ/2)|0⟩ + sin(θ/2)|1⟩ with θ = π/2 + φ_P, so a positive
/// angle error under-populates |0⟩_a.
pub fn prepare_superposition(errors: &ProtocolErrors) -> Result<JointConditionalState> {
    errors.validate()?;
    let theta = std::f64::consts::FRAC_PI_2 + errors.prep_angle_error;
    let state = JointConditionalState::pure(
        Complex64::new((0.5 * theta).cos(), 0.0),
        Complex64::new((0.5 * theta).sin(), 0.0),
    );
    state.validate()?;
    Ok(state)
}

/// Pure ground-state dephasing for the hold time T_sp = α·T_p:
/// coherences decay by e^{−γ_gs·T_sp}, populations are untouched.
pub fn dephase(
    state: &JointConditionalState,
    policy: &DephasingPolicy,
    t_p: f64,
) -> Result<JointConditionalState> {
    policy.validate()?;
    if !(t_p > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pulse duration must be positive, got {t_p}"
        )));
    }
    let factor = (-policy.spin_dephasing_rate * policy.superposition_time(t_p)).exp();
    let mut rho = state.rho;
    rho[0][1] *= factor;
    rho[1][0] *= factor;
    Ok(JointConditionalState { rho })
}

/// Reflection amplitudes for the two spin branches at pulse duration T_p.
pub fn branch_amplitudes(params: &SystemParams, t_p: f64) -> Result<BranchAmplitudes> {
    let r0 = pulse_averaged_resonant(
        params.coupling_rate,
        params.cavity_linewidth,
        params.optical_dephasing_rate,
        t_p,
    )?;
    let r1 = on_resonance_detuned(
        params.coupling_rate_offstate,
        params.cavity_linewidth,
        params.detuning_offstate,
    )?;
    let amps = BranchAmplitudes {
        resonant_amplitude: Complex64::new(r0, 0.0),
        detuned_amplitude: r1,
    };
    amps.validate()?;
    Ok(amps)
}

/// Photon-present branch of the reflection: ρ ← KρK† with
/// K = diag(r₀, r₁). The trace drops by the photon-loss probability.
pub fn apply_conditional_reflection(
    state: &JointConditionalState,
    amps: &BranchAmplitudes,
) -> Result<JointConditionalState> {
    amps.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    let k = [[amps.resonant_amplitude, zero], [zero, amps.detuned_amplitude]];
    let out = state.conjugate_by(k);
    out.validate()?;
    Ok(out)
}

/// Final (readout) rotation through π/2 + φ_R.
pub fn final_rotation(
    state: &JointConditionalState,
    errors: &ProtocolErrors,
) -> Result<JointConditionalState> {
    errors.validate()?;
    let theta = std::f64::consts::FRAC_PI_2 + errors.readout_angle_error;
    let out = state.conjugate_by(rotation_matrix(theta));
    out.validate()?;
    Ok(out)
}

/// F = η_det·√(ρ₀₀) on the unnormalized photon-present branch (the
/// photon-present arm is the worst case, and renormalizing would hide
/// reflection loss).
pub fn fidelity_exact(state: &JointConditionalState, eta_det: f64) -> Result<f64> {
    if !(eta_det > 0.0 && eta_det <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "detection efficiency must be in (0, 1], got {eta_det}"
        )));
    }
    let rho00 = state.rho[0][0].re;
    if rho00 < -1e-10 {
        return Err(Error::NumericalIntegrity(format!(
            "negative population rho00 = {rho00}"
        )));
    }
    Ok(eta_det * rho00.max(0.0).sqrt())
}

/// First-order loss budget of the closed-form fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormBreakdown {
    /// κγ/(2g²): imperfect reflection of the resonant branch.
    pub reflection_loss: f64,
    /// κ√(ln 2)/(2π T_p g²): finite pulse bandwidth.
    pub bandwidth_loss: f64,
    /// γ_gs·T_sp/4: spin dephasing over the hold time.
    pub dephasing_loss: f64,
    /// (φ_P² + φ_R²)/8: rotation angle errors.
    pub rotation_loss: f64,
    pub fidelity: f64,
    /// Set when any individual loss term reaches 0.2 and the first-order
    /// expansion is no longer trustworthy.
    pub regime_warning: bool,
}

/// Evaluate the closed-form fidelity with its loss budget.
pub fn fidelity_closed_form_breakdown(
    params: &SystemParams,
    policy: &DephasingPolicy,
    errors: &ProtocolErrors,
    eta_det: f64,
    t_p: f64,
) -> Result<ClosedFormBreakdown> {
    policy.validate()?;
    errors.validate()?;
    if !(eta_det > 0.0 && eta_det <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "detection efficiency must be in (0, 1], got {eta_det}"
        )));
    }
    if !(t_p > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pulse duration must be positive, got {t_p}"
        )));
    }
    let g2 = params.coupling_rate * params.coupling_rate;
    let reflection_loss = params.cavity_linewidth * params.optical_dephasing_rate / (2.0 * g2);
    let bandwidth_loss = params.cavity_linewidth * std::f64::consts::LN_2.sqrt()
        / (2.0 * std::f64::consts::PI * t_p * g2);
    let dephasing_loss = 0.25 * policy.spin_dephasing_rate * policy.superposition_time(t_p);
    let rotation_loss = 0.125
        * (errors.prep_angle_error * errors.prep_angle_error
            + errors.readout_angle_error * errors.readout_angle_error);
    let fidelity =
        eta_det * (1.0 - reflection_loss - bandwidth_loss - dephasing_loss - rotation_loss);
    let regime_warning = [reflection_loss, bandwidth_loss, dephasing_loss, rotation_loss]
        .iter()
        .any(|&l| l >= 0.2);
    Ok(ClosedFormBreakdown {
        reflection_loss,
        bandwidth_loss,
        dephasing_loss,
        rotation_loss,
        fidelity,
        regime_warning,
    })
}

/// Closed-form fidelity F = η_det(1 − losses).
pub fn fidelity_closed_form(
    params: &SystemParams,
    policy: &DephasingPolicy,
    errors: &ProtocolErrors,
    eta_det: f64,
    t_p: f64,
) -> Result<f64> {
    Ok(fidelity_closed_form_breakdown(params, policy, errors, eta_det, t_p)?.fidelity)
}

/// All intermediate states and both fidelities for one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    pub prepared: JointConditionalState,
    pub dephased: JointConditionalState,
    pub reflected: JointConditionalState,
    pub rotated: JointConditionalState,
    pub amplitudes: BranchAmplitudes,
    pub fidelity_exact: f64,
    pub fidelity_closed_form: f64,
    pub closed_form: ClosedFormBreakdown,
}

/// Run the full pipeline at one pulse duration.
pub fn run_protocol(
    params: &SystemParams,
    policy: &DephasingPolicy,
    errors: &ProtocolErrors,
    eta_det: f64,
    t_p: f64,
) -> Result<ProtocolRun> {
    let prepared = prepare_superposition(errors)?;
    let dephased = dephase(&prepared, policy, t_p)?;
    let amplitudes = branch_amplitudes(params, t_p)?;
    let reflected = apply_conditional_reflection(&dephased, &amplitudes)?;
    let rotated = final_rotation(&reflected, errors)?;
    let exact = fidelity_exact(&rotated, eta_det)?;
    let closed_form = fidelity_closed_form_breakdown(params, policy, errors, eta_det, t_p)?;
    Ok(ProtocolRun {
        prepared,
        dephased,
        reflected,
        rotated,
        amplitudes,
        fidelity_exact: exact,
        fidelity_closed_form: closed_form.fidelity,
        closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::load_preset;
    use approx::assert_relative_eq;

    fn no_errors() -> ProtocolErrors {
        ProtocolErrors::default()
    }

    fn ideal_amps() -> BranchAmplitudes {
        BranchAmplitudes {
            resonant_amplitude: Complex64::new(1.0, 0.0),
            detuned_amplitude: Complex64::new(-1.0, 0.0),
        }
    }

    #[test]
    fn ideal_preparation_is_equal_superposition() {
        let state = prepare_superposition(&no_errors()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(state.rho[i][j].re.abs(), 0.5, max_relative = 1e-12);
                assert_relative_eq!(state.rho[i][j].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn small_prep_error_skews_populations() {
        let errors = ProtocolErrors {
            prep_angle_error: 0.1,
            readout_angle_error: 0.0,
        };
        let state = prepare_superposition(&errors).unwrap();
        assert_relative_eq!(
            state.rho[0][0].re,
            0.5 - 0.1f64.sin() / 2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            state.rho[1][1].re,
            0.5 + 0.1f64.sin() / 2.0,
            max_relative = 1e-12
        );
        // first-order form: 1/2 - phi/2 within O(phi^3)
        assert!((state.rho[0][0].re - (0.5 - 0.05)).abs() < 1e-3);
    }

    #[test]
    fn preparation_yields_projector() {
        let errors = ProtocolErrors {
            prep_angle_error: -0.2,
            readout_angle_error: 0.0,
        };
        let state = prepare_superposition(&errors).unwrap();
        // rho^2 = rho for a rank-1 projector
        let r = state.rho;
        for i in 0..2 {
            for j in 0..2 {
                let sq = r[i][0] * r[0][j] + r[i][1] * r[1][j];
                assert!((sq - r[i][j]).norm() < 1e-12);
            }
        }
        assert_relative_eq!(state.trace(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn large_angle_errors_rejected() {
        for phi in [FRAC_PI_4, -FRAC_PI_4, 1.0] {
            let errors = ProtocolErrors {
                prep_angle_error: phi,
                readout_angle_error: 0.0,
            };
            assert!(prepare_superposition(&errors).is_err());
        }
    }

    #[test]
    fn dephasing_limits() {
        let state = prepare_superposition(&no_errors()).unwrap();
        let frozen = dephase(&state, &DephasingPolicy::new(0.0), 1.0).unwrap();
        assert_eq!(frozen, state);

        // gamma_gs * T_sp = ln 2 halves the coherences
        let policy = DephasingPolicy {
            spin_dephasing_rate: std::f64::consts::LN_2,
            superposition_time_multiplier: 1.0,
        };
        let halved = dephase(&state, &policy, 1.0).unwrap();
        assert_relative_eq!(halved.rho[0][1].re, 0.25, max_relative = 1e-12);
        assert_relative_eq!(halved.rho[0][0].re, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn dephasing_factor_demonstrated_preset() {
        let d = load_preset("nd_yvo4_demonstrated").unwrap();
        let policy = DephasingPolicy::new(d.spin.spin_dephasing_rate);
        let state = prepare_superposition(&no_errors()).unwrap();
        let out = dephase(&state, &policy, 13e-6).unwrap();
        let factor = out.rho[0][1].re / state.rho[0][1].re;
        assert_relative_eq!(factor, 0.9460, max_relative = 1e-3);
    }

    #[test]
    fn branch_amplitudes_demonstrated_preset() {
        let p = load_preset("nd_yvo4_demonstrated")
            .unwrap()
            .system_params()
            .unwrap();
        let amps = branch_amplitudes(&p, 13e-6).unwrap();
        let r0 = amps.resonant_amplitude;
        assert_relative_eq!(r0.re, 0.919, max_relative = 2e-3);
        assert_eq!(r0.im, 0.0);
        let r1 = amps.detuned_amplitude;
        assert_relative_eq!(r1.re, -1.0);
        let expected_im = -2.0 * p.coupling_rate_offstate.powi(2)
            / (p.cavity_linewidth * p.detuning_offstate);
        assert_relative_eq!(r1.im, expected_im);
        assert_relative_eq!(r1.im, -7.36e-6, max_relative = 1e-2);
    }

    #[test]
    fn detuned_branch_reflects_more_than_resonant() {
        let p = load_preset("nd_yvo4_demonstrated")
            .unwrap()
            .system_params()
            .unwrap();
        for t_p in [1e-6, 5e-6, 13e-6, 50e-6, 1e-3] {
            let amps = branch_amplitudes(&p, t_p).unwrap();
            assert!(amps.detuned_amplitude.norm() >= amps.resonant_amplitude.norm());
        }
    }

    #[test]
    fn ideal_reflection_gives_entangled_branch() {
        let state = prepare_superposition(&no_errors()).unwrap();
        let out = apply_conditional_reflection(&state, &ideal_amps()).unwrap();
        // (|0> - |1>)/sqrt(2): diagonals +1/2, off-diagonals -1/2
        assert_relative_eq!(out.rho[0][0].re, 0.5, max_relative = 1e-12);
        assert_relative_eq!(out.rho[1][1].re, 0.5, max_relative = 1e-12);
        assert_relative_eq!(out.rho[0][1].re, -0.5, max_relative = 1e-12);
        assert_relative_eq!(out.trace(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn reflection_trace_deficit() {
        let p = load_preset("nd_yvo4_demonstrated")
            .unwrap()
            .system_params()
            .unwrap();
        let amps = branch_amplitudes(&p, 13e-6).unwrap();
        let state = prepare_superposition(&no_errors()).unwrap();
        let out = apply_conditional_reflection(&state, &amps).unwrap();
        let deficit = 1.0 - out.trace();
        let expected = (1.0 - amps.resonant_amplitude.norm_sqr()) / 2.0
            + (1.0 - amps.detuned_amplitude.norm_sqr()) / 2.0;
        assert_relative_eq!(deficit, expected, max_relative = 1e-9);
        assert!(deficit < 0.09, "deficit = {deficit}");
        assert_relative_eq!(
            out.rho[0][0].re,
            amps.resonant_amplitude.norm_sqr() / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn double_rotation_is_spin_flip() {
        let state = JointConditionalState::pure(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let once = final_rotation(&state, &no_errors()).unwrap();
        let twice = final_rotation(&once, &no_errors()).unwrap();
        assert!((twice.rho[1][1].re - 1.0).abs() < 1e-12);
        assert!(twice.rho[0][0].norm() < 1e-12);
        assert!(twice.rho[0][1].norm() < 1e-12);
    }

    #[test]
    fn ideal_pipeline_concentrates_population() {
        let state = prepare_superposition(&no_errors()).unwrap();
        let reflected = apply_conditional_reflection(&state, &ideal_amps()).unwrap();
        let out = final_rotation(&reflected, &no_errors()).unwrap();
        assert_relative_eq!(out.rho[0][0].re, 1.0, max_relative = 1e-12);
        assert!(out.rho[1][1].norm() < 1e-12);
        assert_relative_eq!(fidelity_exact(&out, 1.0).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn demonstrated_fidelity_near_quoted_maximum() {
        let d = load_preset("nd_yvo4_demonstrated").unwrap();
        let p = d.system_params().unwrap();
        let policy = DephasingPolicy::new(d.spin.spin_dephasing_rate);
        let run = run_protocol(&p, &policy, &no_errors(), 0.9875, 13e-6).unwrap();
        assert!(
            (run.fidelity_exact - 0.933).abs() < 0.005,
            "F_exact = {}",
            run.fidelity_exact
        );
        assert!(
            (run.fidelity_closed_form - 0.933).abs() < 0.005,
            "F_closed = {}",
            run.fidelity_closed_form
        );
        assert!(
            (run.fidelity_exact - run.fidelity_closed_form).abs() < 0.003,
            "exact = {}, closed = {}",
            run.fidelity_exact,
            run.fidelity_closed_form
        );
    }

    #[test]
    fn closed_form_loss_budget() {
        let d = load_preset("nd_yvo4_demonstrated").unwrap();
        let p = d.system_params().unwrap();
        let policy = DephasingPolicy::new(d.spin.spin_dephasing_rate);
        let b =
            fidelity_closed_form_breakdown(&p, &policy, &no_errors(), 0.988, 13e-6).unwrap();
        assert_relative_eq!(b.reflection_loss, 0.0268, max_relative = 2e-2);
        assert_relative_eq!(b.bandwidth_loss, 0.0147, max_relative = 2e-2);
        assert_relative_eq!(b.dephasing_loss, 0.0139, max_relative = 2e-2);
        assert_eq!(b.rotation_loss, 0.0);
        assert!(!b.regime_warning);
        assert_relative_eq!(b.fidelity, 0.933, max_relative = 2e-3);
    }

    #[test]
    fn closed_form_limits() {
        let p = SystemParams {
            coupling_rate: 1.0,
            coupling_rate_offstate: 1.0,
            cavity_linewidth: 10.0,
            optical_dephasing_rate: 0.0,
            detuning_offstate: 1e6,
        };
        // no losses at all: F = eta_det (long pulse, no dephasing)
        let f = fidelity_closed_form(&p, &DephasingPolicy::new(0.0), &no_errors(), 0.9, 1e12)
            .unwrap();
        assert_relative_eq!(f, 0.9, max_relative = 1e-9);

        // rotation errors alone cost (phi_P^2 + phi_R^2)/8
        let errors = ProtocolErrors {
            prep_angle_error: 0.01 * std::f64::consts::FRAC_PI_2,
            readout_angle_error: 0.01 * std::f64::consts::FRAC_PI_2,
        };
        let f = fidelity_closed_form(&p, &DephasingPolicy::new(0.0), &errors, 1.0, 1e12).unwrap();
        assert_relative_eq!(1.0 - f, 6.2e-5, max_relative = 1e-2);
    }

    #[test]
    fn regime_warning_for_large_losses() {
        let p = SystemParams {
            coupling_rate: 1.0,
            coupling_rate_offstate: 1.0,
            cavity_linewidth: 10.0,
            optical_dephasing_rate: 0.05, // reflection loss 0.25
            detuning_offstate: 1e6,
        };
        let b = fidelity_closed_form_breakdown(
            &p,
            &DephasingPolicy::new(0.0),
            &no_errors(),
            1.0,
            1e9,
        )
        .unwrap();
        assert!(b.regime_warning);
    }

    #[test]
    fn channels_preserve_validity() {
        let errors = ProtocolErrors {
            prep_angle_error: 0.3,
            readout_angle_error: -0.2,
        };
        let policy = DephasingPolicy {
            spin_dephasing_rate: 100.0,
            superposition_time_multiplier: 3.0,
        };
        let amps = BranchAmplitudes {
            resonant_amplitude: Complex64::new(0.7, 0.1),
            detuned_amplitude: Complex64::new(-0.9, -0.05),
        };
        let mut state = prepare_superposition(&errors).unwrap();
        state = dephase(&state, &policy, 1e-3).unwrap();
        state = apply_conditional_reflection(&state, &amps).unwrap();
        state = final_rotation(&state, &errors).unwrap();
        state.validate().unwrap();
        assert!(state.trace() < 1.0);
        assert!(fidelity_exact(&state, 0.99).unwrap() <= 1.0);
    }
}
