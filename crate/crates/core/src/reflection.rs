//! Steady-state reflection of a one-sided cavity containing a single ion.
//!
//! The exact amplitude ratio in the adiabatic limit is
//!
//! ```text
//! a_out/a_in(δ) = [g² + (iδ + iΔ + γ/2)(iδ − κ)] / [g² + (iδ + iΔ + γ/2)(iδ + κ)]
//! ```
//!
//! with δ the photon detuning from the cavity, Δ the ion detuning, κ the
//! cavity HWHM and γ the optical dephasing rate. The bad-cavity partial
//! fraction expansions and the on-resonance/pulse-averaged closed forms
//! below are first-order approximations of this expression.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian pulse convention used when converting a duration HWHM `T_p`
/// into a spectral width: the *field amplitude* envelope has HWHM `T_p`,
/// i.e. time sigma σ_t = T_p/√(2 ln 2) and spectral intensity density
/// ∝ exp(−σ_t²δ²). Calibrated so the spectral average of the exact
/// amplitude tracks the closed-form pulse-averaged factor.
pub const GAUSSIAN_TIME_SIGMA_FACTOR: f64 = 0.849_321_800_288_019_3; // 1/sqrt(2 ln 2)

/// Complex reflection amplitude at a given detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionAmplitude {
    /// Photon detuning δ from the cavity, rad/s.
    pub detuning: f64,
    /// a_out/a_in.
    pub value: Complex64,
}

/// Classification of a spectral feature in the reflection spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLabel {
    CavityDip,
    AtomicPeak,
    Fano,
}

/// One pole of the partial-fraction expansion of the reflection amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeature {
    /// Feature center, rad/s.
    pub center: f64,
    /// Half width at half maximum, rad/s.
    pub hwhm: f64,
    /// Complex pole amplitude; the feature contributes
    /// amplitude / (δ − center − i·hwhm) to a_out/a_in.
    pub amplitude: Complex64,
    pub label: FeatureLabel,
}

/// A two-pole expansion together with a regime flag.
///
/// `broad` and `narrow` carry the first-order center/width/amplitude
/// summaries; `poles` and `residues` hold the exact two-pole
/// decomposition of the same rational function (ordered broad, narrow),
/// which is what [`FeaturePair::reconstruct`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturePair {
    pub broad: SpectralFeature,
    pub narrow: SpectralFeature,
    /// Exact pole locations in the complex δ plane, [broad, narrow].
    pub poles: [Complex64; 2],
    /// Exact residues at those poles.
    pub residues: [Complex64; 2],
    /// Set when the expansion was requested outside its clean regime
    /// (κ ≤ 3g resonant, or Δ ≤ 10γ / κ,Δ ≤ 3g̃ detuned).
    pub regime_warning: bool,
}

impl FeaturePair {
    /// Evaluate 1 + Σ residue/(δ − pole) using the exact decomposition.
    pub fn reconstruct(&self, delta: f64) -> Complex64 {
        let mut out = Complex64::new(1.0, 0.0);
        for (pole, residue) in self.poles.iter().zip(&self.residues) {
            out += residue / (Complex64::new(delta, 0.0) - pole);
        }
        out
    }
}

/// Exact partial fractions of the reflection amplitude. With
/// A = γ/2 + iΔ the amplitude is
///
/// ```text
/// r(δ) = 1 + 2κ(iδ + A) / (δ² − iδ(A + κ) − (g² + Aκ))
/// ```
///
/// whose quadratic denominator yields two poles; the residues follow
/// directly. Returned ordered (broad, narrow) by |Im pole|.
fn exact_two_pole(
    g_eff: f64,
    kappa: f64,
    gamma: f64,
    ion_detuning: f64,
) -> ([Complex64; 2], [Complex64; 2]) {
    let a = Complex64::new(gamma / 2.0, ion_detuning);
    let i = Complex64::new(0.0, 1.0);
    let sum = i * (a + kappa); // pole sum
    let prod = -(Complex64::new(g_eff * g_eff, 0.0) + a * kappa); // pole product
    let disc = (0.5 * sum).powu(2) - prod;
    let root = disc.sqrt();
    let p1 = 0.5 * sum + root;
    let p2 = 0.5 * sum - root;
    let (broad, narrow) = if p1.im.abs() >= p2.im.abs() {
        (p1, p2)
    } else {
        (p2, p1)
    };
    let res = |p: Complex64, other: Complex64| 2.0 * kappa * (i * p + a) / (p - other);
    ([broad, narrow], [res(broad, narrow), res(narrow, broad)])
}

/// Exact steady-state reflection amplitude a_out/a_in.
///
/// Pass `g_eff = g` for the resonant ion state and `g_eff = g̃` for the
/// far-detuned off state.
pub fn reflection_coefficient(
    delta: f64,
    ion_detuning: f64,
    g_eff: f64,
    kappa: f64,
    gamma: f64,
) -> Result<Complex64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cavity linewidth must be positive, got {kappa}"
        )));
    }
    if gamma < 0.0 {
        return Err(Error::InvalidInput(format!(
            "dephasing rate must be non-negative, got {gamma}"
        )));
    }
    let atom = Complex64::new(gamma / 2.0, delta + ion_detuning);
    let g2 = Complex64::new(g_eff * g_eff, 0.0);
    let num = g2 + atom * Complex64::new(-kappa, delta);
    let den = g2 + atom * Complex64::new(kappa, delta);
    Ok(num / den)
}

/// Bad-cavity partial fractions for the resonant ion (Δ = 0):
/// a broad cavity dip of HWHM κ − g²/κ and a narrow atomic feature of
/// HWHM g²/κ + γ/2, both centered at δ = 0.
pub fn resonant_partial_fractions(g: f64, kappa: f64, gamma: f64) -> Result<FeaturePair> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cavity linewidth must be positive, got {kappa}"
        )));
    }
    if kappa <= g {
        return Err(Error::RegimeViolation(format!(
            "bad-cavity expansion needs kappa > g (got kappa = {kappa}, g = {g})"
        )));
    }
    let g2_over_kappa = g * g / kappa;
    let broad = SpectralFeature {
        center: 0.0,
        hwhm: kappa - g2_over_kappa,
        amplitude: Complex64::new(0.0, 2.0 * kappa * (1.0 - (g / kappa).powi(2))),
        label: FeatureLabel::CavityDip,
    };
    let narrow = SpectralFeature {
        center: 0.0,
        hwhm: g2_over_kappa + gamma / 2.0,
        amplitude: Complex64::new(0.0, -2.0 * g2_over_kappa),
        label: FeatureLabel::AtomicPeak,
    };
    let (poles, residues) = exact_two_pole(g, kappa, gamma, 0.0);
    Ok(FeaturePair {
        broad,
        narrow,
        poles,
        residues,
        regime_warning: kappa <= 3.0 * g,
    })
}

/// Bad-cavity partial fractions for the far-detuned ion: a cavity dip
/// shifted to Δg̃²/(Δ²+κ²) and a Fano feature at −Δ(1 + g̃²/(Δ²+κ²)).
pub fn detuned_partial_fractions(
    g_tilde: f64,
    kappa: f64,
    gamma: f64,
    ion_detuning: f64,
) -> Result<FeaturePair> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cavity linewidth must be positive, got {kappa}"
        )));
    }
    if kappa <= g_tilde || ion_detuning.abs() <= g_tilde {
        return Err(Error::RegimeViolation(format!(
            "detuned expansion needs kappa, |Delta| > g_tilde \
             (got kappa = {kappa}, Delta = {ion_detuning}, g_tilde = {g_tilde})"
        )));
    }
    let delta2_kappa2 = ion_detuning * ion_detuning + kappa * kappa;
    let frac = g_tilde * g_tilde / delta2_kappa2;
    // g̃²/(Δ+iκ)² as a complex correction to the pole amplitudes
    let pole = Complex64::new(ion_detuning, kappa);
    let complex_frac = Complex64::new(g_tilde * g_tilde, 0.0) / (pole * pole);
    let two_i_kappa = Complex64::new(0.0, 2.0 * kappa);
    let broad = SpectralFeature {
        center: ion_detuning * frac,
        hwhm: kappa * (1.0 - frac),
        amplitude: two_i_kappa * (Complex64::new(1.0, 0.0) - complex_frac),
        label: FeatureLabel::CavityDip,
    };
    let narrow = SpectralFeature {
        center: -ion_detuning * (1.0 + frac),
        hwhm: gamma / 2.0 + kappa * frac,
        amplitude: two_i_kappa * complex_frac,
        label: FeatureLabel::Fano,
    };
    let clean = ion_detuning.abs() > 10.0 * gamma
        && kappa > 3.0 * g_tilde
        && ion_detuning.abs() > 3.0 * g_tilde;
    let (poles, residues) = exact_two_pole(g_tilde, kappa, gamma, ion_detuning);
    Ok(FeaturePair {
        broad,
        narrow,
        poles,
        residues,
        regime_warning: !clean,
    })
}

/// On-resonance amplitude for the resonant ion, first order in 1/C:
/// 1 − κγ/g².
pub fn on_resonance_resonant(g: f64, kappa: f64, gamma: f64) -> Result<f64> {
    let c = g * g / (kappa * gamma);
    if !(c > 1.0) {
        return Err(Error::RegimeViolation(format!(
            "closed form needs cooperativity > 1, got C = {c}"
        )));
    }
    Ok(1.0 - kappa * gamma / (g * g))
}

/// On-resonance amplitude for the far-detuned ion: −1 − 2i g̃²/(κΔ).
pub fn on_resonance_detuned(g_tilde: f64, kappa: f64, ion_detuning: f64) -> Result<Complex64> {
    if ion_detuning == 0.0 {
        return Err(Error::InvalidInput(
            "ion detuning must be non-zero for the detuned closed form; \
             use on_resonance_resonant instead"
                .into(),
        ));
    }
    Ok(Complex64::new(
        -1.0,
        -2.0 * g_tilde * g_tilde / (kappa * ion_detuning),
    ))
}

/// Pulse-averaged on-resonance amplitude for a Gaussian pulse of duration
/// HWHM `t_p`: (1 − κγ/g²)·exp(−κ√(ln 2)/(π T_p g²)).
pub fn pulse_averaged_resonant(g: f64, kappa: f64, gamma: f64, t_p: f64) -> Result<f64> {
    if !(t_p > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pulse duration must be positive, got {t_p}"
        )));
    }
    let flat = on_resonance_resonant(g, kappa, gamma)?;
    let exponent = kappa * std::f64::consts::LN_2.sqrt() / (std::f64::consts::PI * t_p * g * g);
    Ok(flat * (-exponent).exp())
}

/// Uniformly sample the exact reflection amplitude over a detuning range.
pub fn spectrum_sweep(
    ion_detuning: f64,
    g_eff: f64,
    kappa: f64,
    gamma: f64,
    delta_range: (f64, f64),
    n_points: usize,
) -> Result<Vec<ReflectionAmplitude>> {
    if n_points < 2 {
        return Err(Error::InvalidInput(format!(
            "sweep needs at least 2 points, got {n_points}"
        )));
    }
    let (lo, hi) = delta_range;
    if !(hi > lo) {
        return Err(Error::InvalidInput(format!(
            "empty detuning range [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    (0..n_points)
        .map(|i| {
            let delta = lo + step * i as f64;
            Ok(ReflectionAmplitude {
                detuning: delta,
                value: reflection_coefficient(delta, ion_detuning, g_eff, kappa, gamma)?,
            })
        })
        .collect()
}
