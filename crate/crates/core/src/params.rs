//! Raw material/cavity inputs and every derived physical quantity.
//!
//! All rates and frequencies are stored as angular frequencies (rad/s).
//! Configuration surfaces accept plain Hz under keys suffixed `_hz` and
//! multiply by 2π on ingestion, so "2π·X" notation never hides a factor.

use serde::{Deserialize, Serialize};

use crate::constants::{REDUCED_PLANCK, SPEED_OF_LIGHT, TWO_PI, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};

/// Cavity geometry and quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    /// Resonance wavelength λ, m.
    pub wavelength: f64,
    /// Refractive index n of the host crystal.
    pub refractive_index: f64,
    /// Quality factor Q.
    pub quality_factor: f64,
    /// Mode volume V, m³. Defaults to (λ/n)³ when absent.
    pub mode_volume: Option<f64>,
}

impl CavitySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidInput(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        if !(self.refractive_index >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "refractive_index must be >= 1, got {}",
                self.refractive_index
            )));
        }
        if !(self.quality_factor > 0.0) {
            return Err(Error::InvalidInput(format!(
                "quality_factor must be positive, got {}",
                self.quality_factor
            )));
        }
        if let Some(v) = self.mode_volume {
            if !(v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "mode_volume must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Mode volume, defaulting to a cubic wavelength in the medium, (λ/n)³.
    pub fn mode_volume(&self) -> f64 {
        self.mode_volume
            .unwrap_or_else(|| (self.wavelength / self.refractive_index).powi(3))
    }
}

/// Optical properties of the single ion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonSpec {
    /// Transition dipole moment μ, C·m.
    pub dipole_moment: f64,
    /// Optical dephasing rate γ = 1/T₂, rad/s.
    pub optical_dephasing_rate: f64,
    /// Detuning Δ of the off-state transition from the cavity, rad/s.
    pub detuning_offstate: f64,
    /// g̃²/g², relative strength of the off-state transition.
    pub coupling_ratio_sq: f64,
    /// Branching ratio β of free-space emission into the readout transition.
    pub branching_ratio: f64,
}

impl IonSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dipole_moment > 0.0) {
            return Err(Error::InvalidInput("dipole_moment must be positive".into()));
        }
        if self.optical_dephasing_rate < 0.0 {
            return Err(Error::InvalidInput(
                "optical_dephasing_rate must be non-negative".into(),
            ));
        }
        if !(self.coupling_ratio_sq > 0.0 && self.coupling_ratio_sq <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "coupling_ratio_sq must be in (0, 1], got {}",
                self.coupling_ratio_sq
            )));
        }
        if !(self.branching_ratio > 0.0 && self.branching_ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "branching_ratio must be in (0, 1), got {}",
                self.branching_ratio
            )));
        }
        Ok(())
    }
}

/// Ground-state spin properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSpec {
    /// Spin dephasing rate γ_gs, rad/s.
    pub spin_dephasing_rate: f64,
    /// Spin lifetime T₁, s.
    pub spin_lifetime: f64,
}

impl SpinSpec {
    pub fn validate(&self) -> Result<()> {
        if self.spin_dephasing_rate < 0.0 {
            return Err(Error::InvalidInput(
                "spin_dephasing_rate must be non-negative".into(),
            ));
        }
        if !(self.spin_lifetime > 0.0) {
            return Err(Error::InvalidInput("spin_lifetime must be positive".into()));
        }
        Ok(())
    }
}

/// Every secondary quantity derived from the raw inputs.
///
/// `cavity_linewidth` is the HWHM, κ = ω_c/(2Q), not the FWHM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// ω_c = 2πc/λ, rad/s.
    pub cavity_angular_frequency: f64,
    /// Single-photon field E = sqrt(ħω_c/2ε₀V), V/m.
    pub single_photon_field: f64,
    /// κ = ω_c/(2Q) (HWHM), rad/s.
    pub cavity_linewidth: f64,
    /// g = μE/(2ħ), rad/s.
    pub coupling_rate: f64,
    /// C = g²/(κγ).
    pub cooperativity: f64,
    /// F_P = (3/4π²)(λ/n)³(Q/V).
    pub purcell_factor: f64,
    /// Provenance and discrepancy notes.
    pub notes: Vec<String>,
}

/// ω_c = 2πc/λ.
pub fn cavity_angular_frequency(spec: &CavitySpec) -> Result<f64> {
    if !(spec.wavelength > 0.0) {
        return Err(Error::InvalidInput(format!(
            "wavelength must be positive, got {}",
            spec.wavelength
        )));
    }
    Ok(TWO_PI * SPEED_OF_LIGHT / spec.wavelength)
}

/// Single-photon electric field E = sqrt(ħω_c/(2ε₀V)), V/m.
pub fn single_photon_field(spec: &CavitySpec) -> Result<f64> {
    let v = spec.mode_volume();
    if !(v > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mode_volume must be positive, got {v}"
        )));
    }
    let omega_c = cavity_angular_frequency(spec)?;
    Ok((REDUCED_PLANCK * omega_c / (2.0 * VACUUM_PERMITTIVITY * v)).sqrt())
}

/// Cavity HWHM linewidth κ = ω_c/(2Q).
pub fn cavity_linewidth(spec: &CavitySpec) -> Result<f64> {
    if !(spec.quality_factor > 0.0) {
        return Err(Error::InvalidInput(format!(
            "quality_factor must be positive, got {}",
            spec.quality_factor
        )));
    }
    Ok(cavity_angular_frequency(spec)? / (2.0 * spec.quality_factor))
}

/// Single-photon coupling g = μE/(2ħ).
pub fn coupling_rate(ion: &IonSpec, field: f64) -> Result<f64> {
    if !(ion.dipole_moment > 0.0) {
        return Err(Error::InvalidInput("dipole_moment must be positive".into()));
    }
    Ok(ion.dipole_moment * field / (2.0 * REDUCED_PLANCK))
}

/// Single-ion cooperativity C = g²/(κγ).
pub fn cooperativity(g: f64, kappa: f64, gamma: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cavity linewidth must be positive, got {kappa}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "optical dephasing rate must be positive, got {gamma}"
        )));
    }
    Ok(g * g / (kappa * gamma))
}

/// Purcell factor F_P = (3/4π²)(λ/n)³(Q/V).
pub fn purcell_factor(spec: &CavitySpec) -> Result<f64> {
    let v = spec.mode_volume();
    if !(v > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mode_volume must be positive, got {v}"
        )));
    }
    let lam_over_n_cubed = (spec.wavelength / spec.refractive_index).powi(3);
    Ok(3.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI)
        * lam_over_n_cubed
        * spec.quality_factor
        / v)
}

impl DerivedParams {
    /// Derive everything from the raw specs.
    ///
    /// When a preset quotes a cooperativity that disagrees with the
    /// computed g²/(κγ) by more than 10%, a discrepancy note is appended;
    /// the quoted value is never used in computation.
    pub fn derive(
        cavity: &CavitySpec,
        ion: &IonSpec,
        quoted_cooperativity: Option<f64>,
    ) -> Result<Self> {
        cavity.validate()?;
        ion.validate()?;
        let omega_c = cavity_angular_frequency(cavity)?;
        let field = single_photon_field(cavity)?;
        let kappa = cavity_linewidth(cavity)?;
        let g = coupling_rate(ion, field)?;
        let c = cooperativity(g, kappa, ion.optical_dephasing_rate)?;
        let f_p = purcell_factor(cavity)?;
        let mut notes = vec![format!(
            "kappa is the HWHM convention omega_c/(2Q); C computed as g^2/(kappa*gamma) = {c:.4}"
        )];
        if let Some(quoted) = quoted_cooperativity {
            let rel = ((c - quoted) / quoted).abs();
            if rel > 0.10 {
                notes.push(format!(
                    "quoted cooperativity {quoted} disagrees with computed {c:.4} \
                     (relative difference {:.1}%); computed value used throughout",
                    rel * 100.0
                ));
            }
        }
        Ok(Self {
            cavity_angular_frequency: omega_c,
            single_photon_field: field,
            cavity_linewidth: kappa,
            coupling_rate: g,
            cooperativity: c,
            purcell_factor: f_p,
            notes,
        })
    }
}

/// The scalar parameters the reflection/dynamics/protocol pipeline needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Resonant-transition coupling g, rad/s.
    pub coupling_rate: f64,
    /// Off-state transition coupling g̃, rad/s.
    pub coupling_rate_offstate: f64,
    /// Cavity HWHM linewidth κ, rad/s.
    pub cavity_linewidth: f64,
    /// Optical dephasing rate γ, rad/s.
    pub optical_dephasing_rate: f64,
    /// Off-state detuning Δ, rad/s.
    pub detuning_offstate: f64,
}

impl SystemParams {
    pub fn new(derived: &DerivedParams, ion: &IonSpec) -> Self {
        Self {
            coupling_rate: derived.coupling_rate,
            coupling_rate_offstate: derived.coupling_rate * ion.coupling_ratio_sq.sqrt(),
            cavity_linewidth: derived.cavity_linewidth,
            optical_dephasing_rate: ion.optical_dephasing_rate,
            detuning_offstate: ion.detuning_offstate,
        }
    }

    pub fn cooperativity(&self) -> f64 {
        self.coupling_rate * self.coupling_rate
            / (self.cavity_linewidth * self.optical_dephasing_rate)
    }
}

/// Named parameter sets for the Nd:YVO₄ implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Demonstrated cavity: Q = 20,000, γ_gs = 2π·340 Hz.
    NdYvo4Demonstrated,
    /// Demonstrated cavity at sub-kelvin temperature: γ_gs = 2π·34 Hz.
    NdYvo4Subkelvin,
    /// Theoretically possible cavity: Q = 300,000, γ_gs = 2π·34 Hz.
    NdYvo4TheoreticalQ,
}

pub const PRESET_NAMES: [&str; 3] = [
    "nd_yvo4_demonstrated",
    "nd_yvo4_subkelvin",
    "nd_yvo4_theoretical_q",
];

impl Preset {
    pub fn all() -> [Preset; 3] {
        [
            Preset::NdYvo4Demonstrated,
            Preset::NdYvo4Subkelvin,
            Preset::NdYvo4TheoreticalQ,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::NdYvo4Demonstrated => "nd_yvo4_demonstrated",
            Preset::NdYvo4Subkelvin => "nd_yvo4_subkelvin",
            Preset::NdYvo4TheoreticalQ => "nd_yvo4_theoretical_q",
        }
    }

    pub fn from_name(name: &str) -> Result<Preset> {
        match name {
            "nd_yvo4_demonstrated" => Ok(Preset::NdYvo4Demonstrated),
            "nd_yvo4_subkelvin" => Ok(Preset::NdYvo4Subkelvin),
            "nd_yvo4_theoretical_q" => Ok(Preset::NdYvo4TheoreticalQ),
            other => Err(Error::UnknownPreset {
                name: other.to_string(),
                options: PRESET_NAMES.to_vec(),
            }),
        }
    }
}

/// A preset's raw specs plus the annotations quoted alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetData {
    pub name: &'static str,
    pub cavity: CavitySpec,
    pub ion: IonSpec,
    pub spin: SpinSpec,
    /// Quoted-but-unreproducible cooperativity, kept only as an annotation.
    pub quoted_cooperativity: Option<f64>,
}

impl PresetData {
    pub fn derived(&self) -> Result<DerivedParams> {
        DerivedParams::derive(&self.cavity, &self.ion, self.quoted_cooperativity)
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        Ok(SystemParams::new(&self.derived()?, &self.ion))
    }
}

/// Look up one of the built-in Nd:YVO₄ parameter sets by name.
pub fn load_preset(name: &str) -> Result<PresetData> {
    let preset = Preset::from_name(name)?;
    Ok(preset_data(preset))
}

/// The Nd:YVO₄ parameter sets.
pub fn preset_data(preset: Preset) -> PresetData {
    let cavity_demonstrated = CavitySpec {
        wavelength: 879.7e-9,
        refractive_index: 2.2,
        quality_factor: 20_000.0,
        mode_volume: None,
    };
    let ion = IonSpec {
        dipole_moment: 9.1e-32,
        optical_dephasing_rate: TWO_PI * 5.9e3,
        detuning_offstate: TWO_PI * 30.0e9,
        coupling_ratio_sq: 1.0,
        branching_ratio: 0.104,
    };
    match preset {
        Preset::NdYvo4Demonstrated => PresetData {
            name: preset.name(),
            cavity: cavity_demonstrated,
            ion,
            spin: SpinSpec {
                spin_dephasing_rate: TWO_PI * 340.0,
                spin_lifetime: 0.1,
            },
            quoted_cooperativity: Some(246.0),
        },
        Preset::NdYvo4Subkelvin => PresetData {
            name: preset.name(),
            cavity: cavity_demonstrated,
            ion,
            spin: SpinSpec {
                spin_dephasing_rate: TWO_PI * 34.0,
                spin_lifetime: 0.1,
            },
            quoted_cooperativity: Some(246.0),
        },
        Preset::NdYvo4TheoreticalQ => PresetData {
            name: preset.name(),
            cavity: CavitySpec {
                quality_factor: 300_000.0,
                ..cavity_demonstrated
            },
            ion,
            spin: SpinSpec {
                spin_dephasing_rate: TWO_PI * 34.0,
                spin_lifetime: 0.1,
            },
            quoted_cooperativity: Some(7392.0),
        },
    }
}
