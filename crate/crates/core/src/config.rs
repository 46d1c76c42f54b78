//! Run configuration: a TOML file with `[datum]`, `[solver]`, `[outputs]`
//! and `[verify]` sections. Unknown keys are errors, every validation
//! failure names the offending field, and the resolved configuration
//! serializes back to TOML bit-for-bit reparseable (the manifest echo).

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::BandProfile;
use crate::evolution::{Integrator, SolverConfig};
use crate::field::{FieldError, SpectralField};
use crate::norms::hs_norm;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("datum: {0}")]
    Datum(#[from] FieldError),
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datum: DatumSpec,
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumPreset {
    /// `Σₖ amplitudes[k-1]·cos(kx)`.
    Cosines,
    /// Explicit `(n, re, im)` coefficient list, Hermitian-completed.
    Modes,
    /// Seeded Hermitian Gaussian coefficients under a band profile.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandName {
    Flat,
    InverseSquare,
    HighBand,
}

impl From<BandName> for BandProfile {
    fn from(b: BandName) -> Self {
        match b {
            BandName::Flat => BandProfile::Flat,
            BandName::InverseSquare => BandProfile::InverseSquare,
            BandName::HighBand => BandProfile::HighBand,
        }
    }
}

/// Declarative initial datum, reproducible from the config alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSpec {
    pub preset: DatumPreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<(i64, f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_cap: Option<usize>,
    /// Rescale the datum to this Ḣ^{3/2} norm after construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_h32: Option<f64>,
    /// Amplitude ladder for the sweep command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_amplitudes: Option<Vec<f64>>,
}

impl DatumSpec {
    pub fn build(&self, cutoff: usize) -> Result<SpectralField, ConfigError> {
        let mut field = match self.preset {
            DatumPreset::Cosines => {
                let amplitudes = self.amplitudes.as_ref().ok_or_else(|| {
                    ConfigError::invalid("datum.amplitudes", "required for preset = \"cosines\"")
                })?;
                if amplitudes.len() > cutoff {
                    return Err(ConfigError::invalid(
                        "datum.amplitudes",
                        format!("{} cosines exceed cutoff {cutoff}", amplitudes.len()),
                    ));
                }
                let pairs: Vec<(i64, Complex64)> = amplitudes
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| (i as i64 + 1, Complex64::new(a / 2.0, 0.0)))
                    .collect();
                SpectralField::from_modes(&pairs, cutoff)?
            }
            DatumPreset::Modes => {
                let modes = self.modes.as_ref().ok_or_else(|| {
                    ConfigError::invalid("datum.modes", "required for preset = \"modes\"")
                })?;
                let pairs: Vec<(i64, Complex64)> = modes
                    .iter()
                    .map(|&(n, re, im)| (n, Complex64::new(re, im)))
                    .collect();
                SpectralField::from_modes(&pairs, cutoff)?
            }
            DatumPreset::Random => {
                let seed = self.seed.ok_or_else(|| {
                    ConfigError::invalid("datum.seed", "required for preset = \"random\"")
                })?;
                let band = self.band.unwrap_or(BandName::Flat);
                let cap = self.band_cap.unwrap_or(cutoff / 2).max(1);
                if cap > cutoff {
                    return Err(ConfigError::invalid(
                        "datum.band_cap",
                        format!("band cap {cap} exceeds cutoff {cutoff}"),
                    ));
                }
                use rand::SeedableRng;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                crate::analysis::random_field(&mut rng, cutoff, cap, band.into())
            }
        };
        if let Some(target) = self.normalize_h32 {
            if !(target >= 0.0) {
                return Err(ConfigError::invalid(
                    "datum.normalize_h32",
                    format!("must be nonnegative, got {target}"),
                ));
            }
            let current = hs_norm(&field, 1.5);
            if current == 0.0 && target > 0.0 {
                return Err(ConfigError::invalid(
                    "datum.normalize_h32",
                    "cannot rescale a zero datum to a positive norm",
                ));
            }
            if current > 0.0 {
                field = field.scalar_mul(target / current);
            }
        }
        Ok(field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_alarm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_only: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_maxit: Option<usize>,
}

impl SolverSection {
    pub fn resolve(&self) -> Result<SolverConfig, ConfigError> {
        let defaults = SolverConfig::with_cutoff(self.n.max(1));
        let config = SolverConfig {
            cutoff: self.n,
            dt: self.dt.unwrap_or(defaults.dt),
            t_final: self.t,
            integrator: self.integrator.unwrap_or(Integrator::Etdrk4),
            record_every: self.record_every.unwrap_or(1),
            blowup_threshold: self.blowup_threshold,
            tail_alarm: self.tail_alarm.unwrap_or(defaults.tail_alarm),
            linear_only: self.linear_only.unwrap_or(false),
        };
        config.validate().map_err(|e| match e {
            crate::evolution::EvolutionError::InvalidConfig { field, message } => {
                ConfigError::invalid(&format!("solver.{field}"), message)
            }
            other => ConfigError::invalid("solver", other.to_string()),
        })?;
        if let Some(tol) = self.picard_tol {
            if !(tol > 0.0) {
                return Err(ConfigError::invalid(
                    "solver.picard_tol",
                    format!("must be positive, got {tol}"),
                ));
            }
        }
        if self.picard_maxit == Some(0) {
            return Err(ConfigError::invalid("solver.picard_maxit", "must be at least 1"));
        }
        Ok(config)
    }

    pub fn picard_tol(&self) -> f64 {
        self.picard_tol.unwrap_or(1e-10)
    }

    pub fn picard_maxit(&self) -> usize {
        self.picard_maxit.unwrap_or(25)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    pub dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
}

/// Parameters for the verification suites; the defaults match the
/// desk-scale budgets the checks were designed around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl VerifySection {
    pub fn cutoff(&self) -> usize {
        self.n.unwrap_or(64)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0x1D57)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(100)
    }
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            n: None,
            seed: None,
            samples: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[datum]
preset = "cosines"
amplitudes = [0.01, 0.01]

[solver]
n = 16
dt = 1e-3
t = 0.5
"#;

    #[test]
    fn parses_and_resolves() {
        let config = RunConfig::from_toml(SMALL).unwrap();
        let solver = config.solver.resolve().unwrap();
        assert_eq!(solver.cutoff, 16);
        assert_eq!(solver.dt, 1e-3);
        let datum = config.datum.build(solver.cutoff).unwrap();
        assert_eq!(datum.coeff(1), Complex64::new(0.005, 0.0));
        assert_eq!(datum.coeff(2), Complex64::new(0.005, 0.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SMALL.replace("dt = 1e-3", "dt = 1e-3\nwhatever = 3");
        let err = RunConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("whatever"), "{err}");
    }

    #[test]
    fn nonpositive_dt_names_field() {
        let bad = SMALL.replace("dt = 1e-3", "dt = -1.0");
        let config = RunConfig::from_toml(&bad).unwrap();
        let err = config.solver.resolve().unwrap_err();
        assert!(err.to_string().contains("solver.dt"), "{err}");
    }

    #[test]
    fn default_dt_resolves_stiff_scale() {
        let text = SMALL.replace("dt = 1e-3\n", "");
        let config = RunConfig::from_toml(&text).unwrap();
        let solver = config.solver.resolve().unwrap();
        assert!((solver.dt - 0.25 / 16.0f64.powi(3)).abs() < 1e-18);
    }

    #[test]
    fn echo_roundtrip_is_identical() {
        let config = RunConfig::from_toml(SMALL).unwrap();
        let echoed = config.to_toml();
        let reparsed = RunConfig::from_toml(&echoed).unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn normalize_h32_rescales() {
        let text = SMALL.replace(
            "amplitudes = [0.01, 0.01]",
            "amplitudes = [1.0, 1.0]\nnormalize_h32 = 0.01",
        );
        let config = RunConfig::from_toml(&text).unwrap();
        let datum = config.datum.build(16).unwrap();
        assert!((hs_norm(&datum, 1.5) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn random_preset_is_deterministic() {
        let text = r#"
[datum]
preset = "random"
seed = 99
band = "inverse_square"

[solver]
n = 32
t = 1.0
"#;
        let config = RunConfig::from_toml(text).unwrap();
        let a = config.datum.build(32).unwrap();
        let b = config.datum.build(32).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn explicit_modes_preset() {
        let text = r#"
[datum]
preset = "modes"
modes = [[3, 0.1, -0.2]]

[solver]
n = 8
t = 0.1
"#;
        let config = RunConfig::from_toml(text).unwrap();
        let f = config.datum.build(8).unwrap();
        assert_eq!(f.coeff(3), Complex64::new(0.1, -0.2));
        assert_eq!(f.coeff(-3), Complex64::new(0.1, 0.2));
    }
}
