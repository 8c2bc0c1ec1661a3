//! TOML parameter files. Every value is an ordinary frequency in Hz.
//!
//! ```toml
//! [mechanics]
//! freq_hz = 1.0e6
//! gamma_hz = 5.0e3
//!
//! [cavity]
//! kappa_hz = 2.0e5
//!
//! [bath]
//! cutoff_hz = 1.0e6
//!
//! [drive]            # optional
//! detuning_hz = -1.0e6
//! coupling_hz = 48.75e3
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use super::CliError;
use crate::model::SystemParams;

pub const DEFAULT_FREQ_HZ: f64 = 1.0e6;
pub const DEFAULT_KAPPA_HZ: f64 = 2.0e5;
pub const DEFAULT_GAMMA_HZ: f64 = 5.0e3;
pub const DEFAULT_CUTOFF_HZ: f64 = 1.0e6;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mechanics: Option<RawMechanics>,
    cavity: Option<RawCavity>,
    bath: Option<RawBath>,
    drive: Option<RawDrive>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMechanics {
    freq_hz: Option<Spanned<f64>>,
    gamma_hz: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    kappa_hz: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    cutoff_hz: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    detuning_hz: Option<Spanned<f64>>,
    coupling_hz: Option<Spanned<f64>>,
}

/// Resolved run configuration; Hz values are kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub source: Option<PathBuf>,
    pub freq_hz: f64,
    pub kappa_hz: f64,
    pub gamma_hz: f64,
    pub cutoff_hz: f64,
    pub detuning_hz: Option<f64>,
    pub coupling_hz: Option<f64>,
    pub system: SystemParams,
}

impl Default for Config {
    fn default() -> Self {
        Self::from_raw(RawConfig::default(), "", None).expect("defaults are valid")
    }
}

#[derive(Clone, Copy)]
enum Bound {
    Positive,
    NonNegative,
    Any,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn take(
    v: Option<Spanned<f64>>,
    key: &str,
    default: Option<f64>,
    bound: Bound,
    src: &str,
    origin: &str,
) -> Result<Option<f64>, CliError> {
    let Some(v) = v else {
        return Ok(default);
    };
    let x = *v.get_ref();
    let reason = match bound {
        _ if !x.is_finite() => Some("must be finite"),
        Bound::Positive if x <= 0.0 => Some("must be positive"),
        Bound::NonNegative if x < 0.0 => Some("must be non-negative"),
        _ => None,
    };
    match reason {
        Some(r) => Err(CliError::Config(format!(
            "{origin}:{}: {key} = {x}: {r}",
            line_of(src, v.span().start)
        ))),
        None => Ok(Some(x)),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&src, Some(path))
    }

    pub fn parse(src: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let origin = path.map_or_else(|| "<config>".to_string(), |p| p.display().to_string());
        let raw: RawConfig = toml::from_str(src)
            .map_err(|e| CliError::Config(format!("{origin}: {}", e.to_string().trim_end())))?;
        Self::from_raw(raw, src, path)
    }

    fn from_raw(raw: RawConfig, src: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let origin = path.map_or_else(|| "<config>".to_string(), |p| p.display().to_string());
        let mech = raw.mechanics.unwrap_or_default();
        let cav = raw.cavity.unwrap_or_default();
        let bath = raw.bath.unwrap_or_default();
        let drive = raw.drive.unwrap_or_default();
        let o = origin.as_str();
        let freq = take(mech.freq_hz, "mechanics.freq_hz", Some(DEFAULT_FREQ_HZ), Bound::Positive, src, o)?
            .expect("defaulted");
        let gamma = take(mech.gamma_hz, "mechanics.gamma_hz", Some(DEFAULT_GAMMA_HZ), Bound::NonNegative, src, o)?
            .expect("defaulted");
        let kappa = take(cav.kappa_hz, "cavity.kappa_hz", Some(DEFAULT_KAPPA_HZ), Bound::Positive, src, o)?
            .expect("defaulted");
        let cutoff = take(bath.cutoff_hz, "bath.cutoff_hz", Some(DEFAULT_CUTOFF_HZ), Bound::Positive, src, o)?
            .expect("defaulted");
        let detuning = take(drive.detuning_hz, "drive.detuning_hz", None, Bound::Any, src, o)?;
        let coupling = take(drive.coupling_hz, "drive.coupling_hz", None, Bound::NonNegative, src, o)?;
        let system = SystemParams::from_hz(freq, kappa, gamma, cutoff)?;
        Ok(Self {
            source: path.map(Path::to_path_buf),
            freq_hz: freq,
            kappa_hz: kappa,
            gamma_hz: gamma,
            cutoff_hz: cutoff,
            detuning_hz: detuning,
            coupling_hz: coupling,
            system,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_representative() {
        let c = Config::default();
        assert_eq!(c.system, SystemParams::representative());
        assert_eq!(c.detuning_hz, None);
        let empty = Config::parse("", None).unwrap();
        assert_eq!(empty, c);
    }

    #[test]
    fn partial_file_overrides() {
        let c = Config::parse("[mechanics]\ngamma_hz = 0\n\n[drive]\ncoupling_hz = 45e3\n", None).unwrap();
        assert_eq!(c.gamma_hz, 0.0);
        assert_eq!(c.system.gamma(), 0.0);
        assert_eq!(c.coupling_hz, Some(45e3));
        assert_eq!(c.kappa_hz, DEFAULT_KAPPA_HZ);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Config::parse("[cavity]\n\nkappa_hz = -3\n", None).unwrap_err().to_string();
        assert!(err.contains(":3:") && err.contains("cavity.kappa_hz"), "{err}");
        let err = Config::parse("[mechanics]\ng_c = 1\n", None).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("g_c"), "{err}");
        let err = Config::parse("[drive]\ncoupling_hz = -1\n", None).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        assert!(Config::parse("[bath]\ncutoff_hz = \"fast\"\n", None).is_err());
    }
}
