//! Experiment configuration read from TOML.
//!
//! ```toml
//! scenario = "scenario.toml"   # optional; otherwise [system]/[mac]/[bc] inline
//!
//! [experiment]
//! phase = "mac"                # mac | bc
//! methods = ["algorithm1", "waterfilling", "p2p_orthogonal_baseline"]
//! snr_grid = [0.0, 10.0, 20.0]
//! trials = 10000
//! seed = 7
//! init = "identity"            # identity | random(N)
//! ```
//!
//! Every scenario field has a default, so an empty `[mac]` table describes the
//! reference three-antenna setup.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use twr_core::lmmse::Phase;

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Algorithm1,
    KktClosedForm,
    Waterfilling,
    ConvexPsd,
    Algorithm2,
    SvdMixed,
    SvdWhite,
    ConvexQr,
    IdentityBaseline,
    P2pOrthogonalBaseline,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Algorithm1,
        Method::KktClosedForm,
        Method::Waterfilling,
        Method::ConvexPsd,
        Method::Algorithm2,
        Method::SvdMixed,
        Method::SvdWhite,
        Method::ConvexQr,
        Method::IdentityBaseline,
        Method::P2pOrthogonalBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Algorithm1 => "algorithm1",
            Method::KktClosedForm => "kkt_closed_form",
            Method::Waterfilling => "waterfilling",
            Method::ConvexPsd => "convex_psd",
            Method::Algorithm2 => "algorithm2",
            Method::SvdMixed => "svd_mixed",
            Method::SvdWhite => "svd_white",
            Method::ConvexQr => "convex_qr",
            Method::IdentityBaseline => "identity_baseline",
            Method::P2pOrthogonalBaseline => "p2p_orthogonal_baseline",
        }
    }

    pub fn supports(self, phase: Phase) -> bool {
        match self {
            Method::Algorithm1 | Method::KktClosedForm | Method::Waterfilling | Method::ConvexPsd => phase == Phase::Mac,
            Method::Algorithm2 | Method::SvdMixed | Method::SvdWhite | Method::ConvexQr => phase == Phase::Bc,
            Method::IdentityBaseline | Method::P2pOrthogonalBaseline => true,
        }
    }

    pub fn is_iterative(self) -> bool {
        matches!(self, Method::Algorithm1 | Method::Algorithm2 | Method::KktClosedForm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Starting point of the iterative designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    #[default]
    Identity,
    /// Best of `n` Gaussian starts.
    Random(usize),
}

impl FromStr for Init {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "identity" {
            return Ok(Init::Identity);
        }
        let inner = t.strip_prefix("random(").and_then(|r| r.strip_suffix(')'));
        match inner.map(|n| n.trim().parse::<usize>()) {
            Some(Ok(n)) if n >= 1 => Ok(Init::Random(n)),
            _ => Err(format!("init must be `identity` or `random(N)` with N ≥ 1, got `{s}`")),
        }
    }
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Init::Identity => f.write_str("identity"),
            Init::Random(n) => write!(f, "random({n})"),
        }
    }
}

impl Serialize for Init {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Init {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Spatial structure of the disturbance: `K_r = μI + I_q Z_r` by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spatial {
    /// `μI + I_q Z_r`
    #[default]
    NoisePlusInterference,
    /// `I_q Z_r`
    InterferenceLimited,
    /// `μI`
    NoiseLimited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    /// White-noise floor `μ`; SNR is `P/μ`.
    pub noise: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { n1: 3, n2: 3, m: 3, noise: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacConfig {
    /// Defaults to `N₁ + N₂`.
    pub l_s: Option<usize>,
    pub d_t1: f64,
    pub d_t2: f64,
    pub d_r: f64,
    pub eta: f64,
    pub i_q: f64,
    pub spatial: Spatial,
    /// Relative source powers; rescaled so that `τ₁ + τ₂ = 2P`.
    pub power_split: [f64; 2],
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            l_s: None,
            d_t1: 1.5,
            d_t2: 1.8,
            d_r: 1.3,
            eta: 0.9,
            i_q: 1.0,
            spatial: Spatial::default(),
            power_split: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BcConfig {
    /// Defaults to `M`.
    pub l_r: Option<usize>,
    pub d_t: f64,
    pub d_r1: f64,
    pub d_r2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub i_q1: f64,
    pub i_q2: f64,
    pub spatial: Spatial,
    /// Replace the relay transmit covariance by `I` (uncorrelated antennas).
    pub white_transmit: bool,
    /// `τ_R = relay_power · P`.
    pub relay_power: f64,
}

impl Default for BcConfig {
    fn default() -> Self {
        Self {
            l_r: None,
            d_t: 1.9,
            d_r1: 1.95,
            d_r2: 0.3,
            eta1: 0.9,
            eta2: -0.9,
            i_q1: 1.0,
            i_q2: 1.0,
            spatial: Spatial::default(),
            white_transmit: false,
            relay_power: 1.0,
        }
    }
}

/// The physical setup shared by all experiments on it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub mac: MacConfig,
    pub bc: BcConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub phase: Phase,
    pub methods: Vec<Method>,
    pub snr_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: Init,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Record wall-clock time per cell; off gives byte-identical reruns.
    #[serde(default = "default_timing")]
    pub timing: bool,
}

fn default_timing() -> bool {
    true
}

fn default_trials() -> usize {
    1000
}

fn default_tol() -> f64 {
    twr_core::mac::DEFAULT_TOL
}

fn default_max_iter() -> usize {
    twr_core::mac::DEFAULT_MAX_ITER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<PathBuf>,
    system: Option<SystemConfig>,
    mac: Option<MacConfig>,
    bc: Option<BcConfig>,
    experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    /// Parses a config; a `scenario` reference is resolved against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, SimError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        let scenario = match &raw.scenario {
            Some(path) => {
                if raw.system.is_some() || raw.mac.is_some() || raw.bc.is_some() {
                    return Err(SimError::Config(
                        "`scenario` reference and inline [system]/[mac]/[bc] tables are mutually exclusive".into(),
                    ));
                }
                let full = base.map(|b| b.join(path)).unwrap_or_else(|| path.clone());
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| SimError::Config(format!("scenario file {}: {e}", full.display())))?;
                toml::from_str(&text).map_err(|e| SimError::Config(format!("scenario file {}: {e}", full.display())))?
            }
            None => ScenarioConfig {
                system: raw.system.unwrap_or_default(),
                mac: raw.mac.unwrap_or_default(),
                bc: raw.bc.unwrap_or_default(),
            },
        };
        let cfg = Self { scenario, experiment: raw.experiment };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent()).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: &str, msg: String| Err(SimError::Config(format!("{field}: {msg}")));
        let e = &self.experiment;
        if e.trials < 1 {
            return bad("experiment.trials", "must be at least 1".into());
        }
        if e.methods.is_empty() {
            return bad("experiment.methods", "list is empty".into());
        }
        for m in &e.methods {
            if !m.supports(e.phase) {
                return bad("experiment.methods", format!("`{m}` does not apply to the {:?} phase", e.phase));
            }
        }
        if e.snr_grid.is_empty() {
            return bad("experiment.snr_grid", "list is empty".into());
        }
        if let Some(v) = e.snr_grid.iter().find(|v| !v.is_finite()) {
            return bad("experiment.snr_grid", format!("non-finite value {v}"));
        }
        if !(e.tol > 0.0) {
            return bad("experiment.tol", format!("must be positive, got {}", e.tol));
        }
        if e.max_iter < 1 {
            return bad("experiment.max_iter", "must be at least 1".into());
        }
        let s = &self.scenario;
        if s.system.n1 == 0 || s.system.n2 == 0 || s.system.m == 0 {
            return bad("system", "antenna counts must be positive".into());
        }
        if !(s.system.noise > 0.0 && s.system.noise.is_finite()) {
            return bad("system.noise", format!("must be positive, got {}", s.system.noise));
        }
        for (field, eta) in [("mac.eta", s.mac.eta), ("bc.eta1", s.bc.eta1), ("bc.eta2", s.bc.eta2)] {
            if !(eta.abs() < 1.0) {
                return bad(field, format!("needs |eta| < 1, got {eta}"));
            }
        }
        for (field, v) in [("mac.i_q", s.mac.i_q), ("bc.i_q1", s.bc.i_q1), ("bc.i_q2", s.bc.i_q2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(field, format!("must be non-negative, got {v}"));
            }
        }
        let [a, b] = s.mac.power_split;
        if !(a >= 0.0 && b >= 0.0 && a + b > 0.0 && (a + b).is_finite()) {
            return bad("mac.power_split", format!("needs non-negative entries with a positive sum, got [{a}, {b}]"));
        }
        if !(s.bc.relay_power >= 0.0 && s.bc.relay_power.is_finite()) {
            return bad("bc.relay_power", format!("must be non-negative, got {}", s.bc.relay_power));
        }
        if s.mac.l_s == Some(0) {
            return bad("mac.l_s", "must be at least 1".into());
        }
        if s.bc.l_r == Some(0) {
            return bad("bc.l_r", "must be at least 1".into());
        }
        Ok(())
    }
}
