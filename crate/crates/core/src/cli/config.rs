//! The JSON run configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::combine::{ChannelSpec, CombinationWeights, BUILTIN_CHANNELS};
use crate::error::{Error, Result};
use crate::model::{derive_couplings, RegimeThresholds, SystemParams};
use crate::oracle::{InputMask, Signal, SimConfig, WelchSettings};
use crate::overlap::{eta_ratio, ModeProfile, ProfileFamily};

/// Unit system of every rate and frequency in a config.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Dimensionless, in units of `γm`.
    #[default]
    GammaM,
    /// Absolute rad/s; rescaled by `γm` on load.
    Absolute,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaGrid {
    Linear { start: f64, stop: f64, points: usize },
    /// Logarithmically spaced, `start > 0`.
    Log { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl OmegaGrid {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            OmegaGrid::Linear { start, stop, points } => (0..points)
                .map(|i| if i + 1 == points { stop } else { start + (stop - start) * i as f64 / (points - 1) as f64 })
                .collect(),
            OmegaGrid::Log { start, stop, points } => {
                let (a, b) = (start.ln(), stop.ln());
                (0..points)
                    .map(|i| match i {
                        0 => start,
                        _ if i + 1 == points => stop,
                        _ => (a + (b - a) * i as f64 / (points - 1) as f64).exp(),
                    })
                    .collect()
            }
            OmegaGrid::Values { ref values } => values.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        let path = "sweep.omega";
        match *self {
            OmegaGrid::Linear { start, stop, points } | OmegaGrid::Log { start, stop, points } => {
                if points < 2 {
                    return Err(Error::config(format!("{path}.points"), "need at least 2 points"));
                }
                if !(start.is_finite() && stop.is_finite() && stop > start) {
                    return Err(Error::config(format!("{path}.stop"), "must be finite and greater than start"));
                }
                if matches!(self, OmegaGrid::Log { .. }) && !(start > 0.0) {
                    return Err(Error::config(format!("{path}.start"), "log grid needs start > 0"));
                }
            }
            OmegaGrid::Values { ref values } => {
                if values.len() < 2 {
                    return Err(Error::config(format!("{path}.values"), "need at least 2 points"));
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::config(format!("{path}.values[{i}]"), "must be finite"));
                }
                if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
                    return Err(Error::config(format!("{path}.values[{}]", i + 1), "grid must be strictly increasing"));
                }
            }
        }
        Ok(())
    }
}

fn unit_power() -> Vec<f64> {
    vec![1.0]
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub omega: OmegaGrid,
    /// Pump-power factors relative to `params`.
    #[serde(default = "unit_power")]
    pub power: Vec<f64>,
    /// Loss ratios `γe±/γ0±`; when absent the losses in `params` are kept.
    #[serde(default)]
    pub loss: Option<Vec<f64>>,
}

/// A fixed channel with user-chosen weights, each a number or `[re, im]`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomChannel {
    pub label: String,
    #[serde(deserialize_with = "complex_weight")]
    pub w_plus: Complex64,
    #[serde(deserialize_with = "complex_weight")]
    pub w_minus: Complex64,
}

fn complex_weight<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Complex64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Real(f64),
        Pair([f64; 2]),
    }
    Ok(match Raw::deserialize(de)? {
        Raw::Real(x) => Complex64::new(x, 0.0),
        Raw::Pair([re, im]) => Complex64::new(re, im),
    })
}

/// The three optical profiles `Ψ0, Ψ1, Ψ2` and the mechanical profile `Ψm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSet {
    pub psi_0: ProfileFamily,
    pub psi_1: ProfileFamily,
    pub psi_2: ProfileFamily,
    pub psi_m: ProfileFamily,
}

impl ModeSet {
    pub fn profiles(&self) -> Result<[ModeProfile; 4]> {
        let load = |name: &str, f: &ProfileFamily| {
            ModeProfile::from_family(f.clone()).map_err(|e| match e {
                Error::Config { path, message } => Error::config(format!("modes.{name}.{path}"), message),
                other => other,
            })
        };
        Ok([
            load("psi_0", &self.psi_0)?,
            load("psi_1", &self.psi_1)?,
            load("psi_2", &self.psi_2)?,
            load("psi_m", &self.psi_m)?,
        ])
    }

    pub fn eta_ratio(&self) -> Result<f64> {
        let [p0, p1, p2, pm] = self.profiles()?;
        eta_ratio(&p0, &p1, &p2, &pm)
    }
}

/// Time-domain run settings. `dt` defaults to `0.005 / max rate`,
/// `total_time` to `2000/γm` and `record_interval` to `0.01/γm`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub total_time: Option<f64>,
    #[serde(default)]
    pub record_interval: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "no_signal")]
    pub signal: Signal,
    #[serde(default)]
    pub inputs: InputMask,
    /// Real-weighted channel label whose PSD is compared.
    pub channel: String,
    #[serde(default)]
    pub welch: WelchSettings,
}

fn no_signal() -> Signal {
    Signal::None
}

impl SimulationSpec {
    pub fn sim_config(&self, params: &SystemParams) -> Result<SimConfig> {
        let mut cfg = SimConfig::for_params(params, 0.005, 2000.0, self.seed)?;
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(t) = self.total_time {
            cfg.total_time = t;
        }
        if let Some(r) = self.record_interval {
            cfg.record_interval = r;
        }
        cfg.signal = self.signal;
        cfg.inputs = self.inputs;
        cfg.validate(params)?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub units: Units,
    pub params: SystemParams,
    /// When present, `η+` is replaced by `ratio · η−` with the ratio taken
    /// from these mode profiles.
    #[serde(default)]
    pub overlap: Option<ModeSet>,
    pub sweep: SweepSpec,
    pub channels: Vec<String>,
    #[serde(default)]
    pub custom_channels: Vec<CustomChannel>,
    #[serde(default)]
    pub regime: RegimeThresholds,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

/// Parses JSON, reporting the failing field path.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_json(&text)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = parse_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Parameters in units of `γm`, with any overlap-derived `η+` applied.
    pub fn resolved_params(&self) -> Result<SystemParams> {
        let mut p = match self.units {
            Units::GammaM => self.params.clone(),
            Units::Absolute => {
                self.params.validate()?;
                self.params.normalized_to_gamma_m()
            }
        };
        if let Some(modes) = &self.overlap {
            p.eta_plus = modes.eta_ratio()? * p.eta_minus;
        }
        p.validate()?;
        Ok(p)
    }

    /// Frequency grid in units of `γm`.
    pub fn omegas(&self) -> Vec<f64> {
        let scale = match self.units {
            Units::GammaM => 1.0,
            Units::Absolute => self.params.gamma_m,
        };
        self.sweep.omega.points().into_iter().map(|w| w / scale).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.sweep.omega.validate()?;
        if self.sweep.power.is_empty() {
            return Err(Error::config("sweep.power", "must not be empty"));
        }
        if let Some(i) = self.sweep.power.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::config(format!("sweep.power[{i}]"), "power factors must be > 0"));
        }
        if let Some(loss) = &self.sweep.loss {
            if loss.is_empty() {
                return Err(Error::config("sweep.loss", "must not be empty"));
            }
            if let Some(i) = loss.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::config(format!("sweep.loss[{i}]"), "loss ratios must be >= 0"));
            }
        }
        if self.channels.is_empty() {
            return Err(Error::config("channels", "channel list is empty"));
        }
        let mut custom = HashSet::new();
        for (i, c) in self.custom_channels.iter().enumerate() {
            let path = format!("custom_channels[{i}]");
            if BUILTIN_CHANNELS.contains(&c.label.as_str()) {
                return Err(Error::config(format!("{path}.label"), format!("`{}` is a built-in channel", c.label)));
            }
            if !custom.insert(c.label.as_str()) {
                return Err(Error::config(format!("{path}.label"), format!("duplicate label `{}`", c.label)));
            }
            CombinationWeights::new(c.w_plus, c.w_minus, c.label.clone())
                .map_err(|e| Error::config(format!("{path}.w_plus"), e.to_string()))?;
        }
        let mut seen = HashSet::new();
        for (i, label) in self.channels.iter().enumerate() {
            if !BUILTIN_CHANNELS.contains(&label.as_str()) && !custom.contains(label.as_str()) {
                return Err(Error::config(format!("channels[{i}]"), format!("undefined channel `{label}`")));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::config(format!("channels[{i}]"), format!("duplicate channel `{label}`")));
            }
        }
        if let Some(sim) = &self.simulation {
            if !BUILTIN_CHANNELS.contains(&sim.channel.as_str()) && !custom.contains(sim.channel.as_str()) {
                return Err(Error::config("simulation.channel", format!("undefined channel `{}`", sim.channel)));
            }
        }
        if let Some(modes) = &self.overlap {
            modes.profiles().map_err(|e| match e {
                Error::Config { path, message } => Error::config(format!("overlap.{}", path.trim_start_matches("modes.")), message),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Resolves a channel label against built-ins and custom channels.
    pub fn channel_spec(&self, label: &str, params: &SystemParams) -> Result<ChannelSpec> {
        if let Some(c) = self.custom_channels.iter().find(|c| c.label == label) {
            return Ok(ChannelSpec::Fixed(CombinationWeights::new(c.w_plus, c.w_minus, c.label.clone())?));
        }
        let couplings = derive_couplings(params)?;
        ChannelSpec::builtin(label, &couplings)
            .unwrap_or_else(|| Err(Error::config("channels", format!("undefined channel `{label}`"))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "params": {"gamma0_plus": 100, "gamma0_minus": 100, "gamma0_center": 100,
                   "gamma_m": 1, "eta_plus": 5, "eta_minus": 5, "pump_amplitude": 7.0710678118654755},
        "sweep": {"omega": {"kind": "linear", "start": 0, "stop": 10, "points": 11}},
        "channels": ["optimal", "difference"]
    }"#;

    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        f(&mut v);
        v.to_string()
    }

    fn path_of(text: &str) -> String {
        match RunConfig::from_json(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn base_config_loads() {
        let cfg = RunConfig::from_json(BASE).unwrap();
        assert_eq!(cfg.omegas().len(), 11);
        assert_eq!(cfg.omegas()[10], 10.0);
        assert_eq!(cfg.sweep.power, vec![1.0]);
    }

    #[test]
    fn errors_carry_field_paths() {
        assert_eq!(path_of(&edit(|v| v["channels"] = serde_json::json!([]))), "channels");
        assert_eq!(path_of(&edit(|v| v["channels"][1] = "nonsense".into())), "channels[1]");
        assert_eq!(path_of(&edit(|v| v["params"]["gamma0_plus"] = (-1.0).into())), "params.gamma0_plus");
        assert_eq!(path_of(&edit(|v| v["params"]["gamma_m"] = "x".into())), "params.gamma_m");
        assert_eq!(path_of(&edit(|v| v["params"]["eta_plus"] = serde_json::json!([1.0, 0.5]))), "params.eta_plus");
        assert_eq!(path_of(&edit(|v| v["sweep"]["omega"]["points"] = 1.into())), "sweep.omega.points");
        assert_eq!(
            path_of(&edit(|v| v["sweep"]["omega"] = serde_json::json!({"kind": "values", "values": [0, 2, 1]}))),
            "sweep.omega.values[2]"
        );
        assert_eq!(path_of(&edit(|v| v["sweep"]["power"] = serde_json::json!([1, 0]))), "sweep.power[1]");
        assert_eq!(path_of(&edit(|v| v["bogus"] = 1.into())), "bogus");
    }

    #[test]
    fn custom_channels_resolve() {
        let text = edit(|v| {
            v["custom_channels"] = serde_json::json!([{"label": "tilted", "w_plus": 1, "w_minus": [0, 1]}]);
            v["channels"] = serde_json::json!(["tilted"]);
        });
        let cfg = RunConfig::from_json(&text).unwrap();
        let p = cfg.resolved_params().unwrap();
        match cfg.channel_spec("tilted", &p).unwrap() {
            ChannelSpec::Fixed(w) => assert_eq!(w.w_minus, Complex64::new(0.0, 1.0)),
            other => panic!("{other:?}"),
        }
        let clash = edit(|v| v["custom_channels"] = serde_json::json!([{"label": "sum", "w_plus": 1, "w_minus": 1}]));
        assert_eq!(path_of(&clash), "custom_channels[0].label");
    }

    #[test]
    fn absolute_units_rescale() {
        let text = edit(|v| {
            v["units"] = "absolute".into();
            v["params"]["gamma_m"] = 2.0.into();
            v["params"]["gamma0_plus"] = 200.0.into();
            v["params"]["gamma0_minus"] = 200.0.into();
            v["params"]["gamma0_center"] = 200.0.into();
        });
        let cfg = RunConfig::from_json(&text).unwrap();
        let p = cfg.resolved_params().unwrap();
        assert_eq!(p.gamma_m, 1.0);
        assert_eq!(p.gamma0_plus, 100.0);
        assert_eq!(cfg.omegas()[10], 5.0);
    }

    #[test]
    fn overlap_sets_eta_plus() {
        let text = edit(|v| {
            v["overlap"] = serde_json::json!({
                "psi_0": {"kind": "hermite_gauss", "n": 0, "waist": 1.0},
                "psi_1": {"kind": "hermite_gauss", "n": 1, "waist": 1.0},
                "psi_2": {"kind": "hermite_gauss", "n": 2, "waist": 1.0},
                "psi_m": {"kind": "hermite_gauss", "n": 1, "waist": 1.0}
            });
        });
        let cfg = RunConfig::from_json(&text).unwrap();
        let p = cfg.resolved_params().unwrap();
        let ratio = cfg.overlap.as_ref().unwrap().eta_ratio().unwrap();
        assert_eq!(p.eta_plus, ratio * 5.0);
        assert!(ratio > 0.0);
    }

    #[test]
    fn log_grid_endpoints_are_exact() {
        let g = OmegaGrid::Log { start: 0.1, stop: 30.0, points: 7 };
        let pts = g.points();
        assert_eq!(pts[0], 0.1);
        assert_eq!(pts[6], 30.0);
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
    }
}
