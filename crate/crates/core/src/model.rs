//! Transducer configuration and the coupling rates derived from it.
//!
//! All rates are dimensionless and, by default, expressed in units of the
//! mechanical half-linewidth `gamma_m`. The pump enters only through the
//! classical intracavity amplitude `C0 = sqrt(2 / gamma0_center) * A0`.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// One transducer configuration: three optical modes (the pumped centre mode
/// and the two sidebands `ω± = ω0 ± ωm`) coupled to one mechanical mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Coupling (input-mirror transmission) half-linewidth of mode `ω+`.
    pub gamma0_plus: f64,
    pub gamma0_minus: f64,
    /// Loss half-linewidth of mode `ω+`.
    #[serde(default)]
    pub gammae_plus: f64,
    #[serde(default)]
    pub gammae_minus: f64,
    pub gamma0_center: f64,
    #[serde(default)]
    pub gammae_center: f64,
    pub gamma_m: f64,
    #[serde(deserialize_with = "real_coupling")]
    pub eta_plus: f64,
    #[serde(deserialize_with = "real_coupling")]
    pub eta_minus: f64,
    /// Pump amplitude `A0`, normalised so that `ħ ω0 A0²` is the pump power.
    pub pump_amplitude: f64,
    #[serde(default)]
    pub n_thermal: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_0: Option<f64>,
}

/// Accepts a plain number, or a `[re, im]` pair with a vanishing imaginary part.
fn real_coupling<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Real(f64),
        Pair([f64; 2]),
    }
    match Raw::deserialize(de)? {
        Raw::Real(x) => Ok(x),
        Raw::Pair([re, im]) if im == 0.0 => Ok(re),
        Raw::Pair([re, im]) => Err(serde::de::Error::custom(format!(
            "complex coupling {re}+{im}i not supported: couplings must be real"
        ))),
    }
}

impl Default for SystemParams {
    /// Lossless, symmetric, unpumped triplet with `γ± = 100 γm`.
    fn default() -> Self {
        SystemParams {
            gamma0_plus: 100.0,
            gamma0_minus: 100.0,
            gammae_plus: 0.0,
            gammae_minus: 0.0,
            gamma0_center: 100.0,
            gammae_center: 0.0,
            gamma_m: 1.0,
            eta_plus: 0.0,
            eta_minus: 0.0,
            pump_amplitude: 0.0,
            n_thermal: 0.0,
            omega_m: None,
            omega_0: None,
        }
    }
}

impl SystemParams {
    /// Symmetric lossless configuration: `γ± = γ`, `η± = η`.
    pub fn symmetric_lossless(gamma: f64, eta: f64, c0: f64, gamma_m: f64) -> Self {
        SystemParams {
            gamma0_plus: gamma,
            gamma0_minus: gamma,
            gamma0_center: gamma,
            gamma_m,
            eta_plus: eta,
            eta_minus: eta,
            ..Default::default()
        }
        .with_c0(c0)
    }

    /// Lossless configuration with prescribed sideband rates `g±`, built at
    /// `C0 = 1` by choosing `η± = sqrt(g± γ±)`.
    pub fn lossless_from_rates(
        g_plus: f64,
        g_minus: f64,
        gamma_plus: f64,
        gamma_minus: f64,
        gamma_m: f64,
    ) -> Self {
        SystemParams {
            gamma0_plus: gamma_plus,
            gamma0_minus: gamma_minus,
            gamma0_center: gamma_plus.max(gamma_minus),
            gamma_m,
            eta_plus: (g_plus * gamma_plus).sqrt(),
            eta_minus: (g_minus * gamma_minus).sqrt(),
            ..Default::default()
        }
        .with_c0(1.0)
    }

    /// Sets the pump amplitude so that the intracavity amplitude equals `c0`.
    pub fn with_c0(mut self, c0: f64) -> Self {
        self.pump_amplitude = c0 * (self.gamma0_center / 2.0).sqrt();
        self
    }

    /// Multiplies the pump power (`A0²`) by `factor`.
    pub fn with_power_scaled(mut self, factor: f64) -> Self {
        self.pump_amplitude *= factor.sqrt();
        self
    }

    /// Sets `γe± = ratio · γ0±`.
    pub fn with_loss_ratio(mut self, ratio: f64) -> Self {
        self.gammae_plus = ratio * self.gamma0_plus;
        self.gammae_minus = ratio * self.gamma0_minus;
        self
    }

    pub fn gamma_plus(&self) -> f64 {
        self.gamma0_plus + self.gammae_plus
    }

    pub fn gamma_minus(&self) -> f64 {
        self.gamma0_minus + self.gammae_minus
    }

    pub fn gamma_center(&self) -> f64 {
        self.gamma0_center + self.gammae_center
    }

    pub fn is_lossless(&self) -> bool {
        self.gammae_plus == 0.0 && self.gammae_minus == 0.0
    }

    /// `η+ = η−` and `γ+ = γ−` to within 1e-12 relative.
    pub fn is_symmetric(&self) -> bool {
        close(self.eta_plus, self.eta_minus) && close(self.gamma_plus(), self.gamma_minus())
    }

    /// Sideband frequencies `(ω+, ω−)` when both `ω0` and `ωm` are recorded.
    pub fn sideband_frequencies(&self) -> Option<(f64, f64)> {
        match (self.omega_0, self.omega_m) {
            (Some(w0), Some(wm)) => Some((w0 + wm, w0 - wm)),
            _ => None,
        }
    }

    pub fn c0(&self) -> Result<f64> {
        c0_from_pump(self.pump_amplitude, self.gamma0_center)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma0_plus", self.gamma0_plus),
            ("gamma0_minus", self.gamma0_minus),
            ("gamma0_center", self.gamma0_center),
            ("gamma_m", self.gamma_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("params.{name}"), format!("must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("gammae_plus", self.gammae_plus),
            ("gammae_minus", self.gammae_minus),
            ("gammae_center", self.gammae_center),
            ("eta_plus", self.eta_plus),
            ("eta_minus", self.eta_minus),
            ("pump_amplitude", self.pump_amplitude),
            ("n_thermal", self.n_thermal),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("params.{name}"), format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("omega_m", self.omega_m), ("omega_0", self.omega_0)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::config(format!("params.{name}"), format!("must be > 0, got {v}")));
                }
            }
        }
        if let (Some(w0), Some(wm)) = (self.omega_0, self.omega_m) {
            if wm >= w0 {
                return Err(Error::config(
                    "params.omega_m",
                    format!("ω− = ω0 − ωm must be positive (ω0 = {w0}, ωm = {wm})"),
                ));
            }
        }
        Ok(())
    }

    /// Returns a copy with every rate (and the pump amplitude, which scales
    /// as the square root of a rate) divided by `gamma_m`, so that `γm = 1`.
    pub fn normalized_to_gamma_m(&self) -> SystemParams {
        let s = self.gamma_m;
        SystemParams {
            gamma0_plus: self.gamma0_plus / s,
            gamma0_minus: self.gamma0_minus / s,
            gammae_plus: self.gammae_plus / s,
            gammae_minus: self.gammae_minus / s,
            gamma0_center: self.gamma0_center / s,
            gammae_center: self.gammae_center / s,
            gamma_m: 1.0,
            eta_plus: self.eta_plus / s,
            eta_minus: self.eta_minus / s,
            pump_amplitude: self.pump_amplitude / s.sqrt(),
            n_thermal: self.n_thermal,
            omega_m: self.omega_m.map(|w| w / s),
            omega_0: self.omega_0.map(|w| w / s),
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Classical intracavity amplitude of the pumped mode, `C0 = sqrt(2/γ0) A0`.
pub fn c0_from_pump(pump_amplitude: f64, gamma0_center: f64) -> Result<f64> {
    if !(gamma0_center > 0.0) {
        return Err(Error::config("params.gamma0_center", format!("must be > 0, got {gamma0_center}")));
    }
    if !(pump_amplitude >= 0.0) {
        return Err(Error::config("params.pump_amplitude", format!("must be >= 0, got {pump_amplitude}")));
    }
    Ok((2.0 / gamma0_center).sqrt() * pump_amplitude)
}

/// Symmetric-case parameters entering the gain factor `𝒦(Ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricCoupling {
    pub gamma: f64,
    pub eta: f64,
}

/// Rates derived from a [`SystemParams`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedCouplings {
    /// `g± = C0² η±² / γ±`
    pub g_plus: f64,
    pub g_minus: f64,
    /// Optical damping `G = g+ − g−`.
    pub optical_damping: f64,
    /// Photonic gain coefficient `G+ = g+ + g−`.
    pub photonic_gain: f64,
    pub c0: f64,
    pub symmetric: Option<SymmetricCoupling>,
}

impl DerivedCouplings {
    /// `𝒦(Ω) = 4 γ η² C0² / (γ² + Ω²)`, defined only for symmetric configurations.
    pub fn k_factor(&self, omega: f64) -> Option<f64> {
        self.symmetric.map(|SymmetricCoupling { gamma, eta }| {
            4.0 * gamma * eta * eta * self.c0 * self.c0 / (gamma * gamma + omega * omega)
        })
    }
}

pub fn derive_couplings(params: &SystemParams) -> Result<DerivedCouplings> {
    params.validate()?;
    let c0 = params.c0()?;
    let c0_sq = c0 * c0;
    let g_plus = c0_sq * params.eta_plus * params.eta_plus / params.gamma_plus();
    let g_minus = c0_sq * params.eta_minus * params.eta_minus / params.gamma_minus();
    let symmetric = params.is_symmetric().then(|| SymmetricCoupling {
        gamma: params.gamma_plus(),
        eta: params.eta_plus,
    });
    Ok(DerivedCouplings {
        g_plus,
        g_minus,
        optical_damping: g_plus - g_minus,
        photonic_gain: g_plus + g_minus,
        c0,
        symmetric,
    })
}

/// Warning heuristics for the linearised, resolved-sideband, low-loss model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeThresholds {
    /// Flag `γm ≥ mechanical_ratio · min(γ±)`.
    pub mechanical_ratio: f64,
    /// Flag `γe± ≥ loss_ratio · γ0±`.
    pub loss_ratio: f64,
    /// Flag `max(γ±, γ) ≥ sideband_ratio · ωm` when `ωm` is recorded.
    pub sideband_ratio: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds { mechanical_ratio: 0.1, loss_ratio: 0.1, sideband_ratio: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeIssue {
    MechanicalLinewidthNotSmall,
    LossNotSmall,
    SidebandsNotResolved,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeFinding {
    pub issue: RegimeIssue,
    /// The violated inequality, e.g. `γm not ≪ γ±`.
    pub inequality: String,
    pub detail: String,
}

pub fn validate_regime(params: &SystemParams) -> Result<Vec<RegimeFinding>> {
    validate_regime_with(params, &RegimeThresholds::default())
}

pub fn validate_regime_with(
    params: &SystemParams,
    thresholds: &RegimeThresholds,
) -> Result<Vec<RegimeFinding>> {
    params.validate()?;
    let mut findings = Vec::new();
    let min_gamma = params.gamma_plus().min(params.gamma_minus());
    if params.gamma_m >= thresholds.mechanical_ratio * min_gamma {
        findings.push(RegimeFinding {
            issue: RegimeIssue::MechanicalLinewidthNotSmall,
            inequality: "γm not ≪ γ±".into(),
            detail: format!(
                "γm = {} ≥ {} · min(γ±) = {}",
                params.gamma_m,
                thresholds.mechanical_ratio,
                thresholds.mechanical_ratio * min_gamma
            ),
        });
    }
    for (sign, loss, coupling) in [
        ("+", params.gammae_plus, params.gamma0_plus),
        ("−", params.gammae_minus, params.gamma0_minus),
    ] {
        if loss >= thresholds.loss_ratio * coupling {
            findings.push(RegimeFinding {
                issue: RegimeIssue::LossNotSmall,
                inequality: format!("loss not small: γe{sign} not ≪ γ0{sign}"),
                detail: format!("γe{sign} = {loss} ≥ {} · γ0{sign} = {}", thresholds.loss_ratio, thresholds.loss_ratio * coupling),
            });
        }
    }
    if let Some(wm) = params.omega_m {
        let widest = params.gamma_plus().max(params.gamma_minus()).max(params.gamma_center());
        if widest >= thresholds.sideband_ratio * wm {
            findings.push(RegimeFinding {
                issue: RegimeIssue::SidebandsNotResolved,
                inequality: "γ±, γ not ≪ ωm".into(),
                detail: format!("max optical half-linewidth {widest} ≥ {} · ωm", thresholds.sideband_ratio),
            });
        }
    }
    Ok(findings)
}
