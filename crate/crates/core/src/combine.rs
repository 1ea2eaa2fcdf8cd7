//! Measurement combinations of the two output quadratures and the
//! force-referred noise spectral densities they produce.
//!
//! A channel is `y = w+^* b+ + w−^* b−` (the Hermitian product `w†b`). Every
//! density is referred to the signal force by dividing by `|w†t_f|²`, so it
//! does not depend on the overall scale or phase of `w`.

use nalgebra::{Matrix2, Matrix4x2, SMatrix, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::freqdomain::{InputChannel, TransferSet};
use crate::model::{DerivedCouplings, SystemParams};

/// Relative size of `|w†t_f|` below which a channel is treated as signal-blind.
pub const SIGNAL_BLIND_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombinationWeights {
    pub w_plus: Complex64,
    pub w_minus: Complex64,
    pub label: String,
}

impl CombinationWeights {
    pub fn new(w_plus: Complex64, w_minus: Complex64, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if w_plus.norm() == 0.0 && w_minus.norm() == 0.0 || !(w_plus.is_finite() && w_minus.is_finite()) {
            return Err(Error::config(format!("channels.{label}"), "weights must be finite and not both zero"));
        }
        Ok(CombinationWeights { w_plus, w_minus, label })
    }

    pub fn real(w_plus: f64, w_minus: f64, label: impl Into<String>) -> Result<Self> {
        Self::new(Complex64::new(w_plus, 0.0), Complex64::new(w_minus, 0.0), label)
    }

    /// `(b+ − b−)/√2`
    pub fn difference() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, -h, "difference").unwrap()
    }

    /// `(b+ + b−)/√2`
    pub fn sum() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, h, "sum").unwrap()
    }

    pub fn norm(&self) -> f64 {
        (self.w_plus.norm_sqr() + self.w_minus.norm_sqr()).sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.w_plus.im == 0.0 && self.w_minus.im == 0.0
    }

    /// `w† (t+, t−)`
    pub fn apply(&self, t_plus: Complex64, t_minus: Complex64) -> Complex64 {
        self.w_plus.conj() * t_plus + self.w_minus.conj() * t_minus
    }

    /// Channel response to one input.
    pub fn response(&self, transfer: &TransferSet, ch: InputChannel) -> Complex64 {
        let (tp, tm) = transfer.pair(ch);
        self.apply(tp, tm)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        CombinationWeights { w_plus: self.w_plus * c, w_minus: self.w_minus * c, label: self.label.clone() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Linear combination `self + k · other` of two channels.
    pub fn plus_scaled(&self, k: f64, other: &CombinationWeights, label: impl Into<String>) -> Result<Self> {
        Self::new(self.w_plus + other.w_plus * k, self.w_minus + other.w_minus * k, label)
    }
}

/// Force-referred noise budget of one channel at one frequency.
///
/// Field names double as the CSV column names.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseBudgetRow {
    pub omega: f64,
    pub channel: String,
    /// Optical (vacuum) force-referred PSD, the sum of the four entries below.
    pub s_total: f64,
    pub s_aplus: f64,
    pub s_aminus: f64,
    pub s_eplus: f64,
    pub s_eminus: f64,
    pub s_thermal: f64,
    pub s_sql: f64,
    #[serde(rename = "ratio_R")]
    pub ratio_r: f64,
    /// `|w†t_f| / |w|`
    pub signal_gain: f64,
}

impl NoiseBudgetRow {
    pub fn by_channel(&self, ch: InputChannel) -> Option<f64> {
        match ch {
            InputChannel::APlus => Some(self.s_aplus),
            InputChannel::AMinus => Some(self.s_aminus),
            InputChannel::EPlus => Some(self.s_eplus),
            InputChannel::EMinus => Some(self.s_eminus),
            InputChannel::ThermalQ => Some(self.s_thermal),
            InputChannel::SignalF => None,
        }
    }

    /// PSD of the unit-norm channel output itself, optical plus thermal.
    pub fn output_psd(&self) -> f64 {
        (self.s_total + self.s_thermal) * self.signal_gain * self.signal_gain
    }
}

/// Standard quantum limit `2 sqrt(γm² + Ω²)`.
pub fn sql(omega: f64, gamma_m: f64) -> f64 {
    2.0 * gamma_m.hypot(omega)
}

fn signal_response(transfer: &TransferSet, weights: &CombinationWeights) -> Result<Complex64> {
    let signal = weights.response(transfer, InputChannel::SignalF);
    let (tp, tm) = transfer.pair(InputChannel::SignalF);
    let scale = weights.norm() * (tp.norm() + tm.norm());
    if !(signal.norm() > SIGNAL_BLIND_TOLERANCE * scale) {
        return Err(Error::SignalBlind { label: weights.label.clone(), omega: transfer.omega });
    }
    Ok(signal)
}

/// Force-referred densities of the channel `w` at `transfer.omega`.
///
/// `gamma_m` sets the SQL column; thermal noise is reported separately.
pub fn force_referred_psd(
    transfer: &TransferSet,
    weights: &CombinationWeights,
    n_thermal: f64,
    gamma_m: f64,
) -> Result<NoiseBudgetRow> {
    let signal = signal_response(transfer, weights)?;
    let signal_sq = signal.norm_sqr();
    let referred = |ch: InputChannel| {
        let density = ch.spectral_density(n_thermal).unwrap_or(0.0);
        density * weights.response(transfer, ch).norm_sqr() / signal_sq
    };
    let s_aplus = referred(InputChannel::APlus);
    let s_aminus = referred(InputChannel::AMinus);
    let s_eplus = referred(InputChannel::EPlus);
    let s_eminus = referred(InputChannel::EMinus);
    let s_total = s_aplus + s_aminus + s_eplus + s_eminus;
    let s_sql = sql(transfer.omega, gamma_m);
    Ok(NoiseBudgetRow {
        omega: transfer.omega,
        channel: weights.label.clone(),
        s_total,
        s_aplus,
        s_aminus,
        s_eplus,
        s_eminus,
        s_thermal: referred(InputChannel::ThermalQ),
        s_sql,
        ratio_r: s_total / s_sql,
        signal_gain: signal.norm() / weights.norm(),
    })
}

/// Vacuum-noise covariance `N = Σ_i S_i t_i t_i†` of the output pair.
pub fn vacuum_covariance(transfer: &TransferSet) -> Matrix2<Complex64> {
    InputChannel::VACUUM.iter().fold(Matrix2::zeros(), |acc, &ch| {
        let (tp, tm) = transfer.pair(ch);
        let t = Vector2::new(tp, tm);
        acc + t * t.adjoint()
    })
}

fn signal_vector(transfer: &TransferSet) -> Vector2<Complex64> {
    let (tp, tm) = transfer.pair(InputChannel::SignalF);
    Vector2::new(tp, tm)
}

/// Smallest allowed `|R22/R11|` of the triangular factor of `T†`, a proxy for
/// `σ_min/σ_max` of the vacuum transfer matrix.
const NOISE_CONDITION_LIMIT: f64 = 1e-13;

/// Upper-triangular `R` with `N = R†R`, from a QR factorisation of `T†`,
/// where the columns of `T` are the vacuum transfer vectors. Working with
/// `T` avoids the cancellation in forming `N` when back-action is large.
fn noise_factor(transfer: &TransferSet) -> Result<Matrix2<Complex64>> {
    let mut t_adj = Matrix4x2::zeros();
    for (row, &ch) in InputChannel::VACUUM.iter().enumerate() {
        let (tp, tm) = transfer.pair(ch);
        t_adj[(row, 0)] = tp.conj();
        t_adj[(row, 1)] = tm.conj();
    }
    let r: Matrix2<Complex64> = t_adj.qr().r();
    check_triangular(r[(0, 0)].norm(), r[(1, 1)].norm(), transfer.omega)?;
    Ok(r)
}

fn check_triangular(r11: f64, r22: f64, omega: f64) -> Result<()> {
    if !(r11 > 0.0 && r22 > NOISE_CONDITION_LIMIT * r11) {
        return Err(Error::DegenerateNoise { omega });
    }
    Ok(())
}

/// Weights minimising the force-referred optical noise, `w* = N⁻¹ t_f`, and
/// the minimum `s_min = 1 / (t_f† N⁻¹ t_f)`. Weights are returned with unit norm.
pub fn optimal_weights(transfer: &TransferSet) -> Result<(CombinationWeights, f64)> {
    let omega = transfer.omega;
    let t_f = signal_vector(transfer);
    if t_f.norm() == 0.0 {
        return Err(Error::SignalBlind { label: "optimal".into(), omega });
    }
    let r = noise_factor(transfer)?;
    // N⁻¹ t_f = R⁻¹ R^-† t_f
    let y = r.adjoint().solve_lower_triangular(&t_f).ok_or(Error::DegenerateNoise { omega })?;
    let w = r.solve_upper_triangular(&y).ok_or(Error::DegenerateNoise { omega })?;
    let information = y.norm_squared();
    if !(information > 0.0) {
        return Err(Error::SignalBlind { label: "optimal".into(), omega });
    }
    let norm = w.norm();
    let weights = CombinationWeights::new(w[0] / norm, w[1] / norm, "optimal")?;
    Ok((weights, 1.0 / information))
}

/// Best channel restricted to real weights: maximises `wᵀ Re(t_f t_f†) w /
/// wᵀ Re(N) w` through the 2×2 generalised symmetric eigenproblem, with
/// `Re(N) = L Lᵀ` factored from the stacked real and imaginary parts of `T`.
pub fn optimal_real_weights(transfer: &TransferSet) -> Result<(CombinationWeights, f64)> {
    let omega = transfer.omega;
    let mut stacked = SMatrix::<f64, 8, 2>::zeros();
    for (row, &ch) in InputChannel::VACUUM.iter().enumerate() {
        let (tp, tm) = transfer.pair(ch);
        stacked[(2 * row, 0)] = tp.re;
        stacked[(2 * row, 1)] = tm.re;
        stacked[(2 * row + 1, 0)] = tp.im;
        stacked[(2 * row + 1, 1)] = tm.im;
    }
    let r: Matrix2<f64> = stacked.qr().r();
    check_triangular(r[(0, 0)].abs(), r[(1, 1)].abs(), omega)?;
    let l = r.transpose();
    let l_inv = l.try_inverse().ok_or(Error::DegenerateNoise { omega })?;
    let t_f = signal_vector(transfer);
    let b = (t_f * t_f.adjoint()).map(|z| z.re);
    let c = l_inv * b * l_inv.transpose();
    let c = (c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let (imax, lambda) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        (0, eig.eigenvalues[0])
    } else {
        (1, eig.eigenvalues[1])
    };
    if !(lambda > 0.0) {
        return Err(Error::SignalBlind { label: "optimal-real".into(), omega });
    }
    let y = eig.eigenvectors.column(imax).into_owned();
    let w = l_inv.transpose() * y;
    let norm = w.norm();
    let weights = CombinationWeights::real(w[0] / norm, w[1] / norm, "optimal-real")?;
    Ok((weights, 1.0 / lambda))
}

/// Input (`α`) and output (`β`) sideband combinations. The α weights act on
/// the incident quadratures `(a+, a−)`, the β weights on `(b+, b−)`; both use
/// `(+): (√g−, √g+)/√G+` and `(−): (√g+, −√g−)/√G+`.
#[derive(Clone, Debug, PartialEq)]
pub struct SidebandBasis {
    pub alpha_plus: CombinationWeights,
    pub alpha_minus: CombinationWeights,
    pub beta_plus: CombinationWeights,
    pub beta_minus: CombinationWeights,
}

pub fn alpha_beta_weights(couplings: &DerivedCouplings) -> Result<SidebandBasis> {
    let gain = couplings.photonic_gain;
    if !(gain > 0.0) {
        return Err(Error::UndefinedCombination);
    }
    let n = gain.sqrt();
    let sp = couplings.g_plus.max(0.0).sqrt() / n;
    let sm = couplings.g_minus.max(0.0).sqrt() / n;
    Ok(SidebandBasis {
        alpha_plus: CombinationWeights::real(sm, sp, "alpha-plus")?,
        alpha_minus: CombinationWeights::real(sp, -sm, "alpha-minus")?,
        beta_plus: CombinationWeights::real(sm, sp, "beta-plus")?,
        beta_minus: CombinationWeights::real(sp, -sm, "beta-minus")?,
    })
}

fn effective_damping(gamma_m: f64, couplings: &DerivedCouplings) -> Result<f64> {
    let width = gamma_m + couplings.optical_damping;
    if width <= 0.0 {
        return Err(Error::Unstable(format!("γm + G = {width} ≤ 0")));
    }
    Ok(width)
}

/// Coefficient `k` with which `β+` must be added to `β−` to cancel the
/// `α+` vacuum in the adiabatic, lossless limit at Ω → 0:
/// `k = 4 sqrt(g+ g−) / (γm + G) = 2 sqrt(G+² − G²) / (γm + G)`.
pub fn beta_coefficient(gamma_m: f64, couplings: &DerivedCouplings) -> Result<f64> {
    let width = effective_damping(gamma_m, couplings)?;
    Ok(4.0 * (couplings.g_plus * couplings.g_minus).max(0.0).sqrt() / width)
}

/// `2 sqrt(G² + G+²) / (γm + G)`. Agrees with [`beta_coefficient`] only when
/// `G = 0`; kept for comparison against the solver-derived coefficient.
pub fn beta_coefficient_sum_of_squares(gamma_m: f64, couplings: &DerivedCouplings) -> Result<f64> {
    let width = effective_damping(gamma_m, couplings)?;
    let (g, gp) = (couplings.optical_damping, couplings.photonic_gain);
    Ok(2.0 * (g * g + gp * gp).sqrt() / width)
}

/// Composite channel `β = β− + k β+` with `k` from [`beta_coefficient`].
/// At `G = γm` it is free of optical noise as Ω → 0.
pub fn beta_combination(params: &SystemParams, couplings: &DerivedCouplings) -> Result<CombinationWeights> {
    let basis = alpha_beta_weights(couplings)?;
    let k = beta_coefficient(params.gamma_m, couplings)?;
    basis.beta_minus.plus_scaled(k, &basis.beta_plus, "beta")
}

/// Signal amplitude of a channel per unit `f/√(2γm)`, without normalising
/// the weights: `|w†t_f| · √(2γm)`.
pub fn scaled_signal_gain(transfer: &TransferSet, weights: &CombinationWeights, gamma_m: f64) -> f64 {
    weights.response(transfer, InputChannel::SignalF).norm() * (2.0 * gamma_m).sqrt()
}

/// Gain `sqrt(G+/γm)` of the noise-free operating point `G = γm`.
pub fn amplification_gain(params: &SystemParams, couplings: &DerivedCouplings) -> Result<f64> {
    if !params.is_lossless() {
        return Err(Error::Misuse("amplification gain requires a lossless configuration".into()));
    }
    let g = couplings.optical_damping;
    if (g - params.gamma_m).abs() > 1e-9 * params.gamma_m {
        return Err(Error::Misuse(format!("amplification gain requires G = γm (G = {g}, γm = {})", params.gamma_m)));
    }
    Ok((couplings.photonic_gain / params.gamma_m).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceCase {
    /// `(γm² + Ω²) / 𝒦(Ω)`
    SymmetricLossless,
    /// `((γm − G)² + Ω²) / (2 G+)`, adiabatic.
    AsymmetricLossless,
    /// `(G² + Ω²) / (2 G+)` for `γm ≪ G`, with its lower bound and the SQL asymptote.
    AsymmetricBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum AnalyticReference {
    Density(f64),
    Bound { density: f64, lower_bound: f64, sql: f64 },
}

impl AnalyticReference {
    pub fn density(&self) -> f64 {
        match *self {
            AnalyticReference::Density(s) | AnalyticReference::Bound { density: s, .. } => s,
        }
    }
}

/// Closed-form optical force-referred densities.
pub fn analytic_reference(
    params: &SystemParams,
    couplings: &DerivedCouplings,
    omega: f64,
    case: ReferenceCase,
) -> Result<AnalyticReference> {
    if !params.is_lossless() {
        return Err(Error::Misuse(format!("{case:?} reference requires γe± = 0")));
    }
    let gm = params.gamma_m;
    match case {
        ReferenceCase::SymmetricLossless => {
            let k = couplings
                .k_factor(omega)
                .ok_or_else(|| Error::Misuse("symmetric reference requires η+ = η− and γ+ = γ−".into()))?;
            Ok(AnalyticReference::Density((gm * gm + omega * omega) / k))
        }
        ReferenceCase::AsymmetricLossless | ReferenceCase::AsymmetricBound => {
            let gp = couplings.photonic_gain;
            if !(gp > 0.0) {
                return Err(Error::UndefinedCombination);
            }
            let g = couplings.optical_damping;
            if case == ReferenceCase::AsymmetricLossless {
                Ok(AnalyticReference::Density(((gm - g).powi(2) + omega * omega) / (2.0 * gp)))
            } else {
                Ok(AnalyticReference::Bound {
                    density: (g * g + omega * omega) / (2.0 * gp),
                    lower_bound: (g * omega / gp).abs(),
                    sql: 2.0 * omega.abs(),
                })
            }
        }
    }
}

/// How a named channel obtains its weights at each frequency.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSpec {
    /// Frequency-dependent complex weights `N⁻¹ t_f`.
    Optimal,
    /// Best real weights at each frequency.
    OptimalReal,
    /// `β− + k β+`, fixed by the couplings.
    Beta,
    Fixed(CombinationWeights),
}

impl ChannelSpec {
    /// Resolves a built-in channel name.
    pub fn builtin(name: &str, couplings: &DerivedCouplings) -> Option<Result<ChannelSpec>> {
        let basis = || alpha_beta_weights(couplings);
        let spec = match name {
            "optimal" => Ok(ChannelSpec::Optimal),
            "optimal-real" => Ok(ChannelSpec::OptimalReal),
            "beta" => Ok(ChannelSpec::Beta),
            "difference" => Ok(ChannelSpec::Fixed(CombinationWeights::difference())),
            "sum" => Ok(ChannelSpec::Fixed(CombinationWeights::sum())),
            "plus" => CombinationWeights::real(1.0, 0.0, "plus").map(ChannelSpec::Fixed),
            "minus" => CombinationWeights::real(0.0, 1.0, "minus").map(ChannelSpec::Fixed),
            "beta-plus" => basis().map(|b| ChannelSpec::Fixed(b.beta_plus)),
            "beta-minus" => basis().map(|b| ChannelSpec::Fixed(b.beta_minus)),
            _ => return None,
        };
        Some(spec)
    }
}

pub const BUILTIN_CHANNELS: [&str; 9] = [
    "optimal",
    "optimal-real",
    "beta",
    "difference",
    "sum",
    "plus",
    "minus",
    "beta-plus",
    "beta-minus",
];

/// Noise budget of one channel at one frequency.
pub fn evaluate_channel(
    params: &SystemParams,
    couplings: &DerivedCouplings,
    transfer: &TransferSet,
    spec: &ChannelSpec,
    label: &str,
) -> Result<NoiseBudgetRow> {
    let weights = match spec {
        ChannelSpec::Optimal => optimal_weights(transfer)?.0,
        ChannelSpec::OptimalReal => optimal_real_weights(transfer)?.0,
        ChannelSpec::Beta => beta_combination(params, couplings)?,
        ChannelSpec::Fixed(w) => w.clone(),
    }
    .with_label(label);
    force_referred_psd(transfer, &weights, params.n_thermal, params.gamma_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freqdomain::output_transfer;
    use crate::model::derive_couplings;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn budget(p: &SystemParams, w: &CombinationWeights, omega: f64) -> NoiseBudgetRow {
        force_referred_psd(&output_transfer(p, omega).unwrap(), w, p.n_thermal, p.gamma_m).unwrap()
    }

    #[test]
    fn sql_examples() {
        assert_eq!(sql(0.0, 1.0), 2.0);
        assert_relative_eq!(sql(3.0, 3.0), 2.0 * 2f64.sqrt() * 3.0, max_relative = 1e-15);
        assert_relative_eq!(sql(1e6, 1.0), 2e6, max_relative = 1e-11);
        assert_eq!(sql(-4.0, 3.0), 10.0);
    }

    #[test]
    fn alpha_beta_examples() {
        let c = |gp: f64, gm: f64| DerivedCouplings {
            g_plus: gp,
            g_minus: gm,
            optical_damping: gp - gm,
            photonic_gain: gp + gm,
            c0: 1.0,
            symmetric: None,
        };
        let b = alpha_beta_weights(&c(2.0, 2.0)).unwrap();
        assert_relative_eq!(b.beta_plus.w_plus.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(b.beta_plus.w_minus.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(b.beta_minus.w_minus.re, -FRAC_1_SQRT_2, epsilon = 1e-15);

        let b = alpha_beta_weights(&c(1.0, 0.0)).unwrap();
        assert_eq!((b.beta_plus.w_plus.re, b.beta_plus.w_minus.re), (0.0, 1.0));

        let b = alpha_beta_weights(&c(3.0, 1.0)).unwrap();
        assert_relative_eq!(b.beta_minus.w_plus.re, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(b.beta_minus.w_minus.re, -0.5, epsilon = 1e-15);
        assert_eq!(b.alpha_minus.w_plus, b.beta_minus.w_plus);

        assert!(matches!(alpha_beta_weights(&c(0.0, 0.0)), Err(Error::UndefinedCombination)));
    }

    #[test]
    fn beta_coefficients() {
        // G = G+ = γm: g− = 0, no α+ admixture to cancel
        let p = SystemParams::lossless_from_rates(1.0, 0.0, 100.0, 100.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        assert_eq!(beta_coefficient(1.0, &d).unwrap(), 0.0);
        assert_relative_eq!(beta_coefficient_sum_of_squares(1.0, &d).unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        // G = 0: both forms agree
        let p = SystemParams::lossless_from_rates(2.0, 2.0, 100.0, 100.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        assert_relative_eq!(
            beta_coefficient(1.0, &d).unwrap(),
            beta_coefficient_sum_of_squares(1.0, &d).unwrap(),
            max_relative = 1e-14
        );
        // vanishing correction as G+ → 0 at G = 0
        let p = SystemParams::lossless_from_rates(1e-9, 1e-9, 100.0, 100.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        let beta = beta_combination(&p, &d).unwrap();
        let basis = alpha_beta_weights(&d).unwrap();
        assert!((beta.w_plus - basis.beta_minus.w_plus).norm() < 1e-8);
        assert!((beta.w_minus - basis.beta_minus.w_minus).norm() < 1e-8);
    }

    #[test]
    fn beta_channel_is_noise_free_at_matched_damping() {
        // G = γm = 1, G+ = 9
        let p = SystemParams::lossless_from_rates(5.0, 4.0, 300.0, 200.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        let beta = beta_combination(&p, &d).unwrap();
        let t = output_transfer(&p, 1e-6).unwrap();
        let row = force_referred_psd(&t, &beta, 0.0, 1.0).unwrap();
        let shot = 1.0 / budget(&p, &CombinationWeights::difference(), 1e-6).signal_gain.powi(2);
        assert!(row.s_total <= 1e-8 * shot, "s_total {} shot {}", row.s_total, shot);
        assert_relative_eq!(scaled_signal_gain(&t, &beta, 1.0), 3.0, max_relative = 1e-6);
        assert_relative_eq!(amplification_gain(&p, &d).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn amplification_gain_examples_and_misuse() {
        for (gp, expected) in [(1.0, 1.0), (100.0, 10.0)] {
            let p = SystemParams::lossless_from_rates((gp + 1.0) / 2.0, (gp - 1.0) / 2.0, 100.0, 100.0, 1.0);
            let d = derive_couplings(&p).unwrap();
            assert_relative_eq!(amplification_gain(&p, &d).unwrap(), expected, max_relative = 1e-12);
        }
        let p = SystemParams::lossless_from_rates(3.0, 1.0, 100.0, 100.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        assert!(matches!(amplification_gain(&p, &d), Err(Error::Misuse(_))));
        let p = SystemParams::lossless_from_rates(1.0, 0.0, 100.0, 100.0, 1.0).with_loss_ratio(0.01);
        let d = derive_couplings(&p).unwrap();
        assert!(matches!(amplification_gain(&p, &d), Err(Error::Misuse(_))));
    }

    #[test]
    fn full_solver_amplification_at_g_plus_25() {
        let p = SystemParams::lossless_from_rates(13.0, 12.0, 500.0, 500.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        let beta = beta_combination(&p, &d).unwrap();
        let t = output_transfer(&p, 1e-4).unwrap();
        assert!((scaled_signal_gain(&t, &beta, 1.0) - 5.0).abs() < 1e-4);
    }

    #[test]
    fn symmetric_difference_channel_shot_plus_back_action() {
        let (gamma, eta, c0) = (50.0, 0.4, 6.0);
        let p = SystemParams::symmetric_lossless(gamma, eta, c0, 1.0);
        let d = derive_couplings(&p).unwrap();
        let k0 = d.k_factor(0.0).unwrap();
        let row = budget(&p, &CombinationWeights::difference(), 0.0);
        assert_relative_eq!(row.s_total, 1.0 / k0 + k0, max_relative = 1e-12);
        let (_, s_min) = optimal_weights(&output_transfer(&p, 0.0).unwrap()).unwrap();
        assert_relative_eq!(s_min, 1.0 / k0, max_relative = 1e-12);
    }

    #[test]
    fn optimal_matches_symmetric_closed_form() {
        let p = SystemParams::symmetric_lossless(30.0, 0.2, 10.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        for omega in [0.0, 0.5, 1.0, 3.0, 10.0, 40.0] {
            let (_, s_min) = optimal_weights(&output_transfer(&p, omega).unwrap()).unwrap();
            let expected = analytic_reference(&p, &d, omega, ReferenceCase::SymmetricLossless).unwrap().density();
            assert_relative_eq!(s_min, expected, max_relative = 1e-11);
        }
    }

    #[test]
    fn optimal_weights_cancel_common_mode_back_action() {
        let p = SystemParams::symmetric_lossless(20.0, 0.5, 8.0, 1.0);
        for omega in [0.0, 0.3, 2.0, 15.0] {
            let t = output_transfer(&p, omega).unwrap();
            let (w, _) = optimal_weights(&t).unwrap();
            let a_p = w.response(&t, InputChannel::APlus);
            let a_m = w.response(&t, InputChannel::AMinus);
            let common = (a_p + a_m) * FRAC_1_SQRT_2;
            let differential = (a_p - a_m) * FRAC_1_SQRT_2;
            assert!(common.norm() <= 1e-9 * differential.norm(), "Ω={omega}: {common} vs {differential}");
        }
    }

    #[test]
    fn asymmetric_closed_form_in_adiabatic_limit() {
        let p = SystemParams::lossless_from_rates(4.0, 3.5, 200.0, 200.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        for omega in [0.0, 0.5, 2.0, 5.0] {
            let (_, s_min) = optimal_weights(&output_transfer(&p, omega).unwrap()).unwrap();
            let expected = analytic_reference(&p, &d, omega, ReferenceCase::AsymmetricLossless).unwrap().density();
            assert!((s_min - expected).abs() / expected <= 5.0 * (omega + 1.0) / 200.0);
        }
        // G = 0 reduces to the symmetric form
        let p = SystemParams::symmetric_lossless(200.0, 0.3, 7.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        let a = analytic_reference(&p, &d, 0.0, ReferenceCase::AsymmetricLossless).unwrap().density();
        let s = analytic_reference(&p, &d, 0.0, ReferenceCase::SymmetricLossless).unwrap().density();
        assert_relative_eq!(a, s, max_relative = 1e-12);
    }

    #[test]
    fn bound_case() {
        // γm ≪ G = Ω
        let p = SystemParams::lossless_from_rates(60.0, 40.0, 1e4, 1e4, 1e-3);
        let d = derive_couplings(&p).unwrap();
        match analytic_reference(&p, &d, 20.0, ReferenceCase::AsymmetricBound).unwrap() {
            AnalyticReference::Bound { density, lower_bound, sql } => {
                assert_relative_eq!(density, 400.0 / 100.0, max_relative = 1e-9);
                assert!(density >= lower_bound);
                assert_relative_eq!(sql, 40.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reference_misuse() {
        let p = SystemParams::lossless_from_rates(4.0, 3.5, 200.0, 100.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        assert!(matches!(
            analytic_reference(&p, &d, 0.0, ReferenceCase::SymmetricLossless),
            Err(Error::Misuse(_))
        ));
        let lossy = p.clone().with_loss_ratio(0.01);
        let d = derive_couplings(&lossy).unwrap();
        assert!(analytic_reference(&lossy, &d, 0.0, ReferenceCase::AsymmetricLossless).is_err());
    }

    #[test]
    fn decoupled_system_is_signal_blind() {
        let p = SystemParams::default().with_c0(1.0);
        let t = output_transfer(&p, 0.5).unwrap();
        assert!(matches!(optimal_weights(&t), Err(Error::SignalBlind { .. })));
        assert!(matches!(
            force_referred_psd(&t, &CombinationWeights::difference(), 0.0, 1.0),
            Err(Error::SignalBlind { .. })
        ));
    }

    #[test]
    fn beta_plus_blind_at_dc() {
        let p = SystemParams::lossless_from_rates(2.0, 2.0, 100.0, 100.0, 1.0);
        let d = derive_couplings(&p).unwrap();
        let basis = alpha_beta_weights(&d).unwrap();
        let t = output_transfer(&p, 0.0).unwrap();
        assert!(matches!(force_referred_psd(&t, &basis.beta_plus, 0.0, 1.0), Err(Error::SignalBlind { .. })));
    }

    #[test]
    fn real_optimum_between_complex_optimum_and_fixed_channels() {
        let p = SystemParams::lossless_from_rates(3.0, 1.0, 50.0, 80.0, 1.0).with_loss_ratio(0.02);
        for omega in [0.0, 1.0, 5.0] {
            let t = output_transfer(&p, omega).unwrap();
            let (_, s_c) = optimal_weights(&t).unwrap();
            let (w_r, s_r) = optimal_real_weights(&t).unwrap();
            assert!(s_c <= s_r * (1.0 + 1e-12));
            let row = force_referred_psd(&t, &w_r, 0.0, 1.0).unwrap();
            assert_relative_eq!(row.s_total, s_r, max_relative = 1e-9);
            for w in [CombinationWeights::difference(), CombinationWeights::sum()] {
                if let Ok(row) = force_referred_psd(&t, &w, 0.0, 1.0) {
                    assert!(s_r <= row.s_total * (1.0 + 1e-12));
                }
            }
        }
        // at Ω = 0 everything is real, so both optima coincide
        let t = output_transfer(&p, 0.0).unwrap();
        assert_relative_eq!(optimal_weights(&t).unwrap().1, optimal_real_weights(&t).unwrap().1, max_relative = 1e-9);
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(CombinationWeights::real(0.0, 0.0, "x").is_err());
        assert!(CombinationWeights::real(f64::NAN, 1.0, "x").is_err());
    }

    fn random_params() -> impl Strategy<Value = SystemParams> {
        (0.05..2.0f64, 0.05..2.0f64, 5.0..300.0f64, 5.0..300.0f64, 0.0..0.05f64, 0.1..3.0f64, 0.1..5.0f64, 0.0..50.0f64)
            .prop_map(|(ep, em, gp, gm, loss, gmech, c0, n)| SystemParams {
                gamma0_plus: gp,
                gamma0_minus: gm,
                gammae_plus: loss * gp,
                gammae_minus: 0.5 * loss * gm,
                gamma_m: gmech,
                eta_plus: ep,
                eta_minus: em,
                n_thermal: n,
                ..Default::default()
            }
            .with_c0(c0))
            .prop_filter("stable", |p| crate::freqdomain::check_stability(p).is_ok())
    }

    proptest! {
        #[test]
        fn optimizer_dominates_any_channel(
            p in random_params(), omega in 0.0..20.0f64,
            wr in -1.0..1.0f64, wi in -1.0..1.0f64, vr in -1.0..1.0f64, vi in -1.0..1.0f64,
        ) {
            let t = output_transfer(&p, omega).unwrap();
            let (w_opt, s_min) = optimal_weights(&t).unwrap();
            let at_opt = force_referred_psd(&t, &w_opt, p.n_thermal, p.gamma_m).unwrap();
            prop_assert!((at_opt.s_total - s_min).abs() <= 1e-9 * s_min);
            if let Ok(w) = CombinationWeights::new(Complex64::new(wr, wi), Complex64::new(vr, vi), "any") {
                if let Ok(row) = force_referred_psd(&t, &w, p.n_thermal, p.gamma_m) {
                    prop_assert!(s_min <= row.s_total * (1.0 + 1e-9));
                }
            }
        }

        #[test]
        fn densities_invariant_under_weight_scaling(
            p in random_params(), omega in 0.0..20.0f64,
            wr in -1.0..1.0f64, vr in -1.0..1.0f64, cr in -3.0..3.0f64, ci in -3.0..3.0f64,
        ) {
            let c = Complex64::new(cr, ci);
            prop_assume!(c.norm() > 1e-3);
            let t = output_transfer(&p, omega).unwrap();
            if let Ok(w) = CombinationWeights::real(wr, vr, "w") {
                if let Ok(a) = force_referred_psd(&t, &w, p.n_thermal, p.gamma_m) {
                    let b = force_referred_psd(&t, &w.scaled(c), p.n_thermal, p.gamma_m).unwrap();
                    for (x, y) in [(a.s_total, b.s_total), (a.s_thermal, b.s_thermal), (a.signal_gain, b.signal_gain), (a.s_aplus, b.s_aplus)] {
                        prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300));
                    }
                }
            }
        }

        #[test]
        fn thermal_refers_to_itself(p in random_params(), omega in 0.0..20.0f64, wr in -1.0..1.0f64, vr in -1.0..1.0f64) {
            let t = output_transfer(&p, omega).unwrap();
            let expected = 2.0 * p.gamma_m * (2.0 * p.n_thermal + 1.0);
            let (w_opt, _) = optimal_weights(&t).unwrap();
            let mut channels = vec![w_opt, CombinationWeights::difference()];
            if let Ok(w) = CombinationWeights::real(wr, vr, "w") { channels.push(w); }
            for w in channels {
                if let Ok(row) = force_referred_psd(&t, &w, p.n_thermal, p.gamma_m) {
                    prop_assert!((row.s_thermal - expected).abs() <= 1e-12 * expected);
                    let vac: f64 = row.s_aplus + row.s_aminus + row.s_eplus + row.s_eminus;
                    prop_assert!((row.s_total - vac).abs() <= 1e-15 * vac);
                    prop_assert!(row.s_aplus >= 0.0 && row.s_eminus >= 0.0);
                }
            }
        }

        #[test]
        fn loss_never_helps(
            gp in 1.0..5.0f64, gm in 0.0..4.0f64, gamma in 50.0..300.0f64,
            loss_a in 0.0..0.05f64, dloss in 0.0..0.05f64, omega in 0.0..10.0f64,
        ) {
            prop_assume!(1.0 + gp - gm > 0.1);
            let base = SystemParams::lossless_from_rates(gp, gm, gamma, 0.8 * gamma, 1.0);
            let s = |ratio: f64| {
                let p = base.clone().with_loss_ratio(ratio);
                optimal_weights(&output_transfer(&p, omega).unwrap()).unwrap().1
            };
            prop_assert!(s(loss_a) <= s(loss_a + dloss) * (1.0 + 1e-10));
        }

        #[test]
        fn more_power_lowers_symmetric_optimum(gamma in 10.0..1e3f64, eta in 0.01..1.0f64, c0 in 0.1..10.0f64, f in 1.01..10.0f64, omega in 0.0..10.0f64) {
            let s = |c: f64| {
                let p = SystemParams::symmetric_lossless(gamma, eta, c, 1.0);
                optimal_weights(&output_transfer(&p, omega).unwrap()).unwrap().1
            };
            prop_assert!(s(c0 * f) < s(c0));
        }
    }
}
