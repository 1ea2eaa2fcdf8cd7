//! Time-domain check of the frequency-domain solver.
//!
//! The amplitude-quadrature equations are integrated as real-valued SDEs with
//! Euler–Maruyama. A white input with single-sided PSD `S` has correlator
//! `(S/2) δ(t − t')`, so each step draws increments of variance `S dt / 2`.
//! Outputs are block-averaged over the recording interval, which is what an
//! integrating detector does and keeps the white part of the spectrum exact
//! after decimation.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::combine::CombinationWeights;
use crate::error::{Error, Result};
use crate::freqdomain::{check_stability, output_transfer, InputChannel};
use crate::model::{derive_couplings, SystemParams};

/// Largest allowed `dt · max(γ±, γm + |G|)`.
pub const MAX_STEP_RATE_PRODUCT: f64 = 0.01;
/// Smallest allowed `total_time · γm`.
pub const MIN_MECHANICAL_TIMES: f64 = 200.0;
pub const MIN_SEGMENTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    None,
    /// `f(t) = amplitude · cos(omega t)`
    Sinusoid { amplitude: f64, omega: f64 },
    /// Rectangular force of length `duration`, centred in the recorded run.
    Pulse { amplitude: f64, duration: f64 },
}

/// Which stochastic inputs are driven. Disabling channels isolates single
/// transfer paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputMask {
    pub a_plus: bool,
    pub a_minus: bool,
    pub e_plus: bool,
    pub e_minus: bool,
    pub thermal: bool,
}

impl Default for InputMask {
    fn default() -> Self {
        InputMask { a_plus: true, a_minus: true, e_plus: true, e_minus: true, thermal: true }
    }
}

impl InputMask {
    pub fn only(ch: InputChannel) -> Self {
        let mut m = InputMask { a_plus: false, a_minus: false, e_plus: false, e_minus: false, thermal: false };
        match ch {
            InputChannel::APlus => m.a_plus = true,
            InputChannel::AMinus => m.a_minus = true,
            InputChannel::EPlus => m.e_plus = true,
            InputChannel::EMinus => m.e_minus = true,
            InputChannel::ThermalQ => m.thermal = true,
            InputChannel::SignalF => {}
        }
        m
    }

    pub fn enabled(&self, ch: InputChannel) -> bool {
        match ch {
            InputChannel::APlus => self.a_plus,
            InputChannel::AMinus => self.a_minus,
            InputChannel::EPlus => self.e_plus,
            InputChannel::EMinus => self.e_minus,
            InputChannel::ThermalQ => self.thermal,
            InputChannel::SignalF => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    /// Recorded duration (a settling period is simulated before it).
    pub total_time: f64,
    pub seed: u64,
    #[serde(default = "no_signal")]
    pub signal: Signal,
    /// Spacing of the recorded, block-averaged samples; rounded to a whole
    /// number of steps.
    pub record_interval: f64,
    #[serde(default)]
    pub inputs: InputMask,
}

fn no_signal() -> Signal {
    Signal::None
}

impl SimConfig {
    /// Step `dt_factor / max rate`, `total_time` in units of `1/γm`, recording
    /// every `0.01/γm`.
    pub fn for_params(params: &SystemParams, dt_factor: f64, mechanical_times: f64, seed: u64) -> Result<Self> {
        let max_rate = max_rate(params)?;
        Ok(SimConfig {
            dt: dt_factor / max_rate,
            total_time: mechanical_times / params.gamma_m,
            seed,
            signal: Signal::None,
            record_interval: 0.01 / params.gamma_m,
            inputs: InputMask::default(),
        })
    }

    pub fn with_signal(mut self, signal: Signal) -> Self {
        self.signal = signal;
        self
    }

    pub fn with_inputs(mut self, inputs: InputMask) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        let rate = max_rate(params)?;
        if !(self.dt > 0.0) || self.dt * rate > MAX_STEP_RATE_PRODUCT * (1.0 + 1e-9) {
            return Err(Error::config(
                "simulation.dt",
                format!("dt · max rate = {} exceeds {MAX_STEP_RATE_PRODUCT}", self.dt * rate),
            ));
        }
        if !(self.total_time * params.gamma_m >= MIN_MECHANICAL_TIMES * (1.0 - 1e-9)) {
            return Err(Error::config(
                "simulation.total_time",
                format!("total_time · γm = {} below {MIN_MECHANICAL_TIMES}", self.total_time * params.gamma_m),
            ));
        }
        if !(self.record_interval >= self.dt) {
            return Err(Error::config("simulation.record_interval", "must be at least dt"));
        }
        Ok(())
    }
}

fn max_rate(params: &SystemParams) -> Result<f64> {
    let c = derive_couplings(params)?;
    Ok(params
        .gamma_plus()
        .max(params.gamma_minus())
        .max(params.gamma_m + c.optical_damping.abs()))
}

/// Block-averaged output quadratures and mechanical amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    /// Spacing of the recorded samples.
    pub sample_interval: f64,
    pub b_plus: Vec<f64>,
    pub b_minus: Vec<f64>,
    pub d: Vec<f64>,
}

impl SimOutput {
    /// Time series of a real-weighted channel `w+ b+ + w− b−`.
    pub fn channel(&self, weights: &CombinationWeights) -> Result<Vec<f64>> {
        if !weights.is_real() {
            return Err(Error::Misuse("time-domain channels need real weights".into()));
        }
        let (wp, wm) = (weights.w_plus.re, weights.w_minus.re);
        Ok(self.b_plus.iter().zip(&self.b_minus).map(|(p, m)| wp * p + wm * m).collect())
    }
}

/// Euler–Maruyama integration of
///
/// ```text
/// dc±/dt = −γ± c± ∓ η± C0 d + √(2γ0±) a± + √(2γe±) e±
/// dd/dt  = −γm d + C0 (η+ c+ + η− c−) + √(2γm) q + f
/// b±     = −a± + √(2γ0±) c±
/// ```
pub fn simulate(params: &SystemParams, cfg: &SimConfig) -> Result<SimOutput> {
    params.validate()?;
    let couplings = derive_couplings(params)?;
    if params.gamma_m + couplings.optical_damping <= 0.0 {
        return Err(Error::Unstable(format!(
            "γm + G = {} ≤ 0, refusing to simulate",
            params.gamma_m + couplings.optical_damping
        )));
    }
    check_stability(params)?;
    cfg.validate(params)?;

    let dt = cfg.dt;
    let block = ((cfg.record_interval / dt).round() as usize).max(1);
    let samples = (cfg.total_time / (block as f64 * dt)).round() as usize;
    let settle_steps = (20.0 / ((params.gamma_m + couplings.optical_damping) * dt)).ceil() as usize;
    let sample_interval = block as f64 * dt;

    let (gp, gm, gmech) = (params.gamma_plus(), params.gamma_minus(), params.gamma_m);
    let kp = params.eta_plus * couplings.c0;
    let km = params.eta_minus * couplings.c0;
    let (c0p, c0m) = (params.gamma0_plus, params.gamma0_minus);
    let out_p = (2.0 * c0p).sqrt();
    let out_m = (2.0 * c0m).sqrt();

    // increment amplitudes: √(S dt / 2) times the drive coefficient
    let vac = (0.5 * dt).sqrt();
    let mask = |on: bool| if on { 1.0 } else { 0.0 };
    let sa_p = mask(cfg.inputs.a_plus) * vac;
    let sa_m = mask(cfg.inputs.a_minus) * vac;
    let se_p = mask(cfg.inputs.e_plus) * vac * (2.0 * params.gammae_plus).sqrt();
    let se_m = mask(cfg.inputs.e_minus) * vac * (2.0 * params.gammae_minus).sqrt();
    let sq = mask(cfg.inputs.thermal) * ((2.0 * params.n_thermal + 1.0) * 0.5 * dt).sqrt() * (2.0 * gmech).sqrt();
    let (in_p, in_m) = (out_p, out_m);

    let total_time = samples as f64 * sample_interval;
    let force = |t: f64| match cfg.signal {
        Signal::None => 0.0,
        Signal::Sinusoid { amplitude, omega } => amplitude * (omega * t).cos(),
        Signal::Pulse { amplitude, duration } => {
            let start = 0.5 * (total_time - duration);
            if t >= start && t < start + duration {
                amplitude
            } else {
                0.0
            }
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let (mut cp, mut cm, mut d) = (0.0f64, 0.0f64, 0.0f64);

    let mut step = |t: f64, cp: &mut f64, cm: &mut f64, d: &mut f64| -> (f64, f64) {
        let wa_p = sa_p * normal();
        let wa_m = sa_m * normal();
        let we_p = se_p * normal();
        let we_m = se_m * normal();
        let wq = sq * normal();
        let (p, m, x) = (*cp, *cm, *d);
        *cp = p + (-gp * p - kp * x) * dt + in_p * wa_p + we_p;
        *cm = m + (-gm * m + km * x) * dt + in_m * wa_m + we_m;
        *d = x + (-gmech * x + kp * p + km * m + force(t)) * dt + wq;
        // ∫ b dt over the step: −∫a dt + √(2γ0) c dt
        (-wa_p + out_p * p * dt, -wa_m + out_m * m * dt)
    };

    for _ in 0..settle_steps {
        step(-1.0, &mut cp, &mut cm, &mut d);
    }

    let mut b_plus = Vec::with_capacity(samples);
    let mut b_minus = Vec::with_capacity(samples);
    let mut d_series = Vec::with_capacity(samples);
    let mut t = 0.0;
    for _ in 0..samples {
        let (mut acc_p, mut acc_m, mut acc_d) = (0.0, 0.0, 0.0);
        for _ in 0..block {
            acc_d += d * dt;
            let (ip, im) = step(t, &mut cp, &mut cm, &mut d);
            acc_p += ip;
            acc_m += im;
            t += dt;
        }
        b_plus.push(acc_p / sample_interval);
        b_minus.push(acc_m / sample_interval);
        d_series.push(acc_d / sample_interval);
    }
    Ok(SimOutput { sample_interval, b_plus, b_minus, d: d_series })
}

/// Welch estimate of a single-sided PSD with 95% confidence intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsdEstimate {
    /// Angular frequencies of the bins (DC and Nyquist omitted).
    pub omega: Vec<f64>,
    pub psd: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub segments: usize,
    /// Equivalent degrees of freedom of each bin.
    pub dof: f64,
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
        .collect()
}

/// Averaged-periodogram PSD with a Hann window and per-segment mean removal.
pub fn psd_welch(series: &[f64], dt: f64, segment_length: usize, overlap_fraction: f64) -> Result<PsdEstimate> {
    if segment_length < 4 {
        return Err(Error::config("segment_length", "must be at least 4 samples"));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::config("overlap_fraction", "must be in [0, 1)"));
    }
    let hop = ((segment_length as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    let segments = if series.len() >= segment_length { (series.len() - segment_length) / hop + 1 } else { 0 };
    if segments < MIN_SEGMENTS {
        return Err(Error::InsufficientData { segments, required: MIN_SEGMENTS });
    }

    let window = hann(segment_length);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_length);
    let bins = segment_length / 2;
    let mut accum = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_length];
    for s in 0..segments {
        let seg = &series[s * hop..s * hop + segment_length];
        let mean = seg.iter().sum::<f64>() / segment_length as f64;
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in accum.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 2.0 * dt / (window_power * segments as f64);

    let dof = welch_dof(&window, hop, segments);
    let chi = ChiSquared::new(dof).map_err(|e| Error::Misuse(e.to_string()))?;
    let (q_lo, q_hi) = (chi.inverse_cdf(0.025), chi.inverse_cdf(0.975));

    let df = 2.0 * std::f64::consts::PI / (segment_length as f64 * dt);
    let mut est = PsdEstimate { omega: vec![], psd: vec![], ci_low: vec![], ci_high: vec![], segments, dof };
    for (k, a) in accum.iter().enumerate().skip(1) {
        let p = a * scale;
        est.omega.push(k as f64 * df);
        est.psd.push(p);
        est.ci_low.push(dof * p / q_hi);
        est.ci_high.push(dof * p / q_lo);
    }
    Ok(est)
}

/// Equivalent degrees of freedom of a Welch average of `segments` windows
/// shifted by `hop`, accounting for the correlation of overlapping segments.
fn welch_dof(window: &[f64], hop: usize, segments: usize) -> f64 {
    let power: f64 = window.iter().map(|w| w * w).sum();
    let mut corr = 0.0;
    for j in 1..segments {
        let shift = j * hop;
        if shift >= window.len() {
            break;
        }
        let rho: f64 = window.iter().zip(&window[shift..]).map(|(a, b)| a * b).sum::<f64>() / power;
        corr += (1.0 - j as f64 / segments as f64) * rho * rho;
    }
    2.0 * segments as f64 / (1.0 + 2.0 * corr)
}

/// Amplitude of the spectral line at `omega`, by demodulation over the whole record.
pub fn line_amplitude(series: &[f64], sample_interval: f64, omega: f64) -> f64 {
    let sum: Complex64 = series
        .iter()
        .enumerate()
        .map(|(k, &x)| x * Complex64::from_polar(1.0, -omega * (k as f64 + 0.5) * sample_interval))
        .sum();
    2.0 * sum.norm() / series.len() as f64
}

/// An analytic output PSD sampled on a frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticSpectrum {
    pub omega: Vec<f64>,
    pub psd: Vec<f64>,
}

impl AnalyticSpectrum {
    /// Channel output PSD from budget rows, `(s_total + s_thermal) · gain²`.
    pub fn from_rows(rows: &[crate::combine::NoiseBudgetRow]) -> Self {
        AnalyticSpectrum {
            omega: rows.iter().map(|r| r.omega).collect(),
            psd: rows.iter().map(|r| r.output_psd()).collect(),
        }
    }

    fn at(&self, omega: f64) -> Option<f64> {
        let n = self.omega.len();
        if n == 0 || omega < self.omega[0] || omega > self.omega[n - 1] {
            return None;
        }
        if n == 1 {
            return Some(self.psd[0]);
        }
        let i = self.omega.partition_point(|&w| w <= omega).clamp(1, n - 1);
        let t = (omega - self.omega[i - 1]) / (self.omega[i] - self.omega[i - 1]);
        Some(self.psd[i - 1] * (1.0 - t) + self.psd[i] * t)
    }
}

/// Output PSD `Σ_i S_i |w†t_i|²` of a channel, restricted to the enabled inputs.
pub fn analytic_output_spectrum(
    params: &SystemParams,
    weights: &CombinationWeights,
    omegas: &[f64],
    inputs: &InputMask,
) -> Result<AnalyticSpectrum> {
    let psd = omegas
        .iter()
        .map(|&w| {
            let t = output_transfer(params, w)?;
            Ok(InputChannel::ALL
                .iter()
                .filter(|&&ch| inputs.enabled(ch))
                .map(|&ch| ch.spectral_density(params.n_thermal).unwrap_or(0.0) * weights.response(&t, ch).norm_sqr())
                .sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AnalyticSpectrum { omega: omegas.to_vec(), psd })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinDeviation {
    pub omega: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub relative_deviation: f64,
    pub inside_ci: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub bins: Vec<BinDeviation>,
    pub fraction_inside: f64,
    pub max_relative_deviation: f64,
    pub mean_relative_deviation: f64,
}

/// Compares an analytic spectrum with a Welch estimate bin by bin. Bins
/// outside `band` (angular frequency) or outside the analytic grid are skipped.
pub fn compare(analytic: &AnalyticSpectrum, empirical: &PsdEstimate, band: Option<(f64, f64)>) -> DeviationReport {
    let mut bins = Vec::new();
    for k in 0..empirical.omega.len() {
        let w = empirical.omega[k];
        if let Some((lo, hi)) = band {
            if w < lo || w > hi {
                continue;
            }
        }
        let Some(a) = analytic.at(w) else { continue };
        let e = empirical.psd[k];
        let relative_deviation = if a != 0.0 { (e - a) / a } else if e == 0.0 { 0.0 } else { f64::INFINITY };
        bins.push(BinDeviation {
            omega: w,
            analytic: a,
            empirical: e,
            ci_low: empirical.ci_low[k],
            ci_high: empirical.ci_high[k],
            relative_deviation,
            inside_ci: a >= empirical.ci_low[k] && a <= empirical.ci_high[k],
        });
    }
    DeviationReport::from_bins(bins)
}

impl DeviationReport {
    pub fn from_bins(bins: Vec<BinDeviation>) -> Self {
        let n = bins.len().max(1) as f64;
        DeviationReport {
            fraction_inside: bins.iter().filter(|b| b.inside_ci).count() as f64 / n,
            max_relative_deviation: bins.iter().map(|b| b.relative_deviation.abs()).fold(0.0, f64::max),
            mean_relative_deviation: bins.iter().map(|b| b.relative_deviation.abs()).sum::<f64>() / n,
            bins,
        }
    }

    /// Bins of independent runs pooled into one report.
    pub fn pooled(reports: &[DeviationReport]) -> Self {
        Self::from_bins(reports.iter().flat_map(|r| r.bins.iter().cloned()).collect())
    }
}

/// Welch settings and comparison band for [`cross_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelchSettings {
    /// Segment duration in units of `1/γm`.
    pub segment_time: f64,
    pub overlap: f64,
    /// Comparison band `[lo, hi]` in angular frequency.
    pub band: (f64, f64),
}

impl Default for WelchSettings {
    fn default() -> Self {
        WelchSettings { segment_time: 50.0, overlap: 0.5, band: (0.2, 10.0) }
    }
}

/// Simulated channel PSD against the analytic PSD of `analytic_params`
/// (normally the simulated parameters themselves; a different set serves as
/// a negative control).
pub fn cross_check(
    simulated: &SimOutput,
    weights: &CombinationWeights,
    analytic_params: &SystemParams,
    inputs: &InputMask,
    gamma_m: f64,
    welch: &WelchSettings,
) -> Result<DeviationReport> {
    let series = simulated.channel(weights)?;
    let dt = simulated.sample_interval;
    let segment_length = (welch.segment_time / (gamma_m * dt)).round() as usize;
    if (segment_length as f64) < 10.0 / (gamma_m * dt) {
        return Err(Error::config("simulation.segment_time", "segments must span at least 10/γm"));
    }
    let est = psd_welch(&series, dt, segment_length, welch.overlap)?;
    let omegas: Vec<f64> =
        est.omega.iter().copied().filter(|w| *w >= welch.band.0 && *w <= welch.band.1).collect();
    let analytic = analytic_output_spectrum(analytic_params, weights, &omegas, inputs)?;
    Ok(compare(&analytic, &est, Some(welch.band)))
}
