//! Frequency-domain solution of the linearised amplitude-quadrature equations.
//!
//! Time dependence is `e^{−iΩt}`, so `d/dt → −iΩ`. At each Ω the 3×3 system
//!
//! ```text
//! (γ+ − iΩ) c+ + η+ C0 d             = √(2γ0+) a+ + √(2γe+) e+
//! (γ− − iΩ) c− − η− C0 d             = √(2γ0−) a− + √(2γe−) e−
//! (γm − iΩ) d  − C0 (η+ c+ + η− c−)  = √(2γm) q + f
//! ```
//!
//! is inverted once and every input channel is read off a column of the
//! inverse. Outputs follow `b± = −a± + √(2γ0±) c±`.

use std::ops::{Index, IndexMut};

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{derive_couplings, SystemParams};

/// Relative determinant threshold below which the system counts as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// Independent inputs driving the amplitude quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum InputChannel {
    APlus,
    AMinus,
    EPlus,
    EMinus,
    ThermalQ,
    SignalF,
}

impl InputChannel {
    pub const ALL: [InputChannel; 6] = [
        InputChannel::APlus,
        InputChannel::AMinus,
        InputChannel::EPlus,
        InputChannel::EMinus,
        InputChannel::ThermalQ,
        InputChannel::SignalF,
    ];

    pub const VACUUM: [InputChannel; 4] =
        [InputChannel::APlus, InputChannel::AMinus, InputChannel::EPlus, InputChannel::EMinus];

    fn index(self) -> usize {
        self as usize
    }

    pub fn is_vacuum(self) -> bool {
        matches!(self, InputChannel::APlus | InputChannel::AMinus | InputChannel::EPlus | InputChannel::EMinus)
    }

    /// Single-sided symmetrised quadrature PSD: 1 for vacuum, `2 n_T + 1`
    /// for the thermal force, none for the deterministic signal.
    pub fn spectral_density(self, n_thermal: f64) -> Option<f64> {
        match self {
            InputChannel::ThermalQ => Some(2.0 * n_thermal + 1.0),
            InputChannel::SignalF => None,
            _ => Some(1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InputChannel::APlus => "a_plus",
            InputChannel::AMinus => "a_minus",
            InputChannel::EPlus => "e_plus",
            InputChannel::EMinus => "e_minus",
            InputChannel::ThermalQ => "thermal_q",
            InputChannel::SignalF => "signal_f",
        }
    }
}

/// A value per input channel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PerChannel<T>(pub [T; 6]);

impl<T> Index<InputChannel> for PerChannel<T> {
    type Output = T;
    fn index(&self, ch: InputChannel) -> &T {
        &self.0[ch.index()]
    }
}

impl<T> IndexMut<InputChannel> for PerChannel<T> {
    fn index_mut(&mut self, ch: InputChannel) -> &mut T {
        &mut self.0[ch.index()]
    }
}

impl<T: Copy> PerChannel<T> {
    pub fn iter(&self) -> impl Iterator<Item = (InputChannel, T)> + '_ {
        InputChannel::ALL.iter().map(move |&ch| (ch, self[ch]))
    }
}

/// Response of the intracavity amplitudes to a unit amplitude on each input.
#[derive(Clone, Debug, PartialEq)]
pub struct IntracavityTransfer {
    pub omega: f64,
    pub c_plus: PerChannel<Complex64>,
    pub c_minus: PerChannel<Complex64>,
    pub d: PerChannel<Complex64>,
}

/// Output-quadrature transfer coefficients at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferSet {
    pub omega: f64,
    pub b_plus: PerChannel<Complex64>,
    pub b_minus: PerChannel<Complex64>,
}

impl TransferSet {
    /// `(t_b+, t_b−)` for one input channel.
    pub fn pair(&self, ch: InputChannel) -> (Complex64, Complex64) {
        (self.b_plus[ch], self.b_minus[ch])
    }
}

fn coupling_matrix(params: &SystemParams, c0: f64, omega: f64) -> Matrix3<Complex64> {
    let jw = Complex64::new(0.0, omega);
    let c = |x: f64| Complex64::new(x, 0.0);
    let kp = params.eta_plus * c0;
    let km = params.eta_minus * c0;
    Matrix3::new(
        c(params.gamma_plus()) - jw, c(0.0), c(kp),
        c(0.0), c(params.gamma_minus()) - jw, c(-km),
        c(-kp), c(-km), c(params.gamma_m) - jw,
    )
}

/// Solves the intracavity system at `omega`.
pub fn system_solve(params: &SystemParams, omega: f64) -> Result<IntracavityTransfer> {
    params.validate()?;
    let c0 = params.c0()?;
    let m = coupling_matrix(params, c0, omega);

    // Scale for the singularity test: product of row 1-norms bounds |det|.
    let scale: f64 = (0..3).map(|r| m.row(r).iter().map(|z| z.norm()).sum::<f64>()).product();
    let det = m.determinant();
    if det.norm() < SINGULAR_TOLERANCE * scale {
        return Err(Error::Degenerate { omega, det: det.norm(), threshold: SINGULAR_TOLERANCE * scale });
    }
    let inv = m.try_inverse().ok_or(Error::Degenerate { omega, det: det.norm(), threshold: SINGULAR_TOLERANCE * scale })?;

    // Source amplitude of each channel and the equation it drives.
    let drives = [
        (InputChannel::APlus, 0, (2.0 * params.gamma0_plus).sqrt()),
        (InputChannel::AMinus, 1, (2.0 * params.gamma0_minus).sqrt()),
        (InputChannel::EPlus, 0, (2.0 * params.gammae_plus).sqrt()),
        (InputChannel::EMinus, 1, (2.0 * params.gammae_minus).sqrt()),
        (InputChannel::SignalF, 2, 1.0),
    ];
    let mut out = IntracavityTransfer {
        omega,
        c_plus: PerChannel::default(),
        c_minus: PerChannel::default(),
        d: PerChannel::default(),
    };
    for (ch, eq, amp) in drives {
        out.c_plus[ch] = inv[(0, eq)] * amp;
        out.c_minus[ch] = inv[(1, eq)] * amp;
        out.d[ch] = inv[(2, eq)] * amp;
    }
    // q and f enter the same equation; keep the ratio exact.
    let k = (2.0 * params.gamma_m).sqrt();
    out.c_plus[InputChannel::ThermalQ] = out.c_plus[InputChannel::SignalF] * k;
    out.c_minus[InputChannel::ThermalQ] = out.c_minus[InputChannel::SignalF] * k;
    out.d[InputChannel::ThermalQ] = out.d[InputChannel::SignalF] * k;
    Ok(out)
}

/// Output-quadrature transfer coefficients `b± = −a± + √(2γ0±) c±`.
pub fn output_transfer(params: &SystemParams, omega: f64) -> Result<TransferSet> {
    let intra = system_solve(params, omega)?;
    let kp = (2.0 * params.gamma0_plus).sqrt();
    let km = (2.0 * params.gamma0_minus).sqrt();
    let mut b_plus = PerChannel::default();
    let mut b_minus = PerChannel::default();
    for ch in InputChannel::ALL {
        b_plus[ch] = intra.c_plus[ch] * kp;
        b_minus[ch] = intra.c_minus[ch] * km;
    }
    let k = (2.0 * params.gamma_m).sqrt();
    b_plus[InputChannel::ThermalQ] = b_plus[InputChannel::SignalF] * k;
    b_minus[InputChannel::ThermalQ] = b_minus[InputChannel::SignalF] * k;
    b_plus[InputChannel::APlus] -= 1.0;
    b_minus[InputChannel::AMinus] -= 1.0;
    Ok(TransferSet { omega, b_plus, b_minus })
}

/// Mechanical half-linewidth including optical damping, `γm + G`, valid when
/// the optical modes follow the mechanics adiabatically.
pub fn effective_linewidth(params: &SystemParams) -> Result<f64> {
    let couplings = derive_couplings(params)?;
    let width = params.gamma_m + couplings.optical_damping;
    if width <= 0.0 {
        return Err(Error::Unstable(format!(
            "γm + G = {width} ≤ 0: optical anti-damping exceeds mechanical damping"
        )));
    }
    Ok(width)
}

/// Coefficients `[a0, a1, a2]` of the monic characteristic polynomial
/// `s³ + a2 s² + a1 s + a0` of the homogeneous amplitude-quadrature dynamics.
pub fn characteristic_polynomial(params: &SystemParams) -> Result<[f64; 3]> {
    params.validate()?;
    let c0 = params.c0()?;
    let (gp, gm, gmech) = (params.gamma_plus(), params.gamma_minus(), params.gamma_m);
    let kp2 = (params.eta_plus * c0).powi(2);
    let km2 = (params.eta_minus * c0).powi(2);
    Ok([
        gp * gm * gmech + kp2 * gm - km2 * gp,
        gp * gm + gp * gmech + gm * gmech + kp2 - km2,
        gp + gm + gmech,
    ])
}

/// Routh–Hurwitz test on the full three-mode dynamics; a steady-state
/// spectrum exists only for stable configurations.
pub fn check_stability(params: &SystemParams) -> Result<()> {
    let [a0, a1, a2] = characteristic_polynomial(params)?;
    if a0 > 0.0 && a1 > 0.0 && a2 > 0.0 && a2 * a1 > a0 {
        Ok(())
    } else {
        Err(Error::Unstable(format!(
            "Routh–Hurwitz violated (a0 = {a0}, a1 = {a1}, a2 = {a2})"
        )))
    }
}
