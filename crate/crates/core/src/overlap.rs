//! Transverse mode profiles and three-mode overlap integrals.
//!
//! The optomechanical coupling between two optical modes and the mechanical
//! mode is proportional to `∫ Ψa(u) Ψb(u) Ψm(u) du` along one transverse
//! coordinate; the other coordinate contributes a common factor that drops
//! out of the ratio `η+/η−`.

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute accuracy target of [`overlap_eta`].
pub const OVERLAP_TOLERANCE: f64 = 1e-8;
/// Overlaps at or below this magnitude count as vanishing.
pub const VANISHING_OVERLAP: f64 = 1e-10;
/// Minimum grid resolution, in points per waist.
pub const POINTS_PER_WAIST: f64 = 20.0;

const GL_DEGREE: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    /// Parity of a product, `None` if any factor has none.
    pub fn product(parities: &[Parity]) -> Parity {
        let mut odd = false;
        for p in parities {
            match p {
                Parity::Even => {}
                Parity::Odd => odd = !odd,
                Parity::None => return Parity::None,
            }
        }
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileFamily {
    HermiteGauss { n: usize, waist: f64 },
    /// Samples on a strictly increasing grid, linearly interpolated and zero outside.
    Sampled { grid: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeProfile {
    family: ProfileFamily,
    parity: Parity,
}

impl ModeProfile {
    pub fn hermite_gauss(n: usize, waist: f64) -> Result<Self> {
        if !(waist.is_finite() && waist > 0.0) {
            return Err(Error::config("waist", format!("must be > 0, got {waist}")));
        }
        let parity = if n % 2 == 0 { Parity::Even } else { Parity::Odd };
        Ok(ModeProfile { family: ProfileFamily::HermiteGauss { n, waist }, parity })
    }

    pub fn sampled(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::config("values", format!("{} values for {} grid points", values.len(), grid.len())));
        }
        if grid.len() < 3 {
            return Err(Error::config("grid", "need at least 3 points"));
        }
        if grid.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::config("grid", "non-finite sample"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("grid", "must be strictly increasing"));
        }
        let parity = detect_parity(&grid, &values);
        Ok(ModeProfile { family: ProfileFamily::Sampled { grid, values }, parity })
    }

    pub fn from_family(family: ProfileFamily) -> Result<Self> {
        match family {
            ProfileFamily::HermiteGauss { n, waist } => Self::hermite_gauss(n, waist),
            ProfileFamily::Sampled { grid, values } => Self::sampled(grid, values),
        }
    }

    pub fn family(&self) -> &ProfileFamily {
        &self.family
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.family {
            ProfileFamily::HermiteGauss { n, waist } => hermite_gauss(*n, *waist, u),
            ProfileFamily::Sampled { grid, values } => interpolate(grid, values, u),
        }
    }

    /// The same profile stretched along `u` by `s`, keeping its L² norm:
    /// `Ψ(u) → Ψ(u/s)/√s`.
    pub fn stretched(&self, s: f64) -> Result<Self> {
        match &self.family {
            ProfileFamily::HermiteGauss { n, waist } => Self::hermite_gauss(*n, waist * s),
            ProfileFamily::Sampled { grid, values } => {
                let k = 1.0 / s.sqrt();
                Self::sampled(grid.iter().map(|u| u * s).collect(), values.iter().map(|v| v * k).collect())
            }
        }
    }

    fn waist(&self) -> Option<f64> {
        match self.family {
            ProfileFamily::HermiteGauss { waist, .. } => Some(waist),
            ProfileFamily::Sampled { .. } => None,
        }
    }
}

fn detect_parity(grid: &[f64], values: &[f64]) -> Parity {
    let n = grid.len();
    let span = grid[n - 1].abs().max(grid[0].abs());
    let symmetric_grid = (0..n).all(|i| (grid[i] + grid[n - 1 - i]).abs() <= 1e-12 * span);
    if !symmetric_grid {
        return Parity::None;
    }
    let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * vmax;
    if (0..n).all(|i| (values[i] - values[n - 1 - i]).abs() <= tol) {
        Parity::Even
    } else if (0..n).all(|i| (values[i] + values[n - 1 - i]).abs() <= tol) {
        Parity::Odd
    } else {
        Parity::None
    }
}

fn interpolate(grid: &[f64], values: &[f64], u: f64) -> f64 {
    let n = grid.len();
    if u < grid[0] || u > grid[n - 1] {
        return 0.0;
    }
    let i = grid.partition_point(|&g| g <= u).clamp(1, n - 1);
    let (x0, x1) = (grid[i - 1], grid[i]);
    let t = (u - x0) / (x1 - x0);
    values[i - 1] * (1.0 - t) + values[i] * t
}

/// L²-normalised Hermite–Gauss function of order `n`:
/// `Ψn(u) = (2ⁿ n! √π w)^{-1/2} Hn(u/w) exp(−u²/(2w²))`,
/// evaluated by the stable three-term recurrence.
pub fn hermite_gauss(n: usize, waist: f64, u: f64) -> f64 {
    let x = u / waist;
    let norm = 1.0 / waist.sqrt();
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n == 0 {
        return psi0 * norm;
    }
    let mut prev = psi0;
    let mut cur = std::f64::consts::SQRT_2 * x * psi0;
    for k in 1..n {
        let k = k as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * x * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur * norm
}

/// `∫ Ψa Ψb Ψm du`, symmetric in its three arguments.
pub fn overlap_eta(psi_a: &ModeProfile, psi_b: &ModeProfile, psi_m: &ModeProfile) -> Result<f64> {
    let profiles = [psi_a, psi_b, psi_m];
    let sampled: Vec<&ModeProfile> =
        profiles.iter().copied().filter(|p| matches!(p.family, ProfileFamily::Sampled { .. })).collect();
    if sampled.is_empty() {
        integrate_analytic(&profiles)
    } else {
        integrate_on_grid(&profiles, &sampled)
    }
}

fn integrate_analytic(profiles: &[&ModeProfile; 3]) -> Result<f64> {
    let mut w_min = f64::INFINITY;
    let mut w_max = 0.0f64;
    let mut n_max = 0usize;
    for p in profiles {
        if let ProfileFamily::HermiteGauss { n, waist } = p.family {
            w_min = w_min.min(waist);
            w_max = w_max.max(waist);
            n_max = n_max.max(n);
        }
    }
    // Beyond the outermost turning point every factor decays like a Gaussian.
    let half_span = w_max * ((2.0 * n_max as f64 + 1.0).sqrt() + 9.0);
    let rule = GaussLegendre::new(GL_DEGREE).map_err(|e| Error::Quadrature(e.to_string()))?;
    let integrand = |u: f64| profiles.iter().map(|p| p.eval(u)).product::<f64>();
    let composite = |panels: usize| -> f64 {
        let h = 2.0 * half_span / panels as f64;
        (0..panels)
            .map(|i| {
                let a = -half_span + i as f64 * h;
                rule.integrate(a, a + h, integrand)
            })
            .sum()
    };

    let mut panels = ((2.0 * half_span / w_min).ceil() as usize).max(4);
    let mut coarse = composite(panels);
    for _ in 0..10 {
        panels *= 2;
        let fine = composite(panels);
        if (fine - coarse).abs() <= 0.01 * OVERLAP_TOLERANCE {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::Quadrature(format!("no convergence after {panels} panels")))
}

fn integrate_on_grid(profiles: &[&ModeProfile; 3], sampled: &[&ModeProfile]) -> Result<f64> {
    let ProfileFamily::Sampled { grid, .. } = &sampled[0].family else { unreachable!() };
    for other in &sampled[1..] {
        let ProfileFamily::Sampled { grid: g, .. } = &other.family else { unreachable!() };
        let same = g.len() == grid.len()
            && g.iter().zip(grid).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        if !same {
            return Err(Error::Quadrature("sampled profiles are not on a common grid".into()));
        }
    }
    let h_max = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    if let Some(w_min) = profiles.iter().filter_map(|p| p.waist()).reduce(f64::min) {
        if h_max > w_min / POINTS_PER_WAIST {
            return Err(Error::Quadrature(format!(
                "grid spacing {h_max} does not resolve waist {w_min} ({POINTS_PER_WAIST} points per waist required)"
            )));
        }
    }

    let f: Vec<f64> = grid.iter().map(|&u| profiles.iter().map(|p| p.eval(u)).product()).collect();
    let trapezoid = |idx: &[usize]| -> f64 {
        idx.windows(2).map(|w| 0.5 * (grid[w[1]] - grid[w[0]]) * (f[w[0]] + f[w[1]])).sum()
    };
    let all: Vec<usize> = (0..grid.len()).collect();
    let mut half: Vec<usize> = (0..grid.len()).step_by(2).collect();
    if *half.last().unwrap() != grid.len() - 1 {
        half.push(grid.len() - 1);
    }
    let fine = trapezoid(&all);
    let coarse = trapezoid(&half);
    let error = (fine - coarse).abs() / 3.0;
    if error > OVERLAP_TOLERANCE {
        return Err(Error::Quadrature(format!(
            "grid does not resolve the integrand: estimated error {error:e} > {OVERLAP_TOLERANCE:e}"
        )));
    }
    Ok(fine)
}

/// `|∫Ψ1 Ψ2 Ψm| / |∫Ψ1 Ψ0 Ψm|`, the coupling ratio `η+/η−` for the mode
/// triplet `(Ψ0, Ψ1, Ψ2)` with the mechanical profile `Ψm`.
pub fn eta_ratio(psi_0: &ModeProfile, psi_1: &ModeProfile, psi_2: &ModeProfile, psi_m: &ModeProfile) -> Result<f64> {
    let eta_plus = overlap_eta(psi_1, psi_2, psi_m)?;
    let eta_minus = overlap_eta(psi_1, psi_0, psi_m)?;
    if eta_minus.abs() <= VANISHING_OVERLAP {
        let parity = Parity::product(&[psi_1.parity(), psi_0.parity(), psi_m.parity()]);
        let reason = if parity == Parity::Odd {
            "η− overlap is parity-forbidden (odd integrand)".to_string()
        } else {
            format!("η− overlap vanishes ({eta_minus:e})")
        };
        return Err(Error::UndefinedRatio(reason));
    }
    Ok(eta_plus.abs() / eta_minus.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn hg(n: usize, w: f64) -> ModeProfile {
        ModeProfile::hermite_gauss(n, w).unwrap()
    }

    /// Independent oracle: plain trapezoid on a very fine uniform grid.
    fn brute_force(f: impl Fn(f64) -> f64, half_span: f64, points: usize) -> f64 {
        let h = 2.0 * half_span / (points - 1) as f64;
        (0..points)
            .map(|i| {
                let u = -half_span + i as f64 * h;
                let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
                w * f(u)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn hermite_gauss_values() {
        assert_eq!(hermite_gauss(1, 1.0, 0.0), 0.0);
        assert_eq!(hermite_gauss(3, 2.5, 0.0), 0.0);
        for n in 0..8 {
            for w in [0.3, 1.0, 2.0] {
                let norm = brute_force(|u| hermite_gauss(n, w, u).powi(2), 15.0 * w, 20001);
                assert_relative_eq!(norm, 1.0, epsilon = 1e-9);
            }
        }
        // explicit low orders, waist 1
        let x = 0.37f64;
        let g = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
        assert_relative_eq!(hermite_gauss(2, 1.0, x), g * (4.0 * x * x - 2.0) / 8f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn second_order_zeros() {
        // bisection on the sign change of Ψ2 in (0, 2)
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if hermite_gauss(2, 1.0, lo).signum() == hermite_gauss(2, 1.0, mid).signum() {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert_relative_eq!(lo, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(hermite_gauss(2, 1.0, -std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn parity_forbidden_overlaps_vanish() {
        assert!(overlap_eta(&hg(1, 1.0), &hg(0, 1.0), &hg(0, 1.0)).unwrap().abs() <= VANISHING_OVERLAP);
        assert!(overlap_eta(&hg(1, 1.0), &hg(1, 1.0), &hg(1, 1.0)).unwrap().abs() <= VANISHING_OVERLAP);
    }

    #[test]
    fn allowed_overlap_matches_oracle() {
        let value = overlap_eta(&hg(1, 1.0), &hg(0, 1.0), &hg(1, 1.0)).unwrap();
        let f = |u: f64| hermite_gauss(1, 1.0, u).powi(2) * hermite_gauss(0, 1.0, u);
        let coarse = brute_force(f, 12.0, 4001);
        let fine = brute_force(f, 12.0, 8001);
        assert!((coarse - fine).abs() < 1e-12);
        assert!(value > 0.0);
        assert!((value - fine).abs() < 1e-8);
        // closed form π^{-1/4} / (3/2)^{3/2}
        assert_relative_eq!(value, std::f64::consts::PI.powf(-0.25) / 1.5f64.powf(1.5), epsilon = 1e-12);
    }

    #[test]
    fn mixed_waists_match_oracle() {
        let (a, b, m) = (hg(2, 0.8), hg(1, 1.3), hg(1, 0.5));
        let value = overlap_eta(&a, &b, &m).unwrap();
        let oracle = brute_force(|u| a.eval(u) * b.eval(u) * m.eval(u), 20.0, 40001);
        assert!((value - oracle).abs() < 1e-9, "{value} vs {oracle}");
    }

    #[test]
    fn ratio_examples() {
        assert!(matches!(eta_ratio(&hg(0, 1.0), &hg(1, 1.0), &hg(2, 1.0), &hg(0, 1.0)), Err(Error::UndefinedRatio(_))));
        let r = eta_ratio(&hg(0, 1.0), &hg(1, 1.0), &hg(2, 1.0), &hg(1, 1.0)).unwrap();
        let oracle = |n: usize| brute_force(|u| hermite_gauss(1, 1.0, u) * hermite_gauss(n, 1.0, u) * hermite_gauss(1, 1.0, u), 12.0, 8001);
        assert!(r.is_finite() && r > 0.0);
        assert_relative_eq!(r, oracle(2).abs() / oracle(0).abs(), max_relative = 1e-9);
    }

    fn odd_lobe_pair(u0: f64, width: f64) -> ModeProfile {
        let h = width / 25.0;
        let half = 8.0;
        let n = (2.0 * half / h).round() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
        let lobe = |x: f64| (-(x * x) / (2.0 * width * width)).exp();
        let values = grid.iter().map(|&u| lobe(u - u0) - lobe(u + u0)).collect();
        ModeProfile::sampled(grid, values).unwrap()
    }

    #[test]
    fn narrow_lobe_limit_samples_the_mode_ratio() {
        let u0 = 0.6;
        let limit = (hermite_gauss(2, 1.0, u0) / hermite_gauss(0, 1.0, u0)).abs();
        let mut previous = f64::INFINITY;
        for width in [0.1, 0.03, 0.01] {
            let m = odd_lobe_pair(u0, width);
            assert_eq!(m.parity(), Parity::Odd);
            let r = eta_ratio(&hg(0, 1.0), &hg(1, 1.0), &hg(2, 1.0), &m).unwrap();
            let err = (r - limit).abs();
            // second-order convergence in the lobe width
            assert!(err < previous / 5.0, "width {width}: error {err} did not shrink");
            previous = err;
        }
        assert!(previous < 2e-3 * limit, "final error {previous} vs limit {limit}");
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
        let values = grid.iter().map(|&u| hermite_gauss(1, 1.0, u)).collect();
        let m = ModeProfile::sampled(grid, values).unwrap();
        assert!(matches!(overlap_eta(&hg(0, 1.0), &hg(1, 1.0), &m), Err(Error::Quadrature(_))));
    }

    #[test]
    fn mismatched_sample_grids_rejected() {
        let g1: Vec<f64> = (0..801).map(|i| -4.0 + 0.01 * i as f64).collect();
        let g2: Vec<f64> = (0..801).map(|i| -4.0 + 0.0101 * i as f64).collect();
        let a = ModeProfile::sampled(g1.clone(), g1.iter().map(|&u| hermite_gauss(0, 1.0, u)).collect()).unwrap();
        let b = ModeProfile::sampled(g2.clone(), g2.iter().map(|&u| hermite_gauss(0, 1.0, u)).collect()).unwrap();
        assert!(overlap_eta(&a, &b, &hg(0, 1.0)).is_err());
    }

    #[test]
    fn sampled_profiles_agree_with_analytic() {
        let grid: Vec<f64> = (0..2001).map(|i| -10.0 + 0.01 * i as f64).collect();
        let values = grid.iter().map(|&u| hermite_gauss(1, 1.0, u)).collect();
        let m = ModeProfile::sampled(grid, values).unwrap();
        assert_eq!(m.parity(), Parity::Odd);
        let a = overlap_eta(&hg(1, 1.0), &hg(2, 1.0), &m).unwrap();
        let b = overlap_eta(&hg(1, 1.0), &hg(2, 1.0), &hg(1, 1.0)).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn invalid_profiles() {
        assert!(ModeProfile::hermite_gauss(0, 0.0).is_err());
        assert!(ModeProfile::sampled(vec![0.0, 1.0, 0.5], vec![1.0; 3]).is_err());
        assert!(ModeProfile::sampled(vec![0.0, 1.0], vec![1.0; 2]).is_err());
        assert!(ModeProfile::sampled(vec![0.0, 1.0, 2.0], vec![1.0; 2]).is_err());
    }

    fn parity_of(n: usize) -> Parity {
        if n % 2 == 0 { Parity::Even } else { Parity::Odd }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn odd_total_parity_vanishes(a in 0usize..6, b in 0usize..6, m in 0usize..6, wa in 0.5..2.0f64, wb in 0.5..2.0f64, wm in 0.5..2.0f64) {
            prop_assume!(Parity::product(&[parity_of(a), parity_of(b), parity_of(m)]) == Parity::Odd);
            let v = overlap_eta(&hg(a, wa), &hg(b, wb), &hg(m, wm)).unwrap();
            prop_assert!(v.abs() <= VANISHING_OVERLAP);
        }

        #[test]
        fn overlap_is_permutation_symmetric(a in 0usize..5, b in 0usize..5, m in 0usize..5, wa in 0.5..2.0f64, wb in 0.5..2.0f64, wm in 0.5..2.0f64) {
            let (pa, pb, pm) = (hg(a, wa), hg(b, wb), hg(m, wm));
            let v = overlap_eta(&pa, &pb, &pm).unwrap();
            for w in [overlap_eta(&pb, &pa, &pm).unwrap(), overlap_eta(&pm, &pb, &pa).unwrap(), overlap_eta(&pa, &pm, &pb).unwrap()] {
                prop_assert!((v - w).abs() <= 1e-12);
            }
        }

        #[test]
        fn waist_scaling_covariance(w in 0.3..3.0f64, wm in 0.3..3.0f64, s in 0.2..5.0f64) {
            let base = overlap_eta(&hg(1, w), &hg(2, w), &hg(1, wm)).unwrap();
            let scaled = overlap_eta(&hg(1, w * s), &hg(2, w * s), &hg(1, wm * s)).unwrap();
            prop_assert!((scaled - base / s.sqrt()).abs() <= 1e-9 * base.abs().max(1e-3));
            let r = eta_ratio(&hg(0, w), &hg(1, w), &hg(2, w), &hg(1, wm)).unwrap();
            let rs = eta_ratio(&hg(0, w * s), &hg(1, w * s), &hg(2, w * s), &hg(1, wm * s)).unwrap();
            prop_assert!((r - rs).abs() <= 1e-9 * r);
        }
    }
}
