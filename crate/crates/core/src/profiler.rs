//! Empirical order-function estimation: windowed maxima of |L(sigma + it)|, their
//! log-log slopes, and the best convex integer-slope profile through them.
//! Also the closed-form exponent formulas.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::moments::afe_track;
use crate::numeric::{line_fit, Kahan};
use crate::special::{ComplexPoint, LFunction};

/// Regression noise below this is clamped.
pub const MU_FLOOR: f64 = -0.05;
const SLOPES: [i32; 3] = [-2, -1, 0];
const DIRECT_TOL: f64 = 1e-6;

/// How a window `[T, 2T]` is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub step: f64,
    /// Runs of consecutive grid points, spread evenly over the window.
    pub blocks: usize,
    pub block_len: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { step: 0.1, blocks: 32, block_len: 256 }
    }
}

impl Sampling {
    /// Every grid point of the window.
    pub fn full() -> Self {
        Sampling { step: 0.1, blocks: usize::MAX, block_len: usize::MAX }
    }

    /// Block starts and lengths covering `[lo, hi]`.
    fn blocks_in(&self, lo: f64, hi: f64) -> Vec<(f64, usize)> {
        let total = ((hi - lo) / self.step).floor() as usize + 1;
        let want = self.blocks.saturating_mul(self.block_len);
        if want >= total {
            let chunk = 512;
            return (0..total)
                .step_by(chunk)
                .map(|i| (lo + i as f64 * self.step, chunk.min(total - i)))
                .collect();
        }
        let stride = (total - self.block_len) / (self.blocks - 1).max(1);
        (0..self.blocks)
            .map(|b| (lo + (b * stride) as f64 * self.step, self.block_len))
            .collect()
    }
}

/// Dyadic windows `[T, 2T]` with starts `5` per decade from `t_lo` while `2T <= t_hi`.
pub fn dyadic_windows(t_lo: f64, t_hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let t = t_lo * 10f64.powf(k as f64 / 5.0);
        if 2.0 * t > t_hi * (1.0 + 1e-12) {
            break;
        }
        out.push((t, 2.0 * t));
        k += 1;
    }
    out
}

/// Direct coefficient sum at `sigma + i(t0 + p h)` by phase recurrence.
fn direct_track(lf: &LFunction, sigma: f64, t0: f64, h: f64, count: usize) -> Result<Vec<Complex64>> {
    let tend = t0 + h * count as f64;
    let z = ComplexPoint::new(sigma, tend).s();
    let bound = lf.partial_sum_bound() * (1.0 + z.norm() / sigma);
    let n = (bound / DIRECT_TOL).powf(1.0 / sigma).ceil();
    if n > 2e6 {
        return Err(LabError::Budget(format!("direct track needs {n:e} terms")));
    }
    let n = n as usize;
    let coeffs = lf.coefficients(n);
    let mut z: Vec<Complex64> = (1..=n)
        .map(|k| coeffs[k] * Complex64::from_polar((k as f64).powf(-sigma), -t0 * (k as f64).ln()))
        .collect();
    let rho: Vec<Complex64> = (1..=n).map(|k| Complex64::from_polar(1.0, -h * (k as f64).ln())).collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut acc = Kahan::new();
        let mut acc_im = Kahan::new();
        for (v, r) in z.iter_mut().zip(&rho) {
            acc.add(v.re);
            acc_im.add(v.im);
            *v *= r;
        }
        out.push(Complex64::new(acc.value(), acc_im.value()));
    }
    Ok(out)
}

/// Windowed maxima of `|L(sigma + it)|`: the approximate functional equation for
/// `sigma <= 1.25`, direct summation above.
pub fn sample_envelope(lf: &LFunction, sigma: f64, windows: &[(f64, f64)], sampling: Sampling) -> Result<Vec<f64>> {
    if !(0.0..=2.5).contains(&sigma) {
        return Err(LabError::Domain(format!("sigma = {} outside [0, 2.5]", sigma)));
    }
    if !(sampling.step > 0.0 && sampling.blocks >= 1 && sampling.block_len >= 1) {
        return Err(LabError::Domain(format!("bad sampling {:?}", sampling)));
    }
    let mut out = Vec::with_capacity(windows.len());
    for &(lo, hi) in windows {
        if !(lo >= 50.0 && hi > lo && hi <= 2e5 * (1.0 + 1e-12)) {
            return Err(LabError::Domain(format!("window [{}, {}] outside [50, 2e5]", lo, hi)));
        }
        let blocks = sampling.blocks_in(lo, hi);
        let maxima: Vec<Result<f64>> = blocks
            .par_iter()
            .map(|&(t0, count)| {
                let vals = if sigma <= 1.25 {
                    afe_track(lf, sigma, t0, sampling.step, count, 0.5)?
                } else {
                    direct_track(lf, sigma, t0, sampling.step, count)?
                };
                Ok(vals.iter().fold(0.0f64, |a, v| a.max(v.norm())))
            })
            .collect();
        let mut m = 0.0f64;
        for v in maxima {
            m = m.max(v?);
        }
        out.push(m);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSamples {
    pub sigmas: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
    /// `envelopes[i][j]`: maximum at `sigmas[i]` over `windows[j]`.
    pub envelopes: Vec<Vec<f64>>,
}

pub fn sample_profile(lf: &LFunction, sigmas: &[f64], windows: &[(f64, f64)], sampling: Sampling) -> Result<ProfileSamples> {
    let mut envelopes = Vec::with_capacity(sigmas.len());
    for &s in sigmas {
        envelopes.push(sample_envelope(lf, s, windows, sampling)?);
    }
    Ok(ProfileSamples { sigmas: sigmas.to_vec(), windows: windows.to_vec(), envelopes })
}

/// Least-squares slope of `log max|L|` against `log T` and its standard error.
pub fn envelope_slope(windows: &[(f64, f64)], envelope: &[f64]) -> Result<(f64, f64)> {
    let x: Vec<f64> = windows.iter().map(|w| w.0.ln()).collect();
    let y: Vec<f64> = envelope.iter().map(|v| v.ln()).collect();
    let f = line_fit(&x, &y).ok_or_else(|| LabError::Domain("degenerate window grid".into()))?;
    Ok((f.slope, f.slope_stderr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuProfile {
    pub sigma_grid: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub window_count: Vec<usize>,
    /// Which entries were raised to the floor.
    pub clamped: Vec<bool>,
    /// Fitted profile at `sigma = 0`.
    pub fit_intercept: f64,
    pub fit_slopes: Vec<i32>,
    pub breakpoints: Vec<f64>,
    pub rms: f64,
    /// Smallest sigma where the fitted profile reaches zero.
    pub zero_crossing: Option<f64>,
}

impl MuProfile {
    pub fn fitted(&self, sigma: f64) -> f64 {
        profile_shape(&self.fit_slopes, &self.breakpoints, sigma) + self.fit_intercept
    }

    pub fn is_convex(&self) -> bool {
        self.fit_slopes.windows(2).all(|w| w[0] < w[1]) && self.fit_slopes.iter().all(|&s| s <= 0)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["sigma", "mu_hat", "window_count"]).expect("in-memory write");
        for i in 0..self.sigma_grid.len() {
            w.write_record([
                format!("{}", self.sigma_grid[i]),
                format!("{:.17e}", self.mu_hat[i]),
                self.window_count[i].to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "fit_intercept": self.fit_intercept,
            "fit_slopes": self.fit_slopes,
            "breakpoints": self.breakpoints,
            "rms": self.rms,
            "zero_crossing": self.zero_crossing,
            "clamped": self.clamped.iter().filter(|c| **c).count(),
            "convex": self.is_convex(),
        })
    }
}

/// Piecewise-linear shape with value 0 at sigma = 0 and the given slopes,
/// switching at the breakpoints.
fn profile_shape(slopes: &[i32], breaks: &[f64], sigma: f64) -> f64 {
    let mut v = 0.0;
    let mut left = 0.0;
    for (i, &s) in slopes.iter().enumerate() {
        let right = breaks.get(i).copied().unwrap_or(f64::INFINITY);
        if sigma <= right {
            return v + s as f64 * (sigma - left);
        }
        v += s as f64 * (right - left);
        left = right;
    }
    v
}

/// Slope per sigma, then the best convex integer-slope profile.
pub fn fit_mu(samples: &ProfileSamples) -> Result<MuProfile> {
    if samples.windows.len() < 4 {
        return Err(LabError::Domain(format!("{} windows, need at least 4", samples.windows.len())));
    }
    let mut mu = Vec::new();
    let mut clamped = Vec::new();
    for env in &samples.envelopes {
        let (s, _) = envelope_slope(&samples.windows, env)?;
        clamped.push(s < MU_FLOOR);
        mu.push(s.max(MU_FLOOR));
    }
    let mut p = fit_profile(&samples.sigmas, &mu)?;
    p.window_count = vec![samples.windows.len(); samples.sigmas.len()];
    p.clamped = clamped;
    Ok(p)
}

/// Exhaustive search over slopes drawn increasingly from `{-2, -1, 0}` with
/// breakpoints at interior grid points; ties go to fewer segments.
pub fn fit_profile(sigmas: &[f64], mu_hat: &[f64]) -> Result<MuProfile> {
    let n = sigmas.len();
    if n < 5 || mu_hat.len() != n {
        return Err(LabError::Domain(format!("{} sigma points, need at least 5", n)));
    }
    if sigmas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Domain("sigma grid must increase".into()));
    }
    let interior = &sigmas[1..n - 1];
    let mut candidates: Vec<(Vec<i32>, Vec<f64>)> = Vec::new();
    for &s in &SLOPES {
        candidates.push((vec![s], vec![]));
    }
    for i in 0..3 {
        for j in i + 1..3 {
            for &b in interior {
                candidates.push((vec![SLOPES[i], SLOPES[j]], vec![b]));
            }
        }
    }
    for (bi, &b1) in interior.iter().enumerate() {
        for &b2 in &interior[bi + 1..] {
            candidates.push((SLOPES.to_vec(), vec![b1, b2]));
        }
    }
    let mut best: Option<(f64, f64, Vec<i32>, Vec<f64>)> = None;
    for (slopes, breaks) in candidates {
        let shape: Vec<f64> = sigmas.iter().map(|&s| profile_shape(&slopes, &breaks, s)).collect();
        let offset = mu_hat.iter().zip(&shape).map(|(m, g)| m - g).sum::<f64>() / n as f64;
        let ss: f64 = mu_hat.iter().zip(&shape).map(|(m, g)| (m - g - offset).powi(2)).sum();
        let rms = (ss / n as f64).sqrt();
        let better = match &best {
            None => true,
            Some((r, _, s, _)) => rms < r - 1e-12 || (rms <= r + 1e-12 && slopes.len() < s.len()),
        };
        if better {
            best = Some((rms, offset, slopes, breaks));
        }
    }
    let (rms, offset, slopes, breaks) = best.expect("candidate set is never empty");
    let mut p = MuProfile {
        sigma_grid: sigmas.to_vec(),
        mu_hat: mu_hat.to_vec(),
        window_count: vec![0; n],
        clamped: vec![false; n],
        fit_intercept: offset,
        fit_slopes: slopes,
        breakpoints: breaks,
        rms,
        zero_crossing: None,
    };
    p.zero_crossing = zero_crossing(&p);
    Ok(p)
}

fn zero_crossing(p: &MuProfile) -> Option<f64> {
    let mut left = 0.0;
    let mut v = p.fit_intercept;
    if v <= 0.0 {
        return Some(0.0);
    }
    for (i, &s) in p.fit_slopes.iter().enumerate() {
        let right = p.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
        if s < 0 {
            let hit = left + v / -(s as f64);
            if hit <= right {
                return Some(hit);
            }
            v += s as f64 * (right - left);
        }
        left = right;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFormulas {
    pub d: f64,
    pub mu_zeta: f64,
    pub eta: f64,
    /// Dimension above which the asymmetric bound beats the zeta exponent.
    pub d_star: f64,
    pub subconvex: f64,
    pub rajchman: f64,
    /// Positive root of `22 d^2 - 11 d - 2`.
    pub d_crit: f64,
}

pub fn exponent_formulas(d: f64, mu_zeta: f64, eta: f64) -> Result<ExponentFormulas> {
    if !(d > 0.0 && d < 1.0) {
        return Err(LabError::Domain(format!("dimension {} not in (0,1)", d)));
    }
    if !(mu_zeta > 0.0 && mu_zeta < 0.25) {
        return Err(LabError::Domain(format!("zeta exponent {} not in (0, 1/4)", mu_zeta)));
    }
    if !(0.0..0.25).contains(&eta) {
        return Err(LabError::Domain(format!("decay exponent {} not in [0, 1/4)", eta)));
    }
    let d_star = (1.0 - 4.0 * mu_zeta) / (1.0 - 2.0 * mu_zeta);
    let subconvex = if d >= d_star { (1.0 - d) / (2.0 * (2.0 - d)) } else { mu_zeta };
    let rajchman = (1.0 - d) * (1.0 + 2.0 * eta) / (2.0 * (2.0 - d + 4.0 * eta));
    let d_crit = (11.0 + 297f64.sqrt()) / 44.0;
    Ok(ExponentFormulas { d, mu_zeta, eta, d_star, subconvex, rajchman, d_crit })
}

/// Exponent forced by an anomalous slope `s` on a short segment.
pub fn slope_level(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(LabError::Domain(format!("slope {} not in (0,1)", s)));
    }
    Ok(s / (2.0 * (1.0 - s)))
}

/// `C t^{1/4 + 0.05}` calibrated so that it passes through the first window.
pub fn convexity_ceiling(windows: &[(f64, f64)], envelope: &[f64]) -> Vec<f64> {
    let c = envelope[0] / windows[0].1.powf(0.3);
    windows.iter().map(|w| c * w.1.powf(0.3) * (1.0 + 1e-12)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::CantorSpec;
    use crate::special::{AfeOptions, Method};

    #[test]
    fn synthetic_recovery() {
        let sig: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let mu: Vec<f64> = sig.iter().map(|s| (0.5 - s).max(0.0)).collect();
        let p = fit_profile(&sig, &mu).unwrap();
        assert_eq!(p.fit_slopes, vec![-1, 0]);
        assert_eq!(p.breakpoints, vec![0.5]);
        assert!(p.rms < 1e-12);
        assert!((p.zero_crossing.unwrap() - 0.5).abs() < 1e-12);
        assert!(p.is_convex());
        // idempotent on its own output
        let again: Vec<f64> = sig.iter().map(|&s| p.fitted(s)).collect();
        assert!(fit_profile(&sig, &again).unwrap().rms < 1e-12);
    }

    #[test]
    fn flat_prefers_one_segment() {
        let sig: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let p = fit_profile(&sig, &[0.1; 6]).unwrap();
        assert_eq!(p.fit_slopes, vec![0]);
        assert!(p.zero_crossing.is_none());
    }

    #[test]
    fn exponents() {
        let f = exponent_formulas(2f64.ln() / 3f64.ln(), 13.0 / 84.0, 0.0614).unwrap();
        assert!((f.d_star - 16.0 / 29.0).abs() < 1e-14);
        assert!((f.subconvex - 0.1348).abs() < 5e-5);
        assert!((f.rajchman - 0.1283).abs() < 5e-5);
        assert!((f.d_crit - 0.6417).abs() < 5e-5);
        assert!((22.0 * f.d_crit * f.d_crit - 11.0 * f.d_crit - 2.0).abs() < 1e-12);
        let g = exponent_formulas(f.d_star, 13.0 / 84.0, 0.0).unwrap();
        assert!((g.subconvex - 13.0 / 84.0).abs() < 1e-12);
        assert!((slope_level(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((slope_level(2.0 / 3.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(exponent_formulas(1.2, 0.1, 0.0).is_err());
    }

    #[test]
    fn windows_are_dyadic() {
        let w = dyadic_windows(1e3, 2e5);
        assert_eq!(w.len(), 11);
        assert!((w[10].0 - 1e5).abs() < 1e-6);
        let b = Sampling { step: 0.1, blocks: 4, block_len: 10 }.blocks_in(100.0, 200.0);
        assert_eq!(b.len(), 4);
        assert!(b[3].0 + 0.1 * 9.0 <= 200.0 + 1e-9);
    }

    #[test]
    fn tracks_match_pointwise() {
        let lf = LFunction::new(CantorSpec::default().with_level(6)).unwrap();
        let v = afe_track(&lf, 0.5, 400.0, 0.1, 30, 0.5).unwrap();
        let s = ComplexPoint::critical(400.0 + 29.0 * 0.1);
        let want = lf.eval(s, Method::Afe(AfeOptions::default())).unwrap();
        assert!((v[29] - want).norm() < 1e-10 * want.norm().max(1.0));
        let d = direct_track(&lf, 2.0, 300.0, 0.1, 5).unwrap();
        let want = lf.direct(ComplexPoint::new(2.0, 300.4), 1e-11).unwrap();
        assert!((d[4] - want).norm() < 1e-5);
    }

    #[test]
    fn off_line_afe_agrees_with_average() {
        let lf = LFunction::new(CantorSpec::default().with_level(6)).unwrap();
        for sigma in [0.3, 0.8] {
            let v = afe_track(&lf, sigma, 500.0, 0.1, 1, 0.5).unwrap()[0];
            let w = lf.measure_average(ComplexPoint::new(sigma, 500.0)).unwrap();
            assert!((v - w).norm() / w.norm() < 0.3, "{} {} {}", sigma, v, w);
        }
    }

    #[test]
    fn absolute_bound_at_two() {
        let lf = LFunction::new(CantorSpec::default().with_level(6)).unwrap();
        let w = vec![(100.0, 200.0), (200.0, 400.0)];
        let env = sample_envelope(&lf, 2.0, &w, Sampling { step: 0.1, blocks: 2, block_len: 20 }).unwrap();
        let c = lf.coefficients(20000);
        let bound: f64 = c.iter().enumerate().skip(1).map(|(n, v)| v.norm() / (n * n) as f64).sum::<f64>() + 1e-4;
        assert!(env.iter().all(|&e| e <= bound));
    }
}
