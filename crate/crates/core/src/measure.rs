//! Rescaled self-similar Cantor measures: atoms, Fourier coefficients and the
//! constants derived from them.
//!
//! A spec keeps `keep_count` of `base` digits at every scale. The measure lives on
//! `[theta0, theta1]`; writing `phi` for the centre and `w` for the width, a point is
//! `phi + w * sum_j c_j base^-j` with `c_j` a centred kept digit. The Fourier
//! coefficient factorises as `e^{i n phi} prod_j g(n w base^-j)` where `g` is the
//! average of `e^{i x c}` over kept digits. For the middle-thirds case `g = cos`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::numeric::{kahan_sum, line_fit, LineFit};

/// Per-factor accuracy of the infinite product.
pub const PRODUCT_THRESHOLD: f64 = 1e-18;

// Below this argument the remaining factors are summed through the cumulant series.
const TAIL_SWITCH: f64 = 1e-2;
const TAIL_ORDER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub theta0: f64,
    pub theta1: f64,
    pub level: u32,
    pub keep_count: u32,
    pub base: u32,
}

impl Default for CantorSpec {
    fn default() -> Self {
        CantorSpec {
            theta0: 0.5,
            theta1: 2.0,
            level: 12,
            keep_count: 2,
            base: 3,
        }
    }
}

impl CantorSpec {
    pub fn new(theta0: f64, theta1: f64, level: u32, keep_count: u32, base: u32) -> Result<Self> {
        let s = CantorSpec {
            theta0,
            theta1,
            level,
            keep_count,
            base,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta0.is_finite() && self.theta1.is_finite())
            || !(0.0 < self.theta0 && self.theta0 < self.theta1 && self.theta1 < 2.0 * PI)
        {
            return Err(LabError::Domain(format!(
                "interval [{}, {}] must satisfy 0 < theta0 < theta1 < 2pi",
                self.theta0, self.theta1
            )));
        }
        if self.keep_count < 2 || self.keep_count >= self.base {
            return Err(LabError::Domain(format!(
                "need 2 <= keep_count < base, got {} of {}",
                self.keep_count, self.base
            )));
        }
        if self.level == 0 {
            return Err(LabError::Domain("level must be at least 1".into()));
        }
        if (self.keep_count as f64).powi(self.level as i32) > 1e8 {
            return Err(LabError::Budget(format!(
                "{}^{} atoms",
                self.keep_count, self.level
            )));
        }
        Ok(())
    }

    pub fn dimension(&self) -> f64 {
        (self.keep_count as f64).ln() / (self.base as f64).ln()
    }

    pub fn centre(&self) -> f64 {
        0.5 * (self.theta0 + self.theta1)
    }

    pub fn width(&self) -> f64 {
        self.theta1 - self.theta0
    }

    pub fn atom_count(&self) -> usize {
        (self.keep_count as usize).pow(self.level)
    }

    pub fn is_middle_thirds(&self) -> bool {
        self.keep_count == 2 && self.base == 3
    }

    /// Kept digits, spread evenly over `0..base` and symmetric when possible.
    pub fn digits(&self) -> Vec<u32> {
        let k = self.keep_count as usize;
        let b = self.base as f64;
        let mut d: Vec<u32> = (0..k)
            .map(|i| (i as f64 * (b - 1.0) / (k as f64 - 1.0) + 0.5).floor() as u32)
            .collect();
        for i in (k + 1) / 2..k {
            d[i] = self.base - 1 - d[k - 1 - i];
        }
        d.dedup();
        d
    }

    /// Kept digits shifted so the full digit range is centred at zero.
    pub fn centred_digits(&self) -> Vec<f64> {
        let half = (self.base as f64 - 1.0) / 2.0;
        self.digits().iter().map(|&d| d as f64 - half).collect()
    }

    fn digit_average(&self, c: &[f64], x: f64) -> Complex64 {
        if self.is_middle_thirds() {
            return Complex64::new(x.cos(), 0.0);
        }
        let k = c.len() as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for &cd in c {
            acc += Complex64::from_polar(1.0, x * cd);
        }
        acc / k
    }

    /// Cumulants of the uniform distribution on the centred digits.
    fn cumulants(&self, c: &[f64]) -> Vec<f64> {
        let k = c.len() as f64;
        let mom: Vec<f64> = (0..=TAIL_ORDER)
            .map(|r| c.iter().map(|v| v.powi(r as i32)).sum::<f64>() / k)
            .collect();
        let mut kap = vec![0.0; TAIL_ORDER + 1];
        for n in 1..=TAIL_ORDER {
            let mut v = mom[n];
            for m in 1..n {
                v -= binomial(n - 1, m - 1) * kap[m] * mom[n - m];
            }
            kap[n] = v;
        }
        kap
    }

    /// `prod_{j=1..levels} g(n w base^-j)`; `None` runs the product to convergence.
    pub fn digit_product(&self, n: f64, levels: Option<u32>) -> Complex64 {
        let c = self.centred_digits();
        let cmax = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let b = self.base as f64;
        let mut x = n * self.width() / b;
        let mut prod = Complex64::new(1.0, 0.0);
        let mut j = 1u32;
        loop {
            if let Some(l) = levels {
                if j > l {
                    return prod;
                }
            } else if x * cmax < TAIL_SWITCH {
                break;
            }
            prod *= self.digit_average(&c, x);
            x /= b;
            j += 1;
            if x == 0.0 {
                return prod;
            }
        }
        // log g(x) = sum_r kappa_r (ix)^r / r!; over the geometric tail of arguments
        // each order contributes a factor b^r / (b^r - 1).
        let kap = self.cumulants(&c);
        let mut tail = Complex64::new(0.0, 0.0);
        let mut fact = 1.0;
        for (r, kr) in kap.iter().enumerate().skip(1) {
            fact *= r as f64;
            if *kr == 0.0 {
                continue;
            }
            let ix = Complex64::new(0.0, x).powu(r as u32);
            let br = b.powi(r as i32);
            tail += ix * (*kr / fact * br / (br - 1.0));
        }
        prod * tail.exp()
    }

    /// Fourier coefficient `integral e^{i n theta} d nu`.
    pub fn nu_hat(&self, n: u64) -> Complex64 {
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let nf = n as f64;
        Complex64::from_polar(1.0, nf * self.centre()) * self.digit_product(nf, None)
    }

    /// Fourier coefficient of the level-`level` atom approximation.
    pub fn nu_hat_level(&self, n: u64, level: u32) -> Complex64 {
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let nf = n as f64;
        Complex64::from_polar(1.0, nf * self.centre()) * self.digit_product(nf, Some(level))
    }

    /// Coefficients for `n = 0..=n_max`; `level` selects the truncated product.
    pub fn coefficient_table(&self, n_max: usize, level: Option<u32>) -> Vec<Complex64> {
        const CHUNK: usize = 1 << 14;
        let starts: Vec<usize> = (0..=n_max).step_by(CHUNK).collect();
        let parts: Vec<Vec<Complex64>> = starts
            .par_iter()
            .map(|&lo| {
                let hi = (lo + CHUNK).min(n_max + 1);
                (lo..hi)
                    .map(|n| match level {
                        Some(l) => self.nu_hat_level(n as u64, l),
                        None => self.nu_hat(n as u64),
                    })
                    .collect()
            })
            .collect();
        parts.concat()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Which measure the atoms approximate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// The measure on the circle, points in radians.
    Native,
    /// Pushforward under `theta -> theta / 2pi`.
    Unit,
    /// Pushforward under `theta -> 1 - theta / 2pi`.
    UnitReflected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureAtoms {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub target: Target,
    pub level: u32,
    pub base: u32,
}

impl MeasureAtoms {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Smallest and largest point.
    pub fn hull(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| {
                (a.min(p), b.max(p))
            })
    }

    /// Spacing scale below which atoms no longer resolve the measure.
    pub fn resolution(&self) -> f64 {
        let (a, b) = self.hull();
        let w = if self.points.len() > 1 { b - a } else { 1.0 };
        w * (self.base as f64).powi(-(self.level as i32))
    }

    /// The angle attached to a point: itself, or `2 pi alpha` for unit targets.
    pub fn angle(&self, p: f64) -> f64 {
        match self.target {
            Target::Native => p,
            Target::Unit | Target::UnitReflected => 2.0 * PI * p,
        }
    }
}

pub fn build_atoms(spec: &CantorSpec, target: Target) -> Result<MeasureAtoms> {
    spec.validate()?;
    // Offsets as exact integers sum_j 2 c_j base^(level - j); one rounding per atom
    // instead of one per level keeps e^{i n point} within 1e-13 of the product up to n = 1e4.
    let twice: Vec<i64> = spec.centred_digits().iter().map(|c| (2.0 * c).round() as i64).collect();
    let b = spec.base as i64;
    match b.checked_pow(spec.level) {
        Some(v) if v <= 1 << 53 => {}
        _ => return Err(LabError::Domain(format!("base^level = {}^{} exceeds 2^53", spec.base, spec.level))),
    }
    let mut ks: Vec<i64> = vec![0];
    for j in 1..=spec.level {
        let step = b.pow(spec.level - j);
        ks = ks.iter().flat_map(|k| twice.iter().map(move |c| k + c * step)).collect();
    }
    let denom = 2.0 * (spec.base as f64).powi(spec.level as i32);
    let (centre, w) = (spec.centre(), spec.width());
    let pts: Vec<f64> = ks.iter().map(|&k| centre + w * (k as f64 / denom)).collect();
    let points = match target {
        Target::Native => pts,
        Target::Unit => pts.iter().map(|t| t / (2.0 * PI)).collect(),
        Target::UnitReflected => pts.iter().map(|t| 1.0 - t / (2.0 * PI)).collect(),
    };
    let n = points.len();
    Ok(MeasureAtoms {
        points,
        weights: vec![1.0 / n as f64; n],
        target,
        level: spec.level,
        base: spec.base,
    })
}

/// `sum_k weight_k e^{i n angle_k}`.
pub fn nu_hat_empirical(atoms: &MeasureAtoms, n: i64) -> Result<Complex64> {
    if atoms.is_empty() {
        return Err(LabError::Domain("empty atom set".into()));
    }
    let nf = n as f64;
    let mut re = Vec::with_capacity(atoms.len());
    let mut im = Vec::with_capacity(atoms.len());
    for (p, w) in atoms.iter() {
        let (s, c) = (nf * atoms.angle(p)).sin_cos();
        re.push(w * c);
        im.push(w * s);
    }
    Ok(Complex64::new(kahan_sum(re), kahan_sum(im)))
}

/// `sum_{n=1..N} |nu_hat(n)|^2`.
pub fn strichartz_partial(spec: &CantorSpec, n: usize) -> f64 {
    let tab = spec.coefficient_table(n, None);
    kahan_sum(tab[1..].iter().map(|z| z.norm_sqr()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzFit {
    pub ns: Vec<usize>,
    pub partials: Vec<f64>,
    /// Least-squares constant in `partial ~ C N^{1-d}`.
    pub c_s: f64,
    /// Free log-log slope for comparison with `1 - d`.
    pub loglog: Option<LineFit>,
}

pub fn strichartz_fit(spec: &CantorSpec, ns: &[usize]) -> StrichartzFit {
    let n_max = ns.iter().copied().max().unwrap_or(1);
    let tab = spec.coefficient_table(n_max, None);
    let mut acc = crate::numeric::Kahan::new();
    let mut partials = vec![0.0; ns.len()];
    let mut sorted: Vec<(usize, usize)> = ns.iter().copied().enumerate().map(|(i, n)| (n, i)).collect();
    sorted.sort();
    let mut next = 1;
    for (n, i) in sorted {
        while next <= n {
            acc.add(tab[next].norm_sqr());
            next += 1;
        }
        partials[i] = acc.value();
    }
    let e = 1.0 - spec.dimension();
    let num = kahan_sum(ns.iter().zip(&partials).map(|(&n, p)| p * (n as f64).powf(e)));
    let den = kahan_sum(ns.iter().map(|&n| (n as f64).powf(2.0 * e)));
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = partials.iter().map(|p| p.ln()).collect();
    StrichartzFit {
        ns: ns.to_vec(),
        partials,
        c_s: num / den,
        loglog: line_fit(&lx, &ly),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WickConstants {
    pub c_nu: f64,
    pub c4: f64,
    pub c6: f64,
    pub truncation_n: usize,
}

impl WickConstants {
    /// Gaussian-pairing prediction for the fourth moment sum.
    pub fn wick4(&self) -> f64 {
        2.0 * self.c_nu * self.c_nu - self.c4
    }

    /// Gaussian-pairing prediction for the sixth moment sum.
    pub fn wick6(&self) -> f64 {
        6.0 * self.c_nu.powi(3) - 9.0 * self.c_nu * self.c4 + 4.0 * self.c6
    }
}

pub fn wick_constants(spec: &CantorSpec, n: usize) -> WickConstants {
    let tab = spec.coefficient_table(n, None);
    wick_from_table(&tab)
}

/// Wick constants from a coefficient table indexed from 0.
pub fn wick_from_table(tab: &[Complex64]) -> WickConstants {
    let sq = |k: usize| tab[k].norm_sqr() / k as f64;
    let n = tab.len().saturating_sub(1);
    WickConstants {
        c_nu: kahan_sum((1..=n).map(sq)),
        c4: kahan_sum((1..=n).map(|k| sq(k).powi(2))),
        c6: kahan_sum((1..=n).map(|k| sq(k).powi(3))),
        truncation_n: n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallMassProfile {
    pub deltas: Vec<f64>,
    pub masses: Vec<f64>,
    pub resolved: Vec<bool>,
    pub fit: Option<LineFit>,
}

/// Largest mass of any interval `[c - delta, c + delta]`, per delta.
pub fn ball_mass_profile(atoms: &MeasureAtoms, deltas: &[f64]) -> Result<BallMassProfile> {
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(LabError::Domain("deltas must be positive".into()));
    }
    let mut idx: Vec<usize> = (0..atoms.len()).collect();
    idx.sort_by(|&a, &b| atoms.points[a].total_cmp(&atoms.points[b]));
    let pts: Vec<f64> = idx.iter().map(|&i| atoms.points[i]).collect();
    let wts: Vec<f64> = idx.iter().map(|&i| atoms.weights[i]).collect();
    let mut prefix = vec![0.0; pts.len() + 1];
    for i in 0..pts.len() {
        prefix[i + 1] = prefix[i] + wts[i];
    }
    let (lo, hi) = atoms.hull();
    let width = hi - lo;
    let res = 3.0 * atoms.resolution();
    let mut masses = Vec::with_capacity(deltas.len());
    let mut resolved = Vec::with_capacity(deltas.len());
    for &d in deltas {
        // sliding window over sorted points gives the exact supremum over centres
        let mut best = 0.0f64;
        let mut j = 0;
        for i in 0..pts.len() {
            if j < i {
                j = i;
            }
            while j < pts.len() && pts[j] - pts[i] <= 2.0 * d * (1.0 + 1e-12) {
                j += 1;
            }
            best = best.max(prefix[j] - prefix[i]);
        }
        masses.push(best.min(1.0));
        resolved.push(d >= res && d <= width / 4.0);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(&masses)
        .zip(&resolved)
        .filter(|(_, r)| **r)
        .map(|((d, m), _)| (d.ln(), m.ln()))
        .unzip();
    Ok(BallMassProfile {
        deltas: deltas.to_vec(),
        masses,
        resolved,
        fit: line_fit(&x, &y),
    })
}

/// `sum_k weight_k / |p_k - alpha_star|` with the distance to the nearest atom.
pub fn riesz_potential(atoms: &MeasureAtoms, alpha_star: f64) -> Result<(f64, f64)> {
    let eta = atoms
        .points
        .iter()
        .fold(f64::INFINITY, |a, p| a.min((p - alpha_star).abs()));
    let (lo, hi) = atoms.hull();
    if alpha_star >= lo && alpha_star <= hi && eta <= atoms.resolution() {
        return Err(LabError::Singularity(format!(
            "alpha* = {alpha_star} lies within {eta:e} of an atom"
        )));
    }
    let v = kahan_sum(atoms.iter().map(|(p, w)| w / (p - alpha_star).abs()));
    Ok((v, eta))
}

/// Header line of a coefficient cache.
pub fn cache_header(spec: &CantorSpec, level: Option<u32>) -> String {
    format!(
        "# cantor-lab coefficients theta0={:.17e} theta1={:.17e} keep={} base={} level={} product={} threshold={:e}",
        spec.theta0,
        spec.theta1,
        spec.keep_count,
        spec.base,
        spec.level,
        level.map_or("full".to_string(), |l| format!("truncated:{l}")),
        PRODUCT_THRESHOLD
    )
}

/// Writes `n,re,im` lines with 17 significant digits; returns the SHA-256 of the file.
pub fn write_coefficient_cache(
    path: &Path,
    spec: &CantorSpec,
    level: Option<u32>,
    table: &[Complex64],
) -> Result<String> {
    let mut s = String::with_capacity(table.len() * 52);
    s.push_str(&cache_header(spec, level));
    s.push('\n');
    for (n, z) in table.iter().enumerate() {
        writeln!(s, "{},{:.16e},{:.16e}", n, z.re, z.im).expect("string write");
    }
    std::fs::write(path, s.as_bytes())?;
    Ok(sha256_hex(s.as_bytes()))
}

/// Reads a cache back, checking that its header matches `spec`.
pub fn read_coefficient_cache(
    path: &Path,
    spec: &CantorSpec,
    level: Option<u32>,
) -> Result<(Vec<Complex64>, String)> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != cache_header(spec, level) {
        return Err(LabError::Config(format!(
            "cache header mismatch in {}",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let parse = |k: usize| -> Result<f64> {
            f.get(k)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| LabError::Config(format!("bad cache line {}", i + 2)))
        };
        if parse(0)? as usize != i {
            return Err(LabError::Config(format!("cache index gap at line {}", i + 2)));
        }
        out.push(Complex64::new(parse(1)?, parse(2)?));
    }
    Ok((out, sha256_hex(&bytes)))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_product(spec: &CantorSpec, n: f64, levels: u32) -> f64 {
        (1..=levels).fold(1.0, |acc, j| acc * (n * spec.width() / 3f64.powi(j as i32)).cos())
    }

    #[test]
    fn level_one_atoms() {
        let spec = CantorSpec::default().with_level(1);
        let a = build_atoms(&spec, Target::Native).unwrap();
        assert_eq!(a.points, vec![0.75, 1.75]);
        assert_eq!(a.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn default_atom_count_and_weights() {
        let a = build_atoms(&CantorSpec::default(), Target::Native).unwrap();
        assert_eq!(a.len(), 4096);
        assert!((kahan_sum(a.weights.iter().copied()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_pushforward_support() {
        let a = build_atoms(&CantorSpec::default(), Target::Unit).unwrap();
        let (lo, hi) = a.hull();
        assert!(lo >= 1.0 / (4.0 * PI) - 1e-15 && hi <= 1.0 / PI + 1e-15);
    }

    #[test]
    fn invalid_interval() {
        assert!(CantorSpec::new(2.0, 0.5, 12, 2, 3).is_err());
        assert!(CantorSpec::new(0.5, 7.0, 12, 2, 3).is_err());
        assert!(CantorSpec::new(0.5, 2.0, 12, 3, 3).is_err());
    }

    #[test]
    fn coefficient_matches_long_product() {
        let spec = CantorSpec::default();
        for n in [1u64, 2, 7, 100, 12345, 9_876_543] {
            let z = spec.nu_hat(n);
            let r = direct_product(&spec, n as f64, 60);
            // both sides round the arguments n w 3^-j independently
            let tol = 1e-15 + 4e-16 * n as f64;
            assert!((z.norm() - r.abs()).abs() < tol, "n={n}");
            let want = Complex64::from_polar(1.0, n as f64 * 1.25) * r;
            assert!((z - want).norm() < 1e-13 + 4e-16 * n as f64);
        }
        assert_eq!(spec.nu_hat(0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn triple_index_self_similarity() {
        let spec = CantorSpec::default();
        for n in 1..=100u64 {
            let a = spec.digit_product(3.0 * n as f64, None).re;
            let b = (spec.width() * n as f64).cos() * spec.digit_product(n as f64, None).re;
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_transform_is_truncated_product() {
        let spec = CantorSpec::default();
        let a = build_atoms(&spec, Target::Native).unwrap();
        for n in [0i64, 1, 50, 999, 10_000] {
            let e = nu_hat_empirical(&a, n).unwrap();
            let t = spec.nu_hat_level(n as u64, 12);
            assert!((e - t).norm() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn generic_digit_sets() {
        let s = CantorSpec::new(0.5, 2.0, 6, 5, 7).unwrap();
        assert_eq!(s.digits(), vec![0, 2, 3, 4, 6]);
        let s = CantorSpec::new(0.5, 2.0, 6, 3, 4).unwrap();
        assert_eq!(s.digits(), vec![0, 2, 3]);
        let a = build_atoms(&s, Target::Native).unwrap();
        for n in [1i64, 17, 300] {
            let e = nu_hat_empirical(&a, n).unwrap();
            assert!((e - s.nu_hat_level(n as u64, 6)).norm() < 1e-13);
        }
        // cumulant tail against the brute product
        for n in [3u64, 1000, 123_456] {
            let brute = s.digit_product(n as f64, Some(80));
            assert!((brute - s.digit_product(n as f64, None)).norm() < 1e-15);
        }
    }

    #[test]
    fn wick_constants_small() {
        let w = wick_constants(&CantorSpec::default(), 1000);
        assert!(w.c_nu > 0.0 && w.c4 > 0.0 && w.c4 < w.c_nu && w.c6 < w.c4);
    }

    #[test]
    fn ball_mass_trivial_cases() {
        let a = build_atoms(&CantorSpec::default(), Target::Unit).unwrap();
        let (lo, hi) = a.hull();
        let w = hi - lo;
        let p = ball_mass_profile(&a, &[w, w / 6.0]).unwrap();
        assert!((p.masses[0] - 1.0).abs() < 1e-12);
        assert!((p.masses[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn riesz_far_point() {
        let a = build_atoms(&CantorSpec::default(), Target::Unit).unwrap();
        let (v, eta) = riesz_potential(&a, 2.0).unwrap();
        assert!(eta >= 1.0 && v <= 1.0);
        let mid = a.points[2048];
        assert!(riesz_potential(&a, mid).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let spec = CantorSpec::default();
        let tab = spec.coefficient_table(50, None);
        let dir = std::env::temp_dir().join(format!("cl-cache-{}", std::process::id()));
        let sum = write_coefficient_cache(&dir, &spec, None, &tab).unwrap();
        let (back, sum2) = read_coefficient_cache(&dir, &spec, None).unwrap();
        assert_eq!(sum, sum2);
        assert_eq!(back, tab);
        std::fs::remove_file(dir).ok();
    }
}
