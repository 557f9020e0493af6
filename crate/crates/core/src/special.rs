//! Hurwitz and periodic zeta evaluators, the functional-equation factor, partial
//! sums, and three independent ways of evaluating the Cantor L-function.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure::{build_atoms, CantorSpec, MeasureAtoms, Target};
use crate::numeric::{kahan_sum, KahanC};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub sigma: f64,
    pub t: f64,
}

impl ComplexPoint {
    pub fn new(sigma: f64, t: f64) -> Self {
        ComplexPoint { sigma, t }
    }

    pub fn critical(t: f64) -> Self {
        ComplexPoint { sigma: 0.5, t }
    }

    pub fn s(&self) -> Complex64 {
        Complex64::new(self.sigma, self.t)
    }
}

impl From<Complex64> for ComplexPoint {
    fn from(z: Complex64) -> Self {
        ComplexPoint::new(z.re, z.im)
    }
}

// B_{2k} / (2k)! for k = 1..=15
fn bernoulli_scaled() -> &'static [f64; 15] {
    static TAB: OnceLock<[f64; 15]> = OnceLock::new();
    TAB.get_or_init(|| {
        let b: [(f64, f64); 15] = [
            (1.0, 6.0),
            (-1.0, 30.0),
            (1.0, 42.0),
            (-1.0, 30.0),
            (5.0, 66.0),
            (-691.0, 2730.0),
            (7.0, 6.0),
            (-3617.0, 510.0),
            (43867.0, 798.0),
            (-174611.0, 330.0),
            (854513.0, 138.0),
            (-236364091.0, 2730.0),
            (8553103.0, 6.0),
            (-23749461029.0, 870.0),
            (8615841276005.0, 14322.0),
        ];
        let mut out = [0.0; 15];
        let mut fact = 1.0;
        for k in 1..=15 {
            fact *= ((2 * k - 1) * (2 * k)) as f64;
            out[k - 1] = b[k - 1].0 / b[k - 1].1 / fact;
        }
        out
    })
}

fn ln_sin_pi(z: Complex64) -> Complex64 {
    let two_i = Complex64::new(0.0, 2.0);
    if z.im >= 0.0 {
        -I * PI * z + ((I * 2.0 * PI * z).exp() - 1.0).ln() - two_i.ln()
    } else {
        I * PI * z + (1.0 - (-I * 2.0 * PI * z).exp()).ln() - two_i.ln()
    }
}

/// Log-gamma by upward shift and the Stirling series.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(1.0 - z);
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.norm() < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    // B_{2k} / (2k (2k-1)) for k = 1..=10
    const C: [f64; 10] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
        43867.0 / 244188.0,
        -174611.0 / 125400.0,
    ];
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut p = inv;
    let mut series = Complex64::new(0.0, 0.0);
    for c in C {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

/// Hurwitz zeta by Euler-Maclaurin with Bernoulli terms through B_30.
pub fn hurwitz_zeta(s: ComplexPoint, alpha: f64) -> Result<Complex64> {
    hurwitz_zeta_c(s.s(), alpha)
}

pub fn hurwitz_zeta_c(s: Complex64, alpha: f64) -> Result<Complex64> {
    if !(alpha > 0.0) {
        return Err(LabError::Domain(format!("Hurwitz shift must be positive, got {alpha}")));
    }
    if (s - 1.0).norm() == 0.0 {
        return Err(LabError::Pole("Hurwitz zeta at s = 1".into()));
    }
    let m0 = (2.0 * s.norm() / PI).ceil().max(12.0) as usize;
    let mut acc = KahanC::new();
    for m in 0..m0 {
        acc.add((-s * (m as f64 + alpha).ln()).exp());
    }
    let a = m0 as f64 + alpha;
    let la = a.ln();
    let a_s = (-s * la).exp();
    acc.add(a_s * a / (s - 1.0));
    acc.add(0.5 * a_s);
    let inv_a2 = 1.0 / (a * a);
    let mut p = s * a_s / a;
    for (k, b) in bernoulli_scaled().iter().enumerate() {
        let term = p * *b;
        acc.add(term);
        if term.norm() < 1e-18 * acc.value().norm() {
            break;
        }
        let j = 2.0 * k as f64 + 1.0;
        p *= (s + j) * (s + j + 1.0) * inv_a2;
    }
    Ok(acc.value())
}

/// `Gamma(1 - s) (2 pi)^(s - 1)` kept in logarithmic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiFactor {
    pub s: ComplexPoint,
    pub ln: (f64, f64),
}

impl ChiFactor {
    pub fn at(s: ComplexPoint) -> Self {
        let z = s.s();
        let l = ln_gamma(1.0 - z) + (z - 1.0) * (2.0 * PI).ln();
        ChiFactor { s, ln: (l.re, l.im) }
    }

    pub fn ln_value(&self) -> Complex64 {
        Complex64::new(self.ln.0, self.ln.1)
    }

    /// May underflow for large |t|; prefer `combined`.
    pub fn value(&self) -> Complex64 {
        self.ln_value().exp()
    }

    /// Log of `chi * e^{sign i pi (1 - s) / 2}`.
    pub fn ln_combined(&self, sign: f64) -> Complex64 {
        self.ln_value() + sign * I * PI * (1.0 - self.s.s()) / 2.0
    }

    pub fn combined(&self, sign: f64) -> Complex64 {
        let l = self.ln_combined(sign);
        if l.re < -745.0 {
            Complex64::new(0.0, 0.0)
        } else {
            l.exp()
        }
    }
}

/// The factor on the critical line.
pub fn chi_factor(t: f64) -> ChiFactor {
    if t.abs() < 1.0 {
        log::warn!("chi factor at |t| = {} < 1: asymptotic invariants do not apply", t.abs());
    }
    ChiFactor::at(ComplexPoint::critical(t))
}

const DIRECT_TERM_BUDGET: f64 = 4e6;

/// `sum_{n>=1} e^{i n theta} n^{-s}`, continued through the Lerch functional equation.
pub fn periodic_zeta(theta: f64, s: ComplexPoint) -> Result<Complex64> {
    let th = theta.rem_euclid(2.0 * PI);
    let r = th.min(2.0 * PI - th);
    let z = s.s();
    if r < 1e-14 {
        if s.sigma > 1.0 {
            return hurwitz_zeta_c(z, 1.0);
        }
        return Err(LabError::Divergence(format!(
            "theta = {theta} is a multiple of 2pi and sigma = {} <= 1",
            s.sigma
        )));
    }
    let n = direct_length(z, r);
    if s.sigma > 1.25 && (n as f64) <= DIRECT_TERM_BUDGET {
        Ok(periodic_direct(th, z, n))
    } else {
        periodic_fe(th, s)
    }
}

/// Truncation point for `periodic_direct` at distance `r` from `2 pi Z`.
pub fn direct_length(s: Complex64, r: f64) -> usize {
    (3.0 * (s.norm() + 40.0) / r).max(20.0).ceil() as usize
}

/// Partial sum to `n` plus the tail `e^{i n theta} sum_k b_k (-1)^k (s)_k n^{-s-k}`,
/// with `b_k` the Taylor coefficients of `1 / (1 - e^{i theta} e^x)`. The tail series
/// is asymptotic; `direct_length` picks `n` so its 40 terms contract by 1/3 each.
pub fn periodic_direct(theta: f64, s: Complex64, n: usize) -> Complex64 {
    let zt = Complex64::from_polar(1.0, theta);
    let mut acc = KahanC::new();
    for k in 1..n {
        let kf = k as f64;
        acc.add(Complex64::from_polar(1.0, kf * theta) * (-s * kf.ln()).exp());
    }
    const K: usize = 40;
    let mut b = [Complex64::new(0.0, 0.0); K];
    let g = 1.0 / (1.0 - zt);
    b[0] = g;
    let mut inv_fact = [1.0f64; K];
    for j in 1..K {
        inv_fact[j] = inv_fact[j - 1] / j as f64;
    }
    for k in 1..K {
        let mut v = Complex64::new(0.0, 0.0);
        for j in 1..=k {
            v += b[k - j] * inv_fact[j];
        }
        b[k] = zt * g * v;
    }
    let nf = n as f64;
    let lead = Complex64::from_polar(1.0, nf * theta) * (-s * nf.ln()).exp();
    let mut poch = Complex64::new(1.0, 0.0);
    let mut tail = KahanC::new();
    for (k, bk) in b.iter().enumerate() {
        tail.add(*bk * poch);
        poch *= -(s + k as f64) / nf;
    }
    acc.add(lead * tail.value());
    acc.value()
}

/// Functional-equation branch:
/// `F = chi [e^{i pi (1-s)/2} zeta(1-s, a) + e^{-i pi (1-s)/2} zeta(1-s, 1-a)]`, `a = theta / 2pi`.
pub fn periodic_fe(theta: f64, s: ComplexPoint) -> Result<Complex64> {
    let z = s.s();
    let zt = Complex64::from_polar(1.0, theta);
    if z.norm() == 0.0 {
        return Ok(zt / (1.0 - zt));
    }
    if (z - 1.0).norm() == 0.0 {
        return Ok(-(1.0 - zt).ln());
    }
    if z.im == 0.0 && z.re >= 2.0 && z.re.fract() == 0.0 {
        // Gamma(1 - s) has a pole here; the series converges absolutely instead
        let th = theta.rem_euclid(2.0 * PI);
        let r = th.min(2.0 * PI - th);
        if r < 1e-14 {
            return hurwitz_zeta_c(z, 1.0);
        }
        return Ok(periodic_direct(th, z, direct_length(z, r)));
    }
    let a = theta.rem_euclid(2.0 * PI) / (2.0 * PI);
    let chi = ChiFactor::at(s);
    let w = 1.0 - z;
    let mut out = Complex64::new(0.0, 0.0);
    for (sign, shift) in [(1.0, a), (-1.0, 1.0 - a)] {
        let c = chi.combined(sign);
        if c.norm() == 0.0 {
            continue;
        }
        out += c * hurwitz_zeta_c(w, shift)?;
    }
    Ok(out)
}

/// `H_{M-1} = sum_{m=1}^{M-1} 1/m`.
pub fn harmonic(m: u64) -> f64 {
    kahan_sum((1..m).map(|k| 1.0 / k as f64))
}

/// `sum_{n=lo}^{hi} n^{s-1} (n+h)^{-s}`; empty when `lo > hi`.
pub fn j_sum(h: u64, s: ComplexPoint, lo: u64, hi: u64) -> Complex64 {
    let z = s.s();
    let mut acc = KahanC::new();
    for n in lo.max(1)..=hi {
        let nf = n as f64;
        acc.add(((z - 1.0) * nf.ln() - z * (nf + h as f64).ln()).exp());
    }
    acc.value()
}

/// Summation range for a partial sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialSumSpec {
    pub m: u64,
    pub lo: u64,
    pub hi: u64,
}

impl PartialSumSpec {
    /// Lerch-side range `[1, m-1]`; empty for `m <= 1`.
    pub fn lerch(m: u64) -> Self {
        PartialSumSpec { m, lo: 1, hi: m.saturating_sub(1) }
    }

    /// Hurwitz-side range `[0, m-1]`.
    pub fn hurwitz(m: u64) -> Self {
        PartialSumSpec { m, lo: 0, hi: m.saturating_sub(1) }
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0 || self.lo > self.hi
    }
}

/// `floor(sqrt(t / 2pi))`.
pub fn afe_length(t: f64) -> u64 {
    (t.abs() / (2.0 * PI)).sqrt().floor() as u64
}

/// `floor(sqrt(t))`.
pub fn identity_length(t: f64) -> u64 {
    t.abs().sqrt().floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartialSumKind {
    /// `sum n^{s-1} e^{-i n theta}`
    P,
    /// `sum n^{-s} e^{i n theta}`
    Q,
    /// `sum (m + alpha)^{-s}`
    SHurwitz,
    /// `sum (m + alpha)^{s-1}`
    Dual,
}

pub fn partial_sums(x: f64, s: ComplexPoint, spec: PartialSumSpec, kind: PartialSumKind) -> Complex64 {
    if spec.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let z = s.s();
    let mut acc = KahanC::new();
    for n in spec.lo..=spec.hi {
        let nf = n as f64;
        let v = match kind {
            PartialSumKind::P if n > 0 => ((z - 1.0) * nf.ln() - I * nf * x).exp(),
            PartialSumKind::Q if n > 0 => (-z * nf.ln() + I * nf * x).exp(),
            PartialSumKind::SHurwitz => (-z * (nf + x).ln()).exp(),
            PartialSumKind::Dual => ((z - 1.0) * (nf + x).ln()).exp(),
            _ => continue,
        };
        acc.add(v);
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    /// Hard truncation of both sums.
    Sharp,
    /// Gaussian Mellin weight `e^{u^2 / beta^2}`; exact up to quadrature error.
    Smooth { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfeOptions {
    /// Main length `(t / 2pi)^a`, dual length `(t / 2pi)^(1-a)`.
    pub a: f64,
    pub cutoff: Cutoff,
}

impl Default for AfeOptions {
    fn default() -> Self {
        AfeOptions { a: 0.5, cutoff: Cutoff::Sharp }
    }
}

impl AfeOptions {
    pub fn smooth() -> Self {
        AfeOptions { a: 0.5, cutoff: Cutoff::Smooth { beta: 8.0 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Direct,
    MeasureAverage,
    Afe(AfeOptions),
}

/// A Cantor L-function together with its atom approximations.
pub struct LFunction {
    pub spec: CantorSpec,
    pub native: MeasureAtoms,
    pub unit: MeasureAtoms,
    pub unit_reflected: MeasureAtoms,
    coeffs: std::sync::RwLock<Vec<Complex64>>,
}

impl LFunction {
    pub fn new(spec: CantorSpec) -> Result<Self> {
        Ok(LFunction {
            native: build_atoms(&spec, Target::Native)?,
            unit: build_atoms(&spec, Target::Unit)?,
            unit_reflected: build_atoms(&spec, Target::UnitReflected)?,
            spec,
            coeffs: std::sync::RwLock::new(Vec::new()),
        })
    }

    /// Level-truncated coefficients `0..=n`, consistent with the atoms.
    pub fn coefficients(&self, n: usize) -> Vec<Complex64> {
        {
            let c = self.coeffs.read().expect("coefficient lock");
            if c.len() > n {
                return c[..=n].to_vec();
            }
        }
        let tab = self.spec.coefficient_table(n, Some(self.spec.level));
        let mut c = self.coeffs.write().expect("coefficient lock");
        if c.len() < tab.len() {
            *c = tab.clone();
        }
        tab
    }

    /// Supremum over the support of `1 / |sin(theta / 2)|`: bounds every partial
    /// sum of the coefficients.
    pub fn partial_sum_bound(&self) -> f64 {
        self.native
            .points
            .iter()
            .fold(0.0f64, |a, &p| a.max(1.0 / (p / 2.0).sin().abs()))
    }

    pub fn eval(&self, s: ComplexPoint, method: Method) -> Result<Complex64> {
        match method {
            Method::Direct => self.direct(s, 1e-11),
            Method::MeasureAverage => self.measure_average(s),
            Method::Afe(o) => self.afe(s, o),
        }
    }

    /// Coefficient sum truncated where the partial-summation tail bound drops below `tol`.
    pub fn direct(&self, s: ComplexPoint, tol: f64) -> Result<Complex64> {
        if s.sigma <= 1.25 {
            return Err(LabError::Domain(format!(
                "direct summation needs sigma > 1.25, got {}",
                s.sigma
            )));
        }
        let bound = self.partial_sum_bound() * (1.0 + s.s().norm() / s.sigma);
        let n = (bound / tol).powf(1.0 / s.sigma).ceil();
        if n > 5e7 {
            return Err(LabError::Budget(format!("direct sum needs {n:e} terms")));
        }
        let n = n as usize;
        let z = s.s();
        const CHUNK: usize = 1 << 16;
        let starts: Vec<usize> = (1..=n).step_by(CHUNK).collect();
        let parts: Vec<Complex64> = starts
            .par_iter()
            .map(|&lo| {
                let hi = (lo + CHUNK - 1).min(n);
                let mut acc = KahanC::new();
                for k in lo..=hi {
                    let c = self.spec.nu_hat_level(k as u64, self.spec.level);
                    acc.add(c * (-z * (k as f64).ln()).exp());
                }
                acc.value()
            })
            .collect();
        let mut acc = KahanC::new();
        for p in parts {
            acc.add(p);
        }
        Ok(acc.value())
    }

    pub fn measure_average(&self, s: ComplexPoint) -> Result<Complex64> {
        let vals: Vec<Result<Complex64>> = self
            .native
            .points
            .par_iter()
            .map(|&th| periodic_zeta(th, s))
            .collect();
        let mut acc = KahanC::new();
        for (v, w) in vals.into_iter().zip(&self.native.weights) {
            acc.add(v? * *w);
        }
        Ok(acc.value())
    }

    pub fn afe(&self, s: ComplexPoint, o: AfeOptions) -> Result<Complex64> {
        if (s.sigma - 0.5).abs() > 1e-12 || s.t < 50.0 {
            return Err(LabError::Domain(format!(
                "approximate functional equation needs sigma = 1/2 and t >= 50, got {:?}",
                s
            )));
        }
        if !(o.a > 0.0 && o.a < 1.0) {
            return Err(LabError::Domain(format!("asymmetry parameter {} not in (0,1)", o.a)));
        }
        match o.cutoff {
            Cutoff::Sharp => Ok(self.afe_sharp(s, o.a)),
            Cutoff::Smooth { beta } => self.afe_smooth(s, o.a, beta),
        }
    }

    /// `S_N + sum_pm chi_pm int sum_{m + alpha <= Y} (m + alpha)^{s-1}` over both pushforwards.
    pub fn afe_sharp(&self, s: ComplexPoint, a: f64) -> Complex64 {
        let z = s.s();
        let q = s.t / (2.0 * PI);
        let x = q.powf(a);
        let y = q / x;
        let n = x.floor() as usize;
        let coeffs = self.coefficients(n);
        let mut acc = KahanC::new();
        for (k, c) in coeffs.iter().enumerate().skip(1) {
            acc.add(*c * (-z * (k as f64).ln()).exp());
        }
        let chi = ChiFactor::at(s);
        for (sign, atoms) in [(1.0, &self.unit), (-1.0, &self.unit_reflected)] {
            let c = chi.combined(sign);
            if c.norm() == 0.0 {
                continue;
            }
            let parts: Vec<Complex64> = atoms
                .points
                .par_iter()
                .map(|&al| {
                    let mut d = KahanC::new();
                    let mut m = 0.0;
                    while m + al <= y {
                        d.add(((z - 1.0) * (m + al).ln()).exp());
                        m += 1.0;
                    }
                    d.value()
                })
                .collect();
            let mut dual = KahanC::new();
            for (p, w) in parts.iter().zip(&atoms.weights) {
                dual.add(*p * *w);
            }
            acc.add(c * dual.value());
        }
        acc.value()
    }

    /// Smooth-weight form: main terms weighted by `V(n / X)`, dual terms by the
    /// Mellin transform of the functional-equation factor, both tabulated in `log y`.
    pub fn afe_smooth(&self, s: ComplexPoint, a: f64, beta: f64) -> Result<Complex64> {
        let z = s.s();
        let q = s.t / (2.0 * PI);
        let x = q.powf(a);
        let y = q / x;
        // the weights fall below 1e-17 once beta ln(y) / 2 exceeds 6.2
        let reach = (12.5 / beta).exp();
        let rule = MellinRule::new(beta);
        let n = (x * reach).ceil() as usize;
        let coeffs = self.coefficients(n);
        let main_w = rule.table(|_| Complex64::new(1.0, 0.0), (1.0 / x).ln() - 0.1, reach.ln() + 0.1);
        let mut acc = KahanC::new();
        for (k, c) in coeffs.iter().enumerate().skip(1) {
            let kf = k as f64;
            acc.add(*c * (-z * kf.ln()).exp() * main_w.at((kf / x).ln()));
        }
        let ln2pi = (2.0 * PI).ln();
        for (sign, atoms) in [(1.0, &self.unit), (-1.0, &self.unit_reflected)] {
            // K(u) = chi(s - u) e^{sign i pi (1 - s + u) / 2}
            let kern = |u: Complex64| -> Complex64 {
                let w = z - u;
                (ln_gamma(1.0 - w) + (w - 1.0) * ln2pi + sign * I * PI * (1.0 - w) / 2.0).exp()
            };
            let (lo, hi) = atoms.hull();
            let ylo = (x * lo).ln() - 0.1;
            let yhi = (x * (y * reach + 1.0)).ln() + 0.1;
            let tab = rule.table(kern, ylo, yhi);
            if tab.negligible() {
                continue;
            }
            let mmax = (y * reach - lo).ceil().max(0.0) as usize;
            let _ = hi;
            let parts: Vec<Complex64> = atoms
                .points
                .par_iter()
                .map(|&al| {
                    let mut d = KahanC::new();
                    for m in 0..=mmax {
                        let v = m as f64 + al;
                        d.add(((z - 1.0) * v.ln()).exp() * tab.at((x * v).ln()));
                    }
                    d.value()
                })
                .collect();
            for (p, w) in parts.iter().zip(&atoms.weights) {
                acc.add(*p * *w);
            }
        }
        Ok(acc.value())
    }
}

/// Trapezoid rule for `(1 / 2 pi i) int_{(c)} K(u) e^{u^2/beta^2} y^{-u} du / u`.
struct MellinRule {
    nodes: Vec<Complex64>,
    scale: Vec<Complex64>,
}

impl MellinRule {
    fn new(beta: f64) -> Self {
        let c = 1.0;
        let h = 0.2;
        let vmax = beta * (38.0f64 + c * c / (beta * beta)).sqrt();
        let k = (vmax / h).ceil() as i64;
        let mut nodes = Vec::new();
        let mut scale = Vec::new();
        for j in -k..=k {
            let u = Complex64::new(c, j as f64 * h);
            nodes.push(u);
            scale.push((u * u / (beta * beta)).exp() / u * (h / (2.0 * PI)));
        }
        MellinRule { nodes, scale }
    }

    fn table<F: Fn(Complex64) -> Complex64 + Sync>(&self, kern: F, lo: f64, hi: f64) -> MellinTable {
        let step = 2e-3;
        let count = ((hi - lo) / step).ceil() as usize + 4;
        let lo = lo - step;
        let weights: Vec<Complex64> = self
            .nodes
            .iter()
            .zip(&self.scale)
            .map(|(u, sc)| kern(*u) * *sc)
            .collect();
        let values: Vec<Complex64> = (0..count)
            .into_par_iter()
            .map(|i| {
                let ly = lo + i as f64 * step;
                let mut acc = KahanC::new();
                for (u, w) in self.nodes.iter().zip(&weights) {
                    acc.add(*w * (-*u * ly).exp());
                }
                acc.value()
            })
            .collect();
        MellinTable { lo, step, values }
    }
}

struct MellinTable {
    lo: f64,
    step: f64,
    values: Vec<Complex64>,
}

impl MellinTable {
    fn negligible(&self) -> bool {
        self.values.iter().all(|v| v.norm() < 1e-300)
    }

    /// Four-point Lagrange interpolation in `log y`.
    fn at(&self, ly: f64) -> Complex64 {
        let f = (ly - self.lo) / self.step;
        let i = (f.floor() as isize).clamp(1, self.values.len() as isize - 3) as usize;
        let p = f - i as f64;
        let (y0, y1, y2, y3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        y0 * (-p * (p - 1.0) * (p - 2.0) / 6.0)
            + y1 * ((p + 1.0) * (p - 1.0) * (p - 2.0) / 2.0)
            + y2 * (-(p + 1.0) * p * (p - 2.0) / 2.0)
            + y3 * ((p + 1.0) * p * (p - 1.0) / 6.0)
    }
}

/// Convenience wrapper building the atoms on every call.
pub fn l_eval(s: ComplexPoint, method: Method, spec: &CantorSpec) -> Result<Complex64> {
    LFunction::new(*spec)?.eval(s, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let v = ln_gamma(Complex64::new(0.5, 0.0));
        assert!((v.re - 0.5 * PI.ln()).abs() < 1e-14);
        let v = ln_gamma(Complex64::new(10.0, 0.0));
        assert!((v.re - 362880f64.ln()).abs() < 1e-12);
        // reflection branch: Gamma(-0.5) = -2 sqrt(pi)
        let v = ln_gamma(Complex64::new(-0.5, 0.0)).exp();
        assert!((v.re + 2.0 * PI.sqrt()).abs() < 1e-12);
        // |Gamma(1/2 + i t)|^2 = pi / cosh(pi t)
        let v = ln_gamma(Complex64::new(0.5, 3.0));
        assert!((2.0 * v.re - (PI / (PI * 3.0).cosh()).ln()).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_basel() {
        let v = hurwitz_zeta(ComplexPoint::new(2.0, 0.0), 1.0).unwrap();
        assert!((v.re - PI * PI / 6.0).abs() < 1e-12 && v.im.abs() < 1e-15);
    }

    #[test]
    fn hurwitz_errors() {
        assert!(hurwitz_zeta(ComplexPoint::new(1.0, 0.0), 1.0).is_err());
        assert!(hurwitz_zeta(ComplexPoint::new(2.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn hurwitz_half_shift() {
        for s in [Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(0.5, 5.0)] {
            let lhs = hurwitz_zeta_c(s, 0.5).unwrap();
            let rhs = ((2.0f64.ln() * s).exp() - 1.0) * hurwitz_zeta_c(s, 1.0).unwrap();
            assert!(close(lhs, rhs, 1e-11), "{s}");
        }
    }

    #[test]
    fn hurwitz_large_height_recurrence() {
        let s = Complex64::new(0.5, 20000.0);
        let a = hurwitz_zeta_c(s, 0.3).unwrap();
        let b = hurwitz_zeta_c(s, 1.3).unwrap();
        let d = (-s * 0.3f64.ln()).exp();
        assert!((a - b - d).norm() < 1e-10 * d.norm());
    }

    #[test]
    fn periodic_alternating_basel() {
        let v = periodic_zeta(PI, ComplexPoint::new(2.0, 0.0)).unwrap();
        assert!((v.re + PI * PI / 12.0).abs() < 1e-12 && v.im.abs() < 1e-13, "{v}");
    }

    #[test]
    fn periodic_branches_agree() {
        for (th, s) in [
            (1.0f64, ComplexPoint::new(3.0, 0.3)),
            (1.0, ComplexPoint::new(2.5, 0.0)),
            (0.7, ComplexPoint::new(1.5, 20.0)),
            (2.5, ComplexPoint::new(1.8, -7.0)),
        ] {
            let d = periodic_direct(th, s.s(), direct_length(s.s(), th.min(2.0 * PI - th)));
            let f = periodic_fe(th, s).unwrap();
            assert!(close(d, f, 1e-9), "{th} {s:?}: {d} vs {f}");
        }
    }

    #[test]
    fn periodic_divergence() {
        assert!(periodic_zeta(0.0, ComplexPoint::new(0.5, 10.0)).is_err());
        assert!(periodic_zeta(2.0 * PI, ComplexPoint::new(2.0, 0.0)).is_ok());
    }

    #[test]
    fn chi_modulus_and_symmetry() {
        for t in [100.0, 1000.0, 1e5] {
            let c = chi_factor(t);
            let m = c.combined(1.0).norm();
            assert!((m - 1.0).abs() < 1e-6, "{t}: {m}");
            let cm = chi_factor(-t);
            assert!((c.value() - cm.value().conj()).norm() <= 1e-12 * c.value().norm());
        }
    }

    #[test]
    fn harmonic_values() {
        assert!((harmonic(4) - 11.0 / 6.0).abs() < 1e-15);
        assert_eq!(harmonic(2), 1.0);
    }

    #[test]
    fn j_sum_trivia() {
        let v = j_sum(1, ComplexPoint::new(0.5, 0.0), 1, 1);
        assert!((v.re - 0.5f64.sqrt()).abs() < 1e-15);
        let s = ComplexPoint::new(0.5, 37.0);
        assert!((j_sum(0, s, 1, 9) - Complex64::new(harmonic(10), 0.0)).norm() < 1e-13);
        assert_eq!(j_sum(3, s, 5, 4), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn partial_sum_conjugacy() {
        let s = ComplexPoint::critical(1234.5);
        let spec = PartialSumSpec::lerch(35);
        let p = partial_sums(1.1, s, spec, PartialSumKind::P);
        let q = partial_sums(1.1, s, spec, PartialSumKind::Q);
        assert!((q - p.conj()).norm() < 1e-15 * (1.0 + p.norm()) * 10.0);
        assert_eq!(partial_sums(1.1, s, PartialSumSpec::lerch(1), PartialSumKind::P), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn direct_equals_measure_average() {
        let f = LFunction::new(CantorSpec::default().with_level(6)).unwrap();
        let s = ComplexPoint::new(2.0, 0.0);
        let a = f.eval(s, Method::Direct).unwrap();
        let b = f.eval(s, Method::MeasureAverage).unwrap();
        assert!((a - b).norm() < 1e-9, "{a} {b}");
    }

    #[test]
    fn smooth_afe_matches_measure_average() {
        let f = LFunction::new(CantorSpec::default().with_level(5)).unwrap();
        for t in [60.0, 500.0, 3000.0] {
            let s = ComplexPoint::critical(t);
            let a = f.afe(s, AfeOptions::smooth()).unwrap();
            let b = f.measure_average(s).unwrap();
            assert!((a - b).norm() < 1e-6 * b.norm().max(0.1), "t={t}: {a} {b}");
            let sh = f.afe(s, AfeOptions::default()).unwrap();
            assert!((sh - b).norm() < 0.5 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn method_region_checks() {
        let f = LFunction::new(CantorSpec::default().with_level(3)).unwrap();
        assert!(f.eval(ComplexPoint::new(1.0, 0.0), Method::Direct).is_err());
        assert!(f.eval(ComplexPoint::new(0.7, 100.0), Method::Afe(AfeOptions::default())).is_err());
        assert!(f.eval(ComplexPoint::critical(10.0), Method::Afe(AfeOptions::default())).is_err());
    }
}
