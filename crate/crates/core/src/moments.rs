//! Second and fourth moments: the Hurwitz off-diagonal OD(t), the Fourier
//! reformulation over the unit interval, t-integrated second moment of L, the
//! product-variable mean-value apparatus and the Lebesgue-average oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure::{MeasureAtoms, Target};
use crate::numeric::{gauss_legendre, kahan_sum, GridScan, Kahan, KahanC};
use crate::special::{afe_length, hurwitz_zeta, identity_length, ChiFactor, ComplexPoint, LFunction};

/// GL panel width and order used for every t-integral.
pub const PANEL_WIDTH: f64 = 0.5;
pub const PANEL_ORDER: usize = 8;

// atoms are processed in fixed-size chunks so sums do not depend on thread count
const ATOM_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    /// Left end of the window (or the height, for pointwise checks).
    pub start: f64,
    pub value: f64,
    pub main_term: f64,
    pub ratio: f64,
    pub quadrature_points: usize,
}

impl MomentResult {
    pub fn deviation(&self) -> f64 {
        (self.ratio - 1.0).abs()
    }
}

fn require_unit(atoms: &MeasureAtoms) -> Result<()> {
    match atoms.target {
        Target::Native => Err(LabError::Domain("expected atoms on the unit interval".into())),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// OD(t)

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdResult {
    pub t: f64,
    /// Number of Hurwitz terms, `m = 0 ..= floor(sqrt(t / 2pi))`.
    pub terms: u64,
    /// `sum_{m != m'}`, real by symmetry.
    pub od: f64,
    /// `sum_{m < m'}` of the averaged cross terms.
    pub upper_pairs: Complex64,
    pub diagonal: f64,
    /// `int |S_M|^2` computed directly.
    pub full: f64,
    pub reconstruction_residual: f64,
}

impl OdResult {
    pub fn ratio(&self) -> f64 {
        self.od.abs() / self.diagonal
    }
}

pub fn od_t(t: f64, atoms: &MeasureAtoms) -> Result<OdResult> {
    require_unit(atoms)?;
    if t < 100.0 {
        return Err(LabError::Domain(format!("OD(t) needs t >= 100, got {}", t)));
    }
    let terms = afe_length(t) + 1;
    let per: Vec<(f64, f64, Complex64)> = atoms
        .points
        .par_iter()
        .map(|&al| {
            let mut s = KahanC::new();
            let mut diag = Kahan::new();
            let mut pairs = KahanC::new();
            for m in 0..terms {
                let v = m as f64 + al;
                let a = Complex64::from_polar(v.powf(-0.5), -t * v.ln());
                pairs.add(s.value() * a.conj());
                s.add(a);
                diag.add(1.0 / v);
            }
            (s.value().norm_sqr(), diag.value(), pairs.value())
        })
        .collect();
    let mut full = Kahan::new();
    let mut diag = Kahan::new();
    let mut pairs = KahanC::new();
    for ((f, d, p), w) in per.iter().zip(&atoms.weights) {
        full.add(f * w);
        diag.add(d * w);
        pairs.add(*p * *w);
    }
    let (full, diagonal, upper_pairs) = (full.value(), diag.value(), pairs.value());
    let od = 2.0 * upper_pairs.re;
    Ok(OdResult {
        t,
        terms,
        od,
        upper_pairs,
        diagonal,
        full,
        reconstruction_residual: (full - diagonal - od).abs(),
    })
}

/// Which summation range the lag sums use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LagRange {
    /// `n in [1, M-1-h]`, so both indices stay below `M`.
    Truncated,
    /// `n in [1, M-1]` for every lag `h <= M-2`.
    Full,
}

/// `sum_{h=1}^{M-2} nu^(h) J_h` with `M = floor(sqrt t)`, regrouped per atom as
/// `sum_{n < n'} n^{s-1} n'^{-s} e^{i(n'-n) theta}` in O(M) per atom.
pub fn od_prime(t: f64, atoms: &MeasureAtoms, range: LagRange) -> Complex64 {
    let m = identity_length(t) as usize;
    if m < 3 {
        return Complex64::new(0.0, 0.0);
    }
    let s = ComplexPoint::critical(t).s();
    let top = match range {
        LagRange::Truncated => m - 1,
        LagRange::Full => 2 * m - 3,
    };
    let lnk: Vec<f64> = (0..=top).map(|k| (k.max(1) as f64).ln()).collect();
    let per: Vec<Complex64> = atoms
        .points
        .par_iter()
        .map(|&p| {
            let th = atoms.angle(p);
            // prefix[k] = sum_{n' <= k} q_{n'}
            let mut prefix = vec![Complex64::new(0.0, 0.0); top + 1];
            let mut run = KahanC::new();
            for k in 1..=top {
                run.add((-s * lnk[k] + Complex64::new(0.0, k as f64 * th)).exp());
                prefix[k] = run.value();
            }
            let mut acc = KahanC::new();
            for n in 1..m {
                let hi = match range {
                    LagRange::Truncated => m - 1,
                    LagRange::Full => n + m - 2,
                };
                if hi <= n {
                    continue;
                }
                let pn = ((s - 1.0) * lnk[n] - Complex64::new(0.0, n as f64 * th)).exp();
                acc.add(pn * (prefix[hi] - prefix[n]));
            }
            acc.value()
        })
        .collect();
    let mut acc = KahanC::new();
    for (v, w) in per.iter().zip(&atoms.weights) {
        acc.add(*v * *w);
    }
    acc.value()
}

// ---------------------------------------------------------------------------
// Fourier reformulation on the unit interval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpResult {
    pub t: f64,
    /// Hurwitz terms `m = 1 ..= terms`; `m = 0` would make `|S|^2` non-integrable at 0.
    pub terms: u64,
    pub k_max: i64,
    /// `F_k` for `k = 0 ..= k_max`; `F_{-k}` is the conjugate.
    pub coefficients: Vec<Complex64>,
    pub nodes: usize,
    pub direct: f64,
    pub reconstruction: f64,
    pub rel_error: f64,
    /// Exponent sign of the transform that makes the identity hold.
    pub sign: i32,
    /// `max_k |k| |F_k|` over `1 <= k <= k_max`, and where it occurs.
    pub peak_weighted: f64,
    pub peak_k: i64,
    /// `|F(1) - F(0)| / 2pi`: the `1/k` tail forced by the endpoint jump.
    pub jump_constant: f64,
    /// Lags where `|k| |F_k|` exceeds ten times the jump constant.
    pub violations: Vec<i64>,
}

pub fn fp_coefficients(t: f64, k_max: i64, atoms: &MeasureAtoms) -> Result<FpResult> {
    let panels = ((k_max as f64 + t / (2.0 * PI)) / 2.0).ceil() as usize;
    fp_coefficients_on(t, k_max, atoms, panels.max(64))
}

/// As [`fp_coefficients`] with an explicit number of 16-node panels on [0, 1].
pub fn fp_coefficients_on(t: f64, k_max: i64, atoms: &MeasureAtoms, panels: usize) -> Result<FpResult> {
    require_unit(atoms)?;
    if t < 100.0 || k_max < 64 {
        return Err(LabError::Domain(format!("need t >= 100 and k_max >= 64, got {} and {}", t, k_max)));
    }
    let terms = afe_length(t);
    let order = 16;
    // two full cycles of the fastest phase per panel at most
    let cycles = k_max as f64 + t / (2.0 * PI);
    if panels * order < 8 * terms as usize || (panels as f64) < cycles / 2.0 {
        return Err(LabError::Quadrature(format!(
            "{} panels cannot resolve {:.0} cycles on [0,1]",
            panels, cycles
        )));
    }
    let sq = |al: f64| -> f64 {
        let mut s = KahanC::new();
        for m in 1..=terms {
            let v = m as f64 + al;
            s.add(Complex64::from_polar(v.powf(-0.5), -t * v.ln()));
        }
        s.value().norm_sqr()
    };
    let (x, w) = gauss_legendre(order);
    let h = 1.0 / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(h * (p as f64 + 0.5 * (xi + 1.0)));
            weights.push(0.5 * h * wi);
        }
    }
    let vals: Vec<f64> = nodes.par_iter().map(|&a| sq(a)).collect();
    let kn = (k_max + 1) as usize;
    let chunks: Vec<Vec<Complex64>> = nodes
        .par_chunks(1024)
        .zip(vals.par_chunks(1024))
        .zip(weights.par_chunks(1024))
        .map(|((ns, vs), ws)| {
            let mut out = vec![Complex64::new(0.0, 0.0); kn];
            for ((a, v), wt) in ns.iter().zip(vs).zip(ws) {
                let step = Complex64::from_polar(1.0, -2.0 * PI * a);
                let mut z = Complex64::new(v * wt, 0.0);
                for (k, o) in out.iter_mut().enumerate() {
                    if k % 64 == 0 {
                        z = Complex64::from_polar(v * wt, -2.0 * PI * k as f64 * a);
                    }
                    *o += z;
                    z *= step;
                }
            }
            out
        })
        .collect();
    let mut coefficients = vec![Complex64::new(0.0, 0.0); kn];
    for c in &chunks {
        for (o, v) in coefficients.iter_mut().zip(c) {
            *o += *v;
        }
    }
    let direct = {
        let per: Vec<f64> = atoms.points.par_iter().map(|&a| sq(a)).collect();
        kahan_sum(per.iter().zip(&atoms.weights).map(|(v, w)| v * w))
    };
    let angle_atoms = |k: i64| -> Result<Complex64> {
        // nu~ transform in the alpha variable: int e^{2 pi i k alpha}
        let mut acc = KahanC::new();
        for (p, wt) in atoms.iter() {
            acc.add(Complex64::from_polar(wt, 2.0 * PI * k as f64 * p));
        }
        Ok(acc.value())
    };
    let mut plus = KahanC::new();
    let mut minus = KahanC::new();
    for k in -k_max..=k_max {
        let f = if k >= 0 { coefficients[k as usize] } else { coefficients[(-k) as usize].conj() };
        plus.add(f * angle_atoms(k)?);
        minus.add(f * angle_atoms(-k)?);
    }
    let (plus, minus) = (plus.value().re, minus.value().re);
    let (sign, reconstruction) = if (plus - direct).abs() <= (minus - direct).abs() {
        (1, plus)
    } else {
        (-1, minus)
    };
    let jump_constant = (sq(1.0) - sq(0.0)).abs() / (2.0 * PI);
    let mut peak_weighted = 0.0;
    let mut peak_k = 0;
    let mut violations = Vec::new();
    for k in 1..=k_max {
        let wk = k as f64 * coefficients[k as usize].norm();
        if wk > peak_weighted {
            peak_weighted = wk;
            peak_k = k;
        }
        if wk > 10.0 * jump_constant {
            violations.push(k);
        }
    }
    Ok(FpResult {
        t,
        terms,
        k_max,
        coefficients,
        nodes: nodes.len(),
        direct,
        reconstruction,
        rel_error: ((reconstruction - direct) / direct).abs(),
        sign,
        peak_weighted,
        peak_k,
        jump_constant,
        violations,
    })
}

// ---------------------------------------------------------------------------
// Phase-recurrence chains for dense t-integrals

/// `z_i(t) = amp_i e^{sign i t freq_i}`, advanced in steps of fixed size.
struct Chains {
    re: Vec<f64>,
    im: Vec<f64>,
    rre: Vec<f64>,
    rim: Vec<f64>,
}

impl Chains {
    fn new(freq: &[f64], amp: &[f64], t0: f64, step: f64, sign: f64) -> Self {
        let n = freq.len();
        let mut c = Chains {
            re: Vec::with_capacity(n),
            im: Vec::with_capacity(n),
            rre: Vec::with_capacity(n),
            rim: Vec::with_capacity(n),
        };
        for (f, a) in freq.iter().zip(amp) {
            let z = Complex64::from_polar(*a, sign * (t0 * f).rem_euclid(2.0 * PI));
            let r = Complex64::from_polar(1.0, sign * step * f);
            c.re.push(z.re);
            c.im.push(z.im);
            c.rre.push(r.re);
            c.rim.push(r.im);
        }
        c
    }

    /// Sum of the first `n` chains at the current t, then one step forward.
    #[inline]
    fn sum_advance(&mut self, n: usize) -> Complex64 {
        let n = n.min(self.re.len());
        let mut acc = [0.0f64; 8];
        let (re, im) = (&self.re[..n], &self.im[..n]);
        let mut i = 0;
        while i + 4 <= n {
            for l in 0..4 {
                acc[l] += re[i + l];
                acc[4 + l] += im[i + l];
            }
            i += 4;
        }
        while i < n {
            acc[0] += re[i];
            acc[4] += im[i];
            i += 1;
        }
        for ((a, b), (c, d)) in self
            .re
            .iter_mut()
            .zip(self.im.iter_mut())
            .zip(self.rre.iter().zip(&self.rim))
        {
            let (x, y) = (*a, *b);
            *a = x * c - y * d;
            *b = x * d + y * c;
        }
        Complex64::new((acc[0] + acc[1]) + (acc[2] + acc[3]), (acc[4] + acc[5]) + (acc[6] + acc[7]))
    }
}

struct PanelGrid {
    lo: f64,
    h: f64,
    panels: usize,
    x: Vec<f64>,
    w: Vec<f64>,
}

impl PanelGrid {
    fn new(lo: f64, hi: f64, width: f64) -> Self {
        let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
        let (x, w) = gauss_legendre(PANEL_ORDER);
        PanelGrid { lo, h: (hi - lo) / panels as f64, panels, x, w }
    }

    fn offset(&self, j: usize) -> f64 {
        self.lo + 0.5 * self.h * (self.x[j] + 1.0)
    }

    fn weight(&self, j: usize) -> f64 {
        0.5 * self.h * self.w[j]
    }

    fn nodes(&self) -> usize {
        self.panels * self.x.len()
    }
}

/// `sum_atoms w_a sum_{m + alpha_a <= Y(t)} (m + alpha_a)^{sigma - 1 + it}` at
/// `t = t0 + p h`, `p < count`, with `Y(t) = (t / 2pi)^{1-a}`.
fn dual_track(atoms: &MeasureAtoms, sigma: f64, t0: f64, h: f64, count: usize, a: f64) -> Vec<Complex64> {
    let ylen = |t: f64| (t / (2.0 * PI)).powf(1.0 - a);
    let tend = t0 + h * count as f64;
    let chunks: Vec<Vec<Complex64>> = atoms
        .points
        .par_chunks(ATOM_CHUNK)
        .zip(atoms.weights.par_chunks(ATOM_CHUNK))
        .map(|(pts, wts)| {
            let mut out = vec![Complex64::new(0.0, 0.0); count];
            for (&al, &wt) in pts.iter().zip(wts) {
                let ymax = ylen(tend);
                if ymax < al {
                    continue;
                }
                let terms = (ymax - al).floor() as usize + 1;
                let freq: Vec<f64> = (0..terms).map(|m| (m as f64 + al).ln()).collect();
                let amp: Vec<f64> = (0..terms).map(|m| wt * (m as f64 + al).powf(sigma - 1.0)).collect();
                let mut ch = Chains::new(&freq, &amp, t0, h, 1.0);
                for (p, o) in out.iter_mut().enumerate() {
                    let y = ylen(t0 + p as f64 * h);
                    let n = if y < al { 0 } else { (y - al).floor() as usize + 1 };
                    *o += ch.sum_advance(n);
                }
            }
            out
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); count];
    for c in &chunks {
        for (o, v) in out.iter_mut().zip(c) {
            *o += *v;
        }
    }
    out
}

/// Sharp approximate functional equation at `sigma + i(t0 + p h)`, `p < count`, with
/// main length `(t/2pi)^a`; phases advance by recurrence, so `h log(Y) ` should stay small.
pub fn afe_track(lf: &LFunction, sigma: f64, t0: f64, h: f64, count: usize, a: f64) -> Result<Vec<Complex64>> {
    if t0 < 50.0 || h <= 0.0 || count == 0 {
        return Err(LabError::Domain(format!("track from t = {} with step {} and {} points", t0, h, count)));
    }
    let xlen = |t: f64| (t / (2.0 * PI)).powf(a);
    let tend = t0 + h * count as f64;
    let nmax = xlen(tend).floor() as usize;
    let coeffs = lf.coefficients(nmax);
    let freq: Vec<f64> = (1..=nmax).map(|n| (n as f64).ln()).collect();
    let amp: Vec<f64> = (1..=nmax).map(|n| (n as f64).powf(-sigma)).collect();
    let mut main = Chains::new(&freq, &amp, t0, h, -1.0);
    let reflected = ChiFactor::at(ComplexPoint::new(sigma, t0)).combined(-1.0).norm() > 1e-17;
    let plus = dual_track(&lf.unit, sigma, t0, h, count, a);
    let minus = if reflected { Some(dual_track(&lf.unit_reflected, sigma, t0, h, count, a)) } else { None };
    let mut out = Vec::with_capacity(count);
    for p in 0..count {
        let t = t0 + p as f64 * h;
        let n = (xlen(t).floor() as usize).min(nmax);
        // the chain carries n^{-sigma - it}; coefficients multiply afterwards
        let mut v = Complex64::new(0.0, 0.0);
        for k in 0..n {
            v += Complex64::new(main.re[k], main.im[k]) * coeffs[k + 1];
        }
        main.sum_advance(0);
        let chi = ChiFactor::at(ComplexPoint::new(sigma, t));
        v += chi.combined(1.0) * plus[p];
        if let Some(m) = &minus {
            v += chi.combined(-1.0) * m[p];
        }
        out.push(v);
    }
    Ok(out)
}

/// `int_lo^hi |L(1/2 + it)|^2 dt` with the sharp approximate functional equation
/// (main length `(t/2pi)^a`) and composite GL panels of the given width.
pub fn l_square_integral(lf: &LFunction, lo: f64, hi: f64, a: f64, width: f64) -> Result<(f64, usize)> {
    if !(lo >= 50.0 && hi > lo) {
        return Err(LabError::Domain(format!("window [{}, {}] outside t >= 50", lo, hi)));
    }
    let (amin, _) = lf.unit.hull();
    let omega = (hi / (2.0 * PI * amin)).ln();
    if width * omega > 3.0 * PI {
        return Err(LabError::Quadrature(format!(
            "panel width {} too coarse for frequency {:.2}",
            width, omega
        )));
    }
    let grid = PanelGrid::new(lo, hi, width);
    let mut total = Kahan::new();
    for j in 0..PANEL_ORDER {
        let vals = afe_track(lf, 0.5, grid.offset(j), grid.h, grid.panels, a)?;
        let mut acc = Kahan::new();
        for v in &vals {
            acc.add(v.norm_sqr());
        }
        total.add(grid.weight(j) * acc.value());
    }
    Ok((total.value(), grid.nodes()))
}

pub fn second_moment_l(lf: &LFunction, start: f64, c_nu: f64) -> Result<MomentResult> {
    if start < 1e3 {
        return Err(LabError::Domain(format!("second moment needs T >= 1000, got {}", start)));
    }
    let (value, n) = l_square_integral(lf, start, 2.0 * start, 0.5, PANEL_WIDTH)?;
    let main_term = c_nu * start;
    Ok(MomentResult { start, value, main_term, ratio: value / main_term, quadrature_points: n })
}

/// Relative change of `int |L|^2` over `[lo, lo + len]` when the panel width is halved.
pub fn panel_refinement_check(lf: &LFunction, lo: f64, len: f64) -> Result<f64> {
    let (coarse, _) = l_square_integral(lf, lo, lo + len, 0.5, PANEL_WIDTH)?;
    let (fine, _) = l_square_integral(lf, lo, lo + len, 0.5, PANEL_WIDTH / 2.0)?;
    Ok(((coarse - fine) / fine).abs())
}

// ---------------------------------------------------------------------------
// Fourth moment in the product variable

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvBreakdown {
    pub alpha: f64,
    pub bound: u64,
    pub first_index: u64,
    /// `sum |c_j|^2` accumulated pair by pair.
    pub diagonal: f64,
    /// `2 (sum 1/(m+alpha))^2 - sum 1/(m+alpha)^2`.
    pub diagonal_closed_form: f64,
    pub error_sum: f64,
    pub generic_part: f64,
    pub accidental_part: f64,
    pub pairs: usize,
}

impl MvBreakdown {
    pub fn diagonal_residual(&self) -> f64 {
        (self.diagonal - self.diagonal_closed_form).abs() / self.diagonal_closed_form
    }
}

/// Pairs `first <= m1 <= m2 < bound` with frequencies `log((m1+alpha)(m2+alpha))`;
/// weights `|c_j|^2 = (1 + [m1 < m2])^2 / Q_j` and nearest-neighbour gaps.
pub fn mv_fourth(alpha: f64, bound: u64, first_index: u64) -> Result<MvBreakdown> {
    if bound < first_index + 2 {
        return Err(LabError::Domain(format!("need at least two indices below {}", bound)));
    }
    if alpha <= 0.0 && first_index == 0 {
        return Err(LabError::Domain(format!("shift {} must be positive", alpha)));
    }
    let idx: Vec<u64> = (first_index..bound).collect();
    let mut pairs: Vec<(f64, f64, u32, u32)> = Vec::with_capacity(idx.len() * (idx.len() + 1) / 2);
    for (i, &a) in idx.iter().enumerate() {
        for &b in &idx[i..] {
            let q = (a as f64 + alpha) * (b as f64 + alpha);
            let mult = if a < b { 2.0 } else { 1.0 };
            pairs.push((q.ln(), mult * mult / q, a as u32, b as u32));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = pairs.len();
    let mut diag = Kahan::new();
    let mut generic = Kahan::new();
    let mut accidental = Kahan::new();
    for j in 0..n {
        let (lq, c2, a, b) = pairs[j];
        diag.add(c2);
        let left = if j > 0 { Some((lq - pairs[j - 1].0, j - 1)) } else { None };
        let right = if j + 1 < n { Some((pairs[j + 1].0 - lq, j + 1)) } else { None };
        let (gap, k) = match (left, right) {
            (Some(l), Some(r)) => if r.0 < l.0 { r } else { l },
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!(),
        };
        if !(gap > 1e-13 * lq.abs().max(1.0)) {
            let (_, _, c, d) = pairs[k];
            return Err(LabError::Collision(format!(
                "products ({}, {}) and ({}, {}) coincide at alpha = {}",
                a, b, c, d, alpha
            )));
        }
        let (_, _, c, d) = pairs[k];
        let is_generic = c == a && (d == b + 1 || d + 1 == b);
        if is_generic {
            generic.add(c2 / gap);
        } else {
            accidental.add(c2 / gap);
        }
    }
    let s1 = kahan_sum(idx.iter().map(|&m| 1.0 / (m as f64 + alpha)));
    let s2 = kahan_sum(idx.iter().map(|&m| (m as f64 + alpha).powi(-2)));
    let (g, ac) = (generic.value(), accidental.value());
    Ok(MvBreakdown {
        alpha,
        bound,
        first_index,
        diagonal: diag.value(),
        diagonal_closed_form: 2.0 * s1 * s1 - s2,
        error_sum: g + ac,
        generic_part: g,
        accidental_part: ac,
        pairs: n,
    })
}

/// Per bound: `int MV dnu~ / (M^2 log^2 M)`, shares, and the worst diagonal residual.
pub fn mv_integral_ratio(bounds: &[u64], atoms: &MeasureAtoms, first_index: u64) -> Result<GridScan> {
    require_unit(atoms)?;
    let mut scan = GridScan::new(
        "mv_ratio",
        &["M", "integral", "ratio", "generic_share", "accidental_share", "diagonal_residual"],
    );
    scan.meta.insert("first_index".into(), first_index as f64);
    for &m in bounds {
        let per: Vec<Result<MvBreakdown>> = atoms.points.par_iter().map(|&a| mv_fourth(a, m, first_index)).collect();
        let mut tot = Kahan::new();
        let mut gen = Kahan::new();
        let mut acc = Kahan::new();
        let mut worst = 0.0f64;
        for (r, w) in per.into_iter().zip(&atoms.weights) {
            let r = r?;
            tot.add(w * r.error_sum);
            gen.add(w * r.generic_part);
            acc.add(w * r.accidental_part);
            worst = worst.max(r.diagonal_residual());
        }
        let mf = m as f64;
        let total = tot.value();
        scan.push(vec![
            mf,
            total,
            total / (mf * mf * mf.ln().powi(2)),
            gen.value() / total,
            acc.value() / total,
            worst,
        ]);
    }
    Ok(scan)
}

/// Per-atom `int_lo^hi |sum_{m=first}^{bound-1} (m+alpha)^{-1/2-it}|^4 dt`, averaged.
pub fn fourth_power_integral(atoms: &MeasureAtoms, lo: f64, hi: f64, bound: u64, first_index: u64, width: f64) -> Result<(f64, usize)> {
    require_unit(atoms)?;
    let omega = 2.0 * ((bound as f64) / atoms.hull().0).ln();
    if width * omega > 3.0 * PI {
        return Err(LabError::Quadrature(format!(
            "panel width {} too coarse for frequency {:.2}",
            width, omega
        )));
    }
    let grid = PanelGrid::new(lo, hi, width);
    let per: Vec<f64> = atoms
        .points
        .par_iter()
        .map(|&al| {
            let freq: Vec<f64> = (first_index..bound).map(|m| (m as f64 + al).ln()).collect();
            let amp: Vec<f64> = (first_index..bound).map(|m| (m as f64 + al).powf(-0.5)).collect();
            let mut tot = Kahan::new();
            for j in 0..PANEL_ORDER {
                let mut ch = Chains::new(&freq, &amp, grid.offset(j), grid.h, -1.0);
                let mut acc = 0.0;
                for _ in 0..grid.panels {
                    let v = ch.sum_advance(freq.len()).norm_sqr();
                    acc += v * v;
                }
                tot.add(grid.weight(j) * acc);
            }
            tot.value()
        })
        .collect();
    Ok((kahan_sum(per.iter().zip(&atoms.weights).map(|(v, w)| v * w)), grid.nodes()))
}

/// Per window start T with `M = floor(sqrt(T / 2pi)) + 1`: the double integral over
/// `[T, 2T]`, the main term `T int sum |c_j|^2 dnu~`, and `OD_4 / T`.
pub fn od4_scan(starts: &[f64], atoms: &MeasureAtoms, first_index: u64) -> Result<GridScan> {
    require_unit(atoms)?;
    let mut scan = GridScan::new(
        "od4",
        &["T", "M", "double_integral", "main_term", "od4_over_t", "double_over_t_log2"],
    );
    scan.meta.insert("first_index".into(), first_index as f64);
    for &t in starts {
        if !(300.0..=3.0e4).contains(&t) {
            return Err(LabError::Domain(format!("OD4 window start {} outside [300, 3e4]", t)));
        }
        let bound = afe_length(t) + 1;
        let (double, _) = fourth_power_integral(atoms, t, 2.0 * t, bound, first_index, PANEL_WIDTH)?;
        let diag = kahan_sum(atoms.iter().map(|(a, w)| {
            let s1 = kahan_sum((first_index..bound).map(|m| 1.0 / (m as f64 + a)));
            let s2 = kahan_sum((first_index..bound).map(|m| (m as f64 + a).powi(-2)));
            w * (2.0 * s1 * s1 - s2)
        }));
        let main = t * diag;
        scan.push(vec![t, bound as f64, double, main, (double - main) / t, double / (t * t.ln().powi(2))]);
    }
    Ok(scan)
}

// ---------------------------------------------------------------------------
// Lebesgue average and the Jensen bound

/// `int_delta^{1-delta} |zeta(1/2+it, alpha)|^2 d alpha` against
/// `log(t/2pi) + 2 gamma - 2 log(2 sin(pi delta))`.
pub fn lebesgue_alpha_oracle(t: f64, delta: f64) -> Result<MomentResult> {
    if !(delta > 0.0 && delta < 0.5) || t < 1e3 {
        return Err(LabError::Domain(format!("need 0 < delta < 1/2 and t >= 1000, got {} and {}", delta, t)));
    }
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let s = ComplexPoint::critical(t);
    let f = |a: f64| -> f64 { hurwitz_zeta(s, a).map(|z| z.norm_sqr()).unwrap_or(f64::NAN) };
    let (x, w) = gauss_legendre(16);
    let rule = |a: f64, b: f64| -> f64 {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        r * kahan_sum(x.iter().zip(&w).map(|(xi, wi)| wi * f(c + r * xi)))
    };
    // panels sized to the local phase speed t / alpha, about two cycles each
    let mut cuts = vec![delta];
    let mut a = delta;
    while a < 1.0 - delta {
        let step = (4.0 * PI * a / t).min(0.01);
        a = (a + step).min(1.0 - delta);
        cuts.push(a);
    }
    let pieces: Vec<(f64, usize)> = cuts
        .par_windows(2)
        .map(|c| {
            let (a, b) = (c[0], c[1]);
            let whole = rule(a, b);
            let m = 0.5 * (a + b);
            let split = rule(a, m) + rule(m, b);
            if (whole - split).abs() <= 1e-9 * split.abs().max(1e-3) {
                (split, 48)
            } else {
                adaptive(&rule, a, b, split, 0)
            }
        })
        .collect();
    let value = kahan_sum(pieces.iter().map(|p| p.0));
    let n = pieces.iter().map(|p| p.1).sum();
    if !value.is_finite() {
        return Err(LabError::Quadrature("non-finite Hurwitz value in the average".into()));
    }
    let closed = (t / (2.0 * PI)).ln() + 2.0 * EULER_GAMMA - 2.0 * (2.0 * (PI * delta).sin()).ln();
    Ok(MomentResult { start: t, value, main_term: closed, ratio: value / closed, quadrature_points: n })
}

fn adaptive<F: Fn(f64, f64) -> f64>(rule: &F, a: f64, b: f64, whole: f64, depth: u32) -> (f64, usize) {
    let m = 0.5 * (a + b);
    let (l, r) = (rule(a, m), rule(m, b));
    if depth >= 12 || (l + r - whole).abs() <= 1e-9 * whole.abs().max(1e-3) {
        return (l + r, 32);
    }
    let (x, n1) = adaptive(rule, a, m, l, depth + 1);
    let (y, n2) = adaptive(rule, m, b, r, depth + 1);
    (x + y, n1 + n2 + 32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenCheck {
    pub t: f64,
    pub l_abs: f64,
    /// `8 int |zeta|^2 dnu~ + 8 int |zeta|^2 dnu~'`
    pub bound_square: f64,
    /// `sqrt(bound_square) / |L|`
    pub looseness: f64,
}

pub fn jensen_looseness(lf: &LFunction, t: f64) -> Result<JensenCheck> {
    let s = ComplexPoint::critical(t);
    let l = lf.afe(s, crate::special::AfeOptions::smooth())?;
    let mut rhs = 0.0;
    for atoms in [&lf.unit, &lf.unit_reflected] {
        let per: Vec<Result<f64>> = atoms.points.par_iter().map(|&a| hurwitz_zeta(s, a).map(|z| z.norm_sqr())).collect();
        let mut acc = Kahan::new();
        for (v, w) in per.into_iter().zip(&atoms.weights) {
            acc.add(v? * w);
        }
        rhs += 8.0 * acc.value();
    }
    Ok(JensenCheck { t, l_abs: l.norm(), bound_square: rhs, looseness: rhs.sqrt() / l.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_atoms, nu_hat_empirical, CantorSpec};

    fn unit(level: u32) -> MeasureAtoms {
        build_atoms(&CantorSpec::default().with_level(level), Target::Unit).unwrap()
    }

    #[test]
    fn od_reconstruction_and_range() {
        let a = unit(12);
        let r = od_t(1e4, &a).unwrap();
        assert!(r.reconstruction_residual < 1e-9);
        assert!(r.ratio() <= 0.02, "{}", r.ratio());
        assert!(od_t(50.0, &a).is_err());
    }

    #[test]
    fn od_prime_matches_lag_sums() {
        let spec = CantorSpec::default().with_level(8);
        let nat = build_atoms(&spec, Target::Native).unwrap();
        let t = 900.0;
        let m = identity_length(t);
        let s = ComplexPoint::critical(t);
        for (range, hi) in [(LagRange::Truncated, None), (LagRange::Full, Some(m - 1))] {
            let mut want = Complex64::new(0.0, 0.0);
            for h in 1..=m - 2 {
                let top = hi.unwrap_or(m - 1 - h);
                want += nu_hat_empirical(&nat, h as i64).unwrap() * crate::special::j_sum(h, s, 1, top);
            }
            let got = od_prime(t, &nat, range);
            assert!((got - want).norm() < 1e-10, "{:?} {} {}", range, got, want);
        }
    }

    #[test]
    fn chains_follow_exact_phase() {
        let freq = [0.3, 1.7, 2.9];
        let amp = [1.0, 0.5, 0.25];
        let mut c = Chains::new(&freq, &amp, 1234.5, 0.37, -1.0);
        for p in 0..5000 {
            let t = 1234.5 + 0.37 * p as f64;
            let want: Complex64 = freq.iter().zip(&amp).map(|(f, a)| Complex64::from_polar(*a, -t * f)).sum();
            let got = c.sum_advance(3);
            assert!((got - want).norm() < 1e-10);
        }
    }

    #[test]
    fn l_square_integrand_matches_afe() {
        let lf = LFunction::new(CantorSpec::default().with_level(6)).unwrap();
        // a window of one panel: compare the quadrature sum with direct evaluations
        let (lo, hi) = (1000.0, 1000.5);
        let (val, n) = l_square_integral(&lf, lo, hi, 0.5, 0.5).unwrap();
        assert_eq!(n, 8);
        let (x, w) = gauss_legendre(8);
        let want: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| {
                let t = lo + 0.25 * (xi + 1.0);
                0.25 * wi * lf.afe_sharp(ComplexPoint::critical(t), 0.5).norm_sqr()
            })
            .sum();
        assert!((val - want).abs() < 1e-10 * want, "{} {}", val, want);
    }

    #[test]
    fn coarse_panels_rejected() {
        let lf = LFunction::new(CantorSpec::default().with_level(4)).unwrap();
        assert!(matches!(l_square_integral(&lf, 1e3, 2e3, 0.5, 5.0), Err(LabError::Quadrature(_))));
    }

    #[test]
    fn mv_diagonal_closed_form() {
        for &al in &[1.0 / PI, 2f64.sqrt() - 1.3, 0.5 * (5f64.sqrt() - 1.0)] {
            let r = mv_fourth(al, 50, 0).unwrap();
            assert!(r.diagonal_residual() < 1e-12);
            assert!((r.error_sum - r.generic_part - r.accidental_part).abs() < 1e-9 * r.error_sum);
        }
    }

    #[test]
    fn mv_collision_detected() {
        // (1 + 1/2)^2 = (0 + 1/2)(4 + 1/2)
        let r = mv_fourth(0.5, 12, 0);
        assert!(matches!(r, Err(LabError::Collision(_))), "{:?}", r);
    }

    #[test]
    fn fourth_power_small_window_positive() {
        let a = unit(4);
        let (v, _) = fourth_power_integral(&a, 300.0, 310.0, 8, 0, 0.5).unwrap();
        assert!(v > 0.0);
    }

    #[test]
    fn lebesgue_closed_form_limit() {
        let r = lebesgue_alpha_oracle(1e3, 0.49).unwrap();
        let closed = (1e3 / (2.0 * PI)).ln() + 2.0 * 0.5772156649015329 - 2.0 * (2.0 * (PI * 0.49).sin()).ln();
        assert!((r.main_term - closed).abs() < 1e-12);
        assert!(((2.0 * (PI * 0.5f64).sin()).ln() - 2f64.ln()).abs() < 1e-15);
    }
}
