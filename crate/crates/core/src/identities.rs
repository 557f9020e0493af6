//! Exact algebraic identities between lag sums, Lerch partial sums and the
//! Fourier coefficients of the measure, checked to machine precision.
//!
//! Conventions: `s = 1/2 + it`, `M = floor(sqrt t)`, lag sums
//! `J_h^{[lo,hi]} = sum_{n=lo}^{hi} n^{s-1} (n+h)^{-s}`, and every Fourier
//! coefficient is the empirical transform of the atoms (so the identities are
//! exact for the discrete measure).
//!
//! Swap boundary: writing `n = m - k` and expanding the four products of
//! `sum_{m=k+2}^{M-1} [m^{-s} - (m+1)^{-s}][(m-k)^{s-1} - (m-1-k)^{s-1}]`
//! gives `J_k^{[2,M-1-k]} - J_{k+1}^{[2,M-1-k]} - J_{k+1}^{[1,M-2-k]} + J_{k+2}^{[1,M-2-k]}`.
//! Moving every range onto `[2, M-2-k]` leaves
//! `(M-1-k)^{s-1}[(M-1)^{-s} - M^{-s}] - (k+2)^{-s} + (k+3)^{-s}`.
//!
//! Second tail kernel: `B(K) = int r^{K+1} / (1-r)` and `B_2(K) = int r^{K+1} / (1-r)^2`
//! with `r = e^{i theta}`. Then `B_2(K+1) - B_2(K) = -B(K)` and `B(K+1) - B(K) = -nu^(K+1)`,
//! so the second difference of `B - B_2` is `-nu^(K+2)`: the sign is negative.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure::{nu_hat_empirical, MeasureAtoms, Target};
use crate::moments::{od_prime, LagRange};
use crate::numeric::{line_fit, GridScan, Kahan, KahanC};
use crate::special::{harmonic, identity_length, j_sum, partial_sums, ComplexPoint, PartialSumKind, PartialSumSpec};

/// Sign of `nu^(K+2)` in the second-difference identity, fixed by [`bridge_sign_scan`].
pub const BRIDGE_SIGN: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub params: BTreeMap<String, f64>,
}

impl IdentityReport {
    pub fn new(name: &str, lhs: Complex64, rhs: Complex64, tolerance: f64, params: &[(&str, f64)]) -> Self {
        Self::with_residual(name, lhs, rhs, (lhs - rhs).norm(), tolerance, params)
    }

    pub fn with_residual(
        name: &str,
        lhs: Complex64,
        rhs: Complex64,
        residual: f64,
        tolerance: f64,
        params: &[(&str, f64)],
    ) -> Self {
        IdentityReport {
            name: name.to_string(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual <= tolerance,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

fn require_native(atoms: &MeasureAtoms) -> Result<()> {
    if atoms.target != Target::Native {
        return Err(LabError::Domain("expected atoms on the circle".into()));
    }
    Ok(())
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `Q(theta) = conj P(theta)` on the critical line.
pub fn check_conjugacy(theta: f64, t: f64) -> IdentityReport {
    let m = identity_length(t);
    let s = ComplexPoint::critical(t);
    let p = partial_sums(theta, s, PartialSumSpec::lerch(m), PartialSumKind::P);
    let q = partial_sums(theta, s, PartialSumSpec::lerch(m), PartialSumKind::Q);
    IdentityReport::new("conjugacy", q, p.conj(), 1e-15, &[("theta", theta), ("t", t), ("M", m as f64)])
}

/// `sum_{m <= n < M} n^{s-1} m^{-s} e^{i(m-n) theta}` as a plain double sum.
pub fn tri_direct(theta: f64, t: f64) -> Complex64 {
    let m = identity_length(t);
    let s = ComplexPoint::critical(t).s();
    let mut acc = KahanC::new();
    for n in 1..m {
        let nf = n as f64;
        for k in 1..=n {
            let kf = k as f64;
            acc.add(((s - 1.0) * nf.ln() - s * kf.ln() + Complex64::new(0.0, (kf - nf) * theta)).exp());
        }
    }
    acc.value()
}

pub fn check_tri(theta: f64, t: f64) -> IdentityReport {
    let m = identity_length(t);
    let s = ComplexPoint::critical(t);
    let lhs = tri_direct(theta, t);
    let mut rhs = KahanC::new();
    rhs.add(Complex64::new(harmonic(m), 0.0));
    for l in 1..m.saturating_sub(1) {
        let j = j_sum(l, s, 1, m - 1 - l);
        rhs.add(j.conj() * Complex64::from_polar(1.0, -(l as f64) * theta));
    }
    IdentityReport::new("triangular", lhs, rhs.value(), 1e-12, &[("theta", theta), ("t", t), ("M", m as f64)])
}

/// Empirical transforms `nu^(0..=n)` of the atoms.
fn transforms(atoms: &MeasureAtoms, n: usize) -> Result<Vec<Complex64>> {
    (0..=n as i64).map(|k| nu_hat_empirical(atoms, k)).collect()
}

/// `sum_{h=1}^{M-2} nu^(h) J_h^{[1, M-1-h]}` from lag sums.
pub fn od_prime_from_lags(t: f64, atoms: &MeasureAtoms) -> Result<Complex64> {
    require_native(atoms)?;
    let m = identity_length(t);
    if m < 3 {
        return Ok(c0());
    }
    let s = ComplexPoint::critical(t);
    let nu = transforms(atoms, m as usize)?;
    let terms: Vec<Complex64> = (1..=m - 2).into_par_iter().map(|h| nu[h as usize] * j_sum(h, s, 1, m - 1 - h)).collect();
    let mut acc = KahanC::new();
    for v in terms {
        acc.add(v);
    }
    Ok(acc.value())
}

/// Averages of `|P|^2` and of the triangular sum over the atoms, each in O(M) per atom.
fn p_and_tri_averages(t: f64, atoms: &MeasureAtoms) -> (f64, Complex64) {
    let m = identity_length(t);
    let s = ComplexPoint::critical(t).s();
    let per: Vec<(f64, Complex64)> = atoms
        .points
        .par_iter()
        .map(|&th| {
            let mut p = KahanC::new();
            let mut q = KahanC::new();
            let mut tri = KahanC::new();
            for n in 1..m {
                let nf = n as f64;
                let pn = ((s - 1.0) * nf.ln() - Complex64::new(0.0, nf * th)).exp();
                let qn = (-s * nf.ln() + Complex64::new(0.0, nf * th)).exp();
                p.add(pn);
                q.add(qn);
                tri.add(pn * q.value());
            }
            (p.value().norm_sqr(), tri.value())
        })
        .collect();
    let mut pa = Kahan::new();
    let mut ta = KahanC::new();
    for ((v, tr), w) in per.iter().zip(&atoms.weights) {
        pa.add(v * w);
        ta.add(*tr * *w);
    }
    (pa.value(), ta.value())
}

/// Both averaged identities and their difference; returns the report and `OD'`.
pub fn check_h_cancellation(t: f64, atoms: &MeasureAtoms) -> Result<(IdentityReport, Complex64)> {
    if t < 10.0 {
        return Err(LabError::Domain(format!("need t >= 10, got {}", t)));
    }
    let od = od_prime_from_lags(t, atoms)?;
    let m = identity_length(t);
    let h = harmonic(m);
    let (p2, tri) = p_and_tri_averages(t, atoms);
    let r_square = (p2 - h - 2.0 * od.re).abs();
    let r_tri = (tri - h - od.conj()).norm();
    let diff = Complex64::new(p2, 0.0) - tri;
    let r_diff = (diff - od).norm();
    let residual = r_square.max(r_tri).max(r_diff);
    let rep = IdentityReport::with_residual(
        "h_cancellation",
        diff,
        od,
        residual,
        1e-8,
        &[
            ("t", t),
            ("M", m as f64),
            ("harmonic", h),
            ("square_residual", r_square),
            ("tri_residual", r_tri),
            ("difference_residual", r_diff),
        ],
    );
    Ok((rep, od))
}

/// Per t: `int |P|^2`, its quotient by `H_{M-1}`, `2 Re OD'` and the margin
/// `Re OD' + H/2`; metadata carries the regression of `2 Re OD'` on `log t`.
pub fn restriction_scan(t_grid: &[f64], atoms: &MeasureAtoms) -> Result<GridScan> {
    require_native(atoms)?;
    let mut scan = GridScan::new(
        "restriction",
        &["t", "M", "harmonic", "square_average", "quotient", "two_re_od_prime", "lower_margin"],
    );
    for &t in t_grid {
        if !(1e2..=1e6).contains(&t) {
            return Err(LabError::Domain(format!("t = {} outside [1e2, 1e6]", t)));
        }
        let m = identity_length(t);
        let h = harmonic(m);
        let (p2, _) = p_and_tri_averages(t, atoms);
        let od = od_prime_from_lags(t, atoms)?;
        scan.push(vec![t, m as f64, h, p2, p2 / h, 2.0 * od.re, od.re + 0.5 * h]);
    }
    let x: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    let y = scan.column("two_re_od_prime").unwrap_or_default();
    if let Some(f) = line_fit(&x, &y) {
        scan.meta.insert("slope".into(), f.slope);
        scan.meta.insert("slope_stderr".into(), f.slope_stderr);
        scan.meta.insert("intercept".into(), f.intercept);
    }
    Ok(scan)
}

/// The swap identity at `(k, M)` with the boundary terms from the module docs.
pub fn check_swap(k: u64, t: f64, m: u64) -> Result<IdentityReport> {
    if k < 1 || k + 4 > m {
        return Err(LabError::Domain(format!("need 1 <= k <= M-4, got k = {}, M = {}", k, m)));
    }
    let sp = ComplexPoint::critical(t);
    let s = sp.s();
    let pw = |x: f64, e: Complex64| (e * x.ln()).exp();
    let mut lhs = KahanC::new();
    for mm in k + 2..m {
        let x = mm as f64;
        let kf = k as f64;
        lhs.add((pw(x, -s) - pw(x + 1.0, -s)) * (pw(x - kf, s - 1.0) - pw(x - 1.0 - kf, s - 1.0)));
    }
    let (lo, hi) = (2, m - 2 - k);
    let mut rhs = KahanC::new();
    rhs.add(j_sum(k, sp, lo, hi));
    rhs.add(-2.0 * j_sum(k + 1, sp, lo, hi));
    rhs.add(j_sum(k + 2, sp, lo, hi));
    let (mf, kf) = (m as f64, k as f64);
    rhs.add(pw(mf - 1.0 - kf, s - 1.0) * (pw(mf - 1.0, -s) - pw(mf, -s)));
    rhs.add(-pw(kf + 2.0, -s));
    rhs.add(pw(kf + 3.0, -s));
    Ok(IdentityReport::new(
        "swap",
        lhs.value(),
        rhs.value(),
        1e-12,
        &[("k", kf), ("t", t), ("M", mf)],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbelPieces {
    /// `A(inf) J_1`
    pub piece_i: Complex64,
    /// `-B(H) J_H`
    pub piece_ii: Complex64,
    /// `sum_{h<H} B(h) (J_{h+1} - J_h)`
    pub piece_iii: Complex64,
    /// `int r / (1 - r)`
    pub a_infinity: Complex64,
    /// `A(inf) - int r / (1-r)^2 = -int r^2 / (1-r)^2`
    pub beta: Complex64,
    /// `Re[(I) + (II) + (III)]`
    pub reconstruction: f64,
    /// `Re OD'` from the per-atom regrouping.
    pub target: f64,
    pub residual: f64,
    /// `max_K |sum_{k<=K} B(k) - (B(K) - B_2(K) - beta)|`
    pub peel_residual: f64,
}

/// Per-atom `r / (1-r)`, `r / (1-r)^2`, `r^2 / (1-r)^2` averaged; pole error near `theta = 0`.
fn kernel_averages(atoms: &MeasureAtoms) -> Result<(Complex64, Complex64, Complex64)> {
    let mut a = KahanC::new();
    let mut b = KahanC::new();
    let mut c = KahanC::new();
    for (th, w) in atoms.iter() {
        let r = Complex64::from_polar(1.0, th);
        let d = Complex64::new(1.0, 0.0) - r;
        if d.norm() < 1e-12 {
            return Err(LabError::Pole(format!("atom at theta = {} sits on 2 pi Z", th)));
        }
        a.add(r / d * w);
        b.add(r / (d * d) * w);
        c.add(r * r / (d * d) * w);
    }
    Ok((a.value(), b.value(), c.value()))
}

/// `B_2(K) = int r^{K+1} / (1-r)^2`.
fn second_tail(atoms: &MeasureAtoms, k: u64) -> Complex64 {
    let mut acc = KahanC::new();
    for (th, w) in atoms.iter() {
        let r = Complex64::from_polar(1.0, th);
        let d = Complex64::new(1.0, 0.0) - r;
        acc.add(Complex64::from_polar(w, (k + 1) as f64 * th) / (d * d));
    }
    acc.value()
}

pub fn abel_decomposition(t: f64, atoms: &MeasureAtoms) -> Result<AbelPieces> {
    require_native(atoms)?;
    if t < 100.0 {
        return Err(LabError::Domain(format!("need t >= 100, got {}", t)));
    }
    let m = identity_length(t);
    let hmax = m - 2;
    let s = ComplexPoint::critical(t);
    let nu = transforms(atoms, m as usize)?;
    let (a_inf, kern2, sq) = kernel_averages(atoms)?;
    let beta = a_inf - kern2;
    // A(K) and B(K) = A(inf) - A(K)
    let mut a = vec![c0(); hmax as usize + 1];
    let mut run = KahanC::new();
    for k in 1..=hmax as usize {
        run.add(nu[k]);
        a[k] = run.value();
    }
    let b: Vec<Complex64> = a.iter().map(|v| a_inf - v).collect();
    let j: Vec<Complex64> = (0..=hmax).into_par_iter().map(|h| if h == 0 { c0() } else { j_sum(h, s, 1, m - 1 - h) }).collect();
    let h = hmax as usize;
    let piece_i = a_inf * j[1];
    let piece_ii = -b[h] * j[h];
    let mut iii = KahanC::new();
    for k in 1..h {
        iii.add(b[k] * (j[k + 1] - j[k]));
    }
    let piece_iii = iii.value();
    let reconstruction = (piece_i + piece_ii + piece_iii).re;
    let target = od_prime(t, atoms, LagRange::Truncated).re;
    let mut sb = KahanC::new();
    let mut peel = 0.0f64;
    for k in 1..=h {
        sb.add(b[k]);
        let closed = b[k] - second_tail(atoms, k as u64) - beta;
        peel = peel.max((sb.value() - closed).norm());
    }
    debug_assert!((beta + sq).norm() < 1e-9);
    Ok(AbelPieces {
        piece_i,
        piece_ii,
        piece_iii,
        a_infinity: a_inf,
        beta,
        reconstruction,
        target,
        residual: (reconstruction - target).abs(),
        peel_residual: peel,
    })
}

/// Per t: `dOD_2 = sum_{h=3}^{M} nu^(h) [J_h^{[1,M-1-h]} - J_{h-2}^{[1,M+1-h]}]`,
/// its modulus, the absolute-value sum and their quotient.
pub fn dod2_scan(t_grid: &[f64], atoms: &MeasureAtoms) -> Result<GridScan> {
    require_native(atoms)?;
    let mut scan = GridScan::new("dod2", &["t", "M", "abs_dod2", "re", "im", "abs_sum", "cancellation"]);
    for &t in t_grid {
        if !(300.0..=1e5).contains(&t) {
            return Err(LabError::Domain(format!("t = {} outside [300, 1e5]", t)));
        }
        let m = identity_length(t);
        let s = ComplexPoint::critical(t);
        let nu = transforms(atoms, m as usize)?;
        let lag = |h: u64, hi: i64| if hi < 1 { c0() } else { j_sum(h, s, 1, hi as u64) };
        let terms: Vec<(Complex64, f64)> = (3..=m)
            .into_par_iter()
            .map(|h| {
                let d = lag(h, m as i64 - 1 - h as i64) - lag(h - 2, m as i64 + 1 - h as i64);
                (nu[h as usize] * d, nu[h as usize].norm() * d.norm())
            })
            .collect();
        let mut tot = KahanC::new();
        let mut abs = Kahan::new();
        for (v, a) in terms {
            tot.add(v);
            abs.add(a);
        }
        let v = tot.value();
        scan.push(vec![t, m as f64, v.norm(), v.re, v.im, abs.value(), abs.value() / v.norm()]);
    }
    Ok(scan)
}

/// Finite differences of the two tails at `K`, with `B` built as `A(inf) - A(K)`.
struct TailDifferences {
    first: f64,
    second: f64,
    bridge_lhs: Complex64,
    next: Complex64,
}

fn tail_differences(k: u64, atoms: &MeasureAtoms) -> Result<TailDifferences> {
    require_native(atoms)?;
    let (a_inf, _, _) = kernel_averages(atoms)?;
    let nu = transforms(atoms, k as usize + 3)?;
    let mut a = KahanC::new();
    for v in &nu[1..=k as usize] {
        a.add(*v);
    }
    let mut b = Vec::with_capacity(3);
    for j in 0..3 {
        b.push(a_inf - a.value());
        a.add(nu[k as usize + 1 + j]);
    }
    let b2: Vec<Complex64> = (0..3).map(|j| second_tail(atoms, k + j)).collect();
    let g: Vec<Complex64> = (0..3).map(|j| b[j] - b2[j]).collect();
    Ok(TailDifferences {
        first: (b[1] - b[0] + nu[k as usize + 1]).norm(),
        second: (b2[1] - b2[0] + b[0]).norm(),
        bridge_lhs: g[2] - 2.0 * g[1] + g[0],
        next: nu[k as usize + 2],
    })
}

pub fn check_bridge(k: u64, atoms: &MeasureAtoms) -> Result<IdentityReport> {
    let d = tail_differences(k, atoms)?;
    let rhs = d.next * BRIDGE_SIGN;
    let r = (d.bridge_lhs - rhs).norm();
    Ok(IdentityReport::with_residual(
        "bridge",
        d.bridge_lhs,
        rhs,
        r.max(d.first).max(d.second),
        1e-10,
        &[("K", k as f64), ("first_difference", d.first), ("second_difference", d.second), ("sign", BRIDGE_SIGN)],
    ))
}

/// The sign `+1` or `-1` that fits `Delta^2[B - B_2](K) = sign nu^(K+2)` best over `K <= k_max`.
pub fn bridge_sign_scan(k_max: u64, atoms: &MeasureAtoms) -> Result<f64> {
    let mut plus = 0.0f64;
    let mut minus = 0.0f64;
    for k in 0..=k_max {
        let d = tail_differences(k, atoms)?;
        plus = plus.max((d.bridge_lhs - d.next).norm());
        minus = minus.max((d.bridge_lhs + d.next).norm());
    }
    Ok(if plus < minus { 1.0 } else { -1.0 })
}

/// Fixed, well-spread angles in (0.5, 2.0).
pub fn sample_angles(n: usize) -> Vec<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    (1..=n).map(|i| 0.5 + 1.5 * ((i as f64 * g) % 1.0)).collect()
}

/// The default suite on the native atoms; all reports should pass.
pub fn default_suite(atoms: &MeasureAtoms) -> Result<Vec<IdentityReport>> {
    require_native(atoms)?;
    let mut out = Vec::new();
    for th in [1.25].into_iter().chain(sample_angles(4)) {
        out.push(check_conjugacy(th, 1e4));
    }
    out.push(check_tri(1.25, 1e4));
    for th in sample_angles(10) {
        out.push(check_tri(th, 1e3));
    }
    out.push(check_h_cancellation(1e4, atoms)?.0);
    out.push(check_swap(1, 0.0, 6)?);
    for &t in &[1e3, 1e4] {
        for &m in &[20, 100, 316] {
            for &k in &[1, 3, 7] {
                out.push(check_swap(k, t, m)?);
            }
        }
    }
    let m3 = identity_length(1e3);
    out.push(check_swap(3, 1e3, m3)?);
    out.push(check_swap(m3 - 4, 1e3, m3)?);
    for k in 0..=50 {
        out.push(check_bridge(k, atoms)?);
    }
    let abel = abel_decomposition(1e3, atoms)?;
    out.push(IdentityReport::new(
        "a_infinity_real_part",
        Complex64::new(abel.a_infinity.re, 0.0),
        Complex64::new(-0.5, 0.0),
        1e-10,
        &[],
    ));
    out.push(IdentityReport::with_residual(
        "abel_reconstruction",
        Complex64::new(abel.reconstruction, 0.0),
        Complex64::new(abel.target, 0.0),
        abel.residual,
        1e-8,
        &[("t", 1e3)],
    ));
    out.push(IdentityReport::with_residual(
        "beta_peel",
        abel.beta,
        abel.beta,
        abel.peel_residual,
        1e-10,
        &[("t", 1e3)],
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_atoms, CantorSpec};

    fn native(level: u32) -> MeasureAtoms {
        build_atoms(&CantorSpec::default().with_level(level), Target::Native).unwrap()
    }

    #[test]
    fn tri_tiny_case() {
        let r = check_tri(0.7, 4.0);
        assert_eq!(r.params["M"], 2.0);
        assert!((r.lhs - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(r.pass);
    }

    #[test]
    fn swap_brute_small() {
        // brute expansion of the left side at M = 6, k = 1 and s = 1/2
        let s = Complex64::new(0.5, 0.0);
        let pw = |x: f64, e: Complex64| (e * x.ln()).exp();
        let mut brute = c0();
        for m in 3..6 {
            let x = m as f64;
            brute += pw(x, -s) * pw(x - 1.0, s - 1.0) - pw(x, -s) * pw(x - 2.0, s - 1.0)
                - pw(x + 1.0, -s) * pw(x - 1.0, s - 1.0)
                + pw(x + 1.0, -s) * pw(x - 2.0, s - 1.0);
        }
        let r = check_swap(1, 0.0, 6).unwrap();
        assert!((r.lhs - brute).norm() < 1e-15);
        assert!(r.residual < 1e-15, "{}", r.residual);
        for m in 5..=8 {
            for k in 1..=m - 4 {
                assert!(check_swap(k, 37.0, m).unwrap().pass);
            }
        }
        assert!(check_swap(0, 1e3, 31).is_err());
        assert!(check_swap(28, 1e3, 31).is_err());
    }

    #[test]
    fn bridge_sign_is_frozen() {
        let a = native(8);
        assert_eq!(bridge_sign_scan(50, &a).unwrap(), BRIDGE_SIGN);
        for k in [0, 7, 50] {
            let r = check_bridge(k, &a).unwrap();
            assert!(r.pass, "{:?}", r);
            assert!(r.params["first_difference"] < 1e-12);
        }
    }

    #[test]
    fn od_prime_regroupings_agree() {
        let a = native(10);
        for t in [300.0, 2500.0] {
            let lags = od_prime_from_lags(t, &a).unwrap();
            let per_atom = od_prime(t, &a, LagRange::Truncated);
            assert!((lags - per_atom).norm() < 1e-10);
        }
    }

    #[test]
    fn abel_pieces() {
        let a = native(10);
        let p = abel_decomposition(1e3, &a).unwrap();
        assert!((p.a_infinity.re + 0.5).abs() < 1e-10);
        assert!(p.residual < 1e-8, "{:?}", p);
        assert!(p.peel_residual < 1e-10);
        assert!(p.piece_i.norm() < 10.0 && p.piece_ii.norm() < 10.0);
    }

    #[test]
    fn h_cancellation_small() {
        let a = native(9);
        let (r, od) = check_h_cancellation(2000.0, &a).unwrap();
        assert!(r.pass, "{:?}", r);
        assert!(od.re >= -0.5 * r.params["harmonic"]);
    }

    #[test]
    fn dod2_tail_vanishes() {
        // beyond h = M both lag ranges are empty
        let t = 400.0;
        let m = identity_length(t);
        let s = ComplexPoint::critical(t);
        for h in m + 1..m + 4 {
            let hi_a = m as i64 - 1 - h as i64;
            let hi_b = m as i64 + 1 - h as i64;
            assert!(hi_a < 1 && hi_b < 1);
            assert_eq!(j_sum(h, s, 1, 0), c0());
        }
    }
}
