//! Integer combinatorics of sums and products: multiset collisions, the product-
//! grouped coefficient sums D_2k, their split by additive defect, the collision
//! sum VO_2k, and the atlas of 4-tuple collision shifts.
//!
//! Collision arithmetic is exact (integers and reduced rationals); only the
//! coefficient-weighted sums use floating point.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure::CantorSpec;
use crate::numeric::{Kahan, KahanC};

const ENUMERATION_BUDGET: u128 = 600_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultisetCollision {
    pub sum: u64,
    pub product: u128,
    /// Nondecreasing multisets sharing the sum and the product, in lexicographic order.
    pub multisets: Vec<Vec<u64>>,
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Nondecreasing `k`-tuples in `[lo, max]` with sum `s`, written into `out`.
fn for_each_with_sum(k: usize, lo: u64, max: u64, s: u64, cur: &mut Vec<u64>, out: &mut Vec<(u128, Vec<u64>)>) {
    if k == 0 {
        if s == 0 {
            let p = cur.iter().map(|&v| v as u128).product();
            out.push((p, cur.clone()));
        }
        return;
    }
    if k == 1 {
        if s >= lo && s <= max {
            cur.push(s);
            for_each_with_sum(0, s, max, 0, cur, out);
            cur.pop();
        }
        return;
    }
    let mut v = lo;
    // v is the smallest remaining element, so k v <= s
    while v <= max && v * k as u64 <= s {
        if s - v <= (k as u64 - 1) * max {
            cur.push(v);
            for_each_with_sum(k - 1, v, max, s - v, cur, out);
            cur.pop();
        }
        v += 1;
    }
}

/// Groups of at least two `k`-multisets of `{1..max_element}` with equal sum and
/// equal product, ordered by sum and then product.
pub fn multiset_collisions(k: usize, max_element: u64) -> Result<Vec<MultisetCollision>> {
    if k < 2 {
        return Err(LabError::Domain(format!("need k >= 2, got {}", k)));
    }
    let count = binomial_u128(max_element as u128 + k as u128 - 1, k as u128);
    if count > ENUMERATION_BUDGET {
        return Err(LabError::Budget(format!("{} multisets exceed the enumeration budget", count)));
    }
    let sums: Vec<u64> = (k as u64..=k as u64 * max_element).collect();
    let groups: Vec<Vec<MultisetCollision>> = sums
        .par_iter()
        .map(|&s| {
            let mut all = Vec::new();
            for_each_with_sum(k, 1, max_element, s, &mut Vec::with_capacity(k), &mut all);
            all.sort();
            let mut out = Vec::new();
            let mut i = 0;
            while i < all.len() {
                let mut j = i + 1;
                while j < all.len() && all[j].0 == all[i].0 {
                    j += 1;
                }
                if j - i >= 2 {
                    out.push(MultisetCollision {
                        sum: s,
                        product: all[i].0,
                        multisets: all[i..j].iter().map(|x| x.1.clone()).collect(),
                    });
                }
                i = j;
            }
            out
        })
        .collect();
    Ok(groups.concat())
}

/// How the index range of the D_2k sum is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    /// `n_1 ... n_k <= N^k`
    Product,
    /// every `n_i <= N`
    PerIndex,
}

/// `sum_P |b(P)|^2 / P`, with `b(P)` the sum of `prod nu^(n_i)` over ordered
/// k-tuples of product `P`.
pub fn d2k(spec: &CantorSpec, k: u32, n: u64) -> Result<f64> {
    d2k_with(spec, k, n, Truncation::Product)
}

pub fn d2k_with(spec: &CantorSpec, k: u32, n: u64, trunc: Truncation) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(LabError::Domain(format!("k = {} not in 1..=3", k)));
    }
    let limit = match k {
        1 => 10_000_000,
        2 => 4000,
        _ => 320,
    };
    if n > limit {
        return Err(LabError::Budget(format!("N = {} beyond the budget {} for k = {}", n, limit, k)));
    }
    let top = match trunc {
        Truncation::Product => n.pow(k) as usize,
        Truncation::PerIndex => n as usize,
    };
    let nu = spec.coefficient_table(top, None);
    let weighted = |v: &[Complex64]| -> f64 {
        let mut acc = Kahan::new();
        for (p, b) in v.iter().enumerate().skip(1) {
            acc.add(b.norm_sqr() / p as f64);
        }
        acc.value()
    };
    match (k, trunc) {
        (1, _) => Ok(weighted(&nu[..=n as usize])),
        (_, Truncation::PerIndex) => {
            let x = n.pow(k) as usize;
            let mut b = vec![Complex64::new(0.0, 0.0); x + 1];
            let nn = n as usize;
            if k == 2 {
                for a in 1..=nn {
                    for c in 1..=nn {
                        b[a * c] += nu[a] * nu[c];
                    }
                }
            } else {
                for a in 1..=nn {
                    for c in 1..=nn {
                        let ac = nu[a] * nu[c];
                        for d in 1..=nn {
                            b[a * c * d] += ac * nu[d];
                        }
                    }
                }
            }
            Ok(weighted(&b))
        }
        (2, Truncation::Product) => Ok(weighted(&dirichlet_square(&nu, top))),
        (_, Truncation::Product) => {
            let b2 = dirichlet_square(&nu, top);
            // b3(P) = sum_{d | P} nu(d) b2(P / d), built in segments of P
            const SEG: usize = 1 << 20;
            let starts: Vec<usize> = (1..=top).step_by(SEG).collect();
            let parts: Vec<f64> = starts
                .par_iter()
                .map(|&lo| {
                    let hi = (lo + SEG - 1).min(top);
                    let mut seg = vec![Complex64::new(0.0, 0.0); hi - lo + 1];
                    for d in 1..=hi {
                        let first = lo.div_ceil(d).max(1);
                        let last = hi / d;
                        if first > last {
                            continue;
                        }
                        let nd = nu[d];
                        for q in first..=last {
                            seg[d * q - lo] += nd * b2[q];
                        }
                    }
                    let mut acc = Kahan::new();
                    for (i, v) in seg.iter().enumerate() {
                        acc.add(v.norm_sqr() / (lo + i) as f64);
                    }
                    acc.value()
                })
                .collect();
            let mut acc = Kahan::new();
            for p in parts {
                acc.add(p);
            }
            Ok(acc.value())
        }
    }
}

/// `b(P) = sum_{d e = P} nu(d) nu(e)` for `P <= x`.
fn dirichlet_square(nu: &[Complex64], x: usize) -> Vec<Complex64> {
    let mut b = vec![Complex64::new(0.0, 0.0); x + 1];
    for d in 1..=x {
        let nd = nu[d];
        for e in 1..=x / d {
            b[d * e] += nd * nu[e];
        }
    }
    b
}

/// Split of the per-index `D_4` by additive defect `delta = (n_1 + n_2) - (m_1 + m_2)`:
/// `W_delta` for `0 <= delta <= delta_max`, with `D_4 = W_0 + 2 sum_{delta>0} W_delta cos(delta phi)`.
/// The split is exact once `delta_max >= 2N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigDecomposition {
    pub n: u64,
    pub weights: Vec<f64>,
    /// Largest imaginary part seen in any `W_delta` (zero by symmetry).
    pub max_imaginary: f64,
}

impl TrigDecomposition {
    /// `D_4` at centre `phi`.
    pub fn evaluate(&self, phi: f64) -> f64 {
        let mut acc = Kahan::new();
        acc.add(self.weights[0]);
        for (d, w) in self.weights.iter().enumerate().skip(1) {
            acc.add(2.0 * w * (d as f64 * phi).cos());
        }
        acc.value()
    }
}

pub fn trig_decomposition(spec: &CantorSpec, k: u32, n: u64, delta_max: u64) -> Result<TrigDecomposition> {
    if k != 2 {
        return Err(LabError::Domain("the defect split is implemented for k = 2".into()));
    }
    if n > 1000 {
        return Err(LabError::Budget(format!("N = {} beyond 1000", n)));
    }
    let nn = n as usize;
    // r_n: the coefficient with the centre phase removed
    let r: Vec<Complex64> = (0..=nn)
        .map(|i| if i == 0 { Complex64::new(1.0, 0.0) } else { spec.digit_product(i as f64, None) })
        .collect();
    // ordered pairs bucketed by product
    let x = nn * nn;
    let mut count = vec![0u32; x + 2];
    for a in 1..=nn {
        for b in 1..=nn {
            count[a * b + 1] += 1;
        }
    }
    for p in 1..count.len() {
        count[p] += count[p - 1];
    }
    let mut fill = count.clone();
    let mut pairs = vec![(0u32, 0u32); nn * nn];
    for a in 1..=nn {
        for b in 1..=nn {
            let slot = &mut fill[a * b];
            pairs[*slot as usize] = (a as u32, b as u32);
            *slot += 1;
        }
    }
    let full = 2 * nn;
    let products: Vec<usize> = (1..=x).filter(|&p| count[p + 1] - count[p] > 0).collect();
    let parts: Vec<Vec<Complex64>> = products
        .par_chunks(4096)
        .map(|ps| {
            let mut w = vec![Complex64::new(0.0, 0.0); full + 1];
            for &p in ps {
                let bucket = &pairs[count[p] as usize..count[p + 1] as usize];
                for &(a, b) in bucket {
                    let lhs = r[a as usize] * r[b as usize] / p as f64;
                    for &(c, d) in bucket {
                        let delta = (a + b) as i64 - (c + d) as i64;
                        if delta >= 0 {
                            w[delta as usize] += lhs * (r[c as usize] * r[d as usize]).conj();
                        }
                    }
                }
            }
            w
        })
        .collect();
    let mut weights = vec![KahanC::new(); full + 1];
    for part in &parts {
        for (acc, v) in weights.iter_mut().zip(part) {
            acc.add(*v);
        }
    }
    let vals: Vec<Complex64> = weights.iter().map(|k| k.value()).collect();
    let max_imaginary = vals.iter().fold(0.0f64, |a, v| a.max(v.im.abs()));
    let keep = (delta_max as usize).min(full);
    let weights: Vec<f64> = vals[..=keep].iter().map(|v| v.re).collect();
    Ok(TrigDecomposition { n, weights, max_imaginary })
}

/// Number of orderings of a multiset: `k! / prod m_v!`.
pub fn multiset_multiplicity(m: &[u64]) -> u64 {
    let k = m.len() as u64;
    let mut num: u64 = (1..=k).product();
    let mut i = 0;
    while i < m.len() {
        let mut j = i;
        while j < m.len() && m[j] == m[i] {
            j += 1;
        }
        num /= (1..=(j - i) as u64).product::<u64>();
        i = j;
    }
    num
}

/// `sum over collision groups of (2 / P) sum_{unordered M != M'} mult(M) mult(M') R(M) R(M')`.
pub fn vo_2k(spec: &CantorSpec, k: usize, n: u64) -> Result<f64> {
    if !(2..=3).contains(&k) {
        return Err(LabError::Domain(format!("k = {} not in 2..=3", k)));
    }
    if k == 3 && n > 400 {
        return Err(LabError::Budget(format!("N = {} beyond 400", n)));
    }
    let groups = multiset_collisions(k, n)?;
    let r: Vec<f64> = (0..=n).map(|i| if i == 0 { 1.0 } else { spec.digit_product(i as f64, None).re }).collect();
    Ok(vo_from_groups(&groups, &r))
}

pub fn vo_group_term(g: &MultisetCollision, r: &[f64]) -> f64 {
    let rr = |m: &Vec<u64>| m.iter().map(|&v| r[v as usize]).product::<f64>();
    let mut acc = Kahan::new();
    for i in 0..g.multisets.len() {
        for j in i + 1..g.multisets.len() {
            let (a, b) = (&g.multisets[i], &g.multisets[j]);
            acc.add((multiset_multiplicity(a) * multiset_multiplicity(b)) as f64 * rr(a) * rr(b));
        }
    }
    2.0 / g.product as f64 * acc.value()
}

fn vo_from_groups(groups: &[MultisetCollision], r: &[f64]) -> f64 {
    let mut acc = Kahan::new();
    for g in groups {
        acc.add(vo_group_term(g, r));
    }
    acc.value()
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Two index pairs whose shifted products coincide at a rational shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub tuple: [u64; 4],
    /// `(m3 + m4) - (m1 + m2)`
    pub h: i64,
    /// `m1 m2 - m3 m4`
    pub p: i64,
    /// `p / h` in lowest terms with positive denominator.
    pub alpha_num: i64,
    pub alpha_den: i64,
}

impl CollisionRecord {
    pub fn new(tuple: [u64; 4]) -> Result<Self> {
        let [a, b, c, d] = tuple.map(|v| v as i64);
        let (lo1, hi1) = (a.min(b), a.max(b));
        let (lo2, hi2) = (c.min(d), c.max(d));
        if (lo1, hi1) == (lo2, hi2) {
            return Err(LabError::Domain("the two pairs coincide".into()));
        }
        let h = (c + d) - (a + b);
        if h == 0 {
            return Err(LabError::Domain("equal sums give no finite collision shift".into()));
        }
        let p = a * b - c * d;
        let g = gcd(p, h).max(1);
        let (mut num, mut den) = (p / g, h / g);
        if den < 0 {
            num = -num;
            den = -den;
        }
        let rec = CollisionRecord { tuple, h, p, alpha_num: num, alpha_den: den };
        debug_assert!(rec.verify());
        Ok(rec)
    }

    /// `(m1 + x)(m2 + x) = (m3 + x)(m4 + x)` at `x = p/h`, multiplied through by `den^2`.
    pub fn verify(&self) -> bool {
        let [a, b, c, d] = self.tuple.map(|v| v as i128);
        let (n, q) = (self.alpha_num as i128, self.alpha_den as i128);
        (a * q + n) * (b * q + n) == (c * q + n) * (d * q + n)
    }

    /// Fractional part of the shift, exactly as a reduced pair.
    pub fn fractional(&self) -> (i64, i64) {
        (self.alpha_num.rem_euclid(self.alpha_den), self.alpha_den)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_num as f64 / self.alpha_den as f64
    }
}

/// Multiplicity summary for one sum difference `h >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub h: i64,
    /// `max_p mu(h, p)`
    pub max_count: u64,
    pub argmax_p: i64,
    pub distinct_p: u64,
    pub total: u64,
    /// `max_count / (M tau(2h) log M)`
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionAtlas {
    pub bound: u64,
    /// Records with `1 <= h <= record_h`, canonical orientation.
    pub records: Vec<CollisionRecord>,
    pub record_h: i64,
    /// `mu(h, p)` for `1 <= h <= record_h`; `mu(-h, -p)` is the same count.
    pub multiplicity: BTreeMap<(i64, i64), u64>,
    /// One row per `h` in `1..=2M`.
    pub rows: Vec<ShiftRow>,
    /// Collisions with `h <= VOID_H` whose shift lands in the support bracket.
    pub void_hits: Vec<CollisionRecord>,
}

impl CollisionAtlas {
    pub fn fitted_constant(&self) -> f64 {
        self.rows.iter().fold(0.0, |a, r| a.max(r.fitted))
    }

    pub fn row(&self, h: i64) -> Option<&ShiftRow> {
        self.rows.iter().find(|r| r.h == h)
    }

    /// Records whose shift has fractional part in `[lo, hi]`, decided in exact arithmetic
    /// against the rational bracket `[lo_num/lo_den, hi_num/hi_den]`.
    pub fn in_window(&self, lo: (i64, i64), hi: (i64, i64)) -> Vec<CollisionRecord> {
        self.records
            .iter()
            .filter(|r| in_bracket(r, lo, hi))
            .copied()
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["m1", "m2", "m3", "m4", "h", "p", "alpha_star_num", "alpha_star_den"])
            .expect("in-memory write");
        for r in &self.records {
            let t = r.tuple;
            w.write_record([
                t[0].to_string(),
                t[1].to_string(),
                t[2].to_string(),
                t[3].to_string(),
                r.h.to_string(),
                r.p.to_string(),
                r.alpha_num.to_string(),
                r.alpha_den.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Rational bracket just containing `[1/(4 pi), 1/pi]`, so an empty window is a proof of the void.
pub const SUPPORT_BRACKET: ((i64, i64), (i64, i64)) = ((795, 10_000), (31_831, 100_000));

pub const VOID_H: i64 = 3;

fn in_bracket(r: &CollisionRecord, lo: (i64, i64), hi: (i64, i64)) -> bool {
    let (f, q) = r.fractional();
    (f as i128) * (lo.1 as i128) >= (lo.0 as i128) * (q as i128)
        && (f as i128) * (hi.1 as i128) <= (hi.0 as i128) * (q as i128)
}

/// Every pair of distinct unordered pairs from `{1..M-1}` with nonzero sum difference,
/// oriented so that `h > 0`. Records are kept for `h <= record_h`; multiplicities are
/// counted for every `h` in a dense per-`h` array over `p`.
pub fn collision_atlas(bound: u64, record_h: i64) -> Result<CollisionAtlas> {
    if bound > 500 {
        return Err(LabError::Budget(format!("M = {} beyond 500", bound)));
    }
    if bound < 3 {
        return Err(LabError::Domain(format!("M = {} leaves no collisions", bound)));
    }
    let m = bound as i64;
    let max_sum = 2 * (m - 1);
    let mut by_sum: Vec<Vec<(i64, i64)>> = vec![Vec::new(); max_sum as usize + 1];
    for a in 1..m {
        for b in a..m {
            by_sum[(a + b) as usize].push((a, b));
        }
    }
    let span = (m * m) as usize;
    let hs: Vec<i64> = (1..=max_sum - 2).collect();
    let mf = bound as f64;
    let (lo, hi) = SUPPORT_BRACKET;
    let per_h: Vec<(ShiftRow, Vec<CollisionRecord>, Vec<CollisionRecord>, Vec<((i64, i64), u64)>)> = hs
        .par_iter()
        .map(|&h| {
            let mut counts = vec![0u32; 2 * span + 1];
            let mut recs = Vec::new();
            let mut hits = Vec::new();
            for s in 2..=max_sum - h {
                for &(a, b) in &by_sum[s as usize] {
                    for &(c, d) in &by_sum[(s + h) as usize] {
                        let p = a * b - c * d;
                        counts[(p + span as i64) as usize] += 1;
                        if h <= record_h || h <= VOID_H {
                            let r = CollisionRecord::new([a as u64, b as u64, c as u64, d as u64])
                                .expect("sums differ");
                            if h <= VOID_H && in_bracket(&r, lo, hi) {
                                hits.push(r);
                            }
                            if h <= record_h {
                                recs.push(r);
                            }
                        }
                    }
                }
            }
            let mut row = ShiftRow { h, max_count: 0, argmax_p: 0, distinct_p: 0, total: 0, fitted: 0.0 };
            let mut mult = Vec::new();
            for (i, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let p = i as i64 - span as i64;
                row.distinct_p += 1;
                row.total += c as u64;
                if c as u64 > row.max_count {
                    row.max_count = c as u64;
                    row.argmax_p = p;
                }
                if h <= record_h {
                    mult.push(((h, p), c as u64));
                }
            }
            row.fitted = row.max_count as f64 / (mf * tau(2 * h as u64) as f64 * mf.ln());
            (row, recs, hits, mult)
        })
        .collect();
    let mut atlas = CollisionAtlas {
        bound,
        records: Vec::new(),
        record_h,
        multiplicity: BTreeMap::new(),
        rows: Vec::new(),
        void_hits: Vec::new(),
    };
    for (row, recs, hits, mult) in per_h {
        atlas.rows.push(row);
        atlas.records.extend(recs);
        atlas.void_hits.extend(hits);
        atlas.multiplicity.extend(mult);
    }
    for r in atlas.records.iter().chain(&atlas.void_hits) {
        if !r.verify() {
            return Err(LabError::Collision(format!("record {:?} fails its identity", r)));
        }
    }
    Ok(atlas)
}

/// Divisor count by trial division.
pub fn tau(n: u64) -> u64 {
    assert!(n >= 1);
    let mut n = n;
    let mut count = 1;
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        count *= e + 1;
        p += 1;
    }
    if n > 1 {
        count *= 2;
    }
    count
}

/// `sum_{h <= x} tau(h) log h` via a divisor sieve, and its ratio to `x log^2 x`.
pub fn divisor_log_sum(x: u64) -> Result<(f64, f64)> {
    if x > 10_000_000 {
        return Err(LabError::Budget(format!("X = {} beyond 1e7", x)));
    }
    let n = x as usize;
    let mut t = vec![0u32; n + 1];
    for d in 1..=n {
        let mut m = d;
        while m <= n {
            t[m] += 1;
            m += d;
        }
    }
    let mut acc = Kahan::new();
    for (h, &c) in t.iter().enumerate().skip(2) {
        acc.add(c as f64 * (h as f64).ln());
    }
    let xf = x as f64;
    Ok((acc.value(), acc.value() / (xf * xf.ln().powi(2))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_never_collide() {
        assert!(multiset_collisions(2, 200).unwrap().is_empty());
    }

    #[test]
    fn first_triple_witness() {
        let g = multiset_collisions(3, 9).unwrap();
        assert_eq!(g[0].sum, 13);
        assert_eq!(g[0].product, 36);
        assert_eq!(g[0].multisets, vec![vec![1, 6, 6], vec![2, 2, 9]]);
        for grp in &g {
            for m in &grp.multisets {
                assert_eq!(m.iter().sum::<u64>(), grp.sum);
                assert_eq!(m.iter().map(|&v| v as u128).product::<u128>(), grp.product);
            }
        }
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiset_multiplicity(&[1, 6, 6]), 3);
        assert_eq!(multiset_multiplicity(&[2, 2, 9]), 3);
        assert_eq!(multiset_multiplicity(&[1, 2, 3]), 6);
        assert_eq!(multiset_multiplicity(&[4, 4, 4]), 1);
    }

    #[test]
    fn single_group_term() {
        let spec = CantorSpec::default();
        let r: Vec<f64> = (0..=9).map(|i| if i == 0 { 1.0 } else { spec.digit_product(i as f64, None).re }).collect();
        let g = &multiset_collisions(3, 9).unwrap()[0];
        let want = 2.0 / 36.0 * 9.0 * r[1] * r[6] * r[6] * r[2] * r[2] * r[9];
        assert!((vo_group_term(g, &r) - want).abs() < 1e-15);
        assert_eq!(vo_2k(&spec, 2, 100).unwrap(), 0.0);
    }

    #[test]
    fn d2k_first_is_carlson_sum() {
        let spec = CantorSpec::default();
        let w = crate::measure::wick_constants(&spec, 5000);
        assert!((d2k(&spec, 1, 5000).unwrap() - w.c_nu).abs() < 1e-12);
    }

    #[test]
    fn defect_split_reconstructs() {
        let spec = CantorSpec::default();
        let n = 60;
        let tr = trig_decomposition(&spec, 2, n, 2 * n).unwrap();
        let r: Vec<f64> = (1..=n).map(|i| spec.digit_product(i as f64, None).re).collect();
        let c2: f64 = r.iter().enumerate().map(|(i, v)| v * v / (i + 1) as f64).sum();
        let c4: f64 = r.iter().enumerate().map(|(i, v)| v.powi(4) / ((i + 1) as f64).powi(2)).sum();
        assert!((tr.weights[0] - (2.0 * c2 * c2 - c4)).abs() < 1e-8);
        for phi in [1.0, 1.25, 2.0, 3.7, 5.1] {
            let s = CantorSpec::new(phi - 0.75, phi + 0.75, 12, 2, 3).unwrap();
            let direct = d2k_with(&s, 2, n, Truncation::PerIndex).unwrap();
            assert!((tr.evaluate(phi) - direct).abs() < 1e-8, "{} {}", tr.evaluate(phi), direct);
        }
        let mean: f64 = (0..64).map(|j| tr.evaluate(2.0 * std::f64::consts::PI * j as f64 / 64.0)).sum::<f64>() / 64.0;
        assert!((mean - tr.weights[0]).abs() < 1e-10);
    }

    #[test]
    fn record_example() {
        let r = CollisionRecord::new([1, 6, 2, 3]).unwrap();
        assert_eq!((r.h, r.p, r.alpha_num, r.alpha_den), (-2, 0, 0, 1));
        assert!(r.verify());
        assert!(CollisionRecord::new([2, 3, 3, 2]).is_err());
    }

    #[test]
    fn small_h_void() {
        let a = collision_atlas(60, 3).unwrap();
        assert!(!a.records.is_empty());
        let (lo, hi) = SUPPORT_BRACKET;
        assert!(a.in_window(lo, hi).is_empty());
        assert!(a.void_hits.is_empty());
        // (1,4) and (2,2) collide at alpha = 0 with h = -1, stored as h = 1
        assert!(a.records.iter().any(|r| r.tuple == [2, 2, 1, 4] || r.tuple == [1, 4, 2, 2]));
        let direct = a.records.iter().filter(|r| r.h == 1 && r.p == 0).count() as u64;
        assert_eq!(a.multiplicity[&(1, 0)], direct);
    }

    #[test]
    fn divisors() {
        assert_eq!(tau(12), 6);
        assert_eq!(tau(8), 4);
        assert_eq!(tau(1), 1);
        let (_, ratio) = divisor_log_sum(100_000).unwrap();
        assert!(ratio > 0.0 && ratio <= 1.0);
    }
}
