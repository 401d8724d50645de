//! Counting admissible windows that pass the finite-depth recurrence test,
//! an exhaustive oracle for the same count, and log-linear fits of the
//! counts against the cylinder scale.
//!
//! A return at time `n` witnesses depth `N` exactly when the window has
//! data for it and `x_{n+i} = x_i` for `|i| ≤ ⌈αN⌉`. Membership asks for
//! one witness per depth, so the counted set is a union over witness
//! tuples. Each tuple is closed under equality with a union-find, its
//! consistent core words are enumerated, and the union is taken over core
//! words before multiplying by the number of admissible extensions.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exec::{map_slice, Execution};
use crate::shift::{ln_big, required_radius, uniform_recurrence_check, Recurrence, Sft, SymbolicWindow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("window radius {m} too small, need at least {required}")]
    WindowTooSmall { m: i64, required: i64 },
    #[error("exhaustive enumeration of {windows:e} windows exceeds the budget of {budget:e}")]
    BudgetExceeded { windows: f64, budget: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid constraint: {0}")]
    InvalidSpec(String),
}

/// Finite-depth surrogate for uniform recurrence: every depth
/// `N ∈ [M, N_max]` needs a witness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintSpec {
    pub alpha: f64,
    /// First depth that must be witnessed.
    pub m_start: u64,
    pub n_max: u64,
    pub lambda: f64,
}

impl ConstraintSpec {
    pub fn new(alpha: f64, n_max: u64, lambda: f64) -> Self {
        ConstraintSpec { alpha, m_start: 1, n_max, lambda }
    }

    fn validate(&self) -> Result<(), EstimateError> {
        if !(self.alpha >= 0.0) || self.m_start < 1 || self.m_start > self.n_max {
            return Err(EstimateError::InvalidSpec(format!(
                "need α ≥ 0 and 1 ≤ M ≤ N_max, got α = {}, M = {}, N_max = {}",
                self.alpha, self.m_start, self.n_max
            )));
        }
        Ok(())
    }

    /// Smallest window radius holding every position a witness can use.
    pub fn min_radius(&self) -> i64 {
        self.n_max as i64 + required_radius(self.alpha, self.n_max).unwrap_or(0)
    }

    /// For each constrained depth, the agreement radius and the candidate
    /// return times that fit in `[-m, m]`. Depths with radius 0 are free.
    pub fn equality_blocks(&self, m: i64) -> Vec<(u64, i64, Vec<i64>)> {
        (self.m_start..=self.n_max)
            .filter_map(|big_n| {
                let r = required_radius(self.alpha, big_n).filter(|&r| r > 0)?;
                let last = (big_n as i64).min(m - r);
                Some((big_n, r, (1..=last).collect()))
            })
            .collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    /// Keeps the smaller index as the root.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Admissible words on `len` positions in which every position equals its
/// class's leftmost position.
fn class_words(s: &Sft, rep: &[usize]) -> Vec<Vec<u8>> {
    let d = s.alphabet_size() as u8;
    let len = rep.len();
    let mut out = Vec::new();
    let mut word = vec![0u8; len];
    fn go(s: &Sft, d: u8, rep: &[usize], word: &mut Vec<u8>, p: usize, out: &mut Vec<Vec<u8>>) {
        if p == rep.len() {
            out.push(word.clone());
            return;
        }
        let ok = |w: &Vec<u8>, c: u8| p == 0 || s.allowed(w[p - 1], c);
        if rep[p] < p {
            let c = word[rep[p]];
            if ok(word, c) {
                word[p] = c;
                go(s, d, rep, word, p + 1, out);
            }
        } else {
            for c in 0..d {
                if ok(word, c) {
                    word[p] = c;
                    go(s, d, rep, word, p + 1, out);
                }
            }
        }
    }
    if len > 0 {
        go(s, d, rep, &mut word, 0, &mut out);
    }
    out
}

/// `(left, right)` extension counts: admissible words of the given lengths
/// that can precede (resp. follow) each symbol.
fn extension_counts(s: &Sft, left: usize, right: usize) -> (Vec<BigUint>, Vec<BigUint>) {
    let d = s.alphabet_size();
    let extend = |len: usize, forward: bool| -> Vec<BigUint> {
        // v[a] = words of length `len` adjacent to a
        let mut v = vec![BigUint::one(); d];
        if len == 0 {
            return v;
        }
        let step = |v: &Vec<BigUint>| -> Vec<BigUint> {
            (0..d)
                .map(|a| {
                    (0..d)
                        .filter(|&b| if forward { s.allowed(a as u8, b as u8) } else { s.allowed(b as u8, a as u8) })
                        .map(|b| v[b].clone())
                        .sum()
                })
                .collect()
        };
        for _ in 0..len {
            v = step(&v);
        }
        v
    };
    (extend(left, false), extend(right, true))
}

/// Admissible windows on `[-m, m]` satisfying the given equalities between
/// positions.
pub fn count_with_equalities(s: &Sft, m: i64, pairs: &[(i64, i64)]) -> Result<BigUint, EstimateError> {
    if m < 0 {
        return Err(EstimateError::WindowTooSmall { m, required: 0 });
    }
    for &(a, b) in pairs {
        if a.abs() > m || b.abs() > m {
            return Err(EstimateError::WindowTooSmall { m, required: a.abs().max(b.abs()) });
        }
    }
    let words = constrained_core(s, &[pairs.to_vec()], core_span(pairs), Execution::Sequential);
    Ok(sum_extensions(s, m, core_span(pairs), &words))
}

fn core_span(pairs: &[(i64, i64)]) -> (i64, i64) {
    let lo = pairs.iter().map(|p| p.0.min(p.1)).min().unwrap_or(0);
    let hi = pairs.iter().map(|p| p.0.max(p.1)).max().unwrap_or(0);
    (lo.min(0), hi.max(0))
}

fn constrained_core(s: &Sft, sets: &[Vec<(i64, i64)>], span: (i64, i64), exec: Execution) -> HashSet<Vec<u8>> {
    let len = (span.1 - span.0 + 1) as usize;
    let per_set = map_slice(exec, sets, |pairs| {
        let mut uf = UnionFind::new(len);
        for &(a, b) in pairs {
            uf.union((a - span.0) as usize, (b - span.0) as usize);
        }
        let rep: Vec<usize> = (0..len).map(|p| uf.find(p)).collect();
        class_words(s, &rep)
    });
    let mut all = HashSet::new();
    for words in per_set {
        all.extend(words);
    }
    all
}

fn sum_extensions(s: &Sft, m: i64, span: (i64, i64), words: &HashSet<Vec<u8>>) -> BigUint {
    let (left, right) = extension_counts(s, (span.0 + m) as usize, (m - span.1) as usize);
    let d = s.alphabet_size();
    let mut by_ends = vec![0u64; d * d];
    for w in words {
        by_ends[w[0] as usize * d + w[w.len() - 1] as usize] += 1;
    }
    let mut total = BigUint::zero();
    for a in 0..d {
        for b in 0..d {
            let k = by_ends[a * d + b];
            if k > 0 {
                total += BigUint::from(k) * &left[a] * &right[b];
            }
        }
    }
    total
}

/// Exact number of admissible windows on `[-m, m]` for which the recurrence
/// test holds through `N_max`.
pub fn count_constrained_windows(s: &Sft, c: &ConstraintSpec, m: i64, exec: Execution) -> Result<BigUint, EstimateError> {
    c.validate()?;
    let required = c.min_radius();
    if m < required {
        return Err(EstimateError::WindowTooSmall { m, required });
    }
    let blocks = c.equality_blocks(m);
    if blocks.iter().any(|b| b.2.is_empty()) {
        return Ok(BigUint::zero());
    }
    // distinct constraint sets, one per witness tuple; a return time used
    // at several depths keeps only its largest radius
    let mut sets: BTreeSet<Vec<(i64, i64)>> = BTreeSet::new();
    let mut idx = vec![0usize; blocks.len()];
    loop {
        let mut chosen: Vec<(i64, i64)> = Vec::new();
        for (j, b) in blocks.iter().enumerate() {
            let n = b.2[idx[j]];
            match chosen.iter_mut().find(|(cn, _)| *cn == n) {
                Some(e) => e.1 = e.1.max(b.1),
                None => chosen.push((n, b.1)),
            }
        }
        chosen.sort_unstable();
        sets.insert(chosen);
        let mut j = 0;
        while j < blocks.len() {
            idx[j] += 1;
            if idx[j] < blocks[j].2.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == blocks.len() {
            break;
        }
    }
    let pair_sets: Vec<Vec<(i64, i64)>> = sets
        .iter()
        .map(|set| set.iter().flat_map(|&(n, r)| (-r..=r).map(move |i| (i, i + n))).collect())
        .collect();
    let span = pair_sets.iter().fold((0, 0), |acc, p| {
        let (lo, hi) = core_span(p);
        (acc.0.min(lo), acc.1.max(hi))
    });
    let words = constrained_core(s, &pair_sets, span, exec);
    Ok(sum_extensions(s, m, span, &words))
}

pub const ORACLE_BUDGET: f64 = 1e8;

/// Enumerates every admissible window on `[-m, m]` and runs the recurrence
/// test on each.
pub fn brute_force_oracle(s: &Sft, c: &ConstraintSpec, m: i64, exec: Execution) -> Result<BigUint, EstimateError> {
    c.validate()?;
    if m < 0 {
        return Err(EstimateError::WindowTooSmall { m, required: 0 });
    }
    let d = s.alphabet_size();
    let len = (2 * m + 1) as usize;
    let windows = (d as f64).powi(len as i32);
    if windows > ORACLE_BUDGET {
        return Err(EstimateError::BudgetExceeded { windows, budget: ORACLE_BUDGET });
    }
    let prefix_len = len.min(6);
    let mut prefixes: Vec<Vec<u8>> = (0..d as u8).map(|a| vec![a]).collect();
    for _ in 1..prefix_len {
        prefixes = prefixes
            .into_iter()
            .flat_map(|p| {
                let last = *p.last().unwrap();
                (0..d as u8).filter(move |&b| s.allowed(last, b)).map(move |b| {
                    let mut q = p.clone();
                    q.push(b);
                    q
                })
            })
            .collect();
    }
    let counts = map_slice(exec, &prefixes, |p| {
        let mut word = p.clone();
        word.resize(len, 0);
        let mut hits = 0u64;
        fn go(s: &Sft, c: &ConstraintSpec, m: i64, word: &mut Vec<u8>, p: usize, hits: &mut u64) {
            if p == word.len() {
                let w = SymbolicWindow::new(-m, word.clone()).expect("nonempty window");
                if uniform_recurrence_check(&w, c.alpha, c.m_start, c.n_max, c.lambda) == Recurrence::Holds {
                    *hits += 1;
                }
                return;
            }
            for b in 0..s.alphabet_size() as u8 {
                if s.allowed(word[p - 1], b) {
                    word[p] = b;
                    go(s, c, m, word, p + 1, hits);
                }
            }
        }
        go(s, c, m, &mut word, p.len(), &mut hits);
        hits
    });
    Ok(counts.into_iter().map(BigUint::from).sum())
}

/// Least-squares fit of `log count` against `m log λ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountCurve {
    pub radii: Vec<i64>,
    #[serde(serialize_with = "ser_counts")]
    pub counts: Vec<BigUint>,
    pub slope: f64,
    /// Root-mean-square residual of the fit, in units of `log λ`.
    pub residual: f64,
    /// The raw slope fell outside `[0, 2]` and was clamped.
    pub clamped: bool,
    /// Radii actually used: the largest half.
    pub fitted_from: usize,
}

fn ser_counts<S: serde::Serializer>(v: &[BigUint], ser: S) -> Result<S::Ok, S::Error> {
    ser.collect_seq(v.iter().map(|c| c.to_string()))
}

pub fn fit_dimension(points: &[(i64, BigUint)], lambda: f64) -> Result<CountCurve, EstimateError> {
    if points.len() < 3 {
        return Err(EstimateError::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|p| p.1.is_zero()) {
        return Err(EstimateError::DegenerateFit("counts must be positive".into()));
    }
    if !(lambda > 1.0) {
        return Err(EstimateError::DegenerateFit(format!("λ = {lambda} must exceed 1")));
    }
    let mut sorted: Vec<&(i64, BigUint)> = points.iter().collect();
    sorted.sort_by_key(|p| p.0);
    let keep = points.len().div_ceil(2).max(2);
    let used = &sorted[sorted.len() - keep..];
    let ln_l = lambda.ln();
    let xs: Vec<f64> = used.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = used.iter().map(|p| ln_big(&p.1) / ln_l).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(EstimateError::DegenerateFit("all radii are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let raw = sxy / sxx;
    let icpt = my - raw * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - icpt - raw * x).powi(2)).sum::<f64>() / n).sqrt();
    let slope = raw.clamp(0.0, 2.0);
    Ok(CountCurve {
        radii: sorted.iter().map(|p| p.0).collect(),
        counts: sorted.iter().map(|p| p.1.clone()).collect(),
        slope,
        residual,
        clamped: slope != raw,
        fitted_from: keep,
    })
}

/// Counts at every radius from the smallest valid one up to `m_max`.
pub fn count_curve(s: &Sft, c: &ConstraintSpec, m_max: i64, exec: Execution) -> Result<Vec<(i64, BigUint)>, EstimateError> {
    let m0 = c.min_radius().max(1);
    if m_max < m0 {
        return Err(EstimateError::WindowTooSmall { m: m_max, required: m0 });
    }
    (m0..=m_max).map(|m| Ok((m, count_constrained_windows(s, c, m, exec)?))).collect()
}

/// Deepest `N ≤ cap` whose witnesses all fit in `[-m, m]`; 0 if none.
pub fn effective_depth(alpha: f64, m: i64, cap: u64) -> u64 {
    (1..=cap)
        .filter(|&n| n as i64 + required_radius(alpha, n).unwrap_or(0) <= m)
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchedulePoint {
    pub m: i64,
    pub depth: u64,
    #[serde(serialize_with = "ser_count")]
    pub count: BigUint,
}

fn ser_count<S: serde::Serializer>(v: &BigUint, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&v.to_string())
}

/// Counts for `m = 1..=m_max` where each window is tested to the deepest
/// level it supports, capped at `cap`. Radii supporting no depth are
/// skipped. This is the curve the estimator fits: with a fixed depth the
/// constraints touch a bounded core and every slope tends to 2.
pub fn depth_schedule_curve(
    s: &Sft,
    alpha: f64,
    m_max: i64,
    cap: u64,
    lambda: f64,
    exec: Execution,
) -> Result<Vec<SchedulePoint>, EstimateError> {
    if cap == 0 || !(alpha >= 0.0) {
        return Err(EstimateError::InvalidSpec(format!("need α ≥ 0 and a positive depth cap, got α = {alpha}, cap = {cap}")));
    }
    let mut out = Vec::new();
    for m in 1..=m_max {
        let depth = effective_depth(alpha, m, cap);
        if depth == 0 {
            continue;
        }
        let c = ConstraintSpec::new(alpha, depth, lambda);
        out.push(SchedulePoint { m, depth, count: count_constrained_windows(s, &c, m, exec)? });
    }
    if out.is_empty() {
        let required = 1 + required_radius(alpha, 1).unwrap_or(0).max(0);
        return Err(EstimateError::WindowTooSmall { m: m_max, required });
    }
    Ok(out)
}

/// Fitted slope of the depth-schedule curve.
pub fn schedule_slope(s: &Sft, alpha: f64, m_max: i64, cap: u64, lambda: f64, exec: Execution) -> Result<CountCurve, EstimateError> {
    let pts: Vec<(i64, BigUint)> = depth_schedule_curve(s, alpha, m_max, cap, lambda, exec)?
        .into_iter()
        .map(|p| (p.m, p.count))
        .collect();
    fit_dimension(&pts, lambda)
}

pub fn biguint_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
