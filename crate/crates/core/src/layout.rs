//! Fixed-block layouts behind the lower bound: centers `n_k = n₁θ^{k−1}`,
//! the blocks forced by returns at those times, the free positions left
//! over, and the resulting local-dimension exponents. Also the `α = 1/3`
//! construction whose left gaps have a prescribed width.
//!
//! Positions are exact rationals. In `Idealized` mode they are used as is
//! and free space is measured by length; in `Rounded` mode centers and
//! half-widths are floored to integers and free space is a count of
//! integer positions.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::algebra::{rat_to_f64, rational_from_f64};
use crate::exec::{map_indices, Execution};
use crate::shift::Sft;

type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("condition {condition} fails at k = {k}")]
    RegimeViolation { condition: Condition, k: usize },
    #[error("radius {m} exceeds the layout's working range {max}")]
    OutOfWindow { m: f64, max: f64 },
    #[error("invalid layout parameters: {0}")]
    InvalidParams(String),
}

/// The inequalities that decide which block pattern a pair `(α, θ)` produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    /// `1 < θ` and `αθ ≤ 1`: returns leave room for free digits.
    Freedom,
    /// `1 + αθ < θ − αθ²`: consecutive right blocks are disjoint.
    RightDisjoint,
    /// `1 + αθ > θ − αθ²`: consecutive right blocks overlap.
    RightOverlap,
    /// `θ(1 − α) > 1`: each center lies outside the previous block.
    CenterOutside,
    /// `θ(1 − 2α) > 1`: consecutive left blocks are disjoint.
    LeftDisjoint,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Freedom,
        Condition::RightDisjoint,
        Condition::RightOverlap,
        Condition::CenterOutside,
        Condition::LeftDisjoint,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::Freedom => "freedom",
            Condition::RightDisjoint => "right-disjoint",
            Condition::RightOverlap => "right-overlap",
            Condition::CenterOutside => "center-outside",
            Condition::LeftDisjoint => "left-disjoint",
        }
    }

    pub fn holds(self, alpha: &Q, theta: &Q) -> bool {
        let one = Q::one();
        let at = alpha * theta;
        match self {
            Condition::Freedom => theta > &one && at <= one,
            Condition::RightDisjoint => &one + &at < theta - &at * theta,
            Condition::RightOverlap => &one + &at > theta - &at * theta,
            Condition::CenterOutside => theta * (&one - alpha) > one,
            Condition::LeftDisjoint => theta * (&one - alpha - alpha) > one,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    NoOverlap,
    OverlapDisjointLeft,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Truth value of each condition, in [`Condition::ALL`] order.
    pub conditions: [(Condition, bool); 5],
}

impl Regime {
    pub fn holds(&self, c: Condition) -> bool {
        self.conditions.iter().find(|(k, _)| *k == c).map(|(_, v)| *v).unwrap_or(false)
    }

    fn required(tag: RegimeTag) -> &'static [Condition] {
        match tag {
            RegimeTag::NoOverlap => &[Condition::Freedom, Condition::RightDisjoint],
            RegimeTag::OverlapDisjointLeft => &[
                Condition::Freedom,
                Condition::RightOverlap,
                Condition::CenterOutside,
                Condition::LeftDisjoint,
            ],
            RegimeTag::Degenerate => &[],
        }
    }

    /// First condition failing for both non-degenerate patterns, the one
    /// reported when a layout cannot be built.
    fn first_failure(&self) -> Condition {
        let pick = if self.holds(Condition::RightOverlap) { RegimeTag::OverlapDisjointLeft } else { RegimeTag::NoOverlap };
        Self::required(pick)
            .iter()
            .copied()
            .find(|&c| !self.holds(c))
            .unwrap_or(Condition::Freedom)
    }
}

/// Exact classification of `(α, θ)`.
pub fn classify_regime(alpha: &Q, theta: &Q) -> Regime {
    let conditions = Condition::ALL.map(|c| (c, c.holds(alpha, theta)));
    let mut r = Regime { tag: RegimeTag::Degenerate, conditions };
    for tag in [RegimeTag::NoOverlap, RegimeTag::OverlapDisjointLeft] {
        if Regime::required(tag).iter().all(|&c| r.holds(c)) {
            r.tag = tag;
        }
    }
    r
}

/// Classification of the exact values of two doubles.
pub fn classify_regime_f64(alpha: f64, theta: f64) -> Regime {
    classify_regime(&rational_from_f64(alpha), &rational_from_f64(theta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayoutMode {
    Idealized,
    Rounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutParams {
    pub alpha: Q,
    pub theta: Q,
    pub n1: Q,
    /// Number of centers `K`.
    pub k: usize,
    pub mode: LayoutMode,
}

impl LayoutParams {
    /// Parameters with `n₁ = θ`.
    pub fn new(alpha: Q, theta: Q, k: usize, mode: LayoutMode) -> Self {
        LayoutParams { n1: theta.clone(), alpha, theta, k, mode }
    }

    pub fn from_f64(alpha: f64, theta: f64, k: usize, mode: LayoutMode) -> Self {
        Self::new(rational_from_f64(alpha), rational_from_f64(theta), k, mode)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Right,
    Left,
}

/// Closed interval of fixed positions forced by the return at `n_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub k: usize,
    pub lo: Q,
    pub hi: Q,
}

impl Block {
    pub fn label(&self) -> String {
        match self.kind {
            BlockKind::Right => format!("right({})", self.k),
            BlockKind::Left => format!("left({})", self.k),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockLayout {
    pub params: LayoutParams,
    pub regime: Regime,
    /// `n_1 … n_{K+2}`; the last two are extrapolated and only used by blocks.
    pub centers: Vec<Q>,
    pub right_blocks: Vec<Block>,
    pub left_blocks: Vec<Block>,
    pub window: (Q, Q),
    /// Maximal free stretches of the window: open intervals in `Idealized`
    /// mode, inclusive integer ranges in `Rounded` mode.
    pub free_intervals: Vec<(Q, Q)>,
    max_radius: Q,
}

fn floor_q(x: &Q) -> Q {
    x.floor()
}

fn half_width(params: &LayoutParams, n: &Q) -> Q {
    let w = &params.alpha * n;
    match params.mode {
        LayoutMode::Idealized => w,
        LayoutMode::Rounded => floor_q(&w),
    }
}

/// Unions closed intervals clipped to `[lo, hi]` and returns the covered
/// length (Idealized) or number of integer points (Rounded).
fn covered(blocks: &[&Block], lo: &Q, hi: &Q, mode: LayoutMode) -> Q {
    let mut spans: Vec<(Q, Q)> = blocks
        .iter()
        .filter_map(|b| {
            let a = if &b.lo > lo { b.lo.clone() } else { lo.clone() };
            let c = if &b.hi < hi { b.hi.clone() } else { hi.clone() };
            match mode {
                LayoutMode::Idealized => (a < c).then_some((a, c)),
                LayoutMode::Rounded => {
                    let (a, c) = (a.ceil(), c.floor());
                    (a <= c).then_some((a, c))
                }
            }
        })
        .collect();
    spans.sort_by(|x, y| x.0.cmp(&y.0));
    let mut total = Q::zero();
    let mut cur: Option<(Q, Q)> = None;
    let join_gap = match mode {
        LayoutMode::Idealized => Q::zero(),
        LayoutMode::Rounded => Q::one(),
    };
    let measure = |s: &(Q, Q)| match mode {
        LayoutMode::Idealized => &s.1 - &s.0,
        LayoutMode::Rounded => &s.1 - &s.0 + Q::one(),
    };
    for s in spans {
        cur = match cur {
            Some(c) if s.0 <= &c.1 + &join_gap => {
                let hi = if s.1 > c.1 { s.1 } else { c.1 };
                Some((c.0, hi))
            }
            Some(c) => {
                total += measure(&c);
                Some(s)
            }
            None => Some(s),
        };
    }
    if let Some(c) = cur {
        total += measure(&c);
    }
    total
}

fn complement(blocks: &[&Block], lo: &Q, hi: &Q, mode: LayoutMode) -> Vec<(Q, Q)> {
    let mut spans: Vec<(Q, Q)> = blocks.iter().map(|b| (b.lo.clone(), b.hi.clone())).collect();
    spans.sort_by(|x, y| x.0.cmp(&y.0));
    let one = Q::one();
    let mut out = Vec::new();
    let mut cursor = lo.clone();
    // for integer mode the cursor is the first position not yet accounted for
    if mode == LayoutMode::Rounded {
        cursor = cursor.ceil();
    }
    for (a, b) in spans {
        match mode {
            LayoutMode::Idealized => {
                let end = if &a < hi { a.clone() } else { hi.clone() };
                if cursor < end {
                    out.push((cursor.clone(), end));
                }
                if b > cursor {
                    cursor = b;
                }
            }
            LayoutMode::Rounded => {
                let end = (&a.ceil() - &one).min(hi.floor());
                if cursor <= end {
                    out.push((cursor.clone(), end));
                }
                let next = &b.floor() + &one;
                if next > cursor {
                    cursor = next;
                }
            }
        }
    }
    match mode {
        LayoutMode::Idealized => {
            if &cursor < hi {
                out.push((cursor, hi.clone()));
            }
        }
        LayoutMode::Rounded => {
            if cursor <= hi.floor() {
                out.push((cursor, hi.floor()));
            }
        }
    }
    out
}

impl BlockLayout {
    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.right_blocks.iter().chain(self.left_blocks.iter())
    }

    /// Center `n_k`, 1-based.
    pub fn center(&self, k: usize) -> &Q {
        &self.centers[k - 1]
    }

    /// Largest `m` for which `[-m, m]` avoids every block the layout does
    /// not model.
    pub fn max_radius(&self) -> &Q {
        &self.max_radius
    }

    /// Free length (or free integer positions) in `[-m, m]`.
    pub fn free_count(&self, m: &Q) -> Result<Q, LayoutError> {
        if m.is_negative() || m > &self.max_radius {
            return Err(LayoutError::OutOfWindow { m: rat_to_f64(m), max: rat_to_f64(&self.max_radius) });
        }
        let blocks: Vec<&Block> = self.blocks().collect();
        let lo = -m.clone();
        let cov = covered(&blocks, &lo, m, self.params.mode);
        Ok(match self.params.mode {
            LayoutMode::Idealized => m + m - cov,
            LayoutMode::Rounded => {
                let mf = m.floor();
                &mf + &mf + Q::one() - cov
            }
        })
    }

    pub fn free_count_f64(&self, m: f64) -> Result<f64, LayoutError> {
        Ok(rat_to_f64(&self.free_count(&rational_from_f64(m))?))
    }

    /// The radius whose free count the closed form predicts at level `k`:
    /// `n_k + αn_{k+1}` without overlap, `αn_{k+2}` with overlap.
    pub fn checkpoint(&self, k: usize) -> Option<Q> {
        let n = |i: usize| &self.centers[i - 1];
        let w = |i: usize| half_width(&self.params, n(i));
        let m = match self.regime.tag {
            RegimeTag::NoOverlap => n(k) + w(k + 1),
            RegimeTag::OverlapDisjointLeft => w(k + 2),
            RegimeTag::Degenerate => return None,
        };
        (k >= 1 && m <= self.max_radius).then_some(m)
    }

    /// Free count at [`checkpoint`](Self::checkpoint) `k` from block-length
    /// sums alone, without a sweep.
    pub fn closed_form(&self, k: usize) -> Option<Q> {
        let m = self.checkpoint(k)?;
        let n = |i: usize| self.centers[i - 1].clone();
        let w = |i: usize| half_width(&self.params, &self.centers[i - 1]);
        let one = Q::one();
        Some(match (self.regime.tag, self.params.mode) {
            (RegimeTag::NoOverlap, LayoutMode::Idealized) => {
                let s: Q = (1..=k).map(|i| w(i + 1)).sum();
                &m + &m - &s - &s
            }
            (RegimeTag::NoOverlap, LayoutMode::Rounded) => {
                let s: Q = (1..=k).map(|i| w(i + 1) + w(i + 1) + &one).sum();
                &m + &m + &one - s
            }
            (RegimeTag::OverlapDisjointLeft, LayoutMode::Idealized) => {
                let s: Q = (1..=k).map(|i| n(i) - n(i + 1) + w(i + 1) + w(i + 2)).sum();
                &m - s + n(1) - w(2)
            }
            (RegimeTag::OverlapDisjointLeft, LayoutMode::Rounded) => {
                let s: Q = (1..=k).map(|i| n(i) - n(i + 1) + w(i + 1) + w(i + 2) + &one).sum();
                &m - s + n(1) - w(2)
            }
            (RegimeTag::Degenerate, _) => return None,
        })
    }
}

/// Lays out the blocks for `K` centers.
pub fn build_layout(p: &LayoutParams) -> Result<BlockLayout, LayoutError> {
    if p.k < 2 {
        return Err(LayoutError::InvalidParams(format!("need K ≥ 2 centers, got {}", p.k)));
    }
    if p.alpha.is_negative() || p.alpha >= Q::one() {
        return Err(LayoutError::InvalidParams("α must lie in [0, 1)".into()));
    }
    if !p.n1.is_positive() {
        return Err(LayoutError::InvalidParams("n₁ must be positive".into()));
    }
    let regime = classify_regime(&p.alpha, &p.theta);
    if regime.tag == RegimeTag::Degenerate {
        return Err(LayoutError::RegimeViolation { condition: regime.first_failure(), k: 1 });
    }
    let mut centers = Vec::with_capacity(p.k + 2);
    let mut c = p.n1.clone();
    for _ in 0..p.k + 2 {
        centers.push(match p.mode {
            LayoutMode::Idealized => c.clone(),
            LayoutMode::Rounded => floor_q(&c),
        });
        c = &c * &p.theta;
    }
    let n = |i: usize| &centers[i - 1];
    let w = |i: usize| half_width(p, n(i));
    let right_blocks: Vec<Block> = (1..=p.k)
        .map(|k| Block { kind: BlockKind::Right, k, lo: n(k) - w(k + 1), hi: n(k) + w(k + 1) })
        .collect();
    let left_blocks: Vec<Block> = match regime.tag {
        RegimeTag::OverlapDisjointLeft => (1..=p.k)
            .map(|k| Block { kind: BlockKind::Left, k, lo: -w(k + 2), hi: n(k) + w(k + 1) - n(k + 1) })
            .filter(|b| b.lo <= b.hi)
            .collect(),
        _ => Vec::new(),
    };
    if p.mode == LayoutMode::Idealized {
        check_structure(&regime, &right_blocks, &left_blocks, &centers)?;
    }
    let big_k = p.k;
    let window = (-w(big_k + 1), n(big_k) + w(big_k + 1));
    // next unmodeled right block and left block
    let mut max_radius = n(big_k) + w(big_k + 1);
    // overlapping right blocks form one chain, so block K+1 only adds
    // positions beyond its right end
    let next_right = n(big_k + 1) - w(big_k + 2);
    if regime.tag == RegimeTag::NoOverlap && next_right < max_radius {
        max_radius = next_right;
    }
    if regime.tag == RegimeTag::OverlapDisjointLeft {
        let next_left = n(big_k + 1) - n(big_k + 2) + w(big_k + 2);
        let reach = -next_left;
        if reach < max_radius {
            max_radius = reach;
        }
    }
    let blocks: Vec<&Block> = right_blocks.iter().chain(left_blocks.iter()).collect();
    let free_intervals = complement(&blocks, &window.0, &window.1, p.mode);
    Ok(BlockLayout {
        params: p.clone(),
        regime,
        centers,
        right_blocks,
        left_blocks,
        window,
        free_intervals,
        max_radius,
    })
}

fn check_structure(regime: &Regime, right: &[Block], left: &[Block], centers: &[Q]) -> Result<(), LayoutError> {
    for k in 1..right.len() {
        let (a, b) = (&right[k - 1], &right[k]);
        match regime.tag {
            RegimeTag::NoOverlap => {
                if a.hi >= b.lo {
                    return Err(LayoutError::RegimeViolation { condition: Condition::RightDisjoint, k });
                }
            }
            RegimeTag::OverlapDisjointLeft => {
                if a.hi <= b.lo {
                    return Err(LayoutError::RegimeViolation { condition: Condition::RightOverlap, k });
                }
                if centers[k] <= a.hi {
                    return Err(LayoutError::RegimeViolation { condition: Condition::CenterOutside, k });
                }
            }
            RegimeTag::Degenerate => {}
        }
    }
    for k in 1..left.len() {
        if left[k].hi >= left[k - 1].lo {
            return Err(LayoutError::RegimeViolation { condition: Condition::LeftDisjoint, k });
        }
    }
    Ok(())
}

/// `lim F(m)/m` along the checkpoints, in closed form; `None` for a
/// degenerate regime.
pub fn local_dimension_limit(alpha: f64, theta: f64, regime: &Regime) -> Option<f64> {
    match regime.tag {
        RegimeTag::NoOverlap => Some(2.0 - 2.0 * alpha * theta * theta / ((1.0 + alpha * theta) * (theta - 1.0))),
        RegimeTag::OverlapDisjointLeft => Some(((1.0 - 2.0 * alpha) * theta - 1.0) / (alpha * theta * (theta - 1.0))),
        RegimeTag::Degenerate => None,
    }
}

/// Where the three branches of the lower bound meet.
pub fn branch_thresholds() -> (f64, f64) {
    (3.0 - 2.0 * 2f64.sqrt(), 2.0 - 3f64.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerOptimum {
    /// Best `θ`; `None` once `α ≥ 1/3`, where the bound is 0.
    pub theta_star: Option<f64>,
    pub dim_lower: f64,
}

/// Closed-form best `θ` for the lower bound and its value. At a branch
/// threshold the branch on the larger-`α` side is used.
pub fn optimal_theta_lower(alpha: f64) -> LowerOptimum {
    let (t1, t2) = branch_thresholds();
    if alpha >= 1.0 / 3.0 {
        return LowerOptimum { theta_star: None, dim_lower: 0.0 };
    }
    if alpha < t1 {
        let theta = 2.0 / (1.0 - alpha);
        let r = (1.0 - alpha) / (1.0 + alpha);
        LowerOptimum { theta_star: Some(theta), dim_lower: 2.0 * r * r }
    } else if alpha < t2 {
        let s = 1.0 - (2.0 * alpha).sqrt();
        LowerOptimum { theta_star: Some(1.0 / s), dim_lower: s * s / alpha }
    } else {
        LowerOptimum { theta_star: Some(1.0 / alpha), dim_lower: (1.0 - 3.0 * alpha) / (1.0 - alpha) }
    }
}

fn limit_at(alpha: f64, theta: f64) -> Option<f64> {
    local_dimension_limit(alpha, theta, &classify_regime_f64(alpha, theta))
}

/// Numerical counterpart of [`optimal_theta_lower`]: grid search of the
/// local-dimension limit over admissible `θ ∈ (1, min(1/α, θ_cap)]`, then
/// golden-section refinement around the best grid point and a check of the
/// right endpoint. Ties go to the smaller `θ`.
pub fn lower_bound_search(alpha: f64, points: usize, exec: Execution) -> Option<(f64, f64)> {
    let hi = if alpha > 0.0 { (1.0 / alpha).min(1e3) } else { 10.0 };
    let lo = 1.0;
    let step = (hi - lo) / points as f64;
    let vals = map_indices(exec, points, |i| {
        let t = lo + step * (i + 1) as f64;
        limit_at(alpha, t).map(|v| (t, v))
    });
    let mut best: Option<(f64, f64)> = None;
    for (t, v) in vals.into_iter().flatten() {
        if best.is_none_or(|b| v > b.1) {
            best = Some((t, v));
        }
    }
    let (t0, _) = best?;
    let a = (t0 - step).max(lo + 1e-12);
    let b = (t0 + step).min(hi);
    let f = |t: f64| limit_at(alpha, t).unwrap_or(f64::NEG_INFINITY);
    let refined = golden_max(f, a, b, 1e-12);
    let mut out = (refined, f(refined));
    for cand in [t0, hi] {
        let v = f(cand);
        if v > out.1 + 1e-15 {
            out = (cand, v);
        }
    }
    Some(out)
}

/// Maximizer of a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Integer interval `[lo, hi]` (empty when `lo > hi`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub lo: i64,
    pub hi: i64,
}

impl Span {
    pub fn len(&self) -> usize {
        if self.lo > self.hi {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Layout of the `α = 1/3` construction with `n_{k+1} = 3(n_k + δ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CardinalityFamily {
    pub delta: u64,
    /// `n_1 … n_{K+1}`.
    pub centers: Vec<i64>,
    pub right_blocks: Vec<Span>,
    /// Left blocks `k = 1..K`, moving away from 0.
    pub left_blocks: Vec<Span>,
    /// Free stretches between consecutive left blocks.
    pub gaps: Vec<Span>,
    /// Number of distinct admissible fillings of the gaps.
    pub witness_count: BigUint,
}

/// Number of words `w` of length `len` such that `a w b` is admissible for
/// some symbols `a`, `b`.
pub fn fillable_words(s: &Sft, len: usize) -> BigUint {
    let d = s.alphabet_size();
    if len == 0 {
        return BigUint::one();
    }
    let has_pred: Vec<bool> = (0..d).map(|b| (0..d).any(|a| s.allowed(a as u8, b as u8))).collect();
    let has_succ: Vec<bool> = (0..d).map(|a| (0..d).any(|b| s.allowed(a as u8, b as u8))).collect();
    // paths of `len` symbols starting at a symbol with a predecessor
    let mut v: Vec<BigUint> = (0..d).map(|a| if has_pred[a] { BigUint::one() } else { BigUint::zero() }).collect();
    for _ in 1..len {
        v = (0..d)
            .map(|b| (0..d).filter(|&a| s.allowed(a as u8, b as u8)).map(|a| v[a].clone()).sum())
            .collect();
    }
    (0..d).filter(|&b| has_succ[b]).map(|b| v[b].clone()).sum()
}

pub fn cardinality_family(delta: u64, n1: i64, k: usize, s: &Sft) -> Result<CardinalityFamily, LayoutError> {
    if delta < 1 || n1 < 1 || k < 1 {
        return Err(LayoutError::InvalidParams("need δ ≥ 1, n₁ ≥ 1 and K ≥ 1".into()));
    }
    let d = delta as i64;
    let mut centers = vec![n1];
    for _ in 0..k {
        let last = *centers.last().unwrap();
        let next = last
            .checked_add(d)
            .and_then(|v| v.checked_mul(3))
            .ok_or_else(|| LayoutError::InvalidParams("centers overflow 64-bit integers".into()))?;
        centers.push(next);
    }
    let right_blocks = (0..k).map(|i| Span { lo: -d, hi: 2 * centers[i] + d }).collect();
    let left_blocks: Vec<Span> = (0..k).map(|i| Span { lo: -d - centers[i + 1], hi: -2 * d - centers[i] }).collect();
    let gaps: Vec<Span> = left_blocks.windows(2).map(|p| Span { lo: p[1].hi + 1, hi: p[0].lo - 1 }).collect();
    let witness_count = gaps.iter().map(|g| fillable_words(s, g.len())).product();
    Ok(CardinalityFamily { delta, centers, right_blocks, left_blocks, gaps, witness_count })
}

/// Exact conversion helper for callers holding integers.
pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_rational;

    fn q(s: &str) -> Q {
        parse_rational(s).unwrap()
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(&q("0.1"), &q("20/9")).tag, RegimeTag::NoOverlap);
        let r = classify_regime(&q("0.25"), &q("3.41421"));
        assert_eq!(r.tag, RegimeTag::OverlapDisjointLeft);
        for theta in ["1.5", "2", "2.5", "4", "10"] {
            assert_eq!(classify_regime(&q("0.4"), &q(theta)).tag, RegimeTag::Degenerate);
        }
        assert_eq!(classify_regime(&q("0.3"), &q("10/3")).tag, RegimeTag::OverlapDisjointLeft);
        assert_eq!(classify_regime(&q("0"), &q("1.01")).tag, RegimeTag::NoOverlap);
    }

    #[test]
    fn first_right_block_example() {
        let p = LayoutParams::new(q("0.1"), q("2.2222"), 5, LayoutMode::Idealized);
        let l = build_layout(&p).unwrap();
        let b = &l.right_blocks[0];
        assert!((q_to_f64(&b.lo) - 1.7284).abs() < 1e-4);
        assert!((q_to_f64(&b.hi) - 2.7160).abs() < 1e-4);
        assert!((q_to_f64(&l.right_blocks[1].lo) - 3.8409).abs() < 1e-4);
        assert!(l.left_blocks.is_empty());
    }

    #[test]
    fn overlap_layout_has_disjoint_left_blocks() {
        let p = LayoutParams::new(q("0.25"), q("3.41421"), 8, LayoutMode::Idealized);
        let l = build_layout(&p).unwrap();
        assert_eq!(l.left_blocks.len(), 8);
        for pair in l.left_blocks.windows(2) {
            assert!(pair[1].hi < pair[0].lo);
        }
        for pair in l.right_blocks.windows(2) {
            assert!(pair[0].hi > pair[1].lo);
        }
    }

    #[test]
    fn alpha_zero_rounded_counts_points() {
        let p = LayoutParams::new(q("0"), q("2"), 6, LayoutMode::Rounded);
        let l = build_layout(&p).unwrap();
        for b in &l.right_blocks {
            assert_eq!(b.lo, b.hi);
        }
        let nk = l.center(6).clone();
        let f = l.free_count(&nk).unwrap();
        assert_eq!(f, &nk + &nk + Q::one() - q_int(6));
    }

    #[test]
    fn degenerate_layout_is_rejected() {
        let p = LayoutParams::new(q("0.4"), q("2"), 4, LayoutMode::Idealized);
        assert!(matches!(build_layout(&p), Err(LayoutError::RegimeViolation { k: 1, .. })));
    }

    #[test]
    fn free_count_out_of_window() {
        let p = LayoutParams::new(q("0.1"), q("20/9"), 5, LayoutMode::Idealized);
        let l = build_layout(&p).unwrap();
        let too_far = l.max_radius() + Q::one();
        assert!(matches!(l.free_count(&too_far), Err(LayoutError::OutOfWindow { .. })));
    }

    #[test]
    fn sweep_matches_closed_form() {
        for (a, t) in [("0.1", "20/9"), ("0.25", "3.414214"), ("0.3", "10/3")] {
            let l = build_layout(&LayoutParams::new(q(a), q(t), 30, LayoutMode::Idealized)).unwrap();
            for k in 1..=25 {
                let m = l.checkpoint(k).unwrap_or_else(|| panic!("no checkpoint α={a} k={k} max={}", q_to_f64(l.max_radius())));
                assert_eq!(l.free_count(&m).unwrap(), l.closed_form(k).unwrap(), "α={a} θ={t} k={k}");
            }
        }
    }

    #[test]
    fn limits_examples() {
        let r = classify_regime(&q("0.1"), &q("20/9"));
        let v = local_dimension_limit(0.1, 20.0 / 9.0, &r).unwrap();
        assert!((v - 2.0 * (0.9f64 / 1.1).powi(2)).abs() < 1e-12);
        let r = classify_regime(&q("0.25"), &q("3.41421"));
        let v = local_dimension_limit(0.25, 3.41421, &r).unwrap();
        assert!((v - 0.343146).abs() < 1e-6);
        let r = classify_regime(&q("0"), &q("3"));
        assert_eq!(local_dimension_limit(0.0, 3.0, &r), Some(2.0));
    }

    #[test]
    fn optimum_examples() {
        let o = optimal_theta_lower(0.1);
        assert!((o.theta_star.unwrap() - 2.222222).abs() < 1e-6 && (o.dim_lower - 1.338843).abs() < 1e-6);
        let o = optimal_theta_lower(0.25);
        assert!((o.theta_star.unwrap() - 3.414214).abs() < 1e-6 && (o.dim_lower - 0.343146).abs() < 1e-6);
        let o = optimal_theta_lower(0.3);
        assert!((o.theta_star.unwrap() - 10.0 / 3.0).abs() < 1e-12 && (o.dim_lower - 0.142857).abs() < 1e-6);
        assert_eq!(optimal_theta_lower(0.4), LowerOptimum { theta_star: None, dim_lower: 0.0 });
        for alpha in [0.1, 0.25, 0.3] {
            let (_, v) = lower_bound_search(alpha, 2000, Execution::Sequential).unwrap();
            assert!((v - optimal_theta_lower(alpha).dim_lower).abs() < 1e-6, "α={alpha}");
        }
    }

    #[test]
    fn thresholds_agree_from_both_sides() {
        let (t1, t2) = branch_thresholds();
        let s = 1.0 - (2.0 * t1).sqrt();
        assert!((s * s / t1 - 2.0 * ((1.0 - t1) / (1.0 + t1)).powi(2)).abs() < 1e-12);
        let s = 1.0 - (2.0 * t2).sqrt();
        assert!((s * s / t2 - (1.0 - 3.0 * t2) / (1.0 - t2)).abs() < 1e-12);
    }

    #[test]
    fn cardinality_example() {
        let full = Sft::full_shift(2, 2.0).unwrap();
        let c = cardinality_family(5, 10, 4, &full).unwrap();
        assert_eq!(&c.centers[..4], &[10, 45, 150, 465]);
        assert_eq!(c.left_blocks[0], Span { lo: -50, hi: -20 });
        assert_eq!(c.left_blocks[1], Span { lo: -155, hi: -55 });
        assert_eq!(c.gaps[0], Span { lo: -54, hi: -51 });
        assert!(c.gaps.iter().all(|g| g.len() == 4));
        assert_eq!(c.witness_count, BigUint::from(4096u32));
        let one = cardinality_family(1, 10, 5, &full).unwrap();
        assert_eq!(one.witness_count, BigUint::one());
    }

    #[test]
    fn fillable_words_for_golden_mean() {
        let g = Sft::golden_mean(1.618).unwrap();
        // every golden-mean word extends on both sides by a 0
        assert_eq!(fillable_words(&g, 4), BigUint::from(8u32));
    }
}
