//! Closed-form dimension of the uniform and asymptotic recurrence sets,
//! the critical covering exponents behind the upper bound, and the
//! derivative diagnostics at the branch thresholds.

use serde::Serialize;
use thiserror::Error;

use crate::exec::{map_indices, map_slice, Execution};
use crate::layout::{golden_max, optimal_theta_lower};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimensionError {
    #[error("empty θ range at α = {alpha}: 1/(1−2α) exceeds 1/α")]
    EmptyRange { alpha: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// `3 − 2√2`, where the uniform dimension drops to 1.
pub fn first_threshold() -> f64 {
    3.0 - 2.0 * std::f64::consts::SQRT_2
}

/// `2 − √3`, where only the second derivative breaks.
pub fn second_threshold() -> f64 {
    2.0 - 3f64.sqrt()
}

pub const THIRD_THRESHOLD: f64 = 1.0 / 3.0;

/// The four branch formulas, each evaluated at `α` regardless of range.
pub fn dim_branches(alpha: f64) -> [f64; 4] {
    let r = (1.0 - alpha) / (1.0 + alpha);
    let s = 1.0 - (2.0 * alpha).sqrt();
    [2.0 * r * r, s * s / alpha, (1.0 - 3.0 * alpha) / (1.0 - alpha), 0.0]
}

/// Hausdorff dimension of the uniformly recurrent set.
pub fn dim_uniform(alpha: f64) -> f64 {
    let b = dim_branches(alpha);
    if alpha <= first_threshold() {
        b[0]
    } else if alpha <= second_threshold() {
        b[1]
    } else if alpha <= THIRD_THRESHOLD {
        b[2].max(0.0)
    } else {
        0.0
    }
}

/// Hausdorff dimension of the set returning at infinitely many times.
pub fn dim_asymptotic(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        2.0 / (alpha + 1.0)
    } else {
        1.0 / alpha
    }
}

/// A critical exponent; `saturated` marks evaluation at or next to a pole,
/// where `value` is `f64::MAX`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exponent {
    pub value: f64,
    pub saturated: bool,
}

impl Exponent {
    fn from_ratio(num: f64, den: f64) -> Self {
        let v = num / den;
        if den <= 0.0 || !v.is_finite() || v > 1e300 {
            Exponent { value: f64::MAX, saturated: true }
        } else {
            Exponent { value: v, saturated: false }
        }
    }
}

/// Covering exponent when the fixed blocks are the right blocks.
pub fn s0_right(alpha: f64, theta: f64) -> Exponent {
    Exponent::from_ratio(2.0 * ((1.0 - alpha) * theta - 1.0), (1.0 + alpha * theta) * (theta - 1.0))
}

/// Covering exponent when the fixed blocks are the left blocks.
pub fn s0_left(alpha: f64, theta: f64) -> Exponent {
    Exponent::from_ratio((1.0 - 2.0 * alpha) * theta - 1.0, alpha * theta * (theta - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Cover {
    Right,
    Left,
}

impl Cover {
    pub fn exponent(self, alpha: f64, theta: f64) -> Exponent {
        match self {
            Cover::Right => s0_right(alpha, theta),
            Cover::Left => s0_left(alpha, theta),
        }
    }

    /// Closed-form maximizer over the admissible `θ` range.
    pub fn closed_form_argmax(self, alpha: f64) -> f64 {
        match self {
            Cover::Right => 2.0 / (1.0 - alpha),
            Cover::Left => (1.0 / (1.0 - (2.0 * alpha).sqrt())).min(1.0 / alpha),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaOptimum {
    pub theta: f64,
    pub value: f64,
}

/// Admissible `θ` range `[1/(1−2α), 1/α]`.
pub fn theta_range(alpha: f64) -> Result<(f64, f64), DimensionError> {
    if !(alpha > 0.0) {
        return Err(DimensionError::InvalidParams(format!("α must be positive, got {alpha}")));
    }
    let lo = 1.0 / (1.0 - 2.0 * alpha);
    let hi = 1.0 / alpha;
    if alpha >= 0.5 || lo > hi * (1.0 + 1e-15) {
        return Err(DimensionError::EmptyRange { alpha });
    }
    Ok((lo, hi.max(lo)))
}

const SUP_GRID: usize = 1000;
const SUP_TOL: f64 = 1e-10;

/// Supremum of the chosen exponent over the admissible range: grid search,
/// then golden-section refinement to `1e-10` in `θ` around the best grid
/// point. Ties go to the smaller `θ`.
pub fn sup_over_theta(which: Cover, alpha: f64) -> Result<ThetaOptimum, DimensionError> {
    let (lo, hi) = theta_range(alpha)?;
    let f = |t: f64| {
        let e = which.exponent(alpha, t);
        if e.saturated { f64::NEG_INFINITY } else { e.value }
    };
    if hi - lo <= SUP_TOL {
        return Ok(ThetaOptimum { theta: lo, value: f(lo) });
    }
    let step = (hi - lo) / SUP_GRID as f64;
    let mut best = (lo, f(lo));
    for i in 1..=SUP_GRID {
        let t = if i == SUP_GRID { hi } else { lo + step * i as f64 };
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let t = golden_max(f, a, b, SUP_TOL);
    let mut out = ThetaOptimum { theta: t, value: f(t) };
    for cand in [best.0, hi] {
        let v = f(cand);
        if v > out.value {
            out = ThetaOptimum { theta: cand, value: v };
        }
    }
    Ok(out)
}

/// The better of the two covers.
pub fn upper_bound_dim(alpha: f64) -> Result<f64, DimensionError> {
    let r = sup_over_theta(Cover::Right, alpha)?;
    let l = sup_over_theta(Cover::Left, alpha)?;
    Ok(r.value.min(l.value))
}

/// Bookkeeping constants of the covering argument; `epsilon = 0` and unit
/// constants reproduce the limiting exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverParams {
    pub alpha: f64,
    pub theta_j: f64,
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Base of the metric, used for the cylinder-count logarithms.
    pub lambda: f64,
}

impl CoverParams {
    pub fn new(alpha: f64, theta_j: f64, lambda: f64) -> Self {
        CoverParams { alpha, theta_j, epsilon: 0.0, c1: 1.0, c2: 1.0, c3: 1.0, c4: 1.0, lambda }
    }

    pub fn validate(&self) -> Result<(), DimensionError> {
        let bad = |m: String| Err(DimensionError::InvalidParams(m));
        if !(self.alpha >= 0.0 && self.alpha <= 1.0 / 3.0) {
            return bad(format!("α = {} outside [0, 1/3]", self.alpha));
        }
        if !(self.theta_j > 1.0) {
            return bad(format!("θ_j = {} must exceed 1", self.theta_j));
        }
        let lo = 1.0 / (1.0 - 2.0 * self.alpha);
        let tol = 1e-12 * self.theta_j;
        if self.theta_j < lo - tol || self.alpha * self.theta_j > 1.0 + tol {
            return bad(format!("θ_j = {} outside [1/(1−2α), 1/α]", self.theta_j));
        }
        if !(self.epsilon >= 0.0) || (self.epsilon > 0.0 && self.epsilon >= self.alpha) {
            return bad(format!("ε = {} must lie in [0, α)", self.epsilon));
        }
        if [self.c1, self.c2, self.c3, self.c4].iter().any(|c| !(*c > 0.0)) {
            return bad("constants must be positive".into());
        }
        if !(self.lambda > 1.0) {
            return bad(format!("λ = {} must exceed 1", self.lambda));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverBudget {
    /// Free-digit budget of a right cover at scale `n`.
    pub p: f64,
    /// Free-digit budget of a left cover at scale `n`.
    pub q: f64,
    pub log_cylinder_count_right: f64,
    pub log_cylinder_count_left: f64,
}

pub fn cover_budget(p: &CoverParams, n: u64) -> Result<CoverBudget, DimensionError> {
    p.validate()?;
    if n < 2 {
        return Err(DimensionError::InvalidParams(format!("n = {n} must be at least 2")));
    }
    let (a, t, e) = (p.alpha, p.theta_j, p.epsilon);
    let nf = n as f64;
    let big_p = 1.0 + 2.0 * (1.0 + a * t + 2.0 * e) * nf - 2.0 * (a - e) * (t + t / (t - 1.0) - p.c3 * e) * nf;
    let big_q = 1.0 + (1.0 - 2.0 * a - 2.0 * a / (t + 2.0 * e - 1.0) + p.c4 * e) * nf;
    let ln_n = nf.ln();
    let overhead = (p.c2 * ln_n).ln() + p.c2 * ln_n * ln_n;
    let ln_l = p.lambda.ln();
    Ok(CoverBudget {
        p: big_p,
        q: big_q,
        log_cylinder_count_right: overhead + big_p * ln_l,
        log_cylinder_count_left: overhead + big_q * ln_l,
    })
}

/// One row of the dimension table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimRow {
    pub alpha: f64,
    pub dim_uniform: f64,
    pub dim_asymptotic: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Lower and upper machinery at one `α`. At `α = 0` the upper bound is the
/// right-cover value at its maximizer `θ = 2`; past `1/3` both are 0.
pub fn dim_row(alpha: f64) -> DimRow {
    let lower = optimal_theta_lower(alpha).dim_lower;
    let upper = if alpha <= 0.0 {
        s0_right(0.0, 2.0).value
    } else if alpha > THIRD_THRESHOLD {
        0.0
    } else {
        upper_bound_dim(alpha).unwrap_or(0.0)
    };
    DimRow { alpha, dim_uniform: dim_uniform(alpha), dim_asymptotic: dim_asymptotic(alpha), lower, upper }
}

/// Rows for `α = 0, step, 2·step, …` up to `alpha_max`.
pub fn dim_grid(step: f64, alpha_max: f64, exec: Execution) -> Result<Vec<DimRow>, DimensionError> {
    if !(step > 0.0) || !(alpha_max >= 0.0) {
        return Err(DimensionError::InvalidParams(format!("grid step {step} must be positive")));
    }
    let count = (alpha_max / step + 1e-9).floor() as usize + 1;
    let mut alphas: Vec<f64> = (0..count).map(|i| i as f64 * step).collect();
    // the thresholds are where the curve is interesting, so they are always rows
    for t in [first_threshold(), second_threshold()] {
        if t <= alpha_max && alphas.iter().all(|a| (a - t).abs() > 1e-12) {
            alphas.push(t);
        }
    }
    alphas.sort_by(f64::total_cmp);
    Ok(map_slice(exec, &alphas, |&a| dim_row(a)))
}

/// One-sided derivative estimates at a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kink {
    pub alpha: f64,
    pub first_left: f64,
    pub first_right: f64,
    pub second_left: f64,
    pub second_right: f64,
    /// Discretization error estimates for the two derivative orders.
    pub first_error: f64,
    pub second_error: f64,
    pub first_jump: bool,
    pub second_jump: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionProfile {
    pub alpha_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Central differences at interior grid points (0 at the ends).
    pub first_derivative: Vec<f64>,
    pub second_derivative: Vec<f64>,
    pub thresholds: [f64; 3],
    pub kinks: Vec<Kink>,
}

impl DimensionProfile {
    pub fn kink_at(&self, alpha: f64) -> Option<&Kink> {
        self.kinks.iter().find(|k| (k.alpha - alpha).abs() < 1e-12)
    }
}

/// Second-order one-sided stencils; `dir` is −1 for the left side.
fn one_sided(f: &dyn Fn(f64) -> f64, t: f64, h: f64, dir: f64) -> (f64, f64) {
    let g = |j: f64| f(t + dir * j * h);
    let d1 = dir * (3.0 * g(0.0) - 4.0 * g(1.0) + g(2.0)) / (-2.0 * h);
    let d2 = (2.0 * g(0.0) - 5.0 * g(1.0) + 4.0 * g(2.0) - g(3.0)) / (h * h);
    (d1, d2)
}

fn analyze_threshold(t: f64, h: f64) -> Kink {
    // each side evaluates its own branch so that the stencil never
    // straddles the threshold
    let side = |dir: f64| {
        let branch = if dir < 0.0 { dim_uniform(t - h) } else { dim_uniform(t + h) };
        let idx = [0usize, 1, 2, 3]
            .into_iter()
            .find(|&i| {
                let b = dim_branches(t + dir * h)[i];
                (b - branch).abs() < 1e-15 * branch.abs().max(1.0)
            })
            .unwrap_or(3);
        let f = move |a: f64| if idx == 3 { 0.0 } else { dim_branches(a)[idx] };
        let (d1, d2) = one_sided(&f, t, h, dir);
        let (e1, e2) = one_sided(&f, t, 2.0 * h, dir);
        let scale = f(t).abs().max(1.0);
        let round1 = 8.0 * f64::EPSILON * scale / h;
        let round2 = 24.0 * f64::EPSILON * scale / (h * h);
        (d1, d2, (d1 - e1).abs().max(round1), (d2 - e2).abs().max(round2))
    };
    let (l1, l2, le1, le2) = side(-1.0);
    let (r1, r2, re1, re2) = side(1.0);
    let first_error = le1.max(re1);
    let second_error = le2.max(re2);
    Kink {
        alpha: t,
        first_left: l1,
        first_right: r1,
        second_left: l2,
        second_right: r2,
        first_error,
        second_error,
        first_jump: (l1 - r1).abs() > 10.0 * first_error,
        second_jump: (l2 - r2).abs() > 10.0 * second_error,
    }
}

/// Derivatives of the uniform dimension over `(0, 1/3)` and one-sided
/// analysis at each branch threshold.
pub fn transition_report(grid_step: f64, exec: Execution) -> Result<DimensionProfile, DimensionError> {
    if !(grid_step > 0.0 && grid_step <= 1e-3) {
        return Err(DimensionError::InvalidParams(format!("grid step {grid_step} must lie in (0, 1e-3]")));
    }
    let n = (THIRD_THRESHOLD / grid_step).floor() as usize;
    let alpha_grid: Vec<f64> = (1..n).map(|i| i as f64 * grid_step).collect();
    let values: Vec<f64> = alpha_grid.iter().map(|&a| dim_uniform(a)).collect();
    let h = grid_step;
    let derivs = map_indices(exec, alpha_grid.len(), |i| {
        let a = alpha_grid[i];
        let (fm, f0, fp) = (dim_uniform(a - h), values[i], dim_uniform(a + h));
        ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
    });
    let (first_derivative, second_derivative) = derivs.into_iter().unzip();
    let thresholds = [first_threshold(), second_threshold(), THIRD_THRESHOLD];
    let kinks = thresholds.iter().map(|&t| analyze_threshold(t, h)).collect();
    Ok(DimensionProfile { alpha_grid, values, first_derivative, second_derivative, thresholds, kinks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_examples() {
        assert_eq!(dim_uniform(0.0), 2.0);
        let t1 = first_threshold();
        let b = dim_branches(t1);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12);
        let t2 = second_threshold();
        let b = dim_branches(t2);
        assert!((b[1] - t2).abs() < 1e-12 && (b[2] - t2).abs() < 1e-12);
        assert!(dim_uniform(THIRD_THRESHOLD).abs() < 1e-15);
        assert_eq!(dim_uniform(0.5), 0.0);
    }

    #[test]
    fn asymptotic_examples() {
        assert!((dim_asymptotic(0.5) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(dim_asymptotic(1.0), 1.0);
        assert_eq!(dim_asymptotic(2.0), 0.5);
    }

    #[test]
    fn exponent_examples() {
        assert!((s0_right(0.1, 20.0 / 9.0).value - 1.338843).abs() < 1e-6);
        assert!((s0_right(0.25, 8.0 / 3.0).value - 0.72).abs() < 1e-12);
        assert!(s0_right(0.1, 1.0).saturated);
        assert!((s0_left(0.25, 3.414214).value - 0.343146).abs() < 1e-6);
        assert!((s0_left(0.3, 10.0 / 3.0).value - 0.142857).abs() < 1e-6);
        assert!(s0_left(0.2, 1.0 / 0.6).value.abs() < 1e-15);
    }

    #[test]
    fn suprema_examples() {
        let r = sup_over_theta(Cover::Right, 0.1).unwrap();
        assert!((r.theta - 2.0 / 0.9).abs() < 1e-6 && (r.value - 1.338843).abs() < 1e-6);
        let l = sup_over_theta(Cover::Left, 0.25).unwrap();
        assert!((l.theta - 3.414214).abs() < 1e-6 && (l.value - 0.343146).abs() < 1e-6);
        let l = sup_over_theta(Cover::Left, 0.3).unwrap();
        assert!((l.theta - 10.0 / 3.0).abs() < 1e-9 && (l.value - 1.0 / 7.0).abs() < 1e-9);
        assert!(matches!(sup_over_theta(Cover::Right, 0.4), Err(DimensionError::EmptyRange { .. })));
        let p = sup_over_theta(Cover::Left, 1.0 / 3.0).unwrap();
        assert!(p.value.abs() < 1e-12);
    }

    #[test]
    fn upper_bound_examples() {
        assert!((upper_bound_dim(0.1).unwrap() - 1.338843).abs() < 1e-6);
        assert!((upper_bound_dim(0.25).unwrap() - 0.343146).abs() < 1e-6);
        assert!((upper_bound_dim(first_threshold()).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn budget_examples() {
        let b = cover_budget(&CoverParams::new(0.1, 20.0 / 9.0, 2.618), 1000).unwrap();
        let coeff = (b.p - 1.0) / 1000.0;
        assert!((coeff - 1.636363).abs() < 1e-5);
        assert!((coeff / (1.0 + 0.1 * 20.0 / 9.0) - s0_right(0.1, 20.0 / 9.0).value).abs() < 1e-12);
        let b = cover_budget(&CoverParams::new(0.25, 3.414214, 2.618), 1000).unwrap();
        let coeff = (b.q - 1.0) / 1000.0;
        assert!((coeff - 0.292893).abs() < 1e-6);
        assert!((coeff / (0.25 * 3.414214) - 0.343146).abs() < 1e-6);
        let b = cover_budget(&CoverParams::new(0.0, 2.0, 2.618), 50).unwrap();
        assert!((b.p - 101.0).abs() < 1e-12);
        assert!(cover_budget(&CoverParams::new(0.1, 20.0, 2.618), 10).is_err());
    }

    #[test]
    fn transitions() {
        let p = transition_report(1e-5, Execution::Sequential).unwrap();
        let k1 = p.kink_at(first_threshold()).unwrap();
        assert!(k1.first_jump, "{k1:?}");
        let k2 = p.kink_at(second_threshold()).unwrap();
        assert!(!k2.first_jump && k2.second_jump, "{k2:?}");
    }

    proptest! {
        #[test]
        fn right_identity(alpha in 0.0f64..0.33) {
            let v = s0_right(alpha, 2.0 / (1.0 - alpha)).value;
            prop_assert!((v - 2.0 * ((1.0 - alpha) / (1.0 + alpha)).powi(2)).abs() < 1e-12);
        }

        #[test]
        fn left_identity(alpha in 1e-4f64..0.2679) {
            let s = 1.0 - (2.0 * alpha).sqrt();
            let v = s0_left(alpha, 1.0 / s).value;
            prop_assert!((v - s * s / alpha).abs() < 1e-10);
        }

        #[test]
        fn uniform_below_asymptotic(alpha in 0.0f64..=1.0 / 3.0) {
            prop_assert!(dim_uniform(alpha) <= dim_asymptotic(alpha) + 1e-15);
        }
    }
}
