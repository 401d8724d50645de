//! Markov partitions of the torus by eigen-aligned parallelograms, the
//! transition matrix they induce, its spectral radius, and the geometric
//! constants that compare cylinder sizes with balls.
//!
//! All geometry is done in eigencoordinates `(u, v)`, where an ambient
//! point is `u·e_u + v·e_s` for the (unnormalized) unstable and stable
//! eigenvectors. Partition elements become axis-aligned rectangles there,
//! `A` acts as `diag(λ, λ̄)`, and every intersection or containment test is
//! an exact comparison in `Q(λ)`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{AlgebraError, QuadField, QuadNum, ToralAutomorphism};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("malformed partition at elements ({}, {}): {reason}", pair.0, pair.1)]
    MalformedPartition { pair: (usize, usize), reason: String },
    #[error("unknown catalog entry `{0}` (known: cat, trace-four)")]
    UnknownCatalogEntry(String),
    #[error("power iteration did not converge after {iterations} steps: {diagnostics}")]
    NonConvergence { iterations: usize, diagnostics: String },
    #[error("transition matrix is identically zero")]
    ZeroMatrix,
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),
    #[error("cannot read partition file: {0}")]
    Parse(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Closed interval `[lo, hi]` of field elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: QuadNum,
    pub hi: QuadNum,
}

impl Interval {
    pub fn new(a: QuadNum, b: QuadNum) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn length(&self) -> QuadNum {
        &self.hi - &self.lo
    }

    /// Image under `t ↦ k·t`; flips when `k < 0`.
    pub fn scale(&self, k: &QuadNum) -> Interval {
        Interval::new(k * &self.lo, k * &self.hi)
    }

    pub fn shift(&self, by: &QuadNum) -> Interval {
        Interval { lo: &self.lo + by, hi: &self.hi + by }
    }

    /// Whether the open intervals meet.
    pub fn interiors_meet(&self, other: &Interval) -> bool {
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        lo < hi
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        (lo < hi).then_some(Interval { lo, hi })
    }

    /// Position of `t` relative to the interval: -1 outside, 0 on an
    /// endpoint, 1 strictly inside.
    pub fn locate(&self, t: &QuadNum) -> i32 {
        let a = (t - &self.lo).sign();
        let b = (&self.hi - t).sign();
        if a < 0 || b < 0 {
            -1
        } else if a == 0 || b == 0 {
            0
        } else {
            1
        }
    }

    fn to_f64(&self) -> (f64, f64) {
        (self.lo.to_f64(), self.hi.to_f64())
    }
}

/// Axis-aligned rectangle in eigencoordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenRect {
    pub u: Interval,
    pub v: Interval,
}

impl EigenRect {
    pub fn interiors_meet(&self, other: &EigenRect) -> bool {
        self.u.interiors_meet(&other.u) && self.v.interiors_meet(&other.v)
    }

    pub fn intersect(&self, other: &EigenRect) -> Option<EigenRect> {
        Some(EigenRect { u: self.u.intersect(&other.u)?, v: self.v.intersect(&other.v)? })
    }

    pub fn translate(&self, by: &(QuadNum, QuadNum)) -> EigenRect {
        EigenRect { u: self.u.shift(&by.0), v: self.v.shift(&by.1) }
    }
}

/// Eigenbasis of a hyperbolic automorphism together with the integer
/// lattice written in eigencoordinates.
#[derive(Clone, Debug)]
pub struct EigenFrame {
    pub field: QuadField,
    pub lambda: QuadNum,
    pub lambda_f64: f64,
    /// Multiplier on the stable coordinate, `t − λ`.
    pub stable: QuadNum,
    pub lambda_inv: QuadNum,
    pub stable_inv: QuadNum,
    pub e_u: [QuadNum; 2],
    pub e_s: [QuadNum; 2],
    /// `det [e_u e_s]`; the ambient area of a unit eigen-square.
    pub det: QuadNum,
    inv: [QuadNum; 4],
    /// Eigencoordinates of `(1, 0)` and `(0, 1)`.
    pub g1: (QuadNum, QuadNum),
    pub g2: (QuadNum, QuadNum),
    e_u_f: [f64; 2],
    e_s_f: [f64; 2],
}

impl EigenFrame {
    pub fn new(a: &ToralAutomorphism) -> Self {
        let s = a.spectrum();
        let det = &s.unstable_dir[0] * &s.stable_dir[1] - &s.stable_dir[0] * &s.unstable_dir[1];
        let inv = [
            &s.stable_dir[1] / &det,
            -(&s.stable_dir[0] / &det),
            -(&s.unstable_dir[1] / &det),
            &s.unstable_dir[0] / &det,
        ];
        let g1 = (inv[0].clone(), inv[2].clone());
        let g2 = (inv[1].clone(), inv[3].clone());
        let stable_inv = s.stable_eigenvalue.inverse().expect("nonzero eigenvalue");
        EigenFrame {
            field: s.field,
            e_u_f: [s.unstable_dir[0].to_f64(), s.unstable_dir[1].to_f64()],
            e_s_f: [s.stable_dir[0].to_f64(), s.stable_dir[1].to_f64()],
            lambda_f64: s.lambda_f64,
            stable: s.stable_eigenvalue,
            lambda_inv: s.lambda_inv,
            lambda: s.lambda,
            stable_inv,
            e_u: s.unstable_dir,
            e_s: s.stable_dir,
            det,
            inv,
            g1,
            g2,
        }
    }

    pub fn to_eigen(&self, x: &QuadNum, y: &QuadNum) -> (QuadNum, QuadNum) {
        (&self.inv[0] * x + &self.inv[1] * y, &self.inv[2] * x + &self.inv[3] * y)
    }

    pub fn to_ambient(&self, u: &QuadNum, v: &QuadNum) -> (QuadNum, QuadNum) {
        (&self.e_u[0] * u + &self.e_s[0] * v, &self.e_u[1] * u + &self.e_s[1] * v)
    }

    pub fn to_ambient_f64(&self, u: f64, v: f64) -> (f64, f64) {
        (self.e_u_f[0] * u + self.e_s_f[0] * v, self.e_u_f[1] * u + self.e_s_f[1] * v)
    }

    /// Eigencoordinates of the integer vector `(m, n)`.
    pub fn lattice(&self, m: i64, n: i64) -> (QuadNum, QuadNum) {
        let fm = self.field.integer(m);
        let fn_ = self.field.integer(n);
        (&fm * &self.g1.0 + &fn_ * &self.g2.0, &fm * &self.g1.1 + &fn_ * &self.g2.1)
    }

    /// `A(R)`.
    pub fn forward(&self, r: &EigenRect) -> EigenRect {
        EigenRect { u: r.u.scale(&self.lambda), v: r.v.scale(&self.stable) }
    }

    /// `A⁻¹(R)`.
    pub fn backward(&self, r: &EigenRect) -> EigenRect {
        EigenRect { u: r.u.scale(&self.lambda_inv), v: r.v.scale(&self.stable_inv) }
    }

    /// Ambient bounding box `(min_x, max_x, min_y, max_y)` in floating point.
    pub fn bbox(&self, r: &EigenRect) -> [f64; 4] {
        let (u0, u1) = r.u.to_f64();
        let (v0, v1) = r.v.to_f64();
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for (u, v) in [(u0, v0), (u0, v1), (u1, v0), (u1, v1)] {
            let (x, y) = self.to_ambient_f64(u, v);
            b[0] = b[0].min(x);
            b[1] = b[1].max(x);
            b[2] = b[2].min(y);
            b[3] = b[3].max(y);
        }
        b
    }

    /// Integer vectors `w` for which `B + w` might meet `A`; a superset
    /// chosen from padded floating bounding boxes, refined exactly by the
    /// caller.
    pub fn translate_candidates(&self, a: &EigenRect, b: &EigenRect) -> Vec<(i64, i64)> {
        let ba = self.bbox(a);
        let bb = self.bbox(b);
        let pad = 1e-6 * (1.0 + ba.iter().chain(bb.iter()).fold(0.0f64, |m, v| m.max(v.abs())));
        let m_lo = (ba[0] - bb[1] - pad).floor() as i64;
        let m_hi = (ba[1] - bb[0] + pad).ceil() as i64;
        let n_lo = (ba[2] - bb[3] - pad).floor() as i64;
        let n_hi = (ba[3] - bb[2] + pad).ceil() as i64;
        let mut out = Vec::new();
        for m in m_lo..=m_hi {
            for n in n_lo..=n_hi {
                out.push((m, n));
            }
        }
        out
    }

    /// Integer vectors `w` with `int A ∩ int (B + w) ≠ ∅`, in lexicographic order.
    pub fn meeting_translates(&self, a: &EigenRect, b: &EigenRect) -> Vec<(i64, i64)> {
        self.translate_candidates(a, b)
            .into_iter()
            .filter(|&(m, n)| a.interiors_meet(&b.translate(&self.lattice(m, n))))
            .collect()
    }

    /// Euclidean length of the longer diagonal of `R` in ambient coordinates.
    pub fn diameter(&self, r: &EigenRect) -> f64 {
        let du = r.u.length().to_f64();
        let dv = r.v.length().to_f64();
        let (x1, y1) = self.to_ambient_f64(du, dv);
        let (x2, y2) = self.to_ambient_f64(du, -dv);
        x1.hypot(y1).max(x2.hypot(y2))
    }

    /// Ambient corners of `R`.
    pub fn corners_f64(&self, r: &EigenRect) -> [(f64, f64); 4] {
        let (u0, u1) = r.u.to_f64();
        let (v0, v1) = r.v.to_f64();
        [
            self.to_ambient_f64(u0, v0),
            self.to_ambient_f64(u0, v1),
            self.to_ambient_f64(u1, v0),
            self.to_ambient_f64(u1, v1),
        ]
    }

    pub fn unstable_norm(&self) -> f64 {
        self.e_u_f[0].hypot(self.e_u_f[1])
    }

    pub fn stable_norm(&self) -> f64 {
        self.e_s_f[0].hypot(self.e_s_f[1])
    }
}

/// A parallelogram with sides along the eigendirections: the ambient set
/// `origin + [0, u_extent]·e_u + [0, s_extent]·e_s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parallelogram {
    pub origin: [QuadNum; 2],
    pub u_extent: QuadNum,
    pub s_extent: QuadNum,
}

impl Parallelogram {
    pub fn to_rect(&self, frame: &EigenFrame) -> EigenRect {
        let (u0, v0) = frame.to_eigen(&self.origin[0], &self.origin[1]);
        EigenRect {
            u: Interval::new(u0.clone(), &u0 + &self.u_extent),
            v: Interval::new(v0.clone(), &v0 + &self.s_extent),
        }
    }

    pub fn from_rect(r: &EigenRect, frame: &EigenFrame) -> Self {
        let (x, y) = frame.to_ambient(&r.u.lo, &r.v.lo);
        Parallelogram { origin: [x, y], u_extent: r.u.length(), s_extent: r.v.length() }
    }
}

#[derive(Clone, Debug)]
pub struct MarkovPartition {
    automorphism: ToralAutomorphism,
    elements: Vec<Parallelogram>,
    frame: EigenFrame,
    rects: Vec<EigenRect>,
}

impl MarkovPartition {
    /// Wraps elements without validating them; see [`validate_partition`].
    pub fn new(automorphism: ToralAutomorphism, elements: Vec<Parallelogram>) -> Result<Self, PartitionError> {
        let frame = EigenFrame::new(&automorphism);
        for e in &elements {
            let fields = [&e.origin[0], &e.origin[1], &e.u_extent, &e.s_extent];
            if fields.iter().any(|q| q.field() != frame.field) {
                return Err(PartitionError::Parse(format!(
                    "element coordinates must live in the field of {automorphism}"
                )));
            }
        }
        let rects = elements.iter().map(|e| e.to_rect(&frame)).collect();
        Ok(Self { automorphism, elements, frame, rects })
    }

    /// Builds a partition directly from eigen-rectangles.
    pub fn from_rects(automorphism: ToralAutomorphism, rects: Vec<EigenRect>) -> Self {
        let frame = EigenFrame::new(&automorphism);
        let elements = rects.iter().map(|r| Parallelogram::from_rect(r, &frame)).collect();
        Self { automorphism, elements, frame, rects }
    }

    pub fn automorphism(&self) -> &ToralAutomorphism {
        &self.automorphism
    }

    pub fn elements(&self) -> &[Parallelogram] {
        &self.elements
    }

    pub fn rects(&self) -> &[EigenRect] {
        &self.rects
    }

    pub fn frame(&self) -> &EigenFrame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Ambient area of element `i`.
    pub fn area(&self, i: usize) -> QuadNum {
        (&self.rects[i].u.length() * &self.rects[i].v.length() * &self.frame.det).abs()
    }

    /// Same partition with elements reordered: new element `k` is old `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let rects = perm.iter().map(|&i| self.rects[i].clone()).collect();
        Self::from_rects(self.automorphism, rects)
    }

    fn check_extents(&self) -> Result<(), PartitionError> {
        if self.elements.is_empty() {
            return Err(PartitionError::MalformedPartition { pair: (0, 0), reason: "no elements".into() });
        }
        for (i, e) in self.elements.iter().enumerate() {
            if e.u_extent.sign() <= 0 || e.s_extent.sign() <= 0 {
                return Err(PartitionError::MalformedPartition {
                    pair: (i, i),
                    reason: "extents must be strictly positive".into(),
                });
            }
        }
        Ok(())
    }

    /// First pair `(i, j)` whose interiors overlap modulo the lattice
    /// (including an element with a nonzero translate of itself).
    fn first_overlap(&self) -> Option<(usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for j in i..n {
                let hits = self.frame.meeting_translates(&self.rects[i], &self.rects[j]);
                if hits.iter().any(|&w| i != j || w != (0, 0)) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Number of separate strips in which `A(P_i)` meets `P_j`.
    pub fn crossing_counts(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let images: Vec<EigenRect> = self.rects.iter().map(|r| self.frame.forward(r)).collect();
        (0..n)
            .map(|i| (0..n).map(|j| self.frame.meeting_translates(&images[i], &self.rects[j]).len()).collect())
            .collect()
    }

    /// The common refinement with the preimage partition: elements are the
    /// strips `P_i ∩ A⁻¹(P_j + w)`, ordered by `i`, then `j`, then `w`.
    pub fn refine(&self) -> MarkovPartition {
        let mut rects = Vec::new();
        for ri in &self.rects {
            let img = self.frame.forward(ri);
            for rj in &self.rects {
                for w in self.frame.meeting_translates(&img, rj) {
                    let target = rj.translate(&self.frame.lattice(w.0, w.1));
                    let piece = img.intersect(&target).expect("translates were filtered for overlap");
                    rects.push(self.frame.backward(&piece));
                }
            }
        }
        MarkovPartition::from_rects(self.automorphism, rects)
    }
}

/// Outcome of a single validation check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub detail: String,
    pub pair: Option<(usize, usize)>,
}

impl CheckOutcome {
    fn pass(detail: impl Into<String>) -> Self {
        CheckOutcome { passed: true, detail: detail.into(), pair: None }
    }

    fn fail(detail: impl Into<String>, pair: Option<(usize, usize)>) -> Self {
        CheckOutcome { passed: false, detail: detail.into(), pair }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub cover: CheckOutcome,
    pub disjoint: CheckOutcome,
    pub markov: CheckOutcome,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.cover.passed && self.disjoint.passed && self.markov.passed
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, c) in [("cover", &self.cover), ("disjoint", &self.disjoint), ("markov", &self.markov)] {
            let tag = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "{name}: {tag} ({})", c.detail)?;
        }
        Ok(())
    }
}

pub fn validate_partition(p: &MarkovPartition) -> Result<ValidationReport, PartitionError> {
    p.check_extents()?;
    let frame = p.frame();
    let total = (0..p.len()).fold(frame.field.zero(), |acc, i| &acc + &p.area(i));
    let cover = if total == frame.field.one() {
        CheckOutcome::pass("areas sum to 1")
    } else {
        CheckOutcome::fail(format!("areas sum to {:.12}", total.to_f64()), None)
    };
    let disjoint = match p.first_overlap() {
        None => CheckOutcome::pass("interiors pairwise disjoint"),
        Some(pair) => CheckOutcome::fail(format!("interiors of {} and {} overlap", pair.0, pair.1), Some(pair)),
    };
    let mut markov = CheckOutcome::pass("images cross fully along the unstable direction");
    'outer: for (i, ri) in p.rects().iter().enumerate() {
        let img = frame.forward(ri);
        for (j, rj) in p.rects().iter().enumerate() {
            for w in frame.meeting_translates(&img, rj) {
                let target = rj.translate(&frame.lattice(w.0, w.1));
                if !img.u.contains(&target.u) {
                    markov = CheckOutcome::fail(
                        format!("image of {i} does not cross {j} fully along the unstable direction"),
                        Some((i, j)),
                    );
                    break 'outer;
                }
                if !target.v.contains(&img.v) {
                    markov = CheckOutcome::fail(
                        format!("image of {i} is not contained in {j} along the stable direction"),
                        Some((i, j)),
                    );
                    break 'outer;
                }
            }
        }
    }
    Ok(ValidationReport { cover, disjoint, markov })
}

/// 0/1 transition matrix of a subshift of finite type.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransitionMatrix {
    rows: Vec<Vec<u8>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self, PartitionError> {
        let d = rows.len();
        if d == 0 {
            return Err(PartitionError::InvalidMatrix("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(PartitionError::InvalidMatrix("matrix must be square".into()));
        }
        if rows.iter().flatten().any(|&e| e > 1) {
            return Err(PartitionError::InvalidMatrix("entries must be 0 or 1".into()));
        }
        Ok(Self { rows })
    }

    pub fn full(d: usize) -> Self {
        Self { rows: vec![vec![1; d]; d] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i][j] == 1
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.rows[i].iter().all(|&e| e == 0)).collect()
    }

    pub fn zero_columns(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.rows.iter().all(|r| r[j] == 0)).collect()
    }

    fn reachability(&self) -> Vec<Vec<bool>> {
        let d = self.dim();
        let mut r: Vec<Vec<bool>> = (0..d).map(|i| (0..d).map(|j| i == j || self.get(i, j)).collect()).collect();
        for k in 0..d {
            for i in 0..d {
                if r[i][k] {
                    for j in 0..d {
                        if r[k][j] {
                            r[i][j] = true;
                        }
                    }
                }
            }
        }
        r
    }

    /// Strongly connected components, each sorted, in order of first index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let r = self.reachability();
        let d = self.dim();
        let mut seen = vec![false; d];
        let mut out = Vec::new();
        for i in 0..d {
            if seen[i] {
                continue;
            }
            let comp: Vec<usize> = (0..d).filter(|&j| r[i][j] && r[j][i]).collect();
            for &j in &comp {
                seen[j] = true;
            }
            out.push(comp);
        }
        out
    }

    pub fn is_irreducible(&self) -> bool {
        self.components().len() == 1
    }

    fn submatrix(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        idx.iter().map(|&i| idx.iter().map(|&j| self.rows[i][j] as f64).collect()).collect()
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|e| e.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Entry `(i, j)` is 1 when the interiors of `A(P_i)` and `P_j` meet modulo
/// the lattice. Elements must have positive extents and disjoint interiors.
pub fn transition_matrix(p: &MarkovPartition) -> Result<TransitionMatrix, PartitionError> {
    p.check_extents()?;
    if let Some(pair) = p.first_overlap() {
        return Err(PartitionError::MalformedPartition { pair, reason: "interiors overlap".into() });
    }
    let rows = p
        .crossing_counts()
        .into_iter()
        .map(|r| r.into_iter().map(|c| u8::from(c > 0)).collect())
        .collect();
    TransitionMatrix::new(rows)
}

const POWER_TOL: f64 = 1e-12;
const POWER_CAP: usize = 100_000;

/// Perron root of an irreducible nonnegative matrix via power iteration on
/// `M + I`, stopping when the Collatz–Wielandt bounds meet.
fn perron_root(m: &[Vec<f64>]) -> Result<f64, PartitionError> {
    let d = m.len();
    let mut x = vec![1.0; d];
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    for _ in 0..POWER_CAP {
        let y: Vec<f64> = (0..d).map(|i| x[i] + (0..d).map(|j| m[i][j] * x[j]).sum::<f64>()).collect();
        lower = (0..d).map(|i| y[i] / x[i]).fold(f64::INFINITY, f64::min);
        upper = (0..d).map(|i| y[i] / x[i]).fold(0.0, f64::max);
        if upper - lower <= POWER_TOL * upper {
            return Ok(0.5 * (lower + upper) - 1.0);
        }
        let norm = y.iter().cloned().fold(0.0, f64::max);
        x = y.into_iter().map(|v| v / norm).collect();
    }
    Err(PartitionError::NonConvergence {
        iterations: POWER_CAP,
        diagnostics: format!("block of size {d}: bounds [{lower}, {upper}] on the shifted root"),
    })
}

/// Coefficients `c_0..c_d` of `det(xI − M)` (so `c_d = 1`), exact over the integers.
fn characteristic_polynomial(g: &TransitionMatrix) -> Vec<i128> {
    let d = g.dim();
    let a: Vec<Vec<i128>> = g.rows().iter().map(|r| r.iter().map(|&e| e as i128).collect()).collect();
    let mut coeffs = vec![0i128; d + 1];
    coeffs[d] = 1;
    let mut mk = vec![vec![0i128; d]; d];
    let mut c = 1i128;
    for k in 1..=d {
        // mk = A·(mk_prev) + c_{d-k+1}·I
        let mut next = vec![vec![0i128; d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut s: i128 = (0..d).map(|l| a[i][l] * mk[l][j]).sum();
                if i == j {
                    s += c;
                }
                next[i][j] = s;
            }
        }
        mk = next;
        let am: i128 = (0..d).map(|i| (0..d).map(|l| a[i][l] * mk[l][i]).sum::<i128>()).sum();
        c = -am / k as i128;
        coeffs[d - k] = c;
    }
    coeffs
}

fn largest_real_root(coeffs: &[i128]) -> f64 {
    let bound = 1.0 + coeffs.iter().map(|&c| (c as f64).abs()).fold(0.0, f64::max);
    let eval = |x: f64| -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c as f64;
        }
        (p, dp)
    };
    let mut x = bound;
    for _ in 0..10_000 {
        let (p, dp) = eval(x);
        if dp == 0.0 {
            break;
        }
        let next = x - p / dp;
        if !(next < x) {
            break;
        }
        x = next;
    }
    x
}

/// Largest modulus of an eigenvalue of `G`, taken over the irreducible
/// diagonal blocks. For `d ≤ 4` the result is cross-checked against the
/// largest real root of the characteristic polynomial.
pub fn spectral_radius(g: &TransitionMatrix) -> Result<f64, PartitionError> {
    if g.rows().iter().flatten().all(|&e| e == 0) {
        return Err(PartitionError::ZeroMatrix);
    }
    let mut rho = 0.0f64;
    for comp in g.components() {
        let sub = g.submatrix(&comp);
        if sub.iter().flatten().all(|&e| e == 0.0) {
            continue;
        }
        rho = rho.max(perron_root(&sub)?);
    }
    if g.dim() <= 4 {
        let check = largest_real_root(&characteristic_polynomial(g));
        if (check - rho).abs() > 1e-6 * rho.max(1.0) {
            return Err(PartitionError::NonConvergence {
                iterations: POWER_CAP,
                diagnostics: format!(
                    "power iteration gave {rho} but the characteristic polynomial root is {check}; components {:?}",
                    g.components()
                ),
            });
        }
    }
    Ok(rho)
}

/// Geometric constants governing cylinder and ball comparisons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryConstants {
    pub c_min: f64,
    pub c_max: f64,
    pub b_min: f64,
    pub h_min: f64,
    pub k0: u64,
    /// Lipschitz constant of the coding map; equals `c_max`.
    pub lipschitz: f64,
}

/// Raw measurements of one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementMetrics {
    pub diameter: f64,
    pub side_u: f64,
    pub side_s: f64,
    pub area: f64,
}

impl GeometryConstants {
    pub fn from_metrics(metrics: &[ElementMetrics]) -> Self {
        let c_min = metrics.iter().map(|m| m.diameter).fold(f64::INFINITY, f64::min);
        let c_max = metrics.iter().map(|m| m.diameter).fold(0.0, f64::max);
        let b_min = metrics.iter().map(|m| m.side_u.min(m.side_s)).fold(f64::INFINITY, f64::min);
        let h_min = metrics
            .iter()
            .map(|m| (m.area / m.side_u).min(m.area / m.side_s))
            .fold(f64::INFINITY, f64::min);
        Self::from_raw(c_min, c_max, b_min, h_min)
    }

    pub fn from_raw(c_min: f64, c_max: f64, b_min: f64, h_min: f64) -> Self {
        let k = (2.0 / h_min).ceil() as u64 + 1;
        GeometryConstants { c_min, c_max, b_min, h_min, k0: k * k, lipschitz: c_max }
    }
}

pub fn element_metrics(p: &MarkovPartition) -> Vec<ElementMetrics> {
    let f = p.frame();
    (0..p.len())
        .map(|i| {
            let r = &p.rects()[i];
            ElementMetrics {
                diameter: f.diameter(r),
                side_u: r.u.length().to_f64() * f.unstable_norm(),
                side_s: r.v.length().to_f64() * f.stable_norm(),
                area: p.area(i).to_f64(),
            }
        })
        .collect()
}

pub fn geometry_constants(p: &MarkovPartition) -> GeometryConstants {
    GeometryConstants::from_metrics(&element_metrics(p))
}

/// The two-rectangle partition built from a lattice basis whose
/// eigencoordinates have sign pattern `(+, −)`, `(+, +)`; `None` when no
/// signed choice of the standard basis has that pattern.
pub fn two_rectangle_partition(a: &ToralAutomorphism) -> Option<MarkovPartition> {
    let frame = EigenFrame::new(a);
    let basis = [frame.lattice(1, 0), frame.lattice(0, 1)];
    for (first, second) in [(0usize, 1usize), (1, 0)] {
        for s1 in [1i64, -1] {
            for s2 in [1i64, -1] {
                let k1 = frame.field.integer(s1);
                let k2 = frame.field.integer(s2);
                let g1 = (&basis[first].0 * &k1, &basis[first].1 * &k1);
                let g2 = (&basis[second].0 * &k2, &basis[second].1 * &k2);
                if g1.0.sign() > 0 && g1.1.sign() < 0 && g2.0.sign() > 0 && g2.1.sign() > 0 {
                    let zero = frame.field.zero();
                    let (a1, b1, a2, b2) = (g1.0.clone(), -g1.1.clone(), g2.0.clone(), g2.1.clone());
                    let big = EigenRect {
                        u: Interval::new(zero.clone(), a1.clone()),
                        v: Interval::new(-b2, zero.clone()),
                    };
                    let small = EigenRect {
                        u: Interval::new(a1.clone(), &a1 + &a2),
                        v: Interval::new(-b1, zero),
                    };
                    return Some(MarkovPartition::from_rects(*a, vec![big, small]));
                }
            }
        }
    }
    None
}

/// Names accepted by [`catalog`].
pub const CATALOG_NAMES: [&str; 2] = ["cat", "trace-four"];

/// Shipped automorphism/partition pairs. Each partition is the one-step
/// refinement of the two-rectangle partition, whose transition matrix is
/// 0/1 with spectral radius `λ`.
pub fn catalog(name: &str) -> Result<(ToralAutomorphism, MarkovPartition), PartitionError> {
    let a = match name {
        "cat" => ToralAutomorphism::new(2, 1, 1, 1)?,
        "trace-four" => ToralAutomorphism::new(3, 1, 2, 1)?,
        other => return Err(PartitionError::UnknownCatalogEntry(other.to_string())),
    };
    let base = two_rectangle_partition(&a).expect("catalog matrices admit the two-rectangle construction");
    Ok((a, base.refine()))
}

fn int_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

fn quad_json(q: &QuadNum) -> Value {
    json!([int_json(q.p().numer()), int_json(q.p().denom()), int_json(q.q().numer()), int_json(q.q().denom())])
}

fn parse_int(v: &Value) -> Result<BigInt, PartitionError> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| PartitionError::Parse(format!("expected an integer, got {n}"))),
        Value::String(s) => s.parse().map_err(|_| PartitionError::Parse(format!("expected an integer, got `{s}`"))),
        other => Err(PartitionError::Parse(format!("expected an integer, got {other}"))),
    }
}

fn parse_quad(v: &Value, field: QuadField) -> Result<QuadNum, PartitionError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 4)
        .ok_or_else(|| PartitionError::Parse(format!("expected [p_num, p_den, q_num, q_den], got {v}")))?;
    let parts: Vec<BigInt> = arr.iter().map(parse_int).collect::<Result<_, _>>()?;
    if parts[1].is_zero() || parts[3].is_zero() {
        return Err(PartitionError::Parse("zero denominator".into()));
    }
    let p = BigRational::new(parts[0].clone(), parts[1].clone());
    let q = BigRational::new(parts[2].clone(), parts[3].clone());
    Ok(QuadNum::new(p, q, field))
}

impl MarkovPartition {
    pub fn to_json(&self) -> Value {
        let elements: Vec<Value> = self
            .elements
            .iter()
            .map(|e| {
                json!({
                    "origin": [quad_json(&e.origin[0]), quad_json(&e.origin[1])],
                    "u_extent": quad_json(&e.u_extent),
                    "s_extent": quad_json(&e.s_extent),
                })
            })
            .collect();
        json!({ "matrix": self.automorphism.entries(), "elements": elements })
    }

    pub fn from_json(v: &Value) -> Result<Self, PartitionError> {
        let m = v
            .get("matrix")
            .and_then(Value::as_array)
            .filter(|a| a.len() == 4)
            .ok_or_else(|| PartitionError::Parse("`matrix` must be an array of four integers".into()))?;
        let entries: Vec<i64> = m
            .iter()
            .map(|e| e.as_i64().ok_or_else(|| PartitionError::Parse(format!("bad matrix entry {e}"))))
            .collect::<Result<_, _>>()?;
        let a = ToralAutomorphism::new(entries[0], entries[1], entries[2], entries[3])?;
        let field = a.field();
        let elems = v
            .get("elements")
            .and_then(Value::as_array)
            .ok_or_else(|| PartitionError::Parse("`elements` must be an array".into()))?;
        let mut out = Vec::with_capacity(elems.len());
        for e in elems {
            let origin = e
                .get("origin")
                .and_then(Value::as_array)
                .filter(|o| o.len() == 2)
                .ok_or_else(|| PartitionError::Parse("`origin` must hold two field elements".into()))?;
            let get = |k: &str| e.get(k).ok_or_else(|| PartitionError::Parse(format!("missing `{k}`")));
            out.push(Parallelogram {
                origin: [parse_quad(&origin[0], field)?, parse_quad(&origin[1], field)?],
                u_extent: parse_quad(get("u_extent")?, field)?,
                s_extent: parse_quad(get("s_extent")?, field)?,
            });
        }
        MarkovPartition::new(a, out)
    }

    pub fn from_json_str(s: &str) -> Result<Self, PartitionError> {
        let v: Value = serde_json::from_str(s).map_err(|e| PartitionError::Parse(e.to_string()))?;
        Self::from_json(&v)
    }
}

/// A rational number as a field element; handy for fixtures.
pub fn rational_quad(field: QuadField, n: i64, d: i64) -> QuadNum {
    field.rational(BigRational::new(n.into(), d.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> ToralAutomorphism {
        ToralAutomorphism::new(2, 1, 1, 1).unwrap()
    }

    #[test]
    fn two_rectangle_partition_is_markov_with_double_crossing() {
        let p = two_rectangle_partition(&cat()).unwrap();
        let report = validate_partition(&p).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(p.crossing_counts(), vec![vec![2, 1], vec![1, 1]]);
        // areas (5 ± √5)/10
        let sqrt5 = 5f64.sqrt();
        assert!((p.area(0).to_f64() - (5.0 + sqrt5) / 10.0).abs() < 1e-14);
        assert!((p.area(1).to_f64() - (5.0 - sqrt5) / 10.0).abs() < 1e-14);
        let g = transition_matrix(&p).unwrap();
        assert_eq!(g, TransitionMatrix::full(2));
    }

    #[test]
    fn catalog_cat_has_golden_entropy() {
        let (a, p) = catalog("cat").unwrap();
        assert_eq!(p.len(), 5);
        assert!(validate_partition(&p).unwrap().passed());
        assert!(p.crossing_counts().iter().flatten().all(|&c| c <= 1));
        let g = transition_matrix(&p).unwrap();
        assert!(g.is_irreducible());
        let rho = spectral_radius(&g).unwrap();
        assert!((rho - a.spectrum().lambda_f64).abs() < 1e-9);
        let c = geometry_constants(&p);
        assert!(c.c_min <= c.c_max);
        assert!(c.h_min <= c.b_min);
        assert_eq!(c.lipschitz, c.c_max);
    }

    #[test]
    fn catalog_names() {
        for name in CATALOG_NAMES {
            assert!(catalog(name).is_ok(), "{name}");
        }
        let (a, _) = catalog("trace-four").unwrap();
        assert_eq!(a.entries(), [3, 1, 2, 1]);
        assert!(matches!(catalog("nope"), Err(PartitionError::UnknownCatalogEntry(_))));
    }

    #[test]
    fn spectral_radius_examples() {
        let golden = TransitionMatrix::new(vec![vec![1, 1], vec![1, 0]]).unwrap();
        assert!((spectral_radius(&golden).unwrap() - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-10);
        let id = TransitionMatrix::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert!((spectral_radius(&id).unwrap() - 1.0).abs() < 1e-12);
        assert!((spectral_radius(&TransitionMatrix::full(3)).unwrap() - 3.0).abs() < 1e-12);
        let zero = TransitionMatrix::new(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(spectral_radius(&zero), Err(PartitionError::ZeroMatrix));
        let reducible = TransitionMatrix::new(vec![vec![1, 1], vec![0, 0]]).unwrap();
        assert!((spectral_radius(&reducible).unwrap() - 1.0).abs() < 1e-12);
        let nilpotent = TransitionMatrix::new(vec![vec![0, 1], vec![0, 0]]).unwrap();
        assert_eq!(spectral_radius(&nilpotent).unwrap(), 0.0);
    }

    #[test]
    fn characteristic_polynomial_of_golden_matrix() {
        let golden = TransitionMatrix::new(vec![vec![1, 1], vec![1, 0]]).unwrap();
        assert_eq!(characteristic_polynomial(&golden), vec![-1, -1, 1]);
        assert_eq!(characteristic_polynomial(&TransitionMatrix::full(3)), vec![0, 0, -3, 1]);
    }

    #[test]
    fn geometry_constant_fixtures() {
        assert_eq!(GeometryConstants::from_raw(0.5, 1.0, 0.6, 0.5).k0, 25);
        let side = 0.5f64.sqrt();
        let sq = ElementMetrics { diameter: side * 2f64.sqrt(), side_u: side, side_s: side, area: 0.5 };
        let c = GeometryConstants::from_metrics(&[sq, sq]);
        assert!((c.c_min - 1.0).abs() < 1e-15 && (c.c_max - 1.0).abs() < 1e-15);
        assert!((c.lipschitz - 1.0).abs() < 1e-15);
        assert_eq!(c.k0, 16);
    }

    #[test]
    fn constants_recompute_from_metrics() {
        let (_, p) = catalog("cat").unwrap();
        let c = geometry_constants(&p);
        let m = element_metrics(&p);
        let again = GeometryConstants::from_raw(c.c_min, c.c_max, c.b_min, c.h_min);
        assert_eq!(c, again);
        assert_eq!(c, GeometryConstants::from_metrics(&m));
        let expected = [0.9106, 0.8741, 0.9106, 0.5628, 0.6180];
        let mut got: Vec<f64> = m.iter().map(|e| e.diameter).collect();
        let mut want = expected.to_vec();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-3, "{got:?}");
        }
    }

    #[test]
    fn duplicated_element_fails_disjointness() {
        let p = two_rectangle_partition(&cat()).unwrap();
        let twice = MarkovPartition::from_rects(cat(), vec![p.rects()[0].clone(), p.rects()[0].clone()]);
        let r = validate_partition(&twice).unwrap();
        assert!(!r.disjoint.passed);
        assert_eq!(r.disjoint.pair, Some((0, 1)));
        assert!(matches!(transition_matrix(&twice), Err(PartitionError::MalformedPartition { .. })));
    }

    #[test]
    fn single_square_is_not_markov() {
        // one eigen-square of ambient area 1
        let frame = EigenFrame::new(&cat());
        let f = frame.field;
        let side_v = f.one().checked_div(&frame.det).unwrap();
        let sq = EigenRect { u: Interval::new(f.zero(), f.one()), v: Interval::new(f.zero(), side_v) };
        let p = MarkovPartition::from_rects(cat(), vec![sq]);
        let r = validate_partition(&p).unwrap();
        assert!(r.cover.passed);
        assert!(!r.markov.passed);
    }

    #[test]
    fn zero_extent_is_malformed() {
        let f = cat().field();
        let e = Parallelogram { origin: [f.zero(), f.zero()], u_extent: f.zero(), s_extent: f.one() };
        let p = MarkovPartition::new(cat(), vec![e]).unwrap();
        assert!(matches!(
            validate_partition(&p),
            Err(PartitionError::MalformedPartition { pair: (0, 0), .. })
        ));
    }

    #[test]
    fn element_never_hit_gives_zero_column() {
        let a = cat();
        let f = a.field();
        let small = rational_quad(f, 1, 100);
        let near_origin = Parallelogram { origin: [f.zero(), f.zero()], u_extent: small.clone(), s_extent: small.clone() };
        let half = rational_quad(f, 1, 2);
        let centre = Parallelogram { origin: [half.clone(), half], u_extent: small.clone(), s_extent: small };
        let p = MarkovPartition::new(a, vec![near_origin, centre]).unwrap();
        let g = transition_matrix(&p).unwrap();
        assert_eq!(g.zero_columns(), vec![1]);
        assert!(!g.is_irreducible());
    }

    #[test]
    fn relabeling_permutes_gamma() {
        let (_, p) = catalog("cat").unwrap();
        let g = transition_matrix(&p).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let q = p.permuted(&perm);
        let h = transition_matrix(&q).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(h.get(i, j), g.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (_, p) = catalog("cat").unwrap();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back = MarkovPartition::from_json_str(&text).unwrap();
        assert_eq!(back.elements(), p.elements());
        assert_eq!(back.rects(), p.rects());
        assert!(matches!(MarkovPartition::from_json_str("{}"), Err(PartitionError::Parse(_))));
    }

    #[test]
    fn frame_is_consistent() {
        let frame = EigenFrame::new(&cat());
        let f = frame.field;
        let (x, y) = frame.to_ambient(&frame.g1.0, &frame.g1.1);
        assert_eq!((x, y), (f.one(), f.zero()));
        // det [e_u e_s] = √5 for the cat map
        assert_eq!(&frame.det * &frame.det, f.integer(5));
    }
}
