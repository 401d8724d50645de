//! Exact arithmetic in the real quadratic field generated by the expanding
//! eigenvalue of a hyperbolic 2×2 integer matrix, plus the torus primitives
//! that sit on top of it.
//!
//! Every element is stored as `p + q·λ` with rational `p`, `q`, where `λ` is
//! the root of `λ² − tλ + s = 0` with `|λ| > 1` (`t` the trace, `s` the
//! determinant). Sign decisions are exact: a floating-point evaluation is
//! accepted only when it is far from zero, otherwise the sign of
//! `a + b√D` is settled by comparing `a²` with `b²D`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("matrix [[{a}, {b}], [{c}, {d}]] is not hyperbolic: an eigenvalue lies on the unit circle")]
    NotHyperbolic { a: i64, b: i64, c: i64, d: i64 },
    #[error("matrix [[{a}, {b}], [{c}, {d}]] has determinant {det}, expected ±1")]
    NotUnimodular { a: i64, b: i64, c: i64, d: i64, det: i64 },
    #[error("quadratic field with trace {trace} and determinant {det} is not a real irrational extension")]
    DegenerateField { trace: i64, det: i64 },
    #[error("division by zero in the quadratic field")]
    DivisionByZero,
    #[error("cannot parse `{0}` as a rational number")]
    ParseRational(String),
}

/// Parses `"3/10"`, `"0.3"`, `"-2"` or `"1e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, AlgebraError> {
    let err = || AlgebraError::ParseRational(text.to_string());
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| err())? };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Exact conversion of a finite `f64` into a rational.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// The field `Q(λ)` with `λ² = trace·λ − det`; `λ` is the real root of
/// modulus greater than one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadField {
    trace: i64,
    det: i64,
}

impl QuadField {
    pub fn new(trace: i64, det: i64) -> Result<Self, AlgebraError> {
        let disc = trace as i128 * trace as i128 - 4 * det as i128;
        let degenerate = disc <= 0 || {
            let r = (disc as f64).sqrt().round() as i128;
            (r - 1..=r + 1).any(|c| c >= 0 && c * c == disc)
        };
        if degenerate {
            return Err(AlgebraError::DegenerateField { trace, det });
        }
        Ok(Self { trace, det })
    }

    pub fn trace(&self) -> i64 {
        self.trace
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn discriminant(&self) -> i64 {
        self.trace * self.trace - 4 * self.det
    }

    /// Which square root of the discriminant `λ` uses: `λ = (t + ε√D)/2`.
    fn root_sign(&self) -> i64 {
        if self.trace < 0 {
            -1
        } else {
            1
        }
    }

    pub fn lambda_f64(&self) -> f64 {
        let sqrt_d = (self.discriminant() as f64).sqrt();
        (self.trace as f64 + self.root_sign() as f64 * sqrt_d) / 2.0
    }

    pub fn zero(&self) -> QuadNum {
        QuadNum::new(BigRational::zero(), BigRational::zero(), *self)
    }

    pub fn one(&self) -> QuadNum {
        QuadNum::new(BigRational::one(), BigRational::zero(), *self)
    }

    pub fn lambda(&self) -> QuadNum {
        QuadNum::new(BigRational::zero(), BigRational::one(), *self)
    }

    pub fn rational(&self, r: BigRational) -> QuadNum {
        QuadNum::new(r, BigRational::zero(), *self)
    }

    pub fn integer(&self, n: i64) -> QuadNum {
        self.rational(BigRational::from_integer(n.into()))
    }

    /// `√D` as an element of the field: `√D = ε(2λ − t)`.
    pub fn sqrt_discriminant(&self) -> QuadNum {
        let e = self.root_sign();
        QuadNum::new(
            BigRational::from_integer((-e * self.trace).into()),
            BigRational::from_integer((2 * e).into()),
            *self,
        )
    }
}

/// An element `p + q·λ` of a real quadratic field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadNum {
    p: BigRational,
    q: BigRational,
    field: QuadField,
}

impl QuadNum {
    pub fn new(p: BigRational, q: BigRational, field: QuadField) -> Self {
        Self { p, q, field }
    }

    pub fn p(&self) -> &BigRational {
        &self.p
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    fn same_field(&self, other: &QuadNum) {
        assert_eq!(
            self.field, other.field,
            "QuadNum values from different quadratic fields cannot be combined"
        );
    }

    /// Writes the value as `a + b√D`.
    fn surd_form(&self) -> (BigRational, BigRational) {
        let two = BigRational::from_integer(2.into());
        let t = BigRational::from_integer(self.field.trace.into());
        let e = BigRational::from_integer(self.field.root_sign().into());
        let a = &self.p + &self.q * &t / &two;
        let b = &self.q * e / two;
        (a, b)
    }

    /// Field norm `N(x) = x·x̄`, a rational.
    pub fn norm(&self) -> BigRational {
        let t = BigRational::from_integer(self.field.trace.into());
        let s = BigRational::from_integer(self.field.det.into());
        &self.p * &self.p + &self.p * &self.q * t + &self.q * &self.q * s
    }

    /// Galois conjugate `p + q·λ̄`, written back in the basis `{1, λ}`.
    pub fn conjugate(&self) -> QuadNum {
        let t = BigRational::from_integer(self.field.trace.into());
        QuadNum::new(&self.p + &self.q * t, -self.q.clone(), self.field)
    }

    pub fn inverse(&self) -> Result<QuadNum, AlgebraError> {
        let n = self.norm();
        if n.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let c = self.conjugate();
        Ok(QuadNum::new(c.p / &n, c.q / n, self.field))
    }

    pub fn checked_div(&self, rhs: &QuadNum) -> Result<QuadNum, AlgebraError> {
        self.same_field(rhs);
        Ok(self * &rhs.inverse()?)
    }

    pub fn abs(&self) -> QuadNum {
        if self.sign() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Accurate double approximation: when `a` and `b√D` nearly cancel the
    /// value is recomputed as `(a² − b²D)/(a − b√D)`.
    pub fn to_f64(&self) -> f64 {
        let (a, b) = self.surd_form();
        let sqrt_d = (self.field.discriminant() as f64).sqrt();
        let af = rat_to_f64(&a);
        let bf = rat_to_f64(&b) * sqrt_d;
        if af.signum() == bf.signum() || af == 0.0 || bf == 0.0 {
            return af + bf;
        }
        let d = BigRational::from_integer(self.field.discriminant().into());
        let numer = &a * &a - &b * &b * d;
        rat_to_f64(&numer) / (af - bf)
    }

    /// Exact sign of the real embedding.
    pub fn sign(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        let (a, b) = self.surd_form();
        let sqrt_d = (self.field.discriminant() as f64).sqrt();
        let af = rat_to_f64(&a);
        let bf = rat_to_f64(&b) * sqrt_d;
        let approx = af + bf;
        if approx.is_finite() && approx.abs() > 1e-9 * (af.abs() + bf.abs()) {
            return if approx > 0.0 { 1 } else { -1 };
        }
        exact_surd_sign(&a, &b, self.field.discriminant())
    }

    pub fn max(self, other: QuadNum) -> QuadNum {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: QuadNum) -> QuadNum {
        if self <= other {
            self
        } else {
            other
        }
    }
}

fn sign_of(r: &BigRational) -> i32 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

/// Sign of `a + b√D` for a non-square `D > 0`.
fn exact_surd_sign(a: &BigRational, b: &BigRational, disc: i64) -> i32 {
    let sa = sign_of(a);
    let sb = sign_of(b);
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    let lhs = a * a;
    let rhs = b * b * BigRational::from_integer(disc.into());
    match lhs.cmp(&rhs) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => 0,
    }
}

/// Exact sign of `v` under the real embedding with `λ > 1` (or `λ < −1`).
pub fn quad_sign(v: &QuadNum) -> i32 {
    v.sign()
}

impl PartialOrd for QuadNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadNum {
    fn cmp(&self, other: &Self) -> Ordering {
        self.same_field(other);
        (self - other).sign().cmp(&0)
    }
}

impl fmt::Display for QuadNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}·λ", self.p, self.q)
    }
}

impl<'a> Add<&'a QuadNum> for &'a QuadNum {
    type Output = QuadNum;
    fn add(self, rhs: &'a QuadNum) -> QuadNum {
        self.same_field(rhs);
        QuadNum::new(&self.p + &rhs.p, &self.q + &rhs.q, self.field)
    }
}

impl<'a> Sub<&'a QuadNum> for &'a QuadNum {
    type Output = QuadNum;
    fn sub(self, rhs: &'a QuadNum) -> QuadNum {
        self.same_field(rhs);
        QuadNum::new(&self.p - &rhs.p, &self.q - &rhs.q, self.field)
    }
}

impl<'a> Mul<&'a QuadNum> for &'a QuadNum {
    type Output = QuadNum;
    fn mul(self, rhs: &'a QuadNum) -> QuadNum {
        self.same_field(rhs);
        let t = BigRational::from_integer(self.field.trace.into());
        let s = BigRational::from_integer(self.field.det.into());
        let qq = &self.q * &rhs.q;
        let p = &self.p * &rhs.p - &qq * s;
        let q = &self.p * &rhs.q + &self.q * &rhs.p + qq * t;
        QuadNum::new(p, q, self.field)
    }
}

impl<'a> Div<&'a QuadNum> for &'a QuadNum {
    type Output = QuadNum;
    fn div(self, rhs: &'a QuadNum) -> QuadNum {
        self.checked_div(rhs).expect("division by zero in quadratic field")
    }
}

impl Neg for &QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        QuadNum::new(-self.p.clone(), -self.q.clone(), self.field)
    }
}

impl Neg for QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        QuadNum::new(-self.p, -self.q, self.field)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<QuadNum> for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: QuadNum) -> QuadNum {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a QuadNum> for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: &'a QuadNum) -> QuadNum {
                (&self).$method(rhs)
            }
        }
        impl<'a> $tr<QuadNum> for &'a QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: QuadNum) -> QuadNum {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

/// Hyperbolic automorphism `x ↦ Ax mod 1` of the 2-torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ToralAutomorphism {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl ToralAutomorphism {
    /// Row-major entries `[[a, b], [c, d]]`.
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, AlgebraError> {
        let det = a * d - b * c;
        if det.abs() != 1 {
            return Err(AlgebraError::NotUnimodular { a, b, c, d, det });
        }
        let trace = a + d;
        let hyperbolic = if det == 1 { trace.abs() > 2 } else { trace != 0 };
        if !hyperbolic {
            return Err(AlgebraError::NotHyperbolic { a, b, c, d });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn from_entries(e: [i64; 4]) -> Result<Self, AlgebraError> {
        Self::new(e[0], e[1], e[2], e[3])
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    pub fn field(&self) -> QuadField {
        QuadField::new(self.trace(), self.det()).expect("hyperbolic matrices generate irrational fields")
    }

    /// Entries of `A⁻¹`, which is again an integer matrix.
    pub fn inverse_entries(&self) -> [i64; 4] {
        let s = self.det();
        [s * self.d, -s * self.b, -s * self.c, s * self.a]
    }

    pub fn compose(&self, other: &ToralAutomorphism) -> ToralAutomorphism {
        let [a, b, c, d] = self.entries();
        let [e, f, g, h] = other.entries();
        ToralAutomorphism::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
            .expect("products of hyperbolic unimodular matrices with a common eigenbasis stay hyperbolic")
    }

    /// `A²`: determinant one and both eigenvalues positive.
    pub fn normalized(&self) -> ToralAutomorphism {
        self.compose(self)
    }

    pub fn is_normalized(&self) -> bool {
        self.det() == 1 && self.trace() > 2
    }

    pub fn spectrum(&self) -> Spectrum {
        let field = self.field();
        let lambda = field.lambda();
        let stable = &field.integer(self.trace()) - &lambda;
        let lambda_inv = lambda.inverse().expect("λ is nonzero");
        let d = field.integer(self.d);
        let c = field.integer(self.c);
        Spectrum {
            lambda_f64: field.lambda_f64(),
            unstable_dir: [&lambda - &d, c.clone()],
            stable_dir: [&stable - &d, c],
            stable_eigenvalue: stable,
            lambda_inv,
            lambda,
            field,
        }
    }

    pub fn apply_rational(&self, x: &BigRational, y: &BigRational) -> (BigRational, BigRational) {
        let [a, b, c, d] = self.entries().map(|v| BigRational::from_integer(v.into()));
        (a * x + b * y, c * x + d * y)
    }

    pub fn apply_quad(&self, x: &QuadNum, y: &QuadNum) -> (QuadNum, QuadNum) {
        let f = x.field();
        let [a, b, c, d] = self.entries().map(|v| f.integer(v));
        (&a * x + &b * y, &c * x + &d * y)
    }
}

impl fmt::Display for ToralAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Eigen-data of a hyperbolic automorphism, exact in `Q(λ)`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub field: QuadField,
    pub lambda: QuadNum,
    pub lambda_f64: f64,
    pub lambda_inv: QuadNum,
    /// The contracting eigenvalue `t − λ`.
    pub stable_eigenvalue: QuadNum,
    pub unstable_dir: [QuadNum; 2],
    pub stable_dir: [QuadNum; 2],
}

pub fn spectrum(a: &ToralAutomorphism) -> Spectrum {
    a.spectrum()
}

/// A point of `R²/Z²`, either exact (rational) or floating.
#[derive(Clone, Debug, PartialEq)]
pub enum TorusPoint {
    Exact { x: BigRational, y: BigRational },
    Float { x: f64, y: f64 },
}

fn frac_rational(r: &BigRational) -> BigRational {
    r - r.floor()
}

fn frac_f64(v: f64) -> f64 {
    let f = v - v.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

impl TorusPoint {
    pub fn exact(x: BigRational, y: BigRational) -> Self {
        TorusPoint::Exact { x: frac_rational(&x), y: frac_rational(&y) }
    }

    pub fn float(x: f64, y: f64) -> Self {
        TorusPoint::Float { x: frac_f64(x), y: frac_f64(y) }
    }

    pub fn coords_f64(&self) -> (f64, f64) {
        match self {
            TorusPoint::Exact { x, y } => (rat_to_f64(x), rat_to_f64(y)),
            TorusPoint::Float { x, y } => (*x, *y),
        }
    }

    /// Exact coordinates; floating points convert without rounding.
    pub fn coords_exact(&self) -> (BigRational, BigRational) {
        match self {
            TorusPoint::Exact { x, y } => (x.clone(), y.clone()),
            TorusPoint::Float { x, y } => (rational_from_f64(*x), rational_from_f64(*y)),
        }
    }
}

fn step_point(m: [i64; 4], p: &TorusPoint) -> TorusPoint {
    match p {
        TorusPoint::Exact { x, y } => {
            let [a, b, c, d] = m.map(|v| BigRational::from_integer(v.into()));
            TorusPoint::exact(&a * x + &b * y, &c * x + &d * y)
        }
        TorusPoint::Float { x, y } => {
            let [a, b, c, d] = m.map(|v| v as f64);
            TorusPoint::float(a * x + b * y, c * x + d * y)
        }
    }
}

/// `Tⁿx`, reducing modulo one after every step.
pub fn iterate_point(a: &ToralAutomorphism, x: &TorusPoint, n: u64) -> TorusPoint {
    let mut p = x.clone();
    for _ in 0..n {
        p = step_point(a.entries(), &p);
    }
    p
}

/// `Tⁿx` for any integer `n`; negative powers use the integer inverse.
pub fn iterate_point_signed(a: &ToralAutomorphism, x: &TorusPoint, n: i64) -> TorusPoint {
    let m = if n >= 0 { a.entries() } else { a.inverse_entries() };
    let mut p = x.clone();
    for _ in 0..n.unsigned_abs() {
        p = step_point(m, &p);
    }
    p
}

/// Flat-torus distance: Euclidean length of the shortest lift of `x − y`.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> f64 {
    let (x1, y1) = x.coords_f64();
    let (x2, y2) = y.coords_f64();
    let dx = x1 - x2;
    let dy = y1 - y2;
    let mut best = f64::INFINITY;
    for i in -1..=1 {
        for j in -1..=1 {
            let ex = dx + i as f64;
            let ey = dy + j as f64;
            best = best.min(ex.hypot(ey));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn cat() -> ToralAutomorphism {
        ToralAutomorphism::new(2, 1, 1, 1).unwrap()
    }

    #[test]
    fn cat_map_spectrum() {
        let s = cat().spectrum();
        assert!((s.lambda_f64 - 2.618_033_988_7).abs() < 1e-10);
        assert!((s.lambda.to_f64() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        // unstable direction (λ − 1, 1)
        let f = s.field;
        assert_eq!(s.unstable_dir[0], &f.lambda() - &f.one());
        assert_eq!(s.unstable_dir[1], f.one());
        let (ax, ay) = cat().apply_quad(&s.unstable_dir[0], &s.unstable_dir[1]);
        assert_eq!(ax, &s.lambda * &s.unstable_dir[0]);
        assert_eq!(ay, &s.lambda * &s.unstable_dir[1]);
        let (bx, by) = cat().apply_quad(&s.stable_dir[0], &s.stable_dir[1]);
        assert_eq!(bx, &s.stable_eigenvalue * &s.stable_dir[0]);
        assert_eq!(by, &s.stable_eigenvalue * &s.stable_dir[1]);
        assert_eq!(&s.lambda * &s.lambda_inv, f.one());
    }

    #[test]
    fn shear_is_rejected() {
        assert!(matches!(
            ToralAutomorphism::new(1, 1, 0, 1),
            Err(AlgebraError::NotHyperbolic { .. })
        ));
        assert!(matches!(
            ToralAutomorphism::new(2, 0, 0, 2),
            Err(AlgebraError::NotUnimodular { .. })
        ));
    }

    #[test]
    fn fibonacci_matrix_and_its_square() {
        let fib = ToralAutomorphism::new(1, 1, 1, 0).unwrap();
        assert_eq!(fib.det(), -1);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((fib.spectrum().lambda_f64 - phi).abs() < 1e-14);
        let sq = fib.normalized();
        assert_eq!(sq.entries(), [2, 1, 1, 1]);
        assert!(sq.is_normalized());
        assert!((sq.spectrum().lambda_f64 - phi * phi).abs() < 1e-12);
    }

    #[test]
    fn negative_trace_picks_expanding_root() {
        let a = ToralAutomorphism::new(-2, -1, -1, -1).unwrap();
        let s = a.spectrum();
        assert!(s.lambda_f64 < -1.0);
        assert!((s.lambda.to_f64() - s.lambda_f64).abs() < 1e-12);
        let (ax, _) = a.apply_quad(&s.unstable_dir[0], &s.unstable_dir[1]);
        assert_eq!(ax, &s.lambda * &s.unstable_dir[0]);
    }

    #[test]
    fn sign_examples() {
        let f = cat().field();
        let v = QuadNum::new(rat(-2, 1), rat(1, 1), f);
        assert_eq!(quad_sign(&v), 1);
        assert_eq!(quad_sign(&f.zero()), 0);
        let w = QuadNum::new(rat(5, 1), rat(-2, 1), f);
        assert_eq!(quad_sign(&w), -1);
        // exact fallback: x = F_{41} − F_{40}·λ⁻¹-type cancellation
        let mut p = f.one();
        for _ in 0..40 {
            p = &p * &f.lambda();
        }
        let inv = p.inverse().unwrap();
        assert_eq!(inv.sign(), 1);
        assert!(inv.to_f64() > 0.0);
        assert!((inv.to_f64() - s_pow(f.lambda_f64(), -40)).abs() < 1e-30);
    }

    fn s_pow(x: f64, n: i32) -> f64 {
        x.powi(n)
    }

    #[test]
    fn sqrt_discriminant_squares_to_d() {
        for (t, s) in [(3, 1), (1, -1), (-3, 1), (5, 1), (4, -1)] {
            let f = QuadField::new(t, s).unwrap();
            let r = f.sqrt_discriminant();
            assert_eq!(&r * &r, f.integer(f.discriminant()));
            assert!(r.sign() > 0);
        }
    }

    #[test]
    fn half_point_has_period_three() {
        let x = TorusPoint::exact(rat(1, 2), rat(1, 2));
        let a = cat();
        assert_eq!(iterate_point(&a, &x, 1), TorusPoint::exact(rat(1, 2), rat(0, 1)));
        assert_eq!(iterate_point(&a, &x, 2), TorusPoint::exact(rat(0, 1), rat(1, 2)));
        assert_eq!(iterate_point(&a, &x, 3), x);
        let origin = TorusPoint::exact(rat(0, 1), rat(0, 1));
        assert_eq!(iterate_point(&a, &origin, 7), origin);
        assert_eq!(iterate_point(&a, &x, 0), x);
        assert_eq!(iterate_point_signed(&a, &iterate_point(&a, &x, 5), -5), x);
    }

    #[test]
    fn torus_distance_examples() {
        let p = TorusPoint::float(0.1, 0.9);
        let q = TorusPoint::float(0.9, 0.1);
        assert!((torus_distance(&p, &q) - 0.08f64.sqrt()).abs() < 1e-12);
        assert_eq!(torus_distance(&p, &p), 0.0);
        let a = TorusPoint::float(0.25, 0.0);
        let b = TorusPoint::float(0.75, 0.0);
        assert!((torus_distance(&a, &b) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/10").unwrap(), rat(3, 10));
        assert_eq!(parse_rational("0.3").unwrap(), rat(3, 10));
        assert_eq!(parse_rational("-2").unwrap(), rat(-2, 1));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("2.5E1").unwrap(), rat(25, 1));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    fn small_rat() -> impl Strategy<Value = BigRational> {
        (-40i64..40, 1i64..12).prop_map(|(n, d)| rat(n, d))
    }

    fn quad(f: QuadField) -> impl Strategy<Value = QuadNum> {
        (small_rat(), small_rat()).prop_map(move |(p, q)| QuadNum::new(p, q, f))
    }

    proptest! {
        #[test]
        fn ring_axioms_hold_exactly(
            (x, y, z) in (quad(QuadField::new(3, 1).unwrap()), quad(QuadField::new(3, 1).unwrap()), quad(QuadField::new(3, 1).unwrap()))
        ) {
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            if !x.is_zero() {
                prop_assert_eq!(&x * &x.inverse().unwrap(), x.field().one());
            }
        }

        #[test]
        fn sign_agrees_with_float_away_from_zero(x in quad(QuadField::new(3, 1).unwrap())) {
            let v = x.p().to_f64().unwrap() + x.q().to_f64().unwrap() * QuadField::new(3, 1).unwrap().lambda_f64();
            if v.abs() > 1e-6 {
                prop_assert_eq!(x.sign(), if v > 0.0 { 1 } else { -1 });
            }
        }

        #[test]
        fn characteristic_polynomial_holds(a in -6i64..6, b in -6i64..6, c in -6i64..6) {
            // build unimodular matrices of the form [[a, b], [c, (1 + b c)/a]] when integral
            prop_assume!(a != 0 && (1 + b * c) % a == 0);
            let d = (1 + b * c) / a;
            if let Ok(m) = ToralAutomorphism::new(a, b, c, d) {
                let s = m.spectrum();
                let f = s.field;
                let l = &s.lambda;
                let lhs = &(l * l) - &(&f.integer(m.trace()) * l);
                prop_assert_eq!(lhs + f.integer(m.det()), f.zero());
            }
        }

        #[test]
        fn torus_triangle_inequality(
            ax in 0.0f64..1.0, ay in 0.0f64..1.0,
            bx in 0.0f64..1.0, by in 0.0f64..1.0,
            cx in 0.0f64..1.0, cy in 0.0f64..1.0,
        ) {
            let (a, b, c) = (TorusPoint::float(ax, ay), TorusPoint::float(bx, by), TorusPoint::float(cx, cy));
            prop_assert!(torus_distance(&a, &c) <= torus_distance(&a, &b) + torus_distance(&b, &c) + 1e-12);
            prop_assert!((torus_distance(&a, &b) - torus_distance(&b, &a)).abs() < 1e-15);
        }

        #[test]
        fn iteration_composes(n1 in 0u64..6, n2 in 0u64..6, xn in 0i64..30, yn in 0i64..30, den in 1i64..31) {
            let a = ToralAutomorphism::new(2, 1, 1, 1).unwrap();
            let x = TorusPoint::exact(rat(xn, den), rat(yn, den));
            let lhs = iterate_point(&a, &x, n1 + n2);
            let rhs = iterate_point(&a, &iterate_point(&a, &x, n1), n2);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
