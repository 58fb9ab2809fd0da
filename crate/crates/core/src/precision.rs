//! Two-level floating-point substrate: a narrow storage scalar, a wide working
//! scalar, exact widening, rounded narrowing, and pair ("double-double")
//! arithmetic for the double/quad mode.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrecisionError {
    #[error("value {0:e} is outside the range of the narrow format")]
    Range(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0:e}")]
    NegativeSqrt(f64),
    #[error("non-finite operand")]
    NonFinite,
}

/// Scalar arithmetic shared by `f32`, `f64` and [`DoubleDouble`].
pub trait Real:
    Copy
    + Default
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
{
    /// Unit roundoff for rounding to nearest.
    const EPS: f64;
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    /// Nearest representable value.
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;
    fn max_value() -> Self;
    fn min_positive() -> Self;
    /// `self * 2^k`, exact barring over/underflow.
    fn mul_pow2(self, k: i32) -> Self;
    fn pi() -> Self;

    fn from_usize(k: usize) -> Self {
        Self::from_f64(k as f64)
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn is_sign_negative(self) -> bool {
        self < Self::zero()
    }
    fn eps() -> Self {
        Self::from_f64(Self::EPS)
    }
}

fn pow2(k: i32) -> f64 {
    f64::from_bits(((k + 1023) as u64) << 52)
}

fn scale_f64(x: f64, mut k: i32) -> f64 {
    let mut y = x;
    while k > 1000 {
        y *= pow2(1000);
        k -= 1000;
    }
    while k < -1000 {
        y *= pow2(-1000);
        k += 1000;
    }
    y * pow2(k)
}

impl Real for f32 {
    const EPS: f64 = 5.960464477539063e-8; // 2^-24
    const NAME: &'static str = "f32";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    fn max_value() -> Self {
        f32::MAX
    }
    fn min_positive() -> Self {
        f32::MIN_POSITIVE
    }
    fn mul_pow2(self, k: i32) -> Self {
        scale_f64(self as f64, k) as f32
    }
    fn pi() -> Self {
        std::f32::consts::PI
    }
}

impl Real for f64 {
    const EPS: f64 = 1.1102230246251565e-16; // 2^-53
    const NAME: &'static str = "f64";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn max_value() -> Self {
        f64::MAX
    }
    fn min_positive() -> Self {
        f64::MIN_POSITIVE
    }
    fn mul_pow2(self, k: i32) -> Self {
        scale_f64(self, k)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
}

#[inline(always)]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline(always)]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[cfg(target_feature = "fma")]
#[inline(always)]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[cfg(not(target_feature = "fma"))]
#[inline(always)]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    #[inline(always)]
    fn split(a: f64) -> (f64, f64) {
        let t = 134217729.0 * a;
        let hi = t - (t - a);
        (hi, a - hi)
    }
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`; about 106 significant bits.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    /// Normalizes an arbitrary pair.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Self::clean(s, e)
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline(always)]
    fn clean(hi: f64, lo: f64) -> Self {
        if hi.is_finite() {
            DoubleDouble { hi, lo }
        } else {
            DoubleDouble { hi, lo: 0.0 }
        }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn mul_f64s(a: f64, b: f64) -> Self {
        let (p, e) = two_prod(a, b);
        Self::clean(p, e)
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s1, s2) = two_sum(self.hi, b);
        let (s1, s2) = quick_two_sum(s1, s2 + self.lo);
        Self::clean(s1, s2)
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let (p1, p2) = quick_two_sum(p1, p2 + self.lo * b);
        Self::clean(p1, p2)
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (s1, s2) = quick_two_sum(s1, s2 + t2);
        Self::clean(s1, s2)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (p1, p2) = quick_two_sum(p1, p2);
        Self::clean(p1, p2)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    /// Quotient of the leading parts, corrected by one Newton step.
    #[inline]
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() || q1 == 0.0 {
            return Self::clean(q1, 0.0);
        }
        let r = b.mul_f64(q1);
        let (s1, s2) = two_sum(self.hi, -r.hi);
        let s2 = s2 - r.lo + self.lo;
        let q2 = (s1 + s2) / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Self::clean(q1, q2)
    }
}

macro_rules! assign_ops {
    ($t:ty) => {
        impl AddAssign for $t {
            #[inline]
            fn add_assign(&mut self, b: Self) {
                *self = *self + b;
            }
        }
        impl SubAssign for $t {
            #[inline]
            fn sub_assign(&mut self, b: Self) {
                *self = *self - b;
            }
        }
        impl MulAssign for $t {
            #[inline]
            fn mul_assign(&mut self, b: Self) {
                *self = *self * b;
            }
        }
        impl DivAssign for $t {
            #[inline]
            fn div_assign(&mut self, b: Self) {
                *self = *self / b;
            }
        }
    };
}
assign_ops!(DoubleDouble);

impl Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(DoubleDouble::default(), |a, b| a + b)
    }
}

impl Real for DoubleDouble {
    const EPS: f64 = 4.930380657631324e-32; // 2^-104
    const NAME: &'static str = "double-double";

    fn zero() -> Self {
        DoubleDouble { hi: 0.0, lo: 0.0 }
    }
    fn one() -> Self {
        DoubleDouble { hi: 1.0, lo: 0.0 }
    }
    fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
    fn to_f64(self) -> f64 {
        if self.lo == 0.0 {
            self.hi
        } else {
            self.hi + self.lo
        }
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 || !self.hi.is_finite() {
            return Self::clean(self.hi.sqrt(), 0.0);
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let r = self - DoubleDouble::mul_f64s(ax, ax);
        DoubleDouble::from_f64(ax).add_f64(r.hi * (x * 0.5))
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite()
    }
    fn max_value() -> Self {
        DoubleDouble {
            hi: f64::MAX,
            lo: 0.0,
        }
    }
    fn min_positive() -> Self {
        DoubleDouble {
            hi: f64::MIN_POSITIVE,
            lo: 0.0,
        }
    }
    fn mul_pow2(self, k: i32) -> Self {
        Self::clean(scale_f64(self.hi, k), scale_f64(self.lo, k))
    }
    fn pi() -> Self {
        DoubleDouble {
            hi: 3.141592653589793,
            lo: 1.2246467991473532e-16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecisionMode {
    SingleDouble,
    DoubleQuad,
}

impl PrecisionMode {
    pub fn eps_narrow(self) -> f64 {
        match self {
            PrecisionMode::SingleDouble => f32::EPS,
            PrecisionMode::DoubleQuad => f64::EPS,
        }
    }

    pub fn eps_wide(self) -> f64 {
        match self {
            PrecisionMode::SingleDouble => f64::EPS,
            PrecisionMode::DoubleQuad => DoubleDouble::EPS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrecisionMode::SingleDouble => "single-double",
            PrecisionMode::DoubleQuad => "double-quad",
        }
    }
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PrecisionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single-double" => Ok(PrecisionMode::SingleDouble),
            "double-quad" => Ok(PrecisionMode::DoubleQuad),
            _ => Err(format!("unknown precision mode `{s}`")),
        }
    }
}

/// A narrow/wide pair of scalar types.
pub trait Precision: Copy + Default + fmt::Debug + Send + Sync + 'static {
    type Narrow: Real;
    type Wide: Real;
    const MODE: PrecisionMode;

    fn widen(x: Self::Narrow) -> Self::Wide;
    /// Rounds to nearest, ties to even; overflows to infinity.
    fn narrow(x: Self::Wide) -> Self::Narrow;
    /// Dot product of narrow vectors accumulated in wide arithmetic.
    fn dot(a: &[Self::Narrow], b: &[Self::Narrow]) -> Self::Wide;

    fn eps_narrow() -> f64 {
        Self::Narrow::EPS
    }
    fn eps_wide() -> f64 {
        Self::Wide::EPS
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SingleDouble;

#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleQuad;

impl Precision for SingleDouble {
    type Narrow = f32;
    type Wide = f64;
    const MODE: PrecisionMode = PrecisionMode::SingleDouble;

    fn widen(x: f32) -> f64 {
        x as f64
    }
    fn narrow(x: f64) -> f32 {
        x as f32
    }
    fn dot(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
    }
}

impl Precision for DoubleQuad {
    type Narrow = f64;
    type Wide = DoubleDouble;
    const MODE: PrecisionMode = PrecisionMode::DoubleQuad;

    fn widen(x: f64) -> DoubleDouble {
        DoubleDouble::from_f64(x)
    }
    fn narrow(x: DoubleDouble) -> f64 {
        x.to_f64()
    }
    fn dot(a: &[f64], b: &[f64]) -> DoubleDouble {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for (&x, &y) in a.iter().zip(b) {
            let (p, pe) = two_prod(x, y);
            let (t, te) = two_sum(s, p);
            s = t;
            c += pe + te;
        }
        DoubleDouble::new(s, c)
    }
}

pub fn widen<P: Precision>(x: P::Narrow) -> P::Wide {
    P::widen(x)
}

/// Narrowing that reports overflow instead of producing an infinity.
pub fn narrow<P: Precision>(x: P::Wide) -> Result<P::Narrow, PrecisionError> {
    let y = P::narrow(x);
    if y.is_finite() || !x.is_finite() {
        Ok(y)
    } else {
        Err(PrecisionError::Range(x.to_f64()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WideOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
}

/// Checked wide arithmetic; `b` is ignored for [`WideOp::Sqrt`].
pub fn wide_arith<W: Real>(a: W, b: W, op: WideOp) -> Result<W, PrecisionError> {
    if !a.is_finite() || (op != WideOp::Sqrt && !b.is_finite()) {
        return Err(PrecisionError::NonFinite);
    }
    Ok(match op {
        WideOp::Add => a + b,
        WideOp::Sub => a - b,
        WideOp::Mul => a * b,
        WideOp::Div => {
            if b == W::zero() {
                return Err(PrecisionError::DivisionByZero);
            }
            a / b
        }
        WideOp::Sqrt => {
            if a < W::zero() {
                return Err(PrecisionError::NegativeSqrt(a.to_f64()));
            }
            a.sqrt()
        }
    })
}
