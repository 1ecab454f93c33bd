//! Exact bounded-integer arithmetic.
//!
//! Every machine integer the contract language knows about is a [`BoundedInt`]:
//! an arbitrary-precision value tagged with an [`IntKind`] whose range it never
//! leaves. Arithmetic is checked; there is no wrapping variant.
//!
//! Specifications reason over [`MathInt`], the unbounded integers. Converting
//! with [`BoundedInt::to_math`] is total, the other direction is checked.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Bit widths supported by the language.
pub const WIDTHS: [u16; 5] = [32, 64, 128, 160, 256];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("{op} overflows {kind}")]
    Overflow { op: ArithOp, kind: IntKind },
    #[error("division by zero")]
    DivisionByZero,
    #[error("operand kinds differ: {left} vs {right}")]
    KindMismatch { left: IntKind, right: IntKind },
    #[error("{value} is out of range for {kind}")]
    OutOfRange { kind: IntKind, value: BigInt },
    #[error("unsupported integer width {0}")]
    BadWidth(u16),
    #[error("unknown integer kind `{0}`")]
    UnknownKind(String),
}

/// Width and signedness of a machine integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntKind {
    bits: u16,
    signed: bool,
}

impl IntKind {
    pub const INT32: IntKind = IntKind { bits: 32, signed: true };
    pub const INT64: IntKind = IntKind { bits: 64, signed: true };
    pub const INT128: IntKind = IntKind { bits: 128, signed: true };
    pub const INT160: IntKind = IntKind { bits: 160, signed: true };
    pub const INT256: IntKind = IntKind { bits: 256, signed: true };
    pub const UINT32: IntKind = IntKind { bits: 32, signed: false };
    pub const UINT64: IntKind = IntKind { bits: 64, signed: false };
    pub const UINT128: IntKind = IntKind { bits: 128, signed: false };
    pub const UINT160: IntKind = IntKind { bits: 160, signed: false };
    pub const UINT256: IntKind = IntKind { bits: 256, signed: false };

    pub fn new(bits: u16, signed: bool) -> Result<Self, NumericError> {
        if WIDTHS.contains(&bits) {
            Ok(IntKind { bits, signed })
        } else {
            Err(NumericError::BadWidth(bits))
        }
    }

    /// All ten kinds, unsigned first.
    pub fn all() -> impl Iterator<Item = IntKind> {
        [false, true]
            .into_iter()
            .flat_map(|signed| WIDTHS.into_iter().map(move |bits| IntKind { bits, signed }))
    }

    pub fn bits(self) -> u16 {
        self.bits
    }

    pub fn is_signed(self) -> bool {
        self.signed
    }

    pub fn min_value(self) -> BigInt {
        if self.signed {
            -(BigInt::one() << (self.bits - 1) as usize)
        } else {
            BigInt::zero()
        }
    }

    pub fn max_value(self) -> BigInt {
        if self.signed {
            (BigInt::one() << (self.bits - 1) as usize) - 1
        } else {
            (BigInt::one() << self.bits as usize) - 1
        }
    }

    pub fn contains(self, v: &BigInt) -> bool {
        *v >= self.min_value() && *v <= self.max_value()
    }

    pub fn name(self) -> String {
        format!("{}int{}", if self.signed { "" } else { "u" }, self.bits)
    }
}

impl fmt::Display for IntKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for IntKind {
    type Err = NumericError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (signed, digits) = match s.strip_prefix("uint") {
            Some(rest) => (false, rest),
            None => match s.strip_prefix("int") {
                Some(rest) => (true, rest),
                None => return Err(NumericError::UnknownKind(s.to_string())),
            },
        };
        let bits: u16 = digits
            .parse()
            .map_err(|_| NumericError::UnknownKind(s.to_string()))?;
        IntKind::new(bits, signed).map_err(|_| NumericError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    /// Truncating division, as the EVM `DIV`/`SDIV` instructions.
    Div,
    /// Remainder with the sign of the dividend.
    Rem,
}

impl ArithOp {
    pub const ALL: [ArithOp; 5] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Rem];

    /// The exact result over the unbounded integers, `None` on a zero divisor.
    pub fn apply_unbounded(self, a: &BigInt, b: &BigInt) -> Option<BigInt> {
        match self {
            ArithOp::Add => Some(a + b),
            ArithOp::Sub => Some(a - b),
            ArithOp::Mul => Some(a * b),
            ArithOp::Div if b.is_zero() => None,
            ArithOp::Rem if b.is_zero() => None,
            ArithOp::Div => Some(a / b),
            ArithOp::Rem => Some(a % b),
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithOp::Add => "add",
            ArithOp::Sub => "sub",
            ArithOp::Mul => "mul",
            ArithOp::Div => "div",
            ArithOp::Rem => "rem",
        })
    }
}

/// A machine integer. The value always lies inside `kind`'s range.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundedInt {
    kind: IntKind,
    value: BigInt,
}

impl BoundedInt {
    pub fn new(kind: IntKind, value: impl Into<BigInt>) -> Result<Self, NumericError> {
        let value = value.into();
        if kind.contains(&value) {
            Ok(BoundedInt { kind, value })
        } else {
            Err(NumericError::OutOfRange { kind, value })
        }
    }

    pub fn zero(kind: IntKind) -> Self {
        BoundedInt { kind, value: BigInt::zero() }
    }

    pub fn max(kind: IntKind) -> Self {
        BoundedInt { kind, value: kind.max_value() }
    }

    pub fn min(kind: IntKind) -> Self {
        BoundedInt { kind, value: kind.min_value() }
    }

    /// Shorthand for `uint256` values that are known to fit.
    pub fn uint256(v: u128) -> Self {
        BoundedInt { kind: IntKind::UINT256, value: BigInt::from(v) }
    }

    pub fn from_math(kind: IntKind, v: &MathInt) -> Result<Self, NumericError> {
        BoundedInt::new(kind, v.0.clone())
    }

    pub fn to_math(&self) -> MathInt {
        MathInt(self.value.clone())
    }

    pub fn kind(&self) -> IntKind {
        self.kind
    }

    pub fn value(&self) -> &BigInt {
        &self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.value.is_positive()
    }

    pub fn checked(&self, op: ArithOp, rhs: &BoundedInt) -> Result<BoundedInt, NumericError> {
        checked_arith(op, self, rhs)
    }

    /// Compares two values of the same kind.
    pub fn compare(&self, rhs: &BoundedInt) -> Result<Ordering, NumericError> {
        if self.kind != rhs.kind {
            return Err(NumericError::KindMismatch { left: self.kind, right: rhs.kind });
        }
        Ok(self.value.cmp(&rhs.value))
    }
}

impl fmt::Display for BoundedInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.value)
    }
}

/// Checked arithmetic on two values of the same kind.
///
/// The result carries the operands' kind and is exactly the mathematical
/// result; anything outside the range is reported as `Overflow`.
pub fn checked_arith(op: ArithOp, a: &BoundedInt, b: &BoundedInt) -> Result<BoundedInt, NumericError> {
    if a.kind != b.kind {
        return Err(NumericError::KindMismatch { left: a.kind, right: b.kind });
    }
    let exact = op
        .apply_unbounded(&a.value, &b.value)
        .ok_or(NumericError::DivisionByZero)?;
    if a.kind.contains(&exact) {
        Ok(BoundedInt { kind: a.kind, value: exact })
    } else {
        Err(NumericError::Overflow { op, kind: a.kind })
    }
}

/// An unbounded integer, the specification-level `int`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MathInt(pub BigInt);

impl MathInt {
    pub fn zero() -> Self {
        MathInt(BigInt::zero())
    }
}

impl From<i64> for MathInt {
    fn from(v: i64) -> Self {
        MathInt(BigInt::from(v))
    }
}

impl From<BigInt> for MathInt {
    fn from(v: BigInt) -> Self {
        MathInt(v)
    }
}

impl fmt::Display for MathInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::ops::Add for &MathInt {
    type Output = MathInt;
    fn add(self, rhs: &MathInt) -> MathInt {
        MathInt(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &MathInt {
    type Output = MathInt;
    fn sub(self, rhs: &MathInt) -> MathInt {
        MathInt(&self.0 - &rhs.0)
    }
}

impl std::iter::Sum for MathInt {
    fn sum<I: Iterator<Item = MathInt>>(iter: I) -> MathInt {
        MathInt(iter.map(|m| m.0).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u256(v: impl Into<BigInt>) -> BoundedInt {
        BoundedInt::new(IntKind::UINT256, v).unwrap()
    }

    #[test]
    fn ranges() {
        assert_eq!(IntKind::UINT256.max_value(), (BigInt::one() << 256usize) - 1);
        assert_eq!(IntKind::INT32.min_value(), BigInt::from(i32::MIN));
        assert_eq!(IntKind::INT32.max_value(), BigInt::from(i32::MAX));
        assert_eq!(IntKind::UINT64.max_value(), BigInt::from(u64::MAX));
        assert!(IntKind::new(8, false).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in IntKind::all() {
            assert_eq!(k.name().parse::<IntKind>().unwrap(), k);
        }
        assert!("uint7".parse::<IntKind>().is_err());
        assert!("word".parse::<IntKind>().is_err());
    }

    #[test]
    fn add_zero() {
        let r = checked_arith(ArithOp::Add, &u256(0), &u256(0)).unwrap();
        assert_eq!(r, u256(0));
    }

    #[test]
    fn add_overflow_at_max() {
        let max = BoundedInt::max(IntKind::UINT256);
        assert_eq!(
            checked_arith(ArithOp::Add, &max, &u256(1)),
            Err(NumericError::Overflow { op: ArithOp::Add, kind: IntKind::UINT256 })
        );
    }

    #[test]
    fn sub_below_zero_is_overflow_not_wrap() {
        assert!(matches!(
            checked_arith(ArithOp::Sub, &u256(0), &u256(1)),
            Err(NumericError::Overflow { .. })
        ));
    }

    #[test]
    fn div_by_zero_and_kind_mismatch() {
        assert_eq!(checked_arith(ArithOp::Div, &u256(3), &u256(0)), Err(NumericError::DivisionByZero));
        let a = BoundedInt::new(IntKind::INT32, 1).unwrap();
        assert!(matches!(
            checked_arith(ArithOp::Add, &a, &u256(1)),
            Err(NumericError::KindMismatch { .. })
        ));
    }

    #[test]
    fn signed_division_truncates_and_min_over_minus_one_overflows() {
        let k = IntKind::INT32;
        let a = BoundedInt::new(k, -7).unwrap();
        let b = BoundedInt::new(k, 2).unwrap();
        assert_eq!(checked_arith(ArithOp::Div, &a, &b).unwrap().value(), &BigInt::from(-3));
        assert_eq!(checked_arith(ArithOp::Rem, &a, &b).unwrap().value(), &BigInt::from(-1));
        let min = BoundedInt::min(k);
        let m1 = BoundedInt::new(k, -1).unwrap();
        assert!(matches!(checked_arith(ArithOp::Div, &min, &m1), Err(NumericError::Overflow { .. })));
    }

    #[test]
    fn to_math_examples() {
        assert_eq!(u256(42).to_math(), MathInt::from(42));
        assert_eq!(u256(0).to_math(), MathInt::from(0));
    }

    #[test]
    fn from_math_examples() {
        assert_eq!(BoundedInt::from_math(IntKind::UINT256, &MathInt::from(7)).unwrap(), u256(7));
        let two31 = MathInt(BigInt::one() << 31usize);
        assert!(matches!(
            BoundedInt::from_math(IntKind::INT32, &two31),
            Err(NumericError::OutOfRange { .. })
        ));
        let max160 = MathInt((BigInt::one() << 160usize) - 1);
        let v = BoundedInt::from_math(IntKind::UINT160, &max160).unwrap();
        assert_eq!(v.value(), &max160.0);
    }
}
