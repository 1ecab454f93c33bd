//! 256-bit machine words and their conversions.

use bemp_core::Address;
use num_bigint::{BigInt, Sign};
use ruint::aliases::U256;
use sha2::{Digest, Sha256};

pub type Word = U256;

const SIGN_BIT: usize = 255;

pub fn is_negative(w: Word) -> bool {
    w.bit(SIGN_BIT)
}

pub fn to_unsigned(w: Word) -> BigInt {
    BigInt::from_bytes_be(Sign::Plus, &w.to_be_bytes::<32>())
}

/// Reads the word as a two's-complement signed integer.
pub fn to_signed(w: Word) -> BigInt {
    if is_negative(w) {
        -to_unsigned(w.wrapping_neg())
    } else {
        to_unsigned(w)
    }
}

/// Reduces `v` modulo 2^256 (two's complement for negatives).
pub fn from_bigint(v: &BigInt) -> Word {
    let modulus = BigInt::from(1) << 256usize;
    let reduced = ((v % &modulus) + &modulus) % &modulus;
    let (_, bytes) = reduced.to_bytes_be();
    Word::from_be_slice(&bytes)
}

pub fn from_address(a: Address) -> Word {
    Word::from_be_slice(&a.0)
}

/// The low 160 bits of a word.
pub fn to_address(w: Word) -> Address {
    let bytes = w.to_be_bytes::<32>();
    let mut out = [0u8; 20];
    out.copy_from_slice(&bytes[12..]);
    Address(out)
}

pub fn from_bool(b: bool) -> Word {
    if b {
        Word::from(1)
    } else {
        Word::ZERO
    }
}

/// Signed truncating division; zero divisor yields zero, MIN / -1 yields MIN.
pub fn sdiv(a: Word, b: Word) -> Word {
    if b.is_zero() {
        return Word::ZERO;
    }
    let (na, nb) = (is_negative(a), is_negative(b));
    let ma = if na { a.wrapping_neg() } else { a };
    let mb = if nb { b.wrapping_neg() } else { b };
    let q = ma / mb;
    if na != nb {
        q.wrapping_neg()
    } else {
        q
    }
}

/// Signed remainder with the sign of the dividend; zero divisor yields zero.
pub fn smod(a: Word, b: Word) -> Word {
    if b.is_zero() {
        return Word::ZERO;
    }
    let na = is_negative(a);
    let ma = if na { a.wrapping_neg() } else { a };
    let mb = if is_negative(b) { b.wrapping_neg() } else { b };
    let r = ma % mb;
    if na {
        r.wrapping_neg()
    } else {
        r
    }
}

pub fn slt(a: Word, b: Word) -> bool {
    match (is_negative(a), is_negative(b)) {
        (true, false) => true,
        (false, true) => false,
        _ => a < b,
    }
}

/// First four bytes of SHA-256 over `name`: function selectors, exception
/// tags and event topics all use it.
pub fn tag4(name: &str) -> [u8; 4] {
    let digest = Sha256::digest(name.as_bytes());
    [digest[0], digest[1], digest[2], digest[3]]
}

pub fn tag4_u32(name: &str) -> u32 {
    u32::from_be_bytes(tag4(name))
}

/// The tag shifted into the top four bytes of a word, as left by MSTORE at 0.
pub fn tag_word(name: &str) -> Word {
    Word::from(tag4_u32(name)) << 224
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: i64) -> Word {
        from_bigint(&BigInt::from(v))
    }

    #[test]
    fn signed_ops() {
        assert_eq!(to_signed(sdiv(s(-7), s(2))), BigInt::from(-3));
        assert_eq!(to_signed(smod(s(-7), s(2))), BigInt::from(-1));
        assert_eq!(to_signed(smod(s(7), s(-2))), BigInt::from(1));
        let min = Word::from(1) << 255;
        assert_eq!(sdiv(min, s(-1)), min);
        assert!(slt(s(-1), s(0)));
        assert!(!slt(s(3), s(-4)));
        assert_eq!(sdiv(s(5), Word::ZERO), Word::ZERO);
    }

    #[test]
    fn conversions() {
        assert_eq!(to_unsigned(s(-1)), (BigInt::from(1) << 256usize) - 1);
        assert_eq!(to_signed(s(-42)), BigInt::from(-42));
        let a = Address::from_u64(0xabc);
        assert_eq!(to_address(from_address(a)), a);
    }

    #[test]
    fn tags_are_stable() {
        assert_eq!(tag4("ExistingSmartMeter"), tag4("ExistingSmartMeter"));
        assert_ne!(tag4("MarketOpen"), tag4("MarketClose"));
        assert_eq!(tag_word("X") >> 224, Word::from(tag4_u32("X")));
    }
}
