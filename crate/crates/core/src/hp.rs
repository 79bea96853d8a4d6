//! High-precision arithmetic for closed-form constants.
//!
//! Several audited constants are tiny differences of large terms
//! (e.g. `8767591/192 - 65880 ln 2` is ~2e-4 as a difference of ~4.6e4
//! terms), so they are evaluated over arbitrary-precision rationals.
//! Irrational constants enter as 120-digit rational approximations, which
//! keeps every expression in this crate accurate to well below 1e-60 —
//! far beyond the 1e-9 self-check tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A high-precision real: a `BigRational`, exact for rational inputs and a
/// 120-digit approximation once an irrational constant is mixed in.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Hp(BigRational);

const DIGITS: &[(&str, &str)] = &[
    ("LN2", "0.693147180559945309417232121458176568075500134360255254120680009493393621969694715605863326996418687542001481020570685734"),
    ("PI", "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899862803482534211706798214808651328230665"),
    ("E", "2.71828182845904523536028747135266249775724709369995957496696762772407663035354759457138217852516642742746639193200305992"),
    ("SQRT2", "1.41421356237309504880168872420969807856967187537694807317667973799073247846210703885038753432764157273501384623091229702"),
    ("SQRT3", "1.73205080756887729352744634150587236694280525381038062805580697945193301690880003708114618675724857567562614141540670303"),
    ("SQRT5", "2.2360679774997896964091736687312762354406183596115257242708972454105209256378048994144144083787822749695081761507737835"),
    ("SQRT7", "2.6457513110645905905016157536392604257102591830824501803683344592010688232302836277603928864745436106150645783384974631"),
    ("SQRT10", "3.16227766016837933199889354443271853371955513932521682685750485279259443863923822134424810837930029518734728415284005515"),
    ("SQRT13", "3.60555127546398929311922126747049594625129657384524621271045305622716694829301044520461908201849071767351418202406354038"),
    ("SQRT17", "4.12310562561766054982140985597407702514719922537362043439863357309495434633762159358786365081068429668454404093921414162"),
];

fn decimal_to_rational(s: &str) -> BigRational {
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    let digits: String = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().unwrap();
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    BigRational::new(num, den)
}

fn constant(name: &str) -> Hp {
    let (_, s) = DIGITS.iter().find(|(n, _)| *n == name).unwrap();
    Hp(decimal_to_rational(s))
}

impl Hp {
    pub fn zero() -> Hp {
        Hp(BigRational::zero())
    }

    pub fn one() -> Hp {
        Hp(BigRational::one())
    }

    /// Exact rational `n/d`.
    pub fn rat(n: i64, d: i64) -> Hp {
        Hp(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn int(n: i64) -> Hp {
        Hp(BigRational::from_integer(BigInt::from(n)))
    }

    /// A decimal literal such as `"1.147"` taken exactly.
    pub fn dec(s: &str) -> Hp {
        Hp(decimal_to_rational(s))
    }

    pub fn ln2() -> Hp {
        constant("LN2")
    }

    pub fn pi() -> Hp {
        constant("PI")
    }

    pub fn e() -> Hp {
        constant("E")
    }

    pub fn sqrt_int(n: u32) -> Hp {
        match n {
            2 => constant("SQRT2"),
            3 => constant("SQRT3"),
            5 => constant("SQRT5"),
            7 => constant("SQRT7"),
            10 => constant("SQRT10"),
            13 => constant("SQRT13"),
            17 => constant("SQRT17"),
            _ => panic!("no embedded square root for {n}"),
        }
    }

    pub fn powi(&self, mut k: u32) -> Hp {
        let mut acc = Hp::one();
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    pub fn abs(&self) -> Hp {
        Hp(self.0.abs())
    }

    pub fn recip(&self) -> Hp {
        Hp(self.0.recip())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().expect("hp value out of f64 range")
    }

    /// Decimal rendering with `digits` fractional digits (round toward zero).
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = BigInt::from(10u32).pow(digits as u32);
        let scaled = (&self.0 * BigRational::from_integer(scale)).to_integer();
        let neg = scaled.is_negative();
        let mag = scaled.magnitude().to_string();
        let mag = if mag.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - mag.len()), mag)
        } else {
            mag
        };
        let (int_part, frac_part) = mag.split_at(mag.len() - digits);
        format!("{}{int_part}.{frac_part}", if neg { "-" } else { "" })
    }
}

impl fmt::Debug for Hp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hp({})", self.to_decimal(24))
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Hp {
            type Output = Hp;
            fn $method(self, rhs: &Hp) -> Hp {
                Hp((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for Hp {
            type Output = Hp;
            fn $method(self, rhs: Hp) -> Hp {
                Hp(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Hp> for Hp {
            type Output = Hp;
            fn $method(self, rhs: &Hp) -> Hp {
                Hp(self.0.$method(&rhs.0))
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);
impl_binop!(Div, div);

impl Neg for &Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(-&self.0)
    }
}

impl Neg for Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_arithmetic_is_exact() {
        let v = Hp::rat(1, 3) + Hp::rat(1, 6);
        assert_eq!(v, Hp::rat(1, 2));
    }

    #[test]
    fn ln2_matches_f64() {
        assert!((Hp::ln2().to_f64() - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn tiny_difference_of_large_terms() {
        // 8767591/192 - 65880 ln 2 is ~2.03e-4; f64 evaluation of the two
        // ~4.6e4 terms keeps only ~11 fractional digits.
        let v = Hp::rat(8_767_591, 192) - Hp::int(65_880) * Hp::ln2();
        let d = v.to_f64();
        assert!(d > 2.030e-4 && d < 2.031e-4, "{d}");
    }

    #[test]
    fn sqrt_constants_square_back() {
        let tiny = Hp::rat(1, 10).powi(100);
        for n in [2u32, 3, 5, 7, 10, 13, 17] {
            let err = (Hp::sqrt_int(n).powi(2) - Hp::int(i64::from(n))).abs();
            assert!(err < tiny);
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Hp::rat(-1, 8).to_decimal(4), "-0.1250");
        assert_eq!(Hp::rat(104, 3).to_decimal(3), "34.666");
    }
}
