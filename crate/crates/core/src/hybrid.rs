//! A rational that stays in machine words while it fits and falls back to
//! arbitrary precision otherwise. Used inside the simplex tableau, where most
//! entries are small and allocation dominates the cost of big arithmetic.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Num {
    /// Reduced `num / den` with `den > 0`.
    Small(i64, i64),
    Big(Box<Rational>),
}

impl Default for Num {
    fn default() -> Self {
        Num::Small(0, 1)
    }
}

fn from_i128(num: i128, den: i128) -> Num {
    debug_assert!(den > 0);
    let g = num.gcd(&den);
    let (num, den) = if g > 1 { (num / g, den / g) } else { (num, den) };
    match (i64::try_from(num), i64::try_from(den)) {
        (Ok(n), Ok(d)) => Num::Small(n, d),
        _ => Num::Big(Box::new(Rational::new_raw(BigInt::from(num), BigInt::from(den)))),
    }
}

impl Num {
    pub(crate) fn zero() -> Self {
        Num::Small(0, 1)
    }

    pub(crate) fn from_rational(q: &Rational) -> Self {
        match (q.numer().to_i64(), q.denom().to_i64()) {
            (Some(n), Some(d)) => Num::Small(n, d),
            _ => Num::Big(Box::new(q.clone())),
        }
    }

    fn from_big(q: Rational) -> Self {
        match (q.numer().to_i64(), q.denom().to_i64()) {
            (Some(n), Some(d)) => Num::Small(n, d),
            _ => Num::Big(Box::new(q)),
        }
    }

    pub(crate) fn to_rational(&self) -> Rational {
        match self {
            Num::Small(n, d) => Rational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Num::Big(q) => (**q).clone(),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        match self {
            Num::Small(n, _) => *n == 0,
            Num::Big(q) => q.is_zero(),
        }
    }

    pub(crate) fn is_positive(&self) -> bool {
        match self {
            Num::Small(n, _) => *n > 0,
            Num::Big(q) => q.is_positive(),
        }
    }

    #[cfg(test)]
    pub(crate) fn neg(&self) -> Num {
        match self {
            Num::Small(n, d) => match n.checked_neg() {
                Some(n) => Num::Small(n, *d),
                None => Num::from_big(-self.to_rational()),
            },
            Num::Big(q) => Num::from_big(-(**q).clone()),
        }
    }

    pub(crate) fn mul(&self, other: &Num) -> Num {
        match (self, other) {
            (Num::Small(a, b), Num::Small(c, d)) => {
                if *a == 0 || *c == 0 {
                    return Num::zero();
                }
                let g1 = a.gcd(d);
                let g2 = c.gcd(b);
                let num = (*a / g1) as i128 * (*c / g2) as i128;
                let den = (*b / g2) as i128 * (*d / g1) as i128;
                match (i64::try_from(num), i64::try_from(den)) {
                    (Ok(n), Ok(d)) => Num::Small(n, d),
                    _ => from_i128(num, den),
                }
            }
            _ => Num::from_big(self.to_rational() * other.to_rational()),
        }
    }

    pub(crate) fn div(&self, other: &Num) -> Num {
        self.mul(&other.recip())
    }

    pub(crate) fn recip(&self) -> Num {
        match self {
            Num::Small(n, d) if *n > 0 => Num::Small(*d, *n),
            Num::Small(n, d) if *n != i64::MIN => Num::Small(-*d, -*n),
            _ => Num::from_big(self.to_rational().recip()),
        }
    }

    pub(crate) fn sub(&self, other: &Num) -> Num {
        match (self, other) {
            (_, Num::Small(0, _)) => self.clone(),
            (Num::Small(a, b), Num::Small(c, d)) => {
                if b == d {
                    return from_i128(*a as i128 - *c as i128, *b as i128);
                }
                let g = b.gcd(d);
                let num = *a as i128 * (*d / g) as i128 - *c as i128 * (*b / g) as i128;
                let den = (*b / g) as i128 * *d as i128;
                from_i128(num, den)
            }
            _ => Num::from_big(self.to_rational() - other.to_rational()),
        }
    }

    #[cfg(test)]
    pub(crate) fn add(&self, other: &Num) -> Num {
        self.sub(&other.neg())
    }

    /// `self −= f·p`
    pub(crate) fn sub_mul(&mut self, f: &Num, p: &Num) {
        let prod = f.mul(p);
        *self = self.sub(&prod);
    }
}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Num::Small(a, b), Num::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_rational().cmp(&other.to_rational()),
        }
    }
}
