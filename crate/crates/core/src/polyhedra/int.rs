//! Small-integer helpers shared by the constraint machinery.
//!
//! Constraint coefficients live in `i64`. Every arithmetic step that could
//! overflow goes through the checked helpers here; an overflow is an internal
//! invariant violation and aborts with a descriptive panic.

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

pub(crate) fn lcm(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        return 0;
    }
    mul(a / gcd(a, b), b).abs()
}

#[inline]
pub(crate) fn mul(a: i64, b: i64) -> i64 {
    a.checked_mul(b)
        .unwrap_or_else(|| panic!("coefficient overflow in {a} * {b}"))
}

#[inline]
pub(crate) fn add(a: i64, b: i64) -> i64 {
    a.checked_add(b)
        .unwrap_or_else(|| panic!("coefficient overflow in {a} + {b}"))
}

/// Floor division with a positive divisor.
#[inline]
pub(crate) fn floor_div(a: i64, d: i64) -> i64 {
    debug_assert!(d > 0);
    a.div_euclid(d)
}

/// Splits `a` into `q * d + r` with `r` in `(-d/2, d/2]`.
#[inline]
pub(crate) fn symmetric_divmod(a: i64, d: i64) -> (i64, i64) {
    let mut r = a.rem_euclid(d);
    if 2 * r > d {
        r -= d;
    }
    ((a - r) / d, r)
}

/// Exact rational with `i128` parts, used by the simplex. Operations return
/// `None` on overflow so the caller can give up conservatively.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Rat {
    num: i128,
    den: i128,
}

fn gcd128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i128
}

impl Rat {
    pub const ZERO: Rat = Rat { num: 0, den: 1 };

    pub fn int(v: i128) -> Rat {
        Rat { num: v, den: 1 }
    }

    fn make(num: i128, den: i128) -> Option<Rat> {
        if den == 0 {
            return None;
        }
        let g = gcd128(num, den);
        let (mut n, mut d) = if g > 1 { (num / g, den / g) } else { (num, den) };
        if d < 0 {
            n = n.checked_neg()?;
            d = d.checked_neg()?;
        }
        Some(Rat { num: n, den: d })
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }

    pub fn floor(self) -> i128 {
        self.num.div_euclid(self.den)
    }

    pub fn ceil(self) -> i128 {
        -(-self.num).div_euclid(self.den)
    }

    pub fn add(self, o: Rat) -> Option<Rat> {
        if self.den == o.den {
            return Rat::make(self.num.checked_add(o.num)?, self.den);
        }
        let n = self
            .num
            .checked_mul(o.den)?
            .checked_add(o.num.checked_mul(self.den)?)?;
        Rat::make(n, self.den.checked_mul(o.den)?)
    }

    pub fn sub(self, o: Rat) -> Option<Rat> {
        self.add(o.neg()?)
    }

    pub fn neg(self) -> Option<Rat> {
        Some(Rat { num: self.num.checked_neg()?, den: self.den })
    }

    pub fn mul(self, o: Rat) -> Option<Rat> {
        if self.num == 0 || o.num == 0 {
            return Some(Rat::ZERO);
        }
        let g1 = gcd128(self.num, o.den);
        let g2 = gcd128(o.num, self.den);
        let n = (self.num / g1).checked_mul(o.num / g2)?;
        let d = (self.den / g2).checked_mul(o.den / g1)?;
        Rat::make(n, d)
    }

    pub fn div(self, o: Rat) -> Option<Rat> {
        if o.num == 0 {
            return None;
        }
        self.mul(Rat::make(o.den, o.num)?)
    }

    pub fn cmp(self, o: Rat) -> Option<std::cmp::Ordering> {
        let l = self.num.checked_mul(o.den)?;
        let r = o.num.checked_mul(self.den)?;
        Some(l.cmp(&r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_divmod_ranges() {
        for d in 1..9 {
            for a in -40..40 {
                let (q, r) = symmetric_divmod(a, d);
                assert_eq!(q * d + r, a);
                assert!(2 * r > -d && 2 * r <= d, "a={a} d={d} r={r}");
            }
        }
    }

    #[test]
    fn rat_arith() {
        let a = Rat::make(1, 3).unwrap();
        let b = Rat::make(-1, 6).unwrap();
        assert_eq!(a.add(b).unwrap(), Rat::make(1, 6).unwrap());
        assert_eq!(a.mul(b).unwrap(), Rat::make(-1, 18).unwrap());
        assert_eq!(Rat::make(-7, 2).unwrap().floor(), -4);
        assert_eq!(Rat::make(-7, 2).unwrap().ceil(), -3);
    }
}
