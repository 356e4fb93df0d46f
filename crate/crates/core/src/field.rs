//! Prime-field arithmetic over 64-bit moduli.
//!
//! Residues are stored as canonical `u64` values in `[0, q)`. Products go
//! through a 128-bit intermediate, so any prime below 2^64 works.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("root order must be positive")]
    ZeroOrder,
    #[error("lower bound {0} is below 2")]
    LowerBound(u64),
    #[error("no prime q >= {lower_bound} with q = 1 mod {order} fits in 64 bits")]
    SearchOverflow { order: u64, lower_bound: u64 },
    #[error("order {order} does not divide q - 1 = {}", .modulus - 1)]
    OrderDoesNotDivide { order: u64, modulus: u64 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// A prime field `F_q` with `q < 2^64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    modulus: u64,
}

impl PrimeField {
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        if !is_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(Self { modulus })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn reduce(&self, value: u64) -> u64 {
        value % self.modulus
    }

    /// Reduces a signed integer into the field.
    pub fn reduce_signed(&self, value: i64) -> u64 {
        (value as i128).rem_euclid(self.modulus as i128) as u64
    }

    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: self.reduce(value),
            field: *self,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let (sum, carry) = a.overflowing_add(b);
        if carry || sum >= self.modulus {
            sum.wrapping_sub(self.modulus)
        } else {
            sum
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.modulus - (b - a)
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.modulus)
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.modulus)
    }

    pub fn inv(&self, a: u64) -> Result<u64, FieldError> {
        if a.is_multiple_of(self.modulus) {
            return Err(FieldError::ZeroInverse);
        }
        Ok(self.pow(a, self.modulus - 2))
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.modulus)
    }
}

/// A residue tagged with the field it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: PrimeField,
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn pow(&self, exp: u64) -> Self {
        Self {
            value: self.field.pow(self.value, exp),
            field: self.field,
        }
    }

    pub fn inv(&self) -> Result<Self, FieldError> {
        Ok(Self {
            value: self.field.inv(self.value)?,
            field: self.field,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for FieldElement {
            type Output = FieldElement;

            fn $method(self, rhs: FieldElement) -> FieldElement {
                assert_eq!(self.field, rhs.field, "mixed-field arithmetic");
                FieldElement {
                    value: self.field.$method(self.value, rhs.value),
                    field: self.field,
                }
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Neg for FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        FieldElement {
            value: self.field.neg(self.value),
            field: self.field,
        }
    }
}

/// An element of multiplicative order exactly `order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootOfUnity {
    alpha: FieldElement,
    order: u64,
}

impl RootOfUnity {
    pub fn alpha(&self) -> FieldElement {
        self.alpha
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn field(&self) -> PrimeField {
        self.alpha.field
    }

    /// `alpha^exponent` for any signed exponent; the exponent is reduced mod
    /// the order first.
    pub fn pow(&self, exponent: i64) -> FieldElement {
        let e = (exponent as i128).rem_euclid(self.order as i128) as u64;
        self.alpha.pow(e)
    }

    /// `(alpha^point)^exponent`, i.e. `alpha^(point * exponent mod order)`.
    pub fn pow_at(&self, point: u64, exponent: i64) -> FieldElement {
        let n = self.order as i128;
        let e = ((point as i128 % n) * (exponent as i128).rem_euclid(n)).rem_euclid(n);
        self.alpha.pow(e as u64)
    }
}

/// Smallest prime `q >= lower_bound` with `order | q - 1`.
pub fn find_field_modulus(order: u64, lower_bound: u64) -> Result<u64, FieldError> {
    if order == 0 {
        return Err(FieldError::ZeroOrder);
    }
    if lower_bound < 2 {
        return Err(FieldError::LowerBound(lower_bound));
    }
    let overflow = FieldError::SearchOverflow { order, lower_bound };
    // first candidate of the form k*order + 1 that is >= lower_bound
    let k = (lower_bound - 1).div_ceil(order);
    let mut candidate = k
        .checked_mul(order)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(|| overflow.clone())?;
    loop {
        if is_prime(candidate) {
            return Ok(candidate);
        }
        candidate = candidate
            .checked_add(order)
            .ok_or_else(|| overflow.clone())?;
    }
}

/// The canonical primitive `order`-th root of unity in `field`: the
/// smallest residue whose multiplicative order is exactly `order`.
///
/// A generator `g` is located by testing candidates against the prime
/// factors of `q - 1`; the primitive roots are then `g^((q-1)/order * k)`
/// for `k` coprime to `order`.
pub fn nth_root_of_unity(field: PrimeField, order: u64) -> Result<RootOfUnity, FieldError> {
    if order == 0 {
        return Err(FieldError::ZeroOrder);
    }
    let q = field.modulus();
    let group_order = q - 1;
    if !group_order.is_multiple_of(order) {
        return Err(FieldError::OrderDoesNotDivide { order, modulus: q });
    }
    let factors = prime_factors(group_order);
    let generator = (2..q)
        .find(|&g| factors.iter().all(|&p| field.pow(g, group_order / p) != 1))
        // q = 2: the trivial group is generated by 1
        .unwrap_or(1);
    let base = field.pow(generator, group_order / order);
    let mut best = base;
    let mut current = 1u64;
    for k in 1..=order {
        current = field.mul(current, base);
        if gcd(k, order) == 1 && current < best {
            best = current;
        }
    }
    Ok(RootOfUnity {
        alpha: field.element(best),
        order,
    })
}

/// `sum_{i=1..N} (alpha^i)^exponent`, evaluated term by term.
pub fn power_sum(root: &RootOfUnity, exponent: i64) -> FieldElement {
    let field = root.field();
    (1..=root.order()).fold(field.zero(), |acc, i| acc + root.pow_at(i, exponent))
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u64;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    result
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Deterministic Miller-Rabin; the first twelve prime bases suffice below 2^64.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors in ascending order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            out.push(m);
            continue;
        }
        let f = pollard_rho(m);
        stack.push(f);
        stack.push(m / f);
    }
    out.sort_unstable();
    out.dedup();
    out
}

// Brent's variant; `n` is composite with no factor below 41.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_is_prime(n: u64) -> bool {
        n >= 2
            && (2..)
                .take_while(|k| k * k <= n)
                .all(|k| !n.is_multiple_of(k))
    }

    // Independent oracle: plain scan over every integer.
    fn naive_modulus(order: u64, lower: u64) -> u64 {
        (lower..)
            .find(|&q| naive_is_prime(q) && (q - 1) % order == 0)
            .unwrap()
    }

    fn naive_order(x: u64, q: u64) -> u64 {
        let mut acc = x % q;
        let mut k = 1;
        while acc != 1 {
            acc = acc * x % q;
            k += 1;
        }
        k
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(find_field_modulus(4, 2).unwrap(), 5);
        assert_eq!(find_field_modulus(13, 2).unwrap(), 53);
        assert_eq!(find_field_modulus(1, 2).unwrap(), 2);
        assert_eq!(naive_modulus(13, 2), 53);
    }

    #[test]
    fn modulus_matches_rescan() {
        for order in 1..60 {
            for lower in [2, 3, 10, 100, 1000] {
                let q = find_field_modulus(order, lower).unwrap();
                assert_eq!(
                    q,
                    naive_modulus(order, lower),
                    "order {order} lower {lower}"
                );
                assert!(q > order);
            }
        }
    }

    #[test]
    fn modulus_errors() {
        assert_eq!(find_field_modulus(0, 2), Err(FieldError::ZeroOrder));
        assert_eq!(find_field_modulus(3, 1), Err(FieldError::LowerBound(1)));
        assert!(matches!(
            find_field_modulus(1 << 62, u64::MAX - 5),
            Err(FieldError::SearchOverflow { .. })
        ));
    }

    #[test]
    fn root_examples() {
        let f5 = PrimeField::new(5).unwrap();
        assert_eq!(nth_root_of_unity(f5, 4).unwrap().alpha().value(), 2);
        assert_eq!(nth_root_of_unity(f5, 1).unwrap().alpha().value(), 1);
        let f17 = PrimeField::new(17).unwrap();
        assert_eq!(nth_root_of_unity(f17, 8).unwrap().alpha().value(), 2);
        assert_eq!(
            nth_root_of_unity(f17, 3),
            Err(FieldError::OrderDoesNotDivide {
                order: 3,
                modulus: 17
            })
        );
    }

    #[test]
    fn root_has_exact_order_and_is_smallest() {
        for order in 1..40u64 {
            let q = find_field_modulus(order, 2).unwrap();
            let field = PrimeField::new(q).unwrap();
            let root = nth_root_of_unity(field, order).unwrap();
            let alpha = root.alpha().value();
            assert_eq!(naive_order(alpha, q), order);
            let smallest = (1..q).find(|&x| naive_order(x, q) == order).unwrap();
            assert_eq!(alpha, smallest);
        }
    }

    #[test]
    fn root_in_large_field() {
        // q - 1 = 2^32 * 3 * 5 * 17 * 257 * 65537 style moduli exercise rho
        let q = 18446744069414584321; // 2^64 - 2^32 + 1
        let field = PrimeField::new(q).unwrap();
        let root = nth_root_of_unity(field, 1 << 10).unwrap();
        assert_eq!(root.alpha().pow(1 << 10).value(), 1);
        assert_ne!(root.alpha().pow(1 << 9).value(), 1);
        assert_eq!(prime_factors(q - 1), vec![2, 3, 5, 17, 257, 65537]);
    }

    #[test]
    fn power_sum_examples() {
        let f5 = PrimeField::new(5).unwrap();
        let root = nth_root_of_unity(f5, 4).unwrap();
        assert_eq!(power_sum(&root, 3).value(), 0);
        assert_eq!(power_sum(&root, 8).value(), 4);
        let f53 = PrimeField::new(53).unwrap();
        let root = nth_root_of_unity(f53, 13).unwrap();
        assert_eq!(power_sum(&root, 0).value(), 13);
    }

    #[test]
    fn power_sum_dichotomy() {
        for order in 1..30u64 {
            let q = find_field_modulus(order, 2).unwrap();
            let root = nth_root_of_unity(PrimeField::new(q).unwrap(), order).unwrap();
            let n = order as i64;
            for e in -2 * n..=2 * n {
                let expect = if e % n == 0 { order % q } else { 0 };
                assert_eq!(power_sum(&root, e).value(), expect, "N={order} e={e}");
            }
        }
    }

    #[test]
    fn primality_agrees_with_trial_division() {
        for n in 0..5000 {
            assert_eq!(is_prime(n), naive_is_prime(n), "{n}");
        }
        assert!(is_prime(u64::MAX - 58)); // largest 64-bit prime
        assert!(!is_prime(3215031751)); // strong pseudoprime to 2,3,5,7
        assert!(PrimeField::new(91).is_err());
    }

    #[test]
    fn zero_inverse() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(f.zero().inv(), Err(FieldError::ZeroInverse));
    }

    proptest! {
        #[test]
        fn field_axioms(a in any::<u64>(), b in any::<u64>(), c in any::<u64>(),
                        q in prop::sample::select(vec![2u64, 5, 53, 65537, 18446744069414584321, u64::MAX - 58])) {
            let f = PrimeField::new(q).unwrap();
            let (a, b, c) = (f.element(a), f.element(b), f.element(c));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!(a - b + b, a);
            prop_assert_eq!(a + (-a), f.zero());
            if !a.is_zero() {
                prop_assert_eq!(a * a.inv().unwrap(), f.one());
            }
            let naive = ((a.value() as u128 * b.value() as u128) % q as u128) as u64;
            prop_assert_eq!((a * b).value(), naive);
        }
    }
}
