//! Exact arithmetic in cyclotomic fields `Q(ζ_L)`.
//!
//! Elements are stored as sparse rational combinations of roots of unity
//! `ζ_L^e`, with exponents kept in a canonical set: writing
//! `e = Σ_p c_p · (L/p^a)  (mod L)` over the prime powers `p^a ‖ L`, an
//! exponent is canonical when every coordinate satisfies `c_p < φ(p^a)`.
//! These monomials form the tensor-product basis of `Q(ζ_L)`, so the zero
//! element has an empty term map and equality is a map comparison. This
//! representation keeps brute-force Gauss sums with `|det D|` in the
//! thousands exact without ever materializing `Φ_L`.

mod character;

pub use character::{parse_character_spec, CharComponent, ComponentKind, DirichletCharacter};

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::{Error, Result};

/// Largest field degree for which the generic norm-based inverse is attempted.
const MAX_INV_DEGREE: u64 = 4096;

#[derive(Clone, Copy, Debug)]
struct PrimePower {
    p: u64,
    phi: u64,
    step: u64,    // p^{a-1}
    pa: u64,      // p^a
    cof: u64,     // L / p^a
    cof_inv: u64, // cof^{-1} mod p^a
}

#[derive(Clone, Debug)]
struct LevelData {
    level: u64,
    pps: Vec<PrimePower>,
}

impl LevelData {
    fn new(level: u64) -> Self {
        assert!(level >= 1, "level must be positive");
        let mut pps = Vec::new();
        let mut m = level;
        let mut p = 2u64;
        while p * p <= m {
            if m % p == 0 {
                let mut pa = 1u64;
                while m % p == 0 {
                    m /= p;
                    pa *= p;
                }
                pps.push((p, pa));
            }
            p += 1;
        }
        if m > 1 {
            pps.push((m, m));
        }
        let pps = pps
            .into_iter()
            .map(|(p, pa)| {
                let cof = level / pa;
                PrimePower {
                    p,
                    phi: pa / p * (p - 1),
                    step: pa / p,
                    pa,
                    cof,
                    cof_inv: mod_inv(cof % pa, pa),
                }
            })
            .collect();
        LevelData { level, pps }
    }

    /// Coordinate of `e` at the given prime power: `c_p = e · cof^{-1} mod p^a`.
    fn coord(&self, pp: &PrimePower, e: u64) -> u64 {
        ((e % pp.pa) as u128 * pp.cof_inv as u128 % pp.pa as u128) as u64
    }
}

/// Modular inverse for u64 arguments; panics when not coprime.
pub(crate) fn mod_inv_u64(a: u64, m: u64) -> u64 {
    mod_inv(a, m)
}

fn mod_inv(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert!(r == 1, "mod_inv: {a} not invertible mod {m}");
    (t.rem_euclid(m as i128)) as u64
}

/// Exact element of the cyclotomic field `Q(ζ_L)`.
///
/// Immutable after construction; all operations are pure. Values produced
/// at different levels combine by lifting to the lcm level, so a single
/// computation effectively lives in one common field.
#[derive(Clone, Debug)]
pub struct CycNumber {
    level: u64,
    terms: BTreeMap<u64, BigRational>,
}

impl CycNumber {
    pub fn zero() -> Self {
        CycNumber {
            level: 1,
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        Self::from_rational(BigRational::from_integer(n.clone()))
    }

    pub fn from_rational(r: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(0u64, r);
        }
        CycNumber { level: 1, terms }
    }

    /// Sum `Σ c_e · ζ_L^e` assembled in one pass; the workhorse behind
    /// brute-force Gauss sums.
    pub fn from_monomials(level: u64, monomials: impl IntoIterator<Item = (u64, BigRational)>) -> Self {
        assert!(level >= 1);
        let ld = LevelData::new(level);
        let mut terms = BTreeMap::new();
        for (e, c) in monomials {
            insert_monomial(&mut terms, &ld, e % level, c);
        }
        CycNumber { level, terms }
    }

    /// `ζ_L^a`, stored at the smallest sufficient level `L/gcd(a, L)`.
    pub fn root_of_unity(level: u64, a: i64) -> Self {
        assert!(level >= 1, "level must be positive");
        let e = a.rem_euclid(level as i64) as u64;
        let g = e.gcd(&level);
        let (level, e) = if g > 0 { (level / g, e / g) } else { (1, 0) };
        let ld = LevelData::new(level);
        let mut terms = BTreeMap::new();
        insert_monomial(&mut terms, &ld, e, BigRational::one());
        CycNumber { level, terms }
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn terms(&self) -> &BTreeMap<u64, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the value as a rational when it lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    /// Lift to a field of level `target`, which must be a multiple of `level`.
    pub fn at_level(&self, target: u64) -> Self {
        assert!(
            target % self.level == 0,
            "cannot lift level {} to non-multiple {}",
            self.level,
            target
        );
        if target == self.level {
            return self.clone();
        }
        let f = target / self.level;
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e * f, c.clone()))
            .collect();
        CycNumber {
            level: target,
            terms,
        }
    }

    fn common_level(&self, other: &Self) -> u64 {
        self.level.lcm(&other.level)
    }

    pub fn add(&self, other: &Self) -> Self {
        let level = self.common_level(other);
        let mut out = self.at_level(level);
        for (e, c) in other.at_level(level).terms {
            merge_term(&mut out.terms, e, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        CycNumber {
            level: self.level,
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let level = self.common_level(other);
        let a = self.at_level(level);
        let b = other.at_level(level);
        let ld = LevelData::new(level);
        let mut terms = BTreeMap::new();
        for (e1, c1) in &a.terms {
            for (e2, c2) in &b.terms {
                let e = ((*e1 as u128 + *e2 as u128) % level as u128) as u64;
                insert_monomial(&mut terms, &ld, e, c1 * c2);
            }
        }
        CycNumber { level, terms }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        CycNumber {
            level: self.level,
            terms: self.terms.iter().map(|(e, c)| (*e, c * r)).collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(n)))
    }

    /// Complex conjugate, i.e. the image under `ζ_L ↦ ζ_L^{-1}`.
    pub fn conj(&self) -> Self {
        let ld = LevelData::new(self.level);
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let e = if *e == 0 { 0 } else { self.level - e };
            insert_monomial(&mut terms, &ld, e, c.clone());
        }
        CycNumber {
            level: self.level,
            terms,
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `conj(x) · x`, which is a nonnegative rational for sums of roots of
    /// unity scaled by rationals only when the value has that special shape;
    /// in general it is just an exact field element.
    pub fn norm_sq(&self) -> Self {
        self.conj().mul(self)
    }

    /// Multiplicative inverse of a nonzero element.
    ///
    /// Rational values invert directly; otherwise the inverse is obtained
    /// from the product of all nontrivial Galois conjugates divided by the
    /// field norm. Guarded by a degree bound to keep the cost predictable.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::arg("inverse of zero"));
        }
        if let Some(r) = self.as_rational() {
            return Ok(Self::from_rational(r.recip()));
        }
        let ld = LevelData::new(self.level);
        let degree: u64 = ld.pps.iter().map(|pp| pp.phi).product();
        if degree > MAX_INV_DEGREE {
            return Err(Error::arg(format!(
                "inverse in degree-{degree} field exceeds the supported bound"
            )));
        }
        let mut partial = Self::one();
        for t in 2..self.level {
            if t.gcd(&self.level) == 1 {
                partial = partial.mul(&self.galois(t));
            }
        }
        let norm = self.mul(&partial);
        let norm = norm
            .as_rational()
            .expect("product over the full Galois orbit is rational");
        assert!(!norm.is_zero(), "nonzero element has nonzero norm");
        Ok(partial.scale(&norm.recip()))
    }

    /// Image under the Galois automorphism `ζ_L ↦ ζ_L^t` (`gcd(t, L) = 1`).
    pub fn galois(&self, t: u64) -> Self {
        assert!(t.gcd(&self.level) == 1);
        let ld = LevelData::new(self.level);
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let e = (*e as u128 * t as u128 % self.level as u128) as u64;
            insert_monomial(&mut terms, &ld, e, c.clone());
        }
        CycNumber {
            level: self.level,
            terms,
        }
    }

    /// Numeric embedding `ζ_L ↦ exp(2πi/L)`.
    pub fn embed(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let theta = 2.0 * std::f64::consts::PI * (*e as f64) / (self.level as f64);
            let coeff = rational_to_f64(c);
            acc += Complex64::new(theta.cos(), theta.sin()) * coeff;
        }
        acc
    }

    /// JSON form: exact terms `exponent -> "num/den"` plus a 15-significant-digit
    /// numeric approximation of the embedding.
    pub fn to_json(&self) -> Value {
        let terms: BTreeMap<String, String> = self
            .terms
            .iter()
            .map(|(e, c)| (e.to_string(), format_rational(c)))
            .collect();
        let z = self.embed();
        json!({
            "level": self.level,
            "terms": terms,
            "approx": { "re": format!("{:.14e}", z.re), "im": format!("{:.14e}", z.im) },
        })
    }
}

fn merge_term(terms: &mut BTreeMap<u64, BigRational>, e: u64, c: BigRational) {
    use std::collections::btree_map::Entry;
    match terms.entry(e) {
        Entry::Vacant(v) => {
            if !c.is_zero() {
                v.insert(c);
            }
        }
        Entry::Occupied(mut o) => {
            let sum = o.get() + &c;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

/// Add `c · ζ_L^e` to `terms`, rewriting non-canonical exponents with the
/// sparse relation `ζ^{(p-1)p^{a-1} + v} = -Σ_{i<p-1} ζ^{i·p^{a-1} + v}`.
fn insert_monomial(terms: &mut BTreeMap<u64, BigRational>, ld: &LevelData, e: u64, c: BigRational) {
    if c.is_zero() {
        return;
    }
    for pp in &ld.pps {
        let cp = ld.coord(pp, e);
        if cp >= pp.phi {
            let v = cp - pp.phi;
            for i in 0..pp.p - 1 {
                let target = i * pp.step + v;
                let delta = (cp - target) as u128 * pp.cof as u128 % ld.level as u128;
                let e2 = ((e as u128 + ld.level as u128 - delta) % ld.level as u128) as u64;
                insert_monomial(terms, ld, e2, -c.clone());
            }
            return;
        }
    }
    merge_term(terms, e, c);
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl PartialEq for CycNumber {
    fn eq(&self, other: &Self) -> bool {
        let level = self.common_level(other);
        self.at_level(level).terms == other.at_level(level).terms
    }
}

impl Eq for CycNumber {}

impl fmt::Display for CycNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                if c.is_positive() {
                    write!(f, " + ")?;
                } else {
                    write!(f, " - ")?;
                }
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            let abs = c.abs();
            if *e == 0 {
                write!(f, "{}", format_rational(&abs))?;
            } else {
                if !abs.is_one() {
                    write!(f, "{}*", format_rational(&abs))?;
                }
                write!(f, "z{}^{}", self.level, e)?;
            }
            first = false;
        }
        Ok(())
    }
}

/// Exact `q^e` for integer (possibly negative) exponents.
pub fn rational_power(q: u64, e: i64) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(q));
    let mut acc = BigRational::one();
    for _ in 0..e.unsigned_abs() {
        acc *= &base;
    }
    if e < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// Legendre symbol `(a/q)` for an odd prime `q`.
pub fn legendre(a: &BigInt, q: u64) -> i32 {
    let qb = BigInt::from(q);
    let r = a.mod_floor(&qb);
    if r.is_zero() {
        return 0;
    }
    let r = r.to_u64().expect("residue fits u64");
    let mut acc = 1u64;
    let mut base = r % q;
    let mut exp = (q - 1) / 2;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % q;
        }
        base = base * base % q;
        exp >>= 1;
    }
    if acc == 1 {
        1
    } else {
        debug_assert_eq!(acc, q - 1);
        -1
    }
}

pub fn legendre_i64(a: i64, q: u64) -> i32 {
    legendre(&BigInt::from(a), q)
}
