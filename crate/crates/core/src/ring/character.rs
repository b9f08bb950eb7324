//! Dirichlet characters modulo `4N` (or modulo odd `N`), stored as one
//! local component per prime-power factor of the modulus.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::CycNumber;
use crate::{Error, Result};

/// Kind of a local component, as it enters the `sym` counting formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    Trivial,
    Quadratic,
    Higher,
}

/// Local component at a prime-power factor `m` (either `m = 4` or `m` an odd
/// prime): the character sends the fixed generator of `(Z/m)^×` to
/// `ζ_order^exponent`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharComponent {
    pub modulus: u64,
    pub generator: u64,
    pub order: u64,
    pub exponent: u64,
}

impl CharComponent {
    fn new(modulus: u64, exponent: u64) -> Self {
        let (generator, order) = if modulus == 4 {
            (3, 2)
        } else {
            (primitive_root(modulus), modulus - 1)
        };
        CharComponent {
            modulus,
            generator,
            order,
            exponent: exponent % order,
        }
    }

    pub fn kind(&self) -> ComponentKind {
        if self.exponent == 0 {
            ComponentKind::Trivial
        } else if 2 * self.exponent == self.order {
            ComponentKind::Quadratic
        } else {
            ComponentKind::Higher
        }
    }

    pub fn is_square_trivial(&self) -> bool {
        self.kind() != ComponentKind::Higher
    }

    fn index_of(&self, unit: u64) -> u64 {
        let mut acc = 1u64;
        for i in 0..self.order {
            if acc == unit {
                return i;
            }
            acc = acc * self.generator % self.modulus;
        }
        unreachable!("unit {unit} has no discrete log mod {}", self.modulus)
    }

    /// Value at an integer; zero on non-units.
    pub fn eval(&self, a: &BigInt) -> CycNumber {
        let m = BigInt::from(self.modulus);
        let r = a.mod_floor(&m).to_u64().expect("residue fits u64");
        if r.gcd(&self.modulus) != 1 {
            return CycNumber::zero();
        }
        let ind = self.index_of(r);
        CycNumber::root_of_unity(self.order, (self.exponent * ind) as i64)
    }

    /// Value at a rational whose denominator is a unit mod `modulus`.
    pub fn eval_rational(&self, x: &BigRational) -> CycNumber {
        let m = BigInt::from(self.modulus);
        let num = x.numer().mod_floor(&m).to_u64().unwrap();
        let den = x.denom().mod_floor(&m).to_u64().unwrap();
        if den.gcd(&self.modulus) != 1 {
            // Not a unit denominator: the value is undefined; treat as zero
            // residue so the caller sees the non-unit.
            return CycNumber::zero();
        }
        let r = num * super::mod_inv(den, self.modulus) % self.modulus;
        self.eval(&BigInt::from(r))
    }
}

/// Dirichlet character given by local components; the modulus is the product
/// of the component moduli (`4N` when the 2-part is present, `N` otherwise).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletCharacter {
    n_odd: u64,
    has_two_part: bool,
    components: Vec<CharComponent>,
}

impl DirichletCharacter {
    /// Trivial character modulo `4N`, `N` odd and square-free.
    pub fn trivial_mod_4n(n_odd: u64) -> Result<Self> {
        Self::from_exponents_mod_4n(n_odd, 0, &[])
    }

    /// Character modulo `4N` from the 2-part exponent (order 2) and per-prime
    /// exponents `(q, e_q)` with `χ_q(g_q) = ζ_{q-1}^{e_q}`.
    pub fn from_exponents_mod_4n(n_odd: u64, exp_four: u64, odd_exps: &[(u64, u64)]) -> Result<Self> {
        let primes = crate::odd_squarefree_primes(n_odd)?;
        let mut components = vec![CharComponent::new(4, exp_four)];
        components.extend(Self::odd_components(&primes, odd_exps)?);
        Ok(DirichletCharacter {
            n_odd,
            has_two_part: true,
            components,
        })
    }

    /// Character modulo odd square-free `N` (no component at 2).
    pub fn from_exponents_mod_n(n_odd: u64, odd_exps: &[(u64, u64)]) -> Result<Self> {
        let primes = crate::odd_squarefree_primes(n_odd)?;
        Ok(DirichletCharacter {
            n_odd,
            has_two_part: false,
            components: Self::odd_components(&primes, odd_exps)?,
        })
    }

    pub fn trivial_mod_n(n_odd: u64) -> Result<Self> {
        Self::from_exponents_mod_n(n_odd, &[])
    }

    /// Quadratic (Legendre) component at one prime `q | N`, trivial elsewhere;
    /// the 2-part is chosen so that `χ(-1) = 1`.
    pub fn quadratic_at_balanced(n_odd: u64, q: u64) -> Result<Self> {
        let exp_four = if q % 4 == 3 { 1 } else { 0 };
        Self::from_exponents_mod_4n(n_odd, exp_four, &[(q, (q - 1) / 2)])
    }

    fn odd_components(primes: &[u64], odd_exps: &[(u64, u64)]) -> Result<Vec<CharComponent>> {
        for (q, _) in odd_exps {
            if !primes.contains(q) {
                return Err(Error::arg(format!("prime {q} does not divide the level")));
            }
        }
        Ok(primes
            .iter()
            .map(|q| {
                let e = odd_exps
                    .iter()
                    .find(|(p, _)| p == q)
                    .map(|(_, e)| *e)
                    .unwrap_or(0);
                CharComponent::new(*q, e)
            })
            .collect())
    }

    pub fn modulus(&self) -> u64 {
        if self.has_two_part {
            4 * self.n_odd
        } else {
            self.n_odd
        }
    }

    pub fn odd_part(&self) -> u64 {
        self.n_odd
    }

    pub fn has_two_part(&self) -> bool {
        self.has_two_part
    }

    pub fn components(&self) -> &[CharComponent] {
        &self.components
    }

    pub fn component_at(&self, m: u64) -> Option<&CharComponent> {
        self.components.iter().find(|c| c.modulus == m)
    }

    pub fn kind_at(&self, q: u64) -> ComponentKind {
        self.component_at(q)
            .map(|c| c.kind())
            .unwrap_or(ComponentKind::Trivial)
    }

    /// `χ(a)`: zero on non-units, product of local values otherwise.
    pub fn eval(&self, a: &BigInt) -> CycNumber {
        self.eval_partial(self.modulus(), a)
    }

    pub fn eval_i64(&self, a: i64) -> CycNumber {
        self.eval(&BigInt::from(a))
    }

    /// Restriction `χ_Q` to the components whose modulus divides `Q`,
    /// evaluated at `a`. `Q` must be a product of component moduli (with 1
    /// and missing factors meaning the empty product).
    pub fn eval_partial(&self, q_part: u64, a: &BigInt) -> CycNumber {
        let mut acc = CycNumber::one();
        for c in &self.components {
            if q_part % c.modulus == 0 {
                let v = c.eval(a);
                if v.is_zero() {
                    return CycNumber::zero();
                }
                acc = acc.mul(&v);
            }
        }
        acc
    }

    /// `χ_Q(base)^e` with negative exponents meaning the conjugate value.
    pub fn eval_partial_pow(&self, q_part: u64, base: i64, e: i64) -> CycNumber {
        let v = self.eval_partial(q_part, &BigInt::from(base));
        value_pow(&v, e)
    }

    /// Restriction evaluated at a rational unit (denominator coprime to `Q`).
    pub fn eval_partial_rational(&self, q_part: u64, x: &BigRational) -> CycNumber {
        let mut acc = CycNumber::one();
        for c in &self.components {
            if q_part % c.modulus == 0 {
                let v = c.eval_rational(x);
                if v.is_zero() {
                    return CycNumber::zero();
                }
                acc = acc.mul(&v);
            }
        }
        acc
    }

    /// `χ(-1)` as `±1`.
    pub fn parity(&self) -> i32 {
        let v = self.eval_i64(-1);
        if v == CycNumber::one() {
            1
        } else {
            -1
        }
    }

    pub fn conjugate(&self) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| CharComponent::new(c.modulus, (c.order - c.exponent) % c.order))
            .collect();
        DirichletCharacter {
            n_odd: self.n_odd,
            has_two_part: self.has_two_part,
            components,
        }
    }

    /// `χ²` regarded as a character modulo the odd part `N`; the square of
    /// the 2-part is trivial and is dropped.
    pub fn squared_mod_n(&self) -> Self {
        let components = self
            .components
            .iter()
            .filter(|c| c.modulus != 4)
            .map(|c| CharComponent::new(c.modulus, 2 * c.exponent % c.order))
            .collect();
        DirichletCharacter {
            n_odd: self.n_odd,
            has_two_part: false,
            components,
        }
    }

    /// Canonical textual form, parseable by [`parse_character_spec`].
    pub fn to_spec_string(&self) -> String {
        let mut parts = Vec::new();
        for c in &self.components {
            let kind = match c.kind() {
                ComponentKind::Trivial => continue,
                ComponentKind::Quadratic => "quadratic".to_string(),
                ComponentKind::Higher => {
                    let g = c.exponent.gcd(&c.order);
                    format!("gen^{}:{}", c.exponent / g, c.order / g)
                }
            };
            parts.push(format!("{}@{}", kind, c.modulus));
        }
        if parts.is_empty() {
            "trivial".to_string()
        } else {
            parts.join(",")
        }
    }
}

/// `v^e` for a root of unity `v`; negative exponents use the conjugate.
pub(crate) fn value_pow(v: &CycNumber, e: i64) -> CycNumber {
    if v.is_zero() {
        return if e == 0 { CycNumber::one() } else { CycNumber::zero() };
    }
    let base = if e < 0 { v.conj() } else { v.clone() };
    base.pow(e.unsigned_abs() as u32)
}

fn primitive_root(q: u64) -> u64 {
    let factors = distinct_prime_factors(q - 1);
    'outer: for g in 2..q {
        for f in &factors {
            if pow_mod(g, (q - 1) / f, q) == 1 {
                continue 'outer;
            }
        }
        return g;
    }
    unreachable!("no primitive root mod {q}")
}

fn distinct_prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            out.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Parse `"kind@m,..."` into a character modulo `4N`; `kind` is `trivial`,
/// `quadratic`, or `gen^E:ORD` (generator image `ζ_ORD^E`), `m` is `4` or a
/// prime dividing `N`. Factors not mentioned get the trivial component.
pub fn parse_character_spec(n_odd: u64, spec: &str) -> Result<DirichletCharacter> {
    let primes = crate::odd_squarefree_primes(n_odd)?;
    let mut exp_four = 0u64;
    let mut odd_exps: Vec<(u64, u64)> = Vec::new();
    let spec = spec.trim();
    if !(spec.is_empty() || spec == "trivial") {
        for item in spec.split(',') {
            let (kind, m) = item
                .split_once('@')
                .ok_or_else(|| Error::arg(format!("character component `{item}` lacks `@modulus`")))?;
            let m: u64 = m
                .parse()
                .map_err(|_| Error::arg(format!("bad modulus in `{item}`")))?;
            let group_order = if m == 4 {
                2
            } else if primes.contains(&m) {
                m - 1
            } else {
                return Err(Error::arg(format!(
                    "modulus {m} is not 4 or a prime dividing {n_odd}"
                )));
            };
            let exponent = match kind {
                "trivial" => 0,
                "quadratic" => {
                    if group_order % 2 != 0 {
                        return Err(Error::arg(format!("no quadratic character mod {m}")));
                    }
                    group_order / 2
                }
                other => {
                    let rest = other
                        .strip_prefix("gen^")
                        .ok_or_else(|| Error::arg(format!("unknown component kind `{other}`")))?;
                    let (e, ord) = rest
                        .split_once(':')
                        .ok_or_else(|| Error::arg(format!("`{other}`: expected gen^E:ORD")))?;
                    let e: u64 = e.parse().map_err(|_| Error::arg("bad exponent"))?;
                    let ord: u64 = ord.parse().map_err(|_| Error::arg("bad order"))?;
                    if ord == 0 || group_order % ord != 0 {
                        return Err(Error::arg(format!(
                            "order {ord} does not divide the unit group order {group_order} mod {m}"
                        )));
                    }
                    e % ord * (group_order / ord)
                }
            };
            if m == 4 {
                exp_four = exponent;
            } else if odd_exps.iter().any(|(p, _)| *p == m) {
                return Err(Error::arg(format!("duplicate component at {m}")));
            } else {
                odd_exps.push((m, exponent));
            }
        }
    }
    DirichletCharacter::from_exponents_mod_4n(n_odd, exp_four, &odd_exps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::legendre_i64;

    #[test]
    fn trivial_character_values() {
        let chi = DirichletCharacter::trivial_mod_4n(3).unwrap();
        assert_eq!(chi.modulus(), 12);
        assert_eq!(chi.eval_i64(5), CycNumber::one());
        assert!(chi.eval_i64(6).is_zero());
        assert_eq!(chi.parity(), 1);
    }

    #[test]
    fn legendre_component_matches_symbol() {
        // Quadratic at 3, trivial at 4: the local value at 2 is (2/3) = -1,
        // while the full character mod 12 vanishes on non-units.
        let chi = DirichletCharacter::from_exponents_mod_4n(3, 0, &[(3, 1)]).unwrap();
        let v3 = chi.component_at(3).unwrap().eval(&BigInt::from(2));
        assert_eq!(v3, CycNumber::from_int(legendre_i64(2, 3) as i64));
        assert!(chi.eval_i64(2).is_zero());
        let chi5 = DirichletCharacter::quadratic_at_balanced(15, 5).unwrap();
        for a in [1i64, 2, 7, 11, 13, 14] {
            if a % 5 != 0 && a % 3 != 0 {
                let v5 = chi5.component_at(5).unwrap().eval(&BigInt::from(a));
                assert_eq!(v5, CycNumber::from_int(legendre_i64(a, 5) as i64));
            }
        }
    }

    #[test]
    fn multiplicativity_on_units() {
        let chi = parse_character_spec(15, "gen^1:4@5,quadratic@3,quadratic@4").unwrap();
        let m = 60i64;
        for a in 1..m {
            for b in 1..m {
                if num_integer::gcd(a, m) == 1 && num_integer::gcd(b, m) == 1 {
                    let lhs = chi.eval_i64(a * b);
                    let rhs = chi.eval_i64(a).mul(&chi.eval_i64(b));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn unit_inverse_consistency() {
        let chi = parse_character_spec(15, "gen^1:2@3,gen^1:4@5").unwrap();
        let m = chi.modulus() as i64;
        for a in 1..m {
            if num_integer::gcd(a, m) == 1 {
                let a_inv = (1..m).find(|x| (x * a) % m == 1).unwrap();
                let prod = chi.eval_i64(a).mul(&chi.eval_i64(a_inv));
                assert_eq!(prod, CycNumber::one());
            }
        }
    }

    #[test]
    fn balanced_quadratic_has_even_parity() {
        for (n, q) in [(3u64, 3u64), (5, 5), (15, 3), (15, 5)] {
            let chi = DirichletCharacter::quadratic_at_balanced(n, q).unwrap();
            assert_eq!(chi.parity(), 1, "q = {q}");
        }
    }

    #[test]
    fn spec_round_trip() {
        for s in ["trivial", "quadratic@3", "quadratic@3,quadratic@4", "gen^1:4@5"] {
            let chi = parse_character_spec(15, s).unwrap();
            let again = parse_character_spec(15, &chi.to_spec_string()).unwrap();
            assert_eq!(chi, again);
        }
        assert!(parse_character_spec(15, "quadratic@7").is_err());
        assert!(parse_character_spec(15, "gen^1:3@5").is_err());
    }

    #[test]
    fn squared_character_drops_two_part() {
        let chi = parse_character_spec(15, "gen^1:4@5,quadratic@4").unwrap();
        let sq = chi.squared_mod_n();
        assert_eq!(sq.modulus(), 15);
        assert_eq!(sq.kind_at(5), ComponentKind::Quadratic);
        assert_eq!(sq.kind_at(3), ComponentKind::Trivial);
    }

    #[test]
    fn rational_evaluation_uses_modular_inverse() {
        let chi = DirichletCharacter::quadratic_at_balanced(5, 5).unwrap();
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        // 1/3 ≡ 2 (mod 5), and (2/5) = -1.
        let v = chi.component_at(5).unwrap().eval_rational(&third);
        assert_eq!(v, CycNumber::from_int(-1));
    }
}
