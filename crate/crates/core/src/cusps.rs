//! Degree-zero cusp bookkeeping for level `4N`, `N` odd and square-free:
//! multiplicative partitions `(N_0, …, N_n)`, admissible types
//! `(partition, (d, d', ε))`, construction of a representative symmetric
//! matrix of each type by CRT, classification of a symmetric matrix back to
//! its type, and the vanishing criteria for the attached Eisenstein series.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::matz::{jordan_mod4, Eps, IntMatrix, Jordan2Data};
use crate::ring::{ComponentKind, DirichletCharacter};
use crate::{Error, Result};

/// Tuple `(N_0, …, N_n)` of pairwise coprime square-free factors with
/// product `N`; slot `s` records the primes where the cusp matrix has
/// rank `s`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MultiplicativePartition {
    parts: Vec<u64>,
}

impl MultiplicativePartition {
    pub fn new(parts: Vec<u64>) -> Result<Self> {
        let n: u64 = parts.iter().product();
        crate::odd_squarefree_primes(n)?;
        for (i, a) in parts.iter().enumerate() {
            crate::odd_squarefree_primes(*a)?;
            for b in parts.iter().skip(i + 1) {
                if a.gcd(b) != 1 {
                    return Err(Error::arg("partition parts must be pairwise coprime"));
                }
            }
        }
        Ok(MultiplicativePartition { parts })
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    pub fn degree(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn level_n(&self) -> u64 {
        self.parts.iter().product()
    }

    /// Slot of the prime `q`, i.e. the index `s` with `q | N_s`.
    pub fn slot_of(&self, q: u64) -> Option<usize> {
        self.parts.iter().position(|p| p % q == 0)
    }

    /// Moves prime `q` into slot `target`, leaving other primes in place.
    pub fn with_prime_moved(&self, q: u64, target: usize) -> Self {
        let mut parts = self.parts.clone();
        if let Some(cur) = self.slot_of(q) {
            parts[cur] /= q;
        }
        parts[target] *= q;
        MultiplicativePartition { parts }
    }

    pub fn label(&self) -> String {
        let strs: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        format!("({})", strs.join(","))
    }
}

/// A cusp label: a multiplicative partition plus the 2-adic data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdmissibleType {
    pub partition: MultiplicativePartition,
    pub d: usize,
    pub dprime: usize,
    #[serde(serialize_with = "serialize_eps")]
    pub eps: Eps,
}

fn serialize_eps<S: serde::Serializer>(eps: &Eps, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match eps {
        Eps::Plus => "+",
        Eps::Minus => "-",
    })
}

impl AdmissibleType {
    pub fn new(partition: MultiplicativePartition, d: usize, dprime: usize, eps: Eps) -> Result<Self> {
        let n = partition.degree();
        if d + dprime > n {
            return Err(Error::arg("need d + d' ≤ n"));
        }
        if eps == Eps::Minus && (dprime == 0 || dprime % 2 != 0) {
            return Err(Error::arg("ε = - needs d' even and positive"));
        }
        Ok(AdmissibleType {
            partition,
            d,
            dprime,
            eps,
        })
    }

    pub fn degree(&self) -> usize {
        self.partition.degree()
    }

    pub fn two_adic(&self) -> Jordan2Data {
        Jordan2Data {
            d: self.d,
            dprime: self.dprime,
            eps: self.eps,
        }
    }

    pub fn label(&self) -> String {
        format!("{}|({},{},{})", self.partition.label(), self.d, self.dprime, self.eps)
    }
}

/// All multiplicative partitions of `N` into `n + 1` slots, ordered
/// lexicographically by the slot assignment of the ascending primes;
/// there are `(n+1)^ω(N)` of them.
pub fn enumerate_partitions(n_level: u64, degree: usize) -> Result<Vec<MultiplicativePartition>> {
    let primes = crate::odd_squarefree_primes(n_level)?;
    let slots = degree + 1;
    let mut out = Vec::new();
    let mut assignment = vec![0usize; primes.len()];
    loop {
        let mut parts = vec![1u64; slots];
        for (p, s) in primes.iter().zip(&assignment) {
            parts[*s] *= p;
        }
        out.push(MultiplicativePartition { parts });
        // Odometer over slot assignments, most significant prime last.
        let mut i = 0;
        loop {
            if i == assignment.len() {
                return Ok(out);
            }
            assignment[i] += 1;
            if assignment[i] < slots {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

/// All admissible types for level `4N` at the given degree:
/// every partition combined with each `(d, d', ε)` satisfying `d + d' ≤ n`
/// and the ε rule.
pub fn enumerate_admissible(n_level: u64, degree: usize) -> Result<Vec<AdmissibleType>> {
    let partitions = enumerate_partitions(n_level, degree)?;
    let mut out = Vec::new();
    for partition in partitions {
        for d in 0..=degree {
            for dprime in 0..=(degree - d) {
                out.push(AdmissibleType::new(partition.clone(), d, dprime, Eps::Plus)?);
                if dprime > 0 && dprime % 2 == 0 {
                    out.push(AdmissibleType::new(partition.clone(), d, dprime, Eps::Minus)?);
                }
            }
        }
    }
    Ok(out)
}

/// Closed count of admissible types.
pub fn admissible_count(n_level: u64, degree: usize) -> Result<u64> {
    let omega = crate::odd_squarefree_primes(n_level)?.len() as u32;
    let mut per_partition = 0u64;
    for d in 0..=degree {
        for dprime in 0..=(degree - d) {
            per_partition += if dprime > 0 && dprime % 2 == 0 { 2 } else { 1 };
        }
    }
    Ok((degree as u64 + 1).pow(omega) * per_partition)
}

/// Builds a symmetric integer matrix of the given type by entrywise CRT:
/// congruent to `I_s ⊥ 0` mod each `N_s` and to the `(d, d', ε)` pattern
/// mod 4 (hyperbolic 2×2 blocks right after the `I_d` block when `ε = -`).
/// For `(0,0,+)` types the result is diagonal and divisible by 4.
pub fn build_type_matrix(sigma: &AdmissibleType) -> IntMatrix {
    let n = sigma.degree();
    let parts = sigma.partition.parts();
    let n_level = sigma.partition.level_n();
    let modulus = 4 * n_level;

    // Diagonal pattern mod 4 for the ε = + layout; ε = - replaces the
    // 2I_{d'} block by hyperbolic planes, handled below.
    let diag_mod4 = |i: usize| -> u64 {
        if i < sigma.d {
            1
        } else if i < sigma.d + sigma.dprime {
            if sigma.eps == Eps::Plus {
                2
            } else {
                0
            }
        } else {
            0
        }
    };

    let mut m = IntMatrix::zeros(n, n);
    for i in 0..n {
        // Entry ≡ 1 mod N_s for s > i-th position..., i.e. 1 mod N_s when
        // the slot index s ≥ i+1 in 1-based terms; with 0-based row i the
        // condition is s ≥ i+1.
        let mut residue_pairs: Vec<(u64, u64)> = vec![(4, diag_mod4(i))];
        for (s, part) in parts.iter().enumerate() {
            if *part > 1 {
                residue_pairs.push((*part, u64::from(s >= i + 1)));
            }
        }
        m[(i, i)] = BigInt::from(crt(&residue_pairs) as i64);
    }
    if sigma.eps == Eps::Minus {
        // Off-diagonal entries ≡ 2 mod 4 and ≡ 0 mod N.
        let off = crt(&[(4, 2), (n_level.max(1), 0)]);
        for t in 0..sigma.dprime / 2 {
            let i = sigma.d + 2 * t;
            let j = i + 1;
            m[(i, j)] = BigInt::from(off as i64);
            m[(j, i)] = BigInt::from(off as i64);
        }
    }
    debug_assert!(m.is_symmetric());
    debug_assert!(modulus > 0);
    m
}

/// CRT for pairwise coprime moduli.
fn crt(pairs: &[(u64, u64)]) -> u64 {
    let modulus: u64 = pairs.iter().map(|(m, _)| m).product();
    let mut acc: u128 = 0;
    for (m, r) in pairs {
        if *m == 1 {
            continue;
        }
        let cof = modulus / m;
        let inv = crate::ring::mod_inv_u64(cof % m, *m);
        let coef = (*r % m) as u128 * inv as u128 % *m as u128;
        acc = (acc + coef * cof as u128) % modulus as u128;
    }
    acc as u64
}

/// Classifies a symmetric matrix to its admissible type at level `4N`:
/// the slot of each prime `q | N` is `rank_q(M)` and the 2-adic data comes
/// from the Jordan splitting.
pub fn classify(m: &IntMatrix, n_level: u64) -> Result<AdmissibleType> {
    if !m.is_symmetric() {
        return Err(Error::arg("classification requires a symmetric matrix"));
    }
    let n = m.rows();
    let primes = crate::odd_squarefree_primes(n_level)?;
    let mut parts = vec![1u64; n + 1];
    for q in primes {
        let r = m.rank_mod_p(q);
        parts[r] *= q;
    }
    let j = jordan_mod4(m)?;
    AdmissibleType::new(MultiplicativePartition { parts }, j.d, j.dprime, j.eps)
}

/// Why (or whether) the Eisenstein series attached to a type vanishes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum VanishingStatus {
    /// Vanishes for every character and automorphy factor: plus-type with
    /// `d' > 0` forces a fourth root of unity into the multiplier relation.
    ZeroPlusTypeSign,
    /// Vanishes because some middle-slot prime carries a component with
    /// `χ_q² ≠ 1`.
    ZeroCharacterCondition { prime: u64 },
    /// `(0,0,+)` type whose middle-slot components all satisfy `χ_q² = 1`.
    Nonvanishing,
    /// Not decided by the implemented criteria (`ε = -` types and plus
    /// types with `d > 0, d' = 0`).
    Undetermined,
}

impl VanishingStatus {
    pub fn is_zero(&self) -> bool {
        matches!(
            self,
            VanishingStatus::ZeroPlusTypeSign | VanishingStatus::ZeroCharacterCondition { .. }
        )
    }
}

/// Applies the vanishing criteria to a type and a character mod `4N`.
///
/// The `Nonvanishing` verdict for `(0,0,+)` types assumes the character
/// condition is also sufficient, which holds exactly when the stabilizer
/// subgroup attached to the cusp acts trivially; the criteria implemented
/// here are the ones decidable from `(σ, χ)` alone.
pub fn vanishing_status(sigma: &AdmissibleType, chi: &DirichletCharacter) -> Result<VanishingStatus> {
    if chi.modulus() != 4 * sigma.partition.level_n() {
        return Err(Error::ModulusMismatch {
            expected: 4 * sigma.partition.level_n(),
            found: chi.modulus(),
        });
    }
    if sigma.dprime > 0 && sigma.eps == Eps::Plus {
        return Ok(VanishingStatus::ZeroPlusTypeSign);
    }
    if sigma.d == 0 && sigma.dprime == 0 {
        let n = sigma.degree();
        for (s, part) in sigma.partition.parts().iter().enumerate() {
            if s == 0 || s == n {
                continue;
            }
            let mut p = *part;
            let mut q = 3;
            while p > 1 {
                if p % q == 0 {
                    p /= q;
                    if chi.kind_at(q) == ComponentKind::Higher {
                        return Ok(VanishingStatus::ZeroCharacterCondition { prime: q });
                    }
                }
                q += 2;
            }
        }
        return Ok(VanishingStatus::Nonvanishing);
    }
    Ok(VanishingStatus::Undetermined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partition_counts() {
        assert_eq!(enumerate_partitions(15, 2).unwrap().len(), 9);
        assert_eq!(enumerate_partitions(1, 3).unwrap().len(), 1);
        let p3 = enumerate_partitions(3, 1).unwrap();
        let labels: Vec<String> = p3.iter().map(|p| p.label()).collect();
        assert_eq!(labels, vec!["(3,1)", "(1,3)"]);
        assert!(enumerate_partitions(9, 1).is_err());
        assert!(enumerate_partitions(6, 1).is_err());
    }

    #[test]
    fn admissible_counts() {
        assert_eq!(enumerate_admissible(1, 2).unwrap().len(), 7);
        assert_eq!(enumerate_admissible(1, 1).unwrap().len(), 3);
        assert_eq!(enumerate_admissible(15, 2).unwrap().len(), 63);
        for (n_level, degree) in [(1u64, 1usize), (1, 2), (1, 3), (3, 1), (15, 2), (3, 3)] {
            assert_eq!(
                enumerate_admissible(n_level, degree).unwrap().len() as u64,
                admissible_count(n_level, degree).unwrap(),
                "N={n_level} n={degree}"
            );
        }
    }

    #[test]
    fn trivial_type_matrix_is_zero() {
        let sigma = AdmissibleType::new(
            MultiplicativePartition::new(vec![1, 1, 1]).unwrap(),
            0,
            0,
            Eps::Plus,
        )
        .unwrap();
        assert!(build_type_matrix(&sigma).is_zero());
    }

    #[test]
    fn degree_one_crt_example() {
        // N = 3, partition (1, 3): entry ≡ 1 mod 3 and ≡ 0 mod 4 gives 4.
        let sigma = AdmissibleType::new(
            MultiplicativePartition::new(vec![1, 3]).unwrap(),
            0,
            0,
            Eps::Plus,
        )
        .unwrap();
        let m = build_type_matrix(&sigma);
        assert_eq!(m[(0, 0)], num_bigint::BigInt::from(4));
    }

    #[test]
    fn minus_type_pattern() {
        let sigma = AdmissibleType::new(
            MultiplicativePartition::new(vec![1, 1, 1]).unwrap(),
            0,
            2,
            Eps::Minus,
        )
        .unwrap();
        let m = build_type_matrix(&sigma);
        // M ≡ 2·(0 1; 1 0) mod 4.
        let four = num_bigint::BigInt::from(4);
        assert!(m[(0, 0)].mod_floor(&four).is_zero());
        assert!(m[(1, 1)].mod_floor(&four).is_zero());
        assert_eq!(m[(0, 1)].mod_floor(&four), num_bigint::BigInt::from(2));
    }

    #[test]
    fn built_matrices_satisfy_all_congruences() {
        for (n_level, degree) in [(3u64, 1usize), (15, 2), (3, 3)] {
            for sigma in enumerate_admissible(n_level, degree).unwrap() {
                let m = build_type_matrix(&sigma);
                for (s, part) in sigma.partition.parts().iter().enumerate() {
                    if *part == 1 {
                        continue;
                    }
                    let mb = num_bigint::BigInt::from(*part);
                    for i in 0..degree {
                        for j in 0..degree {
                            let expect = u64::from(i == j && i < s);
                            assert_eq!(
                                m[(i, j)].mod_floor(&mb),
                                num_bigint::BigInt::from(expect),
                                "σ={} mod {}",
                                sigma.label(),
                                part
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn classify_round_trip() {
        for (n_level, degree) in [(3u64, 1usize), (15, 2), (3, 3)] {
            for sigma in enumerate_admissible(n_level, degree).unwrap() {
                let m = build_type_matrix(&sigma);
                let back = classify(&m, n_level).unwrap();
                assert_eq!(back, sigma, "round trip at N={n_level} n={degree}");
            }
        }
    }

    #[test]
    fn classify_zero_matrix() {
        let t = classify(&IntMatrix::zeros(2, 2), 15).unwrap();
        assert_eq!(t.partition.parts(), &[15, 1, 1]);
        assert_eq!((t.d, t.dprime, t.eps), (0, 0, Eps::Plus));
    }

    #[test]
    fn classify_invariant_under_congruence() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (n_level, degree) in [(15u64, 2usize), (3, 2)] {
            for sigma in enumerate_admissible(n_level, degree).unwrap() {
                let m = build_type_matrix(&sigma);
                for _ in 0..20 {
                    let e = random_sl(&mut rng, degree, 6);
                    let conj = e.mul(&m).mul(&e.transpose());
                    assert_eq!(classify(&conj, n_level).unwrap(), sigma);
                }
            }
        }
    }

    fn random_sl(rng: &mut ChaCha8Rng, n: usize, steps: usize) -> IntMatrix {
        let mut e = IntMatrix::identity(n);
        if n == 1 {
            return e;
        }
        for _ in 0..steps {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n);
            while j == i {
                j = rng.gen_range(0..n);
            }
            let mut t = IntMatrix::identity(n);
            t[(i, j)] = num_bigint::BigInt::from(rng.gen_range(-2i64..=2));
            e = e.mul(&t);
        }
        e
    }

    #[test]
    fn vanishing_criteria() {
        use crate::ring::parse_character_spec;
        // Plus type with d' > 0 vanishes for any character.
        let sigma = AdmissibleType::new(
            MultiplicativePartition::new(vec![15, 1, 1]).unwrap(),
            0,
            1,
            Eps::Plus,
        )
        .unwrap();
        let chi = DirichletCharacter::trivial_mod_4n(15).unwrap();
        assert_eq!(
            vanishing_status(&sigma, &chi).unwrap(),
            VanishingStatus::ZeroPlusTypeSign
        );

        // (0,0,+) with 3 in a middle slot: order-2 component at 3 passes,
        // higher order vanishes.
        let sigma = AdmissibleType::new(
            MultiplicativePartition::new(vec![1, 15, 1]).unwrap(),
            0,
            0,
            Eps::Plus,
        )
        .unwrap();
        let chi = parse_character_spec(15, "quadratic@3").unwrap();
        assert_eq!(vanishing_status(&sigma, &chi).unwrap(), VanishingStatus::Nonvanishing);
        let chi4 = parse_character_spec(15, "gen^1:4@5").unwrap();
        assert_eq!(
            vanishing_status(&sigma, &chi4).unwrap(),
            VanishingStatus::ZeroCharacterCondition { prime: 5 }
        );
        // Same higher-order component in slot 0 is harmless.
        let sigma0 = AdmissibleType::new(
            MultiplicativePartition::new(vec![5, 3, 1]).unwrap(),
            0,
            0,
            Eps::Plus,
        )
        .unwrap();
        assert_eq!(vanishing_status(&sigma0, &chi4).unwrap(), VanishingStatus::Nonvanishing);

        // Minus types and (d, 0, +) with d > 0 stay undetermined.
        let sigma_minus = AdmissibleType::new(
            MultiplicativePartition::new(vec![15, 1, 1]).unwrap(),
            0,
            2,
            Eps::Minus,
        )
        .unwrap();
        assert_eq!(vanishing_status(&sigma_minus, &chi).unwrap(), VanishingStatus::Undetermined);
        let sigma_d = AdmissibleType::new(
            MultiplicativePartition::new(vec![15, 1, 1]).unwrap(),
            1,
            0,
            Eps::Plus,
        )
        .unwrap();
        assert_eq!(vanishing_status(&sigma_d, &chi).unwrap(), VanishingStatus::Undetermined);

        // Modulus mismatch is an error.
        let chi3 = DirichletCharacter::trivial_mod_4n(3).unwrap();
        assert!(vanishing_status(&sigma, &chi3).is_err());
    }
}
