//! Generalized Gauss sums `G_C(D) = Σ_{U ∈ Z^{1,n}/Z^{1,n}D} e{2·ᵗUU·D^{-1}C}`
//! computed exactly by coset enumeration, together with the normalized theta
//! multiplier `conj(G_C(D))/√(det D)` and exact verification of the identities
//! the multiplier machinery rests on.

pub mod numeric;
pub mod verify;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::matz::{is_coprime_symmetric, smith_normal_form, IntMatrix};
use crate::ring::CycNumber;
use crate::{Error, Result};

/// Default cap on the number of coset representatives a single Gauss sum
/// may enumerate. Override per call or through the CLI.
pub const DEFAULT_GAUSS_BUDGET: u64 = 100_000;

/// Exact generalized Gauss sum for a coprime symmetric pair `(C D)` with
/// `det D ≠ 0`. Each term is the root of unity `exp(2πi·(U·D^{-1}C·ᵗU))`,
/// whose order divides `|det D|`.
pub fn gauss_sum(c: &IntMatrix, d: &IntMatrix) -> Result<CycNumber> {
    gauss_sum_with_budget(c, d, DEFAULT_GAUSS_BUDGET)
}

pub fn gauss_sum_with_budget(c: &IntMatrix, d: &IntMatrix, budget: u64) -> Result<CycNumber> {
    if !c.is_square() || !d.is_square() || c.rows() != d.rows() {
        return Err(Error::arg("Gauss sum needs square matrices of equal size"));
    }
    let det = d.det();
    if det.is_zero() {
        return Err(Error::Singular);
    }
    if !is_coprime_symmetric(c, d) {
        return Err(Error::arg("Gauss sum needs a coprime symmetric pair"));
    }
    let delta = det
        .abs()
        .to_u64()
        .filter(|&m| m <= budget)
        .ok_or_else(|| Error::Budget {
            needed: det.abs().to_u128().unwrap_or(u128::MAX),
            budget: budget as u128,
        })?;
    let n = d.rows();
    let neg = det.is_negative();

    // K = adj(D)·C, so U·D^{-1}C·ᵗU = (U·K·ᵗU)/det.
    let inv = d.inverse_rational()?;
    let mut k_mod = vec![0u64; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = BigRational::zero();
            for (t, inv_it) in inv[i].iter().enumerate() {
                acc += inv_it * BigRational::from_integer(c[(t, j)].clone());
            }
            let scaled = acc * BigRational::from_integer(det.clone());
            debug_assert!(scaled.denom().is_one(), "adj(D)·C must be integral");
            k_mod[i * n + j] = scaled
                .numer()
                .mod_floor(&BigInt::from(delta))
                .to_u64()
                .unwrap();
        }
    }

    // Coset representatives mod delta via the Smith normal form of D.
    let snf = smith_normal_form(d);
    let sizes: Vec<u64> = (0..n).map(|i| snf.s[(i, i)].to_u64().unwrap()).collect();
    debug_assert_eq!(sizes.iter().product::<u64>(), delta);
    let v_inv = snf.v.inverse_rational()?;
    let mut basis = vec![0u64; n * n];
    for i in 0..n {
        for j in 0..n {
            debug_assert!(v_inv[i][j].denom().is_one());
            basis[i * n + j] = v_inv[i][j]
                .numer()
                .mod_floor(&BigInt::from(delta))
                .to_u64()
                .unwrap();
        }
    }

    let mut counts = vec![0i64; delta as usize];
    let mut odo = vec![0u64; n];
    let mut rep = vec![0u64; n];
    loop {
        for j in 0..n {
            let mut acc = 0u128;
            for i in 0..n {
                acc += odo[i] as u128 * basis[i * n + j] as u128;
            }
            rep[j] = (acc % delta as u128) as u64;
        }
        let mut e = 0u128;
        for i in 0..n {
            let mut row = 0u128;
            for j in 0..n {
                row += k_mod[i * n + j] as u128 * rep[j] as u128 % delta as u128;
            }
            e += rep[i] as u128 * (row % delta as u128) % delta as u128;
        }
        let mut e = (e % delta as u128) as u64;
        if neg && e != 0 {
            e = delta - e;
        }
        counts[e as usize] += 1;

        let mut i = 0;
        loop {
            if i == n {
                let monomials = counts.iter().enumerate().filter_map(|(e, c)| {
                    (*c != 0).then(|| (e as u64, BigRational::from_integer(BigInt::from(*c))))
                });
                return Ok(CycNumber::from_monomials(delta, monomials));
            }
            odo[i] += 1;
            if odo[i] < sizes[i].max(1) {
                break;
            }
            odo[i] = 0;
            i += 1;
        }
    }
}

fn is_odd_prime(q: u64) -> bool {
    if q < 3 || q % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The classical quadratic Gauss sum `G_1(q) = Σ_{u mod q} ζ_q^{u²}`,
/// evaluated by direct summation. Equals `√q` for `q ≡ 1 (4)` and `i√q`
/// for `q ≡ 3 (4)`.
pub fn classical_gauss_sum(q: u64) -> Result<CycNumber> {
    if !is_odd_prime(q) {
        return Err(Error::arg(format!("{q} is not an odd prime")));
    }
    gauss_sum(&IntMatrix::identity(1), &IntMatrix::diag(&[q as i64]))
}

/// Exact `+√q` for an odd prime, as an element of `Q(ζ_{4q})`:
/// `G_1(q)` itself when `q ≡ 1 (4)` and `-i·G_1(q)` when `q ≡ 3 (4)`.
pub fn sqrt_prime(q: u64) -> Result<CycNumber> {
    let g = classical_gauss_sum(q)?;
    if q % 4 == 1 {
        Ok(g)
    } else {
        Ok(g.mul(&CycNumber::root_of_unity(4, -1)))
    }
}

/// Exact square root of a nonzero odd integer under the branch
/// `√d ∈ R_+ ∪ iR_+`: positive real for `d > 0` and `i·√|d|` for `d < 0`.
pub fn sqrt_of_odd_int(d: &BigInt) -> Result<CycNumber> {
    if d.is_zero() || d.is_even() {
        return Err(Error::arg("square root branch needs a nonzero odd integer"));
    }
    let mut m = d.abs().to_u64().ok_or_else(|| {
        Error::arg("determinant too large to factor for the square-root branch")
    })?;
    let mut acc = CycNumber::one();
    let mut rational = BigInt::one();
    let mut p = 3u64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            rational *= BigInt::from(p).pow(e / 2);
            if e % 2 == 1 {
                acc = acc.mul(&sqrt_prime(p)?);
            }
        }
        p += 2;
    }
    if m > 1 {
        acc = acc.mul(&sqrt_prime(m)?);
    }
    acc = acc.scale(&BigRational::from_integer(rational));
    if d.is_negative() {
        acc = acc.mul(&CycNumber::root_of_unity(4, 1));
    }
    Ok(acc)
}

/// Normalized theta multiplier `conj(G_C(D)) / √(det D)` for a coprime
/// symmetric pair with `4 | C`; has absolute value 1.
pub fn theta_multiplier(c: &IntMatrix, d: &IntMatrix) -> Result<CycNumber> {
    theta_multiplier_with_budget(c, d, DEFAULT_GAUSS_BUDGET)
}

pub fn theta_multiplier_with_budget(c: &IntMatrix, d: &IntMatrix, budget: u64) -> Result<CycNumber> {
    let four = BigInt::from(4);
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            if !(&c[(i, j)] % &four).is_zero() {
                return Err(Error::arg("theta multiplier needs 4 | C"));
            }
        }
    }
    let g = gauss_sum_with_budget(c, d, budget)?;
    let det = d.det();
    let root = sqrt_of_odd_int(&det)?;
    // 1/√det = √det / det.
    let inv_root = root.scale(&BigRational::from_integer(det).recip());
    Ok(g.conj().mul(&inv_root))
}
