//! Counting functions over `Z/qZ`: the subspace counts `β_q(b,c)` with the
//! products `μ_q`, `δ_q`, and the character-weighted counts
//! `sym_q^χ(b,c) = Σ_U χ_q(det U)` over symmetric `(b+c)×(b+c)` matrices
//! `U = (μ ν; ᵗν 0)` with `μ` of size `b×b`. Closed forms are paired with
//! an exhaustive enumeration oracle.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::ring::{legendre_i64, CycNumber};
use crate::{Error, Result};

/// Local character kind entering the `sym` values; components of higher
/// order force every weighted count (except the empty one) to vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CharKind {
    Trivial,
    Quadratic,
}

/// `μ_q(b,c) = ∏_{i<c} (q^{b-i} - 1)` and `δ_q(b,c) = ∏_{i<c} (q^{b-i} + 1)`;
/// empty products for `c = 0`.
pub fn mu_delta(q: u64, b: i64, c: i64) -> (BigInt, BigInt) {
    let mut mu = BigInt::one();
    let mut delta = BigInt::one();
    for i in 0..c {
        let p = pow_bigint(q, b - i);
        mu *= &p - 1;
        delta *= &p + 1;
    }
    (mu, delta)
}

fn pow_bigint(q: u64, e: i64) -> BigInt {
    assert!(e >= 0, "pow_bigint wants a nonnegative exponent");
    BigInt::from(q).pow(e as u32)
}

/// Number of `c`-dimensional subspaces of `(Z/qZ)^b`; zero outside
/// `0 ≤ c ≤ b`.
pub fn beta(q: u64, b: i64, c: i64) -> BigInt {
    if c < 0 || b < c {
        return BigInt::zero();
    }
    if c == 0 {
        return BigInt::one();
    }
    let (mu_bc, _) = mu_delta(q, b, c);
    let (mu_cc, _) = mu_delta(q, c, c);
    let (quot, rem) = num_integer::Integer::div_rem(&mu_bc, &mu_cc);
    debug_assert!(rem.is_zero());
    quot
}

/// Closed form for `sym_q^χ(b,c)`, split on the parity of `b + c` with
/// `ε = χ_q(-1) = (-1/q)` in the quadratic case. Zero whenever `c` exceeds
/// the Witt index bound `m = (b+c)/2` or an argument is negative.
pub fn sym_closed(q: u64, kind: CharKind, b: i64, c: i64) -> Result<CycNumber> {
    if q < 3 || q % 2 == 0 {
        return Err(Error::arg("sym counts require an odd prime"));
    }
    Ok(CycNumber::from_rational(sym_closed_rational(q, kind, b, c)))
}

fn sym_closed_rational(q: u64, kind: CharKind, b: i64, c: i64) -> BigRational {
    if b < 0 || c < 0 {
        return BigRational::zero();
    }
    if b == 0 && c == 0 {
        return BigRational::one();
    }
    let r = b + c;
    let m = r / 2;
    if m < c {
        return BigRational::zero();
    }
    let (mu_bb, _) = mu_delta(q, b, b);
    let (mu_mc, delta_mc) = mu_delta(q, m - c, m - c);
    let denom = mu_mc * delta_mc;
    let rat = |num: BigInt| BigRational::new(num, denom.clone());
    if r % 2 == 0 {
        match kind {
            CharKind::Trivial => rat(pow_bigint(q, m * m + m - c) * mu_bb),
            CharKind::Quadratic => {
                let eps = legendre_i64(-1, q) as i64;
                let sign = if m % 2 == 0 { 1 } else { eps };
                rat(pow_bigint(q, m * m) * mu_bb * BigInt::from(sign))
            }
        }
    } else {
        match kind {
            CharKind::Trivial => rat(pow_bigint(q, m * m + m) * mu_bb),
            CharKind::Quadratic => BigRational::zero(),
        }
    }
}

/// `sym_p^ψ(ℓ) = Σ_U (det U / p)` over symmetric `ℓ×ℓ` matrices; the
/// Legendre-weighted count entering the good-prime eigenvalues. Zero for
/// odd `ℓ`.
pub fn sym_legendre(p: u64, l: i64) -> Result<CycNumber> {
    sym_closed(p, CharKind::Quadratic, l, 0)
}

/// Exhaustive evaluation of `sym_q^χ(b,c)`: enumerates every symmetric
/// matrix `(μ ν; ᵗν 0)` over `Z/qZ` and accumulates `χ_q(det)`. This is the
/// oracle for [`sym_closed`]; the enumeration size is
/// `q^(b(b+1)/2 + bc)`.
pub fn sym_bruteforce(q: u64, kind: CharKind, b: i64, c: i64) -> Result<CycNumber> {
    if q < 3 || q % 2 == 0 {
        return Err(Error::arg("sym counts require an odd prime"));
    }
    if b < 0 || c < 0 {
        return Err(Error::arg("sym arguments must be nonnegative"));
    }
    let (b, c) = (b as usize, c as usize);
    let free = b * (b + 1) / 2 + b * c;
    let total = (q as u128).checked_pow(free as u32).ok_or(Error::Budget {
        needed: u128::MAX,
        budget: SYM_BRUTE_BUDGET,
    })?;
    if total > SYM_BRUTE_BUDGET {
        return Err(Error::Budget {
            needed: total,
            budget: SYM_BRUTE_BUDGET,
        });
    }
    let (trivial_count, quad_sum) = sym_enumerate(q, b, c);
    let v = match kind {
        CharKind::Trivial => trivial_count,
        CharKind::Quadratic => quad_sum,
    };
    Ok(CycNumber::from_int(v))
}

const SYM_BRUTE_BUDGET: u128 = 100_000_000;

/// One pass over the bordered symmetric matrices, accumulating both the
/// invertible count and the Legendre-weighted sum.
fn sym_enumerate(q: u64, b: usize, c: usize) -> (i64, i64) {
    let n = b + c;
    if n == 0 {
        return (1, 1);
    }
    let free = b * (b + 1) / 2 + b * c;
    let mut entries = vec![0u64; free];
    let mut trivial = 0i64;
    let mut quad = 0i64;
    let mut mat = vec![0u64; n * n];
    loop {
        // Fill the symmetric matrix from the free entries.
        let mut idx = 0;
        for i in 0..b {
            for j in i..b {
                mat[i * n + j] = entries[idx];
                mat[j * n + i] = entries[idx];
                idx += 1;
            }
            for j in b..n {
                mat[i * n + j] = entries[idx];
                mat[j * n + i] = entries[idx];
                idx += 1;
            }
        }
        for i in b..n {
            for j in b..n {
                mat[i * n + j] = 0;
            }
        }
        let d = det_mod(&mut mat.clone(), n, q);
        if d != 0 {
            trivial += 1;
            quad += legendre_i64(d as i64, q) as i64;
        }
        // Odometer.
        let mut k = 0;
        loop {
            if k == free {
                return (trivial, quad);
            }
            entries[k] += 1;
            if entries[k] < q {
                break;
            }
            entries[k] = 0;
            k += 1;
        }
    }
}

/// Determinant of an `n×n` matrix over `Z/qZ` by Gaussian elimination.
fn det_mod(a: &mut [u64], n: usize, q: u64) -> u64 {
    let mut det = 1u64;
    for col in 0..n {
        let Some(p) = (col..n).find(|&i| a[i * n + col] % q != 0) else {
            return 0;
        };
        if p != col {
            for j in 0..n {
                a.swap(p * n + j, col * n + j);
            }
            det = q - det % q;
        }
        let pv = a[col * n + col] % q;
        det = det * pv % q;
        let inv = crate::ring::mod_inv_u64(pv, q);
        for i in col + 1..n {
            let f = a[i * n + col] % q;
            if f != 0 {
                let f = f * inv % q;
                for j in col..n {
                    let t = f * a[col * n + j] % q;
                    a[i * n + j] = (a[i * n + j] + q - t) % q;
                }
            }
        }
    }
    det % q
}

/// Independent subspace-count oracle: enumerates all `c×b` matrices over
/// `Z/qZ`, keeps those of rank `c`, and counts distinct row spaces via the
/// reduced row echelon form.
pub fn subspace_count_bruteforce(q: u64, b: usize, c: usize) -> BigInt {
    if c == 0 {
        return BigInt::one();
    }
    if c > b {
        return BigInt::zero();
    }
    use std::collections::BTreeSet;
    let cells = b * c;
    let total = (q as u128).pow(cells as u32);
    assert!(total <= 10_000_000, "oracle enumeration too large");
    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    let mut entries = vec![0u64; cells];
    loop {
        let mut mat: Vec<u64> = entries.clone();
        if rref(&mut mat, c, b, q) == c {
            seen.insert(mat);
        }
        let mut k = 0;
        loop {
            if k == cells {
                return BigInt::from(seen.len());
            }
            entries[k] += 1;
            if entries[k] < q {
                break;
            }
            entries[k] = 0;
            k += 1;
        }
    }
}

/// Reduced row echelon form over `Z/qZ`; returns the rank.
fn rref(a: &mut [u64], rows: usize, cols: usize, q: u64) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&i| a[i * cols + col] % q != 0) else {
            continue;
        };
        for j in 0..cols {
            a.swap(p * cols + j, rank * cols + j);
        }
        let inv = crate::ring::mod_inv_u64(a[rank * cols + col] % q, q);
        for j in 0..cols {
            a[rank * cols + j] = a[rank * cols + j] * inv % q;
        }
        for i in 0..rows {
            if i != rank {
                let f = a[i * cols + col] % q;
                if f != 0 {
                    for j in 0..cols {
                        let t = f * a[rank * cols + j] % q;
                        a[i * cols + j] = (a[i * cols + j] + q - t) % q;
                    }
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}
