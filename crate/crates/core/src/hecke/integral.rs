//! Integral-weight companion eigenvalues (weight `k'`, level `N`,
//! character modulo `N`) and the degree-one comparison: the `T_1(p²)`
//! eigenvalue of the half-integral series at `(k, χ)` equals the `T(p)`
//! eigenvalue of the integral series at `(k-1, χ²)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{eigenvalue_good, eval_on_pair, HalfIntegralContext};
use crate::counts::{beta, sym_closed, CharKind};
use crate::cusps::{build_type_matrix, enumerate_partitions, AdmissibleType, MultiplicativePartition};
use crate::matz::Eps;
use crate::ring::{rational_power, CycNumber, DirichletCharacter};
use crate::{Error, Result};

/// Fixed data of an integral-weight computation: degree, weight `k'`,
/// odd square-free level `N`, character modulo `N`.
#[derive(Clone, Debug)]
pub struct IntegralContext {
    pub degree: usize,
    pub weight: u64,
    pub n_level: u64,
    pub chi: DirichletCharacter,
}

impl IntegralContext {
    pub fn new(degree: usize, weight: u64, n_level: u64, chi: DirichletCharacter) -> Result<Self> {
        if degree == 0 || weight == 0 {
            return Err(Error::arg("degree and weight must be positive"));
        }
        crate::odd_squarefree_primes(n_level)?;
        if chi.has_two_part() || chi.odd_part() != n_level {
            return Err(Error::ModulusMismatch {
                expected: n_level,
                found: chi.modulus(),
            });
        }
        Ok(IntegralContext {
            degree,
            weight,
            n_level,
            chi,
        })
    }
}

/// Operator selector for the integral-weight displays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralOp {
    /// `T(q)` at a prime `q | N`.
    TQ { q: u64 },
    /// `T_j(q²)` at a prime `q | N`.
    TJQ2 { q: u64, j: usize },
    /// `T(p)` at a prime `p ∤ N`.
    TP { p: u64 },
    /// `T_j(p²)` at a prime `p ∤ N`.
    TJP2 { p: u64, j: usize },
}

/// Exact eigenvalue of the selected operator on the integral-weight series
/// labeled by `sigma`.
pub fn eigenvalue_integral(
    ctx: &IntegralContext,
    sigma: &MultiplicativePartition,
    op: IntegralOp,
) -> Result<CycNumber> {
    let n = ctx.degree;
    if sigma.degree() != n {
        return Err(Error::arg("partition degree mismatch"));
    }
    let kp = ctx.weight as i64;
    match op {
        IntegralOp::TQ { q } => {
            require_divides(ctx, q)?;
            let d = sigma.slot_of(q).unwrap() as i64;
            let m_sigma = build_type_matrix(&AdmissibleType::new(sigma.clone(), 0, 0, Eps::Plus)?);
            let qr = BigRational::from_integer(BigInt::from(q));
            let xd = |i: usize| -> BigRational {
                if (i as i64) < d {
                    qr.clone()
                } else {
                    BigRational::one()
                }
            };
            let m_diag: Vec<BigRational> = (0..n)
                .map(|i| xd(i) * BigRational::from_integer(m_sigma[(i, i)].clone()) / qr.clone())
                .collect();
            let n_diag: Vec<BigRational> = (0..n).map(xd).collect();
            let pair = eval_on_pair(&ctx.chi, ctx.n_level / q, &m_diag, &n_diag)?;
            Ok(pair.scale(&rational_power(q, kp * d - d * (d + 1) / 2)))
        }
        IntegralOp::TJQ2 { q, j } => {
            require_divides(ctx, q)?;
            if j > n {
                return Err(Error::arg("j out of range"));
            }
            let d = sigma.slot_of(q).unwrap() as i64;
            let jj = j as i64;
            let parts = sigma.parts();
            let n0p = strip(parts[0], q);
            let nnp = strip(parts[n], q);
            let mut total = CycNumber::zero();
            for s in 0..=j {
                let si = s as i64;
                let b = beta(q, d, si) * beta(q, n as i64 - d, jj - si);
                if b.is_zero() {
                    continue;
                }
                let mut term = ctx.chi.eval_partial_pow(n0p, q as i64, 2 * si);
                term = term.mul(&ctx.chi.eval_partial_pow(nnp, q as i64, 2 * (jj - si)));
                term = term.scale(&rational_power(q, si * (2 * kp - 2 * d + si - jj - 1)));
                term = term.scale(&BigRational::from_integer(b));
                total = total.add(&term);
            }
            Ok(total.scale(&rational_power(q, jj * d)))
        }
        IntegralOp::TP { p } => {
            require_coprime(ctx, p)?;
            // Leading character product ∏_{0<d≤n} χ_{N_d}(p^d).
            let mut acc = CycNumber::one();
            for (d, part) in sigma.parts().iter().enumerate().skip(1) {
                acc = acc.mul(&ctx.chi.eval_partial_pow(*part, p as i64, d as i64));
            }
            let nn_part = sigma.parts()[n];
            let base = ctx
                .chi
                .eval_i64(p as i64)
                .mul(&ctx.chi.eval_partial_pow(nn_part, p as i64, 2).conj());
            for i in 1..=(n as i64) {
                let factor = base
                    .scale(&rational_power(p, kp - i))
                    .add(&CycNumber::one());
                acc = acc.mul(&factor);
            }
            Ok(acc)
        }
        IntegralOp::TJP2 { p, j } => {
            require_coprime(ctx, p)?;
            if j > n {
                return Err(Error::arg("j out of range"));
            }
            let jj = j as i64;
            let nn_part = sigma.parts()[n];
            let mut total = CycNumber::zero();
            for r in 0..=j {
                for s in 0..=(j - r) {
                    let (ri, si) = (r as i64, s as i64);
                    let b = beta(p, jj, ri) * beta(p, jj - ri, si);
                    if b.is_zero() {
                        continue;
                    }
                    let sym = sym_closed(p, CharKind::Trivial, jj - ri - si, 0)?;
                    if sym.is_zero() {
                        continue;
                    }
                    let e = kp * (jj - ri + si) - (jj - ri) * (n as i64 + 1);
                    let mut term = ctx
                        .chi
                        .eval(&BigInt::from(p).pow((jj - ri + si) as u32));
                    term = term.mul(&ctx.chi.eval_partial_pow(nn_part, p as i64, 2 * (ri - si)));
                    term = term.scale(&rational_power(p, e));
                    term = term.scale(&BigRational::from_integer(b));
                    term = term.mul(&sym);
                    total = total.add(&term);
                }
            }
            Ok(total.scale(&BigRational::from_integer(beta(p, n as i64, jj))))
        }
    }
}

fn strip(part: u64, q: u64) -> u64 {
    if part % q == 0 {
        part / q
    } else {
        part
    }
}

fn require_divides(ctx: &IntegralContext, q: u64) -> Result<()> {
    if q < 3 || ctx.n_level % q != 0 {
        return Err(Error::arg(format!("{q} does not divide N = {}", ctx.n_level)));
    }
    Ok(())
}

fn require_coprime(ctx: &IntegralContext, p: u64) -> Result<()> {
    if p < 3 || p % 2 == 0 || ctx.n_level % p == 0 {
        return Err(Error::arg(format!("{p} must be an odd prime coprime to N")));
    }
    Ok(())
}

/// One row of the degree-one comparison table.
#[derive(Clone, Debug, Serialize)]
pub struct ShimuraRow {
    pub sigma: String,
    pub half_integral: serde_json::Value,
    pub integral: serde_json::Value,
    pub equal: bool,
}

/// Compares, for every partition `σ = (N₀, N₁)` of `N`, the `T_1(p²)`
/// eigenvalue at weight `k/2`, character `χ`, with the `T(p)` eigenvalue
/// at weight `k-1`, character `χ²`.
pub fn shimura_comparison(
    n_level: u64,
    weight_num: u64,
    chi: &DirichletCharacter,
    p: u64,
) -> Result<Vec<ShimuraRow>> {
    let half = HalfIntegralContext::new(1, weight_num, n_level, chi.clone())?;
    let integral = IntegralContext::new(1, weight_num - 1, n_level, chi.squared_mod_n())?;
    let mut rows = Vec::new();
    for sigma in enumerate_partitions(n_level, 1)? {
        let lhs = eigenvalue_good(&half, &sigma, 1, p)?;
        let rhs = eigenvalue_integral(&integral, &sigma, IntegralOp::TP { p })?;
        rows.push(ShimuraRow {
            sigma: sigma.label(),
            equal: lhs == rhs,
            half_integral: lhs.to_json(),
            integral: rhs.to_json(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::parse_character_spec;

    fn ictx(n: usize, k: u64, level: u64, exps: &[(u64, u64)]) -> IntegralContext {
        let chi = DirichletCharacter::from_exponents_mod_n(level, exps).unwrap();
        IntegralContext::new(n, k, level, chi).unwrap()
    }

    #[test]
    fn integral_tp_degree_one() {
        // Trivial character: T(p) eigenvalue is p^{k'-1} + 1.
        let c = ictx(1, 6, 3, &[]);
        let sigma = enumerate_partitions(3, 1).unwrap().remove(0);
        let got = eigenvalue_integral(&c, &sigma, IntegralOp::TP { p: 5 }).unwrap();
        assert_eq!(got, CycNumber::from_int(5i64.pow(5) + 1));
    }

    #[test]
    fn integral_tq_leading_power() {
        // d = 0: value is the pure character factor (power q^0).
        let c = ictx(2, 6, 15, &[(3, 1), (5, 2)]);
        let parts = enumerate_partitions(15, 2).unwrap();
        let sigma = parts.iter().find(|s| s.slot_of(3) == Some(0)).unwrap();
        let v = eigenvalue_integral(&c, sigma, IntegralOp::TQ { q: 3 }).unwrap();
        // |character value| = 1 exactly.
        assert_eq!(v.norm_sq(), CycNumber::one());
        // The component recipe gives χ_5(3^{|0-d'|}).
        let dp = sigma.slot_of(5).unwrap() as i64;
        let expect = c.chi.eval_partial_pow(5, 3, dp.abs());
        assert_eq!(v, expect);
    }

    #[test]
    fn integral_tjp2_degree_one_shape() {
        // n = 1, j = 1, trivial χ': the three (r,s) terms expand to
        // 1 + sym_p(1)·p^{k'-2} + p^{2k'-2}.
        let p = 5u64;
        let kp = 4i64;
        let c = ictx(1, kp as u64, 3, &[]);
        let sigma = enumerate_partitions(3, 1).unwrap().remove(0);
        let got = eigenvalue_integral(&c, &sigma, IntegralOp::TJP2 { p, j: 1 }).unwrap();
        let sym1 = sym_closed(p, CharKind::Trivial, 1, 0).unwrap();
        let expect = CycNumber::from_rational(rational_power(p, kp - 2))
            .mul(&sym1)
            .add(&CycNumber::one())
            .add(&CycNumber::from_rational(rational_power(p, 2 * kp - 2)));
        assert_eq!(got, expect);
    }

    #[test]
    fn shimura_degree_one_anchor() {
        // N = 3, trivial χ, σ = (3,1), p = 5, k = 7: both sides 1 + 5⁵.
        let chi = parse_character_spec(3, "trivial").unwrap();
        let rows = shimura_comparison(3, 7, &chi, 5).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.equal, "σ = {}", row.sigma);
        }
        let half = HalfIntegralContext::new(1, 7, 3, chi).unwrap();
        let sigma = enumerate_partitions(3, 1).unwrap().remove(0);
        assert_eq!(
            eigenvalue_good(&half, &sigma, 1, 5).unwrap(),
            CycNumber::from_int(3126)
        );
    }

    #[test]
    fn shimura_with_quadratic_twists() {
        for spec in ["quadratic@3", "quadratic@3,quadratic@4", "quadratic@4"] {
            let chi = parse_character_spec(15, spec).unwrap();
            for p in [7u64, 11] {
                let rows = shimura_comparison(15, 9, &chi, p).unwrap();
                for row in &rows {
                    assert!(row.equal, "spec={spec} p={p} σ={}", row.sigma);
                }
            }
        }
    }

    #[test]
    fn shimura_real_when_character_squares_away() {
        let chi = parse_character_spec(5, "quadratic@5").unwrap();
        let rows = shimura_comparison(5, 7, &chi, 3).unwrap();
        for row in rows {
            assert!(row.equal);
            let im = row.half_integral["approx"]["im"].as_str().unwrap();
            let im: f64 = im.parse().unwrap();
            assert!(im.abs() < 1e-9, "value should be real");
        }
    }
}
