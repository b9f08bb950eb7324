//! Triangular diagonalization of the bad-prime operators: per prime the
//! top operator acts upper-triangularly on the rank ladder with diagonal
//! entries of pairwise distinct absolute value `q^{d(k-d-1)}`, so a
//! back-substitution yields unitriangular eigenvector coefficients; the
//! full basis is assembled multiplicatively across the primes of `N`.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use super::{bad_action_coeff, eigenvalue_bad, HalfIntegralContext};
use crate::cusps::{enumerate_partitions, vanishing_status, AdmissibleType, MultiplicativePartition, VanishingStatus};
use crate::matz::Eps;
use crate::ring::CycNumber;
use crate::{Error, Result};

/// Coefficients `a_{σ,β}(N)` of the diagonalizing combinations
/// `Ẽ_σ = Σ_{β ≥ σ} a_{σ,β}(N) E_β`, upper-unitriangular with respect to
/// the slotwise rank order.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub partitions: Vec<MultiplicativePartition>,
    /// `coeffs[i]`: map `j -> a_{σ_i, σ_j}(N)` over the support `σ_j ≥ σ_i`.
    pub coeffs: Vec<BTreeMap<usize, CycNumber>>,
    /// Indices whose Eisenstein series vanish for the context character.
    pub vanishing: Vec<bool>,
}

/// `β ≥ σ` slotwise at every prime of `N`.
fn dominates(beta: &MultiplicativePartition, sigma: &MultiplicativePartition, primes: &[u64]) -> bool {
    primes
        .iter()
        .all(|q| beta.slot_of(*q).unwrap() >= sigma.slot_of(*q).unwrap())
}

fn is_vanishing(ctx: &HalfIntegralContext, sigma: &MultiplicativePartition) -> Result<bool> {
    let t = AdmissibleType::new(sigma.clone(), 0, 0, Eps::Plus)?;
    Ok(vanishing_status(&t, &ctx.chi)? != VanishingStatus::Nonvanishing)
}

/// Solves the rank ladder at one prime: `lad[d][e]` is the coefficient of
/// the rank-`e` series in the eigenvector seeded at rank `d`, in the
/// context where the other primes sit in the slots of `rest`.
fn prime_ladder(
    ctx: &HalfIntegralContext,
    rest: &MultiplicativePartition,
    q: u64,
) -> Result<Vec<Vec<CycNumber>>> {
    let n = ctx.degree;
    // Partition with q placed in slot t.
    let placed: Vec<MultiplicativePartition> =
        (0..=n).map(|t| rest.with_prime_moved(q, t)).collect();
    let vanish: Vec<bool> = placed
        .iter()
        .map(|s| is_vanishing(ctx, s))
        .collect::<Result<_>>()?;
    // Action matrix of the top operator on the ladder, with entries whose
    // target series vanish replaced by zero.
    let mut action = vec![vec![CycNumber::zero(); n + 1]; n + 1];
    for d in 0..=n {
        for e in d..=n {
            if vanish[e] {
                continue;
            }
            action[d][e] = bad_action_coeff(ctx, &placed[d], q, n, e - d)?;
        }
    }
    let mut lad = vec![vec![CycNumber::zero(); n + 1]; n + 1];
    for d in 0..=n {
        lad[d][d] = CycNumber::one();
        if vanish[d] {
            // A vanishing seed has no eigenvector; the formal unit row is
            // never consumed: any assembled product through it carries a
            // zero factor from the prime that forces the vanishing.
            continue;
        }
        let pivot = action[d][d].clone();
        for e in d + 1..=n {
            // Σ_{d≤d'≤e} a_{d'}·A(d', e-d') = λ_d·a_e, solved for a_e.
            let mut rhs = CycNumber::zero();
            for dp in d..e {
                rhs = rhs.add(&lad[d][dp].mul(&action[dp][e]));
            }
            let denom = pivot.sub(&action[e][e]);
            if denom.is_zero() {
                return Err(Error::DegenerateSpectrum);
            }
            lad[d][e] = rhs.mul(&denom.inv()?);
        }
    }
    Ok(lad)
}

/// Builds the full diagonalizing basis for all bad-prime top operators.
pub fn diagonal_basis(ctx: &HalfIntegralContext) -> Result<EigenBasis> {
    let n = ctx.degree;
    let primes = crate::odd_squarefree_primes(ctx.n_level)?;
    let partitions = enumerate_partitions(ctx.n_level, n)?;
    let vanishing: Vec<bool> = partitions
        .iter()
        .map(|s| is_vanishing(ctx, s))
        .collect::<Result<_>>()?;

    // Ladders cached per (prime, rest-configuration label).
    let mut ladders: BTreeMap<(u64, String), Vec<Vec<CycNumber>>> = BTreeMap::new();
    let mut coeffs = Vec::with_capacity(partitions.len());
    for sigma in &partitions {
        let mut row = BTreeMap::new();
        for (j, beta) in partitions.iter().enumerate() {
            if !dominates(beta, sigma, &primes) {
                continue;
            }
            let mut acc = CycNumber::one();
            for q in &primes {
                let rest_label = beta.with_prime_moved(*q, 0).label();
                let key = (*q, rest_label);
                if !ladders.contains_key(&key) {
                    let rest = beta.with_prime_moved(*q, 0);
                    ladders.insert(key.clone(), prime_ladder(ctx, &rest, *q)?);
                }
                let lad = &ladders[&key];
                let d = sigma.slot_of(*q).unwrap();
                let e = beta.slot_of(*q).unwrap();
                acc = acc.mul(&lad[d][e]);
                if acc.is_zero() {
                    break;
                }
            }
            if !acc.is_zero() {
                row.insert(j, acc);
            }
        }
        coeffs.push(row);
    }
    Ok(EigenBasis {
        partitions,
        coeffs,
        vanishing,
    })
}

impl EigenBasis {
    /// Applies `T_j(q²)` to the combination with the given coefficients,
    /// in coefficient space, zeroing components along vanishing series.
    pub fn apply_bad_operator(
        &self,
        ctx: &HalfIntegralContext,
        coeffs: &BTreeMap<usize, CycNumber>,
        q: u64,
        j: usize,
    ) -> Result<BTreeMap<usize, CycNumber>> {
        let mut out: BTreeMap<usize, CycNumber> = BTreeMap::new();
        for (idx, a) in coeffs {
            let beta = &self.partitions[*idx];
            let d = beta.slot_of(q).unwrap();
            for t in 0..=(ctx.degree - d) {
                let target = beta.with_prime_moved(q, d + t);
                let target_idx = self
                    .partitions
                    .iter()
                    .position(|p| *p == target)
                    .expect("moved partition stays in the enumeration");
                if self.vanishing[target_idx] {
                    continue;
                }
                let coeff = bad_action_coeff(ctx, beta, q, j, t)?;
                if coeff.is_zero() {
                    continue;
                }
                let add = a.mul(&coeff);
                out.entry(target_idx)
                    .and_modify(|v| *v = v.add(&add))
                    .or_insert(add);
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Exact residual of the eigen-equation `Ẽ_σ|T_j(q²) = λ Ẽ_σ`; empty
    /// map means zero residual.
    pub fn eigen_residual(
        &self,
        ctx: &HalfIntegralContext,
        sigma_idx: usize,
        q: u64,
        j: usize,
    ) -> Result<BTreeMap<usize, CycNumber>> {
        let sigma = &self.partitions[sigma_idx];
        let lambda = eigenvalue_bad(ctx, sigma, j, q)?;
        let image = self.apply_bad_operator(ctx, &self.coeffs[sigma_idx], q, j)?;
        let mut residual = image;
        for (idx, a) in &self.coeffs[sigma_idx] {
            if self.vanishing[*idx] {
                continue;
            }
            let expect = lambda.mul(a);
            let cur = residual.remove(idx).unwrap_or_else(CycNumber::zero);
            let diff = cur.sub(&expect);
            if !diff.is_zero() {
                residual.insert(*idx, diff);
            }
        }
        Ok(residual)
    }

    pub fn is_unitriangular(&self, primes: &[u64]) -> bool {
        for (i, row) in self.coeffs.iter().enumerate() {
            match row.get(&i) {
                Some(one) if *one == CycNumber::one() => {}
                _ => return false,
            }
            for j in row.keys() {
                if !dominates(&self.partitions[*j], &self.partitions[i], primes) {
                    return false;
                }
            }
        }
        true
    }
}

/// Pairwise separation of the nonvanishing series by their top bad-prime
/// eigenvalue systems.
#[derive(Clone, Debug, Serialize)]
pub struct MultiplicityOneReport {
    pub pairs: Vec<SeparationRow>,
    pub all_separated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationRow {
    pub sigma: String,
    pub rho: String,
    pub witness_prime: Option<u64>,
}

impl MultiplicityOneReport {
    pub fn to_json(&self) -> Value {
        json!(self)
    }
}

pub fn multiplicity_one_report(ctx: &HalfIntegralContext) -> Result<MultiplicityOneReport> {
    let primes = crate::odd_squarefree_primes(ctx.n_level)?;
    let partitions = enumerate_partitions(ctx.n_level, ctx.degree)?;
    let mut live = Vec::new();
    for sigma in &partitions {
        if !is_vanishing(ctx, sigma)? {
            let values: Vec<CycNumber> = primes
                .iter()
                .map(|q| eigenvalue_bad(ctx, sigma, ctx.degree, *q))
                .collect::<Result<_>>()?;
            live.push((sigma.clone(), values));
        }
    }
    let mut pairs = Vec::new();
    let mut all = true;
    for i in 0..live.len() {
        for j in i + 1..live.len() {
            let witness = live[i]
                .1
                .iter()
                .zip(&live[j].1)
                .position(|(a, b)| a != b)
                .map(|idx| primes[idx]);
            if witness.is_none() {
                all = false;
            }
            pairs.push(SeparationRow {
                sigma: live[i].0.label(),
                rho: live[j].0.label(),
                witness_prime: witness,
            });
        }
    }
    Ok(MultiplicityOneReport {
        pairs,
        all_separated: all,
    })
}
