//! Integer and finite-ring linear algebra: exact matrices, ranks mod `p`,
//! Smith normal form with transforms, coset representatives of
//! `Z^{1,n}/Z^{1,n}D`, coprime symmetric pairs, and the 2-adic splitting of
//! symmetric matrices used to classify cusps.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::{Error, Result};

/// Dense matrix with arbitrary-precision integer entries, row major.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl std::fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "dimensions must be positive");
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == c));
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = BigInt::from(*v);
            }
        }
        m
    }

    pub fn diag(entries: &[i64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, v) in entries.iter().enumerate() {
            m[(i, i)] = BigInt::from(*v);
        }
        m
    }

    pub fn scalar(n: usize, v: i64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::from(v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    m[(i, j)] += prod;
                }
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.rows == other.rows && self.cols == other.cols);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.rows == other.rows && self.cols == other.cols);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        m
    }

    pub fn neg(&self) -> Self {
        let mut m = self.clone();
        for a in m.data.iter_mut() {
            *a = -a.clone();
        }
        m
    }

    pub fn scale(&self, c: i64) -> Self {
        let c = BigInt::from(c);
        let mut m = self.clone();
        for a in m.data.iter_mut() {
            *a *= &c;
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Horizontal concatenation `(self | other)`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let mut m = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..other.cols {
                m[(i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        m
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self[(r0 + i, c0 + j)].clone();
            }
        }
        m
    }

    pub fn map_mod(&self, m: u64) -> Self {
        let mb = BigInt::from(m);
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = a.mod_floor(&mb);
        }
        out
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert!(self.is_square());
        let n = self.rows;
        if n == 1 {
            return self[(0, 0)].clone();
        }
        let mut a = self.data.clone();
        let idx = |i: usize, j: usize| i * n + j;
        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[idx(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[idx(i, k)].is_zero()) {
                    Some(i) => {
                        for j in 0..n {
                            a.swap(idx(k, j), idx(i, j));
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[idx(i, j)] * &a[idx(k, k)] - &a[idx(i, k)] * &a[idx(k, j)];
                    a[idx(i, j)] = num / &prev;
                }
                a[idx(i, k)] = BigInt::zero();
            }
            prev = a[idx(k, k)].clone();
        }
        let d = a[idx(n - 1, n - 1)].clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    /// Exact inverse over the rationals; errors out on singular input.
    pub fn inverse_rational(&self) -> Result<Vec<Vec<BigRational>>> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..2 * n)
                    .map(|j| {
                        if j < n {
                            BigRational::from_integer(self[(i, j)].clone())
                        } else if j - n == i {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&i| !a[i][col].is_zero())
                .ok_or(Error::Singular)?;
            a.swap(col, pivot);
            let inv = a[col][col].recip();
            for j in col..2 * n {
                a[col][j] = &a[col][j] * &inv;
            }
            for i in 0..n {
                if i != col && !a[i][col].is_zero() {
                    let f = a[i][col].clone();
                    for j in col..2 * n {
                        let t = &a[col][j] * &f;
                        a[i][j] = &a[i][j] - t;
                    }
                }
            }
        }
        Ok(a.into_iter().map(|row| row[n..].to_vec()).collect())
    }

    /// Row rank over `Z/pZ`.
    pub fn rank_mod_p(&self, p: u64) -> usize {
        let pb = BigInt::from(p);
        let mut a: Vec<Vec<u64>> = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)].mod_floor(&pb).to_u64().unwrap())
                    .collect()
            })
            .collect();
        let mut rank = 0usize;
        for col in 0..self.cols {
            let Some(pivot) = (rank..self.rows).find(|&i| a[i][col] % p != 0) else {
                continue;
            };
            a.swap(rank, pivot);
            let inv = crate::ring::mod_inv_u64(a[rank][col] % p, p);
            for j in col..self.cols {
                a[rank][j] = mulmod(a[rank][j], inv, p);
            }
            for i in 0..self.rows {
                if i != rank && a[i][col] % p != 0 {
                    let f = a[i][col] % p;
                    for j in col..self.cols {
                        let t = mulmod(f, a[rank][j], p);
                        a[i][j] = (a[i][j] + p - t) % p;
                    }
                }
            }
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        rank
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            (0..self.rows)
                .map(|i| {
                    Value::Array(
                        (0..self.cols)
                            .map(|j| {
                                self[(i, j)]
                                    .to_i64()
                                    .map(Value::from)
                                    .unwrap_or_else(|| Value::String(self[(i, j)].to_string()))
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

/// Smith normal form `U · M · V = S` with `U, V` unimodular and `S`
/// diagonal with `s_i | s_{i+1}`, all entries nonnegative.
pub struct Snf {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
}

pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let rows = m.rows();
    let cols = m.cols();
    let mut s = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);

    let k_max = rows.min(cols);
    for k in 0..k_max {
        loop {
            // Move a nonzero pivot of smallest absolute value to (k, k).
            let mut best: Option<(usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if !s[(i, j)].is_zero()
                        && best
                            .map(|(bi, bj)| s[(i, j)].abs() < s[(bi, bj)].abs())
                            .unwrap_or(true)
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return normalize_snf(u, s, v);
            };
            swap_rows(&mut s, &mut u, k, bi);
            swap_cols(&mut s, &mut v, k, bj);

            let mut dirty = false;
            for i in k + 1..rows {
                if !s[(i, k)].is_zero() {
                    let q = div_round(&s[(i, k)], &s[(k, k)]);
                    row_op(&mut s, &mut u, i, k, &q);
                    if !s[(i, k)].is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in k + 1..cols {
                if !s[(k, j)].is_zero() {
                    let q = div_round(&s[(k, j)], &s[(k, k)]);
                    col_op(&mut s, &mut v, j, k, &q);
                    if !s[(k, j)].is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue;
            }
            // Pivot must divide every remaining entry; if not, fold the
            // offending row in and restart the pivot hunt.
            let mut fixed = true;
            'scan: for i in k + 1..rows {
                for j in k + 1..cols {
                    if !(&s[(i, j)] % &s[(k, k)]).is_zero() {
                        add_row(&mut s, &mut u, k, i);
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break;
            }
        }
    }
    normalize_snf(u, s, v)
}

fn normalize_snf(mut u: IntMatrix, mut s: IntMatrix, v: IntMatrix) -> Snf {
    // Make diagonal entries nonnegative.
    let n = s.rows().min(s.cols());
    for k in 0..n {
        if s[(k, k)].is_negative() {
            for j in 0..s.cols() {
                let t = -s[(k, j)].clone();
                s[(k, j)] = t;
            }
            for j in 0..u.cols() {
                let t = -u[(k, j)].clone();
                u[(k, j)] = t;
            }
        }
    }
    Snf { u, s, v }
}

fn swap_rows(s: &mut IntMatrix, u: &mut IntMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..s.cols() {
        let t = s[(a, j)].clone();
        s[(a, j)] = s[(b, j)].clone();
        s[(b, j)] = t;
    }
    for j in 0..u.cols() {
        let t = u[(a, j)].clone();
        u[(a, j)] = u[(b, j)].clone();
        u[(b, j)] = t;
    }
}

fn swap_cols(s: &mut IntMatrix, v: &mut IntMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..s.rows() {
        let t = s[(i, a)].clone();
        s[(i, a)] = s[(i, b)].clone();
        s[(i, b)] = t;
    }
    for i in 0..v.rows() {
        let t = v[(i, a)].clone();
        v[(i, a)] = v[(i, b)].clone();
        v[(i, b)] = t;
    }
}

/// `row_i -= q * row_k`, tracked in `u`.
fn row_op(s: &mut IntMatrix, u: &mut IntMatrix, i: usize, k: usize, q: &BigInt) {
    for j in 0..s.cols() {
        let t = q * &s[(k, j)];
        s[(i, j)] -= t;
    }
    for j in 0..u.cols() {
        let t = q * &u[(k, j)];
        u[(i, j)] -= t;
    }
}

/// `col_j -= q * col_k`, tracked in `v`.
fn col_op(s: &mut IntMatrix, v: &mut IntMatrix, j: usize, k: usize, q: &BigInt) {
    for i in 0..s.rows() {
        let t = q * &s[(i, k)];
        s[(i, j)] -= t;
    }
    for i in 0..v.rows() {
        let t = q * &v[(i, k)];
        v[(i, j)] -= t;
    }
}

fn add_row(s: &mut IntMatrix, u: &mut IntMatrix, dst: usize, src: usize) {
    for j in 0..s.cols() {
        let t = s[(src, j)].clone();
        s[(dst, j)] += t;
    }
    for j in 0..u.cols() {
        let t = u[(src, j)].clone();
        u[(dst, j)] += t;
    }
}

/// Rounded division, keeping remainders small during SNF reduction.
fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if &r.abs() * 2 > b.abs() {
        if (r.is_negative()) == (b.is_negative()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Representatives of `Z^{1,n}/Z^{1,n}D` computed through the Smith normal
/// form: with `U D V = S`, the rows `w · V^{-1}` for `w ∈ ∏ [0, s_i)` hit
/// every class exactly once.
pub struct CosetReps {
    basis: IntMatrix, // V^{-1}
    sizes: Vec<u64>,
    count: u128,
}

impl CosetReps {
    pub fn count(&self) -> u128 {
        self.count
    }

    pub fn iter(&self) -> CosetIter<'_> {
        CosetIter {
            reps: self,
            odo: vec![0; self.sizes.len()],
            done: false,
        }
    }
}

pub struct CosetIter<'a> {
    reps: &'a CosetReps,
    odo: Vec<u64>,
    done: bool,
}

impl<'a> Iterator for CosetIter<'a> {
    type Item = Vec<BigInt>;

    fn next(&mut self) -> Option<Vec<BigInt>> {
        if self.done {
            return None;
        }
        let n = self.odo.len();
        let mut row = vec![BigInt::zero(); n];
        for (i, w) in self.odo.iter().enumerate() {
            if *w != 0 {
                let wb = BigInt::from(*w);
                for j in 0..n {
                    row[j] += &wb * &self.reps.basis[(i, j)];
                }
            }
        }
        // Advance the odometer.
        let mut i = 0;
        loop {
            if i == n {
                self.done = true;
                break;
            }
            self.odo[i] += 1;
            if self.odo[i] < self.reps.sizes[i] {
                break;
            }
            self.odo[i] = 0;
            i += 1;
        }
        if self.reps.count == 0 {
            self.done = true;
        }
        Some(row)
    }
}

pub fn coset_reps(d: &IntMatrix) -> Result<CosetReps> {
    assert!(d.is_square());
    if d.det().is_zero() {
        return Err(Error::Singular);
    }
    let snf = smith_normal_form(d);
    let n = d.rows();
    let sizes: Vec<u64> = (0..n)
        .map(|i| snf.s[(i, i)].to_u64().expect("invariant factor fits u64"))
        .collect();
    let count = sizes.iter().map(|s| *s as u128).product();
    let v_inv = rational_to_int(&snf.v.inverse_rational()?)?;
    Ok(CosetReps {
        basis: v_inv,
        sizes,
        count,
    })
}

fn rational_to_int(rows: &[Vec<BigRational>]) -> Result<IntMatrix> {
    let mut m = IntMatrix::zeros(rows.len(), rows[0].len());
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if !x.denom().is_one() {
                return Err(Error::arg("expected integral matrix"));
            }
            m[(i, j)] = x.numer().clone();
        }
    }
    Ok(m)
}

/// Whether the row vector `x` lies in the row lattice `Z^{1,n} D`.
pub fn in_row_lattice(d: &IntMatrix, x: &[BigInt]) -> bool {
    // Solve y D = x over Q and check integrality.
    let dt = d.transpose();
    let Ok(inv) = dt.inverse_rational() else {
        return false;
    };
    for i in 0..d.rows() {
        let mut acc = BigRational::zero();
        for (j, xj) in x.iter().enumerate() {
            acc += &inv[i][j] * BigRational::from_integer(xj.clone());
        }
        if !acc.denom().is_one() {
            return false;
        }
    }
    true
}

/// A pair `(C D)` with `C·ᵗD` symmetric and `n`-th determinantal divisor 1.
#[derive(Clone, Debug)]
pub struct CoprimePair {
    pub c: IntMatrix,
    pub d: IntMatrix,
}

impl CoprimePair {
    pub fn new(c: IntMatrix, d: IntMatrix) -> Result<Self> {
        if is_coprime_symmetric(&c, &d) {
            Ok(CoprimePair { c, d })
        } else {
            Err(Error::arg("not a coprime symmetric pair"))
        }
    }

    pub fn degree(&self) -> usize {
        self.c.rows()
    }
}

/// `C·ᵗD` symmetric and the `n`-th determinantal divisor of `(C D)` is 1
/// (equivalently full rank mod every prime), decided through the SNF of the
/// `n × 2n` block so no determinant needs factoring.
pub fn is_coprime_symmetric(c: &IntMatrix, d: &IntMatrix) -> bool {
    if !c.is_square() || !d.is_square() || c.rows() != d.rows() {
        return false;
    }
    if !c.mul(&d.transpose()).is_symmetric() {
        return false;
    }
    let block = c.hstack(d);
    let snf = smith_normal_form(&block);
    (0..c.rows()).all(|i| snf.s[(i, i)].is_one())
}

/// Sign of the 2-adic scale-1 constituent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Eps {
    Plus,
    Minus,
}

impl std::fmt::Display for Eps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Eps::Plus => write!(f, "+"),
            Eps::Minus => write!(f, "-"),
        }
    }
}

/// 2-adic data of a symmetric matrix: `M` is congruent over `Z_2` to
/// `U ⊥ 2V ⊥ 4W` with `U, V` unimodular of ranks `d, dprime`; `eps` records
/// whether `V` mod 2 has an anisotropic vector (`Plus`: some diagonal entry
/// of `V` is odd) or is purely hyperbolic (`Minus`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Jordan2Data {
    pub d: usize,
    pub dprime: usize,
    pub eps: Eps,
}

/// Splits a symmetric integer matrix 2-adically by fraction-free pivoting:
/// odd diagonal entries give 1×1 unit pivots, odd off-diagonal entries with
/// even diagonal give hyperbolic 2×2 pivots, and once no odd entry remains
/// the whole block is divided by 2 and the scale goes up by one.
pub fn jordan_mod4(m: &IntMatrix) -> Result<Jordan2Data> {
    if !m.is_symmetric() {
        return Err(Error::arg("jordan_mod4 requires a symmetric matrix"));
    }
    let mut a = m.clone();
    let mut scale = 0u32;
    let mut d = 0usize;
    let mut dprime = 0usize;
    let mut odd_diag_at_one = false;
    let mut active: Vec<usize> = (0..m.rows()).collect();

    let two = BigInt::from(2);
    while !active.is_empty() {
        if scale >= 2 {
            break;
        }
        // Look for a unit pivot among the active indices.
        let odd_diag = active
            .iter()
            .position(|&i| a[(i, i)].mod_floor(&two).is_one());
        if let Some(pos) = odd_diag {
            let i = active[pos];
            pivot_1x1(&mut a, &active, i);
            match scale {
                0 => d += 1,
                1 => {
                    dprime += 1;
                    odd_diag_at_one = true;
                }
                _ => {}
            }
            active.remove(pos);
            continue;
        }
        let odd_off = {
            let mut found = None;
            'search: for (pi, &i) in active.iter().enumerate() {
                for (pj, &j) in active.iter().enumerate().skip(pi + 1) {
                    if a[(i, j)].mod_floor(&two).is_one() {
                        found = Some((pi, pj, i, j));
                        break 'search;
                    }
                }
            }
            found
        };
        if let Some((pi, pj, i, j)) = odd_off {
            pivot_2x2(&mut a, &active, i, j);
            match scale {
                0 => d += 2,
                1 => dprime += 2,
                _ => {}
            }
            active.remove(pj);
            active.remove(pi);
            continue;
        }
        // Everything left is even: move one 2-adic level up.
        for &i in &active {
            for &j in &active {
                let half = &a[(i, j)] / &two;
                debug_assert!((&a[(i, j)] % &two).is_zero());
                a[(i, j)] = half;
            }
        }
        scale += 1;
    }

    let eps = if dprime > 0 && !odd_diag_at_one {
        Eps::Minus
    } else {
        Eps::Plus
    };
    Ok(Jordan2Data { d, dprime, eps })
}

/// Clear row/column `i` against all other active indices using the exact
/// scaling `row_j ← a_ii·row_j − a_ji·row_i`; `a_ii` is odd so 2-adic
/// valuations elsewhere are unchanged.
fn pivot_1x1(a: &mut IntMatrix, active: &[usize], i: usize) {
    let others: Vec<usize> = active.iter().copied().filter(|&j| j != i).collect();
    for &j in &others {
        if a[(j, i)].is_zero() {
            continue;
        }
        let aii = a[(i, i)].clone();
        let aji = a[(j, i)].clone();
        for &k in active {
            let t = &aii * &a[(j, k)] - &aji * &a[(i, k)];
            a[(j, k)] = t;
        }
        for &k in active {
            let t = &aii * &a[(k, j)] - &aji * &a[(k, i)];
            a[(k, j)] = t;
        }
    }
}

/// Clear the hyperbolic block at `(i, j)` against the other active indices
/// with the fraction-free 2×2 analogue; the block determinant is odd.
fn pivot_2x2(a: &mut IntMatrix, active: &[usize], i: usize, j: usize) {
    let others: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&r| r != i && r != j)
        .collect();
    for &r in &others {
        if a[(r, i)].is_zero() && a[(r, j)].is_zero() {
            continue;
        }
        let det = &a[(i, i)] * &a[(j, j)] - &a[(i, j)] * &a[(j, i)];
        let (ri, rj) = (a[(r, i)].clone(), a[(r, j)].clone());
        // adj(P) applied to (ri, rj).
        let alpha = &ri * &a[(j, j)] - &rj * &a[(i, j)];
        let beta = -(&ri * &a[(j, i)]) + &rj * &a[(i, i)];
        for &k in active {
            let t = &det * &a[(r, k)] - &alpha * &a[(i, k)] - &beta * &a[(j, k)];
            a[(r, k)] = t;
        }
        for &k in active {
            let t = &det * &a[(k, r)] - &alpha * &a[(k, i)] - &beta * &a[(k, j)];
            a[(k, r)] = t;
        }
    }
}

/// Congruence diagonalization over `Z/qZ` for odd `q`: returns `(G, diag)`
/// with `G·A·ᵗG ≡ diag (mod q)` and `G` invertible mod `q`.
pub fn diagonalize_sym_mod_q(a: &IntMatrix, q: u64) -> Result<(IntMatrix, Vec<u64>)> {
    if !a.is_symmetric() {
        return Err(Error::arg("diagonalization requires a symmetric matrix"));
    }
    if q < 3 || q % 2 == 0 {
        return Err(Error::arg("q must be odd"));
    }
    let n = a.rows();
    let qb = BigInt::from(q);
    let mut m: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[(i, j)].mod_floor(&qb).to_u64().unwrap())
                .collect()
        })
        .collect();
    let mut g: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..n).map(|j| u64::from(i == j)).collect())
        .collect();

    // T·M·ᵗT congruence steps, with T accumulated into g by row operations.
    let swap_sym = |m: &mut Vec<Vec<u64>>, g: &mut Vec<Vec<u64>>, a: usize, b: usize| {
        m.swap(a, b);
        g.swap(a, b);
        for row in m.iter_mut() {
            row.swap(a, b);
        }
    };
    let add_sym = |m: &mut Vec<Vec<u64>>, g: &mut Vec<Vec<u64>>, dst: usize, src: usize, f: u64| {
        for k in 0..n {
            m[dst][k] = (m[dst][k] + mulmod(f, m[src][k], q)) % q;
            g[dst][k] = (g[dst][k] + mulmod(f, g[src][k], q)) % q;
        }
        for row in m.iter_mut() {
            row[dst] = (row[dst] + mulmod(f, row[src], q)) % q;
        }
    };

    for step in 0..n {
        if m[step][step] == 0 {
            if let Some(i) = (step + 1..n).find(|&i| m[i][i] != 0) {
                swap_sym(&mut m, &mut g, step, i);
            } else {
                let mut found = None;
                'se: for i in step..n {
                    for j in i + 1..n {
                        if m[i][j] != 0 {
                            found = Some((i, j));
                            break 'se;
                        }
                    }
                }
                let Some((i, j)) = found else {
                    break; // remaining block is zero mod q
                };
                // row/col add makes the (i, i) entry 2·m[i][j] ≠ 0 (q odd).
                add_sym(&mut m, &mut g, i, j, 1);
                if i != step {
                    swap_sym(&mut m, &mut g, step, i);
                }
            }
        }
        let pivot = m[step][step];
        debug_assert!(pivot != 0);
        let inv = crate::ring::mod_inv_u64(pivot, q);
        for i in step + 1..n {
            if m[i][step] != 0 {
                let f = (q - mulmod(m[i][step], inv, q)) % q;
                add_sym(&mut m, &mut g, i, step, f);
            }
        }
    }

    let diag: Vec<u64> = (0..n).map(|i| m[i][i]).collect();
    let mut gm = IntMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gm[(i, j)] = BigInt::from(g[i][j]);
        }
    }
    Ok((gm, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{legendre, legendre_i64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, bound: i64) -> IntMatrix {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = BigInt::from(rng.gen_range(-bound..=bound));
                m[(i, j)] = v.clone();
                m[(j, i)] = v;
            }
        }
        m
    }

    pub(crate) fn random_sl(rng: &mut ChaCha8Rng, n: usize, steps: usize) -> IntMatrix {
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
            let c = rng.gen_range(-2i64..=2);
            let mut t = IntMatrix::identity(n);
            t[(i, j)] = BigInt::from(c);
            e = e.mul(&t);
        }
        e
    }

    #[test]
    fn rank_mod_p_examples() {
        assert_eq!(IntMatrix::identity(3).rank_mod_p(5), 3);
        assert_eq!(IntMatrix::diag(&[3, 1]).rank_mod_p(3), 1);
        assert_eq!(IntMatrix::from_rows(&[vec![2, 4], vec![1, 2]]).rank_mod_p(3), 1);
    }

    #[test]
    fn snf_examples() {
        let snf = smith_normal_form(&IntMatrix::diag(&[2, 3]));
        assert_eq!(snf.s, IntMatrix::diag(&[1, 6]));
        let snf = smith_normal_form(&IntMatrix::identity(4));
        assert_eq!(snf.s, IntMatrix::identity(4));
        let m = IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.s, IntMatrix::identity(2));
        assert_eq!(snf.u.det().abs(), BigInt::one());
        assert_eq!(snf.v.det().abs(), BigInt::one());
    }

    #[test]
    fn snf_transform_invariants_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let rows = rng.gen_range(1..4);
            let cols = rng.gen_range(1..5);
            let mut m = IntMatrix::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = BigInt::from(rng.gen_range(-9i64..=9));
                }
            }
            let snf = smith_normal_form(&m);
            assert_eq!(snf.u.mul(&m).mul(&snf.v), snf.s, "UMV = S for {m:?}");
            assert_eq!(snf.u.det().abs(), BigInt::one());
            assert_eq!(snf.v.det().abs(), BigInt::one());
            for k in 0..rows.min(cols).saturating_sub(1) {
                if !snf.s[(k + 1, k + 1)].is_zero() {
                    assert!((&snf.s[(k + 1, k + 1)] % &snf.s[(k, k)]).is_zero());
                }
            }
        }
    }

    #[test]
    fn coset_reps_match_determinant() {
        let d = IntMatrix::diag(&[3]);
        let reps: Vec<_> = coset_reps(&d).unwrap().iter().collect();
        assert_eq!(reps.len(), 3);

        let reps: Vec<_> = coset_reps(&IntMatrix::identity(2)).unwrap().iter().collect();
        assert_eq!(reps.len(), 1);

        let d = IntMatrix::diag(&[2, 2]);
        let reps: Vec<_> = coset_reps(&d).unwrap().iter().collect();
        assert_eq!(reps.len(), 4);
        for (a, u) in reps.iter().enumerate() {
            for v in reps.iter().skip(a + 1) {
                let diff: Vec<BigInt> = u.iter().zip(v).map(|(x, y)| x - y).collect();
                assert!(!in_row_lattice(&d, &diff), "distinct reps are incongruent");
            }
        }
        assert!(coset_reps(&IntMatrix::from_rows(&[vec![1, 1], vec![1, 1]])).is_err());
    }

    #[test]
    fn coset_reps_random_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(1..4);
            let mut d = IntMatrix::zeros(n, n);
            loop {
                for i in 0..n {
                    for j in 0..n {
                        d[(i, j)] = BigInt::from(rng.gen_range(-4i64..=4));
                    }
                }
                if !d.det().is_zero() {
                    break;
                }
            }
            let reps = coset_reps(&d).unwrap();
            assert_eq!(
                reps.count(),
                d.det().abs().to_u128().unwrap(),
                "rep count equals |det| for {d:?}"
            );
        }
    }

    #[test]
    fn coprimality_examples() {
        let n = 3;
        assert!(is_coprime_symmetric(&IntMatrix::zeros(n, n), &IntMatrix::identity(n)));
        assert!(!is_coprime_symmetric(
            &IntMatrix::scalar(2, 2),
            &IntMatrix::scalar(2, 2)
        ));
        // A symmetric M with (M I): always coprime.
        let m = IntMatrix::from_rows(&[vec![4, 6], vec![6, 2]]);
        assert!(is_coprime_symmetric(&m, &IntMatrix::identity(2)));
        // C·ᵗD not symmetric.
        let c = IntMatrix::from_rows(&[vec![1, 1], vec![0, 1]]);
        assert!(!is_coprime_symmetric(&c, &IntMatrix::identity(2)));
    }

    #[test]
    fn jordan_mod4_patterns() {
        // I_2 ⊥ <0>
        let m = IntMatrix::diag(&[1, 1, 0]);
        assert_eq!(
            jordan_mod4(&m).unwrap(),
            Jordan2Data { d: 2, dprime: 0, eps: Eps::Plus }
        );
        // <1> ⊥ 2·(0 1; 1 0)
        let m = IntMatrix::from_rows(&[vec![1, 0, 0], vec![0, 0, 2], vec![0, 2, 0]]);
        assert_eq!(
            jordan_mod4(&m).unwrap(),
            Jordan2Data { d: 1, dprime: 2, eps: Eps::Minus }
        );
        // 2·I_2
        let m = IntMatrix::diag(&[2, 2]);
        assert_eq!(
            jordan_mod4(&m).unwrap(),
            Jordan2Data { d: 0, dprime: 2, eps: Eps::Plus }
        );
        // Hyperbolic plane at scale 0.
        let m = IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(
            jordan_mod4(&m).unwrap(),
            Jordan2Data { d: 2, dprime: 0, eps: Eps::Plus }
        );
        assert!(jordan_mod4(&IntMatrix::from_rows(&[vec![0, 1], vec![0, 0]])).is_err());
    }

    #[test]
    fn jordan_mod4_congruence_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let samples = [
            IntMatrix::diag(&[1, 2, 0]),
            IntMatrix::from_rows(&[vec![1, 0, 0], vec![0, 0, 2], vec![0, 2, 0]]),
            IntMatrix::diag(&[4, 2, 1]),
            IntMatrix::from_rows(&[vec![2, 1], vec![1, 2]]),
            IntMatrix::diag(&[8, 0]),
        ];
        for m in &samples {
            let base = jordan_mod4(m).unwrap();
            for _ in 0..20 {
                let e = random_sl(&mut rng, m.rows(), 6);
                let conj = e.mul(m).mul(&e.transpose());
                assert_eq!(jordan_mod4(&conj).unwrap(), base, "invariant under {e:?}");
            }
        }
    }

    #[test]
    fn diagonalization_mod_q() {
        // Already diagonal input stays put.
        let a = IntMatrix::diag(&[2, 3, 1]);
        let (g, diag) = diagonalize_sym_mod_q(&a, 5).unwrap();
        assert_eq!(g, IntMatrix::identity(3));
        assert_eq!(diag, vec![2, 3, 1]);

        // Hyperbolic plane mod 3: determinant class preserved.
        let a = IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]]);
        let (g, diag) = diagonalize_sym_mod_q(&a, 3).unwrap();
        let gat = g.mul(&a).mul(&g.transpose()).map_mod(3);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { diag[i] } else { 0 };
                assert_eq!(gat[(i, j)], BigInt::from(expect));
            }
        }
        assert_eq!(legendre_i64((diag[0] * diag[1]) as i64, 3), legendre_i64(-1, 3));
    }

    #[test]
    fn diagonalization_mod_q_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for q in [3u64, 5, 7] {
            for _ in 0..30 {
                let n = rng.gen_range(1..4);
                let a = random_symmetric(&mut rng, n, 6);
                let (g, diag) = diagonalize_sym_mod_q(&a, q).unwrap();
                let gat = g.mul(&a).mul(&g.transpose()).map_mod(q);
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j { diag[i] } else { 0 };
                        assert_eq!(gat[(i, j)], BigInt::from(expect), "q={q} a={a:?}");
                    }
                }
                // G invertible mod q and the square class of det preserved.
                assert_eq!(g.rank_mod_p(q), n);
                let da = a.det();
                let dd: BigInt = diag.iter().fold(BigInt::one(), |acc, x| acc * BigInt::from(*x));
                if legendre(&da, q) != 0 {
                    let g2 = g.det().mod_floor(&BigInt::from(q));
                    let lhs = legendre(&(da * &g2 * &g2), q);
                    assert_eq!(lhs, legendre(&dd, q));
                }
            }
        }
    }

    #[test]
    fn det_matches_cofactor_small() {
        let m = IntMatrix::from_rows(&[vec![1, 2, 3], vec![0, 1, 4], vec![5, 6, 0]]);
        assert_eq!(m.det(), BigInt::from(1));
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, -3]]);
        assert_eq!(m.det(), BigInt::from(-6));
    }
}
