//! Floating-point side of the multiplier machinery: truncated theta series,
//! the analytic branch `S_{C,D}(τ)` of `√det(Cτ+D)` tracked from `iλI`, and
//! the numeric check that `θ(γτ)/θ(τ)` equals the exact multiplier times
//! `S_{C,D}(τ)`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use super::theta_multiplier_with_budget;
use crate::matz::IntMatrix;
use crate::{Error, Result};

/// Small dense complex matrix, sized for degrees `n ≤ 3`.
#[derive(Clone, Debug)]
pub struct CMatrix {
    n: usize,
    a: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(n: usize) -> Self {
        CMatrix {
            n,
            a: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        let mut m = Self::new(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        m
    }

    pub fn identity_scaled(n: usize, z: Complex64) -> Self {
        let mut m = Self::new(n);
        for i in 0..n {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_int(m: &IntMatrix) -> Self {
        let n = m.rows();
        let mut out = Self::new(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = Complex64::new(m[(i, j)].to_f64().unwrap(), 0.0);
            }
        }
        out
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut m = self.clone();
        for (a, b) in m.a.iter_mut().zip(&o.a) {
            *a += b;
        }
        m
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut m = self.clone();
        for a in m.a.iter_mut() {
            *a *= z;
        }
        m
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut m = Self::new(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    m[(i, j)] += a * o[(k, j)];
                }
            }
        }
        m
    }

    pub fn det(&self) -> Complex64 {
        let n = self.n;
        let mut a = self.a.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .norm()
                        .partial_cmp(&a[j * n + col].norm())
                        .unwrap()
                })
                .unwrap();
            if a[pivot * n + col].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            det *= a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / a[col * n + col];
                for j in col..n {
                    let t = f * a[col * n + j];
                    a[i * n + j] -= t;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut inv = Self::identity_scaled(n, Complex64::new(1.0, 0.0));
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .norm()
                        .partial_cmp(&a[j * n + col].norm())
                        .unwrap()
                })
                .unwrap();
            if a[pivot * n + col].norm() < 1e-14 {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.a.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= p;
                inv.a[col * n + j] /= p;
            }
            for i in 0..n {
                if i != col {
                    let f = a[i * n + col];
                    if f.norm() != 0.0 {
                        for j in 0..n {
                            let t = f * a[col * n + j];
                            a[i * n + j] -= t;
                            let t = f * inv.a[col * n + j];
                            inv.a[i * n + j] -= t;
                        }
                    }
                }
            }
        }
        Ok(inv)
    }

    fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in 0..i {
                if (self[(i, j)] - self[(j, i)]).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Cholesky-style test on the imaginary part.
    fn im_positive_definite(&self) -> bool {
        let n = self.n;
        let mut y: Vec<f64> = self.a.iter().map(|z| z.im).collect();
        for k in 0..n {
            if y[k * n + k] <= 0.0 {
                return false;
            }
            let pivot = y[k * n + k];
            for i in k + 1..n {
                let f = y[i * n + k] / pivot;
                for j in k..n {
                    y[i * n + j] -= f * y[k * n + j];
                }
            }
        }
        true
    }

    /// Positive lower bound for the least eigenvalue of the imaginary part:
    /// `1 / (n · max |Y^{-1}|)`.
    fn im_min_eigenvalue_bound(&self) -> Result<f64> {
        let n = self.n;
        let mut y = Self::new(n);
        for i in 0..n {
            for j in 0..n {
                y[(i, j)] = Complex64::new(self[(i, j)].im, 0.0);
            }
        }
        let inv = y.inverse()?;
        let mx = inv.a.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        Ok(1.0 / (n as f64 * mx))
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.a[i * self.n + j]
    }
}

/// Truncation policy for the theta lattice sum.
#[derive(Clone, Copy, Debug)]
pub struct ThetaContext {
    pub degree: usize,
    pub tail_bound: f64,
    pub max_radius: usize,
}

impl ThetaContext {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 || degree > 3 {
            return Err(Error::arg("theta series supported for degrees 1..=3"));
        }
        Ok(ThetaContext {
            degree,
            tail_bound: 1e-12,
            max_radius: 256,
        })
    }
}

/// `θ(τ) = Σ_{U ∈ Z^{1,n}} exp(2πi·UτᵗU)`, truncated to `|U_i| ≤ R` with
/// `R` chosen so the estimated tail is below the context bound.
pub fn theta_numeric(tau: &CMatrix, ctx: &ThetaContext) -> Result<Complex64> {
    let n = tau.size();
    if n != ctx.degree {
        return Err(Error::arg("theta context degree mismatch"));
    }
    if !tau.is_symmetric(1e-12) {
        return Err(Error::arg("theta argument must be symmetric"));
    }
    if !tau.im_positive_definite() {
        return Err(Error::arg(
            "theta argument needs positive-definite imaginary part",
        ));
    }
    let lambda = tau.im_min_eigenvalue_bound()?;
    let decay = 2.0 * std::f64::consts::PI * lambda;
    let mut radius = None;
    for r in 1..=ctx.max_radius {
        let mut tail = 0.0;
        for m in r + 1..r + 60 {
            let shell = (2 * m + 1).pow(n as u32) as f64 - (2 * m - 1).pow(n as u32) as f64;
            tail += shell * (-decay * (m * m) as f64).exp();
        }
        if tail < ctx.tail_bound {
            radius = Some(r as i64);
            break;
        }
    }
    let r = radius.ok_or_else(|| Error::arg("theta truncation radius exceeds the context cap"))?;

    let two_pi = 2.0 * std::f64::consts::PI;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut u = vec![-r; n];
    'outer: loop {
        let mut z = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                z += tau[(i, j)] * (u[i] * u[j]) as f64;
            }
        }
        // exp(2πi z)
        let w = (-two_pi * z.im).exp();
        let phase = two_pi * z.re;
        acc += Complex64::new(phase.cos(), phase.sin()) * w;

        let mut i = 0;
        loop {
            if i == n {
                break 'outer;
            }
            u[i] += 1;
            if u[i] <= r {
                break;
            }
            u[i] = -r;
            i += 1;
        }
    }
    Ok(acc)
}

/// Analytic square root of `det(Cτ + D)` normalized by
/// `lim_{λ→0+} S_{C,D}(iλI) = √det D ∈ R_+ ∪ iR_+` and continued to `τ`
/// along the straight segment inside the half-space, with adaptive steps
/// keeping consecutive arguments within a quarter turn.
pub fn s_cd_numeric(c: &IntMatrix, d: &IntMatrix, tau: &CMatrix) -> Result<Complex64> {
    let n = tau.size();
    if c.rows() != n || d.rows() != n {
        return Err(Error::arg("dimension mismatch in branch tracking"));
    }
    let det_d = d.det().to_f64().ok_or_else(|| Error::arg("det D overflow"))?;
    if det_d == 0.0 {
        return Err(Error::Singular);
    }
    let cc = CMatrix::from_int(c);
    let dc = CMatrix::from_int(d);
    let value_at = |t: &CMatrix| -> Complex64 { cc.mul(t).add(&dc).det() };

    let lambda0 = 1e-4;
    let start = CMatrix::identity_scaled(n, Complex64::new(0.0, lambda0));
    let z0 = value_at(&start);
    let reference = if det_d > 0.0 {
        Complex64::new(det_d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-det_d).sqrt())
    };
    let w0 = pick_root(z0.sqrt(), reference);
    if (w0 - reference).norm() > 0.5 * reference.norm() {
        return Err(Error::BranchTracking(
            "starting point drifted too far from the limit branch".into(),
        ));
    }
    let mut w = w0;

    let seg = |t: f64| -> CMatrix {
        let mut m = tau.scale(Complex64::new(t, 0.0));
        for i in 0..n {
            m[(i, i)] += Complex64::new(0.0, lambda0 * (1.0 - t));
        }
        m
    };

    let mut t = 0.0f64;
    let mut h = 1.0 / 64.0;
    let min_h = 1.0 / (1u64 << 24) as f64;
    while t < 1.0 {
        let t_next = (t + h).min(1.0);
        let z = value_at(&seg(t_next));
        if z.norm() == 0.0 {
            return Err(Error::BranchTracking(
                "determinant vanished on the path".into(),
            ));
        }
        let cand = pick_root(z.sqrt(), w);
        let dot = w.conj() * cand;
        if dot.re <= 0.0 {
            h /= 2.0;
            if h < min_h {
                return Err(Error::BranchTracking(
                    "argument jump persisted after refinement".into(),
                ));
            }
            continue;
        }
        w = cand;
        t = t_next;
        h = (h * 2.0).min(1.0 / 16.0);
    }
    Ok(w)
}

fn pick_root(principal: Complex64, near: Complex64) -> Complex64 {
    if (principal - near).norm() <= (-principal - near).norm() {
        principal
    } else {
        -principal
    }
}

/// Outcome of one numeric transformation check.
#[derive(Clone, Debug)]
pub struct TransformationReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub rel_error: f64,
}

impl TransformationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "lhs": { "re": self.lhs.re, "im": self.lhs.im },
            "rhs": { "re": self.rhs.re, "im": self.rhs.im },
            "rel_error": self.rel_error,
        })
    }
}

/// Extract the `(A B; C D)` blocks of a `2n×2n` element.
pub fn symplectic_blocks(
    gamma: &IntMatrix,
) -> Result<(IntMatrix, IntMatrix, IntMatrix, IntMatrix)> {
    if !gamma.is_square() || gamma.rows() % 2 != 0 {
        return Err(Error::arg("expected a 2n×2n matrix"));
    }
    let n = gamma.rows() / 2;
    Ok((
        gamma.submatrix(0, 0, n, n),
        gamma.submatrix(0, n, n, n),
        gamma.submatrix(n, 0, n, n),
        gamma.submatrix(n, n, n, n),
    ))
}

pub fn is_symplectic(gamma: &IntMatrix) -> bool {
    let Ok((a, b, c, d)) = symplectic_blocks(gamma) else {
        return false;
    };
    a.mul(&b.transpose()).is_symmetric()
        && c.mul(&d.transpose()).is_symmetric()
        && a.mul(&d.transpose()).sub(&b.mul(&c.transpose())) == IntMatrix::identity(a.rows())
}

/// Compares `θ(γτ)/θ(τ)` against `(conj G_C(D)/√det D) · S_{C,D}(τ)` for
/// `γ ∈ Γ_0(4)` and reports the relative error.
pub fn verify_transformation(
    gamma: &IntMatrix,
    tau: &CMatrix,
    ctx: &ThetaContext,
    budget: u64,
) -> Result<TransformationReport> {
    if !is_symplectic(gamma) {
        return Err(Error::arg("transformation check needs a symplectic matrix"));
    }
    let (a, b, c, d) = symplectic_blocks(gamma)?;
    let four = BigInt::from(4);
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            if !c[(i, j)].mod_floor(&four).is_zero() {
                return Err(Error::arg("transformation check needs 4 | C"));
            }
        }
    }
    let ac = CMatrix::from_int(&a);
    let bc = CMatrix::from_int(&b);
    let cc = CMatrix::from_int(&c);
    let dc = CMatrix::from_int(&d);

    let num = ac.mul(tau).add(&bc);
    let den = cc.mul(tau).add(&dc);
    let gamma_tau = num.mul(&den.inverse()?);

    let theta_top = theta_numeric(&gamma_tau, ctx)?;
    let theta_bot = theta_numeric(tau, ctx)?;
    let lhs = theta_top / theta_bot;

    let mult = theta_multiplier_with_budget(&c, &d, budget)?.embed();
    let s = s_cd_numeric(&c, &d, tau)?;
    let rhs = mult * s;

    Ok(TransformationReport {
        lhs,
        rhs,
        rel_error: (lhs - rhs).norm() / rhs.norm(),
    })
}

/// Numeric check of the translation rule: the multiplier data of
/// `(C, D + CY)` evaluated at `τ` must match that of `(C, D)` at `τ + Y`.
pub fn verify_translation(
    c: &IntMatrix,
    d: &IntMatrix,
    y: &IntMatrix,
    tau: &CMatrix,
    budget: u64,
) -> Result<f64> {
    if !y.is_symmetric() {
        return Err(Error::arg("translation needs symmetric Y"));
    }
    let dy = d.add(&c.mul(y));
    let lhs = theta_multiplier_with_budget(c, &dy, budget)?.embed() * s_cd_numeric(c, &dy, tau)?;
    let tau_shift = tau.add(&CMatrix::from_int(y));
    let rhs =
        theta_multiplier_with_budget(c, d, budget)?.embed() * s_cd_numeric(c, d, &tau_shift)?;
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// Numeric check that `S_{C,D} = S_{EC,ED}` for `E ∈ SL_n(Z)`.
pub fn verify_scd_left_invariance(
    c: &IntMatrix,
    d: &IntMatrix,
    e: &IntMatrix,
    tau: &CMatrix,
) -> Result<f64> {
    let lhs = s_cd_numeric(c, d, tau)?;
    let rhs = s_cd_numeric(&e.mul(c), &e.mul(d), tau)?;
    Ok((lhs - rhs).norm() / rhs.norm().max(1e-30))
}
