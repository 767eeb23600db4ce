//! Dense complex matrix kernels.
//!
//! Everything in the crate that lives in a matrix group or its Lie algebra is
//! carried by [`Matrix`]: row-major complex entries with a real/complex field
//! tag. Real matrices are complex matrices whose imaginary parts are exactly
//! zero, and every kernel below preserves that exactly (complex products of
//! reals never produce a nonzero imaginary part).
//!
//! All loops run in a fixed order so results are bit-stable on a given
//! platform.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Scaling threshold on `‖x‖₁` for the Padé-13 exponential.
const EXPM_THETA: f64 = 0.5;
/// Largest `‖x‖₁` accepted by [`expm`].
pub const EXPM_MAX_NORM: f64 = 1e3;
/// Square roots are taken until `‖u − I‖₁` drops below this.
const LOGM_SQRT_TARGET: f64 = 0.25;
const LOGM_PADE_DEGREE: usize = 7;
const DB_TOL: f64 = 1e-14;
const DB_MAX_STEPS: usize = 50;
const BRANCH_TOL: f64 = 1e-12;
const PIVOT_MIN: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    fn join(self, other: Field) -> Field {
        if self == Field::Real && other == Field::Real {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Spectral,
    Frobenius,
}

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
    field: Field,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{}, {:?})[", self.rows, self.cols, self.field)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                let z = self[(i, j)];
                if j > 0 {
                    write!(f, ", ")?;
                }
                if self.field == Field::Real {
                    write!(f, "{}", z.re)?;
                } else {
                    write!(f, "{}{:+}i", z.re, z.im)?;
                }
            }
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl Matrix {
    /// Builds a matrix from row-major complex entries, rejecting non-finite
    /// values. The field tag is `Real` when every imaginary part is zero.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        let field = if data.iter().all(|z| z.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        };
        Ok(Matrix {
            rows,
            cols,
            data,
            field,
        })
    }

    pub fn real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Matrix::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
            field: Field::Real,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m.field = if entries.iter().all(|z| z.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        };
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Matrix::diag(&c)
    }

    pub fn scalar(z: C64) -> Self {
        Matrix::diag(&[z])
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        if z.im != 0.0 {
            self.field = Field::Complex;
        }
        self.data[i * self.cols + j] = z;
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

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn with_data(&self, data: Vec<C64>, field: Field) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
            field,
        }
    }

    pub fn scale(&self, z: C64) -> Matrix {
        let field = if z.im == 0.0 {
            self.field
        } else {
            Field::Complex
        };
        self.with_data(self.data.iter().map(|&x| x * z).collect(), field)
    }

    pub fn scale_real(&self, x: f64) -> Matrix {
        self.with_data(self.data.iter().map(|&z| z * x).collect(), self.field)
    }

    pub fn adjoint(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self[(i, j)].conj());
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
            field: self.field,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self[(i, j)]);
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
            field: self.field,
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).fold(ZERO, |acc, i| acc + self[(i, i)])
    }

    /// Maximum column sum of entry moduli.
    pub fn norm1(&self) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..self.cols {
            let mut s = 0.0;
            for i in 0..self.rows {
                s += self[(i, j)].norm();
            }
            best = best.max(s);
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn spectral(&self) -> f64 {
        op_norm(self, NormKind::Spectral)
    }

    /// `[a, b] = ab − ba`.
    pub fn commutator(&self, other: &Matrix) -> Matrix {
        &(self * other) - &(other * self)
    }

    /// Inverse without the residual bookkeeping of [`mat_inv`].
    pub fn inv(&self) -> Result<Matrix> {
        Lu::decompose(self)?.solve(&Matrix::identity(self.rows))
    }

    /// Drops imaginary parts below `tol`, retagging as real when possible.
    pub fn realify(mut self, tol: f64) -> Matrix {
        if self.data.iter().all(|z| z.im.abs() <= tol) {
            for z in &mut self.data {
                z.im = 0.0;
            }
            self.field = Field::Real;
        }
        self
    }

    /// Entry-wise distance `max |a_ij − b_ij|`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;

    /// Panics on a shape mismatch; use [`mat_mul`] for a checked product.
    fn mul(self, rhs: &'a Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut data = vec![ZERO; n * p];
        for i in 0..n {
            for j in 0..p {
                let mut acc = ZERO;
                for k in 0..m {
                    acc += self.data[i * m + k] * rhs.data[k * p + j];
                }
                data[i * p + j] = acc;
            }
        }
        Matrix {
            rows: n,
            cols: p,
            data,
            field: self.field.join(rhs.field),
        }
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &'a Matrix) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "matrix sum shape mismatch"
        );
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        self.with_data(data, self.field.join(rhs.field))
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &'a Matrix) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "matrix difference shape mismatch"
        );
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        self.with_data(data, self.field.join(rhs.field))
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.with_data(self.data.iter().map(|z| -z).collect(), self.field)
    }
}

/// Checked matrix product.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(a * b)
}

/// LU factorization with partial pivoting, `P A = L U`.
struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    field: Field,
}

impl Lu {
    fn decompose(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix is not square",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in (k + 1)..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > PIVOT_MIN) {
                return Err(Error::Singular {
                    pivot: k,
                    magnitude: best,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                for j in (k + 1)..n {
                    let t = lu[k * n + j];
                    lu[i * n + j] -= f * t;
                }
            }
        }
        Ok(Lu {
            n,
            lu,
            perm,
            field: a.field,
        })
    }

    fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.n;
        if b.rows != n {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, expected {n}",
                b.rows
            )));
        }
        let m = b.cols;
        let mut x = vec![ZERO; n * m];
        for i in 0..n {
            for j in 0..m {
                x[i * m + j] = b.data[self.perm[i] * m + j];
            }
        }
        for j in 0..m {
            for i in 0..n {
                let mut acc = x[i * m + j];
                for k in 0..i {
                    acc -= self.lu[i * n + k] * x[k * m + j];
                }
                x[i * m + j] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[i * m + j];
                for k in (i + 1)..n {
                    acc -= self.lu[i * n + k] * x[k * m + j];
                }
                x[i * m + j] = acc / self.lu[i * n + i];
            }
        }
        let out = Matrix {
            rows: n,
            cols: m,
            data: x,
            field: self.field.join(b.field),
        };
        if !out.is_finite() {
            return Err(Error::Singular {
                pivot: n - 1,
                magnitude: 0.0,
            });
        }
        Ok(out)
    }
}

/// An inverse together with its residual `‖a·a⁻¹ − I‖₁`.
#[derive(Clone, Debug)]
pub struct Inverse {
    pub matrix: Matrix,
    pub residual: f64,
}

pub fn mat_inv(a: &Matrix) -> Result<Inverse> {
    let inv = a.inv()?;
    let residual = (&(a * &inv) - &Matrix::identity(a.rows)).norm1();
    Ok(Inverse {
        matrix: inv,
        residual,
    })
}

/// Solves `a x = b`.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Lu::decompose(a)?.solve(b)
}

pub fn op_norm(a: &Matrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::Frobenius => a.frobenius(),
        NormKind::Spectral => spectral_norm(a),
    }
}

/// Largest singular value: the top eigenvalue of `a*a`, found by power
/// iteration from the all-ones vector after the gap has been amplified by
/// repeated normalized squaring. One- and two-column inputs use the closed
/// form of the Hermitian eigenproblem.
fn spectral_norm(a: &Matrix) -> f64 {
    if a.max_abs() == 0.0 {
        return 0.0;
    }
    let m = &a.adjoint() * a;
    let n = m.rows;
    if n == 1 {
        return m.data[0].re.max(0.0).sqrt();
    }
    if n == 2 {
        let p = m.data[0].re;
        let q = m.data[3].re;
        let b = m.data[1].norm();
        let half = 0.5 * (p - q);
        let lam = 0.5 * (p + q) + half.hypot(b);
        return lam.max(0.0).sqrt();
    }
    let fro = m.frobenius();
    let mut p = m.scale_real(1.0 / fro);
    for _ in 0..64 {
        let q = &p * &p;
        let f = q.frobenius();
        if f == 0.0 {
            break;
        }
        let q = q.scale_real(1.0 / f);
        let change = q.max_abs_diff(&p);
        p = q;
        if change <= 1e-15 {
            break;
        }
    }
    let mut v: Vec<C64> = (0..n)
        .map(|i| (0..n).fold(ZERO, |acc, j| acc + p.data[i * n + j]))
        .collect();
    let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if vn <= 1e-8 * p.frobenius() {
        // All-ones is (numerically) orthogonal to the top eigenspace.
        let mut best = 0;
        let mut best_norm = -1.0;
        for j in 0..n {
            let c: f64 = (0..n).map(|i| p.data[i * n + j].norm_sqr()).sum();
            if c > best_norm {
                best_norm = c;
                best = j;
            }
        }
        v = (0..n).map(|i| p.data[i * n + best]).collect();
    }
    normalize(&mut v);
    let mut lam = rayleigh(&m, &v);
    for _ in 0..100 {
        let mut w = matvec(&m, &v);
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if wn == 0.0 {
            break;
        }
        for z in &mut w {
            *z /= wn;
        }
        v = w;
        let next = rayleigh(&m, &v);
        let done = (next - lam).abs() <= 1e-12 * next.abs();
        lam = next;
        if done {
            break;
        }
    }
    lam.max(0.0).sqrt()
}

fn matvec(m: &Matrix, v: &[C64]) -> Vec<C64> {
    (0..m.rows)
        .map(|i| (0..m.cols).fold(ZERO, |acc, j| acc + m.data[i * m.cols + j] * v[j]))
        .collect()
}

fn rayleigh(m: &Matrix, v: &[C64]) -> f64 {
    let w = matvec(m, v);
    v.iter()
        .zip(&w)
        .fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
        .re
}

fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}

fn require_square(a: &Matrix, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} needs a square matrix, got {}x{}",
            a.rows, a.cols
        )))
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with the degree-13 diagonal
/// Padé approximant: `s = max(0, ⌈log₂(‖x‖₁/θ)⌉)`, `θ = 0.5`.
pub fn expm(x: &Matrix) -> Result<Matrix> {
    require_square(x, "expm")?;
    let norm = x.norm1();
    if !(norm <= EXPM_MAX_NORM) {
        return Err(Error::Overflow { norm });
    }
    let n = x.rows;
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    if n == 1 {
        return Ok(Matrix {
            data: vec![x.data[0].exp()],
            ..x.clone()
        });
    }
    let s = if norm <= EXPM_THETA {
        0
    } else {
        (norm / EXPM_THETA).log2().ceil() as i32
    };
    let a = x.scale_real(0.5f64.powi(s));
    let id = Matrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let lin = |m6: f64, m4: f64, m2: f64, m0: f64| {
        let mut out = a6.scale_real(m6);
        out = &out + &a4.scale_real(m4);
        out = &out + &a2.scale_real(m2);
        &out + &id.scale_real(m0)
    };
    let u_inner = &(&a6 * &lin(b[13], b[11], b[9], 0.0)) + &lin(b[7], b[5], b[3], b[1]);
    let u = &a * &u_inner;
    let v = &(&a6 * &lin(b[12], b[10], b[8], 0.0)) + &lin(b[6], b[4], b[2], b[0]);
    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::Overflow { norm });
    }
    r.field = x.field;
    Ok(r)
}

/// Principal square root by the Denman–Beavers iteration.
pub fn sqrtm(a: &Matrix) -> Result<Matrix> {
    require_square(a, "sqrtm")?;
    let n = a.rows;
    let mut y = a.clone();
    let mut z = Matrix::identity(n);
    let mut last_change = f64::INFINITY;
    for _ in 0..DB_MAX_STEPS {
        let yi = y.inv()?;
        let zi = z.inv()?;
        let y_next = (&y + &zi).scale_real(0.5);
        let z_next = (&z + &yi).scale_real(0.5);
        let change = (&y_next - &y).norm1();
        let size = y_next.norm1();
        y = y_next;
        z = z_next;
        if change <= DB_TOL * size {
            return Ok(y);
        }
        // Roundoff stagnation after convergence.
        if change <= 1e-10 * size && change >= last_change {
            return Ok(y);
        }
        last_change = change;
    }
    Err(Error::NoConvergence(format!(
        "Denman-Beavers square root after {DB_MAX_STEPS} steps"
    )))
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Square roots are taken until `‖u^{1/2ᵏ} − I‖₁ ≤ 0.25`, the degree-7 Padé
/// approximant of `log(I + z)` is applied (in its Gauss–Legendre partial
/// fraction form) and the result is scaled by `2ᵏ`. Any eigenvalue on the
/// closed negative real axis is a [`Error::BranchCut`]; no alternate branch
/// is ever chosen.
pub fn logm(u: &Matrix) -> Result<Matrix> {
    require_square(u, "logm")?;
    let n = u.rows;
    let id = Matrix::identity(n);
    if n == 1 {
        let z = u.data[0];
        check_branch(z)?;
        return Ok(Matrix {
            data: vec![z.ln()],
            ..u.clone()
        });
    }
    let dist = (u - &id).spectral();
    if dist >= 1.0 {
        for lam in eigenvalues(u)? {
            check_branch(lam)?;
        }
    }
    let mut x = u.clone();
    let mut k = 0;
    while (&x - &id).norm1() > LOGM_SQRT_TARGET {
        x = sqrtm(&x)?;
        k += 1;
        if k > 64 {
            return Err(Error::NoConvergence("logm square-root phase".into()));
        }
    }
    let z = &x - &id;
    let mut out = log1p_pade(&z)?.scale_real(2f64.powi(k));
    out.field = u.field;
    if u.field == Field::Real {
        for v in &mut out.data {
            v.im = 0.0;
        }
    }
    Ok(out)
}

fn check_branch(lam: C64) -> Result<()> {
    let scale = lam.norm().max(1.0);
    if lam.re <= BRANCH_TOL * scale && lam.im.abs() <= BRANCH_TOL * scale {
        return Err(Error::BranchCut {
            re: lam.re,
            im: lam.im,
        });
    }
    Ok(())
}

/// `[m/m]` Padé approximant of `log(I + z)` written as
/// `Σ wⱼ z (I + xⱼ z)⁻¹` over Gauss–Legendre nodes on `[0, 1]`.
fn log1p_pade(z: &Matrix) -> Result<Matrix> {
    let n = z.rows;
    let (nodes, weights) = gauss_legendre(LOGM_PADE_DEGREE);
    let id = Matrix::identity(n);
    let mut acc = Matrix::zeros(n, n);
    for (x, w) in nodes.iter().zip(&weights) {
        let xj = 0.5 * (x + 1.0);
        let wj = 0.5 * w;
        let denom = &id + &z.scale_real(xj);
        let term = solve(&denom, z)?;
        acc = &acc + &term.scale_real(wj);
    }
    Ok(acc)
}

/// Eigenvalues via Hessenberg reduction and shifted complex QR (Schur form).
pub fn eigenvalues(a: &Matrix) -> Result<Vec<C64>> {
    require_square(a, "eigenvalues")?;
    let n = a.rows;
    let mut h: Vec<Vec<C64>> = (0..n)
        .map(|i| a.data[i * n..(i + 1) * n].to_vec())
        .collect();
    hessenberg_in_place(&mut h);
    let mut eig = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[l][l].norm() + h[l - 1][l - 1].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[l][l - 1].norm() <= f64::EPSILON * s {
                h[l][l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig.push(h[hi][hi]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 300 {
            return Err(Error::NoConvergence("QR eigenvalue iteration".into()));
        }
        let mu = if iter % 11 == 10 {
            h[hi][hi] + C64::new(h[hi][hi - 1].norm(), 0.0)
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        for i in l..=hi {
            h[i][i] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            for j in k..=hi {
                let (x, y) = (h[k][j], h[k + 1][j]);
                h[k][j] = c.conj() * x + s.conj() * y;
                h[k + 1][j] = -s * x + c * y;
            }
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = l + idx;
            let top = (k + 2).min(hi);
            for i in l..=top {
                let (x, y) = (h[i][k], h[i][k + 1]);
                h[i][k] = x * c + y * s;
                h[i][k + 1] = -x * s.conj() + y * c.conj();
            }
        }
        for i in l..=hi {
            h[i][i] += mu;
        }
    }
    eig.push(h[0][0]);
    eig.reverse();
    Ok(eig)
}

fn givens(a: C64, b: C64) -> (C64, C64) {
    let r = a.norm().hypot(b.norm());
    if r == 0.0 {
        (ONE, ZERO)
    } else {
        (a / r, b / r)
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let (m1, m2) = (m + disc, m - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

fn hessenberg_in_place(h: &mut [Vec<C64>]) {
    let n = h.len();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[i][k]).collect();
        let xn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xn == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            ONE
        } else {
            x[0] / x[0].norm()
        };
        let mut v = x.clone();
        v[0] += phase * xn;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vn;
        }
        // H ← (I − 2vv*) H
        for j in 0..n {
            let dot = v
                .iter()
                .enumerate()
                .fold(ZERO, |acc, (i, vi)| acc + vi.conj() * h[k + 1 + i][j]);
            for (i, vi) in v.iter().enumerate() {
                h[k + 1 + i][j] -= *vi * dot * 2.0;
            }
        }
        // H ← H (I − 2vv*)
        for row in h.iter_mut() {
            let dot = v
                .iter()
                .enumerate()
                .fold(ZERO, |acc, (i, vi)| acc + row[k + 1 + i] * vi);
            for (i, vi) in v.iter().enumerate() {
                row[k + 1 + i] -= dot * vi.conj() * 2.0;
            }
        }
    }
}

/// Baker–Campbell–Hausdorff series for `log(eᵃeᵇ)` through the order-4
/// terms. Requires `‖a‖ + ‖b‖ ≤ 0.5` in the spectral norm.
pub fn bch4(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    require_square(a, "bch4")?;
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::Dimension("bch4 operands differ in shape".into()));
    }
    let size = a.spectral() + b.spectral();
    if size > 0.5 {
        return Err(Error::Precondition(format!(
            "bch4 needs ‖a‖ + ‖b‖ ≤ 0.5, got {size}"
        )));
    }
    let ab = a.commutator(b);
    let a_ab = a.commutator(&ab);
    let b_ba = b.commutator(&b.commutator(a));
    let b_a_ab = b.commutator(&a_ab);
    let mut out = a + b;
    out = &out + &ab.scale_real(0.5);
    out = &out + &(&a_ab + &b_ba).scale_real(1.0 / 12.0);
    out = &out - &b_a_ab.scale_real(1.0 / 24.0);
    Ok(out)
}
