//! Dense complex matrices with tolerance-aware Hermitian and PSD tests.
//!
//! Matrices are small (dimension well below 64) and stored row-major. The
//! Hermitian eigensolver is a cyclic complex Jacobi iteration, which is
//! slow for large inputs but accurate to a few ulps on the tiny operators
//! this crate deals with.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Numerical tolerances shared by every check in the crate.
///
/// All tolerances are absolute; operators in scope have trace at most one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm_tol: f64,
    pub psd_tol: f64,
    pub trace_tol: f64,
    pub zero_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm_tol: 1e-9,
            psd_tol: 1e-9,
            trace_tol: 1e-9,
            zero_tol: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("herm_tol", self.herm_tol),
            ("psd_tol", self.psd_tol),
            ("trace_tol", self.trace_tol),
            ("zero_tol", self.zero_tol),
        ];
        let bad: Vec<String> = fields
            .iter()
            .filter(|(_, v)| !v.is_finite() || *v < 0.0)
            .map(|(name, v)| format!("{name} must be finite and nonnegative (got {v})"))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// Square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from rows, rejecting ragged, non-square or non-finite input.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
            for (c, z) in row.into_iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
                data.push(z);
            }
        }
        Ok(Self { dim, data })
    }

    /// Outer product `v v†`.
    pub fn outer(v: &[C64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.dim.max(1)).take(self.dim).map(<[C64]>::to_vec).collect()
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.dim).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
    }

    /// Max-norm of `M − M†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let mut acc = ZERO;
        for i in 0..self.dim {
            let row: C64 = (0..self.dim).map(|j| self[(i, j)] * v[j]).sum();
            acc += v[i].conj() * row;
        }
        acc
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self - other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self * other)
    }
}

// Serialized as rows of `[re, im]` pairs.
impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .rows()
            .iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        ComplexMatrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|p| C64::new(p[0], p[1])).collect())
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

// Operator impls panic on dimension mismatch; the `try_*` methods check.
impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

/// Real spectrum (ascending) and orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct Eigendecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigendecomposition {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†`, skipping eigenpairs where `f` returns `None`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> Option<f64>) -> ComplexMatrix {
        let n = self.vectors.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (idx, &lambda) in self.values.iter().enumerate() {
            let Some(w) = f(lambda) else { continue };
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, idx)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, idx)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.spectral_map(Some)
    }

    /// Orthogonal projector onto eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> ComplexMatrix {
        self.spectral_map(|l| keep(l).then_some(1.0))
    }
}

/// True iff `max |M − M†| ≤ tol`.
pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.hermiticity_residual() <= tol
}

/// Eigendecomposition of a Hermitian matrix (within the default `herm_tol`).
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Eigendecomposition> {
    eig_hermitian_with_tol(m, Tolerances::default().herm_tol)
}

pub fn eig_hermitian_with_tol(m: &ComplexMatrix, herm_tol: f64) -> Result<Eigendecomposition> {
    let residual = m.hermiticity_residual();
    if residual > herm_tol {
        return Err(Error::NotHermitian {
            residual,
            tol: herm_tol,
        });
    }
    if !m.is_finite() {
        return Err(Error::Validation(vec!["matrix has non-finite entries".into()]));
    }
    Ok(jacobi_eigen(m.hermitian_part()))
}

/// Smallest eigenvalue of a Hermitian matrix; the PSD margin.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.min_value())
}

/// True iff the minimum eigenvalue is at least `−tol`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -tol)
}

/// True iff the support of `b` lies inside the support of `a`.
///
/// Supports are spanned by eigenvectors with eigenvalue above `tol`; an
/// eigenvector of `b` counts as contained when the norm of its component
/// outside the support of `a` is at most `√tol`.
pub fn support_contains(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<bool> {
    a.check_same_dim(b)?;
    let ea = eig_hermitian(a)?;
    let eb = eig_hermitian(b)?;
    let proj_a = ea.projector(|l| l > tol);
    let bound = tol.sqrt();
    for (idx, &lambda) in eb.values.iter().enumerate() {
        if lambda <= tol {
            continue;
        }
        let v = eb.vector(idx);
        let pv = proj_a.mul_vec(&v);
        let residual = v
            .iter()
            .zip(&pv)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > bound {
            return Ok(false);
        }
    }
    Ok(true)
}

fn jacobi_eigen(mut a: ComplexMatrix) -> Eigendecomposition {
    let n = a.dim();
    let mut v = ComplexMatrix::identity(n);
    let frob: f64 = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-18 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|i| (a[(i, i)].re, fix_phase(v.column(i))))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    // Degenerate eigenvalues: order their vectors lexicographically.
    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let tie = 1e-12 * scale;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|x, y| lexicographic(&x.1, &y.1));
        }
        start = end;
    }

    let mut vectors = ComplexMatrix::zeros(n);
    let mut values = Vec::with_capacity(n);
    for (c, (lambda, vec)) in pairs.into_iter().enumerate() {
        values.push(lambda);
        for (r, z) in vec.into_iter().enumerate() {
            vectors[(r, c)] = z;
        }
    }
    Eigendecomposition { values, vectors }
}

// One complex Jacobi rotation zeroing a[p][q]: J = diag-phase(q) · real rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let j_pp = C64::new(c, 0.0);
    let j_pq = C64::new(s, 0.0);
    let j_qp = -phase.conj() * s;
    let j_qq = phase.conj() * c;

    let n = a.dim();
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * j_pp + aiq * j_qp;
        a[(i, q)] = aip * j_pq + aiq * j_qq;
    }
    for i in 0..n {
        let api = a[(p, i)];
        let aqi = a[(q, i)];
        a[(p, i)] = j_pp.conj() * api + j_qp.conj() * aqi;
        a[(q, i)] = j_pq.conj() * api + j_qq.conj() * aqi;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * j_pp + viq * j_qp;
        v[(i, q)] = vip * j_pq + viq * j_qq;
    }
}

// Rotate the global phase so the first non-negligible component is real positive.
fn fix_phase(mut vec: Vec<C64>) -> Vec<C64> {
    if let Some(z) = vec.iter().find(|z| z.norm() > 1e-12).copied() {
        let rot = z.conj() / z.norm();
        for x in vec.iter_mut() {
            *x *= rot;
        }
    }
    vec
}

fn lexicographic(x: &[C64], y: &[C64]) -> std::cmp::Ordering {
    for (a, b) in x.iter().zip(y) {
        let ord = a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
        if ord.is_ne() {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}
