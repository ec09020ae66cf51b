//! Dense real symmetric matrices.
//!
//! Storage is the packed lower triangle, row by row: entry `(i, j)` with
//! `i >= j` lives at `i * (i + 1) / 2 + j`. Symmetry therefore holds by
//! construction. The eigensolver is a cyclic Jacobi method, which is plenty
//! at the sizes this crate works with (d up to a few dozen, n up to a few
//! hundred for the modified-Hessian checks).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{check_dim, Error, Result};

const SQRT2: f64 = core::f64::consts::SQRT_2;
const JACOBI_MAX_SWEEPS: usize = 30;
const JACOBI_ABS_TOL: f64 = 1e-20;

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

/// `d(d+1)/2`
#[inline]
pub fn tri_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Inverse of [`tri_len`], `None` when `len` is not triangular.
pub fn tri_dim(len: usize) -> Option<usize> {
    let d = ((libm::sqrt(8.0 * len as f64 + 1.0) - 1.0) / 2.0) as usize;
    (d.saturating_sub(1)..=d + 1).find(|&k| tri_len(k) == len)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymMatrix {
    dim: usize,
    packed: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            packed: vec![0.0; tri_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, alpha: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, alpha);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Builds from a row-major `dim x dim` array, reading the lower triangle only.
    pub fn from_full(dim: usize, full: &[f64]) -> Result<Self> {
        check_dim("SymMatrix::from_full", dim * dim, full.len())?;
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, full[i * dim + j]);
            }
        }
        Ok(m)
    }

    /// Builds from nested rows; the lower triangle is read.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            for j in 0..=i {
                m.set(i, j, row[j]);
            }
        }
        m
    }

    /// Packed lower-triangle constructor.
    pub fn from_packed(packed: Vec<f64>) -> Result<Self> {
        let dim = tri_dim(packed.len()).ok_or(Error::NotTriangular(packed.len()))?;
        Ok(Self { dim, packed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.packed[packed_index(i, j)] = v;
    }

    pub fn to_full(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = self.get(i, j);
                out[i * d + j] = v;
                out[j * d + i] = v;
            }
        }
        out
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product; panics on dimension mismatch (see [`frob_inner`]).
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "SymMatrix::dot dimension");
        let mut diag = 0.0;
        let mut off = 0.0;
        for i in 0..self.dim {
            let row = i * (i + 1) / 2;
            for j in 0..i {
                off += self.packed[row + j] * other.packed[row + j];
            }
            diag += self.packed[row + i] * other.packed[row + i];
        }
        diag + 2.0 * off
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn scale(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            packed: self.packed.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) {
        assert_eq!(self.dim, other.dim, "SymMatrix::axpy dimension");
        for (a, b) in self.packed.iter_mut().zip(&other.packed) {
            *a += alpha * b;
        }
    }

    pub fn add_identity(&mut self, alpha: f64) {
        for i in 0..self.dim {
            self.packed[i * (i + 1) / 2 + i] += alpha;
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "SymMatrix::mul_vec dimension");
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let row = i * (i + 1) / 2;
            for j in 0..i {
                let a = self.packed[row + j];
                out[i] += a * v[j];
                out[j] += a * v[i];
            }
            out[i] += self.packed[row + i] * v[i];
        }
        out
    }

    /// `v^T A v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        crate::dense::dot(&self.mul_vec(v), v)
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|v| v.is_finite())
    }

    /// Lower Cholesky factor, `None` if a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Cholesky> {
        let n = self.dim;
        let mut l = vec![0.0; tri_len(n)];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[packed_index(i, k)] * l[packed_index(j, k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[packed_index(i, i)] = libm::sqrt(s);
                } else {
                    l[packed_index(i, j)] = s / l[packed_index(j, j)];
                }
            }
        }
        Some(Cholesky { dim: n, l })
    }
}

/// Packed lower-triangular Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[packed_index(i, k)] * y[k];
            }
            y[i] = s / self.l[packed_index(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[packed_index(k, i)] * y[k];
            }
            y[i] = s / self.l[packed_index(i, i)];
        }
        y
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

/// Isometric vectorization `(a11, √2 a12, a22, √2 a13, √2 a23, a33, ...)`.
pub fn svec(a: &SymMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.packed.len());
    for i in 0..a.dim {
        for j in 0..=i {
            let v = a.get(i, j);
            out.push(if i == j { v } else { SQRT2 * v });
        }
    }
    out
}

pub fn smat(v: &[f64]) -> Result<SymMatrix> {
    let dim = tri_dim(v.len()).ok_or(Error::NotTriangular(v.len()))?;
    let mut m = SymMatrix::zeros(dim);
    let mut k = 0;
    for i in 0..dim {
        for j in 0..=i {
            m.set(i, j, if i == j { v[k] } else { v[k] / SQRT2 });
            k += 1;
        }
    }
    Ok(m)
}

/// Position of entry `(i, j)` in [`svec`] output.
pub fn svec_index(i: usize, j: usize) -> usize {
    packed_index(i, j)
}

pub fn frob_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dim("frob_inner", a.dim, b.dim)?;
    Ok(a.dot(b))
}

pub fn frob_norm(a: &SymMatrix) -> f64 {
    a.norm()
}

/// `A = Q diag(lambda) Q^T` with eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    dim: usize,
    /// Row-major `d x d`; column `k` is the eigenvector for `lambda[k]`.
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn q_at(&self, i: usize, k: usize) -> f64 {
        self.q[i * self.dim + k]
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.q_at(i, k)).collect()
    }

    /// `Q diag(f(lambda)) Q^T`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.dim;
        let w: Vec<f64> = self.lambda.iter().map(|&l| f(l)).collect();
        let mut out = SymMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..d {
                    if w[k] != 0.0 {
                        s += w[k] * self.q_at(i, k) * self.q_at(j, k);
                    }
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }

    pub fn positive_part(&self) -> SymMatrix {
        self.reconstruct_with(|l| l.max(0.0))
    }

    /// `Q^T H Q` as a row-major full matrix.
    pub fn rotate_in(&self, h: &SymMatrix) -> Vec<f64> {
        let d = self.dim;
        let hf = h.to_full();
        // tmp = H Q
        let mut tmp = vec![0.0; d * d];
        for i in 0..d {
            for l in 0..d {
                let hil = hf[i * d + l];
                if hil != 0.0 {
                    for k in 0..d {
                        tmp[i * d + k] += hil * self.q[l * d + k];
                    }
                }
            }
        }
        let mut out = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..=a {
                let mut s = 0.0;
                for i in 0..d {
                    s += self.q[i * d + a] * tmp[i * d + b];
                }
                out[a * d + b] = s;
                out[b * d + a] = s;
            }
        }
        out
    }

    /// `Q G Q^T` for a symmetric row-major full `G`.
    pub fn rotate_out(&self, g: &[f64]) -> SymMatrix {
        let d = self.dim;
        let mut tmp = vec![0.0; d * d];
        // tmp = Q G
        for i in 0..d {
            for k in 0..d {
                let qik = self.q[i * d + k];
                if qik != 0.0 {
                    for b in 0..d {
                        tmp[i * d + b] += qik * g[k * d + b];
                    }
                }
            }
        }
        let mut out = SymMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let mut s = 0.0;
                for b in 0..d {
                    s += tmp[i * d + b] * self.q[j * d + b];
                }
                out.set(i, j, s);
            }
        }
        out
    }

    /// First divided differences of `max(., 0)` on the spectrum: the weight
    /// matrix of the (Clarke) derivative of the PSD projection at the source
    /// matrix, in the eigenbasis.
    pub fn projection_weights(&self) -> Vec<f64> {
        let d = self.dim;
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let (li, lj) = (self.lambda[i], self.lambda[j]);
                w[i * d + j] = if li > 0.0 && lj > 0.0 {
                    1.0
                } else if li <= 0.0 && lj <= 0.0 {
                    0.0
                } else {
                    (li.max(0.0) - lj.max(0.0)) / (li - lj)
                };
            }
        }
        w
    }

    /// Directional derivative of `[.]_+` at the source matrix along `h`.
    pub fn projection_derivative(&self, h: &SymMatrix) -> SymMatrix {
        let w = self.projection_weights();
        let mut g = self.rotate_in(h);
        for (gv, wv) in g.iter_mut().zip(&w) {
            *gv *= wv;
        }
        self.rotate_out(&g)
    }
}

fn off_diag_norm(a: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..d {
        for q in p + 1..d {
            s += a[p * d + q] * a[p * d + q];
        }
    }
    libm::sqrt(2.0 * s)
}

/// Cyclic Jacobi eigendecomposition.
///
/// Stops when the off-diagonal Frobenius norm drops to `1e-14 * |A|_F`.
/// Eigenvalues are sorted descending (stable), and every eigenvector is
/// signed so its first entry of magnitude above `1e-12` is positive.
pub fn eig_sym(a: &SymMatrix) -> Result<EigenDecomposition> {
    let d = a.dim;
    if !a.is_finite() {
        return Err(Error::NonFinite {
            callback: "eig_sym input",
        });
    }
    let mut m = a.to_full();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let norm = a.norm();
    let floor = JACOBI_ABS_TOL * norm;
    let mut sweep = 0;
    loop {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps: sweep,
                off_norm: off_diag_norm(&m, d),
                norm,
            });
        }
        sweep += 1;
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                // Negligible relative to both diagonals (keeps small eigenvalues
                // accurate next to large ones) or to the whole matrix.
                if apq.abs() <= (f64::EPSILON * libm::sqrt(app.abs() * aqq.abs())).max(floor) {
                    m[p * d + q] = 0.0;
                    m[q * d + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let t = 1.0 / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                m[p * d + q] = 0.0;
                m[q * d + p] = 0.0;
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let raw: Vec<f64> = (0..d).map(|i| m[i * d + i]).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
    let mut q = vec![0.0; d * d];
    let mut lambda = Vec::with_capacity(d);
    for (col, &src) in order.iter().enumerate() {
        lambda.push(raw[src]);
        let flip = (0..d)
            .map(|i| v[i * d + src])
            .find(|x| x.abs() > 1e-12)
            .is_some_and(|x| x < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        for i in 0..d {
            q[i * d + col] = sign * v[i * d + src];
        }
    }
    Ok(EigenDecomposition { dim: d, q, lambda })
}

pub fn psd_project(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(eig_sym(a)?.positive_part())
}

/// Projection onto `{ Z : O <= Z <= zmax I }`.
pub fn spectral_box_project(a: &SymMatrix, zmax: f64) -> Result<SymMatrix> {
    if !(zmax > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "zmax must be positive, got {zmax}"
        )));
    }
    Ok(eig_sym(a)?.reconstruct_with(|l| l.clamp(0.0, zmax)))
}

pub fn min_eig(a: &SymMatrix) -> Result<f64> {
    let e = eig_sym(a)?;
    Ok(e.lambda.last().copied().unwrap_or(0.0))
}

pub fn max_eig(a: &SymMatrix) -> Result<f64> {
    let e = eig_sym(a)?;
    Ok(e.lambda.first().copied().unwrap_or(0.0))
}
