//! Dense complex matrices for small Hilbert spaces and a cyclic Jacobi
//! eigensolver for Hermitian operators.
//!
//! Everything here is sized for desk-scale work (dimension up to a few
//! dozen). Tolerances are relative to `1 + ‖·‖_max`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default relative tolerance for merging nearly equal eigenvalues.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Relative tolerance of the Hermiticity precondition.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = c(d, 0.0);
        }
        m
    }

    /// Builds a matrix from rows; fails unless the rows form a non-empty
    /// square array of finite entries.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch(0, 1));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(row.len(), dim));
            }
            data.extend(row);
        }
        let m = CMatrix { dim, data };
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
                .collect(),
        )
    }

    /// |v⟩⟨v|
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
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn check_dim(&self, other: &CMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(self.mul(other))
    }

    /// Product without the dimension check; callers guarantee equal sizes.
    pub(crate) fn mul(&self, other: &CMatrix) -> CMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// P·M·P
    pub(crate) fn sandwich(&self, inner: &CMatrix) -> CMatrix {
        self.mul(inner).mul(self)
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// tr(A·B) without forming the product.
    pub fn trace_of_product(&self, other: &CMatrix) -> Result<C64> {
        self.check_dim(other)?;
        Ok(self.trace_mul(other))
    }

    pub(crate) fn trace_mul(&self, other: &CMatrix) -> C64 {
        let n = self.dim;
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub(crate) fn zip_with(&self, other: &CMatrix, f: impl Fn(C64, C64) -> C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub(crate) fn add_scaled_in_place(&mut self, other: &CMatrix, s: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        self.scale(c(s, 0.0))
    }

    /// A·B − B·A
    pub fn commutator(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(self.mul(other).zip_with(&other.mul(self), |a, b| a - b))
    }

    /// max |M − M†| entrywise.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> CMatrix {
        let adj = self.adjoint();
        self.zip_with(&adj, |a, b| (a + b) * 0.5)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }
}

/// Grouped spectral decomposition `M = Σ αᵢ Pᵢ` with ascending, well
/// separated eigenvalues and orthogonal eigenspace projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianSpectrum {
    eigenvalues: Vec<f64>,
    projectors: Vec<CMatrix>,
    bases: Vec<Vec<Vec<C64>>>,
}

impl HermitianSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// Orthonormal basis of the i-th eigenspace.
    pub fn basis(&self, i: usize) -> &[Vec<C64>] {
        &self.bases[i]
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn rank(&self, i: usize) -> usize {
        self.bases[i].len()
    }

    /// Σ αᵢ Pᵢ
    pub fn reconstruct(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim());
        for (a, p) in self.eigenvalues.iter().zip(&self.projectors) {
            m.add_scaled_in_place(p, *a);
        }
        m
    }

    /// Snaps eigenvalues lying within `1e-12·(1+|α|)` of an integer onto it,
    /// so that spectra such as {−1, 1} print and compare cleanly.
    pub(crate) fn snap_integers(&mut self) {
        for a in &mut self.eigenvalues {
            let r = a.round();
            if (*a - r).abs() <= 1e-12 * (1.0 + a.abs()) {
                *a = if r == 0.0 { 0.0 } else { r };
            }
        }
    }

    /// Regroups eigenspaces by a label per eigenvalue. Labels closer than
    /// `tol` are merged; the merged label is their mean.
    pub(crate) fn regroup(&self, labels: &[f64], tol: f64) -> HermitianSpectrum {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].total_cmp(&labels[b]));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for idx in order {
            match groups.last_mut() {
                Some(g) if labels[idx] - labels[*g.last().unwrap()] <= tol => g.push(idx),
                _ => groups.push(vec![idx]),
            }
        }
        let dim = self.dim();
        let mut out = HermitianSpectrum {
            eigenvalues: Vec::new(),
            projectors: Vec::new(),
            bases: Vec::new(),
        };
        for g in groups {
            let mean = g.iter().map(|&i| labels[i]).sum::<f64>() / g.len() as f64;
            let mut p = CMatrix::zeros(dim);
            let mut basis = Vec::new();
            for &i in &g {
                p.add_scaled_in_place(&self.projectors[i], 1.0);
                basis.extend(self.bases[i].iter().cloned());
            }
            out.eigenvalues.push(mean);
            out.projectors.push(p);
            out.bases.push(basis);
        }
        out
    }
}

/// Eigenvalues (ascending, unclustered) and matching orthonormal
/// eigenvectors of a Hermitian matrix by cyclic Jacobi rotations.
pub fn jacobi_eigen(m: &CMatrix) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = 4.0 * f64::EPSILON * scale;

    let off = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > target && scale > 0.0 {
        if sweeps == MAX_SWEEPS {
            return Err(Error::ConvergenceFailure(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // U = diag(1, conj(phase)) · [[c, s], [−s, c]] on the (p, q) plane.
                let upp = c(cs, 0.0);
                let upq = c(sn, 0.0);
                let uqp = phase.conj() * (-sn);
                let uqq = phase.conj() * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[(p, q)] = c(0.0, 0.0);
                a[(q, p)] = c(0.0, 0.0);
                a[(p, p)] = c(a[(p, p)].re, 0.0);
                a[(q, q)] = c(a[(q, q)].re, 0.0);
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n).map(|i| (a[(i, i)].re, v.column(i))).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(pairs.into_iter().unzip())
}

/// Spectral decomposition of a Hermitian matrix with eigenvalues closer
/// than `cluster_tol·(1+‖M‖_max)` merged into one eigenspace.
pub fn hermitian_eigendecompose(m: &CMatrix, cluster_tol: f64) -> Result<HermitianSpectrum> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if cluster_tol.is_nan() || cluster_tol <= 0.0 {
        return Err(Error::InvalidSubset(format!(
            "cluster_tol must be positive, got {cluster_tol}"
        )));
    }
    let norm = m.max_abs_norm();
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL * (1.0 + norm) {
        return Err(Error::NotHermitian(defect));
    }
    let (values, vectors) = jacobi_eigen(m)?;
    let raw = HermitianSpectrum {
        projectors: vectors.iter().map(|v| CMatrix::outer(v)).collect(),
        bases: vectors.into_iter().map(|v| vec![v]).collect(),
        eigenvalues: values.clone(),
    };
    Ok(raw.regroup(&values, cluster_tol * (1.0 + norm)))
}
