//! Dense complex linear algebra over tensor-product spaces.
//!
//! Matrices are stored row-major. In every tensor product the leftmost factor
//! is the slowest-varying index, so `kron(A, B)[(i1*d2 + i2, j1*d2 + j2)]`
//! equals `A[(i1, j1)] * B[(i2, j2)]`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest total dimension any matrix, ket or layout may reach.
pub const MAX_DIM: usize = 4096;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl TryFrom<RawMatrix> for CMatrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        CMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<CMatrix> for RawMatrix {
    fn from(m: CMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix dimensions must be positive".into()));
        }
        if rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::DimensionCap {
                dim: rows.max(cols),
                cap: MAX_DIM,
            });
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == cols), "ragged rows");
        let data = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self { rows: r, cols, data }
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Ket {
        Ket {
            amps: (0..self.rows).map(|i| self[(i, j)]).collect(),
        }
    }

    /// `‖M − M†‖_F`.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol * (1.0 + self.frobenius_norm())
    }

    /// `‖M†M − I‖_F`.
    pub fn unitary_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self - Self::identity(self.rows)).frobenius_norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_residual() <= tol
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let residual = self.unitary_residual();
        if residual <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary { residual })
        }
    }

    pub fn apply(&self, v: &Ket) -> Ket {
        assert_eq!(self.cols, v.dim(), "matrix/ket dimension mismatch");
        let amps = (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(&v.amps).map(|(a, b)| a * b).sum()
            })
            .collect();
        Ket { amps }
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_re(0.5)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = CMatrix::zeros(n, p);
        for i in 0..n {
            let out_row = &mut out.data[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * p..(k + 1) * p];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        &self * &rhs
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &CMatrix {
            type Output = CMatrix;
            fn $method(self, rhs: &CMatrix) -> CMatrix {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
                CMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $trait for CMatrix {
            type Output = CMatrix;
            fn $method(self, rhs: CMatrix) -> CMatrix {
                &self $op &rhs
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// State vector. Kets produced by unnormalized operations (for instance
/// `Λ|Φ⟩`) are legal; physical inputs are checked with [`Ket::ensure_normalized`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct Ket {
    amps: Vec<C64>,
}

impl TryFrom<Vec<C64>> for Ket {
    type Error = Error;
    fn try_from(amps: Vec<C64>) -> Result<Self> {
        Ket::new(amps)
    }
}

impl From<Ket> for Vec<C64> {
    fn from(k: Ket) -> Self {
        k.amps
    }
}

/// Normalization tolerance for physical input states.
pub const NORM_TOL: f64 = 1e-10;

impl Ket {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Dimension("ket must have positive dimension".into()));
        }
        if amps.len() > MAX_DIM {
            return Err(Error::DimensionCap {
                dim: amps.len(),
                cap: MAX_DIM,
            });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            amps: vec![ZERO; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= f64::MIN_POSITIVE {
            return Err(Error::Unnormalized { norm: n });
        }
        Ok(self.scale(c(1.0 / n, 0.0)))
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() <= NORM_TOL {
            Ok(())
        } else {
            Err(Error::Unnormalized { norm: n })
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|&z| z * s).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        assert_eq!(self.dim(), other.dim(), "ket dimension mismatch");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|self⟩⟨other|`.
    pub fn outer(&self, other: &Ket) -> CMatrix {
        CMatrix::from_fn(self.dim(), other.dim(), |i, j| {
            self.amps[i] * other.amps[j].conj()
        })
    }

    pub fn density(&self) -> CMatrix {
        self.outer(self)
    }

    pub fn kron(&self, other: &Ket) -> Result<Ket> {
        let dim = self.dim() * other.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_DIM });
        }
        let mut amps = Vec::with_capacity(dim);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Ket { amps })
    }

    /// `⟨self|M|self⟩`.
    pub fn expectation(&self, m: &CMatrix) -> C64 {
        self.inner(&m.apply(self))
    }

    pub fn max_abs_diff(&self, other: &Ket) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Ket) -> Ket {
        Ket {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
        }
    }
}

/// `A ⊗ B` with the left factor as the slow index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::DimensionCap {
            dim: rows.max(cols),
            cap: MAX_DIM,
        });
    }
    let mut out = CMatrix::zeros(rows, cols);
    for i1 in 0..a.rows {
        for j1 in 0..a.cols {
            let x = a[(i1, j1)];
            if x == ZERO {
                continue;
            }
            for i2 in 0..b.rows {
                let row = i1 * b.rows + i2;
                for j2 in 0..b.cols {
                    out.data[row * cols + j1 * b.cols + j2] = x * b[(i2, j2)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all<'a>(ms: impl IntoIterator<Item = &'a CMatrix>) -> Result<CMatrix> {
    let mut acc = CMatrix::identity(1);
    for m in ms {
        acc = kron(&acc, m)?;
    }
    Ok(acc)
}

/// Ordered list of labeled tensor factors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, usize)>", into = "Vec<(String, usize)>")]
pub struct SpaceLayout {
    factors: Vec<(String, usize)>,
}

impl TryFrom<Vec<(String, usize)>> for SpaceLayout {
    type Error = Error;
    fn try_from(factors: Vec<(String, usize)>) -> Result<Self> {
        SpaceLayout::new(factors)
    }
}

impl From<SpaceLayout> for Vec<(String, usize)> {
    fn from(l: SpaceLayout) -> Self {
        l.factors
    }
}

impl SpaceLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        if factors.is_empty() {
            return Err(Error::Layout("layout needs at least one factor".into()));
        }
        let mut total: usize = 1;
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::Layout(format!("factor {label} has dimension 0")));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::Layout(format!("duplicate label {label}")));
            }
            total = total.saturating_mul(*dim);
            if total > MAX_DIM {
                return Err(Error::DimensionCap {
                    dim: total,
                    cap: MAX_DIM,
                });
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(l, _)| l.as_str())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].1)
    }

    /// Sub-layout holding the given labels, in layout order.
    pub fn sub_layout(&self, labels: &[&str]) -> Result<SpaceLayout> {
        for l in labels {
            self.position(l)?;
        }
        SpaceLayout::new(
            self.factors
                .iter()
                .filter(|(l, _)| labels.contains(&l.as_str()))
                .cloned(),
        )
    }

    /// Lifts `op`, acting on the listed (contiguous, in-order) factors, to the
    /// full space by padding with identities.
    pub fn embed(&self, op: &CMatrix, labels: &[&str]) -> Result<CMatrix> {
        if labels.is_empty() {
            return Err(Error::Layout("embed needs at least one label".into()));
        }
        let positions: Vec<usize> = labels
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<_>>()?;
        let first = positions[0];
        if positions.iter().enumerate().any(|(k, &p)| p != first + k) {
            return Err(Error::Layout(format!(
                "labels {labels:?} are not contiguous and in layout order"
            )));
        }
        let last = first + positions.len();
        let block: usize = self.factors[first..last].iter().map(|(_, d)| d).product();
        if !op.is_square() || op.rows() != block {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, factors {labels:?} span dimension {block}",
                op.rows(),
                op.cols()
            )));
        }
        let left: usize = self.factors[..first].iter().map(|(_, d)| d).product();
        let right: usize = self.factors[last..].iter().map(|(_, d)| d).product();
        kron(&kron(&CMatrix::identity(left), op)?, &CMatrix::identity(right))
    }
}

/// Traces out every factor not listed in `keep`. The result acts on the kept
/// factors in layout order.
pub fn partial_trace(m: &CMatrix, layout: &SpaceLayout, keep: &[&str]) -> Result<CMatrix> {
    if !m.is_square() || m.rows() != layout.total_dim() {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, layout has dimension {}",
            m.rows(),
            m.cols(),
            layout.total_dim()
        )));
    }
    for l in keep {
        layout.position(l)?;
    }
    let dims = layout.dims();
    let n = dims.len();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let kept: Vec<usize> = (0..n)
        .filter(|&k| keep.contains(&layout.factors()[k].0.as_str()))
        .collect();
    let traced: Vec<usize> = (0..n).filter(|k| !kept.contains(k)).collect();

    // Flat offsets contributed by each kept / traced multi-index.
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &k in factors {
            let mut next = Vec::with_capacity(offs.len() * dims[k]);
            for &o in &offs {
                for x in 0..dims[k] {
                    next.push(o + x * strides[k]);
                }
            }
            offs = next;
        }
        offs
    };
    let kept_offs = offsets(&kept);
    let traced_offs = offsets(&traced);

    let d = kept_offs.len();
    let mut out = CMatrix::zeros(d, d);
    for (i, &ri) in kept_offs.iter().enumerate() {
        for (j, &cj) in kept_offs.iter().enumerate() {
            out[(i, j)] = traced_offs.iter().map(|&t| m[(ri + t, cj + t)]).sum();
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Ket {
        self.vectors.column(k)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_real_diag(&self.values);
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }
}

/// Hermitian precondition tolerance, relative to `1 + ‖M‖_F`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Cyclic complex Jacobi eigensolver.
pub fn eig_hermitian(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Dimension("eigendecomposition needs a square matrix".into()));
    }
    let residual = m.hermitian_residual();
    if residual > HERMITIAN_TOL * (1.0 + m.frobenius_norm()) {
        return Err(Error::NotHermitian { residual });
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

/// One Jacobi rotation zeroing `a[(p, q)]`: a phase on column `q` makes the
/// pivot real, then a real Givens rotation annihilates it.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let phase = apq / g;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    let n = a.rows();
    let ph_conj = phase.conj();

    // A <- A G, V <- V G
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * cs - akq * ph_conj * sn;
        a[(k, q)] = akp * sn + akq * ph_conj * cs;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * cs - vkq * ph_conj * sn;
        v[(k, q)] = vkp * sn + vkq * ph_conj * cs;
    }
    // A <- G† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * cs - aqk * phase * sn;
        a[(q, k)] = apk * sn + aqk * phase * cs;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = c(a[(p, p)].re, 0.0);
    a[(q, q)] = c(a[(q, q)].re, 0.0);
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let gram = &m.adjoint() * m;
    let eig = eig_hermitian(&gram).expect("Gram matrix is Hermitian");
    eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "commutator of {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(&(a * b) - &(b * a))
}

/// Spectral norm of `AB − BA`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    Ok(spectral_norm(&commutator(a, b)?))
}
