//! Small dense linear algebra over either scalar backend.
//!
//! Vectors are plain `Vec<S>`. Subspaces keep a reduced row-echelon basis so
//! that two equal subspaces have identical representations (exactly in the
//! rational backend, up to rounding in float mode).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{max_abs, Scalar};

pub type Vector<S> = Vec<S>;

/// Standard basis vector e_i (0-based) of ℝⁿ.
pub fn unit<S: Scalar>(n: usize, i: usize) -> Vector<S> {
    (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect()
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn axpy<S: Scalar>(alpha: &S, x: &[S], y: &[S]) -> Vector<S> {
    x.iter()
        .zip(y)
        .map(|(xi, yi)| alpha.clone() * xi.clone() + yi.clone())
        .collect()
}

pub fn scale<S: Scalar>(alpha: &S, x: &[S]) -> Vector<S> {
    x.iter().map(|v| alpha.clone() * v.clone()).collect()
}

pub fn to_f64_vec<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64()).collect()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn diagonal(entries: &[S]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m.set(i, i, e.clone());
        }
        m
    }

    pub fn from_rows(rows: &[Vector<S>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().cloned().collect(),
        })
    }

    pub fn from_columns(cols: &[Vector<S>]) -> Result<Self> {
        Ok(Self::from_rows(cols)?.transpose())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vector<S> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vector<S> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vector<S>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = S::zero();
                for k in 0..self.cols {
                    acc = acc + self.get(i, k).clone() * other.get(k, j).clone();
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[S]) -> Vector<S> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], v))
            .collect()
    }

    pub fn scaled(&self, alpha: &S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: scale(alpha, &self.data),
        }
    }

    pub fn det(&self) -> Result<S> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        Ok(det_rows(self.columns()))
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.rows;
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.cols,
            });
        }
        // Gauss-Jordan on [M | I]
        let mut aug: Vec<Vector<S>> = (0..n)
            .map(|i| {
                let mut r = self.row(i);
                r.extend(unit::<S>(n, i));
                r
            })
            .collect();
        let scale = max_abs(&self.data);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| {
                    aug[a][col]
                        .abs()
                        .partial_cmp(&aug[b][col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if aug[piv][col].negligible(&scale) {
                return Err(Error::Degenerate("singular matrix".into()));
            }
            aug.swap(col, piv);
            let p = aug[col][col].clone();
            aug[col] = aug[col].iter().map(|v| v.clone() / p.clone()).collect();
            for r in 0..n {
                if r != col && !aug[r][col].is_zero() {
                    let f = -aug[r][col].clone();
                    aug[r] = axpy(&f, &aug[col], &aug[r]);
                }
            }
        }
        let data = aug.into_iter().flat_map(|r| r[n..].to_vec()).collect();
        Self::new(n, n, data)
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: to_f64_vec(&self.data),
        }
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &to_f64_vec(&self.data))
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.set(i, j, S::from_f64(m[(i, j)]));
            }
        }
        out
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.approx_eq(b, tol))
    }
}

impl Matrix<f64> {
    /// Rescale to determinant ±1, since group elements are taken projectively.
    pub fn normalize_det(&self) -> Result<Self> {
        let d = self.det()?;
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Degenerate("singular group element".into()));
        }
        let s = d.abs().powf(-1.0 / self.rows as f64);
        Ok(self.scaled(&s))
    }
}

/// Determinant of the matrix whose columns are `cols` (elimination with pivoting).
fn det_rows<S: Scalar>(mut m: Vec<Vector<S>>) -> S {
    let n = m.len();
    let mut sign = S::one();
    let mut acc = S::one();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| {
            m[a][col]
                .abs()
                .partial_cmp(&m[b][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let piv = match piv {
            Some(p) => p,
            None => return S::zero(),
        };
        if m[piv][col].is_zero() {
            return S::zero();
        }
        if piv != col {
            m.swap(piv, col);
            sign = -sign;
        }
        let p = m[col][col].clone();
        acc = acc * p.clone();
        for r in col + 1..n {
            if !m[r][col].is_zero() {
                let f = -(m[r][col].clone() / p.clone());
                let pivot_row = m[col].clone();
                m[r] = axpy(&f, &pivot_row, &m[r]);
            }
        }
    }
    sign * acc
}

/// Determinant of the n×n matrix whose columns are the given vectors.
pub fn wedge_det<S: Scalar>(vectors: &[Vector<S>]) -> Result<S> {
    let n = vectors.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    Ok(det_rows(vectors.to_vec()))
}

/// Wedge determinant that also reports whether the value is numerically zero
/// relative to the sizes of the inputs.
pub fn wedge_det_checked<S: Scalar>(vectors: &[Vector<S>]) -> Result<(S, bool)> {
    let d = wedge_det(vectors)?;
    let scale = vectors
        .iter()
        .fold(S::one(), |acc, v| acc * norm_inf(v));
    let zero = match S::BACKEND {
        crate::scalar::Backend::Exact => d.is_zero(),
        crate::scalar::Backend::Float64 => d.to_f64().abs() <= crate::scalar::FLOAT_DET_TOL * scale.to_f64(),
    };
    Ok((d, zero))
}

pub fn norm_inf<S: Scalar>(v: &[S]) -> S {
    max_abs(v)
}

/// Rescale a float vector to unit max-norm; exact vectors are returned as is.
fn balanced<S: Scalar>(v: &[S]) -> Vector<S> {
    match S::BACKEND {
        crate::scalar::Backend::Exact => v.to_vec(),
        crate::scalar::Backend::Float64 => {
            let m = max_abs(v);
            if m.is_zero() {
                v.to_vec()
            } else {
                v.iter().map(|x| x.clone() / m.clone()).collect()
            }
        }
    }
}

/// Reduced row-echelon form of the given rows. Returns the nonzero rows and
/// their pivot columns. Float rows are balanced first so the relative pivot
/// threshold is meaningful.
pub fn rref<S: Scalar>(rows: &[Vector<S>], ncols: usize) -> (Vec<Vector<S>>, Vec<usize>) {
    let mut m: Vec<Vector<S>> = rows.iter().map(|r| balanced(r)).collect();
    let scale = S::one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == m.len() {
            break;
        }
        let piv = (r..m.len())
            .max_by(|&a, &b| {
                m[a][col]
                    .abs()
                    .partial_cmp(&m[b][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[piv][col].negligible(&scale) {
            continue;
        }
        m.swap(r, piv);
        let p = m[r][col].clone();
        m[r] = m[r].iter().map(|v| v.clone() / p.clone()).collect();
        m[r][col] = S::one();
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = -m[i][col].clone();
                let pivot_row = m[r].clone();
                m[i] = axpy(&f, &pivot_row, &m[i]);
                m[i][col] = S::zero();
            }
        }
        pivots.push(col);
        r += 1;
    }
    m.truncate(r);
    for row in m.iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            if !pivots.contains(&j) && v.negligible(&scale) {
                *v = S::zero();
            }
        }
    }
    (m, pivots)
}

pub fn rank<S: Scalar>(vectors: &[Vector<S>]) -> usize {
    let ncols = vectors.first().map_or(0, |v| v.len());
    rref(vectors, ncols).0.len()
}

/// Basis of {v : row·v = 0 for every row}.
pub fn kernel<S: Scalar>(rows: &[Vector<S>], ncols: usize) -> Vec<Vector<S>> {
    let (red, pivots) = rref(rows, ncols);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![S::zero(); ncols];
        v[free] = S::one();
        for (row, &pc) in red.iter().zip(&pivots) {
            v[pc] = -row[free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Solve M x = b for square invertible M.
pub fn solve<S: Scalar>(m: &Matrix<S>, b: &[S]) -> Result<Vector<S>> {
    let inv = m.inverse()?;
    Ok(inv.apply(b))
}

/// Linear subspace of ℝⁿ, stored by its reduced row-echelon basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace<S> {
    ambient: usize,
    basis: Vec<Vector<S>>,
}

impl<S: Scalar> Subspace<S> {
    pub fn span(ambient: usize, vectors: &[Vector<S>]) -> Result<Self> {
        if let Some(bad) = vectors.iter().find(|v| v.len() != ambient) {
            return Err(Error::DimensionMismatch {
                expected: ambient,
                got: bad.len(),
            });
        }
        let (basis, _) = rref(vectors, ambient);
        Ok(Self { ambient, basis })
    }

    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Vec::new(),
        }
    }

    pub fn whole(ambient: usize) -> Self {
        Self {
            ambient,
            basis: (0..ambient).map(|i| unit(ambient, i)).collect(),
        }
    }

    pub fn line(v: &[S]) -> Result<Self> {
        let s = Self::span(v.len(), &[v.to_vec()])?;
        if s.dim() != 1 {
            return Err(Error::Degenerate("zero vector does not span a line".into()));
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[Vector<S>] {
        &self.basis
    }

    /// A representative vector of a line.
    pub fn representative(&self) -> Result<&Vector<S>> {
        if self.dim() != 1 {
            return Err(Error::Precondition(format!(
                "expected a line, got dimension {}",
                self.dim()
            )));
        }
        Ok(&self.basis[0])
    }

    pub fn contains(&self, v: &[S]) -> bool {
        let mut all = self.basis.clone();
        all.push(v.to_vec());
        rank(&all) == self.dim()
    }

    pub fn contains_subspace(&self, other: &Subspace<S>) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Subspace<S>) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                got: other.ambient,
            });
        }
        let mut all = self.basis.clone();
        all.extend(other.basis.iter().cloned());
        Self::span(self.ambient, &all)
    }

    /// Linear functionals vanishing on the subspace.
    pub fn annihilator(&self) -> Vec<Vector<S>> {
        kernel(&self.basis, self.ambient)
    }

    pub fn intersect(&self, other: &Subspace<S>) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                got: other.ambient,
            });
        }
        // u = Σ c_i b_i with φ(u) = 0 for every φ annihilating `other`
        let ann = other.annihilator();
        if ann.is_empty() {
            return Ok(self.clone());
        }
        let rows: Vec<Vector<S>> = ann
            .iter()
            .map(|phi| self.basis.iter().map(|b| dot(phi, b)).collect())
            .collect();
        let coeffs = kernel(&rows, self.dim());
        let vectors: Vec<Vector<S>> = coeffs
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&self.basis)
                    .fold(vec![S::zero(); self.ambient], |acc, (ci, b)| axpy(ci, b, &acc))
            })
            .collect();
        Self::span(self.ambient, &vectors)
    }

    /// Same subspace: exact equality in rational mode, tolerance in float mode.
    pub fn same_as(&self, other: &Subspace<S>, tol: f64) -> bool {
        match S::BACKEND {
            crate::scalar::Backend::Exact => self == other,
            crate::scalar::Backend::Float64 => {
                self.ambient == other.ambient
                    && self.dim() == other.dim()
                    && self.distance(other) <= tol
            }
        }
    }

    /// Sine of the largest principal angle (computed in f64).
    pub fn distance(&self, other: &Subspace<S>) -> f64 {
        if self.dim() != other.dim() {
            return 1.0;
        }
        if self.dim() == 0 {
            return 0.0;
        }
        let qa = orthonormal(&self.basis, self.ambient);
        let qb = orthonormal(&other.basis, self.ambient);
        let proj = &qb * qb.transpose();
        let resid = &qa - &proj * &qa;
        resid.norm().min(1.0)
    }

    pub fn apply(&self, g: &Matrix<S>) -> Result<Self> {
        let images: Vec<Vector<S>> = self.basis.iter().map(|b| g.apply(b)).collect();
        Self::span(self.ambient, &images)
    }

    pub fn to_f64(&self) -> Subspace<f64> {
        Subspace::span(
            self.ambient,
            &self.basis.iter().map(|b| to_f64_vec(b)).collect::<Vec<_>>(),
        )
        .expect("same ambient dimension")
    }
}

fn orthonormal(vectors: &[Vec<impl Scalar>], ambient: usize) -> DMatrix<f64> {
    let cols: Vec<f64> = vectors.iter().flat_map(|v| to_f64_vec(v)).collect();
    let m = DMatrix::from_column_slice(ambient, vectors.len(), &cols);
    m.qr().q().columns(0, vectors.len()).into_owned()
}

/// Complete flag F^(1) ⊂ … ⊂ F^(n−1) with an adapted basis: F^(k) is
/// spanned by the first k basis vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Flag<S> {
    basis: Vec<Vector<S>>,
    subspaces: Vec<Subspace<S>>,
}

impl<S: Scalar> Flag<S> {
    /// Build from n linearly independent vectors (the last one only completes the basis;
    /// fewer than n vectors are completed by standard basis vectors).
    pub fn from_basis(mut vectors: Vec<Vector<S>>) -> Result<Self> {
        let n = vectors.first().map_or(0, |v| v.len());
        if n < 2 {
            return Err(Error::Precondition("ambient dimension must be at least 2".into()));
        }
        if vectors.len() > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: vectors.len(),
            });
        }
        if rank(&vectors) != vectors.len() {
            return Err(Error::Degenerate("flag basis vectors are dependent".into()));
        }
        for i in 0..n {
            if vectors.len() == n {
                break;
            }
            let e = unit::<S>(n, i);
            let mut trial = vectors.clone();
            trial.push(e.clone());
            if rank(&trial) == trial.len() {
                vectors.push(e);
            }
        }
        let mut subspaces = Vec::with_capacity(n - 1);
        for k in 1..n {
            subspaces.push(Subspace::span(n, &vectors[..k])?);
        }
        Ok(Self {
            basis: vectors,
            subspaces,
        })
    }

    /// Build from nested subspaces F^(1) ⊂ … ⊂ F^(n−1).
    pub fn from_subspaces(subs: &[Subspace<S>]) -> Result<Self> {
        let n = subs.len() + 1;
        let mut basis: Vec<Vector<S>> = Vec::new();
        for (k, s) in subs.iter().enumerate() {
            if s.ambient() != n || s.dim() != k + 1 {
                return Err(Error::Precondition(format!(
                    "F^({}) has dimension {} in ambient {}",
                    k + 1,
                    s.dim(),
                    s.ambient()
                )));
            }
            let next = s
                .basis()
                .iter()
                .find(|v| {
                    let mut t = basis.clone();
                    t.push((*v).clone());
                    rank(&t) == t.len()
                })
                .ok_or_else(|| Error::Precondition("subspaces are not nested".into()))?
                .clone();
            basis.push(next);
            if !basis.iter().all(|v| s.contains(v)) {
                return Err(Error::Precondition("subspaces are not nested".into()));
            }
        }
        Self::from_basis(basis)
    }

    /// Flag spanned by prefixes of e_1, …, e_n.
    pub fn standard(n: usize) -> Self {
        Self::from_basis((0..n).map(|i| unit(n, i)).collect()).expect("standard basis")
    }

    /// Flag spanned by prefixes of e_n, …, e_1.
    pub fn reversed_standard(n: usize) -> Self {
        Self::from_basis((0..n).rev().map(|i| unit(n, i)).collect()).expect("standard basis")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The k-th adapted basis vector, 1-based.
    pub fn vector(&self, k: usize) -> &Vector<S> {
        &self.basis[k - 1]
    }

    pub fn basis(&self) -> &[Vector<S>] {
        &self.basis
    }

    /// F^(k) for 0 ≤ k ≤ n.
    pub fn subspace(&self, k: usize) -> Subspace<S> {
        let n = self.dim();
        match k {
            0 => Subspace::zero(n),
            k if k >= n => Subspace::whole(n),
            k => self.subspaces[k - 1].clone(),
        }
    }

    pub fn line(&self) -> Subspace<S> {
        self.subspace(1)
    }

    pub fn prefix(&self, k: usize) -> &[Vector<S>] {
        &self.basis[..k]
    }

    pub fn apply(&self, g: &Matrix<S>) -> Result<Self> {
        Self::from_basis(self.basis.iter().map(|b| g.apply(b)).collect())
    }

    pub fn same_as(&self, other: &Flag<S>, tol: f64) -> bool {
        self.dim() == other.dim()
            && (1..self.dim()).all(|k| self.subspace(k).same_as(&other.subspace(k), tol))
    }

    pub fn to_f64(&self) -> Flag<f64> {
        Flag::from_basis(self.basis.iter().map(|b| to_f64_vec(b)).collect())
            .expect("independent after conversion")
    }
}

/// True iff F^(a)+G^(b)+H^(c) = ℝⁿ for every a+b+c = n.
pub fn is_generic_triple<S: Scalar>(f: &Flag<S>, g: &Flag<S>, h: &Flag<S>) -> bool {
    let n = f.dim();
    if g.dim() != n || h.dim() != n {
        return false;
    }
    for a in 0..=n {
        for b in 0..=n - a {
            let c = n - a - b;
            let mut cols = f.prefix(a).to_vec();
            cols.extend_from_slice(g.prefix(b));
            cols.extend_from_slice(h.prefix(c));
            match wedge_det_checked(&cols) {
                Ok((_, false)) => {}
                _ => return false,
            }
        }
    }
    true
}

/// Sorted non-increasing traceless vector in the closed Weyl chamber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylChamberPoint<S> {
    entries: Vec<S>,
}

impl<S: Scalar> WeylChamberPoint<S> {
    pub fn new(entries: Vec<S>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Precondition("need at least two entries".into()));
        }
        let sum = entries.iter().fold(S::zero(), |a, b| a + b.clone());
        if !sum.approx_eq(&S::zero(), 1e-9) {
            return Err(Error::Precondition(format!(
                "entries must sum to zero, got {}",
                sum.to_f64()
            )));
        }
        let p = Self { entries };
        if p.gaps().iter().any(|g| g.is_negative() && !g.approx_eq(&S::zero(), 1e-12)) {
            return Err(Error::Precondition("entries must be non-increasing".into()));
        }
        Ok(p)
    }

    /// Point with prescribed consecutive gaps λ_k − λ_{k+1}.
    pub fn from_gaps(gaps: &[S]) -> Result<Self> {
        let n = gaps.len() + 1;
        let mut raw = vec![S::zero(); n];
        for k in 1..n {
            raw[k] = raw[k - 1].clone() - gaps[k - 1].clone();
        }
        let mean = raw.iter().fold(S::zero(), |a, b| a + b.clone()) / S::from_int(n as i64);
        Self::new(raw.into_iter().map(|v| v - mean.clone()).collect())
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn gaps(&self) -> Vec<S> {
        self.entries
            .windows(2)
            .map(|w| w[0].clone() - w[1].clone())
            .collect()
    }

    pub fn in_open_chamber(&self) -> bool {
        self.gaps().iter().all(|g| g.is_positive() && !g.negligible(&S::one()))
    }

    /// λ_1 − λ_n.
    pub fn spread(&self) -> S {
        self.entries[0].clone() - self.entries[self.entries.len() - 1].clone()
    }

    /// Image under the opposition involution λ ↦ (−λ_n, …, −λ_1).
    pub fn opposite(&self) -> Self {
        Self {
            entries: self.entries.iter().rev().map(|v| -v.clone()).collect(),
        }
    }
}

fn traceless_sorted(mut v: Vec<f64>) -> Result<WeylChamberPoint<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("non-finite logarithm (singular input)".into()));
    }
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    WeylChamberPoint::new(v.into_iter().map(|x| x - mean).collect())
}

/// Sorted log-moduli of eigenvalues, made traceless.
pub fn jordan_projection<S: Scalar>(m: &Matrix<S>) -> Result<WeylChamberPoint<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let a = m.to_nalgebra();
    let schur = nalgebra::linalg::Schur::try_new(a, 1e-15, 100_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let eig = schur.complex_eigenvalues();
    traceless_sorted(eig.iter().map(|z| z.norm().ln()).collect())
}

/// Sorted log singular values, made traceless.
pub fn cartan_projection<S: Scalar>(m: &Matrix<S>) -> Result<WeylChamberPoint<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let a = m.to_nalgebra();
    let svd = nalgebra::linalg::SVD::try_new(a, false, false, 1e-15, 100_000)
        .ok_or_else(|| Error::Eigen("SVD did not converge".into()))?;
    traceless_sorted(svd.singular_values.iter().map(|s| s.ln()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    #[test]
    fn wedge_det_examples() {
        let id: Vec<Vec<Q>> = (0..4).map(|i| unit(4, i)).collect();
        assert_eq!(wedge_det(&id).unwrap(), q(1));
        let mut sw = id.clone();
        sw.swap(0, 1);
        assert_eq!(wedge_det(&sw).unwrap(), q(-1));
        let two = vec![vec![q(1), q(2)], vec![q(3), q(4)]];
        assert_eq!(wedge_det(&two).unwrap(), q(-2));
        assert!(wedge_det(&[vec![q(1), q(2)]]).is_err());
    }

    #[test]
    fn subspace_sum_examples() {
        let e1 = Subspace::line(&unit::<Q>(3, 0)).unwrap();
        let e2 = Subspace::line(&unit::<Q>(3, 1)).unwrap();
        assert_eq!(e1.sum(&e2).unwrap().dim(), 2);
        assert_eq!(e1.sum(&e1).unwrap(), e1);
        let plane = e1.sum(&e2).unwrap();
        let diag = Subspace::line(&[q(1), q(1), q(1)]).unwrap();
        assert_eq!(plane.sum(&diag).unwrap(), Subspace::whole(3));
    }

    #[test]
    fn subspace_intersect_examples() {
        let v12 = Subspace::span(3, &[unit::<Q>(3, 0), unit(3, 1)]).unwrap();
        let v23 = Subspace::span(3, &[unit::<Q>(3, 1), unit(3, 2)]).unwrap();
        assert_eq!(v12.intersect(&v23).unwrap(), Subspace::line(&unit(3, 1)).unwrap());
        assert_eq!(v12.intersect(&v12).unwrap(), v12);
        // hyperplanes x+2y−z = 0 and 3x−y+4z = 0
        let h1 = Subspace::span(3, &kernel(&[vec![q(1), q(2), q(-1)]], 3)).unwrap();
        let h2 = Subspace::span(3, &kernel(&[vec![q(3), q(-1), q(4)]], 3)).unwrap();
        let l = h1.intersect(&h2).unwrap();
        assert_eq!(l.dim(), 1);
        let v = l.representative().unwrap();
        assert_eq!(dot(v, &[q(1), q(2), q(-1)]), q(0));
        assert_eq!(dot(v, &[q(3), q(-1), q(4)]), q(0));
    }

    #[test]
    fn generic_triple_examples() {
        let f = Flag::<Q>::standard(3);
        assert!(!is_generic_triple(&f, &f, &Flag::reversed_standard(3)));
        let g = Flag::from_basis(vec![vec![q(1), q(1), q(1)], vec![q(1), q(0), q(-2)]]).unwrap();
        assert!(is_generic_triple(&f, &g, &Flag::reversed_standard(3)));
    }

    #[test]
    fn flag_from_subspaces_round_trip() {
        let g = Flag::from_basis(vec![vec![q(1), q(1), q(1)], vec![q(1), q(0), q(-2)]]).unwrap();
        let subs: Vec<_> = (1..3).map(|k| g.subspace(k)).collect();
        let h = Flag::from_subspaces(&subs).unwrap();
        assert!(g.same_as(&h, 0.0));
    }

    #[test]
    fn jordan_and_cartan_examples() {
        let d = Matrix::diagonal(&[2.0, 1.0, 0.5]);
        let j = jordan_projection(&d).unwrap();
        let l2 = 2f64.ln();
        for (a, b) in j.entries().iter().zip([l2, 0.0, -l2]) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = Matrix::new(2, 2, vec![2.0, 1.0, 0.0, 0.5]).unwrap();
        let jt = jordan_projection(&t).unwrap();
        assert!((jt.entries()[0] - l2).abs() < 1e-12);
        let c = cartan_projection(&Matrix::<f64>::identity(3)).unwrap();
        assert!(c.entries().iter().all(|v| v.abs() < 1e-12));
        let (s, co) = (0.3f64.sin(), 0.3f64.cos());
        let rot = Matrix::new(2, 2, vec![co, -s, s, co]).unwrap();
        assert!(cartan_projection(&rot).unwrap().entries().iter().all(|v| v.abs() < 1e-12));
        let d3 = Matrix::diagonal(&[3.0, 1.0 / 3.0]);
        assert!((cartan_projection(&d3).unwrap().entries()[0] - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn exact_jordan_input() {
        let d = Matrix::diagonal(&[rational(4, 1), rational(1, 1), rational(1, 4)]);
        let j = jordan_projection(&d).unwrap();
        assert!((j.entries()[0] - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn weyl_point_from_gaps() {
        let p = WeylChamberPoint::<Q>::from_gaps(&[q(1), q(1)]).unwrap();
        assert_eq!(p.entries(), &[q(1), q(0), q(-1)]);
        assert!(p.in_open_chamber());
        assert_eq!(p.opposite(), p);
        assert!(WeylChamberPoint::new(vec![q(1), q(1)]).is_err());
    }

    #[test]
    fn inverse_and_kernel() {
        let m = Matrix::new(2, 2, vec![q(1), q(2), q(3), q(4)]).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(2));
        let k = kernel(&[vec![q(1), q(1), q(0)]], 3);
        assert_eq!(k.len(), 2);
    }
}
