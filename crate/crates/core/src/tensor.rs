//! Dense complex arrays, Kronecker and direct-sum constructors, and the
//! structured (sum-of-Kronecker-terms) operator used by every other module.
//!
//! Indexing is big-endian in base `d`: for an `n`-site index `j`, site 0 holds
//! the most significant digit. A [`KronTerm`]'s first factor therefore acts on
//! the most significant digit.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default absolute entrywise tolerance for complex comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Largest global dimension `d^n` that may be materialized densely.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseLimit(pub usize);

impl DenseLimit {
    pub const DEFAULT: DenseLimit = DenseLimit(4096);

    pub fn check(self, dim: usize) -> Result<()> {
        if dim > self.0 {
            Err(Error::DenseLimitExceeded { dim, limit: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for DenseLimit {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// `d^n`, or `None` on overflow.
pub fn global_dim(n: usize, d: usize) -> Option<usize> {
    u32::try_from(n).ok().and_then(|n| d.checked_pow(n))
}

/// Big-endian base-`d` digits of `j` over `n` sites.
pub fn to_digits(mut j: usize, n: usize, d: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    for slot in digits.iter_mut().rev() {
        *slot = j % d;
        j /= d;
    }
    digits
}

pub fn from_digits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

// ---------------------------------------------------------------------------
// DenseMatrix

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
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

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == ZERO))
    }

    /// Exact comparison against the identity; used to skip trivial sites.
    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self[(i, j)] == if i == j { ONE } else { ZERO }))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.conj()).collect(),
        }
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &DenseVector) -> Result<DenseVector> {
        if self.cols != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.dim(),
            });
        }
        Ok(DenseVector::from(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(x.as_slice())
                        .map(|(&a, &b)| a * b)
                        .sum()
                })
                .collect::<Vec<_>>(),
        ))
    }

    /// Integer power of a square matrix (`p = 0` gives the identity).
    pub fn pow(&self, p: u32) -> Result<DenseMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut acc = Self::identity(self.rows);
        let mut base = self.clone();
        let mut p = p;
        while p > 0 {
            if p & 1 == 1 {
                acc = acc.matmul(&base)?;
            }
            p >>= 1;
            if p > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(acc)
    }

    /// `max |a_ij - b_ij|`; infinite if the shapes differ.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &DenseMatrix, tol: f64) -> bool {
        self.max_abs_diff(other) < tol
    }

    /// `‖M Mᴴ − I‖_max`.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: Complex64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b.conj())
                    .sum();
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    pub fn nonzeros_in_row(&self, i: usize, tol: f64) -> usize {
        self.row(i).iter().filter(|x| x.norm() > tol).count()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch in add"
        );
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch in sub"
        );
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for x in self.row(i) {
                write!(f, "{:>8.4}{:+.4}i ", x.re, x.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// ---------------------------------------------------------------------------
// DenseVector

#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector(Vec<Complex64>);

impl DenseVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![ZERO; dim])
    }

    /// Canonical basis vector `e_j`.
    pub fn basis(dim: usize, j: usize) -> Result<Self> {
        if j >= dim {
            return Err(Error::invalid(format!(
                "basis index {j} >= dimension {dim}"
            )));
        }
        let mut v = Self::zeros(dim);
        v.0[j] = ONE;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.iter().map(|&x| x * s).collect())
    }

    pub fn axpy(&mut self, a: Complex64, x: &DenseVector) {
        for (y, &xi) in self.0.iter_mut().zip(&x.0) {
            *y += a * xi;
        }
    }

    /// `⟨self, other⟩` (conjugate-linear in `self`).
    pub fn inner(&self, other: &DenseVector) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn kron(&self, other: &DenseVector) -> DenseVector {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for &a in &self.0 {
            out.extend(other.0.iter().map(|&b| a * b));
        }
        Self(out)
    }

    pub fn max_abs_diff(&self, other: &DenseVector) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<Complex64>> for DenseVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for DenseVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

// ---------------------------------------------------------------------------
// Constructors

/// Kronecker product: the block matrix whose `(i, j)` block is `a_ij · b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = DenseMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for p in 0..b.rows {
                for q in 0..b.cols {
                    out[(i * b.rows + p, j * b.cols + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Left fold of [`kron`]; the empty list gives the 1x1 identity.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a DenseMatrix>) -> DenseMatrix {
    factors
        .into_iter()
        .fold(DenseMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Block-diagonal `a ⊕ b`.
pub fn direct_sum(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    for m in [a, b] {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
    }
    let n = a.rows + b.rows;
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..a.rows {
        for j in 0..a.cols {
            out[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..b.rows {
        for j in 0..b.cols {
            out[(a.rows + i, a.rows + j)] = b[(i, j)];
        }
    }
    Ok(out)
}

pub fn direct_sum_all(blocks: &[DenseMatrix]) -> Result<DenseMatrix> {
    let mut iter = blocks.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::invalid("direct sum of an empty list"))?;
    let mut acc = first.clone();
    for b in iter {
        acc = direct_sum(&acc, b)?;
    }
    if !acc.is_square() {
        return Err(Error::NotSquare {
            rows: acc.rows,
            cols: acc.cols,
        });
    }
    Ok(acc)
}

/// Rank-1 projector `e_level e_levelᵀ` on a `d`-level site (0-based level).
pub fn projector(d: usize, level: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(d, d);
    m[(level, level)] = ONE;
    m
}

/// Cyclic shift `|j⟩ → |j+1 mod d⟩`; Pauli-X when `d = 2`.
pub fn shift(d: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(d, d);
    for j in 0..d {
        m[((j + 1) % d, j)] = ONE;
    }
    m
}

// ---------------------------------------------------------------------------
// Structured operators

/// One summand `coefficient · (f_0 ⊗ f_1 ⊗ … ⊗ f_{n-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct KronTerm {
    pub coefficient: Complex64,
    pub factors: Vec<DenseMatrix>,
}

impl KronTerm {
    pub fn new(coefficient: Complex64, factors: Vec<DenseMatrix>) -> Self {
        Self {
            coefficient,
            factors,
        }
    }

    /// `n` identity sites with `local` placed at each `(site, matrix)` pair.
    pub fn embed(
        n: usize,
        d: usize,
        coefficient: Complex64,
        local: &[(usize, DenseMatrix)],
    ) -> Self {
        let mut factors = vec![DenseMatrix::identity(d); n];
        for (site, m) in local {
            factors[*site] = m.clone();
        }
        Self::new(coefficient, factors)
    }

    pub fn expand(&self) -> DenseMatrix {
        kron_all(&self.factors).scale(self.coefficient)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(
            self.coefficient.conj(),
            self.factors.iter().map(DenseMatrix::adjoint).collect(),
        )
    }

    /// Sites whose factor is not exactly the identity.
    pub fn support(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_identity())
            .map(|(s, _)| s)
            .collect()
    }
}

/// A scaled sum of Kronecker terms over `n_sites` sites of dimension `local_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredOperator {
    n_sites: usize,
    local_dim: usize,
    terms: Vec<KronTerm>,
}

impl StructuredOperator {
    pub fn new(n_sites: usize, local_dim: usize, terms: Vec<KronTerm>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::invalid(
                "structured operator needs at least one site",
            ));
        }
        if local_dim < 2 {
            return Err(Error::invalid("local dimension must be at least 2"));
        }
        for term in &terms {
            if term.factors.len() != n_sites {
                return Err(Error::DimensionMismatch {
                    expected: n_sites,
                    found: term.factors.len(),
                });
            }
            for f in &term.factors {
                if f.rows != local_dim || f.cols != local_dim {
                    return Err(Error::DimensionMismatch {
                        expected: local_dim,
                        found: if f.rows != local_dim { f.rows } else { f.cols },
                    });
                }
            }
        }
        Ok(Self {
            n_sites,
            local_dim,
            terms,
        })
    }

    pub fn identity(n_sites: usize, local_dim: usize) -> Result<Self> {
        Self::new(
            n_sites,
            local_dim,
            vec![KronTerm::embed(n_sites, local_dim, ONE, &[])],
        )
    }

    /// A single matrix on one site, identity elsewhere.
    pub fn single_site(
        n_sites: usize,
        local_dim: usize,
        site: usize,
        m: &DenseMatrix,
    ) -> Result<Self> {
        if site >= n_sites {
            return Err(Error::invalid(format!(
                "site {site} out of range for {n_sites} sites"
            )));
        }
        Self::new(
            n_sites,
            local_dim,
            vec![KronTerm::embed(
                n_sites,
                local_dim,
                ONE,
                &[(site, m.clone())],
            )],
        )
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn terms(&self) -> &[KronTerm] {
        &self.terms
    }

    /// `local_dim^n_sites`, or `None` if it does not fit in `usize`.
    pub fn dim(&self) -> Option<usize> {
        global_dim(self.n_sites, self.local_dim)
    }

    fn checked_dim(&self, limit: DenseLimit) -> Result<usize> {
        let dim = self.dim().ok_or(Error::DenseLimitExceeded {
            dim: usize::MAX,
            limit: limit.0,
        })?;
        limit.check(dim)?;
        Ok(dim)
    }

    /// Union of the per-term supports, sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut sites: Vec<usize> = self.terms.iter().flat_map(KronTerm::support).collect();
        sites.sort_unstable();
        sites.dedup();
        sites
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_sites: self.n_sites,
            local_dim: self.local_dim,
            terms: self.terms.iter().map(KronTerm::adjoint).collect(),
        }
    }

    /// Operator product `self · rhs`, term by term (mixed-product rule).
    pub fn compose(&self, rhs: &StructuredOperator) -> Result<Self> {
        if (self.n_sites, self.local_dim) != (rhs.n_sites, rhs.local_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: rhs.n_sites,
            });
        }
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let factors = a
                    .factors
                    .iter()
                    .zip(&b.factors)
                    .map(|(x, y)| x * y)
                    .collect();
                terms.push(KronTerm::new(a.coefficient * b.coefficient, factors));
            }
        }
        Self::new(self.n_sites, self.local_dim, terms)
    }

    pub fn expand(&self) -> Result<DenseMatrix> {
        self.expand_within(DenseLimit::default())
    }

    pub fn expand_within(&self, limit: DenseLimit) -> Result<DenseMatrix> {
        let dim = self.checked_dim(limit)?;
        let mut acc = DenseMatrix::zeros(dim, dim);
        for term in &self.terms {
            let m = term.expand();
            for (a, b) in acc.data.iter_mut().zip(&m.data) {
                *a += b;
            }
        }
        Ok(acc)
    }

    /// Applies the operator to `x` site by site without forming the expansion.
    pub fn apply(&self, x: &DenseVector) -> Result<DenseVector> {
        let dim = self.dim().ok_or(Error::DimensionMismatch {
            expected: usize::MAX,
            found: x.dim(),
        })?;
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim(),
            });
        }
        let mut out = DenseVector::zeros(dim);
        let mut scratch = vec![ZERO; dim];
        for term in &self.terms {
            if term.coefficient == ZERO {
                continue;
            }
            let mut buf = x.0.clone();
            for (site, f) in term.factors.iter().enumerate() {
                if f.is_identity() {
                    continue;
                }
                let stride = self.local_dim.pow((self.n_sites - 1 - site) as u32);
                apply_on_axis(f, &buf, &mut scratch, self.local_dim, stride);
                std::mem::swap(&mut buf, &mut scratch);
            }
            for (o, b) in out.0.iter_mut().zip(&buf) {
                *o += term.coefficient * b;
            }
        }
        Ok(out)
    }

    /// Row-compressed expansion, built by enumerating nonzero factor entries.
    pub fn to_sparse(&self, limit: DenseLimit) -> Result<SparseOperator> {
        let dim = self.checked_dim(limit)?;
        let d = self.local_dim;
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for term in &self.terms {
            if term.coefficient == ZERO {
                continue;
            }
            // nonzero[s][a] = columns b with f_s[a, b] != 0
            let nonzero: Vec<Vec<Vec<(usize, Complex64)>>> = term
                .factors
                .iter()
                .map(|f| {
                    (0..d)
                        .map(|a| {
                            (0..d)
                                .filter(|&b| f[(a, b)] != ZERO)
                                .map(|b| (b, f[(a, b)]))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            for (r, row) in rows.iter_mut().enumerate() {
                let digits = to_digits(r, self.n_sites, d);
                let mut partial = vec![(0usize, term.coefficient)];
                for (site, &a) in digits.iter().enumerate() {
                    let choices = &nonzero[site][a];
                    if choices.is_empty() {
                        partial.clear();
                        break;
                    }
                    partial = partial
                        .iter()
                        .flat_map(|&(col, v)| {
                            choices.iter().map(move |&(b, w)| (col * d + b, v * w))
                        })
                        .collect();
                }
                row.extend(partial);
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v != ZERO);
            *row = merged;
        }
        Ok(SparseOperator { dim, rows })
    }
}

/// `out = (I ⊗ f ⊗ I) buf` where `f` acts on the digit with the given stride.
fn apply_on_axis(
    f: &DenseMatrix,
    buf: &[Complex64],
    out: &mut [Complex64],
    d: usize,
    stride: usize,
) {
    let block = d * stride;
    if f.is_diagonal() {
        let diag = f.diagonal();
        for (chunk_in, chunk_out) in buf.chunks(block).zip(out.chunks_mut(block)) {
            for (a, &da) in diag.iter().enumerate() {
                let lo = a * stride;
                for i in lo..lo + stride {
                    chunk_out[i] = da * chunk_in[i];
                }
            }
        }
        return;
    }
    let mut gathered = vec![ZERO; d];
    for (chunk_in, chunk_out) in buf.chunks(block).zip(out.chunks_mut(block)) {
        for inner in 0..stride {
            for (a, g) in gathered.iter_mut().enumerate() {
                *g = chunk_in[a * stride + inner];
            }
            for r in 0..d {
                let mut acc = ZERO;
                for (a, &g) in gathered.iter().enumerate() {
                    acc += f[(r, a)] * g;
                }
                chunk_out[r * stride + inner] = acc;
            }
        }
    }
}

/// Expanded operator stored as per-row `(column, value)` lists.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> &[(usize, Complex64)] {
        &self.rows[r]
    }

    pub fn max_row_nonzeros(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `self · block`, where `block` is `dim × width` row-major.
    pub fn apply_block(&self, block: &[Complex64], width: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim * width];
        for (r, row) in self.rows.iter().enumerate() {
            let dst = &mut out[r * width..(r + 1) * width];
            for &(c, v) in row {
                let src = &block[c * width..(c + 1) * width];
                for (o, &s) in dst.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        out
    }

    /// `‖A Aᴴ − I‖_max` computed from the sparsity pattern.
    pub fn unitarity_residual(&self) -> f64 {
        let mut cols: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.dim];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                cols[c].push((r, v));
            }
        }
        let mut worst: f64 = 0.0;
        let mut acc: Vec<Complex64> = vec![ZERO; self.dim];
        let mut seen = vec![false; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                for &(r2, w) in &cols[c] {
                    if !std::mem::replace(&mut seen[r2], true) {
                        touched.push(r2);
                    }
                    acc[r2] += v * w.conj();
                }
            }
            let mut diag_seen = false;
            for &r2 in &touched {
                let target = if r2 == r { ONE } else { ZERO };
                diag_seen |= r2 == r;
                worst = worst.max((acc[r2] - target).norm());
                acc[r2] = ZERO;
                seen[r2] = false;
            }
            if !diag_seen {
                worst = worst.max(1.0);
            }
            touched.clear();
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Permutations

/// A bijection on `0..size`, stored as its image list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &j in &image {
            if j >= image.len() || std::mem::replace(&mut seen[j], true) {
                return Err(Error::invalid("permutation image is not a bijection"));
            }
        }
        Ok(Self { image })
    }

    pub fn identity(size: usize) -> Self {
        Self {
            image: (0..size).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn map(&self, j: usize) -> usize {
        self.image[j]
    }

    /// `(self ∘ other)(j) = self(other(j))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.size() != other.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: other.size(),
            });
        }
        Ok(Self {
            image: other.image.iter().map(|&j| self.image[j]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.size()];
        for (j, &s) in self.image.iter().enumerate() {
            inv[s] = j;
        }
        Self { image: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(j, &s)| j == s)
    }

    pub fn is_involution(&self) -> bool {
        self.image
            .iter()
            .enumerate()
            .all(|(j, &s)| self.image[s] == j)
    }

    /// Moves entry `j` of `x` to position `σ(j)`.
    pub fn apply(&self, x: &DenseVector) -> Result<DenseVector> {
        if x.dim() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: x.dim(),
            });
        }
        let mut out = DenseVector::zeros(x.dim());
        for (j, &s) in self.image.iter().enumerate() {
            out[s] = x[j];
        }
        Ok(out)
    }

    /// Permutation matrix `P` with `P e_j = e_{σ(j)}`.
    pub fn to_matrix(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.size(), self.size());
        for (j, &s) in self.image.iter().enumerate() {
            m[(s, j)] = ONE;
        }
        m
    }
}

/// Base-`d` digit reversal over `n` sites: `σ(j)` reverses the digits of `j`.
pub fn digit_reversal(n: usize, d: usize) -> Result<Permutation> {
    if n == 0 || d < 2 {
        return Err(Error::invalid(format!(
            "digit reversal needs n >= 1 and d >= 2 (got n={n}, d={d})"
        )));
    }
    let size = global_dim(n, d).ok_or_else(|| Error::invalid("d^n overflows"))?;
    let image = (0..size)
        .map(|j| {
            let mut digits = to_digits(j, n, d);
            digits.reverse();
            from_digits(&digits, d)
        })
        .collect();
    Ok(Permutation { image })
}

/// Reverses the order of the tensor sites: `v_1 ⊗ … ⊗ v_n → v_n ⊗ … ⊗ v_1`.
pub trait SiteReversal: Sized {
    fn reverse_sites(&self, n: usize, d: usize) -> Result<Self>;
}

impl SiteReversal for DenseVector {
    fn reverse_sites(&self, n: usize, d: usize) -> Result<Self> {
        digit_reversal(n, d)?.apply(self)
    }
}

pub fn permute_tensor_factors<T: SiteReversal>(x: &T, n: usize, d: usize) -> Result<T> {
    x.reverse_sites(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{omega, omega_diag, r_gate};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), DenseMatrix::identity(4));
    }

    #[test]
    fn kron_of_phase_diagonals() {
        let w4 = omega(4, 1).unwrap();
        let w8 = omega(8, 1).unwrap();
        let a = DenseMatrix::from_diag(&[ONE, w4]);
        let b = DenseMatrix::from_diag(&[ONE, w8]);
        let expected: Vec<Complex64> = (0..4).map(|k| omega(8, k).unwrap()).collect();
        assert!(kron(&a, &b).approx_eq(&DenseMatrix::from_diag(&expected), 1e-15));
    }

    #[test]
    fn direct_sum_examples() {
        let one = DenseMatrix::identity(1);
        assert_eq!(direct_sum(&one, &one).unwrap(), DenseMatrix::identity(2));

        let omega1 = omega_diag(1, 2, 1).unwrap();
        let got = direct_sum(&DenseMatrix::identity(2), &omega1).unwrap();
        let expected = DenseMatrix::from_diag(&[ONE, ONE, ONE, c(0.0, -1.0)]);
        assert!(got.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn direct_sum_rejects_non_square() {
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            direct_sum(&rect, &DenseMatrix::identity(2)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn expand_projector_split() {
        let op = StructuredOperator::new(
            2,
            2,
            vec![
                KronTerm::new(ONE, vec![projector(2, 0), DenseMatrix::identity(2)]),
                KronTerm::new(ONE, vec![projector(2, 1), r_gate(2, 2)]),
            ],
        )
        .unwrap();
        let expected = DenseMatrix::from_diag(&[ONE, ONE, ONE, c(0.0, -1.0)]);
        assert!(op.expand().unwrap().approx_eq(&expected, 1e-15));
    }

    #[test]
    fn orthogonal_projectors_annihilate() {
        let a = DenseMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_real_rows(&[vec![0.5, -1.0], vec![2.0, 0.25]]).unwrap();
        let left =
            StructuredOperator::new(2, 2, vec![KronTerm::new(ONE, vec![projector(2, 0), a])])
                .unwrap();
        let right =
            StructuredOperator::new(2, 2, vec![KronTerm::new(ONE, vec![projector(2, 1), b])])
                .unwrap();
        let product = left.compose(&right).unwrap().expand().unwrap();
        assert_eq!(product.max_abs_diff(&DenseMatrix::zeros(4, 4)), 0.0);
    }

    #[test]
    fn expand_respects_limit() {
        let op = StructuredOperator::identity(13, 2).unwrap();
        assert!(matches!(
            op.expand(),
            Err(Error::DenseLimitExceeded {
                dim: 8192,
                limit: 4096
            })
        ));
        assert!(op.expand_within(DenseLimit(8192)).is_ok());
    }

    #[test]
    fn structured_operator_validates_factor_shapes() {
        let bad = KronTerm::new(
            ONE,
            vec![DenseMatrix::identity(2), DenseMatrix::identity(3)],
        );
        assert!(StructuredOperator::new(2, 2, vec![bad]).is_err());
        let short = KronTerm::new(ONE, vec![DenseMatrix::identity(2)]);
        assert!(StructuredOperator::new(2, 2, vec![short]).is_err());
    }

    #[test]
    fn apply_identity_is_noop() {
        let op = StructuredOperator::identity(3, 2).unwrap();
        let x = DenseVector::from((0..8).map(|k| c(k as f64, -(k as f64))).collect::<Vec<_>>());
        assert_eq!(op.apply(&x).unwrap(), x);
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let op = StructuredOperator::identity(3, 2).unwrap();
        assert!(matches!(
            op.apply(&DenseVector::zeros(9)),
            Err(Error::DimensionMismatch {
                expected: 8,
                found: 9
            })
        ));
    }

    #[test]
    fn hadamard_on_first_site_of_product_state() {
        let h = crate::spectral::dft_matrix(2).unwrap();
        let x1 = DenseVector::from(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let x2 = DenseVector::from(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let x3 = DenseVector::from(vec![c(0.3, 0.4), c(0.5, -0.1)]);
        let x = x1.kron(&x2).kron(&x3);
        let op = StructuredOperator::single_site(3, 2, 0, &h).unwrap();
        let expected = h.matvec(&x1).unwrap().kron(&x2).kron(&x3);
        assert!(op.apply(&x).unwrap().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn digit_reversal_examples() {
        let p = digit_reversal(3, 2).unwrap();
        assert_eq!(p.image(), &[0, 4, 2, 6, 1, 5, 3, 7]);
        assert_eq!(p.map(3), 6);
        assert!(digit_reversal(0, 2).is_err());
        assert!(digit_reversal(2, 1).is_err());
    }

    #[test]
    fn digit_reversal_is_involution() {
        for d in [2, 3, 5] {
            for n in 1..=6 {
                let p = digit_reversal(n, d).unwrap();
                assert!(p.is_involution(), "n={n} d={d}");
                assert!(p.compose(&p).unwrap().is_identity());
            }
        }
    }

    #[test]
    fn permutation_rejects_non_bijection() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::new(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn reverse_sites_of_product_state() {
        let v1 = DenseVector::from(vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0)]);
        let v2 = DenseVector::from(vec![c(0.5, 0.5), c(-1.0, 0.0), c(3.0, 0.0)]);
        let forward = v1.kron(&v2);
        let reversed = permute_tensor_factors(&forward, 2, 3).unwrap();
        assert!(reversed.max_abs_diff(&v2.kron(&v1)) < 1e-15);
        // single site leaves the vector alone
        assert_eq!(permute_tensor_factors(&v1, 1, 3).unwrap(), v1);
    }

    #[test]
    fn permutation_moves_entry_j_to_sigma_j() {
        let p = digit_reversal(2, 3).unwrap();
        let x = DenseVector::from((0..9).map(|k| c(k as f64, 0.0)).collect::<Vec<_>>());
        let y = p.apply(&x).unwrap();
        for j in 0..9 {
            assert_eq!(y[p.map(j)], x[j]);
        }
        assert!(p.to_matrix().matvec(&x).unwrap().max_abs_diff(&y) == 0.0);
    }

    #[test]
    fn sparse_expansion_matches_dense() {
        let h = crate::spectral::dft_matrix(3).unwrap();
        let op = StructuredOperator::new(
            2,
            3,
            vec![
                KronTerm::new(c(0.5, 0.5), vec![h.clone(), projector(3, 2)]),
                KronTerm::new(ONE, vec![projector(3, 1), r_gate(2, 3)]),
            ],
        )
        .unwrap();
        let dense = op.expand().unwrap();
        let sparse = op.to_sparse(DenseLimit::default()).unwrap();
        for r in 0..9 {
            let mut row = [ZERO; 9];
            for &(col, v) in sparse.row(r) {
                row[col] = v;
            }
            for (col, v) in row.iter().enumerate() {
                assert!((dense[(r, col)] - v).norm() < 1e-15);
            }
        }
        assert!((sparse.unitarity_residual() - dense.unitarity_residual()).abs() < 1e-12);
    }
}
