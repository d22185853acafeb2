//! Radix-`d` FFT factorization plans and their QFT refinement.
//!
//! A plan represents `F_{d^n} = P_n · A^(0) · A^(1) ⋯ A^(n−1)`. Factors are
//! stored in *application order*: `factors[0]` acts on the input first
//! (it is `A^(n−1)` for an FFT plan) and the digit reversal `P_n` is applied
//! last. In a QFT plan every `A^(k) = I ⊗ B_{k+1}` is replaced by a Fourier
//! gate on site `n−k−1` followed by `k` two-site controlled-phase factors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{dft_matrix, omega, r_gate_pow, twiddle_diagonal};
use crate::tensor::{
    digit_reversal, global_dim, projector, DenseLimit, DenseMatrix, DenseVector, KronTerm,
    Permutation, SparseOperator, StructuredOperator, ONE, ZERO,
};
use crate::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Fft,
    Qft,
}

/// Which site of a controlled-phase factor carries the projectors `E_ℓ`.
///
/// `ControlFirst` is the literal form `Σ_ℓ E_ℓ ⊗ I ⊗ R^ℓ ⊗ I` with the
/// projectors on the block's leading site; `TargetFirst` moves the phases
/// there instead. Both are the same matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    ControlFirst,
    #[default]
    TargetFirst,
}

/// Symbolic description of one plan factor; the operator is rebuilt from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FactorLabel {
    /// `A^(k) = I_{d^{n−k−1}} ⊗ B_{k+1}`.
    Butterfly { k: usize },
    /// `F_d` on one site.
    Fourier { site: usize },
    /// `Σ_ℓ E_ℓ(control) ⊗ R_level^ℓ(target)`.
    ControlledPhase {
        control: usize,
        target: usize,
        level: usize,
    },
}

impl FactorLabel {
    /// Sites the factor acts on non-trivially, sorted.
    pub fn support(&self, n: usize) -> Vec<usize> {
        match *self {
            FactorLabel::Butterfly { k } => (n.saturating_sub(k + 1)..n).collect(),
            FactorLabel::Fourier { site } => vec![site],
            FactorLabel::ControlledPhase {
                control, target, ..
            } => {
                let mut s = vec![control, target];
                s.sort_unstable();
                s
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            FactorLabel::Butterfly { k } => format!("A^({k})"),
            FactorLabel::Fourier { site } => format!("F@{}", site + 1),
            FactorLabel::ControlledPhase {
                control,
                target,
                level,
            } => format!("CR{level}({}->{})", control + 1, target + 1),
        }
    }

    pub fn operator(&self, n: usize, d: usize) -> Result<StructuredOperator> {
        match *self {
            FactorLabel::Butterfly { k } => butterfly(n, d, k),
            FactorLabel::Fourier { site } => {
                check_site(site, n)?;
                StructuredOperator::single_site(n, d, site, &dft_matrix(d)?)
            }
            FactorLabel::ControlledPhase {
                control,
                target,
                level,
            } => controlled_phase(n, d, control, target, level),
        }
    }
}

fn check_site(site: usize, n: usize) -> Result<()> {
    if site >= n {
        Err(Error::invalid(format!(
            "site {site} out of range for {n} sites"
        )))
    } else {
        Ok(())
    }
}

/// `I ⊗ B_{k+1}` with `B_{k+1} = Σ_ℓ (E_ℓ F_d) ⊗ R_2^ℓ ⊗ ⋯ ⊗ R_{k+1}^ℓ`.
fn butterfly(n: usize, d: usize, k: usize) -> Result<StructuredOperator> {
    if k >= n {
        return Err(Error::invalid(format!(
            "butterfly index {k} must be < n = {n}"
        )));
    }
    let offset = n - k - 1;
    let fd = dft_matrix(d)?;
    let terms = (0..d)
        .map(|l| {
            let mut local = vec![(offset, &projector(d, l) * &fd)];
            local.extend((1..=k).map(|m| (offset + m, r_gate_pow(m + 1, d, l as u64))));
            KronTerm::embed(n, d, ONE, &local)
        })
        .collect();
    StructuredOperator::new(n, d, terms)
}

/// `Σ_ℓ E_ℓ` at `control` with `R_level^ℓ` at `target`.
pub(crate) fn controlled_phase(
    n: usize,
    d: usize,
    control: usize,
    target: usize,
    level: usize,
) -> Result<StructuredOperator> {
    check_site(control, n)?;
    check_site(target, n)?;
    if control == target {
        return Err(Error::WireConflict(control));
    }
    if level == 0 {
        return Err(Error::invalid("phase level must be >= 1"));
    }
    let terms = (0..d)
        .map(|l| {
            KronTerm::embed(
                n,
                d,
                ONE,
                &[
                    (control, projector(d, l)),
                    (target, r_gate_pow(level, d, l as u64)),
                ],
            )
        })
        .collect();
    StructuredOperator::new(n, d, terms)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanFactor {
    pub label: FactorLabel,
    pub operator: StructuredOperator,
}

/// How the output permutation `P_n` is stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reversal {
    /// Base-`d` digit reversal over `n` sites, materialized on demand.
    DigitReversal,
    Explicit(Permutation),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorizationPlan {
    n: usize,
    d: usize,
    kind: PlanKind,
    orientation: Orientation,
    factors: Vec<PlanFactor>,
    reversal: Reversal,
}

impl FactorizationPlan {
    pub fn from_labels(
        n: usize,
        d: usize,
        kind: PlanKind,
        orientation: Orientation,
        labels: &[FactorLabel],
        reversal: Reversal,
    ) -> Result<Self> {
        check_shape(n, d)?;
        if let Reversal::Explicit(p) = &reversal {
            let dim = global_dim(n, d).ok_or_else(|| Error::invalid("d^n overflows"))?;
            if p.size() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.size(),
                });
            }
        }
        let factors = labels
            .iter()
            .map(|&label| {
                Ok(PlanFactor {
                    label,
                    operator: label.operator(n, d)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            d,
            kind,
            orientation,
            factors,
            reversal,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> PlanKind {
        self.kind
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Factors in application order (first entry acts first).
    pub fn factors(&self) -> &[PlanFactor] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<FactorLabel> {
        self.factors.iter().map(|f| f.label).collect()
    }

    pub fn reversal_spec(&self) -> &Reversal {
        &self.reversal
    }

    pub fn dim(&self) -> Option<usize> {
        global_dim(self.n, self.d)
    }

    pub fn reversal(&self) -> Result<Permutation> {
        match &self.reversal {
            Reversal::DigitReversal => digit_reversal(self.n, self.d),
            Reversal::Explicit(p) => Ok(p.clone()),
        }
    }

    /// Number of factors acting on exactly two sites.
    pub fn two_site_factor_count(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| f.label.support(self.n).len() == 2)
            .count()
    }

    /// `x ↦ P · A^(0) ⋯ A^(n−1) · x`, using structured application only.
    pub fn apply(&self, x: &DenseVector) -> Result<DenseVector> {
        let mut y = x.clone();
        for f in &self.factors {
            y = f.operator.apply(&y)?;
        }
        self.reversal()?.apply(&y)
    }

    /// Applies the adjoint plan (the inverse transform).
    pub fn apply_inverse(&self, x: &DenseVector) -> Result<DenseVector> {
        let mut y = self.reversal()?.inverse().apply(x)?;
        for f in self.factors.iter().rev() {
            y = f.operator.adjoint().apply(&y)?;
        }
        Ok(y)
    }

    fn sparse_factors(&self, limit: DenseLimit) -> Result<Vec<SparseOperator>> {
        self.factors
            .iter()
            .map(|f| f.operator.to_sparse(limit))
            .collect()
    }

    /// Dense `P · Π factors`.
    pub fn expand(&self) -> Result<DenseMatrix> {
        self.expand_within(DenseLimit::default())
    }

    pub fn expand_within(&self, limit: DenseLimit) -> Result<DenseMatrix> {
        let dim = self.limited_dim(limit)?;
        let sparse = self.sparse_factors(limit)?;
        let reversal = self.reversal()?;
        let mut block = DenseMatrix::identity(dim).as_slice().to_vec();
        for f in &sparse {
            block = f.apply_block(&block, dim);
        }
        let mut out = DenseMatrix::zeros(dim, dim);
        for j in 0..dim {
            let dst = reversal.map(j);
            for c in 0..dim {
                out[(dst, c)] = block[j * dim + c];
            }
        }
        Ok(out)
    }

    fn limited_dim(&self, limit: DenseLimit) -> Result<usize> {
        let dim = self.dim().ok_or(Error::DenseLimitExceeded {
            dim: usize::MAX,
            limit: limit.0,
        })?;
        limit.check(dim)?;
        Ok(dim)
    }
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("plans need n >= 1"));
    }
    if d < 2 {
        return Err(Error::invalid(format!(
            "local dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

/// Radix-`d` FFT plan: factors `A^(n−1), …, A^(0)` in application order.
pub fn fft_plan(n: usize, d: usize) -> Result<FactorizationPlan> {
    check_shape(n, d)?;
    let labels: Vec<FactorLabel> = (0..n).rev().map(|k| FactorLabel::Butterfly { k }).collect();
    FactorizationPlan::from_labels(
        n,
        d,
        PlanKind::Fft,
        Orientation::ControlFirst,
        &labels,
        Reversal::DigitReversal,
    )
}

/// Labels of the `k` factors splitting `I ⊕ Ω_k ⊕ ⋯ ⊕ Ω_k^{d−1}` for a block
/// whose leading site is `offset`, in the order `i = k, k−1, …, 1`.
fn diagonal_labels(offset: usize, k: usize, orientation: Orientation) -> Vec<FactorLabel> {
    (1..=k)
        .rev()
        .map(|i| {
            let (control, target) = match orientation {
                Orientation::ControlFirst => (offset, offset + i),
                Orientation::TargetFirst => (offset + i, offset),
            };
            FactorLabel::ControlledPhase {
                control,
                target,
                level: i + 1,
            }
        })
        .collect()
}

/// Radix-`d` QFT plan: per block a Fourier factor then its controlled-phase
/// ladder, `n + n(n−1)/2` factors in total.
pub fn qft_plan(n: usize, d: usize, orientation: Orientation) -> Result<FactorizationPlan> {
    check_shape(n, d)?;
    let mut labels = Vec::with_capacity(n + n * (n - 1) / 2);
    for k in (0..n).rev() {
        let offset = n - k - 1;
        labels.push(FactorLabel::Fourier { site: offset });
        labels.extend(diagonal_labels(offset, k, orientation));
    }
    FactorizationPlan::from_labels(
        n,
        d,
        PlanKind::Qft,
        orientation,
        &labels,
        Reversal::DigitReversal,
    )
}

/// The `k` two-site factors whose product is `I ⊕ Ω_k ⊕ ⋯ ⊕ Ω_k^{d−1}`,
/// each on `k + 1` sites, indexed by `i = 1..=k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalDecomposition {
    pub k: usize,
    pub d: usize,
    pub orientation: Orientation,
    pub labels: Vec<FactorLabel>,
    pub factors: Vec<StructuredOperator>,
}

pub fn diagonal_decomposition(
    k: usize,
    d: usize,
    orientation: Orientation,
) -> Result<DiagonalDecomposition> {
    if k == 0 {
        return Err(Error::invalid("diagonal decomposition needs k >= 1"));
    }
    if d < 2 {
        return Err(Error::invalid(format!(
            "local dimension must be at least 2, got {d}"
        )));
    }
    let mut labels = diagonal_labels(0, k, orientation);
    labels.reverse();
    let factors = labels
        .iter()
        .map(|l| l.operator(k + 1, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagonalDecomposition {
        k,
        d,
        orientation,
        labels,
        factors,
    })
}

impl DiagonalDecomposition {
    /// Dense product of the factors, in the given order of factor indices.
    pub fn product_in_order(&self, order: &[usize]) -> Result<DenseMatrix> {
        let mut diag: Option<Vec<Complex64>> = None;
        for &idx in order {
            let m = self.factors[idx].expand()?;
            let dvals = m.diagonal();
            diag = Some(match diag {
                None => dvals,
                Some(acc) => acc.iter().zip(&dvals).map(|(a, b)| a * b).collect(),
            });
            if !m.is_diagonal() {
                return Err(Error::invalid(
                    "diagonal decomposition factor is not diagonal",
                ));
            }
        }
        let dim = global_dim(self.k + 1, self.d).expect("checked by expand");
        Ok(diag.map_or_else(
            || DenseMatrix::identity(dim),
            |v| DenseMatrix::from_diag(&v),
        ))
    }

    pub fn product(&self) -> Result<DenseMatrix> {
        let order: Vec<usize> = (0..self.factors.len()).collect();
        self.product_in_order(&order)
    }

    /// `I ⊕ Ω_k ⊕ ⋯ ⊕ Ω_k^{d−1}`.
    pub fn target(&self) -> Result<DenseMatrix> {
        twiddle_diagonal(self.k, self.d)
    }
}

/// Residuals certifying a plan against the dense DFT matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResidual {
    /// `max |(P Π A)_{ij} − (F_N)_{ij}|`.
    pub dft_residual: f64,
    /// `‖A Aᴴ − I‖_max` for each factor, in application order.
    pub factor_unitarity: Vec<f64>,
    pub max_unitarity_residual: f64,
}

impl PlanResidual {
    pub fn passes(&self, tol: f64) -> bool {
        self.dft_residual < tol && self.max_unitarity_residual < tol
    }
}

pub fn verify_plan(plan: &FactorizationPlan) -> Result<PlanResidual> {
    verify_plan_within(plan, DenseLimit::default())
}

/// Column-blocked check of `P · Π factors` against `F_{d^n}`; never holds
/// more than one `N × 64` slab of the product.
pub fn verify_plan_within(plan: &FactorizationPlan, limit: DenseLimit) -> Result<PlanResidual> {
    const BLOCK: usize = 64;
    let dim = plan.limited_dim(limit)?;
    let sparse = plan.sparse_factors(limit)?;
    let reversal = plan.reversal()?;
    let scale = 1.0 / (dim as f64).sqrt();
    // dft entry (r, c) = ω_N^{rc mod N} / √N; phases cached by exponent
    let phases: Vec<Complex64> = (0..dim as i64)
        .map(|e| omega(dim, e).map(|z| z * scale))
        .collect::<Result<_>>()?;

    let mut dft_residual: f64 = 0.0;
    let mut start = 0;
    while start < dim {
        let width = BLOCK.min(dim - start);
        let mut block = vec![ZERO; dim * width];
        for c in 0..width {
            block[(start + c) * width + c] = ONE;
        }
        for f in &sparse {
            block = f.apply_block(&block, width);
        }
        for j in 0..dim {
            let row = reversal.map(j);
            for c in 0..width {
                let col = start + c;
                let expected = phases[(row * col) % dim];
                dft_residual = dft_residual.max((block[j * width + c] - expected).norm());
            }
        }
        start += width;
    }

    let factor_unitarity: Vec<f64> = sparse
        .iter()
        .map(SparseOperator::unitarity_residual)
        .collect();
    let max_unitarity_residual = factor_unitarity.iter().copied().fold(0.0, f64::max);
    Ok(PlanResidual {
        dft_residual,
        factor_unitarity,
        max_unitarity_residual,
    })
}

/// `F_{d^n} · x` through the plan's structured factors.
pub fn fft_apply(plan: &FactorizationPlan, x: &DenseVector) -> Result<DenseVector> {
    plan.apply(x)
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReversalDoc {
    DigitReversal,
    Explicit { image: Vec<usize> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorDoc {
    #[serde(flatten)]
    pub label: FactorLabel,
    /// Informational; recomputed on load.
    #[serde(default)]
    pub support: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanDocument {
    pub version: u32,
    pub kind: PlanKind,
    pub n: usize,
    pub d: usize,
    pub orientation: Orientation,
    pub reversal: ReversalDoc,
    pub factors: Vec<FactorDoc>,
}

impl FactorizationPlan {
    pub fn to_document(&self) -> PlanDocument {
        PlanDocument {
            version: SCHEMA_VERSION,
            kind: self.kind,
            n: self.n,
            d: self.d,
            orientation: self.orientation,
            reversal: match &self.reversal {
                Reversal::DigitReversal => ReversalDoc::DigitReversal,
                Reversal::Explicit(p) => ReversalDoc::Explicit {
                    image: p.image().to_vec(),
                },
            },
            factors: self
                .factors
                .iter()
                .map(|f| FactorDoc {
                    label: f.label,
                    support: f.label.support(self.n),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &PlanDocument) -> Result<Self> {
        if doc.version != SCHEMA_VERSION {
            return Err(Error::Malformed(format!(
                "unsupported plan version {}",
                doc.version
            )));
        }
        let reversal = match &doc.reversal {
            ReversalDoc::DigitReversal => Reversal::DigitReversal,
            ReversalDoc::Explicit { image } => Reversal::Explicit(Permutation::new(image.clone())?),
        };
        let labels: Vec<FactorLabel> = doc.factors.iter().map(|f| f.label).collect();
        Self::from_labels(doc.n, doc.d, doc.kind, doc.orientation, &labels, reversal)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PlanDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }
}
