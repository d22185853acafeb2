//! Sum-of-rank-1 (canonical polyadic) states and rank-growth experiments.
//!
//! A state is `Σ_i α_i · x_1⁽ⁱ⁾ ⊗ ⋯ ⊗ x_n⁽ⁱ⁾` with unit-norm site vectors
//! and the magnitudes folded into the weights `α_i`. Structured operators
//! act term by term, so the number of terms is the observable that tracks
//! how far a representation is from rank 1. True tensor rank is not
//! computed; [`bipartition_rank`] gives the matricization rank across a cut.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{diagonal_decomposition, qft_plan, FactorLabel, Orientation};
use crate::spectral::{dft_matrix_with, Direction};
use crate::tensor::{
    global_dim, DenseLimit, DenseMatrix, DenseVector, SiteReversal, StructuredOperator, ONE, ZERO,
};

/// Relative weight below which terms are dropped by default.
pub const DEFAULT_PRUNE: f64 = 1e-14;

/// Singular values at or below this fraction of the largest are treated as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;

const UNIT_NORM_TOLERANCE: f64 = 1e-10;

/// One weighted Kronecker product of site vectors.
///
/// Site vectors are unit-norm. A term whose weight is exactly zero keeps
/// `e_0` in place of any site vector that was annihilated.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneTerm {
    pub weight: Complex64,
    pub site_vectors: Vec<Vec<Complex64>>,
}

impl RankOneTerm {
    /// Normalizes each site vector and folds the norms into the weight.
    pub fn from_unnormalized(weight: Complex64, site_vectors: Vec<Vec<Complex64>>) -> Self {
        let mut weight = weight;
        let mut vectors = Vec::with_capacity(site_vectors.len());
        for mut v in site_vectors {
            let norm = vec_norm(&v);
            if norm == 0.0 {
                weight = ZERO;
                v.iter_mut().for_each(|z| *z = ZERO);
                if let Some(first) = v.first_mut() {
                    *first = ONE;
                }
            } else {
                weight *= norm;
                v.iter_mut().for_each(|z| *z /= norm);
            }
            vectors.push(v);
        }
        Self {
            weight,
            site_vectors: vectors,
        }
    }

    /// Entry `x_1(j_1) ⋯ x_n(j_n)` for the given digits, without the weight.
    fn product_at(&self, digits: &[usize]) -> Complex64 {
        self.site_vectors
            .iter()
            .zip(digits)
            .map(|(v, &j)| v[j])
            .product()
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CPState {
    n: usize,
    d: usize,
    terms: Vec<RankOneTerm>,
}

impl CPState {
    /// Validates shapes and unit-norm site vectors.
    pub fn new(n: usize, d: usize, terms: Vec<RankOneTerm>) -> Result<Self> {
        if n == 0 || d < 2 {
            return Err(Error::invalid(format!(
                "need n >= 1 and d >= 2, got n={n}, d={d}"
            )));
        }
        for t in &terms {
            if t.site_vectors.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: t.site_vectors.len(),
                });
            }
            for v in &t.site_vectors {
                if v.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: v.len(),
                    });
                }
                if (vec_norm(v) - 1.0).abs() > UNIT_NORM_TOLERANCE {
                    return Err(Error::invalid("site vectors must have unit norm"));
                }
            }
        }
        Ok(Self { n, d, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[RankOneTerm] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Terms whose weight is exactly zero.
    pub fn zero_weight_count(&self) -> usize {
        self.terms.iter().filter(|t| t.weight == ZERO).count()
    }

    fn max_weight(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight.norm())
            .fold(0.0, f64::max)
    }

    /// Drops terms with `|α| < prune · max|α|`; `prune = 0` keeps everything.
    pub fn pruned(mut self, prune: f64) -> Self {
        if prune > 0.0 {
            let cutoff = prune * self.max_weight();
            self.terms
                .retain(|t| t.weight != ZERO && t.weight.norm() >= cutoff);
        }
        self
    }
}

impl SiteReversal for CPState {
    fn reverse_sites(&self, n: usize, d: usize) -> Result<Self> {
        if n != self.n || d != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: n,
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|t| RankOneTerm {
                weight: t.weight,
                site_vectors: t.site_vectors.iter().rev().cloned().collect(),
            })
            .collect();
        Ok(Self { n, d, terms })
    }
}

pub fn cp_basis_state(digits: &[usize], d: usize) -> Result<CPState> {
    if let Some(&digit) = digits.iter().find(|&&x| x >= d) {
        return Err(Error::DigitOutOfRange { digit, d });
    }
    let site_vectors = digits
        .iter()
        .map(|&j| {
            let mut v = vec![ZERO; d];
            v[j] = ONE;
            v
        })
        .collect();
    CPState::new(
        digits.len(),
        d,
        vec![RankOneTerm {
            weight: ONE,
            site_vectors,
        }],
    )
}

pub fn cp_to_dense(s: &CPState) -> Result<DenseVector> {
    cp_to_dense_within(s, DenseLimit::default())
}

/// Evaluates every entry by digit indexing.
pub fn cp_to_dense_within(s: &CPState, limit: DenseLimit) -> Result<DenseVector> {
    let dim = global_dim(s.n, s.d).ok_or(Error::DenseLimitExceeded {
        dim: usize::MAX,
        limit: limit.0,
    })?;
    limit.check(dim)?;
    let mut out = DenseVector::zeros(dim);
    let mut digits = vec![0usize; s.n];
    for j in 0..dim {
        let mut acc = ZERO;
        for t in &s.terms {
            if t.weight != ZERO {
                acc += t.weight * t.product_at(&digits);
            }
        }
        out[j] = acc;
        // big-endian increment
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < s.d {
                break;
            }
            *slot = 0;
        }
    }
    Ok(out)
}

fn matvec_small(m: &DenseMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Applies `op` term by term: each (operator term, state term) pair yields
/// one candidate, ordered with the state term outer and the operator term
/// inner, then [`CPState::pruned`] is applied.
pub fn apply_op_cp(op: &StructuredOperator, s: &CPState, prune: f64) -> Result<CPState> {
    if op.n_sites() != s.n {
        return Err(Error::DimensionMismatch {
            expected: s.n,
            found: op.n_sites(),
        });
    }
    if op.local_dim() != s.d {
        return Err(Error::DimensionMismatch {
            expected: s.d,
            found: op.local_dim(),
        });
    }
    let mut terms = Vec::with_capacity(op.terms().len() * s.terms.len());
    for st in &s.terms {
        for ot in op.terms() {
            let vectors = ot
                .factors
                .iter()
                .zip(&st.site_vectors)
                .map(|(f, v)| {
                    if f.is_identity() {
                        v.clone()
                    } else {
                        matvec_small(f, v)
                    }
                })
                .collect();
            terms.push(RankOneTerm::from_unnormalized(
                ot.coefficient * st.weight,
                vectors,
            ));
        }
    }
    Ok(CPState {
        n: s.n,
        d: s.d,
        terms,
    }
    .pruned(prune))
}

/// Result of running the diagonal-decomposition factors on a CP state.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeResult {
    pub state: CPState,
    pub labels: Vec<FactorLabel>,
    /// One entry per factor; `zero_weight` is nonzero only when `prune = 0`.
    pub steps: Vec<RankStep>,
    /// `max |cp_to_dense(out) − (I ⊕ Ω_k ⊕ ⋯)·cp_to_dense(in)|`, when `d^(k+1)`
    /// fits the default dense limit.
    pub final_residual: Option<f64>,
}

impl CascadeResult {
    pub fn term_counts(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.term_count).collect()
    }

    pub fn zero_weight_counts(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.zero_weight).collect()
    }
}

/// Applies the `k` factors `Σ_ℓ E_ℓ ⊗ ⋯ ⊗ R_{i+1}^ℓ ⊗ ⋯` (projectors on the
/// first site) for `i = 1..=k` in order.
pub fn diagonal_cascade_cp(k: usize, d: usize, s: &CPState, prune: f64) -> Result<CascadeResult> {
    if s.n != k + 1 || s.d != d {
        return Err(Error::DimensionMismatch {
            expected: k + 1,
            found: s.n,
        });
    }
    let dd = diagonal_decomposition(k, d, Orientation::ControlFirst)?;
    let mut state = s.clone();
    let mut steps = Vec::with_capacity(k);
    for (i, (f, label)) in dd.factors.iter().zip(&dd.labels).enumerate() {
        let start = Instant::now();
        state = apply_op_cp(f, &state, prune)?;
        steps.push(RankStep {
            step: i + 1,
            factor_label: label.describe(),
            term_count: state.term_count(),
            zero_weight: state.zero_weight_count(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let final_residual = match (cp_to_dense(s), cp_to_dense(&state)) {
        (Ok(input), Ok(output)) => {
            let phases = dd.target()?.diagonal();
            let expected: Vec<Complex64> = phases
                .iter()
                .zip(input.as_slice())
                .map(|(p, x)| p * x)
                .collect();
            Some(output.max_abs_diff(&DenseVector::from(expected)))
        }
        _ => None,
    };
    Ok(CascadeResult {
        state,
        labels: dd.labels,
        steps,
        final_residual,
    })
}

/// Numerical rank of the `d^cut × d^(n−cut)` matricization of the state.
pub fn bipartition_rank(s: &CPState, cut: usize) -> Result<usize> {
    bipartition_rank_within(s, cut, DenseLimit::default())
}

pub fn bipartition_rank_within(s: &CPState, cut: usize, limit: DenseLimit) -> Result<usize> {
    if cut == 0 || cut >= s.n {
        return Err(Error::invalid(format!(
            "cut must be in 1..{}, got {cut}",
            s.n
        )));
    }
    let dense = cp_to_dense_within(s, limit)?;
    let rows = s.d.pow(cut as u32);
    let cols = dense.dim() / rows;
    let m = DMatrix::from_row_slice(rows, cols, dense.as_slice());
    Ok(numerical_rank(
        &m.singular_values().iter().copied().collect::<Vec<_>>(),
    ))
}

fn numerical_rank(singular_values: &[f64]) -> usize {
    let largest = singular_values.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    singular_values
        .iter()
        .filter(|&&sv| sv > RANK_THRESHOLD * largest)
        .count()
}

/// Shrinks a representation without changing the state beyond `tol`.
///
/// Drops terms with `|α| ≤ tol · max|α|`, merges terms whose site vectors
/// are pairwise parallel, and for two sites replaces the terms by the SVD
/// of the `d × d` coefficient matrix when that is shorter. The term count
/// never increases.
pub fn compress(s: &CPState, tol: f64) -> CPState {
    let cutoff = tol * s.max_weight();
    let mut kept: Vec<RankOneTerm> = Vec::new();
    for t in s
        .terms
        .iter()
        .filter(|t| t.weight != ZERO && t.weight.norm() > cutoff)
    {
        match kept
            .iter_mut()
            .find_map(|k| parallel_phase(k, t, tol).map(|p| (k, p)))
        {
            Some((k, phase)) => k.weight += t.weight * phase,
            None => kept.push(t.clone()),
        }
    }
    kept.retain(|t| t.weight.norm() > cutoff);
    let merged = CPState {
        n: s.n,
        d: s.d,
        terms: kept,
    };
    if s.n == 2 && merged.term_count() > 1 {
        if let Some(svd) = two_site_svd(&merged, tol) {
            if svd.term_count() < merged.term_count() {
                return svd;
            }
        }
    }
    merged
}

/// If `b`'s site vectors are unit-modulus multiples of `a`'s, the product of
/// those multiples.
fn parallel_phase(a: &RankOneTerm, b: &RankOneTerm, tol: f64) -> Option<Complex64> {
    let slack = tol.max(1e-13);
    let mut phase = ONE;
    for (u, v) in a.site_vectors.iter().zip(&b.site_vectors) {
        let c: Complex64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
        let residual = u
            .iter()
            .zip(v)
            .map(|(x, y)| (y - c * x).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > slack {
            return None;
        }
        phase *= c;
    }
    Some(phase)
}

fn two_site_svd(s: &CPState, tol: f64) -> Option<CPState> {
    let dense = cp_to_dense(s).ok()?;
    let m = DMatrix::from_row_slice(s.d, s.d, dense.as_slice());
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = tol.max(f64::EPSILON) * largest;
    let terms = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff)
        .map(|i| {
            let left: Vec<Complex64> = u.column(i).iter().copied().collect();
            let right: Vec<Complex64> = v_t.row(i).iter().copied().collect();
            RankOneTerm::from_unnormalized(
                Complex64::new(svd.singular_values[i], 0.0),
                vec![left, right],
            )
        })
        .collect();
    Some(CPState {
        n: 2,
        d: s.d,
        terms,
    })
}

// ---------------------------------------------------------------------------
// Random inputs

/// Components of a generic site vector must all exceed this magnitude.
pub const GENERIC_MIN_COMPONENT: f64 = 1e-6;

fn gaussian_unit_vector(d: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = vec_norm(&v);
    v.into_iter().map(|z| z / norm).collect()
}

/// Unit-weight product state with complex Gaussian site vectors, resampling
/// any site vector with a component below [`GENERIC_MIN_COMPONENT`].
pub fn random_generic_rank_one(n: usize, d: usize, rng: &mut impl Rng) -> Result<CPState> {
    let site_vectors = (0..n)
        .map(|_| loop {
            let v = gaussian_unit_vector(d, rng);
            if v.iter().all(|z| z.norm() > GENERIC_MIN_COMPONENT) {
                break v;
            }
        })
        .collect();
    CPState::new(
        n,
        d,
        vec![RankOneTerm {
            weight: ONE,
            site_vectors,
        }],
    )
}

/// Sum of `terms` random rank-1 terms, scaled so the dense state has unit norm.
pub fn random_cp_state(n: usize, d: usize, terms: usize, rng: &mut impl Rng) -> Result<CPState> {
    let raw: Vec<RankOneTerm> = (0..terms)
        .map(|_| RankOneTerm {
            weight: Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
            site_vectors: (0..n).map(|_| gaussian_unit_vector(d, rng)).collect(),
        })
        .collect();
    let mut s = CPState::new(n, d, raw)?;
    if let Ok(dense) = cp_to_dense(&s) {
        let norm = dense.norm();
        if norm > 0.0 {
            s.terms.iter_mut().for_each(|t| t.weight /= norm);
        }
    }
    Ok(s)
}

/// Seeded generic input for the rank experiments.
pub fn seeded_generic_input(n: usize, d: usize, seed: u64) -> Result<CPState> {
    random_generic_rank_one(n, d, &mut ChaCha8Rng::seed_from_u64(seed))
}

// ---------------------------------------------------------------------------
// Full QFT experiment

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankStep {
    pub step: usize,
    pub factor_label: String,
    pub term_count: usize,
    pub zero_weight: usize,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub n: usize,
    pub d: usize,
    pub orientation: Orientation,
    pub prune: f64,
    pub initial_term_count: usize,
    pub steps: Vec<RankStep>,
    pub max_term_count: usize,
    pub final_term_count: usize,
    /// `max |cp_to_dense(out) − F·cp_to_dense(in)|`.
    pub final_residual: f64,
}

impl RankReport {
    pub fn trajectory(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.term_count).collect()
    }

    /// `step,factor_label,term_count,elapsed_ms`.
    pub fn to_csv(&self) -> String {
        steps_to_csv(&self.steps)
    }
}

pub fn steps_to_csv(steps: &[RankStep]) -> String {
    let mut out = String::from("step,factor_label,term_count,elapsed_ms\n");
    for s in steps {
        out.push_str(&format!(
            "{},{},{},{:.3}\n",
            s.step, s.factor_label, s.term_count, s.elapsed_ms
        ));
    }
    out
}

/// Runs the QFT plan factor by factor on a CP state, then applies the digit
/// reversal and checks the result densely.
pub fn qft_rank_experiment(
    n: usize,
    d: usize,
    input: &CPState,
    prune: f64,
    orientation: Orientation,
) -> Result<RankReport> {
    qft_rank_experiment_within(n, d, input, prune, orientation, DenseLimit::default())
}

pub fn qft_rank_experiment_within(
    n: usize,
    d: usize,
    input: &CPState,
    prune: f64,
    orientation: Orientation,
    limit: DenseLimit,
) -> Result<RankReport> {
    if input.n != n || input.d != d {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: input.n,
        });
    }
    let dim = global_dim(n, d).ok_or(Error::DenseLimitExceeded {
        dim: usize::MAX,
        limit: limit.0,
    })?;
    limit.check(dim)?;
    let plan = qft_plan(n, d, orientation)?;
    let mut state = input.clone();
    let mut steps = Vec::with_capacity(plan.factors().len());
    for (i, f) in plan.factors().iter().enumerate() {
        let start = Instant::now();
        state = apply_op_cp(&f.operator, &state, prune)?;
        steps.push(RankStep {
            step: i + 1,
            factor_label: f.label.describe(),
            term_count: state.term_count(),
            zero_weight: state.zero_weight_count(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let output = state.reverse_sites(n, d)?;
    let expected = dft_matrix_with(dim, Direction::Forward, limit)?
        .matvec(&cp_to_dense_within(input, limit)?)?;
    let final_residual = cp_to_dense_within(&output, limit)?.max_abs_diff(&expected);
    Ok(RankReport {
        n,
        d,
        orientation,
        prune,
        initial_term_count: input.term_count(),
        max_term_count: steps
            .iter()
            .map(|s| s.term_count)
            .max()
            .unwrap_or(input.term_count()),
        final_term_count: output.term_count(),
        steps,
        final_residual,
    })
}
