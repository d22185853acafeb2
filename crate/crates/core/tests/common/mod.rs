//! Reference computations for the integration tests. Nothing here calls the
//! library's arithmetic; entries are built from `exp` and index loops.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use qftkron::cp::CPState;
use qftkron::tensor::{DenseMatrix, StructuredOperator};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(−2πi·e/m)` with `e` reduced mod `m`.
pub fn phase(m: u64, e: u64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * ((e % m) as f64) / m as f64)
}

/// Entry `(k, j)` of the unitary `N`-point DFT.
pub fn dft_entry(n: usize, k: usize, j: usize) -> Complex64 {
    phase(n as u64, (k as u64 * j as u64) % n as u64) / (n as f64).sqrt()
}

/// `F_N · x` by the defining sum.
pub fn dft_apply(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| (0..n).map(|j| dft_entry(n, k, j) * x[j]).sum())
        .collect()
}

/// Inverse transform by the defining sum.
pub fn idft_apply(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| (0..n).map(|j| dft_entry(n, k, j).conj() * x[j]).sum())
        .collect()
}

/// Row-major dense matrix as nested vectors.
pub type Grid = Vec<Vec<Complex64>>;

pub fn grid(m: &DenseMatrix) -> Grid {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn kron_grid(a: &Grid, b: &Grid) -> Grid {
    let (ar, ac) = (a.len(), a[0].len());
    let (br, bc) = (b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul_grid(a: &Grid, b: &Grid) -> Grid {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn matvec_grid(a: &Grid, x: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

pub fn max_diff_grid(a: &Grid, b: &Grid) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| {
            assert_eq!(r.len(), s.len());
            r.iter().zip(s).map(|(p, q)| (p - q).norm())
        })
        .fold(0.0, f64::max)
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|p| b.iter().map(move |q| p * q))
        .collect()
}

/// Sum of `coefficient · ⊗ factors` over all terms.
pub fn expand_operator(op: &StructuredOperator) -> Grid {
    let mut acc: Option<Grid> = None;
    for t in op.terms() {
        let mut m = vec![vec![t.coefficient]];
        for f in &t.factors {
            m = kron_grid(&m, &grid(f));
        }
        acc = Some(match acc {
            None => m,
            Some(a) => a
                .iter()
                .zip(&m)
                .map(|(r, s)| r.iter().zip(s).map(|(p, q)| p + q).collect())
                .collect(),
        });
    }
    acc.expect("operator has at least one term")
}

/// `Σ α_i · x_1 ⊗ ⋯ ⊗ x_n`.
pub fn dense_cp(s: &CPState) -> Vec<Complex64> {
    let dim = s.d().pow(s.n() as u32);
    let mut out = vec![c(0.0, 0.0); dim];
    for t in s.terms() {
        let v = t
            .site_vectors
            .iter()
            .fold(vec![t.weight], |acc, x| kron_vec(&acc, x));
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out
}

/// Base-`d` digits of `j`, most significant first.
pub fn digits(mut j: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = j % d;
        j /= d;
    }
    out
}

pub fn reverse_digits(j: usize, n: usize, d: usize) -> usize {
    digits(j, n, d).iter().rev().fold(0, |acc, &x| acc * d + x)
}

/// `R_m = diag(ω_{d^m}^ℓ)`, as its diagonal.
pub fn r_diag(m: usize, d: usize) -> Vec<Complex64> {
    let modulus = (d as u64).pow(m as u32);
    (0..d as u64).map(|l| phase(modulus, l)).collect()
}

/// Diagonal of `I ⊕ Ω_k ⊕ ⋯ ⊕ Ω_k^{d−1}`: entry `(ℓ, j)` is `ω_{d^{k+1}}^{ℓj}`.
pub fn twiddle_diag(k: usize, d: usize) -> Vec<Complex64> {
    let block = d.pow(k as u32);
    let modulus = (d as u64).pow(k as u32 + 1);
    (0..d * block)
        .map(|idx| phase(modulus, (idx / block) as u64 * (idx % block) as u64))
        .collect()
}
