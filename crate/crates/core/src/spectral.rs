//! Roots of unity, the unitary DFT matrix, the twiddle diagonals `Ω_n` and
//! the single-site phase gates `R_m`, for any radix `d ≥ 2`.
//!
//! The forward transform uses `ω_N = exp(−2πi/N)`; [`Direction::Inverse`]
//! conjugates every phase.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{direct_sum_all, global_dim, DenseLimit, DenseMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// `exp(∓2πi·k/modulus)`, with `k` reduced mod `modulus` before evaluation.
fn root(modulus: u128, k: i128, dir: Direction) -> Complex64 {
    let r = k.rem_euclid(modulus as i128);
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let angle = dir.sign() * 2.0 * PI * (r as f64) / (modulus as f64);
    Complex64::from_polar(1.0, angle)
}

/// `ω_N^k = exp(−2πi·k/N)`.
pub fn omega(n: usize, k: i64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::invalid("root of unity needs N >= 1"));
    }
    Ok(root(n as u128, k as i128, Direction::Forward))
}

/// The unitary `N × N` DFT matrix, entry `(k, j) = ω_N^{kj} / √N`.
pub fn dft_matrix(n: usize) -> Result<DenseMatrix> {
    dft_matrix_with(n, Direction::Forward, DenseLimit::default())
}

pub fn dft_matrix_with(n: usize, dir: Direction, limit: DenseLimit) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::invalid("DFT matrix needs N >= 1"));
    }
    limit.check(n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let modulus = n as u128;
    let data = (0..n)
        .flat_map(|k| (0..n).map(move |j| ((k * j) % n) as i128))
        .map(|e| root(modulus, e, dir) * scale)
        .collect();
    DenseMatrix::new(n, n, data)
}

fn power_modulus(d: usize, level: usize) -> Option<u128> {
    (d as u128).checked_pow(u32::try_from(level).ok()?)
}

/// `Ω_n^power = diag(ω_{d^{n+1}}^{j·power})` for `j = 0..d^n`.
pub fn omega_diag(n: usize, d: usize, power: u64) -> Result<DenseMatrix> {
    omega_diag_within(n, d, power, DenseLimit::default())
}

pub fn omega_diag_within(n: usize, d: usize, power: u64, limit: DenseLimit) -> Result<DenseMatrix> {
    check_radix(d)?;
    let dim = global_dim(n, d).ok_or_else(|| Error::invalid("d^n overflows"))?;
    limit.check(dim)?;
    let modulus = power_modulus(d, n + 1).expect("d^(n+1) fits when d^n is within the dense limit");
    let p = power as u128 % modulus;
    let diag: Vec<Complex64> = (0..dim as u128)
        .map(|j| root(modulus, ((j * p) % modulus) as i128, Direction::Forward))
        .collect();
    Ok(DenseMatrix::from_diag(&diag))
}

/// `R_level = diag(ω_{d^level}^0, …, ω_{d^level}^{d−1})`.
pub fn r_gate(level: usize, d: usize) -> DenseMatrix {
    r_gate_pow(level, d, 1)
}

/// `R_level^power`, evaluated entrywise from reduced exponents.
pub fn r_gate_pow(level: usize, d: usize, power: u64) -> DenseMatrix {
    let diag: Vec<Complex64> = match power_modulus(d, level) {
        Some(modulus) => (0..d as u128)
            .map(|m| {
                let e = (m * (power as u128 % modulus)) % modulus;
                root(modulus, e as i128, Direction::Forward)
            })
            .collect(),
        // The phase step underflows f64 long before d^level overflows u128.
        None => vec![Complex64::new(1.0, 0.0); d],
    };
    DenseMatrix::from_diag(&diag)
}

/// `[R_2, R_3, …, R_{n+1}]`, whose Kronecker product is `Ω_n`.
pub fn omega_kron_factors(n: usize, d: usize) -> Vec<DenseMatrix> {
    (2..=n + 1).map(|level| r_gate(level, d)).collect()
}

/// `I ⊕ Ω_k ⊕ Ω_k² ⊕ … ⊕ Ω_k^{d−1}`, the diagonal block inside `B_{k+1}`.
pub fn twiddle_diagonal(k: usize, d: usize) -> Result<DenseMatrix> {
    let dim = global_dim(k + 1, d).ok_or_else(|| Error::invalid("d^(k+1) overflows"))?;
    DenseLimit::default().check(dim)?;
    let blocks = (0..d as u64)
        .map(|l| omega_diag(k, d, l))
        .collect::<Result<Vec<_>>>()?;
    direct_sum_all(&blocks)
}

fn check_radix(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::invalid(format!(
            "local dimension must be at least 2, got {d}"
        )))
    } else {
        Ok(())
    }
}

pub const EXPONENT_RENDER_LIMIT: usize = 64;

/// Grid of DFT exponents `k·j`, optionally reduced mod `N`.
pub fn exponent_matrix(n: usize, modulo: bool) -> Result<Vec<Vec<usize>>> {
    if n == 0 || n > EXPONENT_RENDER_LIMIT {
        return Err(Error::invalid(format!(
            "exponent matrix supports 1 <= N <= {EXPONENT_RENDER_LIMIT}, got {n}"
        )));
    }
    Ok((0..n)
        .map(|k| {
            (0..n)
                .map(|j| if modulo { (k * j) % n } else { k * j })
                .collect()
        })
        .collect())
}

pub fn exponent_matrix_render(n: usize, modulo: bool) -> Result<String> {
    let grid = exponent_matrix(n, modulo)?;
    let width = grid
        .iter()
        .flatten()
        .map(|e| e.to_string().len())
        .max()
        .unwrap_or(1);
    let mut out = String::new();
    for row in &grid {
        let cells: Vec<String> = row.iter().map(|e| format!("{e:>width$}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    Ok(out)
}
