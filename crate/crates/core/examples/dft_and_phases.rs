//! Roots of unity, the DFT matrix, phase gates and the twiddle diagonal.
//!
//! ```text
//! cargo run --example dft_and_phases
//! ```

use qftkron::spectral::{
    dft_matrix, exponent_matrix_render, omega, omega_diag, omega_kron_factors, r_gate,
};
use qftkron::tensor::kron_all;

fn main() -> qftkron::Result<()> {
    println!("omega_8^1 = {:.6}", omega(8, 1)?);
    println!("omega_8^9 = {:.6} (exponents reduce mod N)", omega(8, 9)?);

    println!("\nexponents k*j mod 8 of F_8:");
    print!("{}", exponent_matrix_render(8, true)?);

    let f4 = dft_matrix(4)?;
    println!("\nF_4 unitarity residual: {:.1e}", f4.unitarity_residual());

    let show = |v: Vec<num_complex::Complex64>| {
        v.iter()
            .map(|z| format!("{z:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!("\nR_3 for qubits:  diag({})", show(r_gate(3, 2).diagonal()));
    println!("R_2 for qutrits: diag({})", show(r_gate(2, 3).diagonal()));

    // Ω_3 is R_2 ⊗ R_3 ⊗ R_4
    let direct = omega_diag(3, 2, 1)?;
    let factored = kron_all(omega_kron_factors(3, 2).iter());
    println!(
        "\n|Omega_3 - (R_2 x R_3 x R_4)|_max = {:.1e}",
        direct.max_abs_diff(&factored)
    );
    Ok(())
}
