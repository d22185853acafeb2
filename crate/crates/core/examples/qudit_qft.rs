//! The QFT on d-level sites: Fourier gates, controlled phases and swaps.
//!
//! ```text
//! cargo run --example qudit_qft -- 3 3
//! ```

use qftkron::circuit::{count_gates, lower_to_circuit, render_text, simulate_dense, SwapStyle};
use qftkron::factor::{qft_plan, verify_plan, Orientation};
use qftkron::spectral::dft_matrix;
use qftkron::tensor::DenseVector;

fn main() -> qftkron::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(2);
    let d = args.next().unwrap_or(3);

    let plan = qft_plan(n, d, Orientation::TargetFirst)?;
    println!("plan residual: {:.1e}", verify_plan(&plan)?.dft_residual);

    // three-CNOT swaps only exist for qubits
    assert!(lower_to_circuit(&plan, SwapStyle::ThreeCnot).is_err());
    let circuit = lower_to_circuit(&plan, SwapStyle::KeepSwap)?;
    print!("{}", render_text(&circuit)?);
    println!("{:?}", count_gates(&circuit));

    let dim = d.pow(n as u32);
    let x = DenseVector::basis(dim, dim - 1)?;
    let y = simulate_dense(&circuit, &x)?;
    println!(
        "circuit vs F*e_last: {:.1e}",
        y.max_abs_diff(&dft_matrix(dim)?.matvec(&x)?)
    );
    Ok(())
}
