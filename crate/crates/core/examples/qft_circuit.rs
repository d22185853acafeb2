//! Lowering a QFT plan to gates, drawing it, counting gates and simulating it.
//!
//! ```text
//! cargo run --example qft_circuit -- 4
//! ```

use qftkron::circuit::{
    lower_to_circuit, qft_count_report, render_text, serialize, simulate_dense, SwapStyle,
};
use qftkron::factor::{qft_plan, Orientation};
use qftkron::spectral::dft_matrix;
use qftkron::tensor::DenseVector;

fn main() -> qftkron::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map_or(3, |a| a.parse().expect("integer n"));
    let plan = qft_plan(n, 2, Orientation::TargetFirst)?;
    let circuit = lower_to_circuit(&plan, SwapStyle::KeepSwap)?;
    print!("{}", render_text(&circuit)?);

    let lowered = lower_to_circuit(&plan, SwapStyle::ThreeCnot)?;
    let report = qft_count_report(&lowered);
    println!(
        "\nH: {}  controlled-R: {}  CNOT: {} (closed form floor(3n/2) = {})",
        report.counts.hadamard_or_fourier,
        report.counts.controlled_r,
        report.construction_cnot,
        report.table_one_cnot
    );
    if let Some(note) = &report.note {
        println!("note: {note}");
    }

    let dim = 1 << n;
    let x = DenseVector::basis(dim, 1)?;
    let y = simulate_dense(&lowered, &x)?;
    println!(
        "circuit vs F*e_1: {:.1e}",
        y.max_abs_diff(&dft_matrix(dim)?.matvec(&x)?)
    );

    let json = serialize(&circuit)?;
    let back = qftkron::circuit::deserialize(&json)?;
    println!(
        "\ncircuit JSON: {} bytes, {} gates, round trip equal: {}",
        json.len(),
        back.gates().len(),
        back == circuit
    );
    Ok(())
}
