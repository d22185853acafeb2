//! The radix-d FFT as a product of Kronecker-structured butterflies.
//!
//! ```text
//! cargo run --example fft_factorization -- 6 3
//! ```

use qftkron::factor::{fft_plan, verify_plan};
use qftkron::spectral::dft_matrix;
use qftkron::tensor::DenseVector;

fn main() -> qftkron::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(5);
    let d = args.next().unwrap_or(2);

    let plan = fft_plan(n, d)?;
    println!(
        "F_{} = P_{n} A^(0) ... A^({}) with d = {d}",
        plan.dim().unwrap(),
        n - 1
    );
    for f in plan.factors() {
        println!(
            "  {:<7} acts on sites {:?} with {} Kronecker terms",
            f.label.describe(),
            f.label.support(n),
            f.operator.terms().len()
        );
    }

    let residual = verify_plan(&plan)?;
    println!("max |P*prod(A) - F| = {:.2e}", residual.dft_residual);
    println!(
        "max factor unitarity residual = {:.2e}",
        residual.max_unitarity_residual
    );

    // structured application never forms a dense matrix
    let dim = plan.dim().unwrap();
    let x = DenseVector::basis(dim, 1)?;
    let fast = plan.apply(&x)?;
    let dense = dft_matrix(dim)?.matvec(&x)?;
    println!("apply(e_1) vs F*e_1: {:.2e}", fast.max_abs_diff(&dense));
    Ok(())
}
