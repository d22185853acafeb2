//! Splitting the twiddle block I + Omega_k + ... into two-site controlled phases.
//!
//! ```text
//! cargo run --example diagonal_decomposition
//! ```

use qftkron::factor::{diagonal_decomposition, Orientation};

fn main() -> qftkron::Result<()> {
    for (k, d) in [(3, 2), (2, 3)] {
        println!("k = {k}, d = {d}");
        let control_first = diagonal_decomposition(k, d, Orientation::ControlFirst)?;
        let target_first = diagonal_decomposition(k, d, Orientation::TargetFirst)?;
        for (a, b) in control_first.labels.iter().zip(&target_first.labels) {
            println!("  {:<10} == {}", a.describe(), b.describe());
        }
        let target = control_first.target()?;
        let product = control_first.product()?;
        println!(
            "  product vs block diagonal: {:.1e}",
            product.max_abs_diff(&target)
        );
        println!(
            "  orientations agree to {:.1e}",
            product.max_abs_diff(&target_first.product()?)
        );
        // the factors are diagonal, so any order gives the same product
        let reversed: Vec<usize> = (0..k).rev().collect();
        println!(
            "  reversed order: {:.1e}",
            control_first
                .product_in_order(&reversed)?
                .max_abs_diff(&target)
        );
    }
    Ok(())
}
