//! Circuits equal to the QFT: flipped controlled-R gates and reordered commuting runs.
//!
//! ```text
//! cargo run --example equivalent_circuits
//! ```

use qftkron::circuit::{
    equivalent_variants, lower_to_circuit, render_text, SwapStyle, VariantPolicy,
};
use qftkron::factor::{qft_plan, Orientation};

fn main() -> qftkron::Result<()> {
    let plan = qft_plan(3, 2, Orientation::TargetFirst)?;
    let original = lower_to_circuit(&plan, SwapStyle::KeepSwap)?;
    let u = original.unitary()?;

    for policy in [
        VariantPolicy::SwapControlTarget,
        VariantPolicy::ShuffleCommutingCr,
        VariantPolicy::Both,
    ] {
        let variants = equivalent_variants(&original, policy, 0);
        let worst = variants
            .iter()
            .map(|v| v.unitary().map(|m| m.max_abs_diff(&u)))
            .collect::<qftkron::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!(
            "{policy:?}: {} circuits, max unitary difference {worst:.1e}",
            variants.len()
        );
    }

    let all = equivalent_variants(&original, VariantPolicy::Both, 0);
    println!("\noriginal:\n{}", render_text(&original)?);
    println!("last variant:\n{}", render_text(all.last().unwrap())?);
    Ok(())
}
