//! Term counts of a sum-of-rank-1 state under the diagonal factors and the full QFT.
//!
//! ```text
//! cargo run --example rank_growth
//! ```

use qftkron::cp::{
    bipartition_rank, compress, cp_basis_state, diagonal_cascade_cp, qft_rank_experiment,
    seeded_generic_input, DEFAULT_PRUNE,
};
use qftkron::factor::Orientation;

fn main() -> qftkron::Result<()> {
    let k = 4;
    let generic = seeded_generic_input(k + 1, 2, 7)?;

    let pruned = diagonal_cascade_cp(k, 2, &generic, DEFAULT_PRUNE)?;
    let raw = diagonal_cascade_cp(k, 2, &generic, 0.0)?;
    println!("diagonal cascade, k = {k}");
    println!("  pruned terms:     {:?}", pruned.term_counts());
    println!("  unpruned terms:   {:?}", raw.term_counts());
    println!("  zero-weight ones: {:?}", raw.zero_weight_counts());
    println!(
        "  bipartition rank after first site: {}",
        bipartition_rank(&pruned.state, 1)?
    );
    println!(
        "  compressed unpruned state: {} terms",
        compress(&raw.state, 1e-12).term_count()
    );

    let basis = cp_basis_state(&[0, 1, 1, 0, 1], 2)?;
    println!(
        "  basis input terms: {:?}",
        diagonal_cascade_cp(k, 2, &basis, DEFAULT_PRUNE)?.term_counts()
    );

    println!("\nfull QFT, n = 3");
    for orientation in [Orientation::TargetFirst, Orientation::ControlFirst] {
        let input = seeded_generic_input(3, 2, 1)?;
        let report = qft_rank_experiment(3, 2, &input, DEFAULT_PRUNE, orientation)?;
        println!(
            "  {orientation:?}: terms {:?}, final residual {:.1e}",
            report.trajectory(),
            report.final_residual
        );
    }
    Ok(())
}
