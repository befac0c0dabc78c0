//! The three exact methods agree: the backward recursion, the first-passage
//! identity and enumeration of every walk.

use truncated_hitting::exact::{exact_first_passage_matrix, PATH_BUDGET};
use truncated_hitting::{brute_force_paths, exact_recursive, TransitionMatrix};

fn main() -> truncated_hitting::Result<()> {
    #[rustfmt::skip]
    let p = TransitionMatrix::from_dense(4, &[
        0.1, 0.6, 0.3, 0.0,
        0.0, 0.2, 0.5, 0.3,
        0.4, 0.0, 0.1, 0.5,
        0.5, 0.25, 0.25, 0.0,
    ])?;
    let horizon = 6;
    let recursive = exact_recursive(&p, horizon)?;
    let first_passage = exact_first_passage_matrix(&p, horizon)?;

    let mut worst = 0.0f64;
    for i in 0..p.n() {
        let paths = brute_force_paths(&p, i, horizon, PATH_BUDGET)?;
        for j in 0..p.n() {
            worst = worst
                .max((recursive.get(i, j) - first_passage.get(i, j)).abs())
                .max((recursive.get(i, j) - paths.values[j]).abs());
        }
        println!("{i}: {:.6?}", recursive.row(i));
    }
    println!("largest disagreement: {worst:e}");
    Ok(())
}
