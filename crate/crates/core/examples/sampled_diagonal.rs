//! Estimates the return probabilities by sampling walks, sized by the
//! Hoeffding bound, and plugs them into the first-passage identity.

use truncated_hitting::exact::exact_first_passage;
use truncated_hitting::sampling::ReturnProbEstimate;
use truncated_hitting::{
    generate, hitting_via_sampled_diagonal, hoeffding_walk_count, sample_return_probabilities,
    DanglingPolicy, GenSpec, Model, TransitionMatrix,
};

fn main() -> truncated_hitting::Result<()> {
    let graph = generate(&GenSpec::new(Model::Sp1, 100, 1000, 5))?;
    let p = TransitionMatrix::from_graph(&graph, DanglingPolicy::Reject)?;
    let horizon = 10;

    let walks = hoeffding_walk_count(0.05, 0.05)?;
    println!("walks per vertex for eps=0.05, rho=0.05: {walks}");
    let est = sample_return_probabilities(&p, horizon, walks, 42)?;
    let exact_diag = ReturnProbEstimate::exact(&p, horizon)?;
    let worst = est
        .as_slice()
        .iter()
        .zip(exact_diag.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("largest diagonal error: {worst:.4}");

    let sampled = hitting_via_sampled_diagonal(&p, 0, horizon, &est)?;
    let exact = exact_first_passage(&p, 0, horizon)?;
    let rel: f64 = (1..p.n())
        .map(|j| ((sampled.values[j] - exact.values[j]) / exact.values[j]).abs())
        .sum::<f64>()
        / (p.n() - 1) as f64;
    println!("mean relative error of hitting times from vertex 0: {rel:.4}");
    Ok(())
}
