//! Approximate truncated hitting times from one vertex of a random graph,
//! with both approximation orders, next to the exact values.

use truncated_hitting::{
    approx_hitting, exact_first_passage, generate, DanglingPolicy, GenSpec, Model, Order,
    ProbabilityVector, TransitionMatrix,
};

fn main() -> truncated_hitting::Result<()> {
    let graph = generate(&GenSpec::new(Model::Sp1, 12, 40, 3))?;
    let p = TransitionMatrix::from_graph(&graph, DanglingPolicy::Reject)?;
    let horizon = 10;

    let start = ProbabilityVector::delta(p.n(), 0)?;
    let zero = approx_hitting(&p, start.clone(), horizon, Order::Zero)?;
    let one = approx_hitting(&p, start, horizon, Order::One)?;
    let exact = exact_first_passage(&p, 0, horizon)?;

    println!("target  exact     order-0   order-1");
    for j in 0..p.n() {
        println!(
            "{j:>6}  {:<8.4}  {:<8.4}  {:<8.4}",
            exact.values[j], zero.values[j], one.values[j]
        );
    }

    let uniform = ProbabilityVector::uniform(p.n())?;
    let from_uniform = approx_hitting(&p, uniform, horizon, Order::Zero)?;
    println!(
        "\nfrom the uniform distribution: {:.4?}",
        from_uniform.values
    );
    Ok(())
}
