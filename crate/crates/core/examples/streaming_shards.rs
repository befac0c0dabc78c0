//! Writes a transition matrix as checksummed shards and runs the engine by
//! streaming them, keeping three length-n vectors in memory.

use truncated_hitting::{
    approx_hitting_order0, generate, write_shards, DanglingPolicy, GenSpec, Model,
    ProbabilityVector, ShardedTransition, TransitionMatrix,
};

fn main() -> truncated_hitting::Result<()> {
    let graph = generate(&GenSpec::new(Model::Sp2, 5000, 40_000, 11))?;
    let p = TransitionMatrix::from_graph(&graph, DanglingPolicy::SelfLoop)?;
    let dir = std::env::temp_dir().join("thit-example-shards");
    write_shards(&p, 8, &dir)?;

    let sharded = ShardedTransition::open(&dir)?;
    let horizon = 10;
    let start = ProbabilityVector::delta(p.n(), 0)?;
    let streamed = approx_hitting_order0(&sharded, start.clone(), horizon)?;
    let in_memory = approx_hitting_order0(&p, start, horizon)?;

    let max_diff = streamed
        .values
        .iter()
        .zip(&in_memory.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let stats = sharded.stats();
    println!("shards: {}", sharded.manifest().shards.len());
    println!("passes over the edges: {}", stats.passes);
    println!("edges streamed: {}", stats.edges_streamed);
    println!(
        "largest shard buffer: {} bytes",
        stats.peak_shard_buffer_bytes
    );
    println!("max |stream - memory|: {max_diff:e}");

    let mut nearest: Vec<(usize, f64)> = streamed
        .values
        .iter()
        .copied()
        .enumerate()
        .skip(1)
        .collect();
    nearest.sort_by(|a, b| a.1.total_cmp(&b.1));
    println!("closest to vertex 0: {:?}", &nearest[..5]);
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
