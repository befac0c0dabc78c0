//! Draws one graph from each generator and compares their degree profiles.

use truncated_hitting::{generate, GenSpec, Model};

fn main() -> truncated_hitting::Result<()> {
    let specs = [
        GenSpec::new(Model::Sp1, 1000, 10_000, 1),
        GenSpec::new(Model::Sp2, 1000, 10_000, 1),
        GenSpec::dense(50, 1),
    ];
    for spec in &specs {
        let g = generate(spec)?;
        let indeg = g.in_degrees();
        let mean = indeg.iter().sum::<usize>() as f64 / g.n() as f64;
        let var = indeg
            .iter()
            .map(|&d| (d as f64 - mean).powi(2))
            .sum::<f64>()
            / g.n() as f64;
        println!(
            "{:<4} n={:<5} edges={:<6} in-degree mean={mean:.2} var={var:.2} max={}",
            spec.model,
            g.n(),
            g.edge_count(),
            indeg.iter().max().unwrap()
        );
    }

    let path = std::env::temp_dir().join("thit-example-graph.tsv");
    generate(&GenSpec::new(Model::Sp1, 10, 20, 7))?.write_edge_list(&path)?;
    print!("{}", std::fs::read_to_string(&path).unwrap());
    Ok(())
}
