//! Accuracy of the approximation on random graphs against exact hitting
//! times. Pass `--full` for 1000-vertex cells as well.

use truncated_hitting::eval::CellSpec;
use truncated_hitting::{run_benchmark, BenchmarkConfig, Model};

fn main() -> truncated_hitting::Result<()> {
    let mut config = BenchmarkConfig::standard(2024);
    if !std::env::args().any(|a| a == "--full") {
        config.cells.retain(|c| c.n <= 100);
    }
    config.cells.push(CellSpec::new(Model::Sp1, 30, 120));
    let report = run_benchmark(&config)?;
    print!("{}", report.table());
    Ok(())
}
