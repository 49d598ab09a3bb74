//! A small benchmark grid printed as a table and written as CSV.

use gpjit::bench::{emit_csv, emit_table, run_benchmark, BenchConfig};
use gpjit::NativeRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = BenchConfig {
        outer: vec![10, 100],
        inner: vec![1, 10, 100],
        averaging: 5,
        ..BenchConfig::default()
    };
    let report = run_benchmark(&config, &NativeRegistry::new())?;
    print!("{}", emit_table(&report));
    let m = &report.metadata;
    println!("clock resolution {} ns, backend {}", m.clock_resolution_ns, m.backend);
    if !m.untrusted_cells.is_empty() {
        println!("below ten clock ticks: {}", m.untrusted_cells.join(" "));
    }
    let path = std::env::temp_dir().join("gpjit_bench.csv");
    emit_csv(&report, &path)?;
    println!("csv: {}", path.display());
    Ok(())
}
