//! Averaged benchmark at outer=100 and the ordinal comparisons between configurations.

use gpjit::bench::{emit_table, run_benchmark, trend_check, BenchConfig};
use gpjit::NativeRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = BenchConfig {
        outer: vec![100],
        inner: vec![1, 1000],
        averaging: 20,
        ..BenchConfig::default()
    };
    let mut reports = Vec::new();
    for run in 1..=3 {
        let r = run_benchmark(&config, &NativeRegistry::new())?;
        eprintln!("run {run}:\n{}", emit_table(&r));
        reports.push(r);
    }
    let t = trend_check(&reports, 100, 1, 1000, 0.75).ok_or("missing cells")?;
    println!("{t:#?}");
    Ok(())
}
