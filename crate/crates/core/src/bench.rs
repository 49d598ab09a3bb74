//! Benchmark harness: averaging, outer and inner repetition loops.
//!
//! For every cell `(config, outer, inner)` and every averaging run the timed
//! region is
//!
//! ```text
//! start clock
//! for outer:  translate (make_executor)
//!             for inner: execute
//! stop clock
//! ```
//!
//! and the cell value is the mean of the averaging totals in milliseconds.
//! The source is parsed and type-checked once, before any timing.

use std::fmt::Write as _;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use crate::ast::{type_check_with, TypeErrors};
use crate::exec::{make_executor, ExecConfig, ExecError, NativeRegistry, Value};
use crate::frontend::{parse_source, FrontendError, SAMPLE_PROGRAM};
use crate::ir::{backend_description, Pass};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub program_source: String,
    pub configs: Vec<ExecConfig>,
    pub outer: Vec<usize>,
    pub inner: Vec<usize>,
    pub averaging: usize,
    /// Untimed translate-and-run passes per configuration before measuring.
    pub warmup: usize,
    /// Inputs for `gp_main`, when the program defines it.
    pub inputs: Vec<Value>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            program_source: SAMPLE_PROGRAM.to_string(),
            configs: ExecConfig::ALL.to_vec(),
            outer: vec![10, 100, 500],
            inner: vec![1, 10, 100, 200, 500, 1000],
            averaging: 50,
            warmup: 1,
            inputs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub config: ExecConfig,
    pub outer: usize,
    pub inner: usize,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub std_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub clock_resolution_ns: f64,
    pub backend: String,
    pub pass_substitutions: Vec<(String, String)>,
    pub timestamp: u64,
    pub averaging: usize,
    pub warmup: usize,
    /// Cells whose mean is below ten clock ticks, as `config/outer/inner`.
    pub untrusted_cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub cells: Vec<Cell>,
    pub metadata: Metadata,
}

impl BenchReport {
    pub fn cell(&self, config: ExecConfig, outer: usize, inner: usize) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.config == config && c.outer == outer && c.inner == inner)
    }

    pub fn mean(&self, config: ExecConfig, outer: usize, inner: usize) -> Option<f64> {
        self.cell(config, outer, inner).map(|c| c.mean_ms)
    }

    fn configs(&self) -> Vec<ExecConfig> {
        let mut v: Vec<ExecConfig> = self.cells.iter().map(|c| c.config).collect();
        v.sort();
        v.dedup();
        v
    }

    fn axis(&self, pick: impl Fn(&Cell) -> usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().map(pick).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Type(#[from] TypeErrors),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("clock: {0}")]
    Clock(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Observation points inside the harness, for instrumentation.
pub trait BenchHooks {
    fn on_parse(&mut self) {}
    fn on_translate(&mut self, _config: ExecConfig, _timed: bool) {}
    fn on_timed_region(&mut self, _config: ExecConfig, _outer: usize, _inner: usize, _entering: bool) {}
}

/// Hooks that do nothing.
pub struct NoHooks;

impl BenchHooks for NoHooks {}

/// Counts parses and translations and notes any parse inside a timed region.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Counters {
    pub parses: usize,
    pub parses_while_timed: usize,
    pub warmup_translations: usize,
    /// Timed translations per `(config, outer, inner)` cell, in visit order.
    pub translations: Vec<((ExecConfig, usize, usize), usize)>,
    in_region: Option<(ExecConfig, usize, usize)>,
}

impl BenchHooks for Counters {
    fn on_parse(&mut self) {
        self.parses += 1;
        if self.in_region.is_some() {
            self.parses_while_timed += 1;
        }
    }

    fn on_translate(&mut self, _config: ExecConfig, timed: bool) {
        match (timed, self.in_region) {
            (true, Some(key)) => match self.translations.iter_mut().find(|(k, _)| *k == key) {
                Some((_, n)) => *n += 1,
                None => self.translations.push((key, 1)),
            },
            _ => self.warmup_translations += 1,
        }
    }

    fn on_timed_region(&mut self, config: ExecConfig, outer: usize, inner: usize, entering: bool) {
        self.in_region = entering.then_some((config, outer, inner));
    }
}

/// Smallest observable step of the monotonic clock.
pub fn clock_resolution() -> Result<Duration, BenchError> {
    let mut best = Duration::MAX;
    for _ in 0..1000 {
        let a = Instant::now();
        let mut b = Instant::now();
        let mut spins = 0u32;
        while b == a {
            spins += 1;
            if spins > 1_000_000 {
                return Err(BenchError::Clock("clock does not advance".into()));
            }
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    Ok(best)
}

pub fn run_benchmark(config: &BenchConfig, registry: &NativeRegistry) -> Result<BenchReport, BenchError> {
    run_benchmark_with(config, registry, &mut NoHooks)
}

pub fn run_benchmark_with(
    config: &BenchConfig,
    registry: &NativeRegistry,
    hooks: &mut dyn BenchHooks,
) -> Result<BenchReport, BenchError> {
    let empty = |v: &[usize]| v.is_empty() || v.contains(&0);
    if config.configs.is_empty() || empty(&config.outer) || empty(&config.inner) || config.averaging == 0 {
        return Err(BenchError::Config(
            "configs, outer and inner must be non-empty with positive counts, averaging positive".into(),
        ));
    }
    hooks.on_parse();
    let program = parse_source(&config.program_source)?;
    let typed = type_check_with(program, registry)?;
    let resolution = clock_resolution()?;

    let mut configs = config.configs.clone();
    configs.sort();
    configs.dedup();

    let mut cells = Vec::new();
    for &exec in &configs {
        for _ in 0..config.warmup {
            let mut e = make_executor(exec, &typed, registry)?;
            hooks.on_translate(exec, false);
            black_box(e.run(&config.inputs)?);
        }
        for &outer in &config.outer {
            for &inner in &config.inner {
                let mut totals = Vec::with_capacity(config.averaging);
                for _ in 0..config.averaging {
                    hooks.on_timed_region(exec, outer, inner, true);
                    let start = Instant::now();
                    for _ in 0..outer {
                        let mut e = make_executor(exec, &typed, registry)?;
                        hooks.on_translate(exec, true);
                        for _ in 0..inner {
                            black_box(e.run(black_box(&config.inputs))?);
                        }
                    }
                    let elapsed = start.elapsed();
                    hooks.on_timed_region(exec, outer, inner, false);
                    totals.push(elapsed.as_secs_f64() * 1e3);
                }
                cells.push(summarize(exec, outer, inner, &totals));
            }
        }
    }

    let tick_ms = resolution.as_secs_f64() * 1e3;
    let untrusted_cells = cells
        .iter()
        .filter(|c| c.mean_ms < 10.0 * tick_ms)
        .map(|c| format!("{}/{}/{}", c.config, c.outer, c.inner))
        .collect();
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_err(|e| BenchError::Clock(e.to_string()))?
        .as_secs();
    Ok(BenchReport {
        cells,
        metadata: Metadata {
            clock_resolution_ns: resolution.as_secs_f64() * 1e9,
            backend: backend_description(),
            pass_substitutions: Pass::ALL
                .iter()
                .map(|p| (p.name().to_string(), p.implementation().to_string()))
                .collect(),
            timestamp,
            averaging: config.averaging,
            warmup: config.warmup,
            untrusted_cells,
        },
    })
}

fn summarize(config: ExecConfig, outer: usize, inner: usize, totals: &[f64]) -> Cell {
    let n = totals.len() as f64;
    let mean = totals.iter().sum::<f64>() / n;
    let var = totals.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    Cell {
        config,
        outer,
        inner,
        mean_ms: mean,
        min_ms: totals.iter().copied().fold(f64::INFINITY, f64::min),
        std_ms: var.sqrt(),
    }
}

/// Fixed-width table: one row per configuration, columns grouped by outer
/// count then inner count, milliseconds with two decimals.
pub fn emit_table(report: &BenchReport) -> String {
    let configs = report.configs();
    let outers = report.axis(|c| c.outer);
    let inners = report.axis(|c| c.inner);
    let value = |c, o, i| {
        report
            .mean(c, o, i)
            .map_or_else(|| "-".to_string(), |m| format!("{m:.2}"))
    };

    let label_w = configs
        .iter()
        .map(|c| c.name().len())
        .chain(["inner repeats".len()])
        .max()
        .unwrap_or(0);
    let mut col_w = inners.iter().map(|i| i.to_string().len()).max().unwrap_or(1);
    for &c in &configs {
        for &o in &outers {
            for &i in &inners {
                col_w = col_w.max(value(c, o, i).len());
            }
        }
    }
    let group_w = inners.len() * (col_w + 1) - 1;
    let mut out = String::new();

    let _ = write!(out, "{:<label_w$}", "outer repeats");
    for &o in &outers {
        let _ = write!(out, " | {:^group_w$}", o);
    }
    out.push('\n');
    let _ = write!(out, "{:<label_w$}", "inner repeats");
    for _ in &outers {
        out.push_str(" |");
        for &i in &inners {
            let _ = write!(out, " {:>col_w$}", i);
        }
    }
    out.push('\n');
    let rule = label_w + outers.len() * (group_w + 3);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for &c in &configs {
        let _ = write!(out, "{:<label_w$}", c.name());
        for &o in &outers {
            out.push_str(" |");
            for &i in &inners {
                let _ = write!(out, " {:>col_w$}", value(c, o, i));
            }
        }
        out.push('\n');
    }
    out
}

/// CSV text: `# key=value` metadata lines, then
/// `config,outer,inner,mean_ms,min_ms,std_ms` and one row per cell.
pub fn csv_string(report: &BenchReport) -> String {
    let m = &report.metadata;
    let mut out = String::new();
    let _ = writeln!(out, "# clock_resolution_ns={}", m.clock_resolution_ns);
    let _ = writeln!(out, "# backend={}", m.backend);
    for (pass, how) in &m.pass_substitutions {
        let _ = writeln!(out, "# pass.{pass}={how}");
    }
    let _ = writeln!(out, "# timestamp={}", m.timestamp);
    let _ = writeln!(out, "# averaging={}", m.averaging);
    let _ = writeln!(out, "# warmup={}", m.warmup);
    let _ = writeln!(out, "# untrusted_cells={}", m.untrusted_cells.join(" "));

    let mut cells: Vec<&Cell> = report.cells.iter().collect();
    cells.sort_by_key(|c| (c.config, c.outer, c.inner));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "outer", "inner", "mean_ms", "min_ms", "std_ms"])
        .expect("writing to memory");
    for c in cells {
        w.write_record([
            c.config.name().to_string(),
            c.outer.to_string(),
            c.inner.to_string(),
            format!("{:.6}", c.mean_ms),
            format!("{:.6}", c.min_ms),
            format!("{:.6}", c.std_ms),
        ])
        .expect("writing to memory");
    }
    let body = w.into_inner().expect("flushing to memory");
    out.push_str(std::str::from_utf8(&body).expect("csv output is UTF-8"));
    out
}

pub fn emit_csv(report: &BenchReport, destination: &Path) -> Result<(), BenchError> {
    std::fs::write(destination, csv_string(report)).map_err(|source| BenchError::Io {
        path: destination.to_path_buf(),
        source,
    })
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    (sxy * sxy) / (sxx * syy)
}

/// Ordinal comparisons between configurations on averaged reports.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendCheck {
    /// At the smallest inner count the direct executor is fastest.
    pub direct_fastest_at_low_inner: bool,
    /// At the largest inner count each optimized configuration takes at most
    /// `ratio` of its unoptimized counterpart.
    pub optimization_pays_off: bool,
    /// At the largest inner count every IR configuration beats the direct executor.
    pub ir_beats_direct_at_high_inner: bool,
    pub int_ratio: f64,
    pub jit_ratio: f64,
}

impl TrendCheck {
    pub fn holding(&self) -> usize {
        [
            self.direct_fastest_at_low_inner,
            self.optimization_pays_off,
            self.ir_beats_direct_at_high_inner,
        ]
        .iter()
        .filter(|&&b| b)
        .count()
    }
}

/// Evaluates the trends on the cell-wise mean of `reports` at `outer`,
/// comparing inner counts `low` and `high`.
pub fn trend_check(reports: &[BenchReport], outer: usize, low: usize, high: usize, ratio: f64) -> Option<TrendCheck> {
    let mean = |c: ExecConfig, i: usize| -> Option<f64> {
        let v: Option<Vec<f64>> = reports.iter().map(|r| r.mean(c, outer, i)).collect();
        let v = v?;
        Some(v.iter().sum::<f64>() / v.len() as f64)
    };
    use ExecConfig::*;
    let alg_low = mean(Alg, low)?;
    let others_low: Vec<f64> = [Int, IntOpt, Jit, JitOpt]
        .iter()
        .map(|&c| mean(c, low))
        .collect::<Option<_>>()?;
    let int_ratio = mean(IntOpt, high)? / mean(Int, high)?;
    let jit_ratio = mean(JitOpt, high)? / mean(Jit, high)?;
    let alg_high = mean(Alg, high)?;
    let ir_high: Vec<f64> = [Int, IntOpt, Jit, JitOpt]
        .iter()
        .map(|&c| mean(c, high))
        .collect::<Option<_>>()?;
    Some(TrendCheck {
        direct_fastest_at_low_inner: others_low.iter().all(|&m| alg_low <= m),
        optimization_pays_off: int_ratio <= ratio && jit_ratio <= ratio,
        ir_beats_direct_at_high_inner: ir_high.iter().all(|&m| m <= alg_high),
        int_ratio,
        jit_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(configs: Vec<ExecConfig>) -> BenchConfig {
        BenchConfig {
            configs,
            outer: vec![1],
            inner: vec![1],
            averaging: 2,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn one_cell_report() {
        let r = run_benchmark(&tiny(vec![ExecConfig::Alg]), &NativeRegistry::new()).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert!(r.cells[0].mean_ms >= 0.0);
        let table = emit_table(&r);
        assert_eq!(table.lines().count(), 4, "{table}");
        assert_eq!(table.lines().filter(|l| l.starts_with("ALG")).count(), 1);
        let csv = csv_string(&r);
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 2);
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn counters_follow_the_loop_nest() {
        let cfg = BenchConfig {
            configs: vec![ExecConfig::Alg, ExecConfig::Jit],
            outer: vec![2, 3],
            inner: vec![1, 4],
            averaging: 3,
            warmup: 1,
            ..BenchConfig::default()
        };
        let mut counters = Counters::default();
        let r = run_benchmark_with(&cfg, &NativeRegistry::new(), &mut counters).unwrap();
        assert_eq!(r.cells.len(), 8);
        assert_eq!(counters.parses, 1);
        assert_eq!(counters.parses_while_timed, 0);
        assert_eq!(counters.warmup_translations, 2);
        assert_eq!(counters.translations.len(), 8);
        for ((_, outer, _), n) in &counters.translations {
            assert_eq!(*n, outer * 3);
        }
    }

    #[test]
    fn rejects_empty_grids_and_bad_sources() {
        let reg = NativeRegistry::new();
        let mut cfg = tiny(vec![]);
        assert!(matches!(run_benchmark(&cfg, &reg), Err(BenchError::Config(_))));
        cfg.configs = vec![ExecConfig::Alg];
        cfg.inner = vec![0];
        assert!(matches!(run_benchmark(&cfg, &reg), Err(BenchError::Config(_))));
        cfg.inner = vec![1];
        cfg.program_source = "int x =".into();
        assert!(matches!(run_benchmark(&cfg, &reg), Err(BenchError::Frontend(_))));
    }

    fn synthetic(values: &[(ExecConfig, usize, usize, f64)]) -> BenchReport {
        BenchReport {
            cells: values
                .iter()
                .map(|&(config, outer, inner, mean_ms)| Cell {
                    config,
                    outer,
                    inner,
                    mean_ms,
                    min_ms: mean_ms,
                    std_ms: 0.0,
                })
                .collect(),
            metadata: Metadata {
                clock_resolution_ns: 1.0,
                backend: "test".into(),
                pass_substitutions: vec![],
                timestamp: 0,
                averaging: 1,
                warmup: 0,
                untrusted_cells: vec![],
            },
        }
    }

    #[test]
    fn table_has_two_decimals_and_fixed_rows() {
        let r = synthetic(&[
            (ExecConfig::JitOpt, 10, 1, 727.7),
            (ExecConfig::Alg, 10, 1, 0.25),
            (ExecConfig::Alg, 10, 1000, 1.0),
            (ExecConfig::JitOpt, 10, 1000, 3.25),
        ]);
        let t = emit_table(&r);
        let rows: Vec<&str> = t.lines().skip(3).collect();
        assert!(rows[0].starts_with("ALG") && rows[1].starts_with("JIT-OPT"), "{t}");
        assert!(t.contains(" 0.25") && t.contains("727.70") && t.contains("3.25"));
        assert!(!t.contains("0.250"));
        let widths: Vec<usize> = t.lines().map(str::len).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{t}");
    }

    #[test]
    fn csv_is_stable() {
        let r = synthetic(&[(ExecConfig::Int, 10, 5, 2.0), (ExecConfig::Alg, 10, 5, 1.0)]);
        let a = csv_string(&r);
        assert_eq!(a, csv_string(&r));
        let data: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(
            data,
            [
                "config,outer,inner,mean_ms,min_ms,std_ms",
                "ALG,10,5,1.000000,1.000000,0.000000",
                "INT,10,5,2.000000,2.000000,0.000000"
            ]
        );
    }

    #[test]
    fn r_squared_of_a_line_is_one() {
        let xs = [100.0, 200.0, 500.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x + 3.0).collect();
        assert!((r_squared(&xs, &ys) - 1.0).abs() < 1e-12);
        let noisy = [74.50, 150.88, 369.79, 727.70];
        assert!((r_squared(&xs, &noisy) - 0.999_926_239_390_697_1).abs() < 1e-12);
    }

    #[test]
    fn default_grid_is_ninety_cells() {
        let d = BenchConfig::default();
        let mut v = Vec::new();
        for &c in &d.configs {
            for &o in &d.outer {
                for &i in &d.inner {
                    v.push((c, o, i, 1.0));
                }
            }
        }
        assert_eq!(v.len(), 90);
        let csv = csv_string(&synthetic(&v));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 91);
    }

    #[test]
    fn trend_check_reads_means() {
        use ExecConfig::*;
        let mut v = Vec::new();
        for (c, low, high) in [
            (Alg, 1.0, 700.0),
            (Int, 5.0, 400.0),
            (IntOpt, 6.0, 180.0),
            (Jit, 20.0, 400.0),
            (JitOpt, 21.0, 190.0),
        ] {
            v.push((c, 100, 1, low));
            v.push((c, 100, 1000, high));
        }
        let t = trend_check(&[synthetic(&v)], 100, 1, 1000, 0.75).unwrap();
        assert_eq!(t.holding(), 3);
        assert!((t.int_ratio - 0.45).abs() < 1e-12);
    }
}
