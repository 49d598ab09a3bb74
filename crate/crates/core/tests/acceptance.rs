//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use gpjit::bench::{r_squared, run_benchmark, run_benchmark_with, trend_check, BenchConfig, Counters};
use gpjit::exec::ExecConfig;
use gpjit::frontend::{parse_source, pretty_print};
use gpjit::gp::fuzz::{differential, random_program, FuzzOptions};
use gpjit::gp::{cross_check, evolve, genome_program, random_tree, Dataset, GpParams, InitMethod};
use gpjit::ir::{codegen_program, optimize, BinaryOp, InstKind, PassSelection, ENTRY_NAME};
use gpjit::{make_executor, type_check_with, NativeRegistry, Value, SAMPLE_PROGRAM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn sample_value() -> Outcome {
    let registry = NativeRegistry::new();
    let typed = type_check_with(parse_source(SAMPLE_PROGRAM).map_err(|e| e.to_string())?, &registry)
        .map_err(|e| e.to_string())?;
    for config in ExecConfig::ALL {
        let got = make_executor(config, &typed, &registry)
            .and_then(|mut e| e.run(&[]))
            .map_err(|e| format!("{config}: {e}"))?;
        if got != Value::Int(383) {
            return Err(format!("{config} returned {got:?}"));
        }
    }
    Ok("Int 383 on all five configurations".into())
}

fn differential_suite() -> Outcome {
    let plain = NativeRegistry::new();
    let math = NativeRegistry::math();
    let math_opts = FuzzOptions {
        max_expr_depth: 5,
        max_statements: 6,
        ..FuzzOptions::default()
    }
    .with_natives(&math);
    let recursive = FuzzOptions {
        recursion_prob: 0.3,
        ..FuzzOptions::default()
    };
    let mut failures = Vec::new();
    let mut count = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (program, inputs, registry) = match seed % 5 {
            0 | 1 => (random_program(&mut rng, &FuzzOptions::default()), Vec::new(), &plain),
            2 => (random_program(&mut rng, &math_opts), Vec::new(), &math),
            3 => (random_program(&mut rng, &recursive), Vec::new(), &plain),
            _ => {
                let arity = rng.random_range(1..=3);
                let depth = rng.random_range(1..=7);
                let genome = random_tree(InitMethod::RampedHalfAndHalf, depth, arity, &mut rng);
                let inputs = (0..arity).map(|_| Value::Double(rng.random_range(-3.0..3.0))).collect();
                (genome_program(&genome, arity), inputs, &plain)
            }
        };
        count += 1;
        let typed = match type_check_with(program, registry) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        if let Err(e) = differential(&typed, &inputs, registry) {
            failures.push(format!("seed {seed}: {e}"));
        }
    }
    if failures.is_empty() {
        Ok(format!("{count} programs, 0 disagreements"))
    } else {
        Err(format!("{} disagreements, first: {}", failures.len(), failures[0]))
    }
}

fn optimization_evidence() -> Outcome {
    let registry = NativeRegistry::new();
    let typed = type_check_with(parse_source("return (5+7)*14").map_err(|e| e.to_string())?, &registry)
        .map_err(|e| e.to_string())?;
    let module = codegen_program(&typed, &registry).map_err(|e| e.to_string())?;
    let module = optimize(module, &PassSelection::all()).map_err(|e| e.to_string())?;
    let dump = module.dump();
    let entry = module.function(ENTRY_NAME).ok_or("no entry function")?;
    let multiplies = entry
        .live_insts()
        .filter(|&(_, i)| {
            matches!(
                entry.inst(i).kind,
                InstKind::Binary {
                    op: BinaryOp::Mul | BinaryOp::FMul,
                    ..
                }
            )
        })
        .count();
    if !dump.contains("168") {
        return Err(format!("constant 168 missing:\n{dump}"));
    }
    if multiplies > 0 {
        return Err(format!("{multiplies} multiplies left:\n{dump}"));
    }
    Ok("constant 168 present, no multiply in the entry function".into())
}

fn harness_fidelity() -> Outcome {
    let config = BenchConfig {
        outer: vec![1, 3],
        inner: vec![1, 4],
        averaging: 3,
        ..BenchConfig::default()
    };
    let mut counters = Counters::default();
    let report = run_benchmark_with(&config, &NativeRegistry::new(), &mut counters).map_err(|e| e.to_string())?;
    if counters.parses != 1 || counters.parses_while_timed != 0 {
        return Err(format!(
            "{} parses, {} inside timed regions",
            counters.parses, counters.parses_while_timed
        ));
    }
    if counters.translations.len() != report.cells.len() {
        return Err(format!(
            "{} cells but {} counted",
            report.cells.len(),
            counters.translations.len()
        ));
    }
    for ((c, o, i), n) in &counters.translations {
        if *n != o * config.averaging {
            return Err(format!(
                "{c}/{o}/{i}: {n} constructions, expected {}",
                o * config.averaging
            ));
        }
    }
    Ok(format!(
        "1 parse, 0 timed parses, outer x averaging constructions in all {} cells",
        report.cells.len()
    ))
}

fn qualitative_trends() -> Outcome {
    let config = BenchConfig {
        outer: vec![100],
        inner: vec![1, 100, 200, 500, 1000],
        averaging: 20,
        ..BenchConfig::default()
    };
    let registry = NativeRegistry::new();
    let reports = (0..3)
        .map(|_| run_benchmark(&config, &registry))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let t = trend_check(&reports, 100, 1, 1000, 0.75).ok_or("missing cells")?;
    let mean = |c: ExecConfig, i: usize| reports.iter().filter_map(|r| r.mean(c, 100, i)).sum::<f64>() / 3.0;
    let row = |i: usize| {
        ExecConfig::ALL
            .iter()
            .map(|&c| format!("{c}={:.2}", mean(c, i)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("    inner=1    ms: {}", row(1));
    println!("    inner=1000 ms: {}", row(1000));
    let marks = [
        ("a", t.direct_fastest_at_low_inner, "ALG fastest at inner=1".to_string()),
        (
            "b",
            t.optimization_pays_off,
            format!(
                "INT-OPT/INT={:.2} JIT-OPT/JIT={:.2} (<= 0.75)",
                t.int_ratio, t.jit_ratio
            ),
        ),
        (
            "c",
            t.ir_beats_direct_at_high_inner,
            "IR configurations beat ALG at inner=1000".to_string(),
        ),
    ];
    let mut detail = Vec::new();
    for (tag, ok, what) in &marks {
        detail.push(format!("({tag}) {} {what}", if *ok { "holds" } else { "FAILED" }));
    }
    let flagged: Vec<&str> = marks.iter().filter(|m| !m.1).map(|m| m.0).collect();
    let summary = format!(
        "{}/3 hold; {}{}",
        t.holding(),
        detail.join("; "),
        if flagged.is_empty() {
            String::new()
        } else {
            format!("; flagged: {}", flagged.join(","))
        }
    );
    if t.holding() >= 2 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn linear_scaling() -> Outcome {
    let inner = [100usize, 200, 500, 1000];
    let config = BenchConfig {
        configs: vec![ExecConfig::Alg],
        outer: vec![100],
        inner: inner.to_vec(),
        averaging: 20,
        ..BenchConfig::default()
    };
    let report = run_benchmark(&config, &NativeRegistry::new()).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = inner.iter().map(|&i| i as f64).collect();
    let ys: Vec<f64> = inner
        .iter()
        .map(|&i| report.mean(ExecConfig::Alg, 100, i).unwrap_or(f64::NAN))
        .collect();
    let r2 = r_squared(&xs, &ys);
    let text = format!(
        "R^2={r2:.5} over ALG means {}",
        ys.iter().map(|y| format!("{y:.2}")).collect::<Vec<_>>().join(", ")
    );
    if r2 >= 0.99 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn gp_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dataset = Dataset::sample_1d(64, -2.0, 2.0, &mut rng, |x| x * x + x).map_err(|e| e.to_string())?;
    let params = GpParams {
        population_size: 64,
        generations: 20,
        elitism: 1,
        seed: 7,
        ..GpParams::default()
    };
    let registry = NativeRegistry::new();
    let run = evolve(&params, &dataset, ExecConfig::JitOpt, &registry).map_err(|e| e.to_string())?;
    if let Some(w) = run.history.windows(2).position(|w| w[1] > w[0]) {
        return Err(format!("history rises at generation {}: {:?}", w + 1, run.history));
    }
    let cc = cross_check(
        &run.population,
        &dataset,
        ExecConfig::Alg,
        ExecConfig::JitOpt,
        &registry,
    )
    .map_err(|e| e.to_string())?;
    let text = format!(
        "history {:.4} -> {:.4} non-increasing; ALG vs JIT-OPT max rel diff {:.1e}, {} ordering flips",
        run.history[0],
        run.history[run.history.len() - 1],
        cc.max_rel_diff,
        cc.ordering_flips
    );
    if cc.max_rel_diff <= 1e-6 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn round_trip() -> Outcome {
    let registry = NativeRegistry::math();
    let variants = [
        FuzzOptions::default(),
        FuzzOptions {
            max_functions: 5,
            max_statements: 8,
            max_expr_depth: 6,
            ..FuzzOptions::default()
        },
        FuzzOptions::default().with_natives(&registry),
    ];
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_program(&mut rng, &variants[seed as usize % variants.len()]);
        let text = pretty_print(&p);
        match parse_source(&text) {
            Ok(back) if back == p => {}
            Ok(_) => return Err(format!("seed {seed}: structure changed\n{text}")),
            Err(e) => return Err(format!("seed {seed}: {e}\n{text}")),
        }
    }
    Ok("1000 programs, 0 failures".into())
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            title: "sample program correctness",
            budget: Duration::from_secs(1),
            check: sample_value,
        },
        Criterion {
            id: 2,
            title: "differential suite",
            budget: Duration::from_secs(300),
            check: differential_suite,
        },
        Criterion {
            id: 3,
            title: "optimization evidence",
            budget: Duration::from_secs(1),
            check: optimization_evidence,
        },
        Criterion {
            id: 4,
            title: "harness fidelity",
            budget: Duration::from_secs(10),
            check: harness_fidelity,
        },
        Criterion {
            id: 5,
            title: "qualitative trends",
            budget: Duration::from_secs(600),
            check: qualitative_trends,
        },
        Criterion {
            id: 6,
            title: "linear scaling",
            budget: Duration::from_secs(300),
            check: linear_scaling,
        },
        Criterion {
            id: 7,
            title: "GP properties",
            budget: Duration::from_secs(120),
            check: gp_properties,
        },
        Criterion {
            id: 8,
            title: "frontend round-trip",
            budget: Duration::from_secs(60),
            check: round_trip,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > c.budget => Err(format!("{d}; took {took:.2?}, budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(d) => println!("PASS {} {}: {d} [{took:.2?}]", c.id, c.title),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {}: {d} [{took:.2?}]", c.id, c.title);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
