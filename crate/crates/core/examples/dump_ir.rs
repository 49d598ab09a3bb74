//! The SSA IR of a program before and after the optimization pipeline.

use gpjit::ir::{codegen_program, optimize, verify_module, PassSelection};
use gpjit::{parse_source, type_check, NativeRegistry, SAMPLE_PROGRAM};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = NativeRegistry::new();
    let typed = type_check(parse_source(SAMPLE_PROGRAM)?)?;
    let module = codegen_program(&typed, &registry)?;
    println!("; unoptimized, {} instructions", count(&module));
    print!("{module}");

    let opt = optimize(module, &PassSelection::all())?;
    verify_module(&opt)?;
    println!("\n; optimized, {} instructions", count(&opt));
    print!("{opt}");
    Ok(())
}

fn count(m: &gpjit::ir::Module) -> usize {
    m.functions.iter().map(|f| f.inst_count()).sum()
}
