//! Effect of each optimization pass on its own and of the full pipeline.

use gpjit::ir::{codegen_program, optimize, Pass, PassSelection};
use gpjit::{parse_source, type_check, NativeRegistry};

const SOURCE: &str = "\
int scale(int a, int b) { return (a * 4 + b * 4) + (a * 4 + b * 4) }
double mix(double x) { return x * 1.0 + 0.0 }
int k = (5 + 7) * 14
return scale(k, 3) + mix(2.5)
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = NativeRegistry::new();
    let typed = type_check(parse_source(SOURCE)?)?;
    let base = codegen_program(&typed, &registry)?;
    let size = |m: &gpjit::ir::Module| m.functions.iter().map(|f| f.inst_count()).sum::<usize>();
    println!("{:<14} {:>4} instructions", "none", size(&base));
    for pass in Pass::ALL {
        let m = optimize(base.clone(), &PassSelection::none().with(pass))?;
        println!(
            "{:<14} {:>4} instructions  ({})",
            pass.name(),
            size(&m),
            pass.implementation()
        );
    }
    let all = optimize(base, &PassSelection::all())?;
    println!("{:<14} {:>4} instructions\n", "all", size(&all));
    print!("{all}");
    Ok(())
}
