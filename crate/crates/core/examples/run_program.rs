//! Parse, type-check and run a program under every execution configuration.

use gpjit::{make_executor, parse_source, type_check, ExecConfig, SAMPLE_PROGRAM};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = std::env::args().nth(1).map(std::fs::read_to_string).transpose()?;
    let source = source.as_deref().unwrap_or(SAMPLE_PROGRAM);
    let typed = type_check(parse_source(source)?)?;
    println!("{}", gpjit::pretty_print(typed.program()));
    for config in ExecConfig::ALL {
        let mut exec = make_executor(config, &typed, &Default::default())?;
        println!("{:<8} {:?}", config.name(), exec.run(&[])?);
    }
    Ok(())
}
