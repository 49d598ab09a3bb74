//! Host functions callable from programs, on every engine.

use gpjit::{make_executor, parse_source, type_check_with, ExecConfig, NativeRegistry, TypeTag, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut registry = NativeRegistry::math();
    registry.register_native(
        "clamp",
        &[TypeTag::Double, TypeTag::Double, TypeTag::Double],
        TypeTag::Double,
        |a| Value::Double(a[0].as_f64().clamp(a[1].as_f64(), a[2].as_f64())),
    )?;
    registry.register_native("isqrt", &[TypeTag::Int], TypeTag::Int, |a| {
        Value::Int(a[0].as_i64().max(0).isqrt())
    })?;
    println!("natives: {}", registry.names().collect::<Vec<_>>().join(", "));

    let source = "\
double hyp(double a, double b) { return sqrt_d(a*a + b*b) }
int n = isqrt(1000)
return clamp(hyp(3.0, 4.0) * n, 0.0, 100.0)
";
    let typed = type_check_with(parse_source(source)?, &registry)?;
    for config in ExecConfig::ALL {
        let v = make_executor(config, &typed, &registry)?.run(&[])?;
        println!("{:<8} {v:?}", config.name());
    }
    Ok(())
}
