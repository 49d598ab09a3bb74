//! Generates random programs and checks that all configurations agree.

use gpjit::gp::fuzz::{differential, random_program, FuzzOptions};
use gpjit::{pretty_print, type_check_with, NativeRegistry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(200);
    let registry = NativeRegistry::math();
    let opts = FuzzOptions::default().with_natives(&registry);
    let mut ints = 0;
    for seed in 0..count {
        let program = random_program(&mut ChaCha8Rng::seed_from_u64(seed), &opts);
        let text = pretty_print(&program);
        let typed = type_check_with(program, &registry)?;
        match differential(&typed, &[], &registry) {
            Ok(v) => ints += usize::from(v.tag() == gpjit::TypeTag::Int),
            Err(e) => {
                eprintln!("seed {seed} disagrees: {e}\n{text}");
                std::process::exit(1);
            }
        }
    }
    println!(
        "{count} programs agree ({ints} int, {} double results)",
        count as usize - ints
    );
    Ok(())
}
