//! Evolves an expression for y = x^2 + x and reports the best program.

use gpjit::gp::{evolve, genome_program, Dataset, GpParams};
use gpjit::{pretty_print, ExecConfig, NativeRegistry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data = Dataset::sample_1d(64, -2.0, 2.0, &mut rng, |x| x * x + x)?;
    let params = GpParams {
        population_size: 128,
        generations: 30,
        seed: 1,
        parallel: true,
        ..GpParams::default()
    };
    let run = evolve(&params, &data, ExecConfig::JitOpt, &NativeRegistry::new())?;
    for (g, best) in run.history.iter().enumerate().step_by(5) {
        println!("gen {g:>3}  best sse {best:.6}");
    }
    print!("{}", pretty_print(&genome_program(&run.best.genome, data.arity())));
    println!("sse {:?}, size {}", run.best.fitness.unwrap(), run.best.genome.size());
    Ok(())
}
