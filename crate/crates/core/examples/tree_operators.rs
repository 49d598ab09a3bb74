//! Random trees, subtree crossover and mutation under a depth limit.

use gpjit::gp::{crossover, mutate, random_tree, Individual, InitMethod};
use gpjit::pretty_print;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn show(label: &str, ind: &Individual) {
    let p = gpjit::gp::genome_program(&ind.genome, 2);
    let text = pretty_print(&p);
    let body = text.lines().nth(1).unwrap_or_default().trim();
    println!(
        "{label:<8} depth {} size {:>2}  {body}",
        ind.genome.depth(),
        ind.genome.size()
    );
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let max_depth = 4;
    let a = Individual::new(random_tree(InitMethod::Full, 3, 2, &mut rng));
    let b = Individual::new(random_tree(InitMethod::Grow, 4, 2, &mut rng));
    show("parent a", &a);
    show("parent b", &b);
    let (c1, c2) = crossover(&a, &b, &mut rng, max_depth);
    show("child 1", &c1);
    show("child 2", &c2);
    show("mutant", &mutate(&a, 2, &mut rng, max_depth));
}
