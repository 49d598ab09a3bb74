//! The generational loop.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{crossover, evaluate_fitness, mutate, random_tree, Dataset, GpError, GpParams, Individual, InitMethod};
use crate::exec::{ExecConfig, NativeRegistry};
use crate::frontend::expr_to_string;

#[derive(Debug, Clone)]
pub struct Evolution {
    pub best: Individual,
    /// Best SSE of generation 0 through the last generation.
    pub history: Vec<f64>,
    /// The evaluated final population.
    pub population: Vec<Individual>,
}

/// Orders individuals best first: lower SSE, then smaller tree, then the
/// lexicographically smaller pre-order text. Unevaluated individuals sort last.
pub fn rank(a: &Individual, b: &Individual) -> Ordering {
    let fit = |i: &Individual| i.fitness.unwrap_or(f64::INFINITY);
    fit(a)
        .total_cmp(&fit(b))
        .then_with(|| a.genome.size().cmp(&b.genome.size()))
        .then_with(|| expr_to_string(&a.genome).cmp(&expr_to_string(&b.genome)))
}

fn stream(seed: u64, generation: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation as u64);
    rng
}

fn initial_population(params: &GpParams, arity: usize, rng: &mut impl Rng) -> Vec<Individual> {
    let depths: Vec<usize> = (2..=params.max_depth).collect();
    (0..params.population_size)
        .map(|i| {
            let (method, depth) = match params.init_method {
                InitMethod::RampedHalfAndHalf => {
                    let method = if i % 2 == 0 { InitMethod::Full } else { InitMethod::Grow };
                    (method, depths[(i / 2) % depths.len()])
                }
                m => (m, params.max_depth),
            };
            Individual::new(random_tree(method, depth, arity, rng))
        })
        .collect()
}

fn evaluate_all(
    pop: &mut [Individual],
    dataset: &Dataset,
    config: ExecConfig,
    registry: &NativeRegistry,
    parallel: bool,
) -> Result<(), GpError> {
    let eval = |ind: &mut Individual| -> Result<(), GpError> {
        if ind.fitness.is_none() {
            ind.fitness = Some(evaluate_fitness(ind, dataset, config, registry)?);
        }
        Ok(())
    };
    if parallel {
        pop.par_iter_mut().try_for_each(eval)
    } else {
        pop.iter_mut().try_for_each(eval)
    }
}

fn tournament<'p>(pop: &'p [Individual], size: usize, rng: &mut impl Rng) -> &'p Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let other = &pop[rng.random_range(0..pop.len())];
        if rank(other, best) == Ordering::Less {
            best = other;
        }
    }
    best
}

fn best_of(pop: &[Individual]) -> &Individual {
    pop.iter().min_by(|a, b| rank(a, b)).expect("non-empty population")
}

/// Runs generational GP; the result depends only on `params` and the data.
pub fn evolve(
    params: &GpParams,
    dataset: &Dataset,
    config: ExecConfig,
    registry: &NativeRegistry,
) -> Result<Evolution, GpError> {
    params.validate()?;
    let arity = dataset.arity();
    let mut pop = initial_population(params, arity, &mut stream(params.seed, 0));
    evaluate_all(&mut pop, dataset, config, registry, params.parallel)?;
    let mut history = vec![best_of(&pop).fitness.expect("evaluated")];

    for generation in 1..=params.generations {
        let mut rng = stream(params.seed, generation);
        let mut sorted: Vec<&Individual> = pop.iter().collect();
        sorted.sort_by(|a, b| rank(a, b));
        let mut next: Vec<Individual> = sorted
            .iter()
            .take(params.elitism.min(params.population_size))
            .map(|&i| i.clone())
            .collect();
        while next.len() < params.population_size {
            let r: f64 = rng.random();
            if r < params.crossover_prob {
                let a = tournament(&pop, params.tournament_size, &mut rng);
                let b = tournament(&pop, params.tournament_size, &mut rng);
                let (c1, c2) = crossover(a, b, &mut rng, params.max_depth);
                next.push(c1);
                if next.len() < params.population_size {
                    next.push(c2);
                }
            } else if r < params.crossover_prob + params.mutation_prob {
                let a = tournament(&pop, params.tournament_size, &mut rng);
                next.push(mutate(a, arity, &mut rng, params.max_depth));
            } else {
                next.push(tournament(&pop, params.tournament_size, &mut rng).clone());
            }
        }
        evaluate_all(&mut next, dataset, config, registry, params.parallel)?;
        pop = next;
        history.push(best_of(&pop).fitness.expect("evaluated"));
    }

    Ok(Evolution {
        best: best_of(&pop).clone(),
        history,
        population: pop,
    })
}
