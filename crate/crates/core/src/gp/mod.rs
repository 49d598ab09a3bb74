//! Tree-based genetic programming for symbolic regression.
//!
//! Genomes are [`Expr`] trees over `double` inputs `x0..x(k-1)`, the four
//! arithmetic operators and ephemeral constants in `[-1, 1]`. Fitness is the
//! sum of squared errors of `gp_main(x0, ..)` over a [`Dataset`], measured
//! through any [`ExecConfig`](crate::ExecConfig), so one individual costs one
//! translation plus one run per data row.
//!
//! All randomness comes from ChaCha8 streams seeded by [`GpParams::seed`];
//! generation `g` draws from stream `g` (generation 0 is initialization).

mod dataset;
mod evolve;
mod fitness;
pub mod fuzz;
mod tree;

use std::fmt;
use std::str::FromStr;

use crate::ast::{Expr, TypeErrors};
use crate::exec::ExecError;

pub use dataset::{Dataset, DatasetError};
pub use evolve::{evolve, rank, Evolution};
pub use fitness::{cross_check, evaluate_fitness, genome_program, CrossCheck, PENALTY};
pub use tree::{crossover, crossover_at, mutate, mutate_at, random_tree, var_name, CROSSOVER_RETRIES};

/// Tree initialization method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMethod {
    /// Every leaf sits exactly at the depth limit.
    Full,
    /// Leaves may appear at any depth up to the limit.
    Grow,
    /// Depth limits cycle over `2..=max_depth`, alternating full and grow.
    RampedHalfAndHalf,
}

impl InitMethod {
    pub fn name(self) -> &'static str {
        match self {
            InitMethod::Full => "full",
            InitMethod::Grow => "grow",
            InitMethod::RampedHalfAndHalf => "ramped-half-and-half",
        }
    }
}

impl FromStr for InitMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "full" => Ok(InitMethod::Full),
            "grow" => Ok(InitMethod::Grow),
            "ramped" | "ramped-half-and-half" => Ok(InitMethod::RampedHalfAndHalf),
            other => Err(format!("unknown init method `{other}`")),
        }
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub tournament_size: usize,
    pub max_depth: usize,
    pub init_method: InitMethod,
    pub seed: u64,
    pub elitism: usize,
    /// Evaluate distinct individuals on worker threads. Results do not change.
    pub parallel: bool,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            population_size: 64,
            generations: 20,
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            tournament_size: 3,
            max_depth: 6,
            init_method: InitMethod::RampedHalfAndHalf,
            seed: 0,
            elitism: 1,
            parallel: false,
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<(), GpError> {
        let fail = |m: &str| Err(GpError::InvalidParams(m.to_string()));
        if self.population_size == 0 {
            return fail("population size must be at least 1");
        }
        if self.tournament_size == 0 {
            return fail("tournament size must be at least 1");
        }
        if self.max_depth < 2 {
            return fail("max depth must be at least 2");
        }
        let probs = [self.crossover_prob, self.mutation_prob];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return fail("operator probabilities must lie in [0, 1]");
        }
        if self.crossover_prob + self.mutation_prob > 1.0 {
            return fail("crossover and mutation probabilities must sum to at most 1");
        }
        Ok(())
    }
}

/// A genome and its fitness, once evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Expr,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(genome: Expr) -> Self {
        Individual { genome, fitness: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GpError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("genome does not type-check: {0}")]
    Type(#[from] TypeErrors),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        GpParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_params() {
        let bad = [
            GpParams {
                population_size: 0,
                ..GpParams::default()
            },
            GpParams {
                max_depth: 1,
                ..GpParams::default()
            },
            GpParams {
                crossover_prob: 0.7,
                mutation_prob: 0.4,
                ..GpParams::default()
            },
            GpParams {
                mutation_prob: -0.1,
                ..GpParams::default()
            },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(GpError::InvalidParams(_))), "{p:?}");
        }
    }

    #[test]
    fn init_method_names() {
        for m in [InitMethod::Full, InitMethod::Grow, InitMethod::RampedHalfAndHalf] {
            assert_eq!(m.name().parse::<InitMethod>().unwrap(), m);
        }
        assert!("half".parse::<InitMethod>().is_err());
    }
}
