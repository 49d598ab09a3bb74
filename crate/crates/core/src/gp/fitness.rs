//! Sum-of-squared-errors fitness, measured through an executor.

use super::{var_name, Dataset, GpError, Individual};
use crate::ast::{type_check_with, Expr, FuncDecl, Param, Program, Stmt, TypeTag, GP_MAIN};
use crate::exec::{make_executor, ExecConfig, NativeRegistry, Value};

/// Per-row error charged when the output, or its squared error, is not finite.
pub const PENALTY: f64 = 1e12;

/// `double gp_main(double x0, ..) { return <genome> }`
pub fn genome_program(genome: &Expr, arity: usize) -> Program {
    let params = (0..arity)
        .map(|i| Param {
            tag: TypeTag::Double,
            name: var_name(i),
        })
        .collect();
    Program::new(vec![Stmt::FuncDecl(FuncDecl {
        ret: TypeTag::Double,
        name: GP_MAIN.to_string(),
        params,
        body: vec![Stmt::Return(genome.clone())],
    })])
}

/// Translates the genome once and runs it on every row.
pub fn evaluate_fitness(
    ind: &Individual,
    dataset: &Dataset,
    config: ExecConfig,
    registry: &NativeRegistry,
) -> Result<f64, GpError> {
    let typed = type_check_with(genome_program(&ind.genome, dataset.arity()), registry)?;
    let mut exec = make_executor(config, &typed, registry)?;
    let mut inputs = Vec::with_capacity(dataset.arity());
    let mut sse = 0.0;
    for (x, y) in dataset.rows() {
        inputs.clear();
        inputs.extend(x.iter().map(|&v| Value::Double(v)));
        let out = exec.run(&inputs)?.as_f64();
        let err = (out - y) * (out - y);
        sse += if err.is_finite() { err } else { PENALTY };
    }
    Ok(sse)
}

/// Agreement of per-individual fitness between two configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    /// Largest relative SSE difference seen.
    pub max_rel_diff: f64,
    /// Individual pairs whose fitness order differs between the configurations.
    pub ordering_flips: usize,
}

/// Evaluates every individual under both configurations.
pub fn cross_check(
    population: &[Individual],
    dataset: &Dataset,
    a: ExecConfig,
    b: ExecConfig,
    registry: &NativeRegistry,
) -> Result<CrossCheck, GpError> {
    let mut fa = Vec::with_capacity(population.len());
    let mut fb = Vec::with_capacity(population.len());
    for ind in population {
        fa.push(evaluate_fitness(ind, dataset, a, registry)?);
        fb.push(evaluate_fitness(ind, dataset, b, registry)?);
    }
    let max_rel_diff = fa
        .iter()
        .zip(&fb)
        .map(|(&x, &y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max);
    let mut ordering_flips = 0;
    for i in 0..fa.len() {
        for j in i + 1..fa.len() {
            if fa[i].total_cmp(&fa[j]) != fb[i].total_cmp(&fb[j]) {
                ordering_flips += 1;
            }
        }
    }
    Ok(CrossCheck {
        max_rel_diff,
        ordering_flips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::BinOp;

    fn x_sq_plus_x() -> Expr {
        let x = Expr::ident("x0");
        Expr::binary(BinOp::Add, Expr::binary(BinOp::Mul, x.clone(), x.clone()), x)
    }

    #[test]
    fn exact_model_scores_zero() {
        let data = Dataset::new(
            (0..8)
                .map(|i| i as f64 / 4.0 - 1.0)
                .map(|x| (vec![x], x * x + x))
                .collect(),
        )
        .unwrap();
        for config in ExecConfig::ALL {
            let sse = evaluate_fitness(&Individual::new(x_sq_plus_x()), &data, config, &NativeRegistry::new()).unwrap();
            assert!(sse.abs() < 1e-9, "{config}: {sse}");
        }
    }

    #[test]
    fn constant_zero_against_one_and_two() {
        let data = Dataset::new(vec![(vec![0.0], 1.0), (vec![0.0], 2.0)]).unwrap();
        let zero = Individual::new(Expr::double(0.0));
        for config in ExecConfig::ALL {
            assert_eq!(
                evaluate_fitness(&zero, &data, config, &NativeRegistry::new()).unwrap(),
                5.0
            );
        }
    }

    #[test]
    fn non_finite_output_is_penalized() {
        let data = Dataset::new(vec![(vec![0.0], 1.0), (vec![1.0], 1.0)]).unwrap();
        let inv = Individual::new(Expr::binary(BinOp::Div, Expr::double(1.0), Expr::ident("x0")));
        for config in ExecConfig::ALL {
            let sse = evaluate_fitness(&inv, &data, config, &NativeRegistry::new()).unwrap();
            assert_eq!(sse, PENALTY);
        }
    }

    #[test]
    fn configurations_agree_on_a_population() {
        let data = Dataset::new(vec![(vec![0.5], 0.75), (vec![-1.5], 0.75)]).unwrap();
        let pop = vec![Individual::new(x_sq_plus_x()), Individual::new(Expr::ident("x0"))];
        let check = cross_check(&pop, &data, ExecConfig::Alg, ExecConfig::JitOpt, &NativeRegistry::new()).unwrap();
        assert_eq!(check.max_rel_diff, 0.0);
        assert_eq!(check.ordering_flips, 0);
    }
}
