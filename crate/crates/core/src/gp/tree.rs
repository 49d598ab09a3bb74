//! Random trees and the two variation operators.

use rand::Rng;

use super::{Individual, InitMethod};
use crate::ast::{BinOp, Expr};

const FUNCTIONS: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];

/// Extra attempts crossover makes before falling back to a parent copy.
pub const CROSSOVER_RETRIES: usize = 5;

pub fn var_name(i: usize) -> String {
    format!("x{i}")
}

fn terminal(arity: usize, rng: &mut impl Rng) -> Expr {
    // One slot per input plus one for an ephemeral constant.
    let pick = rng.random_range(0..=arity);
    if pick < arity {
        Expr::ident(var_name(pick))
    } else {
        Expr::double(rng.random_range(-1.0..=1.0))
    }
}

/// Generates a tree of depth at most `depth_limit` (exactly, for `Full`).
/// `RampedHalfAndHalf` picks full or grow with equal odds.
pub fn random_tree(method: InitMethod, depth_limit: usize, arity: usize, rng: &mut impl Rng) -> Expr {
    assert!(depth_limit >= 1, "depth limit must be at least 1");
    let full = match method {
        InitMethod::Full => true,
        InitMethod::Grow => false,
        InitMethod::RampedHalfAndHalf => rng.random_bool(0.5),
    };
    build(full, depth_limit, arity, rng)
}

fn build(full: bool, depth: usize, arity: usize, rng: &mut impl Rng) -> Expr {
    let leaf = depth == 1 || (!full && rng.random_range(0..FUNCTIONS.len() + arity + 1) >= FUNCTIONS.len());
    if leaf {
        return terminal(arity, rng);
    }
    let op = FUNCTIONS[rng.random_range(0..FUNCTIONS.len())];
    let lhs = build(full, depth - 1, arity, rng);
    let rhs = build(full, depth - 1, arity, rng);
    Expr::binary(op, lhs, rhs)
}

/// Swaps the subtree at pre-order index `i` of `a` with the one at `j` of `b`.
/// A child deeper than `max_depth` comes back as `None`.
pub fn crossover_at(a: &Expr, b: &Expr, i: usize, j: usize, max_depth: usize) -> (Option<Expr>, Option<Expr>) {
    let from_a = a.select_subtree(i).expect("index within parent a");
    let from_b = b.select_subtree(j).expect("index within parent b");
    let c1 = a.replace_subtree(i, from_b).expect("index within parent a");
    let c2 = b.replace_subtree(j, from_a).expect("index within parent b");
    let fits = |c: Expr| (c.depth() <= max_depth).then_some(c);
    (fits(c1), fits(c2))
}

/// Subtree crossover. Each child that stays too deep after the retries is
/// replaced by a copy of its own parent. Parents are not touched.
pub fn crossover(a: &Individual, b: &Individual, rng: &mut impl Rng, max_depth: usize) -> (Individual, Individual) {
    let (na, nb) = (a.genome.size(), b.genome.size());
    let mut first = None;
    let mut second = None;
    for _ in 0..=CROSSOVER_RETRIES {
        let i = rng.random_range(0..na);
        let j = rng.random_range(0..nb);
        let (c1, c2) = crossover_at(&a.genome, &b.genome, i, j, max_depth);
        if first.is_none() {
            first = c1;
        }
        if second.is_none() {
            second = c2;
        }
        if first.is_some() && second.is_some() {
            break;
        }
    }
    let child = |g: Option<Expr>, parent: &Individual| match g {
        Some(g) => Individual::new(g),
        None => parent.clone(),
    };
    (child(first, a), child(second, b))
}

/// Replaces the subtree at pre-order index `k` with a fresh grow tree sized
/// so the result stays within `max_depth`.
pub fn mutate_at(genome: &Expr, k: usize, arity: usize, max_depth: usize, rng: &mut impl Rng) -> Expr {
    let at = genome.depth_of(k).expect("index within genome");
    let limit = (max_depth + 1).saturating_sub(at).max(1);
    let fresh = random_tree(InitMethod::Grow, limit, arity, rng);
    genome.replace_subtree(k, &fresh).expect("index within genome")
}

/// Subtree mutation at a uniformly chosen node.
pub fn mutate(a: &Individual, arity: usize, rng: &mut impl Rng, max_depth: usize) -> Individual {
    let k = rng.random_range(0..a.genome.size());
    Individual::new(mutate_at(&a.genome, k, arity, max_depth, rng))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::frontend::expr_to_string;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn leaf_depths(e: &Expr, d: usize, out: &mut Vec<usize>) {
        if e.is_leaf() {
            out.push(d);
        }
        for c in e.children() {
            leaf_depths(c, d + 1, out);
        }
    }

    #[test]
    fn depth_one_is_a_terminal() {
        let mut r = rng(1);
        for _ in 0..50 {
            let t = random_tree(InitMethod::Full, 1, 2, &mut r);
            assert!(matches!(t, Expr::Identifier(_) | Expr::DoubleLiteral(_)));
        }
    }

    #[test]
    fn full_trees_are_balanced() {
        let mut r = rng(2);
        for _ in 0..50 {
            let t = random_tree(InitMethod::Full, 3, 1, &mut r);
            let mut depths = Vec::new();
            leaf_depths(&t, 1, &mut depths);
            assert!(depths.iter().all(|&d| d == 3));
            assert_eq!(t.size(), 7);
        }
    }

    #[test]
    fn constants_stay_in_range() {
        let mut r = rng(3);
        for _ in 0..200 {
            let t = random_tree(InitMethod::Grow, 4, 1, &mut r);
            for n in t.preorder() {
                if let Expr::DoubleLiteral(v) = n {
                    assert!((-1.0..=1.0).contains(v));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_tree() {
        let a = random_tree(InitMethod::RampedHalfAndHalf, 5, 3, &mut rng(9));
        let b = random_tree(InitMethod::RampedHalfAndHalf, 5, 3, &mut rng(9));
        assert_eq!(a, b);
    }

    #[test]
    fn whole_tree_swap() {
        let a = Expr::binary(BinOp::Add, Expr::ident("x0"), Expr::double(0.5));
        let b = Expr::ident("x1");
        let (c1, c2) = crossover_at(&a, &b, 0, 0, 6);
        assert_eq!(c1.unwrap(), b);
        assert_eq!(c2.unwrap(), a);
    }

    #[test]
    fn too_deep_children_fall_back_to_parents() {
        let deep = random_tree(InitMethod::Full, 4, 1, &mut rng(4));
        let other = random_tree(InitMethod::Full, 4, 1, &mut rng(5));
        let (a, b) = (Individual::new(deep), Individual::new(other));
        // With max depth 4, grafting a subtree of height h at depth d fits only if
        // d + h - 1 <= 4; the helper reports misfits as None.
        let (c1, _) = crossover_at(&a.genome, &b.genome, 1, 0, 4);
        assert!(c1.is_none());
        let (x, y) = crossover(&a, &b, &mut rng(6), 4);
        assert!(x.genome.depth() <= 4 && y.genome.depth() <= 4);
    }

    #[test]
    fn root_mutation_is_a_fresh_tree() {
        let g = Expr::binary(BinOp::Mul, Expr::ident("x0"), Expr::ident("x0"));
        let mut r1 = rng(7);
        let m = mutate_at(&g, 0, 1, 5, &mut r1);
        let fresh = random_tree(InitMethod::Grow, 5, 1, &mut rng(7));
        assert_eq!(expr_to_string(&m), expr_to_string(&fresh));
    }

    #[test]
    fn operators_leave_inputs_alone() {
        let mut r = rng(8);
        let a = Individual::new(random_tree(InitMethod::Full, 3, 2, &mut r));
        let b = Individual::new(random_tree(InitMethod::Grow, 4, 2, &mut r));
        let (sa, sb) = (a.clone(), b.clone());
        for _ in 0..50 {
            let _ = crossover(&a, &b, &mut r, 6);
            let _ = mutate(&a, 2, &mut r, 6);
        }
        assert_eq!(a, sa);
        assert_eq!(b, sb);
    }
}
