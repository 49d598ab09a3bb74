//! Random well-typed programs over the whole language.
//!
//! Used by the differential and round-trip suites. Programs contain function
//! declarations with `int` and `double` parameters, local variables,
//! assignments used as expressions, calls (to user functions and optionally
//! natives), int/double promotion, all five operators, dead statements after
//! a `return`, and, rarely, call cycles that run into the recursion limit.
//!
//! Expression statements always start with an identifier, so every generated
//! program survives `parse_source(&pretty_print(p))`.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::ast::{BinOp, Expr, FuncDecl, Param, Program, Stmt, TypeTag, TypedProgram};
use crate::exec::{make_executor, ExecConfig, ExecError, NativeRegistry, Value};

/// Relative tolerance for doubles produced by optimized configurations.
pub const OPT_REL_TOL: f64 = 1e-9;

/// Runs `program` under every configuration and compares each outcome with
/// the direct executor's. Ints must match exactly; doubles must be
/// bit-identical (any NaN matching any NaN), or within [`OPT_REL_TOL`] under
/// an optimizing configuration; errors must be equal.
pub fn differential(program: &TypedProgram, inputs: &[Value], registry: &NativeRegistry) -> Result<Value, String> {
    let run =
        |config: ExecConfig| -> Result<Value, ExecError> { make_executor(config, program, registry)?.run(inputs) };
    let reference = run(ExecConfig::Alg);
    for config in &ExecConfig::ALL[1..] {
        let got = run(*config);
        let same = match (&reference, &got) {
            (Ok(a), Ok(b)) if config.optimize() => a.agrees_with(*b, OPT_REL_TOL),
            (Ok(a), Ok(b)) => a.identical(*b),
            (Err(a), Err(b)) => a == b,
            _ => false,
        };
        if !same {
            return Err(format!("ALG gave {reference:?} but {config} gave {got:?}"));
        }
    }
    reference.or_else(|e| match e {
        ExecError::RecursionLimit => Ok(Value::Int(0)),
        other => Err(format!("ALG failed: {other}")),
    })
}

#[derive(Debug, Clone)]
pub struct FuzzOptions {
    pub max_functions: usize,
    pub max_params: usize,
    pub max_statements: usize,
    pub max_expr_depth: usize,
    /// Chance that a call site may target any function, closing a cycle.
    pub recursion_prob: f64,
    /// Natives that calls may target, as `(name, params, ret)`.
    pub natives: Vec<(String, Vec<TypeTag>, TypeTag)>,
}

impl Default for FuzzOptions {
    fn default() -> Self {
        FuzzOptions {
            max_functions: 3,
            max_params: 3,
            max_statements: 4,
            max_expr_depth: 4,
            recursion_prob: 0.01,
            natives: Vec::new(),
        }
    }
}

impl FuzzOptions {
    /// Lets generated calls target every native in `registry`.
    pub fn with_natives(mut self, registry: &NativeRegistry) -> Self {
        let mut names: Vec<&str> = registry.names().collect();
        names.sort_unstable();
        self.natives = names
            .into_iter()
            .filter_map(|n| registry.get(n))
            .map(|e| (e.name().to_string(), e.params().to_vec(), e.ret()))
            .collect();
        self
    }
}

struct Sig {
    name: String,
    params: Vec<TypeTag>,
    ret: TypeTag,
}

struct Gen<'a, R> {
    rng: &'a mut R,
    opts: &'a FuzzOptions,
    funcs: Vec<Sig>,
    natives: Vec<Sig>,
    /// Function being generated; `None` at top level.
    current: Option<usize>,
    scope: Vec<(String, TypeTag)>,
}

/// Generates one program that type-checks against a registry holding
/// `opts.natives`.
pub fn random_program(rng: &mut impl Rng, opts: &FuzzOptions) -> Program {
    let mut g = Gen {
        rng,
        opts,
        funcs: Vec::new(),
        natives: opts
            .natives
            .iter()
            .map(|(name, params, ret)| Sig {
                name: name.clone(),
                params: params.clone(),
                ret: *ret,
            })
            .collect(),
        current: None,
        scope: Vec::new(),
    };
    let n_funcs = g.rng.random_range(0..=opts.max_functions);
    for i in 0..n_funcs {
        let params = (0..g.rng.random_range(0..=opts.max_params)).map(|_| g.tag()).collect();
        let ret = g.tag();
        g.funcs.push(Sig {
            name: format!("f{i}"),
            params,
            ret,
        });
    }

    let mut decls = Vec::new();
    for i in 0..n_funcs {
        g.current = Some(i);
        g.scope = g.funcs[i]
            .params
            .iter()
            .enumerate()
            .map(|(k, &t)| (format!("p{k}"), t))
            .collect();
        let ret = g.funcs[i].ret;
        let body = g.body(Some(ret));
        decls.push(Stmt::FuncDecl(FuncDecl {
            ret,
            name: g.funcs[i].name.clone(),
            params: g.scope[..g.funcs[i].params.len()]
                .iter()
                .map(|(name, tag)| Param {
                    tag: *tag,
                    name: name.clone(),
                })
                .collect(),
            body,
        }));
    }

    g.current = None;
    g.scope.clear();
    let ret = g.tag();
    let top = g.body(Some(ret));
    // Declarations may sit anywhere among the top-level statements.
    let mut statements = top;
    for d in decls {
        let at = g.rng.random_range(0..=statements.len());
        statements.insert(at, d);
    }
    Program::new(statements)
}

impl<R: Rng> Gen<'_, R> {
    fn tag(&mut self) -> TypeTag {
        if self.rng.random_bool(0.5) {
            TypeTag::Int
        } else {
            TypeTag::Double
        }
    }

    fn fresh_name(&self) -> String {
        format!("v{}", self.scope.len())
    }

    fn body(&mut self, ret: Option<TypeTag>) -> Vec<Stmt> {
        let mut out = Vec::new();
        for _ in 0..self.rng.random_range(0..=self.opts.max_statements) {
            out.extend(self.statement());
        }
        if let Some(tag) = ret {
            if self.rng.random_bool(0.9) {
                let e = self.expr(tag, self.opts.max_expr_depth);
                out.push(Stmt::Return(e));
                if self.rng.random_bool(0.1) {
                    out.extend(self.statement());
                }
            }
        }
        out
    }

    fn statement(&mut self) -> Option<Stmt> {
        if self.rng.random_bool(0.5) {
            let tag = self.tag();
            let init = self.expr(tag, self.opts.max_expr_depth);
            let name = self.fresh_name();
            self.scope.push((name.clone(), tag));
            return Some(Stmt::VarDecl { tag, name, init });
        }
        // Expression statements must start with an identifier.
        let tag = self.tag();
        let depth = self.opts.max_expr_depth;
        let e = if self.rng.random_bool(0.5) {
            self.assignment(tag, depth).or_else(|| self.call(tag, depth))
        } else {
            self.call(tag, depth).or_else(|| self.assignment(tag, depth))
        };
        e.map(Stmt::ExprStmt)
    }

    fn expr(&mut self, tag: TypeTag, depth: usize) -> Expr {
        if depth <= 1 || self.rng.random_bool(0.25) {
            return self.leaf(tag);
        }
        match self.rng.random_range(0..10) {
            0..=5 => self.binary(tag, depth),
            6 => Expr::negate(self.expr(tag, depth - 1)),
            7 | 8 => self.call(tag, depth).unwrap_or_else(|| self.binary(tag, depth)),
            _ => self.assignment(tag, depth).unwrap_or_else(|| self.leaf(tag)),
        }
    }

    fn binary(&mut self, tag: TypeTag, depth: usize) -> Expr {
        let (op, lt, rt) = match tag {
            TypeTag::Int => (*BinOp::ALL.choose(self.rng).expect("ops"), TypeTag::Int, TypeTag::Int),
            TypeTag::Double => {
                let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]
                    .choose(self.rng)
                    .expect("ops");
                let (l, r) = *[
                    (TypeTag::Double, TypeTag::Double),
                    (TypeTag::Double, TypeTag::Int),
                    (TypeTag::Int, TypeTag::Double),
                ]
                .choose(self.rng)
                .expect("pairs");
                (op, l, r)
            }
        };
        let lhs = self.expr(lt, depth - 1);
        let rhs = self.expr(rt, depth - 1);
        Expr::binary(op, lhs, rhs)
    }

    fn leaf(&mut self, tag: TypeTag) -> Expr {
        let vars: Vec<&String> = self
            .scope
            .iter()
            .filter(|(_, t)| t.converts_to(tag))
            .map(|(n, _)| n)
            .collect();
        if !vars.is_empty() && self.rng.random_bool(0.5) {
            return Expr::ident(vars.choose(self.rng).expect("non-empty").as_str());
        }
        match tag {
            TypeTag::Double if self.rng.random_bool(0.8) => Expr::double(self.double_literal()),
            _ => Expr::int(self.int_literal()),
        }
    }

    fn int_literal(&mut self) -> i64 {
        match self.rng.random_range(0..20) {
            0 => i64::MAX,
            // i64::MIN has no literal spelling.
            1 => i64::MIN + 1,
            2 => self.rng.random_range(i64::MIN + 1..=i64::MAX),
            3 => *[0, 1, -1].choose(self.rng).expect("choices"),
            _ => self.rng.random_range(-20..=20),
        }
    }

    fn double_literal(&mut self) -> f64 {
        match self.rng.random_range(0..20) {
            0 => *[0.0, -0.0, 0.5, 1e300, -1e-300, 4503599627370497.5]
                .choose(self.rng)
                .expect("choices"),
            1 => self.rng.random_range(-1e6..1e6),
            _ => (self.rng.random_range(-10_000..=10_000) as f64) / 100.0,
        }
    }

    fn call(&mut self, tag: TypeTag, depth: usize) -> Option<Expr> {
        let any = self.rng.random_bool(self.opts.recursion_prob);
        let limit = match self.current {
            Some(i) if !any => i,
            _ => self.funcs.len(),
        };
        let mut targets: Vec<(bool, usize)> = (0..limit)
            .filter(|&i| self.funcs[i].ret.converts_to(tag))
            .map(|i| (false, i))
            .collect();
        targets.extend(
            (0..self.natives.len())
                .filter(|&i| self.natives[i].ret.converts_to(tag))
                .map(|i| (true, i)),
        );
        let &(native, i) = targets.choose(self.rng)?;
        let sig = if native { &self.natives[i] } else { &self.funcs[i] };
        let (name, params) = (sig.name.clone(), sig.params.clone());
        let args = params.iter().map(|&t| self.expr(t, depth - 1)).collect();
        Some(Expr::call(name, args))
    }

    fn assignment(&mut self, tag: TypeTag, depth: usize) -> Option<Expr> {
        let vars: Vec<(String, TypeTag)> = self.scope.iter().filter(|(_, t)| t.converts_to(tag)).cloned().collect();
        let (name, vt) = vars.choose(self.rng)?.clone();
        let value = self.expr(vt, depth.saturating_sub(1).max(1));
        Some(Expr::assign(name, value))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ast::type_check_with;
    use crate::frontend::{parse_source, pretty_print};

    #[test]
    fn programs_type_check_and_round_trip() {
        let math = NativeRegistry::math();
        let opts = FuzzOptions::default().with_natives(&math);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let p = random_program(&mut rng, &opts);
            let text = pretty_print(&p);
            assert_eq!(parse_source(&text).unwrap(), p, "{text}");
            type_check_with(p, &math).unwrap_or_else(|e| panic!("{e}\n{text}"));
        }
    }

    #[test]
    fn configurations_agree_on_a_sample() {
        let math = NativeRegistry::math();
        let opts = FuzzOptions::default().with_natives(&math);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let p = random_program(&mut rng, &opts);
            let text = pretty_print(&p);
            let typed = type_check_with(p, &math).unwrap();
            differential(&typed, &[], &math).unwrap_or_else(|e| panic!("{e}\n{text}"));
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let opts = FuzzOptions::default();
        let a = random_program(&mut ChaCha8Rng::seed_from_u64(3), &opts);
        let b = random_program(&mut ChaCha8Rng::seed_from_u64(3), &opts);
        assert_eq!(a, b);
    }
}
