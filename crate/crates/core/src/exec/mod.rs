//! Execution contracts shared by every configuration: runtime values, the
//! five benchmark configurations, the native registry and the executor factory.

mod native;

use std::fmt;
use std::str::FromStr;

pub use native::{NativeEntry, NativeFn, NativeRegistry, RegistryError};

use crate::ast::{TypeTag, TypedProgram};
use crate::direct::DirectExecutor;
use crate::ir::{self, EngineKind, PassSelection};

/// Maximum number of simultaneously active frames of recursive functions.
pub const RECURSION_LIMIT: u64 = 10_000;

/// A runtime scalar.
#[derive(Debug, Clone, Copy)]
pub enum Value {
    Int(i64),
    Double(f64),
}

impl Value {
    pub fn tag(self) -> TypeTag {
        match self {
            Value::Int(_) => TypeTag::Int,
            Value::Double(_) => TypeTag::Double,
        }
    }

    /// Numeric value as a double (Int is converted).
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(i) => i as f64,
            Value::Double(d) => d,
        }
    }

    /// Integer value; doubles are truncated toward zero (saturating).
    pub fn as_i64(self) -> i64 {
        match self {
            Value::Int(i) => i,
            Value::Double(d) => d as i64,
        }
    }

    /// Converts to `tag`, allowing only the implicit Int→Double promotion.
    pub fn coerce(self, tag: TypeTag) -> Option<Value> {
        match (self, tag) {
            (Value::Int(i), TypeTag::Double) => Some(Value::Double(i as f64)),
            (v, t) if v.tag() == t => Some(v),
            _ => None,
        }
    }

    pub fn zero(tag: TypeTag) -> Value {
        match tag {
            TypeTag::Int => Value::Int(0),
            TypeTag::Double => Value::Double(0.0),
        }
    }

    /// Raw 64-bit pattern, the representation used by the IR backends.
    pub fn to_bits(self) -> u64 {
        match self {
            Value::Int(i) => i as u64,
            Value::Double(d) => d.to_bits(),
        }
    }

    pub fn from_bits(bits: u64, tag: TypeTag) -> Value {
        match tag {
            TypeTag::Int => Value::Int(bits as i64),
            TypeTag::Double => Value::Double(f64::from_bits(bits)),
        }
    }

    /// Same tag and same bits, except that any two NaNs are considered equal.
    pub fn identical(self, other: Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Double(a), Value::Double(b)) => (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits(),
            _ => false,
        }
    }

    /// Equal tags and, for doubles, `|a - b| <= rel_tol * max(|a|, |b|)`.
    /// Ints are compared exactly; NaN agrees with NaN and infinities must match.
    pub fn agrees_with(self, other: Value, rel_tol: f64) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Double(a), Value::Double(b)) => {
                if a.is_nan() || b.is_nan() {
                    a.is_nan() && b.is_nan()
                } else if a.is_infinite() || b.is_infinite() {
                    a == b
                } else {
                    (a - b).abs() <= rel_tol * a.abs().max(b.abs())
                }
            }
            _ => false,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        self.identical(*other)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "int:{i}"),
            Value::Double(d) => write!(f, "double:{d:?}"),
        }
    }
}

/// The engine a configuration executes on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Direct,
    Ir(EngineKind),
}

/// One of the five measured configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExecConfig {
    Alg,
    Int,
    IntOpt,
    Jit,
    JitOpt,
}

impl ExecConfig {
    /// All configurations in report row order.
    pub const ALL: [ExecConfig; 5] = [
        ExecConfig::Alg,
        ExecConfig::Int,
        ExecConfig::IntOpt,
        ExecConfig::Jit,
        ExecConfig::JitOpt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExecConfig::Alg => "ALG",
            ExecConfig::Int => "INT",
            ExecConfig::IntOpt => "INT-OPT",
            ExecConfig::Jit => "JIT",
            ExecConfig::JitOpt => "JIT-OPT",
        }
    }

    pub fn engine(self) -> Engine {
        match self {
            ExecConfig::Alg => Engine::Direct,
            ExecConfig::Int | ExecConfig::IntOpt => Engine::Ir(EngineKind::Interpreter),
            ExecConfig::Jit | ExecConfig::JitOpt => Engine::Ir(EngineKind::Jit),
        }
    }

    pub fn optimize(self) -> bool {
        matches!(self, ExecConfig::IntOpt | ExecConfig::JitOpt)
    }

    pub fn passes(self) -> PassSelection {
        if self.optimize() {
            PassSelection::all()
        } else {
            PassSelection::none()
        }
    }

    /// Builds a configuration from an engine name and an optimization flag.
    /// The direct engine has no optimized variant.
    pub fn from_engine(engine: &str, optimize: bool) -> Option<ExecConfig> {
        match (engine.to_ascii_lowercase().as_str(), optimize) {
            ("direct" | "alg", false) => Some(ExecConfig::Alg),
            ("int" | "interpreter", false) => Some(ExecConfig::Int),
            ("int" | "interpreter", true) => Some(ExecConfig::IntOpt),
            ("jit", false) => Some(ExecConfig::Jit),
            ("jit", true) => Some(ExecConfig::JitOpt),
            _ => None,
        }
    }
}

impl fmt::Display for ExecConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExecConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExecConfig::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown configuration `{s}` (expected ALG, INT, INT-OPT, JIT or JIT-OPT)"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("expected {expected} input(s), got {found}")]
    InputArity { expected: usize, found: usize },
    #[error("input {index} has type {found}, expected {expected}")]
    InputType {
        index: usize,
        expected: TypeTag,
        found: TypeTag,
    },
    #[error("recursion limit of {RECURSION_LIMIT} frames exceeded")]
    RecursionLimit,
    #[error("code generation failed: {0}")]
    Codegen(String),
    #[error("IR verification failed: {0}")]
    Verify(#[from] ir::VerifyError),
    #[error("optimization failed: {0}")]
    Optimize(String),
    #[error("unresolved symbol `{0}`")]
    UnresolvedSymbol(String),
    #[error("engine unavailable: {0}")]
    EngineUnavailable(String),
    #[error("backend error: {0}")]
    Backend(String),
}

/// A prepared program that can be run any number of times.
pub trait Executor {
    fn config(&self) -> ExecConfig;

    /// Runs `gp_main(inputs)` if the program defines it, otherwise the implicit
    /// entry (which takes no inputs).
    fn run(&mut self, inputs: &[Value]) -> Result<Value, ExecError>;
}

/// Performs all preparation for `config` (translation, optimization and
/// native-code generation where applicable) and returns a ready executor.
pub fn make_executor<'a>(
    config: ExecConfig,
    program: &'a TypedProgram,
    registry: &NativeRegistry,
) -> Result<Box<dyn Executor + 'a>, ExecError> {
    match config.engine() {
        Engine::Direct => Ok(Box::new(DirectExecutor::new(program, registry))),
        Engine::Ir(kind) => {
            let mut module = ir::codegen_program(program, registry)?;
            if config.optimize() {
                module = ir::optimize(module, &config.passes())?;
            }
            let engine = ir::make_engine(module, kind, registry)?;
            Ok(Box::new(IrExecutor { config, engine }))
        }
    }
}

struct IrExecutor {
    config: ExecConfig,
    engine: ir::ExecEngine,
}

impl Executor for IrExecutor {
    fn config(&self) -> ExecConfig {
        self.config
    }

    fn run(&mut self, inputs: &[Value]) -> Result<Value, ExecError> {
        self.engine.run_entry(inputs)
    }
}

/// Checks `inputs` against a parameter list and applies Int→Double promotion.
pub(crate) fn coerce_inputs(params: &[TypeTag], inputs: &[Value]) -> Result<Vec<Value>, ExecError> {
    if params.len() != inputs.len() {
        return Err(ExecError::InputArity {
            expected: params.len(),
            found: inputs.len(),
        });
    }
    params
        .iter()
        .zip(inputs)
        .enumerate()
        .map(|(index, (&want, v))| {
            v.coerce(want).ok_or(ExecError::InputType {
                index,
                expected: want,
                found: v.tag(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_names_round_trip() {
        for c in ExecConfig::ALL {
            assert_eq!(c.name().parse::<ExecConfig>().unwrap(), c);
        }
        assert!("ALG-OPT".parse::<ExecConfig>().is_err());
    }

    #[test]
    fn derived_fields() {
        assert_eq!(ExecConfig::Alg.engine(), Engine::Direct);
        assert_eq!(ExecConfig::IntOpt.engine(), Engine::Ir(EngineKind::Interpreter));
        assert_eq!(ExecConfig::JitOpt.engine(), Engine::Ir(EngineKind::Jit));
        let optimized: Vec<bool> = ExecConfig::ALL.iter().map(|c| c.optimize()).collect();
        assert_eq!(optimized, [false, false, true, false, true]);
        assert!(ExecConfig::JitOpt.passes().enabled().count() == 5);
        assert!(ExecConfig::Jit.passes().is_empty());
        assert_eq!(ExecConfig::from_engine("direct", true), None);
    }

    #[test]
    fn value_comparisons() {
        assert!(Value::Double(f64::NAN).identical(Value::Double(-f64::NAN)));
        assert!(!Value::Double(0.0).identical(Value::Double(-0.0)));
        assert!(Value::Double(1.0).agrees_with(Value::Double(1.0 + 1e-12), 1e-9));
        assert!(!Value::Int(1).agrees_with(Value::Double(1.0), 1e-9));
        assert_eq!(Value::Int(383).to_string(), "int:383");
        assert_eq!(Value::Double(4.0).to_string(), "double:4.0");
    }

    #[test]
    fn input_coercion() {
        let ok = coerce_inputs(&[TypeTag::Double], &[Value::Int(3)]).unwrap();
        assert_eq!(ok, vec![Value::Double(3.0)]);
        assert!(matches!(
            coerce_inputs(&[TypeTag::Int], &[Value::Double(3.0)]),
            Err(ExecError::InputType { .. })
        ));
        assert!(matches!(
            coerce_inputs(&[], &[Value::Int(1)]),
            Err(ExecError::InputArity { expected: 0, found: 1 })
        ));
    }
}
