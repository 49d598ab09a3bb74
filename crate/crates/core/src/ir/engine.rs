//! Engine selection and the shared entry-point convention.

use std::sync::Arc;

use super::codegen::{ir_type, tag_of, ENTRY_NAME};
use super::interp::Interpreter;
use super::jit::JitEngine;
use super::{Module, Type};
use crate::ast::{TypeTag, GP_MAIN};
use crate::exec::{coerce_inputs, ExecError, NativeEntry, NativeRegistry, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Interpreter,
    Jit,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Interpreter => "interpreter",
            EngineKind::Jit => "jit",
        }
    }
}

/// A module prepared for repeated execution.
pub struct ExecEngine {
    kind: EngineKind,
    /// Index of the function `run_entry` calls.
    target: usize,
    params: Vec<TypeTag>,
    ret: TypeTag,
    backend: Backend,
}

enum Backend {
    Interp(Interpreter),
    Jit(Box<JitEngine>),
}

/// Resolves every extern through `registry` and prepares `module` for `kind`.
/// For the JIT all native code is generated here.
pub fn make_engine(module: Module, kind: EngineKind, registry: &NativeRegistry) -> Result<ExecEngine, ExecError> {
    let natives = resolve_externs(&module, registry)?;
    let target = module
        .function_index(GP_MAIN)
        .or_else(|| module.function_index(ENTRY_NAME))
        .ok_or_else(|| ExecError::Codegen(format!("module has no `{ENTRY_NAME}` function")))?;
    let f = &module.functions[target];
    let params = f.param_types().into_iter().map(tag_of).collect();
    let ret = tag_of(f.ret);
    let backend = match kind {
        EngineKind::Interpreter => Backend::Interp(Interpreter::new(module, natives)),
        EngineKind::Jit => Backend::Jit(Box::new(JitEngine::new(&module, natives, target)?)),
    };
    Ok(ExecEngine {
        kind,
        target,
        params,
        ret,
        backend,
    })
}

fn resolve_externs(module: &Module, registry: &NativeRegistry) -> Result<Vec<Arc<NativeEntry>>, ExecError> {
    module
        .externs
        .iter()
        .map(|e| {
            let entry = registry
                .get(&e.name)
                .ok_or_else(|| ExecError::UnresolvedSymbol(e.name.clone()))?;
            let params: Vec<Type> = entry.params().iter().map(|&t| ir_type(t)).collect();
            if params != e.params || ir_type(entry.ret()) != e.ret {
                return Err(ExecError::Backend(format!(
                    "native `{}` does not match its extern declaration",
                    e.name
                )));
            }
            Ok(Arc::clone(entry))
        })
        .collect()
}

impl ExecEngine {
    pub fn kind(&self) -> EngineKind {
        self.kind
    }

    /// Runs `gp_main(inputs)` when the module defines it, else the implicit entry.
    pub fn run_entry(&mut self, inputs: &[Value]) -> Result<Value, ExecError> {
        let args = coerce_inputs(&self.params, inputs)?;
        let bits: Vec<u64> = args.iter().map(|v| v.to_bits()).collect();
        let out = match &mut self.backend {
            Backend::Interp(i) => i.call(self.target, &bits)?,
            Backend::Jit(j) => j.invoke(&bits)?,
        };
        Ok(Value::from_bits(out, self.ret))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::type_check_with;
    use crate::frontend::{parse_source, SAMPLE_PROGRAM};
    use crate::ir::{codegen_program, optimize, PassSelection};

    fn engine(src: &str, kind: EngineKind, opt: bool, registry: &NativeRegistry) -> Result<ExecEngine, ExecError> {
        let typed = type_check_with(parse_source(src).unwrap(), registry).unwrap();
        let mut m = codegen_program(&typed, registry)?;
        if opt {
            m = optimize(m, &PassSelection::all())?;
        }
        make_engine(m, kind, registry)
    }

    #[test]
    fn sample_program_on_both_engines() {
        for kind in [EngineKind::Interpreter, EngineKind::Jit] {
            for opt in [false, true] {
                let mut e = engine(SAMPLE_PROGRAM, kind, opt, &NativeRegistry::new()).unwrap();
                assert_eq!(e.run_entry(&[]).unwrap(), Value::Int(383));
                assert_eq!(e.run_entry(&[]).unwrap(), Value::Int(383));
            }
        }
    }

    #[test]
    fn missing_native_is_unresolved() {
        let math = NativeRegistry::math();
        let typed = type_check_with(parse_source("return sqrt_d(16.0)").unwrap(), &math).unwrap();
        let m = codegen_program(&typed, &math).unwrap();
        for kind in [EngineKind::Interpreter, EngineKind::Jit] {
            let err = make_engine(m.clone(), kind, &NativeRegistry::new()).err().unwrap();
            assert_eq!(err, ExecError::UnresolvedSymbol("sqrt_d".into()));
        }
        let mut e = make_engine(m, EngineKind::Jit, &math).unwrap();
        assert_eq!(e.run_entry(&[]).unwrap(), Value::Double(4.0));
    }

    #[test]
    fn gp_main_identity_and_arity() {
        let src = "double gp_main(double x) { return x + 0.0 }";
        for kind in [EngineKind::Interpreter, EngineKind::Jit] {
            let mut e = engine(src, kind, false, &NativeRegistry::new()).unwrap();
            assert_eq!(e.run_entry(&[Value::Double(2.5)]).unwrap(), Value::Double(2.5));
            assert_eq!(e.run_entry(&[Value::Int(2)]).unwrap(), Value::Double(2.0));
            let mut plain = engine("return 1", kind, false, &NativeRegistry::new()).unwrap();
            assert!(matches!(
                plain.run_entry(&[Value::Int(1)]),
                Err(ExecError::InputArity { expected: 0, found: 1 })
            ));
        }
    }

    #[test]
    fn recursion_limit_on_both_engines() {
        let src = "int down(int n) { return down(n + 1) }\nreturn down(0)";
        let counted = "int f(int n) { int r = 0\nr = n\nreturn r }\n\
                       int g(int n) { return h(n - 1) }\nint h(int n) { return n }\nreturn g(5)";
        for kind in [EngineKind::Interpreter, EngineKind::Jit] {
            for opt in [false, true] {
                let mut e = engine(src, kind, opt, &NativeRegistry::new()).unwrap();
                assert_eq!(e.run_entry(&[]), Err(ExecError::RecursionLimit));
                // The engine stays usable after an unwind.
                assert_eq!(e.run_entry(&[]), Err(ExecError::RecursionLimit));
                let mut ok = engine(counted, kind, opt, &NativeRegistry::new()).unwrap();
                assert_eq!(ok.run_entry(&[]).unwrap(), Value::Int(4));
            }
        }
    }
}
