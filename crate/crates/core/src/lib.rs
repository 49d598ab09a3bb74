//! Genetic programming over a small typed language, with three ways to run an
//! evolved program: walking the tree, interpreting an SSA IR, or compiling
//! that IR to native code. A benchmark harness compares all of them.

pub mod ast;
pub mod bench;
pub mod cli;
pub mod direct;
pub mod exec;
pub mod frontend;
pub mod gp;
pub mod ir;

pub use ast::{type_check, type_check_with, Program, TypeTag, TypedProgram};
pub use exec::{make_executor, ExecConfig, ExecError, Executor, NativeRegistry, Value};
pub use frontend::{parse_source, pretty_print, SAMPLE_PROGRAM};
