//! Writes the AST of a program as a Graphviz digraph.
//!
//! ```text
//! cargo run --example dot_export > ast.dot && dot -Tsvg ast.dot -o ast.svg
//! ```

use gpjit::ast::to_dot;
use gpjit::{parse_source, SAMPLE_PROGRAM};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let program = parse_source(SAMPLE_PROGRAM)?;
    let m = program.metrics();
    eprintln!("{} nodes, depth {}", m.size, m.depth);
    print!("{}", to_dot(&program));
    Ok(())
}
