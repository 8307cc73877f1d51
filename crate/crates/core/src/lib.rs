//! Optimizer for measurement-based quantum computing (MBQC) patterns.
//!
//! Pipeline: a small circuit is translated into a measurement pattern,
//! standardized, signal-shifted into its maximally parallel form, extended
//! back into a sliced circuit, and compactified into an ancilla-free
//! circuit on the input wires. A brute-force statevector simulator checks
//! every transformation for semantic equivalence.

pub mod circuit;
pub mod compactify;
pub mod fixtures;
pub mod flow;
pub mod gen;
pub mod graph;
pub mod pattern;
pub mod sim;
