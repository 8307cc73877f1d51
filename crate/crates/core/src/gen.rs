//! Seeded random generators for small circuits and flow graphs.
//!
//! The randomized test suites and the CLI `verify` command draw their
//! instances from here so that every run is reproducible from a single
//! seed. Circuits are built over the J/CZ gate set on a handful of
//! wires; flow graphs are obtained by translating such circuits into
//! patterns, which guarantees a causal flow with equally many inputs
//! and outputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, CircuitBuilder};
use crate::flow::{find_flow, Flow};
use crate::graph::OpenGraph;
use crate::pattern::{pattern_from_circuit, Angle};

/// The deterministic generator used throughout the test suites.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random measurement angle: a rational multiple of π with a small
/// denominator, avoiding the Pauli angles 0, ±π/2 and π so that the
/// generated patterns never qualify for Pauli simplification.
pub fn random_angle(rng: &mut impl Rng) -> Angle {
    loop {
        let den = rng.gen_range(1..=8i64);
        let num = rng.gen_range(-den..=den);
        let a = Angle::new(num, den).expect("nonzero denominator");
        if !a.is_zero_mod_pi() && !a.is_half_pi_mod_pi() {
            return a;
        }
    }
}

/// A random circuit on input wires `1..=wires` with exactly `jgates` J
/// gates and (for two or more wires) `czgates` CZ gates, randomly
/// interleaved.
pub fn random_circuit(
    rng: &mut impl Rng,
    wires: usize,
    jgates: usize,
    czgates: usize,
) -> Circuit {
    let czgates = if wires >= 2 { czgates } else { 0 };
    let mut ops: Vec<bool> = Vec::with_capacity(jgates + czgates);
    ops.extend(std::iter::repeat(true).take(jgates));
    ops.extend(std::iter::repeat(false).take(czgates));
    // Fisher-Yates shuffle of the op sequence.
    for i in (1..ops.len()).rev() {
        ops.swap(i, rng.gen_range(0..=i));
    }
    let mut b = CircuitBuilder::on_inputs(1..=wires);
    for is_j in ops {
        if is_j {
            let w = rng.gen_range(1..=wires);
            b = b.j(w, random_angle(rng));
        } else {
            let a = rng.gen_range(1..=wires);
            let c = loop {
                let c = rng.gen_range(1..=wires);
                if c != a {
                    break c;
                }
            };
            b = b.cz(a, c);
        }
    }
    b.build().expect("builder circuits are valid")
}

/// A random open graph with causal flow and |I| = |O|, together with
/// that flow, obtained by translating a random circuit on at most
/// `max_wires` wires into a pattern. The graph has at most `max_verts`
/// vertices (one per input wire plus one per J gate).
pub fn random_flow_graph(
    rng: &mut impl Rng,
    max_wires: usize,
    max_verts: usize,
) -> (OpenGraph, Flow) {
    loop {
        let w = rng.gen_range(1..=max_wires);
        let j = rng.gen_range(0..=max_verts.saturating_sub(w));
        let cz = rng.gen_range(0..=4);
        let c = random_circuit(rng, w, j, cz);
        let p = pattern_from_circuit(&c).expect("builder circuits translate");
        let g = p.space.clone();
        if let Some(fl) = find_flow(&g) {
            return (g, fl);
        }
    }
}
