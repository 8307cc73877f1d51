//! Worked example instances used across tests, documentation, and the
//! CLI demos: small open graphs with flow, their measurement angles, and
//! the expected signal-shifted patterns.

use crate::flow::{find_flow, Flow};
use crate::graph::{OpenGraph, Vertex};
use crate::pattern::{Angle, Command, MeasurementPattern};
use std::collections::BTreeMap;

pub type Fixture = (OpenGraph, Flow, BTreeMap<Vertex, Angle>);

/// The two-qubit building block: edge 1–2, I = {1}, O = {2}, measurement
/// at −π/4 (so the implemented unitary is J(π/4)).
pub fn two_qubit() -> Fixture {
    let g = OpenGraph::new([1, 2], [(1, 2)], [1], [2]).unwrap();
    let fl = find_flow(&g).unwrap();
    let angles = BTreeMap::from([(1, Angle::new(-1, 4).unwrap())]);
    (g, fl, angles)
}

/// Seven-vertex path with I = {1} and O = {2, 4, 7}: the line-graph
/// instance whose signal-shifted pattern has corrections X₂^{s₁},
/// X₄^{s₁+s₃}, X₆^{s₁+s₃+s₅}, X₇^{s₆}, Z₇^{s₁+s₃+s₅}.
pub fn line_graph7() -> Fixture {
    let g = OpenGraph::path(1..=7, [1], [2, 4, 7]).unwrap();
    let fl = find_flow(&g).unwrap();
    let angles = [1, 3, 5, 6]
        .into_iter()
        .map(|i| (i, Angle::new(i as i64, 8).unwrap()))
        .collect();
    (g, fl, angles)
}

/// The published signal-shifted pattern of `line_graph7`, written with
/// its explicit correction commands (the X on measured qubit 6 appears
/// as a command rather than a measurement dependency).
pub fn line_graph7_shifted() -> MeasurementPattern {
    let (g, _, angles) = line_graph7();
    let commands = vec![
        Command::Prepare(2),
        Command::Prepare(3),
        Command::Prepare(4),
        Command::Prepare(5),
        Command::Prepare(6),
        Command::Prepare(7),
        Command::entangle(1, 2),
        Command::entangle(2, 3),
        Command::entangle(3, 4),
        Command::entangle(4, 5),
        Command::entangle(5, 6),
        Command::entangle(6, 7),
        Command::measure(1, angles[&1]),
        Command::measure(3, angles[&3]),
        Command::measure(5, angles[&5]),
        Command::corr_x(6, [1, 3, 5]),
        Command::measure(6, angles[&6]),
        Command::corr_x(2, [1]),
        Command::corr_x(4, [1, 3]),
        Command::corr_x(7, [6]),
        Command::corr_z(7, [1, 3, 5]),
    ];
    MeasurementPattern::new(g, commands).unwrap()
}

/// Seven-vertex path with I = {1}, O = {7}: total flow order, f(i) = i+1.
pub fn full_path7() -> Fixture {
    let g = OpenGraph::path(1..=7, [1], [7]).unwrap();
    let fl = find_flow(&g).unwrap();
    let angles = (1..=6)
        .map(|i| (i, Angle::new(i as i64, 16).unwrap()))
        .collect();
    (g, fl, angles)
}

/// The eight-vertex worked example: I = {1, 4, 7}, O = {3, 6, 8},
/// flow order 1 ≺ 4 ≺ 2 ≺ 5 ≺ 7 (depth 5), signal-shifted rounds
/// {1, 4, 7} then {2, 5} (depth 2), compact form on 3 wires.
pub fn example1() -> Fixture {
    let g = OpenGraph::new(
        1..=8,
        [
            (1, 2),
            (2, 3),
            (2, 4),
            (2, 5),
            (3, 5),
            (3, 7),
            (4, 5),
            (5, 6),
            (5, 7),
            (6, 7),
            (7, 8),
        ],
        [1, 4, 7],
        [3, 6, 8],
    )
    .unwrap();
    let fl = find_flow(&g).unwrap();
    let angles = [1, 2, 4, 5, 7]
        .into_iter()
        .map(|i| (i, Angle::new(1, i as i64 + 2).unwrap()))
        .collect();
    (g, fl, angles)
}

/// The published signal-shifted pattern of `example1`.
pub fn example1_shifted() -> MeasurementPattern {
    let (g, _, angles) = example1();
    let mut commands = vec![
        Command::Prepare(2),
        Command::Prepare(3),
        Command::Prepare(5),
        Command::Prepare(6),
        Command::Prepare(8),
    ];
    let mut edges = g.edges().to_vec();
    edges.sort_unstable();
    for (a, b) in edges {
        commands.push(Command::entangle(a, b));
    }
    commands.extend([
        Command::measure(1, angles[&1]),
        Command::measure(4, angles[&4]),
        Command::measure(7, angles[&7]),
        Command::measure_deps(2, angles[&2], [1], []),
        Command::measure_deps(5, angles[&5], [1, 4], []),
        Command::corr_x(3, [1, 2, 4]),
        Command::corr_z(3, [4]),
        Command::corr_x(6, [2, 4, 5]),
        Command::corr_z(6, [1, 4]),
        Command::corr_x(8, [4, 5, 7]),
    ]);
    MeasurementPattern::new(g, commands).unwrap()
}

/// The Pauli-measurement example: six vertices, I = {1, 4}, O = {3, 6},
/// two free angles (qubits 1 and 4) and two Pauli angles (π/2 on qubit 2,
/// 0 on qubit 5).
pub fn pauli_example() -> Fixture {
    let g = OpenGraph::new(
        1..=6,
        [(1, 2), (2, 3), (2, 4), (2, 5), (4, 5), (5, 6)],
        [1, 4],
        [3, 6],
    )
    .unwrap();
    let fl = find_flow(&g).unwrap();
    let angles = BTreeMap::from([
        (1, Angle::new(1, 5).unwrap()),
        (2, Angle::half_pi()),
        (4, Angle::new(1, 7).unwrap()),
        (5, Angle::zero()),
    ]);
    (g, fl, angles)
}
