//! Circuit IR: flat circuits over {J, CZ/E, CX, Z}, the sliced structure
//! of extended circuits, the extended translation of signal-shifted
//! patterns, and J-block detection/collapse.

use crate::flow::{find_flow, GFlow};
use crate::graph::{Vertex, VertexSet};
use crate::pattern::{dep_form, Angle, MeasurementPattern, PatternError};
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type Wire = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("unknown wire {0}")]
    UnknownWire(Wire),
    #[error("duplicate wire {0}")]
    DuplicateWire(Wire),
    #[error("two-qubit gate on a single wire {0}")]
    SameWire(Wire),
    #[error("pattern is not signal-shifted: {0}")]
    NotShifted(String),
    #[error("pattern and gflow are inconsistent: {0}")]
    Inconsistent(String),
    #[error("open graph has no flow")]
    NoFlow,
    #[error("not a J-block on wires ({0}, {1})")]
    NotJBlock(Wire, Wire),
    #[error("bad circuit JSON: {0}")]
    Json(String),
}

/// Initial state of a wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Input,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    J { wire: Wire, angle: Angle },
    /// Graph-edge CZ of an extended circuit; normalized a < b.
    E { a: Wire, b: Wire },
    /// Correction CZ (control/target distinction is bookkeeping only).
    CZ { control: Wire, target: Wire },
    CX { control: Wire, target: Wire },
    PauliZ { wire: Wire },
}

impl Gate {
    pub fn e(a: Wire, b: Wire) -> Self {
        Gate::E {
            a: a.min(b),
            b: a.max(b),
        }
    }

    /// Wires the gate acts on.
    pub fn wires(&self) -> Vec<Wire> {
        match *self {
            Gate::J { wire, .. } | Gate::PauliZ { wire } => vec![wire],
            Gate::E { a, b } => vec![a, b],
            Gate::CZ { control, target } | Gate::CX { control, target } => {
                vec![control, target]
            }
        }
    }

    pub fn touches(&self, w: Wire) -> bool {
        self.wires().contains(&w)
    }
}

/// A flat circuit. Wires are ordered (they define tensor-product
/// positions); `measured` wires are read out in the Z basis at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    wires: Vec<Wire>,
    initial: BTreeMap<Wire, Init>,
    gates: Vec<Gate>,
    measured: BTreeSet<Wire>,
}

impl Circuit {
    pub fn new(
        wires: Vec<Wire>,
        initial: BTreeMap<Wire, Init>,
        gates: Vec<Gate>,
        measured: BTreeSet<Wire>,
    ) -> Result<Self, CircuitError> {
        let mut seen = BTreeSet::new();
        for &w in &wires {
            if !seen.insert(w) {
                return Err(CircuitError::DuplicateWire(w));
            }
            if !initial.contains_key(&w) {
                return Err(CircuitError::UnknownWire(w));
            }
        }
        for w in initial.keys().chain(measured.iter()) {
            if !seen.contains(w) {
                return Err(CircuitError::UnknownWire(*w));
            }
        }
        for g in &gates {
            let ws = g.wires();
            for &w in &ws {
                if !seen.contains(&w) {
                    return Err(CircuitError::UnknownWire(w));
                }
            }
            if ws.len() == 2 && ws[0] == ws[1] {
                return Err(CircuitError::SameWire(ws[0]));
            }
        }
        Ok(Circuit {
            wires,
            initial,
            gates,
            measured,
        })
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn initial(&self, w: Wire) -> Option<Init> {
        self.initial.get(&w).copied()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measured(&self) -> &BTreeSet<Wire> {
        &self.measured
    }

    /// Output wires (not measured), in wire order.
    pub fn outputs(&self) -> Vec<Wire> {
        self.wires
            .iter()
            .copied()
            .filter(|w| !self.measured.contains(w))
            .collect()
    }

    /// Longest gate chain under wire-sharing precedence.
    pub fn depth(&self) -> usize {
        let mut per_wire: BTreeMap<Wire, usize> = BTreeMap::new();
        let mut depth = 0;
        for g in &self.gates {
            let d = g
                .wires()
                .iter()
                .map(|w| per_wire.get(w).copied().unwrap_or(0))
                .max()
                .unwrap_or(0)
                + 1;
            for w in g.wires() {
                per_wire.insert(w, d);
            }
            depth = depth.max(d);
        }
        depth
    }

    pub fn to_json(&self) -> Value {
        let gates: Vec<Value> = self
            .gates
            .iter()
            .map(|g| match g {
                Gate::J { wire, angle } => {
                    json!({"kind":"J","wire":wire,"angle":angle.to_json()})
                }
                Gate::E { a, b } => json!({"kind":"E","a":a,"b":b}),
                Gate::CZ { control, target } => {
                    json!({"kind":"CZ","control":control,"target":target})
                }
                Gate::CX { control, target } => {
                    json!({"kind":"CX","control":control,"target":target})
                }
                Gate::PauliZ { wire } => json!({"kind":"Z","wire":wire}),
            })
            .collect();
        let initial: BTreeMap<String, &str> = self
            .initial
            .iter()
            .map(|(w, i)| {
                (
                    w.to_string(),
                    match i {
                        Init::Input => "input",
                        Init::Plus => "plus",
                    },
                )
            })
            .collect();
        json!({
            "wires": self.wires,
            "initial": initial,
            "gates": gates,
            "measured": self.measured.iter().collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, CircuitError> {
        let jerr = |m: &str| CircuitError::Json(m.into());
        let wires: Vec<Wire> = v["wires"]
            .as_array()
            .ok_or_else(|| jerr("wires"))?
            .iter()
            .map(|x| x.as_u64().map(|w| w as Wire).ok_or_else(|| jerr("wires")))
            .collect::<Result<_, _>>()?;
        let mut initial = BTreeMap::new();
        match &v["initial"] {
            Value::Null => {
                for &w in &wires {
                    initial.insert(w, Init::Input);
                }
            }
            Value::Object(m) => {
                for &w in &wires {
                    initial.insert(w, Init::Input);
                }
                for (k, val) in m {
                    let w: Wire = k.parse().map_err(|_| jerr("initial key"))?;
                    let i = match val.as_str() {
                        Some("input") => Init::Input,
                        Some("plus") => Init::Plus,
                        _ => return Err(jerr("initial value")),
                    };
                    initial.insert(w, i);
                }
            }
            _ => return Err(jerr("initial")),
        }
        let wire_of = |x: &Value, key: &str| -> Result<Wire, CircuitError> {
            x[key]
                .as_u64()
                .map(|w| w as Wire)
                .ok_or_else(|| CircuitError::Json(format!("gate.{key}")))
        };
        let mut gates = Vec::new();
        for g in v["gates"].as_array().ok_or_else(|| jerr("gates"))? {
            let kind = g["kind"].as_str().ok_or_else(|| jerr("gate.kind"))?;
            gates.push(match kind {
                "J" => Gate::J {
                    wire: wire_of(g, "wire")?,
                    angle: Angle::from_json(&g["angle"])
                        .map_err(|e| CircuitError::Json(e.to_string()))?,
                },
                "E" => Gate::e(wire_of(g, "a")?, wire_of(g, "b")?),
                "CZ" => Gate::CZ {
                    control: wire_of(g, "control")?,
                    target: wire_of(g, "target")?,
                },
                "CX" => Gate::CX {
                    control: wire_of(g, "control")?,
                    target: wire_of(g, "target")?,
                },
                "Z" => Gate::PauliZ {
                    wire: wire_of(g, "wire")?,
                },
                other => return Err(CircuitError::Json(format!("unknown gate kind {other:?}"))),
            });
        }
        let measured: BTreeSet<Wire> = match &v["measured"] {
            Value::Null => BTreeSet::new(),
            Value::Array(xs) => xs
                .iter()
                .map(|x| x.as_u64().map(|w| w as Wire).ok_or_else(|| jerr("measured")))
                .collect::<Result<_, _>>()?,
            _ => return Err(jerr("measured")),
        };
        Circuit::new(wires, initial, gates, measured)
    }
}

/// Convenience builder for plain input circuits over J and CZ gates.
pub struct CircuitBuilder {
    wires: Vec<Wire>,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn on_inputs(wires: impl IntoIterator<Item = Wire>) -> Self {
        CircuitBuilder {
            wires: wires.into_iter().collect(),
            gates: Vec::new(),
        }
    }

    pub fn j(mut self, wire: Wire, angle: Angle) -> Self {
        self.gates.push(Gate::J { wire, angle });
        self
    }

    pub fn cz(mut self, a: Wire, b: Wire) -> Self {
        self.gates.push(Gate::CZ {
            control: a.min(b),
            target: a.max(b),
        });
        self
    }

    pub fn build(self) -> Result<Circuit, CircuitError> {
        let initial = self.wires.iter().map(|&w| (w, Init::Input)).collect();
        Circuit::new(self.wires, initial, self.gates, BTreeSet::new())
    }
}

/// One correction sub-slice c_{n,i}: CX/CZ gates controlled by wire i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubSlice {
    pub control: Wire,
    pub gates: Vec<Gate>,
}

/// One layer of an extended circuit: entanglement slice E_n, J-gate
/// slice J_n, and correction slice C_n split into per-control sub-slices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Slice {
    pub e: Vec<Gate>,
    pub j: Vec<Gate>,
    pub c: Vec<SubSlice>,
}

/// The sliced form of an extended circuit. Flattening the layers in
/// order yields a flat circuit with the same semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlicedCircuit {
    pub wires: Vec<Wire>,
    pub initial: BTreeMap<Wire, Init>,
    pub measured: BTreeSet<Wire>,
    pub layers: Vec<Slice>,
}

impl SlicedCircuit {
    pub fn flatten(&self) -> Circuit {
        let mut gates = Vec::new();
        for layer in &self.layers {
            gates.extend(layer.e.iter().copied());
            gates.extend(layer.j.iter().copied());
            for sub in &layer.c {
                gates.extend(sub.gates.iter().copied());
            }
        }
        Circuit::new(
            self.wires.clone(),
            self.initial.clone(),
            gates,
            self.measured.clone(),
        )
        .expect("sliced circuit flattens to a valid circuit")
    }

    /// Number of nonempty J slices.
    pub fn jlayers(&self) -> usize {
        self.layers.iter().filter(|l| !l.j.is_empty()).count()
    }

    pub fn jgates(&self) -> usize {
        self.layers.iter().map(|l| l.j.len()).sum()
    }

    /// All gates with positions, flattened: (layer, section, gate).
    fn indexed_gates(&self) -> Vec<Gate> {
        self.flatten().gates().to_vec()
    }

    /// GraphViz DOT rendering of the slice structure, for debugging.
    pub fn to_dot(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("digraph extended {\n  rankdir=LR;\n");
        let mut prev: Option<String> = None;
        for (n, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(s, "  subgraph cluster_{n} {{ label=\"layer {}\";", n + 1);
            let mut nodes = Vec::new();
            for (idx, g) in layer
                .e
                .iter()
                .chain(layer.j.iter())
                .chain(layer.c.iter().flat_map(|c| c.gates.iter()))
                .enumerate()
            {
                let id = format!("g{n}_{idx}");
                let _ = writeln!(s, "    {id} [label=\"{g:?}\", shape=box];");
                nodes.push(id);
            }
            if nodes.is_empty() {
                let id = format!("g{n}_empty");
                let _ = writeln!(s, "    {id} [label=\"(empty)\", shape=plaintext];");
                nodes.push(id);
            }
            let _ = writeln!(s, "  }}");
            if let Some(p) = prev {
                let _ = writeln!(s, "  {p} -> {} [style=invis];", nodes[0]);
            }
            prev = Some(nodes.last().expect("nonempty").clone());
        }
        s.push_str("}\n");
        s
    }
}

/// Aggregate circuit metrics. `maxdeg` is the largest number of
/// two-qubit gates incident to any single wire (a circuit-level analogue
/// of graph degree).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitStats {
    pub wires: usize,
    pub jgates: usize,
    pub jlayers: usize,
    pub depth: usize,
    pub maxdeg: usize,
}

pub fn circuit_stats(c: &SlicedCircuit) -> CircuitStats {
    let flat = c.flatten();
    let mut incidence: BTreeMap<Wire, usize> = BTreeMap::new();
    for g in flat.gates() {
        let ws = g.wires();
        if ws.len() == 2 {
            for w in ws {
                *incidence.entry(w).or_default() += 1;
            }
        }
    }
    CircuitStats {
        wires: c.wires.len(),
        jgates: c.jgates(),
        jlayers: c.jlayers(),
        depth: flat.depth(),
        maxdeg: incidence.values().copied().max().unwrap_or(0),
    }
}

/// Translates a signal-shifted pattern into its extended circuit: one
/// wire per vertex, non-inputs prepared |+⟩, all graph CZs in the first
/// entanglement slice, each measurement M_i^θ as J(−θ) on wire i in the
/// J slice of its measurement round followed by its correction sub-slice
/// (CX_{ij} for j ∈ s(i), then CZ_{ik} for k ∈ Odd(s(i)) ∩ O), and all
/// non-outputs Z-measured at the end. Within a correction slice,
/// sub-slices are ordered with later-measured (by ≺_f) controls first.
pub fn extended_translation(
    p: &MeasurementPattern,
    ssf: &GFlow,
) -> Result<SlicedCircuit, CircuitError> {
    let g = &p.space;
    let form = dep_form(p)?;
    for (q, info) in &form.meas {
        if !info.tdep.is_empty() {
            return Err(CircuitError::NotShifted(format!(
                "measurement {q} carries Z-dependencies"
            )));
        }
    }
    let fl = find_flow(g).ok_or(CircuitError::NoFlow)?;
    // Consistency between the pattern's dependencies and the gflow.
    for (&i, si) in &ssf.g {
        if !form.meas.contains_key(&i) {
            return Err(CircuitError::Inconsistent(format!(
                "gflow vertex {i} is not measured in the pattern"
            )));
        }
        for j in si.iter() {
            let dep_holder: Option<&VertexSet> = if g.is_output(j) {
                form.corr_x.get(&j)
            } else {
                form.meas.get(&j).map(|m| &m.sdep)
            };
            if !dep_holder.is_some_and(|d| d.contains(i)) {
                return Err(CircuitError::Inconsistent(format!(
                    "pattern lacks the {i} → {j} X-dependency of the gflow"
                )));
            }
        }
    }
    let rounds = form.rounds();
    let depth = rounds.values().copied().max().unwrap_or(0);
    let wires: Vec<Wire> = g.vertices().to_vec();
    let initial: BTreeMap<Wire, Init> = wires
        .iter()
        .map(|&w| {
            (
                w,
                if g.is_input(w) {
                    Init::Input
                } else {
                    Init::Plus
                },
            )
        })
        .collect();
    let measured: BTreeSet<Wire> = g.non_outputs().iter().collect();
    let mut layers: Vec<Slice> = (0..depth.max(1)).map(|_| Slice::default()).collect();
    let mut edges = form.edges.clone();
    edges.sort_unstable();
    layers[0].e = edges.iter().map(|&(a, b)| Gate::e(a, b)).collect();
    for n in 1..=depth {
        let mut targets: Vec<Vertex> = rounds
            .iter()
            .filter(|&(_, &r)| r == n)
            .map(|(&v, _)| v)
            .collect();
        targets.sort_by_key(|v| (fl.layers.get(v).copied().unwrap_or(0), *v));
        let layer = &mut layers[n - 1];
        for &i in &targets {
            layer.j.push(Gate::J {
                wire: i,
                angle: form.meas[&i].angle.neg(),
            });
            let si = ssf
                .g
                .get(&i)
                .ok_or_else(|| CircuitError::Inconsistent(format!("no correcting set for {i}")))?;
            // Within a sub-slice, corrections are ordered by the flow
            // order of their target (earliest-measured first, outputs
            // last) so that later rewrites can traverse them in turn.
            let mut targets_f: Vec<Vertex> = si.iter().collect();
            targets_f.sort_by_key(|v| (std::cmp::Reverse(fl.layers.get(v).copied().unwrap_or(0)), *v));
            let mut gates: Vec<Gate> = targets_f
                .iter()
                .map(|&j| Gate::CX {
                    control: i,
                    target: j,
                })
                .collect();
            let odd = g
                .odd_neighborhood(si)
                .map_err(|e| CircuitError::Inconsistent(e.to_string()))?;
            for k in odd.iter() {
                if g.is_output(k) {
                    gates.push(Gate::CZ {
                        control: i,
                        target: k,
                    });
                }
            }
            layer.c.push(SubSlice { control: i, gates });
        }
    }
    Ok(SlicedCircuit {
        wires,
        initial,
        measured,
        layers,
    })
}

/// Tests the five J-block conditions on wires (i, f(i)) against the
/// flattened gate sequence.
pub fn is_jblock(c: &SlicedCircuit, i: Wire, fi: Wire) -> bool {
    if c.initial.get(&fi) != Some(&Init::Plus) || !c.measured.contains(&i) {
        return false;
    }
    let gates = c.indexed_gates();
    let pe = match gates.iter().position(|g| *g == Gate::e(i, fi)) {
        Some(p) => p,
        None => return false,
    };
    let pc = match gates.iter().position(
        |g| matches!(g, Gate::CX { control, target } if *control == i && *target == fi),
    ) {
        Some(p) => p,
        None => return false,
    };
    let pj = match gates
        .iter()
        .position(|g| matches!(g, Gate::J { wire, .. } if *wire == i))
    {
        Some(p) => p,
        None => return false,
    };
    if !(pe < pj && pj < pc) {
        return false;
    }
    // The graph CZ is the only gate on f(i) before the correction CX.
    for (idx, g) in gates.iter().enumerate().take(pc) {
        if idx != pe && g.touches(fi) {
            return false;
        }
    }
    // After the graph CZ, wire i sees only its J gate and the CX, and
    // nothing at all after the CX (it is then Z-measured).
    for (idx, g) in gates.iter().enumerate().skip(pe + 1) {
        if idx != pj && idx != pc && g.touches(i) {
            return false;
        }
    }
    true
}

/// Collapses the J-block on (i, f(i)): wire i disappears and the block
/// becomes a single J gate with the same angle on f(i). The measured
/// wire is left in |+⟩, so removing it is exact.
pub fn apply_jgate_identity(
    c: &SlicedCircuit,
    i: Wire,
    fi: Wire,
) -> Result<SlicedCircuit, CircuitError> {
    if !is_jblock(c, i, fi) {
        return Err(CircuitError::NotJBlock(i, fi));
    }
    let mut out = c.clone();
    let target_e = Gate::e(i, fi);
    for layer in &mut out.layers {
        layer.e.retain(|g| *g != target_e);
        for gate in &mut layer.j {
            if let Gate::J { wire, angle } = gate {
                if *wire == i {
                    *gate = Gate::J {
                        wire: fi,
                        angle: *angle,
                    };
                }
            }
        }
        for sub in &mut layer.c {
            sub.gates.retain(|g| {
                !(matches!(g, Gate::CX { control, target } if *control == i && *target == fi)
                    || *g == target_e)
            });
        }
        layer.c.retain(|sub| !(sub.control == i && sub.gates.is_empty()));
    }
    out.wires.retain(|&w| w != i);
    out.initial.remove(&i);
    out.measured.remove(&i);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flow::ssf_from_flow;
    use crate::pattern::{flow_pattern, signal_shift};

    fn two_qubit_extended() -> SlicedCircuit {
        let (g, fl, angles) = fixtures::two_qubit();
        let p = signal_shift(&flow_pattern(&fl, &g, &angles).unwrap(), &fl).unwrap();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        extended_translation(&p, &ssf).unwrap()
    }

    #[test]
    fn two_qubit_extended_structure() {
        let c = two_qubit_extended();
        assert_eq!(c.wires, vec![1, 2]);
        assert_eq!(c.initial[&2], Init::Plus);
        assert_eq!(c.layers.len(), 1);
        assert_eq!(c.layers[0].e, vec![Gate::e(1, 2)]);
        // Pattern measures at −θ, so the J gate carries θ.
        assert_eq!(
            c.layers[0].j,
            vec![Gate::J {
                wire: 1,
                angle: Angle::new(1, 4).unwrap()
            }]
        );
        assert_eq!(
            c.layers[0].c,
            vec![SubSlice {
                control: 1,
                gates: vec![Gate::CX {
                    control: 1,
                    target: 2
                }]
            }]
        );
        assert!(c.measured.contains(&1));
    }

    #[test]
    fn two_qubit_jblock_collapses() {
        let c = two_qubit_extended();
        assert!(is_jblock(&c, 1, 2));
        let collapsed = apply_jgate_identity(&c, 1, 2).unwrap();
        assert_eq!(collapsed.wires, vec![2]);
        let flat = collapsed.flatten();
        assert_eq!(
            flat.gates(),
            &[Gate::J {
                wire: 2,
                angle: Angle::new(1, 4).unwrap()
            }]
        );
        assert!(flat.measured().is_empty());
    }

    #[test]
    fn line_graph_extended_cx_czs_match_gflow() {
        let (g, fl, angles) = fixtures::line_graph7();
        let p = signal_shift(&flow_pattern(&fl, &g, &angles).unwrap(), &fl).unwrap();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        let c = extended_translation(&p, &ssf).unwrap();
        assert_eq!(c.wires.len(), 7);
        let flat = c.flatten();
        // CX_{ij} exists iff j ∈ s(i).
        for (&i, si) in &ssf.g {
            for &j in g.vertices() {
                let present = flat.gates().iter().any(|gate| {
                    matches!(gate, Gate::CX { control, target } if *control == i && *target == j)
                });
                assert_eq!(present, si.contains(j), "CX ({i},{j})");
            }
        }
        // CZ_{ik} exists iff k ∈ Odd(s(i)) ∩ O.
        for (&i, si) in &ssf.g {
            let odd = g.odd_neighborhood(si).unwrap();
            for &k in g.vertices() {
                let present = flat.gates().iter().any(|gate| {
                    matches!(gate, Gate::CZ { control, target } if *control == i && *target == k)
                });
                assert_eq!(present, odd.contains(k) && g.is_output(k), "CZ ({i},{k})");
            }
        }
        // A fresh multi-qubit extended circuit has no J-block yet.
        assert!(!is_jblock(&c, 1, 2));
    }

    #[test]
    fn example1_extended_layers_follow_rounds() {
        let (g, fl, angles) = fixtures::example1();
        let p = signal_shift(&flow_pattern(&fl, &g, &angles).unwrap(), &fl).unwrap();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        let c = extended_translation(&p, &ssf).unwrap();
        assert_eq!(c.layers.len(), 2);
        let j_wires = |n: usize| -> Vec<Wire> {
            c.layers[n]
                .j
                .iter()
                .map(|g| match g {
                    Gate::J { wire, .. } => *wire,
                    _ => unreachable!(),
                })
                .collect()
        };
        // Round 1 = {1,4,7} with later-measured controls first (7, 4, 1);
        // round 2 = {2,5} (5 before 2).
        assert_eq!(j_wires(0), vec![7, 4, 1]);
        assert_eq!(j_wires(1), vec![5, 2]);
        let controls: Vec<Wire> = c.layers[0].c.iter().map(|s| s.control).collect();
        assert_eq!(controls, vec![7, 4, 1]);
        let stats = circuit_stats(&c);
        assert_eq!(stats.wires, 8);
        assert_eq!(stats.jgates, 5);
        assert_eq!(stats.jlayers, 2);
    }

    #[test]
    fn circuit_json_round_trip() {
        let c = two_qubit_extended().flatten();
        let c2 = Circuit::from_json(&c.to_json()).unwrap();
        assert_eq!(c, c2);
        let user = CircuitBuilder::on_inputs([1, 2])
            .j(1, Angle::new(1, 4).unwrap())
            .cz(1, 2)
            .build()
            .unwrap();
        assert_eq!(Circuit::from_json(&user.to_json()).unwrap(), user);
    }

    #[test]
    fn depth_counts_wire_sharing_chains() {
        let c = CircuitBuilder::on_inputs([1, 2, 3])
            .j(1, Angle::zero())
            .j(2, Angle::zero())
            .cz(1, 2)
            .cz(2, 3)
            .build()
            .unwrap();
        assert_eq!(c.depth(), 3);
    }
}
