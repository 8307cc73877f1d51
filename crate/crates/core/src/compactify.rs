//! Compact translation: rewriting an extended circuit into an
//! ancilla-free circuit on its output wires.
//!
//! The extended circuit of a signal-shifted pattern interleaves an
//! entangling slice, per-round J slices, and correction sub-slices
//! (CX fans with control on the measured wire, plus CZ corrections on
//! output wires). Three rewrite procedures move entangling gates out of
//! each correction sub-slice, cancelling the corrections they generate
//! on the way:
//!
//!   * `rp1`  — the neighbour is an output or measured in a later round:
//!     the entangling gates are pushed past the sub-slice, and every CZ
//!     they create pairs up with another created or pre-existing one.
//!   * `rp2`/`rp3` — the neighbour was measured in this round or
//!     earlier: its entangling gates are consumed against its flow edge,
//!     each leaving a stand-in CX behind; pushing the stand-in through
//!     the sub-slice creates CXs that again cancel in pairs (`rp2` uses
//!     the pre-existing correction onto the neighbour's successor,
//!     `rp3` needs none). When the entangling gate was already consumed
//!     at an earlier sub-slice its surviving stand-in is reused.
//!
//! Afterwards every non-flow CX whose target wire has not been acted on
//! yet is deleted (it fixes the |+⟩ there; explicit Zs it may cross
//! leave a Z on its control, discharged to the end of the circuit), and
//! each measured wire collapses onto its flow successor through the
//! J-gate identity, leaving a flat circuit on the output wires with the
//! same semantics as the pattern. Non-flow CXs over wires already in
//! use are kept and relabel onto the output wires during the collapses.
//!
//! Every step is an exact circuit identity except for dropping Z gates
//! at the end of measured wires, which cannot affect their Z-basis
//! measurement.

use crate::circuit::{Circuit, CircuitError, Gate, Init, SlicedCircuit, Wire};
use crate::flow::{Flow, GFlow};
use crate::graph::VertexSet;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CompactifyError {
    #[error("rewrite aborted at target {target}, neighbour {neighbour}")]
    Abort { target: Wire, neighbour: Wire },
    #[error("measured wire {0} has no J gate (Pauli-simplified input)")]
    PauliSimplified(Wire),
    #[error("wire {0} has no flow successor")]
    NoFlow(Wire),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Which rewrite procedure an invocation used. The `b` variant of the
/// first procedure picks up an entangling gate already parked inside
/// the sub-slice; the relaxed variants reuse a stand-in CX left behind
/// by an earlier consumption instead of consuming an entangling gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RPKind {
    RP1,
    RP1b,
    RP2,
    RP2Relaxed,
    RP3,
    RP3Relaxed,
}

impl RPKind {
    pub fn name(self) -> &'static str {
        match self {
            RPKind::RP1 => "rp1",
            RPKind::RP1b => "rp1b",
            RPKind::RP2 => "rp2",
            RPKind::RP2Relaxed => "rp2-relaxed",
            RPKind::RP3 => "rp3",
            RPKind::RP3Relaxed => "rp3-relaxed",
        }
    }
}

/// Record of one rewrite-procedure application at (target, neighbour).
#[derive(Debug, Clone)]
pub struct RPInvocation {
    pub kind: RPKind,
    pub target: Wire,
    pub neighbour: Wire,
    /// Entangling gates pushed past the sub-slice (first procedure).
    pub moved: Vec<(Wire, Wire)>,
    /// Entangling gates consumed against the neighbour's flow edge.
    pub consumed: Vec<(Wire, Wire)>,
    /// Stand-in CXs reused from earlier consumptions.
    pub reused: Vec<(Wire, Wire)>,
    pub created_cz: usize,
    pub cancelled_cz: usize,
    pub created_cx: usize,
    pub cancelled_cx: usize,
}

impl RPInvocation {
    fn new(kind: RPKind, target: Wire, neighbour: Wire) -> Self {
        RPInvocation {
            kind,
            target,
            neighbour,
            moved: Vec::new(),
            consumed: Vec::new(),
            reused: Vec::new(),
            created_cz: 0,
            cancelled_cz: 0,
            created_cx: 0,
            cancelled_cx: 0,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind.name(),
            "target": self.target,
            "neighbour": self.neighbour,
            "moved": self.moved,
            "consumed": self.consumed,
            "reused": self.reused,
            "created_cz": self.created_cz,
            "cancelled_cz": self.cancelled_cz,
            "created_cx": self.created_cx,
            "cancelled_cx": self.cancelled_cx,
        })
    }
}

/// Full record of a compact translation, suitable for `--emit-trace`.
#[derive(Debug, Clone, Default)]
pub struct CompactifyTrace {
    pub invocations: Vec<RPInvocation>,
    /// Non-flow CXs deleted once their targets were back in |+⟩.
    pub removed_cx: Vec<(Wire, Wire)>,
    /// J-gate identity applications (wire, flow successor), in order.
    pub collapsed: Vec<(Wire, Wire)>,
}

impl CompactifyTrace {
    pub fn to_json(&self) -> Value {
        json!({
            "invocations": self.invocations.iter().map(|i| i.to_json()).collect::<Vec<_>>(),
            "removed_cx": self.removed_cx,
            "collapsed": self.collapsed,
        })
    }
}

fn diagonal(g: &Gate) -> bool {
    matches!(g, Gate::E { .. } | Gate::CZ { .. } | Gate::PauliZ { .. })
}

/// Exact commutation test used when gates are pushed through the
/// circuit: disjoint gates commute, diagonal gates commute among
/// themselves, a CX commutes with a diagonal gate avoiding its target,
/// and two CXs commute unless one's control is the other's target.
pub fn commutes(a: &Gate, b: &Gate) -> bool {
    let wa = a.wires();
    if wa.iter().all(|&w| !b.touches(w)) {
        return true;
    }
    if diagonal(a) && diagonal(b) {
        return true;
    }
    match (a, b) {
        (
            Gate::CX {
                control: c1,
                target: t1,
            },
            Gate::CX {
                control: c2,
                target: t2,
            },
        ) => t1 != c2 && t2 != c1,
        (Gate::CX { target, .. }, d) if diagonal(d) => !d.touches(*target),
        (d, Gate::CX { target, .. }) if diagonal(d) => !d.touches(*target),
        _ => false,
    }
}

fn pair(a: Wire, b: Wire) -> (Wire, Wire) {
    (a.min(b), a.max(b))
}

/// In-progress compact translation: the flattened extended circuit plus
/// the flow data steering the rewrites.
#[derive(Debug, Clone)]
pub struct CompactState {
    gates: Vec<Gate>,
    wires: Vec<Wire>,
    initial: BTreeMap<Wire, Init>,
    measured: BTreeSet<Wire>,
    f: BTreeMap<Wire, Wire>,
    s: BTreeMap<Wire, VertexSet>,
    nbrs: BTreeMap<Wire, VertexSet>,
    /// Round (slice index) of each wire's J gate.
    jlayer: BTreeMap<Wire, usize>,
    /// Flow layer of each wire (outputs 0, earliest-measured largest).
    fkey: BTreeMap<Wire, usize>,
    rounds: usize,
    trace: CompactifyTrace,
}

impl CompactState {
    pub fn new(ext: &SlicedCircuit, fl: &Flow, ssf: &GFlow) -> Result<Self, CompactifyError> {
        let flat = ext.flatten();
        let mut jlayer = BTreeMap::new();
        for (n, layer) in ext.layers.iter().enumerate() {
            for g in &layer.j {
                if let Gate::J { wire, .. } = g {
                    jlayer.insert(*wire, n);
                }
            }
        }
        let mut nbrs: BTreeMap<Wire, VertexSet> = BTreeMap::new();
        for layer in &ext.layers {
            for g in &layer.e {
                if let Gate::E { a, b } = g {
                    nbrs.entry(*a).or_default().insert(*b);
                    nbrs.entry(*b).or_default().insert(*a);
                }
            }
        }
        Ok(CompactState {
            gates: flat.gates().to_vec(),
            wires: ext.wires.clone(),
            initial: ext.initial.clone(),
            measured: ext.measured.clone(),
            f: fl.f.clone(),
            s: ssf.g.clone(),
            nbrs,
            jlayer,
            fkey: fl.layers.clone(),
            rounds: ext.layers.len(),
            trace: CompactifyTrace::default(),
        })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn trace(&self) -> &CompactifyTrace {
        &self.trace
    }

    /// Measured wires whose J gate is absent (Pauli-simplified input).
    pub fn missing_j(&self) -> Vec<Wire> {
        self.measured
            .iter()
            .copied()
            .filter(|w| !self.jlayer.contains_key(w))
            .collect()
    }

    fn fkey(&self, w: Wire) -> usize {
        self.fkey.get(&w).copied().unwrap_or(0)
    }

    fn find_gate(&self, g: &Gate) -> Option<usize> {
        self.gates.iter().position(|x| x == g)
    }

    /// Index of the last correction gate controlled by `i`, if any.
    fn last_control(&self, i: Wire) -> Option<usize> {
        self.gates.iter().rposition(|g| {
            matches!(g, Gate::CX { control, .. } | Gate::CZ { control, .. } if *control == i)
        })
    }

    /// Index of the first correction gate controlled by `i`, if any.
    fn first_control(&self, i: Wire) -> Option<usize> {
        self.gates.iter().position(|g| {
            matches!(g, Gate::CX { control, .. } | Gate::CZ { control, .. } if *control == i)
        })
    }

    /// Pushes the gate at `p` to the right by adjacent swaps until no
    /// correction controlled by `i` remains ahead of it. Returns false
    /// if it parks early at a non-commuting gate.
    fn push_past_sub(&mut self, mut p: usize, i: Wire) -> bool {
        loop {
            match self.last_control(i) {
                Some(l) if l > p => {}
                _ => return true,
            }
            let g = self.gates[p];
            if commutes(&g, &self.gates[p + 1]) {
                self.gates.swap(p, p + 1);
                p += 1;
            } else {
                return false;
            }
        }
    }

    /// Removes every correction CZ on the wire pair {i, k}; their count
    /// must be even (each created CZ pairs with another created one or
    /// with the pre-existing correction). A cancelling pair may straddle
    /// a CX on the same wire pair: CZ · CX = CX · CZ · Z_control, so
    /// each straddled CX leaves an explicit Z on its control wire.
    fn cancel_cz(&mut self, i: Wire, k: Wire) -> Result<usize, CompactifyError> {
        let cz = Gate::CZ {
            control: i,
            target: k,
        };
        let ps: Vec<usize> = self
            .gates
            .iter()
            .enumerate()
            .filter(|(_, g)| {
                matches!(g, Gate::CZ { control, target } if pair(*control, *target) == pair(i, k))
            })
            .map(|(p, _)| p)
            .collect();
        if ps.len() % 2 != 0 {
            return Err(CompactifyError::Invariant(format!(
                "odd number of CZ corrections on ({i}, {k})"
            )));
        }
        for w in ps.chunks(2).rev() {
            let (p, q) = (w[0], w[1]);
            let mut zs: Vec<(usize, Wire)> = Vec::new();
            for r in p + 1..q {
                match self.gates[r] {
                    Gate::CX { control, target } if pair(control, target) == pair(i, k) => {
                        zs.push((r, control));
                    }
                    ref g if commutes(&cz, g) => {}
                    ref g => {
                        return Err(CompactifyError::Invariant(format!(
                            "gate {g:?} blocks the CZ cancellation on ({i}, {k})"
                        )));
                    }
                }
            }
            self.gates.remove(q);
            self.gates.remove(p);
            for &(r, c) in zs.iter().rev() {
                self.gates.insert(r, Gate::PauliZ { wire: c });
            }
        }
        Ok(ps.len())
    }

    /// Cancels pairs of identical CX gates whenever everything between
    /// a pair commutes with it. Returns how many gates were removed.
    fn cancel_cx_pairs(&mut self, control: Wire, target: Wire) -> usize {
        let gate = Gate::CX { control, target };
        let mut removed = 0;
        'outer: loop {
            let ps: Vec<usize> = self
                .gates
                .iter()
                .enumerate()
                .filter(|(_, g)| **g == gate)
                .map(|(p, _)| p)
                .collect();
            for w in ps.windows(2) {
                let (p, q) = (w[0], w[1]);
                if (p + 1..q).all(|r| commutes(&gate, &self.gates[r])) {
                    self.gates.remove(q);
                    self.gates.remove(p);
                    removed += 2;
                    continue 'outer;
                }
            }
            return removed;
        }
    }

    /// First rewrite procedure: the neighbour `k` is an output or is
    /// measured in a later round than the target `i`. Every entangling
    /// gate between `k` and the correcting set of `i` is pushed past the
    /// sub-slice of `i`; crossing CX_{ij} turns E_{kj} CX_{ij} into
    /// CX_{ij} CZ_{ik} E_{kj}, and all CZs on {i, k} then cancel.
    pub fn rp1(&mut self, i: Wire, k: Wire) -> Result<RPInvocation, CompactifyError> {
        let si = self.s.get(&i).cloned().unwrap_or_default();
        let nk = self.nbrs.get(&k).cloned().unwrap_or_default();
        let mut js: Vec<Wire> = si.intersection(&nk).iter().collect();
        js.sort_by_key(|&j| {
            self.find_gate(&Gate::CX {
                control: i,
                target: j,
            })
            .unwrap_or(usize::MAX)
        });
        let start = self.first_control(i);
        let mut inv = RPInvocation::new(RPKind::RP1, i, k);
        for j in js {
            let eg = Gate::e(k, j);
            let Some(ep) = self.find_gate(&eg) else {
                continue;
            };
            match self.last_control(i) {
                Some(l) if ep <= l => {}
                _ => continue, // already past the sub-slice
            }
            if start.is_some_and(|s| ep > s) {
                // Parked inside the sub-slice by an earlier procedure.
                inv.kind = RPKind::RP1b;
            }
            let mut created = Vec::new();
            self.push_e_right(ep, i, &mut created);
            inv.created_cz += created.len();
            inv.moved.push(pair(k, j));
        }
        inv.cancelled_cz = self.cancel_cz(i, k)?;
        Ok(inv)
    }

    /// Pushes the entangling gate at `p` to the right by exact moves
    /// until no correction controlled by `i` remains ahead of it:
    /// commuting gates are swapped past, and a CX targeting one of its
    /// endpoints is crossed with E_{kj} CX_{cj} = CX_{cj} CZ_{ck} E_{kj},
    /// creating a CZ each time. Parks early (like push_past_sub) at a
    /// gate admitting neither move.
    fn push_e_right(&mut self, mut p: usize, i: Wire, created: &mut Vec<Gate>) {
        loop {
            match self.last_control(i) {
                Some(l) if l > p => {}
                _ => return,
            }
            let Gate::E { a, b } = self.gates[p] else {
                return;
            };
            let next = self.gates[p + 1];
            if commutes(&self.gates[p], &next) {
                self.gates.swap(p, p + 1);
                p += 1;
            } else if let Gate::CX { control, target } = next {
                if target != a && target != b {
                    return;
                }
                let other = if target == a { b } else { a };
                let cz = Gate::CZ {
                    control,
                    target: other,
                };
                self.gates.swap(p, p + 1);
                self.gates.insert(p + 1, cz);
                created.push(cz);
                p += 2;
            } else {
                return;
            }
        }
    }

    /// Second and third rewrite procedures: the neighbour `k` was
    /// measured in this round or earlier. Each entangling gate E_{kj}
    /// with j in the correcting set of `i` is consumed against the flow
    /// edge E_{k,f(k)} (whose far wire must still be untouched), leaving
    /// a stand-in CX_{j,f(k)}; if it was consumed at an earlier
    /// sub-slice its stand-in is reused instead. Pushing the stand-in
    /// through CX_{ij} creates CX_{i,f(k)}, and those cancel in pairs
    /// (for `rp2` against the pre-existing correction CX_{i,f(k)}).
    pub fn rp23(&mut self, i: Wire, k: Wire, kind: RPKind) -> Result<RPInvocation, CompactifyError> {
        let fk = *self.f.get(&k).ok_or(CompactifyError::NoFlow(k))?;
        let si = self.s.get(&i).cloned().unwrap_or_default();
        let nk = self.nbrs.get(&k).cloned().unwrap_or_default();
        let mut js: Vec<Wire> = si
            .intersection(&nk)
            .iter()
            .filter(|&j| j != fk)
            .collect();
        js.sort_by_key(|&j| {
            self.find_gate(&Gate::CX {
                control: i,
                target: j,
            })
            .unwrap_or(usize::MAX)
        });
        let mut inv = RPInvocation::new(kind, i, k);
        let anchor = Gate::e(k, fk);
        for j in js {
            let standin = Gate::CX {
                control: j,
                target: fk,
            };
            let mut cur;
            if let Some(ep) = self.find_gate(&Gate::e(k, j)) {
                let ap = self.find_gate(&anchor).ok_or(CompactifyError::Abort {
                    target: i,
                    neighbour: k,
                })?;
                // The far wire of the flow edge must still be fresh: a
                // stand-in or correction CX targeting it is harmless
                // (CX fixes |+⟩ targets and is deleted later), anything
                // else on the wire blocks the consumption.
                let fresh = self.gates[..ap].iter().all(|g| {
                    !g.touches(fk)
                        || matches!(g, Gate::CX { control, target }
                            if *target == fk && self.f.get(control) != Some(target))
                });
                if !fresh {
                    return Err(CompactifyError::Abort {
                        target: i,
                        neighbour: k,
                    });
                }
                let eg = Gate::e(k, j);
                let (lo, hi) = if ep < ap { (ep + 1, ap) } else { (ap + 1, ep) };
                for q in lo..hi {
                    if !commutes(&eg, &self.gates[q]) {
                        return Err(CompactifyError::Abort {
                            target: i,
                            neighbour: k,
                        });
                    }
                }
                self.gates.remove(ep);
                let ap = if ep < ap { ap - 1 } else { ap };
                self.gates.insert(ap + 1, standin);
                cur = ap + 1;
                inv.consumed.push(pair(k, j));
            } else if let Some(p) = self.find_gate(&standin) {
                cur = p;
                inv.reused.push((j, fk));
                inv.kind = match kind {
                    RPKind::RP2 => RPKind::RP2Relaxed,
                    RPKind::RP3 => RPKind::RP3Relaxed,
                    other => other,
                };
            } else {
                return Err(CompactifyError::Abort {
                    target: i,
                    neighbour: k,
                });
            }
            let cx = Gate::CX {
                control: i,
                target: j,
            };
            if let Some(cp) = self.find_gate(&cx) {
                if cur < cp {
                    for q in cur + 1..cp {
                        if !commutes(&standin, &self.gates[q]) {
                            return Err(CompactifyError::Abort {
                                target: i,
                                neighbour: k,
                            });
                        }
                    }
                    self.gates.remove(cur);
                    let cp = cp - 1;
                    self.gates.insert(
                        cp + 1,
                        Gate::CX {
                            control: i,
                            target: fk,
                        },
                    );
                    self.gates.insert(cp + 2, standin);
                    inv.created_cx += 1;
                    cur = cp + 2;
                }
            }
            self.push_past_sub(cur, i);
        }
        inv.cancelled_cx = self.cancel_cx_pairs(i, fk);
        Ok(inv)
    }

    /// Dispatches the rewrite procedure for neighbour `k` of target `i`:
    /// the first procedure when `k` is an output or measured in a later
    /// round, otherwise the second (f(k) in the correcting set of `i`)
    /// or third procedure.
    pub fn choose_rp(&mut self, i: Wire, k: Wire) -> Result<RPInvocation, CompactifyError> {
        let n = self
            .jlayer
            .get(&i)
            .copied()
            .ok_or(CompactifyError::PauliSimplified(i))?;
        let later = !self.measured.contains(&k) || self.jlayer.get(&k).is_some_and(|&m| m > n);
        if later {
            self.rp1(i, k)
        } else {
            let fk = *self.f.get(&k).ok_or(CompactifyError::NoFlow(k))?;
            let kind = if self.s.get(&i).is_some_and(|s| s.contains(fk)) {
                RPKind::RP2
            } else {
                RPKind::RP3
            };
            self.rp23(i, k, kind)
        }
    }

    /// Runs all rewrite procedures round by round: targets in descending
    /// measurement order within each round (matching the sub-slice
    /// layout), neighbours of each correcting set likewise from outputs
    /// down to the earliest-measured.
    pub fn run_rewrites(&mut self) -> Result<(), CompactifyError> {
        for n in 0..self.rounds {
            let mut targets: Vec<Wire> = self
                .jlayer
                .iter()
                .filter(|&(_, &m)| m == n)
                .map(|(&w, _)| w)
                .collect();
            targets.sort_by_key(|&w| (self.fkey(w), w));
            for i in targets {
                let si = self.s.get(&i).cloned().unwrap_or_default();
                let mut hood = VertexSet::new();
                for j in si.iter() {
                    if let Some(nj) = self.nbrs.get(&j) {
                        hood = hood.union(nj);
                    }
                }
                hood.remove(i);
                let mut ks: Vec<Wire> = hood.iter().collect();
                ks.sort_by_key(|&k| (self.fkey(k), k));
                for k in ks {
                    let inv = self.choose_rp(i, k)?;
                    self.trace.invocations.push(inv);
                }
            }
        }
        Ok(())
    }

    /// Deletes every non-flow CX whose target wire is prepared in |+⟩
    /// and has no earlier gate acting on it (so the CX fixes the state;
    /// earlier Zs only flip it to |−⟩, turning the CX into a Z on its
    /// control). Non-flow CXs on wires already acted on are kept: they
    /// are genuine remnants that relabel onto the output wires during
    /// the collapses.
    pub fn remove_standins(&mut self) {
        // Some(false) = untouched |+⟩, Some(true) = untouched up to Zs,
        // now |−⟩; None = some kept gate already acts on the wire.
        let mut sign: BTreeMap<Wire, Option<bool>> = self
            .wires
            .iter()
            .map(|&w| (w, (self.initial.get(&w) == Some(&Init::Plus)).then_some(false)))
            .collect();
        let mut p = 0;
        while p < self.gates.len() {
            let g = self.gates[p];
            if let Gate::CX { control, target } = g {
                if self.f.get(&control) != Some(&target) {
                    match sign.get(&target).copied().flatten() {
                        Some(false) => {
                            self.gates.remove(p);
                            self.trace.removed_cx.push((control, target));
                            continue;
                        }
                        Some(true) => {
                            self.gates[p] = Gate::PauliZ { wire: control };
                            self.trace.removed_cx.push((control, target));
                            continue;
                        }
                        None => {}
                    }
                }
            }
            if let Gate::PauliZ { wire } = g {
                if let Some(Some(s)) = sign.get_mut(&wire) {
                    *s = !*s;
                }
            } else {
                for w in g.wires() {
                    sign.insert(w, None);
                }
            }
            p += 1;
        }
    }

    /// Pushes every explicit Z gate to the end of the circuit: crossing
    /// a J gate on the same wire adds π to its angle, crossing a CX on
    /// its target toggles a Z on the control. Zs ending on measured
    /// wires only flip the residual ± state there and are dropped; Zs
    /// ending on output wires are kept as trailing gates.
    pub fn discharge_paulis(&mut self) {
        let mut end: BTreeMap<Wire, bool> = BTreeMap::new();
        while let Some(p) = self
            .gates
            .iter()
            .position(|g| matches!(g, Gate::PauliZ { .. }))
        {
            let Gate::PauliZ { wire } = self.gates[p] else {
                unreachable!()
            };
            self.gates.remove(p);
            let mut pending = BTreeSet::from([wire]);
            let mut q = p;
            while q < self.gates.len() {
                match self.gates[q] {
                    Gate::J { wire: jw, angle } if pending.contains(&jw) => {
                        self.gates[q] = Gate::J {
                            wire: jw,
                            angle: angle.add_pi(),
                        };
                        pending.remove(&jw);
                    }
                    Gate::CX { control, target } if pending.contains(&target) => {
                        if !pending.remove(&control) {
                            pending.insert(control);
                        }
                    }
                    _ => {}
                }
                q += 1;
            }
            for v in pending {
                *end.entry(v).or_default() ^= true;
            }
        }
        for (v, odd) in end {
            if odd && !self.measured.contains(&v) {
                self.gates.push(Gate::PauliZ { wire: v });
            }
        }
    }

    /// Applies the J-gate identity on (i, f(i)): the block
    /// E_{i,f(i)} · J_i(α) · CX_{i,f(i)} with f(i) fresh in |+⟩ acts as
    /// J_{f(i)}(α), teleporting wire i onto its successor. Commuting
    /// bystander gates are first moved out of the block, then the block
    /// is rewritten, every remaining gate on i is relabelled to f(i),
    /// and wire i is dropped.
    pub fn collapse(&mut self, i: Wire) -> Result<(), CompactifyError> {
        let fi = *self.f.get(&i).ok_or(CompactifyError::NoFlow(i))?;
        let inv = |m: String| CompactifyError::Invariant(m);
        loop {
            let ep = self
                .find_gate(&Gate::e(i, fi))
                .ok_or_else(|| inv(format!("missing flow edge ({i}, {fi})")))?;
            let cp = self
                .find_gate(&Gate::CX {
                    control: i,
                    target: fi,
                })
                .ok_or_else(|| inv(format!("missing flow CX ({i}, {fi})")))?;
            if cp < ep {
                return Err(inv(format!("flow CX precedes flow edge on ({i}, {fi})")));
            }
            let jp = (ep + 1..cp)
                .find(|&q| matches!(self.gates[q], Gate::J { wire, .. } if wire == i))
                .ok_or_else(|| inv(format!("no J gate inside the ({i}, {fi}) block")))?;
            let off = (ep + 1..cp)
                .find(|&q| q != jp && (self.gates[q].touches(i) || self.gates[q].touches(fi)));
            let Some(q) = off else {
                if self.gates[cp + 1..].iter().any(|g| g.touches(i)) {
                    return Err(inv(format!("wire {i} is used after its flow CX")));
                }
                if self.gates[..ep].iter().any(|g| g.touches(fi)) {
                    return Err(inv(format!("wire {fi} is used before its flow edge")));
                }
                if self.initial.get(&fi) != Some(&Init::Plus) {
                    return Err(inv(format!("wire {fi} does not start in |+⟩")));
                }
                let Gate::J { angle, .. } = self.gates[jp] else {
                    unreachable!()
                };
                self.gates.remove(cp);
                self.gates.remove(jp);
                self.gates.remove(ep);
                self.gates.insert(jp - 1, Gate::J { wire: fi, angle });
                let relabel = |w: Wire| if w == i { fi } else { w };
                for g in self.gates.iter_mut() {
                    *g = match *g {
                        Gate::J { wire, angle } => Gate::J {
                            wire: relabel(wire),
                            angle,
                        },
                        Gate::E { a, b } => Gate::e(relabel(a), relabel(b)),
                        Gate::CZ { control, target } => Gate::CZ {
                            control: relabel(control),
                            target: relabel(target),
                        },
                        Gate::CX { control, target } => Gate::CX {
                            control: relabel(control),
                            target: relabel(target),
                        },
                        Gate::PauliZ { wire } => Gate::PauliZ {
                            wire: relabel(wire),
                        },
                    };
                }
                let carried = self.initial.remove(&i).unwrap_or(Init::Plus);
                self.initial.insert(fi, carried);
                self.wires.retain(|&w| w != i);
                self.measured.remove(&i);
                self.trace.collapsed.push((i, fi));
                return Ok(());
            };
            // Move the bystander out of the block: gates on f(i), and
            // gates on i past the J, go right beyond the CX; gates on i
            // before the J go left before the flow edge.
            let g = self.gates[q];
            if g.touches(fi) || q > jp {
                if !(q + 1..=cp).all(|r| commutes(&g, &self.gates[r])) {
                    return Err(inv(format!(
                        "gate {g:?} is stuck inside the ({i}, {fi}) block"
                    )));
                }
                self.gates.remove(q);
                self.gates.insert(cp, g);
            } else {
                if !(ep..q).all(|r| commutes(&g, &self.gates[r])) {
                    return Err(inv(format!(
                        "gate {g:?} is stuck inside the ({i}, {fi}) block"
                    )));
                }
                self.gates.remove(q);
                self.gates.insert(ep, g);
            }
        }
    }

    /// Applies the J-gate identities for every measured wire that still
    /// carries a J gate, earliest-measured first.
    pub fn run_collapses(&mut self) -> Result<(), CompactifyError> {
        let mut order: Vec<Wire> = self
            .measured
            .iter()
            .copied()
            .filter(|w| self.gates.iter().any(|g| matches!(g, Gate::J { wire, .. } if wire == w)))
            .collect();
        order.sort_by_key(|&w| (std::cmp::Reverse(self.fkey(w)), w));
        for i in order {
            self.collapse(i)?;
        }
        Ok(())
    }

    pub fn into_circuit(self) -> Result<(Circuit, CompactifyTrace), CompactifyError> {
        let c = Circuit::new(self.wires, self.initial, self.gates, self.measured)?;
        Ok((c, self.trace))
    }
}

/// Compact translation of an extended circuit: runs the rewrite
/// procedures, deletes the stand-in CXs, and collapses every measured
/// wire onto its flow successor, producing an ancilla-free circuit on
/// the output wires together with a full trace.
pub fn compactify(
    ext: &SlicedCircuit,
    fl: &Flow,
    ssf: &GFlow,
) -> Result<(Circuit, CompactifyTrace), CompactifyError> {
    compactify_with(ext, fl, ssf, false)
}

/// Like [`compactify`], but with `allow_partial` set, measured wires
/// without a J gate (removed by Pauli simplification) are left in place
/// instead of being rejected; only the remaining wires collapse.
pub fn compactify_with(
    ext: &SlicedCircuit,
    fl: &Flow,
    ssf: &GFlow,
    allow_partial: bool,
) -> Result<(Circuit, CompactifyTrace), CompactifyError> {
    let mut st = CompactState::new(ext, fl, ssf)?;
    if !allow_partial {
        if let Some(&w) = st.missing_j().first() {
            return Err(CompactifyError::PauliSimplified(w));
        }
    }
    st.run_rewrites()?;
    st.remove_standins();
    st.discharge_paulis();
    st.run_collapses()?;
    st.into_circuit()
}

/// Number of J layers of a flat circuit: the longest causal chain of J
/// gates, where two-wire gates merge the chains of their wires.
pub fn j_depth(c: &Circuit) -> usize {
    let mut d: BTreeMap<Wire, usize> = c.wires().iter().map(|&w| (w, 0)).collect();
    for g in c.gates() {
        match g {
            Gate::J { wire, .. } => *d.get_mut(wire).unwrap() += 1,
            _ => {
                let ws = g.wires();
                if ws.len() == 2 {
                    let m = d[&ws[0]].max(d[&ws[1]]);
                    d.insert(ws[0], m);
                    d.insert(ws[1], m);
                }
            }
        }
    }
    d.values().copied().max().unwrap_or(0)
}

/// Follows the flow function from `w` to the end of its chain (the
/// output wire that inherits its state under the compact translation).
pub fn chain_end(f: &BTreeMap<Wire, Wire>, mut w: Wire) -> Wire {
    while let Some(&n) = f.get(&w) {
        w = n;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::extended_translation;
    use crate::fixtures;
    use crate::flow::ssf_from_flow;
    use crate::graph::OpenGraph;
    use crate::pattern::{flow_pattern, signal_shift, Angle, MeasurementPattern};
    use crate::sim::{
        circuit_unitary, circuit_unitary_with_order, equivalent_up_to_phase,
        extended_matches_rewritten, pattern_unitary, StateVector, UnitaryMatrix,
    };
    use num_complex::Complex64;
    use std::collections::BTreeMap;

    fn unit(wires: Vec<Wire>, gates: Vec<Gate>) -> UnitaryMatrix {
        let initial = wires.iter().map(|&w| (w, Init::Plus)).collect();
        let c = Circuit::new(wires, initial, gates, BTreeSet::new()).unwrap();
        circuit_unitary(&c).unwrap()
    }

    #[test]
    fn rewrite_identity_cz_past_cx() {
        // E_{kj} CX_{ij}  =  CX_{ij} CZ_{ik} E_{kj}   (i=1, j=2, k=3)
        let lhs = unit(
            vec![1, 2, 3],
            vec![
                Gate::e(3, 2),
                Gate::CX {
                    control: 1,
                    target: 2,
                },
            ],
        );
        let rhs = unit(
            vec![1, 2, 3],
            vec![
                Gate::CX {
                    control: 1,
                    target: 2,
                },
                Gate::CZ {
                    control: 1,
                    target: 3,
                },
                Gate::e(3, 2),
            ],
        );
        assert!(lhs.max_diff(&rhs) < 1e-12);
    }

    #[test]
    fn rewrite_identity_cx_past_cx() {
        // CX_{jl} CX_{ij}  =  CX_{ij} CX_{il} CX_{jl}   (i=1, j=2, l=3)
        let lhs = unit(
            vec![1, 2, 3],
            vec![
                Gate::CX {
                    control: 2,
                    target: 3,
                },
                Gate::CX {
                    control: 1,
                    target: 2,
                },
            ],
        );
        let rhs = unit(
            vec![1, 2, 3],
            vec![
                Gate::CX {
                    control: 1,
                    target: 2,
                },
                Gate::CX {
                    control: 1,
                    target: 3,
                },
                Gate::CX {
                    control: 2,
                    target: 3,
                },
            ],
        );
        assert!(lhs.max_diff(&rhs) < 1e-12);
    }

    #[test]
    fn rewrite_identity_consume_entangler() {
        // With wire l fresh in |+⟩:  E_{jk} E_{kl}  =  E_{kl} CX_{jl}
        // (j=1, k=2, l=3). Checked on every basis state of (j, k).
        // Wire order [1, 2, 3]; the first wire is the low bit.
        let r = 1.0 / 2f64.sqrt();
        for b in 0..4usize {
            let mut amps = vec![Complex64::new(0.0, 0.0); 8];
            amps[b] = Complex64::new(r, 0.0);
            amps[b | 4] = Complex64::new(r, 0.0);
            let mut lhs = StateVector::new(vec![1, 2, 3], amps.clone()).unwrap();
            let mut rhs = StateVector::new(vec![1, 2, 3], amps).unwrap();
            lhs.apply_gate(&Gate::e(1, 2)).unwrap();
            lhs.apply_gate(&Gate::e(2, 3)).unwrap();
            rhs.apply_gate(&Gate::e(2, 3)).unwrap();
            rhs.apply_gate(&Gate::CX {
                control: 1,
                target: 3,
            })
            .unwrap();
            assert!(lhs.overlap(&rhs).unwrap() > 1.0 - 1e-12, "basis {b}");
        }
    }

    #[test]
    fn commutation_rules() {
        let e12 = Gate::e(1, 2);
        let e23 = Gate::e(2, 3);
        let cx12 = Gate::CX {
            control: 1,
            target: 2,
        };
        let cx13 = Gate::CX {
            control: 1,
            target: 3,
        };
        let cx21 = Gate::CX {
            control: 2,
            target: 1,
        };
        let j1 = Gate::J {
            wire: 1,
            angle: Angle::zero(),
        };
        let cx31 = Gate::CX {
            control: 3,
            target: 1,
        };
        assert!(commutes(&e12, &e23)); // diagonal gates
        assert!(!commutes(&e12, &cx12)); // E touches the CX target
        assert!(!commutes(&e23, &cx13)); // CX targets an E wire
        assert!(commutes(&e23, &cx31)); // CX target off the E wires
        assert!(!commutes(&cx12, &cx21)); // each targets the other's control
        assert!(commutes(&cx12, &cx13)); // shared control only
        assert!(!commutes(&j1, &cx21)); // J shares a wire
        assert!(commutes(&j1, &e23)); // disjoint
    }

    fn pipeline(
        fx: fixtures::Fixture,
    ) -> (
        MeasurementPattern,
        SlicedCircuit,
        crate::flow::Flow,
        crate::flow::GFlow,
    ) {
        let (g, fl, angles) = fx;
        let p = signal_shift(&flow_pattern(&fl, &g, &angles).unwrap(), &fl).unwrap();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        let ext = extended_translation(&p, &ssf).unwrap();
        (p, ext, fl, ssf)
    }

    #[test]
    fn two_qubit_block_compactifies() {
        let (_, ext, fl, ssf) = pipeline(fixtures::two_qubit());
        let (c, trace) = compactify(&ext, &fl, &ssf).unwrap();
        assert_eq!(c.wires(), &[2]);
        assert_eq!(c.initial(2), Some(Init::Input));
        assert!(c.measured().is_empty());
        assert_eq!(c.gates().len(), 1);
        assert!(matches!(c.gates()[0], Gate::J { wire: 2, .. }));
        assert_eq!(trace.collapsed, vec![(1, 2)]);
        let big = ext.flatten();
        assert!(extended_matches_rewritten(&big, &[1], &c, &[2], 1e-9).unwrap());
    }

    #[test]
    fn full_path_collapses_to_single_wire() {
        let (p, ext, fl, ssf) = pipeline(fixtures::full_path7());
        let (c, trace) = compactify(&ext, &fl, &ssf).unwrap();
        assert_eq!(c.wires(), &[7]);
        assert_eq!(c.gates().len(), 6);
        assert!(c.gates().iter().all(|g| matches!(g, Gate::J { wire: 7, .. })));
        assert_eq!(trace.collapsed.len(), 6);
        let big = ext.flatten();
        assert!(extended_matches_rewritten(&big, &[1], &c, &[7], 1e-9).unwrap());
        // The flat unitary also matches the pattern directly.
        let u = circuit_unitary(&c).unwrap();
        let up = pattern_unitary(&p).unwrap();
        assert!(equivalent_up_to_phase(&u, &up, 1e-9).unwrap());
    }

    /// Runs the compact circuit on |b⟩ over the carried input wires and
    /// |+⟩ on the rest, returning the matrix in the given output order.
    fn embedded_unitary(c: &Circuit, inputs: &[Wire], order: &[Wire]) -> UnitaryMatrix {
        let mut cols = Vec::new();
        for b in 0..1usize << inputs.len() {
            let n = order.len();
            let free: Vec<usize> = (0..n)
                .filter(|&q| !inputs.contains(&order[q]))
                .collect();
            let amp = 1.0 / ((1usize << free.len()) as f64).sqrt();
            let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
            // Wire `order[q]` is bit q of the amplitude index.
            for fi in 0..1usize << free.len() {
                let mut idx = 0usize;
                for (k, &w) in inputs.iter().enumerate() {
                    if b >> k & 1 == 1 {
                        let q = order.iter().position(|&x| x == w).unwrap();
                        idx |= 1 << q;
                    }
                }
                for (k, &q) in free.iter().enumerate() {
                    if fi >> k & 1 == 1 {
                        idx |= 1 << q;
                    }
                }
                amps[idx] = Complex64::new(amp, 0.0);
            }
            let mut st = StateVector::new(order.to_vec(), amps).unwrap();
            for g in c.gates() {
                st.apply_gate(g).unwrap();
            }
            cols.push(st.amps().to_vec());
        }
        UnitaryMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn line_graph_compactifies_to_three_wires() {
        let (p, ext, fl, ssf) = pipeline(fixtures::line_graph7());
        let (c, _) = compactify(&ext, &fl, &ssf).unwrap();
        assert_eq!(c.wires(), &[2, 4, 7]);
        assert_eq!(c.initial(2), Some(Init::Input));
        assert_eq!(c.initial(4), Some(Init::Plus));
        assert_eq!(c.initial(7), Some(Init::Plus));
        // Depth two: the chain 5 → 6 → 7 stacks two J gates on wire 7.
        assert_eq!(j_depth(&c), 2);
        let u = embedded_unitary(&c, &[2], &[2, 4, 7]);
        let up = pattern_unitary(&p).unwrap();
        assert!(equivalent_up_to_phase(&u, &up, 1e-9).unwrap());
    }

    #[test]
    fn worked_example_compactifies_to_outputs() {
        let (p, ext, fl, ssf) = pipeline(fixtures::example1());
        let (c, trace) = compactify(&ext, &fl, &ssf).unwrap();
        assert_eq!(c.wires(), &[3, 6, 8]);
        assert!(c.measured().is_empty());
        for w in [3, 6, 8] {
            assert_eq!(c.initial(w), Some(Init::Input));
        }
        // Five J gates (one per measured qubit) and the one surviving
        // entangler, carried from edge (2, 5) down both chains.
        assert_eq!(
            c.gates().iter().filter(|g| matches!(g, Gate::J { .. })).count(),
            5
        );
        let entanglers: Vec<&Gate> = c
            .gates()
            .iter()
            .filter(|g| !matches!(g, Gate::J { .. }))
            .collect();
        assert!(entanglers.contains(&&Gate::e(3, 6)));
        assert_eq!(j_depth(&c), 2);
        // All three procedures fire on this instance.
        let kinds: BTreeSet<&str> = trace
            .invocations
            .iter()
            .map(|i| i.kind.name())
            .collect();
        assert!(kinds.contains("rp1"));
        assert!(kinds.contains("rp2") || kinds.contains("rp2-relaxed"));
        assert!(kinds.contains("rp3") || kinds.contains("rp3-relaxed"));
        let big = ext.flatten();
        assert!(extended_matches_rewritten(&big, &[1, 4, 7], &c, &[3, 6, 8], 1e-9).unwrap());
        let u = circuit_unitary_with_order(&c, &[3, 6, 8]).unwrap();
        let up = pattern_unitary(&p).unwrap();
        assert!(equivalent_up_to_phase(&u, &up, 1e-9).unwrap());
    }

    #[test]
    fn pauli_example_compactifies() {
        let (p, ext, fl, ssf) = pipeline(fixtures::pauli_example());
        let (c, _) = compactify(&ext, &fl, &ssf).unwrap();
        assert_eq!(c.wires(), &[3, 6]);
        let u = circuit_unitary_with_order(&c, &[3, 6]).unwrap();
        let up = pattern_unitary(&p).unwrap();
        assert!(equivalent_up_to_phase(&u, &up, 1e-9).unwrap());
    }

    #[test]
    fn partial_input_is_rejected_without_flag() {
        let (_, mut ext, fl, ssf) = pipeline(fixtures::example1());
        // Drop one J gate, as Pauli simplification would.
        for layer in ext.layers.iter_mut() {
            layer
                .j
                .retain(|g| !matches!(g, Gate::J { wire: 7, .. }));
        }
        assert_eq!(
            compactify(&ext, &fl, &ssf).unwrap_err(),
            CompactifyError::PauliSimplified(7)
        );
        // With the flag the run completes, keeping wire 7 and its flow
        // correction in place.
        let (c, _) = compactify_with(&ext, &fl, &ssf, true).unwrap();
        assert!(c.wires().contains(&7));
        assert!(c.measured().contains(&7));
        assert!(c.gates().iter().any(
            |g| matches!(g, Gate::CX { control: 7, target: 8 })
        ));
    }

    #[test]
    fn chain_end_follows_flow() {
        let (_, fl, _) = fixtures::example1();
        assert_eq!(chain_end(&fl.f, 1), 3);
        assert_eq!(chain_end(&fl.f, 4), 6);
        assert_eq!(chain_end(&fl.f, 7), 8);
        assert_eq!(chain_end(&fl.f, 3), 3);
    }

    #[test]
    fn random_flow_circuits_round_trip() {
        // Small hand-rolled circuits: translate to a pattern, shift,
        // extend, compactify, and compare unitaries.
        use crate::circuit::CircuitBuilder;
        use crate::pattern::pattern_from_circuit;
        let cases: Vec<Circuit> = vec![
            CircuitBuilder::on_inputs([1, 2])
                .j(1, Angle::new(1, 4).unwrap())
                .cz(1, 2)
                .j(2, Angle::new(-1, 8).unwrap())
                .build()
                .unwrap(),
            CircuitBuilder::on_inputs([1, 2, 3])
                .j(2, Angle::new(1, 3).unwrap())
                .cz(1, 2)
                .cz(2, 3)
                .j(1, Angle::new(1, 6).unwrap())
                .j(3, Angle::new(-1, 5).unwrap())
                .cz(1, 3)
                .j(2, Angle::new(1, 7).unwrap())
                .build()
                .unwrap(),
        ];
        for (idx, orig) in cases.iter().enumerate() {
            let p = pattern_from_circuit(orig).unwrap();
            let g = p.space.clone();
            let fl = crate::flow::find_flow(&g).unwrap();
            let shifted = signal_shift(&p, &fl).unwrap();
            let ssf = ssf_from_flow(&fl, &g).unwrap();
            let ext = extended_translation(&shifted, &ssf).unwrap();
            let (c, _) = compactify(&ext, &fl, &ssf).unwrap();
            assert_eq!(c.wires().len(), orig.wires().len(), "case {idx}");
            let ends: Vec<Wire> = orig.wires().iter().map(|&w| chain_end(&fl.f, w)).collect();
            let u = circuit_unitary_with_order(&c, &ends).unwrap();
            let uo = circuit_unitary(orig).unwrap();
            assert!(
                equivalent_up_to_phase(&u, &uo, 1e-9).unwrap(),
                "case {idx} unitary mismatch"
            );
        }
    }

    /// Evolves |b⟩ on the input wires (all others |+⟩) through the gate
    /// list, for every input basis state b.
    fn evolve(gates: &[Gate], wires: &[Wire], inputs: &[Wire]) -> Vec<Vec<Complex64>> {
        let n = wires.len();
        let mut outs = Vec::new();
        for b in 0..1usize << inputs.len() {
            let free: Vec<usize> = (0..n).filter(|&q| !inputs.contains(&wires[q])).collect();
            let amp = 1.0 / ((1usize << free.len()) as f64).sqrt();
            let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
            for fi in 0..1usize << free.len() {
                let mut idx = 0usize;
                for (m, &w) in inputs.iter().enumerate() {
                    if b >> m & 1 == 1 {
                        idx |= 1 << wires.iter().position(|&x| x == w).unwrap();
                    }
                }
                for (m, &q) in free.iter().enumerate() {
                    if fi >> m & 1 == 1 {
                        idx |= 1 << q;
                    }
                }
                amps[idx] = Complex64::new(amp, 0.0);
            }
            let mut st = StateVector::new(wires.to_vec(), amps).unwrap();
            for g in gates {
                st.apply_gate(g).unwrap();
            }
            outs.push(st.amps().to_vec());
        }
        outs
    }

    /// True when the two evolutions agree up to one fixed layer of
    /// trailing Z gates on measured wires (the only freedom the rewrite
    /// rules are allowed, since a Z before a Z-basis measurement is
    /// unobservable).
    fn z_equiv(
        new: &[Vec<Complex64>],
        old: &[Vec<Complex64>],
        wires: &[Wire],
        measured: &BTreeSet<Wire>,
    ) -> bool {
        let n = wires.len();
        let mbits: Vec<usize> = (0..n).filter(|&q| measured.contains(&wires[q])).collect();
        'assign: for a in 0..1usize << mbits.len() {
            for (sn, so) in new.iter().zip(old) {
                for idx in 0..sn.len() {
                    let mut sign = 1.0;
                    for (m, &q) in mbits.iter().enumerate() {
                        if a >> m & 1 == 1 && idx >> q & 1 == 1 {
                            sign = -sign;
                        }
                    }
                    if (sn[idx] - so[idx] * sign).norm() > 1e-9 {
                        continue 'assign;
                    }
                }
            }
            return true;
        }
        false
    }

    #[test]
    fn every_rewrite_step_preserves_semantics() {
        // Replay the full rewrite schedule on the worked example,
        // checking after every single procedure application that the
        // circuit still implements the same map (up to trailing Zs on
        // measured wires).
        let (_, ext, fl, ssf) = pipeline(fixtures::example1());
        let mut st = CompactState::new(&ext, &fl, &ssf).unwrap();
        let wires = st.wires.clone();
        let measured = st.measured.clone();
        let inputs: Vec<Wire> = wires
            .iter()
            .copied()
            .filter(|&w| st.initial[&w] == Init::Input)
            .collect();
        let s0 = evolve(st.gates(), &wires, &inputs);
        for n in 0..st.rounds {
            let mut targets: Vec<Wire> = st
                .jlayer
                .iter()
                .filter(|&(_, &m)| m == n)
                .map(|(&w, _)| w)
                .collect();
            targets.sort_by_key(|&w| (st.fkey(w), w));
            for i in targets {
                let si = st.s.get(&i).cloned().unwrap_or_default();
                let mut hood = VertexSet::new();
                for j in si.iter() {
                    if let Some(nj) = st.nbrs.get(&j) {
                        hood = hood.union(nj);
                    }
                }
                hood.remove(i);
                let mut ks: Vec<Wire> = hood.iter().collect();
                ks.sort_by_key(|&k| (st.fkey(k), k));
                for k in ks {
                    let inv = st.choose_rp(i, k).unwrap();
                    let s = evolve(st.gates(), &wires, &inputs);
                    assert!(
                        z_equiv(&s, &s0, &wires, &measured),
                        "procedure {:?} at target {i}, neighbour {k} changed semantics",
                        inv.kind
                    );
                }
            }
        }
        st.remove_standins();
        let s = evolve(st.gates(), &wires, &inputs);
        assert!(z_equiv(&s, &s0, &wires, &measured));
        st.discharge_paulis();
        let s = evolve(st.gates(), &wires, &inputs);
        assert!(z_equiv(&s, &s0, &wires, &measured));
    }
}
