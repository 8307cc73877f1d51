//! Causal flow and generalized flow (gflow) machinery: flow finding,
//! Z-path parity tables, the signal-shifted flow (SSF) construction,
//! flow/gflow verification, the maximally delayed gflow (GF(2) layer
//! peeling plus a brute-force oracle), reduced open graphs, and stepwise
//! influencing paths.

use crate::graph::{GraphError, OpenGraph, Vertex, VertexSet};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cycle detected in the Z-dependency graph (not a valid flow)")]
    ZDependencyCycle,
    #[error("flow is inconsistent with the graph: {0}")]
    InconsistentFlow(String),
    #[error("vertex {j} is not in the correcting set s({i})")]
    NotInCorrectingSet { i: Vertex, j: Vertex },
    #[error("no stepwise influencing path from {i} to {j} was found")]
    NoPath { i: Vertex, j: Vertex },
}

/// A causal flow `(f, ≺_f)`: the correcting map `f: O^C → I^C` plus the
/// layering of the coarsest order forced by conditions F1 and F2
/// (outputs and unconstrained vertices at layer 0; larger layers are
/// measured earlier).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub f: BTreeMap<Vertex, Vertex>,
    pub layers: BTreeMap<Vertex, usize>,
}

/// A generalized flow `(g, ≺_g)`: set-valued correcting map plus layering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GFlow {
    pub g: BTreeMap<Vertex, VertexSet>,
    pub layers: BTreeMap<Vertex, usize>,
}

impl Flow {
    /// Number of measurement rounds: the largest layer index.
    pub fn depth(&self) -> usize {
        self.layers.values().copied().max().unwrap_or(0)
    }

    pub fn f_inverse(&self) -> BTreeMap<Vertex, Vertex> {
        self.f.iter().map(|(&i, &fi)| (fi, i)).collect()
    }

    /// Vertices of layer `k`, ascending.
    pub fn layer(&self, k: usize) -> VertexSet {
        self.layers
            .iter()
            .filter(|&(_, &l)| l == k)
            .map(|(&v, _)| v)
            .collect()
    }

    /// The measured-layer partition `V_d, …, V_1` in measurement order
    /// (earliest round first), excluding the output layer 0.
    pub fn measured_partition(&self) -> Vec<VertexSet> {
        partition_from_layers(&self.layers)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FlowJson {
            f: self.f.iter().map(|(i, fi)| (i.to_string(), *fi)).collect(),
            layers: layers_to_json(&self.layers),
        })
        .expect("flow serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, String> {
        let j: FlowJson =
            serde_json::from_value(value.clone()).map_err(|e| format!("bad flow JSON: {e}"))?;
        Ok(Flow {
            f: parse_keyed(j.f)?,
            layers: parse_keyed(j.layers)?,
        })
    }
}

impl GFlow {
    pub fn depth(&self) -> usize {
        self.layers.values().copied().max().unwrap_or(0)
    }

    pub fn layer(&self, k: usize) -> VertexSet {
        self.layers
            .iter()
            .filter(|&(_, &l)| l == k)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Measured layers in measurement order (earliest round first);
    /// layer 0 (the outputs) is excluded.
    pub fn measured_partition(&self) -> Vec<VertexSet> {
        partition_from_layers(&self.layers)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GFlowJson {
            g: self
                .g
                .iter()
                .map(|(i, s)| (i.to_string(), s.iter().collect()))
                .collect(),
            layers: layers_to_json(&self.layers),
        })
        .expect("gflow serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, String> {
        let j: GFlowJson =
            serde_json::from_value(value.clone()).map_err(|e| format!("bad gflow JSON: {e}"))?;
        let mut g = BTreeMap::new();
        for (k, vs) in j.g {
            let key: Vertex = k.parse().map_err(|_| format!("bad vertex id {k:?}"))?;
            g.insert(key, vs.into_iter().collect());
        }
        Ok(GFlow {
            g,
            layers: parse_keyed(j.layers)?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct FlowJson {
    f: BTreeMap<String, Vertex>,
    layers: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct GFlowJson {
    g: BTreeMap<String, Vec<Vertex>>,
    layers: BTreeMap<String, usize>,
}

fn layers_to_json(layers: &BTreeMap<Vertex, usize>) -> BTreeMap<String, usize> {
    layers.iter().map(|(v, l)| (v.to_string(), *l)).collect()
}

fn parse_keyed<T>(m: BTreeMap<String, T>) -> Result<BTreeMap<Vertex, T>, String> {
    m.into_iter()
        .map(|(k, v)| {
            k.parse::<Vertex>()
                .map(|k| (k, v))
                .map_err(|_| format!("bad vertex id {k:?}"))
        })
        .collect()
}

fn partition_from_layers(layers: &BTreeMap<Vertex, usize>) -> Vec<VertexSet> {
    let depth = layers.values().copied().max().unwrap_or(0);
    (1..=depth)
        .rev()
        .map(|k| {
            layers
                .iter()
                .filter(|&(_, &l)| l == k)
                .map(|(&v, _)| v)
                .collect()
        })
        .collect()
}

/// Violations reported by `verify_flow`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowViolation {
    #[error("f is not defined exactly on the non-outputs (problem at {0})")]
    DomainMismatch(Vertex),
    #[error("f({i}) = {fi} is not a non-input vertex")]
    ImageNotNonInput { i: Vertex, fi: Vertex },
    #[error("f is not injective: f({i1}) = f({i2})")]
    NotInjective { i1: Vertex, i2: Vertex },
    #[error("F1 violated at {i}: L({i}) must exceed L(f({i}))")]
    F1 { i: Vertex },
    #[error("F2 violated at {i}: neighbour {j} of f({i}) is not measured after {i}")]
    F2 { i: Vertex, j: Vertex },
    #[error("F3 violated at {i}: {i} is not adjacent to f({i})")]
    F3 { i: Vertex },
    #[error("output {v} must be at layer 0")]
    OutputLayer { v: Vertex },
}

/// Violations reported by `verify_gflow`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GFlowViolation {
    #[error("g is not defined exactly on the non-outputs (problem at {0})")]
    DomainMismatch(Vertex),
    #[error("g({i}) contains the input-or-unknown vertex {j}")]
    ImageNotNonInput { i: Vertex, j: Vertex },
    #[error("G1 violated at {i}: {j} ∈ g({i}) but L({i}) ≤ L({j})")]
    G1 { i: Vertex, j: Vertex },
    #[error("G2 violated at {i}: {j} ∈ Odd(g({i})) but L({i}) ≤ L({j})")]
    G2 { i: Vertex, j: Vertex },
    #[error("G3 violated at {i}: {i} ∉ Odd(g({i}))")]
    G3 { i: Vertex },
    #[error("output {v} must be at layer 0")]
    OutputLayer { v: Vertex },
}

/// Finds the causal flow of an open graph if one exists.
///
/// Iterative back-to-front construction: repeatedly match non-input
/// corrector candidates whose corrected vertex is forced (exactly one
/// unmatched neighbour). Candidates are processed in ascending vertex id
/// so the result is deterministic. When `|I| = |O|` the returned flow is
/// the unique one. The layering is recomputed from the F1/F2-forced
/// relations afterwards, independently of the construction rounds.
pub fn find_flow(g: &OpenGraph) -> Option<Flow> {
    let mut past: VertexSet = g.outputs().iter().copied().collect();
    let mut used: VertexSet = VertexSet::new();
    let mut f: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    loop {
        // Corrector candidates with the round-start `past`.
        let mut progress = false;
        let candidates: Vec<Vertex> = past
            .iter()
            .filter(|&v| !g.is_input(v) && !used.contains(v))
            .collect();
        let mut assigned_this_round = VertexSet::new();
        for v in candidates {
            let free: Vec<Vertex> = g
                .neighbors(v)
                .expect("candidate is a graph vertex")
                .iter()
                .filter(|&u| !past.contains(u))
                .collect();
            if let [u] = free[..] {
                if assigned_this_round.contains(u) {
                    continue;
                }
                f.insert(u, v);
                used.insert(v);
                assigned_this_round.insert(u);
                progress = true;
            }
        }
        for u in assigned_this_round.iter() {
            past.insert(u);
        }
        if past.len() == g.n() {
            let layers = flow_layers(g, &f)?;
            return Some(Flow { f, layers });
        }
        if !progress {
            return None;
        }
    }
}

/// Layering of the coarsest order forced by F1 and F2: `L(v)` is the
/// longest chain of forced "measured before" relations starting at `v`.
/// Returns `None` if the forced relations are cyclic (not a valid flow).
fn flow_layers(g: &OpenGraph, f: &BTreeMap<Vertex, Vertex>) -> Option<BTreeMap<Vertex, usize>> {
    // Successors of i: f(i) (F1) and N(f(i)) \ {i} (F2).
    let mut succ: HashMap<Vertex, VertexSet> = HashMap::new();
    for (&i, &fi) in f {
        let mut s: VertexSet = g.neighbors(fi).ok()?;
        s.remove(i);
        s.insert(fi);
        succ.insert(i, s);
    }
    let mut layers: BTreeMap<Vertex, usize> = BTreeMap::new();
    // Memoized longest-path with an explicit stack; `visiting` detects cycles.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }
    let mut marks: HashMap<Vertex, Mark> = HashMap::new();
    for &root in g.vertices() {
        if marks.get(&root) == Some(&Mark::Done) {
            continue;
        }
        let mut stack = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                let l = succ
                    .get(&v)
                    .map(|s| {
                        s.iter()
                            .map(|u| layers.get(&u).copied().unwrap_or(0) + 1)
                            .max()
                            .unwrap_or(0)
                    })
                    .unwrap_or(0);
                layers.insert(v, l);
                marks.insert(v, Mark::Done);
                continue;
            }
            match marks.get(&v) {
                Some(Mark::Done) => continue,
                Some(Mark::Visiting) => return None,
                None => {}
            }
            marks.insert(v, Mark::Visiting);
            stack.push((v, true));
            if let Some(s) = succ.get(&v) {
                for u in s.iter() {
                    if marks.get(&u) != Some(&Mark::Done) {
                        if marks.get(&u) == Some(&Mark::Visiting) {
                            return None;
                        }
                        stack.push((u, false));
                    }
                }
            }
        }
    }
    Some(layers)
}

/// Checks F1–F3, injectivity, and domain/image constraints. An empty
/// result means the flow is valid.
pub fn verify_flow(g: &OpenGraph, fl: &Flow) -> Vec<FlowViolation> {
    let mut out = Vec::new();
    let layer = |v: Vertex| fl.layers.get(&v).copied().unwrap_or(0);
    for &v in g.vertices() {
        let measured = !g.is_output(v);
        if measured != fl.f.contains_key(&v) {
            out.push(FlowViolation::DomainMismatch(v));
        }
        if g.is_output(v) && layer(v) != 0 {
            out.push(FlowViolation::OutputLayer { v });
        }
    }
    let mut image_of: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    for (&i, &fi) in &fl.f {
        if !g.contains(fi) || g.is_input(fi) {
            out.push(FlowViolation::ImageNotNonInput { i, fi });
            continue;
        }
        if let Some(&prev) = image_of.get(&fi) {
            out.push(FlowViolation::NotInjective { i1: prev, i2: i });
        } else {
            image_of.insert(fi, i);
        }
        if !g.contains(i) {
            out.push(FlowViolation::DomainMismatch(i));
            continue;
        }
        let nf = match g.neighbors(fi) {
            Ok(n) => n,
            Err(_) => continue,
        };
        if !nf.contains(i) {
            out.push(FlowViolation::F3 { i });
        }
        if layer(i) <= layer(fi) {
            out.push(FlowViolation::F1 { i });
        }
        for j in nf.iter() {
            if j != i && layer(i) <= layer(j) && !g.is_output(j) {
                out.push(FlowViolation::F2 { i, j });
            } else if j != i && g.is_output(j) && layer(j) != 0 {
                // covered by OutputLayer
            }
        }
    }
    out
}

/// Checks G1–G3 under the gflow's layering. Empty result means valid.
pub fn verify_gflow(g: &OpenGraph, gf: &GFlow) -> Vec<GFlowViolation> {
    let mut out = Vec::new();
    let layer = |v: Vertex| gf.layers.get(&v).copied().unwrap_or(0);
    for &v in g.vertices() {
        let measured = !g.is_output(v);
        if measured != gf.g.contains_key(&v) {
            out.push(GFlowViolation::DomainMismatch(v));
        }
        if g.is_output(v) && layer(v) != 0 {
            out.push(GFlowViolation::OutputLayer { v });
        }
    }
    for (&i, gi) in &gf.g {
        for j in gi.iter() {
            if !g.contains(j) || g.is_input(j) {
                out.push(GFlowViolation::ImageNotNonInput { i, j });
            }
            if layer(i) <= layer(j) {
                out.push(GFlowViolation::G1 { i, j });
            }
        }
        let odd = match g.odd_neighborhood(gi) {
            Ok(o) => o,
            Err(_) => continue,
        };
        for j in odd.iter() {
            if j != i && layer(i) <= layer(j) {
                out.push(GFlowViolation::G2 { i, j });
            }
        }
        if !odd.contains(i) {
            out.push(GFlowViolation::G3 { i });
        }
    }
    out
}

/// Mod-2 Z-path counts. For each source `i ∈ O^C`, `odd[i]` is the set of
/// vertices `j` with `ζ_i(j)` odd (`ζ_i(i) = 1` by convention). The table
/// covers measured vertices and, through the same recursion, the outputs
/// (used for the terminal Z-corrections of the signal-shifted pattern).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZPathParityTable {
    odd: BTreeMap<Vertex, VertexSet>,
}

impl ZPathParityTable {
    pub fn parity(&self, i: Vertex, j: Vertex) -> bool {
        self.odd.get(&i).is_some_and(|s| s.contains(j))
    }

    pub fn sources(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.odd.keys().copied()
    }
}

/// Predecessors of `j` in the Z-dependency graph `G_Z`:
/// `N_Z(j) = { k ∈ O^C : f(k) ∈ N(j) \ {f(j)} }` for measured `j`; for
/// outputs `f(j)` does not exist and no exclusion applies.
fn z_predecessors(g: &OpenGraph, fl: &Flow, j: Vertex) -> Result<VertexSet, FlowError> {
    let finv = fl.f_inverse();
    let fj = fl.f.get(&j);
    let mut preds = VertexSet::new();
    for w in g.neighbors(j)?.iter() {
        if Some(&w) == fj {
            continue;
        }
        if let Some(&k) = finv.get(&w) {
            preds.insert(k);
        }
    }
    Ok(preds)
}

/// Computes `ζ_i(j) mod 2` for every measured source `i` by dynamic
/// programming over `G_Z` in topological order (ascending flow layer of
/// the target — every Z-correction goes strictly forward in `≺_f`).
pub fn zpath_parities(fl: &Flow, g: &OpenGraph) -> Result<ZPathParityTable, FlowError> {
    let mut order: Vec<Vertex> = g.vertices().to_vec();
    // Topological order of G_Z: descending flow layer (earlier-measured
    // vertices first); outputs (layer 0) come last.
    order.sort_by_key(|v| std::cmp::Reverse(fl.layers.get(v).copied().unwrap_or(0)));
    // Sanity: G_Z must be acyclic, i.e. every edge k -> j satisfies
    // L(k) > L(j). A violation means the flow layering is inconsistent.
    let mut preds: HashMap<Vertex, VertexSet> = HashMap::new();
    for &j in g.vertices() {
        let p = z_predecessors(g, fl, j)?;
        for k in p.iter() {
            let lk = fl.layers.get(&k).copied().unwrap_or(0);
            let lj = fl.layers.get(&j).copied().unwrap_or(0);
            if lk <= lj && !g.is_output(j) {
                return Err(FlowError::ZDependencyCycle);
            }
        }
        preds.insert(j, p);
    }
    let mut odd: BTreeMap<Vertex, VertexSet> = BTreeMap::new();
    for i in g.non_outputs().iter() {
        let mut oi = VertexSet::new();
        oi.insert(i);
        for &j in &order {
            if j == i {
                continue;
            }
            let mut parity = false;
            for k in preds[&j].iter() {
                parity ^= oi.contains(k);
            }
            if parity {
                oi.insert(j);
            }
        }
        odd.insert(i, oi);
    }
    Ok(ZPathParityTable { odd })
}

/// Brute-force oracle for `zpath_parities`: exhaustively enumerates the
/// directed paths of `G_Z` (kept independent of the DP for testing).
pub fn zpath_parities_bruteforce(fl: &Flow, g: &OpenGraph) -> Result<ZPathParityTable, FlowError> {
    let mut succ: HashMap<Vertex, Vec<Vertex>> = HashMap::new();
    for &j in g.vertices() {
        for k in z_predecessors(g, fl, j)?.iter() {
            succ.entry(k).or_default().push(j);
        }
    }
    fn count_paths(
        succ: &HashMap<Vertex, Vec<Vertex>>,
        from: Vertex,
        to: Vertex,
        depth: usize,
    ) -> u64 {
        if depth == 0 {
            // Path longer than |V| would mean a cycle; the caller bounds depth.
            return 0;
        }
        if from == to {
            return 1;
        }
        succ.get(&from)
            .map(|nexts| {
                nexts
                    .iter()
                    .map(|&n| count_paths(succ, n, to, depth - 1))
                    .sum()
            })
            .unwrap_or(0)
    }
    let mut odd = BTreeMap::new();
    for i in g.non_outputs().iter() {
        let mut oi = VertexSet::new();
        for &j in g.vertices() {
            let n = count_paths(&succ, i, j, g.n() + 1);
            if n % 2 == 1 {
                oi.insert(j);
            }
        }
        odd.insert(i, oi);
    }
    Ok(ZPathParityTable { odd })
}

/// Builds the signal-shifted flow `(s, L_s)` from a flow:
/// `j ∈ s(i)` iff `ζ_i(f⁻¹(j))` is odd; `L_s` is 0 on outputs and
/// `max_{j ∈ s(i)} L_s(j) + 1` elsewhere.
pub fn ssf_from_flow(fl: &Flow, g: &OpenGraph) -> Result<GFlow, FlowError> {
    let parities = zpath_parities(fl, g)?;
    let mut s: BTreeMap<Vertex, VertexSet> = BTreeMap::new();
    for i in g.non_outputs().iter() {
        let mut si = VertexSet::new();
        for (&k, &fk) in &fl.f {
            if parities.parity(i, k) {
                si.insert(fk);
            }
        }
        s.insert(i, si);
    }
    // L_s by memoized recursion; the s-DAG is acyclic because j ∈ s(i)
    // implies i strictly precedes j in the flow order.
    let mut layers: BTreeMap<Vertex, usize> = BTreeMap::new();
    for &v in g.vertices() {
        if g.is_output(v) {
            layers.insert(v, 0);
        }
    }
    let mut order: Vec<Vertex> = g.non_outputs().iter().collect();
    order.sort_by_key(|v| fl.layers.get(v).copied().unwrap_or(0));
    for i in order {
        let si = &s[&i];
        let l = si
            .iter()
            .map(|j| {
                layers
                    .get(&j)
                    .copied()
                    .ok_or(FlowError::InconsistentFlow(format!(
                        "layer of {j} needed before {i} was resolved"
                    )))
                    .map(|x| x + 1)
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .ok_or(FlowError::InconsistentFlow(format!("s({i}) is empty")))?;
        layers.insert(i, l);
    }
    Ok(GFlow { g: s, layers })
}

/// Finds a maximally delayed gflow by GF(2) layer peeling: `V_k` collects
/// every unprocessed vertex `u` for which some `K` within the processed
/// non-inputs satisfies `Odd(K) ∩ unprocessed = {u}`. Returns `None` when
/// no gflow exists. The layering of the result is the unique maximally
/// delayed layering.
pub fn max_delayed_gflow(g: &OpenGraph) -> Option<GFlow> {
    let mut processed: VertexSet = g.outputs().iter().copied().collect();
    let mut layers: BTreeMap<Vertex, usize> = BTreeMap::new();
    let mut corr: BTreeMap<Vertex, VertexSet> = BTreeMap::new();
    for &o in g.outputs() {
        layers.insert(o, 0);
    }
    let mut k = 0usize;
    while processed.len() < g.n() {
        k += 1;
        let candidates: Vec<Vertex> = processed
            .iter()
            .filter(|&v| !g.is_input(v))
            .collect();
        let unprocessed: Vec<Vertex> = g
            .vertices()
            .iter()
            .copied()
            .filter(|&v| !processed.contains(v))
            .collect();
        let mut found: Vec<(Vertex, VertexSet)> = Vec::new();
        for &u in &unprocessed {
            if let Some(kset) = solve_correcting_set(g, &candidates, &unprocessed, u) {
                found.push((u, kset));
            }
        }
        if found.is_empty() {
            return None;
        }
        for (u, kset) in found {
            layers.insert(u, k);
            corr.insert(u, kset);
            processed.insert(u);
        }
    }
    Some(GFlow { g: corr, layers })
}

/// Solves `Odd(K) ∩ unprocessed = {u}` for `K ⊆ candidates` by Gaussian
/// elimination over GF(2). Rows are the unprocessed vertices, columns the
/// candidate correctors.
fn solve_correcting_set(
    g: &OpenGraph,
    candidates: &[Vertex],
    unprocessed: &[Vertex],
    u: Vertex,
) -> Option<VertexSet> {
    let rows = unprocessed.len();
    let cols = candidates.len();
    // Augmented matrix, one u64 word would limit sizes; use Vec<bool> rows
    // (graphs here are small).
    let mut m: Vec<Vec<bool>> = Vec::with_capacity(rows);
    for &z in unprocessed {
        let mut row: Vec<bool> = candidates
            .iter()
            .map(|&w| g.adjacent(z, w).expect("vertices exist"))
            .collect();
        row.push(z == u);
        m.push(row);
    }
    // Forward elimination.
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        if let Some(pr) = (r..rows).find(|&i| m[i][c]) {
            m.swap(r, pr);
            for i in 0..rows {
                if i != r && m[i][c] {
                    let (head, tail) = if i < r {
                        let (a, b) = m.split_at_mut(r);
                        (&mut a[i], &b[0])
                    } else {
                        let (a, b) = m.split_at_mut(i);
                        (&mut b[0], &a[r])
                    };
                    for j in 0..=cols {
                        head[j] ^= tail[j];
                    }
                }
            }
            pivot_cols.push(c);
            r += 1;
            if r == rows {
                break;
            }
        }
    }
    // Inconsistent if a zero row has RHS 1.
    for row in &m[r..] {
        if row[cols] {
            return None;
        }
    }
    let mut k = VertexSet::new();
    for (pr, &pc) in pivot_cols.iter().enumerate() {
        if m[pr][cols] {
            k.insert(candidates[pc]);
        }
    }
    Some(k)
}

/// Brute-force maximally delayed gflow oracle (≤ ~8 non-outputs):
/// identical peeling, but each layer's correcting sets are found by
/// exhaustive subset enumeration instead of linear algebra.
pub fn brute_force_max_delayed_gflow(g: &OpenGraph) -> Option<GFlow> {
    let mut processed: VertexSet = g.outputs().iter().copied().collect();
    let mut layers: BTreeMap<Vertex, usize> = BTreeMap::new();
    let mut corr: BTreeMap<Vertex, VertexSet> = BTreeMap::new();
    for &o in g.outputs() {
        layers.insert(o, 0);
    }
    let mut k = 0usize;
    while processed.len() < g.n() {
        k += 1;
        let candidates: Vec<Vertex> = processed
            .iter()
            .filter(|&v| !g.is_input(v))
            .collect();
        let unprocessed: Vec<Vertex> = g
            .vertices()
            .iter()
            .copied()
            .filter(|&v| !processed.contains(v))
            .collect();
        assert!(candidates.len() <= 20, "brute-force oracle is for small graphs");
        let mut found: Vec<(Vertex, VertexSet)> = Vec::new();
        for &u in &unprocessed {
            'subsets: for mask in 0u32..(1 << candidates.len()) {
                let kset: VertexSet = candidates
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &w)| w)
                    .collect();
                let odd = g.odd_neighborhood(&kset).expect("subset of vertices");
                let mut ok = odd.contains(u);
                for &z in &unprocessed {
                    if z != u && odd.contains(z) {
                        ok = false;
                    }
                }
                if ok {
                    found.push((u, kset));
                    break 'subsets;
                }
            }
        }
        if found.is_empty() {
            return None;
        }
        for (u, kset) in found {
            layers.insert(u, k);
            corr.insert(u, kset);
            processed.insert(u);
        }
    }
    Some(GFlow { g: corr, layers })
}

/// Builds the reduced open graph of an SSF: removes
/// `R = { v ∈ O : f⁻¹(v) ∈ V₁ }` (with its incident edges) and replaces
/// the outputs by `O' = (V₁ ∪ O) \ R`. Satisfies `|O| = |O'|`.
pub fn reduced_open_graph(
    g: &OpenGraph,
    ssf: &GFlow,
    fl: &Flow,
) -> Result<(OpenGraph, VertexSet), FlowError> {
    for (&i, _) in &fl.f {
        if !g.contains(i) {
            return Err(FlowError::InconsistentFlow(format!("unknown vertex {i}")));
        }
    }
    for (&i, _) in &ssf.g {
        if !g.contains(i) || g.is_output(i) {
            return Err(FlowError::InconsistentFlow(format!(
                "gflow domain vertex {i} is not a measured vertex"
            )));
        }
    }
    let v1: VertexSet = ssf
        .layers
        .iter()
        .filter(|&(_, &l)| l == 1)
        .map(|(&v, _)| v)
        .collect();
    let mut removed = VertexSet::new();
    for &o in g.outputs() {
        if let Some((&i, _)) = fl.f.iter().find(|&(_, &fi)| fi == o) {
            if v1.contains(i) {
                removed.insert(o);
            }
        }
    }
    let verts: Vec<Vertex> = g
        .vertices()
        .iter()
        .copied()
        .filter(|v| !removed.contains(*v))
        .collect();
    let edges: Vec<(Vertex, Vertex)> = g
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| !removed.contains(a) && !removed.contains(b))
        .collect();
    let outputs: Vec<Vertex> = g
        .vertices()
        .iter()
        .copied()
        .filter(|&v| (v1.contains(v) || g.is_output(v)) && !removed.contains(v))
        .collect();
    let inputs: Vec<Vertex> = g.inputs().to_vec();
    let reduced = OpenGraph::new(verts, edges, inputs, outputs)?;
    Ok((reduced, removed))
}

/// A stepwise influencing path from `i` to `j ∈ s(i)`:
/// `[i, f(i), f⁻¹(k₂), k₂, …, f⁻¹(j), j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluencingPath {
    pub vertices: Vec<Vertex>,
}

/// Constructs a stepwise influencing path backward from `(f⁻¹(j), j)`,
/// stepping through even-placed members of `s(i)` until `f(i)` is reached.
pub fn influencing_path(
    fl: &Flow,
    ssf: &GFlow,
    g: &OpenGraph,
    i: Vertex,
    j: Vertex,
) -> Result<InfluencingPath, FlowError> {
    let si = ssf
        .g
        .get(&i)
        .ok_or(FlowError::InconsistentFlow(format!("{i} is not measured")))?;
    if !si.contains(j) {
        return Err(FlowError::NotInCorrectingSet { i, j });
    }
    let finv = fl.f_inverse();
    let fi = *fl
        .f
        .get(&i)
        .ok_or(FlowError::InconsistentFlow(format!("f({i}) undefined")))?;
    // BFS over even-placed vertices, from j back to f(i). m' precedes m
    // iff m' ∈ s(i) ∩ N(f⁻¹(m)).
    let mut pred: HashMap<Vertex, Vertex> = HashMap::new();
    let mut queue = VecDeque::from([j]);
    let mut seen = VertexSet::new();
    seen.insert(j);
    while let Some(m) = queue.pop_front() {
        if m == fi {
            break;
        }
        let fm = *finv
            .get(&m)
            .ok_or(FlowError::InconsistentFlow(format!("f⁻¹({m}) undefined")))?;
        let mut nexts: Vec<Vertex> = g
            .neighbors(fm)?
            .intersection(si)
            .iter()
            .filter(|&mp| mp != m && !seen.contains(mp))
            .collect();
        nexts.sort_unstable();
        for mp in nexts {
            seen.insert(mp);
            pred.insert(mp, m);
            queue.push_back(mp);
        }
    }
    if !seen.contains(fi) {
        return Err(FlowError::NoPath { i, j });
    }
    // Walk forward from f(i) to j, expanding each even vertex m to the
    // pair (f⁻¹(m), m); the first pair is (i, f(i)).
    let mut evens = vec![fi];
    let mut cur = fi;
    while cur != j {
        cur = pred[&cur];
        evens.push(cur);
    }
    let mut vertices = Vec::with_capacity(2 * evens.len());
    for (idx, &m) in evens.iter().enumerate() {
        if idx == 0 {
            vertices.push(i);
        } else {
            vertices.push(finv[&m]);
        }
        vertices.push(m);
    }
    Ok(InfluencingPath { vertices })
}

/// Validates a stepwise influencing path against its definition.
pub fn verify_influencing_path(
    path: &InfluencingPath,
    fl: &Flow,
    ssf: &GFlow,
    g: &OpenGraph,
    i: Vertex,
    j: Vertex,
) -> bool {
    let p = &path.vertices;
    if p.len() < 2 || p.len() % 2 != 0 || p[0] != i || p[p.len() - 1] != j {
        return false;
    }
    if fl.f.get(&i) != Some(&p[1]) {
        return false;
    }
    let si = match ssf.g.get(&i) {
        Some(s) => s,
        None => return false,
    };
    for w in p.windows(2) {
        match g.adjacent(w[0], w[1]) {
            Ok(true) => {}
            _ => return false,
        }
    }
    for (idx, &v) in p.iter().enumerate() {
        if idx % 2 == 1 {
            // Even-placed in the paper's 1-based counting.
            if !si.contains(v) {
                return false;
            }
        } else if fl.f.get(&v) != Some(&p[idx + 1]) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Full 7-vertex path, I={1}, O={7}: f(i) = i+1.
    fn full_path() -> (OpenGraph, Flow) {
        let g = OpenGraph::path(1..=7, [1], [7]).unwrap();
        let fl = find_flow(&g).unwrap();
        (g, fl)
    }

    /// The Eq.-15 line-graph fixture: 7-vertex path, measured {1,3,5,6}.
    fn line_graph() -> (OpenGraph, Flow) {
        let g = OpenGraph::path(1..=7, [1], [2, 4, 7]).unwrap();
        let fl = find_flow(&g).unwrap();
        (g, fl)
    }

    /// Example-1 graph: 8 vertices, I={1,4,7}, O={3,6,8}.
    pub(crate) fn example1() -> (OpenGraph, Flow) {
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
        (g, fl)
    }

    #[test]
    fn find_flow_full_path() {
        let (_, fl) = full_path();
        for i in 1..=6 {
            assert_eq!(fl.f[&i], i + 1);
        }
        // Total order 1 ≺ 2 ≺ … ≺ 6: layers 6..1, outputs 0.
        assert_eq!(fl.depth(), 6);
        assert_eq!(fl.layers[&1], 6);
        assert_eq!(fl.layers[&7], 0);
    }

    #[test]
    fn find_flow_no_flow_gflow_only() {
        // Bipartite graph whose input/output adjacency matrix is
        // invertible over GF(2) (so a depth-1 gflow exists) but every
        // output has several unmatched neighbours, so no flow exists.
        let g = OpenGraph::new(
            1..=6,
            [(1, 4), (1, 5), (2, 4), (2, 5), (2, 6), (3, 5), (3, 6)],
            [1, 2, 3],
            [4, 5, 6],
        )
        .unwrap();
        assert!(find_flow(&g).is_none());
        let gf = max_delayed_gflow(&g).unwrap();
        assert_eq!(gf.depth(), 1);
        assert!(verify_gflow(&g, &gf).is_empty());
    }

    #[test]
    fn find_flow_trivial() {
        let g = OpenGraph::new([1, 2], [(1, 2)], [1, 2], [1, 2]).unwrap();
        let fl = find_flow(&g).unwrap();
        assert!(fl.f.is_empty());
        assert_eq!(fl.depth(), 0);
    }

    #[test]
    fn verify_flow_examples() {
        let (g, fl) = full_path();
        assert!(verify_flow(&g, &fl).is_empty());
        // Corrupt F3: f(1) = 3 is not adjacent to 1.
        let mut bad = fl.clone();
        bad.f.insert(1, 3);
        assert!(verify_flow(&g, &bad)
            .iter()
            .any(|v| matches!(v, FlowViolation::F3 { i: 1 })));
        // Non-injective map.
        let mut dup = fl.clone();
        dup.f.insert(1, 3);
        dup.f.insert(2, 3);
        assert!(verify_flow(&g, &dup)
            .iter()
            .any(|v| matches!(v, FlowViolation::NotInjective { .. })));
    }

    #[test]
    fn example1_flow_depth_and_order() {
        let (_, fl) = example1();
        assert_eq!(fl.f, BTreeMap::from([(1, 2), (2, 3), (4, 5), (5, 6), (7, 8)]));
        assert_eq!(fl.depth(), 5);
        // Total order 1 ≺ 4 ≺ 2 ≺ 5 ≺ 7.
        let order: Vec<Vertex> = (1..=5)
            .rev()
            .map(|k| {
                let l = fl.layer(k);
                assert_eq!(l.len(), 1);
                let v = l.iter().next().unwrap();
                v
            })
            .collect();
        assert_eq!(order, vec![1, 4, 2, 5, 7]);
    }

    #[test]
    fn zpath_parities_line_graph() {
        let (g, fl) = full_path();
        let t = zpath_parities(&fl, &g).unwrap();
        // Single Z-path 1 → 3 (via the Z-correction of measurement 1).
        assert!(t.parity(1, 3));
        assert!(!t.parity(1, 2));
        for i in g.non_outputs().iter() {
            assert!(t.parity(i, i));
        }
        // Agreement with brute force.
        assert_eq!(t, zpath_parities_bruteforce(&fl, &g).unwrap());
    }

    #[test]
    fn ssf_line_graph_correcting_sets() {
        let (g, fl) = line_graph();
        assert_eq!(fl.f, BTreeMap::from([(1, 2), (3, 4), (5, 6), (6, 7)]));
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        assert_eq!(ssf.g[&1], VertexSet::from([2, 4, 6]));
        assert_eq!(ssf.g[&3], VertexSet::from([4, 6]));
        assert_eq!(ssf.g[&5], VertexSet::from([6]));
        assert_eq!(ssf.g[&6], VertexSet::from([7]));
        assert!(verify_gflow(&g, &ssf).is_empty());
    }

    #[test]
    fn ssf_example1_layers() {
        let (g, fl) = example1();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        assert_eq!(ssf.g[&1], VertexSet::from([2, 3, 5]));
        assert_eq!(ssf.g[&2], VertexSet::from([3, 6]));
        assert_eq!(ssf.g[&4], VertexSet::from([3, 5, 6, 8]));
        assert_eq!(ssf.g[&5], VertexSet::from([6, 8]));
        assert_eq!(ssf.g[&7], VertexSet::from([8]));
        assert_eq!(ssf.depth(), 2);
        // Delayed layering: V1 = {2,5,7}, V2 = {1,4}.
        assert_eq!(ssf.layer(1), VertexSet::from([2, 5, 7]));
        assert_eq!(ssf.layer(2), VertexSet::from([1, 4]));
        assert!(verify_gflow(&g, &ssf).is_empty());
    }

    #[test]
    fn max_delayed_matches_ssf_on_fixtures() {
        for (g, fl) in [full_path(), example1()] {
            let ssf = ssf_from_flow(&fl, &g).unwrap();
            let md = max_delayed_gflow(&g).unwrap();
            assert_eq!(ssf.layers, md.layers);
            assert!(verify_gflow(&g, &md).is_empty());
            let bf = brute_force_max_delayed_gflow(&g).unwrap();
            assert_eq!(md.layers, bf.layers);
        }
    }

    #[test]
    fn no_gflow_detected() {
        // Two inputs, one output, disconnected input: no gflow.
        let g = OpenGraph::new([1, 2, 3], [(1, 3)], [1, 2], [3]).unwrap();
        assert!(max_delayed_gflow(&g).is_none());
        assert!(brute_force_max_delayed_gflow(&g).is_none());
    }

    #[test]
    fn odd_si_intersection_is_singleton() {
        for (g, fl) in [full_path(), line_graph(), example1()] {
            let ssf = ssf_from_flow(&fl, &g).unwrap();
            for (&i, si) in &ssf.g {
                let odd = g.odd_neighborhood(si).unwrap();
                let measured_odd: VertexSet =
                    odd.iter().filter(|&v| !g.is_output(v)).collect();
                assert_eq!(measured_odd, VertexSet::from([i]));
            }
        }
    }

    #[test]
    fn reduced_open_graph_keeps_output_count_and_flow() {
        let (g, fl) = example1();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        let (reduced, removed) = reduced_open_graph(&g, &ssf, &fl).unwrap();
        assert_eq!(reduced.outputs().len(), g.outputs().len());
        // V1 = {2,5,7}; f(2)=3, f(5)=6, f(7)=8 are all outputs → R={3,6,8}.
        assert_eq!(removed, VertexSet::from([3, 6, 8]));
        let rf = find_flow(&reduced).unwrap();
        assert!(verify_flow(&reduced, &rf).is_empty());
    }

    #[test]
    fn influencing_path_line_graph() {
        let (g, fl) = full_path();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        // s(1) = {2, 4, 6} on the full path.
        assert_eq!(ssf.g[&1], VertexSet::from([2, 4, 6]));
        let p = influencing_path(&fl, &ssf, &g, 1, 2).unwrap();
        assert_eq!(p.vertices, vec![1, 2]);
        let p = influencing_path(&fl, &ssf, &g, 1, 4).unwrap();
        assert_eq!(p.vertices, vec![1, 2, 3, 4]);
        let p = influencing_path(&fl, &ssf, &g, 1, 6).unwrap();
        assert_eq!(p.vertices, vec![1, 2, 3, 4, 5, 6]);
        for j in [2, 4, 6] {
            let p = influencing_path(&fl, &ssf, &g, 1, j).unwrap();
            assert!(verify_influencing_path(&p, &fl, &ssf, &g, 1, j));
        }
        assert!(matches!(
            influencing_path(&fl, &ssf, &g, 1, 3),
            Err(FlowError::NotInCorrectingSet { .. })
        ));
    }

    #[test]
    fn flow_json_round_trip() {
        let (_, fl) = example1();
        let fl2 = Flow::from_json(&fl.to_json()).unwrap();
        assert_eq!(fl, fl2);
        let (g, _) = example1();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        let ssf2 = GFlow::from_json(&ssf.to_json()).unwrap();
        assert_eq!(ssf, ssf2);
    }
}
