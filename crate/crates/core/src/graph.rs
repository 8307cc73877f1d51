//! Open graphs: undirected graphs with designated (ordered) input and output
//! vertex sequences, plus the GF(2) odd-neighbourhood algebra that flow
//! finding and gflow verification are built on.
//!
//! Vertices carry arbitrary non-negative ids externally; internally they are
//! remapped to dense indices `0..n` so neighbourhoods can be stored as
//! bitsets and odd-neighbourhood computations reduce to XORs.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// External vertex id. Ids are arbitrary non-negative integers; the graph
/// keeps a dense remapping internally.
pub type Vertex = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(Vertex),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(Vertex),
    #[error("self-loop on vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(Vertex, Vertex),
    #[error("duplicate {role} vertex {vertex}")]
    DuplicateBoundary { role: &'static str, vertex: Vertex },
}

/// A set of vertices of an open graph, in external ids.
///
/// Backed by an ordered set so iteration order (and therefore every
/// derived artifact: layer listings, canonical command order, JSON output)
/// is deterministic. The `toggle` operation gives the mod-2 semantics used
/// by signal sets and correcting sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexSet(BTreeSet<Vertex>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: Vertex) -> bool {
        self.0.remove(&v)
    }

    /// Mod-2 insertion: adding a member twice removes it.
    pub fn toggle(&mut self, v: Vertex) {
        if !self.0.insert(v) {
            self.0.remove(&v);
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn symmetric_difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.symmetric_difference(&other.0).copied().collect())
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.intersection(&other.0).copied().collect())
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<T: IntoIterator<Item = Vertex>>(iter: T) -> Self {
        VertexSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[Vertex; N]> for VertexSet {
    fn from(vs: [Vertex; N]) -> Self {
        vs.into_iter().collect()
    }
}

/// An open graph `(G, I, O)`: an undirected simple graph together with
/// ordered input and output vertex sequences. `I` and `O` may intersect.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenGraph {
    /// Sorted external ids; position is the dense index.
    verts: Vec<Vertex>,
    /// External id -> dense index.
    index: HashMap<Vertex, usize>,
    /// Dense adjacency bitsets.
    adj: Vec<FixedBitSet>,
    /// Normalized edge list (u < v, sorted), external ids.
    edges: Vec<(Vertex, Vertex)>,
    /// Ordered input sequence, external ids.
    inputs: Vec<Vertex>,
    /// Ordered output sequence, external ids.
    outputs: Vec<Vertex>,
    input_set: VertexSet,
    output_set: VertexSet,
}

impl OpenGraph {
    pub fn new(
        vertices: impl IntoIterator<Item = Vertex>,
        edges: impl IntoIterator<Item = (Vertex, Vertex)>,
        inputs: impl IntoIterator<Item = Vertex>,
        outputs: impl IntoIterator<Item = Vertex>,
    ) -> Result<Self, GraphError> {
        let mut verts: Vec<Vertex> = Vec::new();
        let mut seen = BTreeSet::new();
        for v in vertices {
            if !seen.insert(v) {
                return Err(GraphError::DuplicateVertex(v));
            }
            verts.push(v);
        }
        verts.sort_unstable();
        let index: HashMap<Vertex, usize> =
            verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = verts.len();
        let mut adj = vec![FixedBitSet::with_capacity(n); n];
        let mut norm_edges: Vec<(Vertex, Vertex)> = Vec::new();
        for (a, b) in edges {
            let (ia, ib) = (
                *index.get(&a).ok_or(GraphError::UnknownVertex(a))?,
                *index.get(&b).ok_or(GraphError::UnknownVertex(b))?,
            );
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if adj[ia].contains(ib) {
                return Err(GraphError::DuplicateEdge(a.min(b), a.max(b)));
            }
            adj[ia].insert(ib);
            adj[ib].insert(ia);
            norm_edges.push((a.min(b), a.max(b)));
        }
        norm_edges.sort_unstable();
        let check_boundary = |role, vs: Vec<Vertex>| -> Result<Vec<Vertex>, GraphError> {
            let mut seen = BTreeSet::new();
            for &v in &vs {
                if !index.contains_key(&v) {
                    return Err(GraphError::UnknownVertex(v));
                }
                if !seen.insert(v) {
                    return Err(GraphError::DuplicateBoundary { role, vertex: v });
                }
            }
            Ok(vs)
        };
        let inputs = check_boundary("input", inputs.into_iter().collect())?;
        let outputs = check_boundary("output", outputs.into_iter().collect())?;
        let input_set = inputs.iter().copied().collect();
        let output_set = outputs.iter().copied().collect();
        Ok(OpenGraph {
            verts,
            index,
            adj,
            edges: norm_edges,
            inputs,
            outputs,
            input_set,
            output_set,
        })
    }

    /// Path graph on the given consecutive vertex ids, handy for fixtures.
    pub fn path(
        ids: std::ops::RangeInclusive<Vertex>,
        inputs: impl IntoIterator<Item = Vertex>,
        outputs: impl IntoIterator<Item = Vertex>,
    ) -> Result<Self, GraphError> {
        let verts: Vec<Vertex> = ids.collect();
        let edges: Vec<(Vertex, Vertex)> = verts.windows(2).map(|w| (w[0], w[1])).collect();
        Self::new(verts, edges, inputs, outputs)
    }

    pub fn n(&self) -> usize {
        self.verts.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.verts
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.index.contains_key(&v)
    }

    /// Normalized (u < v) edge list in ascending order.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn inputs(&self) -> &[Vertex] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vertex] {
        &self.outputs
    }

    pub fn is_input(&self, v: Vertex) -> bool {
        self.input_set.contains(v)
    }

    pub fn is_output(&self, v: Vertex) -> bool {
        self.output_set.contains(v)
    }

    /// Measured vertices `O^C`, ascending.
    pub fn non_outputs(&self) -> VertexSet {
        self.verts
            .iter()
            .copied()
            .filter(|&v| !self.is_output(v))
            .collect()
    }

    /// Non-input vertices `I^C` (the prepared qubits), ascending.
    pub fn non_inputs(&self) -> VertexSet {
        self.verts
            .iter()
            .copied()
            .filter(|&v| !self.is_input(v))
            .collect()
    }

    pub fn adjacent(&self, a: Vertex, b: Vertex) -> Result<bool, GraphError> {
        let ia = self.idx(a)?;
        let ib = self.idx(b)?;
        Ok(self.adj[ia].contains(ib))
    }

    pub fn degree(&self, v: Vertex) -> Result<usize, GraphError> {
        Ok(self.adj[self.idx(v)?].count_ones(..))
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones(..)).max().unwrap_or(0)
    }

    /// Neighbourhood `N(v)`.
    pub fn neighbors(&self, v: Vertex) -> Result<VertexSet, GraphError> {
        let i = self.idx(v)?;
        Ok(self.adj[i].ones().map(|j| self.verts[j]).collect())
    }

    /// Odd neighbourhood `Odd(K) = { v : |N(v) ∩ K| odd }`, computed as the
    /// GF(2) sum of the members' neighbourhood bitsets.
    pub fn odd_neighborhood(&self, k: &VertexSet) -> Result<VertexSet, GraphError> {
        let mut acc = FixedBitSet::with_capacity(self.n());
        for v in k.iter() {
            let i = self.idx(v)?;
            acc ^= &self.adj[i];
        }
        Ok(acc.ones().map(|j| self.verts[j]).collect())
    }

    /// Neighbourhood of a set, `N(K) = ∪_{v∈K} N(v)`.
    pub fn neighborhood_of_set(&self, k: &VertexSet) -> Result<VertexSet, GraphError> {
        let mut acc = FixedBitSet::with_capacity(self.n());
        for v in k.iter() {
            acc.union_with(&self.adj[self.idx(v)?]);
        }
        Ok(acc.ones().map(|j| self.verts[j]).collect())
    }

    pub(crate) fn idx(&self, v: Vertex) -> Result<usize, GraphError> {
        self.index.get(&v).copied().ok_or(GraphError::UnknownVertex(v))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GraphJson {
            vertices: self.verts.clone(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        })
        .expect("graph serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, String> {
        let j: GraphJson =
            serde_json::from_value(value.clone()).map_err(|e| format!("bad graph JSON: {e}"))?;
        OpenGraph::new(
            j.vertices,
            j.edges.iter().map(|&[a, b]| (a, b)),
            j.inputs,
            j.outputs,
        )
        .map_err(|e| e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<Vertex>,
    edges: Vec<[Vertex; 2]>,
    inputs: Vec<Vertex>,
    outputs: Vec<Vertex>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> OpenGraph {
        OpenGraph::path(1..=3, [1], [3]).unwrap()
    }

    #[test]
    fn neighbors_path() {
        let g = path3();
        assert_eq!(g.neighbors(2).unwrap(), VertexSet::from([1, 3]));
        assert_eq!(g.neighbors(1).unwrap(), VertexSet::from([2]));
    }

    #[test]
    fn neighbors_isolated() {
        let g = OpenGraph::new([0, 1], [], [0], [1]).unwrap();
        assert!(g.neighbors(0).unwrap().is_empty());
    }

    #[test]
    fn neighbors_line_graph_fixture() {
        // 7-vertex path of the line-graph fixture.
        let g = OpenGraph::path(1..=7, [1], [2, 4, 7]).unwrap();
        assert_eq!(g.neighbors(4).unwrap(), VertexSet::from([3, 5]));
    }

    #[test]
    fn unknown_vertex_errors() {
        let g = path3();
        assert_eq!(g.neighbors(9), Err(GraphError::UnknownVertex(9)));
    }

    #[test]
    fn odd_neighborhood_examples() {
        let g = path3();
        assert!(g.odd_neighborhood(&VertexSet::new()).unwrap().is_empty());
        // K = {1,3}: vertex 2 sees both members (even), 1 and 3 see none.
        assert!(g
            .odd_neighborhood(&VertexSet::from([1, 3]))
            .unwrap()
            .is_empty());
        assert_eq!(
            g.odd_neighborhood(&VertexSet::from([2])).unwrap(),
            VertexSet::from([1, 3])
        );
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            OpenGraph::new([1, 2], [(1, 1)], [], []),
            Err(GraphError::SelfLoop(1))
        );
        assert_eq!(
            OpenGraph::new([1, 2], [(1, 2), (2, 1)], [], []),
            Err(GraphError::DuplicateEdge(1, 2))
        );
        assert_eq!(
            OpenGraph::new([1, 2], [(1, 3)], [], []),
            Err(GraphError::UnknownVertex(3))
        );
        assert_eq!(
            OpenGraph::new([1, 1], [], [], []),
            Err(GraphError::DuplicateVertex(1))
        );
        assert_eq!(
            OpenGraph::new([1], [], [1, 1], []),
            Err(GraphError::DuplicateBoundary {
                role: "input",
                vertex: 1
            })
        );
    }

    #[test]
    fn json_round_trip() {
        let g = OpenGraph::new([5, 1, 3], [(3, 1), (5, 3)], [1], [5]).unwrap();
        let j = g.to_json();
        let g2 = OpenGraph::from_json(&j).unwrap();
        assert_eq!(g, g2);
        // Edges are normalized u < v on write.
        assert_eq!(g.edges(), &[(1, 3), (3, 5)]);
    }

    #[test]
    fn vertex_set_toggle_is_mod2() {
        let mut s = VertexSet::new();
        s.toggle(4);
        s.toggle(4);
        assert!(s.is_empty());
        s.toggle(4);
        assert!(s.contains(4));
    }
}
