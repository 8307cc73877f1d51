//! Python bindings for the MBQC pattern optimizer.
//!
//! The binding layer mirrors the core pipeline: circuits and graphs go
//! in, flows and signal-shifted gflows come out, and the extended /
//! compact translations are exposed as first-class objects. Rich data
//! (gates, commands, traces) crosses the boundary as JSON-compatible
//! structures via each object's `to_json`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use mbqc_opt::circuit as core_circuit;
use mbqc_opt::compactify as core_compactify;
use mbqc_opt::flow as core_flow;
use mbqc_opt::graph as core_graph;
use mbqc_opt::pattern as core_pattern;
use mbqc_opt::sim as core_sim;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_json(text: &str) -> PyResult<serde_json::Value> {
    serde_json::from_str(text).map_err(value_err)
}

/// An open graph (G, I, O).
#[pyclass(name = "OpenGraph")]
#[derive(Clone)]
struct PyOpenGraph {
    inner: core_graph::OpenGraph,
}

#[pymethods]
impl PyOpenGraph {
    #[new]
    fn new(
        vertices: Vec<usize>,
        edges: Vec<(usize, usize)>,
        inputs: Vec<usize>,
        outputs: Vec<usize>,
    ) -> PyResult<Self> {
        Ok(PyOpenGraph {
            inner: core_graph::OpenGraph::new(vertices, edges, inputs, outputs)
                .map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyOpenGraph {
            inner: core_graph::OpenGraph::from_json(&parse_json(text)?).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn vertices(&self) -> Vec<usize> {
        self.inner.vertices().to_vec()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn inputs(&self) -> Vec<usize> {
        self.inner.inputs().to_vec()
    }

    fn outputs(&self) -> Vec<usize> {
        self.inner.outputs().to_vec()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        Ok(self
            .inner
            .neighbors(v)
            .map_err(value_err)?
            .iter()
            .collect())
    }

    fn max_degree(&self) -> usize {
        self.inner.max_degree()
    }

    fn __repr__(&self) -> String {
        format!(
            "OpenGraph(n={}, inputs={:?}, outputs={:?})",
            self.inner.n(),
            self.inner.inputs(),
            self.inner.outputs()
        )
    }
}

/// A causal flow: successor map f and layering.
#[pyclass(name = "Flow")]
#[derive(Clone)]
struct PyFlow {
    inner: core_flow::Flow,
}

#[pymethods]
impl PyFlow {
    fn f(&self) -> BTreeMap<usize, usize> {
        self.inner.f.clone()
    }

    fn layers(&self) -> BTreeMap<usize, usize> {
        self.inner.layers.clone()
    }

    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Flow(depth={}, f={:?})", self.inner.depth(), self.inner.f)
    }
}

/// A generalized flow: correcting-set map and layering.
#[pyclass(name = "GFlow")]
#[derive(Clone)]
struct PyGFlow {
    inner: core_flow::GFlow,
}

#[pymethods]
impl PyGFlow {
    fn g(&self) -> BTreeMap<usize, Vec<usize>> {
        self.inner
            .g
            .iter()
            .map(|(&i, s)| (i, s.iter().collect()))
            .collect()
    }

    fn layers(&self) -> BTreeMap<usize, usize> {
        self.inner.layers.clone()
    }

    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!("GFlow(depth={})", self.inner.depth())
    }
}

/// A circuit over J, CZ, E, CX, and Pauli-Z gates.
#[pyclass(name = "Circuit")]
#[derive(Clone)]
struct PyCircuit {
    inner: core_circuit::Circuit,
}

#[pymethods]
impl PyCircuit {
    /// Builds a plain input circuit from gate tuples:
    /// ("J", wire, num, den) or ("CZ", a, b).
    #[staticmethod]
    fn build(wires: Vec<usize>, gates: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let mut b = core_circuit::CircuitBuilder::on_inputs(wires);
        for gate in gates {
            let kind: String = gate.get_item(0)?.extract()?;
            match kind.as_str() {
                "J" => {
                    let wire: usize = gate.get_item(1)?.extract()?;
                    let num: i64 = gate.get_item(2)?.extract()?;
                    let den: i64 = gate.get_item(3)?.extract()?;
                    b = b.j(wire, core_pattern::Angle::new(num, den).map_err(value_err)?);
                }
                "CZ" => {
                    let x: usize = gate.get_item(1)?.extract()?;
                    let y: usize = gate.get_item(2)?.extract()?;
                    b = b.cz(x, y);
                }
                other => {
                    return Err(value_err(format!(
                        "unsupported gate kind {other:?} (expected J or CZ)"
                    )))
                }
            }
        }
        Ok(PyCircuit {
            inner: b.build().map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCircuit {
            inner: core_circuit::Circuit::from_json(&parse_json(text)?).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn wires(&self) -> Vec<usize> {
        self.inner.wires().to_vec()
    }

    fn gate_count(&self) -> usize {
        self.inner.gates().len()
    }

    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn j_layers(&self) -> usize {
        core_compactify::j_depth(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(wires={:?}, gates={})",
            self.inner.wires(),
            self.inner.gates().len()
        )
    }
}

/// A measurement pattern over an open graph.
#[pyclass(name = "Pattern")]
#[derive(Clone)]
struct PyPattern {
    inner: core_pattern::MeasurementPattern,
}

#[pymethods]
impl PyPattern {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPattern {
            inner: core_pattern::MeasurementPattern::from_json(&parse_json(text)?)
                .map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn space(&self) -> PyOpenGraph {
        PyOpenGraph {
            inner: self.inner.space.clone(),
        }
    }

    fn depth(&self) -> PyResult<usize> {
        core_pattern::pattern_depth(&self.inner).map_err(runtime_err)
    }

    fn measurement_rounds(&self) -> PyResult<Vec<Vec<usize>>> {
        Ok(core_pattern::measurement_rounds(&self.inner)
            .map_err(runtime_err)?
            .iter()
            .map(|s| s.iter().collect())
            .collect())
    }

    fn command_count(&self) -> usize {
        self.inner.commands.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Pattern(n={}, commands={})",
            self.inner.space.n(),
            self.inner.commands.len()
        )
    }
}

/// The sliced extended circuit of a signal-shifted pattern.
#[pyclass(name = "ExtendedCircuit")]
#[derive(Clone)]
struct PyExtended {
    inner: core_circuit::SlicedCircuit,
}

#[pymethods]
impl PyExtended {
    fn flatten(&self) -> PyCircuit {
        PyCircuit {
            inner: self.inner.flatten(),
        }
    }

    fn j_layers(&self) -> usize {
        self.inner.jlayers()
    }

    fn wires(&self) -> Vec<usize> {
        self.inner.wires.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "ExtendedCircuit(wires={}, layers={})",
            self.inner.wires.len(),
            self.inner.layers.len()
        )
    }
}

#[pyfunction]
fn find_flow(g: &PyOpenGraph) -> Option<PyFlow> {
    core_flow::find_flow(&g.inner).map(|fl| PyFlow { inner: fl })
}

#[pyfunction]
fn max_delayed_gflow(g: &PyOpenGraph) -> Option<PyGFlow> {
    core_flow::max_delayed_gflow(&g.inner).map(|gf| PyGFlow { inner: gf })
}

#[pyfunction]
fn ssf_from_flow(fl: &PyFlow, g: &PyOpenGraph) -> PyResult<PyGFlow> {
    Ok(PyGFlow {
        inner: core_flow::ssf_from_flow(&fl.inner, &g.inner).map_err(runtime_err)?,
    })
}

#[pyfunction]
fn pattern_from_circuit(c: &PyCircuit) -> PyResult<PyPattern> {
    Ok(PyPattern {
        inner: core_pattern::pattern_from_circuit(&c.inner).map_err(value_err)?,
    })
}

/// Builds the flow pattern of a graph with angles {vertex: (num, den)}.
#[pyfunction]
fn flow_pattern(
    fl: &PyFlow,
    g: &PyOpenGraph,
    angles: BTreeMap<usize, (i64, i64)>,
) -> PyResult<PyPattern> {
    let angles: BTreeMap<usize, core_pattern::Angle> = angles
        .into_iter()
        .map(|(v, (num, den))| Ok((v, core_pattern::Angle::new(num, den).map_err(value_err)?)))
        .collect::<PyResult<_>>()?;
    Ok(PyPattern {
        inner: core_pattern::flow_pattern(&fl.inner, &g.inner, &angles).map_err(value_err)?,
    })
}

#[pyfunction]
fn signal_shift(p: &PyPattern, fl: &PyFlow) -> PyResult<PyPattern> {
    Ok(PyPattern {
        inner: core_pattern::signal_shift(&p.inner, &fl.inner).map_err(runtime_err)?,
    })
}

#[pyfunction]
fn pauli_simplify(p: &PyPattern) -> PyResult<PyPattern> {
    Ok(PyPattern {
        inner: core_pattern::pauli_simplify(&p.inner).map_err(runtime_err)?,
    })
}

#[pyfunction]
fn extended_translation(p: &PyPattern, ssf: &PyGFlow) -> PyResult<PyExtended> {
    Ok(PyExtended {
        inner: core_circuit::extended_translation(&p.inner, &ssf.inner).map_err(runtime_err)?,
    })
}

/// Compactifies an extended circuit; returns the compact circuit and
/// the rewrite trace as a JSON string.
#[pyfunction]
#[pyo3(signature = (ext, fl, ssf, allow_partial = false))]
fn compactify(
    ext: &PyExtended,
    fl: &PyFlow,
    ssf: &PyGFlow,
    allow_partial: bool,
) -> PyResult<(PyCircuit, String)> {
    let (c, trace) = core_compactify::compactify_with(&ext.inner, &fl.inner, &ssf.inner, allow_partial)
        .map_err(runtime_err)?;
    Ok((PyCircuit { inner: c }, trace.to_json().to_string()))
}

/// Runs the whole pipeline on an input circuit and returns the compact
/// circuit together with a statistics dict.
#[pyfunction]
#[pyo3(signature = (c, verify = true))]
fn optimize(py: Python<'_>, c: &PyCircuit, verify: bool) -> PyResult<(PyCircuit, PyObject)> {
    let p = core_pattern::pattern_from_circuit(&c.inner).map_err(value_err)?;
    let g = p.space.clone();
    let fl = core_flow::find_flow(&g)
        .ok_or_else(|| value_err("circuit graph has no causal flow"))?;
    let shifted = core_pattern::signal_shift(&p, &fl).map_err(runtime_err)?;
    let ssf = core_flow::ssf_from_flow(&fl, &g).map_err(runtime_err)?;
    let ext = core_circuit::extended_translation(&shifted, &ssf).map_err(runtime_err)?;
    let (compact, _) =
        core_compactify::compactify(&ext, &fl, &ssf).map_err(runtime_err)?;
    let mut equivalent: Option<bool> = None;
    if verify {
        let ends: Vec<usize> = c
            .inner
            .wires()
            .iter()
            .map(|&w| core_compactify::chain_end(&fl.f, w))
            .collect();
        let u = core_sim::circuit_unitary_with_order(&compact, &ends).map_err(runtime_err)?;
        let uo = core_sim::circuit_unitary(&c.inner).map_err(runtime_err)?;
        let ok = core_sim::equivalent_up_to_phase(&u, &uo, 1e-9).map_err(runtime_err)?;
        if !ok {
            return Err(runtime_err("optimized circuit is not equivalent to the input"));
        }
        equivalent = Some(true);
    }
    let stats = pyo3::types::PyDict::new_bound(py);
    stats.set_item("wires_before", g.n())?;
    stats.set_item("wires_after", compact.wires().len())?;
    stats.set_item("flow_depth", fl.depth())?;
    stats.set_item("ssf_depth", ssf.depth())?;
    stats.set_item("j_layers", core_compactify::j_depth(&compact))?;
    stats.set_item("depth", compact.depth())?;
    stats.set_item("degree", g.max_degree())?;
    stats.set_item("verified", equivalent)?;
    Ok((PyCircuit { inner: compact }, stats.into()))
}

/// Checks two circuits on the same wires for unitary equality up to a
/// global phase.
#[pyfunction]
#[pyo3(signature = (a, b, tol = 1e-9))]
fn circuits_equivalent(a: &PyCircuit, b: &PyCircuit, tol: f64) -> PyResult<bool> {
    let ua = core_sim::circuit_unitary(&a.inner).map_err(runtime_err)?;
    let ub = core_sim::circuit_unitary(&b.inner).map_err(runtime_err)?;
    core_sim::equivalent_up_to_phase(&ua, &ub, tol).map_err(runtime_err)
}

#[pymodule]
fn _mbqcopt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOpenGraph>()?;
    m.add_class::<PyFlow>()?;
    m.add_class::<PyGFlow>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyPattern>()?;
    m.add_class::<PyExtended>()?;
    m.add_function(wrap_pyfunction!(find_flow, m)?)?;
    m.add_function(wrap_pyfunction!(max_delayed_gflow, m)?)?;
    m.add_function(wrap_pyfunction!(ssf_from_flow, m)?)?;
    m.add_function(wrap_pyfunction!(pattern_from_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(flow_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(signal_shift, m)?)?;
    m.add_function(wrap_pyfunction!(pauli_simplify, m)?)?;
    m.add_function(wrap_pyfunction!(extended_translation, m)?)?;
    m.add_function(wrap_pyfunction!(compactify, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(circuits_equivalent, m)?)?;
    Ok(())
}
