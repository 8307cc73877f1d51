//! Measurement-pattern IR: commands, exact angles, runnability checking,
//! standardization, signal shifting, flow-pattern generation, and the
//! Pauli-measurement simplification rules.

use crate::circuit::{Circuit, Gate, Init};
use crate::flow::Flow;
use crate::graph::{GraphError, OpenGraph, Vertex, VertexSet};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("pattern is not runnable: {0}")]
    NotRunnable(String),
    #[error("unsupported gate in circuit translation: {0}")]
    UnsupportedGate(String),
    #[error("missing measurement angle for vertex {0}")]
    MissingAngle(Vertex),
    #[error("pattern is not a flow pattern: {0}")]
    NotFlowForm(String),
    #[error("pattern is not signal-shifted: {0}")]
    NotShifted(String),
    #[error("angle denominator must be nonzero")]
    ZeroDenominator,
    #[error("bad pattern JSON: {0}")]
    Json(String),
}

/// An exact rational multiple of π: θ = (num/den)·π, reduced, with
/// `den > 0` and `num` normalized into (−den, den] (θ ∈ (−π, π]).
/// Pauli predicates are exact: θ ≡ 0 (mod π) iff den = 1, θ ≡ π/2
/// (mod π) iff den = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Angle {
    num: i64,
    den: i64,
}

impl Angle {
    pub fn new(num: i64, den: i64) -> Result<Self, PatternError> {
        if den == 0 {
            return Err(PatternError::ZeroDenominator);
        }
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = num_integer::gcd(num.abs(), den);
        if g > 1 {
            num /= g;
            den /= g;
        }
        // Normalize modulo 2π into (−π, π].
        num = num.rem_euclid(2 * den);
        if num > den {
            num -= 2 * den;
        }
        Ok(Angle { num, den })
    }

    pub fn zero() -> Self {
        Angle { num: 0, den: 1 }
    }

    pub fn pi() -> Self {
        Angle { num: 1, den: 1 }
    }

    pub fn half_pi() -> Self {
        Angle { num: 1, den: 2 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn neg(&self) -> Self {
        Angle::new(-self.num, self.den).expect("den nonzero")
    }

    pub fn add_pi(&self) -> Self {
        Angle::new(self.num + self.den, self.den).expect("den nonzero")
    }

    /// The adapted angle (−1)^s·θ + t·π.
    pub fn adapted(&self, s: bool, t: bool) -> Self {
        let a = if s { self.neg() } else { *self };
        if t {
            a.add_pi()
        } else {
            a
        }
    }

    /// θ ≡ 0 (mod π).
    pub fn is_zero_mod_pi(&self) -> bool {
        self.den == 1
    }

    /// θ ≡ π/2 (mod π).
    pub fn is_half_pi_mod_pi(&self) -> bool {
        self.den == 2
    }

    pub fn radians(&self) -> f64 {
        self.num as f64 / self.den as f64 * std::f64::consts::PI
    }

    pub fn to_json(&self) -> Value {
        json!({"num": self.num, "den": self.den})
    }

    pub fn from_json(v: &Value) -> Result<Self, PatternError> {
        let num = v["num"]
            .as_i64()
            .ok_or_else(|| PatternError::Json("angle.num".into()))?;
        let den = v["den"]
            .as_i64()
            .ok_or_else(|| PatternError::Json("angle.den".into()))?;
        Angle::new(num, den)
    }
}

/// A pattern command, stored in execution order (the paper's right-to-left
/// products read left-to-right here). Dependency sets hold measured-qubit
/// ids and are mod-2: signals cancel in pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// N_i — prepare qubit i in |+⟩.
    Prepare(Vertex),
    /// E_ij — entangle (CZ); normalized i < j.
    Entangle(Vertex, Vertex),
    /// _t[M_i^θ]^s — destructive measurement with X-deps s and Z-deps t.
    Measure {
        qubit: Vertex,
        angle: Angle,
        sdep: VertexSet,
        tdep: VertexSet,
    },
    /// X_i^s
    CorrX { qubit: Vertex, dep: VertexSet },
    /// Z_i^s
    CorrZ { qubit: Vertex, dep: VertexSet },
    /// S_i^t — signal shift; transient, never emitted by the rewrites here.
    Shift { qubit: Vertex, dep: VertexSet },
}

impl Command {
    pub fn entangle(a: Vertex, b: Vertex) -> Self {
        if a < b {
            Command::Entangle(a, b)
        } else {
            Command::Entangle(b, a)
        }
    }

    pub fn measure(qubit: Vertex, angle: Angle) -> Self {
        Command::Measure {
            qubit,
            angle,
            sdep: VertexSet::new(),
            tdep: VertexSet::new(),
        }
    }

    pub fn measure_deps(
        qubit: Vertex,
        angle: Angle,
        sdep: impl IntoIterator<Item = Vertex>,
        tdep: impl IntoIterator<Item = Vertex>,
    ) -> Self {
        Command::Measure {
            qubit,
            angle,
            sdep: sdep.into_iter().collect(),
            tdep: tdep.into_iter().collect(),
        }
    }

    pub fn corr_x(qubit: Vertex, dep: impl IntoIterator<Item = Vertex>) -> Self {
        Command::CorrX {
            qubit,
            dep: dep.into_iter().collect(),
        }
    }

    pub fn corr_z(qubit: Vertex, dep: impl IntoIterator<Item = Vertex>) -> Self {
        Command::CorrZ {
            qubit,
            dep: dep.into_iter().collect(),
        }
    }
}

/// A measurement pattern over an open graph. Commands are stored in
/// execution order and must satisfy runnability: every non-input is
/// prepared before use, nothing acts on a measured qubit, and no
/// dependency references an outcome that does not yet exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementPattern {
    pub space: OpenGraph,
    pub commands: Vec<Command>,
}

impl MeasurementPattern {
    pub fn new(space: OpenGraph, commands: Vec<Command>) -> Result<Self, PatternError> {
        let p = MeasurementPattern { space, commands };
        p.validate()?;
        Ok(p)
    }

    /// Runnability and well-formedness check.
    pub fn validate(&self) -> Result<(), PatternError> {
        let g = &self.space;
        let err = |m: String| Err(PatternError::NotRunnable(m));
        let mut prepared: VertexSet = g.inputs().iter().copied().collect();
        let mut measured = VertexSet::new();
        let mut entangled: Vec<(Vertex, Vertex)> = Vec::new();
        let check_dep = |dep: &VertexSet, measured: &VertexSet| -> Result<(), PatternError> {
            for d in dep.iter() {
                if !measured.contains(d) {
                    return Err(PatternError::NotRunnable(format!(
                        "dependency on unmeasured qubit {d}"
                    )));
                }
            }
            Ok(())
        };
        let active = |q: Vertex, prepared: &VertexSet, measured: &VertexSet| {
            g.contains(q) && prepared.contains(q) && !measured.contains(q)
        };
        for cmd in &self.commands {
            match cmd {
                Command::Prepare(q) => {
                    if !g.contains(*q) || g.is_input(*q) {
                        return err(format!("cannot prepare {q}"));
                    }
                    if prepared.contains(*q) {
                        return err(format!("qubit {q} prepared twice"));
                    }
                    prepared.insert(*q);
                }
                Command::Entangle(a, b) => {
                    if a == b {
                        return err(format!("self-entanglement on {a}"));
                    }
                    if !active(*a, &prepared, &measured) || !active(*b, &prepared, &measured) {
                        return err(format!("entangle ({a},{b}) on unavailable qubit"));
                    }
                    if !g.adjacent(*a, *b)? {
                        return err(format!("entangle ({a},{b}) is not a graph edge"));
                    }
                    let key = (*a.min(b), *a.max(b));
                    if entangled.contains(&key) {
                        return err(format!("duplicate entangle ({a},{b})"));
                    }
                    entangled.push(key);
                }
                Command::Measure {
                    qubit, sdep, tdep, ..
                } => {
                    if g.is_output(*qubit) {
                        return err(format!("measurement on output qubit {qubit}"));
                    }
                    if !active(*qubit, &prepared, &measured) {
                        return err(format!("measurement on unavailable qubit {qubit}"));
                    }
                    check_dep(sdep, &measured)?;
                    check_dep(tdep, &measured)?;
                    measured.insert(*qubit);
                }
                Command::CorrX { qubit, dep } | Command::CorrZ { qubit, dep } => {
                    if !active(*qubit, &prepared, &measured) {
                        return err(format!("correction on unavailable qubit {qubit}"));
                    }
                    check_dep(dep, &measured)?;
                }
                Command::Shift { qubit, dep } => {
                    if !measured.contains(*qubit) {
                        return err(format!("shift on unmeasured qubit {qubit}"));
                    }
                    check_dep(dep, &measured)?;
                }
            }
        }
        for &v in g.vertices() {
            if !g.is_input(v) && !prepared.contains(v) {
                return err(format!("non-input {v} never prepared"));
            }
            if !g.is_output(v) && !measured.contains(v) {
                return err(format!("non-output {v} never measured"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let cmds: Vec<Value> = self
            .commands
            .iter()
            .map(|c| match c {
                Command::Prepare(q) => json!({"kind":"N","qubit":q}),
                Command::Entangle(a, b) => json!({"kind":"E","qubits":[a,b]}),
                Command::Measure {
                    qubit,
                    angle,
                    sdep,
                    tdep,
                } => json!({
                    "kind":"M","qubit":qubit,"angle":angle.to_json(),
                    "sdep":sdep.iter().collect::<Vec<_>>(),
                    "tdep":tdep.iter().collect::<Vec<_>>(),
                }),
                Command::CorrX { qubit, dep } => {
                    json!({"kind":"X","qubit":qubit,"dep":dep.iter().collect::<Vec<_>>()})
                }
                Command::CorrZ { qubit, dep } => {
                    json!({"kind":"Z","qubit":qubit,"dep":dep.iter().collect::<Vec<_>>()})
                }
                Command::Shift { qubit, dep } => {
                    json!({"kind":"S","qubit":qubit,"dep":dep.iter().collect::<Vec<_>>()})
                }
            })
            .collect();
        json!({"space": self.space.to_json(), "commands": cmds})
    }

    pub fn from_json(v: &Value) -> Result<Self, PatternError> {
        let space = OpenGraph::from_json(&v["space"]).map_err(PatternError::Json)?;
        let arr = v["commands"]
            .as_array()
            .ok_or_else(|| PatternError::Json("commands must be an array".into()))?;
        let qubit = |c: &Value| -> Result<Vertex, PatternError> {
            c["qubit"]
                .as_u64()
                .map(|q| q as Vertex)
                .ok_or_else(|| PatternError::Json("qubit".into()))
        };
        let set = |c: &Value, key: &str| -> Result<VertexSet, PatternError> {
            match &c[key] {
                Value::Null => Ok(VertexSet::new()),
                Value::Array(xs) => xs
                    .iter()
                    .map(|x| {
                        x.as_u64()
                            .map(|q| q as Vertex)
                            .ok_or_else(|| PatternError::Json(format!("{key} entry")))
                    })
                    .collect(),
                _ => Err(PatternError::Json(format!("{key} must be an array"))),
            }
        };
        let mut commands = Vec::with_capacity(arr.len());
        for c in arr {
            let kind = c["kind"]
                .as_str()
                .ok_or_else(|| PatternError::Json("command.kind".into()))?;
            commands.push(match kind {
                "N" => Command::Prepare(qubit(c)?),
                "E" => {
                    let qs = c["qubits"]
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .ok_or_else(|| PatternError::Json("E.qubits".into()))?;
                    let a = qs[0].as_u64().ok_or_else(|| PatternError::Json("E.qubits".into()))?;
                    let b = qs[1].as_u64().ok_or_else(|| PatternError::Json("E.qubits".into()))?;
                    Command::entangle(a as Vertex, b as Vertex)
                }
                "M" => Command::Measure {
                    qubit: qubit(c)?,
                    angle: Angle::from_json(&c["angle"])?,
                    sdep: set(c, "sdep")?,
                    tdep: set(c, "tdep")?,
                },
                "X" => Command::CorrX {
                    qubit: qubit(c)?,
                    dep: set(c, "dep")?,
                },
                "Z" => Command::CorrZ {
                    qubit: qubit(c)?,
                    dep: set(c, "dep")?,
                },
                "S" => Command::Shift {
                    qubit: qubit(c)?,
                    dep: set(c, "dep")?,
                },
                other => return Err(PatternError::Json(format!("unknown command kind {other:?}"))),
            });
        }
        MeasurementPattern::new(space, commands)
    }
}

/// Dependency-level normal form of a pattern: per-measurement angle and
/// X/Z dependency sets, plus pending output corrections. Shift commands
/// are resolved away; corrections on measured qubits are absorbed into
/// the measurement dependencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DepForm {
    pub meas: BTreeMap<Vertex, MeasInfo>,
    pub corr_x: BTreeMap<Vertex, VertexSet>,
    pub corr_z: BTreeMap<Vertex, VertexSet>,
    pub edges: Vec<(Vertex, Vertex)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct MeasInfo {
    pub angle: Angle,
    pub sdep: VertexSet,
    pub tdep: VertexSet,
}

impl DepForm {
    /// Eager measurement rounds: round(i) = 1 + max round over sdep ∪ tdep,
    /// with independent measurements in round 1.
    pub fn rounds(&self) -> BTreeMap<Vertex, usize> {
        let mut rounds: BTreeMap<Vertex, usize> = BTreeMap::new();
        // Runnability guarantees the dependency DAG goes strictly forward,
        // so iterating until fixpoint terminates; do memoized recursion.
        fn round_of(
            q: Vertex,
            meas: &BTreeMap<Vertex, MeasInfo>,
            rounds: &mut BTreeMap<Vertex, usize>,
        ) -> usize {
            if let Some(&r) = rounds.get(&q) {
                return r;
            }
            let info = &meas[&q];
            let r = info
                .sdep
                .union(&info.tdep)
                .iter()
                .map(|d| round_of(d, meas, rounds))
                .max()
                .unwrap_or(0)
                + 1;
            rounds.insert(q, r);
            r
        }
        for &q in self.meas.keys().collect::<Vec<_>>() {
            round_of(q, &self.meas, &mut rounds);
        }
        rounds
    }

    /// Toggles every member of `t` in every dependency set that contains
    /// `k` — the substitution s_k ↦ s_k + t performed by a shift command.
    pub fn substitute(&mut self, k: Vertex, t: &VertexSet) {
        for info in self.meas.values_mut() {
            if info.sdep.contains(k) {
                for x in t.iter() {
                    info.sdep.toggle(x);
                }
            }
            if info.tdep.contains(k) {
                for x in t.iter() {
                    info.tdep.toggle(x);
                }
            }
        }
        for frame in self.corr_x.values_mut().chain(self.corr_z.values_mut()) {
            if frame.contains(k) {
                for x in t.iter() {
                    frame.toggle(x);
                }
            }
        }
    }
}

fn xor_into(dst: &mut VertexSet, src: &VertexSet) {
    for x in src.iter() {
        dst.toggle(x);
    }
}

/// Computes the dependency normal form by a single left-to-right pass
/// applying the standardization rewrites: X-corrections pushed past
/// entanglements spawn Z-corrections on the partner qubit, corrections
/// hitting their own measurement merge into its dependency sets, and
/// shift commands are resolved into substitutions on later commands.
pub(crate) fn dep_form(p: &MeasurementPattern) -> Result<DepForm, PatternError> {
    p.validate()?;
    let mut shifts: Vec<(Vertex, VertexSet)> = Vec::new();
    let resolve = |dep: &VertexSet, shifts: &[(Vertex, VertexSet)]| -> VertexSet {
        let mut d = dep.clone();
        for (i, t) in shifts {
            if d.contains(*i) {
                for x in t.iter() {
                    d.toggle(x);
                }
            }
        }
        d
    };
    let mut frame_x: BTreeMap<Vertex, VertexSet> = BTreeMap::new();
    let mut frame_z: BTreeMap<Vertex, VertexSet> = BTreeMap::new();
    let mut meas: BTreeMap<Vertex, MeasInfo> = BTreeMap::new();
    let mut edges: Vec<(Vertex, Vertex)> = Vec::new();
    for cmd in &p.commands {
        match cmd {
            Command::Prepare(_) => {}
            Command::Entangle(a, b) => {
                let xa = frame_x.get(a).cloned().unwrap_or_default();
                let xb = frame_x.get(b).cloned().unwrap_or_default();
                if !xa.is_empty() {
                    xor_into(frame_z.entry(*b).or_default(), &xa);
                }
                if !xb.is_empty() {
                    xor_into(frame_z.entry(*a).or_default(), &xb);
                }
                edges.push((*a.min(b), *a.max(b)));
            }
            Command::Measure {
                qubit,
                angle,
                sdep,
                tdep,
            } => {
                let mut s = resolve(sdep, &shifts);
                let mut t = resolve(tdep, &shifts);
                if let Some(fx) = frame_x.remove(qubit) {
                    xor_into(&mut s, &fx);
                }
                if let Some(fz) = frame_z.remove(qubit) {
                    xor_into(&mut t, &fz);
                }
                meas.insert(
                    *qubit,
                    MeasInfo {
                        angle: *angle,
                        sdep: s,
                        tdep: t,
                    },
                );
            }
            Command::CorrX { qubit, dep } => {
                xor_into(frame_x.entry(*qubit).or_default(), &resolve(dep, &shifts));
            }
            Command::CorrZ { qubit, dep } => {
                xor_into(frame_z.entry(*qubit).or_default(), &resolve(dep, &shifts));
            }
            Command::Shift { qubit, dep } => {
                shifts.push((*qubit, resolve(dep, &shifts)));
            }
        }
    }
    frame_x.retain(|_, d| !d.is_empty());
    frame_z.retain(|_, d| !d.is_empty());
    edges.sort_unstable();
    Ok(DepForm {
        meas,
        corr_x: frame_x,
        corr_z: frame_z,
        edges,
    })
}

/// Emits the canonical command sequence of a dependency form:
/// preparations by id, entanglements lexicographic, measurements by
/// (round, id), then per-output X-then-Z corrections by id.
pub(crate) fn emit_canonical(
    space: &OpenGraph,
    form: &DepForm,
) -> Result<MeasurementPattern, PatternError> {
    let mut commands: Vec<Command> = Vec::new();
    for v in space.non_inputs().iter() {
        commands.push(Command::Prepare(v));
    }
    for &(a, b) in &form.edges {
        commands.push(Command::Entangle(a, b));
    }
    let rounds = form.rounds();
    let mut order: Vec<Vertex> = form.meas.keys().copied().collect();
    order.sort_by_key(|q| (rounds[q], *q));
    for q in order {
        let info = &form.meas[&q];
        commands.push(Command::Measure {
            qubit: q,
            angle: info.angle,
            sdep: info.sdep.clone(),
            tdep: info.tdep.clone(),
        });
    }
    let outputs: Vec<Vertex> = form
        .corr_x
        .keys()
        .chain(form.corr_z.keys())
        .copied()
        .collect::<VertexSet>()
        .iter()
        .collect();
    for q in outputs {
        if let Some(d) = form.corr_x.get(&q) {
            commands.push(Command::CorrX {
                qubit: q,
                dep: d.clone(),
            });
        }
        if let Some(d) = form.corr_z.get(&q) {
            commands.push(Command::CorrZ {
                qubit: q,
                dep: d.clone(),
            });
        }
    }
    MeasurementPattern::new(space.clone(), commands)
}

/// Rewrites a pattern into standard form (preparations, entanglements,
/// measurements, corrections) with canonical ordering, applying the
/// standardization rules to fixpoint. Semantics-preserving.
pub fn standardize(p: &MeasurementPattern) -> Result<MeasurementPattern, PatternError> {
    emit_canonical(&p.space, &dep_form(p)?)
}

/// Builds the flow pattern of `(g, f, ≺_f)` with the given measurement
/// angles: per measured vertex i in flow order, M_i^{α_i} followed by
/// X_{f(i)}^{s_i} and Z_j^{s_i} for j ∈ N(f(i)) \ {i}.
pub fn flow_pattern(
    fl: &Flow,
    g: &OpenGraph,
    angles: &BTreeMap<Vertex, Angle>,
) -> Result<MeasurementPattern, PatternError> {
    let mut commands: Vec<Command> = Vec::new();
    for v in g.non_inputs().iter() {
        commands.push(Command::Prepare(v));
    }
    let mut edges = g.edges().to_vec();
    edges.sort_unstable();
    for (a, b) in edges {
        commands.push(Command::Entangle(a, b));
    }
    let mut order: Vec<Vertex> = g.non_outputs().iter().collect();
    order.sort_by_key(|v| (std::cmp::Reverse(fl.layers.get(v).copied().unwrap_or(0)), *v));
    for i in order {
        let angle = *angles.get(&i).ok_or(PatternError::MissingAngle(i))?;
        commands.push(Command::measure(i, angle));
        let fi = *fl
            .f
            .get(&i)
            .ok_or_else(|| PatternError::NotFlowForm(format!("f({i}) undefined")))?;
        commands.push(Command::corr_x(fi, [i]));
        for j in g.neighbors(fi)?.iter() {
            if j != i {
                commands.push(Command::corr_z(j, [i]));
            }
        }
    }
    MeasurementPattern::new(g.clone(), commands)
}

/// Signal-shifts a flow pattern: eliminates all Z-dependencies on
/// measured qubits by resolving the shift commands they generate,
/// distributing each eliminated dependency set into every later
/// dependency set that mentions the shifted signal. The result is the
/// signal-shifted pattern in canonical order: measurements carry only
/// X-dependencies and explicit corrections remain only on outputs.
pub fn signal_shift(
    p: &MeasurementPattern,
    fl: &Flow,
) -> Result<MeasurementPattern, PatternError> {
    let mut form = dep_form(p)?;
    check_flow_form(&form, fl, &p.space)?;
    shift_form(&mut form, fl);
    emit_canonical(&p.space, &form)
}

/// Verifies that a dependency form is exactly the flow pattern of `fl`.
fn check_flow_form(form: &DepForm, fl: &Flow, g: &OpenGraph) -> Result<(), PatternError> {
    let finv = fl.f_inverse();
    for (&j, info) in &form.meas {
        let expected_s: VertexSet = finv.get(&j).copied().into_iter().collect();
        if info.sdep != expected_s {
            return Err(PatternError::NotFlowForm(format!(
                "unexpected X-dependencies on measurement {j}"
            )));
        }
        let mut expected_t = VertexSet::new();
        for (&i, &fi) in &fl.f {
            if i != j {
                if let Ok(true) = g.adjacent(fi, j) {
                    expected_t.insert(i);
                }
            }
        }
        if info.tdep != expected_t {
            return Err(PatternError::NotFlowForm(format!(
                "unexpected Z-dependencies on measurement {j}"
            )));
        }
    }
    for &o in g.outputs() {
        let expected_x: VertexSet = finv.get(&o).copied().into_iter().collect();
        let got_x = form.corr_x.get(&o).cloned().unwrap_or_default();
        let mut expected_z = VertexSet::new();
        for (&i, &fi) in &fl.f {
            if i != o {
                if let Ok(true) = g.adjacent(fi, o) {
                    expected_z.insert(i);
                }
            }
        }
        let got_z = form.corr_z.get(&o).cloned().unwrap_or_default();
        if got_x != expected_x || got_z != expected_z {
            return Err(PatternError::NotFlowForm(format!(
                "unexpected corrections on output {o}"
            )));
        }
    }
    Ok(())
}

/// The shift loop: processes measured qubits from earliest to latest in
/// ≺_f and removes their Z-dependencies by substitution.
fn shift_form(form: &mut DepForm, fl: &Flow) {
    let mut order: Vec<Vertex> = form.meas.keys().copied().collect();
    order.sort_by_key(|v| (std::cmp::Reverse(fl.layers.get(v).copied().unwrap_or(0)), *v));
    for k in order {
        let t = std::mem::take(&mut form.meas.get_mut(&k).expect("measured").tdep);
        if !t.is_empty() {
            form.substitute(k, &t);
        }
    }
}

/// Which Pauli simplification rules to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliRules {
    /// M^{π/2}_i X^s_i = M^{π/2}_i Z^s_i (then re-shifted away).
    pub half_pi: bool,
    /// M^0_i X^s_i = M^0_i.
    pub zero: bool,
}

impl PauliRules {
    pub fn all() -> Self {
        PauliRules {
            half_pi: true,
            zero: true,
        }
    }
}

/// Applies the Pauli-measurement rules to a signal-shifted pattern. An
/// X-dependency on a θ ≡ 0 (mod π) measurement is dropped; one on a
/// θ ≡ π/2 (mod π) measurement becomes a Z-dependency and is immediately
/// shifted away, substituting into later dependencies. Measurements are
/// processed in round order so substitutions land before the affected
/// measurement's own rule is considered.
pub fn pauli_simplify_with(
    p: &MeasurementPattern,
    rules: PauliRules,
) -> Result<MeasurementPattern, PatternError> {
    let mut form = dep_form(p)?;
    for (q, info) in &form.meas {
        if !info.tdep.is_empty() {
            return Err(PatternError::NotShifted(format!(
                "measurement {q} still carries Z-dependencies"
            )));
        }
    }
    let rounds = form.rounds();
    let mut order: Vec<Vertex> = form.meas.keys().copied().collect();
    order.sort_by_key(|q| (rounds[q], *q));
    for i in order {
        let info = form.meas.get_mut(&i).expect("measured");
        if rules.zero && info.angle.is_zero_mod_pi() {
            info.sdep = VertexSet::new();
        } else if rules.half_pi && info.angle.is_half_pi_mod_pi() {
            let t = std::mem::take(&mut info.sdep);
            if !t.is_empty() {
                form.substitute(i, &t);
            }
        }
    }
    emit_canonical(&p.space, &form)
}

/// Applies both Pauli rules.
pub fn pauli_simplify(p: &MeasurementPattern) -> Result<MeasurementPattern, PatternError> {
    pauli_simplify_with(p, PauliRules::all())
}

/// Number of measurement rounds: the longest chain in the dependency DAG
/// among measurements (corrections on measured qubits are absorbed into
/// dependencies first; the final output-correction round is not counted).
pub fn pattern_depth(p: &MeasurementPattern) -> Result<usize, PatternError> {
    let form = dep_form(p)?;
    Ok(form.rounds().values().copied().max().unwrap_or(0))
}

/// The eager measurement schedule: rounds of simultaneously measurable
/// qubits, earliest first.
pub fn measurement_rounds(p: &MeasurementPattern) -> Result<Vec<VertexSet>, PatternError> {
    let form = dep_form(p)?;
    let rounds = form.rounds();
    let depth = rounds.values().copied().max().unwrap_or(0);
    Ok((1..=depth)
        .map(|r| {
            rounds
                .iter()
                .filter(|&(_, &x)| x == r)
                .map(|(&v, _)| v)
                .collect()
        })
        .collect())
}

/// Translates a J/CZ circuit into a measurement pattern: every J(θ) on a
/// wire appends a fresh vertex with the two-qubit building block
/// (prepare, entangle, measure at −θ, X-correct), every CZ entangles the
/// current frontier vertices of its two wires. Consecutive duplicate CZs
/// on the same frontier pair cancel. The result has flow and |I| = |O|.
pub fn pattern_from_circuit(c: &Circuit) -> Result<MeasurementPattern, PatternError> {
    for w in c.wires() {
        if c.initial(*w) != Some(Init::Input) {
            return Err(PatternError::UnsupportedGate(format!(
                "wire {w} is not an input wire"
            )));
        }
    }
    if !c.measured().is_empty() {
        return Err(PatternError::UnsupportedGate(
            "input circuit must not measure wires".into(),
        ));
    }
    let mut frontier: BTreeMap<usize, Vertex> = BTreeMap::new();
    let mut next_id: Vertex = 1;
    let mut inputs = Vec::new();
    for &w in c.wires() {
        frontier.insert(w, next_id);
        inputs.push(next_id);
        next_id += 1;
    }
    let mut verts: Vec<Vertex> = inputs.clone();
    let mut edges: Vec<(Vertex, Vertex)> = Vec::new();
    // Commands per measured vertex, assembled at the end in creation order.
    let mut commands: Vec<Command> = Vec::new();
    let toggle_edge = |edges: &mut Vec<(Vertex, Vertex)>,
                           commands: &mut Vec<Command>,
                           a: Vertex,
                           b: Vertex| {
        let key = (a.min(b), a.max(b));
        if let Some(pos) = edges.iter().position(|&e| e == key) {
            edges.remove(pos);
            let cmd = Command::entangle(a, b);
            let cpos = commands
                .iter()
                .rposition(|c| *c == cmd)
                .expect("edge has a matching command");
            commands.remove(cpos);
        } else {
            edges.push(key);
            commands.push(Command::entangle(a, b));
        }
    };
    for gate in c.gates() {
        match gate {
            Gate::J { wire, angle } => {
                let u = frontier[wire];
                let v = next_id;
                next_id += 1;
                verts.push(v);
                commands.push(Command::Prepare(v));
                toggle_edge(&mut edges, &mut commands, u, v);
                commands.push(Command::measure(u, angle.neg()));
                commands.push(Command::corr_x(v, [u]));
                frontier.insert(*wire, v);
            }
            Gate::CZ { control, target } | Gate::E {
                a: control,
                b: target,
            } => {
                let u = frontier[control];
                let v = frontier[target];
                toggle_edge(&mut edges, &mut commands, u, v);
            }
            other => {
                return Err(PatternError::UnsupportedGate(format!("{other:?}")));
            }
        }
    }
    let outputs: Vec<Vertex> = c.wires().iter().map(|w| frontier[w]).collect();
    let space = OpenGraph::new(verts, edges, inputs, outputs)?;
    MeasurementPattern::new(space, commands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flow::find_flow;

    #[test]
    fn angle_normalization() {
        assert_eq!(Angle::new(2, 8).unwrap(), Angle::new(1, 4).unwrap());
        assert_eq!(Angle::new(3, 2).unwrap(), Angle::new(-1, 2).unwrap());
        assert_eq!(Angle::new(-1, 1).unwrap(), Angle::pi());
        assert_eq!(Angle::new(5, 1).unwrap(), Angle::pi());
        assert!(Angle::new(1, 0).is_err());
        assert!(Angle::zero().is_zero_mod_pi());
        assert!(Angle::pi().is_zero_mod_pi());
        assert!(Angle::half_pi().is_half_pi_mod_pi());
        assert!(Angle::new(-1, 2).unwrap().is_half_pi_mod_pi());
        assert!(!Angle::new(1, 4).unwrap().is_half_pi_mod_pi());
        // Adaptation: (−1)^s θ + t π.
        let th = Angle::new(1, 4).unwrap();
        assert_eq!(th.adapted(true, false), Angle::new(-1, 4).unwrap());
        assert_eq!(th.adapted(false, true), Angle::new(5, 4).unwrap());
        assert_eq!(th.adapted(true, true), Angle::new(3, 4).unwrap());
    }

    /// The two-qubit building block: X_2^{s_1} M_1^{−θ} E_{12} N_2.
    #[test]
    fn two_qubit_block_is_runnable_and_fixed_by_rewrites() {
        let g = OpenGraph::new([1, 2], [(1, 2)], [1], [2]).unwrap();
        let th = Angle::new(1, 4).unwrap();
        let p = MeasurementPattern::new(
            g,
            vec![
                Command::Prepare(2),
                Command::entangle(1, 2),
                Command::measure(1, th.neg()),
                Command::corr_x(2, [1]),
            ],
        )
        .unwrap();
        let std = standardize(&p).unwrap();
        assert_eq!(std.commands, p.commands);
        let fl = find_flow(&p.space).unwrap();
        let shifted = signal_shift(&p, &fl).unwrap();
        assert_eq!(shifted.commands, p.commands);
        assert_eq!(pattern_depth(&p).unwrap(), 1);
    }

    #[test]
    fn validate_rejects_bad_patterns() {
        let g = OpenGraph::new([1, 2], [(1, 2)], [1], [2]).unwrap();
        // Dependency on a not-yet-measured qubit.
        let bad = MeasurementPattern {
            space: g.clone(),
            commands: vec![
                Command::Prepare(2),
                Command::entangle(1, 2),
                Command::corr_x(2, [1]),
                Command::measure(1, Angle::zero()),
            ],
        };
        assert!(matches!(bad.validate(), Err(PatternError::NotRunnable(_))));
        // Output measured.
        let bad = MeasurementPattern {
            space: g.clone(),
            commands: vec![
                Command::Prepare(2),
                Command::entangle(1, 2),
                Command::measure(1, Angle::zero()),
                Command::measure(2, Angle::zero()),
            ],
        };
        assert!(bad.validate().is_err());
        // Missing measurement.
        let bad = MeasurementPattern {
            space: g,
            commands: vec![Command::Prepare(2), Command::entangle(1, 2)],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn standardize_pushes_x_past_entangle() {
        // X_1^{s0-like} before E_{12} gains Z_2 on the partner. Use a
        // 3-vertex path with 0 measured first to provide the signal.
        let g = OpenGraph::new([0, 1, 2], [(0, 1), (1, 2)], [0], [2]).unwrap();
        let p = MeasurementPattern::new(
            g,
            vec![
                Command::Prepare(1),
                Command::Prepare(2),
                Command::entangle(0, 1),
                Command::measure(0, Angle::zero()),
                Command::corr_x(1, [0]),
                Command::entangle(1, 2),
                Command::measure(1, Angle::zero()),
            ],
        )
        .unwrap();
        let form = dep_form(&p).unwrap();
        // X_1^{s_0} merged into M_1's sdep; pushing it past E_{12} left
        // Z_2^{s_0} pending on the output.
        assert_eq!(form.meas[&1].sdep, VertexSet::from([0]));
        assert_eq!(form.corr_z[&2], VertexSet::from([0]));
        assert!(form.corr_x.is_empty());
    }

    #[test]
    fn line_graph_shift_matches_published_pattern() {
        let (g, fl, angles) = fixtures::line_graph7();
        let p = flow_pattern(&fl, &g, &angles).unwrap();
        assert_eq!(pattern_depth(&p).unwrap(), 4);
        let shifted = signal_shift(&p, &fl).unwrap();
        let expected = fixtures::line_graph7_shifted();
        assert_eq!(
            shifted.commands,
            standardize(&expected).unwrap().commands
        );
        assert_eq!(pattern_depth(&shifted).unwrap(), 2);
    }

    #[test]
    fn example1_shift_matches_published_pattern() {
        let (g, fl, angles) = fixtures::example1();
        let p = flow_pattern(&fl, &g, &angles).unwrap();
        assert_eq!(pattern_depth(&p).unwrap(), 5);
        let shifted = signal_shift(&p, &fl).unwrap();
        let expected = fixtures::example1_shifted();
        assert_eq!(shifted.commands, standardize(&expected).unwrap().commands);
        assert_eq!(pattern_depth(&shifted).unwrap(), 2);
        let rounds = measurement_rounds(&shifted).unwrap();
        assert_eq!(rounds, vec![VertexSet::from([1, 4, 7]), VertexSet::from([2, 5])]);
    }

    #[test]
    fn shift_rejects_non_flow_pattern() {
        let (g, fl, angles) = fixtures::line_graph7();
        let mut p = flow_pattern(&fl, &g, &angles).unwrap();
        // Drop one correction: no longer the flow pattern.
        let pos = p
            .commands
            .iter()
            .position(|c| matches!(c, Command::CorrX { .. }))
            .unwrap();
        p.commands.remove(pos);
        assert!(matches!(
            signal_shift(&p, &fl),
            Err(PatternError::NotFlowForm(_))
        ));
    }

    #[test]
    fn pauli_example_variants() {
        let (g, fl, angles) = fixtures::pauli_example();
        let p = flow_pattern(&fl, &g, &angles).unwrap();
        let shifted = signal_shift(&p, &fl).unwrap();
        // Shifted dependency structure.
        let form = dep_form(&shifted).unwrap();
        assert_eq!(form.meas[&2].sdep, VertexSet::from([1]));
        assert_eq!(form.meas[&5].sdep, VertexSet::from([1, 4]));
        assert_eq!(form.corr_x[&3], VertexSet::from([1, 2, 4]));
        assert_eq!(form.corr_x[&6], VertexSet::from([1, 5]));
        assert_eq!(form.corr_z[&3], VertexSet::from([1]));
        assert_eq!(form.corr_z[&6], VertexSet::from([1, 4]));
        assert_eq!(pattern_depth(&shifted).unwrap(), 2);

        // π/2 rule only: the 1→2 dependency disappears and the X-correction
        // on 3 is re-shifted to s_2 + s_4.
        let half = pauli_simplify_with(
            &shifted,
            PauliRules {
                half_pi: true,
                zero: false,
            },
        )
        .unwrap();
        let f = dep_form(&half).unwrap();
        assert!(f.meas[&2].sdep.is_empty());
        assert_eq!(f.meas[&5].sdep, VertexSet::from([1, 4]));
        assert_eq!(f.corr_x[&3], VertexSet::from([2, 4]));
        assert_eq!(f.corr_x[&6], VertexSet::from([1, 5]));
        assert_eq!(pattern_depth(&half).unwrap(), 2);

        // 0 rule only: measurement 5 loses its dependencies.
        let zero = pauli_simplify_with(
            &shifted,
            PauliRules {
                half_pi: false,
                zero: true,
            },
        )
        .unwrap();
        let f = dep_form(&zero).unwrap();
        assert_eq!(f.meas[&2].sdep, VertexSet::from([1]));
        assert!(f.meas[&5].sdep.is_empty());
        assert_eq!(f.corr_x[&3], VertexSet::from([1, 2, 4]));
        assert_eq!(pattern_depth(&zero).unwrap(), 2);

        // Both rules: every measurement is independent.
        let both = pauli_simplify(&shifted).unwrap();
        let f = dep_form(&both).unwrap();
        assert!(f.meas.values().all(|m| m.sdep.is_empty() && m.tdep.is_empty()));
        assert_eq!(f.corr_x[&3], VertexSet::from([2, 4]));
        assert_eq!(f.corr_x[&6], VertexSet::from([1, 5]));
        assert_eq!(f.corr_z[&3], VertexSet::from([1]));
        assert_eq!(f.corr_z[&6], VertexSet::from([1, 4]));
        assert_eq!(pattern_depth(&both).unwrap(), 1);
    }

    #[test]
    fn circuit_translation_round_trip_structure() {
        use crate::circuit::CircuitBuilder;
        // J(α) on wire a, CZ(a,b), J(β) on wire b.
        let c = CircuitBuilder::on_inputs([10, 20])
            .j(10, Angle::new(1, 4).unwrap())
            .cz(10, 20)
            .j(20, Angle::new(1, 3).unwrap())
            .build()
            .unwrap();
        let p = pattern_from_circuit(&c).unwrap();
        // Vertices: 1,2 inputs; 3 = J on wire 10; 4 = J on wire 20.
        assert_eq!(p.space.inputs(), &[1, 2]);
        assert_eq!(p.space.outputs(), &[3, 4]);
        let mut edges = p.space.edges().to_vec();
        edges.sort_unstable();
        assert_eq!(edges, vec![(1, 3), (2, 3), (2, 4)]);
        assert!(find_flow(&p.space).is_some());
        // Duplicate CZ cancels.
        let c = CircuitBuilder::on_inputs([1, 2])
            .cz(1, 2)
            .cz(1, 2)
            .build()
            .unwrap();
        let p = pattern_from_circuit(&c).unwrap();
        assert!(p.space.edges().is_empty());
        assert!(p.commands.is_empty());
    }

    #[test]
    fn pattern_json_round_trip() {
        let (g, fl, angles) = fixtures::example1();
        let p = signal_shift(&flow_pattern(&fl, &g, &angles).unwrap(), &fl).unwrap();
        let p2 = MeasurementPattern::from_json(&p.to_json()).unwrap();
        assert_eq!(p, p2);
    }
}
