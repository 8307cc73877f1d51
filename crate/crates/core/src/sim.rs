//! Brute-force statevector oracle: circuit unitaries, branch-by-branch
//! pattern execution, strong-determinism checking, and equivalence up to
//! global phase. Qubit order is little-endian: bit k of a basis index
//! addresses the k-th wire of the chosen wire order (ascending id unless
//! stated otherwise).

use crate::circuit::{Circuit, Gate, Wire};
use crate::graph::{Vertex, VertexSet};
use crate::pattern::{Command, MeasurementPattern};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

pub const MAX_SIM_WIRES: usize = 12;

const NORM_TOL: f64 = 1e-12;
pub const EQUIV_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("too many wires for brute-force simulation: {0}")]
    TooManyWires(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("missing forced outcome for qubit {0}")]
    MissingOutcome(Vertex),
    #[error("wire {0} is not part of the state")]
    UnknownWire(Wire),
    #[error("invalid input state: {0}")]
    BadInput(String),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A pure state over an ordered list of wires; `amps.len() == 2^wires.len()`.
#[derive(Debug, Clone)]
pub struct StateVector {
    wires: Vec<Wire>,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(wires: Vec<Wire>, amps: Vec<Complex64>) -> Result<Self, SimError> {
        if wires.len() > MAX_SIM_WIRES {
            return Err(SimError::TooManyWires(wires.len()));
        }
        if amps.len() != 1 << wires.len() {
            return Err(SimError::DimensionMismatch(amps.len(), 1 << wires.len()));
        }
        Ok(StateVector { wires, amps })
    }

    /// Computational basis state |index⟩ over the given wires.
    pub fn basis(wires: Vec<Wire>, index: usize) -> Result<Self, SimError> {
        let dim = 1usize
            .checked_shl(wires.len() as u32)
            .filter(|_| wires.len() <= MAX_SIM_WIRES)
            .ok_or(SimError::TooManyWires(wires.len()))?;
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[index] = c(1.0, 0.0);
        Ok(StateVector { wires, amps })
    }

    /// All wires in |+⟩.
    pub fn all_plus(wires: Vec<Wire>) -> Result<Self, SimError> {
        let n = wires.len();
        if n > MAX_SIM_WIRES {
            return Err(SimError::TooManyWires(n));
        }
        let a = c(1.0 / ((1usize << n) as f64).sqrt(), 0.0);
        Ok(StateVector {
            wires,
            amps: vec![a; 1 << n],
        })
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    fn bit_of(&self, w: Wire) -> Result<usize, SimError> {
        self.wires
            .iter()
            .position(|&x| x == w)
            .ok_or(SimError::UnknownWire(w))
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > NORM_TOL {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    pub fn apply_single(&mut self, w: Wire, m: [[Complex64; 2]; 2]) -> Result<(), SimError> {
        let b = self.bit_of(w)?;
        let stride = 1usize << b;
        for base in 0..self.amps.len() {
            if base & stride == 0 {
                let a0 = self.amps[base];
                let a1 = self.amps[base | stride];
                self.amps[base] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[base | stride] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_cz(&mut self, a: Wire, b: Wire) -> Result<(), SimError> {
        let (ba, bb) = (self.bit_of(a)?, self.bit_of(b)?);
        let (ma, mb) = (1usize << ba, 1usize << bb);
        for idx in 0..self.amps.len() {
            if idx & ma != 0 && idx & mb != 0 {
                self.amps[idx] = -self.amps[idx];
            }
        }
        Ok(())
    }

    pub fn apply_cx(&mut self, control: Wire, target: Wire) -> Result<(), SimError> {
        let (bc, bt) = (self.bit_of(control)?, self.bit_of(target)?);
        let (mc, mt) = (1usize << bc, 1usize << bt);
        for idx in 0..self.amps.len() {
            if idx & mc != 0 && idx & mt == 0 {
                self.amps.swap(idx, idx | mt);
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        match *g {
            Gate::J { wire, angle } => self.apply_single(wire, j_matrix(angle.radians())),
            Gate::E { a, b } => self.apply_cz(a, b),
            Gate::CZ { control, target } => self.apply_cz(control, target),
            Gate::CX { control, target } => self.apply_cx(control, target),
            Gate::PauliZ { wire } => self.apply_single(wire, pauli_z()),
        }
    }

    /// Projects wire `w` onto outcome `s` of the |±_θ⟩ basis
    /// (s = 0 ↔ |+_θ⟩) and removes the wire. Returns the branch
    /// probability; the remaining state is renormalized when nonzero.
    pub fn project_measure(&mut self, w: Wire, theta: f64, s: bool) -> Result<f64, SimError> {
        let b = self.bit_of(w)?;
        let stride = 1usize << b;
        let phase = c(theta.cos(), -theta.sin()); // e^{−iθ}
        let sign = if s { -1.0 } else { 1.0 };
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut new_amps = Vec::with_capacity(self.amps.len() / 2);
        for idx in 0..self.amps.len() {
            if idx & stride == 0 {
                let a0 = self.amps[idx];
                let a1 = self.amps[idx | stride];
                new_amps.push((a0 + sign * phase * a1) * inv_sqrt2);
            }
        }
        self.wires.remove(b);
        self.amps = new_amps;
        let p = self.norm().powi(2);
        self.normalize();
        Ok(p)
    }

    /// Projects wire `w` onto the computational-basis outcome `s` and
    /// removes the wire, returning the branch probability.
    pub fn project_z(&mut self, w: Wire, s: bool) -> Result<f64, SimError> {
        let b = self.bit_of(w)?;
        let stride = 1usize << b;
        let mut new_amps = Vec::with_capacity(self.amps.len() / 2);
        for idx in 0..self.amps.len() {
            if idx & stride == 0 {
                new_amps.push(self.amps[if s { idx | stride } else { idx }]);
            }
        }
        self.wires.remove(b);
        self.amps = new_amps;
        let p = self.norm().powi(2);
        self.normalize();
        Ok(p)
    }

    /// |⟨self|other⟩|, requiring identical wire lists.
    pub fn overlap(&self, other: &StateVector) -> Result<f64, SimError> {
        if self.wires != other.wires {
            return Err(SimError::DimensionMismatch(self.dim(), other.dim()));
        }
        let ip: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(ip.norm())
    }
}

pub fn j_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = c(theta.cos(), theta.sin()) * s;
    [[c(s, 0.0), e], [c(s, 0.0), -e]]
}

fn pauli_z() -> [[Complex64; 2]; 2] {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

fn pauli_x() -> [[Complex64; 2]; 2] {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

/// A dense complex matrix, row-major. Square for circuit unitaries;
/// rectangular (an isometry) for patterns with |I| < |O|.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl UnitaryMatrix {
    pub fn from_columns(cols: Vec<Vec<Complex64>>) -> Result<Self, SimError> {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, Vec::len);
        for col in &cols {
            if col.len() != nrows {
                return Err(SimError::DimensionMismatch(col.len(), nrows));
            }
        }
        let mut data = vec![c(0.0, 0.0); nrows * ncols];
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                data[i * ncols + j] = *v;
            }
        }
        Ok(UnitaryMatrix {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![c(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = c(1.0, 0.0);
        }
        UnitaryMatrix {
            rows: dim,
            cols: dim,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn mul(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix, SimError> {
        if self.cols != rhs.rows {
            return Err(SimError::DimensionMismatch(self.cols, rhs.rows));
        }
        let mut data = vec![c(0.0, 0.0); self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(UnitaryMatrix {
            rows: self.rows,
            cols: rhs.cols,
            data,
        })
    }

    pub fn dagger(&self) -> UnitaryMatrix {
        let mut data = vec![c(0.0, 0.0); self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        UnitaryMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// U†U = I on the column space (isometry check; unitarity when square).
    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self.dagger().mul(self).expect("conformable");
        let id = UnitaryMatrix::identity(self.cols);
        prod.max_diff(&id) < tol
    }

    pub fn max_diff(&self, other: &UnitaryMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// True iff a = e^{iφ} b within `tol` in max-norm; φ is estimated from
/// the largest-magnitude entry of b.
pub fn equivalent_up_to_phase(
    a: &UnitaryMatrix,
    b: &UnitaryMatrix,
    tol: f64,
) -> Result<bool, SimError> {
    if a.shape() != b.shape() {
        return Err(SimError::DimensionMismatch(a.rows * a.cols, b.rows * b.cols));
    }
    let (mut best, mut best_idx) = (0.0f64, 0usize);
    for (i, v) in b.data.iter().enumerate() {
        if v.norm() > best {
            best = v.norm();
            best_idx = i;
        }
    }
    if best < tol {
        return Ok(a.data.iter().all(|v| v.norm() < tol));
    }
    let phase = a.data[best_idx] / b.data[best_idx];
    let phase = if phase.norm() < tol {
        return Ok(false);
    } else {
        phase / phase.norm()
    };
    Ok(a
        .data
        .iter()
        .zip(&b.data)
        .all(|(x, y)| (x - phase * y).norm() < tol))
}

/// The unitary of a circuit on all of its wires, with qubit k addressing
/// the k-th entry of `order` (ascending wire id in `circuit_unitary`).
/// Initial-state markers and end measurements are ignored: gates are
/// applied as pure unitaries.
pub fn circuit_unitary_with_order(c: &Circuit, order: &[Wire]) -> Result<UnitaryMatrix, SimError> {
    let n = order.len();
    if n != c.wires().len() {
        return Err(SimError::BadInput(format!(
            "order lists {n} wires, circuit has {}",
            c.wires().len()
        )));
    }
    if n > MAX_SIM_WIRES {
        return Err(SimError::TooManyWires(n));
    }
    let mut cols = Vec::with_capacity(1 << n);
    for idx in 0..1usize << n {
        let mut st = StateVector::basis(order.to_vec(), idx)?;
        for g in c.gates() {
            st.apply_gate(g)?;
        }
        cols.push(st.amps);
    }
    UnitaryMatrix::from_columns(cols)
}

pub fn circuit_unitary(c: &Circuit) -> Result<UnitaryMatrix, SimError> {
    let mut order: Vec<Wire> = c.wires().to_vec();
    order.sort_unstable();
    circuit_unitary_with_order(c, &order)
}

/// Result of running one branch of a pattern.
#[derive(Debug, Clone)]
pub struct BranchResult {
    pub outcomes: BTreeMap<Vertex, bool>,
    pub probability: f64,
    pub residual: StateVector,
}

fn parity(dep: &VertexSet, outcomes: &BTreeMap<Vertex, bool>) -> bool {
    dep.iter().filter(|d| outcomes.get(d) == Some(&true)).count() % 2 == 1
}

/// Executes a pattern command-by-command on `input` (a state over the
/// input vertices, in the graph's input order), forcing each measurement
/// to the outcome in `forced` with the adapted angle (−1)^s θ + tπ.
pub fn run_pattern_branch(
    p: &MeasurementPattern,
    input: &StateVector,
    forced: &BTreeMap<Vertex, bool>,
) -> Result<BranchResult, SimError> {
    let g = &p.space;
    if input.wires() != g.inputs() {
        return Err(SimError::BadInput(
            "input state wires must equal the pattern inputs".into(),
        ));
    }
    // Full register: inputs in the given state, non-inputs in |+⟩,
    // ordered by ascending vertex id.
    let all: Vec<Vertex> = g.vertices().to_vec();
    if all.len() > MAX_SIM_WIRES {
        return Err(SimError::TooManyWires(all.len()));
    }
    let non_inputs: Vec<Vertex> = g.non_inputs().iter().collect();
    let mut st = StateVector::basis(all.clone(), 0)?;
    // Build ψ_in ⊗ |+⟩^⊗ by scattering amplitudes.
    let mut amps = vec![c(0.0, 0.0); 1 << all.len()];
    let plus_amp = 1.0 / ((1usize << non_inputs.len()) as f64).sqrt();
    let input_bits: Vec<usize> = g
        .inputs()
        .iter()
        .map(|w| all.iter().position(|x| x == w).expect("input is a vertex"))
        .collect();
    let free_bits: Vec<usize> = non_inputs
        .iter()
        .map(|w| all.iter().position(|x| x == w).expect("vertex"))
        .collect();
    for (in_idx, amp) in input.amps().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        for free_idx in 0..1usize << free_bits.len() {
            let mut full = 0usize;
            for (k, &b) in input_bits.iter().enumerate() {
                if in_idx >> k & 1 == 1 {
                    full |= 1 << b;
                }
            }
            for (k, &b) in free_bits.iter().enumerate() {
                if free_idx >> k & 1 == 1 {
                    full |= 1 << b;
                }
            }
            amps[full] = amp * plus_amp;
        }
    }
    st.amps = amps;
    let mut outcomes: BTreeMap<Vertex, bool> = BTreeMap::new();
    let mut probability = 1.0f64;
    for cmd in &p.commands {
        match cmd {
            Command::Prepare(_) => {}
            Command::Entangle(a, b) => st.apply_cz(*a, *b)?,
            Command::Measure {
                qubit,
                angle,
                sdep,
                tdep,
            } => {
                let s = parity(sdep, &outcomes);
                let t = parity(tdep, &outcomes);
                let theta = angle.adapted(s, t).radians();
                let out = *forced
                    .get(qubit)
                    .ok_or(SimError::MissingOutcome(*qubit))?;
                let pr = st.project_measure(*qubit, theta, out)?;
                probability *= pr;
                outcomes.insert(*qubit, out);
                if probability < 1e-300 {
                    return Ok(BranchResult {
                        outcomes,
                        probability: 0.0,
                        residual: st,
                    });
                }
            }
            Command::CorrX { qubit, dep } => {
                if parity(dep, &outcomes) {
                    st.apply_single(*qubit, pauli_x())?;
                }
            }
            Command::CorrZ { qubit, dep } => {
                if parity(dep, &outcomes) {
                    st.apply_single(*qubit, pauli_z())?;
                }
            }
            Command::Shift { qubit, dep } => {
                let flip = parity(dep, &outcomes);
                if flip {
                    let v = outcomes.get_mut(qubit).expect("shift after measurement");
                    *v = !*v;
                }
            }
        }
    }
    Ok(BranchResult {
        outcomes,
        probability,
        residual: st,
    })
}

/// Enumerates all branch outcome assignments for the measured qubits.
pub fn all_branches(p: &MeasurementPattern) -> Vec<BTreeMap<Vertex, bool>> {
    let measured: Vec<Vertex> = p.space.non_outputs().iter().collect();
    (0..1usize << measured.len())
        .map(|mask| {
            measured
                .iter()
                .enumerate()
                .map(|(k, &q)| (q, mask >> k & 1 == 1))
                .collect()
        })
        .collect()
}

/// The branch map of a pattern: for each branch, the matrix taking input
/// basis states to (unnormalized) residual output states, with the
/// branch probability folded out.
fn branch_maps(p: &MeasurementPattern) -> Result<Vec<(f64, UnitaryMatrix)>, SimError> {
    let inputs: Vec<Vertex> = p.space.inputs().to_vec();
    let branches = all_branches(p);
    let mut maps = Vec::with_capacity(branches.len());
    for forced in &branches {
        let mut cols = Vec::with_capacity(1 << inputs.len());
        let mut prob_sum = 0.0;
        for idx in 0..1usize << inputs.len() {
            let input = StateVector::basis(inputs.clone(), idx)?;
            let r = run_pattern_branch(p, &input, forced)?;
            prob_sum += r.probability;
            cols.push(r.residual.amps().to_vec());
        }
        maps.push((
            prob_sum / (1 << inputs.len()) as f64,
            UnitaryMatrix::from_columns(cols)?,
        ));
    }
    Ok(maps)
}

/// Strong determinism: every branch occurs with the same probability and
/// implements the same input–output map up to a branch-global phase.
pub fn is_strongly_deterministic(p: &MeasurementPattern) -> Result<bool, SimError> {
    let m = p.space.non_outputs().len();
    if m > 8 {
        return Err(SimError::TooManyWires(m));
    }
    let maps = branch_maps(p)?;
    let expected = 1.0 / (1u64 << m) as f64;
    let reference = &maps[0].1;
    for (prob, map) in &maps {
        if (prob - expected).abs() > EQUIV_TOL {
            return Ok(false);
        }
        if !equivalent_up_to_phase(map, reference, EQUIV_TOL)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The unitary implemented by a deterministic pattern: the branch map of
/// the all-zero branch, with input order = pattern inputs and output
/// order = pattern outputs.
pub fn pattern_unitary(p: &MeasurementPattern) -> Result<UnitaryMatrix, SimError> {
    let inputs: Vec<Vertex> = p.space.inputs().to_vec();
    let forced: BTreeMap<Vertex, bool> = p
        .space
        .non_outputs()
        .iter()
        .map(|q| (q, false))
        .collect();
    let mut cols = Vec::with_capacity(1 << inputs.len());
    for idx in 0..1usize << inputs.len() {
        let input = StateVector::basis(inputs.clone(), idx)?;
        let mut r = run_pattern_branch(p, &input, &forced)?;
        // Residual wires are ascending; permute to the pattern's output order.
        let ordered = permute_state(&mut r.residual, p.space.outputs())?;
        cols.push(ordered);
    }
    UnitaryMatrix::from_columns(cols)
}

/// Reads a state out in the given wire order.
fn permute_state(st: &StateVector, order: &[Wire]) -> Result<Vec<Complex64>, SimError> {
    let bits: Vec<usize> = order
        .iter()
        .map(|w| {
            st.wires()
                .iter()
                .position(|x| x == w)
                .ok_or(SimError::UnknownWire(*w))
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != st.wires().len() {
        return Err(SimError::BadInput("order must cover every wire".into()));
    }
    let mut out = vec![c(0.0, 0.0); st.dim()];
    for idx in 0..st.dim() {
        let mut j = 0usize;
        for (k, &b) in bits.iter().enumerate() {
            if idx >> b & 1 == 1 {
                j |= 1 << k;
            }
        }
        out[j] = st.amps()[idx];
    }
    Ok(out)
}

/// Checks that a wire-removing rewrite preserved semantics. The big
/// circuit is run on every computational-basis state of `big_inputs`
/// (all other wires in |+⟩); its final state must factor as
/// (small-circuit output on the surviving wires) ⊗ χ with a single
/// basis-independent residual χ on the removed wires. `small_inputs[k]`
/// names the surviving wire playing the role of input `big_inputs[k]`
/// and must be a permutation of the small circuit's wires.
pub fn extended_matches_rewritten(
    big: &Circuit,
    big_inputs: &[Wire],
    small: &Circuit,
    small_inputs: &[Wire],
    tol: f64,
) -> Result<bool, SimError> {
    let mut big_order: Vec<Wire> = big.wires().to_vec();
    big_order.sort_unstable();
    if big_order.len() > MAX_SIM_WIRES {
        return Err(SimError::TooManyWires(big_order.len()));
    }
    if big_inputs.len() != small_inputs.len() || small_inputs.len() != small.wires().len() {
        return Err(SimError::BadInput(
            "input lists must pair up and cover the small circuit".into(),
        ));
    }
    let pos = |w: Wire| -> Result<usize, SimError> {
        big_order
            .iter()
            .position(|&x| x == w)
            .ok_or(SimError::UnknownWire(w))
    };
    let input_bits: Vec<usize> = big_inputs.iter().map(|&w| pos(w)).collect::<Result<_, _>>()?;
    // Surviving wires, addressed so that logical qubit k is small_inputs[k].
    let keep_bits: Vec<usize> = small_inputs
        .iter()
        .map(|&w| pos(w))
        .collect::<Result<_, _>>()?;
    let removed: Vec<Wire> = big_order
        .iter()
        .copied()
        .filter(|w| !small_inputs.contains(w))
        .collect();
    let rem_bits: Vec<usize> = removed.iter().map(|&w| pos(w)).collect::<Result<_, _>>()?;
    let u_small = circuit_unitary_with_order(small, small_inputs)?;
    let nk = big_inputs.len();
    let n_free = big_order.len() - nk;
    let mut chi: Option<Vec<Complex64>> = None;
    for b in 0..1usize << nk {
        // |b⟩ on the input wires, |+⟩ everywhere else.
        let free_bits: Vec<usize> = (0..big_order.len())
            .filter(|bit| !input_bits.contains(bit))
            .collect();
        let mut st = StateVector::basis(big_order.clone(), 0)?;
        let mut amps = vec![c(0.0, 0.0); 1 << big_order.len()];
        let plus_amp = 1.0 / ((1usize << n_free) as f64).sqrt();
        for f_idx in 0..1usize << n_free {
            let mut full = 0usize;
            for (k, &bit) in input_bits.iter().enumerate() {
                if b >> k & 1 == 1 {
                    full |= 1 << bit;
                }
            }
            for (k, &bit) in free_bits.iter().enumerate() {
                if f_idx >> k & 1 == 1 {
                    full |= 1 << bit;
                }
            }
            amps[full] = c(plus_amp, 0.0);
        }
        st.amps = amps;
        for g in big.gates() {
            st.apply_gate(g)?;
        }
        // Expected factor on the surviving wires.
        let phi: Vec<Complex64> = (0..1usize << nk).map(|i| u_small.get(i, b)).collect();
        if chi.is_none() {
            // Solve χ from the row with the largest |φ| entry.
            let (mut best, mut bi) = (0.0, 0usize);
            for (i, v) in phi.iter().enumerate() {
                if v.norm() > best {
                    best = v.norm();
                    bi = i;
                }
            }
            if best < tol {
                return Ok(false);
            }
            let mut x = vec![c(0.0, 0.0); 1 << rem_bits.len()];
            for (r_idx, slot) in x.iter_mut().enumerate() {
                let mut full = 0usize;
                for (k, &bit) in keep_bits.iter().enumerate() {
                    if bi >> k & 1 == 1 {
                        full |= 1 << bit;
                    }
                }
                for (k, &bit) in rem_bits.iter().enumerate() {
                    if r_idx >> k & 1 == 1 {
                        full |= 1 << bit;
                    }
                }
                *slot = st.amps()[full] / phi[bi];
            }
            let norm: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > tol {
                return Ok(false);
            }
            chi = Some(x);
        }
        let chi = chi.as_ref().expect("set above");
        for (full_idx, amp) in st.amps().iter().enumerate() {
            let mut ki = 0usize;
            for (k, &bit) in keep_bits.iter().enumerate() {
                if full_idx >> bit & 1 == 1 {
                    ki |= 1 << k;
                }
            }
            let mut ri = 0usize;
            for (k, &bit) in rem_bits.iter().enumerate() {
                if full_idx >> bit & 1 == 1 {
                    ri |= 1 << k;
                }
            }
            if (amp - phi[ki] * chi[ri]).norm() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{extended_translation, CircuitBuilder};
    use crate::fixtures;
    use crate::flow::ssf_from_flow;
    use crate::pattern::{flow_pattern, signal_shift, Angle};
    use approx::assert_abs_diff_eq;

    #[test]
    fn j_zero_is_hadamard() {
        let circ = CircuitBuilder::on_inputs([0])
            .j(0, Angle::zero())
            .build()
            .unwrap();
        let u = circuit_unitary(&circ).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(u.get(0, 0).re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(u.get(0, 1).re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(u.get(1, 0).re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(u.get(1, 1).re, -s, epsilon = 1e-12);
        assert!(u.is_unitary(1e-10));
    }

    #[test]
    fn two_qubit_block_branches_implement_j() {
        let (g, fl, angles) = fixtures::two_qubit();
        let p = flow_pattern(&fl, &g, &angles).unwrap();
        // Pattern measures at −π/4, so the implemented unitary is J(π/4).
        let jref = CircuitBuilder::on_inputs([2])
            .j(2, Angle::new(1, 4).unwrap())
            .build()
            .unwrap();
        let uref = circuit_unitary(&jref).unwrap();
        for outcome in [false, true] {
            let forced = BTreeMap::from([(1, outcome)]);
            let mut cols = Vec::new();
            let mut prob = 0.0;
            for idx in 0..2 {
                let input = StateVector::basis(vec![1], idx).unwrap();
                let r = run_pattern_branch(&p, &input, &forced).unwrap();
                prob += r.probability;
                cols.push(r.residual.amps().to_vec());
            }
            assert_abs_diff_eq!(prob / 2.0, 0.5, epsilon = 1e-12);
            let u = UnitaryMatrix::from_columns(cols).unwrap();
            assert!(equivalent_up_to_phase(&u, &uref, EQUIV_TOL).unwrap());
        }
        assert!(is_strongly_deterministic(&p).unwrap());
    }

    #[test]
    fn corrupted_pattern_is_not_deterministic() {
        let (g, fl, angles) = fixtures::two_qubit();
        let mut p = flow_pattern(&fl, &g, &angles).unwrap();
        p.commands
            .retain(|cmd| !matches!(cmd, crate::pattern::Command::CorrX { .. }));
        assert!(!is_strongly_deterministic(&p).unwrap());
    }

    #[test]
    fn shifted_patterns_preserve_semantics() {
        for (g, fl, angles) in [fixtures::pauli_example(), fixtures::line_graph7()] {
            let p = flow_pattern(&fl, &g, &angles).unwrap();
            let shifted = signal_shift(&p, &fl).unwrap();
            let u1 = pattern_unitary(&p).unwrap();
            let u2 = pattern_unitary(&shifted).unwrap();
            assert!(equivalent_up_to_phase(&u1, &u2, EQUIV_TOL).unwrap());
            assert!(is_strongly_deterministic(&shifted).unwrap());
        }
    }

    #[test]
    fn extended_circuit_matches_pattern_unitary() {
        let (g, fl, angles) = fixtures::pauli_example();
        let p = signal_shift(&flow_pattern(&fl, &g, &angles).unwrap(), &fl).unwrap();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        let ext = extended_translation(&p, &ssf).unwrap().flatten();
        // Branch-by-branch: project the coherent circuit's measured wires
        // onto each outcome assignment and compare with the pattern.
        let inputs = g.inputs().to_vec();
        let measured: Vec<Vertex> = g.non_outputs().iter().collect();
        let mut order: Vec<Wire> = ext.wires().to_vec();
        order.sort_unstable();
        for forced in all_branches(&p) {
            for idx in 0..1usize << inputs.len() {
                let input = StateVector::basis(inputs.clone(), idx).unwrap();
                let want = run_pattern_branch(&p, &input, &forced).unwrap();
                // Simulate the circuit and project measured wires in Z.
                let mut st = StateVector::basis(order.clone(), 0).unwrap();
                let mut amps = vec![Complex64::new(0.0, 0.0); st.dim()];
                let anc: Vec<Wire> = order
                    .iter()
                    .copied()
                    .filter(|w| !inputs.contains(w))
                    .collect();
                let plus = 1.0 / ((1usize << anc.len()) as f64).sqrt();
                for a_idx in 0..1usize << anc.len() {
                    let mut full = 0usize;
                    for (k, w) in inputs.iter().enumerate() {
                        if idx >> k & 1 == 1 {
                            full |= 1 << order.iter().position(|x| x == w).unwrap();
                        }
                    }
                    for (k, w) in anc.iter().enumerate() {
                        if a_idx >> k & 1 == 1 {
                            full |= 1 << order.iter().position(|x| x == w).unwrap();
                        }
                    }
                    amps[full] = Complex64::new(plus, 0.0);
                }
                st.amps = amps;
                for gate in ext.gates() {
                    st.apply_gate(gate).unwrap();
                }
                // The circuit already contains J(−θ) on each measured
                // wire, which maps the |±_θ⟩ basis to |0⟩/|1⟩, so the
                // branch is selected by a Z-basis projection.
                for &q in &measured {
                    st.project_z(q, forced[&q]).unwrap();
                }
                let overlap = st.overlap(&want.residual).unwrap();
                assert!(
                    overlap > 1.0 - 1e-9,
                    "branch {forced:?} input {idx}: overlap {overlap}"
                );
            }
        }
    }

    #[test]
    fn extended_matches_rewritten_two_qubit() {
        let (g, fl, angles) = fixtures::two_qubit();
        let p = signal_shift(&flow_pattern(&fl, &g, &angles).unwrap(), &fl).unwrap();
        let ssf = ssf_from_flow(&fl, &g).unwrap();
        let ext = extended_translation(&p, &ssf).unwrap();
        let collapsed = crate::circuit::apply_jgate_identity(&ext, 1, 2).unwrap();
        assert!(extended_matches_rewritten(
            &ext.flatten(),
            &[1],
            &collapsed.flatten(),
            &[2],
            EQUIV_TOL
        )
        .unwrap());
        // A wrong angle must be caught.
        let wrong = CircuitBuilder::on_inputs([2])
            .j(2, Angle::new(1, 3).unwrap())
            .build()
            .unwrap();
        assert!(
            !extended_matches_rewritten(&ext.flatten(), &[1], &wrong, &[2], EQUIV_TOL).unwrap()
        );
    }

    #[test]
    fn phase_equivalence_basics() {
        let h = CircuitBuilder::on_inputs([0]).j(0, Angle::zero()).build().unwrap();
        let u = circuit_unitary(&h).unwrap();
        assert!(equivalent_up_to_phase(&u, &u, EQUIV_TOL).unwrap());
        let mut neg = u.clone();
        for v in &mut neg.data {
            *v = -*v;
        }
        assert!(equivalent_up_to_phase(&u, &neg, EQUIV_TOL).unwrap());
        let x = {
            let mut m = UnitaryMatrix::identity(2);
            m.data = vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
            m
        };
        let xh = x.mul(&u).unwrap();
        assert!(!equivalent_up_to_phase(&u, &xh, EQUIV_TOL).unwrap());
    }
}
