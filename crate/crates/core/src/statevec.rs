//! Dense statevector engine for up to [`MAX_QUBITS`] qubits.
//!
//! Basis indices are little-endian: qubit 0 is the least-significant bit.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 16;
/// Norm drift tolerated after any sequence of gates.
pub const NORM_TOL: f64 = 1e-12;

/// Modeled gate cost of a bit flip with `m` controls.
pub fn mcx_cost(m: usize) -> u64 {
    2 * m as u64 + 1
}

/// A control qubit together with the value it must hold for the gate to fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub on: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Control { qubit, on: true }
    }

    pub fn off(qubit: usize) -> Self {
        Control { qubit, on: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    H,
    X,
    Z,
    CZ,
    CNOT,
    MCX,
    /// Real-amplitude state preparation, realized as a Householder reflection.
    StatePrep,
}

/// Single-qubit operations underlying every gate except state preparation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SingleOp {
    RX(f64),
    RY(f64),
    RZ(f64),
    H,
    X,
    Z,
}

impl SingleOp {
    fn matrix(self) -> [[Complex64; 2]; 2] {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match self {
            SingleOp::RX(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            SingleOp::RY(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            SingleOp::RZ(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]
            }
            SingleOp::H => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
            }
            SingleOp::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            SingleOp::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        }
    }

    fn inverse(self) -> Self {
        match self {
            SingleOp::RX(t) => SingleOp::RX(-t),
            SingleOp::RY(t) => SingleOp::RY(-t),
            SingleOp::RZ(t) => SingleOp::RZ(-t),
            other => other,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Action {
    Single { op: SingleOp, target: usize },
    /// `I - 2|u><u|` on the listed qubits; `axis` is indexed little-endian over them.
    Reflection { qubits: Vec<usize>, axis: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    action: Action,
    controls: Vec<Control>,
}

impl Gate {
    fn single(kind: GateKind, op: SingleOp, target: usize, controls: Vec<Control>) -> Self {
        Gate { kind, action: Action::Single { op, target }, controls }
    }

    pub fn rx(target: usize, angle: f64) -> Self {
        Self::single(GateKind::RX, SingleOp::RX(angle), target, vec![])
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Self::single(GateKind::RY, SingleOp::RY(angle), target, vec![])
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Self::single(GateKind::RZ, SingleOp::RZ(angle), target, vec![])
    }

    pub fn h(target: usize) -> Self {
        Self::single(GateKind::H, SingleOp::H, target, vec![])
    }

    pub fn x(target: usize) -> Self {
        Self::single(GateKind::X, SingleOp::X, target, vec![])
    }

    pub fn z(target: usize) -> Self {
        Self::single(GateKind::Z, SingleOp::Z, target, vec![])
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self::single(GateKind::CZ, SingleOp::Z, target, vec![Control::on(control)])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::single(GateKind::CNOT, SingleOp::X, target, vec![Control::on(control)])
    }

    /// Bit flip on `target` when every control matches its polarity.
    pub fn mcx(controls: &[Control], target: usize) -> Self {
        Self::single(GateKind::MCX, SingleOp::X, target, controls.to_vec())
    }

    /// Unitary mapping `|0...0>` on `qubits` to the real state `target`
    /// (little-endian over `qubits`). It is its own inverse.
    pub fn state_prep(qubits: &[usize], target: &[f64]) -> Result<Self> {
        if target.len() != 1usize << qubits.len() {
            return Err(Error::LengthMismatch { expected: 1 << qubits.len(), got: target.len() });
        }
        if let Some(i) = target.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let norm = target.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("state-prep target has norm {norm}")));
        }
        let mut axis: Vec<f64> = target.iter().map(|a| -a / norm).collect();
        axis[0] += 1.0;
        let len = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len < 1e-14 {
            axis.iter_mut().for_each(|a| *a = 0.0);
        } else {
            axis.iter_mut().for_each(|a| *a /= len);
        }
        Ok(Gate {
            kind: GateKind::StatePrep,
            action: Action::Reflection { qubits: qubits.to_vec(), axis },
            controls: vec![],
        })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    pub fn targets(&self) -> Vec<usize> {
        match &self.action {
            Action::Single { target, .. } => vec![*target],
            Action::Reflection { qubits, .. } => qubits.clone(),
        }
    }

    /// Rotation angle, for rotation kinds only.
    pub fn angle(&self) -> Option<f64> {
        match self.action {
            Action::Single { op: SingleOp::RX(t) | SingleOp::RY(t) | SingleOp::RZ(t), .. } => Some(t),
            _ => None,
        }
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets().into_iter().chain(self.controls.iter().map(|c| c.qubit))
    }

    pub fn inverse(&self) -> Gate {
        let action = match &self.action {
            Action::Single { op, target } => Action::Single { op: op.inverse(), target: *target },
            refl => refl.clone(),
        };
        Gate { kind: self.kind, action, controls: self.controls.clone() }
    }

    fn with_extra_controls(&self, extra: &[Control]) -> Gate {
        let mut g = self.clone();
        g.controls.extend_from_slice(extra);
        g
    }

    fn validate(&self, width: usize) -> Result<()> {
        let mut seen = 0usize;
        for q in self.qubits() {
            if q >= width {
                return Err(Error::QubitOutOfRange { qubit: q, width });
            }
            if seen & (1 << q) != 0 {
                return Err(Error::OverlappingQubits(q));
            }
            seen |= 1 << q;
        }
        Ok(())
    }

    fn control_mask(&self) -> (usize, usize) {
        self.controls.iter().fold((0, 0), |(m, v), c| {
            (m | 1 << c.qubit, if c.on { v | 1 << c.qubit } else { v })
        })
    }
}

/// Ordered gate list with the modeled cost assigned by whoever built it.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    abstract_cost: u64,
}

impl Circuit {
    pub fn new(width: usize) -> Result<Self> {
        check_width(width)?;
        Ok(Circuit { width, gates: Vec::new(), abstract_cost: 0 })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn abstract_cost(&self) -> u64 {
        self.abstract_cost
    }

    pub fn with_cost(mut self, cost: u64) -> Self {
        self.abstract_cost = cost;
        self
    }

    /// Appends a gate. The abstract cost is left untouched.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other` and adds its abstract cost.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.width > self.width {
            return Err(Error::WidthMismatch { circuit: other.width, state: self.width });
        }
        self.gates.extend(other.gates.iter().cloned());
        self.abstract_cost += other.abstract_cost;
        Ok(())
    }

    /// Same gates on a wider register (qubit indices unchanged).
    pub fn widened(&self, width: usize) -> Result<Circuit> {
        check_width(width)?;
        if width < self.width {
            return Err(Error::WidthMismatch { circuit: self.width, state: width });
        }
        Ok(Circuit { width, ..self.clone() })
    }

    /// Adjoint circuit; charged the same cost.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            width: self.width,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            abstract_cost: self.abstract_cost,
        }
    }

    /// Acts as `self` where every control qubit equals its polarity bit and
    /// as the identity elsewhere. Charged the same cost as `self`.
    pub fn controlled(&self, control_qubits: &[usize], polarity: &[bool]) -> Result<Circuit> {
        if control_qubits.len() != polarity.len() {
            return Err(Error::LengthMismatch { expected: control_qubits.len(), got: polarity.len() });
        }
        let extra: Vec<Control> = control_qubits
            .iter()
            .zip(polarity)
            .map(|(&qubit, &on)| Control { qubit, on })
            .collect();
        let mut out = Circuit::new(self.width)?;
        for g in &self.gates {
            out.push(g.with_extra_controls(&extra))?;
        }
        // an empty circuit still has to reject bad control lists
        for (i, c) in extra.iter().enumerate() {
            if c.qubit >= self.width {
                return Err(Error::QubitOutOfRange { qubit: c.qubit, width: self.width });
            }
            if extra[..i].iter().any(|d| d.qubit == c.qubit) {
                return Err(Error::OverlappingQubits(c.qubit));
            }
        }
        Ok(out.with_cost(self.abstract_cost))
    }

    /// Dense unitary, `m[row][col] = <row|C|col>`. Meant for small widths.
    pub fn to_matrix(&self) -> Result<Vec<Vec<Complex64>>> {
        if self.width > 10 {
            return Err(Error::WidthOverflow { needed: self.width, limit: 10 });
        }
        let dim = 1usize << self.width;
        let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for col in 0..dim {
            let mut s = QuantumState::basis(self.width, col)?;
            s.apply_circuit(self)?;
            for (row, a) in s.amplitudes().iter().enumerate() {
                m[row][col] = *a;
            }
        }
        Ok(m)
    }
}

fn check_width(width: usize) -> Result<()> {
    if width > MAX_QUBITS {
        Err(Error::WidthOverflow { needed: width, limit: MAX_QUBITS })
    } else {
        Ok(())
    }
}

/// Conjunction of `(qubit, required bit)` constraints.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ProjectorSpec {
    constraints: Vec<(usize, bool)>,
}

impl ProjectorSpec {
    pub fn new(constraints: Vec<(usize, bool)>) -> Self {
        ProjectorSpec { constraints }
    }

    /// Every listed qubit in state 0.
    pub fn all_zero(qubits: impl IntoIterator<Item = usize>) -> Self {
        ProjectorSpec { constraints: qubits.into_iter().map(|q| (q, false)).collect() }
    }

    pub fn constraints(&self) -> &[(usize, bool)] {
        &self.constraints
    }

    /// `(mask, value)` such that a basis index `i` matches iff `i & mask == value`.
    pub fn mask_value(&self, width: usize) -> Result<(usize, usize)> {
        let mut mask = 0;
        let mut value = 0;
        for &(q, bit) in &self.constraints {
            if q >= width {
                return Err(Error::QubitOutOfRange { qubit: q, width });
            }
            if mask & (1 << q) != 0 && (value & (1 << q) != 0) != bit {
                // contradictory constraints select nothing
                return Ok((usize::MAX, usize::MAX));
            }
            mask |= 1 << q;
            if bit {
                value |= 1 << q;
            }
        }
        Ok((mask, value))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
    num_qubits: usize,
}

impl QuantumState {
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for {num_qubits} qubits")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { amplitudes, num_qubits })
    }

    /// Takes ownership of an amplitude vector whose length is a power of two
    /// and whose norm is 1 within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude vector length {dim} is not a power of two")));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_width(num_qubits)?;
        let s = QuantumState { amplitudes, num_qubits };
        if (s.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("state norm^2 {} is not 1", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::WidthMismatch { circuit: other.num_qubits, state: self.num_qubits });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.width != self.num_qubits {
            return Err(Error::WidthMismatch { circuit: circuit.width, state: self.num_qubits });
        }
        for g in &circuit.gates {
            self.apply_gate_unchecked(g);
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.apply_gate_unchecked(gate);
        Ok(())
    }

    fn apply_gate_unchecked(&mut self, gate: &Gate) {
        let (cmask, cval) = gate.control_mask();
        match &gate.action {
            Action::Single { op, target } => self.apply_single(*op, *target, cmask, cval),
            Action::Reflection { qubits, axis } => self.apply_reflection(qubits, axis, cmask, cval),
        }
    }

    fn apply_single(&mut self, op: SingleOp, target: usize, cmask: usize, cval: usize) {
        let t = 1usize << target;
        let amps = &mut self.amplitudes;
        match op {
            SingleOp::X => {
                for i in 0..amps.len() {
                    if i & t == 0 && i & cmask == cval {
                        amps.swap(i, i | t);
                    }
                }
            }
            SingleOp::Z => {
                for i in 0..amps.len() {
                    if i & t != 0 && i & cmask == cval {
                        amps[i] = -amps[i];
                    }
                }
            }
            _ => {
                let m = op.matrix();
                for i in 0..amps.len() {
                    if i & t == 0 && i & cmask == cval {
                        let (a, b) = (amps[i], amps[i | t]);
                        amps[i] = m[0][0] * a + m[0][1] * b;
                        amps[i | t] = m[1][0] * a + m[1][1] * b;
                    }
                }
            }
        }
    }

    fn apply_reflection(&mut self, qubits: &[usize], axis: &[f64], cmask: usize, cval: usize) {
        let offsets: Vec<usize> = (0..axis.len())
            .map(|j| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| j >> b & 1 == 1)
                    .fold(0, |acc, (_, &q)| acc | 1 << q)
            })
            .collect();
        let sub_mask = offsets.last().copied().unwrap_or(0);
        let amps = &mut self.amplitudes;
        for base in 0..amps.len() {
            if base & sub_mask != 0 || base & cmask != cval {
                continue;
            }
            let dot: Complex64 = offsets.iter().zip(axis).map(|(&o, &u)| amps[base | o] * u).sum();
            if dot == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (&o, &u) in offsets.iter().zip(axis) {
                amps[base | o] -= dot * (2.0 * u);
            }
        }
    }

    /// Total probability of the basis states selected by `projector`.
    pub fn probability(&self, projector: &ProjectorSpec) -> Result<f64> {
        let (mask, value) = projector.mask_value(self.num_qubits)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == value)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Multiplies the amplitudes selected by `projector` by -1.
    pub fn flip_phase(&mut self, projector: &ProjectorSpec) -> Result<()> {
        let (mask, value) = projector.mask_value(self.num_qubits)?;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask == value {
                *a = -*a;
            }
        }
        Ok(())
    }
}

/// Runs `circuit` on `state` and returns the result.
pub fn apply(circuit: &Circuit, mut state: QuantumState) -> Result<QuantumState> {
    state.apply_circuit(circuit)?;
    Ok(state)
}

pub fn projector_probability(state: &QuantumState, projector: &ProjectorSpec) -> Result<f64> {
    state.probability(projector)
}

/// Samples the listed qubits once. Bit `j` of the result is the value of `qubits[j]`.
pub fn measure_bits<R: Rng + ?Sized>(state: &QuantumState, qubits: &[usize], rng: &mut R) -> Result<u64> {
    for &q in qubits {
        if q >= state.num_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, width: state.num_qubits });
        }
    }
    let total = state.norm_sqr();
    let r: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = state.amplitudes.len() - 1;
    for (i, a) in state.amplitudes.iter().enumerate() {
        acc += a.norm_sqr();
        if r < acc {
            chosen = i;
            break;
        }
    }
    Ok(qubits
        .iter()
        .enumerate()
        .fold(0u64, |acc, (j, &q)| acc | (((chosen >> q) & 1) as u64) << j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn run(width: usize, gates: Vec<Gate>) -> QuantumState {
        let mut circ = Circuit::new(width).unwrap();
        for g in gates {
            circ.push(g).unwrap();
        }
        apply(&circ, QuantumState::zero(width).unwrap()).unwrap()
    }

    #[test]
    fn basic_gate_examples() {
        assert!(close(run(1, vec![Gate::x(0)]).amplitudes(), &[c(0.0), c(1.0)], 1e-15));
        assert!(close(run(1, vec![Gate::h(0), Gate::h(0)]).amplitudes(), &[c(1.0), c(0.0)], 1e-15));
        let s = run(1, vec![Gate::ry(0, PI / 2.0)]);
        let q = (PI / 4.0).cos();
        assert!(close(s.amplitudes(), &[c(q), c((PI / 4.0).sin())], 1e-15));
    }

    #[test]
    fn little_endian_indexing() {
        let s = run(3, vec![Gate::x(1)]);
        assert_eq!(s.amplitudes()[2], c(1.0));
    }

    #[test]
    fn rz_and_rx_match_definitions() {
        let t = 0.7;
        let s = run(1, vec![Gate::rx(0, t)]);
        assert!(close(s.amplitudes(), &[c((t / 2.0).cos()), Complex64::new(0.0, -(t / 2.0).sin())], 1e-15));
        let s = run(1, vec![Gate::h(0), Gate::rz(0, t)]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [Complex64::from_polar(h, -t / 2.0), Complex64::from_polar(h, t / 2.0)];
        assert!(close(s.amplitudes(), &expect, 1e-15));
    }

    #[test]
    fn controlled_examples() {
        let mut xc = Circuit::new(2).unwrap();
        xc.push(Gate::x(1)).unwrap();
        let cx = xc.controlled(&[0], &[true]).unwrap();
        // |10> in qubit order (q1, q0) means index 1: q0 = 1
        let out = apply(&cx, QuantumState::basis(2, 1).unwrap()).unwrap();
        assert_eq!(out.amplitudes()[3], c(1.0));

        let mut u = Circuit::new(2).unwrap();
        u.push(Gate::ry(1, 0.9)).unwrap();
        u = u.with_cost(7);
        let cu = u.controlled(&[0], &[true]).unwrap();
        assert_eq!(cu.abstract_cost(), 7);
        let off = apply(&cu, QuantumState::zero(2).unwrap()).unwrap();
        assert!(close(off.amplitudes(), QuantumState::zero(2).unwrap().amplitudes(), 1e-15));
        let on = apply(&cu, QuantumState::basis(2, 1).unwrap()).unwrap();
        let expect = [c(0.0), c((0.45f64).cos()), c(0.0), c((0.45f64).sin())];
        assert!(close(on.amplitudes(), &expect, 1e-15));

        assert!(matches!(u.controlled(&[1], &[true]), Err(Error::OverlappingQubits(1))));
        assert!(u.controlled(&[5], &[true]).is_err());
    }

    #[test]
    fn zero_polarity_controls() {
        let g = Gate::mcx(&[Control::off(0), Control::off(1)], 2);
        let s = run(3, vec![g]);
        assert_eq!(s.amplitudes()[4], c(1.0));
    }

    #[test]
    fn projector_examples() {
        let zero = QuantumState::zero(1).unwrap();
        assert_eq!(projector_probability(&zero, &ProjectorSpec::new(vec![(0, false)])).unwrap(), 1.0);
        let plus = run(1, vec![Gate::h(0)]);
        assert!((plus.probability(&ProjectorSpec::new(vec![(0, true)])).unwrap() - 0.5).abs() < 1e-15);
        let bell = run(2, vec![Gate::h(0), Gate::cnot(0, 1)]);
        assert_eq!(bell.probability(&ProjectorSpec::new(vec![(0, false), (1, true)])).unwrap(), 0.0);
        assert!(bell.probability(&ProjectorSpec::new(vec![(2, false)])).is_err());
    }

    #[test]
    fn measurement_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let one = QuantumState::basis(1, 1).unwrap();
        for _ in 0..50 {
            assert_eq!(measure_bits(&one, &[0], &mut rng).unwrap(), 1);
        }
        let plus = run(1, vec![Gate::h(0)]);
        let n = 100_000;
        let ones: u64 = (0..n).map(|_| measure_bits(&plus, &[0], &mut rng).unwrap()).sum();
        // 6 sigma of a fair binomial is about 0.0095
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
        let bell = run(2, vec![Gate::h(0), Gate::cnot(0, 1)]);
        for _ in 0..200 {
            let b = measure_bits(&bell, &[0, 1], &mut rng).unwrap();
            assert!(b == 0 || b == 3);
        }
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<u64> = (0..20).map(|_| measure_bits(&plus, &[0], &mut r1).unwrap()).collect();
        let b: Vec<u64> = (0..20).map(|_| measure_bits(&plus, &[0], &mut r2).unwrap()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn state_prep_reaches_target_and_is_involutive() {
        let target = [0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2, 0.0];
        let g = Gate::state_prep(&[1, 2], &target).unwrap();
        let s = run(3, vec![g.clone()]);
        for (j, t) in target.iter().enumerate() {
            assert!((s.amplitudes()[j << 1] - c(*t)).norm() < 1e-12);
        }
        let back = run(3, vec![g.clone(), g]);
        assert!((back.amplitudes()[0] - c(1.0)).norm() < 1e-12);
        let trivial = Gate::state_prep(&[0], &[1.0, 0.0]).unwrap();
        assert!(close(run(1, vec![trivial]).amplitudes(), &[c(1.0), c(0.0)], 0.0));
        assert!(Gate::state_prep(&[0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn width_limits() {
        assert!(matches!(Circuit::new(17), Err(Error::WidthOverflow { .. })));
        let circ = Circuit::new(2).unwrap();
        assert!(matches!(apply(&circ, QuantumState::zero(3).unwrap()), Err(Error::WidthMismatch { .. })));
        let mut circ = Circuit::new(2).unwrap();
        assert!(circ.push(Gate::cnot(1, 1)).is_err());
        assert!(circ.push(Gate::x(2)).is_err());
    }

    fn random_gate(width: usize, sel: u8, q: usize, q2: usize, t: f64) -> Gate {
        let a = q % width;
        let b = if width > 1 { (a + 1 + q2 % (width - 1)) % width } else { a };
        match sel % 9 {
            0 => Gate::rx(a, t),
            1 => Gate::ry(a, t),
            2 => Gate::rz(a, t),
            3 => Gate::h(a),
            4 => Gate::x(a),
            5 => Gate::z(a),
            6 if a != b => Gate::cz(a, b),
            7 if a != b => Gate::cnot(a, b),
            8 if a != b => Gate::mcx(&[Control::off(b)], a),
            _ => Gate::ry(a, t),
        }
    }

    fn random_circuit() -> impl Strategy<Value = Circuit> {
        (1usize..=6, prop::collection::vec((any::<u8>(), 0usize..6, 0usize..6, -PI..PI), 0..40)).prop_map(
            |(w, specs)| {
                let mut c = Circuit::new(w).unwrap();
                for (sel, q, q2, t) in specs {
                    c.push(random_gate(w, sel, q, q2, t)).unwrap();
                }
                c
            },
        )
    }

    fn random_state(width: usize, seed: u64) -> QuantumState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<Complex64> = (0..1 << width)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
        QuantumState::from_amplitudes(v).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn unitarity(circ in random_circuit(), seed in any::<u64>()) {
            let s = apply(&circ, random_state(circ.width(), seed)).unwrap();
            prop_assert!((s.norm_sqr().sqrt() - 1.0).abs() <= NORM_TOL);
        }
    }

    proptest! {
        #[test]
        fn composition_law(c1 in random_circuit(), c2 in random_circuit(), seed in any::<u64>()) {
            let w = c1.width().max(c2.width());
            let c1 = c1.widened(w).unwrap();
            let c2 = c2.widened(w).unwrap();
            let s = random_state(w, seed);
            let stepwise = apply(&c2, apply(&c1, s.clone()).unwrap()).unwrap();
            let mut joined = c1.clone();
            joined.append(&c2).unwrap();
            let at_once = apply(&joined, s).unwrap();
            prop_assert!(close(stepwise.amplitudes(), at_once.amplitudes(), 1e-12));
        }

        #[test]
        fn inverse_undoes(circ in random_circuit(), seed in any::<u64>()) {
            let s = random_state(circ.width(), seed);
            let back = apply(&circ.inverse(), apply(&circ, s.clone()).unwrap()).unwrap();
            prop_assert!(close(back.amplitudes(), s.amplitudes(), 1e-12));
        }

        #[test]
        fn controlled_block_structure(
            specs in prop::collection::vec((any::<u8>(), 0usize..2, 0usize..2, -PI..PI), 1..12),
            polarity in any::<bool>(),
        ) {
            // random 2-qubit U on qubits 1,2 controlled by qubit 0
            let mut u = Circuit::new(3).unwrap();
            for (sel, q, q2, t) in specs {
                let g = random_gate(2, sel, q, q2, t);
                let shifted = shift_gate(&g, 1);
                u.push(shifted).unwrap();
            }
            let cu = u.controlled(&[0], &[polarity]).unwrap();
            let mu = u.to_matrix().unwrap();
            let mc = cu.to_matrix().unwrap();
            for row in 0..8 {
                for col in 0..8 {
                    let active = (col & 1 == 1) == polarity;
                    let expect = if active {
                        if (row & 1) == (col & 1) { mu[row][col] } else { c(0.0) }
                    } else if row == col { c(1.0) } else { c(0.0) };
                    prop_assert!((mc[row][col] - expect).norm() <= 1e-12);
                }
            }
        }

        #[test]
        fn disjoint_projectors_sum_to_one(circ in random_circuit(), seed in any::<u64>()) {
            let s = apply(&circ, random_state(circ.width(), seed)).unwrap();
            let w = circ.width().min(3);
            let total: f64 = (0..1usize << w)
                .map(|v| {
                    let cons = (0..w).map(|q| (q, v >> q & 1 == 1)).collect();
                    s.probability(&ProjectorSpec::new(cons)).unwrap()
                })
                .sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    fn shift_gate(g: &Gate, by: usize) -> Gate {
        let mut out = g.clone();
        match &mut out.action {
            Action::Single { target, .. } => *target += by,
            Action::Reflection { qubits, .. } => qubits.iter_mut().for_each(|q| *q += by),
        }
        out.controls.iter_mut().for_each(|c| c.qubit += by);
        out
    }
}
