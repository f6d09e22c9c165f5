//! Composite circuits built from the feature map and the coefficients:
//! the coefficient-state preparation, the index-controlled training-set
//! oracle, the single-observable circuit and the amplitude-encoding unitary.

use std::ops::Range;

use rand::Rng;

use crate::coefkit::{decompose, CoefDecomposition, CoefficientVector};
use crate::error::{Error, Result};
use crate::featuremap::{build_u, gate_count, DataPoint, FeatureMapSpec};
use crate::statevec::{mcx_cost, measure_bits, Circuit, Control, Gate, ProjectorSpec, QuantumState, MAX_QUBITS};

pub use crate::featuremap::{LabeledPoint, TrainingSet};

/// Number of index qubits needed to address `n_terms` entries.
pub fn index_bits(n_terms: usize) -> usize {
    if n_terms <= 1 {
        0
    } else {
        (usize::BITS - (n_terms - 1).leading_zeros()) as usize
    }
}

/// Qubit assignment for the composite circuits. Data sits on the lowest
/// qubits so feature-map circuits can be widened without remapping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    pub data: Range<usize>,
    pub idx: Range<usize>,
    pub sign: usize,
    /// Scratch qubit of the training-set oracle, always returned to 0.
    pub flag: usize,
    pub qp_trash: Option<usize>,
    pub qp_pm: Option<usize>,
    pub width: usize,
}

impl RegisterLayout {
    /// `n + idx + 2` qubits: data, index, sign, flag.
    pub fn all_at_once(n: usize, n_terms: usize) -> Result<Self> {
        let l = index_bits(n_terms);
        let width = n + l + 2;
        check(width)?;
        Ok(RegisterLayout {
            data: 0..n,
            idx: n..n + l,
            sign: n + l,
            flag: n + l + 1,
            qp_trash: None,
            qp_pm: None,
            width,
        })
    }

    /// `n + idx + 3` qubits. The oracle's flag shares a wire with `qp_trash`,
    /// which is legal because the flag is back in 0 before `qp_trash` is used.
    pub fn amplitude_encoding(n: usize, n_terms: usize) -> Result<Self> {
        let l = index_bits(n_terms);
        let width = n + l + 3;
        check(width)?;
        Ok(RegisterLayout {
            data: 0..n,
            idx: n..n + l,
            sign: n + l,
            flag: n + l + 1,
            qp_trash: Some(n + l + 1),
            qp_pm: Some(n + l + 2),
            width,
        })
    }

    pub fn data_zero(&self) -> ProjectorSpec {
        ProjectorSpec::all_zero(self.data.clone())
    }
}

fn check(width: usize) -> Result<()> {
    if width > MAX_QUBITS {
        Err(Error::WidthOverflow { needed: width, limit: MAX_QUBITS })
    } else {
        Ok(())
    }
}

/// Real amplitudes over the index and sign qubits, index bits low, sign bit high.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePrepSpec {
    pub index_bits: usize,
    pub amplitudes: Vec<f64>,
    pub charged_cost: u64,
}

impl StatePrepSpec {
    /// Amplitude of basis state `|i>|sign_bit>`.
    pub fn amplitude(&self, i: usize, sign_bit: usize) -> f64 {
        self.amplitudes[i | sign_bit << self.index_bits]
    }

    pub fn gate(&self, layout: &RegisterLayout) -> Result<Gate> {
        if layout.idx.len() != self.index_bits {
            return Err(Error::LengthMismatch { expected: self.index_bits, got: layout.idx.len() });
        }
        let qubits: Vec<usize> = layout.idx.clone().chain(std::iter::once(layout.sign)).collect();
        Gate::state_prep(&qubits, &self.amplitudes)
    }
}

/// State preparation of `sum_i sqrt(p_i) |i>|b_i>` with `b_i = 0` for
/// positive and `1` for negative coefficients. Charged `N`.
pub fn build_w(decomp: &CoefDecomposition) -> StatePrepSpec {
    let l = index_bits(decomp.len());
    let mut amplitudes = vec![0.0; 2 << l];
    for (i, (&p, s)) in decomp.probs.iter().zip(&decomp.signs).enumerate() {
        amplitudes[i | s.bit() << l] = p.sqrt();
    }
    StatePrepSpec { index_bits: l, amplitudes, charged_cost: decomp.len() as u64 }
}

fn check_instance(spec: &FeatureMapSpec, alpha_len: usize, set: &TrainingSet) -> Result<()> {
    spec.validate()?;
    if alpha_len != set.len() {
        return Err(Error::LengthMismatch { expected: set.len(), got: alpha_len });
    }
    Ok(())
}

/// Modeled cost of the training-set oracle for `n_terms` entries.
pub fn o_dagger_cost(g: u64, n_terms: usize) -> u64 {
    n_terms as u64 * (g + 2 * mcx_cost(index_bits(n_terms)))
}

/// Applies `U(x_i)^dagger` to the data register when the index register holds `i`.
/// Per index: flag the index value, apply the flag-controlled inverse map, unflag.
pub fn build_o_dagger(spec: &FeatureMapSpec, set: &TrainingSet, layout: &RegisterLayout) -> Result<Circuit> {
    spec.validate()?;
    let n_terms = set.len();
    let l = index_bits(n_terms);
    if layout.idx.len() != l || layout.data.len() != spec.num_qubits {
        return Err(Error::invalid("register layout does not fit the training set"));
    }
    let mut circ = Circuit::new(layout.width)?;
    for i in 0..n_terms {
        let controls: Vec<Control> = layout
            .idx
            .clone()
            .enumerate()
            .map(|(b, q)| Control { qubit: q, on: i >> b & 1 == 1 })
            .collect();
        let mark = Gate::mcx(&controls, layout.flag);
        circ.push(mark.clone())?;
        let undo = build_u(spec, set.x(i))?.inverse().widened(layout.width)?;
        circ.append(&undo.controlled(&[layout.flag], &[true])?)?;
        circ.push(mark)?;
    }
    Ok(circ.with_cost(o_dagger_cost(gate_count(spec), n_terms)))
}

/// Per-oracle modeled costs of one instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChargedCosts {
    pub u_x: u64,
    pub w_alpha: u64,
    pub o_dagger_s: u64,
}

#[derive(Clone, Debug)]
pub struct OracleBundle {
    pub layout: RegisterLayout,
    pub u_x: Circuit,
    pub w_alpha: StatePrepSpec,
    pub o_dagger_s: Circuit,
    pub v: Option<Circuit>,
    pub charged_costs: ChargedCosts,
}

/// Builds all oracles for one instance; `with_v` selects the wider layout
/// and also assembles the amplitude-encoding unitary.
pub fn build_bundle(
    spec: &FeatureMapSpec,
    x: &DataPoint,
    alpha: &CoefficientVector,
    set: &TrainingSet,
    with_v: bool,
) -> Result<OracleBundle> {
    check_instance(spec, alpha.len(), set)?;
    let n = spec.num_qubits;
    let layout = if with_v {
        RegisterLayout::amplitude_encoding(n, set.len())?
    } else {
        RegisterLayout::all_at_once(n, set.len())?
    };
    let u_x = build_u(spec, x)?;
    let w_alpha = build_w(&decompose(alpha));
    let o_dagger_s = build_o_dagger(spec, set, &layout)?;
    let charged_costs = ChargedCosts {
        u_x: u_x.abstract_cost(),
        w_alpha: w_alpha.charged_cost,
        o_dagger_s: o_dagger_s.abstract_cost(),
    };
    let mut bundle = OracleBundle { layout, u_x, w_alpha, o_dagger_s, v: None, charged_costs };
    if with_v {
        bundle.v = Some(assemble_v(&bundle)?);
    }
    Ok(bundle)
}

fn assemble_all_at_once(b: &OracleBundle) -> Result<Circuit> {
    let mut c = b.u_x.widened(b.layout.width)?;
    let mut w = Circuit::new(b.layout.width)?;
    w.push(b.w_alpha.gate(&b.layout)?)?;
    c.append(&w.with_cost(b.w_alpha.charged_cost))?;
    c.append(&b.o_dagger_s)?;
    Ok(c)
}

fn assemble_v(b: &OracleBundle) -> Result<Circuit> {
    let (trash, pm) = match (b.layout.qp_trash, b.layout.qp_pm) {
        (Some(t), Some(p)) => (t, p),
        _ => return Err(Error::invalid("layout has no amplitude-encoding qubits")),
    };
    let mut c = assemble_all_at_once(b)?;
    let zero_controls: Vec<Control> = b.layout.data.clone().map(Control::off).collect();
    let mut tail = Circuit::new(b.layout.width)?;
    tail.push(Gate::mcx(&zero_controls, trash))?;
    tail.push(Gate::x(trash))?;
    tail.push(Gate::cnot(b.layout.sign, pm))?;
    c.append(&tail.with_cost(mcx_cost(b.layout.data.len()) + 2))?;
    Ok(c)
}

/// Observable `l1 * |0><0|_data (x) I_idx (x) Z_sign`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSpec {
    pub scale: f64,
    pub data: Range<usize>,
    pub sign: usize,
}

impl MeasurementSpec {
    fn branch(&self, sign_bit: bool) -> ProjectorSpec {
        let mut cons: Vec<(usize, bool)> = self.data.clone().map(|q| (q, false)).collect();
        cons.push((self.sign, sign_bit));
        ProjectorSpec::new(cons)
    }

    /// `(P(data = 0, sign = 0), P(data = 0, sign = 1))`.
    pub fn branch_probabilities(&self, state: &QuantumState) -> Result<(f64, f64)> {
        Ok((state.probability(&self.branch(false))?, state.probability(&self.branch(true))?))
    }

    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        let (p, m) = self.branch_probabilities(state)?;
        Ok(self.scale * (p - m))
    }

    /// Single-shot outcome in `{-scale, 0, +scale}`.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, state: &QuantumState, rng: &mut R) -> Result<f64> {
        let qubits: Vec<usize> = self.data.clone().chain(std::iter::once(self.sign)).collect();
        let bits = measure_bits(state, &qubits, rng)?;
        let data_mask = (1u64 << self.data.len()) - 1;
        if bits & data_mask != 0 {
            Ok(0.0)
        } else if bits >> self.data.len() & 1 == 0 {
            Ok(self.scale)
        } else {
            Ok(-self.scale)
        }
    }
}

/// Feature map on the data, coefficient state on index and sign, then the
/// training-set oracle. Charged `G + N + cost(O)`.
pub fn build_all_at_once(
    spec: &FeatureMapSpec,
    x: &DataPoint,
    alpha: &CoefficientVector,
    set: &TrainingSet,
) -> Result<(Circuit, MeasurementSpec)> {
    let b = build_bundle(spec, x, alpha, set, false)?;
    let circ = assemble_all_at_once(&b)?;
    let meas = MeasurementSpec { scale: decompose(alpha).l1_norm, data: b.layout.data.clone(), sign: b.layout.sign };
    Ok((circ, meas))
}

/// Amplitude-encoding unitary: `P(trash = 0, pm = 0) = f+` and `P(trash = 0, pm = 1) = f-`.
pub fn build_v(
    spec: &FeatureMapSpec,
    x: &DataPoint,
    alpha: &CoefficientVector,
    set: &TrainingSet,
) -> Result<(Circuit, RegisterLayout)> {
    let b = build_bundle(spec, x, alpha, set, true)?;
    let v = b.v.clone().expect("bundle built with V");
    Ok((v, b.layout))
}

/// Good subspace of the positive branch.
pub fn plus_projector(layout: &RegisterLayout) -> Result<ProjectorSpec> {
    branch_projector(layout, false)
}

/// Good subspace of the negative branch.
pub fn minus_projector(layout: &RegisterLayout) -> Result<ProjectorSpec> {
    branch_projector(layout, true)
}

fn branch_projector(layout: &RegisterLayout, pm: bool) -> Result<ProjectorSpec> {
    match (layout.qp_trash, layout.qp_pm) {
        (Some(t), Some(p)) => Ok(ProjectorSpec::new(vec![(t, false), (p, pm)])),
        _ => Err(Error::invalid("layout has no amplitude-encoding qubits")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefkit::f_plus_minus_exact;
    use crate::featuremap::{f_exact, kernel_column, kernel_exact, Family};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> DataPoint {
        DataPoint::new(v.to_vec()).unwrap()
    }

    fn cv(v: &[f64]) -> CoefficientVector {
        CoefficientVector::new(v.to_vec()).unwrap()
    }

    fn ry1() -> FeatureMapSpec {
        FeatureMapSpec::new(Family::AngleRyCz, 1, 1)
    }

    #[test]
    fn index_bit_counts() {
        assert_eq!(
            [1, 2, 3, 4, 5, 8, 9, 16].map(index_bits),
            [0, 1, 2, 2, 3, 3, 4, 4]
        );
    }

    #[test]
    fn w_examples() {
        let w = build_w(&decompose(&cv(&[1.0])));
        assert_eq!(w.amplitudes, vec![1.0, 0.0]);
        assert_eq!(w.charged_cost, 1);

        let w = build_w(&decompose(&cv(&[0.5, -0.5])));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w.amplitude(0, 0) - h).abs() < 1e-15);
        assert!((w.amplitude(1, 1) - h).abs() < 1e-15);
        assert_eq!(w.amplitude(1, 0), 0.0);

        let w = build_w(&decompose(&cv(&[2.0, -2.0, 4.0])));
        assert_eq!(w.index_bits, 2);
        assert_eq!(w.charged_cost, 3);
        assert!((w.amplitude(0, 0) - 0.5).abs() < 1e-15);
        assert!((w.amplitude(1, 1) - 0.5).abs() < 1e-15);
        assert!((w.amplitude(2, 0) - h).abs() < 1e-15);
        assert_eq!(w.amplitude(3, 0) + w.amplitude(3, 1), 0.0);
    }

    #[test]
    fn w_gate_prepares_target() {
        let d = decompose(&cv(&[0.3, -1.0, 0.0, 2.0, -0.7]));
        let w = build_w(&d);
        let layout = RegisterLayout::all_at_once(2, 5).unwrap();
        let mut s = QuantumState::zero(layout.width).unwrap();
        s.apply_gate(&w.gate(&layout).unwrap()).unwrap();
        for i in 0..8 {
            for b in 0..2 {
                let idx = i << layout.idx.start | b << layout.sign;
                assert!((s.amplitudes()[idx] - Complex64::new(w.amplitude(i, b), 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn o_dagger_examples() {
        // single index: plain inverse feature map
        let spec = FeatureMapSpec::new(Family::AngleRyCz, 2, 2);
        let set = TrainingSet::unlabeled(vec![pt(&[0.4, -1.0])]).unwrap();
        let layout = RegisterLayout::all_at_once(2, 1).unwrap();
        let o = build_o_dagger(&spec, &set, &layout).unwrap();
        assert_eq!(o.abstract_cost(), 8 + 2);
        let mut s = QuantumState::zero(layout.width).unwrap();
        s.apply_circuit(&o).unwrap();
        let mut direct = QuantumState::zero(layout.width).unwrap();
        direct.apply_circuit(&build_u(&spec, set.x(0)).unwrap().inverse().widened(layout.width).unwrap()).unwrap();
        assert!((s.inner(&direct).unwrap().norm() - 1.0).abs() < 1e-12);

        // identity feature map: no action at all
        let id = FeatureMapSpec::new(Family::Identity, 2, 1);
        let set = TrainingSet::unlabeled(vec![pt(&[0.0]), pt(&[1.0]), pt(&[2.0])]).unwrap();
        let layout = RegisterLayout::all_at_once(2, 3).unwrap();
        let o = build_o_dagger(&id, &set, &layout).unwrap();
        for basis in 0..1usize << layout.width {
            if basis >> layout.flag & 1 == 1 {
                continue;
            }
            let out = crate::statevec::apply(&o, QuantumState::basis(layout.width, basis).unwrap()).unwrap();
            assert!((out.amplitudes()[basis].re - 1.0).abs() < 1e-12);
        }

        // one-qubit RY map with index 1 selected
        let (a, b) = (0.8, -1.3);
        let set = TrainingSet::unlabeled(vec![pt(&[a]), pt(&[b])]).unwrap();
        let layout = RegisterLayout::all_at_once(1, 2).unwrap();
        let o = build_o_dagger(&ry1(), &set, &layout).unwrap();
        let start = 1 << layout.idx.start;
        let out = crate::statevec::apply(&o, QuantumState::basis(layout.width, start).unwrap()).unwrap();
        let expect0 = (-b / 2.0f64).cos();
        let expect1 = (-b / 2.0f64).sin();
        assert!((out.amplitudes()[start].re - expect0).abs() < 1e-12);
        assert!((out.amplitudes()[start | 1].re - expect1).abs() < 1e-12);
    }

    #[test]
    fn o_dagger_acts_per_index_and_restores_flag() {
        let spec = FeatureMapSpec::new(Family::AngleRzrxRing, 2, 2);
        let xs: Vec<DataPoint> = (0..5).map(|i| pt(&[0.3 * i as f64, 1.0 - 0.7 * i as f64])).collect();
        let set = TrainingSet::unlabeled(xs).unwrap();
        let layout = RegisterLayout::all_at_once(2, 5).unwrap();
        let o = build_o_dagger(&spec, &set, &layout).unwrap();
        for i in 0..5usize {
            for d in 0..4usize {
                let start = d | i << layout.idx.start;
                let out = crate::statevec::apply(&o, QuantumState::basis(layout.width, start).unwrap()).unwrap();
                let flag_prob = out.probability(&ProjectorSpec::new(vec![(layout.flag, true)])).unwrap();
                assert!(flag_prob < 1e-20);
                let mut expect = QuantumState::basis(2, d).unwrap();
                expect.apply_circuit(&build_u(&spec, set.x(i)).unwrap().inverse()).unwrap();
                for dd in 0..4usize {
                    let got = out.amplitudes()[dd | i << layout.idx.start];
                    assert!((got - expect.amplitudes()[dd]).norm() < 1e-10);
                }
            }
        }
        // padded indices 5..8 leave the data untouched
        let start = 2 | 6 << layout.idx.start;
        let out = crate::statevec::apply(&o, QuantumState::basis(layout.width, start).unwrap()).unwrap();
        assert!((out.amplitudes()[start].re - 1.0).abs() < 1e-12);
        assert_eq!(o.abstract_cost(), 5 * (12 + 2 * 7));
    }

    #[test]
    fn all_at_once_examples() {
        let id = FeatureMapSpec::new(Family::Identity, 1, 1);
        let x = pt(&[0.3]);
        let set = TrainingSet::unlabeled(vec![x.clone()]).unwrap();
        let (c, m) = build_all_at_once(&id, &x, &cv(&[1.0]), &set).unwrap();
        let s = crate::statevec::apply(&c, QuantumState::zero(c.width()).unwrap()).unwrap();
        assert!((m.expectation(&s).unwrap() - 1.0).abs() < 1e-12);

        let spec = FeatureMapSpec::new(Family::AngleRyCz, 2, 2);
        let x = pt(&[0.1, 2.0]);
        let set = TrainingSet::unlabeled(vec![pt(&[1.0, -0.5])]).unwrap();
        let (c, m) = build_all_at_once(&spec, &x, &cv(&[-1.7]), &set).unwrap();
        let s = crate::statevec::apply(&c, QuantumState::zero(c.width()).unwrap()).unwrap();
        let k = kernel_exact(&spec, &x, set.x(0)).unwrap();
        assert!((m.expectation(&s).unwrap() + 1.7 * k).abs() < 1e-10);
        assert_eq!(c.abstract_cost(), 8 + 1 + (8 + 2));
    }

    #[test]
    fn sampled_outcomes_are_bounded() {
        let spec = FeatureMapSpec::new(Family::AngleRyCz, 2, 1);
        let set = TrainingSet::unlabeled(vec![pt(&[0.0, 1.0]), pt(&[2.0, 0.5]), pt(&[-1.0, 0.2])]).unwrap();
        let alpha = cv(&[0.5, -2.0, 1.0]);
        let (c, m) = build_all_at_once(&spec, &pt(&[0.3, 0.3]), &alpha, &set).unwrap();
        let s = crate::statevec::apply(&c, QuantumState::zero(c.width()).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let o = m.sample_outcome(&s, &mut rng).unwrap();
            assert!(o == 0.0 || o.abs() == 3.5);
        }
    }

    #[test]
    fn v_examples() {
        let spec = FeatureMapSpec::new(Family::AngleRyCz, 2, 2);
        let x = pt(&[0.9, -0.2]);
        let x1 = pt(&[0.1, 0.4]);
        let set = TrainingSet::unlabeled(vec![x1.clone()]).unwrap();
        let (v, layout) = build_v(&spec, &x, &cv(&[1.0]), &set).unwrap();
        assert_eq!(layout.width, 2 + 0 + 3);
        let s = crate::statevec::apply(&v, QuantumState::zero(v.width()).unwrap()).unwrap();
        let k = kernel_exact(&spec, &x, &x1).unwrap();
        assert!((s.probability(&plus_projector(&layout).unwrap()).unwrap() - k).abs() < 1e-10);
        assert!(s.probability(&minus_projector(&layout).unwrap()).unwrap() < 1e-20);
        assert_eq!(v.abstract_cost(), 8 + 1 + (8 + 2) + 5 + 2);

        let x2 = pt(&[-1.0, 1.5]);
        let set = TrainingSet::unlabeled(vec![x1.clone(), x2.clone()]).unwrap();
        let (v, layout) = build_v(&spec, &x1, &cv(&[0.5, -0.5]), &set).unwrap();
        let s = crate::statevec::apply(&v, QuantumState::zero(v.width()).unwrap()).unwrap();
        let k12 = kernel_exact(&spec, &x1, &x2).unwrap();
        assert!((s.probability(&plus_projector(&layout).unwrap()).unwrap() - 0.5).abs() < 1e-10);
        assert!((s.probability(&minus_projector(&layout).unwrap()).unwrap() - 0.5 * k12).abs() < 1e-10);

        let set = TrainingSet::unlabeled(vec![x1, x2]).unwrap();
        let (v, layout) = build_v(&spec, &x, &cv(&[-0.5, -3.0]), &set).unwrap();
        let s = crate::statevec::apply(&v, QuantumState::zero(v.width()).unwrap()).unwrap();
        assert!(s.probability(&plus_projector(&layout).unwrap()).unwrap() < 1e-20);
    }

    #[test]
    fn branches_match_exact_split() {
        let spec = FeatureMapSpec::new(Family::AngleRzrxRing, 3, 2);
        let xs: Vec<DataPoint> = (0..6).map(|i| pt(&[0.5 * i as f64, -0.3, 1.0 + 0.2 * i as f64])).collect();
        let set = TrainingSet::unlabeled(xs).unwrap();
        let alpha = cv(&[0.4, -1.2, 0.0, 2.0, -0.1, 0.9]);
        let x = pt(&[0.2, 0.2, -0.6]);
        let k = kernel_column(&spec, &x, &set).unwrap();
        let (fp, fm) = f_plus_minus_exact(&decompose(&alpha), &k).unwrap();
        let (v, layout) = build_v(&spec, &x, &alpha, &set).unwrap();
        let s = crate::statevec::apply(&v, QuantumState::zero(v.width()).unwrap()).unwrap();
        assert!((s.probability(&plus_projector(&layout).unwrap()).unwrap() - fp).abs() < 1e-10);
        assert!((s.probability(&minus_projector(&layout).unwrap()).unwrap() - fm).abs() < 1e-10);
        let (c, m) = build_all_at_once(&spec, &x, &alpha, &set).unwrap();
        let s = crate::statevec::apply(&c, QuantumState::zero(c.width()).unwrap()).unwrap();
        let f = f_exact(&spec, &alpha, &set, &x).unwrap();
        assert!((m.expectation(&s).unwrap() - f).abs() < 1e-10);
    }

    #[test]
    fn width_overflow_is_reported() {
        let spec = FeatureMapSpec::new(Family::AngleRyCz, 12, 1);
        let xs: Vec<DataPoint> = (0..16).map(|_| pt(&[0.0; 12])).collect();
        let set = TrainingSet::unlabeled(xs).unwrap();
        let alpha = cv(&[1.0; 16]);
        let r = build_v(&spec, &pt(&[0.0; 12]), &alpha, &set);
        assert!(matches!(r, Err(Error::WidthOverflow { needed: 19, .. })));
    }
}
