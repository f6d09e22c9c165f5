//! Data-dependent feature-map circuits and the brute-force kernel oracle.

use serde::{Deserialize, Serialize};

use crate::coefkit::CoefficientVector;
use crate::error::{Error, Result};
use crate::statevec::{Circuit, Gate, QuantumState, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Per layer: `RY(x_j + offset)` on every qubit, then a ring of CZ gates.
    AngleRyCz,
    /// Per layer: `RX` then `RZ` on every qubit, then a ring of CNOT gates.
    AngleRzrxRing,
    /// No gates; every kernel value is 1.
    Identity,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angle_ry_cz" => Ok(Family::AngleRyCz),
            "angle_rzrx_ring" => Ok(Family::AngleRzrxRing),
            "identity" => Ok(Family::Identity),
            other => Err(Error::Parse(format!("unknown feature-map family '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    pub family: Family,
    pub num_qubits: usize,
    pub num_layers: usize,
    /// Angle added to every feature of a layer, one entry per layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<f64>>,
}

impl FeatureMapSpec {
    pub fn new(family: Family, num_qubits: usize, num_layers: usize) -> Self {
        FeatureMapSpec { family, num_qubits, num_layers, offsets: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(Error::invalid("feature map needs at least one qubit"));
        }
        if self.num_qubits > MAX_QUBITS {
            return Err(Error::WidthOverflow { needed: self.num_qubits, limit: MAX_QUBITS });
        }
        if let Some(off) = &self.offsets {
            if off.len() != self.num_layers {
                return Err(Error::LengthMismatch { expected: self.num_layers, got: off.len() });
            }
            if let Some(i) = off.iter().position(|o| !o.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(())
    }

    /// Required feature count, or `None` when any dimension is accepted.
    pub fn data_dim(&self) -> Option<usize> {
        match self.family {
            Family::Identity => None,
            _ => Some(self.num_qubits),
        }
    }

    fn offset(&self, layer: usize) -> f64 {
        self.offsets.as_ref().map_or(0.0, |o| o[layer])
    }

    fn check_point(&self, x: &DataPoint) -> Result<()> {
        if let Some(d) = self.data_dim() {
            if x.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: x.dim() });
            }
        }
        Ok(())
    }
}

/// Modeled gate count of one feature-map query.
pub fn gate_count(spec: &FeatureMapSpec) -> u64 {
    let (n, l) = (spec.num_qubits as u64, spec.num_layers as u64);
    match spec.family {
        Family::AngleRyCz => l * 2 * n,
        Family::AngleRzrxRing => l * 3 * n,
        Family::Identity => 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DataPoint(Vec<f64>);

impl DataPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(DataPoint(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for DataPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        DataPoint::new(v)
    }
}

impl From<DataPoint> for Vec<f64> {
    fn from(p: DataPoint) -> Self {
        p.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: DataPoint,
    pub label: f64,
}

/// Training inputs with their labels. Nonempty, one shared dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    points: Vec<LabeledPoint>,
}

impl TrainingSet {
    pub fn new(points: Vec<LabeledPoint>) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::invalid("empty training set"))?;
        let d = first.x.dim();
        for p in &points {
            if p.x.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.x.dim() });
            }
            if !p.label.is_finite() {
                return Err(Error::invalid("non-finite label"));
            }
        }
        Ok(TrainingSet { points })
    }

    /// Builds a set with every label equal to +1.
    pub fn unlabeled(xs: Vec<DataPoint>) -> Result<Self> {
        TrainingSet::new(xs.into_iter().map(|x| LabeledPoint { x, label: 1.0 }).collect())
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> &DataPoint {
        &self.points[i].x
    }
}

/// The feature-map circuit `U(x)` on `num_qubits` qubits, charged [`gate_count`].
pub fn build_u(spec: &FeatureMapSpec, x: &DataPoint) -> Result<Circuit> {
    spec.validate()?;
    spec.check_point(x)?;
    let n = spec.num_qubits;
    let mut c = Circuit::new(n)?;
    let feature = |layer: usize, q: usize| {
        let d = x.dim();
        x.coords()[(layer * n + q) % d] + spec.offset(layer)
    };
    for layer in 0..spec.num_layers {
        match spec.family {
            Family::Identity => {}
            Family::AngleRyCz => {
                for q in 0..n {
                    c.push(Gate::ry(q, feature(layer, q)))?;
                }
                if n > 1 {
                    for q in 0..n {
                        c.push(Gate::cz(q, (q + 1) % n))?;
                    }
                }
            }
            Family::AngleRzrxRing => {
                for q in 0..n {
                    c.push(Gate::rx(q, feature(layer, q)))?;
                    c.push(Gate::rz(q, feature(layer, q)))?;
                }
                if n > 1 {
                    for q in 0..n {
                        c.push(Gate::cnot(q, (q + 1) % n))?;
                    }
                }
            }
        }
    }
    Ok(c.with_cost(gate_count(spec)))
}

/// `U(x)|0>`.
pub fn feature_state(spec: &FeatureMapSpec, x: &DataPoint) -> Result<QuantumState> {
    let u = build_u(spec, x)?;
    let mut s = QuantumState::zero(spec.num_qubits)?;
    s.apply_circuit(&u)?;
    Ok(s)
}

/// `|<psi(x2)|psi(x)>|^2` from exact statevectors.
pub fn kernel_exact(spec: &FeatureMapSpec, x: &DataPoint, x2: &DataPoint) -> Result<f64> {
    if x.dim() != x2.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: x2.dim() });
    }
    let a = feature_state(spec, x)?;
    let b = feature_state(spec, x2)?;
    Ok(b.inner(&a)?.norm_sqr())
}

/// Kernel values between `x` and every training input.
pub fn kernel_column(spec: &FeatureMapSpec, x: &DataPoint, set: &TrainingSet) -> Result<Vec<f64>> {
    let a = feature_state(spec, x)?;
    set.points()
        .iter()
        .map(|p| {
            if p.x.dim() != x.dim() {
                return Err(Error::DimensionMismatch { expected: x.dim(), got: p.x.dim() });
            }
            Ok(feature_state(spec, &p.x)?.inner(&a)?.norm_sqr())
        })
        .collect()
}

/// Ground-truth inference value `sum_i alpha_i k(x, x_i)`.
pub fn f_exact(spec: &FeatureMapSpec, alpha: &CoefficientVector, set: &TrainingSet, x: &DataPoint) -> Result<f64> {
    if alpha.len() != set.len() {
        return Err(Error::LengthMismatch { expected: set.len(), got: alpha.len() });
    }
    let k = kernel_column(spec, x, set)?;
    Ok(alpha.entries().iter().zip(&k).map(|(a, k)| a * k).sum())
}
