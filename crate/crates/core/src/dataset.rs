//! Versioned JSON dataset files and the synthetic instance generator.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use crate::coefkit::CoefficientVector;
use crate::error::{Error, Result};
use crate::featuremap::{DataPoint, Family, FeatureMapSpec, LabeledPoint, TrainingSet};
use crate::strategies::Instance;

pub const FORMAT_VERSION: u32 = 1;

/// Shape parameter of the Pareto law drawn for coefficient magnitudes.
/// Below 2 the variance is infinite, so a few coefficients dominate.
pub const PARETO_SHAPE: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub feature_map: FeatureMapSpec,
    pub training: Vec<LabeledPoint>,
    pub alpha: CoefficientVector,
    /// Default query point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<DataPoint>,
}

impl DatasetFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| Error::Dataset { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "format_version {} not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.training_set()?;
        if let Some(q) = &self.query {
            Instance::new(self.feature_map.clone(), self.alpha.clone(), self.training_set()?, q.clone())?;
        } else {
            self.feature_map.validate()?;
            if self.alpha.len() != self.training.len() {
                return Err(Error::LengthMismatch { expected: self.training.len(), got: self.alpha.len() });
            }
        }
        Ok(())
    }

    pub fn training_set(&self) -> Result<TrainingSet> {
        TrainingSet::new(self.training.clone())
    }

    /// Instance at `x`, falling back to the stored query point.
    pub fn instance(&self, x: Option<DataPoint>) -> Result<Instance> {
        let x = x
            .or_else(|| self.query.clone())
            .ok_or_else(|| Error::invalid("no query point given and the dataset stores none"))?;
        Instance::new(self.feature_map.clone(), self.alpha.clone(), self.training_set()?, x)
    }
}

/// The committed reference instance: 3 qubits, 8 points, 2 layers.
pub fn default_fixture() -> DatasetFile {
    DatasetFile::parse(include_str!("../fixtures/default.json")).expect("committed fixture parses")
}

/// Parameters of a generated instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub family: Family,
    pub num_qubits: usize,
    pub num_layers: usize,
    pub num_points: usize,
    /// Target `||alpha||_1`.
    pub l1_norm: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { family: Family::AngleRyCz, num_qubits: 3, num_layers: 2, num_points: 8, l1_norm: 1.0, seed: 42 }
    }
}

/// Random instance: features uniform in `[-pi, pi)`, coefficient magnitudes
/// Pareto distributed and rescaled to `l1_norm`, labels equal to the
/// coefficient signs (each sign a fair coin).
pub fn generate(config: &GeneratorConfig) -> Result<DatasetFile> {
    if config.num_points == 0 {
        return Err(Error::invalid("need at least one training point"));
    }
    if !(config.l1_norm.is_finite() && config.l1_norm > 0.0) {
        return Err(Error::invalid("l1 norm must be positive"));
    }
    let spec = FeatureMapSpec::new(config.family, config.num_qubits, config.num_layers);
    spec.validate()?;
    let dim = spec.data_dim().unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pareto = Pareto::new(1.0, PARETO_SHAPE).map_err(|e| Error::invalid(e.to_string()))?;
    let point = |rng: &mut ChaCha8Rng| {
        DataPoint::new((0..dim).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect())
    };

    let mut training = Vec::with_capacity(config.num_points);
    let mut alpha = Vec::with_capacity(config.num_points);
    for _ in 0..config.num_points {
        let x = point(&mut rng)?;
        let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        training.push(LabeledPoint { x, label });
        alpha.push(label * pareto.sample(&mut rng));
    }
    let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
    let alpha = alpha.into_iter().map(|a| a * config.l1_norm / l1).collect();
    let query = point(&mut rng)?;

    let file = DatasetFile {
        format_version: FORMAT_VERSION,
        name: Some(format!(
            "{}-n{}-N{}-L{}-seed{}",
            family_name(config.family),
            config.num_qubits,
            config.num_points,
            config.num_layers,
            config.seed
        )),
        feature_map: spec,
        training,
        alpha: CoefficientVector::new(alpha)?,
        query: Some(query),
    };
    file.validate()?;
    Ok(file)
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::AngleRyCz => "angle_ry_cz",
        Family::AngleRzrxRing => "angle_rzrx_ring",
        Family::Identity => "identity",
    }
}
