//! The seven inference strategies and the budget allocator.
//!
//! Every strategy estimates `f(x) = sum_i alpha_i k(x, x_i)` to additive
//! precision `epsilon`. Outcome statistics are drawn from the exact
//! probabilities of the simulated circuits, so a shot costs one random draw
//! regardless of circuit size.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Deserialize;

use crate::coefkit::{decompose, CoefDecomposition, CoefficientVector, NormOrder};
use crate::costmodel::{gates_per_query, GateCostModel};
use crate::error::{Error, Result};
use crate::estimate::{
    qae_with_engine, AnalyticGrover, Backend, FullstateGrover, GroverEngine, Oracle, QaeConfig, QueryCounter,
};
use crate::featuremap::{build_u, f_exact, DataPoint, FeatureMapSpec, TrainingSet};
use crate::oracles::{build_all_at_once, build_v, minus_projector, plus_projector, RegisterLayout};
use crate::statevec::{Circuit, ProjectorSpec, QuantumState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyId {
    ListSumFixedSampling,
    ListSumAdaptiveSampling,
    ListSumFixedQae,
    ListSumAdaptiveQae,
    AllAtOnceSampling,
    AllAtOnceQae,
    SampleAverage,
}

impl StrategyId {
    pub const ALL: [StrategyId; 7] = [
        StrategyId::ListSumFixedSampling,
        StrategyId::ListSumAdaptiveSampling,
        StrategyId::ListSumFixedQae,
        StrategyId::ListSumAdaptiveQae,
        StrategyId::AllAtOnceSampling,
        StrategyId::AllAtOnceQae,
        StrategyId::SampleAverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::ListSumFixedSampling => "list-sum-fixed-sampling",
            StrategyId::ListSumAdaptiveSampling => "list-sum-adaptive-sampling",
            StrategyId::ListSumFixedQae => "list-sum-fixed-qae",
            StrategyId::ListSumAdaptiveQae => "list-sum-adaptive-qae",
            StrategyId::AllAtOnceSampling => "all-at-once-sampling",
            StrategyId::AllAtOnceQae => "all-at-once-qae",
            StrategyId::SampleAverage => "sample-average",
        }
    }

    pub fn uses_qae(self) -> bool {
        matches!(self, StrategyId::ListSumFixedQae | StrategyId::ListSumAdaptiveQae | StrategyId::AllAtOnceQae)
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, StrategyId::ListSumAdaptiveSampling | StrategyId::ListSumAdaptiveQae)
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown strategy '{s}'")))
    }
}

/// Budget constants, read from `calibration.toml`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Calibration {
    pub format_version: u32,
    pub sampling: SamplingConstants,
    pub qae: QaeConstants,
    pub all_at_once: AllAtOnceConstants,
    pub sample_average: SampleAverageConstants,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SamplingConstants {
    pub variance_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct QaeConstants {
    pub shots_per_round: u64,
    pub depth_factor: f64,
    pub precision_factor: f64,
    pub query_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct AllAtOnceConstants {
    pub sampling_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SampleAverageConstants {
    pub sampling_constant: f64,
    pub qae_inner_precision: f64,
}

const CALIBRATION_VERSION: u32 = 1;
const DEFAULT_CALIBRATION: &str = include_str!("../calibration.toml");

impl Calibration {
    pub fn parse(text: &str) -> Result<Self> {
        let cal: Calibration = toml::from_str(text).map_err(|e| Error::Parse(format!("calibration: {e}")))?;
        if cal.format_version != CALIBRATION_VERSION {
            return Err(Error::Parse(format!(
                "calibration format_version {} (expected {CALIBRATION_VERSION})",
                cal.format_version
            )));
        }
        let positive = [
            cal.sampling.variance_constant,
            cal.qae.depth_factor,
            cal.qae.precision_factor,
            cal.qae.query_constant,
            cal.all_at_once.sampling_constant,
            cal.sample_average.sampling_constant,
            cal.sample_average.qae_inner_precision,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || cal.qae.shots_per_round == 0 {
            return Err(Error::Parse("calibration constants must be positive".into()));
        }
        Ok(cal)
    }

    pub fn qae_config(&self) -> QaeConfig {
        QaeConfig {
            shots_per_round: self.qae.shots_per_round,
            depth_factor: self.qae.depth_factor,
            ..QaeConfig::default()
        }
    }
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration::parse(DEFAULT_CALIBRATION).expect("bundled calibration parses")
    }
}

/// Variance budget `eps^2 / (2 ln(2 / delta))`.
pub fn variance_budget(epsilon: f64, delta: f64) -> Result<f64> {
    check_eps_delta(epsilon, delta)?;
    Ok(epsilon * epsilon / (2.0 * (2.0 / delta).ln()))
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Per-index budgets. Indices outside the support get 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BudgetAllocation {
    pub per_index: Vec<u64>,
    pub total: u64,
}

impl BudgetAllocation {
    pub fn from_per_index(per_index: Vec<u64>) -> Self {
        let total = per_index.iter().sum();
        BudgetAllocation { per_index, total }
    }

    /// `sum_i alpha_i^2 / M_i^r` over the support.
    pub fn variance(&self, decomp: &CoefDecomposition, r: u32) -> f64 {
        let mags = decomp.magnitudes();
        decomp.support().map(|i| mags[i].powi(2) / (self.per_index[i] as f64).powi(r as i32)).sum()
    }
}

/// Budgets minimizing `sum M_i` subject to `sum alpha_i^2 / M_i^r <= C`,
/// with `C = eps^2 / (2 ln(2 / delta))`.
pub fn allocate_budget(decomp: &CoefDecomposition, epsilon: f64, delta: f64, r: u32) -> Result<BudgetAllocation> {
    allocate_for_target(decomp, variance_budget(epsilon, delta)?, r)
}

/// Closed-form optimum for an explicit variance target `c`:
/// `M_i = ceil(|alpha_i|^(2/(r+1)) * ||alpha||_{2/(r+1)}^(2/(r(r+1))) / c^(1/r))`.
pub fn allocate_for_target(decomp: &CoefDecomposition, c: f64, r: u32) -> Result<BudgetAllocation> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("variance target must be positive, got {c}")));
    }
    let q = match r {
        1 => NormOrder::One,
        2 => NormOrder::TwoThirds,
        _ => return Err(Error::invalid(format!("r must be 1 or 2, got {r}"))),
    };
    let rf = r as f64;
    let mags = decomp.magnitudes();
    let norm = decomp.norm(q);
    let scale = norm.powf(2.0 / (rf * (rf + 1.0))) / c.powf(1.0 / rf);
    let mut per_index = vec![0u64; decomp.len()];
    for i in decomp.support() {
        per_index[i] = ((mags[i].powf(2.0 / (rf + 1.0)) * scale).ceil() as u64).max(1);
    }
    let mut alloc = BudgetAllocation::from_per_index(per_index);
    // the ceiling can land one ulp short of the target; top up the worst term
    while alloc.variance(decomp, r) > c {
        let worst = decomp
            .support()
            .max_by(|&a, &b| {
                let va = mags[a].powi(2) / (alloc.per_index[a] as f64).powi(r as i32);
                let vb = mags[b].powi(2) / (alloc.per_index[b] as f64).powi(r as i32);
                va.total_cmp(&vb)
            })
            .expect("support is nonempty");
        alloc.per_index[worst] += 1;
        alloc.total += 1;
    }
    Ok(alloc)
}

/// Inner estimator of the sample-and-average strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SampleInner {
    /// One shot of the kernel circuit per outer sample.
    #[default]
    Sampling,
    /// One amplitude-estimation run per outer sample.
    Qae,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InferOptions {
    pub backend: Backend,
    pub calibration: Calibration,
    pub sample_inner: SampleInner,
}

/// Feature map, coefficients, training set and query point.
#[derive(Clone, Debug)]
pub struct Instance {
    pub spec: FeatureMapSpec,
    pub alpha: CoefficientVector,
    pub set: TrainingSet,
    pub x: DataPoint,
}

impl Instance {
    pub fn new(spec: FeatureMapSpec, alpha: CoefficientVector, set: TrainingSet, x: DataPoint) -> Result<Self> {
        spec.validate()?;
        if alpha.len() != set.len() {
            return Err(Error::LengthMismatch { expected: set.len(), got: alpha.len() });
        }
        if let Some(d) = spec.data_dim() {
            for p in set.points().iter().map(|p| &p.x).chain(std::iter::once(&x)) {
                if p.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
                }
            }
        }
        Ok(Instance { spec, alpha, set, x })
    }
}

/// Circuits and exact probabilities shared by all trials on one instance.
#[derive(Clone, Debug)]
pub struct PreparedInstance {
    pub instance: Instance,
    pub decomp: CoefDecomposition,
    pub cost_model: GateCostModel,
    /// `k(x, x_i)` from the adjoint circuits, indexed like the training set.
    pub kernels: Vec<f64>,
    /// Independent reference value.
    pub exact: f64,
    adjoints: Vec<Circuit>,
    all_at_once: Option<AllAtOnceData>,
}

#[derive(Clone, Debug)]
struct AllAtOnceData {
    /// `P(data = 0, sign = +)` and `P(data = 0, sign = -)` of the single-observable circuit.
    branches: (f64, f64),
    v: Circuit,
    layout: RegisterLayout,
    /// `sqrt(f+)` and `sqrt(f-)` from `V|0>`.
    amplitudes: (f64, f64),
}

impl PreparedInstance {
    /// Builds all circuits. All-at-once data is skipped when the wider
    /// registers exceed the simulator; those strategies then report the overflow.
    pub fn new(instance: Instance) -> Result<Self> {
        let Instance { spec, alpha, set, x } = &instance;
        let decomp = decompose(alpha);
        let n = spec.num_qubits;
        let u_x = build_u(spec, x)?;
        let data_zero = ProjectorSpec::all_zero(0..n);
        let mut adjoints = Vec::with_capacity(set.len());
        let mut kernels = Vec::with_capacity(set.len());
        for i in 0..set.len() {
            let mut a = u_x.clone();
            a.append(&build_u(spec, set.x(i))?.inverse())?;
            let mut s = QuantumState::zero(n)?;
            s.apply_circuit(&a)?;
            kernels.push(s.probability(&data_zero)?);
            adjoints.push(a);
        }
        let exact = f_exact(spec, alpha, set, x)?;
        let all_at_once = match RegisterLayout::amplitude_encoding(n, set.len()) {
            Ok(_) => Some(all_at_once_data(&instance)?),
            Err(Error::WidthOverflow { .. }) => None,
            Err(e) => return Err(e),
        };
        let cost_model = GateCostModel::for_instance(spec, set.len())?;
        Ok(PreparedInstance { instance, decomp, cost_model, kernels, exact, adjoints, all_at_once })
    }

    pub fn num_qubits(&self) -> usize {
        self.instance.spec.num_qubits
    }

    fn aao(&self) -> Result<&AllAtOnceData> {
        match &self.all_at_once {
            Some(d) => Ok(d),
            None => Err(RegisterLayout::amplitude_encoding(self.num_qubits(), self.decomp.len())
                .err()
                .unwrap_or_else(|| Error::invalid("all-at-once circuits unavailable"))),
        }
    }

    /// Exact `(f+, f-)` read off the amplitude-encoding circuit.
    pub fn branch_amplitudes(&self) -> Result<(f64, f64)> {
        Ok(self.aao()?.amplitudes)
    }

    fn kernel_engine(&self, i: usize, backend: Backend) -> Result<Box<dyn GroverEngine>> {
        Ok(match backend {
            Backend::Analytic2d => Box::new(AnalyticGrover::new(self.kernels[i].sqrt())?),
            Backend::Fullstate => {
                Box::new(FullstateGrover::new(&self.adjoints[i], &ProjectorSpec::all_zero(0..self.num_qubits()))?)
            }
        })
    }

    fn branch_engine(&self, negative: bool, backend: Backend) -> Result<Box<dyn GroverEngine>> {
        let d = self.aao()?;
        Ok(match backend {
            Backend::Analytic2d => {
                Box::new(AnalyticGrover::new(if negative { d.amplitudes.1 } else { d.amplitudes.0 })?)
            }
            Backend::Fullstate => {
                let good = if negative { minus_projector(&d.layout)? } else { plus_projector(&d.layout)? };
                Box::new(FullstateGrover::new(&d.v, &good)?)
            }
        })
    }
}

fn all_at_once_data(inst: &Instance) -> Result<AllAtOnceData> {
    let (circ, meas) = build_all_at_once(&inst.spec, &inst.x, &inst.alpha, &inst.set)?;
    let mut s = QuantumState::zero(circ.width())?;
    s.apply_circuit(&circ)?;
    let branches = meas.branch_probabilities(&s)?;
    let (v, layout) = build_v(&inst.spec, &inst.x, &inst.alpha, &inst.set)?;
    let mut s = QuantumState::zero(v.width())?;
    s.apply_circuit(&v)?;
    let amplitudes = (s.probability(&plus_projector(&layout)?)?.sqrt(), s.probability(&minus_projector(&layout)?)?.sqrt());
    Ok(AllAtOnceData { branches, v, layout, amplitudes })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub strategy: StrategyId,
    pub estimate: f64,
    pub exact: f64,
    pub epsilon_target: f64,
    pub delta: f64,
    pub counter: QueryCounter,
    pub modeled_gates: u64,
    /// Per-index budgets, present for the adaptive list-and-sum strategies.
    pub allocation: Option<BudgetAllocation>,
    pub seed: u64,
}

impl EstimateReport {
    pub fn abs_error(&self) -> f64 {
        (self.estimate - self.exact).abs()
    }

    pub fn total_queries(&self) -> u64 {
        self.counter.total_queries()
    }
}

/// Predicted label; an estimate of exactly 0 maps to `+1`.
pub fn sign_of(report: &EstimateReport) -> i8 {
    if report.estimate >= 0.0 || report.estimate.is_nan() {
        1
    } else {
        -1
    }
}

/// Runs one strategy with its own RNG stream seeded from `seed`.
pub fn infer(
    strategy: StrategyId,
    prepared: &PreparedInstance,
    epsilon: f64,
    delta: f64,
    options: &InferOptions,
    seed: u64,
) -> Result<EstimateReport> {
    let c = variance_budget(epsilon, delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cal = &options.calibration;
    let decomp = &prepared.decomp;
    let mut counter = QueryCounter::new();
    let mut allocation = None;

    let estimate = match strategy {
        StrategyId::ListSumFixedSampling => {
            let m = budget(cal.sampling.variance_constant * decomp.norm(NormOrder::Two).powi(2) / c);
            let per_index = decomp.support().fold(vec![0; decomp.len()], |mut v, i| {
                v[i] = m;
                v
            });
            list_sum_sampling(prepared, &per_index, &mut counter, &mut rng)?
        }
        StrategyId::ListSumAdaptiveSampling => {
            let alloc = allocate_for_target(decomp, c / cal.sampling.variance_constant, 1)?;
            let est = list_sum_sampling(prepared, &alloc.per_index, &mut counter, &mut rng)?;
            allocation = Some(alloc);
            est
        }
        StrategyId::ListSumFixedQae => {
            let m = budget(decomp.norm(NormOrder::Two) / c.sqrt());
            let per_index = decomp.support().fold(vec![0; decomp.len()], |mut v, i| {
                v[i] = m;
                v
            });
            list_sum_qae(prepared, &per_index, delta, options, &mut counter, &mut rng)?
        }
        StrategyId::ListSumAdaptiveQae => {
            let alloc = allocate_for_target(decomp, c, 2)?;
            let est = list_sum_qae(prepared, &alloc.per_index, delta, options, &mut counter, &mut rng)?;
            allocation = Some(alloc);
            est
        }
        StrategyId::AllAtOnceSampling => {
            let l1 = decomp.l1_norm;
            let shots = budget(cal.all_at_once.sampling_constant * l1 * l1 / c);
            let (p_plus, p_minus) = prepared.aao()?.branches;
            let plus = binomial(shots, p_plus, &mut rng)?;
            let rest = 1.0 - p_plus;
            let minus = if rest > 0.0 { binomial(shots - plus, p_minus / rest, &mut rng)? } else { 0 };
            counter.add_total(shots);
            for o in [Oracle::FeatureMap, Oracle::CoefficientState, Oracle::TrainingSet] {
                counter.record(o, shots);
            }
            l1 * (plus as f64 - minus as f64) / shots as f64
        }
        StrategyId::AllAtOnceQae => {
            let l1 = decomp.l1_norm;
            let amp_eps = (epsilon / (4.0 * l1)).min(0.5);
            let config = cal.qae_config();
            let mut branch = |negative: bool, rng: &mut ChaCha8Rng| -> Result<f64> {
                let mut engine = prepared.branch_engine(negative, options.backend)?;
                let run = qae_with_engine(engine.as_mut(), amp_eps, delta / 2.0, &config, rng)?;
                counter.merge(&run.counter);
                Ok(run.value * run.value)
            };
            let f_plus = branch(false, &mut rng)?;
            let f_minus = branch(true, &mut rng)?;
            let total = counter.total_queries();
            for o in [Oracle::FeatureMap, Oracle::CoefficientState, Oracle::TrainingSet] {
                counter.record(o, total);
            }
            l1 * (f_plus - f_minus)
        }
        StrategyId::SampleAverage => sample_average(prepared, c, delta, options, &mut counter, &mut rng)?,
    };

    let modeled_gates = gates_per_query(strategy, &prepared.cost_model) * counter.total_queries();
    Ok(EstimateReport {
        strategy,
        estimate,
        exact: prepared.exact,
        epsilon_target: epsilon,
        delta,
        counter,
        modeled_gates,
        allocation,
        seed,
    })
}

/// Ceiling with floor 1.
fn budget(x: f64) -> u64 {
    (x.ceil() as u64).max(1)
}

fn binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> Result<u64> {
    let dist = Binomial::new(trials, p.clamp(0.0, 1.0)).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(dist.sample(rng))
}

fn record_list_sum(counter: &mut QueryCounter, queries: u64) {
    // one query of the kernel circuit applies U(x) and U(x_i)^dagger
    counter.add_total(queries);
    counter.record(Oracle::FeatureMap, 2 * queries);
}

fn list_sum_sampling<R: Rng + ?Sized>(
    prepared: &PreparedInstance,
    per_index: &[u64],
    counter: &mut QueryCounter,
    rng: &mut R,
) -> Result<f64> {
    let d = &prepared.decomp;
    let mut sum = 0.0;
    for i in d.support() {
        let m = per_index[i];
        let hits = binomial(m, prepared.kernels[i], rng)?;
        record_list_sum(counter, m);
        sum += d.signs[i].value() * d.l1_norm * d.probs[i] * hits as f64 / m as f64;
    }
    Ok(sum)
}

fn list_sum_qae<R: Rng + ?Sized>(
    prepared: &PreparedInstance,
    per_index: &[u64],
    delta: f64,
    options: &InferOptions,
    counter: &mut QueryCounter,
    rng: &mut R,
) -> Result<f64> {
    let d = &prepared.decomp;
    let cal = &options.calibration;
    let config = cal.qae_config();
    let term_delta = (delta / d.support_len() as f64).min(0.5);
    let mut sum = 0.0;
    for i in d.support() {
        let amp_eps = (cal.qae.precision_factor / per_index[i] as f64).min(0.5);
        let mut engine = prepared.kernel_engine(i, options.backend)?;
        let run = qae_with_engine(engine.as_mut(), amp_eps, term_delta, &config, rng)?;
        record_list_sum(counter, run.counter.total_queries());
        sum += d.signs[i].value() * d.l1_norm * d.probs[i] * run.value * run.value;
    }
    Ok(sum)
}

/// Draws `samples` indices from `p`, then one kernel estimate per draw.
/// Index counts come from sequential binomial splits of the multinomial.
fn sample_average<R: Rng + ?Sized>(
    prepared: &PreparedInstance,
    c: f64,
    delta: f64,
    options: &InferOptions,
    counter: &mut QueryCounter,
    rng: &mut R,
) -> Result<f64> {
    let d = &prepared.decomp;
    let cal = &options.calibration;
    let samples = budget(cal.sample_average.sampling_constant * d.l1_norm * d.l1_norm / c);
    let mut remaining = samples;
    let mut mass = 1.0;
    let mut signed_sum = 0.0;
    for i in d.support() {
        if remaining == 0 {
            break;
        }
        let draws = if mass <= d.probs[i] { remaining } else { binomial(remaining, d.probs[i] / mass, rng)? };
        remaining -= draws;
        mass -= d.probs[i];
        if draws == 0 {
            continue;
        }
        let kernel_sum = match options.sample_inner {
            SampleInner::Sampling => {
                record_list_sum(counter, draws);
                binomial(draws, prepared.kernels[i], rng)? as f64
            }
            SampleInner::Qae => {
                let config = cal.qae_config();
                let mut total = 0.0;
                for _ in 0..draws {
                    let mut engine = prepared.kernel_engine(i, options.backend)?;
                    let run = qae_with_engine(
                        engine.as_mut(),
                        cal.sample_average.qae_inner_precision,
                        delta.min(0.5),
                        &config,
                        rng,
                    )?;
                    record_list_sum(counter, run.counter.total_queries());
                    total += run.value * run.value;
                }
                total
            }
        };
        signed_sum += d.signs[i].value() * kernel_sum;
    }
    Ok(d.l1_norm * signed_sum / samples as f64)
}
