//! Expectation-value estimators: repeated sampling of a projector and
//! iterative amplitude estimation over Grover powers, with query counting.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::statevec::{Circuit, ProjectorSpec, QuantumState};

/// Oracles whose invocations are counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Oracle {
    FeatureMap,
    CoefficientState,
    TrainingSet,
    V,
    VDagger,
}

impl Oracle {
    pub const ALL: [Oracle; 5] =
        [Oracle::FeatureMap, Oracle::CoefficientState, Oracle::TrainingSet, Oracle::V, Oracle::VDagger];

    pub fn name(self) -> &'static str {
        match self {
            Oracle::FeatureMap => "U(x)",
            Oracle::CoefficientState => "W(alpha)",
            Oracle::TrainingSet => "O_dagger(S)",
            Oracle::V => "V",
            Oracle::VDagger => "V_dagger",
        }
    }
}

/// Per-oracle invocation counts plus the strategy-level query total.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryCounter {
    per_oracle: BTreeMap<Oracle, u64>,
    total_queries: u64,
}

impl QueryCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, oracle: Oracle, calls: u64) {
        *self.per_oracle.entry(oracle).or_insert(0) += calls;
    }

    pub fn add_total(&mut self, queries: u64) {
        self.total_queries += queries;
    }

    pub fn total_queries(&self) -> u64 {
        self.total_queries
    }

    pub fn count(&self, oracle: Oracle) -> u64 {
        self.per_oracle.get(&oracle).copied().unwrap_or(0)
    }

    pub fn per_oracle(&self) -> impl Iterator<Item = (Oracle, u64)> + '_ {
        self.per_oracle.iter().map(|(&o, &c)| (o, c))
    }

    pub fn merge(&mut self, other: &QueryCounter) {
        for (o, c) in other.per_oracle() {
            self.record(o, c);
        }
        self.total_queries += other.total_queries;
    }
}

/// Number of successes in `shots` Bernoulli(p) draws, divided by `shots`.
pub fn bernoulli_mean<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be at least 1"));
    }
    Ok(binomial(p, shots, rng)? as f64 / shots as f64)
}

fn binomial<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> Result<u64> {
    let p = p.clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Fraction of `shots` measurements of `circuit|0>` landing in `good`.
/// Shot counts are drawn from the exact binomial law of the projector probability.
pub fn sample_probability<R: Rng + ?Sized>(
    circuit: &Circuit,
    good: &ProjectorSpec,
    shots: u64,
    rng: &mut R,
) -> Result<(f64, QueryCounter)> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be at least 1"));
    }
    let mut s = QuantumState::zero(circuit.width())?;
    s.apply_circuit(circuit)?;
    let p = s.probability(good)?;
    let mut counter = QueryCounter::new();
    counter.add_total(shots);
    Ok((bernoulli_mean(p, shots, rng)?, counter))
}

/// `sin^2((2k + 1) asin(a))`.
pub fn grover_good_probability(a: f64, k: u64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&a) {
        return Err(Error::invalid(format!("amplitude {a} outside [0, 1]")));
    }
    let theta = a.clamp(0.0, 1.0).asin();
    Ok(((2 * k + 1) as f64 * theta).sin().powi(2))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// Closed-form rotation in the two-dimensional good/bad plane.
    #[default]
    Analytic2d,
    /// Explicit statevector application of the Grover operator.
    Fullstate,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Analytic2d => "analytic2d",
            Backend::Fullstate => "fullstate",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic2d" => Ok(Backend::Analytic2d),
            "fullstate" => Ok(Backend::Fullstate),
            other => Err(Error::Parse(format!("unknown backend '{other}'"))),
        }
    }
}

/// Good-state probability after `k` Grover iterations.
pub trait GroverEngine {
    fn good_probability(&mut self, k: u64) -> Result<f64>;
}

pub struct AnalyticGrover {
    amplitude: f64,
}

impl AnalyticGrover {
    pub fn new(amplitude: f64) -> Result<Self> {
        grover_good_probability(amplitude, 0)?;
        Ok(AnalyticGrover { amplitude: amplitude.clamp(0.0, 1.0) })
    }

    pub fn from_prep(prep: &Circuit, good: &ProjectorSpec) -> Result<Self> {
        let mut s = QuantumState::zero(prep.width())?;
        s.apply_circuit(prep)?;
        Self::new(s.probability(good)?.sqrt())
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

impl GroverEngine for AnalyticGrover {
    fn good_probability(&mut self, k: u64) -> Result<f64> {
        grover_good_probability(self.amplitude, k)
    }
}

/// Applies `Q = V S0 V^dagger S_good` to the prepared state, keeping the most
/// recent power so increasing depths are reached incrementally.
pub struct FullstateGrover {
    prep: Circuit,
    prep_inverse: Circuit,
    good: ProjectorSpec,
    initial: QuantumState,
    current: QuantumState,
    depth: u64,
    cache: BTreeMap<u64, f64>,
}

impl FullstateGrover {
    pub fn new(prep: &Circuit, good: &ProjectorSpec) -> Result<Self> {
        good.mask_value(prep.width())?;
        let mut initial = QuantumState::zero(prep.width())?;
        initial.apply_circuit(prep)?;
        Ok(FullstateGrover {
            prep: prep.clone(),
            prep_inverse: prep.inverse(),
            good: good.clone(),
            current: initial.clone(),
            initial,
            depth: 0,
            cache: BTreeMap::new(),
        })
    }

    fn step(&mut self) -> Result<()> {
        let zero = ProjectorSpec::all_zero(0..self.prep.width());
        self.current.flip_phase(&self.good)?;
        self.current.apply_circuit(&self.prep_inverse)?;
        self.current.flip_phase(&zero)?;
        self.current.apply_circuit(&self.prep)?;
        self.depth += 1;
        Ok(())
    }
}

impl GroverEngine for FullstateGrover {
    fn good_probability(&mut self, k: u64) -> Result<f64> {
        if let Some(&p) = self.cache.get(&k) {
            return Ok(p);
        }
        if k < self.depth {
            self.current = self.initial.clone();
            self.depth = 0;
        }
        while self.depth < k {
            self.step()?;
        }
        let p = self.current.probability(&self.good)?;
        self.cache.insert(k, p);
        Ok(p)
    }
}

/// Prep circuit, good subspace and simulation backend of one amplitude.
#[derive(Clone, Debug)]
pub struct GroverSpec {
    pub prep: Circuit,
    pub good: ProjectorSpec,
    pub backend: Backend,
}

impl GroverSpec {
    pub fn engine(&self) -> Result<Box<dyn GroverEngine>> {
        Ok(match self.backend {
            Backend::Analytic2d => Box::new(AnalyticGrover::from_prep(&self.prep, &self.good)?),
            Backend::Fullstate => Box::new(FullstateGrover::new(&self.prep, &self.good)?),
        })
    }
}

/// Schedule parameters of the iterative estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QaeConfig {
    /// Shots taken per round at a fixed Grover depth.
    pub shots_per_round: u64,
    /// Multiplier on the depth expected to suffice for the target precision.
    /// Caps how far a single depth increase may jump.
    pub depth_factor: f64,
    /// Hard stop on the number of rounds.
    pub max_rounds: usize,
}

impl Default for QaeConfig {
    fn default() -> Self {
        QaeConfig { shots_per_round: 16, depth_factor: 1.0, max_rounds: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeEstimate {
    pub value: f64,
    pub epsilon_target: f64,
    pub delta: f64,
    pub counter: QueryCounter,
    /// Final confidence interval on the amplitude.
    pub interval: (f64, f64),
    pub rounds: usize,
    /// Set when the estimate is below the target precision, where the
    /// accuracy guarantee no longer applies.
    pub below_precision: bool,
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside (0, 0.5]")));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::invalid(format!("delta {delta} outside (0, 0.5]")));
    }
    Ok(())
}

/// Amplitude estimate of `spec.prep` with the default schedule.
pub fn qae_estimate<R: Rng + ?Sized>(spec: &GroverSpec, epsilon: f64, delta: f64, rng: &mut R) -> Result<AmplitudeEstimate> {
    check_eps_delta(epsilon, delta)?;
    let mut engine = spec.engine()?;
    qae_with_engine(engine.as_mut(), epsilon, delta, &QaeConfig::default(), rng)
}

/// Iterative amplitude estimation with Chernoff-Hoeffding intervals.
///
/// Each round measures `shots_per_round` times at depth `k`, i.e. with
/// scaled angle `(4k + 2) theta`. The next depth is the largest one, up to the
/// depth expected to reach `epsilon`, that keeps the current interval inside
/// a single half-period of the scaled angle. Shots accumulate while the depth
/// stays the same. One shot at depth `k`
/// costs `2k + 1` queries: `k + 1` of the prep and `k` of its adjoint.
pub fn qae_with_engine<R: Rng + ?Sized>(
    engine: &mut dyn GroverEngine,
    epsilon: f64,
    delta: f64,
    config: &QaeConfig,
    rng: &mut R,
) -> Result<AmplitudeEstimate> {
    check_eps_delta(epsilon, delta)?;
    if config.shots_per_round == 0 {
        return Err(Error::invalid("shots_per_round must be at least 1"));
    }
    let max_iters = ((PI / (8.0 * epsilon)).log2().ceil()).max(1.0);
    let log_term = (2.0 * max_iters / delta).ln();

    let mut counter = QueryCounter::new();
    let (mut theta_lo, mut theta_hi) = (0.0f64, PI / 2.0);
    let mut k = 0u64;
    let mut upper_half = true;
    let (mut hits, mut shots) = (0u64, 0u64);
    let mut rounds = 0;
    let round_half = (log_term / (2.0 * config.shots_per_round as f64)).sqrt();

    while (theta_hi.sin() - theta_lo.sin()) / 2.0 > epsilon && rounds < config.max_rounds {
        rounds += 1;
        // one fresh round at scale K leaves a window of roughly 4 * round_half
        // on the scaled angle; deeper than needed to reach epsilon is wasted
        let mid = (theta_lo + theta_hi) / 2.0;
        let wanted = config.depth_factor * 2.0 * mid.cos() * round_half / epsilon;
        let (next_k, next_half) = find_next_depth(k, theta_lo, theta_hi, upper_half, wanted);
        if next_k != k {
            hits = 0;
            shots = 0;
        }
        k = next_k;
        upper_half = next_half;

        let p = engine.good_probability(k)?;
        hits += binomial(p, config.shots_per_round, rng)?;
        shots += config.shots_per_round;
        counter.record(crate::estimate::Oracle::V, config.shots_per_round * (k + 1));
        counter.record(crate::estimate::Oracle::VDagger, config.shots_per_round * k);
        counter.add_total(config.shots_per_round * (2 * k + 1));

        let p_hat = hits as f64 / shots as f64;
        let half = (log_term / (2.0 * shots as f64)).sqrt();
        let p_lo = (p_hat - half).max(0.0);
        let p_hi = (p_hat + half).min(1.0);

        let scale = (4 * k + 2) as f64;
        let base = (scale * theta_lo / (2.0 * PI)).floor() * 2.0 * PI;
        let (w_lo, w_hi) = if upper_half {
            ((1.0 - 2.0 * p_lo).acos(), (1.0 - 2.0 * p_hi).acos())
        } else {
            (2.0 * PI - (1.0 - 2.0 * p_hi).acos(), 2.0 * PI - (1.0 - 2.0 * p_lo).acos())
        };
        let new_lo = (base + w_lo) / scale;
        let new_hi = (base + w_hi) / scale;
        let (lo, hi) = (theta_lo.max(new_lo), theta_hi.min(new_hi));
        if lo <= hi {
            theta_lo = lo;
            theta_hi = hi;
        } else {
            theta_lo = new_lo.clamp(0.0, PI / 2.0);
            theta_hi = new_hi.clamp(theta_lo, PI / 2.0);
        }
    }

    let interval = (theta_lo.sin(), theta_hi.sin());
    let value = ((interval.0 + interval.1) / 2.0).clamp(0.0, 1.0);
    Ok(AmplitudeEstimate {
        value,
        epsilon_target: epsilon,
        delta,
        counter,
        interval,
        rounds,
        below_precision: value < epsilon,
    })
}

/// Next Grover depth. Candidates are scales `K = 4k + 2` above the current
/// one for which the whole interval maps into one half-period of the
/// scaled angle. The largest candidate not beyond `wanted_scale` wins; if
/// there is none, the smallest one above it; failing both, the depth stays.
fn find_next_depth(k: u64, theta_lo: f64, theta_hi: f64, upper_half: bool, wanted_scale: f64) -> (u64, bool) {
    let current = 4 * k + 2;
    let width = theta_hi - theta_lo;
    if width <= 0.0 {
        return (k, upper_half);
    }
    let floor = current + 4;
    let max_scale = (PI / width).min(1e15) as u64;
    if max_scale < floor + 2 {
        return (k, upper_half);
    }
    let top = round_scale(max_scale);
    if top < floor {
        return (k, upper_half);
    }
    let cap = round_scale((wanted_scale.min(1e15) as u64).clamp(floor, top));
    let feasible = |scale: u64| half_plane(scale, theta_lo, theta_hi).map(|up| ((scale - 2) / 4, up));
    let mut scale = cap;
    while scale >= floor {
        if let Some(found) = feasible(scale) {
            return found;
        }
        scale -= 4;
    }
    let mut scale = cap + 4;
    while scale <= top {
        if let Some(found) = feasible(scale) {
            return found;
        }
        scale += 4;
    }
    (k, upper_half)
}

/// Largest `K <= scale` with `K = 2 (mod 4)`.
fn round_scale(scale: u64) -> u64 {
    scale - (scale + 2) % 4
}

/// `Some(true)` if `[K lo, K hi]` lies in the upper half `[0, pi]` of a
/// period, `Some(false)` for the lower half, `None` when it straddles.
fn half_plane(scale: u64, theta_lo: f64, theta_hi: f64) -> Option<bool> {
    const SLACK: f64 = 1e-12;
    let lo = (scale as f64 * theta_lo).rem_euclid(2.0 * PI);
    let hi = (scale as f64 * theta_hi).rem_euclid(2.0 * PI);
    let hi = if hi < SLACK && lo > PI { 2.0 * PI } else { hi };
    if lo > hi {
        None
    } else if hi <= PI + SLACK {
        Some(true)
    } else if lo >= PI - SLACK {
        Some(false)
    } else {
        None
    }
}

/// Median of `repetitions` independent runs. `repetitions` must be odd.
pub fn median_amplify<R, F>(mut estimator: F, repetitions: usize, rng: &mut R) -> Result<f64>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Result<f64>,
{
    if repetitions == 0 || repetitions.is_multiple_of(2) {
        return Err(Error::invalid(format!("repetitions must be odd, got {repetitions}")));
    }
    let mut runs = (0..repetitions).map(|_| estimator(rng)).collect::<Result<Vec<f64>>>()?;
    runs.sort_by(f64::total_cmp);
    Ok(runs[repetitions / 2])
}
