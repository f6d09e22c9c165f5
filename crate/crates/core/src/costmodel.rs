//! Closed-form query and gate totals per strategy, the strategy recommender
//! and the all-at-once versus list-and-sum gate ratio bounds.

use std::fmt;
use std::str::FromStr;

use crate::coefkit::{CoefDecomposition, NormOrder};
use crate::error::{Error, Result};
use crate::featuremap::{gate_count, FeatureMapSpec};
use crate::oracles::{index_bits, o_dagger_cost};
use crate::statevec::mcx_cost;
use crate::strategies::StrategyId;

/// Gate costs of one instance: `g` gates per feature-map query, `n_terms`
/// training points (also the coefficient-state cost), `n` data qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateCostModel {
    pub g: u64,
    pub n_terms: usize,
    pub n: usize,
}

impl GateCostModel {
    pub fn new(g: u64, n_terms: usize, n: usize) -> Result<Self> {
        if n_terms == 0 || n == 0 {
            return Err(Error::invalid("cost model needs at least one term and one qubit"));
        }
        Ok(GateCostModel { g, n_terms, n })
    }

    pub fn for_instance(spec: &FeatureMapSpec, n_terms: usize) -> Result<Self> {
        Self::new(gate_count(spec), n_terms, spec.num_qubits)
    }

    pub fn log_n_idx(&self) -> usize {
        index_bits(self.n_terms)
    }

    /// Modeled cost of the training-set oracle.
    pub fn training_set_cost(&self) -> u64 {
        o_dagger_cost(self.g, self.n_terms)
    }
}

/// Leading-order query count, without constants.
pub fn queries_theoretical(strategy: StrategyId, decomp: &CoefDecomposition, epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let support = decomp.support_len() as f64;
    let l1 = decomp.l1_norm;
    Ok(match strategy {
        StrategyId::ListSumFixedSampling => support * decomp.norm(NormOrder::Two).powi(2) / epsilon.powi(2),
        StrategyId::ListSumAdaptiveSampling | StrategyId::AllAtOnceSampling | StrategyId::SampleAverage => {
            l1 * l1 / epsilon.powi(2)
        }
        StrategyId::ListSumFixedQae => support * decomp.norm(NormOrder::Two) / epsilon,
        StrategyId::ListSumAdaptiveQae => decomp.norm(NormOrder::TwoThirds) / epsilon,
        StrategyId::AllAtOnceQae => l1 / epsilon,
    })
}

/// Modeled gates of one counted query.
pub fn gates_per_query(strategy: StrategyId, model: &GateCostModel) -> u64 {
    let all_at_once = model.g + model.n_terms as u64 + model.training_set_cost();
    match strategy {
        StrategyId::AllAtOnceSampling => all_at_once,
        StrategyId::AllAtOnceQae => all_at_once + mcx_cost(model.n) + 2,
        _ => 2 * model.g,
    }
}

pub fn gates_theoretical(strategy: StrategyId, model: &GateCostModel, decomp: &CoefDecomposition, epsilon: f64) -> Result<f64> {
    Ok(queries_theoretical(strategy, decomp, epsilon)? * gates_per_query(strategy, model) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    Queries,
    Gates,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Queries => "queries",
            Criterion::Gates => "gates",
        }
    }

    /// Strategy the asymptotic analysis singles out under this criterion.
    pub fn expected_winner(self) -> StrategyId {
        match self {
            Criterion::Queries => StrategyId::AllAtOnceQae,
            Criterion::Gates => StrategyId::ListSumAdaptiveQae,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "queries" => Ok(Criterion::Queries),
            "gates" => Ok(Criterion::Gates),
            _ => Err(Error::Parse(format!("unknown criterion '{s}' (expected queries or gates)"))),
        }
    }
}

/// Equal totals are ordered by this list.
const TIE_ORDER: [StrategyId; 7] = [
    StrategyId::AllAtOnceQae,
    StrategyId::ListSumAdaptiveQae,
    StrategyId::ListSumFixedQae,
    StrategyId::AllAtOnceSampling,
    StrategyId::SampleAverage,
    StrategyId::ListSumAdaptiveSampling,
    StrategyId::ListSumFixedSampling,
];

#[derive(Clone, Debug, PartialEq)]
pub struct Recommendation {
    pub criterion: Criterion,
    /// All strategies sorted by total, smallest first.
    pub ranking: Vec<(StrategyId, f64)>,
}

impl Recommendation {
    pub fn winner(&self) -> StrategyId {
        self.ranking[0].0
    }

    /// Whether `epsilon` lies where amplitude estimation beats sampling for
    /// every instance of this size: `eps <= ||alpha||_1` for queries and
    /// `eps <= ||alpha||_1 / sqrt(N)` for gates. Outside it a sampling
    /// strategy can win on the exact formulas.
    pub fn in_regime(model: &GateCostModel, decomp: &CoefDecomposition, epsilon: f64, criterion: Criterion) -> bool {
        match criterion {
            Criterion::Queries => epsilon <= decomp.l1_norm,
            Criterion::Gates => epsilon <= decomp.l1_norm / (model.n_terms as f64).sqrt(),
        }
    }
}

/// Ranks all strategies by the exact closed-form total under `criterion`.
pub fn recommend(
    model: &GateCostModel,
    decomp: &CoefDecomposition,
    epsilon: f64,
    criterion: Criterion,
) -> Result<Recommendation> {
    let mut ranking = TIE_ORDER
        .into_iter()
        .map(|id| {
            let total = match criterion {
                Criterion::Queries => queries_theoretical(id, decomp, epsilon)?,
                Criterion::Gates => gates_theoretical(id, model, decomp, epsilon)?,
            };
            Ok((id, total))
        })
        .collect::<Result<Vec<_>>>()?;
    // stable sort keeps the tie order
    ranking.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(Recommendation { criterion, ranking })
}

/// Ratio of the all-at-once and list-and-sum amplitude-estimation gate
/// totals with its bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub ratio: f64,
}

impl Sandwich {
    /// Bounds hold up to floating-point rounding.
    pub fn holds(&self) -> bool {
        let slack = 1e-12 * self.upper;
        self.lower - slack <= self.ratio && self.ratio <= self.upper + slack
    }
}

/// `G_A / G_L` with `G_L = G ||alpha||_{2/3}` and `G_A = (N G + n) ||alpha||_1`,
/// bounded by `[sqrt(N) + n / (G sqrt(N)), N + n / G]`.
pub fn sandwich_check(model: &GateCostModel, decomp: &CoefDecomposition) -> Result<Sandwich> {
    if model.g == 0 {
        return Err(Error::invalid("ratio bounds need a feature map with at least one gate"));
    }
    let g = model.g as f64;
    let big_n = model.n_terms as f64;
    let n = model.n as f64;
    let g_l = g * decomp.norm(NormOrder::TwoThirds);
    let g_a = (big_n * g + n) * decomp.l1_norm;
    Ok(Sandwich { lower: big_n.sqrt() + n / (g * big_n.sqrt()), upper: big_n + n / g, ratio: g_a / g_l })
}
