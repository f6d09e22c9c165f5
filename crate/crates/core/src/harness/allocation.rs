//! Exhaustive integer search for the minimum total budget.

use crate::coefkit::CoefDecomposition;
use crate::error::{Error, Result};
use crate::strategies::{variance_budget, BudgetAllocation};

pub const MAX_SEARCH_TERMS: usize = 4;

/// Minimizes `sum M_i` over `M_i in [1, m_max]` subject to
/// `sum alpha_i^2 / M_i^r <= C`. The last support index is not enumerated:
/// for fixed other budgets its smallest feasible value is found directly,
/// which visits the same optimum as a full grid.
pub fn bruteforce_allocation(
    decomp: &CoefDecomposition,
    epsilon: f64,
    delta: f64,
    r: u32,
    m_max: u64,
) -> Result<BudgetAllocation> {
    let c = variance_budget(epsilon, delta)?;
    if r != 1 && r != 2 {
        return Err(Error::invalid(format!("r must be 1 or 2, got {r}")));
    }
    let support: Vec<usize> = decomp.support().collect();
    if support.len() > MAX_SEARCH_TERMS {
        return Err(Error::invalid(format!(
            "exhaustive search is limited to {MAX_SEARCH_TERMS} terms, got {}",
            support.len()
        )));
    }
    if m_max == 0 {
        return Err(Error::invalid("m_max must be at least 1"));
    }
    let weights: Vec<f64> = support.iter().map(|&i| decomp.magnitudes()[i].powi(2)).collect();
    let term = |w: f64, m: u64| w / (m as f64).powi(r as i32);
    let (last_w, head_w) = weights.split_last().expect("support is nonempty");

    let mut best: Option<(u64, Vec<u64>)> = None;
    let mut head = vec![1u64; head_w.len()];
    loop {
        let used: f64 = head_w.iter().zip(&head).map(|(&w, &m)| term(w, m)).sum();
        let head_total: u64 = head.iter().sum();
        let room = c - used;
        if room > 0.0 && best.as_ref().is_none_or(|(t, _)| head_total < *t) {
            if let Some(m_last) = smallest_feasible(*last_w, room, r, m_max) {
                let total = head_total + m_last;
                if best.as_ref().is_none_or(|(t, _)| total < *t) {
                    let mut all = head.clone();
                    all.push(m_last);
                    best = Some((total, all));
                }
            }
        }
        // odometer over the enumerated indices
        let mut pos = 0;
        while pos < head.len() && head[pos] == m_max {
            head[pos] = 1;
            pos += 1;
        }
        if pos == head.len() {
            break;
        }
        head[pos] += 1;
    }

    let (_, found) = best.ok_or_else(|| Error::invalid(format!("no feasible allocation with m_max = {m_max}")))?;
    let mut per_index = vec![0; decomp.len()];
    for (&i, m) in support.iter().zip(found) {
        per_index[i] = m;
    }
    Ok(BudgetAllocation::from_per_index(per_index))
}

fn smallest_feasible(w: f64, room: f64, r: u32, m_max: u64) -> Option<u64> {
    let feasible = |m: u64| w / (m as f64).powi(r as i32) <= room;
    let guess = ((w / room).powf(1.0 / r as f64).ceil() as u64).clamp(1, m_max);
    let mut m = guess;
    while m > 1 && feasible(m - 1) {
        m -= 1;
    }
    while m <= m_max && !feasible(m) {
        m += 1;
    }
    (m <= m_max).then_some(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefkit::{decompose, CoefficientVector};
    use crate::strategies::allocate_budget;

    fn dec(a: &[f64]) -> CoefDecomposition {
        decompose(&CoefficientVector::new(a.to_vec()).unwrap())
    }

    #[test]
    fn single_term() {
        let d = dec(&[1.5]);
        let c = variance_budget(0.2, 0.1).unwrap();
        for r in [1, 2] {
            let a = bruteforce_allocation(&d, 0.2, 0.1, r, 10_000).unwrap();
            let m = a.per_index[0];
            assert!(2.25 / (m as f64).powi(r as i32) <= c);
            assert!(2.25 / ((m - 1) as f64).powi(r as i32) > c);
        }
    }

    #[test]
    fn symmetric_terms_get_equal_budgets() {
        let d = dec(&[1.0, -1.0, 1.0]);
        let a = bruteforce_allocation(&d, 0.3, 0.1, 1, 500).unwrap();
        // integer optima can tie; the equal split must reach the same total
        let c = variance_budget(0.3, 0.1).unwrap();
        let equal = (3.0 / c).ceil() as u64;
        assert_eq!(a.total, 3 * equal, "{:?}", a.per_index);
    }

    #[test]
    fn close_to_closed_form() {
        let d = dec(&[3.0, 1.0]);
        let closed = allocate_budget(&d, 0.3, 0.1, 1).unwrap();
        let brute = bruteforce_allocation(&d, 0.3, 0.1, 1, closed.total).unwrap();
        assert!(brute.total <= closed.total);
        assert!(brute.total as f64 >= 0.95 * closed.total as f64);
    }

    #[test]
    fn errors() {
        assert!(bruteforce_allocation(&dec(&[1.0; 5]), 0.3, 0.1, 1, 10).is_err());
        assert!(bruteforce_allocation(&dec(&[1.0]), 0.3, 0.1, 1, 1).is_err());
        assert!(bruteforce_allocation(&dec(&[1.0]), 0.3, 0.1, 3, 10).is_err());
        // zero entries are skipped
        let a = bruteforce_allocation(&dec(&[1.0, 0.0]), 0.3, 0.1, 2, 100).unwrap();
        assert_eq!(a.per_index[1], 0);
    }
}
