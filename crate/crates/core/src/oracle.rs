//! Exhaustive ground truth for small instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::PreferenceMatrices;
use crate::rate::{Activation, RateEngine};

/// Guard against combinatorial blow-up of [`enumerate_assignments`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    pub max_assignments: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            max_assignments: 1_000_000,
        }
    }
}

impl EnumerationBudget {
    pub fn check(&self, num_ues: usize, quotas: &[usize]) -> Result<u128> {
        let count = count_assignments(num_ues, quotas);
        if count > self.max_assignments {
            Err(Error::BudgetExceeded {
                count,
                budget: self.max_assignments,
            })
        } else {
            Ok(count)
        }
    }
}

/// Number of full assignments of `num_ues` labelled UEs with per-BS load at
/// most `quotas[j]`, i.e. the sum of multinomials over admissible load
/// vectors. Saturates at `u128::MAX`.
pub fn count_assignments(num_ues: usize, quotas: &[usize]) -> u128 {
    let binom = {
        let mut table = vec![vec![0u128; num_ues + 1]; num_ues + 1];
        for n in 0..=num_ues {
            table[n][0] = 1;
            for r in 1..=n {
                table[n][r] = table[n - 1][r - 1].saturating_add(table[n - 1][r]);
            }
        }
        table
    };
    // ways[r]: ways to place r remaining UEs on the BSs processed so far
    let mut ways = vec![0u128; num_ues + 1];
    ways[0] = 1;
    for &q in quotas.iter().rev() {
        let mut next = vec![0u128; num_ues + 1];
        for (r, slot) in next.iter_mut().enumerate() {
            for c in 0..=q.min(r) {
                *slot = slot.saturating_add(binom[r][c].saturating_mul(ways[r - c]));
            }
        }
        ways = next;
    }
    ways[num_ues]
}

/// Lexicographic iterator over every quota-feasible full assignment.
#[derive(Debug, Clone)]
pub struct Assignments {
    quotas: Vec<usize>,
    choice: Vec<usize>,
    loads: Vec<usize>,
    started: bool,
    done: bool,
}

impl Assignments {
    fn new(num_ues: usize, quotas: &[usize]) -> Self {
        let done = quotas.iter().sum::<usize>() < num_ues;
        Self {
            quotas: quotas.to_vec(),
            choice: vec![0; num_ues],
            loads: vec![0; quotas.len()],
            started: false,
            done,
        }
    }

    // Greedy smallest-index fill; succeeds whenever total quota covers all UEs.
    fn fill_from(&mut self, pos: usize) {
        for p in pos..self.choice.len() {
            let b = (0..self.quotas.len())
                .find(|&b| self.loads[b] < self.quotas[b])
                .expect("total quota covers every UE");
            self.choice[p] = b;
            self.loads[b] += 1;
        }
    }

    fn advance(&mut self) -> bool {
        for pos in (0..self.choice.len()).rev() {
            let b = self.choice[pos];
            self.loads[b] -= 1;
            if let Some(nb) = (b + 1..self.quotas.len()).find(|&nb| self.loads[nb] < self.quotas[nb]) {
                self.choice[pos] = nb;
                self.loads[nb] += 1;
                self.fill_from(pos + 1);
                return true;
            }
        }
        false
    }
}

impl Iterator for Assignments {
    type Item = Activation;

    fn next(&mut self) -> Option<Activation> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill_from(0);
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(Activation::from_bs(&self.choice))
    }
}

pub fn enumerate_assignments(num_ues: usize, quotas: &[usize], budget: EnumerationBudget) -> Result<Assignments> {
    budget.check(num_ues, quotas)?;
    Ok(Assignments::new(num_ues, quotas))
}

/// Global sum-rate maximiser; ties go to the lexicographically first assignment.
pub fn brute_force_optimum(engine: &RateEngine<'_>, quotas: &[usize], budget: EnumerationBudget) -> Result<(Activation, f64)> {
    let mut best: Option<(Activation, f64)> = None;
    for candidate in enumerate_assignments(engine.num_ues(), quotas, budget)? {
        let rate = engine.sum_rate(&candidate)?;
        if best.as_ref().is_none_or(|(_, b)| rate > *b) {
            best = Some((candidate, rate));
        }
    }
    best.ok_or_else(|| Error::InfeasibleActivation("no feasible assignment".into()))
}

/// Every pair `(k, j)` where UE `k` prefers BS `j` to its match and `j`
/// either has spare quota or prefers `k` to one of its members.
pub fn find_blocking_pairs(matching: &Activation, prefs: &PreferenceMatrices, quotas: &[usize]) -> Vec<(usize, usize)> {
    let ue_rank = prefs.ue_ranks();
    let bs_rank = prefs.bs_ranks();
    let loads = matching.loads(quotas.len());
    let mut pairs = Vec::new();
    for k in 0..matching.len() {
        let current = matching.get(k).map_or(usize::MAX, |j| ue_rank[k][j]);
        for j in 0..quotas.len() {
            if ue_rank[k][j] >= current {
                continue;
            }
            let open = loads[j] < quotas[j];
            let displaces = matching.members(j).any(|l| bs_rank[j][k] < bs_rank[j][l]);
            if open || displaces {
                pairs.push((k, j));
            }
        }
    }
    pairs
}
