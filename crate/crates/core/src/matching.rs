//! Two-sided matching between UEs and quota-limited BSs.
//!
//! Both sides rank the other by the same rate matrix. Two games turn the
//! rankings into an association:
//!
//! * [`run_da`] - deferred acceptance. BSs keep a waiting list of their best
//!   `Q_j` applicants and only commit once nobody is left to propose, so every
//!   UE waits for the whole game.
//! * [`run_ea`] - early acceptance. A BS accepts an applicant on the spot if
//!   it is among the BS's top `Q_j` still-unassigned UEs, shrinks its quota and
//!   drops out once full. A UE's acceptance delay equals its application count.
//!
//! [`run_matching_algorithm`] wraps either game in the outer loop: start from a
//! random feasible association, recompute all rates under it, rank, play, and
//! repeat while the sum-rate strictly improves.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigIssue, Error, Result};
use crate::rate::{Activation, RateEngine, RateMatrix};
use crate::wcs::WcsMove;

/// Default cap on outer association rounds.
pub const DEFAULT_MAX_ROUNDS: usize = 50;

/// Ranked preference lists: `ue_prefs[k]` orders all BSs, `bs_prefs[j]`
/// orders all UEs, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceMatrices {
    pub ue_prefs: Vec<Vec<usize>>,
    pub bs_prefs: Vec<Vec<usize>>,
}

impl PreferenceMatrices {
    pub fn num_ues(&self) -> usize {
        self.ue_prefs.len()
    }

    pub fn num_bs(&self) -> usize {
        self.bs_prefs.len()
    }

    /// `rank[j][k]`: position of UE `k` in BS `j`'s list.
    pub fn bs_ranks(&self) -> Vec<Vec<usize>> {
        inverse_ranks(&self.bs_prefs, self.num_ues())
    }

    /// `rank[k][j]`: position of BS `j` in UE `k`'s list.
    pub fn ue_ranks(&self) -> Vec<Vec<usize>> {
        inverse_ranks(&self.ue_prefs, self.num_bs())
    }
}

fn inverse_ranks(lists: &[Vec<usize>], width: usize) -> Vec<Vec<usize>> {
    lists
        .iter()
        .map(|list| {
            let mut rank = vec![usize::MAX; width];
            for (pos, &x) in list.iter().enumerate() {
                rank[x] = pos;
            }
            rank
        })
        .collect()
}

fn ranked(len: usize, score: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    // stable sort keeps ascending index among ties
    idx.sort_by(|&a, &b| score(b).total_cmp(&score(a)));
    idx
}

/// Sort each UE's BSs and each BS's UEs by descending rate; ties go to the
/// lower index.
pub fn build_preferences(rates: &RateMatrix) -> PreferenceMatrices {
    let (k, j) = (rates.num_ues(), rates.num_bs());
    PreferenceMatrices {
        ue_prefs: (0..k).map(|ue| ranked(j, |bs| rates.get(ue, bs))).collect(),
        bs_prefs: (0..j).map(|bs| ranked(k, |ue| rates.get(ue, bs))).collect(),
    }
}

/// Outcome of one matching game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingResult {
    pub matching: Activation,
    /// Applications sent by each UE.
    pub applications: Vec<usize>,
    /// Game iteration at which each UE's association became final.
    pub acceptance_iteration: Vec<usize>,
    pub total_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Game {
    DeferredAcceptance,
    EarlyAcceptance,
}

impl Game {
    pub fn play(self, prefs: &PreferenceMatrices, quotas: &[usize]) -> Result<MatchingResult> {
        match self {
            Game::DeferredAcceptance => run_da(prefs, quotas),
            Game::EarlyAcceptance => run_ea(prefs, quotas),
        }
    }
}

fn check_game_inputs(prefs: &PreferenceMatrices, quotas: &[usize]) -> Result<()> {
    if quotas.len() != prefs.num_bs() {
        return Err(Error::ShapeMismatch(format!(
            "{} quotas for {} BSs",
            quotas.len(),
            prefs.num_bs()
        )));
    }
    let total: usize = quotas.iter().sum();
    if total < prefs.num_ues() {
        return Err(Error::InvalidConfig(vec![ConfigIssue::InsufficientQuota {
            total,
            ues: prefs.num_ues(),
        }]));
    }
    Ok(())
}

/// Early acceptance game.
///
/// Each iteration, every still-rejected UE (ascending index) applies to its
/// most preferred BS that has quota left and that it has not applied to yet.
/// The BS accepts iff the UE sits in the first `Q_j` entries of the BS's
/// current list, where both the list (accepted UEs removed) and `Q_j`
/// (decremented per acceptance) reflect everything accepted so far.
///
/// A UE rejected earlier by a BS that is still open can find every open BS
/// already tried. It then starts a new pass over the open BSs in preference
/// order. The top rejected UE of any open BS is accepted as soon as it
/// applies there, so the game still terminates.
pub fn run_ea(prefs: &PreferenceMatrices, quotas: &[usize]) -> Result<MatchingResult> {
    check_game_inputs(prefs, quotas)?;
    let (num_ues, num_bs) = (prefs.num_ues(), prefs.num_bs());
    let mut remaining = quotas.to_vec();
    let mut bs_rows = prefs.bs_prefs.clone();
    let mut applied = vec![vec![false; num_bs]; num_ues];
    let mut rejected: Vec<usize> = (0..num_ues).collect();
    let mut matching = Activation::unassigned(num_ues);
    let mut applications = vec![0; num_ues];
    let mut acceptance_iteration = vec![0; num_ues];
    let mut iteration = 0;

    while !rejected.is_empty() {
        iteration += 1;
        for k in rejected.clone() {
            let untried = |applied: &[bool]| prefs.ue_prefs[k].iter().copied().find(|&j| !applied[j] && remaining[j] > 0);
            let j = match untried(&applied[k]) {
                Some(j) => j,
                None => {
                    // every open BS already rejected k: start a new pass over them
                    applied[k].iter_mut().enumerate().for_each(|(j, a)| *a &= remaining[j] == 0);
                    untried(&applied[k]).ok_or(Error::QuotaExhaustion(k))?
                }
            };
            applied[k][j] = true;
            applications[k] += 1;
            let window = remaining[j].min(bs_rows[j].len());
            if bs_rows[j][..window].contains(&k) {
                matching.set(k, Some(j));
                remaining[j] -= 1;
                acceptance_iteration[k] = iteration;
                rejected.retain(|&x| x != k);
                for row in &mut bs_rows {
                    row.retain(|&x| x != k);
                }
            }
        }
    }
    Ok(MatchingResult {
        matching,
        applications,
        acceptance_iteration,
        total_iterations: iteration,
    })
}

/// UE-proposing deferred acceptance with waiting lists.
pub fn run_da(prefs: &PreferenceMatrices, quotas: &[usize]) -> Result<MatchingResult> {
    check_game_inputs(prefs, quotas)?;
    let (num_ues, num_bs) = (prefs.num_ues(), prefs.num_bs());
    let rank = prefs.bs_ranks();
    let mut next_choice = vec![0usize; num_ues];
    let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); num_bs];
    let mut free: Vec<usize> = (0..num_ues).collect();
    let mut applications = vec![0; num_ues];
    let mut iteration = 0;

    loop {
        let mut proposals: Vec<Vec<usize>> = vec![Vec::new(); num_bs];
        let mut any = false;
        for &k in &free {
            let list = &prefs.ue_prefs[k];
            while next_choice[k] < list.len() && quotas[list[next_choice[k]]] == 0 {
                next_choice[k] += 1;
            }
            if let Some(&j) = list.get(next_choice[k]) {
                next_choice[k] += 1;
                applications[k] += 1;
                proposals[j].push(k);
                any = true;
            }
        }
        if !any {
            break;
        }
        iteration += 1;
        free.clear();
        for (j, applicants) in proposals.into_iter().enumerate() {
            if applicants.is_empty() {
                continue;
            }
            let pool = &mut waiting[j];
            pool.extend(applicants);
            pool.sort_by_key(|&k| rank[j][k]);
            free.extend(pool.drain(quotas[j].min(pool.len())..));
        }
        free.sort_unstable();
    }

    if let Some(&k) = free.first() {
        return Err(Error::QuotaExhaustion(k));
    }
    let mut matching = Activation::unassigned(num_ues);
    for (j, list) in waiting.iter().enumerate() {
        for &k in list {
            matching.set(k, Some(j));
        }
    }
    Ok(MatchingResult {
        matching,
        applications,
        acceptance_iteration: vec![iteration; num_ues],
        total_iterations: iteration,
    })
}

/// Uniformly shuffle `num_ues` UEs into the bag of BS slots given by `quotas`.
pub fn random_feasible_activation<R: Rng + ?Sized>(quotas: &[usize], num_ues: usize, rng: &mut R) -> Result<Activation> {
    let total: usize = quotas.iter().sum();
    if total < num_ues {
        return Err(Error::InvalidConfig(vec![ConfigIssue::InsufficientQuota { total, ues: num_ues }]));
    }
    let mut slots: Vec<usize> = quotas
        .iter()
        .enumerate()
        .flat_map(|(j, &q)| std::iter::repeat_n(j, q))
        .collect();
    slots.shuffle(rng);
    Ok(Activation::from_bs(&slots[..num_ues]))
}

/// One pass of the outer association loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub sum_rate_before: f64,
    pub sum_rate_after: f64,
    pub game: MatchingResult,
}

/// Result of an association solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationOutcome {
    /// Best activation seen.
    pub activation: Activation,
    pub sum_rate: f64,
    pub initial_sum_rate: f64,
    /// Sum-rate after each round (matching) or move (WCS), starting with the
    /// initial activation.
    pub trajectory: Vec<f64>,
    /// Matching rounds; empty for non-matching solvers.
    pub rounds: Vec<RoundTrace>,
    /// Applied local-search moves; empty for matching solvers.
    pub moves: Vec<WcsMove>,
}

impl AssociationOutcome {
    /// The game played in the last round.
    pub fn final_game(&self) -> Option<&MatchingResult> {
        self.rounds.last().map(|r| &r.game)
    }

    pub fn num_rounds(&self) -> usize {
        if self.rounds.is_empty() {
            self.moves.len()
        } else {
            self.rounds.len()
        }
    }
}

/// Outer loop: from `initial`, compute all `R_kj`, rank, play `game`, and
/// continue while the sum-rate strictly improves. Always plays at least one
/// round. Returns the best activation seen; errors if `max_rounds` rounds all
/// improve.
pub fn run_matching_algorithm(
    game: Game,
    engine: &RateEngine<'_>,
    quotas: &[usize],
    initial: Activation,
    max_rounds: usize,
) -> Result<AssociationOutcome> {
    initial.check_quotas(quotas)?;
    let initial_sum_rate = engine.sum_rate(&initial)?;
    let mut current = initial;
    let mut current_rate = initial_sum_rate;
    let mut trajectory = vec![initial_sum_rate];
    let mut rounds = Vec::new();

    loop {
        if rounds.len() == max_rounds {
            return Err(Error::RoundLimitExceeded(max_rounds));
        }
        let prefs = build_preferences(&engine.rate_matrix(&current)?);
        let result = game.play(&prefs, quotas)?;
        let next_rate = engine.sum_rate(&result.matching)?;
        trajectory.push(next_rate);
        let improved = next_rate > current_rate;
        let next = result.matching.clone();
        rounds.push(RoundTrace {
            round: rounds.len() + 1,
            sum_rate_before: current_rate,
            sum_rate_after: next_rate,
            game: result,
        });
        if !improved {
            break;
        }
        current = next;
        current_rate = next_rate;
    }
    Ok(AssociationOutcome {
        activation: current,
        sum_rate: current_rate,
        initial_sum_rate,
        trajectory,
        rounds,
        moves: Vec::new(),
    })
}

/// [`run_matching_algorithm`] from a random feasible start.
pub fn run_matching_from_random<R: Rng + ?Sized>(
    game: Game,
    engine: &RateEngine<'_>,
    quotas: &[usize],
    rng: &mut R,
) -> Result<AssociationOutcome> {
    let initial = random_feasible_activation(quotas, engine.num_ues(), rng)?;
    run_matching_algorithm(game, engine, quotas, initial, DEFAULT_MAX_ROUNDS)
}
