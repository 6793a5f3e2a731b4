//! Centralised worst-connection swapping.
//!
//! A local search over associations: take the UE with the lowest serving
//! rate, try relocating it to every BS with spare quota and swapping it with
//! every UE on another BS, and apply the move with the largest sum-rate gain.
//! When the worst UE cannot improve, the remaining UEs are scanned in order of
//! increasing rate for any improving move before the search stops. Every
//! candidate is scored with an exact sum-rate evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::AssociationOutcome;
use crate::rate::{Activation, RateEngine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    /// The UE moves to a BS with spare quota.
    Relocate { from: Option<usize>, to: usize },
    /// The UE and `partner` exchange serving BSs.
    Swap { partner: usize, from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WcsMove {
    pub ue: usize,
    pub kind: MoveKind,
    pub sum_rate_before: f64,
    pub sum_rate_after: f64,
    /// Found by the all-UE scan rather than for the worst UE.
    pub escalated: bool,
}

/// Default move cap, `10 K`.
pub fn default_max_moves(num_ues: usize) -> usize {
    10 * num_ues
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate > current + 1e-12 * current.abs()
}

struct Search<'e, 'a> {
    engine: &'e RateEngine<'a>,
    quotas: &'e [usize],
}

impl Search<'_, '_> {
    /// Best strictly improving move for `ue`, scanning relocations by
    /// ascending BS and then swaps by ascending partner.
    fn best_move(&self, current: &Activation, current_rate: f64, ue: usize) -> Result<Option<(Activation, f64, MoveKind)>> {
        let loads = current.loads(self.quotas.len());
        let from = current.get(ue);
        let mut best: Option<(Activation, f64, MoveKind)> = None;
        let mut consider = |cand: Activation, kind: MoveKind, rate: f64| {
            let bar = best.as_ref().map_or(current_rate, |b| b.1);
            if improves(rate, bar) {
                best = Some((cand, rate, kind));
            }
        };
        for to in 0..self.quotas.len() {
            if Some(to) == from || loads[to] >= self.quotas[to] {
                continue;
            }
            let cand = current.with_move(ue, to);
            let rate = self.engine.sum_rate(&cand)?;
            consider(cand, MoveKind::Relocate { from, to }, rate);
        }
        if let Some(from) = from {
            for partner in 0..current.len() {
                let Some(to) = current.get(partner) else { continue };
                if to == from {
                    continue;
                }
                let mut cand = current.with_move(ue, to);
                cand.set(partner, Some(from));
                let rate = self.engine.sum_rate(&cand)?;
                consider(cand, MoveKind::Swap { partner, from, to }, rate);
            }
        }
        Ok(best)
    }
}

/// Run the swap search from `initial` for at most `max_moves` moves.
pub fn run_wcs(initial: Activation, engine: &RateEngine<'_>, quotas: &[usize], max_moves: usize) -> Result<AssociationOutcome> {
    initial
        .check_quotas(quotas)
        .map_err(|e| Error::InfeasibleActivation(format!("initial association: {e}")))?;
    if initial.len() != engine.num_ues() {
        return Err(Error::InfeasibleActivation(format!(
            "initial association covers {} UEs, channel set has {}",
            initial.len(),
            engine.num_ues()
        )));
    }
    let search = Search { engine, quotas };
    let initial_sum_rate = engine.sum_rate(&initial)?;
    let mut current = initial;
    let mut current_rate = initial_sum_rate;
    let mut trajectory = vec![initial_sum_rate];
    let mut moves = Vec::new();

    while moves.len() < max_moves {
        let rates = engine.serving_rates(&current)?;
        let mut order: Vec<usize> = (0..current.len()).collect();
        order.sort_by(|&a, &b| rates[a].total_cmp(&rates[b]).then(a.cmp(&b)));

        let mut found = None;
        for (pos, &ue) in order.iter().enumerate() {
            if let Some(m) = search.best_move(&current, current_rate, ue)? {
                found = Some((ue, m, pos > 0));
                break;
            }
        }
        let Some((ue, (next, next_rate, kind), escalated)) = found else {
            break;
        };
        moves.push(WcsMove {
            ue,
            kind,
            sum_rate_before: current_rate,
            sum_rate_after: next_rate,
            escalated,
        });
        trajectory.push(next_rate);
        current = next;
        current_rate = next_rate;
    }

    Ok(AssociationOutcome {
        activation: current,
        sum_rate: current_rate,
        initial_sum_rate,
        trajectory,
        rounds: Vec::new(),
        moves,
    })
}
