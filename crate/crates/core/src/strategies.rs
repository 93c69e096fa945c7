//! Credit-consumption policies that set each block's bid.
//!
//! All four policies are pure functions of the issuer's balance, the congestion
//! view of the issuer's node (the largest credit amounts in its buffer, descending)
//! and, for the gambler, a random draw.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::units::Credits;

/// How much above the current buffer maximum a greedy issuer bids.
pub const GREEDY_INCREMENT: Credits = Credits::ONE;

pub const DEFAULT_GAMBLER_TOP_K: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Spends the whole balance on every block.
    Impatient,
    /// Outbids the most expensive buffered block by one credit, or waits.
    Greedy,
    /// Copies the bid of a random block among the top `top_k`.
    Gambler { top_k: usize },
    /// Always bids zero.
    Opportunistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BidDecision {
    Issue(Credits),
    Abstain,
}

impl StrategyKind {
    pub fn gambler() -> Self {
        StrategyKind::Gambler {
            top_k: DEFAULT_GAMBLER_TOP_K,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Impatient => "impatient",
            StrategyKind::Greedy => "greedy",
            StrategyKind::Gambler { .. } => "gambler",
            StrategyKind::Opportunistic => "opportunistic",
        }
    }

    /// How many buffer entries this policy needs to see.
    pub fn view_depth(&self) -> usize {
        match self {
            StrategyKind::Impatient | StrategyKind::Opportunistic => 0,
            StrategyKind::Greedy => 1,
            StrategyKind::Gambler { top_k } => *top_k,
        }
    }

    pub fn decide<R: Rng + ?Sized>(&self, balance: Credits, view: &[Credits], rng: &mut R) -> BidDecision {
        match self {
            StrategyKind::Impatient => impatient_bid(balance),
            StrategyKind::Greedy => greedy_bid(balance, view),
            StrategyKind::Gambler { top_k } => gambler_bid(balance, &view[..view.len().min(*top_k)], rng),
            StrategyKind::Opportunistic => opportunistic_bid(),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "impatient" => Ok(StrategyKind::Impatient),
            "greedy" => Ok(StrategyKind::Greedy),
            "gambler" => Ok(StrategyKind::gambler()),
            "opportunistic" => Ok(StrategyKind::Opportunistic),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

pub fn impatient_bid(balance: Credits) -> BidDecision {
    BidDecision::Issue(balance.max(Credits::ZERO))
}

pub fn greedy_bid(balance: Credits, view: &[Credits]) -> BidDecision {
    let target = match view.iter().max() {
        Some(top) => *top + GREEDY_INCREMENT,
        None => Credits::ZERO,
    };
    if target <= balance {
        BidDecision::Issue(target)
    } else {
        BidDecision::Abstain
    }
}

/// Picks one of `view` uniformly and bids it, clamped to the balance.
pub fn gambler_bid<R: Rng + ?Sized>(balance: Credits, view: &[Credits], rng: &mut R) -> BidDecision {
    if view.is_empty() {
        return BidDecision::Issue(Credits::ZERO);
    }
    let pick = view[rng.random_range(0..view.len())];
    BidDecision::Issue(pick.min(balance).max(Credits::ZERO))
}

pub fn opportunistic_bid() -> BidDecision {
    BidDecision::Issue(Credits::ZERO)
}
