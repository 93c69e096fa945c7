//! Token holdings and Access Credit accounting.
//!
//! Credits accrue continuously from static token holdings. In linear mode an
//! account earns `tokens * rate` credits per second; in concave mode the
//! cumulative generation since the hold start is `tokens * cap_scale * F(t)` with
//! `F(t) = 1 - exp(-gamma * t)`, which caps what a holding can ever produce.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategies::StrategyKind;
use crate::units::{Credits, SimTime};

pub type AccountId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum TokenomicsError {
    #[error("power-law exponent must exceed 1, got {0}")]
    InvalidAlpha(f64),
    #[error("minimum token holding must be positive, got {0}")]
    InvalidMinimum(f64),
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("insufficient credit: requested {requested}, available {available}")]
    InsufficientCredit {
        requested: Credits,
        available: Credits,
    },
    #[error("credit amounts must be nonnegative, got {0}")]
    NegativeAmount(Credits),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreditMode {
    Linear,
    Concave,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreditGenParams {
    pub mode: CreditMode,
    /// Credits per token per second (linear mode).
    pub rate: f64,
    /// Saturation speed of the concave generation curve, 1/s.
    pub gamma: f64,
    /// Credits per token that a holding produces as time goes to infinity (concave mode).
    pub cap_scale: f64,
}

impl Default for CreditGenParams {
    fn default() -> Self {
        CreditGenParams {
            mode: CreditMode::Linear,
            rate: 0.1,
            gamma: 0.01,
            cap_scale: 100.0,
        }
    }
}

impl CreditGenParams {
    /// Credits (as micro-credits, unrounded) that `tokens` generate over `held`
    /// microseconds since the hold start.
    fn cumulative_micros(&self, tokens: f64, held_us: u64) -> f64 {
        match self.mode {
            CreditMode::Linear => tokens * self.rate * held_us as f64,
            CreditMode::Concave => {
                let held = held_us as f64 / 1e6;
                tokens * self.cap_scale * concave_gain(self.gamma, held) * 1e6
            }
        }
    }
}

/// `F(t) = 1 - exp(-gamma * t)`.
pub fn concave_gain(gamma: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-gamma * t).exp_m1()
    }
}

/// Running totals of every credit movement on an account.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CreditLedger {
    pub accrued: Credits,
    pub consumed: Credits,
    pub reimbursed: Credits,
}

impl CreditLedger {
    pub fn expected_balance(&self) -> Credits {
        self.accrued - self.consumed + self.reimbursed
    }
}

#[derive(Clone, Debug)]
pub struct Account {
    pub id: AccountId,
    pub tokens: f64,
    pub strategy: StrategyKind,
    balance: Credits,
    hold_start: SimTime,
    last_generation: SimTime,
    ledger: CreditLedger,
}

impl Account {
    pub fn new(id: AccountId, tokens: f64, strategy: StrategyKind) -> Self {
        Account {
            id,
            tokens,
            strategy,
            balance: Credits::ZERO,
            hold_start: SimTime::ZERO,
            last_generation: SimTime::ZERO,
            ledger: CreditLedger::default(),
        }
    }

    pub fn with_hold_start(mut self, t: SimTime) -> Self {
        self.hold_start = t;
        self.last_generation = t;
        self
    }

    pub fn balance(&self) -> Credits {
        self.balance
    }

    pub fn last_generation(&self) -> SimTime {
        self.last_generation
    }

    pub fn ledger(&self) -> &CreditLedger {
        &self.ledger
    }

    /// Generates the credits earned since the last generation time and returns them.
    ///
    /// The increment is the difference of the rounded cumulative generation at
    /// both ends, so splitting an interval never changes the total.
    pub fn accrue(&mut self, now: SimTime, params: &CreditGenParams) -> Credits {
        if now <= self.last_generation {
            return Credits::ZERO;
        }
        let before = now_total(params, self.tokens, self.last_generation.since(self.hold_start).as_micros());
        let after = now_total(params, self.tokens, now.since(self.hold_start).as_micros());
        let gained = Credits::from_micros(after - before);
        self.balance += gained;
        self.ledger.accrued += gained;
        self.last_generation = now;
        gained
    }

    pub fn consume(&mut self, amount: Credits) -> Result<(), TokenomicsError> {
        if amount.is_negative() {
            return Err(TokenomicsError::NegativeAmount(amount));
        }
        if amount > self.balance {
            return Err(TokenomicsError::InsufficientCredit {
                requested: amount,
                available: self.balance,
            });
        }
        self.balance -= amount;
        self.ledger.consumed += amount;
        Ok(())
    }

    pub fn reimburse(&mut self, amount: Credits) -> Result<(), TokenomicsError> {
        if amount.is_negative() {
            return Err(TokenomicsError::NegativeAmount(amount));
        }
        self.balance += amount;
        self.ledger.reimbursed += amount;
        Ok(())
    }
}

fn now_total(params: &CreditGenParams, tokens: f64, held_us: u64) -> i64 {
    params.cumulative_micros(tokens, held_us).round() as i64
}

/// Inverse CDF of the power law `p(x) = ((alpha-1)/x_min) (x/x_min)^-alpha`, x >= x_min.
pub fn power_law_quantile(u: f64, alpha: f64, x_min: f64) -> f64 {
    x_min * (1.0 - u).powf(-1.0 / (alpha - 1.0))
}

/// CDF of the same power law: `1 - (x/x_min)^(1-alpha)`.
pub fn power_law_cdf(x: f64, alpha: f64, x_min: f64) -> f64 {
    if x <= x_min {
        0.0
    } else {
        1.0 - (x / x_min).powf(1.0 - alpha)
    }
}

/// Draws `n` i.i.d. token holdings from the power law by inverse-CDF sampling.
pub fn sample_token_distribution<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    x_min: f64,
    rng: &mut R,
) -> Result<Vec<f64>, TokenomicsError> {
    if n == 0 {
        return Err(TokenomicsError::EmptySample);
    }
    if !(alpha > 1.0) {
        return Err(TokenomicsError::InvalidAlpha(alpha));
    }
    if !(x_min > 0.0) || !x_min.is_finite() {
        return Err(TokenomicsError::InvalidMinimum(x_min));
    }
    Ok((0..n)
        .map(|_| power_law_quantile(rng.random::<f64>(), alpha, x_min))
        .collect())
}

/// Result of the allotment-frequency analysis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AllotPlan {
    pub allotments: u32,
    pub credits: f64,
}

/// Balance left after allotting `n` times over `hold_time` with concave generation,
/// each allotment consuming `per_allot_cost`: `T * n * F(H/n) - n * c`.
pub fn allot_balance(tokens: f64, hold_time: f64, per_allot_cost: f64, gamma: f64, n: u32) -> f64 {
    let n_f = f64::from(n);
    tokens * n_f * concave_gain(gamma, hold_time / n_f) - n_f * per_allot_cost
}

/// Number of allotments in `1..=n_max` that maximises the final balance. Ties go to
/// the smaller count.
pub fn optimal_allot_count(
    tokens: f64,
    hold_time: f64,
    per_allot_cost: f64,
    gamma: f64,
    n_max: u32,
) -> AllotPlan {
    let mut best = AllotPlan {
        allotments: 1,
        credits: allot_balance(tokens, hold_time, per_allot_cost, gamma, 1),
    };
    for n in 2..=n_max.max(1) {
        let credits = allot_balance(tokens, hold_time, per_allot_cost, gamma, n);
        if credits > best.credits {
            best = AllotPlan { allotments: n, credits };
        }
    }
    best
}
