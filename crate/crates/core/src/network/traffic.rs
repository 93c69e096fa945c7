use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::units::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficPhase {
    /// Seconds.
    pub duration: f64,
    /// Total generation rate as a fraction of the scheduling rate.
    pub rate_multiplier: f64,
}

/// Piecewise-constant load pattern. Traffic stops after the last phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub phases: Vec<TrafficPhase>,
}

impl TrafficProfile {
    /// `cycles` repetitions of `pattern`.
    pub fn repeating(pattern: &[TrafficPhase], cycles: usize) -> Self {
        TrafficProfile {
            phases: pattern.iter().copied().cycle().take(pattern.len() * cycles).collect(),
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    /// Phase boundaries as (start, end, multiplier), in seconds.
    pub fn spans(&self) -> Vec<(f64, f64, f64)> {
        let mut start = 0.0;
        self.phases
            .iter()
            .map(|p| {
                let span = (start, start + p.duration, p.rate_multiplier);
                start += p.duration;
                span
            })
            .collect()
    }

    /// Index, end time and multiplier of the phase containing `t`; `None` once
    /// traffic has stopped. Phase intervals are half-open `[start, end)`.
    pub fn phase_at(&self, t: SimTime) -> Option<(usize, SimTime, f64)> {
        let mut end_us = 0u64;
        for (i, p) in self.phases.iter().enumerate() {
            end_us += SimTime::from_secs(p.duration).as_micros();
            if t.as_micros() < end_us {
                return Some((i, SimTime::from_micros(end_us), p.rate_multiplier));
            }
        }
        None
    }

    /// Start times of every phase after the first, in microsecond-exact form.
    pub fn boundaries(&self) -> Vec<SimTime> {
        let mut acc = 0u64;
        let mut out = Vec::new();
        for p in &self.phases {
            acc += SimTime::from_secs(p.duration).as_micros();
            out.push(SimTime::from_micros(acc));
        }
        out.pop();
        out
    }
}

/// Normalized token weights `tokens_i / sum(tokens)`.
pub fn token_weights(tokens: &[f64]) -> Vec<f64> {
    let total: f64 = tokens.iter().sum();
    tokens.iter().map(|t| t / total).collect()
}

/// Block-generation process of one account: Poisson with rate
/// `multiplier(t) * scheduling_rate * weight`, piecewise constant over phases.
#[derive(Clone, Debug)]
pub struct ArrivalProcess {
    base_rate: f64,
}

impl ArrivalProcess {
    pub fn new(scheduling_rate: f64, weight: f64) -> Self {
        ArrivalProcess {
            base_rate: scheduling_rate * weight,
        }
    }

    /// Next arrival strictly after `after`, or `None` if traffic ends first.
    ///
    /// A draw that overshoots its phase is discarded and redrawn from the phase
    /// boundary with the next phase's rate, which is exact for a Poisson process.
    pub fn next_after<R: Rng + ?Sized>(&self, profile: &TrafficProfile, after: SimTime, rng: &mut R) -> Option<SimTime> {
        let mut t = after;
        loop {
            let (_, end, mult) = profile.phase_at(t)?;
            let rate = mult * self.base_rate;
            if rate > 0.0 {
                let gap = Exp::new(rate).expect("positive rate").sample(rng);
                let candidate = SimTime::from_micros(t.as_micros() + (gap * 1e6).round().max(1.0) as u64);
                if candidate < end {
                    return Some(candidate);
                }
            }
            t = end;
        }
    }
}

/// Every generation instant of every account over the whole profile, merged in
/// time order (ties by account index).
pub fn generate_traffic<R: Rng>(
    profile: &TrafficProfile,
    tokens: &[f64],
    scheduling_rate: f64,
    rngs: &mut [R],
) -> Vec<(SimTime, usize)> {
    let mut out = Vec::new();
    for (i, w) in token_weights(tokens).into_iter().enumerate() {
        let process = ArrivalProcess::new(scheduling_rate, w);
        let mut t = SimTime::ZERO;
        while let Some(next) = process.next_after(profile, t, &mut rngs[i]) {
            out.push((next, i));
            t = next;
        }
    }
    out.sort_unstable();
    out
}
