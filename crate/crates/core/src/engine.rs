//! Discrete-event core: a virtual clock and a totally ordered future-event queue.
//!
//! Events fire in `(fire_at, sequence)` order. The sequence number is assigned at
//! scheduling time, so two events for the same instant are processed in the order
//! they were scheduled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::units::{SimDuration, SimTime};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("event scheduled in the past: fire_at {fire_at} < clock {now}")]
    InPast { fire_at: SimTime, now: SimTime },
}

/// A scheduled event with its deterministic ordering key.
#[derive(Debug, Clone)]
pub struct Scheduled<E> {
    pub fire_at: SimTime,
    pub sequence: u64,
    pub event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.sequence == other.sequence
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    // Reversed so that BinaryHeap (a max-heap) pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

/// Future-event list plus the simulation clock.
#[derive(Debug)]
pub struct EventQueue<E> {
    now: SimTime,
    next_sequence: u64,
    heap: BinaryHeap<Scheduled<E>>,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            next_sequence: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `event` at `fire_at`. Scheduling before the current clock is a
    /// logic error in the caller and is rejected.
    pub fn schedule(&mut self, fire_at: SimTime, event: E) -> Result<u64, ScheduleError> {
        if fire_at < self.now {
            return Err(ScheduleError::InPast {
                fire_at,
                now: self.now,
            });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Scheduled {
            fire_at,
            sequence,
            event,
        });
        Ok(sequence)
    }

    pub fn schedule_in(&mut self, delay: SimDuration, event: E) -> u64 {
        let at = self.now + delay;
        self.schedule(at, event)
            .expect("a nonnegative delay never lands in the past")
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|s| s.fire_at)
    }

    /// Pops the next event if it fires at or before `end`, advancing the clock to it.
    pub fn pop_until(&mut self, end: SimTime) -> Option<Scheduled<E>> {
        if self.peek_time()? > end {
            return None;
        }
        let next = self.heap.pop()?;
        debug_assert!(next.fire_at >= self.now);
        self.now = next.fire_at;
        Some(next)
    }

    /// Moves the clock forward to `t` without processing anything. Never moves it back.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }
}
