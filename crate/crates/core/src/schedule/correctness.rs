//! Semantic check that a schedule actually computes the reduction.
//!
//! Every processor starts holding its own contribution for every segment.
//! A send copies the sender's current set at the send's start; the receiver
//! merges it once its combine step finishes. Merged sets must be disjoint,
//! and the root must end with all `p` contributions for every segment.

use bitvec::prelude::*;

use super::{Schedule, ScheduleError, ROOT};
use crate::rational::Time;

/// Contribution sets for one segment, one bit per original processor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContributionState {
    held: Vec<BitVec>,
}

impl ContributionState {
    pub fn initial(p: usize) -> Self {
        let held = (0..p)
            .map(|i| {
                let mut bits = bitvec![0; p];
                bits.set(i, true);
                bits
            })
            .collect();
        ContributionState { held }
    }

    pub fn held(&self, processor: usize) -> &BitSlice {
        &self.held[processor]
    }

    /// Merges `incoming` into `processor`; fails if any contribution is
    /// already present.
    pub fn merge(&mut self, processor: usize, incoming: &BitSlice) -> bool {
        let target = &mut self.held[processor];
        if target.iter_ones().any(|i| incoming[i]) {
            return false;
        }
        *target |= incoming;
        true
    }

    pub fn is_complete(&self, processor: usize) -> bool {
        self.held[processor].all()
    }

    pub fn missing(&self, processor: usize) -> Vec<usize> {
        self.held[processor].iter_zeros().collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Step {
    // Merges that complete at time t are visible to sends starting at t.
    Merge,
    // Zero-duration events copy and merge at once, in schedule order.
    Instant,
    Snapshot,
}

/// Replays contribution sets; `Ok(())` iff every merge is disjoint and the
/// root holds all contributions for every segment.
pub fn check_correctness(schedule: &Schedule) -> Result<(), ScheduleError> {
    let p = schedule.p();
    for segment in 1..=schedule.plan().q() {
        let events: Vec<(usize, &super::Event)> = schedule
            .events()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.segment == segment)
            .collect();
        let mut steps: Vec<(Time, Step, usize)> = Vec::with_capacity(events.len() * 2);
        for (slot, (_, e)) in events.iter().enumerate() {
            if e.finish() == e.start {
                steps.push((e.start, Step::Instant, slot));
            } else {
                steps.push((e.start, Step::Snapshot, slot));
                steps.push((e.finish(), Step::Merge, slot));
            }
        }
        steps.sort();

        let mut state = ContributionState::initial(p);
        let mut in_flight: Vec<Option<BitVec>> = vec![None; events.len()];
        for (_, step, slot) in steps {
            let (index, e) = events[slot];
            let payload = match step {
                Step::Snapshot => {
                    in_flight[slot] = Some(state.held(e.sender).to_bitvec());
                    None
                }
                Step::Merge => in_flight[slot].take(),
                Step::Instant => Some(state.held(e.sender).to_bitvec()),
            };
            if let Some(payload) = payload {
                if !state.merge(e.receiver, &payload) {
                    return Err(ScheduleError::DuplicateContribution {
                        processor: e.receiver,
                        segment,
                        event_index: index,
                    });
                }
            }
        }
        if !state.is_complete(ROOT) {
            return Err(ScheduleError::IncompleteRoot {
                segment,
                missing: state.missing(ROOT),
            });
        }
    }
    Ok(())
}

pub fn is_correct(schedule: &Schedule) -> bool {
    check_correctness(schedule).is_ok()
}
