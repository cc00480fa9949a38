//! Validity of unidirectional schedules in the in-order class searched by
//! the greedy optimality argument.
//!
//! Segments are replayed one after another. Each processor carries a state
//! (the time it finished its previous task) and each segment keeps the set
//! of processors that still hold a value for it. A pair `(a, b, t)` is
//! valid iff `a` is not the root, both are still in the set, both states are
//! at most `t`, and `t` is at least the second smallest state in the set.
//! After a pair, members of the set idling below `t` are raised to `t`.

use std::fmt;

use super::{PortModel, Schedule, ROOT};
use crate::rational::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// The schedule is not unidirectional.
    Model,
    /// Events are not in nondecreasing start order.
    Unsorted,
    /// The root appears as a sender.
    SenderIsRoot,
    /// A processor appears in a segment it already left.
    NotRemaining,
    /// Sender or receiver is still busy at the start time.
    NotReady,
    /// The start precedes the second smallest remaining state.
    BelowSecondSmallest,
    /// A processor works on a segment before finishing the previous one.
    InOrder,
    /// A non-root processor never sends some segment.
    MissingSend,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Model => "model",
            Rule::Unsorted => "unsorted",
            Rule::SenderIsRoot => "sender-is-root",
            Rule::NotRemaining => "not-remaining",
            Rule::NotReady => "not-ready",
            Rule::BelowSecondSmallest => "below-second-smallest",
            Rule::InOrder => "in-order",
            Rule::MissingSend => "missing-send",
        })
    }
}

/// First rule broken while replaying a schedule.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event {event_index} violates rule {rule}: {detail}")]
pub struct Violation {
    /// Index into `Schedule::events`; for `MissingSend` this is the number
    /// of events.
    pub event_index: usize,
    pub rule: Rule,
    pub detail: String,
}

pub fn validate_uni(schedule: &Schedule) -> Result<(), Violation> {
    let events = schedule.events();
    let violation = |event_index, rule, detail: String| Violation {
        event_index,
        rule,
        detail,
    };
    if schedule.model() != PortModel::Unidirectional {
        return Err(violation(0, Rule::Model, format!("model is {}", schedule.model())));
    }
    if let Some(i) = events.windows(2).position(|w| w[1].start < w[0].start) {
        return Err(violation(i + 1, Rule::Unsorted, format!("starts at {} after {}", events[i + 1].start, events[i].start)));
    }

    let p = schedule.p();
    let mut state = vec![Time::ZERO; p];
    for segment in 1..=schedule.plan().q() {
        // State at which each processor finished the previous segment.
        let done_prev = state.clone();
        let mut remaining = vec![true; p];
        let mut left = p;
        for (index, e) in events.iter().enumerate().filter(|(_, e)| e.segment == segment) {
            let (a, b, t) = (e.sender, e.receiver, e.start);
            if a == ROOT {
                return Err(violation(index, Rule::SenderIsRoot, "the root never sends".into()));
            }
            for proc in [a, b] {
                if !remaining[proc] {
                    return Err(violation(index, Rule::NotRemaining, format!("processor {proc} already sent segment {segment}")));
                }
                if done_prev[proc] > t {
                    return Err(violation(
                        index,
                        Rule::InOrder,
                        format!("processor {proc} finishes segment {} at {}, after {t}", segment - 1, done_prev[proc]),
                    ));
                }
            }
            let mut live: Vec<Time> = (0..p).filter(|&i| remaining[i]).map(|i| state[i]).collect();
            live.sort();
            let second = live[1];
            if t < second {
                return Err(violation(index, Rule::BelowSecondSmallest, format!("start {t} below second smallest state {second}")));
            }
            for proc in [a, b] {
                if state[proc] > t {
                    return Err(violation(index, Rule::NotReady, format!("processor {proc} busy until {}, start {t}", state[proc])));
                }
            }
            for i in 0..p {
                if remaining[i] && i != a && i != b && state[i] < t {
                    state[i] = t;
                }
            }
            state[a] = e.comm_end();
            state[b] = e.finish();
            remaining[a] = false;
            left -= 1;
        }
        if left != 1 {
            let missing: Vec<usize> = (1..p).filter(|&i| remaining[i]).collect();
            return Err(violation(events.len(), Rule::MissingSend, format!("segment {segment} never sent by {missing:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::MachineParams;
    use crate::schedule::SegmentPlan;

    fn build(p: u64, q: usize, pairs: &[(usize, usize, usize, i128)]) -> Schedule {
        let params = MachineParams::from_ints(p, 1, 1, 1).unwrap();
        let plan = SegmentPlan::uniform(q, 1).unwrap();
        Schedule::from_pairs(
            params,
            plan,
            PortModel::Unidirectional,
            pairs.iter().map(|&(j, a, b, s)| (j, a, b, Time::from_int(s))),
        )
        .unwrap()
    }

    fn rule_of(s: &Schedule) -> Option<Rule> {
        validate_uni(s).err().map(|v| v.rule)
    }

    // comm = 2, comp = 1 throughout.

    #[test]
    fn valid_chain() {
        let s = build(3, 2, &[(1, 2, 1, 0), (1, 1, 0, 3), (2, 2, 1, 5), (2, 1, 0, 8)]);
        assert_eq!(validate_uni(&s), Ok(()));
    }

    #[test]
    fn root_sender() {
        let s = build(2, 1, &[(1, 0, 1, 0)]);
        assert_eq!(rule_of(&s), Some(Rule::SenderIsRoot));
    }

    #[test]
    fn out_of_order_segments() {
        // Processor 1 sends segment 2 before segment 1.
        let s = build(3, 2, &[(2, 2, 0, 0), (1, 2, 1, 3), (2, 1, 0, 6), (1, 1, 0, 6)]);
        let v = validate_uni(&s).unwrap_err();
        assert_eq!(v.rule, Rule::InOrder);
    }

    #[test]
    fn busy_receiver() {
        // Processor 2 receives until 3 but forwards at 1.
        let s = build(4, 1, &[(1, 3, 2, 0), (1, 2, 0, 1)]);
        assert_eq!(rule_of(&s), Some(Rule::NotReady));
    }

    #[test]
    fn start_below_second_smallest() {
        // Remaining states {0: 0, 1: 3}; a pair at 2 is below 3.
        let s = build(3, 1, &[(1, 2, 1, 0), (1, 1, 0, 2)]);
        assert_eq!(rule_of(&s), Some(Rule::BelowSecondSmallest));
    }

    #[test]
    fn resend_and_missing() {
        let s = build(3, 1, &[(1, 2, 1, 0), (1, 2, 0, 3)]);
        assert_eq!(rule_of(&s), Some(Rule::NotRemaining));
        let s = build(3, 1, &[(1, 2, 0, 0)]);
        assert_eq!(rule_of(&s), Some(Rule::MissingSend));
    }

    #[test]
    fn bidirectional_rejected() {
        let params = MachineParams::from_ints(2, 1, 1, 1).unwrap();
        let plan = SegmentPlan::uniform(1, 1).unwrap();
        let s = Schedule::from_pairs(params, plan, PortModel::Bidirectional, [(1, 1, 0, Time::ZERO)]).unwrap();
        assert_eq!(rule_of(&s), Some(Rule::Model));
    }
}
