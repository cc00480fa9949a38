//! Schedule data model shared by all generators.
//!
//! A schedule is a list of send/receive events. Processor 0 is the root and
//! never sends. Each event moves one segment from `sender` to `receiver`,
//! occupies both for `comm = alpha + beta * s_j` and then occupies the
//! receiver for `comp = gamma * s_j` while it combines the data.

mod correctness;
mod emit;
mod simulate;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::MachineParams;
use crate::rational::Time;

pub use correctness::{check_correctness, is_correct, ContributionState};
pub use emit::{emit_result, emit_schedule, parse_schedule_json, Format};
pub use simulate::{simulate, Activity, Interval, SimulationResult};
pub use validate::{validate_uni, Rule, Violation};

/// Root processor id.
pub const ROOT: usize = 0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("invalid segment plan: {0}")]
    InvalidPlan(String),
    #[error("event {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },
    #[error("event {index} starts at negative time {start}")]
    NegativeTime { index: usize, start: Time },
    #[error("port conflict on processor {processor} at time {time}: {first} overlaps {second}")]
    Overlap {
        processor: usize,
        time: Time,
        first: String,
        second: String,
    },
    #[error("processor {processor} received contributions it already holds for segment {segment} (event {event_index})")]
    DuplicateContribution {
        processor: usize,
        segment: usize,
        event_index: usize,
    },
    #[error("root is missing contributions {missing:?} for segment {segment}")]
    IncompleteRoot { segment: usize, missing: Vec<usize> },
    #[error(transparent)]
    Validation(#[from] Violation),
    #[error("unsupported format {0:?}")]
    UnsupportedFormat(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Ordered segment sizes of one message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct SegmentPlan {
    sizes: Vec<u64>,
}

impl SegmentPlan {
    pub fn new(sizes: Vec<u64>) -> Result<Self, ScheduleError> {
        if sizes.is_empty() {
            return Err(ScheduleError::InvalidPlan("a plan needs at least one segment".into()));
        }
        if let Some(pos) = sizes.iter().position(|&s| s == 0) {
            return Err(ScheduleError::InvalidPlan(format!("segment {} has size 0", pos + 1)));
        }
        Ok(SegmentPlan { sizes })
    }

    /// `(s, ..., s, m mod s)`: equal segments with a smaller remainder.
    pub fn equi(m: u64, s: u64) -> Result<Self, ScheduleError> {
        if m == 0 || s == 0 || s > m {
            return Err(ScheduleError::InvalidPlan(format!("cannot cut {m} elements into segments of {s}")));
        }
        let mut sizes = vec![s; (m / s) as usize];
        if m % s != 0 {
            sizes.push(m % s);
        }
        Ok(SegmentPlan { sizes })
    }

    /// `q` segments of size `s`.
    pub fn uniform(q: usize, s: u64) -> Result<Self, ScheduleError> {
        Self::new(vec![s; q])
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    /// Size of 1-based segment `j`.
    pub fn size(&self, j: usize) -> u64 {
        self.sizes[j - 1]
    }

    pub fn q(&self) -> usize {
        self.sizes.len()
    }

    pub fn m(&self) -> u64 {
        self.sizes.iter().sum()
    }

    /// True when all segments but a possibly smaller last one are equal.
    pub fn is_equi(&self) -> bool {
        let first = self.sizes[0];
        let (last, body) = self.sizes.split_last().expect("nonempty");
        body.iter().all(|&s| s == first) && *last <= first
    }
}

impl TryFrom<Vec<u64>> for SegmentPlan {
    type Error = ScheduleError;
    fn try_from(sizes: Vec<u64>) -> Result<Self, Self::Error> {
        SegmentPlan::new(sizes)
    }
}

impl From<SegmentPlan> for Vec<u64> {
    fn from(plan: SegmentPlan) -> Self {
        plan.sizes
    }
}

impl fmt::Display for SegmentPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.sizes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Which activities a processor may run at the same time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortModel {
    /// Send or receive, never both.
    #[serde(rename = "uni", alias = "unidirectional")]
    Unidirectional,
    /// One send and one receive may run concurrently.
    #[serde(rename = "bi", alias = "bidirectional")]
    Bidirectional,
}

impl fmt::Display for PortModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortModel::Unidirectional => "uni",
            PortModel::Bidirectional => "bi",
        })
    }
}

/// One send/receive pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    /// 1-based segment index.
    pub segment: usize,
    pub sender: usize,
    pub receiver: usize,
    pub start: Time,
    pub comm: Time,
    pub comp: Time,
}

impl Event {
    pub fn comm_end(&self) -> Time {
        self.start + self.comm
    }

    /// When the receiver has combined the segment.
    pub fn finish(&self) -> Time {
        self.start + self.comm + self.comp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    params: MachineParams,
    plan: SegmentPlan,
    model: PortModel,
    events: Vec<Event>,
}

impl Schedule {
    /// Builds a schedule from `(segment, sender, receiver, start)` tuples.
    /// Durations come from the plan; events are stably sorted by start.
    /// Only indices are checked here: counting and ordering rules belong to
    /// `validate_uni`, `simulate` and `check_correctness`.
    pub fn from_pairs(
        params: MachineParams,
        plan: SegmentPlan,
        model: PortModel,
        pairs: impl IntoIterator<Item = (usize, usize, usize, Time)>,
    ) -> Result<Self, ScheduleError> {
        let mut schedule = Self::from_pairs_in_order(params, plan, model, pairs)?;
        schedule.events.sort_by(|a, b| a.start.cmp(&b.start));
        Ok(schedule)
    }

    /// Like `from_pairs` but keeps the given order, so that `validate_uni`
    /// can report unsorted input.
    pub fn from_pairs_in_order(
        params: MachineParams,
        plan: SegmentPlan,
        model: PortModel,
        pairs: impl IntoIterator<Item = (usize, usize, usize, Time)>,
    ) -> Result<Self, ScheduleError> {
        let p = params.p as usize;
        let mut events = Vec::new();
        for (index, (segment, sender, receiver, start)) in pairs.into_iter().enumerate() {
            let bad = |reason: String| ScheduleError::InvalidEvent { index, reason };
            if segment == 0 || segment > plan.q() {
                return Err(bad(format!("segment {segment} outside 1..={}", plan.q())));
            }
            if sender >= p || receiver >= p {
                return Err(bad(format!("processor id outside 0..{p}")));
            }
            if sender == receiver {
                return Err(bad(format!("processor {sender} sends to itself")));
            }
            let s = plan.size(segment);
            events.push(Event {
                segment,
                sender,
                receiver,
                start,
                comm: params.comm(s),
                comp: params.comp(s),
            });
        }
        Ok(Schedule {
            params,
            plan,
            model,
            events,
        })
    }

    pub fn p(&self) -> usize {
        self.params.p as usize
    }

    pub fn params(&self) -> &MachineParams {
        &self.params
    }

    pub fn plan(&self) -> &SegmentPlan {
        &self.plan
    }

    pub fn model(&self) -> PortModel {
        self.model
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Latest receiver finish over all events.
    pub fn makespan(&self) -> Time {
        self.events.iter().map(Event::finish).max().unwrap_or(Time::ZERO)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equi_plans() {
        assert_eq!(SegmentPlan::equi(10, 4).unwrap().sizes(), &[4, 4, 2]);
        assert_eq!(SegmentPlan::equi(10, 3).unwrap().sizes(), &[3, 3, 3, 1]);
        assert_eq!(SegmentPlan::equi(10, 10).unwrap().sizes(), &[10]);
        assert!(SegmentPlan::equi(10, 11).is_err());
        assert!(SegmentPlan::equi(10, 4).unwrap().is_equi());
        assert!(!SegmentPlan::new(vec![2, 3]).unwrap().is_equi());
        assert!(SegmentPlan::new(vec![]).is_err());
        assert!(SegmentPlan::new(vec![1, 0]).is_err());
        assert_eq!(SegmentPlan::new(vec![5, 3, 2]).unwrap().to_string(), "(5,3,2)");
    }

    #[test]
    fn from_pairs_checks_ids_and_sorts() {
        let params = MachineParams::from_ints(3, 1, 1, 1).unwrap();
        let plan = SegmentPlan::uniform(1, 2).unwrap();
        let t = Time::from_int;
        let sched = Schedule::from_pairs(
            params,
            plan.clone(),
            PortModel::Unidirectional,
            [(1, 1, 0, t(5)), (1, 2, 1, t(0))],
        )
        .unwrap();
        assert_eq!(sched.events()[0].sender, 2);
        assert_eq!(sched.events()[0].comm, t(3));
        assert_eq!(sched.events()[0].comp, t(2));
        for bad in [(0, 1, 0), (2, 1, 0), (1, 3, 0), (1, 1, 1)] {
            let r = Schedule::from_pairs(params, plan.clone(), PortModel::Unidirectional, [(bad.0, bad.1, bad.2, t(0))]);
            assert!(matches!(r, Err(ScheduleError::InvalidEvent { .. })), "{bad:?}");
        }
    }
}
