//! Discrete-event replay of a schedule under a port model.

use std::fmt;

use serde::Serialize;

use super::{PortModel, Schedule, ScheduleError, ROOT};
use crate::rational::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Send,
    Recv,
    Compute,
}

/// Half-open busy interval `[start, end)` on one processor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub start: Time,
    pub end: Time,
    pub activity: Activity,
    pub segment: usize,
    /// Index of the event that produced the interval.
    pub event: usize,
}

impl Interval {
    fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} seg {} [{}, {}) (event {})",
            self.activity, self.segment, self.start, self.end, self.event
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub p: usize,
    pub model: PortModel,
    /// Root's state after its final computation.
    pub completion: Time,
    /// Busy intervals per processor, sorted by start.
    pub proc_timeline: Vec<Vec<Interval>>,
    /// When each segment's reduction finishes at the root (index 0 is
    /// segment 1).
    pub per_segment_finish: Vec<Time>,
}

fn conflicts(model: PortModel, a: Activity, b: Activity) -> bool {
    match model {
        PortModel::Unidirectional => true,
        PortModel::Bidirectional => a == b || a == Activity::Compute || b == Activity::Compute,
    }
}

/// Busy intervals of every processor, sorted by start, without any checks.
pub(crate) fn layout(schedule: &Schedule) -> Vec<Vec<Interval>> {
    let mut timeline: Vec<Vec<Interval>> = vec![Vec::new(); schedule.p()];
    for (index, e) in schedule.events().iter().enumerate() {
        let iv = |start, end, activity| Interval {
            start,
            end,
            activity,
            segment: e.segment,
            event: index,
        };
        timeline[e.sender].push(iv(e.start, e.comm_end(), Activity::Send));
        timeline[e.receiver].push(iv(e.start, e.comm_end(), Activity::Recv));
        timeline[e.receiver].push(iv(e.comm_end(), e.finish(), Activity::Compute));
    }
    for ivs in timeline.iter_mut() {
        ivs.sort_by(|a, b| (a.start, a.end, a.event).cmp(&(b.start, b.end, b.event)));
    }
    timeline
}

/// Lays out every event's busy intervals and checks physical feasibility:
/// one-port processors never overlap anything; two-port processors keep
/// sends disjoint, receives disjoint, and computation apart from both.
pub fn simulate(schedule: &Schedule) -> Result<SimulationResult, ScheduleError> {
    let p = schedule.p();
    let q = schedule.plan().q();
    if let Some((index, e)) = schedule.events().iter().enumerate().find(|(_, e)| e.start.is_negative()) {
        return Err(ScheduleError::NegativeTime { index, start: e.start });
    }
    let timeline = layout(schedule);
    for (processor, ivs) in timeline.iter().enumerate() {
        let busy: Vec<&Interval> = ivs.iter().filter(|iv| !iv.is_empty()).collect();
        for (i, a) in busy.iter().enumerate() {
            for b in busy[i + 1..].iter().take_while(|b| b.start < a.end) {
                if conflicts(schedule.model(), a.activity, b.activity) {
                    return Err(ScheduleError::Overlap {
                        processor,
                        time: b.start,
                        first: a.to_string(),
                        second: b.to_string(),
                    });
                }
            }
        }
    }

    let root = &timeline[ROOT];
    let completion = root.iter().map(|iv| iv.end).max().unwrap_or(Time::ZERO);
    let mut per_segment_finish = vec![Time::ZERO; q];
    for iv in root {
        let slot = &mut per_segment_finish[iv.segment - 1];
        *slot = (*slot).max(iv.end);
    }
    Ok(SimulationResult {
        p,
        model: schedule.model(),
        completion,
        proc_timeline: timeline,
        per_segment_finish,
    })
}
