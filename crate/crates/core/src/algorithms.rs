//! Event-level schedules for the binomial tree and the pipeline chain on
//! one-port machines.

use crate::cost::{MachineParams, TickRates};
use crate::rational::Time;
use crate::schedule::{PortModel, Schedule, SegmentPlan};

/// Round-synchronized binomial reduction of the whole message.
///
/// In every round the `floor(n / 2)` highest remaining ids send to the
/// lowest ones; round `r` starts when round `r - 1` has been combined.
///
/// Panics if `m` is 0.
pub fn schedule_binomial(params: &MachineParams, m: u64) -> Schedule {
    let plan = SegmentPlan::new(vec![m]).expect("message size is at least 1");
    let round = params.round(m);
    let mut remaining: Vec<usize> = (0..params.p as usize).collect();
    let mut pairs = Vec::new();
    let mut t = Time::ZERO;
    while remaining.len() > 1 {
        let n = remaining.len();
        for i in 0..n / 2 {
            pairs.push((1, remaining[n - 1 - i], remaining[i], t));
        }
        remaining.truncate(n - n / 2);
        t += round;
    }
    Schedule::from_pairs(*params, plan, PortModel::Unidirectional, pairs).expect("ids in range")
}

/// Runs the chain in ticks, reporting every event as `(segment, sender,
/// start)` with a 0-based segment, and returns the root's completion.
///
/// Each processor alternates: receive segment `j` from `k + 1`, send it to
/// `k - 1`, receive `j + 1`, and so on. Every event starts as soon as both
/// partners reached it in their own sequence.
fn run_pipeline(rates: &TickRates, p: usize, sizes: &[u64], mut record: impl FnMut(usize, usize, i128)) -> i128 {
    // When each processor finished its last send (for the root: its last
    // combine).
    let mut sent = vec![0i128; p];
    for (j, &s) in sizes.iter().enumerate() {
        let (comm, comp) = (rates.comm(s), rates.comp(s));
        // When the current sender holds segment j fully combined.
        let mut holder_ready = sent[p - 1];
        for k in (1..p).rev() {
            let t = holder_ready.max(sent[k - 1]);
            record(j, k, t);
            sent[k] = t + comm;
            holder_ready = t + comm + comp;
        }
        sent[0] = holder_ready;
    }
    sent[0]
}

/// Pipeline along the chain `p-1 -> p-2 -> ... -> 0`, each segment in turn.
pub fn schedule_pipeline(params: &MachineParams, plan: &SegmentPlan) -> Schedule {
    let rates = params.ticks();
    let mut pairs = Vec::new();
    run_pipeline(&rates, params.p as usize, plan.sizes(), |j, k, t| {
        pairs.push((j + 1, k, k - 1, rates.to_time(t)));
    });
    Schedule::from_pairs(*params, plan.clone(), PortModel::Unidirectional, pairs).expect("ids in range")
}

/// Completion time of `schedule_pipeline` without building the events.
pub fn pipeline_time(params: &MachineParams, plan: &SegmentPlan) -> Time {
    let rates = params.ticks();
    rates.to_time(pipeline_ticks(&rates, params.p as usize, plan.sizes()))
}

/// `pipeline_time` in ticks of `rates`.
pub fn pipeline_ticks(rates: &TickRates, p: usize, sizes: &[u64]) -> i128 {
    run_pipeline(rates, p, sizes, |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{is_correct, simulate, validate_uni};

    fn params(p: u64, a: i64, b: i64, g: i64) -> MachineParams {
        MachineParams::from_ints(p, a, b, g).unwrap()
    }

    #[test]
    fn binomial_examples() {
        let s = schedule_binomial(&params(4, 10, 1, 0), 5);
        assert_eq!(simulate(&s).unwrap().completion, Time::from_int(30));
        let s = schedule_binomial(&params(2, 3, 2, 1), 4);
        assert_eq!(s.events().len(), 1);
        assert_eq!(simulate(&s).unwrap().completion, Time::from_int(3 + 8 + 4));
        let s = schedule_binomial(&params(5, 0, 1, 1), 1);
        assert_eq!(simulate(&s).unwrap().completion, Time::from_int(6));
        assert!(is_correct(&s));
        assert_eq!(validate_uni(&s), Ok(()));
    }

    #[test]
    fn pipeline_hand_trace() {
        let plan = SegmentPlan::new(vec![1, 1]).unwrap();
        let s = schedule_pipeline(&params(3, 1, 1, 1), &plan);
        let starts: Vec<i128> = s.events().iter().map(|e| e.start.numer()).collect();
        assert_eq!(starts, vec![0, 3, 5, 8]);
        assert_eq!(simulate(&s).unwrap().completion, Time::from_int(11));
        assert_eq!(pipeline_time(&params(3, 1, 1, 1), &plan), Time::from_int(11));
        assert!(is_correct(&s));
        assert_eq!(validate_uni(&s), Ok(()));
    }

    #[test]
    fn pipeline_single_segment_is_a_chain() {
        for p in 2..10 {
            let prm = params(p, 2, 3, 1);
            let plan = SegmentPlan::new(vec![4]).unwrap();
            let expected = prm.round(4).times(p - 1);
            assert_eq!(simulate(&schedule_pipeline(&prm, &plan)).unwrap().completion, expected);
            assert_eq!(pipeline_time(&prm, &plan), expected);
        }
    }
}
