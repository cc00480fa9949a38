//! Port-filling greedy schedule for two-port machines.
//!
//! Time advances in integer ticks. At every step the scheduler walks the
//! unfinished segments in index order and pairs as many idle send ports with
//! idle receive ports as it can, giving smaller segments priority. Unlike
//! the one-port greedy, a processor may receive a later segment before it
//! has sent an earlier one.

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::{MachineParams, TickRates};
use crate::rational::ceil_log2;
use crate::schedule::{check_correctness, simulate, PortModel, Schedule, SegmentPlan, ROOT};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BiGreedyError {
    #[error("segment {segment} has zero communication time; the discrete scheduler needs at least one tick")]
    ZeroComm { segment: usize },
    #[error("internal error: scheduler still running at tick {t}, past the safe bound {bound}")]
    NonTerminating { t: i128, bound: i128 },
}

/// How the clock advances between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepping {
    /// One tick at a time.
    Unit,
    /// Straight to the next tick at which some port, computation or segment
    /// becomes available. Produces the same schedule as `Unit`.
    Jump,
}

struct Run {
    pairs: Vec<(usize, usize, usize, i128)>,
    completion: i128,
}

/// `[t, t + len)` meets `[lo, hi)`.
fn overlaps(t: i128, len: i128, (lo, hi): (i128, i128)) -> bool {
    t < hi && lo < t + len && lo < hi
}

fn run(rates: &TickRates, p: usize, sizes: &[u64], stepping: Stepping) -> Result<Run, BiGreedyError> {
    let q = sizes.len();
    let costs: Vec<(i128, i128)> = sizes.iter().map(|&s| (rates.comm(s), rates.comp(s))).collect();
    if let Some(j) = costs.iter().position(|&(c, _)| c <= 0) {
        return Err(BiGreedyError::ZeroComm { segment: j + 1 });
    }
    let widest = costs.iter().map(|&(c, d)| c + d).max().unwrap_or(1);
    let bound = (ceil_log2(p as u64) as i128 + q as i128) * widest * 4;

    // Send port free, receive port free, last computation window.
    let mut send_free = vec![0i128; p];
    let mut recv_free = vec![0i128; p];
    let mut comp_win = vec![(0i128, 0i128); p];
    // finished[i][j]: when i finished sending j (root: final combine);
    // 0 while pending.
    let mut finished = vec![vec![0i128; q]; p];
    // holds[i][j]: when every receive of j on i has been combined.
    let mut holds = vec![vec![0i128; q]; p];
    let mut pairs = Vec::new();
    let mut t = 0i128;

    while let Some(seg_start) = (0..q).find(|&j| finished[ROOT][j] == 0) {
        if t > bound {
            return Err(BiGreedyError::NonTerminating { t, bound });
        }
        let mut j = seg_start;
        loop {
            let (c, d) = costs[j];
            let (mut send, mut recv, mut free) = (Vec::new(), Vec::new(), Vec::new());
            for i in 0..p {
                if finished[i][j] != 0 || overlaps(t, c, comp_win[i]) {
                    continue;
                }
                let can_send = i != ROOT && send_free[i] <= t && holds[i][j] <= t;
                // The combine after this receive must not meet a running send.
                let can_recv = recv_free[i] <= t && send_free[i] <= t + c;
                match (can_send, can_recv) {
                    (true, true) => free.push(i),
                    (true, false) => send.push(i),
                    (false, true) => recv.push(i),
                    (false, false) => {}
                }
            }
            let (s, r, f) = (send.len(), recv.len(), free.len());
            if s == r {
                let y = f / 2;
                send.extend_from_slice(&free[f - y..]);
                recv.extend_from_slice(&free[..y]);
            } else if s < r {
                let m = f.min(r - s);
                let x = (f - m) / 2;
                send.extend_from_slice(&free[f - (m + x)..]);
                recv.extend_from_slice(&free[..x]);
            } else {
                let m = f.min(s - r);
                let x = (f - m) / 2;
                recv.extend_from_slice(&free[..m + x]);
                send.extend_from_slice(&free[f - x..]);
            }
            send.sort_unstable();
            recv.sort_unstable();
            let l = send.len().min(recv.len());
            for (&a, &b) in send[..l].iter().zip(&recv[..l]) {
                pairs.push((j + 1, a, b, t));
                finished[a][j] = t + c;
                send_free[a] = t + c;
                recv_free[b] = t + c + d;
                comp_win[b] = (t + c, t + c + d);
                holds[b][j] = holds[b][j].max(t + c + d);
            }
            if l > 0 && (0..p).filter(|&i| finished[i][j] == 0).count() == 1 {
                let last = (0..p).map(|i| finished[i][j]).max().expect("p >= 2");
                finished[ROOT][j] = last + d;
            }
            let open_ports = send_free.iter().filter(|&&v| v <= t).count() + recv_free.iter().filter(|&&v| v <= t).count();
            if open_ports < 2 || j + 1 >= q {
                break;
            }
            j += 1;
        }
        t = match stepping {
            Stepping::Unit => t + 1,
            Stepping::Jump => {
                let releases = send_free
                    .iter()
                    .chain(&recv_free)
                    .copied()
                    .chain(comp_win.iter().map(|w| w.1))
                    .chain(holds.iter().flatten().copied())
                    .chain(send_free.iter().flat_map(|&v| costs.iter().map(move |&(c, _)| v - c)));
                releases.filter(|&v| v > t).min().unwrap_or(t + 1)
            }
        };
    }
    let completion = finished[ROOT].iter().copied().max().unwrap_or(0);
    Ok(Run { pairs, completion })
}

/// Port-filling greedy schedule under the two-port model.
///
/// Durations are measured in ticks of `params.ticks()`; every segment must
/// take at least one tick to communicate.
pub fn bi_greedy_schedule(params: &MachineParams, plan: &SegmentPlan) -> Result<Schedule, BiGreedyError> {
    bi_greedy_schedule_with(params, plan, Stepping::Jump)
}

pub fn bi_greedy_schedule_with(params: &MachineParams, plan: &SegmentPlan, stepping: Stepping) -> Result<Schedule, BiGreedyError> {
    let rates = params.ticks();
    let out = run(&rates, params.p as usize, plan.sizes(), stepping)?;
    let pairs = out.pairs.into_iter().map(|(j, a, b, t)| (j, a, b, rates.to_time(t)));
    Ok(Schedule::from_pairs(*params, plan.clone(), PortModel::Bidirectional, pairs).expect("ids in range"))
}

/// Completion of the bi-greedy schedule in ticks of `rates`.
pub fn bi_greedy_ticks(rates: &TickRates, p: u64, sizes: &[u64]) -> Result<i128, BiGreedyError> {
    Ok(run(rates, p as usize, sizes, Stepping::Jump)?.completion)
}

/// Whether some processor starts receiving a segment before it starts
/// sending an earlier one.
pub fn receives_out_of_order(schedule: &Schedule) -> bool {
    let p = schedule.p();
    let q = schedule.plan().q();
    let mut send_at = vec![vec![None; q + 1]; p];
    for e in schedule.events() {
        send_at[e.sender][e.segment] = Some(e.start);
    }
    schedule.events().iter().any(|e| {
        (1..e.segment).any(|earlier| send_at[e.receiver][earlier].is_some_and(|s| s > e.start))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjectureCase {
    pub p: u64,
    pub q: u64,
    pub comm: u64,
    pub comp: u64,
    pub expected: i128,
    /// Completion, or `None` when the scheduler failed.
    pub actual: Option<i128>,
    pub problem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjectureReport {
    pub checked: usize,
    /// Instances in which a processor received a segment before sending an
    /// earlier one.
    pub reordered: usize,
    pub counterexamples: Vec<ConjectureCase>,
}

/// Checks that bi-greedy on `q` unit segments needs exactly
/// `ceil(log2 p) + q - 1` rounds of `comm + comp`, and that each schedule is
/// feasible and correct.
pub fn check_round_conjecture(
    p_range: impl IntoIterator<Item = u64>,
    q_range: impl IntoIterator<Item = u64> + Clone,
    costs: &[(u64, u64)],
) -> ConjectureReport {
    let cases: Vec<(u64, u64, u64, u64)> = p_range
        .into_iter()
        .flat_map(|p| q_range.clone().into_iter().map(move |q| (p, q)))
        .flat_map(|(p, q)| costs.iter().map(move |&(c, d)| (p, q, c, d)))
        .collect();
    let results: Vec<(ConjectureCase, bool)> = cases
        .par_iter()
        .map(|&(p, q, comm, comp)| {
            let expected = (ceil_log2(p) as i128 + q as i128 - 1) * (comm + comp) as i128;
            let mut case = ConjectureCase {
                p,
                q,
                comm,
                comp,
                expected,
                actual: None,
                problem: None,
            };
            let params = MachineParams::from_ints(p, comm as i64, 0, comp as i64).expect("valid parameters");
            let plan = SegmentPlan::uniform(q as usize, 1).expect("q >= 1");
            let schedule = match bi_greedy_schedule(&params, &plan) {
                Ok(s) => s,
                Err(e) => {
                    case.problem = Some(e.to_string());
                    return (case, false);
                }
            };
            let reordered = receives_out_of_order(&schedule);
            match simulate(&schedule).and_then(|sim| check_correctness(&schedule).map(|_| sim)) {
                Ok(sim) => {
                    let actual = sim.completion.numer();
                    case.actual = Some(actual);
                    if actual != expected {
                        case.problem = Some("round count differs".into());
                    }
                }
                Err(e) => case.problem = Some(e.to_string()),
            }
            (case, reordered)
        })
        .collect();
    ConjectureReport {
        checked: results.len(),
        reordered: results.iter().filter(|r| r.1).count(),
        counterexamples: results.into_iter().filter(|r| r.0.problem.is_some()).map(|r| r.0).collect(),
    }
}
