//! Greedy schedule for one-port machines and an exhaustive search used to
//! check its optimality on small instances.
//!
//! Segments are reduced one after another. Within a segment every processor
//! still holding a value has a state, the time it became idle. The greedy
//! rule pairs the two smallest states `g1 <= g2` at `t = x_g2`: `g1` sends
//! to `g2`, or the other way round when `g1` is the root. The sender leaves
//! the segment at `t + comm`; the receiver is busy until `t + comm + comp`.
//! Each processor starts the next segment at the state it left this one.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Bound::{Excluded, Unbounded};

use crate::cost::{MachineParams, TickRates};
use crate::rational::Time;
use crate::schedule::{PortModel, Schedule, SegmentPlan, ROOT};

/// Event-level greedy schedule.
pub fn uni_greedy_schedule(params: &MachineParams, plan: &SegmentPlan) -> Schedule {
    let rates = params.ticks();
    let p = params.p as usize;
    let mut state = vec![0i128; p];
    let mut pairs = Vec::with_capacity((p - 1) * plan.q());
    for (j, &s) in plan.sizes().iter().enumerate() {
        let (comm, comp) = (rates.comm(s), rates.comp(s));
        let mut live: BTreeSet<(i128, usize)> = (0..p).map(|i| (state[i], i)).collect();
        while live.len() > 1 {
            let g1 = live.pop_first().expect("two live entries");
            let (t, g2) = live.pop_first().expect("two live entries");
            let (a, b) = if g1.1 == ROOT { (g2, g1.1) } else { (g1.1, g2) };
            pairs.push((j + 1, a, b, rates.to_time(t)));
            state[a] = t + comm;
            state[b] = t + comm + comp;
            live.insert((state[b], b));
        }
    }
    Schedule::from_pairs(*params, plan.clone(), PortModel::Unidirectional, pairs).expect("ids in range")
}

/// Completion time of the greedy schedule.
pub fn uni_greedy_time(params: &MachineParams, plan: &SegmentPlan) -> Time {
    let rates = params.ticks();
    let ticks = uni_greedy_ticks(&rates, params.p, plan.sizes(), None).expect("no cutoff");
    rates.to_time(ticks)
}

fn take(set: &mut BTreeMap<i128, u64>, key: i128, n: u64) {
    let slot = set.get_mut(&key).expect("key present");
    *slot -= n;
    if *slot == 0 {
        set.remove(&key);
    }
}

fn put(set: &mut BTreeMap<i128, u64>, key: i128, n: u64) {
    if n > 0 {
        *set.entry(key).or_insert(0) += n;
    }
}

/// Greedy completion in ticks, tracking only how many non-root processors
/// share each state. Identical processors are interchangeable, so pairs at
/// the same time are applied in bulk.
///
/// With `cutoff`, returns `None` as soon as the completion is known to
/// exceed it.
pub fn uni_greedy_ticks(rates: &TickRates, p: u64, sizes: &[u64], cutoff: Option<i128>) -> Option<i128> {
    // Completion is at least the root's state plus one receive and combine
    // per remaining segment.
    let mut tail: Vec<i128> = sizes.iter().map(|&s| rates.comm(s) + rates.comp(s)).collect();
    for j in (0..tail.len().saturating_sub(1)).rev() {
        tail[j] += tail[j + 1];
    }
    let mut root = 0i128;
    let mut rem: BTreeMap<i128, u64> = BTreeMap::from([(0, p - 1)]);
    let mut sent: BTreeMap<i128, u64> = BTreeMap::new();
    for (j, &s) in sizes.iter().enumerate() {
        if cutoff.is_some_and(|lim| root + tail[j] > lim) {
            return None;
        }
        let (c, d) = (rates.comm(s), rates.comp(s));
        let mut left = p - 1;
        while left > 0 {
            let (&v, &count) = rem.first_key_value().expect("non-root processors remain");
            if root <= v {
                // The root is among the two smallest: a processor at v sends
                // to it.
                take(&mut rem, v, 1);
                put(&mut sent, v + c, 1);
                root = v + c + d;
                left -= 1;
            } else if count >= 2 {
                let pairs = count / 2;
                take(&mut rem, v, 2 * pairs);
                put(&mut sent, v + c, pairs);
                put(&mut rem, v + c + d, pairs);
                left -= pairs;
            } else {
                let next = rem.range((Excluded(v), Unbounded)).next().map(|(&w, _)| w);
                take(&mut rem, v, 1);
                match next {
                    Some(w) if w < root => {
                        take(&mut rem, w, 1);
                        put(&mut sent, w + c, 1);
                        put(&mut rem, w + c + d, 1);
                    }
                    _ => {
                        put(&mut sent, root + c, 1);
                        root += c + d;
                    }
                }
                left -= 1;
            }
        }
        rem = std::mem::take(&mut sent);
    }
    if cutoff.is_some_and(|lim| root > lim) {
        return None;
    }
    Some(root)
}

/// Largest processor count and segment count accepted by the oracle.
pub const ORACLE_MAX_P: u64 = 6;
pub const ORACLE_MAX_Q: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Distinct search states expanded before giving up.
    pub max_nodes: u64,
    /// Raise idle remaining processors to the start of every pair. Without
    /// it the search covers a strictly larger schedule class.
    pub bump: bool,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_nodes: 20_000_000,
            bump: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: p = {p} (max {ORACLE_MAX_P}), q = {q} (max {ORACLE_MAX_Q})")]
    TooLarge { p: u64, q: usize },
    #[error("search exceeded {nodes} expanded states")]
    LimitExceeded { nodes: u64 },
}

type Key = (usize, i128, Vec<i128>, Vec<i128>);

struct Search<'a> {
    costs: &'a [(i128, i128)],
    limits: OracleLimits,
    memo: HashMap<Key, i128>,
    nodes: u64,
}

impl Search<'_> {
    /// Minimum root completion from segment `j` with root state `root`,
    /// non-root processors still holding segment `j` at `rem`, and those that
    /// already sent it at `sent` (both sorted).
    fn best(&mut self, j: usize, root: i128, rem: &[i128], sent: &[i128]) -> Result<i128, OracleError> {
        if rem.is_empty() {
            if j + 1 == self.costs.len() {
                return Ok(root);
            }
            return self.best(j + 1, root, sent, &[]);
        }
        let key = (j, root, rem.to_vec(), sent.to_vec());
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            return Err(OracleError::LimitExceeded {
                nodes: self.limits.max_nodes,
            });
        }
        let (c, d) = self.costs[j];
        let bumping = self.limits.bump;
        let bump = move |x: i128, t: i128| if bumping { x.max(t) } else { x };
        let mut best = i128::MAX;
        for a in 0..rem.len() {
            if a > 0 && rem[a] == rem[a - 1] {
                continue;
            }
            let mut next_sent = sent.to_vec();
            // Receiver is the root.
            {
                let t = rem[a].max(root);
                let mut next: Vec<i128> = rem.iter().enumerate().filter(|&(i, _)| i != a).map(|(_, &x)| bump(x, t)).collect();
                next.sort_unstable();
                next_sent.push(t + c);
                next_sent.sort_unstable();
                best = best.min(self.best(j, t + c + d, &next, &next_sent)?);
            }
            // Receiver is another non-root processor.
            for b in 0..rem.len() {
                if b == a || (b > 0 && b - 1 != a && rem[b] == rem[b - 1]) {
                    continue;
                }
                let t = rem[a].max(rem[b]);
                let mut next: Vec<i128> = rem
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != a && i != b)
                    .map(|(_, &x)| bump(x, t))
                    .collect();
                next.push(t + c + d);
                next.sort_unstable();
                let mut next_sent = sent.to_vec();
                next_sent.push(t + c);
                next_sent.sort_unstable();
                best = best.min(self.best(j, bump(root, t), &next, &next_sent)?);
            }
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

/// Minimum completion over every in-order schedule built from valid pairs,
/// each started as soon as both partners are idle.
pub fn brute_force_min_time(params: &MachineParams, plan: &SegmentPlan, limits: OracleLimits) -> Result<Time, OracleError> {
    if params.p > ORACLE_MAX_P || plan.q() > ORACLE_MAX_Q {
        return Err(OracleError::TooLarge { p: params.p, q: plan.q() });
    }
    let rates = params.ticks();
    let costs: Vec<(i128, i128)> = plan.sizes().iter().map(|&s| (rates.comm(s), rates.comp(s))).collect();
    let mut search = Search {
        costs: &costs,
        limits,
        memo: HashMap::new(),
        nodes: 0,
    };
    let rem = vec![0i128; params.p as usize - 1];
    let ticks = search.best(0, 0, &rem, &[])?;
    Ok(rates.to_time(ticks))
}
