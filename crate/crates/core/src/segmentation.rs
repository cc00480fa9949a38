//! Searching over ways to cut a message into segments.
//!
//! Equi-segmentations use one size `s` for every segment but a possibly
//! smaller last one; compositions allow any ordered list of sizes. The
//! ratio of the best equi time to the best overall time measures what
//! unequal segments can buy.

use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::pipeline_ticks;
use crate::cost::{
    bi_sopt_topt, bi_time, bi_time_real, uni_sopt_topt, uni_time, uni_time_real, BiAlgorithm, CostError, MachineParams, MessageSpec, TickRates, UniAlgorithm,
};
use crate::greedy_bi::{bi_greedy_ticks, BiGreedyError};
use crate::greedy_uni::uni_greedy_ticks;
use crate::rational::{Rational, Time};
use crate::schedule::{PortModel, SegmentPlan};

/// Largest `m` whose compositions are enumerated.
pub const MAX_COMPOSITION_M: u64 = 20;
/// Largest `m` for `best_overall_greedy`.
pub const MAX_OVERALL_M: u64 = 14;
/// Largest `m` for an exhaustive equi-segment search.
pub const MAX_EXHAUSTIVE_M: u64 = 1024;
/// Optimal plans kept per point; the full count is reported separately.
pub const OPTIMAL_SET_CAP: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SegmentationError {
    #[error("m = {m} is above the limit {limit} for {what} ({count} candidates)")]
    TooLarge {
        what: &'static str,
        m: u64,
        limit: u64,
        count: String,
    },
    #[error("message size must be at least 1")]
    EmptyMessage,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    BiGreedy(#[from] BiGreedyError),
}

fn too_large(what: &'static str, m: u64, limit: u64, count: String) -> SegmentationError {
    SegmentationError::TooLarge { what, m, limit, count }
}

/// Every ordered composition of `m`, by number of parts and then in
/// decreasing lexicographic order: `(3), (2,1), (1,2), (1,1,1)`.
pub fn compositions(m: u64) -> Result<Vec<SegmentPlan>, SegmentationError> {
    if m == 0 {
        return Err(SegmentationError::EmptyMessage);
    }
    if m > MAX_COMPOSITION_M {
        return Err(too_large("composition enumeration", m, MAX_COMPOSITION_M, format!("2^{}", m - 1)));
    }
    fn fill(rest: u64, parts: u64, prefix: &mut Vec<u64>, out: &mut Vec<SegmentPlan>) {
        if parts == 1 {
            prefix.push(rest);
            out.push(SegmentPlan::new(prefix.clone()).expect("positive parts"));
            prefix.pop();
            return;
        }
        for first in (1..=rest - (parts - 1)).rev() {
            prefix.push(first);
            fill(rest - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(1 << (m - 1));
    for parts in 1..=m {
        fill(m, parts, &mut Vec::with_capacity(parts as usize), &mut out);
    }
    Ok(out)
}

/// The equi plan for every `s` in `1..=m`.
pub fn equi_plans(m: u64) -> Result<Vec<SegmentPlan>, SegmentationError> {
    EquiFamily::BySize.plans(m)
}

/// Which equi plans a search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquiFamily {
    /// `(s, ..., s, r)` for every `s` in `1..=m`.
    BySize,
    /// One plan per segment count `q`, with `s = ceil(m / q)`. For `m = 10`
    /// this is (10), (5,5), (4,4,2), (3,3,3,1), (2,2,2,2,2) and ten 1s.
    ByCount,
}

impl EquiFamily {
    /// Plans in increasing segment size.
    pub fn plans(self, m: u64) -> Result<Vec<SegmentPlan>, SegmentationError> {
        if m == 0 {
            return Err(SegmentationError::EmptyMessage);
        }
        let mut sizes: Vec<u64> = match self {
            EquiFamily::BySize => (1..=m).collect(),
            EquiFamily::ByCount => (1..=m).map(|q| m.div_ceil(q)).collect(),
        };
        sizes.sort_unstable();
        sizes.dedup();
        Ok(sizes.into_iter().map(|s| SegmentPlan::equi(m, s).expect("1 <= s <= m")).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EquiSearch {
    /// Every `s` in `1..=m`.
    Exhaustive,
    /// Powers of two, `1`, `m`, and the integers around each closed-form
    /// optimum.
    Pow2,
    /// Exhaustive up to `MAX_EXHAUSTIVE_M`, powers of two beyond.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BestPlan {
    pub plan: SegmentPlan,
    pub time: Time,
}

/// Candidate segment sizes, largest first.
fn equi_candidates(params: &MachineParams, m: u64, search: EquiSearch, model: PortModel) -> Result<Vec<u64>, SegmentationError> {
    let search = match search {
        EquiSearch::Auto if m <= MAX_EXHAUSTIVE_M => EquiSearch::Exhaustive,
        EquiSearch::Auto => EquiSearch::Pow2,
        other => other,
    };
    let mut sizes: Vec<u64> = match search {
        EquiSearch::Exhaustive => {
            if m > MAX_EXHAUSTIVE_M {
                return Err(too_large("exhaustive equi search", m, MAX_EXHAUSTIVE_M, m.to_string()));
            }
            (1..=m).collect()
        }
        _ => {
            let mut v: Vec<u64> = (0..64).map(|i| 1u64 << i).take_while(|&s| s <= m).collect();
            v.push(m);
            let optima = match model {
                PortModel::Unidirectional => vec![
                    uni_sopt_topt(UniAlgorithm::Pipeline, params, m),
                    uni_sopt_topt(UniAlgorithm::Binary, params, m),
                ],
                PortModel::Bidirectional => vec![
                    bi_sopt_topt(BiAlgorithm::Pipeline, params, m),
                    bi_sopt_topt(BiAlgorithm::Binary, params, m),
                    bi_sopt_topt(BiAlgorithm::BiGreedy, params, m),
                ],
            };
            for opt in optima.into_iter().flatten() {
                v.extend(opt.candidates);
            }
            v
        }
    };
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes.dedup();
    Ok(sizes)
}

/// Minimum of `eval` over `plans`, keeping the first plan among ties.
/// `eval` receives the incumbent and may return `None` for anything worse.
fn argmin<'a>(plans: impl IntoIterator<Item = &'a [u64]>, mut eval: impl FnMut(&[u64], Option<i128>) -> Option<i128>) -> Option<(Vec<u64>, i128)> {
    let mut best: Option<(Vec<u64>, i128)> = None;
    for sizes in plans {
        let incumbent = best.as_ref().map(|b| b.1 - 1);
        if let Some(v) = eval(sizes, incumbent) {
            if best.as_ref().map_or(true, |b| v < b.1) {
                best = Some((sizes.to_vec(), v));
            }
        }
    }
    best
}

/// Fastest equi plan for the one-port greedy (or, with
/// `PortModel::Bidirectional`, the two-port greedy). Ties go to the larger
/// segment size.
pub fn best_equi_greedy(params: &MachineParams, m: u64, search: EquiSearch, model: PortModel) -> Result<BestPlan, SegmentationError> {
    if m == 0 {
        return Err(SegmentationError::EmptyMessage);
    }
    let rates = params.ticks();
    let plans: Vec<SegmentPlan> = equi_candidates(params, m, search, model)?
        .into_iter()
        .map(|s| SegmentPlan::equi(m, s).expect("1 <= s <= m"))
        .collect();
    let best = match model {
        PortModel::Unidirectional => argmin(plans.iter().map(|p| p.sizes()), |sizes, cut| uni_greedy_ticks(&rates, params.p, sizes, cut)),
        PortModel::Bidirectional => {
            let mut err = None;
            let best = argmin(plans.iter().map(|p| p.sizes()), |sizes, _| match bi_greedy_ticks(&rates, params.p, sizes) {
                Ok(v) => Some(v),
                Err(e) => {
                    err.get_or_insert(e);
                    None
                }
            });
            if let Some(e) = err {
                return Err(e.into());
            }
            best
        }
    };
    let (sizes, ticks) = best.expect("at least one candidate");
    Ok(BestPlan {
        plan: SegmentPlan::new(sizes).expect("candidate plan"),
        time: rates.to_time(ticks),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptimalSet {
    /// Optimal plans in enumeration order, at most `OPTIMAL_SET_CAP`.
    pub plans: Vec<SegmentPlan>,
    /// Number of optimal plans.
    pub count: usize,
    /// Some optimal plan, listed or not, is an equi plan.
    pub includes_equi: bool,
    pub time: Time,
}

fn optimal_set(plans: &[SegmentPlan], rates: &TickRates, eval: impl Fn(&[u64], Option<i128>) -> Option<i128>) -> OptimalSet {
    let mut best: Option<i128> = None;
    let mut winners: Vec<&SegmentPlan> = Vec::new();
    let mut count = 0;
    let mut includes_equi = false;
    for plan in plans {
        let Some(v) = eval(plan.sizes(), best) else { continue };
        match best {
            Some(b) if v > b => continue,
            Some(b) if v == b => {}
            _ => {
                best = Some(v);
                winners.clear();
                count = 0;
                includes_equi = false;
            }
        }
        count += 1;
        includes_equi |= plan.is_equi();
        if winners.len() < OPTIMAL_SET_CAP {
            winners.push(plan);
        }
    }
    OptimalSet {
        plans: winners.into_iter().cloned().collect(),
        count,
        includes_equi,
        time: rates.to_time(best.expect("at least one plan")),
    }
}

/// Every composition of `m` that minimizes the one-port greedy time.
pub fn best_overall_greedy(params: &MachineParams, m: u64) -> Result<OptimalSet, SegmentationError> {
    if m > MAX_OVERALL_M {
        return Err(too_large("exhaustive segmentation search", m, MAX_OVERALL_M, format!("2^{}", m - 1)));
    }
    let plans = compositions(m)?;
    let rates = params.ticks();
    Ok(optimal_set(&plans, &rates, |sizes, cut| uni_greedy_ticks(&rates, params.p, sizes, cut)))
}

/// Which schedule the segmentation experiment prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// One-port greedy.
    Greedy,
    /// Pipeline chain with as-soon-as-possible timing.
    Pipeline,
}

/// One grid point of the segmentation experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub p: u64,
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
    pub m: u64,
    pub best_equi: BestPlan,
    pub best_overall: OptimalSet,
    /// 1 when some optimal plan is an equi plan, otherwise
    /// `best_equi.time / best_overall.time`.
    pub ratio: Rational,
}

impl ExperimentRecord {
    pub fn ratio_f64(&self) -> f64 {
        self.ratio.to_f64()
    }

    /// Some optimal plan is an equi plan.
    pub fn equi_optimal(&self) -> bool {
        self.best_overall.includes_equi
    }
}

/// Evaluates one point: best plan of `family` and every optimal
/// composition.
///
/// Whether a point counts as equi-optimal does not depend on `family`: any
/// optimal `(s, ..., s, r)` plan qualifies.
pub fn segmentation_point(params: &MachineParams, m: u64, variant: Variant, family: EquiFamily) -> Result<ExperimentRecord, SegmentationError> {
    if m > MAX_OVERALL_M {
        return Err(too_large("exhaustive segmentation search", m, MAX_OVERALL_M, format!("2^{}", m - 1)));
    }
    let rates = params.ticks();
    let p = params.p;
    let eval = |sizes: &[u64], cut: Option<i128>| match variant {
        Variant::Greedy => uni_greedy_ticks(&rates, p, sizes, cut),
        Variant::Pipeline => Some(pipeline_ticks(&rates, p as usize, sizes)),
    };
    let mut equi = family.plans(m)?;
    equi.reverse();
    let (equi_sizes, equi_ticks) = argmin(equi.iter().map(|p| p.sizes()), eval).expect("m >= 1");
    let best_overall = optimal_set(&compositions(m)?, &rates, eval);
    let overall_ticks = best_overall.time.scaled_to_int(rates.scale).expect("tick multiple");
    let ratio = if overall_ticks == 0 || best_overall.includes_equi {
        Rational::ONE
    } else {
        Rational::new(equi_ticks, overall_ticks)
    };
    Ok(ExperimentRecord {
        p,
        alpha: params.alpha,
        beta: params.beta,
        gamma: params.gamma,
        m,
        best_equi: BestPlan {
            plan: SegmentPlan::new(equi_sizes).expect("equi plan"),
            time: rates.to_time(equi_ticks),
        },
        best_overall,
        ratio,
    })
}

/// Grid of the unequal-segmentation experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnequalGrid {
    pub m: u64,
    pub alphas: Vec<Rational>,
    pub betas: Vec<Rational>,
    pub gammas: Vec<Rational>,
    pub ps: Vec<u64>,
    pub family: EquiFamily,
}

impl UnequalGrid {
    /// `m = 10`; alpha in 0..=10, 20..=100 by 10, 200..=1000 by 100;
    /// beta = 1; gamma in {0, 1}; p = 2^n (n = 2..=10) and 3 * 2^n
    /// (n = 1..=9); best equi plans drawn from `EquiFamily::ByCount`.
    pub fn standard() -> Self {
        let alphas = (0..=10).chain((20..=100).step_by(10)).chain((200..=1000).step_by(100));
        let ps = (2..=10).map(|n| 1u64 << n).chain((1..=9).map(|n| 3u64 << n));
        let mut ps: Vec<u64> = ps.collect();
        ps.sort_unstable();
        UnequalGrid {
            m: 10,
            alphas: alphas.map(Rational::from_int).collect(),
            betas: vec![Rational::ONE],
            gammas: vec![Rational::ZERO, Rational::ONE],
            ps,
            family: EquiFamily::ByCount,
        }
    }

    pub fn points(&self) -> Vec<MachineParams> {
        let mut out = Vec::new();
        for &p in &self.ps {
            for &gamma in &self.gammas {
                for &beta in &self.betas {
                    for &alpha in &self.alphas {
                        out.push(MachineParams { p, alpha, beta, gamma });
                    }
                }
            }
        }
        out
    }
}

/// Runs every grid point in parallel; records come back ordered by
/// `(p, gamma, beta, alpha)`.
pub fn unequal_experiment(grid: &UnequalGrid, variant: Variant) -> Result<Vec<ExperimentRecord>, SegmentationError> {
    for params in grid.points() {
        params.check()?;
    }
    grid.points().par_iter().map(|params| segmentation_point(params, grid.m, variant, grid.family)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnequalSummary {
    pub points: usize,
    /// Points where no optimal plan is an equi plan.
    pub unequal_count: usize,
    pub max_ratio: f64,
    /// Mean of `ratio - 1` over the unequal points (0 if none).
    pub mean_improvement: f64,
    /// Same counts restricted to `alpha > 0`.
    pub points_alpha_positive: usize,
    pub unequal_count_alpha_positive: usize,
}

pub fn summarize(records: &[ExperimentRecord]) -> UnequalSummary {
    let unequal: Vec<&ExperimentRecord> = records.iter().filter(|r| !r.equi_optimal()).collect();
    let improvement: f64 = unequal.iter().map(|r| r.ratio_f64() - 1.0).sum();
    UnequalSummary {
        points: records.len(),
        unequal_count: unequal.len(),
        max_ratio: records.iter().map(|r| r.ratio_f64()).fold(1.0, f64::max),
        mean_improvement: if unequal.is_empty() { 0.0 } else { improvement / unequal.len() as f64 },
        points_alpha_positive: records.iter().filter(|r| !r.alpha.is_zero()).count(),
        unequal_count_alpha_positive: unequal.iter().filter(|r| !r.alpha.is_zero()).count(),
    }
}

/// CSV with one row per record; plans are written as `5 3 2`, optimal sets
/// separated by `|`.
pub fn records_csv(records: &[ExperimentRecord], float: bool) -> String {
    let num = |v: Rational| if float { format!("{}", v.to_f64()) } else { v.to_string() };
    let plan = |p: &SegmentPlan| p.sizes().iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    let mut out = String::from("p,alpha,beta,gamma,m,best_equi_plan,best_equi_time,best_time,optimal_count,optimal_plans,ratio\n");
    for r in records {
        let set: Vec<String> = r.best_overall.plans.iter().map(plan).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:.6}\n",
            r.p,
            num(r.alpha),
            num(r.beta),
            num(r.gamma),
            r.m,
            plan(&r.best_equi.plan),
            num(r.best_equi.time),
            num(r.best_overall.time),
            r.best_overall.count,
            set.join("|"),
            r.ratio_f64()
        ));
    }
    out
}

/// A closed-form algorithm time at its analytic segment size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardTime {
    pub algorithm: &'static str,
    /// Segment size in `[1, m]`, not necessarily an integer.
    pub s: f64,
    pub time: f64,
    /// The formula is only a lower bound here (butterfly, `p` not a power
    /// of two).
    pub lower_bound_only: bool,
}

/// Best standard algorithm against the greedy schedule for one message size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRecord {
    pub p: u64,
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
    pub m: u64,
    pub model: PortModel,
    pub standards: Vec<StandardTime>,
    pub greedy: BestPlan,
    /// Best standard time over greedy time.
    pub ratio: f64,
}

impl RatioRecord {
    pub fn best_standard(&self) -> &StandardTime {
        self.standards
            .iter()
            .min_by(|a, b| a.time.total_cmp(&b.time))
            .expect("binomial is always present")
    }
}

/// Clamped analytic segment size; `None` when the formula does not apply
/// to `p`. Degenerate optima fall back to one segment.
fn analytic_s(opt: Result<crate::cost::SegmentOptimum, CostError>, m: u64) -> Result<Option<f64>, CostError> {
    match opt {
        Ok(o) => Ok(Some(o.s_opt)),
        Err(CostError::Degenerate { fallback_s, .. }) => Ok(Some(fallback_s.min(m) as f64)),
        Err(CostError::Domain { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn standard(algorithm: &'static str, s: f64, time: f64) -> StandardTime {
    StandardTime {
        algorithm,
        s,
        time,
        lower_bound_only: false,
    }
}

/// Closed-form times of the standard algorithms (binomial, pipeline, binary
/// and, with two ports, butterfly).
///
/// Segmented algorithms are priced by their real-valued formulas at the
/// analytic optimum clamped to `[1, m]`; algorithms whose formulas do not
/// apply to `p` are left out.
pub fn standard_times(params: &MachineParams, m: u64, model: PortModel) -> Result<Vec<StandardTime>, SegmentationError> {
    if m == 0 {
        return Err(SegmentationError::EmptyMessage);
    }
    let whole = MessageSpec::whole(m)?;
    let mut standards = Vec::new();
    match model {
        PortModel::Unidirectional => {
            let binomial = uni_time(UniAlgorithm::Binomial, params, &whole)?;
            standards.push(standard(UniAlgorithm::Binomial.name(), m as f64, binomial.to_f64()));
            for alg in [UniAlgorithm::Pipeline, UniAlgorithm::Binary] {
                if let Some(s) = analytic_s(uni_sopt_topt(alg, params, m), m)? {
                    standards.push(standard(alg.name(), s, uni_time_real(alg, params, m, s)));
                }
            }
        }
        PortModel::Bidirectional => {
            let binomial = bi_time(BiAlgorithm::Binomial, params, &whole)?;
            standards.push(standard(BiAlgorithm::Binomial.name(), m as f64, binomial.time.to_f64()));
            for alg in [BiAlgorithm::Pipeline, BiAlgorithm::Binary] {
                if let Some(s) = analytic_s(bi_sopt_topt(alg, params, m), m)? {
                    standards.push(standard(alg.name(), s, bi_time_real(alg, params, m, s)));
                }
            }
            if params.p > 3 {
                let b = bi_time(BiAlgorithm::Butterfly, params, &whole)?;
                standards.push(StandardTime {
                    lower_bound_only: b.lower_bound_only,
                    ..standard(BiAlgorithm::Butterfly.name(), m as f64, b.time.to_f64())
                });
            }
        }
    }
    Ok(standards)
}

/// Ratio of the best standard algorithm (see `standard_times`) to the
/// greedy schedule. One-port greedy is the best equi schedule; in the
/// two-port model greedy is priced by its round formula at its best integer
/// segment size.
pub fn ratio_vs_standards(params: &MachineParams, m: u64, model: PortModel) -> Result<RatioRecord, SegmentationError> {
    let standards = standard_times(params, m, model)?;
    let greedy = match model {
        PortModel::Unidirectional => best_equi_greedy(params, m, EquiSearch::Auto, PortModel::Unidirectional)?,
        PortModel::Bidirectional => {
            let mut sizes = bi_sopt_topt(BiAlgorithm::BiGreedy, params, m).map(|o| o.candidates).unwrap_or_default();
            sizes.extend((0..64).map(|i| 1u64 << i).take_while(|&s| s <= m));
            sizes.push(m);
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            sizes.dedup();
            let mut best: Option<(u64, Time)> = None;
            for s in sizes {
                let t = bi_time(BiAlgorithm::BiGreedy, params, &MessageSpec::new(m, s)?)?.time;
                if best.map_or(true, |b| t < b.1) {
                    best = Some((s, t));
                }
            }
            let (s, time) = best.expect("s = m is a candidate");
            BestPlan {
                plan: SegmentPlan::equi(m, s).expect("1 <= s <= m"),
                time,
            }
        }
    };
    let best = standards.iter().map(|s| s.time).fold(f64::INFINITY, f64::min);
    let ratio = if greedy.time.is_zero() { 1.0 } else { best / greedy.time.to_f64() };
    Ok(RatioRecord {
        p: params.p,
        alpha: params.alpha,
        beta: params.beta,
        gamma: params.gamma,
        m,
        model,
        standards,
        greedy,
        ratio,
    })
}
