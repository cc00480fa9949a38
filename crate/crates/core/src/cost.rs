//! Closed-form cost model for reduction algorithms.
//!
//! A point-to-point message of `s` elements costs `alpha + beta * s`; combining
//! a received segment costs `gamma * s`. Communication and computation never
//! overlap. Polynomial formulas are evaluated exactly; optimal segment sizes
//! involve square roots and are returned as `f64`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::rational::{ceil_log2, common_denominator, Rational, Time};
use crate::schedule::PortModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {algorithm} formula requires {bound} (got p = {p})")]
    Domain {
        algorithm: &'static str,
        bound: &'static str,
        p: u64,
    },
    #[error("degenerate input: {reason}; falling back to s = {fallback_s}, time = {fallback_time}")]
    Degenerate {
        reason: String,
        fallback_s: u64,
        fallback_time: Time,
    },
}

/// Machine description: latency, inverse bandwidth, per-element compute time
/// and processor count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineParams {
    pub p: u64,
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
}

impl MachineParams {
    pub fn new(p: u64, alpha: Rational, beta: Rational, gamma: Rational) -> Result<Self, CostError> {
        let params = MachineParams {
            p,
            alpha,
            beta,
            gamma,
        };
        params.check()?;
        Ok(params)
    }

    /// Convenience constructor for integer rates.
    pub fn from_ints(p: u64, alpha: i64, beta: i64, gamma: i64) -> Result<Self, CostError> {
        Self::new(p, alpha.into(), beta.into(), gamma.into())
    }

    pub fn check(&self) -> Result<(), CostError> {
        if self.p < 2 {
            return Err(CostError::InvalidArgument(format!(
                "processor count must be at least 2, got {}",
                self.p
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if v.is_negative() {
                return Err(CostError::InvalidArgument(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Same rates, different processor count.
    pub fn with_p(&self, p: u64) -> Self {
        MachineParams { p, ..*self }
    }

    /// `alpha + beta * s`.
    pub fn comm(&self, s: u64) -> Time {
        self.alpha + self.beta.times(s)
    }

    /// `gamma * s`.
    pub fn comp(&self, s: u64) -> Time {
        self.gamma.times(s)
    }

    /// One synchronous round of size `s`: send, then combine.
    pub fn round(&self, s: u64) -> Time {
        self.comm(s) + self.comp(s)
    }

    pub fn log2p(&self) -> u64 {
        ceil_log2(self.p) as u64
    }

    /// Integer view of the rates: every duration becomes `ticks / scale`.
    pub fn ticks(&self) -> TickRates {
        let scale = common_denominator(&[self.alpha, self.beta, self.gamma]);
        let int = |v: Rational| v.scaled_to_int(scale).expect("scale clears denominators");
        TickRates {
            scale,
            alpha: int(self.alpha),
            beta: int(self.beta),
            gamma: int(self.gamma),
        }
    }
}

/// Rates multiplied by the common denominator of alpha, beta and gamma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickRates {
    pub scale: i128,
    pub alpha: i128,
    pub beta: i128,
    pub gamma: i128,
}

impl TickRates {
    pub fn comm(&self, s: u64) -> i128 {
        self.alpha + self.beta * s as i128
    }

    pub fn comp(&self, s: u64) -> i128 {
        self.gamma * s as i128
    }

    pub fn to_time(&self, ticks: i128) -> Time {
        Rational::new(ticks, self.scale)
    }
}

/// Message of `m` elements cut into `q = ceil(m / s)` segments of size `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageSpec {
    pub m: u64,
    pub s: u64,
    pub q: u64,
}

impl MessageSpec {
    pub fn new(m: u64, s: u64) -> Result<Self, CostError> {
        if m < 1 {
            return Err(CostError::InvalidArgument("message size must be at least 1".into()));
        }
        if s < 1 || s > m {
            return Err(CostError::InvalidArgument(format!(
                "segment size must lie in [1, {m}], got {s}"
            )));
        }
        Ok(MessageSpec { m, s, q: m.div_ceil(s) })
    }

    /// Unsegmented message.
    pub fn whole(m: u64) -> Result<Self, CostError> {
        Self::new(m, m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerBounds {
    pub latency: Time,
    pub bandwidth: Time,
    pub computation: Time,
}

impl LowerBounds {
    pub fn total(&self) -> Time {
        self.latency + self.bandwidth + self.computation
    }

    /// Largest single component; every algorithm's time is at least this.
    pub fn max_component(&self) -> Time {
        self.latency.max(self.bandwidth).max(self.computation)
    }
}

/// Standard algorithms with closed forms in the one-port model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniAlgorithm {
    Binomial,
    Pipeline,
    Binary,
}

impl UniAlgorithm {
    pub const ALL: [UniAlgorithm; 3] = [UniAlgorithm::Binomial, UniAlgorithm::Pipeline, UniAlgorithm::Binary];

    pub fn name(&self) -> &'static str {
        match self {
            UniAlgorithm::Binomial => "binomial",
            UniAlgorithm::Pipeline => "pipeline",
            UniAlgorithm::Binary => "binary",
        }
    }
}

/// Algorithms with closed forms in the send+receive port model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiAlgorithm {
    Binomial,
    Pipeline,
    Binary,
    BiGreedy,
    Butterfly,
}

impl BiAlgorithm {
    pub const ALL: [BiAlgorithm; 5] = [
        BiAlgorithm::Binomial,
        BiAlgorithm::Pipeline,
        BiAlgorithm::Binary,
        BiAlgorithm::BiGreedy,
        BiAlgorithm::Butterfly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BiAlgorithm::Binomial => "binomial",
            BiAlgorithm::Pipeline => "pipeline",
            BiAlgorithm::Binary => "binary",
            BiAlgorithm::BiGreedy => "bigreedy",
            BiAlgorithm::Butterfly => "butterfly",
        }
    }
}

fn require_p(params: &MachineParams, algorithm: &'static str, min: u64, bound: &'static str) -> Result<(), CostError> {
    params.check()?;
    if params.p < min {
        return Err(CostError::Domain {
            algorithm,
            bound,
            p: params.p,
        });
    }
    Ok(())
}

fn check_size(s: u64) -> Result<(), CostError> {
    if s < 1 {
        Err(CostError::InvalidArgument("segment size must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `alpha + beta * s`.
pub fn comm_time(params: &MachineParams, s: u64) -> Result<Time, CostError> {
    check_size(s)?;
    Ok(params.comm(s))
}

/// `gamma * s`.
pub fn comp_time(params: &MachineParams, s: u64) -> Result<Time, CostError> {
    check_size(s)?;
    Ok(params.comp(s))
}

/// `ceil(log2(p + 1))`, the depth parameter of the binary tree.
fn binary_depth(p: u64) -> u64 {
    ceil_log2(p + 1) as u64
}

/// Closed-form time in the one-port model. When `s` does not divide `m`
/// every segment is priced at `s`, so the value is an upper bound.
pub fn uni_time(algorithm: UniAlgorithm, params: &MachineParams, spec: &MessageSpec) -> Result<Time, CostError> {
    let round = params.round(spec.s);
    let q = spec.q;
    match algorithm {
        UniAlgorithm::Binomial => {
            require_p(params, "binomial", 2, "p >= 2")?;
            Ok(params.round(spec.m).times(params.log2p()))
        }
        UniAlgorithm::Pipeline => {
            require_p(params, "pipeline", 4, "p > 3")?;
            Ok(round.times(params.p - 1) + round.times(2 * (q - 1)))
        }
        UniAlgorithm::Binary => {
            require_p(params, "binary", 4, "p > 3")?;
            let n = binary_depth(params.p);
            Ok(round.times(2 * (n - 1)) + round.times(4 * (q - 1)))
        }
    }
}

/// Result of a closed-form time evaluation in the two-port model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BiTime {
    pub time: Time,
    /// Set for the butterfly formula when `p` is not a power of two; the
    /// value is then only a lower bound.
    pub lower_bound_only: bool,
}

/// Closed-form time in the two-port model.
pub fn bi_time(algorithm: BiAlgorithm, params: &MachineParams, spec: &MessageSpec) -> Result<BiTime, CostError> {
    let round = params.round(spec.s);
    let q = spec.q;
    let exact = |time| Ok(BiTime {
        time,
        lower_bound_only: false,
    });
    match algorithm {
        BiAlgorithm::Binomial => {
            require_p(params, "binomial", 2, "p >= 2")?;
            exact(params.round(spec.m).times(params.log2p()))
        }
        BiAlgorithm::Pipeline => {
            require_p(params, "pipeline", 4, "p > 3")?;
            exact(round.times(params.p + q - 2))
        }
        BiAlgorithm::Binary => {
            require_p(params, "binary", 4, "p > 3")?;
            exact(round.times(2 * (binary_depth(params.p) + q - 1)))
        }
        BiAlgorithm::BiGreedy => {
            require_p(params, "bigreedy", 2, "p >= 2")?;
            exact(round.times(params.log2p() + q - 1))
        }
        BiAlgorithm::Butterfly => {
            require_p(params, "butterfly", 4, "p > 3")?;
            let p = params.p;
            let frac = Rational::new((p - 1) as i128, p as i128);
            let time = params.alpha.times(2 * params.log2p())
                + Rational::from_int(2) * frac * params.beta.times(spec.m)
                + frac * params.gamma.times(spec.m);
            Ok(BiTime {
                time,
                lower_bound_only: !p.is_power_of_two(),
            })
        }
    }
}

/// Optimal equi-segment size for a closed-form algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentOptimum {
    /// Unclamped analytic optimum.
    pub s_opt_raw: f64,
    /// Optimum clamped into `[1, m]`.
    pub s_opt: f64,
    /// Time formula evaluated at the unclamped optimum.
    pub t_opt: f64,
    /// Integer sizes worth evaluating: floor, ceil, 1 and m, clamped.
    pub candidates: Vec<u64>,
}

/// Shape shared by every `s_opt` / `T_opt` row:
/// `s = sqrt(w m alpha / (k c))`, `T = lead * (sqrt(k alpha) + sqrt(w m c))^2`.
struct OptShape {
    k: i64,
    bandwidth_factor: f64,
    lead: f64,
}

fn optimum(shape: OptShape, params: &MachineParams, m: u64, fallback_time: Time, what: &str) -> Result<SegmentOptimum, CostError> {
    let c = (params.beta + params.gamma).to_f64();
    let alpha = params.alpha.to_f64();
    let degenerate = |reason: String| CostError::Degenerate {
        reason,
        fallback_s: m,
        fallback_time,
    };
    if c == 0.0 {
        return Err(degenerate(format!("{what}: beta + gamma = 0, optimum undefined")));
    }
    if shape.k <= 0 {
        return Err(degenerate(format!("{what}: latency coefficient is {}, denominator vanishes", shape.k)));
    }
    let k = shape.k as f64;
    let w = shape.bandwidth_factor;
    let mf = m as f64;
    let s_raw = (w * mf * alpha / (k * c)).sqrt();
    let t_opt = shape.lead * ((k * alpha).sqrt() + (w * mf * c).sqrt()).powi(2);
    let s_clamped = s_raw.clamp(1.0, mf);
    let mut candidates: Vec<u64> = [s_clamped.floor() as u64, s_clamped.ceil() as u64, 1, m]
        .into_iter()
        .map(|s| s.clamp(1, m))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    Ok(SegmentOptimum {
        s_opt_raw: s_raw,
        s_opt: s_clamped,
        t_opt,
        candidates,
    })
}

/// Optimal segment size and time for pipeline / binary in the one-port model.
pub fn uni_sopt_topt(algorithm: UniAlgorithm, params: &MachineParams, m: u64) -> Result<SegmentOptimum, CostError> {
    let whole = MessageSpec::whole(m)?;
    let fallback = uni_time(algorithm, params, &whole)?;
    let p = params.p as i64;
    let shape = match algorithm {
        UniAlgorithm::Binomial => {
            return Err(CostError::InvalidArgument("binomial does not segment the message".into()))
        }
        UniAlgorithm::Pipeline => OptShape {
            k: p - 3,
            bandwidth_factor: 2.0,
            lead: 1.0,
        },
        UniAlgorithm::Binary => OptShape {
            k: binary_depth(params.p) as i64 - 3,
            bandwidth_factor: 2.0,
            lead: 2.0,
        },
    };
    optimum(shape, params, m, fallback, algorithm.name())
}

/// Optimal segment size and time for pipeline / binary / bi-greedy in the
/// two-port model.
pub fn bi_sopt_topt(algorithm: BiAlgorithm, params: &MachineParams, m: u64) -> Result<SegmentOptimum, CostError> {
    let whole = MessageSpec::whole(m)?;
    let fallback = bi_time(algorithm, params, &whole)?.time;
    let p = params.p as i64;
    let shape = match algorithm {
        BiAlgorithm::Binomial | BiAlgorithm::Butterfly => {
            return Err(CostError::InvalidArgument(format!(
                "{} has no segment size to optimize",
                algorithm.name()
            )))
        }
        BiAlgorithm::Pipeline => OptShape {
            k: p - 2,
            bandwidth_factor: 1.0,
            lead: 1.0,
        },
        BiAlgorithm::Binary => OptShape {
            k: binary_depth(params.p) as i64 - 2,
            bandwidth_factor: 1.0,
            lead: 2.0,
        },
        BiAlgorithm::BiGreedy => OptShape {
            k: params.log2p() as i64 - 1,
            bandwidth_factor: 1.0,
            lead: 1.0,
        },
    };
    optimum(shape, params, m, fallback, algorithm.name())
}

/// One-port time formula with a real segment size and `q = m / s`.
pub fn uni_time_real(algorithm: UniAlgorithm, params: &MachineParams, m: u64, s: f64) -> f64 {
    let (a, c) = (params.alpha.to_f64(), (params.beta + params.gamma).to_f64());
    let round = a + c * s;
    let q = m as f64 / s;
    let p = params.p as f64;
    match algorithm {
        UniAlgorithm::Binomial => params.log2p() as f64 * (a + c * m as f64),
        UniAlgorithm::Pipeline => (p - 1.0) * round + 2.0 * (q - 1.0) * round,
        UniAlgorithm::Binary => {
            let n = binary_depth(params.p) as f64;
            2.0 * (n - 1.0) * round + 4.0 * (q - 1.0) * round
        }
    }
}

/// Two-port time formula with a real segment size and `q = m / s`.
pub fn bi_time_real(algorithm: BiAlgorithm, params: &MachineParams, m: u64, s: f64) -> f64 {
    let (a, c) = (params.alpha.to_f64(), (params.beta + params.gamma).to_f64());
    let round = a + c * s;
    let q = m as f64 / s;
    let p = params.p as f64;
    let l = params.log2p() as f64;
    match algorithm {
        BiAlgorithm::Binomial => l * (a + c * m as f64),
        BiAlgorithm::Pipeline => (p + q - 2.0) * round,
        BiAlgorithm::Binary => 2.0 * (binary_depth(params.p) as f64 + q - 1.0) * round,
        BiAlgorithm::BiGreedy => (l + q - 1.0) * round,
        BiAlgorithm::Butterfly => {
            let frac = (p - 1.0) / p;
            let mf = m as f64;
            2.0 * l * a + 2.0 * frac * params.beta.to_f64() * mf + frac * params.gamma.to_f64() * mf
        }
    }
}

/// Per-term lower bounds for any one-port reduction of `m` elements.
pub fn reduce_lower_bounds(params: &MachineParams, m: u64) -> Result<LowerBounds, CostError> {
    reduce_lower_bounds_for(params, m, PortModel::Unidirectional)
}

/// Per-term lower bounds for either port model. The two-port bandwidth
/// bound is `m * beta`.
pub fn reduce_lower_bounds_for(params: &MachineParams, m: u64, model: PortModel) -> Result<LowerBounds, CostError> {
    params.check()?;
    let p = params.p;
    let bandwidth_factor = match model {
        PortModel::Unidirectional if p >= 3 => 2,
        _ => 1,
    };
    Ok(LowerBounds {
        latency: params.alpha.times(params.log2p()),
        bandwidth: params.beta.times(bandwidth_factor * m),
        computation: Rational::new((p - 1) as i128, p as i128) * params.gamma.times(m),
    })
}

/// Per-term lower bounds of a standard one-port algorithm.
pub fn algorithm_lower_bounds(algorithm: UniAlgorithm, params: &MachineParams, m: u64) -> Result<LowerBounds, CostError> {
    require_p(params, algorithm.name(), 3, "p > 2")?;
    let p = params.p;
    let per_term = |factor: u64| LowerBounds {
        latency: params.alpha.times(factor),
        bandwidth: params.beta.times(factor),
        computation: params.gamma.times(factor),
    };
    Ok(match algorithm {
        UniAlgorithm::Binomial => {
            let l = params.log2p();
            LowerBounds {
                latency: params.alpha.times(l),
                bandwidth: params.beta.times(l * m),
                computation: params.gamma.times(l * m),
            }
        }
        UniAlgorithm::Pipeline => {
            let lb = per_term(p + 2 * m - 3);
            LowerBounds {
                latency: params.alpha.times(p - 1),
                ..lb
            }
        }
        UniAlgorithm::Binary => {
            let n = binary_depth(p);
            let lb = per_term(2 * (n + 2 * m - 3));
            LowerBounds {
                latency: params.alpha.times(2 * (n - 1)),
                ..lb
            }
        }
    })
}

/// Sum of the per-term two-port lower bounds:
/// `ceil(log2 p) alpha + m beta + (p-1)/p m gamma`.
pub fn reference_line(params: &MachineParams, m: u64) -> Result<Time, CostError> {
    Ok(reduce_lower_bounds_for(params, m, PortModel::Bidirectional)?.total())
}

/// Outcome of comparing butterfly against optimally segmented bi-greedy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ButterflyComparison {
    pub exists: bool,
    /// Smallest message size in the range where butterfly is strictly faster.
    pub witness_m: Option<u64>,
    /// Open real interval of `m` where butterfly wins, from the quadratic in
    /// `sqrt(m)`; `f64::INFINITY` as the upper end when unbounded.
    pub analytic_interval: Option<(f64, f64)>,
}

/// `butterfly(m) - T_opt_bigreedy(m)` in floating point.
pub fn butterfly_advantage_gap(params: &MachineParams, m: f64) -> f64 {
    let p = params.p as f64;
    let l = params.log2p() as f64;
    let frac = (p - 1.0) / p;
    let (a, b, g) = (params.alpha.to_f64(), params.beta.to_f64(), params.gamma.to_f64());
    let butterfly = 2.0 * l * a + 2.0 * frac * b * m + frac * g * m;
    let t_opt = (((l - 1.0) * a).sqrt() + (m * (b + g)).sqrt()).powi(2);
    butterfly - t_opt
}

/// Coefficients of `A x^2 - B x + C` with `x = sqrt(m)`.
fn gap_quadratic(params: &MachineParams) -> (f64, f64, f64) {
    let p = params.p as f64;
    let l = params.log2p() as f64;
    let frac = (p - 1.0) / p;
    let (a, b, g) = (params.alpha.to_f64(), params.beta.to_f64(), params.gamma.to_f64());
    let quad = (2.0 * frac - 1.0) * b + (frac - 1.0) * g;
    let lin = 2.0 * ((l - 1.0) * a * (b + g)).sqrt();
    let cst = (l + 1.0) * a;
    (quad, lin, cst)
}

fn analytic_interval(params: &MachineParams) -> Option<(f64, f64)> {
    let (qa, qb, qc) = gap_quadratic(params);
    if qa <= 0.0 {
        // Negative leading term: the gap eventually goes negative.
        if qa == 0.0 {
            if qb > 0.0 {
                return Some(((qc / qb).powi(2), f64::INFINITY));
            }
            return None;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        let x_hi = (qb - disc.sqrt()) / (2.0 * qa);
        let start = if x_hi > 0.0 { x_hi * x_hi } else { 0.0 };
        return Some((start, f64::INFINITY));
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let x1 = ((qb - root) / (2.0 * qa)).max(0.0);
    let x2 = (qb + root) / (2.0 * qa);
    if x2 <= 0.0 {
        return None;
    }
    Some((x1 * x1, x2 * x2))
}

const FULL_SCAN_LIMIT: u64 = 1 << 21;

/// Does some message size in `m_range` make butterfly strictly faster than
/// bi-greedy at its optimal segment size?
pub fn butterfly_beats_bigreedy(params: &MachineParams, m_range: RangeInclusive<u64>) -> Result<ButterflyComparison, CostError> {
    require_p(params, "butterfly", 4, "p > 3")?;
    if (params.beta + params.gamma).is_zero() {
        return Err(CostError::InvalidArgument("beta + gamma must be positive".into()));
    }
    let (lo, hi) = (*m_range.start(), *m_range.end());
    if m_range.is_empty() || hi == 0 {
        return Err(CostError::InvalidArgument("message-size range is empty".into()));
    }
    let lo = lo.max(1);
    let interval = analytic_interval(params);
    let wins = |m: u64| butterfly_advantage_gap(params, m as f64) < 0.0;

    let witness_m = if hi - lo < FULL_SCAN_LIMIT {
        (lo..=hi).find(|&m| wins(m))
    } else {
        interval.and_then(|(a, b)| {
            // Probe integers around the analytic window to absorb rounding.
            let start = (a.floor().max(lo as f64) as u64).saturating_sub(2).max(lo);
            let end = if b.is_finite() { (b.ceil() as u64).saturating_add(2).min(hi) } else { hi };
            if start > end {
                return None;
            }
            let probe_end = end.min(start.saturating_add(FULL_SCAN_LIMIT));
            (start..=probe_end).find(|&m| wins(m))
        })
    };
    Ok(ButterflyComparison {
        exists: witness_m.is_some(),
        witness_m,
        analytic_interval: interval,
    })
}

/// Critical `beta / gamma` below which butterfly beats optimally segmented
/// bi-greedy for some message size. Derived from the discriminant of the
/// gap viewed as a quadratic in `sqrt(m)`; alpha cancels.
pub fn butterfly_threshold_ratio(p: u64) -> Result<f64, CostError> {
    if p < 4 {
        return Err(CostError::Domain {
            algorithm: "butterfly",
            bound: "p > 3",
            p,
        });
    }
    let l = ceil_log2(p) as f64;
    let pf = p as f64;
    let frac = (pf - 1.0) / pf;
    let numer = (l - 1.0) + (l + 1.0) / pf;
    let denom = (l + 1.0) * (2.0 * frac - 1.0) - (l - 1.0);
    if denom <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(numer / denom)
}

/// The same threshold found by bisection on `beta / gamma`, deciding each
/// probe by numerically minimizing the gap over `m` (golden section in
/// `ln m`). Independent of the discriminant algebra.
pub fn butterfly_threshold_ratio_numeric(p: u64, alpha: f64) -> Result<f64, CostError> {
    if p < 4 {
        return Err(CostError::Domain {
            algorithm: "butterfly",
            bound: "p > 3",
            p,
        });
    }
    if alpha <= 0.0 {
        return Err(CostError::InvalidArgument("alpha must be positive for the numeric threshold".into()));
    }
    let min_gap = |ratio: f64| -> f64 {
        let l = ceil_log2(p) as f64;
        let pf = p as f64;
        let frac = (pf - 1.0) / pf;
        let gap = |ln_m: f64| {
            let m = ln_m.exp();
            let butterfly = 2.0 * l * alpha + 2.0 * frac * ratio * m + frac * m;
            let t_opt = (((l - 1.0) * alpha).sqrt() + (m * (ratio + 1.0)).sqrt()).powi(2);
            (butterfly - t_opt) / alpha
        };
        golden_min(gap, -20.0, 120.0)
    };
    let beats = |ratio: f64| min_gap(ratio) < 0.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while beats(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beats(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u64, a: i64, b: i64, g: i64) -> MachineParams {
        MachineParams::from_ints(p, a, b, g).unwrap()
    }

    fn t(n: i128) -> Time {
        Rational::from_int(n)
    }

    #[test]
    fn point_to_point_costs() {
        assert_eq!(comm_time(&params(2, 10, 1, 0), 5).unwrap(), t(15));
        assert_eq!(comm_time(&params(2, 0, 0, 0), 7).unwrap(), t(0));
        assert_eq!(comm_time(&params(2, 2, 3, 0), 4).unwrap(), t(14));
        assert_eq!(comp_time(&params(2, 0, 0, 1), 10).unwrap(), t(10));
        assert_eq!(comp_time(&params(2, 0, 0, 0), 10).unwrap(), t(0));
        assert_eq!(comp_time(&params(2, 0, 0, 2), 3).unwrap(), t(6));
        assert!(matches!(comm_time(&params(2, 1, 1, 1), 0), Err(CostError::InvalidArgument(_))));
        assert!(matches!(comp_time(&params(2, 1, 1, 1), 0), Err(CostError::InvalidArgument(_))));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(MachineParams::from_ints(1, 1, 1, 1).is_err());
        assert!(MachineParams::from_ints(4, -1, 1, 1).is_err());
        assert!(MessageSpec::new(4, 5).is_err());
        assert!(MessageSpec::new(0, 1).is_err());
        let spec = MessageSpec::new(10, 3).unwrap();
        assert_eq!(spec.q, 4);
        assert!(spec.s * (spec.q - 1) < spec.m && spec.m <= spec.s * spec.q);
    }

    #[test]
    fn uni_closed_forms() {
        let binomial = uni_time(UniAlgorithm::Binomial, &params(64, 10, 1, 0), &MessageSpec::whole(100).unwrap());
        assert_eq!(binomial.unwrap(), t(660));
        let pipeline = uni_time(UniAlgorithm::Pipeline, &params(4, 1, 1, 0), &MessageSpec::new(8, 8).unwrap());
        assert_eq!(pipeline.unwrap(), t(27));
        // N = ceil(log2 8) = 3: 2(3-1)(1+2+2) + 4(2-1)(1+2+2) = 20 + 20
        let binary = uni_time(UniAlgorithm::Binary, &params(7, 1, 1, 1), &MessageSpec::new(4, 2).unwrap());
        assert_eq!(binary.unwrap(), t(40));
    }

    #[test]
    fn uni_domain_guards() {
        let spec = MessageSpec::new(8, 2).unwrap();
        for alg in [UniAlgorithm::Pipeline, UniAlgorithm::Binary] {
            match uni_time(alg, &params(3, 1, 1, 1), &spec) {
                Err(CostError::Domain { bound, .. }) => assert_eq!(bound, "p > 3"),
                other => panic!("expected domain error, got {other:?}"),
            }
        }
        assert!(uni_time(UniAlgorithm::Binomial, &params(2, 1, 1, 1), &spec).is_ok());
    }

    #[test]
    fn uni_optimum_pipeline() {
        let opt = uni_sopt_topt(UniAlgorithm::Pipeline, &params(64, 10, 1, 0), 16384).unwrap();
        // s = sqrt(2*16384*10/61), T = (sqrt(610) + sqrt(32768))^2
        let s_expected = (2.0f64 * 16384.0 * 10.0 / 61.0).sqrt();
        let t_expected = (610f64.sqrt() + 32768f64.sqrt()).powi(2);
        assert!((opt.s_opt_raw - s_expected).abs() < 1e-9);
        assert!((opt.s_opt_raw - 73.30).abs() < 0.01);
        assert!((opt.t_opt - t_expected).abs() < 1e-6);
        assert!((opt.t_opt - 42_319.7).abs() < 0.1, "{}", opt.t_opt);
        let at_opt = uni_time_real(UniAlgorithm::Pipeline, &params(64, 10, 1, 0), 16384, opt.s_opt_raw);
        assert!((at_opt - opt.t_opt).abs() < 1e-9 * opt.t_opt);
        assert!(opt.candidates.contains(&73) && opt.candidates.contains(&74));
    }

    #[test]
    fn uni_optimum_zero_latency_clamps() {
        let opt = uni_sopt_topt(UniAlgorithm::Pipeline, &params(10, 0, 1, 1), 50).unwrap();
        assert_eq!(opt.s_opt_raw, 0.0);
        assert_eq!(opt.s_opt, 1.0);
        assert!((opt.t_opt - 2.0 * 50.0 * 2.0).abs() < 1e-9);
        assert_eq!(opt.candidates, vec![1, 50]);
    }

    #[test]
    fn uni_optimum_degenerate() {
        match uni_sopt_topt(UniAlgorithm::Binary, &params(7, 10, 1, 1), 100) {
            Err(CostError::Degenerate { fallback_s, .. }) => assert_eq!(fallback_s, 100),
            other => panic!("expected degenerate, got {other:?}"),
        }
        match uni_sopt_topt(UniAlgorithm::Pipeline, &params(8, 10, 0, 0), 100) {
            Err(CostError::Degenerate { fallback_s, fallback_time, .. }) => {
                assert_eq!(fallback_s, 100);
                // Latency only: (p-1) alpha
                assert_eq!(fallback_time, t(70));
            }
            other => panic!("expected degenerate, got {other:?}"),
        }
    }

    #[test]
    fn bi_closed_forms() {
        // p=16, q=5, alpha + beta s = 2, gamma s = 1
        let p16 = params(16, 1, 1, 1);
        let bg = bi_time(BiAlgorithm::BiGreedy, &p16, &MessageSpec::new(5, 1).unwrap()).unwrap();
        assert_eq!(bg.time, t(24));
        let bf = bi_time(BiAlgorithm::Butterfly, &params(4, 1, 1, 0), &MessageSpec::whole(8).unwrap()).unwrap();
        assert_eq!(bf.time, t(16));
        assert!(!bf.lower_bound_only);
        let bf6 = bi_time(BiAlgorithm::Butterfly, &params(6, 1, 1, 0), &MessageSpec::whole(8).unwrap()).unwrap();
        assert!(bf6.lower_bound_only);
        let pl = bi_time(BiAlgorithm::Pipeline, &params(8, 1, 1, 1), &MessageSpec::new(6, 3).unwrap()).unwrap();
        assert_eq!(pl.time, t(56));
    }

    #[test]
    fn bi_optima() {
        let opt = bi_sopt_topt(BiAlgorithm::BiGreedy, &params(64, 50000, 6, 1), 1_000_000).unwrap();
        let expected = (250000f64.sqrt() + 7e6f64.sqrt()).powi(2);
        assert!((opt.t_opt - expected).abs() < 1e-6);
        assert!((opt.t_opt - 9.896e6).abs() < 1e3);
        assert!(matches!(
            bi_sopt_topt(BiAlgorithm::BiGreedy, &params(2, 1, 1, 1), 10),
            Err(CostError::Degenerate { .. })
        ));
        let pl = bi_sopt_topt(BiAlgorithm::Pipeline, &params(10, 4, 1, 0), 100).unwrap();
        assert!((pl.s_opt_raw - 50f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lower_bounds() {
        let lb = reduce_lower_bounds(&params(3, 0, 1, 0), 5).unwrap();
        assert_eq!(lb.bandwidth, t(10));
        let lb = reduce_lower_bounds(&params(2, 0, 1, 0), 5).unwrap();
        assert_eq!(lb.bandwidth, t(5));
        let lb = reduce_lower_bounds(&params(8, 0, 0, 1), 8).unwrap();
        assert_eq!(lb.computation, t(7));

        let pl = algorithm_lower_bounds(UniAlgorithm::Pipeline, &params(10, 1, 1, 0), 4).unwrap();
        // (p + 2m - 3) beta = 10 + 8 - 3
        assert_eq!((pl.latency, pl.bandwidth), (t(9), t(15)));
        let bin = algorithm_lower_bounds(UniAlgorithm::Binary, &params(7, 1, 1, 0), 1).unwrap();
        assert_eq!((bin.latency, bin.bandwidth), (t(4), t(4)));
        let bn = algorithm_lower_bounds(UniAlgorithm::Binomial, &params(4, 1, 1, 1), 3).unwrap();
        assert_eq!((bn.latency, bn.bandwidth, bn.computation), (t(2), t(6), t(6)));
        assert!(matches!(
            algorithm_lower_bounds(UniAlgorithm::Pipeline, &params(2, 1, 1, 1), 3),
            Err(CostError::Domain { .. })
        ));
    }

    #[test]
    fn reference_line_values() {
        let v = reference_line(&params(64, 50000, 6, 1), 1000).unwrap();
        assert_eq!(v, Rational::new(306_984_375, 1000));
        assert_eq!(reference_line(&params(2, 1, 1, 1), 1).unwrap(), Rational::new(5, 2));
        assert_eq!(reference_line(&params(16, 0, 3, 0), 7).unwrap(), t(21));
    }

    #[test]
    fn butterfly_threshold_values() {
        let t1000 = butterfly_threshold_ratio(1000).unwrap();
        assert!((t1000 - 4.556).abs() < 1e-3, "{t1000}");
        let t64 = butterfly_threshold_ratio(64).unwrap();
        assert!((t64 - 2.868).abs() < 1e-3, "{t64}");
        assert!(butterfly_threshold_ratio(3).is_err());
    }

    #[test]
    fn butterfly_comparisons() {
        let none = butterfly_beats_bigreedy(&params(64, 50000, 6, 1), 1..=100_000_000).unwrap();
        assert!(!none.exists);
        let some = butterfly_beats_bigreedy(&params(1000, 1000, 4, 1), 1..=100_000_000).unwrap();
        assert!(some.exists);
        let m = some.witness_m.unwrap();
        assert!(butterfly_advantage_gap(&params(1000, 1000, 4, 1), m as f64) < 0.0);
        assert!(butterfly_advantage_gap(&params(1000, 1000, 4, 1), (m - 1) as f64) >= 0.0);
        let none6 = butterfly_beats_bigreedy(&params(1000, 1000, 6, 1), 1..=100_000_000).unwrap();
        assert!(!none6.exists);
        assert!(butterfly_beats_bigreedy(&params(64, 1, 1, 1), 5..=4).is_err());
    }
}
