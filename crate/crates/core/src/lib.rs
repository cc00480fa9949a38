//! Reduction schedules under the linear alpha-beta-gamma cost model.
//!
//! The crate prices the standard reduction algorithms with closed forms,
//! generates event-level schedules (binomial, pipeline, and the greedy
//! schedulers for one- and two-port machines), checks them for physical
//! feasibility and semantic correctness, and searches over message
//! segmentations.

pub mod algorithms;
pub mod cost;
pub mod greedy_bi;
pub mod greedy_uni;
pub mod rational;
pub mod schedule;
pub mod segmentation;

pub use cost::{CostError, MachineParams, MessageSpec};
pub use rational::{Rational, Time};
pub use schedule::{Event, PortModel, Schedule, ScheduleError, SegmentPlan, ROOT};
