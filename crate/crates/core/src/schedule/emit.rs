//! JSON, CSV and SVG renderings of schedules and simulation results.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::simulate::layout;
use super::{Activity, Interval, PortModel, Schedule, ScheduleError, SegmentPlan, SimulationResult};
use crate::cost::MachineParams;
use crate::rational::{Rational, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = ScheduleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" | "svg-gantt" => Ok(Format::Svg),
            _ => Err(ScheduleError::UnsupportedFormat(s.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsDoc {
    alpha: Rational,
    beta: Rational,
    gamma: Rational,
}

#[derive(Serialize, Deserialize)]
struct EventDoc {
    seg: usize,
    from: usize,
    to: usize,
    start: Rational,
}

#[derive(Serialize, Deserialize)]
struct ScheduleDoc {
    p: u64,
    #[serde(default = "default_model")]
    model: PortModel,
    plan: SegmentPlan,
    params: ParamsDoc,
    events: Vec<EventDoc>,
}

fn default_model() -> PortModel {
    PortModel::Unidirectional
}

fn schedule_json(schedule: &Schedule) -> String {
    let params = schedule.params();
    let doc = ScheduleDoc {
        p: params.p,
        model: schedule.model(),
        plan: schedule.plan().clone(),
        params: ParamsDoc {
            alpha: params.alpha,
            beta: params.beta,
            gamma: params.gamma,
        },
        events: schedule
            .events()
            .iter()
            .map(|e| EventDoc {
                seg: e.segment,
                from: e.sender,
                to: e.receiver,
                start: e.start,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("schedule serializes")
}

/// Reads the JSON layout written by `emit_schedule`. Durations are
/// recomputed from the parameters; event order is kept as written.
pub fn parse_schedule_json(text: &str) -> Result<Schedule, ScheduleError> {
    let doc: ScheduleDoc = serde_json::from_str(text).map_err(|e| ScheduleError::Parse(e.to_string()))?;
    let params = MachineParams::new(doc.p, doc.params.alpha, doc.params.beta, doc.params.gamma)
        .map_err(|e| ScheduleError::Parse(e.to_string()))?;
    Schedule::from_pairs_in_order(
        params,
        doc.plan,
        doc.model,
        doc.events.into_iter().map(|e| (e.seg, e.from, e.to, e.start)),
    )
}

fn schedule_csv(schedule: &Schedule) -> String {
    let mut out = String::from("seg,from,to,start,comm,comp\n");
    for e in schedule.events() {
        let _ = writeln!(out, "{},{},{},{},{},{}", e.segment, e.sender, e.receiver, e.start, e.comm, e.comp);
    }
    out
}

pub fn emit_schedule(schedule: &Schedule, format: Format) -> String {
    match format {
        Format::Json => schedule_json(schedule),
        Format::Csv => schedule_csv(schedule),
        Format::Svg => gantt(&layout(schedule), schedule.model(), schedule.makespan()),
    }
}

pub fn emit_result(result: &SimulationResult, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(result).expect("result serializes"),
        Format::Csv => {
            let mut out = String::from("processor,activity,seg,start,end,event\n");
            for (proc, ivs) in result.proc_timeline.iter().enumerate() {
                for iv in ivs {
                    let activity = match iv.activity {
                        Activity::Send => "send",
                        Activity::Recv => "recv",
                        Activity::Compute => "compute",
                    };
                    let _ = writeln!(out, "{proc},{activity},{},{},{},{}", iv.segment, iv.start, iv.end, iv.event);
                }
            }
            out
        }
        Format::Svg => gantt(&result.proc_timeline, result.model, result.completion),
    }
}

// (light, dark) pairs; the dark shade marks computation.
const PALETTE: [(&str, &str); 10] = [
    ("#8fb8de", "#1f5a8c"),
    ("#f4b183", "#b35806"),
    ("#a9d18e", "#3f7f1f"),
    ("#f08c8c", "#a61c1c"),
    ("#c5a5e0", "#5e2f8c"),
    ("#d9c08c", "#7f6216"),
    ("#f2a6d3", "#a12a72"),
    ("#b0b0b0", "#4d4d4d"),
    ("#e6e68a", "#8c8c14"),
    ("#8fd9d0", "#1f7f74"),
];

const LABEL_W: f64 = 48.0;
const PLOT_W: f64 = 960.0;
const LANE_H: f64 = 22.0;
const AXIS_H: f64 = 24.0;

fn gantt(timeline: &[Vec<Interval>], model: PortModel, end: Time) -> String {
    let p = timeline.len();
    let span = end.to_f64().max(f64::MIN_POSITIVE);
    let scale = PLOT_W / span;
    let width = LABEL_W + PLOT_W + 8.0;
    let height = p as f64 * LANE_H + AXIS_H;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    for (proc, ivs) in timeline.iter().enumerate() {
        let y = proc as f64 * LANE_H;
        let _ = writeln!(out, r#"<g id="lane-{proc}">"#);
        let _ = writeln!(out, r#"<text x="4" y="{:.1}">P{proc}</text>"#, y + LANE_H * 0.7);
        for iv in ivs.iter().filter(|iv| iv.end > iv.start) {
            let (light, dark) = PALETTE[(iv.segment - 1) % PALETTE.len()];
            let (fill, class) = match iv.activity {
                Activity::Send => (light, "send"),
                Activity::Recv => (light, "recv"),
                Activity::Compute => (dark, "compute"),
            };
            // Two-port lanes split: receives on top, sends below.
            let (top, h) = match (model, iv.activity) {
                (PortModel::Bidirectional, Activity::Recv) => (y + 1.0, LANE_H / 2.0 - 1.0),
                (PortModel::Bidirectional, Activity::Send) => (y + LANE_H / 2.0, LANE_H / 2.0 - 1.0),
                _ => (y + 1.0, LANE_H - 2.0),
            };
            let x = LABEL_W + iv.start.to_f64() * scale;
            let w = (iv.end - iv.start).to_f64() * scale;
            let _ = writeln!(
                out,
                r##"<rect class="{class}" data-seg="{}" x="{x:.2}" y="{top:.1}" width="{w:.2}" height="{h:.1}" fill="{fill}" stroke="#333" stroke-width="0.5"><title>{class} seg {} [{}, {})</title></rect>"##,
                iv.segment, iv.segment, iv.start, iv.end
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let axis_y = p as f64 * LANE_H + 4.0;
    let _ = writeln!(out, r#"<g id="axis">"#);
    let _ = writeln!(
        out,
        r#"<line x1="{LABEL_W}" y1="{axis_y}" x2="{:.2}" y2="{axis_y}" stroke="black"/>"#,
        LABEL_W + PLOT_W
    );
    let step = tick_step(span);
    let mut tick = 0.0;
    while tick <= span + 1e-9 {
        let x = LABEL_W + tick * scale;
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            axis_y + 14.0,
            tick
        );
        tick += step;
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

/// A 1-2-5 step giving at most about 20 ticks.
fn tick_step(span: f64) -> f64 {
    let raw = span / 20.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|k| k * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
        .max(1e-12)
}
