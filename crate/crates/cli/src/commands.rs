use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use reduce_sched::algorithms::{schedule_binomial, schedule_pipeline};
use reduce_sched::cost::{
    bi_sopt_topt, bi_time, butterfly_beats_bigreedy, butterfly_threshold_ratio, reduce_lower_bounds_for, uni_sopt_topt, uni_time,
    BiAlgorithm, CostError, UniAlgorithm,
};
use reduce_sched::greedy_bi::{bi_greedy_schedule, check_round_conjecture, ConjectureCase};
use reduce_sched::greedy_uni::{brute_force_min_time, uni_greedy_schedule, uni_greedy_time, OracleLimits, ORACLE_MAX_P, ORACLE_MAX_Q};
use reduce_sched::schedule::{check_correctness, emit_schedule, simulate, validate_uni, Format};
use reduce_sched::segmentation::{
    best_equi_greedy, records_csv, standard_times, summarize, unequal_experiment, EquiFamily, EquiSearch, UnequalGrid, Variant,
};
use reduce_sched::{MachineParams, MessageSpec, PortModel, Rational, Schedule, SegmentPlan, Time};
use serde_json::json;

use crate::args::*;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Time(a) => time(a),
        Command::Schedule(a) => schedule(a),
        Command::Sweep(a) => sweep(a),
        Command::Regionmap(a) => regionmap(a),
        Command::Unequal(a) => unequal(a),
        Command::Verify(a) => verify(a),
    }
}

fn machine(m: &MachineArgs) -> Result<MachineParams> {
    let need = |v: Option<Rational>, name: &str| v.ok_or_else(|| CliError::Input(format!("missing --{name}")));
    let p = m.p.ok_or_else(|| CliError::Input("missing -p".into()))?;
    MachineParams::new(p, need(m.alpha, "alpha")?, need(m.beta, "beta")?, need(m.gamma, "gamma")?).map_err(CliError::input)
}

fn num(v: Rational, float: bool) -> String {
    if float {
        v.to_f64().to_string()
    } else {
        v.to_string()
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn domain_note(e: &CostError) -> String {
    match e {
        CostError::Domain { bound, .. } => format!("n/a ({bound})"),
        other => format!("n/a ({other})"),
    }
}

fn time(a: TimeArgs) -> Result<()> {
    let params = machine(&a.machine)?;
    let spec = MessageSpec::new(a.m, a.s.unwrap_or(a.m)).map_err(CliError::input)?;
    let float = a.output.float;
    let model: PortModel = a.model.into();
    let names: Vec<&str> = match model {
        PortModel::Unidirectional => UniAlgorithm::ALL.iter().map(|x| x.name()).chain(["greedy"]).collect(),
        PortModel::Bidirectional => BiAlgorithm::ALL.iter().map(|x| x.name()).collect(),
    };
    if let Some(only) = &a.algorithm {
        if !names.contains(&only.as_str()) {
            return Err(CliError::Input(format!("unknown algorithm {only:?} for --model {}; expected one of {names:?}", model)));
        }
    }
    let mut rows = Vec::new();
    for &name in names.iter().filter(|n| a.algorithm.as_deref().map_or(true, |o| o == **n)) {
        let row: std::result::Result<(Time, Option<(f64, f64)>, bool), CostError> = match model {
            PortModel::Unidirectional if name == "greedy" => {
                let plan = SegmentPlan::equi(spec.m, spec.s).expect("checked spec");
                Ok((uni_greedy_time(&params, &plan), None, false))
            }
            PortModel::Unidirectional => {
                let alg = UniAlgorithm::ALL.into_iter().find(|x| x.name() == name).expect("listed");
                uni_time(alg, &params, &spec).map(|t| {
                    let opt = uni_sopt_topt(alg, &params, spec.m).ok().filter(|_| alg != UniAlgorithm::Binomial);
                    (t, opt.map(|o| (o.s_opt, o.t_opt)), false)
                })
            }
            PortModel::Bidirectional => {
                let alg = BiAlgorithm::ALL.into_iter().find(|x| x.name() == name).expect("listed");
                let whole = matches!(alg, BiAlgorithm::Binomial | BiAlgorithm::Butterfly);
                let spec = if whole { MessageSpec::whole(spec.m).expect("m >= 1") } else { spec };
                bi_time(alg, &params, &spec).map(|t| {
                    let opt = bi_sopt_topt(alg, &params, spec.m).ok().filter(|_| !whole);
                    (t.time, opt.map(|o| (o.s_opt, o.t_opt)), t.lower_bound_only)
                })
            }
        };
        match row {
            Ok((t, opt, lb)) => rows.push(json!({
                "algorithm": name,
                "time": num(t, float),
                "s_opt": opt.map(|o| o.0),
                "t_opt": opt.map(|o| o.1),
                "lower_bound_only": lb,
            })),
            Err(e) if a.algorithm.is_some() => return Err(CliError::Input(format!("{name}: {e}"))),
            Err(e) => rows.push(json!({ "algorithm": name, "time": domain_note(&e), "s_opt": null, "t_opt": null, "lower_bound_only": false })),
        }
    }
    let lb = reduce_lower_bounds_for(&params, spec.m, model).map_err(CliError::input)?;
    let bounds = json!({
        "latency": num(lb.latency, float),
        "bandwidth": num(lb.bandwidth, float),
        "computation": num(lb.computation, float),
    });
    let cell = |v: &serde_json::Value| match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    };
    let text = match a.format {
        OutFormat::Json => {
            let doc = json!({ "p": params.p, "m": spec.m, "s": spec.s, "model": model.to_string(), "algorithms": rows, "lower_bounds": bounds });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        OutFormat::Csv => {
            let mut out = String::from("algorithm,time,s_opt,t_opt,lower_bound_only\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    cell(&r["algorithm"]),
                    cell(&r["time"]),
                    cell(&r["s_opt"]),
                    cell(&r["t_opt"]),
                    r["lower_bound_only"]
                );
            }
            out
        }
        OutFormat::Table => {
            let mut out = format!("p = {}, m = {}, s = {}, {} model\n", params.p, spec.m, spec.s, model);
            let _ = writeln!(out, "{:<10} {:>16} {:>12} {:>14}", "algorithm", "time", "s_opt", "T_opt");
            for r in &rows {
                let f = |v: &serde_json::Value| v.as_f64().map(|x| format!("{x:.3}")).unwrap_or_default();
                let mark = if r["lower_bound_only"] == true { " (lower bound)" } else { "" };
                let _ = writeln!(
                    out,
                    "{:<10} {:>16} {:>12} {:>14}{mark}",
                    cell(&r["algorithm"]),
                    cell(&r["time"]),
                    f(&r["s_opt"]),
                    f(&r["t_opt"])
                );
            }
            let _ = writeln!(
                out,
                "lower bounds: latency {}, bandwidth {}, computation {}",
                cell(&bounds["latency"]),
                cell(&bounds["bandwidth"]),
                cell(&bounds["computation"])
            );
            out
        }
        OutFormat::Svg => return Err(CliError::Input("time has no SVG output".into())),
    };
    write_out(a.output.out.as_deref(), &text)
}

fn parse_plan(text: &str) -> Result<SegmentPlan> {
    let sizes: std::result::Result<Vec<u64>, _> = text.split(',').map(|x| x.trim().parse::<u64>()).collect();
    let sizes = sizes.map_err(|e| CliError::Input(format!("bad --plan {text:?}: {e}")))?;
    SegmentPlan::new(sizes).map_err(CliError::input)
}

fn schedule(a: ScheduleArgs) -> Result<()> {
    let params = machine(&a.machine)?;
    let plan = match (&a.plan, a.m) {
        (Some(text), _) => parse_plan(text)?,
        (None, Some(m)) => SegmentPlan::equi(m, a.s.unwrap_or(m)).map_err(CliError::input)?,
        (None, None) => return Err(CliError::Input("give --plan or -m".into())),
    };
    let sched: Schedule = match a.algorithm {
        ScheduleAlgorithm::Binomial => schedule_binomial(&params, plan.m()),
        ScheduleAlgorithm::Pipeline => schedule_pipeline(&params, &plan),
        ScheduleAlgorithm::UniGreedy => uni_greedy_schedule(&params, &plan),
        ScheduleAlgorithm::BiGreedy => bi_greedy_schedule(&params, &plan).map_err(CliError::input)?,
    };
    let result = simulate(&sched).map_err(|e| CliError::Verification(e.to_string()))?;
    check_correctness(&sched).map_err(|e| CliError::Verification(e.to_string()))?;
    if sched.model() == PortModel::Unidirectional {
        validate_uni(&sched).map_err(|e| CliError::Verification(e.to_string()))?;
    }
    let stem = a.out.unwrap_or_else(|| {
        PathBuf::from(match a.algorithm {
            ScheduleAlgorithm::Binomial => "binomial",
            ScheduleAlgorithm::Pipeline => "pipeline",
            ScheduleAlgorithm::UniGreedy => "uni-greedy",
            ScheduleAlgorithm::BiGreedy => "bi-greedy",
        })
    });
    let formats: Vec<(Format, &str)> = match a.format {
        None => vec![(Format::Json, "json"), (Format::Svg, "svg")],
        Some(OutFormat::Json) => vec![(Format::Json, "json")],
        Some(OutFormat::Csv) => vec![(Format::Csv, "csv")],
        Some(OutFormat::Svg) => vec![(Format::Svg, "svg")],
        Some(OutFormat::Table) => return Err(CliError::Input("schedule writes json, csv or svg".into())),
    };
    println!("completion {}", result.completion);
    println!("events {}", sched.events().len());
    for (format, ext) in formats {
        let mut path = stem.clone().into_os_string();
        path.push(format!(".{ext}"));
        let path = PathBuf::from(path);
        write_out(Some(&path), &emit_schedule(&sched, format))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Integer sizes `round(2^(k / per_octave))` in `[lo, hi]`, deduplicated.
fn log_grid(lo: u64, hi: u64, per_octave: u32) -> Vec<u64> {
    let mut out: Vec<u64> = (0..)
        .map(|k| 2f64.powf(k as f64 / per_octave.max(1) as f64).round() as u64)
        .take_while(|&m| m <= hi)
        .filter(|&m| m >= lo)
        .collect();
    out.dedup();
    out
}

fn sweep(a: SweepArgs) -> Result<()> {
    let params = machine(&a.machine)?;
    let model: PortModel = a.model.into();
    if a.m_min == 0 || a.m_min > a.m_max {
        return Err(CliError::Input("need 1 <= --m-min <= --m-max".into()));
    }
    let search = match a.search {
        SearchArg::Exhaustive => EquiSearch::Exhaustive,
        SearchArg::Pow2 => EquiSearch::Pow2,
        SearchArg::Auto => EquiSearch::Auto,
    };
    let sizes = log_grid(a.m_min, a.m_max, a.per_octave);
    let rows: Vec<_> = sizes
        .par_iter()
        .map(|&m| {
            let mut record = reduce_sched::segmentation::ratio_vs_standards(&params, m, model)?;
            if model == PortModel::Unidirectional && search != EquiSearch::Auto {
                record.greedy = best_equi_greedy(&params, m, search, model)?;
                let best = record.best_standard().time;
                record.ratio = best / record.greedy.time.to_f64();
            }
            Ok(record)
        })
        .collect::<std::result::Result<_, reduce_sched::segmentation::SegmentationError>>()
        .map_err(CliError::input)?;
    let names: Vec<&str> = rows[0].standards.iter().map(|s| s.algorithm).collect();
    let mut out = format!("m,{},greedy,greedy_s,best_standard,ratio\n", names.join(","));
    for r in &rows {
        let times: Vec<String> = names
            .iter()
            .map(|n| r.standards.iter().find(|s| s.algorithm == *n).map(|s| format!("{:.6}", s.time)).unwrap_or_default())
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6}",
            r.m,
            times.join(","),
            num(r.greedy.time, a.output.float),
            r.greedy.plan.sizes()[0],
            r.best_standard().algorithm,
            r.ratio
        );
    }
    if let Some(peak) = rows.iter().max_by(|x, y| x.ratio.total_cmp(&y.ratio)) {
        eprintln!("peak ratio {:.4} at m = {}", peak.ratio, peak.m);
    }
    write_out(a.output.out.as_deref(), &out)
}

fn p_list(a: &RegionArgs) -> Result<Vec<u64>> {
    if let Some(p) = a.machine.p {
        return Ok(vec![p]);
    }
    match &a.p_list {
        Some(text) => text
            .split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|e| CliError::Input(format!("bad --p-list entry {x:?}: {e}"))))
            .collect(),
        None => Ok((2..=10).map(|k| 1u64 << k).collect()),
    }
}

fn regionmap(a: RegionArgs) -> Result<()> {
    let ps = p_list(&a)?;
    if let Some(&p) = ps.iter().find(|&&p| p < 4) {
        return Err(CliError::Input(format!("region maps need p > 3, got {p}")));
    }
    let alpha = a.machine.alpha.unwrap_or(Rational::ONE);
    let text = match a.mode {
        RegionMode::StandardsUni => {
            let beta = a.machine.beta.unwrap_or(Rational::ONE);
            let gamma = a.machine.gamma.unwrap_or(Rational::ZERO);
            let sizes = log_grid(1, a.m_max, 1);
            let cells: Vec<(u64, u64)> = ps.iter().flat_map(|&p| sizes.iter().map(move |&m| (p, m))).collect();
            let rows: Vec<String> = cells
                .par_iter()
                .map(|&(p, m)| {
                    let params = MachineParams::new(p, alpha, beta, gamma)?;
                    let st = standard_times(&params, m, PortModel::Unidirectional)?;
                    let best = st.iter().min_by(|x, y| x.time.total_cmp(&y.time)).expect("binomial");
                    let t = |n: &str| st.iter().find(|s| s.algorithm == n).map(|s| format!("{:.3}", s.time)).unwrap_or_default();
                    Ok(format!("{p},{m},{},{},{},{}", best.algorithm, t("binomial"), t("pipeline"), t("binary")))
                })
                .collect::<std::result::Result<_, reduce_sched::segmentation::SegmentationError>>()
                .map_err(CliError::input)?;
            format!("p,m,best,binomial,pipeline,binary\n{}\n", rows.join("\n"))
        }
        RegionMode::ButterflyBi => {
            if a.ratio_step <= Rational::ZERO {
                return Err(CliError::Input("--ratio-step must be positive".into()));
            }
            let mut ratios = Vec::new();
            let mut r = a.ratio_step;
            while r <= a.ratio_max {
                ratios.push(r);
                r += a.ratio_step;
            }
            let cells: Vec<(u64, Rational)> = ps.iter().flat_map(|&p| ratios.iter().map(move |&r| (p, r))).collect();
            let rows: Vec<String> = cells
                .par_iter()
                .map(|&(p, ratio)| {
                    let params = MachineParams::new(p, alpha, ratio, Rational::ONE)?;
                    let c = butterfly_beats_bigreedy(&params, 1..=a.m_max)?;
                    let threshold = butterfly_threshold_ratio(p)?;
                    Ok(format!(
                        "{p},{},{},{},{threshold:.6}",
                        num(ratio, a.output.float),
                        c.exists,
                        c.witness_m.map(|m| m.to_string()).unwrap_or_default()
                    ))
                })
                .collect::<std::result::Result<_, CostError>>()
                .map_err(CliError::input)?;
            format!("p,beta_over_gamma,exists,witness_m,threshold\n{}\n", rows.join("\n"))
        }
    };
    write_out(a.output.out.as_deref(), &text)
}

fn unequal(a: UnequalArgs) -> Result<()> {
    let mut grid = UnequalGrid::standard();
    grid.family = match a.family {
        FamilyArg::ByCount => EquiFamily::ByCount,
        FamilyArg::BySize => EquiFamily::BySize,
    };
    if let Some(p) = a.p {
        grid.ps = vec![p];
    }
    let variant = match a.variant {
        VariantArg::Greedy => Variant::Greedy,
        VariantArg::Pipeline => Variant::Pipeline,
    };
    let records = unequal_experiment(&grid, variant).map_err(CliError::input)?;
    if let Some(path) = &a.out {
        write_out(Some(path), &records_csv(&records, a.float))?;
    }
    let summary = summarize(&records);
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    if a.oracle_max_p > ORACLE_MAX_P || a.oracle_max_q > ORACLE_MAX_Q {
        return Err(CliError::Input(format!(
            "exhaustive search is limited to p <= {ORACLE_MAX_P} and q <= {ORACLE_MAX_Q}"
        )));
    }
    let mut plans: Vec<Vec<u64>> = vec![vec![]];
    let mut all_plans = Vec::new();
    for _ in 0..a.oracle_max_q {
        plans = plans
            .iter()
            .flat_map(|prefix| (1..=3).map(move |s| [prefix.as_slice(), &[s]].concat()))
            .collect();
        all_plans.extend(plans.iter().cloned());
    }
    let mut cases = Vec::new();
    for p in 2..=a.oracle_max_p {
        for (al, be, ga) in (0..27).map(|i| (i / 9, i / 3 % 3, i % 3)) {
            if al + be > 0 {
                for sizes in &all_plans {
                    cases.push((p, al, be, ga, sizes.clone()));
                }
            }
        }
    }
    let failures: Vec<serde_json::Value> = cases
        .par_iter()
        .filter_map(|(p, al, be, ga, sizes)| {
            let params = MachineParams::from_ints(*p, *al, *be, *ga).expect("valid");
            let plan = SegmentPlan::new(sizes.clone()).expect("valid");
            let greedy = uni_greedy_time(&params, &plan);
            let sched = uni_greedy_schedule(&params, &plan);
            let problem = match brute_force_min_time(&params, &plan, OracleLimits::default()) {
                Err(e) => Some(e.to_string()),
                Ok(best) if best != greedy => Some(format!("greedy {greedy}, exhaustive {best}")),
                Ok(_) => match simulate(&sched) {
                    Err(e) => Some(e.to_string()),
                    Ok(r) if r.completion != greedy => Some(format!("schedule completes at {}", r.completion)),
                    Ok(_) => check_correctness(&sched)
                        .err()
                        .map(|e| e.to_string())
                        .or_else(|| validate_uni(&sched).err().map(|e| e.to_string())),
                },
            };
            problem.map(|why| json!({ "check": "uni-greedy", "p": p, "alpha": al, "beta": be, "gamma": ga, "plan": sizes, "problem": why }))
        })
        .collect();
    println!("uni-greedy against exhaustive search: {} instances, {} failures", cases.len(), failures.len());
    let report = check_round_conjecture(2..=a.bi_max_p, 1..=a.bi_max_q, &[(1, 0), (2, 1), (3, 1), (5, 2)]);
    println!(
        "bi-greedy round count: {} instances, {} with out-of-order receives, {} counterexamples",
        report.checked,
        report.reordered,
        report.counterexamples.len()
    );
    let bi_failures = report.counterexamples.iter().map(|c: &ConjectureCase| {
        json!({ "check": "bi-greedy", "p": c.p, "q": c.q, "comm": c.comm, "comp": c.comp,
                "expected": c.expected.to_string(), "actual": c.actual.map(|v| v.to_string()), "problem": c.problem })
    });
    let all: Vec<serde_json::Value> = failures.into_iter().chain(bi_failures).collect();
    if all.is_empty() {
        return Ok(());
    }
    write_out(a.out.as_deref(), &(serde_json::to_string_pretty(&all).expect("json") + "\n"))?;
    Err(CliError::Verification(format!("{} counterexamples", all.len())))
}
