//! Subcommand implementations and the flag-to-config plumbing.
//!
//! Validation happens before any data is read or generated: moment orders
//! below 2 need an explicit moment bound, the randomized subcommands need an
//! explicit seed, and malformed schedule or split grammars are rejected at
//! construction. The stream loop is strictly sequential; the experiment
//! subcommands parallelize replications inside the simulation harness.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use heavycs::sn::SnEstimator;
use heavycs::stitch::StitchPlan;
use heavycs::{
    ConfidenceSet, CsConfig, CsError, CsRunner, LambdaSchedule, Method, MethodOptions, Observation,
};
use heavycs_sim::{
    config_for, run_coverage_cfg, run_crossing, run_width_profile, ExperimentReport, GeneratorSpec,
};

use crate::{
    CoverageArgs, CrossingArgs, FamilyArg, Format, IoArgs, MethodArgs, MomentArgs, StitchplanArgs,
    StreamArgs, WidthsArgs,
};
use heavycs_cli::format::{fmt_float, fmt_set};
use heavycs_cli::input::{is_data_row, parse_observation, SecondColumn};

/// How the self-normalized level is divided between the quadratic set and
/// its companion interval.
#[derive(Debug, Clone, Copy, PartialEq)]
enum SplitMode {
    /// Method default (a 9-to-1 split for the self-normalized method).
    Default,
    /// Explicit split, validated to sum to alpha.
    Explicit(f64, f64),
    /// No companion: the quadratic set alone, which can be the full line.
    Plain,
}

fn parse_split(spec: Option<&str>) -> Result<SplitMode> {
    let Some(s) = spec else {
        return Ok(SplitMode::Default);
    };
    if s == "none" {
        return Ok(SplitMode::Plain);
    }
    let Some((a, b)) = s.split_once(',') else {
        bail!("bad --alpha-split '{s}': expected 'a,b' or 'none'");
    };
    let a: f64 = a
        .trim()
        .parse()
        .with_context(|| format!("bad --alpha-split '{s}'"))?;
    let b: f64 = b
        .trim()
        .parse()
        .with_context(|| format!("bad --alpha-split '{s}'"))?;
    Ok(SplitMode::Explicit(a, b))
}

fn parse_schedule(m: &MethodArgs) -> Result<Option<LambdaSchedule>> {
    let spec = m.schedule.as_str();
    if spec == "tuned" {
        return Ok(None);
    }
    let built = if let Some(x) = spec.strip_prefix("constant:") {
        let x: f64 = x
            .parse()
            .with_context(|| format!("bad constant schedule '{spec}'"))?;
        LambdaSchedule::constant(x)
    } else if spec == "inv-sqrt" {
        LambdaSchedule::inv_sqrt_capped(m.cap)
    } else if spec == "power" {
        LambdaSchedule::het_matched(m.gamma, 1.0)
    } else if let Some(list) = spec.strip_prefix("table:") {
        let vals: Vec<f64> = list
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad table schedule '{spec}'"))?;
        LambdaSchedule::custom(vals)
    } else {
        bail!("unknown schedule '{spec}': expected tuned, constant:X, inv-sqrt, power, or table:a,b,...");
    };
    Ok(Some(built?))
}

fn parse_method(id: &str) -> Result<Method> {
    Ok(Method::parse(id)?)
}

/// Moment flags into config fields, rejecting an underspecified p-mode
/// before any data is touched.
fn apply_moment(cfg: CsConfig, m: &MomentArgs) -> Result<CsConfig> {
    let cfg = cfg.with_sigma2(m.sigma2);
    if m.p < 2.0 {
        let Some(v) = m.v else {
            bail!(
                "--p {} is below 2, which requires an explicit --v moment bound",
                m.p
            );
        };
        Ok(cfg.with_moment(m.p, v))
    } else {
        Ok(cfg)
    }
}

fn build_opts(m: &MethodArgs) -> Result<MethodOptions> {
    Ok(MethodOptions {
        schedule: parse_schedule(m)?,
        floor_index: m.floor_index,
        max_epoch: m.max_epoch,
    })
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.context("this subcommand draws random streams and requires an explicit --seed")
}

fn build_spec(f: &crate::FamilyArgs, m: &MomentArgs, seed: u64) -> Result<GeneratorSpec> {
    let spec = match f.family {
        FamilyArg::Gaussian => GeneratorSpec::gaussian(m.sigma2, seed),
        FamilyArg::StudentT => GeneratorSpec::student_t(f.nu, m.sigma2, seed),
        FamilyArg::Pareto => {
            let Some(v) = m.v else {
                bail!("the pareto family has infinite variance; pass --p in (1, 2) and --v");
            };
            GeneratorSpec::pareto(f.pareto_index, m.p, v, seed)
        }
        FamilyArg::SdeDrift => GeneratorSpec::sde_drift(f.damping, m.sigma2, seed),
    };
    let spec = match f.mean {
        Some(mu) => spec.with_mean(mu),
        None => spec,
    };
    spec.validate()?;
    Ok(spec)
}

fn open_output(io_args: &IoArgs) -> Result<Box<dyn Write>> {
    Ok(match &io_args.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn open_input(path: &Option<PathBuf>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

/// The stream engine: every method behind the runner interface, plus the
/// companion-free self-normalized estimator, which the runner deliberately
/// does not expose because its set can be the whole line.
#[derive(Debug)]
enum Engine {
    Runner(Box<CsRunner>),
    PlainSn(Box<SnEstimator>),
}

impl Engine {
    fn new(method: Method, cfg: CsConfig, opts: MethodOptions, split: SplitMode) -> Result<Engine> {
        match split {
            SplitMode::Plain => {
                if method != Method::Sn {
                    bail!("--alpha-split none applies only to method sn");
                }
                let schedule = match opts.schedule {
                    Some(s) => s,
                    None => LambdaSchedule::sn_tuned(cfg.alpha, cfg.sigma2)?,
                };
                Ok(Engine::PlainSn(Box::new(SnEstimator::new(cfg, schedule)?)))
            }
            SplitMode::Default | SplitMode::Explicit(..) => {
                Ok(Engine::Runner(Box::new(CsRunner::new(method, cfg, opts)?)))
            }
        }
    }

    fn advance(&mut self, obs: &Observation) -> Result<(), CsError> {
        match self {
            Engine::Runner(r) => r.advance(obs),
            Engine::PlainSn(e) => e.advance(obs),
        }
    }

    fn set(&self) -> Result<ConfidenceSet, CsError> {
        match self {
            Engine::Runner(r) => r.set(),
            Engine::PlainSn(e) => Ok(e.set()),
        }
    }

    /// Debug snapshot for diagnostics, truncated so history-retaining
    /// methods cannot flood stderr.
    fn state_dump(&self) -> String {
        let mut s = format!("{self:?}");
        const LIMIT: usize = 600;
        if s.len() > LIMIT {
            let mut cut = LIMIT;
            while !s.is_char_boundary(cut) {
                cut -= 1;
            }
            s.truncate(cut);
            s.push_str("...");
        }
        s
    }
}

#[derive(Serialize)]
struct StreamRow<'a> {
    t: u64,
    set: &'a str,
    width: &'a str,
    kind: &'a str,
}

#[derive(Serialize)]
struct StreamErrorRow {
    t: u64,
    row: usize,
    error: String,
}

pub fn cmd_stream(args: StreamArgs) -> Result<ExitCode> {
    let method = parse_method(&args.method.method)?;
    let mut cfg = apply_moment(CsConfig::new(args.method.alpha), &args.method.moment)?;
    if args.heteroscedastic {
        if cfg.p < 2.0 {
            bail!("--heteroscedastic applies to the variance-based methods (p = 2)");
        }
        cfg = cfg.heteroscedastic();
    }
    let split = parse_split(args.method.alpha_split.as_deref())?;
    if let SplitMode::Explicit(a, b) = split {
        cfg.alpha_split = Some((a, b));
    }
    let opts = build_opts(&args.method)?;
    let mut engine = Engine::new(method, cfg, opts, split)?;

    let second = if cfg.p < 2.0 {
        SecondColumn::MomentV
    } else {
        SecondColumn::Sigma
    };
    let input = open_input(&args.input)?;
    let mut out = open_output(&args.io)?;
    if args.io.format == Format::Csv {
        writeln!(out, "t,set,width,kind")?;
    }

    let mut running = args.intersect.then(ConfidenceSet::all);
    let mut t = 0u64;
    let mut error_rows = 0u64;
    for (idx, line) in input.lines().enumerate() {
        let row_no = idx + 1;
        let line = line.with_context(|| format!("reading input row {row_no}"))?;
        if !is_data_row(&line) {
            continue;
        }
        t += 1;
        let obs = match parse_observation(line.trim(), t, second) {
            Ok(obs) => obs,
            Err(e) => {
                eprintln!("row {row_no}: {e}");
                return Ok(ExitCode::from(2));
            }
        };
        if let Err(e) = engine.advance(&obs) {
            eprintln!("row {row_no}: estimator error at t={t}: {e}");
            eprintln!("state: {}", engine.state_dump());
            return Ok(ExitCode::from(2));
        }
        match engine.set() {
            Ok(fresh) => {
                let set = match running.as_mut() {
                    Some(r) => {
                        *r = r.intersect(&fresh);
                        r.clone()
                    }
                    None => fresh,
                };
                let text = fmt_set(&set);
                let width = fmt_float(set.width());
                let kind = set.kind();
                match args.io.format {
                    Format::Csv => writeln!(out, "{t},{text},{width},{kind}")?,
                    Format::Jsonl => {
                        let record = StreamRow {
                            t,
                            set: &text,
                            width: &width,
                            kind: &kind,
                        };
                        writeln!(out, "{}", serde_json::to_string(&record)?)?;
                    }
                }
            }
            Err(e) => {
                error_rows += 1;
                match args.io.format {
                    Format::Csv => writeln!(out, "# row {row_no}: no set at t={t}: {e}")?,
                    Format::Jsonl => {
                        let record = StreamErrorRow {
                            t,
                            row: row_no,
                            error: e.to_string(),
                        };
                        writeln!(out, "{}", serde_json::to_string(&record)?)?;
                    }
                }
            }
        }
    }
    out.flush()?;
    Ok(ExitCode::from(u8::from(error_rows > 0)))
}

fn write_report(out: &mut dyn Write, report: &ExperimentReport) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string(report)?)?;
    Ok(())
}

fn fmt_opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn fmt_opt_u64(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn cmd_coverage(args: CoverageArgs) -> Result<ExitCode> {
    let seed = require_seed(args.seed)?;
    let method = parse_method(&args.method.method)?;
    let split = parse_split(args.method.alpha_split.as_deref())?;
    if split == SplitMode::Plain {
        bail!("--alpha-split none is a stream-only mode; the experiments run the bounded-set construction");
    }
    let spec = build_spec(&args.family, &args.method.moment, seed)?;
    let mut cfg = config_for(&spec, args.method.alpha);
    cfg = apply_moment(cfg, &args.method.moment)?;
    if args.heteroscedastic {
        cfg = cfg.heteroscedastic();
    }
    if let SplitMode::Explicit(a, b) = split {
        cfg.alpha_split = Some((a, b));
    }
    let opts = build_opts(&args.method)?;
    let report = run_coverage_cfg(method, cfg, opts, &spec, args.horizon, args.reps)?;

    let mut out = open_output(&args.io)?;
    match args.io.format {
        Format::Jsonl => write_report(out.as_mut(), &report)?,
        Format::Csv => {
            writeln!(out, "rep,center,first_miscoverage")?;
            for (rep, (center, first)) in report
                .centers
                .iter()
                .zip(&report.first_miscoverage)
                .enumerate()
            {
                writeln!(out, "{rep},{},{}", fmt_float(*center), fmt_opt_u64(*first))?;
            }
            writeln!(
                out,
                "# miscoverage_count={}",
                fmt_opt_u64(report.miscoverage_count)
            )?;
            writeln!(
                out,
                "# miscoverage_rate={}",
                fmt_opt_float(report.miscoverage_rate)
            )?;
            writeln!(out, "# rate_se3={}", fmt_opt_float(report.rate_se3))?;
            writeln!(out, "# runtime_ms={}", report.runtime_ms)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_widths(args: WidthsArgs) -> Result<ExitCode> {
    let seed = require_seed(args.seed)?;
    if args.methods.is_empty() {
        bail!("--methods needs at least one method id");
    }
    if args.alphas.is_empty() {
        bail!("--alphas needs at least one level");
    }
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|id| parse_method(id))
        .collect::<Result<_>>()?;
    let spec = build_spec(&args.family, &args.moment, seed)?;
    let reports: Vec<ExperimentReport> = methods
        .iter()
        .map(|&m| {
            Ok(run_width_profile(
                m,
                &spec,
                args.horizon,
                args.reps,
                &args.alphas,
            )?)
        })
        .collect::<Result<_>>()?;

    let mut out = open_output(&args.io)?;
    match args.io.format {
        Format::Jsonl => {
            for report in &reports {
                write_report(out.as_mut(), report)?;
            }
        }
        Format::Csv => {
            writeln!(out, "t,alpha,{}", args.methods.join(","))?;
            // Every report shares the grid, so take row order from the first.
            let ts: Vec<u64> = reports[0]
                .widths
                .iter()
                .filter(|w| w.alpha == args.alphas[0])
                .map(|w| w.t)
                .collect();
            for &t in &ts {
                for &alpha in &args.alphas {
                    let cells: Vec<String> = reports
                        .iter()
                        .map(|r| {
                            let stat = r
                                .widths
                                .iter()
                                .find(|w| w.t == t && w.alpha == alpha)
                                .expect("width grid cell");
                            fmt_opt_float(stat.median)
                        })
                        .collect();
                    writeln!(out, "{t},{},{}", fmt_float(alpha), cells.join(","))?;
                }
            }
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_crossing(args: CrossingArgs) -> Result<ExitCode> {
    let seed = require_seed(args.seed)?;
    let method_a = parse_method(&args.method)?;
    let method_b = parse_method(&args.method_b)?;
    let spec = build_spec(&args.family, &args.moment, seed)?;
    let report = run_crossing(
        method_a,
        method_b,
        &spec,
        args.threshold,
        args.horizon,
        args.reps,
        args.alpha,
    )?;

    let mut out = open_output(&args.io)?;
    match args.io.format {
        Format::Jsonl => write_report(out.as_mut(), &report)?,
        Format::Csv => {
            writeln!(
                out,
                "rep,center,first_{},first_{}",
                args.method, args.method_b
            )?;
            for (rep, ((center, a), b)) in report
                .centers
                .iter()
                .zip(&report.crossing_a)
                .zip(&report.crossing_b)
                .enumerate()
            {
                writeln!(
                    out,
                    "{rep},{},{},{}",
                    fmt_float(*center),
                    fmt_opt_u64(*a),
                    fmt_opt_u64(*b)
                )?;
            }
            writeln!(
                out,
                "# crossing_median_a={}",
                fmt_opt_float(report.crossing_median_a)
            )?;
            writeln!(
                out,
                "# crossing_median_b={}",
                fmt_opt_float(report.crossing_median_b)
            )?;
            writeln!(
                out,
                "# crossing_ratio={}",
                fmt_opt_float(report.crossing_ratio)
            )?;
            writeln!(out, "# censored_a={}", fmt_opt_u64(report.censored_a))?;
            writeln!(out, "# censored_b={}", fmt_opt_u64(report.censored_b))?;
            writeln!(out, "# runtime_ms={}", report.runtime_ms)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PlanRow {
    epoch: u32,
    start: u64,
    alpha_j: f64,
    lambda_j: f64,
}

pub fn cmd_stitchplan(args: StitchplanArgs) -> Result<ExitCode> {
    let plan = StitchPlan::new(args.alpha, args.max_epoch)?;
    let mut out = open_output(&args.io)?;
    if args.io.format == Format::Csv {
        writeln!(out, "epoch,start,alpha_j,lambda_j")?;
    }
    for j in 0..=args.max_epoch {
        let row = PlanRow {
            epoch: j,
            start: StitchPlan::epoch_start(j),
            alpha_j: plan.alpha_j(j),
            lambda_j: plan.lambda_j(j),
        };
        match args.io.format {
            Format::Csv => writeln!(
                out,
                "{},{},{},{}",
                row.epoch,
                row.start,
                fmt_float(row.alpha_j),
                fmt_float(row.lambda_j)
            )?,
            Format::Jsonl => writeln!(out, "{}", serde_json::to_string(&row)?)?,
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}
