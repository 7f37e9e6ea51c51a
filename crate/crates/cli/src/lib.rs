//! Command-line driver: generate instances, run online algorithms against
//! the exact optimum, verify Waterfall runs, and write per-cell artifacts
//! plus a deterministic `results.csv`.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use mlapd::algos::{AlgorithmKind, Diagnostics, WaterfallEvent};
use mlapd::analysis::{verify_waterfall_run, VerificationReport};
use mlapd::bounds::guaranteed_ratio;
use mlapd::engine::{run, RunTrace, TraceFile};
use mlapd::gen::{self, GenSpec};
use mlapd::model::{check_feasible, Violation};
use mlapd::oracle::{brute_force_opt, OptFile, OptResult, DEFAULT_MAX_REQUESTS};
use mlapd::rational::{format_rational, to_decimal};
use mlapd::{wire, Instance};

pub const SEED_ENV: &str = "MLAP_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "mlapd",
    version,
    about = "Online multi-level aggregation with deadlines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run algorithms on instances, optionally against the optimum.
    Run(RunArgs),
    /// Generate instances and write their canonical JSON.
    Gen(GenArgs),
    /// Print a step-by-step log of one algorithm on one instance.
    Trace(TraceArgs),
    /// Run Waterfall and check its investment and charging accounting.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Sources {
    /// Instance JSON file (repeatable).
    #[arg(long = "instance", value_name = "FILE")]
    pub instances: Vec<PathBuf>,
    /// Generator spec such as `increasing:seed=1..100:n=10` (repeatable).
    #[arg(long = "gen", value_name = "SPEC")]
    pub gens: Vec<String>,
    /// Separate equal deadlines instead of rejecting the instance.
    #[arg(long)]
    pub perturb: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Algorithms: noadd, double, waterfall or all (comma-separated or repeated).
    #[arg(long = "alg", value_delimiter = ',', required = true)]
    pub algs: Vec<String>,
    #[command(flatten)]
    pub sources: Sources,
    /// Compute the optimum and report ratios.
    #[arg(long)]
    pub opt: bool,
    /// Verify Waterfall runs (implies --opt).
    #[arg(long)]
    pub verify: bool,
    /// Output directory for per-cell artifacts and results.csv.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to available cores).
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_REQUESTS)]
    pub max_oracle_requests: usize,
    /// Include algorithm diagnostics (prices, ledger) in trace files.
    #[arg(long)]
    pub full_trace: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long = "gen", value_name = "SPEC", required = true)]
    pub gens: Vec<String>,
    /// Directory for `<name>.json` and `<name>.spec.json`; stdout when omitted.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long = "alg")]
    pub alg: String,
    #[command(flatten)]
    pub sources: Sources,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub sources: Sources,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_REQUESTS)]
    pub max_oracle_requests: usize,
}

/// A loaded instance with a file-system friendly name.
#[derive(Debug, Clone)]
pub struct Named {
    pub name: String,
    pub instance: Instance,
    pub spec: Option<GenSpec>,
}

fn spec_name(spec: &GenSpec) -> String {
    spec.to_string().replace(':', "_").replace('=', "")
}

/// Applies the seed override, if set, to a generator spec.
pub fn with_seed_override(spec: &str, seed: Option<&str>) -> String {
    match seed {
        Some(s) if !s.trim().is_empty() => format!("{spec}:seed={}", s.trim()),
        _ => spec.to_string(),
    }
}

pub fn load_sources(sources: &Sources) -> Result<Vec<Named>> {
    let mut out = Vec::new();
    for path in &sources.instances {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let instance = wire::instance_from_json(&text, sources.perturb)
            .with_context(|| format!("loading {}", path.display()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".into());
        out.push(Named {
            name,
            instance,
            spec: None,
        });
    }
    let seed = std::env::var(SEED_ENV).ok();
    for text in &sources.gens {
        for spec in gen::parse_specs(&with_seed_override(text, seed.as_deref()))? {
            let instance = gen::generate(&spec)?;
            out.push(Named {
                name: spec_name(&spec),
                instance,
                spec: Some(spec),
            });
        }
    }
    let mut seen = HashSet::new();
    for (i, n) in out.iter_mut().enumerate() {
        if !seen.insert(n.name.clone()) {
            n.name = format!("{}-{i}", n.name);
            seen.insert(n.name.clone());
        }
    }
    if out.is_empty() {
        bail!("no instances given (use --instance or --gen)");
    }
    Ok(out)
}

pub fn parse_algs(names: &[String]) -> Result<Vec<AlgorithmKind>> {
    let mut algs = Vec::new();
    for name in names {
        let kinds: Vec<AlgorithmKind> = if name.eq_ignore_ascii_case("all") {
            AlgorithmKind::ALL.to_vec()
        } else {
            vec![name.parse()?]
        };
        for k in kinds {
            if !algs.contains(&k) {
                algs.push(k);
            }
        }
    }
    Ok(algs)
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    Ok(builder.build()?.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub instance: String,
    pub algorithm: String,
    pub nodes: usize,
    pub requests: usize,
    pub depth: usize,
    pub feasible: bool,
    pub alg_cost: String,
    pub opt_cost: String,
    pub ratio: String,
    pub ratio_decimal: String,
    pub bound: String,
    pub within_bound: String,
    pub verified: String,
}

impl Row {
    pub fn failed(&self) -> bool {
        !self.feasible || self.within_bound == "false" || self.verified == "false"
    }
}

struct Cell {
    row: Row,
    trace: Option<RunTrace>,
    violations: Vec<Violation>,
    report: Option<VerificationReport>,
    error: Option<String>,
}

fn run_cell(named: &Named, alg: AlgorithmKind, opt: Option<&OptResult>, verify: bool) -> Cell {
    let instance = &named.instance;
    let tree = &instance.tree;
    let mut row = Row {
        instance: named.name.clone(),
        algorithm: alg.name().to_string(),
        nodes: tree.len(),
        requests: instance.requests.len(),
        depth: tree.depth(),
        feasible: false,
        alg_cost: String::new(),
        opt_cost: String::new(),
        ratio: String::new(),
        ratio_decimal: String::new(),
        bound: String::new(),
        within_bound: String::new(),
        verified: String::new(),
    };
    let trace = match alg
        .instantiate(tree)
        .map_err(anyhow::Error::from)
        .and_then(|mut a| Ok(run(instance, a.as_mut())?))
    {
        Ok(t) => t,
        Err(e) => {
            return Cell {
                row,
                trace: None,
                violations: Vec::new(),
                report: None,
                error: Some(e.to_string()),
            }
        }
    };
    let violations = check_feasible(instance, &trace.schedule).violations;
    row.feasible = violations.is_empty();
    let alg_cost = trace.cost();
    row.alg_cost = format_rational(&alg_cost);
    let bound = guaranteed_ratio(alg, tree);
    if let Some(b) = &bound {
        row.bound = format_rational(b);
    }
    let mut report = None;
    if let Some(opt) = opt {
        row.opt_cost = format_rational(&opt.cost);
        if opt.cost > num_traits::Zero::zero() {
            let ratio = &alg_cost / &opt.cost;
            row.ratio = format_rational(&ratio);
            row.ratio_decimal = to_decimal(&ratio, 6);
        }
        if let Some(b) = &bound {
            row.within_bound = (alg_cost <= b * &opt.cost).to_string();
        }
        if verify && alg == AlgorithmKind::Waterfall {
            match verify_waterfall_run(instance, &trace, opt) {
                Ok(r) => {
                    row.verified = r.passed.to_string();
                    report = Some(r);
                }
                Err(e) => {
                    row.verified = "false".into();
                    return Cell {
                        row,
                        trace: Some(trace),
                        violations,
                        report: None,
                        error: Some(e.to_string()),
                    };
                }
            }
        }
    }
    Cell {
        row,
        trace: Some(trace),
        violations,
        report,
        error: None,
    }
}

#[derive(Serialize)]
struct FailureFile<'a> {
    instance: &'a str,
    algorithm: &'a str,
    error: Option<&'a str>,
    violations: Vec<String>,
    failed_checks: Vec<&'a mlapd::analysis::CheckOutcome>,
    within_bound: &'a str,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn write_csv(rows: &[Row], writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every (instance, algorithm) cell; returns rows in input order and
/// whether any cell failed.
pub fn cmd_run(args: &RunArgs) -> Result<(Vec<Row>, bool)> {
    let algs = parse_algs(&args.algs)?;
    let instances = load_sources(&args.sources)?;
    let need_opt = args.opt || args.verify;
    if need_opt {
        if let Some(n) = instances
            .iter()
            .find(|n| n.instance.requests.len() > args.max_oracle_requests)
        {
            bail!(
                "{} has {} requests, above the oracle bound {} (raise --max-oracle-requests)",
                n.name,
                n.instance.requests.len(),
                args.max_oracle_requests
            );
        }
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir.join("cells"))?;
        fs::create_dir_all(dir.join("instances"))?;
    }

    let results: Vec<(Option<OptResult>, Vec<Cell>)> = with_pool(args.jobs, || {
        instances
            .par_iter()
            .map(|named| {
                let opt = need_opt.then(|| {
                    brute_force_opt(&named.instance, args.max_oracle_requests)
                        .expect("request count checked above")
                });
                let cells = algs
                    .par_iter()
                    .filter(|a| a.applies_to(&named.instance.tree))
                    .map(|&a| run_cell(named, a, opt.as_ref(), args.verify))
                    .collect();
                (opt, cells)
            })
            .collect()
    })?;

    let mut rows = Vec::new();
    let mut any_failed = false;
    for (named, (opt, cells)) in instances.iter().zip(&results) {
        for alg in &algs {
            if !alg.applies_to(&named.instance.tree) {
                eprintln!("{}: {} skipped (applies to paths only)", named.name, alg);
            }
        }
        for cell in cells {
            let failed = cell.row.failed() || cell.error.is_some();
            any_failed |= failed;
            if let Some(e) = &cell.error {
                eprintln!("{} {}: {e}", cell.row.instance, cell.row.algorithm);
            }
            rows.push(cell.row.clone());
        }
        if let Some(dir) = &args.out {
            write_cell_artifacts(dir, named, opt.as_ref(), cells, args.full_trace)?;
        }
    }
    if let Some(dir) = &args.out {
        let file = fs::File::create(dir.join("results.csv"))?;
        write_csv(&rows, file)?;
    }
    Ok((rows, any_failed))
}

fn write_cell_artifacts(
    dir: &Path,
    named: &Named,
    opt: Option<&OptResult>,
    cells: &[Cell],
    full_trace: bool,
) -> Result<()> {
    let base = &named.name;
    let tree = &named.instance.tree;
    fs::write(
        dir.join("instances").join(format!("{base}.json")),
        wire::instance_to_json(&named.instance) + "\n",
    )?;
    if let Some(opt) = opt {
        write_json(
            &dir.join("cells").join(format!("{base}.opt.json")),
            &OptFile::from_opt(&named.instance, opt),
        )?;
    }
    for cell in cells {
        let stem = format!("{base}__{}", cell.row.algorithm);
        if let Some(trace) = &cell.trace {
            write_json(
                &dir.join("cells").join(format!("{stem}.trace.json")),
                &TraceFile::from_trace(tree, trace, full_trace),
            )?;
        }
        if let Some(report) = &cell.report {
            write_json(
                &dir.join("cells").join(format!("{stem}.verify.json")),
                report,
            )?;
        }
        if cell.row.failed() || cell.error.is_some() {
            let failure = FailureFile {
                instance: base,
                algorithm: &cell.row.algorithm,
                error: cell.error.as_deref(),
                violations: cell.violations.iter().map(|v| v.to_string()).collect(),
                failed_checks: cell.report.iter().flat_map(|r| r.failed_checks()).collect(),
                within_bound: &cell.row.within_bound,
            };
            write_json(
                &dir.join("cells").join(format!("{stem}.failure.json")),
                &failure,
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SpecSidecar {
    spec: String,
    fingerprint: String,
}

pub fn cmd_gen(args: &GenArgs) -> Result<String> {
    let sources = Sources {
        instances: Vec::new(),
        gens: args.gens.clone(),
        perturb: false,
    };
    let instances = load_sources(&sources)?;
    let mut stdout = String::new();
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for n in &instances {
                fs::write(
                    dir.join(format!("{}.json", n.name)),
                    wire::instance_to_json(&n.instance) + "\n",
                )?;
                let sidecar = SpecSidecar {
                    spec: n.spec.as_ref().map(|s| s.to_string()).unwrap_or_default(),
                    fingerprint: wire::fingerprint(&n.instance),
                };
                write_json(&dir.join(format!("{}.spec.json", n.name)), &sidecar)?;
                stdout.push_str(&format!(
                    "{}\n",
                    dir.join(format!("{}.json", n.name)).display()
                ));
            }
        }
        None => {
            if instances.len() != 1 {
                bail!(
                    "{} instances generated; pass --out DIR to write them",
                    instances.len()
                );
            }
            stdout = wire::instance_to_json(&instances[0].instance) + "\n";
        }
    }
    Ok(stdout)
}

/// Human-readable log of one run.
pub fn trace_log(instance: &Instance, trace: &RunTrace) -> Vec<String> {
    let tree = &instance.tree;
    let labels = |nodes: &mlapd::NodeSet| {
        wire::labels_of(tree, nodes)
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut chunks: Vec<Vec<&WaterfallEvent>> = Vec::new();
    if let Diagnostics::Waterfall(diag) = &trace.diagnostics {
        for e in &diag.events {
            if matches!(e, WaterfallEvent::Service { .. }) || chunks.is_empty() {
                chunks.push(Vec::new());
            }
            chunks.last_mut().expect("pushed").push(e);
        }
    }
    let mut lines = Vec::new();
    for (i, (service, step)) in trace.schedule.services.iter().zip(&trace.steps).enumerate() {
        match chunks.get(i) {
            Some(events) => lines.extend(events.iter().flat_map(|e| e.describe(tree))),
            None => lines.push(format!("t={}: request {} due", service.time, step.trigger)),
        }
        let satisfied: Vec<String> = step.satisfied.iter().map(|id| id.to_string()).collect();
        lines.push(format!(
            "  service [{}] cost {}, satisfies [{}]",
            labels(&service.nodes),
            step.cost,
            satisfied.join(",")
        ));
    }
    if let Diagnostics::Double(stats) = &trace.diagnostics {
        if !trace.steps.is_empty() {
            lines.push(format!("double rejected {} extensions", stats.rejections));
        }
    }
    if !trace.steps.is_empty() {
        lines.push(format!("total cost {}", format_rational(&trace.cost())));
    }
    lines
}

pub fn cmd_trace(args: &TraceArgs) -> Result<String> {
    let alg: AlgorithmKind = args.alg.parse()?;
    let instances = load_sources(&args.sources)?;
    let mut out = String::new();
    for named in &instances {
        if instances.len() > 1 {
            out.push_str(&format!("# {}\n", named.name));
        }
        let mut algorithm = alg.instantiate(&named.instance.tree)?;
        let trace = run(&named.instance, algorithm.as_mut())?;
        for line in trace_log(&named.instance, &trace) {
            out.push_str(&line);
            out.push('\n');
        }
    }
    Ok(out)
}

/// Verifies Waterfall on every instance; returns the report text and
/// whether every check passed.
pub fn cmd_verify(args: &VerifyArgs) -> Result<(String, bool)> {
    let instances = load_sources(&args.sources)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
    }
    let reports: Vec<Result<VerificationReport>> = with_pool(args.jobs, || {
        instances
            .par_iter()
            .map(|named| {
                let opt = brute_force_opt(&named.instance, args.max_oracle_requests)?;
                let mut wf = AlgorithmKind::Waterfall.instantiate(&named.instance.tree)?;
                let trace = run(&named.instance, wf.as_mut())?;
                Ok(verify_waterfall_run(&named.instance, &trace, &opt)?)
            })
            .collect()
    })?;
    let mut text = String::new();
    let mut all = true;
    for (named, report) in instances.iter().zip(reports) {
        let report = report.with_context(|| format!("verifying {}", named.name))?;
        all &= report.passed;
        text.push_str(&format!(
            "{}: waterfall {} / opt {} = {} (D = {}): {}\n",
            named.name,
            report.alg_cost,
            report.opt_cost,
            report.ratio,
            report.depth,
            if report.passed {
                "all checks pass"
            } else {
                "CHECKS FAILED"
            }
        ));
        for c in &report.checks {
            text.push_str(&format!(
                "  {:<8}{} ({} checked{})\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.checked,
                c.min_slack
                    .as_ref()
                    .map(|s| format!(", min slack {s}"))
                    .unwrap_or_default()
            ));
            for ex in &c.counterexamples {
                text.push_str(&format!("          {ex}\n"));
            }
        }
        if let Some(dir) = &args.out {
            write_json(&dir.join(format!("{}.verify.json", named.name)), &report)?;
        }
    }
    Ok((text, all))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_override_appends() {
        assert_eq!(
            with_seed_override("path:seed=1:n=4", Some("3..5")),
            "path:seed=1:n=4:seed=3..5"
        );
        assert_eq!(with_seed_override("path:n=4", None), "path:n=4");
        assert_eq!(with_seed_override("path:n=4", Some(" ")), "path:n=4");
        let specs = gen::parse_specs(&with_seed_override("path:seed=1:n=4", Some("3..5"))).unwrap();
        assert_eq!(specs.iter().map(|s| s.seed).collect::<Vec<_>>(), [3, 4, 5]);
    }

    #[test]
    fn algorithm_lists() {
        let algs = parse_algs(&["waterfall".into(), "all".into()]).unwrap();
        assert_eq!(
            algs,
            [
                AlgorithmKind::Waterfall,
                AlgorithmKind::Noadd,
                AlgorithmKind::Double
            ]
        );
        assert!(parse_algs(&["greedy".into()]).is_err());
    }

    #[test]
    fn spec_names_are_path_safe() {
        let spec = &gen::parse_specs("increasing:seed=2:n=5").unwrap()[0];
        let name = spec_name(spec);
        assert!(!name.contains(':') && !name.contains('='));
        assert!(name.starts_with("increasing_seed2_n5"));
    }
}
