#![allow(clippy::neg_cmp_op_on_partial_ord)]
mod config;
mod output;
mod presets;

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rrcv::design::{self, DEFAULT_ARL0, DEFAULT_EARL_NODES};
use rrcv::mcsim::{self, SimConfig};
use rrcv::monitor::{self, ChartLimit, ChartReport, PhaseIIRecord};
use rrcv::sweep::{self, Cell, Metric, SweepOptions, SweepRow};
use rrcv::{
    cvdist, Direction, ErrorClass, Execution, MeasurementErrorModel, ProcessModel, RunRule,
    ShiftRange, ShiftSpec,
};

use config::{ChartConfigFile, OneOrMany};
use output::{Format, Table, Value};
use presets::{DesignTable, EarlFigure, EvaluateTable, Preset};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(rrcv::Error),
    Io(std::io::Error),
    /// Output was written but some rows failed; carries the exit code.
    RowFailures(u8),
}

impl From<rrcv::Error> for CliError {
    fn from(e: rrcv::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn class_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Infeasible => 4,
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(e) => class_code(e.class()),
            CliError::RowFailures(c) => *c,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error[usage]: {m}"),
            CliError::Core(e) => write!(f, "error[{}]: {e}", e.class().as_str()),
            CliError::Io(e) => write!(f, "error[usage]: {e}"),
            CliError::RowFailures(_) => {
                write!(f, "error: one or more rows failed (see the error column)")
            }
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Run rules control charts for the squared coefficient of variation.
#[derive(Debug, Parser)]
#[command(name = "rrcv", version)]
struct Cli {
    /// Chart configuration (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write results here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for Monte Carlo runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Round numeric output to this many decimals.
    #[arg(long, global = true)]
    round: Option<usize>,
    /// Evaluate cells and replications on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve chart constants and control limits for a target in-control ARL.
    Design(DesignCmd),
    /// Exact ARL and SDRL at given CV shifts.
    Evaluate(EvaluateCmd),
    /// Expected ARL over shift ranges.
    Earl(EarlCmd),
    /// ARL and EARL cells in one table; failing cells are annotated, not fatal.
    Sweep(SweepCmd),
    /// Monte Carlo run lengths next to the exact values.
    Simulate(SimulateCmd),
    /// Apply charts to recorded phase-II subgroups.
    Monitor(MonitorCmd),
    /// Density of the squared sample CV on a grid.
    Density(DensityCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirChoice {
    Lower,
    Upper,
    Both,
    /// Lower for decreases (τ < 1), upper for increases.
    Auto,
}

#[derive(Debug, Clone, Default, Args)]
struct ModelArgs {
    /// Subgroup sizes.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// In-control CVs.
    #[arg(long, value_delimiter = ',')]
    gamma0: Vec<f64>,
    /// Accuracy error A/μ₀.
    #[arg(long, value_delimiter = ',')]
    theta: Vec<f64>,
    /// Precision ratio σ_M/σ₀.
    #[arg(long, value_delimiter = ',')]
    eta: Vec<f64>,
    /// Gauge slope B.
    #[arg(long, value_delimiter = ',')]
    slope: Vec<f64>,
    /// Repeated measurements per item.
    #[arg(long, value_delimiter = ',')]
    reps: Vec<u32>,
    /// Run rules such as 2of3 (default 2of3,3of4,4of5).
    #[arg(long = "rule", value_delimiter = ',')]
    rules: Vec<String>,
    #[arg(long, value_enum)]
    direction: Option<DirChoice>,
    /// Target in-control ARL.
    #[arg(long)]
    arl0: Option<f64>,
    /// Evaluate CVs at or above 0.5.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct DesignCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum)]
    table: Option<DesignTable>,
}

#[derive(Debug, Args)]
struct EvaluateCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// CV shift multipliers.
    #[arg(long, value_delimiter = ',')]
    tau: Vec<f64>,
    #[arg(long, value_enum)]
    table: Option<EvaluateTable>,
}

#[derive(Debug, Args)]
struct EarlCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Shift ranges lo:hi (default 0.5:1 and 1:2).
    #[arg(long, value_delimiter = ',')]
    range: Vec<String>,
    /// Gauss–Legendre nodes.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, value_enum)]
    figure: Option<EarlFigure>,
}

#[derive(Debug, Args)]
struct SweepCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    tau: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    range: Vec<String>,
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    tau: Vec<f64>,
    #[arg(long)]
    replications: Option<u64>,
    #[arg(long)]
    max_run_length: Option<u64>,
}

#[derive(Debug, Args)]
struct MonitorCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Phase-II CSV with header index,mean,std.
    #[arg(long)]
    data: PathBuf,
    /// Precomputed limit RULE:DIRECTION:VALUE, e.g. 2of3:upper:0.5567.
    #[arg(long)]
    limit: Vec<String>,
    /// Also run a 1-of-1 chart designed from the model.
    #[arg(long)]
    shewhart: bool,
}

#[derive(Debug, Args)]
struct DensityCmd {
    #[arg(long, value_delimiter = ',', default_value = "5")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    gamma0: Vec<f64>,
    /// Right end of the grid (default covers mean + 6 std for every curve).
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long, default_value_t = 200)]
    points: usize,
}

struct Context {
    cfg: ChartConfigFile,
    output: Option<PathBuf>,
    format: Format,
    round: Option<usize>,
    seed: u64,
    execution: Execution,
}

impl Context {
    fn emit(&self, table: &Table) -> CliResult {
        let mut out = output::sink(self.output.as_deref())?;
        table.write(&mut out, self.format, self.round)?;
        out.flush()?;
        Ok(())
    }
}

/// Model axes after merging flags, config file, preset and defaults (in that order).
struct Model {
    n: Vec<usize>,
    gamma0: Vec<f64>,
    me: Vec<MeasurementErrorModel>,
    rules: Vec<(u32, u32)>,
    direction: DirChoice,
    arl0: f64,
    force: bool,
}

fn pick<T: Clone>(flag: &[T], cfg: Option<&OneOrMany<T>>, preset: &[T]) -> Vec<T> {
    if !flag.is_empty() {
        flag.to_vec()
    } else if let Some(c) = cfg {
        c.to_vec()
    } else {
        preset.to_vec()
    }
}

fn check_finite(name: &str, values: &[f64]) -> CliResult {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(CliError::Usage(format!(
            "--{name} must be finite (got {v})"
        ))),
        None => Ok(()),
    }
}

fn parse_direction(text: &str) -> CliResult<DirChoice> {
    DirChoice::from_str(text, true)
        .map_err(|_| CliError::Usage(format!("unknown direction {text:?}")))
}

impl Model {
    fn resolve(
        args: &ModelArgs,
        cfg: &ChartConfigFile,
        preset: &Preset,
        default_dir: DirChoice,
    ) -> CliResult<Self> {
        let n = pick(&args.n, cfg.n.as_ref(), &preset.n);
        let n = if n.is_empty() { vec![5] } else { n };
        let gamma0 = pick(&args.gamma0, cfg.gamma0.as_ref(), &preset.gamma0);
        if gamma0.is_empty() {
            return Err(CliError::Usage(
                "no in-control CV given (use --gamma0 or the config file)".into(),
            ));
        }
        check_finite("gamma0", &gamma0)?;

        let m = cfg.measurement.clone().unwrap_or_default();
        let explicit = !(args.theta.is_empty()
            && args.eta.is_empty()
            && args.slope.is_empty()
            && args.reps.is_empty())
            || cfg.measurement.is_some();
        let me = if explicit || preset.me.is_empty() {
            let theta = pick(&args.theta, m.theta.as_ref(), &[0.0]);
            let eta = pick(&args.eta, m.eta.as_ref(), &[0.0]);
            let slope = pick(&args.slope, m.slope.as_ref(), &[1.0]);
            let reps = pick(&args.reps, m.reps.as_ref(), &[1]);
            check_finite("theta", &theta)?;
            check_finite("eta", &eta)?;
            check_finite("slope", &slope)?;
            let mut out = Vec::new();
            for &t in &theta {
                for &e in &eta {
                    for &b in &slope {
                        for &r in &reps {
                            out.push(
                                MeasurementErrorModel::new(t, e, b, r)
                                    .map_err(|e| CliError::Usage(e.to_string()))?,
                            );
                        }
                    }
                }
            }
            out
        } else {
            preset.me.clone()
        };

        let rule_text: Vec<String> = if !args.rules.is_empty() {
            args.rules.clone()
        } else if let Some(r) = &cfg.rules {
            r.clone()
        } else {
            vec!["2of3".into(), "3of4".into(), "4of5".into()]
        };
        let rules = rule_text
            .iter()
            .map(|t| {
                RunRule::parse(t, Direction::Upper)
                    .map(|r| (r.r, r.s))
                    .map_err(|e| CliError::Usage(e.to_string()))
            })
            .collect::<CliResult<Vec<_>>>()?;

        let direction = match (args.direction, &cfg.direction) {
            (Some(d), _) => d,
            (None, Some(text)) => parse_direction(text)?,
            (None, None) => default_dir,
        };
        let arl0 = args.arl0.or(cfg.arl0).unwrap_or(DEFAULT_ARL0);
        if !(arl0.is_finite() && arl0 > 1.0) {
            return Err(CliError::Usage(format!(
                "--arl0 must be a finite number above 1 (got {arl0})"
            )));
        }
        Ok(Self {
            n,
            gamma0,
            me,
            rules,
            direction,
            arl0,
            force: args.force || cfg.force.unwrap_or(false) || preset.force,
        })
    }

    fn process(&self, gamma0: f64, n: usize) -> rrcv::Result<ProcessModel> {
        if self.force {
            ProcessModel::forced(gamma0, n)
        } else {
            ProcessModel::new(gamma0, n)
        }
    }

    fn directions(&self, natural: Option<Direction>) -> Vec<Direction> {
        match (self.direction, natural) {
            (DirChoice::Lower, _) => vec![Direction::Lower],
            (DirChoice::Upper, _) => vec![Direction::Upper],
            (DirChoice::Auto, Some(d)) => vec![d],
            _ => vec![Direction::Lower, Direction::Upper],
        }
    }

    /// Cells ordered by n, rule, metric, direction, measurement model, γ₀ (fastest).
    fn cells(&self, metrics: &[Metric]) -> CliResult<Vec<Cell>> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &(r, s) in &self.rules {
                for metric in metrics {
                    for dir in self.directions(Some(metric.natural_direction())) {
                        let rule = RunRule::new(r, s, dir)?;
                        for me in &self.me {
                            for &gamma0 in &self.gamma0 {
                                out.push(Cell {
                                    rule,
                                    n,
                                    gamma0,
                                    me: *me,
                                    metric: *metric,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn sweep_options(&self, nodes: usize, execution: Execution) -> SweepOptions {
        SweepOptions {
            arl0: self.arl0,
            earl_nodes: nodes,
            force: self.force,
            execution,
        }
    }
}

fn parse_range(text: &str) -> CliResult<ShiftRange> {
    let parsed = text.split_once(':').and_then(|(lo, hi)| {
        Some((
            lo.trim().parse::<f64>().ok()?,
            hi.trim().parse::<f64>().ok()?,
        ))
    });
    let (lo, hi) = parsed
        .ok_or_else(|| CliError::Usage(format!("range {text:?} is not of the form lo:hi")))?;
    ShiftRange::new(lo, hi).map_err(|e| CliError::Usage(e.to_string()))
}

fn ranges_from(flags: &[String], cfg: &ChartConfigFile) -> CliResult<Option<Vec<ShiftRange>>> {
    if !flags.is_empty() {
        return flags
            .iter()
            .map(|t| parse_range(t))
            .collect::<CliResult<Vec<_>>>()
            .map(Some);
    }
    match cfg.grid.as_ref().and_then(|g| g.ranges.as_ref()) {
        Some(r) => r
            .iter()
            .map(|&[lo, hi]| ShiftRange::new(lo, hi).map_err(|e| CliError::Usage(e.to_string())))
            .collect::<CliResult<Vec<_>>>()
            .map(Some),
        None => Ok(None),
    }
}

fn taus_from(flags: &[f64], cfg: &ChartConfigFile) -> CliResult<Option<Vec<f64>>> {
    let taus = if !flags.is_empty() {
        Some(flags.to_vec())
    } else {
        cfg.grid.as_ref().and_then(|g| g.taus.clone())
    };
    if let Some(t) = &taus {
        check_finite("tau", t)?;
        if let Some(bad) = t.iter().find(|&&x| x <= 0.0) {
            return Err(CliError::Usage(format!(
                "--tau values must be positive (got {bad})"
            )));
        }
    }
    Ok(taus)
}

fn nodes_from(flag: Option<usize>, cfg: &ChartConfigFile) -> usize {
    flag.or_else(|| cfg.grid.as_ref().and_then(|g| g.nodes))
        .unwrap_or(DEFAULT_EARL_NODES)
}

fn error_code(message: &str) -> u8 {
    let class = message.split(':').next().unwrap_or_default();
    match class {
        "numeric_failure" => 3,
        "infeasible_design" => 4,
        _ => 2,
    }
}

const PARAM_COLUMNS: [&str; 9] = [
    "r",
    "s",
    "direction",
    "n",
    "gamma0",
    "theta",
    "eta",
    "slope",
    "reps",
];

fn param_values(rule: RunRule, n: usize, gamma0: f64, me: &MeasurementErrorModel) -> Vec<Value> {
    vec![
        rule.r.into(),
        rule.s.into(),
        rule.direction.as_str().into(),
        n.into(),
        gamma0.into(),
        me.theta.into(),
        me.eta.into(),
        me.slope.into(),
        me.reps.into(),
    ]
}

fn columns(extra: &[&'static str]) -> Vec<&'static str> {
    PARAM_COLUMNS.iter().chain(extra).copied().collect()
}

fn run_design(ctx: &Context, cmd: &DesignCmd) -> CliResult {
    let preset = cmd.table.map(DesignTable::preset).unwrap_or_default();
    let default_dir = match cmd.table {
        Some(DesignTable::Example) => DirChoice::Upper,
        _ => DirChoice::Both,
    };
    let model = Model::resolve(&cmd.model, &ctx.cfg, &preset, default_dir)?;
    let extra = [
        "gamma_star0",
        "mean",
        "std",
        "k",
        "limit",
        "arl0_target",
        "arl0_achieved",
        "error",
    ];
    let mut table = Table::new(&columns(&extra));
    let mut worst = 0u8;
    for &n in &model.n {
        for &(r, s) in &model.rules {
            for dir in model.directions(None) {
                let rule = RunRule::new(r, s, dir)?;
                for me in &model.me {
                    for &gamma0 in &model.gamma0 {
                        let mut row = param_values(rule, n, gamma0, me);
                        let solved = model
                            .process(gamma0, n)
                            .and_then(|pm| design::solve_design(rule, &pm, me, model.arl0));
                        match solved {
                            Ok(d) => row.extend([
                                d.gamma_star0.into(),
                                d.moments.mean.into(),
                                d.moments.std.into(),
                                d.k.into(),
                                d.limit.into(),
                                d.arl0_target.into(),
                                d.arl0_achieved.into(),
                                Value::Empty,
                            ]),
                            Err(e) => {
                                worst = worst.max(class_code(e.class()));
                                row.extend(std::iter::repeat_n(Value::Empty, 5));
                                row.push(model.arl0.into());
                                row.push(Value::Empty);
                                row.push(format!("{}: {e}", e.class().as_str()).into());
                            }
                        }
                        table.push(row);
                    }
                }
            }
        }
    }
    ctx.emit(&table)?;
    if worst > 0 {
        return Err(CliError::RowFailures(worst));
    }
    Ok(())
}

const SWEEP_COLUMNS: [&str; 9] = [
    "tau", "omega_lo", "omega_hi", "k", "limit", "arl", "sdrl", "earl", "error",
];

fn sweep_table(rows: &[SweepRow], keep: &[&'static str]) -> Table {
    let mut table = Table::new(&columns(keep));
    for row in rows {
        let me = MeasurementErrorModel {
            theta: row.theta,
            eta: row.eta,
            slope: row.slope,
            reps: row.reps,
        };
        let rule = RunRule {
            r: row.r,
            s: row.s,
            direction: row.direction,
        };
        let mut values = param_values(rule, row.n, row.gamma0, &me);
        for col in keep {
            values.push(match *col {
                "tau" => row.tau.into(),
                "omega_lo" => row.omega_lo.into(),
                "omega_hi" => row.omega_hi.into(),
                "k" => row.k.into(),
                "limit" => row.limit.into(),
                "arl" => row.arl.into(),
                "sdrl" => row.sdrl.into(),
                "earl" => row.earl.into(),
                "error" => row.error.clone().into(),
                other => unreachable!("unknown sweep column {other}"),
            });
        }
        table.push(values);
    }
    table
}

/// Exit status for tables with per-row errors: success unless every row failed.
fn row_status(rows: &[SweepRow]) -> CliResult {
    let failed: Vec<&str> = rows.iter().filter_map(|r| r.error.as_deref()).collect();
    if !rows.is_empty() && failed.len() == rows.len() {
        let worst = failed.iter().map(|m| error_code(m)).max().unwrap_or(2);
        return Err(CliError::RowFailures(worst));
    }
    Ok(())
}

fn run_grid(
    ctx: &Context,
    model: &Model,
    metrics: &[Metric],
    nodes: usize,
    keep: &[&'static str],
) -> CliResult {
    let cells = model.cells(metrics)?;
    let rows = sweep::sweep(&cells, &model.sweep_options(nodes, ctx.execution));
    ctx.emit(&sweep_table(&rows, keep))?;
    row_status(&rows)
}

fn run_evaluate(ctx: &Context, cmd: &EvaluateCmd) -> CliResult {
    let preset = cmd.table.map(EvaluateTable::preset).unwrap_or_default();
    let model = Model::resolve(&cmd.model, &ctx.cfg, &preset, DirChoice::Auto)?;
    let taus = taus_from(&cmd.tau, &ctx.cfg)?.unwrap_or(preset.taus);
    let metrics: Vec<Metric> = taus.into_iter().map(|tau| Metric::Arl { tau }).collect();
    run_grid(
        ctx,
        &model,
        &metrics,
        DEFAULT_EARL_NODES,
        &["tau", "k", "limit", "arl", "sdrl", "error"],
    )
}

fn run_earl(ctx: &Context, cmd: &EarlCmd) -> CliResult {
    let preset = cmd.figure.map(EarlFigure::preset).unwrap_or_default();
    let model = Model::resolve(&cmd.model, &ctx.cfg, &preset, DirChoice::Auto)?;
    let ranges = match ranges_from(&cmd.range, &ctx.cfg)? {
        Some(r) => r,
        None if !preset.ranges.is_empty() => preset.ranges,
        None => vec![ShiftRange::DECREASING, ShiftRange::INCREASING],
    };
    let metrics: Vec<Metric> = ranges
        .into_iter()
        .map(|range| Metric::Earl { range })
        .collect();
    let nodes = nodes_from(cmd.nodes, &ctx.cfg);
    run_grid(
        ctx,
        &model,
        &metrics,
        nodes,
        &["omega_lo", "omega_hi", "k", "limit", "earl", "error"],
    )
}

fn run_sweep(ctx: &Context, cmd: &SweepCmd) -> CliResult {
    let taus = taus_from(&cmd.tau, &ctx.cfg)?.unwrap_or_default();
    let ranges = ranges_from(&cmd.range, &ctx.cfg)?.unwrap_or_default();
    let metrics: Vec<Metric> = taus
        .into_iter()
        .map(|tau| Metric::Arl { tau })
        .chain(ranges.into_iter().map(|range| Metric::Earl { range }))
        .collect();
    if metrics.is_empty() {
        return ctx.emit(&Table::new(&columns(&SWEEP_COLUMNS)));
    }
    let model = Model::resolve(&cmd.model, &ctx.cfg, &Preset::default(), DirChoice::Auto)?;
    run_grid(
        ctx,
        &model,
        &metrics,
        nodes_from(cmd.nodes, &ctx.cfg),
        &SWEEP_COLUMNS,
    )
}

fn run_simulate(ctx: &Context, cmd: &SimulateCmd) -> CliResult {
    let sim = ctx.cfg.simulation.clone().unwrap_or_default();
    let replications = cmd.replications.or(sim.replications).unwrap_or(100_000);
    let mut base =
        SimConfig::new(replications, ctx.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(max) = cmd.max_run_length.or(sim.max_run_length) {
        base.max_run_length = max;
    }
    base.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let base = base.with_execution(ctx.execution);

    let model = Model::resolve(&cmd.model, &ctx.cfg, &Preset::default(), DirChoice::Auto)?;
    let taus = taus_from(&cmd.tau, &ctx.cfg)?.unwrap_or_default();
    let metrics: Vec<Metric> = taus.into_iter().map(|tau| Metric::Arl { tau }).collect();
    let cells = model.cells(&metrics)?;
    let extra = [
        "tau",
        "k",
        "limit",
        "arl_exact",
        "sdrl_exact",
        "arl_mc",
        "sdrl_mc",
        "stderr",
        "replications",
        "truncated",
        "redraws",
        "seed",
        "error",
    ];
    let mut table = Table::new(&columns(&extra));
    let mut failures = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let Metric::Arl { tau } = cell.metric else {
            unreachable!("simulate only builds ARL cells")
        };
        let cfg = SimConfig {
            seed: ctx.seed.wrapping_add(i as u64),
            ..base
        };
        let mut row = param_values(cell.rule, cell.n, cell.gamma0, &cell.me);
        row.push(tau.into());
        let outcome = (|| -> rrcv::Result<_> {
            let pm = model.process(cell.gamma0, cell.n)?;
            let d = design::solve_design(cell.rule, &pm, &cell.me, model.arl0)?;
            let shift = ShiftSpec::from_tau(tau, cell.gamma0)?;
            let exact = design::arl_at_shift(&d, &pm, &cell.me, &shift)?;
            let mc = mcsim::estimate_run_length(&d, &pm, &cell.me, &shift, &cfg)?;
            Ok((d, exact, mc))
        })();
        match outcome {
            Ok((d, exact, mc)) => row.extend([
                d.k.into(),
                d.limit.into(),
                exact.arl.into(),
                exact.sdrl.into(),
                mc.metrics.arl.into(),
                mc.metrics.sdrl.into(),
                mc.metrics.stderr.into(),
                mc.replications.into(),
                mc.truncated.into(),
                mc.redraws.into(),
                mc.seed.into(),
                Value::Empty,
            ]),
            Err(e) => {
                failures.push(class_code(e.class()));
                row.extend(std::iter::repeat_n(Value::Empty, 7));
                row.extend([
                    cfg.replications.into(),
                    Value::Empty,
                    Value::Empty,
                    cfg.seed.into(),
                ]);
                row.push(format!("{}: {e}", e.class().as_str()).into());
            }
        }
        table.push(row);
    }
    ctx.emit(&table)?;
    if !cells.is_empty() && failures.len() == cells.len() {
        return Err(CliError::RowFailures(
            failures.into_iter().max().unwrap_or(2),
        ));
    }
    Ok(())
}

fn parse_limit(text: &str) -> CliResult<ChartLimit> {
    let parts: Vec<&str> = text.split(':').collect();
    let [rule, dir, value] = parts[..] else {
        return Err(CliError::Usage(format!(
            "limit {text:?} is not of the form RULE:DIRECTION:VALUE"
        )));
    };
    let direction: Direction = dir
        .parse()
        .map_err(|e: rrcv::Error| CliError::Usage(e.to_string()))?;
    let rule = RunRule::parse(rule, direction).map_err(|e| CliError::Usage(e.to_string()))?;
    let limit: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("limit value {value:?} is not a number")))?;
    check_finite("limit", &[limit])?;
    Ok(ChartLimit {
        label: rule.to_string(),
        rule,
        limit,
    })
}

fn monitor_charts(ctx: &Context, cmd: &MonitorCmd) -> CliResult<Vec<ChartLimit>> {
    let mut charts = cmd
        .limit
        .iter()
        .map(|t| parse_limit(t))
        .collect::<CliResult<Vec<_>>>()?;
    if cmd.limit.is_empty() {
        for spec in ctx.cfg.limits.iter().flatten() {
            let rule = RunRule::parse(&spec.rule, spec.direction)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            charts.push(ChartLimit {
                label: spec.label.clone().unwrap_or_else(|| rule.to_string()),
                rule,
                limit: spec.limit,
            });
        }
    }
    let has_model = !cmd.model.gamma0.is_empty() || ctx.cfg.gamma0.is_some();
    if !charts.is_empty() && !has_model {
        if cmd.shewhart {
            return Err(CliError::Usage(
                "--shewhart needs a model (--gamma0) to design the chart".into(),
            ));
        }
        return Ok(charts);
    }
    let model = Model::resolve(&cmd.model, &ctx.cfg, &Preset::default(), DirChoice::Both)?;
    let many = model.n.len() * model.gamma0.len() * model.me.len() > 1;
    let mut rules = if charts.is_empty() {
        model.rules.clone()
    } else {
        Vec::new()
    };
    if cmd.shewhart {
        rules.push((1, 1));
    }
    for &n in &model.n {
        for &(r, s) in &rules {
            for dir in model.directions(None) {
                let rule = RunRule::new(r, s, dir)?;
                for me in &model.me {
                    for &gamma0 in &model.gamma0 {
                        let pm = model.process(gamma0, n)?;
                        let d = design::solve_design(rule, &pm, me, model.arl0)?;
                        let label = if many {
                            format!(
                                "{rule} n={n} gamma0={gamma0} theta={} eta={} slope={} reps={}",
                                me.theta, me.eta, me.slope, me.reps
                            )
                        } else {
                            rule.to_string()
                        };
                        charts.push(ChartLimit {
                            label,
                            rule,
                            limit: d.limit,
                        });
                    }
                }
            }
        }
    }
    Ok(charts)
}

fn summary_line(rep: &ChartReport) -> String {
    let head = format!("{} limit {:.6}", rep.chart.label, rep.chart.limit);
    match (rep.first_signal, rep.window_start) {
        (Some(at), Some(start)) => format!(
            "{head}: first signal at sample {at} (run starts at sample {start}); {} signalling samples",
            rep.signals.len()
        ),
        (Some(at), None) => format!("{head}: first signal at sample {at}"),
        _ => format!("{head}: no signal"),
    }
}

fn run_monitor(ctx: &Context, cmd: &MonitorCmd) -> CliResult {
    let file = File::open(&cmd.data)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", cmd.data.display())))?;
    let records: Vec<PhaseIIRecord> = monitor::read_phase2(file)?;
    let charts = monitor_charts(ctx, cmd)?;
    let reports: Vec<ChartReport> = charts
        .iter()
        .map(|c| monitor::monitor(&records, c))
        .collect();
    for rep in &reports {
        eprintln!("{}", summary_line(rep));
    }
    match ctx.format {
        Format::Json => {
            let value =
                serde_json::to_value(&reports).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut out = output::sink(ctx.output.as_deref())?;
            output::write_json(&mut out, &value)?;
            out.flush()?;
            Ok(())
        }
        Format::Csv => {
            let mut table = Table::new(&[
                "chart",
                "r",
                "s",
                "direction",
                "limit",
                "index",
                "mean",
                "std",
                "cv",
                "cv2",
                "outside",
                "window",
                "signal",
            ]);
            for rep in &reports {
                for (point, rec) in rep.points.iter().zip(&records) {
                    table.push(vec![
                        rep.chart.label.clone().into(),
                        rep.chart.rule.r.into(),
                        rep.chart.rule.s.into(),
                        rep.chart.rule.direction.as_str().into(),
                        rep.chart.limit.into(),
                        point.index.into(),
                        rec.mean.into(),
                        rec.std.into(),
                        rec.cv().into(),
                        point.cv2.into(),
                        point.outside.into(),
                        point.window.clone().into(),
                        point.signal.into(),
                    ]);
                }
            }
            ctx.emit(&table)
        }
    }
}

fn run_density(ctx: &Context, cmd: &DensityCmd) -> CliResult {
    check_finite("gamma0", &cmd.gamma0)?;
    let upper = match cmd.upper {
        Some(u) => u,
        None => {
            let mut hi: f64 = 0.0;
            for &n in &cmd.n {
                for &g in &cmd.gamma0 {
                    let m = cvdist::moments_at(g, n)?;
                    hi = hi.max(m.mean + 6.0 * m.std);
                }
            }
            hi
        }
    };
    check_finite("upper", &[upper])?;
    let mut table = Table::new(&["n", "gamma0", "x", "density"]);
    for &n in &cmd.n {
        for &g in &cmd.gamma0 {
            for (x, d) in cvdist::density_grid(n, g, upper, cmd.points)? {
                table.push(vec![n.into(), g.into(), x.into(), d.into()]);
            }
        }
    }
    ctx.emit(&table)
}

fn run(cli: Cli) -> CliResult {
    let cfg = match &cli.config {
        Some(p) => ChartConfigFile::load(p)?,
        None => ChartConfigFile::default(),
    };
    let ctx = Context {
        cfg,
        output: cli.output,
        format: cli.format,
        round: cli.round,
        seed: cli.seed.unwrap_or(1),
        execution: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
    };
    match &cli.command {
        Command::Design(c) => run_design(&ctx, c),
        Command::Evaluate(c) => run_evaluate(&ctx, c),
        Command::Earl(c) => run_earl(&ctx, c),
        Command::Sweep(c) => run_sweep(&ctx, c),
        Command::Simulate(c) => run_simulate(&ctx, c),
        Command::Monitor(c) => run_monitor(&ctx, c),
        Command::Density(c) => run_density(&ctx, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
