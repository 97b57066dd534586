use std::fs;
use std::path::{Path, PathBuf};

use ael_core::arma::region_violation;
use ael_core::confidence::{extract_contour, interval_1d, scan_region, Axis, Evaluation, Method, RegionGrid};
use ael_core::coverage::{paired_summary, run_coverage, CoverageReport, ExperimentPlan};
use ael_core::{
    sandwich, whittle_fit, AdjustmentPolicy, ArmaSpec, Execution, NoiseKind, Order, Periodogram, Polyline,
};
use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::output::{num, render_csv, render_json, write_output, Format, Metadata, Table};
use crate::series::{format_series, read_series};

/// Machine output goes to `--out` when given and the summary to stdout;
/// otherwise the machine output takes stdout and the summary moves to stderr.
fn emit(out: Option<&Path>, text: &str, summary: &str) -> CliResult<()> {
    write_output(out, text)?;
    if out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

pub fn parse_order(s: &str) -> CliResult<Order> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let parsed: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
    match parsed.as_deref() {
        Some([p, q]) => Ok(Order::new(*p, *q)),
        _ => Err(CliError::Input(format!("order must look like `p,q`, got `{s}`"))),
    }
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("{what}: `{p}` is not a number")))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct PeriodogramArgs {
    /// Series file.
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

pub fn periodogram(args: &PeriodogramArgs) -> CliResult<()> {
    let series = read_series(&args.input)?;
    let pg = Periodogram::compute(&series);
    let meta = Metadata::new("periodogram")
        .with("input", args.input.display())
        .with("series_len", series.len())
        .with("seed", "none");
    let mut table = Table::new(&["j", "omega", "ordinate"]);
    for (j, (w, i)) in pg.iter().enumerate() {
        table.push(vec![(j + 1).to_string(), num(w), num(i)]);
    }
    let text = match args.format {
        Format::Csv => render_csv(&meta, &table)?,
        Format::Json => render_json(&meta, &[("ordinates", &table)], None)?,
    };
    let summary = format!("periodogram: T = {}, {} ordinates\n", series.len(), pg.len());
    emit(args.out.as_deref(), &text, &summary)
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub input: PathBuf,
    /// ARMA order as `p,q`.
    #[arg(long, default_value = "0,1")]
    pub order: String,
    /// Maximize the profile likelihood over the coefficients only.
    #[arg(long)]
    pub profile: bool,
    /// Recorded in the metadata; the fit itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let order = parse_order(&args.order)?;
    let series = read_series(&args.input)?;
    let pg = Periodogram::compute(&series);
    let fit = whittle_fit(&pg, order, args.profile, None)?;
    let diag = if order.n_coefficients() > 0 || !args.profile {
        match sandwich(&pg, order, &fit.estimate, args.profile, AdjustmentPolicy::None) {
            Ok(d) => json!({
                "v_hat": rows_of(&d.v_hat),
                "a_hat": rows_of(&d.a_hat),
                "sigma_hat": rows_of(&d.sigma_hat),
                "condition": d.condition,
            }),
            Err(e) => json!({ "error": e.to_string() }),
        }
    } else {
        Value::Null
    };
    let meta = Metadata::new("fit")
        .with("input", args.input.display())
        .with("order", order)
        .with("profile", args.profile)
        .with("seed", args.seed.map_or("none".to_string(), |s| s.to_string()));
    let payload = json!({
        "fit": {
            "order": [order.p, order.q],
            "profile": fit.profile,
            "coefficients": fit.coefficients(),
            "estimate": fit.estimate,
            "sigma2": fit.sigma2,
            "loglik": fit.loglik,
            "converged": fit.converged,
            "iterations": fit.iterations,
            "series_len": series.len(),
            "ordinates": pg.len(),
        },
        "diagnostics": diag,
    });
    let text = render_json(&meta, &[], Some(payload))?;
    if let Some(path) = &args.out {
        write_output(Some(path), &text)?;
    }
    print!("{text}");
    if !fit.converged {
        return Err(CliError::Numeric(format!(
            "Whittle fit did not converge after {} iterations",
            fit.iterations
        )));
    }
    Ok(())
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    El,
    Ael,
    Eb,
    Tb,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "1,1")]
    pub order: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Ael)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Scan box as `lo,hi` per coefficient, e.g. `0,1,0,1`.
    #[arg(long = "box", default_value = "0,1,0,1", allow_hyphen_values = true)]
    pub bounds: String,
    /// Nodes per axis, one value for all axes or one per axis.
    #[arg(long, default_value = "60")]
    pub steps: String,
    /// Bartlett constant for `--method tb`.
    #[arg(long)]
    pub tb_constant: Option<f64>,
    /// Pseudo-observation scale for `--method ael`.
    #[arg(long, default_value = "max-one-half-log")]
    pub adjustment: String,
    /// Grid output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Contour polylines as CSV (JSON output always embeds them).
    #[arg(long)]
    pub contours: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Evaluate nodes on one thread.
    #[arg(long)]
    pub sequential: bool,
}

pub fn region(args: &RegionArgs) -> CliResult<()> {
    let order = parse_order(&args.order)?;
    let k = order.n_coefficients();
    if k == 0 || k > 2 {
        return Err(CliError::Input(format!(
            "regions need one or two coefficients, order {order} has {k}"
        )));
    }
    let policy: AdjustmentPolicy = args.adjustment.parse()?;
    let method = match args.method {
        MethodArg::El => Method::El,
        MethodArg::Ael => Method::Ael(policy),
        MethodArg::Eb => Method::Eb,
        MethodArg::Tb => Method::Tb(
            args.tb_constant
                .ok_or_else(|| CliError::Input("--method tb requires --tb-constant".into()))?,
        ),
    };
    let bounds = parse_list(&args.bounds, "--box")?;
    if bounds.len() != 2 * k {
        return Err(CliError::Input(format!(
            "--box needs {} numbers for order {order}, got {}",
            2 * k,
            bounds.len()
        )));
    }
    let steps: Vec<usize> = args
        .steps
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("--steps: `{s}` is not a positive integer")))
        })
        .collect::<CliResult<_>>()?;
    let steps = match steps.len() {
        1 => vec![steps[0]; k],
        n if n == k => steps,
        n => return Err(CliError::Input(format!("--steps needs 1 or {k} values, got {n}"))),
    };
    let axes: Vec<Axis> = (0..k)
        .map(|d| Axis::new(bounds[2 * d], bounds[2 * d + 1], steps[d]))
        .collect::<Result<_, _>>()?;

    let series = read_series(&args.input)?;
    let pg = Periodogram::compute(&series);
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let grid = scan_region(&pg, order, &axes, method, args.alpha, exec)?;
    let contours = if k == 2 { extract_contour(&grid)? } else { Vec::new() };

    let meta = Metadata::new("region")
        .with("input", args.input.display())
        .with("order", order)
        .with("method", method)
        .with("policy", if matches!(method, Method::Ael(_)) { policy.to_string() } else { "none".into() })
        .with("alpha", args.alpha)
        .with("threshold", num(grid.threshold))
        .with("seed", "none");
    let table = grid_table(&grid);
    let contour_table = contour_table(&contours);
    let text = match args.format {
        Format::Csv => render_csv(&meta, &table)?,
        Format::Json => render_json(&meta, &[("grid", &table), ("contours", &contour_table)], None)?,
    };
    if let Some(path) = &args.contours {
        write_output(Some(path), &render_csv(&meta, &contour_table)?)?;
    }

    let mut summary = format!(
        "{method} region, order {order}, alpha {}: threshold {:.6}, {} of {} nodes inside, {} undefined, {} failed\n",
        args.alpha,
        grid.threshold,
        grid.inside_count(),
        grid.nodes.len(),
        grid.no_solution_count(),
        grid.nodes.iter().filter(|n| matches!(n.eval, Evaluation::Failed(_))).count(),
    );
    for (i, c) in contours.iter().enumerate() {
        summary.push_str(&format!(
            "  contour {i}: {} vertices, {}, area {:.6}\n",
            c.points.len(),
            if c.closed { "closed" } else { "open" },
            c.area()
        ));
    }
    if k == 1 {
        let lo = bounds[0].max(-1.0 + 1e-6);
        let hi = bounds[1].min(1.0 - 1e-6);
        if let Ok(iv) = interval_1d(&pg, order, method, args.alpha, Some((lo, hi))) {
            summary.push_str(&format!(
                "  interval [{:.6}, {:.6}] around estimate {:.6}{}{}\n",
                iv.lo,
                iv.hi,
                iv.estimate,
                if iv.lo_truncated { ", lower end truncated" } else { "" },
                if iv.hi_truncated { ", upper end truncated" } else { "" },
            ));
        }
    }
    emit(args.out.as_deref(), &text, &summary)
}

fn grid_table(grid: &RegionGrid) -> Table {
    let mut t = Table::new(&["node", "beta1", "beta2", "stat", "threshold", "status", "inside"]);
    for (i, node) in grid.nodes.iter().enumerate() {
        let beta2 = node.params.get(1).map_or(String::new(), |v| num(*v));
        let (stat, threshold, status) = match &node.eval {
            Evaluation::Value { stat, threshold } => (num(*stat), num(*threshold), "ok"),
            Evaluation::NoSolution => (String::new(), String::new(), "no-solution"),
            Evaluation::Failed(_) => (String::new(), String::new(), "failed"),
        };
        t.push(vec![
            i.to_string(),
            num(node.params[0]),
            beta2,
            stat,
            threshold,
            status.into(),
            node.eval.is_inside().to_string(),
        ]);
    }
    t
}

fn contour_table(contours: &[Polyline]) -> Table {
    let mut t = Table::new(&["polyline", "vertex", "beta1", "beta2", "closed"]);
    for (i, c) in contours.iter().enumerate() {
        for (j, (x, y)) in c.points.iter().enumerate() {
            t.push(vec![i.to_string(), j.to_string(), num(*x), num(*y), c.closed.to_string()]);
        }
    }
    t
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// TOML experiment plan.
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the plan's replication count.
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub sequential: bool,
}

pub fn coverage(args: &CoverageArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.plan).map_err(|e| CliError::io(args.plan.display().to_string(), e))?;
    let mut plan = ExperimentPlan::from_toml_str(&text)?;
    if let Some(r) = args.replications {
        plan.replications = r;
        plan.validate()?;
    }
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let report = run_coverage(&plan, exec)?;

    let meta = Metadata::new("coverage")
        .with("plan", args.plan.display())
        .with("seed", plan.seed)
        .with("policy", plan.adjustment)
        .with("centering", format!("{:?}", plan.centering).to_lowercase())
        .with("level", plan.level)
        .with("replications", plan.replications);
    let table = coverage_table(&report);
    let out = match args.format {
        Format::Csv => render_csv(&meta, &table)?,
        Format::Json => render_json(&meta, &[("cells", &table)], None)?,
    };
    emit(args.out.as_deref(), &out, &coverage_summary(&report))
}

fn param_label(p: &[f64]) -> String {
    p.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")
}

fn coverage_table(report: &CoverageReport) -> Table {
    let mut t = Table::new(&[
        "model",
        "n",
        "noise",
        "param",
        "method",
        "coverage",
        "se",
        "nosolution_count",
        "failure_count",
        "replications",
    ]);
    for row in &report.rows {
        t.push(vec![
            report.family.label().into(),
            row.key.n.to_string(),
            row.key.noise.label().into(),
            param_label(&row.key.param),
            row.method.label().into(),
            format!("{:.6}", row.coverage()),
            format!("{:.6}", row.standard_error()),
            row.no_solution().to_string(),
            row.failures().to_string(),
            row.replications().to_string(),
        ]);
    }
    t
}

fn coverage_summary(report: &CoverageReport) -> String {
    let mut s = format!(
        "{} coverage at nominal {} (seed {}, a_n policy {})\n",
        report.family, report.level, report.seed, report.adjustment
    );
    for row in &report.rows {
        s.push_str(&format!(
            "  n={:<4} {:<6} param={:<10} {:<3} {:.3} (se {:.3}, NoSolution {}, failures {})\n",
            row.key.n,
            row.key.noise.label(),
            param_label(&row.key.param),
            row.method.label(),
            row.coverage(),
            row.standard_error(),
            row.no_solution(),
            row.failures()
        ));
    }
    let paired = paired_summary(report);
    if paired.incomplete < paired.rows.len() {
        s.push_str("paired AEL - EL:\n");
        for r in &paired.rows {
            match r.difference {
                Some(d) => s.push_str(&format!(
                    "  n={:<4} {:<6} param={:<10} {:+.3} (AEL-only {}, EL-only {})\n",
                    r.key.n,
                    r.key.noise.label(),
                    param_label(&r.key.param),
                    d,
                    r.ael_only,
                    r.el_only
                )),
                None => s.push_str(&format!("  n={:<4} param={:<10} missing EL or AEL\n", r.key.n, param_label(&r.key.param))),
            }
        }
        s.push_str(&format!(
            "AEL closer to nominal in {} of {} cells\n",
            paired.ael_closer_count,
            paired.rows.len() - paired.incomplete
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ma1,
    Ar1,
    Arma11,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Normal,
    Chisq5,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Coefficients, `phi,theta` for ARMA(1,1).
    #[arg(long, allow_hyphen_values = true)]
    pub params: String,
    #[arg(long)]
    pub len: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Normal)]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let order = match args.model {
        ModelArg::Ma1 => Order::new(0, 1),
        ModelArg::Ar1 => Order::new(1, 0),
        ModelArg::Arma11 => Order::new(1, 1),
    };
    let coefs = parse_list(&args.params, "--params")?;
    if coefs.len() != order.n_coefficients() {
        return Err(CliError::Input(format!(
            "--params needs {} value(s) for order {order}",
            order.n_coefficients()
        )));
    }
    if region_violation(order, &coefs) > 0.0 {
        return Err(CliError::Input(format!("{coefs:?} is not stationary and invertible")));
    }
    let noise = match args.noise {
        NoiseArg::Normal => NoiseKind::StandardNormal,
        NoiseArg::Chisq5 => NoiseKind::CenteredChiSq5,
    };
    let spec = ArmaSpec::from_coefficients(order, &coefs, args.sigma2)?;
    let series = spec.simulate(args.len, noise, args.seed)?;
    let header = vec![
        ("tool".to_string(), "ael".to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("model".to_string(), format!("order {order} coefficients {coefs:?} sigma2 {}", args.sigma2)),
        ("noise".to_string(), noise.label().to_string()),
        ("seed".to_string(), args.seed.to_string()),
    ];
    let text = format_series(&series, &header);
    let summary = format!("simulated {} observations, seed {}\n", series.len(), args.seed);
    emit(args.out.as_deref(), &text, &summary)
}
