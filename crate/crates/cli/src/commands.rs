//! Argument parsing and the six commands.

use adchart_core::adapt::{
    build_adapted_chart, chart_grid, density_series, euclidean_density_data, verify_chart, AdaptedChart, ChartConfig,
    TANGENCY_TOL,
};
use adchart_core::fields::{
    bracket_closure, check_zeta, closure_rank_check, fit_structure_coeffs, numerical_rank, ClosureOptions, FieldSystem,
    FitOptions,
};
use adchart_core::flow::{BallEstimate, BallOptions, Binning, Flow, FlowOptions, IntegratorOptions};
use adchart_core::scaling::{
    lambda, leaf_scaling_with, single_parameter_grid, volume_and_doubling_with, LeafOptions, VolumeOptions,
};
use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::parallel::{par_reachable_set, pool};
use crate::report::{digest, ErrorEntry, ReportDocument, Status};
use crate::spec_doc::{load_spec_text, parse_spec, FieldSpecDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    /// Bracket closure and fitted structure coefficients.
    Brackets,
    /// Adapted chart with verification residuals.
    Chart,
    /// Chart plus the Lebesgue-induced density.
    Density,
    /// Sampled ball volume at one scale.
    Ball,
    /// Volume / Λ table over a scale grid.
    ScaleTable,
    /// Full invariant suite; exit 2 if any check fails.
    Verify,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Brackets => "brackets",
            CommandKind::Chart => "chart",
            CommandKind::Density => "density",
            CommandKind::Ball => "ball",
            CommandKind::ScaleTable => "scale-table",
            CommandKind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningArg {
    Auto,
    Ambient,
    Linear,
    Chart,
}

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "adchart", version, about = "Adapted analytic charts and scaling data for vector-field families")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: CommandKind,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct Options {
    /// Spec file, or the name of a bundled spec (coordinate, heisenberg, grushin, grushin_pair, rotation).
    #[arg(long)]
    pub spec: String,
    /// Base point; defaults to the spec's base_point.
    #[arg(long, num_args = 1..)]
    pub center: Option<Vec<f64>>,
    /// Scale δ; repeat once per parameter for multi-parameter families.
    #[arg(long)]
    pub delta: Vec<f64>,
    /// Comma-separated scale grid for scale-table.
    #[arg(long, value_delimiter = ',')]
    pub delta_grid: Vec<f64>,
    /// Truncation degree M; defaults to the spec's truncation.
    #[arg(long)]
    pub trunc: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub zeta: f64,
    /// Chart domain bound η̂.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    pub paths: usize,
    /// Cell size of the ball occupancy grid, in binning coordinates.
    #[arg(long, default_value_t = 1.0 / 32.0)]
    pub grid: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<std::path::PathBuf>,
    /// Side-emit a CSV table (ball endpoints or scale table).
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<std::path::PathBuf>,
    /// Residual tolerance for verify.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Worker threads for ball sampling; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
    /// Bracket closure depth m.
    #[arg(long, default_value_t = 2)]
    pub depth: u32,
    #[arg(long, value_enum, default_value_t = BinningArg::Auto)]
    pub binning: BinningArg,
    /// Polynomial degree of fitted structure coefficients.
    #[arg(long, default_value_t = 4)]
    pub fit_degree: usize,
    /// Constant pieces per control path.
    #[arg(long, default_value_t = 8)]
    pub pieces: usize,
}

/// A finished command: the report plus an optional CSV side table.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ReportDocument,
    pub csv: Option<String>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.report.status.exit_code()
    }
}

struct Loaded {
    doc: FieldSpecDocument,
    center: Vec<f64>,
    trunc: usize,
}

struct Partial {
    results: Value,
    diagnostics: Value,
    warnings: Vec<String>,
    csv: Option<String>,
    status: Status,
}

impl Partial {
    fn ok(results: Value, diagnostics: Value) -> Self {
        Partial { results, diagnostics, warnings: Vec::new(), csv: None, status: Status::Ok }
    }
}

/// Runs a command. Errors become structured report entries.
pub fn run(cli: &Cli) -> RunOutput {
    let arguments = serde_json::to_value(cli).unwrap_or(Value::Null);
    let mut report = ReportDocument::new(cli.command.name(), arguments);
    let text = load_spec_text(&cli.options.spec);
    if let Ok(t) = &text {
        report.inputs_digest = Some(digest(t));
    }
    let outcome = text.and_then(|t| load(&t, &cli.options)).and_then(|l| dispatch(cli, &l));
    match outcome {
        Ok(p) => {
            report.results = p.results;
            report.diagnostics = p.diagnostics;
            report.warnings.extend(p.warnings);
            report.status = p.status;
            RunOutput { report, csv: p.csv }
        }
        Err(e) => {
            report.status = if e.exit_code() == 2 { Status::HypothesisFailure } else { Status::Error };
            report.error = Some(ErrorEntry { kind: e.kind().to_string(), message: e.to_string() });
            RunOutput { report, csv: None }
        }
    }
}

fn load(text: &str, o: &Options) -> Result<Loaded> {
    let doc = parse_spec(text)?;
    let center = o.center.clone().unwrap_or_else(|| doc.base_point.clone());
    if center.len() != doc.dimension {
        return Err(CliError::Arguments(format!(
            "--center has {} values for dimension {}",
            center.len(),
            doc.dimension
        )));
    }
    let trunc = o.trunc.unwrap_or(doc.truncation);
    if !(o.zeta > 0.0 && o.zeta <= 1.0) {
        return Err(CliError::Arguments(format!("--zeta must lie in (0, 1], got {}", o.zeta)));
    }
    Ok(Loaded { doc, center, trunc })
}

fn dispatch(cli: &Cli, l: &Loaded) -> Result<Partial> {
    let o = &cli.options;
    match cli.command {
        CommandKind::Brackets => brackets(o, l),
        CommandKind::Chart => chart(o, l),
        CommandKind::Density => density(o, l),
        CommandKind::Ball => ball(o, l),
        CommandKind::ScaleTable => scale_table(o, l),
        CommandKind::Verify => verify(o, l),
    }
}

fn chart_config(o: &Options, trunc: usize) -> ChartConfig {
    ChartConfig {
        zeta: o.zeta,
        max_degree: trunc,
        eta_hat: o.eta,
        fit_poly_degree: o.fit_degree,
        ..ChartConfig::default()
    }
}

fn ball_options(o: &Options) -> BallOptions {
    let binning = match o.binning {
        BinningArg::Auto => None,
        BinningArg::Ambient => Some(Binning::Ambient),
        BinningArg::Linear => Some(Binning::Linear),
        BinningArg::Chart => Some(Binning::Chart),
    };
    BallOptions {
        n_paths: o.paths,
        pieces: o.pieces,
        seed: o.seed,
        cell_size: o.grid,
        binning,
        ..BallOptions::default()
    }
}

fn delta_of(o: &Options, doc: &FieldSpecDocument) -> Result<Vec<f64>> {
    match o.delta.len() {
        0 => Err(CliError::Arguments("--delta is required".into())),
        k if k == 1 || k == doc.parameters => Ok(o.delta.clone()),
        k => Err(CliError::Arguments(format!("{k} --delta values for {} parameters", doc.parameters))),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn brackets(o: &Options, l: &Loaded) -> Result<Partial> {
    let m = o.depth;
    // each bracket costs one degree of truncation, and the rank check goes to m + 1
    let gens = l.doc.weighted_fields(&l.center, l.trunc + m as usize + 1)?;
    let copts = ClosureOptions { max_degree: Some(l.trunc), ..ClosureOptions::default() };
    let (_, rank) = closure_rank_check(&gens, m, &l.center, copts)?;
    let closure = bracket_closure(&gens, m, copts)?;
    let fit = fit_structure_coeffs(&closure, &FitOptions::around(&l.center, closure.radius(), o.fit_degree))?;
    let q = closure.q();
    let mut coeffs = Vec::new();
    for j in 0..q {
        for k in 0..q {
            for i in 0..q {
                let s = fit.get(j, k, i);
                if s.max_abs_coeff() > 1e-12 {
                    coeffs.push(json!({ "j": j, "k": k, "l": i, "series": s }));
                }
            }
        }
    }
    let fields: Vec<Value> =
        closure.fields().iter().map(|f| json!({ "name": f.field.name, "degree": f.degree })).collect();
    let spec = FieldSpecDocument::from_system(&closure, &l.center, l.trunc)?;
    let results = json!({
        "rank": rank,
        "ambient_dim": closure.ambient_dim(),
        "fields": fields,
        "structure_coefficients": coeffs,
        "closure_spec": spec,
    });
    let diagnostics = json!({
        "fit_residual": fit.max_residual,
        "fit_verify_residual": fit.verify_residual,
        "degree_filtered": fit.degree_filtered,
    });
    let mut p = Partial::ok(results, diagnostics);
    if l.doc.polynomial_degree() > l.trunc {
        p.warnings.push(format!(
            "spec polynomials have degree {} above the truncation {}; the closure spec is truncated",
            l.doc.polynomial_degree(),
            l.trunc
        ));
    }
    Ok(p)
}

fn build_chart(o: &Options, l: &Loaded) -> Result<(FieldSystem, AdaptedChart)> {
    let sys = l.doc.system(&l.center, l.trunc)?;
    let chart = build_adapted_chart(&sys, &l.center, &chart_config(o, l.trunc))?;
    Ok((sys, chart))
}

fn verify_grid(chart: &AdaptedChart) -> Vec<Vec<f64>> {
    chart_grid(chart.n, chart.eta1 / 2.0, 5)
}

fn chart(o: &Options, l: &Loaded) -> Result<Partial> {
    let (_, chart) = build_chart(o, l)?;
    let ver = verify_chart(&chart, &verify_grid(&chart))?;
    let diagnostics = to_value(&chart.diagnostics)?;
    Ok(Partial::ok(json!({ "chart": chart, "verify": ver }), diagnostics))
}

fn density(o: &Options, l: &Loaded) -> Result<Partial> {
    let (_, chart) = build_chart(o, l)?;
    let dd = density_series(&chart, &euclidean_density_data(&chart)?)?;
    let results = json!({
        "j0": chart.j0,
        "n": chart.n,
        "eta1": chart.eta1,
        "h0": chart.h0,
        "density": dd,
    });
    Ok(Partial::ok(results, to_value(&chart.diagnostics)?))
}

#[derive(Serialize)]
struct BallSummary<'a> {
    center: &'a [f64],
    delta: &'a [f64],
    binning: Binning,
    dim: usize,
    j0: &'a [usize],
    cell_size: f64,
    occupied_cells: usize,
    dilated_cells: usize,
    volume_lower: f64,
    volume_upper: f64,
    n_paths: u64,
    n_failed: u64,
}

impl<'a> From<&'a BallEstimate> for BallSummary<'a> {
    fn from(b: &'a BallEstimate) -> Self {
        BallSummary {
            center: &b.center,
            delta: &b.delta,
            binning: b.binning,
            dim: b.dim,
            j0: &b.j0,
            cell_size: b.cell_size,
            occupied_cells: b.occupied_cells,
            dilated_cells: b.dilated_cells,
            volume_lower: b.volume_lower,
            volume_upper: b.volume_upper,
            n_paths: b.n_paths,
            n_failed: b.n_failed,
        }
    }
}

fn ball(o: &Options, l: &Loaded) -> Result<Partial> {
    let delta = delta_of(o, &l.doc)?;
    let sys = l.doc.system(&l.center, l.trunc)?;
    let pool = pool(o.jobs)?;
    let est = par_reachable_set(&pool, &sys, &l.center, &delta, &ball_options(o))?;
    let lam = lambda(&sys, &l.center, &delta)?;
    let results = json!({
        "ball": BallSummary::from(&est),
        "lambda": lam,
        "ratio_lower": est.volume_lower / lam.value,
        "ratio_upper": est.volume_upper / lam.value,
    });
    let mut p = Partial::ok(results, Value::Null);
    if o.csv.is_some() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record((0..l.doc.dimension).map(|i| format!("x{i}")))?;
        for e in &est.endpoints {
            w.write_record(e.iter().map(|v| v.to_string()))?;
        }
        p.csv = Some(csv_string(w)?);
    }
    Ok(p)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn scale_table(o: &Options, l: &Loaded) -> Result<Partial> {
    let deltas = if o.delta_grid.is_empty() { vec![0.4, 0.2, 0.1, 0.05] } else { o.delta_grid.clone() };
    let grid = single_parameter_grid(&deltas);
    let sys = l.doc.system(&l.center, l.trunc)?;
    let pool = pool(o.jobs)?;
    let estimator = |s: &FieldSystem, x: &[f64], d: &[f64], b: &BallOptions| par_reachable_set(&pool, s, x, d, b);
    // (δ, Λ, vol_lower, vol_upper, ratio)
    let mut rows: Vec<(f64, f64, f64, f64, f64)> = Vec::new();
    let mut doubling: Vec<Option<f64>> = Vec::new();
    let rank = numerical_rank(&sys, &l.center);
    let results = if rank == l.doc.dimension {
        let opts = VolumeOptions { ball: ball_options(o), ..VolumeOptions::default() };
        let table = volume_and_doubling_with(&sys, &l.center, &grid, &opts, estimator)?;
        for r in &table.rows {
            rows.push((r.delta[0], r.lambda, r.vol_lower, r.vol_upper, r.ratio));
            doubling.push(r.doubling);
        }
        json!({ "mode": "full_rank", "table": table })
    } else {
        let gens = l.doc.weighted_fields(&l.center, l.trunc + o.depth as usize + 1)?;
        let mut lopts = LeafOptions {
            closure: ClosureOptions { max_degree: Some(l.trunc), ..ClosureOptions::default() },
            chart: ChartConfig { verify_points: 0, ..chart_config(o, l.trunc) },
            ..LeafOptions::default()
        };
        lopts.ball = BallOptions { binning: lopts.ball.binning, ..ball_options(o) };
        if o.binning != BinningArg::Auto {
            lopts.ball.binning = ball_options(o).binning;
        }
        let mut leaves = Vec::new();
        for d in &grid {
            let ls = leaf_scaling_with(&gens, &l.center, d, o.depth, &lopts, estimator)?;
            rows.push((d[0], ls.lambda.value, ls.vol_lower, ls.vol_upper, ls.ratio));
            leaves.push(json!({
                "delta": ls.delta,
                "n0": ls.point.n0,
                "closure_size": ls.closure_size,
                "lambda": ls.lambda,
                "vol_lower": ls.vol_lower,
                "vol_upper": ls.vol_upper,
                "ratio": ls.ratio,
                "span_min": ls.span_min,
                "density_at_x0": ls.density.as_ref().map(|dd| dd.nu_at_x0),
            }));
        }
        for (i, r) in rows.iter().enumerate() {
            let partner = rows.iter().position(|s| (s.0 - 2.0 * r.0).abs() <= 1e-9 * s.0);
            doubling.push(partner.map(|p| rows[p].2 / rows[i].2));
        }
        json!({ "mode": "leaf", "rank": rank, "rows": leaves, "doubling": doubling })
    };
    let mut p = Partial::ok(results, Value::Null);
    if o.csv.is_some() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "delta", "lambda", "vol_lower", "vol_upper", "ratio", "doubling"])?;
        let x = join(&l.center);
        for (r, d) in rows.iter().zip(&doubling) {
            w.write_record([
                x.clone(),
                r.0.to_string(),
                r.1.to_string(),
                r.2.to_string(),
                r.3.to_string(),
                r.4.to_string(),
                d.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        p.csv = Some(csv_string(w)?);
    }
    Ok(p)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tol: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, tol: f64) -> Check {
    Check { name, value, tol, pass: value.is_finite() && value <= tol }
}

fn verify(o: &Options, l: &Loaded) -> Result<Partial> {
    let (sys, chart) = build_chart(o, l)?;
    let prepared = chart.prepared_system().cloned().unwrap_or(sys);
    let ver = verify_chart(&chart, &verify_grid(&chart))?;
    let dd = density_series(&chart, &euclidean_density_data(&chart)?)?;
    let tol = o.tol;
    let mut checks = vec![
        check("fixed_point_residual", ver.fixed_point_residual, tol),
        check("ode_residual", ver.ode_residual, tol),
        check("h0_det_residual", ver.h0_det_residual, tol),
        check("basis_residual", ver.basis_residual, tol),
        check("pullback_max_err", ver.pullback_max_err, 1e-6),
        check("a_norm", ver.a_norm, 0.5 + 1e-12),
        check("f0_trace_mismatch", dd.f0_trace_mismatch, 1e-8),
    ];
    if let Some(v) = ver.det_dphi_vs_h {
        checks.push(check("det_dphi_vs_h", v, 1e-8));
    }
    if let Some(v) = ver.divergence_residual {
        checks.push(check("divergence_residual", v, 1e-8));
    }
    let sign = if dd.sign_constant == Some(false) { 1.0 } else { 0.0 };
    checks.push(check("density_sign_change", sign, 0.0));
    let zeta_ratio = check_zeta(&prepared, &chart.j0, &l.center, o.zeta, TANGENCY_TOL)?;
    checks.push(check("zeta_ratio", zeta_ratio, 1.0 / o.zeta + 1e-10));
    let (group, jac) = flow_checks(&prepared, &chart, &l.center)?;
    let flow_tol = 1e-5f64.max(10.0 * IntegratorOptions::default().rtol);
    checks.push(check("flow_group_law", group, flow_tol));
    checks.push(check("flow_jacobian_fd", jac, flow_tol));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let results = json!({ "checks": checks, "failed": failed, "verify": ver });
    let mut p = Partial::ok(results, to_value(&chart.diagnostics)?);
    if !failed.is_empty() {
        p.status = Status::HypothesisFailure;
    }
    Ok(p)
}

/// Group law `exp(sA)exp(tA) = exp((s+t)A)` and a central-difference check of
/// the transported Jacobian, along each reference field at half the chart radius.
fn flow_checks(sys: &FieldSystem, chart: &AdaptedChart, x0: &[f64]) -> Result<(f64, f64)> {
    let flow = Flow::new(sys);
    let opts = FlowOptions { jacobian: true, ..FlowOptions::default() };
    let dim = x0.len();
    let (mut group, mut jac) = (0.0f64, 0.0f64);
    for &j in &chart.j0 {
        let mut a = vec![0.0; sys.q()];
        a[j] = 0.5 * chart.eta1;
        let whole = flow.exp(&a, x0, &opts)?;
        let first = flow.exp(&a.iter().map(|v| 0.4 * v).collect::<Vec<_>>(), x0, &opts)?;
        let second = flow.exp(&a.iter().map(|v| 0.6 * v).collect::<Vec<_>>(), &first.endpoint, &opts)?;
        if !(whole.success && first.success && second.success) {
            return Err(adchart_core::Error::Flow("verification flow left the working box".into()).into());
        }
        let scale = whole.endpoint.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            group = group.max((second.endpoint[i] - whole.endpoint[i]).abs() / scale);
        }
        let jm = whole.jacobian.as_ref().expect("jacobian requested");
        let h = 1e-6;
        for k in 0..dim {
            let mut xp = x0.to_vec();
            let mut xm = x0.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let p = flow.exp(&a, &xp, &opts)?.endpoint;
            let m = flow.exp(&a, &xm, &opts)?.endpoint;
            for i in 0..dim {
                jac = jac.max(((p[i] - m[i]) / (2.0 * h) - jm.get(i, k)).abs());
            }
        }
    }
    Ok((group, jac))
}
