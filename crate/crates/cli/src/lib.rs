//! `tcd`: command-line front end. [`run`] parses argv, executes one subcommand and
//! returns the exit code together with the text that belongs on stdout and stderr.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 usage error, 3 I/O error.

pub mod report;

use clap::{Args, Parser, Subcommand};
use num_traits::{Signed, Zero};
use report::{CheckEntry, Report, StructureSummary};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use transverse_cd::cdconst::{
    auto_cd_params, carnot_cd_constants, diameter_closed_form, diameter_quadrature_report, geometric_constants,
};
use transverse_cd::exact::Q;
use transverse_cd::forms::{
    candidate_nus, cd_coefficients, falsify_with, improved_residuals, sample_jet, CDParams, FormEngine,
};
use transverse_cd::heat::{
    evolve_monitored, read_snapshot, run_heat_suite, smooth_bump, write_snapshot, CarnotChart, ChartConfig,
    EstimateReport, HeatError, HeatField, SuiteConfig,
};
use transverse_cd::structures::{
    catalog_model, parse_model_spec, validate_structure, yang_mills_check, StructureConstants, StructureFile,
    ValidationReport, CATALOG_NAMES,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser, Serialize)]
#[command(name = "tcd", version, about = "Curvature-dimension checks for sub-Riemannian structures with transverse symmetries")]
pub struct Cli {
    /// Write the JSON report here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// List the built-in models.
    Catalog,
    /// Skew-symmetry, Killing, Jacobi and bracket-generation checks.
    Validate {
        #[command(flatten)]
        source: Source,
        /// Write the structure in canonical file form.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Exact Bochner identities on random jets.
    Bochner {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Count jets violating CD(ρ₁, ρ₂, κ, d).
    CdCheck {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Search for one jet violating CD(ρ₁, ρ₂, κ, d).
    CdFalsify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// CD constants of a Carnot structure and the derived geometric constants.
    Constants {
        #[command(flatten)]
        source: OptionalSource,
        /// Explicit parameters for the geometric constants.
        #[arg(long)]
        params: Option<String>,
    },
    /// Yang-Mills condition δT = 0.
    YangMills {
        #[command(flatten)]
        source: Source,
    },
    /// Pointwise bounds on Γ(Γf) and Γ(Γ^Z f) on random jets.
    ImprovedBounds {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Evolve initial data under the discrete heat semigroup.
    HeatSim {
        #[command(flatten)]
        source: OptionalSource,
        #[command(flatten)]
        chart: ChartArgs,
        /// Final time.
        #[arg(long, default_value_t = 0.1)]
        time: f64,
        /// Initial data: a unit mass at the origin, or a smooth bump.
        #[arg(long, value_enum, default_value_t = Initial::Delta)]
        initial: Initial,
        /// Width of the bump.
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        /// Continue from a saved snapshot instead of fresh initial data.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Save the final field.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Full heat-semigroup estimate suite.
    Estimates {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        chart: ChartArgs,
        /// Tolerances are `c_tol · h`.
        #[arg(long, default_value_t = 1.0)]
        c_tol: f64,
    },
    /// Diameter bound, closed form and quadrature.
    Diameter {
        #[arg(long)]
        params: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Re-render a saved JSON report.
    Report {
        input: PathBuf,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct Source {
    /// Catalog model, e.g. `heisenberg:1` or `g_rho1:-1/2`.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    pub model: Option<String>,
    /// Structure file (JSON).
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OptionalSource {
    #[arg(long, conflicts_with = "file")]
    pub model: Option<String>,
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct Params {
    /// `rho1,rho2,kappa,d` or `auto` (Carnot structures only).
    #[arg(long, default_value = "auto")]
    pub params: String,
}

#[derive(Debug, Args, Serialize)]
pub struct Sampling {
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ChartArgs {
    /// Horizontal spacing.
    #[arg(long, default_value_t = 0.0625)]
    pub h: f64,
    #[arg(long, default_value_t = 3.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub period: f64,
}

impl ChartArgs {
    fn config(&self) -> ChartConfig {
        ChartConfig { h: self.h, half_width: self.half_width, vertical_period: self.period }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    Delta,
    Bump,
}

/// What the process should print and return.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

type Res<T> = Result<T, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: EXIT_PASS, stdout: text, stderr: String::new() }
            };
        }
    };
    let result = match &cli.command {
        Command::Report { input } => read_text(input).and_then(|t| Report::from_json(&t).map_err(Failure::Io)),
        cmd => execute(cmd),
    };
    match result {
        Ok(report) => finish(&cli, report),
        Err(Failure::Usage(m)) => Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {m}\n") },
        Err(Failure::Io(m)) => Outcome { code: EXIT_IO, stdout: String::new(), stderr: format!("error: {m}\n") },
    }
}

fn finish(cli: &Cli, report: Report) -> Outcome {
    if let Some(path) = &cli.out {
        if let Err(e) = fs::write(path, report.to_json()) {
            return Outcome { code: EXIT_IO, stdout: String::new(), stderr: format!("error: {}: {e}\n", path.display()) };
        }
    }
    let stdout = if cli.json { report.to_json() } else { report.render() };
    Outcome { code: if report.passed { EXIT_PASS } else { EXIT_FAILED }, stdout, stderr: String::new() }
}

fn read_text(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load(model: &Option<String>, file: &Option<PathBuf>) -> Res<Option<StructureConstants>> {
    match (model, file) {
        (Some(spec), _) => {
            let id = parse_model_spec(spec).map_err(usage)?;
            catalog_model(&id).map(Some).map_err(usage)
        }
        (None, Some(path)) => {
            let text = read_text(path)?;
            let sf = StructureFile::from_json(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            sf.to_structure().map(Some).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        (None, None) => Ok(None),
    }
}

fn require(source: &Source) -> Res<StructureConstants> {
    load(&source.model, &source.file)?.ok_or_else(|| usage("one of --model or --file is required"))
}

/// Explicit parameters, or `auto`: ρ₁ = 0 with ρ₂, κ from the Carnot eigenvalue problem.
fn resolve_params(spec: &str, sc: Option<&StructureConstants>) -> Res<CDParams> {
    if spec.trim() == "auto" {
        let sc = sc.ok_or_else(|| usage("--params auto needs a structure"))?;
        if !sc.is_carnot() {
            return Err(usage(format!("--params auto is only available for Carnot structures; {} is not one", sc.name)));
        }
        auto_cd_params(sc).map_err(usage)
    } else {
        CDParams::parse(spec).map_err(usage)
    }
}

fn config_echo(cmd: &Command) -> serde_json::Value {
    serde_json::to_value(cmd).expect("arguments serialize")
}

fn describe(report: &mut Report, sc: &StructureConstants) {
    report.structure = Some(StructureSummary { name: sc.name.clone(), d: sc.d(), h: sc.h() });
}

fn validation_entry(name: &str, anchor: &str, v: &ValidationReport) -> CheckEntry {
    let summary = if v.passed { "no violations".to_string() } else { format!("{} violation(s)", v.violations.len()) };
    let mut c = CheckEntry::new(name, anchor, v.passed, summary);
    for x in v.violations.iter().take(20) {
        c = c.line(format!("{} at {:?}: {}", x.check, x.indices, x.residual));
    }
    for d in &v.diagnostics {
        c = c.line(format!("note: {d}"));
    }
    c.detail(v)
}

fn estimate_entry(r: &EstimateReport) -> CheckEntry {
    let mut c = CheckEntry::new(
        &r.check,
        &r.anchor,
        r.passed,
        format!("worst residual {:.6e} (tolerance {:.3e}, {} samples)", r.worst_residual, r.tolerance, r.samples),
    );
    c.informational = r.informational;
    if let Some(t) = r.time {
        c = c.line(format!("at t = {t}"));
    }
    if let Some(x) = &r.location {
        c = c.line(format!("at {x:?}"));
    }
    for (k, v) in &r.extra {
        c = c.line(format!("{k} = {v:.6e}"));
    }
    for n in &r.notes {
        c = c.line(n.clone());
    }
    c.detail(r)
}

fn execute(cmd: &Command) -> Res<Report> {
    let name = match cmd {
        Command::Catalog => "catalog",
        Command::Validate { .. } => "validate",
        Command::Bochner { .. } => "bochner",
        Command::CdCheck { .. } => "cd-check",
        Command::CdFalsify { .. } => "cd-falsify",
        Command::Constants { .. } => "constants",
        Command::YangMills { .. } => "yang-mills",
        Command::ImprovedBounds { .. } => "improved-bounds",
        Command::HeatSim { .. } => "heat-sim",
        Command::Estimates { .. } => "estimates",
        Command::Diameter { .. } => "diameter",
        Command::Report { .. } => "report",
    };
    let seed = match cmd {
        Command::Bochner { sampling, .. }
        | Command::CdCheck { sampling, .. }
        | Command::CdFalsify { sampling, .. }
        | Command::ImprovedBounds { sampling, .. } => Some(sampling.seed),
        _ => None,
    };
    let mut report = Report::new(name, config_echo(cmd), seed);
    match cmd {
        Command::Catalog => catalog(&mut report),
        Command::Validate { source, emit } => validate(&mut report, source, emit.as_deref())?,
        Command::YangMills { source } => {
            let sc = require(source)?;
            describe(&mut report, &sc);
            report.push(validation_entry("yang_mills", "Yang-Mills condition: the divergence of the torsion vanishes", &yang_mills_check(&sc)));
        }
        Command::Bochner { source, sampling } => bochner(&mut report, source, sampling)?,
        Command::CdCheck { source, params, sampling } => cd_check(&mut report, source, params, sampling)?,
        Command::CdFalsify { source, params, sampling } => cd_falsify(&mut report, source, params, sampling)?,
        Command::Constants { source, params } => constants(&mut report, source, params.as_deref())?,
        Command::ImprovedBounds { source, params, sampling } => improved(&mut report, source, params, sampling)?,
        Command::HeatSim { source, chart, time, initial, sigma, resume, snapshot } => heat_sim(
            &mut report,
            HeatSimArgs { source, chart, time: *time, initial: *initial, sigma: *sigma, resume, snapshot },
        )?,
        Command::Estimates { source, params, chart, c_tol } => estimates(&mut report, source, params, chart, *c_tol)?,
        Command::Diameter { params, tol } => diameter(&mut report, params, *tol)?,
        Command::Report { .. } => unreachable!("handled by run"),
    }
    Ok(report)
}

fn catalog(report: &mut Report) {
    let mut c = CheckEntry::new("catalog", "", true, format!("{} model families", CATALOG_NAMES.len()));
    for (spec, about) in CATALOG_NAMES {
        c = c.line(format!("{spec:<30} {about}"));
    }
    report.push(c);
}

fn validate(report: &mut Report, source: &Source, emit: Option<&Path>) -> Res<()> {
    let sc = require(source)?;
    describe(report, &sc);
    if let Some(path) = emit {
        fs::write(path, StructureFile::from_structure(&sc).to_json())
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    report.push(validation_entry(
        "validate",
        "structure constants of an adapted frame: skew symmetry, Killing δ, Jacobi identity, bracket generation",
        &validate_structure(&sc),
    ));
    Ok(())
}

fn engine_for(sc: &StructureConstants) -> Res<FormEngine> {
    FormEngine::new(sc).map_err(usage)
}

fn bochner(report: &mut Report, source: &Source, s: &Sampling) -> Res<()> {
    let sc = require(source)?;
    describe(report, &sc);
    let engine = engine_for(&sc)?;
    let (mut bad_h, mut bad_v) = (0u64, 0u64);
    let mut first = None;
    for k in 0..s.trials {
        let jet = sample_jet(&engine, s.seed, k);
        let (h, v) = engine.bochner(&jet).map_err(usage)?;
        if !h.is_zero() {
            bad_h += 1;
        }
        if !v.is_zero() {
            bad_v += 1;
        }
        if first.is_none() && !(h.is_zero() && v.is_zero()) {
            first = Some((k, h.to_string(), v.to_string()));
        }
    }
    let ok = bad_h == 0 && bad_v == 0;
    let mut c = CheckEntry::new(
        "bochner",
        "Bochner identities for Γ₂ and Γ₂^Z (exact)",
        ok,
        format!("{} jets, {bad_h} nonzero horizontal and {bad_v} nonzero vertical residuals", s.trials),
    );
    if let Some((k, h, v)) = &first {
        c = c.line(format!("first failure at trial {k}: residuals {h}, {v}"));
    }
    report.push(c.detail(serde_json::json!({ "trials": s.trials, "nonzero_horizontal": bad_h, "nonzero_vertical": bad_v })));
    Ok(())
}

/// Smallest residual over the candidate ν and the ν attaining it.
fn min_residual(a: &Q, b: &Q, c: &Q) -> (Q, Q) {
    candidate_nus(a, b, c)
        .into_iter()
        .map(|nu| (a + b * &nu + c / &nu, nu))
        .min_by(|x, y| x.0.cmp(&y.0))
        .expect("the ν grid is never empty")
}

fn cd_check(report: &mut Report, source: &Source, p: &Params, s: &Sampling) -> Res<()> {
    let sc = require(source)?;
    let params = resolve_params(&p.params, Some(&sc))?;
    describe(report, &sc);
    report.params = Some(params.to_string());
    let engine = engine_for(&sc)?;
    let mut violations = 0u64;
    let mut worst: Option<(u64, Q, Q)> = None;
    for k in 0..s.trials {
        let jet = sample_jet(&engine, s.seed, k);
        let v = engine.evaluate(&jet).map_err(usage)?;
        let (a, b, c) = cd_coefficients(&v, &params);
        let (r, nu) = min_residual(&a, &b, &c);
        if r.is_negative() {
            violations += 1;
            if worst.as_ref().is_none_or(|w| r < w.1) {
                worst = Some((k, r, nu));
            }
        }
    }
    let mut c = CheckEntry::new(
        "cd",
        "generalized curvature-dimension inequality CD(ρ₁, ρ₂, κ, d)",
        violations == 0,
        format!("{params}: {} jets, {violations} violations", s.trials),
    );
    if let Some((k, r, nu)) = &worst {
        c = c.line(format!("most negative residual {r} at trial {k}, nu = {nu}"));
    }
    report.push(c.detail(serde_json::json!({ "trials": s.trials, "violations": violations })));
    Ok(())
}

fn cd_falsify(report: &mut Report, source: &Source, p: &Params, s: &Sampling) -> Res<()> {
    let sc = require(source)?;
    let params = resolve_params(&p.params, Some(&sc))?;
    describe(report, &sc);
    report.params = Some(params.to_string());
    let engine = engine_for(&sc)?;
    let anchor = "generalized curvature-dimension inequality CD(ρ₁, ρ₂, κ, d)";
    let entry = match falsify_with(&engine, &params, s.trials, s.seed) {
        None => CheckEntry::new("cd_falsify", anchor, true, format!("no counterexample in {} trials", s.trials)),
        Some(cx) => {
            let entries = cx.jet.nonzero_entries();
            let mut c = CheckEntry::new(
                "cd_falsify",
                anchor,
                false,
                format!("counterexample at trial {}: residual {} at nu = {}", cx.trial, cx.residual, cx.nu),
            );
            for (w, v) in &entries {
                // The empty word prints as "1".
                c = c.line(if w == "1" { format!("f = {v}") } else { format!("{w} f = {v}") });
            }
            c.detail(serde_json::json!({
                "trial": cx.trial,
                "nu": cx.nu.to_string(),
                "residual": cx.residual.to_string(),
                "jet": entries,
            }))
        }
    };
    report.push(entry);
    Ok(())
}

fn constants(report: &mut Report, source: &OptionalSource, explicit: Option<&str>) -> Res<()> {
    let sc = load(&source.model, &source.file)?;
    if sc.is_none() && explicit.is_none() {
        return Err(usage("constants needs --model, --file or --params"));
    }
    let mut params = None;
    if let Some(sc) = &sc {
        describe(report, sc);
        let c = carnot_cd_constants(sc).map_err(usage)?;
        let auto = auto_cd_params(sc).map_err(usage)?;
        report.push(
            CheckEntry::new(
                "carnot_constants",
                "CD(0, ρ₂, κ, d) for step-2 Carnot groups; ρ₂ and κ from the bracket tensor",
                true,
                format!("rho2 = {:.12}, kappa = {:.12}, H-type: {}", c.rho2, c.kappa, c.is_htype),
            )
            .line(format!("exact parameters: {auto}"))
            .detail(&c),
        );
        params = Some(auto);
    }
    if let Some(spec) = explicit {
        params = Some(resolve_params(spec, sc.as_ref())?);
    }
    let p = params.expect("one of the sources is present");
    let g = geometric_constants(&p);
    let show = |x: Option<f64>| x.map_or("not available".to_string(), |v| format!("{v:.12}"));
    report.params = Some(p.to_string());
    report.push(
        CheckEntry::new(
            "geometric_constants",
            "dimension D, exponent α and diameter bound derived from CD(ρ₁, ρ₂, κ, d)",
            true,
            format!("D = {}, alpha = {}, diameter bound = {}", p.big_d(), show(g.alpha), show(g.diameter_bound)),
        )
        .detail(&g),
    );
    Ok(())
}

fn improved(report: &mut Report, source: &Source, p: &Params, s: &Sampling) -> Res<()> {
    let sc = require(source)?;
    let params = resolve_params(&p.params, Some(&sc))?;
    describe(report, &sc);
    report.params = Some(params.to_string());
    let ym = yang_mills_check(&sc);
    if !ym.passed {
        report.push(validation_entry("yang_mills", "Yang-Mills condition, required by the improved bounds", &ym));
        return Ok(());
    }
    let engine = engine_for(&sc)?;
    let (mut negative, mut tight) = (0u64, 0u64);
    let mut first = None;
    for k in 0..s.trials {
        let jet = sample_jet(&engine, s.seed, k);
        let v = engine.evaluate(&jet).map_err(usage)?;
        let gg = engine.gamma_of_gamma(&jet).map_err(usage)?;
        let (a, b, c) = cd_coefficients(&v, &params);
        let nus = candidate_nus(&a, &b, &c);
        let nu = &nus[(k as usize) % nus.len()];
        let (r1, r2) = improved_residuals(&v, &gg, &params, nu).map_err(usage)?;
        if r1.is_negative() || r2.is_negative() {
            negative += 1;
            if first.is_none() {
                first = Some((k, r1.to_string(), r2.to_string(), nu.to_string()));
            }
        }
        if (r1.is_zero() || r2.is_zero()) && !(v.gamma.is_zero() && v.gamma_z.is_zero()) {
            tight += 1;
        }
    }
    let mut c = CheckEntry::new(
        "improved_bounds",
        "pointwise bounds on Γ(Γf) and Γ(Γ^Z f) under CD and the Yang-Mills condition",
        negative == 0,
        format!("{} jets, {negative} violations, {tight} exactly tight", s.trials),
    );
    if let Some((k, r1, r2, nu)) = &first {
        c = c.line(format!("first violation at trial {k}: residuals {r1}, {r2} at nu = {nu}"));
    }
    report.push(c.detail(serde_json::json!({ "trials": s.trials, "violations": negative, "tight": tight })));
    Ok(())
}

struct HeatSimArgs<'a> {
    source: &'a OptionalSource,
    chart: &'a ChartArgs,
    time: f64,
    initial: Initial,
    sigma: f64,
    resume: &'a Option<PathBuf>,
    snapshot: &'a Option<PathBuf>,
}

fn heat_error(e: HeatError) -> Failure {
    match e {
        HeatError::Snapshot(m) => Failure::Io(m),
        other => usage(other),
    }
}

fn heat_sim(report: &mut Report, a: HeatSimArgs<'_>) -> Res<()> {
    let field0 = match a.resume {
        Some(path) => {
            let f = fs::File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            read_snapshot(std::io::BufReader::new(f)).map_err(heat_error)?
        }
        None => {
            let sc = load(&a.source.model, &a.source.file)?
                .ok_or_else(|| usage("heat-sim needs --model, --file or --resume"))?;
            let chart = CarnotChart::new(&sc, a.chart.config()).map_err(heat_error)?;
            match a.initial {
                Initial::Delta => HeatField::delta(&chart, &vec![0.0; sc.d() + sc.h()]).map_err(heat_error)?,
                Initial::Bump => {
                    let (d, period) = (sc.d(), a.chart.period);
                    HeatField::from_fn(&chart, |x| smooth_bump(x, d, a.sigma, period))
                }
            }
        }
    };
    describe(report, field0.chart.structure());
    let start_total = field0.mass() + field0.absorbed;
    let (mut steps, mut min) = (0usize, f64::INFINITY);
    let field = evolve_monitored(&field0, a.time, None, |s| {
        steps += 1;
        min = min.min(s.min);
    })
    .map_err(heat_error)?;
    if steps == 0 {
        min = field.values.iter().copied().fold(f64::INFINITY, f64::min);
    }
    let total = field.mass() + field.absorbed;
    let drift = (total - start_total).abs() / start_total.max(f64::MIN_POSITIVE);
    let peak = field.values.iter().copied().fold(0.0, f64::max);
    report.push(
        CheckEntry::new(
            "mass_positivity",
            "heat semigroup is Markov: positivity and conservation of mass up to boundary absorption",
            min >= 0.0 && drift < 1e-9,
            format!("t = {} after {steps} steps; mass {:.12}, absorbed {:.3e}", field.time, field.mass(), field.absorbed),
        )
        .line(format!("relative drift of mass + absorbed: {drift:.3e}"))
        .line(format!("minimum value {min:.3e}, peak value {peak:.6e}"))
        .detail(serde_json::json!({ "time": field.time, "steps": steps, "mass": field.mass(), "absorbed": field.absorbed, "min": min, "peak": peak })),
    );
    if let Some(path) = a.snapshot {
        let f = fs::File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        write_snapshot(&field, &mut w).map_err(heat_error)?;
        std::io::Write::flush(&mut w).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn estimates(report: &mut Report, source: &Source, p: &Params, chart: &ChartArgs, c_tol: f64) -> Res<()> {
    let sc = require(source)?;
    if !sc.is_carnot() {
        return Err(usage(format!("the heat suite runs on step-2 Carnot structures; {} is not one", sc.name)));
    }
    let params = resolve_params(&p.params, Some(&sc))?;
    describe(report, &sc);
    report.params = Some(params.to_string());
    let config = chart.config();
    let cfg = SuiteConfig {
        coarse_chart: ChartConfig { h: 2.0 * config.h, ..config.clone() },
        chart: config,
        c_tol,
        ..SuiteConfig::default()
    };
    let suite = run_heat_suite(&sc, &params, &cfg).map_err(heat_error)?;
    for r in &suite.reports {
        report.push(estimate_entry(r));
    }
    Ok(())
}

fn diameter(report: &mut Report, params: &str, tol: f64) -> Res<()> {
    let p = resolve_params(params, None)?;
    report.params = Some(p.to_string());
    let bound = diameter_closed_form(&p).map_err(usage)?;
    let q = diameter_quadrature_report(&p, tol).map_err(usage)?;
    let delta = (bound - q.value).abs();
    report.push(
        CheckEntry::new(
            "diameter",
            "Bonnet-Myers type diameter bound for ρ₁ > 0",
            delta < 1e-6,
            format!("bound {bound:.10}, quadrature {:.10}, delta {delta:.3e}", q.value),
        )
        .line(format!("quadrature: {} intervals, error estimate {:.3e}, tail bound {:.3e}", q.intervals, q.error_estimate, q.tail_bound))
        .detail(&q),
    );
    Ok(())
}
