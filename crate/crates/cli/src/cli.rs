//! Command-line interface: argument definitions and command dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use shotdesk_core::api::{self, EvaluateRequest, RemapRequest, TransitionContext, TransitionRequest};
use shotdesk_core::{
    fix_window, check_window, ingest, log_samples, Check, ComfortLimits, CutSpec, Depth, Error,
    FieldWidth, Geometry, MaskSpec, ProjectDoc, RampProfile, RemapCurve, SolveRequest, Status,
    WindowReport,
};

/// Exit code for usage and ingestion errors.
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "shotdesk", version, about = "Stereoscopic shot geometry planner")]
pub struct Cli {
    /// Project document (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    pub project: Option<PathBuf>,
    /// Comfort limits (JSON); overrides the project's limits.
    #[arg(long, global = true, value_name = "FILE")]
    pub limits: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Comfort, transition and window report for a whole project.
    Analyze,
    /// Tabulate perceived depth against scene depth.
    Curve(CurveArgs),
    /// Solve for a rig.
    Solve(SolveArgs),
    /// Tabulate a disparity remapping curve.
    Remap(RemapArgs),
    /// Plan the shift ramps softening a cut.
    Transition(TransitionArgs),
    /// Smallest floating-window masks clearing every edge violation.
    FixWindow(FixWindowArgs),
    /// Run the /v1 evaluation service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Shooting geometry as `interaxial,distance,width` in meters.
    #[arg(long, value_parser = parse_geometry, conflicts_with = "shot")]
    pub shoot: Option<Geometry>,
    /// Take the rig and shift of this project shot.
    #[arg(long)]
    pub shot: Option<String>,
    /// Viewing geometry `interocular,distance,width`; defaults to the project's.
    #[arg(long, value_parser = parse_geometry)]
    pub view: Option<Geometry>,
    /// Extra image shift (fraction of width).
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<f64>,
    /// Explicit depths, comma separated; `inf` for infinity.
    #[arg(long, value_delimiter = ',', value_parser = parse_depth)]
    pub samples: Vec<Depth>,
    #[arg(long, default_value_t = 1.0)]
    pub z_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub z_max: f64,
    #[arg(long, default_value_t = 50)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Full request as JSON; other flags are ignored.
    #[arg(long, value_name = "FILE")]
    pub request: Option<PathBuf>,
    #[arg(long, value_parser = parse_geometry)]
    pub view: Option<Geometry>,
    #[arg(long, value_parser = parse_depth)]
    pub near: Option<Depth>,
    #[arg(long, value_parser = parse_depth)]
    pub subject: Option<Depth>,
    #[arg(long, value_parser = parse_depth, default_value = "inf")]
    pub far: Depth,
    #[arg(long, default_value_t = 1.0)]
    pub roundness: f64,
    /// Convergence-plane width in meters; free when omitted.
    #[arg(long)]
    pub width: Option<f64>,
    /// Pin the convergence distance instead of using the subject distance.
    #[arg(long)]
    pub convergence: Option<f64>,
    #[arg(long)]
    pub allow_shift: bool,
}

#[derive(Debug, Args)]
pub struct RemapArgs {
    /// Curve parameters as JSON (`{"family": ...}`), or a curve CSV.
    #[arg(long, value_name = "FILE")]
    pub curve: PathBuf,
    /// Input disparities, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub samples: Vec<f64>,
    #[arg(long, default_value_t = -0.03, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, default_value_t = 0.03, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long, default_value_t = 61)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    /// Outgoing shot id (with --project).
    #[arg(long = "from-shot", requires = "to_shot")]
    pub from_shot: Option<String>,
    /// Incoming shot id (with --project).
    #[arg(long = "to-shot")]
    pub to_shot: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub d1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d2: Option<f64>,
    #[arg(long, default_value_t = 24.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ramp_seconds: f64,
    #[arg(long, value_enum, default_value_t = ProfileArg::Linear)]
    pub profile: ProfileArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Linear,
    EaseInOut,
}

impl From<ProfileArg> for RampProfile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Linear => RampProfile::Linear,
            ProfileArg::EaseInOut => RampProfile::EaseInOut,
        }
    }
}

#[derive(Debug, Args)]
pub struct FixWindowArgs {
    /// Only this shot.
    #[arg(long)]
    pub shot: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8787")]
    pub bind: String,
}

fn parse_geometry(s: &str) -> Result<Geometry, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [b, h, w] => Geometry::new(*b, *h, *w).map_err(|e| e.to_string()),
        _ => Err(format!("expected `interaxial,distance,width`, got `{s}`")),
    }
}

fn parse_depth(s: &str) -> Result<Depth, String> {
    match s.trim() {
        "inf" | "infinity" => Ok(Depth::Infinite),
        t => {
            let z: f64 = t.parse().map_err(|e| format!("`{t}`: {e}"))?;
            Depth::new(z).map_err(|e| e.to_string())
        }
    }
}

/// What a command produced: text for the output and the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub exit: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, exit: 0 }
    }
}

/// A command failure, always a usage or ingestion error.
#[derive(Debug)]
pub struct Failure(pub String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<Outcome, Failure>;

struct Context {
    project: Option<ProjectDoc>,
    limits: Option<ComfortLimits>,
    format: Option<Format>,
}

impl Context {
    fn load(cli: &Cli) -> Result<Self, Failure> {
        let project = cli.project.as_deref().map(ingest).transpose()?;
        let limits = match &cli.limits {
            Some(path) => {
                let text = read(path)?;
                let limits: ComfortLimits = api::parse(&text)?;
                limits.validate()?;
                Some(limits)
            }
            None => None,
        };
        Ok(Self {
            project,
            limits,
            format: cli.format,
        })
    }

    fn project(&self) -> Result<&ProjectDoc, Failure> {
        self.project
            .as_ref()
            .ok_or_else(|| Failure("this command needs --project".into()))
    }

    fn limits(&self) -> ComfortLimits {
        self.limits
            .or(self.project.as_ref().map(|p| p.limits))
            .unwrap_or_default()
    }

    fn view(&self, flag: Option<Geometry>) -> Result<Geometry, Failure> {
        flag.or(self.project.as_ref().map(|p| p.view))
            .ok_or_else(|| Failure("give --view or a --project".into()))
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn csv_text<F>(header: &[&str], fill: F) -> Result<String, Failure>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Failure(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure(e.to_string()))
}

/// Runs a parsed command line. Serving blocks until interrupted.
pub fn run(cli: &Cli) -> CmdResult {
    let ctx = Context::load(cli)?;
    match &cli.command {
        Command::Analyze => analyze(&ctx),
        Command::Curve(a) => curve(&ctx, a),
        Command::Solve(a) => solve(&ctx, a),
        Command::Remap(a) => remap(&ctx, a),
        Command::Transition(a) => transition(&ctx, a),
        Command::FixWindow(a) => fix_windows(&ctx, a),
        Command::Serve(a) => serve(&ctx, a),
    }
}

fn status_token(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Warn => "WARN",
        Status::Fail => "FAIL",
    }
}

fn analyze(ctx: &Context) -> CmdResult {
    let mut doc = ctx.project()?.clone();
    if let Some(limits) = ctx.limits {
        doc.limits = limits;
    }
    let report = shotdesk_core::analyze(&doc)?;
    let text = match ctx.format(Format::Json) {
        Format::Json => api::to_json(&report),
        Format::Csv => {
            let mut header = vec!["kind", "id", "status"];
            let names: Vec<String> = Check::ALL.iter().map(|c| format!("{c:?}").to_lowercase()).collect();
            header.extend(names.iter().map(String::as_str));
            header.push("window_violations");
            csv_text(&header, |w| {
                for s in &report.shots {
                    let mut row = vec!["shot".to_string(), s.id.clone(), status_token(s.status).into()];
                    row.extend(Check::ALL.iter().map(|&c| status_token(s.comfort.status(c)).to_string()));
                    row.push(s.window.as_ref().map_or(0, |w| w.violations.len()).to_string());
                    w.write_record(&row)?;
                }
                for c in &report.cuts {
                    let mut row = vec!["cut".to_string(), format!("{}->{}", c.from, c.to), status_token(c.status).into()];
                    row.extend(Check::ALL.iter().map(|&k| status_token(c.validation.status(k)).to_string()));
                    row.push(String::new());
                    w.write_record(&row)?;
                }
                Ok(())
            })?
        }
    };
    Ok(Outcome {
        text,
        exit: report.exit_code,
    })
}

fn curve(ctx: &Context, a: &CurveArgs) -> CmdResult {
    let view = ctx.view(a.view)?;
    let (shoot, shot_shift) = match (&a.shoot, &a.shot) {
        (Some(g), _) => (*g, 0.0),
        (None, Some(id)) => {
            let shot = ctx
                .project()?
                .shot(id)
                .ok_or_else(|| Failure(format!("no shot `{id}` in the project")))?;
            (shot.shoot, shot.shift_frac)
        }
        (None, None) => return Err(Failure("give --shoot or --shot".into())),
    };
    let samples = if a.samples.is_empty() {
        log_samples(a.z_min, a.z_max, a.count)?
    } else {
        a.samples.clone()
    };
    let req = EvaluateRequest {
        shoot,
        view,
        shift_frac: a.shift.unwrap_or(shot_shift),
        z_samples_m: samples,
    };
    let resp = api::evaluate(&req)?;
    Ok(Outcome::ok(match ctx.format(Format::Csv) {
        Format::Csv => shotdesk_core::curve::to_csv(&resp.rows),
        Format::Json => api::to_json(&resp),
    }))
}

fn solve(ctx: &Context, a: &SolveArgs) -> CmdResult {
    let req = match &a.request {
        Some(path) => api::parse::<SolveRequest>(&read(path)?)?,
        None => {
            let view = ctx.view(a.view)?;
            let subject = a.subject.ok_or_else(|| Failure("give --subject (or --request)".into()))?;
            let near = a.near.ok_or_else(|| Failure("give --near (or --request)".into()))?;
            let mut req = SolveRequest::new(view, near, subject, a.far);
            req.target_roundness = a.roundness;
            req.field_width_at_subject_m = a.width.map_or(FieldWidth::Free, FieldWidth::Fixed);
            req.convergence_distance_m = a.convergence;
            req.allow_shift = a.allow_shift;
            req.limits = ctx.limits();
            req
        }
    };
    match api::solve(&req) {
        Ok(res) => Ok(Outcome::ok(match ctx.format(Format::Json) {
            Format::Json => api::to_json(&res),
            Format::Csv => csv_text(
                &["interocular_m", "convergence_distance_m", "screen_width_m", "shift_frac", "achieved_roundness"],
                |w| {
                    w.write_record([
                        res.shoot.interocular().to_string(),
                        res.shoot.distance().to_string(),
                        res.shoot.width().to_string(),
                        res.shift_frac.to_string(),
                        res.achieved_roundness.to_string(),
                    ])
                },
            )?,
        })),
        // an infeasible request is a verdict, not a usage error
        Err(e @ Error::Infeasible { .. }) => Ok(Outcome {
            text: api::to_json(&api::ErrorBody::from(&e)),
            exit: Status::Fail.exit_code(),
        }),
        Err(e) => Err(e.into()),
    }
}

fn remap(ctx: &Context, a: &RemapArgs) -> CmdResult {
    let text = read(&a.curve)?;
    let curve = if text.trim_start().starts_with('#') {
        RemapCurve::from_csv(&text)?
    } else {
        api::parse::<RemapCurve>(&text)?
    };
    let samples = if a.samples.is_empty() {
        if a.count < 2 || !(a.from < a.to) {
            return Err(Failure("need --from < --to and --count >= 2".into()));
        }
        (0..a.count)
            .map(|i| a.from + (a.to - a.from) * i as f64 / (a.count - 1) as f64)
            .collect()
    } else {
        a.samples.clone()
    };
    let resp = api::remap(&RemapRequest {
        curve,
        d_in_frac: samples,
    })?;
    Ok(Outcome::ok(match ctx.format(Format::Csv) {
        // table curves export their breakpoints, closed forms the samples
        Format::Csv => resp.curve.to_csv(&resp_samples(a, &resp)),
        Format::Json => api::to_json(&resp),
    }))
}

fn resp_samples(a: &RemapArgs, resp: &api::RemapResponse) -> Vec<f64> {
    if a.samples.is_empty() {
        let n = resp.d_out_frac.len();
        (0..n).map(|i| a.from + (a.to - a.from) * i as f64 / (n - 1) as f64).collect()
    } else {
        a.samples.clone()
    }
}

fn transition(ctx: &Context, a: &TransitionArgs) -> CmdResult {
    let req = match (&a.from_shot, &a.to_shot) {
        (Some(from), Some(to)) => {
            let doc = ctx.project()?;
            let cut = doc
                .cuts
                .iter()
                .find(|c| &c.from == from && &c.to == to)
                .cloned()
                .unwrap_or_else(|| shotdesk_core::CutRef {
                    from: from.clone(),
                    to: to.clone(),
                    ramp_seconds: a.ramp_seconds,
                    profile: a.profile.into(),
                    d1_frac: a.d1,
                    d2_frac: a.d2,
                });
            let spec = doc.cut_spec(&cut)?;
            let shot = |id: &str| doc.shot(id).cloned().ok_or_else(|| Failure(format!("no shot `{id}` in the project")));
            TransitionRequest {
                cut: spec,
                validate: Some(TransitionContext {
                    view: doc.view,
                    limits: ctx.limits(),
                    outgoing: shot(from)?,
                    incoming: shot(to)?,
                }),
            }
        }
        _ => {
            let (d1, d2) = match (a.d1, a.d2) {
                (Some(d1), Some(d2)) => (d1, d2),
                _ => return Err(Failure("give --d1 and --d2, or --from-shot/--to-shot with --project".into())),
            };
            TransitionRequest {
                cut: CutSpec {
                    d1_frac: d1,
                    d2_frac: d2,
                    ramp_seconds: a.ramp_seconds,
                    fps: a.fps,
                    profile: a.profile.into(),
                },
                validate: None,
            }
        }
    };
    let resp = api::transition(&req)?;
    let exit = resp.validation.as_ref().map_or(0, |v| v.worst().exit_code());
    Ok(Outcome {
        text: match ctx.format(Format::Csv) {
            Format::Csv => resp.plan.to_csv(),
            Format::Json => api::to_json(&resp),
        },
        exit,
    })
}

#[derive(Debug, Serialize)]
struct WindowFix {
    id: String,
    mask: MaskSpec,
    before: WindowReport,
    after: WindowReport,
}

fn fix_windows(ctx: &Context, a: &FixWindowArgs) -> CmdResult {
    let doc = ctx.project()?;
    let shots: Vec<_> = match &a.shot {
        Some(id) => vec![doc.shot(id).ok_or_else(|| Failure(format!("no shot `{id}` in the project")))?],
        None => doc.shots.iter().collect(),
    };
    let mut fixes = Vec::with_capacity(shots.len());
    for shot in shots {
        let current = shot.mask.unwrap_or_default();
        let mask = fix_window(shot, &doc.view)?;
        fixes.push(WindowFix {
            id: shot.id.clone(),
            mask,
            before: check_window(shot, &current, &doc.view)?,
            after: check_window(shot, &mask, &doc.view)?,
        });
    }
    let exit = if fixes.iter().any(|f| !f.before.violations.is_empty()) {
        Status::Warn.exit_code()
    } else {
        0
    };
    let text = match ctx.format(Format::Json) {
        Format::Json => api::to_json(&fixes),
        Format::Csv => csv_text(
            &["id", "left_edge_mask", "right_edge_mask", "violations_before", "left_edge_depth_m", "right_edge_depth_m"],
            |w| {
                for f in &fixes {
                    w.write_record([
                        f.id.clone(),
                        f.mask.left_edge_mask.to_string(),
                        f.mask.right_edge_mask.to_string(),
                        f.before.violations.len().to_string(),
                        f.after.left_edge_depth_m.to_string(),
                        f.after.right_edge_depth_m.to_string(),
                    ])?;
                }
                Ok(())
            },
        )?,
    };
    Ok(Outcome { text, exit })
}

fn serve(ctx: &Context, a: &ServeArgs) -> CmdResult {
    let state = match &ctx.project {
        Some(doc) => crate::service::AppState::with_project(doc)?,
        None => crate::service::AppState::default(),
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(crate::service::serve(&a.bind, state))?;
    Ok(Outcome::ok(String::new()))
}
