//! Command-line frontend. Every subcommand prints one envelope on stdout:
//! a JSON object with sorted keys (default) or sorted `key=value` lines
//! with `--format text`.
//!
//! Exit codes: 0 ok, 1 domain or validation error, 2 usage error.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use oddsbound::bayes_prior::{
    flattest_prior, p_to_z, sigma_m_max, sigma_vm_pathway, sigma_wm_pathway, z_to_p, DesignPathway,
};
use oddsbound::contingency::{
    cohort_to_risk, estimate_or, estimate_probs, or_rr_from_risk, risk_to_cohort, sigma_hat,
    t_statistic, CohortParams, RiskParams, TwoByTwoTable,
};
use oddsbound::effect_bounds::{
    bound_constants, gamma, gamma_max, kappa, kappa_prime, optimal_risk, sigma2_v, sigma2_w, v_min,
    verify_bound, w_min,
};
use oddsbound::kepler::{
    divergence_table, kepler_series, kepler_solve, series_radius, KeplerProblem,
};
use oddsbound::numerics::normal_quantile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "oddsbound",
    version,
    about = "Effect-size bounds, the Laplace limit constant and Kepler solvers"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Tolerance for iterative solvers.
    #[arg(
        long,
        global = true,
        default_value_t = 1e-12,
        allow_negative_numbers = true
    )]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimators and T statistic for a 2x2 case-control table.
    Table(TableArgs),
    /// Variance minimizers and the maximum standardized effect.
    Bounds(BoundsArgs),
    /// z, x*, OR*, the Laplace limit constant and Pr(D|E)*.
    Constants,
    /// Kepler equation solvers.
    #[command(subcommand)]
    Kepler(KeplerCommand),
    /// Prior specification for the standardized effect.
    #[command(subcommand)]
    Prior(PriorCommand),
    /// Monte Carlo check of |gamma| <= gamma_max(OR) <= LLC.
    Verify(VerifyArgs),
    /// Convert between a one-sided P-value and Z.
    Pz(PzArgs),
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Counts n11,n12,n21,n22 (cases exposed, cases unexposed, controls exposed, controls unexposed).
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    counts: Option<String>,
    /// File whose first line holds n11,n12,n21,n22.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Add 0.5 to every cell before estimating.
    #[arg(long)]
    correction: bool,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Odds ratio.
    #[arg(long = "or", allow_negative_numbers = true)]
    odds_ratio: Option<f64>,
    /// Relative risk (with --or, adds v_min).
    #[arg(long, allow_negative_numbers = true)]
    rr: Option<f64>,
    /// Pr(E|D)
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    /// Pr(E|D̄)
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    /// Prevalence Pr(D) (with --p/--q).
    #[arg(long, allow_negative_numbers = true)]
    w: Option<f64>,
    /// Pr(D|E)
    #[arg(long = "r-de", allow_negative_numbers = true)]
    r_de: Option<f64>,
    /// Pr(D|Ē)
    #[arg(long = "r-dne", allow_negative_numbers = true)]
    r_dne: Option<f64>,
    /// Pooled exposure Pr(E).
    #[arg(long, allow_negative_numbers = true)]
    v: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum KeplerCommand {
    /// Solve M = E - eps sin E for E.
    Solve(KeplerArgs),
    /// Truncated power series in eps.
    Series {
        #[command(flatten)]
        problem: KeplerArgs,
        #[arg(long)]
        order: usize,
    },
    /// Series value and error against Newton for every order up to --max-order.
    DivergeTable {
        #[command(flatten)]
        problem: KeplerArgs,
        #[arg(long = "max-order")]
        max_order: usize,
    },
}

#[derive(Debug, Args)]
struct KeplerArgs {
    /// Mean anomaly M (radians).
    #[arg(long, allow_negative_numbers = true)]
    m: f64,
    /// Eccentricity in [0, 1).
    #[arg(long, allow_negative_numbers = true)]
    eps: f64,
}

#[derive(Debug, Subcommand)]
enum PriorCommand {
    /// Flattest normal prior variance for mu/sigma given Pr(OR > x) = beta.
    Flattest {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        /// Assumed sigma; defaults to ln(x)/gamma_max(x).
        #[arg(long = "sigma-m", allow_negative_numbers = true)]
        sigma_m: Option<f64>,
    },
    /// sigma(w_m) from OR and Pr(D|E).
    WmPathway(PathwayArgs),
    /// sigma(v_m) from OR and Pr(D|E).
    VmPathway(PathwayArgs),
}

#[derive(Debug, Args)]
struct PathwayArgs {
    #[arg(long = "or", allow_negative_numbers = true)]
    odds_ratio: f64,
    #[arg(long = "pr-de", allow_negative_numbers = true)]
    pr_de: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
#[group(id = "value", required = true, multiple = false)]
struct PzArgs {
    /// One-sided P-value.
    #[arg(long, group = "value", allow_negative_numbers = true)]
    p: Option<f64>,
    /// Test statistic.
    #[arg(long, group = "value", allow_negative_numbers = true)]
    z: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(oddsbound::Error),
}

impl From<oddsbound::Error> for CliError {
    fn from(e: oddsbound::Error) -> Self {
        match e {
            oddsbound::Error::InvalidTable(msg) => CliError::Usage(format!("invalid table: {msg}")),
            other => CliError::Domain(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Domain(e) => e.to_string(),
        }
    }
}

/// Non-finite values have no JSON number form; they are rendered as strings.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(x.to_string())
    }
}

type Fields = Map<String, Value>;

struct Envelope {
    command: String,
    inputs: Fields,
    outcome: Result<Fields, CliError>,
}

impl Envelope {
    fn to_value(&self) -> Value {
        let mut top = Map::new();
        top.insert("command".into(), Value::String(self.command.clone()));
        top.insert("inputs".into(), Value::Object(self.inputs.clone()));
        match &self.outcome {
            Ok(results) => {
                top.insert("results".into(), Value::Object(results.clone()));
                top.insert("status".into(), json!("ok"));
            }
            Err(e) => {
                top.insert("results".into(), Value::Object(Map::new()));
                top.insert("status".into(), json!("error"));
                top.insert("error_message".into(), Value::String(e.message()));
            }
        }
        Value::Object(top)
    }

    fn exit_code(&self) -> i32 {
        match &self.outcome {
            Ok(_) => EXIT_OK,
            Err(e) => e.exit_code(),
        }
    }

    fn render(&self, format: Format) -> String {
        let value = self.to_value();
        match format {
            Format::Json => format!("{value}\n"),
            Format::Text => {
                let mut lines = Vec::new();
                flatten("", &value, &mut lines);
                lines.iter().map(|l| format!("{l}\n")).collect()
            }
        }
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<String>) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::String(s) => out.push(format!("{prefix}={s}")),
        other => out.push(format!("{prefix}={other}")),
    }
}

macro_rules! fields {
    ($($key:expr => $value:expr),* $(,)?) => {{
        #[allow(unused_mut)]
        let mut m = Fields::new();
        $( m.insert($key.to_string(), $value); )*
        m
    }};
}

fn opt_num(m: &mut Fields, key: &str, x: Option<f64>) {
    if let Some(x) = x {
        m.insert(key.to_string(), num(x));
    }
}

fn risk_fields(prefix: &str, r: &RiskParams) -> Fields {
    fields! {
        format!("{prefix}r_de") => num(r.r_de()),
        format!("{prefix}r_dne") => num(r.r_dne()),
        format!("{prefix}v") => num(r.v()),
    }
}

fn read_table(args: &TableArgs) -> Result<TwoByTwoTable, CliError> {
    let line = match (&args.counts, &args.file) {
        (Some(c), _) => c.clone(),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            text.lines().next().unwrap_or("").to_string()
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --counts or --file is required".into(),
            ))
        }
    };
    Ok(line.parse::<TwoByTwoTable>()?)
}

fn table(args: &TableArgs) -> (Fields, Result<Fields, CliError>) {
    let mut inputs = fields! { "correction" => json!(args.correction) };
    if let Some(c) = &args.counts {
        inputs.insert("counts".into(), json!(c));
    }
    if let Some(f) = &args.file {
        inputs.insert("file".into(), json!(f.display().to_string()));
    }
    let run = || -> Result<Fields, CliError> {
        let t = read_table(args)?;
        let probs = estimate_probs(&t);
        let est = estimate_or(&t, args.correction)?;
        let [n11, n12, n21, n22] = t.cells();
        Ok(fields! {
            "n11" => json!(n11), "n12" => json!(n12), "n21" => json!(n21), "n22" => json!(n22),
            "n" => json!(probs.n),
            "p_hat" => num(probs.p_hat),
            "q_hat" => num(probs.q_hat),
            "w_hat" => num(probs.w_hat),
            "or" => num(est.or),
            "mu" => num(est.mu),
            "sigma_hat" => num(sigma_hat(&t, args.correction)?),
            "t" => num(t_statistic(&t, args.correction)?),
        })
    };
    (inputs, run())
}

fn bounds(args: &BoundsArgs) -> (Fields, Result<Fields, CliError>) {
    let mut inputs = Fields::new();
    for (key, value) in [
        ("or", args.odds_ratio),
        ("rr", args.rr),
        ("p", args.p),
        ("q", args.q),
        ("w", args.w),
        ("r_de", args.r_de),
        ("r_dne", args.r_dne),
        ("v", args.v),
    ] {
        opt_num(&mut inputs, key, value);
    }
    let usage = || {
        CliError::Usage(
            "bounds takes exactly one of: --or [--rr] | --p --q [--w] | --r-de --r-dne --v".into(),
        )
    };
    let cohort_given = args.p.is_some() || args.q.is_some() || args.w.is_some();
    let risk_given = args.r_de.is_some() || args.r_dne.is_some() || args.v.is_some();
    let or_given = args.odds_ratio.is_some() || args.rr.is_some();

    let run = || -> Result<Fields, CliError> {
        match (or_given, cohort_given, risk_given) {
            (true, false, false) => {
                let or = args.odds_ratio.ok_or_else(usage)?;
                let opt = optimal_risk(or)?;
                let x = or.ln();
                let mut out = fields! {
                    "ln_or" => num(x),
                    "gamma_max" => num(gamma_max(or)?),
                    "kappa" => num(kappa(x)),
                    "kappa_prime" => num(kappa_prime(x)),
                    "sigma2_at_optimum" => num(sigma2_v(opt.v(), opt.r_de(), opt.r_dne())?),
                };
                out.extend(risk_fields("optimal_", &opt));
                if let Some(rr) = args.rr {
                    out.insert("v_min".into(), num(v_min(rr, or)?));
                }
                Ok(out)
            }
            (false, true, false) => {
                let (p, q) = (args.p.ok_or_else(usage)?, args.q.ok_or_else(usage)?);
                let wm = w_min(p, q)?;
                let or = (p * (1.0 - q)) / (q * (1.0 - p));
                let mut out = fields! {
                    "or" => num(or),
                    "gamma_max" => num(gamma_max(or)?),
                    "w_min" => num(wm),
                    "sigma2_at_w_min" => num(sigma2_w(wm, p, q)?),
                };
                if let Some(w) = args.w {
                    let c = CohortParams::new(p, q, w)?;
                    let r = cohort_to_risk(&c);
                    out.insert("sigma2_w".into(), num(sigma2_w(w, p, q)?));
                    out.insert("gamma".into(), num(gamma(&r)));
                    out.insert("rr".into(), num(or_rr_from_risk(&r).rr));
                    out.extend(risk_fields("", &r));
                }
                Ok(out)
            }
            (false, false, true) => {
                let r = RiskParams::new(
                    args.r_de.ok_or_else(usage)?,
                    args.r_dne.ok_or_else(usage)?,
                    args.v.ok_or_else(usage)?,
                )?;
                let e = or_rr_from_risk(&r);
                let c = risk_to_cohort(&r);
                Ok(fields! {
                    "or" => num(e.or),
                    "rr" => num(e.rr),
                    "sigma2_v" => num(sigma2_v(r.v(), r.r_de(), r.r_dne())?),
                    "gamma" => num(gamma(&r)),
                    "gamma_max" => num(gamma_max(e.or)?),
                    "v_min" => num(v_min(e.rr, e.or)?),
                    "p" => num(c.p()),
                    "q" => num(c.q()),
                    "w" => num(c.w()),
                })
            }
            _ => Err(usage()),
        }
    };
    (inputs, run())
}

fn constants() -> Fields {
    let c = bound_constants();
    fields! {
        "z" => num(c.z),
        "x_star" => num(c.x_star),
        "or_star" => num(c.or_star),
        "llc" => num(c.llc),
        "p_star" => num(c.p_star),
        "series_radius" => num(series_radius()),
    }
}

fn kepler_inputs(p: &KeplerArgs, tol: Option<f64>) -> Fields {
    let mut m = fields! { "m" => num(p.m), "eps" => num(p.eps) };
    opt_num(&mut m, "tol", tol);
    m
}

fn kepler(cmd: &KeplerCommand, tol: f64) -> (String, Fields, Result<Fields, CliError>) {
    match cmd {
        KeplerCommand::Solve(a) => {
            let run = || -> Result<Fields, CliError> {
                let s = kepler_solve(&KeplerProblem::new(a.m, a.eps)?, tol)?;
                Ok(fields! {
                    "eccentric_anomaly" => num(s.eccentric_anomaly),
                    "residual" => num(s.residual),
                    "method" => json!(s.method.as_str()),
                    "iterations" => json!(s.iterations_or_order),
                })
            };
            ("kepler solve".into(), kepler_inputs(a, Some(tol)), run())
        }
        KeplerCommand::Series { problem, order } => {
            let mut inputs = kepler_inputs(problem, Some(tol));
            inputs.insert("order".into(), json!(order));
            let run = || -> Result<Fields, CliError> {
                let p = KeplerProblem::new(problem.m, problem.eps)?;
                let s = kepler_series(&p, *order)?;
                let newton = kepler_solve(&p, tol)?.eccentric_anomaly;
                Ok(fields! {
                    "eccentric_anomaly" => num(s.eccentric_anomaly),
                    "residual" => num(s.residual),
                    "order" => json!(s.iterations_or_order),
                    "newton" => num(newton),
                    "abs_error" => num((s.eccentric_anomaly - newton).abs()),
                })
            };
            ("kepler series".into(), inputs, run())
        }
        KeplerCommand::DivergeTable { problem, max_order } => {
            let mut inputs = kepler_inputs(problem, Some(tol));
            inputs.insert("max_order".into(), json!(max_order));
            let run = || -> Result<Fields, CliError> {
                let t = divergence_table(
                    &KeplerProblem::new(problem.m, problem.eps)?,
                    *max_order,
                    tol,
                )?;
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| json!({ "order": r.order, "series": num(r.series), "abs_error": num(r.abs_error) }))
                    .collect();
                Ok(fields! {
                    "newton" => num(t.newton),
                    "non_monotone" => json!(t.is_non_monotone()),
                    "rows" => Value::Array(rows),
                })
            };
            ("kepler diverge-table".into(), inputs, run())
        }
    }
}

fn pathway_fields(p: &DesignPathway, share_key: &str, sigma_key: &str) -> Fields {
    fields! {
        "pr_dne" => num(p.pr_dne),
        "rr" => num(p.rr),
        share_key => num(p.share),
        sigma_key => num(p.sigma),
    }
}

fn prior(cmd: &PriorCommand) -> (String, Fields, Result<Fields, CliError>) {
    match cmd {
        PriorCommand::Flattest { x, beta, sigma_m } => {
            let mut inputs = fields! { "x" => num(*x), "beta" => num(*beta) };
            opt_num(&mut inputs, "sigma_m", *sigma_m);
            let run = || -> Result<Fields, CliError> {
                let best = sigma_m_max(*x)?;
                let spec = flattest_prior(*x, *beta, sigma_m.unwrap_or(best))?;
                Ok(fields! {
                    "sigma0" => num(spec.sigma0),
                    "sigma_m" => num(spec.sigma_m),
                    "sigma_m_max" => num(best),
                    "z_beta" => num(-normal_quantile(*beta)?),
                })
            };
            ("prior flattest".into(), inputs, run())
        }
        PriorCommand::WmPathway(a) => {
            let inputs = fields! { "or" => num(a.odds_ratio), "pr_de" => num(a.pr_de) };
            let out = sigma_wm_pathway(a.odds_ratio, a.pr_de)
                .map(|p| pathway_fields(&p, "w_m", "sigma_wm"))
                .map_err(CliError::from);
            ("prior wm-pathway".into(), inputs, out)
        }
        PriorCommand::VmPathway(a) => {
            let inputs = fields! { "or" => num(a.odds_ratio), "pr_de" => num(a.pr_de) };
            let out = sigma_vm_pathway(a.odds_ratio, a.pr_de)
                .map(|p| pathway_fields(&p, "v_m", "sigma_vm"))
                .map_err(CliError::from);
            ("prior vm-pathway".into(), inputs, out)
        }
    }
}

fn verify(args: &VerifyArgs) -> (Fields, Result<Fields, CliError>) {
    let inputs = fields! { "samples" => json!(args.samples), "seed" => json!(args.seed) };
    let out = verify_bound(args.samples, args.seed)
        .map(|rep| {
            let mut f = fields! {
                "samples" => json!(rep.samples),
                "violations" => json!(rep.violations),
                "max_gamma_observed" => num(rep.max_gamma_observed),
                "bound" => num(rep.bound),
                "gap" => num(rep.bound - rep.max_gamma_observed),
            };
            f.extend(risk_fields("arg_max_", &rep.arg_max));
            f
        })
        .map_err(CliError::from);
    (inputs, out)
}

fn pz(args: &PzArgs) -> (Fields, Result<Fields, CliError>) {
    let mut inputs = Fields::new();
    opt_num(&mut inputs, "p", args.p);
    opt_num(&mut inputs, "z", args.z);
    let run = || -> Result<Fields, CliError> {
        match (args.p, args.z) {
            (Some(p), None) => Ok(fields! { "z" => num(p_to_z(p)?) }),
            (None, Some(z)) => Ok(fields! { "p" => num(z_to_p(z)?) }),
            _ => Err(CliError::Usage("pz takes exactly one of --p or --z".into())),
        }
    };
    (inputs, run())
}

fn dispatch(cli: &Cli) -> Envelope {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Envelope {
            command: String::new(),
            inputs: fields! { "tol" => num(cli.tol) },
            outcome: Err(CliError::Domain(oddsbound::Error::Domain(format!(
                "tolerance must be positive, got {}",
                cli.tol
            )))),
        };
    }
    let (command, inputs, outcome) = match &cli.command {
        Command::Table(a) => {
            let (i, o) = table(a);
            ("table".to_string(), i, o)
        }
        Command::Bounds(a) => {
            let (i, o) = bounds(a);
            ("bounds".to_string(), i, o)
        }
        Command::Constants => ("constants".to_string(), Fields::new(), Ok(constants())),
        Command::Kepler(k) => kepler(k, cli.tol),
        Command::Prior(p) => prior(p),
        Command::Verify(a) => {
            let (i, o) = verify(a);
            ("verify".to_string(), i, o)
        }
        Command::Pz(a) => {
            let (i, o) = pz(a);
            ("pz".to_string(), i, o)
        }
    };
    Envelope {
        command,
        inputs,
        outcome,
    }
}

/// First line(s) of a clap error up to the usage block, on one line.
fn usage_message(e: &clap::Error) -> String {
    let rendered = e.render().to_string();
    let parts: Vec<&str> = rendered
        .lines()
        .map(str::trim)
        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .filter(|l| !l.is_empty())
        .collect();
    let joined = parts.join(" ");
    let message = joined.trim_start_matches("error: ");
    if message.is_empty() {
        "usage error".to_string()
    } else {
        message.to_string()
    }
}

/// Subcommand path named in raw arguments, skipping global options.
fn requested_command(argv: &[String]) -> String {
    let mut words = Vec::new();
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--format" || a == "--tol" {
            it.next();
        } else if a.starts_with('-') {
            break;
        } else {
            words.push(a.as_str());
            if words.len() == 2 || !matches!(words[0], "kepler" | "prior") {
                break;
            }
        }
    }
    words.join(" ")
}

/// Guesses the output format from raw arguments when parsing fails.
fn requested_format(argv: &[String]) -> Format {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--format=text"
            || (a == "--format" && it.next().map(String::as_str) == Some("text"))
        {
            return Format::Text;
        }
    }
    Format::Json
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// exit code and everything destined for stdout.
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    match Cli::try_parse_from(&argv) {
        Ok(cli) => {
            let env = dispatch(&cli);
            (env.exit_code(), env.render(cli.format))
        }
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            (EXIT_OK, e.render().to_string())
        }
        Err(e) => {
            let env = Envelope {
                command: requested_command(&argv),
                inputs: Fields::new(),
                outcome: Err(CliError::Usage(usage_message(&e))),
            };
            (EXIT_USAGE, env.render(requested_format(&argv)))
        }
    }
}
