//! `eb` command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::calculus::{self, Evidence, RuleName};
use crate::catalog;
use crate::certify::{self, CertKind, Certificate, Locality};
use crate::envelope::{self, EnvelopeResult};
use crate::error::{Error, Result};
use crate::fnmodel::{FunctionSpec, Gap, GridSpec, SamplePlan};
use crate::varanalysis::{self, CondMode};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser, Serialize)]
#[command(name = "eb", version, about = "Moreau envelopes and error-bound certificates for univariate functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Moreau envelope and proximal sets on a grid, as CSV
    Envelope(EnvelopeArgs),
    /// Prox-boundedness probe
    Prox(ProxArgs),
    /// Variational quantities at a point
    Analyze(AnalyzeArgs),
    /// Fit an exponent and suggest a certificate
    Estimate(EstimateArgs),
    /// Validate a certificate by sampling (exit 2 when it fails)
    Validate(ValidateArgs),
    /// Apply a transfer rule
    Transfer(TransferArgs),
    /// Table of KL quotients (f - f(x̄))^(-α) d(0, ∂f)
    ScanKl(ScanKlArgs),
    /// Sign changes of the derivative
    ScanStationary(ScanStationaryArgs),
    /// Combine pointwise certificates over a finite set
    Uniformize(UniformizeArgs),
    /// Built-in functions
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Compare a disputed closed-form envelope with brute force
    Audit(AuditArgs),
    /// Regenerate the example numerics into a directory
    Report(ReportArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogAction {
    List,
    Show { name: String },
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct InputArgs {
    /// Function JSON file, or `catalog:NAME`
    #[arg(long)]
    pub input: String,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct GridArgs {
    /// Grid bounds and spacing used to sample analytic inputs
    #[arg(long = "from", default_value_t = -1.0, allow_negative_numbers = true)]
    pub grid_from: f64,
    #[arg(long = "to", default_value_t = 1.0, allow_negative_numbers = true)]
    pub grid_to: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EnvelopeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProxArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e12)]
    pub radius: f64,
    /// Also bracket the prox-boundedness threshold
    #[arg(long)]
    pub threshold: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum What {
    Subgrad,
    Levdist,
    Proxreg,
    Cond3,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Direct,
    Sufficient,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub at: f64,
    #[arg(long, value_enum)]
    pub what: What,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Level for `levdist`; defaults to f(at)
    #[arg(long, allow_negative_numbers = true)]
    pub level: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Direct)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_gap(s: &str) -> std::result::Result<Gap, String> {
    match s {
        "unbounded" | "inf" | "infinity" => Ok(Gap::Unbounded),
        _ => s.parse::<f64>().map(Gap::from_f64).map_err(|e| e.to_string()),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub kind: String,
    #[arg(long, allow_negative_numbers = true)]
    pub at: f64,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, value_parser = parse_gap, default_value = "unbounded")]
    pub nu: Gap,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub cert: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Validate on the grid envelope e_λf instead of f
    #[arg(long)]
    pub envelope_lambda: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Kl2lseb,
    Lseb2lheb,
    Lheb2lseb,
    Lseb2kl,
    EnvLseb,
    EnvLheb,
    Chain,
}

#[derive(Debug, Args, Serialize)]
pub struct TransferArgs {
    #[arg(long, value_enum)]
    pub rule: RuleArg,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Starting kind for `chain` (ukl, ulseb, uheb)
    #[arg(long, default_value = "ukl")]
    pub kind: String,
    /// Hypotheses to record as asserted (`all` for every one)
    #[arg(long = "assert")]
    pub asserted: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanKlArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub at: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75")]
    pub alphas: Vec<f64>,
    /// Explicit sample points
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub points: Vec<f64>,
    /// Points 1/(n-1) - 1e-9 for n in A..=B, written `A:B`
    #[arg(long)]
    pub reciprocal: Option<String>,
    /// Scan the grid envelope e_λf instead of f
    #[arg(long)]
    pub envelope_lambda: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanStationaryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long = "from", allow_negative_numbers = true)]
    pub scan_from: f64,
    #[arg(long = "to", allow_negative_numbers = true)]
    pub scan_to: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct UniformizeArgs {
    /// Certificate JSON files
    #[arg(long, value_delimiter = ',', required = true)]
    pub certs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub omega: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
    /// Optional function to check constancy on omega
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    #[arg(long)]
    pub name: String,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long = "from", default_value_t = -1.0, allow_negative_numbers = true)]
    pub grid_from: f64,
    #[arg(long = "to", default_value_t = 1.0, allow_negative_numbers = true)]
    pub grid_to: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long, value_delimiter = ',', default_value = "staircase,oscillatory,quadratic,absval")]
    pub names: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

// --- helpers ----------------------------------------------------------------

pub fn load_function(spec: &str) -> Result<FunctionSpec> {
    if let Some(name) = spec.strip_prefix("catalog:") {
        return Ok(catalog::get_default(name)?.spec.into());
    }
    FunctionSpec::from_json_str(&fs::read_to_string(spec)?)
}

fn load_cert(path: &Path) -> Result<Certificate> {
    let c: Certificate = serde_json::from_str(&fs::read_to_string(path)?)?;
    c.check()?;
    Ok(c)
}

fn as_grid(f: &FunctionSpec, g: &GridArgs) -> Result<GridSpec> {
    match f {
        FunctionSpec::Grid(grid) => Ok(grid.clone()),
        FunctionSpec::Analytic(a) => GridSpec::covering(g.grid_from, g.grid_to, g.h, |x| a.eval(x)),
    }
}

/// Shortest round-trip decimal; `inf` for +∞.
pub fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, data)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report<T: Serialize, C: Serialize>(config: &C, result: &T) -> Result<String> {
    let v = json!({ "version": VERSION, "config": config, "result": result });
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn envelope_csv(f: &GridSpec, env: &EnvelopeResult) -> String {
    let mut s = String::from("x,f,env,prox_count,prox_min_x,prox_max_x\n");
    for i in 0..env.len() {
        let set = &env.prox_sets[i];
        let (lo, hi) = (set.first().map(|&j| f.node(j)), set.last().map(|&j| f.node(j)));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_num(f.node(i)),
            fmt_num(f.values()[i]),
            fmt_num(env.env[i]),
            set.len(),
            lo.map(fmt_num).unwrap_or_default(),
            hi.map(fmt_num).unwrap_or_default()
        );
    }
    s
}

fn reciprocal_points(spec: &str) -> Result<Vec<f64>> {
    let (a, b) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("expected A:B, got `{spec}`")))?;
    let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| Error::InvalidArgument(e.to_string()));
    let (a, b) = (parse(a)?, parse(b)?);
    if a < 2 || b < a {
        return Err(Error::InvalidArgument("need 2 <= A <= B".into()));
    }
    Ok((a..=b).map(|n| 1.0 / (n as f64 - 1.0) - 1e-9).collect())
}

fn kl_scan_csv(scan: &certify::KlScan, bound: bool) -> String {
    let mut s = String::from("alpha,x,gap,subgrad,quotient");
    if bound {
        s.push_str(",n,bound");
    }
    s.push('\n');
    for row in &scan.rows {
        for (k, &x) in scan.points.iter().enumerate() {
            let _ = write!(
                s,
                "{},{},{},{},{}",
                fmt_num(row.alpha),
                fmt_num(x),
                fmt_num(scan.gaps[k]),
                fmt_num(scan.subgrad[k]),
                fmt_num(row.quotients[k])
            );
            if bound {
                // x = 1/(n-1) - 1e-9
                let n = (1.0 / (x + 1e-9)).round() + 1.0;
                let _ = write!(s, ",{},{}", n, fmt_num(2.0 * n.powf(row.alpha) / (n - 1.0)));
            }
            s.push('\n');
        }
    }
    s
}

// --- commands ---------------------------------------------------------------

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Envelope(a) => {
            let f = load_function(&a.input.input)?;
            let g = as_grid(&f, &a.grid)?;
            let env = envelope::envelope_grid(&g, a.lambda)?;
            emit(a.out.as_deref(), &envelope_csv(&g, &env))?;
        }
        Command::Prox(a) => {
            let f = load_function(&a.input.input)?;
            let r = envelope::prox_bounded_probe(&f, a.lambda, a.radius, a.threshold)?;
            emit(a.out.as_deref(), &report(a, &r)?)?;
        }
        Command::Analyze(a) => {
            let f = load_function(&a.input.input)?;
            let v: Value = match a.what {
                What::Subgrad => serde_json::to_value(varanalysis::subgrad_distance(&f, a.at)?)?,
                What::Levdist => {
                    let c = match a.level {
                        Some(c) => c,
                        None => crate::fnmodel::evaluate(&f, a.at)?,
                    };
                    serde_json::to_value(varanalysis::levelset_distance(&f, c, a.at, a.window))?
                }
                What::Proxreg => {
                    let eps = a.eps.ok_or_else(|| Error::InvalidArgument("--eps is required".into()))?;
                    serde_json::to_value(varanalysis::prox_regularity_modulus(&f, a.at, eps, a.samples, a.seed)?)?
                }
                What::Cond3 => {
                    let lambda = a.lambda.ok_or_else(|| Error::InvalidArgument("--lambda is required".into()))?;
                    let eps = a.eps.ok_or_else(|| Error::InvalidArgument("--eps is required".into()))?;
                    let mode = match a.mode {
                        ModeArg::Direct => CondMode::Direct,
                        ModeArg::Sufficient => CondMode::Sufficient,
                    };
                    serde_json::to_value(varanalysis::check_condition_iii(&f, lambda, a.at, eps, a.samples, mode)?)?
                }
            };
            emit(a.out.as_deref(), &report(a, &v)?)?;
        }
        Command::Estimate(a) => {
            let f = load_function(&a.input.input)?;
            let kind = CertKind::parse(&a.kind)?;
            let plan = SamplePlan::new(a.at, a.eta, a.nu, a.samples, a.seed);
            let (fit, cert) = certify::estimate(&f, kind, a.at, &plan)?;
            emit(a.out.as_deref(), &report(a, &json!({ "fit": fit, "suggested": cert }))?)?;
        }
        Command::Validate(a) => {
            let cert = load_cert(&a.cert)?;
            let mut f = load_function(&a.input.input)?;
            if let Some(lambda) = a.envelope_lambda {
                let g = as_grid(&f, &a.grid)?;
                f = envelope::envelope_grid(&g, lambda)?.to_grid()?.into();
            }
            let plan = SamplePlan::new(0.0, cert.eta, cert.nu, a.samples, a.seed);
            let r = certify::validate(&f, &cert, &plan)?;
            let summary = json!({
                "cert": r.cert,
                "samples": r.samples,
                "worst_violation": r.worst_violation,
                "tight_mu": r.tight_mu,
                "passed": r.passed,
                "failures": r.failures,
            });
            emit(a.out.as_deref(), &report(a, &summary)?)?;
            if !r.passed {
                return Ok(2);
            }
        }
        Command::Transfer(a) => {
            let v = transfer(a)?;
            emit(a.out.as_deref(), &report(a, &v)?)?;
        }
        Command::ScanKl(a) => {
            let mut f = load_function(&a.input.input)?;
            if let Some(lambda) = a.envelope_lambda {
                let g = as_grid(&f, &a.grid)?;
                f = envelope::envelope_grid(&g, lambda)?.to_grid()?.into();
            }
            let mut points = a.points.clone();
            if let Some(r) = &a.reciprocal {
                points.extend(reciprocal_points(r)?);
            }
            if let FunctionSpec::Grid(g) = &f {
                points = points.iter().map(|&x| g.node(g.nearest_index(x))).collect();
            }
            if points.is_empty() {
                return Err(Error::InvalidArgument("no scan points: use --points or --reciprocal".into()));
            }
            let scan = certify::kl_failure_scan(&f, a.at, &a.alphas, &points)?;
            match &a.out {
                Some(p) if p.extension().is_some_and(|e| e == "csv") => {
                    write_atomic(p, kl_scan_csv(&scan, a.reciprocal.is_some() && a.points.is_empty()).as_bytes())?
                }
                out => emit(out.as_deref(), &report(a, &scan)?)?,
            }
        }
        Command::ScanStationary(a) => {
            let f = load_function(&a.input.input)?;
            let s = certify::stationary_scan(&f, a.scan_from, a.scan_to, a.step)?;
            emit(a.out.as_deref(), &report(a, &s)?)?;
        }
        Command::Uniformize(a) => {
            let certs = a.certs.iter().map(|p| load_cert(p)).collect::<Result<Vec<_>>>()?;
            let f = a.input.as_deref().map(load_function).transpose()?;
            let radii = (!a.radii.is_empty()).then_some(a.radii.as_slice());
            let u = calculus::uniformize(&certs, &a.omega, radii, f.as_ref())?;
            emit(a.out.as_deref(), &report(a, &u)?)?;
        }
        Command::Catalog { action } => {
            let v = match action {
                CatalogAction::List => json!(catalog::NAMES),
                CatalogAction::Show { name } => serde_json::to_value(catalog::get_default(name)?)?,
            };
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::Audit(a) => {
            let r = catalog::audit_paper_formula(&a.name, a.lambda, a.grid_from, a.grid_to, a.h)?;
            emit(a.out.as_deref(), &report(a, &r)?)?;
        }
        Command::Report(a) => report_bundle(&a.names, &a.out, a.seed)?,
    }
    Ok(0)
}

fn transfer(a: &TransferArgs) -> Result<Value> {
    let all = a.asserted.iter().any(|s| s == "all");
    let asserted: Vec<String> = if all {
        calculus::RULES.iter().flat_map(|r| r.hypotheses.iter().map(|h| h.to_string())).collect()
    } else {
        a.asserted.clone()
    };
    let ev = Evidence { rho: a.rho, lambda: a.lambda, delta: a.delta, verified: vec![], asserted };
    let (rule, kind) = match a.rule {
        RuleArg::Kl2lseb => (RuleName::KlToLseb, CertKind::Kl),
        RuleArg::Lseb2lheb => (RuleName::LsebToLheb, CertKind::Lseb),
        RuleArg::Lheb2lseb => (RuleName::LhebToLsebProxreg, CertKind::Lheb),
        RuleArg::Lseb2kl => (RuleName::LsebToKlProxreg, CertKind::Lseb),
        RuleArg::EnvLseb => (RuleName::LsebEnvelope, CertKind::Lseb),
        RuleArg::EnvLheb => (RuleName::LhebEnvelope, CertKind::Lheb),
        RuleArg::Chain => {
            let kind = CertKind::parse(&a.kind)?.uniform();
            let start = Certificate {
                kind,
                gamma: a.gamma,
                mu: a.mu,
                locality: Locality::Set(vec![0.0]),
                eta: 1.0,
                nu: Gap::Unbounded,
                fbar: 0.0,
                rho: None,
            };
            return Ok(serde_json::to_value(calculus::equivalence_chain(&start, a.rho)?)?);
        }
    };
    let src = Certificate {
        kind,
        gamma: a.gamma,
        mu: a.mu,
        locality: Locality::Point(0.0),
        eta: 1.0,
        nu: Gap::Unbounded,
        fbar: 0.0,
        rho: None,
    };
    Ok(serde_json::to_value(calculus::apply(rule, &src, &ev)?)?)
}

/// Writes the example numerics for each catalog name into `dir`.
pub fn report_bundle(names: &[String], dir: &Path, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let put = |file: &str, text: &str| write_atomic(&dir.join(file), text.as_bytes());
    let mut index = Vec::new();
    for name in names {
        let entry = catalog::get_default(name)?;
        let f: FunctionSpec = entry.spec.clone().into();
        let g = GridSpec::covering(-1.0, 1.0, 1e-3, |x| entry.spec.eval(x))?;
        let lambda = 0.5;
        let env = envelope::envelope_grid(&g, lambda)?;
        put(&format!("{name}_envelope.csv"), &envelope_csv(&g, &env))?;
        index.push(format!("{name}_envelope.csv"));

        let mut validations = Vec::new();
        for (k, cert) in entry.known_certificates.iter().enumerate() {
            let plan = SamplePlan::new(0.0, cert.eta, cert.nu, 200, seed + k as u64);
            let r = certify::validate(&f, cert, &plan)?;
            validations.push(json!({
                "cert": r.cert, "samples": r.samples, "passed": r.passed,
                "worst_violation": r.worst_violation, "tight_mu": r.tight_mu,
            }));
        }
        put(&format!("{name}_validations.json"), &report(&json!({ "name": name, "seed": seed }), &validations)?)?;
        index.push(format!("{name}_validations.json"));

        for known in entry.known_envelopes.iter().filter(|k| k.provenance == catalog::Provenance::Verified) {
            let err = (0..g.len())
                .map(|i| (env.env[i] - (known.eval)(g.node(i), lambda)).abs())
                .fold(0.0, f64::max);
            put(
                &format!("{name}_envelope_check.json"),
                &report(&json!({ "name": name, "lambda": lambda, "h": 1e-3 }), &json!({ "formula": known.formula, "max_error": err }))?,
            )?;
            index.push(format!("{name}_envelope_check.json"));
        }

        match name.as_str() {
            "staircase" => {
                let pts = reciprocal_points("10:200")?;
                let alphas = [0.0, 0.25, 0.5, 0.75];
                let scan = certify::kl_failure_scan(&f, 0.0, &alphas, &pts)?;
                put("staircase_kl_scan.csv", &kl_scan_csv(&scan, true))?;
                let flags: Vec<_> = scan.rows.iter().map(|r| json!({ "alpha": r.alpha, "vanishing": r.vanishing, "slope": r.slope })).collect();
                put("staircase_kl_flags.json", &report(&json!({ "points": "1/(n-1) - 1e-9, n = 10..200" }), &flags)?)?;

                let eg: FunctionSpec = env.to_grid()?.into();
                let gpts: Vec<f64> = pts.iter().map(|&x| g.node(g.nearest_index(x))).collect();
                let escan = certify::kl_failure_scan(&eg, 0.0, &[0.0, 0.25, 0.5], &gpts)?;
                put("staircase_envelope_kl_scan.csv", &kl_scan_csv(&escan, false))?;

                let audit = catalog::audit_paper_formula(name, 0.5, -1.0, 1.0, 1e-4)?;
                put("staircase_audit.json", &report(&json!({ "lambda": 0.5, "from": -1.0, "to": 1.0, "h": 1e-4 }), &audit)?)?;

                let t = calculus::lseb_envelope_transfer(1.0, 0.5, 0.5)?;
                put("staircase_transfer.json", &report(&json!({ "rule": "env-lseb", "gamma": 1.0, "mu": 0.5, "lambda": 0.5 }), &t)?)?;
                index.extend(
                    ["staircase_kl_scan.csv", "staircase_kl_flags.json", "staircase_envelope_kl_scan.csv", "staircase_audit.json", "staircase_transfer.json"]
                        .map(String::from),
                );
            }
            "oscillatory" => {
                let s = certify::stationary_scan(&f, 0.001, 0.1, 1e-6)?;
                let mut csv = String::from("lo,hi,root\n");
                for b in &s.brackets {
                    let _ = writeln!(csv, "{},{},{}", fmt_num(b.lo), fmt_num(b.hi), fmt_num(b.root));
                }
                put("oscillatory_stationary.csv", &csv)?;
                let mut d = String::from("k,x,derivative,expected\n");
                for k in 1..=20 {
                    let x = 1.0 / (2.0 * k as f64 * std::f64::consts::PI);
                    let (dv, _) = crate::fnmodel::derivative(&f, x)?;
                    let _ = writeln!(d, "{k},{},{},{}", fmt_num(x), fmt_num(dv), fmt_num(3.0 / (k as f64 * std::f64::consts::PI)));
                }
                put("oscillatory_derivatives.csv", &d)?;
                let cond = varanalysis::check_condition_iii(&f, 0.5, 0.0, 0.3, 200, CondMode::Sufficient)?;
                let t = calculus::lheb_envelope_transfer(2.0, 1.0, 0.5)?;
                put(
                    "oscillatory_transfer.json",
                    &report(&json!({ "rule": "env-lheb", "gamma": 2.0, "mu": 1.0, "lambda": 0.5 }), &json!({ "condition_iii": cond, "transfer": t }))?,
                )?;
                index.extend(["oscillatory_stationary.csv", "oscillatory_derivatives.csv", "oscillatory_transfer.json"].map(String::from));
            }
            _ => {}
        }
    }
    put("index.json", &report(&json!({ "names": names, "seed": seed }), &index)?)?;
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("EB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Process entry point: parses arguments, runs, maps errors to exit code 1.
pub fn main_entry() -> i32 {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string(), "version": VERSION }));
            1
        }
    }
}
