//! Command-line front end: flat `key = value` config files, flag overrides,
//! and the verify / integrate / converge / export-catalog commands.
//!
//! Exit codes: 0 pass, 1 residual failure, 2 config error, 3 numerical
//! refusal.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::catalog::{catalog, CatalogError, CatalogParams, NAMES};
use crate::export::{complex_field_csv, curvature_csv, write_atomic, write_patch};
use crate::gaussmap::{DiscMode, Tolerances};
use crate::grid::Domain;
use crate::pipeline::{integrate_stage, label, verify_stage, PipelineError, RunOptions};
use crate::report::{Baseline, ConvergenceTable, ResidualReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    ResidualFailure = 1,
    Config = 2,
    Refusal = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn worst(self, other: Self) -> Self {
        if other.code() > self.code() {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "translator-forge", version, about = "Build and check translating solitons from Gauss-map pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the Gauss-map conditions and the null curve; no integration.
    Verify(Flags),
    /// Integrate the patch, run every geometric check, write mesh and CSVs.
    Integrate(Flags),
    /// Run at several spacings and report observed orders.
    Converge(Flags),
    /// Integrate every catalog example into the output directory.
    ExportCatalog(Flags),
}

/// Values stay strings here so that validation can name the field.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub example: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long = "expr-g1")]
    pub expr_g1: Option<String>,
    #[arg(long = "expr-g2")]
    pub expr_g2: Option<String>,
    /// Grid spacing.
    #[arg(long)]
    pub h: Option<String>,
    /// `u_min,u_max,v_min,v_max`.
    #[arg(long)]
    pub domain: Option<String>,
    /// `strict_disc` or `extended_plane`.
    #[arg(long)]
    pub mode: Option<String>,
    /// `u,v` of the node pinned to the closed-form position (or the origin).
    #[arg(long)]
    pub anchor: Option<String>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<String>,
    /// Integrate even when the loop-closure residual says the field is not closed.
    #[arg(long)]
    pub force: bool,
    /// Comma-separated spacings for `converge`.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long = "eps-hol")]
    pub eps_hol: Option<String>,
    #[arg(long = "eps-branch")]
    pub eps_branch: Option<String>,
    #[arg(long = "refusal-factor")]
    pub refusal_factor: Option<String>,
}

pub const CONFIG_KEYS: [&str; 14] = [
    "example",
    "theta",
    "expr_g1",
    "expr_g2",
    "h",
    "domain",
    "mode",
    "anchor",
    "out_dir",
    "force",
    "levels",
    "eps_hol",
    "eps_branch",
    "refusal_factor",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    /// Where the offending value came from.
    pub origin: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.origin.is_empty() {
            write!(f, "config error in `{}`: {}", self.field, self.message)
        } else {
            write!(f, "config error in `{}` ({}): {}", self.field, self.origin, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn config_error(field: &str, origin: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        origin: origin.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RawValue {
    value: String,
    origin: String,
}

/// Parses a flat config file. Blank lines and `#` comments are skipped;
/// keys may use `-` or `_`.
pub fn parse_config_text(text: &str, path: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    Ok(parse_raw(text, path)?.into_iter().map(|(k, v)| (k, v.value)).collect())
}

fn parse_raw(text: &str, path: &str) -> Result<BTreeMap<String, RawValue>, ConfigError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let origin = format!("{path}:{}", n + 1);
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_error(line, &origin, "expected `key = value`"));
        };
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(config_error(
                &key,
                &origin,
                format!("unknown key; expected one of {}", CONFIG_KEYS.join(", ")),
            ));
        }
        let value = value.trim().trim_matches('"').to_string();
        if out.insert(key.clone(), RawValue { value, origin: origin.clone() }).is_some() {
            return Err(config_error(&key, &origin, "key given twice"));
        }
    }
    Ok(out)
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: String,
    pub params: CatalogParams,
    pub run: RunOptions,
    pub out_dir: Option<PathBuf>,
    pub levels: Vec<f64>,
}

pub const DEFAULT_LEVELS: [f64; 3] = [0.04, 0.02, 0.01];

impl RunConfig {
    /// Merges the config file (if any) with the flags and validates every
    /// field before anything is computed.
    pub fn from_flags(flags: &Flags) -> Result<Self, ConfigError> {
        let mut raw = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_error("config", &path.display().to_string(), e.to_string()))?;
                parse_raw(&text, &path.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        let overrides = [
            ("example", &flags.example),
            ("theta", &flags.theta),
            ("expr_g1", &flags.expr_g1),
            ("expr_g2", &flags.expr_g2),
            ("h", &flags.h),
            ("domain", &flags.domain),
            ("mode", &flags.mode),
            ("anchor", &flags.anchor),
            ("out_dir", &flags.out_dir),
            ("levels", &flags.levels),
            ("eps_hol", &flags.eps_hol),
            ("eps_branch", &flags.eps_branch),
            ("refusal_factor", &flags.refusal_factor),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                let origin = format!("--{}", key.replace('_', "-"));
                raw.insert(key.to_string(), RawValue { value: v.clone(), origin });
            }
        }
        if flags.force {
            raw.insert("force".into(), RawValue { value: "true".into(), origin: "--force".into() });
        }
        Self::validate(&raw)
    }

    /// Validates already-merged `key -> value` pairs.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let raw = map
            .iter()
            .map(|(k, v)| (k.clone(), RawValue { value: v.clone(), origin: String::new() }))
            .collect();
        Self::validate(&raw)
    }

    fn validate(raw: &BTreeMap<String, RawValue>) -> Result<Self, ConfigError> {
        let get = |k: &str| raw.get(k);
        let origin = |k: &str| get(k).map(|r| r.origin.as_str()).unwrap_or("");
        let number = |k: &str| -> Result<Option<f64>, ConfigError> {
            match get(k) {
                None => Ok(None),
                Some(r) => r
                    .value
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(Some)
                    .ok_or_else(|| config_error(k, &r.origin, format!("expected a finite number, got `{}`", r.value))),
            }
        };
        let positive = |k: &str| -> Result<Option<f64>, ConfigError> {
            match number(k)? {
                Some(x) if x <= 0.0 => Err(config_error(k, origin(k), format!("must be positive, got {x}"))),
                other => Ok(other),
            }
        };
        let list = |k: &str, n: Option<usize>| -> Result<Option<Vec<f64>>, ConfigError> {
            let Some(r) = get(k) else { return Ok(None) };
            let parts: Result<Vec<f64>, _> = r.value.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let parts = parts
                .ok()
                .filter(|p| p.iter().all(|x| x.is_finite()))
                .ok_or_else(|| config_error(k, &r.origin, format!("expected comma-separated numbers, got `{}`", r.value)))?;
            if let Some(n) = n {
                if parts.len() != n {
                    return Err(config_error(k, &r.origin, format!("expected {n} numbers, got {}", parts.len())));
                }
            }
            Ok(Some(parts))
        };

        let expr_g1 = get("expr_g1").map(|r| r.value.clone());
        let expr_g2 = get("expr_g2").map(|r| r.value.clone());
        let example = match (get("example"), expr_g1.is_some() || expr_g2.is_some()) {
            (Some(r), has_expr) => {
                if !NAMES.contains(&r.value.as_str()) {
                    return Err(config_error(
                        "example",
                        &r.origin,
                        format!("unknown example `{}`; expected one of {}", r.value, NAMES.join(", ")),
                    ));
                }
                if has_expr && r.value != "custom_expression" {
                    return Err(config_error(
                        "example",
                        &r.origin,
                        "expr_g1/expr_g2 only apply to custom_expression",
                    ));
                }
                r.value.clone()
            }
            (None, true) => "custom_expression".to_string(),
            (None, false) => {
                return Err(config_error("example", "", "missing; give --example or --expr-g1 and --expr-g2"))
            }
        };
        if example == "custom_expression" {
            for (k, v) in [("expr_g1", &expr_g1), ("expr_g2", &expr_g2)] {
                if v.is_none() {
                    return Err(config_error(k, "", "custom_expression needs both expr_g1 and expr_g2"));
                }
            }
        }
        let theta = number("theta")?;
        if theta.is_some() && example != "tilted_reaper" {
            return Err(config_error("theta", origin("theta"), "only applies to tilted_reaper"));
        }
        let mode = match get("mode") {
            None => None,
            Some(r) => Some(match r.value.as_str() {
                "strict_disc" => DiscMode::StrictDisc,
                "extended_plane" => DiscMode::ExtendedPlane,
                other => {
                    return Err(config_error(
                        "mode",
                        &r.origin,
                        format!("expected strict_disc or extended_plane, got `{other}`"),
                    ))
                }
            }),
        };
        let params = CatalogParams {
            theta,
            expr_g1,
            expr_g2,
            mode,
        };
        let spec = catalog(&example, &params).map_err(|e| match &e {
            CatalogError::Expression { which, .. } => {
                let k = if *which == "g1" { "expr_g1" } else { "expr_g2" };
                config_error(k, origin(k), e.to_string())
            }
            _ => config_error("example", origin("example"), e.to_string()),
        })?;

        let mut run = RunOptions::default();
        if let Some(h) = positive("h")? {
            run.h = h;
        }
        let domain = match list("domain", Some(4))? {
            Some(d) => {
                if !(d[0] < d[1] && d[2] < d[3]) {
                    return Err(config_error(
                        "domain",
                        origin("domain"),
                        "expected u_min < u_max and v_min < v_max",
                    ));
                }
                let d = Domain::new(d[0], d[1], d[2], d[3]);
                run.domain = Some(d);
                d
            }
            None => spec.default_domain,
        };
        let short = (domain.u_max - domain.u_min).min(domain.v_max - domain.v_min);
        if run.h > short / 4.0 {
            return Err(config_error(
                "h",
                origin("h"),
                format!("spacing {} leaves fewer than 5 nodes across the domain", run.h),
            ));
        }
        if let Some(a) = list("anchor", Some(2))? {
            if !domain.contains(a[0], a[1]) {
                return Err(config_error("anchor", origin("anchor"), "anchor lies outside the domain"));
            }
            run.anchor = (a[0], a[1]);
        } else if !domain.contains(0.0, 0.0) {
            // The default anchor is the origin; fall back to the centre.
            run.anchor = (0.5 * (domain.u_min + domain.u_max), 0.5 * (domain.v_min + domain.v_max));
        }
        run.force = match get("force") {
            None => false,
            Some(r) => match r.value.as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => return Err(config_error("force", &r.origin, format!("expected true or false, got `{other}`"))),
            },
        };
        let defaults = Tolerances::default();
        run.tolerances = Tolerances {
            eps_hol: positive("eps_hol")?.unwrap_or(defaults.eps_hol),
            eps_branch: positive("eps_branch")?.unwrap_or(defaults.eps_branch),
            refusal_factor: positive("refusal_factor")?.unwrap_or(defaults.refusal_factor),
        };
        let levels = match list("levels", None)? {
            Some(l) => {
                if l.iter().any(|&x| x <= 0.0) {
                    return Err(config_error("levels", origin("levels"), "spacings must be positive"));
                }
                if l.iter().any(|&x| x > short / 4.0) {
                    return Err(config_error(
                        "levels",
                        origin("levels"),
                        "a spacing leaves fewer than 5 nodes across the domain",
                    ));
                }
                l
            }
            None => DEFAULT_LEVELS.to_vec(),
        };
        Ok(Self {
            example,
            params,
            run,
            out_dir: get("out_dir").map(|r| PathBuf::from(&r.value)),
            levels,
        })
    }
}

fn classify(e: &PipelineError) -> ExitStatus {
    match e {
        PipelineError::Catalog(_) | PipelineError::Grid(_) => ExitStatus::Config,
        _ => ExitStatus::Refusal,
    }
}

fn io_failure(err: &mut dyn Write, what: &Path, e: std::io::Error) -> ExitStatus {
    let _ = writeln!(err, "error: cannot write {}: {e}", what.display());
    ExitStatus::Config
}

fn judged(report: &ResidualReport, baseline: &Baseline, err: &mut dyn Write) -> ExitStatus {
    let verdict: Verdict = baseline.judge(report);
    let _ = write!(err, "{}: {}\n{verdict}", report.example, if verdict.passed() { "pass" } else { "FAIL" });
    if verdict.passed() {
        ExitStatus::Pass
    } else {
        ExitStatus::ResidualFailure
    }
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version land here too.
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return ExitStatus::Config;
            }
            let _ = write!(out, "{}", e.render());
            return ExitStatus::Pass;
        }
    };
    run_command(&cli.command, out, err)
}

pub fn run_command(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let flags = match command {
        Command::Verify(f) | Command::Integrate(f) | Command::Converge(f) | Command::ExportCatalog(f) => f,
    };
    let needs_example = !matches!(command, Command::ExportCatalog(_));
    let config = if needs_example {
        RunConfig::from_flags(flags)
    } else {
        // export-catalog picks its own examples.
        let mut f = flags.clone();
        f.example = Some(f.example.unwrap_or_else(|| "grim_reaper".into()));
        RunConfig::from_flags(&f)
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return ExitStatus::Config;
        }
    };
    let baseline = match Baseline::from_env() {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitStatus::Config;
        }
    };
    match command {
        Command::Verify(_) => cmd_verify(&config, &baseline, out, err),
        Command::Integrate(_) => cmd_integrate(&config, &baseline, out, err),
        Command::Converge(_) => cmd_converge(&config, &baseline, out, err),
        Command::ExportCatalog(_) => cmd_export_catalog(&config, &baseline, out, err),
    }
}

pub fn cmd_verify(config: &RunConfig, baseline: &Baseline, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let spec = match catalog(&config.example, &config.params) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitStatus::Config;
        }
    };
    let stage = match verify_stage(&spec, &config.run) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return classify(&e);
        }
    };
    let report = stage.report();
    let _ = writeln!(out, "{}", report.to_json());
    if let Some(dir) = &config.out_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return io_failure(err, dir, e);
        }
        let mut files: Vec<(String, String)> = vec![
            ("report.json".into(), report.to_json()),
            ("f.csv".into(), complex_field_csv(&stage.ncf.f)),
        ];
        for (k, phi) in stage.ncf.phi.iter().enumerate() {
            files.push((format!("phi{}.csv", k + 1), complex_field_csv(phi)));
        }
        for (name, text) in files {
            let p = dir.join(name);
            if let Err(e) = write_atomic(&p, text.as_bytes()) {
                return io_failure(err, &p, e);
            }
        }
    }
    judged(&report, baseline, err)
}

#[derive(Serialize)]
struct Written {
    example: String,
    files: Vec<String>,
}

fn integrate_into(
    dir: &Path,
    example: &str,
    params: &CatalogParams,
    run: &crate::pipeline::RunOptions,
    baseline: &Baseline,
    err: &mut dyn Write,
) -> Result<(ResidualReport, Written, ExitStatus), ExitStatus> {
    let spec = catalog(example, params).map_err(|e| {
        let _ = writeln!(err, "error: {e}");
        ExitStatus::Config
    })?;
    let stage = verify_stage(&spec, run)
        .and_then(|vs| integrate_stage(vs, run))
        .map_err(|e| {
            let _ = writeln!(err, "error: {}: {e}", label(&spec));
            if matches!(e, PipelineError::Immersion(crate::immersion::ImmersionError::Refused { .. })) {
                let _ = writeln!(err, "hint: --force integrates anyway");
            }
            classify(&e)
        })?;
    let report = stage.report();
    let mut files = write_patch(dir, &stage.patch).map_err(|e| io_failure(err, dir, e))?;
    for (name, text) in [
        ("report.json", report.to_json()),
        ("curvature.csv", curvature_csv(&stage.curvature)),
    ] {
        let p = dir.join(name);
        write_atomic(&p, text.as_bytes()).map_err(|e| io_failure(err, &p, e))?;
        files.push(p);
    }
    let status = judged(&report, baseline, err);
    let written = Written {
        example: report.example.clone(),
        files: files.iter().map(|p| p.display().to_string()).collect(),
    };
    Ok((report, written, status))
}

fn out_dir(config: &RunConfig) -> PathBuf {
    config.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

pub fn cmd_integrate(config: &RunConfig, baseline: &Baseline, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let dir = out_dir(config);
    match integrate_into(&dir, &config.example, &config.params, &config.run, baseline, err) {
        Ok((report, _, status)) => {
            let _ = writeln!(out, "{}", report.to_json());
            status
        }
        Err(status) => status,
    }
}

pub fn cmd_converge(config: &RunConfig, baseline: &Baseline, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    if config.levels.len() < 3 {
        let _ = writeln!(err, "config error in `levels`: need at least 3 spacings, got {}", config.levels.len());
        return ExitStatus::Config;
    }
    let spec = match catalog(&config.example, &config.params) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitStatus::Config;
        }
    };
    let mut status = ExitStatus::Pass;
    let mut reports = Vec::new();
    for &h in &config.levels {
        let run = RunOptions { h, ..config.run.clone() };
        match verify_stage(&spec, &run).and_then(|vs| integrate_stage(vs, &run)) {
            Ok(stage) => {
                let report = stage.report();
                status = status.worst(judged(&report, baseline, err));
                reports.push(report);
            }
            Err(e) => {
                let _ = writeln!(err, "error at h = {h}: {e}");
                return classify(&e);
            }
        }
    }
    let table = ConvergenceTable::from_reports(label(&spec), &reports);
    let json = serde_json::to_string_pretty(&table).expect("table serialises");
    let _ = writeln!(out, "{json}");
    if let Some(dir) = &config.out_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return io_failure(err, dir, e);
        }
        let finest = reports
            .iter()
            .min_by(|a, b| a.h().total_cmp(&b.h()))
            .cloned()
            .map(|mut r| {
                r.convergence = table.final_orders();
                r
            })
            .expect("at least three levels");
        for (name, text) in [
            ("convergence.json", json.clone()),
            ("convergence.csv", table.to_csv()),
            ("report.json", finest.to_json()),
        ] {
            let p = dir.join(name);
            if let Err(e) = write_atomic(&p, text.as_bytes()) {
                return io_failure(err, &p, e);
            }
        }
    }
    status
}

/// Theta values exported for the tilted family when none is configured.
pub const EXPORT_THETAS: [f64; 3] = [0.3, 0.7, 1.2];

pub fn cmd_export_catalog(
    config: &RunConfig,
    baseline: &Baseline,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    let root = out_dir(config);
    let thetas: Vec<f64> = match config.params.theta {
        Some(t) => vec![t],
        None => EXPORT_THETAS.to_vec(),
    };
    let mut jobs: Vec<(String, CatalogParams)> = vec![("grim_reaper".into(), CatalogParams::default())];
    for t in thetas {
        jobs.push((
            "tilted_reaper".into(),
            CatalogParams {
                theta: Some(t),
                ..Default::default()
            },
        ));
    }
    jobs.push(("lagrangian_castro_lerma".into(), CatalogParams::default()));

    let mut status = ExitStatus::Pass;
    let mut index = Vec::new();
    for (name, params) in jobs {
        let spec = match catalog(&name, &params) {
            Ok(s) => s,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return ExitStatus::Config;
            }
        };
        let dir = root.join(label(&spec).replace([':', '='], "_"));
        // Each example uses its own domain and anchor.
        let run = RunOptions {
            domain: None,
            anchor: (0.0, 0.0),
            ..config.run.clone()
        };
        match integrate_into(&dir, &name, &params, &run, baseline, err) {
            Ok((_, written, s)) => {
                status = status.worst(s);
                index.push(written);
            }
            Err(s) => status = status.worst(s),
        }
    }
    let json = serde_json::to_string_pretty(&index).expect("index serialises");
    let _ = writeln!(out, "{json}");
    if std::fs::create_dir_all(&root).is_ok() {
        let p = root.join("catalog.json");
        if let Err(e) = write_atomic(&p, json.as_bytes()) {
            return io_failure(err, &p, e);
        }
    }
    status
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn config_text_parses() {
        let m = parse_config_text("# run\nexample = tilted_reaper\ntheta=0.7  # tilt\n\nout-dir = \"x\"\n", "c").unwrap();
        assert_eq!(m["example"], "tilted_reaper");
        assert_eq!(m["theta"], "0.7");
        assert_eq!(m["out_dir"], "x");
    }

    #[test]
    fn config_text_errors_name_the_line() {
        let e = parse_config_text("example = grim_reaper\nspeed = 3\n", "run.cfg").unwrap_err();
        assert_eq!(e.field, "speed");
        assert_eq!(e.origin, "run.cfg:2");
        let e = parse_config_text("h 0.01\n", "run.cfg").unwrap_err();
        assert!(e.message.contains("key = value"));
        let e = parse_config_text("h = 1\nh = 2\n", "run.cfg").unwrap_err();
        assert!(e.message.contains("twice"));
    }

    #[test]
    fn validation_is_field_level() {
        let cases = [
            (vec![("example", "nope")], "example"),
            (vec![("example", "grim_reaper"), ("h", "-1")], "h"),
            (vec![("example", "grim_reaper"), ("h", "abc")], "h"),
            (vec![("example", "grim_reaper"), ("h", "1.5")], "h"),
            (vec![("example", "grim_reaper"), ("domain", "1,0,0,1")], "domain"),
            (vec![("example", "grim_reaper"), ("domain", "1,2")], "domain"),
            (vec![("example", "grim_reaper"), ("mode", "disc")], "mode"),
            (vec![("example", "grim_reaper"), ("anchor", "5,5")], "anchor"),
            (vec![("example", "grim_reaper"), ("theta", "0.3")], "theta"),
            (vec![("example", "grim_reaper"), ("force", "maybe")], "force"),
            (vec![("example", "grim_reaper"), ("levels", "0.04,x")], "levels"),
            (vec![("example", "grim_reaper"), ("eps_hol", "0")], "eps_hol"),
            (vec![("expr_g1", "tanh(u")], "expr_g2"),
            (vec![("expr_g1", "tanh(u"), ("expr_g2", "u")], "expr_g1"),
            (vec![("example", "grim_reaper"), ("expr_g1", "u")], "example"),
            (vec![], "example"),
        ];
        for (pairs, field) in cases {
            let e = RunConfig::from_map(&map(&pairs)).unwrap_err();
            assert_eq!(e.field, field, "{pairs:?}: {e}");
        }
    }

    #[test]
    fn valid_config_fills_options() {
        let c = RunConfig::from_map(&map(&[
            ("example", "tilted_reaper"),
            ("theta", "0.7"),
            ("h", "0.05"),
            ("domain", "-1,1,-1.5,1.5"),
            ("anchor", "0.5,0"),
            ("force", "yes"),
            ("levels", "0.1, 0.05, 0.025"),
        ]))
        .unwrap();
        assert_eq!(c.params.theta, Some(0.7));
        assert_eq!(c.run.h, 0.05);
        assert_eq!(c.run.domain, Some(Domain::new(-1.0, 1.0, -1.5, 1.5)));
        assert_eq!(c.run.anchor, (0.5, 0.0));
        assert!(c.run.force);
        assert_eq!(c.levels, vec![0.1, 0.05, 0.025]);
        let c = RunConfig::from_map(&map(&[("expr_g1", "0.5*tanh(u)"), ("expr_g2", "0.5*tanh(u)")])).unwrap();
        assert_eq!(c.example, "custom_expression");
        assert_eq!(c.levels, DEFAULT_LEVELS.to_vec());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "example = grim_reaper\nh = 0.05\n").unwrap();
        let flags = Flags {
            config: Some(path),
            h: Some("0.1".into()),
            ..Default::default()
        };
        let c = RunConfig::from_flags(&flags).unwrap();
        assert_eq!(c.run.h, 0.1);
        let flags = Flags {
            config: Some(dir.path().join("run.cfg")),
            h: Some("zero".into()),
            ..Default::default()
        };
        let e = RunConfig::from_flags(&flags).unwrap_err();
        assert_eq!((e.field.as_str(), e.origin.as_str()), ("h", "--h"));
    }

    #[test]
    fn usage_errors_exit_with_config_status() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let s = main_with_args(["translator-forge", "verify", "--bogus"], &mut out, &mut err);
        assert_eq!(s, ExitStatus::Config);
        let s = main_with_args(["translator-forge", "verify", "--h", "0.05"], &mut out, &mut err);
        assert_eq!(s, ExitStatus::Config);
        assert!(String::from_utf8_lossy(&err).contains("`example`"));
    }
}
