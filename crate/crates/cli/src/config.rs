//! Run configuration: INI-style `key = value` lines under `[section]`
//! headers, optional preset base, command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use whitham_core::evolve::{EvolveOpts, StageSolver};
use whitham_core::models::{Family, ModelSpec, TimeScale};
use whitham_core::travel::NewtonOpts;

use crate::initial::Expr;
use crate::presets;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SolveTw,
    SweepBranch,
    Evolve,
    SweepCriticalTimes,
    CompareKdv,
    FitSpectrum,
    StabilityMap,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::SolveTw,
        Command::SweepBranch,
        Command::Evolve,
        Command::SweepCriticalTimes,
        Command::CompareKdv,
        Command::FitSpectrum,
        Command::StabilityMap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::SolveTw => "solve-tw",
            Command::SweepBranch => "sweep-branch",
            Command::Evolve => "evolve",
            Command::SweepCriticalTimes => "sweep-critical-times",
            Command::CompareKdv => "compare-kdv",
            Command::FitSpectrum => "fit-spectrum",
            Command::StabilityMap => "stability-map",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["command", "preset"]),
    ("model", &["family", "eps", "beta", "c", "time-scale"]),
    ("grid", &["n", "l"]),
    ("initial", &["u", "eta", "input"]),
    (
        "evolve",
        &[
            "t-final",
            "nt",
            "stage-solver",
            "stage-tol",
            "stage-max-iter",
            "krasny",
            "record-every",
            "snapshot-every",
            "floor-stop",
        ],
    ),
    ("newton", &["tol", "max-iter", "gmres-tol", "gmres-restart", "max-halvings"]),
    ("travel", &["c", "continuation-start", "continuation-step"]),
    ("branch", &["c-values"]),
    ("analysis", &["delta-tol", "window", "j", "horizon", "eps-values", "component"]),
    ("stability", &["c", "k-max", "k-count"]),
    ("output", &["dir", "plots"]),
];

/// A raw value and where it came from (`file:line:col`).
#[derive(Clone, Debug)]
struct Entry {
    value: String,
    origin: String,
}

type Raw = BTreeMap<String, Entry>;

fn known(section: &str, key: &str) -> bool {
    SCHEMA.iter().any(|(s, keys)| *s == section && keys.contains(&key))
}

fn full_key(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn parse_text(text: &str, name: &str) -> Result<Raw, CliError> {
    let mut raw = Raw::new();
    let mut section = String::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let indent = line.len() - line.trim_start().len();
        let body = strip_comment(line).trim();
        if body.is_empty() {
            continue;
        }
        let at = |col: usize| format!("{name}:{lineno}:{}", col + 1);
        if let Some(rest) = body.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                return Err(CliError::Config(format!("{}: unterminated section header", at(indent))));
            };
            let inner = inner.trim();
            if !SCHEMA.iter().any(|(s, _)| !s.is_empty() && *s == inner) {
                return Err(CliError::Config(format!("{}: unknown section [{inner}]", at(indent + 1))));
            }
            section = inner.to_string();
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(CliError::Config(format!("{}: expected 'key = value'", at(indent))));
        };
        let key = body[..eq].trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("{}: missing key before '='", at(indent))));
        }
        if !known(&section, key) {
            let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
            return Err(CliError::Config(format!("{}: unknown key '{key}' in {place}", at(indent))));
        }
        let after = &body[eq + 1..];
        let value = after.trim();
        let vcol = indent + eq + 1 + (after.len() - after.trim_start().len());
        if value.is_empty() {
            return Err(CliError::Config(format!("{}: empty value for '{key}'", at(vcol))));
        }
        let fk = full_key(&section, key);
        if raw.contains_key(&fk) {
            return Err(CliError::Config(format!("{}: duplicate key '{key}'", at(indent))));
        }
        raw.insert(fk, Entry { value: value.to_string(), origin: at(vcol) });
    }
    Ok(raw)
}

/// Drop a `#` or `;` comment that starts a line or follows whitespace.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if (b == b'#' || b == b';') && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

fn parse_set(arg: &str) -> Result<(String, Entry), CliError> {
    let origin = format!("--set {arg}");
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("{origin}: expected section.key=value")))?;
    let (section, key) = k.trim().split_once('.').unwrap_or(("", k.trim()));
    if !known(section, key) {
        return Err(CliError::Config(format!("{origin}: unknown key '{}'", k.trim())));
    }
    if v.trim().is_empty() {
        return Err(CliError::Config(format!("{origin}: empty value")));
    }
    Ok((full_key(section, key), Entry { value: v.trim().to_string(), origin }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TravelOpts {
    pub c: Option<f64>,
    /// Continue from this speed up to `c`; `None` tries a direct solve first.
    pub continuation_start: Option<f64>,
    pub continuation_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeltaTol {
    GridSpacing,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOpts {
    pub delta_tol: DeltaTol,
    pub window: Option<(f64, f64)>,
    pub j: u32,
    pub horizon: f64,
    pub eps_values: Vec<f64>,
    /// Component fitted by fit-spectrum for systems.
    pub component: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityOpts {
    pub c: Option<f64>,
    pub k_max: f64,
    pub k_count: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Option<String>,
    pub model: ModelSpec,
    pub n: usize,
    pub l: f64,
    pub initial_u: Option<Expr>,
    pub initial_eta: Option<Expr>,
    pub input: Option<PathBuf>,
    pub evolve: EvolveOpts,
    /// Set when the config gave the evolution horizon and step count.
    pub has_evolve_span: bool,
    pub newton: NewtonOpts,
    pub travel: TravelOpts,
    pub branch_c: Vec<f64>,
    pub analysis: AnalysisOpts,
    pub stability: StabilityOpts,
    pub out_dir: PathBuf,
    pub plots: bool,
    /// Every resolved key with its value, for the run manifest.
    pub resolved: Vec<(String, String)>,
}

struct Reader {
    raw: Raw,
}

impl Reader {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.raw.get(key)
    }

    fn err(&self, key: &str, msg: impl fmt::Display) -> CliError {
        match self.entry(key) {
            Some(e) => CliError::Config(format!("{}: {key}: {msg}", e.origin)),
            None => CliError::Config(format!("{key}: {msg}")),
        }
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }

    fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| self.err(key, format!("expected {what}, got '{v}'"))),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        let v: Option<f64> = self.parsed(key, "a number")?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(self.err(key, "must be finite"));
            }
        }
        Ok(v)
    }

    fn f64_in(&self, key: &str, default: f64, ok: impl Fn(f64) -> bool, range: &str) -> Result<f64, CliError> {
        let v = self.f64(key)?.unwrap_or(default);
        if !ok(v) {
            return Err(self.err(key, format!("{v} out of range ({range})")));
        }
        Ok(v)
    }

    fn usize_in(&self, key: &str, default: usize, min: usize) -> Result<usize, CliError> {
        let v = self.parsed::<usize>(key, "a nonnegative integer")?.unwrap_or(default);
        if v < min {
            return Err(self.err(key, format!("{v} out of range (must be at least {min})")));
        }
        Ok(v)
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.str(key).ok_or_else(|| CliError::Config(format!("missing required key {key}")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(v) = self.str(key) else { return Ok(None) };
        let list = parse_list(v).map_err(|m| self.err(key, m))?;
        if list.is_empty() {
            return Err(self.err(key, "empty list"));
        }
        Ok(Some(list))
    }
}

/// `a, b, c` or an inclusive range `start:stop:step`.
fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("expected a number, got '{}'", s.trim()));
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err("range must be start:stop:step".into());
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || b < a {
            return Err("range needs step > 0 and stop >= start".into());
        }
        let count = ((b - a) / h + 1e-9).floor() as usize;
        if count > 100_000 {
            return Err("range has too many points".into());
        }
        // a + i h rounded to 12 digits keeps 1.01:1.30:0.01 free of 1.0999999
        Ok((0..=count).map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12).collect())
    } else {
        v.split(',').map(num).collect()
    }
}

fn merge(base: &mut Raw, over: Raw) {
    for (k, v) in over {
        base.insert(k, v);
    }
}

/// Build a validated configuration for `command` from a config text (or
/// `preset:NAME`) and `section.key=value` overrides.
pub fn parse_config(command: Command, text: &str, source: &str, sets: &[String]) -> Result<RunConfig, CliError> {
    let file = parse_text(text, source)?;
    let mut overrides = Raw::new();
    for s in sets {
        let (k, e) = parse_set(s)?;
        overrides.insert(k, e);
    }
    let preset = overrides
        .get("preset")
        .or_else(|| file.get("preset"))
        .map(|e| (e.value.clone(), e.origin.clone()));
    let mut raw = Raw::new();
    if let Some((name, origin)) = &preset {
        let body = presets::get(name).ok_or_else(|| {
            CliError::Config(format!("{origin}: unknown preset '{name}' (known: {})", presets::names().join(", ")))
        })?;
        raw = parse_text(body, &format!("preset {name}"))?;
        if raw.contains_key("preset") {
            return Err(CliError::Config(format!("preset {name} may not name another preset")));
        }
    }
    merge(&mut raw, file);
    merge(&mut raw, overrides);
    build(command, Reader { raw })
}

pub fn load_config(command: Command, config: &str, sets: &[String]) -> Result<RunConfig, CliError> {
    if let Some(name) = config.strip_prefix("preset:") {
        return parse_config(command, &format!("preset = {name}\n"), "command line", sets);
    }
    let text = std::fs::read_to_string(config).map_err(|e| CliError::Io(format!("cannot read {config}: {e}")))?;
    parse_config(command, &text, config, sets)
}

fn build(command: Command, r: Reader) -> Result<RunConfig, CliError> {
    if let Some(c) = r.str("command") {
        let named: Command = c.parse().map_err(|m: String| r.err("command", m))?;
        if named != command {
            return Err(r.err("command", format!("config is for '{named}', invoked as '{command}'")));
        }
    }

    let family = match r.str("model.family").unwrap_or("whitham") {
        "whitham" => Family::Whitham,
        "kdv" => Family::Kdv,
        "boussinesq" => Family::Boussinesq,
        other => return Err(r.err("model.family", format!("unknown family '{other}' (whitham, kdv, boussinesq)"))),
    };
    let eps = match command {
        Command::SweepCriticalTimes => r.f64("model.eps")?.unwrap_or(1.0),
        _ => r.f64("model.eps")?.ok_or_else(|| CliError::Config("missing required key model.eps".into()))?,
    };
    if !(eps > 0.0) {
        return Err(r.err("model.eps", format!("{eps} out of range (must be positive)")));
    }
    let beta = r.f64_in("model.beta", 0.0, |b| b >= 0.0, "must be nonnegative")?;
    let c = r.f64("model.c")?.unwrap_or(0.0);
    let time_scale = match r.str("model.time-scale").unwrap_or("t") {
        "t" => TimeScale::T,
        "tau" => TimeScale::Tau,
        other => return Err(r.err("model.time-scale", format!("unknown time scale '{other}' (t, tau)"))),
    };
    if time_scale == TimeScale::Tau && family == Family::Boussinesq {
        return Err(r.err("model.time-scale", "tau scaling applies to scalar equations only"));
    }
    let mut model = ModelSpec::new(family, eps).with_beta(beta).with_speed(c);
    if time_scale == TimeScale::Tau {
        model = model.with_tau();
    }

    // stability-map uses its own wavenumber list and a snapshot input carries its grid
    let grid_needed = command != Command::StabilityMap && r.str("initial.input").is_none();
    if grid_needed {
        r.require("grid.n")?;
        r.require("grid.l")?;
    }
    let n = r.usize_in("grid.n", 1024, 0)?;
    if !n.is_power_of_two() || n < 4 {
        return Err(r.err("grid.n", format!("{n} must be a power of two and at least 4")));
    }
    let l = r.f64_in("grid.l", 1.0, |v| v > 0.0, "must be positive")?;

    let expr = |key: &str| -> Result<Option<Expr>, CliError> {
        r.str(key).map(|s| Expr::parse(s).map_err(|m| r.err(key, m))).transpose()
    };
    let initial_u = expr("initial.u")?;
    let initial_eta = expr("initial.eta")?;
    let input = r.str("initial.input").map(PathBuf::from);
    if input.is_some() && (initial_u.is_some() || initial_eta.is_some()) {
        return Err(r.err("initial.input", "give either a snapshot input or initial expressions, not both"));
    }
    if initial_eta.is_some() && family != Family::Boussinesq {
        return Err(r.err("initial.eta", "eta is only used by the boussinesq family"));
    }

    let t_final = r.f64("evolve.t-final")?;
    let nt: Option<usize> = r.parsed("evolve.nt", "a positive integer")?;
    let mut evolve = EvolveOpts::new(t_final.unwrap_or(1.0), nt.unwrap_or(1));
    if let Some(t) = t_final {
        if !(t > 0.0) {
            return Err(r.err("evolve.t-final", format!("{t} out of range (must be positive)")));
        }
    }
    if nt == Some(0) {
        return Err(r.err("evolve.nt", "0 out of range (must be positive)"));
    }
    evolve.stage_solver = match r.str("evolve.stage-solver").unwrap_or("auto") {
        "auto" => None,
        "fixed-point" => Some(StageSolver::FixedPoint),
        "simplified-newton" => Some(StageSolver::SimplifiedNewton),
        other => {
            return Err(r.err(
                "evolve.stage-solver",
                format!("unknown stage solver '{other}' (auto, fixed-point, simplified-newton)"),
            ))
        }
    };
    evolve.stage_tol = r.f64_in("evolve.stage-tol", 1e-12, |v| v > 0.0, "must be positive")?;
    evolve.stage_max_iter = r.usize_in("evolve.stage-max-iter", 100, 1)?;
    evolve.krasny = r.f64_in("evolve.krasny", 1e-12, |v| v >= 0.0, "must be nonnegative")?;
    evolve.record_every = r.usize_in("evolve.record-every", 1, 1)?;
    evolve.snapshot_every = r.usize_in("evolve.snapshot-every", 0, 0)?;
    evolve.floor_stop = r.f64_in("evolve.floor-stop", 1e-2, |v| v > 0.0, "must be positive")?;

    let d = NewtonOpts::default();
    let newton = NewtonOpts {
        newton_tol: r.f64_in("newton.tol", d.newton_tol, |v| v > 0.0, "must be positive")?,
        max_newton: r.usize_in("newton.max-iter", d.max_newton, 1)?,
        gmres_tol: r.f64_in("newton.gmres-tol", d.gmres_tol, |v| v > 0.0 && v < 1.0, "must lie in (0, 1)")?,
        gmres_restart: r.usize_in("newton.gmres-restart", d.gmres_restart, 1)?,
        max_halvings: r.usize_in("newton.max-halvings", d.max_halvings, 0)?,
    };

    let travel = TravelOpts {
        c: r.f64("travel.c")?,
        continuation_start: r.f64("travel.continuation-start")?,
        continuation_step: r.f64_in("travel.continuation-step", 0.01, |v| v > 0.0, "must be positive")?,
    };
    let branch_c = r.list("branch.c-values")?.unwrap_or_default();
    if branch_c.windows(2).any(|w| w[1] <= w[0]) {
        return Err(r.err("branch.c-values", "speeds must be strictly ascending"));
    }

    let delta_tol = match r.str("analysis.delta-tol") {
        None | Some("dx") => DeltaTol::GridSpacing,
        Some(_) => DeltaTol::Value(r.f64_in("analysis.delta-tol", 0.0, |v| v >= 0.0, "must be nonnegative or 'dx'")?),
    };
    let window = match r.str("analysis.window") {
        None | Some("auto") => None,
        Some(_) => {
            let w = r.list("analysis.window")?.unwrap_or_default();
            if w.len() != 2 || !(w[0] > 0.0 && w[1] > w[0]) {
                return Err(r.err("analysis.window", "expected 'kmin, kmax' with 0 < kmin < kmax, or 'auto'"));
            }
            Some((w[0], w[1]))
        }
    };
    let j = r.usize_in("analysis.j", 0, 0)?;
    if j > 2 {
        return Err(r.err("analysis.j", format!("{j} out of range (0, 1 or 2)")));
    }
    let eps_values = r.list("analysis.eps-values")?.unwrap_or_default();
    if eps_values.iter().any(|&e| !(e > 0.0)) {
        return Err(r.err("analysis.eps-values", "all values must be positive"));
    }
    let component = r.str("analysis.component").unwrap_or("u").to_string();
    if component != "u" && component != "eta" {
        return Err(r.err("analysis.component", format!("unknown component '{component}' (u, eta)")));
    }
    let analysis = AnalysisOpts {
        delta_tol,
        window,
        j: j as u32,
        horizon: r.f64_in("analysis.horizon", 1.0, |v| v > 0.0, "must be positive")?,
        eps_values,
        component,
    };

    let stability = StabilityOpts {
        c: r.f64("stability.c")?,
        k_max: r.f64_in("stability.k-max", 20.0, |v| v > 0.0, "must be positive")?,
        k_count: r.usize_in("stability.k-count", 200, 1)?,
    };

    let out_dir = PathBuf::from(r.str("output.dir").unwrap_or("whitham-out"));
    let plots = match r.str("output.plots").unwrap_or("true") {
        "true" | "yes" | "1" => true,
        "false" | "no" | "0" => false,
        other => return Err(r.err("output.plots", format!("expected true or false, got '{other}'"))),
    };

    let cfg = RunConfig {
        command,
        preset: r.str("preset").map(String::from),
        model,
        n,
        l,
        initial_u,
        initial_eta,
        input,
        evolve,
        has_evolve_span: t_final.is_some() && nt.is_some(),
        newton,
        travel,
        branch_c,
        analysis,
        stability,
        out_dir,
        plots,
        resolved: r.raw.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect(),
    };
    cfg.check_command(&r)?;
    Ok(cfg)
}

impl RunConfig {
    fn check_command(&self, r: &Reader) -> Result<(), CliError> {
        let need = |key: &str| r.require(key).map(|_| ());
        let need_span = || -> Result<(), CliError> {
            need("evolve.t-final")?;
            need("evolve.nt")
        };
        let has_data = self.initial_u.is_some() || self.initial_eta.is_some() || self.input.is_some();
        let scalar_only = |what: &str| {
            if self.model.family == Family::Boussinesq {
                Err(r.err("model.family", format!("{what} needs a scalar model (whitham or kdv)")))
            } else {
                Ok(())
            }
        };
        match self.command {
            Command::Evolve => {
                need_span()?;
                if !has_data {
                    return Err(CliError::Config("missing initial data: set initial.u, initial.eta or initial.input".into()));
                }
            }
            Command::SolveTw => {
                need("travel.c")?;
                if self.model.family == Family::Kdv {
                    return Err(r.err("model.family", "traveling waves are computed for whitham and boussinesq"));
                }
            }
            Command::SweepBranch => {
                need("branch.c-values")?;
                if self.model.family == Family::Kdv {
                    return Err(r.err("model.family", "traveling waves are computed for whitham and boussinesq"));
                }
            }
            Command::SweepCriticalTimes => {
                need_span()?;
                need("analysis.eps-values")?;
                need("initial.u")?;
                scalar_only("sweep-critical-times")?;
            }
            Command::CompareKdv => {
                need("evolve.nt")?;
                need("initial.u")?;
                if self.model.family != Family::Whitham || self.model.beta != 0.0 {
                    return Err(r.err("model.family", "compare-kdv compares the plain whitham model (beta = 0) with kdv"));
                }
            }
            Command::FitSpectrum => {
                if !has_data {
                    return Err(CliError::Config("missing field: set initial.input or an initial expression".into()));
                }
            }
            Command::StabilityMap => {
                need("stability.c")?;
                if !(self.stability.c.unwrap_or(0.0) > 0.0) {
                    return Err(r.err("stability.c", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_sections() {
        let raw = parse_text("# top\ncommand = evolve ; trailing\n[grid]\n  n = 64 # modes\n", "t").unwrap();
        assert_eq!(raw["command"].value, "evolve");
        assert_eq!(raw["grid.n"].value, "64");
        assert_eq!(raw["grid.n"].origin, "t:4:7");
    }

    #[test]
    fn list_forms() {
        assert_eq!(parse_list("1, 0.5,0.25").unwrap(), vec![1.0, 0.5, 0.25]);
        let r = parse_list("1.01:1.05:0.01").unwrap();
        assert_eq!(r, vec![1.01, 1.02, 1.03, 1.04, 1.05]);
        assert!(parse_list("1:0:0.1").is_err());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_text("[grid]\nn 64\n", "f").unwrap_err();
        assert!(e.to_string().contains("f:2:1"), "{e}");
        let e = parse_text("[grid\n", "f").unwrap_err();
        assert!(e.to_string().contains("f:1:1"), "{e}");
        let e = parse_text("[model]\neps =\n", "f").unwrap_err();
        assert!(e.to_string().contains("f:2:6"), "{e}");
    }
}
