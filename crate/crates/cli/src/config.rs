//! Resolution of flags, config files and defaults into a [`RunConfig`].

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommandKind {
    PhaseDiagram,
    Spectrum,
    Evolve,
    Encircle,
    Riemann,
    Onset,
}

impl CommandKind {
    pub const ALL: [CommandKind; 6] = [
        CommandKind::PhaseDiagram,
        CommandKind::Spectrum,
        CommandKind::Evolve,
        CommandKind::Encircle,
        CommandKind::Riemann,
        CommandKind::Onset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::PhaseDiagram => "phase-diagram",
            CommandKind::Spectrum => "spectrum",
            CommandKind::Evolve => "evolve",
            CommandKind::Encircle => "encircle",
            CommandKind::Riemann => "riemann",
            CommandKind::Onset => "onset",
        }
    }

    fn about(self) -> &'static str {
        match self {
            CommandKind::PhaseDiagram => "Classify the (delta, chi) plane into unbroken and broken phases",
            CommandKind::Spectrum => "Branch-tracked eigenfrequencies and Bloch angles along delta",
            CommandKind::Evolve => "RK4 time evolution at fixed parameters",
            CommandKind::Encircle => "Evolve around a loop in the (delta, gamma) plane",
            CommandKind::Riemann => "Eigenvalue sheets over the (delta, gamma) plane",
            CommandKind::Onset => "Growth rate before and after a detuning shift",
        }
    }

    pub fn from_name(name: &str) -> Option<CommandKind> {
        CommandKind::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    fn parse(s: &str) -> Option<Format> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Float,
    Count,
    Branch,
}

/// Alternative unit accepted for a quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Alt {
    None,
    /// `<key>-in-chi`, multiplied by chi.
    Chi(&'static str),
    /// `<key>-in-invchi`, divided by chi.
    InvChi(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Default {
    Abs(f64),
    InChi(f64),
    InvChi(f64),
    Int(usize),
    /// No default; the library picks a value.
    Auto,
}

struct ParamDef {
    key: &'static str,
    kind: Kind,
    alt: Alt,
    default: Default,
    help: &'static str,
}

const fn float(key: &'static str, alt: Alt, default: Default, help: &'static str) -> ParamDef {
    ParamDef {
        key,
        kind: Kind::Float,
        alt,
        default,
        help,
    }
}

const fn count(key: &'static str, default: usize, help: &'static str) -> ParamDef {
    ParamDef {
        key,
        kind: Kind::Count,
        alt: Alt::None,
        default: Default::Int(default),
        help,
    }
}

const PHASE_DIAGRAM: &[ParamDef] = &[
    float("delta-min", Alt::None, Default::Abs(-3e-3), "lowest detuning omega_c - omega_s"),
    float("delta-max", Alt::None, Default::Abs(3e-3), "highest detuning"),
    count("delta-count", 401, "detuning samples"),
    float("chi-min", Alt::None, Default::Abs(0.0), "lowest coupling"),
    float("chi-max", Alt::None, Default::Abs(1e-3), "highest coupling"),
    count("chi-count", 401, "coupling samples"),
];

const SPECTRUM: &[ParamDef] = &[
    float("chi", Alt::None, Default::Abs(1e-4), "coupling"),
    float("delta-min", Alt::Chi("delta-min-in-chi"), Default::InChi(-20.0), "lowest detuning"),
    float("delta-max", Alt::Chi("delta-max-in-chi"), Default::InChi(20.0), "highest detuning"),
    count("delta-count", 401, "detuning samples"),
];

const EVOLVE: &[ParamDef] = &[
    float("omega-c", Alt::None, Default::Abs(0.57), "cavity frequency"),
    float("omega-s", Alt::None, Default::Abs(1.0), "spin frequency"),
    float("chi", Alt::None, Default::Abs(2.5e-4), "coupling"),
    float("gamma", Alt::Chi("gamma-in-chi"), Default::Abs(0.0), "decay, split as kappa = gamma/2, Gamma = -gamma/2"),
    float("t-end", Alt::InvChi("t-end-in-invchi"), Default::InvChi(10.0), "duration"),
    float("dt", Alt::None, Default::Auto, "RK4 step (default 2 pi / (200 max|Omega|))"),
    float("alpha-re", Alt::None, Default::Abs(1.0), "initial <a>, real part"),
    float("alpha-im", Alt::None, Default::Abs(0.0), "initial <a>, imaginary part"),
    float("beta-re", Alt::None, Default::Abs(0.0), "initial <b>, real part"),
    float("beta-im", Alt::None, Default::Abs(0.0), "initial <b>, imaginary part"),
];

const ENCIRCLE: &[ParamDef] = &[
    float("chi", Alt::None, Default::Abs(2e-4), "coupling"),
    float("delta0", Alt::Chi("delta0-in-chi"), Default::InChi(2.0), "loop centre detuning"),
    float("rho", Alt::Chi("rho-in-chi"), Default::InChi(1.5), "loop radius"),
    float("period", Alt::InvChi("period-in-invchi"), Default::InvChi(10.0), "signed loop period, > 0 is counterclockwise"),
    count("steps", 2000, "recorded samples along the loop"),
    ParamDef {
        key: "start-branch",
        kind: Kind::Branch,
        alt: Alt::None,
        default: Default::Int(1),
        help: "family of the initial eigenmode (1 or 2)",
    },
    float("dt", Alt::None, Default::Auto, "RK4 step bound"),
];

const RIEMANN: &[ParamDef] = &[
    float("chi", Alt::None, Default::Abs(2e-4), "coupling"),
    float("delta-min", Alt::Chi("delta-min-in-chi"), Default::InChi(0.0), "lowest detuning"),
    float("delta-max", Alt::Chi("delta-max-in-chi"), Default::InChi(4.0), "highest detuning"),
    count("delta-count", 401, "detuning samples"),
    float("gamma-min", Alt::Chi("gamma-min-in-chi"), Default::InChi(-2.0), "lowest decay"),
    float("gamma-max", Alt::Chi("gamma-max-in-chi"), Default::InChi(2.0), "highest decay"),
    count("gamma-count", 401, "decay samples"),
];

const ONSET: &[ParamDef] = &[
    float("chi", Alt::None, Default::Abs(1e-4), "coupling"),
    float("delta", Alt::Chi("delta-in-chi"), Default::InChi(2.5), "detuning before the shift"),
    float("shift", Alt::Chi("shift-in-chi"), Default::InChi(-1.0), "detuning shift"),
];

fn defs(cmd: CommandKind) -> &'static [ParamDef] {
    match cmd {
        CommandKind::PhaseDiagram => PHASE_DIAGRAM,
        CommandKind::Spectrum => SPECTRUM,
        CommandKind::Evolve => EVOLVE,
        CommandKind::Encircle => ENCIRCLE,
        CommandKind::Riemann => RIEMANN,
        CommandKind::Onset => ONSET,
    }
}

fn alt_key(def: &ParamDef) -> Option<&'static str> {
    match def.alt {
        Alt::None => None,
        Alt::Chi(k) | Alt::InvChi(k) => Some(k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Float(f64),
    Count(usize),
}

impl ParamValue {
    fn to_json(self) -> Value {
        match self {
            ParamValue::Float(x) => Value::from(x),
            ParamValue::Count(n) => Value::from(n as u64),
        }
    }
}

/// Fully resolved run: every quantity in absolute units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Resolved parameters in definition order. Quantities without a value
    /// (automatic choices) are absent.
    pub params: Vec<(&'static str, ParamValue)>,
    pub out: PathBuf,
    pub format: Format,
    pub threads: usize,
}

impl RunConfig {
    pub fn get(&self, key: &str) -> Option<ParamValue> {
        self.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Some(ParamValue::Float(x)) => x,
            Some(ParamValue::Count(n)) => n as f64,
            None => panic!("parameter `{key}` is not resolved"),
        }
    }

    pub fn optional_float(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(ParamValue::Float(x)) => Some(x),
            _ => None,
        }
    }

    pub fn count(&self, key: &str) -> usize {
        match self.get(key) {
            Some(ParamValue::Count(n)) => n,
            other => panic!("parameter `{key}` is not a count: {other:?}"),
        }
    }

    /// Flat flag-name → value echo; feeding it back as a config file
    /// reproduces this config.
    pub fn params_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        for (k, v) in &self.params {
            m.insert((*k).to_string(), v.to_json());
        }
        m.insert("out".into(), Value::from(self.out.to_string_lossy().into_owned()));
        m.insert("format".into(), Value::from(self.format.as_str()));
        m.insert("threads".into(), Value::from(self.threads as u64));
        m
    }
}

pub fn cli() -> Command {
    let mut root = Command::new("ep-cavity")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Figure data for spontaneous T-symmetry breaking and exceptional points in a cavity-spin system")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in CommandKind::ALL {
        let mut sub = Command::new(cmd.name())
            .about(cmd.about())
            .arg(Arg::new("config").long("config").value_name("FILE").help("flat JSON object of flag name to value"))
            .arg(Arg::new("out").long("out").value_name("PATH").help("data file (manifest goes next to it)"))
            .arg(Arg::new("format").long("format").value_name("FORMAT").help("csv or json [default: csv]"))
            .arg(Arg::new("threads").long("threads").value_name("N").help("worker threads [default: 1]"));
        for def in defs(cmd) {
            sub = sub.arg(
                Arg::new(def.key)
                    .long(def.key)
                    .value_name("VALUE")
                    .allow_hyphen_values(true)
                    .action(ArgAction::Set)
                    .help(def.help),
            );
            if let Some(id) = alt_key(def) {
                let unit = if matches!(def.alt, Alt::Chi(_)) { "chi" } else { "1/chi" };
                sub = sub.arg(
                    Arg::new(id)
                        .long(id)
                        .value_name("VALUE")
                        .allow_hyphen_values(true)
                        .action(ArgAction::Set)
                        .help(format!("{} in units of {unit}", def.key)),
                );
            }
        }
        root = root.subcommand(sub);
    }
    root
}

pub fn usage() -> String {
    cli().render_help().to_string()
}

/// One layer of raw settings (flags or config file), keyed by flag name.
type Layer = Vec<(String, Value)>;

fn flag_layer(m: &ArgMatches, cmd: CommandKind) -> Layer {
    let mut out = Layer::new();
    let mut keys: Vec<String> = vec!["out".into(), "format".into(), "threads".into()];
    for def in defs(cmd) {
        keys.push(def.key.to_string());
        if let Some(a) = alt_key(def) {
            keys.push(a.to_string());
        }
    }
    for k in keys {
        if let Some(v) = m.get_one::<String>(&k) {
            out.push((k, Value::from(v.clone())));
        }
    }
    out
}

fn config_layer(path: &str, cmd: CommandKind) -> Result<Layer, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config: cannot read `{path}`: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config: `{path}` is not valid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!("config: `{path}` must hold a JSON object")));
    };
    let mut allowed: BTreeSet<String> = ["out", "format", "threads"].iter().map(|s| s.to_string()).collect();
    for def in defs(cmd) {
        allowed.insert(def.key.to_string());
        if let Some(a) = alt_key(def) {
            allowed.insert(a.to_string());
        }
    }
    let mut out = Layer::new();
    for (k, v) in map {
        if !allowed.contains(&k) {
            return Err(CliError::Usage(format!(
                "config: unknown key `{k}` for `{}`",
                cmd.name()
            )));
        }
        if !v.is_null() {
            out.push((k, v));
        }
    }
    Ok(out)
}

fn lookup<'a>(layer: &'a Layer, key: &str) -> Option<&'a Value> {
    layer.iter().find(|(k, _)| k == key).map(|(_, v)| v)
}

fn as_f64(key: &str, v: &Value) -> Result<f64, CliError> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    match x {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(CliError::Usage(format!("`{key}`: expected a finite number, got {v}"))),
    }
}

fn as_count(key: &str, v: &Value) -> Result<usize, CliError> {
    let n = match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse::<u64>().ok(),
        _ => None,
    };
    n.map(|n| n as usize)
        .ok_or_else(|| CliError::Usage(format!("`{key}`: expected a non-negative integer, got {v}")))
}

/// Raw value of a quantity from the highest layer that sets it, in either
/// form. Setting both forms within one layer is a conflict.
fn pick<'a>(layers: &'a [Layer], def: &ParamDef) -> Result<Option<(&'a Value, bool)>, CliError> {
    let alt = alt_key(def);
    for layer in layers {
        let abs = lookup(layer, def.key);
        let rel = alt.and_then(|a| lookup(layer, a));
        match (abs, rel) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(format!(
                    "`{}` and `{}` are two forms of the same quantity; give only one",
                    def.key,
                    alt.unwrap_or_default()
                )))
            }
            (Some(v), None) => return Ok(Some((v, false))),
            (None, Some(v)) => return Ok(Some((v, true))),
            (None, None) => {}
        }
    }
    Ok(None)
}

fn resolve(cmd: CommandKind, layers: &[Layer]) -> Result<RunConfig, CliError> {
    let mut params: Vec<(&'static str, ParamValue)> = Vec::new();
    let chi_of = |params: &Vec<(&'static str, ParamValue)>| -> Option<f64> {
        params.iter().find(|(k, _)| *k == "chi").and_then(|(_, v)| match v {
            ParamValue::Float(x) => Some(*x),
            _ => None,
        })
    };
    for def in defs(cmd) {
        let relative_unit = |key: &str, chi: Option<f64>| -> Result<f64, CliError> {
            match chi {
                Some(c) if c > 0.0 => Ok(c),
                _ => Err(CliError::Usage(format!("`{key}` needs chi > 0"))),
            }
        };
        let value = match (def.kind, pick(layers, def)?) {
            (Kind::Float, Some((v, false))) => Some(ParamValue::Float(as_f64(def.key, v)?)),
            (Kind::Float, Some((v, true))) => {
                let key = alt_key(def).unwrap_or_default();
                let x = as_f64(key, v)?;
                let chi = relative_unit(key, chi_of(&params))?;
                Some(ParamValue::Float(if matches!(def.alt, Alt::Chi(_)) { x * chi } else { x / chi }))
            }
            (Kind::Count | Kind::Branch, Some((v, _))) => Some(ParamValue::Count(as_count(def.key, v)?)),
            (_, None) => match def.default {
                Default::Abs(x) => Some(ParamValue::Float(x)),
                Default::InChi(x) => Some(ParamValue::Float(x * relative_unit(def.key, chi_of(&params))?)),
                Default::InvChi(x) => Some(ParamValue::Float(x / relative_unit(def.key, chi_of(&params))?)),
                Default::Int(n) => Some(ParamValue::Count(n)),
                Default::Auto => None,
            },
        };
        if let Some(v) = value {
            params.push((def.key, v));
        }
    }

    let raw = |key: &str| layers.iter().find_map(|l| lookup(l, key));
    let format = match raw("format") {
        None => Format::Csv,
        Some(v) => v
            .as_str()
            .and_then(Format::parse)
            .ok_or_else(|| CliError::Usage(format!("`format`: expected csv or json, got {v}")))?,
    };
    let threads = match raw("threads") {
        None => 1,
        Some(v) => as_count("threads", v)?,
    };
    let out = match raw("out") {
        None => PathBuf::from(format!("{}.{}", cmd.name(), format.as_str())),
        Some(Value::String(s)) if !s.is_empty() => PathBuf::from(s),
        Some(v) => return Err(CliError::Usage(format!("`out`: expected a path, got {v}"))),
    };
    let config = RunConfig {
        command: cmd,
        params,
        out,
        format,
        threads,
    };
    validate(&config)?;
    Ok(config)
}

fn bad(key: &str, why: &str) -> CliError {
    CliError::Usage(format!("`{key}`: {why}"))
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    if c.threads < 1 {
        return Err(bad("threads", "must be at least 1"));
    }
    let positive = |key: &str| -> Result<(), CliError> {
        if c.float(key) > 0.0 {
            Ok(())
        } else {
            Err(bad(key, "must be > 0"))
        }
    };
    let non_negative = |key: &str| -> Result<(), CliError> {
        if c.float(key) >= 0.0 {
            Ok(())
        } else {
            Err(bad(key, "must be >= 0"))
        }
    };
    let range = |lo: &str, hi: &str, n: &str| -> Result<(), CliError> {
        if c.float(lo) >= c.float(hi) {
            return Err(bad(hi, &format!("must exceed `{lo}`")));
        }
        if c.count(n) < 2 {
            return Err(bad(n, "must be at least 2"));
        }
        Ok(())
    };
    let detuning_floor = |key: &str| -> Result<(), CliError> {
        if c.float(key) > -1.0 {
            Ok(())
        } else {
            Err(bad(key, "omega_c = 1 + delta must stay > 0"))
        }
    };
    match c.command {
        CommandKind::PhaseDiagram => {
            range("delta-min", "delta-max", "delta-count")?;
            range("chi-min", "chi-max", "chi-count")?;
            non_negative("chi-min")?;
            detuning_floor("delta-min")?;
        }
        CommandKind::Spectrum => {
            non_negative("chi")?;
            range("delta-min", "delta-max", "delta-count")?;
            detuning_floor("delta-min")?;
        }
        CommandKind::Evolve => {
            positive("omega-c")?;
            positive("omega-s")?;
            non_negative("chi")?;
            positive("t-end")?;
            if let Some(dt) = c.optional_float("dt") {
                if dt <= 0.0 {
                    return Err(bad("dt", "must be > 0"));
                }
            }
            let zero = ["alpha-re", "alpha-im", "beta-re", "beta-im"].iter().all(|k| c.float(k) == 0.0);
            if zero {
                return Err(bad("alpha-re", "initial state must be nonzero"));
            }
        }
        CommandKind::Encircle => {
            positive("chi")?;
            positive("rho")?;
            if c.float("period") == 0.0 {
                return Err(bad("period", "must be nonzero"));
            }
            if c.count("steps") < ep_cavity::evolution::MIN_LOOP_STEPS {
                return Err(bad("steps", &format!("must be at least {}", ep_cavity::evolution::MIN_LOOP_STEPS)));
            }
            if !matches!(c.count("start-branch"), 1 | 2) {
                return Err(bad("start-branch", "must be 1 or 2"));
            }
            if let Some(dt) = c.optional_float("dt") {
                if dt <= 0.0 {
                    return Err(bad("dt", "must be > 0"));
                }
            }
            if c.float("delta0") - c.float("rho") <= -1.0 {
                return Err(bad("delta0", "loop must keep omega_c > 0"));
            }
        }
        CommandKind::Riemann => {
            positive("chi")?;
            range("delta-min", "delta-max", "delta-count")?;
            range("gamma-min", "gamma-max", "gamma-count")?;
            detuning_floor("delta-min")?;
        }
        CommandKind::Onset => {
            positive("chi")?;
            detuning_floor("delta")?;
            if c.float("delta") + c.float("shift") <= -1.0 {
                return Err(bad("shift", "omega_c = 1 + delta must stay > 0"));
            }
        }
    }
    Ok(())
}

/// Parses `argv` (without the program name). Flags override the config file,
/// which overrides defaults.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    if args.is_empty() {
        return Err(CliError::Usage(usage()));
    }
    let matches = cli()
        .try_get_matches_from(std::iter::once(OsString::from("ep-cavity")).chain(args))
        .map_err(CliError::Clap)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cmd = CommandKind::from_name(name).expect("registered subcommand");
    let mut layers = vec![flag_layer(sub, cmd)];
    if let Some(path) = sub.get_one::<String>("config") {
        layers.push(config_layer(path, cmd)?);
    }
    resolve(cmd, &layers)
}
