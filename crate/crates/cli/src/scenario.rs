//! Command schemas and `key = value` scenario files.
//!
//! Every key has a typed schema entry; physical keys carry a dimension and
//! are unit-checked when parsed. Resolved values are written back in SI with
//! shortest round-trip formatting, so a manifest parses to the same values.

use std::fmt;
use std::path::Path;

use nng_core::units::{parse_quantity, Dimension, PhysConstants, DENSITY, DIMENSIONLESS, LENGTH, MASS, TIME};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    TauG,
    Metastate,
    Reduce,
    NsLimit,
    Interdiction,
    Phone,
    Oracle,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::TauG,
        Command::Metastate,
        Command::Reduce,
        Command::NsLimit,
        Command::Interdiction,
        Command::Phone,
        Command::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::TauG => "tau-g",
            Command::Metastate => "metastate",
            Command::Reduce => "reduce",
            Command::NsLimit => "ns-limit",
            Command::Interdiction => "interdiction",
            Command::Phone => "phone",
            Command::Oracle => "oracle",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::TauG => "Reduction time and localization width of a homogeneous body",
            Command::Metastate => "Replica metastate weights and their Gaussian concentration",
            Command::Reduce => "Off-diagonal decay of a localized-state cluster",
            Command::NsLimit => "Approach to the mean-field limit as the replica count grows",
            Command::Interdiction => "Feasibility scan of the two signalling conditions",
            Command::Phone => "Everett-phone signal and branch coherence on a time grid",
            Command::Oracle => "Cross-check closed forms against independent computations",
        }
    }

    pub fn parse(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn schema(self) -> &'static [KeySpec] {
        match self {
            Command::TauG => TAU_G,
            Command::Metastate => METASTATE,
            Command::Reduce => REDUCE,
            Command::NsLimit => NS_LIMIT,
            Command::Interdiction => INTERDICTION,
            Command::Phone => PHONE,
            Command::Oracle => ORACLE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Quantity(Dimension),
    Real,
    OptReal,
    Count,
    CountList,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec { name, kind, default, help }
}

const PRESETS: &[&str] = &["body", "width", "cigar"];
const POINTER_PRESETS: &[&str] = &["width", "body"];
const CONVENTIONS: &[&str] = &["hamiltonian", "half"];
const SUITES: &[&str] = &["reduction", "kernel", "metastate"];

static TAU_G: &[KeySpec] = &[
    key("mass", Kind::Quantity(MASS), None, "body mass"),
    key("density", Kind::Quantity(DENSITY), Some("1000 kg/m3"), "body density"),
    key("threshold_mp", Kind::Real, Some("1e11"), "localization threshold in proton masses"),
];

static METASTATE: &[KeySpec] = &[
    key("p", Kind::Real, Some("0.5"), "branch weight of the first outcome"),
    key("replicas", Kind::Count, Some("100"), "number of replicas N"),
];

static REDUCE: &[KeySpec] = &[
    key("mass", Kind::Quantity(MASS), Some("1e12 mp"), "body mass"),
    key("density", Kind::Quantity(DENSITY), Some("1000 kg/m3"), "body density"),
    key("preset", Kind::Choice(PRESETS), Some("body"), "cluster layout"),
    key("sites", Kind::Count, Some("64"), "number of localized states"),
    key("replicas", Kind::Count, Some("2"), "number of replicas N"),
    key("convention", Kind::Choice(CONVENTIONS), Some("hamiltonian"), "phase prefactor convention"),
    key("t_min_tau", Kind::Real, Some("0.01"), "first time, in units of tau_g"),
    key("t_max_tau", Kind::Real, Some("100"), "last time, in units of tau_g"),
    key("points", Kind::Count, Some("200"), "log-spaced time points"),
];

static NS_LIMIT: &[KeySpec] = &[
    key("mass", Kind::Quantity(MASS), Some("1e12 mp"), "body mass"),
    key("density", Kind::Quantity(DENSITY), Some("1000 kg/m3"), "body density"),
    key("preset", Kind::Choice(PRESETS), Some("body"), "cluster layout"),
    key("sites", Kind::Count, Some("64"), "number of localized states"),
    key("t_tau", Kind::Real, Some("1"), "evaluation time, in units of tau_g"),
    key("h", Kind::Count, Some("0"), "row site index"),
    key("k", Kind::Count, Some("1"), "column site index"),
    key("n_list", Kind::CountList, Some("100,1000,10000,100000"), "replica counts"),
];

static INTERDICTION: &[KeySpec] = &[
    key("rho", Kind::Quantity(DENSITY), Some("1000 kg/m3"), "lump density"),
    key("m_rule", Kind::Real, Some("1e-6"), "probe mass as a fraction of the lump mass"),
    key("margin", Kind::Real, Some("10"), "factor read into \"much less than\""),
    key("m_min", Kind::Quantity(MASS), Some("1e11 mp"), "lightest lump"),
    key("m_max", Kind::Quantity(MASS), Some("1e18 mp"), "heaviest lump"),
    key("points", Kind::Count, Some("200"), "log-spaced masses"),
    key("g_scale", Kind::Real, Some("1"), "multiplier on G (test harness knob)"),
];

static PHONE: &[KeySpec] = &[
    key("mass", Kind::Quantity(MASS), Some("1e13 mp"), "pointer mass"),
    key("density", Kind::Quantity(DENSITY), Some("1000 kg/m3"), "pointer density"),
    key("preset", Kind::Choice(POINTER_PRESETS), Some("width"), "pointer cluster layout"),
    key("t_max_tau", Kind::Real, Some("10"), "last time, in units of tau_g"),
    key("points", Kind::Count, Some("101"), "linearly spaced time points from 0"),
    key("coupling_scale", Kind::Real, Some("1"), "multiplier on the cross-colour coupling"),
    key("precession", Kind::OptReal, Some("none"), "q-bit precession rate, rad/s"),
];

static ORACLE: &[KeySpec] = &[
    key("suite", Kind::Choice(SUITES), None, "which cross-check to run"),
    key("nn", Kind::Count, Some("4"), "sites per geometry (reduction) or largest N (metastate)"),
    key("trials", Kind::Count, Some("25"), "random draws"),
    key("seed", Kind::Count, None, "random seed"),
    key("samples", Kind::Count, Some("200000"), "Monte Carlo samples per draw (kernel)"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Quantity(f64, Dimension),
    Real(f64),
    Count(u64),
    Choice(String),
    CountList(Vec<u64>),
    Unset,
}

fn si_unit(dim: Dimension) -> &'static str {
    match dim {
        MASS => "kg",
        DENSITY => "kg/m3",
        TIME => "s",
        LENGTH => "m",
        DIMENSIONLESS => "",
        _ => "?",
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Quantity(v, d) => write!(f, "{v:e} {}", si_unit(*d)),
            Value::Real(v) => write!(f, "{v:e}"),
            Value::Count(n) => write!(f, "{n}"),
            Value::Choice(s) => f.write_str(s),
            Value::CountList(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                f.write_str(&parts.join(","))
            }
            Value::Unset => f.write_str("none"),
        }
    }
}

pub fn parse_value(spec: &KeySpec, text: &str) -> Result<Value> {
    let text = text.trim();
    let bad = |reason: String| CliError::key(spec.name, reason);
    match spec.kind {
        Kind::Quantity(dim) => {
            let q = parse_quantity(text, &PhysConstants::CODATA).map_err(|e| bad(e.to_string()))?;
            if q.dim != dim {
                return Err(bad(format!("unit mismatch: expected {dim}, got {} in `{text}`", q.dim)));
            }
            Ok(Value::Quantity(q.value, dim))
        }
        Kind::Real => parse_real(text).map(Value::Real).map_err(bad),
        Kind::OptReal if text == "none" => Ok(Value::Unset),
        Kind::OptReal => parse_real(text).map(Value::Real).map_err(bad),
        Kind::Count => text
            .parse::<u64>()
            .map(Value::Count)
            .map_err(|_| bad(format!("expected a non-negative integer, got `{text}`"))),
        Kind::CountList => text
            .split(',')
            .map(|p| p.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Value::CountList)
            .map_err(|_| bad(format!("expected comma-separated integers, got `{text}`"))),
        Kind::Choice(options) => {
            if options.contains(&text) {
                Ok(Value::Choice(text.to_string()))
            } else {
                Err(bad(format!("expected one of {}, got `{text}`", options.join("|"))))
            }
        }
    }
}

fn parse_real(text: &str) -> std::result::Result<f64, String> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a dimensionless number, got `{text}`")),
    }
}

/// A fully resolved parameter set, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub command: Command,
    pub values: Vec<(&'static str, Value)>,
}

impl Scenario {
    /// Resolve raw `(key, text)` pairs against the schema; later pairs may
    /// not repeat a key, missing keys take their defaults.
    pub fn resolve(command: Command, raw: &[(String, String)]) -> Result<Scenario> {
        let schema = command.schema();
        for (i, (k, _)) in raw.iter().enumerate() {
            if !schema.iter().any(|s| s.name == k) {
                return Err(CliError::key(k, format!("unknown key for `{}`", command.name())));
            }
            if raw[..i].iter().any(|(p, _)| p == k) {
                return Err(CliError::key(k, "given more than once"));
            }
        }
        let mut values = Vec::with_capacity(schema.len());
        for spec in schema {
            let text = match raw.iter().find(|(k, _)| k == spec.name) {
                Some((_, v)) => v.as_str(),
                None => spec
                    .default
                    .ok_or_else(|| CliError::key(spec.name, "required but not given"))?,
            };
            values.push((spec.name, parse_value(spec, text)?));
        }
        Ok(Scenario { command, values })
    }

    fn get(&self, name: &str) -> &Value {
        &self
            .values
            .iter()
            .find(|(k, _)| *k == name)
            .unwrap_or_else(|| panic!("`{name}` is not in the {} schema", self.command.name()))
            .1
    }

    pub fn quantity(&self, name: &str) -> f64 {
        match self.get(name) {
            Value::Quantity(v, _) => *v,
            other => panic!("`{name}` is not a quantity: {other:?}"),
        }
    }

    pub fn real(&self, name: &str) -> f64 {
        match self.get(name) {
            Value::Real(v) => *v,
            other => panic!("`{name}` is not a real: {other:?}"),
        }
    }

    pub fn opt_real(&self, name: &str) -> Option<f64> {
        match self.get(name) {
            Value::Real(v) => Some(*v),
            Value::Unset => None,
            other => panic!("`{name}` is not an optional real: {other:?}"),
        }
    }

    pub fn count(&self, name: &str) -> u64 {
        match self.get(name) {
            Value::Count(n) => *n,
            other => panic!("`{name}` is not a count: {other:?}"),
        }
    }

    pub fn count_list(&self, name: &str) -> &[u64] {
        match self.get(name) {
            Value::CountList(v) => v,
            other => panic!("`{name}` is not a list: {other:?}"),
        }
    }

    pub fn choice(&self, name: &str) -> &str {
        match self.get(name) {
            Value::Choice(s) => s,
            other => panic!("`{name}` is not a choice: {other:?}"),
        }
    }

    /// `command = ...` followed by one `key = value` line per resolved key.
    pub fn render(&self) -> String {
        let mut out = format!("command = {}\n", self.command.name());
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

pub type RawPairs = Vec<(String, String)>;

/// Split scenario text into `(key, value)` pairs. `#` starts a comment line.
pub fn parse_lines(text: &str) -> Result<RawPairs> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected `key = value`", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Usage(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Raw pairs from a file, with `command` checked against `expected` when
/// both are present. Returns the command named in the file, if any.
pub fn read_scenario_file(path: &Path) -> Result<(Option<Command>, RawPairs)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut pairs = parse_lines(&text)?;
    let mut command = None;
    if let Some(pos) = pairs.iter().position(|(k, _)| k == "command") {
        let (_, name) = pairs.remove(pos);
        if pairs.iter().any(|(k, _)| k == "command") {
            return Err(CliError::key("command", "given more than once"));
        }
        command = Some(Command::parse(&name).ok_or_else(|| CliError::key("command", format!("unknown command `{name}`")))?);
    }
    Ok((command, pairs))
}

/// Load and fully resolve a scenario file for `command`.
pub fn load_scenario(path: &Path, command: Command) -> Result<Scenario> {
    let (named, pairs) = read_scenario_file(path)?;
    if let Some(c) = named {
        if c != command {
            return Err(CliError::key(
                "command",
                format!("file is for `{}`, not `{}`", c.name(), command.name()),
            ));
        }
    }
    Scenario::resolve(command, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_are_filled() {
        let s = Scenario::resolve(Command::TauG, &raw(&[("mass", "1e-6g")])).unwrap();
        assert_eq!(s.render(), "command = tau-g\nmass = 1e-9 kg\ndensity = 1e3 kg/m3\nthreshold_mp = 1e11\n");
    }

    #[test]
    fn unit_mismatch_names_key() {
        let err = Scenario::resolve(Command::TauG, &raw(&[("mass", "1 g"), ("density", "2 kg")])).unwrap_err();
        assert!(err.to_string().starts_with("key `density`: unit mismatch"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_duplicate_missing() {
        assert!(Scenario::resolve(Command::TauG, &raw(&[("mass", "1 g"), ("colour", "red")]))
            .unwrap_err()
            .to_string()
            .contains("`colour`"));
        assert!(Scenario::resolve(Command::TauG, &raw(&[("mass", "1 g"), ("mass", "2 g")])).is_err());
        assert!(Scenario::resolve(Command::TauG, &[]).unwrap_err().to_string().contains("required"));
        assert!(Scenario::resolve(Command::Oracle, &raw(&[("suite", "kernel")])).is_err());
    }

    #[test]
    fn rendered_values_round_trip() {
        for c in Command::ALL {
            let mut pairs = Vec::new();
            if c == Command::TauG {
                pairs = raw(&[("mass", "3.3e12 mp")]);
            }
            if c == Command::Oracle {
                pairs = raw(&[("suite", "metastate"), ("seed", "9")]);
            }
            let s = Scenario::resolve(c, &pairs).unwrap();
            let text = s.render();
            let mut again = parse_lines(&text).unwrap();
            again.retain(|(k, _)| k != "command");
            let back = Scenario::resolve(c, &again).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.render(), text);
        }
    }

    #[test]
    fn golden_fixture_resolves() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
        let s = load_scenario(&dir.join("golden_reduce.scenario"), Command::Reduce).unwrap();
        let expected = std::fs::read_to_string(dir.join("golden_reduce.resolved")).unwrap();
        assert_eq!(s.render(), expected);
        assert_eq!(s.count("sites"), 27);
        assert_eq!(s.choice("convention"), "hamiltonian");
        assert!(load_scenario(&dir.join("golden_reduce.scenario"), Command::Phone).is_err());
    }

    #[test]
    fn line_syntax() {
        let p = parse_lines("# comment\n\n mass = 1 g \n").unwrap();
        assert_eq!(p, raw(&[("mass", "1 g")]));
        assert!(parse_lines("mass 1 g").is_err());
        assert!(parse_lines(" = 3").is_err());
    }

    #[test]
    fn value_kinds() {
        let list = KeySpec { name: "n", kind: Kind::CountList, default: None, help: "" };
        assert_eq!(parse_value(&list, "1, 2,3").unwrap(), Value::CountList(vec![1, 2, 3]));
        assert!(parse_value(&list, "1,x").is_err());
        let opt = KeySpec { name: "w", kind: Kind::OptReal, default: None, help: "" };
        assert_eq!(parse_value(&opt, "none").unwrap(), Value::Unset);
        let choice = KeySpec { name: "c", kind: Kind::Choice(SUITES), default: None, help: "" };
        assert!(parse_value(&choice, "other").is_err());
        let real = KeySpec { name: "r", kind: Kind::Real, default: None, help: "" };
        assert!(parse_value(&real, "inf").is_err());
    }
}
