//! Run configuration.
//!
//! The file is TOML restricted to one level of sections holding scalar
//! `key = value` pairs. Every key is optional; omitted physical parameters
//! take the values of [`SystemConfig::default`]. Keys accepting `"auto"` are
//! resolved from the system at run time.
//!
//! ```toml
//! [system]
//! distance_nm = 17.0
//! orientation = "parallel"   # or an angle in radians
//!
//! [material]
//! path = "builtin:gold"      # or a file, relative to this config
//! format = "n_k"
//!
//! [sweep]
//! omega0_max = "auto"
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nanodimer::sweep::{linspace, SweepParameter, DEFAULT_JUMP_THRESHOLD, DEFAULT_LEG_RELAXATIONS};
use nanodimer::{MaterialFormat, Orientation, SystemConfig};
use toml_edit::{Document, DocumentMut, Item, Table, Value};

/// Material path selecting the bundled gold table.
pub const BUILTIN_GOLD: &str = "builtin:gold";
const AUTO: &str = "auto";

const SCHEMA: &[(&str, &[&str])] = &[
    (
        "system",
        &[
            "transition_energy_ev",
            "eps_s",
            "eps_b",
            "radius_nm",
            "distance_nm",
            "dipole_e_nm",
            "gamma_per_ns",
            "dephasing_per_ns",
            "detuning_per_ns",
            "orientation",
            "feedback_scale",
        ],
    ),
    ("material", &["path", "format"]),
    ("steady", &["omega0_min", "omega0_max", "points"]),
    ("region", &["search_min", "search_max", "tol"]),
    (
        "sweep",
        &[
            "omega0_min",
            "omega0_max",
            "leg_relaxations",
            "ramp_rate",
            "phase_rad",
            "rel_tol",
            "abs_tol",
            "stride_ns",
            "jump_threshold",
        ],
    ),
    ("phase", &["axis1", "axis1_min", "axis1_max", "axis1_points", "axis2", "axis2_min", "axis2_max", "axis2_points"]),
    ("material_inspect", &["energy_min", "energy_max", "points"]),
];

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override(String),
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override(text) => write!(f, "--override '{text}'"),
            Origin::Default => f.write_str("default value"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Origin,
    /// `section.key`, empty for syntax errors.
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}: {}", self.origin, self.message)
        } else {
            write!(f, "{}: {}: {}", self.origin, self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Steady,
    Sweep,
    Region,
    Phase,
    Material,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Steady => "steady",
            Experiment::Sweep => "sweep",
            Experiment::Region => "region",
            Experiment::Phase => "phase",
            Experiment::Material => "material",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaterialSource {
    BuiltinGold,
    /// Absolute path.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSpec {
    pub source: MaterialSource,
    pub format: MaterialFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadySpec {
    pub omega0_min: f64,
    pub omega0_max: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub search_min: f64,
    pub search_max: Option<f64>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub omega0_min: f64,
    pub omega0_max: Option<f64>,
    /// Leg length in slowest relaxation times; ignored when `ramp_rate` is set.
    pub leg_relaxations: f64,
    pub ramp_rate: Option<f64>,
    pub phase_rad: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub stride_ns: Option<f64>,
    pub jump_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpec {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InspectSpec {
    pub energy_min: Option<f64>,
    pub energy_max: Option<f64>,
    pub points: usize,
}

/// Fully validated configuration for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub system: SystemConfig,
    pub material: MaterialSpec,
    pub steady: SteadySpec,
    pub region: RegionSpec,
    pub sweep: SweepSpec,
    pub phase: PhaseSpec,
    pub inspect: InspectSpec,
}

#[derive(Debug, Clone, PartialEq)]
enum Raw {
    Float(f64),
    Int(i64),
    Str(String),
    Bool(bool),
}

impl fmt::Display for Raw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Raw::Float(v) => write!(f, "{v}"),
            Raw::Int(v) => write!(f, "{v}"),
            Raw::Str(s) => write!(f, "\"{s}\""),
            Raw::Bool(b) => write!(f, "{b}"),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1
}

fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, keys)| *keys)
}

fn raw_value(value: &Value) -> Option<Raw> {
    match value {
        Value::Float(v) => Some(Raw::Float(*v.value())),
        Value::Integer(v) => Some(Raw::Int(*v.value())),
        Value::String(v) => Some(Raw::Str(v.value().clone())),
        Value::Boolean(v) => Some(Raw::Bool(*v.value())),
        _ => None,
    }
}

/// Flat `section.key → (value, origin)` view of file plus overrides.
struct Entries {
    map: HashMap<String, (Raw, Origin)>,
}

impl Entries {
    fn from_text(text: &str) -> Result<Self, ConfigError> {
        let doc = Document::parse(text).map_err(|e| ConfigError {
            origin: e.span().map_or(Origin::Line(1), |s| Origin::Line(line_of(text, s.start))),
            key: String::new(),
            message: format!("syntax error: {}", e.message().trim()),
        })?;
        let root = doc.as_table();
        let line = |table: &Table, key: &str| {
            table.key(key).and_then(|k| k.span()).map_or(Origin::Line(1), |s| Origin::Line(line_of(text, s.start)))
        };
        let mut map = HashMap::new();
        for (section, item) in root.iter() {
            let Some(table) = item.as_table() else {
                return Err(ConfigError {
                    origin: line(root, section),
                    key: section.to_string(),
                    message: "keys must appear inside a [section]".into(),
                });
            };
            let Some(keys) = known_keys(section) else {
                let sections: Vec<&str> = SCHEMA.iter().map(|(s, _)| *s).collect();
                return Err(ConfigError {
                    origin: line(root, section),
                    key: section.to_string(),
                    message: format!("unknown section (expected one of {})", sections.join(", ")),
                });
            };
            for (key, item) in table.iter() {
                let full = format!("{section}.{key}");
                let origin = line(table, key);
                if !keys.contains(&key) {
                    return Err(unknown_key(origin, &full, keys));
                }
                let raw = match item {
                    Item::Value(v) => raw_value(v),
                    _ => None,
                }
                .ok_or_else(|| ConfigError {
                    origin: origin.clone(),
                    key: full.clone(),
                    message: "value must be a number, string or boolean".into(),
                })?;
                map.insert(full, (raw, origin));
            }
        }
        Ok(Entries { map })
    }

    /// Applies `section.key=value`; a value that is not valid TOML is taken
    /// as a bare string.
    fn apply_override(&mut self, text: &str) -> Result<(), ConfigError> {
        let origin = Origin::Override(text.to_string());
        let err = |key: &str, message: String| ConfigError { origin: origin.clone(), key: key.to_string(), message };
        let (full, value) = text.split_once('=').ok_or_else(|| err("", "expected section.key=value".into()))?;
        let full = full.trim();
        let (section, key) = full.split_once('.').ok_or_else(|| err(full, "expected section.key=value".into()))?;
        let keys = known_keys(section).ok_or_else(|| err(full, format!("unknown section '{section}'")))?;
        if !keys.contains(&key) {
            return Err(unknown_key(origin, full, keys));
        }
        let value = value.trim();
        let raw = match value.parse::<Value>() {
            Ok(v) => raw_value(&v).ok_or_else(|| err(full, "value must be a number, string or boolean".into()))?,
            Err(_) => Raw::Str(value.to_string()),
        };
        self.map.insert(full.to_string(), (raw, origin));
        Ok(())
    }

    fn origin(&self, key: &str) -> Origin {
        self.map.get(key).map_or(Origin::Default, |(_, o)| o.clone())
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { origin: self.origin(key), key: key.to_string(), message: message.into() }
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some((Raw::Float(v), _)) if v.is_finite() => Ok(*v),
            Some((Raw::Int(v), _)) => Ok(*v as f64),
            Some((other, _)) => Err(self.error(key, format!("expected a finite number, got {other}"))),
        }
    }

    fn number_or_auto(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some((Raw::Str(s), _)) if s == AUTO => Ok(None),
            Some(_) => self.number(key, f64::NAN).map(Some).map_err(|mut e| {
                e.message = format!("{} or \"auto\"", e.message);
                e
            }),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some((Raw::Int(v), _)) if *v >= 1 => Ok(*v as usize),
            Some((other, _)) => Err(self.error(key, format!("expected a positive integer, got {other}"))),
        }
    }

    fn text(&self, key: &str, default: &str) -> Result<String, ConfigError> {
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some((Raw::Str(s), _)) => Ok(s.clone()),
            Some((other, _)) => Err(self.error(key, format!("expected a string, got {other}"))),
        }
    }

    fn parsed<T: FromStr>(&self, key: &str, default: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.text(key, default)?.parse::<T>().map_err(|e| self.error(key, e.to_string()))
    }

    fn check(&self, ok: bool, key: &str, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(self.error(key, message()))
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.number(key, default)?;
        self.check(v > 0.0, key, || format!("must be positive, got {v}"))?;
        Ok(v)
    }

    fn non_negative(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.number(key, default)?;
        self.check(v >= 0.0, key, || format!("must be non-negative, got {v}"))?;
        Ok(v)
    }

    fn positive_or_auto(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.number_or_auto(key)?;
        if let Some(v) = v {
            self.check(v > 0.0, key, || format!("must be positive, got {v}"))?;
        }
        Ok(v)
    }
}

fn unknown_key(origin: Origin, full: &str, keys: &[&str]) -> ConfigError {
    ConfigError {
        origin,
        key: full.to_string(),
        message: format!(
            "unknown key '{}' (expected one of {})",
            full.rsplit('.').next().unwrap_or(full),
            keys.join(", ")
        ),
    }
}

fn system(e: &Entries) -> Result<SystemConfig, ConfigError> {
    let d = SystemConfig::default();
    let orientation = match e.map.get("system.orientation") {
        None => d.orientation,
        Some((Raw::Str(s), _)) => s.parse::<Orientation>().map_err(|m| e.error("system.orientation", m))?,
        Some(_) => Orientation::Tilted(e.number("system.orientation", 0.0)?),
    };
    let config = SystemConfig {
        transition_energy_ev: e.positive("system.transition_energy_ev", d.transition_energy_ev)?,
        eps_s: e.positive("system.eps_s", d.eps_s)?,
        eps_b: e.positive("system.eps_b", d.eps_b)?,
        radius_nm: e.positive("system.radius_nm", d.radius_nm)?,
        distance_nm: e.positive("system.distance_nm", d.distance_nm)?,
        dipole_e_nm: e.positive("system.dipole_e_nm", d.dipole_e_nm)?,
        gamma: e.positive("system.gamma_per_ns", d.gamma)?,
        dephasing: e.positive("system.dephasing_per_ns", d.dephasing)?,
        detuning: e.number("system.detuning_per_ns", d.detuning)?,
        orientation,
        feedback_scale: e.non_negative("system.feedback_scale", d.feedback_scale)?,
    };
    e.check(config.distance_nm > config.radius_nm, "system.distance_nm", || {
        format!("distance_nm = {} must exceed radius_nm = {} (d > a)", config.distance_nm, config.radius_nm)
    })?;
    config.validate().map_err(|err| e.error("system", err.to_string()))?;
    Ok(config)
}

fn material(e: &Entries, base_dir: &Path) -> Result<MaterialSpec, ConfigError> {
    let path = e.text("material.path", BUILTIN_GOLD)?;
    let format = e.parsed::<MaterialFormat>("material.format", MaterialFormat::NK.as_str())?;
    let source = if path == BUILTIN_GOLD {
        MaterialSource::BuiltinGold
    } else {
        let joined = base_dir.join(&path);
        let resolved = joined
            .canonicalize()
            .map_err(|err| e.error("material.path", format!("cannot open '{}': {err}", joined.display())))?;
        e.check(resolved.is_file(), "material.path", || format!("'{}' is not a file", resolved.display()))?;
        MaterialSource::File(resolved)
    };
    Ok(MaterialSpec { source, format })
}

fn range_upper(e: &Entries, key: &str, lower: f64) -> Result<Option<f64>, ConfigError> {
    let upper = e.number_or_auto(key)?;
    if let Some(v) = upper {
        e.check(v > lower, key, || format!("must exceed the lower bound {lower}, got {v}"))?;
    }
    Ok(upper)
}

fn axis(
    e: &Entries,
    n: u8,
    parameter: SweepParameter,
    min: f64,
    max: f64,
    points: usize,
) -> Result<AxisSpec, ConfigError> {
    let key = |k: &str| format!("phase.axis{n}{k}");
    let parameter = e.parsed::<SweepParameter>(&key(""), parameter.key())?;
    let min = e.number(&key("_min"), min)?;
    let max = e.number(&key("_max"), max)?;
    let points = e.count(&key("_points"), points)?;
    e.check(max >= min, &key("_max"), || format!("must not be below axis{n}_min = {min}, got {max}"))?;
    e.check(points == 1 || max > min, &key("_points"), || "several points need axis max > min".into())?;
    Ok(AxisSpec { parameter, min, max, points })
}

impl RunConfig {
    /// Parses and validates `text`. Relative material paths resolve against
    /// `base_dir`; `overrides` (`section.key=value`) win over the file.
    pub fn parse(
        text: &str,
        experiment: Experiment,
        base_dir: &Path,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let mut e = Entries::from_text(text)?;
        for o in overrides {
            e.apply_override(o)?;
        }

        let steady_min = e.non_negative("steady.omega0_min", 0.0)?;
        let steady = SteadySpec {
            omega0_min: steady_min,
            omega0_max: range_upper(&e, "steady.omega0_max", steady_min)?,
            points: e.count("steady.points", 1001)?,
        };

        let search_min = e.non_negative("region.search_min", 0.0)?;
        let region = RegionSpec {
            search_min,
            search_max: range_upper(&e, "region.search_max", search_min)?,
            tol: e.positive("region.tol", 1e-9)?,
        };

        let sweep_min = e.non_negative("sweep.omega0_min", 0.0)?;
        let sweep = SweepSpec {
            omega0_min: sweep_min,
            omega0_max: range_upper(&e, "sweep.omega0_max", sweep_min)?,
            leg_relaxations: e.positive("sweep.leg_relaxations", DEFAULT_LEG_RELAXATIONS)?,
            ramp_rate: e.positive_or_auto("sweep.ramp_rate")?,
            phase_rad: e.number("sweep.phase_rad", 0.0)?,
            rel_tol: e.positive("sweep.rel_tol", 1e-9)?,
            abs_tol: e.positive("sweep.abs_tol", 1e-11)?,
            stride_ns: e.positive_or_auto("sweep.stride_ns")?,
            jump_threshold: e.positive("sweep.jump_threshold", DEFAULT_JUMP_THRESHOLD)?,
        };

        let phase = PhaseSpec {
            axis1: axis(&e, 1, SweepParameter::Distance, 12.0, 40.0, 29)?,
            axis2: axis(&e, 2, SweepParameter::Dipole, 0.2, 1.0, 17)?,
        };
        e.check(phase.axis1.parameter != phase.axis2.parameter, "phase.axis2", || {
            format!("both axes vary {}", phase.axis1.parameter)
        })?;

        let energy_min = e.positive_or_auto("material_inspect.energy_min")?;
        let energy_max = range_upper(&e, "material_inspect.energy_max", energy_min.unwrap_or(0.0))?;
        let inspect = InspectSpec { energy_min, energy_max, points: e.count("material_inspect.points", 201)? };

        Ok(RunConfig {
            experiment,
            system: system(&e)?,
            material: material(&e, base_dir)?,
            steady,
            region,
            sweep,
            phase,
            inspect,
        })
    }

    /// Fully resolved configuration as TOML; parses back to `self`.
    pub fn emit(&self) -> String {
        let mut doc = DocumentMut::new();
        let auto = |v: Option<f64>| v.map_or_else(|| Value::from(AUTO), Value::from);
        let count = |n: usize| Value::from(n as i64);
        let s = &self.system;
        let orientation = match s.orientation {
            Orientation::Tilted(theta) => Value::from(theta),
            other => Value::from(other.to_string()),
        };
        let material_path = match &self.material.source {
            MaterialSource::BuiltinGold => BUILTIN_GOLD.to_string(),
            MaterialSource::File(p) => p.display().to_string(),
        };
        let sections: Vec<(&str, Vec<(&str, Value)>)> = vec![
            (
                "system",
                vec![
                    ("transition_energy_ev", s.transition_energy_ev.into()),
                    ("eps_s", s.eps_s.into()),
                    ("eps_b", s.eps_b.into()),
                    ("radius_nm", s.radius_nm.into()),
                    ("distance_nm", s.distance_nm.into()),
                    ("dipole_e_nm", s.dipole_e_nm.into()),
                    ("gamma_per_ns", s.gamma.into()),
                    ("dephasing_per_ns", s.dephasing.into()),
                    ("detuning_per_ns", s.detuning.into()),
                    ("orientation", orientation),
                    ("feedback_scale", s.feedback_scale.into()),
                ],
            ),
            ("material", vec![("path", material_path.into()), ("format", self.material.format.as_str().into())]),
            (
                "steady",
                vec![
                    ("omega0_min", self.steady.omega0_min.into()),
                    ("omega0_max", auto(self.steady.omega0_max)),
                    ("points", count(self.steady.points)),
                ],
            ),
            (
                "region",
                vec![
                    ("search_min", self.region.search_min.into()),
                    ("search_max", auto(self.region.search_max)),
                    ("tol", self.region.tol.into()),
                ],
            ),
            (
                "sweep",
                vec![
                    ("omega0_min", self.sweep.omega0_min.into()),
                    ("omega0_max", auto(self.sweep.omega0_max)),
                    ("leg_relaxations", self.sweep.leg_relaxations.into()),
                    ("ramp_rate", auto(self.sweep.ramp_rate)),
                    ("phase_rad", self.sweep.phase_rad.into()),
                    ("rel_tol", self.sweep.rel_tol.into()),
                    ("abs_tol", self.sweep.abs_tol.into()),
                    ("stride_ns", auto(self.sweep.stride_ns)),
                    ("jump_threshold", self.sweep.jump_threshold.into()),
                ],
            ),
            (
                "phase",
                vec![
                    ("axis1", self.phase.axis1.parameter.key().into()),
                    ("axis1_min", self.phase.axis1.min.into()),
                    ("axis1_max", self.phase.axis1.max.into()),
                    ("axis1_points", count(self.phase.axis1.points)),
                    ("axis2", self.phase.axis2.parameter.key().into()),
                    ("axis2_min", self.phase.axis2.min.into()),
                    ("axis2_max", self.phase.axis2.max.into()),
                    ("axis2_points", count(self.phase.axis2.points)),
                ],
            ),
            (
                "material_inspect",
                vec![
                    ("energy_min", auto(self.inspect.energy_min)),
                    ("energy_max", auto(self.inspect.energy_max)),
                    ("points", count(self.inspect.points)),
                ],
            ),
        ];
        for (name, entries) in sections {
            let mut table = Table::new();
            for (key, value) in entries {
                table.insert(key, Item::Value(value));
            }
            doc.insert(name, Item::Table(table));
        }
        doc.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::parse(text, Experiment::Steady, Path::new("."), &[])
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.system, SystemConfig::default());
        assert_eq!(c.material.source, MaterialSource::BuiltinGold);
        assert_eq!(c.material.format, MaterialFormat::NK);
        assert_eq!(c.sweep.leg_relaxations, DEFAULT_LEG_RELAXATIONS);
        assert_eq!(c.steady.omega0_max, None);
    }

    #[test]
    fn integers_are_accepted_as_numbers() {
        let c = parse("[system]\ndistance_nm = 20\n").unwrap();
        assert_eq!(c.system.distance_nm, 20.0);
    }

    #[test]
    fn orientation_forms() {
        assert_eq!(
            parse("[system]\norientation = \"perpendicular\"").unwrap().system.orientation,
            Orientation::Perpendicular
        );
        assert_eq!(parse("[system]\norientation = 0.25").unwrap().system.orientation, Orientation::Tilted(0.25));
        let err = parse("[system]\n\norientation = \"diagonal\"").unwrap_err();
        assert_eq!(err.origin, Origin::Line(3));
        assert_eq!(err.key, "system.orientation");
    }

    #[test]
    fn unknown_section_and_top_level_key() {
        let err = parse("[geometry]\nradius_nm = 3\n").unwrap_err();
        assert_eq!(err.key, "geometry");
        assert!(err.message.contains("unknown section"));
        let err = parse("radius_nm = 3\n").unwrap_err();
        assert!(err.message.contains("[section]"));
    }

    #[test]
    fn nesting_and_arrays_rejected() {
        assert!(parse("[system]\nradius_nm = [1, 2]\n").is_err());
        assert!(parse("[system.inner]\nx = 1\n").is_err());
    }

    #[test]
    fn type_mismatch_names_key_and_line() {
        let err = parse("[steady]\npoints = 1.5\n").unwrap_err();
        assert_eq!((err.origin, err.key.as_str()), (Origin::Line(2), "steady.points"));
        let err = parse("[sweep]\n\n\nrel_tol = \"tight\"\n").unwrap_err();
        assert_eq!((err.origin, err.key.as_str()), (Origin::Line(4), "sweep.rel_tol"));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse("[system]\nradius_nm = = 3\n").unwrap_err();
        assert_eq!(err.origin, Origin::Line(2));
        assert!(err.message.starts_with("syntax error"));
    }

    #[test]
    fn overrides_apply_after_file() {
        let o = vec!["system.distance_nm=25".to_string(), "system.orientation = perpendicular".to_string()];
        let c = RunConfig::parse("[system]\ndistance_nm = 20\n", Experiment::Sweep, Path::new("."), &o).unwrap();
        assert_eq!(c.system.distance_nm, 25.0);
        assert_eq!(c.system.orientation, Orientation::Perpendicular);
        let bad = RunConfig::parse("", Experiment::Sweep, Path::new("."), &["system.radius_mnp=3".into()]).unwrap_err();
        assert!(matches!(bad.origin, Origin::Override(_)));
        assert!(bad.message.contains("radius_mnp"));
        assert!(RunConfig::parse("", Experiment::Sweep, Path::new("."), &["distance_nm".into()]).is_err());
    }

    #[test]
    fn bounds_and_axes_validated() {
        assert!(parse("[steady]\nomega0_min = 5\nomega0_max = 4\n").is_err());
        assert!(parse("[sweep]\nramp_rate = 0\n").is_err());
        assert!(parse("[phase]\naxis1 = \"dipole_e_nm\"\n").is_err());
        assert!(parse("[phase]\naxis1 = \"radius_mnp\"\n").is_err());
        assert!(parse("[phase]\naxis1_min = 20\naxis1_max = 20\naxis1_points = 1\n").is_ok());
        assert!(parse("[system]\nfeedback_scale = -1\n").is_err());
    }

    #[test]
    fn missing_material_file_is_rejected() {
        let err = parse("[material]\npath = \"no/such/file.nk\"\n").unwrap_err();
        assert_eq!(err.key, "material.path");
        assert_eq!(err.origin, Origin::Line(2));
    }

    #[test]
    fn emit_round_trips() {
        let text = "[system]\ndistance_nm = 21.5\ndephasing_per_ns = 3.3333333333333335\norientation = 0.3\n\
                    [sweep]\nramp_rate = 0.125\nabs_tol = 1e-13\n[phase]\naxis1 = \"angle_rad\"\n";
        let c = parse(text).unwrap();
        let again = parse(&c.emit()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.emit(), c.emit());
    }
}
