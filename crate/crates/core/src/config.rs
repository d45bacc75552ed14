//! Run configuration: a flat INI file of `[section]` headers and `key = value`
//! lines, `#` or `;` starting a comment line.
//!
//! Any model parameter may hold a comma-separated list, which sweeps the
//! Cartesian product of all listed values (the last key varies fastest).
//! Angles are degrees unless suffixed with `rad`; latitudes are geographic
//! (`90 - colatitude`). `[manifest]` sections are written by the tool and
//! ignored on input, so a manifest is itself a valid config.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::spectrum::{C4Branch, DecayCertificate, LambdaFamily, RhoFamily, SpectrumModel, XiFamily};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: `{key}` is given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: {key}: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

type Section = BTreeMap<String, Entry>;

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "model",
        &[
            "xi", "tau2", "nu", "delta", "values", "rho", "phi", "lambda", "alpha", "gamma", "kappa",
        ],
    ),
    ("run", &["truncation", "n_colat", "n_lon", "seed", "n_reps"]),
    ("output", &["directory", "format"]),
    (
        "covariance",
        &[
            "panel", "lat1", "lat2_min", "lat2_max", "n_lat", "dlon", "dlon_min", "dlon_max", "n_dlon", "lat_min",
            "lat_max",
        ],
    ),
    ("variogram", &["latitudes", "n_lon", "bin_width", "max_lag", "n_reps"]),
    ("converge", &["reference", "truncations", "n_colat", "n_lon", "n_reps"]),
    ("certificate", &["beta", "r", "n0", "branch"]),
];

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("unterminated section header `{trimmed}`"),
            })?;
            let name = name.trim().to_string();
            if name != "manifest" && !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::UnknownSection { line, section: name });
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, found `{trimmed}`"),
        })?;
        let section = current.clone().ok_or_else(|| ConfigError::Syntax {
            line,
            message: "key outside of any section".into(),
        })?;
        if section == "manifest" {
            continue;
        }
        let key = key.trim().to_string();
        let allowed = SECTIONS.iter().find(|(s, _)| *s == section).unwrap().1;
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, section, key });
        }
        let map = sections.get_mut(&section).unwrap();
        if map.contains_key(&key) {
            return Err(ConfigError::Duplicate { line, key });
        }
        map.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line,
            },
        );
    }
    Ok(sections)
}

fn value_error(e: &Entry, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        line: e.line,
        key: key.into(),
        message: message.into(),
    }
}

fn list(e: &Entry) -> Vec<&str> {
    e.value.split(',').map(str::trim).collect()
}

fn parse_f64(e: &Entry, key: &str, s: &str) -> Result<f64, ConfigError> {
    let v: f64 = s
        .parse()
        .map_err(|_| value_error(e, key, format!("`{s}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(value_error(e, key, "must be finite"))
    }
}

fn parse_usize(e: &Entry, key: &str, s: &str) -> Result<usize, ConfigError> {
    s.parse()
        .map_err(|_| value_error(e, key, format!("`{s}` is not a nonnegative integer")))
}

/// Degrees by default, radians with a `rad` suffix.
fn parse_angle(e: &Entry, key: &str, s: &str) -> Result<Angle, ConfigError> {
    match s.strip_suffix("rad") {
        Some(r) => Ok(Angle::Radians(parse_f64(e, key, r.trim())?)),
        None => Ok(Angle::Degrees(parse_f64(e, key, s)?)),
    }
}

fn single<'a>(e: &'a Entry, key: &str) -> Result<&'a str, ConfigError> {
    let items = list(e);
    if items.len() != 1 {
        return Err(value_error(e, key, "expects a single value"));
    }
    Ok(items[0])
}

fn f64_list(e: &Entry, key: &str) -> Result<Vec<f64>, ConfigError> {
    list(e).into_iter().map(|s| parse_f64(e, key, s)).collect()
}

/// An angle as written, so manifests reproduce the user's spelling exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Degrees(f64),
    Radians(f64),
}

impl Angle {
    pub fn radians(self) -> f64 {
        match self {
            Angle::Degrees(d) => d.to_radians(),
            Angle::Radians(r) => r,
        }
    }

    /// Colatitude of a geographic latitude given by this angle.
    pub fn lat_to_colat(self) -> f64 {
        match self {
            Angle::Degrees(d) => crate::geom::colat_from_lat_deg(d),
            Angle::Radians(r) => PI / 2.0 - r,
        }
    }

    fn render(self) -> String {
        match self {
            Angle::Degrees(d) => format!("{d:?}"),
            Angle::Radians(r) => format!("{r:?}rad"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiKind {
    LegendreMatern,
    Multiquadric,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoKind {
    Kronecker,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaKind {
    Indicator,
    Rational,
    Ones,
}

/// `alpha = inf` stands for the isotropic limit and maps to constant lambda.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha {
    Finite(usize),
    Infinite,
}

impl Alpha {
    fn render(self) -> String {
        match self {
            Alpha::Finite(a) => a.to_string(),
            Alpha::Infinite => "inf".into(),
        }
    }
}

/// Model section; every numeric list is a sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub xi: XiKind,
    pub tau2: Vec<f64>,
    pub nu: Vec<f64>,
    pub delta: Vec<f64>,
    /// Custom xi sequence `xi_0, xi_1, ...` (not a sweep).
    pub values: Vec<f64>,
    pub rho: RhoKind,
    pub phi: Vec<f64>,
    pub lambda: LambdaKind,
    pub alpha: Vec<Alpha>,
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            xi: XiKind::LegendreMatern,
            tau2: vec![100.0],
            nu: vec![1.5],
            delta: vec![],
            values: vec![],
            rho: RhoKind::Kronecker,
            phi: vec![],
            lambda: LambdaKind::Indicator,
            alpha: vec![Alpha::Finite(10)],
            gamma: vec![],
            kappa: vec![0.0],
        }
    }
}

/// One point of a model sweep.
#[derive(Debug, Clone)]
pub struct ModelVariant {
    /// `key=value` pairs of the swept parameters, empty without a sweep.
    pub sweep: Vec<(String, String)>,
    pub model: SpectrumModel,
}

impl ModelVariant {
    /// File-name fragment such as `alpha-2_phi-0.5`; empty without a sweep.
    pub fn tag(&self) -> String {
        self.sweep
            .iter()
            .map(|(k, v)| format!("{k}-{v}"))
            .collect::<Vec<_>>()
            .join("_")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Axis {
    Real(&'static str, Vec<f64>),
    Alpha(Vec<Alpha>),
}

impl Axis {
    fn name(&self) -> &'static str {
        match self {
            Axis::Real(n, _) => n,
            Axis::Alpha(_) => "alpha",
        }
    }

    fn len(&self) -> usize {
        match self {
            Axis::Real(_, v) => v.len(),
            Axis::Alpha(v) => v.len(),
        }
    }

    fn render(&self, i: usize) -> String {
        match self {
            Axis::Real(_, v) => format!("{:?}", v[i]),
            Axis::Alpha(v) => v[i].render(),
        }
    }
}

impl ModelConfig {
    fn axes(&self) -> Vec<Axis> {
        let mut axes = Vec::new();
        match self.xi {
            XiKind::LegendreMatern => {
                axes.push(Axis::Real("tau2", self.tau2.clone()));
                axes.push(Axis::Real("nu", self.nu.clone()));
            }
            XiKind::Multiquadric => axes.push(Axis::Real("delta", self.delta.clone())),
            XiKind::Custom => {}
        }
        if self.rho == RhoKind::Exponential {
            axes.push(Axis::Real("phi", self.phi.clone()));
        }
        match self.lambda {
            LambdaKind::Indicator => axes.push(Axis::Alpha(self.alpha.clone())),
            LambdaKind::Rational => axes.push(Axis::Real("gamma", self.gamma.clone())),
            LambdaKind::Ones => {}
        }
        axes.push(Axis::Real("kappa", self.kappa.clone()));
        axes
    }

    /// All models of the sweep, in row-major order over the axes.
    pub fn variants(&self) -> Result<Vec<ModelVariant>, ConfigError> {
        let axes = self.axes();
        let total: usize = axes.iter().map(Axis::len).product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut idx = vec![0; axes.len()];
            let mut rest = flat;
            for (k, axis) in axes.iter().enumerate().rev() {
                idx[k] = rest % axis.len();
                rest /= axis.len();
            }
            let real = |name: &str| -> f64 {
                axes.iter()
                    .zip(&idx)
                    .find_map(|(a, &i)| match a {
                        Axis::Real(n, v) if *n == name => Some(v[i]),
                        _ => None,
                    })
                    .expect("axis present")
            };
            let xi = match self.xi {
                XiKind::LegendreMatern => XiFamily::LegendreMatern {
                    tau2: real("tau2"),
                    nu: real("nu"),
                },
                XiKind::Multiquadric => XiFamily::Multiquadric { delta: real("delta") },
                XiKind::Custom => XiFamily::Custom(self.values.clone()),
            };
            let rho = match self.rho {
                RhoKind::Kronecker => RhoFamily::Kronecker,
                RhoKind::Exponential => RhoFamily::Exponential { phi: real("phi") },
            };
            let lambda = match self.lambda {
                LambdaKind::Indicator => {
                    let a = axes
                        .iter()
                        .zip(&idx)
                        .find_map(|(a, &i)| match a {
                            Axis::Alpha(v) => Some(v[i]),
                            _ => None,
                        })
                        .expect("alpha axis");
                    match a {
                        Alpha::Finite(alpha) => LambdaFamily::Indicator { alpha },
                        Alpha::Infinite => LambdaFamily::Ones,
                    }
                }
                LambdaKind::Rational => LambdaFamily::Rational { gamma: real("gamma") },
                LambdaKind::Ones => LambdaFamily::Ones,
            };
            let model =
                SpectrumModel::new(xi, rho, lambda, real("kappa")).map_err(|e| ConfigError::Model(e.to_string()))?;
            let sweep = axes
                .iter()
                .zip(&idx)
                .filter(|(a, _)| a.len() > 1)
                .map(|(a, &i)| (a.name().to_string(), a.render(i)))
                .collect();
            out.push(ModelVariant { sweep, model });
        }
        Ok(out)
    }

    fn from_section(s: &Section) -> Result<Self, ConfigError> {
        let mut m = ModelConfig::default();
        let kind = |key: &str| s.get(key).map(|e| (e, e.value.to_ascii_lowercase()));
        if let Some((e, v)) = kind("xi") {
            m.xi = match v.as_str() {
                "legendre-matern" => XiKind::LegendreMatern,
                "multiquadric" => XiKind::Multiquadric,
                "custom" => XiKind::Custom,
                _ => return Err(value_error(e, "xi", "expected legendre-matern, multiquadric or custom")),
            };
        }
        if let Some((e, v)) = kind("rho") {
            m.rho = match v.as_str() {
                "kronecker" => RhoKind::Kronecker,
                "exponential" => RhoKind::Exponential,
                _ => return Err(value_error(e, "rho", "expected kronecker or exponential")),
            };
        }
        if let Some((e, v)) = kind("lambda") {
            m.lambda = match v.as_str() {
                "indicator" => LambdaKind::Indicator,
                "rational" => LambdaKind::Rational,
                "ones" => LambdaKind::Ones,
                _ => return Err(value_error(e, "lambda", "expected indicator, rational or ones")),
            };
        }

        let applies = |key: &str| match key {
            "tau2" | "nu" => m.xi == XiKind::LegendreMatern,
            "delta" => m.xi == XiKind::Multiquadric,
            "values" => m.xi == XiKind::Custom,
            "phi" => m.rho == RhoKind::Exponential,
            "alpha" => m.lambda == LambdaKind::Indicator,
            "gamma" => m.lambda == LambdaKind::Rational,
            _ => true,
        };
        for (key, e) in s {
            if !applies(key) {
                return Err(value_error(e, key, "does not apply to the chosen families"));
            }
        }

        let reals = |key: &str, default: Vec<f64>| -> Result<Vec<f64>, ConfigError> {
            s.get(key).map_or(Ok(default), |e| f64_list(e, key))
        };
        m.tau2 = reals("tau2", m.tau2.clone())?;
        m.nu = reals("nu", m.nu.clone())?;
        m.delta = reals("delta", vec![])?;
        m.values = reals("values", vec![])?;
        m.phi = reals("phi", vec![])?;
        m.gamma = reals("gamma", vec![])?;
        m.kappa = reals("kappa", m.kappa.clone())?;
        if let Some(e) = s.get("alpha") {
            m.alpha = list(e)
                .into_iter()
                .map(|v| {
                    if v.eq_ignore_ascii_case("inf") {
                        Ok(Alpha::Infinite)
                    } else {
                        parse_usize(e, "alpha", v).map(Alpha::Finite)
                    }
                })
                .collect::<Result<_, _>>()?;
        }

        let required = |key: &str, v: &[f64]| {
            if applies(key) && v.is_empty() {
                Err(ConfigError::Model(format!(
                    "`{key}` is required by the chosen families"
                )))
            } else {
                Ok(())
            }
        };
        required("delta", &m.delta)?;
        required("values", &m.values)?;
        required("phi", &m.phi)?;
        required("gamma", &m.gamma)?;
        Ok(m)
    }

    fn render(&self, out: &mut String) {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        out.push_str("[model]\n");
        match self.xi {
            XiKind::LegendreMatern => {
                let _ = writeln!(
                    out,
                    "xi = legendre-matern\ntau2 = {}\nnu = {}",
                    join(&self.tau2),
                    join(&self.nu)
                );
            }
            XiKind::Multiquadric => {
                let _ = writeln!(out, "xi = multiquadric\ndelta = {}", join(&self.delta));
            }
            XiKind::Custom => {
                let _ = writeln!(out, "xi = custom\nvalues = {}", join(&self.values));
            }
        }
        match self.rho {
            RhoKind::Kronecker => out.push_str("rho = kronecker\n"),
            RhoKind::Exponential => {
                let _ = writeln!(out, "rho = exponential\nphi = {}", join(&self.phi));
            }
        }
        match self.lambda {
            LambdaKind::Indicator => {
                let a: Vec<String> = self.alpha.iter().map(|a| a.render()).collect();
                let _ = writeln!(out, "lambda = indicator\nalpha = {}", a.join(", "));
            }
            LambdaKind::Rational => {
                let _ = writeln!(out, "lambda = rational\ngamma = {}", join(&self.gamma));
            }
            LambdaKind::Ones => out.push_str("lambda = ones\n"),
        }
        let _ = writeln!(out, "kappa = {}", join(&self.kappa));
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSection {
    pub truncation: Option<usize>,
    pub n_colat: Option<usize>,
    pub n_lon: Option<usize>,
    pub seed: Option<u64>,
    pub n_reps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Panel {
    /// `(L2, dlon)` at fixed `L1`.
    #[default]
    Lag,
    /// `(L1, L2)` at fixed `dlon`.
    Colat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSection {
    pub panel: Panel,
    pub lat1: Angle,
    pub lat2_min: Angle,
    pub lat2_max: Angle,
    pub n_lat: usize,
    pub dlon: Angle,
    pub dlon_min: Angle,
    pub dlon_max: Angle,
    pub n_dlon: usize,
    pub lat_min: Angle,
    pub lat_max: Angle,
}

impl Default for CovarianceSection {
    fn default() -> Self {
        Self {
            panel: Panel::Lag,
            lat1: Angle::Degrees(0.0),
            lat2_min: Angle::Radians(-0.2),
            lat2_max: Angle::Radians(0.2),
            n_lat: 41,
            dlon: Angle::Radians(0.2),
            dlon_min: Angle::Radians(-0.2),
            dlon_max: Angle::Radians(0.2),
            n_dlon: 41,
            lat_min: Angle::Radians(-0.2),
            lat_max: Angle::Radians(0.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariogramSection {
    pub latitudes: Vec<Angle>,
    pub n_lon: usize,
    /// Defaults to the longitude spacing.
    pub bin_width: Option<Angle>,
    pub max_lag: Angle,
    pub n_reps: Option<usize>,
}

impl Default for VariogramSection {
    fn default() -> Self {
        Self {
            latitudes: [60.0, 20.0, -20.0, -60.0].map(Angle::Degrees).to_vec(),
            n_lon: 250,
            bin_width: None,
            max_lag: Angle::Degrees(180.0),
            n_reps: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergeSection {
    pub reference: Option<usize>,
    pub truncations: Option<Vec<usize>>,
    pub n_colat: Option<usize>,
    pub n_lon: Option<usize>,
    pub n_reps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateSection {
    pub beta: f64,
    pub r: f64,
    pub n0: usize,
    pub branch: Option<C4Branch>,
}

impl CertificateSection {
    pub fn certificate(&self) -> Result<DecayCertificate, ConfigError> {
        DecayCertificate::new(self.beta, self.r, self.n0).map_err(|e| ConfigError::Model(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub run: RunSection,
    pub output: OutputSection,
    pub covariance: CovarianceSection,
    pub variogram: VariogramSection,
    pub converge: ConvergeSection,
    pub certificate: Option<CertificateSection>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = parse_sections(text)?;
        let empty = Section::new();
        let sec = |name: &str| sections.get(name).unwrap_or(&empty);
        let mut cfg = RunConfig {
            model: ModelConfig::from_section(sec("model"))?,
            ..Default::default()
        };

        let opt_usize = |s: &Section, key: &str| -> Result<Option<usize>, ConfigError> {
            s.get(key)
                .map(|e| single(e, key).and_then(|v| parse_usize(e, key, v)))
                .transpose()
        };
        let angle = |s: &Section, key: &str, default: Angle| -> Result<Angle, ConfigError> {
            s.get(key)
                .map_or(Ok(default), |e| single(e, key).and_then(|v| parse_angle(e, key, v)))
        };

        let run = sec("run");
        cfg.run = RunSection {
            truncation: opt_usize(run, "truncation")?,
            n_colat: opt_usize(run, "n_colat")?,
            n_lon: opt_usize(run, "n_lon")?,
            seed: run
                .get("seed")
                .map(|e| {
                    single(e, "seed").and_then(|v| {
                        v.parse()
                            .map_err(|_| value_error(e, "seed", "expected an unsigned 64-bit integer"))
                    })
                })
                .transpose()?,
            n_reps: opt_usize(run, "n_reps")?,
        };

        let output = sec("output");
        if let Some(e) = output.get("directory") {
            cfg.output.directory = PathBuf::from(&e.value);
        }
        if let Some(e) = output.get("format") {
            cfg.output.format = match e.value.to_ascii_lowercase().as_str() {
                "csv" => OutputFormat::Csv,
                "binary" => OutputFormat::Binary,
                _ => return Err(value_error(e, "format", "expected csv or binary")),
            };
        }

        let c = sec("covariance");
        let d = CovarianceSection::default();
        cfg.covariance = CovarianceSection {
            panel: match c.get("panel") {
                None => Panel::Lag,
                Some(e) => match e.value.to_ascii_lowercase().as_str() {
                    "lag" => Panel::Lag,
                    "colat" => Panel::Colat,
                    _ => return Err(value_error(e, "panel", "expected lag or colat")),
                },
            },
            lat1: angle(c, "lat1", d.lat1)?,
            lat2_min: angle(c, "lat2_min", d.lat2_min)?,
            lat2_max: angle(c, "lat2_max", d.lat2_max)?,
            n_lat: opt_usize(c, "n_lat")?.unwrap_or(d.n_lat),
            dlon: angle(c, "dlon", d.dlon)?,
            dlon_min: angle(c, "dlon_min", d.dlon_min)?,
            dlon_max: angle(c, "dlon_max", d.dlon_max)?,
            n_dlon: opt_usize(c, "n_dlon")?.unwrap_or(d.n_dlon),
            lat_min: angle(c, "lat_min", d.lat_min)?,
            lat_max: angle(c, "lat_max", d.lat_max)?,
        };
        for (key, n) in [("n_lat", cfg.covariance.n_lat), ("n_dlon", cfg.covariance.n_dlon)] {
            if n == 0 {
                return Err(value_error(c.get(key).unwrap(), key, "must be positive"));
            }
        }

        let v = sec("variogram");
        let d = VariogramSection::default();
        cfg.variogram = VariogramSection {
            latitudes: match v.get("latitudes") {
                None => d.latitudes,
                Some(e) => list(e)
                    .into_iter()
                    .map(|s| parse_angle(e, "latitudes", s))
                    .collect::<Result<_, _>>()?,
            },
            n_lon: opt_usize(v, "n_lon")?.unwrap_or(d.n_lon),
            bin_width: v
                .get("bin_width")
                .map(|e| single(e, "bin_width").and_then(|s| parse_angle(e, "bin_width", s)))
                .transpose()?,
            max_lag: angle(v, "max_lag", d.max_lag)?,
            n_reps: opt_usize(v, "n_reps")?,
        };

        let k = sec("converge");
        cfg.converge = ConvergeSection {
            reference: opt_usize(k, "reference")?,
            truncations: k
                .get("truncations")
                .map(|e| list(e).into_iter().map(|s| parse_usize(e, "truncations", s)).collect())
                .transpose()?,
            n_colat: opt_usize(k, "n_colat")?,
            n_lon: opt_usize(k, "n_lon")?,
            n_reps: opt_usize(k, "n_reps")?,
        };

        if let Some(s) = sections.get("certificate") {
            let need = |key: &str| {
                s.get(key)
                    .ok_or_else(|| ConfigError::Model(format!("[certificate] needs `{key}`")))
            };
            let beta = need("beta").and_then(|e| single(e, "beta").and_then(|v| parse_f64(e, "beta", v)))?;
            let r = need("r").and_then(|e| single(e, "r").and_then(|v| parse_f64(e, "r", v)))?;
            let n0 = need("n0").and_then(|e| single(e, "n0").and_then(|v| parse_usize(e, "n0", v)))?;
            let branch = match s.get("branch") {
                None => None,
                Some(e) => Some(match e.value.to_ascii_lowercase().as_str() {
                    "general" => C4Branch::General,
                    "kronecker" => C4Branch::Kronecker,
                    _ => return Err(value_error(e, "branch", "expected general or kronecker")),
                }),
            };
            cfg.certificate = Some(CertificateSection { beta, r, n0, branch });
        }
        Ok(cfg)
    }

    /// Canonical INI text; parsing it yields an equal config.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        self.model.render(&mut out);

        out.push_str("\n[run]\n");
        let r = &self.run;
        for (key, v) in [
            ("truncation", r.truncation),
            ("n_colat", r.n_colat),
            ("n_lon", r.n_lon),
            ("n_reps", r.n_reps),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        if let Some(seed) = r.seed {
            let _ = writeln!(out, "seed = {seed}");
        }

        let format = match self.output.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Binary => "binary",
        };
        let _ = writeln!(
            out,
            "\n[output]\ndirectory = {}\nformat = {format}",
            self.output.directory.display()
        );

        let c = &self.covariance;
        let panel = match c.panel {
            Panel::Lag => "lag",
            Panel::Colat => "colat",
        };
        let _ = writeln!(out, "\n[covariance]\npanel = {panel}");
        for (key, a) in [
            ("lat1", c.lat1),
            ("lat2_min", c.lat2_min),
            ("lat2_max", c.lat2_max),
            ("dlon", c.dlon),
            ("dlon_min", c.dlon_min),
            ("dlon_max", c.dlon_max),
            ("lat_min", c.lat_min),
            ("lat_max", c.lat_max),
        ] {
            let _ = writeln!(out, "{key} = {}", a.render());
        }
        let _ = writeln!(out, "n_lat = {}\nn_dlon = {}", c.n_lat, c.n_dlon);

        let v = &self.variogram;
        let lats: Vec<String> = v.latitudes.iter().map(|a| a.render()).collect();
        let _ = writeln!(
            out,
            "\n[variogram]\nlatitudes = {}\nn_lon = {}\nmax_lag = {}",
            lats.join(", "),
            v.n_lon,
            v.max_lag.render()
        );
        if let Some(b) = v.bin_width {
            let _ = writeln!(out, "bin_width = {}", b.render());
        }
        if let Some(n) = v.n_reps {
            let _ = writeln!(out, "n_reps = {n}");
        }

        let k = &self.converge;
        out.push_str("\n[converge]\n");
        for (key, v) in [
            ("reference", k.reference),
            ("n_colat", k.n_colat),
            ("n_lon", k.n_lon),
            ("n_reps", k.n_reps),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        if let Some(t) = &k.truncations {
            let t: Vec<String> = t.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "truncations = {}", t.join(", "));
        }

        if let Some(c) = &self.certificate {
            let _ = writeln!(
                out,
                "\n[certificate]\nbeta = {:?}\nr = {:?}\nn0 = {}",
                c.beta, c.r, c.n0
            );
            match c.branch {
                Some(C4Branch::General) => out.push_str("branch = general\n"),
                Some(C4Branch::Kronecker) => out.push_str("branch = kronecker\n"),
                None => {}
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_matern_alpha_ten() {
        let cfg = RunConfig::parse("").unwrap();
        let v = cfg.model.variants().unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].sweep.is_empty());
        let m = &v[0].model;
        assert_eq!(m.xi_family(), &XiFamily::LegendreMatern { tau2: 100.0, nu: 1.5 });
        assert_eq!(m.lambda_family(), LambdaFamily::Indicator { alpha: 10 });
        assert_eq!(m.rho_family(), RhoFamily::Kronecker);
        assert_eq!(m.kappa(), 0.0);
    }

    #[test]
    fn sweeps_expand_in_order() {
        let text = "[model]\nxi = multiquadric\ndelta = 0.7\nrho = exponential\nphi = 0.5, 2\nalpha = 0, 2, inf\n";
        let v = RunConfig::parse(text).unwrap().model.variants().unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(v[0].tag(), "phi-0.5_alpha-0");
        assert_eq!(v[2].tag(), "phi-0.5_alpha-inf");
        assert_eq!(v[2].model.lambda_family(), LambdaFamily::Ones);
        assert_eq!(v[5].tag(), "phi-2.0_alpha-inf");
        assert_eq!(v[3].model.rho_family(), RhoFamily::Exponential { phi: 2.0 });
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("[model]\nxi = legendre-matern\nbogus = 1\n").unwrap_err();
        assert_eq!(
            e,
            ConfigError::UnknownKey {
                line: 3,
                section: "model".into(),
                key: "bogus".into()
            }
        );
        assert!(matches!(
            RunConfig::parse("\n[nope]\n"),
            Err(ConfigError::UnknownSection { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("[run]\nseed 4\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("seed = 4\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("[run]\nseed = 1\n\nseed = 2\n"),
            Err(ConfigError::Duplicate { line: 4, .. })
        ));
        assert!(matches!(
            RunConfig::parse("[run]\n\ntruncation = -3\n"),
            Err(ConfigError::Value { line: 3, .. })
        ));
        assert!(matches!(
            RunConfig::parse("[model]\nxi = multiquadric\ntau2 = 3\n"),
            Err(ConfigError::Value { line: 3, .. })
        ));
        assert!(matches!(
            RunConfig::parse("[model]\nxi = multiquadric\n"),
            Err(ConfigError::Model(_))
        ));
        assert!(matches!(
            RunConfig::parse("[model]\nnu = -1\n").unwrap().model.variants(),
            Err(ConfigError::Model(_))
        ));
    }

    #[test]
    fn angles_and_latitudes() {
        let cfg =
            RunConfig::parse("[covariance]\nlat1 = 30\ndlon_min = -0.1 rad\n[variogram]\nlatitudes = 0, 0.5rad\n")
                .unwrap();
        assert!((cfg.covariance.lat1.lat_to_colat() - PI / 3.0).abs() < 1e-15);
        assert_eq!(cfg.covariance.dlon_min.radians(), -0.1);
        assert_eq!(cfg.variogram.latitudes[0].lat_to_colat(), PI / 2.0);
        assert_eq!(cfg.variogram.latitudes[1].lat_to_colat(), PI / 2.0 - 0.5);
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = "# comment\n[model]\nxi = custom\nvalues = 1, 0.5, 0.25, 0.1\nlambda = rational\ngamma = 1.5\nkappa = 0, 1\n\
                    [run]\nseed = 18446744073709551615\ntruncation = 3\n[output]\nformat = binary\ndirectory = a b/c\n\
                    [variogram]\nbin_width = 2\n[converge]\ntruncations = 4, 8\n[certificate]\nbeta = 4.5\nr = 2\nn0 = 1\nbranch = general\n\
                    [manifest]\nanything = goes\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.run.seed, Some(u64::MAX));
        assert_eq!(cfg.output.directory, PathBuf::from("a b/c"));
        let again = RunConfig::parse(&cfg.to_ini()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_ini(), again.to_ini());
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse(&d.to_ini()).unwrap(), d);
    }

    #[test]
    fn shortest_float_rendering_is_exact() {
        let text = "[model]\ntau2 = 0.1\nnu = 1.0000000000000002\n";
        let cfg = RunConfig::parse(text).unwrap();
        let again = RunConfig::parse(&cfg.to_ini()).unwrap();
        assert_eq!(again.model.nu[0].to_bits(), 1.0000000000000002f64.to_bits());
        assert!(cfg.to_ini().contains("tau2 = 0.1\n"));
    }
}
