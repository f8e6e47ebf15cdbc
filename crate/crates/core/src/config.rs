//! Run configuration: a sectioned `key = value` text file, or the JSON form
//! of an already resolved configuration.
//!
//! ```text
//! # comment
//! [domain]
//! kind = interval
//! lower = -1
//! upper = 1
//!
//! [coefficients]
//! a = 0.5*abs(1-abs(x))^2
//! b = tan(-pi*x/2) + sign(x)
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::exprlang::{parse, Expr, ParseError};
use crate::problem::{CoefficientSet, DomainKind, DomainSpec, ExhaustionRule, InitialMeasure, Problem, ProblemError};

pub const CONFIG_VERSION: u32 = 1;
/// Largest accepted input, to keep hostile files cheap to reject.
pub const MAX_CONFIG_BYTES: usize = 1 << 20;
const MAX_DIM: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate {what}")]
    Duplicate { line: usize, what: String },
    #[error("[{section}] is missing `{key}`")]
    Missing { section: String, key: String },
    #[error("[{section}] {key}: {msg}")]
    Value { section: String, key: String, msg: String },
    #[error("[{section}] {key}: {source}")]
    Expr { section: String, key: String, source: ParseError },
    #[error("config is larger than {MAX_CONFIG_BYTES} bytes")]
    TooLarge,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    /// interval, box or whole_space
    pub kind: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub dim: usize,
    /// dyadic or linear
    pub exhaustion: String,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    /// d×d entries, row-major.
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// dirac, density or uniform
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
}

pub const CERTIFICATE_NAMES: [&str; 6] = ["existence", "timedep", "ergodic", "integrability", "uniqueness_i", "uniqueness_ii"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSection {
    pub v: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    pub certificates: Vec<String>,
    pub k_max: u32,
    pub samples: usize,
    pub seed: u64,
    pub cells: usize,
    pub ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub t_end: f64,
    pub k: u32,
    pub n: usize,
    pub dt: f64,
    pub eps: Vec<f64>,
    pub save_times: Vec<f64>,
    /// 0 disables mollification.
    pub mollify_n: u32,
    pub mollify_spacing: f64,
    pub validate_samples: usize,
    pub validate_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub dt: f64,
    pub paths: usize,
    pub sample_k: u32,
    pub sample_cells: usize,
    /// Comparison is made on about this many blocks of grid cells.
    pub compare_blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub mass: f64,
    pub compare_l1: f64,
    pub moment: f64,
}

/// A fully resolved configuration: every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub domain: DomainSection,
    pub coefficients: CoefficientSection,
    pub initial: InitialSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovSection>,
    pub solver: SolverSection,
    pub mc: McSection,
    pub tolerances: ToleranceSection,
}

struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

const SECTIONS: [&str; 7] = ["domain", "coefficients", "initial", "lyapunov", "solver", "mc", "tolerances"];

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('a'..='z')) && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

fn split_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax { line, msg: "unterminated section header".into() })?.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection { line, name: name.into() });
            }
            if out.contains_key(name) {
                return Err(ConfigError::Duplicate { line, what: format!("section [{name}]") });
            }
            out.insert(name.into(), BTreeMap::new());
            current = Some(name.into());
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax { line, msg: "expected `key = value`".into() })?;
        let key = key.trim();
        if !is_ident(key) {
            return Err(ConfigError::Syntax { line, msg: format!("bad key `{key}`") });
        }
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        let section = current.as_ref().ok_or_else(|| ConfigError::Syntax { line, msg: "key outside of any section".into() })?;
        let map = out.get_mut(section).expect("section inserted");
        if map.contains_key(key) {
            return Err(ConfigError::Duplicate { line, what: format!("key `{key}`") });
        }
        map.insert(key.into(), Entry { line, value: value.into() });
    }
    Ok(out)
}

/// Typed access to one section; remembers which keys were consumed.
struct Section<'a> {
    name: &'a str,
    map: Option<&'a BTreeMap<String, Entry>>,
    used: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(all: &'a Sections, name: &'a str) -> Self {
        Section { name, map: all.get(name), used: Vec::new() }
    }

    fn present(&self) -> bool {
        self.map.is_some()
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        let e = self.map?.get(key)?;
        self.used.push(key.into());
        Some(e.value.as_str())
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Value { section: self.name.into(), key: key.into(), msg: msg.into() }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.raw(key) {
            Some("") => Err(self.err(key, "empty value")),
            Some(v) => Ok(Some(v.to_string())),
            None => Ok(None),
        }
    }

    fn require(&mut self, key: &str) -> Result<String, ConfigError> {
        self.string(key)?.ok_or_else(|| ConfigError::Missing { section: self.name.into(), key: key.into() })
    }

    fn expr(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        let Some(s) = self.string(key)? else { return Ok(None) };
        parse(&s).map_err(|source| ConfigError::Expr { section: self.name.into(), key: key.into(), source })?;
        Ok(Some(s))
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some(s) = self.raw(key) else { return Ok(None) };
        let v: f64 = s.trim().parse().map_err(|_| self.err(key, format!("`{s}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(key, "must be finite"));
        }
        Ok(Some(v))
    }

    fn uint<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        let Some(s) = self.raw(key) else { return Ok(None) };
        s.trim().parse().map(Some).map_err(|_| self.err(key, format!("`{s}` is not a nonnegative integer")))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(s) = self.raw(key) else { return Ok(None) };
        if s.trim().is_empty() {
            return Ok(Some(Vec::new()));
        }
        let mut out = Vec::new();
        for item in s.split(',') {
            let v: f64 = item.trim().parse().map_err(|_| self.err(key, format!("`{}` is not a number", item.trim())))?;
            if !v.is_finite() {
                return Err(self.err(key, "must be finite"));
            }
            out.push(v);
        }
        Ok(Some(out))
    }

    fn words(&mut self, key: &str) -> Option<Vec<String>> {
        self.raw(key).map(|s| s.split(',').map(|w| w.trim().to_string()).filter(|w| !w.is_empty()).collect())
    }

    /// Unconsumed keys are errors.
    fn finish(self) -> Result<(), ConfigError> {
        if let Some(map) = self.map {
            for (k, e) in map {
                if !self.used.contains(k) {
                    return Err(ConfigError::UnknownKey { line: e.line, section: self.name.into(), key: k.clone() });
                }
            }
        }
        Ok(())
    }
}

impl RunConfig {
    /// Text or JSON, told apart by the first non-blank character.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text.len() > MAX_CONFIG_BYTES {
            return Err(ConfigError::TooLarge);
        }
        if text.trim_start().starts_with('{') {
            let cfg: RunConfig = serde_json::from_str(text)?;
            cfg.check()?;
            Ok(cfg)
        } else {
            Self::parse_text(text)
        }
    }

    pub fn parse_text(text: &str) -> Result<Self, ConfigError> {
        if text.len() > MAX_CONFIG_BYTES {
            return Err(ConfigError::TooLarge);
        }
        let all = split_sections(text)?;

        let mut s = Section::new(&all, "domain");
        let kind = s.require("kind")?;
        let (lower, upper, dim) = match kind.as_str() {
            "interval" => {
                let lo = s.f64("lower")?.ok_or_else(|| ConfigError::Missing { section: "domain".into(), key: "lower".into() })?;
                let hi = s.f64("upper")?.ok_or_else(|| ConfigError::Missing { section: "domain".into(), key: "upper".into() })?;
                (vec![lo], vec![hi], 1)
            }
            "box" => {
                let lo = s.list("lower")?.ok_or_else(|| ConfigError::Missing { section: "domain".into(), key: "lower".into() })?;
                let hi = s.list("upper")?.ok_or_else(|| ConfigError::Missing { section: "domain".into(), key: "upper".into() })?;
                let d = lo.len();
                (lo, hi, d)
            }
            "whole_space" => (Vec::new(), Vec::new(), s.uint("dim")?.unwrap_or(1)),
            other => return Err(s.err("kind", format!("unknown domain kind `{other}`"))),
        };
        let exhaustion = s.string("exhaustion")?.unwrap_or_else(|| "dyadic".into());
        let step = s.f64("step")?.unwrap_or(1.0);
        s.finish()?;
        let domain = DomainSection { kind, lower, upper, dim, exhaustion, step };

        let mut s = Section::new(&all, "coefficients");
        if !s.present() {
            return Err(ConfigError::Missing { section: "coefficients".into(), key: "a".into() });
        }
        let d = dim;
        if d == 0 || d > MAX_DIM {
            return Err(ConfigError::Value { section: "domain".into(), key: "dim".into(), msg: format!("dimension must be 1 to {MAX_DIM}") });
        }
        let mut a = vec![String::from("0"); d * d];
        if let Some(scalar) = s.expr("a")? {
            for i in 0..d {
                a[i * d + i] = scalar.clone();
            }
        }
        let mut entries = 0;
        for i in 0..d {
            for j in i..d {
                if let Some(e) = s.expr(&format!("a{}{}", i + 1, j + 1))? {
                    a[i * d + j] = e.clone();
                    a[j * d + i] = e;
                    entries += 1;
                }
            }
        }
        if entries == 0 && a[0] == "0" && !s.used.iter().any(|k| k == "a") {
            return Err(ConfigError::Missing { section: "coefficients".into(), key: "a".into() });
        }
        let mut b = vec![String::from("0"); d];
        if d == 1 {
            if let Some(e) = s.expr("b")? {
                b[0] = e;
            }
        }
        for (i, bi) in b.iter_mut().enumerate() {
            if let Some(e) = s.expr(&format!("b{}", i + 1))? {
                *bi = e;
            }
        }
        let c = s.expr("c")?.unwrap_or_else(|| "0".into());
        s.finish()?;
        let coefficients = CoefficientSection { a, b, c };

        let mut s = Section::new(&all, "initial");
        let kind = s.string("kind")?.unwrap_or_else(|| "dirac".into());
        let mut initial = InitialSection { kind: kind.clone(), point: None, density: None, lower: None, upper: None };
        match kind.as_str() {
            "dirac" => initial.point = Some(s.list("point")?.unwrap_or_else(|| vec![0.0; d])),
            "density" => initial.density = Some(s.expr("density")?.ok_or_else(|| ConfigError::Missing { section: "initial".into(), key: "density".into() })?),
            "uniform" => {
                initial.lower = Some(s.list("lower")?.ok_or_else(|| ConfigError::Missing { section: "initial".into(), key: "lower".into() })?);
                initial.upper = Some(s.list("upper")?.ok_or_else(|| ConfigError::Missing { section: "initial".into(), key: "upper".into() })?);
            }
            other => return Err(s.err("kind", format!("unknown initial kind `{other}`"))),
        }
        s.finish()?;

        let mut s = Section::new(&all, "solver");
        let t_end = s.f64("t_end")?.unwrap_or(1.0);
        let solver = SolverSection {
            t_end,
            k: s.uint("k")?.unwrap_or(12),
            n: s.uint("n")?.unwrap_or(1000),
            dt: s.f64("dt")?.unwrap_or(t_end / 2000.0),
            eps: s.list("eps")?.unwrap_or_else(|| vec![0.0]),
            save_times: match (s.list("save_times")?, s.f64("save_every")?) {
                (Some(_), Some(_)) => return Err(s.err("save_every", "give either save_times or save_every")),
                (Some(v), None) => v,
                (None, Some(every)) => {
                    if !(every > 0.0) || t_end / every > 1e6 {
                        return Err(s.err("save_every", "must be positive and give at most 10^6 saves"));
                    }
                    let m = (t_end / every + 1e-9).floor() as usize;
                    (1..=m).map(|i| i as f64 * every).collect()
                }
                (None, None) => Vec::new(),
            },
            mollify_n: s.uint("mollify_n")?.unwrap_or(0),
            mollify_spacing: s.f64("mollify_spacing")?.unwrap_or(0.0),
            validate_samples: s.uint("validate_samples")?.unwrap_or(crate::problem::DEFAULT_SAMPLES),
            validate_seed: s.uint("validate_seed")?.unwrap_or(0),
        };
        s.finish()?;

        let mut s = Section::new(&all, "lyapunov");
        let lyapunov = if s.present() {
            let v = s.expr("v")?.ok_or_else(|| ConfigError::Missing { section: "lyapunov".into(), key: "v".into() })?;
            let l = LyapunovSection {
                v,
                k: s.expr("k")?,
                h: s.expr("h")?,
                certificates: s.words("certificates").unwrap_or_else(|| vec!["existence".into()]),
                k_max: s.uint("k_max")?.unwrap_or(12),
                samples: s.uint("samples")?.unwrap_or(crate::problem::DEFAULT_SAMPLES),
                seed: s.uint("seed")?.unwrap_or(0),
                cells: s.uint("cells")?.unwrap_or(2000),
                ladder: s.list("ladder")?.unwrap_or_else(|| vec![2.0, 4.0, 8.0, 16.0]),
            };
            s.finish()?;
            Some(l)
        } else {
            None
        };

        let mut s = Section::new(&all, "mc");
        let mc = McSection {
            dt: s.f64("dt")?.unwrap_or(1e-3),
            paths: s.uint("paths")?.unwrap_or(10_000),
            sample_k: s.uint("sample_k")?.unwrap_or(20),
            sample_cells: s.uint("sample_cells")?.unwrap_or(2000),
            compare_blocks: s.uint("compare_blocks")?.unwrap_or(64),
        };
        s.finish()?;

        let mut s = Section::new(&all, "tolerances");
        let tolerances = ToleranceSection {
            mass: s.f64("mass")?.unwrap_or(1e-3),
            compare_l1: s.f64("compare_l1")?.unwrap_or(0.05),
            moment: s.f64("moment")?.unwrap_or(1e-2),
        };
        s.finish()?;

        let cfg = RunConfig { version: CONFIG_VERSION, domain, coefficients, initial, lyapunov, solver, mc, tolerances };
        cfg.check()?;
        Ok(cfg)
    }

    /// Consistency checks shared by both input forms.
    pub fn check(&self) -> Result<(), ConfigError> {
        let bad = |section: &str, key: &str, msg: &str| Err(ConfigError::Value { section: section.into(), key: key.into(), msg: msg.into() });
        if self.version != CONFIG_VERSION {
            return bad("", "version", "unsupported config version");
        }
        let d = self.dim();
        if d == 0 || d > MAX_DIM {
            return bad("domain", "dim", "dimension must be 1 to 3");
        }
        if self.coefficients.a.len() != d * d || self.coefficients.b.len() != d {
            return bad("coefficients", "a", "coefficient shapes do not match the dimension");
        }
        let s = &self.solver;
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            return bad("solver", "t_end", "must be positive");
        }
        if !(s.dt > 0.0) || s.t_end / s.dt > 1e8 {
            return bad("solver", "dt", "must be positive and give at most 10^8 steps");
        }
        if s.k == 0 || s.k > 60 {
            return bad("solver", "k", "must be 1 to 60");
        }
        if s.n < crate::fvm::MIN_CELLS || s.n > 10_000_000 {
            return bad("solver", "n", "cell count out of range");
        }
        if s.eps.is_empty() || s.eps.iter().any(|e| *e < 0.0) {
            return bad("solver", "eps", "need a nonempty list of nonnegative values");
        }
        if s.save_times.len() > 1_000_000 || s.save_times.iter().any(|t| *t < 0.0 || *t > s.t_end) {
            return bad("solver", "save_times", "save times must lie in [0, t_end]");
        }
        if !(s.mollify_spacing >= 0.0) {
            return bad("solver", "mollify_spacing", "must be nonnegative");
        }
        if s.validate_samples == 0 || s.validate_samples > 10_000_000 {
            return bad("solver", "validate_samples", "out of range");
        }
        let m = &self.mc;
        if !(m.dt > 0.0) || s.t_end / m.dt > 1e8 {
            return bad("mc", "dt", "must be positive and give at most 10^8 steps");
        }
        if m.sample_k == 0 || m.sample_k > 60 || m.sample_cells == 0 || m.sample_cells > 10_000_000 || m.compare_blocks == 0 {
            return bad("mc", "sample_k", "sampling parameters out of range");
        }
        let t = &self.tolerances;
        if !(t.mass > 0.0 && t.compare_l1 > 0.0 && t.moment > 0.0) {
            return bad("tolerances", "mass", "tolerances must be positive");
        }
        if let Some(l) = &self.lyapunov {
            for c in &l.certificates {
                if !CERTIFICATE_NAMES.contains(&c.as_str()) {
                    return bad("lyapunov", "certificates", &format!("unknown certificate `{c}`"));
                }
            }
            if l.certificates.iter().any(|c| c == "timedep") && (l.k.is_none() || l.h.is_none()) {
                return bad("lyapunov", "certificates", "timedep needs k and h");
            }
            if l.k_max == 0 || l.k_max > 60 || l.samples == 0 || l.samples > 10_000_000 || l.cells == 0 || l.cells > 10_000_000 {
                return bad("lyapunov", "samples", "sampling parameters out of range");
            }
            if l.ladder.is_empty() || l.ladder.iter().any(|n| !(*n > 0.0)) {
                return bad("lyapunov", "ladder", "need a nonempty list of positive values");
            }
        }
        // expressions and the problem itself
        self.problem()?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.domain.kind.as_str() {
            "interval" => 1,
            "whole_space" => self.domain.dim,
            _ => self.domain.lower.len(),
        }
    }

    fn expr(section: &str, key: &str, src: &str) -> Result<Expr, ConfigError> {
        parse(src).map_err(|source| ConfigError::Expr { section: section.into(), key: key.into(), source })
    }

    pub fn domain_spec(&self) -> Result<DomainSpec, ConfigError> {
        let dm = &self.domain;
        let bad = |key: &str, msg: String| ConfigError::Value { section: "domain".into(), key: key.into(), msg };
        let kind = match dm.kind.as_str() {
            "interval" => {
                if dm.lower.len() != 1 || dm.upper.len() != 1 {
                    return Err(bad("lower", "an interval has one lower and one upper bound".into()));
                }
                DomainKind::Interval { lower: dm.lower[0], upper: dm.upper[0] }
            }
            "box" => DomainKind::Box { lower: dm.lower.clone(), upper: dm.upper.clone() },
            "whole_space" => DomainKind::WholeSpace { dim: dm.dim },
            other => return Err(bad("kind", format!("unknown domain kind `{other}`"))),
        };
        let exhaustion = match dm.exhaustion.as_str() {
            "dyadic" => ExhaustionRule::Dyadic,
            "linear" => ExhaustionRule::Linear { step: dm.step },
            other => return Err(bad("exhaustion", format!("unknown exhaustion rule `{other}`"))),
        };
        let spec = DomainSpec { kind, exhaustion };
        spec.check()?;
        Ok(spec)
    }

    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let domain = self.domain_spec()?;
        let d = self.dim();
        let co = &self.coefficients;
        let a = co
            .a
            .iter()
            .enumerate()
            .map(|(k, s)| Self::expr("coefficients", &format!("a{}{}", k / d + 1, k % d + 1), s))
            .collect::<Result<Vec<_>, _>>()?;
        let b = co.b.iter().enumerate().map(|(i, s)| Self::expr("coefficients", &format!("b{}", i + 1), s)).collect::<Result<Vec<_>, _>>()?;
        let c = Self::expr("coefficients", "c", &co.c)?;
        let coefficients = CoefficientSet::new(d, a, b, c)?;
        let ini = &self.initial;
        let missing = |key: &str| ConfigError::Missing { section: "initial".into(), key: key.into() };
        let initial = match ini.kind.as_str() {
            "dirac" => InitialMeasure::Dirac(ini.point.clone().ok_or_else(|| missing("point"))?),
            "density" => InitialMeasure::Density(Self::expr("initial", "density", ini.density.as_deref().ok_or_else(|| missing("density"))?)?),
            "uniform" => InitialMeasure::Uniform {
                lower: ini.lower.clone().ok_or_else(|| missing("lower"))?,
                upper: ini.upper.clone().ok_or_else(|| missing("upper"))?,
            },
            other => return Err(ConfigError::Value { section: "initial".into(), key: "kind".into(), msg: format!("unknown initial kind `{other}`") }),
        };
        Ok(Problem::new(domain, coefficients, initial)?)
    }

    pub fn lyapunov_v(&self) -> Result<Option<Expr>, ConfigError> {
        self.lyapunov.as_ref().map(|l| Self::expr("lyapunov", "v", &l.v)).transpose()
    }

    pub fn wants(&self, certificate: &str) -> bool {
        self.lyapunov.as_ref().is_some_and(|l| l.certificates.iter().any(|c| c == certificate))
    }

    /// Canonical JSON of the resolved config.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// sha256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn solve_options(&self) -> crate::fvm::SolveOptions {
        let s = &self.solver;
        crate::fvm::SolveOptions {
            t_end: s.t_end,
            k: s.k,
            n: s.n,
            dt: s.dt,
            eps_ladder: s.eps.clone(),
            save_times: s.save_times.clone(),
        }
    }

    pub fn sample_options(&self) -> crate::problem::SampleOptions {
        match &self.lyapunov {
            Some(l) => crate::problem::SampleOptions { k_max: l.k_max, samples: l.samples, seed: l.seed, t_end: self.solver.t_end },
            None => crate::problem::SampleOptions { k_max: self.solver.k, samples: self.solver.validate_samples, seed: self.solver.validate_seed, t_end: self.solver.t_end },
        }
    }

    pub fn validate_options(&self) -> crate::problem::SampleOptions {
        crate::problem::SampleOptions { k_max: self.solver.k, samples: self.solver.validate_samples, seed: self.solver.validate_seed, t_end: self.solver.t_end }
    }

    pub fn mc_options(&self, paths: usize, seed: u64) -> crate::sde::McOptions {
        crate::sde::McOptions {
            t_end: self.solver.t_end,
            dt: self.mc.dt,
            n_paths: paths,
            seed,
            save_times: self.solver.save_times.clone(),
            sample_k: self.mc.sample_k,
            sample_cells: self.mc.sample_cells,
        }
    }
}
