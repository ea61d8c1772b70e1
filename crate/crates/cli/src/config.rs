//! INI run configuration. Every section present is parsed completely before
//! any computation; unknown sections and keys are rejected, and every value
//! actually used (given or defaulted) is recorded in the echo.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ini::Ini;
use musielak::denoise::{DenoiseConfig, PRule};
use musielak::nfunctions::{INDEX_RANGE, INDEX_SAMPLES};
use musielak::{Field, Grid, Kirchhoff, KirchhoffSpec, NFunctionSpec, ProblemSpec, SolverConfig};

use crate::expr::{sample, Expression};
use crate::CliError;

pub type Echo = BTreeMap<String, BTreeMap<String, String>>;

const SECTIONS: [&str; 8] = ["grid", "nfunction", "kirchhoff", "problem", "solver", "verify", "analyze", "denoise"];

pub const ALL_CHECKS: [&str; 7] = ["axioms", "young", "scaling", "norms", "holder", "convexity", "coercivity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Analyze,
    Denoise,
}

impl Command {
    fn needs(self, section: &str) -> bool {
        match self {
            Command::Solve => matches!(section, "grid" | "nfunction" | "kirchhoff" | "problem" | "solver"),
            Command::Verify => matches!(section, "grid" | "nfunction" | "kirchhoff" | "problem" | "verify"),
            Command::Analyze => matches!(section, "nfunction" | "analyze"),
            Command::Denoise => section == "denoise",
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parsed key-value pairs with usage tracking.
struct Reader {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    used: BTreeSet<(String, String)>,
    echo: Echo,
    seed_override: Option<u64>,
}

impl Reader {
    fn parse(text: &str, seed_override: Option<u64>) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| cfg_err(format!("malformed INI: {e}")))?;
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(cfg_err(format!("key {k:?} appears before any section")));
                }
                continue;
            };
            if !SECTIONS.contains(&name) {
                return Err(cfg_err(format!(
                    "unknown section [{name}]; expected one of {}",
                    SECTIONS.join(", ")
                )));
            }
            if sections.contains_key(name) {
                return Err(cfg_err(format!("section [{name}] appears twice")));
            }
            let mut map = BTreeMap::new();
            for (k, v) in props.iter() {
                if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                    return Err(cfg_err(format!("key [{name}] {k} appears twice")));
                }
            }
            sections.insert(name.to_string(), map);
        }
        Ok(Reader {
            sections,
            used: BTreeSet::new(),
            echo: Echo::new(),
            seed_override,
        })
    }

    fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn record(&mut self, section: &str, key: &str, value: &str) {
        self.echo
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<String> {
        let v = self.sections.get(section)?.get(key)?.clone();
        self.used.insert((section.to_string(), key.to_string()));
        Some(v)
    }

    fn required(&mut self, section: &str, key: &str) -> Result<String, CliError> {
        let v = self
            .raw(section, key)
            .ok_or_else(|| cfg_err(format!("missing required key [{section}] {key}")))?;
        self.record(section, key, &v);
        Ok(v)
    }

    fn string(&mut self, section: &str, key: &str, default: &str) -> String {
        let v = self.raw(section, key).unwrap_or_else(|| default.to_string());
        self.record(section, key, &v);
        v
    }

    fn optional(&mut self, section: &str, key: &str) -> Option<String> {
        let v = self.raw(section, key)?;
        self.record(section, key, &v);
        Some(v)
    }

    fn parsed<T: std::str::FromStr>(&mut self, section: &str, key: &str, text: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        text.parse()
            .map_err(|e| cfg_err(format!("[{section}] {key} = {text:?}: {e}")))
    }

    fn f64(&mut self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        let text = self.string(section, key, &format!("{default:?}"));
        self.parsed(section, key, &text)
    }

    fn required_f64(&mut self, section: &str, key: &str) -> Result<f64, CliError> {
        let text = self.required(section, key)?;
        self.parsed(section, key, &text)
    }

    fn usize(&mut self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        let text = self.string(section, key, &default.to_string());
        self.parsed(section, key, &text)
    }

    fn bool(&mut self, section: &str, key: &str, default: bool) -> Result<bool, CliError> {
        let text = self.string(section, key, &default.to_string());
        self.parsed(section, key, &text)
    }

    fn seed(&mut self, section: &str, default: u64) -> Result<u64, CliError> {
        if let Some(s) = self.seed_override {
            self.raw(section, "seed");
            self.record(section, "seed", &s.to_string());
            return Ok(s);
        }
        let text = self.string(section, "seed", &default.to_string());
        self.parsed(section, "seed", &text)
    }

    fn list<T: std::str::FromStr>(&mut self, section: &str, key: &str, default: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let text = self.string(section, key, default);
        text.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| self.parsed(section, key, t))
            .collect()
    }

    /// Fails on any key that no parser asked for.
    fn finish(self) -> Result<Echo, CliError> {
        for (section, map) in &self.sections {
            for key in map.keys() {
                if !self.used.contains(&(section.clone(), key.clone())) {
                    return Err(cfg_err(format!("unknown key [{section}] {key}")));
                }
            }
        }
        Ok(self.echo)
    }
}

#[derive(Debug, Clone)]
pub enum Init {
    Default,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub checks: Vec<String>,
    pub seed: u64,
    pub triples: usize,
    pub young_samples: usize,
    pub scaling_samples: usize,
    pub norm_fields: usize,
    pub holder_fields: usize,
    pub convexity_trials: usize,
    pub coercivity_scales: Vec<f64>,
    pub negative_control: bool,
}

#[derive(Debug, Clone)]
pub struct AnalyzeSettings {
    pub node: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub samples: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    pub s_points: usize,
}

#[derive(Debug, Clone)]
pub enum ImageSource {
    File(PathBuf),
    Synthetic { size: usize, noise: f64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct DenoiseSettings {
    pub source: ImageSource,
    pub output: String,
    pub config: DenoiseConfig,
}

/// A fully parsed and validated configuration.
pub struct RunConfig {
    pub nfunction: Option<NFunctionSpec>,
    pub problem: Option<ProblemSpec>,
    pub solver: SolverConfig,
    pub init: Init,
    pub verify: Option<VerifySettings>,
    pub analyze: Option<AnalyzeSettings>,
    pub denoise: Option<DenoiseSettings>,
    pub echo: Echo,
}

impl RunConfig {
    pub fn load(path: &Path, command: Command, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base, command, seed_override)
    }

    /// Relative paths in the config resolve against `base`.
    pub fn parse(text: &str, base: &Path, command: Command, seed_override: Option<u64>) -> Result<Self, CliError> {
        let mut r = Reader::parse(text, seed_override)?;
        let wanted = |r: &Reader, s: &str| command.needs(s) || r.has(s);
        for s in SECTIONS {
            if command.needs(s) && !r.has(s) && !matches!(s, "solver" | "analyze" | "grid") {
                return Err(match s {
                    "verify" => cfg_err("missing [verify] section: nothing to verify"),
                    _ => cfg_err(format!("missing required section [{s}]")),
                });
            }
        }
        let grid = if wanted(&r, "grid") {
            Some(parse_grid(&mut r)?)
        } else {
            None
        };
        let nfunction = if wanted(&r, "nfunction") {
            Some(parse_nfunction(&mut r, grid.as_ref(), base)?)
        } else {
            None
        };
        let kirchhoff = if wanted(&r, "kirchhoff") {
            Some(parse_kirchhoff(&mut r)?)
        } else {
            None
        };
        let problem = if wanted(&r, "problem") {
            let grid = grid.ok_or_else(|| cfg_err("[problem] needs a [grid] section"))?;
            let nf = nfunction
                .clone()
                .ok_or_else(|| cfg_err("[problem] needs an [nfunction] section"))?;
            let k = kirchhoff.ok_or_else(|| cfg_err("[problem] needs a [kirchhoff] section"))?;
            let g = r.string("problem", "g", "1");
            let gamma = r.string("problem", "gamma", "0.5");
            let g = sample(&grid, &Expression::parse("g", &g)?)?;
            let gamma = sample(&grid, &Expression::parse("gamma", &gamma)?)?;
            Some(ProblemSpec::new(nf, k, g, gamma).map_err(|e| cfg_err(e.to_string()))?)
        } else {
            None
        };
        let (solver, init) = if wanted(&r, "solver") {
            parse_solver(&mut r, base)?
        } else {
            (SolverConfig::default(), Init::Default)
        };
        let verify = if wanted(&r, "verify") {
            Some(parse_verify(&mut r)?)
        } else {
            None
        };
        let analyze = if wanted(&r, "analyze") {
            Some(parse_analyze(&mut r)?)
        } else {
            None
        };
        let denoise = if wanted(&r, "denoise") {
            Some(parse_denoise(&mut r, base)?)
        } else {
            None
        };
        let echo = r.finish()?;
        Ok(RunConfig {
            nfunction,
            problem,
            solver,
            init,
            verify,
            analyze,
            denoise,
            echo,
        })
    }
}

fn parse_grid(r: &mut Reader) -> Result<Grid, CliError> {
    let cells: Vec<usize> = r.list("grid", "cells", "")?;
    let extent: Vec<f64> = r.list("grid", "extent", if cells.len() == 2 { "1, 1" } else { "1" })?;
    let grid = match (cells.as_slice(), extent.as_slice()) {
        ([n], [l]) => Grid::interval(*l, *n),
        ([n1, n2], [l1, l2]) => Grid::rectangle([*l1, *l2], [*n1, *n2]),
        ([], _) => return Err(cfg_err("missing required key [grid] cells")),
        _ => {
            return Err(cfg_err(format!(
                "[grid] cells has {} entries but extent has {}; use 1 or 2 of each",
                cells.len(),
                extent.len()
            )))
        }
    };
    grid.map_err(|e| cfg_err(e.to_string()))
}

fn parse_nfunction(r: &mut Reader, grid: Option<&Grid>, base: &Path) -> Result<NFunctionSpec, CliError> {
    let family = r.required("nfunction", "family")?;
    let spec = match family.as_str() {
        "power" => {
            let p = r.required_f64("nfunction", "p")?;
            let scale = r.f64("nfunction", "scale", 1.0)?;
            NFunctionSpec::scaled_power(scale, p)
        }
        "power_variable" => {
            let grid = grid.ok_or_else(|| cfg_err("family power_variable needs a [grid] section"))?;
            let map = match (r.optional("nfunction", "p"), r.optional("nfunction", "exponent_map")) {
                (Some(expr), None) => sample(grid, &Expression::parse("p", &expr)?)?,
                (None, Some(path)) => {
                    let path = base.join(path);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| cfg_err(format!("cannot read exponent map {}: {e}", path.display())))?;
                    Field::from_csv(*grid, &text, false).map_err(|e| cfg_err(e.to_string()))?
                }
                _ => {
                    return Err(cfg_err(
                        "family power_variable needs exactly one of [nfunction] p (expression) or exponent_map",
                    ))
                }
            };
            NFunctionSpec::power_variable(map.into_values())
        }
        "elasticity" => NFunctionSpec::elasticity(r.required_f64("nfunction", "alpha")?),
        "plasticity" => {
            let alpha = r.required_f64("nfunction", "alpha")?;
            NFunctionSpec::plasticity(alpha, r.required_f64("nfunction", "beta")?)
        }
        "newtonian" => {
            let alpha = r.required_f64("nfunction", "alpha")?;
            NFunctionSpec::newtonian(alpha, r.required_f64("nfunction", "beta")?)
        }
        other => {
            return Err(cfg_err(format!(
                "unknown [nfunction] family {other:?}; expected power, power_variable, elasticity, plasticity or newtonian"
            )))
        }
    };
    spec.map_err(|e| cfg_err(e.to_string()))
}

fn parse_kirchhoff(r: &mut Reader) -> Result<KirchhoffSpec, CliError> {
    let kind = r.required("kirchhoff", "kind")?;
    let spec = match kind.as_str() {
        "power" => {
            let c = r.required_f64("kirchhoff", "c")?;
            KirchhoffSpec::power(c, r.required_f64("kirchhoff", "alpha")?)
        }
        "bounded" => {
            let lower = r.required_f64("kirchhoff", "lower")?;
            KirchhoffSpec::new(Kirchhoff::BoundedCoeff {
                lower,
                upper: r.required_f64("kirchhoff", "upper")?,
            })
        }
        other => {
            return Err(cfg_err(format!(
                "unknown [kirchhoff] kind {other:?}; expected power or bounded"
            )))
        }
    };
    let mut spec = spec.map_err(|e| cfg_err(e.to_string()))?;
    if let Some(a) = r.optional("kirchhoff", "a_lower") {
        let a: f64 = r.parsed("kirchhoff", "a_lower", &a)?;
        spec = spec.with_a_lower(a).map_err(|e| cfg_err(e.to_string()))?;
    }
    Ok(spec)
}

fn parse_solver(r: &mut Reader, base: &Path) -> Result<(SolverConfig, Init), CliError> {
    let d = SolverConfig::default();
    let ladder = d.eps_ladder.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(", ");
    let cfg = SolverConfig {
        eps_ladder: r.list("solver", "eps_ladder", &ladder)?,
        delta: r.f64("solver", "delta", d.delta)?,
        step0: r.f64("solver", "step0", d.step0)?,
        backtrack: r.f64("solver", "backtrack", d.backtrack)?,
        armijo: r.f64("solver", "armijo", d.armijo)?,
        grad_tol: r.f64("solver", "grad_tol", d.grad_tol)?,
        max_iters: r.usize("solver", "max_iters", d.max_iters)?,
        seed: r.seed("solver", d.seed)?,
    };
    cfg.validate().map_err(|e| cfg_err(e.to_string()))?;
    let init = match r.string("solver", "init", "default").as_str() {
        "default" => Init::Default,
        path => Init::File(base.join(path)),
    };
    Ok((cfg, init))
}

fn parse_verify(r: &mut Reader) -> Result<VerifySettings, CliError> {
    let checks: Vec<String> = r.list("verify", "checks", &ALL_CHECKS.join(", "))?;
    if let Some(c) = checks.iter().find(|c| !ALL_CHECKS.contains(&c.as_str())) {
        return Err(cfg_err(format!(
            "unknown check {c:?} in [verify] checks; expected any of {}",
            ALL_CHECKS.join(", ")
        )));
    }
    let negative_control = r.bool("verify", "negative_control", false)?;
    if checks.is_empty() && !negative_control {
        return Err(cfg_err("[verify] checks is empty: nothing to verify"));
    }
    let positive = |r: &mut Reader, key: &str, default: usize| -> Result<usize, CliError> {
        let n = r.usize("verify", key, default)?;
        if n == 0 {
            return Err(cfg_err(format!("[verify] {key} must be positive")));
        }
        Ok(n)
    };
    let settings = VerifySettings {
        seed: r.seed("verify", 42)?,
        triples: positive(r, "triples", 2000)?,
        young_samples: positive(r, "young_samples", 100)?,
        scaling_samples: positive(r, "scaling_samples", 100)?,
        norm_fields: positive(r, "norm_fields", 50)?,
        holder_fields: positive(r, "holder_fields", 10)?,
        convexity_trials: positive(r, "convexity_trials", 100)?,
        coercivity_scales: r.list("verify", "coercivity_scales", "1, 2, 4, 8, 16, 32, 64")?,
        checks,
        negative_control,
    };
    Ok(settings)
}

fn parse_analyze(r: &mut Reader) -> Result<AnalyzeSettings, CliError> {
    let a = AnalyzeSettings {
        node: r.usize("analyze", "node", 0)?,
        t_lo: r.f64("analyze", "t_lo", INDEX_RANGE.0)?,
        t_hi: r.f64("analyze", "t_hi", INDEX_RANGE.1)?,
        samples: r.usize("analyze", "samples", INDEX_SAMPLES)?,
        s_lo: r.f64("analyze", "s_lo", 1e-2)?,
        s_hi: r.f64("analyze", "s_hi", 1e2)?,
        s_points: r.usize("analyze", "s_points", 9)?,
    };
    if !(a.s_lo > 0.0 && a.s_hi >= a.s_lo && a.s_points >= 1) {
        return Err(cfg_err(format!(
            "[analyze] needs 0 < s_lo ≤ s_hi and s_points ≥ 1, got s_lo = {}, s_hi = {}, s_points = {}",
            a.s_lo, a.s_hi, a.s_points
        )));
    }
    Ok(a)
}

fn parse_denoise(r: &mut Reader, base: &Path) -> Result<DenoiseSettings, CliError> {
    let d = DenoiseConfig::default();
    let source = match r.optional("denoise", "input") {
        Some(path) => ImageSource::File(base.join(path)),
        None => ImageSource::Synthetic {
            size: r.usize("denoise", "synthetic_size", 64)?,
            noise: r.f64("denoise", "synthetic_noise", 0.1)?,
            seed: r.seed("denoise", 7)?,
        },
    };
    let rule = match r.string("denoise", "rule", "edge_adaptive").as_str() {
        "edge_adaptive" => PRule::EdgeAdaptive {
            k: r.f64("denoise", "k", 100.0)?,
        },
        "constant" => PRule::Constant {
            p: r.f64("denoise", "p", 2.0)?,
        },
        other => {
            return Err(cfg_err(format!(
                "unknown [denoise] rule {other:?}; expected edge_adaptive or constant"
            )))
        }
    };
    let config = DenoiseConfig {
        lambda: r.f64("denoise", "lambda", d.lambda)?,
        rule,
        delta: r.f64("denoise", "delta", d.delta)?,
        max_iters: r.usize("denoise", "max_iters", d.max_iters)?,
        rel_tol: r.f64("denoise", "rel_tol", d.rel_tol)?,
        armijo: r.f64("denoise", "armijo", d.armijo)?,
        backtrack: r.f64("denoise", "backtrack", d.backtrack)?,
    };
    config.validate().map_err(|e| cfg_err(e.to_string()))?;
    let output = r.string("denoise", "output", "denoised.pgm");
    Ok(DenoiseSettings { source, output, config })
}
