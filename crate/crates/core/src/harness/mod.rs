//! Run configuration, statistical reports, exporters and the acceptance
//! suites that tie the modules together.

pub mod acceptance;
mod suites;
mod svg;

pub use suites::{
    clan_tail_fit, estimate_connective_constant, stats_extreme_vertices, stats_two_sampler, trend_test, SurvivalPoint,
};
pub use svg::{export_svg, Figure, SvgStyle};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Point};
use crate::gibbs::{BoundaryCondition, ModelParams};

/// Schema version of every JSON file and stream the harness writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Test levels and tolerances used to decide pass or fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Level of goodness-of-fit and trend tests.
    pub level: f64,
    /// Half-width, in standard errors, of moment checks.
    pub z_tol: f64,
    /// Confidence of one-sided positivity claims.
    pub confidence: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { level: 0.01, z_tol: 3.0, confidence: 0.99 }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub domain: String,
    pub window: String,
    pub alpha: f64,
    /// Unset means 0 for the Gibbs energy and `DEFAULT_BETA` for contours.
    pub beta: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub boundary: BoundaryCondition,
    pub seed: u64,
    pub samples: usize,
    pub replicas: usize,
    pub horizon: f64,
    pub thin: f64,
    pub burn_in: Option<f64>,
    pub walks: u64,
    pub clan_cap: usize,
    pub rmax_tail: f64,
    pub thresholds: Thresholds,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            domain: "square:1".into(),
            window: "square:0.5".into(),
            alpha: 0.0,
            beta: None,
            a: 0.0,
            b: 0.0,
            boundary: BoundaryCondition::None,
            seed: 1,
            samples: 100,
            replicas: 1,
            horizon: 50.0,
            thin: 1.0,
            burn_in: None,
            walks: 100_000,
            clan_cap: crate::graphical::DEFAULT_CLAN_CAP,
            rmax_tail: crate::graphical::DEFAULT_TAIL,
            thresholds: Thresholds::default(),
            out: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parameter(format!("bad value '{v}' for '{key}'")))
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("line {}: expected key = value", no + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        RunConfig::from_kv(&fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "command" => self.command = v.into(),
            "domain" => self.domain = v.into(),
            "window" => self.window = v.into(),
            "alpha" => self.alpha = num(key, v)?,
            "beta" => self.beta = Some(num(key, v)?),
            "a" => self.a = num(key, v)?,
            "b" => self.b = num(key, v)?,
            "boundary" => self.boundary = v.parse()?,
            "seed" => self.seed = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "replicas" => self.replicas = num(key, v)?,
            "horizon" => self.horizon = num(key, v)?,
            "thin" => self.thin = num(key, v)?,
            "burn_in" => self.burn_in = Some(num(key, v)?),
            "walks" => self.walks = num(key, v)?,
            "clan_cap" => self.clan_cap = num(key, v)?,
            "rmax_tail" => self.rmax_tail = num(key, v)?,
            "level" => self.thresholds.level = num(key, v)?,
            "z_tol" => self.thresholds.z_tol = num(key, v)?,
            "confidence" => self.thresholds.confidence = num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(Error::Parameter(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `ARAK_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(s) = std::env::var("ARAK_SEED") {
            self.seed = num("ARAK_SEED", s.trim())?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.beta.unwrap_or(0.0), self.a, self.b)
    }

    pub fn contour_beta(&self) -> f64 {
        self.beta.unwrap_or(crate::graphical::DEFAULT_BETA)
    }

    pub fn domain(&self) -> Result<ConvexDomain> {
        parse_domain(&self.domain)
    }

    pub fn window(&self) -> Result<ConvexDomain> {
        parse_domain(&self.window)
    }

    pub fn schedule(&self) -> crate::metropolis::ChainSchedule {
        crate::metropolis::ChainSchedule { horizon: self.horizon, thin: self.thin, burn_in: self.burn_in }
    }
}

/// Parses `square:H`, `rect:x0,y0,x1,y1`, `disk:R`, `disk:x,y,R` or
/// `polygon:x,y;x,y;...` (counterclockwise).
pub fn parse_domain(spec: &str) -> Result<ConvexDomain> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| Error::Parameter(format!("bad domain '{spec}'")))?;
    let nums = |s: &str| -> Result<Vec<f64>> { s.split(',').map(|x| num("domain", x.trim())).collect() };
    match kind.trim() {
        "square" => match nums(rest)?.as_slice() {
            [h] => ConvexDomain::square(*h),
            _ => Err(Error::Parameter(format!("square takes one number: '{spec}'"))),
        },
        "rect" => match nums(rest)?.as_slice() {
            [x0, y0, x1, y1] => ConvexDomain::rect(Point::new(*x0, *y0), Point::new(*x1, *y1)),
            _ => Err(Error::Parameter(format!("rect takes four numbers: '{spec}'"))),
        },
        "disk" => match nums(rest)?.as_slice() {
            [r] => ConvexDomain::disk(Point::ORIGIN, *r),
            [x, y, r] => ConvexDomain::disk(Point::new(*x, *y), *r),
            _ => Err(Error::Parameter(format!("disk takes one or three numbers: '{spec}'"))),
        },
        "polygon" => {
            let pts = rest
                .split(';')
                .map(|p| match nums(p)?.as_slice() {
                    [x, y] => Ok(Point::new(*x, *y)),
                    _ => Err(Error::Parameter(format!("bad polygon vertex '{p}'"))),
                })
                .collect::<Result<Vec<_>>>()?;
            ConvexDomain::polygon(pts)
        }
        other => Err(Error::Parameter(format!("unknown domain kind '{other}'"))),
    }
}

/// One statistic with its test outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub test: String,
    pub p_value: Option<f64>,
    /// The level, tolerance or bound the statistic is judged against.
    pub threshold: f64,
    pub pass: bool,
    /// Whether a failure should fail the run.
    pub acceptance: bool,
}

impl StatReport {
    pub fn new(name: impl Into<String>, test: impl Into<String>) -> Self {
        StatReport {
            name: name.into(),
            estimate: 0.0,
            se: 0.0,
            test: test.into(),
            p_value: None,
            threshold: 0.0,
            pass: false,
            acceptance: true,
        }
    }

    pub fn estimate(mut self, estimate: f64, se: f64) -> Self {
        self.estimate = estimate;
        self.se = se;
        self
    }

    pub fn p(mut self, p: f64) -> Self {
        self.p_value = Some(p);
        self
    }

    pub fn judged(mut self, threshold: f64, pass: bool) -> Self {
        self.threshold = threshold;
        self.pass = pass;
        self
    }

    pub fn advisory(mut self) -> Self {
        self.acceptance = false;
        self
    }

    pub fn line(&self) -> String {
        let p = self.p_value.map_or(String::new(), |p| format!(" p={p:.4}"));
        format!(
            "{} {}: {}={:.6} se={:.3e}{} threshold={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.test,
            self.estimate,
            self.se,
            p,
            self.threshold
        )
    }
}

/// Whether every acceptance-tagged report passes.
pub fn all_pass(reports: &[StatReport]) -> bool {
    reports.iter().filter(|r| r.acceptance).all(|r| r.pass)
}

/// Output bundle of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunBundle {
    pub schema: u32,
    pub version: String,
    pub config: RunConfig,
    pub reports: Vec<StatReport>,
    pub results: BTreeMap<String, serde_json::Value>,
}

impl RunBundle {
    pub fn new(version: &str, config: RunConfig) -> Self {
        RunBundle {
            schema: SCHEMA_VERSION,
            version: version.into(),
            config,
            reports: Vec::new(),
            results: BTreeMap::new(),
        }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.results.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Writes `bundle.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("bundle.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

/// One JSON object per line, each tagged with the schema version.
pub fn to_json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    #[derive(Serialize)]
    struct Line<'a, T> {
        schema: u32,
        data: &'a T,
    }
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&Line { schema: SCHEMA_VERSION, data: item })?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_and_overrides() {
        let c =
            RunConfig::from_kv("# run\nbeta = 6\ndomain = disk:0,0,2\nlevel=0.05\nburn_in = 3 # comment\n").unwrap();
        assert_eq!(c.beta, Some(6.0));
        assert_eq!(RunConfig::default().contour_beta(), crate::graphical::DEFAULT_BETA);
        assert_eq!(c.thresholds.level, 0.05);
        assert_eq!(c.burn_in, Some(3.0));
        assert!((c.domain().unwrap().area() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(RunConfig::from_kv("nonsense = 1").is_err());
        assert!(RunConfig::from_kv("beta 6").is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
    }

    #[test]
    fn domain_specs() {
        assert_eq!(parse_domain("square:2").unwrap().area(), 16.0);
        assert_eq!(parse_domain("rect:0,0,2,1").unwrap().area(), 2.0);
        assert_eq!(parse_domain("polygon:0,0;1,0;0,1").unwrap().area(), 0.5);
        assert!(parse_domain("square:-1").is_err());
        assert!(parse_domain("hexagon:1").is_err());
    }

    #[test]
    fn report_gate_ignores_advisory_entries() {
        let ok = StatReport::new("a", "z").estimate(0.0, 1.0).judged(3.0, true);
        let bad = StatReport::new("b", "z").judged(3.0, false).advisory();
        assert!(all_pass(&[ok.clone(), bad.clone()]));
        assert!(!all_pass(&[ok, StatReport { acceptance: true, ..bad }]));
    }

    #[test]
    fn json_lines_are_schema_tagged() {
        let s = to_json_lines(&[Point::new(1.0, 2.0)]).unwrap();
        assert_eq!(s, "{\"schema\":1,\"data\":[1.0,2.0]}\n");
    }
}
