//! Scenario files: a base system, a fiber grid, one or two cocycle families
//! and a named pipeline with its tolerances.
//!
//! Scenarios are JSON. Unknown fields are rejected, every numeric knob of the
//! pipeline has a default, and `--override` style dot paths can be applied to
//! the parsed document before it is typed.

mod catalog;
mod pipeline;
mod report;

use std::path::PathBuf;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::base::{BasePoint, BaseSystem, SymbolPoint, TorusPoint};
use crate::cocycle::{Cocycle, Family};
use crate::error::{Error, Result};
use crate::fiber::FiberGrid;

pub use catalog::{bundled, find_bundled, BundledScenario};
pub use pipeline::{
    execute, HolonomyVerifyResults, IdentitySummary, OracleComparison, Outcome, PipelineResults,
    PocCheckResults, ProbeResults, RateCheck, ReconstructResults, RigidityResults,
};
pub use report::{write_all, Check, DominationSummary, Metadata, Report, Table, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Wall-clock budget the scenario is expected to finish in.
    #[serde(default = "default_budget")]
    pub budget_seconds: f64,
    /// Offset of the low-discrepancy sample streams.
    #[serde(default)]
    pub seed: u64,
    pub base: BaseSpec,
    #[serde(default)]
    pub fiber: FiberSpec,
    pub alpha: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorSpec>,
    pub pipeline: PipelineSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_budget() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    Toral {
        matrix: [[i64; 2]; 2],
    },
    Sft {
        transitions: Vec<Vec<u8>>,
        #[serde(default = "default_metric_base")]
        metric_base: f64,
    },
}

fn default_metric_base() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_jet_order")]
    pub jet_order: usize,
}

fn default_grid() -> usize {
    2048
}

fn default_jet_order() -> usize {
    3
}

impl Default for FiberSpec {
    fn default() -> Self {
        FiberSpec {
            grid_size: default_grid(),
            jet_order: default_jet_order(),
        }
    }
}

/// Anchor point: an exact rational torus point or a periodic symbol word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnchorSpec {
    /// Coordinates as fractions, e.g. `"1/3"`.
    Torus {
        x: String,
        y: String,
    },
    Periodic {
        word: Vec<u8>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineName {
    HolonomyVerify,
    PocCheck,
    Reconstruct,
    RigidityFull,
    RegularityProbe,
}

impl PipelineName {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineName::HolonomyVerify => "holonomy-verify",
            PipelineName::PocCheck => "poc-check",
            PipelineName::Reconstruct => "reconstruct",
            PipelineName::RigidityFull => "rigidity-full",
            PipelineName::RegularityProbe => "regularity-probe",
        }
    }
}

/// Outcome a scenario is built to exhibit. Negative scenarios pass when the
/// named failure is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    Pass,
    PocViolated,
    WitnessFailed,
}

macro_rules! defaults {
    ($($f:ident: $t:ty = $v:expr;)*) => {
        $(pub(super) fn $f() -> $t { $v })*
    };
}

mod dflt {
    defaults! {
        holonomy_tol: f64 = 1e-10;
        check_tol: f64 = 1e-6;
        samples: usize = 50;
        domination_samples: usize = 1024;
        poc_periods: u32 = 6;
        poc_tol: f64 = 1e-10;
        homoclinic_points: usize = 20;
        su_tol: f64 = 2e-5;
        disagreement_min: f64 = 1e-3;
        eval_points: usize = 100;
        oracle_tol: f64 = 1e-5;
        residual_samples: usize = 50;
        residual_tol: f64 = 1e-6;
        rate_slack: f64 = 0.05;
        scales: usize = 6;
        exponent_range: [f64; 2] = [0.85, 1.15];
        witnesses: usize = 8;
        promote_tol: f64 = 1e-6;
        global_samples: usize = 20;
    }
}

/// Pipeline name and knobs. Each pipeline reads only the knobs it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub name: PipelineName,
    #[serde(default)]
    pub expect: Expectation,
    /// Target accuracy of each holonomy.
    #[serde(default = "dflt::holonomy_tol")]
    pub holonomy_tol: f64,
    /// Tolerance of composition and equivariance identities.
    #[serde(default = "dflt::check_tol")]
    pub check_tol: f64,
    /// Triples and pairs sampled by holonomy-verify.
    #[serde(default = "dflt::samples")]
    pub samples: usize,
    #[serde(default = "dflt::domination_samples")]
    pub domination_samples: usize,
    #[serde(default = "dflt::poc_periods")]
    pub poc_periods: u32,
    #[serde(default = "dflt::poc_tol")]
    pub poc_tol: f64,
    #[serde(default = "dflt::homoclinic_points")]
    pub homoclinic_points: usize,
    /// Agreement required between stable and unstable routes.
    #[serde(default = "dflt::su_tol")]
    pub su_tol: f64,
    /// Disagreement a POC-violating pair must show somewhere.
    #[serde(default = "dflt::disagreement_min")]
    pub disagreement_min: f64,
    #[serde(default = "dflt::eval_points")]
    pub eval_points: usize,
    #[serde(default = "dflt::oracle_tol")]
    pub oracle_tol: f64,
    #[serde(default = "dflt::residual_samples")]
    pub residual_samples: usize,
    #[serde(default = "dflt::residual_tol")]
    pub residual_tol: f64,
    /// Added to `ρ^{2r-1} λ` when checking the increment ratio.
    #[serde(default = "dflt::rate_slack")]
    pub rate_slack: f64,
    #[serde(default = "dflt::scales")]
    pub scales: usize,
    #[serde(default = "dflt::exponent_range")]
    pub exponent_range: [f64; 2],
    #[serde(default = "dflt::witnesses")]
    pub witnesses: usize,
    #[serde(default = "dflt::promote_tol")]
    pub promote_tol: f64,
    #[serde(default = "dflt::global_samples")]
    pub global_samples: usize,
}

impl PipelineSpec {
    pub fn new(name: PipelineName) -> Self {
        serde_json::from_value(serde_json::json!({ "name": name }))
            .expect("all knobs have defaults")
    }
}

impl Scenario {
    /// Field-level checks that typing alone does not catch.
    pub fn validate(&self) -> Result<()> {
        let p = &self.pipeline;
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if !(self.budget_seconds > 0.0) {
            return Err(Error::config("budget_seconds", "must be positive"));
        }
        let tols = [
            ("pipeline.holonomy_tol", p.holonomy_tol),
            ("pipeline.check_tol", p.check_tol),
            ("pipeline.poc_tol", p.poc_tol),
            ("pipeline.su_tol", p.su_tol),
            ("pipeline.disagreement_min", p.disagreement_min),
            ("pipeline.oracle_tol", p.oracle_tol),
            ("pipeline.residual_tol", p.residual_tol),
            ("pipeline.promote_tol", p.promote_tol),
        ];
        for (field, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(
                    field,
                    format!("tolerance must be positive and finite, got {v}"),
                ));
            }
        }
        if !(p.rate_slack >= 0.0) {
            return Err(Error::config("pipeline.rate_slack", "must be non-negative"));
        }
        let counts = [
            ("pipeline.samples", p.samples, 1),
            ("pipeline.domination_samples", p.domination_samples, 1),
            ("pipeline.homoclinic_points", p.homoclinic_points, 1),
            ("pipeline.eval_points", p.eval_points, 1),
            ("pipeline.residual_samples", p.residual_samples, 1),
            ("pipeline.scales", p.scales, 3),
            ("pipeline.witnesses", p.witnesses, 1),
            ("pipeline.global_samples", p.global_samples, 1),
        ];
        for (field, v, min) in counts {
            if v < min {
                return Err(Error::config(
                    field,
                    format!("must be at least {min}, got {v}"),
                ));
            }
        }
        if p.poc_periods == 0 {
            return Err(Error::config("pipeline.poc_periods", "must be at least 1"));
        }
        let [lo, hi] = p.exponent_range;
        if !(lo < hi) {
            return Err(Error::config(
                "pipeline.exponent_range",
                "lower end must be below upper end",
            ));
        }
        if self.fiber.jet_order < 1 {
            return Err(Error::config("fiber.jet_order", "must be at least 1"));
        }
        FiberGrid::new(self.fiber.grid_size, self.fiber.jet_order)
            .map_err(|e| Error::config("fiber.grid_size", e.to_string()))?;
        let needs_beta = !matches!(p.name, PipelineName::HolonomyVerify);
        if needs_beta && self.beta.is_none() {
            return Err(Error::config(
                "beta",
                format!("pipeline {} needs a second cocycle", p.name.as_str()),
            ));
        }
        let needs_anchor = matches!(p.name, PipelineName::RigidityFull);
        if needs_anchor && self.anchor.is_none() {
            return Err(Error::config(
                "anchor",
                "rigidity-full needs an explicit periodic anchor",
            ));
        }
        match (p.expect, p.name) {
            (Expectation::Pass, _)
            | (Expectation::PocViolated, PipelineName::PocCheck)
            | (Expectation::WitnessFailed, PipelineName::RigidityFull) => Ok(()),
            (e, n) => Err(Error::config(
                "pipeline.expect",
                format!("{e:?} is not an outcome of {}", n.as_str()),
            )),
        }
    }

    /// Builds the base, grid, cocycles and anchor. Failures are configuration
    /// errors.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let sys = match &self.base {
            BaseSpec::Toral { matrix } => BaseSystem::toral(*matrix),
            BaseSpec::Sft {
                transitions,
                metric_base,
            } => BaseSystem::sft(transitions.clone(), *metric_base),
        }
        .map_err(|e| Error::config("base", e.to_string()))?;
        let grid = FiberGrid::new(self.fiber.grid_size, self.fiber.jet_order)
            .map_err(|e| Error::config("fiber", e.to_string()))?;
        let alpha =
            Cocycle::from_family(self.alpha.clone(), &sys, grid).map_err(|e| reroot(e, "alpha"))?;
        let beta = match &self.beta {
            Some(f) => {
                Some(Cocycle::from_family(f.clone(), &sys, grid).map_err(|e| reroot(e, "beta"))?)
            }
            None => None,
        };
        let anchor = match &self.anchor {
            Some(a) => a.point(&sys)?,
            None if sys.is_toral() => BasePoint::Torus(TorusPoint::rational(0.into(), 0.into())),
            None => {
                let fixed = sys
                    .periodic_points(1)
                    .map_err(|e| Error::config("anchor", e.to_string()))?;
                fixed.into_iter().next().ok_or_else(|| {
                    Error::config(
                        "anchor",
                        "the base has no fixed point; give a periodic anchor",
                    )
                })?
            }
        };
        Ok(Prepared {
            scenario: self.clone(),
            sys,
            grid,
            alpha,
            beta,
            anchor,
        })
    }
}

fn reroot(e: Error, root: &str) -> Error {
    match e {
        Error::ConfigInvalid { field, message } => Error::ConfigInvalid {
            field: format!("{root}.{field}"),
            message,
        },
        other => Error::config(root, other.to_string()),
    }
}

impl AnchorSpec {
    pub fn point(&self, sys: &BaseSystem) -> Result<BasePoint> {
        let p = match self {
            AnchorSpec::Torus { x, y } => {
                let parse = |field: &str, s: &str| {
                    s.trim()
                        .parse::<Ratio<i64>>()
                        .map_err(|e| Error::config(format!("anchor.{field}"), e.to_string()))
                };
                BasePoint::Torus(TorusPoint::rational(parse("x", x)?, parse("y", y)?))
            }
            AnchorSpec::Periodic { word } => {
                let k = sys
                    .shift_space()
                    .ok_or_else(|| Error::config("anchor", "periodic words need a symbolic base"))?
                    .alphabet_size();
                BasePoint::Symbol(
                    SymbolPoint::periodic(word, k)
                        .map_err(|e| Error::config("anchor.word", e.to_string()))?,
                )
            }
        };
        sys.validate(&p)
            .map_err(|e| Error::config("anchor", e.to_string()))?;
        Ok(p)
    }
}

/// A validated scenario with its objects built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub sys: BaseSystem,
    pub grid: FiberGrid,
    pub alpha: Cocycle,
    pub beta: Option<Cocycle>,
    pub anchor: BasePoint,
}

/// Sets `path` (dot separated, numeric segments index arrays) to `value`.
/// The value is read as JSON when it parses and as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        Error::config(
            "--override",
            format!("expected key=value, got `{assignment}`"),
        )
    })?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::config("--override", "empty key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let segs: Vec<&str> = path.split('.').collect();
    for (i, seg) in segs.iter().enumerate() {
        let last = i + 1 == segs.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::config(path, format!("`{seg}` is not an index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(path, format!("index {idx} out of {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(Error::config(
                    path,
                    format!("`{seg}` descends into a scalar"),
                ))
            }
        };
    }
    unreachable!("loop returns on the last segment")
}

/// Parses scenario text, applies overrides and validates.
///
/// Without overrides, errors carry the line and column of the offending
/// token; with overrides they carry the field path only.
pub fn load_str(text: &str, overrides: &[String]) -> Result<Scenario> {
    let scenario: Scenario = if overrides.is_empty() {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            let path = e.path().to_string();
            Error::config(
                if path == "." {
                    "<root>".to_string()
                } else {
                    path
                },
                format!(
                    "{} (line {}, column {})",
                    strip_position(&inner.to_string()),
                    inner.line(),
                    inner.column()
                ),
            )
        })?
    } else {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| {
            Error::config(
                "<root>",
                format!(
                    "{} (line {}, column {})",
                    strip_position(&e.to_string()),
                    e.line(),
                    e.column()
                ),
            )
        })?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        serde_path_to_error::deserialize(doc).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.inner().to_string())
        })?
    };
    scenario.validate()?;
    Ok(scenario)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Where a scenario's configuration came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Bundled(&'static str),
    File(PathBuf),
}

/// Reads `spec` as a path, or as a bundled name when no such file exists.
pub fn load(spec: &str, overrides: &[String]) -> Result<(Scenario, Source)> {
    let path = PathBuf::from(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        return Ok((load_str(&text, overrides)?, Source::File(path)));
    }
    match find_bundled(spec) {
        Some(b) => Ok((load_str(b.json, overrides)?, Source::Bundled(b.name))),
        None => Err(Error::config(
            "<config>",
            format!("`{spec}` is neither a file nor a bundled scenario"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "base": {"kind": "toral", "matrix": [[2, 1], [1, 1]]},
        "alpha": {"family": "identity"},
        "pipeline": {"name": "holonomy-verify"}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let s = load_str(MINIMAL, &[]).unwrap();
        assert_eq!(s.fiber, FiberSpec::default());
        assert_eq!(s.pipeline, PipelineSpec::new(PipelineName::HolonomyVerify));
        assert_eq!(s.pipeline.expect, Expectation::Pass);
        let p = s.prepare().unwrap();
        assert_eq!(
            p.anchor,
            BasePoint::Torus(TorusPoint::rational(0.into(), 0.into()))
        );
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace(
            r#""name": "holonomy-verify""#,
            r#""name": "holonomy-verify", "check_tol": -1"#,
        );
        match load_str(&bad, &[]) {
            Err(Error::ConfigInvalid { field, .. }) => assert_eq!(field, "pipeline.check_tol"),
            other => panic!("{other:?}"),
        }
        let typo = MINIMAL.replace("\"alpha\"", "\"alhpa\"");
        match load_str(&typo, &[]) {
            Err(Error::ConfigInvalid { message, .. }) => {
                assert!(message.contains("line"), "{message}")
            }
            other => panic!("{other:?}"),
        }
        let grid = MINIMAL.replace(
            "\"pipeline\"",
            "\"fiber\": {\"grid_size\": 100}, \"pipeline\"",
        );
        assert!(matches!(
            load_str(&grid, &[]),
            Err(Error::ConfigInvalid { .. })
        ));
        let no_beta = MINIMAL.replace("holonomy-verify", "reconstruct");
        assert!(
            matches!(load_str(&no_beta, &[]), Err(Error::ConfigInvalid { field, .. }) if field == "beta")
        );
    }

    #[test]
    fn overrides_follow_dot_paths() {
        let s = load_str(
            MINIMAL,
            &[
                "pipeline.samples=7".into(),
                "fiber.grid_size=256".into(),
                "name=x".into(),
            ],
        )
        .unwrap();
        assert_eq!(
            (s.pipeline.samples, s.fiber.grid_size, s.name.as_str()),
            (7, 256, "x")
        );
        let s = load_str(MINIMAL, &["base.matrix.0.0=3".into()]).unwrap();
        assert_eq!(
            s.base,
            BaseSpec::Toral {
                matrix: [[3, 1], [1, 1]]
            }
        );
        assert!(matches!(
            load_str(MINIMAL, &["pipeline.samples=-3".into()]),
            Err(Error::ConfigInvalid { field, .. }) if field == "pipeline.samples"
        ));
        assert!(load_str(MINIMAL, &["nonsense".into()]).is_err());
        assert!(load_str(MINIMAL, &["base.matrix.7.0=1".into()]).is_err());
    }

    #[test]
    fn anchors_parse() {
        let sys = BaseSystem::sft(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]], 0.5).unwrap();
        let p = AnchorSpec::Periodic { word: vec![0, 1] }
            .point(&sys)
            .unwrap();
        assert_eq!(sys.exact_period(&p, 8), Some(2));
        assert!(AnchorSpec::Periodic { word: vec![0, 0] }
            .point(&sys)
            .is_err());
        let cat = BaseSystem::cat_map();
        let t = AnchorSpec::Torus {
            x: "1/5".into(),
            y: "2/5".into(),
        }
        .point(&cat)
        .unwrap();
        assert_eq!(cat.exact_period(&t, 8), Some(2));
        assert!(AnchorSpec::Torus {
            x: "a".into(),
            y: "0".into()
        }
        .point(&cat)
        .is_err());
    }
}
