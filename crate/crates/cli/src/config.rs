//! JSON configuration documents for each subcommand. Unknown fields are
//! rejected; every field can be omitted and most have a flag override.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use fpp_core::experiments::corridor_window;
use fpp_core::{Error as CoreError, Point2, SolverOptions, TargetSet, Window};

use crate::error::{CliError, CliResult};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Where the point environment comes from: a window (explicit, or the
/// corridor around `[0, t]` derived from `t`, `c` and `k`) plus an intensity.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub window: Option<Window>,
    pub t: Option<f64>,
    pub c: f64,
    pub intensity: f64,
    pub k: i64,
    pub seed: Option<u64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            window: None,
            t: None,
            c: 0.2,
            intensity: 1.0,
            k: 1,
            seed: None,
        }
    }
}

impl SamplingConfig {
    pub fn window(&self) -> CliResult<Window> {
        match (self.window, self.t) {
            (Some(w), _) => {
                w.validate()?;
                Ok(w)
            }
            (None, Some(t)) => Ok(corridor_window(t, self.c, self.intensity, self.k)?),
            (None, None) => Err(CliError::Config(
                "no window: give `window` in the config or `--t` to use the corridor around [0, t]".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicConfig {
    /// Environment document to load; sampled when absent.
    pub environment: Option<PathBuf>,
    pub window: Option<Window>,
    pub t: Option<f64>,
    pub c: f64,
    pub intensity: f64,
    pub k: i64,
    pub seed: Option<u64>,
    /// Defaults to the vertical line `x = t`.
    pub target: Option<Value>,
    pub start: Option<[f64; 2]>,
    pub solver: SolverOptions,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        let s = SamplingConfig::default();
        GeodesicConfig {
            environment: None,
            window: s.window,
            t: s.t,
            c: s.c,
            intensity: s.intensity,
            k: s.k,
            seed: s.seed,
            target: None,
            start: None,
            solver: SolverOptions::default(),
        }
    }
}

impl GeodesicConfig {
    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            window: self.window,
            t: self.t,
            c: self.c,
            intensity: self.intensity,
            k: self.k,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFamily {
    #[default]
    Poisson,
    Bernoulli,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnimalConfig {
    pub n: usize,
    /// Cell-value file (`[{i, j, value}, ...]`); sampled when absent.
    pub grid: Option<PathBuf>,
    pub family: FieldFamily,
    /// `λ` for Poisson fields, `ε` for Bernoulli fields. A Poisson field
    /// with no parameter uses `λ = k²`.
    pub parameter: Option<f64>,
    pub k: i64,
    pub exact: Option<bool>,
    pub seed: Option<u64>,
}

impl Default for AnimalConfig {
    fn default() -> Self {
        AnimalConfig {
            n: 4,
            grid: None,
            family: FieldFamily::Poisson,
            parameter: None,
            k: 1,
            exact: None,
            seed: None,
        }
    }
}

fn point(v: &Value, field: &str) -> CliResult<Point2> {
    let bad = || {
        CliError::Core(CoreError::BadTarget(format!(
            "`{field}` must be an [x, y] pair of numbers"
        )))
    };
    let arr = v.get(field).and_then(Value::as_array).ok_or_else(bad)?;
    match arr.as_slice() {
        [x, y] => Ok(Point2::new(x.as_f64().ok_or_else(bad)?, y.as_f64().ok_or_else(bad)?)),
        _ => Err(bad()),
    }
}

/// Target description:
/// `{"kind": "vertical_line", "x": 4}`, `{"kind": "point", "at": [x, y]}`,
/// `{"kind": "segment", "a": [x, y], "b": [x, y]}` or
/// `{"kind": "line", "origin": [x, y], "direction": [x, y]}`.
pub fn parse_target(v: &Value) -> CliResult<TargetSet> {
    let bad = |msg: String| CliError::Core(CoreError::BadTarget(msg));
    let obj = v
        .as_object()
        .ok_or_else(|| bad("target must be a JSON object".into()))?;
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("target needs a string `kind`".into()))?;
    let allowed: &[&str] = match kind {
        "vertical_line" => &["kind", "x"],
        "point" => &["kind", "at"],
        "segment" => &["kind", "a", "b"],
        "line" => &["kind", "origin", "direction"],
        other => {
            return Err(bad(format!(
                "unknown target kind `{other}` (expected vertical_line, point, segment or line)"
            )))
        }
    };
    if let Some(extra) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(bad(format!("unexpected field `{extra}` for a {kind} target")));
    }
    let target = match kind {
        "vertical_line" => TargetSet::vertical_line(
            obj.get("x")
                .and_then(Value::as_f64)
                .ok_or_else(|| bad("`x` must be a number".into()))?,
        ),
        "point" => TargetSet::point(point(v, "at")?),
        "segment" => TargetSet::segment(point(v, "a")?, point(v, "b")?),
        _ => TargetSet::line(point(v, "origin")?, point(v, "direction")?),
    };
    Ok(target?)
}
