//! JSON and CSV encodings of profiles, reports and sampled functions.

use std::str::FromStr;
use std::sync::Arc;

use coagss::analyzer::VerificationReport;
use coagss::grid::{Grid, GridKind};
use coagss::kernel::{KernelSpec, KernelTerm};
use coagss::profiles::ProfileSolution;
use coagss::GridFunction64;
use serde_json::{json, Map, Number, Value};

use crate::CliError;

pub const SPEC_VERSION: u64 = 1;

/// 17 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(
            Number::from_str(&format!("{x:.16e}")).expect("formatted float is a JSON number"),
        )
    } else {
        Value::Null
    }
}

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn moment(exponent: f64, m: coagss::grid::Moment<f64>) -> Value {
    json!({ "exponent": num(exponent), "value": num(m.value), "tail": num(m.tail) })
}

pub fn kernel_json(k: &KernelSpec<f64>) -> Value {
    let terms: Vec<Value> = k
        .terms()
        .iter()
        .map(|t| json!({ "alpha": num(t.alpha), "beta": num(t.beta), "weight": num(t.weight) }))
        .collect();
    json!({ "terms": terms })
}

pub fn grid_json(g: &Grid<f64>) -> Value {
    match g.kind() {
        GridKind::Geometric { y_min, y_max, .. } => {
            json!({ "kind": "geometric", "ymin": num(y_min), "ymax": num(y_max), "n": g.len() })
        }
        GridKind::Uniform { y_max, step } => {
            json!({ "kind": "uniform", "ymin": num(step), "ymax": num(y_max), "n": g.len() })
        }
    }
}

/// Profile document; `extra` fields are merged at the top level.
pub fn profile_json(sol: &ProfileSolution<f64>, extra: Map<String, Value>) -> Value {
    let k = &sol.kernel;
    let m = &sol.moments;
    let mut doc = json!({
        "kernel": kernel_json(k),
        "grid": grid_json(sol.g.grid()),
        "values": sol.g.values().iter().map(|&v| num(v)).collect::<Vec<_>>(),
        "moments": {
            "1": moment(1.0, m.mass),
            "lambda": moment(k.lambda(), m.lambda),
            "alpha": moment(k.alpha_eff(), m.alpha),
            "beta": moment(k.beta_eff(), m.beta),
        },
        "class": k.class().name(),
        "residual": num(sol.residual),
        "residual_abs": num(sol.residual_abs),
        "converged": sol.converged,
        "iterations": sol.iterations,
        "last_change": num(sol.last_change),
        "warnings": sol.warnings,
        "spec_version": SPEC_VERSION,
    });
    let obj = doc.as_object_mut().expect("object literal");
    if let Some(t) = sol.tau {
        obj.insert("tau".into(), num(t));
    }
    if let Some(k0) = sol.k0 {
        obj.insert("K0".into(), num(k0));
    }
    if let Some(lf) = &sol.lambda_fn {
        obj.insert(
            "lambda_fn".into(),
            json!({
                "M_alpha": num(lf.m_alpha()),
                "M_beta": num(lf.m_beta()),
                "lambda": num(lf.lambda),
                "beta_is_zero": lf.beta_is_zero(),
            }),
        );
    }
    obj.extend(extra);
    doc
}

/// Kernel and profile values read back from a profile document.
pub struct StoredProfile {
    pub kernel: KernelSpec<f64>,
    pub g: GridFunction64,
    pub converged: bool,
}

fn field<'a>(v: &'a Value, path: &str) -> Result<&'a Value, CliError> {
    path.split('.')
        .try_fold(v, |cur, key| cur.get(key))
        .ok_or_else(|| CliError::Usage(format!("profile JSON: missing field {path}")))
}

fn real(v: &Value, path: &str) -> Result<f64, CliError> {
    field(v, path)?
        .as_f64()
        .ok_or_else(|| CliError::Usage(format!("profile JSON: {path} is not a number")))
}

fn as_real(v: &Value, what: &str) -> Result<f64, CliError> {
    v.as_f64()
        .ok_or_else(|| CliError::Usage(format!("profile JSON: {what} is not a number")))
}

pub fn parse_profile(text: &str) -> Result<StoredProfile, CliError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("profile JSON: {e}")))?;
    let version = field(&doc, "spec_version")?.as_u64();
    if version != Some(SPEC_VERSION) {
        return Err(CliError::Usage(format!(
            "profile JSON: unsupported spec_version {version:?}"
        )));
    }
    let terms = field(&doc, "kernel.terms")?
        .as_array()
        .ok_or_else(|| CliError::Usage("profile JSON: kernel.terms is not an array".into()))?
        .iter()
        .map(|t| {
            KernelTerm::validate(real(t, "alpha")?, real(t, "beta")?, real(t, "weight")?)
                .map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let kernel = KernelSpec::new(terms)?;
    let n = field(&doc, "grid.n")?
        .as_u64()
        .ok_or_else(|| CliError::Usage("profile JSON: grid.n is not an integer".into()))?
        as usize;
    let ymax = real(&doc, "grid.ymax")?;
    let grid = match field(&doc, "grid.kind")?.as_str() {
        Some("geometric") => Grid::geometric(real(&doc, "grid.ymin")?, ymax, n)?,
        Some("uniform") => Grid::uniform(ymax, n)?,
        other => {
            return Err(CliError::Usage(format!(
                "profile JSON: unknown grid.kind {other:?}"
            )))
        }
    };
    let values = field(&doc, "values")?
        .as_array()
        .ok_or_else(|| CliError::Usage("profile JSON: values is not an array".into()))?
        .iter()
        .enumerate()
        .map(|(i, v)| as_real(v, &format!("values[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(CliError::Usage(format!(
            "profile JSON: {} values for a grid of {n} nodes",
            values.len()
        )));
    }
    let g = GridFunction64::new(Arc::new(grid), values)?;
    let converged = field(&doc, "converged")?.as_bool().unwrap_or(false);
    Ok(StoredProfile {
        kernel,
        g,
        converged,
    })
}

pub fn report_json(r: &VerificationReport<f64>) -> Value {
    let checks: Vec<Value> = r
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "property": c.property,
                "measured": num(c.measured),
                "expected": num(c.expected),
                "tolerance": num(c.tolerance),
                "passed": c.passed,
                "warning": c.warning,
                "detail": c.detail,
            })
        })
        .collect();
    json!({ "profile_id": r.profile_id, "passed": r.passed(), "checks": checks, "spec_version": SPEC_VERSION })
}

/// `header` line, then one `y,value` row per node.
pub fn columns_csv(header: &str, y: &[f64], v: &[f64]) -> String {
    let mut out = String::with_capacity(40 * (y.len() + 1));
    out.push_str(header);
    out.push('\n');
    for (a, b) in y.iter().zip(v) {
        out.push_str(&fmt17(*a));
        out.push(',');
        out.push_str(&fmt17(*b));
        out.push('\n');
    }
    out
}

/// Two numeric columns after a header line.
pub fn parse_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    lines
        .next()
        .ok_or_else(|| CliError::Usage("CSV input is empty".into()))?;
    let mut y = Vec::new();
    let mut v = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut cells = line.split(',').map(str::trim);
        let mut cell = |what: &str| -> Result<f64, CliError> {
            cells
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| CliError::Usage(format!("CSV row {}: bad {what} column", i + 1)))
        };
        y.push(cell("y")?);
        v.push(cell("value")?);
    }
    Ok((y, v))
}
