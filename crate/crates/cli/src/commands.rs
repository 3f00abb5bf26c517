use std::path::{Path, PathBuf};
use std::sync::Arc;

use coagss::analyzer::verify as verify_profile;
use coagss::dynamics::{
    rescale_to_profile_frame, self_similar_initial, stability_bound, step, EvolutionState,
};
use coagss::fracalc::{left, right};
use coagss::grid::Grid;
use coagss::kernel::{KernelSpec, KernelTerm};
use coagss::profiles::{solve as solve_profile, GridSpec, ProfileSolution, SolverOptions};
use coagss::GridFunction64;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::schema::{self, fmt17, num};
use crate::CliError;

fn kernel(cfg: &ExperimentConfig) -> Result<KernelSpec<f64>, CliError> {
    let terms = match cfg.raw("terms") {
        Some(spec) => spec
            .split(',')
            .map(|t| {
                let p: Vec<&str> = t.split(':').map(str::trim).collect();
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("invalid value for terms: {t:?}")))
                };
                match p.as_slice() {
                    [a, b, w] => Ok(KernelTerm::validate(parse(a)?, parse(b)?, parse(w)?)?),
                    [a, b] => Ok(KernelTerm::validate(parse(a)?, parse(b)?, 1.0)?),
                    _ => Err(CliError::Usage(format!(
                        "invalid value for terms: {t:?} (expected alpha:beta:weight)"
                    ))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![KernelTerm::validate(
            cfg.get_or("alpha", 0.0)?,
            cfg.get_or("beta", 0.0)?,
            cfg.get_or("weight", 1.0)?,
        )?],
    };
    Ok(KernelSpec::new(terms)?)
}

fn grid_spec(cfg: &ExperimentConfig, default: GridSpec<f64>) -> Result<GridSpec<f64>, CliError> {
    Ok(GridSpec {
        y_min: cfg.get_or("ymin", default.y_min)?,
        y_max: cfg.get_or("ymax", default.y_max)?,
        n: cfg.get_or("n", default.n)?,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn load_profile(path: &str) -> Result<schema::StoredProfile, CliError> {
    schema::parse_profile(&read(Path::new(path))?)
}

pub fn solve(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let k = kernel(cfg)?;
    let d = SolverOptions::<f64>::default();
    let opts = SolverOptions {
        grid: grid_spec(cfg, d.grid)?,
        tol: cfg.get_or("tol", d.tol)?,
        max_iter: cfg.get_or("max_iter", d.max_iter)?,
        omega: cfg.get_or("omega", d.omega)?,
        residual_tol: cfg.get_or("residual_tol", d.residual_tol)?,
        ..d
    };
    let mass: f64 = cfg.get_or("mass", 1.0)?;
    let out = PathBuf::from(cfg.get_or("output", "profile.json".to_string())?);
    let csv = match cfg.raw("csv") {
        Some(p) => PathBuf::from(p),
        None => out.with_extension("csv"),
    };
    let sol = solve_profile(&k, mass, &opts)?;
    write(&out, &pretty(&schema::profile_json(&sol, Map::new())))?;
    write(
        &csv,
        &schema::columns_csv("y,g", sol.g.nodes(), sol.g.values()),
    )?;
    println!(
        "{} class={} iterations={} residual={:e} converged={}",
        out.display(),
        k.class().name(),
        sol.iterations,
        sol.residual,
        sol.converged
    );
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    if !sol.converged {
        return Err(CliError::Numerical(format!(
            "no convergence; partial result written to {}",
            out.display()
        )));
    }
    Ok(())
}

pub fn verify(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let path: String = cfg.require("profile")?;
    let stored = load_profile(&path)?;
    let mut sol = ProfileSolution::from_profile(stored.kernel, stored.g)?;
    sol.converged = stored.converged;
    let bound = cfg.get_or("residual_tol", SolverOptions::<f64>::default().residual_tol)?;
    let id = Path::new(&path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let report = verify_profile(&sol, bound, &id)?;
    let text = pretty(&schema::report_json(&report));
    match cfg.raw("output") {
        Some(p) => write(Path::new(p), &text)?,
        None => print!("{text}"),
    }
    if !report.passed() {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(CliError::Verification(format!(
            "failed checks: {}",
            names.join(", ")
        )));
    }
    Ok(())
}

enum Source {
    Exp,
    File(String),
}

fn source(cfg: &ExperimentConfig, key: &str, default: &str) -> Result<Option<Source>, CliError> {
    let s = cfg.raw(key).unwrap_or(default);
    Ok(match s {
        "none" => None,
        "exp" => Some(Source::Exp),
        p => Some(Source::File(p.to_string())),
    })
}

pub fn evolve(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let k = kernel(cfg)?;
    let lambda = k.lambda();
    let t0: f64 = cfg.get_or("t0", 1.0)?;
    if !(t0 > 0.0) {
        return Err(CliError::Usage(format!(
            "invalid value for t0: {t0} (must be positive)"
        )));
    }
    let t_end = match cfg.get::<f64>("t_end")? {
        Some(t) => t,
        None => (cfg.get_or("ratio", 100.0)? - 1.0) * t0,
    };
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(CliError::Usage(format!("invalid value for t_end: {t_end}")));
    }
    let auto = cfg.flag("auto_dt")?;
    let cfl: f64 = cfg.get_or("cfl", 0.02)?;
    let dt: Option<f64> = cfg.get("dt")?;
    if auto && !(cfl > 0.0 && cfl < 1.0) {
        return Err(CliError::Usage(format!(
            "invalid value for cfl: {cfl} (must lie in (0, 1))"
        )));
    }
    if !auto && !dt.is_some_and(|d| d > 0.0) {
        return Err(CliError::Usage("set a positive dt or auto_dt".into()));
    }
    let every: usize = cfg.get_or("every", 1)?.max(1);
    let grid = grid_spec(
        cfg,
        GridSpec {
            y_min: 1e-3,
            y_max: 2e4,
            n: 256,
        },
    )?
    .build()?;
    let state0 = match source(cfg, "initial", "exp")? {
        Some(Source::Exp) | None => {
            EvolutionState::new(GridFunction64::from_fn(grid, |y| (-y).exp()), t0)?
        }
        Some(Source::File(p)) => self_similar_initial(&load_profile(&p)?.g, lambda, t0)?,
    };
    let grid = state0.f.grid().clone();
    let reference = match source(cfg, "reference", "none")? {
        None => None,
        Some(Source::Exp) => Some(GridFunction64::from_fn(grid.clone(), |y| (-y).exp())),
        Some(Source::File(p)) => Some(load_profile(&p)?.g.resample(&grid)?),
    };

    let mut rows = String::from(if reference.is_some() {
        "t,M0,M1,distance\n"
    } else {
        "t,M0,M1\n"
    });
    let row = |s: &EvolutionState<f64>, rows: &mut String| -> Result<(), CliError> {
        rows.push_str(&format!(
            "{},{},{}",
            fmt17(s.t),
            fmt17(s.number()),
            fmt17(s.mass())
        ));
        if let Some(r) = &reference {
            let d = rescale_to_profile_frame(s, lambda)?.l1_1_distance(r)?;
            rows.push_str(&format!(",{}", fmt17(d)));
        }
        rows.push('\n');
        Ok(())
    };
    let mut s = state0;
    row(&s, &mut rows)?;
    let mut steps = 0usize;
    while s.t < t_end {
        let h = if auto {
            cfl * stability_bound(&s.f, &k)
        } else {
            dt.unwrap_or_default()
        };
        let h = if h.is_finite() {
            h.min(t_end - s.t)
        } else {
            t_end - s.t
        };
        s = step(&s, h, &k)?;
        steps += 1;
        if steps % every == 0 || s.t >= t_end {
            row(&s, &mut rows)?;
        }
    }
    match cfg.raw("trajectory") {
        Some(p) => write(Path::new(p), &rows)?,
        None => print!("{rows}"),
    }
    if let Some(p) = cfg.raw("output") {
        let g = rescale_to_profile_frame(&s, lambda)?;
        let mut sol = ProfileSolution::from_profile(k.clone(), g)?;
        sol.iterations = steps;
        sol.converged = true;
        let mut extra = Map::new();
        extra.insert("frame".into(), json!("rescaled"));
        extra.insert("t".into(), num(s.t));
        extra.insert("t0".into(), num(s.t0));
        extra.insert("mass_drift".into(), num(s.mass_drift()));
        extra.insert("outflux".into(), num(s.outflux));
        extra.insert("clip_defect".into(), num(s.clip_defect));
        write(Path::new(p), &pretty(&schema::profile_json(&sol, extra)))?;
    }
    eprintln!("steps={steps} t={} mass_drift={:e}", s.t, s.mass_drift());
    Ok(())
}

/// Nodes `h, 2h, ..., n h` up to rounding.
fn uniform_grid(y: &[f64]) -> Result<Grid<f64>, CliError> {
    let n = y.len();
    if n < 2 {
        return Err(CliError::Usage("input needs at least two rows".into()));
    }
    let grid = Grid::uniform(y[n - 1], n)?;
    let tol = 1e-9 * y[n - 1];
    if let Some(i) = grid
        .nodes()
        .iter()
        .zip(y)
        .position(|(a, b)| (a - b).abs() > tol)
    {
        return Err(CliError::Usage(format!(
            "input grid is not uniform h, 2h, ..., n h (row {} has y = {}, expected {})",
            i + 1,
            y[i],
            grid.nodes()[i]
        )));
    }
    Ok(grid)
}

pub fn frac(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let input: String = cfg.require("input")?;
    let order: f64 = cfg.require("order")?;
    if !(order >= 0.0) || !order.is_finite() {
        return Err(CliError::Usage(format!(
            "invalid value for order: {order} (must be nonnegative)"
        )));
    }
    let signed = match cfg.raw("op").unwrap_or("integral") {
        "integral" => -order,
        "derivative" => order,
        other => return Err(CliError::Usage(format!("invalid value for op: {other:?}"))),
    };
    let text = read(Path::new(&input))?;
    let header = text.lines().next().unwrap_or("y,f").trim().to_string();
    let (y, v) = schema::parse_columns(&text)?;
    let f = GridFunction64::new(Arc::new(uniform_grid(&y)?), v)?;
    let out = match cfg.raw("side").unwrap_or("left") {
        "left" => left(&f, signed)?,
        "right" => right(&f, signed)?,
        other => {
            return Err(CliError::Usage(format!(
                "invalid value for side: {other:?}"
            )))
        }
    };
    let csv = schema::columns_csv(&header, out.nodes(), out.values());
    match cfg.raw("output") {
        Some(p) => write(Path::new(p), &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
