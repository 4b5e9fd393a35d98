//! Subcommand implementations. Each returns its artifacts; nothing touches
//! the filesystem until every artifact of the run exists.

use std::fmt::Write as _;

use levy_chaos::chaos::{c_poly_table, expand, jamshidian_expand, prm_integrands};
use levy_chaos::evaluate::{verify_exact, verify_grid};
use levy_chaos::models::{moments, sigma_adjust};
use levy_chaos::ortho::{orthogonalize, to_h_basis};
use levy_chaos::paths::{random_fixture, random_jump_path, simulate_batch, simulate_grid, SizeLaw};
use levy_chaos::taylor::{eval_batch_exact, eval_batch_grid, BatchReport};
use levy_chaos::{
    fmt_f64, Expansion, FunctionalSpec, GridPath, JumpPath, LevyModel, OrthoTriangular, Rational, Scalar,
    TimePolynomial, VerificationReport,
};
use serde_json::{json, Value};

use crate::config::{BasisArg, Command, Format, Mode, RunConfig, Substrate};
use crate::output::Artifact;
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    match (cfg.command, cfg.mode) {
        (Command::Coeffs, Mode::Rational) => coeffs::<Rational>(cfg),
        (Command::Coeffs, Mode::Float) => coeffs::<f64>(cfg),
        (Command::Expand, Mode::Rational) => expand_cmd::<Rational>(cfg),
        (Command::Expand, Mode::Float) => expand_cmd::<f64>(cfg),
        (Command::Ortho, Mode::Rational) => ortho::<Rational>(cfg),
        (Command::Ortho, Mode::Float) => ortho::<f64>(cfg),
        (Command::ExactVerify, Mode::Rational) => exact_verify::<Rational>(cfg),
        (Command::ExactVerify, Mode::Float) => exact_verify::<f64>(cfg),
        (Command::Simulate, _) => simulate(cfg),
        (Command::Verify, _) => verify(cfg),
        (Command::Convergence, _) => convergence(cfg),
        (Command::Taylor, _) => taylor(cfg),
    }
}

fn model(cfg: &RunConfig) -> &LevyModel {
    cfg.model.as_ref().expect("validated: model present")
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn poly_json<S: Scalar>(p: &TimePolynomial<S>) -> Value {
    Value::Array(p.coeffs().iter().map(Scalar::to_json).collect())
}

fn poly_cell<S: Scalar>(p: &TimePolynomial<S>) -> String {
    p.coeffs()
        .iter()
        .map(Scalar::to_text)
        .collect::<Vec<_>>()
        .join(";")
}

fn tuple_cell(parts: &[usize]) -> String {
    parts
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn coeffs<S: Scalar>(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let exp = expand::<S>(cfg.n, model(cfg))?;
    let table = c_poly_table(cfg.n, &exp.moments)?;
    let body = match cfg.format {
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("n".into(), json!(cfg.n));
            obj.insert("model".into(), json!(model(cfg).to_string()));
            obj.insert("exact".into(), json!(S::EXACT));
            obj.insert(
                "moments".into(),
                Value::Array(exp.moments.values().iter().map(Scalar::to_json).collect()),
            );
            obj.insert("constant".into(), poly_json(&exp.constant));
            obj.insert(
                "c".into(),
                Value::Array(
                    table
                        .iter()
                        .enumerate()
                        .map(|(k, p)| json!({ "k": k, "poly": poly_json(p) }))
                        .collect(),
                ),
            );
            obj.insert(
                "pi".into(),
                Value::Array(
                    exp.terms
                        .iter()
                        .map(|(t, p)| json!({ "tuple": t.parts(), "poly": poly_json(p) }))
                        .collect(),
                ),
            );
            pretty(&Value::Object(obj))
        }
        Format::Csv => {
            let mut out = String::from("table,index,poly\n");
            for (k, p) in table.iter().enumerate() {
                let _ = writeln!(out, "C,{k},{}", poly_cell(p));
            }
            for (t, p) in &exp.terms {
                let _ = writeln!(out, "Pi,{},{}", tuple_cell(t.parts()), poly_cell(p));
            }
            out
        }
    };
    Ok(vec![Artifact::new(cfg.out.clone(), body)])
}

/// Expansion in the requested basis plus the orthogonalization it needs.
fn build_expansion<S: Scalar>(
    n: usize,
    basis: BasisArg,
    model: Option<&LevyModel>,
) -> Result<(Expansion<S>, Option<OrthoTriangular<S>>), CliError> {
    Ok(match basis {
        BasisArg::Jamshidian => (jamshidian_expand(n)?, None),
        BasisArg::Y => (expand(n, model.expect("validated"))?, None),
        BasisArg::H => {
            let m = model.expect("validated");
            let exp = expand(n, m)?;
            let ortho = orthogonalize(&moments::<S>(m, 2 * n.max(1))?, n.max(1))?;
            (to_h_basis(&exp, &ortho)?, Some(ortho))
        }
        BasisArg::Prm => unreachable!("PRM handled by caller"),
    })
}

fn expand_cmd<S: Scalar>(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let body = if cfg.basis == BasisArg::Prm {
        let m = model(cfg);
        let exp = expand::<S>(cfg.n, m)?;
        let items = prm_integrands::<S>(cfg.n, m)?;
        match cfg.format {
            Format::Json => {
                let mut obj = serde_json::Map::new();
                obj.insert("order".into(), json!(cfg.n));
                obj.insert("basis".into(), json!("PRM"));
                obj.insert("constant".into(), poly_json(&exp.constant));
                obj.insert(
                    "integrands".into(),
                    Value::Array(items.iter().map(|d| d.to_json()).collect()),
                );
                pretty(&Value::Object(obj))
            }
            Format::Csv => {
                let mut out = String::from("tuple,exponents,coefficient\n");
                for d in &items {
                    let _ = writeln!(
                        out,
                        "{},{},{}",
                        tuple_cell(d.tuple.parts()),
                        tuple_cell(&d.exponents),
                        poly_cell(&d.coefficient)
                    );
                }
                out
            }
        }
    } else {
        let (exp, _) = build_expansion::<S>(cfg.n, cfg.basis, cfg.model.as_ref())?;
        match cfg.format {
            Format::Json => pretty(&exp.to_json()),
            Format::Csv => exp.to_csv(),
        }
    };
    Ok(vec![Artifact::new(cfg.out.clone(), body)])
}

fn ortho<S: Scalar>(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let o = orthogonalize(&moments::<S>(model(cfg), 2 * cfg.n)?, cfg.n)?;
    let body = match cfg.format {
        Format::Json => {
            let mut v = o.to_json();
            let obj = v.as_object_mut().expect("object");
            obj.insert("identity_residual".into(), json!(o.identity_residual()));
            obj.insert("orthogonality_residual".into(), json!(o.orthogonality_residual()));
            pretty(&v)
        }
        Format::Csv => {
            let mut out = String::from("table,i,j,value\n");
            for (name, get) in [("a", 0), ("b", 1)] {
                for i in 1..=cfg.n {
                    for j in 1..=i {
                        let v = if get == 0 { o.a(i, j) } else { o.b(i, j) };
                        let _ = writeln!(out, "{name},{i},{j},{}", v.to_text());
                    }
                }
            }
            out
        }
    };
    Ok(vec![Artifact::new(cfg.out.clone(), body)])
}

fn load_or_make_fixture<S: Scalar>(cfg: &RunConfig) -> Result<JumpPath<S>, CliError> {
    if let Some(p) = &cfg.fixture {
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::io(format!("cannot read fixture {}: {e}", p.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("fixture {}: {e}", p.display())))?;
        return Ok(JumpPath::from_json(&v)?);
    }
    let (_, end) = cfg.window_rational();
    let horizon = S::from_rational(&end);
    let order = 2 * cfg.n.max(1);
    Ok(match &cfg.model {
        Some(m) => {
            let mv = sigma_adjust(&moments::<S>(m, order)?)?;
            random_jump_path(cfg.jumps, horizon, SizeLaw::default(), S::zero(), mv, cfg.seed)?
        }
        None => random_fixture(cfg.jumps, horizon, order, cfg.seed)?,
    })
}

fn exact_verify<S: Scalar>(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let path = load_or_make_fixture::<S>(cfg)?;
    let (t0, t) = cfg.window_rational();
    let (t0, t) = (S::from_rational(&t0), S::from_rational(&t));
    let (exp, ortho) = match cfg.basis {
        BasisArg::Jamshidian => (jamshidian_expand(cfg.n)?, None),
        BasisArg::Y => (levy_chaos::chaos::expand_with_moments(cfg.n, &path.moments)?, None),
        BasisArg::H => {
            let y = levy_chaos::chaos::expand_with_moments(cfg.n, &path.moments)?;
            let o = orthogonalize(&path.moments, cfg.n.max(1))?;
            (to_h_basis(&y, &o)?, Some(o))
        }
        BasisArg::Prm => unreachable!("rejected by config validation"),
    };
    let report = verify_exact(&exp, &path, &t0, &t, ortho.as_ref())?;
    let mut v = report.to_json();
    v.as_object_mut()
        .expect("object")
        .insert("fixture".into(), path.to_json());
    Ok(vec![Artifact::new(cfg.out.clone(), pretty(&v))])
}

fn simulate(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let paths = simulate_batch(model(cfg), cfg.t, cfg.dt, cfg.t0, cfg.seed, cfg.paths)?;
    let body = match cfg.format {
        Format::Csv if paths.len() == 1 => paths[0].to_csv(),
        Format::Csv => {
            let mut out = String::from("path,step,t,dX,X\n");
            for p in &paths {
                for line in p.to_csv().lines().skip(1) {
                    let _ = writeln!(out, "{},{line}", p.path_index);
                }
            }
            out
        }
        Format::Json => {
            let items: Vec<Value> = paths
                .iter()
                .map(|p| json!({ "path_index": p.path_index, "dX": p.dx }))
                .collect();
            pretty(&json!({
                "model": model(cfg).to_string(),
                "seed": cfg.seed,
                "dt": cfg.dt,
                "t0": cfg.t0,
                "t": cfg.t,
                "paths": items,
            }))
        }
    };
    Ok(vec![Artifact::new(cfg.out.clone(), body)])
}

/// CSV to `--out` (or stdout), report to `--report`, or to stdout when the
/// CSV went to a file. In JSON format only the report is written.
fn csv_and_report(cfg: &RunConfig, csv: String, report: Value) -> Vec<Artifact> {
    match cfg.format {
        Format::Json => vec![Artifact::new(cfg.out.clone(), pretty(&report))],
        Format::Csv => {
            let mut out = vec![Artifact::new(cfg.out.clone(), csv)];
            if cfg.report.is_some() || cfg.out.is_some() {
                out.push(Artifact::new(cfg.report.clone(), pretty(&report)));
            }
            out
        }
    }
}

fn grid_verify(
    cfg: &RunConfig,
    path: &GridPath,
) -> Result<(VerificationReport, levy_chaos::evaluate::DiffSeries), CliError> {
    let (exp, ortho) = build_expansion::<f64>(cfg.n, cfg.basis, cfg.model.as_ref())?;
    Ok(verify_grid(&exp, path, cfg.t0, ortho.as_ref(), cfg.jump_threshold)?)
}

fn verify(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let path = simulate_grid(model(cfg), cfg.t, cfg.dt, cfg.t0, cfg.seed)?;
    let (report, series) = grid_verify(cfg, &path)?;
    Ok(csv_and_report(cfg, series.to_csv(), report.to_json()))
}

fn convergence(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let fine = cfg.dts.iter().copied().fold(f64::INFINITY, f64::min);
    let factors = cfg
        .dts
        .iter()
        .map(|dt| {
            let f = (dt / fine).round();
            if ((dt / fine) - f).abs() > 1e-9 * f {
                Err(CliError::config(format!(
                    "dt {dt} is not a multiple of the finest step {fine}"
                )))
            } else {
                Ok(f as usize)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    // one path on the finest grid; coarser grids sum its increments from t0
    let base = simulate_grid(model(cfg), cfg.t, fine, cfg.t0, cfg.seed)?;
    let mut rows = Vec::new();
    let mut csv = String::from(
        "dt,steps,max_abs_diff,terminal_diff,relative_terminal_diff,aligned,direct_jumps,reconstructed_jumps\n",
    );
    for (dt, factor) in cfg.dts.iter().zip(&factors) {
        let path = base.coarsen(*factor)?;
        let (report, _) = grid_verify(cfg, &path)?;
        let jumps = report.jumps.as_ref().expect("grid report has jumps");
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(*dt),
            path.steps(),
            fmt_f64(report.max_abs_diff),
            fmt_f64(report.terminal_diff),
            fmt_f64(report.relative_terminal_diff),
            jumps.aligned,
            jumps.direct_jumps,
            jumps.reconstructed_jumps
        );
        rows.push((*dt, report));
    }
    let mut by_dt: Vec<&(f64, VerificationReport)> = rows.iter().collect();
    by_dt.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = by_dt
        .windows(2)
        .all(|w| w[1].1.max_abs_diff < w[0].1.max_abs_diff);
    let report = json!({
        "model": model(cfg).to_string(),
        "n": cfg.n,
        "t0": cfg.t0,
        "t": cfg.t,
        "seed": cfg.seed,
        "basis": rows.first().map(|r| r.1.basis.clone()),
        "strictly_decreasing": decreasing,
        "rows": rows.iter().map(|(dt, r)| {
            let mut v = r.to_json();
            v.as_object_mut().expect("object").insert("dt".into(), json!(dt));
            v
        }).collect::<Vec<_>>(),
    });
    Ok(csv_and_report(cfg, csv, report))
}

fn taylor(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let p = cfg.functional.as_ref().expect("validated");
    let text = std::fs::read_to_string(p)
        .map_err(|e| CliError::io(format!("cannot read functional {}: {e}", p.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("functional {}: {e}", p.display())))?;
    let spec = FunctionalSpec::from_json(&v)?;
    let orders = if cfg.orders.is_empty() {
        vec![spec.order]
    } else {
        cfg.orders.clone()
    };
    let max_order = orders.iter().copied().max().unwrap_or(0).max(2);
    let horizon = spec.grid.last().expect("validated grid").to_f64();
    let m = model(cfg);
    let mv = sigma_adjust(&moments::<f64>(m, max_order)?)?;
    let grid_paths = simulate_batch(m, horizon, cfg.dt, 0.0, cfg.seed, cfg.paths)?;
    let jump_paths = match cfg.substrate {
        Substrate::Exact => grid_paths
            .iter()
            .map(|g| JumpPath::from_grid(g, mv.clone()))
            .collect::<Result<Vec<_>, _>>()?,
        Substrate::Grid => Vec::new(),
    };
    let mut rows: Vec<BatchReport> = Vec::new();
    for d in orders {
        let mut s = spec.clone();
        s.order = d;
        rows.push(match cfg.substrate {
            Substrate::Exact => eval_batch_exact(&s, &jump_paths)?,
            Substrate::Grid => eval_batch_grid(&s, &grid_paths, &mv)?,
        });
    }
    let body = match cfg.format {
        Format::Csv => {
            let mut out = String::from("order,paths,mean_abs_error,max_abs_error,std_error\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.order,
                    r.paths,
                    fmt_f64(r.mean_abs_error),
                    fmt_f64(r.max_abs_error),
                    fmt_f64(r.std_error)
                );
            }
            out
        }
        Format::Json => {
            let decreasing = rows
                .windows(2)
                .all(|w| w[1].mean_abs_error < w[0].mean_abs_error);
            pretty(&json!({
                "model": m.to_string(),
                "substrate": match cfg.substrate { Substrate::Exact => "exact", Substrate::Grid => "grid" },
                "dt": cfg.dt,
                "seed": cfg.seed,
                "paths": cfg.paths,
                "strictly_decreasing": decreasing,
                "rows": rows,
            }))
        }
    };
    Ok(vec![Artifact::new(cfg.out.clone(), body)])
}
