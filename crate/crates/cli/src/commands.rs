use std::path::Path;

use khessian::io::{self, BRANCH_COLUMNS, ORBIT_COLUMNS, PROFILE_COLUMNS};
use khessian::{
    bvp, c_nk_exact, closed_forms, count_solutions, diagnostics, estimate_lambda_star, integrate_ivp, log_grid,
    make_params, mu_star, mu_star_exact, q_star_exact, solve_d, to_phase, DRootKind, Error, LambdaStarOptions,
    ProblemParams, RadialSolution, RegimeTag,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{self, emit};
use crate::CliError;

/// Relative distance below which a requested `q` is taken to be `q*`.
const QSTAR_SNAP: f64 = 1e-12;

/// Validates `(n, k)` alone.
fn check_nk(n: i64, k: i64) -> Result<(u32, u32), CliError> {
    // any q above k isolates the (n, k) constraints
    let p = make_params(n, k, k as f64 + 1.0, None)?;
    Ok((p.n, p.k))
}

fn resolve(n: i64, k: i64, q: QArg, lambda: Option<f64>) -> Result<ProblemParams, CliError> {
    let q = match q {
        QArg::Critical => {
            let (n, k) = check_nk(n, k)?;
            khessian::q_star(n, k)
        }
        QArg::Value(v) => match check_nk(n, k) {
            Ok((n32, k32)) => {
                let qs = khessian::q_star(n32, k32);
                if (v - qs).abs() <= QSTAR_SNAP * qs {
                    qs
                } else {
                    v
                }
            }
            // let make_params report every violation together
            Err(_) => v,
        },
    };
    Ok(make_params(n, k, q, lambda)?)
}

fn require_tol(tol: f64) -> Result<(), CliError> {
    if tol.is_finite() && tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(vec![format!("tol must lie in (0, 1) (got {tol})")]).into())
    }
}

fn require_positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(vec![format!("{name} must be positive (got {x})")]).into())
    }
}

pub fn exponents(a: &ExponentsArgs) -> Result<(), CliError> {
    let (n, k) = check_nk(a.n, a.k)?;
    let mut report = json!({
        "n": n,
        "k": k,
        "c_nk": khessian::c_nk(n, k),
        "c_nk_exact": c_nk_exact(n, k).to_string(),
        "q_star": khessian::q_star(n, k),
        "q_star_exact": q_star_exact(n, k).to_string(),
        "q_jl": khessian::q_jl(n, k),
        "mu_star": mu_star(n, k),
        "mu_star_exact": mu_star_exact(n, k).to_string(),
    });
    if let Some(q) = a.q {
        let p = resolve(a.n, a.k, q, None)?;
        let d = p.derived();
        let regime = p.regime();
        report["problem"] = json!({
            "q": p.q,
            "tau": d.tau,
            "a": d.a,
            "lambda_tilde": d.lambda_tilde,
            "lambda_tilde_physical": d.c_nk * d.lambda_tilde,
            "discriminant": d.discriminant,
            "trace": d.trace_j,
            "det": d.det_j,
            "eigenvalues": regime.eigenvalues,
            "regime": regime.tag,
        });
    }
    let meta = output::meta("exponents", a);
    emit(None, &output::json(&meta, &json!({ "exponents": report }))?)
}

pub fn orbit(a: &OrbitArgs) -> Result<(), CliError> {
    require_tol(a.tol)?;
    require_positive("s_max", a.s_max)?;
    let p = resolve(a.problem.n, a.problem.k, a.problem.q, None)?;
    let profile = integrate_ivp(&p, a.s_max, a.tol)?;
    let orbit = to_phase(&profile);
    let (winding, winding_note) = match orbit.winding_count() {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let last = orbit.samples.last().expect("nonempty orbit");
    let summary = json!({
        "problem": p,
        "regime": orbit.regime.tag,
        "eigenvalues": orbit.regime.eigenvalues,
        "equilibria": orbit.equilibria,
        "t_min": orbit.t_min(),
        "t_max": orbit.t_max(),
        "samples": orbit.samples.len(),
        "winding_count": winding,
        "winding_note": winding_note,
        "end_distance_to_o1": last.y.hypot(last.z),
    });
    let meta = output::meta("orbit", a);
    let bytes = match a.output.format {
        Format::Json => output::json(&meta, &json!({ "summary": summary, "orbit": orbit }))?,
        Format::Csv => output::csv(
            &meta,
            &[("problem", json!(p)), ("summary", summary.clone())],
            &ORBIT_COLUMNS,
            io::orbit_rows(&orbit),
        )?,
    };
    emit(a.output.out.as_deref(), &bytes)?;
    if a.output.out.is_some() {
        emit(None, &output::json(&meta, &json!({ "summary": summary }))?)?;
    }
    Ok(())
}

pub fn bifurcation(a: &BifurcationArgs) -> Result<(), CliError> {
    require_tol(a.tol)?;
    require_positive("s_min", a.s_min)?;
    if !(a.s_max > a.s_min) || a.per_decade == 0 {
        return Err(Error::Domain(vec![format!(
            "need s_max > s_min and per_decade >= 1 (got s_min={}, s_max={}, per_decade={})",
            a.s_min, a.s_max, a.per_decade
        )])
        .into());
    }
    let p = resolve(a.problem.n, a.problem.k, a.problem.q, None)?;
    let curve = bvp::bifurcation_curve(&p, &log_grid(a.s_min, a.s_max, a.per_decade), a.tol)?;
    let summary = json!({
        "problem": p,
        "regime": p.regime().tag,
        "lambda_tilde": curve.lambda_tilde,
        "lambda_limit_physical": curve.c_nk * curve.lambda_tilde,
        "lambda_increasing": curve.is_lambda_increasing(),
        "a_decreasing": curve.is_a_decreasing(),
        "conventions": curve.conventions,
        "samples": curve.samples.len(),
    });
    let meta = output::meta("bifurcation", a);
    let bytes = match a.output.format {
        Format::Json => output::json(&meta, &json!({ "summary": summary, "branch": curve }))?,
        Format::Csv => output::csv(
            &meta,
            &[("problem", json!(p)), ("summary", summary.clone())],
            &BRANCH_COLUMNS,
            io::branch_rows(&curve),
        )?,
    };
    emit(a.output.out.as_deref(), &bytes)?;
    if a.output.out.is_some() {
        emit(None, &output::json(&meta, &json!({ "summary": summary }))?)?;
    }
    Ok(())
}

/// Closed-form solutions at `q = q*`; none above `μ*`.
fn critical_case(p: &ProblemParams, lambda: f64) -> Result<(Value, Vec<RadialSolution>), CliError> {
    let roots = solve_d(lambda, p.n, p.k)?;
    let sols = if roots.kind == DRootKind::None {
        Vec::new()
    } else {
        closed_forms::critical_solutions(lambda, p.n, p.k)?
            .into_iter()
            .map(|s| if s.residuals.is_some() { s } else { s.with_residuals() })
            .collect()
    };
    let mult = json!({
        "lambda_physical": lambda,
        "lambda_rescaled": lambda / p.c_nk(),
        "count": sols.len(),
        "truncated": false,
        "d_roots": roots,
    });
    Ok((mult, sols))
}

pub fn solve(a: &SolveArgs) -> Result<(), CliError> {
    require_tol(a.tol)?;
    require_positive("s_max", a.s_max)?;
    let p = resolve(a.problem.n, a.problem.k, a.problem.q, Some(a.lambda))?;
    let (mult, sols) = if p.regime().tag == RegimeTag::Center {
        critical_case(&p, a.lambda)?
    } else {
        let (m, sols) = bvp::solve_all(&p, a.lambda, a.s_max, a.tol)?;
        (json!(m), sols)
    };
    let meta = output::meta("solve", a);
    let ext = match a.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let mut entries = Vec::with_capacity(sols.len());
    for sol in &sols {
        let name = format!("profile_{:03}.{ext}", sol.index);
        if let Some(dir) = &a.out_dir {
            let bytes = match a.format {
                Format::Json => output::json(&meta, &json!({ "solution": sol }))?,
                Format::Csv => output::csv(
                    &meta,
                    &[
                        ("problem", json!(sol.params)),
                        ("lambda_physical", json!(sol.lambda_physical)),
                        ("index", json!(sol.index)),
                        ("A", json!(sol.a)),
                        ("source", json!(sol.source)),
                    ],
                    &PROFILE_COLUMNS,
                    io::profile_rows(sol),
                )?,
            };
            emit(Some(&dir.join(&name)), &bytes)?;
        }
        entries.push(json!({
            "index": sol.index,
            "A": sol.a,
            "source": sol.source,
            "points": sol.r.len(),
            "residuals": sol.residuals,
            "file": a.out_dir.as_ref().map(|_| name),
        }));
    }
    let summary = json!({
        "problem": p,
        "regime": p.regime().tag,
        "multiplicity": mult,
        "solutions": entries,
    });
    let bytes = output::json(&meta, &summary)?;
    if let Some(dir) = &a.out_dir {
        emit(Some(&dir.join("summary.json")), &bytes)?;
    }
    emit(None, &bytes)
}

fn read_input(path: &Path) -> Result<io::ProfileData, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    io::read_profile(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Domain(v) => CliError::Input(format!("{}: {}", path.display(), v.join("; "))),
        other => CliError::Input(format!("{}: {other}", path.display())),
    })
}

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let data = read_input(&a.file)?;
    let from_file = data.params;
    let missing = |what: &str| CliError::Input(format!("{what} is neither in the file nor given on the command line"));
    let n = a.n.or(from_file.map(|p| p.n as i64)).ok_or_else(|| missing("n"))?;
    let k = a.k.or(from_file.map(|p| p.k as i64)).ok_or_else(|| missing("k"))?;
    let q =
        a.q.or(from_file.map(|p| QArg::Value(p.q)))
            .ok_or_else(|| missing("q"))?;
    let lambda = a.lambda.or(data.lambda_physical).ok_or_else(|| missing("lambda"))?;
    let p = resolve(n, k, q, Some(lambda))?;
    if data.r.len() < 6 || data.r.len() != data.u.len() || data.r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Input(
            "profile needs at least 6 samples with strictly increasing r".into(),
        ));
    }
    let res = diagnostics::residuals(&p, lambda, &data.r, &data.u, data.du.as_deref());
    let worst = res.worst();
    let pass = worst <= a.threshold && res.boundary <= a.threshold;
    let report = json!({
        "problem": p,
        "points": data.r.len(),
        "derivative": if data.du.is_some() { "file" } else { "finite_difference" },
        "residuals": res,
        "worst": worst,
        "threshold": a.threshold,
        "pass": pass,
    });
    let meta = output::meta("verify", a);
    emit(None, &output::json(&meta, &json!({ "verify": report }))?)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "worst residual {worst:e}, boundary {:e}, threshold {:e}",
            res.boundary, a.threshold
        )))
    }
}

pub fn lambda_star(a: &LambdaStarArgs) -> Result<(), CliError> {
    require_tol(a.rel_tol)?;
    let p = resolve(a.problem.n, a.problem.k, a.problem.q, None)?;
    let opts = LambdaStarOptions {
        tol: a.rel_tol,
        ..LambdaStarOptions::default()
    };
    let est = estimate_lambda_star(&p, opts)?;
    let meta = output::meta("lambda-star", a);
    emit(
        None,
        &output::json(&meta, &json!({ "problem": p, "lambda_star": est }))?,
    )
}

#[derive(serde::Serialize)]
struct SweepRow {
    q: f64,
    lambda_physical: f64,
    regime: Option<RegimeTag>,
    count: Option<usize>,
    truncated: Option<bool>,
    error: Option<String>,
}

fn sweep_one(n: i64, k: i64, q: QArg, lambdas: &[f64], s_max: f64, tol: f64) -> Vec<SweepRow> {
    let row = |q: f64, lambda: f64, regime, r: Result<(usize, bool), Error>| match r {
        Ok((count, truncated)) => SweepRow {
            q,
            lambda_physical: lambda,
            regime,
            count: Some(count),
            truncated: Some(truncated),
            error: None,
        },
        Err(e) => SweepRow {
            q,
            lambda_physical: lambda,
            regime,
            count: None,
            truncated: None,
            error: Some(e.to_string()),
        },
    };
    let p = match resolve(n, k, q, None) {
        Ok(p) => p,
        Err(e) => {
            let qv = match q {
                QArg::Value(v) => v,
                QArg::Critical => f64::NAN,
            };
            return lambdas
                .iter()
                .map(|&l| row(qv, l, None, Err(Error::Numeric(e.to_string()))))
                .collect();
        }
    };
    let tag = p.regime().tag;
    let counts: Vec<Result<(usize, bool), Error>> = match tag {
        RegimeTag::Center => lambdas
            .iter()
            .map(|&l| {
                solve_d(l, p.n, p.k).map(|d| {
                    let c = match d.kind {
                        DRootKind::None => 0,
                        DRootKind::Double => 1,
                        DRootKind::Two => 2,
                    };
                    (c, false)
                })
            })
            .collect(),
        RegimeTag::Subcritical => lambdas
            .iter()
            .map(|&l| count_solutions(&p, l, s_max, tol).map(|m| (m.count, m.truncated)))
            .collect(),
        _ => match integrate_ivp(&p, s_max, tol) {
            Ok(profile) => lambdas
                .iter()
                .map(|&l| bvp::count_solutions_on(&profile, l).map(|m| (m.count, m.truncated)))
                .collect(),
            Err(e) => lambdas.iter().map(|_| Err(e.clone())).collect(),
        },
    };
    lambdas
        .iter()
        .zip(counts)
        .map(|(&l, r)| row(p.q, l, Some(tag), r))
        .collect()
}

pub fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    require_tol(a.tol)?;
    require_positive("s_max", a.s_max)?;
    check_nk(a.n, a.k)?;
    for &l in &a.lambda {
        require_positive("lambda", l)?;
    }
    if a.jobs == 0 {
        return Err(Error::Domain(vec!["jobs must be at least 1".into()]).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Output(format!("thread pool: {e}")))?;
    // indexed collect keeps the input order for any thread count
    let rows: Vec<SweepRow> = pool.install(|| {
        a.q.par_iter()
            .map(|&q| sweep_one(a.n, a.k, q, &a.lambda, a.s_max, a.tol))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let meta = output::meta("sweep", a);
    let bytes = match a.output.format {
        Format::Json => output::json(&meta, &json!({ "rows": rows }))?,
        Format::Csv => {
            let opt = |x: Option<String>| x.unwrap_or_default();
            let records = rows
                .iter()
                .map(|r| {
                    vec![
                        io::format_float(r.q),
                        io::format_float(r.lambda_physical),
                        opt(r.regime.map(|t| t.to_string())),
                        opt(r.count.map(|c| c.to_string())),
                        opt(r.truncated.map(|t| t.to_string())),
                        opt(r.error.clone()),
                    ]
                })
                .collect();
            output::csv_records(
                &meta,
                &[],
                &["q", "lambda_physical", "regime", "count", "truncated", "error"],
                records,
            )?
        }
    };
    emit(a.output.out.as_deref(), &bytes)
}
