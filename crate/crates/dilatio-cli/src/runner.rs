//! Executes resolved checks, collects rows, and writes reports.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use dilatio::{
    check_coarea, check_dilation, check_entropy_bounds, check_gaussian_suite, check_isoperimetry,
    check_lsi, check_moment_suite, check_negative_suite, check_stability, dilation_area, normal_cdf,
    reconstruct_dilation, sharpness_probes, CheckResult, CheckStatus, CoareaSign, EntropyVariant,
    Estimate, EstimationBudget, LsiVariant, ScalarField, StabilityMode,
    SymmetricConvexBody,
};

use crate::config::{BudgetSpec, CheckSpec, ResolvedScenario};

pub fn budget_from_spec(spec: &BudgetSpec) -> Result<EstimationBudget, String> {
    let mut budget = match spec.method.as_str() {
        "quadrature" => EstimationBudget::quadrature(),
        "monte-carlo" => EstimationBudget::monte_carlo(spec.samples, spec.seed),
        "auto" => EstimationBudget::auto(spec.samples, spec.seed),
        other => {
            return Err(format!(
                "budget.method must be quadrature, monte-carlo, or auto; got {other:?}"
            ))
        }
    };
    budget.samples = spec.samples;
    budget.quad_tol = spec.quad_tol;
    budget.seed = spec.seed;
    Ok(budget)
}

/// One row of output. Suites contribute several rows, namespaced by the
/// configured check id.
pub fn run_check(
    check: &CheckSpec,
    scenario: &ResolvedScenario,
    budget: &EstimationBudget,
) -> Vec<CheckResult> {
    let mut rows = match dispatch(check, scenario, budget) {
        Ok(rows) => rows,
        Err(e) => vec![error_row(&check.id, &e, budget.seed)],
    };
    for row in &mut rows {
        if row.id.is_empty() || row.id == check.id {
            row.id = check.id.clone();
        } else {
            row.id = format!("{}/{}", check.id, row.id);
        }
    }
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    rows
}

fn error_row(id: &str, message: &str, seed: u64) -> CheckResult {
    CheckResult {
        id: id.to_string(),
        lhs: Estimate::exact(f64::NAN, "error"),
        rhs: Estimate::exact(f64::NAN, "error"),
        kappa: None,
        margin: f64::NAN,
        status: CheckStatus::Inconclusive,
        witness: format!("error: {message}"),
        seed,
    }
}

fn dispatch(
    check: &CheckSpec,
    sc: &ResolvedScenario,
    budget: &EstimationBudget,
) -> Result<Vec<CheckResult>, String> {
    let measure = |id: &Option<String>| sc.measures[id.as_deref().unwrap()].clone();
    let body = |id: &Option<String>| sc.bodies[id.as_deref().unwrap()].clone();
    let function = |id: &Option<String>| sc.functions[id.as_deref().unwrap()].clone();
    let run = |r: dilatio::Result<CheckResult>| -> Result<Vec<CheckResult>, String> {
        r.map(|row| vec![row]).map_err(|e| e.to_string())
    };
    match check.op.as_str() {
        "dilation" => run(check_dilation(
            &measure(&check.measure),
            &body(&check.body),
            check.kappa,
            budget,
        )),
        "entropy" => {
            let variant = match check.variant.as_deref().unwrap_or("master") {
                "convex" => EntropyVariant::Convex,
                "lipschitz" => EntropyVariant::Lipschitz,
                "c1" => EntropyVariant::C1,
                "master" => EntropyVariant::Master,
                other => return Err(format!("unknown entropy variant {other:?}")),
            };
            run(check_entropy_bounds(
                &measure(&check.measure),
                &function(&check.function),
                check.kappa,
                variant,
                budget,
            ))
        }
        "lsi" => {
            let variant = match check.variant.as_deref().unwrap_or("cauchy-schwarz") {
                "cauchy-schwarz" => LsiVariant::CauchySchwarz,
                "defective" => LsiVariant::Defective,
                "one-dim" => LsiVariant::OneDim {
                    poincare_constant: check.poincare_constant,
                },
                other => return Err(format!("unknown lsi variant {other:?}")),
            };
            run(check_lsi(
                &measure(&check.measure),
                &function(&check.function),
                check.kappa,
                variant,
                budget,
            ))
        }
        "gaussian-suite" => {
            check_gaussian_suite(&function(&check.function), check.dim.unwrap_or(1), budget)
                .map_err(|e| e.to_string())
        }
        "moment-suite" => {
            let pairs: Vec<(f64, f64)> = match &check.pairs {
                Some(raw) => raw
                    .iter()
                    .map(|pair| {
                        if pair.len() == 2 {
                            Ok((pair[0], pair[1]))
                        } else {
                            Err("each moment pair must have exactly two entries".to_string())
                        }
                    })
                    .collect::<Result<_, _>>()?,
                None => vec![(1.0, 2.0), (1.0, 4.0), (2.0, 4.0)],
            };
            check_moment_suite(
                &measure(&check.measure),
                &function(&check.function),
                check.kappa,
                &pairs,
                budget,
            )
            .map_err(|e| e.to_string())
        }
        "moment-pair" => {
            let p = check.p.ok_or("moment-pair needs p")?;
            let q = check.q.ok_or("moment-pair needs q")?;
            let rows = check_moment_suite(
                &measure(&check.measure),
                &function(&check.function),
                check.kappa,
                &[(p, q)],
                budget,
            )
            .map_err(|e| e.to_string())?;
            let mut row = rows
                .into_iter()
                .find(|r| r.id.starts_with("moment-"))
                .ok_or("moment-pair produced no moment row")?;
            row.id = check.id.clone();
            Ok(vec![row])
        }
        "negative-suite" => {
            let grid = check
                .p_grid
                .clone()
                .unwrap_or_else(|| vec![0.1, 0.3, 0.5]);
            check_negative_suite(
                &measure(&check.measure),
                &function(&check.function),
                check.kappa,
                &grid,
                check.eps.unwrap_or(0.25),
                budget,
            )
            .map_err(|e| e.to_string())
        }
        "isoperimetry" => check_isoperimetry(
            &measure(&check.measure),
            &body(&check.body),
            check.kappa,
            check.p.unwrap_or(2.0),
            budget,
        )
        .map_err(|e| e.to_string()),
        "coarea" => {
            let sign = match check.sign.as_deref().unwrap_or("positive") {
                "positive" => CoareaSign::Positive,
                "negative" => CoareaSign::Negative,
                other => return Err(format!("unknown coarea sign {other:?}")),
            };
            run(check_coarea(
                &measure(&check.measure),
                &function(&check.function),
                check.p.unwrap_or(1.0),
                sign,
                budget,
            ))
        }
        "reconstruction" => {
            let (row, _) = reconstruct_dilation(
                &measure(&check.measure),
                &body(&check.body),
                check.kappa,
                None,
                budget,
            )
            .map_err(|e| e.to_string())?;
            Ok(vec![row])
        }
        "stability-perturbation" => {
            let f = function(&check.factor);
            let h: ScalarField = Arc::new(move |x: &[f64]| f.eval(x));
            run(check_stability(
                StabilityMode::Perturbation {
                    base: sc.measures[check.base.as_deref().unwrap()].clone(),
                    h,
                    bound: check.bound.unwrap(),
                    body: body(&check.body),
                },
                budget,
            ))
        }
        "stability-tensor-harmonic" => run(check_stability(
            StabilityMode::TensorHarmonic {
                first: sc.measures[check.first.as_deref().unwrap()].clone(),
                second: sc.measures[check.second.as_deref().unwrap()].clone(),
                body: body(&check.body),
            },
            budget,
        )),
        "stability-tensor-min" => run(check_stability(
            StabilityMode::TensorMin {
                first: sc.measures[check.first.as_deref().unwrap()].clone(),
                second: sc.measures[check.second.as_deref().unwrap()].clone(),
                f: function(&check.function),
            },
            budget,
        )),
        "sharpness" => sharpness_probes(budget).map_err(|e| e.to_string()),
        "sharpness-ratio" => {
            let t = check.t.unwrap();
            sharpness_ratio_row(&check.id, t, budget).map(|r| vec![r])
        }
        other => Err(format!("unknown op {other:?}")),
    }
}

/// Ratio of the measured Gaussian dilation area of (-t, t) to its
/// entropy-form lower bound. Always at least one; approaches one as the
/// interval shrinks, so sweeping t charts the tightness of the bound.
fn sharpness_ratio_row(id: &str, t: f64, budget: &EstimationBudget) -> Result<CheckResult, String> {
    if !(t.is_finite() && t > 0.0) {
        return Err(format!("sharpness-ratio needs t > 0, got {t}"));
    }
    let gamma = dilatio::Measure::gaussian_std(1);
    let body = SymmetricConvexBody::interval(t).map_err(|e| e.to_string())?;
    let area = dilation_area(&gamma, &body, None, budget).map_err(|e| e.to_string())?;
    let mass = 2.0 * normal_cdf(t) - 1.0;
    let bound = -2.0 * (1.0 - mass) * (1.0 - mass).ln();
    let ratio = area.value / bound;
    let ratio_err = area.std_error / bound;
    let lhs = Estimate::exact(1.0, "lower-bound-normalized");
    let mut rhs = area.clone();
    rhs.value = ratio;
    rhs.std_error = ratio_err;
    let margin = ratio - 1.0;
    let status = if margin >= -1e-6 - 3.0 * ratio_err {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(CheckResult {
        id: id.to_string(),
        lhs,
        rhs,
        kappa: None,
        margin,
        status,
        witness: format!(
            "dilation area {:.6e} vs bound {:.6e} at half-width {t}: ratio {ratio:.6}",
            area.value, bound
        ),
        seed: budget.seed,
    })
}

pub fn run_all(
    checks: &[CheckSpec],
    scenario: &ResolvedScenario,
    budget: &EstimationBudget,
) -> Vec<CheckResult> {
    let mut rows: Vec<CheckResult> = checks
        .par_iter()
        .flat_map_iter(|check| run_check(check, scenario, budget))
        .collect();
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    rows
}

pub fn filter_checks(checks: &[CheckSpec], wanted: &str) -> Result<Vec<CheckSpec>, String> {
    let wanted: Vec<&str> = wanted
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let known: BTreeSet<&str> = checks.iter().map(|c| c.id.as_str()).collect();
    for id in &wanted {
        if !known.contains(id) {
            return Err(format!("--checks references unknown check id {id:?}"));
        }
    }
    Ok(checks
        .iter()
        .filter(|c| wanted.contains(&c.id.as_str()))
        .cloned()
        .collect())
}

/// Formats with 17 significant digits so reruns are byte-comparable and
/// round-trip through f64 exactly.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn status_str(status: &CheckStatus) -> &'static str {
    match status {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::Inconclusive => "inconclusive",
    }
}

pub fn write_reports(rows: &[CheckResult], out_dir: &std::path::Path) -> Result<(), String> {
    std::fs::create_dir_all(out_dir).map_err(|e| format!("creating {out_dir:?}: {e}"))?;
    let json = serde_json::to_string_pretty(rows).map_err(|e| e.to_string())?;
    std::fs::write(out_dir.join("report.json"), json + "\n")
        .map_err(|e| format!("writing report.json: {e}"))?;

    let mut writer = csv::Writer::from_path(out_dir.join("report.csv"))
        .map_err(|e| format!("writing report.csv: {e}"))?;
    writer
        .write_record(["id", "lhs", "rhs", "stderr", "status", "seed"])
        .map_err(|e| e.to_string())?;
    for row in rows {
        writer
            .write_record([
                row.id.clone(),
                fmt17(row.lhs.value),
                fmt17(row.rhs.value),
                fmt17(row.lhs.std_error + row.rhs.std_error),
                status_str(&row.status).to_string(),
                row.seed.to_string(),
            ])
            .map_err(|e| e.to_string())?;
    }
    writer.flush().map_err(|e| e.to_string())?;
    Ok(())
}

pub struct SweepPoint {
    pub param: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub stderr: f64,
}

/// Re-runs a single check with the named numeric field set to each value.
pub fn run_sweep(
    check: &CheckSpec,
    scenario: &ResolvedScenario,
    budget: &EstimationBudget,
    param: &str,
    values: &[f64],
) -> Result<Vec<SweepPoint>, String> {
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut varied = check.clone();
        set_param(&mut varied, param, value)?;
        let rows = run_check(&varied, scenario, budget);
        if rows.len() != 1 {
            return Err(format!(
                "sweep requires a check producing exactly one row; {:?} with {param}={value} produced {}",
                check.id,
                rows.len()
            ));
        }
        let row = &rows[0];
        if row.witness.starts_with("error: ") {
            return Err(format!(
                "sweep point {param}={value} failed: {}",
                &row.witness["error: ".len()..]
            ));
        }
        points.push(SweepPoint {
            param: value,
            lhs: row.lhs.value,
            rhs: row.rhs.value,
            margin: row.margin,
            stderr: row.lhs.std_error + row.rhs.std_error,
        });
    }
    Ok(points)
}

fn set_param(check: &mut CheckSpec, param: &str, value: f64) -> Result<(), String> {
    match param {
        "kappa" => check.kappa = Some(value),
        "p" => check.p = Some(value),
        "q" => check.q = Some(value),
        "eps" => check.eps = Some(value),
        "t" => check.t = Some(value),
        "bound" => check.bound = Some(value),
        other => {
            return Err(format!(
                "unknown sweep parameter {other:?} (known: kappa, p, q, eps, t, bound)"
            ))
        }
    }
    Ok(())
}

pub fn write_sweep(points: &[SweepPoint], out_path: &std::path::Path) -> Result<(), String> {
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| format!("creating {parent:?}: {e}"))?;
    }
    let mut writer =
        csv::Writer::from_path(out_path).map_err(|e| format!("writing {out_path:?}: {e}"))?;
    writer
        .write_record(["param", "lhs", "rhs", "margin", "stderr"])
        .map_err(|e| e.to_string())?;
    for p in points {
        writer
            .write_record([
                fmt17(p.param),
                fmt17(p.lhs),
                fmt17(p.rhs),
                fmt17(p.margin),
                fmt17(p.stderr),
            ])
            .map_err(|e| e.to_string())?;
    }
    writer.flush().map_err(|e| e.to_string())?;
    Ok(())
}
