//! Scenario configuration: a declarative TOML tree naming measures,
//! bodies, test functions and the checks to run over them. No embedded
//! expressions; every reference is an explicit id.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

use dilatio::{Measure, QcFunction, ScalarField, Smoothness, SymmetricConvexBody};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub budget: BudgetSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, rename = "measure")]
    pub measures: Vec<MeasureSpec>,
    #[serde(default, rename = "body")]
    pub bodies: Vec<BodySpec>,
    #[serde(default, rename = "function")]
    pub functions: Vec<FunctionSpec>,
    #[serde(default, rename = "check")]
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_method() -> String {
    "auto".into()
}
fn default_samples() -> u64 {
    100_000
}
fn default_quad_tol() -> f64 {
    1e-10
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec {
            method: default_method(),
            samples: default_samples(),
            quad_tol: default_quad_tol(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub id: String,
    pub kind: String,
    pub dim: Option<usize>,
    /// Body reference for uniform measures.
    pub body: Option<String>,
    /// Factor references for product measures.
    pub first: Option<String>,
    pub second: Option<String>,
    /// Base / density-factor / bound for perturbed measures.
    pub base: Option<String>,
    pub factor: Option<String>,
    pub bound: Option<f64>,
    /// Optional override for the tagged dilation constant.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub id: String,
    pub kind: String,
    pub dim: Option<usize>,
    pub radius: Option<f64>,
    pub half_width: Option<f64>,
    pub half_widths: Option<Vec<f64>>,
    pub semi_axes: Option<Vec<f64>>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub id: String,
    pub kind: String,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub s: Option<f64>,
    pub body: Option<String>,
    pub inner: Option<String>,
    pub level: Option<f64>,
    pub sigma: Option<f64>,
    pub value: Option<f64>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub id: String,
    pub op: String,
    pub measure: Option<String>,
    pub body: Option<String>,
    pub function: Option<String>,
    pub kappa: Option<f64>,
    pub variant: Option<String>,
    pub poincare_constant: Option<f64>,
    pub dim: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub pairs: Option<Vec<Vec<f64>>>,
    pub p_grid: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub sign: Option<String>,
    pub t: Option<f64>,
    /// Perturbation / tensor inputs.
    pub base: Option<String>,
    pub factor: Option<String>,
    pub bound: Option<f64>,
    pub first: Option<String>,
    pub second: Option<String>,
}

/// Fully resolved scenario: every id reference checked up front so that
/// malformed configs die before any numerics run.
pub struct ResolvedScenario {
    pub measures: BTreeMap<String, Measure>,
    pub bodies: BTreeMap<String, SymmetricConvexBody>,
    pub functions: BTreeMap<String, QcFunction>,
}

const KNOWN_OPS: &[&str] = &[
    "dilation",
    "entropy",
    "lsi",
    "gaussian-suite",
    "moment-suite",
    "moment-pair",
    "negative-suite",
    "isoperimetry",
    "coarea",
    "reconstruction",
    "stability-perturbation",
    "stability-tensor-harmonic",
    "stability-tensor-min",
    "sharpness",
    "sharpness-ratio",
];

pub fn resolve(config: &ScenarioConfig) -> Result<ResolvedScenario, String> {
    let mut bodies = BTreeMap::new();
    for spec in &config.bodies {
        if bodies.contains_key(&spec.id) {
            return Err(format!("duplicate body id {:?}", spec.id));
        }
        bodies.insert(spec.id.clone(), build_body(spec)?);
    }
    let mut functions: BTreeMap<String, QcFunction> = BTreeMap::new();
    for spec in &config.functions {
        if functions.contains_key(&spec.id) {
            return Err(format!("duplicate function id {:?}", spec.id));
        }
        let f = build_function(spec, &bodies, &functions)?;
        functions.insert(spec.id.clone(), f);
    }
    let mut measures: BTreeMap<String, Measure> = BTreeMap::new();
    for spec in &config.measures {
        if measures.contains_key(&spec.id) {
            return Err(format!("duplicate measure id {:?}", spec.id));
        }
        let m = build_measure(spec, &bodies, &functions, &measures)?;
        measures.insert(spec.id.clone(), m);
    }
    for check in &config.checks {
        validate_check(check, &measures, &bodies, &functions)?;
    }
    Ok(ResolvedScenario {
        measures,
        bodies,
        functions,
    })
}

fn build_body(spec: &BodySpec) -> Result<SymmetricConvexBody, String> {
    let err = |e: dilatio::DilatioError| format!("body {:?}: {e}", spec.id);
    match spec.kind.as_str() {
        "interval" => {
            let t = spec
                .half_width
                .ok_or_else(|| format!("body {:?}: interval needs half_width", spec.id))?;
            SymmetricConvexBody::interval(t).map_err(err)
        }
        "ball" => {
            let dim = spec
                .dim
                .ok_or_else(|| format!("body {:?}: ball needs dim", spec.id))?;
            let r = spec
                .radius
                .ok_or_else(|| format!("body {:?}: ball needs radius", spec.id))?;
            SymmetricConvexBody::ball(dim, r).map_err(err)
        }
        "box" => {
            let hw = spec
                .half_widths
                .clone()
                .ok_or_else(|| format!("body {:?}: box needs half_widths", spec.id))?;
            SymmetricConvexBody::centered_box(hw).map_err(err)
        }
        "ellipsoid" => {
            let axes = spec
                .semi_axes
                .clone()
                .ok_or_else(|| format!("body {:?}: ellipsoid needs semi_axes", spec.id))?;
            SymmetricConvexBody::ellipsoid(axes).map_err(err)
        }
        "lp-ball" => {
            let dim = spec
                .dim
                .ok_or_else(|| format!("body {:?}: lp-ball needs dim", spec.id))?;
            let p = spec
                .p
                .ok_or_else(|| format!("body {:?}: lp-ball needs p", spec.id))?;
            let r = spec
                .radius
                .ok_or_else(|| format!("body {:?}: lp-ball needs radius", spec.id))?;
            SymmetricConvexBody::lp_ball(dim, p, r).map_err(err)
        }
        other => Err(format!("body {:?}: unknown kind {other:?}", spec.id)),
    }
}

fn build_function(
    spec: &FunctionSpec,
    bodies: &BTreeMap<String, SymmetricConvexBody>,
    functions: &BTreeMap<String, QcFunction>,
) -> Result<QcFunction, String> {
    let err = |e: dilatio::DilatioError| format!("function {:?}: {e}", spec.id);
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| format!("function {:?}: {} needs {name}", spec.id, spec.kind))
    };
    match spec.kind.as_str() {
        "radial" => QcFunction::radial(need("p", spec.p)?).map_err(err),
        "shifted-radial" => {
            QcFunction::shifted_radial(need("c", spec.c)?, need("s", spec.s)?).map_err(err)
        }
        "gauge-power" => {
            let body_id = spec
                .body
                .as_ref()
                .ok_or_else(|| format!("function {:?}: gauge-power needs body", spec.id))?;
            let body = bodies
                .get(body_id)
                .ok_or_else(|| format!("function {:?}: unknown body {body_id:?}", spec.id))?;
            QcFunction::gauge_power(body.clone(), need("p", spec.p)?).map_err(err)
        }
        "min-cap" | "max-floor" => {
            let inner_id = spec
                .inner
                .as_ref()
                .ok_or_else(|| format!("function {:?}: {} needs inner", spec.id, spec.kind))?;
            let inner = functions
                .get(inner_id)
                .ok_or_else(|| format!("function {:?}: unknown inner {inner_id:?}", spec.id))?;
            let level = need("level", spec.level)?;
            Ok(if spec.kind == "min-cap" {
                QcFunction::min_cap(inner.clone(), level)
            } else {
                QcFunction::max_floor(inner.clone(), level)
            })
        }
        "f-sigma" => {
            let body_id = spec
                .body
                .as_ref()
                .ok_or_else(|| format!("function {:?}: f-sigma needs body", spec.id))?;
            let body = bodies
                .get(body_id)
                .ok_or_else(|| format!("function {:?}: unknown body {body_id:?}", spec.id))?;
            QcFunction::f_sigma(body.clone(), need("sigma", spec.sigma)?).map_err(err)
        }
        "constant" => Ok(QcFunction::constant(need("value", spec.value)?)),
        "linear" => {
            let a = need("slope", spec.slope)?;
            Ok(QcFunction::custom(
                Arc::new(move |x: &[f64]| a * x[0]),
                Some(Arc::new(move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[0] = a;
                    g
                })),
                Smoothness::C1,
            ))
        }
        other => Err(format!("function {:?}: unknown kind {other:?}", spec.id)),
    }
}

fn build_measure(
    spec: &MeasureSpec,
    bodies: &BTreeMap<String, SymmetricConvexBody>,
    functions: &BTreeMap<String, QcFunction>,
    measures: &BTreeMap<String, Measure>,
) -> Result<Measure, String> {
    let mut m = match spec.kind.as_str() {
        "gaussian" => {
            let dim = spec
                .dim
                .ok_or_else(|| format!("measure {:?}: gaussian needs dim", spec.id))?;
            Measure::gaussian_std(dim)
        }
        "exp-one-sided" => Measure::exp_one_sided(),
        "exp-symmetric" => Measure::exp_symmetric(),
        "uniform" => {
            let body_id = spec
                .body
                .as_ref()
                .ok_or_else(|| format!("measure {:?}: uniform needs body", spec.id))?;
            let body = bodies
                .get(body_id)
                .ok_or_else(|| format!("measure {:?}: unknown body {body_id:?}", spec.id))?;
            Measure::uniform_on_body(body.clone())
                .map_err(|e| format!("measure {:?}: {e}", spec.id))?
        }
        "product" => {
            let first = spec
                .first
                .as_ref()
                .and_then(|id| measures.get(id))
                .ok_or_else(|| format!("measure {:?}: product needs a known first", spec.id))?;
            let second = spec
                .second
                .as_ref()
                .and_then(|id| measures.get(id))
                .ok_or_else(|| format!("measure {:?}: product needs a known second", spec.id))?;
            Measure::product(first.clone(), second.clone())
        }
        "perturbed" => {
            let base = spec
                .base
                .as_ref()
                .and_then(|id| measures.get(id))
                .ok_or_else(|| format!("measure {:?}: perturbed needs a known base", spec.id))?;
            let factor_id = spec
                .factor
                .as_ref()
                .ok_or_else(|| format!("measure {:?}: perturbed needs factor", spec.id))?;
            let f = functions
                .get(factor_id)
                .ok_or_else(|| format!("measure {:?}: unknown factor {factor_id:?}", spec.id))?
                .clone();
            let bound = spec
                .bound
                .ok_or_else(|| format!("measure {:?}: perturbed needs bound", spec.id))?;
            let h: ScalarField = Arc::new(move |x: &[f64]| f.eval(x));
            Measure::perturbed(base.clone(), h, bound)
                .map_err(|e| format!("measure {:?}: {e}", spec.id))?
        }
        other => return Err(format!("measure {:?}: unknown kind {other:?}", spec.id)),
    };
    if let Some(k) = spec.kappa {
        m = m.with_kappa(k, "config-supplied");
    }
    Ok(m)
}

fn validate_check(
    check: &CheckSpec,
    measures: &BTreeMap<String, Measure>,
    bodies: &BTreeMap<String, SymmetricConvexBody>,
    functions: &BTreeMap<String, QcFunction>,
) -> Result<(), String> {
    if !KNOWN_OPS.contains(&check.op.as_str()) {
        return Err(format!(
            "check {:?}: unknown op {:?} (known: {})",
            check.id,
            check.op,
            KNOWN_OPS.join(", ")
        ));
    }
    let want_measure = |id: &Option<String>| -> Result<(), String> {
        match id {
            Some(m) if measures.contains_key(m) => Ok(()),
            Some(m) => Err(format!("check {:?}: unknown measure {m:?}", check.id)),
            None => Err(format!("check {:?}: op {} needs measure", check.id, check.op)),
        }
    };
    let want_body = |id: &Option<String>| -> Result<(), String> {
        match id {
            Some(b) if bodies.contains_key(b) => Ok(()),
            Some(b) => Err(format!("check {:?}: unknown body {b:?}", check.id)),
            None => Err(format!("check {:?}: op {} needs body", check.id, check.op)),
        }
    };
    let want_function = |id: &Option<String>| -> Result<(), String> {
        match id {
            Some(f) if functions.contains_key(f) => Ok(()),
            Some(f) => Err(format!("check {:?}: unknown function {f:?}", check.id)),
            None => Err(format!(
                "check {:?}: op {} needs function",
                check.id, check.op
            )),
        }
    };
    match check.op.as_str() {
        "dilation" => {
            want_measure(&check.measure)?;
            want_body(&check.body)?;
        }
        "entropy" | "lsi" | "coarea" | "moment-suite" | "moment-pair" | "negative-suite" => {
            want_measure(&check.measure)?;
            want_function(&check.function)?;
        }
        "gaussian-suite" => {
            want_function(&check.function)?;
        }
        "isoperimetry" | "reconstruction" => {
            want_measure(&check.measure)?;
            want_body(&check.body)?;
        }
        "stability-perturbation" => {
            match &check.base {
                Some(b) if measures.contains_key(b) => {}
                _ => return Err(format!("check {:?}: needs a known base measure", check.id)),
            }
            want_function(&check.factor)?;
            want_body(&check.body)?;
            if check.bound.is_none() {
                return Err(format!("check {:?}: needs bound", check.id));
            }
        }
        "stability-tensor-harmonic" => {
            for id in [&check.first, &check.second] {
                match id {
                    Some(m) if measures.contains_key(m) => {}
                    _ => {
                        return Err(format!(
                            "check {:?}: needs known first/second measures",
                            check.id
                        ))
                    }
                }
            }
            want_body(&check.body)?;
        }
        "stability-tensor-min" => {
            for id in [&check.first, &check.second] {
                match id {
                    Some(m) if measures.contains_key(m) => {}
                    _ => {
                        return Err(format!(
                            "check {:?}: needs known first/second measures",
                            check.id
                        ))
                    }
                }
            }
            want_function(&check.function)?;
        }
        "sharpness" => {}
        "sharpness-ratio" => {
            if check.t.is_none() {
                return Err(format!("check {:?}: sharpness-ratio needs t", check.id));
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}
