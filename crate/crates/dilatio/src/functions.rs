//! Symmetric quasi-convex test functions, their shrink-derivative
//! functional Phi, and audit machinery for the quasi-convex class.
//!
//! For a symmetric quasi-convex f, Phi_f(x) is the limsup as eps -> 0 of
//! [f(x) - f((1-eps)/(1+eps) x)] / eps. For C1 functions this equals
//! 2 <x, grad f(x)>; for gauge functions it is exactly 2 ||x||_K.

use crate::budget::Estimate;
use crate::error::{DilatioError, Result};
use crate::geometry::{dot, norm2, SymmetricConvexBody};
use crate::measures::{Measure, ScalarField};
use crate::quad::extrapolate_to_zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::sync::Arc;

pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    C1,
    LocallyLipschitz,
    Continuous,
}

#[derive(Clone)]
pub enum QcKind {
    /// ||x||_K^p.
    GaugePower { body: SymmetricConvexBody, p: f64 },
    /// |x|^p (Euclidean norm).
    Radial { p: f64 },
    /// (|x|^2 + c)^s with c > 0.
    ShiftedRadial { c: f64, s: f64 },
    /// min(f, level) — constant above the level.
    MinCap { inner: Box<QcFunction>, level: f64 },
    /// max(f, level) — constant below the level.
    MaxFloor { inner: Box<QcFunction>, level: f64 },
    /// Reconstruction family: 0 on K, (gauge-1)/delta on the shell
    /// K_sigma \ K, constant 1-sigma outside, delta = 2 sigma/(1-sigma)^2.
    FSigma {
        body: SymmetricConvexBody,
        sigma: f64,
        delta: f64,
    },
    Custom {
        eval: ScalarField,
        grad: Option<VectorField>,
        smoothness: Smoothness,
    },
}

#[derive(Clone)]
pub struct QcFunction {
    pub kind: QcKind,
}

impl fmt::Debug for QcFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QcFunction({})", self.describe())
    }
}

/// The default ladder of shrink parameters used to approximate the limsup.
pub fn default_ladder() -> Vec<f64> {
    (4..=20).map(|k| 0.5f64.powi(k)).collect()
}

/// Result of evaluating a function together with its gradient.
#[derive(Debug, Clone)]
pub struct EvalGrad {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    /// True when the gradient came from central finite differences.
    pub numeric_gradient: bool,
}

impl QcFunction {
    pub fn gauge_power(body: SymmetricConvexBody, p: f64) -> Result<Self> {
        if p <= 0.0 {
            return Err(DilatioError::Domain(format!(
                "gauge power must be positive, got {p}"
            )));
        }
        Ok(QcFunction {
            kind: QcKind::GaugePower { body, p },
        })
    }

    pub fn radial(p: f64) -> Result<Self> {
        if p <= 0.0 {
            return Err(DilatioError::Domain(format!(
                "radial power must be positive, got {p}"
            )));
        }
        Ok(QcFunction {
            kind: QcKind::Radial { p },
        })
    }

    pub fn shifted_radial(c: f64, s: f64) -> Result<Self> {
        if c <= 0.0 {
            return Err(DilatioError::Domain(format!(
                "shift must be positive, got {c}"
            )));
        }
        Ok(QcFunction {
            kind: QcKind::ShiftedRadial { c, s },
        })
    }

    pub fn min_cap(inner: QcFunction, level: f64) -> Self {
        QcFunction {
            kind: QcKind::MinCap {
                inner: Box::new(inner),
                level,
            },
        }
    }

    pub fn max_floor(inner: QcFunction, level: f64) -> Self {
        QcFunction {
            kind: QcKind::MaxFloor {
                inner: Box::new(inner),
                level,
            },
        }
    }

    pub fn f_sigma(body: SymmetricConvexBody, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(DilatioError::Domain(format!(
                "sigma must lie in (0,1), got {sigma}"
            )));
        }
        let delta = 2.0 * sigma / ((1.0 - sigma) * (1.0 - sigma));
        Ok(QcFunction {
            kind: QcKind::FSigma { body, sigma, delta },
        })
    }

    pub fn custom(eval: ScalarField, grad: Option<VectorField>, smoothness: Smoothness) -> Self {
        QcFunction {
            kind: QcKind::Custom {
                eval,
                grad,
                smoothness,
            },
        }
    }

    pub fn constant(c: f64) -> Self {
        QcFunction::custom(
            Arc::new(move |_: &[f64]| c),
            Some(Arc::new(|x: &[f64]| vec![0.0; x.len()])),
            Smoothness::C1,
        )
    }

    /// Truncation max(min(f, upper), lower) used to reduce general
    /// statements to bounded functions.
    pub fn truncate(inner: QcFunction, lower: f64, upper: f64) -> Self {
        QcFunction::max_floor(QcFunction::min_cap(inner, upper), lower)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            QcKind::GaugePower { p, .. } => format!("gauge-power(p={p})"),
            QcKind::Radial { p } => format!("radial(p={p})"),
            QcKind::ShiftedRadial { c, s } => format!("shifted-radial(c={c}, s={s})"),
            QcKind::MinCap { inner, level } => format!("min-cap({}, {level})", inner.describe()),
            QcKind::MaxFloor { inner, level } => {
                format!("max-floor({}, {level})", inner.describe())
            }
            QcKind::FSigma { sigma, .. } => format!("f-sigma(sigma={sigma})"),
            QcKind::Custom { .. } => "custom".into(),
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match &self.kind {
            QcKind::Radial { p } => {
                if *p > 1.0 {
                    Smoothness::C1
                } else {
                    Smoothness::LocallyLipschitz
                }
            }
            QcKind::ShiftedRadial { .. } => Smoothness::C1,
            QcKind::GaugePower { .. }
            | QcKind::MinCap { .. }
            | QcKind::MaxFloor { .. }
            | QcKind::FSigma { .. } => Smoothness::LocallyLipschitz,
            QcKind::Custom { smoothness, .. } => *smoothness,
        }
    }

    /// Dimension imposed by an embedded body, if any.
    pub fn dim_hint(&self) -> Option<usize> {
        match &self.kind {
            QcKind::GaugePower { body, .. } | QcKind::FSigma { body, .. } => Some(body.dim()),
            QcKind::MinCap { inner, .. } | QcKind::MaxFloor { inner, .. } => inner.dim_hint(),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            QcKind::GaugePower { body, p } => body.gauge(x).powf(*p),
            QcKind::Radial { p } => norm2(x).powf(*p),
            QcKind::ShiftedRadial { c, s } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (r2 + c).powf(*s)
            }
            QcKind::MinCap { inner, level } => inner.eval(x).min(*level),
            QcKind::MaxFloor { inner, level } => inner.eval(x).max(*level),
            QcKind::FSigma { body, sigma, delta } => {
                let g = body.gauge(x);
                if g <= 1.0 {
                    0.0
                } else {
                    ((g - 1.0) / delta).min(1.0 - sigma)
                }
            }
            QcKind::Custom { eval, .. } => eval(x),
        }
    }

    fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            QcKind::Radial { p } => {
                let r = norm2(x);
                if r == 0.0 {
                    if *p > 1.0 {
                        Some(vec![0.0; x.len()])
                    } else {
                        None
                    }
                } else {
                    let c = p * r.powf(p - 2.0);
                    Some(x.iter().map(|v| c * v).collect())
                }
            }
            QcKind::ShiftedRadial { c, s } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let f = 2.0 * s * (r2 + c).powf(s - 1.0);
                Some(x.iter().map(|v| f * v).collect())
            }
            QcKind::MinCap { inner, level } => {
                if inner.eval(x) < *level {
                    inner.analytic_gradient(x)
                } else {
                    Some(vec![0.0; x.len()])
                }
            }
            QcKind::MaxFloor { inner, level } => {
                if inner.eval(x) > *level {
                    inner.analytic_gradient(x)
                } else {
                    Some(vec![0.0; x.len()])
                }
            }
            QcKind::Custom { grad, .. } => grad.as_ref().map(|g| g(x)),
            _ => None,
        }
    }

    fn finite_difference_gradient(&self, x: &[f64]) -> Vec<f64> {
        let h = 1e-6_f64.max(1e-6 * norm2(x));
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = self.eval(&xp);
            xp[i] = orig - h;
            let fm = self.eval(&xp);
            xp[i] = orig;
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }

    /// Value and gradient; analytic where available, central finite
    /// differences otherwise (flagged).
    pub fn eval_and_grad(&self, x: &[f64]) -> Result<EvalGrad> {
        let value = self.eval(x);
        if let Some(g) = self.analytic_gradient(x) {
            return Ok(EvalGrad {
                value,
                gradient: Some(g),
                numeric_gradient: false,
            });
        }
        let g = self.finite_difference_gradient(x);
        if self.smoothness() == Smoothness::C1 {
            // A C1 claim without an analytic gradient: detect kinks by
            // comparing two finite-difference steps.
            let h = 1e-6_f64.max(1e-6 * norm2(x));
            let g2 = {
                let mut out = vec![0.0; x.len()];
                let mut xp = x.to_vec();
                for i in 0..x.len() {
                    let orig = xp[i];
                    xp[i] = orig + 0.5 * h;
                    let fp = self.eval(&xp);
                    xp[i] = orig - 0.5 * h;
                    let fm = self.eval(&xp);
                    xp[i] = orig;
                    out[i] = (fp - fm) / h;
                }
                out
            };
            let scale = 1.0 + norm2(&g).max(norm2(&g2));
            let diff: f64 = g
                .iter()
                .zip(&g2)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if diff > 1e-3 * scale {
                return Err(DilatioError::Consistency(format!(
                    "function claims C1 but finite differences disagree at {x:?} (gap {diff:.3e})"
                )));
            }
        }
        Ok(EvalGrad {
            value,
            gradient: Some(g),
            numeric_gradient: true,
        })
    }

    /// Analytic value of Phi where a closed form exists.
    fn phi_analytic(&self, x: &[f64]) -> Option<f64> {
        match &self.kind {
            // Phi of a p-th gauge power is 2 p gauge^p by 1-homogeneity
            // and the power rule.
            QcKind::GaugePower { body, p } => Some(2.0 * p * body.gauge(x).powf(*p)),
            QcKind::Radial { p } => Some(2.0 * p * norm2(x).powf(*p)),
            QcKind::ShiftedRadial { c, s } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Some(4.0 * s * r2 * (r2 + c).powf(s - 1.0))
            }
            QcKind::MinCap { inner, level } => {
                if inner.eval(x) > *level {
                    Some(0.0)
                } else {
                    inner.phi_analytic(x)
                }
            }
            QcKind::MaxFloor { inner, level } => {
                if inner.eval(x) < *level {
                    Some(0.0)
                } else {
                    inner.phi_analytic(x)
                }
            }
            QcKind::FSigma { body, sigma, delta } => {
                let g = body.gauge(x);
                let outer = (1.0 + sigma) / (1.0 - sigma);
                if g > 1.0 && g <= outer {
                    Some(2.0 / delta * g)
                } else {
                    Some(0.0)
                }
            }
            QcKind::Custom { grad, smoothness, .. } => match (grad, smoothness) {
                (Some(g), Smoothness::C1) => Some(2.0 * dot(x, &g(x))),
                _ => None,
            },
        }
    }

    /// Difference quotient [f(x) - f((1-eps)/(1+eps) x)] / eps.
    pub fn shrink_quotient(&self, x: &[f64], eps: f64) -> f64 {
        let s = (1.0 - eps) / (1.0 + eps);
        let xs: Vec<f64> = x.iter().map(|v| s * v).collect();
        (self.eval(x) - self.eval(&xs)) / eps
    }

    /// Phi_f(x): analytic closed form where available, otherwise the
    /// ladder approximation of the limsup.
    pub fn phi(&self, x: &[f64], ladder: Option<&[f64]>) -> Result<Estimate> {
        if let Some(v) = self.phi_analytic(x) {
            return Ok(Estimate::exact(v, "analytic"));
        }
        self.phi_ladder(x, ladder)
    }

    /// Ladder approximation of Phi_f(x): maximum of the difference
    /// quotients over the tail, refined by extrapolation when the
    /// sequence has converged.
    pub fn phi_ladder(&self, x: &[f64], ladder: Option<&[f64]>) -> Result<Estimate> {
        let default = default_ladder();
        let ladder = ladder.unwrap_or(&default);
        if ladder.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(DilatioError::Domain(
                "ladder values must lie in (0,1)".into(),
            ));
        }
        let mut eps: Vec<f64> = ladder.to_vec();
        eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let quotients: Vec<(f64, f64)> = eps
            .iter()
            .map(|&e| (e, self.shrink_quotient(x, e)))
            .collect();
        let fx = self.eval(x);
        let tol = 1e-9 * (1.0 + fx.abs());
        for &(_, q) in &quotients {
            if q < -tol {
                return Err(DilatioError::QuasiConvexityViolation {
                    x: x.to_vec(),
                    quotient: q,
                });
            }
        }
        let tail_len = 8.min(quotients.len());
        let tail = &quotients[quotients.len() - tail_len..];
        let tail_max = tail.iter().map(|&(_, q)| q).fold(f64::NEG_INFINITY, f64::max);
        // Refine the tail maximum by extrapolating the quotient sequence
        // to eps = 0; fall back to the raw maximum when the sequence is
        // not settling (the limsup may then exceed individual quotients).
        let (limit, resid) = extrapolate_to_zero(tail);
        if limit.is_finite() && (limit - tail_max).abs() <= 1e-3 * (1.0 + tail_max.abs()) {
            Ok(Estimate::quadrature(limit.max(0.0), resid).with_tag("ladder-extrapolated"))
        } else {
            let spread = tail
                .iter()
                .map(|&(_, q)| (q - tail_max).abs())
                .fold(0.0, f64::max);
            Ok(Estimate::quadrature(tail_max.max(0.0), spread).with_tag("ladder-max"))
        }
    }
}

/// A failed check found during an audit, with enough data to replay it.
#[derive(Debug, Clone)]
pub struct AuditWitness {
    pub check: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub pass: bool,
    pub trials: usize,
    pub seed: u64,
    pub witnesses: Vec<AuditWitness>,
}

/// Randomized audit of symmetry and quasi-convexity on a domain.
///
/// Runs the segment test f((1-t)x + t y) <= max(f(x), f(y)), the symmetry
/// test f(x) = f(-x), the gradient criterion <x - y, grad f(x)> >= 0
/// whenever f(x) >= f(y) for C1 kinds, and in one dimension the
/// monotone-split characterization around the minimizer.
pub fn quasiconvexity_audit(
    f: &QcFunction,
    dim: usize,
    domain: Option<&SymmetricConvexBody>,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(DilatioError::Domain("audit needs at least one trial".into()));
    }
    if let Some(d) = f.dim_hint() {
        if d != dim {
            return Err(DilatioError::Domain(format!(
                "function is {d}-dimensional, audit asked for {dim}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut witnesses = Vec::new();
    let tol = 1e-9;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        match domain {
            Some(body) => {
                let (_, big_r) = body.radii().unwrap_or((1.0, 3.0));
                loop {
                    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-big_r..big_r)).collect();
                    if body.contains(&x) {
                        return x;
                    }
                }
            }
            None => (0..dim)
                .map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        }
    };
    for _ in 0..trials {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let fx = f.eval(&x);
        let fy = f.eval(&y);

        let neg_x: Vec<f64> = x.iter().map(|v| -v).collect();
        let f_neg = f.eval(&neg_x);
        if (fx - f_neg).abs() > tol * (1.0 + fx.abs()) {
            witnesses.push(AuditWitness {
                check: "symmetry".into(),
                x: x.clone(),
                y: neg_x,
                detail: format!("f(x) = {fx}, f(-x) = {f_neg}"),
            });
        }

        let t: f64 = rng.gen_range(0.0..1.0);
        let z: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        let fz = f.eval(&z);
        let cap = fx.max(fy);
        if fz > cap + tol * (1.0 + cap.abs()) {
            witnesses.push(AuditWitness {
                check: "segment".into(),
                x: x.clone(),
                y: y.clone(),
                detail: format!("t = {t}, f(midpoint) = {fz} > max = {cap}"),
            });
        }

        if f.smoothness() == Smoothness::C1 && fx >= fy {
            if let Ok(eg) = f.eval_and_grad(&x) {
                if let Some(g) = eg.gradient {
                    let d: f64 = x.iter().zip(&y).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
                    if d < -1e-6 * (1.0 + norm2(&g)) {
                        witnesses.push(AuditWitness {
                            check: "gradient".into(),
                            x: x.clone(),
                            y: y.clone(),
                            detail: format!("<x - y, grad f(x)> = {d}"),
                        });
                    }
                }
            }
        }
    }
    // 1-d: quasi-convex means decreasing then increasing around some
    // split point; by symmetry the split is the origin.
    if dim == 1 {
        let mut prev_left = f64::NEG_INFINITY;
        let mut prev_right = f64::NEG_INFINITY;
        let steps = 64;
        let reach = match domain {
            Some(body) => body.radial(&[1.0]),
            None => 8.0,
        };
        for i in 1..=steps {
            let t = reach * i as f64 / steps as f64;
            let fr = f.eval(&[t]);
            let fl = f.eval(&[-t]);
            if fr < prev_right - tol || fl < prev_left - tol {
                witnesses.push(AuditWitness {
                    check: "monotone-split".into(),
                    x: vec![t],
                    y: vec![-t],
                    detail: "values decrease away from the origin".into(),
                });
                break;
            }
            prev_right = prev_right.max(fr);
            prev_left = prev_left.max(fl);
        }
    }
    Ok(AuditReport {
        pass: witnesses.is_empty(),
        trials,
        seed,
        witnesses,
    })
}

/// Evidence report for membership in the dilation-admissible class: the
/// difference quotients must be dominated by an integrable g.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub pass: bool,
    pub checked_points: usize,
    pub max_excess: f64,
    /// Worst observed ratio Phi_f(x) / (2 |x| |grad f(x)|) at smooth
    /// points, which the local-Lipschitz bound keeps at most 1.
    pub lipschitz_ratio: f64,
    pub seed: u64,
}

/// Samples points from the measure and verifies that the ladder of
/// difference quotients stays below the dominating function g.
pub fn qc_membership_check<G>(
    f: &QcFunction,
    m: &Measure,
    eps0: f64,
    g_bound: G,
    points: usize,
    seed: u64,
) -> Result<MembershipReport>
where
    G: Fn(&[f64]) -> f64,
{
    if !(eps0 > 0.0 && eps0 <= 1.0) {
        return Err(DilatioError::Domain(format!(
            "eps0 must lie in (0,1], got {eps0}"
        )));
    }
    let samples = m.sample(points, seed)?;
    let ladder: Vec<f64> = default_ladder().into_iter().filter(|&e| e <= eps0).collect();
    let mut max_excess: f64 = f64::NEG_INFINITY;
    let mut lipschitz_ratio: f64 = 0.0;
    let tol = 1e-7;
    let mut pass = true;
    for x in &samples {
        let sup_quotient = ladder
            .iter()
            .map(|&e| f.shrink_quotient(x, e))
            .fold(f64::NEG_INFINITY, f64::max);
        let bound = g_bound(x);
        let excess = sup_quotient - bound;
        max_excess = max_excess.max(excess);
        if excess > tol * (1.0 + bound.abs()) {
            pass = false;
        }
        if let Ok(eg) = f.eval_and_grad(x) {
            if let Some(g) = eg.gradient {
                let lip = 2.0 * norm2(x) * norm2(&g);
                if lip > 1e-12 {
                    if let Ok(phi) = f.phi(x, None) {
                        lipschitz_ratio = lipschitz_ratio.max(phi.value / lip);
                    }
                }
            }
        }
    }
    Ok(MembershipReport {
        pass,
        checked_points: samples.len(),
        max_excess,
        lipschitz_ratio,
        seed,
    })
}
