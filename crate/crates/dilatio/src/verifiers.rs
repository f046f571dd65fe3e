//! One check per inequality: each verifier evaluates both sides with
//! error bars and returns pass / fail / inconclusive, never a silent
//! pass when the error bars straddle the margin. Also hosts the
//! sharpness probes and the entropy-based reconstruction loop.

use crate::budget::{Estimate, EstimationBudget, Method};
use crate::error::{DilatioError, Result};
use crate::estimators::{
    coarea_integral, dilation_area, entropy, fisher_information, levy_mean, lp_norm,
    one_sided_interval_dilation_area, orlicz_norm, perimeter, surface_moment_integral,
    w2_distance_1d, CoareaSign,
};
use crate::functions::{QcFunction, QcKind, Smoothness};
use crate::geometry::SymmetricConvexBody;
use crate::measures::{normal_cdf, KappaClaim, Measure, MeasureKind, ScalarField};
use crate::quad::integrate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of a single inequality check. `margin = rhs - lhs`, so a
/// positive margin means the inequality holds with room to spare.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub kappa: Option<KappaClaim>,
    pub margin: f64,
    pub status: CheckStatus,
    pub witness: String,
    pub seed: u64,
}

/// Deterministic violations below this tolerance count as equality; a
/// fail additionally requires exceeding the 3-sigma band, so noise can
/// only degrade a verdict to inconclusive, never flip it to fail.
fn decide(
    id: &str,
    lhs: Estimate,
    rhs: Estimate,
    kappa: Option<KappaClaim>,
    witness: String,
    seed: u64,
) -> CheckResult {
    let band = 3.0 * (lhs.std_error + rhs.std_error);
    let tol = 1e-6f64.max(1e-3 * rhs.value.abs());
    let excess = lhs.value - rhs.value;
    let status = if !(excess.is_finite()) {
        CheckStatus::Inconclusive
    } else if excess <= tol {
        CheckStatus::Pass
    } else if excess <= band {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Fail
    };
    CheckResult {
        id: id.to_string(),
        margin: rhs.value - lhs.value,
        lhs,
        rhs,
        kappa,
        status,
        witness,
        seed,
    }
}

fn resolve_kappa(m: &Measure, user: Option<f64>) -> Result<KappaClaim> {
    if let Some(v) = user {
        if !(v > 0.0 && v.is_finite()) {
            return Err(DilatioError::Domain(format!(
                "dilation constant must be positive and finite, got {v}"
            )));
        }
        return Ok(KappaClaim::new(v, "user-supplied"));
    }
    m.kappa.clone().ok_or_else(|| {
        DilatioError::Domain("measure carries no dilation constant and none was supplied".into())
    })
}

fn scale_estimate(e: &Estimate, c: f64) -> Estimate {
    Estimate {
        value: c * e.value,
        std_error: c.abs() * e.std_error,
        method: e.method.clone(),
        seed: e.seed,
    }
}

/// int Phi_f dmu; errors out (inconclusive) if Phi reports a
/// quasi-convexity violation anywhere on the integration grid.
fn phi_integral(f: &QcFunction, m: &Measure, budget: &EstimationBudget) -> Result<Estimate> {
    let bad = AtomicBool::new(false);
    let est = m.expectation(
        |x| match f.phi(x, None) {
            Ok(e) => e.value,
            Err(_) => {
                bad.store(true, Ordering::Relaxed);
                0.0
            }
        },
        budget,
    )?;
    if bad.load(Ordering::Relaxed) {
        return Err(DilatioError::Inconclusive(
            "Phi evaluation failed at an integration point".into(),
        ));
    }
    Ok(est)
}

/// Integral of g(x, f(x), grad f(x)) under the measure.
fn gradient_integral<G>(
    f: &QcFunction,
    m: &Measure,
    budget: &EstimationBudget,
    g: G,
) -> Result<Estimate>
where
    G: Fn(&[f64], f64, &[f64]) -> f64 + Sync,
{
    let bad = AtomicBool::new(false);
    let est = m.expectation(
        |x| match f.eval_and_grad(x) {
            Ok(eg) => match eg.gradient {
                Some(gr) => g(x, eg.value, &gr),
                None => {
                    bad.store(true, Ordering::Relaxed);
                    0.0
                }
            },
            Err(_) => {
                bad.store(true, Ordering::Relaxed);
                0.0
            }
        },
        budget,
    )?;
    if bad.load(Ordering::Relaxed) {
        return Err(DilatioError::Inconclusive(
            "gradient unavailable at an integration point".into(),
        ));
    }
    Ok(est)
}

/// Sampled supremum of f^{-1} Phi_f over the measure plus a deterministic
/// ray grid. A lower bound to the true essential sup.
fn ess_sup_ratio(f: &QcFunction, m: &Measure, budget: &EstimationBudget) -> Result<f64> {
    let mut sup: f64 = 0.0;
    let mut consider = |x: &[f64]| -> Result<()> {
        let v = f.eval(x);
        if v <= 1e-12 {
            return Ok(());
        }
        let phi = f.phi(x, None)?.value;
        if phi / v > sup {
            sup = phi / v;
        }
        Ok(())
    };
    // Deterministic ray grid along the coordinate axes and the diagonal.
    let n = m.dim();
    let r_max = if n == 1 {
        let (_, hi) = m.support_1d()?;
        if hi.is_finite() {
            hi
        } else {
            40.0
        }
    } else {
        40.0
    };
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        directions.push(e);
    }
    if n > 1 {
        directions.push(vec![1.0 / (n as f64).sqrt(); n]);
    }
    for dir in &directions {
        for k in 1..=512 {
            let r = r_max * k as f64 / 512.0;
            let x: Vec<f64> = dir.iter().map(|d| d * r).collect();
            consider(&x)?;
        }
    }
    // Sampled points; skipped silently when the measure cannot sample.
    let count = if budget.samples > 0 {
        budget.samples.min(100_000) as usize
    } else {
        100_000
    };
    if let Ok(samples) = m.sample(count, budget.seed) {
        for x in &samples {
            consider(x)?;
        }
    }
    Ok(sup)
}

/// mu({f <= level}) through the ray-monotone sublevel radius (1-d
/// quadrature) or sample counting.
fn sublevel_mass(
    f: &QcFunction,
    m: &Measure,
    level: f64,
    budget: &EstimationBudget,
) -> Result<f64> {
    if m.dim() == 1 && budget.resolve(1) == Method::Quadrature {
        if f.eval(&[0.0]) > level {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while f.eval(&[hi]) <= level && hi < 1e12 {
            hi *= 2.0;
        }
        if hi >= 1e12 {
            return Ok(1.0);
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f.eval(&[mid]) <= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        return Ok((m.cdf_1d(r)? - m.cdf_1d(-r)?).clamp(0.0, 1.0));
    }
    let count = if budget.samples > 0 {
        budget.samples as usize
    } else {
        100_000
    };
    let samples = m.sample(count, budget.seed)?;
    Ok(samples.iter().filter(|x| f.eval(x) <= level).count() as f64 / count as f64)
}

/// Verifies -kappa (1 - mu(K)) log(1 - mu(K)) <= mu*(K).
pub fn check_dilation(
    m: &Measure,
    k: &SymmetricConvexBody,
    kappa: Option<f64>,
    budget: &EstimationBudget,
) -> Result<CheckResult> {
    let kap = resolve_kappa(m, kappa)?;
    let mass = m.mass_of_body(k, budget)?;
    let mu = mass.value;
    if !(mu > 1e-9 && mu < 1.0 - 1e-9) {
        return Ok(decide(
            "dilation",
            Estimate::exact(0.0, "trivial"),
            Estimate::exact(0.0, "trivial"),
            Some(kap),
            format!("mass {mu} is degenerate: the comparison is trivially an equality"),
            budget.seed,
        ));
    }
    let lhs = Estimate {
        value: -kap.value * (1.0 - mu) * (1.0 - mu).ln(),
        std_error: kap.value * ((1.0 - mu).ln().abs() + 1.0) * mass.std_error,
        method: mass.method.clone(),
        seed: budget.seed,
    };
    let rhs = dilation_area(m, k, None, budget)?;
    Ok(decide(
        "dilation",
        lhs,
        rhs,
        Some(kap),
        format!("measure {}, mass {mu:.6}", m.describe()),
        budget.seed,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyVariant {
    /// Convex f with an explicit subdifferential (gauge/radial kinds).
    Convex,
    /// Locally Lipschitz f: bound through |x| |grad f|.
    Lipschitz,
    /// C1 f: bound through <x, grad f>.
    C1,
    /// Any quasi-convex f: bound through the Phi functional.
    Master,
}

fn convex_with_subdifferential(f: &QcFunction) -> bool {
    match &f.kind {
        QcKind::GaugePower { p, .. } => *p >= 1.0,
        QcKind::Radial { p } => *p >= 1.0,
        QcKind::ShiftedRadial { s, .. } => *s >= 0.5,
        QcKind::MaxFloor { inner, .. } => convex_with_subdifferential(inner),
        _ => false,
    }
}

/// Verifies Ent(f) against the variant's integral bound.
pub fn check_entropy_bounds(
    m: &Measure,
    f: &QcFunction,
    kappa: Option<f64>,
    variant: EntropyVariant,
    budget: &EstimationBudget,
) -> Result<CheckResult> {
    let kap = resolve_kappa(m, kappa)?;
    let lhs = entropy(f, m, budget)?;
    let (id, rhs) = match variant {
        EntropyVariant::Convex => {
            if !convex_with_subdifferential(f) {
                return Err(DilatioError::Domain(format!(
                    "the convex variant needs a convex kind with an explicit subdifferential; \
                     got {}",
                    f.describe()
                )));
            }
            // At differentiability points the minimal subgradient pairing
            // <x, grad f> equals Phi_f / 2 for these kinds.
            let phi = phi_integral(f, m, budget)?;
            ("entropy-convex", scale_estimate(&phi, 1.0 / kap.value))
        }
        EntropyVariant::Lipschitz => {
            let est = gradient_integral(f, m, budget, |x, _v, g| {
                let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                xn * gn
            })?;
            ("entropy-lipschitz", scale_estimate(&est, 2.0 / kap.value))
        }
        EntropyVariant::C1 => {
            if f.smoothness() != Smoothness::C1 {
                return Err(DilatioError::Domain(format!(
                    "the C1 variant needs a continuously differentiable kind; got {}",
                    f.describe()
                )));
            }
            let est = gradient_integral(f, m, budget, |x, _v, g| {
                x.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
            })?;
            ("entropy-c1", scale_estimate(&est, 2.0 / kap.value))
        }
        EntropyVariant::Master => {
            let phi = phi_integral(f, m, budget)?;
            ("entropy-master", scale_estimate(&phi, 1.0 / kap.value))
        }
    };
    Ok(decide(
        id,
        lhs,
        rhs,
        Some(kap),
        format!("f = {}, measure {}", f.describe(), m.describe()),
        budget.seed,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LsiVariant {
    /// Ent(f) <= (2/kappa) (int |x|^2 f)^{1/2} sqrt(I(f)).
    CauchySchwarz,
    /// Ent(f) <= (1/kappa) I(f) + (1/kappa) int |x|^2 f.
    Defective,
    /// 1-d bounded symmetric interval, f odd monotone; the bound controls
    /// Ent(f^2) through int |f'|^2 and the Poincare constant (supplied, or
    /// the e^{-2 phi(0)} Cheeger bound for log-concave measures).
    OneDim { poincare_constant: Option<f64> },
}

fn log_concave_1d(m: &Measure) -> bool {
    match &m.kind {
        MeasureKind::GaussianStd { dim } => *dim == 1,
        MeasureKind::ExpSymmetric => true,
        MeasureKind::UniformOnBody { body, .. } => body.dim() == 1,
        MeasureKind::Custom1d { log_concave, .. } => *log_concave,
        _ => false,
    }
}

pub fn check_lsi(
    m: &Measure,
    f: &QcFunction,
    kappa: Option<f64>,
    variant: LsiVariant,
    budget: &EstimationBudget,
) -> Result<CheckResult> {
    let kap = resolve_kappa(m, kappa)?;
    match variant {
        LsiVariant::CauchySchwarz | LsiVariant::Defective => {
            let lhs = entropy(f, m, budget)?;
            let m2 = m.expectation(
                |x| f.eval(x) * x.iter().map(|v| v * v).sum::<f64>(),
                budget,
            )?;
            let fisher = fisher_information(f, m, budget)?;
            let (id, rhs) = match variant {
                LsiVariant::CauchySchwarz => {
                    let value = 2.0 / kap.value * (m2.value.max(0.0) * fisher.value.max(0.0)).sqrt();
                    let err = if m2.value > 0.0 && fisher.value > 0.0 {
                        0.5 * value * (m2.std_error / m2.value + fisher.std_error / fisher.value)
                    } else {
                        m2.std_error + fisher.std_error
                    };
                    (
                        "lsi-cauchy-schwarz",
                        Estimate {
                            value,
                            std_error: err,
                            method: m2.method.clone(),
                            seed: budget.seed,
                        },
                    )
                }
                _ => (
                    "lsi-defective",
                    Estimate {
                        value: (fisher.value + m2.value) / kap.value,
                        std_error: (fisher.std_error + m2.std_error) / kap.value,
                        method: m2.method.clone(),
                        seed: budget.seed,
                    },
                ),
            };
            Ok(decide(
                id,
                lhs,
                rhs,
                Some(kap),
                format!("f = {}, measure {}", f.describe(), m.describe()),
                budget.seed,
            ))
        }
        LsiVariant::OneDim { poincare_constant } => {
            if m.dim() != 1 {
                return Err(DilatioError::Domain(
                    "the one-dimensional variant needs a 1-d measure".into(),
                ));
            }
            let (lo, hi) = m.support_1d()?;
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(DilatioError::Domain(
                    "the one-dimensional variant needs a bounded interval".into(),
                ));
            }
            // Oddness and monotonicity audit on a grid.
            let mut last = f.eval(&[lo + 1e-9 * (hi - lo)]);
            let mut dir = 0.0f64;
            for k in 1..=64 {
                let x = lo + (hi - lo) * k as f64 / 65.0;
                let v = f.eval(&[x]);
                let odd_gap = (f.eval(&[-x]) + v).abs();
                if odd_gap > 1e-9 * (1.0 + v.abs()) {
                    return Err(DilatioError::Domain(format!(
                        "the one-dimensional variant needs an odd function; \
                         f(-x) + f(x) = {odd_gap:.3e} at x = {x}"
                    )));
                }
                let step = v - last;
                if step * dir < -1e-12 {
                    return Err(DilatioError::Domain(
                        "the one-dimensional variant needs a monotone function".into(),
                    ));
                }
                if step.abs() > 1e-12 {
                    dir = step.signum();
                }
                last = v;
            }
            let c_mu = match poincare_constant {
                Some(c) if c > 0.0 => c,
                Some(c) => {
                    return Err(DilatioError::Domain(format!(
                        "spectral-gap constant must be positive, got {c}"
                    )))
                }
                None => {
                    if !log_concave_1d(m) {
                        return Err(DilatioError::Domain(
                            "no spectral-gap constant supplied and the measure is not \
                             log-concave, so the Cheeger fallback does not apply"
                                .into(),
                        ));
                    }
                    let d0 = m.density(&[0.0]);
                    d0 * d0
                }
            };
            let fsq = {
                let fc = f.clone();
                QcFunction::custom(
                    Arc::new(move |x: &[f64]| {
                        let v = fc.eval(x);
                        v * v
                    }),
                    None,
                    Smoothness::LocallyLipschitz,
                )
            };
            let lhs = entropy(&fsq, m, budget)?;
            let dsq = gradient_integral(f, m, budget, |_x, _v, g| g.iter().map(|v| v * v).sum())?;
            let diam = hi - lo;
            let factor = (4.0 + diam * diam / (4.0 * c_mu)) / kap.value;
            let rhs = scale_estimate(&dsq, factor);
            Ok(decide(
                "lsi-one-dim",
                lhs,
                rhs,
                Some(kap),
                format!(
                    "spectral-gap constant {c_mu:.6}, diameter {diam:.6}, measure {}",
                    m.describe()
                ),
                budget.seed,
            ))
        }
    }
}

/// Four comparisons for a normalized C1 quasi-convex density factor f
/// under the standard Gaussian: entropy vs. second moment, transport vs.
/// the same bound, the second-moment lower bound, and the reverse
/// entropy-power comparison for h = f * (Gaussian density).
pub fn check_gaussian_suite(
    f: &QcFunction,
    dim: usize,
    budget: &EstimationBudget,
) -> Result<Vec<CheckResult>> {
    let gamma = Measure::gaussian_std(dim);
    let nf = dim as f64;
    let c = gamma.expectation(|x| f.eval(x), budget)?;
    if c.value <= 1e-12 {
        return Err(DilatioError::DegenerateInput(
            "integral of f vanishes".into(),
        ));
    }
    // Empirical decay audit: |x| f(x) (density) must fall off along a ray.
    let log_two_pi = (2.0 * std::f64::consts::PI).ln();
    let tail = |r: f64| -> f64 {
        let mut x = vec![0.0; dim];
        x[0] = r;
        let v = f.eval(&x) / c.value;
        if v <= 0.0 {
            return 0.0;
        }
        (r.ln() + v.ln() - 0.5 * r * r - 0.5 * nf * log_two_pi).exp()
    };
    let radii = [5.0, 10.0, 20.0, 30.0, 40.0];
    let vals: Vec<f64> = radii.iter().map(|&r| tail(r)).collect();
    let decay_ok = vals.windows(2).all(|w| w[1] <= w[0] + 1e-300) && vals[radii.len() - 1] < 1e-8;

    let ent = scale_estimate(&entropy(f, &gamma, budget)?, 1.0 / c.value);
    let m2 = scale_estimate(
        &gamma.expectation(
            |x| f.eval(x) * x.iter().map(|v| v * v).sum::<f64>(),
            budget,
        )?,
        1.0 / c.value,
    );
    let moment_gap = Estimate {
        value: m2.value - nf,
        std_error: m2.std_error,
        method: m2.method.clone(),
        seed: budget.seed,
    };

    let mut results = Vec::new();
    results.push(decide(
        "gaussian-entropy-variance",
        ent,
        moment_gap.clone(),
        None,
        format!("f = {}, normalizer {:.6}", f.describe(), c.value),
        budget.seed,
    ));
    results.push(decide(
        "gaussian-variance-lower",
        Estimate::exact(nf, "dimension"),
        m2.clone(),
        None,
        format!("f = {}", f.describe()),
        budget.seed,
    ));

    if dim == 1 {
        let fc = f.clone();
        let cv = c.value;
        let h: ScalarField = Arc::new(move |x: &[f64]| (fc.eval(x) / cv).max(0.0));
        let mut nu = Measure::perturbed(Measure::gaussian_std(1), h, 2.0)?;
        nu.kappa = None;
        let w = w2_distance_1d(&gamma, &nu, budget)?;
        let half_w2 = Estimate {
            value: 0.5 * w.value * w.value,
            std_error: w.value * w.std_error,
            method: w.method.clone(),
            seed: budget.seed,
        };
        results.push(decide(
            "gaussian-transport",
            half_w2,
            moment_gap,
            None,
            format!("f = {}", f.describe()),
            budget.seed,
        ));
    } else {
        let mut r = decide(
            "gaussian-transport",
            Estimate::exact(0.0, "skipped"),
            Estimate::exact(0.0, "skipped"),
            None,
            "transport comparison is implemented for n = 1 only".into(),
            budget.seed,
        );
        r.status = CheckStatus::Inconclusive;
        results.push(r);
    }

    // Differential entropy of h = f * (Gaussian density), compared with
    // (1/2) int |x|^2 h - (n/2) log(2 pi e^2).
    let cv = c.value;
    let h_log_h = gamma.expectation(
        |x| {
            let v = f.eval(x) / cv;
            if v <= 0.0 {
                return 0.0;
            }
            let log_gamma = -0.5 * x.iter().map(|t| t * t).sum::<f64>() - 0.5 * nf * log_two_pi;
            v * (v.ln() + log_gamma)
        },
        budget,
    )?;
    let shannon_rhs = Estimate {
        value: 0.5 * m2.value - 0.5 * nf * (log_two_pi + 2.0),
        std_error: 0.5 * m2.std_error,
        method: m2.method.clone(),
        seed: budget.seed,
    };
    results.push(decide(
        "gaussian-reverse-shannon",
        h_log_h,
        shannon_rhs,
        None,
        format!("h = f * gaussian density, f = {}", f.describe()),
        budget.seed,
    ));

    if !decay_ok {
        for r in &mut results {
            r.status = CheckStatus::Inconclusive;
            r.witness = format!("{} | decay audit failed on the radius grid", r.witness);
        }
    }
    results.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(results)
}

/// Moment comparisons ||f||_q <= (q/p)^e ||f||_p, the Orlicz-norm
/// equivalence, and the empirical deviation constant.
pub fn check_moment_suite(
    m: &Measure,
    f: &QcFunction,
    kappa: Option<f64>,
    pairs: &[(f64, f64)],
    budget: &EstimationBudget,
) -> Result<Vec<CheckResult>> {
    let kap = resolve_kappa(m, kappa)?;
    let sup = ess_sup_ratio(f, m, budget)?;
    let exponent = sup / kap.value;
    let mut results = Vec::new();
    for &(p, q) in pairs {
        if !(p >= 1.0 && q >= p) {
            return Err(DilatioError::Domain(format!(
                "moment pair needs 1 <= p <= q, got ({p}, {q})"
            )));
        }
        let lhs = lp_norm(f, m, q, budget)?;
        let np = lp_norm(f, m, p, budget)?;
        let rhs = scale_estimate(&np, (q / p).powf(exponent));
        results.push(decide(
            &format!("moment-p{p}-q{q}"),
            lhs,
            rhs,
            Some(kap.clone()),
            format!(
                "exponent {exponent:.6} from a sampled (lower-bound) sup of f^-1 Phi_f = {sup:.6}"
            ),
            budget.seed,
        ));
    }

    let alpha = if sup > 0.0 { kap.value / sup } else { f64::INFINITY };
    if alpha.is_finite() && alpha >= 1.0 {
        let norm_a = lp_norm(f, m, alpha, budget)?;
        let base = alpha.powf(-1.0 / alpha) * norm_a.value;
        let orlicz = orlicz_norm(f, m, alpha, budget)?;
        let ratio = if base > 0.0 {
            orlicz.norm.value / base
        } else {
            f64::INFINITY
        };
        let spread = ratio.max(1.0 / ratio);
        results.push(decide(
            "orlicz-equivalence",
            Estimate::quadrature(spread, orlicz.norm.std_error / base.max(1e-12))
                .with_tag("orlicz-ratio"),
            Estimate::exact(8.0, "absolute-constant bracket"),
            Some(kap.clone()),
            format!(
                "alpha {alpha:.6}, orlicz norm {:.6}, comparison scale {base:.6}, \
                 sup-of-moments cross-check ratio {:.4}",
                orlicz.norm.value, orlicz.ratio
            ),
            budget.seed,
        ));

        // Smallest C with mu(f >= C t alpha^{-1/alpha} ||f||_alpha)
        // <= 2 exp(-t^alpha) across the t-grid; reported, not asserted.
        let mut c_emp: f64 = 0.0;
        let mut grid_note = String::new();
        let mut t: f64 = 1.0;
        while t <= 5.0 + 1e-9 {
            let target = 2.0 * (-t.powf(alpha)).exp();
            let c_t = if target >= 1.0 {
                0.0
            } else {
                let upper = |s: f64| -> Result<f64> { Ok(1.0 - sublevel_mass(f, m, s, budget)?) };
                let mut hi = base.max(1e-6);
                let mut grow = 0;
                while upper(hi)? > target && grow < 80 {
                    hi *= 2.0;
                    grow += 1;
                }
                let mut lo = 0.0;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if upper(mid)? > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi) / (t * base)
            };
            c_emp = c_emp.max(c_t);
            grid_note.push_str(&format!("t={t:.1}:C={c_t:.4} "));
            t += 0.5;
        }
        results.push(decide(
            "deviation-constant",
            Estimate::exact(c_emp, "empirical"),
            Estimate::exact(c_emp, "empirical"),
            Some(kap.clone()),
            format!(
                "minimal empirical constant over the t-grid; no universal value asserted. \
                 {grid_note}"
            ),
            budget.seed,
        ));
    } else {
        let mut r = decide(
            "deviation-constant",
            Estimate::exact(0.0, "skipped"),
            Estimate::exact(0.0, "skipped"),
            Some(kap.clone()),
            format!(
                "skipped: alpha = {alpha} lies outside [1, infinity), so the Orlicz and \
                 deviation bounds do not apply"
            ),
            budget.seed,
        );
        r.status = CheckStatus::Inconclusive;
        results.push(r);
    }
    results.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(results)
}

/// Negative-moment median bound and the small-ball estimate.
pub fn check_negative_suite(
    m: &Measure,
    f: &QcFunction,
    kappa: Option<f64>,
    p_grid: &[f64],
    eps: f64,
    budget: &EstimationBudget,
) -> Result<Vec<CheckResult>> {
    let kap = resolve_kappa(m, kappa)?;
    let f0 = f.eval(&vec![0.0; m.dim()]);
    if f0 <= 0.0 {
        return Err(DilatioError::Domain(format!(
            "the negative-moment bounds need f > 0, but f(0) = {f0}"
        )));
    }
    let sup = ess_sup_ratio(f, m, budget)?;
    let beta = sup / (kap.value * std::f64::consts::LN_2);
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(DilatioError::Domain(format!(
            "the bounds need a finite positive growth index, got {beta}"
        )));
    }
    if !(eps > 0.0 && eps * beta < 1.0) {
        return Err(DilatioError::Domain(format!(
            "small-ball parameter needs 0 < eps < 1/beta = {}, got {eps}",
            1.0 / beta
        )));
    }
    let med = levy_mean(f, m, budget)?;
    let mut results = Vec::new();
    for &p in p_grid {
        let id = format!("negative-moment-p{p}");
        if !(p > 0.0 && beta * p < 1.0) {
            let mut r = decide(
                &id,
                Estimate::exact(0.0, "skipped"),
                Estimate::exact(0.0, "skipped"),
                Some(kap.clone()),
                format!("skipped: p = {p} lies outside (0, 1/beta = {:.4})", 1.0 / beta),
                budget.seed,
            );
            r.status = CheckStatus::Inconclusive;
            results.push(r);
            continue;
        }
        let nrm = lp_norm(f, m, -p, budget)?;
        let factor = (std::f64::consts::E / (1.0 - beta * p)).powf(beta);
        results.push(decide(
            &id,
            Estimate::exact(med, "levy-mean"),
            scale_estimate(&nrm, factor),
            Some(kap.clone()),
            format!("beta {beta:.6} (sampled lower-bound sup {sup:.6}), median {med:.6}"),
            budget.seed,
        ));
    }

    let prefactor = (std::f64::consts::E / (eps * beta)).powf(1.0 - eps * beta);
    let tail_exp = 1.0 / beta - eps;
    let mut worst: f64 = 0.0;
    let mut grid_note = String::new();
    for &t in &[0.2, 0.4, 0.6, 0.8, 1.0] {
        let small = sublevel_mass(f, m, t * med, budget)?;
        let bound = prefactor * t.powf(tail_exp);
        let ratio = if bound > 0.0 { small / bound } else { f64::INFINITY };
        worst = worst.max(ratio);
        grid_note.push_str(&format!("t={t:.1}:mass={small:.4e},bound={bound:.4e} "));
    }
    results.push(decide(
        "small-ball",
        Estimate::exact(worst, "mass-to-bound ratio"),
        Estimate::exact(1.0, "unit"),
        Some(kap),
        format!("eps {eps}, beta {beta:.6}. {grid_note}"),
        budget.seed,
    ));
    results.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(results)
}

/// Perimeter lower bounds through the surface moment and the circumradius,
/// and the bridge mu*(K) <= 2 R(K) mu+(K).
pub fn check_isoperimetry(
    m: &Measure,
    k: &SymmetricConvexBody,
    kappa: Option<f64>,
    p: f64,
    budget: &EstimationBudget,
) -> Result<Vec<CheckResult>> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(DilatioError::Domain(format!(
            "surface exponent needs p in (1, 2], got {p}"
        )));
    }
    let kap = resolve_kappa(m, kappa)?;
    let mass = m.mass_of_body(k, budget)?;
    let mu = mass.value;
    if !(mu > 1e-9 && mu < 1.0 - 1e-9) {
        return Err(DilatioError::DegenerateInput(format!(
            "isoperimetric comparison needs nondegenerate mass, got {mu}"
        )));
    }
    let base = -0.5 * kap.value * (1.0 - mu) * (1.0 - mu).ln();
    let base_err = 0.5 * kap.value * ((1.0 - mu).ln().abs() + 1.0) * mass.std_error;
    let (r_in, r_out) = k.radii()?;
    let perim = perimeter(m, k, 256, budget)?;
    let mut results = Vec::new();

    results.push(decide(
        "iso-direct",
        Estimate::quadrature(base / r_out, base_err / r_out).with_tag(&mass.method),
        perim.clone(),
        Some(kap.clone()),
        format!("mass {mu:.6}, circumradius {r_out:.6}"),
        budget.seed,
    ));

    match surface_moment_integral(m, k, p / (p - 1.0), 256) {
        Ok(s) => {
            if s.value > 0.0 {
                let lhs_val = (r_in / s.value).powf(p - 1.0) * base.powf(p);
                let lhs_err = lhs_val
                    * ((p - 1.0) * s.std_error / s.value + p * base_err / base.max(1e-12));
                results.push(decide(
                    "iso-surface",
                    Estimate::quadrature(lhs_val, lhs_err).with_tag("surface-moment"),
                    perim.clone(),
                    Some(kap.clone()),
                    format!(
                        "inradius {r_in:.6}, surface moment {:.6}, exponent p = {p}",
                        s.value
                    ),
                    budget.seed,
                ));
            }
        }
        Err(DilatioError::Unsupported(_)) => {
            // Partial result: the surface form needs boundary quadrature.
        }
        Err(e) => return Err(e),
    }

    let area = dilation_area(m, k, None, budget)?;
    results.push(decide(
        "iso-bridge",
        area,
        scale_estimate(&perim, 2.0 * r_out),
        Some(kap),
        format!("dilation area against 2 R perimeter, R = {r_out:.6}"),
        budget.seed,
    ));
    results.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(results)
}

/// Level-set form: the t-integral of dilation areas against the weighted
/// Phi integral.
pub fn check_coarea(
    m: &Measure,
    f: &QcFunction,
    p: f64,
    sign: CoareaSign,
    budget: &EstimationBudget,
) -> Result<CheckResult> {
    let (lhs, rhs) = coarea_integral(m, f, p, sign, budget)?;
    let id = match sign {
        CoareaSign::Positive => "coarea-positive",
        CoareaSign::Negative => "coarea-negative",
    };
    Ok(decide(
        id,
        lhs,
        rhs,
        m.kappa.clone(),
        format!("f = {}, exponent p = {p}", f.describe()),
        budget.seed,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionRow {
    pub sigma: f64,
    pub entropy: f64,
    pub phi_integral: f64,
}

/// Fits y(sigma) = L - a sigma^g on the tail of a geometric ladder and
/// returns (L, residual).
fn fit_power_tail(pts: &[(f64, f64)]) -> (f64, f64) {
    let fit3 = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| -> Option<f64> {
        let d1 = b.1 - a.1;
        let d2 = c.1 - b.1;
        if d1.abs() < 1e-14 || d2.abs() < 1e-14 || d2 / d1 <= 0.0 {
            return None;
        }
        let q = b.0 / a.0;
        let g = (d2 / d1).ln() / q.ln();
        let denom = c.0.powf(g) - b.0.powf(g);
        if denom.abs() < 1e-300 {
            return None;
        }
        let amp = -d2 / denom;
        Some(c.1 + amp * c.0.powf(g))
    };
    let n = pts.len();
    let last = pts[n - 1].1;
    let l1 = fit3(pts[n - 3], pts[n - 2], pts[n - 1]);
    let l0 = if n >= 4 {
        fit3(pts[n - 4], pts[n - 3], pts[n - 2])
    } else {
        None
    };
    match (l0, l1) {
        (Some(a), Some(b)) => (b, (a - b).abs()),
        (None, Some(b)) => (b, (b - last).abs()),
        _ => (last, (pts[n - 1].1 - pts[n - 2].1).abs()),
    }
}

/// Fits y(sigma) = L + a sigma log sigma + b sigma on the tail; this is the
/// natural correction shape when the family ramps linearly across a shell.
fn fit_sigma_log_tail(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len();
    if n < 4 {
        return None;
    }
    let solve3 = |w: &[(f64, f64)]| -> Option<f64> {
        let rows: Vec<[f64; 3]> = w.iter().map(|&(s, _)| [1.0, s * s.ln(), s]).collect();
        let y: Vec<f64> = w.iter().map(|&(_, v)| v).collect();
        let det = |a: &[[f64; 3]; 3]| {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        let a = [rows[0], rows[1], rows[2]];
        let d = det(&a);
        if d.abs() < 1e-14 {
            return None;
        }
        let mut num = a;
        for r in 0..3 {
            num[r][0] = y[r];
        }
        let l = det(&num) / d;
        l.is_finite().then_some(l)
    };
    let l1 = solve3(&pts[n - 3..]);
    let l0 = solve3(&pts[n - 4..n - 1]);
    match (l0, l1) {
        (Some(a), Some(b)) => Some((b, (a - b).abs())),
        _ => None,
    }
}

/// Extrapolates the shrink ladder with whichever tail model agrees best
/// with itself across two overlapping windows.
fn fit_tail(pts: &[(f64, f64)]) -> (f64, f64) {
    let (lp, rp) = fit_power_tail(pts);
    match fit_sigma_log_tail(pts) {
        Some((ll, rl)) if rl < rp => (ll, rl),
        _ => (lp, rp),
    }
}

/// Phi integral of the shell-ramp family: a direct shell quadrature, since
/// the integrand lives on a sliver that blind adaptive panels can miss.
fn fsigma_phi_integral(
    m: &Measure,
    k: &SymmetricConvexBody,
    sigma: f64,
    tol: f64,
) -> Result<f64> {
    let delta = 2.0 * sigma / ((1.0 - sigma) * (1.0 - sigma));
    let s_out = (1.0 + sigma) / (1.0 - sigma);
    match m.dim() {
        1 => {
            let t = k.radial(&[1.0]);
            let (lo, hi) = m.support_1d()?;
            let mut total = 0.0;
            let (a, b) = (t.max(lo), (s_out * t).min(hi));
            if b > a {
                total += integrate(|x| (2.0 / delta) * (x / t) * m.density(&[x]), a, b, tol).0;
            }
            let (a, b) = ((-s_out * t).max(lo), (-t).min(hi));
            if b > a {
                total += integrate(|x| (2.0 / delta) * (-x / t) * m.density(&[x]), a, b, tol).0;
            }
            Ok(total)
        }
        2 => {
            let (v, _) = integrate(
                |theta| {
                    let u = [theta.cos(), theta.sin()];
                    let rk = k.radial(&u);
                    if !(rk.is_finite() && rk > 0.0) {
                        return 0.0;
                    }
                    integrate(
                        |rr| {
                            let p = [rr * u[0], rr * u[1]];
                            let d = m.density(&p);
                            if d == 0.0 {
                                0.0
                            } else {
                                (2.0 / delta) * (rr / rk) * d * rr
                            }
                        },
                        rk,
                        s_out * rk,
                        tol * 1e-2,
                    )
                    .0
                },
                0.0,
                2.0 * std::f64::consts::PI,
                tol,
            );
            Ok(v)
        }
        _ => Err(DilatioError::Unsupported(
            "shell quadrature needs n <= 2".into(),
        )),
    }
}

/// Entropy of the shell-ramp family, again via explicit region splitting:
/// the ramp occupies a shell of width O(sigma) that a blind adaptive pass
/// can step over, freezing an O(sigma) bias into the extrapolated limit.
fn fsigma_entropy(
    m: &Measure,
    k: &SymmetricConvexBody,
    sigma: f64,
    budget: &EstimationBudget,
) -> Result<f64> {
    let delta = 2.0 * sigma / ((1.0 - sigma) * (1.0 - sigma));
    let s_out = (1.0 + sigma) / (1.0 - sigma);
    let tol = budget.quad_tol;
    let plateau = 1.0 - sigma;
    // Ramp value as a function of the gauge, with x log x continued by 0.
    let xlogx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
    let (shell_mean, shell_ent, outer_mass) = match m.dim() {
        1 => {
            let t = k.radial(&[1.0]);
            let (lo, hi) = m.support_1d()?;
            let mut mean = 0.0;
            let mut ent = 0.0;
            for (a, b) in [
                (t.max(lo), (s_out * t).min(hi)),
                ((-s_out * t).max(lo), (-t).min(hi)),
            ] {
                if b > a {
                    mean += integrate(
                        |x| (x.abs() / t - 1.0) / delta * m.density(&[x]),
                        a,
                        b,
                        tol,
                    )
                    .0;
                    ent += integrate(
                        |x| xlogx((x.abs() / t - 1.0) / delta) * m.density(&[x]),
                        a,
                        b,
                        tol,
                    )
                    .0;
                }
            }
            let inner = m.cdf_1d(s_out * t)? - m.cdf_1d(-s_out * t)?;
            (mean, ent, 1.0 - inner)
        }
        2 => {
            let mut mean = 0.0;
            let mut ent = 0.0;
            for weight in [false, true] {
                let v = integrate(
                    |theta| {
                        let u = [theta.cos(), theta.sin()];
                        let rk = k.radial(&u);
                        if !(rk.is_finite() && rk > 0.0) {
                            return 0.0;
                        }
                        integrate(
                            |rr| {
                                let p = [rr * u[0], rr * u[1]];
                                let d = m.density(&p);
                                if d == 0.0 {
                                    return 0.0;
                                }
                                let ramp = (rr / rk - 1.0) / delta;
                                let val = if weight { xlogx(ramp) } else { ramp };
                                val * d * rr
                            },
                            rk,
                            s_out * rk,
                            tol * 1e-2,
                        )
                        .0
                    },
                    0.0,
                    2.0 * std::f64::consts::PI,
                    tol,
                );
                if weight {
                    ent = v.0;
                } else {
                    mean = v.0;
                }
            }
            let inner = m.mass_of_body(&k.scale(s_out), budget)?.value;
            (mean, ent, 1.0 - inner)
        }
        _ => {
            return Err(DilatioError::Unsupported(
                "shell quadrature needs n <= 2".into(),
            ))
        }
    };
    let b = shell_mean + plateau * outer_mass;
    let a = shell_ent + xlogx(plateau) * outer_mass;
    if !(b > 0.0 && b.is_finite() && a.is_finite()) {
        return Err(DilatioError::Inconclusive(
            "degenerate shell-family entropy".into(),
        ));
    }
    Ok(a - b * b.ln())
}

/// Recovers the dilation comparison from the entropy bound alone: the
/// shell-ramp family f_sigma has entropy tending to -(1 - mu(K)) log(1 -
/// mu(K)) and Phi integral tending to mu*(K); the extrapolated limits are
/// compared with each other and with the directly computed sides.
pub fn reconstruct_dilation(
    m: &Measure,
    k: &SymmetricConvexBody,
    kappa: Option<f64>,
    sigmas: Option<&[f64]>,
    budget: &EstimationBudget,
) -> Result<(CheckResult, Vec<ReconstructionRow>)> {
    let kap = resolve_kappa(m, kappa)?;
    let default: Vec<f64> = (2..=10).map(|j| 0.5f64.powi(j)).collect();
    let mut sig: Vec<f64> = sigmas.unwrap_or(&default).to_vec();
    if sig.iter().any(|&s| !(s > 0.0 && s < 1.0)) || sig.len() < 3 {
        return Err(DilatioError::Domain(
            "the shrink sequence needs at least three values in (0,1)".into(),
        ));
    }
    sig.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // Mass carried by a hairline shell around the boundary; absolutely
    // continuous measures give ~0, and anything larger poisons the limit.
    let outer = m.mass_of_body(&k.scale(1.0 + 1e-7), budget)?.value;
    let inner = m.mass_of_body(&k.scale(1.0 - 1e-7), budget)?.value;
    let boundary_mass = (outer - inner).max(0.0);

    let mut rows = Vec::with_capacity(sig.len());
    for &s in &sig {
        let ent = fsigma_entropy(m, k, s, budget)?;
        let phi = fsigma_phi_integral(m, k, s, budget.quad_tol)?;
        rows.push(ReconstructionRow {
            sigma: s,
            entropy: ent,
            phi_integral: phi,
        });
    }
    let ent_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.sigma, r.entropy)).collect();
    let phi_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.sigma, r.phi_integral)).collect();
    let (ent_limit, ent_resid) = fit_tail(&ent_pts);
    let (phi_limit, phi_resid) = fit_tail(&phi_pts);

    let lhs = Estimate::quadrature(kap.value * ent_limit, kap.value * ent_resid)
        .with_tag("entropy-extrapolated");
    let rhs =
        Estimate::quadrature(phi_limit, phi_resid).with_tag("phi-integral-extrapolated");

    let direct = check_dilation(m, k, Some(kap.value), budget)?;
    let drift_l = (lhs.value - direct.lhs.value).abs();
    let drift_r = (rhs.value - direct.rhs.value).abs();
    let mut result = decide(
        "reconstruction",
        lhs,
        rhs,
        Some(kap),
        format!(
            "entropy limit {ent_limit:.6}, Phi-integral limit {phi_limit:.6}; direct sides \
             {:.6} / {:.6}; boundary shell mass {boundary_mass:.3e}",
            direct.lhs.value, direct.rhs.value
        ),
        budget.seed,
    );
    let drift_tol = 0.05 * (1.0 + direct.rhs.value.abs());
    if boundary_mass > 1e-3 || drift_l > drift_tol || drift_r > drift_tol {
        result.status = CheckStatus::Inconclusive;
        result.witness = format!(
            "{} | extrapolated limits drift from the direct computation or the boundary \
             carries mass",
            result.witness
        );
    }
    Ok((result, rows))
}

fn assert_unconditional_body(k: &SymmetricConvexBody) -> Result<()> {
    let n = k.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..64 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = k.gauge(&x);
        for mask in 1u32..(1 << n.min(16)) {
            let y: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(i, v)| if mask >> i & 1 == 1 { -v } else { *v })
                .collect();
            if (k.gauge(&y) - g).abs() > 1e-9 * (1.0 + g.abs()) {
                return Err(DilatioError::Domain(
                    "the body is not invariant under coordinate sign flips".into(),
                ));
            }
        }
    }
    Ok(())
}

fn assert_unconditional_function(f: &QcFunction, dim: usize) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..64 {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v = f.eval(&x);
        for mask in 1u32..(1 << dim.min(16)) {
            let y: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(i, t)| if mask >> i & 1 == 1 { -t } else { *t })
                .collect();
            if (f.eval(&y) - v).abs() > 1e-9 * (1.0 + v.abs()) {
                return Err(DilatioError::Domain(
                    "the function is not invariant under coordinate sign flips".into(),
                ));
            }
        }
    }
    Ok(())
}

pub enum StabilityMode {
    /// d nu = h d mu with b^{-1} <= h <= b: the constant degrades to
    /// kappa / b^2.
    Perturbation {
        base: Measure,
        h: ScalarField,
        bound: f64,
        body: SymmetricConvexBody,
    },
    /// 1-d x n-d product with the harmonic combination of the factors'
    /// constants, tested on an unconditional body.
    TensorHarmonic {
        first: Measure,
        second: Measure,
        body: SymmetricConvexBody,
    },
    /// Product measure with min of the factors' constants, tested through
    /// the entropy bound on an unconditional C1 function.
    TensorMin {
        first: Measure,
        second: Measure,
        f: QcFunction,
    },
}

pub fn check_stability(mode: StabilityMode, budget: &EstimationBudget) -> Result<CheckResult> {
    match mode {
        StabilityMode::Perturbation {
            base,
            h,
            bound,
            body,
        } => {
            let base_desc = base.describe();
            let nu = Measure::perturbed(base, h, bound)?;
            let kap = nu.kappa.clone().ok_or_else(|| {
                DilatioError::Domain("the base measure carries no dilation constant".into())
            })?;
            let mut r = check_dilation(&nu, &body, Some(kap.value), budget)?;
            r.id = "stability-perturbation".into();
            r.kappa = Some(KappaClaim::new(kap.value, "bounded perturbation (b^-2 kappa)"));
            r.witness = format!("base {base_desc}, bound {bound}; {}", r.witness);
            Ok(r)
        }
        StabilityMode::TensorHarmonic {
            first,
            second,
            body,
        } => {
            if first.dim() != 1 {
                return Err(DilatioError::Domain(
                    "the tensor combination needs a 1-d first factor".into(),
                ));
            }
            assert_unconditional_body(&body)?;
            let product = Measure::product(first, second);
            let kap = product.kappa.clone().ok_or_else(|| {
                DilatioError::Domain("both factors need a tagged dilation constant".into())
            })?;
            let mut r = check_dilation(&product, &body, Some(kap.value), budget)?;
            r.id = "stability-tensor-harmonic".into();
            r.kappa = Some(kap);
            Ok(r)
        }
        StabilityMode::TensorMin { first, second, f } => {
            let (k1, k2) = match (&first.kappa, &second.kappa) {
                (Some(a), Some(b)) => (a.value, b.value),
                _ => {
                    return Err(DilatioError::Domain(
                        "both factors need a tagged dilation constant".into(),
                    ))
                }
            };
            if f.smoothness() != Smoothness::C1 {
                return Err(DilatioError::Domain(
                    "the functional tensor bound needs a C1 function".into(),
                ));
            }
            let dim = first.dim() + second.dim();
            assert_unconditional_function(&f, dim)?;
            let product = Measure::product(first, second);
            let kap = k1.min(k2);
            let mut r = check_entropy_bounds(
                &product,
                &f,
                Some(kap),
                EntropyVariant::Master,
                budget,
            )?;
            r.id = "stability-tensor-min".into();
            r.kappa = Some(KappaClaim::new(kap, "tensorization (min rule)"));
            Ok(r)
        }
    }
}

/// Near-equality probes: the Gaussian small-interval ratio, the one-sided
/// exponential equality, the symmetric exponential equality grid, and the
/// exponential tail-envelope fit for large-mass bodies.
pub fn sharpness_probes(budget: &EstimationBudget) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();

    // (a) Gaussian: mu*((-t,t)) over -2 (1-mu) log(1-mu) decreases to 1.
    // The ratio behaves like 1 + 0.4 t for small t, so the smallest grid
    // point t = 0.01 lands within 5e-3 of the limit.
    let gamma = Measure::gaussian_std(1);
    let mut ratios = Vec::new();
    for &t in &[0.3, 0.1, 0.03, 0.01] {
        let k = SymmetricConvexBody::interval(t)?;
        let area = dilation_area(&gamma, &k, None, budget)?;
        let mu = normal_cdf(t) - normal_cdf(-t);
        let denom = -2.0 * (1.0 - mu) * (1.0 - mu).ln();
        ratios.push((t, area.value / denom, area.std_error / denom));
    }
    let decreasing = ratios.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    let (t_last, r_last, e_last) = *ratios.last().unwrap();
    let mut probe = decide(
        "sharpness-gaussian-kappa",
        Estimate::quadrature((r_last - 1.0).abs(), e_last).with_tag("ratio-gap"),
        Estimate::exact(5e-3, "tolerance"),
        Some(KappaClaim::new(2.0, "gaussian")),
        format!(
            "ratios {:?} decreasing toward 1; gap at t = {t_last}",
            ratios.iter().map(|r| (r.0, r.1)).collect::<Vec<_>>()
        ),
        budget.seed,
    );
    if !decreasing {
        probe.status = CheckStatus::Inconclusive;
        probe.witness = format!("{} | ratio sequence not decreasing", probe.witness);
    }
    results.push(probe);

    // (b) One-sided exponential: equality on the half-open interval.
    let nu1 = Measure::exp_one_sided();
    let area = one_sided_interval_dilation_area(&nu1, 1.0, budget)?;
    let mu = 1.0 - (-1.0f64).exp();
    let closed = -(1.0 - mu) * (1.0 - mu).ln();
    results.push(decide(
        "sharpness-one-sided-exponential",
        Estimate::quadrature((area.value - closed).abs(), area.std_error)
            .with_tag("equality-gap"),
        Estimate::exact(1e-6, "tolerance"),
        Some(KappaClaim::new(1.0, "log-concave")),
        format!("area {:.9} against closed form {closed:.9}", area.value),
        budget.seed,
    ));

    // (c) Symmetric exponential: equality across a grid of intervals.
    let nu2 = Measure::exp_symmetric();
    let mut worst: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    for &t in &[0.5, 1.0, 2.0] {
        let k = SymmetricConvexBody::interval(t)?;
        let area = dilation_area(&nu2, &k, None, budget)?;
        let one_minus = (-t).exp();
        let denom = -2.0 * one_minus * one_minus.ln();
        let gap = (area.value / denom - 1.0).abs();
        if gap > worst {
            worst = gap;
            worst_err = area.std_error / denom;
        }
    }
    results.push(decide(
        "sharpness-symmetric-exponential",
        Estimate::quadrature(worst, worst_err).with_tag("equality-gap"),
        Estimate::exact(1e-5, "tolerance"),
        Some(KappaClaim::new(2.0, "symmetric 1-d log-concave")),
        "largest |ratio - 1| over the interval grid".into(),
        budget.seed,
    ));

    // (d) Exponential tail envelope mu(complement of tK) <= c e^{-C t}
    // for a body of mass >= 2/3: a log-linear fit of the Gaussian tails.
    let half_width = 1.5;
    let t_grid: Vec<f64> = (0..9).map(|i| 1.0 + 0.5 * i as f64).collect();
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &t in &t_grid {
        let tail = 2.0 * (1.0 - normal_cdf(half_width * t));
        let y = tail.max(1e-300).ln();
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    let n = t_grid.len() as f64;
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let (c_fit, big_c) = (intercept.exp(), -slope);
    results.push(decide(
        "sharpness-borell-tail",
        Estimate::exact(-big_c, "fit-slope"),
        Estimate::exact(0.0, "zero"),
        None,
        format!(
            "half-width {half_width}, mass {:.4}; fitted envelope c = {c_fit:.4}, \
             decay rate C = {big_c:.4}",
            normal_cdf(half_width) - normal_cdf(-half_width)
        ),
        budget.seed,
    ));

    results.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use statrs::function::gamma::digamma;

    fn quad() -> EstimationBudget {
        EstimationBudget::quadrature()
    }

    fn interval(t: f64) -> SymmetricConvexBody {
        SymmetricConvexBody::interval(t).unwrap()
    }

    #[test]
    fn dilation_gaussian_interval() {
        let r = check_dilation(&Measure::gaussian_std(1), &interval(1.0), None, &quad()).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        // Closed forms: mu = erf(1/sqrt 2), lhs = -2 (1-mu) log(1-mu),
        // rhs = 4 t exp(-t^2/2) / sqrt(2 pi) at t = 1.
        assert_abs_diff_eq!(r.lhs.value, 0.7284652586, epsilon = 1e-6);
        assert_abs_diff_eq!(r.rhs.value, 0.9678828981, epsilon = 1e-6);
        assert!(r.margin > 0.2);
        assert_abs_diff_eq!(r.kappa.as_ref().unwrap().value, 2.0, epsilon = 0.0);
    }

    #[test]
    fn dilation_log_concave_one_sided() {
        // One-sided exponential carries the log-concave constant 1.
        let r = check_dilation(&Measure::exp_one_sided(), &interval(1.0), None, &quad()).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        let e1 = (-1.0f64).exp();
        assert_abs_diff_eq!(r.lhs.value, e1, epsilon = 1e-6);
        assert_abs_diff_eq!(r.rhs.value, 2.0 * e1, epsilon = 1e-5);
    }

    #[test]
    fn dilation_trivial_mass() {
        let r = check_dilation(&Measure::gaussian_std(1), &interval(50.0), None, &quad()).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert!(r.witness.contains("trivially"));
    }

    #[test]
    fn dilation_kappa_monotone_flip() {
        let m = Measure::gaussian_std(1);
        let pass = check_dilation(&m, &interval(1.0), Some(2.0), &quad()).unwrap();
        assert_eq!(pass.status, CheckStatus::Pass);
        let fail = check_dilation(&m, &interval(1.0), Some(10.0), &quad()).unwrap();
        assert_eq!(fail.status, CheckStatus::Fail);
        assert!(fail.lhs.value > fail.rhs.value);
    }

    #[test]
    fn dilation_deterministic_and_budget_stable() {
        let m = Measure::gaussian_std(1);
        let budget = EstimationBudget::monte_carlo(200_000, 7);
        let a = check_dilation(&m, &interval(1.0), None, &budget).unwrap();
        let b = check_dilation(&m, &interval(1.0), None, &budget).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.status, CheckStatus::Pass);
        // 4x the sample budget must not flip a pass to a fail.
        let big = check_dilation(&m, &interval(1.0), None, &budget.scaled(4)).unwrap();
        assert_ne!(big.status, CheckStatus::Fail);
    }

    #[test]
    fn entropy_c1_gaussian_square() {
        let r = check_entropy_bounds(
            &Measure::gaussian_std(1),
            &QcFunction::radial(2.0).unwrap(),
            None,
            EntropyVariant::C1,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert_abs_diff_eq!(r.lhs.value, 0.72963, epsilon = 1e-5);
        // (2/2) int 2 x^2 dgamma = 2.
        assert_abs_diff_eq!(r.rhs.value, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn entropy_constant_equality() {
        let r = check_entropy_bounds(
            &Measure::gaussian_std(1),
            &QcFunction::constant(3.0),
            None,
            EntropyVariant::Master,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert_abs_diff_eq!(r.lhs.value, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.rhs.value, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn entropy_master_exp_abs() {
        let r = check_entropy_bounds(
            &Measure::exp_symmetric(),
            &QcFunction::radial(1.0).unwrap(),
            None,
            EntropyVariant::Master,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        // Ent(|x|) under the symmetric exponential: psi(2) = 1 - gamma.
        assert_abs_diff_eq!(r.lhs.value, digamma(2.0), epsilon = 1e-6);
        assert_abs_diff_eq!(r.rhs.value, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn entropy_variant_kind_mismatch() {
        // |x| is not C1 at the origin; the C1 variant refuses it.
        let err = check_entropy_bounds(
            &Measure::gaussian_std(1),
            &QcFunction::radial(1.0).unwrap(),
            None,
            EntropyVariant::C1,
            &quad(),
        );
        assert!(matches!(err, Err(DilatioError::Domain(_))));
        let err = check_entropy_bounds(
            &Measure::gaussian_std(1),
            &QcFunction::f_sigma(interval(1.0), 0.5).unwrap(),
            None,
            EntropyVariant::Convex,
            &quad(),
        );
        assert!(matches!(err, Err(DilatioError::Domain(_))));
    }

    #[test]
    fn entropy_convex_and_lipschitz_variants() {
        let m = Measure::gaussian_std(1);
        let f = QcFunction::radial(2.0).unwrap();
        let c = check_entropy_bounds(&m, &f, None, EntropyVariant::Convex, &quad()).unwrap();
        assert_eq!(c.status, CheckStatus::Pass);
        assert_abs_diff_eq!(c.rhs.value, 2.0, epsilon = 1e-7);
        let l = check_entropy_bounds(&m, &f, None, EntropyVariant::Lipschitz, &quad()).unwrap();
        assert_eq!(l.status, CheckStatus::Pass);
        // |x| |f'| = 2x^2 coincides with <x, f'> for this even function.
        assert_abs_diff_eq!(l.rhs.value, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn lsi_cauchy_schwarz_oracle() {
        let r = check_lsi(
            &Measure::gaussian_std(1),
            &QcFunction::radial(2.0).unwrap(),
            None,
            LsiVariant::CauchySchwarz,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        // (2/2) sqrt(E x^4) sqrt(I) = sqrt(3) * 2.
        assert_abs_diff_eq!(r.rhs.value, 3.0f64.sqrt() * 2.0, epsilon = 1e-6);
    }

    #[test]
    fn lsi_defective_oracle() {
        let r = check_lsi(
            &Measure::gaussian_std(1),
            &QcFunction::radial(2.0).unwrap(),
            None,
            LsiVariant::Defective,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        // (1/2) * 4 + (1/2) * 3 = 3.5.
        assert_abs_diff_eq!(r.rhs.value, 3.5, epsilon = 1e-6);
    }

    #[test]
    fn lsi_one_dim_uniform() {
        let m = Measure::uniform_on_body(interval(1.0)).unwrap();
        let f = QcFunction::custom(
            std::sync::Arc::new(|x: &[f64]| x[0]),
            Some(std::sync::Arc::new(|_: &[f64]| vec![1.0])),
            Smoothness::C1,
        );
        let c_mu = std::f64::consts::PI * std::f64::consts::PI / 4.0;
        let r = check_lsi(
            &m,
            &f,
            None,
            LsiVariant::OneDim {
                poincare_constant: Some(c_mu),
            },
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        // Ent(x^2) on the uniform interval: -2/9 - (1/3) log(1/3).
        let oracle = -2.0 / 9.0 - (1.0 / 3.0) * (1.0f64 / 3.0).ln();
        assert_abs_diff_eq!(r.lhs.value, oracle, epsilon = 1e-8);
        // (1/2)(4 + 4/(4 C)) * 1 with C = pi^2/4.
        let rhs_oracle = 2.0 + 2.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert_abs_diff_eq!(r.rhs.value, rhs_oracle, epsilon = 1e-8);
    }

    #[test]
    fn lsi_one_dim_rejects_even_function() {
        let m = Measure::uniform_on_body(interval(1.0)).unwrap();
        let err = check_lsi(
            &m,
            &QcFunction::radial(2.0).unwrap(),
            None,
            LsiVariant::OneDim {
                poincare_constant: Some(1.0),
            },
            &quad(),
        );
        assert!(matches!(err, Err(DilatioError::Domain(_))));
    }

    #[test]
    fn gaussian_suite_square() {
        let rs =
            check_gaussian_suite(&QcFunction::radial(2.0).unwrap(), 1, &quad()).unwrap();
        assert_eq!(rs.len(), 4);
        let by_id = |id: &str| rs.iter().find(|r| r.id == id).unwrap();
        let ev = by_id("gaussian-entropy-variance");
        assert_eq!(ev.status, CheckStatus::Pass);
        assert_abs_diff_eq!(ev.lhs.value, 0.72963, epsilon = 1e-5);
        // E[x^4] - 1 = 2 after normalizing f = x^2 to unit mean.
        assert_abs_diff_eq!(ev.rhs.value, 2.0, epsilon = 1e-6);
        let vl = by_id("gaussian-variance-lower");
        assert_eq!(vl.status, CheckStatus::Pass);
        assert_abs_diff_eq!(vl.rhs.value, 3.0, epsilon = 1e-6);
        assert_eq!(by_id("gaussian-transport").status, CheckStatus::Pass);
        assert_eq!(by_id("gaussian-reverse-shannon").status, CheckStatus::Pass);
    }

    #[test]
    fn gaussian_suite_identity_equalities() {
        let rs = check_gaussian_suite(&QcFunction::constant(1.0), 1, &quad()).unwrap();
        for r in &rs {
            assert_eq!(r.status, CheckStatus::Pass, "{} failed", r.id);
        }
        let sh = rs.iter().find(|r| r.id == "gaussian-reverse-shannon").unwrap();
        // Equality at the Gaussian itself: both sides -(1/2) log(2 pi e).
        let oracle = -0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert_abs_diff_eq!(sh.lhs.value, oracle, epsilon = 1e-7);
        assert_abs_diff_eq!(sh.rhs.value, oracle, epsilon = 1e-7);
    }

    #[test]
    fn moment_suite_exp_abs() {
        let rs = check_moment_suite(
            &Measure::exp_symmetric(),
            &QcFunction::radial(1.0).unwrap(),
            None,
            &[(1.0, 3.0)],
            &quad(),
        )
        .unwrap();
        let pair = rs.iter().find(|r| r.id == "moment-p1-q3").unwrap();
        assert_eq!(pair.status, CheckStatus::Pass);
        // ||f||_3 = Gamma(4)^{1/3} = 6^{1/3}; exponent 1 gives rhs = 3.
        assert_abs_diff_eq!(pair.lhs.value, 6.0f64.powf(1.0 / 3.0), epsilon = 1e-6);
        assert_abs_diff_eq!(pair.rhs.value, 3.0, epsilon = 1e-4);
        // alpha = kappa / sup = 2/2 = 1: the Orlicz and deviation entries run.
        assert!(rs.iter().any(|r| r.id == "orlicz-equivalence"));
        let orlicz = rs.iter().find(|r| r.id == "orlicz-equivalence").unwrap();
        assert_eq!(orlicz.status, CheckStatus::Pass);
        let dev = rs.iter().find(|r| r.id == "deviation-constant").unwrap();
        assert_eq!(dev.status, CheckStatus::Pass);
        assert!(dev.lhs.value > 0.0 && dev.lhs.value < 100.0);
    }

    #[test]
    fn moment_suite_smooth_shifted_alpha_one() {
        // f = (1 + x^2)^{1/2}: sup of f^{-1} Phi_f is 2, so alpha = 1 and
        // the deviation bound applies.
        let rs = check_moment_suite(
            &Measure::gaussian_std(1),
            &QcFunction::shifted_radial(1.0, 0.5).unwrap(),
            None,
            &[(1.0, 2.0), (2.0, 4.0)],
            &quad(),
        )
        .unwrap();
        for r in &rs {
            assert_eq!(r.status, CheckStatus::Pass, "{} failed: {}", r.id, r.witness);
        }
        assert!(rs.iter().any(|r| r.id == "orlicz-equivalence"));
        assert!(rs
            .iter()
            .any(|r| r.id == "deviation-constant" && !r.witness.contains("skipped")));
    }

    #[test]
    fn moment_suite_constant_skips_deviation() {
        let rs = check_moment_suite(
            &Measure::gaussian_std(1),
            &QcFunction::constant(2.0),
            None,
            &[(1.0, 4.0)],
            &quad(),
        )
        .unwrap();
        let pair = rs.iter().find(|r| r.id == "moment-p1-q4").unwrap();
        assert_eq!(pair.status, CheckStatus::Pass);
        assert_abs_diff_eq!(pair.lhs.value, 2.0, epsilon = 1e-8);
        let dev = rs.iter().find(|r| r.id == "deviation-constant").unwrap();
        assert_eq!(dev.status, CheckStatus::Inconclusive);
        assert!(dev.witness.contains("skipped"));
    }

    #[test]
    fn negative_suite_max_floor() {
        let f = QcFunction::max_floor(QcFunction::radial(1.0).unwrap(), 1.0);
        let rs = check_negative_suite(
            &Measure::exp_symmetric(),
            &f,
            None,
            &[0.3],
            0.1,
            &quad(),
        )
        .unwrap();
        let neg = rs.iter().find(|r| r.id == "negative-moment-p0.3").unwrap();
        assert_eq!(neg.status, CheckStatus::Pass);
        // beta = 2/(2 log 2) = 1/log 2; median of max(|x|,1) is 1.
        assert_abs_diff_eq!(neg.lhs.value, 1.0, epsilon = 1e-9);
        assert!(neg.witness.contains("beta 1.44269"));
        let sb = rs.iter().find(|r| r.id == "small-ball").unwrap();
        assert_eq!(sb.status, CheckStatus::Pass);
        assert!(sb.lhs.value <= 1.0);
    }

    #[test]
    fn negative_suite_uniform_smooth() {
        let m = Measure::uniform_on_body(interval(1.0)).unwrap();
        let f = QcFunction::shifted_radial(0.01, 0.5).unwrap();
        let rs = check_negative_suite(&m, &f, None, &[0.2], 0.1, &quad()).unwrap();
        for r in &rs {
            assert_eq!(r.status, CheckStatus::Pass, "{} failed: {}", r.id, r.witness);
        }
    }

    #[test]
    fn negative_suite_rejects_vanishing_f() {
        let err = check_negative_suite(
            &Measure::exp_symmetric(),
            &QcFunction::radial(1.0).unwrap(),
            None,
            &[0.3],
            0.1,
            &quad(),
        );
        assert!(matches!(err, Err(DilatioError::Domain(_))));
    }

    #[test]
    fn isoperimetry_gaussian_interval() {
        let rs = check_isoperimetry(
            &Measure::gaussian_std(1),
            &interval(1.0),
            None,
            2.0,
            &quad(),
        )
        .unwrap();
        let by_id = |id: &str| rs.iter().find(|r| r.id == id).unwrap();
        let surf = by_id("iso-surface");
        assert_eq!(surf.status, CheckStatus::Pass);
        assert_abs_diff_eq!(surf.lhs.value, 0.2741352461, epsilon = 1e-6);
        assert_abs_diff_eq!(surf.rhs.value, 0.4839414490, epsilon = 1e-6);
        let direct = by_id("iso-direct");
        assert_eq!(direct.status, CheckStatus::Pass);
        assert_abs_diff_eq!(direct.lhs.value, 0.3642326293, epsilon = 1e-6);
        let bridge = by_id("iso-bridge");
        assert_eq!(bridge.status, CheckStatus::Pass);
        // mu* = 2 R mu+ holds with equality for the interval.
        assert_abs_diff_eq!(bridge.lhs.value, bridge.rhs.value, epsilon = 1e-4);
    }

    #[test]
    fn isoperimetry_uniform_closed_forms() {
        let m = Measure::uniform_on_body(interval(1.0)).unwrap();
        let rs = check_isoperimetry(&m, &interval(0.5), None, 2.0, &quad()).unwrap();
        for r in &rs {
            assert_eq!(r.status, CheckStatus::Pass, "{} failed: {}", r.id, r.witness);
        }
        let direct = rs.iter().find(|r| r.id == "iso-direct").unwrap();
        // -(2/(2*0.5)) * 0.5 * log(0.5) = 2 log 2 * 0.5 = log 2.
        assert_abs_diff_eq!(direct.lhs.value, std::f64::consts::LN_2, epsilon = 1e-6);
        assert_abs_diff_eq!(direct.rhs.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn coarea_positive_equality() {
        let r = check_coarea(
            &Measure::exp_symmetric(),
            &QcFunction::radial(1.0).unwrap(),
            1.0,
            CoareaSign::Positive,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert_abs_diff_eq!(r.lhs.value, 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(r.rhs.value, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn coarea_negative_max_floor() {
        let f = QcFunction::max_floor(QcFunction::radial(1.0).unwrap(), 1.0);
        let r = check_coarea(
            &Measure::gaussian_std(1),
            &f,
            1.0,
            CoareaSign::Negative,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
    }

    #[test]
    fn reconstruction_gaussian_interval() {
        let (r, rows) = reconstruct_dilation(
            &Measure::gaussian_std(1),
            &interval(1.0),
            None,
            None,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass, "witness: {}", r.witness);
        assert_eq!(rows.len(), 9);
        // kappa * entropy limit recovers -2 (1-mu) log(1-mu); the Phi
        // integral limit recovers mu*(K).
        assert_abs_diff_eq!(r.lhs.value, 0.72864, epsilon = 2e-2);
        assert_abs_diff_eq!(r.rhs.value, 0.96789, epsilon = 2e-2);
        // The sigma-ladder entropies increase toward the limit.
        assert!(rows.windows(2).all(|w| w[1].entropy >= w[0].entropy - 1e-9));
    }

    #[test]
    fn reconstruction_symmetric_exponential_equality() {
        let (r, _) = reconstruct_dilation(
            &Measure::exp_symmetric(),
            &interval(1.0),
            None,
            None,
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass, "witness: {}", r.witness);
        let e1 = (-1.0f64).exp();
        // Equality case: both limits sit at 2/e.
        assert_abs_diff_eq!(r.lhs.value, 2.0 * e1, epsilon = 2e-2);
        assert_abs_diff_eq!(r.rhs.value, 2.0 * e1, epsilon = 2e-2);
        assert!(r.margin.abs() < 2e-2);
    }

    #[test]
    fn stability_perturbation_cosine() {
        let z = 1.0 + 0.2 * (-0.5f64).exp();
        let h: ScalarField = std::sync::Arc::new(move |x: &[f64]| (1.0 + 0.2 * x[0].cos()) / z);
        let r = check_stability(
            StabilityMode::Perturbation {
                base: Measure::gaussian_std(1),
                h,
                bound: 1.5,
                body: interval(1.0),
            },
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass, "witness: {}", r.witness);
        assert_abs_diff_eq!(r.kappa.as_ref().unwrap().value, 2.0 / 2.25, epsilon = 1e-12);
    }

    #[test]
    fn stability_tensor_harmonic_square() {
        let r = check_stability(
            StabilityMode::TensorHarmonic {
                first: Measure::exp_symmetric(),
                second: Measure::exp_symmetric(),
                body: SymmetricConvexBody::centered_box(vec![1.0, 1.0]).unwrap(),
            },
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass, "witness: {}", r.witness);
        // Harmonic combination of two 2's is 1.
        assert_abs_diff_eq!(r.kappa.as_ref().unwrap().value, 1.0, epsilon = 1e-12);
        let e1 = (-1.0f64).exp();
        let mu = (1.0 - e1) * (1.0 - e1);
        assert_abs_diff_eq!(r.lhs.value, -(1.0 - mu) * (1.0 - mu).ln(), epsilon = 1e-4);
    }

    #[test]
    fn stability_tensor_min_functional() {
        let r = check_stability(
            StabilityMode::TensorMin {
                first: Measure::exp_symmetric(),
                second: Measure::exp_symmetric(),
                f: QcFunction::radial(2.0).unwrap(),
            },
            &quad(),
        )
        .unwrap();
        assert_eq!(r.status, CheckStatus::Pass, "witness: {}", r.witness);
        assert_abs_diff_eq!(r.kappa.as_ref().unwrap().value, 2.0, epsilon = 1e-12);
        // (1/2) int 4 |x|^2 = 2 * (2 + 2) = 8 for the product of two
        // symmetric exponentials.
        assert_abs_diff_eq!(r.rhs.value, 8.0, epsilon = 1e-4);
    }

    #[test]
    fn stability_rejects_lopsided_body() {
        // An off-axis ellipse-like polytope is not sign-flip invariant.
        let slanted = SymmetricConvexBody::h_polytope(
            2,
            vec![(vec![1.0, 1.0], 1.0), (vec![1.0, -0.2], 1.0)],
        )
        .unwrap();
        let err = check_stability(
            StabilityMode::TensorHarmonic {
                first: Measure::exp_symmetric(),
                second: Measure::exp_symmetric(),
                body: slanted,
            },
            &quad(),
        );
        assert!(matches!(err, Err(DilatioError::Domain(_))));
    }

    #[test]
    fn sharpness_probe_suite() {
        let rs = sharpness_probes(&quad()).unwrap();
        assert_eq!(rs.len(), 4);
        let ids: Vec<&str> = rs.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(
            ids,
            vec![
                "sharpness-borell-tail",
                "sharpness-gaussian-kappa",
                "sharpness-one-sided-exponential",
                "sharpness-symmetric-exponential"
            ]
        );
        for r in &rs {
            assert_eq!(r.status, CheckStatus::Pass, "{} failed: {}", r.id, r.witness);
        }
        let tail = rs.iter().find(|r| r.id == "sharpness-borell-tail").unwrap();
        // Fitted decay rate must be strictly positive.
        assert!(tail.lhs.value < -0.5);
        let sym = rs
            .iter()
            .find(|r| r.id == "sharpness-symmetric-exponential")
            .unwrap();
        assert!(sym.lhs.value < 1e-5);
    }
}
