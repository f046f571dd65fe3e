//! Numeric evaluation of the functionals appearing in the dilation
//! inequalities: entropy, Fisher information, L^p and Orlicz norms, the
//! Levy mean, dilation area, perimeter, boundary moment integrals, 1-d
//! quadratic Wasserstein distance and the co-area pairing.

use crate::budget::{EstimationBudget, Estimate, Method};
use crate::error::{DilatioError, Result};
use crate::functions::{QcFunction, QcKind};
use crate::geometry::{norm2, SymmetricConvexBody};
use crate::measures::{Measure, MeasureKind, ScalarField};
use crate::quad::{extrapolate_to_zero, gauss_legendre, integrate};
use std::sync::atomic::{AtomicBool, Ordering};

/// Default shrink ladder for dilation-area quotients under quadrature.
pub fn dilation_ladder() -> Vec<f64> {
    (5..=14).map(|k| 0.5f64.powi(k)).collect()
}

/// Coarser and shorter ladder used under Monte Carlo: each rung carries
/// counting noise of order 1/(samples * eps), and the extrapolation
/// tableau amplifies the noise of its deepest rungs, so the ladder stops
/// while that noise is still far below the target accuracy.
fn monte_carlo_ladder() -> Vec<f64> {
    (3..=6).map(|k| 0.5f64.powi(k)).collect()
}

/// Ent(f) = int f log f - (int f) log(int f), with 0 log 0 = 0.
pub fn entropy(f: &QcFunction, m: &Measure, budget: &EstimationBudget) -> Result<Estimate> {
    let mean = m.expectation(|x| f.eval(x), budget)?;
    if mean.value <= 1e-12 {
        return Err(DilatioError::DegenerateInput(format!(
            "integral of f is {} (entropy undefined)",
            mean.value
        )));
    }
    let flogf = m.expectation(
        |x| {
            let v = f.eval(x);
            if v <= 0.0 {
                0.0
            } else {
                v * v.ln()
            }
        },
        budget,
    )?;
    let value = flogf.value - mean.value * mean.value.ln();
    // d/dm [v - m log m] = -(log m + 1).
    let err = flogf.std_error + mean.std_error * (mean.value.ln().abs() + 1.0);
    Ok(Estimate {
        value,
        std_error: err,
        method: mean.method.clone(),
        seed: budget.seed,
    })
}

/// Variational lower bound max_phi [ int f phi - log int e^phi ] for f
/// rescaled to unit mean; always at most the entropy.
pub fn entropy_dual_lower_bound(
    f: &QcFunction,
    m: &Measure,
    certificates: &[ScalarField],
    budget: &EstimationBudget,
) -> Result<Estimate> {
    if certificates.is_empty() {
        return Err(DilatioError::Domain("no dual certificates supplied".into()));
    }
    let mean = m.expectation(|x| f.eval(x), budget)?;
    if mean.value <= 1e-12 {
        return Err(DilatioError::DegenerateInput(
            "integral of f vanishes".into(),
        ));
    }
    let mut best: Option<Estimate> = None;
    for phi in certificates {
        let pairing = m.expectation(|x| f.eval(x) / mean.value * phi(x), budget)?;
        let log_mgf = m.expectation(|x| phi(x).exp(), budget)?;
        if !(log_mgf.value.is_finite() && log_mgf.value > 0.0) {
            continue;
        }
        let value = pairing.value - log_mgf.value.ln();
        let err = pairing.std_error + log_mgf.std_error / log_mgf.value;
        let cand = Estimate {
            value: mean.value * value,
            std_error: mean.value * err,
            method: pairing.method.clone(),
            seed: budget.seed,
        };
        if best.as_ref().map_or(true, |b| cand.value > b.value) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| DilatioError::Domain("all certificates produced divergent normalizers".into()))
}

/// Fisher information int |grad f|^2 / f dmu.
pub fn fisher_information(
    f: &QcFunction,
    m: &Measure,
    budget: &EstimationBudget,
) -> Result<Estimate> {
    let singular = AtomicBool::new(false);
    let est = m.expectation(
        |x| {
            let eg = match f.eval_and_grad(x) {
                Ok(eg) => eg,
                Err(_) => {
                    singular.store(true, Ordering::Relaxed);
                    return 0.0;
                }
            };
            let g2: f64 = eg
                .gradient
                .as_ref()
                .map(|g| g.iter().map(|v| v * v).sum())
                .unwrap_or(0.0);
            if eg.value <= 1e-12 {
                if g2 > 1e-8 {
                    singular.store(true, Ordering::Relaxed);
                }
                0.0
            } else {
                g2 / eg.value
            }
        },
        budget,
    )?;
    if singular.load(Ordering::Relaxed) {
        return Err(DilatioError::Inconclusive(
            "integrand singular: f vanishes where its gradient does not".into(),
        ));
    }
    Ok(est)
}

/// (int f^p dmu)^{1/p} for p != 0; negative p requires f positive, which
/// quasi-convexity reduces to f(0) > 0.
pub fn lp_norm(f: &QcFunction, m: &Measure, p: f64, budget: &EstimationBudget) -> Result<Estimate> {
    if p == 0.0 {
        return Err(DilatioError::Domain("norm exponent must be nonzero".into()));
    }
    if p < 0.0 {
        let f0 = f.eval(&vec![0.0; m.dim()]);
        if f0 <= 0.0 {
            return Err(DilatioError::Domain(format!(
                "negative exponents need f > 0, but f(0) = {f0}"
            )));
        }
    }
    let moment = m.expectation(|x| f.eval(x).abs().powf(p), budget)?;
    if moment.value <= 0.0 {
        return Ok(Estimate {
            value: 0.0,
            std_error: moment.std_error,
            method: moment.method,
            seed: budget.seed,
        });
    }
    let value = moment.value.powf(1.0 / p);
    let err = moment.std_error * (value / moment.value / p).abs();
    Ok(Estimate {
        value,
        std_error: err,
        method: moment.method,
        seed: budget.seed,
    })
}

/// Orlicz norm via the defining root-find, cross-checked against the
/// equivalent sup-of-moments form.
#[derive(Debug, Clone)]
pub struct OrliczEstimate {
    pub norm: Estimate,
    /// sup over a p-grid of ||f||_p / p^{1/alpha}.
    pub sup_form: f64,
    /// norm / sup_form; equivalence holds up to absolute constants.
    pub ratio: f64,
}

pub fn orlicz_norm(
    f: &QcFunction,
    m: &Measure,
    alpha: f64,
    budget: &EstimationBudget,
) -> Result<OrliczEstimate> {
    if alpha < 1.0 {
        return Err(DilatioError::Domain(format!(
            "Orlicz exponent must be at least 1, got {alpha}"
        )));
    }
    // F(t) = int exp((|f|/t)^alpha) dmu, decreasing in t with limit 1.
    // The exponential and the density are combined in log space so the
    // tails cannot produce inf * 0. Only the comparison against 2
    // matters, so a loose tolerance suffices.
    let quad = budget.resolve(m.dim()) == Method::Quadrature;
    let eval_f = |t: f64| -> f64 {
        let value = if quad {
            m.integral_with_log_density(
                |x, ld| {
                    let e = (f.eval(x).abs() / t).powf(alpha) + ld;
                    if e > 700.0 {
                        f64::INFINITY
                    } else if e < -745.0 {
                        0.0
                    } else {
                        e.exp()
                    }
                },
                budget.quad_tol.max(1e-7),
            )
            .map(|(v, _)| v)
        } else {
            m.expectation(
                |x| {
                    let a = (f.eval(x).abs() / t).powf(alpha);
                    if a > 700.0 {
                        f64::INFINITY
                    } else {
                        a.exp()
                    }
                },
                budget,
            )
            .map(|e| e.value)
        };
        match value {
            Ok(v) if v.is_finite() && v < 1e9 => v,
            _ => f64::INFINITY,
        }
    };
    let scale = lp_norm(f, m, 1.0, budget)?.value.max(1e-12);
    let mut hi = scale;
    let mut doublings = 0;
    while eval_f(hi) > 2.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 80 {
            return Err(DilatioError::Inconclusive(
                "Orlicz integral exceeds 2 for every tested scale (infinite norm)".into(),
            ));
        }
    }
    let mut lo = hi;
    while eval_f(lo) <= 2.0 && lo > 1e-14 * scale {
        lo *= 0.5;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval_f(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-8 * hi {
            break;
        }
    }
    let norm = Estimate::quadrature(0.5 * (lo + hi), 0.5 * (hi - lo)).with_tag("orlicz-root");

    let sup_budget = EstimationBudget {
        quad_tol: budget.quad_tol.max(1e-8),
        ..*budget
    };
    let mut sup_form: f64 = 0.0;
    let mut p = alpha;
    while p <= 40.0 {
        let np = lp_norm(f, m, p, &sup_budget)?.value;
        sup_form = sup_form.max(np / p.powf(1.0 / alpha));
        p += 1.0;
    }
    let ratio = if sup_form > 0.0 {
        norm.value / sup_form
    } else {
        f64::INFINITY
    };
    Ok(OrliczEstimate {
        norm,
        sup_form,
        ratio,
    })
}

/// Levy mean: a median of f under the measure.
pub fn levy_mean(f: &QcFunction, m: &Measure, budget: &EstimationBudget) -> Result<f64> {
    if m.dim() == 1 && budget.resolve(1) == Method::Quadrature {
        // mu({f <= t}) through the ray-monotone sublevel radius.
        let f0 = f.eval(&[0.0]);
        let radius_at = |t: f64| -> f64 {
            if f.eval(&[0.0]) > t {
                return 0.0;
            }
            let mut hi = 1.0;
            while f.eval(&[hi]) <= t && hi < 1e12 {
                hi *= 2.0;
            }
            if hi >= 1e12 {
                return f64::INFINITY;
            }
            let mut lo = 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if f.eval(&[mid]) <= t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mass_below = |t: f64| -> Result<f64> {
            let r = radius_at(t);
            if r == 0.0 {
                return Ok(0.0);
            }
            if !r.is_finite() {
                return Ok(1.0);
            }
            Ok(m.cdf_1d(r)? - m.cdf_1d(-r)?)
        };
        let mut t_lo = f0;
        let mut t_hi = f0.abs().max(1.0);
        while mass_below(t_hi)? < 0.5 {
            t_hi *= 2.0;
            if t_hi > 1e12 {
                return Err(DilatioError::Inconclusive(
                    "median bracket did not close".into(),
                ));
            }
        }
        if mass_below(t_lo)? >= 0.5 {
            return Ok(t_lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (t_lo + t_hi);
            if mass_below(mid)? < 0.5 {
                t_lo = mid;
            } else {
                t_hi = mid;
            }
            if t_hi - t_lo <= 1e-12 * (1.0 + t_hi.abs()) {
                break;
            }
        }
        return Ok(0.5 * (t_lo + t_hi));
    }
    let n = if budget.samples == 0 {
        100_000
    } else {
        budget.samples as usize
    };
    let mut vals: Vec<f64> = m.sample(n, budget.seed)?.iter().map(|x| f.eval(x)).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals[vals.len() / 2])
}

/// mu(K_eps) - mu(K) computed as a direct shell integral to avoid
/// catastrophic cancellation between two near-equal masses.
fn shell_mass(m: &Measure, k: &SymmetricConvexBody, eps: f64, tol: f64) -> Result<f64> {
    let s = (1.0 + eps) / (1.0 - eps);
    match m.dim() {
        1 => {
            let t = k.radial(&[1.0]);
            if !t.is_finite() {
                return Ok(0.0);
            }
            let (lo, hi) = m.support_1d()?;
            let mut total = 0.0;
            // Right shell (t, st) and left shell (-st, -t), clipped to
            // the support.
            let (a, b) = (t.max(lo), (s * t).min(hi));
            if b > a {
                total += integrate(|x| m.density(&[x]), a, b, tol).0;
            }
            let (a, b) = ((-s * t).max(lo), (-t).min(hi));
            if b > a {
                total += integrate(|x| m.density(&[x]), a, b, tol).0;
            }
            Ok(total)
        }
        2 => {
            let (v, _) = integrate(
                |theta| {
                    let u = [theta.cos(), theta.sin()];
                    let r = k.radial(&u);
                    if !(r.is_finite() && r > 0.0) {
                        return 0.0;
                    }
                    integrate(
                        |rr| {
                            let p = [rr * u[0], rr * u[1]];
                            let d = m.density(&p);
                            if d == 0.0 {
                                0.0
                            } else {
                                d * rr
                            }
                        },
                        r,
                        s * r,
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

/// Dilation area mu*(K): the small-eps limit of [mu(K_eps) - mu(K)]/eps.
pub fn dilation_area(
    m: &Measure,
    k: &SymmetricConvexBody,
    ladder: Option<&[f64]>,
    budget: &EstimationBudget,
) -> Result<Estimate> {
    if k.dim() != m.dim() {
        return Err(DilatioError::Domain(format!(
            "body dimension {} != measure dimension {}",
            k.dim(),
            m.dim()
        )));
    }
    let method = budget.resolve(m.dim());
    let default = if method == Method::Quadrature {
        dilation_ladder()
    } else {
        monte_carlo_ladder()
    };
    let ladder = ladder.unwrap_or(&default);
    if ladder.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(DilatioError::Domain(
            "ladder values must lie in (0,1)".into(),
        ));
    }
    let mut eps: Vec<f64> = ladder.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let (points, stat_err) = match method {
        Method::Quadrature => {
            let pts: Vec<(f64, f64)> = eps
                .iter()
                .map(|&e| Ok((e, shell_mass(m, k, e, budget.quad_tol)? / e)))
                .collect::<Result<_>>()?;
            (pts, 0.0)
        }
        _ => {
            if budget.samples == 0 {
                return Err(DilatioError::Domain("zero Monte Carlo samples".into()));
            }
            // Coupled sampling: one sample set scores every shell, so the
            // quotient sequence is smooth in eps. In one dimension the
            // samples are stratified through the inverse CDF: shell hits
            // become interval hits in u-space and the indicator variance
            // drops from O(1/sqrt n) to O(1/n).
            let gauges: Vec<f64> = if m.dim() == 1 {
                use rand::{Rng, SeedableRng};
                let q = m.quantile_fn()?;
                let n = budget.samples as usize;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(budget.seed);
                (0..n)
                    .map(|i| {
                        let u = (i as f64 + rng.gen::<f64>()) / n as f64;
                        k.gauge(&[q(u.clamp(1e-15, 1.0 - 1e-15))])
                    })
                    .collect()
            } else {
                m.sample(budget.samples as usize, budget.seed)?
                    .iter()
                    .map(|x| k.gauge(x))
                    .collect()
            };
            let n = gauges.len() as f64;
            let mut pts = Vec::with_capacity(eps.len());
            let mut worst_se: f64 = 0.0;
            for &e in &eps {
                let s = (1.0 + e) / (1.0 - e);
                let hits = gauges.iter().filter(|&&g| g >= 1.0 && g < s).count() as f64;
                let p = hits / n;
                pts.push((e, p / e));
                worst_se = worst_se.max((p * (1.0 - p) / n).sqrt() / e);
            }
            (pts, worst_se)
        }
    };

    // The quotient of a convex shell is expected to settle monotonically;
    // a sequence that swings after the first rungs is inconclusive.
    let (limit, resid) = extrapolate_to_zero(&points);
    let last = points.last().unwrap().1;
    let scale = 1.0 + last.abs();
    if !limit.is_finite() || (limit - last).abs() > 0.05 * scale + 3.0 * stat_err {
        return Err(DilatioError::Inconclusive(format!(
            "dilation quotient sequence did not settle (last {last}, extrapolated {limit})"
        )));
    }
    let tag = match method {
        Method::Quadrature => "shell-quadrature-extrapolated",
        _ => "coupled-monte-carlo-extrapolated",
    };
    Ok(Estimate {
        value: limit.max(0.0),
        std_error: resid + stat_err,
        method: tag.to_string(),
        seed: budget.seed,
    })
}

/// Dilation area of the one-sided interval (0, x) under a 1-d measure
/// supported on the positive half-line, where the general dilation of the
/// set is (0, x/(1-eps)). Used by the sharpness probe.
pub fn one_sided_interval_dilation_area(
    m: &Measure,
    x: f64,
    budget: &EstimationBudget,
) -> Result<Estimate> {
    let (lo, _) = m.support_1d()?;
    if lo < 0.0 {
        return Err(DilatioError::Unsupported(
            "one-sided probe needs a measure supported on (0, infinity)".into(),
        ));
    }
    if x <= 0.0 {
        return Err(DilatioError::Domain(format!(
            "interval endpoint must be positive, got {x}"
        )));
    }
    let points: Vec<(f64, f64)> = dilation_ladder()
        .iter()
        .rev()
        .map(|&e| {
            let grown = x / (1.0 - e);
            let (shell, _) = integrate(|t| m.density(&[t]), x, grown, budget.quad_tol);
            (e, shell / e)
        })
        .collect();
    let mut pts = points;
    pts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let (limit, resid) = extrapolate_to_zero(&pts);
    Ok(Estimate::quadrature(limit.max(0.0), resid).with_tag("one-sided-shell"))
}

/// mu-perimeter via boundary quadrature of the density: the boundary
/// integral of e^{-phi} equals the Minkowski-content liminf for the
/// shipped bodies.
pub fn perimeter(
    m: &Measure,
    k: &SymmetricConvexBody,
    resolution: usize,
    _budget: &EstimationBudget,
) -> Result<Estimate> {
    boundary_integral(m, k, resolution, |_x| 1.0)
}

/// Boundary integral int_{dK} <x, eta> |x|^{p'} e^{-phi} dsigma.
pub fn surface_moment_integral(
    m: &Measure,
    k: &SymmetricConvexBody,
    p_prime: f64,
    resolution: usize,
) -> Result<Estimate> {
    boundary_integral_with_normal(m, k, resolution, |x, eta| {
        let dotv: f64 = x.iter().zip(eta).map(|(a, b)| a * b).sum();
        dotv * norm2(x).powf(p_prime)
    })
}

fn boundary_integral<W>(
    m: &Measure,
    k: &SymmetricConvexBody,
    resolution: usize,
    weight: W,
) -> Result<Estimate>
where
    W: Fn(&[f64]) -> f64,
{
    boundary_integral_with_normal(m, k, resolution, |x, _| weight(x))
}

fn boundary_integral_with_normal<W>(
    m: &Measure,
    k: &SymmetricConvexBody,
    resolution: usize,
    weight: W,
) -> Result<Estimate>
where
    W: Fn(&[f64], &[f64]) -> f64,
{
    if k.dim() != m.dim() {
        return Err(DilatioError::Domain(format!(
            "body dimension {} != measure dimension {}",
            k.dim(),
            m.dim()
        )));
    }
    let at = |res: usize| -> Result<f64> {
        let elements = k.boundary_quadrature(res)?;
        Ok(elements
            .iter()
            .map(|el| el.weight * weight(&el.point, &el.normal) * m.density(&el.point))
            .sum())
    };
    let coarse = at(resolution)?;
    let fine = at(resolution * 2)?;
    Ok(Estimate::quadrature(fine, (fine - coarse).abs()).with_tag("boundary-quadrature"))
}

/// Quadratic Wasserstein distance between 1-d measures via the quantile
/// coupling; identical standard Gaussians in any dimension give 0.
pub fn w2_distance_1d(m1: &Measure, m2: &Measure, budget: &EstimationBudget) -> Result<Estimate> {
    if let (MeasureKind::GaussianStd { dim: d1 }, MeasureKind::GaussianStd { dim: d2 }) =
        (&m1.kind, &m2.kind)
    {
        if d1 == d2 {
            return Ok(Estimate::exact(0.0, "identical-gaussians"));
        }
    }
    if m1.dim() != 1 || m2.dim() != 1 {
        return Err(DilatioError::Unsupported(
            "transport distance is 1-d only (apart from identical Gaussians)".into(),
        ));
    }
    let q1 = m1.quantile_fn()?;
    let q2 = m2.quantile_fn()?;
    let (v, e) = integrate(
        |u| {
            // Clamp away from the endpoints where inverse-CDF evaluation
            // loses its footing; the clipped tail mass is negligible for
            // finite second moments.
            let u = u.clamp(1e-12, 1.0 - 1e-12);
            let d = q1(u) - q2(u);
            d * d
        },
        0.0,
        1.0,
        budget.quad_tol.max(1e-10),
    );
    if !v.is_finite() {
        return Err(DilatioError::Inconclusive(
            "quantile coupling integral diverged".into(),
        ));
    }
    Ok(Estimate::quadrature(v.max(0.0).sqrt(), e).with_tag("quantile-coupling"))
}

/// Symbolic description of a sublevel set {f < t}.
enum Sublevel {
    Empty,
    Whole,
    Body(SymmetricConvexBody),
}

fn sublevel_body(f: &QcFunction, t: f64, dim: usize) -> Result<Sublevel> {
    if t <= 0.0 {
        return Ok(Sublevel::Empty);
    }
    match &f.kind {
        QcKind::GaugePower { body, p } => Ok(Sublevel::Body(body.scale(t.powf(1.0 / p)))),
        QcKind::Radial { p } => Ok(Sublevel::Body(SymmetricConvexBody::ball(
            dim,
            t.powf(1.0 / p),
        )?)),
        QcKind::ShiftedRadial { c, s } => {
            if *s <= 0.0 {
                return Err(DilatioError::Unsupported(
                    "sublevel solve needs an increasing profile".into(),
                ));
            }
            let r2 = t.powf(1.0 / s) - c;
            if r2 <= 0.0 {
                Ok(Sublevel::Empty)
            } else {
                Ok(Sublevel::Body(SymmetricConvexBody::ball(dim, r2.sqrt())?))
            }
        }
        QcKind::MinCap { inner, level } => {
            if t > *level {
                Ok(Sublevel::Whole)
            } else {
                sublevel_body(inner, t, dim)
            }
        }
        QcKind::MaxFloor { inner, level } => {
            if t <= *level {
                Ok(Sublevel::Empty)
            } else {
                sublevel_body(inner, t, dim)
            }
        }
        QcKind::FSigma { body, sigma, delta } => {
            if t > 1.0 - sigma {
                Ok(Sublevel::Whole)
            } else {
                Ok(Sublevel::Body(body.scale(1.0 + delta * t)))
            }
        }
        QcKind::Custom { .. } => Err(DilatioError::Unsupported(
            "sublevel bodies are analytic kinds only".into(),
        )),
    }
}

fn dilation_area_of_sublevel(
    m: &Measure,
    f: &QcFunction,
    t: f64,
    budget: &EstimationBudget,
) -> Result<f64> {
    match sublevel_body(f, t, m.dim())? {
        Sublevel::Empty | Sublevel::Whole => Ok(0.0),
        Sublevel::Body(b) => Ok(dilation_area(m, &b, None, budget)?.value),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoareaSign {
    Positive,
    Negative,
}

/// Both sides of the co-area comparison. Positive sign:
/// lhs = int_0^inf t^{p-1} mu*({f < t}) dt, rhs = int f^{p-1} Phi_f dmu.
/// Negative sign replaces the sublevel sets by {1/f > t} and the weight
/// by f^{-p-1}; it needs f bounded away from 0.
pub fn coarea_integral(
    m: &Measure,
    f: &QcFunction,
    p: f64,
    sign: CoareaSign,
    budget: &EstimationBudget,
) -> Result<(Estimate, Estimate)> {
    if p <= 0.0 {
        return Err(DilatioError::Domain(format!(
            "co-area exponent must be positive, got {p}"
        )));
    }
    let f0 = f.eval(&vec![0.0; m.dim()]);
    if sign == CoareaSign::Negative && f0 <= 0.0 {
        return Err(DilatioError::Domain(format!(
            "negative co-area needs f > 0, but f(0) = {f0}"
        )));
    }

    // Right-hand side: int f^{p-1} Phi_f dmu or int f^{-p-1} Phi_f dmu.
    let violation = AtomicBool::new(false);
    let exponent = match sign {
        CoareaSign::Positive => p - 1.0,
        CoareaSign::Negative => -p - 1.0,
    };
    let rhs = m.expectation(
        |x| {
            let v = f.eval(x);
            let phi = match f.phi(x, None) {
                Ok(e) => e.value,
                Err(_) => {
                    violation.store(true, Ordering::Relaxed);
                    return 0.0;
                }
            };
            if phi == 0.0 {
                return 0.0;
            }
            if v <= 0.0 {
                // t^{p-1} weight vanishes at the bottom level for p > 1;
                // for p <= 1 a zero of f with positive Phi is singular.
                if exponent >= 0.0 {
                    return if exponent == 0.0 { phi } else { 0.0 };
                }
                violation.store(true, Ordering::Relaxed);
                return 0.0;
            }
            v.powf(exponent) * phi
        },
        budget,
    )?;
    if violation.load(Ordering::Relaxed) {
        return Err(DilatioError::Inconclusive(
            "quasi-convexity violation or singular weight while integrating Phi".into(),
        ));
    }

    // Left-hand side: t-integral of dilation areas over a Gauss-Legendre
    // grid on [0, t_max], where t_max captures all but 1e-10 of the mass.
    let sub_budget = EstimationBudget {
        quad_tol: budget.quad_tol.max(1e-9),
        ..*budget
    };
    let mass_below = |t: f64| -> Result<f64> {
        match sublevel_body(f, t, m.dim())? {
            Sublevel::Empty => Ok(0.0),
            Sublevel::Whole => Ok(1.0),
            Sublevel::Body(b) => Ok(m.mass_of_body(&b, &sub_budget)?.value),
        }
    };
    let level_of = |t: f64| -> f64 {
        // For the negative sign, the sets {1/f > t} = {f < 1/t}.
        match sign {
            CoareaSign::Positive => t,
            CoareaSign::Negative => 1.0 / t,
        }
    };
    let t_max = match sign {
        CoareaSign::Positive => {
            let mut t = f0.abs().max(1.0);
            let mut steps = 0;
            // The discarded tail of the t-integral is of the order of the
            // missing mass, so the cutoff must sit well below the final
            // comparison tolerance.
            while mass_below(t)? < 1.0 - 1e-10 {
                t *= 2.0;
                steps += 1;
                if steps > 60 {
                    break;
                }
            }
            t
        }
        // The negative-sign sets are empty once t >= 1/f(0).
        CoareaSign::Negative => 1.0 / f0,
    };
    let (nodes, weights) = gauss_legendre(256);
    let c = 0.5 * t_max;
    let mut lhs_val = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let t = c + c * x;
        if t <= 0.0 {
            continue;
        }
        let area = dilation_area_of_sublevel(m, f, level_of(t), &sub_budget)?;
        lhs_val += w * t.powf(p - 1.0) * area;
    }
    lhs_val *= c;
    let lhs = Estimate::quadrature(lhs_val, 0.0).with_tag("coarea-grid");
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Smoothness;
    use crate::quad::integrate_unbounded;
    use approx::assert_abs_diff_eq;
    use statrs::function::gamma::digamma;
    use std::sync::Arc;

    fn quad() -> EstimationBudget {
        EstimationBudget::quadrature()
    }

    #[test]
    fn entropy_of_constant_is_zero() {
        let f = QcFunction::constant(2.5);
        let e = entropy(&f, &Measure::gaussian_std(1), &quad()).unwrap();
        assert_abs_diff_eq!(e.value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn entropy_of_square_under_gaussian() {
        let f = QcFunction::radial(2.0).unwrap();
        let e = entropy(&f, &Measure::gaussian_std(1), &quad()).unwrap();
        let oracle = digamma(1.5) + std::f64::consts::LN_2;
        assert_abs_diff_eq!(e.value, oracle, epsilon = 1e-8);
        assert_abs_diff_eq!(e.value, 0.72963, epsilon = 1e-5);
    }

    #[test]
    fn entropy_scaling() {
        let f = QcFunction::radial(2.0).unwrap();
        let scaled = QcFunction::custom(
            Arc::new(|x: &[f64]| 3.0 * x[0] * x[0]),
            None,
            Smoothness::LocallyLipschitz,
        );
        let m = Measure::gaussian_std(1);
        let e1 = entropy(&f, &m, &quad()).unwrap().value;
        let e3 = entropy(&scaled, &m, &quad()).unwrap().value;
        assert_abs_diff_eq!(e3, 3.0 * e1, epsilon = 1e-8);
    }

    #[test]
    fn entropy_rejects_vanishing_f() {
        let f = QcFunction::constant(0.0);
        assert!(matches!(
            entropy(&f, &Measure::gaussian_std(1), &quad()),
            Err(DilatioError::DegenerateInput(_))
        ));
    }

    #[test]
    fn dual_lower_bound_matches_entropy_at_optimum() {
        let m = Measure::gaussian_std(1);
        // Bounded f so that log f is a usable certificate after clipping.
        let f = QcFunction::truncate(QcFunction::radial(2.0).unwrap(), 0.05, 20.0);
        let ent = entropy(&f, &m, &quad()).unwrap();
        let mean = m.expectation(|x| f.eval(x), &quad()).unwrap().value;

        let fc = f.clone();
        let log_cert: ScalarField =
            Arc::new(move |x: &[f64]| (fc.eval(x) / mean).ln().clamp(-30.0, 30.0));
        let zero_cert: ScalarField = Arc::new(|_: &[f64]| 0.0);

        let with_zero =
            entropy_dual_lower_bound(&f, &m, std::slice::from_ref(&zero_cert), &quad()).unwrap();
        assert_abs_diff_eq!(with_zero.value, 0.0, epsilon = 1e-9);

        let best =
            entropy_dual_lower_bound(&f, &m, &[log_cert, zero_cert], &quad()).unwrap();
        assert!(best.value <= ent.value + 1e-8);
        assert_abs_diff_eq!(best.value, ent.value, epsilon = 1e-4);

        assert!(matches!(
            entropy_dual_lower_bound(&f, &m, &[], &quad()),
            Err(DilatioError::Domain(_))
        ));
    }

    #[test]
    fn fisher_information_examples() {
        let m = Measure::gaussian_std(1);
        let sq = QcFunction::radial(2.0).unwrap();
        assert_abs_diff_eq!(fisher_information(&sq, &m, &quad()).unwrap().value, 4.0, epsilon = 1e-6);

        let c = QcFunction::constant(5.0);
        assert_abs_diff_eq!(fisher_information(&c, &m, &quad()).unwrap().value, 0.0, epsilon = 1e-10);

        let shifted = QcFunction::shifted_radial(1.0, 1.0).unwrap();
        // Independent oracle: 4 (1 - E[1/(1+x^2)]) under the Gaussian.
        let (ex, _) = integrate_unbounded(
            |x| 1.0 / (1.0 + x * x) * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            1e-12,
        );
        let oracle = 4.0 * (1.0 - ex);
        let got = fisher_information(&shifted, &m, &quad()).unwrap().value;
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-7);
        assert_abs_diff_eq!(got, 1.37727, epsilon = 1e-4);
    }

    #[test]
    fn lp_norms_match_gamma_moments() {
        let nu2 = Measure::exp_symmetric();
        let f = QcFunction::radial(1.0).unwrap();
        // E|x|^p under nu2 is Gamma(p+1).
        assert_abs_diff_eq!(
            lp_norm(&f, &nu2, 2.0, &quad()).unwrap().value,
            2f64.sqrt(),
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            lp_norm(&f, &nu2, 3.0, &quad()).unwrap().value,
            6f64.powf(1.0 / 3.0),
            epsilon = 1e-8
        );
        let c = QcFunction::constant(2.5);
        assert_abs_diff_eq!(lp_norm(&c, &nu2, -2.0, &quad()).unwrap().value, 2.5, epsilon = 1e-9);

        // Hoelder monotonicity.
        let mut prev = 0.0;
        for p in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let v = lp_norm(&f, &nu2, p, &quad()).unwrap().value;
            assert!(v + 1e-9 >= prev);
            prev = v;
        }
        // Negative exponent needs positivity.
        assert!(lp_norm(&f, &nu2, -1.0, &quad()).is_err());
    }

    #[test]
    fn orlicz_norm_examples() {
        let nu2 = Measure::exp_symmetric();
        let f = QcFunction::radial(1.0).unwrap();
        // int e^{|x|/t} dnu2 = t/(t-1) for t > 1, which hits 2 at t = 2.
        let o = orlicz_norm(&f, &nu2, 1.0, &quad()).unwrap();
        assert_abs_diff_eq!(o.norm.value, 2.0, epsilon = 1e-6);
        assert!(o.ratio >= 1.0 / 8.0 && o.ratio <= 8.0, "ratio {}", o.ratio);

        let c = QcFunction::constant(3.0);
        let o = orlicz_norm(&c, &nu2, 1.0, &quad()).unwrap();
        assert_abs_diff_eq!(o.norm.value, 3.0 / std::f64::consts::LN_2, epsilon = 1e-6);

        let g1 = Measure::gaussian_std(1);
        let o = orlicz_norm(&f, &g1, 2.0, &quad()).unwrap();
        assert!(o.norm.value.is_finite() && o.norm.value > 0.0);
        assert!(o.ratio >= 1.0 / 8.0 && o.ratio <= 8.0, "ratio {}", o.ratio);
    }

    #[test]
    fn levy_mean_examples() {
        let g1 = Measure::gaussian_std(1);
        let f = QcFunction::radial(1.0).unwrap();
        let med = levy_mean(&f, &g1, &quad()).unwrap();
        assert_abs_diff_eq!(med, crate::measures::normal_quantile(0.75), epsilon = 1e-9);
        assert_abs_diff_eq!(med, 0.67449, epsilon = 1e-5);

        let c = QcFunction::constant(4.2);
        assert_abs_diff_eq!(levy_mean(&c, &g1, &quad()).unwrap(), 4.2, epsilon = 1e-9);

        let nu2 = Measure::exp_symmetric();
        let floored = QcFunction::max_floor(QcFunction::radial(1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(levy_mean(&floored, &nu2, &quad()).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn dilation_area_closed_forms() {
        let g1 = Measure::gaussian_std(1);
        let k = SymmetricConvexBody::interval(1.0).unwrap();
        let a = dilation_area(&g1, &k, None, &quad()).unwrap();
        let oracle = 4.0 * (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(a.value, oracle, epsilon = 1e-6);
        assert_abs_diff_eq!(a.value, 0.96789, epsilon = 1e-4);

        let nu2 = Measure::exp_symmetric();
        let t = 1.3;
        let k = SymmetricConvexBody::interval(t).unwrap();
        let a = dilation_area(&nu2, &k, None, &quad()).unwrap();
        assert_abs_diff_eq!(a.value, 2.0 * t * (-t).exp(), epsilon = 1e-6);

        let uni = Measure::uniform_on_body(SymmetricConvexBody::interval(1.0).unwrap()).unwrap();
        let k = SymmetricConvexBody::interval(0.5).unwrap();
        let a = dilation_area(&uni, &k, None, &quad()).unwrap();
        assert_abs_diff_eq!(a.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn dilation_area_disk_under_planar_gaussian() {
        // mu(rB) = 1 - e^{-r^2/2}, so the dilation area at r is
        // 2 r^2 e^{-r^2/2}.
        let g2 = Measure::gaussian_std(2);
        let disk = SymmetricConvexBody::ball(2, 1.0).unwrap();
        let a = dilation_area(&g2, &disk, None, &quad()).unwrap();
        assert_abs_diff_eq!(a.value, 2.0 * (-0.5f64).exp(), epsilon = 1e-5);
    }

    #[test]
    fn dilation_area_monte_carlo_three_dim() {
        let g3 = Measure::gaussian_std(3);
        let ball = SymmetricConvexBody::ball(3, 1.0).unwrap();
        let budget = EstimationBudget::monte_carlo(400_000, 9);
        let a = dilation_area(&g3, &ball, None, &budget).unwrap();
        // Radial mass F(r) = P(chi_3 <= r) gives the limit 2 r chi-pdf(r).
        let chi3_pdf = (2.0 / std::f64::consts::PI).sqrt() * (-0.5f64).exp();
        let oracle = 2.0 * chi3_pdf;
        assert!(
            (a.value - oracle).abs() <= 4.0 * a.std_error.max(1e-3),
            "got {} oracle {oracle} se {}",
            a.value,
            a.std_error
        );
    }

    #[test]
    fn one_sided_probe_equality_values() {
        let nu1 = Measure::exp_one_sided();
        for x in [1.0, 2.0, 0.37] {
            let a = one_sided_interval_dilation_area(&nu1, x, &quad()).unwrap();
            assert_abs_diff_eq!(a.value, x * (-x).exp(), epsilon = 1e-7);
        }
        assert!(one_sided_interval_dilation_area(&Measure::gaussian_std(1), 1.0, &quad()).is_err());
    }

    #[test]
    fn perimeter_examples() {
        let g1 = Measure::gaussian_std(1);
        let k = SymmetricConvexBody::interval(1.0).unwrap();
        let p = perimeter(&g1, &k, 512, &quad()).unwrap();
        let oracle = 2.0 * crate::measures::normal_pdf(1.0);
        assert_abs_diff_eq!(p.value, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(p.value, 0.48394, epsilon = 1e-5);

        let uni = Measure::uniform_on_body(SymmetricConvexBody::interval(1.0).unwrap()).unwrap();
        let k = SymmetricConvexBody::interval(0.5).unwrap();
        assert_abs_diff_eq!(perimeter(&uni, &k, 512, &quad()).unwrap().value, 1.0, epsilon = 1e-9);

        let nu2 = Measure::exp_symmetric();
        let t = 0.8;
        let k = SymmetricConvexBody::interval(t).unwrap();
        assert_abs_diff_eq!(
            perimeter(&nu2, &k, 512, &quad()).unwrap().value,
            (-t).exp(),
            epsilon = 1e-9
        );

        // Unit circle under the planar Gaussian: density is constant on
        // the circle, total length 2 pi.
        let g2 = Measure::gaussian_std(2);
        let disk = SymmetricConvexBody::ball(2, 1.0).unwrap();
        let p = perimeter(&g2, &disk, 2048, &quad()).unwrap();
        assert_abs_diff_eq!(p.value, (-0.5f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn dilation_area_bounded_by_perimeter() {
        // mu*(K) <= 2 R(K) mu^+(K) on bounded bodies.
        let g2 = Measure::gaussian_std(2);
        let disk = SymmetricConvexBody::ball(2, 1.0).unwrap();
        let a = dilation_area(&g2, &disk, None, &quad()).unwrap().value;
        let p = perimeter(&g2, &disk, 2048, &quad()).unwrap().value;
        let (_, big_r) = disk.radii().unwrap();
        assert!(a <= 2.0 * big_r * p + 1e-6);
        // The centered disk is in fact the equality case.
        assert_abs_diff_eq!(a, 2.0 * big_r * p, epsilon = 1e-5);
    }

    #[test]
    fn surface_moment_examples() {
        let g1 = Measure::gaussian_std(1);
        let k = SymmetricConvexBody::interval(1.0).unwrap();
        let s = surface_moment_integral(&g1, &k, 2.0, 512).unwrap();
        assert_abs_diff_eq!(s.value, 2.0 * crate::measures::normal_pdf(1.0), epsilon = 1e-9);

        let uni = Measure::uniform_on_body(SymmetricConvexBody::interval(1.0).unwrap()).unwrap();
        let t = 0.7;
        let k = SymmetricConvexBody::interval(t).unwrap();
        let s = surface_moment_integral(&uni, &k, 2.0, 512).unwrap();
        assert_abs_diff_eq!(s.value, t * t * t, epsilon = 1e-9);

        let g2 = Measure::gaussian_std(2);
        let disk = SymmetricConvexBody::ball(2, 1.0).unwrap();
        let s = surface_moment_integral(&g2, &disk, 2.0, 2048).unwrap();
        assert_abs_diff_eq!(s.value, (-0.5f64).exp(), epsilon = 1e-6);
        assert_abs_diff_eq!(s.value, 0.60653, epsilon = 1e-5);
    }

    #[test]
    fn w2_distance_examples() {
        let g1 = Measure::gaussian_std(1);
        assert_abs_diff_eq!(w2_distance_1d(&g1, &g1, &quad()).unwrap().value, 0.0, epsilon = 1e-9);

        // Centered normal with variance 4: quantiles are 2 x those of the
        // standard one, so the coupling gives exactly 1.
        let wide = Measure::custom_1d(
            Arc::new(|x: &[f64]| x[0] * x[0] / 8.0),
            None,
            true,
        )
        .unwrap();
        let d = w2_distance_1d(&g1, &wide, &quad()).unwrap();
        assert_abs_diff_eq!(d.value, 1.0, epsilon = 1e-4);

        // Symmetry and the triangle inequality on a shipped triple.
        let nu2 = Measure::exp_symmetric();
        let ab = w2_distance_1d(&g1, &nu2, &quad()).unwrap().value;
        let ba = w2_distance_1d(&nu2, &g1, &quad()).unwrap().value;
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-8);
        let ac = w2_distance_1d(&g1, &wide, &quad()).unwrap().value;
        let cb = w2_distance_1d(&wide, &nu2, &quad()).unwrap().value;
        assert!(ab <= ac + cb + 1e-8);
        assert!(ab > 0.0);
    }

    #[test]
    fn coarea_equality_for_gauge_under_exponential() {
        let nu2 = Measure::exp_symmetric();
        let f = QcFunction::radial(1.0).unwrap();
        let (lhs, rhs) = coarea_integral(&nu2, &f, 1.0, CoareaSign::Positive, &quad()).unwrap();
        // Both sides equal 2 E|x| = 2 in closed form.
        assert_abs_diff_eq!(lhs.value, 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(rhs.value, 2.0, epsilon = 1e-8);
        assert!(lhs.value <= rhs.value + 1e-3);
    }

    #[test]
    fn coarea_equality_for_gauge_under_gaussian() {
        let g1 = Measure::gaussian_std(1);
        let f = QcFunction::radial(1.0).unwrap();
        let (lhs, rhs) = coarea_integral(&g1, &f, 1.0, CoareaSign::Positive, &quad()).unwrap();
        let oracle = 4.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(lhs.value, oracle, epsilon = 1e-3);
        assert_abs_diff_eq!(rhs.value, oracle, epsilon = 1e-7);
    }

    #[test]
    fn coarea_zero_for_constant() {
        let nu2 = Measure::exp_symmetric();
        // min(|x|, 0) is identically zero.
        let f = QcFunction::min_cap(QcFunction::radial(1.0).unwrap(), 0.0);
        let (lhs, rhs) = coarea_integral(&nu2, &f, 1.0, CoareaSign::Positive, &quad()).unwrap();
        assert_abs_diff_eq!(lhs.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rhs.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_coarea_holds_for_positive_function() {
        let g1 = Measure::gaussian_std(1);
        let f = QcFunction::shifted_radial(1.0, 0.5).unwrap();
        let (lhs, rhs) = coarea_integral(&g1, &f, 1.0, CoareaSign::Negative, &quad()).unwrap();
        assert!(lhs.value >= 0.0 && rhs.value >= 0.0);
        assert!(lhs.value <= rhs.value + 1e-3, "lhs {} rhs {}", lhs.value, rhs.value);

        // f = |x| hits zero at the origin and must be rejected.
        let gauge = QcFunction::radial(1.0).unwrap();
        assert!(coarea_integral(&g1, &gauge, 1.0, CoareaSign::Negative, &quad()).is_err());
    }
}
