//! Probability measures with log-densities on symmetric convex domains.
//!
//! Shipped kinds: the standard Gaussian, one- and two-sided exponential
//! measures, uniform measures on bodies, custom 1-d log-densities,
//! products and bounded perturbations. Measures are immutable; sampling is
//! reproducible per seed.
//!
//! Each measure optionally carries a dilation constant kappa as a *claim*
//! with a provenance tag. Verifiers refuse to run without a tagged or
//! user-supplied kappa; the toolkit never computes kappa.

use crate::budget::{EstimationBudget, Estimate, Method};
use crate::error::{DilatioError, Result};
use crate::geometry::{norm2, SymmetricConvexBody};
use crate::quad::{integrate, integrate_unbounded};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::{erf, erf_inv};
use std::fmt;
use std::sync::Arc;

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Best-known dilation constant with the result justifying it.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct KappaClaim {
    pub value: f64,
    pub provenance: String,
}

impl KappaClaim {
    pub fn new(value: f64, provenance: &str) -> Self {
        KappaClaim {
            value,
            provenance: provenance.to_string(),
        }
    }
}

#[derive(Clone)]
pub enum MeasureKind {
    /// Standard Gaussian on R^n.
    GaussianStd { dim: usize },
    /// One-sided exponential e^{-x} dx on (0, infinity).
    ExpOneSided,
    /// Two-sided exponential (1/2) e^{-|x|} dx on R.
    ExpSymmetric,
    /// Normalized Lebesgue measure on a bounded body.
    UniformOnBody {
        body: SymmetricConvexBody,
        log_volume: f64,
    },
    /// dx-density e^{-phi(x) - log_norm} supported on an optional body
    /// (1-d only).
    Custom1d {
        phi: ScalarField,
        support: Option<SymmetricConvexBody>,
        log_norm: f64,
        log_concave: bool,
    },
    Product {
        first: Box<Measure>,
        second: Box<Measure>,
    },
    /// d nu = h d mu with b^{-1} <= h <= b and integral 1.
    Perturbed {
        base: Box<Measure>,
        h: ScalarField,
        bound: f64,
    },
}

#[derive(Clone)]
pub struct Measure {
    pub kind: MeasureKind,
    pub kappa: Option<KappaClaim>,
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Measure({}, kappa={:?})", self.describe(), self.kappa)
    }
}

impl Measure {
    pub fn gaussian_std(dim: usize) -> Self {
        Measure {
            kind: MeasureKind::GaussianStd { dim },
            kappa: Some(KappaClaim::new(2.0, "gaussian (appendix)")),
        }
    }

    pub fn exp_one_sided() -> Self {
        Measure {
            kind: MeasureKind::ExpOneSided,
            kappa: Some(KappaClaim::new(1.0, "log-concave")),
        }
    }

    pub fn exp_symmetric() -> Self {
        Measure {
            kind: MeasureKind::ExpSymmetric,
            kappa: Some(KappaClaim::new(2.0, "symmetric 1-d log-concave")),
        }
    }

    pub fn uniform_on_body(body: SymmetricConvexBody) -> Result<Self> {
        let vol = body_volume(&body)?;
        let kappa = if body.dim() == 1 {
            KappaClaim::new(2.0, "symmetric 1-d log-concave")
        } else {
            KappaClaim::new(1.0, "log-concave")
        };
        Ok(Measure {
            kind: MeasureKind::UniformOnBody {
                body,
                log_volume: vol.ln(),
            },
            kappa: Some(kappa),
        })
    }

    /// 1-d measure with unnormalized log-density -phi; the normalizing
    /// constant is computed by quadrature at construction.
    pub fn custom_1d(
        phi: ScalarField,
        support: Option<SymmetricConvexBody>,
        log_concave: bool,
    ) -> Result<Self> {
        let (lo, hi) = match &support {
            Some(b) => {
                if b.dim() != 1 {
                    return Err(DilatioError::InvalidMeasure(
                        "custom measure support must be 1-d".into(),
                    ));
                }
                let t = b.radial(&[1.0]);
                (-t, t)
            }
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let p = phi.clone();
        let (z, _) = integrate_unbounded(move |x| (-p(&[x])).exp(), lo, hi, 1e-12);
        if !(z.is_finite() && z > 0.0) {
            return Err(DilatioError::InvalidMeasure(format!(
                "custom density has non-finite mass {z}"
            )));
        }
        let kappa = if log_concave {
            Some(KappaClaim::new(1.0, "log-concave"))
        } else {
            None
        };
        Ok(Measure {
            kind: MeasureKind::Custom1d {
                phi,
                support,
                log_norm: z.ln(),
                log_concave,
            },
            kappa,
        })
    }

    /// Product measure; the kappa tag follows the harmonic tensorization
    /// rule when the first factor is 1-d and both factors are tagged.
    pub fn product(first: Measure, second: Measure) -> Self {
        let kappa = match (&first.kappa, &second.kappa) {
            (Some(k1), Some(k2)) if first.dim() == 1 => Some(KappaClaim::new(
                1.0 / (1.0 / k1.value + 1.0 / k2.value),
                "tensorization (harmonic rule)",
            )),
            _ => None,
        };
        Measure {
            kind: MeasureKind::Product {
                first: Box::new(first),
                second: Box::new(second),
            },
            kappa,
        }
    }

    /// Bounded perturbation d nu = h d mu, b^{-1} <= h <= b. The caller is
    /// responsible for the normalization of h; `validate` checks it.
    pub fn perturbed(base: Measure, h: ScalarField, bound: f64) -> Result<Self> {
        if bound <= 1.0 {
            return Err(DilatioError::InvalidMeasure(format!(
                "perturbation bound must exceed 1, got {bound}"
            )));
        }
        let kappa = base
            .kappa
            .as_ref()
            .map(|k| KappaClaim::new(k.value / (bound * bound), "bounded perturbation (b^-2 kappa)"));
        Ok(Measure {
            kind: MeasureKind::Perturbed {
                base: Box::new(base),
                h,
                bound,
            },
            kappa,
        })
    }

    pub fn with_kappa(mut self, value: f64, provenance: &str) -> Self {
        self.kappa = Some(KappaClaim::new(value, provenance));
        self
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            MeasureKind::GaussianStd { dim } => format!("gaussian-std(n={dim})"),
            MeasureKind::ExpOneSided => "exponential-one-sided".into(),
            MeasureKind::ExpSymmetric => "exponential-symmetric".into(),
            MeasureKind::UniformOnBody { .. } => "uniform-on-body".into(),
            MeasureKind::Custom1d { .. } => "log-concave-custom".into(),
            MeasureKind::Product { first, second } => {
                format!("product({}, {})", first.describe(), second.describe())
            }
            MeasureKind::Perturbed { base, bound, .. } => {
                format!("perturbed({}, b={bound})", base.describe())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MeasureKind::GaussianStd { dim } => *dim,
            MeasureKind::ExpOneSided | MeasureKind::ExpSymmetric => 1,
            MeasureKind::UniformOnBody { body, .. } => body.dim(),
            MeasureKind::Custom1d { .. } => 1,
            MeasureKind::Product { first, second } => first.dim() + second.dim(),
            MeasureKind::Perturbed { base, .. } => base.dim(),
        }
    }

    /// Support interval (lo, hi) for 1-d measures.
    pub fn support_1d(&self) -> Result<(f64, f64)> {
        if self.dim() != 1 {
            return Err(DilatioError::Unsupported("support_1d needs n = 1".into()));
        }
        Ok(match &self.kind {
            MeasureKind::ExpOneSided => (0.0, f64::INFINITY),
            MeasureKind::UniformOnBody { body, .. } => {
                let t = body.radial(&[1.0]);
                (-t, t)
            }
            MeasureKind::Custom1d { support, .. } => match support {
                Some(b) => {
                    let t = b.radial(&[1.0]);
                    (-t, t)
                }
                None => (f64::NEG_INFINITY, f64::INFINITY),
            },
            MeasureKind::Perturbed { base, .. } => base.support_1d()?,
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    /// log of the density with respect to Lebesgue measure; -infinity
    /// outside the support.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        match &self.kind {
            MeasureKind::GaussianStd { dim } => {
                let n = *dim as f64;
                -0.5 * x.iter().map(|v| v * v).sum::<f64>()
                    - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
            }
            MeasureKind::ExpOneSided => {
                if x[0] > 0.0 {
                    -x[0]
                } else {
                    f64::NEG_INFINITY
                }
            }
            MeasureKind::ExpSymmetric => -x[0].abs() - std::f64::consts::LN_2,
            MeasureKind::UniformOnBody { body, log_volume } => {
                if body.contains(x) {
                    -log_volume
                } else {
                    f64::NEG_INFINITY
                }
            }
            MeasureKind::Custom1d {
                phi,
                support,
                log_norm,
                ..
            } => {
                if let Some(b) = support {
                    if !b.contains(x) {
                        return f64::NEG_INFINITY;
                    }
                }
                -phi(x) - log_norm
            }
            MeasureKind::Product { first, second } => {
                let n1 = first.dim();
                first.log_density(&x[..n1]) + second.log_density(&x[n1..])
            }
            MeasureKind::Perturbed { base, h, .. } => {
                let ld = base.log_density(x);
                if ld == f64::NEG_INFINITY {
                    ld
                } else {
                    ld + h(x).ln()
                }
            }
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let ld = self.log_density(x);
        if ld == f64::NEG_INFINITY {
            0.0
        } else {
            ld.exp()
        }
    }

    /// CDF for 1-d measures; closed form where available, quadrature
    /// otherwise.
    pub fn cdf_1d(&self, x: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(DilatioError::Unsupported("cdf_1d needs n = 1".into()));
        }
        Ok(match &self.kind {
            MeasureKind::GaussianStd { .. } => normal_cdf(x),
            MeasureKind::ExpOneSided => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-x).exp()
                }
            }
            MeasureKind::ExpSymmetric => {
                if x < 0.0 {
                    0.5 * x.exp()
                } else {
                    1.0 - 0.5 * (-x).exp()
                }
            }
            _ => {
                let (lo, _) = self.support_1d()?;
                if x <= lo {
                    return Ok(0.0);
                }
                let (v, _) = integrate_unbounded(|t| self.density(&[t]), lo, x, 1e-12);
                v.clamp(0.0, 1.0)
            }
        })
    }

    /// Quantile for 1-d measures; monotone in u with CDF(quantile(u)) = u
    /// to 1e-10.
    pub fn quantile_1d(&self, u: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(DilatioError::Unsupported("quantile_1d needs n = 1".into()));
        }
        if !(0.0..1.0).contains(&u) || u == 0.0 {
            return Err(DilatioError::Domain(format!(
                "quantile level must lie in (0,1), got {u}"
            )));
        }
        Ok(match &self.kind {
            MeasureKind::GaussianStd { .. } => normal_quantile(u),
            MeasureKind::ExpOneSided => -(1.0 - u).ln(),
            MeasureKind::ExpSymmetric => {
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            _ => {
                let (lo, hi) = self.support_1d()?;
                let mut a = if lo.is_finite() { lo } else { -1.0 };
                let mut b = if hi.is_finite() { hi } else { 1.0 };
                // Expand brackets for unbounded supports.
                while !lo.is_finite() && self.cdf_1d(a)? > u {
                    a *= 2.0;
                }
                while !hi.is_finite() && self.cdf_1d(b)? < u {
                    b *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if self.cdf_1d(mid)? < u {
                        a = mid;
                    } else {
                        b = mid;
                    }
                    if b - a < 1e-13 * (1.0 + mid.abs()) {
                        break;
                    }
                }
                0.5 * (a + b)
            }
        })
    }

    /// Expectation of g under the measure. Quadrature for n <= 2 (with the
    /// stated method), Monte Carlo otherwise.
    pub fn expectation<G>(&self, g: G, budget: &EstimationBudget) -> Result<Estimate>
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        match self.resolve_method(budget)? {
            Method::Quadrature => self.expectation_quadrature(&g, budget),
            _ => self.expectation_monte_carlo(&g, budget),
        }
    }

    fn resolve_method(&self, budget: &EstimationBudget) -> Result<Method> {
        let m = budget.resolve(self.dim());
        if m == Method::Quadrature && self.dim() > 2 {
            return Err(DilatioError::Unsupported(format!(
                "quadrature requested for n = {} > 2",
                self.dim()
            )));
        }
        Ok(m)
    }

    fn expectation_quadrature<G>(&self, g: &G, budget: &EstimationBudget) -> Result<Estimate>
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        let tol = budget.quad_tol;
        if self.dim() == 1 {
            let (lo, hi) = self.support_1d()?;
            let (v, e) = integrate_unbounded(
                |x| {
                    let p = [x];
                    let d = self.density(&p);
                    if d == 0.0 {
                        0.0
                    } else {
                        g(&p) * d
                    }
                },
                lo,
                hi,
                tol,
            );
            return Ok(Estimate::quadrature(v, e));
        }
        // n = 2: nested quadrature over the plane. The density vanishes
        // outside the support, so unbounded mapping is safe.
        let (xlo, xhi, ylo, yhi) = self.support_box_2d()?;
        let inner_tol = tol * 1e-2;
        let (v, e) = integrate_unbounded(
            |x| {
                let (iv, _) = integrate_unbounded(
                    |y| {
                        let p = [x, y];
                        let d = self.density(&p);
                        if d == 0.0 {
                            0.0
                        } else {
                            g(&p) * d
                        }
                    },
                    ylo,
                    yhi,
                    inner_tol,
                );
                iv
            },
            xlo,
            xhi,
            tol,
        );
        Ok(Estimate::quadrature(v, e))
    }

    fn support_box_2d(&self) -> Result<(f64, f64, f64, f64)> {
        match &self.kind {
            MeasureKind::GaussianStd { dim } if *dim == 2 => Ok((
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
            )),
            MeasureKind::UniformOnBody { body, .. } if body.dim() == 2 => {
                let (_, big_r) = body.radii()?;
                Ok((-big_r, big_r, -big_r, big_r))
            }
            MeasureKind::Product { first, second } if first.dim() == 1 && second.dim() == 1 => {
                let (a, b) = first.support_1d()?;
                let (c, d) = second.support_1d()?;
                Ok((a, b, c, d))
            }
            MeasureKind::Perturbed { base, .. } => base.support_box_2d(),
            _ => Err(DilatioError::Unsupported(
                "2-d quadrature not available for this measure kind".into(),
            )),
        }
    }

    fn expectation_monte_carlo<G>(&self, g: &G, budget: &EstimationBudget) -> Result<Estimate>
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        if budget.samples == 0 {
            return Err(DilatioError::Domain("zero Monte Carlo samples".into()));
        }
        let samples = self.sample(budget.samples as usize, budget.seed)?;
        let n = samples.len() as f64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for x in &samples {
            let v = g(x);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        Ok(Estimate::monte_carlo(mean, (var / n).sqrt(), budget.seed))
    }

    /// mu(K) with standard error; deterministic for a fixed seed.
    pub fn mass_of_body(
        &self,
        body: &SymmetricConvexBody,
        budget: &EstimationBudget,
    ) -> Result<Estimate> {
        if body.dim() != self.dim() {
            return Err(DilatioError::Domain(format!(
                "body dimension {} != measure dimension {}",
                body.dim(),
                self.dim()
            )));
        }
        match self.resolve_method(budget)? {
            Method::Quadrature => self.mass_quadrature(body, budget),
            _ => {
                if budget.samples == 0 {
                    return Err(DilatioError::Domain("zero Monte Carlo samples".into()));
                }
                let samples = self.sample(budget.samples as usize, budget.seed)?;
                let hits = samples.iter().filter(|x| body.contains(x)).count() as f64;
                let n = samples.len() as f64;
                let p = hits / n;
                Ok(Estimate::monte_carlo(
                    p,
                    (p * (1.0 - p) / n).sqrt(),
                    budget.seed,
                ))
            }
        }
    }

    fn mass_quadrature(
        &self,
        body: &SymmetricConvexBody,
        budget: &EstimationBudget,
    ) -> Result<Estimate> {
        let tol = budget.quad_tol;
        if self.dim() == 1 {
            let t = body.radial(&[1.0]);
            if !t.is_finite() {
                return Ok(Estimate::quadrature(1.0, 0.0));
            }
            let (lo, hi) = self.support_1d()?;
            let a = lo.max(-t);
            let b = hi.min(t);
            if b <= a {
                return Ok(Estimate::quadrature(0.0, 0.0));
            }
            let (v, e) = integrate_unbounded(|x| self.density(&[x]), a, b, tol);
            return Ok(Estimate::quadrature(v.clamp(0.0, 1.0), e));
        }
        // n = 2: polar decomposition; the radial cut r_K(theta) keeps the
        // integrand of the angular integral piecewise smooth.
        let two_pi = 2.0 * std::f64::consts::PI;
        let (v, e) = integrate(
            |theta| {
                let u = [theta.cos(), theta.sin()];
                let rmax = body.radial(&u);
                if rmax <= 0.0 {
                    return 0.0;
                }
                let radial = |r: f64| {
                    let p = [r * u[0], r * u[1]];
                    let d = self.density(&p);
                    if d == 0.0 {
                        0.0
                    } else {
                        d * r
                    }
                };
                if rmax.is_finite() {
                    integrate(radial, 0.0, rmax, tol * 1e-2).0
                } else {
                    integrate_unbounded(radial, 0.0, f64::INFINITY, tol * 1e-2).0
                }
            },
            0.0,
            two_pi,
            tol,
        );
        Ok(Estimate::quadrature(v.clamp(0.0, 1.0), e))
    }

    /// i.i.d. samples, reproducible per seed.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(count, &mut rng)
    }

    fn sample_with(&self, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        match &self.kind {
            MeasureKind::GaussianStd { dim } => Ok((0..count)
                .map(|_| (0..*dim).map(|_| rng.sample(StandardNormal)).collect())
                .collect()),
            MeasureKind::ExpOneSided => Ok((0..count)
                .map(|_| {
                    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    vec![-u.ln()]
                })
                .collect()),
            MeasureKind::ExpSymmetric => Ok((0..count)
                .map(|_| {
                    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    vec![sign * -u.ln()]
                })
                .collect()),
            MeasureKind::UniformOnBody { body, .. } => {
                let (_, big_r) = body.radii()?;
                let dim = body.dim();
                let mut out = Vec::with_capacity(count);
                let mut attempts: u64 = 0;
                while out.len() < count {
                    attempts += 1;
                    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-big_r..big_r)).collect();
                    if body.contains(&x) {
                        out.push(x);
                    }
                    if attempts > 10_000 && (out.len() as f64) < attempts as f64 * 1e-4 {
                        return Err(DilatioError::Sampler(format!(
                            "rejection acceptance rate below 1e-4 ({} of {attempts})",
                            out.len()
                        )));
                    }
                }
                Ok(out)
            }
            MeasureKind::Custom1d { .. } => {
                let table = self.quantile_table()?;
                Ok((0..count)
                    .map(|_| {
                        let u: f64 = rng.gen_range(0.0..1.0);
                        vec![table.lookup(u)]
                    })
                    .collect())
            }
            MeasureKind::Product { first, second } => {
                let a = first.sample_with(count, rng)?;
                let b = second.sample_with(count, rng)?;
                Ok(a.into_iter()
                    .zip(b)
                    .map(|(mut x, y)| {
                        x.extend(y);
                        x
                    })
                    .collect())
            }
            MeasureKind::Perturbed { base, h, bound } => {
                let mut out = Vec::with_capacity(count);
                let mut attempts: u64 = 0;
                while out.len() < count {
                    attempts += 1;
                    let x = base.sample_with(1, rng)?.pop().unwrap();
                    let accept = h(&x) / bound;
                    if rng.gen::<f64>() < accept {
                        out.push(x);
                    }
                    if attempts > 10_000 && (out.len() as f64) < attempts as f64 * 1e-4 {
                        return Err(DilatioError::Sampler(
                            "perturbation rejection acceptance rate below 1e-4".into(),
                        ));
                    }
                }
                Ok(out)
            }
        }
    }

    fn quantile_table(&self) -> Result<QuantileTable> {
        // Clip unbounded supports at extreme quantiles, then tabulate the
        // CDF on a fine grid for interpolation-based inversion.
        let lo = self.quantile_1d(1e-9)?;
        let hi = self.quantile_1d(1.0 - 1e-9)?;
        let cells = 4096;
        let mut xs = Vec::with_capacity(cells + 1);
        let mut us = Vec::with_capacity(cells + 1);
        for i in 0..=cells {
            let x = lo + (hi - lo) * i as f64 / cells as f64;
            xs.push(x);
            us.push(self.cdf_1d(x)?);
        }
        Ok(QuantileTable { xs, us })
    }

    /// Lebesgue integral of an integrand that consumes the log-density
    /// directly, so products like exp(h(x)) * density can be formed in
    /// log space without overflow. Quadrature only (n <= 2).
    pub fn integral_with_log_density<G>(&self, g: G, tol: f64) -> Result<(f64, f64)>
    where
        G: Fn(&[f64], f64) -> f64,
    {
        match self.dim() {
            1 => {
                let (lo, hi) = self.support_1d()?;
                Ok(integrate_unbounded(
                    |x| {
                        let p = [x];
                        let ld = self.log_density(&p);
                        if ld == f64::NEG_INFINITY {
                            0.0
                        } else {
                            g(&p, ld)
                        }
                    },
                    lo,
                    hi,
                    tol,
                ))
            }
            2 => {
                let (xlo, xhi, ylo, yhi) = self.support_box_2d()?;
                Ok(integrate_unbounded(
                    |x| {
                        integrate_unbounded(
                            |y| {
                                let p = [x, y];
                                let ld = self.log_density(&p);
                                if ld == f64::NEG_INFINITY {
                                    0.0
                                } else {
                                    g(&p, ld)
                                }
                            },
                            ylo,
                            yhi,
                            tol * 1e-2,
                        )
                        .0
                    },
                    xlo,
                    xhi,
                    tol,
                ))
            }
            n => Err(DilatioError::Unsupported(format!(
                "log-density quadrature needs n <= 2, got {n}"
            ))),
        }
    }

    /// Fast quantile evaluator for repeated lookups: closed forms where
    /// available, otherwise a cached CDF table with Newton refinement.
    pub fn quantile_fn(&self) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
        match &self.kind {
            MeasureKind::GaussianStd { dim } if *dim == 1 => Ok(Arc::new(normal_quantile)),
            MeasureKind::ExpOneSided => Ok(Arc::new(|u: f64| -(1.0 - u).ln())),
            MeasureKind::ExpSymmetric => Ok(Arc::new(|u: f64| {
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            })),
            _ => {
                let table = Arc::new(self.quantile_table()?);
                let m = self.clone();
                Ok(Arc::new(move |u: f64| {
                    let us = &table.us;
                    if u <= us[0] {
                        return table.xs[0];
                    }
                    if u >= *us.last().unwrap() {
                        return *table.xs.last().unwrap();
                    }
                    // Bracketed Newton against the true CDF, evaluated
                    // incrementally from the left grid point. Newton steps
                    // that leave the bracket (the density may vanish inside
                    // the support) fall back to bisection.
                    let idx = us.partition_point(|&v| v < u);
                    let (mut lo, mut hi) = (table.xs[idx - 1], table.xs[idx]);
                    let (x_ref, u_ref) = (table.xs[idx - 1], us[idx - 1]);
                    let cdf_at = |x: f64| {
                        let (delta, _) = integrate(|t| m.density(&[t]), x_ref, x, 1e-14);
                        (u_ref + delta).clamp(0.0, 1.0)
                    };
                    let mut x = table.lookup(u).clamp(lo, hi);
                    for _ in 0..60 {
                        let fx = cdf_at(x);
                        if (fx - u).abs() < 1e-15 {
                            break;
                        }
                        if fx > u {
                            hi = x;
                        } else {
                            lo = x;
                        }
                        let dens = m.density(&[x]);
                        let newton = if dens > 1e-300 {
                            x - (fx - u) / dens
                        } else {
                            f64::NAN
                        };
                        x = if newton.is_finite() && newton > lo && newton < hi {
                            newton
                        } else {
                            0.5 * (lo + hi)
                        };
                        if hi - lo < 1e-13 * (1.0 + x.abs()) {
                            break;
                        }
                    }
                    x
                }))
            }
        }
    }

    /// Integral of |x|^p with respect to the measure.
    pub fn moment(&self, p: f64, budget: &EstimationBudget) -> Result<Estimate> {
        if p <= 0.0 {
            return Err(DilatioError::Domain(format!(
                "moment order must be positive, got {p}"
            )));
        }
        self.expectation(|x| norm2(x).powf(p), budget)
    }
}

struct QuantileTable {
    xs: Vec<f64>,
    us: Vec<f64>,
}

impl QuantileTable {
    fn lookup(&self, u: f64) -> f64 {
        let us = &self.us;
        if u <= us[0] {
            return self.xs[0];
        }
        if u >= *us.last().unwrap() {
            return *self.xs.last().unwrap();
        }
        let idx = us.partition_point(|&v| v < u);
        let (u0, u1) = (us[idx - 1], us[idx]);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        if u1 > u0 {
            x0 + (x1 - x0) * (u - u0) / (u1 - u0)
        } else {
            x0
        }
    }
}

fn body_volume(body: &SymmetricConvexBody) -> Result<f64> {
    match body.dim() {
        1 => {
            let t = body.radial(&[1.0]);
            if !t.is_finite() {
                return Err(DilatioError::InvalidMeasure("unbounded 1-d body".into()));
            }
            Ok(2.0 * t)
        }
        2 => {
            let (v, _) = integrate(
                |theta| {
                    let u = [theta.cos(), theta.sin()];
                    let r = body.radial(&u);
                    0.5 * r * r
                },
                0.0,
                2.0 * std::f64::consts::PI,
                1e-12,
            );
            if !v.is_finite() {
                return Err(DilatioError::InvalidMeasure("unbounded body".into()));
            }
            Ok(v)
        }
        _ => Err(DilatioError::Unsupported(
            "uniform measures support n <= 2".into(),
        )),
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

pub fn normal_quantile(u: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
