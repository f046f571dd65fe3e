//! Symmetric open convex bodies represented by gauge evaluation.
//!
//! Every downstream estimator only needs membership and the gauge
//! (Minkowski functional), so balls, ellipsoids, lp-balls, polytopes and
//! intersections are handled uniformly. Bodies are immutable and all
//! operations are pure.

use crate::error::{DilatioError, Result};
use crate::quad::gauss_legendre;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Symmetric open convex set K = -K with an evaluable gauge function.
#[derive(Debug, Clone)]
pub enum SymmetricConvexBody {
    EuclideanBall {
        dim: usize,
        radius: f64,
    },
    Ellipsoid {
        semi_axes: Vec<f64>,
    },
    LpBall {
        dim: usize,
        p: f64,
        radius: f64,
    },
    /// Halfspaces |<a_i, x>| < b_i; symmetry is enforced by evaluating
    /// each stored halfspace together with its mirror.
    HPolytope {
        dim: usize,
        halfspaces: Vec<(Vec<f64>, f64)>,
    },
    Scaled {
        body: Box<SymmetricConvexBody>,
        factor: f64,
    },
    Intersection {
        bodies: Vec<SymmetricConvexBody>,
    },
}

/// One node of a surface-measure quadrature rule on the boundary of K.
#[derive(Debug, Clone)]
pub struct BoundaryElement {
    pub point: Vec<f64>,
    /// Outer unit normal at `point`.
    pub normal: Vec<f64>,
    /// Surface-measure weight, in units of (n-1)-dimensional area.
    pub weight: f64,
}

impl SymmetricConvexBody {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(DilatioError::InvalidBody(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if dim == 0 {
            return Err(DilatioError::InvalidBody("dimension must be >= 1".into()));
        }
        Ok(SymmetricConvexBody::EuclideanBall { dim, radius })
    }

    /// Symmetric open interval (-t, t) in one dimension.
    pub fn interval(half_width: f64) -> Result<Self> {
        Self::ball(1, half_width)
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        if semi_axes.is_empty() {
            return Err(DilatioError::InvalidBody("ellipsoid needs axes".into()));
        }
        if semi_axes.iter().any(|&a| a <= 0.0 || !a.is_finite()) {
            return Err(DilatioError::InvalidBody(format!(
                "ellipsoid semi-axes must be positive, got {semi_axes:?}"
            )));
        }
        Ok(SymmetricConvexBody::Ellipsoid { semi_axes })
    }

    pub fn lp_ball(dim: usize, p: f64, radius: f64) -> Result<Self> {
        if p < 1.0 || !p.is_finite() {
            return Err(DilatioError::InvalidBody(format!(
                "lp-ball exponent must be >= 1 for convexity, got {p}"
            )));
        }
        if radius <= 0.0 || dim == 0 {
            return Err(DilatioError::InvalidBody(
                "lp-ball needs positive radius and dimension".into(),
            ));
        }
        Ok(SymmetricConvexBody::LpBall { dim, p, radius })
    }

    /// H-polytope from halfspaces |<a_i, x>| < b_i.
    pub fn h_polytope(dim: usize, halfspaces: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if halfspaces.is_empty() {
            return Err(DilatioError::InvalidBody("polytope needs halfspaces".into()));
        }
        for (a, b) in &halfspaces {
            if a.len() != dim {
                return Err(DilatioError::InvalidBody(format!(
                    "normal vector length {} != dim {}",
                    a.len(),
                    dim
                )));
            }
            if *b <= 0.0 || !b.is_finite() {
                return Err(DilatioError::InvalidBody(format!(
                    "halfspace offset must be positive, got {b}"
                )));
            }
            if a.iter().map(|v| v * v).sum::<f64>() == 0.0 {
                return Err(DilatioError::InvalidBody("zero normal vector".into()));
            }
        }
        Ok(SymmetricConvexBody::HPolytope { dim, halfspaces })
    }

    /// Axis-aligned box given by half-widths per coordinate.
    pub fn centered_box(half_widths: Vec<f64>) -> Result<Self> {
        let dim = half_widths.len();
        let halfspaces = half_widths
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let mut a = vec![0.0; dim];
                a[i] = 1.0;
                (a, w)
            })
            .collect();
        Self::h_polytope(dim, halfspaces)
    }

    pub fn intersection(bodies: Vec<SymmetricConvexBody>) -> Result<Self> {
        if bodies.is_empty() {
            return Err(DilatioError::InvalidBody("empty intersection".into()));
        }
        let dim = bodies[0].dim();
        if bodies.iter().any(|b| b.dim() != dim) {
            return Err(DilatioError::InvalidBody("dimension mismatch".into()));
        }
        Ok(SymmetricConvexBody::Intersection { bodies })
    }

    pub fn dim(&self) -> usize {
        match self {
            SymmetricConvexBody::EuclideanBall { dim, .. } => *dim,
            SymmetricConvexBody::Ellipsoid { semi_axes } => semi_axes.len(),
            SymmetricConvexBody::LpBall { dim, .. } => *dim,
            SymmetricConvexBody::HPolytope { dim, .. } => *dim,
            SymmetricConvexBody::Scaled { body, .. } => body.dim(),
            SymmetricConvexBody::Intersection { bodies } => bodies[0].dim(),
        }
    }

    /// Gauge function inf{lambda > 0 : x in lambda K}.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            SymmetricConvexBody::EuclideanBall { radius, .. } => norm2(x) / radius,
            SymmetricConvexBody::Ellipsoid { semi_axes } => x
                .iter()
                .zip(semi_axes)
                .map(|(xi, ai)| (xi / ai) * (xi / ai))
                .sum::<f64>()
                .sqrt(),
            SymmetricConvexBody::LpBall { p, radius, .. } => {
                if (*p - 2.0).abs() < 1e-15 {
                    norm2(x) / radius
                } else {
                    let s: f64 = x.iter().map(|xi| (xi.abs() / radius).powf(*p)).sum();
                    s.powf(1.0 / p)
                }
            }
            SymmetricConvexBody::HPolytope { halfspaces, .. } => halfspaces
                .iter()
                .map(|(a, b)| dot(a, x).abs() / b)
                .fold(0.0, f64::max),
            SymmetricConvexBody::Scaled { body, factor } => body.gauge(x) / factor,
            SymmetricConvexBody::Intersection { bodies } => {
                bodies.iter().map(|b| b.gauge(x)).fold(0.0, f64::max)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) < 1.0
    }

    /// Epsilon-dilation K_eps = (1+eps)/(1-eps) K.
    pub fn dilate(&self, eps: f64) -> Result<SymmetricConvexBody> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(DilatioError::Domain(format!(
                "dilation parameter must lie in (0,1), got {eps}"
            )));
        }
        Ok(self.scale((1.0 + eps) / (1.0 - eps)))
    }

    pub fn scale(&self, factor: f64) -> SymmetricConvexBody {
        SymmetricConvexBody::Scaled {
            body: Box::new(self.clone()),
            factor,
        }
    }

    /// Radial function along a direction: the boundary distance 1/gauge(u).
    pub fn radial(&self, direction: &[f64]) -> f64 {
        let g = self.gauge(direction);
        let n = norm2(direction);
        if g == 0.0 {
            f64::INFINITY
        } else {
            n / g
        }
    }

    /// Inradius and circumradius (r, R) of the body; closed form per kind
    /// where available, otherwise 2*10^4 sampled directions.
    pub fn radii(&self) -> Result<(f64, f64)> {
        match self {
            SymmetricConvexBody::EuclideanBall { radius, .. } => Ok((*radius, *radius)),
            SymmetricConvexBody::Ellipsoid { semi_axes } => {
                let lo = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = semi_axes.iter().cloned().fold(0.0, f64::max);
                Ok((lo, hi))
            }
            SymmetricConvexBody::LpBall { dim, p, radius } => {
                let diag = (*dim as f64).powf(0.5 - 1.0 / p);
                Ok((radius * diag.min(1.0), radius * diag.max(1.0)))
            }
            SymmetricConvexBody::HPolytope { dim, halfspaces } => {
                let r = halfspaces
                    .iter()
                    .map(|(a, b)| b / norm2(a))
                    .fold(f64::INFINITY, f64::min);
                let big_r = if *dim == 1 {
                    r
                } else if *dim == 2 {
                    let verts = polygon_vertices(halfspaces)?;
                    verts.iter().map(|v| norm2(v)).fold(0.0, f64::max)
                } else {
                    self.sampled_circumradius()?
                };
                if !big_r.is_finite() {
                    return Err(DilatioError::Unsupported("unbounded polytope".into()));
                }
                Ok((r, big_r))
            }
            SymmetricConvexBody::Scaled { body, factor } => {
                let (r, big_r) = body.radii()?;
                Ok((r * factor, big_r * factor))
            }
            SymmetricConvexBody::Intersection { .. } => {
                let r = self.sampled_inradius()?;
                let big_r = self.sampled_circumradius()?;
                Ok((r, big_r))
            }
        }
    }

    fn sampled_directions(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x4449_4C41);
        (0..20_000)
            .map(|_| {
                let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm2(&u).max(1e-300);
                u.iter_mut().for_each(|v| *v /= n);
                u
            })
            .collect()
    }

    fn sampled_inradius(&self) -> Result<f64> {
        let r = self
            .sampled_directions()
            .iter()
            .map(|u| self.radial(u))
            .fold(f64::INFINITY, f64::min);
        if !r.is_finite() {
            return Err(DilatioError::Unsupported("unbounded body".into()));
        }
        Ok(r)
    }

    fn sampled_circumradius(&self) -> Result<f64> {
        let r = self
            .sampled_directions()
            .iter()
            .map(|u| self.radial(u))
            .fold(0.0, f64::max);
        if !r.is_finite() {
            return Err(DilatioError::Unsupported("unbounded body".into()));
        }
        Ok(r)
    }

    /// Surface quadrature rule over the boundary. Supported for 1-d bodies
    /// (two endpoint atoms), 2-d balls/ellipsoids (periodic trapezoid) and
    /// 2-d polytopes (per-edge Gauss-Legendre).
    pub fn boundary_quadrature(&self, resolution: usize) -> Result<Vec<BoundaryElement>> {
        if resolution == 0 {
            return Err(DilatioError::Domain("resolution must be positive".into()));
        }
        match self {
            SymmetricConvexBody::Scaled { .. } => {
                // Flatten nested scalings into the base kind.
                let (base, factor) = self.flatten_scale();
                base.scaled_boundary(factor, resolution)
            }
            _ => self.scaled_boundary(1.0, resolution),
        }
    }

    fn flatten_scale(&self) -> (&SymmetricConvexBody, f64) {
        let mut cur = self;
        let mut factor = 1.0;
        while let SymmetricConvexBody::Scaled { body, factor: f } = cur {
            factor *= f;
            cur = body;
        }
        (cur, factor)
    }

    fn scaled_boundary(&self, factor: f64, resolution: usize) -> Result<Vec<BoundaryElement>> {
        let dim = self.dim();
        if dim == 1 {
            let t = self.radial(&[1.0]) * factor;
            if !t.is_finite() {
                return Err(DilatioError::Unsupported("unbounded 1-d body".into()));
            }
            return Ok(vec![
                BoundaryElement {
                    point: vec![t],
                    normal: vec![1.0],
                    weight: 1.0,
                },
                BoundaryElement {
                    point: vec![-t],
                    normal: vec![-1.0],
                    weight: 1.0,
                },
            ]);
        }
        if dim != 2 {
            return Err(DilatioError::Unsupported(format!(
                "boundary quadrature only supports dimension <= 2, got {dim}"
            )));
        }
        match self {
            SymmetricConvexBody::EuclideanBall { radius, .. } => {
                Ok(ellipse_boundary(radius * factor, radius * factor, resolution))
            }
            SymmetricConvexBody::Ellipsoid { semi_axes } => Ok(ellipse_boundary(
                semi_axes[0] * factor,
                semi_axes[1] * factor,
                resolution,
            )),
            SymmetricConvexBody::LpBall { p, radius, .. } if (*p - 2.0).abs() < 1e-15 => {
                Ok(ellipse_boundary(radius * factor, radius * factor, resolution))
            }
            SymmetricConvexBody::HPolytope { halfspaces, .. } => {
                let scaled: Vec<(Vec<f64>, f64)> = halfspaces
                    .iter()
                    .map(|(a, b)| (a.clone(), b * factor))
                    .collect();
                polygon_boundary(&scaled, resolution)
            }
            SymmetricConvexBody::Intersection { .. } => Err(DilatioError::Unsupported(
                "boundary quadrature is not available for intersections".into(),
            )),
            other => Err(DilatioError::Unsupported(format!(
                "boundary quadrature unsupported for {other:?}"
            ))),
        }
    }

    /// Euclidean distance from a point to the closed body (0 inside).
    /// Supported in 1-d and for 2-d balls, ellipses and polytopes; used to
    /// realize the epsilon-neighborhood [K]_eps.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        if self.gauge(x) <= 1.0 {
            return Ok(0.0);
        }
        let (base, factor) = self.flatten_scale();
        match base {
            SymmetricConvexBody::EuclideanBall { radius, .. } => {
                Ok((norm2(x) - radius * factor).max(0.0))
            }
            SymmetricConvexBody::LpBall { p, radius, .. } if (*p - 2.0).abs() < 1e-15 => {
                Ok((norm2(x) - radius * factor).max(0.0))
            }
            SymmetricConvexBody::Ellipsoid { semi_axes } if semi_axes.len() == 2 => Ok(
                ellipse_distance(semi_axes[0] * factor, semi_axes[1] * factor, x),
            ),
            SymmetricConvexBody::HPolytope { dim, halfspaces } if *dim <= 2 => {
                let scaled: Vec<(Vec<f64>, f64)> = halfspaces
                    .iter()
                    .map(|(a, b)| (a.clone(), b * factor))
                    .collect();
                polygon_distance(&scaled, x)
            }
            _ if self.dim() == 1 => {
                let t = self.radial(&[1.0]);
                Ok((x[0].abs() - t).max(0.0))
            }
            other => Err(DilatioError::Unsupported(format!(
                "distance not implemented for {other:?}"
            ))),
        }
    }
}

fn ellipse_boundary(a: f64, b: f64, resolution: usize) -> Vec<BoundaryElement> {
    let n = resolution.max(8);
    let step = 2.0 * std::f64::consts::PI / n as f64;
    (0..n)
        .map(|j| {
            let theta = (j as f64 + 0.5) * step;
            let (s, c) = theta.sin_cos();
            let point = vec![a * c, b * s];
            let speed = ((a * s).powi(2) + (b * c).powi(2)).sqrt();
            let mut normal = vec![c / a, s / b];
            let nn = norm2(&normal);
            normal.iter_mut().for_each(|v| *v /= nn);
            BoundaryElement {
                point,
                normal,
                weight: speed * step,
            }
        })
        .collect()
}

/// Vertices of the symmetric polygon defined by |<a_i, x>| < b_i, in
/// counterclockwise order.
fn polygon_vertices(halfspaces: &[(Vec<f64>, f64)]) -> Result<Vec<Vec<f64>>> {
    // Expand to the full signed list.
    let mut hs: Vec<(f64, f64, f64)> = Vec::new();
    for (a, b) in halfspaces {
        hs.push((a[0], a[1], *b));
        hs.push((-a[0], -a[1], *b));
    }
    let mut verts: Vec<Vec<f64>> = Vec::new();
    for i in 0..hs.len() {
        for j in (i + 1)..hs.len() {
            let (a1, b1, c1) = hs[i];
            let (a2, b2, c2) = hs[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (c1 * b2 - c2 * b1) / det;
            let y = (a1 * c2 - a2 * c1) / det;
            let feasible = hs
                .iter()
                .all(|&(a, b, c)| a * x + b * y <= c * (1.0 + 1e-9) + 1e-12);
            if feasible {
                verts.push(vec![x, y]);
            }
        }
    }
    if verts.is_empty() {
        return Err(DilatioError::Unsupported("unbounded polygon".into()));
    }
    // Deduplicate and order by angle.
    verts.sort_by(|p, q| {
        p[1].atan2(p[0])
            .partial_cmp(&q[1].atan2(q[0]))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for v in verts {
        if unique
            .iter()
            .all(|u| (u[0] - v[0]).abs() + (u[1] - v[1]).abs() > 1e-9)
        {
            unique.push(v);
        }
    }
    Ok(unique)
}

fn polygon_boundary(halfspaces: &[(Vec<f64>, f64)], resolution: usize) -> Result<Vec<BoundaryElement>> {
    let verts = polygon_vertices(halfspaces)?;
    let m = verts.len();
    let (nodes, weights) = gauss_legendre(resolution.clamp(2, 64));
    let mut out = Vec::new();
    let mut hs: Vec<(f64, f64, f64)> = Vec::new();
    for (a, b) in halfspaces {
        hs.push((a[0], a[1], *b));
        hs.push((-a[0], -a[1], *b));
    }
    for k in 0..m {
        let p = &verts[k];
        let q = &verts[(k + 1) % m];
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        if len < 1e-12 {
            continue;
        }
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        // Facet normal: the constraint active at the edge midpoint.
        let (a0, a1, c) = hs
            .iter()
            .cloned()
            .max_by(|x, y| {
                let rx = (x.0 * mid[0] + x.1 * mid[1]) / x.2;
                let ry = (y.0 * mid[0] + y.1 * mid[1]) / y.2;
                rx.partial_cmp(&ry).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let _ = c;
        let nn = (a0 * a0 + a1 * a1).sqrt();
        let normal = vec![a0 / nn, a1 / nn];
        for (t, w) in nodes.iter().zip(&weights) {
            let s = 0.5 * (t + 1.0);
            out.push(BoundaryElement {
                point: vec![p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])],
                normal: normal.clone(),
                weight: w * 0.5 * len,
            });
        }
    }
    Ok(out)
}

fn ellipse_distance(a: f64, b: f64, x: &[f64]) -> f64 {
    // Coarse parametric scan plus golden-section refinement.
    let d2 = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let dx = x[0] - a * c;
        let dy = x[1] - b * s;
        dx * dx + dy * dy
    };
    let n = 256;
    let mut best_theta = 0.0;
    let mut best = f64::INFINITY;
    for j in 0..n {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let v = d2(theta);
        if v < best {
            best = v;
            best_theta = theta;
        }
    }
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let (mut lo, mut hi) = (best_theta - h, best_theta + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if d2(m1) < d2(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    d2(0.5 * (lo + hi)).sqrt()
}

fn polygon_distance(halfspaces: &[(Vec<f64>, f64)], x: &[f64]) -> Result<f64> {
    if halfspaces[0].0.len() == 1 {
        let t = halfspaces
            .iter()
            .map(|(a, b)| b / a[0].abs())
            .fold(f64::INFINITY, f64::min);
        return Ok((x[0].abs() - t).max(0.0));
    }
    let verts = polygon_vertices(halfspaces)?;
    let m = verts.len();
    let mut best = f64::INFINITY;
    for k in 0..m {
        let p = &verts[k];
        let q = &verts[(k + 1) % m];
        best = best.min(segment_distance(p, q, x));
    }
    Ok(best)
}

fn segment_distance(p: &[f64], q: &[f64], x: &[f64]) -> f64 {
    let vx = q[0] - p[0];
    let vy = q[1] - p[1];
    let wx = x[0] - p[0];
    let wy = x[1] - p[1];
    let vv = vx * vx + vy * vy;
    let t = if vv > 0.0 { ((wx * vx + wy * vy) / vv).clamp(0.0, 1.0) } else { 0.0 };
    let dx = x[0] - (p[0] + t * vx);
    let dy = x[1] - (p[1] + t * vy);
    (dx * dx + dy * dy).sqrt()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
