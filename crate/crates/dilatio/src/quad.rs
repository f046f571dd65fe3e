//! 1-d adaptive Gauss–Legendre quadrature with domain mapping for
//! unbounded supports, plus Richardson/Neville extrapolation helpers.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre polynomial and cached per degree.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = compute_gauss_legendre(n);
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn fixed_rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        sum += w * f(mid + c * x);
    }
    c * sum
}

/// Adaptive Gauss–Legendre on a finite interval; returns (value, error bound).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let mut value = 0.0;
    let mut err = 0.0;
    // Global panel budget: pathological integrands otherwise explode the
    // recursion tree instead of returning with a wide error bound.
    let mut panels: usize = 0;
    let whole = fixed_rule(&f, a, b, 21);
    // Absolute noise floor for panel refinement, tied to the magnitude of
    // the whole integral rather than the local panel: tail panels with
    // tiny values must not be refined past machine precision, or they
    // starve the panel budget before the bulk of the mass is resolved.
    let floor = 1e-15 * fixed_rule(&|x| f(x).abs(), a, b, 21).abs().max(whole.abs());
    adaptive(&f, a, b, tol, floor, whole, 0, &mut value, &mut err, &mut panels);
    (value, err)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    floor: f64,
    whole: f64,
    depth: usize,
    value: &mut f64,
    err: &mut f64,
    panels: &mut usize,
) {
    *panels += 1;
    let mid = 0.5 * (a + b);
    let left = fixed_rule(f, a, mid, 21);
    let right = fixed_rule(f, mid, b, 21);
    if !(left.is_finite() && right.is_finite()) {
        // Divergent or NaN panel: refinement cannot help, so propagate.
        *value += left + right;
        *err = f64::INFINITY;
        return;
    }
    let diff = (left + right - whole).abs();
    // Never accept before a few levels of refinement: a coarse rule can
    // agree with itself by accident on integrands with narrow features.
    if (depth >= 5 && diff < tol.max(floor)) || depth >= 48 || *panels > 100_000 {
        *value += left + right;
        *err += diff;
        return;
    }
    adaptive(f, a, mid, tol * 0.5, floor, left, depth + 1, value, err, panels);
    adaptive(f, mid, b, tol * 0.5, floor, right, depth + 1, value, err, panels);
}

/// Adaptive quadrature on a possibly unbounded interval. Infinite ends are
/// mapped through x = tan(t), so the integrand must decay at infinity.
pub fn integrate_unbounded<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let ta = if a.is_finite() { a.atan() } else { -half_pi };
    let tb = if b.is_finite() { b.atan() } else { half_pi };
    let g = |t: f64| {
        let c = t.cos();
        if c.abs() < 1e-300 {
            return 0.0;
        }
        let x = t.tan();
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v / (c * c)
        }
    };
    integrate(g, ta, tb, tol)
}

/// Neville polynomial extrapolation of a sequence (h_i, y_i) to h = 0.
/// Returns (limit, residual), where the residual is the change introduced
/// by the last tableau column.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len();
    assert!(n >= 1);
    let mut tableau: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    let hs: Vec<f64> = points.iter().map(|&(h, _)| h).collect();
    let mut prev_best = tableau[n - 1];
    let mut best = tableau[n - 1];
    for j in 1..n {
        for i in (j..n).rev() {
            let num = hs[i - j] * tableau[i] - hs[i] * tableau[i - 1];
            tableau[i] = num / (hs[i - j] - hs[i]);
        }
        prev_best = best;
        best = tableau[n - 1];
    }
    (best, (best - prev_best).abs())
}
