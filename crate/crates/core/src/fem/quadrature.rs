//! Gauss rules on the reference triangle and on the unit interval.
//!
//! Triangle rules are conical products of Gauss-Legendre rules (collapsed
//! coordinates), which keeps every weight positive and every point interior
//! for any degree.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 10;

/// Volume rule degree used for assembly and indicators of P2 fields.
pub const DEFAULT_VOLUME_DEGREE: usize = 8;
/// Edge rule degree used for jump terms.
pub const DEFAULT_EDGE_DEGREE: usize = 6;

/// Quadrature on the reference triangle with vertices (0,0), (1,0), (0,1).
/// Points are barycentric triples; weights sum to 1/2.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Quadrature on `[0, 1]`; weights sum to 1.
#[derive(Clone, Debug)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

impl EdgeRule {
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `n`-point Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

fn build_simplex(degree: usize) -> QuadRule {
    // x = u (1 - v), y = v with Jacobian (1 - v): a degree-p monomial becomes
    // degree p in u and degree p + 1 in v.
    let n = (degree + 3) / 2;
    let (nodes, weights) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut w = Vec::with_capacity(n * n);
    for (&v, &wv) in nodes.iter().zip(&weights) {
        for (&u, &wu) in nodes.iter().zip(&weights) {
            let x = u * (1.0 - v);
            let y = v;
            points.push([1.0 - x - y, x, y]);
            w.push(wu * wv * (1.0 - v));
        }
    }
    QuadRule { points, weights: w, degree }
}

fn build_edge(degree: usize) -> EdgeRule {
    let (points, weights) = gauss_legendre(degree / 2 + 1);
    EdgeRule { points, weights, degree }
}

/// Triangle rule exact for polynomials of total degree `degree`.
pub fn simplex_rule(degree: usize) -> Result<&'static QuadRule> {
    static RULES: OnceLock<Vec<QuadRule>> = OnceLock::new();
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    Ok(&RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_simplex).collect())[degree])
}

/// Interval rule exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<&'static EdgeRule> {
    static RULES: OnceLock<Vec<EdgeRule>> = OnceLock::new();
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    Ok(&RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_edge).collect())[degree])
}
