//! Residual-based a posteriori indicators.
//!
//! Per element `K` with `h = diam(K)` and `D` the largest vertex distance
//! to the source point `z`:
//!
//! ```text
//! ns_K^2   = h^2 |R|^2_K + |div u|^2_K + h sum_{e in K, interior} |J|^2_e
//! heat_K^2 = h^2 D^a |r|^2_K + h D^a sum_e |j|^2_e + |H| h^a [z in closed K]
//! ```
//!
//! where `R = nu lap u - (u.grad) u - 1/2 (div u) u - grad p + T g`,
//! `r = kappa lap T - u.grad T - (div u) T`, and `J`, `j` are the normal
//! jumps of `nu grad u - p I` and `kappa grad T - T u`.

use crate::config::ProblemConfig;
use crate::error::Result;
use crate::fem::basis::Family;
use crate::fem::quadrature::{self, QuadRule, DEFAULT_EDGE_DEGREE, DEFAULT_VOLUME_DEGREE, MAX_DEGREE};
use crate::fem::{element_laplacian, ElementMap};
use crate::mesh::{Mesh, Point2};
use crate::solver::SolutionState;

#[derive(Clone, Debug, PartialEq)]
pub struct Indicators {
    pub ns_sq: Vec<f64>,
    pub heat_sq: Vec<f64>,
    pub total_sq: Vec<f64>,
    pub ns: f64,
    pub heat: f64,
    pub total: f64,
}

impl Indicators {
    pub fn len(&self) -> usize {
        self.total_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total_sq.is_empty()
    }

    /// Combined indicator `E_K` (not squared).
    pub fn element(&self, k: usize) -> f64 {
        self.total_sq[k].sqrt()
    }
}

/// Volume rule exact for the squared residuals. With the bubble-enriched
/// velocity, `(u.grad) u` has degree 5.
fn volume_rule(state: &SolutionState) -> &'static QuadRule {
    let degree = match state.u.space().family() {
        Family::P1Bubble => MAX_DEGREE,
        _ => DEFAULT_VOLUME_DEGREE,
    };
    quadrature::simplex_rule(degree).expect("rule within supported degree")
}

/// `(|R|^2_K, |div u|^2_K, |r|^2_K)`.
fn volume_terms(mesh: &Mesh, state: &SolutionState, cfg: &ProblemConfig, k: usize, rule: &QuadRule) -> (f64, f64, f64) {
    let map = ElementMap::new(mesh, k);
    let lap_u = element_laplacian(mesh, &state.u, k);
    let lap_t = element_laplacian(mesh, &state.t, k);
    let (mut res_ns, mut res_div, mut res_heat) = (0.0, 0.0, 0.0);
    for (l, w) in rule.iter() {
        let u = state.u.eval_local(&map, k, l);
        let p = state.p.eval_local(&map, k, l);
        let t = state.t.eval_local(&map, k, l);
        let at = |v: &[f64; 3]| v[0] * l[0] + v[1] * l[1] + v[2] * l[2];
        let div = u.div();
        let mut r2 = 0.0;
        for c in 0..2 {
            let conv = u.value[0] * u.grad[c][0] + u.value[1] * u.grad[c][1];
            let r = cfg.nu * at(&lap_u[c]) - conv - 0.5 * div * u.value[c] - p.grad[0][c] + t.value[0] * cfg.g[c];
            r2 += r * r;
        }
        let rh = cfg.kappa * at(&lap_t[0]) - (u.value[0] * t.grad[0][0] + u.value[1] * t.grad[0][1]) - div * t.value[0];
        res_ns += w * r2;
        res_div += w * div * div;
        res_heat += w * rh * rh;
    }
    let jac = 2.0 * map.area;
    (res_ns * jac, res_div * jac, res_heat * jac)
}

/// Squared L2 norms over interior edge `e` of the momentum and heat flux
/// jumps. Boundary edges give zero.
pub fn edge_jumps(mesh: &Mesh, state: &SolutionState, cfg: &ProblemConfig, e: usize) -> (f64, f64) {
    let edge = &mesh.edges()[e];
    let (k1, Some(k2)) = edge.elements else {
        return (0.0, 0.0);
    };
    let a = mesh.vertices()[edge.vertices[0]];
    let b = mesh.vertices()[edge.vertices[1]];
    let len = a.dist(b);
    // unit normal pointing out of k1
    let mut n = [(b.y - a.y) / len, -(b.x - a.x) / len];
    let c1 = mesh.barycenter(k1);
    if n[0] * (c1.x - a.x) + n[1] * (c1.y - a.y) > 0.0 {
        n = [-n[0], -n[1]];
    }
    let maps = [ElementMap::new(mesh, k1), ElementMap::new(mesh, k2)];
    let rule = quadrature::edge_rule(DEFAULT_EDGE_DEGREE).expect("default edge rule exists");
    let (mut jn, mut jh) = (0.0, 0.0);
    for (s, w) in rule.iter() {
        let x = Point2::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
        let mut flux = [[0.0; 2]; 2];
        let mut heat = [0.0; 2];
        for (side, (map, k)) in maps.iter().zip([k1, k2]).enumerate() {
            let l = map.barycentric(x);
            let u = state.u.eval_local(map, k, l);
            let p = state.p.eval_local(map, k, l).value[0];
            let t = state.t.eval_local(map, k, l);
            for c in 0..2 {
                flux[side][c] = cfg.nu * (u.grad[c][0] * n[0] + u.grad[c][1] * n[1]) - p * n[c];
            }
            heat[side] = cfg.kappa * (t.grad[0][0] * n[0] + t.grad[0][1] * n[1])
                - t.value[0] * (u.value[0] * n[0] + u.value[1] * n[1]);
        }
        let dj = [flux[0][0] - flux[1][0], flux[0][1] - flux[1][1]];
        jn += w * (dj[0] * dj[0] + dj[1] * dj[1]);
        jh += w * (heat[0] - heat[1]).powi(2);
    }
    (jn * len, jh * len)
}

fn delta_term(mesh: &Mesh, cfg: &ProblemConfig, k: usize, h: f64) -> f64 {
    if mesh.element_contains(k, cfg.z) {
        cfg.h_strength.abs() * h.powf(cfg.alpha)
    } else {
        0.0
    }
}

/// `ns_K^2` for a single element.
pub fn navier_indicator(mesh: &Mesh, state: &SolutionState, cfg: &ProblemConfig, k: usize) -> Result<f64> {
    state.check_mesh(mesh)?;
    let h = mesh.diameter(k);
    let (r, div, _) = volume_terms(mesh, state, cfg, k, volume_rule(state));
    let jumps: f64 = mesh.element_edges(k).iter().map(|&e| edge_jumps(mesh, state, cfg, e).0).sum();
    Ok(h * h * r + div + h * jumps)
}

/// `heat_K^2` for a single element.
pub fn heat_indicator(mesh: &Mesh, state: &SolutionState, cfg: &ProblemConfig, k: usize) -> Result<f64> {
    state.check_mesh(mesh)?;
    let g = mesh.geometry(k, cfg.z);
    let (_, _, r) = volume_terms(mesh, state, cfg, k, volume_rule(state));
    let jumps: f64 = mesh.element_edges(k).iter().map(|&e| edge_jumps(mesh, state, cfg, e).1).sum();
    let weight = g.d.powf(cfg.alpha);
    Ok(g.h * g.h * weight * r + g.h * weight * jumps + delta_term(mesh, cfg, k, g.h))
}

/// All element indicators; each interior edge is integrated once and
/// credited to both neighbours with their own size factors.
pub fn compute_indicators(mesh: &Mesh, state: &SolutionState, cfg: &ProblemConfig) -> Result<Indicators> {
    state.check_mesh(mesh)?;
    let ne = mesh.n_elements();
    let mut jump_ns = vec![0.0; ne];
    let mut jump_heat = vec![0.0; ne];
    for (e, edge) in mesh.edges().iter().enumerate() {
        if let (k1, Some(k2)) = edge.elements {
            let (jn, jh) = edge_jumps(mesh, state, cfg, e);
            for k in [k1, k2] {
                jump_ns[k] += jn;
                jump_heat[k] += jh;
            }
        }
    }
    let mut ns_sq = Vec::with_capacity(ne);
    let mut heat_sq = Vec::with_capacity(ne);
    for k in 0..ne {
        let g = mesh.geometry(k, cfg.z);
        let (r, div, rh) = volume_terms(mesh, state, cfg, k, volume_rule(state));
        let weight = g.d.powf(cfg.alpha);
        ns_sq.push(g.h * g.h * r + div + g.h * jump_ns[k]);
        heat_sq.push(g.h * g.h * weight * rh + g.h * weight * jump_heat[k] + delta_term(mesh, cfg, k, g.h));
    }
    let total_sq: Vec<f64> = ns_sq.iter().zip(&heat_sq).map(|(a, b)| a + b).collect();
    let sum = |v: &[f64]| v.iter().sum::<f64>().sqrt();
    Ok(Indicators { ns: sum(&ns_sq), heat: sum(&heat_sq), total: sum(&total_sq), ns_sq, heat_sq, total_sq })
}
