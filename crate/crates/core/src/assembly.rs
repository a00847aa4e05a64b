//! Sparse systems of the fixed-point iteration: the Oseen step for velocity
//! and pressure, and the convected heat step.
//!
//! Oseen unknowns are ordered `[u_x, u_y, p, mu]`, where `mu` is the scalar
//! multiplier enforcing zero mean pressure. Homogeneous Dirichlet DOFs are
//! eliminated symmetrically: their rows and columns are dropped and a unit
//! diagonal with zero right-hand side is inserted.

use std::sync::Arc;

use crate::config::{ElementFamily, ProblemConfig};
use crate::error::{Error, Result};
use crate::fem::basis::{self, MAX_LOCAL};
use crate::fem::quadrature::{self, DEFAULT_VOLUME_DEGREE};
use crate::fem::{build_space, DofMap, ElementMap, FieldVec};
use crate::mesh::Mesh;

/// Square sparse matrix in CSR layout together with a right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    /// Sums duplicate entries in insertion order, so the result depends only
    /// on the order in which triplets were pushed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>, rhs: Vec<f64>) -> Self {
        assert_eq!(rhs.len(), n, "rhs length must equal the matrix dimension");
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "entry ({i}, {j}) outside a {n}x{n} matrix");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSystem { n, row_ptr, col_idx, values, rhs }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(pos) => self.values[r.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `||A x - b||_inf`.
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(&self.rhs).map(|(ax, b)| (ax - b).abs()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        m
    }
}

/// Velocity, pressure and temperature spaces on one mesh.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub velocity: Arc<DofMap>,
    pub pressure: Arc<DofMap>,
    pub temperature: Arc<DofMap>,
}

impl Spaces {
    pub fn new(mesh: &Mesh, family: ElementFamily) -> Self {
        Spaces {
            velocity: Arc::new(build_space(mesh, family.velocity(), 2, true)),
            pressure: Arc::new(build_space(mesh, family.pressure(), 1, false)),
            temperature: Arc::new(build_space(mesh, family.temperature(), 1, true)),
        }
    }

    /// Total dimension of the discrete spaces: free velocity and temperature
    /// DOFs plus the pressure space modulo constants.
    pub fn ndof(&self) -> usize {
        self.velocity.n_free() + self.pressure.n_dofs().saturating_sub(1) + self.temperature.n_free()
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        self.velocity.check_mesh(mesh)?;
        self.pressure.check_mesh(mesh)?;
        self.temperature.check_mesh(mesh)
    }

    /// Dimension of the bordered Oseen system.
    pub fn oseen_size(&self) -> usize {
        2 * self.velocity.n_dofs() + self.pressure.n_dofs() + 1
    }
}

fn check_field(mesh: &Mesh, field: &FieldVec) -> Result<()> {
    field.space().check_mesh(mesh)
}

fn volume_rule() -> &'static quadrature::QuadRule {
    quadrature::simplex_rule(DEFAULT_VOLUME_DEGREE).expect("default volume rule exists")
}

/// Oseen system linearized about `w` with buoyancy from `t_prev`:
/// `nu (grad u, grad v) + ((w.grad) u, v) + 1/2 (div w u, v) - (p, div v) = (t_prev g, v)`,
/// `-(q, div u) = 0`, plus the zero-mean pressure border.
pub fn assemble_oseen(
    mesh: &Mesh,
    spaces: &Spaces,
    w: &FieldVec,
    t_prev: &FieldVec,
    cfg: &ProblemConfig,
) -> Result<SparseSystem> {
    spaces.check_mesh(mesh)?;
    check_field(mesh, w)?;
    check_field(mesh, t_prev)?;
    let vel = &spaces.velocity;
    let pre = &spaces.pressure;
    let (nv, np) = (vel.n_dofs(), pre.n_dofs());
    let n = spaces.oseen_size();
    let mu_row = n - 1;
    let vfam = vel.family();
    let nvl = vfam.n_local();
    let rule = volume_rule();

    let mut trip = Vec::with_capacity(mesh.n_elements() * (2 * nvl * nvl + 4 * 3 * nvl + 6));
    let mut rhs = vec![0.0; n];

    for k in 0..mesh.n_elements() {
        let map = ElementMap::new(mesh, k);
        let vd = vel.element_dofs(k);
        let pd = pre.element_dofs(k);

        let mut a = [[0.0; MAX_LOCAL]; MAX_LOCAL];
        let mut b = [[[0.0; MAX_LOCAL]; 3]; 2];
        let mut f = [[0.0; MAX_LOCAL]; 2];
        let mut m = [0.0; 3];
        for (l, wq) in rule.iter() {
            let jac = wq * 2.0 * map.area;
            let sv = basis::shape(vfam, l);
            let gv = map.gradients(&sv);
            let wv = w.eval_with(k, &sv, &gv);
            let div_w = wv.div();
            let temp = t_prev.eval_local(&map, k, l).value[0];
            for i in 0..nvl {
                for j in 0..nvl {
                    let visc = gv[j][0] * gv[i][0] + gv[j][1] * gv[i][1];
                    let conv = (wv.value[0] * gv[j][0] + wv.value[1] * gv[j][1]) * sv.values[i];
                    let skew = 0.5 * div_w * sv.values[j] * sv.values[i];
                    a[i][j] += jac * (cfg.nu * visc + conv + skew);
                }
            }
            // pressure basis is P1: the barycentric coordinates themselves
            for c in 0..2 {
                for ip in 0..3 {
                    for j in 0..nvl {
                        b[c][ip][j] -= jac * l[ip] * gv[j][c];
                    }
                }
                for i in 0..nvl {
                    f[c][i] += jac * temp * cfg.g[c] * sv.values[i];
                }
            }
            for ip in 0..3 {
                m[ip] += jac * l[ip];
            }
        }

        for c in 0..2 {
            for i in 0..nvl {
                if vel.is_dirichlet(vd[i]) {
                    continue;
                }
                let row = c * nv + vd[i];
                for j in 0..nvl {
                    if !vel.is_dirichlet(vd[j]) {
                        trip.push((row, c * nv + vd[j], a[i][j]));
                    }
                }
                rhs[row] += f[c][i];
            }
            for ip in 0..3 {
                let prow = 2 * nv + pd[ip];
                for j in 0..nvl {
                    if vel.is_dirichlet(vd[j]) {
                        continue;
                    }
                    let ucol = c * nv + vd[j];
                    trip.push((prow, ucol, b[c][ip][j]));
                    trip.push((ucol, prow, b[c][ip][j]));
                }
            }
        }
        for ip in 0..3 {
            let prow = 2 * nv + pd[ip];
            trip.push((prow, mu_row, m[ip]));
            trip.push((mu_row, prow, m[ip]));
        }
    }
    for d in vel.dirichlet_dofs() {
        for c in 0..2 {
            trip.push((c * nv + d, c * nv + d, 1.0));
        }
    }
    debug_assert_eq!(n, 2 * nv + np + 1);
    Ok(SparseSystem::from_triplets(n, trip, rhs))
}

/// Heat system `kappa (grad T, grad r) - (T u, grad r) = h r(z)`.
pub fn assemble_heat(
    mesh: &Mesh,
    temperature: &Arc<DofMap>,
    u: &FieldVec,
    cfg: &ProblemConfig,
) -> Result<SparseSystem> {
    temperature.check_mesh(mesh)?;
    check_field(mesh, u)?;
    let n = temperature.n_dofs();
    let tfam = temperature.family();
    let ntl = tfam.n_local();
    let rule = volume_rule();

    let mut trip = Vec::with_capacity(mesh.n_elements() * ntl * ntl);
    let mut rhs = vec![0.0; n];
    for k in 0..mesh.n_elements() {
        let map = ElementMap::new(mesh, k);
        let td = temperature.element_dofs(k);
        let mut a = [[0.0; MAX_LOCAL]; MAX_LOCAL];
        for (l, wq) in rule.iter() {
            let jac = wq * 2.0 * map.area;
            let st = basis::shape(tfam, l);
            let gt = map.gradients(&st);
            let uv = u.eval_local(&map, k, l).value;
            for i in 0..ntl {
                let u_dot_grad = uv[0] * gt[i][0] + uv[1] * gt[i][1];
                for j in 0..ntl {
                    let diff = gt[j][0] * gt[i][0] + gt[j][1] * gt[i][1];
                    a[i][j] += jac * (cfg.kappa * diff - st.values[j] * u_dot_grad);
                }
            }
        }
        for i in 0..ntl {
            if temperature.is_dirichlet(td[i]) {
                continue;
            }
            for j in 0..ntl {
                if !temperature.is_dirichlet(td[j]) {
                    trip.push((td[i], td[j], a[i][j]));
                }
            }
        }
    }
    for d in temperature.dirichlet_dofs() {
        trip.push((d, d, 1.0));
    }

    // Point source: one containing element carries every basis function
    // that is nonzero at z.
    let k = *mesh.locate(cfg.z).first().ok_or(Error::OutsideDomain(cfg.z))?;
    let map = ElementMap::new(mesh, k);
    let st = basis::shape(tfam, map.barycentric(cfg.z));
    for (i, &d) in temperature.element_dofs(k).iter().enumerate() {
        if !temperature.is_dirichlet(d) {
            rhs[d] += cfg.h_strength * st.values[i];
        }
    }
    Ok(SparseSystem::from_triplets(n, trip, rhs))
}

/// Skew-symmetrized convection form
/// `N(w; u, v) = ((w.grad) u, v) + 1/2 (div w, u.v)`.
pub fn skew_trilinear(mesh: &Mesh, velocity: &Arc<DofMap>, w: &FieldVec, u: &FieldVec, v: &FieldVec) -> Result<f64> {
    velocity.check_mesh(mesh)?;
    for f in [w, u, v] {
        check_field(mesh, f)?;
    }
    let rule = volume_rule();
    let mut total = 0.0;
    for k in 0..mesh.n_elements() {
        let map = ElementMap::new(mesh, k);
        let mut acc = 0.0;
        for (l, wq) in rule.iter() {
            let wv = w.eval_local(&map, k, l);
            let uv = u.eval_local(&map, k, l);
            let vv = v.eval_local(&map, k, l);
            let mut conv = 0.0;
            for c in 0..2 {
                conv += (wv.value[0] * uv.grad[c][0] + wv.value[1] * uv.grad[c][1]) * vv.value[c];
            }
            let dot = uv.value[0] * vv.value[0] + uv.value[1] * vv.value[1];
            acc += wq * (conv + 0.5 * wv.div() * dot);
        }
        total += acc * 2.0 * map.area;
    }
    Ok(total)
}

/// `int q_i div u` for every pressure basis function `q_i`.
pub fn divergence_moments(mesh: &Mesh, pressure: &Arc<DofMap>, u: &FieldVec) -> Result<Vec<f64>> {
    pressure.check_mesh(mesh)?;
    check_field(mesh, u)?;
    let rule = volume_rule();
    let mut out = vec![0.0; pressure.n_dofs()];
    for k in 0..mesh.n_elements() {
        let map = ElementMap::new(mesh, k);
        let pd = pressure.element_dofs(k);
        for (l, wq) in rule.iter() {
            let jac = wq * 2.0 * map.area;
            let div = u.eval_local(&map, k, l).div();
            let s = basis::shape(pressure.family(), l);
            for (i, &d) in pd.iter().enumerate() {
                out[d] += jac * s.values[i] * div;
            }
        }
    }
    Ok(out)
}

/// `int f` for a scalar field.
pub fn integrate(mesh: &Mesh, f: &FieldVec) -> Result<f64> {
    check_field(mesh, f)?;
    let rule = volume_rule();
    let mut total = 0.0;
    for k in 0..mesh.n_elements() {
        let map = ElementMap::new(mesh, k);
        let s: f64 = rule.iter().map(|(l, w)| w * f.eval_local(&map, k, l).value[0]).sum();
        total += s * 2.0 * map.area;
    }
    Ok(total)
}
