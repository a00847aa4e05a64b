//! Degree-of-freedom maps and discrete fields.
//!
//! Global numbering of scalar DOFs: vertices first (DOF `v` is vertex `v`),
//! then edges for P2 or elements for P1 + bubble. Vector fields are stored
//! component-major: all x-coefficients, then all y-coefficients.

use std::sync::Arc;

use super::basis::{self, Family, LocalShape, MAX_LOCAL};
use super::quadrature;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point2};

/// Affine map data of one element.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    pub vertices: [Point2; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementMap {
    pub fn new(mesh: &Mesh, k: usize) -> Self {
        Self::from_points(mesh.element_vertices(k))
    }

    pub fn from_points(v: [Point2; 3]) -> Self {
        let twice_area = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[1].y - v[0].y) * (v[2].x - v[0].x);
        let mut grad_lambda = [[0.0; 2]; 3];
        for (i, g) in grad_lambda.iter_mut().enumerate() {
            let a = v[(i + 1) % 3];
            let b = v[(i + 2) % 3];
            *g = [(a.y - b.y) / twice_area, (b.x - a.x) / twice_area];
        }
        ElementMap { vertices: v, area: 0.5 * twice_area, grad_lambda }
    }

    pub fn point(&self, l: [f64; 3]) -> Point2 {
        let v = &self.vertices;
        Point2::new(l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x, l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y)
    }

    pub fn barycentric(&self, p: Point2) -> [f64; 3] {
        let mut l = [0.0; 3];
        for (i, li) in l.iter_mut().enumerate() {
            let base = self.vertices[(i + 1) % 3];
            let g = self.grad_lambda[i];
            *li = g[0] * (p.x - base.x) + g[1] * (p.y - base.y);
        }
        l
    }

    /// Physical gradient of a function given its barycentric derivatives.
    pub fn gradient(&self, dl: [f64; 3]) -> [f64; 2] {
        let g = &self.grad_lambda;
        [dl[0] * g[0][0] + dl[1] * g[1][0] + dl[2] * g[2][0], dl[0] * g[0][1] + dl[1] * g[1][1] + dl[2] * g[2][1]]
    }

    pub fn gradients(&self, s: &LocalShape) -> [[f64; 2]; MAX_LOCAL] {
        let mut out = [[0.0; 2]; MAX_LOCAL];
        for i in 0..s.n {
            out[i] = self.gradient(s.dlambda[i]);
        }
        out
    }

    /// Gram matrix `grad l_a . grad l_b`.
    pub fn lambda_gram(&self) -> [[f64; 3]; 3] {
        let g = &self.grad_lambda;
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] = g[a][0] * g[b][0] + g[a][1] * g[b][1];
            }
        }
        m
    }
}

/// A finite element space on one mesh.
#[derive(Clone, Debug)]
pub struct DofMap {
    family: Family,
    components: usize,
    n_dofs: usize,
    n_local: usize,
    element_dofs: Vec<usize>,
    dirichlet: Vec<bool>,
    mesh_id: u64,
    generation: u32,
}

/// Builds the scalar or vector space of `family` on `mesh`. With
/// `homogeneous_dirichlet`, every DOF on the boundary is constrained.
pub fn build_space(mesh: &Mesh, family: Family, components: usize, homogeneous_dirichlet: bool) -> DofMap {
    assert!(components == 1 || components == 2, "components must be 1 or 2");
    let nv = mesh.n_vertices();
    let n_dofs = match family {
        Family::P1 => nv,
        Family::P2 => nv + mesh.n_edges(),
        Family::P1Bubble => nv + mesh.n_elements(),
    };
    let n_local = family.n_local();
    let mut element_dofs = Vec::with_capacity(n_local * mesh.n_elements());
    for (k, tri) in mesh.elements().iter().enumerate() {
        element_dofs.extend_from_slice(tri);
        match family {
            Family::P1 => {}
            Family::P2 => element_dofs.extend(mesh.element_edges(k).iter().map(|&e| nv + e)),
            Family::P1Bubble => element_dofs.push(nv + k),
        }
    }

    let mut dirichlet = vec![false; n_dofs];
    if homogeneous_dirichlet {
        for (e, edge) in mesh.edges().iter().enumerate() {
            if edge.is_boundary() {
                dirichlet[edge.vertices[0]] = true;
                dirichlet[edge.vertices[1]] = true;
                if family == Family::P2 {
                    dirichlet[nv + e] = true;
                }
            }
        }
    }

    DofMap {
        family,
        components,
        n_dofs,
        n_local,
        element_dofs,
        dirichlet,
        mesh_id: mesh.id(),
        generation: mesh.generation(),
    }
}

impl DofMap {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Number of scalar DOFs per component.
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    /// Length of a coefficient vector.
    pub fn len(&self) -> usize {
        self.n_dofs * self.components
    }

    pub fn is_empty(&self) -> bool {
        self.n_dofs == 0
    }

    /// Scalar DOFs of element `k` in local node order.
    pub fn element_dofs(&self, k: usize) -> &[usize] {
        &self.element_dofs[k * self.n_local..(k + 1) * self.n_local]
    }

    pub fn is_dirichlet(&self, scalar_dof: usize) -> bool {
        self.dirichlet[scalar_dof]
    }

    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs).filter(|&i| self.dirichlet[i]).collect()
    }

    /// Unconstrained scalar DOFs times components: the dimension of the
    /// discrete space.
    pub fn n_free(&self) -> usize {
        self.components * self.dirichlet.iter().filter(|&&d| !d).count()
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    /// Index into a coefficient vector.
    pub fn global(&self, component: usize, scalar_dof: usize) -> usize {
        component * self.n_dofs + scalar_dof
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_id != mesh.id() {
            return Err(Error::MeshMismatch { expected: mesh.id(), found: self.mesh_id });
        }
        Ok(())
    }
}

/// Value and gradient of a (up to two component) field at a point.
/// `grad[c]` is the gradient of component `c`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointValue {
    pub value: [f64; 2],
    pub grad: [[f64; 2]; 2],
}

impl PointValue {
    pub fn div(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }
}

/// Coefficient vector of a discrete function.
#[derive(Clone, Debug)]
pub struct FieldVec {
    space: Arc<DofMap>,
    values: Vec<f64>,
}

impl FieldVec {
    pub fn zeros(space: Arc<DofMap>) -> Self {
        let values = vec![0.0; space.len()];
        FieldVec { space, values }
    }

    pub fn from_values(space: Arc<DofMap>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), found: values.len() });
        }
        Ok(FieldVec { space, values })
    }

    /// Lagrange interpolant of `f(point, component)`. The bubble coefficient
    /// matches `f` at the barycenter.
    pub fn interpolate(mesh: &Mesh, space: Arc<DofMap>, f: impl Fn(Point2, usize) -> f64) -> Result<Self> {
        space.check_mesh(mesh)?;
        let mut values = vec![0.0; space.len()];
        let family = space.family();
        for k in 0..mesh.n_elements() {
            let map = ElementMap::new(mesh, k);
            let dofs = space.element_dofs(k);
            for c in 0..space.components() {
                for (i, &d) in dofs.iter().enumerate() {
                    let p = map.point(basis::node_lambda(family, i));
                    let mut v = f(p, c);
                    if family == Family::P1Bubble && i == 3 {
                        let linear: f64 = (0..3).map(|j| f(map.vertices[j], c)).sum::<f64>() / 3.0;
                        v -= linear;
                    }
                    values[space.global(c, d)] = v;
                }
            }
        }
        Ok(FieldVec { space, values })
    }

    pub fn space(&self) -> &Arc<DofMap> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn components(&self) -> usize {
        self.space.components()
    }

    pub fn set_dirichlet_zero(&mut self) {
        for c in 0..self.space.components() {
            for d in self.space.dirichlet_dofs() {
                let g = self.space.global(c, d);
                self.values[g] = 0.0;
            }
        }
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> FieldVec {
        FieldVec { space: self.space.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Local coefficients of component `c` on element `k`.
    pub fn local(&self, k: usize, c: usize) -> [f64; MAX_LOCAL] {
        let mut out = [0.0; MAX_LOCAL];
        for (i, &d) in self.space.element_dofs(k).iter().enumerate() {
            out[i] = self.values[self.space.global(c, d)];
        }
        out
    }

    /// Evaluates on element `k` from precomputed shape values and physical
    /// gradients.
    pub fn eval_with(&self, k: usize, shape: &LocalShape, grads: &[[f64; 2]; MAX_LOCAL]) -> PointValue {
        let mut out = PointValue::default();
        for c in 0..self.components() {
            let coef = self.local(k, c);
            for i in 0..shape.n {
                out.value[c] += coef[i] * shape.values[i];
                out.grad[c][0] += coef[i] * grads[i][0];
                out.grad[c][1] += coef[i] * grads[i][1];
            }
        }
        out
    }

    /// Evaluates on element `k` at barycentric point `l`.
    pub fn eval_local(&self, map: &ElementMap, k: usize, l: [f64; 3]) -> PointValue {
        let s = basis::shape(self.space.family(), l);
        let g = map.gradients(&s);
        self.eval_with(k, &s, &g)
    }
}

/// Value of `field` at `p`. On interfaces the lowest-numbered containing
/// element is used; the field is continuous so the choice does not matter.
pub fn point_evaluate(mesh: &Mesh, field: &FieldVec, p: Point2) -> Result<Vec<f64>> {
    field.space().check_mesh(mesh)?;
    let k = *mesh.locate(p).first().ok_or(Error::OutsideDomain(p))?;
    let map = ElementMap::new(mesh, k);
    let v = field.eval_local(&map, k, map.barycentric(p));
    Ok(v.value[..field.components()].to_vec())
}

/// Laplacian of each component of `field` on element `k`. It is affine in
/// the barycentric coordinates and returned as its values at the three
/// vertices; constant for P2, zero for P1.
pub fn element_laplacian(mesh: &Mesh, field: &FieldVec, k: usize) -> Vec<[f64; 3]> {
    let family = field.space().family();
    let map = ElementMap::new(mesh, k);
    let gram = map.lambda_gram();
    let mut out = vec![[0.0; 3]; field.components()];
    if family == Family::P1 {
        return out;
    }
    for (c, lap) in out.iter_mut().enumerate() {
        let coef = field.local(k, c);
        for (vtx, slot) in lap.iter_mut().enumerate() {
            let l = basis::node_lambda(Family::P1, vtx);
            let mut acc = 0.0;
            for (i, &ci) in coef.iter().enumerate().take(family.n_local()) {
                let h = basis::hessian_lambda(family, i, l);
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        s += h[a][b] * gram[a][b];
                    }
                }
                acc += ci * s;
            }
            *slot = acc;
        }
    }
    out
}

/// Levels of graded subdivision toward the weight singularity.
const WEIGHT_REFINE_LEVELS: u32 = 8;

/// `(int |grad field|^2 |x - z|^alpha dx)^(1/2)` by quadrature; elements
/// whose closure contains `z` are quadrisected toward `z`.
pub fn weighted_grad_norm(mesh: &Mesh, field: &FieldVec, alpha: f64, z: Point2) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    field.space().check_mesh(mesh)?;
    let rule = quadrature::simplex_rule(quadrature::MAX_DEGREE)?;
    let mut total = 0.0;
    for k in 0..mesh.n_elements() {
        let map = ElementMap::new(mesh, k);
        let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let levels = if mesh.element_contains(k, z) { WEIGHT_REFINE_LEVELS } else { 0 };
        total += weighted_piece(field, &map, k, corners, alpha, z, levels, rule);
    }
    Ok(total.sqrt())
}

#[allow(clippy::too_many_arguments)]
fn weighted_piece(
    field: &FieldVec,
    map: &ElementMap,
    k: usize,
    corners: [[f64; 3]; 3],
    alpha: f64,
    z: Point2,
    levels: u32,
    rule: &quadrature::QuadRule,
) -> f64 {
    let contains_z = || {
        let sub = ElementMap::from_points(corners.map(|c| map.point(c)));
        sub.barycentric(z).iter().all(|&l| l >= -crate::mesh::LOCATE_TOLERANCE)
    };
    if levels > 0 && contains_z() {
        let mid = |a: [f64; 3], b: [f64; 3]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
        let [a, b, c] = corners;
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        return [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
            .into_iter()
            .map(|sub| weighted_piece(field, map, k, sub, alpha, z, levels - 1, rule))
            .sum();
    }
    // sub-triangle area relative to the element
    let det = {
        let [a, b, c] = corners;
        (b[1] - a[1]) * (c[2] - a[2]) - (b[2] - a[2]) * (c[1] - a[1])
    }
    .abs();
    let mut acc = 0.0;
    for (q, w) in rule.iter() {
        let mut l = [0.0; 3];
        for j in 0..3 {
            l[j] = q[0] * corners[0][j] + q[1] * corners[1][j] + q[2] * corners[2][j];
        }
        let v = field.eval_local(map, k, l);
        let g2: f64 = (0..field.components()).map(|c| v.grad[c][0].powi(2) + v.grad[c][1].powi(2)).sum();
        let r = map.point(l).dist(z);
        acc += w * g2 * r.powf(alpha);
    }
    acc * 2.0 * map.area * det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Domain;

    fn mesh() -> Mesh {
        let m = Mesh::initial(Domain::Square, 3).unwrap();
        // a few non-uniform bisections so elements are not all alike
        m.bisect(&[0, 4, 7])
    }

    fn sample_points(mesh: &Mesh) -> Vec<(usize, [f64; 3])> {
        let ls = [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [1.0 / 3.0; 3], [0.0, 0.5, 0.5]];
        (0..mesh.n_elements()).flat_map(|k| ls.iter().map(move |&l| (k, l))).collect()
    }

    #[test]
    fn partition_of_unity() {
        let mesh = mesh();
        for family in [Family::P1, Family::P2, Family::P1Bubble] {
            let space = Arc::new(build_space(&mesh, family, 1, false));
            let one = FieldVec::interpolate(&mesh, space, |_, _| 1.0).unwrap();
            for (k, l) in sample_points(&mesh) {
                let map = ElementMap::new(&mesh, k);
                let v = one.eval_local(&map, k, l);
                assert!((v.value[0] - 1.0).abs() < 1e-14, "{family}");
                assert!(v.grad[0][0].abs() < 1e-12 && v.grad[0][1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let mesh = mesh();
        let f = |p: Point2| p.x * p.x + 3.0 * p.x * p.y - p.y + 2.0;
        let grad = |p: Point2| [2.0 * p.x + 3.0 * p.y, 3.0 * p.x - 1.0];
        let space = Arc::new(build_space(&mesh, Family::P2, 1, false));
        let fh = FieldVec::interpolate(&mesh, space, |p, _| f(p)).unwrap();
        for (k, l) in sample_points(&mesh) {
            let map = ElementMap::new(&mesh, k);
            let p = map.point(l);
            let v = fh.eval_local(&map, k, l);
            assert!((v.value[0] - f(p)).abs() < 1e-13);
            let g = grad(p);
            assert!((v.grad[0][0] - g[0]).abs() < 1e-12 && (v.grad[0][1] - g[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_quadratic_interpolant() {
        let mesh = mesh();
        let space = Arc::new(build_space(&mesh, Family::P2, 2, false));
        // component 0: x^2 (lap 2), component 1: x^2 - 3 y^2 + xy (lap -4)
        let fh = FieldVec::interpolate(&mesh, space, |p, c| match c {
            0 => p.x * p.x,
            _ => p.x * p.x - 3.0 * p.y * p.y + p.x * p.y,
        })
        .unwrap();
        for k in 0..mesh.n_elements() {
            let lap = element_laplacian(&mesh, &fh, k);
            for v in 0..3 {
                assert!((lap[0][v] - 2.0).abs() < 1e-11);
                assert!((lap[1][v] + 4.0).abs() < 1e-11);
            }
        }
        let p1 = Arc::new(build_space(&mesh, Family::P1, 1, false));
        let lin = FieldVec::interpolate(&mesh, p1, |p, _| p.x * p.y).unwrap();
        assert_eq!(element_laplacian(&mesh, &lin, 0), vec![[0.0; 3]]);
    }

    #[test]
    fn bubble_laplacian_is_affine_and_exact() {
        // lap(27 l0 l1 l2) on the unit right triangle, by finite differences
        let mesh = Mesh::from_parts(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            0,
        )
        .unwrap();
        let space = Arc::new(build_space(&mesh, Family::P1Bubble, 1, false));
        let mut values = vec![0.0; space.len()];
        values[3] = 1.0;
        let b = FieldVec::from_values(space, values).unwrap();
        let lap = element_laplacian(&mesh, &b, 0);
        let map = ElementMap::new(&mesh, 0);
        let eval = |x: f64, y: f64| b.eval_local(&map, 0, map.barycentric(Point2::new(x, y))).value[0];
        let (x, y, h) = (0.25, 0.3, 1e-4);
        let fd = (eval(x + h, y) + eval(x - h, y) + eval(x, y + h) + eval(x, y - h) - 4.0 * eval(x, y)) / (h * h);
        let l = map.barycentric(Point2::new(x, y));
        let exact = lap[0][0] * l[0] + lap[0][1] * l[1] + lap[0][2] * l[2];
        assert!((fd - exact).abs() < 1e-5, "{fd} vs {exact}");
    }

    #[test]
    fn point_evaluation() {
        let mesh = mesh();
        let space = Arc::new(build_space(&mesh, Family::P1, 1, false));
        let f = FieldVec::interpolate(&mesh, space.clone(), |p, _| 2.0 * p.x - p.y + 0.5).unwrap();
        let v = point_evaluate(&mesh, &f, Point2::new(0.3, 0.7)).unwrap();
        assert!((v[0] - (0.6 - 0.7 + 0.5)).abs() < 1e-14);
        // vertex and edge points agree from every side
        let v = point_evaluate(&mesh, &f, Point2::new(1.0 / 3.0, 2.0 / 3.0)).unwrap();
        assert!((v[0] - (2.0 / 3.0 - 2.0 / 3.0 + 0.5)).abs() < 1e-14);
        assert!(matches!(point_evaluate(&mesh, &f, Point2::new(1.5, 0.5)), Err(Error::OutsideDomain(_))));
        let other = Mesh::initial(Domain::Square, 2).unwrap();
        assert!(matches!(point_evaluate(&other, &f, Point2::new(0.5, 0.5)), Err(Error::MeshMismatch { .. })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mesh = mesh();
        let space = Arc::new(build_space(&mesh, Family::P2, 2, false));
        let values: Vec<f64> = (0..space.len()).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        let f = FieldVec::from_values(space, values).unwrap();
        let h = 1e-6;
        for (k, l) in sample_points(&mesh).into_iter().filter(|(_, l)| l.iter().all(|&x| x > 0.05)) {
            let map = ElementMap::new(&mesh, k);
            let p = map.point(l);
            let at = |dx: f64, dy: f64| f.eval_local(&map, k, map.barycentric(Point2::new(p.x + dx, p.y + dy)));
            let v = at(0.0, 0.0);
            for c in 0..2 {
                let gx = (at(h, 0.0).value[c] - at(-h, 0.0).value[c]) / (2.0 * h);
                let gy = (at(0.0, h).value[c] - at(0.0, -h).value[c]) / (2.0 * h);
                assert!((gx - v.grad[c][0]).abs() < 1e-6 && (gy - v.grad[c][1]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dirichlet_dofs_lie_on_the_boundary() {
        let mesh = mesh();
        let space = build_space(&mesh, Family::P2, 2, true);
        let on_boundary = |p: Point2| {
            p.x.abs() < 1e-14 || p.y.abs() < 1e-14 || (p.x - 1.0).abs() < 1e-14 || (p.y - 1.0).abs() < 1e-14
        };
        for k in 0..mesh.n_elements() {
            let map = ElementMap::new(&mesh, k);
            for (i, &d) in space.element_dofs(k).iter().enumerate() {
                let p = map.point(basis::node_lambda(Family::P2, i));
                assert_eq!(space.is_dirichlet(d), on_boundary(p));
            }
        }
        assert_eq!(space.n_free(), 2 * (space.n_dofs() - space.dirichlet_dofs().len()));
    }

    #[test]
    fn weighted_norm_of_zero_field() {
        let mesh = mesh();
        let space = Arc::new(build_space(&mesh, Family::P2, 1, true));
        let zero = FieldVec::zeros(space);
        assert_eq!(weighted_grad_norm(&mesh, &zero, 0.5, Point2::new(0.5, 0.5)).unwrap(), 0.0);
        assert!(matches!(weighted_grad_norm(&mesh, &zero, 2.0, Point2::new(0.5, 0.5)), Err(Error::AlphaOutOfRange(_))));
    }

    #[test]
    fn weighted_norm_with_smooth_weight() {
        // |grad x|^2 = 1 and z outside the square: a smooth integrand
        let mesh = mesh();
        let space = Arc::new(build_space(&mesh, Family::P1, 1, false));
        let f = FieldVec::interpolate(&mesh, space, |p, _| p.x).unwrap();
        let z = Point2::new(3.0, 4.0);
        let got = weighted_grad_norm(&mesh, &f, 1.0, z).unwrap();
        let (x, w) = quadrature::gauss_legendre(20);
        let mut oracle = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                oracle += w[i] * w[j] * Point2::new(x[i], x[j]).dist(z);
            }
        }
        assert!((got * got - oracle).abs() < 1e-8, "{} vs {oracle}", got * got);
    }

    #[test]
    fn weighted_norm_with_singular_weight_at_a_vertex() {
        let mesh = Mesh::from_parts(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            0,
        )
        .unwrap();
        let space = Arc::new(build_space(&mesh, Family::P1, 1, false));
        let hat = FieldVec::from_values(space, vec![1.0, 0.0, 0.0]).unwrap();
        let z = Point2::new(0.0, 0.0);
        let got = weighted_grad_norm(&mesh, &hat, 1.0, z).unwrap();
        // midpoint rule on the centroids of a 1000 x 1000 subdivision
        let n = 1000;
        let h = 1.0 / n as f64;
        let mut oracle = 0.0;
        for i in 0..n {
            for j in 0..n - i {
                let (x, y) = (i as f64 * h, j as f64 * h);
                oracle += Point2::new(x + h / 3.0, y + h / 3.0).dist(z);
                if i + j + 1 < n {
                    oracle += Point2::new(x + 2.0 * h / 3.0, y + 2.0 * h / 3.0).dist(z);
                }
            }
        }
        oracle *= 2.0 * 0.5 * h * h;
        assert!((got * got - oracle).abs() < 1e-4, "{} vs {oracle}", got * got);
    }
}
