//! Direct sparse solves and the Picard fixed-point iteration.

use crate::assembly::{assemble_heat, assemble_oseen, Spaces, SparseSystem};
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::fem::{weighted_grad_norm, ElementMap, FieldVec};
use crate::mesh::Mesh;
use crate::sparse_lu::{Csc, SparseLu};

/// Relative residual bound every solve must meet.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-9;

const REFINEMENT_STEPS: usize = 3;

const EQUILIBRATION_SWEEPS: usize = 8;

/// Symmetric scaling `d` such that `D A D` has rows and columns of unit
/// max-norm (Ruiz iteration). The Oseen blocks differ in scale by powers of
/// the mesh size, which otherwise costs accuracy on strongly graded meshes.
fn equilibrate(sys: &SparseSystem) -> Vec<f64> {
    let n = sys.n;
    let mut d = vec![1.0; n];
    for _ in 0..EQUILIBRATION_SWEEPS {
        let mut row_max = vec![0.0f64; n];
        for (i, rm) in row_max.iter_mut().enumerate() {
            for (j, v) in sys.row(i) {
                *rm = rm.max((d[i] * v * d[j]).abs());
            }
        }
        // rows and columns share the scale; use the max over both
        let mut col_max = vec![0.0f64; n];
        for i in 0..n {
            for (j, v) in sys.row(i) {
                col_max[j] = col_max[j].max((d[i] * v * d[j]).abs());
            }
        }
        for i in 0..n {
            let m = row_max[i].max(col_max[i]);
            if m > 0.0 {
                d[i] /= m.sqrt();
            }
        }
    }
    d
}

/// Solves `A x = b` with a sparse LU factorization of the equilibrated
/// matrix, followed by iterative refinement while the residual decreases.
///
/// Fails with [`Error::Singular`] when a row is empty, the factorization
/// breaks down, or the solution is not finite.
pub fn solve_sparse(sys: &SparseSystem) -> Result<Vec<f64>> {
    let n = sys.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    for i in 0..n {
        if sys.row(i).all(|(_, v)| v == 0.0) {
            return Err(Error::Singular { row: i });
        }
    }
    let d = equilibrate(sys);
    let scaled: Vec<f64> = (0..n)
        .flat_map(|i| {
            let d = &d;
            sys.row(i).map(move |(j, v)| d[i] * v * d[j])
        })
        .collect();
    let csc = Csc::from_csr(n, &sys.row_ptr, &sys.col_idx, &scaled);
    let lu = SparseLu::factor(&csc)?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let b: Vec<f64> = rhs.iter().zip(&d).map(|(b, d)| b * d).collect();
        lu.solve(&b).iter().zip(&d).map(|(y, d)| y * d).collect()
    };

    let mut x = solve(&sys.rhs);
    if let Some(row) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Singular { row });
    }
    let a_norm = sys.norm_inf();
    let b_norm = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = |x: &[f64]| SOLVE_RESIDUAL_TOL * (a_norm * x.iter().fold(0.0f64, |m, v| m.max(v.abs())) + b_norm);

    let mut residual = sys.residual_inf(&x);
    for _ in 0..REFINEMENT_STEPS {
        if residual == 0.0 {
            break;
        }
        let r: Vec<f64> = sys.rhs.iter().zip(sys.matvec(&x)).map(|(b, ax)| b - ax).collect();
        let dx = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let res = sys.residual_inf(&candidate);
        if !(res < residual) {
            break;
        }
        x = candidate;
        residual = res;
    }
    if let Some(row) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Singular { row });
    }
    if residual > bound(&x) {
        return Err(Error::InaccurateSolve { residual, bound: bound(&x) });
    }
    Ok(x)
}

/// Discrete velocity, pressure and temperature on one mesh.
#[derive(Clone, Debug)]
pub struct SolutionState {
    pub u: FieldVec,
    pub p: FieldVec,
    pub t: FieldVec,
    pub mesh_id: u64,
    pub generation: u32,
    pub picard_iterations: usize,
    /// False when the fixed-point iteration hit its iteration cap.
    pub converged: bool,
    /// Euclidean norm of the last stacked coefficient update.
    pub last_increment: f64,
}

impl SolutionState {
    pub fn zeros(mesh: &Mesh, spaces: &Spaces) -> SolutionState {
        SolutionState {
            u: FieldVec::zeros(spaces.velocity.clone()),
            p: FieldVec::zeros(spaces.pressure.clone()),
            t: FieldVec::zeros(spaces.temperature.clone()),
            mesh_id: mesh.id(),
            generation: mesh.generation(),
            picard_iterations: 0,
            converged: true,
            last_increment: 0.0,
        }
    }

    /// `||(u, p, T) - (u', p', T')||_2` over raw coefficients.
    pub fn distance(&self, other: &SolutionState) -> f64 {
        [(&self.u, &other.u), (&self.p, &other.p), (&self.t, &other.t)]
            .iter()
            .flat_map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_id != mesh.id() {
            return Err(Error::MeshMismatch { expected: mesh.id(), found: self.mesh_id });
        }
        Ok(())
    }
}

/// One Oseen solve linearized about `w` with buoyancy from `t_prev`.
pub fn oseen_step(
    mesh: &Mesh,
    spaces: &Spaces,
    w: &FieldVec,
    t_prev: &FieldVec,
    cfg: &ProblemConfig,
) -> Result<(FieldVec, FieldVec)> {
    let sys = assemble_oseen(mesh, spaces, w, t_prev, cfg)?;
    let x = solve_sparse(&sys)?;
    let nu = spaces.velocity.len();
    let np = spaces.pressure.len();
    let u = FieldVec::from_values(spaces.velocity.clone(), x[..nu].to_vec())?;
    let p = FieldVec::from_values(spaces.pressure.clone(), x[nu..nu + np].to_vec())?;
    Ok((u, p))
}

/// One heat solve with convecting velocity `u`.
pub fn heat_step(mesh: &Mesh, spaces: &Spaces, u: &FieldVec, cfg: &ProblemConfig) -> Result<FieldVec> {
    let sys = assemble_heat(mesh, &spaces.temperature, u, cfg)?;
    let x = solve_sparse(&sys)?;
    FieldVec::from_values(spaces.temperature.clone(), x)
}

/// Starting point of the fixed-point iteration: pure diffusion for the
/// temperature, then Stokes driven by its buoyancy.
pub fn initial_guess(mesh: &Mesh, spaces: &Spaces, cfg: &ProblemConfig) -> Result<SolutionState> {
    spaces.check_mesh(mesh)?;
    let zero_u = FieldVec::zeros(spaces.velocity.clone());
    let t = heat_step(mesh, spaces, &zero_u, cfg)?;
    let (u, p) = oseen_step(mesh, spaces, &zero_u, &t, cfg)?;
    Ok(SolutionState {
        u,
        p,
        t,
        mesh_id: mesh.id(),
        generation: mesh.generation(),
        picard_iterations: 0,
        converged: false,
        last_increment: f64::INFINITY,
    })
}

/// Oseen step about the current iterate, then heat step with the new
/// velocity. Returns the new state with the iteration count advanced.
pub fn picard_sweep(mesh: &Mesh, spaces: &Spaces, state: &SolutionState, cfg: &ProblemConfig) -> Result<SolutionState> {
    state.check_mesh(mesh)?;
    let (u, p) = oseen_step(mesh, spaces, &state.u, &state.t, cfg)?;
    let t = heat_step(mesh, spaces, &u, cfg)?;
    let mut next = SolutionState {
        u,
        p,
        t,
        mesh_id: mesh.id(),
        generation: mesh.generation(),
        picard_iterations: state.picard_iterations + 1,
        converged: false,
        last_increment: 0.0,
    };
    next.last_increment = next.distance(state);
    Ok(next)
}

/// Fixed-point iteration until the stacked coefficient update drops to
/// `cfg.picard_tol`. Hitting `cfg.picard_max` is not an error: the last
/// iterate is returned with `converged == false`.
pub fn picard_solve(mesh: &Mesh, spaces: &Spaces, cfg: &ProblemConfig) -> Result<SolutionState> {
    let mut state = initial_guess(mesh, spaces, cfg)?;
    for _ in 0..cfg.picard_max.max(1) {
        state = picard_sweep(mesh, spaces, &state, cfg)?;
        if state.last_increment <= cfg.picard_tol {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Size quantities of a discrete solution that enter the smallness
/// assumptions of the error analysis. Reported, not enforced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monitors {
    /// `||grad u_h||_{L2}`.
    pub velocity_grad_l2: f64,
    /// `||grad T_h||_{L2(|x - z|^alpha)}`.
    pub temperature_grad_weighted: f64,
}

pub fn monitors(mesh: &Mesh, state: &SolutionState, cfg: &ProblemConfig) -> Result<Monitors> {
    state.check_mesh(mesh)?;
    let rule = crate::fem::simplex_rule(crate::fem::quadrature::DEFAULT_VOLUME_DEGREE)?;
    let mut acc = 0.0;
    for k in 0..mesh.n_elements() {
        let map = ElementMap::new(mesh, k);
        let s: f64 = rule
            .iter()
            .map(|(l, w)| {
                let g = state.u.eval_local(&map, k, l).grad;
                w * (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2))
            })
            .sum();
        acc += s * 2.0 * map.area;
    }
    Ok(Monitors {
        velocity_grad_l2: acc.sqrt(),
        temperature_grad_weighted: weighted_grad_norm(mesh, &state.t, cfg.alpha, cfg.z)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(dense: &[&[f64]], rhs: &[f64]) -> SparseSystem {
        let mut trip = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        SparseSystem::from_triplets(dense.len(), trip, rhs.to_vec())
    }

    #[test]
    fn identity() {
        let sys = system(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]], &[3.0, -1.0, 2.5]);
        assert_eq!(solve_sparse(&sys).unwrap(), vec![3.0, -1.0, 2.5]);
    }

    #[test]
    fn two_by_two() {
        let sys = system(&[&[2.0, 1.0], &[1.0, 3.0]], &[3.0, 4.0]);
        let x = solve_sparse(&sys).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_is_singular() {
        let sys = SparseSystem::from_triplets(3, vec![(0, 0, 0.0), (1, 1, 0.0)], vec![1.0, 1.0, 1.0]);
        assert!(matches!(solve_sparse(&sys), Err(Error::Singular { row: 0 })));
    }

    #[test]
    fn rank_deficient_is_singular() {
        let sys = system(&[&[1.0, 2.0], &[2.0, 4.0]], &[1.0, 1.0]);
        assert!(matches!(solve_sparse(&sys), Err(Error::Singular { .. } | Error::InaccurateSolve { .. })));
    }

    #[test]
    fn saddle_point_needs_pivoting() {
        // zero leading diagonal entry
        let sys = system(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]], &[1.0, 2.0, 3.0]);
        let x = solve_sparse(&sys).unwrap();
        assert!(sys.residual_inf(&x) < 1e-14);
    }
}
