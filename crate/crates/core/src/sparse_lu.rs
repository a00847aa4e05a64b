//! Left-looking sparse LU with partial pivoting (Gilbert-Peierls).
//!
//! Rows and columns are ordered by approximate minimum degree on the
//! pattern of `A + A^T`, and pivots stay on the diagonal whenever they are
//! large enough, so the finite element systems keep their symmetric fill.
//! Each column of `L` and `U` is computed by a sparse triangular solve
//! whose nonzero pattern is found by depth-first search in the graph of `L`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::amd;
use faer::sparse::SymbolicSparseColMatRef;

use crate::error::{Error, Result};

/// A candidate pivot on the diagonal is kept if it is at least this
/// fraction of the largest candidate in its column. Small values keep the
/// symmetric fill of the ordering on saddle point systems, whose pressure
/// diagonal only fills in during elimination; the solver's iterative
/// refinement recovers the accuracy given up here.
const DIAGONAL_PREFERENCE: f64 = 1e-3;

/// Pivots below this multiple of the largest entry of the original column
/// count as zero.
const PIVOT_TOL: f64 = 1e-14;

/// Compressed sparse column matrix.
#[derive(Clone, Debug)]
pub struct Csc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csc {
    /// Transposes a CSR layout into CSC.
    pub fn from_csr(n: usize, row_ptr: &[usize], col_idx: &[usize], values: &[f64]) -> Csc {
        let mut counts = vec![0usize; n + 1];
        for &j in col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0; col_idx.len()];
        let mut vals = vec![0.0; col_idx.len()];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                let j = col_idx[p];
                let dst = next[j];
                row_idx[dst] = i;
                vals[dst] = values[p];
                next[j] += 1;
            }
        }
        Csc { n, col_ptr, row_idx, values: vals }
    }
}

#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    /// Column permutation: step `k` factors original column `col_perm[k]`.
    col_perm: Vec<usize>,
    /// Row permutation: original row `i` is pivot row `row_perm_inv[i]`.
    row_perm_inv: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

fn fill_reducing_order(a: &Csc) -> Result<Vec<usize>> {
    let n = a.n;
    let nnz = a.row_idx.len();
    let symbolic = SymbolicSparseColMatRef::new_checked(n, n, &a.col_ptr, None, &a.row_idx);
    let mut perm = vec![0usize; n];
    let mut perm_inv = vec![0usize; n];
    let mut buf = MemBuffer::try_new(amd::order_scratch::<usize>(n, nnz))
        .map_err(|_| Error::InvalidConfig("out of memory computing the fill-reducing ordering".into()))?;
    amd::order(&mut perm, &mut perm_inv, symbolic, amd::Control::default(), MemStack::new(&mut buf))
        .map_err(|e| Error::InvalidConfig(format!("fill-reducing ordering failed: {e:?}")))?;
    Ok(perm)
}

impl SparseLu {
    pub fn factor(a: &Csc) -> Result<SparseLu> {
        let n = a.n;
        let col_perm = fill_reducing_order(a)?;

        const NONE: usize = usize::MAX;
        let mut row_perm_inv = vec![NONE; n];
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let cap = 4 * a.row_idx.len() + n;
        let (mut l_idx, mut l_val) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
        let (mut u_idx, mut u_val) = (Vec::with_capacity(cap), Vec::with_capacity(cap));

        let mut x = vec![0.0; n];
        let mut marked = vec![false; n];
        let mut pattern: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);

        for k in 0..n {
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());
            let col = col_perm[k];
            let rows = &a.row_idx[a.col_ptr[col]..a.col_ptr[col + 1]];
            let vals = &a.values[a.col_ptr[col]..a.col_ptr[col + 1]];

            // Reach of the column in the graph of L, in reverse postorder.
            pattern.clear();
            for &r in rows {
                if marked[r] {
                    continue;
                }
                marked[r] = true;
                stack.push((r, 0));
                while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                    let j = row_perm_inv[node];
                    let children = if j == NONE { &[][..] } else { &l_idx[l_ptr[j] + 1..l_end(&l_ptr, &l_idx, j)] };
                    let mut pushed = false;
                    while *next < children.len() {
                        let child = children[*next];
                        *next += 1;
                        if !marked[child] {
                            marked[child] = true;
                            stack.push((child, 0));
                            pushed = true;
                            break;
                        }
                    }
                    if !pushed {
                        stack.pop();
                        pattern.push(node);
                    }
                }
            }
            for &r in &pattern {
                marked[r] = false;
            }

            // Sparse triangular solve x = L \ A[:, col].
            for (&r, &v) in rows.iter().zip(vals) {
                x[r] = v;
            }
            for &node in pattern.iter().rev() {
                let j = row_perm_inv[node];
                if j == NONE {
                    continue;
                }
                let xj = x[node];
                if xj != 0.0 {
                    for p in l_ptr[j] + 1..l_end(&l_ptr, &l_idx, j) {
                        x[l_idx[p]] -= l_val[p] * xj;
                    }
                }
            }

            // Pivot among rows not yet used.
            let mut pivot_row = NONE;
            let mut pivot_abs = -1.0;
            let col_max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for &node in pattern.iter().rev() {
                let v = x[node];
                if row_perm_inv[node] == NONE {
                    if v.abs() > pivot_abs {
                        pivot_abs = v.abs();
                        pivot_row = node;
                    }
                } else {
                    u_idx.push(row_perm_inv[node]);
                    u_val.push(v);
                }
            }
            if pivot_row == NONE || !(pivot_abs > PIVOT_TOL * col_max) {
                return Err(Error::Singular { row: col });
            }
            if row_perm_inv[col] == NONE && x[col].abs() >= DIAGONAL_PREFERENCE * pivot_abs && x[col] != 0.0 {
                pivot_row = col;
            }
            let pivot = x[pivot_row];
            u_idx.push(k);
            u_val.push(pivot);
            row_perm_inv[pivot_row] = k;
            l_idx.push(pivot_row);
            l_val.push(1.0);
            for &node in pattern.iter().rev() {
                if row_perm_inv[node] == NONE {
                    l_idx.push(node);
                    l_val.push(x[node] / pivot);
                }
                x[node] = 0.0;
            }
        }
        l_ptr.push(l_idx.len());
        u_ptr.push(u_idx.len());

        // Row indices of L in pivot order.
        for r in l_idx.iter_mut() {
            *r = row_perm_inv[*r];
        }
        Ok(SparseLu { n, col_perm, row_perm_inv, l_ptr, l_idx, l_val, u_ptr, u_idx, u_val })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.row_perm_inv[i]] = b[i];
        }
        // unit lower triangular, diagonal stored first
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                    y[self.l_idx[p]] -= self.l_val[p] * yj;
                }
            }
        }
        // upper triangular, diagonal stored last
        for j in (0..n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            y[j] /= self.u_val[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.u_ptr[j]..last {
                    y[self.u_idx[p]] -= self.u_val[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.col_perm[k]] = y[k];
        }
        x
    }

    /// Number of stored entries in `L` and `U`.
    pub fn fill(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }
}

/// End of column `j` of the partially built `L`: columns before the current
/// step are complete, so `l_ptr[j + 1]` exists except for the newest one.
fn l_end(l_ptr: &[usize], l_idx: &[usize], j: usize) -> usize {
    if j + 1 < l_ptr.len() {
        l_ptr[j + 1]
    } else {
        l_idx.len()
    }
}
