//! Local Lagrange and bubble bases written in barycentric coordinates.
//!
//! Local numbering: nodes 0..3 are the vertices. For P2, node `3 + i` is the
//! midpoint of the edge opposite vertex `i`. For P1 + bubble, node 3 is the
//! cubic bubble `27 l0 l1 l2`.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub const MAX_LOCAL: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    P1,
    P2,
    P1Bubble,
}

impl Family {
    pub fn n_local(self) -> usize {
        match self {
            Family::P1 => 3,
            Family::P2 => 6,
            Family::P1Bubble => 4,
        }
    }

    /// Polynomial degree of the local space.
    pub fn degree(self) -> usize {
        match self {
            Family::P1 => 1,
            Family::P2 => 2,
            Family::P1Bubble => 3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::P1 => "P1",
            Family::P2 => "P2",
            Family::P1Bubble => "P1+bubble",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1" => Ok(Family::P1),
            "p2" => Ok(Family::P2),
            "p1bubble" | "p1+bubble" | "p1b" => Ok(Family::P1Bubble),
            other => Err(Error::InvalidConfig(format!("unknown element family `{other}`"))),
        }
    }
}

/// Local basis values and derivatives with respect to the three
/// barycentric coordinates, treated as independent variables.
#[derive(Clone, Copy, Debug)]
pub struct LocalShape {
    pub n: usize,
    pub values: [f64; MAX_LOCAL],
    pub dlambda: [[f64; 3]; MAX_LOCAL],
}

pub fn shape(family: Family, l: [f64; 3]) -> LocalShape {
    let mut s = LocalShape { n: family.n_local(), values: [0.0; MAX_LOCAL], dlambda: [[0.0; 3]; MAX_LOCAL] };
    match family {
        Family::P1 => {
            for i in 0..3 {
                s.values[i] = l[i];
                s.dlambda[i][i] = 1.0;
            }
        }
        Family::P2 => {
            for i in 0..3 {
                s.values[i] = l[i] * (2.0 * l[i] - 1.0);
                s.dlambda[i][i] = 4.0 * l[i] - 1.0;
                let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                s.values[3 + i] = 4.0 * l[a] * l[b];
                s.dlambda[3 + i][a] = 4.0 * l[b];
                s.dlambda[3 + i][b] = 4.0 * l[a];
            }
        }
        Family::P1Bubble => {
            for i in 0..3 {
                s.values[i] = l[i];
                s.dlambda[i][i] = 1.0;
            }
            s.values[3] = 27.0 * l[0] * l[1] * l[2];
            s.dlambda[3] = [27.0 * l[1] * l[2], 27.0 * l[0] * l[2], 27.0 * l[0] * l[1]];
        }
    }
    s
}

/// Second derivatives of local basis function `i` with respect to the
/// barycentric coordinates.
pub fn hessian_lambda(family: Family, i: usize, l: [f64; 3]) -> [[f64; 3]; 3] {
    let mut h = [[0.0; 3]; 3];
    match (family, i) {
        (Family::P1, _) => {}
        (Family::P2, 0..=2) => h[i][i] = 4.0,
        (Family::P2, _) => {
            let k = i - 3;
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            h[a][b] = 4.0;
            h[b][a] = 4.0;
        }
        (Family::P1Bubble, 3) => {
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        h[a][b] = 27.0 * l[3 - a - b];
                    }
                }
            }
        }
        (Family::P1Bubble, _) => {}
    }
    h
}

/// Barycentric coordinates of the Lagrange node `i` (the barycenter for the
/// bubble).
pub fn node_lambda(family: Family, i: usize) -> [f64; 3] {
    match (family, i) {
        (_, 0..=2) => {
            let mut l = [0.0; 3];
            l[i] = 1.0;
            l
        }
        (Family::P2, _) => {
            let mut l = [0.5; 3];
            l[i - 3] = 0.0;
            l
        }
        _ => [1.0 / 3.0; 3],
    }
}

/// Basis values and gradients with respect to the reference coordinates
/// `(xi, eta)`, where `l0 = 1 - xi - eta`, `l1 = xi`, `l2 = eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub ref_grads: Vec<[f64; 2]>,
}

pub fn eval_basis(family: Family, l: [f64; 3]) -> BasisValues {
    let s = shape(family, l);
    BasisValues {
        values: s.values[..s.n].to_vec(),
        ref_grads: s.dlambda[..s.n].iter().map(|d| [d[1] - d[0], d[2] - d[0]]).collect(),
    }
}
