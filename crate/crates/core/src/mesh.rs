//! Conforming triangulations of the two experiment domains and
//! longest-edge bisection.
//!
//! A [`Mesh`] is immutable. Refinement ([`Mesh::bisect`]) returns a new mesh
//! with a fresh identifier, so that finite element spaces and coefficient
//! vectors built on an older mesh can be detected as stale.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Barycentric tolerance used to decide membership in a closed element.
pub const LOCATE_TOLERANCE: f64 = 1e-12;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Twice the signed area of the triangle `(a, b, c)`.
fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// The computational domains of the two benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    /// The unit square `(0,1)^2`.
    Square,
    /// `(-1,1)^2` without the lower right quadrant `[0,1) x [-1,0)`.
    LShape,
}

impl Domain {
    pub fn area(self) -> f64 {
        match self {
            Domain::Square => 1.0,
            Domain::LShape => 3.0,
        }
    }

    /// True if `p` lies in the open domain.
    pub fn contains_interior(self, p: Point2) -> bool {
        match self {
            Domain::Square => p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0,
            Domain::LShape => {
                let in_box = p.x > -1.0 && p.x < 1.0 && p.y > -1.0 && p.y < 1.0;
                in_box && !(p.x >= 0.0 && p.y <= 0.0)
            }
        }
    }

    /// Subdivisions per unit length of the benchmark's initial mesh: a 2x2
    /// grid (8 elements) for the square, 96 elements for the L-shape.
    pub fn default_resolution(self) -> usize {
        match self {
            Domain::Square => 2,
            Domain::LShape => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Square => "square",
            Domain::LShape => "lshape",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" => Ok(Domain::Square),
            "lshape" | "l-shape" | "l_shape" => Ok(Domain::LShape),
            other => Err(Error::InvalidConfig(format!("unknown domain `{other}`"))),
        }
    }
}

/// An edge of the triangulation together with the one or two elements
/// sharing it.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Vertex indices, smaller index first.
    pub vertices: [usize; 2],
    pub elements: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements.1.is_none()
    }

    /// The element across this edge as seen from `k`.
    pub fn other(&self, k: usize) -> Option<usize> {
        match self.elements {
            (a, Some(b)) if a == k => Some(b),
            (a, Some(b)) if b == k => Some(a),
            _ => None,
        }
    }
}

/// Size quantities of one element relative to a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    /// Diameter, i.e. the longest edge.
    pub h: f64,
    /// Largest distance from a vertex to the reference point.
    pub d: f64,
    pub area: f64,
}

/// Element patch: a center element and the elements around it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub center: usize,
    pub members: Vec<usize>,
}

impl Patch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.binary_search(&k).is_ok()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    id: u64,
    generation: u32,
    vertices: Vec<Point2>,
    elements: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// Local edge `i` of an element is the edge opposite its local vertex `i`.
    element_edges: Vec<[usize; 3]>,
    vertex_elements: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds a mesh from raw vertex and element lists, checking orientation,
    /// positivity of areas and edge manifoldness.
    pub fn from_parts(vertices: Vec<Point2>, elements: Vec<[usize; 3]>, generation: u32) -> Result<Mesh> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} has non-finite coordinates")));
        }
        for (k, tri) in elements.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("element {k} references a missing vertex")));
            }
            let twice_area = cross(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(twice_area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "element {k} has non-positive signed area {}",
                    0.5 * twice_area
                )));
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(elements.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(elements.len() * 2);
        let mut element_edges = Vec::with_capacity(elements.len());
        for (k, tri) in elements.iter().enumerate() {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(Edge { vertices: [key.0, key.1], elements: (k, None) });
                    edges.len() - 1
                });
                let edge = &mut edges[e];
                if edge.elements.0 != k {
                    if edge.elements.1.is_some() {
                        return Err(Error::InvalidMesh(format!(
                            "edge ({}, {}) is shared by more than two elements",
                            key.0, key.1
                        )));
                    }
                    edge.elements.1 = Some(k);
                }
                *slot = e;
            }
            element_edges.push(local);
        }

        let mut vertex_elements = vec![Vec::new(); vertices.len()];
        for (k, tri) in elements.iter().enumerate() {
            for &v in tri {
                vertex_elements[v].push(k);
            }
        }

        Ok(Mesh {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            generation,
            vertices,
            elements,
            edges,
            element_edges,
            vertex_elements,
        })
    }

    /// Uniform grid of squares with side `1/n`, each split by its diagonal
    /// of positive slope.
    pub fn initial(domain: Domain, n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidConfig("initial mesh resolution must be at least 1".into()));
        }
        let (origin, cells) = match domain {
            Domain::Square => (0.0, n),
            Domain::LShape => (-1.0, 2 * n),
        };
        let coord = |i: usize| i as f64 / n as f64 + origin;
        let keep_cell = |i: usize, j: usize| match domain {
            Domain::Square => true,
            // drop cells inside [0,1) x [-1,0)
            Domain::LShape => !(i >= n && j < n),
        };

        let mut index = vec![usize::MAX; (cells + 1) * (cells + 1)];
        let mut vertices = Vec::new();
        let mut elements = Vec::new();
        let mut vertex = |i: usize, j: usize, vertices: &mut Vec<Point2>| {
            let slot = &mut index[j * (cells + 1) + i];
            if *slot == usize::MAX {
                *slot = vertices.len();
                vertices.push(Point2::new(coord(i), coord(j)));
            }
            *slot
        };
        // Number vertices row by row so the ordering does not depend on the
        // cell traversal.
        for j in 0..=cells {
            for i in 0..=cells {
                let touches_kept =
                    [(i, j), (i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j.wrapping_sub(1))]
                        .iter()
                        .any(|&(ci, cj)| ci < cells && cj < cells && keep_cell(ci, cj));
                if touches_kept {
                    vertex(i, j, &mut vertices);
                }
            }
        }
        for j in 0..cells {
            for i in 0..cells {
                if !keep_cell(i, j) {
                    continue;
                }
                let v00 = vertex(i, j, &mut vertices);
                let v10 = vertex(i + 1, j, &mut vertices);
                let v11 = vertex(i + 1, j + 1, &mut vertices);
                let v01 = vertex(i, j + 1, &mut vertices);
                elements.push([v00, v10, v11]);
                elements.push([v00, v11, v01]);
            }
        }
        Mesh::from_parts(vertices, elements, 0)
    }

    /// Unique identifier of this mesh instance.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Number of refinement steps since the initial mesh.
    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn element_edges(&self, k: usize) -> [usize; 3] {
        self.element_edges[k]
    }

    pub fn vertex_elements(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    pub fn element_vertices(&self, k: usize) -> [Point2; 3] {
        let t = self.elements[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn area(&self, k: usize) -> f64 {
        let [a, b, c] = self.element_vertices(k);
        0.5 * cross(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.area(k)).sum()
    }

    pub fn barycenter(&self, k: usize) -> Point2 {
        let [a, b, c] = self.element_vertices(k);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Length of the longest edge of `k`.
    pub fn diameter(&self, k: usize) -> f64 {
        let [a, b, c] = self.element_vertices(k);
        a.dist_sq(b).max(b.dist_sq(c)).max(c.dist_sq(a)).sqrt()
    }

    /// `h_K`, the largest vertex distance to `z`, and the area of `k`.
    pub fn geometry(&self, k: usize, z: Point2) -> Geometry {
        let verts = self.element_vertices(k);
        let d = verts.iter().map(|v| v.dist_sq(z)).fold(0.0, f64::max).sqrt();
        Geometry { h: self.diameter(k), d, area: self.area(k) }
    }

    /// Barycentric coordinates of `p` with respect to element `k`.
    pub fn barycentric(&self, k: usize, p: Point2) -> [f64; 3] {
        let v = self.element_vertices(k);
        let twice_area = cross(v[0], v[1], v[2]);
        [cross(p, v[1], v[2]) / twice_area, cross(v[0], p, v[2]) / twice_area, cross(v[0], v[1], p) / twice_area]
    }

    /// True if `p` lies in the closed element `k`.
    pub fn element_contains(&self, k: usize, p: Point2) -> bool {
        self.barycentric(k, p).iter().all(|&l| l >= -LOCATE_TOLERANCE)
    }

    /// All elements whose closure contains `p`, in increasing order.
    pub fn locate(&self, p: Point2) -> Vec<usize> {
        (0..self.n_elements())
            .filter(|&k| {
                let [a, b, c] = self.element_vertices(k);
                let slack = LOCATE_TOLERANCE * self.diameter(k);
                let (xmin, xmax) = (a.x.min(b.x).min(c.x) - slack, a.x.max(b.x).max(c.x) + slack);
                let (ymin, ymax) = (a.y.min(b.y).min(c.y) - slack, a.y.max(b.y).max(c.y) + slack);
                p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax && self.element_contains(k, p)
            })
            .collect()
    }

    /// Edge patch `N_K` (elements sharing an edge with `k`) and vertex patch
    /// `S_K` (elements sharing a vertex with `k`). Both contain `k`.
    pub fn element_patches(&self, k: usize) -> (Patch, Patch) {
        let mut edge_patch: BTreeSet<usize> = BTreeSet::from([k]);
        for &e in &self.element_edges[k] {
            if let Some(other) = self.edges[e].other(k) {
                edge_patch.insert(other);
            }
        }
        let vertex_patch: BTreeSet<usize> =
            self.elements[k].iter().flat_map(|&v| self.vertex_elements[v].iter().copied()).collect();
        (
            Patch { center: k, members: edge_patch.into_iter().collect() },
            Patch { center: k, members: vertex_patch.into_iter().collect() },
        )
    }

    /// Smallest interior angle over all elements, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.n_elements())
            .map(|k| {
                let v = self.element_vertices(k);
                (0..3)
                    .map(|i| {
                        let (p, q, r) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
                        let (ax, ay) = (q.x - p.x, q.y - p.y);
                        let (bx, by) = (r.x - p.x, r.y - p.y);
                        (ax * by - ay * bx).atan2(ax * bx + ay * by).abs()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_area(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.area(k)).fold(f64::INFINITY, f64::min)
    }

    /// Checks positive areas and that no vertex hangs in the interior of an
    /// edge owned by a single element.
    pub fn check_conformity(&self) -> Result<()> {
        for k in 0..self.n_elements() {
            if !(self.area(k) > 0.0) {
                return Err(Error::InvalidMesh(format!("element {k} is degenerate")));
            }
        }
        // A hanging node lies in the interior of a boundary-flagged edge.
        for (e, edge) in self.edges.iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let a = self.vertices[edge.vertices[0]];
            let b = self.vertices[edge.vertices[1]];
            let len = a.dist(b);
            for (v, p) in self.vertices.iter().enumerate() {
                if edge.vertices.contains(&v) {
                    continue;
                }
                let on_line = cross(a, b, *p).abs() <= 1e-12 * len * len;
                let t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len);
                if on_line && t > 1e-12 && t < 1.0 - 1e-12 {
                    return Err(Error::InvalidMesh(format!("hanging vertex {v} on edge {e}")));
                }
            }
        }
        Ok(())
    }

    /// Longest-edge bisection of the marked elements with recursive closure
    /// along the longest-edge propagation path, so the result is conforming.
    ///
    /// Every marked element is bisected exactly once, either directly or as
    /// part of the closure triggered by another marked element.
    pub fn bisect(&self, marked: &[usize]) -> Mesh {
        if marked.is_empty() {
            return self.clone();
        }
        let mut refiner = Refiner::new(self);
        for &k in marked {
            assert!(k < self.n_elements(), "marked element {k} out of range");
            refiner.refine(k);
        }
        refiner.finish(self.generation + 1)
    }
}

/// Mutable working copy used during one refinement pass.
struct Refiner {
    vertices: Vec<Point2>,
    tris: Vec<Option<[usize; 3]>>,
    edge_tris: HashMap<(usize, usize), [Option<usize>; 2]>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Refiner {
    fn new(mesh: &Mesh) -> Self {
        let mut edge_tris = HashMap::with_capacity(mesh.n_edges() * 2);
        for edge in mesh.edges() {
            edge_tris.insert((edge.vertices[0], edge.vertices[1]), [Some(edge.elements.0), edge.elements.1]);
        }
        Refiner {
            vertices: mesh.vertices().to_vec(),
            tris: mesh.elements().iter().map(|&t| Some(t)).collect(),
            edge_tris,
        }
    }

    /// Local index of the longest edge (the edge opposite that local
    /// vertex). Ties go to the edge with the smaller vertex-pair key so both
    /// elements sharing an edge agree.
    fn longest_local(&self, tri: [usize; 3]) -> usize {
        let score = |i: usize| {
            let a = tri[(i + 1) % 3];
            let b = tri[(i + 2) % 3];
            (self.vertices[a].dist_sq(self.vertices[b]), edge_key(a, b))
        };
        let mut best = 0;
        let mut best_score = score(0);
        for i in 1..3 {
            let s = score(i);
            if s.0 > best_score.0 || (s.0 == best_score.0 && s.1 < best_score.1) {
                best = i;
                best_score = s;
            }
        }
        best
    }

    fn neighbor(&self, t: usize, a: usize, b: usize) -> Option<usize> {
        self.edge_tris[&edge_key(a, b)].iter().flatten().copied().find(|&x| x != t)
    }

    fn detach(&mut self, t: usize, a: usize, b: usize) {
        let key = edge_key(a, b);
        let slots = self.edge_tris.get_mut(&key).expect("edge missing from adjacency");
        for s in slots.iter_mut() {
            if *s == Some(t) {
                *s = None;
            }
        }
        if slots.iter().all(Option::is_none) {
            self.edge_tris.remove(&key);
        }
    }

    fn attach(&mut self, t: usize, a: usize, b: usize) {
        let slots = self.edge_tris.entry(edge_key(a, b)).or_insert([None, None]);
        if slots[0].is_none() {
            slots[0] = Some(t);
        } else {
            debug_assert!(slots[1].is_none(), "edge attached to a third element");
            slots[1] = Some(t);
        }
    }

    /// Splits `t` through vertex `m` on its local edge `i`.
    fn split(&mut self, t: usize, i: usize, m: usize) {
        let tri = self.tris[t].take().expect("splitting a dead element");
        let c = tri[i];
        let a = tri[(i + 1) % 3];
        let b = tri[(i + 2) % 3];
        self.detach(t, a, b);
        self.detach(t, b, c);
        self.detach(t, c, a);

        let first = self.tris.len();
        self.tris.push(Some([c, a, m]));
        let second = self.tris.len();
        self.tris.push(Some([c, m, b]));
        self.attach(first, c, a);
        self.attach(first, a, m);
        self.attach(first, m, c);
        self.attach(second, c, m);
        self.attach(second, m, b);
        self.attach(second, b, c);
    }

    fn refine(&mut self, start: usize) {
        let mut stack = vec![start];
        while let Some(&t) = stack.last() {
            let Some(tri) = self.tris[t] else {
                stack.pop();
                continue;
            };
            let i = self.longest_local(tri);
            let a = tri[(i + 1) % 3];
            let b = tri[(i + 2) % 3];
            match self.neighbor(t, a, b) {
                None => {
                    let m = self.new_midpoint(a, b);
                    self.split(t, i, m);
                    stack.pop();
                }
                Some(n) => {
                    let ntri = self.tris[n].expect("adjacency references a dead element");
                    let j = self.longest_local(ntri);
                    let shared = edge_key(ntri[(j + 1) % 3], ntri[(j + 2) % 3]) == edge_key(a, b);
                    if shared {
                        let m = self.new_midpoint(a, b);
                        self.split(t, i, m);
                        self.split(n, j, m);
                        stack.pop();
                    } else {
                        stack.push(n);
                    }
                }
            }
        }
    }

    fn new_midpoint(&mut self, a: usize, b: usize) -> usize {
        self.vertices.push(self.vertices[a].midpoint(self.vertices[b]));
        self.vertices.len() - 1
    }

    fn finish(self, generation: u32) -> Mesh {
        let elements: Vec<[usize; 3]> = self.tris.into_iter().flatten().collect();
        Mesh::from_parts(self.vertices, elements, generation).expect("longest-edge bisection produced an invalid mesh")
    }
}
