//! Conforming straight-sided triangulations of curved domains.

mod generate;
mod gmsh;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::geometry::CurvedDomain;
use crate::scalar::{dist, Point, Real};

pub use generate::{annulus_ring_vertices, generate_annulus_mesh, generate_disk_mesh, generate_mesh, generate_rose_mesh};
pub use gmsh::{read_gmsh, GmshError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonConformingMesh(usize, usize),
    #[error("triangle {0} has non-positive signed area {1:e}")]
    NonPositiveArea(usize, f64),
    #[error("triangle {triangle} references vertex {vertex} but the mesh has {count} vertices")]
    VertexOutOfRange { triangle: usize, vertex: usize, count: usize },
    #[error("mesh has no triangles")]
    Empty,
    #[error("generator parameter out of range: {0}")]
    InvalidGenerator(String),
    #[error("mesh generator does not support this domain kind")]
    WrongDomainKind,
    #[error("malformed mesh dump at line {0}")]
    MalformedDump(usize),
}

/// An edge with its left element `left` (the one that sees the edge as local
/// edge `left_local`) and, for interior edges, the right element.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub vertices: [usize; 2],
    pub left: usize,
    pub left_local: usize,
    pub right: Option<(usize, usize)>,
    /// Unit normal pointing from `left` into `right` (outward on the boundary).
    pub normal: Point<T>,
    pub length: T,
}

impl<T> Edge<T> {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementInfo<T> {
    pub area: T,
    /// Longest edge length, h_k.
    pub diameter: T,
    /// ρ_k
    pub inradius: T,
    /// Local index of the (first) boundary edge.
    pub boundary_edge: Option<usize>,
    pub boundary_edge_count: usize,
    /// O_k: the vertex opposite the boundary edge.
    pub opposite_vertex: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation<T> {
    pub vertices: Vec<Point<T>>,
    /// Counterclockwise vertex triples; local edge e joins corners e and e+1.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge<T>>,
    pub element_edges: Vec<[usize; 3]>,
    pub elements: Vec<ElementInfo<T>>,
    /// Vertices that are endpoints of at least one boundary edge.
    pub boundary_vertex: Vec<bool>,
    /// I^B
    pub boundary_elements: Vec<usize>,
    /// max h_k
    pub h: T,
}

fn signed_area<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::lit(0.5)
}

/// Builds edges, normals, boundary classification and metrics.
pub fn build_connectivity<T: Real>(
    vertices: Vec<Point<T>>,
    triangles: Vec<[usize; 3]>,
) -> Result<Triangulation<T>, MeshError> {
    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    for (k, t) in triangles.iter().enumerate() {
        if let Some(&v) = t.iter().find(|&&v| v >= vertices.len()) {
            return Err(MeshError::VertexOutOfRange { triangle: k, vertex: v, count: vertices.len() });
        }
        let a = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        if !(a > T::zero()) {
            return Err(MeshError::NonPositiveArea(k, a.to_f64_lossy()));
        }
    }

    let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
    let mut edges: Vec<Edge<T>> = Vec::with_capacity(triangles.len() * 2);
    let mut element_edges = vec![[0usize; 3]; triangles.len()];
    for (k, t) in triangles.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                Some(&idx) => {
                    if edges[idx].right.is_some() {
                        return Err(MeshError::NonConformingMesh(key.0, key.1));
                    }
                    edges[idx].right = Some((k, e));
                    element_edges[k][e] = idx;
                }
                None => {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let length = dist(pa, pb);
                    let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                    lookup.insert(key, edges.len());
                    element_edges[k][e] = edges.len();
                    edges.push(Edge { vertices: [a, b], left: k, left_local: e, right: None, normal, length });
                }
            }
        }
    }

    let mut boundary_vertex = vec![false; vertices.len()];
    for e in edges.iter().filter(|e| e.is_boundary()) {
        boundary_vertex[e.vertices[0]] = true;
        boundary_vertex[e.vertices[1]] = true;
    }

    let mut h = T::zero();
    let mut boundary_elements = Vec::new();
    let elements: Vec<ElementInfo<T>> = triangles
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let area = signed_area(p[0], p[1], p[2]);
            let lens: Vec<T> = (0..3).map(|e| edges[element_edges[k][e]].length).collect();
            let diameter = lens.iter().fold(T::zero(), |m, &l| m.max(l));
            let perimeter = lens.iter().fold(T::zero(), |s, &l| s + l);
            let local_boundary: Vec<usize> = (0..3).filter(|&e| edges[element_edges[k][e]].is_boundary()).collect();
            let boundary_edge = local_boundary.first().copied();
            if boundary_edge.is_some() {
                boundary_elements.push(k);
            }
            h = h.max(diameter);
            ElementInfo {
                area,
                diameter,
                inradius: T::lit(2.0) * area / perimeter,
                boundary_edge,
                boundary_edge_count: local_boundary.len(),
                opposite_vertex: boundary_edge.map(|e| t[(e + 2) % 3]),
            }
        })
        .collect();

    Ok(Triangulation { vertices, triangles, edges, element_edges, elements, boundary_vertex, boundary_elements, h })
}

impl<T: Real> Triangulation<T> {
    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn element_vertices(&self, k: usize) -> [Point<T>; 3] {
        let t = self.triangles[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn total_area(&self) -> T {
        self.elements.iter().fold(T::zero(), |s, e| s + e.area)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = &Edge<T>> {
        self.edges.iter().filter(|e| e.is_boundary())
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = &Edge<T>> {
        self.edges.iter().filter(|e| !e.is_boundary())
    }

    /// Moves boundary vertices within `rel_tol · h` of ∂Ω onto it. Returns the
    /// number of vertices moved. Vertices further away are left untouched so
    /// that validation reports them.
    pub fn snap_boundary_vertices(&mut self, domain: &CurvedDomain<T>, rel_tol: T) -> usize {
        let tol = rel_tol * self.h;
        let mut moved = 0;
        for (v, p) in self.vertices.iter_mut().enumerate() {
            if !self.boundary_vertex[v] {
                continue;
            }
            let (_, residual) = domain.boundary_residual(*p);
            if residual > T::zero() && residual <= tol {
                *p = domain.snap_to_boundary(*p).1;
                moved += 1;
            }
        }
        if moved > 0 {
            let rebuilt = build_connectivity(self.vertices.clone(), self.triangles.clone())
                .expect("sub-tolerance snapping keeps a valid mesh");
            *self = rebuilt;
        }
        moved
    }

    /// Line-oriented `v x y` / `t i j k` text.
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        for p in &self.vertices {
            s.push_str(&format!("v {:e} {:e}\n", p[0], p[1]));
        }
        for t in &self.triangles {
            s.push_str(&format!("t {} {} {}\n", t[0], t[1], t[2]));
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self, MeshError> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            let bad = || MeshError::MalformedDump(n + 1);
            match it.next() {
                None => continue,
                Some("v") => {
                    let x: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    let y: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    vertices.push([T::lit(x), T::lit(y)]);
                }
                Some("t") => {
                    let mut t = [0usize; 3];
                    for slot in &mut t {
                        *slot = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    }
                    triangles.push(t);
                }
                Some(_) => return Err(bad()),
            }
        }
        build_connectivity(vertices, triangles)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshViolation {
    BoundaryVertexOffCurve { vertex: usize, residual: f64 },
    MultipleBoundaryEdges { element: usize, count: usize },
    NonPositiveArea { element: usize },
    NonFinite,
}

impl fmt::Display for MeshViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BoundaryVertexOffCurve { vertex, residual } => {
                write!(f, "boundary vertex off ∂Ω (vertex {vertex}, residual {residual:.3e})")
            }
            Self::MultipleBoundaryEdges { element, count } => {
                write!(f, "element {element} has {count} boundary edges")
            }
            Self::NonPositiveArea { element } => write!(f, "element {element} has non-positive area"),
            Self::NonFinite => write!(f, "non-finite mesh metric"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshQualityReport {
    pub num_elements: usize,
    pub h: f64,
    /// max h_k / ρ_k
    pub rho_ratio_max: f64,
    /// min h_e / h_k over element edges
    pub mu_min: f64,
    pub boundary_vertex_residual_max: f64,
    pub violations: Vec<MeshViolation>,
}

impl MeshQualityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the triangulation against the domain; never fails, violations are listed.
pub fn validate<T: Real>(tri: &Triangulation<T>, domain: &CurvedDomain<T>) -> MeshQualityReport {
    let mut violations = Vec::new();
    let mut rho_ratio_max = T::zero();
    let mut mu_min = T::infinity();
    for (k, info) in tri.elements.iter().enumerate() {
        if !(info.area > T::zero()) {
            violations.push(MeshViolation::NonPositiveArea { element: k });
        }
        if info.boundary_edge_count > 1 {
            violations.push(MeshViolation::MultipleBoundaryEdges { element: k, count: info.boundary_edge_count });
        }
        rho_ratio_max = rho_ratio_max.max(info.diameter / info.inradius);
        for &e in &tri.element_edges[k] {
            mu_min = mu_min.min(tri.edges[e].length / info.diameter);
        }
    }
    let tol = (T::lit(1e-12) * tri.h).max(T::epsilon() * T::lit(16.0) * domain.outer_radius());
    let mut residual_max = T::zero();
    for (v, p) in tri.vertices.iter().enumerate() {
        if !tri.boundary_vertex[v] {
            continue;
        }
        let (_, r) = domain.boundary_residual(*p);
        residual_max = residual_max.max(r);
        if !(r <= tol) {
            violations.push(MeshViolation::BoundaryVertexOffCurve { vertex: v, residual: r.to_f64_lossy() });
        }
    }
    let report = MeshQualityReport {
        num_elements: tri.num_elements(),
        h: tri.h.to_f64_lossy(),
        rho_ratio_max: rho_ratio_max.to_f64_lossy(),
        mu_min: mu_min.to_f64_lossy(),
        boundary_vertex_residual_max: residual_max.to_f64_lossy(),
        violations,
    };
    if [report.h, report.rho_ratio_max, report.mu_min, report.boundary_vertex_residual_max].iter().all(|v| v.is_finite()) {
        report
    } else {
        let mut r = report;
        r.violations.push(MeshViolation::NonFinite);
        r
    }
}

/// Area enclosed by the boundary edges (shoelace sum over outward-oriented edges).
pub fn boundary_shoelace_area<T: Real>(tri: &Triangulation<T>) -> T {
    tri.boundary_edges().fold(T::zero(), |s, e| {
        let (a, b) = (tri.vertices[e.vertices[0]], tri.vertices[e.vertices[1]]);
        s + (a[0] * b[1] - b[0] * a[1]) * T::lit(0.5)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::norm;

    fn two_triangles() -> Triangulation<f64> {
        build_connectivity(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn shared_edge_connectivity() {
        let t = two_triangles();
        assert_eq!(t.edges.len(), 5);
        assert_eq!(t.interior_edges().count(), 1);
        let e = t.interior_edges().next().unwrap();
        assert!((norm(e.normal) - 1.0).abs() < 1e-15);
        // normal points from left into right: left = 0 lies below the diagonal
        assert_eq!(e.left, 0);
        assert!((e.normal[0] + 0.5f64.sqrt()).abs() < 1e-15 && (e.normal[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((e.length - dist(t.vertices[0], t.vertices[2])).abs() < 1e-15);
        assert_eq!(t.boundary_elements.len(), 2);
        // two boundary edges per triangle here
        assert_eq!(t.elements[0].boundary_edge_count, 2);
    }

    #[test]
    fn single_triangle() {
        let t = build_connectivity(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(t.num_elements(), 1);
        assert_eq!(t.boundary_edges().count(), 3);
    }

    #[test]
    fn non_conforming_and_inverted_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 0.5]];
        let err = build_connectivity(v.clone(), vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonConformingMesh(0, 1)));
        let err = build_connectivity(v, vec![[0, 2, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::NonPositiveArea(0, _)));
    }

    #[test]
    fn equilateral_shape_ratio() {
        let s3 = 3f64.sqrt();
        let t = build_connectivity(vec![[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]], vec![[0, 1, 2]]).unwrap();
        let domain = CurvedDomain::<f64>::disk(1.0 / s3).unwrap();
        let r = validate(&t, &domain);
        assert!((r.rho_ratio_max - 2.0 * s3).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let t = two_triangles();
        let back = Triangulation::<f64>::from_dump(&t.to_dump()).unwrap();
        assert_eq!(back.triangles, t.triangles);
        assert_eq!(back.vertices, t.vertices);
        assert!(matches!(Triangulation::<f64>::from_dump("v 1 2\nq 1"), Err(MeshError::MalformedDump(2))));
    }
}
