//! Assembly of the SIP + upwind DG system and its three solution modes.
//!
//! Global degrees of freedom are nodal values, numbered `k·N_p + i` for local
//! node `i` of element `k`. Rows are test functions, columns trial functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::quadrature::{edge_quadrature, volume_quadrature, EdgeQuadrature, QuadratureRule};
use crate::basis::{AffineMap, BasisError, NodalBasis, Tabulation};
use crate::geometry::{CurvedDomain, GeometryError};
use crate::linsolve::{self, to_compressed, Factorization, SolveError, SolveOptions, SolverKind, SparseMatrix, Triplet};
use crate::mesh::{Edge, Triangulation};
use crate::problems::ManufacturedProblem;
use crate::rodspace::{rod_reconstruct, BoundaryConstraintSet, RodError};
use crate::scalar::{dot, norm, Point, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Classical,
    RodGlobal,
    RodIterative,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "classical" => Ok(Self::Classical),
            "rod_global" => Ok(Self::RodGlobal),
            "rod_iterative" => Ok(Self::RodIterative),
            other => Err(format!("unknown method {other:?} (expected classical, rod_global or rod_iterative)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Classical => "classical",
            Self::RodGlobal => "rod_global",
            Self::RodIterative => "rod_iterative",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("invalid discretization: {0}")]
    InvalidSpec(String),
    #[error("edge {edge}: element traces disagree by {gap:e} at a quadrature point")]
    TraceMismatch { edge: usize, gap: f64 },
    #[error("element {element} has {count} boundary edges; the constrained spaces need exactly one")]
    MultipleBoundaryEdges { element: usize, count: usize },
    #[error("non-finite entry in the assembled system")]
    NonFinite,
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Rod(#[from] RodError),
    #[error("boundary edge {edge}: {source}")]
    Geometry { edge: usize, source: GeometryError },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("boundary iteration stalled after {iterations} steps (last change {change:e})")]
    NonConvergence { iterations: usize, change: f64, trace: Vec<f64> },
}

/// Discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DGSystemSpec<T> {
    pub degree: usize,
    /// η₀; the penalty is η = η₀ (N+1)².
    pub penalty: T,
    pub method: Method,
    /// Exactness degree of the volume rule.
    pub volume_degree: usize,
    /// Gauss points per edge.
    pub edge_points: usize,
    pub max_iter: usize,
    /// Stop when the largest change of the boundary data is at most this.
    pub stop_tol: T,
    pub solve_tol: T,
}

impl<T: Real> DGSystemSpec<T> {
    pub fn new(degree: usize, method: Method) -> Self {
        Self {
            degree,
            penalty: T::lit(10.0),
            method,
            volume_degree: 2 * degree + 3,
            edge_points: degree + 2,
            max_iter: 50,
            stop_tol: T::lit(1e-12),
            solve_tol: T::lit(1e-10),
        }
    }

    pub fn eta(&self) -> T {
        let n1 = T::from_usize_lossy(self.degree + 1);
        self.penalty * n1 * n1
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        if !(self.penalty > T::zero()) {
            return Err(AssemblyError::InvalidSpec(format!("penalty η₀ must be positive, got {}", self.penalty)));
        }
        if !(self.stop_tol > T::zero()) || self.max_iter == 0 {
            return Err(AssemblyError::InvalidSpec("iteration controls must be positive".into()));
        }
        volume_quadrature::<T>(self.volume_degree)?;
        edge_quadrature::<T>(self.edge_points)?;
        Ok(())
    }
}

/// Coefficient fields of `−Δu + ∇·(b u) + c u = f`, `u = u_D` on ∂Ω.
pub trait Coefficients<T: Real> {
    fn advection(&self, p: Point<T>) -> [T; 2];
    fn reaction(&self, p: Point<T>) -> T;
    fn source(&self, p: Point<T>) -> T;
    fn dirichlet(&self, p: Point<T>) -> T;
}

impl<T: Real> Coefficients<T> for ManufacturedProblem {
    fn advection(&self, p: Point<T>) -> [T; 2] {
        ManufacturedProblem::advection(self, p)
    }
    fn reaction(&self, p: Point<T>) -> T {
        ManufacturedProblem::reaction(self, p)
    }
    fn source(&self, p: Point<T>) -> T {
        ManufacturedProblem::source(self, p)
    }
    fn dirichlet(&self, p: Point<T>) -> T {
        ManufacturedProblem::dirichlet(self, p)
    }
}

const REFERENCE_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Mesh, basis and tabulated quadrature shared by all assembly steps.
pub struct Discretization<'a, T: Real> {
    pub tri: &'a Triangulation<T>,
    pub basis: &'a NodalBasis<T>,
    pub spec: DGSystemSpec<T>,
    pub maps: Vec<AffineMap<T>>,
    volume: QuadratureRule<T>,
    volume_tab: Tabulation<T>,
    edge: EdgeQuadrature<T>,
    /// `[local edge][reversed]`
    edge_tab: Vec<[Tabulation<T>; 2]>,
}

/// One element's view of an edge.
struct Trace<'t, T> {
    element: usize,
    tab: &'t Tabulation<T>,
}

impl<'a, T: Real> Discretization<'a, T> {
    pub fn new(tri: &'a Triangulation<T>, basis: &'a NodalBasis<T>, spec: DGSystemSpec<T>) -> Result<Self, AssemblyError> {
        if spec.degree != basis.degree() {
            return Err(AssemblyError::InvalidSpec(format!(
                "spec degree {} differs from basis degree {}",
                spec.degree,
                basis.degree()
            )));
        }
        let maps = (0..tri.num_elements())
            .map(|k| AffineMap::new(tri.element_vertices(k)))
            .collect::<Result<Vec<_>, _>>()?;
        let volume = volume_quadrature::<T>(spec.volume_degree)?;
        let volume_tab = basis.tabulate(&volume.points);
        let edge = edge_quadrature::<T>(spec.edge_points)?;
        let edge_tab = (0..3)
            .map(|e| {
                let pts = |rev: bool| -> Vec<Point<T>> {
                    edge.points.iter().map(|&s| reference_edge_point(e, if rev { T::one() - s } else { s })).collect()
                };
                [basis.tabulate(&pts(false)), basis.tabulate(&pts(true))]
            })
            .collect();
        Ok(Self { tri, basis, spec, maps, volume, volume_tab, edge, edge_tab })
    }

    pub fn num_dofs(&self) -> usize {
        self.tri.num_elements() * self.basis.num_nodes()
    }

    fn np(&self) -> usize {
        self.basis.num_nodes()
    }

    /// Physical quadrature points of an edge, parameterized from `vertices[0]`.
    fn edge_points(&self, edge: &Edge<T>) -> Vec<Point<T>> {
        let a = self.tri.vertices[edge.vertices[0]];
        let b = self.tri.vertices[edge.vertices[1]];
        self.edge.points.iter().map(|&s| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]).collect()
    }

    /// Tabulation of `element`'s trace on `edge` matched to the physical
    /// quadrature points.
    fn trace(&self, edge_index: usize, element: usize, local: usize, points: &[Point<T>]) -> Result<Trace<'_, T>, AssemblyError> {
        let edge = &self.tri.edges[edge_index];
        let reversed = self.tri.triangles[element][local] != edge.vertices[0];
        let map = &self.maps[element];
        let tol = T::epsilon() * T::lit(1e4);
        for (q, x) in points.iter().enumerate() {
            let s = if reversed { T::one() - self.edge.points[q] } else { self.edge.points[q] };
            let y = map.to_physical(reference_edge_point(local, s));
            let gap = (y[0] - x[0]).hypot(y[1] - x[1]);
            if !(gap <= tol * (T::one() + norm(*x))) {
                return Err(AssemblyError::TraceMismatch { edge: edge_index, gap: gap.to_f64_lossy() });
            }
        }
        Ok(Trace { element, tab: &self.edge_tab[local][reversed as usize] })
    }

    /// Volume blocks `(∇u,∇v) − (b u,∇v) + (c u,v)` and the load `(f, v)`.
    pub fn assemble_volume(&self, coeff: &impl Coefficients<T>) -> (Vec<Triplet<T>>, Vec<T>) {
        let np = self.np();
        let mut triplets = Vec::with_capacity(self.tri.num_elements() * np * np);
        let mut load = vec![T::zero(); self.num_dofs()];
        let mut block = vec![T::zero(); np * np];
        let mut grads = vec![[T::zero(); 2]; np];
        for (k, map) in self.maps.iter().enumerate() {
            block.iter_mut().for_each(|v| *v = T::zero());
            for (q, (p, w)) in self.volume.points.iter().zip(&self.volume.weights).enumerate() {
                let x = map.to_physical(*p);
                let wq = *w * map.det;
                let b = coeff.advection(x);
                let c = coeff.reaction(x);
                let f = coeff.source(x);
                let phi = &self.volume_tab.values[q];
                for (g, r) in grads.iter_mut().zip(&self.volume_tab.grads[q]) {
                    *g = map.physical_gradient(*r);
                }
                for i in 0..np {
                    let bgi = dot(b, grads[i]);
                    load[k * np + i] += wq * f * phi[i];
                    for j in 0..np {
                        block[i * np + j] += wq * (dot(grads[i], grads[j]) - phi[j] * bgi + c * phi[i] * phi[j]);
                    }
                }
            }
            push_block(&mut triplets, &block, &[k * np], &[k * np], np);
        }
        (triplets, load)
    }

    /// SIP and upwind coupling on every interior edge.
    pub fn assemble_interior_faces(&self, coeff: &impl Coefficients<T>) -> Result<Vec<Triplet<T>>, AssemblyError> {
        let np = self.np();
        let eta = self.spec.eta();
        let mut triplets = Vec::with_capacity(self.tri.edges.len() * 4 * np * np);
        let mut block = vec![T::zero(); 4 * np * np];
        let half = T::lit(0.5);
        for (ei, edge) in self.tri.edges.iter().enumerate() {
            let Some((right, right_local)) = edge.right else { continue };
            let pts = self.edge_points(edge);
            let sides = [self.trace(ei, edge.left, edge.left_local, &pts)?, self.trace(ei, right, right_local, &pts)?];
            let n = edge.normal;
            let pen = eta / edge.length;
            block.iter_mut().for_each(|v| *v = T::zero());
            for (q, x) in pts.iter().enumerate() {
                let wq = self.edge.weights[q] * edge.length;
                let bn = dot(coeff.advection(*x), n);
                let sigma = [T::one(), -T::one()];
                let dn: Vec<Vec<T>> = sides
                    .iter()
                    .map(|s| s.tab.grads[q].iter().map(|g| dot(self.maps[s.element].physical_gradient(*g), n)).collect())
                    .collect();
                for s in 0..2 {
                    let phi_s = &sides[s].tab.values[q];
                    for t in 0..2 {
                        let phi_t = &sides[t].tab.values[q];
                        let st = sigma[s] * sigma[t];
                        for i in 0..np {
                            let row = (s * np + i) * 2 * np + t * np;
                            for j in 0..np {
                                let v = -sigma[t] * phi_t[j] * half * dn[s][i] - sigma[s] * phi_s[i] * half * dn[t][j]
                                    + (pen + half * bn.abs()) * st * phi_s[i] * phi_t[j]
                                    + bn * sigma[s] * phi_s[i] * half * phi_t[j];
                                block[row + j] += wq * v;
                            }
                        }
                    }
                }
            }
            let offsets = [edge.left * np, right * np];
            push_block(&mut triplets, &block, &offsets, &offsets, np);
        }
        Ok(triplets)
    }

    /// Boundary-edge SIP terms (matrix) and the g_D load terms.
    pub fn assemble_boundary_faces_classical(
        &self,
        coeff: &impl Coefficients<T>,
        g: &BoundaryValues<T>,
    ) -> Result<(Vec<Triplet<T>>, Vec<T>), AssemblyError> {
        let np = self.np();
        let eta = self.spec.eta();
        let mut triplets = Vec::new();
        let mut load = vec![T::zero(); self.num_dofs()];
        let mut block = vec![T::zero(); np * np];
        for (ei, edge) in self.tri.edges.iter().enumerate().filter(|(_, e)| e.is_boundary()) {
            let pts = self.edge_points(edge);
            let side = self.trace(ei, edge.left, edge.left_local, &pts)?;
            let map = &self.maps[edge.left];
            let n = edge.normal;
            let pen = eta / edge.length;
            let nodes = self.basis.edge_nodes(edge.left_local);
            let values = g.values[ei].as_deref().unwrap_or(&[]);
            block.iter_mut().for_each(|v| *v = T::zero());
            for (q, x) in pts.iter().enumerate() {
                let wq = self.edge.weights[q] * edge.length;
                let phi = &side.tab.values[q];
                let dn: Vec<T> = side.tab.grads[q].iter().map(|r| dot(map.physical_gradient(*r), n)).collect();
                let gq = nodes.iter().zip(values).fold(T::zero(), |s, (&node, v)| s + *v * phi[node]);
                let bn = dot(coeff.advection(*x), n);
                for i in 0..np {
                    load[edge.left * np + i] += wq * (-gq * dn[i] + pen * gq * phi[i] - bn * phi[i] * gq);
                    for j in 0..np {
                        block[i * np + j] += wq * (-phi[j] * dn[i] - phi[i] * dn[j] + pen * phi[i] * phi[j]);
                    }
                }
            }
            push_block(&mut triplets, &block, &[edge.left * np], &[edge.left * np], np);
        }
        Ok((triplets, load))
    }
}

/// Point at parameter `s` along reference edge `e` (vertex e → e+1).
fn reference_edge_point<T: Real>(e: usize, s: T) -> Point<T> {
    let a = REFERENCE_VERTICES[e];
    let b = REFERENCE_VERTICES[(e + 1) % 3];
    [T::lit(a[0]) + s * T::lit(b[0] - a[0]), T::lit(a[1]) + s * T::lit(b[1] - a[1])]
}

/// Scatters a square block of `offsets.len()` × `np` sub-blocks.
fn push_block<T: Real>(out: &mut Vec<Triplet<T>>, block: &[T], rows: &[usize], cols: &[usize], np: usize) {
    let width = cols.len() * np;
    for (s, &r0) in rows.iter().enumerate() {
        for i in 0..np {
            for (t, &c0) in cols.iter().enumerate() {
                for j in 0..np {
                    let v = block[(s * np + i) * width + t * np + j];
                    if v != T::zero() {
                        out.push(Triplet::new(r0 + i, c0 + j, v));
                    }
                }
            }
        }
    }
}

/// Dirichlet values at the nodes of each boundary edge, listed along
/// `basis.edge_nodes(left_local)`. Indexed by global edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues<T> {
    pub values: Vec<Option<Vec<T>>>,
}

impl<T: Real> BoundaryValues<T> {
    pub fn zeros(tri: &Triangulation<T>, basis: &NodalBasis<T>) -> Self {
        let n = basis.degree() + 1;
        Self { values: tri.edges.iter().map(|e| e.is_boundary().then(|| vec![T::zero(); n])).collect() }
    }

    /// Largest absolute difference between two sets of boundary values.
    pub fn max_change(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .filter_map(|(a, b)| a.as_ref().zip(b.as_ref()))
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (*x - *y).abs()))
            .fold(T::zero(), |m, v| m.max(v))
    }
}

/// g_D for the classical method: each boundary-edge node is sent along the ray
/// from the opposite vertex to ∂Ω and u_D is evaluated there; vertices are
/// evaluated in place.
pub fn classical_boundary_values<T: Real>(
    coeff: &impl Coefficients<T>,
    tri: &Triangulation<T>,
    domain: &CurvedDomain<T>,
    basis: &NodalBasis<T>,
) -> Result<BoundaryValues<T>, AssemblyError> {
    let n = basis.degree();
    let mut values = vec![None; tri.edges.len()];
    for (ei, edge) in tri.edges.iter().enumerate().filter(|(_, e)| e.is_boundary()) {
        let k = edge.left;
        let map = AffineMap::new(tri.element_vertices(k))?;
        let origin = tri.vertices[tri.triangles[k][(edge.left_local + 2) % 3]];
        let nodes = basis.edge_nodes(edge.left_local);
        let vals = nodes
            .iter()
            .enumerate()
            .map(|(r, &node)| {
                let x = map.to_physical(basis.nodes()[node]);
                if r == 0 || r == n {
                    return Ok(coeff.dirichlet(x));
                }
                let hit = domain
                    .ray_boundary_intersect(origin, x)
                    .map_err(|source| AssemblyError::Geometry { edge: ei, source })?;
                Ok(coeff.dirichlet(hit.point))
            })
            .collect::<Result<Vec<T>, AssemblyError>>()?;
        values[ei] = Some(vals);
    }
    Ok(BoundaryValues { values })
}

/// A linear system over global DOFs, optionally reduced to W_h × V_h.
#[derive(Debug, Clone)]
pub struct AssembledSystem<T> {
    pub triplets: Vec<Triplet<T>>,
    pub load: Vec<T>,
    pub reduction: Option<Reduction<T>>,
}

/// Maps between full DOFs and the constrained unknowns:
/// `a_full = R_w a_red + lift`; test rows of constrained nodes are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction<T> {
    pub full_dim: usize,
    pub reduced_dim: usize,
    /// Reduced index of each free full DOF.
    pub reduced_index: Vec<Option<usize>>,
    /// For each constrained DOF: its dependence on reduced unknowns and the offset.
    pub constrained: Vec<(usize, Vec<(usize, T)>, T)>,
}

impl<T: Real> Reduction<T> {
    pub fn expand(&self, reduced: &[T]) -> Vec<T> {
        let mut full = vec![T::zero(); self.full_dim];
        for (f, r) in self.reduced_index.iter().enumerate() {
            if let Some(r) = r {
                full[f] = reduced[*r];
            }
        }
        for (f, deps, offset) in &self.constrained {
            full[*f] = deps.iter().fold(*offset, |s, (r, c)| s + *c * reduced[*r]);
        }
        full
    }
}

impl<T: Real> AssembledSystem<T> {
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    pub fn matrix(&self) -> Result<SparseMatrix<T>, AssemblyError> {
        if self.triplets.iter().any(|t| !t.value.is_finite()) || self.load.iter().any(|v| !v.is_finite()) {
            return Err(AssemblyError::NonFinite);
        }
        Ok(to_compressed(self.triplets.clone(), self.dim())?)
    }
}

/// The classical system with data `g`.
pub fn build_classical_system<T: Real>(
    disc: &Discretization<'_, T>,
    coeff: &impl Coefficients<T>,
    g: &BoundaryValues<T>,
) -> Result<AssembledSystem<T>, AssemblyError> {
    let (mut triplets, mut load) = disc.assemble_volume(coeff);
    triplets.extend(disc.assemble_interior_faces(coeff)?);
    let (bt, bl) = disc.assemble_boundary_faces_classical(coeff, g)?;
    triplets.extend(bt);
    load.iter_mut().zip(bl).for_each(|(a, b)| *a += b);
    Ok(AssembledSystem { triplets, load, reduction: None })
}

/// Reduces volume and interior-face terms to the W_h × V_h pair. No boundary
/// face terms enter: V_h functions vanish on ∂Ω_h, so the boundary jump and
/// penalty integrands are zero, and the boundary data act through the
/// constraints.
pub fn build_rod_global_system<T: Real>(
    triplets: Vec<Triplet<T>>,
    load: Vec<T>,
    np: usize,
    constraints: &BoundaryConstraintSet<T>,
) -> Result<AssembledSystem<T>, AssemblyError> {
    let full_dim = load.len();
    // For constrained DOFs: (constraint index, row r in e_nodes).
    let mut constrained_at: Vec<Option<(usize, usize)>> = vec![None; full_dim];
    for (ci, ec) in constraints.constraints.iter().enumerate() {
        for (r, &node) in ec.e_nodes.iter().enumerate() {
            constrained_at[ec.element * np + node] = Some((ci, r));
        }
    }
    let mut reduced_index = vec![None; full_dim];
    let mut reduced_dim = 0;
    for f in 0..full_dim {
        if constrained_at[f].is_none() {
            reduced_index[f] = Some(reduced_dim);
            reduced_dim += 1;
        }
    }
    let constrained: Vec<(usize, Vec<(usize, T)>, T)> = (0..full_dim)
        .filter_map(|f| {
            let (ci, r) = constrained_at[f]?;
            let ec = &constraints.constraints[ci];
            let deps = ec
                .i_nodes
                .iter()
                .enumerate()
                .map(|(m, &i)| (reduced_index[ec.element * np + i].expect("interior node is free"), ec.g[(r, m)]))
                .collect();
            Some((f, deps, ec.g0[r]))
        })
        .collect();
    let mut position = vec![usize::MAX; full_dim];
    for (p, (f, _, _)) in constrained.iter().enumerate() {
        position[*f] = p;
    }

    let mut reduced_load: Vec<T> = (0..full_dim).filter(|f| reduced_index[*f].is_some()).map(|f| load[f]).collect();
    let mut out = Vec::with_capacity(triplets.len());
    for t in triplets {
        let Some(row) = reduced_index[t.row] else { continue };
        match reduced_index[t.col] {
            Some(col) => out.push(Triplet::new(row, col, t.value)),
            None => {
                let (_, deps, offset) = &constrained[position[t.col]];
                for (col, c) in deps {
                    out.push(Triplet::new(row, *col, t.value * *c));
                }
                reduced_load[row] -= t.value * *offset;
            }
        }
    }
    Ok(AssembledSystem {
        triplets: out,
        load: reduced_load,
        reduction: Some(Reduction { full_dim, reduced_dim, reduced_index, constrained }),
    })
}

/// Nodal coefficients on every element together with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DgSolution<T> {
    pub coefficients: Vec<T>,
    pub relative_residual: T,
    pub solver: SolverKind,
    /// Boundary-data change per iteration (iterative method only).
    pub trace: Vec<T>,
    pub system_dim: usize,
}

fn check_single_boundary_edge<T: Real>(tri: &Triangulation<T>) -> Result<(), AssemblyError> {
    match tri.elements.iter().enumerate().find(|(_, e)| e.boundary_edge_count > 1) {
        Some((element, e)) => Err(AssemblyError::MultipleBoundaryEdges { element, count: e.boundary_edge_count }),
        None => Ok(()),
    }
}

/// Assembles and solves with the method selected in `spec`.
pub fn solve<T: Real>(
    coeff: &impl Coefficients<T>,
    tri: &Triangulation<T>,
    domain: &CurvedDomain<T>,
    basis: &NodalBasis<T>,
    spec: DGSystemSpec<T>,
) -> Result<DgSolution<T>, AssemblyError> {
    spec.validate()?;
    let disc = Discretization::new(tri, basis, spec)?;
    let opts = SolveOptions { tol: spec.solve_tol, ..SolveOptions::default() };
    match spec.method {
        Method::Classical => {
            let g = classical_boundary_values(coeff, tri, domain, basis)?;
            let sys = build_classical_system(&disc, coeff, &g)?;
            let a = sys.matrix()?;
            let s = linsolve::solve(&a, &sys.load, &opts)?;
            Ok(DgSolution { coefficients: s.x, relative_residual: s.relative_residual, solver: s.kind, trace: Vec::new(), system_dim: a.n })
        }
        Method::RodGlobal => {
            check_single_boundary_edge(tri)?;
            let constraints = BoundaryConstraintSet::build(tri, domain, basis, |p| coeff.dirichlet(p))?;
            let (mut triplets, load) = disc.assemble_volume(coeff);
            triplets.extend(disc.assemble_interior_faces(coeff)?);
            let sys = build_rod_global_system(triplets, load, basis.num_nodes(), &constraints)?;
            let a = sys.matrix()?;
            let s = linsolve::solve(&a, &sys.load, &opts)?;
            let full = sys.reduction.as_ref().expect("reduced system").expand(&s.x);
            Ok(DgSolution { coefficients: full, relative_residual: s.relative_residual, solver: s.kind, trace: Vec::new(), system_dim: a.n })
        }
        Method::RodIterative => solve_rod_iterative(&disc, coeff, domain),
    }
}

/// Alternates classical solves with per-element reconstruction of the
/// boundary data, starting from the classical g_D.
pub fn solve_rod_iterative<T: Real>(
    disc: &Discretization<'_, T>,
    coeff: &impl Coefficients<T>,
    domain: &CurvedDomain<T>,
) -> Result<DgSolution<T>, AssemblyError> {
    let (tri, basis, spec) = (disc.tri, disc.basis, disc.spec);
    check_single_boundary_edge(tri)?;
    let np = basis.num_nodes();
    let constraints = BoundaryConstraintSet::build(tri, domain, basis, |p| coeff.dirichlet(p))?;
    let mut g = classical_boundary_values(coeff, tri, domain, basis)?;

    let (mut triplets, volume_load) = disc.assemble_volume(coeff);
    triplets.extend(disc.assemble_interior_faces(coeff)?);
    let (bt, _) = disc.assemble_boundary_faces_classical(coeff, &g)?;
    triplets.extend(bt);
    let sys = AssembledSystem { triplets, load: volume_load.clone(), reduction: None };
    let a = sys.matrix()?;
    let lu = Factorization::new(&a)?;

    let mut trace = Vec::new();
    let refine = 5;
    loop {
        let (_, bl) = disc.assemble_boundary_faces_classical(coeff, &g)?;
        let rhs: Vec<T> = volume_load.iter().zip(&bl).map(|(a, b)| *a + *b).collect();
        let s = lu.solve(&rhs, spec.solve_tol, refine)?;
        let mut next = g.clone();
        for ec in &constraints.constraints {
            let u = &s.x[ec.element * np..(ec.element + 1) * np];
            let a = rod_reconstruct(u, &ec.c, &ec.d)?;
            let edge = tri.element_edges[ec.element][ec.boundary_edge];
            next.values[edge] = Some(basis.edge_nodes(ec.boundary_edge).iter().map(|&n| a[n]).collect());
        }
        let change = next.max_change(&g);
        trace.push(change);
        g = next;
        if change <= spec.stop_tol {
            return Ok(DgSolution { coefficients: s.x, relative_residual: s.relative_residual, solver: s.kind, trace, system_dim: a.n });
        }
        if trace.len() >= spec.max_iter {
            return Err(AssemblyError::NonConvergence {
                iterations: trace.len(),
                change: change.to_f64_lossy(),
                trace: trace.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
    }
}
