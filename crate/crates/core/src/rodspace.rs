//! Constrained spaces on boundary elements.
//!
//! On every element with an edge on ∂Ω_h the trial space W_h requires the
//! local polynomial to take the Dirichlet value at N+1 points of the curved
//! boundary ∂Ω: the two boundary vertices and the projections of the interior
//! edge nodes along rays from the opposite vertex. The test space V_h instead
//! vanishes on the boundary edge.

use thiserror::Error;

use crate::basis::{AffineMap, BasisError, NodalBasis};
use crate::dense::{DenseLu, DenseMatrix};
use crate::geometry::{CurvedDomain, GeometryError};
use crate::mesh::Triangulation;
use crate::scalar::{Point, Real};

/// Largest accepted 1-norm condition number of the block C_EE.
pub const MAX_CONSTRAINT_CONDITION: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RodError {
    #[error("element {0} has no boundary edge")]
    NotBoundaryElement(usize),
    #[error("element {element}: {source}")]
    Geometry { element: usize, source: GeometryError },
    #[error("element {element}: {source}")]
    Basis { element: usize, source: BasisError },
    #[error("element {element}: constraint block C_EE has condition number {condition:.3e}")]
    IllConditionedConstraintBlock { element: usize, condition: f64 },
    #[error("constraint rows are linearly dependent")]
    RankDeficientConstraints,
}

/// Constraint data of one boundary element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementConstraint<T> {
    pub element: usize,
    /// Local index of the boundary edge e^{kB}.
    pub boundary_edge: usize,
    /// Local nodes on e^{kB}: the N−1 interior edge nodes first, then the
    /// two vertices. Row r of `c` belongs to `e_nodes[r]` and `points[r]`.
    pub e_nodes: Vec<usize>,
    /// The m_N nodes off the boundary edge, increasing.
    pub i_nodes: Vec<usize>,
    /// P_1 … P_{N+1}
    pub points: Vec<Point<T>>,
    /// (N+1) × N_p, C_{rj} = ℓ_j(P_r).
    pub c: DenseMatrix<T>,
    /// d_r = u_D(P_r)
    pub d: Vec<T>,
    /// a_E = G a_I + g0
    pub g: DenseMatrix<T>,
    pub g0: Vec<T>,
    pub condition: T,
}

/// Constraints for every element of I^B.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConstraintSet<T> {
    pub constraints: Vec<ElementConstraint<T>>,
    /// Position in `constraints` per mesh element.
    pub lookup: Vec<Option<usize>>,
}

impl<T: Real> BoundaryConstraintSet<T> {
    pub fn build(
        tri: &Triangulation<T>,
        domain: &CurvedDomain<T>,
        basis: &NodalBasis<T>,
        dirichlet: impl Fn(Point<T>) -> T,
    ) -> Result<Self, RodError> {
        let mut lookup = vec![None; tri.num_elements()];
        let mut constraints = Vec::with_capacity(tri.boundary_elements.len());
        for &k in &tri.boundary_elements {
            let points = projected_points(k, tri, domain, basis)?;
            let map = AffineMap::new(tri.element_vertices(k)).map_err(|source| RodError::Basis { element: k, source })?;
            let c = constraint_matrix(&points, basis, &map);
            let d: Vec<T> = points.iter().map(|&p| dirichlet(p)).collect();
            let (e_nodes, i_nodes) = split_nodes(basis, tri.elements[k].boundary_edge.expect("element of I^B"));
            let (g, g0, condition) = elimination_map(&c, &d, &e_nodes, &i_nodes).map_err(|e| match e {
                RodError::IllConditionedConstraintBlock { condition, .. } => {
                    RodError::IllConditionedConstraintBlock { element: k, condition }
                }
                other => other,
            })?;
            lookup[k] = Some(constraints.len());
            constraints.push(ElementConstraint {
                element: k,
                boundary_edge: tri.elements[k].boundary_edge.expect("element of I^B"),
                e_nodes,
                i_nodes,
                points,
                c,
                d,
                g,
                g0,
                condition,
            });
        }
        Ok(Self { constraints, lookup })
    }

    pub fn get(&self, element: usize) -> Option<&ElementConstraint<T>> {
        self.lookup.get(element).copied().flatten().map(|i| &self.constraints[i])
    }

    pub fn max_condition(&self) -> T {
        self.constraints.iter().fold(T::zero(), |m, c| m.max(c.condition))
    }
}

/// Splits local nodes into (E, I) for boundary edge `edge`.
pub fn split_nodes<T: Real>(basis: &NodalBasis<T>, edge: usize) -> (Vec<usize>, Vec<usize>) {
    let on_edge = basis.edge_nodes(edge);
    let n = on_edge.len() - 1;
    let mut e_nodes: Vec<usize> = on_edge[1..n].to_vec();
    e_nodes.push(on_edge[0]);
    e_nodes.push(on_edge[n]);
    let i_nodes = (0..basis.num_nodes()).filter(|j| !on_edge.contains(j)).collect();
    (e_nodes, i_nodes)
}

/// P_1 … P_{N+1} for boundary element `k`, ordered like `split_nodes`.
pub fn projected_points<T: Real>(
    k: usize,
    tri: &Triangulation<T>,
    domain: &CurvedDomain<T>,
    basis: &NodalBasis<T>,
) -> Result<Vec<Point<T>>, RodError> {
    let info = &tri.elements[k];
    let edge = info.boundary_edge.ok_or(RodError::NotBoundaryElement(k))?;
    let origin = tri.vertices[info.opposite_vertex.expect("set with the boundary edge")];
    let map = AffineMap::new(tri.element_vertices(k)).map_err(|source| RodError::Basis { element: k, source })?;
    let (e_nodes, _) = split_nodes(basis, edge);
    let n = basis.degree();
    let corners = tri.triangles[k];
    e_nodes
        .iter()
        .enumerate()
        .map(|(r, &node)| {
            if r + 1 == n {
                return Ok(tri.vertices[corners[edge]]);
            }
            if r == n {
                return Ok(tri.vertices[corners[(edge + 1) % 3]]);
            }
            let x = map.to_physical(basis.nodes()[node]);
            domain
                .ray_boundary_intersect(origin, x)
                .map(|hit| hit.point)
                .map_err(|source| RodError::Geometry { element: k, source })
        })
        .collect()
}

/// C_{rj} = ℓ_j(P_r), evaluating the basis through the inverse affine map.
pub fn constraint_matrix<T: Real>(points: &[Point<T>], basis: &NodalBasis<T>, map: &AffineMap<T>) -> DenseMatrix<T> {
    let rows: Vec<Vec<T>> = points.iter().map(|&p| basis.eval_basis(map.to_reference(p))).collect();
    DenseMatrix::from_fn(points.len(), basis.num_nodes(), |r, j| rows[r][j])
}

/// Closest vector to `u` (Euclidean) satisfying `C a = d`:
/// `a = u − Cᵀ (C Cᵀ)⁻¹ (C u − d)`.
pub fn rod_reconstruct<T: Real>(u: &[T], c: &DenseMatrix<T>, d: &[T]) -> Result<Vec<T>, RodError> {
    let cct = c.matmul(&c.transpose());
    let lu = DenseLu::factor(&cct, T::lit(1e-13)).map_err(|_| RodError::RankDeficientConstraints)?;
    let residual: Vec<T> = c.matvec(u).iter().zip(d).map(|(cu, di)| *cu - *di).collect();
    let lambda = lu.solve(&residual);
    Ok((0..u.len())
        .map(|j| u[j] - (0..c.rows).fold(T::zero(), |s, r| s + c[(r, j)] * lambda[r]))
        .collect())
}

/// Solves `C_EE a_E + C_EI a_I = d` for `a_E = G a_I + g0`. Returns
/// `(G, g0, cond(C_EE))`.
pub fn elimination_map<T: Real>(
    c: &DenseMatrix<T>,
    d: &[T],
    e_nodes: &[usize],
    i_nodes: &[usize],
) -> Result<(DenseMatrix<T>, Vec<T>, T), RodError> {
    let cee = DenseMatrix::from_fn(e_nodes.len(), e_nodes.len(), |r, s| c[(r, e_nodes[s])]);
    let cei = DenseMatrix::from_fn(e_nodes.len(), i_nodes.len(), |r, s| c[(r, i_nodes[s])]);
    let ill = |condition: f64| RodError::IllConditionedConstraintBlock { element: usize::MAX, condition };
    let lu = DenseLu::factor(&cee, T::lit(1e-14)).map_err(|_| ill(f64::INFINITY))?;
    let condition = lu.condition_number();
    if !(condition.to_f64_lossy() <= MAX_CONSTRAINT_CONDITION) {
        return Err(ill(condition.to_f64_lossy()));
    }
    let mut g = lu.solve_matrix(&cei);
    for v in g.data.iter_mut() {
        *v = -*v;
    }
    Ok((g, lu.solve(d), condition))
}

impl<T: Real> ElementConstraint<T> {
    /// Full local vector from interior-node values.
    pub fn lift(&self, interior: &[T], np: usize) -> Vec<T> {
        let mut a = vec![T::zero(); np];
        for (m, &i) in self.i_nodes.iter().enumerate() {
            a[i] = interior[m];
        }
        let ae = self.g.matvec(interior);
        for (r, &e) in self.e_nodes.iter().enumerate() {
            a[e] = ae[r] + self.g0[r];
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disk_mesh;

    #[test]
    fn split_counts() {
        for n in 1..=4 {
            let b = NodalBasis::<f64>::new(n).unwrap();
            for e in 0..3 {
                let (en, inn) = split_nodes(&b, e);
                assert_eq!(en.len(), n + 1);
                assert_eq!(inn.len(), n * (n + 1) / 2);
            }
        }
    }

    #[test]
    fn toy_kkt_example() {
        // Constraints fix nodes 1 and 2 of a P1 element to zero.
        let c = DenseMatrix::from_fn(2, 3, |r, j| if j == r + 1 { 1.0 } else { 0.0 });
        let a = rod_reconstruct(&[1.0, 1.0, 1.0], &c, &[0.0, 0.0]).unwrap();
        assert_eq!(a, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rank_deficient_rejected() {
        let c = DenseMatrix::from_fn(2, 3, |_, j| if j == 0 { 1.0 } else { 0.0 });
        assert_eq!(rod_reconstruct(&[1.0, 1.0, 1.0], &c, &[0.0, 0.0]), Err(RodError::RankDeficientConstraints));
    }

    #[test]
    fn disk_constraints_satisfied() {
        let domain = CurvedDomain::<f64>::disk(1.0).unwrap();
        let tri = generate_disk_mesh(&domain, 3).unwrap();
        let basis = NodalBasis::new(3).unwrap();
        let set = BoundaryConstraintSet::build(&tri, &domain, &basis, |p| p[0] + 2.0 * p[1]).unwrap();
        assert_eq!(set.constraints.len(), tri.boundary_elements.len());
        for ec in &set.constraints {
            for p in &ec.points {
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            }
            let a = ec.lift(&[0.3, -0.2, 0.9, 0.1, 0.5, -0.7], basis.num_nodes());
            for (r, v) in ec.c.matvec(&a).iter().enumerate() {
                assert!((v - ec.d[r]).abs() < 1e-12);
            }
            for r in 0..ec.c.rows {
                assert!((ec.c.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            assert!(ec.condition < 100.0);
        }
    }
}
