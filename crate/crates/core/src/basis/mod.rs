//! Nodal Lagrange P_N basis on the reference triangle, affine element maps,
//! and quadrature.
//!
//! The Lagrange functions are expressed through an orthogonal (Dubiner) modal
//! basis: `ℓ_i = Σ_j (V⁻¹)_{ji} ψ_j` with the generalized Vandermonde matrix
//! `V_{ij} = ψ_j(x_i)`.

mod poly;
pub mod quadrature;

use thiserror::Error;

use crate::dense::{DenseLu, DenseMatrix};
use crate::scalar::{Point, Real};
use poly::Poly2;
pub use quadrature::{edge_quadrature, volume_quadrature, EdgeQuadrature, QuadratureRule};

pub const MAX_DEGREE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("polynomial degree {0} outside 1..={MAX_DEGREE}")]
    DegreeOutOfRange(usize),
    #[error("no quadrature rule of order {0}")]
    UnsupportedQuadrature(usize),
    #[error("degenerate element: Jacobian determinant {0:e}")]
    DegenerateElement(f64),
}

/// Modal function together with its first and second derivatives.
#[derive(Debug, Clone)]
struct ModalFunction<T> {
    value: Poly2<T>,
    d_xi: Poly2<T>,
    d_eta: Poly2<T>,
    d_xixi: Poly2<T>,
    d_xieta: Poly2<T>,
    d_etaeta: Poly2<T>,
}

#[derive(Debug, Clone)]
pub struct NodalBasis<T> {
    degree: usize,
    nodes: Vec<Point<T>>,
    edge_nodes: [Vec<usize>; 3],
    modal: Vec<ModalFunction<T>>,
    /// `V⁻¹`, row j / column i: coefficient of ψ_j in ℓ_i.
    vinv: DenseMatrix<T>,
}

pub fn node_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Equispaced principal-lattice nodes, rows bottom-up.
pub fn reference_nodes<T: Real>(degree: usize) -> Result<Vec<Point<T>>, BasisError> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(BasisError::DegreeOutOfRange(degree));
    }
    let n = T::from_usize_lossy(degree);
    let mut nodes = Vec::with_capacity(node_count(degree));
    for j in 0..=degree {
        for i in 0..=degree - j {
            nodes.push([T::from_usize_lossy(i) / n, T::from_usize_lossy(j) / n]);
        }
    }
    Ok(nodes)
}

fn lattice_index(degree: usize, i: usize, j: usize) -> usize {
    // rows 0..j hold (N+1) + N + ... + (N+2-j) nodes
    j * (degree + 1) - j * (j.saturating_sub(1)) / 2 + i
}

/// Dubiner functions ψ_{ij}, i + j ≤ N, as polynomials in (ξ, η).
fn dubiner<T: Real>(degree: usize) -> Vec<Poly2<T>> {
    let d = degree.max(2);
    let two = T::lit(2.0);
    let x = Poly2::linear(d, -T::one(), two, T::one()); // 2ξ + η − 1
    let t = Poly2::linear(d, T::one(), T::zero(), -T::one()); // 1 − η
    let s = Poly2::linear(d, -T::one(), T::zero(), two); // 2η − 1
    let t2 = t.mul(&t);

    let mut q: Vec<Poly2<T>> = vec![Poly2::constant(d, T::one())];
    q.push(x.clone());
    for n in 1..degree {
        let nf = T::from_usize_lossy(n);
        let next = x
            .mul(&q[n])
            .scale(two * nf + T::one())
            .add(&t2.mul(&q[n - 1]).scale(-nf))
            .scale(T::one() / (nf + T::one()));
        q.push(next);
    }

    let jacobi = |alpha: usize, count: usize| -> Vec<Poly2<T>> {
        let a = T::from_usize_lossy(alpha);
        let mut p = vec![Poly2::constant(d, T::one())];
        if count > 1 {
            // (α+1) + (α+2)(s−1)/2
            let p1 = s.scale((a + two) / two).add(&Poly2::constant(d, a + T::one() - (a + two) / two));
            p.push(p1);
        }
        for n in 2..count {
            let nf = T::from_usize_lossy(n);
            let c0 = two * nf * (nf + a) * (two * nf + a - two);
            let c1 = two * nf + a - T::one();
            let lin = s.scale((two * nf + a) * (two * nf + a - two)).add(&Poly2::constant(d, a * a));
            let c2 = two * (nf + a - T::one()) * (nf - T::one()) * (two * nf + a);
            let next = lin.mul(&p[n - 1]).scale(c1).add(&p[n - 2].scale(-c2)).scale(T::one() / c0);
            p.push(next);
        }
        p
    };

    let mut out = Vec::with_capacity(node_count(degree));
    for i in 0..=degree {
        let pj = jacobi(2 * i + 1, degree - i + 1);
        for pjj in &pj {
            out.push(q[i].mul(pjj));
        }
    }
    out
}

impl<T: Real> NodalBasis<T> {
    pub fn new(degree: usize) -> Result<Self, BasisError> {
        let nodes = reference_nodes::<T>(degree)?;
        let np = nodes.len();
        let modal: Vec<ModalFunction<T>> = dubiner::<T>(degree)
            .into_iter()
            .map(|value| {
                let d_xi = value.d_xi();
                let d_eta = value.d_eta();
                ModalFunction {
                    d_xixi: d_xi.d_xi(),
                    d_xieta: d_xi.d_eta(),
                    d_etaeta: d_eta.d_eta(),
                    value,
                    d_xi,
                    d_eta,
                }
            })
            .collect();
        let vander = DenseMatrix::from_fn(np, np, |i, j| modal[j].value.eval(nodes[i][0], nodes[i][1]));
        let vinv = DenseLu::factor(&vander, T::epsilon())
            .expect("Vandermonde of the principal lattice is nonsingular")
            .inverse();

        let e0 = (0..=degree).map(|i| lattice_index(degree, i, 0)).collect();
        let e1 = (0..=degree).map(|j| lattice_index(degree, degree - j, j)).collect();
        let e2 = (0..=degree).map(|j| lattice_index(degree, 0, degree - j)).collect();
        Ok(Self { degree, nodes, edge_nodes: [e0, e1, e2], modal, vinv })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Point<T>] {
        &self.nodes
    }

    /// Nodes of reference edge `e` (vertex e → vertex e+1), ordered along it.
    pub fn edge_nodes(&self, edge: usize) -> &[usize] {
        &self.edge_nodes[edge]
    }

    /// Local node index of reference vertex 0, 1, 2.
    pub fn vertex_node(&self, vertex: usize) -> usize {
        match vertex {
            0 => 0,
            1 => self.degree,
            _ => self.nodes.len() - 1,
        }
    }

    fn nodal(&self, modal_values: &[T]) -> Vec<T> {
        let np = self.nodes.len();
        (0..np)
            .map(|i| (0..np).fold(T::zero(), |acc, j| acc + self.vinv[(j, i)] * modal_values[j]))
            .collect()
    }

    /// ℓ_i(p) for all i; `p` may lie outside the reference triangle.
    pub fn eval_basis(&self, p: Point<T>) -> Vec<T> {
        let m: Vec<T> = self.modal.iter().map(|f| f.value.eval(p[0], p[1])).collect();
        self.nodal(&m)
    }

    /// Reference gradients (∂ξ, ∂η) ℓ_i(p).
    pub fn eval_grad(&self, p: Point<T>) -> Vec<[T; 2]> {
        let dx: Vec<T> = self.modal.iter().map(|f| f.d_xi.eval(p[0], p[1])).collect();
        let dy: Vec<T> = self.modal.iter().map(|f| f.d_eta.eval(p[0], p[1])).collect();
        self.nodal(&dx).into_iter().zip(self.nodal(&dy)).map(|(a, b)| [a, b]).collect()
    }

    /// Reference second derivatives (∂ξξ, ∂ξη, ∂ηη) ℓ_i(p).
    pub fn eval_hess(&self, p: Point<T>) -> Vec<[T; 3]> {
        let xx: Vec<T> = self.modal.iter().map(|f| f.d_xixi.eval(p[0], p[1])).collect();
        let xy: Vec<T> = self.modal.iter().map(|f| f.d_xieta.eval(p[0], p[1])).collect();
        let yy: Vec<T> = self.modal.iter().map(|f| f.d_etaeta.eval(p[0], p[1])).collect();
        let (xx, xy, yy) = (self.nodal(&xx), self.nodal(&xy), self.nodal(&yy));
        (0..self.nodes.len()).map(|i| [xx[i], xy[i], yy[i]]).collect()
    }

    /// Values and reference gradients at every point of a rule.
    pub fn tabulate(&self, points: &[Point<T>]) -> Tabulation<T> {
        Tabulation {
            values: points.iter().map(|&p| self.eval_basis(p)).collect(),
            grads: points.iter().map(|&p| self.eval_grad(p)).collect(),
        }
    }
}

/// Basis values `values[q][i]` and reference gradients `grads[q][i]`.
#[derive(Debug, Clone)]
pub struct Tabulation<T> {
    pub values: Vec<Vec<T>>,
    pub grads: Vec<Vec<[T; 2]>>,
}

/// x = v0 + J (ξ, η) with J = [v1 − v0 | v2 − v0].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap<T> {
    pub vertices: [Point<T>; 3],
    pub jacobian: [[T; 2]; 2],
    pub inverse_jacobian: [[T; 2]; 2],
    pub det: T,
}

impl<T: Real> AffineMap<T> {
    pub fn new(vertices: [Point<T>; 3]) -> Result<Self, BasisError> {
        let [v0, v1, v2] = vertices;
        let j = [[v1[0] - v0[0], v2[0] - v0[0]], [v1[1] - v0[1], v2[1] - v0[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det > T::zero()) {
            return Err(BasisError::DegenerateElement(det.to_f64_lossy()));
        }
        let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        Ok(Self { vertices, jacobian: j, inverse_jacobian: inv, det })
    }

    pub fn area(&self) -> T {
        self.det * T::lit(0.5)
    }

    pub fn to_physical(&self, r: Point<T>) -> Point<T> {
        let v0 = self.vertices[0];
        let j = &self.jacobian;
        [v0[0] + j[0][0] * r[0] + j[0][1] * r[1], v0[1] + j[1][0] * r[0] + j[1][1] * r[1]]
    }

    pub fn to_reference(&self, x: Point<T>) -> Point<T> {
        let v0 = self.vertices[0];
        let d = [x[0] - v0[0], x[1] - v0[1]];
        let g = &self.inverse_jacobian;
        [g[0][0] * d[0] + g[0][1] * d[1], g[1][0] * d[0] + g[1][1] * d[1]]
    }

    /// Physical gradient `J⁻ᵀ ∇_ref`.
    #[inline]
    pub fn physical_gradient(&self, g: [T; 2]) -> [T; 2] {
        let inv = &self.inverse_jacobian;
        [inv[0][0] * g[0] + inv[1][0] * g[1], inv[0][1] * g[0] + inv[1][1] * g[1]]
    }

    /// Physical Hessian `J⁻ᵀ H_ref J⁻¹`, packed as (xx, xy, yy).
    pub fn physical_hessian(&self, h: [T; 3]) -> [T; 3] {
        let g = &self.inverse_jacobian;
        let href = [[h[0], h[1]], [h[1], h[2]]];
        let mut out = [[T::zero(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut s = T::zero();
                for p in 0..2 {
                    for q in 0..2 {
                        s += g[p][a] * href[p][q] * g[q][b];
                    }
                }
                out[a][b] = s;
            }
        }
        [out[0][0], out[0][1], out[1][1]]
    }
}

/// `M_ij = ∫_T ℓ_i ℓ_j`, integrated with the degree-2N rule.
pub fn element_mass_matrix<T: Real>(basis: &NodalBasis<T>, map: &AffineMap<T>) -> DenseMatrix<T> {
    let rule = volume_quadrature::<T>(2 * basis.degree()).expect("2N within the shipped rules");
    let np = basis.num_nodes();
    let mut m = DenseMatrix::zeros(np, np);
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let phi = basis.eval_basis(*p);
        let wq = *w * map.det;
        for i in 0..np {
            for j in 0..np {
                m[(i, j)] += wq * phi[i] * phi[j];
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_sets() {
        let n1 = reference_nodes::<f64>(1).unwrap();
        assert_eq!(n1, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let n2 = reference_nodes::<f64>(2).unwrap();
        assert_eq!(n2.len(), 6);
        for p in [[0.5, 0.0], [0.0, 0.5], [0.5, 0.5]] {
            assert!(n2.contains(&p));
        }
        assert_eq!(reference_nodes::<f64>(4).unwrap().len(), 15);
        assert_eq!(reference_nodes::<f64>(0), Err(BasisError::DegreeOutOfRange(0)));
        assert_eq!(reference_nodes::<f64>(5), Err(BasisError::DegreeOutOfRange(5)));
    }

    #[test]
    fn edge_and_vertex_nodes() {
        for n in 1..=MAX_DEGREE {
            let b = NodalBasis::<f64>::new(n).unwrap();
            for e in 0..3 {
                let list = b.edge_nodes(e);
                assert_eq!(list.len(), n + 1);
                assert_eq!(list[0], b.vertex_node(e));
                assert_eq!(list[n], b.vertex_node((e + 1) % 3));
                for &i in list {
                    let [x, y] = b.nodes()[i];
                    let on = match e {
                        0 => y == 0.0,
                        1 => (x + y - 1.0).abs() < 1e-15,
                        _ => x == 0.0,
                    };
                    assert!(on);
                }
            }
        }
    }

    #[test]
    fn barycentric_p1() {
        let b = NodalBasis::<f64>::new(1).unwrap();
        for v in b.eval_basis([1.0 / 3.0, 1.0 / 3.0]) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lagrange_property_and_partition_of_unity() {
        for n in 1..=MAX_DEGREE {
            let b = NodalBasis::<f64>::new(n).unwrap();
            for (j, &x) in b.nodes().iter().enumerate() {
                for (i, v) in b.eval_basis(x).into_iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-12, "N={n} i={i} j={j}");
                }
            }
            let p = [0.21, 0.37];
            let s: f64 = b.eval_basis(p).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let g = b.eval_grad(p);
            assert!(g.iter().map(|v| v[0]).sum::<f64>().abs() < 1e-11);
            assert!(g.iter().map(|v| v[1]).sum::<f64>().abs() < 1e-11);
            for c in 0..3 {
                assert!(b.eval_hess(p).iter().map(|h| h[c]).sum::<f64>().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn p1_mass_matrix_on_reference_triangle() {
        let b = NodalBasis::<f64>::new(1).unwrap();
        let map = AffineMap::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let m = element_mass_matrix(&b, &map);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert!((m[(i, j)] - want).abs() < 1e-15);
            }
            let row: f64 = m.row(i).iter().sum();
            assert!((row - 0.5 / 3.0).abs() < 1e-15);
        }
        let big = AffineMap::new([[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]]).unwrap();
        let m6 = element_mass_matrix(&b, &big);
        for (a, c) in m6.data.iter().zip(&m.data) {
            assert!((a - 6.0 * c).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_map_round_trip() {
        let map = AffineMap::<f64>::new([[0.3, 0.1], [1.2, 0.4], [0.5, 1.3]]).unwrap();
        for (r, v) in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]].iter().zip(map.vertices) {
            assert_eq!(map.to_physical(*r), v);
        }
        let x = map.to_physical([0.2, 0.7]);
        let r = map.to_reference(x);
        assert!((r[0] - 0.2).abs() < 1e-15 && (r[1] - 0.7).abs() < 1e-15);
        assert!(AffineMap::new([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
    }
}
