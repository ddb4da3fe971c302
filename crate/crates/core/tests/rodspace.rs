mod common;

use dgrod::basis::NodalBasis;
use dgrod::dense::{DenseLu, DenseMatrix};
use dgrod::geometry::{hit_residual, BoundaryHit, CurvedDomain};
use dgrod::mesh::generate_mesh;
use dgrod::problems::make_case;
use dgrod::rodspace::{elimination_map, rod_reconstruct, BoundaryConstraintSet, ElementConstraint};
use rand::seq::SliceRandom;
use rand::Rng;

use common::rng;

fn domains() -> Vec<CurvedDomain<f64>> {
    vec![
        CurvedDomain::disk(1.0).unwrap(),
        CurvedDomain::annulus(0.5, 1.0).unwrap(),
        CurvedDomain::rose(0.5, 1.0, 8, 0.1).unwrap(),
    ]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the saddle system [I Cᵀ; C 0][a; λ] = [u; d] directly.
fn kkt_oracle(u: &[f64], c: &DenseMatrix<f64>, d: &[f64]) -> Vec<f64> {
    let (np, m) = (c.cols, c.rows);
    let k = DenseMatrix::from_fn(np + m, np + m, |i, j| match (i < np, j < np) {
        (true, true) => (i == j) as u8 as f64,
        (true, false) => c[(j - np, i)],
        (false, true) => c[(i - np, j)],
        (false, false) => 0.0,
    });
    let rhs: Vec<f64> = u.iter().chain(d).copied().collect();
    DenseLu::factor(&k, 1e-14).unwrap().solve(&rhs)[..np].to_vec()
}

fn sample_constraints(count: usize) -> Vec<(usize, ElementConstraint<f64>)> {
    let mut r = rng(21);
    let mut out = Vec::new();
    for domain in domains() {
        let problem = make_case(&domain.kind(), 1).unwrap();
        for n in 2..=4 {
            let tri = generate_mesh(&domain, 4).unwrap();
            let basis = NodalBasis::new(n).unwrap();
            let set = BoundaryConstraintSet::build(&tri, &domain, &basis, |p| problem.dirichlet(p)).unwrap();
            let mut picked: Vec<_> = set.constraints.choose_multiple(&mut r, 6).cloned().collect();
            out.extend(picked.drain(..).map(|c| (basis.num_nodes(), c)));
        }
    }
    out.truncate(count);
    out
}

#[test]
fn reconstruction_matches_the_saddle_point_solution() {
    let mut r = rng(22);
    for (np, ec) in sample_constraints(50) {
        let u: Vec<f64> = (0..np).map(|_| r.gen_range(-1.0..1.0)).collect();
        let a = rod_reconstruct(&u, &ec.c, &ec.d).unwrap();
        let oracle = kkt_oracle(&u, &ec.c, &ec.d);
        for (x, y) in a.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-11);
        }
    }
}

#[test]
fn reconstruction_properties_on_fifty_boundary_elements() {
    let mut r = rng(23);
    let elements = sample_constraints(50);
    assert_eq!(elements.len(), 50);
    for (np, ec) in elements {
        let u: Vec<f64> = (0..np).map(|_| r.gen_range(-1.0..1.0)).collect();
        let a = rod_reconstruct(&u, &ec.c, &ec.d).unwrap();
        for (ca, d) in ec.c.matvec(&a).iter().zip(&ec.d) {
            assert!((ca - d).abs() <= 1e-11);
        }
        let zeros = vec![0.0; ec.d.len()];
        let once = rod_reconstruct(&u, &ec.c, &zeros).unwrap();
        let twice = rod_reconstruct(&once, &ec.c, &zeros).unwrap();
        for (x, y) in once.iter().zip(&twice) {
            assert!((x - y).abs() < 1e-13);
        }
        let dist = norm(&a.iter().zip(&u).map(|(x, y)| x - y).collect::<Vec<_>>());
        for _ in 0..100 {
            let interior: Vec<f64> = ec.i_nodes.iter().map(|&i| a[i] + r.gen_range(-0.5..0.5)).collect();
            let other = ec.lift(&interior, np);
            let d2 = norm(&other.iter().zip(&u).map(|(x, y)| x - y).collect::<Vec<_>>());
            assert!(d2 >= dist - 1e-12);
        }
    }
}

#[test]
fn feasible_input_is_unchanged() {
    let mut r = rng(24);
    for (np, ec) in sample_constraints(20) {
        let interior: Vec<f64> = (0..ec.i_nodes.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let u = ec.lift(&interior, np);
        let a = rod_reconstruct(&u, &ec.c, &ec.d).unwrap();
        for (x, y) in a.iter().zip(&u) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn elimination_residual_and_homogeneous_offset() {
    let mut r = rng(25);
    for (_, ec) in sample_constraints(30) {
        let zeros = vec![0.0; ec.d.len()];
        let (_, g0, _) = elimination_map(&ec.c, &zeros, &ec.e_nodes, &ec.i_nodes).unwrap();
        assert!(g0.iter().all(|v| *v == 0.0));
        let ai: Vec<f64> = (0..ec.i_nodes.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let ae: Vec<f64> = ec.g.matvec(&ai).iter().zip(&ec.g0).map(|(x, y)| x + y).collect();
        for row in 0..ec.c.rows {
            let lhs: f64 = ec.e_nodes.iter().zip(&ae).map(|(&j, v)| ec.c[(row, j)] * v).sum::<f64>()
                + ec.i_nodes.iter().zip(&ai).map(|(&j, v)| ec.c[(row, j)] * v).sum::<f64>();
            assert!((lhs - ec.d[row]).abs() < 1e-12);
        }
    }
}

#[test]
fn points_lie_on_the_boundary_and_end_at_the_vertices() {
    for domain in domains() {
        let tri = generate_mesh(&domain, 4).unwrap();
        for n in 1..=4 {
            let basis = NodalBasis::<f64>::new(n).unwrap();
            let set = BoundaryConstraintSet::build(&tri, &domain, &basis, |_| 0.0).unwrap();
            for ec in &set.constraints {
                assert_eq!(ec.points.len(), n + 1);
                for p in &ec.points {
                    let (curve, _) = domain.boundary_residual(*p);
                    let hit = BoundaryHit { point: *p, ray_parameter: 1.0, curve_id: curve, ambiguous: false };
                    assert!(hit_residual(&domain, &hit) <= 1e-10);
                }
                let t = tri.triangles[ec.element];
                let e = ec.boundary_edge;
                assert_eq!(ec.points[n - 1], tri.vertices[t[e]]);
                assert_eq!(ec.points[n], tri.vertices[t[(e + 1) % 3]]);
                for r in [n - 1, n] {
                    for j in 0..basis.num_nodes() {
                        let unit = (j == ec.e_nodes[r]) as u8 as f64;
                        assert!((ec.c[(r, j)] - unit).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn constraint_block_conditioning_stays_bounded_under_refinement() {
    let domain = CurvedDomain::<f64>::disk(1.0).unwrap();
    for n in 1..=4 {
        let basis = NodalBasis::<f64>::new(n).unwrap();
        let mut last = f64::INFINITY;
        for rings in [2, 4, 8, 16] {
            let tri = generate_mesh(&domain, rings).unwrap();
            let cond = BoundaryConstraintSet::build(&tri, &domain, &basis, |_| 0.0).unwrap().max_condition();
            assert!(cond <= 100.0, "N={n} rings={rings}: {cond}");
            assert!(cond <= last + 1e-9);
            last = cond;
        }
    }
}
