mod common;

use dgrod::geometry::{CurveId, CurvedDomain};
use dgrod::problems::{check_wellposedness, make_case, CoefficientCase, ExactSolution, ManufacturedProblem};
use dgrod::scalar::Point;
use rand::Rng;

use common::rng;

fn domains() -> Vec<CurvedDomain<f64>> {
    vec![
        CurvedDomain::disk(1.0).unwrap(),
        CurvedDomain::annulus(0.5, 1.0).unwrap(),
        CurvedDomain::rose(0.5, 1.0, 8, 0.1).unwrap(),
    ]
}

fn random_interior(domain: &CurvedDomain<f64>, r: &mut impl Rng) -> Point<f64> {
    loop {
        let p = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        if domain.contains(p) {
            return p;
        }
    }
}

/// f from central differences of u alone: −Δu + ∇·(b u) + c u.
fn fd_source(p: &ManufacturedProblem, x: Point<f64>) -> f64 {
    let h = 1e-4;
    let u = |dx: f64, dy: f64| p.u([x[0] + dx, x[1] + dy]);
    let lap = (u(h, 0.0) + u(-h, 0.0) + u(0.0, h) + u(0.0, -h) - 4.0 * u(0.0, 0.0)) / (h * h);
    let bu = |dx: f64, dy: f64| {
        let y = [x[0] + dx, x[1] + dy];
        let b = p.advection(y);
        [b[0] * p.u(y), b[1] * p.u(y)]
    };
    let div = (bu(h, 0.0)[0] - bu(-h, 0.0)[0] + bu(0.0, h)[1] - bu(0.0, -h)[1]) / (2.0 * h);
    -lap + div + p.reaction(x) * p.u(x)
}

#[test]
fn source_matches_finite_difference_synthesis() {
    let mut r = rng(11);
    for domain in domains() {
        for case in 1..=3 {
            let problem = make_case(&domain.kind(), case).unwrap();
            for _ in 0..1000 {
                let x = random_interior(&domain, &mut r);
                let (f, fd) = (problem.source(x), fd_source(&problem, x));
                assert!((f - fd).abs() <= 1e-5 * f.abs().max(1.0), "{:?} case {case} at {x:?}: {f} vs {fd}", domain.kind());
            }
        }
    }
}

#[test]
fn gradients_and_laplacians_match_finite_differences() {
    let mut r = rng(12);
    for domain in domains() {
        let problem = make_case(&domain.kind(), 1).unwrap();
        for _ in 0..1000 {
            let x = random_interior(&domain, &mut r);
            let h = 1e-6;
            let g = problem.grad(x);
            let fd = [
                (problem.u([x[0] + h, x[1]]) - problem.u([x[0] - h, x[1]])) / (2.0 * h),
                (problem.u([x[0], x[1] + h]) - problem.u([x[0], x[1] - h])) / (2.0 * h),
            ];
            let scale = g[0].abs().max(g[1].abs()).max(1.0);
            assert!((g[0] - fd[0]).abs() / scale < 1e-6 && (g[1] - fd[1]).abs() / scale < 1e-6);
            let hx = 1e-4;
            let u = |dx: f64, dy: f64| problem.u([x[0] + dx, x[1] + dy]);
            let lap = (u(hx, 0.0) + u(-hx, 0.0) + u(0.0, hx) + u(0.0, -hx) - 4.0 * u(0.0, 0.0)) / (hx * hx);
            let hess = problem.hessian(x);
            let scale = hess.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!((problem.laplacian(x) - lap).abs() / scale < 1e-5, "{} vs {lap}", problem.laplacian(x));
        }
    }
}

#[test]
fn dirichlet_data_is_the_trace_of_u() {
    for domain in domains() {
        let problem = make_case(&domain.kind(), 1).unwrap();
        for curve in domain.curves() {
            for p in domain.sample_boundary(curve.id, 97).unwrap() {
                assert_eq!(problem.dirichlet(p), problem.u(p));
            }
        }
    }
    let annulus = CurvedDomain::<f64>::annulus(0.5, 1.0).unwrap();
    let problem = make_case(&annulus.kind(), 1).unwrap();
    let inner = annulus.boundary_point(CurveId::Inner, 0.7).unwrap();
    assert!((problem.dirichlet(inner) - 0.25f64.ln()).abs() < 1e-14);
}

#[test]
fn wellposedness_sampling() {
    let disk = CurvedDomain::<f64>::disk(1.0).unwrap();
    let case1 = ManufacturedProblem::new(ExactSolution::DiskSine, CoefficientCase::Constant);
    assert!((check_wellposedness(&case1, &disk, 100) - 1.0).abs() < 1e-12);
    let case2 = ManufacturedProblem::new(ExactSolution::DiskSine, CoefficientCase::Exponential);
    let m = check_wellposedness(&case2, &disk, 100);
    assert!(m > 0.0 && m < 1.0);
    // Case 3 is only reported; its sign is not asserted here beyond finiteness.
    let case3 = ManufacturedProblem::new(ExactSolution::DiskSine, CoefficientCase::Polynomial);
    assert!(check_wellposedness(&case3, &disk, 100).is_finite());
}
