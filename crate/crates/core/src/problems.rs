//! Manufactured advection–diffusion–reaction benchmarks
//! `−Δu + ∇·(b u) + c u = f` with Dirichlet data `u_D = u|∂Ω`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CurvedDomain, DomainKind};
use crate::scalar::{Point, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("coefficient case {0} is not one of 1, 2, 3")]
    UnknownCoefficientCase(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactSolution {
    /// x sin(1 − x² − y²), zero on the unit circle.
    DiskSine,
    /// log(x² + y²)
    LogRadius,
    /// 1 − x² − y², quadratic and zero on the unit circle.
    Paraboloid,
    Zero,
}

/// b and c of the three benchmark configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum CoefficientCase {
    /// b = (1, 1), c = 1
    Constant,
    /// b = (eˣ, 0), c = eˣ/2
    Exponential,
    /// b = (2 − y², 2 − x), c = 1 + (1 + x)(1 + y)²
    Polynomial,
}

impl TryFrom<u8> for CoefficientCase {
    type Error = ProblemError;
    fn try_from(v: u8) -> Result<Self, ProblemError> {
        match v {
            1 => Ok(Self::Constant),
            2 => Ok(Self::Exponential),
            3 => Ok(Self::Polynomial),
            other => Err(ProblemError::UnknownCoefficientCase(other)),
        }
    }
}

impl From<CoefficientCase> for u8 {
    fn from(c: CoefficientCase) -> u8 {
        match c {
            CoefficientCase::Constant => 1,
            CoefficientCase::Exponential => 2,
            CoefficientCase::Polynomial => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    pub exact: ExactSolution,
    pub coefficients: CoefficientCase,
}

/// Default benchmark for a domain: the disk uses x sin(1 − r²), the annulus
/// and rose use log(r²).
pub fn make_case<T: Real>(domain: &DomainKind<T>, case: u8) -> Result<ManufacturedProblem, ProblemError> {
    let coefficients = CoefficientCase::try_from(case)?;
    let exact = match domain {
        DomainKind::Disk { .. } => ExactSolution::DiskSine,
        DomainKind::Annulus { .. } | DomainKind::Rose { .. } => ExactSolution::LogRadius,
    };
    Ok(ManufacturedProblem { exact, coefficients })
}

impl ManufacturedProblem {
    pub fn new(exact: ExactSolution, coefficients: CoefficientCase) -> Self {
        Self { exact, coefficients }
    }

    pub fn u<T: Real>(&self, p: Point<T>) -> T {
        let [x, y] = p;
        let r2 = x * x + y * y;
        match self.exact {
            ExactSolution::DiskSine => x * (T::one() - r2).sin(),
            ExactSolution::LogRadius => r2.ln(),
            ExactSolution::Paraboloid => T::one() - r2,
            ExactSolution::Zero => T::zero(),
        }
    }

    /// Dirichlet data: the trace of the exact solution.
    pub fn dirichlet<T: Real>(&self, p: Point<T>) -> T {
        self.u(p)
    }

    pub fn grad<T: Real>(&self, p: Point<T>) -> [T; 2] {
        let [x, y] = p;
        let two = T::lit(2.0);
        let r2 = x * x + y * y;
        match self.exact {
            ExactSolution::DiskSine => {
                let s = T::one() - r2;
                [s.sin() - two * x * x * s.cos(), -two * x * y * s.cos()]
            }
            ExactSolution::LogRadius => [two * x / r2, two * y / r2],
            ExactSolution::Paraboloid => [-two * x, -two * y],
            ExactSolution::Zero => [T::zero(); 2],
        }
    }

    /// (u_xx, u_xy, u_yy)
    pub fn hessian<T: Real>(&self, p: Point<T>) -> [T; 3] {
        let [x, y] = p;
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let r2 = x * x + y * y;
        match self.exact {
            ExactSolution::DiskSine => {
                let s = T::one() - r2;
                let (sn, cs) = (s.sin(), s.cos());
                [
                    -T::lit(6.0) * x * cs - four * x * x * x * sn,
                    -two * y * cs - four * x * x * y * sn,
                    -two * x * cs - four * x * y * y * sn,
                ]
            }
            ExactSolution::LogRadius => {
                let r4 = r2 * r2;
                [two * (y * y - x * x) / r4, -four * x * y / r4, two * (x * x - y * y) / r4]
            }
            ExactSolution::Paraboloid => [-two, T::zero(), -two],
            ExactSolution::Zero => [T::zero(); 3],
        }
    }

    pub fn laplacian<T: Real>(&self, p: Point<T>) -> T {
        let h = self.hessian(p);
        h[0] + h[2]
    }

    pub fn advection<T: Real>(&self, p: Point<T>) -> [T; 2] {
        let [x, y] = p;
        match self.coefficients {
            CoefficientCase::Constant => [T::one(), T::one()],
            CoefficientCase::Exponential => [x.exp(), T::zero()],
            CoefficientCase::Polynomial => [T::lit(2.0) - y * y, T::lit(2.0) - x],
        }
    }

    pub fn advection_divergence<T: Real>(&self, p: Point<T>) -> T {
        match self.coefficients {
            CoefficientCase::Exponential => p[0].exp(),
            CoefficientCase::Constant | CoefficientCase::Polynomial => T::zero(),
        }
    }

    pub fn reaction<T: Real>(&self, p: Point<T>) -> T {
        let [x, y] = p;
        match self.coefficients {
            CoefficientCase::Constant => T::one(),
            CoefficientCase::Exponential => T::lit(0.5) * x.exp(),
            CoefficientCase::Polynomial => T::one() + (T::one() + x) * (T::one() + y) * (T::one() + y),
        }
    }

    /// f = −Δu + b·∇u + (∇·b) u + c u
    pub fn source<T: Real>(&self, p: Point<T>) -> T {
        let b = self.advection(p);
        let g = self.grad(p);
        let u = self.u(p);
        -self.laplacian(p) + b[0] * g[0] + b[1] * g[1] + (self.advection_divergence(p) + self.reaction(p)) * u
    }
}

/// Minimum of `c + ½∇·b` over a `grid_n × grid_n` bounding-box grid restricted
/// to the domain; negative values mean the coercivity condition fails there.
pub fn check_wellposedness<T: Real>(problem: &ManufacturedProblem, domain: &CurvedDomain<T>, grid_n: usize) -> T {
    let r = domain.outer_radius();
    let n = grid_n.max(2);
    let step = T::lit(2.0) * r / T::from_usize_lossy(n - 1);
    let mut min = T::infinity();
    for i in 0..n {
        for j in 0..n {
            let p = [-r + step * T::from_usize_lossy(i), -r + step * T::from_usize_lossy(j)];
            if domain.contains(p) {
                min = min.min(problem.reaction(p) + T::lit(0.5) * problem.advection_divergence(p));
            }
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        let disk = make_case(&DomainKind::Disk { radius: 1.0 }, 1).unwrap();
        assert_eq!(disk.exact, ExactSolution::DiskSine);
        assert_eq!(disk.u([1.0, 0.0]), 0.0);
        for k in 0..16 {
            let t = k as f64 * 0.4;
            assert!(disk.u([t.cos(), t.sin()]).abs() < 1e-15);
        }
        let ann = make_case(&DomainKind::Annulus { inner: 0.5, outer: 1.0 }, 1).unwrap();
        assert_eq!(ann.u([1.0, 0.0]), 0.0);
        assert!((ann.u([0.0, 0.5]) - 0.25f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn annulus_case_one_source() {
        let ann = make_case(&DomainKind::Annulus { inner: 0.5, outer: 1.0 }, 1).unwrap();
        assert!((ann.source([1.0f64, 0.0]) - 2.0).abs() < 1e-14);
        assert!(ann.laplacian([0.3f64, 0.7]).abs() < 1e-13);
    }

    #[test]
    fn disk_case_one_source_at_origin() {
        // finite-difference oracle of −Δu + b·∇u + c u at the origin (u(0,0) = 0)
        let p = make_case(&DomainKind::Disk { radius: 1.0 }, 1).unwrap();
        let h = 1e-4;
        let u = |x: f64, y: f64| p.u([x, y]);
        let lap = (u(h, 0.0) + u(-h, 0.0) + u(0.0, h) + u(0.0, -h) - 4.0 * u(0.0, 0.0)) / (h * h);
        let ux = (u(h, 0.0) - u(-h, 0.0)) / (2.0 * h);
        let uy = (u(0.0, h) - u(0.0, -h)) / (2.0 * h);
        let fd = -lap + ux + uy;
        assert!((p.source([0.0, 0.0]) - fd).abs() < 1e-6);
        // closed form: u_x(0,0) = sin 1, Δu(0,0) = 0
        assert!((p.source([0.0, 0.0]) - 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn zero_solution_has_zero_source() {
        let p = ManufacturedProblem::new(ExactSolution::Zero, CoefficientCase::Polynomial);
        assert_eq!(p.source([0.3, -0.2]), 0.0);
    }

    #[test]
    fn wellposedness_minima() {
        let disk = CurvedDomain::<f64>::disk(1.0).unwrap();
        let c1 = ManufacturedProblem::new(ExactSolution::DiskSine, CoefficientCase::Constant);
        assert_eq!(check_wellposedness(&c1, &disk, 50), 1.0);
        let c2 = ManufacturedProblem::new(ExactSolution::DiskSine, CoefficientCase::Exponential);
        let m = check_wellposedness(&c2, &disk, 101);
        assert!((m - (-1.0f64).exp()).abs() < 1e-12);
        let c3 = ManufacturedProblem::new(ExactSolution::DiskSine, CoefficientCase::Polynomial);
        assert!(check_wellposedness(&c3, &disk, 100).is_finite());
    }

    #[test]
    fn case_numbers_round_trip() {
        for c in 1u8..=3 {
            assert_eq!(u8::from(CoefficientCase::try_from(c).unwrap()), c);
        }
        assert_eq!(CoefficientCase::try_from(4), Err(ProblemError::UnknownCoefficientCase(4)));
    }
}
