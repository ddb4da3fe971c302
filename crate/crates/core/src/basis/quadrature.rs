//! Gauss rules on the reference edge [0, 1] and the reference triangle.

use crate::scalar::{Point, Real};

use super::BasisError;

/// Maximum total degree of the shipped triangle rules.
pub const MAX_VOLUME_DEGREE: usize = 12;
/// Maximum number of points of the shipped edge rules.
pub const MAX_EDGE_POINTS: usize = 10;

/// Rule on the reference triangle {ξ, η ≥ 0, ξ + η ≤ 1}; weights sum to 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub exactness_degree: usize,
}

/// Rule on [0, 1]; weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeQuadrature<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
    pub exactness_degree: usize,
}

/// Gauss–Legendre nodes and weights on [-1, 1], Newton iteration on P_n.
fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    for i in 0..(n + 1) / 2 {
        let mut z = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= T::epsilon() * T::lit(4.0) {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let wi = T::lit(2.0) / ((T::one() - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = T::zero();
    }
    (x, w)
}

fn legendre_with_derivative<T: Real>(n: usize, z: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = z;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * z * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    (p1, nf * (z * p1 - p0) / (z * z - T::one()))
}

/// Gauss–Legendre rule with `n` points on [0, 1], exact to degree 2n − 1.
pub fn edge_quadrature<T: Real>(n: usize) -> Result<EdgeQuadrature<T>, BasisError> {
    if !(1..=MAX_EDGE_POINTS).contains(&n) {
        return Err(BasisError::UnsupportedQuadrature(n));
    }
    let (x, w) = gauss_legendre::<T>(n);
    let half = T::lit(0.5);
    Ok(EdgeQuadrature {
        points: x.iter().map(|&xi| half * (xi + T::one())).collect(),
        weights: w.iter().map(|&wi| half * wi).collect(),
        exactness_degree: 2 * n - 1,
    })
}

/// Triangle rule exact for total degree `degree`, built as a collapsed
/// (Duffy) product of Gauss–Legendre rules. All weights are positive and all
/// points are strictly interior.
pub fn volume_quadrature<T: Real>(degree: usize) -> Result<QuadratureRule<T>, BasisError> {
    if !(1..=MAX_VOLUME_DEGREE).contains(&degree) {
        return Err(BasisError::UnsupportedQuadrature(degree));
    }
    // the collapse ξ = u, η = v(1 - u) adds one power of (1 - u)
    let nu = (degree + 2).div_ceil(2);
    let nv = (degree + 1).div_ceil(2);
    let (xu, wu) = gauss_legendre::<T>(nu);
    let (xv, wv) = gauss_legendre::<T>(nv);
    let half = T::lit(0.5);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (a, wa) in xu.iter().zip(&wu) {
        let u = half * (*a + T::one());
        for (b, wb) in xv.iter().zip(&wv) {
            let v = half * (*b + T::one());
            points.push([u, v * (T::one() - u)]);
            weights.push(half * *wa * half * *wb * (T::one() - u));
        }
    }
    Ok(QuadratureRule { points, weights, exactness_degree: degree })
}
