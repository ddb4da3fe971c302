//! Bivariate polynomials in (ξ, η) with dense coefficient storage.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly2<T> {
    /// `coeffs[a * stride + b]` multiplies ξ^a η^b.
    coeffs: Vec<T>,
    stride: usize,
}

impl<T: Real> Poly2<T> {
    pub fn zero(max_degree: usize) -> Self {
        let stride = max_degree + 1;
        Self { coeffs: vec![T::zero(); stride * stride], stride }
    }

    pub fn constant(max_degree: usize, c: T) -> Self {
        let mut p = Self::zero(max_degree);
        p.coeffs[0] = c;
        p
    }

    /// `c0 + cx ξ + cy η`
    pub fn linear(max_degree: usize, c0: T, cx: T, cy: T) -> Self {
        let mut p = Self::constant(max_degree, c0);
        p.coeffs[p.stride] = cx;
        p.coeffs[1] = cy;
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a + *b).collect();
        Self { coeffs, stride: self.stride }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| *c * s).collect(), stride: self.stride }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.stride;
        let mut out = Self::zero(n - 1);
        for a in 0..n {
            for b in 0..n {
                let x = self.coeffs[a * n + b];
                if x == T::zero() {
                    continue;
                }
                for c in 0..n {
                    for d in 0..n {
                        let y = other.coeffs[c * n + d];
                        if y == T::zero() {
                            continue;
                        }
                        assert!(a + c < n && b + d < n, "product exceeds storage degree");
                        out.coeffs[(a + c) * n + b + d] += x * y;
                    }
                }
            }
        }
        out
    }

    pub fn d_xi(&self) -> Self {
        let n = self.stride;
        let mut out = Self::zero(n - 1);
        for a in 1..n {
            for b in 0..n {
                out.coeffs[(a - 1) * n + b] = self.coeffs[a * n + b] * T::from_usize_lossy(a);
            }
        }
        out
    }

    pub fn d_eta(&self) -> Self {
        let n = self.stride;
        let mut out = Self::zero(n - 1);
        for a in 0..n {
            for b in 1..n {
                out.coeffs[a * n + b - 1] = self.coeffs[a * n + b] * T::from_usize_lossy(b);
            }
        }
        out
    }

    pub fn eval(&self, xi: T, eta: T) -> T {
        let n = self.stride;
        // Horner in ξ over Horner-in-η rows
        let mut acc = T::zero();
        for a in (0..n).rev() {
            let mut row = T::zero();
            for b in (0..n).rev() {
                row = row * eta + self.coeffs[a * n + b];
            }
            acc = acc * xi + row;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_derivatives() {
        let x = Poly2::linear(3, 0.0, 1.0, 0.0);
        let y = Poly2::linear(3, 0.0, 0.0, 1.0);
        let p = x.mul(&x).mul(&y).add(&Poly2::constant(3, 2.0)); // ξ²η + 2
        assert_eq!(p.eval(2.0, 3.0), 14.0);
        assert_eq!(p.d_xi().eval(2.0, 3.0), 12.0);
        assert_eq!(p.d_eta().eval(2.0, 3.0), 4.0);
        assert_eq!(p.d_xi().d_eta().eval(2.0, 3.0), 4.0);
    }
}
