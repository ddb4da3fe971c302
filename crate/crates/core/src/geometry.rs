//! Curved physical domains centred at the origin.
//!
//! Every supported boundary curve is a polar graph `r = R(θ)`, so containment
//! and residuals reduce to comparing `|p|` with the curve radius at `atan2(p)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{norm, sub, Point, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid domain parameters: {0}")]
    InvalidParameters(String),
    #[error("domain has no {0:?} boundary curve")]
    UnknownCurve(CurveId),
    #[error("ray from ({ox}, {oy}) through ({tx}, {ty}) does not meet the boundary")]
    NoIntersection { ox: f64, oy: f64, tx: f64, ty: f64 },
    #[error("ray origin and through point coincide")]
    DegenerateRay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveId {
    Outer,
    Inner,
}

/// A boundary curve with its outward orientation: the outer curve's outward
/// normal points away from the origin, the inner curve's towards it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCurve {
    pub id: CurveId,
    pub outward_away_from_origin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainKind<T> {
    Disk { radius: T },
    Annulus { inner: T, outer: T },
    /// Annulus whose radii are perturbed by `1 - magnitude + magnitude cos(petals θ)`.
    Rose { inner: T, outer: T, petals: u32, magnitude: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvedDomain<T> {
    kind: DomainKind<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryHit<T> {
    pub point: Point<T>,
    /// Distance from the ray origin to `point`.
    pub ray_parameter: T,
    pub curve_id: CurveId,
    /// Two candidate intersections were indistinguishable by distance to the
    /// through point; the one closer to the origin was returned.
    pub ambiguous: bool,
}

const ROSE_BRACKET_SAMPLES: usize = 64;

impl<T: Real> CurvedDomain<T> {
    pub fn new(kind: DomainKind<T>) -> Result<Self, GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidParameters(m.to_string()));
        match kind {
            DomainKind::Disk { radius } => {
                if !(radius > T::zero()) {
                    return bad("disk radius must be positive");
                }
            }
            DomainKind::Annulus { inner, outer } => {
                if !(inner > T::zero() && inner < outer) {
                    return bad("annulus needs 0 < inner < outer");
                }
            }
            DomainKind::Rose { inner, outer, petals, magnitude } => {
                if !(inner > T::zero() && inner < outer) {
                    return bad("rose needs 0 < inner < outer");
                }
                if petals < 1 {
                    return bad("rose needs at least one petal");
                }
                if !(magnitude >= T::zero() && magnitude < T::lit(0.5)) {
                    return bad("rose magnitude must lie in [0, 1/2)");
                }
            }
        }
        Ok(Self { kind })
    }

    pub fn disk(radius: T) -> Result<Self, GeometryError> {
        Self::new(DomainKind::Disk { radius })
    }

    pub fn annulus(inner: T, outer: T) -> Result<Self, GeometryError> {
        Self::new(DomainKind::Annulus { inner, outer })
    }

    pub fn rose(inner: T, outer: T, petals: u32, magnitude: T) -> Result<Self, GeometryError> {
        Self::new(DomainKind::Rose { inner, outer, petals, magnitude })
    }

    pub fn kind(&self) -> DomainKind<T> {
        self.kind
    }

    pub fn curves(&self) -> Vec<BoundaryCurve> {
        let outer = BoundaryCurve { id: CurveId::Outer, outward_away_from_origin: true };
        match self.kind {
            DomainKind::Disk { .. } => vec![outer],
            _ => vec![outer, BoundaryCurve { id: CurveId::Inner, outward_away_from_origin: false }],
        }
    }

    /// Unperturbed radius of the annulus (or disk) a curve comes from.
    pub fn base_radius(&self, curve: CurveId) -> Result<T, GeometryError> {
        match (self.kind, curve) {
            (DomainKind::Disk { radius }, CurveId::Outer) => Ok(radius),
            (DomainKind::Disk { .. }, CurveId::Inner) => Err(GeometryError::UnknownCurve(curve)),
            (DomainKind::Annulus { outer, .. } | DomainKind::Rose { outer, .. }, CurveId::Outer) => Ok(outer),
            (DomainKind::Annulus { inner, .. } | DomainKind::Rose { inner, .. }, CurveId::Inner) => Ok(inner),
        }
    }

    /// Largest base radius; the length scale for relative tolerances.
    pub fn outer_radius(&self) -> T {
        match self.kind {
            DomainKind::Disk { radius } => radius,
            DomainKind::Annulus { outer, .. } | DomainKind::Rose { outer, .. } => outer,
        }
    }

    /// Radial map of the rose transform: `r'(1 - β + β cos(α θ'))`. Identity
    /// scaling for disks and annuli.
    pub fn radial_map(&self, base_radius: T, theta: T) -> T {
        match self.kind {
            DomainKind::Rose { petals, magnitude, .. } => {
                let alpha = T::from_usize_lossy(petals as usize);
                base_radius * (T::one() - magnitude + magnitude * (alpha * theta).cos())
            }
            _ => base_radius,
        }
    }

    pub fn curve_radius(&self, curve: CurveId, theta: T) -> Result<T, GeometryError> {
        Ok(self.radial_map(self.base_radius(curve)?, theta))
    }

    pub fn boundary_point(&self, curve: CurveId, theta: T) -> Result<Point<T>, GeometryError> {
        let r = self.curve_radius(curve, theta)?;
        Ok([r * theta.cos(), r * theta.sin()])
    }

    /// `n` boundary points at equally spaced angles on one curve.
    pub fn sample_boundary(&self, curve: CurveId, n: usize) -> Result<Vec<Point<T>>, GeometryError> {
        let step = T::TAU() / T::from_usize_lossy(n);
        (0..n).map(|i| self.boundary_point(curve, step * T::from_usize_lossy(i))).collect()
    }

    fn tol(&self) -> T {
        T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) * self.outer_radius()
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        let r = norm(p);
        let theta = p[1].atan2(p[0]);
        let tol = self.tol();
        let outer = self.radial_map(self.outer_radius(), theta);
        if r > outer + tol {
            return false;
        }
        match self.base_radius(CurveId::Inner) {
            Ok(inner) => r >= self.radial_map(inner, theta) - tol,
            Err(_) => true,
        }
    }

    /// Polar residual `|‖p‖ - R(θ_p)|` against the closest curve.
    pub fn boundary_residual(&self, p: Point<T>) -> (CurveId, T) {
        let r = norm(p);
        let theta = p[1].atan2(p[0]);
        self.curves()
            .iter()
            .map(|c| {
                let rc = self.curve_radius(c.id, theta).expect("listed curve");
                (c.id, (r - rc).abs())
            })
            .fold((CurveId::Outer, T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Radially moves `p` onto the closest curve.
    pub fn snap_to_boundary(&self, p: Point<T>) -> (CurveId, Point<T>) {
        let (curve, _) = self.boundary_residual(p);
        let theta = p[1].atan2(p[0]);
        let point = self.boundary_point(curve, theta).expect("listed curve");
        (curve, point)
    }

    fn polar_gap(&self, curve: CurveId, p: Point<T>) -> T {
        let theta = p[1].atan2(p[0]);
        norm(p) - self.curve_radius(curve, theta).expect("listed curve")
    }

    /// Intersection of the ray `origin → through` with the boundary that is
    /// nearest to `through`.
    pub fn ray_boundary_intersect(
        &self,
        origin: Point<T>,
        through: Point<T>,
    ) -> Result<BoundaryHit<T>, GeometryError> {
        let d = sub(through, origin);
        let len = norm(d);
        if len == T::zero() {
            return Err(GeometryError::DegenerateRay);
        }
        let mut candidates: Vec<(T, CurveId)> = Vec::new();
        for curve in self.curves() {
            match self.kind {
                DomainKind::Rose { .. } => {
                    let mut roots = self.bracketed_roots(curve.id, origin, d, T::lit(0.5), T::lit(2.0), ROSE_BRACKET_SAMPLES);
                    if roots.is_empty() {
                        // Rays through points far from the boundary: scan the whole domain diameter.
                        let reach = (T::lit(2.5) * self.outer_radius() / len).max(T::lit(16.0));
                        roots = self.bracketed_roots(curve.id, origin, d, T::lit(1e-3), reach, 16 * ROSE_BRACKET_SAMPLES);
                    }
                    candidates.extend(roots.into_iter().map(|t| (t, curve.id)));
                }
                _ => {
                    let r = self.base_radius(curve.id)?;
                    candidates.extend(circle_roots(origin, d, r).into_iter().map(|t| (t, curve.id)));
                }
            }
        }
        candidates.retain(|(t, _)| *t > T::zero());
        if candidates.is_empty() {
            return Err(GeometryError::NoIntersection {
                ox: origin[0].to_f64_lossy(),
                oy: origin[1].to_f64_lossy(),
                tx: through[0].to_f64_lossy(),
                ty: through[1].to_f64_lossy(),
            });
        }
        // distance to `through` is |t - 1|·len; ties go to the smaller t
        candidates.sort_by(|a, b| {
            (a.0 - T::one()).abs().partial_cmp(&(b.0 - T::one()).abs()).unwrap().then(a.0.partial_cmp(&b.0).unwrap())
        });
        let (mut t, mut curve) = candidates[0];
        let mut ambiguous = false;
        if let Some(&(t2, c2)) = candidates.get(1) {
            let gap = ((t - T::one()).abs() - (t2 - T::one()).abs()).abs() * len;
            if gap < T::lit(1e-10) * len && (t2 - t).abs() * len > T::lit(1e-10) * len {
                ambiguous = true;
                if t2 < t {
                    t = t2;
                    curve = c2;
                }
            }
        }
        let point = [origin[0] + t * d[0], origin[1] + t * d[1]];
        Ok(BoundaryHit { point, ray_parameter: t * len, curve_id: curve, ambiguous })
    }

    fn bracketed_roots(&self, curve: CurveId, origin: Point<T>, d: Point<T>, t0: T, t1: T, samples: usize) -> Vec<T> {
        let at = |t: T| [origin[0] + t * d[0], origin[1] + t * d[1]];
        let g = |t: T| self.polar_gap(curve, at(t));
        let step = (t1 - t0) / T::from_usize_lossy(samples - 1);
        let mut roots = Vec::new();
        let mut a = t0;
        let mut ga = g(a);
        for i in 1..samples {
            let b = t0 + step * T::from_usize_lossy(i);
            let gb = g(b);
            if ga == T::zero() {
                roots.push(a);
            } else if ga * gb < T::zero() {
                roots.push(bisect(&g, a, b, ga));
            }
            a = b;
            ga = gb;
        }
        if ga == T::zero() {
            roots.push(a);
        }
        roots
    }
}

fn bisect<T: Real>(g: &impl Fn(T) -> T, mut a: T, mut b: T, mut ga: T) -> T {
    let rel = T::lit(1e-14).max(T::epsilon() * T::lit(2.0));
    for _ in 0..200 {
        let m = (a + b) * T::lit(0.5);
        if (b - a) <= rel * m.abs() || m == a || m == b {
            return m;
        }
        let gm = g(m);
        if gm == T::zero() {
            return m;
        }
        if ga * gm < T::zero() {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    (a + b) * T::lit(0.5)
}

/// Ray parameters where `|o + t d| = r`.
fn circle_roots<T: Real>(o: Point<T>, d: Point<T>, r: T) -> Vec<T> {
    let a = d[0] * d[0] + d[1] * d[1];
    let b = T::lit(2.0) * (o[0] * d[0] + o[1] * d[1]);
    let c = o[0] * o[0] + o[1] * o[1] - r * r;
    let disc = b * b - T::lit(4.0) * a * c;
    if disc < T::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // cancellation-free pair
    let q = if b >= T::zero() { -(b + sq) / T::lit(2.0) } else { (sq - b) / T::lit(2.0) };
    let mut roots = Vec::with_capacity(2);
    if q != T::zero() {
        roots.push(q / a);
        roots.push(c / q);
    } else {
        roots.push(T::zero());
    }
    roots
}

/// Distance between a hit and the analytic curve, for diagnostics.
pub fn hit_residual<T: Real>(domain: &CurvedDomain<T>, hit: &BoundaryHit<T>) -> T {
    let theta = hit.point[1].atan2(hit.point[0]);
    let r = domain.curve_radius(hit.curve_id, theta).expect("hit curve exists");
    (norm(hit.point) - r).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rose() -> CurvedDomain<f64> {
        CurvedDomain::rose(0.5, 1.0, 8, 0.1).unwrap()
    }

    #[test]
    fn containment_examples() {
        let disk = CurvedDomain::<f64>::disk(1.0).unwrap();
        assert!(disk.contains([0.0, 0.0]));
        assert!(!disk.contains([2.0, 0.0]));
        assert!(disk.contains([1.0, 0.0]));
        let ann = CurvedDomain::<f64>::annulus(0.5, 1.0).unwrap();
        assert!(!ann.contains([0.25, 0.0]));
        assert!(ann.contains([0.75, 0.0]));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CurvedDomain::<f64>::disk(0.0).is_err());
        assert!(CurvedDomain::<f64>::annulus(1.0, 0.5).is_err());
        assert!(CurvedDomain::rose(0.5, 1.0, 0, 0.1).is_err());
        assert!(CurvedDomain::rose(0.5, 1.0, 8, 0.5).is_err());
    }

    #[test]
    fn boundary_points() {
        let r = rose();
        let p = r.boundary_point(CurveId::Outer, 0.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        let p = r.boundary_point(CurveId::Outer, PI / 8.0).unwrap();
        assert!((norm(p) - 0.8).abs() < 1e-15);
        let disk = CurvedDomain::<f64>::disk(1.0).unwrap();
        let p = disk.boundary_point(CurveId::Outer, PI / 2.0).unwrap();
        assert!(p[0].abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        assert_eq!(disk.boundary_point(CurveId::Inner, 0.0), Err(GeometryError::UnknownCurve(CurveId::Inner)));
    }

    #[test]
    fn ray_examples() {
        let disk = CurvedDomain::<f64>::disk(1.0).unwrap();
        let hit = disk.ray_boundary_intersect([0.0, 0.0], [0.5, 0.0]).unwrap();
        assert!((hit.point[0] - 1.0).abs() < 1e-15 && hit.point[1].abs() < 1e-15);
        assert!((hit.ray_parameter - 1.0).abs() < 1e-15);
        let hit = disk.ray_boundary_intersect([0.0, -0.2], [0.0, 0.9]).unwrap();
        assert!(hit.point[0].abs() < 1e-15 && (hit.point[1] - 1.0).abs() < 1e-15);
        assert!(!hit.ambiguous);
    }

    #[test]
    fn rose_radial_ray_matches_polar_radius() {
        let r = rose();
        let th = PI / 8.0;
        let hit = r.ray_boundary_intersect([0.0, 0.0], [0.9 * th.cos(), 0.9 * th.sin()]).unwrap();
        assert_eq!(hit.curve_id, CurveId::Outer);
        assert!((norm(hit.point) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn annulus_chord_projects_onto_inner_circle() {
        let ann = CurvedDomain::<f64>::annulus(0.5, 1.0).unwrap();
        let a = [0.5, 0.0];
        let b = [0.5 * (0.3f64).cos(), 0.5 * (0.3f64).sin()];
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let hit = ann.ray_boundary_intersect([0.8, 0.1], mid).unwrap();
        assert_eq!(hit.curve_id, CurveId::Inner);
        assert!(hit_residual(&ann, &hit) < 1e-14);
    }

    #[test]
    fn missing_ray_reports_no_intersection() {
        let disk = CurvedDomain::<f64>::disk(1.0).unwrap();
        let err = disk.ray_boundary_intersect([3.0, 0.0], [4.0, 0.0]).unwrap_err();
        assert!(matches!(err, GeometryError::NoIntersection { .. }));
        assert_eq!(disk.ray_boundary_intersect([0.1, 0.0], [0.1, 0.0]), Err(GeometryError::DegenerateRay));
    }

    #[test]
    fn tangent_tie_takes_smaller_parameter() {
        // line y = 0 seen from (-2, 0) through (0, 0): hits at t = 0.5 and 1.5, equidistant
        let disk = CurvedDomain::<f64>::disk(1.0).unwrap();
        let hit = disk.ray_boundary_intersect([-2.0, 0.0], [0.0, 0.0]).unwrap();
        assert!(hit.ambiguous);
        assert!((hit.point[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn interior_shrink_is_contained() {
        for domain in [CurvedDomain::<f64>::disk(1.0).unwrap(), CurvedDomain::<f64>::annulus(0.5, 1.0).unwrap(), rose()] {
            for curve in domain.curves() {
                for p in domain.sample_boundary(curve.id, 1000).unwrap() {
                    let s = if curve.outward_away_from_origin { 0.999 } else { 1.001 };
                    assert!(domain.contains([p[0] * s, p[1] * s]));
                    assert!(domain.boundary_residual(p).1 <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let disk = CurvedDomain::<f32>::disk(1.0).unwrap();
        let hit = disk.ray_boundary_intersect([0.0, 0.0], [0.5, 0.0]).unwrap();
        assert!((hit.point[0] - 1.0).abs() < 1e-6);
    }
}
