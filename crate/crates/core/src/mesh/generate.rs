//! Deterministic ring-based generators for the disk, annulus and rose.

use crate::geometry::{CurvedDomain, DomainKind};
use crate::scalar::{Point, Real};

use super::{build_connectivity, signed_area, MeshError, Triangulation};

/// Vertex count per ring of the annulus generator.
pub fn annulus_ring_vertices(rings: usize) -> usize {
    16.max(8 * rings)
}

/// Triangulates the band between two closed rings given as (vertex index,
/// angle) lists sorted by increasing angle. Produces `inner.len() + outer.len()`
/// triangles by advancing whichever ring has the smaller next angle.
fn stitch_band<T: Real>(
    vertices: &[Point<T>],
    inner: &[(usize, T)],
    outer: &[(usize, T)],
    out: &mut Vec<[usize; 3]>,
) {
    let (m, n) = (inner.len(), outer.len());
    let next_angle = |ring: &[(usize, T)], i: usize| -> T {
        if i + 1 < ring.len() {
            ring[i + 1].1
        } else {
            ring[0].1 + T::TAU()
        }
    };
    let (mut i, mut j) = (0, 0);
    while i < m || j < n {
        let advance_outer = if i == m {
            true
        } else if j == n {
            false
        } else {
            next_angle(outer, j) < next_angle(inner, i)
        };
        let tri = if advance_outer {
            let t = [inner[i % m].0, outer[j % n].0, outer[(j + 1) % n].0];
            j += 1;
            t
        } else {
            let t = [inner[i % m].0, outer[j % n].0, inner[(i + 1) % m].0];
            i += 1;
            t
        };
        let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        out.push(if a < T::zero() { [tri[0], tri[2], tri[1]] } else { tri });
    }
}

fn push_ring<T: Real>(vertices: &mut Vec<Point<T>>, radius: T, count: usize, offset: T) -> Vec<(usize, T)> {
    let step = T::TAU() / T::from_usize_lossy(count);
    (0..count)
        .map(|j| {
            let theta = offset + step * T::from_usize_lossy(j);
            vertices.push([radius * theta.cos(), radius * theta.sin()]);
            (vertices.len() - 1, theta)
        })
        .collect()
}

/// Concentric rings: ring i at radius R·i/rings carries 6i vertices; K = 6·rings².
pub fn generate_disk_mesh<T: Real>(domain: &CurvedDomain<T>, rings: usize) -> Result<Triangulation<T>, MeshError> {
    let DomainKind::Disk { radius } = domain.kind() else {
        return Err(MeshError::WrongDomainKind);
    };
    if rings < 1 {
        return Err(MeshError::InvalidGenerator("rings must be at least 1".into()));
    }
    let mut vertices = vec![[T::zero(), T::zero()]];
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    let mut prev: Vec<(usize, T)> = Vec::new();
    for i in 1..=rings {
        let r = if i == rings { radius } else { radius * T::from_usize_lossy(i) / T::from_usize_lossy(rings) };
        let ring = push_ring(&mut vertices, r, 6 * i, T::zero());
        if i == 1 {
            for j in 0..6 {
                triangles.push([0, ring[j].0, ring[(j + 1) % 6].0]);
            }
        } else {
            stitch_band(&vertices, &prev, &ring, &mut triangles);
        }
        prev = ring;
    }
    build_connectivity(vertices, triangles)
}

fn annulus_vertices_and_triangles<T: Real>(inner: T, outer: T, rings: usize) -> (Vec<Point<T>>, Vec<[usize; 3]>) {
    let m = annulus_ring_vertices(rings);
    let half_step = T::PI() / T::from_usize_lossy(m);
    let mut vertices = Vec::with_capacity(m * (rings + 1));
    let mut triangles = Vec::with_capacity(2 * m * rings);
    let mut prev: Vec<(usize, T)> = Vec::new();
    for i in 0..=rings {
        let r = match i {
            0 => inner,
            _ if i == rings => outer,
            _ => inner + (outer - inner) * T::from_usize_lossy(i) / T::from_usize_lossy(rings),
        };
        let offset = if i % 2 == 1 { half_step } else { T::zero() };
        let ring = push_ring(&mut vertices, r, m, offset);
        if i > 0 {
            stitch_band(&vertices, &prev, &ring, &mut triangles);
        }
        prev = ring;
    }
    (vertices, triangles)
}

/// `rings` bands between the two circles, `max(16, 8·rings)` vertices per ring,
/// odd rings rotated by half a step.
pub fn generate_annulus_mesh<T: Real>(domain: &CurvedDomain<T>, rings: usize) -> Result<Triangulation<T>, MeshError> {
    let DomainKind::Annulus { inner, outer } = domain.kind() else {
        return Err(MeshError::WrongDomainKind);
    };
    if rings < 1 {
        return Err(MeshError::InvalidGenerator("rings must be at least 1".into()));
    }
    let (vertices, triangles) = annulus_vertices_and_triangles(inner, outer, rings);
    build_connectivity(vertices, triangles)
}

/// Annulus mesh pushed through the polar map (r', θ') ↦ (R(r', θ'), θ').
pub fn generate_rose_mesh<T: Real>(domain: &CurvedDomain<T>, rings: usize) -> Result<Triangulation<T>, MeshError> {
    let DomainKind::Rose { inner, outer, .. } = domain.kind() else {
        return Err(MeshError::WrongDomainKind);
    };
    if rings < 1 {
        return Err(MeshError::InvalidGenerator("rings must be at least 1".into()));
    }
    let (vertices, triangles) = annulus_vertices_and_triangles(inner, outer, rings);
    let mapped = vertices
        .into_iter()
        .map(|p| {
            let r = p[0].hypot(p[1]);
            let theta = p[1].atan2(p[0]);
            let rr = domain.radial_map(r, theta);
            [rr * theta.cos(), rr * theta.sin()]
        })
        .collect();
    // inverted images surface as NonPositiveArea
    build_connectivity(mapped, triangles)
}

/// Dispatches on the domain kind.
pub fn generate_mesh<T: Real>(domain: &CurvedDomain<T>, rings: usize) -> Result<Triangulation<T>, MeshError> {
    match domain.kind() {
        DomainKind::Disk { .. } => generate_disk_mesh(domain, rings),
        DomainKind::Annulus { .. } => generate_annulus_mesh(domain, rings),
        DomainKind::Rose { .. } => generate_rose_mesh(domain, rings),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveId;
    use crate::mesh::{boundary_shoelace_area, validate};
    use crate::scalar::norm;

    fn disk() -> CurvedDomain<f64> {
        CurvedDomain::disk(1.0).unwrap()
    }

    #[test]
    fn disk_counts_and_euler() {
        assert_eq!(generate_disk_mesh(&disk(), 1).unwrap().num_elements(), 6);
        for rings in 1..=6 {
            let t = generate_disk_mesh(&disk(), rings).unwrap();
            assert_eq!(t.num_elements(), 6 * rings * rings);
            // V − E + F = 1 for a disk-like planar triangulation (outer face excluded)
            let v = t.vertices.len() as i64;
            let e = t.edges.len() as i64;
            let f = t.num_elements() as i64;
            assert_eq!(v - e + f, 1);
        }
        assert_eq!(generate_disk_mesh(&disk(), 2).unwrap().num_elements(), 24);
    }

    #[test]
    fn disk_boundary_exact_and_valid() {
        for rings in [1, 2, 4, 7] {
            let t = generate_disk_mesh(&disk(), rings).unwrap();
            for (v, p) in t.vertices.iter().enumerate() {
                if t.boundary_vertex[v] {
                    assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-14);
                }
            }
            let r = validate(&t, &disk());
            assert!(r.passed(), "{:?}", r.violations);
            // convex domain: inscribed polygon
            let area = t.total_area();
            assert!((area - boundary_shoelace_area(&t)).abs() < 1e-12);
            assert!(area <= std::f64::consts::PI);
        }
    }

    #[test]
    fn opposite_vertex_off_boundary() {
        let t = generate_disk_mesh(&disk(), 4).unwrap();
        for &k in &t.boundary_elements {
            let o = t.vertices[t.elements[k].opposite_vertex.unwrap()];
            assert!(disk().boundary_residual(o).1 > 1e-6 * t.h);
        }
    }

    #[test]
    fn annulus_counts() {
        let ann = CurvedDomain::<f64>::annulus(0.5, 1.0).unwrap();
        let t = generate_annulus_mesh(&ann, 1).unwrap();
        assert_eq!(t.num_elements(), 32);
        for rings in [2, 4] {
            let t = generate_annulus_mesh(&ann, rings).unwrap();
            assert_eq!(t.num_elements(), 2 * rings * annulus_ring_vertices(rings));
            let r = validate(&t, &ann);
            assert!(r.passed(), "{:?}", r.violations);
            assert!(r.rho_ratio_max < 10.0);
            for (v, p) in t.vertices.iter().enumerate() {
                if t.boundary_vertex[v] && norm(*p) < 0.75 {
                    assert!((p[0] * p[0] + p[1] * p[1] - 0.25).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rose_mapping() {
        let rose = CurvedDomain::<f64>::rose(0.5, 1.0, 8, 0.1).unwrap();
        assert!((rose.radial_map(1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((rose.radial_map(0.7, std::f64::consts::PI / 8.0) - 0.8 * 0.7).abs() < 1e-15);
        for rings in [2, 4, 8] {
            let t = generate_rose_mesh(&rose, rings).unwrap();
            assert!(t.elements.iter().all(|e| e.area > 0.0));
            let r = validate(&t, &rose);
            assert!(r.passed(), "{:?}", r.violations);
            let _ = rose.boundary_point(CurveId::Inner, 0.0).unwrap();
        }
    }

    #[test]
    fn refinement_decreases_h() {
        let ann = CurvedDomain::<f64>::annulus(0.5, 1.0).unwrap();
        let rose = CurvedDomain::<f64>::rose(0.5, 1.0, 8, 0.1).unwrap();
        for domain in [disk(), ann, rose] {
            let hs: Vec<f64> = (1..8).map(|r| generate_mesh(&domain, r).unwrap().h).collect();
            assert!(hs.windows(2).all(|w| w[1] < w[0]), "{hs:?}");
        }
    }

    #[test]
    fn wrong_kind_and_zero_rings() {
        let ann = CurvedDomain::<f64>::annulus(0.5, 1.0).unwrap();
        assert_eq!(generate_disk_mesh(&ann, 2), Err(MeshError::WrongDomainKind));
        assert!(matches!(generate_disk_mesh(&disk(), 0), Err(MeshError::InvalidGenerator(_))));
    }
}
