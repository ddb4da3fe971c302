//! Reader for the ASCII Gmsh MSH 2.2 format (nodes, lines and triangles).

use std::collections::HashMap;

use thiserror::Error;

use crate::scalar::Real;

use super::{build_connectivity, signed_area, MeshError, Triangulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmshError {
    #[error("unsupported MSH version {0} (expected 2.x ASCII)")]
    UnsupportedVersion(String),
    #[error("malformed {section} section at line {line}")]
    MalformedSection { section: &'static str, line: usize },
    #[error("element type {element_type} at line {line} is neither a 2-node line nor a 3-node triangle")]
    NonTriangleElement { element_type: u32, line: usize },
    #[error("unknown node tag {tag} at line {line}")]
    UnknownNode { tag: usize, line: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

const LINE: u32 = 1;
const TRIANGLE: u32 = 2;
/// Gmsh writes these for physical points; they carry no connectivity.
const POINT: u32 = 15;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.inner.by_ref().map(|(i, l)| (i + 1, l.trim())).find(|(_, l)| !l.is_empty())
    }
}

/// Parses an MSH 2.2 ASCII file. Clockwise triangles are reoriented; line
/// elements are only checked for valid node references, since boundary
/// edges are recovered from connectivity.
pub fn read_gmsh<T: Real>(text: &str) -> Result<Triangulation<T>, GmshError> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let mut tags: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut saw_format = false;

    while let Some((ln, l)) = lines.next() {
        match l {
            "$MeshFormat" => {
                let bad = GmshError::MalformedSection { section: "$MeshFormat", line: ln + 1 };
                let (_, header) = lines.next().ok_or(bad.clone())?;
                let mut it = header.split_whitespace();
                let version = it.next().ok_or(bad.clone())?;
                if !version.starts_with("2.") {
                    return Err(GmshError::UnsupportedVersion(version.to_string()));
                }
                if it.next() != Some("0") {
                    return Err(GmshError::UnsupportedVersion(format!("{version} (binary)")));
                }
                expect_end(&mut lines, "$EndMeshFormat", "$MeshFormat")?;
                saw_format = true;
            }
            "$Nodes" => {
                let count = read_count(&mut lines, "$Nodes")?;
                for _ in 0..count {
                    let (ln, row) = lines.next().ok_or(GmshError::MalformedSection { section: "$Nodes", line: ln })?;
                    let bad = || GmshError::MalformedSection { section: "$Nodes", line: ln };
                    let f: Vec<&str> = row.split_whitespace().collect();
                    if f.len() < 3 {
                        return Err(bad());
                    }
                    let tag: usize = f[0].parse().map_err(|_| bad())?;
                    let x: f64 = f[1].parse().map_err(|_| bad())?;
                    let y: f64 = f[2].parse().map_err(|_| bad())?;
                    tags.insert(tag, vertices.len());
                    vertices.push([T::lit(x), T::lit(y)]);
                }
                expect_end(&mut lines, "$EndNodes", "$Nodes")?;
            }
            "$Elements" => {
                let count = read_count(&mut lines, "$Elements")?;
                for _ in 0..count {
                    let (ln, row) =
                        lines.next().ok_or(GmshError::MalformedSection { section: "$Elements", line: ln })?;
                    let bad = || GmshError::MalformedSection { section: "$Elements", line: ln };
                    let f: Vec<usize> = row.split_whitespace().map(|s| s.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
                    if f.len() < 3 {
                        return Err(bad());
                    }
                    let element_type = f[1] as u32;
                    let ntags = f[2];
                    let nodes = f.get(3 + ntags..).ok_or_else(bad)?;
                    let expected = match element_type {
                        LINE => 2,
                        TRIANGLE => 3,
                        POINT => 1,
                        other => return Err(GmshError::NonTriangleElement { element_type: other, line: ln }),
                    };
                    if nodes.len() != expected {
                        return Err(bad());
                    }
                    let mut idx = [0usize; 3];
                    for (slot, tag) in idx.iter_mut().zip(nodes) {
                        *slot = *tags.get(tag).ok_or(GmshError::UnknownNode { tag: *tag, line: ln })?;
                    }
                    if element_type == TRIANGLE {
                        let a = signed_area(vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]);
                        triangles.push(if a < T::zero() { [idx[0], idx[2], idx[1]] } else { idx });
                    }
                }
                expect_end(&mut lines, "$EndElements", "$Elements")?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // unknown section: skip to its end marker
                let end = format!("$End{}", &other[1..]);
                while let Some((_, l)) = lines.next() {
                    if l == end {
                        break;
                    }
                }
            }
            _ => return Err(GmshError::MalformedSection { section: "top level", line: ln }),
        }
    }
    if !saw_format {
        return Err(GmshError::MalformedSection { section: "$MeshFormat", line: 1 });
    }
    Ok(build_connectivity(vertices, triangles)?)
}

fn read_count(lines: &mut Lines<'_>, section: &'static str) -> Result<usize, GmshError> {
    let (ln, l) = lines.next().ok_or(GmshError::MalformedSection { section, line: 0 })?;
    l.parse().map_err(|_| GmshError::MalformedSection { section, line: ln })
}

fn expect_end(lines: &mut Lines<'_>, end: &str, section: &'static str) -> Result<(), GmshError> {
    match lines.next() {
        Some((_, l)) if l == end => Ok(()),
        Some((ln, _)) => Err(GmshError::MalformedSection { section, line: ln }),
        None => Err(GmshError::MalformedSection { section, line: 0 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n$Elements\n1\n1 2 2 0 1 1 2 3\n$EndElements\n";

    #[test]
    fn single_triangle_file() {
        let t = read_gmsh::<f64>(SINGLE).unwrap();
        assert_eq!(t.num_elements(), 1);
        assert_eq!(t.boundary_edges().count(), 3);
    }

    #[test]
    fn clockwise_triangles_reoriented() {
        let cw = SINGLE.replace("1 2 2 0 1 1 2 3", "1 2 2 0 1 1 3 2");
        let t = read_gmsh::<f64>(&cw).unwrap();
        assert!(t.elements[0].area > 0.0);
    }

    #[test]
    fn version_four_rejected() {
        let v4 = SINGLE.replace("2.2 0 8", "4.1 0 8");
        assert_eq!(read_gmsh::<f64>(&v4).unwrap_err(), GmshError::UnsupportedVersion("4.1".into()));
    }

    #[test]
    fn quads_rejected_and_errors_carry_lines() {
        let quad = SINGLE.replace("1 2 2 0 1 1 2 3", "1 3 2 0 1 1 2 3 3");
        assert_eq!(read_gmsh::<f64>(&quad).unwrap_err(), GmshError::NonTriangleElement { element_type: 3, line: 12 });
        let broken = SINGLE.replace("2 1 0 0", "2 x 0 0");
        assert_eq!(read_gmsh::<f64>(&broken).unwrap_err(), GmshError::MalformedSection { section: "$Nodes", line: 7 });
        let missing = SINGLE.replace("1 2 2 0 1 1 2 3", "1 2 2 0 1 1 2 9");
        assert_eq!(read_gmsh::<f64>(&missing).unwrap_err(), GmshError::UnknownNode { tag: 9, line: 12 });
    }
}
