//! Error norms, convergence orders and report formatting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::quadrature::{edge_quadrature, volume_quadrature};
use crate::basis::{AffineMap, BasisError, NodalBasis};
use crate::mesh::Triangulation;
use crate::problems::ManufacturedProblem;
use crate::scalar::{dot, Point, Real};

/// Errors below this are reported as exact.
pub const EXACT_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("mesh levels are not comparable: {0}")]
    DegenerateLevels(String),
    #[error("error below {EXACT_THRESHOLD:e}; the level is exact")]
    ExactLevel,
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Default exactness degree for error integrals.
pub fn error_quadrature_degree(n: usize) -> usize {
    (2 * n + 4).max(10).min(crate::basis::quadrature::MAX_VOLUME_DEGREE)
}

/// Nodal interpolant of `u` on every element.
pub fn interpolate<T: Real>(u: impl Fn(Point<T>) -> T, tri: &Triangulation<T>, basis: &NodalBasis<T>) -> Result<Vec<T>, AnalysisError> {
    let mut out = Vec::with_capacity(tri.num_elements() * basis.num_nodes());
    for k in 0..tri.num_elements() {
        let map = AffineMap::new(tri.element_vertices(k))?;
        out.extend(basis.nodes().iter().map(|&r| u(map.to_physical(r))));
    }
    Ok(out)
}

fn check_len<T: Real>(uh: &[T], tri: &Triangulation<T>, basis: &NodalBasis<T>) -> Result<(), AnalysisError> {
    let expected = tri.num_elements() * basis.num_nodes();
    if uh.len() != expected {
        return Err(AnalysisError::LengthMismatch { got: uh.len(), expected });
    }
    Ok(())
}

/// E₂ = ‖u − u_h‖ over the union of the mesh triangles.
pub fn l2_error<T: Real>(
    uh: &[T],
    u: impl Fn(Point<T>) -> T,
    tri: &Triangulation<T>,
    basis: &NodalBasis<T>,
    quad_degree: usize,
) -> Result<T, AnalysisError> {
    check_len(uh, tri, basis)?;
    let rule = volume_quadrature::<T>(quad_degree)?;
    let tab = basis.tabulate(&rule.points);
    let np = basis.num_nodes();
    let mut total = T::zero();
    for k in 0..tri.num_elements() {
        let map = AffineMap::new(tri.element_vertices(k))?;
        let coeffs = &uh[k * np..(k + 1) * np];
        let mut local = T::zero();
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = tab.values[q].iter().zip(coeffs).fold(T::zero(), |s, (phi, c)| s + *phi * *c);
            let e = u(map.to_physical(*p)) - v;
            local += *w * e * e;
        }
        total += local * map.det;
    }
    Ok(total.sqrt())
}

/// Squared contributions to the DG-norm error; `total()` is the norm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DgNormBreakdown {
    pub l2: f64,
    pub h1_semi: f64,
    /// Σ h_k² |e|²_{H²(T^k)}
    pub h2_weighted: f64,
    /// |e|²_*
    pub jump: f64,
    /// |e|²_b
    pub upwind: f64,
}

impl DgNormBreakdown {
    pub fn total(&self) -> f64 {
        (self.l2 + self.h1_semi + self.h2_weighted + self.jump + self.upwind).sqrt()
    }

    pub fn h1(&self) -> f64 {
        (self.l2 + self.h1_semi).sqrt()
    }
}

/// |||u − u_h||| with its components. Interior jumps of the exact solution
/// vanish, so ⟦e⟧ = −⟦u_h⟧ there; on ∂Ω_h the trace of `u` is used.
pub fn dg_norm_error<T: Real>(
    uh: &[T],
    problem: &ManufacturedProblem,
    tri: &Triangulation<T>,
    basis: &NodalBasis<T>,
    quad_degree: usize,
) -> Result<DgNormBreakdown, AnalysisError> {
    check_len(uh, tri, basis)?;
    let np = basis.num_nodes();
    let rule = volume_quadrature::<T>(quad_degree)?;
    let tab = basis.tabulate(&rule.points);
    let hess: Vec<Vec<[T; 3]>> = rule.points.iter().map(|&p| basis.eval_hess(p)).collect();
    let maps = (0..tri.num_elements()).map(|k| AffineMap::new(tri.element_vertices(k))).collect::<Result<Vec<_>, _>>()?;
    let mut out = DgNormBreakdown::default();
    for (k, map) in maps.iter().enumerate() {
        let c = &uh[k * np..(k + 1) * np];
        let (mut l2, mut h1, mut h2) = (T::zero(), T::zero(), T::zero());
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = map.to_physical(*p);
            let mut v = T::zero();
            let mut g = [T::zero(); 2];
            let mut h = [T::zero(); 3];
            for i in 0..np {
                v += c[i] * tab.values[q][i];
                let gi = map.physical_gradient(tab.grads[q][i]);
                let hi = map.physical_hessian(hess[q][i]);
                for a in 0..2 {
                    g[a] += c[i] * gi[a];
                }
                for a in 0..3 {
                    h[a] += c[i] * hi[a];
                }
            }
            let e = problem.u(x) - v;
            let ug = problem.grad(x);
            let uhs = problem.hessian(x);
            let ge = [ug[0] - g[0], ug[1] - g[1]];
            let he = [uhs[0] - h[0], uhs[1] - h[1], uhs[2] - h[2]];
            l2 += *w * e * e;
            h1 += *w * dot(ge, ge);
            h2 += *w * (he[0] * he[0] + T::lit(2.0) * he[1] * he[1] + he[2] * he[2]);
        }
        let hk = tri.elements[k].diameter;
        out.l2 += (l2 * map.det).to_f64_lossy();
        out.h1_semi += (h1 * map.det).to_f64_lossy();
        out.h2_weighted += (hk * hk * h2 * map.det).to_f64_lossy();
    }

    let eq = edge_quadrature::<T>(quad_degree.div_ceil(2).clamp(1, crate::basis::quadrature::MAX_EDGE_POINTS))?;
    let eval = |k: usize, x: Point<T>| -> T {
        let phi = basis.eval_basis(maps[k].to_reference(x));
        phi.iter().zip(&uh[k * np..(k + 1) * np]).fold(T::zero(), |s, (a, b)| s + *a * *b)
    };
    for edge in &tri.edges {
        let a = tri.vertices[edge.vertices[0]];
        let b = tri.vertices[edge.vertices[1]];
        let (mut jump, mut upwind) = (T::zero(), T::zero());
        for (s, w) in eq.points.iter().zip(&eq.weights) {
            let x = [a[0] + *s * (b[0] - a[0]), a[1] + *s * (b[1] - a[1])];
            let inner = eval(edge.left, x);
            let outer = match edge.right {
                Some((r, _)) => eval(r, x),
                None => problem.u(x),
            };
            let j2 = (inner - outer) * (inner - outer);
            jump += *w * j2;
            upwind += *w * dot(problem.advection(x), edge.normal).abs() * j2;
        }
        out.jump += jump.to_f64_lossy();
        out.upwind += (T::lit(0.5) * upwind * edge.length).to_f64_lossy();
    }
    Ok(out)
}

/// log(E_c/E_f) / log(h_c/h_f).
pub fn convergence_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Result<f64, AnalysisError> {
    if !(h_coarse > 0.0 && h_fine > 0.0) || h_coarse == h_fine {
        return Err(AnalysisError::DegenerateLevels(format!("h_coarse = {h_coarse}, h_fine = {h_fine}")));
    }
    if !(e_coarse.is_finite() && e_fine.is_finite()) || e_coarse < 0.0 || e_fine < 0.0 {
        return Err(AnalysisError::DegenerateLevels(format!("errors {e_coarse}, {e_fine}")));
    }
    if e_coarse < EXACT_THRESHOLD || e_fine < EXACT_THRESHOLD {
        return Err(AnalysisError::ExactLevel);
    }
    Ok((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}

/// `%.2E`: two decimals and a signed exponent of at least two digits.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.2E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}E{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub elements: usize,
    pub h: f64,
    pub e2: f64,
    pub dg_norm: Option<DgNormBreakdown>,
    pub system_dim: usize,
    pub relative_residual: f64,
    pub iterations: Option<usize>,
    pub max_constraint_condition: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub domain: String,
    pub degree: usize,
    pub method: String,
    pub coeff_case: u8,
    pub penalty: f64,
    pub volume_degree: usize,
    pub edge_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub metadata: ReportMetadata,
    /// Sorted by decreasing h.
    pub levels: Vec<LevelResult>,
}

/// One order cell of a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    FirstLevel,
    Exact,
    Rate(f64),
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::FirstLevel => f.write_str("---"),
            Order::Exact => f.write_str("exact"),
            Order::Rate(r) => write!(f, "{r:.1}"),
        }
    }
}

fn orders(values: &[(f64, f64)]) -> Vec<Order> {
    let mut out = vec![Order::FirstLevel];
    for w in values.windows(2) {
        out.push(match convergence_order(w[0].1, w[1].1, w[0].0, w[1].0) {
            Ok(r) => Order::Rate(r),
            Err(AnalysisError::ExactLevel) => Order::Exact,
            Err(_) => Order::Rate(f64::NAN),
        });
    }
    out.truncate(values.len());
    out
}

fn error_cell(e: f64) -> String {
    if e < EXACT_THRESHOLD {
        "exact".to_string()
    } else {
        format_sci(e)
    }
}

impl ConvergenceReport {
    pub fn sort_levels(&mut self) {
        self.levels.sort_by(|a, b| b.h.total_cmp(&a.h));
    }

    pub fn l2_orders(&self) -> Vec<Order> {
        orders(&self.levels.iter().map(|l| (l.h, l.e2)).collect::<Vec<_>>())
    }

    pub fn dg_orders(&self) -> Option<Vec<Order>> {
        let v: Option<Vec<(f64, f64)>> = self.levels.iter().map(|l| l.dg_norm.map(|d| (l.h, d.total()))).collect();
        v.map(|v| orders(&v))
    }

    /// Order between the two finest levels.
    pub fn finest_order(&self) -> Option<f64> {
        match self.l2_orders().last() {
            Some(Order::Rate(r)) if self.levels.len() > 1 => Some(*r),
            _ => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let dg = self.dg_orders();
        let mut s = String::from(if dg.is_some() { "K,h,E2,O2,DGnorm,O_DG\n" } else { "K,h,E2,O2\n" });
        for (i, (l, o)) in self.levels.iter().zip(self.l2_orders()).enumerate() {
            let _ = write!(s, "{},{},{},{}", l.elements, format_sci(l.h), error_cell(l.e2), o);
            if let (Some(d), Some(dgo)) = (l.dg_norm, dg.as_ref()) {
                let _ = write!(s, ",{},{}", error_cell(d.total()), dgo[i]);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let m = &self.metadata;
        let mut s = format!(
            "### {} domain, N = {}, {} (case {}, η₀ = {})\n\n",
            m.domain, m.degree, m.method, m.coeff_case, m.penalty
        );
        let dg = self.dg_orders();
        if dg.is_some() {
            s.push_str("| K | h | E2 | O2 | DG norm | O_DG |\n|---:|---:|---:|---:|---:|---:|\n");
        } else {
            s.push_str("| K | h | E2 | O2 |\n|---:|---:|---:|---:|\n");
        }
        for (i, (l, o)) in self.levels.iter().zip(self.l2_orders()).enumerate() {
            let _ = write!(s, "| {} | {} | {} | {} |", l.elements, format_sci(l.h), error_cell(l.e2), o);
            if let (Some(d), Some(dgo)) = (l.dg_norm, dg.as_ref()) {
                let _ = write!(s, " {} | {} |", error_cell(d.total()), dgo[i]);
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format() {
        assert_eq!(format_sci(1.13e-6), "1.13E-06");
        assert_eq!(format_sci(2.5), "2.50E+00");
        assert_eq!(format_sci(4.48e-1), "4.48E-01");
        assert_eq!(format_sci(1.0e12), "1.00E+12");
    }

    #[test]
    fn orders_match_examples() {
        assert!((convergence_order(8e-3, 1e-3, 0.2, 0.1).unwrap() - 3.0).abs() < 1e-12);
        let paper = convergence_order(2.53e-2, 5.02e-3, 4.48e-1, 2.38e-1).unwrap();
        assert!((paper - 2.557).abs() < 5e-3, "{paper}");
        assert_eq!(convergence_order(1e-6, 1e-6, 0.2, 0.1).unwrap(), 0.0);
        assert!(matches!(convergence_order(1e-3, 1e-4, 0.1, 0.1), Err(AnalysisError::DegenerateLevels(_))));
        assert_eq!(convergence_order(1e-3, 0.0, 0.2, 0.1), Err(AnalysisError::ExactLevel));
    }
}
