//! Configuration-driven mesh-refinement studies.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{dg_norm_error, error_quadrature_degree, l2_error, ConvergenceReport, LevelResult, ReportMetadata};
use crate::assembly::{solve, AssemblyError, DGSystemSpec, Method};
use crate::basis::{NodalBasis, MAX_DEGREE};
use crate::geometry::{CurvedDomain, DomainKind};
use crate::mesh::{generate_mesh, read_gmsh, validate, Triangulation};
use crate::problems::{make_case, CoefficientCase, ExactSolution, ManufacturedProblem};
use crate::rodspace::BoundaryConstraintSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Md,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "md" => Ok(Self::Md),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown format {other:?} (expected csv, md or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// Built-in generator, one entry per level (number of radial rings).
    Builtin { levels: Vec<usize> },
    /// Gmsh 2.x ASCII files, one per level.
    Files { paths: Vec<PathBuf> },
}

fn default_penalty() -> f64 {
    10.0
}
fn default_solver_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    50
}
fn default_stop_tol() -> f64 {
    1e-12
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_format() -> OutputFormat {
    OutputFormat::Both
}

/// A study definition, read from TOML.
///
/// ```toml
/// name = "disk-n2"
/// degree = 2
/// method = "rod_global"      # classical | rod_global | rod_iterative
/// coeff_case = 1             # 1, 2 or 3
///
/// [domain]
/// kind = "disk"              # disk | annulus | rose
/// radius = 1.0
///
/// [mesh.builtin]
/// levels = [3, 6, 12, 24]
/// ```
///
/// Optional keys: `exact` (overrides the domain's manufactured solution),
/// `penalty` (η₀, default 10), `volume_degree`, `edge_points`,
/// `error_degree`, `solver_tol` (1e-10), `max_iter` (50) and `stop_tol`
/// (1e-12) for the iterative method (the stopping rule bounds the largest
/// change of the nodal boundary data between iterations), `dg_norm`,
/// `out_dir` ("out"), `format` ("both"), `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub domain: DomainKind<f64>,
    pub degree: usize,
    pub method: Method,
    pub coeff_case: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactSolution>,
    pub mesh: MeshSource,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_degree: Option<usize>,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default)]
    pub dg_norm: bool,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("level {level}: {message}")]
    Level { level: usize, message: String },
    #[error("level {level}: {source}")]
    Numerical { level: usize, source: AssemblyError },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl StudyError {
    /// 2 for configuration problems, 3 for everything that failed while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            StudyError::Config(_) | StudyError::Io { .. } => 2,
            StudyError::Level { .. } | StudyError::Numerical { .. } => 3,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, StudyError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| StudyError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::Config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("run name {:?} must be a non-empty file name", self.name));
        }
        if !(1..=MAX_DEGREE).contains(&self.degree) {
            return bad(format!("degree {} outside 1..={MAX_DEGREE}", self.degree));
        }
        CoefficientCase::try_from(self.coeff_case).map_err(|e| StudyError::Config(e.to_string()))?;
        CurvedDomain::new(self.domain).map_err(|e| StudyError::Config(e.to_string()))?;
        let levels = match &self.mesh {
            MeshSource::Builtin { levels } => {
                if levels.contains(&0) {
                    return bad("builtin levels need at least one ring".into());
                }
                levels.len()
            }
            MeshSource::Files { paths } => paths.len(),
        };
        if levels == 0 {
            return bad("at least one mesh level is required".into());
        }
        if !(self.penalty > 0.0 && self.solver_tol > 0.0 && self.stop_tol > 0.0 && self.max_iter > 0) {
            return bad("penalty, tolerances and max_iter must be positive".into());
        }
        self.spec().validate().map_err(|e| StudyError::Config(e.to_string()))?;
        if let Some(d) = self.error_degree {
            crate::basis::quadrature::volume_quadrature::<f64>(d).map_err(|e| StudyError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn spec(&self) -> DGSystemSpec<f64> {
        let mut spec = DGSystemSpec::new(self.degree, self.method);
        spec.penalty = self.penalty;
        spec.volume_degree = self.volume_degree.unwrap_or(spec.volume_degree);
        spec.edge_points = self.edge_points.unwrap_or(spec.edge_points);
        spec.solve_tol = self.solver_tol;
        spec.max_iter = self.max_iter;
        spec.stop_tol = self.stop_tol;
        spec
    }

    pub fn problem(&self) -> ManufacturedProblem {
        let mut p = make_case(&self.domain, self.coeff_case).expect("validated coefficient case");
        if let Some(exact) = self.exact {
            p.exact = exact;
        }
        p
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(&self.name)
    }
}

fn domain_name(kind: &DomainKind<f64>) -> &'static str {
    match kind {
        DomainKind::Disk { .. } => "disk",
        DomainKind::Annulus { .. } => "annulus",
        DomainKind::Rose { .. } => "rose",
    }
}

fn load_level(cfg: &RunConfig, domain: &CurvedDomain<f64>, level: usize) -> Result<Triangulation<f64>, StudyError> {
    let level_err = |message: String| StudyError::Level { level, message };
    let mut tri = match &cfg.mesh {
        MeshSource::Builtin { levels } => generate_mesh(domain, levels[level]).map_err(|e| level_err(e.to_string()))?,
        MeshSource::Files { paths } => {
            let text = std::fs::read_to_string(&paths[level])
                .map_err(|e| StudyError::Config(format!("{}: {e}", paths[level].display())))?;
            read_gmsh(&text).map_err(|e| level_err(format!("{}: {e}", paths[level].display())))?
        }
    };
    tri.snap_boundary_vertices(domain, 1e-6);
    let quality = validate(&tri, domain);
    if !quality.passed() {
        let list: Vec<String> = quality.violations.iter().take(5).map(|v| v.to_string()).collect();
        return Err(level_err(format!("mesh rejected: {}", list.join("; "))));
    }
    Ok(tri)
}

/// Runs every level of the study; rows are ordered by decreasing h.
pub fn run_convergence_study(cfg: &RunConfig) -> Result<ConvergenceReport, StudyError> {
    cfg.validate()?;
    let domain = CurvedDomain::new(cfg.domain).map_err(|e| StudyError::Config(e.to_string()))?;
    let problem = cfg.problem();
    let basis = NodalBasis::<f64>::new(cfg.degree).map_err(|e| StudyError::Config(e.to_string()))?;
    let spec = cfg.spec();
    let error_degree = cfg.error_degree.unwrap_or(error_quadrature_degree(cfg.degree));
    let count = match &cfg.mesh {
        MeshSource::Builtin { levels } => levels.len(),
        MeshSource::Files { paths } => paths.len(),
    };
    let minimum = crate::problems::check_wellposedness(&problem, &domain, 100);
    if minimum < 0.0 {
        log::warn!("c + div(b)/2 reaches {minimum:.3e} < 0 on the sampled grid");
    }
    let mut levels = Vec::with_capacity(count);
    for level in 0..count {
        let tri = load_level(cfg, &domain, level)?;
        let start = Instant::now();
        let sol = solve(&problem, &tri, &domain, &basis, spec).map_err(|source| StudyError::Numerical { level, source })?;
        let numerical = |message: String| StudyError::Level { level, message };
        let e2 = l2_error(&sol.coefficients, |p| problem.u(p), &tri, &basis, error_degree).map_err(|e| numerical(e.to_string()))?;
        let dg = if cfg.dg_norm {
            Some(dg_norm_error(&sol.coefficients, &problem, &tri, &basis, error_degree).map_err(|e| numerical(e.to_string()))?)
        } else {
            None
        };
        let condition = match cfg.method {
            Method::Classical => None,
            _ => BoundaryConstraintSet::build(&tri, &domain, &basis, |p| problem.dirichlet(p))
                .ok()
                .map(|c| c.max_condition()),
        };
        log::info!("level {level}: K = {}, h = {:.3e}, E2 = {e2:.3e}", tri.num_elements(), tri.h);
        levels.push(LevelResult {
            elements: tri.num_elements(),
            h: tri.h,
            e2,
            dg_norm: dg,
            system_dim: sol.system_dim,
            relative_residual: sol.relative_residual,
            iterations: (cfg.method == Method::RodIterative).then_some(sol.trace.len()),
            max_constraint_condition: condition,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let mut report = ConvergenceReport {
        metadata: ReportMetadata {
            domain: domain_name(&cfg.domain).to_string(),
            degree: cfg.degree,
            method: cfg.method.to_string(),
            coeff_case: cfg.coeff_case,
            penalty: cfg.penalty,
            volume_degree: spec.volume_degree,
            edge_points: spec.edge_points,
        },
        levels,
    };
    report.sort_levels();
    Ok(report)
}

/// Writes `report.csv`, `report.md` (per `cfg.format`) and `config_echo`
/// into `<out_dir>/<name>/`. Returns the run directory.
pub fn write_outputs(cfg: &RunConfig, report: &ConvergenceReport) -> Result<PathBuf, StudyError> {
    let dir = cfg.run_dir();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| StudyError::Io { path, source }
    };
    std::fs::create_dir_all(&dir).map_err(io(&dir))?;
    let echo = cfg.to_toml();
    let write = |file: &str, text: String| {
        let path = dir.join(file);
        std::fs::write(&path, text).map_err(io(&path))
    };
    write("config_echo", echo.clone())?;
    if matches!(cfg.format, OutputFormat::Csv | OutputFormat::Both) {
        write("report.csv", report.to_csv())?;
    }
    if matches!(cfg.format, OutputFormat::Md | OutputFormat::Both) {
        let header: String = echo.lines().map(|l| format!("<!-- {l} -->\n")).collect();
        write("report.md", format!("{header}\n{}", report.to_markdown()))?;
    }
    Ok(dir)
}

/// E₂ for u = 1 − x² − y² on the unit disk (N = 2), which lies in the
/// constrained trial space and must be reproduced up to round-off.
pub fn run_patch_test(rings: usize, method: Method) -> Result<f64, StudyError> {
    let cfg = RunConfig {
        name: "patch".into(),
        domain: DomainKind::Disk { radius: 1.0 },
        degree: 2,
        method,
        coeff_case: 1,
        exact: Some(ExactSolution::Paraboloid),
        mesh: MeshSource::Builtin { levels: vec![rings] },
        penalty: default_penalty(),
        volume_degree: None,
        edge_points: None,
        error_degree: None,
        solver_tol: 1e-12,
        max_iter: default_max_iter(),
        stop_tol: default_stop_tol(),
        dg_norm: false,
        out_dir: default_out_dir(),
        format: default_format(),
        seed: 0,
    };
    Ok(run_convergence_study(&cfg)?.levels[0].e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "disk-n2"
degree = 2
method = "rod_global"
coeff_case = 1

[domain]
kind = "disk"
radius = 1.0

[mesh.builtin]
levels = [2, 4]
"#;

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.penalty, 10.0);
        assert_eq!(cfg.format, OutputFormat::Both);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn config_rejections() {
        for (from, to) in [("degree = 2", "degree = 7"), ("coeff_case = 1", "coeff_case = 4"), ("levels = [2, 4]", "levels = []")] {
            let err = RunConfig::from_toml(&SAMPLE.replace(from, to)).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{err}");
        }
        assert!(RunConfig::from_toml(&format!("{SAMPLE}\nbogus = 1\n")).is_err());
    }
}
