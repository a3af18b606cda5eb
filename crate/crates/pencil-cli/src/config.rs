use std::path::{Path, PathBuf};

use acoustic_pencil::geometry::{
    load_mesh, make_ball_volume_quadrature, make_ellipsoid_surface_quadrature, make_ellipsoid_volume_quadrature,
    make_unit_sphere_quadrature, mesh_volume_quadrature, read_off, Material, Scene, SurfaceQuadrature,
    VolumeQuadrature, P3,
};
use acoustic_pencil::resonance_finder::{RefineOptions, SearchWindow};
use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub shape: ShapeConfig,
    #[serde(default = "one_inclusion")]
    pub inclusions: Vec<InclusionConfig>,
    /// Physical inclusion scale for fixed-contrast scenes.
    #[serde(default = "unit")]
    pub scale: f64,
    pub material: MaterialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    #[serde(rename = "type")]
    pub kind: ShapeKind,
    pub path: Option<PathBuf>,
    pub axes: Option<[f64; 3]>,
    #[serde(default = "default_surface_n")]
    pub surface_n: usize,
    #[serde(default = "default_volume_n")]
    pub volume_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    UnitSphere,
    Ellipsoid,
    Mesh,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionConfig {
    pub center: P3,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CaseSpec {
    Scaling(u8),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PerInclusion {
    One(f64),
    Each(Vec<f64>),
}

impl PerInclusion {
    pub fn is_one(&self) -> bool {
        match self {
            Self::One(x) => *x == 1.0,
            Self::Each(v) => v.iter().all(|x| *x == 1.0),
        }
    }

    fn first(&self) -> f64 {
        match self {
            Self::One(x) => *x,
            Self::Each(v) => v.first().copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub case: CaseSpec,
    #[serde(default = "unit_each")]
    pub v2: PerInclusion,
    #[serde(default)]
    pub v12: f64,
    #[serde(default = "unit_each")]
    pub rho: PerInclusion,
    #[serde(default)]
    pub rho1: f64,
    #[serde(default)]
    pub rho_inf: bool,
    #[serde(default)]
    pub v_inf: bool,
    /// Spectral mode of the regular branch (cases 1 and 4).
    #[serde(default)]
    pub mode: usize,
    /// Branch sign, +1 or −1.
    #[serde(default = "plus")]
    pub branch: i8,
    /// Track the √ε branch of case 4 instead of a Neumann mode.
    #[serde(default)]
    pub zero_branch: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub window: Option<WindowConfig>,
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol_newton: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            window: None,
            grid: default_grid(),
            eps_list: Vec::new(),
            tol_newton: default_tol(),
            max_iters: default_iters(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

fn one_inclusion() -> Vec<InclusionConfig> {
    vec![InclusionConfig { center: [0.0; 3] }]
}
fn unit() -> f64 {
    1.0
}
fn unit_each() -> PerInclusion {
    PerInclusion::One(1.0)
}
fn plus() -> i8 {
    1
}
fn default_surface_n() -> usize {
    642
}
fn default_volume_n() -> usize {
    960
}
fn default_grid() -> [usize; 2] {
    [24, 16]
}
fn default_tol() -> f64 {
    1e-12
}
fn default_iters() -> usize {
    25
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl SceneConfig {
    /// Reads and validates a config; relative mesh paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(p) = &cfg.shape.path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.shape.path = Some(base.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape.kind {
            ShapeKind::Mesh => match &self.shape.path {
                None => bail!("shape.type \"mesh\" needs shape.path"),
                Some(p) if !p.is_file() => bail!("mesh file {} does not exist", p.display()),
                _ => {}
            },
            ShapeKind::Ellipsoid => match self.shape.axes {
                Some(a) if a.iter().all(|x| *x > 0.0) => {}
                _ => bail!("shape.type \"ellipsoid\" needs three positive shape.axes"),
            },
            ShapeKind::UnitSphere => {}
        }
        if self.inclusions.is_empty() {
            bail!("inclusions must not be empty");
        }
        if let CaseSpec::Named(n) = &self.material.case {
            if n != "fixed" {
                bail!("material.case must be 1, 2, 3, 4 or \"fixed\", got {n:?}");
            }
        }
        if !matches!(self.material.branch, 1 | -1) {
            bail!("material.branch must be +1 or -1");
        }
        for (name, p) in [("v2", &self.material.v2), ("rho", &self.material.rho)] {
            if let PerInclusion::Each(v) = p {
                if v.len() != self.inclusions.len() {
                    bail!("material.{name} has {} entries for {} inclusions", v.len(), self.inclusions.len());
                }
            }
        }
        if self.solver.grid.iter().any(|n| *n < 8) {
            bail!("solver.grid needs at least 8 points per direction");
        }
        if !(self.solver.tol_newton > 0.0) || self.solver.max_iters == 0 {
            bail!("solver.tol_newton and solver.max_iters must be positive");
        }
        self.material()?.validate(self.inclusions.len())?;
        Ok(())
    }

    /// Scaling case 1–4, or None for fixed contrasts.
    pub fn case(&self) -> Option<u8> {
        match self.material.case {
            CaseSpec::Scaling(k) => Some(k),
            CaseSpec::Named(_) => None,
        }
    }

    pub fn material(&self) -> Result<Material> {
        let m = &self.material;
        let mut mat = match self.case() {
            Some(k) => Material::scaling(k, m.v2.first(), m.v12, m.rho.first(), m.rho1),
            None => Material::fixed(m.v2.first(), m.rho.first()),
        };
        let n = self.inclusions.len();
        let each = |p: &PerInclusion| match p {
            PerInclusion::One(x) => vec![*x; n],
            PerInclusion::Each(v) => v.clone(),
        };
        if matches!(m.v2, PerInclusion::Each(_)) || matches!(m.rho, PerInclusion::Each(_)) {
            mat.per_inclusion = Some(each(&m.v2).into_iter().zip(each(&m.rho)).collect());
        }
        mat.rho_inf = m.rho_inf;
        mat.v_inf = m.v_inf;
        Ok(mat)
    }

    pub fn reference(&self) -> Result<(SurfaceQuadrature, VolumeQuadrature)> {
        let (ns, nv) = (self.shape.surface_n, self.shape.volume_n);
        Ok(match self.shape.kind {
            ShapeKind::UnitSphere => (make_unit_sphere_quadrature(ns)?, make_ball_volume_quadrature(nv)?),
            ShapeKind::Ellipsoid => {
                let ax = self.shape.axes.unwrap_or([1.0; 3]);
                (make_ellipsoid_surface_quadrature(ns, ax)?, make_ellipsoid_volume_quadrature(nv, ax)?)
            }
            ShapeKind::Mesh => {
                let p = self.shape.path.as_deref().context("mesh path")?;
                (load_mesh(p)?, mesh_volume_quadrature(&read_off(p)?, nv)?)
            }
        })
    }

    pub fn scene(&self) -> Result<Scene> {
        let (s, v) = self.reference()?;
        let centers = self.inclusions.iter().map(|i| i.center).collect();
        Ok(Scene::new(s, v, centers, self.scale, self.material()?)?)
    }

    pub fn window(&self) -> Result<Option<SearchWindow>> {
        let Some(w) = &self.solver.window else { return Ok(None) };
        let [nx, ny] = self.solver.grid;
        Ok(Some(SearchWindow::new((w.re[0], w.re[1]), (w.im[0], w.im[1]), nx, ny)?))
    }

    pub fn refine_options(&self) -> RefineOptions {
        RefineOptions { tol: self.solver.tol_newton, max_iters: self.solver.max_iters, window: None }
    }

    /// True for v = ρ = 1 everywhere, where no resonances exist.
    pub fn is_free(&self) -> bool {
        let m = &self.material;
        self.case().is_none() && m.v2.is_one() && m.rho.is_one() && !m.rho_inf && !m.v_inf
    }
}

/// Parses a comma-separated ε list such as "0.08,0.04,0.02".
pub fn parse_eps_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad ε value {x:?}")))
        .collect()
}
