//! Surface and volume quadratures of the reference inclusion, scenes of
//! translated/dilated copies, and OFF mesh ingestion.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub type P3 = [f64; 3];

pub fn sub3(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
pub fn add3(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
pub fn scale3(s: f64, a: P3) -> P3 {
    [s * a[0], s * a[1], s * a[2]]
}
pub fn dot3(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
pub fn cross3(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
pub fn norm3(a: P3) -> f64 {
    dot3(a, a).sqrt()
}
pub fn unit3(a: P3) -> P3 {
    scale3(1.0 / norm3(a), a)
}
pub fn dist3(a: P3, b: P3) -> f64 {
    norm3(sub3(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ShapeTag {
    UnitSphere,
    Ellipsoid([f64; 3]),
    TriMesh,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceQuadrature {
    pub nodes: Vec<P3>,
    pub normals: Vec<P3>,
    pub weights: Vec<f64>,
    pub shape_tag: ShapeTag,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeQuadrature {
    pub nodes: Vec<P3>,
    pub weights: Vec<f64>,
    pub shape_tag: ShapeTag,
}

impl SurfaceQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }
    /// Mean panel width √(|Γ|/n).
    pub fn mesh_width(&self) -> f64 {
        (self.area() / self.len() as f64).sqrt()
    }
    pub fn circumradius(&self) -> f64 {
        self.nodes.iter().map(|p| norm3(*p)).fold(0.0, f64::max)
    }
}

impl VolumeQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Icosahedron subdivided `level` times, vertices on the unit sphere.
pub fn icosphere(level: usize) -> (Vec<P3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<P3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| unit3(*p))
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, v: &mut Vec<P3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                v.push(unit3(scale3(0.5, add3(v[a], v[b]))));
                v.len() - 1
            })
        };
        let mut nf = Vec::with_capacity(f.len() * 4);
        for &[a, b, c] in &f {
            let ab = mid(a, b, &mut v);
            let bc = mid(b, c, &mut v);
            let ca = mid(c, a, &mut v);
            nf.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = nf;
    }
    (v, f)
}

/// Area of the spherical triangle with unit-vector corners.
pub fn spherical_triangle_area(a: P3, b: P3, c: P3) -> f64 {
    let num = dot3(a, cross3(b, c)).abs();
    let den = 1.0 + dot3(a, b) + dot3(b, c) + dot3(c, a);
    2.0 * num.atan2(den)
}

fn sphere_cells(level: usize) -> (Vec<P3>, Vec<f64>) {
    let (v, f) = icosphere(level);
    f.iter()
        .map(|&[a, b, c]| {
            let d = unit3(add3(add3(v[a], v[b]), v[c]));
            (d, spherical_triangle_area(v[a], v[b], v[c]))
        })
        .unzip()
}

fn faces_at(level: usize) -> usize {
    20 * 4usize.pow(level as u32)
}

/// One node per face of the smallest icosphere with at least `n` faces;
/// weights are exact spherical-triangle areas (Σw = 4π).
pub fn make_unit_sphere_quadrature(n: usize) -> Result<SurfaceQuadrature> {
    if n < 64 {
        return Err(Error::Config(format!("surface node count {n} < 64")));
    }
    let mut level = 0;
    while faces_at(level) < n {
        level += 1;
    }
    let (nodes, weights) = sphere_cells(level);
    Ok(SurfaceQuadrature { normals: nodes.clone(), nodes, weights, shape_tag: ShapeTag::UnitSphere })
}

/// Shell × icosphere cells of the unit ball, at most `n` cells.
pub fn make_ball_volume_quadrature(n: usize) -> Result<VolumeQuadrature> {
    if n < 256 {
        return Err(Error::Config(format!("volume cell count {n} < 256")));
    }
    // keep cells roughly isotropic: angular width ≈ shell thickness
    let mut best = (f64::INFINITY, 1, 1);
    for level in 1..5 {
        let nf = faces_at(level);
        let shells = n / nf;
        if shells == 0 {
            continue;
        }
        let angular = (4.0 * PI / nf as f64).sqrt();
        let aspect = ((1.0 / shells as f64) / (0.6 * angular)).ln().abs();
        if aspect < best.0 {
            best = (aspect, level, shells);
        }
    }
    let (_, level, shells) = best;
    let (dirs, areas) = sphere_cells(level);
    let mut nodes = Vec::with_capacity(dirs.len() * shells);
    let mut weights = Vec::with_capacity(dirs.len() * shells);
    for k in 0..shells {
        let r0 = k as f64 / shells as f64;
        let r1 = (k + 1) as f64 / shells as f64;
        // radial centroid of the shell sector
        let rc = 0.75 * (r1.powi(4) - r0.powi(4)) / (r1.powi(3) - r0.powi(3));
        for (d, a) in dirs.iter().zip(&areas) {
            nodes.push(scale3(rc, *d));
            weights.push(a * (r1.powi(3) - r0.powi(3)) / 3.0);
        }
    }
    Ok(VolumeQuadrature { nodes, weights, shape_tag: ShapeTag::UnitSphere })
}

fn check_axes(axes: [f64; 3]) -> Result<()> {
    if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::Config(format!("ellipsoid axes must be positive, got {axes:?}")));
    }
    Ok(())
}

/// Image of the sphere quadrature under diag(axes); Nanson's rule for the
/// area element and normals.
pub fn make_ellipsoid_surface_quadrature(n: usize, axes: [f64; 3]) -> Result<SurfaceQuadrature> {
    check_axes(axes)?;
    let s = make_unit_sphere_quadrature(n)?;
    let det = axes[0] * axes[1] * axes[2];
    let mut out = SurfaceQuadrature {
        nodes: Vec::new(),
        normals: Vec::new(),
        weights: Vec::new(),
        shape_tag: ShapeTag::Ellipsoid(axes),
    };
    for (p, w) in s.nodes.iter().zip(&s.weights) {
        let m = [p[0] / axes[0], p[1] / axes[1], p[2] / axes[2]];
        out.nodes.push([p[0] * axes[0], p[1] * axes[1], p[2] * axes[2]]);
        out.normals.push(unit3(m));
        out.weights.push(w * det * norm3(m));
    }
    Ok(out)
}

pub fn make_ellipsoid_volume_quadrature(n: usize, axes: [f64; 3]) -> Result<VolumeQuadrature> {
    check_axes(axes)?;
    let b = make_ball_volume_quadrature(n)?;
    let det = axes[0] * axes[1] * axes[2];
    Ok(VolumeQuadrature {
        nodes: b.nodes.iter().map(|p| [p[0] * axes[0], p[1] * axes[1], p[2] * axes[2]]).collect(),
        weights: b.weights.iter().map(|w| w * det).collect(),
        shape_tag: ShapeTag::Ellipsoid(axes),
    })
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<P3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| dot3(self.vertices[a], cross3(self.vertices[b], self.vertices[c])) / 6.0)
            .sum()
    }

    /// Every directed edge must be matched by exactly one reversed edge.
    pub fn check_closed_oriented(&self) -> Result<()> {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &self.faces {
            for e in [(a, b), (b, c), (c, a)] {
                *edges.entry(e).or_insert(0) += 1;
            }
        }
        for (&(a, b), &k) in &edges {
            if k != 1 {
                return Err(Error::Mesh(format!("edge {a}-{b} used {k} times in one direction")));
            }
            if edges.get(&(b, a)) != Some(&1) {
                return Err(Error::Mesh(format!("surface is not closed at edge {a}-{b}")));
            }
        }
        Ok(())
    }

    pub fn to_quadrature(&self) -> SurfaceQuadrature {
        let mut q = SurfaceQuadrature {
            nodes: Vec::new(),
            normals: Vec::new(),
            weights: Vec::new(),
            shape_tag: ShapeTag::TriMesh,
        };
        for &[a, b, c] in &self.faces {
            let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
            let nrm = cross3(sub3(pb, pa), sub3(pc, pa));
            let area = 0.5 * norm3(nrm);
            q.nodes.push(scale3(1.0 / 3.0, add3(add3(pa, pb), pc)));
            q.normals.push(unit3(nrm));
            q.weights.push(area);
        }
        q
    }

    /// Parity of crossings of the +x ray through `p`.
    pub fn contains(&self, p: P3) -> bool {
        let mut inside = false;
        for &[a, b, c] in &self.faces {
            if ray_hits_triangle(p, self.vertices[a], self.vertices[b], self.vertices[c]) {
                inside = !inside;
            }
        }
        inside
    }

    pub fn bounding_box(&self) -> (P3, P3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}

fn ray_hits_triangle(p: P3, a: P3, b: P3, c: P3) -> bool {
    // Möller–Trumbore with direction (1, 0, 0)
    let d = [1.0, 0.0, 0.0];
    let e1 = sub3(b, a);
    let e2 = sub3(c, a);
    let h = cross3(d, e2);
    let det = dot3(e1, h);
    if det.abs() < 1e-14 {
        return false;
    }
    let s = sub3(p, a);
    let u = dot3(s, h) / det;
    if !(0.0..1.0).contains(&u) {
        return false;
    }
    let q = cross3(s, e1);
    let v = dot3(d, q) / det;
    if v < 0.0 || u + v >= 1.0 {
        return false;
    }
    dot3(e2, q) / det > 0.0
}

pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Mesh("empty file".into()))?;
    let mut counts_line = if header == "OFF" {
        lines.next().ok_or_else(|| Error::Mesh("missing counts".into()))?.to_string()
    } else if let Some(rest) = header.strip_prefix("OFF") {
        rest.trim().to_string()
    } else {
        return Err(Error::Mesh(format!("expected OFF header, found {header:?}")));
    };
    if counts_line.is_empty() {
        counts_line = lines.next().ok_or_else(|| Error::Mesh("missing counts".into()))?.to_string();
    }
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Mesh(format!("bad count {t:?}"))))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(Error::Mesh("counts line needs vertex and face counts".into()));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let l = lines.next().ok_or_else(|| Error::Mesh(format!("missing vertex {k}")))?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse().map_err(|_| Error::Mesh(format!("bad coordinate {t:?}"))))
            .collect::<Result<_>>()?;
        if xs.len() != 3 {
            return Err(Error::Mesh(format!("vertex {k} needs three coordinates")));
        }
        vertices.push([xs[0], xs[1], xs[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for k in 0..nf {
        let l = lines.next().ok_or_else(|| Error::Mesh(format!("missing face {k}")))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Mesh(format!("bad index {t:?}"))))
            .collect::<Result<_>>()?;
        if ids.len() != 4 || ids[0] != 3 {
            return Err(Error::Mesh(format!("face {k} is not a triangle `3 i j k`")));
        }
        if ids[1..].iter().any(|&i| i >= nv) {
            return Err(Error::Mesh(format!("face {k} references a missing vertex")));
        }
        faces.push([ids[1], ids[2], ids[3]]);
    }
    Ok(TriMesh { vertices, faces })
}

pub fn read_off(path: &Path) -> Result<TriMesh> {
    parse_off(&std::fs::read_to_string(path)?)
}

/// Centroid-rule quadrature of a closed, outward-oriented triangle mesh.
pub fn load_mesh(path: &Path) -> Result<SurfaceQuadrature> {
    mesh_quadrature(&read_off(path)?)
}

pub fn mesh_quadrature(mesh: &TriMesh) -> Result<SurfaceQuadrature> {
    mesh.check_closed_oriented()?;
    let vol = mesh.signed_volume();
    if vol <= 0.0 {
        return Err(Error::Mesh(format!("non-positive signed volume {vol}: faces oriented inward")));
    }
    Ok(mesh.to_quadrature())
}

/// Voxel cells inside a mesh, weights rescaled so Σw equals the enclosed volume.
pub fn mesh_volume_quadrature(mesh: &TriMesh, n: usize) -> Result<VolumeQuadrature> {
    let vol = mesh.signed_volume();
    if vol <= 0.0 {
        return Err(Error::Mesh("non-positive enclosed volume".into()));
    }
    let (lo, hi) = mesh.bounding_box();
    let mut h = (vol / n as f64).cbrt();
    for _ in 0..8 {
        let mut nodes = Vec::new();
        let cnt = |k: usize| ((hi[k] - lo[k]) / h).ceil() as usize;
        let (nx, ny, nz) = (cnt(0), cnt(1), cnt(2));
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    // slight irrational offset keeps ray casts off mesh edges
                    let p = [
                        lo[0] + (i as f64 + 0.5) * h + 1.3e-9,
                        lo[1] + (j as f64 + 0.5) * h + 2.9e-9,
                        lo[2] + (k as f64 + 0.5) * h + 4.1e-9,
                    ];
                    if mesh.contains(p) {
                        nodes.push(p);
                    }
                }
            }
        }
        if nodes.len() >= n / 2 && nodes.len() <= 2 * n || h < 1e-6 {
            if nodes.is_empty() {
                break;
            }
            let w = vol / nodes.len() as f64;
            let weights = vec![w; nodes.len()];
            return Ok(VolumeQuadrature { nodes, weights, shape_tag: ShapeTag::TriMesh });
        }
        h *= (nodes.len().max(1) as f64 / n as f64).cbrt();
    }
    Err(Error::Mesh("could not place volume cells inside the mesh".into()))
}

/// Material regime of the inclusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MaterialCase {
    /// ε-dependent regimes 1–4 of the small-inclusion analysis.
    Scaling(u8),
    /// Fixed per-inclusion contrasts.
    Fixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Material {
    pub case: MaterialCase,
    pub v2: f64,
    pub v12: f64,
    pub rho: f64,
    pub rho1: f64,
    /// Per-inclusion (v², ρ) for fixed scenes; falls back to (v2, rho).
    pub per_inclusion: Option<Vec<(f64, f64)>>,
    /// Infinite-contrast limits: w = 1 for v = ∞, z = ½ for ρ = ∞.
    pub v_inf: bool,
    pub rho_inf: bool,
}

impl Material {
    pub fn fixed(v2: f64, rho: f64) -> Self {
        Self {
            case: MaterialCase::Fixed,
            v2,
            v12: 0.0,
            rho,
            rho1: 0.0,
            per_inclusion: None,
            v_inf: false,
            rho_inf: false,
        }
    }

    pub fn scaling(case: u8, v2: f64, v12: f64, rho: f64, rho1: f64) -> Self {
        Self {
            case: MaterialCase::Scaling(case),
            v2,
            v12,
            rho,
            rho1,
            per_inclusion: None,
            v_inf: false,
            rho_inf: false,
        }
    }

    /// (v_ℓ², ρ_ℓ) of inclusion ℓ.
    pub fn of(&self, l: usize) -> (f64, f64) {
        match &self.per_inclusion {
            Some(p) => p[l],
            None => (self.v2, self.rho),
        }
    }

    pub fn validate(&self, n_inclusions: usize) -> Result<()> {
        if let MaterialCase::Scaling(k) = self.case {
            if !(1..=4).contains(&k) {
                return Err(Error::Config(format!("material case {k} not in 1..=4")));
            }
        }
        if let Some(p) = &self.per_inclusion {
            if p.len() != n_inclusions {
                return Err(Error::Config(format!(
                    "{} per-inclusion materials for {n_inclusions} inclusions",
                    p.len()
                )));
            }
        }
        for l in 0..n_inclusions {
            let (v2, rho) = self.of(l);
            if !(v2 > 0.0 && rho > 0.0) {
                return Err(Error::Config(format!("material of inclusion {l} must be positive")));
            }
        }
        if self.v12 < 0.0 || self.rho1 < 0.0 {
            return Err(Error::Config("material series coefficients must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Reference inclusion copied to `centers` at scale `eps`.
#[derive(Debug, Clone)]
pub struct Scene {
    pub surface: SurfaceQuadrature,
    pub volume: VolumeQuadrature,
    pub centers: Vec<P3>,
    pub eps: f64,
    pub material: Material,
}

impl Scene {
    pub fn new(
        surface: SurfaceQuadrature,
        volume: VolumeQuadrature,
        centers: Vec<P3>,
        eps: f64,
        material: Material,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Config("scene needs at least one inclusion".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::Config(format!("scale must be positive, got {eps}")));
        }
        material.validate(centers.len())?;
        let r = surface.circumradius();
        for i in 0..centers.len() {
            for j in 0..i {
                if dist3(centers[i], centers[j]) <= 2.0 * eps * r {
                    return Err(Error::Domain(format!("inclusions {j} and {i} overlap")));
                }
            }
        }
        Ok(Self { surface, volume, centers, eps, material })
    }

    /// Single inclusion at the origin, unit scale.
    pub fn single(surface: SurfaceQuadrature, volume: VolumeQuadrature, material: Material) -> Result<Self> {
        Self::new(surface, volume, vec![[0.0; 3]], 1.0, material)
    }

    pub fn n_inclusions(&self) -> usize {
        self.centers.len()
    }

    pub fn place(&self, l: usize) -> (SurfaceQuadrature, VolumeQuadrature) {
        place(self, l)
    }
}

/// Physical nodes of inclusion ℓ (0-based): y_ℓ + ε·x, weights ε² / ε³.
pub fn place(scene: &Scene, l: usize) -> (SurfaceQuadrature, VolumeQuadrature) {
    let (y, e) = (scene.centers[l], scene.eps);
    let s = &scene.surface;
    let v = &scene.volume;
    (
        SurfaceQuadrature {
            nodes: s.nodes.iter().map(|p| add3(y, scale3(e, *p))).collect(),
            normals: s.normals.clone(),
            weights: s.weights.iter().map(|w| w * e * e).collect(),
            shape_tag: s.shape_tag,
        },
        VolumeQuadrature {
            nodes: v.nodes.iter().map(|p| add3(y, scale3(e, *p))).collect(),
            weights: v.weights.iter().map(|w| w * e * e * e).collect(),
            shape_tag: v.shape_tag,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const ICOSAHEDRON_OFF: &str = "OFF\n12 20 30\n";

    fn icosahedron_off() -> String {
        let (v, f) = icosphere(0);
        let mut s = String::from(ICOSAHEDRON_OFF);
        for p in &v {
            s += &format!("{} {} {}\n", p[0], p[1], p[2]);
        }
        for t in &f {
            s += &format!("3 {} {} {}\n", t[0], t[1], t[2]);
        }
        s
    }

    #[test]
    fn sphere_area_and_normals() {
        let q = make_unit_sphere_quadrature(642).unwrap();
        assert_eq!(q.len(), 1280);
        assert!((q.area() - 4.0 * PI).abs() < 0.005 * 4.0 * PI);
        for n in &q.normals {
            assert!((norm3(*n) - 1.0).abs() < 1e-12);
        }
        assert!(q.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn sphere_rejects_small_counts() {
        assert!(make_unit_sphere_quadrature(63).is_err());
    }

    #[test]
    fn ball_volume_and_centroid() {
        let q = make_ball_volume_quadrature(2000).unwrap();
        assert!(q.len() <= 2000 && q.len() >= 1000);
        assert!((q.volume() - 4.0 * PI / 3.0).abs() < 0.005 * 4.0 * PI / 3.0);
        let mut c = [0.0; 3];
        for (p, w) in q.nodes.iter().zip(&q.weights) {
            c = add3(c, scale3(*w, *p));
        }
        assert!(norm3(c) < 1e-3);
    }

    #[test]
    fn icosahedron_mesh_area() {
        let mesh = parse_off(&icosahedron_off()).unwrap();
        let q = mesh_quadrature(&mesh).unwrap();
        assert_eq!(q.len(), 20);
        // circumradius-1 icosahedron: edge a = 4/√(10+2√5)
        let a = 4.0 / (10.0 + 2.0 * 5f64.sqrt()).sqrt();
        assert!((q.area() - 5.0 * 3f64.sqrt() * a * a).abs() < 1e-12);
        let inner = q.nodes.iter().zip(&q.normals).all(|(p, n)| dot3(*p, *n) > 0.0);
        assert!(inner);
    }

    #[test]
    fn open_and_inverted_meshes_rejected() {
        let mut mesh = parse_off(&icosahedron_off()).unwrap();
        let mut open = mesh.clone();
        open.faces.pop();
        assert!(mesh_quadrature(&open).is_err());
        for f in &mut mesh.faces {
            f.swap(1, 2);
        }
        assert!(mesh_quadrature(&mesh).is_err());
    }

    #[test]
    fn refined_mesh_area_converges() {
        let errs: Vec<f64> = (1..4)
            .map(|l| {
                let (v, f) = icosphere(l);
                let q = mesh_quadrature(&TriMesh { vertices: v, faces: f }).unwrap();
                (q.area() - 4.0 * PI).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn mesh_volume_cells_fill_the_solid() {
        let (v, f) = icosphere(2);
        let mesh = TriMesh { vertices: v, faces: f };
        let q = mesh_volume_quadrature(&mesh, 800).unwrap();
        assert!((q.volume() - mesh.signed_volume()).abs() < 1e-12);
        assert!(q.nodes.iter().all(|p| norm3(*p) < 1.0));
    }

    #[test]
    fn placement_scaling_law() {
        let s = make_unit_sphere_quadrature(80).unwrap();
        let v = make_ball_volume_quadrature(256).unwrap();
        let m = Material::fixed(2.0, 2.0);
        let id = Scene::single(s.clone(), v.clone(), m.clone()).unwrap();
        let (ps, pv) = place(&id, 0);
        assert_eq!(ps.nodes, s.nodes);
        assert_eq!(pv.weights, v.weights);
        let half = Scene::new(s.clone(), v.clone(), vec![[0.0; 3]], 0.5, m.clone()).unwrap();
        let (ps, pv) = place(&half, 0);
        assert!((ps.area() - 0.25 * s.area()).abs() < 1e-12);
        assert!((pv.volume() - 0.125 * v.volume()).abs() < 1e-12);
        assert!(Scene::new(s, v, vec![[0.0; 3], [1.5, 0.0, 0.0]], 1.0, m).is_err());
    }

    #[test]
    fn ellipsoid_volume_is_exact_multiple() {
        let ax = [1.0, 0.9, 0.8];
        let v = make_ellipsoid_volume_quadrature(1000, ax).unwrap();
        let b = make_ball_volume_quadrature(1000).unwrap();
        assert!((v.volume() - 0.72 * b.volume()).abs() < 1e-12);
        let s = make_ellipsoid_surface_quadrature(642, ax).unwrap();
        for (p, n) in s.nodes.iter().zip(&s.normals) {
            // normal is parallel to the gradient of the quadric
            let g = unit3([p[0] / (ax[0] * ax[0]), p[1] / (ax[1] * ax[1]), p[2] / (ax[2] * ax[2])]);
            assert!(norm3(sub3(g, *n)) < 1e-12);
        }
    }
}
