//! Probing the resolvent difference (−A − κ²)⁻¹ − R_κ on Gaussian sources.
//!
//! The free field R_κf of a radially symmetric source is reduced to two 1D
//! integrals (the l = 0 term of the addition theorem), evaluated with
//! panelled Gauss–Legendre rules, so R_κf and its gradient are accurate to
//! ~1e-13 at any point.  The difference itself is
//! [R_κ1_Ω*, SL_κ] Q_κ⁻¹ [data(f)], with the Q system and the output
//! potentials discretised by the Nyström rules of `operators`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{add3, dist3, make_ellipsoid_surface_quadrature, norm3, scale3, sub3, Scene, ShapeTag, P3};
use crate::kernels::green_unchecked;
use crate::linalg::{c, matvec, Lu, CMat};
use crate::operators::{BlockKind, Discretization};
use crate::qfunction::{physical_pencil, rho_tilde, scene_materials, Form, Pencil};

/// f(x) = amplitude · exp(−|x − center|²/(2 width²)), truncated at 8 widths.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianSource {
    pub center: P3,
    pub width: f64,
    pub amplitude: f64,
}

impl GaussianSource {
    pub fn new(center: P3, width: f64, amplitude: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() || !amplitude.is_finite() {
            return Err(Error::Config(format!("invalid Gaussian source width {width} amplitude {amplitude}")));
        }
        Ok(Self { center, width, amplitude })
    }

    pub fn cutoff(&self) -> f64 {
        8.0 * self.width
    }

    pub fn radial(&self, r: f64) -> f64 {
        if r > self.cutoff() {
            0.0
        } else {
            self.amplitude * (-0.5 * r * r / (self.width * self.width)).exp()
        }
    }

    pub fn value(&self, x: P3) -> f64 {
        self.radial(dist3(x, self.center))
    }
}

/// Free resolvent of a Gaussian source: with s = |x − c|,
/// R_κf(x) = [e^{iκs}A(s) + sin(κs)B(s)]/(κs),
/// A(s) = ∫₀^s f(ρ)ρ sin(κρ)dρ, B(s) = ∫_s^∞ f(ρ)ρ e^{iκρ}dρ.
pub struct FreeField {
    pub kappa: C64,
    pub source: GaussianSource,
    rule: Vec<(f64, f64)>,
}

const PANEL_NODES: usize = 20;
const PANELS: usize = 24;

impl FreeField {
    pub fn new(kappa: C64, source: GaussianSource) -> Result<Self> {
        if kappa.norm() == 0.0 {
            return Err(Error::Domain("free resolvent probe needs κ ≠ 0".into()));
        }
        let gl = GaussLegendre::new(NonZeroUsize::new(PANEL_NODES).unwrap());
        let rule = gl.as_node_weight_pairs().to_vec();
        Ok(Self { kappa, source, rule })
    }

    fn integrate<F: Fn(f64) -> C64>(&self, a: f64, b: f64, f: F) -> C64 {
        if b <= a {
            return c(0.0);
        }
        let h = (b - a) / PANELS as f64;
        let mut acc = c(0.0);
        for p in 0..PANELS {
            let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
            let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for &(x, w) in &self.rule {
                acc += f(m + r * x) * (w * r);
            }
        }
        acc
    }

    fn ab(&self, s: f64) -> (C64, C64) {
        let k = self.kappa;
        let l = self.source.cutoff();
        let m = s.min(l);
        let f = |r: f64| self.source.radial(r) * r;
        let a = self.integrate(0.0, m, |r| f(r) * (k * r).sin());
        let b = self.integrate(m, l, |r| f(r) * (I * k * r).exp());
        (a, b)
    }

    pub fn value(&self, x: P3) -> C64 {
        let s = dist3(x, self.source.center);
        let k = self.kappa;
        let (a, b) = self.ab(s);
        if s < 1e-12 * self.source.width {
            return b;
        }
        ((I * k * s).exp() * a + (k * s).sin() * b) / (k * s)
    }

    pub fn gradient(&self, x: P3) -> [C64; 3] {
        let d = sub3(x, self.source.center);
        let s = norm3(d);
        if s < 1e-12 * self.source.width {
            return [c(0.0); 3];
        }
        let k = self.kappa;
        let (a, b) = self.ab(s);
        let ks = k * s;
        let du = ((I * ks - 1.0) * (I * ks).exp() * a + (ks * ks.cos() - ks.sin()) * b) / (k * s * s);
        [du * (d[0] / s), du * (d[1] / s), du * (d[2] / s)]
    }

    pub fn normal_derivative(&self, x: P3, n: P3) -> C64 {
        let g = self.gradient(x);
        g[0] * n[0] + g[1] * n[1] + g[2] * n[2]
    }
}

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Serialize)]
pub struct ProbeField {
    pub kappa: C64,
    pub source: GaussianSource,
    pub points: Vec<P3>,
    pub values: Vec<C64>,
}

impl ProbeField {
    /// CSV records x, y, z, Re u, Im u.
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        self.points
            .iter()
            .zip(&self.values)
            .map(|(p, u)| {
                vec![
                    format!("{}", p[0]),
                    format!("{}", p[1]),
                    format!("{}", p[2]),
                    format!("{:.15e}", u.re),
                    format!("{:.15e}", u.im),
                ]
            })
            .collect()
    }
}

/// Inclusions whose volume density can be nonzero: the form carries a volume
/// block and v² ≠ 1 there.  Nodes of the other volume grids never enter
/// the output sum, so they do not constrain evaluation points.
pub fn active_volumes(scene: &Scene, form: Form) -> Result<Vec<bool>> {
    let (vol, _) = has_parts(form)?;
    Ok(scene_materials(scene)?.iter().map(|(v2, _)| vol && (v2 - 1.0).norm() > 0.0).collect())
}

/// Largest of the surface spacing and the active volume cell sizes.
pub fn mesh_width(disc: &Discretization, active: &[bool]) -> f64 {
    disc.incl
        .iter()
        .zip(active)
        .map(|(p, &a)| {
            let h = p.surface.mesh_width();
            if a {
                h.max((p.volume.volume() / p.volume.len() as f64).cbrt())
            } else {
                h
            }
        })
        .fold(0.0, f64::max)
}

/// Distance from `x` to the nearest quadrature node carrying density.
pub fn node_distance(disc: &Discretization, active: &[bool], x: P3) -> f64 {
    disc.incl
        .iter()
        .zip(active)
        .flat_map(|(p, &a)| p.surface.nodes.iter().chain(p.volume.nodes.iter().take(if a { usize::MAX } else { 0 })))
        .map(|y| dist3(x, *y))
        .fold(f64::INFINITY, f64::min)
}

fn check_points(disc: &Discretization, active: &[bool], points: &[P3]) -> Result<()> {
    let h = mesh_width(disc, active);
    for p in points {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Config(format!("non-finite evaluation point {p:?}")));
        }
        let d = node_distance(disc, active, *p);
        if d < 0.5 * h {
            return Err(Error::Config(format!(
                "evaluation point {p:?} is {d:.3e} from a quadrature node (< half mesh width {:.3e})",
                0.5 * h
            )));
        }
    }
    Ok(())
}

/// The Q system of a scene at one κ together with the free-field data.
struct Solve {
    kappa: C64,
    disc: Discretization,
    form: Form,
    vol: bool,
    bdy: bool,
    /// (v²−1, ρ̃) of each inclusion.
    coef: Vec<(C64, C64)>,
    lu: Lu,
    out: OutputMap,
}

fn has_parts(form: Form) -> Result<(bool, bool)> {
    match form {
        Form::Full | Form::Not1 | Form::GeneralWZ => Ok((true, true)),
        Form::VolumeOnly => Ok((true, false)),
        Form::SurfaceOnly => Ok((false, true)),
        Form::RescaledABC(..) => Err(Error::Config("resolvent probe works with physical forms only".into())),
    }
}

impl Solve {
    fn new(kappa: C64, scene: &Scene, form: Form) -> Result<Self> {
        if !(kappa.im > 0.0) {
            return Err(Error::Domain(format!("resolvent formula needs Im κ > 0, got κ = {kappa}")));
        }
        let (vol, bdy) = has_parts(form)?;
        let p = physical_pencil(scene, form)?;
        let q = p.eval(kappa)?;
        let lu = Lu::new(&q).map_err(|_| Error::Singular(format!("Q_κ singular at κ = {kappa} (discretisation failure)")))?;
        let coef = scene_materials(scene)?.into_iter().map(|(v2, rho)| (v2 - 1.0, rho_tilde(rho))).collect();
        let out = OutputMap::new(scene, &p.disc, vol, bdy)?;
        Ok(Self { kappa, disc: p.disc, form, vol, bdy, coef, lu, out })
    }

    /// Row scaling of the data: (v²−1, ρ̃) for Full-type forms, 1 for Not1/GeneralWZ.
    fn scale(&self, l: usize) -> (C64, C64) {
        match self.form {
            Form::Not1 | Form::GeneralWZ => (c(1.0), c(1.0)),
            _ => self.coef[l],
        }
    }

    /// Data vector [(v²−1)Δ^max 1_Ω R f ; ρ̃ γ₁R f] with ΔRf = −f − κ²Rf on Ω.
    fn data(&self, free: &FreeField) -> Vec<C64> {
        let d = &self.disc;
        let k2 = self.kappa * self.kappa;
        let mut out = Vec::new();
        if self.vol {
            let nodes = d.vol_nodes();
            let v: Vec<C64> = nodes
                .par_iter()
                .enumerate()
                .map(|(i, y)| {
                    let (a, _) = self.scale(d.owner(i, true));
                    a * (-free.source.value(*y) - k2 * free.value(*y))
                })
                .collect();
            out.extend(v);
        }
        if self.bdy {
            let nodes = d.bdy_nodes();
            let normals = d.bdy_normals();
            let b: Vec<C64> = (0..nodes.len())
                .into_par_iter()
                .map(|i| {
                    let (_, r) = self.scale(d.owner(i, false));
                    r * free.normal_derivative(nodes[i], normals[i])
                })
                .collect();
            out.extend(b);
        }
        out
    }

    /// Output potentials [R_κ1_Ω*, SL_κ](a, b) at points.
    fn output(&self, kappa: C64, x: &[C64], points: &[P3]) -> Vec<C64> {
        self.out.apply(kappa, x, points)
    }
}

/// ∫_Γℓ G₀(x − y) dS(y) for one placed inclusion: closed form on spheres,
/// an oversampled rule of the same shape on ellipsoids, and the Nyström
/// rule itself on meshes (which turns the subtraction below into a no-op).
enum SurfaceMass {
    Sphere { center: P3, radius: f64 },
    Rule(Vec<(P3, f64)>),
}

impl SurfaceMass {
    fn new(scene: &Scene, disc: &Discretization, l: usize) -> Result<Self> {
        let (y, e) = (scene.centers[l], scene.eps);
        Ok(match scene.surface.shape_tag {
            ShapeTag::UnitSphere => SurfaceMass::Sphere { center: y, radius: e },
            ShapeTag::Ellipsoid(axes) => {
                let fine = make_ellipsoid_surface_quadrature(16 * scene.surface.len(), axes)?;
                SurfaceMass::Rule(
                    fine.nodes.iter().zip(&fine.weights).map(|(p, w)| (add3(y, scale3(e, *p)), w * e * e)).collect(),
                )
            }
            ShapeTag::TriMesh => {
                let s = &disc.incl[l].surface;
                SurfaceMass::Rule(s.nodes.iter().copied().zip(s.weights.iter().copied()).collect())
            }
        })
    }

    fn at(&self, x: P3) -> f64 {
        match self {
            SurfaceMass::Sphere { center, radius } => {
                let r = dist3(x, *center);
                if r <= *radius {
                    *radius
                } else {
                    radius * radius / r
                }
            }
            SurfaceMass::Rule(q) => q.iter().map(|(y, w)| w / (4.0 * std::f64::consts::PI * dist3(x, *y))).sum(),
        }
    }
}

/// Output map (a, b) ↦ R_κ1_Ω*a + SL_κb at evaluation points.  The volume
/// part is a plain Nyström sum; the single layer subtracts the density at the
/// nearest node, b(y) − b(y*), and adds back b(y*)∫G₀, which keeps the near
/// field accurate down to about one mesh width from Γ.
struct OutputMap {
    vol: bool,
    bdy: bool,
    nv: usize,
    vol_src: Vec<(P3, f64)>,
    surf: Vec<(usize, Vec<(P3, f64)>, SurfaceMass)>,
}

impl OutputMap {
    fn new(scene: &Scene, disc: &Discretization, vol: bool, bdy: bool) -> Result<Self> {
        let vol_src = if vol { disc.vol_nodes().into_iter().zip(disc.vol_weights()).collect() } else { Vec::new() };
        let mut surf = Vec::new();
        if bdy {
            for (l, p) in disc.incl.iter().enumerate() {
                let q = p.surface.nodes.iter().copied().zip(p.surface.weights.iter().copied()).collect();
                surf.push((disc.bdy_off[l], q, SurfaceMass::new(scene, disc, l)?));
            }
        }
        Ok(Self { vol, bdy, nv: if vol { disc.nv } else { 0 }, vol_src, surf })
    }

    fn apply(&self, kappa: C64, x: &[C64], points: &[P3]) -> Vec<C64> {
        let k0 = c(0.0);
        points
            .par_iter()
            .map(|p| {
                let mut acc = c(0.0);
                if self.vol {
                    for ((y, w), v) in self.vol_src.iter().zip(x) {
                        acc += green_unchecked(kappa, dist3(*p, *y)) * (*w * v);
                    }
                }
                if self.bdy {
                    for (off, q, mass) in &self.surf {
                        let b = &x[self.nv + off..self.nv + off + q.len()];
                        let near = (0..q.len())
                            .min_by(|&i, &j| dist3(*p, q[i].0).total_cmp(&dist3(*p, q[j].0)))
                            .unwrap_or(0);
                        let bs = b[near];
                        for ((y, w), bj) in q.iter().zip(b) {
                            let r = dist3(*p, *y);
                            acc += (green_unchecked(kappa, r) * bj - green_unchecked(k0, r) * bs) * *w;
                        }
                        acc += bs * mass.at(*p);
                    }
                }
                acc
            })
            .collect()
    }
}

/// (−A − κ²)⁻¹f − R_κf at `points`, for Im κ > 0.
pub fn apply_resolvent_difference(
    kappa: C64,
    source: &GaussianSource,
    points: &[P3],
    scene: &Scene,
    form: Form,
) -> Result<ProbeField> {
    let s = Solve::new(kappa, scene, form)?;
    check_points(&s.disc, &active_volumes(scene, form)?, points)?;
    let free = FreeField::new(kappa, *source)?;
    let x = s.lu.solve(&s.data(&free));
    let values = s.output(kappa, &x, points);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite probe field".into()));
    }
    Ok(ProbeField { kappa, source: *source, points: points.to_vec(), values })
}

/// Total field R_κf + difference at `points`.
pub fn total_field(kappa: C64, source: &GaussianSource, points: &[P3], scene: &Scene, form: Form) -> Result<Vec<C64>> {
    let d = apply_resolvent_difference(kappa, source, points, scene, form)?;
    let free = FreeField::new(kappa, *source)?;
    Ok(points.iter().zip(&d.values).map(|(p, v)| free.value(*p) + v).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct TransmissionReport {
    /// max |u₊ − u₋| / max |u| over the probed boundary nodes.
    pub dirichlet_jump: f64,
    /// max |ρ γ₁^ex u − γ₁^in u| / max |γ₁u|.
    pub neumann_mismatch: f64,
    pub probed_nodes: usize,
    pub offset: f64,
}

/// Offsets (in mesh widths) of the one-sided probe stencils.
pub const TRANSMISSION_OFFSETS: [f64; 6] = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5];

/// Weights (value, derivative) at t = 0 of the Lagrange interpolant through
/// samples at `t`.
fn lagrange_at_zero(t: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = t.len();
    let mut val = vec![0.0; n];
    let mut der = vec![0.0; n];
    for j in 0..n {
        let den: f64 = (0..n).filter(|&m| m != j).map(|m| t[j] - t[m]).product();
        let others: Vec<f64> = (0..n).filter(|&m| m != j).map(|m| t[m]).collect();
        val[j] = others.iter().map(|x| -x).product::<f64>() / den;
        // d/dt Π(t − t_m) at 0 = Σ_k Π_{m≠k}(−t_m)
        der[j] = (0..others.len())
            .map(|k| others.iter().enumerate().filter(|(m, _)| *m != k).map(|(_, x)| -x).product::<f64>())
            .sum::<f64>()
            / den;
    }
    (val, der)
}

/// One-sided traces of the total field by polynomial extrapolation from
/// samples at ±t·h·n (t in [`TRANSMISSION_OFFSETS`], h = mesh width) around
/// each boundary node whose probe points keep half a mesh width from every
/// density-carrying node.
pub fn check_transmission(kappa: C64, source: &GaussianSource, scene: &Scene, form: Form) -> Result<TransmissionReport> {
    check_transmission_with(kappa, source, scene, form, &TRANSMISSION_OFFSETS)
}

pub fn check_transmission_with(
    kappa: C64,
    source: &GaussianSource,
    scene: &Scene,
    form: Form,
    offsets: &[f64],
) -> Result<TransmissionReport> {
    if offsets.len() < 2 || offsets.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config(format!("need at least two positive stencil offsets, got {offsets:?}")));
    }
    let disc = Discretization::new(scene);
    let active = active_volumes(scene, form)?;
    let h = mesh_width(&disc, &active);
    let nodes = disc.bdy_nodes();
    let normals = disc.bdy_normals();
    let mats = scene_materials(scene)?;
    let m = offsets.len();
    let mut chosen = Vec::new();
    let mut points = Vec::new();
    for i in 0..nodes.len() {
        // exterior samples first, then interior
        let pts: Vec<P3> = offsets
            .iter()
            .map(|t| *t)
            .chain(offsets.iter().map(|t| -t))
            .map(|t| add3(nodes[i], scale3(t * h, normals[i])))
            .collect();
        if pts.iter().all(|p| node_distance(&disc, &active, *p) >= 0.5 * h) {
            chosen.push(i);
            points.extend(pts);
        }
    }
    if chosen.is_empty() {
        return Err(Error::Mesh("no boundary node admits probe points half a mesh width from all nodes".into()));
    }
    let u = total_field(kappa, source, &points, scene, form)?;
    let (wv, wd) = lagrange_at_zero(offsets);
    let (mut du, mut dn, mut su, mut sn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, &i) in chosen.iter().enumerate() {
        let (ex, inn) = u[2 * m * k..2 * m * (k + 1)].split_at(m);
        let dot = |w: &[f64], x: &[C64]| -> C64 { w.iter().zip(x).map(|(a, b)| b * *a).sum() };
        let u_ex = dot(&wv, ex);
        let u_in = dot(&wv, inn);
        let d_ex = dot(&wd, ex) / h;
        // interior samples sit at −t along n
        let d_in = -dot(&wd, inn) / h;
        let rho = mats[disc.owner(i, false)].1;
        du = du.max((u_ex - u_in).norm());
        dn = dn.max((rho * d_ex - d_in).norm());
        su = su.max(u_ex.norm()).max(u_in.norm());
        sn = sn.max(d_ex.norm()).max(d_in.norm());
    }
    Ok(TransmissionReport {
        dirichlet_jump: du / su.max(f64::MIN_POSITIVE),
        neumann_mismatch: dn / sn.max(f64::MIN_POSITIVE),
        probed_nodes: chosen.len(),
        offset: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_weights_reproduce_cubics() {
        let t = [2.0, 3.0, 4.0, 5.0];
        let (v, d) = lagrange_at_zero(&t);
        let p = |x: f64| 1.5 - 0.7 * x + 0.2 * x * x - 0.03 * x * x * x;
        let val: f64 = v.iter().zip(&t).map(|(w, x)| w * p(*x)).sum();
        let der: f64 = d.iter().zip(&t).map(|(w, x)| w * p(*x)).sum();
        assert!((val - 1.5).abs() < 1e-12);
        assert!((der + 0.7).abs() < 1e-12);
    }
}

/// Relative residual of the pseudo-resolvent identity
/// R̃₁ − R̃₂ = (κ₁² − κ₂²) R̃₁R̃₂ applied to f and evaluated at `points`
/// (Full form).  Compositions with the free resolvent are realised through
/// R₁R₂ = (R₁ − R₂)/(κ₁² − κ₂²) (kernel differences), so the identity is an
/// algebraic consequence of the Krein structure of the discrete formula and
/// holds up to rounding exactly when Q, the data map and the output map are
/// mutually consistent.
pub fn pseudo_resolvent_residual(
    k1: C64,
    k2: C64,
    source: &GaussianSource,
    points: &[P3],
    scene: &Scene,
) -> Result<f64> {
    let dk = k1 * k1 - k2 * k2;
    if dk.norm() == 0.0 {
        return Err(Error::Config("pseudo-resolvent check needs κ₁² ≠ κ₂²".into()));
    }
    let s1 = Solve::new(k1, scene, Form::Full)?;
    let s2 = Solve::new(k2, scene, Form::Full)?;
    check_points(&s1.disc, &active_volumes(scene, Form::Full)?, points)?;
    let f1 = FreeField::new(k1, *source)?;
    let f2 = FreeField::new(k2, *source)?;
    let c1 = s1.data(&f1);
    let c2 = s2.data(&f2);
    let x1 = s1.lu.solve(&c1);
    let x2 = s2.lu.solve(&c2);
    let r1: Vec<C64> = points.iter().map(|p| f1.value(*p)).collect();
    let r2: Vec<C64> = points.iter().map(|p| f2.value(*p)).collect();
    let d1 = s1.output(k1, &x1, points);
    let d2 = s2.output(k2, &x2, points);
    let lhs: Vec<C64> = (0..points.len()).map(|i| r1[i] - r2[i] + d1[i] - d2[i]).collect();

    // Δκ²·R̃₁R̃₂f = (R₁ − R₂)f + (B₁ − B₂)x₂ + B₁Q₁⁻¹[(C₁ − C₂)f + Δκ²·C₁B₂x₂]
    let b1x2 = s1.output(k1, &x2, points);
    let b2x2 = s2.output(k2, &x2, points);
    let comp = composed_data(&s1.disc, &s1.coef, k1, k2, &x2);
    let rhs_data: Vec<C64> = (0..c1.len()).map(|i| c1[i] - c2[i] + comp[i]).collect();
    let y = s1.lu.solve(&rhs_data);
    let by = s1.output(k1, &y, points);
    let rhs: Vec<C64> = (0..points.len()).map(|i| r1[i] - r2[i] + b1x2[i] - b2x2[i] + by[i]).collect();
    let num: f64 = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = lhs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Ok(num / den.max(f64::MIN_POSITIVE))
}

/// Δκ²·C₁(B₂(a, b)): data of R₁ applied to the output potential
/// h = R₂1_Ω*a + SL₂b, using Δ(R₁R₂) = (ΔR₁ − ΔR₂)/Δκ² and
/// γ₁R₁R₂ = (γ₁R₁ − γ₁R₂)/Δκ².
fn composed_data(disc: &Discretization, coef: &[(C64, C64)], k1: C64, k2: C64, x: &[C64]) -> Vec<C64> {
    let nv = disc.nv;
    let (a, b) = x.split_at(nv);
    let apply = |kind: BlockKind, k: C64, v: &[C64]| matvec(&disc.global(kind, k, false), v);
    let vol = |k: C64| -> Vec<C64> {
        let p = apply(BlockKind::Newton, k, a);
        let q = apply(BlockKind::VolumeSingleLayer, k, b);
        p.iter().zip(&q).map(|(u, v)| u + v).collect()
    };
    let bdy = |k: C64| -> Vec<C64> {
        let p = apply(BlockKind::NormalNewton, k, a);
        let q = apply(BlockKind::NormalSingleLayer, k, b);
        p.iter().zip(&q).map(|(u, v)| u + v).collect()
    };
    let (v1, v2) = (vol(k1), vol(k2));
    let (g1, g2) = (bdy(k1), bdy(k2));
    let mut out = Vec::with_capacity(x.len());
    for i in 0..nv {
        let (am, _) = coef[disc.owner(i, true)];
        out.push(am * (-k1 * k1 * v1[i] + k2 * k2 * v2[i]));
    }
    for i in 0..disc.nb {
        let (_, rt) = coef[disc.owner(i, false)];
        out.push(rt * (g1[i] - g2[i]));
    }
    out
}

/// Dense matrix of the difference operator from volume-node sources to
/// points is not needed by callers; this helper exposes the Q matrix of a
/// probe solve for diagnostics.
pub fn q_matrix(kappa: C64, scene: &Scene, form: Form) -> Result<CMat> {
    physical_pencil(scene, form)?.eval(kappa)
}

/// Field values along a segment κ(t) = κ_a + t(κ_b − κ_a), t ∈ [0,1] at
/// `n` equispaced t, for analyticity probes.
pub fn field_along_segment(
    ka: C64,
    kb: C64,
    n: usize,
    source: &GaussianSource,
    points: &[P3],
    scene: &Scene,
    form: Form,
) -> Result<Vec<Vec<C64>>> {
    (0..n)
        .map(|j| {
            let t = j as f64 / (n.max(2) - 1) as f64;
            Ok(apply_resolvent_difference(ka + (kb - ka) * t, source, points, scene, form)?.values)
        })
        .collect()
}
