//! The acoustic pencil: Q_κ in its full, alternate, generalised and reduced
//! forms, and the ε-rescaled pencil M^{(a,b,c)}_κ(ε) on the reference
//! inclusion.

use std::io::Write;
use std::path::Path;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Material, MaterialCase, Scene};
use crate::linalg::{self, c, CMat, Lu};
use crate::operators::{BlockKind, BlockTag, Discretization, MinnaertData, OperatorBlock, ReferenceOperators, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Form {
    Full,
    Not1,
    VolumeOnly,
    SurfaceOnly,
    GeneralWZ,
    RescaledABC(u8, u8, u8),
}

/// Assembled pencil value.  Unknowns are ordered all volume blocks first,
/// then all boundary blocks; reduced forms keep only one of the two.
#[derive(Debug, Clone)]
pub struct QMatrix {
    pub matrix: CMat,
    pub kappa: C64,
    pub eps: f64,
    pub form: Form,
    pub material: Material,
    pub vol_off: Vec<usize>,
    pub bdy_off: Vec<usize>,
    pub has_volume: bool,
    pub has_boundary: bool,
    /// Quadrature weight of every unknown, for weighted norms.
    pub weights: Vec<f64>,
}

impl QMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn ranges(&self) -> Vec<(Space, usize, usize)> {
        let n = self.vol_off.len() - 1;
        let nv = if self.has_volume { self.vol_off[n] } else { 0 };
        let mut out = Vec::new();
        if self.has_volume {
            for l in 0..n {
                out.push((Space::Volume(l), self.vol_off[l], self.vol_off[l + 1] - self.vol_off[l]));
            }
        }
        if self.has_boundary {
            for l in 0..n {
                out.push((Space::Boundary(l), nv + self.bdy_off[l], self.bdy_off[l + 1] - self.bdy_off[l]));
            }
        }
        out
    }

    /// The block grid (row-major), each block tagged with its spaces.
    pub fn blocks(&self) -> Vec<Vec<OperatorBlock>> {
        let r = self.ranges();
        r.iter()
            .map(|&(rs, r0, nr)| {
                r.iter()
                    .map(|&(cs, c0, nc)| OperatorBlock {
                        entries: linalg::sub(&self.matrix, r0, nr, c0, nc),
                        row_space: rs,
                        col_space: cs,
                        kappa: self.kappa,
                        kind: BlockTag::Kernel(BlockKind::Newton),
                    })
                    .collect()
            })
            .collect()
    }

    /// Writes the matrix as `i j re im` lines.
    pub fn dump(&self, path: &Path) -> Result<()> {
        dump_matrix(&self.matrix, path)
    }
}

pub fn dump_matrix(m: &CMat, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            writeln!(f, "{i} {j} {:.17e} {:.17e}", z.re, z.im)?;
        }
    }
    f.flush()?;
    Ok(())
}

/// Exponents (a,b,c) of the rescaled pencil for each material case.
pub fn case_exponents(case: u8) -> Result<(i32, i32, i32)> {
    match case {
        1 | 4 => Ok((2, 1, 1)),
        2 => Ok((0, 1, 1)),
        3 => Ok((1, 1, 1)),
        _ => Err(Error::Config(format!("material case {case} not in 1..=4"))),
    }
}

/// Truncated material laws (v²(ε), ρ(ε)) inside the inclusion.
pub fn material_at(case: u8, m: &Material, eps: C64) -> Result<(C64, C64)> {
    let e = eps;
    Ok(match case {
        1 => (e * e * (m.v2 + m.v12 * e), 1.0 + m.rho1 * e),
        2 => (1.0 + m.v12 * e, e * e * m.rho),
        3 => (e * (m.v2 + m.v12 * e), e * (m.rho + m.rho1 * e)),
        4 => (e * e * (m.v2 + m.v12 * e), e * (m.rho + m.rho1 * e)),
        _ => return Err(Error::Config(format!("material case {case} not in 1..=4"))),
    })
}

pub fn rho_tilde(rho: C64) -> C64 {
    2.0 * (rho - 1.0) / (rho + 1.0)
}

/// Row coefficients of one inclusion:
/// volume rows  vd·I + vn·N + vs·1_ΩSL,
/// boundary rows bn·γ₁N + bd·I + bg·γ₁SL.
#[derive(Debug, Clone, Copy, Default)]
struct Coeffs {
    vd: C64,
    vn: C64,
    vs: C64,
    bn: C64,
    bd: C64,
    bg: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    None,
    /// Volume rows and columns only.
    Volume,
    /// Boundary rows and columns only.
    Boundary,
}

/// Right factor P + ε^s P⊥ on the boundary columns.
#[derive(Debug, Clone)]
pub struct Split {
    pub power: i32,
    /// Range vector of P (ψ) and its co-vector (weights), P = ψ wᵀ / c.
    pub psi: Vec<f64>,
    pub weights: Vec<f64>,
    pub c: f64,
}

impl Split {
    pub fn minnaert(power: i32, m: &MinnaertData, weights: &[f64]) -> Self {
        Self { power, psi: m.psi.clone(), weights: weights.to_vec(), c: m.c_omega }
    }

    /// B ↦ B(P + tP⊥) = tB + (1−t)(Bψ)wᵀ/c on columns c0.. of `b`.
    fn apply(&self, b: &mut CMat, c0: usize, t: C64) {
        let n = self.psi.len();
        let bpsi: Vec<C64> = (0..b.nrows())
            .map(|i| (0..n).map(|j| b[(i, c0 + j)] * self.psi[j]).sum::<C64>())
            .collect();
        let s = (1.0 - t) / self.c;
        for j in 0..n {
            let wj = self.weights[j] * s;
            for i in 0..b.nrows() {
                b[(i, c0 + j)] = t * b[(i, c0 + j)] + bpsi[i] * wj;
            }
        }
    }
}

/// A κ-dependent matrix family with analytic derivative.
pub trait Pencil: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, kappa: C64) -> Result<CMat>;
    /// dF/dκ.
    fn deriv(&self, kappa: C64) -> Result<CMat>;
    /// Quadrature weight per unknown (weighted norms).
    fn weights(&self) -> Vec<f64>;
}

/// Generic pencil Σ_k c_k(κ) B_k(sκ) over the four kernel blocks.
pub struct BlockPencil {
    pub disc: Discretization,
    pub reduction: Reduction,
    /// Kernel wavenumber is `scale`·κ.
    pub scale: C64,
    coeffs: Box<dyn Fn(C64) -> Vec<(Coeffs, Coeffs)> + Send + Sync>,
    pub split: Option<(Split, C64)>,
    pub form: Form,
}

impl BlockPencil {
    fn vol(&self) -> bool {
        self.reduction != Reduction::Boundary
    }

    fn bdy(&self) -> bool {
        self.reduction != Reduction::Volume
    }

    fn combine(&self, kappa: C64, deriv: bool, co: &[Coeffs]) -> CMat {
        let k = self.scale * kappa;
        let d = &self.disc;
        let (vol, bdy) = (self.vol(), self.bdy());
        let nv = if vol { d.nv } else { 0 };
        let nb = if bdy { d.nb } else { 0 };
        let mut m = linalg::zeros(nv + nb, nv + nb);
        let n_incl = d.n_inclusions();
        let scale_rows = |m: &mut CMat, b: &CMat, r0: usize, c0: usize, row_off: &[usize], pick: &dyn Fn(&Coeffs) -> C64| {
            for l in 0..n_incl {
                let a = pick(&co[l]);
                if a == c(0.0) {
                    continue;
                }
                for i in row_off[l]..row_off[l + 1] {
                    for j in 0..b.ncols() {
                        m[(r0 + i, c0 + j)] += a * b[(i, j)];
                    }
                }
            }
        };
        let any = |f: &dyn Fn(&Coeffs) -> C64| co.iter().any(|x| f(x) != c(0.0));
        if vol {
            if any(&|x| x.vn) {
                let b = d.global(BlockKind::Newton, k, deriv);
                scale_rows(&mut m, &b, 0, 0, &d.vol_off, &|x| x.vn);
            }
            if bdy && any(&|x| x.vs) {
                let b = d.global(BlockKind::VolumeSingleLayer, k, deriv);
                scale_rows(&mut m, &b, 0, nv, &d.vol_off, &|x| x.vs);
            }
        }
        if bdy {
            if vol && any(&|x| x.bn) {
                let b = d.global(BlockKind::NormalNewton, k, deriv);
                scale_rows(&mut m, &b, nv, 0, &d.bdy_off, &|x| x.bn);
            }
            if any(&|x| x.bg) {
                let b = d.global(BlockKind::NormalSingleLayer, k, deriv);
                scale_rows(&mut m, &b, nv, nv, &d.bdy_off, &|x| x.bg);
            }
        }
        if !deriv {
            for l in 0..n_incl {
                if vol {
                    for i in d.vol_off[l]..d.vol_off[l + 1] {
                        m[(i, i)] += co[l].vd;
                    }
                }
                if bdy {
                    for i in d.bdy_off[l]..d.bdy_off[l + 1] {
                        m[(nv + i, nv + i)] += co[l].bd;
                    }
                }
            }
        }
        m
    }

    fn finish(&self, mut m: CMat) -> CMat {
        if let Some((split, t)) = &self.split {
            let nv = if self.vol() { self.disc.nv } else { 0 };
            split.apply(&mut m, nv, *t);
        }
        m
    }
}

impl Pencil for BlockPencil {
    fn dim(&self) -> usize {
        (if self.vol() { self.disc.nv } else { 0 }) + (if self.bdy() { self.disc.nb } else { 0 })
    }

    fn eval(&self, kappa: C64) -> Result<CMat> {
        let co: Vec<Coeffs> = (self.coeffs)(kappa).into_iter().map(|p| p.0).collect();
        Ok(self.finish(self.combine(kappa, false, &co)))
    }

    fn deriv(&self, kappa: C64) -> Result<CMat> {
        let (co, dco): (Vec<Coeffs>, Vec<Coeffs>) = (self.coeffs)(kappa).into_iter().unzip();
        // chain rule: c·B′(sκ)·s + c′·B(sκ); the identity terms are κ-free
        let sco: Vec<Coeffs> = co
            .iter()
            .map(|x| Coeffs {
                vd: c(0.0),
                bd: c(0.0),
                vn: x.vn * self.scale,
                vs: x.vs * self.scale,
                bn: x.bn * self.scale,
                bg: x.bg * self.scale,
            })
            .collect();
        let mut a = self.combine(kappa, true, &sco);
        let dco0: Vec<Coeffs> = dco.iter().map(|x| Coeffs { vd: c(0.0), bd: c(0.0), ..*x }).collect();
        let b = self.combine(kappa, false, &dco0);
        a += &b;
        Ok(self.finish(a))
    }

    fn weights(&self) -> Vec<f64> {
        let mut w = Vec::new();
        if self.vol() {
            w.extend(self.disc.vol_weights());
        }
        if self.bdy() {
            w.extend(self.disc.bdy_weights());
        }
        w
    }
}

/// Physical (v², ρ) of each inclusion of a scene.
pub fn scene_materials(scene: &Scene) -> Result<Vec<(C64, C64)>> {
    let m = &scene.material;
    (0..scene.n_inclusions())
        .map(|l| match m.case {
            MaterialCase::Fixed => {
                let (v2, rho) = m.of(l);
                Ok((c(v2), c(rho)))
            }
            MaterialCase::Scaling(k) => material_at(k, m, c(scene.eps)),
        })
        .collect()
}

fn check_not1(mats: &[(C64, C64)], need_v: bool, need_rho: bool) -> Result<()> {
    for (l, (v2, rho)) in mats.iter().enumerate() {
        if need_v && (v2 - 1.0).norm() == 0.0 {
            return Err(Error::Domain(format!("v² = 1 in inclusion {l}: division by v²−1")));
        }
        if need_rho && (rho - 1.0).norm() == 0.0 {
            return Err(Error::Domain(format!("ρ = 1 in inclusion {l}: ρ̃ = 0")));
        }
    }
    Ok(())
}

/// Physical-scale pencil Q_κ of a scene in the requested form.
pub fn physical_pencil(scene: &Scene, form: Form) -> Result<BlockPencil> {
    let mats = scene_materials(scene)?;
    let disc = Discretization::new(scene);
    let m = &scene.material;
    let reduction = match form {
        Form::VolumeOnly => Reduction::Volume,
        Form::SurfaceOnly => Reduction::Boundary,
        Form::RescaledABC(..) => {
            return Err(Error::Config("rescaled form needs assemble_rescaled".into()));
        }
        _ => Reduction::None,
    };
    let z = c(0.0);
    let coeffs: Box<dyn Fn(C64) -> Vec<(Coeffs, Coeffs)> + Send + Sync> = match form {
        Form::Full | Form::VolumeOnly | Form::SurfaceOnly => Box::new(move |k: C64| {
            mats.iter()
                .map(|&(v2, rho)| {
                    let rt = rho_tilde(rho);
                    let a = v2 - 1.0;
                    (
                        Coeffs { vd: v2, vn: a * k * k, vs: a * k * k, bn: -rt, bd: c(1.0), bg: -rt },
                        Coeffs { vd: z, vn: a * 2.0 * k, vs: a * 2.0 * k, bn: z, bd: z, bg: z },
                    )
                })
                .collect()
        }),
        Form::Not1 | Form::GeneralWZ => {
            let (v_inf, rho_inf) = if form == Form::GeneralWZ { (m.v_inf, m.rho_inf) } else { (false, false) };
            check_not1(&mats, !v_inf, !rho_inf)?;
            Box::new(move |k: C64| {
                mats.iter()
                    .map(|&(v2, rho)| {
                        let w = if v_inf { c(1.0) } else { v2 / (v2 - 1.0) };
                        let zz = if rho_inf { c(0.5) } else { 1.0 / rho_tilde(rho) };
                        (
                            Coeffs { vd: w, vn: k * k, vs: k * k, bn: c(-1.0), bd: zz, bg: c(-1.0) },
                            Coeffs { vd: z, vn: 2.0 * k, vs: 2.0 * k, bn: z, bd: z, bg: z },
                        )
                    })
                    .collect()
            })
        }
        Form::RescaledABC(..) => unreachable!(),
    };
    Ok(BlockPencil { disc, reduction, scale: c(1.0), coeffs, split: None, form })
}

/// Boundary-column splitting used by the rescaled pencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SplitMode {
    /// P + ε^s P⊥ with P built from ψ = S₀⁻¹1 (cases 2, 3).
    PerCase,
    /// P̃ + ε^s P̃⊥ with P̃ built from the exact discrete null vector of
    /// ½ + γ₁SL₀, which keeps the discrete pencil analytic at ε = 0.
    DiscreteNull,
    /// No splitting: same kernel points for ε ≠ 0, better conditioned.
    Off,
}

/// M^{(a,b,c)}_κ(ε) on the reference inclusion (ε may be complex).
pub fn rescaled_pencil(
    scene: &Scene,
    case: u8,
    eps: C64,
    split: SplitMode,
    reduction: Reduction,
) -> Result<BlockPencil> {
    if scene.n_inclusions() != 1 {
        return Err(Error::Config("rescaled pencil is defined for a single inclusion".into()));
    }
    if eps.norm() == 0.0 {
        return Err(Error::Domain("rescaled pencil needs ε ≠ 0".into()));
    }
    let (a, b, cc) = case_exponents(case)?;
    let d = b + cc - a;
    let (v2, rho) = material_at(case, &scene.material, eps)?;
    let r = (1.0 - rho) / (1.0 + rho);
    let disc = Discretization::reference(&scene.surface, &scene.volume);
    let e = eps;
    let p = |k: i32| e.powi(k);
    let vd = v2 * p(-a);
    let vn = (v2 - 1.0) * p(-a + 2);
    let vs = (v2 - 1.0) * p(-b + 1);
    let bn = r * p(-cc + 1);
    let bd = 0.5 * p(-d);
    let bg = r * p(-d);
    let z = c(0.0);
    let coeffs = Box::new(move |k: C64| {
        vec![(
            Coeffs { vd, vn: vn * k * k, vs: vs * k * k, bn, bd, bg },
            Coeffs { vd: z, vn: vn * 2.0 * k, vs: vs * 2.0 * k, bn: z, bd: z, bg: z },
        )]
    });
    let split = match (split, case) {
        (SplitMode::PerCase | SplitMode::DiscreteNull, 2 | 3) if reduction != Reduction::Volume => {
            let ops = ReferenceOperators::new(&scene.surface, &scene.volume)?;
            let s = if case == 2 { 2 } else { 1 };
            let mut sp = Split::minnaert(s, &ops.minnaert, &scene.surface.weights);
            if split == SplitMode::DiscreteNull {
                sp.psi = ops.discrete_null_density()?.iter().map(|z| z.re).collect();
            }
            Some((sp, e.powi(s)))
        }
        _ => None,
    };
    Ok(BlockPencil { disc, reduction, scale: eps, coeffs, split, form: Form::RescaledABC(a as u8, b as u8, cc as u8) })
}

fn qmatrix(p: &BlockPencil, kappa: C64, eps: f64, material: &Material) -> Result<QMatrix> {
    Ok(QMatrix {
        matrix: p.eval(kappa)?,
        kappa,
        eps,
        form: p.form,
        material: material.clone(),
        vol_off: p.disc.vol_off.clone(),
        bdy_off: p.disc.bdy_off.clone(),
        has_volume: p.vol(),
        has_boundary: p.bdy(),
        weights: p.weights(),
    })
}

pub fn assemble_q(kappa: C64, scene: &Scene, form: Form) -> Result<QMatrix> {
    let p = physical_pencil(scene, form)?;
    qmatrix(&p, kappa, scene.eps, &scene.material)
}

/// dQ/dκ in the same layout as `assemble_q`.
pub fn assemble_q_deriv(kappa: C64, scene: &Scene, form: Form) -> Result<CMat> {
    physical_pencil(scene, form)?.deriv(kappa)
}

pub fn assemble_rescaled(kappa: C64, eps: f64, case: u8, scene: &Scene) -> Result<QMatrix> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    let p = rescaled_pencil(scene, case, c(eps), SplitMode::PerCase, Reduction::None)?;
    qmatrix(&p, kappa, eps, &scene.material)
}

/// Smallest singular value of the weight-symmetrised matrix D^{½}QD^{-½}
/// and the matching right vector mapped back to nodal values (unit weighted
/// norm).
pub fn smallest_singular_weighted(m: &CMat, w: &[f64]) -> Result<(f64, Vec<C64>)> {
    let n = m.nrows();
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let a = Mat::from_fn(n, n, |i, j| m[(i, j)] * (sw[i] / sw[j]));
    let (s, y) = linalg::smallest_singular(&a, 2000)?;
    let x: Vec<C64> = y.iter().zip(&sw).map(|(v, s)| v / *s).collect();
    Ok((s, x))
}

/// σ_min of D^{½}QD^{-½} without the singular vector: dense singular
/// values when `exact`, otherwise an inverse-iteration estimate to 1e-6.
pub fn sigma_min_weighted(m: &CMat, w: &[f64], exact: bool) -> Result<f64> {
    let n = m.nrows();
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let a = Mat::from_fn(n, n, |i, j| m[(i, j)] * (sw[i] / sw[j]));
    if exact {
        linalg::smallest_singular_value(&a)
    } else {
        linalg::smallest_singular_estimate(&a, 1e-6)
    }
}

pub fn smallest_singular(q: &QMatrix) -> Result<(f64, Vec<C64>)> {
    smallest_singular_weighted(&q.matrix, &q.weights)
}

/// 1-norm condition estimate via an explicit inverse (small problems only).
pub fn condition_number(m: &CMat) -> Result<f64> {
    let n = m.nrows();
    let inv = Lu::new(m)?.solve_mat(&linalg::identity(n));
    Ok(linalg::spectral_norm(m)? * linalg::spectral_norm(&inv)?)
}
