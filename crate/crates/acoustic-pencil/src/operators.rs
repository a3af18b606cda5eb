//! Nyström blocks of the volume/surface operators, series blocks,
//! projectors and the derived spectral data (Newton spectrum, Minnaert
//! frequency, Neumann eigenpairs).

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dot3, norm3, sub3, Scene, SurfaceQuadrature, VolumeQuadrature, P3};
use crate::kernels::{
    dgreen_factor, dgreen_factor_dk, green_dk, green_unchecked, newton_self, newton_self_dk,
    single_layer_self, single_layer_self_dk, SeriesKind,
};
use crate::linalg::{self, c, matvec, winner, wnorm, wsum, CMat, Lu, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Space {
    Volume(usize),
    Boundary(usize),
}

/// Kernel blocks.  Names follow the operators they discretise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    /// N_κ, volume → volume.
    Newton,
    /// γ₀N_κ, volume → boundary.
    NewtonTrace,
    /// γ₁⁻N_κ, volume → boundary.
    NormalNewton,
    /// 1_Ω SL_κ, boundary → volume.
    VolumeSingleLayer,
    /// S_κ = γ₀SL_κ, boundary → boundary.
    SingleLayerTrace,
    /// γ₁SL_κ (direct value), boundary → boundary.
    NormalSingleLayer,
    /// K_κ = γ₀DL_κ (direct value), boundary → boundary.
    DoubleLayerTrace,
}

impl BlockKind {
    pub fn spaces(self) -> (bool, bool) {
        // (row is volume, col is volume)
        match self {
            BlockKind::Newton => (true, true),
            BlockKind::NewtonTrace | BlockKind::NormalNewton => (false, true),
            BlockKind::VolumeSingleLayer => (true, false),
            _ => (false, false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockTag {
    Kernel(BlockKind),
    KappaDerivative(BlockKind),
    Series(SeriesTag),
    Projector(Which),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesTag {
    N1,
    SL1,
    K2star,
    K3star,
}

impl From<SeriesKind> for SeriesTag {
    fn from(k: SeriesKind) -> Self {
        match k {
            SeriesKind::N1 => SeriesTag::N1,
            SeriesKind::SL1 => SeriesTag::SL1,
            SeriesKind::K2star => SeriesTag::K2star,
            SeriesKind::K3star => SeriesTag::K3star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Which {
    P0,
    Pstar,
    Pperp,
}

#[derive(Debug, Clone)]
pub struct OperatorBlock {
    pub entries: CMat,
    pub row_space: Space,
    pub col_space: Space,
    pub kappa: C64,
    pub kind: BlockTag,
}

/// Nodes/weights (and normals on boundaries) of one side of a block.
#[derive(Clone, Copy)]
pub struct Patch<'a> {
    pub nodes: &'a [P3],
    pub weights: &'a [f64],
    pub normals: Option<&'a [P3]>,
}

impl SurfaceQuadrature {
    pub fn patch(&self) -> Patch<'_> {
        Patch { nodes: &self.nodes, weights: &self.weights, normals: Some(&self.normals) }
    }
}

impl VolumeQuadrature {
    pub fn patch(&self) -> Patch<'_> {
        Patch { nodes: &self.nodes, weights: &self.weights, normals: None }
    }
}

/// Diagonal of the double-layer trace that enforces K₀1 = −½·1 row by row.
pub fn gauss_diagonal(s: &SurfaceQuadrature) -> Vec<f64> {
    (0..s.len())
        .into_par_iter()
        .map(|i| {
            let x = s.nodes[i];
            let mut acc = 0.0;
            for j in 0..s.len() {
                if j != i {
                    let d = sub3(x, s.nodes[j]);
                    let r = norm3(d);
                    acc += s.weights[j] * dot3(s.normals[j], d) / (4.0 * PI * r * r * r);
                }
            }
            -0.5 - acc
        })
        .collect()
}

/// Fill an nr × nc matrix column by column in parallel.
pub fn fill<F>(nr: usize, nc: usize, f: F) -> CMat
where
    F: Fn(usize, usize) -> C64 + Sync,
{
    let mut data = vec![C64::new(0.0, 0.0); nr * nc];
    if nr > 0 {
        data.par_chunks_mut(nr).enumerate().for_each(|(j, col)| {
            for (i, v) in col.iter_mut().enumerate() {
                *v = f(i, j);
            }
        });
    }
    Mat::from_fn(nr, nc, |i, j| data[j * nr + i])
}

/// Raw Nyström block: entry (i,j) = kernel(tᵢ, sⱼ)·wⱼ, with self-cell rules
/// on the diagonal when `same` (target and source are the same node set).
/// `deriv` returns the κ-derivative instead.  `gauss` is required for the
/// normal-derivative kinds when `same`.
pub fn raw_block(
    kind: BlockKind,
    kappa: C64,
    t: Patch<'_>,
    s: Patch<'_>,
    same: bool,
    deriv: bool,
    gauss: Option<&[f64]>,
) -> CMat {
    let g = |r: f64| if deriv { green_dk(kappa, r) } else { green_unchecked(kappa, r) };
    let dg = |r: f64| if deriv { dgreen_factor_dk(kappa, r) } else { dgreen_factor(kappa, r) };
    let zero = C64::new(0.0, 0.0);
    fill(t.nodes.len(), s.nodes.len(), |i, j| {
        let wj = s.weights[j];
        if same && i == j {
            return match kind {
                BlockKind::Newton => {
                    if deriv {
                        newton_self_dk(kappa, wj)
                    } else {
                        newton_self(kappa, wj)
                    }
                }
                BlockKind::SingleLayerTrace => {
                    if deriv {
                        single_layer_self_dk(kappa, wj)
                    } else {
                        single_layer_self(kappa, wj)
                    }
                }
                BlockKind::NormalSingleLayer | BlockKind::DoubleLayerTrace => {
                    if deriv {
                        zero
                    } else {
                        c(gauss.expect("gauss diagonal required")[i])
                    }
                }
                _ => unreachable!("no coincident nodes between volume and boundary sets"),
            };
        }
        let d = sub3(t.nodes[i], s.nodes[j]);
        let r = norm3(d);
        match kind {
            BlockKind::Newton
            | BlockKind::NewtonTrace
            | BlockKind::VolumeSingleLayer
            | BlockKind::SingleLayerTrace => g(r) * wj,
            BlockKind::NormalNewton | BlockKind::NormalSingleLayer => {
                dg(r) * (dot3(t.normals.expect("target normals")[i], d) * wj)
            }
            BlockKind::DoubleLayerTrace => dg(r) * (-dot3(s.normals.expect("source normals")[j], d) * wj),
        }
    })
}

/// One inclusion at physical scale with its Gauss diagonal.
#[derive(Debug, Clone)]
pub struct PlacedInclusion {
    pub surface: SurfaceQuadrature,
    pub volume: VolumeQuadrature,
    pub gauss: Vec<f64>,
}

/// All inclusions of a scene, with global offsets (all volume unknowns
/// first, then all boundary unknowns).
#[derive(Debug, Clone)]
pub struct Discretization {
    pub incl: Vec<PlacedInclusion>,
    pub vol_off: Vec<usize>,
    pub bdy_off: Vec<usize>,
    pub nv: usize,
    pub nb: usize,
}

impl Discretization {
    pub fn new(scene: &Scene) -> Self {
        let incl: Vec<PlacedInclusion> = (0..scene.n_inclusions())
            .map(|l| {
                let (surface, volume) = scene.place(l);
                let gauss = gauss_diagonal(&surface);
                PlacedInclusion { surface, volume, gauss }
            })
            .collect();
        Self::from_inclusions(incl)
    }

    /// The reference inclusion at the origin and unit scale.
    pub fn reference(surface: &SurfaceQuadrature, volume: &VolumeQuadrature) -> Self {
        let gauss = gauss_diagonal(surface);
        Self::from_inclusions(vec![PlacedInclusion { surface: surface.clone(), volume: volume.clone(), gauss }])
    }

    fn from_inclusions(incl: Vec<PlacedInclusion>) -> Self {
        let mut vol_off = vec![0];
        let mut bdy_off = vec![0];
        for p in &incl {
            vol_off.push(vol_off.last().unwrap() + p.volume.len());
            bdy_off.push(bdy_off.last().unwrap() + p.surface.len());
        }
        let nv = *vol_off.last().unwrap();
        let nb = *bdy_off.last().unwrap();
        Self { incl, vol_off, bdy_off, nv, nb }
    }

    pub fn n_inclusions(&self) -> usize {
        self.incl.len()
    }

    pub fn vol_weights(&self) -> Vec<f64> {
        self.incl.iter().flat_map(|p| p.volume.weights.iter().copied()).collect()
    }

    pub fn bdy_weights(&self) -> Vec<f64> {
        self.incl.iter().flat_map(|p| p.surface.weights.iter().copied()).collect()
    }

    pub fn vol_nodes(&self) -> Vec<P3> {
        self.incl.iter().flat_map(|p| p.volume.nodes.iter().copied()).collect()
    }

    pub fn bdy_nodes(&self) -> Vec<P3> {
        self.incl.iter().flat_map(|p| p.surface.nodes.iter().copied()).collect()
    }

    pub fn bdy_normals(&self) -> Vec<P3> {
        self.incl.iter().flat_map(|p| p.surface.normals.iter().copied()).collect()
    }

    /// Inclusion index owning global volume (or boundary) unknown `k`.
    pub fn owner(&self, k: usize, volume: bool) -> usize {
        let off = if volume { &self.vol_off } else { &self.bdy_off };
        off.partition_point(|&o| o <= k) - 1
    }

    /// Block between inclusions ℓr (rows) and ℓc (columns).
    pub fn block(&self, kind: BlockKind, kappa: C64, lr: usize, lc: usize, deriv: bool) -> CMat {
        let (rv, cv) = kind.spaces();
        let (pr, pc) = (&self.incl[lr], &self.incl[lc]);
        let t = if rv { pr.volume.patch() } else { pr.surface.patch() };
        let s = if cv { pc.volume.patch() } else { pc.surface.patch() };
        let same = lr == lc && rv == cv;
        raw_block(kind, kappa, t, s, same, deriv, Some(&pr.gauss))
    }

    /// Block over all inclusions (translated-kernel coupling off the diagonal).
    pub fn global(&self, kind: BlockKind, kappa: C64, deriv: bool) -> CMat {
        let (rv, cv) = kind.spaces();
        let nr = if rv { self.nv } else { self.nb };
        let nc = if cv { self.nv } else { self.nb };
        if self.n_inclusions() == 1 {
            return self.block(kind, kappa, 0, 0, deriv);
        }
        let mut m = linalg::zeros(nr, nc);
        for lr in 0..self.n_inclusions() {
            for lc in 0..self.n_inclusions() {
                let b = self.block(kind, kappa, lr, lc, deriv);
                let r0 = if rv { self.vol_off[lr] } else { self.bdy_off[lr] };
                let c0 = if cv { self.vol_off[lc] } else { self.bdy_off[lc] };
                linalg::set_block(&mut m, r0, c0, &b);
            }
        }
        m
    }
}

/// Kernel block between inclusions of a scene.
pub fn assemble(kind: BlockKind, kappa: C64, scene: &Scene, l_row: usize, l_col: usize) -> Result<OperatorBlock> {
    let n = scene.n_inclusions();
    if l_row >= n || l_col >= n {
        return Err(Error::Domain(format!("inclusion index out of range ({l_row}, {l_col}) of {n}")));
    }
    let disc = Discretization::new(scene);
    Ok(block_of(&disc, kind, kappa, l_row, l_col, false))
}

pub fn block_of(disc: &Discretization, kind: BlockKind, kappa: C64, lr: usize, lc: usize, deriv: bool) -> OperatorBlock {
    let (rv, cv) = kind.spaces();
    OperatorBlock {
        entries: disc.block(kind, kappa, lr, lc, deriv),
        row_space: if rv { Space::Volume(lr) } else { Space::Boundary(lr) },
        col_space: if cv { Space::Volume(lc) } else { Space::Boundary(lc) },
        kappa,
        kind: if deriv { BlockTag::KappaDerivative(kind) } else { BlockTag::Kernel(kind) },
    }
}

/// Checks a requested (row, col) space pair against a block kind.
pub fn check_spaces(kind: BlockKind, row: Space, col: Space) -> Result<()> {
    let (rv, cv) = kind.spaces();
    let ok = matches!(row, Space::Volume(_)) == rv && matches!(col, Space::Volume(_)) == cv;
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("{kind:?} does not map {col:?} to {row:?}")))
    }
}

/// Series-coefficient block on a single inclusion: N₍₁₎ (vol→vol),
/// SL₍₁₎ (bdy→vol), K₂*, K₃* (bdy→bdy).
pub fn series_block(kind: SeriesKind, surface: &SurfaceQuadrature, volume: &VolumeQuadrature) -> OperatorBlock {
    let k = I / (4.0 * PI);
    let (entries, row, col) = match kind {
        SeriesKind::N1 => {
            let w = &volume.weights;
            (fill(w.len(), w.len(), |_, j| k * w[j]), Space::Volume(0), Space::Volume(0))
        }
        SeriesKind::SL1 => {
            let w = &surface.weights;
            (fill(volume.len(), w.len(), |_, j| k * w[j]), Space::Volume(0), Space::Boundary(0))
        }
        SeriesKind::K2star | SeriesKind::K3star => {
            let s = surface;
            let m = fill(s.len(), s.len(), |i, j| {
                if i == j {
                    return C64::new(0.0, 0.0);
                }
                let d = sub3(s.nodes[i], s.nodes[j]);
                let nd = dot3(s.normals[i], d);
                if kind == SeriesKind::K2star {
                    c(-nd / (8.0 * PI * norm3(d)) * s.weights[j])
                } else {
                    I * (nd / (12.0 * PI) * s.weights[j])
                }
            });
            (m, Space::Boundary(0), Space::Boundary(0))
        }
    };
    OperatorBlock { entries, row_space: row, col_space: col, kappa: C64::new(0.0, 0.0), kind: BlockTag::Series(kind.into()) }
}

pub fn assemble_series(kind: SeriesKind, scene: &Scene) -> OperatorBlock {
    let (s, v) = scene.place(0);
    series_block(kind, &s, &v)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinnaertData {
    pub omega_m2: f64,
    pub c_omega: f64,
    pub volume: f64,
    pub psi: Vec<f64>,
}

impl MinnaertData {
    pub fn omega_m(&self) -> f64 {
        self.omega_m2.sqrt()
    }
}

pub fn minnaert_from(s0: &CMat, surface: &SurfaceQuadrature, volume: &VolumeQuadrature) -> Result<MinnaertData> {
    let ones = vec![c(1.0); surface.len()];
    let psi = Lu::new(s0)
        .map_err(|_| Error::Singular("S₀ is singular (degenerate mesh)".into()))?
        .solve(&ones);
    let c_omega = wsum(&surface.weights, &psi).re;
    if !(c_omega > 0.0) {
        return Err(Error::Singular(format!("capacity {c_omega} is not positive")));
    }
    let vol = volume.volume();
    Ok(MinnaertData { omega_m2: c_omega / vol, c_omega, volume: vol, psi: psi.iter().map(|z| z.re).collect() })
}

/// ψ = S₀⁻¹1, c_Ω = Σwψ, ω_M² = c_Ω/|Ω| for the first inclusion of a scene.
pub fn minnaert(scene: &Scene) -> Result<MinnaertData> {
    let disc = Discretization::new(scene);
    let p = &disc.incl[0];
    let s0 = disc.block(BlockKind::SingleLayerTrace, c(0.0), 0, 0, false);
    minnaert_from(&s0, &p.surface, &p.volume)
}

/// P = P₀* (φ ↦ c⁻¹⟨1,φ⟩ψ), P₀ (φ ↦ c⁻¹⟨ψ,φ⟩·1), P⊥ = I − P.
pub fn projector_matrix(which: Which, m: &MinnaertData, w: &[f64]) -> CMat {
    let n = w.len();
    let cc = m.c_omega;
    match which {
        Which::Pstar => fill(n, n, |i, j| c(m.psi[i] * w[j] / cc)),
        Which::P0 => fill(n, n, |_, j| c(w[j] * m.psi[j] / cc)),
        Which::Pperp => fill(n, n, |i, j| c(if i == j { 1.0 } else { 0.0 } - m.psi[i] * w[j] / cc)),
    }
}

pub fn projector(which: Which, scene: &Scene) -> Result<OperatorBlock> {
    let m = minnaert(scene)?;
    let (s, _) = scene.place(0);
    Ok(OperatorBlock {
        entries: projector_matrix(which, &m, &s.weights),
        row_space: Space::Boundary(0),
        col_space: Space::Boundary(0),
        kappa: c(0.0),
        kind: BlockTag::Projector(which),
    })
}

/// κ = 0 operators of a single reference inclusion.
#[derive(Debug, Clone)]
pub struct ReferenceOperators {
    pub disc: Discretization,
    pub s0: CMat,
    pub g0: CMat,
    pub n0: CMat,
    pub vsl0: CMat,
    pub g1n0: CMat,
    pub trace_n0: CMat,
    pub minnaert: MinnaertData,
}

impl ReferenceOperators {
    pub fn new(surface: &SurfaceQuadrature, volume: &VolumeQuadrature) -> Result<Self> {
        let disc = Discretization::reference(surface, volume);
        let z = c(0.0);
        let s0 = disc.block(BlockKind::SingleLayerTrace, z, 0, 0, false);
        let minnaert = minnaert_from(&s0, surface, volume)?;
        Ok(Self {
            g0: disc.block(BlockKind::NormalSingleLayer, z, 0, 0, false),
            n0: disc.block(BlockKind::Newton, z, 0, 0, false),
            vsl0: disc.block(BlockKind::VolumeSingleLayer, z, 0, 0, false),
            g1n0: disc.block(BlockKind::NormalNewton, z, 0, 0, false),
            trace_n0: disc.block(BlockKind::NewtonTrace, z, 0, 0, false),
            s0,
            minnaert,
            disc,
        })
    }

    pub fn from_scene(scene: &Scene) -> Result<Self> {
        let (s, v) = scene.place(0);
        Self::new(&s, &v)
    }

    pub fn surface(&self) -> &SurfaceQuadrature {
        &self.disc.incl[0].surface
    }

    pub fn volume(&self) -> &VolumeQuadrature {
        &self.disc.incl[0].volume
    }

    pub fn wb(&self) -> &[f64] {
        &self.disc.incl[0].surface.weights
    }

    pub fn wv(&self) -> &[f64] {
        &self.disc.incl[0].volume.weights
    }

    /// K₀ as the weighted transpose of γ₁SL₀.
    pub fn k0(&self) -> CMat {
        linalg::wtranspose(&self.g0, self.wb())
    }

    pub fn psi(&self) -> Vec<C64> {
        self.minnaert.psi.iter().map(|&p| c(p)).collect()
    }

    pub fn p_star(&self, x: &[C64]) -> Vec<C64> {
        let s = wsum(self.wb(), x) / self.minnaert.c_omega;
        self.minnaert.psi.iter().map(|p| s * *p).collect()
    }

    pub fn p_perp(&self, x: &[C64]) -> Vec<C64> {
        let p = self.p_star(x);
        x.iter().zip(p).map(|(a, b)| a - b).collect()
    }

    /// ½ + γ₁SL₀ as a matrix.
    pub fn half_plus_g0(&self) -> CMat {
        let n = self.g0.nrows();
        Mat::from_fn(n, n, |i, j| self.g0[(i, j)] + if i == j { 0.5 } else { 0.0 })
    }

    /// Factorisation of (½+γ₁SL₀)P⊥ + P.  Because P(½+γ₁SL₀) = 0 holds
    /// exactly for the discrete operators, P⊥A⁻¹P⊥ inverts (½+γ₁SL₀) on
    /// range P⊥ exactly.
    pub fn perp_inverse(&self) -> Result<PerpInverse<'_>> {
        let n = self.g0.nrows();
        let pm = projector_matrix(Which::Pstar, &self.minnaert, self.wb());
        let qm = projector_matrix(Which::Pperp, &self.minnaert, self.wb());
        let bq = linalg::matmul(&self.half_plus_g0(), &qm);
        let a = Mat::from_fn(n, n, |i, j| bq[(i, j)] + pm[(i, j)]);
        Ok(PerpInverse { ops: self, lu: Lu::new(&a)? })
    }

    /// Exact discrete null vector ψ̃ of ½ + γ₁SL₀, normalised by
    /// ⟨1,ψ̃⟩ = c_Ω.  Differs from ψ = S₀⁻¹1 by the quadrature error.
    pub fn discrete_null_density(&self) -> Result<Vec<C64>> {
        let n = self.g0.nrows();
        let pm = projector_matrix(Which::Pstar, &self.minnaert, self.wb());
        let a = Mat::from_fn(n, n, |i, j| self.g0[(i, j)] + pm[(i, j)] + if i == j { 0.5 } else { 0.0 });
        Ok(Lu::new(&a)?.solve(&self.psi()))
    }
}

pub struct PerpInverse<'a> {
    ops: &'a ReferenceOperators,
    lu: Lu,
}

impl PerpInverse<'_> {
    /// (½+γ₁SL₀)⊥⁻¹ P⊥ x.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.ops.p_perp(&self.lu.solve(&self.ops.p_perp(x)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, unit weighted norm, ⟨1,e⟩ ≥ 0.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

/// Top-k eigenpairs of N₀ via the weight-symmetrised matrix D^{½}N₀D^{-½}.
pub fn newton_spectrum_of(ops: &ReferenceOperators, k: usize) -> Result<SpectralResult> {
    let w = ops.wv();
    let n = w.len();
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let n0 = &ops.n0;
    let sym = Mat::<f64>::from_fn(n, n, |i, j| {
        // G_ij is symmetric; entries carry w_j
        0.5 * (sw[i] * n0[(i, j)].re / sw[j] + sw[j] * n0[(j, i)].re / sw[i])
    });
    let (vals, vecs) = linalg::symmetric_eigen(&sym)?;
    let k = k.min(n);
    let norm_a = vals[0].abs();
    let mut out = SpectralResult { eigenvalues: Vec::new(), eigenvectors: Vec::new(), residuals: Vec::new() };
    for m in 0..k {
        let mut e: Vec<f64> = (0..n).map(|i| vecs[(i, m)] / sw[i]).collect();
        let mean: f64 = e.iter().zip(w).map(|(a, b)| a * b).sum();
        if mean < 0.0 {
            e.iter_mut().for_each(|x| *x = -*x);
        }
        let ec: Vec<C64> = e.iter().map(|x| c(*x)).collect();
        let ae = matvec(n0, &ec);
        let r: Vec<C64> = ae.iter().zip(&ec).map(|(a, b)| a - b * vals[m]).collect();
        out.residuals.push(wnorm(w, &r) / norm_a);
        out.eigenvalues.push(vals[m]);
        out.eigenvectors.push(e);
    }
    if out.eigenvalues.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Decomposition("non-positive Newton eigenvalue among requested modes".into()));
    }
    Ok(out)
}

pub fn newton_spectrum(scene: &Scene, k: usize) -> Result<SpectralResult> {
    newton_spectrum_of(&ReferenceOperators::from_scene(scene)?, k)
}

#[derive(Debug, Clone, Serialize)]
pub struct NeumannPair {
    pub nu: f64,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    /// γ₀u_ν on boundary nodes.
    pub trace: Vec<f64>,
    /// ‖S₀φ_ν − γ₀(ν⁻¹−N₀)u_ν‖ / ‖φ_ν‖ (weighted).
    pub phi_residual: f64,
}

/// Neumann eigenpairs from the reduced map
/// L = Π(N₀ − 1_ΩSL₀(½+γ₁SL₀)⊥⁻¹P⊥γ₁⁻N₀)Π on mean-zero volume functions.
pub fn neumann_eigenpairs_of(ops: &ReferenceOperators, k: usize) -> Result<Vec<NeumannPair>> {
    let wv = ops.wv();
    let wb = ops.wb();
    let nv = wv.len();
    let vol = ops.minnaert.volume;
    let pinv = ops.perp_inverse()?;
    // columns of (½+γ₁SL₀)⊥⁻¹P⊥γ₁⁻N₀
    let cols: Vec<Vec<C64>> = (0..nv)
        .into_par_iter()
        .map(|j| {
            let g: Vec<C64> = (0..ops.g1n0.nrows()).map(|i| ops.g1n0[(i, j)]).collect();
            pinv.apply(&g)
        })
        .collect();
    let nb = wb.len();
    let rphi = Mat::from_fn(nb, nv, |i, j| cols[j][i]);
    let slr = linalg::matmul(&ops.vsl0, &rphi);
    let l0 = Mat::from_fn(nv, nv, |i, j| ops.n0[(i, j)] - slr[(i, j)]);
    // Π u = u − ⟨1,u⟩/|Ω|
    let proj = |m: &CMat| -> Mat<f64> {
        // Π M Π with Π = I − 1 wᵀ/|Ω|
        let n = m.nrows();
        let mut a = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        // right: A Π = A − (A1) wᵀ/|Ω|
        let a1: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).sum()).collect();
        for j in 0..n {
            for i in 0..n {
                a[(i, j)] -= a1[i] * wv[j] / vol;
            }
        }
        // left: Π A = A − 1 (wᵀA)/|Ω|
        let wa: Vec<f64> = (0..n).map(|j| (0..n).map(|i| wv[i] * a[(i, j)]).sum()).collect();
        for j in 0..n {
            for i in 0..n {
                a[(i, j)] -= wa[j] / vol;
            }
        }
        a
    };
    let lr = proj(&l0);
    let (vals, vecs) = linalg::general_eigen(&lr)?;
    let mu_max = vals.iter().map(|z| z.re).fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..nv)
        .filter(|&m| {
            let z = vals[m];
            let keep = z.re > 1e-9 * mu_max && z.im.abs() <= 1e-6 * z.re.abs();
            if !keep && z.re.abs() > 1e-9 * mu_max {
                log::warn!("discarding reduced Neumann eigenvalue {z}");
            }
            keep
        })
        .collect();
    idx.sort_by(|&a, &b| vals[b].re.partial_cmp(&vals[a].re).unwrap());
    let s0_lu = Lu::new(&ops.s0)?;
    let mut out = Vec::new();
    for &m in idx.iter().take(k) {
        let mu = vals[m].re;
        let nu = 1.0 / mu;
        let mut u: Vec<C64> = (0..nv).map(|i| c(vecs[(i, m)].re)).collect();
        let mean = wsum(wv, &u) / vol;
        u.iter_mut().for_each(|x| *x -= mean);
        let nrm = wnorm(wv, &u);
        u.iter_mut().for_each(|x| *x /= nrm);
        // φ representation: φ⊥ + cψ with N₀u + 1_ΩSL₀φ = μu in the mean
        let g = matvec(&ops.g1n0, &u);
        let phi_perp: Vec<C64> = pinv.apply(&g).iter().map(|z| -z).collect();
        let psi = ops.psi();
        let nu_u = matvec(&ops.n0, &u);
        let sl_perp = matvec(&ops.vsl0, &phi_perp);
        let sl_psi = matvec(&ops.vsl0, &psi);
        let lhs: Vec<C64> = nu_u.iter().zip(&sl_perp).map(|(a, b)| a + b).collect();
        let cc = -wsum(wv, &lhs) / wsum(wv, &sl_psi);
        let phi_rep: Vec<C64> = phi_perp.iter().zip(&psi).map(|(a, p)| a + cc * p).collect();
        // γ₀u = ν(γ₀N₀u + S₀φ)
        let tn = matvec(&ops.trace_n0, &u);
        let s_phi = matvec(&ops.s0, &phi_rep);
        let trace: Vec<C64> = tn.iter().zip(&s_phi).map(|(a, b)| (a + b) * nu).collect();
        // φ_ν = S₀⁻¹γ₀(ν⁻¹ − N₀)u_ν
        let rhs: Vec<C64> = trace.iter().zip(&tn).map(|(t, n)| t / nu - n).collect();
        let phi = s0_lu.solve(&rhs);
        let res: Vec<C64> = matvec(&ops.s0, &phi).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        out.push(NeumannPair {
            nu,
            u: u.iter().map(|z| z.re).collect(),
            phi: phi.iter().map(|z| z.re).collect(),
            trace: trace.iter().map(|z| z.re).collect(),
            phi_residual: wnorm(wb, &res) / wnorm(wb, &phi),
        });
    }
    Ok(out)
}

pub fn neumann_eigenpairs(scene: &Scene, k: usize) -> Result<Vec<NeumannPair>> {
    neumann_eigenpairs_of(&ReferenceOperators::from_scene(scene)?, k)
}

/// ‖D^{½}AD^{-½}‖₂, the operator norm on weighted L².
pub fn weighted_norm(a: &CMat, w: &[f64]) -> Result<f64> {
    let n = a.nrows();
    let m = Mat::from_fn(n, a.ncols(), |i, j| a[(i, j)] * (w[i].sqrt() / w[j].sqrt()));
    linalg::spectral_norm(&m)
}

/// Measured residuals of the layer-potential identities.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// max_i |(S₀1)_i − 1|.
    pub s0_one: f64,
    /// max_i |(K₀1)_i + ½|.
    pub k0_one: f64,
    /// ‖S₀K₀ᵀ − K₀S₀‖ / (‖S₀‖‖K₀‖).
    pub calderon: f64,
    /// max over probes of |⟨1,(γ₁SL₀+½)φ⟩| (interior Gauss value 0).
    pub interior_flux: f64,
    /// max over probes of |⟨1,(γ₁SL₀−½)φ⟩ + ⟨1,φ⟩| (exterior Gauss value −⟨1,φ⟩).
    pub exterior_flux: f64,
    /// Spectral interval of K₀.
    pub k0_spectrum: (f64, f64),
    /// ‖P(½+γ₁SL₀)P‖ / ‖γ₁SL₀‖.
    pub projected_null: f64,
}

pub fn identity_report(ops: &ReferenceOperators) -> Result<IdentityReport> {
    let wb = ops.wb();
    let n = wb.len();
    let ones = vec![c(1.0); n];
    let s1 = matvec(&ops.s0, &ones);
    let k0 = ops.k0();
    let k1 = matvec(&k0, &ones);
    let s0_one = s1.iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
    let k0_one = k1.iter().map(|z| (z + 0.5).norm()).fold(0.0, f64::max);
    let lhs = linalg::matmul(&ops.s0, &ops.g0);
    let rhs = linalg::matmul(&k0, &ops.s0);
    let diff = Mat::from_fn(n, n, |i, j| lhs[(i, j)] - rhs[(i, j)]);
    let calderon = weighted_norm(&diff, wb)? / (weighted_norm(&ops.s0, wb)? * weighted_norm(&k0, wb)?);
    let mut interior_flux: f64 = 0.0;
    let mut exterior_flux: f64 = 0.0;
    let nodes = &ops.surface().nodes;
    for probe in 0..4 {
        let phi: Vec<C64> = nodes
            .iter()
            .map(|p| c(1.0 + (probe as f64 + 1.0) * p[0] * p[0] - 0.5 * p[1] + 0.3 * probe as f64 * p[2]))
            .collect();
        let g = matvec(&ops.g0, &phi);
        let total = wsum(wb, &phi);
        let inner: Vec<C64> = g.iter().zip(&phi).map(|(a, b)| a + b * 0.5).collect();
        let outer: Vec<C64> = g.iter().zip(&phi).map(|(a, b)| a - b * 0.5).collect();
        interior_flux = interior_flux.max(wsum(wb, &inner).norm() / total.norm());
        exterior_flux = exterior_flux.max((wsum(wb, &outer) + total).norm() / total.norm());
    }
    let k0r = Mat::<f64>::from_fn(n, n, |i, j| k0[(i, j)].re);
    let (ev, _) = linalg::general_eigen(&k0r)?;
    let lo = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let hi = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let pm = projector_matrix(Which::Pstar, &ops.minnaert, wb);
    let half_g = Mat::from_fn(n, n, |i, j| ops.g0[(i, j)] + if i == j { 0.5 } else { 0.0 });
    let pgp = linalg::matmul(&linalg::matmul(&pm, &half_g), &pm);
    let projected_null = weighted_norm(&pgp, wb)? / weighted_norm(&ops.g0, wb)?;
    Ok(IdentityReport { s0_one, k0_one, calderon, interior_flux, exterior_flux, k0_spectrum: (lo, hi), projected_null })
}

/// Relative deviations of the series identities
/// ‖P K₂* P + ω_M⁻²P‖/‖P‖ and ‖P K₃* P − i(|Ω|/4π)P‖/‖P‖.
pub fn series_identity_deviation(ops: &ReferenceOperators) -> Result<(f64, f64)> {
    let wb = ops.wb();
    let n = wb.len();
    let m = &ops.minnaert;
    let p = projector_matrix(Which::Pstar, m, wb);
    let k2 = series_block(SeriesKind::K2star, ops.surface(), ops.volume()).entries;
    let k3 = series_block(SeriesKind::K3star, ops.surface(), ops.volume()).entries;
    let pk2p = linalg::matmul(&linalg::matmul(&p, &k2), &p);
    let pk3p = linalg::matmul(&linalg::matmul(&p, &k3), &p);
    let pn = weighted_norm(&p, wb)?;
    let d2 = Mat::from_fn(n, n, |i, j| pk2p[(i, j)] + p[(i, j)] / m.omega_m2);
    let d3 = Mat::from_fn(n, n, |i, j| pk3p[(i, j)] - I * (m.volume / (4.0 * PI)) * p[(i, j)]);
    Ok((weighted_norm(&d2, wb)? / pn, weighted_norm(&d3, wb)? / pn))
}

/// Weighted inner product helper re-exported for callers holding real data.
pub fn real_inner(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ac: Vec<C64> = a.iter().map(|x| c(*x)).collect();
    let bc: Vec<C64> = b.iter().map(|x| c(*x)).collect();
    winner(w, &ac, &bc).re
}
