//! Zeroth- and first-order resonance coefficients of the rescaled pencil
//! for the four material regimes, plus the √ε zero-energy branch of case 4.
//!
//! Besides the closed forms, the module offers discrete-consistent
//! recipes (kernel point of the ε = 0 limit pencil and its first-order
//! perturbation), which share all discretisation error with the direct
//! finder and are what remainder-slope tests compare against.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{MaterialCase, Scene};
use crate::kernels::SeriesKind;
use crate::linalg::{self, c, matvec, wsum, CMat, Lu, I};
use crate::operators::{self, newton_spectrum_of, series_block, ReferenceOperators};
use crate::qfunction::{rescaled_pencil, Pencil, Reduction, SplitMode};
use crate::resonance_finder::{refine, RefineOptions};

/// Relative spectral gap below which an eigenvalue counts as degenerate.
pub const SIMPLICITY_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionResult {
    /// "1".."4", or "4-zero" for the √ε branch.
    pub case: String,
    /// +1 or −1.
    pub branch: i8,
    /// Signed leading coefficient (±κ₀).
    pub kappa0: C64,
    /// κ^(1)_± (regular branches).
    pub kappa1: C64,
    /// κ₁ of the zero branch κ = κ₀(1 + κ₁ε)√ε.
    pub kappa1_zero: Option<C64>,
    pub intermediates: BTreeMap<String, C64>,
    /// Leading boundary density (cases 2, 3), for seeding.
    #[serde(skip)]
    pub density: Option<Vec<C64>>,
}

impl ExpansionResult {
    fn new(case: &str, branch: i8, kappa0: C64, kappa1: C64) -> Self {
        Self {
            case: case.into(),
            branch,
            kappa0,
            kappa1,
            kappa1_zero: None,
            intermediates: BTreeMap::new(),
            density: None,
        }
    }

    fn put(&mut self, k: &str, v: impl Into<C64>) {
        self.intermediates.insert(k.into(), v.into());
    }

    pub fn get(&self, k: &str) -> Option<C64> {
        self.intermediates.get(k).copied()
    }

    /// κ_asym(ε): κ₀ + κ^(1)ε, or κ₀(1 + κ₁ε)√ε for the zero branch.
    pub fn predict(&self, eps: f64) -> C64 {
        match self.kappa1_zero {
            Some(k1) => self.kappa0 * (1.0 + k1 * eps) * eps.sqrt(),
            None => self.kappa0 + self.kappa1 * eps,
        }
    }

    /// Small parameter in which the remainder is O(·²): ε, or √ε.
    pub fn small_parameter(&self, eps: f64) -> f64 {
        if self.kappa1_zero.is_some() {
            eps.sqrt()
        } else {
            eps
        }
    }
}

fn sign(branch: i8) -> Result<f64> {
    match branch {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(Error::Config(format!("branch sign must be ±1, got {branch}"))),
    }
}

fn require_case(scene: &Scene, case: u8) -> Result<()> {
    if scene.n_inclusions() != 1 {
        return Err(Error::Config("asymptotics treat a single inclusion".into()));
    }
    match scene.material.case {
        MaterialCase::Scaling(k) if k == case => Ok(()),
        other => Err(Error::Config(format!("scene material is {other:?}, expected case {case}"))),
    }
}

fn check_simple(vals: &[f64], idx: usize) -> Result<()> {
    let l = vals[idx];
    let scale = l.abs().max(f64::MIN_POSITIVE);
    let near = |j: usize| j != idx && (vals[j] - l).abs() <= SIMPLICITY_GAP * scale;
    if (0..vals.len()).any(near) {
        return Err(Error::Degenerate(format!("eigenvalue {l} at index {idx} is not simple")));
    }
    Ok(())
}

fn to_c(x: &[f64]) -> Vec<C64> {
    x.iter().map(|v| c(*v)).collect()
}

fn inner(w: &[f64], a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * *w).sum()
}

/// Case 1: κ₀ = v/√λ,
/// κ^(1) = ±(v₁²/(2v√λ) − ½ρ₁v√λ⟨γ₀e,γ₁e⟩) − i v²⟨1,e⟩²/(8πλ²).
pub fn expand_case1_with(ops: &ReferenceOperators, scene: &Scene, mode: usize, branch: i8) -> Result<ExpansionResult> {
    let s = sign(branch)?;
    let m = &scene.material;
    let spec = newton_spectrum_of(ops, mode + 2)?;
    check_simple(&spec.eigenvalues, mode)?;
    let lam = spec.eigenvalues[mode];
    let e = to_c(&spec.eigenvectors[mode]);
    let one_e = wsum(ops.wv(), &e);
    let g0e: Vec<C64> = matvec(&ops.trace_n0, &e).iter().map(|z| z / lam).collect();
    let g1e: Vec<C64> = matvec(&ops.g1n0, &e).iter().map(|z| z / lam).collect();
    let traces = inner(ops.wb(), &g0e, &g1e);
    let v = m.v2.sqrt();
    let sl = lam.sqrt();
    let real_part = m.v12 / (2.0 * v * sl) - 0.5 * m.rho1 * v * sl * traces;
    let imag_part = -I * m.v2 * one_e * one_e / (8.0 * PI * lam * lam);
    let mut r = ExpansionResult::new("1", branch, c(s * v / sl), s * real_part + imag_part);
    r.put("lambda", lam);
    r.put("one_e", one_e);
    r.put("trace_product", traces);
    Ok(r)
}

pub fn expand_case1(scene: &Scene, mode: usize, branch: i8) -> Result<ExpansionResult> {
    require_case(scene, 1)?;
    expand_case1_with(&ReferenceOperators::from_scene(scene)?, scene, mode, branch)
}

/// Case 2: κ₀ = √ρ ω_M, κ^(1) = ±(v₁²/2)√ρ ω_M − i(|Ω|/8π)ρω_M⁴.
pub fn expand_case2_with(ops: &ReferenceOperators, scene: &Scene, branch: i8) -> Result<ExpansionResult> {
    let s = sign(branch)?;
    let m = &scene.material;
    let md = &ops.minnaert;
    let om = md.omega_m();
    let k0 = m.rho.sqrt() * om;
    let k1 = s * 0.5 * m.v12 * k0 - I * (md.volume / (8.0 * PI)) * m.rho * md.omega_m2 * md.omega_m2;
    let mut r = ExpansionResult::new("2", branch, c(s * k0), k1);
    // φ∘ = ψ − ρω_M²(½+γ₁SL₀)⊥⁻¹P⊥K₂*ψ
    let k2 = series_block(SeriesKind::K2star, ops.surface(), ops.volume()).entries;
    let psi = ops.psi();
    let perp = ops.perp_inverse()?.apply(&matvec(&k2, &psi));
    r.density = Some(psi.iter().zip(&perp).map(|(p, q)| p - m.rho * md.omega_m2 * q).collect());
    r.put("omega_m", om);
    r.put("c_omega", md.c_omega);
    r.put("volume", md.volume);
    Ok(r)
}

pub fn expand_case2(scene: &Scene, branch: i8) -> Result<ExpansionResult> {
    require_case(scene, 2)?;
    expand_case2_with(&ReferenceOperators::from_scene(scene)?, scene, branch)
}

/// Case 3: κ∘ = v√ρ ω_M with leading pair u∘ = ρω_M²·1,
/// φ∘ = ψ − ρω_M²φ∘⊥, φ∘⊥ = (½+γ₁SL₀)⊥⁻¹P⊥γ₁N₀1.  κ^(1) is the
/// solvability condition of the order-ε equation D(u¹,φ¹) = −(E + κ^(1)∂_κD)(u∘,φ∘)
/// against the left null functional (u,φ) ↦ v⁻²⟨1,u⟩ + ⟨1,φ⟩, where E is
/// the order-ε block
///   [v₁² − κ²N₀,   κ²((v²SL₀ − κSL₁)P − SL₀P⊥)]
///   [−2ργ₁N₀,      κ²K₂*P − 2ργ₁SL₀P⊥ + (ρ₁ − ρ²)P].
pub fn expand_case3_with(ops: &ReferenceOperators, scene: &Scene, branch: i8) -> Result<ExpansionResult> {
    let s = sign(branch)?;
    let m = &scene.material;
    let md = &ops.minnaert;
    let (wv, wb) = (ops.wv(), ops.wb());
    let (nv, nb) = (wv.len(), wb.len());
    let v2 = m.v2;
    let v = v2.sqrt();
    let (rho, rho1) = (m.rho, m.rho1);
    let om2 = md.omega_m2;
    let kappa = c(s * v * rho.sqrt() * md.omega_m());
    let k2 = kappa * kappa;
    let pinv = ops.perp_inverse()?;
    let ones_v = vec![c(1.0); nv];
    let psi = ops.psi();
    let phi_perp0 = pinv.apply(&matvec(&ops.g1n0, &ones_v));
    let u0: Vec<C64> = vec![c(rho * om2); nv];
    let phi0: Vec<C64> = psi.iter().zip(&phi_perp0).map(|(p, q)| p - rho * om2 * q).collect();
    // E(u∘, φ∘)
    let p_phi = ops.p_star(&phi0);
    let q_phi = ops.p_perp(&phi0);
    let sl1 = series_block(SeriesKind::SL1, ops.surface(), ops.volume()).entries;
    let k2s = series_block(SeriesKind::K2star, ops.surface(), ops.volume()).entries;
    let n0u = matvec(&ops.n0, &u0);
    let sl0p = matvec(&ops.vsl0, &p_phi);
    let sl1p = matvec(&sl1, &p_phi);
    let sl0q = matvec(&ops.vsl0, &q_phi);
    let ev: Vec<C64> = (0..nv)
        .map(|i| m.v12 * u0[i] - k2 * n0u[i] + k2 * (v2 * sl0p[i] - kappa * sl1p[i] - sl0q[i]))
        .collect();
    let g1n0u = matvec(&ops.g1n0, &u0);
    let k2p = matvec(&k2s, &p_phi);
    let g0q = matvec(&ops.g0, &q_phi);
    let eb: Vec<C64> = (0..nb)
        .map(|i| -2.0 * rho * g1n0u[i] + k2 * k2p[i] - 2.0 * rho * g0q[i] + (rho1 - rho * rho) * p_phi[i])
        .collect();
    let l_e = wsum(wv, &ev) / v2 + wsum(wb, &eb);
    // ∂_κD(u∘,φ∘) = (−2κ SL₀Pφ∘, 0)
    let l_d = -2.0 * kappa * wsum(wv, &sl0p) / v2;
    let k1 = -l_e / l_d;
    let mut r = ExpansionResult::new("3", branch, kappa, k1);
    r.density = Some(phi0);
    r.put("omega_m", md.omega_m());
    r.put("c_omega", md.c_omega);
    r.put("volume", md.volume);
    r.put("solvability_numerator", l_e);
    r.put("solvability_denominator", l_d);
    Ok(r)
}

pub fn expand_case3(scene: &Scene, branch: i8) -> Result<ExpansionResult> {
    require_case(scene, 3)?;
    expand_case3_with(&ReferenceOperators::from_scene(scene)?, scene, branch)
}

/// Case 4, ν > 0: κ₀ = v√ν, κ^(1) = ±½√ν(ρv⟨γ₀u_ν,φ_ν⟩ + v₁²/v) with ‖u_ν‖ = 1.
/// The velocity term has the sign of dκ₀/dv² (κ₀ grows with v).
pub fn expand_case4_with(ops: &ReferenceOperators, scene: &Scene, mode: usize, branch: i8) -> Result<ExpansionResult> {
    let s = sign(branch)?;
    let m = &scene.material;
    let pairs = operators::neumann_eigenpairs_of(ops, mode + 2)?;
    let nus: Vec<f64> = pairs.iter().map(|p| p.nu).collect();
    check_simple(&nus, mode)?;
    let p = &pairs[mode];
    let un = linalg::wnorm(ops.wv(), &to_c(&p.u));
    let pairing = inner(ops.wb(), &to_c(&p.trace), &to_c(&p.phi)) / (un * un);
    let v = m.v2.sqrt();
    let sn = p.nu.sqrt();
    let k1 = s * 0.5 * sn * (m.rho * v * pairing + m.v12 / v);
    let mut r = ExpansionResult::new("4", branch, c(s * v * sn), k1);
    r.put("nu", p.nu);
    r.put("trace_pairing", pairing);
    Ok(r)
}

pub fn expand_case4(scene: &Scene, mode: usize, branch: i8) -> Result<ExpansionResult> {
    require_case(scene, 4)?;
    expand_case4_with(&ReferenceOperators::from_scene(scene)?, scene, mode, branch)
}

/// Case 4 zero-energy branch κ_±(ε) = ±v√ρ ω_M(1 + κ₁ε)√ε.
///
/// κ₁ = v₁²/(2v²) + ρ/2 + ρ₁/(2ρ) − ρ⟨1, N₀u₂ + SL₀φ₂⟩/(2|Ω|) with
/// u₂ = ω_M²·1, φ₂ = (½+γ₁SL₀)⊥⁻¹P⊥(2γ₁SL₀ψ − ω_M²γ₁N₀1), from the
/// t⁴-solvability condition of the pencil at ε = t², κ = tz.  The value
/// produced by the Lyapunov–Schmidt shortcut formula
/// ∂_ε∂²_κf₀/(4|Ω|) is reported as the intermediate `kappa1_shortcut`.
pub fn expand_case4_zero_with(ops: &ReferenceOperators, scene: &Scene, branch: i8) -> Result<ExpansionResult> {
    let s = sign(branch)?;
    let m = &scene.material;
    let md = &ops.minnaert;
    let wv = ops.wv();
    let nv = wv.len();
    let (v2, rho, om2, vol) = (m.v2, m.rho, md.omega_m2, md.volume);
    let pinv = ops.perp_inverse()?;
    let psi = ops.psi();
    let ones_v = vec![c(1.0); nv];
    let g0psi = matvec(&ops.g0, &psi);
    let g1n1 = matvec(&ops.g1n0, &ones_v);
    let n01 = matvec(&ops.n0, &ones_v);

    let rhs: Vec<C64> = g0psi.iter().zip(&g1n1).map(|(a, b)| 2.0 * a - om2 * b).collect();
    let phi2 = pinv.apply(&rhs);
    let sl_phi2 = matvec(&ops.vsl0, &phi2);
    let q: C64 = wsum(wv, &n01) * om2 + wsum(wv, &sl_phi2);
    let k1 = m.v12 / (2.0 * v2) + 0.5 * rho + m.rho1 / (2.0 * rho) - rho * q / (2.0 * vol);

    // shortcut formula with c₀ = 1
    let a = om2 / (1.0 + v2 * v2 * om2);
    let du: Vec<C64> = vec![c(-2.0 * rho * a); nv];
    let inner_rhs: Vec<C64> = (0..psi.len()).map(|i| g0psi[i] - a * (v2 * v2 * psi[i] - g1n1[i])).collect();
    let dphi: Vec<C64> = pinv.apply(&inner_rhs).iter().map(|z| -2.0 * rho * z).collect();
    let n_du = matvec(&ops.n0, &du);
    let sl_dphi = matvec(&ops.vsl0, &dphi);
    let mixed = -(wsum(wv, &n_du) + wsum(wv, &sl_dphi));
    let k1_shortcut = mixed / (4.0 * vol);

    let z0 = s * v2.sqrt() * rho.sqrt() * md.omega_m();
    let mut r = ExpansionResult::new("4-zero", branch, c(z0), c(0.0));
    r.kappa1_zero = Some(k1);
    r.put("omega_m", md.omega_m());
    r.put("c_omega", md.c_omega);
    r.put("volume", vol);
    r.put("mixed_derivative", mixed);
    r.put("kappa1_shortcut", k1_shortcut);
    Ok(r)
}

pub fn expand_case4_zero(scene: &Scene, branch: i8) -> Result<ExpansionResult> {
    require_case(scene, 4)?;
    expand_case4_zero_with(&ReferenceOperators::from_scene(scene)?, scene, branch)
}

/// Taylor data of the case-1 / case-4 pencil around ε = 0:
/// F(ε,κ) = F00 + κ²F02 + ε(F10 + κ³F13) + ε²F20 + O(ε²κ², ε³).
pub struct LimitPencil {
    pub f00: CMat,
    pub f02: CMat,
    pub f10: CMat,
    pub f13: CMat,
    pub f20: CMat,
    weights: Vec<f64>,
    nv: usize,
}

impl LimitPencil {
    pub fn new(ops: &ReferenceOperators, scene: &Scene, case: u8) -> Result<Self> {
        let m = &scene.material;
        let (wv, wb) = (ops.wv(), ops.wb());
        let (nv, nb) = (wv.len(), wb.len());
        let n = nv + nb;
        // boundary law r(ε) = r₀ + r₁ε + r₂ε²
        let (r0, r1, r2) = match case {
            1 => (0.0, -0.5 * m.rho1, 0.25 * m.rho1 * m.rho1),
            4 => (1.0, -2.0 * m.rho, 2.0 * m.rho * m.rho - 2.0 * m.rho1),
            _ => return Err(Error::Config(format!("limit pencil is defined for cases 1 and 4, not {case}"))),
        };
        let n1 = series_block(SeriesKind::N1, ops.surface(), ops.volume()).entries;
        let sl1 = series_block(SeriesKind::SL1, ops.surface(), ops.volume()).entries;
        let mut f00 = linalg::zeros(n, n);
        let mut f02 = linalg::zeros(n, n);
        let mut f10 = linalg::zeros(n, n);
        let mut f13 = linalg::zeros(n, n);
        let mut f20 = linalg::zeros(n, n);
        let neg = |a: &CMat| Mat::from_fn(a.nrows(), a.ncols(), |i, j| -a[(i, j)]);
        let scaled = |a: &CMat, s: f64| Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s);
        for i in 0..nv {
            f00[(i, i)] = c(m.v2);
            f10[(i, i)] = c(m.v12);
        }
        let half_g = Mat::from_fn(nb, nb, |i, j| ops.g0[(i, j)] * r0 + if i == j { 0.5 } else { 0.0 });
        linalg::set_block(&mut f00, nv, 0, &scaled(&ops.g1n0, r0));
        linalg::set_block(&mut f00, nv, nv, &half_g);
        linalg::set_block(&mut f02, 0, 0, &neg(&ops.n0));
        linalg::set_block(&mut f02, 0, nv, &neg(&ops.vsl0));
        linalg::set_block(&mut f10, nv, 0, &scaled(&ops.g1n0, r1));
        linalg::set_block(&mut f10, nv, nv, &scaled(&ops.g0, r1));
        linalg::set_block(&mut f13, 0, 0, &neg(&n1));
        linalg::set_block(&mut f13, 0, nv, &neg(&sl1));
        linalg::set_block(&mut f20, nv, 0, &scaled(&ops.g1n0, r2));
        linalg::set_block(&mut f20, nv, nv, &scaled(&ops.g0, r2));
        let mut weights = wv.to_vec();
        weights.extend_from_slice(wb);
        Ok(Self { f00, f02, f10, f13, f20, weights, nv })
    }

    fn combo(&self, terms: &[(&CMat, C64)]) -> CMat {
        let n = self.f00.nrows();
        Mat::from_fn(n, n, |i, j| terms.iter().map(|(m, s)| m[(i, j)] * s).sum())
    }

    /// Kernel point of F(0,·) near `seed` and the first-order coefficient
    /// κ^(1) = −ℓᴴ(F10 + κ₀³F13)x / ℓᴴ(2κ₀F02)x.
    pub fn regular_branch(&self, seed: C64) -> Result<(C64, C64)> {
        let lim = QuadraticPencil { a: &self.f00, b: &self.f02, weights: &self.weights };
        let res = refine(&lim, seed, &RefineOptions::default())?;
        let k0 = res.kappa;
        let f = lim.eval(k0)?;
        let x = res.vector;
        let l = left_null(&f, &x)?;
        let de = self.combo(&[(&self.f10, c(1.0)), (&self.f13, k0 * k0 * k0)]);
        let num = dot(&l, &matvec(&de, &x));
        let den = dot(&l, &matvec(&self.f02, &x)) * 2.0 * k0;
        Ok((k0, -num / den))
    }

    /// Zero branch of case 4 at the singular point κ = 0: returns (z₀, κ₁)
    /// with κ(ε) = z₀(1 + κ₁ε)√ε up to O(ε²), from the discrete
    /// t-expansion F00 + t²(F10 + z²F02) + t⁴F20, ε = t², κ = tz.
    pub fn zero_branch(&self, ops: &ReferenceOperators, branch: i8) -> Result<(C64, C64)> {
        let s = sign(branch)?;
        let nv = self.nv;
        let n = self.f00.nrows();
        let psit = ops.discrete_null_density()?;
        let mut r0 = vec![c(0.0); n];
        r0[nv..].copy_from_slice(&psit);
        // bordered factorisation F00 + a r₀ᴴ, a = continuum left null co-vector
        let v2 = self.f00[(0, 0)];
        let a: Vec<C64> = self.weights.iter().enumerate().map(|(i, w)| if i < nv { c(*w) / v2 } else { c(*w) }).collect();
        let m = Mat::from_fn(n, n, |i, j| self.f00[(i, j)] + a[i] * r0[j].conj());
        let lu = Lu::new(&m)?;
        let l = lu.solve_adjoint(&r0);
        let l_f02_r = dot(&l, &matvec(&self.f02, &r0));
        let z0sq = -dot(&l, &matvec(&self.f10, &r0)) / l_f02_r;
        let z0 = s * z0sq.sqrt();
        let a0 = self.combo(&[(&self.f10, c(1.0)), (&self.f02, z0sq)]);
        let rhs: Vec<C64> = matvec(&a0, &r0).iter().map(|z| -z).collect();
        let x2 = lu.solve(&rhs);
        let t4: Vec<C64> = matvec(&a0, &x2).iter().zip(matvec(&self.f20, &r0)).map(|(p, q)| p + q).collect();
        let z2 = -dot(&l, &t4) / (2.0 * z0 * l_f02_r);
        Ok((z0, z2 / z0))
    }
}

fn dot(l: &[C64], x: &[C64]) -> C64 {
    l.iter().zip(x).map(|(a, b)| a.conj() * b).sum()
}

/// Left null vector of a (numerically) singular F with right null vector x:
/// ℓ = (F + x xᴴ)⁻ᴴ x.
fn left_null(f: &CMat, x: &[C64]) -> Result<Vec<C64>> {
    let n = f.nrows();
    let m = Mat::from_fn(n, n, |i, j| f[(i, j)] + x[i] * x[j].conj());
    Ok(Lu::new(&m)?.solve_adjoint(x))
}

/// F(κ) = A + κ²B.
pub struct QuadraticPencil<'a> {
    pub a: &'a CMat,
    pub b: &'a CMat,
    pub weights: &'a [f64],
}

impl Pencil for QuadraticPencil<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn eval(&self, kappa: C64) -> Result<CMat> {
        let k2 = kappa * kappa;
        Ok(Mat::from_fn(self.a.nrows(), self.a.ncols(), |i, j| self.a[(i, j)] + k2 * self.b[(i, j)]))
    }

    fn deriv(&self, kappa: C64) -> Result<CMat> {
        Ok(Mat::from_fn(self.a.nrows(), self.a.ncols(), |i, j| 2.0 * kappa * self.b[(i, j)]))
    }

    fn weights(&self) -> Vec<f64> {
        self.weights.to_vec()
    }
}

/// Discrete (κ₀, κ^(1)) of a regular branch by Cauchy sampling of the
/// direct kernel point κ(ε) on the circle |ε| = δ: four Newton solves at
/// ε = δ·iᵏ; errors O(δ⁴).
pub fn first_order_by_sampling(
    scene: &Scene,
    case: u8,
    reduction: Reduction,
    seed0: C64,
    seed1: C64,
    delta: f64,
) -> Result<(C64, C64)> {
    let mut ks = Vec::with_capacity(4);
    let mut rot = c(1.0);
    for _ in 0..4 {
        let eps = rot * delta;
        let p = rescaled_pencil(scene, case, eps, SplitMode::Off, reduction)?;
        ks.push(refine(&p, seed0 + seed1 * eps, &RefineOptions::default())?.kappa);
        rot *= I;
    }
    let k0 = ks.iter().sum::<C64>() / 4.0;
    let mut k1 = c(0.0);
    let mut rot = c(1.0);
    for k in &ks {
        k1 += k / rot;
        rot *= I;
    }
    Ok((k0, k1 / (4.0 * delta)))
}
