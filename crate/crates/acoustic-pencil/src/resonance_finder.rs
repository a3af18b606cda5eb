//! Resonances as kernel points of a pencil: σ_min grid scan, Newton
//! refinement on the augmented system {F(κ)x = 0, cᴴx = 1}, and ε-sweeps
//! that track one branch.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, norm2, Lu};
use crate::qfunction::{sigma_min_weighted, Pencil};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchWindow {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl SearchWindow {
    pub fn new(re: (f64, f64), im: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if !(re.0 < re.1 && im.0 < im.1) {
            return Err(Error::Config(format!("empty search window re {re:?} im {im:?}")));
        }
        if nx < 8 || ny < 8 {
            return Err(Error::Config(format!("grid {nx}×{ny} is below 8×8")));
        }
        Ok(Self { re, im, nx, ny })
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        let x = self.re.0 + (self.re.1 - self.re.0) * i as f64 / (self.nx - 1) as f64;
        let y = self.im.0 + (self.im.1 - self.im.0) * j as f64 / (self.ny - 1) as f64;
        C64::new(x, y)
    }

    /// Membership with a relative margin on each side.
    pub fn contains(&self, z: C64, margin: f64) -> bool {
        let mx = margin * (self.re.1 - self.re.0);
        let my = margin * (self.im.1 - self.im.0);
        z.re >= self.re.0 - mx && z.re <= self.re.1 + mx && z.im >= self.im.0 - my && z.im <= self.im.1 + my
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Resonance {
    pub kappa: C64,
    /// Kernel vector, unit Euclidean norm.
    #[serde(skip)]
    pub vector: Vec<C64>,
    /// ‖F(κ*)x‖ / (‖F(κ*)‖·‖x‖), weighted norms.
    pub residual: f64,
    pub newton_iters: usize,
    pub eps: Option<f64>,
    pub case: Option<u8>,
}

impl Resonance {
    /// CSV record: case, ε, Re κ, Im κ, residual, iters.
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.case.map(|c| c.to_string()).unwrap_or_else(|| "fixed".into()),
            self.eps.map(|e| format!("{e}")).unwrap_or_default(),
            format!("{:.15e}", self.kappa.re),
            format!("{:.15e}", self.kappa.im),
            format!("{:.3e}", self.residual),
            self.newton_iters.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    /// Stop when |Δκ| ≤ tol·max(1, |κ|).
    pub tol: f64,
    pub max_iters: usize,
    pub window: Option<SearchWindow>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iters: 25, window: None }
    }
}

/// σ_min of the weight-symmetrised pencil on the window grid (row-major in
/// the imaginary direction: index j·nx + i).
pub fn sigma_grid<P: Pencil + ?Sized>(p: &P, w: &SearchWindow) -> Result<Vec<f64>> {
    let weights = p.weights();
    (0..w.nx * w.ny)
        .into_par_iter()
        .map(|k| {
            let z = w.point(k % w.nx, k / w.nx);
            let m = p.eval(z)?;
            sigma_min_weighted(&m, &weights, false)
        })
        .collect()
}

/// Strict interior local minima of σ_min below median/10.
pub fn local_minima(w: &SearchWindow, sigma: &[f64]) -> Vec<C64> {
    let mut sorted = sigma.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let threshold = median / 10.0;
    let at = |i: usize, j: usize| sigma[j * w.nx + i];
    let mut out = Vec::new();
    for j in 1..w.ny - 1 {
        for i in 1..w.nx - 1 {
            let s = at(i, j);
            if s >= threshold {
                continue;
            }
            let strict = (-1i32..=1).all(|dj| {
                (-1i32..=1).all(|di| {
                    (di == 0 && dj == 0) || s < at((i as i32 + di) as usize, (j as i32 + dj) as usize)
                })
            });
            if strict {
                out.push(w.point(i, j));
            }
        }
    }
    out
}

pub fn scan<P: Pencil + ?Sized>(p: &P, w: &SearchWindow) -> Result<Vec<C64>> {
    let sigma = sigma_grid(p, w)?;
    Ok(local_minima(w, &sigma))
}

/// Weighted 2-norm estimate of F by power iteration on FᴴF.
fn weighted_norm_estimate(f: &linalg::CMat, sw: &[f64]) -> f64 {
    let n = f.ncols();
    let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0 + (i % 7) as f64 * 0.1, 0.0)).collect();
    let mut est = 0.0;
    for _ in 0..30 {
        // y = D^{½} F D^{-½} x
        let xs: Vec<C64> = x.iter().zip(sw).map(|(v, s)| v / *s).collect();
        let y: Vec<C64> = linalg::matvec(f, &xs).iter().zip(sw).map(|(v, s)| v * *s).collect();
        let ys: Vec<C64> = y.iter().zip(sw).map(|(v, s)| v * *s).collect();
        let z: Vec<C64> = linalg::matvec_adjoint(f, &ys).iter().zip(sw).map(|(v, s)| v / *s).collect();
        let nz = norm2(&z);
        let new = (nz / norm2(&x)).sqrt();
        x = z.iter().map(|v| v / nz).collect();
        if (new - est).abs() <= 1e-6 * new {
            return new;
        }
        est = new;
    }
    est
}

fn relative_residual(f: &linalg::CMat, x: &[C64], sw: &[f64]) -> f64 {
    let w: Vec<f64> = sw.iter().map(|s| s * s).collect();
    let r = linalg::matvec(f, x);
    let nf = weighted_norm_estimate(f, sw);
    linalg::wnorm(&w, &r) / (nf * linalg::wnorm(&w, x))
}

/// Newton iteration on the augmented system; c is the smallest right
/// singular vector at the seed.
pub fn refine<P: Pencil + ?Sized>(p: &P, seed: C64, opts: &RefineOptions) -> Result<Resonance> {
    let sw: Vec<f64> = p.weights().iter().map(|w| w.sqrt()).collect();
    let mut kappa = seed;
    let f0 = p.eval(kappa)?;
    let lu = match Lu::new(&f0) {
        Ok(lu) => lu,
        Err(_) => {
            let (_, x) = linalg::smallest_singular(&f0, usize::MAX)?;
            let residual = relative_residual(&f0, &x, &sw);
            return Ok(Resonance { kappa, vector: x, residual, newton_iters: 0, eps: None, case: None });
        }
    };
    // c: a few inverse-iteration steps on FᴴF at the seed
    let mut x: Vec<C64> = vec![C64::new(1.0, 0.0); p.dim()];
    for _ in 0..8 {
        let y = lu.solve(&lu.solve_adjoint(&x));
        let ny = norm2(&y);
        x = y.iter().map(|v| v / ny).collect();
    }
    let c = x.clone();
    let mut lu = Some(lu);
    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iters {
        let cur = match lu.take() {
            Some(l) => l,
            None => match Lu::new(&p.eval(kappa)?) {
                Ok(l) => l,
                Err(_) => {
                    converged = true;
                    break;
                }
            },
        };
        let df = p.deriv(kappa)?;
        let u = cur.solve(&linalg::matvec(&df, &x));
        let s: C64 = c.iter().zip(&u).map(|(a, b)| a.conj() * b).sum();
        if !(s.norm() > 0.0) || !s.is_finite() {
            // u orthogonal to c or overflow: F(κ) is (numerically) singular here
            converged = true;
            break;
        }
        let dk = -1.0 / s;
        x = u.iter().map(|v| v / s).collect();
        kappa += dk;
        iters += 1;
        if !kappa.is_finite() {
            return Err(Error::Convergence("Newton iterate is not finite".into()));
        }
        if let Some(w) = &opts.window {
            if !w.contains(kappa, 0.5) {
                return Err(Error::Convergence(format!("Newton iterate {kappa} left the window")));
            }
        }
        if dk.norm() <= opts.tol * kappa.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence(format!("no convergence in {} Newton steps near {kappa}", opts.max_iters)));
    }
    // certify: one inverse-iteration step at κ*
    let f = p.eval(kappa)?;
    let xv = match Lu::new(&f) {
        Ok(l) => l.solve(&x),
        Err(_) => linalg::smallest_singular(&f, usize::MAX)?.1,
    };
    let n = norm2(&xv);
    let xv: Vec<C64> = xv.iter().map(|v| v / n).collect();
    let residual = relative_residual(&f, &xv, &sw);
    Ok(Resonance { kappa, vector: xv, residual, newton_iters: iters, eps: None, case: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub resonance: Resonance,
    pub asymptotic: Option<C64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of log|κ* − κ_asym| against log(parameter).
    pub slope: Option<f64>,
}

/// Tracks one branch over a decreasing ε list.  Each ε is seeded from the
/// previous κ* shifted by the predicted increment (when a prediction is
/// supplied).  `param` maps ε to the small parameter of the slope fit.
pub fn sweep<P, M, F, G>(
    eps: &[f64],
    make: M,
    seed: C64,
    predict: Option<F>,
    param: G,
    opts: &RefineOptions,
    case: Option<u8>,
) -> Result<SweepResult>
where
    P: Pencil,
    M: Fn(f64) -> Result<P>,
    F: Fn(f64) -> C64,
    G: Fn(f64) -> f64,
{
    if eps.is_empty() || eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("ε list must be positive and strictly decreasing".into()));
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut prev: Option<(f64, C64)> = None;
    for &e in eps {
        let s = match (prev, &predict) {
            (None, Some(f)) => f(e),
            (None, None) => seed,
            (Some((pe, pk)), Some(f)) => pk + (f(e) - f(pe)),
            (Some((_, pk)), None) => pk,
        };
        let p = make(e)?;
        let mut r = refine(&p, s, opts).map_err(|err| Error::Convergence(format!("branch lost at ε = {e}: {err}")))?;
        r.eps = Some(e);
        r.case = case;
        let asym = predict.as_ref().map(|f| f(e));
        let gap = asym.map(|a| (r.kappa - a).norm());
        prev = Some((e, r.kappa));
        rows.push(SweepRow { eps: e, resonance: r, asymptotic: asym, gap });
    }
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.gap.is_some_and(|g| g > 0.0)) {
        let x: Vec<f64> = rows.iter().map(|r| param(r.eps)).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.gap.unwrap()).collect();
        Some(linalg::loglog_slope(&x, &y))
    } else {
        None
    };
    Ok(SweepResult { rows, slope })
}

/// Least-squares coefficients c_k of κ(s) − κ₀ ≈ Σ c_k s^{p_k}.
pub fn fit_powers(s: &[f64], kappa: &[C64], kappa0: C64, powers: &[f64]) -> Result<Vec<C64>> {
    let (m, n) = (s.len(), powers.len());
    if n == 0 || m < n || kappa.len() != m {
        return Err(Error::Config(format!("{m} samples cannot fit {n} powers")));
    }
    let a = linalg::CMat::from_fn(n, n, |i, j| {
        C64::new(s.iter().map(|x| x.powf(powers[i] + powers[j])).sum(), 0.0)
    });
    let rhs: Vec<C64> = (0..n)
        .map(|i| s.iter().zip(kappa).map(|(x, k)| (k - kappa0) * x.powf(powers[i])).sum())
        .collect();
    Ok(Lu::new(&a)?.solve(&rhs))
}

/// Least-squares fit κ(s) ≈ κ₀ + a·s + b·s² through the branch points, with
/// κ₀ fixed; returns (a, b).
pub fn fit_first_order(s: &[f64], kappa: &[C64], kappa0: C64) -> (C64, C64) {
    match fit_powers(s, kappa, kappa0, &[1.0, 2.0]) {
        Ok(c) => (c[0], c[1]),
        Err(_) => (C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0)),
    }
}
