use std::fs;
use std::path::{Path, PathBuf};

use acoustic_pencil::asymptotics::{
    expand_case1_with, expand_case2_with, expand_case3_with, expand_case4_with, expand_case4_zero_with,
    first_order_by_sampling, ExpansionResult, LimitPencil,
};
use acoustic_pencil::geometry::Scene;
use acoustic_pencil::linalg::c;
use acoustic_pencil::operators::{identity_report, neumann_eigenpairs_of, newton_spectrum_of, ReferenceOperators};
use acoustic_pencil::oracles::{first_j1_prime_root, radial_newton_top};
use acoustic_pencil::qfunction::{physical_pencil, BlockPencil, rescaled_pencil, Form, Pencil, Reduction, SplitMode};
use acoustic_pencil::resonance_finder::{fit_powers, refine, scan, sweep, RefineOptions, Resonance, SearchWindow};
use acoustic_pencil::C64;
use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{SceneConfig, ShapeKind};
use crate::svg::{self, Series};

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
    pub data: Value,
}

impl Summary {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            passed: true,
            checks: Vec::new(),
            warnings: Vec::new(),
            files: Vec::new(),
            data: Value::Null,
        }
    }

    /// Records `value ≤ bound`.
    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value <= bound, value, bound);
    }

    fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value >= bound, value, bound);
    }

    fn push(&mut self, name: &str, passed: bool, value: f64, bound: f64) {
        self.passed &= passed;
        self.checks.push(Check { name: name.into(), passed, value, bound });
    }

    pub fn failure(command: &str, err: &anyhow::Error) -> Self {
        let mut s = Self::new(command);
        s.passed = false;
        s.data = json!({ "error": format!("{err:#}") });
        s
    }
}

pub struct Run {
    pub cfg: SceneConfig,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Run {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn file(&self, s: &mut Summary, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let p = self.out.join(name);
        s.files.push(p.clone());
        Ok(p)
    }

    fn reference_ops(&self) -> Result<ReferenceOperators> {
        let (s, v) = self.cfg.reference()?;
        self.say(format!("assembling reference operators: {} surface / {} volume nodes", s.len(), v.len()));
        Ok(ReferenceOperators::new(&s, &v)?)
    }

    fn on_unit_sphere(&self) -> bool {
        self.cfg.shape.kind == ShapeKind::UnitSphere
    }

    pub fn identities(&self) -> Result<Summary> {
        let mut s = Summary::new("identities");
        let r = identity_report(&self.reference_ops()?)?;
        if self.on_unit_sphere() {
            s.at_most("single_layer_of_one", r.s0_one, 5e-3);
        }
        s.at_most("double_layer_of_one", r.k0_one, 1e-12);
        s.at_most("calderon", r.calderon, 1e-2);
        s.at_most("interior_jump", r.interior_flux, 1e-10);
        s.at_most("exterior_jump", r.exterior_flux, 1e-10);
        s.data = serde_json::to_value(&r)?;
        Ok(s)
    }

    pub fn minnaert(&self) -> Result<Summary> {
        let mut s = Summary::new("minnaert");
        let ops = self.reference_ops()?;
        let m = &ops.minnaert;
        if self.on_unit_sphere() {
            s.at_most("omega_m2_vs_3", (m.omega_m2 - 3.0).abs() / 3.0, 0.01);
        }
        let path = self.file(&mut s, "minnaert_density.csv")?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["x", "y", "z", "psi"])?;
        for (x, p) in ops.surface().nodes.iter().zip(&m.psi) {
            w.write_record([x[0], x[1], x[2], *p].map(|v| format!("{v:.15e}")))?;
        }
        w.flush()?;
        s.data = json!({
            "omega_m2": m.omega_m2,
            "omega_m": m.omega_m(),
            "c_omega": m.c_omega,
            "volume": m.volume,
        });
        Ok(s)
    }

    pub fn spectrum(&self) -> Result<Summary> {
        let mut s = Summary::new("spectrum");
        let sp = newton_spectrum_of(&self.reference_ops()?, 5)?;
        let worst = sp.residuals.iter().copied().fold(0.0, f64::max);
        s.at_most("eigen_residual", worst, 1e-8);
        let mut oracle = None;
        if self.on_unit_sphere() {
            let (lam, _) = radial_newton_top(2000);
            s.at_most("top_vs_radial_oracle", (sp.eigenvalues[0] - lam).abs() / lam, 0.01);
            oracle = Some(lam);
        }
        let path = self.file(&mut s, "newton_spectrum.csv")?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["index", "eigenvalue", "residual"])?;
        for (i, (l, r)) in sp.eigenvalues.iter().zip(&sp.residuals).enumerate() {
            w.write_record([i.to_string(), format!("{l:.15e}"), format!("{r:.3e}")])?;
        }
        w.flush()?;
        s.data = json!({ "eigenvalues": sp.eigenvalues, "residuals": sp.residuals, "radial_oracle": oracle });
        Ok(s)
    }

    pub fn neumann(&self) -> Result<Summary> {
        let mut s = Summary::new("neumann");
        let pairs = neumann_eigenpairs_of(&self.reference_ops()?, 4)?;
        let nus: Vec<f64> = pairs.iter().map(|p| p.nu).collect();
        let mut oracle = None;
        if self.on_unit_sphere() {
            let x = first_j1_prime_root();
            s.at_most("first_vs_bessel_root", (nus[0] - x * x).abs() / (x * x), 0.02);
            oracle = Some(x * x);
        }
        let path = self.file(&mut s, "neumann_eigenvalues.csv")?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["index", "nu", "phi_residual"])?;
        for (i, p) in pairs.iter().enumerate() {
            w.write_record([i.to_string(), format!("{:.15e}", p.nu), format!("{:.3e}", p.phi_residual)])?;
        }
        w.flush()?;
        let res: Vec<f64> = pairs.iter().map(|p| p.phi_residual).collect();
        s.data = json!({ "nu": nus, "phi_residuals": res, "bessel_oracle": oracle });
        Ok(s)
    }

    /// Reduced unknown set when one block of the rescaled pencil decouples.
    fn reduction(&self) -> Reduction {
        let m = &self.cfg.material;
        match self.cfg.case() {
            Some(2) if m.v12 == 0.0 && m.v2.is_one() => Reduction::Boundary,
            Some(1) if m.rho1 == 0.0 && m.rho.is_one() => Reduction::Volume,
            _ => Reduction::None,
        }
    }

    fn rescaled(&self, scene: &Scene, case: u8, eps: f64) -> acoustic_pencil::Result<BlockPencil> {
        rescaled_pencil(scene, case, c(eps), SplitMode::Off, self.reduction())
    }

    fn eps_list(&self) -> Result<Vec<f64>> {
        let e = &self.cfg.solver.eps_list;
        if e.is_empty() {
            bail!("solver.eps_list (or --eps) is required for scaling cases");
        }
        Ok(e.clone())
    }

    /// Scans the window and Newton-refines every seed, keeping distinct
    /// converged points inside the window.
    fn scan_refine<P: Pencil>(&self, p: &P, w: &SearchWindow, s: &mut Summary) -> Result<Vec<Resonance>> {
        let opts = RefineOptions { window: Some(*w), ..self.cfg.refine_options() };
        let mut out: Vec<Resonance> = Vec::new();
        for seed in scan(p, w)? {
            match refine(p, seed, &opts) {
                Ok(r) => {
                    let tol = 1e-8 * r.kappa.norm().max(1.0);
                    if !out.iter().any(|q| (q.kappa - r.kappa).norm() <= tol) {
                        out.push(r);
                    }
                }
                Err(e) => s.warnings.push(format!("seed {seed}: {e}")),
            }
        }
        Ok(out)
    }

    pub fn resonances(&self) -> Result<Summary> {
        let mut s = Summary::new("resonances");
        let w = self.cfg.window()?.context("solver.window is required for the resonances command")?;
        let scene = self.cfg.scene()?;
        let mut found: Vec<Resonance> = Vec::new();
        let mut branch: Option<Tracked> = None;
        match self.cfg.case() {
            None => {
                let form = if self.cfg.material.rho_inf || self.cfg.material.v_inf { Form::GeneralWZ } else { Form::Full };
                let p = physical_pencil(&scene, form)?;
                found = self.scan_refine(&p, &w, &mut s)?;
            }
            Some(case) => {
                for e in self.eps_list()? {
                    self.say(format!("scanning ε = {e}"));
                    let p = self.rescaled(&scene, case, e)?;
                    for mut r in self.scan_refine(&p, &w, &mut s)? {
                        r.eps = Some(e);
                        r.case = Some(case);
                        found.push(r);
                    }
                }
                if scene.n_inclusions() == 1 {
                    match self.track(&scene, case) {
                        Ok(t) => branch = Some(t),
                        Err(e) => s.warnings.push(format!("branch tracking failed: {e:#}")),
                    }
                } else {
                    s.warnings.push("asymptotic branch tracking needs a single inclusion".into());
                }
            }
        }
        if found.is_empty() {
            if self.cfg.is_free() {
                s.warnings.push("free scene (v = rho = 1): no resonances exist".into());
            } else {
                s.push("resonances_found", false, 0.0, 1.0);
            }
        }
        let max_im = found.iter().map(|r| r.kappa.im).fold(f64::NEG_INFINITY, f64::max);
        if !found.is_empty() {
            s.at_most("max_imaginary_part", max_im, 1e-6);
        }

        let path = self.file(&mut s, "resonances.csv")?;
        let mut wr = csv::Writer::from_path(&path)?;
        wr.write_record([
            "case", "eps", "re", "im", "residual", "iters", "re_sqrt_eps", "im_sqrt_eps", "asym_re", "asym_im", "gap",
            "slope",
        ])?;
        let fmt = |x: f64| format!("{x:.10e}");
        for r in &found {
            let mut rec = r.csv_record();
            let (norm, asym) = match (r.eps, &branch) {
                (Some(e), Some(t)) => {
                    let a = t.formula.predict(e);
                    let on = t.rows.iter().any(|(te, k)| *te == e && (k - r.kappa).norm() <= 1e-6 * k.norm().max(1.0));
                    (Some(r.kappa / e.sqrt()), if on { Some((a, (r.kappa - t.discrete(e)).norm())) } else { None })
                }
                (Some(e), None) => (Some(r.kappa / e.sqrt()), None),
                _ => (None, None),
            };
            rec.push(norm.map(|z| fmt(z.re)).unwrap_or_default());
            rec.push(norm.map(|z| fmt(z.im)).unwrap_or_default());
            match asym {
                Some((a, gap)) => {
                    rec.push(fmt(a.re));
                    rec.push(fmt(a.im));
                    rec.push(fmt(gap));
                    rec.push(branch.as_ref().and_then(|t| t.slope).map(|x| format!("{x:.4}")).unwrap_or_default());
                }
                None => rec.extend(std::iter::repeat(String::new()).take(4)),
            }
            wr.write_record(&rec)?;
        }
        wr.flush()?;

        let pts: Vec<C64> = found.iter().map(|r| r.kappa).collect();
        let asym: Vec<C64> = match &branch {
            Some(t) => t.rows.iter().map(|(e, _)| t.formula.predict(*e)).collect(),
            None => Vec::new(),
        };
        let plot = svg::scatter(
            "resonances κ*",
            &[
                Series { label: "direct κ*", color: "#1f77b4", cross: false, points: &pts },
                Series { label: "asymptotic", color: "#d62728", cross: true, points: &asym },
            ],
        );
        let svg_path = self.file(&mut s, "resonances.svg")?;
        fs::write(&svg_path, plot)?;
        s.data = json!({
            "count": found.len(),
            "resonances": found.iter().map(|r| json!({"eps": r.eps, "kappa": r.kappa, "residual": r.residual})).collect::<Vec<_>>(),
            "branch_slope": branch.as_ref().and_then(|t| t.slope),
        });
        Ok(s)
    }

    /// Leading terms of the configured branch and its direct sweep.
    fn track(&self, scene: &Scene, case: u8) -> Result<Tracked> {
        let m = &self.cfg.material;
        let ops = ReferenceOperators::from_scene(scene)?;
        let red = self.reduction();
        let (formula, k0, k1) = match case {
            1 => {
                let f = expand_case1_with(&ops, scene, m.mode, m.branch)?;
                let (k0, k1) = LimitPencil::new(&ops, scene, 1)?.regular_branch(f.kappa0)?;
                (f, k0, k1)
            }
            2 | 3 => {
                let f = if case == 2 { expand_case2_with(&ops, scene, m.branch)? } else { expand_case3_with(&ops, scene, m.branch)? };
                let (k0, k1) = first_order_by_sampling(scene, case, red, f.kappa0, f.kappa1, 1e-2)?;
                (f, k0, k1)
            }
            4 if m.zero_branch => {
                let f = expand_case4_zero_with(&ops, scene, m.branch)?;
                let (z0, k1) = LimitPencil::new(&ops, scene, 4)?.zero_branch(&ops, m.branch)?;
                (f, z0, k1)
            }
            4 => {
                let f = expand_case4_with(&ops, scene, m.mode, m.branch)?;
                let (k0, k1) = LimitPencil::new(&ops, scene, 4)?.regular_branch(f.kappa0)?;
                (f, k0, k1)
            }
            _ => bail!("case {case} is not one of 1..=4"),
        };
        let zero = formula.kappa1_zero.is_some();
        let mut t = Tracked { formula, k0, k1, zero, rows: Vec::new(), slope: None };
        let eps = self.eps_list()?;
        let predict = |e: f64| t.discrete(e);
        let res = sweep(
            &eps,
            |e| self.rescaled(scene, case, e),
            predict(eps[0]),
            Some(predict),
            |e| e,
            &self.cfg.refine_options(),
            Some(case),
        )?;
        t.slope = res.slope;
        t.rows = res.rows.iter().map(|r| (r.eps, r.resonance.kappa)).collect();
        Ok(t)
    }

    pub fn compare(&self) -> Result<Summary> {
        let mut s = Summary::new("compare");
        let case = self.cfg.case().context("compare needs a scaling case (material.case 1..4 or --case)")?;
        let scene = self.cfg.scene()?;
        if scene.n_inclusions() != 1 {
            bail!("compare treats a single inclusion");
        }
        let eps = self.eps_list()?;
        if eps.len() < 3 {
            bail!("compare needs at least three ε values to fit the remainder order");
        }
        let t = self.track(&scene, case)?;
        let path = self.file(&mut s, "compare.csv")?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "eps", "direct_re", "direct_im", "formula_re", "formula_im", "leading_re", "leading_im", "abs_gap_formula",
            "rel_gap_formula", "abs_gap_leading",
        ])?;
        let fmt = |x: f64| format!("{x:.10e}");
        let mut rows = Vec::new();
        for (e, k) in &t.rows {
            let f = t.formula.predict(*e);
            let d = t.discrete(*e);
            let (gf, gd) = ((k - f).norm(), (k - d).norm());
            w.write_record([*e, k.re, k.im, f.re, f.im, d.re, d.im, gf, gf / k.norm(), gd].map(fmt))?;
            rows.push(json!({"eps": e, "direct": k, "formula": f, "leading": d, "abs_gap_formula": gf, "abs_gap_leading": gd}));
        }
        w.flush()?;

        let ks: Vec<C64> = t.rows.iter().map(|(_, k)| *k).collect();
        let (fitted, formula_k1) = if t.zero {
            let ts: Vec<f64> = eps.iter().map(|e| e.sqrt()).collect();
            let scaled: Vec<C64> = ks.iter().zip(&ts).map(|(k, t)| k / *t).collect();
            (fit_powers(&ts, &scaled, t.k0, &[2.0, 3.0])?[0] / t.k0, t.formula.kappa1_zero.unwrap_or_default())
        } else {
            (fit_powers(&eps, &ks, t.k0, &[1.0, 2.0])?[0], t.formula.kappa1)
        };
        let slope = t.slope.unwrap_or(f64::NAN);
        s.at_least("remainder_order", slope, 1.6);
        s.at_most("fitted_kappa1_vs_formula", (fitted - formula_k1).norm() / formula_k1.norm(), 0.2);
        s.at_most("max_imaginary_part", ks.iter().map(|k| k.im).fold(f64::NEG_INFINITY, f64::max), 1e-6);
        self.say(format!("remainder order {slope:.2}, fitted κ1 {fitted:.5} vs formula {formula_k1:.5}"));
        s.data = json!({
            "case": t.formula.case,
            "kappa0_formula": t.formula.kappa0,
            "kappa1_formula": formula_k1,
            "kappa0_leading": t.k0,
            "kappa1_leading": t.k1,
            "kappa1_fitted": fitted,
            "remainder_order": t.slope,
            "intermediates": t.formula.intermediates,
            "rows": rows,
        });
        Ok(s)
    }
}

struct Tracked {
    formula: ExpansionResult,
    k0: C64,
    k1: C64,
    zero: bool,
    rows: Vec<(f64, C64)>,
    slope: Option<f64>,
}

impl Tracked {
    /// κ₀ + κ₁ε, or κ₀(1 + κ₁ε)√ε, from the discrete-consistent terms.
    fn discrete(&self, e: f64) -> C64 {
        if self.zero {
            self.k0 * (1.0 + self.k1 * e) * e.sqrt()
        } else {
            self.k0 + self.k1 * e
        }
    }
}

pub fn write_summary(out: &Path, s: &Summary) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let p = out.join(format!("{}.json", s.command));
    fs::write(&p, serde_json::to_string_pretty(s)?)?;
    Ok(p)
}
