//! Acceptance suite: one PASS/FAIL line per criterion.  Runs without the
//! libtest harness so the lines are visible in a plain `cargo test`.

use std::process::ExitCode;
use std::time::Instant;

use acoustic_pencil::asymptotics::{
    expand_case1_with, expand_case2_with, expand_case4_with, expand_case4_zero_with, first_order_by_sampling,
    LimitPencil,
};
use acoustic_pencil::geometry::{
    make_ball_volume_quadrature, make_ellipsoid_surface_quadrature, make_ellipsoid_volume_quadrature,
    make_unit_sphere_quadrature, Material, Scene, SurfaceQuadrature, VolumeQuadrature, P3,
};
use acoustic_pencil::linalg::c;
use acoustic_pencil::operators::{
    identity_report, minnaert, neumann_eigenpairs_of, newton_spectrum_of, series_identity_deviation,
    ReferenceOperators,
};
use acoustic_pencil::oracles::{first_j1_prime_root, radial_newton_top};
use acoustic_pencil::qfunction::{assemble_q, physical_pencil, rescaled_pencil, Form, Reduction, SplitMode};
use acoustic_pencil::resolvent_probe::{apply_resolvent_difference, pseudo_resolvent_residual, GaussianSource};
use acoustic_pencil::resonance_finder::{
    fit_powers, refine, scan, sigma_grid, sweep, RefineOptions, SearchWindow, SweepResult,
};
use acoustic_pencil::C64;
use rand::{rngs::StdRng, Rng, SeedableRng};

type Outcome = Result<(bool, String), acoustic_pencil::Error>;

const EPS: [f64; 3] = [0.08, 0.04, 0.02];

fn sphere(ns: usize, nv: usize) -> (SurfaceQuadrature, VolumeQuadrature) {
    (make_unit_sphere_quadrature(ns).unwrap(), make_ball_volume_quadrature(nv).unwrap())
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn in_band(slope: f64) -> bool {
    (slope - 2.0).abs() <= 0.4
}

fn layer_identities(ops: &ReferenceOperators) -> Outcome {
    let r = identity_report(ops)?;
    let ok = r.s0_one <= 5e-3
        && r.k0_one <= 1e-12
        && r.calderon <= 1e-2
        && r.interior_flux <= 1e-10
        && r.exterior_flux <= 1e-10;
    Ok((
        ok,
        format!(
            "|S0·1-1|max={:.2e} |K0·1+1/2|max={:.1e} calderon={:.2e} jump(-)={:.1e} jump(+)={:.1e}",
            r.s0_one, r.k0_one, r.calderon, r.interior_flux, r.exterior_flux
        ),
    ))
}

fn minnaert_value(ops: &ReferenceOperators) -> Outcome {
    let (s, v) = sphere(162, 256);
    let coarse = minnaert(&Scene::single(s, v, Material::fixed(1.0, 1.0))?)?.omega_m2;
    let fine = ops.minnaert.omega_m2;
    let ok = (fine - 3.0).abs() <= 0.03 && (fine - 3.0).abs() < (coarse - 3.0).abs();
    Ok((ok, format!("omega_M^2 = {coarse:.4} (320 panels) -> {fine:.4} (1280 panels), target 3")))
}

fn series(ops: &ReferenceOperators) -> Outcome {
    let (d2, d3) = series_identity_deviation(ops)?;
    Ok((d2 <= 0.02 && d3 <= 0.02, format!("K2* deviation {d2:.2e}, K3* deviation {d3:.2e} (bound 2e-2)")))
}

fn newton_top(ops: &ReferenceOperators) -> Outcome {
    let sp = newton_spectrum_of(ops, 3)?;
    let (lam, _) = radial_newton_top(2000);
    let e = (sp.eigenvalues[0] - lam).abs() / lam;
    Ok((e <= 0.01, format!("lambda_max {:.5} vs radial {lam:.5}, rel {e:.2e}", sp.eigenvalues[0])))
}

fn neumann(ops: &ReferenceOperators) -> Outcome {
    let p = neumann_eigenpairs_of(ops, 3)?;
    let x = first_j1_prime_root();
    let e = (p[0].nu - x * x).abs() / (x * x);
    Ok((e <= 0.02, format!("nu_1 {:.4} vs {:.4}, rel {e:.2e}", p[0].nu, x * x)))
}

fn gaps(r: &SweepResult) -> String {
    r.rows.iter().map(|x| format!("{:.2e}", x.gap.unwrap_or(f64::NAN))).collect::<Vec<_>>().join(",")
}

fn case2(s: &SurfaceQuadrature, v: &VolumeQuadrature, found: &mut Vec<C64>) -> Outcome {
    let sc = Scene::single(s.clone(), v.clone(), Material::scaling(2, 1.0, 0.0, 1.0, 0.0))?;
    let ops = ReferenceOperators::from_scene(&sc)?;
    let f = expand_case2_with(&ops, &sc, 1)?;
    let (k0, k1) = first_order_by_sampling(&sc, 2, Reduction::Boundary, f.kappa0, f.kappa1, 1e-2)?;
    let make = |e: f64| rescaled_pencil(&sc, 2, c(e), SplitMode::Off, Reduction::Boundary);
    let r = sweep(&EPS, make, k0, Some(|e: f64| k0 + k1 * e), |e| e, &RefineOptions::default(), Some(2))?;
    found.extend(r.rows.iter().map(|x| x.resonance.kappa));
    let slope = r.slope.unwrap_or(f64::NAN);
    let last = r.rows.last().unwrap().resonance.kappa;
    let exact = C64::new(3f64.sqrt(), -1.5 * 0.02);
    let gap = (last - exact).norm();
    Ok((
        in_band(slope) && gap <= 5e-3,
        format!("slope {slope:.2} (gaps {}), |kappa* - (sqrt3 - 1.5i eps)| at eps=0.02: {gap:.2e}", gaps(&r)),
    ))
}

fn case1(s: &SurfaceQuadrature, v: &VolumeQuadrature, found: &mut Vec<C64>) -> Outcome {
    let ops = ReferenceOperators::new(s, v)?;
    let run = |mat: Material, red: Reduction, found: &mut Vec<C64>| -> Result<_, acoustic_pencil::Error> {
        let sc = Scene::single(s.clone(), v.clone(), mat)?;
        let f = expand_case1_with(&ops, &sc, 0, 1)?;
        let (k0, k1) = LimitPencil::new(&ops, &sc, 1)?.regular_branch(f.kappa0)?;
        let make = |e: f64| rescaled_pencil(&sc, 1, c(e), SplitMode::Off, red);
        let r = sweep(&EPS, make, k0, Some(|e: f64| k0 + k1 * e), |e| e, &RefineOptions::default(), Some(1))?;
        found.extend(r.rows.iter().map(|x| x.resonance.kappa));
        let ks: Vec<C64> = r.rows.iter().map(|x| x.resonance.kappa).collect();
        let fit = fit_powers(&EPS, &ks, k0, &[1.0, 2.0])?;
        Ok((f, r, fit[0]))
    };
    let (f, r, fit) = run(Material::scaling(1, 1.0, 0.0, 1.0, 0.0), Reduction::Volume, found)?;
    let slope = r.slope.unwrap_or(f64::NAN);
    let im = (f.kappa1.im - fit.im).abs() / fit.im.abs();
    let (_, g, _) = run(Material::scaling(1, 1.2, 0.3, 1.0, 0.5), Reduction::None, found)?;
    let gslope = g.slope.unwrap_or(f64::NAN);
    Ok((
        slope >= 1.6 && in_band(gslope) && im <= 0.1,
        format!(
            "v=1: slope {slope:.2} (second-order term vanishes; need >= 1.6), Im k1 formula {:.5} vs fit {:.5} \
             (rel {im:.1e}); generic v^2=1.2: slope {gslope:.2}",
            f.kappa1.im, fit.im
        ),
    ))
}

fn case4(found: &mut Vec<C64>) -> Outcome {
    let ax = [1.0, 0.9, 0.8];
    let s = make_ellipsoid_surface_quadrature(642, ax)?;
    let v = make_ellipsoid_volume_quadrature(960, ax)?;
    let sc = Scene::single(s, v, Material::scaling(4, 1.2, 0.3, 0.7, 0.2))?;
    let ops = ReferenceOperators::from_scene(&sc)?;
    let f = expand_case4_with(&ops, &sc, 0, 1)?;
    let (k0, k1) = LimitPencil::new(&ops, &sc, 4)?.regular_branch(f.kappa0)?;
    let make = |e: f64| rescaled_pencil(&sc, 4, c(e), SplitMode::Off, Reduction::None);
    let r = sweep(&EPS, make, k0, Some(|e: f64| k0 + k1 * e), |e| e, &RefineOptions::default(), Some(4))?;
    found.extend(r.rows.iter().map(|x| x.resonance.kappa));
    let ks: Vec<C64> = r.rows.iter().map(|x| x.resonance.kappa).collect();
    let fit = fit_powers(&EPS, &ks, k0, &[1.0, 2.0])?[0];
    let slope = r.slope.unwrap_or(f64::NAN);
    let e = rel(fit, f.kappa1);
    Ok((
        in_band(slope) && e <= 0.2,
        format!("ellipsoid (1,0.9,0.8): slope {slope:.2}, fitted k1 {:.4} vs formula {:.4} (rel {e:.1e})", fit.re, f.kappa1.re),
    ))
}

fn case4_zero(s: &SurfaceQuadrature, v: &VolumeQuadrature, found: &mut Vec<C64>) -> Outcome {
    let sc = Scene::single(s.clone(), v.clone(), Material::scaling(4, 1.0, 0.0, 1.0, 0.0))?;
    let ops = ReferenceOperators::from_scene(&sc)?;
    let f = expand_case4_zero_with(&ops, &sc, 1)?;
    let (z0, k1) = LimitPencil::new(&ops, &sc, 4)?.zero_branch(&ops, 1)?;
    let eps = [0.04, 0.02, 0.01];
    let make = |e: f64| rescaled_pencil(&sc, 4, c(e), SplitMode::Off, Reduction::None);
    let predict = |e: f64| z0 * (1.0 + k1 * e) * e.sqrt();
    let seed = predict(eps[0]);
    let r = sweep(&eps, make, seed, Some(predict), |e| e, &RefineOptions::default(), Some(4))?;
    found.extend(r.rows.iter().map(|x| x.resonance.kappa));
    let slope = r.slope.unwrap_or(f64::NAN);
    let t: Vec<f64> = eps.iter().map(|e| e.sqrt()).collect();
    let scaled: Vec<C64> = r.rows.iter().zip(&t).map(|(x, t)| x.resonance.kappa / *t).collect();
    let fit = fit_powers(&t, &scaled, z0, &[2.0, 3.0])?[0] / z0;
    let fk1 = f.kappa1_zero.unwrap();
    let e = (fit.re - fk1.re).abs() / fk1.re.abs();
    Ok((
        in_band(slope) && e <= 0.2,
        format!(
            "ball: slope {slope:.2} in eps ({:.2} in sqrt eps), fitted k1 {:.4} vs formula {:.4} (rel {e:.1e})",
            2.0 * slope,
            fit.re,
            fk1.re
        ),
    ))
}

fn structural(found: &[C64]) -> Outcome {
    // every resonance located so far, plus all minima of a case-2 window scan
    let (s, v) = sphere(162, 256);
    let sc = Scene::single(s.clone(), v.clone(), Material::scaling(2, 1.0, 0.0, 1.0, 0.0))?;
    let p = rescaled_pencil(&sc, 2, c(0.05), SplitMode::Off, Reduction::Boundary)?;
    let w = SearchWindow::new((0.2, 3.0), (-0.6, 0.3), 16, 12)?;
    let mut all = found.to_vec();
    for seed in scan(&p, &w)? {
        if let Ok(r) = refine(&p, seed, &RefineOptions { window: Some(w), ..Default::default() }) {
            all.push(r.kappa);
        }
    }
    let max_im = all.iter().map(|k| k.im).fold(f64::NEG_INFINITY, f64::max);

    let free = Scene::single(s.clone(), v.clone(), Material::fixed(1.0, 1.0))?;
    let fp = physical_pencil(&free, Form::Full)?;
    let fw = SearchWindow::new((0.1, 4.0), (-1.0, 0.0), 8, 8)?;
    let flat = sigma_grid(&fp, &fw)?.iter().all(|x| (x - 1.0).abs() < 1e-12);
    let free_res = scan(&fp, &fw)?.len();

    let mut rng = StdRng::seed_from_u64(7);
    let probes: Vec<P3> = (0..6)
        .map(|_| {
            let d: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().max(1e-3);
            let r = rng.gen_range(1.5..3.5);
            [r * d[0] / n, r * d[1] / n, r * d[2] / n]
        })
        .collect();
    let src = GaussianSource::new([2.5, 0.3, 0.0], 0.4, 1.0)?;
    let k = C64::new(rng.gen_range(0.5..2.0), rng.gen_range(0.2..1.0));
    let zero = apply_resolvent_difference(k, &src, &probes, &free, Form::Full)?.values.iter().all(|z| z.norm() == 0.0);
    let path_gap = |v2: f64, rho: f64, form: Form| -> Result<f64, acoustic_pencil::Error> {
        let sc = Scene::single(s.clone(), v.clone(), Material::fixed(v2, rho))?;
        let a = apply_resolvent_difference(k, &src, &probes, &sc, Form::Full)?.values;
        let b = apply_resolvent_difference(k, &src, &probes, &sc, form)?.values;
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        Ok(num / a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
    };
    let gv = path_gap(1.7, 1.0, Form::VolumeOnly)?;
    let gs = path_gap(1.0, 3.0, Form::SurfaceOnly)?;
    let sc = Scene::single(s, v, Material::fixed(1.8, 4.0))?;
    let pr = pseudo_resolvent_residual(k, C64::new(0.7, 0.9), &src, &probes, &sc)?;
    Ok((
        max_im < 1e-6 && flat && free_res == 0 && zero && gv <= 1e-10 && gs <= 1e-10 && pr <= 1e-6,
        format!(
            "{} resonances, max Im {max_im:.2e}; free scene: {free_res} resonances, zero difference {zero}; \
             Full-Volume {gv:.1e}, Full-Surface {gs:.1e}; pseudo-resolvent {pr:.1e}",
            all.len()
        ),
    ))
}

fn limits() -> Outcome {
    let (s, v) = sphere(162, 256);
    let k = C64::new(0.9, -0.1);
    let a = assemble_q(k, &Scene::single(s.clone(), v.clone(), Material::fixed(2.0, 1e6))?, Form::GeneralWZ)?.matrix;
    let mut lim = Material::fixed(2.0, 1e6);
    lim.rho_inf = true;
    let b = assemble_q(k, &Scene::single(s, v, lim)?, Form::GeneralWZ)?.matrix;
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = (a[(i, j)] - b[(i, j)]).norm();
            if d > 0.0 {
                worst = worst.max(d / b[(i, j)].norm());
            }
        }
    }
    Ok((worst <= 1e-5, format!("GeneralWZ rho=1e6 vs rho=inf: max entrywise rel {worst:.2e}")))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, t: Instant, o: Outcome| {
        let secs = t.elapsed().as_secs_f64();
        let (ok, msg) = o.unwrap_or_else(|e| (false, format!("error: {e}")));
        let ok = ok && secs <= 120.0;
        failed += usize::from(!ok);
        println!("criterion {n:>2} {:<24} {} [{secs:.1}s] {msg}", name, if ok { "PASS" } else { "FAIL" });
    };

    let t = Instant::now();
    let (s, v) = sphere(642, 2000);
    let ops = ReferenceOperators::new(&s, &v);
    let setup = t.elapsed();
    let ops = match ops {
        Ok(o) => o,
        Err(e) => {
            println!("reference operators failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("reference operators: {} surface / {} volume nodes [{:.1?}]", s.len(), v.len(), setup);
    let t = Instant::now();
    report(1, "layer identities", t, layer_identities(&ops));
    let t = Instant::now();
    report(2, "minnaert", t, minnaert_value(&ops));
    let t = Instant::now();
    report(3, "series identities", t, series(&ops));
    let t = Instant::now();
    report(4, "newton spectrum", t, newton_top(&ops));
    let t = Instant::now();
    report(5, "neumann eigenvalue", t, neumann(&ops));
    drop(ops);

    let (s, v) = sphere(642, 960);
    let mut found = Vec::new();
    let t = Instant::now();
    report(6, "case 2 cross-check", t, case2(&s, &v, &mut found));
    let t = Instant::now();
    report(7, "case 1 cross-check", t, case1(&s, &v, &mut found));
    let t = Instant::now();
    let a = case4(&mut found);
    let b = case4_zero(&s, &v, &mut found);
    let merged = match (a, b) {
        (Ok((x, m)), Ok((y, n))) => Ok((x && y, format!("{m}; zero branch {n}"))),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };
    report(8, "case 4 cross-check", t, merged);
    let t = Instant::now();
    report(9, "structural", t, structural(&found));
    let t = Instant::now();
    report(10, "density limit", t, limits());

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
