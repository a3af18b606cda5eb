use acoustic_pencil::asymptotics::{expand_case2_with, first_order_by_sampling};
use acoustic_pencil::geometry::{make_ball_volume_quadrature, make_unit_sphere_quadrature, Material, Scene};
use acoustic_pencil::linalg::c;
use acoustic_pencil::operators::ReferenceOperators;
use acoustic_pencil::qfunction::{
    physical_pencil, rescaled_pencil, smallest_singular_weighted, BlockPencil, Form, Pencil, Reduction, SplitMode,
};
use acoustic_pencil::resonance_finder::{
    fit_first_order, fit_powers, local_minima, refine, scan, sigma_grid, sweep, RefineOptions, SearchWindow,
};
use acoustic_pencil::{Error, C64};
use proptest::prelude::*;

fn case2_scene() -> Scene {
    let s = make_unit_sphere_quadrature(162).unwrap();
    let v = make_ball_volume_quadrature(256).unwrap();
    Scene::single(s, v, Material::scaling(2, 1.0, 0.0, 1.0, 0.0)).unwrap()
}

fn case2_pencil(sc: &Scene, eps: f64) -> BlockPencil {
    rescaled_pencil(sc, 2, c(eps), SplitMode::Off, Reduction::Boundary).unwrap()
}

fn window() -> SearchWindow {
    SearchWindow::new((1.4, 2.1), (-0.25, 0.02), 12, 10).unwrap()
}

#[test]
fn window_validation() {
    assert!(SearchWindow::new((1.0, 0.5), (-1.0, 0.0), 10, 10).is_err());
    assert!(SearchWindow::new((0.0, 1.0), (-1.0, 0.0), 7, 10).is_err());
    let w = SearchWindow::new((0.0, 1.0), (-1.0, 0.0), 8, 8).unwrap();
    assert_eq!(w.point(0, 0), C64::new(0.0, -1.0));
    assert_eq!(w.point(7, 7), C64::new(1.0, 0.0));
    assert!(w.contains(C64::new(1.05, 0.0), 0.1) && !w.contains(C64::new(1.2, 0.0), 0.1));
}

#[test]
fn scan_and_refine_case2() {
    let sc = case2_scene();
    let eps = 0.05;
    let p = case2_pencil(&sc, eps);
    let seeds = scan(&p, &window()).unwrap();
    assert!(!seeds.is_empty());
    let opts = RefineOptions { window: Some(window()), ..Default::default() };
    let r = refine(&p, seeds[0], &opts).unwrap();
    println!("{r:?}");
    // √3 − (3/2)iε up to O(ε²) and discretisation error
    assert!((r.kappa - C64::new(3f64.sqrt(), -1.5 * eps)).norm() < 0.02);
    assert!(r.kappa.im < 0.0);
    assert!(r.residual < 1e-10);
    assert!(r.newton_iters <= 10);
}

#[test]
fn basin_of_attraction() {
    let sc = case2_scene();
    let p = case2_pencil(&sc, 0.05);
    let target = refine(&p, C64::new(1.73, -0.075), &RefineOptions::default()).unwrap().kappa;
    for d in [C64::new(0.1, 0.0), C64::new(-0.1, 0.03), C64::new(0.0, -0.05), C64::new(0.07, 0.07)] {
        let r = refine(&p, target + d, &RefineOptions::default()).unwrap();
        assert!((r.kappa - target).norm() < 1e-10, "seed offset {d} went to {}", r.kappa);
    }
}

#[test]
fn resonances_come_in_mirror_pairs() {
    let sc = case2_scene();
    let p = case2_pencil(&sc, 0.05);
    let k = refine(&p, C64::new(1.73, -0.075), &RefineOptions::default()).unwrap().kappa;
    let m = refine(&p, -k.conj(), &RefineOptions::default()).unwrap().kappa;
    assert!((m + k.conj()).norm() < 1e-10);
}

#[test]
fn refinement_is_deterministic() {
    let sc = case2_scene();
    let p = case2_pencil(&sc, 0.05);
    let a = refine(&p, C64::new(1.7, -0.05), &RefineOptions::default()).unwrap();
    let b = refine(&p, C64::new(1.7, -0.05), &RefineOptions::default()).unwrap();
    assert_eq!(a.kappa, b.kappa);
    assert_eq!(a.newton_iters, b.newton_iters);
    let g1 = sigma_grid(&p, &window()).unwrap();
    let g2 = sigma_grid(&p, &window()).unwrap();
    assert_eq!(g1, g2);
}

#[test]
fn no_real_poles_near_the_resonance() {
    let sc = case2_scene();
    let p = case2_pencil(&sc, 0.05);
    let r = refine(&p, C64::new(1.73, -0.075), &RefineOptions::default()).unwrap();
    let w = p.weights();
    let (at_pole, _) = smallest_singular_weighted(&p.eval(r.kappa).unwrap(), &w).unwrap();
    let (on_axis, _) = smallest_singular_weighted(&p.eval(c(r.kappa.re)).unwrap(), &w).unwrap();
    assert!(on_axis > 1e6 * at_pole, "σ_min {on_axis} on the axis vs {at_pole} at κ*");
}

#[test]
fn upper_half_plane_has_no_resonances() {
    let sc = case2_scene();
    let p = case2_pencil(&sc, 0.05);
    let w = SearchWindow::new((0.2, 3.0), (0.05, 1.0), 10, 8).unwrap();
    let sig = sigma_grid(&p, &w).unwrap();
    assert!(sig.iter().all(|s| *s > 1e-3));
    assert!(scan(&p, &w).unwrap().is_empty());
}

#[test]
fn free_scene_has_no_resonances() {
    let s = make_unit_sphere_quadrature(162).unwrap();
    let v = make_ball_volume_quadrature(256).unwrap();
    let sc = Scene::single(s, v, Material::fixed(1.0, 1.0)).unwrap();
    let p = physical_pencil(&sc, Form::Full).unwrap();
    let w = SearchWindow::new((0.1, 4.0), (-1.0, 0.0), 8, 8).unwrap();
    assert!(sigma_grid(&p, &w).unwrap().iter().all(|s| (s - 1.0).abs() < 1e-12));
    assert!(scan(&p, &w).unwrap().is_empty());
}

#[test]
fn local_minima_of_a_synthetic_landscape() {
    let w = SearchWindow::new((-1.0, 1.0), (-1.0, 0.0), 21, 11).unwrap();
    let z0 = w.point(13, 4);
    let sig: Vec<f64> = (0..w.ny)
        .flat_map(|j| (0..w.nx).map(move |i| (i, j)))
        .map(|(i, j)| (w.point(i, j) - z0).norm() + 1e-3)
        .collect();
    assert_eq!(local_minima(&w, &sig), vec![z0]);
}

#[test]
fn sweep_tracks_case2_with_second_order_remainder() {
    let sc = case2_scene();
    let ops = ReferenceOperators::from_scene(&sc).unwrap();
    let f = expand_case2_with(&ops, &sc, 1).unwrap();
    let (k0, k1) = first_order_by_sampling(&sc, 2, Reduction::Boundary, f.kappa0, f.kappa1, 1e-2).unwrap();
    let eps = [0.08, 0.04, 0.02];
    let res = sweep(
        &eps,
        |e| rescaled_pencil(&sc, 2, c(e), SplitMode::Off, Reduction::Boundary),
        k0,
        Some(|e: f64| k0 + k1 * e),
        |e| e,
        &RefineOptions::default(),
        Some(2),
    )
    .unwrap();
    let slope = res.slope.unwrap();
    println!("{slope} {:?}", res.rows.iter().map(|r| r.gap).collect::<Vec<_>>());
    assert!((slope - 2.0).abs() <= 0.4);
    assert!(res.rows.iter().all(|r| r.resonance.case == Some(2) && r.resonance.kappa.im < 0.0));
    let ks: Vec<C64> = res.rows.iter().map(|r| r.resonance.kappa).collect();
    let (a, _) = fit_first_order(&eps, &ks, k0);
    assert!((a - k1).norm() < 0.01 * k1.norm());
}

#[test]
fn sweep_rejects_bad_lists_and_reports_lost_branches() {
    let sc = case2_scene();
    let make = |e: f64| rescaled_pencil(&sc, 2, c(e), SplitMode::Off, Reduction::Boundary);
    let none: Option<fn(f64) -> C64> = None;
    let r = sweep(&[0.02, 0.04], make, c(1.7), none, |e| e, &RefineOptions::default(), None);
    assert!(matches!(r, Err(Error::Config(_))));
    let tiny = SearchWindow::new((0.0, 0.1), (-0.1, 0.0), 8, 8).unwrap();
    let opts = RefineOptions { window: Some(tiny), ..Default::default() };
    let r = sweep(&[0.04], make, C64::new(0.05, -0.05), none, |e| e, &opts, None);
    assert!(matches!(r, Err(Error::Convergence(_))));
}

#[test]
fn csv_record_layout() {
    let sc = case2_scene();
    let p = case2_pencil(&sc, 0.05);
    let mut r = refine(&p, C64::new(1.73, -0.075), &RefineOptions::default()).unwrap();
    r.eps = Some(0.05);
    r.case = Some(2);
    let rec = r.csv_record();
    assert_eq!(rec.len(), 6);
    assert_eq!(rec[0], "2");
    assert_eq!(rec[2].parse::<f64>().unwrap(), r.kappa.re);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn power_fit_recovers_exact_coefficients(a in -3.0f64..3.0, b in -3.0f64..3.0, k in -2.0f64..2.0) {
        let s: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
        let k0 = C64::new(k, 0.5);
        let (ca, cb) = (C64::new(a, -b), C64::new(b, a));
        let ks: Vec<C64> = s.iter().map(|x| k0 + ca * x.powi(2) + cb * x.powi(3)).collect();
        let fit = fit_powers(&s, &ks, k0, &[2.0, 3.0]).unwrap();
        prop_assert!((fit[0] - ca).norm() < 1e-8 && (fit[1] - cb).norm() < 1e-7);
    }
}

#[test]
fn power_fit_needs_enough_samples() {
    assert!(fit_powers(&[0.1], &[c(1.0)], c(0.0), &[1.0, 2.0]).is_err());
}
