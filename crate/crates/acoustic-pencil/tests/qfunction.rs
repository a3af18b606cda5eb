use acoustic_pencil::geometry::{
    make_ball_volume_quadrature, make_unit_sphere_quadrature, Material, Scene, SurfaceQuadrature, VolumeQuadrature,
};
use acoustic_pencil::linalg::{c, fro, identity, sub, zeros, CMat};
use acoustic_pencil::operators::{ReferenceOperators, Space};
use acoustic_pencil::qfunction::{
    assemble_q, assemble_rescaled, condition_number, rescaled_pencil, smallest_singular, smallest_singular_weighted,
    Form, Pencil, Reduction, SplitMode,
};
use acoustic_pencil::{Error, C64};

fn ball(ns: usize) -> (SurfaceQuadrature, VolumeQuadrature) {
    (make_unit_sphere_quadrature(ns).unwrap(), make_ball_volume_quadrature(256).unwrap())
}

fn single(mat: Material) -> Scene {
    let (s, v) = ball(162);
    Scene::single(s, v, mat).unwrap()
}

fn max_abs(m: &CMat) -> f64 {
    let mut x = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            x = x.max(m[(i, j)].norm());
        }
    }
    x
}

fn diff(a: &CMat, b: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}

#[test]
fn free_case_is_the_identity() {
    let q = assemble_q(C64::new(1.7, -0.3), &single(Material::fixed(1.0, 1.0)), Form::Full).unwrap();
    assert_eq!(max_abs(&diff(&q.matrix, &identity(q.dim()))), 0.0);
}

#[test]
fn block_layout_volume_first() {
    let sc = single(Material::fixed(2.0, 3.0));
    let q = assemble_q(C64::new(1.0, 0.0), &sc, Form::Full).unwrap();
    let b = q.blocks();
    assert_eq!(b.len(), 2);
    assert_eq!(b[0][0].row_space, Space::Volume(0));
    assert_eq!(b[1][0].row_space, Space::Boundary(0));
    assert_eq!(b[1][0].col_space, Space::Volume(0));
    assert_eq!(b[0][0].entries.nrows(), sc.volume.len());
    assert_eq!(b[1][1].entries.ncols(), sc.surface.len());
    assert_eq!(q.dim(), sc.volume.len() + sc.surface.len());
}

#[test]
fn full_form_at_zero_is_well_conditioned() {
    let mut conds = Vec::new();
    for ns in [162, 642] {
        let (s, v) = ball(ns);
        let sc = Scene::single(s, v, Material::fixed(2.5, 4.0)).unwrap();
        let q = assemble_q(c(0.0), &sc, Form::Full).unwrap();
        conds.push(condition_number(&q.matrix).unwrap());
    }
    println!("{conds:?}");
    assert!(conds.iter().all(|k| k.is_finite() && *k < 1e3));
    assert!(conds[1] < 2.0 * conds[0]);
}

#[test]
fn not1_rejects_unit_contrasts() {
    let k = C64::new(1.0, 0.0);
    assert!(matches!(assemble_q(k, &single(Material::fixed(1.0, 2.0)), Form::Not1), Err(Error::Domain(_))));
    assert!(matches!(assemble_q(k, &single(Material::fixed(2.0, 1.0)), Form::Not1), Err(Error::Domain(_))));
    assert!(assemble_q(k, &single(Material::fixed(2.0, 3.0)), Form::Not1).is_ok());
}

#[test]
fn not1_is_a_row_scaling_of_full() {
    let (v2, rho) = (2.0, 3.0);
    let sc = single(Material::fixed(v2, rho));
    let k = C64::new(0.8, -0.2);
    let full = assemble_q(k, &sc, Form::Full).unwrap();
    let not1 = assemble_q(k, &sc, Form::Not1).unwrap();
    let nv = sc.volume.len();
    let rt = 2.0 * (rho - 1.0) / (rho + 1.0);
    let scaled = CMat::from_fn(full.dim(), full.dim(), |i, j| {
        not1.matrix[(i, j)] * if i < nv { v2 - 1.0 } else { rt }
    });
    assert!(max_abs(&diff(&scaled, &full.matrix)) <= 1e-12 * max_abs(&full.matrix));
}

#[test]
fn general_form_converges_to_infinite_density_limit() {
    let k = C64::new(0.9, -0.1);
    let sc = single(Material::fixed(2.0, 1e6));
    let mut lim = Material::fixed(2.0, 1e6);
    lim.rho_inf = true;
    let a = assemble_q(k, &sc, Form::GeneralWZ).unwrap().matrix;
    let b = assemble_q(k, &single(lim), Form::GeneralWZ).unwrap().matrix;
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = (a[(i, j)] - b[(i, j)]).norm();
            if d > 0.0 {
                worst = worst.max(d / b[(i, j)].norm());
            }
        }
    }
    println!("{worst:e}");
    assert!(worst <= 1e-5);
    assert!(worst > 0.0);
}

#[test]
fn general_form_with_infinite_velocity_uses_unit_weight() {
    let mut m = Material::fixed(1.0, 2.0);
    m.v_inf = true;
    let sc = single(m);
    let q = assemble_q(c(0.0), &sc, Form::GeneralWZ).unwrap();
    // at κ = 0 the volume block is w·I = I
    let vv = sub(&q.matrix, 0, sc.volume.len(), 0, sc.volume.len());
    assert!(max_abs(&diff(&vv, &identity(sc.volume.len()))) < 1e-14);
}

#[test]
fn rescaled_at_unit_scale_matches_full_form() {
    let m = Material::scaling(1, 1.5, 0.5, 1.0, 0.4);
    let sc = single(m);
    let k = C64::new(1.1, -0.2);
    let r = assemble_rescaled(k, 1.0, 1, &sc).unwrap().matrix;
    // at ε = 1 case 1 has v² = 2.0 and ρ = 1.4
    let f = assemble_q(k, &single(Material::fixed(2.0, 1.4)), Form::Full).unwrap().matrix;
    let nv = sc.volume.len();
    let scaled = CMat::from_fn(f.nrows(), f.ncols(), |i, j| f[(i, j)] * if i < nv { 1.0 } else { 0.5 });
    assert!(max_abs(&diff(&r, &scaled)) <= 1e-12 * max_abs(&f));
}

#[test]
fn rescaled_rejects_bad_input() {
    let sc = single(Material::scaling(2, 1.0, 0.0, 1.0, 0.0));
    assert!(matches!(assemble_rescaled(c(1.0), 0.0, 2, &sc), Err(Error::Domain(_))));
    assert!(matches!(assemble_rescaled(c(1.0), 0.1, 5, &sc), Err(Error::Config(_))));
}

#[test]
fn case_one_limit_volume_block() {
    let (v2, k) = (1.3, C64::new(1.2, -0.1));
    let sc = single(Material::scaling(1, v2, 0.0, 1.0, 0.0));
    let ops = ReferenceOperators::from_scene(&sc).unwrap();
    let p = rescaled_pencil(&sc, 1, c(1e-6), SplitMode::Off, Reduction::None).unwrap();
    let m = p.eval(k).unwrap();
    let nv = sc.volume.len();
    let vv = sub(&m, 0, nv, 0, nv);
    let expect = CMat::from_fn(nv, nv, |i, j| if i == j { c(v2) } else { c(0.0) } - k * k * ops.n0[(i, j)]);
    let gap = fro(&diff(&vv, &expect)) / fro(&expect);
    println!("{gap:e}");
    assert!(gap < 1e-5);
}

#[test]
fn smallest_singular_trivial_cases() {
    let n = 7;
    let w = vec![1.0; n];
    let (s, _) = smallest_singular_weighted(&identity(n), &w).unwrap();
    assert!((s - 1.0).abs() < 1e-14);
    let mut m = identity(n);
    m[(3, 3)] = c(0.0);
    let (s, v) = smallest_singular_weighted(&m, &w).unwrap();
    assert!(s < 1e-14);
    assert!((v[3].norm() - 1.0).abs() < 1e-12);
    assert!(v.iter().enumerate().all(|(i, z)| i == 3 || z.norm() < 1e-12));
    assert!(smallest_singular_weighted(&zeros(0, 0), &[]).is_err());
}

#[test]
fn cross_inclusion_blocks_decay_with_separation() {
    let (s, v) = ball(162);
    let k = C64::new(0.7, -0.05);
    let m = Material::fixed(2.0, 3.0);
    let single_q = assemble_q(k, &Scene::new(s.clone(), v.clone(), vec![[0.0; 3]], 0.5, m.clone()).unwrap(), Form::Full)
        .unwrap()
        .matrix;
    let mut coupling = Vec::new();
    for sep in [1.5, 3.0, 6.0] {
        let sc = Scene::new(s.clone(), v.clone(), vec![[0.0; 3], [sep, 0.0, 0.0]], 0.5, m.clone()).unwrap();
        let q = assemble_q(k, &sc, Form::Full).unwrap();
        let b = q.blocks();
        // grid is [V0, V1, B0, B1]; the (V0, V0) and (B0, B0) blocks match the lone inclusion
        let nv = sc.volume.len();
        let v00 = sub(&single_q, 0, nv, 0, nv);
        assert!(max_abs(&diff(&b[0][0].entries, &v00)) < 1e-14);
        coupling.push(fro(&b[0][1].entries) + fro(&b[2][3].entries) + fro(&b[0][3].entries));
    }
    println!("{coupling:?}");
    assert!(coupling[0] > coupling[1] && coupling[1] > coupling[2] && coupling[2] > 0.0);
}

#[test]
fn dump_writes_every_entry() {
    let sc = single(Material::fixed(2.0, 3.0));
    let q = assemble_q(C64::new(1.0, -0.5), &sc, Form::SurfaceOnly).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.txt");
    q.dump(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), q.dim() * q.dim());
    for l in lines.iter().step_by(997) {
        let f: Vec<&str> = l.split(' ').collect();
        assert_eq!(f.len(), 4);
        let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let z = C64::new(f[2].parse().unwrap(), f[3].parse().unwrap());
        assert_eq!(z, q.matrix[(i, j)]);
    }
}

#[test]
fn weighted_singular_value_of_q() {
    let sc = single(Material::fixed(2.0, 3.0));
    let q = assemble_q(C64::new(0.5, 0.5), &sc, Form::Full).unwrap();
    let (s, v) = smallest_singular(&q).unwrap();
    assert!(s > 0.0 && s.is_finite());
    let wn: f64 = v.iter().zip(&q.weights).map(|(z, w)| z.norm_sqr() * w).sum();
    assert!((wn - 1.0).abs() < 1e-10);
}
