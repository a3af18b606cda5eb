//! Helmholtz fundamental solution e^{iκr}/(4πr), its normal derivatives,
//! κ-derivatives, low-order κ-series coefficients and the closed-form
//! self-cell integrals used on matrix diagonals.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{dot3, norm3, sub3, P3};
use crate::linalg::I;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    SingleLayer,
    NormalDerivAtTarget,
    NormalDerivAtSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    N1,
    SL1,
    K2star,
    K3star,
}

pub fn green(kappa: C64, r: f64) -> Result<C64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("green kernel at distance {r}")));
    }
    Ok(green_unchecked(kappa, r))
}

#[inline]
pub fn green_unchecked(kappa: C64, r: f64) -> C64 {
    (I * kappa * r).exp() / (4.0 * PI * r)
}

/// ∂κ of the Green kernel: i e^{iκr}/(4π).
#[inline]
pub fn green_dk(kappa: C64, r: f64) -> C64 {
    I * (I * kappa * r).exp() / (4.0 * PI)
}

/// Radial factor of the normal derivative: (iκ − 1/r)e^{iκr}/(4πr²), to be
/// multiplied by n·(x−y).
#[inline]
pub fn dgreen_factor(kappa: C64, r: f64) -> C64 {
    (I * kappa - 1.0 / r) * (I * kappa * r).exp() / (4.0 * PI * r * r)
}

/// ∂κ of [`dgreen_factor`]: −κ e^{iκr}/(4πr).
#[inline]
pub fn dgreen_factor_dk(kappa: C64, r: f64) -> C64 {
    -kappa * (I * kappa * r).exp() / (4.0 * PI * r)
}

/// ∂/∂n_x G(x−y) (at target) or ∂/∂n_y G(x−y) (at source).
pub fn green_normal_deriv(kappa: C64, x: P3, y: P3, n: P3, at_target: bool) -> Result<C64> {
    let d = sub3(x, y);
    let r = norm3(d);
    if !(r > 0.0) {
        return Err(Error::Domain("coincident points in normal derivative".into()));
    }
    let s = if at_target { 1.0 } else { -1.0 };
    Ok(dgreen_factor(kappa, r) * (s * dot3(n, d)))
}

pub fn kernel(kind: KernelKind, kappa: C64, x: P3, y: P3, n: Option<P3>) -> Result<C64> {
    match kind {
        KernelKind::SingleLayer => green(kappa, norm3(sub3(x, y))),
        KernelKind::NormalDerivAtTarget | KernelKind::NormalDerivAtSource => {
            let n = n.ok_or_else(|| Error::Domain("normal required".into()))?;
            green_normal_deriv(kappa, x, y, n, kind == KernelKind::NormalDerivAtTarget)
        }
    }
}

/// Kernel of the low-order κ-series coefficients:
/// N₍₁₎, SL₍₁₎ → i/4π; K₂* → −n_x·(x−y)/(8π|x−y|); K₃* → i n_x·(x−y)/(12π).
///
/// Sign of K₃*: the expansion is written γ₁SL_z = γ₁SL₀ + K₂*z² − K₃*z³ + …,
/// so K₃* is minus the z³ Taylor coefficient of the normal-derivative kernel.
pub fn series_coefficient(kind: SeriesKind, x: P3, y: P3, n_x: Option<P3>) -> Result<C64> {
    match kind {
        SeriesKind::N1 | SeriesKind::SL1 => Ok(I / (4.0 * PI)),
        SeriesKind::K2star | SeriesKind::K3star => {
            let n = n_x.ok_or_else(|| Error::Domain("series kernel needs the target normal".into()))?;
            let d = sub3(x, y);
            let r = norm3(d);
            if !(r > 0.0) {
                return Err(Error::Domain("coincident points in series kernel".into()));
            }
            let nd = dot3(n, d);
            Ok(match kind {
                SeriesKind::K2star => C64::new(-nd / (8.0 * PI * r), 0.0),
                _ => I * nd / (12.0 * PI),
            })
        }
    }
}

/// ∫₀^a r^m e^{izr} dr.
pub fn radial_moment(m: u32, z: C64, a: f64) -> C64 {
    let za = z * a;
    if za.norm() < 1.0 {
        let mut term = C64::new(1.0, 0.0); // (iza)^k / k!
        let mut sum = C64::new(0.0, 0.0);
        for k in 0..40u32 {
            let add = term / (k + m + 1) as f64;
            sum += add;
            if add.norm() < 1e-17 * sum.norm() {
                break;
            }
            term *= I * za / (k + 1) as f64;
        }
        sum * a.powi(m as i32 + 1)
    } else {
        let e = (I * za).exp();
        let mut val = (e - 1.0) / (I * z);
        for k in 1..=m {
            val = (e * a.powi(k as i32) - val * k as f64) / (I * z);
        }
        val
    }
}

/// Self-cell value of the single layer: flat disk of area w, ½∫₀^a e^{izρ}dρ.
pub fn single_layer_self(z: C64, w: f64) -> C64 {
    0.5 * radial_moment(0, z, (w / PI).sqrt())
}

pub fn single_layer_self_dk(z: C64, w: f64) -> C64 {
    0.5 * I * radial_moment(1, z, (w / PI).sqrt())
}

/// Self-cell value of the Newton kernel: ball of volume w, ∫₀^a r e^{izr}dr.
pub fn newton_self(z: C64, w: f64) -> C64 {
    radial_moment(1, z, (3.0 * w / (4.0 * PI)).cbrt())
}

pub fn newton_self_dk(z: C64, w: f64) -> C64 {
    I * radial_moment(2, z, (3.0 * w / (4.0 * PI)).cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn green_examples() {
        assert_abs_diff_eq!(green(c(0.0), 1.0).unwrap().re, 0.0795774715459477, epsilon = 1e-15);
        let g = green(I, 1.0).unwrap();
        assert_abs_diff_eq!(g.re, (-1f64).exp() / (4.0 * PI), epsilon = 1e-15);
        let g = green(c(1.0), PI).unwrap();
        assert_abs_diff_eq!(g.re, -1.0 / (4.0 * PI * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-15);
        assert!(green(c(1.0), 0.0).is_err());
    }

    #[test]
    fn normal_derivative_examples() {
        let x = [1.0, 0.0, 0.0];
        let v = green_normal_deriv(c(0.0), x, [0.0; 3], x, true).unwrap();
        assert_abs_diff_eq!(v.re, -1.0 / (4.0 * PI), epsilon = 1e-15);
        let v = green_normal_deriv(c(0.7), x, [0.0; 3], [0.0, 1.0, 0.0], true).unwrap();
        assert_eq!(v, c(0.0));
        assert!(green_normal_deriv(c(1.0), x, x, x, true).is_err());
    }

    #[test]
    fn normal_derivative_matches_finite_difference() {
        let k = C64::new(1.3, 0.4);
        let x = [0.3, -0.2, 0.9];
        let y = [-0.4, 0.5, 0.1];
        let n = crate::geometry::unit3([0.2, 0.7, -0.3]);
        let h = 1e-5;
        let f = |s: f64| {
            let xs = [x[0] + s * n[0], x[1] + s * n[1], x[2] + s * n[2]];
            green(k, norm3(sub3(xs, y))).unwrap()
        };
        let fd = (f(h) - f(-h)) / (2.0 * h);
        let an = green_normal_deriv(k, x, y, n, true).unwrap();
        assert!((fd - an).norm() < 1e-6, "{fd} {an}");
        let g = |s: f64| {
            let ys = [y[0] + s * n[0], y[1] + s * n[1], y[2] + s * n[2]];
            green(k, norm3(sub3(x, ys))).unwrap()
        };
        let fd = (g(h) - g(-h)) / (2.0 * h);
        let an = green_normal_deriv(k, x, y, n, false).unwrap();
        assert!((fd - an).norm() < 1e-6);
    }

    #[test]
    fn kappa_derivatives_match_fourth_order_differences() {
        let r = 0.8;
        let k = C64::new(0.05, -0.02);
        let h = 1e-3;
        let d4 = |f: &dyn Fn(C64) -> C64| {
            (-f(k + 2.0 * h) + 8.0 * f(k + h) - 8.0 * f(k - h) + f(k - 2.0 * h)) / (12.0 * h)
        };
        assert!((d4(&|k| green_unchecked(k, r)) - green_dk(k, r)).norm() < 1e-10);
        assert!((d4(&|k| dgreen_factor(k, r)) - dgreen_factor_dk(k, r)).norm() < 1e-10);
        let w = 0.01;
        assert!((d4(&|k| single_layer_self(k, w)) - single_layer_self_dk(k, w)).norm() < 1e-10);
        assert!((d4(&|k| newton_self(k, w)) - newton_self_dk(k, w)).norm() < 1e-10);
    }

    #[test]
    fn series_coefficients_reproduce_green_derivatives() {
        // first κ-derivative of the Green kernel at 0 is the N₍₁₎ kernel
        assert!((green_dk(c(0.0), 0.37) - series_coefficient(SeriesKind::N1, [0.0; 3], [1.0; 3], None).unwrap()).norm() < 1e-15);
        let x = [0.1, 0.2, 0.95];
        let y = [-0.3, 0.6, 0.7];
        let n = crate::geometry::unit3(x);
        let z = 0.05;
        let k0 = green_normal_deriv(c(0.0), x, y, n, true).unwrap();
        let k2 = series_coefficient(SeriesKind::K2star, x, y, Some(n)).unwrap();
        let k3 = series_coefficient(SeriesKind::K3star, x, y, Some(n)).unwrap();
        let direct = green_normal_deriv(c(z), x, y, n, true).unwrap();
        let series = k0 + k2 * z * z - k3 * z * z * z;
        assert!((direct - series).norm() < 2.0 * z.powi(4), "{}", (direct - series).norm());
        assert!((direct - k0 - k2 * z * z).norm() > 10.0 * (direct - series).norm());
    }

    #[test]
    fn k2_vanishes_for_orthogonal_offset() {
        let v = series_coefficient(SeriesKind::K2star, [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], Some([0.0, 0.0, 1.0])).unwrap();
        assert_eq!(v, c(0.0));
        assert!(series_coefficient(SeriesKind::K3star, [0.0; 3], [1.0; 3], None).is_err());
    }

    #[test]
    fn self_cell_integrals() {
        let w = 0.02;
        let a = (w / PI).sqrt();
        assert_abs_diff_eq!(single_layer_self(c(0.0), w).re, a / 2.0, epsilon = 1e-15);
        let b = (3.0 * w / (4.0 * PI)).cbrt();
        assert_abs_diff_eq!(newton_self(c(0.0), w).re, b * b / 2.0, epsilon = 1e-15);
        // ∂κ N self at 0 equals i w/4π, matching the rank-one N₍₁₎ kernel
        let d = newton_self_dk(c(0.0), w);
        assert_abs_diff_eq!(d.im, w / (4.0 * PI), epsilon = 1e-15);
        // series and closed-form branches agree across the switch
        for z in [C64::new(0.99 / a, 0.0), C64::new(1.01 / a, 0.0), C64::new(3.0, -2.0)] {
            let big = (I * z * a).exp();
            let closed = (big - 1.0) / (2.0 * I * z);
            assert!((single_layer_self(z, w) - closed).norm() < 1e-13);
        }
    }

    proptest::proptest! {
        #[test]
        fn green_conjugate_symmetry(re in -5.0f64..5.0, im in 0.0f64..3.0, r in 0.01f64..10.0) {
            let k = C64::new(re, im);
            let lhs = green(-k.conj(), r).unwrap();
            let rhs = green(k, r).unwrap().conj();
            proptest::prop_assert!((lhs - rhs).norm() <= 1e-14 * rhs.norm().max(1e-300));
        }

        #[test]
        fn radial_moment_branches_agree(m in 0u32..3, re in -4.0f64..4.0, im in -1.0f64..1.0, a in 0.05f64..1.0) {
            let z = C64::new(re, im);
            // brute-force midpoint reference
            let n = 4000;
            let h = a / n as f64;
            let reference: C64 = (0..n).map(|k| {
                let r = (k as f64 + 0.5) * h;
                (I * z * r).exp() * r.powi(m as i32) * h
            }).sum();
            let v = radial_moment(m, z, a);
            proptest::prop_assert!((v - reference).norm() < 1e-6 * (1.0 + reference.norm()));
        }
    }
}
