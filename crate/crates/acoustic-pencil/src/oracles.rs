//! One-dimensional reference computations for the unit ball.

/// Top eigenpair of the radial Newton kernel s²/max(r,s) on [0,1] from an
/// `n`-point midpoint rule.  Returns (λ, ⟨1,e⟩) with e normalised in L²(B).
pub fn radial_newton_top(n: usize) -> (f64, f64) {
    let h = 1.0 / n as f64;
    let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    // symmetric form: y = r·u, kernel r s / max(r,s)
    let apply = |y: &[f64]| -> Vec<f64> {
        // Σ_j h r_i r_j / max(r_i,r_j) y_j, split into j ≤ i and j > i in O(n)
        let mut out = vec![0.0; n];
        let mut low = 0.0; // Σ_{j≤i} r_j y_j h
        for i in 0..n {
            low += r[i] * y[i] * h;
            out[i] = low;
        }
        let mut high = 0.0; // Σ_{j>i} y_j h
        for i in (0..n).rev() {
            out[i] += r[i] * high;
            high += y[i] * h;
        }
        out
    };
    let mut y = r.clone();
    let mut lam = 0.0;
    for _ in 0..500 {
        let z = apply(&y);
        let nz = (z.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
        let ny = (y.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
        let new = nz / ny;
        y = z.iter().map(|v| v / nz).collect();
        if (new - lam).abs() <= 1e-15 * new {
            lam = new;
            break;
        }
        lam = new;
    }
    // u = y/r, ‖u‖²_{L²(B)} = 4π ∫ u² r² dr = 4π ∫ y² dr = 4π
    let norm = (4.0 * std::f64::consts::PI).sqrt();
    let mean: f64 = y.iter().zip(&r).map(|(y, r)| y * r * h).sum::<f64>() * 4.0 * std::f64::consts::PI / norm;
    (lam, mean.abs())
}

/// j₁′(x) for the spherical Bessel function j₁.
pub fn spherical_j1_prime(x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    2.0 * c / (x * x) - 2.0 * s / (x * x * x) + s / x
}

/// First positive root of j₁′ by bisection (≈ 2.0816).
pub fn first_j1_prime_root() -> f64 {
    let (mut a, mut b) = (1.5, 3.0);
    let fa = spherical_j1_prime(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if spherical_j1_prime(m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_top_eigenvalue_is_four_over_pi_squared() {
        let (lam, mean) = radial_newton_top(2000);
        let exact = 4.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((lam - exact).abs() < 1e-5 * exact, "{lam}");
        // e = sin(πr/2)/r normalised; ⟨1,e⟩² = 32/π³·... checked against quadrature
        let r_int = |f: &dyn Fn(f64) -> f64| -> f64 {
            let n = 100_000;
            (0..n).map(|i| f((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64
        };
        let pi = std::f64::consts::PI;
        let nrm = (4.0 * pi * r_int(&|r| (pi * r / 2.0).sin().powi(2))).sqrt();
        let m = 4.0 * pi * r_int(&|r| r * (pi * r / 2.0).sin()) / nrm;
        assert!((mean - m).abs() < 1e-5 * m, "{mean} {m}");
    }

    #[test]
    fn j1_prime_root() {
        let x = first_j1_prime_root();
        assert!((x - 2.081_575_977_818_3).abs() < 1e-10, "{x}");
        assert!(spherical_j1_prime(x).abs() < 1e-12);
    }
}
