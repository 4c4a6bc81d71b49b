//! Composite trapezoid rules on uniform age grids and adaptive Simpson for smooth integrands.

use crate::scalar::Scalar;

/// Composite trapezoid rule for samples on a uniform grid with spacing `h`.
pub fn trapezoid<S: Scalar>(values: &[S], h: S) -> S {
    match values.len() {
        0 | 1 => S::zero(),
        n => {
            let interior = values[1..n - 1].iter().fold(S::zero(), |acc, &v| acc + v);
            h * (interior + S::half() * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid rule of the pointwise product `f * g`.
pub fn trapezoid_product<S: Scalar>(f: &[S], g: &[S], h: S) -> S {
    debug_assert_eq!(f.len(), g.len());
    let n = f.len();
    if n < 2 {
        return S::zero();
    }
    let interior = (1..n - 1).fold(S::zero(), |acc, j| acc + f[j] * g[j]);
    h * (interior + S::half() * (f[0] * g[0] + f[n - 1] * g[n - 1]))
}

/// Running trapezoid integral: `out[j] = ∫_0^{a_j} f`.
pub fn cumulative_trapezoid<S: Scalar>(values: &[S], h: S) -> Vec<S> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = S::zero();
    for (j, &v) in values.iter().enumerate() {
        if j > 0 {
            acc = acc + S::half() * h * (values[j - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Trapezoid weights `w_j` such that `Σ w_j f_j` is the trapezoid rule.
pub fn trapezoid_weights<S: Scalar>(n_nodes: usize, h: S) -> Vec<S> {
    let mut w = vec![h; n_nodes];
    if n_nodes >= 1 {
        w[0] = S::half() * h;
        w[n_nodes - 1] = S::half() * h;
    }
    if n_nodes == 1 {
        w[0] = S::zero();
    }
    w
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<S: Scalar, F: Fn(S) -> S>(f: F, a: S, b: S, tol: S) -> S {
    if a == b {
        return S::zero();
    }
    let fa = f(a);
    let fb = f(b);
    let m = S::half() * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}

fn simpson<S: Scalar>(a: S, b: S, fa: S, fm: S, fb: S) -> S {
    (b - a) / S::lit(6.0) * (fa + S::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<S: Scalar, F: Fn(S) -> S>(
    f: &F,
    a: S,
    b: S,
    fa: S,
    fm: S,
    fb: S,
    whole: S,
    tol: S,
    depth: u32,
) -> S {
    let m = S::half() * (a + b);
    let lm = S::half() * (a + m);
    let rm = S::half() * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= S::lit(15.0) * tol {
        return left + right + delta / S::lit(15.0);
    }
    let half_tol = S::half() * tol;
    simpson_rec(f, a, m, fa, flm, fm, left, half_tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, half_tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_on_linear_functions() {
        let h = 0.25;
        let xs: Vec<f64> = (0..=8).map(|j| 1.0 + 3.0 * j as f64 * h).collect();
        // ∫_0^2 (1 + 3x) dx = 2 + 6
        assert!((trapezoid(&xs, h) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn cumulative_matches_full_rule() {
        let h = 0.1_f64;
        let xs: Vec<f64> = (0..=20).map(|j| (j as f64 * h).exp()).collect();
        let cum = cumulative_trapezoid(&xs, h);
        assert_eq!(cum[0], 0.0);
        assert!((cum[20] - trapezoid(&xs, h)).abs() < 1e-13);
    }

    #[test]
    fn weights_reproduce_rule() {
        let h = 0.5_f32;
        let xs = [1.0_f32, 2.0, 4.0, 3.0];
        let w = trapezoid_weights(xs.len(), h);
        let s: f32 = w.iter().zip(xs.iter()).map(|(a, b)| a * b).sum();
        assert!((s - trapezoid(&xs, h)).abs() < 1e-6);
    }

    #[test]
    fn simpson_integrates_exp() {
        let v = adaptive_simpson(|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }
}
