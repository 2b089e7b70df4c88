//! Numerical integration used by the oracle tests: adaptive Gauss–Kronrod on
//! an interval, fixed-order Gauss–Legendre, and the periodic trapezoid rule.
//!
//! These routines are deliberately independent of the closed-form special
//! functions they are used to validate.

/// 7-point Gauss / 15-point Kronrod abscissae (positive half) and weights.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let fv = if x == 0.0 {
            f(center)
        } else {
            f(center - half * x) + f(center + half * x)
        };
        kronrod += wk * fv;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fv;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`, bisecting until
/// the local error estimate sums below `tol`.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        // the second acceptance clause is the round-off floor: below
        // ~100 eps relative the Gauss/Kronrod difference is pure noise and
        // further bisection cannot reduce it
        if err < tol || err < 100.0 * f64::EPSILON * value.abs() || depth >= 40 {
            value
        } else {
            let mid = 0.5 * (a + b);
            recurse(f, a, mid, tol * 0.5, depth + 1) + recurse(f, mid, b, tol * 0.5, depth + 1)
        }
    }
    recurse(&f, a, b, tol, 0)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed Gauss–Legendre integration of `f` over `[a, b]`.
pub fn integrate_gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(center + half * x))
        .sum::<f64>()
        * half
}

/// Trapezoid rule over one period `[0, 2π)`; spectrally accurate for smooth
/// periodic integrands.
pub fn integrate_periodic(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|j| f(j as f64 * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_gaussian_integral() {
        // ∫₀^∞ e^{-x²} dx = √π/2
        let v = integrate_adaptive(|x| (-x * x).exp(), 0.0, 10.0, 1e-14);
        assert!((v - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        // 10-point rule integrates x^18 exactly
        let v = integrate_gauss(|x| x.powi(18), -1.0, 1.0, 10);
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_fourier_mode() {
        let v = integrate_periodic(|t| (3.0 * t).cos() * (3.0 * t).cos(), 64);
        assert!((v - std::f64::consts::PI).abs() < 1e-12);
    }
}
