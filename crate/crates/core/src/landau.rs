//! Landau-basis infrastructure: generalized Laguerre polynomials, the
//! angular-momentum eigenfunctions, closed-form Gaussian matrix elements,
//! magnetic translations restricted to the center-oscillator factor, and
//! empirical audits of the combinatorial decay bounds.
//!
//! Basis bookkeeping: a state is labeled by the Landau level `n ≥ 0` and the
//! angular momentum `l ≥ -n`, or equivalently by the center-oscillator index
//! `k = n + l ≥ 0`. The pair `(n, k)` enumerates the basis on a rectangular
//! grid, which is what the truncation cuts.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Landau level and angular momentum label with `l ≥ -n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LandauIndex {
    pub n: usize,
    pub l: i64,
}

impl LandauIndex {
    pub fn new(n: usize, l: i64) -> Result<Self> {
        if l < -(n as i64) {
            return Err(Error::Domain(format!("angular momentum l = {l} < -n = {}", -(n as i64))));
        }
        Ok(Self { n, l })
    }

    /// Center-oscillator index `k = n + l ≥ 0`.
    pub fn k(&self) -> usize {
        (self.n as i64 + self.l) as usize
    }

    pub fn from_level_and_center(n: usize, k: usize) -> Self {
        Self { n, l: k as i64 - n as i64 }
    }
}

/// Finite-dimensional basis cutoffs: levels `0..n_landau`, center states
/// `0..n_center`, with `interior_margin` indices excluded from assertions at
/// the upper truncation edge of each index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_landau: usize,
    pub n_center: usize,
    pub interior_margin: usize,
}

impl Truncation {
    pub fn new(n_landau: usize, n_center: usize, interior_margin: usize) -> Result<Self> {
        let t = Self { n_landau, n_center, interior_margin };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_landau < 2 || self.n_center < 1 {
            return Err(Error::Domain(format!(
                "truncation requires n_landau ≥ 2, n_center ≥ 1 (got {}, {})",
                self.n_landau, self.n_center
            )));
        }
        if self.interior_margin >= self.n_landau.min(self.n_center) {
            return Err(Error::Domain(format!(
                "interior margin {} too large for cutoffs ({}, {})",
                self.interior_margin, self.n_landau, self.n_center
            )));
        }
        Ok(())
    }

    /// Flattened dimension `n_landau · n_center`.
    pub fn dim(&self) -> usize {
        self.n_landau * self.n_center
    }

    /// Levels on which assertions are made. Only the top of each index range
    /// is a truncation edge — the spectrum is exactly bounded below — so the
    /// margin trims the upper end alone.
    pub fn interior_levels(&self) -> std::ops::Range<usize> {
        0..self.n_landau - self.interior_margin
    }

    pub fn interior_center(&self) -> std::ops::Range<usize> {
        0..self.n_center - self.interior_margin
    }

    /// Whether flattened index `n·n_center + k` lies in the interior window.
    pub fn is_interior(&self, flat: usize) -> bool {
        let n = flat / self.n_center;
        let k = flat % self.n_center;
        self.interior_levels().contains(&n) && self.interior_center().contains(&k)
    }

    /// Zero out all rows and columns outside the interior window.
    pub fn restrict_interior(&self, a: &Array2<C64>) -> Array2<C64> {
        assert_eq!(a.dim(), (self.dim(), self.dim()));
        let mut out = a.clone();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if !self.is_interior(i) || !self.is_interior(j) {
                    out[[i, j]] = C64::new(0.0, 0.0);
                }
            }
        }
        out
    }

    /// Operator norm of the interior-restricted matrix.
    pub fn interior_norm(&self, a: &Array2<C64>) -> f64 {
        crate::linalg::sigma_max(&self.restrict_interior(a))
    }
}

// ---------------------------------------------------------------------------
// Generalized Laguerre polynomials
// ---------------------------------------------------------------------------

/// Generalized Laguerre polynomial `L_n^l(x)`, extended to `-n ≤ l < 0` by
/// the reflection `L_n^l(x) = ((n+l)!/n!)(-x)^{-l} L_{n+l}^{-l}(x)`.
pub fn laguerre(n: usize, l: i64, x: f64) -> Result<f64> {
    if l < -(n as i64) {
        return Err(Error::Domain(format!("laguerre: l = {l} < -n = {}", -(n as i64))));
    }
    if l < 0 {
        let m = (-l) as usize;
        // (n+l)!/n! = 1/(n (n-1) ⋯ (n-m+1))
        let mut ratio = 1.0;
        for j in (n - m + 1)..=n {
            ratio /= j as f64;
        }
        return Ok(ratio * (-x).powi(m as i32) * laguerre_nonneg(n - m, m as f64, x));
    }
    Ok(laguerre_nonneg(n, l as f64, x))
}

/// Three-term recurrence in the degree for real upper index `α ≥ 0`.
fn laguerre_nonneg(n: usize, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - (kf + alpha) * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

// ---------------------------------------------------------------------------
// Eigenfunctions
// ---------------------------------------------------------------------------

/// `r^l L_n^l(r²/2)` with the negative-`l` case expanded so that no negative
/// power of `r` is ever formed.
fn radial_polynomial(n: usize, l: i64, r: f64) -> f64 {
    let x = 0.5 * r * r;
    if l >= 0 {
        r.powi(l as i32) * laguerre_nonneg(n, l as f64, x)
    } else {
        let m = (-l) as usize;
        let mut ratio = 1.0;
        for j in (n - m + 1)..=n {
            ratio /= j as f64;
        }
        // r^{-m} (−r²/2)^m = (−1)^m r^m / 2^m
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        ratio * sign * r.powi(m as i32) / 2f64.powi(m as i32) * laguerre_nonneg(n - m, m as f64, x)
    }
}

/// Angular-momentum eigenfunction `ψ_{n,l}(r, θ)` of the Landau level `n`,
/// including the `(-1)^n` phase and the normalization prefactor.
pub fn psi_eval(idx: LandauIndex, r: f64, theta: f64) -> C64 {
    let n = idx.n;
    let l = idx.l;
    let ln_norm = 0.5 * (ln_factorial(n as u64) - l as f64 * LN_2 - ln_factorial((n as i64 + l) as u64));
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let radial = radial_polynomial(n, l, r) * (-0.25 * r * r).exp();
    let amp = sign * ln_norm.exp() * radial / (2.0 * std::f64::consts::PI).sqrt();
    C64::from_polar(1.0, l as f64 * theta) * amp
}

// ---------------------------------------------------------------------------
// Gaussian matrix elements
// ---------------------------------------------------------------------------

/// Signed matrix element `⟨ψ_{n,l}, g ψ_{m,l}⟩` of the centered Gaussian
/// `g(q) = e^{-q²/2}`:
///
/// `(-1)^{n+m} (l+m+n)! / (2^{l+m+n+1} √((l+m)!(l+n)!n!m!))`
///
/// evaluated in log-Gamma arithmetic. Negative `l` reduces to
/// `element(n+l, m+l, -l)` through `ψ_{n,l} = ψ̄_{n+l,-l}`.
pub fn gaussian_element(n: usize, m: usize, l: i64) -> Result<f64> {
    let min_nm = n.min(m) as i64;
    if l < -min_nm {
        return Err(Error::Domain(format!("gaussian_element: l = {l} < -min(n,m) = {}", -min_nm)));
    }
    if l < 0 {
        return gaussian_element((n as i64 + l) as usize, (m as i64 + l) as usize, -l);
    }
    // canonical order makes the n ↔ m symmetry exact in floating point
    let (n, m) = (n.min(m), n.max(m));
    let (n, m, l) = (n as u64, m as u64, l as u64);
    let ln_mag = ln_factorial(l + m + n) - (l + m + n + 1) as f64 * LN_2
        - 0.5 * (ln_factorial(l + m) + ln_factorial(l + n) + ln_factorial(n) + ln_factorial(m));
    let sign = if (n + m) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * ln_mag.exp())
}

// ---------------------------------------------------------------------------
// Magnetic translations on the center-oscillator factor
// ---------------------------------------------------------------------------

/// Displacement-operator matrix `⟨j|D(α)|k⟩` on `dim` number states:
/// `√(k!/j!) α^{j-k} e^{-|α|²/2} L_k^{(j-k)}(|α|²)` for `j ≥ k` and the
/// conjugate-transpose relation for `j < k`.
pub fn displacement_matrix(dim: usize, alpha: C64) -> Array2<C64> {
    let a2 = alpha.norm_sqr();
    let envelope = (-0.5 * a2).exp();
    let mut out = Array2::<C64>::zeros((dim, dim));
    for j in 0..dim {
        for k in 0..=j {
            let d = (j - k) as i64;
            let ln_ratio = 0.5 * (ln_factorial(k as u64) - ln_factorial(j as u64));
            let lag = laguerre_nonneg(k, d as f64, a2);
            let radial = ln_ratio.exp() * envelope * lag;
            out[[j, k]] = alpha.powi(d as i32) * radial;
            if j != k {
                // ⟨k|D(α)|j⟩ = √(k!/j!) (-ᾱ)^{j-k} e^{-|α|²/2} L_k^{(j-k)}(|α|²)
                out[[k, j]] = (-alpha.conj()).powi(d as i32) * radial;
            }
        }
    }
    out
}

/// Coherent displacement parameter encoding the spatial shift `y`: the
/// magnetic translation `T(y)` acts on the center-oscillator factor as the
/// standard displacement `D(α)` with `α = (y₁ - i y₂)/√2`. The orientation
/// is pinned by the quadrature oracle over `⟨ψ_{n,l}, g(·-y) ψ_{m,l'}⟩`.
pub fn alpha_from_shift(y: [f64; 2]) -> C64 {
    C64::new(y[0], -y[1]) / 2f64.sqrt()
}

/// Matrix of the magnetic translation `T(y)` restricted to the
/// center-oscillator factor of the truncated basis.
pub fn magnetic_translation_center(n_center: usize, y: [f64; 2]) -> Array2<C64> {
    displacement_matrix(n_center, alpha_from_shift(y))
}

// ---------------------------------------------------------------------------
// Bound audits
// ---------------------------------------------------------------------------

/// Empirical constants for the combinatorial inequalities controlling the
/// inter-band decay of Gaussian matrix elements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundAuditReport {
    pub n_max: usize,
    /// Ratio sup for the exponential form of the central-coefficient bound.
    pub c6: f64,
    /// Sup of `⟨m-n⟩ (m+n)!/(2^{m+n} n! m!)`.
    pub c7: f64,
    /// Sup of `⟨m-n⟩` times the Gaussian matrix-element magnitude.
    pub c8: f64,
    /// Same suprema restricted to indices ≤ 100, for stability checks.
    pub c6_at_100: f64,
    pub c7_at_100: f64,
    pub c8_at_100: f64,
}

fn angle(a: i64) -> f64 {
    (a.abs() as f64).max(1.0)
}

/// Scan the inequality families up to `n_max` (and `l + m + n ≤ 3·n_max`)
/// and report the empirical constants.
pub fn audit_bounds(n_max: usize) -> BoundAuditReport {
    assert!(n_max >= 2 && n_max <= 500, "audit range requires 2 ≤ n_max ≤ 500");
    // shared log-factorial table up to the largest argument that occurs
    let table: Vec<f64> = (0..=(3 * n_max + 2) as u64).map(ln_factorial).collect();
    let lf = |i: usize| table[i];

    let a_ln = |m: usize, n: usize| lf(m + n) - (m + n) as f64 * LN_2 - lf(n) - lf(m);

    let mut c6: f64 = 0.0;
    let mut c6_small: f64 = 0.0;
    for m in 1..=n_max {
        for n in 1..=n_max {
            let a = (m + n) as f64;
            let b = m as f64 - n as f64;
            let bound = a / (a * a - b * b).sqrt() * (-b * b / (2.0 * a)).exp();
            let ratio = a_ln(m, n).exp() / bound;
            c6 = c6.max(ratio);
            if m <= 100 && n <= 100 {
                c6_small = c6_small.max(ratio);
            }
        }
    }

    let mut c7: f64 = 0.0;
    let mut c7_small: f64 = 0.0;
    for m in 0..=n_max {
        for n in 0..=n_max {
            let v = angle(m as i64 - n as i64) * a_ln(m, n).exp();
            c7 = c7.max(v);
            if m <= 100 && n <= 100 {
                c7_small = c7_small.max(v);
            }
        }
    }

    // b-family: ⟨m-n⟩ (l+m+n)!/(2^{l+m+n+1} √((l+m)!(l+n)!n!m!))
    let scan_c8 = |limit: usize| -> f64 {
        (0..=limit)
            .into_par_iter()
            .map(|m| {
                let mut local: f64 = 0.0;
                for n in 0..=limit {
                    let lo = -(m.min(n) as i64);
                    let hi = 3 * n_max as i64 - m as i64 - n as i64;
                    for l in lo..=hi {
                        let (rn, rm, rl) = if l < 0 {
                            ((n as i64 + l) as usize, (m as i64 + l) as usize, -l)
                        } else {
                            (n, m, l)
                        };
                        let s = rl as usize + rm + rn;
                        let ln_mag = lf(s) - (s + 1) as f64 * LN_2
                            - 0.5 * (lf(rl as usize + rm) + lf(rl as usize + rn) + lf(rn) + lf(rm));
                        local = local.max(angle(m as i64 - n as i64) * ln_mag.exp());
                    }
                }
                local
            })
            .reduce(|| 0.0, f64::max)
    };
    let c8 = scan_c8(n_max);
    let c8_small = scan_c8(n_max.min(100));

    BoundAuditReport {
        n_max,
        c6,
        c7,
        c8,
        c6_at_100: c6_small,
        c7_at_100: c7_small,
        c8_at_100: c8_small,
    }
}
