//! Ladder-operator representations of position, covariant derivative,
//! velocity, and guiding-center observables on the truncated basis, plus the
//! exactly solvable linear and dot/antidot closed-form checks.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::landau::Truncation;
use crate::linalg;

fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::<C64>::zeros((ra * rb, ca * cb));
    for ((i, j), &av) in a.indexed_iter() {
        if av != C64::new(0.0, 0.0) {
            out.slice_mut(ndarray::s![i * rb..(i + 1) * rb, j * cb..(j + 1) * cb])
                .assign(&(b * av));
        }
    }
    out
}

/// Annihilation matrix `⟨j-1|a|j⟩ = √j` on a `d`-dimensional number basis.
fn annihilation(d: usize) -> Array2<C64> {
    let mut a = Array2::<C64>::zeros((d, d));
    for j in 1..d {
        a[[j - 1, j]] = C64::new((j as f64).sqrt(), 0.0);
    }
    a
}

/// Truncated matrices of the kinematic observables on the `(n, k)` basis,
/// flat index `n·n_center + k`.
pub struct LadderRep {
    pub trunc: Truncation,
    pub q1: Array2<C64>,
    pub q2: Array2<C64>,
    pub d1: Array2<C64>,
    pub d2: Array2<C64>,
    pub v1: Array2<C64>,
    pub v2: Array2<C64>,
    pub c1: Array2<C64>,
    pub c2: Array2<C64>,
}

/// Velocity pair as a ladder on the Landau index, guiding center as a ladder
/// on the center index: `a = (v₁ + i v₂)/√2`, `b = (c₂ + i c₁)/√2`; the
/// remaining observables follow from `q = c + v^⊥` and `v = D - q^⊥/2`.
pub fn build_ladder(trunc: &Truncation) -> Result<LadderRep> {
    trunc.validate()?;
    let nl = trunc.n_landau;
    let nc = trunc.n_center;
    let il = Array2::<C64>::eye(nl);
    let ic = Array2::<C64>::eye(nc);
    let s2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = C64::new(0.0, 1.0);

    let a = annihilation(nl);
    let adag = linalg::adjoint(&a);
    let v1 = kron(&((&a + &adag).mapv(|z| z * s2)), &ic);
    let v2 = kron(&((&a - &adag).mapv(|z| z * s2 * (-i))), &ic);

    let b = annihilation(nc);
    let bdag = linalg::adjoint(&b);
    let c2 = kron(&il, &((&b + &bdag).mapv(|z| z * s2)));
    let c1 = kron(&il, &((&b - &bdag).mapv(|z| z * s2 * (-i))));

    // q = c + v^⊥ with x^⊥ = (-x₂, x₁)
    let q1 = &c1 - &v2;
    let q2 = &c2 + &v1;
    // v = D - q^⊥/2  ⇒  D = v + q^⊥/2
    let half = C64::new(0.5, 0.0);
    let d1 = &v1 - &q2.mapv(|z| z * half);
    let d2 = &v2 + &q1.mapv(|z| z * half);

    Ok(LadderRep { trunc: trunc.clone(), q1, q2, d1, d2, v1, v2, c1, c2 })
}

impl LadderRep {
    pub fn dim(&self) -> usize {
        self.trunc.dim()
    }

    /// Exact Landau diagonal `(n + 1/2)` — the untruncated `(v₁² + v₂²)/2`.
    pub fn h_landau(&self) -> Array2<C64> {
        let nc = self.trunc.n_center;
        Array2::from_diag(&ndarray::Array1::from_iter(
            (0..self.dim()).map(|r| C64::new((r / nc) as f64 + 0.5, 0.0)),
        ))
    }

    /// Interior-window norm of `A - B`.
    pub fn interior_residual(&self, a: &Array2<C64>, b: &Array2<C64>) -> f64 {
        self.trunc.interior_norm(&(a - b))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearCaseReport {
    pub e: [f64; 2],
    /// Interior residual of `U₀ (H_La + V) U₀⁻¹ = H_La - ⟨E,c⟩ - E²/2`.
    pub residual_identity1: f64,
    /// Interior residual of `U₀⁻¹ H_La U₀ = (v + E^⊥)²/2`.
    pub residual_identity2: f64,
    /// Interior residual of `[(v + E^⊥)²/2, H_La + V]`.
    pub residual_invariant: f64,
    /// Largest interior off-diagonal (in `n`) block of the transformed
    /// operator.
    pub blockdiag_residual: f64,
    /// Sorted-spectrum displacement under the conjugation (interior count).
    pub spectrum_shift: f64,
}

/// The linear potential `V = -⟨E, q⟩` is removed exactly by the velocity
/// boost `U₀ = exp(i⟨E, v⟩)`.
pub fn check_linear_case(e: [f64; 2], trunc: &Truncation) -> Result<LinearCaseReport> {
    let rep = build_ladder(trunc)?;
    let h_la = rep.h_landau();
    let e_sq = e[0] * e[0] + e[1] * e[1];
    let re = |x: f64| C64::new(x, 0.0);

    let v_pot = -(rep.q1.mapv(|z| z * re(e[0])) + rep.q2.mapv(|z| z * re(e[1])));
    let h = &h_la + &v_pot;

    let gen = (rep.v1.mapv(|z| z * re(e[0])) + rep.v2.mapv(|z| z * re(e[1])))
        .mapv(|z| z * C64::new(0.0, 1.0));
    let u0 = linalg::exp_skew(&gen);
    let u0d = linalg::adjoint(&u0);

    let lhs1 = u0.dot(&h).dot(&u0d);
    let ec = rep.c1.mapv(|z| z * re(e[0])) + rep.c2.mapv(|z| z * re(e[1]));
    let rhs1 = &h_la - &ec - &(Array2::<C64>::eye(rep.dim()).mapv(|z| z * re(0.5 * e_sq)));
    let residual_identity1 = rep.interior_residual(&lhs1, &rhs1);

    let lhs2 = u0d.dot(&h_la).dot(&u0);
    let w1 = &rep.v1 + &Array2::<C64>::eye(rep.dim()).mapv(|z| z * re(-e[1]));
    let w2 = &rep.v2 + &Array2::<C64>::eye(rep.dim()).mapv(|z| z * re(e[0]));
    let rhs2 = (w1.dot(&w1) + w2.dot(&w2)).mapv(|z| z * re(0.5));
    let residual_identity2 = rep.interior_residual(&lhs2, &rhs2);

    let comm = rhs2.dot(&h) - h.dot(&rhs2);
    let residual_invariant = rep.trunc.interior_norm(&comm);

    // the transformed operator must be block-diagonal in the Landau index
    let nc = trunc.n_center;
    let mut blockdiag_residual = 0.0f64;
    for n in trunc.interior_levels() {
        for m in trunc.interior_levels() {
            if n == m {
                continue;
            }
            let block = lhs1.slice(ndarray::s![n * nc..(n + 1) * nc, m * nc..(m + 1) * nc]);
            let inner = block
                .slice(ndarray::s![trunc.interior_center(), trunc.interior_center()])
                .to_owned();
            blockdiag_residual = blockdiag_residual.max(linalg::sigma_max(&inner));
        }
    }

    let ea = linalg::eigvalsh(&h);
    let eb = linalg::eigvalsh(&lhs1);
    let spectrum_shift = ea
        .iter()
        .zip(&eb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);

    Ok(LinearCaseReport {
        e,
        residual_identity1,
        residual_identity2,
        residual_invariant,
        blockdiag_residual,
        spectrum_shift,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DotCaseReport {
    pub eps: f64,
    pub sign: i8,
    pub omega: f64,
    /// Interior residual of
    /// `U (H_La + V) U⁻¹ = (1+Ω)/2 · H_La + (Ω-1)/2 · c²/2`.
    pub residual_identity1: f64,
    /// Interior residual of `[U⁻¹ RHS U, H_La + V]`.
    pub residual_invariant: f64,
    pub spectrum_shift: f64,
}

/// Dot (`sign = +1`) / antidot (`sign = -1`) potential `V = ±(ε²/2) q²`,
/// solved by the dilation `U = exp(-ln√Ω · i(q·D + D·q)/2)`, `Ω = √(1 ± 4ε²)`.
pub fn check_dot_case(eps: f64, sign: i8, trunc: &Truncation) -> Result<DotCaseReport> {
    assert!(sign == 1 || sign == -1);
    let omega_sq = 1.0 + sign as f64 * 4.0 * eps * eps;
    if omega_sq <= 0.0 {
        return Err(Error::OmegaImaginary(omega_sq));
    }
    let omega = omega_sq.sqrt();
    let rep = build_ladder(trunc)?;
    let h_la = rep.h_landau();
    let re = |x: f64| C64::new(x, 0.0);

    let q_sq = rep.q1.dot(&rep.q1) + rep.q2.dot(&rep.q2);
    let v_pot = q_sq.mapv(|z| z * re(sign as f64 * 0.5 * eps * eps));
    let h = &h_la + &v_pot;

    // q·D + D·q; the magnetic part of D drops out (q ⟂ q^⊥), leaving the
    // pure dilation generator
    let s = (rep.q1.dot(&rep.d1)
        + rep.d1.dot(&rep.q1)
        + rep.q2.dot(&rep.d2)
        + rep.d2.dot(&rep.q2))
        .mapv(|z| z * re(0.5));
    let tau = -omega.sqrt().ln();
    let u = linalg::exp_skew(&s.mapv(|z| z * C64::new(0.0, tau)));
    let ud = linalg::adjoint(&u);

    let c_sq = rep.c1.dot(&rep.c1) + rep.c2.dot(&rep.c2);
    let rhs = h_la.mapv(|z| z * re(0.5 * (1.0 + omega)))
        + c_sq.mapv(|z| z * re(0.25 * (omega - 1.0)));

    let lhs = u.dot(&h).dot(&ud);
    let residual_identity1 = rep.interior_residual(&lhs, &rhs);

    let invariant = ud.dot(&rhs).dot(&u);
    let comm = invariant.dot(&h) - h.dot(&invariant);
    let residual_invariant = rep.trunc.interior_norm(&comm);

    let ea = linalg::eigvalsh(&h);
    let eb = linalg::eigvalsh(&lhs);
    let spectrum_shift = ea
        .iter()
        .zip(&eb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);

    Ok(DotCaseReport {
        eps,
        sign,
        omega,
        residual_identity1,
        residual_invariant,
        spectrum_shift,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HamiltonianMatrix {
    pub v_second: [[f64; 2]; 2],
    pub h_mat: [[f64; 4]; 4],
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixEigenReport {
    pub matrix: HamiltonianMatrix,
    /// Numerically computed spectrum (ground truth), sorted by (re, im).
    pub eigenvalues: Vec<(f64, f64)>,
    /// `{±i√(P+Q), ±√(Q-P)}` as stated, for comparison only.
    pub formula_eigenvalues: Vec<(f64, f64)>,
    /// Max distance from each formula value to the nearest computed one;
    /// recorded, never asserted — the stated formula disagrees with the
    /// matrix already at V'' = 0.
    pub formula_mismatch: f64,
}

/// Assemble the 4×4 linearized-dynamics matrix
/// `ℍ = (σᵗ/2, -𝕀; 𝕀/4 + V'', σᵗ/2)` with `σ = (0, 1; -1, 0)` and
/// eigensolve it.
pub fn hamiltonian_matrix_eigen(v_second: [[f64; 2]; 2]) -> MatrixEigenReport {
    use ndarray_linalg::Eig;

    let p = 1.0 + v_second[0][0] + v_second[1][1];
    let det = v_second[0][0] * v_second[1][1] - v_second[0][1] * v_second[1][0];
    let q = p * p - 4.0 * det;

    // σᵗ/2 with σ = [[0, 1], [-1, 0]]
    let h_mat = [
        [0.0, -0.5, -1.0, 0.0],
        [0.5, 0.0, 0.0, -1.0],
        [0.25 + v_second[0][0], v_second[0][1], 0.0, -0.5],
        [v_second[1][0], 0.25 + v_second[1][1], 0.5, 0.0],
    ];
    let a = Array2::from_shape_fn((4, 4), |(i, j)| C64::new(h_mat[i][j], 0.0));
    let (vals, _) = a.eig().expect("4x4 eigensolve");
    let mut eigenvalues: Vec<(f64, f64)> = vals.iter().map(|z| (z.re, z.im)).collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let sqrt_c = |x: f64| {
        if x >= 0.0 {
            C64::new(x.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-x).sqrt())
        }
    };
    let rpq = sqrt_c(p + q);
    let rqp = sqrt_c(q - p);
    let formula = [
        C64::new(0.0, 1.0) * rpq,
        C64::new(0.0, -1.0) * rpq,
        rqp,
        -rqp,
    ];
    let mut formula_eigenvalues: Vec<(f64, f64)> = formula.iter().map(|z| (z.re, z.im)).collect();
    formula_eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let formula_mismatch = formula
        .iter()
        .map(|f| {
            vals.iter()
                .map(|v| (f - v).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);

    MatrixEigenReport {
        matrix: HamiltonianMatrix { v_second, h_mat, p, q },
        eigenvalues,
        formula_eigenvalues,
        formula_mismatch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockop::BlockOperator;
    use crate::flow::{self, IterateOptions};

    fn trunc(nl: usize, nc: usize, m: usize) -> Truncation {
        Truncation::new(nl, nc, m).unwrap()
    }

    fn eye_scaled(dim: usize, x: C64) -> Array2<C64> {
        Array2::<C64>::eye(dim).mapv(|z| z * x)
    }

    #[test]
    fn ladder_commutation_relations() {
        let t = trunc(8, 8, 2);
        let rep = build_ladder(&t).unwrap();
        let i = C64::new(0.0, 1.0);
        let dim = rep.dim();
        let checks: Vec<(&str, Array2<C64>, Array2<C64>)> = vec![
            ("[v1,v2]", rep.v1.dot(&rep.v2) - rep.v2.dot(&rep.v1), eye_scaled(dim, i)),
            ("[c2,c1]", rep.c2.dot(&rep.c1) - rep.c1.dot(&rep.c2), eye_scaled(dim, i)),
            ("[c1,v1]", rep.c1.dot(&rep.v1) - rep.v1.dot(&rep.c1), Array2::zeros((dim, dim))),
            ("[c1,v2]", rep.c1.dot(&rep.v2) - rep.v2.dot(&rep.c1), Array2::zeros((dim, dim))),
            ("[c2,v1]", rep.c2.dot(&rep.v1) - rep.v1.dot(&rep.c2), Array2::zeros((dim, dim))),
            ("[c2,v2]", rep.c2.dot(&rep.v2) - rep.v2.dot(&rep.c2), Array2::zeros((dim, dim))),
            ("[q1,q2]", rep.q1.dot(&rep.q2) - rep.q2.dot(&rep.q1), Array2::zeros((dim, dim))),
        ];
        for (name, got, want) in checks {
            let r = rep.interior_residual(&got, &want);
            assert!(r < 1e-10, "{name} interior residual {r}");
        }
    }

    #[test]
    fn kinetic_energy_reproduces_landau_diagonal_on_interior() {
        let t = trunc(8, 8, 2);
        let rep = build_ladder(&t).unwrap();
        let kinetic = (rep.v1.dot(&rep.v1) + rep.v2.dot(&rep.v2)).mapv(|z| z * C64::new(0.5, 0.0));
        let r = rep.interior_residual(&kinetic, &rep.h_landau());
        assert!(r < 1e-12, "interior residual {r}");
    }

    #[test]
    fn position_from_two_constructions() {
        // q = c + v^⊥ is definitional here; cross-check against D instead:
        // c = -D^⊥ + q/2 must close the triangle
        let t = trunc(6, 6, 1);
        let rep = build_ladder(&t).unwrap();
        let half = C64::new(0.5, 0.0);
        let c1_alt = &rep.d2 + &rep.q1.mapv(|z| z * half);
        let c2_alt = -&rep.d1 + rep.q2.mapv(|z| z * half);
        assert!(rep.interior_residual(&c1_alt, &rep.c1) < 1e-12);
        assert!(rep.interior_residual(&c2_alt, &rep.c2) < 1e-12);
    }

    #[test]
    fn observables_are_hermitian() {
        let t = trunc(5, 5, 1);
        let rep = build_ladder(&t).unwrap();
        for m in [&rep.q1, &rep.q2, &rep.d1, &rep.d2, &rep.v1, &rep.v2, &rep.c1, &rep.c2] {
            assert!(linalg::hermiticity_defect(m) < 1e-14);
        }
    }

    #[test]
    fn linear_case_trivial_at_zero_field() {
        let t = trunc(6, 6, 1);
        let r = check_linear_case([0.0, 0.0], &t).unwrap();
        assert!(r.residual_identity1 < 1e-13);
        assert!(r.residual_identity2 < 1e-13);
        assert!(r.residual_invariant < 1e-13);
    }

    #[test]
    fn linear_case_at_reference_field() {
        // the margin absorbs truncation leakage of exp(i⟨E,v⟩); at this
        // cutoff the edge coupling into the interior sits below 1e-8
        let t = trunc(32, 32, 12);
        let r = check_linear_case([0.3, 0.0], &t).unwrap();
        assert!(r.residual_identity1 < 1e-7, "id1 {}", r.residual_identity1);
        assert!(r.residual_identity2 < 1e-7, "id2 {}", r.residual_identity2);
        assert!(r.residual_invariant < 1e-7, "inv {}", r.residual_invariant);
        assert!(r.blockdiag_residual < 1e-7, "blockdiag {}", r.blockdiag_residual);
    }

    #[test]
    fn dot_case_omega_values() {
        let t = trunc(6, 6, 1);
        let r = check_dot_case(0.25, 1, &t).unwrap();
        assert!((r.omega - 1.25f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            check_dot_case(0.5, -1, &t),
            Err(Error::OmegaImaginary(_))
        ));
    }

    #[test]
    fn dot_case_near_zero_is_identity() {
        let t = trunc(8, 8, 2);
        let r = check_dot_case(1e-8, 1, &t).unwrap();
        assert!((r.omega - 1.0).abs() < 1e-15);
        assert!(r.residual_identity1 < 1e-12);
    }

    #[test]
    fn dot_and_antidot_identities() {
        let t = trunc(16, 16, 4);
        for sign in [1i8, -1] {
            let r = check_dot_case(0.1, sign, &t).unwrap();
            assert!(r.residual_identity1 < 1e-6, "sign {sign}: id1 {}", r.residual_identity1);
            assert!(r.residual_invariant < 1e-6, "sign {sign}: inv {}", r.residual_invariant);
        }
    }

    #[test]
    fn matrix_eigen_free_case() {
        let rep = hamiltonian_matrix_eigen([[0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(rep.matrix.p, 1.0);
        assert_eq!(rep.matrix.q, 1.0);
        // characteristic polynomial x²(x² + 1): {0, 0, ±i}
        let mut sorted = rep.eigenvalues.clone();
        sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        assert!((sorted[0].0.abs()) < 1e-12 && (sorted[0].1 + 1.0).abs() < 1e-12);
        assert!(sorted[1].0.abs() < 1e-12 && sorted[1].1.abs() < 1e-12);
        assert!(sorted[2].0.abs() < 1e-12 && sorted[2].1.abs() < 1e-12);
        assert!((sorted[3].0.abs()) < 1e-12 && (sorted[3].1 - 1.0).abs() < 1e-12);
        // the stated closed form gives ±i√2 here — mismatch is recorded
        assert!(rep.formula_mismatch > 0.1);
    }

    #[test]
    fn matrix_eigen_strong_antidot_goes_unstable() {
        // For isotropic curvature V'' = v·I the blocks commute and the
        // eigenvalues are λ = ±i/2 ± i√(1/4 + v). Past v = -1/4 the square
        // root turns real and the spectrum becomes a complex quartet
        // ±√|1/4+v| ± i/2 — the antidot center destabilizes.
        let v = -0.3;
        let rep = hamiltonian_matrix_eigen([[v, 0.0], [0.0, v]]);
        let growth = (0.25f64 + v).abs().sqrt();
        for &(re, im) in &rep.eigenvalues {
            assert!((re.abs() - growth).abs() < 1e-12, "re {re}");
            assert!((im.abs() - 0.5).abs() < 1e-12, "im {im}");
        }
        // weak isotropic curvature stays elliptic: purely imaginary spectrum
        let weak = hamiltonian_matrix_eigen([[-0.01, 0.0], [0.0, -0.01]]);
        for &(re, _) in &weak.eigenvalues {
            assert!(re.abs() < 1e-12, "re {re}");
        }
    }

    #[test]
    fn flow_cross_validation_linear_potential() {
        // the flow's block-diagonal limit must match the closed form
        // H_La - ⟨E,c⟩ - E²/2 level by level, compared through bulk spectra
        let t = trunc(6, 20, 4);
        let e = [0.04, 0.0];
        let rep = build_ladder(&t).unwrap();
        let re = |x: f64| C64::new(x, 0.0);
        let v_flat =
            -(rep.q1.mapv(|z| z * re(e[0])) + rep.q2.mapv(|z| z * re(e[1])));
        let h_flat = &rep.h_landau() + &v_flat;
        let h = BlockOperator::from_flat(&h_flat, t.n_landau, t.n_center);
        let out = flow::iterate(&h, 1.0, 1e-12, 12, &IterateOptions::default()).unwrap();

        let e_sq = e[0] * e[0] + e[1] * e[1];
        let ec = rep.c1.mapv(|z| z * re(e[0])) + rep.c2.mapv(|z| z * re(e[1]));
        let nc = t.n_center;
        for n in t.interior_levels() {
            let got = out.h_inf.block(n, n).unwrap();
            let want = Array2::<C64>::eye(nc).mapv(|z| z * re(n as f64 + 0.5 - 0.5 * e_sq))
                - ec.slice(ndarray::s![0..nc, 0..nc]).to_owned();
            let ea = linalg::eigvalsh(got);
            let eb = linalg::eigvalsh(&want);
            // compare the bulk of the sorted spectra; truncated edges of the
            // center window differ by design
            let lo = nc / 3;
            let hi = nc - nc / 3;
            for idx in lo..hi {
                assert!(
                    (ea[idx] - eb[idx]).abs() < 1e-6,
                    "level {n}, eigenvalue {idx}: {} vs {}",
                    ea[idx],
                    eb[idx]
                );
            }
        }
    }
}
