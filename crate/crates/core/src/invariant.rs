//! End-to-end construction of the constant of motion: build `H = H_La + V`,
//! block-diagonalize it, pull the Landau diagonal back through the conjugation
//! to get `J = U† H_La U`, and verify invariance both algebraically
//! (`[H, J] ≈ 0`) and dynamically (conserved expectations).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::blockop::BlockOperator;
use crate::error::{Error, Result};
use crate::flow::{self, IterateOptions, IterationTrace};
use crate::landau::Truncation;
use crate::linalg;

/// Pure Landau diagonal `Σ (n + 1/2) Π_n` on the truncated basis.
pub fn landau_diagonal(trunc: &Truncation) -> BlockOperator {
    BlockOperator::scalar_diagonal(trunc.n_landau, trunc.n_center, |n| n as f64 + 0.5)
}

/// `H = H_La + V`.
pub fn build_hamiltonian(v: &BlockOperator, trunc: &Truncation) -> Result<BlockOperator> {
    trunc.validate()?;
    if v.num_blocks() != trunc.n_landau || v.block_dim() != trunc.n_center {
        return Err(Error::DimensionMismatch(format!(
            "potential is {}×{} blocks of dim {}, truncation wants {}×{} of dim {}",
            v.num_blocks(),
            v.num_blocks(),
            v.block_dim(),
            trunc.n_landau,
            trunc.n_landau,
            trunc.n_center
        )));
    }
    landau_diagonal(trunc).add(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    /// `‖[H, J]‖₀` restricted to the interior window.
    pub commutator_residual: f64,
    /// Largest interior `‖[H_∞, Π_n]‖` over level projectors.
    pub blockdiag_residual: f64,
    /// Sorted-eigenvalue displacement between `H` and `H_∞`.
    pub spectrum_error: f64,
    /// Sorted-eigenvalue displacement between `J` and the Landau diagonal.
    pub j_spectrum_error: f64,
    /// `‖U H U† - H_∞‖₀`.
    pub conjugation_error: f64,
    pub interior_levels: (usize, usize),
    pub interior_center: (usize, usize),
    pub iteration_steps: usize,
    pub final_off_norm_1: f64,
    pub hypothesis_satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution_drift_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution_drift_h_la: Option<f64>,
}

/// Output of [`construct_invariant`].
pub struct Invariant {
    pub j: BlockOperator,
    pub h_inf: BlockOperator,
    pub u: BlockOperator,
    pub trace: IterationTrace,
    pub report: InvariantReport,
}

fn interior_commutator_norm(a: &BlockOperator, b: &BlockOperator, trunc: &Truncation) -> Result<f64> {
    let comm = a.commutator(b)?;
    Ok(trunc.interior_norm(&comm.flatten()))
}

fn sorted_eig_displacement(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let ea = linalg::eigvalsh(a);
    let eb = linalg::eigvalsh(b);
    ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Run the superconvergent flow on `H` and conjugate the Landau diagonal back.
pub fn construct_invariant(
    h: &BlockOperator,
    trunc: &Truncation,
    gamma: f64,
    tol: f64,
    max_steps: usize,
) -> Result<Invariant> {
    trunc.validate()?;
    let defect = h.hermiticity_defect();
    if defect > 1e-11 * (1.0 + h.norm_l(0)) {
        return Err(Error::Domain(format!("input Hamiltonian not Hermitian, defect {defect:.3e}")));
    }

    let outcome = flow::iterate(h, gamma, tol, max_steps, &IterateOptions::default())?;
    let h_la = landau_diagonal(trunc);

    // J = U† H_La U
    let uf = outcome.u_total.flatten();
    let j_flat = linalg::adjoint(&uf).dot(&h_la.flatten()).dot(&uf);
    let j = BlockOperator::from_flat(&j_flat, trunc.n_landau, trunc.n_center);

    let commutator_residual = interior_commutator_norm(h, &j, trunc)?;

    // how block-diagonal the limit really is, projector by projector
    let mut blockdiag_residual = 0.0f64;
    for n in trunc.interior_levels() {
        for (bn, bm, b) in outcome.h_inf.iter_blocks() {
            if (bn == n) != (bm == n) {
                blockdiag_residual = blockdiag_residual.max(linalg::sigma_max(b));
            }
        }
    }

    let spectrum_error = sorted_eig_displacement(&h.flatten(), &outcome.h_inf.flatten());
    let j_spectrum_error = sorted_eig_displacement(&j_flat, &h_la.flatten());

    let report = InvariantReport {
        commutator_residual,
        blockdiag_residual,
        spectrum_error,
        j_spectrum_error,
        conjugation_error: outcome.conjugation_error,
        interior_levels: (trunc.interior_levels().start, trunc.interior_levels().end),
        interior_center: (trunc.interior_center().start, trunc.interior_center().end),
        iteration_steps: outcome.trace.steps.len(),
        final_off_norm_1: outcome.trace.final_off_norm_1,
        hypothesis_satisfied: outcome.hypothesis_satisfied,
        evolution_drift_j: None,
        evolution_drift_h_la: None,
    };

    Ok(Invariant {
        j,
        h_inf: outcome.h_inf,
        u: outcome.u_total,
        trace: outcome.trace,
        report,
    })
}

/// One sampled time point of the propagated expectations.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionRow {
    pub t: f64,
    pub exp_j: f64,
    pub exp_h_la: f64,
    pub norm_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionTable {
    pub rows: Vec<EvolutionRow>,
    /// `max_t |⟨J⟩_t - ⟨J⟩_0| / max(|⟨J⟩_0|, 1e-300)`.
    pub drift_j: f64,
    pub drift_h_la: f64,
}

impl EvolutionTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,exp_J,exp_HLa,norm_defect\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.t, r.exp_j, r.exp_h_la, r.norm_defect));
        }
        out
    }
}

/// Normalized Landau eigenvector preset `|n, k⟩`.
pub fn landau_state(trunc: &Truncation, n: usize, k: usize) -> Result<Array1<C64>> {
    if n >= trunc.n_landau || k >= trunc.n_center {
        return Err(Error::Domain(format!("state index ({n},{k}) outside truncation")));
    }
    let mut psi = Array1::<C64>::zeros(trunc.dim());
    psi[n * trunc.n_center + k] = C64::new(1.0, 0.0);
    Ok(psi)
}

/// Equal-weight superposition of `|n, k⟩` for the given levels at a common `k`.
pub fn superposition_state(trunc: &Truncation, levels: &[usize], k: usize) -> Result<Array1<C64>> {
    if levels.is_empty() {
        return Err(Error::Domain("empty level list".into()));
    }
    let mut psi = Array1::<C64>::zeros(trunc.dim());
    let amp = C64::new(1.0 / (levels.len() as f64).sqrt(), 0.0);
    for &n in levels {
        if n >= trunc.n_landau || k >= trunc.n_center {
            return Err(Error::Domain(format!("state index ({n},{k}) outside truncation")));
        }
        psi[n * trunc.n_center + k] = amp;
    }
    Ok(psi)
}

fn expectation(op_flat: &Array2<C64>, psi: &Array1<C64>) -> f64 {
    let apsi = op_flat.dot(psi);
    psi.iter().zip(apsi.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Propagate `ψ_t = e^{-iHt} ψ₀` via one dense Hermitian eigendecomposition
/// and tabulate `⟨J⟩_t` and `⟨H_La⟩_t`.
pub fn evolve_expectations(
    h: &BlockOperator,
    j: &BlockOperator,
    trunc: &Truncation,
    psi0: &Array1<C64>,
    times: &[f64],
) -> Result<EvolutionTable> {
    let dim = h.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has {} components, operator dimension is {dim}",
            psi0.len()
        )));
    }
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::UnnormalizedState(norm));
    }
    for (i, z) in psi0.iter().enumerate() {
        if !trunc.is_interior(i) && z.norm() > 1e-12 {
            return Err(Error::Domain(format!(
                "initial state has weight {:.3e} outside the interior window at index {i}",
                z.norm()
            )));
        }
    }

    let (evals, evecs) = linalg::eigh(&h.flatten());
    let coeffs = linalg::adjoint(&evecs).dot(psi0);
    let j_flat = j.flatten();
    let h_la_flat = landau_diagonal(trunc).flatten();

    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let phases = Array1::from_iter(
            evals.iter().zip(coeffs.iter()).map(|(&e, &c)| C64::from_polar(1.0, -e * t) * c),
        );
        let psi_t = evecs.dot(&phases);
        let norm_t = psi_t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        rows.push(EvolutionRow {
            t,
            exp_j: expectation(&j_flat, &psi_t),
            exp_h_la: expectation(&h_la_flat, &psi_t),
            norm_defect: (norm_t - 1.0).abs(),
        });
    }

    let base_j = rows[0].exp_j;
    let base_h = rows[0].exp_h_la;
    let drift_j = rows
        .iter()
        .map(|r| (r.exp_j - base_j).abs())
        .fold(0.0f64, f64::max)
        / base_j.abs().max(1e-300);
    let drift_h_la = rows
        .iter()
        .map(|r| (r.exp_h_la - base_h).abs())
        .fold(0.0f64, f64::max)
        / base_h.abs().max(1e-300);

    Ok(EvolutionTable { rows, drift_j, drift_h_la })
}

/// Evenly spaced sample times `0..=t_max`.
pub fn sample_times(t_max: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| t_max * i as f64 / steps as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use crate::homological;
    use crate::potential::{assemble, GaussianMixture};

    fn trunc(nl: usize, nc: usize, m: usize) -> Truncation {
        Truncation::new(nl, nc, m).unwrap()
    }

    #[test]
    fn free_hamiltonian_spectrum_and_gap() {
        let t = trunc(4, 3, 1);
        let h = build_hamiltonian(&BlockOperator::zeros(4, 3), &t).unwrap();
        let evals = linalg::eigvalsh(&h.flatten());
        for (i, e) in evals.iter().enumerate() {
            let expected = (i / 3) as f64 + 0.5;
            assert!((e - expected).abs() < 1e-14);
        }
        let gaps = homological::gap_report(&h.diag_part());
        assert!((gaps.gamma_estimate - 1.0).abs() < 1e-13);
    }

    #[test]
    fn off_part_of_h_equals_off_part_of_v() {
        let t = trunc(4, 8, 1);
        let v = assemble(&GaussianMixture::single(0.05, [0.0, 0.0]), &t)
            .unwrap()
            .op;
        let h = build_hamiltonian(&v, &t).unwrap();
        let a = h.offdiag_part().norm_l(1);
        let b = v.offdiag_part().norm_l(1);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn zero_potential_invariant_is_landau_diagonal() {
        let t = trunc(3, 4, 1);
        let h = build_hamiltonian(&BlockOperator::zeros(3, 4), &t).unwrap();
        let inv = construct_invariant(&h, &t, 1.0, 1e-12, 5).unwrap();
        assert!(inv.j.sub(&landau_diagonal(&t)).unwrap().norm_l(0) < 1e-14);
        assert_eq!(inv.report.commutator_residual, 0.0);
        assert_eq!(inv.report.iteration_steps, 0);
    }

    #[test]
    fn two_level_toy_preserves_landau_multiset() {
        let t = Truncation { n_landau: 2, n_center: 1, interior_margin: 0 };
        let mut v = BlockOperator::zeros(2, 1);
        v.set_block(0, 1, array![[C64::new(0.05, 0.0)]]);
        v.set_block(1, 0, array![[C64::new(0.05, 0.0)]]);
        let h = build_hamiltonian(&v, &t).unwrap();
        let inv = construct_invariant(&h, &t, 1.0, 1e-13, 20).unwrap();
        assert!(inv.report.j_spectrum_error < 1e-12, "{}", inv.report.j_spectrum_error);
        assert!(inv.report.spectrum_error < 1e-10);
        assert!(inv.report.commutator_residual < 1e-10);
    }

    #[test]
    fn small_gaussian_pipeline_residuals() {
        let t = trunc(5, 12, 2);
        let v = assemble(&GaussianMixture::single(0.05, [0.4, -0.3]), &t)
            .unwrap()
            .op;
        let h = build_hamiltonian(&v, &t).unwrap();
        let inv = construct_invariant(&h, &t, 1.0, 1e-12, 12).unwrap();
        assert!(inv.report.hypothesis_satisfied);
        assert!(inv.report.commutator_residual < 1e-8, "{}", inv.report.commutator_residual);
        assert!(inv.report.j_spectrum_error < 1e-10);
        assert!(inv.report.spectrum_error < 1e-9);
        assert!(inv.report.blockdiag_residual < 1e-11);
    }

    #[test]
    fn stationary_state_expectations_constant() {
        let t = trunc(3, 4, 1);
        let h = build_hamiltonian(&BlockOperator::zeros(3, 4), &t).unwrap();
        let j = landau_diagonal(&t);
        let psi = landau_state(&t, 1, 1).unwrap();
        let table =
            evolve_expectations(&h, &j, &t, &psi, &sample_times(10.0, 10)).unwrap();
        for r in &table.rows {
            assert!((r.exp_j - 1.5).abs() < 1e-13);
            assert!((r.exp_h_la - 1.5).abs() < 1e-13);
            assert!(r.norm_defect < 1e-13);
        }
        assert!(table.drift_j < 1e-13);
    }

    #[test]
    fn time_zero_matches_initial_expectations() {
        let t = trunc(4, 6, 1);
        let v = assemble(&GaussianMixture::single(0.05, [0.0, 0.0]), &t)
            .unwrap()
            .op;
        let h = build_hamiltonian(&v, &t).unwrap();
        let psi = superposition_state(&t, &[1, 2], 2).unwrap();
        let table = evolve_expectations(&h, &landau_diagonal(&t), &t, &psi, &[0.0]).unwrap();
        // equal superposition of levels 1 and 2: ⟨H_La⟩ = (1.5 + 2.5)/2
        assert!((table.rows[0].exp_h_la - 2.0).abs() < 1e-13);
    }

    #[test]
    fn unnormalized_state_rejected() {
        let t = trunc(3, 4, 1);
        let h = build_hamiltonian(&BlockOperator::zeros(3, 4), &t).unwrap();
        let mut psi = landau_state(&t, 1, 1).unwrap();
        psi[5] += C64::new(0.5, 0.0);
        let r = evolve_expectations(&h, &landau_diagonal(&t), &t, &psi, &[0.0]);
        assert!(matches!(r, Err(Error::UnnormalizedState(_))));
    }

    #[test]
    fn invariant_expectation_conserved_under_perturbed_flow() {
        // levels up to 3 must be interior, so the level cutoff leaves
        // margin above them
        let t = trunc(6, 12, 2);
        let v = assemble(&GaussianMixture::single(0.06, [0.5, 0.2]), &t)
            .unwrap()
            .op;
        let h = build_hamiltonian(&v, &t).unwrap();
        let inv = construct_invariant(&h, &t, 1.0, 1e-12, 12).unwrap();
        let psi = superposition_state(&t, &[1, 2, 3], 3).unwrap();
        let table =
            evolve_expectations(&h, &inv.j, &t, &psi, &sample_times(50.0, 25)).unwrap();
        assert!(table.drift_j < 1e-7, "⟨J⟩ drift {}", table.drift_j);
        for r in &table.rows {
            assert!(r.norm_defect < 1e-12);
        }
    }

    #[test]
    fn ehrenfest_consistency() {
        // d/dt ⟨J⟩ = ⟨i[H, J]⟩: the drift rate and the commutator residual
        // agree in order of magnitude
        let t = trunc(6, 12, 2);
        let v = assemble(&GaussianMixture::single(0.06, [0.5, 0.2]), &t)
            .unwrap()
            .op;
        let h = build_hamiltonian(&v, &t).unwrap();
        let inv = construct_invariant(&h, &t, 1.0, 1e-12, 12).unwrap();
        let psi = superposition_state(&t, &[1, 2, 3], 3).unwrap();
        let table =
            evolve_expectations(&h, &inv.j, &t, &psi, &sample_times(4.0, 5)).unwrap();
        let comm_full = h.commutator(&inv.j).unwrap().flatten();
        let comm_scale = t.interior_norm(&comm_full);
        let max_abs_drift = table
            .rows
            .iter()
            .map(|r| (r.exp_j - table.rows[0].exp_j).abs())
            .fold(0.0f64, f64::max);
        // rate over ~4 time units bounded by a small multiple of ‖[H,J]‖
        assert!(max_abs_drift <= 100.0 * comm_scale.max(1e-14), "{max_abs_drift} vs {comm_scale}");
    }
}
