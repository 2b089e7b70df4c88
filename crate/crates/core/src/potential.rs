//! Finite Gaussian mixtures `V(q) = Σ wᵢ g(q - yᵢ)` with `g(q) = e^{-q²/2}`,
//! including the Anderson-type random mixture on an integer grid, and their
//! assembly as block operators on the truncated Landau basis.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockop::{angle_bracket, BlockOperator};
use crate::error::Result;
use crate::landau::{self, Truncation};
use crate::linalg;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GaussianAtom {
    pub w: f64,
    pub y: [f64; 2],
}

/// A finite atomic measure convolved with the unit Gaussian.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct GaussianMixture {
    pub atoms: Vec<GaussianAtom>,
}

impl GaussianMixture {
    pub fn single(w: f64, y: [f64; 2]) -> Self {
        Self { atoms: vec![GaussianAtom { w, y }] }
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.w.abs()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| GaussianAtom { w: a.w * factor, y: a.y })
                .collect(),
        }
    }

    pub fn merged(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Self { atoms }
    }
}

/// Parameters for the random mixture on the square grid `[-w, w]²`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AndersonSpec {
    pub grid_half_width: u32,
    pub amplitude_low: f64,
    pub amplitude_high: f64,
    pub seed: u64,
}

/// One atom per integer site, weights i.i.d. uniform in `[low, high]` from a
/// seeded ChaCha12 stream; the site order (row-major, ascending) is part of
/// the determinism contract.
pub fn anderson_mixture(spec: &AndersonSpec) -> GaussianMixture {
    assert!(spec.amplitude_low <= spec.amplitude_high);
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let w = spec.grid_half_width as i64;
    let span = spec.amplitude_high - spec.amplitude_low;
    let mut atoms = Vec::with_capacity(((2 * w + 1) * (2 * w + 1)) as usize);
    for i1 in -w..=w {
        for i2 in -w..=w {
            let u: f64 = rng.random();
            atoms.push(GaussianAtom {
                w: spec.amplitude_low + span * u,
                y: [i1 as f64, i2 as f64],
            });
        }
    }
    GaussianMixture { atoms }
}

/// Pointwise evaluation `Σ wᵢ e^{-(q-yᵢ)²/2}`; atoms further than `(q-y)² > 80`
/// contribute below 4e−18 and are skipped.
pub fn eval_potential(mix: &GaussianMixture, q: [f64; 2]) -> f64 {
    mix.atoms
        .iter()
        .filter_map(|a| {
            let d1 = q[0] - a.y[0];
            let d2 = q[1] - a.y[1];
            let d_sq = d1 * d1 + d2 * d2;
            (d_sq <= 80.0).then(|| a.w * (-0.5 * d_sq).exp())
        })
        .sum()
}

/// CSV raster `(q1, q2, V)` on an `samples × samples` grid over
/// `[-half_extent, half_extent]²`.
pub fn raster_csv(mix: &GaussianMixture, half_extent: f64, samples: usize) -> String {
    let mut out = String::from("q1,q2,V\n");
    for i in 0..samples {
        for j in 0..samples {
            let frac = |t: usize| -half_extent + 2.0 * half_extent * t as f64 / (samples - 1) as f64;
            let q = [frac(i), frac(j)];
            out.push_str(&format!("{},{},{}\n", q[0], q[1], eval_potential(mix, q)));
        }
    }
    out
}

/// Result of [`assemble`].
#[derive(Debug, Clone)]
pub struct AssemblyReport {
    pub op: BlockOperator,
    /// `‖V - V†‖₀` before the final symmetrization.
    pub hermiticity_defect: f64,
    /// Blocks removed because their weighted norm fell below the cutoff.
    pub dropped_blocks: Vec<(usize, usize)>,
    /// Atoms skipped because their displacement is invisible on the window.
    pub skipped_atoms: usize,
    /// Set when edge entries of some block exceed 1e−6 of the interior norm,
    /// a sign the center window is too small for this mixture.
    pub edge_warning: bool,
}

/// Default relative threshold below which assembled blocks are discarded.
pub const ASSEMBLY_CUTOFF: f64 = 1e-14;

/// Centered-Gaussian block `G_{nm}`: nonzero only on the shifted diagonal
/// `k - n = k' - m` (the potential conserves angular momentum), with the
/// closed-form element at `l = k - n`.
fn centered_block(n: usize, m: usize, d: usize) -> Result<Array2<C64>> {
    let mut g = Array2::<C64>::zeros((d, d));
    let l_min = -(n.min(m) as i64);
    let mut l = l_min;
    loop {
        let k = n as i64 + l;
        let kp = m as i64 + l;
        if k >= d as i64 || kp >= d as i64 {
            break;
        }
        g[[k as usize, kp as usize]] = C64::new(landau::gaussian_element(n, m, l)?, 0.0);
        l += 1;
    }
    Ok(g)
}

/// Largest possible magnitude of a displacement-matrix entry on a `d`-dim
/// window; used to skip atoms whose translation moves everything off-window.
fn displacement_reach(alpha: C64, d: usize) -> f64 {
    let a = alpha.norm();
    if a == 0.0 {
        return 1.0;
    }
    let mut best = f64::NEG_INFINITY;
    for j in 0..(2 * d) {
        let mut ln_fact = 0.0;
        for t in 1..=j {
            ln_fact += (t as f64).ln();
        }
        best = best.max(j as f64 * a.ln() - 0.5 * ln_fact - 0.5 * a * a);
    }
    best.exp().min(1.0)
}

/// Assemble the mixture as a Hermitian block operator, one shifted-Gaussian
/// contribution `w · D(α) G_{nm} D(α)†` per atom and level pair.
pub fn assemble(mix: &GaussianMixture, trunc: &Truncation) -> Result<AssemblyReport> {
    assemble_with_cutoff(mix, trunc, ASSEMBLY_CUTOFF)
}

pub fn assemble_with_cutoff(
    mix: &GaussianMixture,
    trunc: &Truncation,
    cutoff: f64,
) -> Result<AssemblyReport> {
    trunc.validate()?;
    let nb = trunc.n_landau;
    let d = trunc.n_center;

    // per-atom displacement matrices, computed once and shared
    let mut displacements = Vec::with_capacity(mix.atoms.len());
    let mut skipped_atoms = 0usize;
    for atom in &mix.atoms {
        let alpha = landau::alpha_from_shift(atom.y);
        if atom.w.abs() * displacement_reach(alpha, d) < 1e-18 {
            skipped_atoms += 1;
            displacements.push(None);
        } else {
            displacements.push(Some(landau::displacement_matrix(d, alpha)));
        }
    }

    // level pairs n ≤ m are independent; the mirror block comes from
    // hermiticity. Atom order inside each pair is fixed, so the float sums
    // are reproducible.
    let pairs: Vec<(usize, usize)> = (0..nb)
        .flat_map(|n| (n..nb).map(move |m| (n, m)))
        .collect();
    let computed: Vec<((usize, usize), Array2<C64>)> = pairs
        .par_iter()
        .map(|&(n, m)| {
            let g = centered_block(n, m, d)?;
            let mut block = Array2::<C64>::zeros((d, d));
            for (atom, disp) in mix.atoms.iter().zip(&displacements) {
                let Some(disp) = disp else { continue };
                if atom.y == [0.0, 0.0] {
                    block.scaled_add(C64::new(atom.w, 0.0), &g);
                } else {
                    let shifted = disp.dot(&g).dot(&linalg::adjoint(disp));
                    block.scaled_add(C64::new(atom.w, 0.0), &shifted);
                }
            }
            Ok(((n, m), block))
        })
        .collect::<Result<_>>()?;

    let mut v = BlockOperator::zeros(nb, d);
    for ((n, m), block) in computed {
        if block.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        if n != m {
            v.set_block(m, n, linalg::adjoint(&block));
        }
        v.set_block(n, m, block);
    }

    // drop blocks whose decay-weighted norm is negligible
    let max_weighted = (0..nb)
        .flat_map(|n| (0..nb).map(move |m| (n, m)))
        .filter_map(|(n, m)| {
            v.block(n, m)
                .map(|b| angle_bracket(n as i64 - m as i64) * linalg::sigma_max(b))
        })
        .fold(0.0f64, f64::max);
    let dropped_blocks = v.prune(cutoff * max_weighted);

    let hermiticity_defect = v.hermiticity_defect();
    let (op, _) = v.symmetrize();

    // edge diagnostics: entries involving the outermost center states
    // should be small relative to the interior
    let margin = trunc.interior_margin.max(1);
    let mut edge_max = 0.0f64;
    let mut interior_max = 0.0f64;
    for (_, _, b) in op.iter_blocks() {
        for ((i, j), z) in b.indexed_iter() {
            let at_edge = i >= d - margin || j >= d - margin;
            if at_edge {
                edge_max = edge_max.max(z.norm());
            } else {
                interior_max = interior_max.max(z.norm());
            }
        }
    }
    let edge_warning = interior_max > 0.0 && edge_max > 1e-6 * interior_max && {
        eprintln!(
            "WARN: edge block entries reach {edge_max:.3e} against interior {interior_max:.3e}; \
             consider a larger center window"
        );
        true
    };

    Ok(AssemblyReport {
        op,
        hermiticity_defect,
        dropped_blocks,
        skipped_atoms,
        edge_warning,
    })
}

/// Per-pair decay diagnostics `⟨n-m⟩ · σ_max(V_{nm})`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub rows: Vec<(usize, usize, f64)>,
    /// Max of the weighted norms — the empirical decay constant.
    pub d_emp: f64,
}

impl DecayProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m,weighted_norm\n");
        for (n, m, v) in &self.rows {
            out.push_str(&format!("{n},{m},{v}\n"));
        }
        out
    }
}

pub fn decay_profile(v: &BlockOperator) -> DecayProfile {
    let mut rows = Vec::new();
    let mut d_emp = 0.0f64;
    for (n, m, b) in v.iter_blocks() {
        let weighted = angle_bracket(n as i64 - m as i64) * linalg::sigma_max(b);
        d_emp = d_emp.max(weighted);
        rows.push((n, m, weighted));
    }
    DecayProfile { rows, d_emp }
}
