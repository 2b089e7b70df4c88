//! Operator algebra over a fixed complete family of orthogonal projections.
//!
//! Operators are stored as sparse collections of dense complex blocks indexed
//! by Landau-level pairs `(n, m)`; an absent block is zero. All estimates of
//! the diagonalization procedure are phrased in the weighted norms
//! `‖A‖_l = sup_{n,m} ⟨n-m⟩^l ‖P_n A P_m‖` with `⟨a⟩ = max(1, |a|)` and the
//! per-block operator norm taken as the largest singular value.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// `⟨a⟩ = max(1, |a|)` for an index difference.
pub fn angle_bracket(a: i64) -> f64 {
    (a.abs() as f64).max(1.0)
}

/// Value of a weighted norm `‖A‖_l` together with its weight exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormValue {
    pub l: u32,
    pub value: f64,
}

/// Banded family of dense complex blocks indexed by level pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    num_blocks: usize,
    block_dim: usize,
    blocks: BTreeMap<(usize, usize), Array2<C64>>,
}

impl BlockOperator {
    /// The zero operator on `num_blocks` levels of uniform dimension `block_dim`.
    pub fn zeros(num_blocks: usize, block_dim: usize) -> Self {
        assert!(num_blocks > 0 && block_dim > 0);
        Self {
            num_blocks,
            block_dim,
            blocks: BTreeMap::new(),
        }
    }

    /// The identity operator.
    pub fn identity(num_blocks: usize, block_dim: usize) -> Self {
        let mut op = Self::zeros(num_blocks, block_dim);
        for n in 0..num_blocks {
            op.set_block(n, n, Array2::eye(block_dim));
        }
        op
    }

    /// Block-diagonal operator with `(n,n)` block equal to `f(n)·I`.
    pub fn scalar_diagonal(num_blocks: usize, block_dim: usize, f: impl Fn(usize) -> f64) -> Self {
        let mut op = Self::zeros(num_blocks, block_dim);
        for n in 0..num_blocks {
            op.set_block(n, n, Array2::eye(block_dim) * C64::new(f(n), 0.0));
        }
        op
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Total flattened dimension `num_blocks · block_dim`.
    pub fn dim(&self) -> usize {
        self.num_blocks * self.block_dim
    }

    pub fn block(&self, n: usize, m: usize) -> Option<&Array2<C64>> {
        self.blocks.get(&(n, m))
    }

    /// Iterator over stored blocks in deterministic `(n, m)` order.
    pub fn iter_blocks(&self) -> impl Iterator<Item = (usize, usize, &Array2<C64>)> {
        self.blocks.iter().map(|(&(n, m), b)| (n, m, b))
    }

    pub fn stored_block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Store a block, replacing any previous content at `(n, m)`.
    pub fn set_block(&mut self, n: usize, m: usize, block: Array2<C64>) {
        assert!(n < self.num_blocks && m < self.num_blocks, "block index out of range");
        assert_eq!(block.dim(), (self.block_dim, self.block_dim), "block shape mismatch");
        self.blocks.insert((n, m), block);
    }

    /// Add `block` into the `(n, m)` slot.
    pub fn accumulate_block(&mut self, n: usize, m: usize, block: &Array2<C64>) {
        assert!(n < self.num_blocks && m < self.num_blocks, "block index out of range");
        assert_eq!(block.dim(), (self.block_dim, self.block_dim), "block shape mismatch");
        match self.blocks.get_mut(&(n, m)) {
            Some(existing) => *existing += block,
            None => {
                self.blocks.insert((n, m), block.clone());
            }
        }
    }

    /// Remove blocks whose operator norm is below `threshold`. Returns the
    /// indices that were dropped.
    pub fn prune(&mut self, threshold: f64) -> Vec<(usize, usize)> {
        let dropped: Vec<(usize, usize)> = self
            .blocks
            .iter()
            .filter(|(_, b)| linalg::sigma_max(b) < threshold)
            .map(|(&k, _)| k)
            .collect();
        for k in &dropped {
            self.blocks.remove(k);
        }
        dropped
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.num_blocks != other.num_blocks || self.block_dim != other.block_dim {
            return Err(Error::DimensionMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.num_blocks, self.block_dim, other.num_blocks, other.block_dim
            )));
        }
        Ok(())
    }

    /// `𝒟A = Σ_n P_n A P_n`.
    pub fn diag_part(&self) -> Self {
        let mut out = Self::zeros(self.num_blocks, self.block_dim);
        for (&(n, m), b) in &self.blocks {
            if n == m {
                out.blocks.insert((n, m), b.clone());
            }
        }
        out
    }

    /// `𝒪A = A - 𝒟A`.
    pub fn offdiag_part(&self) -> Self {
        let mut out = Self::zeros(self.num_blocks, self.block_dim);
        for (&(n, m), b) in &self.blocks {
            if n != m {
                out.blocks.insert((n, m), b.clone());
            }
        }
        out
    }

    /// `‖A‖_l = sup_{n,m} ⟨n-m⟩^l σ_max(A_{nm})`.
    pub fn weighted_norm(&self, l: u32) -> WeightedNormValue {
        let value = self
            .blocks
            .iter()
            .map(|(&(n, m), b)| {
                angle_bracket(n as i64 - m as i64).powi(l as i32) * linalg::sigma_max(b)
            })
            .fold(0.0, f64::max);
        WeightedNormValue { l, value }
    }

    /// Shorthand for `weighted_norm(l).value`.
    pub fn norm_l(&self, l: u32) -> f64 {
        self.weighted_norm(l).value
    }

    /// Operator norm of the flattened dense matrix.
    pub fn op_norm(&self) -> f64 {
        linalg::sigma_max(&self.flatten())
    }

    /// Blockwise product `(AB)_{nm} = Σ_j A_{nj} B_{jm}`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zeros(self.num_blocks, self.block_dim);
        for (&(n, j), a) in &self.blocks {
            for m in 0..self.num_blocks {
                if let Some(b) = other.blocks.get(&(j, m)) {
                    out.accumulate_block(n, m, &a.dot(b));
                }
            }
        }
        Ok(out)
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(self.compose(other)?.sub(&other.compose(self)?)?)
    }

    /// Conjugate transpose: `(A†)_{nm} = (A_{mn})†`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.num_blocks, self.block_dim);
        for (&(n, m), b) in &self.blocks {
            out.blocks.insert((m, n), linalg::adjoint(b));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (&(n, m), b) in &other.blocks {
            out.accumulate_block(n, m, b);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(self.add(&other.scale(C64::new(-1.0, 0.0)))?)
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            *b *= factor;
        }
        out
    }

    /// Max entrywise deviation of `A` from `A†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for (&(n, m), b) in &self.blocks {
            let partner = self.blocks.get(&(m, n));
            match partner {
                Some(p) => {
                    let d = b - &linalg::adjoint(p);
                    defect = defect.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
                }
                None => {
                    defect = defect.max(b.iter().map(|z| z.norm()).fold(0.0, f64::max));
                }
            }
        }
        defect
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(A + A†)/2`, returning the symmetrized operator and the
    /// pre-symmetrization deviation.
    pub fn symmetrize(&self) -> (Self, f64) {
        let defect = self.hermiticity_defect();
        let sym = self
            .add(&self.adjoint())
            .expect("adjoint preserves shape")
            .scale(C64::new(0.5, 0.0));
        (sym, defect)
    }

    /// Dense flattened matrix with row index `n·block_dim + k`.
    pub fn flatten(&self) -> Array2<C64> {
        let d = self.dim();
        let bd = self.block_dim;
        let mut out = Array2::<C64>::zeros((d, d));
        for (&(n, m), b) in &self.blocks {
            let mut view = out.slice_mut(ndarray::s![n * bd..(n + 1) * bd, m * bd..(m + 1) * bd]);
            view.assign(b);
        }
        out
    }

    /// Rebuild the block structure from a dense flattened matrix; blocks that
    /// are identically zero are not stored.
    pub fn from_flat(flat: &Array2<C64>, num_blocks: usize, block_dim: usize) -> Self {
        assert_eq!(flat.dim(), (num_blocks * block_dim, num_blocks * block_dim));
        let mut out = Self::zeros(num_blocks, block_dim);
        for n in 0..num_blocks {
            for m in 0..num_blocks {
                let b = flat
                    .slice(ndarray::s![
                        n * block_dim..(n + 1) * block_dim,
                        m * block_dim..(m + 1) * block_dim
                    ])
                    .to_owned();
                if b.iter().any(|z| z.norm_sqr() > 0.0) {
                    out.blocks.insert((n, m), b);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// JSON serialization: { num_blocks, block_dim, blocks: [ {n, m, re, im} ] }
// with row-major coefficient arrays. Round-trips bit-exactly at double
// precision (serde_json emits shortest-round-trip decimal forms).
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct BlockRecord {
    n: usize,
    m: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BlockOperatorRecord {
    num_blocks: usize,
    block_dim: usize,
    blocks: Vec<BlockRecord>,
}

impl Serialize for BlockOperator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self
            .blocks
            .iter()
            .map(|(&(n, m), b)| BlockRecord {
                n,
                m,
                re: b.iter().map(|z| z.re).collect(),
                im: b.iter().map(|z| z.im).collect(),
            })
            .collect();
        BlockOperatorRecord {
            num_blocks: self.num_blocks,
            block_dim: self.block_dim,
            blocks,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BlockOperator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = BlockOperatorRecord::deserialize(deserializer)?;
        let d = rec.block_dim;
        let mut op = BlockOperator::zeros(rec.num_blocks, d);
        for b in rec.blocks {
            if b.re.len() != d * d || b.im.len() != d * d {
                return Err(serde::de::Error::custom("block coefficient count mismatch"));
            }
            let data: Vec<C64> = b
                .re
                .iter()
                .zip(&b.im)
                .map(|(&re, &im)| C64::new(re, im))
                .collect();
            let arr = Array2::from_shape_vec((d, d), data).unwrap();
            if b.n >= rec.num_blocks || b.m >= rec.num_blocks {
                return Err(serde::de::Error::custom("block index out of range"));
            }
            op.set_block(b.n, b.m, arr);
        }
        Ok(op)
    }
}

/// Random dense-block operator; `fill` is the probability a given block is
/// populated. Used by the norm audits and the property tests.
pub fn random_operator(
    rng: &mut impl rand::Rng,
    num_blocks: usize,
    block_dim: usize,
    fill: f64,
) -> BlockOperator {
    let mut op = BlockOperator::zeros(num_blocks, block_dim);
    for n in 0..num_blocks {
        for m in 0..num_blocks {
            if rng.random::<f64>() < fill {
                let b = Array2::from_shape_fn((block_dim, block_dim), |_| {
                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                });
                op.set_block(n, m, b);
            }
        }
    }
    op
}

/// Result of [`product_norm_audit`].
#[derive(Debug, Clone)]
pub struct ProductNormAudit {
    /// Worst observed `‖AB‖₁ / (K ‖A‖₂ ‖B‖₁)`; the inequality holds iff ≤ 1.
    pub worst_ratio: f64,
    pub instances: usize,
}

/// Sample the product inequality `‖AB‖₁ ≤ K ‖A‖₂ ‖B‖₁`, `K = 3 + 2ζ(2)`, on
/// random block operators of varying shapes.
pub fn product_norm_audit(instances: usize, max_blocks: usize) -> ProductNormAudit {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x6c61_6e64);
    let mut worst_ratio = 0.0f64;
    for trial in 0..instances {
        let num_blocks = 2 + trial % (max_blocks.max(3) - 1);
        let block_dim = 1 + trial % 3;
        let a = random_operator(&mut rng, num_blocks, block_dim, 0.7);
        let b = random_operator(&mut rng, num_blocks, block_dim, 0.7);
        let bound = crate::CONVOLUTION_K * a.norm_l(2) * b.norm_l(1);
        if bound == 0.0 {
            continue;
        }
        let lhs = a.compose(&b).expect("matching shapes").norm_l(1);
        worst_ratio = worst_ratio.max(lhs / bound);
    }
    ProductNormAudit { worst_ratio, instances }
}
