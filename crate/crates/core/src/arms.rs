//! Intervention space: Laplacians `L_i` and their forest matrices
//! `X_i = (I + L_i)⁻¹`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{erdos_renyi, sbm_two_community, WeightedGraph};
use crate::numerics::{spd_solve, Matrix, SymMatrix};

/// One intervention and its forest matrix.
#[derive(Debug, Clone)]
pub struct Arm {
    pub index: usize,
    pub laplacian: SymMatrix,
    pub forest: SymMatrix,
}

impl Arm {
    /// Forms `(I + L)⁻¹` by a Cholesky solve against the identity.
    pub fn from_laplacian(index: usize, laplacian: SymMatrix) -> Result<Self> {
        let n = laplacian.n();
        let x = spd_solve(&laplacian.shifted(1.0), &Matrix::identity(n))?;
        Ok(Self { index, laplacian, forest: SymMatrix::symmetrized(&x) })
    }

    pub fn n(&self) -> usize {
        self.forest.n()
    }

    /// Row-major `vec(X)`; `‖vec(X)‖₂ = ‖X‖_F`.
    pub fn vectorize(&self) -> Vec<f64> {
        vectorize(&self.forest)
    }
}

pub fn vectorize(x: &SymMatrix) -> Vec<f64> {
    x.as_slice().to_vec()
}

/// The finite action set; arm `i` sits at position `i`.
#[derive(Debug, Clone)]
pub struct ArmSet {
    n: usize,
    arms: Vec<Arm>,
}

impl ArmSet {
    pub fn new(arms: Vec<Arm>) -> Result<Self> {
        let n = arms.first().map(Arm::n).ok_or_else(|| Error::InvalidArgument("empty arm set".into()))?;
        for (pos, arm) in arms.iter().enumerate() {
            if arm.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: arm.n() });
            }
            if arm.index != pos {
                return Err(Error::InvalidArgument(format!(
                    "arm at position {pos} has index {}",
                    arm.index
                )));
            }
        }
        Ok(Self { n, arms })
    }

    pub fn from_laplacians(laplacians: Vec<SymMatrix>) -> Result<Self> {
        let arms = laplacians
            .into_iter()
            .enumerate()
            .map(|(i, l)| Arm::from_laplacian(i, l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn get(&self, i: usize) -> &Arm {
        &self.arms[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Arm> {
        self.arms.iter()
    }
}

/// Parameters of the local (edge-edit) arm regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditConfig {
    pub num_edits: usize,
    pub weight_lo: f64,
    pub weight_hi: f64,
    /// When set, each edit removes weight with probability 1/2, taking
    /// `min(w, current pair weight)` so the Laplacian stays valid.
    pub allow_removal: bool,
}

impl EditConfig {
    /// `num_edits` additions with weights from `Unif[0.5, 1.5]`.
    pub fn additive(num_edits: usize) -> Self {
        Self { num_edits, weight_lo: 0.5, weight_hi: 1.5, allow_removal: false }
    }

    fn validate(&self) -> Result<()> {
        if self.num_edits == 0 {
            return Err(Error::InvalidArgument("num_edits must be at least 1".into()));
        }
        if !(self.weight_lo > 0.0 && self.weight_lo <= self.weight_hi) {
            return Err(Error::InvalidArgument(format!(
                "edit weights need 0 < lo <= hi, got [{}, {}]",
                self.weight_lo, self.weight_hi
            )));
        }
        Ok(())
    }
}

/// `L += w (e_i − e_j)(e_i − e_j)ᵀ`.
fn add_edge_weight(l: &mut SymMatrix, i: usize, j: usize, w: f64) {
    l.add_at(i, i, w);
    l.add_at(j, j, w);
    l.add_at(i, j, -w);
}

/// `k` arms, each the base Laplacian plus `num_edits` random rank-one edge
/// edits on uniformly drawn node pairs (pairs may repeat).
pub fn perturb_local<R: Rng + ?Sized>(
    base: &WeightedGraph,
    edits: &EditConfig,
    k: usize,
    rng: &mut R,
) -> Result<ArmSet> {
    edits.validate()?;
    let n = base.n();
    if n < 2 {
        return Err(Error::InvalidArgument("edge edits need at least two nodes".into()));
    }
    let base_l = base.laplacian();
    let mut laplacians = Vec::with_capacity(k);
    for _ in 0..k {
        let mut l = base_l.clone();
        for _ in 0..edits.num_edits {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let w = if edits.weight_lo == edits.weight_hi {
                edits.weight_lo
            } else {
                rng.random_range(edits.weight_lo..edits.weight_hi)
            };
            if edits.allow_removal && rng.random_bool(0.5) {
                let current = -l.get(i, j);
                add_edge_weight(&mut l, i, j, -w.min(current));
            } else {
                add_edge_weight(&mut l, i, j, w);
            }
        }
        laplacians.push(l);
    }
    ArmSet::from_laplacians(laplacians)
}

/// Random graph family used for the diverse arm regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    ErdosRenyi { p: f64 },
    Sbm { frac1: f64, p_in: f64, p_out: f64 },
}

impl GraphFamily {
    /// Edge probability 0.2.
    pub const ER_DEFAULT: GraphFamily = GraphFamily::ErdosRenyi { p: 0.2 };
    /// 75/25 split, intra 0.5, inter 0.07.
    pub const SBM_DEFAULT: GraphFamily = GraphFamily::Sbm { frac1: 0.75, p_in: 0.5, p_out: 0.07 };

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> WeightedGraph {
        match *self {
            GraphFamily::ErdosRenyi { p } => erdos_renyi(n, p, rng),
            GraphFamily::Sbm { frac1, p_in, p_out } => sbm_two_community(n, frac1, p_in, p_out, rng),
        }
    }
}

/// `k` arms from independently sampled graphs of `family`.
pub fn generate_diverse<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    family: GraphFamily,
    rng: &mut R,
) -> Result<ArmSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one arm".into()));
    }
    let laplacians = (0..k).map(|_| family.sample(n, rng).laplacian()).collect();
    ArmSet::from_laplacians(laplacians)
}
