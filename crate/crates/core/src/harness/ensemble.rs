//! Seeded random ensembles of states and PSD operators.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, trial index)`, so a
//! trial can be regenerated in isolation and results do not depend on execution order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMatrix, DensityMatrix, HermitianMatrix, PsdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankProfile {
    Full,
    Deficient(usize),
    Pure,
}

impl RankProfile {
    pub fn rank(&self, dim: usize) -> usize {
        match *self {
            RankProfile::Full => dim,
            RankProfile::Deficient(k) => k,
            RankProfile::Pure => 1,
        }
    }

    /// Rank used inside a multi-dimension suite: deficient ranks are capped at dim − 1.
    pub fn rank_capped(&self, dim: usize) -> usize {
        match *self {
            RankProfile::Deficient(k) => k.min(dim - 1).max(1),
            other => other.rank(dim),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GenericMixed,
    HaarPure,
    CommutingDiagonal,
    OrthogonalBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub dim: usize,
    pub rank_profile: RankProfile,
    pub family: Family,
    pub seed: u64,
    pub trials: usize,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidSpec(format!("dim must be at least 2, got {}", self.dim)));
        }
        if self.trials < 1 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if let RankProfile::Deficient(k) = self.rank_profile {
            if k < 1 || k > self.dim {
                return Err(Error::InvalidSpec(format!(
                    "deficient rank {k} outside 1..={}",
                    self.dim
                )));
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.rank_profile.rank(self.dim)
    }

    /// The `arity` states of one trial.
    pub fn draw_tuple(&self, trial: u64, arity: usize) -> Result<Vec<DensityMatrix>> {
        let mut rng = trial_rng(self.seed, trial);
        (0..arity)
            .map(|slot| draw_state(&mut rng, self.dim, self.rank(), self.family, slot))
            .collect()
    }
}

/// Deterministic stream of state tuples, one per trial.
pub fn gen_states(
    spec: &EnsembleSpec,
    arity: usize,
) -> Result<impl Iterator<Item = Result<Vec<DensityMatrix>>> + '_> {
    spec.validate()?;
    Ok((0..spec.trials as u64).map(move |trial| spec.draw_tuple(trial, arity)))
}

pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// splitmix64 finaliser, used to derive independent sub-seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// n×k matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let mut g = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            g[(i, j)] = complex_gaussian(rng);
        }
    }
    g
}

/// G G† for an n×rank Ginibre G (unnormalised Wishart).
pub fn wishart<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> HermitianMatrix {
    let g = ginibre(rng, dim, rank);
    HermitianMatrix::hermitian_part(&(&g * g.adjoint()))
}

/// G G† / trace(G G†).
pub fn ginibre_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<DensityMatrix> {
    let w = wishart(rng, dim, rank);
    let tr = w.trace();
    DensityMatrix::new(w.scale(1.0 / tr))
}

pub fn haar_pure<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<DensityMatrix> {
    let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    DensityMatrix::pure(&v)
}

/// Diagonal state with Dirichlet(1, …, 1) weights on a random support of size `rank`.
pub fn dirichlet_diagonal<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<DensityMatrix> {
    let support = sample(rng, dim, rank);
    let mut diag = vec![0.0; dim];
    for k in support.iter() {
        diag[k] = rng.sample::<f64, _>(Exp1);
    }
    let total: f64 = diag.iter().sum();
    for d in diag.iter_mut() {
        *d /= total;
    }
    DensityMatrix::from_real_diagonal(&diag)
}

/// Index range of diagonal block `slot % 2` (split at dim/2).
pub fn block_range(dim: usize, slot: usize) -> std::ops::Range<usize> {
    let split = dim / 2;
    if slot.is_multiple_of(2) {
        0..split
    } else {
        split..dim
    }
}

/// Generic mixed state living exactly on one diagonal block.
pub fn block_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize, slot: usize) -> Result<DensityMatrix> {
    let range = block_range(dim, slot);
    let m = range.len();
    let local = wishart(rng, m, rank.min(m).max(1));
    let tr = local.trace();
    let mut full = CMatrix::zeros(dim, dim);
    for (li, i) in range.clone().enumerate() {
        for (lj, j) in range.clone().enumerate() {
            full[(i, j)] = local.entries()[(li, lj)] / tr;
        }
    }
    DensityMatrix::new(HermitianMatrix::new(full)?)
}

pub fn draw_state<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rank: usize,
    family: Family,
    slot: usize,
) -> Result<DensityMatrix> {
    match family {
        Family::GenericMixed => ginibre_state(rng, dim, rank),
        Family::HaarPure => haar_pure(rng, dim),
        Family::CommutingDiagonal => dirichlet_diagonal(rng, dim, rank),
        Family::OrthogonalBlocks => block_state(rng, dim, rank, slot),
    }
}

/// Wishart PSD operator of the given rank with trace log-uniform in [1e-2, 1e2].
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<PsdMatrix> {
    let w = wishart(rng, dim, rank);
    let target = 10f64.powf(rng.random_range(-2.0..=2.0));
    PsdMatrix::new(w.scale(target / w.trace()))
}

/// (G + G†)/2 with standard complex Gaussian G.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(&ginibre(rng, dim, dim))
}
