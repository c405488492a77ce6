//! Seeded random instances.
//!
//! Every generator takes an explicit RNG; sub-streams are derived from a
//! master seed and integer coordinates so results do not depend on the
//! order (or thread) in which instances are drawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, c, CMat, C64};
use crate::quantum::{DensityState, DiscretePovm, Effect, KrausInstrument};

pub type SeededRng = ChaCha20Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with stream coordinates (scenario index, repeat, …).
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(0x5851_F42D))))
}

pub fn rng_from(master: u64, coords: &[u64]) -> SeededRng {
    SeededRng::seed_from_u64(derive_seed(master, coords))
}

pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = complex_gaussian(dim, dim, rng);
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / c(d.norm(), 0.0) } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Mixed state from the induced (Hilbert–Schmidt) measure.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityState {
    let g = complex_gaussian(dim, dim, rng);
    let w = &g * g.adjoint();
    let tr = linalg::trace(&w).re;
    DensityState::new_unchecked(linalg::hermitian_part(&(w / c(tr, 0.0))))
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityState {
    let g = complex_gaussian(dim, 1, rng);
    DensityState::pure(&g.column(0).into_owned()).expect("gaussian vector is nonzero")
}

/// `U diag(λ) U†` with `λ` uniform in `[0, 1]`.
pub fn random_effect<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Effect {
    let u = haar_unitary(dim, rng);
    let lam: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    Effect::new_unchecked(linalg::hermitian_part(&linalg::sandwich(&u, &linalg::diag(&lam))))
}

/// Conjugates the diagonal profile by `basis`.
fn in_basis(basis: &CMat, lam: &[f64]) -> CMat {
    linalg::hermitian_part(&linalg::sandwich(basis, &linalg::diag(lam)))
}

/// Normalizes positive weights `W_j` via `S^{-1/2} W_j S^{-1/2}`, `S = Σ W_j`.
fn normalize_family(weights: Vec<CMat>) -> Vec<CMat> {
    let dim = weights[0].nrows();
    let total = weights.iter().fold(linalg::zeros(dim), |a, w| a + w);
    let inv = linalg::inv_sqrt_pd(&total, 0.0).expect("sum of Wishart matrices is positive definite");
    weights
        .iter()
        .map(|w| linalg::hermitian_part(&(&inv * w * &inv)))
        .collect()
}

/// Generic (noncommuting) POVM with `outcomes` elements.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> DiscretePovm {
    let weights = (0..outcomes)
        .map(|_| {
            let g = complex_gaussian(dim, dim, rng);
            &g * g.adjoint()
        })
        .collect();
    DiscretePovm::new_unchecked(normalize_family(weights))
}

/// Random probability vectors, one per basis index.
fn random_profiles<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut per_outcome = vec![vec![0.0; dim]; outcomes];
    for i in 0..dim {
        let w: Vec<f64> = (0..outcomes).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = w.iter().sum();
        for (j, wj) in w.iter().enumerate() {
            per_outcome[j][i] = wj / s;
        }
    }
    per_outcome
}

/// Two simultaneously diagonalizable POVMs sharing a Haar-random eigenbasis.
pub fn commuting_pair<R: Rng + ?Sized>(
    dim: usize,
    outcomes_t: usize,
    outcomes_s: usize,
    rng: &mut R,
) -> (DiscretePovm, DiscretePovm) {
    let basis = haar_unitary(dim, rng);
    let t = random_profiles(dim, outcomes_t, rng)
        .iter()
        .map(|lam| in_basis(&basis, lam))
        .collect();
    let s = random_profiles(dim, outcomes_s, rng)
        .iter()
        .map(|lam| in_basis(&basis, lam))
        .collect();
    (DiscretePovm::new_unchecked(t), DiscretePovm::new_unchecked(s))
}

/// Generic instrument: `K_i = G_i S^{-1/2}` with `S = Σ G_i† G_i`.
pub fn random_instrument<R: Rng + ?Sized>(
    dim: usize,
    outcomes: usize,
    kraus_per_outcome: usize,
    rng: &mut R,
) -> KrausInstrument {
    let gs: Vec<CMat> = (0..outcomes * kraus_per_outcome)
        .map(|_| complex_gaussian(dim, dim, rng))
        .collect();
    let s = gs.iter().fold(linalg::zeros(dim), |a, g| a + g.adjoint() * g);
    let inv = linalg::inv_sqrt_pd(&s, 0.0).expect("positive definite");
    let ks: Vec<CMat> = gs.iter().map(|g| g * &inv).collect();
    let families = ks.chunks(kraus_per_outcome).map(|ch| ch.to_vec()).collect();
    KrausInstrument::new_unchecked(families)
}

/// Instrument and effect built in a common eigenbasis, so every Kraus
/// operator commutes with the effect.
pub fn commuting_instrument<R: Rng + ?Sized>(
    dim: usize,
    outcomes: usize,
    kraus_per_outcome: usize,
    rng: &mut R,
) -> (KrausInstrument, Effect) {
    let basis = haar_unitary(dim, rng);
    let profiles = random_profiles(dim, outcomes * kraus_per_outcome, rng);
    let ks: Vec<CMat> = profiles
        .iter()
        .map(|p| {
            // Random phases keep the Kraus operators non-Hermitian.
            let d: Vec<C64> = p
                .iter()
                .map(|&x| C64::from_polar(x.sqrt(), rng.random::<f64>() * std::f64::consts::TAU))
                .collect();
            let dm = CMat::from_diagonal(&nalgebra::DVector::from_vec(d));
            &basis * dm * basis.adjoint()
        })
        .collect();
    let lam: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let s = Effect::new_unchecked(in_basis(&basis, &lam));
    let families = ks.chunks(kraus_per_outcome).map(|ch| ch.to_vec()).collect();
    (KrausInstrument::new_unchecked(families), s)
}

/// Projectors `P ≤ Q` and `R ⟂ Q` built from one Haar basis.
pub fn nested_projector_triple<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> (CMat, CMat, CMat) {
    let basis = haar_unitary(dim, rng);
    let rank_q = rng.random_range(0..dim);
    let rank_p = if rank_q == 0 { 0 } else { rng.random_range(0..=rank_q) };
    let rank_r = rng.random_range(0..=(dim - rank_q));
    let mask = |lo: usize, hi: usize| -> Vec<f64> {
        (0..dim).map(|i| if i >= lo && i < hi { 1.0 } else { 0.0 }).collect()
    };
    let p = in_basis(&basis, &mask(0, rank_p));
    let q = in_basis(&basis, &mask(0, rank_q));
    let r = in_basis(&basis, &mask(rank_q, rank_q + rank_r));
    (p, q, r)
}
