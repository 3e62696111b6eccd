//! Seeded random instances.
//!
//! Every generator takes an explicit RNG. [`trial_rng`] derives independent,
//! reproducible streams from one user seed, so trials can run in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::linalg::{inverse_sqrt, CMatrix, C64};
use crate::maps::HermitianMap;

pub type QRng = ChaCha8Rng;

pub fn rng(seed: u64) -> QRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> QRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    ginibre(rng, n, n).hermitian_part()
}

/// Full-rank density matrix `G G^dagger / Tr` from a square Ginibre matrix.
pub fn state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = ginibre(rng, n, n);
    let m = g.matmul(&g.adjoint());
    m.scale(1.0 / m.trace_re())
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let v = ginibre(rng, n, 1);
    let m = v.matmul(&v.adjoint());
    m.scale(1.0 / m.trace_re())
}

/// Point of the probability simplex, uniformly distributed.
pub fn probability<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// `rows x cols` matrix with orthonormal columns (`rows >= cols`).
pub fn isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols, "an isometry needs rows >= cols");
    let g = ginibre(rng, rows, cols);
    // V = G (G^dagger G)^{-1/2}
    let gram = g.adjoint().matmul(&g);
    let inv = inverse_sqrt(&gram).expect("Gaussian matrices have full rank almost surely");
    g.matmul(&inv)
}

pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    isometry(rng, n, n)
}

/// Random channel from a random Stinespring isometry `H -> K (x) E` with
/// environment dimension `env`.
pub fn channel<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, env: usize) -> HermitianMap {
    let v = isometry(rng, d_out * env, d_in);
    let kraus: Vec<CMatrix> = (0..env).map(|e| CMatrix::from_fn(d_out, d_in, |o, i| v[(o * env + e, i)])).collect();
    HermitianMap::from_kraus(&kraus).expect("Kraus operators share a shape")
}

/// Channel with environment `d_in * d_out`, enough for a generic Choi rank.
pub fn generic_channel<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> HermitianMap {
    channel(rng, d_in, d_out, d_in * d_out)
}

/// CP map with `rank` Gaussian Kraus operators (not trace preserving).
pub fn cp_map<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, rank: usize) -> HermitianMap {
    let kraus: Vec<CMatrix> = (0..rank.max(1)).map(|_| ginibre(rng, d_out, d_in)).collect();
    HermitianMap::from_kraus(&kraus).expect("Kraus operators share a shape")
}

/// Hermitian-preserving map with a Gaussian Hermitian Choi matrix.
pub fn hermitian_map<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> HermitianMap {
    HermitianMap::from_choi(d_in, d_out, hermitian(rng, d_in * d_out)).expect("Hermitian by construction")
}

/// POVM `M_i = S^{-1/2} A_i S^{-1/2}` from Wishart elements `A_i`, `S = sum A_i`.
pub fn povm<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Vec<CMatrix> {
    let a: Vec<CMatrix> = (0..n)
        .map(|_| {
            let g = ginibre(rng, d, d);
            g.matmul(&g.adjoint())
        })
        .collect();
    let mut s = CMatrix::zeros(d, d);
    for x in &a {
        s += x;
    }
    let t = inverse_sqrt(&s).expect("sum of Wishart matrices is invertible");
    a.iter().map(|x| t.congruence(x).hermitian_part()).collect()
}

/// `rows` independent uniform probability vectors of length `cols`.
pub fn stochastic_rows<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| probability(rng, cols)).collect()
}
