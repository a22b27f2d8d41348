//! Seeded synthesis of matrices, vectors and demo families.
//!
//! Every generator takes the RNG explicitly so runs are reproducible from
//! the configured seed alone.

use crate::operator::{spectral_norm, OperatorFamily, OperatorSpec};
use crate::wavelet::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize) -> DVector<C64> {
    DVector::from_fn(dim, |_, _| random_complex(rng))
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, dim: usize) -> DVector<C64> {
    let v = random_vector(rng, dim);
    let n = v.norm();
    v / C64::new(n, 0.0)
}

pub fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| random_complex(rng))
}

/// Random matrix of rank at most `rank`, spectral norm at most 1.
pub fn random_rank_matrix<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> DMatrix<C64> {
    let left = DMatrix::<C64>::from_fn(dim, rank, |_, _| random_complex(rng));
    let right = DMatrix::<C64>::from_fn(rank, dim, |_, _| random_complex(rng));
    let m = left * right;
    let norm = spectral_norm(&m);
    if norm == 0.0 {
        m
    } else {
        m / C64::new(norm * (1.0 + 1e-12), 0.0)
    }
}

/// `count` orthonormal vectors from Gram–Schmidt over random ones.
pub fn random_orthonormal<R: Rng>(rng: &mut R, dim: usize, count: usize) -> Vec<DVector<C64>> {
    assert!(count <= dim);
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = random_vector(rng, dim);
        for b in &basis {
            let c = b.dotc(&v);
            v -= b * c;
        }
        let n = v.norm();
        if n > 1e-6 {
            basis.push(v / C64::new(n, 0.0));
        }
    }
    basis
}

/// Coordinate basis of the section as the orthonormal sequence {e_n}.
pub fn coordinate_sequence(dim: usize) -> Vec<DVector<C64>> {
    (0..dim)
        .map(|n| {
            let mut v = DVector::<C64>::zeros(dim);
            v[n] = C64::new(1.0, 0.0);
            v
        })
        .collect()
}

/// A family of `members` random rank-`rank` operators whose action along the
/// coordinate sequence decays like `base^{−(n+1)}` on both sides.
///
/// Each member is D W D with D = diag(base^{−(n+1)}) and ‖W‖ ≤ 1, so
/// max(‖S e_n‖, ‖S* e_n‖) ≤ base^{−(n+1)} · base^{−1} ≤ base^{−(n+1)}.
pub fn decaying_family<R: Rng>(
    rng: &mut R,
    dim: usize,
    rank: usize,
    members: usize,
    base: f64,
) -> OperatorFamily {
    let d = DMatrix::<C64>::from_fn(dim, dim, |r, c| {
        if r == c {
            C64::new(base.powi(-(r as i32 + 1)), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let specs = (0..members)
        .map(|idx| {
            let w = random_rank_matrix(rng, dim, rank);
            OperatorSpec::from_matrix(format!("alpha{idx}"), &d * w * &d)
        })
        .collect();
    OperatorFamily::new(specs, coordinate_sequence(dim)).expect("coordinate sequence is orthonormal")
}
