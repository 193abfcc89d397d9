//! Dense vector helpers on `f64` slices.

use rand::Rng;
use rand_distr::StandardNormal;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x {
        *xi *= alpha;
    }
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Removes the components of `v` along each (orthonormal) basis vector,
/// sweeping the basis twice. Returns the residual norm.
pub fn orthogonalize_against(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
    norm(v)
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// Returns the orthonormal basis, or the index of the first vector whose
/// residual norm falls below `tol` along with that norm.
pub fn orthonormalize(vectors: &[&[f64]], tol: f64) -> Result<Vec<Vec<f64>>, (usize, f64)> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        let mut r = v.to_vec();
        let residual = orthogonalize_against(&mut r, &basis);
        if residual < tol {
            return Err((i, residual));
        }
        scale(1.0 / residual, &mut r);
        basis.push(r);
    }
    Ok(basis)
}

/// `k` orthonormal random directions in `R^d` (requires `k <= d`).
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> Vec<Vec<f64>> {
    assert!(k <= d, "cannot draw {k} orthonormal vectors in R^{d}");
    let mut basis = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = gaussian_vector(rng, d);
        let r = orthogonalize_against(&mut v, &basis);
        // Gaussian draws are almost surely independent; retry on the null event.
        if r > 1e-8 {
            scale(1.0 / r, &mut v);
            basis.push(v);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn orthonormalize_detects_dependence() {
        let a = [1.0, 0.0, 0.0];
        let b = [2.0, 0.0, 0.0];
        let err = orthonormalize(&[&a, &b], 1e-8).unwrap_err();
        assert_eq!(err.0, 1);
    }

    #[test]
    fn random_basis_is_orthonormal() {
        let mut rng = seeded_rng(3);
        let basis = random_orthonormal(&mut rng, 20, 7);
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot(u, v) - expected).abs() < 1e-12);
            }
        }
    }
}
