//! Latent-space vector operations: signed distance to a boundary, editing
//! along a normal, interpolation, conditional projection, and the special
//! codes used for separability checks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Boundary, LatentCode, Space};

/// Residual norm below which a projected direction is treated as zero.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Maximum `|resultᵀc|` accepted after projecting onto a condition `c`.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

fn check_compatible(b: &Boundary, z: &LatentCode) -> Result<()> {
    if b.space() != z.space() {
        return Err(Error::SpaceMismatch {
            expected: b.space().to_string(),
            actual: z.space().to_string(),
        });
    }
    if z.layers() != 1 {
        return Err(Error::validation(
            "layered codes must be edited per layer (use edit_layered)",
        ));
    }
    if b.dim() != z.dim() {
        return Err(Error::DimMismatch { expected: b.dim(), actual: z.dim() });
    }
    Ok(())
}

fn check_boundaries(a: &Boundary, b: &Boundary) -> Result<()> {
    if a.space() != b.space() {
        return Err(Error::SpaceMismatch {
            expected: a.space().to_string(),
            actual: b.space().to_string(),
        });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(())
}

/// Signed "distance" `nᵀz + bias`. Negative on the opposite side of the boundary.
pub fn distance(b: &Boundary, z: &LatentCode) -> Result<f64> {
    check_compatible(b, z)?;
    Ok(linalg::dot(b.normal(), z.values()) + b.bias())
}

/// `z + alpha·n`
pub fn edit(z: &LatentCode, b: &Boundary, alpha: f64) -> Result<LatentCode> {
    check_compatible(b, z)?;
    let mut values = z.values().to_vec();
    linalg::axpy(alpha, b.normal(), &mut values);
    Ok(z.with_values(values))
}

/// Adds `alpha·n` to the selected layers of a `WPlus` code only.
pub fn edit_layered(
    z: &LatentCode,
    b: &Boundary,
    alpha: f64,
    layer_set: &[usize],
) -> Result<LatentCode> {
    if z.space() != Space::WPlus {
        return Err(Error::SpaceMismatch {
            expected: Space::WPlus.to_string(),
            actual: z.space().to_string(),
        });
    }
    if b.space() == Space::Z {
        return Err(Error::SpaceMismatch {
            expected: "W or WPlus".into(),
            actual: b.space().to_string(),
        });
    }
    let d = z.dim();
    if b.dim() != d {
        return Err(Error::DimMismatch { expected: d, actual: b.dim() });
    }
    let mut values = z.values().to_vec();
    let mut seen = vec![false; z.layers()];
    for &layer in layer_set {
        if layer >= z.layers() {
            return Err(Error::validation(format!(
                "layer {layer} out of range for a {}-layer code",
                z.layers()
            )));
        }
        if std::mem::replace(&mut seen[layer], true) {
            continue;
        }
        linalg::axpy(alpha, b.normal(), &mut values[layer * d..(layer + 1) * d]);
    }
    Ok(z.with_values(values))
}

/// `(1 − t)·z1 + t·z2`
pub fn interpolate(z1: &LatentCode, z2: &LatentCode, t: f64) -> Result<LatentCode> {
    if z1.space() != z2.space() {
        return Err(Error::SpaceMismatch {
            expected: z1.space().to_string(),
            actual: z2.space().to_string(),
        });
    }
    if z1.values().len() != z2.values().len() || z1.layers() != z2.layers() {
        return Err(Error::DimMismatch { expected: z1.values().len(), actual: z2.values().len() });
    }
    let values = z1
        .values()
        .iter()
        .zip(z2.values())
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();
    Ok(z1.with_values(values))
}

/// Removes from `primal` its projection onto the span of the condition
/// normals and renormalizes, so that moving along the result leaves every
/// conditioned attribute unchanged.
///
/// Conditions are orthonormalized with modified Gram-Schmidt (two sweeps)
/// before the subtraction, which makes the result independent of condition
/// order. With no conditions the primal is returned as is.
pub fn project_conditional(primal: &Boundary, conditions: &[Boundary]) -> Result<Boundary> {
    if conditions.is_empty() {
        return Ok(primal.clone());
    }
    for c in conditions {
        check_boundaries(primal, c)?;
    }
    let normals: Vec<&[f64]> = conditions.iter().map(|c| c.normal()).collect();
    let basis = linalg::orthonormalize(&normals, DEGENERACY_TOL).map_err(|(i, residual)| {
        Error::Conditioning { attribute: conditions[i].attribute().to_string(), residual }
    })?;

    let mut direction = primal.normal().to_vec();
    let residual = linalg::orthogonalize_against(&mut direction, &basis);
    if residual < DEGENERACY_TOL {
        return Err(Error::DegenerateProjection { residual });
    }
    linalg::scale(1.0 / residual, &mut direction);
    Boundary::new(primal.attribute(), primal.space(), direction)?.with_bias(primal.bias())
}

/// Cosine similarity `n1ᵀn2` of two boundary normals.
pub fn boundary_cosine(b1: &Boundary, b2: &Boundary) -> Result<f64> {
    if b1.dim() != b2.dim() {
        return Err(Error::DimMismatch { expected: b1.dim(), actual: b2.dim() });
    }
    Ok(linalg::dot(b1.normal(), b2.normal()).clamp(-1.0, 1.0))
}

/// Draws `z ~ N(0, I)` and projects it onto the hyperplane `nᵀz = 0`.
///
/// Only unbiased `Z`-space boundaries are supported: the sampling distribution
/// on a shifted hyperplane, or in the non-Gaussian `W` space, is undefined.
pub fn sample_on_hyperplane<R: Rng + ?Sized>(b: &Boundary, rng: &mut R) -> Result<LatentCode> {
    if b.bias() != 0.0 {
        return Err(Error::Unsupported(format!(
            "on-hyperplane sampling requires zero bias, got {}",
            b.bias()
        )));
    }
    if b.space() != Space::Z {
        return Err(Error::Unsupported(format!(
            "on-hyperplane sampling is only defined for Z space, got {}",
            b.space()
        )));
    }
    let mut z = linalg::gaussian_vector(rng, b.dim());
    let along = linalg::dot(b.normal(), &z);
    linalg::axpy(-along, b.normal(), &mut z);
    // A second pass removes the rounding residue of the first.
    let along = linalg::dot(b.normal(), &z);
    linalg::axpy(-along, b.normal(), &mut z);
    LatentCode::new(Space::Z, z)
}

/// `sign·n` as a code, i.e. the "infinitely far" sample on either side.
pub fn extreme_code(b: &Boundary, positive: bool) -> LatentCode {
    let sign = if positive { 1.0 } else { -1.0 };
    let values = b.normal().iter().map(|v| sign * v).collect();
    LatentCode::new(b.space(), values).expect("unit normal is finite and non-empty")
}
