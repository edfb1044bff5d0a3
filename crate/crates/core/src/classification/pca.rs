use crate::error::{Error, Result};
use crate::linalg::{covariance, symmetric_eigen3, Vec3};

/// Principal axes of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pca {
    /// Variances along the principal axes, `λ1 ≥ λ2 ≥ λ3 ≥ 0`.
    pub eigenvalues: [f64; 3],
    /// Unit axes, right-handed (`e3 = e1 × e2`).
    pub eigenvectors: [Vec3; 3],
    pub centroid: Vec3,
}

/// Flips `v` so its largest-magnitude component is positive (first index wins ties).
pub fn canonicalize_sign(v: Vec3) -> Vec3 {
    let mut k = 0;
    for i in 1..3 {
        if v[i].abs() > v[k].abs() {
            k = i;
        }
    }
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

/// Eigen-decomposition of the population covariance of `points`.
///
/// `e1` and `e2` are sign-canonicalized; `e3` is then fixed by right-handedness.
pub fn compute_pca(points: &[Vec3]) -> Result<Pca> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let (centroid, cov) = covariance(points);
    let eig = symmetric_eigen3(&cov);
    let e1 = canonicalize_sign(eig.vectors[0]);
    let e2 = canonicalize_sign(eig.vectors[1]);
    let e3 = e1.cross(&e2).normalize();
    Ok(Pca {
        eigenvalues: eig.values.map(|l| l.max(0.0)),
        eigenvectors: [e1, e2, e3],
        centroid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn segment_along_x() {
        let pts: Vec<Vec3> = (0..=10).map(|i| Vec3::new(i as f64 / 10.0, 0.0, 0.0)).collect();
        let pca = compute_pca(&pts).unwrap();
        assert_abs_diff_eq!(pca.eigenvectors[0], Vec3::x(), epsilon = 1e-12);
        assert_abs_diff_eq!(pca.eigenvalues[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pca.eigenvalues[2], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pca.centroid, Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn isotropic_cloud() {
        // Cube corners: covariance 0.25 I.
        let mut pts = Vec::new();
        for x in [-0.5, 0.5] {
            for y in [-0.5, 0.5] {
                for z in [-0.5, 0.5] {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        let pca = compute_pca(&pts).unwrap();
        for l in pca.eigenvalues {
            assert_abs_diff_eq!(l, 0.25, epsilon = 1e-12);
        }
        let [e1, e2, e3] = pca.eigenvectors;
        assert_abs_diff_eq!(e1.dot(&e2), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e1.cross(&e2), e3, epsilon = 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            compute_pca(&[Vec3::zeros(), Vec3::x()]),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn sign_canonicalization() {
        assert_eq!(canonicalize_sign(Vec3::new(0.1, -0.9, 0.2)), Vec3::new(-0.1, 0.9, -0.2));
        assert_eq!(canonicalize_sign(Vec3::new(-0.5, 0.5, 0.0)), Vec3::new(0.5, -0.5, 0.0));
    }
}
