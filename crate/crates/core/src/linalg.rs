//! Small fixed-size linear algebra used by plane fitting and PCA.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Eigen-decomposition of a symmetric 3×3 matrix, eigenvalues in descending
/// order with matching unit eigenvectors.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricEigen3 {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi rotations on a symmetric 3×3 matrix.
///
/// Only the lower triangle is trusted; the input is symmetrized first.
pub fn symmetric_eigen3(m: &Mat3) -> SymmetricEigen3 {
    let mut a = 0.5 * (m + m.transpose());
    let mut v = Mat3::identity();

    for sweep in 0..MAX_SWEEPS {
        let off = a[(0, 1)].abs() + a[(0, 2)].abs() + a[(1, 2)].abs();
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let g = 100.0 * apq.abs();
            let app = a[(p, p)];
            let aqq = a[(q, q)];
            if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                continue;
            }
            let theta = (aqq - app) / (2.0 * apq);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Mat3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= rot;
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.map(|i| a[(i, i)]);
    let vectors = order.map(|i| v.column(i).normalize());
    SymmetricEigen3 { values, vectors }
}

/// Population covariance (divided by `n`) of a point set together with its mean.
///
/// Points are accumulated in a canonical (sorted) order so the result does not
/// depend on the order the caller supplies them in.
pub fn covariance(points: &[Vec3]) -> (Vec3, Mat3) {
    let mut sorted: Vec<&Vec3> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
    });
    let n = sorted.len() as f64;
    let mut mean = Vec3::zeros();
    for p in &sorted {
        mean += **p;
    }
    mean /= n;
    let mut cov = Mat3::zeros();
    for p in &sorted {
        let d = **p - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    (mean, cov)
}
