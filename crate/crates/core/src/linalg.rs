//! Dense helpers for the handful of dimensions a statistic set can have.

use alloc::vec;
use alloc::vec::Vec;

/// Lower Cholesky factor of a row-major SPD matrix, or the index of the
/// first non-positive pivot.
pub fn cholesky(a: &[f64], d: usize) -> core::result::Result<Vec<f64>, usize> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for p in 0..j {
                s -= l[i * d + p] * l[j * d + p];
            }
            if i == j {
                let scale = a[i * d + i].abs().max(f64::MIN_POSITIVE);
                if !(s > 1e-12 * scale) || s <= 0.0 {
                    return Err(i);
                }
                l[i * d + i] = libm::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

pub fn cholesky_solve(l: &[f64], d: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * d + p] * y[p];
        }
        y[i] = s / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = y[i];
        for p in i + 1..d {
            s -= l[p * d + i] * x[p];
        }
        x[i] = s / l[i * d + i];
    }
    x
}

pub fn spd_inverse(a: &[f64], d: usize) -> core::result::Result<Vec<f64>, usize> {
    let l = cholesky(a, d)?;
    let mut inv = vec![0.0; d * d];
    let mut e = vec![0.0; d];
    for j in 0..d {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(&l, d, &e);
        for i in 0..d {
            inv[i * d + j] = col[i];
        }
    }
    Ok(inv)
}

/// Eigenvalues of a symmetric 2×2 matrix `[[a, b], [b, c]]`, ascending.
pub fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> [f64; 2] {
    let mean = 0.5 * (a + c);
    let r = libm::hypot(0.5 * (a - c), b);
    [mean - r, mean + r]
}

/// Normalised log-weight moments of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `log Σ exp(logw_j)`.
    pub log_total: f64,
    pub mean: Vec<f64>,
    /// Row-major `d × d` covariance.
    pub cov: Vec<f64>,
}

/// Weighted mean and covariance of `points` (flat, row length `d`) under
/// weights proportional to `exp(logw)`.
pub fn weighted_moments(points: &[f64], d: usize, logw: &[f64]) -> Moments {
    debug_assert_eq!(points.len(), d * logw.len());
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut mean = vec![0.0; d];
    for (p, &lw) in points.chunks_exact(d).zip(logw) {
        let w = libm::exp(lw - max);
        total += w;
        for (m, x) in mean.iter_mut().zip(p) {
            *m += w * x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut cov = vec![0.0; d * d];
    for (p, &lw) in points.chunks_exact(d).zip(logw) {
        let w = libm::exp(lw - max) / total;
        for i in 0..d {
            let di = p[i] - mean[i];
            for j in 0..=i {
                cov[i * d + j] += w * di * (p[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[j * d + i] = cov[i * d + j];
        }
    }
    Moments { log_total: max + libm::log(total), mean, cov }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let inv = spd_inverse(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|p| a[i * 3 + p] * inv[p * 3 + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert_eq!(cholesky(&[1.0, 1.0, 1.0, 1.0], 2), Err(1));
    }

    #[test]
    fn eigen2() {
        let [lo, hi] = sym2_eigenvalues(2.0, 1.0, 2.0);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_moments() {
        let pts = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let m = weighted_moments(&pts, 2, &[0.0; 4]);
        assert!((m.log_total - libm::log(4.0)).abs() < 1e-15);
        assert_eq!(m.mean, vec![0.5, 0.5]);
        assert!((m.cov[0] - 0.25).abs() < 1e-15 && m.cov[1].abs() < 1e-15);
    }
}
