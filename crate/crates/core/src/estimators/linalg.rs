//! Small dense symmetric positive-definite solves for the `d×d` normal
//! equations.

use crate::error::{Error, Result};

/// Solves `A x = rhs` for symmetric positive-definite `A` (row-major, `d×d`)
/// by Cholesky factorization. `A` is overwritten with its factor.
pub(crate) fn cholesky_solve(a: &mut [f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let d = rhs.len();
    debug_assert_eq!(a.len(), d * d);
    let scale = (0..d).map(|i| a[i * d + i].abs()).fold(0.0, f64::max);
    let floor = scale * 1e-13 * d as f64;
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= a[j * d + k] * a[j * d + k];
        }
        if !(diag > floor) {
            return Err(Error::RankDeficient);
        }
        let ljj = diag.sqrt();
        a[j * d + j] = ljj;
        for i in j + 1..d {
            let mut v = a[i * d + j];
            for k in 0..j {
                v -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = v / ljj;
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..d {
        for k in 0..i {
            y[i] -= a[i * d + k] * y[k];
        }
        y[i] /= a[i * d + i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            y[i] -= a[k * d + i] * y[k];
        }
        y[i] /= a[i * d + i];
    }
    Ok(y)
}

/// `A += w · x xᵀ` on the lower triangle.
#[inline]
pub(crate) fn rank_one_lower(a: &mut [f64], x: &[f64], w: f64) {
    let d = x.len();
    for i in 0..d {
        let wx = w * x[i];
        let row = &mut a[i * d..i * d + i + 1];
        for (aij, xj) in row.iter_mut().zip(x) {
            *aij += wx * xj;
        }
    }
}

pub(crate) fn symmetrize_from_lower(a: &mut [f64], d: usize) {
    for i in 0..d {
        for j in i + 1..d {
            a[i * d + j] = a[j * d + i];
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&mut a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_is_rank_deficient() {
        let mut a = vec![1.0, 1.0, 1.0, 1.0];
        assert!(matches!(cholesky_solve(&mut a, &[1.0, 1.0]), Err(Error::RankDeficient)));
    }
}
