//! Cyclic Jacobi eigenvalue iteration for dense symmetric matrices.

use ndarray::Array2;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 50;

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues (unsorted) of the symmetric matrix `m`. Sweeps until the
/// off-diagonal Frobenius norm is at most `tol · ‖m‖_F`.
pub fn jacobi_eigenvalues(m: &Array2<f64>, tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::out_of_range("tol", tol, "> 0"));
    }
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidEnsemble(format!("matrix is {}x{}, not square", n, m.ncols())));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut a: Vec<f64> = m.iter().copied().collect();
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = tol * frob;

    let mut residual = off_diagonal_norm(&a, n);
    let mut sweeps = 0;
    while residual > target {
        if sweeps == max_sweeps {
            return Err(Error::NoConvergence {
                sweeps,
                residual: residual / frob,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, n, p, q);
            }
        }
        sweeps += 1;
        residual = off_diagonal_norm(&a, n);
    }
    Ok((0..n).map(|i| a[i * n + i]).collect())
}

/// Zeroes `a[p][q]` with one Jacobi rotation, keeping `a` symmetric.
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[k * n + p] = new_kp;
        a[p * n + k] = new_kp;
        a[k * n + q] = new_kq;
        a[q * n + k] = new_kq;
    }
    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn small_matrices() {
        let mut e = jacobi_eigenvalues(&array![[0.0, 1.0], [1.0, 0.0]], 1e-12, 50).unwrap();
        e.sort_by(f64::total_cmp);
        assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);

        let e = jacobi_eigenvalues(&Array2::eye(4), 1e-12, 50).unwrap();
        assert_eq!(e, vec![1.0; 4]);

        // Eigenvalues of the path-graph Laplacian-like tridiagonal matrix.
        let n = 6;
        let m = Array2::from_shape_fn((n, n), |(i, j)| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let mut e = jacobi_eigenvalues(&m, 1e-14, 50).unwrap();
        e.sort_by(f64::total_cmp);
        for (k, v) in e.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let m = Array2::from_shape_fn((12, 12), |(i, j)| ((i * 7 + j * 7) % 5) as f64);
        match jacobi_eigenvalues(&m, 1e-12, 0) {
            Err(Error::NoConvergence { sweeps: 0, residual }) => assert!(residual > 0.0),
            other => panic!("{other:?}"),
        }
        assert!(jacobi_eigenvalues(&m, 0.0, 10).is_err());
    }
}
