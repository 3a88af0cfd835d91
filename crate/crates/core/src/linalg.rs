//! Small dense kernels shared by the forward solver and the ROM machinery:
//! complex tridiagonal solves and a symmetric tridiagonal eigensolver
//! (Sturm bisection + inverse iteration) for the lowest part of the spectrum.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Thomas algorithm for a complex tridiagonal system.
///
/// `sub` couples row i to i-1 (length n-1), `diag` has length n, `sup`
/// couples row i to i+1 (length n-1). No pivoting; a vanishing pivot is
/// reported with its row index.
pub fn solve_tridiagonal_complex(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    assert_eq!(sub.len(), n - 1);
    assert_eq!(sup.len(), n - 1);
    assert_eq!(rhs.len(), n);

    let mut c = vec![Complex64::new(0.0, 0.0); n - 1];
    let mut d = vec![Complex64::new(0.0, 0.0); n];

    let mut pivot = diag[0];
    if pivot.norm() == 0.0 {
        return Err(Error::SolverBreakdown { row: 0 });
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i - 1] * c[i - 1];
        if pivot.norm() == 0.0 {
            return Err(Error::SolverBreakdown { row: i });
        }
        if i < n - 1 {
            c[i] = sup[i] / pivot;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// Number of eigenvalues of the symmetric tridiagonal (diag, off) strictly
/// below `x`, from the Sturm sequence of the shifted LDL^T factorization.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        if q == 0.0 {
            q = 1e-300;
        }
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` smallest eigenvalues of a symmetric tridiagonal matrix via
/// bisection on the Sturm count.
pub fn smallest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    assert!(k <= n);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { 0.0 })
            + (if i < n - 1 { off[i].abs() } else { 0.0 });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    let mut eigs = Vec::with_capacity(k);
    for j in 0..k {
        let (mut a, mut b) = (lo, hi);
        // invariant: count(a) <= j < count(b)
        while b - a > 1e-15 * scale + f64::EPSILON * (a.abs() + b.abs()) {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid) <= j {
                a = mid;
            } else {
                b = mid;
            }
        }
        eigs.push(0.5 * (a + b));
    }
    eigs
}

/// Real tridiagonal solve with partial pivoting (fill-in on a second
/// superdiagonal). Used by inverse iteration on nearly singular shifts.
fn solve_tridiagonal_pivoted(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Vec<f64> {
    let n = diag.len();
    let mut a = vec![0.0; n]; // subdiagonal (row i, col i-1)
    let mut b = diag.to_vec();
    let mut c = vec![0.0; n]; // superdiagonal (row i, col i+1)
    let mut d = vec![0.0; n]; // second superdiagonal (row i, col i+2)
    let mut x = rhs.to_vec();
    a[1..n].copy_from_slice(sub);
    c[..n - 1].copy_from_slice(sup);

    for i in 0..n - 1 {
        if b[i].abs() < a[i + 1].abs() {
            // swap rows i and i+1
            x.swap(i, i + 1);
            let (bi, ci, di) = (b[i], c[i], d[i]);
            b[i] = a[i + 1];
            c[i] = b[i + 1];
            d[i] = c[i + 1];
            a[i + 1] = bi;
            b[i + 1] = ci;
            c[i + 1] = di;
            d[i + 1] = 0.0;
        }
        let pivot = if b[i] == 0.0 { 1e-300 } else { b[i] };
        let m = a[i + 1] / pivot;
        b[i + 1] -= m * c[i];
        c[i + 1] -= m * d[i];
        x[i + 1] -= m * x[i];
        a[i + 1] = 0.0;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        if i + 1 < n {
            s -= c[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= d[i] * x[i + 2];
        }
        let pivot = if b[i] == 0.0 { 1e-300 } else { b[i] };
        x[i] = s / pivot;
    }
    x
}

/// Eigenvector of a symmetric tridiagonal matrix for an isolated eigenvalue
/// `mu`, by inverse iteration. Returned vector has unit Euclidean norm.
pub fn eigenvector_for(diag: &[f64], off: &[f64], mu: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let shifted: Vec<f64> = diag.iter().map(|&d| d - mu).collect();
    // deterministic start, no zeros
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 * 0.7391).sin()))
        .collect();
    let mut norm = 0.0;
    for _ in 0..4 {
        v = solve_tridiagonal_pivoted(off, &shifted, off, &v);
        norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Eigen(format!(
                "inverse iteration failed at mu = {mu}"
            )));
        }
        for x in &mut v {
            *x /= norm;
        }
        // converged when the solve amplifies by ~1/eps
        if norm > 1.0 / (1e3 * f64::EPSILON) {
            break;
        }
    }
    let _ = norm;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn thomas_matches_direct_2x2() {
        // [[1, 1], [-1, 1]] x = e1
        let x = solve_tridiagonal_complex(
            &[Complex64::new(-1.0, 0.0)],
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            &[Complex64::new(1.0, 0.0)],
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        assert_relative_eq!(x[0].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(x[1].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_pivot_reports_row() {
        let err = solve_tridiagonal_complex(
            &[Complex64::new(1.0, 0.0)],
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            &[Complex64::new(1.0, 0.0)],
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap_err();
        match err {
            Error::SolverBreakdown { row } => assert_eq!(row, 0),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn laplacian_eigenvalues() {
        // -u'' on (0,1), Dirichlet, n interior points: mu_k = (2/h sin(k pi h / 2))^2
        let n = 200;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let eigs = smallest_eigenvalues(&diag, &off, 3);
        for (k, &mu) in eigs.iter().enumerate() {
            let exact = (2.0 / h * ((k as f64 + 1.0) * std::f64::consts::PI * h / 2.0).sin())
                .powi(2);
            assert_relative_eq!(mu, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn inverse_iteration_recovers_eigenvector() {
        let n = 50;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let eigs = smallest_eigenvalues(&diag, &off, 1);
        let v = eigenvector_for(&diag, &off, eigs[0]).unwrap();
        // check A v = mu v
        for i in 0..n {
            let mut av = diag[i] * v[i];
            if i > 0 {
                av += off[i - 1] * v[i - 1];
            }
            if i < n - 1 {
                av += off[i] * v[i + 1];
            }
            assert_relative_eq!(av, eigs[0] * v[i], epsilon = 1e-9);
        }
    }
}
