//! Rational approximation of impedance samples in pole-residue form by
//! iterative pole relocation: linear least squares in a partial-fraction
//! basis with an auxiliary scaling function, new poles taken as the zeros
//! of that scaling function.
//!
//! All solves run in real arithmetic on stacked Re/Im rows, so conjugate
//! symmetry of the result holds by construction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::ImpedanceSamples;
use crate::spectral::SpectralData;

pub const DEFAULT_SHIFT_RATIO: f64 = 1e-2;
pub const DEFAULT_ITERATIONS: usize = 10;
pub const DEFAULT_MISFIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct FitResult {
    pub data: SpectralData,
    /// max relative misfit after each relocation pass
    pub misfit_history: Vec<f64>,
    pub misfit: f64,
    pub converged: bool,
}

/// Starting poles lambda_j = eps*w_j + i*w_j, w_j linearly spaced over the
/// band; conjugates implicit.
pub fn initial_poles(band: [f64; 2], n: usize, eps: f64) -> Vec<Complex64> {
    let [w0, w1] = band;
    (0..n)
        .map(|j| {
            let t = if n == 1 {
                0.5
            } else {
                j as f64 / (n - 1) as f64
            };
            let w = if n == 1 { 0.5 * (w0 + w1) } else { w0 + t * (w1 - w0) };
            Complex64::new(eps * w, w)
        })
        .collect()
}

// Partial-fraction pair basis at s for representative pole lambda:
//   phi1 = 1/(s+lambda) + 1/(s+conj lambda)
//   phi2 = i/(s+lambda) - i/(s+conj lambda)
// Real coefficients (u, v) reproduce residue y = u + iv on the pair.
fn pair_basis(s: Complex64, lambda: Complex64) -> Result<(Complex64, Complex64)> {
    let d1 = s + lambda;
    let d2 = s + lambda.conj();
    if d1.norm() == 0.0 || d2.norm() == 0.0 {
        return Err(Error::PoleHit(lambda));
    }
    let i = Complex64::i();
    Ok((1.0 / d1 + 1.0 / d2, i / d1 - i / d2))
}

fn rows(samples: &ImpedanceSamples) -> Vec<(Complex64, Complex64)> {
    samples
        .entries
        .iter()
        .copied()
        .filter(|(s, _)| s.im >= 0.0)
        .collect()
}

fn solve_least_squares(mut a: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let cols = a.ncols();
    // basis magnitudes span the whole band width; normalize columns so the
    // rank tolerance measures degeneracy, not scale disparity
    let mut col_norms = Vec::with_capacity(cols);
    for j in 0..cols {
        let norm = a.column(j).norm();
        if norm > 0.0 {
            a.column_mut(j).scale_mut(1.0 / norm);
        }
        col_norms.push(norm);
    }
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * 1e-12;
    let rank = svd.singular_values.iter().filter(|&&v| v > tol).count();
    // an underdetermined system means too few (or degenerate) samples; mere
    // near-dependence among basis columns at large n is handled by the
    // truncated solve below
    if rank < cols && rhs.len() < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let mut x = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::Eigen(e.to_string()))?;
    for j in 0..cols {
        if col_norms[j] > 0.0 {
            x[j] /= col_norms[j];
        } else {
            x[j] = 0.0;
        }
    }
    Ok(x)
}

/// One relocation pass. Any relocated pole with Re lambda < 0 is flipped
/// into the right half plane (stability of the pole-residue form).
pub fn relocate(samples: &ImpedanceSamples, poles: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = poles.len();
    if n == 0 {
        return Err(Error::InvalidInput("need at least one pole".into()));
    }
    if samples.entries.len() < 2 * (n + 1) {
        return Err(Error::InvalidInput(format!(
            "need at least {} samples for {} pole pairs",
            2 * (n + 1),
            n
        )));
    }
    let pts = rows(samples);
    let m = pts.len();
    // Relaxed formulation: sigma(s) = dt + sum_j (d_j phi1 + e_j phi2) with
    // the constant dt a free unknown, pinned away from the trivial solution
    // by one extra row demanding sum_k Re sigma(s_k) = m. The numerator
    // carries a real constant d0 absorbing the flat high-frequency level of
    // the data (both constants are discarded; only sigma's zeros matter).
    // unknowns: [u_1,v_1,..,u_n,v_n, d_1,e_1,..,d_n,e_n, d0, dt]
    let mut a = DMatrix::<f64>::zeros(2 * m + 1, 4 * n + 2);
    let mut b = DVector::<f64>::zeros(2 * m + 1);
    let relax_w = pts.iter().map(|(_, f)| f.norm_sqr()).sum::<f64>().sqrt() / m as f64;
    for (r, &(s, f)) in pts.iter().enumerate() {
        for (j, &l) in poles.iter().enumerate() {
            let (p1, p2) = pair_basis(s, l)?;
            a[(2 * r, 2 * j)] = p1.re;
            a[(2 * r + 1, 2 * j)] = p1.im;
            a[(2 * r, 2 * j + 1)] = p2.re;
            a[(2 * r + 1, 2 * j + 1)] = p2.im;
            let q1 = -f * p1;
            let q2 = -f * p2;
            a[(2 * r, 2 * (n + j))] = q1.re;
            a[(2 * r + 1, 2 * (n + j))] = q1.im;
            a[(2 * r, 2 * (n + j) + 1)] = q2.re;
            a[(2 * r + 1, 2 * (n + j) + 1)] = q2.im;
            a[(2 * m, 2 * (n + j))] += relax_w * p1.re;
            a[(2 * m, 2 * (n + j) + 1)] += relax_w * p2.re;
        }
        a[(2 * r, 4 * n)] = 1.0;
        a[(2 * r, 4 * n + 1)] = -f.re;
        a[(2 * r + 1, 4 * n + 1)] = -f.im;
    }
    a[(2 * m, 4 * n + 1)] = relax_w * m as f64;
    b[2 * m] = relax_w * m as f64;
    let x = solve_least_squares(a, b)?;
    let mut dt = x[4 * n + 1];
    let mut sigma_res: Vec<(f64, f64)> = (0..n)
        .map(|j| (x[2 * (n + j)], x[2 * (n + j) + 1]))
        .collect();
    // a collapsing sigma constant means the relaxation row lost: redo the
    // pass with the constant fixed at 1 (classic non-relaxed iteration)
    if dt.abs() < 1e-8 {
        let mut a = DMatrix::<f64>::zeros(2 * m, 4 * n + 1);
        let mut b = DVector::<f64>::zeros(2 * m);
        for (r, &(s, f)) in pts.iter().enumerate() {
            for (j, &l) in poles.iter().enumerate() {
                let (p1, p2) = pair_basis(s, l)?;
                a[(2 * r, 2 * j)] = p1.re;
                a[(2 * r + 1, 2 * j)] = p1.im;
                a[(2 * r, 2 * j + 1)] = p2.re;
                a[(2 * r + 1, 2 * j + 1)] = p2.im;
                let q1 = -f * p1;
                let q2 = -f * p2;
                a[(2 * r, 2 * (n + j))] = q1.re;
                a[(2 * r + 1, 2 * (n + j))] = q1.im;
                a[(2 * r, 2 * (n + j) + 1)] = q2.re;
                a[(2 * r + 1, 2 * (n + j) + 1)] = q2.im;
            }
            a[(2 * r, 4 * n)] = 1.0;
            b[2 * r] = f.re;
            b[2 * r + 1] = f.im;
        }
        let x = solve_least_squares(a, b)?;
        dt = 1.0;
        sigma_res = (0..n)
            .map(|j| (x[2 * (n + j)], x[2 * (n + j) + 1]))
            .collect();
    }
    // sigma(s) = dt + c^T (sI - A)^{-1} b_hat with A block-diagonal holding
    // -lambda_j as 2x2 real blocks; zeros of sigma = eig(A - b_hat c^T / dt)
    let mut zmat = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (j, &l) in poles.iter().enumerate() {
        let (aa, bb) = (l.re, l.im);
        zmat[(2 * j, 2 * j)] = -aa;
        zmat[(2 * j, 2 * j + 1)] = -bb;
        zmat[(2 * j + 1, 2 * j)] = bb;
        zmat[(2 * j + 1, 2 * j + 1)] = -aa;
    }
    for j in 0..n {
        let (d, e) = (sigma_res[j].0 / dt, sigma_res[j].1 / dt);
        for i in 0..n {
            // b_hat has [2, 0] in each block row
            zmat[(2 * i, 2 * j)] -= 2.0 * d;
            zmat[(2 * i, 2 * j + 1)] -= 2.0 * e;
        }
    }
    let eig = zmat.complex_eigenvalues();
    let scale = poles
        .iter()
        .map(|l| l.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut lams: Vec<Complex64> = eig.iter().map(|z| -z).collect();
    for l in &mut lams {
        *l = Complex64::new(l.re.abs(), l.im);
    }
    // pair conjugates: keep one representative per pair, real poles alone
    lams.sort_by(|a, b| {
        a.im.abs()
            .partial_cmp(&b.im.abs())
            .unwrap()
            .then(a.re.partial_cmp(&b.re).unwrap())
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let imag_tol = 1e-12 * scale;
    let mut reps = Vec::with_capacity(n);
    let mut reals = Vec::new();
    let mut k = 0;
    while k < lams.len() {
        if lams[k].im.abs() <= imag_tol {
            reals.push(lams[k].re);
            k += 1;
        } else {
            if k + 1 >= lams.len() {
                return Err(Error::Eigen("unpaired complex pole after relocation".into()));
            }
            let rep = if lams[k].im > 0.0 { lams[k] } else { lams[k + 1] };
            reps.push(rep);
            k += 2;
        }
    }
    // real zeros come in even counts (2n eigenvalues, conjugate pairs use
    // two each); merge neighbors into a conjugate pair so the basis stays
    // pair-shaped — the next pass relocates them anyway
    if reals.len() % 2 != 0 {
        return Err(Error::Eigen("odd number of real poles after relocation".into()));
    }
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for pair in reals.chunks(2) {
        let re = 0.5 * (pair[0] + pair[1]);
        let im = (0.5 * (pair[1] - pair[0])).max(1e-6 * scale);
        reps.push(Complex64::new(re, im));
    }
    if reps.len() != n {
        return Err(Error::Eigen(format!(
            "relocation produced {} pole pairs, expected {n}",
            reps.len()
        )));
    }
    reps.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap().then(a.re.partial_cmp(&b.re).unwrap()));
    Ok(reps)
}

/// Least-squares residues for fixed poles; strictly proper, no direct term.
pub fn residues(samples: &ImpedanceSamples, poles: &[Complex64]) -> Result<SpectralData> {
    let n = poles.len();
    if n == 0 {
        return Err(Error::InvalidInput("need at least one pole".into()));
    }
    let pts = rows(samples);
    if pts.len() < n {
        return Err(Error::InvalidInput("too few samples for residue solve".into()));
    }
    let m = pts.len();
    let mut a = DMatrix::<f64>::zeros(2 * m, 2 * n);
    let mut b = DVector::<f64>::zeros(2 * m);
    for (r, &(s, f)) in pts.iter().enumerate() {
        for (j, &l) in poles.iter().enumerate() {
            let (p1, p2) = pair_basis(s, l)?;
            a[(2 * r, 2 * j)] = p1.re;
            a[(2 * r + 1, 2 * j)] = p1.im;
            a[(2 * r, 2 * j + 1)] = p2.re;
            a[(2 * r + 1, 2 * j + 1)] = p2.im;
        }
        b[2 * r] = f.re;
        b[2 * r + 1] = f.im;
    }
    let x = solve_least_squares(a, b)?;
    let ys: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
        .collect();
    SpectralData::new(poles.to_vec(), ys)
}

/// Max misfit over samples, relative to the largest sample magnitude.
pub fn misfit(samples: &ImpedanceSamples, data: &SpectralData) -> Result<f64> {
    let scale = samples
        .entries
        .iter()
        .map(|(_, f)| f.norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for &(s, f) in &samples.entries {
        let model = crate::rom::eval_pole_residue(data, s)?;
        worst = worst.max((model - f).norm() / scale);
    }
    Ok(worst)
}

/// Full fitting drive: initial poles from the sampled band, `iterations`
/// relocation passes, then the residue solve. Non-convergence is flagged,
/// not fatal.
pub fn fit(samples: &ImpedanceSamples, n: usize, iterations: usize) -> Result<FitResult> {
    let freqs: Vec<f64> = rows(samples)
        .iter()
        .map(|(s, _)| s.im)
        .filter(|&w| w > 0.0)
        .collect();
    if freqs.is_empty() {
        return Err(Error::InvalidInput(
            "samples contain no positive-frequency points".into(),
        ));
    }
    let w0 = freqs.iter().cloned().fold(f64::INFINITY, f64::min);
    let w1 = freqs.iter().cloned().fold(0.0f64, f64::max);
    let mut poles = initial_poles([w0, w1], n, DEFAULT_SHIFT_RATIO);
    let mut history = Vec::with_capacity(iterations);
    // the iteration is not monotone on hard data, so keep the best pole set
    // seen rather than the last one
    let mut best: Option<(f64, SpectralData)> = None;
    for _ in 0..iterations {
        poles = relocate(samples, &poles)?;
        let data = residues(samples, &poles)?;
        let m = misfit(samples, &data)?;
        history.push(m);
        if best.as_ref().map_or(true, |(b, _)| m < *b) {
            best = Some((m, data));
        }
        // near machine precision the relocation step just stirs roundoff,
        // so stop once the fit is essentially exact
        if m <= 1e-8 {
            break;
        }
    }
    let (final_misfit, data) =
        best.ok_or_else(|| Error::InvalidInput("no fit iterations performed".into()))?;
    Ok(FitResult {
        data,
        misfit_history: history,
        misfit: final_misfit,
        converged: final_misfit <= DEFAULT_MISFIT_TOL,
    })
}

/// Fit with passivity enforcement, for data measured on open (radiating)
/// domains. Plain relocation happily parks pole pairs far outside the
/// sampled band with negative-real-part residues; those pairs fit the
/// samples marginally better but are non-passive and wreck any downstream
/// tridiagonal realization. Between relocation passes this drive drops
/// every pair whose residue has a negative real part or whose pole lies
/// well outside the band, refits residues on the survivors, and keeps the
/// best all-passive iterate. The returned model typically has fewer pairs
/// than requested.
pub fn fit_passive(samples: &ImpedanceSamples, n: usize, iterations: usize) -> Result<FitResult> {
    let freqs: Vec<f64> = rows(samples)
        .iter()
        .map(|(s, _)| s.im)
        .filter(|&w| w > 0.0)
        .collect();
    if freqs.is_empty() {
        return Err(Error::InvalidInput(
            "samples contain no positive-frequency points".into(),
        ));
    }
    let w0 = freqs.iter().cloned().fold(f64::INFINITY, f64::min);
    let w1 = freqs.iter().cloned().fold(0.0f64, f64::max);
    let mut poles = initial_poles([w0, w1], n, DEFAULT_SHIFT_RATIO);
    let mut history = Vec::with_capacity(iterations);
    let mut best: Option<(f64, SpectralData)> = None;
    for _ in 0..iterations {
        poles = relocate(samples, &poles)?;
        loop {
            let data = residues(samples, &poles)?;
            let keep: Vec<Complex64> = data
                .poles
                .iter()
                .zip(data.residues.iter())
                .filter(|(l, y)| y.re >= 0.0 && l.im <= 1.5 * w1 && l.re <= 1.5 * w1)
                .map(|(l, _)| *l)
                .collect();
            if keep.is_empty() {
                return Err(Error::InvalidInput(
                    "every fitted pair was non-passive; nothing to keep".into(),
                ));
            }
            if keep.len() == poles.len() {
                let m = misfit(samples, &data)?;
                history.push(m);
                if best.as_ref().map_or(true, |(b, _)| m < *b) {
                    best = Some((m, data));
                }
                break;
            }
            poles = keep;
        }
        if let Some((m, _)) = &best {
            if *m <= 1e-8 {
                break;
            }
        }
    }
    let (final_misfit, data) =
        best.ok_or_else(|| Error::InvalidInput("no fit iterations performed".into()))?;
    Ok(FitResult {
        data,
        misfit_history: history,
        misfit: final_misfit,
        converged: final_misfit <= DEFAULT_MISFIT_TOL,
    })
}
