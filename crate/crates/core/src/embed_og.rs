//! Optimal-grid embedding: train primary/dual reference weights on a
//! homogeneous unit-speed medium, estimate average slowness from the first
//! dual weight, and place pointwise velocity estimates on interleaved
//! cumulative node positions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rom::{self, GridWeights, LanczosOptions};
use crate::spectral::SpectralData;

/// Reference weights from the unit-speed medium on [0, theta]. Both weight
/// families scale linearly in theta.
#[derive(Debug, Clone)]
pub struct ReferenceGrid {
    pub n: usize,
    pub theta: f64,
    pub gamma0: Vec<f64>,
    pub gamma_hat0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OGReconstruction {
    /// x^opt_0..x^opt_n (n+1 entries, starts at 0)
    pub primary_nodes: Vec<f64>,
    /// c_j attached to x^opt_{j-1}, j = 1..n
    pub primary_estimates: Vec<f64>,
    /// x-hat^opt_1..x-hat^opt_n
    pub dual_nodes: Vec<f64>,
    /// c-hat_j attached to x-hat^opt_j
    pub dual_estimates: Vec<f64>,
    pub avg_slowness: f64,
    /// indices (1-based j) where an estimate came out nonpositive
    pub flagged: Vec<usize>,
}

/// Analytic spectral ladder of the unit-speed medium on [0, theta] with a
/// far Dirichlet end: lambda_k = i(k-1/2)pi/theta, y_k = 1/theta.
pub fn homogeneous_spectrum(n: usize, theta: f64) -> Result<SpectralData> {
    if n == 0 || theta <= 0.0 {
        return Err(Error::InvalidInput("need n >= 1 and theta > 0".into()));
    }
    let poles = (1..=n)
        .map(|k| Complex64::new(0.0, (k as f64 - 0.5) * std::f64::consts::PI / theta))
        .collect();
    let residues = vec![Complex64::new(1.0 / theta, 0.0); n];
    SpectralData::new(poles, residues)
}

/// Reference weights: homogeneous ladder -> Lanczos -> weight extraction.
pub fn train_reference(n: usize, theta: f64) -> Result<ReferenceGrid> {
    let data = homogeneous_spectrum(n, theta)?;
    let (_, weights) = rom::build(&data, &LanczosOptions::for_depth(n))?;
    let scale = weights
        .gamma
        .iter()
        .chain(&weights.gamma_hat)
        .map(|g| g.norm())
        .fold(0.0f64, f64::max);
    let mut gamma0 = Vec::with_capacity(n);
    let mut gamma_hat0 = Vec::with_capacity(n);
    for (g, gh) in weights.gamma.iter().zip(&weights.gamma_hat) {
        if g.re <= 0.0 || gh.re <= 0.0 || g.im.abs() > 1e-8 * scale || gh.im.abs() > 1e-8 * scale
        {
            return Err(Error::Eigen(format!(
                "reference weights not real positive: gamma {g}, gamma_hat {gh}"
            )));
        }
        gamma0.push(g.re);
        gamma_hat0.push(gh.re);
    }
    Ok(ReferenceGrid {
        n,
        theta,
        gamma0,
        gamma_hat0,
    })
}

/// Average slowness from the first dual weight: the dual weight of a
/// constant medium c relates to the unit reference on the same interval by
/// gamma_hat_1 = gamma_hat0_1 / c^2, so gamma_hat_1 * c(0) / gamma_hat0_1
/// recovers 1/c exactly. Requires the reference trained on theta equal to
/// the physical interval length.
pub fn estimate_slowness(weights: &GridWeights, reference: &ReferenceGrid, c0: f64) -> Result<f64> {
    if weights.n() != reference.n {
        return Err(Error::InvalidInput(format!(
            "weights n = {} vs reference n = {}",
            weights.n(),
            reference.n
        )));
    }
    if c0 <= 0.0 {
        return Err(Error::InvalidInput("sensor speed must be positive".into()));
    }
    let gh1 = weights.gamma_hat[0];
    if gh1.re <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "first dual weight has nonpositive real part: {gh1}"
        )));
    }
    Ok(gh1.re * c0 / reference.gamma_hat0[0])
}

/// DC moment lim_{s->0} f(s)/s, evaluated at s0 = 1e-6*|lambda_1| with one
/// even-function Richardson step. For a far Dirichlet end this limit is
/// the interval length.
pub fn estimate_length(data: &SpectralData) -> Result<f64> {
    let s0 = 1e-6 * data.poles[0].norm();
    if s0 <= 0.0 {
        return Err(Error::InvalidInput("degenerate pole scale".into()));
    }
    let g = |s: f64| -> Result<f64> {
        let f = rom::eval_pole_residue(data, Complex64::new(s, 0.0))?;
        Ok(f.re / s)
    };
    // f(s)/s is even in s: one step removes the O(s^2) term
    let est = (4.0 * g(s0)? - g(2.0 * s0)?) / 3.0;
    if est <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "nonpositive DC moment {est}: data not lossless-bounded"
        )));
    }
    Ok(est)
}

/// Velocity estimates on interleaved cumulative nodes:
///   c_j     = csl * gamma_hat0_j / gamma_hat_j   at x^opt_{j-1}
///   c-hat_j = (1/csl) * gamma_j / gamma0_j       at x-hat^opt_j
///   x-hat^opt_j = x-hat^opt_{j-1} + csl * gamma_hat0_j * c_j
///   x^opt_j     = x^opt_{j-1}     + csl * gamma0_j * c-hat_j
/// with csl the average-slowness estimate and x^opt_0 = x-hat^opt_0 = 0.
pub fn reconstruct(
    weights: &GridWeights,
    reference: &ReferenceGrid,
    c0: f64,
) -> Result<OGReconstruction> {
    let n = reference.n;
    if weights.n() != n {
        return Err(Error::InvalidInput(format!(
            "weights n = {} vs reference n = {n}",
            weights.n()
        )));
    }
    let csl = estimate_slowness(weights, reference, c0)?;
    let mut primary_nodes = vec![0.0];
    let mut primary_estimates = Vec::with_capacity(n);
    let mut dual_nodes = Vec::with_capacity(n);
    let mut dual_estimates = Vec::with_capacity(n);
    let mut flagged = Vec::new();
    let mut x = 0.0;
    let mut xh = 0.0;
    for j in 0..n {
        let c_j = csl * reference.gamma_hat0[j] / weights.gamma_hat[j].re;
        let ch_j = (1.0 / csl) * weights.gamma[j].re / reference.gamma0[j];
        if c_j <= 0.0 || ch_j <= 0.0 {
            flagged.push(j + 1);
        }
        primary_estimates.push(c_j);
        xh += csl * reference.gamma_hat0[j] * c_j;
        dual_nodes.push(xh);
        dual_estimates.push(ch_j);
        x += csl * reference.gamma0[j] * ch_j;
        primary_nodes.push(x);
    }
    Ok(OGReconstruction {
        primary_nodes,
        primary_estimates,
        dual_nodes,
        dual_estimates,
        avg_slowness: csl,
        flagged,
    })
}

impl OGReconstruction {
    /// Merged (position, estimate) pairs sorted by position; the
    /// piecewise-linear interpolant through these is the metric curve.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(2 * self.dual_estimates.len());
        for (j, &c) in self.primary_estimates.iter().enumerate() {
            pts.push((self.primary_nodes[j], c));
        }
        for (x, &c) in self.dual_nodes.iter().zip(&self.dual_estimates) {
            pts.push((*x, c));
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pts
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_type,x,c_estimate\n");
        for (j, &c) in self.primary_estimates.iter().enumerate() {
            out.push_str(&format!("primary,{:.17e},{:.17e}\n", self.primary_nodes[j], c));
        }
        for (x, &c) in self.dual_nodes.iter().zip(&self.dual_estimates) {
            out.push_str(&format!("dual,{:.17e},{:.17e}\n", x, c));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::exact_spectrum;
    use crate::medium::MediumProfile;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn weights_for(profile: &MediumProfile, n: usize) -> GridWeights {
        let data = exact_spectrum(profile, 4000, n).unwrap();
        rom::build(&data, &LanczosOptions::for_depth(n)).unwrap().1
    }

    #[test]
    fn ladder_formula() {
        let d = homogeneous_spectrum(1, 1.0).unwrap();
        assert_relative_eq!(d.poles[0].im, PI / 2.0);
        assert_relative_eq!(d.residues[0].re, 1.0);
        let d2 = homogeneous_spectrum(2, 2.0).unwrap();
        assert_relative_eq!(d2.poles[0].im, PI / 4.0);
        assert_relative_eq!(d2.poles[1].im, 3.0 * PI / 4.0);
        assert!(d2.residues.iter().all(|y| (y.re - 0.5).abs() < 1e-15));
    }

    #[test]
    fn ladder_matches_fine_grid_spectrum() {
        let d = homogeneous_spectrum(3, 1.0).unwrap();
        let fd = exact_spectrum(&MediumProfile::constant(1.0, 1.0), 4000, 3).unwrap();
        for k in 0..3 {
            assert_relative_eq!(d.poles[k].im, fd.poles[k].im, max_relative = 1e-7);
            assert_relative_eq!(d.residues[k].re, fd.residues[k].re, max_relative = 1e-7);
        }
    }

    #[test]
    fn reference_hand_values() {
        let r = train_reference(1, 1.0).unwrap();
        assert_relative_eq!(r.gamma_hat0[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.gamma0[0], 8.0 / (PI * PI), epsilon = 1e-12);
        let r2 = train_reference(1, 2.0).unwrap();
        assert_relative_eq!(r2.gamma_hat0[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_scales_linearly() {
        let a = train_reference(8, 1.0).unwrap();
        let b = train_reference(8, 2.0).unwrap();
        for j in 0..8 {
            assert_relative_eq!(b.gamma0[j] / a.gamma0[j], 2.0, max_relative = 1e-8);
            assert_relative_eq!(b.gamma_hat0[j] / a.gamma_hat0[j], 2.0, max_relative = 1e-8);
        }
    }

    #[test]
    fn primary_weights_sum_to_length() {
        let mut prev = f64::INFINITY;
        for n in [5usize, 10, 20, 50] {
            let r = train_reference(n, 1.0).unwrap();
            let err = (r.gamma0.iter().sum::<f64>() - 1.0).abs();
            assert!(err < prev, "n={n}: {err} vs {prev}");
            prev = err;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn self_slowness_is_one() {
        let r = train_reference(6, 1.0).unwrap();
        let w = GridWeights {
            gamma: r.gamma0.iter().map(|&g| g.into()).collect(),
            gamma_hat: r.gamma_hat0.iter().map(|&g| g.into()).collect(),
        };
        assert_relative_eq!(estimate_slowness(&w, &r, 1.0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_medium_slowness() {
        let p = MediumProfile::constant(2.0, 2.0);
        let w = weights_for(&p, 10);
        let r = train_reference(10, 2.0).unwrap();
        assert_relative_eq!(estimate_slowness(&w, &r, 2.0).unwrap(), 0.5, max_relative = 1e-6);
    }

    #[test]
    fn bump_slowness_matches_quadrature() {
        let p = MediumProfile::smooth_bump();
        let w = weights_for(&p, 50);
        let r = train_reference(50, p.length).unwrap();
        let est = estimate_slowness(&w, &r, p.eval_speed(0.0).unwrap()).unwrap();
        let truth = p.average_slowness().unwrap();
        assert_relative_eq!(est, truth, max_relative = 0.02);
    }

    #[test]
    fn dc_moment_recovers_interval_length() {
        // a 12-pair truncation drops a tail of sum_{k>12} 1/(k-1/2)^2 * 2/pi^2
        // of the DC moment, about 1.8%
        let d = homogeneous_spectrum(12, 1.5).unwrap();
        assert_relative_eq!(estimate_length(&d).unwrap(), 1.5, max_relative = 0.025);
        // constant c = 2 on [0,2]: the limit is the length, not travel time
        let p = MediumProfile::constant(2.0, 2.0);
        let data = exact_spectrum(&p, 4000, 12).unwrap();
        assert_relative_eq!(estimate_length(&data).unwrap(), 2.0, max_relative = 0.025);
    }

    #[test]
    fn self_reconstruction_exact() {
        let r = train_reference(9, 1.0).unwrap();
        let w = GridWeights {
            gamma: r.gamma0.iter().map(|&g| g.into()).collect(),
            gamma_hat: r.gamma_hat0.iter().map(|&g| g.into()).collect(),
        };
        let rec = reconstruct(&w, &r, 1.0).unwrap();
        for c in rec.primary_estimates.iter().chain(&rec.dual_estimates) {
            assert_relative_eq!(*c, 1.0, epsilon = 1e-12);
        }
        assert!(rec.flagged.is_empty());
    }

    #[test]
    fn constant_medium_reconstruction() {
        let p = MediumProfile::constant(2.0, 2.0);
        let w = weights_for(&p, 12);
        let r = train_reference(12, 2.0).unwrap();
        let rec = reconstruct(&w, &r, 2.0).unwrap();
        for c in rec.primary_estimates.iter().chain(&rec.dual_estimates) {
            assert_relative_eq!(*c, 2.0, max_relative = 1e-5);
        }
        for pair in rec.primary_nodes.windows(2) {
            assert!(pair[1] > pair[0]);
        }
        assert_relative_eq!(*rec.primary_nodes.last().unwrap(), 2.0, max_relative = 0.02);
    }

    #[test]
    fn scaling_equivariance() {
        let n = 10;
        let p1 = MediumProfile::constant(1.3, 1.0);
        let p2 = MediumProfile::constant(2.6, 1.0);
        let r = train_reference(n, 1.0).unwrap();
        let rec1 = reconstruct(&weights_for(&p1, n), &r, 1.3).unwrap();
        let rec2 = reconstruct(&weights_for(&p2, n), &r, 2.6).unwrap();
        for (a, b) in rec1.dual_estimates.iter().zip(&rec2.dual_estimates) {
            assert_relative_eq!(b / a, 2.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn bump_reconstruction_tracks_truth() {
        let p = MediumProfile::smooth_bump();
        let n = 30;
        let w = weights_for(&p, n);
        let r = train_reference(n, p.length).unwrap();
        let rec = reconstruct(&w, &r, p.eval_speed(0.0).unwrap()).unwrap();
        // every estimate within 10% of the true speed at its node
        for (x, c) in rec.curve() {
            if x > p.length {
                break;
            }
            let truth = p.eval_speed(x).unwrap();
            assert!(
                (c - truth).abs() / truth < 0.1,
                "x = {x}: estimate {c} vs {truth}"
            );
        }
    }

    #[test]
    fn csv_shape() {
        let r = train_reference(3, 1.0).unwrap();
        let w = GridWeights {
            gamma: r.gamma0.iter().map(|&g| g.into()).collect(),
            gamma_hat: r.gamma_hat0.iter().map(|&g| g.into()).collect(),
        };
        let rec = reconstruct(&w, &r, 1.0).unwrap();
        let csv = rec.to_csv();
        assert!(csv.starts_with("node_type,x,c_estimate\n"));
        assert_eq!(csv.lines().count(), 1 + 6);
    }
}
