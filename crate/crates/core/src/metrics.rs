//! Error metrics between piecewise-linear curves given as sorted
//! (position, value) samples. Curves are extended constantly beyond their
//! first/last samples so slightly-short reconstructions still compare.

use crate::error::{Error, Result};

fn interp(curve: &[(f64, f64)], x: f64) -> f64 {
    if x <= curve[0].0 {
        return curve[0].1;
    }
    if x >= curve[curve.len() - 1].0 {
        return curve[curve.len() - 1].1;
    }
    let idx = curve.partition_point(|p| p.0 <= x);
    let (x0, y0) = curve[idx - 1];
    let (x1, y1) = curve[idx];
    if x1 == x0 {
        return 0.5 * (y0 + y1);
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn merged_abscissas(a: &[(f64, f64)], b: &[(f64, f64)], interval: [f64; 2]) -> Vec<f64> {
    let [lo, hi] = interval;
    let mut xs: Vec<f64> = a
        .iter()
        .chain(b)
        .map(|p| p.0)
        .filter(|&x| x >= lo && x <= hi)
        .chain([lo, hi])
        .collect();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xs.dedup();
    xs
}

fn validate(rec: &[(f64, f64)], truth: &[(f64, f64)], interval: [f64; 2]) -> Result<()> {
    if rec.is_empty() || truth.is_empty() {
        return Err(Error::InvalidInput("empty curve".into()));
    }
    if interval[1] <= interval[0] {
        return Err(Error::InvalidInput("empty comparison interval".into()));
    }
    for c in [rec, truth] {
        if c.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidInput("curve abscissas not sorted".into()));
        }
    }
    Ok(())
}

// Exact integral of |linear segment| with endpoint values v0, v1 over width h.
// A sign change splits the segment into two triangles at the zero crossing.
fn abs_segment(h: f64, v0: f64, v1: f64) -> f64 {
    if v0 * v1 < 0.0 {
        h * (v0 * v0 + v1 * v1) / (2.0 * (v0.abs() + v1.abs()))
    } else {
        0.5 * h * (v0.abs() + v1.abs())
    }
}

/// Relative L1 distance: integral of |rec - truth| over the interval,
/// normalized by the integral of |truth|, exact on the merged abscissa set
/// where both curves are piecewise linear.
pub fn l1_error(rec: &[(f64, f64)], truth: &[(f64, f64)], interval: [f64; 2]) -> Result<f64> {
    validate(rec, truth, interval)?;
    let xs = merged_abscissas(rec, truth, interval);
    let mut num = 0.0;
    let mut den = 0.0;
    for w in xs.windows(2) {
        let h = w[1] - w[0];
        let d0 = interp(rec, w[0]) - interp(truth, w[0]);
        let d1 = interp(rec, w[1]) - interp(truth, w[1]);
        num += abs_segment(h, d0, d1);
        den += abs_segment(h, interp(truth, w[0]), interp(truth, w[1]));
    }
    if den == 0.0 {
        return Err(Error::InvalidInput("truth curve vanishes on interval".into()));
    }
    Ok(num / den)
}

/// Relative L-infinity distance over the merged abscissa set.
pub fn linf_error(rec: &[(f64, f64)], truth: &[(f64, f64)], interval: [f64; 2]) -> Result<f64> {
    validate(rec, truth, interval)?;
    let xs = merged_abscissas(rec, truth, interval);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &x in &xs {
        worst = worst.max((interp(rec, x) - interp(truth, x)).abs());
        scale = scale.max(interp(truth, x).abs());
    }
    if scale == 0.0 {
        return Err(Error::InvalidInput("truth curve vanishes on interval".into()));
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat(v: f64, n: usize, hi: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| (hi * i as f64 / (n - 1) as f64, v))
            .collect()
    }

    #[test]
    fn identical_curves_zero_error() {
        let c = flat(1.0, 5, 2.0);
        assert_eq!(l1_error(&c, &c, [0.0, 2.0]).unwrap(), 0.0);
        assert_eq!(linf_error(&c, &c, [0.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        // rec = truth + 0.1 with truth = 1 on [0,2] -> relative L1 = 0.1
        let truth = flat(1.0, 5, 2.0);
        let rec = flat(1.1, 9, 2.0);
        assert_relative_eq!(l1_error(&rec, &truth, [0.0, 2.0]).unwrap(), 0.1, epsilon = 1e-14);
        assert_relative_eq!(linf_error(&rec, &truth, [0.0, 2.0]).unwrap(), 0.1, epsilon = 1e-14);
    }

    #[test]
    fn triangle_against_zero_baseline() {
        // |x| hat of height 1 on [0,2] vs constant 0.5: hand integral
        let truth = flat(0.5, 3, 2.0);
        let rec = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)];
        // |hat - 0.5| integrates to four triangles of area 1/8 each; den = 1
        assert_relative_eq!(l1_error(&rec, &truth, [0.0, 2.0]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn subinterval_restriction() {
        let truth = flat(1.0, 5, 2.0);
        let mut rec = flat(1.0, 9, 2.0);
        // perturb only the right half
        for p in rec.iter_mut().filter(|p| p.0 > 1.0) {
            p.1 = 2.0;
        }
        let left = l1_error(&rec, &truth, [0.0, 1.0]).unwrap();
        assert!(left < 1e-12);
        let right = l1_error(&rec, &truth, [1.0, 2.0]).unwrap();
        assert!(right > 0.5);
    }

    #[test]
    fn empty_interval_rejected() {
        let c = flat(1.0, 3, 1.0);
        assert!(l1_error(&c, &c, [1.0, 1.0]).is_err());
    }
}
