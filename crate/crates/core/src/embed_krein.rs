//! Krein embedding: cumulative-weight grid and mass-function
//! reconstruction straight from the grid weights (no reference grid, no
//! domain length, no sensor speed), plus the exact point-mass string
//! interpolation of the finite-difference solution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rom::GridWeights;

/// Nodes x_j = sum of the first j primary weights (n+1 of them, x_0 = 0)
/// and n cumulative mass values, the j-th attached to x_{j-1}.
#[derive(Debug, Clone)]
pub struct KreinCurve {
    pub nodes: Vec<f64>,
    pub mass: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityRule {
    /// sqrt(gamma_j / gamma_hat_{j+1}): segment slope of the mass curve
    SegmentSlope,
    /// sqrt(gamma_j / gamma_hat_j): same-index ratio, for comparison
    SameIndex,
}

/// Point-mass string: masses at positions 0 = x_0 < x_1 < ... < x_{n-1},
/// zero value at the free end x_n. Segment lengths and masses stay complex
/// so the interpolation identity holds for lossy data too.
#[derive(Debug, Clone)]
pub struct StringModel {
    /// mass i sits between segments i-1 and i
    pub masses: Vec<Complex64>,
    /// length of segment (x_i, x_{i+1})
    pub lengths: Vec<Complex64>,
}

pub fn krein_curve(weights: &GridWeights) -> KreinCurve {
    let n = weights.n();
    let mut nodes = Vec::with_capacity(n + 1);
    let mut mass = Vec::with_capacity(n);
    let mut x = 0.0;
    let mut m = 0.0;
    nodes.push(0.0);
    for j in 0..n {
        x += weights.gamma[j].re;
        nodes.push(x);
        m += weights.gamma_hat[j].re;
        mass.push(m);
    }
    KreinCurve { nodes, mass }
}

impl KreinCurve {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.nodes.windows(2).all(|w| w[1] > w[0])
            && self.mass.windows(2).all(|w| w[1] > w[0])
            && self.mass[0] > 0.0
    }

    /// (position, cumulative mass) pairs for metric curves: the j-th mass
    /// value at node x_{j-1}, per the quadrature pairing.
    pub fn mass_curve(&self) -> Vec<(f64, f64)> {
        (0..self.n()).map(|j| (self.nodes[j], self.mass[j])).collect()
    }

    pub fn to_csv(&self) -> String {
        // node j carries the cumulative mass through dual weight j+1; the
        // final node repeats the total
        let mut out = String::from("j,x_krein,mass_cumulative\n");
        for (j, &x) in self.nodes.iter().enumerate() {
            let m = self.mass[j.min(self.mass.len() - 1)];
            out.push_str(&format!("{j},{x:.17e},{m:.17e}\n"));
        }
        out
    }
}

/// Velocity at segment midpoints from the mass-curve slope; nonpositive
/// slopes are omitted. The segment-slope rule yields n-1 estimates, the
/// same-index rule n.
pub fn krein_velocity(weights: &GridWeights, rule: VelocityRule) -> Vec<(f64, f64)> {
    let n = weights.n();
    let curve = krein_curve(weights);
    let mut out = Vec::new();
    let count = match rule {
        VelocityRule::SegmentSlope => n - 1,
        VelocityRule::SameIndex => n,
    };
    for j in 0..count {
        let g = weights.gamma[j].re;
        let gh = match rule {
            VelocityRule::SegmentSlope => weights.gamma_hat[j + 1].re,
            VelocityRule::SameIndex => weights.gamma_hat[j].re,
        };
        if g <= 0.0 || gh <= 0.0 {
            continue;
        }
        let x_mid = 0.5 * (curve.nodes[j] + curve.nodes[j + 1]);
        out.push((x_mid, (g / gh).sqrt()));
    }
    out
}

pub fn velocity_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("x_mid,c_estimate\n");
    for (x, c) in points {
        out.push_str(&format!("{x:.17e},{c:.17e}\n"));
    }
    out
}

pub fn string_model(weights: &GridWeights) -> StringModel {
    StringModel {
        masses: weights.gamma_hat.clone(),
        lengths: weights.gamma.clone(),
    }
}

impl StringModel {
    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn positions(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() + 1);
        let mut x = 0.0;
        out.push(0.0);
        for l in &self.lengths {
            x += l.re;
            out.push(x);
        }
        out
    }

    // Shoot one solution across the string: piecewise linear between
    // masses, derivative jump s^2 * m_i * w at mass i, value pinned to 0
    // at the far end. Returns the node values x_0..x_{n-1} plus the final
    // value at x_n.
    fn shoot(&self, s: Complex64, w0: Complex64, slope_in: Complex64) -> Vec<Complex64> {
        let n = self.n();
        let s2 = s * s;
        let mut vals = Vec::with_capacity(n + 1);
        let mut w = w0;
        let mut slope = slope_in + s2 * self.masses[0] * w;
        vals.push(w);
        for i in 0..n {
            w += slope * self.lengths[i];
            vals.push(w);
            if i + 1 < n {
                slope += s2 * self.masses[i + 1] * w;
            }
        }
        vals
    }

    /// Node values w(x_0)..w(x_{n-1}) of the string driven by a unit flux
    /// at x=0 (incoming derivative -s) with w(x_n) = 0.
    pub fn response(&self, s: Complex64) -> Result<Vec<Complex64>> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        // p: w(0)=1, incoming slope 0; q: w(0)=0, incoming slope -s
        let p = self.shoot(s, one, zero);
        let q = self.shoot(s, zero, -s);
        let n = self.n();
        if p[n].norm() == 0.0 {
            return Err(Error::Eigen(format!("string resonance at s = {s}")));
        }
        let a = -q[n] / p[n];
        Ok((0..n).map(|i| a * p[i] + q[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed_og::train_reference;
    use crate::forward::exact_spectrum;
    use crate::medium::MediumProfile;
    use crate::rom::{self, LanczosOptions};
    use crate::spectral::SpectralData;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn weights_of(data: &SpectralData) -> GridWeights {
        let opts = LanczosOptions::for_depth(data.poles.len());
        rom::build(data, &opts).unwrap().1
    }

    fn uniform_weights(n: usize, g: f64, gh: f64) -> GridWeights {
        GridWeights {
            gamma: vec![Complex64::new(g, 0.0); n],
            gamma_hat: vec![Complex64::new(gh, 0.0); n],
        }
    }

    #[test]
    fn hand_curve_n1() {
        let r = train_reference(1, 1.0).unwrap();
        let w = uniform_weights(1, r.gamma0[0], r.gamma_hat0[0]);
        let c = krein_curve(&w);
        assert_eq!(c.nodes.len(), 2);
        assert_eq!(c.mass.len(), 1);
        assert_relative_eq!(c.nodes[1], 8.0 / (PI * PI), epsilon = 1e-12);
        assert_relative_eq!(c.mass[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn totals_converge_to_length_and_mass() {
        // c = 1 on [0,2]: both totals approach 2, error shrinking in n.
        // The node total converges quickly; the mass total carries a slow
        // O(n^-1/2) tail from the end cell, so only require monotone decay
        // there plus a loose bound at n = 50.
        let p = MediumProfile::constant(1.0, 2.0);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for n in [6usize, 12, 25, 50] {
            let data = exact_spectrum(&p, 4000, n).unwrap();
            let c = krein_curve(&weights_of(&data));
            let ex = (c.nodes.last().unwrap() - 2.0).abs();
            let em = (c.mass.last().unwrap() - 2.0).abs();
            assert!(ex < prev.0 && em < prev.1, "n={n}: ({ex},{em}) vs {prev:?}");
            prev = (ex, em);
        }
        assert!(prev.0 < 0.02, "node total error {}", prev.0);
        assert!(prev.1 < 0.16, "mass total error {}", prev.1);
    }

    #[test]
    fn unit_and_quarter_slope_velocities() {
        // M(x) = x: slope 1 everywhere -> c = 1
        let w = uniform_weights(8, 0.25, 0.25);
        for (_, c) in krein_velocity(&w, VelocityRule::SegmentSlope) {
            assert_relative_eq!(c, 1.0, epsilon = 1e-14);
        }
        // M(x) = x/4 -> c = 2
        let w2 = uniform_weights(8, 0.25, 0.0625);
        for (_, c) in krein_velocity(&w2, VelocityRule::SegmentSlope) {
            assert_relative_eq!(c, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn bump_velocity_tracks_truth_interior() {
        let p = MediumProfile::smooth_bump();
        let data = exact_spectrum(&p, 4000, 30).unwrap();
        let pts = krein_velocity(&weights_of(&data), VelocityRule::SegmentSlope);
        // the midpoint slope estimator lags on the bump's steep flank; the
        // worst pointwise error there stays near 12% across n = 25..40
        for (x, c) in pts {
            if x < 0.1 || x > 1.9 {
                continue;
            }
            let truth = p.eval_speed(x).unwrap();
            assert!((c - truth).abs() / truth < 0.15, "x={x}: {c} vs {truth}");
        }
    }

    #[test]
    fn mass_curve_monotone_for_lossless() {
        let p = MediumProfile::smoothed_step();
        let data = exact_spectrum(&p, 4000, 25).unwrap();
        let c = krein_curve(&weights_of(&data));
        assert!(c.is_strictly_increasing());
    }

    #[test]
    fn string_matches_two_by_two_solve() {
        let data = SpectralData::new(
            vec![Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.5, 0.0)],
        )
        .unwrap();
        let (_, w) = rom::build(&data, &LanczosOptions::default()).unwrap();
        let model = string_model(&w);
        let vals = model.response(Complex64::new(1.0, 0.0)).unwrap();
        // f(1) = 1/(1+i)/2 + 1/(1-i)/2 = 0.5
        assert_relative_eq!(vals[0].re, 0.5, epsilon = 1e-12);
        assert!(vals[0].im.abs() < 1e-14);
    }

    #[test]
    fn string_interpolates_fd_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n = rng.gen_range(3..=10);
            let poles: Vec<Complex64> = (0..n)
                .map(|k| Complex64::new(0.0, 1.0 + k as f64 + rng.gen_range(0.0..0.5)))
                .collect();
            let residues: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(0.2..2.0), 0.0))
                .collect();
            let data = SpectralData::new(poles, residues).unwrap();
            let (_, w) = rom::build(&data, &LanczosOptions::default()).unwrap();
            let s = Complex64::new(0.7, 0.2);
            let u = rom::solve_first_order(&w.gamma, &w.gamma_hat, None, s).unwrap();
            let vals = string_model(&w).response(s).unwrap();
            for i in 0..n {
                let fd = u[2 * i];
                assert!(
                    (vals[i] - fd).norm() <= 1e-9 * fd.norm().max(1e-12),
                    "node {i}: {} vs {fd}",
                    vals[i]
                );
            }
        }
    }

    #[test]
    fn string_end_value_vanishes() {
        let data = exact_spectrum(&MediumProfile::constant(1.0, 1.0), 2000, 4).unwrap();
        let (_, w) = rom::build(&data, &LanczosOptions::default()).unwrap();
        let model = string_model(&w);
        let s = Complex64::new(0.9, 1.3);
        let p = model.shoot(s, Complex64::new(1.0, 0.0), Complex64::default());
        let q = model.shoot(s, Complex64::default(), -s);
        let a = -q[model.n()] / p[model.n()];
        let end = a * p[model.n()] + q[model.n()];
        assert!(end.norm() < 1e-12);
    }

    #[test]
    fn csv_shapes() {
        let w = uniform_weights(4, 0.5, 0.25);
        let c = krein_curve(&w);
        let csv = c.to_csv();
        assert!(csv.starts_with("j,x_krein,mass_cumulative\n"));
        assert_eq!(csv.lines().count(), 1 + 5);
        let v = krein_velocity(&w, VelocityRule::SegmentSlope);
        assert_eq!(v.len(), 3);
        assert!(velocity_csv(&v).starts_with("x_mid,c_estimate\n"));
    }
}
