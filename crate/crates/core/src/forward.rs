//! Fine-grid staggered finite-difference forward solver: impedance
//! evaluation f(s) for bounded (Dirichlet) and semi-infinite (Sommerfeld)
//! media, and exact truncated spectral data for the bounded lossless case.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigenvector_for, smallest_eigenvalues};
use crate::medium::{DomainKind, MediumProfile};
use crate::rom::solve_first_order;
use crate::spectral::SpectralData;

pub const DEFAULT_FINE_CELLS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    DirichletFar,
    Sommerfeld,
}

/// Uniform staggered grid on [0, L]: primary weights are the step sizes,
/// dual weights carry the cell mass c^-2. For the Sommerfeld closure the
/// last primary step is halved and an impedance term 2 c(L)/h is added on
/// the final dual unknown.
#[derive(Debug, Clone)]
pub struct FineGridSystem {
    pub n_cells: usize,
    pub length: f64,
    pub gamma: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    pub cell_speeds: Vec<f64>,
    pub boundary: Boundary,
    /// 2 c(L) / h, present only for the Sommerfeld closure.
    pub sommerfeld_term: f64,
}

/// Conjugate-closed impedance samples (s, f(s)).
#[derive(Debug, Clone, Default)]
pub struct ImpedanceSamples {
    pub entries: Vec<(Complex64, Complex64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourSpacing {
    Linear,
    Log,
}

impl ImpedanceSamples {
    /// Representatives with Im s >= 0 only.
    pub fn representatives(&self) -> Vec<(Complex64, Complex64)> {
        self.entries
            .iter()
            .copied()
            .filter(|(s, _)| s.im >= 0.0)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_s,im_s,re_f,im_f\n");
        for (s, f) in &self.entries {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e}\n",
                s.re, s.im, f.re, f.im
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 && line.starts_with("re_s") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad CSV line {}: {e}", i + 1)))?;
            if f.len() != 4 {
                return Err(Error::InvalidInput(format!(
                    "bad CSV line {}: expected 4 fields",
                    i + 1
                )));
            }
            entries.push((Complex64::new(f[0], f[1]), Complex64::new(f[2], f[3])));
        }
        Ok(Self { entries })
    }
}

/// Build the uniform staggered system with midpoint cell speeds.
pub fn discretize(profile: &MediumProfile, n_cells: usize) -> Result<FineGridSystem> {
    if n_cells < 16 {
        return Err(Error::InvalidInput("need at least 16 cells".into()));
    }
    let n = n_cells;
    let h = profile.length / n as f64;
    let mut cell_speeds = Vec::with_capacity(n);
    for k in 0..n {
        cell_speeds.push(profile.eval_speed((k as f64 + 0.5) * h)?);
    }
    let mass: Vec<f64> = cell_speeds.iter().map(|c| 1.0 / (c * c)).collect();
    let mut gamma = vec![h; n];
    // dual weight around primary node x_j: half cells on either side,
    // half cell only at the boundary node x_0
    let mut gamma_hat = Vec::with_capacity(n);
    gamma_hat.push(0.5 * h * mass[0]);
    for j in 1..n {
        gamma_hat.push(0.5 * h * (mass[j - 1] + mass[j]));
    }
    let (boundary, sommerfeld_term) = match profile.kind {
        DomainKind::Bounded => (Boundary::DirichletFar, 0.0),
        DomainKind::SemiInfinite => {
            let c_tail = profile.eval_speed(profile.length)?;
            gamma[n - 1] = 0.5 * h;
            (Boundary::Sommerfeld, 2.0 * c_tail / h)
        }
    };
    Ok(FineGridSystem {
        n_cells: n,
        length: profile.length,
        gamma,
        gamma_hat,
        cell_speeds,
        boundary,
        sommerfeld_term,
    })
}

impl FineGridSystem {
    /// f(s) = u(0, s) from one tridiagonal solve of the 2N first-order system.
    pub fn impedance(&self, s: Complex64) -> Result<Complex64> {
        let n = self.n_cells;
        let gamma: Vec<Complex64> = self.gamma.iter().map(|&g| g.into()).collect();
        let gamma_hat: Vec<Complex64> = self.gamma_hat.iter().map(|&g| g.into()).collect();
        let diag = if self.boundary == Boundary::Sommerfeld {
            let mut d = vec![Complex64::default(); 2 * n];
            d[2 * n - 1] = self.sommerfeld_term.into();
            Some(d)
        } else {
            None
        };
        let u = solve_first_order(&gamma, &gamma_hat, diag.as_deref(), s)?;
        Ok(u[0])
    }

    /// Samples f on s = shift + i omega over the band, plus conjugates.
    pub fn sample_contour(
        &self,
        band: [f64; 2],
        count: usize,
        shift: f64,
        spacing: ContourSpacing,
    ) -> Result<ImpedanceSamples> {
        let [w0, w1] = band;
        if !(0.0 < w0 && w0 <= w1) || shift < 0.0 {
            return Err(Error::InvalidInput("invalid band or negative shift".into()));
        }
        let mut entries = Vec::with_capacity(2 * count);
        for i in 0..count {
            let t = if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            };
            let w = match spacing {
                ContourSpacing::Linear => w0 + t * (w1 - w0),
                ContourSpacing::Log => w0 * (w1 / w0).powf(t),
            };
            let s = Complex64::new(shift, w);
            let f = self.impedance(s)?;
            entries.push((s, f));
            entries.push((s.conj(), f.conj()));
        }
        Ok(ImpedanceSamples { entries })
    }

    /// Eigenpairs of the second-order form: stiffness from the primary
    /// weights, diagonal mass from the dual weights. Returns the `k`
    /// smallest (mu, first-component^2 with mass normalization).
    fn modal_data(&self, k: usize) -> Result<Vec<(f64, f64)>> {
        if self.boundary != Boundary::DirichletFar {
            return Err(Error::InvalidInput(
                "exact spectrum requires a bounded lossless system".into(),
            ));
        }
        let n = self.n_cells;
        // unknowns u_0..u_{n-1}; u_n = 0 eliminated. Primary weight
        // gamma[j] spans (x_j, x_{j+1}), so u_j couples to u_{j+1}
        // through 1/gamma[j] and to u_{j-1} through 1/gamma[j-1].
        let mut a_diag = vec![0.0; n];
        let mut a_off = vec![0.0; n - 1];
        for j in 0..n {
            let left = if j > 0 { 1.0 / self.gamma[j - 1] } else { 0.0 };
            a_diag[j] = left + 1.0 / self.gamma[j];
        }
        for j in 0..n - 1 {
            a_off[j] = -1.0 / self.gamma[j];
        }
        let b: Vec<f64> = self.gamma_hat.clone();
        // symmetrized J = B^-1/2 A B^-1/2
        let sqrt_b: Vec<f64> = b.iter().map(|v| v.sqrt()).collect();
        let j_diag: Vec<f64> = a_diag.iter().zip(&b).map(|(a, m)| a / m).collect();
        let j_off: Vec<f64> = (0..n - 1)
            .map(|j| a_off[j] / (sqrt_b[j] * sqrt_b[j + 1]))
            .collect();
        let mus = smallest_eigenvalues(&j_diag, &j_off, k);
        let mut out = Vec::with_capacity(k);
        for (idx, &mu) in mus.iter().enumerate() {
            if idx > 0 && (mu - mus[idx - 1]).abs() <= 1e-10 * mu.abs().max(1.0) {
                return Err(Error::Eigen(format!(
                    "non-simple eigenvalue near mu = {mu}"
                )));
            }
            let psi = eigenvector_for(&j_diag, &j_off, mu)?;
            // phi = B^-1/2 psi has phi^T B phi = 1
            let phi0 = psi[0] / sqrt_b[0];
            out.push((mu, phi0 * phi0));
        }
        Ok(out)
    }
}

/// Exact truncated spectral data of the bounded lossless fine-grid system:
/// the n smallest conjugate pole pairs lambda_k = i sqrt(mu_k) with real
/// positive residues. One h^2 Richardson step (grids N/2 and N) removes the
/// leading discretization error of the eigenpairs.
pub fn exact_spectrum(
    profile: &MediumProfile,
    n_cells: usize,
    n_pairs: usize,
) -> Result<SpectralData> {
    if profile.kind != DomainKind::Bounded {
        return Err(Error::InvalidInput(
            "exact spectrum requires a bounded lossless medium".into(),
        ));
    }
    if n_pairs == 0 || 2 * n_pairs > n_cells {
        return Err(Error::InvalidInput(
            "need n >= 1 pole pairs and at least 2n cells".into(),
        ));
    }
    let fine = discretize(profile, n_cells)?;
    let coarse = discretize(profile, n_cells / 2)?;
    let fine_modes = fine.modal_data(n_pairs)?;
    let coarse_modes = coarse.modal_data(n_pairs)?;
    let mut poles = Vec::with_capacity(n_pairs);
    let mut residues = Vec::with_capacity(n_pairs);
    for k in 0..n_pairs {
        let mu = (4.0 * fine_modes[k].0 - coarse_modes[k].0) / 3.0;
        let phi0_sq = (4.0 * fine_modes[k].1 - coarse_modes[k].1) / 3.0;
        poles.push(Complex64::new(0.0, mu.sqrt()));
        residues.push(Complex64::new(0.5 * phi0_sq, 0.0));
    }
    SpectralData::new(poles, residues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_grid_steps() {
        let p = MediumProfile::constant(1.0, 1.0);
        let sys = discretize(&p, 16).unwrap();
        assert!(sys.gamma.iter().all(|&g| (g - 1.0 / 16.0).abs() < 1e-15));
        assert_relative_eq!(sys.gamma.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn midpoint_cell_speeds() {
        let p = MediumProfile::smooth_bump();
        let sys = discretize(&p, 100).unwrap();
        let h = p.length / 100.0;
        for k in [0, 37, 99] {
            let expect = p.eval_speed((k as f64 + 0.5) * h).unwrap();
            assert_relative_eq!(sys.cell_speeds[k], expect);
        }
        assert_eq!(sys.boundary, Boundary::DirichletFar);
    }

    #[test]
    fn semi_infinite_gets_sommerfeld() {
        let p = MediumProfile::bump_plus_reflector();
        let sys = discretize(&p, 64).unwrap();
        assert_eq!(sys.boundary, Boundary::Sommerfeld);
        assert!(sys.sommerfeld_term > 0.0);
    }

    #[test]
    fn impedance_converges_to_tanh() {
        // c = 1, L = 1: f(s) = tanh(s); check second-order convergence at s=1
        let p = MediumProfile::constant(1.0, 1.0);
        let exact = 1.0f64.tanh();
        let mut errs = Vec::new();
        for n in [500usize, 1000, 2000] {
            let sys = discretize(&p, n).unwrap();
            let f = sys.impedance(Complex64::new(1.0, 0.0)).unwrap();
            errs.push((f.re - exact).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9, "observed order {order}");
        }
    }

    #[test]
    fn homogeneous_open_impedance_is_tail_speed() {
        let p = MediumProfile {
            kind: DomainKind::SemiInfinite,
            ..MediumProfile::constant(1.0, 1.0)
        };
        let sys = discretize(&p, 4000).unwrap();
        let f = sys.impedance(Complex64::new(1.0, 0.3)).unwrap();
        assert_relative_eq!(f.re, 1.0, max_relative = 1e-5);
        assert!(f.im.abs() < 1e-5);
    }

    #[test]
    fn conjugate_outputs() {
        let p = MediumProfile::smooth_bump();
        let sys = discretize(&p, 200).unwrap();
        let s = Complex64::new(0.7, 1.9);
        let f = sys.impedance(s).unwrap();
        let fc = sys.impedance(s.conj()).unwrap();
        assert_relative_eq!(f.re, fc.re, epsilon = 1e-14);
        assert_relative_eq!(f.im, -fc.im, epsilon = 1e-14);
    }

    #[test]
    fn exact_spectrum_matches_analytic_ladder() {
        let p = MediumProfile::constant(1.0, 1.0);
        let data = exact_spectrum(&p, 4000, 3).unwrap();
        for (k, (l, y)) in data.poles.iter().zip(&data.residues).enumerate() {
            let expect = (k as f64 + 0.5) * std::f64::consts::PI;
            assert_relative_eq!(l.im, expect, max_relative = 1e-8);
            assert!(l.re.abs() < 1e-12);
            assert_relative_eq!(y.re, 1.0, max_relative = 1e-8);
            assert!(y.im.abs() < 1e-12);
        }
    }

    #[test]
    fn exact_spectrum_l_two() {
        let p = MediumProfile::constant(1.0, 2.0);
        let data = exact_spectrum(&p, 2000, 1).unwrap();
        assert_relative_eq!(
            data.poles[0].im,
            std::f64::consts::PI / 4.0,
            max_relative = 1e-8
        );
        assert_relative_eq!(data.residues[0].re, 0.5, max_relative = 1e-8);
    }

    #[test]
    fn spectral_sum_approaches_impedance() {
        // agreement at fixed s improves monotonically with n
        let p = MediumProfile::smooth_bump();
        let sys = discretize(&p, 2000).unwrap();
        let s = Complex64::new(0.1, 0.1);
        let f_ref = sys.impedance(s).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2usize, 4, 8, 16] {
            let data = exact_spectrum(&p, 2000, n).unwrap();
            let f = crate::rom::eval_pole_residue(&data, s).unwrap();
            let err = (f - f_ref).norm();
            assert!(err < prev, "n={n}: err {err} vs prev {prev}");
            prev = err;
        }
    }

    #[test]
    fn dc_limit_is_domain_length() {
        // f(s)/s -> L as s -> 0 for the bounded problem
        let p = MediumProfile::constant(1.0, 2.0);
        let sys = discretize(&p, 1000).unwrap();
        for s0 in [1e-4, 1e-5] {
            let f = sys.impedance(Complex64::new(s0, 0.0)).unwrap();
            assert_relative_eq!(f.re / s0, 2.0, max_relative = 1e-3);
        }
    }

    #[test]
    fn contour_conjugate_closure() {
        let p = MediumProfile::constant(1.0, 1.0);
        let sys = discretize(&p, 100).unwrap();
        let samples = sys
            .sample_contour([1.0, 10.0], 5, 0.1, ContourSpacing::Linear)
            .unwrap();
        assert_eq!(samples.entries.len(), 10);
        for pair in samples.entries.chunks(2) {
            assert_eq!(pair[0].0.conj(), pair[1].0);
            assert_eq!(pair[0].1.conj(), pair[1].1);
        }
    }

    #[test]
    fn open_homogeneous_contour_is_flat() {
        let p = MediumProfile {
            kind: DomainKind::SemiInfinite,
            ..MediumProfile::constant(1.0, 1.0)
        };
        let sys = discretize(&p, 4000).unwrap();
        let samples = sys
            .sample_contour([0.5, 5.0], 7, 0.0, ContourSpacing::Linear)
            .unwrap();
        for (_, f) in samples.entries {
            assert_relative_eq!(f.re, 1.0, max_relative = 1e-4);
            assert!(f.im.abs() < 1e-4);
        }
    }
}
