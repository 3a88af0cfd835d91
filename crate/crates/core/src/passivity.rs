//! Numerical passivity checks on pole-residue models: no poles in the
//! open right half plane, conjugate symmetry, and nonnegative real part
//! along the shifted imaginary axis. Discrete measures make Re f(iw)
//! singular on poles, hence the small epsilon shift.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rom::eval_pole_residue;
use crate::spectral::SpectralData;

#[derive(Debug, Clone, Serialize)]
pub struct PassivityReport {
    /// (i) every transfer-function pole s = -lambda_j satisfies Re s <= 0
    pub criterion1_ok: bool,
    /// (ii) f(conj s) = conj f(s) on the sampled grid
    pub criterion2_ok: bool,
    /// (iii) min over sampled omega of Re f(i*omega + epsilon)
    pub criterion3_min: f64,
    pub omega: Vec<f64>,
    pub epsilon: f64,
}

impl PassivityReport {
    pub fn all_pass(&self) -> bool {
        self.criterion1_ok && self.criterion2_ok && self.criterion3_min >= -1e-12
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn check_passive(
    data: &SpectralData,
    band: [f64; 2],
    count: usize,
    epsilon: f64,
) -> Result<PassivityReport> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if count < 2 || band[1] < band[0] {
        return Err(Error::InvalidInput("need a valid band and count >= 2".into()));
    }
    let criterion1_ok = data.poles.iter().all(|l| l.re >= 0.0);
    let mut omega = Vec::with_capacity(count);
    let mut criterion2_ok = true;
    let mut criterion3_min = f64::INFINITY;
    for i in 0..count {
        let w = band[0] + (band[1] - band[0]) * i as f64 / (count - 1) as f64;
        omega.push(w);
        let s = Complex64::new(epsilon, w);
        let f = eval_pole_residue(data, s)?;
        let fc = eval_pole_residue(data, s.conj())?;
        let scale = f.norm().max(1e-300);
        if (fc - f.conj()).norm() > 1e-12 * scale {
            criterion2_ok = false;
        }
        criterion3_min = criterion3_min.min(f.re);
    }
    Ok(PassivityReport {
        criterion1_ok,
        criterion2_ok,
        criterion3_min,
        omega,
        epsilon,
    })
}

/// Stieltjes-to-passive mapping h(s) = s * f(s^2).
pub fn stieltjes_to_passive<F>(f: F, s: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    Ok(s * f(s * s)?)
}
