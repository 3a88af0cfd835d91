//! Pole-residue spectral data: the measurement-side representation of the
//! impedance function. Only one representative per conjugate pair is stored.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Representatives lambda_j; the conjugates are implicit.
    pub poles: Vec<Complex64>,
    /// Residues y_j paired with the poles.
    pub residues: Vec<Complex64>,
}

impl SpectralData {
    pub fn new(poles: Vec<Complex64>, residues: Vec<Complex64>) -> Result<Self> {
        if poles.len() != residues.len() || poles.is_empty() {
            return Err(Error::InvalidInput(
                "poles and residues must be non-empty and of equal length".into(),
            ));
        }
        let mut data = Self { poles, residues };
        data.sort_canonical();
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.poles.len()
    }

    /// Canonical order: |Im lambda| ascending, ties by Re lambda. Keeps the
    /// Lanczos input deterministic.
    pub fn sort_canonical(&mut self) {
        let mut idx: Vec<usize> = (0..self.poles.len()).collect();
        idx.sort_by(|&a, &b| {
            let ka = (self.poles[a].im.abs(), self.poles[a].re);
            let kb = (self.poles[b].im.abs(), self.poles[b].re);
            ka.partial_cmp(&kb).unwrap()
        });
        self.poles = idx.iter().map(|&i| self.poles[i]).collect();
        self.residues = idx.iter().map(|&i| self.residues[i]).collect();
    }

    /// Purely imaginary poles and real positive residues, within `tol`
    /// relative to the data scale.
    pub fn is_lossless(&self, tol: f64) -> bool {
        let scale = self.pole_scale();
        let yscale = self
            .residues
            .iter()
            .map(|y| y.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        self.poles.iter().all(|l| l.re.abs() <= tol * scale)
            && self
                .residues
                .iter()
                .all(|y| y.im.abs() <= tol * yscale && y.re > 0.0)
    }

    /// Re lambda >= 0 and Re y >= 0 (the passive flavor produced for open
    /// domains), within `tol` relative slack.
    pub fn is_passive(&self, tol: f64) -> bool {
        let scale = self.pole_scale();
        let yscale = self
            .residues
            .iter()
            .map(|y| y.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        self.poles.iter().all(|l| l.re >= -tol * scale)
            && self.residues.iter().all(|y| y.re >= -tol * yscale)
    }

    pub fn pole_scale(&self) -> f64 {
        self.poles
            .iter()
            .map(|l| l.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300)
    }

    /// CSV with header `re_lambda,im_lambda,re_y,im_y` (representatives only).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_lambda,im_lambda,re_y,im_y\n");
        for (l, y) in self.poles.iter().zip(&self.residues) {
            out.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", l.re, l.im, y.re, y.im));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut poles = Vec::new();
        let mut residues = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 && line.starts_with("re_lambda") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad CSV line {}: {e}", i + 1)))?;
            if fields.len() != 4 {
                return Err(Error::InvalidInput(format!(
                    "bad CSV line {}: expected 4 fields",
                    i + 1
                )));
            }
            poles.push(Complex64::new(fields[0], fields[1]));
            residues.push(Complex64::new(fields[2], fields[3]));
        }
        Self::new(poles, residues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_is_by_imag_magnitude() {
        let d = SpectralData::new(
            vec![Complex64::new(0.0, 3.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(d.poles[0].im, 1.0);
        assert_eq!(d.residues[0].re, 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let d = SpectralData::new(
            vec![Complex64::new(0.1, 1.5), Complex64::new(0.0, 2.5)],
            vec![Complex64::new(1.0, -0.25), Complex64::new(0.5, 0.0)],
        )
        .unwrap();
        let back = SpectralData::from_csv(&d.to_csv()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn lossless_and_passive_flags() {
        let lossless = SpectralData::new(
            vec![Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.5, 0.0)],
        )
        .unwrap();
        assert!(lossless.is_lossless(1e-10));
        assert!(lossless.is_passive(1e-10));

        let active = SpectralData::new(
            vec![Complex64::new(-0.1, 1.0)],
            vec![Complex64::new(0.5, 0.0)],
        )
        .unwrap();
        assert!(!active.is_lossless(1e-10));
        assert!(!active.is_passive(1e-10));
    }
}
