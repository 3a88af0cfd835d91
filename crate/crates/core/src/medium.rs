//! Wave-speed profiles and the derived functionals (mass function, slowness
//! coordinate, average slowness) that serve as ground truth for the
//! embedding procedures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_QUAD_PANELS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// Dirichlet condition at x = L.
    Bounded,
    /// Constant speed c(L) for all x > L, radiation condition at infinity.
    SemiInfinite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Speed {
    Table { x: Vec<f64>, c: Vec<f64> },
    Constant { c: f64 },
    /// c0 + amp * exp(-((x-center)/width)^2)
    SmoothBump {
        c0: f64,
        amp: f64,
        center: f64,
        width: f64,
    },
    /// c0 + jump * (1 + tanh((x-x0)/width)) / 2
    SmoothedStep {
        c0: f64,
        jump: f64,
        x0: f64,
        width: f64,
    },
    /// Smooth bump followed by a sharp reflector ramp; meant for the
    /// semi-infinite kind with a constant tail beyond the reflector.
    BumpPlusReflector {
        c0: f64,
        amp: f64,
        bump_center: f64,
        bump_width: f64,
        jump: f64,
        reflector: f64,
        reflector_width: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MediumProfile {
    pub kind: DomainKind,
    #[serde(rename = "L")]
    pub length: f64,
    pub speed: Speed,
    #[serde(default = "default_panels")]
    pub quad_panels: usize,
}

fn default_panels() -> usize {
    DEFAULT_QUAD_PANELS
}

/// Dense samples of the truth functionals used as oracles by the embeddings.
#[derive(Debug, Clone)]
pub struct TruthCurves {
    pub x: Vec<f64>,
    /// M(x) = int_0^x c^-2
    pub mass: Vec<f64>,
    /// T(x) = int_0^x c^-1
    pub slowness: Vec<f64>,
    /// (1/L) T(L)
    pub average_slowness: f64,
}

impl MediumProfile {
    pub fn constant(c: f64, length: f64) -> Self {
        Self {
            kind: DomainKind::Bounded,
            length,
            speed: Speed::Constant { c },
            quad_panels: DEFAULT_QUAD_PANELS,
        }
    }

    /// Smooth bump on [0, 2]: c = 1 + 0.25 exp(-((x-1)/0.5)^2).
    pub fn smooth_bump() -> Self {
        Self {
            kind: DomainKind::Bounded,
            length: 2.0,
            speed: Speed::SmoothBump {
                c0: 1.0,
                amp: 0.25,
                center: 1.0,
                width: 0.5,
            },
            quad_panels: DEFAULT_QUAD_PANELS,
        }
    }

    /// Smoothed step on [0, 2]: ramp from 1 to 1.5 at mid-domain, ramp
    /// width 2% of L.
    pub fn smoothed_step() -> Self {
        Self {
            kind: DomainKind::Bounded,
            length: 2.0,
            speed: Speed::SmoothedStep {
                c0: 1.0,
                jump: 0.5,
                x0: 1.0,
                width: 0.04,
            },
            quad_panels: DEFAULT_QUAD_PANELS,
        }
    }

    /// Semi-infinite medium: smooth bump followed by a sharp reflector,
    /// constant tail beyond x = L.
    pub fn bump_plus_reflector() -> Self {
        Self {
            kind: DomainKind::SemiInfinite,
            length: 2.0,
            speed: Speed::BumpPlusReflector {
                c0: 1.0,
                amp: 0.3,
                bump_center: 0.8,
                bump_width: 0.25,
                jump: 1.0,
                reflector: 1.7,
                reflector_width: 0.02,
            },
            quad_panels: DEFAULT_QUAD_PANELS,
        }
    }

    pub fn from_table(kind: DomainKind, x: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if x.len() != c.len() || x.len() < 2 {
            return Err(Error::InvalidInput(
                "speed table needs matching x/c arrays with at least two samples".into(),
            ));
        }
        if x[0] != 0.0 {
            return Err(Error::InvalidInput("speed table must start at x = 0".into()));
        }
        if !x.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput(
                "speed table abscissae must be strictly increasing".into(),
            ));
        }
        if !c.iter().all(|&v| v > 0.0) {
            return Err(Error::InvalidInput("speeds must be positive".into()));
        }
        let length = *x.last().unwrap();
        Ok(Self {
            kind,
            length,
            speed: Speed::Table { x, c },
            quad_panels: DEFAULT_QUAD_PANELS,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let profile: MediumProfile = serde_json::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::InvalidInput("L must be positive".into()));
        }
        if let Speed::Table { x, c } = &self.speed {
            Self::from_table(self.kind, x.clone(), c.clone())?;
            if (x.last().unwrap() - self.length).abs() > 1e-12 * self.length {
                return Err(Error::InvalidInput("table must end at x = L".into()));
            }
        }
        Ok(())
    }

    /// Known preset names used by the CLI.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "constant" => Ok(Self::constant(1.0, 2.0)),
            "smooth-bump" => Ok(Self::smooth_bump()),
            "smoothed-step" => Ok(Self::smoothed_step()),
            "bump-plus-reflector" => Ok(Self::bump_plus_reflector()),
            other => Err(Error::InvalidInput(format!("unknown preset `{other}`"))),
        }
    }

    /// Pointwise wave speed. Constant tail beyond L for the semi-infinite
    /// kind; out-of-domain error for the bounded kind.
    pub fn eval_speed(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::OutOfDomain {
                x,
                length: self.length,
            });
        }
        let x = match self.kind {
            DomainKind::Bounded => {
                if x > self.length * (1.0 + 1e-12) {
                    return Err(Error::OutOfDomain {
                        x,
                        length: self.length,
                    });
                }
                x.min(self.length)
            }
            DomainKind::SemiInfinite => x.min(self.length),
        };
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        match &self.speed {
            Speed::Constant { c } => *c,
            Speed::Table { x: xs, c: cs } => {
                // linear interpolation, x clamped to [0, L] by the caller
                let idx = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                    Ok(i) => return cs[i],
                    Err(i) => i,
                };
                let (i0, i1) = (idx - 1, idx);
                let t = (x - xs[i0]) / (xs[i1] - xs[i0]);
                cs[i0] + t * (cs[i1] - cs[i0])
            }
            Speed::SmoothBump {
                c0,
                amp,
                center,
                width,
            } => c0 + amp * (-((x - center) / width).powi(2)).exp(),
            Speed::SmoothedStep { c0, jump, x0, width } => {
                c0 + jump * 0.5 * (1.0 + ((x - x0) / width).tanh())
            }
            Speed::BumpPlusReflector {
                c0,
                amp,
                bump_center,
                bump_width,
                jump,
                reflector,
                reflector_width,
            } => {
                c0 + amp * (-((x - bump_center) / bump_width).powi(2)).exp()
                    + jump * 0.5 * (1.0 + ((x - reflector) / reflector_width).tanh())
            }
        }
    }

    /// Interior breakpoints at which the integrand may lose smoothness.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.speed {
            Speed::Table { x, .. } => x[1..x.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    /// Composite Simpson of g(c(xi)) over [0, x], panels aligned with table
    /// breakpoints so piecewise-constant media integrate exactly.
    fn integrate<F: Fn(f64) -> f64>(&self, g: F, x: f64) -> Result<f64> {
        if x < 0.0 || (self.kind == DomainKind::Bounded && x > self.length * (1.0 + 1e-12)) {
            return Err(Error::OutOfDomain {
                x,
                length: self.length,
            });
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let mut cuts = vec![0.0];
        for b in self.breakpoints() {
            if b < x {
                cuts.push(b);
            }
        }
        cuts.push(x);
        let density = self.quad_panels as f64 / self.length;
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut panels = ((b - a) * density).ceil() as usize;
            panels = panels.max(8);
            if panels % 2 == 1 {
                panels += 1;
            }
            let h = (b - a) / panels as f64;
            let mut acc = g(self.eval_unchecked(a)) + g(self.eval_unchecked(b));
            for i in 1..panels {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * g(self.eval_unchecked(a + i as f64 * h));
            }
            total += acc * h / 3.0;
        }
        Ok(total)
    }

    /// M(x) = int_0^x c^-2.
    pub fn mass_function(&self, x: f64) -> Result<f64> {
        self.integrate(|c| 1.0 / (c * c), x)
    }

    /// T(x) = int_0^x c^-1, the slowness (travel time) coordinate.
    pub fn travel_time(&self, x: f64) -> Result<f64> {
        self.integrate(|c| 1.0 / c, x)
    }

    /// x such that T(x) = t, by bisection on the monotone travel time.
    pub fn inverse_travel_time(&self, t: f64) -> Result<f64> {
        let t_max = self.travel_time(self.length)?;
        if t < 0.0 || t > t_max * (1.0 + 1e-12) {
            return Err(Error::OutOfRange {
                value: t,
                lo: 0.0,
                hi: t_max,
            });
        }
        let (mut a, mut b) = (0.0, self.length);
        let tol = 1e-12 * self.length;
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if self.travel_time(mid)? < t {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// (1/L) int_0^L c^-1.
    pub fn average_slowness(&self) -> Result<f64> {
        Ok(self.travel_time(self.length)? / self.length)
    }

    /// Dense truth curves on a uniform grid of `samples + 1` points.
    pub fn truth_curves(&self, samples: usize) -> Result<TruthCurves> {
        let h = self.length / samples as f64;
        let mut x = Vec::with_capacity(samples + 1);
        let mut mass = Vec::with_capacity(samples + 1);
        let mut slowness = Vec::with_capacity(samples + 1);
        // cumulative Simpson per step keeps the cost linear
        let (mut m_acc, mut t_acc) = (0.0, 0.0);
        x.push(0.0);
        mass.push(0.0);
        slowness.push(0.0);
        for i in 0..samples {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let mid = 0.5 * (a + b);
            let (ca, cm, cb) = (
                self.eval_unchecked(a),
                self.eval_unchecked(mid),
                self.eval_unchecked(b),
            );
            m_acc += h / 6.0 * (1.0 / (ca * ca) + 4.0 / (cm * cm) + 1.0 / (cb * cb));
            t_acc += h / 6.0 * (1.0 / ca + 4.0 / cm + 1.0 / cb);
            x.push(b);
            mass.push(m_acc);
            slowness.push(t_acc);
        }
        Ok(TruthCurves {
            x,
            mass,
            slowness,
            average_slowness: t_acc / self.length,
        })
    }

    /// Position of the last point where the speed still varies, estimated
    /// from the dense truth grid. For bounded media this is simply L.
    pub fn variation_end(&self) -> f64 {
        match self.kind {
            DomainKind::Bounded => self.length,
            DomainKind::SemiInfinite => {
                let tail = self.eval_unchecked(self.length);
                let m = 4000;
                let h = self.length / m as f64;
                for i in (0..=m).rev() {
                    let x = i as f64 * h;
                    if (self.eval_unchecked(x) - tail).abs() > 1e-3 * tail {
                        return (x + h).min(self.length);
                    }
                }
                0.0
            }
        }
    }
}
