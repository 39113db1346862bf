//! One-dimensional potentials `V(q)` with a mass, used both for EBK
//! quantization and as the components of separable flows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

/// Functional form of `V(q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialShape {
    /// `V = m w^2 q^2 / 2`
    Harmonic { omega: f64 },
    /// `V = d (1 - exp(-a q))^2`
    Morse { d: f64, a: f64 },
    /// `V = lambda q^4 / 4`
    Quartic {
        #[serde(default = "one")]
        lambda: f64,
    },
    /// `V = sum_k coeffs[k] q^k`
    Polynomial { coeffs: Vec<f64> },
}

/// A potential together with the particle mass and an optional search bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential1D {
    #[serde(flatten)]
    pub shape: PotentialShape,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
}

impl Potential1D {
    pub fn new(shape: PotentialShape, m: f64) -> Result<Self> {
        let p = Self { shape, m, bracket: None };
        p.validate()?;
        Ok(p)
    }

    pub fn harmonic(m: f64, omega: f64) -> Result<Self> {
        Self::new(PotentialShape::Harmonic { omega }, m)
    }

    pub fn morse(m: f64, d: f64, a: f64) -> Result<Self> {
        Self::new(PotentialShape::Morse { d, a }, m)
    }

    pub fn quartic(m: f64, lambda: f64) -> Result<Self> {
        Self::new(PotentialShape::Quartic { lambda }, m)
    }

    pub fn polynomial(m: f64, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(PotentialShape::Polynomial { coeffs }, m)
    }

    pub fn with_bracket(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.bracket = Some([lo, hi]);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.m > 0.0) || !self.m.is_finite() {
            return bad(format!("mass must be positive, got {}", self.m));
        }
        if let Some([lo, hi]) = self.bracket {
            if !(lo < hi) {
                return bad(format!("bracket [{lo}, {hi}] is empty"));
            }
        }
        match &self.shape {
            PotentialShape::Harmonic { omega } if !(*omega > 0.0 && omega.is_finite()) => {
                bad(format!("omega must be positive, got {omega}"))
            }
            PotentialShape::Morse { d, a } if !(*d > 0.0 && *a > 0.0 && d.is_finite() && a.is_finite()) => {
                bad(format!("Morse parameters must be positive, got d={d}, a={a}"))
            }
            PotentialShape::Quartic { lambda } if !(*lambda > 0.0 && lambda.is_finite()) => {
                bad(format!("quartic coefficient must be positive, got {lambda}"))
            }
            PotentialShape::Polynomial { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return bad("polynomial coefficients must be finite".into());
                }
                let deg = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
                let confining = deg >= 2 && deg % 2 == 0 && coeffs[deg] > 0.0;
                let bracketed = matches!(self.bracket, Some([lo, hi]) if lo.is_finite() && hi.is_finite());
                if !confining && !bracketed {
                    return bad("polynomial must have even degree and positive leading coefficient, or a finite bracket".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, q: f64) -> f64 {
        match &self.shape {
            PotentialShape::Harmonic { omega } => 0.5 * self.m * omega * omega * q * q,
            PotentialShape::Morse { d, a } => {
                let e = 1.0 - (-a * q).exp();
                d * e * e
            }
            PotentialShape::Quartic { lambda } => 0.25 * lambda * q.powi(4),
            PotentialShape::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * q + c),
        }
    }

    pub fn derivative(&self, q: f64) -> f64 {
        match &self.shape {
            PotentialShape::Harmonic { omega } => self.m * omega * omega * q,
            PotentialShape::Morse { d, a } => {
                let x = (-a * q).exp();
                2.0 * d * a * (1.0 - x) * x
            }
            PotentialShape::Quartic { lambda } => lambda * q.powi(3),
            PotentialShape::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * q + k as f64 * c),
        }
    }

    /// Half-width of a window around 0 that contains every critical point of `V`.
    ///
    /// Zero for the single-well shapes, whose only critical point is `q = 0`.
    pub fn critical_window(&self) -> f64 {
        match &self.shape {
            PotentialShape::Polynomial { coeffs } => {
                // Cauchy bound on the roots of V'
                let d: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
                let Some(lead) = d.iter().rposition(|&c| c != 0.0) else {
                    return 0.0;
                };
                1.0 + d[..lead].iter().map(|c| (c / d[lead]).abs()).fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }

    /// Location and value of the global minimum inside the bracket.
    pub fn minimum(&self) -> (f64, f64) {
        let (q, v) = match &self.shape {
            PotentialShape::Polynomial { .. } => {
                let w = self.critical_window() + 1.0;
                let (mut lo, mut hi) = (-w, w);
                if let Some([blo, bhi]) = self.bracket {
                    lo = lo.max(blo);
                    hi = hi.min(bhi);
                }
                let n = 4096;
                let step = (hi - lo) / n as f64;
                let (i_best, _) = (0..=n)
                    .map(|i| (i, self.value(lo + i as f64 * step)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("nonempty scan");
                let a = (lo + (i_best as f64 - 1.0) * step).max(lo);
                let b = (lo + (i_best as f64 + 1.0) * step).min(hi);
                let q = golden_section(|x| self.value(x), a, b);
                (q, self.value(q))
            }
            _ => (0.0, self.value(0.0)),
        };
        (q, v)
    }

    /// Small-oscillation frequency `sqrt(V''(q_min) / m)`, estimated by finite differences.
    pub fn curvature_frequency(&self) -> f64 {
        let (q, _) = self.minimum();
        let h = 1e-4 * q.abs().max(1.0);
        let k = (self.derivative(q + h) - self.derivative(q - h)) / (2.0 * h);
        (k.max(0.0) / self.m).sqrt()
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
