use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Roots closer to the unit circle than this are pulled inward after reflection.
const MAX_ROOT_RADIUS: f64 = 1.0 - 1e-7;

/// Polynomial in the backward shift `q^-1`, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
    /// Leading coefficient fixed to one (denominators and the noise numerator).
    pub monic: bool,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("empty polynomial".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite polynomial coefficient".into()));
        }
        Ok(Polynomial {
            coeffs,
            monic: false,
        })
    }

    /// `1 + tail[0] q^-1 + tail[1] q^-2 + ...`
    pub fn monic(tail: &[f64]) -> Self {
        let mut coeffs = Vec::with_capacity(tail.len() + 1);
        coeffs.push(1.0);
        coeffs.extend_from_slice(tail);
        Polynomial {
            coeffs,
            monic: true,
        }
    }

    pub fn one() -> Self {
        Self::monic(&[])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients after the leading one of a monic polynomial.
    pub fn tail(&self) -> &[f64] {
        &self.coeffs[1..]
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(Error::InvalidParameter("empty polynomial".into()));
        }
        if self.monic && self.coeffs[0] != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "monic polynomial has leading coefficient {}",
                self.coeffs[0]
            )));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite polynomial coefficient".into()));
        }
        Ok(())
    }

    /// Value at `q^-1 = zinv`.
    pub fn eval(&self, zinv: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * zinv + c)
    }

    /// Roots in the z-plane, i.e. the zeros of `c0 z^n + c1 z^(n-1) + ... + cn`.
    pub fn roots(&self) -> Vec<Complex64> {
        let mut c = self.coeffs.clone();
        let mut zeros_at_origin = 0;
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
            zeros_at_origin += 1;
        }
        let n = c.len() - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
        match n {
            0 => {}
            1 => out.push(Complex64::new(-c[1] / c[0], 0.0)),
            _ => {
                let mut m = DMatrix::<f64>::zeros(n, n);
                for j in 0..n {
                    m[(0, j)] = -c[j + 1] / c[0];
                }
                for i in 1..n {
                    m[(i, i - 1)] = 1.0;
                }
                out.extend(m.complex_eigenvalues().iter().copied());
            }
        }
        out
    }

    pub fn max_root_radius(&self) -> f64 {
        self.roots().iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// All roots strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        if self.degree() == 0 {
            return true;
        }
        if self.degree() <= 2 {
            // Jury test, exact for quadratics
            let c0 = self.coeffs[0];
            let a1 = self.coeffs[1] / c0;
            let a2 = self.coeffs.get(2).copied().unwrap_or(0.0) / c0;
            return a2.abs() < 1.0 && a1.abs() < 1.0 + a2;
        }
        self.max_root_radius() < 1.0
    }

    /// Reflects roots outside the unit circle to `1 / conj(p)`; the magnitude
    /// response on the unit circle changes only by a constant factor.
    pub fn stabilized(&self) -> Polynomial {
        if self.is_stable() {
            return self.clone();
        }
        let roots: Vec<Complex64> = self
            .roots()
            .into_iter()
            .map(|p| {
                let r = p.norm();
                if r < 1.0 {
                    return p;
                }
                let mut q = p / (r * r);
                if q.norm() > MAX_ROOT_RADIUS {
                    q *= MAX_ROOT_RADIUS / q.norm();
                }
                q
            })
            .collect();
        let mut coeffs = from_roots(&roots, self.degree() + 1);
        for c in coeffs.iter_mut() {
            *c *= self.coeffs[0];
        }
        if self.monic {
            coeffs[0] = 1.0;
        }
        Polynomial {
            coeffs,
            monic: self.monic,
        }
    }
}

/// Coefficients (ascending in `q^-1`) of `prod (1 - r q^-1)`, padded to `len`.
fn from_roots(roots: &[Complex64], len: usize) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &a) in acc.iter().enumerate() {
            next[i] += a;
            next[i + 1] -= a * r;
        }
        acc = next;
    }
    let mut out: Vec<f64> = acc.iter().map(|c| c.re).collect();
    out.resize(len, 0.0);
    out
}

pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
