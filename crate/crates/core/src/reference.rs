//! Analytic reference fields used to manufacture boundary data and to
//! measure solver accuracy.

use crate::specfun;
use crate::{Cplx, Error, Result};
use nalgebra::{Vector2, Vector3};

/// Closed-form 2D fields.
///
/// * `PlaneWave`: exp(i k . x), a smooth interior Helmholtz solution.
/// * `Harmonic`: sin(x) sinh(y) + cos(x) cosh(y), an entire harmonic
///   function for Laplace problems.
/// * `RadiatingMonopole`: H0^(1)(k |x|), an outgoing Helmholtz solution
///   with its singularity at the origin, valid outside any curve enclosing
///   the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference2d {
    PlaneWave { k1: f64, k2: f64 },
    Harmonic,
    RadiatingMonopole { k: f64 },
}

/// Propagation angle of the default interior plane wave.
pub const PLANE_WAVE_ANGLE: f64 = std::f64::consts::PI / 7.0;

impl Reference2d {
    /// Plane wave of wavenumber k traveling at `PLANE_WAVE_ANGLE`.
    pub fn plane_wave(k: f64) -> Result<Self> {
        if k <= 0.0 {
            return Err(Error::NonPositiveArgument("plane wave wavenumber"));
        }
        Ok(Reference2d::PlaneWave {
            k1: k * PLANE_WAVE_ANGLE.cos(),
            k2: k * PLANE_WAVE_ANGLE.sin(),
        })
    }

    /// Outgoing monopole of wavenumber k centered at the origin.
    pub fn radiating_monopole(k: f64) -> Result<Self> {
        if k <= 0.0 {
            return Err(Error::NonPositiveArgument("monopole wavenumber"));
        }
        Ok(Reference2d::RadiatingMonopole { k })
    }

    pub fn value(&self, x: &Vector2<f64>) -> Result<Cplx> {
        match *self {
            Reference2d::PlaneWave { k1, k2 } => {
                Ok((Cplx::I * (k1 * x[0] + k2 * x[1])).exp())
            }
            Reference2d::Harmonic => Ok(Cplx::new(
                x[0].sin() * x[1].sinh() + x[0].cos() * x[1].cosh(),
                0.0,
            )),
            Reference2d::RadiatingMonopole { k } => {
                let r = x.norm();
                if r < 1e-14 {
                    return Err(Error::CoincidentPoints);
                }
                specfun::hankel1(0, k * r)
            }
        }
    }

    pub fn gradient(&self, x: &Vector2<f64>) -> Result<[Cplx; 2]> {
        match *self {
            Reference2d::PlaneWave { k1, k2 } => {
                let u = self.value(x)?;
                Ok([Cplx::I * k1 * u, Cplx::I * k2 * u])
            }
            Reference2d::Harmonic => Ok([
                Cplx::new(x[0].cos() * x[1].sinh() - x[0].sin() * x[1].cosh(), 0.0),
                Cplx::new(x[0].sin() * x[1].cosh() + x[0].cos() * x[1].sinh(), 0.0),
            ]),
            Reference2d::RadiatingMonopole { k } => {
                let r = x.norm();
                if r < 1e-14 {
                    return Err(Error::CoincidentPoints);
                }
                // d/dr H0(k r) = -k H1(k r)
                let scale = -k * specfun::hankel1(1, k * r)? / r;
                Ok([scale * x[0], scale * x[1]])
            }
        }
    }

    pub fn normal_derivative(&self, x: &Vector2<f64>, n: &Vector2<f64>) -> Result<Cplx> {
        let g = self.gradient(x)?;
        Ok(g[0] * n[0] + g[1] * n[1])
    }

    /// Wavenumber of the field (None for Laplace references).
    pub fn wavenumber(&self) -> Option<f64> {
        match *self {
            Reference2d::PlaneWave { k1, k2 } => Some(k1.hypot(k2)),
            Reference2d::Harmonic => None,
            Reference2d::RadiatingMonopole { k } => Some(k),
        }
    }
}

/// Exact solution of plane-wave scattering by a sound-hard sphere.
///
/// The incident wave exp(i k z) hits the sphere |x| = radius; the scattered
/// field is the partial-wave series
///
///   sum_n -i^n (2n+1) [j_n'(k a) / h_n'(k a)] P_n(cos theta) h_n(k r)
///
/// truncated once the terms are negligible; the total field satisfies
/// d(total)/dr = 0 on the sphere.
#[derive(Debug, Clone)]
pub struct MieSphere {
    pub k: f64,
    pub radius: f64,
    /// Partial-wave coefficients -i^n (2n+1) j_n'(ka) / h_n'(ka).
    coeffs: Vec<Cplx>,
}

/// Hard cap on retained partial waves.
const MIE_MAX_TERMS: usize = 80;

impl MieSphere {
    pub fn new(k: f64, radius: f64) -> Result<Self> {
        if k <= 0.0 {
            return Err(Error::NonPositiveArgument("wavenumber"));
        }
        if radius <= 0.0 {
            return Err(Error::NonPositiveArgument("sphere radius"));
        }
        let ka = k * radius;
        let n_max = ((ka.ceil() as usize) + 20).min(MIE_MAX_TERMS);
        let j = specfun::spherical_jn_all(n_max + 1, ka)?;
        let y = specfun::spherical_yn_all(n_max + 1, ka)?;
        let mut coeffs = Vec::with_capacity(n_max + 1);
        let mut i_pow = Cplx::new(1.0, 0.0);
        for n in 0..=n_max {
            let (jd, yd) = if n == 0 {
                (-j[1], -y[1])
            } else {
                let f = (n + 1) as f64 / ka;
                (j[n - 1] - f * j[n], y[n - 1] - f * y[n])
            };
            let hd = Cplx::new(jd, yd);
            coeffs.push(-i_pow * (2.0 * n as f64 + 1.0) * jd / hd);
            i_pow *= Cplx::I;
        }
        Ok(MieSphere { k, radius, coeffs })
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    fn polar(&self, x: &Vector3<f64>) -> Result<(f64, f64)> {
        let r = x.norm();
        if r < 1e-14 {
            return Err(Error::CoincidentPoints);
        }
        Ok((r, (x[2] / r).clamp(-1.0, 1.0)))
    }

    pub fn incident(&self, x: &Vector3<f64>) -> Cplx {
        (Cplx::I * self.k * x[2]).exp()
    }

    pub fn scattered(&self, x: &Vector3<f64>) -> Result<Cplx> {
        let (r, mu) = self.polar(x)?;
        let n_max = self.coeffs.len() - 1;
        let j = specfun::spherical_jn_all(n_max, self.k * r)?;
        let y = specfun::spherical_yn_all(n_max, self.k * r)?;
        let p = specfun::legendre_p_all(n_max, mu)?;
        let mut acc = Cplx::new(0.0, 0.0);
        for n in 0..=n_max {
            acc += self.coeffs[n] * p[n] * Cplx::new(j[n], y[n]);
        }
        Ok(acc)
    }

    pub fn total(&self, x: &Vector3<f64>) -> Result<Cplx> {
        Ok(self.incident(x) + self.scattered(x)?)
    }

    /// Radial derivative of the total field (vanishes on the sphere).
    pub fn total_radial_derivative(&self, x: &Vector3<f64>) -> Result<Cplx> {
        let (r, mu) = self.polar(x)?;
        let kr = self.k * r;
        let n_max = self.coeffs.len() - 1;
        let j = specfun::spherical_jn_all(n_max + 1, kr)?;
        let y = specfun::spherical_yn_all(n_max + 1, kr)?;
        let p = specfun::legendre_p_all(n_max, mu)?;
        let mut acc = Cplx::I * self.k * mu * (Cplx::I * kr * mu).exp();
        for n in 0..=n_max {
            let (jd, yd) = if n == 0 {
                (-j[1], -y[1])
            } else {
                let f = (n + 1) as f64 / kr;
                (j[n - 1] - f * j[n], y[n - 1] - f * y[n])
            };
            acc += self.coeffs[n] * p[n] * Cplx::new(jd, yd) * self.k;
        }
        Ok(acc)
    }
}
