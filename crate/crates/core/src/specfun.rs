//! Special functions needed by the Helmholtz kernels and the sphere
//! scattering reference: cylindrical Bessel/Hankel functions of orders 0 and
//! 1, spherical Bessel/Hankel functions, and Legendre polynomials.
//!
//! Cylindrical J and Y switch between an ascending power series (`x <
//! SERIES_ASYMPTOTIC_SPLIT`) and the Hankel large-argument expansion with
//! optimal truncation. The two branches agree to ~1e-11 at the seam, which
//! the unit tests pin down.

use crate::{Cplx, Error, Result};

/// Branch point between the ascending series and the asymptotic expansion.
pub const SERIES_ASYMPTOTIC_SPLIT: f64 = 12.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;

/// Bessel function of the first kind, orders 0 and 1.
///
/// Panics if `order > 1`; higher orders are never needed here.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    match order {
        0 => j0(x),
        1 => j1(x),
        _ => panic!("bessel_j supports orders 0 and 1 only"),
    }
}

/// Bessel function of the second kind, orders 0 and 1. Requires `x > 0`.
pub fn bessel_y(order: u32, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::NonPositiveArgument("bessel_y requires x > 0"));
    }
    Ok(match order {
        0 => y0(x),
        1 => y1(x),
        _ => panic!("bessel_y supports orders 0 and 1 only"),
    })
}

/// Hankel function of the first kind H^(1)_order = J + iY. Requires `x > 0`.
pub fn hankel1(order: u32, x: f64) -> Result<Cplx> {
    Ok(Cplx::new(bessel_j(order, x), bessel_y(order, x)?))
}

pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_ASYMPTOTIC_SPLIT {
        j0_series(x)
    } else {
        bessel_asymptotic(0, x).0
    }
}

pub fn j1(x: f64) -> f64 {
    let (s, x) = if x < 0.0 { (-1.0, -x) } else { (1.0, x) };
    if x < SERIES_ASYMPTOTIC_SPLIT {
        s * j1_series(x)
    } else {
        s * bessel_asymptotic(1, x).0
    }
}

fn y0(x: f64) -> f64 {
    if x < SERIES_ASYMPTOTIC_SPLIT {
        y0_series(x)
    } else {
        bessel_asymptotic(0, x).1
    }
}

fn y1(x: f64) -> f64 {
    if x < SERIES_ASYMPTOTIC_SPLIT {
        y1_series(x)
    } else {
        bessel_asymptotic(1, x).1
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..=60 {
        term *= -q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn j1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..=60 {
        term *= -q / ((m * (m + 1)) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    0.5 * x * sum
}

fn y0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    // sum_{m>=1} (-1)^(m+1) H_m q^m / (m!)^2
    let mut pow = 1.0; // q^m / (m!)^2
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for m in 1..=60 {
        pow *= q / ((m * m) as f64);
        harmonic += 1.0 / m as f64;
        let term = if m % 2 == 1 { pow * harmonic } else { -pow * harmonic };
        sum += term;
        if pow * harmonic < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0_series(x) + sum)
}

fn y1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    // sum_{m>=0} (-1)^m (H_m + H_{m+1}) q^m / (m! (m+1)!)
    let mut pow = 1.0; // q^m / (m! (m+1)!)
    let mut h_m = 0.0;
    let mut h_m1 = 1.0;
    let mut sum = h_m + h_m1;
    for m in 1..=60 {
        pow *= -q / ((m * (m + 1)) as f64);
        h_m += 1.0 / m as f64;
        h_m1 += 1.0 / (m + 1) as f64;
        let term = pow * (h_m + h_m1);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    FRAC_2_PI * ((0.5 * x).ln() + EULER_GAMMA) * j1_series(x) - 2.0 / (std::f64::consts::PI * x)
        - x / (2.0 * std::f64::consts::PI) * sum
}

/// Hankel large-argument expansion, returns (J_nu, Y_nu).
///
/// The divergent series are truncated at their smallest term; at the x = 12
/// seam that term is ~6e-12, well below the 1e-10 accuracy target.
fn bessel_asymptotic(order: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (order * order) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for m in 0u32..40 {
        let odd = (2 * m + 1) as f64;
        term *= (mu - odd * odd) / (8.0 * (m + 1) as f64 * x);
        if term.abs() >= prev {
            break; // optimal truncation: stop once terms stop decreasing
        }
        prev = term.abs();
        // term now holds t_{m+1}; it alternates between Q (m even) and P parts
        let k = m + 1;
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if term.abs() < 1e-19 {
            break;
        }
    }
    let chi = x - (2.0 * order as f64 + 1.0) * std::f64::consts::FRAC_PI_4;
    let amp = (FRAC_2_PI / x).sqrt();
    let (sin_chi, cos_chi) = chi.sin_cos();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

/// Spherical Bessel functions j_0..j_n by Miller's downward recurrence,
/// normalized against j_0(x) = sin(x)/x. Requires `x > 0`.
pub fn spherical_jn_all(n: usize, x: f64) -> Result<Vec<f64>> {
    if x <= 0.0 {
        return Err(Error::NonPositiveArgument("spherical_jn_all requires x > 0"));
    }
    let j0 = x.sin() / x;
    if n == 0 {
        return Ok(vec![j0]);
    }
    let start = n + 25 + (1.5 * x) as usize;
    let mut fp1 = 0.0f64; // f_{m+1}
    let mut f = 1e-280f64; // f_m
    let mut out = vec![0.0; n + 1];
    for m in (0..start).rev() {
        let fm1 = (2 * m + 3) as f64 / x * f - fp1;
        fp1 = f;
        f = fm1;
        if m <= n {
            out[m] = f;
        }
        if f.abs() > 1e250 {
            let scale = 1.0 / f.abs();
            f *= scale;
            fp1 *= scale;
            for v in out.iter_mut().skip(m) {
                *v *= scale;
            }
        }
    }
    let scale = j0 / f;
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}

/// Spherical Bessel functions of the second kind y_0..y_n by the (stable)
/// upward recurrence. Requires `x > 0`.
pub fn spherical_yn_all(n: usize, x: f64) -> Result<Vec<f64>> {
    if x <= 0.0 {
        return Err(Error::NonPositiveArgument("spherical_yn_all requires x > 0"));
    }
    let (sin_x, cos_x) = x.sin_cos();
    let mut out = Vec::with_capacity(n + 1);
    out.push(-cos_x / x);
    if n >= 1 {
        out.push(-cos_x / (x * x) - sin_x / x);
    }
    for m in 1..n {
        let next = (2 * m + 1) as f64 / x * out[m] - out[m - 1];
        out.push(next);
    }
    Ok(out)
}

pub fn spherical_jn(n: usize, x: f64) -> Result<f64> {
    Ok(spherical_jn_all(n, x)?[n])
}

/// Spherical Hankel function of the first kind h_n = j_n + i y_n.
pub fn spherical_h1(n: usize, x: f64) -> Result<Cplx> {
    Ok(Cplx::new(spherical_jn(n, x)?, spherical_yn_all(n, x)?[n]))
}

/// Derivative of a spherical Bessel-family function from the standard
/// recurrence f_n'(x) = f_{n-1}(x) - (n+1)/x f_n(x), with f_0' = -f_1.
pub fn spherical_jn_deriv(n: usize, x: f64) -> Result<f64> {
    let all = spherical_jn_all(n + 1, x)?;
    Ok(if n == 0 {
        -all[1]
    } else {
        all[n - 1] - (n + 1) as f64 / x * all[n]
    })
}

pub fn spherical_h1_deriv(n: usize, x: f64) -> Result<Cplx> {
    let j = spherical_jn_all(n + 1, x)?;
    let y = spherical_yn_all(n + 1, x)?;
    let h = |m: usize| Cplx::new(j[m], y[m]);
    Ok(if n == 0 {
        -h(1)
    } else {
        h(n - 1) - (n + 1) as f64 / x * h(n)
    })
}

/// Legendre polynomial P_n(x) on [-1, 1] via the Bonnet recurrence.
pub fn legendre_p(n: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::DomainError("legendre_p requires |x| <= 1"));
    }
    Ok(legendre_p_unchecked(n, x))
}

pub(crate) fn legendre_p_unchecked(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut pm1 = 1.0;
    let mut p = x;
    for m in 1..n {
        let next = ((2 * m + 1) as f64 * x * p - m as f64 * pm1) / (m + 1) as f64;
        pm1 = p;
        p = next;
    }
    p
}

/// Legendre polynomials P_0(x)..P_n(x).
pub fn legendre_p_all(n: usize, x: f64) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::DomainError("legendre_p_all requires |x| <= 1"));
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for m in 1..n {
        let next = ((2 * m + 1) as f64 * x * out[m] - m as f64 * out[m - 1]) / (m + 1) as f64;
        out.push(next);
    }
    Ok(out)
}
