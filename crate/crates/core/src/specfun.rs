//! Jacobi polynomials, the Gauss hypergeometric series, and log-Gamma
//! helpers.
//!
//! The closed-form amplitudes use Jacobi polynomials whose parameters depend
//! on the degree, P_n^{(−k+r−n, −k−r−n)}(x), so the usual three-term
//! recurrence in n does not apply; everything here goes through the explicit
//! finite sum with log-magnitude control instead.

use num_complex::Complex64;
use thiserror::Error;

/// Relative floor for series truncation: a term must stay below this fraction
/// of the partial sum for three consecutive terms before the sum stops.
const SERIES_EPS: f64 = 1e-17;
/// Hard cap on series length; hitting it means the argument is too close to
/// the convergence boundary to be useful.
const SERIES_MAX_TERMS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("2F1 series diverges: non-terminating parameters at z = {z}")]
    DivergentSeries { z: f64 },
    #[error("2F1 denominator vanishes at a = {a}, b = {b}, c = {c}, z = {z}")]
    ZeroDenominator { a: f64, b: f64, c: f64, z: f64 },
    #[error("2F1 parameter c = {c} hits a pole before the series terminates")]
    PoleInC { c: f64 },
}

/// ln Γ(x) for x > 0, Lanczos approximation (g = 7, 9 terms), relative
/// accuracy around 1e-14.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    // published coefficients, kept verbatim
    #[allow(clippy::excessive_precision)]
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0, "ln_gamma defined here for positive arguments");
    if x < 0.5 {
        // Reflection keeps the Lanczos core away from its accuracy edge.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let xm = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (xm + i as f64);
    }
    let t = xm + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (xm + 0.5) * t.ln() - t + acc.ln()
}

/// Generalized binomial coefficient binom(a, j) = a(a−1)⋯(a−j+1)/j! for real
/// a, as (sign, ln|value|). Sign 0.0 encodes an exact zero (integer a with
/// 0 ≤ a < j), which is what truncates the Jacobi sum for the discrete state
/// families.
pub(crate) fn ln_binom_signed(a: f64, j: u32) -> (f64, f64) {
    if j == 0 {
        return (1.0, 0.0);
    }
    let jf = f64::from(j);
    let ln_jfact = ln_gamma(jf + 1.0);
    if a >= 0.0 && a < jf && a.fract() == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    if a > jf - 1.0 {
        // all factors positive
        (1.0, ln_gamma(a + 1.0) - ln_gamma(a - jf + 1.0) - ln_jfact)
    } else if a < 0.0 {
        // all factors negative
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        (sign, ln_gamma(jf - a) - ln_gamma(-a) - ln_jfact)
    } else {
        // factors straddle zero at i = floor(a)
        let m = a.floor();
        let neg_count = (jf - 1.0 - m) as u32;
        let sign = if neg_count.is_multiple_of(2) { 1.0 } else { -1.0 };
        let ln_mag = ln_gamma(a + 1.0) - ln_gamma(a - m) + ln_gamma(jf - a)
            - ln_gamma(m + 1.0 - a)
            - ln_jfact;
        (sign, ln_mag)
    }
}

/// Degree and parameters of a Jacobi polynomial P_n^{(α,β)}(x). Parameters
/// below −1 are legitimate inputs here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub x: Complex64,
}

/// P_n^{(α,β)}(x) in log form: (ln-magnitude, unit phase). An exact zero is
/// (−∞, 0). Splitting magnitude from phase lets callers assemble amplitude
/// products whose intermediate magnitudes overflow f64.
pub(crate) fn jacobi_poly_ln(p: &JacobiParams) -> (f64, Complex64) {
    let n = p.n;
    if n == 0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let u = (p.x - 1.0) / 2.0;
    let v = (p.x + 1.0) / 2.0;
    let (ln_u, arg_u) = ln_arg(u);
    let (ln_v, arg_v) = ln_arg(v);

    // term s: binom(n+α, n−s) binom(n+β, s) u^s v^{n−s}
    let mut ln_mags = Vec::with_capacity(n as usize + 1);
    let mut phases = Vec::with_capacity(n as usize + 1);
    let mut ln_max = f64::NEG_INFINITY;
    for s in 0..=n {
        let (sg1, lb1) = ln_binom_signed(f64::from(n) + p.alpha, n - s);
        if sg1 == 0.0 {
            continue;
        }
        let (sg2, lb2) = ln_binom_signed(f64::from(n) + p.beta, s);
        if sg2 == 0.0 {
            continue;
        }
        let sf = f64::from(s);
        let nf = f64::from(n);
        // x = ±1 zeroes one factor; only terms with a zero exponent survive
        let mut ln_mag = lb1 + lb2;
        if s > 0 {
            if ln_u == f64::NEG_INFINITY {
                continue;
            }
            ln_mag += sf * ln_u;
        }
        if s < n {
            if ln_v == f64::NEG_INFINITY {
                continue;
            }
            ln_mag += (nf - sf) * ln_v;
        }
        let phase = Complex64::from_polar(sg1 * sg2, sf * arg_u + (nf - sf) * arg_v);
        ln_mags.push(ln_mag);
        phases.push(phase);
        if ln_mag > ln_max {
            ln_max = ln_mag;
        }
    }
    if ln_mags.is_empty() {
        return (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (ln_mag, phase) in ln_mags.iter().zip(&phases) {
        acc += phase * (ln_mag - ln_max).exp();
    }
    let norm = acc.norm();
    if norm == 0.0 {
        return (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
    }
    (ln_max + norm.ln(), acc / norm)
}

/// P_n^{(α,β)}(x) by the explicit finite sum
/// Σ_s binom(n+α, n−s) binom(n+β, s) ((x−1)/2)^s ((x+1)/2)^{n−s}.
pub fn jacobi_poly(p: &JacobiParams) -> Complex64 {
    let (ln_mag, phase) = jacobi_poly_ln(p);
    if ln_mag == f64::NEG_INFINITY {
        return Complex64::new(0.0, 0.0);
    }
    phase * ln_mag.exp()
}

fn ln_arg(z: Complex64) -> (f64, f64) {
    let r = z.norm();
    if r == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        (r.ln(), z.arg())
    }
}

/// Arguments of the Gauss hypergeometric function F(a, b; c; z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypergeometricArgs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

/// Index m such that the series terminates after m + 1 terms, when a or b is
/// a non-positive integer.
fn terminating_index(a: f64, b: f64) -> Option<u32> {
    let check = |v: f64| -> Option<u32> {
        if v <= 1e-9 && (v - v.round()).abs() < 1e-9 {
            let m = (-v.round()) as i64;
            (0..=i64::from(u32::MAX)).contains(&m).then_some(m as u32)
        } else {
            None
        }
    };
    match (check(a), check(b)) {
        (Some(ma), Some(mb)) => Some(ma.min(mb)),
        (Some(ma), None) => Some(ma),
        (None, Some(mb)) => Some(mb),
        (None, None) => None,
    }
}

/// F(a, b; c; z) for real arguments.
///
/// Terminating parameter sets (a or b a non-positive integer) are summed as
/// exact finite sums for any z. Otherwise the direct series handles
/// 0 ≤ z < 1, the z → z/(z−1) transformation handles z < 0, and anything
/// with z ≥ 1 is an error.
pub fn hyp2f1(h: &HypergeometricArgs) -> Result<f64, SpecFunError> {
    if h.z == 0.0 {
        return Ok(1.0);
    }
    if let Some(m) = terminating_index(h.a, h.b) {
        // c may be a non-positive integer only if the sum stops first
        if let Some(mc) = terminating_index(h.c, 1.0) {
            if mc < m {
                return Err(SpecFunError::PoleInC { c: h.c });
            }
        }
        return Ok(finite_sum(h.a, h.b, h.c, h.z, m));
    }
    if terminating_index(h.c, 1.0).is_some() {
        return Err(SpecFunError::PoleInC { c: h.c });
    }
    if h.z >= 1.0 {
        return Err(SpecFunError::DivergentSeries { z: h.z });
    }
    if h.z > 0.0 {
        return series(h.a, h.b, h.c, h.z);
    }
    // z < 0: map into [0, 1) and keep the series terms single-signed
    let zt = h.z / (h.z - 1.0);
    let f = series(h.a, h.c - h.b, h.c, zt)?;
    Ok((1.0 - h.z).powf(-h.a) * f)
}

fn finite_sum(a: f64, b: f64, c: f64, z: f64, m: u32) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..m {
        let jf = f64::from(j);
        term *= (a + jf) * (b + jf) / ((c + jf) * (jf + 1.0)) * z;
        sum += term;
    }
    sum
}

fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64, SpecFunError> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut quiet = 0u32;
    for j in 0..SERIES_MAX_TERMS {
        let jf = j as f64;
        term *= (a + jf) * (b + jf) / ((c + jf) * (jf + 1.0)) * z;
        sum += term;
        if term.abs() < SERIES_EPS * sum.abs() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(SpecFunError::DivergentSeries { z })
}

/// F(a+1, b+1; c+1; z) / F(a, b; c; z), the building block of the Θ ratio;
/// multiplying by ab/c gives the derivative dF/dz over F.
pub fn hyp2f1_derivative_ratio(h: &HypergeometricArgs) -> Result<f64, SpecFunError> {
    let denom = hyp2f1(h)?;
    if denom.abs() < 1e-13 {
        return Err(SpecFunError::ZeroDenominator {
            a: h.a,
            b: h.b,
            c: h.c,
            z: h.z,
        });
    }
    let num = hyp2f1(&HypergeometricArgs {
        a: h.a + 1.0,
        b: h.b + 1.0,
        c: h.c + 1.0,
        z: h.z,
    })?;
    Ok(num / denom)
}
