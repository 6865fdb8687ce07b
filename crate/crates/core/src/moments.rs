//! Observable reports: K-generator moments, photon statistics, quadrature
//! variances, and squeezing flags.
//!
//! Closed-form population of these reports for the four state families lives
//! here; the brute-force population by matrix contraction lives in [`crate::fock`]
//! so the two routes stay independent.

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{self, FockError, Representation};
use crate::states::{self, BetaVector, EigenvalueSign, SpectralData, StateError};

/// Guard band for the strict inequalities behind the squeezing flags; exact
/// boundary states must not be flagged.
pub const FLAG_GUARD: f64 = 1e-12;

/// A Hermitian generator pair (A, B) expressed in the (K₁, K₂, K₃) basis.
/// The metric is Euclidean on the coefficients; the algebra enters only
/// through the commutator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorPair {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl GeneratorPair {
    /// Coefficients of C = −i[A, B] in the same basis, from
    /// [K₁,K₂] = −iK₃, [K₂,K₃] = iK₁, [K₃,K₁] = iK₂.
    pub fn commutator_coeffs(&self) -> [f64; 3] {
        let a = self.a;
        let b = self.b;
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            -(a[0] * b[1] - a[1] * b[0]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SqueezingFlags {
    pub linear_squeezed_q: bool,
    pub linear_squeezed_p: bool,
    pub relative_quad_squeezed_k1: bool,
    pub relative_quad_squeezed_k2: bool,
    pub absolute_quad_squeezed_k1: bool,
    pub absolute_quad_squeezed_k2: bool,
    pub sub_poissonian: bool,
}

impl SqueezingFlags {
    /// Threshold bookkeeping shared by both report routes. `k` is the
    /// Bargmann index; bounds: vacuum level 1/2 for the quadratures,
    /// ½⟨K₃⟩ for relative and k/2 for absolute quadratic squeezing,
    /// g⁽²⁾ < 1 for sub-Poissonian statistics.
    pub fn from_values(
        k: f64,
        var_q: f64,
        var_p: f64,
        var_k1: f64,
        var_k2: f64,
        mean_k3: f64,
        g2: Option<f64>,
    ) -> Self {
        let rel_bound = 0.5 * mean_k3.abs();
        let abs_bound = 0.5 * k;
        SqueezingFlags {
            linear_squeezed_q: var_q < 0.5 - FLAG_GUARD,
            linear_squeezed_p: var_p < 0.5 - FLAG_GUARD,
            relative_quad_squeezed_k1: var_k1 < rel_bound - FLAG_GUARD,
            relative_quad_squeezed_k2: var_k2 < rel_bound - FLAG_GUARD,
            absolute_quad_squeezed_k1: var_k1 < abs_bound - FLAG_GUARD,
            absolute_quad_squeezed_k2: var_k2 < abs_bound - FLAG_GUARD,
            sub_poissonian: g2.is_some_and(|g| g < 1.0 - FLAG_GUARD),
        }
    }
}

/// Every observable the library reports for a state. `g2` is `None` when
/// ⟨N⟩ = 0 makes the intensity correlation diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentsReport {
    pub mean_k3: f64,
    pub var_k3: f64,
    pub mean_k1: f64,
    pub mean_k2: f64,
    pub var_k1: f64,
    pub var_k2: f64,
    /// Covariance ½⟨{A,B}⟩ − ⟨A⟩⟨B⟩ of the defining generator pair.
    pub cov_ab: f64,
    pub mean_n: f64,
    pub var_n: f64,
    pub g2: Option<f64>,
    pub var_q: f64,
    pub var_p: f64,
    /// Global minimum k/2 of the quadratic-squeezing bound.
    pub delta0_sq: f64,
    /// |ΔA²·ΔB² − ¼⟨C⟩²| over its scale for the defining pair; an exact
    /// intelligent state drives this to zero.
    pub sat_residual: f64,
    pub flags: SqueezingFlags,
}

/// Below this the S₊S₋-based closed forms divide by effectively zero.
const SINGULAR_S_TOL: f64 = 1e-13;

/// K₃ + χK₋ states with |1 − 1/|χ|²| inside this window sit too close to the
/// S₊ zero for the closed forms; the finite ladder is cheap for the matrix
/// oracle, so those points are answered by it instead.
const UNIT_MODULUS_ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MomentsError {
    #[error("family parameter out of range: {detail}")]
    ParamOutOfRange { detail: String },
    #[error("closed forms singular: S-denominator {value:.3e}")]
    SingularS { value: f64 },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// The four eigenstate families with closed-form observables, each storing
/// its own coupling:
/// (K₃ − χK₊)|ψ⟩ = (k+l)|ψ⟩ with |χ| < 1;
/// (K₃ + χK₋)|ψ⟩ = (k+l)|ψ⟩ with χ ≠ 0 (an l+1 term ladder);
/// (ηK₁ − iK₂)|ψ⟩ = (k+l)√(1−η²)|ψ⟩ with 0 < η < 1;
/// (ηK₂ + iK₃)|ψ⟩ = i(k+l)√(η²+1)|ψ⟩ with η > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    K3MinusChiKPlus { chi: Complex64 },
    K3PlusChiKMinus { chi: Complex64 },
    K1K2 { eta: f64 },
    K2K3 { eta: f64 },
}

impl Family {
    pub fn validate(&self) -> Result<(), MomentsError> {
        let fail = |detail: String| Err(MomentsError::ParamOutOfRange { detail });
        match *self {
            Family::K3MinusChiKPlus { chi } => {
                if !chi.is_finite() || chi.norm() >= 1.0 {
                    return fail(format!("|χ| = {} must be < 1", chi.norm()));
                }
            }
            Family::K3PlusChiKMinus { chi } => {
                if !chi.is_finite() || chi.norm() == 0.0 {
                    return fail(format!("χ = {chi} must be finite and nonzero"));
                }
            }
            Family::K1K2 { eta } => {
                if !eta.is_finite() || eta <= 0.0 || eta >= 1.0 {
                    return fail(format!("η = {eta} must lie in (0, 1)"));
                }
            }
            Family::K2K3 { eta } => {
                if !eta.is_finite() || eta <= 0.0 {
                    return fail(format!("η = {eta} must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Coefficient vector of the defining pencil β₋K₊ + β₊K₋ + β₃K₃.
    pub fn beta(&self) -> BetaVector {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            Family::K3MinusChiKPlus { chi } => BetaVector::new(-chi, -i * chi, one),
            Family::K3PlusChiKMinus { chi } => BetaVector::new(chi, -i * chi, one),
            Family::K1K2 { eta } => BetaVector::new(Complex64::new(eta, 0.0), -i, zero),
            Family::K2K3 { eta } => BetaVector::new(zero, Complex64::new(eta, 0.0), i),
        }
    }

    /// Hermitian split of the pencil as A + iB; the uncertainty product the
    /// state saturates is the one for this pair.
    pub fn defining_pair(&self) -> GeneratorPair {
        match *self {
            Family::K3MinusChiKPlus { chi } => GeneratorPair {
                a: [-chi.re, chi.im, 1.0],
                b: [-chi.im, -chi.re, 0.0],
            },
            Family::K3PlusChiKMinus { chi } => GeneratorPair {
                a: [chi.re, chi.im, 1.0],
                b: [chi.im, -chi.re, 0.0],
            },
            Family::K1K2 { eta } => GeneratorPair {
                a: [eta, 0.0, 0.0],
                b: [0.0, -1.0, 0.0],
            },
            Family::K2K3 { eta } => GeneratorPair {
                a: [0.0, eta, 0.0],
                b: [0.0, 0.0, 1.0],
            },
        }
    }

    /// Eigenvalue of the pencil on the l-th ladder member.
    pub fn eigenvalue(&self, rep: Representation, l: u32) -> Complex64 {
        let e = rep.bargmann_k() + l as f64;
        match *self {
            Family::K3MinusChiKPlus { .. } | Family::K3PlusChiKMinus { .. } => {
                Complex64::new(e, 0.0)
            }
            Family::K1K2 { eta } => Complex64::new(e * (1.0 - eta * eta).sqrt(), 0.0),
            Family::K2K3 { eta } => Complex64::new(0.0, e * (eta * eta + 1.0).sqrt()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Family::K3MinusChiKPlus { .. } => "k3-kplus",
            Family::K3PlusChiKMinus { .. } => "k3-kminus",
            Family::K1K2 { .. } => "k1k2",
            Family::K2K3 { .. } => "k2k3",
        }
    }
}

/// First two moments of K₃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K3Moments {
    pub mean: f64,
    pub var: f64,
}

/// Closed-form K₃ mean and variance for a β₊ ≠ 0 eigenstate with real
/// eigenvalue ratio r = ±(k+l). When |τ₊τ₋| = 1 the S-denominators
/// degenerate and the equivalent h-form takes over.
pub fn k3_moments_general(
    sd: &SpectralData,
    rep: Representation,
    l: u32,
    sign: EigenvalueSign,
) -> Result<K3Moments, MomentsError> {
    let k = rep.bargmann_k();
    let r = match sign {
        EigenvalueSign::Plus => k + l as f64,
        EigenvalueSign::Minus => -(k + l as f64),
    };
    debug_assert!(
        (r - sd.r).abs() <= 1e-9 * r.abs().max(1.0),
        "requested sign disagrees with the stored eigenvalue ratio"
    );
    let t = sd.t;
    let krr = k * k - r * r;
    if let Some(h) = sd.h {
        let hm = h - 1.0;
        if hm.abs() < SINGULAR_S_TOL {
            return Err(MomentsError::SingularS { value: hm });
        }
        let theta = states::theta_ratio(sd, rep, l)?;
        let mean = r * (h + 1.0) / hm;
        let var =
            2.0 * k * h / (hm * hm) + krr * h * h * t * theta / (k * hm.powi(4));
        return Ok(K3Moments { mean, var });
    }
    let (sp, sm) = (sd.s_plus, sd.s_minus);
    let ss = sp * sm;
    if ss.abs() < SINGULAR_S_TOL {
        return Err(MomentsError::SingularS { value: ss });
    }
    let sst = ss + t;
    if sst.abs() < SINGULAR_S_TOL {
        return Err(MomentsError::SingularS { value: sst });
    }
    let theta = states::theta_ratio(sd, rep, l)?;
    let y = sd.y;
    let z = sd.z;
    let mean = (-k * y + r * (sp - sm)) / ss + krr * y * t * theta / (2.0 * k * ss * ss);
    let var = (k + r) * (1.0 - sm) / (sm * sm)
        + (k - r) * (1.0 - sp) / (sp * sp)
        - krr * y * y * t / (sst * ss * ss)
        - krr * t / (2.0 * k * ss.powi(3)) * (ss * y * y / sst - 2.0 * k * y * y + z) * theta
        - krr * krr * y * y * t * t * theta * theta / (4.0 * k * k * ss.powi(4));
    Ok(K3Moments { mean, var })
}

/// Closed-form K₃ mean and variance for the β₊ = 0 family, i.e. eigenstates
/// of K₃ − χK₊ written with τ = −χ, |τ| < 1.
pub fn k3_moments_beta_plus_zero(
    tau_plus: Complex64,
    rep: Representation,
    l: u32,
) -> Result<K3Moments, MomentsError> {
    let upsilon = states::upsilon_ratio(tau_plus, l, rep)?;
    Ok(beta_plus_zero_from_upsilon(
        rep.bargmann_k(),
        l,
        tau_plus.norm_sqr(),
        upsilon,
    ))
}

fn beta_plus_zero_from_upsilon(k: f64, l: u32, t2: f64, upsilon: f64) -> K3Moments {
    let lf = l as f64;
    let a = (lf + 1.0) * (lf + 2.0 * k);
    let mean = k + lf + a * t2 * upsilon;
    let var = a * t2 / (1.0 - t2) + a * (2.0 * lf + 2.0 * k + 1.0) * t2 * t2 * upsilon / (1.0 - t2)
        - a * a * t2 * t2 * upsilon * upsilon;
    K3Moments { mean, var }
}

/// Builds the first- and second-moment tables (m_i = ⟨K_i⟩ and
/// s_ij = ½⟨{K_i,K_j}⟩) from the K₃ moments plus the K₊ chain ⟨K₊⟩, ⟨K₊²⟩,
/// ⟨{K₃,K₊}⟩; on these eigenstates every other bilinear reduces to that
/// chain through the Casimir.
fn chain_second_moments(
    k: f64,
    mom: K3Moments,
    kp: Complex64,
    kp2: Complex64,
    anti: Complex64,
) -> ([f64; 3], [[f64; 3]; 3]) {
    let m22 = mom.var + mom.mean * mom.mean;
    let m = [kp.re, kp.im, mom.mean];
    let base = 0.5 * (m22 - k * (k - 1.0));
    let s11 = 0.5 * kp2.re + base;
    let s22 = -0.5 * kp2.re + base;
    let s12 = 0.5 * kp2.im;
    let s13 = 0.5 * anti.re;
    let s23 = 0.5 * anti.im;
    let s = [[s11, s12, s13], [s12, s22, s23], [s13, s23, m22]];
    (m, s)
}

/// Shared tail of both report routes: bilinear forms over the moment tables.
/// The quadratures use (Δq)² = 2(⟨K₃⟩ + ⟨K₁⟩) and (Δp)² = 2(⟨K₃⟩ − ⟨K₁⟩),
/// exact on a fixed parity sector where ⟨q⟩ = ⟨p⟩ = 0; the matrix oracle
/// computes them from the photon-basis quadrature operators instead.
fn assemble_report(k: f64, m: [f64; 3], s: [[f64; 3]; 3], pair: &GeneratorPair) -> MomentsReport {
    debug_assert!(
        (s[2][2] - s[0][0] - s[1][1] - k * (k - 1.0)).abs() <= 1e-8 * s[2][2].abs().max(1.0),
        "second moments violate the Casimir constraint"
    );
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let quad = |a: &[f64; 3], b: &[f64; 3]| {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += a[i] * s[i][j] * b[j];
            }
        }
        acc
    };
    let mean_a = dot(&pair.a, &m);
    let mean_b = dot(&pair.b, &m);
    let var_a = quad(&pair.a, &pair.a) - mean_a * mean_a;
    let var_b = quad(&pair.b, &pair.b) - mean_b * mean_b;
    let cov_ab = quad(&pair.a, &pair.b) - mean_a * mean_b;
    let mean_c = dot(&pair.commutator_coeffs(), &m);
    let bound = 0.25 * mean_c * mean_c;
    let sat_residual = (var_a * var_b - bound).abs() / bound.max(f64::MIN_POSITIVE);

    let var_k1 = s[0][0] - m[0] * m[0];
    let var_k2 = s[1][1] - m[1] * m[1];
    let var_k3 = s[2][2] - m[2] * m[2];
    let mean_n = 2.0 * m[2] - 0.5;
    let var_n = 4.0 * var_k3;
    // ⟨N(N−1)⟩ in terms of the K₃ moments
    let g2_num = 4.0 * s[2][2] - 4.0 * m[2] + 0.75;
    let g2 = (mean_n > 1e-12).then(|| g2_num / (mean_n * mean_n));
    let var_q = 2.0 * (m[2] + m[0]);
    let var_p = 2.0 * (m[2] - m[0]);

    MomentsReport {
        mean_k3: m[2],
        var_k3,
        mean_k1: m[0],
        mean_k2: m[1],
        var_k1,
        var_k2,
        cov_ab,
        mean_n,
        var_n,
        g2,
        var_q,
        var_p,
        delta0_sq: 0.5 * k,
        sat_residual,
        flags: SqueezingFlags::from_values(k, var_q, var_p, var_k1, var_k2, m[2], g2),
    }
}

/// Full closed-form observable report for one family member. Everything is
/// populated from the K₃ moments and the family's defining relation; no
/// state vector is built, except for K₃ + χK₋ couplings within
/// [`UNIT_MODULUS_ORACLE_TOL`] of the unit circle, which fall back to the
/// matrix oracle on the finite ladder.
pub fn full_report(
    family: Family,
    rep: Representation,
    l: u32,
) -> Result<MomentsReport, MomentsError> {
    family.validate()?;
    let k = rep.bargmann_k();
    let lf = l as f64;
    let e = k + lf;
    let pair = family.defining_pair();
    let (m, s) = match family {
        Family::K3MinusChiKPlus { chi } => {
            let tau = -chi;
            let t2 = tau.norm_sqr();
            let upsilon = states::upsilon_ratio(tau, l, rep)?;
            let mom = beta_plus_zero_from_upsilon(k, l, t2, upsilon);
            let a = (lf + 1.0) * (lf + 2.0 * k);
            if t2 == 0.0 {
                let zero = Complex64::new(0.0, 0.0);
                chain_second_moments(k, mom, zero, zero, zero)
            } else {
                // x = ⟨K₃⟩ − (k+l) = a|χ|²Υ, so χ⟨K₊⟩ = x reduces to the
                // conjugate phase and no small denominator ever forms:
                // ⟨K₊⟩ = aχ̄Υ, χ²⟨K₊²⟩ = (ΔK₃)² + x² − x,
                // χ⟨{K₃,K₊}⟩ = 2(ΔK₃)² + 2x² + 2(k+l)x − x.
                let kp = chi.conj() * (a * upsilon);
                let bracket = 1.0 / (1.0 - t2)
                    + (2.0 * lf + 2.0 * k + 1.0) * t2 * upsilon / (1.0 - t2)
                    - upsilon;
                let kp2 = (chi.conj() / chi) * (a * bracket);
                let anti = 2.0 * kp2 * chi + (2.0 * e + 1.0) * kp;
                chain_second_moments(k, mom, kp, kp2, anti)
            }
        }
        Family::K3PlusChiKMinus { chi } => {
            let t = 1.0 / chi.norm_sqr();
            if (1.0 - t).abs() <= UNIT_MODULUS_ORACLE_TOL {
                let n_max = (2 * l as usize + 16).max(32);
                let state = fock::eigenstate_by_recursion(
                    &family.beta(),
                    Complex64::new(e, 0.0),
                    rep,
                    n_max,
                )?;
                return Ok(fock::oracle_moments(&state, &pair)?);
            }
            let sd = SpectralData::from_beta(&family.beta(), e)?;
            let mom = k3_moments_general(&sd, rep, l, EigenvalueSign::Plus)?;
            let theta = states::theta_ratio(&sd, rep, l)?;
            // Rebuild x = ⟨K₃⟩ − (k+l) without the cancelling subtraction,
            // then walk the (conjugated) chain: χ⟨K₋⟩ = −x,
            // χ²⟨K₋²⟩ = (ΔK₃)² + x² + x,
            // χ⟨{K₃,K₋}⟩ = −(2(ΔK₃)² + 2x² + 2(k+l)x + x).
            let omt = 1.0 - t;
            let x = -lf / omt + lf * (lf + 2.0 * k) * t * theta / (2.0 * k * omt * omt);
            let km = -x / chi;
            let km2 = (mom.var + x * x + x) / (chi * chi);
            let anti_m = -2.0 * chi * km2 + (2.0 * e - 1.0) * km;
            chain_second_moments(k, mom, km.conj(), km2.conj(), anti_m.conj())
        }
        Family::K1K2 { eta } => {
            let sd = SpectralData::from_beta(&family.beta(), e)?;
            let mom = k3_moments_general(&sd, rep, l, EigenvalueSign::Plus)?;
            let lam = e * (1.0 - eta * eta).sqrt();
            let m1 = lam / eta;
            let m22 = mom.var + mom.mean * mom.mean;
            let s11 = mom.mean / (2.0 * eta) + m1 * m1;
            let s22 = eta * mom.mean / 2.0;
            let s13 = (2.0 * lam * mom.mean + m1) / (2.0 * eta);
            (
                [m1, 0.0, mom.mean],
                [[s11, 0.0, s13], [0.0, s22, 0.0], [s13, 0.0, m22]],
            )
        }
        Family::K2K3 { eta } => {
            let sd = SpectralData::from_beta(&family.beta(), e)?;
            let mom = k3_moments_general(&sd, rep, l, EigenvalueSign::Plus)?;
            let m1 = 2.0 * mom.var / eta;
            let e2 = eta * eta;
            let m22 = mom.var + mom.mean * mom.mean;
            let var_k1 = (e2 - 1.0) * mom.var / e2 - 4.0 * mom.var * mom.var / e2
                + e * e * (e2 + 1.0)
                + 0.1875;
            let s11 = var_k1 + m1 * m1;
            let s22 = mom.var / e2;
            let s13 = mom.mean * (m1 + eta / 2.0);
            (
                [m1, 0.0, mom.mean],
                [[s11, 0.0, s13], [0.0, s22, 0.0], [s13, 0.0, m22]],
            )
        }
    };
    Ok(assemble_report(k, m, s, &pair))
}

/// Which end of the family's coupling range an asymptotic formula targets:
/// K₃ − χK₊ in |χ| → 0 / |χ| → 1; K₃ + χK₋ in t = 1/|χ|² → 0 / t → ∞;
/// ηK₁ − iK₂ in η → 0 / δ = 1−η² → 0; ηK₂ + iK₃ in η → 0 / η → ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Small,
    Large,
}

/// Leading-order predictions for the regime, evaluated at the family's
/// stored coupling. `None` marks a quantity with no finite prediction there
/// (g⁽²⁾ on a vacuum-headed ladder, or formulas that require l ≥ 1). Used by
/// tests and CLI verification output, never by the closed-form pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LimitPrediction {
    pub mean_k3: Option<f64>,
    pub var_k3: Option<f64>,
    pub g2: Option<f64>,
}

pub fn limit_check(family: Family, rep: Representation, l: u32, regime: Regime) -> LimitPrediction {
    let k = rep.bargmann_k();
    let lf = l as f64;
    let e = k + lf;
    // photon number of the ladder head
    let nf = rep.photon_index(l as usize) as f64;
    let even = k < 0.5;
    match (family, regime) {
        (Family::K3MinusChiKPlus { chi }, Regime::Small) => {
            let t2 = chi.norm_sqr();
            let a = (lf + 1.0) * (lf + 2.0 * k);
            LimitPrediction {
                mean_k3: Some(e + a * t2),
                var_k3: Some(a * t2),
                g2: (nf >= 1.0).then(|| 1.0 - 1.0 / nf),
            }
        }
        (Family::K3MinusChiKPlus { chi }, Regime::Large) => {
            let t2 = chi.norm_sqr();
            let u = t2 / (1.0 - t2);
            LimitPrediction {
                mean_k3: Some(e + 2.0 * (lf + k) * u),
                var_k3: Some((lf + 1.0) * (lf + 2.0 * k) * u),
                g2: Some((2.0 * nf + 3.0) / (2.0 * nf + 1.0)),
            }
        }
        (Family::K3PlusChiKMinus { chi }, Regime::Small) => {
            let t = 1.0 / chi.norm_sqr();
            let g2 = (l >= 1).then(|| {
                if even {
                    1.0 / (4.0 * lf * lf * t)
                } else {
                    4.0 * lf * lf * t
                }
            });
            LimitPrediction {
                mean_k3: Some(k + lf * lf * t / (2.0 * k)),
                var_k3: Some(lf * lf * t / (2.0 * k)),
                g2,
            }
        }
        (Family::K3PlusChiKMinus { chi }, Regime::Large) => {
            let t = 1.0 / chi.norm_sqr();
            let drop = lf * (lf + 2.0 * k - 1.0) / t;
            LimitPrediction {
                mean_k3: Some(e - drop),
                var_k3: Some(drop),
                g2: (nf >= 1.0).then(|| (1.0 - 1.0 / nf) * (1.0 + 1.0 / (2.0 * t))),
            }
        }
        (Family::K1K2 { eta }, Regime::Small) => LimitPrediction {
            mean_k3: Some((2.0 * nf + 1.0) / (4.0 * eta)),
            var_k3: Some((2.0 * nf + 1.0) / (8.0 * eta * eta)),
            g2: Some((2.0 * nf + 3.0) / (2.0 * nf + 1.0)),
        },
        (Family::K1K2 { eta }, Regime::Large) => {
            let delta = 1.0 - eta * eta;
            let half = nf + 0.5;
            let g2 = if even {
                1.0 / (half * half * delta)
            } else {
                half * half * delta
            };
            LimitPrediction {
                mean_k3: Some(k + e * e * delta / (2.0 * k)),
                var_k3: Some(e * e * delta / (2.0 * k)),
                g2: Some(g2),
            }
        }
        (Family::K2K3 { eta }, Regime::Small) => {
            let e2 = eta * eta;
            let g2 = (nf >= 1.0).then(|| {
                1.0 - 1.0 / nf + (2.0 * nf * nf + 4.0 * nf + 3.0) * e2 / (4.0 * nf * nf)
            });
            LimitPrediction {
                mean_k3: Some((2.0 * nf + 1.0) * (1.0 + e2 / 2.0) / 4.0),
                var_k3: Some((nf * nf + nf + 1.0) * e2 / 8.0),
                g2,
            }
        }
        (Family::K2K3 { eta }, Regime::Large) => {
            let tn = 2.0 * nf + 1.0;
            LimitPrediction {
                mean_k3: Some(tn * eta / 4.0),
                var_k3: Some(tn * eta * eta / 8.0),
                g2: Some((tn + 2.0) / tn - 2.0 * (tn - 2.0) / (tn * tn * eta)),
            }
        }
    }
}
