//! Spectral classification and closed-form eigenstates of β·K.
//!
//! A complex coefficient vector (β₁, β₂, β₃) defines the operator
//! β·K = β₋K₊ + β₊K₋ + β₃K₃ with β± = (β₁ ± iβ₂)/2. Normalizability of an
//! eigenstate is governed by the two roots τ± of β₊τ² − β₃τ + β₋ = 0 relative
//! to the unit circle: one root inside and one outside forces a discrete
//! eigenvalue ladder λ = ±(k+l)·B, both inside admits any real multiple of B
//! handled here, both outside leaves no normalizable state. The degenerate
//! quadratic β₊ = 0 keeps a single finite root and its own amplitude law.
//!
//! Amplitudes come from expanding the generating function
//! (1 + τ₋ζ)^{−k+r} (1 + τ₊ζ)^{−k−r} in the disk representation, which the
//! Jacobi explicit sum reproduces with argument x = β₃/B and power (−κ)ⁿ,
//! κ = τ₊ − τ₋. Everything downstream (t, S±, Y, Z, norms, moments) depends
//! on κ only through t = |κ|².

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{FockError, FockVector, Representation};
use crate::specfun::{self, HypergeometricArgs, JacobiParams, SpecFunError};

/// |B| below this fraction of |β₁|+|β₂|+|β₃| counts as a vanishing Killing form.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// |β₊| below this fraction of the coefficient scale routes to the β₊ = 0 family.
pub const BETA_PLUS_TOL: f64 = 1e-14;
/// Width of the excluded band around |τ| = 1.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// ||τ₊τ₋| − 1| below this activates the unimodular-product simplifications.
pub const UNIMODULAR_TOL: f64 = 1e-9;
/// Largest tolerated |Im(λ/B)| relative to max(1, |Re(λ/B)|).
pub const NONREAL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("Killing form B vanishes; the degenerate family is not supported")]
    DegenerateKilling,
    #[error("a root modulus |tau| = {modulus} sits on the unit circle within {BOUNDARY_TOL:e}")]
    BoundaryCase { modulus: f64 },
    #[error("no normalizable eigenstate: requested eigenvalue lies outside the admissible spectrum ({detail})")]
    ForbiddenRegion { detail: String },
    #[error("lambda/B has imaginary part {imag:e}; only real eigenvalue ratios are supported")]
    NonRealR { imag: f64 },
    #[error("|tau| = {modulus} is not inside the unit disk; state not normalizable")]
    TauOutOfDisk { modulus: f64 },
    #[error("beta_plus vanishes for this coefficient vector; use the dedicated beta_plus = 0 construction")]
    BetaPlusVanishes,
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Coefficients of β·K = β₁K₁ + β₂K₂ + β₃K₃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaVector {
    pub beta1: Complex64,
    pub beta2: Complex64,
    pub beta3: Complex64,
}

impl BetaVector {
    pub fn new(beta1: Complex64, beta2: Complex64, beta3: Complex64) -> Self {
        Self { beta1, beta2, beta3 }
    }

    /// Coefficient of K₋ in the ladder form of β·K.
    pub fn beta_plus(&self) -> Complex64 {
        0.5 * (self.beta1 + Complex64::i() * self.beta2)
    }

    /// Coefficient of K₊ in the ladder form of β·K.
    pub fn beta_minus(&self) -> Complex64 {
        0.5 * (self.beta1 - Complex64::i() * self.beta2)
    }

    /// Principal root B = √(β₃² − β₁² − β₂²); Re B ≥ 0, and Im B ≥ 0 on the cut.
    pub fn killing_root(&self) -> Complex64 {
        (self.beta3 * self.beta3 - self.beta1 * self.beta1 - self.beta2 * self.beta2).sqrt()
    }

    fn scale(&self) -> f64 {
        self.beta1.norm() + self.beta2.norm() + self.beta3.norm()
    }
}

/// Normalizable-spectrum classes of β·K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralClass {
    /// Both roots inside the unit disk: every real multiple of B is admissible.
    ContinuousComplex,
    /// |τ₊| < 1 ≤ |τ₋|: discrete ladder λ = (k+l)B.
    DiscretePlus,
    /// |τ₋| < 1 ≤ |τ₊|: discrete ladder λ = −(k+l)B.
    DiscreteMinus,
    /// Both roots on or outside the unit circle: no normalizable eigenstate.
    Forbidden,
    /// β₊ = 0: single root τ = β₋/β₃, ladder λ = (k+l)β₃.
    BetaPlusZero,
}

/// Requested sign in λ = ±(k+l)B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenvalueSign {
    Plus,
    Minus,
}

/// Derived spectral quantities for β₊ ≠ 0.
#[derive(Debug, Clone, Copy)]
pub struct SpectralData {
    pub tau_plus: Complex64,
    pub tau_minus: Complex64,
    /// Real eigenvalue ratio r = λ/B.
    pub r: f64,
    /// κ = τ₊ − τ₋ = −2B/(β₁ + iβ₂).
    pub kappa: Complex64,
    /// t = |κ|².
    pub t: f64,
    /// x = β₃/B, the Jacobi argument.
    pub x: Complex64,
    /// S₊ = 1 − |τ₋|².
    pub s_plus: f64,
    /// S₋ = 1 − |τ₊|².
    pub s_minus: f64,
    /// Y = S₊S₋ − S₊ − S₋; zero exactly when |τ₊τ₋| = 1.
    pub y: f64,
    /// Z = S₊²(1 − S₋) + S₋²(1 − S₊).
    pub z: f64,
    /// h = |τ₋|², recorded only when |τ₊τ₋| = 1 within [`UNIMODULAR_TOL`].
    pub h: Option<f64>,
}

impl SpectralData {
    /// Derives the spectral quantities for a given real eigenvalue ratio r.
    pub fn from_beta(beta: &BetaVector, r: f64) -> Result<Self, StateError> {
        let scale = beta.scale();
        let b = beta.killing_root();
        if b.norm() < DEGENERATE_TOL * scale {
            return Err(StateError::DegenerateKilling);
        }
        let bp = beta.beta_plus();
        if bp.norm() < BETA_PLUS_TOL * scale {
            return Err(StateError::BetaPlusVanishes);
        }
        let bm = beta.beta_minus();
        // Root pair of β₊τ² − β₃τ + β₋: evaluate each root through the larger
        // of β₃ ± B so neither suffers cancellation (τ₊τ₋ = β₋/β₊).
        let d_plus = beta.beta3 + b;
        let d_minus = beta.beta3 - b;
        let (tau_plus, tau_minus) = if d_plus.norm() >= d_minus.norm() {
            (2.0 * bm / d_plus, d_plus / (2.0 * bp))
        } else {
            (d_minus / (2.0 * bp), 2.0 * bm / d_minus)
        };
        let kappa = tau_plus - tau_minus;
        let t = kappa.norm_sqr();
        let s_plus = 1.0 - tau_minus.norm_sqr();
        let s_minus = 1.0 - tau_plus.norm_sqr();
        let y = s_plus * s_minus - s_plus - s_minus;
        let z = s_plus * s_plus * (1.0 - s_minus) + s_minus * s_minus * (1.0 - s_plus);
        let product = (tau_plus * tau_minus).norm();
        let h = ((product - 1.0).abs() <= UNIMODULAR_TOL).then(|| tau_minus.norm_sqr());
        Ok(Self {
            tau_plus,
            tau_minus,
            r,
            kappa,
            t,
            x: beta.beta3 / b,
            s_plus,
            s_minus,
            y,
            z,
            h,
        })
    }

    /// Same as [`SpectralData::from_beta`] but takes the eigenvalue itself.
    pub fn from_lambda(beta: &BetaVector, lambda: Complex64) -> Result<Self, StateError> {
        let scale = beta.scale();
        let b = beta.killing_root();
        if b.norm() < DEGENERATE_TOL * scale {
            return Err(StateError::DegenerateKilling);
        }
        let rc = lambda / b;
        if rc.im.abs() > NONREAL_TOL * rc.re.abs().max(1.0) {
            return Err(StateError::NonRealR { imag: rc.im });
        }
        Self::from_beta(beta, rc.re)
    }
}

/// Decides which eigenvalue spectrum, if any, β·K supports.
pub fn classify_spectrum(beta: &BetaVector) -> Result<SpectralClass, StateError> {
    let scale = beta.scale();
    let b = beta.killing_root();
    if b.norm() < DEGENERATE_TOL * scale {
        return Err(StateError::DegenerateKilling);
    }
    let bp = beta.beta_plus();
    if bp.norm() < BETA_PLUS_TOL * scale {
        // β₃ ≠ 0 here because B² = β₃² once β₊β₋ drops out.
        let modulus = (beta.beta_minus() / beta.beta3).norm();
        if (modulus - 1.0).abs() < BOUNDARY_TOL {
            return Err(StateError::BoundaryCase { modulus });
        }
        return Ok(if modulus < 1.0 {
            SpectralClass::BetaPlusZero
        } else {
            SpectralClass::Forbidden
        });
    }
    let sd = SpectralData::from_beta(beta, 0.0)?;
    let mod_plus = sd.tau_plus.norm();
    let mod_minus = sd.tau_minus.norm();
    for modulus in [mod_plus, mod_minus] {
        if (modulus - 1.0).abs() < BOUNDARY_TOL {
            return Err(StateError::BoundaryCase { modulus });
        }
    }
    Ok(match (mod_plus < 1.0, mod_minus < 1.0) {
        (true, true) => SpectralClass::ContinuousComplex,
        (true, false) => SpectralClass::DiscretePlus,
        (false, true) => SpectralClass::DiscreteMinus,
        (false, false) => SpectralClass::Forbidden,
    })
}

/// A normalizable eigenstate of β·K with its closed-form bookkeeping.
#[derive(Debug, Clone)]
pub struct AnalyticState {
    pub rep: Representation,
    /// Ladder index in λ = ±(k+l)B (or (k+l)β₃ for the β₊ = 0 family).
    pub l: u32,
    /// Spectral quantities; `None` for the β₊ = 0 family, where τ₋ is not finite.
    pub spectral: Option<SpectralData>,
    pub amps: FockVector,
    /// Closed-form normalization sum 𝒩 (amplitudes are stored unit-norm).
    pub norm_n: f64,
    /// Hypergeometric derivative ratio Θ; zero for l = 0 and for the β₊ = 0
    /// family, whose moment formulas use Υ instead.
    pub theta: f64,
    /// Ratio Υ, populated only for the β₊ = 0 family.
    pub upsilon: Option<f64>,
}

/// Builds the eigenstate of β·K for λ = sign·(k+l)·B.
///
/// λ is constructed from the classified spectrum rather than taken as input,
/// so r = λ/B is real by construction. Requested eigenvalues a discrete
/// spectrum does not contain are rejected as [`StateError::ForbiddenRegion`].
pub fn build_state_general(
    beta: &BetaVector,
    l: u32,
    sign: EigenvalueSign,
    rep: Representation,
    n_max: usize,
) -> Result<AnalyticState, StateError> {
    let class = classify_spectrum(beta)?;
    match (class, sign) {
        (SpectralClass::Forbidden, _) => {
            return Err(StateError::ForbiddenRegion {
                detail: "both roots lie outside the unit disk".into(),
            });
        }
        (SpectralClass::BetaPlusZero, _) => return Err(StateError::BetaPlusVanishes),
        (SpectralClass::DiscretePlus, EigenvalueSign::Minus) => {
            return Err(StateError::ForbiddenRegion {
                detail: "spectrum here is λ = +(k+l)B only".into(),
            });
        }
        (SpectralClass::DiscreteMinus, EigenvalueSign::Plus) => {
            return Err(StateError::ForbiddenRegion {
                detail: "spectrum here is λ = −(k+l)B only".into(),
            });
        }
        _ => {}
    }
    let k = rep.bargmann_k();
    let r = match sign {
        EigenvalueSign::Plus => k + l as f64,
        EigenvalueSign::Minus => -(k + l as f64),
    };
    let sd = SpectralData::from_beta(beta, r)?;

    // ln C̃ₙ = ½ ln[n!Γ(2k)/Γ(2k+n)] + ln|Pₙ| + n ln|−κ|, assembled in log
    // space because the Jacobi factor and the power run to huge magnitudes
    // separately while their product stays tame.
    let w = -sd.kappa;
    let ln_w = w.norm().ln();
    let arg_w = w.arg();
    let ln_g2k = specfun::ln_gamma(2.0 * k);
    let mut ln_mag = vec![f64::NEG_INFINITY; n_max + 1];
    let mut phases = vec![Complex64::new(0.0, 0.0); n_max + 1];
    for n in 0..=n_max {
        let nf = n as f64;
        let params = JacobiParams {
            n: n as u32,
            alpha: -k + r - nf,
            beta: -k - r - nf,
            x: sd.x,
        };
        let (jac_ln, jac_phase) = specfun::jacobi_poly_ln(&params);
        if jac_ln == f64::NEG_INFINITY {
            continue;
        }
        ln_mag[n] =
            0.5 * (specfun::ln_gamma(nf + 1.0) + ln_g2k - specfun::ln_gamma(2.0 * k + nf))
                + jac_ln
                + nf * ln_w;
        phases[n] = jac_phase * Complex64::from_polar(1.0, nf * arg_w);
    }
    let amps = amplitudes_from_log(&ln_mag, &phases);
    let amps = FockVector::from_amplitudes(rep, amps)?;

    let norm_n = closed_norm_discrete(&sd, k, l, sign)?;
    let theta = theta_ratio(&sd, rep, l)?;
    Ok(AnalyticState {
        rep,
        l,
        spectral: Some(sd),
        amps,
        norm_n,
        theta,
        upsilon: None,
    })
}

/// Builds the eigenstate for β₊ = 0, parameterized by the single root τ.
///
/// Amplitudes vanish below n = l and follow
/// Cₙ ∝ √(n!Γ(2k+n)) · (−τ)^{n−l}/(n−l)! above it.
pub fn build_state_beta_plus_zero(
    tau_plus: Complex64,
    l: u32,
    rep: Representation,
    n_max: usize,
) -> Result<AnalyticState, StateError> {
    let modulus = tau_plus.norm();
    if modulus >= 1.0 {
        return Err(StateError::TauOutOfDisk { modulus });
    }
    let k = rep.bargmann_k();
    let lf = l as f64;
    let ln_base = 0.5 * (specfun::ln_gamma(lf + 1.0) + specfun::ln_gamma(2.0 * k + lf));
    let arg = (-tau_plus).arg();
    let mut ln_mag = vec![f64::NEG_INFINITY; n_max + 1];
    let mut phases = vec![Complex64::new(0.0, 0.0); n_max + 1];
    for n in (l as usize)..=n_max {
        let nf = n as f64;
        let steps = nf - lf;
        if n > l as usize && modulus == 0.0 {
            break;
        }
        let ln_tau_pow = if n == l as usize { 0.0 } else { steps * modulus.ln() };
        ln_mag[n] = 0.5 * (specfun::ln_gamma(nf + 1.0) + specfun::ln_gamma(2.0 * k + nf))
            - ln_base
            + ln_tau_pow
            - specfun::ln_gamma(steps + 1.0);
        phases[n] = Complex64::from_polar(1.0, steps * arg);
    }
    let amps = amplitudes_from_log(&ln_mag, &phases);
    let amps = FockVector::from_amplitudes(rep, amps)?;

    let norm_n = specfun::hyp2f1(&HypergeometricArgs {
        a: lf + 1.0,
        b: lf + 2.0 * k,
        c: 1.0,
        z: modulus * modulus,
    })?;
    let upsilon = upsilon_ratio(tau_plus, l, rep)?;
    Ok(AnalyticState {
        rep,
        l,
        spectral: None,
        amps,
        norm_n,
        theta: 0.0,
        upsilon: Some(upsilon),
    })
}

/// Exponentiates log-magnitude/phase pairs against their common maximum.
fn amplitudes_from_log(ln_mag: &[f64], phases: &[Complex64]) -> Vec<Complex64> {
    let peak = ln_mag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ln_mag
        .iter()
        .zip(phases)
        .map(|(&ln, ph)| {
            if ln == f64::NEG_INFINITY {
                Complex64::new(0.0, 0.0)
            } else {
                ph * (ln - peak).exp()
            }
        })
        .collect()
}

/// Closed normalization 𝒩 = l!Γ(2k)/Γ(2k+l) · S_i^l S_{i'}^{−2k−l} ·
/// P_l^{(2k−1,0)}(1 + 2t/(S₊S₋)); (i,i') = (+,−) for r = k+l, (−,+) for
/// r = −(k+l). The integer power always lands on the S that can go negative.
///
/// Public because ⟨K₃⟩ is the logarithmic derivative of 𝒩 in the overall
/// coupling scale, which gives external verification code an independent
/// route to the mean.
pub fn closed_norm_discrete(
    sd: &SpectralData,
    k: f64,
    l: u32,
    sign: EigenvalueSign,
) -> Result<f64, StateError> {
    let lf = l as f64;
    let w = 1.0 + 2.0 * sd.t / (sd.s_plus * sd.s_minus);
    let pl = specfun::jacobi_poly(&JacobiParams {
        n: l,
        alpha: 2.0 * k - 1.0,
        beta: 0.0,
        x: Complex64::new(w, 0.0),
    });
    debug_assert!(pl.im.abs() <= 1e-10 * pl.re.abs().max(1.0));
    let prefactor =
        (specfun::ln_gamma(lf + 1.0) + specfun::ln_gamma(2.0 * k) - specfun::ln_gamma(2.0 * k + lf))
            .exp();
    let (s_int, s_real) = match sign {
        EigenvalueSign::Plus => (sd.s_plus, sd.s_minus),
        EigenvalueSign::Minus => (sd.s_minus, sd.s_plus),
    };
    let norm = prefactor * s_int.powi(l as i32) * s_real.powf(-2.0 * k - lf) * pl.re;
    debug_assert!(norm > 0.0, "normalization sum must be positive, got {norm}");
    Ok(norm)
}

/// Θ = F(k+r+1, k−r+1; 2k+1; z)/F(k+r, k−r; 2k; z) at z = −t/(S₊S₋),
/// evaluated through its terminating Jacobi form
/// Θ = (2k/l)·P_{l−1}^{(2k,1)}(w)/P_l^{(2k−1,0)}(w) at w = 1 + 2t/(S₊S₋);
/// zero for l = 0.
pub fn theta_ratio(sd: &SpectralData, rep: Representation, l: u32) -> Result<f64, StateError> {
    if l == 0 {
        return Ok(0.0);
    }
    let k = rep.bargmann_k();
    let w = Complex64::new(1.0 + 2.0 * sd.t / (sd.s_plus * sd.s_minus), 0.0);
    debug_assert!(w.re.is_finite());
    let num = specfun::jacobi_poly(&JacobiParams {
        n: l - 1,
        alpha: 2.0 * k,
        beta: 1.0,
        x: w,
    });
    let den = specfun::jacobi_poly(&JacobiParams {
        n: l,
        alpha: 2.0 * k - 1.0,
        beta: 0.0,
        x: w,
    });
    let theta = 2.0 * k / (l as f64) * (num / den).re;
    #[cfg(debug_assertions)]
    {
        // Cross-check against the hypergeometric ratio; both series terminate
        // because k − r or k + r is a non-positive integer offset.
        let z = -sd.t / (sd.s_plus * sd.s_minus);
        if let Ok(reference) = specfun::hyp2f1_derivative_ratio(&HypergeometricArgs {
            a: k + sd.r,
            b: k - sd.r,
            c: 2.0 * k,
            z,
        }) {
            debug_assert!(
                (theta - reference).abs() <= 1e-10 * reference.abs().max(1.0),
                "Jacobi and hypergeometric theta disagree: {theta} vs {reference}"
            );
        }
    }
    Ok(theta)
}

/// Υ = F(l+2, l+2k+1; 2; |τ|²)/F(l+1, l+2k; 1; |τ|²) for the β₊ = 0 family.
pub fn upsilon_ratio(tau_plus: Complex64, l: u32, rep: Representation) -> Result<f64, StateError> {
    let m2 = tau_plus.norm_sqr();
    if m2 >= 1.0 {
        return Err(StateError::TauOutOfDisk {
            modulus: tau_plus.norm(),
        });
    }
    let k = rep.bargmann_k();
    let lf = l as f64;
    let num = specfun::hyp2f1(&HypergeometricArgs {
        a: lf + 2.0,
        b: lf + 2.0 * k + 1.0,
        c: 2.0,
        z: m2,
    })?;
    let den = specfun::hyp2f1(&HypergeometricArgs {
        a: lf + 1.0,
        b: lf + 2.0 * k,
        c: 1.0,
        z: m2,
    })?;
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn k3_minus_chi_kplus(chi: Complex64) -> BetaVector {
        BetaVector::new(-chi, -Complex64::i() * chi, c(1.0, 0.0))
    }

    fn k3_plus_chi_kminus(chi: Complex64) -> BetaVector {
        BetaVector::new(chi, -Complex64::i() * chi, c(1.0, 0.0))
    }

    #[test]
    fn classification_covers_all_classes() {
        let beta = k3_minus_chi_kplus(c(0.5, 0.0));
        assert_eq!(classify_spectrum(&beta).unwrap(), SpectralClass::BetaPlusZero);

        let beta = BetaVector::new(c(0.0, 0.0), c(1.0, 0.0), Complex64::i());
        assert_eq!(classify_spectrum(&beta).unwrap(), SpectralClass::DiscretePlus);
        let b = beta.killing_root();
        assert_relative_eq!(b.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(b.im, 2.0_f64.sqrt(), max_relative = 1e-15);

        let beta = BetaVector::new(c(0.0, 0.0), c(1.0, 0.0), -Complex64::i());
        assert_eq!(classify_spectrum(&beta).unwrap(), SpectralClass::DiscreteMinus);

        let beta = BetaVector::new(c(0.6, 0.0), c(0.0, -1.0), c(0.0, 0.0));
        assert_eq!(
            classify_spectrum(&beta).unwrap(),
            SpectralClass::ContinuousComplex
        );
        let sd = SpectralData::from_beta(&beta, 1.25).unwrap();
        assert_relative_eq!(beta.killing_root().re, 0.8, max_relative = 1e-15);
        assert!((sd.tau_plus - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((sd.tau_minus - c(0.5, 0.0)).norm() < 1e-14);

        // Roots 2 and 3 reconstructed from their sum and product.
        let beta = BetaVector::new(c(7.0, 0.0), c(0.0, 5.0), c(5.0, 0.0));
        assert_eq!(classify_spectrum(&beta).unwrap(), SpectralClass::Forbidden);
        // β₊ = 0 with the root outside the disk is forbidden as well.
        let beta = k3_minus_chi_kplus(c(2.0, 0.0));
        assert_eq!(classify_spectrum(&beta).unwrap(), SpectralClass::Forbidden);
    }

    #[test]
    fn degenerate_and_boundary_are_rejected() {
        // η = 1 collapses B for the (ηK₁ − iK₂) pencil.
        let beta = BetaVector::new(c(1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0));
        assert!(matches!(
            classify_spectrum(&beta),
            Err(StateError::DegenerateKilling)
        ));

        let beta = k3_minus_chi_kplus(c(1.0, 0.0));
        assert!(matches!(
            classify_spectrum(&beta),
            Err(StateError::BoundaryCase { .. })
        ));

        // Roots 1 and 2: the inner root sits exactly on the circle.
        let beta = BetaVector::new(c(3.0, 0.0), c(0.0, 1.0), c(3.0, 0.0));
        assert!(matches!(
            classify_spectrum(&beta),
            Err(StateError::BoundaryCase { .. })
        ));
    }

    #[test]
    fn spectral_invariants_hold() {
        for beta in [
            BetaVector::new(c(0.0, 0.0), c(0.7, 0.0), Complex64::i()),
            BetaVector::new(c(0.35, 0.0), c(0.0, -1.0), c(0.0, 0.0)),
            k3_plus_chi_kminus(c(0.8, 0.6)),
        ] {
            let sd = SpectralData::from_beta(&beta, 0.75).unwrap();
            let b = beta.killing_root();
            let kappa_direct = -2.0 * b / (beta.beta1 + Complex64::i() * beta.beta2);
            assert!((sd.kappa - kappa_direct).norm() < 1e-13 * kappa_direct.norm());
            assert!((sd.kappa - (sd.tau_plus - sd.tau_minus)).norm() < 1e-13);
            assert_relative_eq!(sd.s_plus, 1.0 - sd.tau_minus.norm_sqr(), epsilon = 1e-14);
            assert_relative_eq!(sd.s_minus, 1.0 - sd.tau_plus.norm_sqr(), epsilon = 1e-14);
            // Root product identity τ₊τ₋ = β₋/β₊.
            let prod = sd.tau_plus * sd.tau_minus;
            let expect = beta.beta_minus() / beta.beta_plus();
            assert!((prod - expect).norm() <= 1e-13 * expect.norm().max(1.0));
        }
        // K₃ + χK₋ keeps the zero root exactly.
        let sd = SpectralData::from_beta(&k3_plus_chi_kminus(c(0.8, 0.0)), 0.25).unwrap();
        assert_eq!(sd.tau_plus, c(0.0, 0.0));
        assert_relative_eq!(sd.tau_minus.re, 1.25, max_relative = 1e-15);
        assert_eq!(sd.h, None);

        // The unimodular-product marker engages for the (ηK₂ + iK₃) pencil.
        let sd = SpectralData::from_beta(
            &BetaVector::new(c(0.0, 0.0), c(1.0, 0.0), Complex64::i()),
            1.25,
        )
        .unwrap();
        let h = sd.h.expect("|tau+ tau-| = 1 here");
        assert_relative_eq!(h, (1.0 + 2.0_f64.sqrt()).powi(2), max_relative = 1e-12);
        assert!(sd.y.abs() < 1e-12);
    }

    #[test]
    fn from_lambda_rejects_nonreal_ratio() {
        let beta = BetaVector::new(c(0.6, 0.0), c(0.0, -1.0), c(0.0, 0.0));
        let sd = SpectralData::from_lambda(&beta, c(1.0, 0.0)).unwrap();
        assert_relative_eq!(sd.r, 1.25, max_relative = 1e-14);
        assert!(matches!(
            SpectralData::from_lambda(&beta, c(0.0, 0.8)),
            Err(StateError::NonRealR { .. })
        ));
    }

    #[test]
    fn coherent_limit_matches_squeezed_vacuum_law() {
        // l = 0 member of the (ηK₂ + iK₃) pencil is an SU(1,1) coherent state
        // with ζ = −τ₊ = η/(1 + √(1+η²)); for k = 1/4 that is the squeezed
        // vacuum amplitude law. This pins the sign of the amplitude power.
        let eta = 0.7;
        let beta = BetaVector::new(c(0.0, 0.0), c(eta, 0.0), Complex64::i());
        let state =
            build_state_general(&beta, 0, EigenvalueSign::Plus, Representation::Even, 192)
                .unwrap();
        let zeta = eta / (1.0 + (1.0 + eta * eta).sqrt());
        let norm = (1.0 - zeta * zeta).powf(0.25);
        for n in 0..60 {
            let nf = n as f64;
            let ln_ratio = 0.5
                * (specfun::ln_gamma(nf + 0.5) - specfun::ln_gamma(nf + 1.0)
                    - specfun::ln_gamma(0.5));
            let expected = norm * ln_ratio.exp() * zeta.powi(n);
            let got = state.amps.amps[n as usize];
            assert!(
                (got - c(expected, 0.0)).norm() < 1e-10,
                "n = {n}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn finite_ladder_state_for_k3_plus_kminus() {
        // χ = 2 puts both roots inside the disk; the r = k+l state is still the
        // degree-l binomial ladder, frozen here for k = 1/4, l = 2.
        let state = build_state_general(
            &k3_plus_chi_kminus(c(2.0, 0.0)),
            2,
            EigenvalueSign::Plus,
            Representation::Even,
            64,
        )
        .unwrap();
        let c0 = (6.0 / 19.0_f64).sqrt();
        let c1 = (12.0 / 19.0_f64).sqrt();
        let c2 = (1.0 / 19.0_f64).sqrt();
        assert!((state.amps.amps[0] - c(c0, 0.0)).norm() < 1e-13);
        assert!((state.amps.amps[1] - c(c1, 0.0)).norm() < 1e-13);
        assert!((state.amps.amps[2] - c(c2, 0.0)).norm() < 1e-13);
        for n in 3..=64 {
            assert!(state.amps.amps[n].norm() < 1e-13, "n = {n} should vanish");
        }

        // Discrete side of the same family: χ = 0.8 truncates identically.
        let state = build_state_general(
            &k3_plus_chi_kminus(c(0.8, 0.0)),
            3,
            EigenvalueSign::Plus,
            Representation::Odd,
            64,
        )
        .unwrap();
        for n in 4..=64 {
            assert!(state.amps.amps[n].norm() < 1e-13, "n = {n} should vanish");
        }
    }

    #[test]
    fn closed_norm_matches_direct_summation() {
        // 𝒩 from the degree-l Jacobi closed form against the raw series
        // Σ n!Γ(2k)/Γ(2k+n)·|Pₙκⁿ|², summed term by term.
        let cases = [
            (
                BetaVector::new(c(0.35, 0.0), c(0.0, -1.0), c(0.0, 0.0)),
                Representation::Odd,
                2,
            ),
            (
                BetaVector::new(c(0.0, 0.0), c(0.7, 0.0), Complex64::i()),
                Representation::Even,
                3,
            ),
        ];
        for (beta, rep, l) in cases {
            let k = rep.bargmann_k();
            let state = build_state_general(&beta, l, EigenvalueSign::Plus, rep, 256).unwrap();
            let sd = state.spectral.unwrap();
            let mut direct = 0.0;
            for n in 0..200u32 {
                let nf = n as f64;
                let p = specfun::jacobi_poly(&JacobiParams {
                    n,
                    alpha: -k + sd.r - nf,
                    beta: -k - sd.r - nf,
                    x: sd.x,
                });
                let weight = (specfun::ln_gamma(nf + 1.0) + specfun::ln_gamma(2.0 * k)
                    - specfun::ln_gamma(2.0 * k + nf))
                .exp();
                direct += weight * p.norm_sqr() * sd.t.powi(n as i32);
            }
            assert_relative_eq!(state.norm_n, direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn beta_plus_zero_fock_limit_and_norms() {
        let state =
            build_state_beta_plus_zero(c(0.0, 0.0), 3, Representation::Odd, 32).unwrap();
        for (n, amp) in state.amps.amps.iter().enumerate() {
            if n == 3 {
                assert!((amp - c(1.0, 0.0)).norm() < 1e-15);
            } else {
                assert_eq!(amp.norm(), 0.0);
            }
        }
        assert_relative_eq!(state.norm_n, 1.0, max_relative = 1e-15);
        assert_relative_eq!(state.upsilon.unwrap(), 1.0, max_relative = 1e-15);

        // Hypergeometric 𝒩 against the Jacobi closed form and the direct sum.
        let tau = c(-0.3, 0.0);
        let (l, rep) = (1u32, Representation::Odd);
        let k = rep.bargmann_k();
        let state = build_state_beta_plus_zero(tau, l, rep, 128).unwrap();
        let m2 = tau.norm_sqr();
        let jacobi_form = (1.0 - m2).powf(-2.0 * k - l as f64)
            * specfun::jacobi_poly(&JacobiParams {
                n: l,
                alpha: 0.0,
                beta: 2.0 * k - 1.0,
                x: c((1.0 + m2) / (1.0 - m2), 0.0),
            })
            .re;
        assert_relative_eq!(state.norm_n, jacobi_form, max_relative = 1e-12);
        let lf = l as f64;
        let ln_base = specfun::ln_gamma(lf + 1.0) + specfun::ln_gamma(2.0 * k + lf);
        let mut direct = 0.0;
        for n in (l as usize)..400 {
            let nf = n as f64;
            let steps = nf - lf;
            direct += (specfun::ln_gamma(nf + 1.0) + specfun::ln_gamma(2.0 * k + nf)
                - ln_base
                - 2.0 * specfun::ln_gamma(steps + 1.0)
                + steps * m2.ln())
            .exp();
        }
        assert_relative_eq!(state.norm_n, direct, max_relative = 1e-10);
    }

    #[test]
    fn theta_jacobi_form_matches_hypergeometric_ratio() {
        let eta = 0.5_f64;
        let beta = BetaVector::new(c(eta, 0.0), c(0.0, -1.0), c(0.0, 0.0));
        for rep in [Representation::Even, Representation::Odd] {
            let k = rep.bargmann_k();
            assert_eq!(
                theta_ratio(&SpectralData::from_beta(&beta, k).unwrap(), rep, 0).unwrap(),
                0.0
            );
            for l in 1..=4u32 {
                let r = k + l as f64;
                let sd = SpectralData::from_beta(&beta, r).unwrap();
                let theta = theta_ratio(&sd, rep, l).unwrap();
                let z = -sd.t / (sd.s_plus * sd.s_minus);
                let reference = specfun::hyp2f1_derivative_ratio(&HypergeometricArgs {
                    a: k + r,
                    b: k - r,
                    c: 2.0 * k,
                    z,
                })
                .unwrap();
                assert_relative_eq!(theta, reference, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn upsilon_examples() {
        let rep = Representation::Even;
        let tau = c(0.3, -0.4);
        let upsilon = upsilon_ratio(tau, 0, rep).unwrap();
        assert_relative_eq!(upsilon, 1.0 / (1.0 - 0.25), max_relative = 1e-12);
        assert_relative_eq!(upsilon_ratio(c(0.0, 0.0), 4, rep).unwrap(), 1.0);
        assert!(matches!(
            upsilon_ratio(c(1.0, 0.0), 2, rep),
            Err(StateError::TauOutOfDisk { .. })
        ));
    }

    #[test]
    fn builders_reject_inadmissible_requests() {
        let forbidden = BetaVector::new(c(7.0, 0.0), c(0.0, 5.0), c(5.0, 0.0));
        assert!(matches!(
            build_state_general(&forbidden, 0, EigenvalueSign::Plus, Representation::Even, 64),
            Err(StateError::ForbiddenRegion { .. })
        ));

        // DiscretePlus pencil refuses the λ = −(k+l)B ladder.
        let beta = BetaVector::new(c(0.0, 0.0), c(1.0, 0.0), Complex64::i());
        assert!(matches!(
            build_state_general(&beta, 1, EigenvalueSign::Minus, Representation::Even, 64),
            Err(StateError::ForbiddenRegion { .. })
        ));

        let beta = k3_minus_chi_kplus(c(0.5, 0.0));
        assert!(matches!(
            build_state_general(&beta, 0, EigenvalueSign::Plus, Representation::Even, 64),
            Err(StateError::BetaPlusVanishes)
        ));

        assert!(matches!(
            build_state_beta_plus_zero(c(-1.2, 0.0), 0, Representation::Even, 64),
            Err(StateError::TauOutOfDisk { .. })
        ));
    }
}
