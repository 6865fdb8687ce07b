//! Two-stage parametric generation protocol and its conditional states.
//!
//! A degenerate parametric amplifier squeezes mode a of a two-mode vacuum,
//! a non-degenerate amplifier then mixes modes a and b, and an ideal
//! photon-number measurement on one output beam conditions the other onto
//! an eigenstate of a K₃/ladder pencil: measuring mode b leaves mode a in
//! an eigenstate of K₃ − χK₊, measuring mode a leaves mode b in a finite
//! eigenstate of K₃ + χK₋, in both cases with eigenvalue k + l, l = ⌊n/2⌋.
//! A final squeeze-and-phase transformation maps the conditional state onto
//! the K₂-K₃ or K₁-K₂ intelligent-state family, depending on |χ|.
//!
//! Any free-propagation phase picked up between the two amplifiers only
//! rotates the squeezing angle, so it is folded into `theta1`.

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{self, FockError, FockVector, OperatorKind, Representation};
use crate::moments::Family;

/// Hard ceiling on the per-mode photon cutoff reached by adaptive doubling.
pub const MAX_TWO_MODE_N: usize = 512;

/// Outcomes rarer than this are refused rather than renormalized.
const MIN_OUTCOME_PROB: f64 = 1e-300;

/// Per-step generator bound for the Taylor-stepped exponential action.
const EXPM_STEP_NORM: f64 = 4.0;

const EXPM_MAX_TERMS: usize = 64;

/// Agreement required between stored transform fields at validation.
const TRANSFORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("protocol parameter out of range: {detail}")]
    ParamOutOfRange { detail: String },
    #[error("mode-a measurement needs a nonzero mixing strength")]
    ZeroMixing,
    #[error("per-mode cutoff {n_photons} photons is too small: {detail}")]
    TruncationTooSmall { n_photons: usize, detail: String },
    #[error("outcome n = {n} has negligible probability {prob:.3e}")]
    NegligibleOutcome { n: u32, prob: f64 },
    #[error("post-transform fields are inconsistent: {detail}")]
    InconsistentTransform { detail: String },
    #[error("coupling magnitude 1 is the boundary between target families")]
    BoundaryCoupling,
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Which output beam the photon counter watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasuredMode {
    ModeA,
    ModeB,
}

/// Interaction strengths and measurement choice for one protocol run.
///
/// The Bogoliubov coefficients are μⱼ = cosh|ξⱼ| and νⱼ = sinh|ξⱼ|e^{iθⱼ},
/// so μⱼ² − |νⱼ|² = 1 holds by construction.
#[derive(Debug, Clone, Copy)]
pub struct SchemeParams {
    pub xi1_mag: f64,
    pub xi2_mag: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub measured_mode: MeasuredMode,
    pub n_measured: u32,
}

impl SchemeParams {
    pub fn new(
        xi1_mag: f64,
        xi2_mag: f64,
        theta1: f64,
        theta2: f64,
        measured_mode: MeasuredMode,
        n_measured: u32,
    ) -> Result<Self, SchemeError> {
        let p = SchemeParams { xi1_mag, xi2_mag, theta1, theta2, measured_mode, n_measured };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        for (name, v) in [("xi1_mag", self.xi1_mag), ("xi2_mag", self.xi2_mag)] {
            if !v.is_finite() || v < 0.0 {
                return Err(SchemeError::ParamOutOfRange {
                    detail: format!("{name} = {v} must be finite and nonnegative"),
                });
            }
        }
        for (name, v) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !v.is_finite() {
                return Err(SchemeError::ParamOutOfRange {
                    detail: format!("{name} = {v} must be finite"),
                });
            }
        }
        Ok(())
    }

    pub fn xi1(&self) -> Complex64 {
        Complex64::from_polar(self.xi1_mag, self.theta1)
    }

    pub fn xi2(&self) -> Complex64 {
        Complex64::from_polar(self.xi2_mag, self.theta2)
    }

    pub fn mu1(&self) -> f64 {
        self.xi1_mag.cosh()
    }

    pub fn nu1(&self) -> Complex64 {
        Complex64::from_polar(self.xi1_mag.sinh(), self.theta1)
    }

    pub fn mu2(&self) -> f64 {
        self.xi2_mag.cosh()
    }

    pub fn nu2(&self) -> Complex64 {
        Complex64::from_polar(self.xi2_mag.sinh(), self.theta2)
    }

    /// Ladder index of the conditional eigenvalue, l = ⌊n/2⌋.
    pub fn l(&self) -> u32 {
        self.n_measured / 2
    }

    /// Parity sector of the conditional state: even outcomes land on
    /// k = 1/4, odd outcomes on k = 3/4.
    pub fn rep(&self) -> Representation {
        if self.n_measured.is_multiple_of(2) {
            Representation::Even
        } else {
            Representation::Odd
        }
    }
}

/// Coupling χ of the conditional eigenvalue equation.
///
/// Measuring mode b gives χ = tanh|ξ₁|/cosh²|ξ₂|·e^{iθ₁}, always inside the
/// unit disk; measuring mode a gives χ = tanh|ξ₁|/sinh²|ξ₂|·e^{i(θ₁−2θ₂)},
/// which can take any magnitude and needs |ξ₂| > 0.
pub fn chi_from_params(p: &SchemeParams) -> Result<Complex64, SchemeError> {
    p.validate()?;
    match p.measured_mode {
        MeasuredMode::ModeB => {
            let mag = p.xi1_mag.tanh() / p.mu2().powi(2);
            Ok(Complex64::from_polar(mag, p.theta1))
        }
        MeasuredMode::ModeA => {
            if p.xi2_mag == 0.0 {
                return Err(SchemeError::ZeroMixing);
            }
            let mag = p.xi1_mag.tanh() / p.xi2_mag.sinh().powi(2);
            Ok(Complex64::from_polar(mag, p.theta1 - 2.0 * p.theta2))
        }
    }
}

/// Intelligent-state family the post-transform lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetFamily {
    K2K3,
    K1K2,
}

/// Phase shift and squeeze that turn a conditional state into an
/// intelligent state.
///
/// For |χ| < 1 the choice tanh ω = |χ| reaches the K₂-K₃ family with
/// η = sinh ω; for a mode-a measurement with |χ| > 1 the choice
/// coth ω = |χ| reaches the K₁-K₂ family with η = 1/cosh ω ∈ (0, 1).
/// The measured mode fixes the sign of both exponentials.
#[derive(Debug, Clone, Copy)]
pub struct PostTransform {
    pub mode: MeasuredMode,
    pub phi: f64,
    pub omega: f64,
    pub eta: f64,
    pub family: TargetFamily,
}

impl PostTransform {
    /// Derives the transform for a conditional state with coupling `chi`.
    pub fn for_outcome(mode: MeasuredMode, chi: Complex64) -> Result<Self, SchemeError> {
        let mag = chi.norm();
        if !mag.is_finite() {
            return Err(SchemeError::ParamOutOfRange {
                detail: format!("coupling magnitude {mag} must be finite"),
            });
        }
        let phi = if mag == 0.0 { 0.0 } else { chi.arg() };
        if mag < 1.0 {
            return Ok(PostTransform {
                mode,
                phi,
                omega: mag.atanh(),
                eta: mag / (1.0 - mag * mag).sqrt(),
                family: TargetFamily::K2K3,
            });
        }
        match mode {
            MeasuredMode::ModeB => Err(SchemeError::InconsistentTransform {
                detail: format!("mode-b coupling magnitude {mag} must lie inside the unit disk"),
            }),
            MeasuredMode::ModeA if mag == 1.0 => Err(SchemeError::BoundaryCoupling),
            MeasuredMode::ModeA => Ok(PostTransform {
                mode,
                phi,
                omega: mag.recip().atanh(),
                eta: (mag * mag - 1.0).sqrt() / mag,
                family: TargetFamily::K1K2,
            }),
        }
    }

    /// Derives the transform straight from protocol parameters.
    pub fn from_scheme(p: &SchemeParams) -> Result<Self, SchemeError> {
        Self::for_outcome(p.measured_mode, chi_from_params(p)?)
    }

    /// Checks the stored fields against the family's defining relations.
    pub fn validate(&self) -> Result<(), SchemeError> {
        let detail = match self.family {
            TargetFamily::K2K3 => {
                if self.omega < 0.0 || !self.omega.is_finite() {
                    Some(format!("K2K3 squeeze ω = {} must be finite and ≥ 0", self.omega))
                } else if (self.eta - self.omega.sinh()).abs() > TRANSFORM_TOL * self.eta.max(1.0)
                {
                    Some(format!("K2K3 needs η = sinh ω, got η = {}, ω = {}", self.eta, self.omega))
                } else {
                    None
                }
            }
            TargetFamily::K1K2 => {
                if self.mode != MeasuredMode::ModeA {
                    Some("only mode-a measurements reach the K1K2 family".into())
                } else if !(self.eta > 0.0 && self.eta < 1.0) {
                    Some(format!("K1K2 needs 0 < η < 1, got η = {}", self.eta))
                } else if (self.eta * self.omega.cosh() - 1.0).abs() > TRANSFORM_TOL {
                    Some(format!("K1K2 needs η cosh ω = 1, got η = {}, ω = {}", self.eta, self.omega))
                } else {
                    None
                }
            }
        };
        if !self.phi.is_finite() {
            return Err(SchemeError::InconsistentTransform {
                detail: format!("phase φ = {} must be finite", self.phi),
            });
        }
        match detail {
            Some(detail) => Err(SchemeError::InconsistentTransform { detail }),
            None => Ok(()),
        }
    }

    /// Moment-report family of the transformed state; `None` for the
    /// degenerate η = 0 case (a bare number state, pure K₃ eigenstate).
    pub fn target_family(&self) -> Option<Family> {
        match self.family {
            TargetFamily::K2K3 => (self.eta > 0.0).then_some(Family::K2K3 { eta: self.eta }),
            TargetFamily::K1K2 => Some(Family::K1K2 { eta: self.eta }),
        }
    }
}

/// Conditional state left in the unmeasured mode, with its outcome
/// probability and the norm of the defining-equation residual.
#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    pub state: FockVector,
    pub probability: f64,
    pub residual: f64,
}

/// Two-mode amplitude grid, row-major over (n_a, n_b) with per-mode
/// dimension `dim`.
#[derive(Debug, Clone)]
struct TwoModeGrid {
    dim: usize,
    amps: Vec<Complex64>,
}

impl TwoModeGrid {
    fn at(&self, na: usize, nb: usize) -> Complex64 {
        self.amps[na * self.dim + nb]
    }

    /// Probability mass with either index strictly above 0.9·(dim − 1).
    fn tail_mass(&self) -> f64 {
        let cut = (0.9 * (self.dim - 1) as f64).floor() as usize;
        let mut mass = 0.0;
        for na in 0..self.dim {
            for nb in 0..self.dim {
                if na > cut || nb > cut {
                    mass += self.at(na, nb).norm_sqr();
                }
            }
        }
        mass
    }
}

/// y = exp(G)x by equal Taylor steps sized so each step's 1-norm stays at
/// or below [`EXPM_STEP_NORM`]; `norm1` must bound ‖G‖₁ from above. All
/// generators used here are anti-Hermitian, so every step is unitary on
/// the truncated space and factorial decay certifies each partial sum.
fn expm_apply<F>(apply: F, norm1: f64, x: &[Complex64]) -> Vec<Complex64>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let steps = (norm1 / EXPM_STEP_NORM).ceil().max(1.0) as usize;
    let inv = (steps as f64).recip();
    let floor = 1e-17 * x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut v = x.to_vec();
    for _ in 0..steps {
        let mut acc = v.clone();
        let mut term = v;
        let mut converged = false;
        for j in 1..=EXPM_MAX_TERMS {
            term = apply(&term);
            let scale = inv / j as f64;
            let mut tn = 0.0;
            for t in term.iter_mut() {
                *t *= scale;
                tn += t.norm_sqr();
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += *t;
            }
            if tn.sqrt() <= floor {
                converged = true;
                break;
            }
        }
        debug_assert!(converged, "exponential Taylor step did not converge");
        v = acc;
    }
    v
}

/// Applies the single-mode squeeze exp(½ξ₁a†² − ½ξ₁*a²) to the vacuum.
fn squeezed_mode_a(p: &SchemeParams, dim: usize) -> Vec<Complex64> {
    let half = 0.5 * p.xi1();
    let halfc = 0.5 * p.xi1().conj();
    let apply = |x: &[Complex64]| {
        let mut y = vec![Complex64::new(0.0, 0.0); dim];
        for (i, yi) in y.iter_mut().enumerate() {
            if i >= 2 {
                *yi += half * (((i - 1) * i) as f64).sqrt() * x[i - 2];
            }
            if i + 2 < dim {
                *yi -= halfc * (((i + 1) * (i + 2)) as f64).sqrt() * x[i + 2];
            }
        }
        y
    };
    let mut vac = vec![Complex64::new(0.0, 0.0); dim];
    vac[0] = Complex64::new(1.0, 0.0);
    expm_apply(apply, p.xi1_mag * (dim as f64 + 1.0), &vac)
}

/// Full two-mode output: squeeze mode a, then mix with exp(ξ₂a†b† − ξ₂*ab).
fn two_mode_output(p: &SchemeParams, dim: usize) -> TwoModeGrid {
    let va = squeezed_mode_a(p, dim);
    let mut amps = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (na, &a) in va.iter().enumerate() {
        amps[na * dim] = a;
    }
    let xi2 = p.xi2();
    let xi2c = xi2.conj();
    let apply = |x: &[Complex64]| {
        let mut y = vec![Complex64::new(0.0, 0.0); dim * dim];
        for na in 0..dim {
            for nb in 0..dim {
                let mut v = Complex64::new(0.0, 0.0);
                if na >= 1 && nb >= 1 {
                    v += xi2 * ((na * nb) as f64).sqrt() * x[(na - 1) * dim + (nb - 1)];
                }
                if na + 1 < dim && nb + 1 < dim {
                    v -= xi2c * (((na + 1) * (nb + 1)) as f64).sqrt() * x[(na + 1) * dim + (nb + 1)];
                }
                y[na * dim + nb] = v;
            }
        }
        y
    };
    let mut amps = expm_apply(apply, 2.0 * p.xi2_mag * dim as f64, &amps);
    // both steps are unitary up to Taylor rounding; pin the norm back to one
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    TwoModeGrid { dim, amps }
}

/// Photon-basis amplitudes of the unmeasured mode at measured outcome n,
/// with the raw outcome probability.
fn conditional_slice(grid: &TwoModeGrid, mode: MeasuredMode, n: usize) -> (Vec<Complex64>, f64) {
    let photon: Vec<Complex64> = match mode {
        MeasuredMode::ModeB => (0..grid.dim).map(|na| grid.at(na, n)).collect(),
        MeasuredMode::ModeA => (0..grid.dim).map(|nb| grid.at(n, nb)).collect(),
    };
    let prob = photon.iter().map(|c| c.norm_sqr()).sum();
    (photon, prob)
}

/// Packs a photon-basis vector into the parity sector of outcome n. The
/// mixer conserves n_a − n_b, so opposite-parity entries vanish exactly.
fn pack_sector(photon: &[Complex64], n: usize) -> Vec<Complex64> {
    let sigma = n % 2;
    let out: Vec<Complex64> = photon[sigma..].iter().step_by(2).copied().collect();
    debug_assert!(
        photon[1 - sigma..].iter().step_by(2).all(|c| c.norm_sqr() == 0.0),
        "conditional state leaked into the wrong parity sector"
    );
    out
}

/// ‖(O − n)ψ‖ for the defining operator O = N − 2χK₊ (mode-b measurement)
/// or O = N + 2χK₋ (mode-a), evaluated on a two-entry extension so ladder
/// outflow at the cutoff is counted against the state.
fn conditional_residual(
    state: &FockVector,
    mode: MeasuredMode,
    chi: Complex64,
    n: u32,
) -> Result<f64, SchemeError> {
    let ext = state.amps.len() + 2;
    let mut x = state.amps.clone();
    x.resize(ext, Complex64::new(0.0, 0.0));
    let nop = fock::build_operator(state.rep, OperatorKind::N, ext - 1)?;
    let (kind, coef) = match mode {
        MeasuredMode::ModeB => (OperatorKind::KPlus, -2.0 * chi),
        MeasuredMode::ModeA => (OperatorKind::KMinus, 2.0 * chi),
    };
    let ladder = fock::build_operator(state.rep, kind, ext - 1)?;
    let ni = nop.matrix.apply(&x);
    let li = ladder.matrix.apply(&x);
    let nf = n as f64;
    let mut sq = 0.0;
    for i in 0..ext {
        sq += (ni[i] + coef * li[i] - nf * x[i]).norm_sqr();
    }
    Ok(sq.sqrt())
}

/// Runs the protocol at per-mode cutoff `n_max` photons and conditions on
/// the configured outcome.
///
/// The cutoff doubles (up to [`MAX_TWO_MODE_N`] or `n_max`, whichever is
/// larger) until the grid tail, the conditional tail, and the
/// defining-equation residual all certify; failure past the ceiling is
/// reported, never silenced.
pub fn simulate_protocol(p: &SchemeParams, n_max: usize) -> Result<ProtocolOutcome, SchemeError> {
    p.validate()?;
    let chi = chi_from_params(p)?;
    let n = p.n_measured as usize;
    let limit = n_max.max(MAX_TWO_MODE_N);
    let mut dim = (n_max + 1).max(n + 9);
    loop {
        let grow = |dim: usize| (2 * (dim - 1)).min(limit) + 1;
        let can_grow = dim - 1 < limit;
        let grid = two_mode_output(p, dim);
        let tail = grid.tail_mass();
        if tail >= fock::TAIL_TOL {
            if !can_grow {
                return Err(SchemeError::TruncationTooSmall {
                    n_photons: dim - 1,
                    detail: format!("two-mode edge mass {tail:.3e}"),
                });
            }
            dim = grow(dim);
            continue;
        }
        let (photon, prob) = conditional_slice(&grid, p.measured_mode, n);
        if prob < MIN_OUTCOME_PROB {
            return Err(SchemeError::NegligibleOutcome { n: p.n_measured, prob });
        }
        let state = match FockVector::from_amplitudes(p.rep(), pack_sector(&photon, n)) {
            Ok(state) => state,
            Err(FockError::TruncationTooSmall { .. }) if can_grow => {
                dim = grow(dim);
                continue;
            }
            Err(err) => return Err(err.into()),
        };
        let residual = conditional_residual(&state, p.measured_mode, chi, p.n_measured)?;
        if residual >= fock::RESIDUAL_TOL {
            if !can_grow {
                return Err(SchemeError::TruncationTooSmall {
                    n_photons: dim - 1,
                    detail: format!("conditional residual {residual:.3e}"),
                });
            }
            dim = grow(dim);
            continue;
        }
        return Ok(ProtocolOutcome { state, probability: prob, residual });
    }
}

/// Marginal photon-number distribution of the measured mode.
///
/// The returned vector covers n = 0..cutoff; its sum lands in
/// [1 − 1e−10, 1] once the grid tail certifies.
pub fn outcome_distribution(p: &SchemeParams, n_max: usize) -> Result<Vec<f64>, SchemeError> {
    p.validate()?;
    let limit = n_max.max(MAX_TWO_MODE_N);
    let mut dim = n_max + 1;
    let grid = loop {
        let grid = two_mode_output(p, dim);
        let tail = grid.tail_mass();
        if tail < fock::TAIL_TOL {
            break grid;
        }
        if dim > limit {
            return Err(SchemeError::TruncationTooSmall {
                n_photons: dim - 1,
                detail: format!("two-mode edge mass {tail:.3e}"),
            });
        }
        dim = (2 * (dim - 1)).min(limit) + 1;
    };
    let mut probs = vec![0.0; grid.dim];
    for na in 0..grid.dim {
        for nb in 0..grid.dim {
            let m = grid.at(na, nb).norm_sqr();
            match p.measured_mode {
                MeasuredMode::ModeA => probs[na] += m,
                MeasuredMode::ModeB => probs[nb] += m,
            }
        }
    }
    // the grid is unit-norm, so only summation rounding can push past one
    let total: f64 = probs.iter().sum();
    if total > 1.0 {
        for q in &mut probs {
            *q /= total;
        }
    }
    debug_assert!(total >= 1.0 - 1e-10);
    Ok(probs)
}

/// Applies exp(∓iωK₂)·exp(∓iφK₃) to a conditional state (upper signs for
/// a mode-b measurement, lower for mode-a).
///
/// The state is zero-padded before the squeeze so spilled amplitude is
/// kept; the tail certification of the returned vector reports honestly
/// when the padding cannot hold the result.
pub fn apply_post_transform(
    state: &FockVector,
    pt: &PostTransform,
) -> Result<FockVector, SchemeError> {
    pt.validate()?;
    let sgn = match pt.mode {
        MeasuredMode::ModeB => -1.0,
        MeasuredMode::ModeA => 1.0,
    };
    let k = state.rep.bargmann_k();
    let len = (2 * state.amps.len()).max(24);
    let mut amps = state.amps.clone();
    amps.resize(len, Complex64::new(0.0, 0.0));
    for (m, a) in amps.iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, sgn * pt.phi * (m as f64 + k));
    }
    let k2 = fock::build_operator(state.rep, OperatorKind::K2, len - 1)?;
    let gain = Complex64::new(0.0, sgn * pt.omega);
    let apply = |x: &[Complex64]| {
        let mut y = k2.matrix.apply(x);
        for c in &mut y {
            *c *= gain;
        }
        y
    };
    let out = expm_apply(apply, pt.omega * (len as f64 + 2.0), &amps);
    Ok(FockVector::from_amplitudes(state.rep, out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{self, EigenvalueSign};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(
        xi1: f64,
        xi2: f64,
        theta1: f64,
        theta2: f64,
        mode: MeasuredMode,
        n: u32,
    ) -> SchemeParams {
        SchemeParams::new(xi1, xi2, theta1, theta2, mode, n).unwrap()
    }

    /// ‖(β·K − λ)ψ‖ on a two-entry extension of ψ.
    fn pencil_residual(state: &FockVector, family: Family, l: u32) -> f64 {
        let beta = family.beta();
        let lambda = family.eigenvalue(state.rep, l);
        let ext = state.amps.len() + 2;
        let mut x = state.amps.clone();
        x.resize(ext, c(0.0, 0.0));
        let k1 = fock::build_operator(state.rep, OperatorKind::K1, ext - 1).unwrap();
        let k2 = fock::build_operator(state.rep, OperatorKind::K2, ext - 1).unwrap();
        let k3 = fock::build_operator(state.rep, OperatorKind::K3, ext - 1).unwrap();
        let i1 = k1.matrix.apply(&x);
        let i2 = k2.matrix.apply(&x);
        let i3 = k3.matrix.apply(&x);
        let b = [beta.beta1, beta.beta2, beta.beta3];
        (0..ext)
            .map(|m| (b[0] * i1[m] + b[1] * i2[m] + b[2] * i3[m] - lambda * x[m]).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn params_validate_and_derive() {
        assert!(SchemeParams::new(-0.1, 0.5, 0.0, 0.0, MeasuredMode::ModeB, 0).is_err());
        assert!(SchemeParams::new(0.1, f64::NAN, 0.0, 0.0, MeasuredMode::ModeB, 0).is_err());
        let p = params(0.7, 0.4, 1.2, -0.3, MeasuredMode::ModeA, 5);
        assert_relative_eq!(p.mu1() * p.mu1() - p.nu1().norm_sqr(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(p.mu2() * p.mu2() - p.nu2().norm_sqr(), 1.0, max_relative = 1e-12);
        assert_eq!(p.l(), 2);
        assert_eq!(p.rep(), Representation::Odd);
        assert_eq!(params(0.7, 0.4, 0.0, 0.0, MeasuredMode::ModeB, 4).rep(), Representation::Even);
    }

    #[test]
    fn chi_maps_follow_the_coupling_formulas() {
        let p = params(1.0, 1.0, 0.0, 0.0, MeasuredMode::ModeB, 0);
        let chi = chi_from_params(&p).unwrap();
        assert_relative_eq!(chi.re, 1.0_f64.tanh() / 1.0_f64.cosh().powi(2), max_relative = 1e-15);
        assert_relative_eq!(chi.re, 0.319_850_004_224_612_2, max_relative = 1e-12);
        assert_eq!(chi.im, 0.0);

        let p = params(1.0, 1.0, 0.3, 0.1, MeasuredMode::ModeA, 0);
        let chi = chi_from_params(&p).unwrap();
        assert_relative_eq!(chi.norm(), 1.0_f64.tanh() / 1.0_f64.sinh().powi(2), max_relative = 1e-14);
        assert_relative_eq!(chi.arg(), 0.1, max_relative = 1e-12);

        assert!(matches!(
            chi_from_params(&params(1.0, 0.0, 0.0, 0.0, MeasuredMode::ModeA, 0)),
            Err(SchemeError::ZeroMixing)
        ));
        // ξ₁ = 0 collapses the coupling for either measured mode
        let p = params(0.0, 0.9, 0.4, 0.2, MeasuredMode::ModeB, 2);
        assert_eq!(chi_from_params(&p).unwrap(), c(0.0, 0.0));
        // mode-b couplings stay inside the unit disk even at strong drive
        // (tanh saturates to 1.0 in f64 near ξ₁ ≈ 19.4, past any physical use)
        for xi1 in [0.5, 5.0, 18.0] {
            let p = params(xi1, 0.0, 0.0, 0.0, MeasuredMode::ModeB, 0);
            assert!(chi_from_params(&p).unwrap().norm() < 1.0);
        }
    }

    #[test]
    fn twin_beam_limit_reproduces_number_states() {
        // no squeeze: perfect photon-number correlation between the beams
        let p = params(0.0, 0.8, 0.0, 0.0, MeasuredMode::ModeB, 3);
        let out = simulate_protocol(&p, 64).unwrap();
        assert_eq!(out.state.rep, Representation::Odd);
        assert_relative_eq!(out.state.amps[1].re, 1.0, max_relative = 1e-12);
        let nu = 0.8_f64.sinh();
        let mu = 0.8_f64.cosh();
        assert_relative_eq!(out.probability, nu.powi(6) / mu.powi(8), max_relative = 1e-10);
        assert!(out.residual < 1e-10);
    }

    #[test]
    fn outcome_distribution_matches_twin_beam_law() {
        let p = params(0.0, 0.8, 0.0, 0.0, MeasuredMode::ModeB, 0);
        let probs = outcome_distribution(&p, 64).unwrap();
        let nu2 = 0.8_f64.sinh().powi(2);
        let mu2 = 0.8_f64.cosh().powi(2);
        for (n, &q) in probs.iter().take(12).enumerate() {
            assert_relative_eq!(q, nu2.powi(n as i32) / mu2.powi(n as i32 + 1), max_relative = 1e-10);
        }
        let total: f64 = probs.iter().sum();
        assert!((1.0 - 1e-10..=1.0).contains(&total));

        // no mixing leaves mode b in vacuum
        let p = params(0.6, 0.0, 0.0, 0.0, MeasuredMode::ModeB, 0);
        let probs = outcome_distribution(&p, 64).unwrap();
        assert_relative_eq!(probs[0], 1.0, max_relative = 1e-12);

        // the marginal agrees with per-outcome simulation
        let p = params(0.5, 0.8, 0.7, 0.0, MeasuredMode::ModeB, 0);
        let probs = outcome_distribution(&p, 64).unwrap();
        for n in [0u32, 1, 2, 3] {
            let q = params(0.5, 0.8, 0.7, 0.0, MeasuredMode::ModeB, n);
            let out = simulate_protocol(&q, 64).unwrap();
            assert_relative_eq!(probs[n as usize], out.probability, max_relative = 1e-11);
        }
    }

    #[test]
    fn vacuum_conditions_propagate_through_the_chain() {
        // the identity only certifies once the grid holds the state with
        // room to spare; 128 photons per mode is the standard cutoff
        let p = params(0.5, 0.8, 0.7, -0.4, MeasuredMode::ModeB, 0);
        let dim = 129;
        let grid = two_mode_output(&p, dim);
        let (m1, n1) = (p.mu1(), p.nu1());
        let (m2, n2) = (p.mu2(), p.nu2());
        // image of a under conjugation by the full chain
        let mut ra = 0.0;
        let mut rb = 0.0;
        for na in 0..dim {
            for nb in 0..dim {
                let mut va = c(0.0, 0.0);
                // μ₁μ₂ a
                if na + 1 < dim {
                    va += m1 * m2 * ((na + 1) as f64).sqrt() * grid.at(na + 1, nb);
                }
                // ν₁ν₂* b
                if nb + 1 < dim {
                    va += n1 * n2.conj() * ((nb + 1) as f64).sqrt() * grid.at(na, nb + 1);
                }
                // −ν₁μ₂ a†
                if na >= 1 {
                    va -= n1 * m2 * (na as f64).sqrt() * grid.at(na - 1, nb);
                }
                // −μ₁ν₂ b†
                if nb >= 1 {
                    va -= m1 * n2 * (nb as f64).sqrt() * grid.at(na, nb - 1);
                }
                ra += va.norm_sqr();

                let mut vb = c(0.0, 0.0);
                // μ₂ b − ν₂ a†
                if nb + 1 < dim {
                    vb += m2 * ((nb + 1) as f64).sqrt() * grid.at(na, nb + 1);
                }
                if na >= 1 {
                    vb -= n2 * (na as f64).sqrt() * grid.at(na - 1, nb);
                }
                rb += vb.norm_sqr();
            }
        }
        assert!(ra.sqrt() < 1e-8, "mode-a vacuum condition residual {}", ra.sqrt());
        assert!(rb.sqrt() < 1e-8, "mode-b vacuum condition residual {}", rb.sqrt());

        // mixing conserves n_a − n_b, so nothing lives below the diagonal
        for na in 0..dim {
            for nb in 0..dim {
                if nb > na || (na - nb) % 2 == 1 {
                    assert_eq!(grid.at(na, nb).norm_sqr(), 0.0);
                }
            }
        }
    }

    #[test]
    fn conditional_states_solve_their_eigenvalue_equations() {
        // mode-b outcome: infinite ladder eigenstate of K₃ − χK₊
        let p = params(0.5, 0.8, 0.7, 0.0, MeasuredMode::ModeB, 2);
        let chi = chi_from_params(&p).unwrap();
        let out = simulate_protocol(&p, 64).unwrap();
        assert!(out.residual < 1e-8);
        let analytic =
            states::build_state_beta_plus_zero(-chi, p.l(), p.rep(), out.state.n_max()).unwrap();
        assert!(out.state.fidelity(&analytic.amps) > 1.0 - 1e-8);

        // mode-a outcome: finite ladder eigenstate of K₃ + χK₋
        let p = params(0.9, 0.35, 0.3, 0.5, MeasuredMode::ModeA, 2);
        let chi = chi_from_params(&p).unwrap();
        assert!(chi.norm() > 1.0);
        let out = simulate_protocol(&p, 64).unwrap();
        assert!(out.residual < 1e-8);
        let fam = Family::K3PlusChiKMinus { chi };
        let analytic =
            states::build_state_general(&fam.beta(), p.l(), EigenvalueSign::Plus, p.rep(), 32)
                .unwrap();
        assert!(out.state.fidelity(&analytic.amps) > 1.0 - 1e-8);
        // support ends at the measured photon number
        for (m, a) in out.state.amps.iter().enumerate() {
            if 2 * m > 2 {
                assert_eq!(a.norm_sqr(), 0.0);
            }
        }
    }

    #[test]
    fn negligible_and_impossible_outcomes_are_refused() {
        // without mixing, mode b never holds photons
        let p = params(0.6, 0.0, 0.0, 0.0, MeasuredMode::ModeB, 2);
        assert!(matches!(
            simulate_protocol(&p, 64),
            Err(SchemeError::NegligibleOutcome { n: 2, .. })
        ));
        // and outcome zero leaves the squeezed vacuum itself
        let p = params(0.6, 0.0, 0.0, 0.0, MeasuredMode::ModeB, 0);
        let out = simulate_protocol(&p, 64).unwrap();
        let analytic = states::build_state_beta_plus_zero(
            -c(0.6_f64.tanh(), 0.0),
            0,
            Representation::Even,
            out.state.n_max(),
        )
        .unwrap();
        assert!(out.state.fidelity(&analytic.amps) > 1.0 - 1e-10);
    }

    #[test]
    fn truncation_ceiling_is_reported() {
        // tanh(3) is so close to the disk edge that even the ceiling cutoff
        // cannot hold the conditional ladder
        let p = params(3.0, 0.0, 0.0, 0.0, MeasuredMode::ModeB, 0);
        assert!(matches!(
            simulate_protocol(&p, 64),
            Err(SchemeError::TruncationTooSmall { n_photons: 512, .. })
        ));
    }

    #[test]
    fn post_transform_parameters_follow_the_coupling() {
        let pt = PostTransform::for_outcome(MeasuredMode::ModeB, c(0.5, 0.0)).unwrap();
        assert_eq!(pt.family, TargetFamily::K2K3);
        assert_relative_eq!(pt.eta, 0.577_350_269_189_625_8, max_relative = 1e-12);
        assert_relative_eq!(pt.omega.tanh(), 0.5, max_relative = 1e-12);
        assert!(pt.validate().is_ok());
        assert_eq!(pt.target_family(), Some(Family::K2K3 { eta: pt.eta }));

        let pt = PostTransform::for_outcome(MeasuredMode::ModeA, c(0.0, 2.0)).unwrap();
        assert_eq!(pt.family, TargetFamily::K1K2);
        assert_relative_eq!(pt.eta, 3.0_f64.sqrt() / 2.0, max_relative = 1e-12);
        assert_relative_eq!(1.0 / pt.omega.tanh(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(pt.phi, std::f64::consts::FRAC_PI_2, max_relative = 1e-12);
        assert!(pt.validate().is_ok());

        let pt = PostTransform::for_outcome(MeasuredMode::ModeA, c(0.3, 0.0)).unwrap();
        assert_eq!(pt.family, TargetFamily::K2K3);

        assert!(matches!(
            PostTransform::for_outcome(MeasuredMode::ModeA, c(1.0, 0.0)),
            Err(SchemeError::BoundaryCoupling)
        ));
        assert!(matches!(
            PostTransform::for_outcome(MeasuredMode::ModeB, c(1.2, 0.0)),
            Err(SchemeError::InconsistentTransform { .. })
        ));
    }

    #[test]
    fn inconsistent_transforms_are_rejected() {
        let mut pt = PostTransform::for_outcome(MeasuredMode::ModeB, c(0.5, 0.0)).unwrap();
        pt.eta += 1e-3;
        assert!(matches!(pt.validate(), Err(SchemeError::InconsistentTransform { .. })));

        let mut pt = PostTransform::for_outcome(MeasuredMode::ModeA, c(2.0, 0.0)).unwrap();
        pt.mode = MeasuredMode::ModeB;
        assert!(matches!(pt.validate(), Err(SchemeError::InconsistentTransform { .. })));

        let mut pt = PostTransform::for_outcome(MeasuredMode::ModeA, c(2.0, 0.0)).unwrap();
        pt.eta = 1.5;
        assert!(matches!(pt.validate(), Err(SchemeError::InconsistentTransform { .. })));
    }

    #[test]
    fn zero_transform_is_the_identity() {
        let p = params(0.5, 0.8, 0.0, 0.0, MeasuredMode::ModeB, 2);
        let out = simulate_protocol(&p, 64).unwrap();
        let pt = PostTransform {
            mode: MeasuredMode::ModeB,
            phi: 0.0,
            omega: 0.0,
            eta: 0.0,
            family: TargetFamily::K2K3,
        };
        let moved = apply_post_transform(&out.state, &pt).unwrap();
        for (m, a) in out.state.amps.iter().enumerate() {
            assert_abs_diff_eq!(moved.amps[m].re, a.re, epsilon = 1e-14);
            assert_abs_diff_eq!(moved.amps[m].im, a.im, epsilon = 1e-14);
        }
        assert_eq!(pt.target_family(), None);
    }

    #[test]
    fn post_transform_lands_on_intelligent_states() {
        // mode-b pipeline → K₂-K₃ family
        let p = params(0.5, 0.8, 0.7, 0.0, MeasuredMode::ModeB, 2);
        let out = simulate_protocol(&p, 64).unwrap();
        let pt = PostTransform::from_scheme(&p).unwrap();
        let bar = apply_post_transform(&out.state, &pt).unwrap();
        let fam = pt.target_family().unwrap();
        assert!(pencil_residual(&bar, fam, p.l()) < 1e-8);
        let analytic =
            states::build_state_general(&fam.beta(), p.l(), EigenvalueSign::Plus, p.rep(), 96)
                .unwrap();
        assert!(bar.fidelity(&analytic.amps) > 1.0 - 1e-8);

        // mode-a pipeline with |χ| > 1 → K₁-K₂ family
        let p = params(0.9, 0.35, 0.3, 0.5, MeasuredMode::ModeA, 2);
        let out = simulate_protocol(&p, 64).unwrap();
        let pt = PostTransform::from_scheme(&p).unwrap();
        assert_eq!(pt.family, TargetFamily::K1K2);
        let bar = apply_post_transform(&out.state, &pt).unwrap();
        let fam = pt.target_family().unwrap();
        assert!(pencil_residual(&bar, fam, p.l()) < 1e-8);
        let analytic =
            states::build_state_general(&fam.beta(), p.l(), EigenvalueSign::Plus, p.rep(), 96)
                .unwrap();
        assert!(bar.fidelity(&analytic.amps) > 1.0 - 1e-8);

        // mode-a pipeline with |χ| < 1 → K₂-K₃ family through the + signs
        let p = params(0.4, 1.0, 0.9, 0.2, MeasuredMode::ModeA, 1);
        let chi = chi_from_params(&p).unwrap();
        assert!(chi.norm() < 1.0);
        let out = simulate_protocol(&p, 64).unwrap();
        let pt = PostTransform::from_scheme(&p).unwrap();
        assert_eq!(pt.family, TargetFamily::K2K3);
        let bar = apply_post_transform(&out.state, &pt).unwrap();
        let fam = pt.target_family().unwrap();
        assert!(pencil_residual(&bar, fam, p.l()) < 1e-8);
        let analytic =
            states::build_state_general(&fam.beta(), p.l(), EigenvalueSign::Plus, p.rep(), 96)
                .unwrap();
        assert!(bar.fidelity(&analytic.amps) > 1.0 - 1e-8);
    }
}
